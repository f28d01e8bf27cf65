use pvvlc_core::exec::*;
use pvvlc_core::*;

#[test]
fn modes_agree_and_preserve_order() {
    let items: Vec<u64> = (0..500).collect();
    let f = |x: &u64| Ok(pvvlc_core::seed::mix64(*x, 3));
    assert_eq!(
        try_map(ExecMode::Serial, &items, f).unwrap(),
        try_map(ExecMode::Parallel, &items, f).unwrap()
    );
}

#[test]
fn errors_propagate() {
    let items = [1, 2, 3];
    let r: Result<Vec<i32>> = try_map(ExecMode::Parallel, &items, |&x| {
        if x == 2 {
            Err(Error::InvalidInput("two".into()))
        } else {
            Ok(x)
        }
    });
    assert!(r.is_err());
}
