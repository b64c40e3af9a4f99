use pgs_core::manufactured::Manufactured;

// The full 64/128/256 study runs in the CLI acceptance suite; this is the
// cheap version of the same check.
#[test]
fn second_order_on_coarse_disks() {
    let (errs, orders) = Manufactured::default().study(&[16, 32, 64]).unwrap();
    println!("errors {errs:?} orders {orders:?}");
    assert!(orders.iter().all(|&q| q >= 1.8), "orders {orders:?}");
}

#[test]
fn exact_field_is_admissible() {
    let m = Manufactured::default();
    for k in 0..200 {
        let t = k as f64 * 0.1;
        let r = (k % 20) as f64 / 20.0 * m.p1.sqrt();
        let p = m.exact(r * t.cos(), r * t.sin())[0];
        assert!(p > r * r && p <= m.p1 + 1e-12);
    }
}
