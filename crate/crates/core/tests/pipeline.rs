use num_complex::Complex64;
use spiderweb_core::fastesc::EscapeParams;
use spiderweb_core::field::{self, GridSpec};
use spiderweb_core::par::Exec;
use spiderweb_core::{FunctionSpec, MaxModProfile};

#[test]
fn fields_do_not_depend_on_the_schedule() {
    let p = MaxModProfile::new(FunctionSpec::half_exp()).unwrap();
    let params = EscapeParams::default();
    let rf = p.compute_rf(params.horizon, params.threshold).unwrap();
    let g = GridSpec::new(Complex64::new(0.3, -0.2), 5.0, 4.0, 40, 32).unwrap();
    let a = field::ra_field(&p, &g, &params, rf, Exec::Sequential).unwrap();
    let b = field::ra_field(&p, &g, &params, rf, Exec::Parallel).unwrap();
    assert_eq!(
        a.values
            .iter()
            .map(|v| v.map(f64::to_bits))
            .collect::<Vec<_>>(),
        b.values
            .iter()
            .map(|v| v.map(f64::to_bits))
            .collect::<Vec<_>>()
    );
    let ca = field::classify_grid(&p, &g, 1.2, &params, Exec::Sequential).unwrap();
    let cb = field::classify_grid(&p, &g, 1.2, &params, Exec::Parallel).unwrap();
    assert_eq!(ca.members.values, cb.members.values);
}

#[test]
fn baker_loops_grow_with_r() {
    let p = MaxModProfile::new(FunctionSpec::baker_default()).unwrap();
    let params = EscapeParams::default();
    let g = GridSpec::square(Complex64::new(0.0, 0.0), 40.0, 96).unwrap();
    let mut loops = Vec::new();
    for r in [2.0, 4.0, 8.0] {
        let c = field::classify_grid(&p, &g, r, &params, Exec::Parallel).unwrap();
        let hole = field::fundamental_hole(&c.members).unwrap();
        loops.push(field::extract_loop(&hole, r).unwrap());
    }
    for w in loops.windows(2) {
        assert!(w[1].surrounds(&w[0]));
        assert!(w[1].length() > w[0].length());
    }
}
