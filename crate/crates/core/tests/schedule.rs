use bell_halfline::momentum::eta_eps_schedule_check;
use bell_halfline::QuadratureSpec;
use std::f64::consts::SQRT_2;

#[test]
fn loose_target_is_met_at_a_coarse_cutoff() {
    let spec = QuadratureSpec::default();
    // The loosest admissible target still asks for a violation of 2.
    let delta = 0.8;
    let r = eta_eps_schedule_check(0.1, delta, 0.0, &spec).unwrap();
    let w = r.witness.expect("a witness for a loose target");
    let momentum = w.chsh_momentum.unwrap();
    assert!(w.eps > 1e-2, "eps = {}", w.eps);
    assert!(w.eta.unwrap() < w.eps / 2.0);
    assert!(momentum > 2.0 * SQRT_2 - delta && momentum <= 2.0 * SQRT_2);
    assert!((momentum - w.chsh_spatial).abs() < 5e-3);
    // Nothing beyond the first passing candidate and its two successors.
    let spatial = r.attempts.iter().filter(|a| a.eta.is_none()).count();
    let first = r.attempts.iter().position(|a| a.chsh_spatial > r.target).unwrap();
    assert!(spatial <= first + 3);
}

#[test]
fn rejects_out_of_range_targets() {
    let spec = QuadratureSpec::default();
    assert!(eta_eps_schedule_check(0.1, 0.0, 0.0, &spec).is_err());
    assert!(eta_eps_schedule_check(0.1, 0.9, 0.0, &spec).is_err());
    assert!(eta_eps_schedule_check(0.1, 1.0, 0.0, &spec).is_err());
    assert!(eta_eps_schedule_check(2.0, 0.5, 0.0, &spec).is_err());
}
