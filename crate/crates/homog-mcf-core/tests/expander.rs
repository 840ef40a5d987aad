//! The expanding-cone solution against the self-similar shooting oracle, and
//! the scale consistency between the two small-scale solution routes.

use homog_mcf_core::experiments::{cone_expander_run, cone_record, ConeParams, InitialData};
use homog_mcf_core::force::ForcingField;
use homog_mcf_core::grid::{sup_norm_diff, GridSpec};
use homog_mcf_core::parabolic::{solve_epsilon_by_rescaling, solve_epsilon_problem};
use homog_mcf_testkit::expander::origin_height;

#[test]
fn expander_constant_agrees_with_shooting_oracle() {
    let mut params = ConeParams::new(1, vec![0.25]);
    params.expander_points = 512;
    params.expander_extent = 4.0;
    let (constant, residual, trace) = cone_expander_run(&params).unwrap();
    let oracle = origin_height();
    assert!(
        (constant - oracle).abs() < 0.01 * oracle,
        "PDE expander constant {constant} vs oracle {oracle}"
    );
    assert!(residual < 2e-3, "self-similarity residual {residual}");
    // The profile itself follows sqrt(t) g(x / sqrt(t)): spot-check scaling
    // between two snapshot times at a point inside the parabolic core.
    let spec = *trace.final_field().spec();
    let x_idx = spec.origin() + spec.points_per_axis() / 32;
    let early = trace.snapshot_at(0.25).unwrap();
    let late = trace.final_field();
    let x = spec.point(x_idx)[0];
    // w(x, 1) = g(x); w(x, 1/4) = 1/2 g(2x): compare through the oracle-free
    // internal identity w(2x, 1) = 2 w(x, 1/4) + O(h^2).
    let idx_2x = spec.origin() + 2 * (x_idx - spec.origin());
    let lhs = late.value(idx_2x);
    let rhs = 2.0 * early.value(x_idx);
    assert!(
        (lhs - rhs).abs() < 5e-3,
        "self-similar profile scaling broke at x = {x}: {lhs} vs {rhs}"
    );
}

#[test]
fn small_scale_value_tracks_sqrt_eps() {
    let params = ConeParams::new(1, vec![0.25, 0.0625]);
    let oracle = origin_height();
    for &eps in &params.eps_list {
        let record = cone_record(&params, eps).unwrap();
        let predicted = eps.sqrt() * oracle;
        assert!(
            (record.error - predicted).abs() < 0.02 * predicted,
            "u_eps(0,1) = {} vs sqrt(eps) g(0) = {predicted}",
            record.error
        );
    }
}

#[test]
fn rescaling_route_matches_direct_route_on_the_cone() {
    let eps = 0.125;
    let spec = GridSpec::boxed(1, 512, 2.0).unwrap(); // h = 1/128 = eps/16
    let u0 = InitialData::Cone.sample(&spec).unwrap();
    let force = ForcingField::zero(1);
    let direct =
        solve_epsilon_problem(&force, None, u0.clone(), eps, 1.0, 1.0, Vec::new()).unwrap();
    let rescaled =
        solve_epsilon_by_rescaling(&force, None, u0, eps, 1.0, 1.0, Vec::new()).unwrap();
    let diff = sup_norm_diff(direct.final_field(), rescaled.final_field()).unwrap();
    assert!(diff < 1e-9, "routes disagree by {diff}");
}
