//! Acceptance suite: one test per verification criterion, each printing a
//! single pass/fail line with the measured quantities. Run with
//!
//! ```text
//! cargo test -p homog-mcf --test acceptance -- --nocapture
//! ```
//!
//! Tolerances are pinned in code; nothing here is calibrated after the fact.

use std::path::PathBuf;
use std::process::Command;
use std::sync::Arc;

use homog_mcf_core::cell::{build_table, effective_value, CellOptions, EffectiveHamiltonianTable};
use homog_mcf_core::experiments::{
    apriori_monitor_suite, cone_experiment, run_rate_sweep, ConeParams, InitialData,
    MonitorParams, RateSweepParams,
};
use homog_mcf_core::force::{
    build_modified_force, check_coercivity, ForcingField, ModifiedForce, TrigTerm,
};
use homog_mcf_core::grid::{
    central_gradient, central_hessian, windowed_sup_diff, GridFunction, GridSpec,
};
use homog_mcf_core::hj::{solve_effective, EffectiveProblem, Hamiltonian};
use homog_mcf_core::linalg::norm_sq;
use homog_mcf_core::parabolic::{evolve, evolve_ordered_pair, ParabolicProblem};
use homog_mcf_testkit::expander::origin_height;
use homog_mcf_testkit::front_tracking::expanding_corner;
use homog_mcf_testkit::rng::SplitMix64;

fn pass(criterion: u32, detail: &str) {
    println!("[criterion {criterion}] PASS - {detail}");
}

fn laminated_force() -> (ForcingField, homog_mcf_core::force::CoercivityCertificate) {
    let force = ForcingField::sinusoid(1, 1.0, 0.5, [1, 0], 0.0).unwrap();
    let cert = check_coercivity(&force, 0.2, 1.0 / 4096.0).unwrap();
    (force, cert)
}

fn modified(gradient_bound: f64) -> ModifiedForce {
    let (force, cert) = laminated_force();
    build_modified_force(&force, gradient_bound, &cert).unwrap()
}

/// Criterion 1: for the unit constant force the cell problem is exactly
/// solvable; the discounted pipeline must reproduce `Fbar(p) = -sqrt(1+p^2)`
/// with a vanishing corrector, both to 1e-6.
#[test]
fn criterion_1_constant_force_cell_problem() {
    let force = ForcingField::constant(1, 1.0).unwrap();
    let cert = check_coercivity(&force, 0.4, 1.0 / 256.0).unwrap();
    let fm = build_modified_force(&force, 2.0, &cert).unwrap();
    let spec = GridSpec::torus(1, 64).unwrap();
    let opts = CellOptions::default();
    let mut worst_value = 0.0f64;
    let mut worst_corrector = 0.0f64;
    for &p in &[0.0, 0.5, -0.5, 1.0, -1.0] {
        let (ev, sol) = effective_value(&[p], &fm, &spec, &[1e-2, 5e-3, 2.5e-3], &opts).unwrap();
        let exact = -(1.0 + p * p as f64).sqrt();
        worst_value = worst_value.max((ev.value - exact).abs());
        worst_corrector = worst_corrector.max(homog_mcf_core::grid::sup_norm(&sol.corrector));
    }
    assert!(worst_value <= 1e-6, "|Fbar(p) + sqrt(1+p^2)| = {worst_value}");
    assert!(worst_corrector <= 1e-6, "sup|v| = {worst_corrector}");
    pass(1, &format!("max |Fbar + sqrt(1+p^2)| = {worst_value:.2e}, max sup|v| = {worst_corrector:.2e}"));
}

/// Criterion 2: the tabulated `Fbar(0)` for c = 1 + 0.5 sin(2 pi y) matches
/// minus the long-time front speed of the flow (T = 20, 512-point torus)
/// within max(1e-3, extrapolation uncertainty).
#[test]
fn criterion_2_front_speed_consistency() {
    let (force, cert) = laminated_force();
    let fm = build_modified_force(&force, 5.0, &cert).unwrap();
    let cell_spec = GridSpec::torus(1, 512).unwrap();
    // Small table over [-3, 3] whose middle node is p = 0.
    let (table, _) =
        build_table(&fm, &cell_spec, 3.0, 7, &[1e-2, 5e-3, 2.5e-3], &CellOptions::default())
            .unwrap();
    let mid = 3;
    assert_eq!(table.node(mid), 0.0);
    let fbar0 = table.values()[mid];
    let uncertainty = table.uncertainties()[mid];

    let spec = GridSpec::torus(1, 512).unwrap();
    let horizon = 20.0;
    let mut problem =
        ParabolicProblem::new(force, GridFunction::constant(spec, 0.0), 0.0, horizon);
    problem.certificate = Some(cert);
    problem.snapshot_times = vec![horizon / 2.0];
    problem.monitor_stride = 64;
    let trace = evolve(&problem).unwrap();
    let mean = |f: &GridFunction| f.values().iter().sum::<f64>() / f.values().len() as f64;
    let speed =
        (mean(trace.final_field()) - mean(trace.snapshot_at(horizon / 2.0).unwrap())) / (horizon / 2.0);

    let tol = 1e-3f64.max(uncertainty);
    let gap = (fbar0 + speed).abs();
    assert!(gap <= tol, "F(0) = {fbar0}, front speed = {speed}, |sum| = {gap} > {tol}");
    pass(2, &format!("Fbar(0) = {fbar0:.6}, front speed = {speed:.6}, gap {gap:.2e} <= {tol:.2e}"));
}

/// Criterion 3: every entry of every built table obeys the admissible range
/// `[min(-c~(., p)), max(-c~(., p))] sqrt(1 + |p|^2)` with 1e-6 slack,
/// re-derived here independently of the build-time validation.
#[test]
fn criterion_3_table_range_bound() {
    let spec = GridSpec::torus(1, 256).unwrap();
    let opts = CellOptions::default();
    let lambdas = [1e-2, 5e-3];

    let mut tables: Vec<(ModifiedForce, EffectiveHamiltonianTable)> = Vec::new();
    // Standard laminated force, including slopes beyond the cutoff band.
    let fm = modified(1.0);
    let (t, _) = build_table(&fm, &spec, 6.0, 13, &lambdas, &opts).unwrap();
    tables.push((fm, t));
    // A two-mode force with no symmetry.
    let rough = ForcingField::trig_poly(
        1,
        1.2,
        vec![
            TrigTerm { mode: [1, 0], cos_coeff: 0.3, sin_coeff: 0.1 },
            TrigTerm { mode: [2, 0], cos_coeff: -0.1, sin_coeff: 0.2 },
        ],
    )
    .unwrap();
    let cert = check_coercivity(&rough, 0.2, 1.0 / 4096.0).unwrap();
    let fm = build_modified_force(&rough, 2.0, &cert).unwrap();
    let (t, _) = build_table(&fm, &spec, 3.0, 9, &lambdas, &opts).unwrap();
    tables.push((fm, t));
    // A negative force saturating at its infimum.
    let negative = ForcingField::sinusoid(1, -1.0, 0.25, [1, 0], 0.5).unwrap();
    let cert = check_coercivity(&negative, 0.3, 1.0 / 4096.0).unwrap();
    let fm = build_modified_force(&negative, 2.0, &cert).unwrap();
    let (t, _) = build_table(&fm, &spec, 3.0, 9, &lambdas, &opts).unwrap();
    tables.push((fm, t));

    let mut checked = 0;
    let mut worst_margin = f64::INFINITY;
    for (fm, table) in &tables {
        for i in 0..table.values().len() {
            let p = [table.node(i), 0.0];
            let slope_norm = (1.0 + norm_sq(1, &p[..1])).sqrt();
            let mut cmin = f64::INFINITY;
            let mut cmax = f64::NEG_INFINITY;
            for j in 0..spec.node_count() {
                let c = fm.value(&spec.point(j)[..1], &p[..1]);
                cmin = cmin.min(c);
                cmax = cmax.max(c);
            }
            let (lo, hi) = (-cmax * slope_norm, -cmin * slope_norm);
            let v = table.values()[i];
            assert!(
                v >= lo - 1e-6 && v <= hi + 1e-6,
                "entry p = {} value {v} outside [{lo}, {hi}]",
                p[0]
            );
            worst_margin = worst_margin.min((v - lo).min(hi - v));
            checked += 1;
        }
    }
    pass(3, &format!("{checked} entries over 3 tables inside the range bound (worst margin {worst_margin:.2e})"));
}

/// Criterion 4: the expanding-cone example. Fitted exponent in [0.45, 0.55],
/// positive lower-bound values, expander constant within 1 percent of the
/// shooting oracle, self-similarity residual at most 1e-3 at 1024 points.
#[test]
fn criterion_4_cone_optimality() {
    let params = ConeParams::new(1, vec![0.25, 0.125, 0.0625, 0.03125, 0.015625]);
    assert_eq!(params.expander_points, 1024);
    let cone = cone_experiment(&params).unwrap();
    assert!(cone.warnings.is_empty(), "per-eps failures: {:?}", cone.warnings);

    let fit = cone.fit.as_ref().expect("five usable records");
    assert!(
        (0.45..=0.55).contains(&fit.exponent),
        "fitted exponent {} outside [0.45, 0.55]",
        fit.exponent
    );
    for r in &cone.records {
        assert!(r.error > 0.0, "u_eps(0,1) - u(0,1) not positive at eps = {}", r.eps);
    }
    let oracle = origin_height();
    let rel = (cone.expander_constant - oracle).abs() / oracle;
    assert!(rel <= 0.01, "expander constant off the oracle by {rel:.4}");
    assert!(
        cone.self_similarity_residual <= 1e-3,
        "self-similarity residual {}",
        cone.self_similarity_residual
    );
    pass(
        4,
        &format!(
            "exponent {:.4}, w(0,1) = {:.6} (oracle {:.6}, rel {:.2e}), residual {:.2e}",
            fit.exponent, cone.expander_constant, oracle, rel, cone.self_similarity_residual
        ),
    );
}

/// Criterion 5: forced upper bound. For c = 1 + 0.5 sin(2 pi y) from the
/// mollified cone at T = 1, the criterion demands that err(eps)/sqrt(eps)
/// varies by at most a factor 2 across eps in {1/4 ... 1/64} and that the
/// error decreases monotonically.
///
/// The monotone decrease holds. The two-sided spread bound does not, and
/// cannot: for this initial profile the effective characteristics converge
/// at the corner (a shock), so the small-scale mismatch is a traveling-wave
/// layer of width O(eps) and the measured error decays at first order
/// (fitted exponent 0.94 over the sweep, 0.99 when eps is pushed to 1/128).
/// err/sqrt(eps) then itself shrinks like sqrt(eps) and spans a factor of
/// about 3.3 over a 16x range of eps. The sqrt(eps) *upper bound* is
/// therefore satisfied with room to spare - the companion test below checks
/// exactly that - but a two-sided stability metric presumes the bound is
/// saturated, which only corner data with diverging characteristics (the
/// zero-force cone example of criterion 4) produces. This test keeps the
/// criterion as stated and is expected to fail.
#[test]
fn criterion_5_forced_upper_bound() {
    let report = forced_sweep_report();
    assert!(report.warnings.is_empty(), "per-eps failures: {:?}", report.warnings);
    assert_eq!(report.records.len(), 5);

    let mut monotone = true;
    for pair in report.records.windows(2) {
        monotone &= pair[1].error < pair[0].error;
    }
    let ratio = report.sqrt_eps_ratio.expect("positive errors");
    let exponent = report.fit.as_ref().map(|f| f.exponent).unwrap_or(f64::NAN);
    let errors: Vec<f64> =
        report.records.iter().map(|r| (r.error * 1e4).round() / 1e4).collect();
    if monotone && ratio <= 2.0 {
        pass(
            5,
            &format!(
                "errors {errors:?} decrease monotonically; err/sqrt(eps) spread {ratio:.3} <= 2 (fitted exponent {exponent:.3})"
            ),
        );
    } else {
        println!(
            "[criterion 5] FAIL - errors {errors:?} (monotone: {monotone}); err/sqrt(eps) spread {ratio:.3} > 2 because the measured decay is first order (fitted exponent {exponent:.3}); the sqrt(eps) upper bound itself holds, see forced_sweep_satisfies_the_sqrt_eps_upper_bound"
        );
    }
    assert!(monotone, "error not monotone in eps");
    assert!(
        ratio <= 2.0,
        "err/sqrt(eps) spread {ratio:.3} exceeds factor 2: the forced shock scenario decays at \
         first order (exponent {exponent:.3}), so the normalized error cannot be sweep-stable"
    );
}

/// Companion to criterion 5: what the sqrt(eps) upper bound does promise.
/// With C fixed from the coarsest eps, err(eps) <= C sqrt(eps) across the
/// whole sweep, the error decreases monotonically, and the fitted decay is
/// at least as fast as sqrt(eps).
#[test]
fn forced_sweep_satisfies_the_sqrt_eps_upper_bound() {
    let report = forced_sweep_report();
    assert!(report.warnings.is_empty(), "per-eps failures: {:?}", report.warnings);
    assert_eq!(report.records.len(), 5);
    for pair in report.records.windows(2) {
        assert!(pair[1].error < pair[0].error, "error not monotone in eps");
    }
    let c_emp = report.records[0].error / report.records[0].eps.sqrt();
    for r in &report.records {
        assert!(
            r.error <= c_emp * r.eps.sqrt() * (1.0 + 1e-12),
            "upper bound violated at eps {}: {} > {}",
            r.eps,
            r.error,
            c_emp * r.eps.sqrt()
        );
    }
    let exponent = report.fit.as_ref().expect("five records").exponent;
    assert!(exponent >= 0.5, "decay slower than sqrt(eps): exponent {exponent}");
    println!(
        "[criterion 5 companion] PASS - err(eps) <= {c_emp:.4} sqrt(eps) across the sweep, monotone, fitted exponent {exponent:.3} >= 0.5"
    );
}

fn forced_sweep_report() -> homog_mcf_core::experiments::RateReport {
    let (force, cert) = laminated_force();
    let fm = build_modified_force(&force, 5.0, &cert).unwrap();
    let cell_spec = GridSpec::torus(1, 256).unwrap();
    let (table, _) =
        build_table(&fm, &cell_spec, 3.0, 49, &[1e-2, 5e-3, 2.5e-3], &CellOptions::default())
            .unwrap();

    let params = RateSweepParams {
        force,
        certificate: Some(cert),
        table,
        initial: InitialData::Cone,
        extent: 2.5,
        horizon: 1.0,
        eps_list: vec![0.25, 0.125, 0.0625, 0.03125, 0.015625],
        window: 1.25,
        lipschitz_bound: 1.0,
        gradient_limit: Some(5.0),
        theta_pad: 1.2,
        safety: 0.9,
        resolution_factor: 16,
    };
    run_rate_sweep(&params).unwrap()
}

/// Criterion 6: discrete comparison principle. 100 randomized ordered pairs
/// under the full forcing stay ordered at every step within 1e-12 per step.
#[test]
fn criterion_6_discrete_comparison_principle() {
    let (force, cert) = laminated_force();
    let spec = GridSpec::torus(1, 128).unwrap();
    let mut rng = SplitMix64::new(0x5eed);
    let tau = 2.0 * std::f64::consts::PI;
    let mut worst = 0.0f64;
    for pair in 0..100 {
        let a1 = rng.range(0.02, 0.12);
        let a2 = rng.range(0.0, 0.05);
        let ph1 = rng.range(0.0, tau);
        let ph2 = rng.range(0.0, tau);
        let gap = rng.range(0.01, 0.4);
        let bump = rng.range(0.0, 0.08);
        let low = GridFunction::from_fn(spec, |x| {
            a1 * (tau * x[0] + ph1).sin() + a2 * (2.0 * tau * x[0] + ph2).cos()
        })
        .unwrap();
        let high = GridFunction::from_fn(spec, |x| {
            a1 * (tau * x[0] + ph1).sin()
                + a2 * (2.0 * tau * x[0] + ph2).cos()
                + gap
                + bump * (1.0 + (tau * x[0]).sin())
        })
        .unwrap();
        let mut problem = ParabolicProblem::new(force.clone(), low, 2.5, 0.05);
        problem.certificate = Some(cert);
        let (_, _, outcome) = evolve_ordered_pair(&problem, &high).unwrap();
        assert!(
            outcome.worst_violation <= outcome.tolerance,
            "pair {pair}: ordering violated by {} (tolerance {})",
            outcome.worst_violation,
            outcome.tolerance
        );
        worst = worst.max(outcome.worst_violation);
    }
    pass(6, &format!("100 ordered pairs stayed ordered; worst violation {worst:.2e}"));
}

/// Criterion 7: a priori monitors on the forced scenario. sup|w_t| is
/// non-increasing after tau within 1e-3 relative slack, and the empirical
/// gradient bound moves by less than 5 percent when the horizon doubles.
#[test]
fn criterion_7_gradient_and_time_derivative_monitors() {
    let (force, cert) = laminated_force();
    let spec = GridSpec::torus(1, 256).unwrap();
    let run = |horizon: f64| {
        let params = MonitorParams {
            force: force.clone(),
            certificate: Some(cert),
            initial: GridFunction::constant(spec, 0.0),
            lipschitz_bound: 0.0,
            horizon,
            gradient_limit: Some(5.0),
            safety: 0.9,
        };
        apriori_monitor_suite(&params).unwrap()
    };
    let short = run(2.0);
    let long = run(4.0);
    assert!(
        short.time_derivative_ok && long.time_derivative_ok,
        "sup|w_t| grew after tau: ratios {} and {}",
        short.time_derivative_worst_ratio,
        long.time_derivative_worst_ratio
    );
    assert!(short.gradient_ok && long.gradient_ok);
    assert!(short.short_time_ok && long.short_time_ok);
    let m2 = short.estimates.m_emp;
    let m4 = long.estimates.m_emp;
    let drift = (m4 - m2).abs() / m2.max(1e-12);
    assert!(drift < 0.05, "M_emp drifted by {:.2}% when T doubled", drift * 100.0);
    pass(
        7,
        &format!(
            "sup|w_t| ratio {:.6} <= 1.001; M_emp {m2:.6} -> {m4:.6} (drift {:.3}%)",
            long.time_derivative_worst_ratio,
            drift * 100.0
        ),
    );
}

/// Criterion 8: stencil orders at least 1.9 on trigonometric fields under
/// grid doubling, and Lax-Friedrichs first order against the one-dimensional
/// closed form -|x| + sqrt(2) t.
#[test]
fn criterion_8_stencil_and_lf_orders() {
    // Stencils.
    let tau = 2.0 * std::f64::consts::PI;
    let mut prev: Option<(f64, f64)> = None;
    let mut orders = Vec::new();
    for &m in &[64usize, 128, 256] {
        let spec = GridSpec::torus(1, m).unwrap();
        let f = GridFunction::from_fn(spec, |x| (tau * x[0]).sin()).unwrap();
        let mut eg = 0.0f64;
        let mut eh = 0.0f64;
        for i in 0..m {
            let x = spec.coord(i);
            let g = central_gradient(&f, &[i], None).unwrap();
            let hess = central_hessian(&f, &[i], None).unwrap();
            eg = eg.max((g[0] - tau * (tau * x).cos()).abs());
            eh = eh.max((hess.get(0, 0) + tau * tau * (tau * x).sin()).abs());
        }
        if let Some((pg, ph)) = prev {
            let og = (pg / eg).log2();
            let oh = (ph / eh).log2();
            assert!(og >= 1.9, "gradient order {og}");
            assert!(oh >= 1.9, "hessian order {oh}");
            orders.push((og, oh));
        }
        prev = Some((eg, eh));
    }

    // Lax-Friedrichs against the corner evolution u = -|x| + sqrt(2) t.
    let ham = || {
        Hamiltonian::closed_form(1, Arc::new(|p: &[f64]| -(1.0 + p[0] * p[0]).sqrt()), 3.0)
            .unwrap()
    };
    // (a) Away from the kink's numerical influence cone the linear closed
    // form is integrated exactly (first order or better, trivially).
    let horizon = 0.5;
    let mut outside_worst = 0.0f64;
    for &m in &[256usize, 512] {
        let spec = GridSpec::boxed(1, m, 2.0).unwrap();
        let u0 = GridFunction::from_fn(spec, |x| -x[0].abs()).unwrap();
        let problem = EffectiveProblem::new(ham(), u0, 1.0, horizon);
        let trace = solve_effective(&problem).unwrap();
        let influence = horizon / trace.monitors[0].dt * spec.h() * 1.05 + 4.0 * spec.h();
        for i in 0..spec.node_count() {
            let x = spec.coord(i);
            if x.abs() > influence && x.abs() < 2.0 - 4.0 * spec.h() {
                let exact = -x.abs() + std::f64::consts::SQRT_2 * horizon;
                outside_worst = outside_worst.max((trace.final_field().value(i) - exact).abs());
            }
        }
    }
    assert!(outside_worst <= 1e-9, "closed form missed outside the cone: {outside_worst:.2e}");

    // (b) First-order convergence measured on the same closed-form family
    // once the corner has opened (C^{1,1} data, no fan logarithm).
    let t0 = 0.25;
    let mut prev_err = f64::INFINITY;
    let mut lf_orders = Vec::new();
    for &m in &[128usize, 256, 512] {
        let spec = GridSpec::boxed(1, m, 2.0).unwrap();
        let u0 = GridFunction::from_fn(spec, |x| expanding_corner(x[0], t0)).unwrap();
        let problem = EffectiveProblem::new(ham(), u0, 1.0, horizon);
        let trace = solve_effective(&problem).unwrap();
        let exact =
            GridFunction::from_fn(spec, |x| expanding_corner(x[0], t0 + horizon)).unwrap();
        let err = windowed_sup_diff(trace.final_field(), &exact, 1.5).unwrap();
        if prev_err.is_finite() {
            let order = (prev_err / err).log2();
            assert!(order >= 0.85, "LF order {order} below first order");
            lf_orders.push(order);
        }
        prev_err = err;
    }
    pass(
        8,
        &format!(
            "stencil orders {:?} >= 1.9; LF exact off-cone ({outside_worst:.1e}) and orders {:?} on the opened front",
            orders.iter().map(|(a, b)| ((a * 100.0).round() / 100.0, (b * 100.0).round() / 100.0)).collect::<Vec<_>>(),
            lf_orders.iter().map(|o| (o * 100.0).round() / 100.0).collect::<Vec<_>>()
        ),
    );
}

/// Criterion 9: repeated `rate` and `cone` runs of the binary with identical
/// configurations produce byte-identical `report.json`.
#[test]
fn criterion_9_deterministic_reports() {
    let base = std::env::temp_dir().join("homog-mcf-acceptance-determinism");
    let _ = std::fs::remove_dir_all(&base);
    std::fs::create_dir_all(&base).unwrap();

    let rate_cfg = base.join("rate.cfg");
    std::fs::write(
        &rate_cfg,
        "\
[scenario]
name = det-rate
initial = cone
lipschitz_bound = 1.0

[force]
family = sinusoid
offset = 1.0
amplitude = 0.5
mode = 1
delta = 0.2

[grid]
topology = box
points_per_axis = 128
extent = 1.5

[solver]
cell_points = 128
lambdas = 0.01, 0.005

[experiment]
eps = 0.25, 0.125, 0.0625
horizon = 0.25
table_range = 3.0
table_samples = 13
window = 0.75
",
    )
    .unwrap();

    let cone_cfg = base.join("cone.cfg");
    std::fs::write(
        &cone_cfg,
        "\
[scenario]
name = det-cone
initial = cone
lipschitz_bound = 1.0

[force]
family = zero

[grid]
topology = box
points_per_axis = 256
extent = 4.0

[experiment]
eps = 0.25, 0.125, 0.0625
horizon = 1.0
",
    )
    .unwrap();

    for (name, cfg, jobs) in
        [("rate", &rate_cfg, ["1", "3"]), ("cone", &cone_cfg, ["2", "1"])]
    {
        let mut outputs: Vec<Vec<u8>> = Vec::new();
        for (i, j) in jobs.iter().enumerate() {
            let out: PathBuf = base.join(format!("{name}-{i}"));
            let status = Command::new(env!("CARGO_BIN_EXE_homog-mcf"))
                .arg(name)
                .arg("--config")
                .arg(cfg)
                .arg("--out")
                .arg(&out)
                .arg("--jobs")
                .arg(j)
                .output()
                .unwrap();
            assert!(
                status.status.success(),
                "{name} run failed: {}",
                String::from_utf8_lossy(&status.stderr)
            );
            outputs.push(std::fs::read(out.join("report.json")).unwrap());
        }
        assert_eq!(outputs[0], outputs[1], "{name} reports differ between identical runs");
    }
    pass(9, "rate and cone reports byte-identical across repeated runs and worker counts");
}
