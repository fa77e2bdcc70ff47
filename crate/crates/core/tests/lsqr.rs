use mplsqr::lsqr::{givens_step, solve, solve_system, GivensState, RunLength, SolverConfig};
use mplsqr::precision::exact;
use mplsqr::problems::{ProblemInstance, ProblemKind};
use mplsqr::{DenseMatrix, LinearOperator, Precision, StopRule};
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;

const U64: f64 = f64::EPSILON / 2.0;

fn full_run(spec_bidiag: Precision, spec_update: Precision, k: usize) -> SolverConfig {
    let mut cfg = SolverConfig::new(spec_bidiag, spec_update);
    cfg.rules = vec![StopRule::Optimal];
    cfg.run_length = RunLength::Full;
    cfg.max_iter = k;
    cfg.keep_iterates = true;
    cfg
}

fn plain_run(k: usize) -> SolverConfig {
    let mut cfg = full_run(Precision::Native64, Precision::Native64, k);
    cfg.rules.clear();
    cfg
}

fn min_re(inst: &ProblemInstance, cfg: &SolverConfig) -> (usize, f64) {
    let h = solve(inst, cfg).unwrap();
    let k = h.decision(StopRule::Optimal).unwrap().k1;
    (k, h.records[k - 1].re.unwrap())
}

#[test]
fn identity_converges_in_one_step() {
    let op = DenseMatrix::identity(6);
    let b = [1.0, -2.0, 0.5, 3.0, 0.25, -1.5];
    let h = solve_system(&op, &b, None, None, &plain_run(5)).unwrap();
    assert_eq!(h.iterations(), 1);
    assert!(h.termination.is_some());
    assert!(exact::dist(&h.final_x, &b) <= 4.0 * U64 * exact::norm(&b));
}

#[test]
fn diagonal_case_reaches_least_squares_solution() {
    let d = [1.0, 0.5, 0.25, 0.125];
    let op = DenseMatrix::from_fn(4, 4, |i, j| if i == j { d[i] } else { 0.0 });
    let b = [1.0; 4];
    let h = solve_system(&op, &b, None, None, &plain_run(4)).unwrap();
    let oracle = op
        .to_dense()
        .svd(true, true)
        .solve(&DVector::from_column_slice(&b), 1e-300)
        .unwrap();
    let x4 = &h.iterates[3];
    let rel = exact::dist(x4, oracle.as_slice()) / exact::norm(oracle.as_slice());
    assert!(rel <= 1e-12, "{rel:e}");
}

#[test]
fn residual_estimate_tracks_true_residual() {
    let inst = ProblemInstance::build(ProblemKind::Shaw, 200, None, 1e-3, 1).unwrap();
    let h = solve(
        &inst,
        &full_run(Precision::Native64, Precision::Native64, 30),
    )
    .unwrap();
    let norm_b = exact::norm(inst.b());
    // The step that hits a roundoff-level beta divides by rho ~ u·‖A‖ and is
    // excluded.
    let regular = match h.termination {
        Some(_) => h.iterations() - 1,
        None => h.iterations(),
    };
    assert!(regular >= 15);
    for (rec, x) in h.records.iter().zip(&h.iterates).take(regular) {
        let ax = inst.operator().apply(x, Precision::Native64);
        let r: Vec<f64> = ax.iter().zip(inst.b()).map(|(a, b)| a - b).collect();
        assert!(
            (rec.phi_bar - exact::norm(&r)).abs() <= 1e-8 * norm_b,
            "k {}",
            rec.k
        );
    }
}

#[test]
fn residual_estimates_never_increase() {
    for (kind, n) in [
        (ProblemKind::Shaw, 200),
        (ProblemKind::Heat, 200),
        (ProblemKind::Deriv2, 100),
    ] {
        let inst = ProblemInstance::build(kind, n, None, 1e-3, 2).unwrap();
        for spec in [
            Precision::Native64,
            Precision::Native32,
            Precision::Emulated(12),
        ] {
            let h = solve(&inst, &full_run(spec, Precision::Native64, 60)).unwrap();
            let phi = h.phi_bars();
            assert!(phi.windows(2).all(|w| w[1] <= w[0]), "{kind} {spec}");
        }
    }
}

#[test]
fn runs_are_bit_identical() {
    let inst = ProblemInstance::build(ProblemKind::Gravity, 300, None, 1e-3, 3).unwrap();
    for (sb, su) in [
        (Precision::Native64, Precision::Native64),
        (Precision::Native32, Precision::Native64),
        (Precision::Emulated(14), Precision::Native32),
    ] {
        let cfg = full_run(sb, su, 40);
        let (a, b) = (solve(&inst, &cfg).unwrap(), solve(&inst, &cfg).unwrap());
        assert_eq!(a.iterates, b.iterates);
        assert_eq!(a.phi_bars(), b.phi_bars());
    }
}

#[test]
fn shaw_double_and_single_agree() {
    let inst = ProblemInstance::build(ProblemKind::Shaw, 1000, None, 1e-3, 1).unwrap();
    let (kd, red) = min_re(
        &inst,
        &full_run(Precision::Native64, Precision::Native64, 30),
    );
    let (ks, res) = min_re(
        &inst,
        &full_run(Precision::Native32, Precision::Native32, 30),
    );
    assert!(kd.abs_diff(8) <= 2, "k0 {kd}");
    assert!((0.03..=0.05).contains(&red), "RE {red}");
    assert_eq!(kd, ks);
    assert!((red - res).abs() <= 5e-4 * red, "{red} vs {res}");
}

#[test]
fn shaw_discrepancy_stop() {
    let inst = ProblemInstance::build(ProblemKind::Shaw, 1000, None, 1e-3, 1).unwrap();
    let mut ks = Vec::new();
    for spec in [Precision::Native64, Precision::Native32] {
        let mut cfg = SolverConfig::uniform(spec);
        cfg.rules = vec![StopRule::Discrepancy];
        let h = solve(&inst, &cfg).unwrap();
        let k = h.decision(StopRule::Discrepancy).unwrap().k1;
        let re = h.records[k - 1].re.unwrap();
        assert!(k.abs_diff(7) <= 2, "k {k}");
        assert!((0.035..=0.07).contains(&re), "RE {re}");
        ks.push(k);
    }
    assert!(ks[0].abs_diff(ks[1]) <= 1);
}

#[test]
fn shaw_scaled_factor_stays_well_conditioned() {
    let inst = ProblemInstance::build(ProblemKind::Shaw, 1000, None, 1e-3, 1).unwrap();
    let h = solve(
        &inst,
        &full_run(Precision::Native64, Precision::Native64, 20),
    )
    .unwrap();
    let kappa = h.records[19].kappa_rhat.unwrap();
    assert!(kappa < 1e3, "{kappa}");
    assert_eq!(h.records[0].kappa_rhat, Some(1.0));
}

#[test]
fn update_error_follows_bound_shape() {
    let inst = ProblemInstance::build(ProblemKind::Shaw, 1000, None, 1e-3, 1).unwrap();
    let sd = solve(
        &inst,
        &full_run(Precision::Native32, Precision::Native64, 30),
    )
    .unwrap();
    let ss = solve(
        &inst,
        &full_run(Precision::Native32, Precision::Native32, 30),
    )
    .unwrap();
    let u = Precision::Native32.unit();
    let kmax = sd.iterations().min(ss.iterations());
    assert!(kmax >= 10);
    for k in 1..=kmax {
        let (xd, xs) = (&sd.iterates[k - 1], &ss.iterates[k - 1]);
        let rel = exact::dist(xs, xd) / exact::norm(xd);
        let kappa = ss.records[k - 1].kappa_rhat.unwrap();
        let kf = k as f64;
        let bound = 10.0 * kf.sqrt() * (2.0 + 2.0 * kf.sqrt() + kf) * kappa * u;
        assert!(rel <= bound, "k {k}: {rel:e} > {bound:e}");
    }
}

#[test]
fn single_precision_loses_accuracy_at_tiny_noise() {
    let inst = ProblemInstance::build(ProblemKind::Gravity, 2000, None, 1e-7, 1).unwrap();
    let (_, red) = min_re(
        &inst,
        &full_run(Precision::Native64, Precision::Native64, 150),
    );
    let (_, res) = min_re(
        &inst,
        &full_run(Precision::Native32, Precision::Native32, 150),
    );
    assert!(res > red, "{res} vs {red}");
}

#[test]
fn heat_lcurve_overestimates() {
    let inst = ProblemInstance::build(ProblemKind::Heat, 2000, None, 1e-3, 1).unwrap();
    let mut cfg = SolverConfig::uniform(Precision::Native64);
    cfg.rules = vec![StopRule::Optimal, StopRule::LCurve];
    cfg.max_iter = 200;
    let h = solve(&inst, &cfg).unwrap();
    let k0 = h.decision(StopRule::Optimal).unwrap().k1;
    let k1 = h.decision(StopRule::LCurve).unwrap().k1;
    assert!(k1 >= k0, "{k1} < {k0}");
}

#[test]
fn zero_iterations_rejected() {
    let inst = ProblemInstance::build(ProblemKind::Shaw, 32, None, 1e-3, 1).unwrap();
    let mut cfg = SolverConfig::uniform(Precision::Native64);
    cfg.max_iter = 0;
    assert!(solve(&inst, &cfg).is_err());
}

#[test]
fn oracle_matches_pseudoinverse_on_rectangular_system() {
    let a = DMatrix::from_fn(10, 6, |i, j| {
        ((i * 7 + j * 3) % 11) as f64 - 5.0 + if i == j { 8.0 } else { 0.0 }
    });
    let b: Vec<f64> = (0..10).map(|i| (i as f64).sin()).collect();
    let op = DenseMatrix::from_nalgebra(&a);
    let h = solve_system(&op, &b, None, None, &plain_run(6)).unwrap();
    let ls = a
        .svd(true, true)
        .solve(&DVector::from_column_slice(&b), 1e-300)
        .unwrap();
    let rel = exact::dist(&h.final_x, ls.as_slice()) / exact::norm(ls.as_slice());
    assert!(rel <= 1e-10, "{rel:e}");
}

proptest! {
    #[test]
    fn rotation_annihilates_subdiagonal(
        rho_bar in -10.0f64..10.0,
        beta in 1e-3f64..10.0,
        alpha in -10.0f64..10.0,
        phi_bar in -10.0f64..10.0,
    ) {
        let mut g = GivensState { rho_bar, phi_bar };
        let r = givens_step(&mut g, beta, alpha).unwrap();
        prop_assert!((r.c * r.c + r.s * r.s - 1.0).abs() <= 4.0 * U64);
        let q = [[r.c, r.s], [r.s, -r.c]];
        let m = [[rho_bar, 0.0, phi_bar], [beta, alpha, 0.0]];
        let out: Vec<f64> = (0..2)
            .flat_map(|i| (0..3).map(move |j| (i, j)))
            .map(|(i, j)| q[i][0] * m[0][j] + q[i][1] * m[1][j])
            .collect();
        let want = [r.rho, r.theta_next, r.phi, 0.0, g.rho_bar, g.phi_bar];
        let scale = (rho_bar * rho_bar + beta * beta + alpha * alpha + phi_bar * phi_bar).sqrt();
        for (o, w) in out.iter().zip(want) {
            prop_assert!((o - w).abs() <= 4.0 * U64 * scale, "{o} vs {w}");
        }
    }
}
