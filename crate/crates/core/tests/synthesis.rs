mod common;

use borel_ns_core::forcing::Forcing;
use borel_ns_core::marcher::{run, BorelTrajectory, MarchConfig};
use borel_ns_core::startup::taylor_coeffs;
use borel_ns_core::synthesis::*;
use borel_ns_core::spectral_field::{kida_initial, SpectralVectorField, WavevectorGrid};
use borel_ns_core::Error;
use common::direct_nonlinear;
use num_complex::Complex64 as C64;
use std::f64::consts::PI;
use std::sync::OnceLock;

/// The manufactured run at the refinement study's `δ = 1/40`.
fn manufactured_run() -> &'static (ManufacturedCase, BorelTrajectory) {
    static R: OnceLock<(ManufacturedCase, BorelTrajectory)> = OnceLock::new();
    R.get_or_init(|| {
        let grid = WavevectorGrid::new(8, 1.0).unwrap();
        let case = manufactured_case(grid, 2).unwrap();
        let cfg = MarchConfig::new(8, 1.0, 2, 1.0 / 40.0, 1.0);
        let traj = run(&cfg, case.v0(), &case.forcing).unwrap();
        (case, traj)
    })
}

fn erfcx(x: f64) -> f64 {
    // continued fraction, good for x ≥ 2
    if x >= 2.0 {
        let mut cf = 0.0;
        for k in (1..200).rev() {
            cf = (k as f64 / 2.0) / (x + cf);
        }
        return 1.0 / (PI.sqrt() * (x + cf));
    }
    // 2/√π e^{x²} ∫_x^∞ e^{-s²} ds by quadrature
    let tail = quadrature::double_exponential::integrate(|s: f64| (x * x - s * s).exp(), x, x + 12.0, 1e-15).integral;
    2.0 / PI.sqrt() * tail
}

#[test]
fn residual_identity_of_the_manufactured_solution() {
    let grid = WavevectorGrid::new(4, 1.0).unwrap();
    let case = manufactured_case(grid, 2).unwrap();
    for t in [0.0, 0.3, 1.0] {
        let v = case.exact_field(t);
        let dv = case.w.scaled(-1.0 / (1.0 + t).powi(2));
        let adv = direct_nonlinear(&v, &v);
        let f = case.forcing.at_time(t);
        let mut worst: f64 = 0.0;
        for i in 0..grid.len() {
            let lam = grid.ksq(i) as f64;
            for j in 0..3 {
                let r = dv.coeffs()[i][j] + lam * v.coeffs()[i][j] - adv[i][j] - f.coeffs()[i][j];
                worst = worst.max(r.norm());
            }
        }
        assert!(worst < 1e-12, "t = {t}: residual {worst:.3e}");
    }
}

#[test]
fn manufactured_start_and_taylor_coefficients() {
    let grid = WavevectorGrid::new(4, 1.0).unwrap();
    let case = manufactured_case(grid, 2).unwrap();
    assert_eq!(case.exact_field(0.0), kida_initial(grid).unwrap());
    assert!(manufactured_case(grid, 0).is_err());
    // v = w/(1+t) has ĉ_m = (-1)^m ŵ; the startup recursion must see this
    let ts = taylor_coeffs(case.v0(), &case.forcing, 1.0, 8, 2).unwrap();
    for (i, c) in ts.c().iter().enumerate() {
        let sign = if i % 2 == 0 { -1.0 } else { 1.0 };
        let err = c.sub(&case.w.scaled(sign)).max_abs();
        let m = i as i32 + 1;
        let growth = 48f64.powi(m) / (1..=m).map(f64::from).product::<f64>();
        assert!(err < 1e-15 * growth.max(1.0) * case.w.max_abs(), "c_{m}: {err:.3e}");
    }
}

#[test]
fn reference_profile_closed_forms() {
    for q in [0.05, 0.3, 1.0, 4.0, 30.0] {
        assert_eq!(reference_profile(1, q).unwrap(), -(-q as f64).exp());
        // n = 2: L⁻¹[1/(1+τ^{-1/2}) - 1] = erfcx(√q) - 1/√(πq)
        let want = erfcx(q.sqrt()) - 1.0 / (PI * q).sqrt();
        let got = reference_profile(2, q).unwrap();
        assert!((got - want).abs() < 1e-10 * want.abs().max(1e-3), "q = {q}: {got} vs {want}");
    }
    assert!(reference_profile(2, 0.0).is_err());
}

#[test]
fn reference_profile_laplace_roundtrip_n3() {
    // ∫₀^∞ ψ(q)e^{-qτ}dq = 1/(1+τ^{-1/3}) - 1
    for tau in [0.5, 2.0, 10.0] {
        // q = s³ removes the q^{-2/3} endpoint singularity
        let f = |s: f64| 3.0 * s * s * reference_profile(3, s * s * s).unwrap() * (-s * s * s * tau).exp();
        let lap = quadrature::double_exponential::integrate(f, 0.0, 1.0, 1e-11).integral
            + quadrature::double_exponential::integrate(f, 1.0, (60.0 / tau).cbrt(), 1e-11).integral;
        let want = 1.0 / (1.0 + tau.powf(-1.0 / 3.0)) - 1.0;
        assert!((lap - want).abs() < 1e-10, "τ = {tau}: {lap} vs {want}");
    }
}

#[test]
fn laplace_eval_of_a_zero_trajectory() {
    let grid = WavevectorGrid::new(3, 1.0).unwrap();
    let cfg = MarchConfig::new(3, 1.0, 2, 0.1, 1.0);
    let slices = vec![SpectralVectorField::zeros(grid); cfg.end_index() - cfg.start_index() + 1];
    let traj =
        BorelTrajectory::from_parts(cfg, SpectralVectorField::zeros(grid), Forcing::none(grid), slices).unwrap();
    for t in [0.01, 0.5, 3.0] {
        assert!(laplace_eval(&traj, t).unwrap().is_zero());
    }
    assert!(laplace_eval(&traj, 0.0).is_err());
}

#[test]
fn laplace_eval_refuses_beyond_the_growth_rate() {
    let grid = WavevectorGrid::new(3, 1.0).unwrap();
    let w = kida_initial(grid).unwrap();
    let cfg = MarchConfig::new(3, 1.0, 2, 0.1, 1.0);
    let slices: Vec<SpectralVectorField> =
        (cfg.start_index()..=cfg.end_index()).map(|m| w.scaled((5.0 * cfg.node_q(m)).exp())).collect();
    let traj = BorelTrajectory::from_parts(cfg, w.clone(), Forcing::none(grid), slices).unwrap();
    let ev = LaplaceEvaluator::new(&traj).unwrap();
    assert!((ev.tail_model().c2 - 5.0).abs() < 1e-9);
    assert!((ev.max_time() - 5f64.powf(-0.5)).abs() < 1e-9);
    assert!(matches!(ev.eval(1.0), Err(Error::Refused(_))));
    assert!(ev.eval(0.3).is_ok());
}

#[test]
fn laplace_eval_small_t_follows_the_taylor_series() {
    let (case, traj) = manufactured_run();
    let ev = LaplaceEvaluator::new(traj).unwrap();
    let v0 = case.v0();
    // first-order slope ĉ₁ = -ŵ
    let t = 1e-3f64;
    let slope = ev.eval(t).unwrap().sub(v0).scaled(1.0 / t);
    let err = slope.add(&case.w).max_abs() / case.w.max_abs();
    assert!(err < 2e-3, "slope error {err:.3e}");
    // m₀-term Taylor sum at t = 0.02
    let t = 0.02f64;
    let mut sum = v0.clone();
    for (i, c) in traj.startup().c().iter().enumerate() {
        sum.axpy(t.powi(i as i32 + 1), c);
    }
    let rel = ev.eval(t).unwrap().sub(&sum).max_abs() / v0.max_abs();
    assert!(rel < 1e-8, "Taylor mismatch {rel:.3e}");
}

#[test]
fn laplace_eval_matches_the_manufactured_solution() {
    let (case, traj) = manufactured_run();
    for t in [0.1, 0.2] {
        let v = laplace_eval(traj, t).unwrap();
        let err = physical_field(&v.sub(&case.exact_field(t))).unwrap().max_abs();
        assert!(err <= 1e-3, "t = {t}: max error {err:.3e}");
        assert!(v.hermitian_defect() < 1e-13 && v.max_divergence() < 1e-12);
    }
}

#[test]
fn physical_field_cosine_and_parseval() {
    let grid = WavevectorGrid::new(3, 1.0).unwrap();
    let z = C64::new(0.0, 0.0);
    let mut v = SpectralVectorField::zeros(grid);
    v.set([1, 0, 2], [z, C64::new(0.5, 0.0), z]);
    v.set([-1, 0, -2], [z, C64::new(0.5, 0.0), z]);
    let p = physical_field(&v).unwrap();
    assert_eq!(p.side, 7);
    for i in 0..7 {
        for j in 0..7 {
            for l in 0..7 {
                let want = (p.coordinate(i) + 2.0 * p.coordinate(l)).cos();
                assert!((p.at(1, i, j, l) - want).abs() < 1e-14);
                assert!(p.at(0, i, j, l).abs() < 1e-15 && p.at(2, i, j, l).abs() < 1e-15);
            }
        }
    }
    let r = common::random_field(grid, 5, true);
    let p = physical_field(&r).unwrap();
    let grid_l2: f64 = p.values.iter().flatten().map(|x| x * x).sum::<f64>() / 343.0;
    assert!((grid_l2 - r.l2_norm_sq()).abs() < 1e-12 * grid_l2);
}

#[test]
fn physical_field_of_the_kida_flow() {
    let grid = WavevectorGrid::new(3, 1.0).unwrap();
    let p = physical_field(&kida_initial(grid).unwrap()).unwrap();
    let k = |a: f64, b: f64, c: f64| a.sin() * ((3.0 * b).cos() * c.cos() - b.cos() * (3.0 * c).cos());
    let mut worst: f64 = 0.0;
    for i in 0..7 {
        for j in 0..7 {
            for l in 0..7 {
                let (x, y, z) = (p.coordinate(i), p.coordinate(j), p.coordinate(l));
                worst = worst
                    .max((p.at(0, i, j, l) - k(x, y, z)).abs())
                    .max((p.at(1, i, j, l) - k(y, z, x)).abs())
                    .max((p.at(2, i, j, l) - k(z, x, y)).abs());
            }
        }
    }
    assert!(worst < 1e-13, "{worst:.3e}");
    // at (π/2, π/2, π/2) every component vanishes
    let h = PI / 2.0;
    assert!(k(h, h, h).abs() < 1e-15);
}

#[test]
fn physical_field_rejects_non_hermitian_input() {
    let grid = WavevectorGrid::new(2, 1.0).unwrap();
    let mut v = SpectralVectorField::zeros(grid);
    v.set([1, 0, 0], [C64::new(0.0, 0.0), C64::new(1.0, 0.0), C64::new(0.0, 0.0)]);
    assert!(physical_field(&v).is_err());
}

#[test]
fn small_convergence_study() {
    let study = StudyConfig { modes: 4, m0: 12, ..StudyConfig::default() };
    let rows = convergence_study(&study, &[0.05, 0.025]).unwrap();
    assert_eq!(rows.len(), 2);
    assert_eq!(rows[0].beta, None);
    let beta = rows[1].beta.unwrap();
    assert!((1.8..=2.6).contains(&beta), "β = {beta}, rows {rows:?}");
    assert!(rows[1].error < rows[0].error);
}
