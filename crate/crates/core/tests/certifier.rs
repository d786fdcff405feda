mod common;

use borel_ns_core::borel_kernel::KernelEvaluator;
use borel_ns_core::certifier::*;
use borel_ns_core::forcing::Forcing;
use borel_ns_core::marcher::{run, BorelTrajectory, MarchConfig};
use borel_ns_core::special_functions::gamma;
use borel_ns_core::spectral_field::{kida_initial, v1_field, SpectralVectorField, WavevectorGrid};
use common::kernel_sform_oracle;
use num_complex::Complex64 as C64;
use proptest::prelude::*;
use std::f64::consts::PI;
use std::sync::OnceLock;

fn kida_run(modes: usize, q0: f64) -> BorelTrajectory {
    let grid = WavevectorGrid::new(modes, 0.1).unwrap();
    let v0 = kida_initial(grid).unwrap();
    run(&MarchConfig::new(modes, 0.1, 2, 0.05, q0), &v0, &Forcing::none(grid)).unwrap()
}

fn small_kida() -> &'static BorelTrajectory {
    static T: OnceLock<BorelTrajectory> = OnceLock::new();
    T.get_or_init(|| kida_run(4, 2.0))
}

#[test]
fn solve_alpha_reproduces_the_published_existence_time() {
    let (alpha, t) = solve_alpha(0.0, 1.1403, 13.6921, 2, 30.0).unwrap();
    assert!((alpha - 32.7564).abs() < 1e-3, "{alpha}");
    assert!((t - 0.1747).abs() < 1e-4, "{t}");
    assert_eq!(t, alpha.powf(-0.5));
}

#[test]
fn solve_alpha_falls_back_to_alpha0() {
    let (alpha, t) = solve_alpha(0.0, 5.0, 0.0, 2, 30.0).unwrap();
    assert!((alpha / 30.0 - 1.0).abs() < 2e-9);
    assert!((t / 30f64.powf(-0.5) - 1.0).abs() < 1e-9);
    assert!(solve_alpha(-1.0, 1.0, 1.0, 2, 30.0).is_err());
    assert!(solve_alpha(1.0, 1.0, 1.0, 0, 30.0).is_err());
}

proptest! {
    #[test]
    fn solve_alpha_is_monotone(b in 0.0f64..10.0, e in 0.0f64..10.0, e1 in 0.0f64..50.0, a0 in 0.0f64..40.0,
                               db in 0.0f64..5.0, n in 1u32..5) {
        let base = solve_alpha(b, e, e1, n, a0).unwrap().0;
        prop_assert!(solve_alpha(b + db, e, e1, n, a0).unwrap().0 >= base);
        prop_assert!(solve_alpha(b, e + db, e1, n, a0).unwrap().0 >= base);
        prop_assert!(solve_alpha(b, e, e1 + db, n, a0).unwrap().0 >= base);
        // the defining inequality holds at the returned rate
        let a = 0.5 + 0.5 / n as f64;
        prop_assert!(base.powf(a) > e1 + 2.0 * (e * b).sqrt() || e1 + e * b == 0.0);
    }
}

#[test]
fn refined_condition_limits() {
    // Γ(3/4) from a quadrature of the integral definition
    let g34 = quadrature::double_exponential::integrate(|t: f64| t.powf(-0.25) * (-t).exp(), 0.0, 60.0, 1e-14).integral;
    assert!((g34 - 1.225416702).abs() < 1e-9);
    let r = refined_condition(1.0, 1.0, 0.0, 1.0, 2.0, 2).unwrap();
    let expect = 2.0 + 2.0 * (2.0 * g34 * g34).sqrt();
    assert!((r.rhs - expect).abs() < 1e-9 * expect);
    // α₀q₀ → ∞: the condition collapses to α^a > ε₁
    let r = refined_condition(1.0, 1.0, 30.0, 50.0, 2.0, 2).unwrap();
    assert!((r.rhs - 2.0).abs() < 1e-12);
    assert!((r.alpha - 30.0 * (1.0 + 1e-9)).abs() < 1e-9);
    // decreasing in q0
    let rhs: Vec<f64> = [1.0, 2.0, 4.0, 8.0].iter().map(|&q0| refined_condition(1.0, 1.0, 0.1, q0, 2.0, 2).unwrap().rhs).collect();
    assert!(rhs.windows(2).all(|w| w[1] < w[0]), "{rhs:?}");
}

#[test]
fn refined_bounds_match_the_tail_estimates() {
    // b ≤ c_s Γ(a, α₀q₀) for u_s(q) = c_s q^{a-1} exactly
    let (c_s, alpha0, q0, a) = (0.7f64, 2.0f64, 3.0f64, 0.75f64);
    let b = alpha0.powf(a)
        * quadrature::double_exponential::integrate(|q: f64| (-alpha0 * q).exp() * c_s * q.powf(a - 1.0), q0, 60.0, 1e-14)
            .integral;
    let r = refined_condition(1.0, c_s, alpha0, q0, 0.0, 2).unwrap();
    assert!((b - r.b_bound).abs() < 1e-10 * b, "{b} vs {}", r.b_bound);
    assert!((r.epsilon_bound - 2.0 * gamma(a) / q0.sqrt()).abs() < 1e-14);
}

#[test]
fn leray_times() {
    let (tc, tca) = leray_tc(1.0, 1.0, 1.0, 0.0).unwrap();
    let expect = 256.0 * (1.0 + 2f64.sqrt()).powi(2) * 9.0 / 3f64.sqrt();
    assert!((tc - expect).abs() < 1e-12 * expect);
    assert!((tca - tc).abs() < 1e-12 * tc);
    let (tc2, _) = leray_tc(2.0, 1.0, 1.0, 0.0).unwrap();
    assert!((tc2 - 2.0 * tc).abs() < 1e-12 * tc);
    // a nonzero sector angle lowers the effective viscosity and lengthens the time
    let (tc_a, tca_a) = leray_tc(1.0, 0.1, 0.5, 0.3).unwrap();
    let nc = 0.1 * 0.3f64.cos();
    let by_hand = 256.0 * 0.125 * (nc.sqrt() + 2f64.sqrt()).powi(2) * (2.0 + nc.sqrt()).powi(2) / (3f64.sqrt() * 0.1 * nc.powf(3.5));
    assert!((tca_a - by_hand).abs() < 1e-12 * by_hand);
    assert!(tca_a > tc_a);
    assert!(leray_tc(1.0, 1.0, 1.0, 2.0).is_err());
}

#[test]
fn initial_energy_by_parseval() {
    // v = (0, sin x, 0): E = ½ ∫ sin² x dx = ½ (2π)³/2
    let grid = WavevectorGrid::new(2, 1.0).unwrap();
    let mut v = SpectralVectorField::zeros(grid);
    let z = C64::new(0.0, 0.0);
    v.set([1, 0, 0], [z, C64::new(0.0, -0.5), z]);
    v.set([-1, 0, 0], [z, C64::new(0.0, 0.5), z]);
    let e = initial_energy(&v);
    assert!((e - 0.25 * (2.0 * PI).powi(3)).abs() < 1e-12 * e);
}

#[test]
fn classical_time_scan() {
    let grid = WavevectorGrid::new(4, 0.1).unwrap();
    let v0 = kida_initial(grid).unwrap();
    assert!(matches!(classical_time(&v0, None), Err(borel_ns_core::Error::Unsupported(_))));
    let shape = CmTable::lattice_shape();
    let (t, m) = classical_time(&v0, Some(&shape)).unwrap();
    // interior maximum on (2.5, 6]
    assert!(m > 2.6 && m < 5.9, "argmax {m}");
    let cal = CmTable::calibrated(&shape, &v0, 0.01).unwrap();
    let (tc, mc) = classical_time(&v0, Some(&cal)).unwrap();
    assert!((tc - 0.01).abs() < 1e-12 && mc == m, "{tc} {mc} {t}");
    // doubling v0 halves T_cl
    let (t2, m2) = classical_time(&v0.scaled(2.0), Some(&cal)).unwrap();
    assert!((t2 - 0.5 * tc).abs() < 1e-14 && m2 == mc);
}

#[test]
fn lattice_sum_against_direct_sum() {
    // m = 4: Σ|k|^{-6} converges fast enough for a brute-force cube of side 121
    let mut s = 0.0;
    let k = 60i32;
    for a in -k..=k {
        for b in -k..=k {
            for c in -k..=k {
                let r2 = (a * a + b * b + c * c) as f64;
                if r2 > 0.0 {
                    s += r2.powi(-3);
                }
            }
        }
    }
    assert!((lattice_sum(4.0) / s - 1.0).abs() < 1e-4, "{} vs {s}", lattice_sum(4.0));
}

#[test]
fn cm_table_interpolation() {
    let t = CmTable::new(vec![(3.0, 2.0), (2.5, 1.0), (4.0, 4.0)]).unwrap();
    assert_eq!(t.eval(2.75), Some(1.5));
    assert_eq!(t.eval(3.5), Some(3.0));
    assert_eq!(t.eval(5.0), None);
    assert!(CmTable::new(vec![(3.0, 1.0)]).is_err());
    assert!(CmTable::new(vec![(3.0, 1.0), (3.0, 2.0)]).is_err());
}

#[test]
fn decay_fit_on_synthetic_norms() {
    let samples: Vec<(f64, f64)> = (1..=200).map(|i| {
        let q = 0.05 * i as f64;
        (q, 3.0 * (-0.42 * q.cbrt()).exp())
    }).collect();
    let fit = decay_fit_samples(&samples, 2, (5.0, 10.0)).unwrap();
    assert!((fit.slope + 0.42).abs() < 1e-10);
    assert!((fit.intercept - 3f64.ln()).abs() < 1e-10);
    let growing: Vec<(f64, f64)> = samples.iter().map(|&(q, u)| (q, 1.0 / u)).collect();
    assert!(matches!(decay_fit_samples(&growing, 2, (5.0, 10.0)), Err(borel_ns_core::Error::Refused(_))));
    assert!(decay_fit_samples(&samples, 2, (20.0, 30.0)).is_err());
}

/// `v₀ = 0` and a single shear forcing, whose self-interaction vanishes: with the
/// slices set to zero the tail is the inhomogeneous term alone.
#[test]
fn tail_of_a_zero_trajectory_is_the_inhomogeneous_term() {
    let grid = WavevectorGrid::new(2, 0.5).unwrap();
    let z = C64::new(0.0, 0.0);
    let mut f = SpectralVectorField::zeros(grid);
    f.set([1, 0, 0], [z, C64::new(0.0, -0.5), z]);
    f.set([-1, 0, 0], [z, C64::new(0.0, 0.5), z]);
    let cfg = MarchConfig::new(2, 0.5, 2, 0.1, 1.0);
    let slices = vec![SpectralVectorField::zeros(grid); cfg.end_index() - cfg.start_index() + 1];
    let v0 = SpectralVectorField::zeros(grid);
    let traj = BorelTrajectory::from_parts(cfg, v0.clone(), Forcing::steady(f.clone()), slices).unwrap();
    let ev = KernelEvaluator::new(2, 0.5).unwrap();
    let v1 = v1_field(&v0, &f).unwrap();
    for q in [1.05, 1.7, 3.3] {
        let (u, norm) = u_s_tail(&traj, q).unwrap();
        let expect = ev.u0_term(&v1, q).unwrap();
        assert!(u.sub(&expect).max_abs() < 1e-12 * expect.max_abs(), "q = {q}: {} vs {}", u.sub(&expect).max_abs(), expect.max_abs());
        assert!((norm - expect.l1_norm()).abs() < 1e-12 * norm);
    }
    assert!(u_s_tail(&traj, 1.0).is_err());
    assert!(u_s_tail(&traj, 0.5).is_err());
}

#[test]
fn tail_continues_the_trajectory_at_q0() {
    // just above q₀ the Û^(b) terms vanish, so Û^(s) = Û(q₀)
    let traj = small_kida();
    let tail = TailEvaluator::new(traj).unwrap();
    let (u, _) = tail.eval(2.0 + 1e-9).unwrap();
    let last = traj.slices().last().unwrap();
    assert!(u.sub(last).l1_norm() < 1e-6 * last.l1_norm(), "{}", u.sub(last).l1_norm());
    // q^{1/4} u_s stays bounded and decays on [q₀, 50q₀]
    let w: Vec<f64> = [2.5f64, 5.0, 10.0, 25.0, 100.0].iter().map(|&q| q.powf(0.25) * tail.eval(q).unwrap().1).collect();
    assert!(w.iter().all(|x| x.is_finite()));
    assert!(w.windows(2).all(|p| p[1] < p[0]), "{w:?}");
}

#[test]
fn kernel_sups_against_a_dense_oracle_scan() {
    let ev = KernelEvaluator::new(2, 0.1).unwrap();
    let s = kernel_sups(&ev, &[11], 2.0, 100.0).unwrap();
    // independent scan of (q - q')^{1/4}|𝒢| with the s-integral oracle at q' = q₀
    let mut best: f64 = 0.0;
    for i in 0..400 {
        let d = 1e-3 * (9.8e4f64).powf(i as f64 / 399.0);
        best = best.max(d.powf(0.25) * kernel_sform_oracle(2, 2.0 + d, 2.0, 1.1).abs());
    }
    let sampled = s.sup_k_b0 / 11f64.sqrt();
    assert!(sampled <= best * (1.0 + 1e-6), "{sampled} vs {best}");
    assert!(sampled > 0.98 * best, "{sampled} vs {best}");
    assert_eq!(s.ksq_at_sup, 11);
}

#[test]
fn certificate_constants_on_a_small_run() {
    let traj = small_kida();
    let th = certificate_constants(traj, 30.0).unwrap();
    let a = 0.75;
    // ε = Γ(a)B₃ with B₃ = 2 sup|k|B₀: linear in the table
    assert!((th.epsilon - gamma(a) * 2.0 * th.sup_k_b0).abs() < 1e-14);
    let e1 = epsilon1(traj, th.sup_k_b0, 30.0).unwrap();
    assert_eq!(e1, th.epsilon1);
    assert!((epsilon1(traj, 2.0 * th.sup_k_b0, 30.0).unwrap() - 2.0 * e1).abs() < 1e-12 * e1);
    // the α variant is smaller for α > α₀
    assert!(epsilon1(traj, th.sup_k_b0, 40.0).unwrap() < e1);
    assert!(th.b >= 0.0 && th.b.is_finite() && th.c_s > 0.0 && th.c_g > 0.0);
    assert!(!th.caveats.is_empty());

    let cert = Certificate::from_constants(&th).unwrap();
    assert!(cert.verify());
    assert!(cert.report().contains(NOT_A_PROOF));
    let text = cert.to_key_value();
    let back = Certificate::from_key_value(&text).unwrap();
    assert_eq!(back, cert);
    // a tampered certificate fails its own inequality
    let bad = text.replace(&format!("epsilon1 = {:?}", cert.epsilon1), "epsilon1 = 1000.0");
    assert!(matches!(Certificate::from_key_value(&bad), Err(borel_ns_core::Error::Refused(_))));
    assert!(Certificate::from_key_value("q0 = 1").is_err());
}

#[test]
fn rough_alpha_contract() {
    let traj = small_kida();
    let ev = KernelEvaluator::new(2, 0.1).unwrap();
    let c2 = sample_c2(&ev, &[11, 19, 48], 50.0).unwrap();
    let c1 = sample_c1(&ev).unwrap();
    // c₁ ≥ G(μ)/μ at μ → 0, i.e. F(0) = 1/Γ(1/2)
    assert!(c1 >= 1.0 / PI.sqrt() * (1.0 - 1e-3), "{c1}");
    let grid = *traj.grid();
    let f = Forcing::none(grid);
    let alpha = rough_alpha(traj.v0(), &f, 0.1, 2, c2, c1).unwrap();
    let v1 = v1_field(traj.v0(), f.steady_part()).unwrap();
    let lhs = |a: f64| {
        c2 / 0.1f64.sqrt() * gamma(0.25) * a.powf(-0.25)
            * (4.0 * traj.v0().l1_norm() + 4.0 * c1 * gamma(0.5) * a.powf(-0.5) * v1.l1_norm())
    };
    assert!(lhs(alpha) < 1.0);
    assert!(lhs(alpha * (1.0 - 1e-3)) >= 1.0);
    // the full certificate is the sharper estimate
    let cert = certify(traj, 30.0).unwrap();
    assert!(alpha >= cert.alpha_star, "{alpha} vs {}", cert.alpha_star);
}

#[test]
fn cg_integral_is_finite() {
    let cg = sample_cg_integral(2).unwrap();
    assert!(cg.is_finite() && cg > 0.0);
    assert!(sample_cg_integral(1).is_err());
}

#[test]
fn alpha_star_does_not_grow_with_q0() {
    // more computed information can only lengthen the guaranteed interval
    let alphas: Vec<f64> = [2.5, 5.0, 10.0]
        .iter()
        .map(|&q0| certify(&kida_run(4, q0), 30.0).unwrap().alpha_star)
        .collect();
    println!("alpha* over q0 = 2.5, 5, 10: {alphas:?}");
    assert!(alphas.windows(2).all(|w| w[1] <= w[0] * (1.0 + 1e-9)), "{alphas:?}");
}
