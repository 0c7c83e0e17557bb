mod common;

use approx::assert_relative_eq;
use common::{along, along_axis, bisect, center};
use ncvx::functions::*;
use ncvx::linalg;
use ncvx::properties::{check_grad_fd, fd_margin, Sampler};
use proptest::prelude::*;

// Roots

#[test]
fn quasar_root_at_tau_one_is_sqrt2_minus_one() {
    assert_relative_eq!(quasar_root_a(1.0).unwrap(), 2f64.sqrt() - 1.0, epsilon = 1e-15);
}

#[test]
fn quasar_root_at_tau_point_two() {
    let tau = 0.2;
    let a = quasar_root_a(tau).unwrap();
    // Closed form gives 0.8950428; the quoted six-digit value 0.895045 is matched to 1e-5.
    assert!((a - 0.895045).abs() < 1e-5, "a = {a}");
    let residual = 1.0 - tau / 2.0 - tau * a - (1.0 - tau / 2.0) * a * a;
    assert!(residual.abs() <= 1e-12);
}

#[test]
fn quasar_root_matches_bisection() {
    let tau = 0.5;
    let q = |r: f64| 1.0 - tau / 2.0 - tau * r - (1.0 - tau / 2.0) * r * r;
    let expected = bisect(q, 0.0, 1.0);
    assert!((quasar_root_a(tau).unwrap() - expected).abs() <= 1e-12);
}

#[test]
fn quasar_root_rejects_bad_tau() {
    for tau in [0.0, -0.1, 1.5, f64::NAN] {
        assert!(matches!(quasar_root_a(tau), Err(FunctionError::Domain(_))));
    }
}

#[test]
fn rsi_root_examples() {
    assert_eq!(rsi_root_a(1.0).unwrap(), 0.0);
    assert_eq!(rsi_root_a(3.0).unwrap(), 0.5);
    assert_relative_eq!(rsi_root_a(202.0).unwrap(), 201.0 / 203.0, epsilon = 1e-15);
    assert!((rsi_root_a(202.0).unwrap() - 0.990147).abs() < 1e-6);
    assert!(rsi_root_a(0.5).is_err());
}

fn qc_q(tau: f64, d: f64, delta: f64, r: f64) -> f64 {
    let c = d / (4.0 * delta);
    (tau / 2.0 - 1.0) * r * r + ((1.0 - tau) - c) * r + (1.0 - tau) * c + tau / 2.0
}

#[test]
fn qc_root_brackets() {
    for &(tau, d, delta) in &[(0.1, 16.0, 0.5), (0.5, 16.0, 1.0), (1.0, 32.0, 0.02), (0.3, 1.0, 0.06)] {
        assert!(qc_q(tau, d, delta, 1.0 - tau) >= 0.0);
        assert_relative_eq!(qc_q(tau, d, delta, 1.0), -tau * d / (4.0 * delta), max_relative = 1e-12);
        let a = qc_root_a(tau, d, delta).unwrap();
        assert!(a >= 1.0 - tau && a <= 1.0);
        assert!(qc_q(tau, d, delta, a).abs() < 1e-10);
    }
}

#[test]
fn qc_root_tau_one_matches_quadratic_formula() {
    let (d, delta): (f64, f64) = (16.0, 0.5);
    let c = d / (4.0 * delta);
    // −r²/2 − c r + 1/2 = 0
    let expected = -c + (c * c + 1.0).sqrt();
    let a = qc_root_a(1.0, d, delta).unwrap();
    assert_relative_eq!(a, expected, max_relative = 1e-12);
    assert!((0.0..=1.0).contains(&a));
}

#[test]
fn qc_root_matches_bisection() {
    let (tau, d, delta) = (0.5, 16.0, 1.0);
    let expected = bisect(|r| qc_q(tau, d, delta, r), 1.0 - tau, 1.0);
    let a = qc_root_a(tau, d, delta).unwrap();
    assert!((a - expected).abs() <= 1e-12);
    assert!(qc_q(tau, d, delta, a).abs() <= 1e-12);
}

#[test]
fn qc_root_rejects_ranges() {
    assert!(qc_root_a(0.5, 16.0, 1.0 + 1e-9).is_err());
    assert!(qc_root_a(0.5, 16.0, 0.0).is_err());
    assert!(qc_root_a(0.0, 16.0, 0.5).is_err());
    assert!(qc_root_a(0.5, -1.0, 0.5).is_err());
}

proptest! {
    #[test]
    fn quasar_root_post(tau in 1e-6f64..=1.0) {
        let a = quasar_root_a(tau).unwrap();
        prop_assert!(a >= 2f64.sqrt() - 1.0 - 1e-15 && a <= 1.0);
        prop_assert!(1.0 - a <= tau + 1e-15);
    }

    #[test]
    fn qc_root_post(tau in 0.01f64..=1.0, ratio in 16.5f64..1e4) {
        let d = 1.0;
        let delta = d / ratio;
        let a = qc_root_a(tau, d, delta).unwrap();
        prop_assert!(a >= 1.0 - tau && a <= 1.0);
    }
}

// Hard instances

fn qcqg() -> QcqgInstance {
    make_qcqg_instance(1.5, 0.4, 0.7, center(5, 3.0 * 0.7), 5).unwrap()
}

fn rsi() -> RsiInstance {
    make_rsi_instance(12.0, 1.5, 0.7, center(5, 4.0 * 0.7), 5).unwrap()
}

fn qc() -> QcInstance {
    make_qc_instance(2.0, 0.4, 16.0, 0.5, center(5, 5.0), 5).unwrap()
}

#[test]
fn qcqg_examples() {
    let f = qcqg();
    let (mu, d) = (f.mu, f.delta);
    let x = along_axis(&f.z, d / 2.0);
    assert_relative_eq!(f.value(&x), 169.0 * mu * d * d / 8.0, max_relative = 1e-14);
    assert!(linalg::norm(&f.gradient(&f.z)) == 0.0);
    assert_eq!(f.value(&f.z), 0.0);
    assert_eq!(f.l(), 202.0 * mu);
    // Plateau: inside B(0, 8Δ), outside B(z, (1+a)Δ).
    for r in [(1.0 + f.a) * d, 1.8 * d, 3.0 * d] {
        let x = along(&f.z, &[-1.0, 0.3, 0.2, 0.0, 0.1], r);
        assert!(linalg::norm(&x) < 8.0 * d);
        assert_relative_eq!(common::grad_norm(&f, &x), 169.0 * mu * (1.0 - f.a) * d, max_relative = 1e-12);
    }
}

#[test]
fn qcqg_rejects_far_center() {
    let z = center(3, 5.0 * 0.7 * 1.01);
    assert!(matches!(make_qcqg_instance(1.0, 0.5, 0.7, z, 3), Err(FunctionError::Domain(_))));
    assert!(make_qcqg_instance(1.0, 0.5, 0.7, center(3, 1.0), 4).is_err());
}

#[test]
fn rsi_examples() {
    let f = rsi();
    let (l, mu, d, a) = (f.l, f.mu, f.delta, f.a);
    assert_relative_eq!(f.value(&along_axis(&f.z, d)), l * d * d / 2.0, max_relative = 1e-14);
    let x = along(&f.z, &[0.2, -1.0, 0.5, 0.3, 0.0], 3.0 * (1.0 + a) * d);
    let expected = linalg::scale(&linalg::sub(&x, &f.z), mu);
    for (g, e) in f.gradient(&x).iter().zip(&expected) {
        assert_relative_eq!(*g, *e, max_relative = 1e-12);
    }
    // Value increases with r, so the infimum outside B(z, 2Δ) is attained on its boundary.
    let floor = l * d * d * (1.0 + 2.0 * a - a * a) / 2.0;
    let pts = Sampler::for_objective(&f, 11).points(5000);
    let mut inf = f64::INFINITY;
    for x in pts.iter().filter(|x| linalg::dist(x, &f.z) >= 2.0 * d) {
        inf = inf.min(f.value(x));
    }
    assert!(inf >= floor && floor >= l * d * d / 2.0, "inf {inf}, floor {floor}");
}

#[test]
fn rsi_rejects_bad_params() {
    assert!(make_rsi_instance(1.0, 2.0, 1.0, vec![0.0], 1).is_err());
    assert!(make_rsi_instance(4.0, 1.0, 1.0, vec![5.1], 1).is_err());
}

#[test]
fn qc_examples() {
    let f = qc();
    let (l, d, a, big) = (f.l, f.delta, f.a, f.d_cap);
    assert_relative_eq!(f.value(&along_axis(&f.z, 2.0 * d)), 1.5 * l * d * d, max_relative = 1e-14);
    for r in [big / 4.0 + a * d, big / 3.0, big] {
        let x = along(&f.z, &[0.1, 0.2, -0.3, 1.0, 0.0], r);
        assert_relative_eq!(common::grad_norm(&f, &x), l * (1.0 - a) * d, max_relative = 1e-12);
    }
    let floor = 7.0 / 32.0 * l * big * d;
    let pts = Sampler::for_objective(&f, 12).points(5000);
    for x in pts.iter().filter(|x| linalg::dist(x, &f.z) >= 5.0 * big / 16.0) {
        assert!(f.value(x) >= floor, "value {} below {floor}", f.value(x));
    }
}

#[test]
fn qc_rejects_ranges() {
    assert!(make_qc_instance(1.0, 0.5, 16.0, 1.0 + 1e-9, vec![0.0], 1).is_err());
    assert!(make_qc_instance(1.0, 0.5, 16.0, 1.0, vec![0.0], 1).is_ok());
    assert!(make_qc_instance(1.0, 0.5, 16.0, 0.5, vec![11.0], 1).is_err());
}

#[test]
fn reference_examples() {
    let spec = |kind, l| FamilySpec {
        kind,
        mu: 1.0,
        l,
        tau: 1.0,
        sigma: 1.0,
        delta: 0.5,
        d_cap: Some(16.0),
        d: None,
        m: Some(3),
        seed: 1,
    };
    let qcf = HardFamily::build(&spec(FamilyKind::Qc, Some(1.0))).unwrap();
    let x = vec![0.3; qcf.params.d];
    assert!(qcf.reference().gradient(&x).iter().all(|g| *g == 0.0));

    let qf = HardFamily::build(&spec(FamilyKind::Qcqg, None)).unwrap();
    let mut x = vec![0.0; qf.params.d];
    x[0] = 8.0 * 0.5;
    assert!(qf.reference().gradient(&x).iter().all(|g| g.abs() < 1e-12));
    assert!(qf.reference().value(&x).abs() < 1e-12);

    let rf = HardFamily::build(&spec(FamilyKind::Rsi, Some(4.0))).unwrap();
    let mut x = vec![0.0; rf.params.d];
    x[1] = 4.0 * 0.5;
    assert_eq!(rf.reference().gradient(&x), x);
}

// Embedding

#[test]
fn embedding_examples() {
    let f = rsi();
    let z = f.z.clone();
    let e = embed(f.clone(), 9).unwrap();
    let mut x: Vec<f64> = z.clone();
    x.extend([1.0, -2.0, 3.0, 0.5]);
    assert_eq!(e.value(&x), f.f_star());
    let y: Vec<f64> = (0..9).map(|i| (i as f64).cos()).collect();
    assert!(e.gradient(&y)[5..].iter().all(|g| *g == 0.0));
    // Projection onto {(z, y)} keeps the tail.
    let p = e.minimizer_set().project(&y);
    assert_eq!(&p[..5], &z[..]);
    assert_eq!(&p[5..], &y[5..]);
    assert_relative_eq!(linalg::dist(&y, &p), linalg::dist(&y[..5], &z), max_relative = 1e-15);
    assert!(embed(f, 4).is_err());
}

#[test]
fn embedding_needs_unique_minimizer() {
    let r = Reference { kind: FamilyKind::Rsi, mu: 1.0, delta: 1.0, dim: 2 };
    assert!(embed(r, 3).is_err());
}

// Packing

#[test]
fn packing_one_dimension() {
    let c = pack_centers(1, 5.0, 4.0, 2, 3).unwrap();
    assert_eq!(c.len(), 2);
    assert!((c[0][0] - c[1][0]).abs() > 4.0);
    assert!(c.iter().all(|p| p[0].abs() <= 5.0));
}

#[test]
fn packing_reports_shortfall() {
    // Four points in [−1, 1] cannot be pairwise more than 0.95 apart.
    let err = pack_centers(1, 1.0, 0.95, 4, 0).unwrap_err();
    assert!(err.achieved <= 3);
    assert_eq!(err.target, 4);
    assert_eq!(err.proposals, PROPOSAL_CAP);
}

#[test]
fn packing_tau_half_reaches_packing_size() {
    let d0 = d0_for(FamilyKind::Qcqg, 0.5, 0.0);
    assert_eq!(d0, 13);
    let m = m_for(FamilyKind::Qcqg, d0);
    assert_eq!(m, 10);
    let c = pack_centers(d0, 5.0, 4.0, m, 9).unwrap();
    assert!(c.len() >= 10);
    for i in 0..c.len() {
        assert!(linalg::norm(&c[i]) <= 5.0);
        for j in i + 1..c.len() {
            assert!(linalg::dist(&c[i], &c[j]) > 4.0);
        }
    }
}

#[test]
fn family_dimensions() {
    assert_eq!(d0_for(FamilyKind::Qcqg, 1.0, 0.0), 7);
    assert_eq!(m_for(FamilyKind::Qcqg, 7), 3);
    assert_eq!(d0_for(FamilyKind::Rsi, 1.0, 4.0), 19);
    assert_eq!(m_for(FamilyKind::Rsi, 19), 35);
    // 2 log_{5/4}(2/τ) and log_{5/4}(4/τ²) agree.
    for tau in [0.1, 0.3, 0.77, 1.0] {
        let a: f64 = 2.0 * (2.0 / tau as f64).ln() / 1.25f64.ln();
        let b: f64 = (4.0 / (tau * tau) as f64).ln() / 1.25f64.ln();
        assert_relative_eq!(a, b, max_relative = 1e-14);
    }
}

// Counterexamples

#[test]
fn spiral_examples() {
    let f = counterexample_eb_not_rsi();
    assert_eq!(f.value(&[0.0, 0.0]), 0.0);
    assert_eq!(f.gradient(&[0.0, 0.0]), vec![0.0, 0.0]);
    let w = Spiral::witness();
    let g = f.gradient(&w);
    let ratio = linalg::dot(&g, &w) / linalg::dot(&w, &w);
    assert!(ratio.abs() < 1e-12, "ratio {ratio}");
    assert!(linalg::norm(&g) > 0.5);
    let theta = 1.0 - 5.0 * std::f64::consts::PI / 4.0;
    let (_, g_t) = Spiral::polar_partials(1.0, theta);
    assert!(g_t > 0.0);
    assert!(f.check_domain(&[0.9, 0.5]).is_err());
    assert!(f.check_domain(&[0.6, 0.5]).is_ok());
}

#[test]
fn spiral_gradient_matches_polar_partials() {
    let f = Spiral;
    for &(r, th) in &[(0.3, 0.4), (0.9, -2.0), (0.5, 3.0)] {
        let x = [r * f64::cos(th), r * f64::sin(th)];
        let (g_r, g_t) = Spiral::polar_partials(r, th);
        let g = f.gradient(&x);
        assert_relative_eq!(g[0] * th.cos() + g[1] * th.sin(), g_r, max_relative = 1e-12);
        assert_relative_eq!(-g[0] * th.sin() + g[1] * th.cos(), g_t / r, max_relative = 1e-12);
    }
}

#[test]
fn piecewise_rsi_examples() {
    let f = counterexample_rsi_not_starsc();
    assert_relative_eq!(f.value(&[1.5]), 21.0 / 8.0, epsilon = 1e-15);
    assert_relative_eq!(f.gradient(&[1.5])[0] * 1.5, 9.0 / 4.0, epsilon = 1e-15);
    assert_eq!(f.value(&[0.0]), 0.0);
    assert_eq!(f.gradient(&[0.0])[0], 0.0);
}

// Invariants

fn all_instances() -> Vec<Box<dyn Objective>> {
    vec![
        Box::new(qcqg()),
        Box::new(rsi()),
        Box::new(qc()),
        Box::new(make_qcqg_instance(1.0, 1.0, 0.01, center(2, 0.03), 2).unwrap()),
        Box::new(make_qc_instance(1.0, 0.1, 1.0, 0.001, center(3, 0.5), 3).unwrap()),
        Box::new(embed(rsi(), 8).unwrap()),
        Box::new(counterexample_rsi_not_starsc()),
        Box::new(counterexample_eb_not_rsi()),
    ]
}

#[test]
fn gradient_matches_finite_differences() {
    let step = 1e-6;
    for (k, f) in all_instances().iter().enumerate() {
        let pts = Sampler::for_objective(f.as_ref(), 100 + k as u64).interior_points(f.as_ref(), 1000, fd_margin(step));
        assert_eq!(pts.len(), 1000);
        let r = check_grad_fd(f.as_ref(), step, &pts, 1e-4);
        assert!(r.passed, "instance {k}: {}", r.summary());
    }
}

#[test]
fn boundaries_are_continuous() {
    for (k, f) in all_instances().iter().enumerate() {
        let dim = f.dim();
        let hint = SamplingHint { anchors: vec![], radii: vec![], container_radius: 1.0 };
        let dirs = Sampler::new(hint, dim, 7 + k as u64).points(100);
        for s in f.boundaries().iter().filter(|s| s.radius > 0.0) {
            let k0 = s.center.len();
            for dir in &dirs {
                let head = &dir[..k0];
                if linalg::norm(head) < 1e-3 {
                    continue;
                }
                let eps = 1e-12 * s.radius.max(1.0);
                let lift = |r: f64| {
                    let mut p = along(&s.center, head, r);
                    p.extend_from_slice(&dir[k0..]);
                    p
                };
                let (xi, xo) = (lift(s.radius - eps), lift(s.radius + eps));
                if f.check_domain(&xi).is_err() || f.check_domain(&xo).is_err() {
                    continue;
                }
                let scale = f.value(&xi).abs().max(1.0);
                let gscale = common::grad_norm(f.as_ref(), &xi).max(1.0);
                assert!((f.value(&xi) - f.value(&xo)).abs() <= 1e-9 * scale, "instance {k} value jump");
                assert!(
                    linalg::dist(&f.gradient(&xi), &f.gradient(&xo)) <= 1e-9 * gscale,
                    "instance {k} gradient jump at radius {}",
                    s.radius
                );
            }
        }
    }
}

#[test]
fn designated_minimizer_has_zero_gradient_and_value() {
    for f in all_instances() {
        let z = f.minimizer_set().representative(f.dim());
        assert_eq!(f.value(&z), f.f_star());
        let c = f.certificate();
        let scale = if c.l.is_finite() { c.l.max(1.0) } else { 1.0 };
        assert!(linalg::norm(&f.gradient(&z)) <= 1e-12 * scale);
    }
}

#[test]
fn family_params_round_trip_bit_identical() {
    for (kind, l, dc) in [(FamilyKind::Qcqg, None, None), (FamilyKind::Rsi, Some(4.0), None), (FamilyKind::Qc, Some(1.3), Some(16.0))] {
        let spec = FamilySpec {
            kind,
            mu: 0.37,
            l,
            tau: 0.3,
            sigma: 0.9,
            delta: 0.123456789,
            d_cap: dc,
            d: None,
            m: Some(4),
            seed: 5,
        };
        let fam = HardFamily::build(&spec).unwrap();
        let json = serde_json::to_string(&fam.params).unwrap();
        let back: HardFamilyParams = serde_json::from_str(&json).unwrap();
        assert_eq!(back, fam.params);
        for (a, b) in back.centers.iter().flatten().zip(fam.params.centers.iter().flatten()) {
            assert_eq!(a.to_bits(), b.to_bits());
        }
        assert_eq!(back.a.to_bits(), fam.params.a.to_bits());
        let rebuilt = HardFamily::from_params(back).unwrap();
        assert_eq!(rebuilt.instance(1).value(&vec![0.1; fam.params.d]), fam.instance(1).value(&vec![0.1; fam.params.d]));
    }
}

#[test]
fn family_validation_catches_tampering() {
    let spec = FamilySpec {
        kind: FamilyKind::Rsi,
        mu: 1.0,
        l: Some(4.0),
        tau: 1.0,
        sigma: 1.0,
        delta: 1.0,
        d_cap: None,
        d: None,
        m: Some(3),
        seed: 2,
    };
    let fam = HardFamily::build(&spec).unwrap();
    assert!(fam.params.validate(false).is_ok());
    assert!(fam.params.validate(true).is_err(), "3 centers is below the packing size 35");
    let mut p = fam.params.clone();
    p.centers[1] = p.centers[0].clone();
    assert!(HardFamily::from_params(p).is_err());
    let mut p = fam.params.clone();
    p.d0 += 1;
    assert!(p.validate(false).is_err());
}

#[test]
fn instances_are_shareable_across_threads() {
    fn assert_send_sync<T: Send + Sync>() {}
    assert_send_sync::<HardFamily>();
    assert_send_sync::<Spiral>();
}
