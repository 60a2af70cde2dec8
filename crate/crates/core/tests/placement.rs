use polepid_core::placement::{
    closed_loop_charpoly, closedloop_poles, desired_charpoly, is_stable, solve_gains,
};
use polepid_core::{DesignSpec, KpSource, NonDominantPoleType, PidGains, SoptdModel};
use proptest::prelude::*;

fn plant() -> impl Strategy<Value = SoptdModel> {
    (0.05f64..10.0, 0.1f64..10.0, 0.1f64..10.0, 0.1f64..5.0)
        .prop_map(|(k, l, t, z)| SoptdModel::new(k, l, t, z).unwrap())
}

fn spec() -> impl Strategy<Value = DesignSpec> {
    (1.0f64..10.0, 0.2f64..5.0, 0.1f64..10.0)
        .prop_map(|(m, z, w)| DesignSpec::new(m, z, w).unwrap())
}

fn ptype() -> impl Strategy<Value = NonDominantPoleType> {
    prop::sample::select(NonDominantPoleType::ALL.to_vec())
}

fn source() -> impl Strategy<Value = KpSource> {
    prop::sample::select(vec![KpSource::S1, KpSource::S2, KpSource::S3, KpSource::S4])
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1e-300)
}

/// Closed-form all-complex gain rows, written out term by term.
struct ClosedForm {
    ki: f64,
    kd: f64,
    kp: [f64; 4],
}

fn all_complex_closed_form(p: &SoptdModel, s: &DesignSpec) -> ClosedForm {
    let (k, l, zo, wo) = (p.gain, p.delay, p.zeta, p.omega());
    let (m, z, w) = (s.m, s.zeta_cl, s.omega_cl);
    let ki = m.powi(4) * w.powi(6) * l.powi(3) / (120.0 * k);
    let kd = (12.0 / l + 2.0 * zo * wo - 2.0 * z * w * (1.0 + 2.0 * m)) / k;
    let kp1 = (4.0 * m.powi(3) * z * w.powi(5) * l.powi(3) * (m + 2.0)
        + m.powi(4) * w.powi(6) * l.powi(4)
        - 240.0 * wo * wo)
        / (240.0 * k);
    let kp2 = l
        * l
        * (240.0 * zo * wo / l.powi(3)
            + 60.0 * wo * wo / (l * l)
            + 120.0 * k * kd / l.powi(3)
            + 12.0 * k * ki / l
            - m.powi(4) * w.powi(4)
            - 8.0 * m.powi(3) * z * z * w.powi(4)
            - 2.0 * m * m * w.powi(4) * (1.0 + 2.0 * z * z))
        / (60.0 * k);
    let d3 = 4.0 * m.powi(3) * z * w.powi(3)
        + 4.0 * m * m * z * w.powi(3) * (1.0 + 2.0 * z * z)
        + 4.0 * m * z * w.powi(3);
    let kp3 = (l.powi(3) * d3
        - (120.0 + 120.0 * zo * wo * l + 12.0 * wo * wo * l * l
            - 60.0 * k * kd * l
            - k * ki * l.powi(3)))
        / (12.0 * k * l * l);
    let kp4 = (60.0 / (l * l) + 24.0 * zo * wo / l + wo * wo + 12.0 * k * kd / l
        - 2.0 * m * m * w * w * (1.0 + 2.0 * z * z)
        - 8.0 * m * z * z * w * w
        - w * w)
        / k;
    ClosedForm {
        ki,
        kd,
        kp: [kp1, kp2, kp3, kp4],
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(400))]

    #[test]
    fn generic_matching_reproduces_all_complex_rows(p in plant(), s in spec()) {
        let cf = all_complex_closed_form(&p, &s);
        for (i, src) in [KpSource::S1, KpSource::S2, KpSource::S3, KpSource::S4].into_iter().enumerate() {
            let g = solve_gains(&p, &s, NonDominantPoleType::AllComplex, src).unwrap();
            prop_assert!(rel(g.ki, cf.ki) < 1e-12);
            // Kd and Kp are differences of large terms; compare on the scale of the terms
            let kd_scale = (12.0 / p.delay + 2.0 * s.zeta_cl * s.omega_cl * (1.0 + 2.0 * s.m)) / p.gain;
            prop_assert!((g.kd - cf.kd).abs() <= 1e-12 * kd_scale);
            let scale = cf.kp[i].abs().max(1.0 / p.gain) * 1e3;
            prop_assert!((g.kp - cf.kp[i]).abs() <= 1e-12 * scale, "{} {} {}", src, g.kp, cf.kp[i]);
        }
    }

    #[test]
    fn matched_rows_agree_with_target(p in plant(), s in spec(), t in ptype(), src in source()) {
        let g = solve_gains(&p, &s, t, src).unwrap();
        let got = closed_loop_charpoly(&p, &g, 3).unwrap().monic();
        let want = desired_charpoly(&s, t);
        for k in [0, 5, src.power()] {
            let scale = want.coeff(k).abs().max(got.coeff(k).abs()).max(1.0);
            prop_assert!((got.coeff(k) - want.coeff(k)).abs() <= 1e-10 * scale);
        }
    }

    #[test]
    fn all_real_kd_uses_one_plus_two_m(p in plant(), s in spec()) {
        let g = solve_gains(&p, &s, NonDominantPoleType::AllReal, KpSource::S1).unwrap();
        let base = 12.0 / p.delay + 2.0 * p.zeta * p.omega();
        let plus = (base - 2.0 * s.zeta_cl * s.omega_cl * (1.0 + 2.0 * s.m)) / p.gain;
        let minus = (base - 2.0 * s.zeta_cl * s.omega_cl * (1.0 - 2.0 * s.m)) / p.gain;
        let scale = (base + 2.0 * s.zeta_cl * s.omega_cl * (1.0 + 2.0 * s.m)) / p.gain;
        prop_assert!((g.kd - plus).abs() <= 1e-12 * scale);
        // the minus-sign variant is off by 8 m zeta_cl omega_cl / K
        prop_assert!((g.kd - minus).abs() > 1e-3 * scale);
    }

    #[test]
    fn ki_rows_per_pole_type(p in plant(), s in spec()) {
        let (m, z, w, l, k) = (s.m, s.zeta_cl, s.omega_cl, p.delay, p.gain);
        let base = m.powi(4) * w.powi(6) * l.powi(3) / (120.0 * k);
        for (t, factor) in [
            (NonDominantPoleType::AllComplex, 1.0),
            (NonDominantPoleType::AllReal, z.powi(4)),
            (NonDominantPoleType::Mixed, z * z),
        ] {
            let g = solve_gains(&p, &s, t, KpSource::S1).unwrap();
            prop_assert!(rel(g.ki, base * factor) < 1e-12);
        }
    }

    #[test]
    fn gains_are_linear_in_inverse_plant_gain(p in plant(), s in spec(), t in ptype(), c in 0.1f64..10.0) {
        let q = SoptdModel::new(p.gain * c, p.delay, p.lag, p.zeta).unwrap();
        let a = solve_gains(&p, &s, t, KpSource::S2).unwrap();
        let b = solve_gains(&q, &s, t, KpSource::S2).unwrap();
        prop_assert!(rel(a.ki, b.ki * c) < 1e-12);
        prop_assert!((a.kd - b.kd * c).abs() <= 1e-10 * (a.kd.abs() + 1.0 / p.gain));
    }

    #[test]
    fn pole_count_is_six(p in plant(), s in spec(), t in ptype()) {
        let g = solve_gains(&p, &s, t, KpSource::S1).unwrap();
        prop_assert_eq!(closedloop_poles(&p, &g, 3).unwrap().len(), 6);
    }
}

#[test]
fn hand_evaluated_design_point() {
    let p = SoptdModel::new(1.0, 1.0, 1.0, 1.0).unwrap();
    let s = DesignSpec::new(2.0, 1.0, 1.0).unwrap();
    let g = solve_gains(&p, &s, NonDominantPoleType::AllComplex, KpSource::S1).unwrap();
    assert!((g.kp + 0.4).abs() < 1e-12);
    assert!((g.ki - 2.0 / 15.0).abs() < 1e-12);
    assert!((g.kd - 4.0).abs() < 1e-12);
}

#[test]
fn charpoly_is_affine_in_gains() {
    let p = SoptdModel::new(0.5, 1.0, 1.0, 0.6).unwrap();
    let a = PidGains::new(0.3, 0.2, 1.1);
    let b = PidGains::new(-1.2, 0.05, 4.0);
    let t = 0.3;
    let mix = PidGains::new(
        t * a.kp + (1.0 - t) * b.kp,
        t * a.ki + (1.0 - t) * b.ki,
        t * a.kd + (1.0 - t) * b.kd,
    );
    let ca = closed_loop_charpoly(&p, &a, 3).unwrap();
    let cb = closed_loop_charpoly(&p, &b, 3).unwrap();
    let cm = closed_loop_charpoly(&p, &mix, 3).unwrap();
    for k in 0..=6 {
        let want = t * ca.coeff(k) + (1.0 - t) * cb.coeff(k);
        assert!((cm.coeff(k) - want).abs() < 1e-12 * (1.0 + want.abs()));
    }
    let poles = closedloop_poles(&p, &a, 3).unwrap();
    assert_eq!(
        is_stable(&poles).unwrap(),
        poles.iter().all(|z| z.re < -1e-9)
    );
}

proptest! {
    #[test]
    fn mixed_s4_row_is_dimensionally_consistent(s in spec()) {
        prop_assume!((s.omega_cl - 1.0).abs() > 0.05);
        let (m, z, w) = (s.m, s.zeta_cl, s.omega_cl);
        let c4 = desired_charpoly(&s, NonDominantPoleType::Mixed).coeff(4);
        let consistent = 5.0 * m * m * z * z * w * w + m * m * w * w + 8.0 * m * z * z * w * w + w * w;
        let quartic = consistent - w * w + w.powi(4);
        prop_assert!(rel(c4, consistent) < 1e-12);
        prop_assert!(rel(c4, quartic) > 1e-6);
    }
}
