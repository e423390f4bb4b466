use std::sync::OnceLock;

use proptest::prelude::*;

use stokes_kinetic::field::{invert_map, map_point, velocity};
use stokes_kinetic::functionals::{log_grid, FunctionalCurve, FunctionalKind};
use stokes_kinetic::properties::{check_convex, check_log_convex, check_monotone_nonincreasing};
use stokes_kinetic::solver::solve_stokes_wave;
use stokes_kinetic::{ConformalPoint, StokesWave, WaveParameters};

fn wave() -> &'static StokesWave {
    static WAVE: OnceLock<StokesWave> = OnceLock::new();
    WAVE.get_or_init(|| solve_stokes_wave(&WaveParameters::new(10.0, 0.5).with_modes(64)).unwrap())
}

fn curve(p: Vec<f64>, values: Vec<f64>) -> FunctionalCurve {
    FunctionalCurve {
        kind: FunctionalKind::MuS,
        s: 1.0,
        p_grid: p,
        values,
        quadrature_nodes: 0,
        wave_id: String::new(),
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn map_is_periodic_in_q(qf in 0.0..1.0f64, pf in 0.0..2.0f64) {
        let w = wave();
        let cl = w.c * w.lambda;
        let a = map_point(w, ConformalPoint::new(qf * cl, pf * cl));
        let b = map_point(w, ConformalPoint::new(qf * cl + cl, pf * cl));
        prop_assert!((a.x - w.lambda - b.x).abs() < 1e-10 * w.lambda);
        prop_assert!((a.y - b.y).abs() < 1e-10 * w.lambda);
    }

    #[test]
    fn inversion_round_trips(qf in 0.0..1.0f64, pf in 0.0..1.5f64) {
        let w = wave();
        let cl = w.c * w.lambda;
        let pt = ConformalPoint::new(qf * cl, pf * cl);
        let back = invert_map(w, map_point(w, pt)).unwrap();
        let dq = (back.q - pt.q).abs();
        let dq = dq.min((dq - cl).abs());
        prop_assert!(dq < 1e-10 * cl, "q {} -> {}", pt.q, back.q);
        prop_assert!((back.p - pt.p).abs() < 1e-10 * cl);
    }

    #[test]
    fn flow_is_symmetric_about_the_crest(qf in 0.0..1.0f64, pf in 0.0..1.0f64) {
        let w = wave();
        let cl = w.c * w.lambda;
        let a = ConformalPoint::new(qf * cl, pf * cl);
        let b = ConformalPoint::new(-qf * cl, pf * cl);
        let (za, zb) = (map_point(w, a), map_point(w, b));
        prop_assert!((za.x + zb.x).abs() < 1e-10 * w.lambda);
        prop_assert!((za.y - zb.y).abs() < 1e-10 * w.lambda);
        let (va, vb) = (velocity(w, a).unwrap(), velocity(w, b).unwrap());
        prop_assert!((va.u - vb.u).abs() < 1e-10 * w.c);
        prop_assert!((va.v + vb.v).abs() < 1e-10 * w.c);
    }

    #[test]
    fn decaying_exponential_sums_pass_shape_checks(
        terms in prop::collection::vec((0.01..5.0f64, 0.05..3.0f64), 1..5),
        floor in 0.0..2.0f64,
    ) {
        // sums of decaying exponentials are non-increasing, convex and log-convex
        let p = log_grid(1e-3, 4.0, 33);
        let values: Vec<f64> = p
            .iter()
            .map(|x| floor + terms.iter().map(|(a, r)| a * (-r * x).exp()).sum::<f64>())
            .collect();
        let c = curve(p, values);
        prop_assert!(check_monotone_nonincreasing(&c, 1e-9).unwrap().passed);
        prop_assert!(check_convex(&c, 1e-9).unwrap().passed);
        prop_assert!(check_log_convex(&c, 1e-9).unwrap().passed);
    }

    #[test]
    fn increasing_curves_fail_monotonicity(slope in 1e-3..10.0f64) {
        let p = log_grid(1e-3, 4.0, 12);
        let values: Vec<f64> = p.iter().map(|x| 1.0 + slope * x).collect();
        let check = check_monotone_nonincreasing(&curve(p, values), 1e-9).unwrap();
        prop_assert!(!check.passed && check.worst_margin < 0.0);
    }
}
