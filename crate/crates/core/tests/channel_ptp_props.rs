use fadenet::channel::{ergodic_capacity_csir, success_prob, waterfilling_capacity, DEFAULT_TOL};
use fadenet::numerics::{lambert_w, maximize_1d, RealInterval};
use fadenet::ptp::{
    fixed_rate_optimum, fixed_rate_throughput, infinite_layer_throughput, layered_throughput, marginal_throughput,
    optimize_two_layer, FixedRateMarginal, LayeredScheme,
};
use proptest::prelude::*;

fn db(x: f64) -> f64 {
    10f64.powf(x / 10.0)
}

#[test]
fn fixed_rate_optimum_matches_line_search() {
    for k in 0..50 {
        let snr = db(-10.0 + 50.0 * k as f64 / 49.0);
        let opt = fixed_rate_optimum(snr, 1.0).unwrap();
        let (r, f) = maximize_1d(
            |r| fixed_rate_throughput(r, snr, 1.0),
            RealInterval::new(0.0, 2.0 * opt.rate + 1.0).unwrap(),
            256,
            4,
        )
        .unwrap();
        assert!((r - opt.rate).abs() < 1e-6, "snr {snr}: {r} vs {}", opt.rate);
        assert!((f - opt.throughput).abs() < 1e-10);
    }
}

proptest! {
    #[test]
    fn success_prob_is_a_monotone_probability(
        r in 0.01f64..4.0,
        dr in 1e-3f64..1.0,
        p in 0.1f64..1e4,
        s in 0.05f64..1.0,
        scale in 1.001f64..3.0,
    ) {
        let base = success_prob(r, p, s);
        prop_assert!((0.0..=1.0).contains(&base));
        prop_assert!(success_prob(r + dr, p, s) < base);
        prop_assert!(success_prob(r, p * scale, s) > base);
        prop_assert!(success_prob(r, p, (s * scale).min(1.0)) >= base);
    }

    #[test]
    fn success_at_optimum_matches_lambert_form(p in 0.1f64..1e4, s in 0.05f64..1.0) {
        let opt = fixed_rate_optimum(p, s).unwrap();
        let w = lambert_w(p * s).unwrap();
        let expect = (-1.0 / w).exp() * (1.0 / (p * s)).exp();
        prop_assert!((success_prob(opt.rate, p, s) - expect).abs() < 1e-10);
    }

    #[test]
    fn layered_throughput_is_continuous(
        r1 in 0.5f64..3.0,
        frac in 0.05f64..0.95,
        alpha in 0.05f64..0.95,
        p in 1.0f64..1000.0,
        dir in prop::collection::vec(-1.0f64..1.0, 3),
    ) {
        let r2 = r1 * frac;
        let h = 1e-7;
        let base = layered_throughput(&LayeredScheme::two_layer(r1, r2, alpha, p).unwrap(), p, 1.0).unwrap();
        let moved = LayeredScheme::two_layer(r1 + h * dir[0], r2 + h * dir[1], alpha + h * dir[2], p).unwrap();
        let f = layered_throughput(&moved, p, 1.0).unwrap();
        // rates enter through exp and log2 with slopes bounded by a few units
        // on this box; 10 per unit step is a loose Lipschitz constant
        prop_assert!((f - base).abs() <= 10.0 * 3.0 * h);
    }

    #[test]
    fn scheme_ordering(snr_db in -10.0f64..40.0) {
        let p = db(snr_db);
        let fixed = fixed_rate_optimum(p, 1.0).unwrap().throughput;
        let two = optimize_two_layer(p, 1.0).unwrap().throughput;
        let inf = infinite_layer_throughput(p, 1.0, 1e-10).unwrap();
        let csir = ergodic_capacity_csir(p, 1.0, DEFAULT_TOL).unwrap();
        let csirt = waterfilling_capacity(p, 1.0, DEFAULT_TOL).unwrap();
        prop_assert!(fixed <= two + 1e-6);
        prop_assert!(two <= inf + 1e-6);
        prop_assert!(inf <= csir + 1e-6);
        prop_assert!(csir <= csirt + 1e-6);
    }

    #[test]
    fn fixed_marginal_reproduces_fixed_rate(r in 0.01f64..4.0, snr_db in -10.0f64..40.0) {
        let p = db(snr_db);
        let m = FixedRateMarginal { rate: r, power: p };
        let f = marginal_throughput(&m, p, 1.0, 1e-12).unwrap();
        prop_assert!((f - fixed_rate_throughput(r, p, 1.0)).abs() < 1e-8);
    }
}
