use proptest::prelude::*;
use uavsec::config::{ConfigFile, ScenarioConfig};
use uavsec::evaluation::{
    capacity_sweep, eve_snr, hover_radiation_map, radiation_map, secrecy_rate_mc, snr_per_stream, Cell, GroundGrid,
};
use uavsec::geometry::array_from_spec;
use uavsec::linalg::{CMat, CVec, C64};
use uavsec::optimizer::zf_precoder;
use uavsec::topology::topology_from_config;

fn pair() -> (CMat, CMat) {
    let h = CMat::from_row_slice(
        2,
        3,
        &[
            C64::new(1.0, 0.2),
            C64::new(-0.3, 0.5),
            C64::new(0.1, -0.7),
            C64::new(0.4, 0.4),
            C64::new(0.9, -0.1),
            C64::new(-0.6, 0.2),
        ],
    );
    let w = zf_precoder(&h, 20.0, 1.0).unwrap();
    (h, w)
}

#[test]
fn snr_trivial_cases() {
    let (h, w) = pair();
    for s in snr_per_stream(&h, &w, 1.0) {
        assert!((s - 20.0).abs() < 1e-9);
    }
    assert!(snr_per_stream(&h, &CMat::zeros(3, 2), 1.0).iter().all(|&s| s == 0.0));
    let i = CMat::identity(3, 3);
    assert!(snr_per_stream(&i, &i, 1.0).iter().all(|&s| (s - 1.0).abs() < 1e-15));
}

#[test]
fn eve_snr_zero_cases() {
    let (_, w) = pair();
    let he = CVec::from_vec(vec![C64::new(0.3, 0.1); 3]);
    assert_eq!(eve_snr(&he, &CMat::zeros(3, 2), 1.0), 0.0);
    assert!((eve_snr(&he, &(&w * C64::new(2.0, 0.0)), 1.0) - 4.0 * eve_snr(&he, &w, 1.0)).abs() < 1e-12);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn secrecy_nonincreasing_in_eves(seed in any::<u64>()) {
        let (h, w) = pair();
        let mut last = f64::INFINITY;
        for q in 0..=4 {
            let r = secrecy_rate_mc(&h, &w, 1.0, 0.5, q, 100, seed).unwrap().mean;
            prop_assert!(r <= last + 1e-12);
            last = r;
        }
    }
}

#[test]
fn secrecy_upper_bound_and_determinism() {
    let (h, w) = pair();
    let ub: f64 = snr_per_stream(&h, &w, 1.0).iter().map(|s| (1.0 + s).log2()).sum();
    assert!((secrecy_rate_mc(&h, &w, 1.0, 1.0, 0, 100, 3).unwrap().mean - ub).abs() < 1e-12);
    let a = secrecy_rate_mc(&h, &w, 1.0, 0.2, 3, 300, 9).unwrap();
    let b = secrecy_rate_mc(&h, &w, 1.0, 0.2, 3, 300, 9).unwrap();
    assert_eq!(a, b);
}

#[test]
fn secrecy_std_error_scales_with_samples() {
    let (h, w) = pair();
    let small = secrecy_rate_mc(&h, &w, 1.0, 0.2, 3, 500, 11).unwrap();
    let large = secrecy_rate_mc(&h, &w, 1.0, 0.2, 3, 8000, 11).unwrap();
    let ratio = small.std_error / large.std_error;
    assert!((ratio / 4.0 - 1.0).abs() < 0.2, "ratio {ratio}");

    // Batch means of 500-sample runs spread like the reported standard error.
    let means: Vec<f64> = (0..40u64)
        .map(|b| secrecy_rate_mc(&h, &w, 1.0, 0.2, 3, 500, 1000 + b).unwrap().mean)
        .collect();
    let mu = means.iter().sum::<f64>() / 40.0;
    let sd = (means.iter().map(|m| (m - mu).powi(2)).sum::<f64>() / 39.0).sqrt();
    assert!((sd / small.std_error - 1.0).abs() < 0.4, "batch sd {sd} vs {}", small.std_error);
}

#[test]
fn capacity_grows_with_snr() {
    let mut cfg = ScenarioConfig::reference();
    cfg.experiments.capacity_sizes = vec![4];
    let sweep = capacity_sweep(&cfg).unwrap();
    let ula = sweep.select("topology", &Cell::Text("ula".into()));
    for pair in ula.windows(2) {
        if pair[0].0[2] == pair[1].0[2] {
            assert!(pair[1].1 >= pair[0].1);
        }
    }
}

#[test]
fn map_scales_with_precoder_power() {
    let cfg = ScenarioConfig::reference();
    let axes: Vec<Vec<f64>> = topology_from_config(&cfg)
        .unwrap()
        .iter()
        .map(|t| t.as_slice().to_vec())
        .collect();
    let array = array_from_spec(&cfg, &axes).unwrap();
    let w = CMat::from_fn(cfg.array.n, 2, |r, c| C64::new(0.01 * (r + c) as f64, 0.02));
    let grid = GroundGrid {
        center: cfg.bs.position,
        half_width: 5.0,
        step: 1.0,
    };
    let radio = (&cfg).into();
    let a = radiation_map(&w, &array, cfg.bs.position, cfg.altitude, radio, cfg.sigma2, &grid).unwrap();
    let w2 = &w * C64::new(2f64.sqrt(), 0.0);
    let b = radiation_map(&w2, &array, cfg.bs.position, cfg.altitude, radio, cfg.sigma2, &grid).unwrap();
    for (x, y) in a.snr.iter().zip(&b.snr) {
        let db = 10.0 * (y / x).log10();
        assert!((db - 10.0 * 2f64.log10()).abs() < 1e-9);
    }
}

#[test]
fn optimized_map_peaks_at_bs() {
    let mut f = ConfigFile::default();
    f.array.k = Some(1);
    let cfg = f.resolve().unwrap();
    let grid = GroundGrid {
        center: cfg.bs.position,
        half_width: 20.0,
        step: 1.0,
    };
    let (map, _) = hover_radiation_map(&cfg, cfg.bs.position, &grid).unwrap();
    let (px, py) = map.argmax();
    let (bx, by) = map.nearest(cfg.bs.position);
    assert!(px.abs_diff(bx) <= 1 && py.abs_diff(by) <= 1);
    let at_bs = 10.0 * map.value(bx, by).log10();
    assert!((at_bs - 14.0).abs() <= 0.5, "{at_bs}");
}
