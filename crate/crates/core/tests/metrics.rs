use std::f64::consts::PI;

use pc2dae_core::baselines::filters::{kalman_1d, kalman_steady_prior, moving_average, savitzky_golay};
use pc2dae_core::baselines::wavelet::{wavedec, wavelet_denoise, waverec, DB4};
use pc2dae_core::baselines::*;
use pc2dae_core::metrics::*;
use pc2dae_core::pipeline::simulate;
use pc2dae_core::rng::stream;
use pc2dae_core::sim::{CorruptionConfig, ScenarioConfig};
use pc2dae_core::{Family, SeriesFrame, N_TARGETS};
use proptest::prelude::*;
use rand::Rng;
use rand_distr::StandardNormal;

/// Direct O(n^2) DFT of the mean-removed, periodic-Hann-windowed series.
fn dft_power(y: &[f64]) -> Vec<f64> {
    let n = y.len();
    let mean = y.iter().sum::<f64>() / n as f64;
    let x: Vec<f64> = y.iter().enumerate().map(|(i, v)| (v - mean) * (0.5 - 0.5 * (2.0 * PI * i as f64 / n as f64).cos())).collect();
    (0..=n / 2)
        .map(|k| {
            let (mut re, mut im) = (0.0, 0.0);
            for (t, &v) in x.iter().enumerate() {
                let a = -2.0 * PI * (k * t) as f64 / n as f64;
                re += v * a.cos();
                im += v * a.sin();
            }
            re * re + im * im
        })
        .collect()
}

fn noise(seed: u64, n: usize, sd: f64) -> Vec<f64> {
    let mut r = stream(seed, "test.noise");
    (0..n).map(|_| sd * r.sample::<f64, _>(StandardNormal)).collect()
}

#[test]
fn periodogram_and_hf_match_a_direct_dft() {
    for (seed, n) in [(1, 257), (2, 512), (3, 1000)] {
        let y: Vec<f64> = noise(seed, n, 1.0).iter().enumerate().map(|(i, v)| v + (i as f64 * 0.03).sin() * 4.0).collect();
        let fast = periodogram(&y);
        let slow = dft_power(&y);
        let scale = slow.iter().cloned().fold(0.0, f64::max);
        assert_eq!(fast.len(), slow.len());
        for (a, b) in fast.iter().zip(&slow) {
            assert!((a - b).abs() <= 1e-9 * scale, "{a} vs {b}");
        }
        let out: Vec<f64> = y.iter().map(|v| 0.5 * v).collect();
        let hf = |p: &[f64]| p.iter().enumerate().filter(|(k, _)| *k as f64 / n as f64 > 0.125).map(|(_, v)| v).sum::<f64>();
        let expect = 100.0 * (1.0 - hf(&dft_power(&out)) / hf(&slow));
        assert!((hf_reduction(&y, &out).unwrap() - expect).abs() < 1e-9);
        assert!((expect - 75.0).abs() < 1e-9);
    }
}

#[test]
fn hf_examples() {
    let n = 400;
    let fast: Vec<f64> = (0..n).map(|t| (2.0 * PI * 0.25 * t as f64).sin() + (0.5 * PI * t as f64).cos()).collect();
    assert_eq!(hf_reduction(&fast, &fast), Some(0.0));
    assert_eq!(hf_reduction(&fast, &vec![0.0; n]), Some(100.0));
    let slow: Vec<f64> = (0..n).map(|t| (2.0 * PI * 0.05 * t as f64).sin()).collect();
    assert_eq!(hf_reduction(&slow, &slow), None);
}

#[test]
fn tv_matches_a_loop_and_doubling_increments_gives_minus_100() {
    let y = noise(4, 300, 2.0);
    let mut tv = 0.0;
    for i in 1..y.len() {
        tv += (y[i] - y[i - 1]).abs();
    }
    assert!((total_variation(&y) - tv).abs() <= 1e-12 * tv);
    let doubled: Vec<f64> = y.iter().map(|v| 2.0 * v + 7.0).collect();
    assert!((smoothness_improvement(&y, &doubled).unwrap() + 100.0).abs() < 1e-9);
}

#[test]
fn violation_mae_and_snr_examples() {
    assert_eq!(violation_rate(&[-1.0, 0.0, 1.0, 2.0]), 25.0);
    assert_eq!(violation_rate(&[-1.0; 8]), 100.0);
    let clean: Vec<f64> = (0..200).map(|t| 5.0 + (t as f64 * 0.1).sin()).collect();
    let noisy: Vec<f64> = clean.iter().zip(noise(5, 200, 0.3)).map(|(c, e)| c + e).collect();
    assert_eq!(mae_improvement(&noisy, &clean, &clean), Some(100.0));
    assert_eq!(snr_improvement(&noisy, &clean, &clean), Some(SNR_CEILING_DB));
    assert_eq!(mae_improvement(&noisy, &noisy, &clean), Some(0.0));
    assert_eq!(snr_improvement(&noisy, &noisy, &clean), Some(0.0));
    // Halving the error improves MAE by 50% and SNR by 20 log10(2) dB.
    let half: Vec<f64> = clean.iter().zip(&noisy).map(|(c, n)| c + 0.5 * (n - c)).collect();
    assert!((mae_improvement(&noisy, &half, &clean).unwrap() - 50.0).abs() < 1e-9);
    assert!((snr_improvement(&noisy, &half, &clean).unwrap() - 20.0 * 2f64.log10()).abs() < 1e-9);
}

fn pinned(duration_s: usize) -> (SeriesFrame, SeriesFrame) {
    simulate(&ScenarioConfig { duration_s, ..Default::default() }, &CorruptionConfig::default(), 7).unwrap()
}

#[test]
fn evaluate_identity_and_aggregation() {
    let (clean, noisy) = pinned(2000);
    let r = evaluate(&noisy, &noisy, Some(&clean)).unwrap();
    for c in &r.channels {
        assert!(c.smoothness_improvement.is_none_or(|v| v == 0.0));
        assert!(c.hf_reduction.is_none_or(|v| v == 0.0));
        assert!(c.mae_improvement.is_none_or(|v| v == 0.0));
        assert!(c.snr_improvement.is_none_or(|v| v == 0.0));
        assert!((0.0..=100.0).contains(&c.violation_rate));
    }
    let den = apply_to_frame(&BaselineSpec::MovingAvg { window: 11 }, &noisy).unwrap();
    let r = evaluate(&noisy, &den, Some(&clean)).unwrap();
    for f in Family::ALL {
        let members: Vec<_> = r.channels.iter().filter(|c| c.family == f).collect();
        assert_eq!(members.len(), f.n_channels());
        let mean = members.iter().map(|c| c.mae_improvement.unwrap()).sum::<f64>() / members.len() as f64;
        assert!((r.families.get(f).mae_improvement.unwrap() - mean).abs() < 1e-9);
        let neg = members.iter().map(|c| c.violation_rate).sum::<f64>() / members.len() as f64;
        assert!((r.family_violation(f) - neg).abs() < 1e-9);
    }
    let overall = Family::ALL.iter().map(|&f| r.families.get(f).smoothness_improvement.unwrap()).sum::<f64>() / 3.0;
    assert!((r.overall.smoothness_improvement.unwrap() - overall).abs() < 1e-9);
    let table = report_table(&r);
    assert_eq!(table.lines().count(), 5);
    assert!(evaluate(&noisy, &noisy.slice(0, 100), None).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn metrics_are_invariant_to_positive_rescaling(
        x in prop::collection::vec(-10.0f64..10.0, 64..200),
        k in 0.01f64..100.0,
        seed in 0u64..1000,
    ) {
        let y: Vec<f64> = x.iter().zip(noise(seed, x.len(), 0.5)).map(|(a, e)| 0.5 * a + e).collect();
        let clean: Vec<f64> = x.iter().map(|v| v * 0.9).collect();
        let s = |v: &[f64]| v.iter().map(|a| a * k).collect::<Vec<_>>();
        let close = |a: Option<f64>, b: Option<f64>| match (a, b) {
            (Some(a), Some(b)) => (a - b).abs() <= 1e-7 * a.abs().max(1.0),
            (None, None) => true,
            _ => false,
        };
        prop_assert!(close(smoothness_improvement(&x, &y), smoothness_improvement(&s(&x), &s(&y))));
        prop_assert!(close(hf_reduction(&x, &y), hf_reduction(&s(&x), &s(&y))));
        prop_assert!(close(mae_improvement(&x, &y, &clean), mae_improvement(&s(&x), &s(&y), &s(&clean))));
        prop_assert!(close(snr_improvement(&x, &y, &clean), snr_improvement(&s(&x), &s(&y), &s(&clean))));
        prop_assert_eq!(violation_rate(&y), violation_rate(&s(&y)));
        let v = violation_rate(&y);
        prop_assert!((0.0..=100.0).contains(&v));
    }
}

#[test]
fn moving_average_matches_a_nested_loop() {
    let y = noise(6, 101, 1.0);
    for w in [1, 3, 5, 11] {
        let out = moving_average(&y, w).unwrap();
        let h = (w / 2) as i64;
        for t in 0..y.len() as i64 {
            let mut acc = 0.0;
            for k in -h..=h {
                acc += y[(t + k).clamp(0, y.len() as i64 - 1) as usize];
            }
            assert!((out[t as usize] - acc / w as f64).abs() < 1e-12);
        }
    }
}

#[test]
fn savitzky_golay_reproduces_low_order_polynomials() {
    let quad: Vec<f64> = (0..60).map(|t| 0.3 * (t * t) as f64 - 2.0 * t as f64 + 5.0).collect();
    let out = savitzky_golay(&quad, 7, 2).unwrap();
    assert!(out.iter().zip(&quad).all(|(a, b)| (a - b).abs() < 1e-9 * b.abs().max(1.0)));
    let cubic: Vec<f64> = (0..60).map(|t| 1e-3 * (t as f64).powi(3)).collect();
    let out = savitzky_golay(&cubic, 11, 3).unwrap();
    assert!(out.iter().zip(&cubic).all(|(a, b)| (a - b).abs() < 1e-9 * b.abs().max(1.0)));
    assert!(savitzky_golay(&[4.0; 30], 11, 3).unwrap().iter().all(|v| (v - 4.0).abs() < 1e-12));
}

#[test]
fn kalman_limits_and_riccati_gain() {
    let y = noise(7, 300, 1.0);
    let out = kalman_1d(&y, 1.0, 1e-12).unwrap();
    assert!(out.iter().zip(&y).all(|(a, b)| (a - b).abs() < 1e-9));
    let flat = kalman_1d(&[3.0; 200], 0.1, 1.0).unwrap();
    assert!(flat.iter().all(|&v| (v - 3.0).abs() < 1e-12));

    // Steady prior P solves P = P r / (P + r) + q; found here by bisection.
    let (q, r) = (0.02, 1.5);
    let (mut lo, mut hi) = (q, 1e3);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid * r / (mid + r) + q > mid { lo = mid } else { hi = mid }
    }
    assert!((kalman_steady_prior(q, r) - lo).abs() < 1e-10);
    let gain = lo / (lo + r);
    let mut step = vec![0.0; 2000];
    step.push(1.0);
    let out = kalman_1d(&step, q, r).unwrap();
    assert!((out[2000] - gain).abs() < 1e-10, "{} vs {gain}", out[2000]);

    // q -> 0 on constant plus noise approaches the running mean.
    let z: Vec<f64> = noise(8, 400, 1.0).iter().map(|e| 10.0 + e).collect();
    let out = kalman_1d(&z, 1e-14, 1.0).unwrap();
    let mean = z.iter().sum::<f64>() / z.len() as f64;
    assert!((out[399] - mean).abs() < 1e-3);
}

#[test]
fn wavelet_reconstruction_zero_and_noise_energy() {
    let x = noise(9, 512, 1.0);
    let (d, a) = wavedec(&x, &DB4, 4).unwrap();
    let back = waverec(&d, &a, &DB4);
    assert!(back.iter().zip(&x).all(|(p, q)| (p - q).abs() < 1e-10));
    let energy = |v: &[f64]| v.iter().map(|a| a * a).sum::<f64>();
    let coeff: f64 = d.iter().map(|v| energy(v)).sum::<f64>() + energy(&a);
    assert!((coeff - energy(&x)).abs() < 1e-9 * energy(&x));

    assert!(wavelet_denoise(&vec![0.0; 300], 4).unwrap().iter().all(|&v| v == 0.0));
    let mut ratio = 0.0;
    for seed in 0..20 {
        let y = noise(100 + seed, 1000, 1.0);
        let out = wavelet_denoise(&y, 4).unwrap();
        assert_eq!(out.len(), 1000);
        let r = energy(&out) / energy(&y);
        assert!(r < 1.0);
        ratio += r / 20.0;
    }
    assert!(ratio < 0.1, "mean energy ratio {ratio}");
}

#[test]
fn comparison_rows_follow_the_table_semantics() {
    let (clean, noisy) = pinned(3000);
    let table = run_comparison(&noisy, &clean, &BaselineConfig::default().methods(), &[("truth", &clean)]).unwrap();
    assert_eq!(table.rows.len(), 2 + BaselineConfig::default().methods().len());
    let raw = table.row("raw").unwrap();
    assert_eq!(raw.overall.mae_improvement, Some(0.0));
    assert_eq!(raw.overall.snr_improvement, Some(0.0));
    let raw_neg = raw.families.bc.violation_rate.unwrap();
    assert!(raw_neg > 20.0);
    for m in BaselineConfig::default().methods() {
        let row = table.row(&m.name()).unwrap();
        let neg = row.families.bc.violation_rate.unwrap();
        assert!((neg - raw_neg).abs() < 5.0, "{}: {neg} vs raw {raw_neg}", m.name());
    }
    let truth = table.row("truth").unwrap();
    assert_eq!(truth.overall.violation_rate, Some(0.0));
    assert_eq!(truth.overall.mae_improvement, Some(100.0));
    assert_eq!(table.rows[0].method, "truth");
    assert!(table.to_text().lines().count() == table.rows.len() + 1);
    assert!(clean.targets.iter().take(N_TARGETS).flatten().all(|&v| v >= 0.0));
}
