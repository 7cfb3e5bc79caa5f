#![allow(clippy::needless_range_loop)]

use pc2dae_core::autodiff::Tensor;
use pc2dae_core::data::window::{inference_origins, window_origins, windows_at};
use pc2dae_core::data::*;
use pc2dae_core::pipeline::simulate;
use pc2dae_core::sim::{CorruptionConfig, ScenarioConfig};
use pc2dae_core::{SeriesFrame, N_TARGETS};
use proptest::prelude::*;

fn pinned(duration_s: usize) -> (SeriesFrame, SeriesFrame) {
    simulate(&ScenarioConfig { duration_s, ..Default::default() }, &CorruptionConfig::default(), 7).unwrap()
}

fn bits(f: &SeriesFrame) -> Vec<u64> {
    f.targets.iter().chain(&f.env).flatten().chain(&f.timestamps).map(|v| v.to_bits()).collect()
}

#[test]
fn csv_round_trip_is_bit_exact_with_masks() {
    let (_, noisy) = pinned(7894);
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("noisy.csv");
    write_csv(&noisy, &path).unwrap();
    let back = read_csv(&path).unwrap();
    assert_eq!(back.len(), 7894);
    assert_eq!(bits(&back), bits(&noisy));
    assert_eq!(back.stale, noisy.stale);
    assert_eq!(back.missing, noisy.missing);
    assert!(noisy.missing.iter().flatten().any(|&m| m));
    assert!(noisy.stale.iter().flatten().any(|&s| s));
    let text = std::fs::read_to_string(&path).unwrap();
    assert!(!text.contains('\r'));
    assert!(text.starts_with("t,bc_"));
}

#[test]
fn one_blank_cell_masks_only_that_entry() {
    let (clean, _) = pinned(300);
    let mut buf = Vec::new();
    write_csv_to(&clean, &mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    let mut lines: Vec<String> = text.lines().map(String::from).collect();
    let mut cells: Vec<String> = lines[43].split(',').map(String::from).collect();
    cells[6] = String::new();
    lines[43] = cells.join(",");
    let f = read_csv_from((lines.join("\n") + "\n").as_bytes()).unwrap();
    let masked: Vec<(usize, usize)> =
        (0..N_TARGETS).flat_map(|c| (0..f.len()).map(move |t| (c, t))).filter(|&(c, t)| f.missing[c][t]).collect();
    assert_eq!(masked, vec![(5, 42)]);
    assert!(f.targets[5][42].is_nan());
    assert_eq!(f.targets[5][41], clean.targets[5][41]);
}

#[test]
fn schema_errors_list_absent_columns() {
    let err = read_csv_from("t,bc_uv\n0,1\n".as_bytes()).unwrap_err().to_string();
    assert!(err.contains("gas_co") && err.contains("env_p"), "{err}");
}

#[test]
fn normalize_inverts_and_halves_at_p99() {
    let (_, noisy) = pinned(3000);
    let (norm, rec) = normalize(&noisy).unwrap();
    let back = denormalize(&norm, &rec);
    for c in 0..N_TARGETS {
        for t in 0..noisy.len() {
            let (a, b) = (noisy.targets[c][t], back.targets[c][t]);
            assert!((a.is_nan() && b.is_nan()) || (a - b).abs() <= 1e-12 * a.abs().max(f64::MIN_POSITIVE), "{a} {b}");
        }
    }
    for e in 0..3 {
        let x = &norm.env[e];
        let m = x.iter().sum::<f64>() / x.len() as f64;
        assert!(m.abs() < 1e-9);
    }

    // 200 samples: nearest-rank p99 is the 198th smallest value, 2000.
    let mut f = SeriesFrame::zeros(200);
    for c in 0..N_TARGETS {
        f.targets[c] = (0..200).map(|t| if t < 3 { 2000.0 } else { 1000.0 }).collect();
    }
    let (n, rec) = normalize(&f).unwrap();
    assert_eq!(rec.target_scale[0], 2000.0);
    assert_eq!(n.targets[0][100], 0.5);
}

#[test]
fn window_count_and_disjoint_stride() {
    assert_eq!(window_origins(7894, 64).unwrap().len(), 122);
    let o = window_origins(1000, 128).unwrap();
    assert!(o.windows(2).all(|w| w[1] - w[0] == WINDOW));
    assert!(window_origins(127, 64).is_err());
}

#[test]
fn stale_co2_sample_has_zero_weight_in_every_covering_window() {
    let (_, noisy) = pinned(1000);
    let p = prepare(&noisy, None).unwrap();
    let windows = make_windows(&p, 64).unwrap();
    let c = 13;
    let t = (1..1000).find(|&t| noisy.stale[c][t]).unwrap();
    let mut covered = 0;
    for w in &windows {
        if (w.origin..w.origin + WINDOW).contains(&t) {
            covered += 1;
            assert_eq!(w.weight[c * WINDOW + (t - w.origin)], 0.0);
        }
    }
    assert!(covered >= 1);
    assert!(windows.iter().all(|w| w.weight.iter().all(|&v| v == 0.0 || v == 1.0)));
}

#[test]
fn windowing_then_stitching_reconstructs_the_series() {
    let (clean, _) = pinned(1500);
    let p = prepare(&clean, None).unwrap();
    let origins = inference_origins(clean.len(), 64).unwrap();
    let batch = WindowBatch::from_windows(&windows_at(&p, &origins));
    let out = stitch(&batch.inputs, &origins, clean.len()).unwrap();
    for c in 0..N_TARGETS {
        for t in 0..clean.len() {
            assert!((out[c][t] - clean.targets[c][t]).abs() <= 1e-12 * clean.targets[c][t].abs().max(1.0));
        }
    }
}

#[test]
fn stitch_examples() {
    let single = Tensor::from_fn(&[1, 2, WINDOW], |i| i as f64);
    let s = stitch(&single, &[0], WINDOW).unwrap();
    assert_eq!(s[1][5], (WINDOW + 5) as f64);

    let half = WINDOW / 2;
    let two = Tensor::from_fn(&[2, 1, WINDOW], |i| if i < WINDOW { 0.0 } else { 2.0 });
    let s = stitch(&two, &[0, half], WINDOW + half).unwrap();
    assert!(s[0][..half].iter().all(|&v| v == 0.0));
    assert!(s[0][half..WINDOW].iter().all(|&v| v == 1.0));
    assert!(s[0][WINDOW..].iter().all(|&v| v == 2.0));

    let ones = Tensor::from_fn(&[2, 1, WINDOW], |_| 1.0);
    assert!(stitch(&ones, &[0, half], WINDOW + half).unwrap()[0].iter().all(|&v| v == 1.0));
    let err = stitch(&ones, &[0, 2 * WINDOW], 3 * WINDOW).unwrap_err().to_string();
    assert!(err.contains(&format!("[{WINDOW}, {})", 2 * WINDOW)), "{err}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn positivity_survives_normalize_denormalize_and_stitch(
        values in prop::collection::vec(0.0f64..1e5, 300),
        shift in 1usize..64,
    ) {
        let mut f = SeriesFrame::zeros(300);
        for c in 0..N_TARGETS {
            f.targets[c] = values.iter().map(|v| v + c as f64).collect();
        }
        let (n, rec) = normalize(&f).unwrap();
        prop_assert!(n.targets.iter().flatten().all(|&v| v >= 0.0));
        let d = denormalize(&n, &rec);
        prop_assert!(d.targets.iter().flatten().all(|&v| v >= 0.0));

        let p = prepare(&n, None).unwrap();
        let mut origins = window_origins(300, shift).unwrap();
        if *origins.last().unwrap() + WINDOW < 300 {
            origins.push(300 - WINDOW);
        }
        let batch = WindowBatch::from_windows(&windows_at(&p, &origins));
        let s = stitch(&batch.inputs, &origins, 300).unwrap();
        prop_assert!(s.iter().flatten().all(|&v| v >= 0.0));
    }
}
