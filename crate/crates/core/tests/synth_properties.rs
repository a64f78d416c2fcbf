use proptest::prelude::*;
use recall_forensics::correlation::pearson;
use recall_forensics::ingest::{EventTally, GeoPath};
use recall_forensics::metrics::{compute_delta, compute_k, compute_k_max, compute_s, metrics_table, MetricKind};
use recall_forensics::stats::{quantile, sample_variance};
use recall_forensics::synth::{detector_power, generate, Detector, DetectorSettings, Model, SynthConfig};
use recall_forensics::{CenterRecord, Channel, EventId, RngSpec};

fn ks_pairs(cfg: &SynthConfig) -> Vec<(f64, f64)> {
    let (ds, _) = generate(cfg).unwrap();
    ds.centers().iter().filter_map(|c| Some((compute_s::<f64>(c).ok()?, compute_k::<f64>(c).ok()?))).collect()
}

fn k_variance_where(pairs: &[(f64, f64)], keep: impl Fn(f64) -> bool) -> f64 {
    let ks: Vec<f64> = pairs.iter().filter(|(s, _)| keep(*s)).map(|&(_, k)| k).collect();
    sample_variance(&ks).unwrap()
}

#[test]
fn honest_k_spread_shrinks_with_s() {
    let wins = (1..=20u64)
        .filter(|&seed| {
            let pairs = ks_pairs(&SynthConfig::honest(seed));
            let s: Vec<f64> = pairs.iter().map(|p| p.0).collect();
            let (q1, q3) = (quantile(&s, 0.25).unwrap(), quantile(&s, 0.75).unwrap());
            k_variance_where(&pairs, |v| v < q1) > k_variance_where(&pairs, |v| v > q3)
        })
        .count();
    assert!(wins >= 18, "{wins} of 20");
}

#[test]
fn honest_seed42_extreme_strata() {
    let pairs = ks_pairs(&SynthConfig::honest(42));
    assert!(k_variance_where(&pairs, |s| s < 0.1) > k_variance_where(&pairs, |s| s > 0.5));
}

#[test]
fn forced_signatures_track_si() {
    for seed in 1..=20u64 {
        let (ds, report) = generate(&SynthConfig::forced_linear(seed)).unwrap();
        let (x, y): (Vec<f64>, Vec<f64>) =
            ds.centers().iter().map(|c| (c.signatures as f64, c.rr().unwrap().favorable as f64)).unzip();
        let r = pearson(&x, &y).unwrap();
        assert!(r >= 0.98, "seed {seed}: r = {r}");
        assert!(report.clamp_rate <= 0.05);
    }
}

#[test]
fn generation_is_deterministic() {
    for model in [Model::Honest, Model::ForcedLinear] {
        let cfg = SynthConfig { model, ..SynthConfig::honest(77) };
        let (a, ra) = generate(&cfg).unwrap();
        let (b, rb) = generate(&cfg).unwrap();
        assert_eq!(a.centers(), b.centers());
        assert_eq!(ra, rb);
        let (c, _) = generate(&SynthConfig { seed: 78, ..cfg }).unwrap();
        assert_ne!(a.centers(), c.centers());
    }
}

#[test]
fn synthetic_flags_are_consistent() {
    let (ds, _) = generate(&SynthConfig::honest(9)).unwrap();
    let c = ds.centers();
    assert_eq!(c.iter().filter(|c| c.selected_192).count(), 192);
    assert_eq!(c.iter().filter(|c| c.audited_26).count(), 26);
    assert_eq!(c.iter().filter(|c| c.cold_audited).count(), 150);
    assert!(c.iter().all(|c| !c.audited_26 || c.selected_192));
    assert!(c.iter().all(|c| !c.selected_192 || (c.in_20_counties && c.channel == Channel::Computerized)));
    // Every generated row passes the reader's validation.
    let text = recall_forensics::ingest::emit_centers(&ds).unwrap();
    let back = recall_forensics::ingest::read_centers(text.as_bytes(), None, "round trip").unwrap();
    assert_eq!(back.centers(), ds.centers());
}

#[test]
fn power_is_reproducible() {
    let grid = [
        SynthConfig { n_centers: 400, ..SynthConfig::honest(0) },
        SynthConfig { n_centers: 400, ..SynthConfig::forced_linear(0) },
    ];
    let settings = DetectorSettings { perm_replicates: 300, ..Default::default() };
    let a = detector_power(&grid, &Detector::ALL, 6, RngSpec::new(100), &settings).unwrap();
    let b = detector_power(&grid, &Detector::ALL, 6, RngSpec::new(100), &settings).unwrap();
    assert_eq!(a, b);
    assert_eq!(a.len(), 6);
    let forced_flat = a.iter().find(|r| r.cell == 1 && r.detector == Detector::WindowedFlatness).unwrap();
    assert_eq!(forced_flat.flagged, 6);
}

#[test]
fn mini_metrics_table_excludes_zero_vote_centers() {
    let zero = CenterRecord::new("1", GeoPath::new("A", "B", "C"), Channel::Manual, 0, EventTally::new(0, 0, 0));
    let ok = CenterRecord::new("2", GeoPath::new("A", "B", "C"), Channel::Manual, 0, EventTally::new(3, 2, 1));
    let ds = recall_forensics::Dataset::new(vec![zero, ok], "t").unwrap();
    let t = metrics_table::<f64>(&ds);
    assert_eq!(t.rows.len(), 1);
    assert_eq!(t.rows[0].1.k, None);
    let kinds: Vec<_> = t.exclusions.iter().map(|e| (e.code.as_str(), e.metric)).collect();
    assert_eq!(kinds, [("1", MetricKind::S), ("2", MetricKind::K), ("2", MetricKind::KMax)]);
}

fn center(sigs: u64, fav: u64, unf: u64, null: u64) -> CenterRecord {
    CenterRecord::new("0001", GeoPath::new("S", "C", "T"), Channel::Manual, sigs, EventTally::new(fav, unf, null))
}

proptest! {
    #[test]
    fn k_bounded_by_k_max(fav in 0u64..5000, unf in 0u64..5000, null in 0u64..50, frac in 0.0f64..=1.0) {
        prop_assume!(fav + unf + null > 0);
        let sigs = (fav as f64 * frac).floor() as u64;
        prop_assume!(sigs > 0);
        let c = center(sigs, fav, unf, null);
        let s: f64 = compute_s(&c).unwrap();
        let k: f64 = compute_k(&c).unwrap();
        prop_assert!(k >= 1.0 - 1e-12);
        prop_assert!(k <= compute_k_max(s).unwrap() * (1.0 + 1e-12));
        prop_assert!(k * s <= 1.0 + 1e-12);
        prop_assert!((compute_k_max(s).unwrap() * s - 1.0).abs() < 1e-12);
    }

    #[test]
    fn ratios_invariant_under_scaling(fav in 1u64..2000, unf in 0u64..2000, null in 0u64..20, sigs in 1u64..2000, m in 2u64..50) {
        let a = center(sigs, fav, unf, null);
        let b = center(sigs * m, fav * m, unf * m, null * m);
        let (ka, kb): (f64, f64) = (compute_k(&a).unwrap(), compute_k(&b).unwrap());
        let (sa, sb): (f64, f64) = (compute_s(&a).unwrap(), compute_s(&b).unwrap());
        prop_assert!((ka - kb).abs() <= 1e-12 * ka.abs().max(1.0));
        prop_assert!((sa - sb).abs() <= 1e-12 * sa.abs().max(1.0));
    }

    #[test]
    fn delta_antisymmetric(a in (0u64..3000, 1u64..3000), b in (0u64..3000, 1u64..3000)) {
        let mut c = center(1, a.0, a.1, 0);
        c.tallies.insert(EventId::E1998, EventTally::new(b.0, b.1, 0));
        let mut swapped = center(1, b.0, b.1, 0);
        swapped.tallies.insert(EventId::E1998, EventTally::new(a.0, a.1, 0));
        let d: f64 = compute_delta(&c).unwrap();
        let e: f64 = compute_delta(&swapped).unwrap();
        prop_assert!((d + e).abs() < 1e-9);
    }

    #[test]
    fn f32_agrees_with_f64(fav in 1u64..100_000, unf in 0u64..100_000, sigs in 1u64..100_000) {
        let c = center(sigs, fav, unf, 0);
        let k64: f64 = compute_k(&c).unwrap();
        let k32: f32 = compute_k(&c).unwrap();
        prop_assert!(((k32 as f64) - k64).abs() <= 1e-6 * k64.abs().max(1.0));
    }
}
