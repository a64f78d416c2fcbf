//! Acceptance checks, one line per criterion. Criterion 8 runs only when
//! `RRFORENSICS_FULL_DATASET` names the published center-level CSV.

use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::{Duration, Instant};

use recall_forensics::audit::{cold_audit_compare, hot_audit_report};
use recall_forensics::correlation::{median_split_rs, table1, GeoAggregate, SplitSpec, Stratum};
use recall_forensics::ingest::{read_centers, EventTally, GeoPath};
use recall_forensics::metrics::{compute_k, compute_k_max, compute_s};
use recall_forensics::significance::{ks_pvalue, ks_two_sample, perm_test_rstar, subsample_mean_test};
use recall_forensics::stats::{pearson, quantile, sample_variance};
use recall_forensics::synth::{detector_power, generate, Detector, DetectorSettings, SynthConfig};
use recall_forensics::{CenterRecord, Channel, EventId, GeoLevel, RngSpec};

enum Verdict {
    Pass(String),
    Fail(String),
    Skip(String),
}

fn verdict(ok: bool, detail: String) -> Verdict {
    if ok {
        Verdict::Pass(detail)
    } else {
        Verdict::Fail(detail)
    }
}

fn worked_examples() -> Verdict {
    let center = |sigs, total| {
        CenterRecord::new(
            "x",
            GeoPath::new("S", "C", "T"),
            Channel::Manual,
            sigs,
            EventTally::new(sigs, total - sigs, 0),
        )
    };
    let mut notes = Vec::new();
    let mut ok = true;
    for (sigs, total, s_want, kmax_want) in [(900u64, 1000u64, 0.9, 10.0 / 9.0), (2, 1000, 0.002, 500.0)] {
        let c = center(sigs, total);
        let s: f64 = compute_s(&c).unwrap();
        let kmax = compute_k_max(s).unwrap();
        let k: f64 = compute_k(&c).unwrap();
        ok &= (s - s_want).abs() <= 1e-12 && (kmax - kmax_want).abs() <= 1e-12 && (k - 1.0).abs() <= 1e-12;
        notes.push(format!("({sigs}, {total}) -> s = {s}, k_max = {kmax}"));
    }
    verdict(ok, notes.join("; "))
}

fn ks_reproduction() -> Verdict {
    let bracket = 0.9e-54..=8e-54;
    let p_direct = ks_pvalue(0.233, 2040, 2553).unwrap();
    // Two uniform grids offset by 0.233 give samples whose D is within 1/n of it.
    let xs: Vec<f64> = (0..2040).map(|i| (i as f64 + 0.5) / 2040.0).collect();
    let ys: Vec<f64> = (0..2553).map(|j| (j as f64 + 0.5) / 2553.0 + 0.233).collect();
    let r = ks_two_sample(&xs, &ys).unwrap();
    let ok = bracket.contains(&p_direct) && bracket.contains(&r.p_value) && (r.statistic - 0.233).abs() < 1e-3;
    verdict(ok, format!("p(D=0.233) = {p_direct:.3e}; samples D = {:.5}, p = {:.3e}", r.statistic, r.p_value))
}

fn permutations(n: usize) -> Vec<Vec<usize>> {
    if n == 0 {
        return vec![vec![]];
    }
    let mut out = Vec::new();
    for p in permutations(n - 1) {
        for pos in 0..=p.len() {
            let mut q = p.clone();
            q.insert(pos, n - 1);
            out.push(q);
        }
    }
    out
}

fn within_3se(estimate: f64, exact: f64, replicates: u64) -> bool {
    (estimate - exact).abs() <= 3.0 * (exact * (1.0 - exact) / replicates as f64).sqrt()
}

fn permutation_oracle() -> Verdict {
    let delta = [4.1, -2.0, 7.5, 0.3, 2.2];
    let r1998 = [0.95, 0.40, 0.91, 0.72, 0.60];
    let aggs: Vec<GeoAggregate<f64>> = delta
        .iter()
        .zip(r1998)
        .enumerate()
        .map(|(i, (&d, r))| GeoAggregate {
            geo: GeoPath::new("S", "C", format!("T{i}")),
            level: GeoLevel::Township,
            n_centers: 5,
            mean_s: 0.3,
            delta_pct: d,
            r_1998: Some(r),
            r_si: None,
        })
        .collect();
    let observed = pearson(&delta, &r1998).unwrap();
    let tail = permutations(5)
        .iter()
        .filter(|p| {
            let permuted: Vec<f64> = p.iter().map(|&i| r1998[i]).collect();
            pearson(&delta, &permuted).unwrap() >= observed - 1e-12
        })
        .count();
    let exact = tail as f64 / 120.0;
    let start = Instant::now();
    let run = perm_test_rstar(&aggs, 100_000, RngSpec::new(2004)).unwrap();
    let elapsed = start.elapsed();
    let p = run.result.p_empirical.unwrap();
    verdict(
        within_3se(p, exact, 100_000) && elapsed < Duration::from_secs(5),
        format!("exact {tail}/120 = {exact:.5}, empirical {p:.5}, {elapsed:.2?}"),
    )
}

fn subsample_oracle() -> Verdict {
    let pop: Vec<f64> = (1..=6).map(f64::from).collect();
    let start = Instant::now();
    let run = subsample_mean_test(&pop, 2, 5.5, 100_000, RngSpec::new(2004)).unwrap();
    let elapsed = start.elapsed();
    let p = run.result.p_value;
    verdict(
        within_3se(p, 1.0 / 15.0, 100_000) && elapsed < Duration::from_secs(2),
        format!("exact 1/15 = {:.5}, Monte Carlo {p:.5}, {elapsed:.2?}", 1.0 / 15.0),
    )
}

fn detector_calibration() -> Verdict {
    let start = Instant::now();
    let settings = DetectorSettings::default();
    let grid = [SynthConfig::honest(0), SynthConfig::forced_linear(0)];
    let rows = detector_power(&grid, &Detector::ALL, 100, RngSpec::new(1), &settings).unwrap();
    let elapsed = start.elapsed();
    let flagged = |cell: usize, d: Detector| rows.iter().find(|r| r.cell == cell && r.detector == d).unwrap().flagged;
    let honest: Vec<usize> = Detector::ALL.iter().map(|&d| flagged(0, d)).collect();
    let forced_flat = flagged(1, Detector::WindowedFlatness);
    let ok = honest.iter().all(|&f| f <= 10) && forced_flat >= 95 && elapsed < Duration::from_secs(300);
    verdict(
        ok,
        format!(
            "honest flags (flatness, split, r★) = {honest:?} of 100; forced flatness {forced_flat}/100; {elapsed:.2?}"
        ),
    )
}

fn variance_structure() -> Verdict {
    let mut honest_wins = 0;
    let mut forced_ok = 0;
    let mut min_r = f64::INFINITY;
    for seed in 1..=20u64 {
        let (ds, _) = generate(&SynthConfig::honest(seed)).unwrap();
        let pairs: Vec<(f64, f64)> =
            ds.centers().iter().filter_map(|c| Some((compute_s(c).ok()?, compute_k(c).ok()?))).collect();
        let s: Vec<f64> = pairs.iter().map(|p| p.0).collect();
        let (q1, q3) = (quantile(&s, 0.25).unwrap(), quantile(&s, 0.75).unwrap());
        let var = |keep: &dyn Fn(f64) -> bool| {
            let k: Vec<f64> = pairs.iter().filter(|p| keep(p.0)).map(|p| p.1).collect();
            sample_variance(&k).unwrap()
        };
        if var(&|v| v < q1) > var(&|v| v > q3) {
            honest_wins += 1;
        }
        let (ds, _) = generate(&SynthConfig::forced_linear(seed)).unwrap();
        let (x, y): (Vec<f64>, Vec<f64>) =
            ds.centers().iter().map(|c| (c.signatures as f64, c.rr().unwrap().favorable as f64)).unzip();
        let r = pearson(&x, &y).unwrap();
        min_r = min_r.min(r);
        if r >= 0.98 {
            forced_ok += 1;
        }
    }
    verdict(
        honest_wins >= 18 && forced_ok == 20,
        format!("honest {honest_wins}/20; forced {forced_ok}/20 with min r = {min_r:.4}"),
    )
}

fn cli(args: &[&str], threads: usize) -> (i32, Vec<u8>) {
    let out = Command::new(env!("CARGO_BIN_EXE_rrforensics"))
        .args(args)
        .env("RAYON_NUM_THREADS", threads.to_string())
        .output()
        .expect("binary runs");
    (out.status.code().unwrap_or(-1), out.stdout)
}

fn determinism() -> Verdict {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("synth.csv");
    let (code, csv) = cli(&["synth", "--seed", "11"], 1);
    if code != 0 {
        return Verdict::Fail(format!("synth exited {code}"));
    }
    std::fs::write(&data, &csv).unwrap();
    let data = data.to_str().unwrap();
    let pipelines: [(&str, Vec<&str>); 5] = [
        ("synth", vec!["synth", "--model", "forced_linear", "--seed", "11"]),
        ("permtest", vec!["permtest", "--in", data, "--seed", "5", "--replicates", "20000"]),
        ("hotaudit", vec!["hotaudit", "--in", data, "--seed", "5", "--replicates", "20000"]),
        ("power", vec!["power", "--seed", "3", "--datasets", "4", "--n-centers", "400", "--perm-replicates", "500"]),
        ("windowed", vec!["windowed", "--in", data]),
    ];
    let mut failures = Vec::new();
    for (name, args) in &pipelines {
        let mut outputs = Vec::new();
        for (run, threads) in [1usize, 1, 4, 8].into_iter().enumerate() {
            let out = dir.path().join(format!("{name}-{run}"));
            let mut full = args.clone();
            full.extend(["--out", out.to_str().unwrap()]);
            let (code, _) = cli(&full, threads);
            if code != 0 {
                failures.push(format!("{name} exited {code}"));
                break;
            }
            outputs.push(read_dir_sorted(&out));
        }
        if outputs.windows(2).any(|w| w[0] != w[1]) {
            failures.push(format!("{name} output differs between runs"));
        }
    }
    verdict(
        failures.is_empty(),
        if failures.is_empty() {
            format!("{} pipelines byte-identical across 4 runs at 1, 1, 4 and 8 threads", pipelines.len())
        } else {
            failures.join("; ")
        },
    )
}

fn read_dir_sorted(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<(String, Vec<u8>)> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (e.file_name().to_string_lossy().into_owned(), std::fs::read(e.path()).unwrap())
        })
        .collect();
    files.sort();
    files
}

fn check(misses: &mut Vec<String>, label: String, got: Option<f64>, want: f64, tol: f64) {
    match got {
        Some(v) if (v - want).abs() <= tol => {}
        other => misses.push(format!("{label}: {other:?} vs {want}")),
    }
}

fn full_dataset() -> Verdict {
    let Some(path) = std::env::var_os("RRFORENSICS_FULL_DATASET").map(PathBuf::from) else {
        return Verdict::Skip("set RRFORENSICS_FULL_DATASET to the published center CSV to run".into());
    };
    let ds = match std::fs::File::open(&path)
        .map_err(recall_forensics::Error::from)
        .and_then(|f| read_centers(f, None, path.display().to_string()))
    {
        Ok(ds) => ds,
        Err(e) => return Verdict::Fail(format!("{}: {e}", path.display())),
    };
    let mut misses = Vec::new();
    let t = table1::<f64>(&ds, SplitSpec::HALF);
    let expected = [
        (Some(Channel::Manual), [0.613, 0.947, 0.607]),
        (Some(Channel::Computerized), [0.983, 0.994, 0.989]),
        (None, [0.953, 0.996, 0.973]),
    ];
    for (ch, row) in expected {
        for (stratum, want) in [Stratum::Low, Stratum::High, Stratum::All].into_iter().zip(row) {
            check(&mut misses, format!("table1 {ch:?} {stratum:?}"), t.cell(ch, stratum).r, want, 0.001);
        }
    }
    match median_split_rs::<f64>(&ds, EventId::RR2004) {
        Ok(m) => {
            check(&mut misses, "split r_low".into(), Some(m.r_low), 0.845, 0.005);
            check(&mut misses, "split r_high".into(), Some(m.r_high), 0.830, 0.005);
            check(&mut misses, "split diff".into(), Some(m.diff), -0.015, 0.005);
        }
        Err(e) => misses.push(format!("median split: {e}")),
    }
    match hot_audit_report(&ds, 10_000, RngSpec::new(1)) {
        Ok((a, _)) => {
            check(&mut misses, "hot mean_s_selected".into(), Some(a.mean_s_selected), 0.372, 0.001);
            check(&mut misses, "hot mean_s_audited".into(), Some(a.mean_s_audited), 0.540, 0.001);
        }
        Err(e) => misses.push(format!("hot audit: {e}")),
    }
    match cold_audit_compare(&ds) {
        Ok(c) => {
            check(&mut misses, "cold r_universe".into(), Some(c.r_universe), 0.988, 0.001);
            check(&mut misses, "cold r_sample".into(), Some(c.r_sample), 0.989, 0.001);
        }
        Err(e) => misses.push(format!("cold audit: {e}")),
    }
    verdict(
        misses.is_empty(),
        if misses.is_empty() { "all reference values reproduced".into() } else { misses.join("; ") },
    )
}

fn main() {
    type Check = fn() -> Verdict;
    let criteria: [(&str, Check); 8] = [
        ("worked-example fidelity", worked_examples),
        ("KS reproduction", ks_reproduction),
        ("permutation-test oracle", permutation_oracle),
        ("subsample-test oracle", subsample_oracle),
        ("detector calibration", detector_calibration),
        ("variance-structure property", variance_structure),
        ("determinism", determinism),
        ("full-dataset reproduction", full_dataset),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let (tag, detail) = match check() {
            Verdict::Pass(d) => ("PASS", d),
            Verdict::Fail(d) => {
                failed += 1;
                ("FAIL", d)
            }
            Verdict::Skip(d) => ("SKIP", d),
        };
        println!("{tag} {} {name}: {detail}", i + 1);
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
}
