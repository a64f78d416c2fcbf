use std::fmt::Write as _;

use serde::Serialize;
use serde_json::json;

use recall_forensics::audit::{
    cold_audit_compare, county20_comparison, hot_audit_report_sized, rep_variation, stem_and_leaf,
};
use recall_forensics::correlation::{
    geo_aggregates, median_split_rs, r_star, table1, windowed_channel, windowed_correlation,
};
use recall_forensics::ingest::{emit_centers, join_events, match_signatures_from, Flag, Predicate};
use recall_forensics::metrics::metrics_table;
use recall_forensics::significance::{ks_pvalue, ks_two_sample, perm_test_rstar};
use recall_forensics::stats::Ecdf;
use recall_forensics::synth::{detector_power, generate, DetectorSettings, Model, SynthConfig};
use recall_forensics::{CenterRecord, Channel, Dataset, RngSpec};

use crate::args::*;
use crate::{CliError, Inputs, Outcome};

pub(crate) fn dispatch(cmd: &Command, inputs: &mut Inputs<'_>) -> Result<Outcome, CliError> {
    match cmd {
        Command::Ingest(a) => ingest(a, inputs),
        Command::Metrics(a) => metrics(&inputs.dataset(a.input.path.as_deref())?),
        Command::Table1(a) => {
            let t = table1::<f64>(&inputs.dataset(a.input.path.as_deref())?, a.split);
            let csv = t.to_csv();
            let mut cells = serde_json::Map::new();
            for (name, row) in &t.rows {
                let [low, high, all] = row;
                cells.insert(name.clone(), json!({ "low": low, "high": high, "all": all }));
            }
            let results = json!({ "split_point": t.split_point, "cells": cells });
            Ok(Outcome::new(results).artifact("table1.plot.csv", csv))
        }
        Command::Windowed(a) => windowed(a, &inputs.dataset(a.input.path.as_deref())?),
        Command::Geo(a) => geo(a, &inputs.dataset(a.input.path.as_deref())?),
        Command::Splitcorr(a) => splitcorr(a, &inputs.dataset(a.input.path.as_deref())?),
        Command::Ks(a) => ks(a, inputs),
        Command::Permtest(a) => permtest(a, &inputs.dataset(a.input.path.as_deref())?),
        Command::Hotaudit(a) => hotaudit(a, &inputs.dataset(a.input.path.as_deref())?),
        Command::Coldaudit(a) => {
            let cold = cold_audit_compare(&inputs.dataset(a.input.path.as_deref())?)?;
            Ok(Outcome::new(cold))
        }
        Command::County20(a) => {
            let cmp = county20_comparison(&inputs.dataset(a.input.path.as_deref())?, a.event, a.variable)?;
            let csv = cmp.distribution.to_csv();
            Ok(Outcome::new(cmp).artifact("county20.plot.csv", csv))
        }
        Command::Repvar(a) => {
            let ds = inputs.dataset(a.input.path.as_deref())?;
            let rv = rep_variation(&ds, a.channel, &Predicate::All, a.rect)?;
            let warnings = rv.excluded.iter().map(|(code, why)| format!("{code} excluded: {why}")).collect::<Vec<_>>();
            let csv = rv.to_csv();
            Ok(Outcome::new(rv).artifact("repvar.plot.csv", csv).warn(warnings))
        }
        Command::Stemleaf(a) => stemleaf(a, &inputs.dataset(a.input.path.as_deref())?),
        Command::Synth(a) => synth(a, inputs),
        Command::Power(a) => power(a),
    }
}

fn ingest(a: &IngestArgs, inputs: &mut Inputs<'_>) -> Result<Outcome, CliError> {
    let mut ds = inputs.dataset(a.input.path.as_deref())?;
    let mut warnings = Vec::new();
    let mut join = None;
    if let Some(path) = &a.join {
        let event = a.event.expect("clap enforces --event with --join");
        let mut other = inputs.dataset(Some(path))?;
        if let Some(from) = a.relabel {
            other = other.relabel_event(from, event)?;
        }
        let (joined, report) = join_events(&ds, &other, event)?;
        if !report.geo_mismatches.is_empty() {
            warnings.push(format!("{} joined centers disagree on geography", report.geo_mismatches.len()));
        }
        ds = joined;
        join = Some(report);
    }
    let mut signatures = None;
    if let (Some(signers), Some(registry)) = (&a.signers, &a.registry) {
        let s = inputs.read(Some(signers))?;
        let r = inputs.read(Some(registry))?;
        let m = match_signatures_from(&s[..], &r[..])?;
        let disagree: Vec<_> = ds
            .centers()
            .iter()
            .filter_map(|c| {
                let matched = m.counts.get(&c.id).copied().unwrap_or(0);
                (matched != c.signatures).then(|| json!({"code": c.id, "file": c.signatures, "matched": matched}))
            })
            .collect();
        if !disagree.is_empty() {
            warnings.push(format!("{} centers' signature counts differ from the matched signer lists", disagree.len()));
        }
        if !m.unmatched.is_empty() {
            warnings.push(format!("{} signers not found in the registry", m.unmatched.len()));
        }
        signatures = Some(json!({
            "matched_signers": m.matched_signers(),
            "unmatched": m.unmatched,
            "duplicates": m.duplicates,
            "counts": m.counts,
            "disagreements": disagree,
        }));
    }
    let count = |f: &dyn Fn(&CenterRecord) -> bool| ds.centers().iter().filter(|c| f(c)).count();
    let results = json!({
        "n_centers": ds.len(),
        "events": ds.events(),
        "computerized": count(&|c| c.channel == Channel::Computerized),
        "manual": count(&|c| c.channel == Channel::Manual),
        "flags": {
            "consular": count(&|c| c.flag(Flag::Consular)),
            "hamlet": count(&|c| c.flag(Flag::Hamlet)),
            "in_20_counties": count(&|c| c.flag(Flag::In20)),
            "selected_192": count(&|c| c.flag(Flag::Selected192)),
            "audited_26": count(&|c| c.flag(Flag::Audited26)),
            "cold_audited": count(&|c| c.flag(Flag::ColdAudited)),
        },
        "mixed_townships": ds.mixed_townships().len(),
        "join": join,
        "signatures": signatures,
    });
    let csv = emit_centers(&ds)?;
    Ok(Outcome::new(results).artifact("centers.csv", csv).warn(warnings))
}

fn metrics(ds: &Dataset) -> Result<Outcome, CliError> {
    let t = metrics_table::<f64>(ds);
    let warnings = t.exclusions.iter().map(|e| e.reason.clone()).collect::<Vec<_>>();
    let results = json!({ "n_rows": t.rows.len(), "exclusions": t.exclusions });
    let csv = t.to_csv();
    Ok(Outcome::new(results).artifact("metrics.csv", csv).warn(warnings))
}

fn windowed(a: &WindowedArgs, ds: &Dataset) -> Result<Outcome, CliError> {
    let series = match a.channel {
        Some(ch) => vec![windowed_channel::<f64>(ds, ch, a.window, a.scale)?],
        None => windowed_correlation::<f64>(ds, a.window, a.scale)?,
    };
    let mut csv = String::new();
    let mut warnings = Vec::new();
    for (i, s) in series.iter().enumerate() {
        let body = s.to_csv();
        // One header for the whole file.
        csv.push_str(if i == 0 { &body } else { body.split_once('\n').map_or("", |(_, rest)| rest) });
        if !s.excluded.is_empty() {
            warnings.push(format!("{}: {} centers without a logarithm left out", s.channel, s.excluded.len()));
        }
    }
    Ok(Outcome::new(series).artifact("windowed.plot.csv", csv).warn(warnings))
}

fn geo(a: &GeoArgs, ds: &Dataset) -> Result<Outcome, CliError> {
    let report = geo_aggregates::<f64>(ds, a.level, a.channel);
    let mut warnings: Vec<String> = report.skipped.iter().map(|u| format!("{} skipped: {}", u.geo, u.reason)).collect();
    let rstar = match r_star(&report.aggregates) {
        Ok(r) => Some(r),
        Err(e) if e.is_undefined() => {
            warnings.push(format!("r★ undefined: {e}"));
            None
        }
        Err(e) => return Err(e.into()),
    };
    let csv = report.to_csv();
    Ok(Outcome::new(json!({ "report": report, "r_star": rstar })).artifact("geo.plot.csv", csv).warn(warnings))
}

fn splitcorr(a: &SplitcorrArgs, ds: &Dataset) -> Result<Outcome, CliError> {
    let events = match a.event {
        Some(e) => vec![e],
        None => ds.events(),
    };
    let mut rows = Vec::new();
    let mut warnings = Vec::new();
    let mut csv = String::from("event,median_s,n_low,n_high,r_low,r_high,diff\n");
    for event in events {
        match median_split_rs::<f64>(ds, event) {
            Ok(m) => {
                writeln!(csv, "{},{},{},{},{},{},{}", event, m.median_s, m.n_low, m.n_high, m.r_low, m.r_high, m.diff)
                    .unwrap();
                rows.push(m);
            }
            // A single requested event must be defined; in a sweep, note and move on.
            Err(e) if e.is_undefined() && a.event.is_none() => warnings.push(format!("{event}: {e}")),
            Err(e) => return Err(e.into()),
        }
    }
    Ok(Outcome::new(rows).artifact("splitcorr.plot.csv", csv).warn(warnings))
}

/// One number per line; a non-numeric first line is taken as a header.
fn parse_sample(bytes: &[u8], label: &str) -> Result<Vec<f64>, CliError> {
    let text = String::from_utf8_lossy(bytes);
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let field = line.split(',').next().unwrap_or("").trim();
        if field.is_empty() {
            continue;
        }
        match field.parse::<f64>() {
            Ok(v) if v.is_finite() => out.push(v),
            _ if i == 0 => {}
            _ => {
                return Err(recall_forensics::Error::MalformedRow {
                    row: i + 1,
                    message: format!("{label}: `{field}` is not a number"),
                }
                .into())
            }
        }
    }
    Ok(out)
}

fn ks(a: &KsArgs, inputs: &mut Inputs<'_>) -> Result<Outcome, CliError> {
    if let (Some(d), Some(n1), Some(n2)) = (a.d, a.n1, a.n2) {
        return Ok(Outcome::new(json!({ "d": d, "n1": n1, "n2": n2, "p_value": ks_pvalue(d, n1, n2)? })));
    }
    let (Some(p1), Some(p2)) = (&a.input, &a.in2) else {
        return Err(CliError::Usage("ks needs --in and --in2, or --d with --n1 and --n2".into()));
    };
    let xs = parse_sample(&inputs.read(Some(p1))?, &p1.display().to_string())?;
    let ys = parse_sample(&inputs.read(Some(p2))?, &p2.display().to_string())?;
    let result = ks_two_sample(&xs, &ys)?;
    let mut csv = String::from("sample,x,ecdf\n");
    for (name, e) in [("in", Ecdf::new(&xs)), ("in2", Ecdf::new(&ys))] {
        for (x, f) in &e.steps {
            writeln!(csv, "{name},{x},{f}").unwrap();
        }
    }
    Ok(Outcome::new(result).artifact("ks.plot.csv", csv))
}

fn permtest(a: &PermtestArgs, ds: &Dataset) -> Result<Outcome, CliError> {
    let report = geo_aggregates::<f64>(ds, a.level, Some(a.channel));
    let run = perm_test_rstar(&report.aggregates, a.replicates, RngSpec::new(a.seed))?;
    let csv = run.histogram_csv()?;
    let results = json!({ "units": report.aggregates.len(), "skipped": report.skipped.len(), "test": run.result });
    Ok(Outcome::new(results).artifact("permtest.plot.csv", csv))
}

#[derive(Serialize)]
struct HotAuditResults {
    summary: recall_forensics::audit::AuditSummary,
    stem_and_leaf: String,
}

fn hotaudit(a: &HotauditArgs, ds: &Dataset) -> Result<Outcome, CliError> {
    let (summary, run) = hot_audit_report_sized(ds, Some(a.subset_size), a.replicates, RngSpec::new(a.seed))?;
    let mut warnings = Vec::new();
    if summary.n_audited != a.subset_size {
        warnings.push(format!("{} audited centers but subsets of {} were drawn", summary.n_audited, a.subset_size));
    }
    let text = stem_and_leaf(&group_s(ds, Group::Audited), Some(&group_s(ds, Group::Selected)))?;
    let csv = run.histogram_csv()?;
    Ok(Outcome::new(HotAuditResults { summary, stem_and_leaf: text }).artifact("hotaudit.plot.csv", csv).warn(warnings))
}

fn group_s(ds: &Dataset, group: Group) -> Vec<f64> {
    let keep = |c: &CenterRecord| match group {
        Group::All => true,
        Group::Selected => c.selected_192,
        Group::Audited => c.audited_26,
        Group::Cold => c.cold_audited,
        Group::In20 => c.in_20_counties,
    };
    ds.centers().iter().filter(|c| keep(c)).filter_map(|c| c.s()).collect()
}

fn stemleaf(a: &StemleafArgs, ds: &Dataset) -> Result<Outcome, CliError> {
    let left = group_s(ds, a.left);
    let right = (!a.single).then(|| group_s(ds, a.right));
    let text = stem_and_leaf(&left, right.as_deref())?;
    let results = json!({
        "left": a.left,
        "right": right.as_ref().map(|_| a.right),
        "n_left": left.len(),
        "n_right": right.as_ref().map(Vec::len),
        "text": text,
    });
    Ok(Outcome::new(results).artifact("stemleaf.txt", text))
}

fn synth(a: &SynthArgs, inputs: &mut Inputs<'_>) -> Result<Outcome, CliError> {
    let mut cfg = match &a.config {
        Some(path) => {
            let bytes = inputs.read(Some(path))?;
            serde_json::from_slice::<SynthConfig>(&bytes)
                .map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?
        }
        None => SynthConfig::default(),
    };
    cfg.seed = a.seed;
    if let Some(m) = a.model {
        cfg.model = m;
    }
    if let Some(n) = a.n_centers {
        cfg.n_centers = n;
    }
    if let Some(l) = a.lambda {
        cfg.lambda = l;
    }
    if let Some(s) = a.noise_sigma {
        cfg.noise_sigma = s;
    }
    if let Some(f) = a.manual_fraction {
        cfg.manual_fraction = f;
    }
    let (ds, report) = generate(&cfg)?;
    let mut warnings = Vec::new();
    if report.clamp_rate > 0.01 {
        warnings.push(format!("{:.2}% of forced tallies were clamped", 100.0 * report.clamp_rate));
    }
    let csv = emit_centers(&ds)?;
    let mut out = Outcome::new(json!({ "config": cfg, "report": report }))
        .artifact("synth.csv", csv.clone())
        .warn(warnings.clone());
    if a.out.out.is_none() {
        for w in &warnings {
            eprintln!("warning: {w}");
        }
        out.stdout = Some(csv);
    }
    Ok(out)
}

fn power(a: &PowerArgs) -> Result<Outcome, CliError> {
    let base = SynthConfig { n_centers: a.n_centers, ..SynthConfig::default() };
    let mut grid = Vec::new();
    if !a.no_honest {
        grid.push(SynthConfig { model: Model::Honest, ..base.clone() });
    }
    for &lambda in &a.lambda {
        for &noise_sigma in &a.noise_sigma {
            grid.push(SynthConfig { model: Model::ForcedLinear, lambda, noise_sigma, ..base.clone() });
        }
    }
    let settings = DetectorSettings {
        window: a.window,
        flatness_threshold: a.threshold,
        alpha: a.alpha,
        perm_replicates: a.perm_replicates,
        level: a.level,
    };
    let rows = detector_power(&grid, &a.detectors, a.datasets, RngSpec::new(a.seed), &settings)?;
    let mut csv = String::from("cell,model,lambda,noise_sigma,detector,replicates,flagged,undefined,flag_rate\n");
    for r in &rows {
        let model = serde_json::to_value(r.model).unwrap();
        let detector = serde_json::to_value(r.detector).unwrap();
        writeln!(
            csv,
            "{},{},{},{},{},{},{},{},{}",
            r.cell,
            model.as_str().unwrap_or_default(),
            r.lambda,
            r.noise_sigma,
            detector.as_str().unwrap_or_default(),
            r.replicates,
            r.flagged,
            r.undefined,
            r.flag_rate
        )
        .unwrap();
    }
    let warnings = rows
        .iter()
        .filter(|r| r.undefined > 0)
        .map(|r| format!("cell {} {:?}: {} datasets left the statistic undefined", r.cell, r.detector, r.undefined))
        .collect::<Vec<_>>();
    Ok(Outcome::new(json!({ "grid": grid, "rows": rows })).artifact("power.plot.csv", csv).warn(warnings))
}
