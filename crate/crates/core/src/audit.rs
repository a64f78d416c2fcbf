//! Audit representativeness and group comparisons.

use std::fmt::Write as _;

use serde::Serialize;

use crate::correlation::pearson;
use crate::error::{Error, Result};
use crate::ingest::{CenterId, CenterRecord, Channel, Dataset, EventId, Predicate};
use crate::metrics::{compute_k_for_event, compute_s, pct_opposition, pooled_pct};
use crate::rng::RngSpec;
use crate::significance::{ks_two_sample, subsample_mean_test, MonteCarloRun, TestResult};
use crate::stats::{self, Ecdf, Histogram, OlsFit};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AuditSummary {
    pub n_selected: usize,
    pub n_audited: usize,
    pub mean_s_selected: f64,
    pub mean_s_audited: f64,
    /// Undefined for fewer than three or constant values.
    pub skew_selected: Option<f64>,
    pub skew_audited: Option<f64>,
    pub mc: TestResult,
    /// Pooled sí share over audited centers.
    pub audited_pct_si: f64,
    /// Pooled RR2004 − E1998 opposition share over audited centers that have
    /// both tallies.
    pub audited_delta_pct: Option<f64>,
}

fn s_values<'a>(centers: impl Iterator<Item = &'a CenterRecord>) -> Vec<f64> {
    centers.filter_map(|c| compute_s::<f64>(c).ok()).collect()
}

/// Compares the `s` distribution of audited centers with the selected pool
/// they were drawn from. The Monte Carlo draws subsets of the audited size.
pub fn hot_audit_report(ds: &Dataset, replicates: u64, rng: RngSpec) -> Result<(AuditSummary, MonteCarloRun)> {
    hot_audit_report_sized(ds, None, replicates, rng)
}

/// As [`hot_audit_report`] with an explicit subset size for the Monte Carlo.
pub fn hot_audit_report_sized(
    ds: &Dataset,
    subset_size: Option<usize>,
    replicates: u64,
    rng: RngSpec,
) -> Result<(AuditSummary, MonteCarloRun)> {
    let selected = s_values(ds.centers().iter().filter(|c| c.selected_192));
    let audited_centers: Vec<&CenterRecord> =
        ds.centers().iter().filter(|c| c.audited_26 && compute_s::<f64>(c).is_ok()).collect();
    let audited = s_values(audited_centers.iter().copied());
    if selected.is_empty() {
        return Err(Error::undefined("no centers flagged sel192"));
    }
    if audited.is_empty() {
        return Err(Error::undefined("no centers flagged aud26"));
    }
    let mean_s_selected = stats::mean(&selected).unwrap();
    let mean_s_audited = stats::mean(&audited).unwrap();
    let run = subsample_mean_test(&selected, subset_size.unwrap_or(audited.len()), mean_s_audited, replicates, rng)?;
    let audited_pct_si = pooled_pct::<f64>(audited_centers.iter().filter_map(|c| c.rr()))
        .ok_or_else(|| Error::undefined("audited centers have no votes"))?;
    let both: Vec<&CenterRecord> =
        audited_centers.iter().copied().filter(|c| c.tally(EventId::E1998).is_some_and(|t| t.total() > 0)).collect();
    let audited_delta_pct = match (
        pooled_pct::<f64>(both.iter().filter_map(|c| c.rr())),
        pooled_pct::<f64>(both.iter().filter_map(|c| c.tally(EventId::E1998))),
    ) {
        (Some(rr), Some(old)) => Some(rr - old),
        _ => None,
    };
    let summary = AuditSummary {
        n_selected: selected.len(),
        n_audited: audited.len(),
        mean_s_selected,
        mean_s_audited,
        skew_selected: stats::skewness(&selected).ok(),
        skew_audited: stats::skewness(&audited).ok(),
        mc: run.result.clone(),
        audited_pct_si,
        audited_delta_pct,
    };
    Ok((summary, run))
}

/// Integer hundredths of `x`; the small offset keeps values such as
/// `0.29` (stored as 0.28999…) in their decimal cell.
fn hundredths(x: f64) -> u64 {
    (x * 100.0 + 1e-9).floor() as u64
}

fn leaves_by_stem(xs: &[f64]) -> Result<std::collections::BTreeMap<u64, Vec<u64>>> {
    let mut map: std::collections::BTreeMap<u64, Vec<u64>> = Default::default();
    for &x in xs {
        if !x.is_finite() || x < 0.0 {
            return Err(Error::invalid(format!("stem-and-leaf needs finite non-negative values, got {x}")));
        }
        let h = hundredths(x);
        map.entry(h / 10).or_default().push(h % 10);
    }
    for leaves in map.values_mut() {
        leaves.sort_unstable();
    }
    Ok(map)
}

/// Stem-and-leaf text with stem unit 0.1 and leaf unit 0.01.
///
/// Each line is `stem | leaves`. With `back_to_back_with`, `xs` goes on the
/// left with leaves mirrored (ascending towards the stem) and the second list
/// on the right: `leaves | stem | leaves`. Every stem between the smallest and
/// largest is printed, empty or not.
pub fn stem_and_leaf(xs: &[f64], back_to_back_with: Option<&[f64]>) -> Result<String> {
    let left = leaves_by_stem(xs)?;
    let right = match back_to_back_with {
        Some(ys) => Some(leaves_by_stem(ys)?),
        None => None,
    };
    let keys = left.keys().chain(right.iter().flat_map(|r| r.keys()));
    let (Some(lo), Some(hi)) = (keys.clone().min().copied(), keys.max().copied()) else {
        return Ok(String::new());
    };
    let join = |v: &[u64]| v.iter().map(u64::to_string).collect::<Vec<_>>().join(" ");
    let stem_w = hi.to_string().len();
    let mut out = String::new();
    match right {
        None => {
            for stem in lo..=hi {
                let leaves = left.get(&stem).map(|v| join(v)).unwrap_or_default();
                writeln!(out, "{stem:>stem_w$} | {leaves}").unwrap();
                trim_line_end(&mut out);
            }
        }
        Some(right) => {
            let mirrored = |stem: u64| {
                let mut v = left.get(&stem).cloned().unwrap_or_default();
                v.reverse();
                join(&v)
            };
            let left_w = (lo..=hi).map(|s| mirrored(s).len()).max().unwrap_or(0);
            for stem in lo..=hi {
                let leaves = right.get(&stem).map(|v| join(v)).unwrap_or_default();
                writeln!(out, "{:>left_w$} | {stem:>stem_w$} | {leaves}", mirrored(stem)).unwrap();
                trim_line_end(&mut out);
            }
        }
    }
    Ok(out)
}

fn trim_line_end(out: &mut String) {
    let body = out.trim_end_matches('\n').trim_end().len();
    out.truncate(body);
    out.push('\n');
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Variable {
    K,
    S,
}

impl std::str::FromStr for Variable {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "k" => Ok(Variable::K),
            "s" => Ok(Variable::S),
            other => Err(Error::invalid(format!("unknown variable `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GroupStats {
    pub mean_k: f64,
    pub mean_s: f64,
    pub n: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GroupMeans {
    pub event: EventId,
    pub group_in20: GroupStats,
    pub group_out: GroupStats,
    /// `100 · (mean_k_in / mean_k_out − 1)`.
    pub k_excess_pct: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DistComparison {
    pub variable: Variable,
    pub histogram_in: Histogram<f64>,
    pub histogram_out: Histogram<f64>,
    pub ecdf_in: Ecdf<f64>,
    pub ecdf_out: Ecdf<f64>,
    pub ks: TestResult,
}

impl DistComparison {
    /// Plot rows: `group,kind,x,y` for densities (bin left edge) and ECDF steps.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("group,kind,x,y\n");
        for (name, h, e) in [("in20", &self.histogram_in, &self.ecdf_in), ("out", &self.histogram_out, &self.ecdf_out)]
        {
            for (x, d) in h.edges.iter().zip(&h.density) {
                writeln!(out, "{name},pdf,{x},{d}").unwrap();
            }
            for (x, f) in &e.steps {
                writeln!(out, "{name},ecdf,{x},{f}").unwrap();
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct County20Comparison {
    pub distribution: DistComparison,
    pub means: GroupMeans,
}

/// Computerized centers inside versus outside the audit-eligible counties:
/// shared-bin histograms, ECDFs and a two-sample KS test of `variable`, and
/// the group means of `k` and `s` for `event`.
pub fn county20_comparison(ds: &Dataset, event: EventId, variable: Variable) -> Result<County20Comparison> {
    let mut rows: [Vec<(f64, f64)>; 2] = Default::default();
    for c in ds.centers().iter().filter(|c| c.channel == Channel::Computerized) {
        let (Ok(k), Ok(s)) = (compute_k_for_event::<f64>(c, event), compute_s::<f64>(c)) else {
            continue;
        };
        rows[usize::from(!c.in_20_counties)].push((k, s));
    }
    let [inside, outside] = rows;
    if inside.is_empty() || outside.is_empty() {
        return Err(Error::undefined(format!(
            "need centers on both sides of the 20-county split (in: {}, out: {})",
            inside.len(),
            outside.len()
        )));
    }
    let pick = |v: &[(f64, f64)]| -> Vec<f64> {
        v.iter().map(|&(k, s)| if variable == Variable::K { k } else { s }).collect()
    };
    let (xs, ys) = (pick(&inside), pick(&outside));
    let pooled: Vec<f64> = xs.iter().chain(&ys).copied().collect();
    let edges = stats::freedman_diaconis_edges(&pooled)?;
    let group = |v: &[(f64, f64)]| {
        let (ks, ss): (Vec<f64>, Vec<f64>) = v.iter().copied().unzip();
        GroupStats { mean_k: stats::mean(&ks).unwrap(), mean_s: stats::mean(&ss).unwrap(), n: v.len() }
    };
    let (group_in20, group_out) = (group(&inside), group(&outside));
    Ok(County20Comparison {
        distribution: DistComparison {
            variable,
            histogram_in: Histogram::over_edges(&xs, &edges),
            histogram_out: Histogram::over_edges(&ys, &edges),
            ecdf_in: Ecdf::new(&xs),
            ecdf_out: Ecdf::new(&ys),
            ks: ks_two_sample(&xs, &ys)?,
        },
        means: GroupMeans {
            event,
            group_in20,
            group_out,
            k_excess_pct: 100.0 * (group_in20.mean_k / group_out.mean_k - 1.0),
        },
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ColdAudit {
    pub r_universe: f64,
    pub r_sample: f64,
    pub n_universe: usize,
    pub n_sample: usize,
    pub n_common_with_hot: usize,
}

/// `r_sí` over all computerized centers versus the cold-audited ones.
pub fn cold_audit_compare(ds: &Dataset) -> Result<ColdAudit> {
    let universe: Vec<&CenterRecord> =
        ds.centers().iter().filter(|c| c.channel == Channel::Computerized && c.rr().is_some()).collect();
    let corr = |v: &[&CenterRecord]| -> Result<f64> {
        let (x, y): (Vec<f64>, Vec<f64>) =
            v.iter().map(|c| (c.signatures as f64, c.rr().unwrap().favorable as f64)).unzip();
        pearson(&x, &y)
    };
    let sample: Vec<&CenterRecord> = universe.iter().copied().filter(|c| c.cold_audited).collect();
    Ok(ColdAudit {
        r_universe: corr(&universe)?,
        r_sample: corr(&sample).map_err(|e| Error::undefined(format!("cold sample: {e}")))?,
        n_universe: universe.len(),
        n_sample: sample.len(),
        n_common_with_hot: ds.centers().iter().filter(|c| c.selected_192 && c.cold_audited).count(),
    })
}

/// Axis-aligned, inclusive box in `(delta_pct, rep_growth)` space.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Rect {
    pub delta_min: f64,
    pub delta_max: f64,
    pub growth_min: f64,
    pub growth_max: f64,
}

impl Rect {
    pub fn contains(&self, delta: f64, growth: f64) -> bool {
        (self.delta_min..=self.delta_max).contains(&delta) && (self.growth_min..=self.growth_max).contains(&growth)
    }
}

impl std::str::FromStr for Rect {
    type Err = Error;

    /// `delta_min,delta_max,growth_min,growth_max`
    fn from_str(s: &str) -> Result<Self> {
        let v: Vec<f64> = s
            .split(',')
            .map(|p| p.trim().parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|_| Error::invalid(format!("rectangle `{s}` is not four numbers")))?;
        let [delta_min, delta_max, growth_min, growth_max] = v[..] else {
            return Err(Error::invalid(format!("rectangle `{s}` is not four numbers")));
        };
        if delta_min > delta_max || growth_min > growth_max {
            return Err(Error::invalid("rectangle bounds are inverted"));
        }
        Ok(Rect { delta_min, delta_max, growth_min, growth_max })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RepPoint {
    pub code: CenterId,
    pub delta_pct: f64,
    pub rep_growth: f64,
    pub selected_192: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RectQuery {
    pub rect: Rect,
    pub inside: Vec<CenterId>,
    pub selected_inside: usize,
    pub any_selected: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RepVariation {
    pub points: Vec<RepPoint>,
    pub fit: OlsFit<f64>,
    pub excluded: Vec<(CenterId, String)>,
    pub rect: Option<RectQuery>,
}

impl RepVariation {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("code,delta_pct,rep_growth,selected_192,fitted\n");
        for p in &self.points {
            writeln!(
                out,
                "{},{},{},{},{}",
                p.code,
                p.delta_pct,
                p.rep_growth,
                u8::from(p.selected_192),
                self.fit.predict(p.delta_pct)
            )
            .unwrap();
        }
        out
    }
}

/// Registry growth `(rep_jul − rep_apr) / rep_apr` against the 1998→RR
/// opposition change, with a least-squares line and an optional box query.
pub fn rep_variation(
    ds: &Dataset,
    channel: Option<Channel>,
    group: &Predicate,
    rect: Option<Rect>,
) -> Result<RepVariation> {
    let mut points = Vec::new();
    let mut excluded = Vec::new();
    for c in ds.centers() {
        if channel.is_some_and(|ch| ch != c.channel) || !group.matches(c, ds) {
            continue;
        }
        if c.rep_april2004 == 0 {
            excluded.push((c.id.clone(), "rep_apr is zero".to_string()));
            continue;
        }
        let delta = match (pct_opposition::<f64>(c, EventId::RR2004), pct_opposition::<f64>(c, EventId::E1998)) {
            (Ok(rr), Ok(old)) => rr - old,
            (Err(e), _) | (_, Err(e)) => {
                excluded.push((c.id.clone(), e.to_string()));
                continue;
            }
        };
        let growth = (c.rep_july2004 as f64 - c.rep_april2004 as f64) / c.rep_april2004 as f64;
        points.push(RepPoint {
            code: c.id.clone(),
            delta_pct: delta,
            rep_growth: growth,
            selected_192: c.selected_192,
        });
    }
    let (x, y): (Vec<f64>, Vec<f64>) = points.iter().map(|p| (p.delta_pct, p.rep_growth)).unzip();
    let fit = stats::ols(&x, &y)?;
    let rect = rect.map(|rect| {
        let inside: Vec<&RepPoint> = points.iter().filter(|p| rect.contains(p.delta_pct, p.rep_growth)).collect();
        let selected_inside = inside.iter().filter(|p| p.selected_192).count();
        RectQuery {
            rect,
            inside: inside.iter().map(|p| p.code.clone()).collect(),
            selected_inside,
            any_selected: selected_inside > 0,
        }
    });
    Ok(RepVariation { points, fit, excluded, rect })
}

#[cfg(test)]
mod tests {
    use approx::assert_abs_diff_eq;

    use super::*;
    use crate::ingest::{EventTally, GeoPath};

    #[test]
    fn stem_single_value() {
        assert_eq!(stem_and_leaf(&[0.372], None).unwrap(), "3 | 7\n");
    }

    #[test]
    fn stem_one_line() {
        assert_eq!(stem_and_leaf(&[0.19, 0.10, 0.11], None).unwrap(), "1 | 0 1 9\n");
    }

    #[test]
    fn stem_float_edges() {
        // 0.29 and 0.3 sit just below their decimal cells in binary.
        assert_eq!(stem_and_leaf(&[0.29, 0.3], None).unwrap(), "2 | 9\n3 | 0\n");
    }

    #[test]
    fn stem_gaps_and_back_to_back() {
        let text = stem_and_leaf(&[0.12, 0.15, 0.31], Some(&[0.33, 0.47])).unwrap();
        assert_eq!(text, "5 2 | 1 |\n    | 2 |\n  1 | 3 | 3\n    | 4 | 7\n");
    }

    #[test]
    fn stem_rejects_negative() {
        assert!(stem_and_leaf(&[0.1, -0.2], None).is_err());
        assert_eq!(stem_and_leaf(&[], None).unwrap(), "");
    }

    #[test]
    fn rect_parsing() {
        let r: Rect = "-10,5,0,0.2".parse().unwrap();
        assert!(r.contains(0.0, 0.1));
        assert!(!r.contains(6.0, 0.1));
        assert!("1,2,3".parse::<Rect>().is_err());
        assert!("2,1,0,1".parse::<Rect>().is_err());
    }

    fn rep_center(code: &str, delta_fav98: u64, apr: u64, jul: u64) -> CenterRecord {
        let mut c =
            CenterRecord::new(code, GeoPath::new("S", "C", "T"), Channel::Computerized, 10, EventTally::new(50, 50, 0));
        c.tallies.insert(EventId::E1998, EventTally::new(delta_fav98, 100 - delta_fav98, 0));
        c.rep_april2004 = apr;
        c.rep_july2004 = jul;
        c
    }

    #[test]
    fn rep_two_points() {
        // Δ = 50 − 50 = 0 with g = 0; Δ = 50 − 40 = 10 with g = 0.2.
        let ds = Dataset::new(vec![rep_center("a", 50, 100, 100), rep_center("b", 40, 100, 120)], "t").unwrap();
        let rv = rep_variation(&ds, None, &Predicate::All, None).unwrap();
        assert_abs_diff_eq!(rv.fit.slope, 0.02, epsilon = 1e-12);
        assert_abs_diff_eq!(rv.fit.intercept, 0.0, epsilon = 1e-12);
    }

    #[test]
    fn rep_constant_growth() {
        let ds = Dataset::new(
            vec![
                rep_center("a", 50, 1000, 1149),
                rep_center("b", 40, 2000, 2298),
                rep_center("c", 30, 1000, 1149),
                rep_center("d", 10, 1000, 1000),
            ],
            "t",
        )
        .unwrap();
        let rv = rep_variation(
            &ds,
            None,
            &Predicate::Not(Box::new(Predicate::Flag(crate::ingest::Flag::Hamlet, true))),
            None,
        );
        let rv = rv.unwrap();
        assert_eq!(rv.points.len(), 4);
        let three = Dataset::new(ds.centers()[..3].to_vec(), "t").unwrap();
        let rv = rep_variation(&three, None, &Predicate::All, None).unwrap();
        assert_abs_diff_eq!(rv.fit.slope, 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(rv.fit.intercept, 0.149, epsilon = 1e-12);
    }

    #[test]
    fn rep_zero_april_excluded_and_rect() {
        let mut sel = rep_center("c", 20, 100, 130);
        sel.in_20_counties = true;
        sel.selected_192 = true;
        let ds = Dataset::new(
            vec![rep_center("a", 50, 100, 100), rep_center("b", 40, 0, 120), rep_center("d", 45, 100, 110), sel],
            "t",
        )
        .unwrap();
        let rect = Rect { delta_min: -1.0, delta_max: 6.0, growth_min: -1.0, growth_max: 1.0 };
        let rv = rep_variation(&ds, None, &Predicate::All, Some(rect)).unwrap();
        assert_eq!(rv.excluded.len(), 1);
        assert_eq!(rv.excluded[0].0.as_str(), "b");
        let q = rv.rect.unwrap();
        assert_eq!(q.inside.len(), 2);
        assert!(!q.any_selected);
    }
}
