//! Correlation diagnostics over center populations.
//!
//! `r_sí` is the Pearson correlation of signatures against sí votes. Honest
//! data should show it weakening as `s` falls, because a small signature
//! count says little about the sí count. The functions here measure that
//! structure by channel and `s` stratum, along an `s`-sorted moving window,
//! per geographic unit, and across units (`r★`).

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::ingest::{CenterId, CenterRecord, Channel, Dataset, EventId, GeoLevel, GeoPath};
use crate::metrics::{compute_s, pct_opposition, pooled_pct};
use crate::scalar::Scalar;
pub use crate::stats::pearson;

/// Minimum number of centers for a correlation to be reported.
pub const MIN_CENTERS: usize = 3;

pub const DEFAULT_WINDOW: usize = 150;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LogPearson<T> {
    pub r: T,
    pub n_used: usize,
    /// Positions of pairs dropped because a value was not positive.
    pub excluded: Vec<usize>,
}

/// Pearson correlation of `ln xs` against `ln ys`. Pairs with a
/// non-positive member are dropped and reported.
pub fn pearson_log<T: Scalar>(xs: &[T], ys: &[T]) -> Result<LogPearson<T>> {
    if xs.len() != ys.len() {
        return Err(Error::invalid(format!("length mismatch: {} vs {}", xs.len(), ys.len())));
    }
    let mut lx = Vec::with_capacity(xs.len());
    let mut ly = Vec::with_capacity(ys.len());
    let mut excluded = Vec::new();
    for (i, (&x, &y)) in xs.iter().zip(ys).enumerate() {
        if x > T::zero() && y > T::zero() {
            lx.push(x.ln());
            ly.push(y.ln());
        } else {
            excluded.push(i);
        }
    }
    let r = pearson(&lx, &ly)?;
    Ok(LogPearson { r, n_used: lx.len(), excluded })
}

fn r_si<T: Scalar>(centers: &[&CenterRecord]) -> Option<T> {
    if centers.len() < MIN_CENTERS {
        return None;
    }
    let (sig, si): (Vec<T>, Vec<T>) =
        centers.iter().map(|c| (T::from_count(c.signatures), T::from_count(c.rr().map_or(0, |t| t.favorable)))).unzip();
    pearson(&sig, &si).ok()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "snake_case", tag = "kind", content = "value")]
pub enum SplitKind {
    Fixed(f64),
    Median,
}

/// Where to split centers on `s`. The low stratum is `s <= split_point`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SplitSpec {
    pub kind: SplitKind,
}

impl SplitSpec {
    pub const HALF: SplitSpec = SplitSpec { kind: SplitKind::Fixed(0.5) };
    pub const MEDIAN: SplitSpec = SplitSpec { kind: SplitKind::Median };
}

impl Default for SplitSpec {
    fn default() -> Self {
        Self::HALF
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Cell<T> {
    pub r: Option<T>,
    pub n: usize,
}

/// `r_sí` by channel (manual, computerized, both) × `s` stratum
/// (low, high, all).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Table1<T> {
    pub split_point: T,
    pub rows: [(String, [Cell<T>; 3]); 3],
}

impl<T: Scalar> Table1<T> {
    pub fn cell(&self, channel: Option<Channel>, stratum: Stratum) -> Cell<T> {
        let row = match channel {
            Some(Channel::Manual) => 0,
            Some(Channel::Computerized) => 1,
            None => 2,
        };
        self.rows[row].1[stratum as usize]
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("channel,stratum,r_si,n\n");
        for (name, cells) in &self.rows {
            for (stratum, cell) in ["low", "high", "all"].iter().zip(cells) {
                let r = cell.r.map(|r| r.to_string()).unwrap_or_default();
                out.push_str(&format!("{name},{stratum},{r},{}\n", cell.n));
            }
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Stratum {
    Low = 0,
    High = 1,
    All = 2,
}

pub fn table1<T: Scalar>(ds: &Dataset, split: SplitSpec) -> Table1<T> {
    let with_s: Vec<(&CenterRecord, T)> =
        ds.centers().iter().filter_map(|c| compute_s::<T>(c).ok().map(|s| (c, s))).collect();
    let split_point = match split.kind {
        SplitKind::Fixed(x) => T::from_f64_lossy(x),
        SplitKind::Median => {
            let ss: Vec<T> = with_s.iter().map(|&(_, s)| s).collect();
            crate::stats::median(&ss).unwrap_or_else(T::zero)
        }
    };
    let row = |channel: Option<Channel>| -> [Cell<T>; 3] {
        let members: Vec<(&CenterRecord, T)> =
            with_s.iter().copied().filter(|(c, _)| channel.is_none_or(|ch| c.channel == ch)).collect();
        let pick = |keep: &dyn Fn(T) -> bool| {
            let v: Vec<&CenterRecord> = members.iter().filter(|(_, s)| keep(*s)).map(|(c, _)| *c).collect();
            Cell { r: r_si(&v), n: v.len() }
        };
        [pick(&|s| s <= split_point), pick(&|s| s > split_point), pick(&|_| true)]
    };
    Table1 {
        split_point,
        rows: [
            ("manual".into(), row(Some(Channel::Manual))),
            ("computerized".into(), row(Some(Channel::Computerized))),
            ("both".into(), row(None)),
        ],
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Scale {
    Linear,
    Log,
}

impl std::str::FromStr for Scale {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "linear" => Ok(Scale::Linear),
            "log" => Ok(Scale::Log),
            other => Err(Error::invalid(format!("unknown scale `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct WindowPoint<T> {
    pub start: usize,
    pub mean_s: T,
    /// Undefined when the window is constant in either variable.
    pub r: Option<T>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WindowSeries<T> {
    pub channel: Channel,
    pub window: usize,
    pub scale: Scale,
    pub points: Vec<WindowPoint<T>>,
    /// Centers left out of a log-scale series for lack of a logarithm.
    pub excluded: Vec<CenterId>,
}

impl<T: Scalar> WindowSeries<T> {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("channel,scale,window_start,mean_s,r\n");
        let scale = match self.scale {
            Scale::Linear => "linear",
            Scale::Log => "log",
        };
        for p in &self.points {
            let r = p.r.map(|r| r.to_string()).unwrap_or_default();
            out.push_str(&format!("{},{scale},{},{},{r}\n", self.channel.code(), p.start, p.mean_s));
        }
        out
    }

    /// Smallest defined `r` among windows whose mean `s` is at most `limit`
    /// (the first window when none qualifies).
    pub fn min_r_below(&self, limit: T) -> Option<T> {
        let mut sel = self.points.iter().filter(|p| p.mean_s <= limit).peekable();
        if sel.peek().is_none() {
            return self.points.first().and_then(|p| p.r);
        }
        sel.filter_map(|p| p.r).reduce(T::min)
    }

    /// Smallest defined `r` among windows whose mean `s` is at least `limit`
    /// (the last window when none qualifies).
    pub fn min_r_above(&self, limit: T) -> Option<T> {
        let mut sel = self.points.iter().filter(|p| p.mean_s >= limit).peekable();
        if sel.peek().is_none() {
            return self.points.last().and_then(|p| p.r);
        }
        sel.filter_map(|p| p.r).reduce(T::min)
    }
}

/// Moving-window `r_sí` along centers of one channel sorted by `s`
/// (ties broken by code). Window `i` covers sorted positions
/// `i ..= i + window − 1`.
pub fn windowed_channel<T: Scalar>(
    ds: &Dataset,
    channel: Channel,
    window: usize,
    scale: Scale,
) -> Result<WindowSeries<T>> {
    if window < 2 {
        return Err(Error::invalid("window must be at least 2"));
    }
    let mut excluded = Vec::new();
    let mut rows: Vec<(T, &CenterRecord, T, T)> = Vec::new();
    for c in ds.centers().iter().filter(|c| c.channel == channel) {
        let Ok(s) = compute_s::<T>(c) else { continue };
        let sig = T::from_count(c.signatures);
        let si = T::from_count(c.rr().map_or(0, |t| t.favorable));
        match scale {
            Scale::Linear => rows.push((s, c, sig, si)),
            Scale::Log if sig > T::zero() && si > T::zero() => rows.push((s, c, sig.ln(), si.ln())),
            Scale::Log => excluded.push(c.id.clone()),
        }
    }
    if rows.len() < window {
        return Err(Error::undefined(format!(
            "{channel} channel has {} usable centers, fewer than the window of {window}",
            rows.len()
        )));
    }
    rows.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap().then_with(|| a.1.id.cmp(&b.1.id)));
    let s: Vec<T> = rows.iter().map(|r| r.0).collect();
    let xs: Vec<T> = rows.iter().map(|r| r.2).collect();
    let ys: Vec<T> = rows.iter().map(|r| r.3).collect();
    let wf = T::from_usize(window).unwrap();
    let points = (0..=rows.len() - window)
        .into_par_iter()
        .map(|i| {
            let span = i..i + window;
            WindowPoint {
                start: i,
                mean_s: s[span.clone()].iter().copied().sum::<T>() / wf,
                r: pearson(&xs[span.clone()], &ys[span]).ok(),
            }
        })
        .collect();
    Ok(WindowSeries { channel, window, scale, points, excluded })
}

/// Windowed series for every channel present in `ds`.
pub fn windowed_correlation<T: Scalar>(ds: &Dataset, window: usize, scale: Scale) -> Result<Vec<WindowSeries<T>>> {
    [Channel::Manual, Channel::Computerized]
        .into_iter()
        .filter(|ch| ds.centers().iter().any(|c| c.channel == *ch))
        .map(|ch| windowed_channel(ds, ch, window, scale))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GeoAggregate<T> {
    pub geo: GeoPath,
    pub level: GeoLevel,
    pub n_centers: usize,
    pub mean_s: T,
    /// Pooled `%opposition(RR2004) − %opposition(E1998)` over the unit.
    pub delta_pct: T,
    pub r_1998: Option<T>,
    pub r_si: Option<T>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SkippedUnit {
    pub geo: GeoPath,
    pub n_centers: usize,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GeoReport<T> {
    pub level: GeoLevel,
    pub channel: Option<Channel>,
    pub aggregates: Vec<GeoAggregate<T>>,
    pub skipped: Vec<SkippedUnit>,
}

impl<T: Scalar> GeoReport<T> {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("unit,n_centers,mean_s,delta_pct,r_1998,r_si\n");
        let opt = |v: Option<T>| v.map(|x| x.to_string()).unwrap_or_default();
        for a in &self.aggregates {
            out.push_str(&format!(
                "{},{},{},{},{},{}\n",
                csv_field(&a.geo.to_string()),
                a.n_centers,
                a.mean_s,
                a.delta_pct,
                opt(a.r_1998),
                opt(a.r_si)
            ));
        }
        out
    }
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_owned()
    }
}

/// Per-unit aggregates at `level`. A center qualifies when it has positive
/// RR2004 and E1998 totals; units with fewer than three qualifying centers,
/// or whose `r_1998` is undefined, are reported as skipped.
pub fn geo_aggregates<T: Scalar>(ds: &Dataset, level: GeoLevel, channel: Option<Channel>) -> GeoReport<T> {
    let mut units: BTreeMap<GeoPath, Vec<&CenterRecord>> = BTreeMap::new();
    for c in ds.centers() {
        if channel.is_some_and(|ch| ch != c.channel) {
            continue;
        }
        let qualifies = [EventId::RR2004, EventId::E1998].iter().all(|e| c.tally(*e).is_some_and(|t| t.total() > 0));
        if qualifies {
            units.entry(c.geo.at_level(level)).or_default().push(c);
        }
    }
    let mut aggregates = Vec::new();
    let mut skipped = Vec::new();
    for (geo, centers) in units {
        let n = centers.len();
        if n < MIN_CENTERS {
            skipped.push(SkippedUnit { geo, n_centers: n, reason: format!("fewer than {MIN_CENTERS} centers") });
            continue;
        }
        let rr: Vec<T> = centers.iter().map(|c| pct_opposition(c, EventId::RR2004).unwrap()).collect();
        let old: Vec<T> = centers.iter().map(|c| pct_opposition(c, EventId::E1998).unwrap()).collect();
        let r_1998 = match pearson(&rr, &old) {
            Ok(r) => r,
            Err(e) => {
                skipped.push(SkippedUnit { geo, n_centers: n, reason: format!("r_1998 {e}") });
                continue;
            }
        };
        let ss: Vec<T> = centers.iter().map(|c| compute_s::<T>(c).unwrap()).collect();
        let pooled = |e: EventId| pooled_pct::<T>(centers.iter().filter_map(|c| c.tally(e))).unwrap();
        aggregates.push(GeoAggregate {
            geo,
            level,
            n_centers: n,
            mean_s: crate::stats::mean(&ss).unwrap(),
            delta_pct: pooled(EventId::RR2004) - pooled(EventId::E1998),
            r_1998: Some(r_1998),
            r_si: r_si(&centers),
        });
    }
    GeoReport { level, channel, aggregates, skipped }
}

/// `(delta_pct, r_1998)` pairs of the aggregates with a defined `r_1998`.
pub fn rstar_pairs<T: Scalar>(aggs: &[GeoAggregate<T>]) -> (Vec<T>, Vec<T>) {
    aggs.iter().filter_map(|a| a.r_1998.map(|r| (a.delta_pct, r))).unzip()
}

/// Cross-unit correlation of `delta_pct` with `r_1998`.
pub fn r_star<T: Scalar>(aggs: &[GeoAggregate<T>]) -> Result<T> {
    let (delta, r) = rstar_pairs(aggs);
    if delta.len() < MIN_CENTERS {
        return Err(Error::undefined(format!("r★ needs at least {MIN_CENTERS} units, got {}", delta.len())));
    }
    pearson(&delta, &r)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MedianSplit<T> {
    pub event: EventId,
    pub median_s: T,
    pub n_low: usize,
    pub n_high: usize,
    pub r_low: T,
    pub r_high: T,
    pub diff: T,
}

/// Correlation of `s` with the event's opposition share among computerized
/// centers, below/at and above the median `s` of those centers.
pub fn median_split_rs<T: Scalar>(ds: &Dataset, event: EventId) -> Result<MedianSplit<T>> {
    let pts: Vec<(T, T)> = ds
        .centers()
        .iter()
        .filter(|c| c.channel == Channel::Computerized)
        .filter_map(|c| Some((compute_s::<T>(c).ok()?, pct_opposition::<T>(c, event).ok()?)))
        .collect();
    let ss: Vec<T> = pts.iter().map(|p| p.0).collect();
    let median_s = crate::stats::median(&ss)
        .ok_or_else(|| Error::undefined(format!("no computerized centers with s and {event}")))?;
    let (low, high): (Vec<_>, Vec<_>) = pts.into_iter().partition(|p| p.0 <= median_s);
    let corr = |v: &[(T, T)], side: &str| -> Result<T> {
        let (x, y): (Vec<T>, Vec<T>) = v.iter().copied().unzip();
        pearson(&x, &y).map_err(|e| Error::undefined(format!("{side} half: {e}")))
    };
    let r_low = corr(&low, "low")?;
    let r_high = corr(&high, "high")?;
    Ok(MedianSplit { event, median_s, n_low: low.len(), n_high: high.len(), r_low, r_high, diff: r_high - r_low })
}

#[cfg(test)]
mod tests {
    use approx::assert_abs_diff_eq;

    use super::*;
    use crate::ingest::EventTally;

    fn c(code: &str, twp: &str, ch: Channel, sig: u64, fav: u64, total: u64) -> CenterRecord {
        CenterRecord::new(code, GeoPath::new("S", "C", twp), ch, sig, EventTally::new(fav, total - fav, 0))
    }

    #[test]
    fn log_power_law() {
        let xs: Vec<f64> = (1..=20).map(f64::from).collect();
        let ys: Vec<f64> = xs.iter().map(|x| x * x).collect();
        let lp = pearson_log(&xs, &ys).unwrap();
        assert_abs_diff_eq!(lp.r, 1.0, epsilon = 1e-12);
        assert_eq!(lp.n_used, 20);
    }

    #[test]
    fn log_excludes_zero() {
        let lp = pearson_log(&[0.0, 1.0, 2.0, 3.0], &[5.0, 1.0, 4.0, 9.0]).unwrap();
        assert_eq!(lp.n_used, 3);
        assert_eq!(lp.excluded, [0]);
    }

    #[test]
    fn table1_proportional_data() {
        let centers = (1..=20u64)
            .map(|i| {
                let ch = if i % 2 == 0 { Channel::Manual } else { Channel::Computerized };
                let total = if i % 3 == 0 { 4 * i } else { 40 * i };
                c(&format!("{i:02}"), "T", ch, 2 * i, i, total)
            })
            .collect();
        let ds = Dataset::new(centers, "t").unwrap();
        let t = table1::<f64>(&ds, SplitSpec::HALF);
        for ch in [Some(Channel::Manual), Some(Channel::Computerized), None] {
            let low = t.cell(ch, Stratum::Low);
            let high = t.cell(ch, Stratum::High);
            let all = t.cell(ch, Stratum::All);
            assert_eq!(low.n + high.n, all.n);
            for cell in [low, high, all] {
                if let Some(r) = cell.r {
                    assert_abs_diff_eq!(r, 1.0, epsilon = 1e-12);
                }
            }
        }
        assert_eq!(t.cell(None, Stratum::All).n, 20);
    }

    #[test]
    fn table1_small_cells_undefined() {
        let ds =
            Dataset::new(vec![c("1", "T", Channel::Manual, 9, 5, 10), c("2", "T", Channel::Manual, 8, 4, 10)], "t")
                .unwrap();
        let t = table1::<f64>(&ds, SplitSpec::HALF);
        let cell = t.cell(Some(Channel::Manual), Stratum::High);
        assert_eq!((cell.r, cell.n), (None, 2));
    }

    fn linear_channel(n: usize) -> Dataset {
        let centers = (0..n)
            .map(|i| {
                let sig = 10 + (i as u64 * 7) % 90;
                c(&format!("{i:04}"), "T", Channel::Computerized, sig, sig / 2 + sig % 2, 200 + i as u64)
            })
            .collect();
        Dataset::new(centers, "t").unwrap()
    }

    #[test]
    fn window_boundary_single_point() {
        let ds = linear_channel(150);
        let series = windowed_channel::<f64>(&ds, Channel::Computerized, 150, Scale::Linear).unwrap();
        assert_eq!(series.points.len(), 1);
        let err = windowed_channel::<f64>(&linear_channel(149), Channel::Computerized, 150, Scale::Linear).unwrap_err();
        assert!(err.is_undefined());
        assert!(err.to_string().contains("computerized"), "{err}");
    }

    #[test]
    fn window_count_and_range() {
        let ds = linear_channel(400);
        for scale in [Scale::Linear, Scale::Log] {
            let series = windowed_channel::<f64>(&ds, Channel::Computerized, 150, scale).unwrap();
            assert_eq!(series.points.len(), 400 - 150 + 1);
            for (i, p) in series.points.iter().enumerate() {
                assert_eq!(p.start, i);
                let r = p.r.unwrap();
                assert!((-1.0..=1.0).contains(&r));
            }
        }
        assert!(windowed_correlation::<f64>(&ds, 150, Scale::Linear).unwrap().len() == 1);
    }

    #[test]
    fn window_means_sorted_by_s() {
        let ds = linear_channel(300);
        let series = windowed_channel::<f64>(&ds, Channel::Computerized, 50, Scale::Linear).unwrap();
        assert!(series.points.windows(2).all(|w| w[0].mean_s <= w[1].mean_s + 1e-15));
    }

    #[test]
    fn log_window_reports_exclusions() {
        let mut centers = linear_channel(160).centers().to_vec();
        centers[3].signatures = 0;
        let ds = Dataset::new(centers, "t").unwrap();
        let series = windowed_channel::<f64>(&ds, Channel::Computerized, 150, Scale::Log).unwrap();
        assert_eq!(series.excluded.len(), 1);
        assert_eq!(series.points.len(), 159 - 150 + 1);
    }

    fn with_1998(mut center: CenterRecord, fav: u64, total: u64) -> CenterRecord {
        center.tallies.insert(EventId::E1998, EventTally::new(fav, total - fav, 0));
        center
    }

    #[test]
    fn geo_constant_unit_skipped() {
        let centers = (0..4)
            .map(|i| with_1998(c(&format!("{i}"), "Flat", Channel::Computerized, 10, 40, 100), 30, 100))
            .collect();
        let ds = Dataset::new(centers, "t").unwrap();
        let report = geo_aggregates::<f64>(&ds, GeoLevel::Township, None);
        assert!(report.aggregates.is_empty());
        assert_eq!(report.skipped.len(), 1);
        assert!(report.skipped[0].reason.contains("constant"));
    }

    #[test]
    fn geo_pooled_delta() {
        // Unit: RR 10/100, 60/200, 30/100 → pooled 100/400 = 25 %.
        // 1998:  5/100, 40/100, 15/100 → pooled 60/300 = 20 %.
        let centers = vec![
            with_1998(c("1", "T", Channel::Computerized, 10, 10, 100), 5, 100),
            with_1998(c("2", "T", Channel::Computerized, 90, 60, 200), 40, 100),
            with_1998(c("3", "T", Channel::Computerized, 30, 30, 100), 15, 100),
            with_1998(c("4", "U", Channel::Computerized, 30, 30, 100), 15, 100),
        ];
        let ds = Dataset::new(centers, "t").unwrap();
        let report = geo_aggregates::<f64>(&ds, GeoLevel::Township, None);
        assert_eq!(report.aggregates.len(), 1);
        let a = &report.aggregates[0];
        assert_abs_diff_eq!(a.delta_pct, 5.0, epsilon = 1e-12);
        assert_abs_diff_eq!(a.mean_s, (0.1 + 0.45 + 0.3) / 3.0, epsilon = 1e-12);
        assert_eq!(report.skipped.len(), 1);
        let county = geo_aggregates::<f64>(&ds, GeoLevel::County, None);
        assert_eq!(county.aggregates[0].n_centers, 4);
    }

    fn agg(delta: f64, r: Option<f64>) -> GeoAggregate<f64> {
        GeoAggregate {
            geo: GeoPath::new("S", "", ""),
            level: GeoLevel::State,
            n_centers: 3,
            mean_s: 0.3,
            delta_pct: delta,
            r_1998: r,
            r_si: None,
        }
    }

    #[test]
    fn r_star_cases() {
        let aggs: Vec<_> = (0..5).map(|i| agg(i as f64, Some(0.1 * i as f64))).collect();
        assert_abs_diff_eq!(r_star(&aggs).unwrap(), 1.0, epsilon = 1e-12);
        let flat: Vec<_> = (0..5).map(|i| agg(i as f64, Some(0.5))).collect();
        assert!(r_star(&flat).unwrap_err().is_undefined());
        assert!(r_star(&aggs[..2]).is_err());
    }

    #[test]
    fn median_split_perfect_dependence() {
        // %opp = 100·s exactly: fav = signatures.
        let centers =
            (1..=40u64).map(|i| c(&format!("{i:02}"), "T", Channel::Computerized, 3 * i, 3 * i, 200)).collect();
        let ds = Dataset::new(centers, "t").unwrap();
        let m = median_split_rs::<f64>(&ds, EventId::RR2004).unwrap();
        assert_abs_diff_eq!(m.r_low, 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(m.r_high, 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(m.diff, 0.0, epsilon = 1e-12);
        assert_eq!((m.n_low, m.n_high), (20, 20));
        assert!(median_split_rs::<f64>(&ds, EventId::E1998).unwrap_err().is_undefined());
    }
}
