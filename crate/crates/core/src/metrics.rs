//! Per-center ratios.
//!
//! * `k = sí / signatures`
//! * `s = signatures / total` (total includes null votes)
//! * `k_max = 1 / s`, the largest `k` a center can report
//! * `%opposition(e) = 100 · favorable / total` for event `e`
//! * `Δ = %opposition(RR2004) − %opposition(E1998)`
//!
//! `k · s = sí / total`, so `k` has a pole at `s = 0`: the same sí share
//! gives an ever larger `k` as signatures vanish.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::ingest::{CenterId, CenterRecord, Channel, Dataset, EventId, EventTally};
use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CenterMetrics<T> {
    pub channel: Channel,
    /// Undefined when the center has no signatures.
    pub k: Option<T>,
    pub s: T,
    /// Undefined when `s = 0`.
    pub k_max: Option<T>,
    pub total_votes: u64,
    pub pct_opposition: BTreeMap<EventId, T>,
    /// Undefined when the 1998 tally is missing or empty.
    pub delta_pct_1998_rr: Option<T>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum MetricKind {
    K,
    S,
    KMax,
    Delta,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Exclusion {
    pub code: CenterId,
    pub metric: MetricKind,
    pub reason: String,
}

fn rr_tally(center: &CenterRecord) -> Result<&EventTally> {
    center.rr().ok_or_else(|| Error::undefined(format!("{}: no RR2004 tally", center.id)))
}

pub fn compute_k<T: Scalar>(center: &CenterRecord) -> Result<T> {
    let rr = rr_tally(center)?;
    if center.signatures == 0 {
        return Err(Error::undefined(format!("{}: k undefined with zero signatures", center.id)));
    }
    Ok(T::from_count(rr.favorable) / T::from_count(center.signatures))
}

pub fn compute_s<T: Scalar>(center: &CenterRecord) -> Result<T> {
    let total = rr_tally(center)?.total();
    if total == 0 {
        return Err(Error::undefined(format!("{}: s undefined with zero votes", center.id)));
    }
    Ok(T::from_count(center.signatures) / T::from_count(total))
}

pub fn compute_k_max<T: Scalar>(s: T) -> Result<T> {
    if !(s > T::zero()) {
        return Err(Error::undefined("k_max undefined at s = 0"));
    }
    Ok(T::one() / s)
}

/// `100 · favorable / total` for `event`, with null votes in the denominator.
pub fn pct_opposition<T: Scalar>(center: &CenterRecord, event: EventId) -> Result<T> {
    let t = center.tally(event).ok_or_else(|| Error::undefined(format!("{}: no {event} tally", center.id)))?;
    pct_of(t).ok_or_else(|| Error::undefined(format!("{}: {event} total is zero", center.id)))
}

pub(crate) fn pct_of<T: Scalar>(t: &EventTally) -> Option<T> {
    (t.total() > 0).then(|| T::from_f64_lossy(100.0) * T::from_count(t.favorable) / T::from_count(t.total()))
}

/// Pooled opposition share of several tallies: summed favorable over summed
/// total.
pub fn pooled_pct<'a, T: Scalar>(tallies: impl IntoIterator<Item = &'a EventTally>) -> Option<T> {
    let (fav, tot) = tallies.into_iter().fold((0u64, 0u64), |(f, t), x| (f + x.favorable, t + x.total()));
    pct_of(&EventTally::new(fav, tot - fav, 0))
}

pub fn compute_delta<T: Scalar>(center: &CenterRecord) -> Result<T> {
    Ok(pct_opposition::<T>(center, EventId::RR2004)? - pct_opposition::<T>(center, EventId::E1998)?)
}

/// `k` for an arbitrary event: the event's favorable share divided by the
/// referendum `s`. For RR2004 this equals [`compute_k`].
pub fn compute_k_for_event<T: Scalar>(center: &CenterRecord, event: EventId) -> Result<T> {
    let s = compute_s::<T>(center)?;
    if !(s > T::zero()) {
        return Err(Error::undefined(format!("{}: k undefined with zero signatures", center.id)));
    }
    let share = pct_opposition::<T>(center, event)? / T::from_f64_lossy(100.0);
    Ok(share / s)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetricsTable<T> {
    pub rows: Vec<(CenterId, CenterMetrics<T>)>,
    pub exclusions: Vec<Exclusion>,
}

impl<T: Scalar> MetricsTable<T> {
    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// CSV with columns `code,channel,s,k,k_max,pct_opp_rr,pct_opp_1998,delta`.
    /// Undefined values are empty cells.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("code,channel,s,k,k_max,pct_opp_rr,pct_opp_1998,delta\n");
        let cell = |v: Option<T>| v.map(|x| format!("{x}")).unwrap_or_default();
        for (id, m) in &self.rows {
            let row = [
                id.to_string(),
                m.channel.code().to_string(),
                cell(Some(m.s)),
                cell(m.k),
                cell(m.k_max),
                cell(m.pct_opposition.get(&EventId::RR2004).copied()),
                cell(m.pct_opposition.get(&EventId::E1998).copied()),
                cell(m.delta_pct_1998_rr),
            ];
            out.push_str(&row.join(","));
            out.push('\n');
        }
        out
    }
}

/// Metrics for every center with a defined `s`. Undefined quantities are
/// left empty and listed in the exclusion report; nothing is imputed.
pub fn metrics_table<T: Scalar>(ds: &Dataset) -> MetricsTable<T> {
    let mut rows = Vec::with_capacity(ds.len());
    let mut exclusions = Vec::new();
    let mut exclude = |c: &CenterRecord, metric, err: Error| {
        exclusions.push(Exclusion { code: c.id.clone(), metric, reason: err.to_string() });
    };
    for c in ds.centers() {
        let s = match compute_s::<T>(c) {
            Ok(s) => s,
            Err(e) => {
                exclude(c, MetricKind::S, e);
                continue;
            }
        };
        let k = compute_k::<T>(c).map_err(|e| exclude(c, MetricKind::K, e)).ok();
        let k_max = compute_k_max(s).map_err(|e| exclude(c, MetricKind::KMax, e)).ok();
        let delta = if c.tally(EventId::E1998).is_some() {
            compute_delta::<T>(c).map_err(|e| exclude(c, MetricKind::Delta, e)).ok()
        } else {
            None
        };
        let pct_opposition = c.tallies.iter().filter_map(|(e, t)| pct_of::<T>(t).map(|p| (*e, p))).collect();
        rows.push((
            c.id.clone(),
            CenterMetrics {
                channel: c.channel,
                k,
                s,
                k_max,
                total_votes: c.rr().map(EventTally::total).unwrap_or(0),
                pct_opposition,
                delta_pct_1998_rr: delta,
            },
        ));
    }
    MetricsTable { rows, exclusions }
}
