//! Center-level data model, CSV ingestion, event joins, signature matching
//! and stratification.
//!
//! The canonical file layout is a header
//!
//! ```text
//! code,state,county,township,channel,consular,hamlet,signatures,rep_apr,rep_jul,in20,sel192,aud26,coldaud
//! ```
//!
//! followed by one `<EVENT>_fav,<EVENT>_unf,<EVENT>_null` block per event and
//! an optional trailing `address` column. A tally whose three cells are empty
//! is absent, which is different from a tally of zeros.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::io::{Read, Write};
use std::ops::{Bound, RangeBounds};
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct CenterId(String);

impl CenterId {
    pub fn new(code: impl Into<String>) -> Result<Self> {
        let code = code.into();
        if code.trim().is_empty() {
            return Err(Error::invalid("empty center code"));
        }
        Ok(Self(code))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for CenterId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct GeoPath {
    pub state: String,
    pub county: String,
    pub township: String,
}

impl GeoPath {
    pub fn new(state: impl Into<String>, county: impl Into<String>, township: impl Into<String>) -> Self {
        Self { state: state.into(), county: county.into(), township: township.into() }
    }

    /// Path truncated to `level`; lower components are blanked.
    pub fn at_level(&self, level: GeoLevel) -> GeoPath {
        match level {
            GeoLevel::State => GeoPath::new(self.state.clone(), "", ""),
            GeoLevel::County => GeoPath::new(self.state.clone(), self.county.clone(), ""),
            GeoLevel::Township => self.clone(),
        }
    }
}

impl fmt::Display for GeoPath {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.state)?;
        for part in [&self.county, &self.township] {
            if !part.is_empty() {
                write!(f, "/{part}")?;
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GeoLevel {
    State,
    County,
    Township,
}

impl FromStr for GeoLevel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "state" => Ok(Self::State),
            "county" => Ok(Self::County),
            "township" => Ok(Self::Township),
            other => Err(Error::invalid(format!("unknown geographic level `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum EventId {
    E1998,
    E2000,
    RR2004,
    EXITPOLL2004,
    GOV2004,
}

impl EventId {
    pub const ALL: [EventId; 5] =
        [EventId::E1998, EventId::E2000, EventId::RR2004, EventId::EXITPOLL2004, EventId::GOV2004];

    pub fn as_str(self) -> &'static str {
        match self {
            EventId::E1998 => "E1998",
            EventId::E2000 => "E2000",
            EventId::RR2004 => "RR2004",
            EventId::EXITPOLL2004 => "EXITPOLL2004",
            EventId::GOV2004 => "GOV2004",
        }
    }
}

impl fmt::Display for EventId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for EventId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        EventId::ALL
            .into_iter()
            .find(|e| e.as_str().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::invalid(format!("unknown event `{s}`")))
    }
}

/// Vote counts of one event at one center. The total is derived, so
/// `total = favorable + unfavorable + null_votes` always holds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct EventTally {
    pub favorable: u64,
    pub unfavorable: u64,
    pub null_votes: u64,
}

impl EventTally {
    pub fn new(favorable: u64, unfavorable: u64, null_votes: u64) -> Self {
        Self { favorable, unfavorable, null_votes }
    }

    pub fn total(&self) -> u64 {
        self.favorable + self.unfavorable + self.null_votes
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Channel {
    #[serde(rename = "C")]
    Computerized,
    #[serde(rename = "M")]
    Manual,
}

impl Channel {
    pub fn code(self) -> &'static str {
        match self {
            Channel::Computerized => "C",
            Channel::Manual => "M",
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Channel::Computerized => "computerized",
            Channel::Manual => "manual",
        }
    }
}

impl fmt::Display for Channel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Channel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "C" | "c" | "computerized" => Ok(Channel::Computerized),
            "M" | "m" | "manual" => Ok(Channel::Manual),
            other => Err(Error::invalid(format!("unknown channel `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CenterRecord {
    pub id: CenterId,
    pub geo: GeoPath,
    pub channel: Channel,
    pub consular: bool,
    pub hamlet: bool,
    pub signatures: u64,
    pub rep_april2004: u64,
    pub rep_july2004: u64,
    pub tallies: BTreeMap<EventId, EventTally>,
    pub in_20_counties: bool,
    pub selected_192: bool,
    pub audited_26: bool,
    pub cold_audited: bool,
    pub address: Option<String>,
}

impl CenterRecord {
    /// A computerized, unflagged center with only a referendum tally.
    pub fn new(code: &str, geo: GeoPath, channel: Channel, signatures: u64, rr: EventTally) -> Self {
        Self {
            id: CenterId(code.to_owned()),
            geo,
            channel,
            consular: false,
            hamlet: false,
            signatures,
            rep_april2004: 0,
            rep_july2004: 0,
            tallies: BTreeMap::from([(EventId::RR2004, rr)]),
            in_20_counties: false,
            selected_192: false,
            audited_26: false,
            cold_audited: false,
            address: None,
        }
    }

    pub fn tally(&self, event: EventId) -> Option<&EventTally> {
        self.tallies.get(&event)
    }

    pub fn rr(&self) -> Option<&EventTally> {
        self.tally(EventId::RR2004)
    }

    /// Signatures per referendum vote; `None` when there is no positive total.
    pub fn s(&self) -> Option<f64> {
        let total = self.rr()?.total();
        (total > 0).then(|| self.signatures as f64 / total as f64)
    }

    pub fn flag(&self, flag: Flag) -> bool {
        match flag {
            Flag::Consular => self.consular,
            Flag::Hamlet => self.hamlet,
            Flag::In20 => self.in_20_counties,
            Flag::Selected192 => self.selected_192,
            Flag::Audited26 => self.audited_26,
            Flag::ColdAudited => self.cold_audited,
        }
    }

    fn check(&self) -> std::result::Result<(), String> {
        if self.geo.state.is_empty() || self.geo.county.is_empty() || self.geo.township.is_empty() {
            return Err("state, county and township must be non-empty".into());
        }
        if self.audited_26 && !self.selected_192 {
            return Err("aud26 set on a center not in sel192".into());
        }
        if self.selected_192 && !(self.in_20_counties && self.channel == Channel::Computerized) {
            return Err("sel192 requires in20 and a computerized center".into());
        }
        if self.channel == Channel::Computerized {
            if let Some(rr) = self.rr() {
                if rr.null_votes != 0 {
                    return Err("computerized RR2004 tally has null votes".into());
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Flag {
    Consular,
    Hamlet,
    In20,
    Selected192,
    Audited26,
    ColdAudited,
}

/// Centers sorted by code. Also carries the set of townships that contain
/// both channels, computed when the dataset is first built and preserved by
/// [`stratify`], so the mixed-township predicate means the same thing at any
/// depth of filtering.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    centers: Vec<CenterRecord>,
    pub provenance: String,
    mixed_townships: BTreeSet<GeoPath>,
}

impl Dataset {
    pub fn new(mut centers: Vec<CenterRecord>, provenance: impl Into<String>) -> Result<Self> {
        centers.sort_by(|a, b| a.id.cmp(&b.id));
        if let Some(w) = centers.windows(2).find(|w| w[0].id == w[1].id) {
            return Err(Error::DuplicateCode(w[0].id.0.clone()));
        }
        let mut channels: BTreeMap<&GeoPath, (bool, bool)> = BTreeMap::new();
        for c in &centers {
            let e = channels.entry(&c.geo).or_default();
            match c.channel {
                Channel::Computerized => e.0 = true,
                Channel::Manual => e.1 = true,
            }
        }
        let mixed_townships = channels.into_iter().filter(|(_, (c, m))| *c && *m).map(|(g, _)| g.clone()).collect();
        Ok(Self { centers, provenance: provenance.into(), mixed_townships })
    }

    pub fn empty() -> Self {
        Self { centers: Vec::new(), provenance: String::new(), mixed_townships: BTreeSet::new() }
    }

    pub fn centers(&self) -> &[CenterRecord] {
        &self.centers
    }

    pub fn len(&self) -> usize {
        self.centers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.centers.is_empty()
    }

    pub fn get(&self, id: &CenterId) -> Option<&CenterRecord> {
        self.centers.binary_search_by(|c| c.id.cmp(id)).ok().map(|i| &self.centers[i])
    }

    pub fn mixed_townships(&self) -> &BTreeSet<GeoPath> {
        &self.mixed_townships
    }

    /// Events with at least one tally, in canonical order.
    pub fn events(&self) -> Vec<EventId> {
        let present: BTreeSet<EventId> = self.centers.iter().flat_map(|c| c.tallies.keys().copied()).collect();
        present.into_iter().collect()
    }

    /// Moves every tally stored under `from` to `to`.
    pub fn relabel_event(mut self, from: EventId, to: EventId) -> Result<Self> {
        if from == to {
            return Ok(self);
        }
        if self.centers.iter().any(|c| c.tallies.contains_key(&to)) {
            return Err(Error::EventAlreadyPresent(to));
        }
        for c in &mut self.centers {
            if let Some(t) = c.tallies.remove(&from) {
                c.tallies.insert(to, t);
            }
        }
        Ok(self)
    }
}

pub const BASE_COLUMNS: [&str; 14] = [
    "code",
    "state",
    "county",
    "township",
    "channel",
    "consular",
    "hamlet",
    "signatures",
    "rep_apr",
    "rep_jul",
    "in20",
    "sel192",
    "aud26",
    "coldaud",
];
const ADDRESS_COLUMN: &str = "address";
const HAMLET_MARKER: &str = "CASERIO";

/// Loads a center file whose event blocks are exactly `schema`.
pub fn parse_centers(path: impl AsRef<Path>, schema: &[EventId]) -> Result<Dataset> {
    let path = path.as_ref();
    let file = std::fs::File::open(path)?;
    read_centers(file, Some(schema), path.display().to_string())
}

/// Reads a center file. With `schema = None` the event blocks are taken from
/// the header. A referendum tally is required on every row whenever the
/// file carries an `RR2004` block.
pub fn read_centers<R: Read>(reader: R, schema: Option<&[EventId]>, provenance: impl Into<String>) -> Result<Dataset> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).flexible(false).from_reader(reader);
    let header: Vec<String> = rdr.headers()?.iter().map(|h| h.trim().to_owned()).collect();
    let layout = Layout::from_header(&header, schema)?;

    let mut centers = Vec::new();
    let mut seen: BTreeSet<String> = BTreeSet::new();
    for record in rdr.records() {
        let record = record?;
        let row = record.position().map(|p| p.line() as usize).unwrap_or(0);
        let center = layout.parse_row(&record).map_err(|message| Error::MalformedRow { row, message })?;
        if !seen.insert(center.id.0.clone()) {
            return Err(Error::DuplicateCode(center.id.0));
        }
        centers.push(center);
    }
    Dataset::new(centers, provenance)
}

struct Layout {
    events: Vec<(EventId, [usize; 3])>,
    address: Option<usize>,
    rr_required: bool,
}

impl Layout {
    fn from_header(header: &[String], schema: Option<&[EventId]>) -> Result<Self> {
        if header.len() < BASE_COLUMNS.len() {
            return Err(Error::Header(format!(
                "expected at least the {} base columns, found {}",
                BASE_COLUMNS.len(),
                header.len()
            )));
        }
        for (i, (got, want)) in header.iter().zip(BASE_COLUMNS).enumerate() {
            if got != want {
                if !BASE_COLUMNS.contains(&got.as_str()) && !is_event_column(got) {
                    return Err(Error::UnknownColumn(got.clone()));
                }
                return Err(Error::Header(format!("column {} should be `{want}`, found `{got}`", i + 1)));
            }
        }
        let mut events: Vec<(EventId, [usize; 3])> = Vec::new();
        let mut address = None;
        let mut i = BASE_COLUMNS.len();
        while i < header.len() {
            let name = &header[i];
            if name == ADDRESS_COLUMN && address.is_none() {
                address = Some(i);
                i += 1;
                continue;
            }
            let Some((event, "fav")) = split_event_column(name) else {
                return Err(Error::UnknownColumn(name.clone()));
            };
            for (off, suffix) in [(1, "unf"), (2, "null")] {
                let want = format!("{event}_{suffix}");
                match header.get(i + off) {
                    Some(h) if *h == want => {}
                    Some(h) if !is_event_column(h) && h != ADDRESS_COLUMN => {
                        return Err(Error::UnknownColumn(h.clone()))
                    }
                    _ => return Err(Error::Header(format!("missing column `{want}`"))),
                }
            }
            if events.iter().any(|(e, _)| *e == event) {
                return Err(Error::Header(format!("event block {event} appears twice")));
            }
            events.push((event, [i, i + 1, i + 2]));
            i += 3;
        }
        if let Some(schema) = schema {
            let want: BTreeSet<EventId> = schema.iter().copied().collect();
            let got: BTreeSet<EventId> = events.iter().map(|(e, _)| *e).collect();
            if want != got {
                return Err(Error::Header(format!(
                    "event blocks {:?} do not match the expected schema {:?}",
                    got, want
                )));
            }
        }
        let rr_required = events.iter().any(|(e, _)| *e == EventId::RR2004);
        Ok(Self { events, address, rr_required })
    }

    fn parse_row(&self, rec: &csv::StringRecord) -> std::result::Result<CenterRecord, String> {
        let field = |i: usize| rec.get(i).unwrap_or("").trim();
        let text = |i: usize, name: &str| -> std::result::Result<String, String> {
            let v = field(i);
            if v.is_empty() {
                Err(format!("empty `{name}`"))
            } else {
                Ok(v.to_owned())
            }
        };
        let count = |i: usize, name: &str| -> std::result::Result<u64, String> {
            let v = field(i);
            v.parse::<u64>().map_err(|_| {
                if v.starts_with('-') {
                    format!("negative count in `{name}`: {v}")
                } else {
                    format!("invalid count in `{name}`: `{v}`")
                }
            })
        };
        let flag = |i: usize, name: &str| -> std::result::Result<bool, String> {
            match field(i) {
                "0" => Ok(false),
                "1" => Ok(true),
                v => Err(format!("flag `{name}` must be 0 or 1, found `{v}`")),
            }
        };

        let channel = match field(4) {
            "C" => Channel::Computerized,
            "M" => Channel::Manual,
            v => return Err(format!("channel must be C or M, found `{v}`")),
        };
        let mut tallies = BTreeMap::new();
        for &(event, cols) in &self.events {
            let cells = cols.map(field);
            if cells.iter().all(|c| c.is_empty()) {
                continue;
            }
            let names = ["fav", "unf", "null"].map(|s| format!("{event}_{s}"));
            let t = EventTally::new(count(cols[0], &names[0])?, count(cols[1], &names[1])?, count(cols[2], &names[2])?);
            tallies.insert(event, t);
        }
        if self.rr_required && !tallies.contains_key(&EventId::RR2004) {
            return Err("missing RR2004 tally".into());
        }
        let address = self.address.map(field).filter(|a| !a.is_empty()).map(str::to_owned);
        let hamlet_marked = address.as_deref().is_some_and(|a| a.to_uppercase().contains(HAMLET_MARKER));

        let center = CenterRecord {
            id: CenterId(text(0, "code")?),
            geo: GeoPath::new(text(1, "state")?, text(2, "county")?, text(3, "township")?),
            channel,
            consular: flag(5, "consular")?,
            hamlet: flag(6, "hamlet")? || hamlet_marked,
            signatures: count(7, "signatures")?,
            rep_april2004: count(8, "rep_apr")?,
            rep_july2004: count(9, "rep_jul")?,
            tallies,
            in_20_counties: flag(10, "in20")?,
            selected_192: flag(11, "sel192")?,
            audited_26: flag(12, "aud26")?,
            cold_audited: flag(13, "coldaud")?,
            address,
        };
        center.check()?;
        Ok(center)
    }
}

fn split_event_column(name: &str) -> Option<(EventId, &str)> {
    let (event, suffix) = name.rsplit_once('_')?;
    let event = EventId::ALL.into_iter().find(|e| e.as_str() == event)?;
    matches!(suffix, "fav" | "unf" | "null").then_some((event, suffix))
}

fn is_event_column(name: &str) -> bool {
    split_event_column(name).is_some()
}

/// Writes the canonical CSV form: base columns, one block per event present
/// in the dataset, and `address` when any center has one.
pub fn write_centers<W: Write>(ds: &Dataset, writer: W) -> Result<()> {
    let events = ds.events();
    let with_address = ds.centers.iter().any(|c| c.address.is_some());
    let mut wtr = csv::Writer::from_writer(writer);
    let mut header: Vec<String> = BASE_COLUMNS.iter().map(|s| s.to_string()).collect();
    for e in &events {
        for suffix in ["fav", "unf", "null"] {
            header.push(format!("{e}_{suffix}"));
        }
    }
    if with_address {
        header.push(ADDRESS_COLUMN.into());
    }
    wtr.write_record(&header)?;
    let bit = |b: bool| if b { "1" } else { "0" }.to_string();
    for c in &ds.centers {
        let mut row = vec![
            c.id.0.clone(),
            c.geo.state.clone(),
            c.geo.county.clone(),
            c.geo.township.clone(),
            c.channel.code().to_string(),
            bit(c.consular),
            bit(c.hamlet),
            c.signatures.to_string(),
            c.rep_april2004.to_string(),
            c.rep_july2004.to_string(),
            bit(c.in_20_counties),
            bit(c.selected_192),
            bit(c.audited_26),
            bit(c.cold_audited),
        ];
        for e in &events {
            match c.tallies.get(e) {
                Some(t) => row.extend([t.favorable, t.unfavorable, t.null_votes].map(|v| v.to_string())),
                None => row.extend(std::iter::repeat_n(String::new(), 3)),
            }
        }
        if with_address {
            row.push(c.address.clone().unwrap_or_default());
        }
        wtr.write_record(&row)?;
    }
    wtr.flush()?;
    Ok(())
}

pub fn emit_centers(ds: &Dataset) -> Result<String> {
    let mut buf = Vec::new();
    write_centers(ds, &mut buf)?;
    Ok(String::from_utf8(buf).expect("csv output is UTF-8"))
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct JoinReport {
    pub event: Option<EventId>,
    pub matched: usize,
    pub base_only: usize,
    pub other_only: usize,
    /// Matched centers that received a tally.
    pub attached: usize,
    /// Matched centers whose geography differs between the two datasets.
    pub geo_mismatches: Vec<CenterId>,
}

/// Attaches `other`'s `event` tallies to matching centers of `base`.
/// Centers are matched by code alone.
pub fn join_events(base: &Dataset, other: &Dataset, event: EventId) -> Result<(Dataset, JoinReport)> {
    if base.centers.iter().any(|c| c.tallies.contains_key(&event)) {
        return Err(Error::EventAlreadyPresent(event));
    }
    let mut report = JoinReport { event: Some(event), ..Default::default() };
    let mut joined = base.clone();
    for c in &mut joined.centers {
        match other.get(&c.id) {
            Some(o) => {
                report.matched += 1;
                if o.geo != c.geo {
                    report.geo_mismatches.push(c.id.clone());
                }
                if let Some(t) = o.tallies.get(&event) {
                    c.tallies.insert(event, *t);
                    report.attached += 1;
                }
            }
            None => report.base_only += 1,
        }
    }
    report.other_only = other.len() - report.matched;
    Ok((joined, report))
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct SignatureMatch {
    pub counts: BTreeMap<CenterId, u64>,
    /// Signers whose id is not in the registry.
    pub unmatched: Vec<String>,
    /// Person ids that appear more than once among the signers (counted once).
    pub duplicates: Vec<String>,
}

impl SignatureMatch {
    pub fn matched_signers(&self) -> u64 {
        self.counts.values().sum()
    }
}

pub fn match_signatures(signers: impl AsRef<Path>, registry: impl AsRef<Path>) -> Result<SignatureMatch> {
    match_signatures_from(std::fs::File::open(signers)?, std::fs::File::open(registry)?)
}

/// Counts each signer once at the center the registry assigns them to.
pub fn match_signatures_from<R1: Read, R2: Read>(signers: R1, registry: R2) -> Result<SignatureMatch> {
    let registry_rows = read_person_file(registry)?;
    let mut lookup: HashMap<String, CenterId> = HashMap::with_capacity(registry_rows.len());
    for (row, person, center) in registry_rows {
        let id = CenterId::new(center).map_err(|_| Error::MalformedRow { row, message: "empty center_code".into() })?;
        if lookup.insert(person.clone(), id).is_some() {
            return Err(Error::MalformedRow { row, message: format!("person id `{person}` repeated in registry") });
        }
    }
    let mut out = SignatureMatch::default();
    let mut seen: BTreeSet<String> = BTreeSet::new();
    let mut dup: BTreeSet<String> = BTreeSet::new();
    for (_, person, _) in read_person_file(signers)? {
        if !seen.insert(person.clone()) {
            dup.insert(person);
            continue;
        }
        match lookup.get(&person) {
            Some(center) => *out.counts.entry(center.clone()).or_default() += 1,
            None => out.unmatched.push(person),
        }
    }
    out.unmatched.sort();
    out.duplicates = dup.into_iter().collect();
    Ok(out)
}

fn read_person_file<R: Read>(reader: R) -> Result<Vec<(usize, String, String)>> {
    let mut rdr = csv::Reader::from_reader(reader);
    let header: Vec<String> = rdr.headers()?.iter().map(|h| h.trim().to_owned()).collect();
    if header != ["person_id", "center_code"] {
        if let Some(extra) = header.iter().find(|h| *h != "person_id" && *h != "center_code") {
            return Err(Error::UnknownColumn(extra.clone()));
        }
        return Err(Error::Header("expected `person_id,center_code`".into()));
    }
    let mut rows = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        let row = rec.position().map(|p| p.line() as usize).unwrap_or(0);
        let person = rec.get(0).unwrap_or("").trim();
        if person.is_empty() {
            return Err(Error::MalformedRow { row, message: "empty person_id".into() });
        }
        rows.push((row, person.to_owned(), rec.get(1).unwrap_or("").trim().to_owned()));
    }
    Ok(rows)
}

/// Declarative center filter for [`stratify`].
#[derive(Debug, Clone, PartialEq)]
pub enum Predicate {
    All,
    Channel(Channel),
    Flag(Flag, bool),
    State(String),
    County {
        state: String,
        county: String,
    },
    Township(GeoPath),
    /// Center's township contains both channels.
    MixedTownship,
    /// Referendum `s` within the bounds; centers with undefined `s` never match.
    SRange(Bound<f64>, Bound<f64>),
    HasEvent(EventId),
    Not(Box<Predicate>),
    And(Vec<Predicate>),
    Or(Vec<Predicate>),
}

impl Predicate {
    pub fn and(self, other: Predicate) -> Predicate {
        match self {
            Predicate::And(mut v) => {
                v.push(other);
                Predicate::And(v)
            }
            p => Predicate::And(vec![p, other]),
        }
    }

    pub fn s_at_most(x: f64) -> Predicate {
        Predicate::SRange(Bound::Unbounded, Bound::Included(x))
    }

    pub fn s_above(x: f64) -> Predicate {
        Predicate::SRange(Bound::Excluded(x), Bound::Unbounded)
    }

    pub fn hamlet() -> Predicate {
        Predicate::Flag(Flag::Hamlet, true)
    }

    pub fn matches(&self, c: &CenterRecord, ds: &Dataset) -> bool {
        match self {
            Predicate::All => true,
            Predicate::Channel(ch) => c.channel == *ch,
            Predicate::Flag(f, v) => c.flag(*f) == *v,
            Predicate::State(s) => c.geo.state == *s,
            Predicate::County { state, county } => c.geo.state == *state && c.geo.county == *county,
            Predicate::Township(g) => c.geo == *g,
            Predicate::MixedTownship => ds.mixed_townships.contains(&c.geo),
            Predicate::SRange(lo, hi) => c.s().is_some_and(|s| (*lo, *hi).contains(&s)),
            Predicate::HasEvent(e) => c.tallies.contains_key(e),
            Predicate::Not(p) => !p.matches(c, ds),
            Predicate::And(ps) => ps.iter().all(|p| p.matches(c, ds)),
            Predicate::Or(ps) => ps.iter().any(|p| p.matches(c, ds)),
        }
    }
}

/// Order-preserving subset of `ds` matching `predicate`.
pub fn stratify(ds: &Dataset, predicate: &Predicate) -> Dataset {
    Dataset {
        centers: ds.centers.iter().filter(|c| predicate.matches(c, ds)).cloned().collect(),
        provenance: ds.provenance.clone(),
        mixed_townships: ds.mixed_townships.clone(),
    }
}
