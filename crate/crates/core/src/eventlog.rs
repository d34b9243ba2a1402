//! Edit-log ingestion and the fractional-month time axis.
//!
//! Every timestamp is mapped to a real number of months since a dataset
//! epoch: whole calendar months elapsed, plus the fraction of the current
//! month measured in seconds against that month's true length. The epoch
//! must fall on the first day of a month so that "month k" is unambiguous.

use std::collections::BTreeMap;
use std::fmt;
use std::io::{Read, Write};
use std::str::FromStr;

use chrono::{Datelike, NaiveDate};
use thiserror::Error;

/// Header line of the edit-log CSV format.
pub const CSV_HEADER: [&str; 5] = ["user_id", "article_id", "revision_id", "namespace", "timestamp"];

const SECONDS_PER_DAY: i64 = 86_400;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EventLogError {
    #[error("malformed timestamp {input:?}: bad {field}")]
    Timestamp { input: String, field: &'static str },
    #[error("timestamp {input:?} precedes the epoch {epoch}")]
    BeforeEpoch { input: String, epoch: NaiveDate },
    #[error("epoch {0} must be the first day of a month")]
    Epoch(NaiveDate),
    #[error("invalid month-point {0}")]
    MonthPoint(f64),
    #[error("line {line}, column {column}: {message}")]
    Row { line: u64, column: &'static str, message: String },
    #[error("line {line}: expected header `{expected}`, found `{found}`")]
    Header { line: u64, expected: String, found: String },
    #[error("invalid namespace range {0:?}, expected `lo-hi`")]
    NamespaceRange(String),
    #[error("csv: {0}")]
    Csv(String),
    #[error("io: {0}")]
    Io(String),
}

impl From<csv::Error> for EventLogError {
    fn from(e: csv::Error) -> Self {
        EventLogError::Csv(e.to_string())
    }
}

impl From<std::io::Error> for EventLogError {
    fn from(e: std::io::Error) -> Self {
        EventLogError::Io(e.to_string())
    }
}

/// Real-valued months since the dataset epoch.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Default)]
pub struct MonthPoint(f64);

impl MonthPoint {
    pub const ZERO: MonthPoint = MonthPoint(0.0);

    pub fn new(value: f64) -> Result<Self, EventLogError> {
        if value.is_finite() && value >= 0.0 {
            Ok(MonthPoint(value))
        } else {
            Err(EventLogError::MonthPoint(value))
        }
    }

    #[inline]
    pub fn value(self) -> f64 {
        self.0
    }
}

impl fmt::Display for MonthPoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(&self.0, f)
    }
}

/// Maps calendar timestamps to month-points and back for one epoch.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Calendar {
    epoch: NaiveDate,
}

impl Default for Calendar {
    fn default() -> Self {
        Calendar { epoch: NaiveDate::from_ymd_opt(2001, 1, 1).expect("valid default epoch") }
    }
}

impl Calendar {
    pub fn new(epoch: NaiveDate) -> Result<Self, EventLogError> {
        if epoch.day() != 1 {
            return Err(EventLogError::Epoch(epoch));
        }
        Ok(Calendar { epoch })
    }

    pub fn epoch(&self) -> NaiveDate {
        self.epoch
    }

    /// Parses `YYYY-MM-DD HH:MM:SS` into months since the epoch.
    pub fn parse(&self, ts: &str) -> Result<MonthPoint, EventLogError> {
        let stamp = Stamp::parse(ts)?;
        let months = (stamp.year - self.epoch.year()) * 12 + (stamp.month as i32 - self.epoch.month() as i32);
        if months < 0 {
            return Err(EventLogError::BeforeEpoch { input: ts.to_string(), epoch: self.epoch });
        }
        let into_month = i64::from(stamp.day - 1) * SECONDS_PER_DAY
            + i64::from(stamp.hour) * 3600
            + i64::from(stamp.minute) * 60
            + i64::from(stamp.second);
        let month_len = days_in_month(stamp.year, stamp.month) * SECONDS_PER_DAY;
        Ok(MonthPoint(months as f64 + into_month as f64 / month_len as f64))
    }

    /// Formats a month-point back to `YYYY-MM-DD HH:MM:SS`, rounding to the
    /// nearest second. Inverse of [`Calendar::parse`] on its outputs.
    pub fn format(&self, point: MonthPoint) -> String {
        let (mut year, mut month, mut secs) = self.split(point, f64::round);
        let len = days_in_month(year, month) * SECONDS_PER_DAY;
        if secs >= len {
            secs -= len;
            (year, month) = next_month(year, month);
        }
        let day = secs / SECONDS_PER_DAY + 1;
        let rem = secs % SECONDS_PER_DAY;
        format!(
            "{:04}-{:02}-{:02} {:02}:{:02}:{:02}",
            year,
            month,
            day,
            rem / 3600,
            (rem % 3600) / 60,
            rem % 60
        )
    }

    /// Truncates a month-point to a whole second of its calendar month.
    pub fn floor_to_second(&self, point: MonthPoint) -> MonthPoint {
        let (year, month, secs) = self.split(point, f64::floor);
        let whole = point.0.floor();
        let len = days_in_month(year, month) * SECONDS_PER_DAY;
        MonthPoint(whole + secs.min(len - 1) as f64 / len as f64)
    }

    fn split(&self, point: MonthPoint, round: fn(f64) -> f64) -> (i32, u32, i64) {
        let whole = point.0.floor();
        let month_index = self.epoch.month0() as i64 + whole as i64;
        let year = self.epoch.year() + month_index.div_euclid(12) as i32;
        let month = month_index.rem_euclid(12) as u32 + 1;
        let len = days_in_month(year, month) * SECONDS_PER_DAY;
        let secs = round((point.0 - whole) * len as f64) as i64;
        (year, month, secs.max(0))
    }
}

/// `parse_timestamp` against an explicit epoch.
pub fn parse_timestamp(ts: &str, epoch: NaiveDate) -> Result<MonthPoint, EventLogError> {
    Calendar::new(epoch)?.parse(ts)
}

fn days_in_month(year: i32, month: u32) -> i64 {
    let (ny, nm) = next_month(year, month);
    let first = NaiveDate::from_ymd_opt(year, month, 1).expect("valid month");
    let next = NaiveDate::from_ymd_opt(ny, nm, 1).expect("valid month");
    next.signed_duration_since(first).num_days()
}

fn next_month(year: i32, month: u32) -> (i32, u32) {
    if month == 12 {
        (year + 1, 1)
    } else {
        (year, month + 1)
    }
}

struct Stamp {
    year: i32,
    month: u32,
    day: u32,
    hour: u32,
    minute: u32,
    second: u32,
}

impl Stamp {
    fn parse(ts: &str) -> Result<Self, EventLogError> {
        let bad = |field| EventLogError::Timestamp { input: ts.to_string(), field };
        let b = ts.as_bytes();
        if b.len() != 19 {
            return Err(bad("length"));
        }
        for (pos, sep, field) in [(4, b'-', "separator"), (7, b'-', "separator"), (10, b' ', "separator"), (13, b':', "separator"), (16, b':', "separator")] {
            if b[pos] != sep {
                return Err(bad(field));
            }
        }
        let num = |range: std::ops::Range<usize>, field| -> Result<u32, EventLogError> {
            let s = &b[range];
            if !s.iter().all(u8::is_ascii_digit) {
                return Err(bad(field));
            }
            Ok(s.iter().fold(0u32, |acc, d| acc * 10 + u32::from(d - b'0')))
        };
        let year = num(0..4, "year")? as i32;
        let month = num(5..7, "month")?;
        let day = num(8..10, "day")?;
        let hour = num(11..13, "hour")?;
        let minute = num(14..16, "minute")?;
        let second = num(17..19, "second")?;
        if !(1..=12).contains(&month) {
            return Err(bad("month"));
        }
        if day == 0 || i64::from(day) > days_in_month(year, month) {
            return Err(bad("day"));
        }
        if hour > 23 {
            return Err(bad("hour"));
        }
        if minute > 59 {
            return Err(bad("minute"));
        }
        if second > 59 {
            return Err(bad("second"));
        }
        Ok(Stamp { year, month, day, hour, minute, second })
    }
}

/// One timestamped edit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EditEvent {
    pub user_id: u64,
    pub article_id: u64,
    pub revision_id: u64,
    pub namespace: u16,
    pub time: MonthPoint,
}

/// Inclusive namespace range, written `lo-hi` on the command line.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct NamespaceRange {
    pub lo: u16,
    pub hi: u16,
}

impl NamespaceRange {
    pub fn contains(&self, ns: u16) -> bool {
        (self.lo..=self.hi).contains(&ns)
    }
}

impl FromStr for NamespaceRange {
    type Err = EventLogError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let err = || EventLogError::NamespaceRange(s.to_string());
        let (lo, hi) = s.split_once('-').ok_or_else(err)?;
        let lo: u16 = lo.trim().parse().map_err(|_| err())?;
        let hi: u16 = hi.trim().parse().map_err(|_| err())?;
        if lo > hi {
            return Err(err());
        }
        Ok(NamespaceRange { lo, hi })
    }
}

impl fmt::Display for NamespaceRange {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}-{}", self.lo, self.hi)
    }
}

#[derive(Debug, Clone, Copy)]
pub struct IngestOptions {
    pub has_header: bool,
    pub namespace_filter: Option<NamespaceRange>,
    pub calendar: Calendar,
}

impl Default for IngestOptions {
    fn default() -> Self {
        IngestOptions { has_header: true, namespace_filter: None, calendar: Calendar::default() }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct IngestReport {
    pub events: Vec<EditEvent>,
    /// Data rows read, excluding the header.
    pub rows: u64,
    /// Rows removed by the namespace filter.
    pub dropped: u64,
}

/// Reads edit records from CSV. Rows keep input order.
pub fn ingest<R: Read>(source: R, options: &IngestOptions) -> Result<IngestReport, EventLogError> {
    let mut reader = csv::ReaderBuilder::new().has_headers(false).flexible(true).from_reader(source);
    let mut report = IngestReport::default();
    let mut record = csv::StringRecord::new();
    let mut first = true;
    while reader.read_record(&mut record)? {
        let line = record.position().map_or(0, |p| p.line());
        if first && options.has_header {
            first = false;
            let found: Vec<&str> = record.iter().collect();
            if found != CSV_HEADER {
                return Err(EventLogError::Header { line, expected: CSV_HEADER.join(","), found: found.join(",") });
            }
            continue;
        }
        first = false;
        report.rows += 1;
        let event = parse_row(&record, line, &options.calendar)?;
        if let Some(filter) = options.namespace_filter {
            if !filter.contains(event.namespace) {
                report.dropped += 1;
                continue;
            }
        }
        report.events.push(event);
    }
    Ok(report)
}

fn parse_row(record: &csv::StringRecord, line: u64, calendar: &Calendar) -> Result<EditEvent, EventLogError> {
    if record.len() != CSV_HEADER.len() {
        return Err(EventLogError::Row {
            line,
            column: "*",
            message: format!("expected {} fields, found {}", CSV_HEADER.len(), record.len()),
        });
    }
    fn id<T: FromStr>(record: &csv::StringRecord, line: u64, idx: usize) -> Result<T, EventLogError> {
        record[idx].parse().map_err(|_| EventLogError::Row {
            line,
            column: CSV_HEADER[idx],
            message: format!("expected a non-negative integer, found {:?}", &record[idx]),
        })
    }
    let time = calendar.parse(&record[4]).map_err(|e| EventLogError::Row { line, column: CSV_HEADER[4], message: e.to_string() })?;
    Ok(EditEvent {
        user_id: id(record, line, 0)?,
        article_id: id(record, line, 1)?,
        revision_id: id(record, line, 2)?,
        namespace: id(record, line, 3)?,
        time,
    })
}

/// Writes events in the ingest format, header included.
pub fn write_events<W: Write>(events: &[EditEvent], calendar: &Calendar, sink: W) -> Result<(), EventLogError> {
    let mut writer = csv::WriterBuilder::new().from_writer(sink);
    writer.write_record(CSV_HEADER)?;
    for e in events {
        writer.write_record([
            e.user_id.to_string(),
            e.article_id.to_string(),
            e.revision_id.to_string(),
            e.namespace.to_string(),
            calendar.format(e.time),
        ])?;
    }
    writer.flush()?;
    Ok(())
}

/// Time-sorted events of a single editor.
#[derive(Debug, Clone, PartialEq)]
pub struct EditorHistory {
    user_id: u64,
    events: Vec<EditEvent>,
}

impl EditorHistory {
    /// Builds a history, sorting by time. Ties are ordered by the remaining
    /// fields so the result does not depend on input order.
    pub fn new(user_id: u64, mut events: Vec<EditEvent>) -> Self {
        debug_assert!(events.iter().all(|e| e.user_id == user_id));
        events.sort_by(|a, b| {
            a.time
                .0
                .total_cmp(&b.time.0)
                .then(a.revision_id.cmp(&b.revision_id))
                .then(a.article_id.cmp(&b.article_id))
                .then(a.namespace.cmp(&b.namespace))
        });
        EditorHistory { user_id, events }
    }

    pub fn user_id(&self) -> u64 {
        self.user_id
    }

    pub fn events(&self) -> &[EditEvent] {
        &self.events
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    /// Events with time in `[from, to)`.
    pub fn between(&self, from: f64, to: f64) -> &[EditEvent] {
        let lo = self.events.partition_point(|e| e.time.0 < from);
        let hi = self.events.partition_point(|e| e.time.0 < to);
        &self.events[lo..hi.max(lo)]
    }

    /// Events strictly before `t`.
    pub fn before(&self, t: f64) -> &[EditEvent] {
        &self.events[..self.events.partition_point(|e| e.time.0 < t)]
    }
}

pub type Histories = BTreeMap<u64, EditorHistory>;

/// Groups events per editor; each history is time-sorted.
pub fn build_histories<I: IntoIterator<Item = EditEvent>>(events: I) -> Histories {
    let mut grouped: BTreeMap<u64, Vec<EditEvent>> = BTreeMap::new();
    for e in events {
        grouped.entry(e.user_id).or_default().push(e);
    }
    grouped.into_iter().map(|(user, evs)| (user, EditorHistory::new(user, evs))).collect()
}
