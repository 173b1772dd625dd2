//! Censored observations: extended-real bounds, censoring rectangles, current-status
//! records, and the rectangle CSV format.
//!
//! The CSV format has the header `L1,R1,L2,R2,freq`, one record per line. Bounds are
//! decimal numbers or the tokens `inf` / `-inf`. A lower bound may carry a leading `>`
//! to mark it as strict (`>0.5` is the half-line `(0.5, ...`); files written from
//! closed-rectangle data never contain it.
//!
//! Current-status records use `t,u,delta1,delta2` with indicators written as `0` / `1`.

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;

use thiserror::Error;

use crate::scalar::Scalar;

/// Bundled Betensky–Finkelstein breast cosmesis data, bounds as originally published.
pub const BF_CSV: &str = include_str!("../data/betensky_finkelstein.csv");

#[derive(Debug, Error)]
pub enum DataError {
    #[error("line {line}: expected 5 fields L1,R1,L2,R2,freq, found {found}")]
    FieldCount { line: u64, found: usize },
    #[error("line {line}: expected 4 fields t,u,delta1,delta2, found {found}")]
    CsFieldCount { line: u64, found: usize },
    #[error("line {line}: cannot parse {field} value `{token}`")]
    Parse {
        line: u64,
        field: &'static str,
        token: String,
    },
    #[error("line {line}: {reason}")]
    Validation { line: u64, reason: String },
    #[error("invalid rectangle: {0}")]
    InvalidRectangle(String),
    #[error("dataset contains no observations")]
    Empty,
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("cannot read `{path}`")]
    Io {
        path: String,
        source: std::io::Error,
    },
}

/// A real number or one of the two infinities. NaN is not representable.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ExtendedReal<T>(T);

impl<T: Scalar> ExtendedReal<T> {
    pub fn new(v: T) -> Option<Self> {
        if v.is_nan() {
            None
        } else {
            Some(Self(v))
        }
    }

    pub fn finite(v: T) -> Self {
        assert!(v.is_finite(), "finite bound required");
        Self(v)
    }

    pub fn pos_inf() -> Self {
        Self(T::infinity())
    }

    pub fn neg_inf() -> Self {
        Self(T::neg_infinity())
    }

    #[inline]
    pub fn value(self) -> T {
        self.0
    }

    #[inline]
    pub fn is_finite(self) -> bool {
        self.0.is_finite()
    }

    pub fn is_pos_inf(self) -> bool {
        self.0 == T::infinity()
    }

    pub fn is_neg_inf(self) -> bool {
        self.0 == T::neg_infinity()
    }

    fn parse(token: &str) -> Option<Self> {
        match token {
            "inf" | "+inf" | "Inf" | "INF" => Some(Self::pos_inf()),
            "-inf" | "-Inf" | "-INF" => Some(Self::neg_inf()),
            _ => token.parse::<T>().ok().filter(|v| v.is_finite()).map(Self),
        }
    }
}

impl<T: Scalar> Eq for ExtendedReal<T> {}

impl<T: Scalar> PartialOrd for ExtendedReal<T> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl<T: Scalar> Ord for ExtendedReal<T> {
    fn cmp(&self, other: &Self) -> Ordering {
        self.0
            .partial_cmp(&other.0)
            .expect("ExtendedReal never holds NaN")
    }
}

impl<T: Scalar> fmt::Display for ExtendedReal<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_pos_inf() {
            f.write_str("inf")
        } else if self.is_neg_inf() {
            f.write_str("-inf")
        } else {
            write!(f, "{}", self.0)
        }
    }
}

/// One coordinate of a censoring rectangle: `[lo, hi]`, or `(lo, hi]` when `lo_open`.
/// Finite upper bounds are always closed.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Interval<T> {
    pub lo: ExtendedReal<T>,
    pub hi: ExtendedReal<T>,
    pub lo_open: bool,
}

impl<T: Scalar> Eq for Interval<T> {}

impl<T: Scalar> PartialOrd for Interval<T> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl<T: Scalar> Ord for Interval<T> {
    fn cmp(&self, other: &Self) -> Ordering {
        (self.lo, self.hi, self.lo_open).cmp(&(other.lo, other.hi, other.lo_open))
    }
}

impl<T: Scalar> Interval<T> {
    pub fn closed(lo: ExtendedReal<T>, hi: ExtendedReal<T>) -> Self {
        Self {
            lo,
            hi,
            lo_open: false,
        }
    }

    pub fn validate(&self) -> Result<(), String> {
        if self.lo > self.hi {
            return Err(format!(
                "lower bound {} exceeds upper bound {}",
                self.lo, self.hi
            ));
        }
        if self.lo_open && self.lo == self.hi {
            return Err(format!(
                "half-open interval ({}, {}] is empty",
                self.lo, self.hi
            ));
        }
        if self.lo.is_pos_inf() || self.hi.is_neg_inf() {
            return Err("interval lies entirely at infinity".into());
        }
        Ok(())
    }

    #[inline]
    pub fn contains(&self, x: T) -> bool {
        let above = if self.lo_open {
            x > self.lo.value()
        } else {
            x >= self.lo.value()
        };
        above && x <= self.hi.value()
    }

    fn fmt_lo(&self) -> String {
        if self.lo_open {
            format!(">{}", self.lo)
        } else {
            self.lo.to_string()
        }
    }
}

/// Observation rectangle `I_1 × I_2` known to contain the hidden pair, with a multiplicity.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CensoringRectangle<T> {
    pub x: Interval<T>,
    pub y: Interval<T>,
    pub freq: u64,
}

impl<T: Scalar> Eq for CensoringRectangle<T> {}

impl<T: Scalar> CensoringRectangle<T> {
    pub fn new(x: Interval<T>, y: Interval<T>, freq: u64) -> Result<Self, DataError> {
        let rect = Self { x, y, freq };
        rect.validate().map_err(DataError::InvalidRectangle)?;
        Ok(rect)
    }

    /// Closed rectangle `[l1, r1] × [l2, r2]`.
    pub fn closed(l1: T, r1: T, l2: T, r2: T, freq: u64) -> Result<Self, DataError> {
        let bound = |v: T| {
            ExtendedReal::new(v).ok_or_else(|| DataError::InvalidRectangle("NaN bound".into()))
        };
        Self::new(
            Interval::closed(bound(l1)?, bound(r1)?),
            Interval::closed(bound(l2)?, bound(r2)?),
            freq,
        )
    }

    pub fn validate(&self) -> Result<(), String> {
        self.x
            .validate()
            .map_err(|e| format!("first coordinate: {e}"))?;
        self.y
            .validate()
            .map_err(|e| format!("second coordinate: {e}"))?;
        if self.freq == 0 {
            return Err("frequency must be positive".into());
        }
        Ok(())
    }

    pub fn l1(&self) -> ExtendedReal<T> {
        self.x.lo
    }
    pub fn r1(&self) -> ExtendedReal<T> {
        self.x.hi
    }
    pub fn l2(&self) -> ExtendedReal<T> {
        self.y.lo
    }
    pub fn r2(&self) -> ExtendedReal<T> {
        self.y.hi
    }

    #[inline]
    pub fn contains(&self, x: T, y: T) -> bool {
        self.x.contains(x) && self.y.contains(y)
    }

    /// Geometric part only, used when merging duplicates.
    fn key(&self) -> (Interval<T>, Interval<T>) {
        (self.x, self.y)
    }
}

/// Bivariate current-status record: `delta1 = 1{X <= t}`, `delta2 = 1{Y <= u}`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CurrentStatusObs<T> {
    pub t: T,
    pub u: T,
    pub delta1: bool,
    pub delta2: bool,
}

impl<T: Scalar> CurrentStatusObs<T> {
    pub fn new(t: T, u: T, delta1: bool, delta2: bool) -> Self {
        Self {
            t,
            u,
            delta1,
            delta2,
        }
    }

    /// Quadrant anchored at `(t, u)`: `(-inf, t]` when `delta1`, else `(t, inf)`;
    /// likewise for the second coordinate.
    pub fn to_rectangle(&self) -> CensoringRectangle<T> {
        let side = |at: T, delta: bool| {
            if delta {
                Interval::closed(ExtendedReal::neg_inf(), ExtendedReal::finite(at))
            } else {
                Interval {
                    lo: ExtendedReal::finite(at),
                    hi: ExtendedReal::pos_inf(),
                    lo_open: true,
                }
            }
        };
        CensoringRectangle {
            x: side(self.t, self.delta1),
            y: side(self.u, self.delta2),
            freq: 1,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DataKind {
    CurrentStatus,
    Case2,
}

/// Immutable collection of censoring rectangles with total frequency `n`.
#[derive(Clone, Debug, PartialEq)]
pub struct Dataset<T> {
    rectangles: Vec<CensoringRectangle<T>>,
    n: u64,
    kind: DataKind,
}

impl<T: Scalar> Dataset<T> {
    pub fn new(rectangles: Vec<CensoringRectangle<T>>, kind: DataKind) -> Result<Self, DataError> {
        if rectangles.is_empty() {
            return Err(DataError::Empty);
        }
        for (i, r) in rectangles.iter().enumerate() {
            r.validate().map_err(|reason| DataError::Validation {
                line: i as u64 + 1,
                reason,
            })?;
        }
        let n = rectangles.iter().map(|r| r.freq).sum();
        Ok(Self {
            rectangles,
            n,
            kind,
        })
    }

    pub fn rectangles(&self) -> &[CensoringRectangle<T>] {
        &self.rectangles
    }

    pub fn len(&self) -> usize {
        self.rectangles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rectangles.is_empty()
    }

    /// Total frequency.
    pub fn n(&self) -> u64 {
        self.n
    }

    pub fn kind(&self) -> DataKind {
        self.kind
    }

    pub fn frequencies(&self) -> Vec<u64> {
        self.rectangles.iter().map(|r| r.freq).collect()
    }

    /// Largest finite bound on each axis, if any.
    pub fn max_finite(&self) -> [Option<T>; 2] {
        let mut out = [None, None];
        for r in &self.rectangles {
            for (axis, iv) in [r.x, r.y].iter().enumerate() {
                for b in [iv.lo, iv.hi] {
                    if b.is_finite() {
                        let v = b.value();
                        out[axis] = Some(out[axis].map_or(v, |m: T| m.max(v)));
                    }
                }
            }
        }
        out
    }

    /// Smallest finite bound on each axis, if any.
    pub fn min_finite(&self) -> [Option<T>; 2] {
        let mut out = [None, None];
        for r in &self.rectangles {
            for (axis, iv) in [r.x, r.y].iter().enumerate() {
                for b in [iv.lo, iv.hi] {
                    if b.is_finite() {
                        let v = b.value();
                        out[axis] = Some(out[axis].map_or(v, |m: T| m.min(v)));
                    }
                }
            }
        }
        out
    }

    /// Serializes to the rectangle CSV format (with header).
    pub fn to_csv(&self) -> String {
        let mut out = String::from("L1,R1,L2,R2,freq\n");
        for r in &self.rectangles {
            out.push_str(&format!(
                "{},{},{},{},{}\n",
                r.x.fmt_lo(),
                r.x.hi,
                r.y.fmt_lo(),
                r.y.hi,
                r.freq
            ));
        }
        out
    }
}

fn parse_lower<T: Scalar>(token: &str) -> Option<(ExtendedReal<T>, bool)> {
    match token.strip_prefix('>') {
        Some(rest) => ExtendedReal::parse(rest.trim()).map(|v| (v, true)),
        None => ExtendedReal::parse(token).map(|v| (v, false)),
    }
}

/// Parses rectangle CSV text. A leading `L1,...` header line is optional; blank lines
/// and `#` comments are skipped. Rectangles keep file order.
pub fn parse_rectangle_csv<T: Scalar>(text: &str) -> Result<Dataset<T>, DataError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .flexible(true)
        .from_reader(text.as_bytes());

    let mut rectangles = Vec::new();
    for (idx, record) in reader.records().enumerate() {
        let record = record?;
        let line = record.position().map_or(idx as u64 + 1, |p| p.line());
        if record.iter().all(|f| f.is_empty()) {
            continue;
        }
        if record.len() != 5 {
            return Err(DataError::FieldCount {
                line,
                found: record.len(),
            });
        }
        if rectangles.is_empty() && record[0].eq_ignore_ascii_case("L1") {
            continue;
        }
        let bad = |field: &'static str, token: &str| DataError::Parse {
            line,
            field,
            token: token.to_string(),
        };
        let (l1, open1) = parse_lower::<T>(&record[0]).ok_or_else(|| bad("L1", &record[0]))?;
        let r1 = ExtendedReal::<T>::parse(&record[1]).ok_or_else(|| bad("R1", &record[1]))?;
        let (l2, open2) = parse_lower::<T>(&record[2]).ok_or_else(|| bad("L2", &record[2]))?;
        let r2 = ExtendedReal::<T>::parse(&record[3]).ok_or_else(|| bad("R2", &record[3]))?;
        let freq: i64 = record[4].parse().map_err(|_| bad("freq", &record[4]))?;
        if freq <= 0 {
            return Err(DataError::Validation {
                line,
                reason: format!("frequency must be positive, found {freq}"),
            });
        }
        let rect = CensoringRectangle {
            x: Interval {
                lo: l1,
                hi: r1,
                lo_open: open1,
            },
            y: Interval {
                lo: l2,
                hi: r2,
                lo_open: open2,
            },
            freq: freq as u64,
        };
        rect.validate()
            .map_err(|reason| DataError::Validation { line, reason })?;
        rectangles.push(rect);
    }
    Dataset::new(rectangles, DataKind::Case2)
}

pub fn read_rectangle_csv<T: Scalar>(path: impl AsRef<Path>) -> Result<Dataset<T>, DataError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| DataError::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_rectangle_csv(&text)
}

/// Parses current-status CSV text; the `t,u,delta1,delta2` header is optional.
pub fn parse_cs_csv<T: Scalar>(text: &str) -> Result<Vec<CurrentStatusObs<T>>, DataError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .flexible(true)
        .from_reader(text.as_bytes());

    let mut out = Vec::new();
    for (idx, record) in reader.records().enumerate() {
        let record = record?;
        let line = record.position().map_or(idx as u64 + 1, |p| p.line());
        if record.iter().all(|f| f.is_empty()) {
            continue;
        }
        if record.len() != 4 {
            return Err(DataError::CsFieldCount {
                line,
                found: record.len(),
            });
        }
        if out.is_empty() && record[0].eq_ignore_ascii_case("t") {
            continue;
        }
        let bad = |field: &'static str, token: &str| DataError::Parse {
            line,
            field,
            token: token.to_string(),
        };
        let time = |field: &'static str, token: &str| {
            token
                .parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .map(T::lit)
                .ok_or_else(|| bad(field, token))
        };
        let flag = |field: &'static str, token: &str| match token {
            "1" | "true" => Ok(true),
            "0" | "false" => Ok(false),
            _ => Err(bad(field, token)),
        };
        out.push(CurrentStatusObs::new(
            time("t", &record[0])?,
            time("u", &record[1])?,
            flag("delta1", &record[2])?,
            flag("delta2", &record[3])?,
        ));
    }
    if out.is_empty() {
        return Err(DataError::Empty);
    }
    Ok(out)
}

pub fn read_cs_csv<T: Scalar>(
    path: impl AsRef<Path>,
) -> Result<Vec<CurrentStatusObs<T>>, DataError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| DataError::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_cs_csv(&text)
}

pub fn cs_to_csv<T: Scalar>(obs: &[CurrentStatusObs<T>]) -> String {
    let mut out = String::from("t,u,delta1,delta2\n");
    for o in obs {
        out.push_str(&format!(
            "{},{},{},{}\n",
            o.t,
            o.u,
            u8::from(o.delta1),
            u8::from(o.delta2)
        ));
    }
    out
}

/// Maps each current-status record to its quadrant rectangle and merges duplicates,
/// keeping first-occurrence order.
pub fn cs_to_rectangles<T: Scalar>(obs: &[CurrentStatusObs<T>]) -> Result<Dataset<T>, DataError> {
    let mut index: BTreeMap<(Interval<T>, Interval<T>), usize> = BTreeMap::new();
    let mut rectangles: Vec<CensoringRectangle<T>> = Vec::new();
    for o in obs {
        if !(o.t.is_finite() && o.u.is_finite()) {
            return Err(DataError::InvalidRectangle(
                "observation times must be finite".into(),
            ));
        }
        let rect = o.to_rectangle();
        match index.get(&rect.key()) {
            Some(&i) => rectangles[i].freq += 1,
            None => {
                index.insert(rect.key(), rectangles.len());
                rectangles.push(rect);
            }
        }
    }
    Dataset::new(rectangles, DataKind::CurrentStatus)
}

/// The Betensky–Finkelstein data: 87 rectangles, total frequency 204.
pub fn bf_dataset<T: Scalar>() -> Dataset<T> {
    parse_rectangle_csv(BF_CSV).expect("bundled dataset is valid")
}
