//! Multi-dimensional knapsack instances: data model, text formats and an exact
//! classical oracle.
//!
//! Bits are stored as `bool`. Item `i` of an [`Assignment`] is decision
//! variable `x_{i+1}`.

use std::cmp::Ordering;
use std::fmt;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest `n` accepted by [`exact_optimum`].
pub const ORACLE_MAX_ITEMS: usize = 40;
/// Largest `n` accepted by [`exhaustive_optimum`].
pub const EXHAUSTIVE_MAX_ITEMS: usize = 24;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MdkpInstance {
    name: String,
    values: Vec<i64>,
    /// `d` rows of `n` entries: `weights[j][i]` is the weight of item `i` in dimension `j`.
    weights: Vec<Vec<i64>>,
    capacities: Vec<i64>,
    known_optimum: Option<i64>,
}

impl MdkpInstance {
    pub fn new(
        name: impl Into<String>,
        values: Vec<i64>,
        weights: Vec<Vec<i64>>,
        capacities: Vec<i64>,
        known_optimum: Option<i64>,
    ) -> Result<Self> {
        let n = values.len();
        let d = capacities.len();
        if n == 0 {
            return Err(Error::InvalidInstance("n must be at least 1".into()));
        }
        if d == 0 {
            return Err(Error::InvalidInstance("d must be at least 1".into()));
        }
        if weights.len() != d {
            return Err(Error::InvalidInstance(format!(
                "expected {d} weight rows, found {}",
                weights.len()
            )));
        }
        for (j, row) in weights.iter().enumerate() {
            if row.len() != n {
                return Err(Error::InvalidInstance(format!(
                    "weight row {} has {} entries, expected {n}",
                    j + 1,
                    row.len()
                )));
            }
        }
        let negative = values.iter().any(|&v| v < 0)
            || capacities.iter().any(|&c| c < 0)
            || weights.iter().flatten().any(|&w| w < 0)
            || known_optimum.is_some_and(|c| c < 0);
        if negative {
            return Err(Error::InvalidInstance("negative coefficient".into()));
        }

        // The largest loss magnitude any formulation produces is 2·d·Σv; keep it in i64.
        let overflow = || Error::Overflow("instance coefficients too large for 64-bit losses".into());
        let value_sum = values
            .iter()
            .try_fold(0i64, |acc, &v| acc.checked_add(v))
            .ok_or_else(overflow)?;
        value_sum
            .checked_mul(2)
            .and_then(|x| x.checked_mul(d as i64))
            .ok_or_else(overflow)?;
        for row in &weights {
            row.iter()
                .try_fold(0i64, |acc, &w| acc.checked_add(w))
                .ok_or_else(overflow)?;
        }

        Ok(Self {
            name: name.into(),
            values,
            weights,
            capacities,
            known_optimum,
        })
    }

    pub fn with_name(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    /// Number of decision variables.
    pub fn n(&self) -> usize {
        self.values.len()
    }

    /// Number of constraints.
    pub fn d(&self) -> usize {
        self.capacities.len()
    }

    pub fn values(&self) -> &[i64] {
        &self.values
    }

    pub fn weights(&self) -> &[Vec<i64>] {
        &self.weights
    }

    pub fn capacities(&self) -> &[i64] {
        &self.capacities
    }

    pub fn known_optimum(&self) -> Option<i64> {
        self.known_optimum
    }

    pub fn value_sum(&self) -> i64 {
        self.values.iter().sum()
    }

    /// Σ v_i x_i, ignoring feasibility.
    pub fn objective(&self, x: &Assignment) -> Result<i64> {
        self.check_len(x)?;
        Ok(self
            .values
            .iter()
            .zip(x.bits())
            .filter(|(_, &b)| b)
            .map(|(v, _)| v)
            .sum())
    }

    /// Per-constraint load Σ_i w_ij x_i.
    pub fn loads(&self, x: &Assignment) -> Result<Vec<i64>> {
        self.check_len(x)?;
        Ok(self
            .weights
            .iter()
            .map(|row| {
                row.iter()
                    .zip(x.bits())
                    .filter(|(_, &b)| b)
                    .map(|(w, _)| w)
                    .sum()
            })
            .collect())
    }

    fn check_len(&self, x: &Assignment) -> Result<()> {
        if x.len() != self.n() {
            return Err(Error::LengthMismatch {
                expected: self.n(),
                actual: x.len(),
            });
        }
        Ok(())
    }

    /// Serializes to the canonical text format.
    pub fn to_canonical(&self) -> String {
        fn line(xs: &[i64]) -> String {
            xs.iter().map(i64::to_string).collect::<Vec<_>>().join(" ")
        }
        let mut out = format!(
            "{} {} {}\n",
            self.n(),
            self.d(),
            self.known_optimum.unwrap_or(0)
        );
        out.push_str(&line(&self.values));
        out.push('\n');
        for row in &self.weights {
            out.push_str(&line(row));
            out.push('\n');
        }
        out.push_str(&line(&self.capacities));
        out.push('\n');
        out
    }
}

/// A 0/1 decision vector.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(into = "String", try_from = "String")]
pub struct Assignment(Vec<bool>);

impl Assignment {
    pub fn new(bits: Vec<bool>) -> Self {
        Self(bits)
    }

    pub fn zeros(n: usize) -> Self {
        Self(vec![false; n])
    }

    pub fn bits(&self) -> &[bool] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn parse(s: &str) -> Result<Self> {
        s.chars()
            .enumerate()
            .map(|(i, c)| match c {
                '0' => Ok(false),
                '1' => Ok(true),
                _ => Err(Error::Parse {
                    line: 1,
                    column: i + 1,
                    message: format!("expected '0' or '1', found {c:?}"),
                }),
            })
            .collect::<Result<Vec<_>>>()
            .map(Self)
    }
}

impl fmt::Display for Assignment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for &b in &self.0 {
            f.write_str(if b { "1" } else { "0" })?;
        }
        Ok(())
    }
}

impl From<Assignment> for String {
    fn from(a: Assignment) -> Self {
        a.to_string()
    }
}

impl TryFrom<String> for Assignment {
    type Error = Error;
    fn try_from(s: String) -> Result<Self> {
        Self::parse(&s)
    }
}

pub fn is_feasible(inst: &MdkpInstance, x: &Assignment) -> Result<bool> {
    Ok(inst
        .loads(x)?
        .iter()
        .zip(inst.capacities())
        .all(|(load, cap)| load <= cap))
}

// ---------------------------------------------------------------------------
// Text formats
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum InstanceFormat {
    /// `n d C` / profits / d weight rows / capacities, one group per line.
    Canonical,
    /// OR-Library style token stream; see [`parse_orlib_collection`].
    Orlib,
}

#[derive(Debug, Clone, Copy)]
struct Token<'a> {
    text: &'a str,
    line: usize,
    column: usize,
}

impl Token<'_> {
    fn error(&self, message: impl Into<String>) -> Error {
        Error::Parse {
            line: self.line,
            column: self.column,
            message: message.into(),
        }
    }

    fn integer(&self) -> Result<i64> {
        let v: i64 = self
            .text
            .parse()
            .map_err(|_| self.error(format!("non-integer token {:?}", self.text)))?;
        if v < 0 {
            return Err(self.error(format!("negative coefficient {v}")));
        }
        Ok(v)
    }

    /// Accepts `12`, `12.0`; rejects `12.5`.
    fn integral_number(&self) -> Result<i64> {
        if let Ok(v) = self.integer() {
            return Ok(v);
        }
        match self.text.parse::<f64>() {
            Ok(f) if f.is_finite() && f >= 0.0 && f.fract() == 0.0 && f < 9.0e18 => Ok(f as i64),
            Ok(f) if f < 0.0 => Err(self.error(format!("negative coefficient {}", self.text))),
            _ => Err(self.error(format!("non-integer token {:?}", self.text))),
        }
    }

    fn count(&self, what: &str) -> Result<usize> {
        let v = self.integer()?;
        if v < 1 {
            return Err(self.error(format!("{what} must be at least 1")));
        }
        Ok(v as usize)
    }
}

fn strip_comment(line: &str) -> &str {
    let cut = [line.find("//"), line.find('#')]
        .into_iter()
        .flatten()
        .min()
        .unwrap_or(line.len());
    &line[..cut]
}

fn tokenize_lines(text: &str, comments: bool) -> Vec<Vec<Token<'_>>> {
    text.lines()
        .enumerate()
        .map(|(ln, raw)| {
            let body = if comments { strip_comment(raw) } else { raw };
            let mut tokens = Vec::new();
            let mut start = None;
            for (pos, ch) in body.char_indices().chain(std::iter::once((body.len(), ' '))) {
                match (ch.is_whitespace(), start) {
                    (false, None) => start = Some(pos),
                    (true, Some(s)) => {
                        tokens.push(Token {
                            text: &body[s..pos],
                            line: ln + 1,
                            column: s + 1,
                        });
                        start = None;
                    }
                    _ => {}
                }
            }
            tokens
        })
        .filter(|t| !t.is_empty())
        .collect()
}

fn end_of(text: &str) -> (usize, usize) {
    let line = text.lines().count().max(1);
    let column = text.lines().last().map_or(0, str::len) + 1;
    (line, column)
}

pub fn parse_instance(text: &str, format: InstanceFormat) -> Result<MdkpInstance> {
    match format {
        InstanceFormat::Canonical => parse_canonical(text),
        InstanceFormat::Orlib => {
            let mut all = parse_orlib_collection(text)?;
            if all.len() != 1 {
                return Err(Error::Parse {
                    line: 1,
                    column: 1,
                    message: format!("file holds {} problems; expected exactly one", all.len()),
                });
            }
            Ok(all.remove(0))
        }
    }
}

fn parse_canonical(text: &str) -> Result<MdkpInstance> {
    let lines = tokenize_lines(text, false);
    let eof = || {
        let (line, column) = end_of(text);
        Error::Parse {
            line,
            column,
            message: "unexpected end of input".into(),
        }
    };
    let header = lines.first().ok_or_else(eof)?;
    if header.len() != 3 {
        let at = header[0];
        return Err(at.error(format!(
            "malformed header: expected `n d C`, found {} tokens",
            header.len()
        )));
    }
    let n = header[0].count("n")?;
    let d = header[1].count("d")?;
    let known = header[2].integer()?;

    let row = |idx: usize, expected: usize, what: &str| -> Result<Vec<i64>> {
        let toks = lines.get(idx).ok_or_else(eof)?;
        if toks.len() != expected {
            return Err(toks[0].error(format!(
                "dimension mismatch: expected {expected} {what}, found {}",
                toks.len()
            )));
        }
        toks.iter().map(Token::integer).collect()
    };

    let values = row(1, n, "profits")?;
    let weights = (0..d)
        .map(|j| row(2 + j, n, "weights"))
        .collect::<Result<Vec<_>>>()?;
    let capacities = row(2 + d, d, "capacities")?;
    if let Some(extra) = lines.get(3 + d) {
        return Err(extra[0].error("dimension mismatch: trailing data after capacities"));
    }
    MdkpInstance::new("", values, weights, capacities, (known > 0).then_some(known))
}

/// Parses an OR-Library style file.
///
/// Grammar, over whitespace-separated tokens with `//` and `#` comments removed:
///
/// ```text
/// file    := [count] problem{count}
/// problem := n d opt  profit{n}  (weight{n}){d}  capacity{d}
/// ```
///
/// `count` is recognized only when the first non-comment line holds a single
/// token. `opt` may be written as a decimal with zero fraction; `0` means
/// unknown. Line breaks inside a problem are free-form.
pub fn parse_orlib_collection(text: &str) -> Result<Vec<MdkpInstance>> {
    let lines = tokenize_lines(text, true);
    let eof = || {
        let (line, column) = end_of(text);
        Error::Parse {
            line,
            column,
            message: "unexpected end of input".into(),
        }
    };
    let mut count = None;
    let mut stream: Vec<Token<'_>> = Vec::new();
    for (k, toks) in lines.iter().enumerate() {
        if k == 0 && toks.len() == 1 {
            count = Some(toks[0].count("problem count")?);
        } else {
            stream.extend_from_slice(toks);
        }
    }
    let mut it = stream.into_iter().peekable();
    let mut out = Vec::new();
    loop {
        if count.is_some_and(|c| out.len() == c) {
            break;
        }
        if count.is_none() && !out.is_empty() && it.peek().is_none() {
            break;
        }
        let mut next = || it.next().ok_or_else(eof);
        let n = next()?.count("n")?;
        let d = next()?.count("d")?;
        let known = next()?.integral_number()?;
        let values = (0..n)
            .map(|_| next()?.integer())
            .collect::<Result<Vec<_>>>()?;
        let weights = (0..d)
            .map(|_| (0..n).map(|_| next()?.integer()).collect::<Result<Vec<_>>>())
            .collect::<Result<Vec<_>>>()?;
        let capacities = (0..d)
            .map(|_| next()?.integer())
            .collect::<Result<Vec<_>>>()?;
        out.push(MdkpInstance::new(
            "",
            values,
            weights,
            capacities,
            (known > 0).then_some(known),
        )?);
    }
    if let Some(extra) = it.next() {
        return Err(extra.error("dimension mismatch: trailing tokens after last problem"));
    }
    Ok(out)
}

/// Reads an instance file, naming it after the file stem.
pub fn load_instance(path: impl AsRef<Path>, format: InstanceFormat) -> Result<MdkpInstance> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path)?;
    let name = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    Ok(parse_instance(&text, format)?.with_name(name))
}

/// Directory holding the instances shipped with this crate.
pub fn bundled_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("instances")
}

/// Loads `<bundled_dir>/<name>.txt` in canonical format.
pub fn load_bundled(name: &str) -> Result<MdkpInstance> {
    load_instance(bundled_dir().join(format!("{name}.txt")), InstanceFormat::Canonical)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CatalogEntry {
    pub name: &'static str,
    pub n: usize,
    pub d: usize,
}

/// Benchmark instances used in the custom-penalty study, with their sizes.
pub const BENCHMARK_CATALOG: &[CatalogEntry] = &[
    CatalogEntry { name: "hp1", n: 28, d: 4 },
    CatalogEntry { name: "hp2", n: 35, d: 4 },
    CatalogEntry { name: "pb1", n: 27, d: 4 },
    CatalogEntry { name: "pb2", n: 34, d: 4 },
    CatalogEntry { name: "pb4", n: 29, d: 2 },
    CatalogEntry { name: "pb5", n: 20, d: 10 },
    CatalogEntry { name: "pet2", n: 10, d: 10 },
    CatalogEntry { name: "pet3", n: 15, d: 10 },
    CatalogEntry { name: "pet4", n: 20, d: 10 },
    CatalogEntry { name: "pet5", n: 28, d: 10 },
    CatalogEntry { name: "pet6", n: 39, d: 5 },
    CatalogEntry { name: "pet7", n: 50, d: 5 },
];

pub fn catalog_entry(name: &str) -> Option<&'static CatalogEntry> {
    BENCHMARK_CATALOG.iter().find(|e| e.name == name)
}

// ---------------------------------------------------------------------------
// Exact oracle
// ---------------------------------------------------------------------------

/// Depth-first branch-and-bound. Items are branched in decreasing value
/// density; each node is bounded by the tightest single-constraint LP
/// relaxation over the undecided items.
pub fn exact_optimum(inst: &MdkpInstance) -> Result<(Assignment, i64)> {
    if inst.n() > ORACLE_MAX_ITEMS {
        return Err(Error::OracleBudget {
            n: inst.n(),
            max: ORACLE_MAX_ITEMS,
        });
    }
    let mut bb = BranchAndBound::new(inst);
    bb.search(0);
    let mut bits = vec![false; inst.n()];
    for (pos, &take) in bb.best.iter().enumerate() {
        bits[bb.order[pos]] = take;
    }
    Ok((Assignment::new(bits), bb.best_value))
}

struct BranchAndBound<'a> {
    inst: &'a MdkpInstance,
    /// Branching order: position -> item.
    order: Vec<usize>,
    /// Per constraint, branching positions sorted by v/w descending.
    ratio_order: Vec<Vec<usize>>,
    load: Vec<i64>,
    value: i64,
    current: Vec<bool>,
    best: Vec<bool>,
    best_value: i64,
}

impl<'a> BranchAndBound<'a> {
    fn new(inst: &'a MdkpInstance) -> Self {
        let n = inst.n();
        let density = |i: usize| {
            let size: f64 = inst
                .weights()
                .iter()
                .zip(inst.capacities())
                .map(|(row, &cap)| row[i] as f64 / cap.max(1) as f64)
                .sum();
            inst.values()[i] as f64 / size.max(1e-12)
        };
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| density(b).total_cmp(&density(a)).then(a.cmp(&b)));

        let ratio_order = inst
            .weights()
            .iter()
            .map(|row| {
                let mut pos: Vec<usize> = (0..n).collect();
                pos.sort_by(|&pa, &pb| {
                    let (a, b) = (order[pa], order[pb]);
                    ratio_cmp(inst.values()[b], row[b], inst.values()[a], row[a]).then(pa.cmp(&pb))
                });
                pos
            })
            .collect();

        Self {
            inst,
            order,
            ratio_order,
            load: vec![0; inst.d()],
            value: 0,
            current: vec![false; n],
            best: vec![false; n],
            best_value: 0,
        }
    }

    /// Floor of min_j LP bound over positions >= depth.
    fn bound(&self, depth: usize) -> i64 {
        let mut tightest = i128::MAX;
        for (j, positions) in self.ratio_order.iter().enumerate() {
            let row = &self.inst.weights()[j];
            let mut room = (self.inst.capacities()[j] - self.load[j]) as i128;
            let mut total = self.value as i128;
            for &pos in positions.iter().filter(|&&p| p >= depth) {
                let item = self.order[pos];
                let (v, w) = (self.inst.values()[item] as i128, row[item] as i128);
                if w <= room {
                    room -= w;
                    total += v;
                } else {
                    total += v * room / w;
                    break;
                }
            }
            tightest = tightest.min(total);
        }
        tightest as i64
    }

    fn search(&mut self, depth: usize) {
        if self.value > self.best_value {
            self.best_value = self.value;
            self.best.clone_from(&self.current);
        }
        if depth == self.order.len() || self.bound(depth) <= self.best_value {
            return;
        }
        let item = self.order[depth];
        let fits = self
            .inst
            .weights()
            .iter()
            .zip(&self.load)
            .zip(self.inst.capacities())
            .all(|((row, load), cap)| load + row[item] <= *cap);
        if fits {
            for (load, row) in self.load.iter_mut().zip(self.inst.weights()) {
                *load += row[item];
            }
            self.value += self.inst.values()[item];
            self.current[depth] = true;
            self.search(depth + 1);
            self.current[depth] = false;
            self.value -= self.inst.values()[item];
            for (load, row) in self.load.iter_mut().zip(self.inst.weights()) {
                *load -= row[item];
            }
        }
        self.search(depth + 1);
    }
}

/// Compares v1/w1 with v2/w2, where a zero weight counts as an infinite ratio.
fn ratio_cmp(v1: i64, w1: i64, v2: i64, w2: i64) -> Ordering {
    match (w1 == 0, w2 == 0) {
        (true, true) => v1.cmp(&v2),
        (true, false) => Ordering::Greater,
        (false, true) => Ordering::Less,
        (false, false) => (v1 as i128 * w2 as i128).cmp(&(v2 as i128 * w1 as i128)),
    }
}

/// Enumerates all 2^n assignments. Independent of [`exact_optimum`]; used as a
/// cross-check for small instances.
pub fn exhaustive_optimum(inst: &MdkpInstance) -> Result<(Assignment, i64)> {
    let n = inst.n();
    if n > EXHAUSTIVE_MAX_ITEMS {
        return Err(Error::OracleBudget {
            n,
            max: EXHAUSTIVE_MAX_ITEMS,
        });
    }
    let mut best_mask = 0u64;
    let mut best_value = 0i64;
    let mut load = vec![0i64; inst.d()];
    for mask in 0u64..(1u64 << n) {
        load.iter_mut().for_each(|l| *l = 0);
        let mut value = 0;
        for i in (0..n).filter(|i| mask >> i & 1 == 1) {
            value += inst.values()[i];
            for (l, row) in load.iter_mut().zip(inst.weights()) {
                *l += row[i];
            }
        }
        let feasible = load.iter().zip(inst.capacities()).all(|(l, c)| l <= c);
        if feasible && value > best_value {
            best_value = value;
            best_mask = mask;
        }
    }
    let bits = (0..n).map(|i| best_mask >> i & 1 == 1).collect();
    Ok((Assignment::new(bits), best_value))
}

/// Oracle optimum for the instance, failing if a recorded optimum disagrees.
pub fn verified_optimum(inst: &MdkpInstance) -> Result<i64> {
    let (_, computed) = exact_optimum(inst)?;
    match inst.known_optimum() {
        Some(recorded) if recorded != computed => Err(Error::OptimumMismatch {
            name: inst.name().to_string(),
            recorded,
            computed,
        }),
        _ => Ok(computed),
    }
}

/// `C_true` for reporting: the oracle when within budget, else the recorded optimum.
pub fn reference_optimum(inst: &MdkpInstance) -> Result<i64> {
    if inst.n() <= ORACLE_MAX_ITEMS {
        verified_optimum(inst)
    } else {
        inst.known_optimum().ok_or(Error::OracleBudget {
            n: inst.n(),
            max: ORACLE_MAX_ITEMS,
        })
    }
}
