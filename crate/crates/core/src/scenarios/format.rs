//! Scenario text format.
//!
//! ```text
//! # Mach-Zehnder
//! [space]
//! src m1 m2 d1 d2
//!
//! [init]
//! src
//!
//! [kernel S1]
//! step=1.0
//! src: m1=0.5,-0.5 m2=0.5,0.5
//! m1: identity
//! ...
//!
//! [chain]
//! S1 S2
//!
//! [query d1]
//! d1 time=2
//!
//! [param]
//! eta=1.0
//! ```
//!
//! `[init]` holds either one label or `label=re,im` pairs. Kernel rows are
//! `from: to=re,im ...` with omitted entries zero, or `from: identity`;
//! `step=` defaults to 1. A query without `time=` refers to the end of the
//! chain. Values may drop the imaginary part (`to=0.5`).
//!
//! A `[builder]` section (`name=which_path`) replaces `[space]`, `[init]`,
//! `[kernel]` and `[chain]` with a generated scenario; `[param]` then feeds
//! the builder and `[query]` sections, if any, replace its default queries.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::{self, Write as _};
use std::sync::Arc;

use ndarray::{Array1, Array2};

use super::{build_named, Scenario};
use crate::statespace::{Kernel, Proposition, StateSpace};
use crate::{CProb, Error, Real, Result, Tolerances};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum DiagnosticKind {
    SyntaxError,
    UnknownLabel,
    DuplicateLabel,
    UnknownKernel,
    UnknownParameter,
    InvalidValue,
    RowSumViolation,
    Missing,
}

impl fmt::Display for DiagnosticKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            DiagnosticKind::SyntaxError => "syntax error",
            DiagnosticKind::UnknownLabel => "unknown label",
            DiagnosticKind::DuplicateLabel => "duplicate label",
            DiagnosticKind::UnknownKernel => "unknown kernel",
            DiagnosticKind::UnknownParameter => "unknown parameter",
            DiagnosticKind::InvalidValue => "invalid value",
            DiagnosticKind::RowSumViolation => "row sum violation",
            DiagnosticKind::Missing => "missing section",
        })
    }
}

/// One problem found while reading a scenario file. Line 0 refers to the
/// file as a whole.
#[derive(Debug, Clone, PartialEq)]
pub struct ParseDiagnostic {
    pub line: usize,
    pub kind: DiagnosticKind,
    pub message: String,
}

impl fmt::Display for ParseDiagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.line > 0 {
            write!(f, "line {}: ", self.line)?;
        }
        write!(f, "{}: {}", self.kind, self.message)
    }
}

struct Section<'a> {
    kind: &'a str,
    arg: Option<&'a str>,
    line: usize,
    body: Vec<(usize, &'a str)>,
}

#[derive(Default)]
struct Diagnostics(Vec<ParseDiagnostic>);

impl Diagnostics {
    fn push(&mut self, line: usize, kind: DiagnosticKind, message: impl Into<String>) {
        self.0.push(ParseDiagnostic {
            line,
            kind,
            message: message.into(),
        });
    }
}

fn split_sections<'a>(text: &'a str, diags: &mut Diagnostics) -> Vec<Section<'a>> {
    let mut sections: Vec<Section<'a>> = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        if let Some(inner) = content.strip_prefix('[') {
            let Some(inner) = inner.strip_suffix(']') else {
                diags.push(line, DiagnosticKind::SyntaxError, format!("unterminated section header `{content}`"));
                continue;
            };
            let mut words = inner.split_whitespace();
            let kind = words.next().unwrap_or("");
            let arg = words.next();
            if words.next().is_some() {
                diags.push(line, DiagnosticKind::SyntaxError, format!("section header `{content}` has extra words"));
            }
            sections.push(Section {
                kind,
                arg,
                line,
                body: Vec::new(),
            });
        } else if let Some(s) = sections.last_mut() {
            s.body.push((line, content));
        } else {
            diags.push(line, DiagnosticKind::SyntaxError, "content before the first section header");
        }
    }
    sections
}

fn parse_number(s: &str) -> Option<f64> {
    let ok = !s.is_empty()
        && s.chars().all(|c| c.is_ascii_digit() || matches!(c, '+' | '-' | '.' | 'e' | 'E'))
        && s.chars().any(|c| c.is_ascii_digit());
    ok.then(|| s.parse::<f64>().ok()).flatten().filter(|v| v.is_finite())
}

fn parse_value<T: Real>(s: &str) -> Option<CProb<T>> {
    let (re, im) = match s.split_once(',') {
        Some((re, im)) => (parse_number(re)?, parse_number(im)?),
        None => (parse_number(s)?, 0.0),
    };
    Some(CProb::new(T::lit(re), T::lit(im)))
}

fn valid_label(s: &str) -> bool {
    !s.is_empty() && !s.contains(['=', ':', ',', '[', ']'])
}

fn key_value(text: &str) -> Option<(&str, &str)> {
    let (k, v) = text.split_once('=')?;
    let (k, v) = (k.trim(), v.trim());
    (!k.is_empty() && !v.is_empty()).then_some((k, v))
}

struct Parser<'a, T: Real> {
    tol: &'a Tolerances,
    diags: Diagnostics,
    _scalar: std::marker::PhantomData<T>,
}

impl<'a, T: Real> Parser<'a, T> {
    fn space(&mut self, s: &Section) -> Option<Arc<StateSpace>> {
        let mut labels: Vec<&str> = Vec::new();
        for &(line, text) in &s.body {
            for w in text.split_whitespace() {
                if !valid_label(w) {
                    self.diags.push(line, DiagnosticKind::SyntaxError, format!("`{w}` is not a valid state label"));
                } else if labels.contains(&w) {
                    self.diags.push(line, DiagnosticKind::DuplicateLabel, format!("state `{w}` declared twice"));
                } else {
                    labels.push(w);
                }
            }
        }
        if labels.is_empty() {
            self.diags.push(s.line, DiagnosticKind::SyntaxError, "[space] declares no states");
            return None;
        }
        StateSpace::new(labels).ok().map(Arc::new)
    }

    fn label(&mut self, space: &StateSpace, line: usize, label: &str) -> Option<usize> {
        let found = space.index_of(label).ok();
        if found.is_none() {
            self.diags.push(line, DiagnosticKind::UnknownLabel, format!("state `{label}` is not declared in [space]"));
        }
        found
    }

    fn init(&mut self, s: &Section, space: &StateSpace) -> Option<Array1<CProb<T>>> {
        let words: Vec<(usize, &str)> = s
            .body
            .iter()
            .flat_map(|&(line, text)| text.split_whitespace().map(move |w| (line, w)))
            .collect();
        let zero = CProb::new(T::zero(), T::zero());
        let mut v = Array1::from_elem(space.dimension(), zero);
        match words.as_slice() {
            [] => {
                self.diags.push(s.line, DiagnosticKind::SyntaxError, "[init] is empty");
                return None;
            }
            [(line, w)] if !w.contains('=') => {
                v[self.label(space, *line, w)?] = CProb::new(T::one(), T::zero());
                return Some(v);
            }
            _ => {}
        }
        let mut seen = BTreeSet::new();
        let mut ok = true;
        for &(line, w) in &words {
            let Some((label, value)) = w.split_once('=') else {
                self.diags.push(line, DiagnosticKind::SyntaxError, format!("expected `label=re,im`, found `{w}`"));
                ok = false;
                continue;
            };
            let Some(i) = self.label(space, line, label) else {
                ok = false;
                continue;
            };
            match parse_value::<T>(value) {
                Some(z) if seen.insert(i) => v[i] = z,
                Some(_) => {
                    self.diags.push(line, DiagnosticKind::SyntaxError, format!("state `{label}` assigned twice"));
                    ok = false;
                }
                None => {
                    self.diags.push(line, DiagnosticKind::InvalidValue, format!("`{value}` is not a number pair"));
                    ok = false;
                }
            }
        }
        if !ok {
            return None;
        }
        let sum: CProb<T> = v.iter().copied().sum();
        let dev = (sum - CProb::new(T::one(), T::zero())).norm();
        if !(dev <= T::lit(self.tol.row_sum)) {
            self.diags.push(
                s.line,
                DiagnosticKind::RowSumViolation,
                format!("initial vector sums to {:?},{:?} instead of 1", sum.re, sum.im),
            );
            return None;
        }
        Some(v)
    }

    fn kernel(&mut self, s: &Section, name: &str, space: &Arc<StateSpace>) -> Option<Kernel<T>> {
        let n = space.dimension();
        let zero = CProb::new(T::zero(), T::zero());
        let mut entries = Array2::from_elem((n, n), zero);
        let mut row_lines: Vec<Option<usize>> = vec![None; n];
        let mut step = T::one();
        let mut ok = true;
        for &(line, text) in &s.body {
            if let Some(value) = text.strip_prefix("step").and_then(|r| r.trim_start().strip_prefix('=')) {
                let value = value.trim();
                match parse_number(value).filter(|v| *v > 0.0) {
                    Some(v) => step = T::lit(v),
                    None => {
                        self.diags.push(line, DiagnosticKind::InvalidValue, format!("step `{value}` must be a positive number"));
                        ok = false;
                    }
                }
                continue;
            }
            let Some((from, rest)) = text.split_once(':') else {
                self.diags.push(line, DiagnosticKind::SyntaxError, format!("expected `from: to=re,im ...`, found `{text}`"));
                ok = false;
                continue;
            };
            let Some(r) = self.label(space, line, from.trim()) else {
                ok = false;
                continue;
            };
            if let Some(first) = row_lines[r] {
                self.diags.push(
                    line,
                    DiagnosticKind::SyntaxError,
                    format!("row `{}` of kernel `{name}` already given on line {first}", space.label(r)),
                );
                ok = false;
                continue;
            }
            row_lines[r] = Some(line);
            let words: Vec<&str> = rest.split_whitespace().collect();
            if words == ["identity"] {
                entries[[r, r]] = CProb::new(T::one(), T::zero());
                continue;
            }
            let mut seen = BTreeSet::new();
            for w in words {
                let Some((to, value)) = w.split_once('=') else {
                    self.diags.push(line, DiagnosticKind::SyntaxError, format!("expected `to=re,im`, found `{w}`"));
                    ok = false;
                    continue;
                };
                let Some(c) = self.label(space, line, to) else {
                    ok = false;
                    continue;
                };
                if !seen.insert(c) {
                    self.diags.push(line, DiagnosticKind::SyntaxError, format!("entry `{to}` repeated in row `{}`", space.label(r)));
                    ok = false;
                    continue;
                }
                match parse_value::<T>(value) {
                    Some(z) => entries[[r, c]] = z,
                    None => {
                        self.diags.push(line, DiagnosticKind::InvalidValue, format!("`{value}` is not a number pair"));
                        ok = false;
                    }
                }
            }
        }
        if !ok {
            return None;
        }
        let one = CProb::new(T::one(), T::zero());
        for r in 0..n {
            let sum: CProb<T> = entries.row(r).iter().copied().sum();
            let dev = (sum - one).norm();
            if !(dev <= T::lit(self.tol.row_sum)) {
                let (line, what) = match row_lines[r] {
                    Some(l) => (l, "sums to"),
                    None => (s.line, "is missing and sums to"),
                };
                self.diags.push(
                    line,
                    DiagnosticKind::RowSumViolation,
                    format!(
                        "row `{}` of kernel `{name}` {what} {:?},{:?} (deviation {:.3e})",
                        space.label(r),
                        sum.re,
                        sum.im,
                        dev.to_f64().unwrap_or(f64::NAN)
                    ),
                );
                ok = false;
            }
        }
        if !ok {
            return None;
        }
        Kernel::new(space.clone(), step, entries).ok()
    }

    fn query(&mut self, s: &Section, space: &Arc<StateSpace>, chain_len: usize) -> Option<(String, Proposition)> {
        let Some(name) = s.arg else {
            self.diags.push(s.line, DiagnosticKind::SyntaxError, "[query] needs a name");
            return None;
        };
        let mut members = BTreeSet::new();
        let mut time = chain_len;
        let mut ok = true;
        for &(line, text) in &s.body {
            for w in text.split_whitespace() {
                if let Some(t) = w.strip_prefix("time=") {
                    match t.parse::<usize>() {
                        Ok(t) if t <= chain_len => time = t,
                        _ => {
                            self.diags.push(
                                line,
                                DiagnosticKind::InvalidValue,
                                format!("time `{t}` must be an index between 0 and {chain_len}"),
                            );
                            ok = false;
                        }
                    }
                } else if let Some(i) = self.label(space, line, w) {
                    members.insert(i);
                } else {
                    ok = false;
                }
            }
        }
        if members.is_empty() && ok {
            self.diags.push(s.line, DiagnosticKind::SyntaxError, format!("query `{name}` names no states"));
            return None;
        }
        if !ok {
            return None;
        }
        Proposition::from_indices(space.clone(), members, time)
            .ok()
            .map(|p| (name.to_string(), p))
    }

    fn params(&mut self, s: &Section, into: &mut BTreeMap<String, (usize, T)>) {
        for &(line, text) in &s.body {
            match key_value(text) {
                Some((k, v)) => match parse_number(v) {
                    Some(x) if !into.contains_key(k) => {
                        into.insert(k.to_string(), (line, T::lit(x)));
                    }
                    Some(_) => self.diags.push(line, DiagnosticKind::SyntaxError, format!("parameter `{k}` set twice")),
                    None => self.diags.push(line, DiagnosticKind::InvalidValue, format!("`{v}` is not a number")),
                },
                None => self.diags.push(line, DiagnosticKind::SyntaxError, format!("expected `name=value`, found `{text}`")),
            }
        }
    }
}

/// Parse and validate a scenario with the default tolerances.
pub fn parse_scenario<T: Real>(text: &str) -> Result<Scenario<T>> {
    parse_scenario_with(text, &Tolerances::for_scalar::<T>())
}

pub fn parse_scenario_with<T: Real>(text: &str, tol: &Tolerances) -> Result<Scenario<T>> {
    let mut p = Parser::<T> {
        tol,
        diags: Diagnostics::default(),
        _scalar: std::marker::PhantomData,
    };
    let mut sections = split_sections(text, &mut p.diags);
    let mut by_kind: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
    for (i, s) in sections.iter().enumerate() {
        match s.kind {
            "space" | "init" | "chain" | "param" | "builder" => {
                if let Some(arg) = s.arg {
                    p.diags.push(s.line, DiagnosticKind::SyntaxError, format!("[{}] takes no name, found `{arg}`", s.kind));
                }
                if let Some(&first) = by_kind.get(s.kind).and_then(|v| v.first()) {
                    let first_line = sections[first].line;
                    p.diags.push(s.line, DiagnosticKind::SyntaxError, format!("[{}] already given on line {first_line}", s.kind));
                }
            }
            "kernel" | "query" => {}
            other => p.diags.push(s.line, DiagnosticKind::SyntaxError, format!("unknown section `[{other}]`")),
        }
        by_kind.entry(s.kind).or_default().push(i);
    }
    let first = |kind: &str| by_kind.get(kind).and_then(|v| v.first().copied());

    let mut params = BTreeMap::new();
    if let Some(i) = first("param") {
        p.params(&sections[i], &mut params);
    }

    let scenario = if let Some(b) = first("builder") {
        parse_built(&mut p, &sections[b], &by_kind, &sections, &params)
    } else {
        parse_explicit(&mut p, &mut sections, &by_kind, &params)
    };
    let mut diags = p.diags.0;
    match scenario {
        Some(s) if diags.is_empty() => Ok(s),
        _ => {
            if diags.is_empty() {
                diags.push(ParseDiagnostic {
                    line: 0,
                    kind: DiagnosticKind::SyntaxError,
                    message: "scenario could not be assembled".into(),
                });
            }
            diags.sort_by_key(|d| d.line);
            Err(Error::Parse(diags))
        }
    }
}

fn parse_built<T: Real>(
    p: &mut Parser<T>,
    header: &Section,
    by_kind: &BTreeMap<&str, Vec<usize>>,
    sections: &[Section],
    params: &BTreeMap<String, (usize, T)>,
) -> Option<Scenario<T>> {
    for kind in ["space", "init", "kernel", "chain"] {
        for &i in by_kind.get(kind).into_iter().flatten() {
            p.diags.push(
                sections[i].line,
                DiagnosticKind::SyntaxError,
                format!("[{kind}] cannot be combined with [builder]"),
            );
        }
    }
    let mut name = None;
    for &(line, text) in &header.body {
        match key_value(text) {
            Some(("name", v)) if name.is_none() => name = Some(v),
            _ => p.diags.push(line, DiagnosticKind::SyntaxError, format!("expected `name=<builder>`, found `{text}`")),
        }
    }
    let Some(name) = name else {
        p.diags.push(header.line, DiagnosticKind::SyntaxError, "[builder] needs `name=<builder>`");
        return None;
    };
    let values: BTreeMap<String, T> = params.iter().map(|(k, (_, v))| (k.clone(), *v)).collect();
    let mut s = match build_named::<T>(name, &values) {
        Ok(s) => s,
        Err(Error::UnknownParameter(k)) => {
            let line = params.get(&k).map_or(header.line, |(l, _)| *l);
            p.diags.push(line, DiagnosticKind::UnknownParameter, format!("builder `{name}` has no parameter `{k}`"));
            return None;
        }
        Err(Error::ParameterRange { name: k, value, reason }) => {
            let line = params.get(&k).map_or(header.line, |(l, _)| *l);
            p.diags.push(line, DiagnosticKind::InvalidValue, format!("{k} = {value}: {reason}"));
            return None;
        }
        Err(e) => {
            p.diags.push(header.line, DiagnosticKind::InvalidValue, e.to_string());
            return None;
        }
    };
    let queries: Vec<_> = by_kind
        .get("query")
        .into_iter()
        .flatten()
        .filter_map(|&i| p.query(&sections[i], &s.space.clone(), s.schedule.len()))
        .collect();
    if by_kind.contains_key("query") {
        s.queries = queries;
    }
    Some(s)
}

fn parse_explicit<T: Real>(
    p: &mut Parser<T>,
    sections: &mut [Section],
    by_kind: &BTreeMap<&str, Vec<usize>>,
    params: &BTreeMap<String, (usize, T)>,
) -> Option<Scenario<T>> {
    let first = |kind: &str| by_kind.get(kind).and_then(|v| v.first().copied());
    let Some(si) = first("space") else {
        p.diags.push(0, DiagnosticKind::Missing, "no [space] section");
        return None;
    };
    let space = p.space(&sections[si])?;
    let init = match first("init") {
        Some(i) => p.init(&sections[i], &space),
        None => {
            p.diags.push(0, DiagnosticKind::Missing, "no [init] section");
            None
        }
    };

    let mut kernels: Vec<(String, Kernel<T>)> = Vec::new();
    let mut names: BTreeMap<String, usize> = BTreeMap::new();
    let mut kernels_ok = true;
    for &i in by_kind.get("kernel").into_iter().flatten() {
        let s = &sections[i];
        let Some(name) = s.arg else {
            p.diags.push(s.line, DiagnosticKind::SyntaxError, "[kernel] needs a name");
            kernels_ok = false;
            continue;
        };
        if let Some(prev) = names.insert(name.to_string(), s.line) {
            p.diags.push(s.line, DiagnosticKind::SyntaxError, format!("kernel `{name}` already defined on line {prev}"));
            kernels_ok = false;
            continue;
        }
        match p.kernel(s, name, &space) {
            Some(k) => kernels.push((name.to_string(), k)),
            None => kernels_ok = false,
        }
    }

    let mut schedule = Vec::new();
    if let Some(ci) = first("chain") {
        for &(line, text) in &sections[ci].body {
            for w in text.split_whitespace() {
                if !names.contains_key(w) {
                    p.diags.push(line, DiagnosticKind::UnknownKernel, format!("kernel `{w}` is not defined"));
                }
                schedule.push(w.to_string());
            }
        }
    }

    let queries: Vec<_> = by_kind
        .get("query")
        .into_iter()
        .flatten()
        .filter_map(|&i| p.query(&sections[i], &space, schedule.len()))
        .collect();
    let init = init?;
    if !kernels_ok {
        return None;
    }
    Some(Scenario {
        space,
        init,
        kernels,
        schedule,
        queries,
        params: params.iter().map(|(k, (_, v))| (k.clone(), *v)).collect(),
        builder: None,
    })
}

fn value<T: Real>(z: CProb<T>) -> String {
    format!("{:?},{:?}", z.re, z.im)
}

/// Canonical text for a scenario. Builder scenarios are written as their
/// builder, parameters and queries.
pub fn serialize<T: Real>(s: &Scenario<T>) -> String {
    let mut out = String::new();
    let zero = CProb::new(T::zero(), T::zero());
    let one = CProb::new(T::one(), T::zero());
    let space = &s.space;

    if let Some(b) = &s.builder {
        let _ = writeln!(out, "[builder]\nname={b}\n");
    } else {
        let _ = writeln!(out, "[space]\n{}\n", space.labels().join(" "));
        out.push_str("[init]\n");
        let nonzero: Vec<usize> = (0..s.init.len()).filter(|&i| s.init[i] != zero).collect();
        if let [i] = nonzero.as_slice() {
            if s.init[*i] == one {
                let _ = writeln!(out, "{}", space.label(*i));
            } else {
                let _ = writeln!(out, "{}={}", space.label(*i), value(s.init[*i]));
            }
        } else {
            let pairs: Vec<String> = nonzero
                .iter()
                .map(|&i| format!("{}={}", space.label(i), value(s.init[i])))
                .collect();
            let _ = writeln!(out, "{}", pairs.join(" "));
        }
        out.push('\n');
        for (name, k) in &s.kernels {
            let _ = writeln!(out, "[kernel {name}]\nstep={:?}", k.step());
            for r in 0..k.dimension() {
                let row = k.entries().row(r);
                let is_identity = (0..row.len()).all(|c| row[c] == if c == r { one } else { zero });
                if is_identity {
                    let _ = writeln!(out, "{}: identity", space.label(r));
                    continue;
                }
                let _ = write!(out, "{}:", space.label(r));
                for (c, z) in row.iter().enumerate().filter(|(_, z)| **z != zero) {
                    let _ = write!(out, " {}={}", space.label(c), value(*z));
                }
                out.push('\n');
            }
            out.push('\n');
        }
        let _ = writeln!(out, "[chain]\n{}\n", s.schedule.join(" "));
    }
    for (name, q) in &s.queries {
        let labels: Vec<&str> = q.labels().collect();
        let _ = writeln!(out, "[query {name}]\n{} time={}\n", labels.join(" "), q.time_index());
    }
    if !s.params.is_empty() {
        out.push_str("[param]\n");
        for (k, v) in &s.params {
            let _ = writeln!(out, "{k}={v:?}");
        }
        out.push('\n');
    }
    while out.ends_with("\n\n") {
        out.pop();
    }
    out
}
