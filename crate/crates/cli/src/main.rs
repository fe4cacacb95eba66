use std::fmt::Write as _;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use cprob::propagator::{moment_round_trip, ConstantField, Grid, PacketStudy, Regulator};
use cprob::scenarios::{parse_scenario_with, run_with};
use cprob::statespace::PathLimits;
use cprob::verify::{self, Faults};
use cprob::{Complex, Error, Scenario64, Tolerances};

const EXIT_IO: u8 = 1;
const EXIT_INVALID: u8 = 2;
const EXIT_VERIFY: u8 = 3;

#[derive(Parser)]
#[command(name = "cprob", version, about = "Complex probability engine: scenarios, scans, invariant checks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate the queries of a scenario file
    Run {
        input: PathBuf,
        /// Emit per-endpoint interference deficits instead of query frequencies
        #[arg(long)]
        deficits: bool,
        #[command(flatten)]
        out: OutputArgs,
        #[command(flatten)]
        tol: ToleranceArgs,
    },
    /// Evaluate the queries over a range of one parameter
    Scan {
        input: PathBuf,
        #[arg(long)]
        param: String,
        #[arg(long, allow_negative_numbers = true)]
        from: f64,
        #[arg(long, allow_negative_numbers = true)]
        to: f64,
        /// Number of evenly spaced values, endpoints included
        #[arg(long)]
        steps: usize,
        #[command(flatten)]
        out: OutputArgs,
        #[command(flatten)]
        tol: ToleranceArgs,
    },
    /// Run the invariant suites
    Verify {
        #[arg(long, value_parser = clap::builder::PossibleValuesParser::new(verify::GROUPS))]
        group: Option<String>,
        #[arg(long, hide = true)]
        inject_fault: Option<Fault>,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// Free-particle convergence scan and moment round trip
    Propagator {
        #[arg(long, default_value_t = 1.0)]
        mass: f64,
        /// Grid points
        #[arg(long, default_value_t = 256)]
        grid: usize,
        /// Fixed regulator instead of the edge-decay rule
        #[arg(long)]
        delta: Option<f64>,
        /// Largest refinement; the scan doubles from 1 up to it
        #[arg(long, default_value_t = 16)]
        max_steps: usize,
        #[command(flatten)]
        out: OutputArgs,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Fault {
    RowSum,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    JsonLines,
}

#[derive(Args)]
struct OutputArgs {
    #[arg(long)]
    output: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
    /// Omit the `#` comment header
    #[arg(long)]
    no_header: bool,
}

#[derive(Args)]
struct ToleranceArgs {
    #[arg(long)]
    row_sum_tol: Option<f64>,
    #[arg(long)]
    divisor_tol: Option<f64>,
    #[arg(long)]
    denominator_tol: Option<f64>,
}

impl ToleranceArgs {
    fn resolve(&self) -> (Tolerances, Vec<String>) {
        let mut t = Tolerances::default();
        let mut notes = Vec::new();
        for (name, flag, slot) in [
            ("row_sum", self.row_sum_tol, &mut t.row_sum),
            ("divisor", self.divisor_tol, &mut t.divisor),
            ("denominator", self.denominator_tol, &mut t.denominator),
        ] {
            if let Some(v) = flag {
                *slot = v;
                notes.push(format!("tolerance {name}={v:?} (override)"));
            }
        }
        (t, notes)
    }
}

enum Failure {
    Io(String),
    Invalid(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Invalid(e.to_string())
    }
}

type Outcome<T> = Result<T, Failure>;

struct Table {
    header: Vec<String>,
    columns: Vec<String>,
    rows: Vec<Vec<Cell>>,
}

#[derive(Clone, Serialize)]
#[serde(untagged)]
enum Cell {
    Text(String),
    Int(usize),
    Num(f64),
}

impl Cell {
    fn csv(&self) -> String {
        match self {
            Cell::Text(s) if s.contains([',', '"', '\n']) => format!("\"{}\"", s.replace('"', "\"\"")),
            Cell::Text(s) => s.clone(),
            Cell::Int(n) => n.to_string(),
            Cell::Num(x) => format!("{x:?}"),
        }
    }
}

impl Table {
    fn new(columns: &[&str]) -> Self {
        Self {
            header: Vec::new(),
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    fn render(&self, out: &mut String, format: Format) {
        match format {
            Format::Csv => {
                let _ = writeln!(out, "{}", self.columns.join(","));
                for row in &self.rows {
                    let cells: Vec<String> = row.iter().map(Cell::csv).collect();
                    let _ = writeln!(out, "{}", cells.join(","));
                }
            }
            Format::JsonLines => {
                for row in &self.rows {
                    let obj: serde_json::Map<String, serde_json::Value> = self
                        .columns
                        .iter()
                        .cloned()
                        .zip(row.iter().map(|c| serde_json::to_value(c).expect("plain values")))
                        .collect();
                    let _ = writeln!(out, "{}", serde_json::Value::Object(obj));
                }
            }
        }
    }
}

fn emit(tables: &[Table], out: &OutputArgs) -> Outcome<()> {
    let mut text = String::new();
    if !out.no_header {
        for t in tables {
            for line in &t.header {
                let _ = writeln!(text, "# {line}");
            }
        }
    }
    for (i, t) in tables.iter().enumerate() {
        if i > 0 && out.format == Format::Csv {
            text.push('\n');
        }
        t.render(&mut text, out.format);
    }
    match &out.output {
        Some(path) => std::fs::write(path, text)
            .map_err(|e| Failure::Io(format!("cannot write {}: {e}", path.display()))),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout
                .write_all(text.as_bytes())
                .and_then(|_| stdout.flush())
                .map_err(|e| Failure::Io(format!("cannot write to stdout: {e}")))
        }
    }
}

fn load(path: &Path, tol: &Tolerances) -> Outcome<Scenario64> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Failure::Io(format!("cannot read {}: {e}", path.display())))?;
    parse_scenario_with(&text, tol).map_err(|e| match e {
        Error::Parse(diags) => Failure::Invalid(
            diags
                .iter()
                .map(|d| match d.line {
                    0 => format!("{}: {}: {}", path.display(), d.kind, d.message),
                    n => format!("{}:{n}: {}: {}", path.display(), d.kind, d.message),
                })
                .collect::<Vec<_>>()
                .join("\n"),
        ),
        other => other.into(),
    })
}

fn scenario_header(command: &str, path: &Path, s: &Scenario64, notes: &[String]) -> Vec<String> {
    let mut h = vec![format!("cprob {command} {}", path.display())];
    if let Some(b) = &s.builder {
        h.push(format!("builder {b}"));
    }
    h.extend(s.params.iter().map(|(k, v)| format!("param {k}={v:?}")));
    h.extend(notes.iter().cloned());
    h
}

fn cmd_run(input: &Path, deficits: bool, out: &OutputArgs, tol: &ToleranceArgs) -> Outcome<()> {
    let (tol, notes) = tol.resolve();
    let s = load(input, &tol)?;
    let r = run_with(&s, &tol, PathLimits::default())?;
    let mut table = if deficits {
        let mut t = Table::new(&["endpoint", "paths", "deficit"]);
        if r.deficits_skipped {
            return Err(Failure::Invalid("chain too large for path enumeration; no deficits".into()));
        }
        t.rows = r
            .deficits
            .iter()
            .map(|d| vec![Cell::Text(d.label.clone()), Cell::Int(d.paths), Cell::Num(d.deficit)])
            .collect();
        t
    } else {
        let mut t = Table::new(&["query", "frequency"]);
        t.rows = r
            .queries
            .iter()
            .map(|(name, f)| vec![Cell::Text(name.clone()), Cell::Num(f.value)])
            .collect();
        t
    };
    table.header = scenario_header("run", input, &s, &notes);
    emit(&[table], out)
}

fn cmd_scan(
    input: &Path,
    param: &str,
    range: (f64, f64, usize),
    out: &OutputArgs,
    tol: &ToleranceArgs,
) -> Outcome<()> {
    let (from, to, steps) = range;
    if steps == 0 || !(from <= to) || (steps == 1 && from != to) {
        return Err(Failure::Invalid(format!(
            "empty range: --from {from:?} --to {to:?} --steps {steps}"
        )));
    }
    let (tol, notes) = tol.resolve();
    let s = load(input, &tol)?;
    if !s.params.contains_key(param) {
        return Err(Error::UnknownParameter(param.to_string()).into());
    }
    let mut columns = vec![param.to_string()];
    columns.extend(s.queries.iter().map(|(n, _)| n.clone()));
    let mut table = Table {
        header: scenario_header("scan", input, &s, &notes),
        columns,
        rows: Vec::with_capacity(steps),
    };
    table.header.push(format!("scan {param} from {from:?} to {to:?} in {steps} steps"));
    for i in 0..steps {
        let value = if i + 1 == steps {
            to
        } else {
            from + (to - from) * i as f64 / (steps - 1) as f64
        };
        let r = run_with(&s.with_param(param, value)?, &tol, PathLimits::default())?;
        let mut row = vec![Cell::Num(value)];
        row.extend(r.queries.iter().map(|(_, f)| Cell::Num(f.value)));
        table.rows.push(row);
    }
    emit(&[table], out)
}

fn cmd_verify(group: Option<&str>, fault: Option<Fault>, out: &OutputArgs) -> Outcome<bool> {
    let faults = Faults {
        row_sum: matches!(fault, Some(Fault::RowSum)),
    };
    let reports = match group {
        Some(g) => vec![verify::run_group(g, faults)?],
        None => verify::run_all(faults),
    };
    let mut table = Table::new(&["group", "check", "status", "detail"]);
    table.header.push("cprob verify".into());
    for r in &reports {
        for c in &r.checks {
            let status = if c.passed { "pass" } else { "fail" };
            table.rows.push(vec![
                Cell::Text(r.group.into()),
                Cell::Text(c.name.into()),
                Cell::Text(status.into()),
                Cell::Text(c.detail.clone()),
            ]);
        }
    }
    emit(&[table], out)?;
    for r in &reports {
        eprintln!("{} {}", if r.passed() { "pass" } else { "FAIL" }, r.group);
    }
    Ok(reports.iter().all(|r| r.passed()))
}

fn cmd_propagator(mass: f64, points: usize, delta: Option<f64>, max_steps: usize, out: &OutputArgs) -> Outcome<()> {
    if !(mass > 0.0) {
        return Err(Failure::Invalid(format!("--mass must be positive, got {mass:?}")));
    }
    if max_steps == 0 {
        return Err(Failure::Invalid("--max-steps must be at least 1".into()));
    }
    let mut study = PacketStudy::desk(points, mass);
    if let Some(d) = delta {
        if !(d > 0.0) {
            return Err(Failure::Invalid(format!("--delta must be positive, got {d:?}")));
        }
        study.particle.regulator = Regulator::Fixed(d);
    }
    let grid = study.grid()?;

    let mut scan = Table::new(&["N", "epsilon", "delta", "residual"]);
    scan.header = vec![
        "cprob propagator".into(),
        format!("grid {points} points, extent {:?}, mass {mass:?}", grid.extent()),
        format!("packet width {:?}, evolved to t={:?}", study.packet().width, study.doubling_time()),
        match delta {
            Some(d) => format!("regulator fixed delta={d:?}, extrapolated with delta/2"),
            None => "regulator edge decay 1e-8, extrapolated with delta/2".into(),
        },
    ];
    let mut n = 1;
    while n <= max_steps {
        let r = study.run(n)?;
        scan.rows.push(vec![Cell::Int(n), Cell::Num(r.epsilon), Cell::Num(r.delta), Cell::Num(r.residual)]);
        n *= 2;
    }

    let tau = 1e-3 * grid.extent() * grid.extent();
    let reg = delta.unwrap_or_else(|| Regulator::default().delta(tau, &grid));
    let field = ConstantField::free(1, reg, mass);
    let moments = moment_round_trip(&field, tau, &Grid::with_extent(1, points, grid.extent())?)?;
    let (e0, e1, e2) = moments.relative_errors();
    let mut report = Table::new(&["moment", "input_re", "input_im", "extracted_re", "extracted_im", "relative_error"]);
    report.header.push(format!("moment round trip at tau={tau:?}, W=delta+i*mass with delta={reg:?}"));
    let pair = |name: &str, a: Complex<f64>, b: Complex<f64>, e: f64| {
        vec![
            Cell::Text(name.into()),
            Cell::Num(a.re),
            Cell::Num(a.im),
            Cell::Num(b.re),
            Cell::Num(b.im),
            Cell::Num(e),
        ]
    };
    report.rows.push(pair("nu0", field.nu0, moments.extracted.nu0, e0));
    report.rows.push(pair("nu", field.nu[0], moments.extracted.nu[0], e1));
    report.rows.push(pair("W", field.weight[[0, 0]], moments.extracted.weight[[0, 0]], e2));
    emit(&[scan, report], out)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Run { input, deficits, out, tol } => cmd_run(input, *deficits, out, tol).map(|_| true),
        Command::Scan { input, param, from, to, steps, out, tol } => {
            cmd_scan(input, param, (*from, *to, *steps), out, tol).map(|_| true)
        }
        Command::Verify { group, inject_fault, out } => cmd_verify(group.as_deref(), *inject_fault, out),
        Command::Propagator { mass, grid, delta, max_steps, out } => {
            cmd_propagator(*mass, *grid, *delta, *max_steps, out).map(|_| true)
        }
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(EXIT_VERIFY),
        Err(Failure::Io(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(EXIT_IO)
        }
        Err(Failure::Invalid(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(EXIT_INVALID)
        }
    }
}
