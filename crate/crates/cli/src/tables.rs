//! FWER tables over `n x delta` grids for the adjusted Bonferroni and Sidak
//! procedures, one- and two-sided, at alpha 0.10 and 0.05.

use crate::config::Settings;
use crate::error::{CliError, CliResult};
use crate::record::{write_csv, Record};
use clap::Args;
use mtp_core::mc::{fwer_conditional, Execution, McRun};
use mtp_core::rng::derive_seed;
use mtp_core::{build_schedule, Estimate, Family, Level, MeanConfig, ProcedureSpec, Sided};
use serde::Serialize;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

pub const ROWS_N: [u64; 4] = [2500, 5000, 7500, 10_000];
pub const COLS_DELTA: [f64; 5] = [0.1, 0.25, 0.5, 0.75, 1.0];
pub const DEFAULT_LAMBDA1: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TableSpec {
    pub id: u32,
    pub family: Family,
    pub sided: Sided,
    pub alpha: f64,
}

pub const TABLES: [TableSpec; 8] = [
    TableSpec { id: 1, family: Family::AdjBonferroni, sided: Sided::One, alpha: 0.10 },
    TableSpec { id: 2, family: Family::AdjBonferroni, sided: Sided::One, alpha: 0.05 },
    TableSpec { id: 3, family: Family::Sidak, sided: Sided::One, alpha: 0.10 },
    TableSpec { id: 4, family: Family::Sidak, sided: Sided::One, alpha: 0.05 },
    TableSpec { id: 5, family: Family::AdjBonferroni, sided: Sided::Two, alpha: 0.10 },
    TableSpec { id: 6, family: Family::AdjBonferroni, sided: Sided::Two, alpha: 0.05 },
    TableSpec { id: 7, family: Family::Sidak, sided: Sided::Two, alpha: 0.10 },
    TableSpec { id: 8, family: Family::Sidak, sided: Sided::Two, alpha: 0.05 },
];

impl TableSpec {
    pub fn procedure(&self) -> ProcedureSpec {
        ProcedureSpec::new(self.family, self.sided, 1, None).expect("static table spec")
    }

    pub fn title(&self) -> String {
        let family = match self.family {
            Family::AdjBonferroni => "adjusted Bonferroni",
            Family::Sidak => "Sidak",
            Family::LehmannRomano => "Lehmann-Romano",
        };
        format!("Table {}: {family}, {}-sided, alpha = {:.2}", self.id, self.sided, self.alpha)
    }

    pub fn cell_seed(&self, master: u64, row: usize, col: usize) -> u64 {
        derive_seed(master, &[u64::from(self.id), row as u64, col as u64])
    }
}

#[derive(Debug, Clone, Args)]
pub struct TablesArgs {
    /// Output directory
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
    /// Replicates per cell (defaults to the profile's count)
    #[arg(long)]
    pub reps: Option<u64>,
    #[arg(long)]
    pub lambda1: Option<f64>,
    /// Comma-separated table ids to compute (default all)
    #[arg(long, value_delimiter = ',')]
    pub only: Vec<u32>,
    /// Run replicates on a single thread
    #[arg(long)]
    pub serial: bool,
}

/// Cell estimates in row-major order.
#[derive(Debug, Clone)]
pub struct TableResult {
    pub spec: TableSpec,
    pub cells: Vec<Vec<Estimate>>,
    pub lambda1: f64,
}

impl TableResult {
    pub fn max_abs_deviation(&self) -> f64 {
        self.cells.iter().flatten().map(|e| (e.value - self.spec.alpha).abs()).fold(0.0, f64::max)
    }

    pub fn records(&self) -> Vec<Record> {
        let mut out = Vec::new();
        for (r, &n) in ROWS_N.iter().enumerate() {
            for (c, &delta) in COLS_DELTA.iter().enumerate() {
                let e = &self.cells[r][c];
                out.push(Record {
                    procedure: self.spec.family.to_string(),
                    sided: self.spec.sided.to_string(),
                    k: 1,
                    metric: e.meta.metric.to_string(),
                    n,
                    alpha: self.spec.alpha,
                    lambda1: Some(self.lambda1),
                    delta: Some(delta),
                    model: "product".into(),
                    reps: e.replicates,
                    seed: e.seed,
                    estimate: e.value,
                    std_error: e.std_error,
                });
            }
        }
        out
    }

    pub fn markdown(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "### {}\n", self.spec.title());
        let _ = write!(s, "| n \\ delta |");
        for d in COLS_DELTA {
            let _ = write!(s, " {d} |");
        }
        let _ = writeln!(s);
        let _ = writeln!(s, "|---|{}", "---|".repeat(COLS_DELTA.len()));
        for (r, n) in ROWS_N.iter().enumerate() {
            let _ = write!(s, "| {n} |");
            for e in &self.cells[r] {
                let _ = write!(s, " {:.5} |", e.value);
            }
            let _ = writeln!(s);
        }
        s
    }
}

pub fn compute_table(
    spec: &TableSpec,
    lambda1: f64,
    replicates: u64,
    master_seed: u64,
    execution: Execution,
) -> CliResult<TableResult> {
    let alpha = Level::new(spec.alpha)?;
    let procedure = spec.procedure();
    let mut cells = Vec::with_capacity(ROWS_N.len());
    for (r, &n) in ROWS_N.iter().enumerate() {
        let mut row = Vec::with_capacity(COLS_DELTA.len());
        let n = n as usize;
        let means = MeanConfig::global_null(n);
        for (c, &delta) in COLS_DELTA.iter().enumerate() {
            let model = build_schedule(lambda1, delta, n)?;
            let run = McRun { execution, ..McRun::new(replicates, spec.cell_seed(master_seed, r, c))? };
            row.push(fwer_conditional(&model, &procedure, alpha, &means, &run)?);
        }
        cells.push(row);
    }
    Ok(TableResult { spec: *spec, cells, lambda1 })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SummaryRow {
    pub table: u32,
    pub procedure: String,
    pub sided: String,
    pub alpha: f64,
    pub reps: u64,
    pub max_abs_dev: f64,
    pub tolerance: f64,
    pub pass: bool,
}

fn write_file(path: &Path, bytes: &[u8]) -> CliResult<()> {
    fs::write(path, bytes).map_err(|e| CliError::io(format!("writing {}", path.display()), e))
}

/// Computes the selected tables and writes `tableN.csv`, `tableN.md`,
/// `summary.csv` and `summary.md` into `dir`.
pub fn write_tables(
    dir: &Path,
    ids: &[u32],
    lambda1: f64,
    replicates: u64,
    master_seed: u64,
    tolerance: f64,
    execution: Execution,
) -> CliResult<Vec<SummaryRow>> {
    for id in ids {
        if !(1..=8).contains(id) {
            return Err(CliError::validation(format!("--only: table ids are 1..8, got {id}")));
        }
    }
    fs::create_dir_all(dir).map_err(|e| CliError::io(format!("creating {}", dir.display()), e))?;
    let mut summary = Vec::new();
    let mut summary_md = String::from("| table | procedure | sided | alpha | reps | max abs dev | tolerance | pass |\n");
    summary_md.push_str("|---|---|---|---|---|---|---|---|\n");
    for spec in TABLES.iter().filter(|t| ids.is_empty() || ids.contains(&t.id)) {
        let result = compute_table(spec, lambda1, replicates, master_seed, execution)?;
        let mut csv_bytes = Vec::new();
        write_csv(&mut csv_bytes, &result.records())?;
        write_file(&dir.join(format!("table{}.csv", spec.id)), &csv_bytes)?;
        write_file(&dir.join(format!("table{}.md", spec.id)), result.markdown().as_bytes())?;
        let dev = result.max_abs_deviation();
        let row = SummaryRow {
            table: spec.id,
            procedure: spec.family.to_string(),
            sided: spec.sided.to_string(),
            alpha: spec.alpha,
            reps: replicates,
            max_abs_dev: dev,
            tolerance,
            pass: dev <= tolerance,
        };
        let _ = writeln!(
            summary_md,
            "| {} | {} | {} | {:.2} | {} | {:.5} | {} | {} |",
            row.table, row.procedure, row.sided, row.alpha, row.reps, row.max_abs_dev, row.tolerance, row.pass
        );
        summary.push(row);
    }
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in &summary {
        w.serialize(r)?;
    }
    let bytes = w.into_inner().map_err(|e| CliError::Output(e.to_string()))?;
    write_file(&dir.join("summary.csv"), &bytes)?;
    write_file(&dir.join("summary.md"), summary_md.as_bytes())?;
    Ok(summary)
}

pub fn run(a: &TablesArgs, s: &Settings) -> CliResult<()> {
    let dir = a.out_dir.clone().or_else(|| s.file.out_dir.clone()).unwrap_or_else(|| PathBuf::from("tables"));
    let lambda1 = a.lambda1.or(s.file.lambda1).unwrap_or(DEFAULT_LAMBDA1);
    let execution = if a.serial { Execution::Serial } else { Execution::Parallel };
    let summary = write_tables(
        &dir,
        &a.only,
        lambda1,
        s.replicates(a.reps)?,
        s.seed,
        s.profile.tolerance(),
        execution,
    )?;
    for r in &summary {
        eprintln!(
            "table {}: max |cell - alpha| = {:.5} (tolerance {}) {}",
            r.table,
            r.max_abs_dev,
            r.tolerance,
            if r.pass { "ok" } else { "FAIL" }
        );
    }
    Ok(())
}
