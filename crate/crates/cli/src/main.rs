use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;
use sha2::{Digest, Sha256};

use ucap::canonical::{cartan_decompose, CanonicalForm, WeylVector};
use ucap::capacities::{verify_relation1, verify_relation2, CapacityRelationReport};
use ucap::distinguishability::{d_min_canonical, verify_theorem, Route};
use ucap::entanglement::{capacities_closed_form, CapacityReport};
use ucap::linalg::{haar_random_unitary, MatrixJson, UnitaryMatrix, UNITARITY_TOL};
use ucap::oracle::{max_concurrence_product, min_probe_overlap, shard_rng, SearchConfig};
use ucap::report::{analyze, AnalysisOptions, AnalysisReport};
use ucap::Error;

mod table;

use table::{sig, Table};

#[derive(Parser, Debug)]
#[command(name = "ucap", version, about = "Analyze two-qubit unitaries: canonical form, entangling capacities, distinguishability")]
struct Cli {
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Pass/fail tolerance for `verify`; defaults to 1e-9 (closed, geometric) and 1e-3 (numeric).
    #[arg(long, global = true)]
    tol: Option<f64>,
    /// Emit JSON instead of a table.
    #[arg(long, global = true)]
    json: bool,
    /// Write output to a file instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Print angles in degrees (tables only).
    #[arg(long, global = true)]
    degrees: bool,
    /// Tolerance for accepting an input matrix as unitary.
    #[arg(long, global = true, default_value_t = UNITARITY_TOL)]
    unitarity_tol: f64,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Full report for one matrix file.
    Analyze {
        matrix: PathBuf,
        /// Also run the oracle route and the capacity relations.
        #[arg(long)]
        numeric: bool,
        #[command(flatten)]
        search: SearchArgs,
    },
    /// Canonical decomposition only.
    Decompose { matrix: PathBuf },
    /// Check the capacity/distinguishability identity on Haar samples; `--out` receives per-trial CSV.
    Verify {
        #[arg(long, default_value_t = 100)]
        trials: usize,
        #[arg(long, value_delimiter = ',', default_value = "closed,geometric")]
        routes: Vec<String>,
        #[command(flatten)]
        search: SearchArgs,
    },
    /// Closed-form capacities and both capacity relations.
    Capacities {
        /// Weyl vector as `ax,ay,az` (radians).
        #[arg(long, value_delimiter = ',', num_args = 1, conflicts_with = "matrix", required_unless_present = "matrix", allow_hyphen_values = true)]
        d: Option<Vec<f64>>,
        #[arg(long)]
        matrix: Option<PathBuf>,
        #[command(flatten)]
        search: SearchArgs,
    },
    /// Haar-random matrices or Weyl vectors.
    Random {
        /// Sample Weyl vectors uniformly from the chamber instead of matrices.
        #[arg(long)]
        weyl: bool,
        #[arg(long, default_value_t = 1)]
        count: usize,
        /// Write one file per sample into this directory.
        #[arg(long)]
        dir: Option<PathBuf>,
    },
}

#[derive(Args, Debug, Clone)]
struct SearchArgs {
    /// Coarse grid points per angle.
    #[arg(long)]
    grid: Option<usize>,
    #[arg(long)]
    restarts: Option<usize>,
    #[arg(long)]
    refine_iterations: Option<usize>,
    /// SearchConfig as JSON; flags override its fields.
    #[arg(long)]
    search_config: Option<PathBuf>,
}

impl SearchArgs {
    fn config(&self, seed: u64) -> Result<SearchConfig, CliError> {
        let mut cfg = match &self.search_config {
            Some(path) => serde_json::from_str(&read(path)?).map_err(|e| CliError::malformed(format!("{}: {e}", path.display())))?,
            None => SearchConfig::with_seed(seed),
        };
        if let Some(g) = self.grid {
            cfg.coarse_grid_per_angle = g;
        }
        if let Some(r) = self.restarts {
            cfg.restarts = r;
        }
        if let Some(r) = self.refine_iterations {
            cfg.refine_iterations = r;
        }
        if self.search_config.is_none() {
            cfg.seed = seed;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Debug)]
struct CliError {
    code: u8,
    kind: &'static str,
    message: String,
}

impl CliError {
    fn malformed(message: String) -> Self {
        Self {
            code: 2,
            kind: "malformed_input",
            message,
        }
    }

    fn usage(message: String) -> Self {
        Self {
            code: 2,
            kind: "usage",
            message,
        }
    }

    fn io(path: &Path, e: io::Error) -> Self {
        Self {
            code: 2,
            kind: "io",
            message: format!("{}: {e}", path.display()),
        }
    }

    fn verify_failed(message: String) -> Self {
        Self {
            code: 1,
            kind: "verify_failed",
            message,
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        let (code, kind) = match e {
            Error::NotUnitary { .. } => (3, "not_unitary"),
            Error::Decomposition(_) | Error::Convergence(_) => (4, "decomposition_failed"),
            _ => (2, "malformed_input"),
        };
        Self {
            code,
            kind,
            message: e.to_string(),
        }
    }
}

fn read(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|e| CliError::io(path, e))
}

/// Parsed matrix and the SHA-256 of its canonical JSON serialization.
fn load_matrix(path: &Path, tol: f64) -> Result<(UnitaryMatrix, String), CliError> {
    let parsed: MatrixJson =
        serde_json::from_str(&read(path)?).map_err(|e| CliError::malformed(format!("{}: {e}", path.display())))?;
    let canonical = serde_json::to_vec(&parsed).expect("matrix serializes");
    let hash = hex::encode(Sha256::digest(&canonical));
    Ok((parsed.to_unitary(tol)?, hash))
}

fn emit(out: Option<&Path>, text: &str) -> Result<(), CliError> {
    match out {
        Some(path) => fs::write(path, text).map_err(|e| CliError::io(path, e)),
        None => {
            let mut stdout = io::stdout().lock();
            stdout.write_all(text.as_bytes()).map_err(|e| CliError::io(Path::new("<stdout>"), e))
        }
    }
}

fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("report serializes");
    s.push('\n');
    s
}

struct Ctx {
    seed: u64,
    tol: Option<f64>,
    json: bool,
    out: Option<PathBuf>,
    degrees: bool,
    unitarity_tol: f64,
}

impl Ctx {
    fn angle(&self, x: f64) -> String {
        if self.degrees {
            sig(x.to_degrees())
        } else {
            sig(x)
        }
    }

    fn weyl(&self, d: &WeylVector) -> String {
        d.as_array().map(|a| self.angle(a)).join(", ")
    }

    fn emit(&self, text: &str) -> Result<(), CliError> {
        emit(self.out.as_deref(), text)
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let ctx = Ctx {
        seed: cli.seed,
        tol: cli.tol,
        json: cli.json,
        out: cli.out,
        degrees: cli.degrees,
        unitarity_tol: cli.unitarity_tol,
    };
    let result = match cli.command {
        Command::Analyze { matrix, numeric, search } => cmd_analyze(&ctx, &matrix, numeric, &search),
        Command::Decompose { matrix } => cmd_decompose(&ctx, &matrix),
        Command::Verify { trials, routes, search } => cmd_verify(&ctx, trials, &routes, &search),
        Command::Capacities { d, matrix, search } => cmd_capacities(&ctx, d, matrix, &search),
        Command::Random { weyl, count, dir } => cmd_random(&ctx, weyl, count, dir),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let line = serde_json::json!({ "error": e.kind, "exit": e.code, "message": e.message });
            eprintln!("{line}");
            ExitCode::from(e.code)
        }
    }
}

fn cmd_analyze(ctx: &Ctx, path: &Path, numeric: bool, search: &SearchArgs) -> Result<(), CliError> {
    let (u, hash) = load_matrix(path, ctx.unitarity_tol)?;
    let opts = AnalysisOptions {
        search: if numeric { Some(search.config(ctx.seed)?) } else { None },
        ..AnalysisOptions::default()
    };
    let report = analyze(&u, &hash, &opts)?;
    if ctx.json {
        ctx.emit(&to_json(&report))
    } else {
        ctx.emit(&analysis_table(ctx, &report))
    }
}

fn analysis_table(ctx: &Ctx, r: &AnalysisReport) -> String {
    let mut t = Table::new();
    t.row("input sha256", &r.input_hash);
    t.row("d", &ctx.weyl(&r.canonical.d));
    t.row("global phase", &ctx.angle(r.canonical.global_phase));
    t.row("reconstruction residual", &sig(r.canonical.residual));
    t.row("eigenphases", &r.eigenphases.lambda.map(|x| ctx.angle(x)).join(", "));
    capacity_rows(&mut t, &r.capacities);
    t.row("d_min closed", &sig(r.d_min.closed));
    t.row("d_min geometric", &sig(r.d_min.geometric));
    if let Some(n) = r.d_min.numeric {
        t.row("d_min numeric", &sig(n));
    }
    for q in &r.quadratic {
        t.row(&format!("residual c_prod^2 + d_min^2 ({})", q.route.as_str()), &sig(q.residual));
    }
    for q in &r.quartic {
        t.row(&format!("residual c_max^4 + d_min^2 ({})", q.route.as_str()), &sig(q.residual));
    }
    if let Some(rel) = &r.relations {
        relation_rows(&mut t, &rel.first_order, &rel.collective);
    }
    t.row("time (s)", &format!("{:.3}", r.timings.total));
    t.render()
}

fn capacity_rows(t: &mut Table, c: &CapacityReport) {
    t.row("c_max_prod", &sig(c.c_max_prod));
    t.row("c_max", &sig(c.c_max));
    t.row("e_max_prod", &sig(c.e_max_prod));
    t.row("perfect entangler", &c.perfect_entangler.to_string());
}

fn relation_rows(t: &mut Table, first: &CapacityRelationReport, collective: &CapacityRelationReport) {
    t.row("E + C1 - 1 (at concurrence maximizer)", &sig(first.relation_residual));
    if let (Some(c), Some(r)) = (first.literal_capacity_term, first.literal_residual) {
        t.row("max C1 over product inputs (literal)", &sig(c));
        t.row("E + max C1 - 1 (literal)", &sig(r));
    }
    t.row("max C_inf", &sig(collective.capacity_term));
    t.row("E - max C_inf", &sig(collective.relation_residual));
}

fn cmd_decompose(ctx: &Ctx, path: &Path) -> Result<(), CliError> {
    let (u, _) = load_matrix(path, ctx.unitarity_tol)?;
    let form = cartan_decompose(&u)?;
    if ctx.json {
        ctx.emit(&to_json(&form.to_json()))
    } else {
        ctx.emit(&decompose_table(ctx, &form))
    }
}

fn decompose_table(ctx: &Ctx, form: &CanonicalForm) -> String {
    let mut t = Table::new();
    t.row("d", &ctx.weyl(&form.d));
    t.row("global phase", &ctx.angle(form.global_phase));
    t.row("reconstruction residual", &sig(form.residual));
    for (name, m) in [("XA", &form.xa), ("XB", &form.xb), ("YA", &form.ya), ("YB", &form.yb)] {
        for r in 0..2 {
            let row: Vec<String> = (0..2)
                .map(|c| {
                    let z = m.entry(r, c);
                    let sign = if z.im.is_sign_negative() { '-' } else { '+' };
                    format!("{}{sign}{}i", sig(z.re), sig(z.im.abs()))
                })
                .collect();
            t.row(if r == 0 { name } else { "" }, &row.join("  "));
        }
    }
    t.render()
}

#[derive(Debug, Clone, Serialize)]
struct TrialRow {
    trial: usize,
    alpha_x: f64,
    alpha_y: f64,
    alpha_z: f64,
    decomposition_residual: f64,
    c_max_prod: f64,
    d_min_closed: f64,
    d_min_geometric: f64,
    quadratic_closed: f64,
    quadratic_geometric: f64,
    quartic_closed: f64,
    quartic_geometric: f64,
    c_max_prod_numeric: Option<f64>,
    d_min_numeric: Option<f64>,
    quadratic_numeric: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
struct RouteSummary {
    route: String,
    max_residual: f64,
    mean_residual: f64,
    tolerance: f64,
    pass: bool,
}

#[derive(Debug, Clone, Serialize)]
struct VerifySummary {
    trials: usize,
    seed: u64,
    routes: Vec<RouteSummary>,
    /// max |d_min closed - d_min geometric|
    max_closed_geometric_gap: f64,
    /// max over samples of |oracle - closed form| for c_max_prod and d_min
    #[serde(skip_serializing_if = "Option::is_none")]
    max_oracle_gap: Option<f64>,
    pass: bool,
}

fn run_trial(i: usize, seed: u64, numeric: Option<&SearchConfig>) -> Result<TrialRow, CliError> {
    let mut rng = shard_rng(seed, i as u64);
    let u = haar_random_unitary(4, &mut rng)?;
    let form = cartan_decompose(&u)?;
    let d = form.d;
    let v = verify_theorem(&d)?;
    let caps = capacities_closed_form(&d);
    let mut row = TrialRow {
        trial: i,
        alpha_x: d.alpha_x,
        alpha_y: d.alpha_y,
        alpha_z: d.alpha_z,
        decomposition_residual: form.residual,
        c_max_prod: caps.c_max_prod,
        d_min_closed: v.d_min_closed,
        d_min_geometric: v.d_min_geometric,
        quadratic_closed: v.quadratic[0].residual,
        quadratic_geometric: v.quadratic[1].residual,
        quartic_closed: v.quartic[0].residual,
        quartic_geometric: v.quartic[1].residual,
        c_max_prod_numeric: None,
        d_min_numeric: None,
        quadratic_numeric: None,
    };
    if let Some(cfg) = numeric {
        let cfg = SearchConfig {
            seed: cfg.seed.wrapping_add(i as u64),
            ..*cfg
        };
        let c = max_concurrence_product(&u, &cfg)?.value;
        let ud = ucap::canonical::canonical_unitary(&d);
        let overlap = min_probe_overlap(&ud.multiply(&ud)?, &cfg)?.value();
        row.c_max_prod_numeric = Some(c);
        row.d_min_numeric = Some(overlap);
        row.quadratic_numeric = Some((c * c + overlap * overlap - 1.0).abs());
    }
    Ok(row)
}

fn summarize(route: Route, values: &[f64], tolerance: f64) -> RouteSummary {
    let max = values.iter().copied().fold(0.0, f64::max);
    let mean = values.iter().sum::<f64>() / values.len() as f64;
    RouteSummary {
        route: route.as_str().to_owned(),
        max_residual: max,
        mean_residual: mean,
        tolerance,
        pass: max <= tolerance,
    }
}

fn cmd_verify(ctx: &Ctx, trials: usize, routes: &[String], search: &SearchArgs) -> Result<(), CliError> {
    if trials == 0 {
        return Err(CliError::usage("--trials must be at least 1".into()));
    }
    let routes: Vec<Route> = routes.iter().map(|r| r.parse()).collect::<Result<_, _>>()?;
    let numeric = if routes.contains(&Route::Numeric) {
        Some(search.config(ctx.seed)?)
    } else {
        None
    };
    let rows: Vec<TrialRow> = (0..trials)
        .into_par_iter()
        .map(|i| run_trial(i, ctx.seed, numeric.as_ref()))
        .collect::<Result<_, _>>()?;

    let mut summaries = Vec::new();
    for route in &routes {
        let (values, default_tol): (Vec<f64>, f64) = match route {
            Route::Closed => (rows.iter().flat_map(|r| [r.quadratic_closed, r.quartic_closed]).collect(), 1e-9),
            Route::Geometric => (rows.iter().flat_map(|r| [r.quadratic_geometric, r.quartic_geometric]).collect(), 1e-9),
            Route::Numeric => (
                rows.iter()
                    .flat_map(|r| {
                        [
                            (r.c_max_prod_numeric.unwrap() - r.c_max_prod).abs(),
                            (r.d_min_numeric.unwrap() - r.d_min_closed).abs(),
                        ]
                    })
                    .collect(),
                1e-3,
            ),
        };
        summaries.push(summarize(*route, &values, ctx.tol.unwrap_or(default_tol)));
    }
    let max_oracle_gap = numeric.map(|_| {
        rows.iter()
            .flat_map(|r| {
                [
                    (r.c_max_prod_numeric.unwrap() - r.c_max_prod).abs(),
                    (r.d_min_numeric.unwrap() - r.d_min_closed).abs(),
                ]
            })
            .fold(0.0, f64::max)
    });
    let summary = VerifySummary {
        trials,
        seed: ctx.seed,
        max_closed_geometric_gap: rows.iter().map(|r| (r.d_min_closed - r.d_min_geometric).abs()).fold(0.0, f64::max),
        max_oracle_gap,
        pass: summaries.iter().all(|s| s.pass),
        routes: summaries,
    };

    if let Some(path) = &ctx.out {
        let mut w = csv::Writer::from_path(path).map_err(|e| CliError::io(path, e.into()))?;
        for row in &rows {
            w.serialize(row).map_err(|e| CliError::io(path, e.into()))?;
        }
        w.flush().map_err(|e| CliError::io(path, e))?;
    }
    let text = if ctx.json {
        to_json(&summary)
    } else {
        let mut t = Table::new();
        t.row("trials", &trials.to_string());
        t.row("seed", &ctx.seed.to_string());
        for s in &summary.routes {
            t.row(
                &format!("{} max / mean", s.route),
                &format!("{} / {} (tol {}) {}", sig(s.max_residual), sig(s.mean_residual), sig(s.tolerance), if s.pass { "PASS" } else { "FAIL" }),
            );
        }
        t.row("max |d_min closed - geometric|", &sig(summary.max_closed_geometric_gap));
        if let Some(g) = summary.max_oracle_gap {
            t.row("max |oracle - closed|", &sig(g));
        }
        t.render()
    };
    emit(None, &text)?;
    if summary.pass {
        Ok(())
    } else {
        let worst = summary.routes.iter().map(|s| s.max_residual).fold(0.0, f64::max);
        Err(CliError::verify_failed(format!("max residual {worst:e} exceeds tolerance")))
    }
}

#[derive(Serialize)]
struct CapacitiesOutput {
    d: WeylVector,
    capacities: CapacityReport,
    d_min: f64,
    relation1: CapacityRelationReport,
    relation2: CapacityRelationReport,
}

fn cmd_capacities(ctx: &Ctx, d: Option<Vec<f64>>, matrix: Option<PathBuf>, search: &SearchArgs) -> Result<(), CliError> {
    let d = match (d, matrix) {
        (Some(v), _) => {
            let [x, y, z]: [f64; 3] = v
                .try_into()
                .map_err(|v: Vec<f64>| CliError::usage(format!("--d needs three values, got {}", v.len())))?;
            if ![x, y, z].iter().all(|a| a.is_finite()) {
                return Err(Error::NonFinite.into());
            }
            WeylVector::new(x, y, z)
        }
        (None, Some(path)) => cartan_decompose(&load_matrix(&path, ctx.unitarity_tol)?.0)?.d,
        (None, None) => return Err(CliError::usage("one of --d or --matrix is required".into())),
    };
    let cfg = search.config(ctx.seed)?;
    let out = CapacitiesOutput {
        d,
        capacities: capacities_closed_form(&d),
        d_min: d_min_canonical(&d),
        relation1: verify_relation1(&d, &cfg)?,
        relation2: verify_relation2(&d, &cfg)?,
    };
    if ctx.json {
        ctx.emit(&to_json(&out))
    } else {
        let mut t = Table::new();
        t.row("d", &ctx.weyl(&out.d));
        capacity_rows(&mut t, &out.capacities);
        t.row("d_min", &sig(out.d_min));
        relation_rows(&mut t, &out.relation1, &out.relation2);
        ctx.emit(&t.render())
    }
}

/// Uniform sample from `0 <= |a_z| <= a_y <= a_x <= pi/4` by rejection.
fn random_weyl<R: Rng>(rng: &mut R) -> WeylVector {
    let q = std::f64::consts::FRAC_PI_4;
    loop {
        let x = rng.random_range(0.0..=q);
        let y = rng.random_range(0.0..=q);
        let z = rng.random_range(-q..=q);
        if y <= x && z.abs() <= y {
            return WeylVector::new(x, y, z);
        }
    }
}

fn cmd_random(ctx: &Ctx, weyl: bool, count: usize, dir: Option<PathBuf>) -> Result<(), CliError> {
    if count == 0 {
        return Err(CliError::usage("--count must be at least 1".into()));
    }
    let mut rng = shard_rng(ctx.seed, 0);
    let samples: Vec<serde_json::Value> = (0..count)
        .map(|_| -> Result<serde_json::Value, CliError> {
            Ok(if weyl {
                serde_json::to_value(random_weyl(&mut rng)).expect("serializable")
            } else {
                serde_json::to_value(haar_random_unitary(4, &mut rng)?.to_json()).expect("serializable")
            })
        })
        .collect::<Result<_, _>>()?;

    if let Some(dir) = dir {
        fs::create_dir_all(&dir).map_err(|e| CliError::io(&dir, e))?;
        let stem = if weyl { "weyl" } else { "unitary" };
        for (i, s) in samples.iter().enumerate() {
            let path = dir.join(format!("{stem}_{i:04}.json"));
            fs::write(&path, to_json(s)).map_err(|e| CliError::io(&path, e))?;
        }
        return Ok(());
    }
    if count == 1 {
        ctx.emit(&to_json(&samples[0]))
    } else {
        ctx.emit(&to_json(&samples))
    }
}
