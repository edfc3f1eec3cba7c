//! Command implementations behind the `jacobi` binary.
//!
//! Every command turns a [`RunConfig`] into an [`Outcome`]: an exit code, a
//! JSON summary for stdout and the artifacts to write into `--out`.

use std::fmt;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use jacobi_core::cycles::{cycle_membership, cycle_through, flatness, mobius_fit, CyclePoint, MobiusFit};
use jacobi_core::linalg::{from_rows, to_rows};
use jacobi_core::matcurve::{preset, CurveSpec, PRESET_NAMES};
use jacobi_core::numfmt::sci12;
use jacobi_core::pipeline::{analyze, compare_analyses, Analysis, Verdict};
use jacobi_core::reconstruct::{
    preset_prescription_spec, prescription_from_analysis, reconstruct, verify_reconstruction, IntegrateOptions,
    InvariantPrescription, PrescriptionSpec, Reconstruction, RoundtripReport, PRESCRIPTION_PRESETS,
};
use jacobi_core::symspace::{ConformalTransform, LagrangianChartPoint};
use jacobi_core::{sample_curve, JacobiError, Mat, SampleGrid, SymmetricMatrixCurve, Tolerances};

pub const EXIT_OK: i32 = 0;
pub const EXIT_ERROR: i32 = 1;
pub const EXIT_INADMISSIBLE: i32 = 2;
pub const EXIT_NOT_EQUIVALENT: i32 = 3;

/// Samples used for a curve file that names a domain but no grid.
pub const DEFAULT_SAMPLES: usize = 201;
/// Grid of the prescription presets: `[0, 1]` with step `1e-3`.
pub const PRESCRIPTION_GRID: (f64, f64, usize) = (0.0, 1.0, 1001);

#[derive(Debug, Parser)]
#[command(name = "jacobi", version, about = "Conformal-symplectic invariants of Jacobi curves")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Admissibility report, invariant table and reduced Cartan matrix of one curve.
    Analyze {
        #[command(flatten)]
        common: CommonArgs,
        #[command(flatten)]
        transform: TransformArgs,
    },
    /// Decide whether two curves are conformal-symplectic equivalent.
    ///
    /// With a single input and `--seed`, the curve is compared with its image
    /// under a random conformal symplectic transform.
    Compare {
        #[command(flatten)]
        common: CommonArgs,
        #[command(flatten)]
        transform: TransformArgs,
    },
    /// Integrate the Frenet equation of a prescription and re-analyze the result.
    Reconstruct {
        #[command(flatten)]
        common: CommonArgs,
        /// Multiply the initial frame by a random symplectic matrix.
        #[arg(long)]
        seed: Option<u64>,
        /// RK4 steps per grid interval.
        #[arg(long, default_value_t = 1)]
        substeps: usize,
        /// Symplectic re-orthonormalization every N grid intervals.
        #[arg(long)]
        reproject_every: Option<usize>,
        /// Treat the input as a curve: analyze, reconstruct from its invariants, re-analyze.
        #[arg(long)]
        roundtrip: bool,
    },
    /// Cycle through three chart points, or flatness and Moebius fit of a curve.
    Cycle {
        #[command(flatten)]
        common: CommonArgs,
    },
    /// List the built-in curves and prescriptions.
    Presets,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Clone, Args)]
pub struct CommonArgs {
    /// Input JSON files (curve, prescription or cycle points).
    pub inputs: Vec<PathBuf>,
    /// Built-in input by name; listed before file inputs.
    #[arg(long = "preset", value_name = "NAME")]
    pub presets: Vec<String>,
    #[arg(long, allow_negative_numbers = true)]
    pub t0: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub t1: Option<f64>,
    /// Number of grid samples.
    #[arg(short = 'm', long = "samples")]
    pub m: Option<usize>,
    /// Tighten every tolerance by a factor of ten (before `--tol-*` overrides).
    #[arg(long)]
    pub strict: bool,
    /// Directory receiving the artifacts.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Optional tables to write: json, csv.
    #[arg(long, value_enum, value_delimiter = ',', default_values = ["json", "csv"])]
    pub format: Vec<Format>,
    #[command(flatten)]
    pub tol: TolArgs,
}

#[derive(Debug, Clone, Args)]
pub struct TransformArgs {
    /// Seed of a random conformal symplectic transform applied to the (last) curve.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Conformal factor of the random transform.
    #[arg(long, default_value_t = 1.0, allow_negative_numbers = true)]
    pub scale: f64,
}

macro_rules! tol_args {
    ($($field:ident => $flag:literal),* $(,)?) => {
        /// Overrides of individual tolerances.
        #[derive(Debug, Clone, Default, Args)]
        pub struct TolArgs {
            $(
                #[arg(long = $flag, value_name = "X")]
                pub $field: Option<f64>,
            )*
        }

        impl TolArgs {
            pub fn apply(&self, tol: &mut Tolerances) {
                $(if let Some(v) = self.$field { tol.$field = v; })*
            }
        }
    };
}

tol_args! {
    sym_tol => "tol-sym",
    iso_tol => "tol-iso",
    frame_tol => "tol-frame",
    cond_max => "tol-cond-max",
    ric_sym_tol => "tol-ric-sym",
    imag_tol => "tol-imag",
    eig_gap_tol => "tol-eig-gap",
    adm_tol => "tol-adm",
    norm_tol => "tol-norm",
    resid_max => "tol-resid-max",
    sign_tol => "tol-sign",
    equiv_tol => "tol-equiv",
    flat_tol => "tol-flat",
    fit_tol => "tol-fit",
    contain_tol => "tol-contain",
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum CommandKind {
    Analyze,
    Compare,
    Reconstruct,
    Cycle,
    Presets,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Input {
    Preset(String),
    File(PathBuf),
}

impl Input {
    fn label(&self) -> String {
        match self {
            Input::Preset(n) => n.clone(),
            Input::File(p) => p.display().to_string(),
        }
    }
}

/// Partial grid override; missing fields come from the input's own grid.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct GridOverride {
    pub t0: Option<f64>,
    pub t1: Option<f64>,
    pub m: Option<usize>,
}

impl GridOverride {
    pub fn apply(&self, g: SampleGrid) -> Result<SampleGrid, CliError> {
        Ok(SampleGrid::new(self.t0.unwrap_or(g.t0), self.t1.unwrap_or(g.t1), self.m.unwrap_or(g.m))?)
    }
}

/// Everything a command needs, after parsing and tolerance resolution.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub command: CommandKind,
    pub inputs: Vec<Input>,
    pub grid: GridOverride,
    pub tol: Tolerances,
    pub out: Option<PathBuf>,
    pub json: bool,
    pub csv: bool,
    pub seed: Option<u64>,
    pub scale: f64,
    pub integrate: IntegrateOptions,
    pub roundtrip: bool,
}

impl RunConfig {
    pub fn new(command: CommandKind) -> Self {
        RunConfig {
            command,
            inputs: Vec::new(),
            grid: GridOverride::default(),
            tol: Tolerances::default(),
            out: None,
            json: true,
            csv: true,
            seed: None,
            scale: 1.0,
            integrate: IntegrateOptions::default(),
            roundtrip: false,
        }
    }

    pub fn from_cli(cli: Cli) -> Result<Self, CliError> {
        let (kind, common) = match &cli.command {
            Command::Analyze { common, .. } => (CommandKind::Analyze, Some(common)),
            Command::Compare { common, .. } => (CommandKind::Compare, Some(common)),
            Command::Reconstruct { common, .. } => (CommandKind::Reconstruct, Some(common)),
            Command::Cycle { common } => (CommandKind::Cycle, Some(common)),
            Command::Presets => (CommandKind::Presets, None),
        };
        let mut cfg = RunConfig::new(kind);
        if let Some(c) = common {
            cfg.inputs = c.presets.iter().cloned().map(Input::Preset).chain(c.inputs.iter().cloned().map(Input::File)).collect();
            cfg.grid = GridOverride { t0: c.t0, t1: c.t1, m: c.m };
            if c.strict {
                cfg.tol = cfg.tol.strict();
            }
            c.tol.apply(&mut cfg.tol);
            cfg.tol.validate()?;
            cfg.out = c.out.clone();
            cfg.json = c.format.contains(&Format::Json);
            cfg.csv = c.format.contains(&Format::Csv);
        }
        match cli.command {
            Command::Analyze { transform, .. } | Command::Compare { transform, .. } => {
                cfg.seed = transform.seed;
                cfg.scale = transform.scale;
            }
            Command::Reconstruct { seed, substeps, reproject_every, roundtrip, .. } => {
                if substeps == 0 || reproject_every == Some(0) {
                    return Err(CliError::Usage("--substeps and --reproject-every must be positive".into()));
                }
                cfg.seed = seed;
                cfg.integrate = IntegrateOptions { substeps, reproject_every };
                cfg.roundtrip = roundtrip;
            }
            Command::Cycle { .. } | Command::Presets => {}
        }
        Ok(cfg)
    }

    /// Parses command-line arguments (including the program name).
    pub fn parse_from<I, T>(args: I) -> Result<Self, CliError>
    where
        I: IntoIterator<Item = T>,
        T: Into<std::ffi::OsString> + Clone,
    {
        let cli = Cli::try_parse_from(args).map_err(|e| CliError::Usage(e.to_string()))?;
        RunConfig::from_cli(cli)
    }
}

#[derive(Debug)]
pub enum CliError {
    Core(JacobiError),
    Usage(String),
    Io { path: PathBuf, source: std::io::Error },
}

impl CliError {
    pub fn kind(&self) -> &'static str {
        match self {
            CliError::Core(e) => e.kind(),
            CliError::Usage(_) => "Usage",
            CliError::Io { .. } => "Io",
        }
    }

    /// `{"kind": ..., "message": ...}` as printed on stderr.
    pub fn to_json(&self) -> String {
        json!({ "kind": self.kind(), "message": self.to_string() }).to_string()
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Core(e) => write!(f, "{e}"),
            CliError::Usage(m) => write!(f, "{m}"),
            CliError::Io { path, source } => write!(f, "{}: {source}", path.display()),
        }
    }
}

impl std::error::Error for CliError {}

impl From<JacobiError> for CliError {
    fn from(e: JacobiError) -> Self {
        CliError::Core(e)
    }
}

/// A file written into the output directory.
#[derive(Debug, Clone, PartialEq)]
pub struct Artifact {
    pub name: &'static str,
    pub contents: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub code: i32,
    /// Printed on stdout; also the primary JSON artifact of the command.
    pub summary: Value,
    pub artifacts: Vec<Artifact>,
}

fn pretty(v: &impl Serialize) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("output serializes");
    s.push('\n');
    s
}

fn read(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|source| CliError::Io { path: path.to_path_buf(), source })
}

fn one_input(cfg: &RunConfig) -> Result<&Input, CliError> {
    match cfg.inputs.as_slice() {
        [x] => Ok(x),
        v => Err(CliError::Usage(format!("{:?} takes exactly one input, got {}", cfg.command, v.len()))),
    }
}

/// A curve with its analysis grid and display label.
pub struct LoadedCurve {
    pub curve: SymmetricMatrixCurve,
    pub grid: SampleGrid,
    pub label: String,
}

fn curve_from_spec(spec: &CurveSpec, cfg: &RunConfig, label: String) -> Result<LoadedCurve, CliError> {
    let curve = spec.build(&cfg.tol)?;
    let base = match spec.default_grid() {
        Some(g) => g,
        None => {
            let (lo, hi) = curve.domain();
            SampleGrid { t0: lo, t1: hi, m: DEFAULT_SAMPLES }
        }
    };
    Ok(LoadedCurve { curve, grid: cfg.grid.apply(base)?, label })
}

pub fn load_curve(input: &Input, cfg: &RunConfig) -> Result<LoadedCurve, CliError> {
    match input {
        Input::Preset(name) => {
            let p = preset(name)?;
            Ok(LoadedCurve { curve: p.curve, grid: cfg.grid.apply(p.grid)?, label: name.clone() })
        }
        Input::File(path) => curve_from_spec(&CurveSpec::from_json(&read(path)?)?, cfg, input.label()),
    }
}

fn transformed(c: LoadedCurve, seed: u64, scale: f64, tol: &Tolerances) -> Result<LoadedCurve, CliError> {
    let g = ConformalTransform::random(c.curve.n(), seed, scale)?.matrix();
    Ok(LoadedCurve {
        curve: c.curve.transformed(&g, tol)?,
        grid: c.grid,
        label: format!("{} (transform seed {seed}, scale {scale})", c.label),
    })
}

#[derive(Serialize)]
struct AnalyzeSummary<'a> {
    command: &'static str,
    input: &'a str,
    admissible: bool,
    refined: bool,
    grid: SampleGrid,
    #[serde(skip_serializing_if = "Option::is_none")]
    length: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    normalization_defect: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    signs: Option<&'a [f64]>,
    report: &'a jacobi_core::geom::AdmissibilityReport,
}

fn analyze_summary<'a>(a: &'a Analysis, label: &'a str) -> AnalyzeSummary<'a> {
    let r = a.reduced();
    AnalyzeSummary {
        command: "analyze",
        input: label,
        admissible: a.admissible(),
        refined: a.refined,
        grid: a.grid,
        length: r.map(|r| *r.arclength.last().expect("nonempty")),
        normalization_defect: r.map(|r| r.normalization_defect()),
        signs: r.map(|r| r.signs.as_slice()),
        report: &a.report,
    }
}

/// Writes `report.json` always, `invariants.csv` and `reduced_cartan.json`
/// when the curve is admissible; exit 0 or 2.
pub fn cmd_analyze(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let mut c = load_curve(one_input(cfg)?, cfg)?;
    if let Some(seed) = cfg.seed {
        c = transformed(c, seed, cfg.scale, &cfg.tol)?;
    }
    let a = analyze(&c.curve, &c.grid, &cfg.tol)?;
    let summary = serde_json::to_value(analyze_summary(&a, &c.label)).expect("summary serializes");
    let mut artifacts = vec![Artifact { name: "report.json", contents: pretty(&summary) }];
    if let Some(r) = a.reduced() {
        if cfg.csv {
            artifacts.push(Artifact { name: "invariants.csv", contents: r.to_csv() });
        }
        if cfg.json {
            artifacts.push(Artifact { name: "reduced_cartan.json", contents: pretty(&r.to_json()) });
        }
    }
    let code = if a.admissible() { EXIT_OK } else { EXIT_INADMISSIBLE };
    Ok(Outcome { code, summary, artifacts })
}

/// Verdict JSON with sign pattern and compared arclength; exit 0, 3 or 2.
pub fn cmd_compare(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let (a, b) = match (cfg.inputs.as_slice(), cfg.seed) {
        ([x], Some(seed)) => {
            let a = load_curve(x, cfg)?;
            let b = transformed(load_curve(x, cfg)?, seed, cfg.scale, &cfg.tol)?;
            (a, b)
        }
        ([x, y], seed) => {
            let a = load_curve(x, cfg)?;
            let mut b = load_curve(y, cfg)?;
            if let Some(seed) = seed {
                b = transformed(b, seed, cfg.scale, &cfg.tol)?;
            }
            (a, b)
        }
        (v, _) => {
            return Err(CliError::Usage(format!(
                "compare takes two inputs, or one input with --seed; got {}",
                v.len()
            )))
        }
    };
    let (ra, rb) = rayon::join(|| analyze(&a.curve, &a.grid, &cfg.tol), || analyze(&b.curve, &b.grid, &cfg.tol));
    let (ra, rb) = (ra?, rb?);
    let cmp = compare_analyses(&ra, &rb, cfg.tol.equiv_tol)?;
    let failure = |x: &Analysis| x.report.failed_step;
    let summary = json!({
        "command": "compare",
        "inputs": [a.label, b.label],
        "verdict": cmp.verdict,
        "tol": cmp.tol,
        "equivalence": cmp.equivalence,
        "length_a": cmp.length_a,
        "length_b": cmp.length_b,
        "failed_step_a": failure(&ra),
        "failed_step_b": failure(&rb),
    });
    let code = match cmp.verdict {
        Verdict::Equivalent => EXIT_OK,
        Verdict::NotEquivalent => EXIT_NOT_EQUIVALENT,
        Verdict::Inadmissible => EXIT_INADMISSIBLE,
    };
    Ok(Outcome { code, artifacts: vec![Artifact { name: "verdict.json", contents: pretty(&summary) }], summary })
}

fn prescription_spec(input: &Input, cfg: &RunConfig) -> Result<PrescriptionSpec, CliError> {
    let mut spec = match input {
        Input::Preset(name) => {
            let (t0, t1, m) = PRESCRIPTION_GRID;
            preset_prescription_spec(name, SampleGrid::new(t0, t1, m)?)?
        }
        Input::File(path) => PrescriptionSpec::from_json(&read(path)?)?,
    };
    spec.grid = cfg.grid.apply(spec.grid)?;
    if let Some(seed) = cfg.seed {
        let f0 = from_rows(&spec.f0).ok_or_else(|| JacobiError::InvalidInput("ragged F0".into()))?;
        if f0.nrows() == 2 * spec.n {
            let g = ConformalTransform::random(spec.n, seed, 1.0)?.symplectic;
            spec.f0 = to_rows(&(g * f0));
        }
    }
    Ok(spec)
}

fn residual_csv(rec: &Reconstruction) -> String {
    let tr = &rec.trajectory;
    let mut out = String::from("t,residual,in_chart\n");
    for (i, t) in tr.t.iter().enumerate() {
        let inside = u8::from(rec.chart.points[i].is_some());
        out.push_str(&format!("{},{},{inside}\n", sci12(*t), sci12(tr.residual[i])));
    }
    out
}

/// Table curve of the main in-chart segment, with exact derivative samples.
pub fn reconstructed_curve_spec(rec: &Reconstruction) -> Option<CurveSpec> {
    let seg = rec.main_segment()?;
    let jets: Vec<_> = rec.jets[seg.clone()].iter().map(|j| j.as_ref().expect("in-chart segment")).collect();
    let col = |f: fn(&jacobi_core::CurveJet) -> &Mat| jets.iter().map(|j| f(j).clone()).collect::<Vec<_>>();
    let (s, s1, s2, s3) = (col(|j| &j.s), col(|j| &j.s1), col(|j| &j.s2), col(|j| &j.s3));
    Some(CurveSpec::table(&rec.chart.t[seg], [&s, &s1, &s2, &s3]))
}

fn reconstruct_outcome(
    label: &str,
    p: &InvariantPrescription,
    rec: &Reconstruction,
    report: &RoundtripReport,
    mut artifacts: Vec<Artifact>,
    cfg: &RunConfig,
) -> Outcome {
    let segments: Vec<[usize; 2]> = rec.chart.segments.iter().map(|r| [r.start, r.end]).collect();
    let summary = json!({
        "command": "reconstruct",
        "input": label,
        "grid": p.grid(),
        "segments": segments,
        "roundtrip": report,
    });
    artifacts.insert(0, Artifact { name: "roundtrip.json", contents: pretty(&summary) });
    if cfg.json {
        if let Some(spec) = reconstructed_curve_spec(rec) {
            let mut s = spec.to_json();
            s.push('\n');
            artifacts.push(Artifact { name: "curve.json", contents: s });
        }
    }
    if cfg.csv {
        artifacts.push(Artifact { name: "residual.csv", contents: residual_csv(rec) });
    }
    // a prescription off the normalization constraint cannot round-trip; the
    // warning in the report is the outcome
    let code = if report.reanalysis_failure.is_some() {
        EXIT_INADMISSIBLE
    } else if report.equivalent || report.constraint_warning {
        EXIT_OK
    } else {
        EXIT_NOT_EQUIVALENT
    };
    Outcome { code, summary, artifacts }
}

/// Reconstructs from a prescription (or, with `--roundtrip`, from the
/// invariants of a curve) and re-analyzes the result.
pub fn cmd_reconstruct(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let input = one_input(cfg)?;
    if cfg.roundtrip {
        let c = load_curve(input, cfg)?;
        let a = analyze(&c.curve, &c.grid, &cfg.tol)?;
        let Some(reference) = a.reduced() else {
            let summary = serde_json::to_value(analyze_summary(&a, &c.label)).expect("summary serializes");
            return Ok(Outcome {
                code: EXIT_INADMISSIBLE,
                artifacts: vec![Artifact { name: "report.json", contents: pretty(&summary) }],
                summary,
            });
        };
        let p = prescription_from_analysis(&a, a.grid.m, &cfg.tol)?;
        let rec = reconstruct(&p, cfg.integrate, &cfg.tol)?;
        let (report, _) = verify_reconstruction(&p, &rec, reference, &cfg.tol, cfg.tol.equiv_tol)?;
        return Ok(reconstruct_outcome(&c.label, &p, &rec, &report, Vec::new(), cfg));
    }
    let spec = prescription_spec(input, cfg)?;
    let p = spec.build(&cfg.tol)?;
    let rec = reconstruct(&p, cfg.integrate, &cfg.tol)?;
    let reference = p.as_reduced(&cfg.tol);
    let (report, _) = verify_reconstruction(&p, &rec, &reference, &cfg.tol, cfg.tol.equiv_tol)?;
    Ok(reconstruct_outcome(&input.label(), &p, &rec, &report, Vec::new(), cfg))
}

/// Query of the points form of `cycle`: a symmetric matrix or `"infinity"`.
#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
enum QuerySpec {
    Point(Vec<Vec<f64>>),
    Named(String),
}

/// `{"points": [S1, S2, S3], "queries": [...]}`.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct CycleInput {
    points: Vec<Vec<Vec<f64>>>,
    #[serde(default)]
    queries: Vec<QuerySpec>,
}

fn chart_point(rows: &[Vec<f64>], tol: &Tolerances) -> Result<LagrangianChartPoint, CliError> {
    let m = from_rows(rows).ok_or_else(|| JacobiError::InvalidInput("ragged matrix".into()))?;
    if m.nrows() != m.ncols() {
        return Err(JacobiError::InvalidDimension("chart points must be square".into()).into());
    }
    Ok(LagrangianChartPoint::new(m, tol.sym_tol)?)
}

fn cycle_json(c: &jacobi_core::cycles::Cycle) -> Value {
    json!({
        "infinity": to_rows(c.infinity_chart.matrix()),
        "base": to_rows(c.base.matrix()),
        "direction": to_rows(&c.direction),
        "regular": c.regular,
    })
}

fn cycle_from_points(input: CycleInput, label: &str, cfg: &RunConfig) -> Result<Value, CliError> {
    let tol = &cfg.tol;
    let [a, b, c] = input.points.as_slice() else {
        return Err(CliError::Usage(format!("cycle needs exactly three points, got {}", input.points.len())));
    };
    let cyc = cycle_through(&chart_point(a, tol)?, &chart_point(b, tol)?, &chart_point(c, tol)?, tol)?;
    let queries = input
        .queries
        .iter()
        .map(|q| {
            let p = match q {
                QuerySpec::Point(rows) => CyclePoint::Chart(chart_point(rows, tol)?),
                QuerySpec::Named(s) if s == "infinity" => CyclePoint::AtInfinity,
                QuerySpec::Named(s) => return Err(CliError::Usage(format!("unknown query {s:?}"))),
            };
            Ok(cycle_membership(&cyc, &p, tol.contain_tol, tol)?)
        })
        .collect::<Result<Vec<_>, CliError>>()?;
    Ok(json!({ "command": "cycle", "input": label, "mode": "points", "cycle": cycle_json(&cyc), "queries": queries }))
}

fn cycle_from_curve(c: &LoadedCurve, cfg: &RunConfig) -> Result<Value, CliError> {
    let tol = &cfg.tol;
    let sup = flatness(&c.curve, &c.grid, tol)?;
    let flat = sup <= tol.flat_tol;
    let jets = sample_curve(&c.curve, &c.grid, tol)?;
    let (fit, fit_residual): (Option<MobiusFit>, f64) = match mobius_fit(&jets, tol.fit_tol) {
        Ok(f) => {
            let r = f.residual;
            (Some(f), r)
        }
        Err(JacobiError::NoFit { residual }) => (None, residual),
        Err(e) => return Err(e.into()),
    };
    let mut out = json!({
        "command": "cycle",
        "input": c.label,
        "mode": "curve",
        "grid": c.grid,
        "flat": flat,
        "schwarzian_sup": sup,
        "mobius_fit": fit,
        "fit_residual": fit_residual,
    });
    if flat {
        let m = jets.len();
        let pick = [0, m / 2, m - 1];
        let pt = |i: usize| LagrangianChartPoint::from_symmetric(jets[i].s.clone());
        let cyc = cycle_through(&pt(pick[0]), &pt(pick[1]), &pt(pick[2]), tol)?;
        let mut max_residual = 0.0f64;
        let mut contained = 0;
        for (_, j) in jets.iter().enumerate().filter(|(i, _)| !pick.contains(i)) {
            let mb = cycle_membership(&cyc, &CyclePoint::Chart(LagrangianChartPoint::from_symmetric(j.s.clone())), tol.contain_tol, tol)?;
            max_residual = max_residual.max(mb.residual);
            contained += usize::from(mb.contained);
        }
        out["cycle"] = cycle_json(&cyc);
        out["through_samples"] = json!(pick);
        out["samples_checked"] = json!(m - pick.len());
        out["samples_contained"] = json!(contained);
        out["max_membership_residual"] = json!(max_residual);
    }
    Ok(out)
}

/// Cycle through three points with membership of queries, or flatness,
/// Moebius fit and sample membership of a curve. Exit 0 on success.
pub fn cmd_cycle(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let input = one_input(cfg)?;
    let summary = match input {
        Input::Preset(_) => cycle_from_curve(&load_curve(input, cfg)?, cfg)?,
        Input::File(path) => {
            let text = read(path)?;
            let value: Value =
                serde_json::from_str(&text).map_err(|e| JacobiError::InvalidInput(format!("cycle JSON: {e}")))?;
            if value.get("points").is_some() {
                let ci: CycleInput = serde_json::from_value(value)
                    .map_err(|e| JacobiError::InvalidInput(format!("cycle JSON: {e}")))?;
                cycle_from_points(ci, &input.label(), cfg)?
            } else {
                let spec = CurveSpec::from_json(&text)?;
                cycle_from_curve(&curve_from_spec(&spec, cfg, input.label())?, cfg)?
            }
        }
    };
    Ok(Outcome { code: EXIT_OK, artifacts: vec![Artifact { name: "cycle.json", contents: pretty(&summary) }], summary })
}

pub fn cmd_presets() -> Result<Outcome, CliError> {
    let curves = PRESET_NAMES
        .iter()
        .map(|name| {
            let p = preset(name)?;
            let (lo, hi) = p.curve.domain();
            Ok(json!({ "name": p.name, "description": p.description, "n": p.curve.n(), "domain": [lo, hi], "grid": p.grid }))
        })
        .collect::<Result<Vec<_>, JacobiError>>()?;
    let summary = json!({ "curves": curves, "prescriptions": PRESCRIPTION_PRESETS });
    Ok(Outcome { code: EXIT_OK, artifacts: Vec::new(), summary })
}

pub fn execute(cfg: &RunConfig) -> Result<Outcome, CliError> {
    match cfg.command {
        CommandKind::Analyze => cmd_analyze(cfg),
        CommandKind::Compare => cmd_compare(cfg),
        CommandKind::Reconstruct => cmd_reconstruct(cfg),
        CommandKind::Cycle => cmd_cycle(cfg),
        CommandKind::Presets => cmd_presets(),
    }
}

pub fn write_artifacts(dir: &Path, artifacts: &[Artifact]) -> Result<(), CliError> {
    let io = |path: &Path| {
        let path = path.to_path_buf();
        move |source| CliError::Io { path, source }
    };
    std::fs::create_dir_all(dir).map_err(io(dir))?;
    for a in artifacts {
        let path = dir.join(a.name);
        std::fs::write(&path, &a.contents).map_err(io(&path))?;
    }
    Ok(())
}

/// Executes `cfg`, writes artifacts, prints the summary (stdout) or the error
/// JSON (stderr), and returns the exit code.
pub fn run(cfg: &RunConfig) -> i32 {
    let result = execute(cfg).and_then(|o| {
        if let Some(dir) = &cfg.out {
            write_artifacts(dir, &o.artifacts)?;
        }
        Ok(o)
    });
    match result {
        Ok(o) => {
            // a closed stdout (e.g. piped into `head`) is not an error of the run
            let text = serde_json::to_string_pretty(&o.summary).expect("summary serializes");
            let _ = writeln!(std::io::stdout().lock(), "{text}");
            o.code
        }
        Err(e) => {
            eprintln!("{}", e.to_json());
            EXIT_ERROR
        }
    }
}
