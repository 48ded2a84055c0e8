//! Command-line front end. Every run prints a JSON report that echoes the
//! resolved configuration; sweeps and decay scans can also emit CSV.

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::{json, Value};

use latticesim::field::{build_hamiltonian_with, Boundary, DigitizedLattice, LatticeOptions, MomentumGrid};
use latticesim::lcu::{self, build_lcu_with, FtWrap, IdentityHandling, LcuMethod, LcuOptions};
use latticesim::resources::{self, EstimateInputs, Method, SweepConfig, Variant};
use latticesim::trotter::{self, TrotterMode};
use latticesim::{dense, hhkl, qsp, walk, SimError, SimResult};

#[derive(Parser, Debug)]
#[command(name = "latticesim", version, about = "Digitized lattice phi^4 time-evolution workbench")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
    /// Write the primary output here instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    format: Format,
    #[arg(long, global = true, default_value_t = 42)]
    seed: u64,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum Format {
    Json,
    Csv,
}

#[derive(Subcommand, Debug)]
enum Cmd {
    /// Hamiltonian construction.
    Ham {
        #[command(subcommand)]
        op: HamOp,
    },
    /// Product formulas.
    Pf {
        #[command(subcommand)]
        op: PfOp,
    },
    /// QSP evolution.
    Qsp {
        #[command(subcommand)]
        op: QspOp,
    },
    /// Block encodings.
    Be {
        #[command(subcommand)]
        op: BeOp,
    },
    /// Walk operators.
    Walk {
        #[command(subcommand)]
        op: WalkOp,
    },
    /// Patched local evolution.
    Hhkl {
        #[command(subcommand)]
        op: HhklOp,
    },
    /// Cost models and gate-count sweeps.
    Resources {
        #[command(subcommand)]
        op: ResOp,
    },
}

#[derive(Subcommand, Debug)]
enum HamOp {
    Build(HamBuild),
}

#[derive(Subcommand, Debug)]
enum PfOp {
    Evolve(PfEvolve),
    OrderCheck(PfOrder),
}

#[derive(Subcommand, Debug)]
enum QspOp {
    Evolve(QspEvolve),
}

#[derive(Subcommand, Debug)]
enum BeOp {
    Verify(BeVerify),
}

#[derive(Subcommand, Debug)]
enum WalkOp {
    Verify(WalkVerify),
}

#[derive(Subcommand, Debug)]
enum HhklOp {
    Plan(HhklPlanArgs),
    Check(HhklCheck),
}

#[derive(Subcommand, Debug)]
enum ResOp {
    Estimate(ResEstimate),
    Sweep(ResSweep),
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum BoundaryArg {
    Open,
    Periodic,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum GridArg {
    Cutoff,
    Conjugate,
}

impl From<GridArg> for MomentumGrid {
    fn from(g: GridArg) -> Self {
        match g {
            GridArg::Cutoff => MomentumGrid::Cutoff,
            GridArg::Conjugate => MomentumGrid::Conjugate,
        }
    }
}

#[derive(Args, Debug, Clone, Serialize)]
struct LatticeArgs {
    /// Qubits per site.
    #[arg(long, default_value_t = 2)]
    nq: usize,
    /// Lattice extent per dimension, comma separated.
    #[arg(long, value_delimiter = ',', default_value = "1")]
    sites: Vec<usize>,
    #[arg(long, default_value_t = 32.0)]
    lambda: f64,
    #[arg(long, default_value_t = 1.0)]
    m: f64,
    #[arg(long, value_enum, default_value_t = BoundaryArg::Open)]
    boundary: BoundaryArg,
    /// Momentum spacing: cutoff (pi_max = pi/d_phi) or conjugate (d_pi = 2pi/(N d_phi)).
    #[arg(long, value_enum, default_value_t = GridArg::Cutoff)]
    momentum_grid: GridArg,
}

impl LatticeArgs {
    fn build(&self) -> SimResult<DigitizedLattice> {
        let b = match self.boundary {
            BoundaryArg::Open => Boundary::Open,
            BoundaryArg::Periodic => Boundary::Periodic,
        };
        let opts = LatticeOptions {
            boundary: b,
            grid: self.momentum_grid.into(),
        };
        build_hamiltonian_with(&self.sites, self.m, self.lambda, self.nq, opts)
    }
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum MethodArg {
    Naive,
    Ft,
}

impl From<MethodArg> for LcuMethod {
    fn from(m: MethodArg) -> Self {
        match m {
            MethodArg::Naive => LcuMethod::Naive,
            MethodArg::Ft => LcuMethod::Ft,
        }
    }
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum IdentityArg {
    Drop,
    Keep,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum WrapArg {
    Bare,
    Tagged,
}

#[derive(Args, Debug, Clone, Serialize)]
struct BeArgs {
    #[arg(long, value_enum, default_value_t = MethodArg::Ft)]
    method: MethodArg,
    #[arg(long, value_enum, default_value_t = IdentityArg::Drop)]
    identity: IdentityArg,
    #[arg(long = "ft-wrap", value_enum, default_value_t = WrapArg::Bare)]
    ft_wrap: WrapArg,
}

impl BeArgs {
    fn options(&self) -> LcuOptions {
        LcuOptions {
            identity: match self.identity {
                IdentityArg::Drop => IdentityHandling::Drop,
                IdentityArg::Keep => IdentityHandling::Keep,
            },
            ft_wrap: match self.ft_wrap {
                WrapArg::Bare => FtWrap::Bare,
                WrapArg::Tagged => FtWrap::Tagged,
            },
        }
    }
}

#[derive(Args, Debug, Serialize)]
struct HamBuild {
    #[command(flatten)]
    #[serde(flatten)]
    lattice: LatticeArgs,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
enum StepRule {
    /// Smallest r whose measured error meets eps.
    Measured,
    Generic,
    SiteLocal,
    Geometric,
}

#[derive(Args, Debug, Serialize)]
struct PfEvolve {
    #[command(flatten)]
    #[serde(flatten)]
    lattice: LatticeArgs,
    #[arg(long, default_value_t = 1.0)]
    t: f64,
    #[arg(long, default_value_t = 1e-3)]
    eps: f64,
    #[arg(long, default_value_t = 2)]
    p: u32,
    /// Fixed step count; overrides --rule.
    #[arg(long)]
    r: Option<u64>,
    #[arg(long, value_enum, default_value_t = StepRule::Measured)]
    rule: StepRule,
}

#[derive(Args, Debug, Serialize)]
struct PfOrder {
    #[command(flatten)]
    #[serde(flatten)]
    lattice: LatticeArgs,
    #[arg(long, value_delimiter = ',', default_value = "1,2,4")]
    p: Vec<u32>,
    #[arg(long, value_delimiter = ',', default_value = "0.003125,0.0015625,0.00078125,0.000390625")]
    dt: Vec<f64>,
}

#[derive(Args, Debug, Serialize)]
struct QspEvolve {
    #[command(flatten)]
    #[serde(flatten)]
    lattice: LatticeArgs,
    #[command(flatten)]
    #[serde(flatten)]
    be: BeArgs,
    #[arg(long, default_value_t = 1.0)]
    t: f64,
    #[arg(long, default_value_t = 1e-6)]
    eps: f64,
    /// Apply the target polynomial densely instead of simulating the circuit.
    #[arg(long)]
    reference: bool,
    /// Run the PF+QSP hybrid with this outer order instead.
    #[arg(long)]
    hybrid_p: Option<u32>,
}

#[derive(Args, Debug, Serialize)]
struct BeVerify {
    #[command(flatten)]
    #[serde(flatten)]
    lattice: LatticeArgs,
    #[command(flatten)]
    #[serde(flatten)]
    be: BeArgs,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum WalkKind {
    Qubitized,
    General,
}

#[derive(Args, Debug, Serialize)]
struct WalkVerify {
    #[command(flatten)]
    #[serde(flatten)]
    lattice: LatticeArgs,
    #[command(flatten)]
    #[serde(flatten)]
    be: BeArgs,
    #[arg(long, default_value_t = 8)]
    kmax: usize,
    #[arg(long, value_enum, default_value_t = WalkKind::Qubitized)]
    construction: WalkKind,
}

#[derive(Args, Debug, Serialize)]
struct HhklPlanArgs {
    #[command(flatten)]
    #[serde(flatten)]
    lattice: LatticeArgs,
    #[arg(long, default_value_t = 1.0)]
    t: f64,
    #[arg(long, default_value_t = 1e-3)]
    eps: f64,
    /// Linear size to plan for; the lattice only supplies the term norm.
    #[arg(long = "L")]
    l: Option<usize>,
    #[arg(long)]
    d: Option<usize>,
    /// Rescaled time; skips the term-norm computation.
    #[arg(long)]
    t_tilde: Option<f64>,
}

#[derive(Args, Debug, Serialize)]
struct HhklCheck {
    #[arg(long, default_value_t = 1)]
    nq: usize,
    #[arg(long, default_value_t = 6)]
    sites: usize,
    #[arg(long, default_value_t = 32.0)]
    lambda: f64,
    #[arg(long, default_value_t = 1.0)]
    m: f64,
    #[arg(long, default_value_t = 0.25)]
    dt: f64,
    #[arg(long, value_delimiter = ',', default_value = "1,2,3,4")]
    widths: Vec<usize>,
}

#[derive(Args, Debug, Serialize)]
struct ResEstimate {
    #[command(flatten)]
    #[serde(flatten)]
    lattice: LatticeArgs,
    /// One of pf, qsp, pf+qsp, hhkl+pf, hhkl+qsp.
    #[arg(long, default_value = "qsp")]
    method: String,
    /// One of site_local, geometric, o1.
    #[arg(long, default_value = "site_local")]
    variant: String,
    #[arg(long, default_value_t = 1.0)]
    t: f64,
    #[arg(long, default_value_t = 1e-6)]
    eps: f64,
    #[arg(long, default_value_t = 4)]
    p: u32,
}

#[derive(Args, Debug, Serialize)]
struct ResSweep {
    /// `a:b:n` (linear) or a comma list.
    #[arg(long, default_value = "1")]
    t: String,
    /// `a:b:n` (log spaced) or a comma list.
    #[arg(long, default_value = "1e-2:1e-10:5")]
    eps: String,
    #[arg(long, default_value_t = 3)]
    nq: usize,
    #[arg(long, default_value_t = 1)]
    sites: usize,
    #[arg(long, default_value_t = 32.0)]
    lambda: f64,
    #[arg(long, default_value_t = 1.0)]
    m: f64,
    #[arg(long, default_value_t = 4)]
    p: u32,
    #[arg(long)]
    solve_phases: bool,
}

/// `a:b:n` grid, linear or geometric; otherwise a comma list.
fn parse_grid(s: &str, log: bool) -> SimResult<Vec<f64>> {
    let bad = || SimError::BadArgs(format!("cannot parse grid {s:?}"));
    let parts: Vec<&str> = s.split(':').collect();
    if parts.len() == 3 {
        let a: f64 = parts[0].trim().parse().map_err(|_| bad())?;
        let b: f64 = parts[1].trim().parse().map_err(|_| bad())?;
        let n: usize = parts[2].trim().parse().map_err(|_| bad())?;
        if n == 0 || (log && (a <= 0.0 || b <= 0.0)) {
            return Err(bad());
        }
        if n == 1 {
            return Ok(vec![a]);
        }
        let f = |i: usize| i as f64 / (n - 1) as f64;
        let mut g: Vec<f64> = (0..n)
            .map(|i| {
                if log {
                    10f64.powf(a.log10() + f(i) * (b.log10() - a.log10()))
                } else {
                    a + f(i) * (b - a)
                }
            })
            .collect();
        g[0] = a;
        g[n - 1] = b;
        return Ok(g);
    }
    s.split(',').map(|x| x.trim().parse().map_err(|_| bad())).collect()
}

/// Primary output of a command: JSON outputs plus an optional CSV table.
struct Outcome {
    config: Value,
    outputs: Value,
    csv: Option<String>,
}

fn to_value<T: Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("report types serialize")
}

fn shifted(be: &lcu::BlockEncoding, h: &dense::DenseOperator) -> dense::DenseOperator {
    let d = h.nrows();
    h - dense::DenseOperator::identity(d, d) * num_complex::Complex64::new(be.energy_shift, 0.0)
}

fn run(cmd: &Cmd) -> SimResult<(&'static str, Outcome)> {
    Ok(match cmd {
        Cmd::Ham { op: HamOp::Build(a) } => {
            let lat = a.lattice.build()?;
            let metrics = lat.compute_metrics();
            let ground = if lat.n_qubits <= 12 {
                let (vals, _) = dense::eigh(&lat.dense_hamiltonian()?)?;
                vals.first().copied()
            } else {
                None
            };
            (
                "ham build",
                Outcome {
                    config: to_value(a),
                    outputs: json!({"hamiltonian": lat.to_json(), "metrics": metrics, "ground_energy": ground}),
                    csv: None,
                },
            )
        }
        Cmd::Pf { op: PfOp::Evolve(a) } => {
            let lat = a.lattice.build()?;
            let metrics = lat.compute_metrics();
            let terms = trotter::lattice_terms(&lat)?;
            let h = lat.dense_hamiltonian()?;
            let plan = trotter::suzuki_plan(a.p, terms.len())?;
            let bounds = json!({
                "generic": trotter::trotter_number(&metrics, a.t, a.eps, a.p, TrotterMode::Generic),
                "site_local": trotter::trotter_number(&metrics, a.t, a.eps, a.p, TrotterMode::SiteLocal),
                "geometric": trotter::trotter_number(&metrics, a.t, a.eps, a.p, TrotterMode::Geometric),
            });
            let r = match (a.r, a.rule) {
                (Some(r), _) => r,
                (None, StepRule::Measured) => {
                    let exact = dense::matrix_exp_hermitian(&h, a.t)?;
                    trotter::min_steps_for_error(&terms, &exact, a.t, &plan, a.eps, 1 << 24)?.0
                }
                (None, StepRule::Generic) => trotter::trotter_number(&metrics, a.t, a.eps, a.p, TrotterMode::Generic),
                (None, StepRule::SiteLocal) => {
                    trotter::trotter_number(&metrics, a.t, a.eps, a.p, TrotterMode::SiteLocal)
                }
                (None, StepRule::Geometric) => {
                    trotter::trotter_number(&metrics, a.t, a.eps, a.p, TrotterMode::Geometric)
                }
            };
            let u = trotter::evolve_pf(&terms, a.t, &plan.clone().with_steps(r))?;
            let err = trotter::measure_error(&u, &h, a.t)?;
            let report = trotter::TrotterErrorReport {
                r,
                eps_measured: err,
                eps_requested: Some(a.eps),
            };
            (
                "pf evolve",
                Outcome {
                    config: to_value(a),
                    outputs: json!({"report": report, "upsilon": plan.upsilon(), "bound_r": bounds}),
                    csv: None,
                },
            )
        }
        Cmd::Pf { op: PfOp::OrderCheck(a) } => {
            let lat = a.lattice.build()?;
            let reps = a
                .p
                .iter()
                .map(|&p| trotter::order_check(&lat, p, &a.dt))
                .collect::<SimResult<Vec<_>>>()?;
            let mut w = csv::Writer::from_writer(Vec::new());
            for r in &reps {
                for (dt, e) in r.dts.iter().zip(&r.errors) {
                    w.serialize((r.p, dt, e)).map_err(csv_err)?;
                }
            }
            (
                "pf order-check",
                Outcome {
                    config: to_value(a),
                    outputs: json!({"orders": reps}),
                    csv: Some(csv_with_header("p,dt,error", w)?),
                },
            )
        }
        Cmd::Qsp { op: QspOp::Evolve(a) } => {
            let lat = a.lattice.build()?;
            let outputs = if let Some(p) = a.hybrid_p {
                let (_, rep) = qsp::evolve_pf_qsp(&lat, a.t, a.eps, p)?;
                json!({"hybrid": rep})
            } else {
                let be = build_lcu_with(&lat, a.be.method.into(), a.be.options())?;
                let h = lat.dense_hamiltonian()?;
                let out = qsp::evolve_encoded(&be, &h, a.t, a.eps, a.reference, true)?;
                json!({"report": out.report})
            };
            (
                "qsp evolve",
                Outcome {
                    config: to_value(a),
                    outputs,
                    csv: None,
                },
            )
        }
        Cmd::Be { op: BeOp::Verify(a) } => {
            let lat = a.lattice.build()?;
            let rep = lcu::verify(&lat, a.be.method.into(), a.be.options())?;
            // alpha under both identity conventions, for comparison with published values
            let mut alpha_by_identity = serde_json::Map::new();
            for (name, id) in [("drop", IdentityHandling::Drop), ("keep", IdentityHandling::Keep)] {
                let opts = LcuOptions {
                    identity: id,
                    ..a.be.options()
                };
                alpha_by_identity.insert(name.into(), json!(build_lcu_with(&lat, a.be.method.into(), opts)?.alpha));
            }
            (
                "be verify",
                Outcome {
                    config: to_value(a),
                    outputs: json!({
                        "alpha": rep.alpha,
                        "report": rep,
                        "alpha_by_identity": alpha_by_identity,
                    }),
                    csv: None,
                },
            )
        }
        Cmd::Walk { op: WalkOp::Verify(a) } => {
            let lat = a.lattice.build()?;
            let be = build_lcu_with(&lat, a.be.method.into(), a.be.options())?;
            let h = lat.dense_hamiltonian()?;
            let w = match a.construction {
                WalkKind::Qubitized => walk::build_walk(&be),
                WalkKind::General => walk::build_walk_general(&be),
            };
            let rep = walk::verify_walk(&w, &shifted(&be, &h), a.kmax)?;
            (
                "walk verify",
                Outcome {
                    config: to_value(a),
                    outputs: json!({"alpha": be.alpha, "energy_shift": be.energy_shift, "report": rep}),
                    csv: None,
                },
            )
        }
        Cmd::Hhkl { op: HhklOp::Plan(a) } => {
            let plan = match a.t_tilde {
                Some(tt) => hhkl::plan_raw(
                    a.l.unwrap_or(a.lattice.sites.iter().copied().max().unwrap_or(1)),
                    a.d.unwrap_or(a.lattice.sites.len()),
                    tt,
                    a.eps,
                )?,
                None => {
                    let mut metrics = a.lattice.build()?.compute_metrics();
                    if let Some(l) = a.l {
                        metrics.linear_size = l;
                    }
                    if let Some(d) = a.d {
                        metrics.d = d;
                    }
                    hhkl::plan(&metrics, a.t, a.eps)?
                }
            };
            (
                "hhkl plan",
                Outcome {
                    config: to_value(a),
                    outputs: json!({"plan": plan}),
                    csv: None,
                },
            )
        }
        Cmd::Hhkl { op: HhklOp::Check(a) } => {
            let lat = build_hamiltonian_with(&[a.sites], a.m, a.lambda, a.nq, LatticeOptions::default())?;
            let fit = hhkl::measure_decay(&lat, a.dt, &a.widths)?;
            let mut w = csv::Writer::from_writer(Vec::new());
            for p in &fit.points {
                w.serialize((p.buffer_width, p.dt, p.error)).map_err(csv_err)?;
            }
            (
                "hhkl check",
                Outcome {
                    config: to_value(a),
                    outputs: json!({"decay": fit}),
                    csv: Some(csv_with_header("width,dt,residual", w)?),
                },
            )
        }
        Cmd::Resources { op: ResOp::Estimate(a) } => {
            let metrics = a.lattice.build()?.compute_metrics();
            let est = resources::estimate(
                Method::parse(&a.method)?,
                Variant::parse(&a.variant)?,
                EstimateInputs::from_metrics(&metrics, a.t, a.eps, a.p),
            )?;
            (
                "resources estimate",
                Outcome {
                    config: to_value(a),
                    outputs: json!({"estimate": est, "metrics": metrics}),
                    csv: None,
                },
            )
        }
        Cmd::Resources { op: ResOp::Sweep(a) } => {
            let cfg = SweepConfig {
                n_q: a.nq,
                sites: a.sites,
                m: a.m,
                lambda: a.lambda,
                p: a.p,
                ts: parse_grid(&a.t, false)?,
                epss: parse_grid(&a.eps, true)?,
                solve_phases: a.solve_phases,
                ..SweepConfig::default()
            };
            let res = resources::sweep_compare(&cfg)?;
            (
                "resources sweep",
                Outcome {
                    config: to_value(a),
                    outputs: json!({"rows": res.rows, "crossovers": res.crossovers, "grid": res.config}),
                    csv: Some(res.to_csv()?),
                },
            )
        }
    })
}

fn csv_err(e: csv::Error) -> SimError {
    SimError::BadArgs(format!("csv: {e}"))
}

fn csv_with_header(header: &str, w: csv::Writer<Vec<u8>>) -> SimResult<String> {
    let body = w.into_inner().map_err(|e| SimError::BadArgs(e.to_string()))?;
    Ok(format!("{header}\n{}", String::from_utf8_lossy(&body)))
}

fn set_threads() -> SimResult<()> {
    if let Ok(v) = std::env::var("LATTICESIM_THREADS") {
        let n: usize = v
            .trim()
            .parse()
            .map_err(|_| SimError::BadArgs(format!("LATTICESIM_THREADS={v:?} is not a count")))?;
        if n > 0 {
            // a pool may already exist in-process; ignore that case
            let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
        }
    }
    Ok(())
}

fn emit(path: &Option<PathBuf>, text: &str) -> SimResult<()> {
    match path {
        Some(p) => std::fs::write(p, text).map_err(|e| SimError::BadArgs(format!("writing {}: {e}", p.display()))),
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(text.as_bytes())
                .map_err(|e| SimError::BadArgs(format!("stdout: {e}")))
        }
    }
}

fn main_inner(cli: &Cli) -> SimResult<()> {
    set_threads()?;
    let start = Instant::now();
    let (name, outcome) = run(&cli.cmd)?;
    let mut config = outcome.config;
    if let Value::Object(m) = &mut config {
        m.insert("seed".into(), json!(cli.seed));
        m.insert("format".into(), to_value(&cli.format));
        m.insert("out".into(), json!(cli.out));
        m.insert(
            "threads".into(),
            json!(std::env::var("LATTICESIM_THREADS").ok()),
        );
    }
    let report = json!({
        "command": name,
        "config": config,
        "outputs": outcome.outputs,
        "versions": {"latticesim": env!("CARGO_PKG_VERSION")},
        "timing": {"wall_seconds": start.elapsed().as_secs_f64()},
    });
    let json_text = serde_json::to_string_pretty(&report).expect("json") + "\n";
    match cli.format {
        Format::Json => emit(&cli.out, &json_text),
        Format::Csv => {
            let table = outcome
                .csv
                .ok_or_else(|| SimError::BadArgs(format!("{name} has no CSV output")))?;
            emit(&cli.out, &table)?;
            // the JSON report still goes somewhere when the table went to a file
            if cli.out.is_some() {
                emit(&None, &json_text)?;
            }
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match main_inner(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let err = json!({"error": {"code": e.code(), "message": e.to_string()}});
            eprintln!("{}", serde_json::to_string_pretty(&err).expect("json"));
            ExitCode::from(1)
        }
    }
}
