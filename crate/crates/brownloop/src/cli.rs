use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use brownloop_core::carnot::CarnotGroup;
use brownloop_core::holonomy::{
    delta_apply, estimate_holonomy, fit_power_law, loop_moment_matrix, DeltaCoefficients, HolonomyConfig, SlopeFit,
    SlopePoint, ROUNDING_FLOOR,
};
use brownloop_core::loops::map_loops;
use brownloop_core::observable::Observable;
use brownloop_core::sde::{integrate_flow_with, FlowOptions, VectorFieldSpec};
use brownloop_core::tensoralg::{log_series, log_signature, path_signature};
use brownloop_core::{FreeLieAlgebra, PiecewiseLinearPath};
use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use serde_json::json;

use crate::config::{HolonomySection, LoadedConfig, SamplerSection};
use crate::error::{CliError, CliResult};
use crate::exec::{default_workers, RayonExec};
use crate::expr::{format_vector_fields, parse_observable, parse_vector_fields};
use crate::pathfile::{format_paths, parse_paths};
use crate::verify::{render_report, run_suite, Size, CRITERIA};

#[derive(Debug, Parser)]
#[command(name = "brownloop", version, about = "N-step Brownian loops, signatures and holonomy operators")]
pub struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// List the Lyndon basis of the free step-N Lie algebra on d letters.
    Basis(BasisArgs),
    /// Signature or log-signature of a piecewise-linear path.
    Signature(SignatureArgs),
    /// Lift a path to the free Carnot group, knot by knot.
    Lift(LiftArgs),
    /// Draw N-step Brownian loops into a record file.
    Sample(SampleArgs),
    /// Integrate the flow driven by a path.
    Flow(FlowArgs),
    /// Monte Carlo estimates of H_T f(x0) along a grid of horizons.
    Holonomy(HolonomyArgs),
    /// Evaluate Delta_N f(x0).
    Delta(DeltaArgs),
    /// Second-moment matrix of the level N+1 loop coordinates.
    Moments(MomentsArgs),
    /// Run the acceptance suite.
    Verify(VerifyArgs),
}

#[derive(Debug, Args)]
struct BasisArgs {
    #[arg(long)]
    d: usize,
    #[arg(long)]
    step: usize,
    #[arg(long)]
    json: bool,
}

#[derive(Debug, Args)]
struct SignatureArgs {
    #[arg(long)]
    path: PathBuf,
    #[arg(long)]
    level: usize,
    /// Print the tensor logarithm instead of the signature.
    #[arg(long)]
    logsig: bool,
    /// Print Lyndon coordinates of the log-signature.
    #[arg(long)]
    lyndon: bool,
}

#[derive(Debug, Args)]
struct LiftArgs {
    #[arg(long)]
    path: PathBuf,
    #[arg(long)]
    step: usize,
    #[arg(long)]
    json: bool,
}

/// Options shared by the config-driven commands. Flags win over the file.
#[derive(Debug, Args, Default)]
struct CommonArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    workers: Option<usize>,
    #[arg(long)]
    out_dir: Option<String>,
}

#[derive(Debug, Args, Default)]
struct SamplerArgs {
    /// bridge, reject or mcmc
    #[arg(long)]
    sampler: Option<String>,
    #[arg(long)]
    m: Option<usize>,
    #[arg(long)]
    eps: Option<f64>,
    #[arg(long)]
    max_proposals: Option<u64>,
    #[arg(long)]
    chains: Option<usize>,
    #[arg(long)]
    thinning: Option<usize>,
    #[arg(long)]
    burn_in: Option<usize>,
}

#[derive(Debug, Args, Default)]
struct ProblemArgs {
    /// Vector-field file, or `heisenberg`.
    #[arg(long)]
    vf: Option<String>,
    /// Observable expression, e.g. `cos(x3)`.
    #[arg(long)]
    f: Option<String>,
    /// Comma-separated start point.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    x0: Option<Vec<f64>>,
    #[arg(long)]
    step: Option<usize>,
}

#[derive(Debug, Args)]
struct SampleArgs {
    #[arg(long)]
    d: usize,
    #[arg(long)]
    step: usize,
    #[arg(long = "T", default_value_t = 1.0)]
    horizon: f64,
    #[arg(long)]
    count: usize,
    #[arg(long)]
    out: PathBuf,
    #[command(flatten)]
    sampler: SamplerArgs,
    #[command(flatten)]
    common: CommonArgs,
}

#[derive(Debug, Args)]
struct FlowArgs {
    #[arg(long)]
    vf: String,
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    x0: Vec<f64>,
    #[arg(long)]
    path: PathBuf,
    #[arg(long, default_value_t = 1)]
    substeps: usize,
    /// Print the state at every knot.
    #[arg(long)]
    trajectory: bool,
    /// Report a step-doubling error estimate.
    #[arg(long)]
    error_estimate: bool,
}

#[derive(Debug, Args)]
struct HolonomyArgs {
    #[command(flatten)]
    common: CommonArgs,
    #[command(flatten)]
    problem: ProblemArgs,
    #[command(flatten)]
    sampler: SamplerArgs,
    /// Comma-separated horizons.
    #[arg(long, value_delimiter = ',')]
    grid: Option<Vec<f64>>,
    #[arg(long)]
    samples: Option<usize>,
    #[arg(long)]
    substeps: Option<usize>,
    #[arg(long)]
    antithetic: Option<bool>,
    /// Print the JSON report instead of the CSV.
    #[arg(long)]
    json: bool,
}

#[derive(Debug, Args)]
struct DeltaArgs {
    #[command(flatten)]
    common: CommonArgs,
    #[command(flatten)]
    problem: ProblemArgs,
    #[command(flatten)]
    sampler: SamplerArgs,
    /// exact or moments
    #[arg(long)]
    coefficients: Option<String>,
    #[arg(long)]
    samples: Option<usize>,
}

#[derive(Debug, Args)]
struct MomentsArgs {
    #[command(flatten)]
    common: CommonArgs,
    #[command(flatten)]
    sampler: SamplerArgs,
    #[arg(long)]
    d: Option<usize>,
    #[arg(long)]
    step: Option<usize>,
    #[arg(long)]
    samples: Option<usize>,
}

#[derive(Debug, Args)]
struct VerifyArgs {
    #[command(flatten)]
    common: CommonArgs,
    #[arg(long)]
    quick: bool,
    /// Comma-separated criterion numbers; all by default.
    #[arg(long, value_delimiter = ',')]
    criteria: Option<Vec<usize>>,
}

/// Parses `args` (program name first), runs the command and returns the
/// exit code. Output goes to `out`; the error line goes to `err`.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = e.exit_code();
            let text = e.render().to_string();
            if code == 0 {
                let _ = out.write_all(text.as_bytes());
            } else {
                let first = text.lines().next().unwrap_or("").trim_start_matches("error: ");
                let _ = writeln!(err, "{}", CliError::usage(first));
            }
            return code;
        }
    };
    match dispatch(cli.command, out) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(err, "{e}");
            1
        }
    }
}

fn dispatch(cmd: Command, out: &mut dyn Write) -> CliResult<()> {
    match cmd {
        Command::Basis(a) => basis(a, out),
        Command::Signature(a) => signature(a, out),
        Command::Lift(a) => lift(a, out),
        Command::Sample(a) => sample(a, out),
        Command::Flow(a) => flow(a, out),
        Command::Holonomy(a) => holonomy(a, out),
        Command::Delta(a) => delta(a, out),
        Command::Moments(a) => moments(a, out),
        Command::Verify(a) => verify(a, out),
    }
}

fn emit(out: &mut dyn Write, s: &str) -> CliResult<()> {
    out.write_all(s.as_bytes()).map_err(|e| CliError::io("<stdout>", e))
}

fn read(path: &Path) -> CliResult<String> {
    std::fs::read_to_string(path).map_err(|e| CliError::io(path.display(), e))
}

fn write_file(path: &Path, text: &str) -> CliResult<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir.display(), e))?;
    }
    std::fs::write(path, text).map_err(|e| CliError::io(path.display(), e))
}

fn to_json<T: Serialize>(v: &T) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("reports serialize");
    s.push('\n');
    s
}

fn read_paths(path: &Path) -> CliResult<Vec<PiecewiseLinearPath>> {
    parse_paths(&read(path)?, &path.display().to_string())
}

fn basis(a: BasisArgs, out: &mut dyn Write) -> CliResult<()> {
    let alg = FreeLieAlgebra::new(a.d, a.step)?;
    let b = alg.basis();
    let levels: Vec<usize> = (1..=a.step).map(|k| alg.level_range(k).len()).collect();
    if a.json {
        let elems: Vec<_> = b
            .iter()
            .map(|e| json!({"word": e.word.to_string(), "level": e.level, "bracket": e.bracket_string(b)}))
            .collect();
        let v = json!({"d": a.d, "step": a.step, "dimension": alg.dimension(), "levels": levels, "basis": elems});
        return emit(out, &to_json(&v));
    }
    let mut s = format!("# d={} step={} dimension={}\n", a.d, a.step, alg.dimension());
    for (k, n) in levels.iter().enumerate() {
        s.push_str(&format!("# level {}: {}\n", k + 1, n));
    }
    for e in b {
        s.push_str(&format!("{} {} {}\n", e.word, e.level, e.bracket_string(b)));
    }
    emit(out, &s)
}

fn signature(a: SignatureArgs, out: &mut dyn Write) -> CliResult<()> {
    if a.level == 0 {
        return Err(CliError::usage("--level must be at least 1"));
    }
    let paths = read_paths(&a.path)?;
    let mut s = String::new();
    for (n, p) in paths.iter().enumerate() {
        if paths.len() > 1 {
            s.push_str(&format!("# path {n}\n"));
        }
        if a.lyndon {
            let alg = FreeLieAlgebra::new(p.dim(), a.level)?;
            let ls = log_signature(&alg, p)?;
            for (e, c) in alg.basis().iter().zip(ls.coeffs()) {
                s.push_str(&format!("{} {}\n", e.word, c));
            }
            continue;
        }
        let sig = path_signature(p, a.level);
        let t = if a.logsig { log_series(&sig)? } else { sig };
        s.push_str(&format!("() {}\n", t.scalar_part()));
        for k in 1..=a.level {
            for (i, c) in t.level(k).iter().enumerate() {
                s.push_str(&format!("{} {}\n", brownloop_core::freelie::word_from_index(i, k, p.dim()), c));
            }
        }
    }
    emit(out, &s)
}

fn lift(a: LiftArgs, out: &mut dyn Write) -> CliResult<()> {
    let paths = read_paths(&a.path)?;
    let p = &paths[0];
    let group = CarnotGroup::new(p.dim(), a.step)?;
    let pts = group.lift_path(p)?;
    let words: Vec<String> = group.algebra().basis().iter().map(|e| e.word.to_string()).collect();
    if a.json {
        let knots: Vec<_> = p.times().iter().zip(&pts).map(|(t, g)| json!({"t": t, "coords": g.coeffs()})).collect();
        return emit(out, &to_json(&json!({"d": p.dim(), "step": a.step, "words": words, "knots": knots})));
    }
    let mut s = format!("t {}\n", words.join(" "));
    for (t, g) in p.times().iter().zip(&pts) {
        let cs: Vec<String> = g.coeffs().iter().map(|c| c.to_string()).collect();
        s.push_str(&format!("{} {}\n", t, cs.join(" ")));
    }
    emit(out, &s)
}

/// Config file plus flag overrides.
fn load_config(common: &CommonArgs) -> CliResult<LoadedConfig> {
    let mut c = match &common.config {
        Some(p) => LoadedConfig::load(p)?,
        None => LoadedConfig::default(),
    };
    let cfg = &mut c.config;
    if common.seed.is_some() {
        cfg.seed = common.seed;
    }
    if common.workers.is_some() {
        cfg.workers = common.workers;
    }
    if common.out_dir.is_some() {
        cfg.out_dir = common.out_dir.clone();
    }
    Ok(c)
}

fn apply_sampler_flags(c: &mut LoadedConfig, a: &SamplerArgs) {
    let s = &mut c.config.sampler;
    macro_rules! set {
        ($dst:expr, $src:expr) => {
            if let Some(v) = $src.clone() {
                $dst = Some(v);
            }
        };
    }
    set!(s.kind, a.sampler);
    set!(s.m, a.m);
    set!(s.eps, a.eps);
    set!(s.max_proposals, a.max_proposals);
    set!(s.mcmc.chains, a.chains);
    set!(s.mcmc.thinning, a.thinning);
    set!(s.mcmc.burn_in, a.burn_in);
}

fn apply_problem_flags(c: &mut LoadedConfig, a: &ProblemArgs) {
    let p = &mut c.config.problem;
    if a.vf.is_some() {
        p.vf = a.vf.clone();
    }
    if a.f.is_some() {
        p.f = a.f.clone();
    }
    if a.x0.is_some() {
        p.x0 = a.x0.clone();
    }
    if a.step.is_some() {
        p.step = a.step;
    }
}

fn require_seed(c: &LoadedConfig) -> CliResult<u64> {
    c.config.seed.ok_or_else(|| CliError::usage("--seed (or `seed` in the config) is required for stochastic commands"))
}

fn executor(c: &LoadedConfig) -> CliResult<RayonExec> {
    RayonExec::new(c.config.workers.unwrap_or_else(default_workers))
}

/// The problem every config-driven command shares, resolved and echoable.
#[derive(Debug, Clone, Serialize)]
struct ProblemEcho {
    vf: String,
    fields: Vec<String>,
    f: String,
    x0: Vec<f64>,
    step: usize,
}

struct Problem {
    spec: VectorFieldSpec,
    f: Observable,
    echo: ProblemEcho,
}

fn load_vf(c: &LoadedConfig, name: &str) -> CliResult<VectorFieldSpec> {
    if name == "heisenberg" {
        return Ok(VectorFieldSpec::heisenberg());
    }
    let path = c.resolve_path(name);
    parse_vector_fields(&read(&path)?, &path.display().to_string())
}

fn resolve_problem(c: &LoadedConfig) -> CliResult<Problem> {
    let p = &c.config.problem;
    let vf = p.vf.clone().ok_or_else(|| c.error("problem.vf", "missing vector fields (--vf)"))?;
    let spec = load_vf(c, &vf)?;
    let n = spec.state_dim();
    let ftext = p.f.clone().ok_or_else(|| c.error("problem.f", "missing observable (--f)"))?;
    let f = parse_observable(&ftext, n).map_err(|m| c.error("problem.f", m))?;
    let x0 = p.x0.clone().unwrap_or_else(|| vec![0.0; n]);
    if x0.len() != n {
        return Err(c.error("problem.x0", format!("start point has {} entries, fields live on R^{n}", x0.len())));
    }
    let step = p.step.unwrap_or(1);
    if step == 0 {
        return Err(c.error("problem.step", "step N must be at least 1"));
    }
    let fields = format_vector_fields(&spec).lines().skip(1).map(str::to_string).collect();
    Ok(Problem { echo: ProblemEcho { vf, fields, f: f.to_string(), x0, step }, spec, f })
}

fn out_path(c: &LoadedConfig, name: &str) -> Option<PathBuf> {
    c.config.out_dir.as_ref().map(|d| Path::new(d).join(name))
}

fn sample(a: SampleArgs, out: &mut dyn Write) -> CliResult<()> {
    let mut c = load_config(&a.common)?;
    apply_sampler_flags(&mut c, &a.sampler);
    let seed = require_seed(&c)?;
    let (kind, sc) = c.config.sampler.resolve(a.step, seed, &c)?;
    let exec = executor(&c)?;
    let batch = map_loops(kind, a.d, a.step, a.horizon, &sc, a.count, &exec, |s| Ok((s.path.clone(), s.residual)))?;
    let paths: Vec<&PiecewiseLinearPath> = batch.values.iter().map(|v| &v.0).collect();
    write_file(&a.out, &format_paths(paths))?;
    let residuals: Vec<f64> = batch.values.iter().map(|v| v.1).collect();
    let max = residuals.iter().fold(0.0f64, |m, &r| m.max(r));
    let mean = brownloop_core::stats::pairwise_sum(&residuals) / residuals.len().max(1) as f64;
    let report = json!({
        "command": "sample",
        "version": env!("CARGO_PKG_VERSION"),
        "config": {
            "seed": seed, "d": a.d, "step": a.step, "T": a.horizon, "count": a.count,
            "sampler": SamplerSection::echo(kind, &sc),
        },
        "samples": a.count,
        "proposals": batch.proposals,
        "acceptance_rate": batch.acceptance_rate,
        "residual": {"max": max, "mean": mean, "eps": sc.eps},
    });
    let mut side = a.out.clone().into_os_string();
    side.push(".json");
    write_file(Path::new(&side), &to_json(&report))?;
    emit(
        out,
        &format!(
            "wrote {} loops to {} (acceptance {}, max residual {})\n",
            a.count,
            a.out.display(),
            batch.acceptance_rate,
            max
        ),
    )
}

fn flow(a: FlowArgs, out: &mut dyn Write) -> CliResult<()> {
    let c = LoadedConfig::default();
    let spec = load_vf(&c, &a.vf)?;
    let fields = spec.compile();
    let opts = FlowOptions { substeps: a.substeps, record_trajectory: a.trajectory, estimate_error: a.error_estimate };
    let mut s = String::new();
    let paths = read_paths(&a.path)?;
    for (n, p) in paths.iter().enumerate() {
        let r = integrate_flow_with(&fields, &a.x0, p, &opts)?;
        if paths.len() > 1 {
            s.push_str(&format!("# path {n}\n"));
        }
        if let Some(traj) = &r.trajectory {
            for (t, x) in p.times().iter().zip(traj) {
                s.push_str(&format!("{t} {}\n", join(x)));
            }
        } else {
            s.push_str(&format!("{}\n", join(&r.terminal)));
        }
        if let Some(e) = r.max_step_error {
            s.push_str(&format!("# max step error estimate {e:e}\n"));
        }
    }
    emit(out, &s)
}

fn join(xs: &[f64]) -> String {
    xs.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(" ")
}

fn fit_json(fit: &SlopeFit, ratio: f64) -> serde_json::Value {
    json!({
        "method": "weighted least squares of log|H_T f(x0) - f(x0)| on log T, weights from per-point stderr",
        "grid_ratio": ratio,
        "exponent": fit.exponent,
        "exponent_stderr": fit.exponent_stderr,
        "constant": fit.constant,
        "constant_stderr": fit.constant_stderr,
        "covariance_logc_p": fit.covariance,
        "inconclusive": fit.inconclusive,
        "used": fit.points.iter().map(|p| p.used).collect::<Vec<_>>(),
    })
}

fn holonomy(a: HolonomyArgs, out: &mut dyn Write) -> CliResult<()> {
    let mut c = load_config(&a.common)?;
    apply_problem_flags(&mut c, &a.problem);
    apply_sampler_flags(&mut c, &a.sampler);
    let h = &mut c.config.holonomy;
    if a.grid.is_some() {
        h.grid = a.grid.clone();
    }
    h.samples = a.samples.or(h.samples);
    h.substeps = a.substeps.or(h.substeps);
    h.antithetic = a.antithetic.or(h.antithetic);
    let seed = require_seed(&c)?;
    let prob = resolve_problem(&c)?;
    let (kind, sc) = c.config.sampler.resolve(prob.echo.step, seed, &c)?;
    let hs = c.config.holonomy.clone();
    let grid = hs.grid.clone().ok_or_else(|| c.error("holonomy.grid", "missing horizon grid (--grid)"))?;
    if grid.is_empty() || grid.iter().any(|t| !(*t > 0.0 && t.is_finite())) {
        return Err(c.error("holonomy.grid", "horizons must be positive"));
    }
    let samples = hs.samples.unwrap_or(10_000);
    if samples < 2 {
        return Err(c.error("holonomy.samples", "need at least 2 samples"));
    }
    let substeps = hs.substeps.unwrap_or(1);
    if substeps == 0 {
        return Err(c.error("holonomy.substeps", "substeps must be at least 1"));
    }
    let exec = executor(&c)?;
    let mut cfg = HolonomyConfig::new(prob.echo.step, grid[0], samples, sc.clone());
    cfg.sampler = kind;
    cfg.substeps = substeps;
    cfg.antithetic = hs.antithetic.unwrap_or(true);

    let f0 = prob.f.eval(&prob.echo.x0);
    let mut points = Vec::new();
    let mut extra = Vec::new();
    for (k, &t) in grid.iter().enumerate() {
        let mut ck = cfg.clone();
        ck.horizon = t;
        ck.loops.seed = seed.wrapping_add(k as u64);
        let e = estimate_holonomy(&prob.spec, &prob.f, &prob.echo.x0, &ck, &exec)?;
        extra.push((e.acceptance_rate, e.max_residual));
        points.push(SlopePoint {
            horizon: t,
            estimate: e.value,
            stderr: e.stderr,
            difference: e.value - f0,
            samples: e.samples,
            used: false,
        });
    }
    let ratio = if grid.len() > 1 { grid[1] / grid[0] } else { f64::NAN };
    let geometric =
        grid.len() >= 3 && ratio > 1.0 && grid.windows(2).all(|w| ((w[1] / w[0]) / ratio - 1.0).abs() < 1e-9);
    let fit = geometric.then(|| fit_power_law(points.clone(), ROUNDING_FLOOR * (1.0 + f0.abs())));

    let mut csv = String::from("T,estimate,stderr,M\n");
    for p in &points {
        csv.push_str(&format!("{},{},{},{}\n", p.horizon, p.estimate, p.stderr, p.samples));
    }
    let reference = delta_apply(&prob.spec, &prob.f, &prob.echo.x0, prob.echo.step, DeltaCoefficients::Exact).ok();
    let report = json!({
        "command": "holonomy",
        "version": env!("CARGO_PKG_VERSION"),
        "config": {
            "seed": seed,
            "problem": prob.echo,
            "sampler": SamplerSection::echo(kind, &sc),
            "holonomy": HolonomySection {
                grid: Some(grid.clone()),
                samples: Some(samples),
                substeps: Some(substeps),
                antithetic: Some(cfg.antithetic),
            },
        },
        "f_x0": f0,
        "points": points.iter().zip(&extra).map(|(p, (acc, res))| json!({
            "T": p.horizon, "estimate": p.estimate, "stderr": p.stderr, "M": p.samples,
            "difference": p.difference, "acceptance_rate": acc, "max_residual": res,
        })).collect::<Vec<_>>(),
        "fit": fit.as_ref().map(|f| fit_json(f, ratio)),
        "delta_exact": reference.map(|d| d.value),
    });
    let json_text = to_json(&report);
    if let Some(p) = out_path(&c, "holonomy.csv") {
        write_file(&p, &csv)?;
        write_file(&p.with_file_name("holonomy.json"), &json_text)?;
    }
    emit(out, if a.json { &json_text } else { &csv })
}

fn delta(a: DeltaArgs, out: &mut dyn Write) -> CliResult<()> {
    let mut c = load_config(&a.common)?;
    apply_problem_flags(&mut c, &a.problem);
    apply_sampler_flags(&mut c, &a.sampler);
    if a.coefficients.is_some() {
        c.config.delta.coefficients = a.coefficients.clone();
    }
    c.config.delta.samples = a.samples.or(c.config.delta.samples);
    let prob = resolve_problem(&c)?;
    let step = prob.echo.step;
    let mode = c.config.delta.coefficients.clone().unwrap_or_else(|| if step <= 1 { "exact" } else { "moments" }.into());
    let (value, mut report) = match mode.as_str() {
        "exact" => {
            let v = delta_apply(&prob.spec, &prob.f, &prob.echo.x0, step, DeltaCoefficients::Exact)?;
            (v, json!({"config": {"problem": prob.echo, "delta": {"coefficients": "exact"}}}))
        }
        "moments" => {
            let seed = require_seed(&c)?;
            let (kind, sc) = c.config.sampler.resolve(step, seed, &c)?;
            let samples = c.config.delta.samples.unwrap_or(10_000);
            let exec = executor(&c)?;
            let mm = loop_moment_matrix(prob.spec.num_fields(), step, samples, kind, &sc, &exec)?;
            let v = delta_apply(&prob.spec, &prob.f, &prob.echo.x0, step, DeltaCoefficients::Moments(&mm))?;
            let cfg = json!({
                "seed": seed,
                "problem": prob.echo,
                "sampler": SamplerSection::echo(kind, &sc),
                "delta": {"coefficients": "moments", "samples": samples},
            });
            (v, json!({"config": cfg}))
        }
        other => return Err(c.error("delta.coefficients", format!("unknown mode `{other}`; use exact or moments"))),
    };
    report["command"] = json!("delta");
    report["version"] = json!(env!("CARGO_PKG_VERSION"));
    report["value"] = json!(value.value);
    report["stderr"] = json!(value.stderr);
    if let Some(p) = out_path(&c, "delta.json") {
        write_file(&p, &to_json(&report))?;
    }
    emit(out, &format!("{} {}\n", value.value, value.stderr))
}

fn moments(a: MomentsArgs, out: &mut dyn Write) -> CliResult<()> {
    let mut c = load_config(&a.common)?;
    apply_sampler_flags(&mut c, &a.sampler);
    let m = &mut c.config.moments;
    m.d = a.d.or(m.d);
    m.samples = a.samples.or(m.samples);
    if a.step.is_some() {
        c.config.problem.step = a.step;
    }
    let seed = require_seed(&c)?;
    let d = c.config.moments.d.ok_or_else(|| c.error("moments.d", "missing alphabet size (--d)"))?;
    let step = c.config.problem.step.unwrap_or(1);
    let samples = c.config.moments.samples.unwrap_or(10_000);
    let (kind, sc) = c.config.sampler.resolve(step, seed, &c)?;
    let exec = executor(&c)?;
    let mm = loop_moment_matrix(d, step, samples, kind, &sc, &exec)?;
    let k = mm.size();
    let words: Vec<String> = mm.words.iter().map(|w| w.to_string()).collect();
    let rows = |v: &[f64]| (0..k).map(|i| v[i * k..(i + 1) * k].to_vec()).collect::<Vec<_>>();
    let report = json!({
        "command": "moments",
        "version": env!("CARGO_PKG_VERSION"),
        "config": {
            "seed": seed,
            "moments": {"d": d, "step": step, "samples": samples},
            "sampler": SamplerSection::echo(kind, &sc),
        },
        "words": words,
        "entries": rows(&mm.entries),
        "stderr": rows(&mm.stderr),
        "first_moments": mm.first_moments.iter().map(|f| json!({"mean": f.mean, "stderr": f.stderr})).collect::<Vec<_>>(),
        "min_eigenvalue": mm.min_eigenvalue(),
        "psd_within_3_stderr": mm.is_psd_within(3.0),
    });
    if let Some(p) = out_path(&c, "moments.json") {
        write_file(&p, &to_json(&report))?;
    }
    let mut s = format!("words {}\n", words.join(" "));
    for i in 0..k {
        let row: Vec<String> = (0..k).map(|j| format!("{}+-{}", mm.entry(i, j), mm.entry_stderr(i, j))).collect();
        s.push_str(&format!("{} {}\n", words[i], row.join(" ")));
    }
    emit(out, &s)
}

fn verify(a: VerifyArgs, out: &mut dyn Write) -> CliResult<()> {
    let c = load_config(&a.common)?;
    let seed = require_seed(&c)?;
    let exec = executor(&c)?;
    let ids: Vec<usize> = a.criteria.clone().unwrap_or_else(|| CRITERIA.iter().map(|c| c.0).collect());
    if let Some(bad) = ids.iter().find(|&&i| !CRITERIA.iter().any(|c| c.0 == i)) {
        return Err(CliError::usage(format!("no criterion {bad}; criteria are 1 to {}", CRITERIA.len())));
    }
    let size = if a.quick { Size::Quick } else { Size::Full };
    let checks = run_suite(&ids, size, seed, &exec);
    emit(out, &render_report(&checks, size, seed))?;
    if let Some(p) = out_path(&c, "verify.txt") {
        write_file(&p, &render_report(&checks, size, seed))?;
    }
    let failed = checks.iter().filter(|c| !c.pass).count();
    if failed > 0 {
        return Err(CliError::VerifyFailed(failed));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run_str(args: &[&str]) -> (i32, String, String) {
        let (mut o, mut e) = (Vec::new(), Vec::new());
        let code = run(std::iter::once("brownloop").chain(args.iter().copied()), &mut o, &mut e);
        (code, String::from_utf8(o).unwrap(), String::from_utf8(e).unwrap())
    }

    #[test]
    fn basis_lists_words() {
        let (code, out, _) = run_str(&["basis", "--d", "2", "--step", "4"]);
        assert_eq!(code, 0);
        let words: Vec<&str> = out.lines().filter(|l| !l.starts_with('#')).map(|l| l.split(' ').next().unwrap()).collect();
        assert_eq!(words, ["1", "2", "12", "112", "122", "1112", "1122", "1222"]);
        assert!(out.contains("[1,[1,2]]"));
    }

    #[test]
    fn seed_is_mandatory() {
        let (code, _, err) = run_str(&["moments", "--d", "2", "--samples", "100"]);
        assert_eq!(code, 1);
        assert!(err.starts_with("error kind=usage") && err.contains("--seed"), "{err}");
    }

    #[test]
    fn unknown_flag_is_usage_error() {
        let (code, _, err) = run_str(&["basis", "--d", "2", "--step", "2", "--frobnicate"]);
        assert_eq!(code, 2);
        assert_eq!(err.lines().count(), 1, "{err}");
        assert!(err.starts_with("error kind=usage") && err.contains("frobnicate"), "{err}");
        let (code, _, _) = run_str(&["nope"]);
        assert_eq!(code, 2);
    }

    #[test]
    fn delta_exact_on_heisenberg() {
        let (code, out, err) = run_str(&["delta", "--vf", "heisenberg", "--f", "cos(2*x3)", "--step", "1"]);
        assert_eq!(code, 0, "{err}");
        let v: f64 = out.split_whitespace().next().unwrap().parse().unwrap();
        assert!((v + 4.0 / 24.0).abs() < 1e-15, "{v}");
    }
}
