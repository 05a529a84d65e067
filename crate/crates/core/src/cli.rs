//! Command-line surface: configuration merging (TOML file + flag overrides,
//! flags win), data emission (CSV/JSONL/Markdown), and exit-code policy.
//!
//! Exit codes: 0 success, 1 validation failure, 2 configuration error,
//! 3 simulation error.

use crate::analysis::{
    closed_form_n, dephasing_fidelity, dephasing_fidelity_mc, epsilon_tilde, lambda_param,
    optimize_n_numeric, table_required_eta, DephasingParams,
};
use crate::numerics::RngStream;
use crate::oracle::run_validation_suite;
use crate::protocol::{run_protocol, LossMode, ProtocolParams};
use crate::{Encoding, Real};
use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};
use std::path::PathBuf;

/// Simulation and analysis of parallelized Bell-pair generation through a
/// coherent-light qudit, in the phase and hybrid-cat encodings.
#[derive(Debug, Parser)]
#[command(name = "catbell", version, about)]
pub struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Debug, Subcommand)]
enum Cmd {
    /// Sweep the optimized infidelity over 1−η (numeric and closed form)
    Sweep(CommonArgs),
    /// Channel transmissions required for a target fidelity, per N
    Table(CommonArgs),
    /// Sample full protocol trajectories, one JSON record per shot
    Simulate(CommonArgs),
    /// Quasistatic-dephasing fidelity, analytic and Monte Carlo
    Dephase(CommonArgs),
    /// Optimal photon number and infidelity at one (encoding, N, η)
    Optimize(CommonArgs),
    /// Run the oracle cross-validation suite
    Validate(CommonArgs),
}

#[derive(Debug, Clone, Default, Args)]
struct CommonArgs {
    /// Number of Bell pairs N
    #[arg(long)]
    n_pairs: Option<usize>,
    /// Channel transmission η ∈ (0, 1]
    #[arg(long)]
    eta: Option<Real>,
    /// Mean photon number |α|²
    #[arg(long)]
    alpha2: Option<Real>,
    /// Qudit encoding: phase, cat, or both
    #[arg(long)]
    encoding: Option<String>,
    /// Number of shots / Monte-Carlo samples
    #[arg(long)]
    shots: Option<u64>,
    /// RNG seed
    #[arg(long)]
    seed: Option<u64>,
    /// Loss model: none, single, or full
    #[arg(long)]
    loss_mode: Option<String>,
    /// Output path (stdout if omitted); .md selects Markdown for `table`
    #[arg(long)]
    out: Option<PathBuf>,
    /// TOML configuration file; flags override its values
    #[arg(long)]
    config: Option<PathBuf>,
    /// Proceed outside the Λ_{N,η} < 1 closed-form regime / overwrite output
    #[arg(long)]
    force: bool,
    /// Reduced grids and sample counts
    #[arg(long)]
    quick: bool,
}

/// Optional file-level configuration; every field can also be set by a flag,
/// and flags win.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileConfig {
    n_pairs: Option<usize>,
    eta: Option<Real>,
    alpha2: Option<Real>,
    encoding: Option<String>,
    shots: Option<u64>,
    seed: Option<u64>,
    loss_mode: Option<String>,
    orthogonal_idealization: Option<bool>,
    xx_error_prob: Option<Real>,
    disable_correction: Option<bool>,
    one_minus_eta_min: Option<Real>,
    one_minus_eta_max: Option<Real>,
    grid_points: Option<usize>,
    target_fidelity: Option<Real>,
    n_pairs_list: Option<Vec<usize>>,
    t2_star: Option<Real>,
    delta: Option<Real>,
    kappa: Option<Real>,
}

/// Fully resolved configuration after merging defaults, file, and flags.
#[derive(Debug, Clone)]
struct RunConfig {
    n_pairs: usize,
    eta: Real,
    alpha2: Real,
    encodings: Vec<Encoding>,
    shots: u64,
    seed: u64,
    loss_mode: LossMode,
    orthogonal_idealization: bool,
    xx_error_prob: Real,
    disable_correction: bool,
    one_minus_eta_min: Real,
    one_minus_eta_max: Real,
    grid_points: usize,
    target_fidelity: Real,
    n_pairs_list: Vec<usize>,
    t2_star: Real,
    delta: Real,
    kappa: Real,
    out: Option<PathBuf>,
    force: bool,
    quick: bool,
}

#[derive(Debug)]
enum CliError {
    Config(String),
    Simulation(String),
    Validation,
}

impl CliError {
    fn exit_code(&self) -> i32 {
        match self {
            CliError::Validation => 1,
            CliError::Config(_) => 2,
            CliError::Simulation(_) => 3,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "configuration error: {m}"),
            CliError::Simulation(m) => write!(f, "simulation error: {m}"),
            CliError::Validation => write!(f, "validation failed"),
        }
    }
}

fn parse_encodings(s: &str) -> Result<Vec<Encoding>, CliError> {
    match s {
        "phase" => Ok(vec![Encoding::Phase]),
        "cat" => Ok(vec![Encoding::Cat]),
        "both" => Ok(vec![Encoding::Cat, Encoding::Phase]),
        other => Err(CliError::Config(format!("unknown encoding `{other}`"))),
    }
}

fn resolve(args: &CommonArgs) -> Result<RunConfig, CliError> {
    let file: FileConfig = match &args.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
            toml::from_str(&text)
                .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?
        }
        None => FileConfig::default(),
    };
    let quick = args.quick;
    let encoding = args
        .encoding
        .clone()
        .or(file.encoding)
        .unwrap_or_else(|| "both".into());
    let loss_mode: LossMode = args
        .loss_mode
        .clone()
        .or(file.loss_mode)
        .unwrap_or_else(|| "full".into())
        .parse()
        .map_err(|e| CliError::Config(format!("{e}")))?;
    let cfg = RunConfig {
        n_pairs: args.n_pairs.or(file.n_pairs).unwrap_or(2),
        eta: args.eta.or(file.eta).unwrap_or(0.99),
        alpha2: args.alpha2.or(file.alpha2).unwrap_or(16.0),
        encodings: parse_encodings(&encoding)?,
        shots: args
            .shots
            .or(file.shots)
            .unwrap_or(if quick { 100 } else { 1000 }),
        seed: args.seed.or(file.seed).unwrap_or(0),
        loss_mode,
        orthogonal_idealization: file.orthogonal_idealization.unwrap_or(true),
        xx_error_prob: file.xx_error_prob.unwrap_or(0.0),
        disable_correction: file.disable_correction.unwrap_or(false),
        one_minus_eta_min: file.one_minus_eta_min.unwrap_or(1e-4),
        one_minus_eta_max: file.one_minus_eta_max.unwrap_or(1e-1),
        grid_points: file.grid_points.unwrap_or(if quick { 7 } else { 25 }),
        target_fidelity: file.target_fidelity.unwrap_or(0.99),
        n_pairs_list: file.n_pairs_list.unwrap_or_else(|| {
            if quick {
                vec![2]
            } else {
                vec![2, 3, 4, 5]
            }
        }),
        t2_star: file.t2_star.unwrap_or(10e-6),
        delta: file.delta.unwrap_or(2.0 * std::f64::consts::PI * 2.5e9),
        kappa: file.kappa.unwrap_or(2.0 * std::f64::consts::PI * 50e6),
        out: args.out.clone(),
        force: args.force,
        quick,
    };
    if cfg.n_pairs == 0 {
        return Err(CliError::Config("n_pairs must be at least 1".into()));
    }
    if !(cfg.eta > 0.0 && cfg.eta <= 1.0) {
        return Err(CliError::Config(format!("eta {} outside (0, 1]", cfg.eta)));
    }
    if !(cfg.alpha2 > 0.0 && cfg.alpha2.is_finite()) {
        return Err(CliError::Config(format!(
            "alpha2 {} must be positive",
            cfg.alpha2
        )));
    }
    if cfg.shots == 0 {
        return Err(CliError::Config("shots must be at least 1".into()));
    }
    Ok(cfg)
}

/// 12-significant-digit formatting used for every CSV number.
fn sig(x: Real) -> String {
    if x.is_nan() {
        "nan".into()
    } else {
        format!("{x:.11e}")
    }
}

fn emit(cfg: &RunConfig, payload: &str) -> Result<(), CliError> {
    match &cfg.out {
        None => {
            print!("{payload}");
            Ok(())
        }
        Some(path) => {
            if path.exists() && !cfg.force {
                return Err(CliError::Config(format!(
                    "{} exists; pass --force to overwrite",
                    path.display()
                )));
            }
            std::fs::write(path, payload)
                .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
        }
    }
}

const CRLF: &str = "\r\n";

fn guard_regime(cfg: &RunConfig, n_pairs: usize, eta: Real) -> Result<(), CliError> {
    let lam = lambda_param(n_pairs, eta);
    if lam >= 1.0 && !cfg.force {
        return Err(CliError::Config(format!(
            "Lambda_{{N,eta}} = {lam:.4} >= 1 at N={n_pairs}, eta={eta}; closed forms \
             are outside their regime (pass --force to emit anyway)"
        )));
    }
    Ok(())
}

fn cmd_sweep(cfg: &RunConfig) -> Result<(), CliError> {
    if cfg.grid_points == 0 {
        return Err(CliError::Config("empty sweep grid".into()));
    }
    if !(cfg.one_minus_eta_min > 0.0 && cfg.one_minus_eta_max < 1.0
        && cfg.one_minus_eta_min <= cfg.one_minus_eta_max)
    {
        return Err(CliError::Config(format!(
            "invalid sweep range [{}, {}]",
            cfg.one_minus_eta_min, cfg.one_minus_eta_max
        )));
    }
    let n_pairs = cfg.n_pairs;
    let (lo, hi) = (cfg.one_minus_eta_min.ln(), cfg.one_minus_eta_max.ln());
    let mut grid = Vec::with_capacity(cfg.grid_points);
    for i in 0..cfg.grid_points {
        let f = if cfg.grid_points == 1 {
            0.0
        } else {
            i as Real / (cfg.grid_points - 1) as Real
        };
        grid.push((lo + (hi - lo) * f).exp());
    }
    guard_regime(cfg, n_pairs, 1.0 - cfg.one_minus_eta_max)?;
    let mut out = String::new();
    out.push_str("encoding,n_pairs,one_minus_eta,n_numeric,eps_numeric,eps_tilde");
    out.push_str(CRLF);
    for &one_minus_eta in &grid {
        let eta = 1.0 - one_minus_eta;
        for &encoding in &cfg.encodings {
            let (n_opt, eps_num) = optimize_n_numeric(encoding, n_pairs, eta)
                .map_err(|e| CliError::Simulation(e.to_string()))?;
            let eps_cf =
                epsilon_tilde(encoding, lambda_param(n_pairs, eta)).unwrap_or(Real::NAN);
            out.push_str(&format!(
                "{encoding},{n_pairs},{},{},{},{}{CRLF}",
                sig(one_minus_eta),
                sig(n_opt),
                sig(eps_num),
                sig(eps_cf)
            ));
        }
    }
    emit(cfg, &out)
}

fn cmd_table(cfg: &RunConfig) -> Result<(), CliError> {
    if !(cfg.target_fidelity > 0.0 && cfg.target_fidelity < 1.0) {
        return Err(CliError::Config(format!(
            "target fidelity {} outside (0, 1)",
            cfg.target_fidelity
        )));
    }
    if cfg.n_pairs_list.is_empty() {
        return Err(CliError::Config("empty n_pairs_list".into()));
    }
    let markdown = cfg
        .out
        .as_ref()
        .and_then(|p| p.extension())
        .map(|e| e == "md")
        .unwrap_or(false);
    let mut rows = Vec::new();
    for &n_pairs in &cfg.n_pairs_list {
        let (eta_cat, eta_phase) = table_required_eta(cfg.target_fidelity, n_pairs)
            .map_err(|e| CliError::Simulation(e.to_string()))?;
        rows.push((n_pairs, eta_cat, eta_phase));
    }
    let mut out = String::new();
    if markdown {
        out.push_str(&format!(
            "| N | eta_cat (%) | eta_phase (%) |\n|---|---|---|\n"
        ));
        for (n_pairs, c, p) in rows {
            out.push_str(&format!(
                "| {n_pairs} | {:.4} | {:.4} |\n",
                100.0 * c,
                100.0 * p
            ));
        }
    } else {
        out.push_str("n_pairs,target_fidelity,eta_cat,eta_phase");
        out.push_str(CRLF);
        for (n_pairs, c, p) in rows {
            out.push_str(&format!(
                "{n_pairs},{},{},{}{CRLF}",
                sig(cfg.target_fidelity),
                sig(c),
                sig(p)
            ));
        }
    }
    emit(cfg, &out)
}

#[derive(Debug, Serialize)]
struct SimulationSummary {
    encoding: Encoding,
    n_pairs: usize,
    eta: Real,
    alpha2: Real,
    shots: u64,
    mean_fidelity: Real,
    stderr_fidelity: Real,
    herald_odd_fraction: Option<Real>,
    mean_photons_lost: Option<Real>,
}

fn cmd_simulate(cfg: &RunConfig) -> Result<(), CliError> {
    let mut out = String::new();
    for &encoding in &cfg.encodings {
        let mut params =
            ProtocolParams::new(cfg.n_pairs, cfg.alpha2, cfg.eta, encoding, cfg.seed)
                .map_err(|e| CliError::Config(e.to_string()))?;
        params.orthogonal_idealization = cfg.orthogonal_idealization;
        params.xx_error_prob = cfg.xx_error_prob;
        params.disable_correction = cfg.disable_correction;
        let records = run_protocol(&params, cfg.loss_mode, cfg.shots)
            .map_err(|e| CliError::Simulation(e.to_string()))?;
        let mut s1 = 0.0;
        let mut s2 = 0.0;
        let mut odd = 0u64;
        let mut lost = 0u64;
        for r in &records {
            s1 += r.fidelity;
            s2 += r.fidelity * r.fidelity;
            if r.parity_lambda == Some(-1) {
                odd += 1;
            }
            lost += r.photons_lost.unwrap_or(0);
            out.push_str(
                &serde_json::to_string(r).map_err(|e| CliError::Simulation(e.to_string()))?,
            );
            out.push('\n');
        }
        let n = cfg.shots as Real;
        let mean = s1 / n;
        let var = (s2 / n - mean * mean).max(0.0);
        let summary = SimulationSummary {
            encoding,
            n_pairs: cfg.n_pairs,
            eta: cfg.eta,
            alpha2: cfg.alpha2,
            shots: cfg.shots,
            mean_fidelity: mean,
            stderr_fidelity: (var / n).sqrt(),
            herald_odd_fraction: if encoding == Encoding::Cat {
                Some(odd as Real / n)
            } else {
                None
            },
            mean_photons_lost: if cfg.loss_mode == LossMode::None {
                None
            } else {
                Some(lost as Real / n)
            },
        };
        out.push_str(
            &serde_json::to_string(&summary).map_err(|e| CliError::Simulation(e.to_string()))?,
        );
        out.push('\n');
    }
    emit(cfg, &out)
}

fn cmd_dephase(cfg: &RunConfig) -> Result<(), CliError> {
    let samples = if cfg.quick {
        cfg.shots.min(5_000)
    } else {
        cfg.shots
    };
    let mut out = String::new();
    out.push_str(
        "encoding,n_pairs,alpha2,t2_star,delta,kappa,t,f_analytic,f_mc,f_mc_stderr",
    );
    out.push_str(CRLF);
    for &encoding in &cfg.encodings {
        let n_tot = match encoding {
            Encoding::Cat => 2.0 * (cfg.n_pairs as Real + 1.0),
            Encoding::Phase => 2.0 * cfg.n_pairs as Real,
        };
        let t = n_tot / cfg.kappa;
        let params =
            DephasingParams::uniform(cfg.n_pairs, cfg.alpha2, cfg.t2_star, cfg.delta, t);
        let analytic =
            dephasing_fidelity(encoding, &params).map_err(|e| CliError::Config(e.to_string()))?;
        let (mc, stderr) =
            dephasing_fidelity_mc(encoding, &params, samples, RngStream::new(cfg.seed, 1))
                .map_err(|e| CliError::Simulation(e.to_string()))?;
        out.push_str(&format!(
            "{encoding},{},{},{},{},{},{},{},{},{}{CRLF}",
            cfg.n_pairs,
            sig(cfg.alpha2),
            sig(cfg.t2_star),
            sig(cfg.delta),
            sig(cfg.kappa),
            sig(t),
            sig(analytic),
            sig(mc),
            sig(stderr)
        ));
    }
    emit(cfg, &out)
}

fn cmd_optimize(cfg: &RunConfig) -> Result<(), CliError> {
    guard_regime(cfg, cfg.n_pairs, cfg.eta)?;
    let mut out = String::new();
    out.push_str("encoding,n_pairs,eta,lambda,n_numeric,eps_numeric,n_closed_form,eps_tilde");
    out.push_str(CRLF);
    let lam = lambda_param(cfg.n_pairs, cfg.eta);
    for &encoding in &cfg.encodings {
        let (n_num, eps_num) = optimize_n_numeric(encoding, cfg.n_pairs, cfg.eta)
            .map_err(|e| CliError::Simulation(e.to_string()))?;
        let n_cf = closed_form_n(encoding, cfg.n_pairs, cfg.eta).unwrap_or(Real::NAN);
        let eps_cf = epsilon_tilde(encoding, lam).unwrap_or(Real::NAN);
        out.push_str(&format!(
            "{encoding},{},{},{},{},{},{},{}{CRLF}",
            cfg.n_pairs,
            sig(cfg.eta),
            sig(lam),
            sig(n_num),
            sig(eps_num),
            sig(n_cf),
            sig(eps_cf)
        ));
    }
    emit(cfg, &out)
}

fn cmd_validate(cfg: &RunConfig) -> Result<(), CliError> {
    let checks = run_validation_suite(cfg.quick, cfg.seed)
        .map_err(|e| CliError::Simulation(e.to_string()))?;
    let mut out = String::new();
    let mut failed = false;
    for c in &checks {
        let status = if c.passed { "PASS" } else { "FAIL" };
        failed |= !c.passed;
        out.push_str(&format!(
            "{status}  {:<28} deviation {:.3e}  tolerance {:.3e}\n",
            c.name, c.deviation, c.tolerance
        ));
    }
    out.push_str(&format!(
        "{}: {} of {} checks passed\n",
        if failed { "FAILURE" } else { "OK" },
        checks.iter().filter(|c| c.passed).count(),
        checks.len()
    ));
    emit(cfg, &out)?;
    if failed {
        return Err(CliError::Validation);
    }
    Ok(())
}

fn configure_threads() {
    if let Ok(v) = std::env::var("CATBELL_THREADS") {
        if let Ok(n) = v.parse::<usize>() {
            if n >= 1 {
                let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
            }
        }
    }
}

/// Entry point for the binary; returns the process exit code.
pub fn run() -> i32 {
    configure_threads();
    let cli = Cli::parse();
    let (args, handler): (&CommonArgs, fn(&RunConfig) -> Result<(), CliError>) =
        match &cli.command {
            Cmd::Sweep(a) => (a, cmd_sweep),
            Cmd::Table(a) => (a, cmd_table),
            Cmd::Simulate(a) => (a, cmd_simulate),
            Cmd::Dephase(a) => (a, cmd_dephase),
            Cmd::Optimize(a) => (a, cmd_optimize),
            Cmd::Validate(a) => (a, cmd_validate),
        };
    let result = resolve(args).and_then(|cfg| handler(&cfg));
    match result {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("catbell: {e}");
            e.exit_code()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn encoding_parsing() {
        assert_eq!(parse_encodings("phase").unwrap(), vec![Encoding::Phase]);
        assert_eq!(
            parse_encodings("both").unwrap(),
            vec![Encoding::Cat, Encoding::Phase]
        );
        assert!(parse_encodings("qudit").is_err());
    }

    #[test]
    fn defaults_resolve() {
        let cfg = resolve(&CommonArgs::default()).unwrap();
        assert_eq!(cfg.n_pairs, 2);
        assert_eq!(cfg.eta, 0.99);
        assert_eq!(cfg.encodings.len(), 2);
    }

    #[test]
    fn flags_override_config_file() {
        let dir = std::env::temp_dir().join(format!("catbell-test-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("config.toml");
        std::fs::write(&path, "eta = 0.9\nn_pairs = 3\nshots = 7\n").unwrap();
        let args = CommonArgs {
            eta: Some(0.95),
            config: Some(path.clone()),
            ..Default::default()
        };
        let cfg = resolve(&args).unwrap();
        assert_eq!(cfg.eta, 0.95); // flag wins
        assert_eq!(cfg.n_pairs, 3); // file value survives
        assert_eq!(cfg.shots, 7);
        std::fs::remove_file(path).ok();
    }

    #[test]
    fn bad_config_values_rejected() {
        let args = CommonArgs {
            eta: Some(1.5),
            ..Default::default()
        };
        assert!(matches!(resolve(&args), Err(CliError::Config(_))));
        let dir = std::env::temp_dir().join(format!("catbell-test-bad-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("bad.toml");
        std::fs::write(&path, "no_such_field = 1\n").unwrap();
        let args = CommonArgs {
            config: Some(path.clone()),
            ..Default::default()
        };
        assert!(matches!(resolve(&args), Err(CliError::Config(_))));
        std::fs::remove_file(path).ok();
    }

    #[test]
    fn sig_formatting_is_stable() {
        assert_eq!(sig(1.0), "1.00000000000e0");
        assert_eq!(sig(0.0123456789012345), "1.23456789012e-2");
        assert_eq!(sig(Real::NAN), "nan");
    }

    #[test]
    fn exit_codes() {
        assert_eq!(CliError::Validation.exit_code(), 1);
        assert_eq!(CliError::Config(String::new()).exit_code(), 2);
        assert_eq!(CliError::Simulation(String::new()).exit_code(), 3);
    }
}
