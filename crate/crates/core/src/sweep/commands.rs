use std::f64::consts::PI;
use std::fmt::{self, Write as _};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::config::{Axis, AxisKind, Bound, ConfigError, Preset, SweepConfig, Target};
use super::report::{plain, sig9, CsvReport};
use crate::dynamics::{default_steps, fidelity_at_times, HamiltonianSource};
use crate::error::Error;
use crate::fusion::{
    fusion_fidelity, post_gate_fidelity, registers, run_fusion, sample_branch,
    success_probability, w_success_probability, FusionBranch, GateModel, Protocol, Verdict,
};
use crate::hamiltonian::{ideal_gate_target, AtomParams};
use crate::quantum::StateVector;

/// Failure of a CLI command, carrying its process exit code.
#[derive(Debug, Clone, PartialEq)]
pub enum CliError {
    /// Unreadable config or bad arguments (exit 2).
    Config(ConfigError),
    /// Library error; the exit code depends on the kind.
    Physics(Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Physics(Error::SizeCap { .. }) => 4,
            CliError::Physics(Error::Fusion(_)) => 2,
            CliError::Physics(_) => 3,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(e) => write!(f, "config error: {e}"),
            CliError::Physics(e) => write!(f, "{e}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<ConfigError> for CliError {
    fn from(e: ConfigError) -> Self {
        CliError::Config(e)
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Physics(e)
    }
}

fn config_err<T>(msg: impl Into<String>) -> Result<T, CliError> {
    Err(CliError::Config(ConfigError(msg.into())))
}

fn states(cfg: &SweepConfig, source: HamiltonianSource) -> Result<(StateVector, StateVector), Error> {
    let basis = source.basis();
    let psi0 = StateVector::basis_state(basis.clone(), &cfg.initial.parse()?)?;
    let ideal = match &cfg.target {
        Target::Gate => ideal_gate_target(&basis, &cfg.initial)?,
        Target::Label(l) => StateVector::basis_state(basis, &l.parse()?)?,
    };
    Ok((psi0, ideal))
}

fn params_note(p: &AtomParams) -> String {
    format!(
        "omega_a={} omega_b={} delta_a={} delta_b={} delta_rr={} gamma={}",
        p.omega_a, p.omega_b, p.delta_a, p.delta_b, p.delta_rr, p.gamma
    )
}

fn common_footer(report: &mut CsvReport, cfg: &SweepConfig) {
    report.note("preset", cfg.preset.name());
    report.note("params", params_note(&cfg.params));
    report.note("units", cfg.preset.units());
    report.note("t0", plain(cfg.params.optimal_time()));
    report.note("initial", &cfg.initial);
    report.note(
        "target",
        match &cfg.target {
            Target::Gate => "gate image of initial".to_string(),
            Target::Label(l) => l.clone(),
        },
    );
}

fn axis_times(axis: &Axis, t0: f64) -> Vec<f64> {
    let v = axis.values(t0);
    match axis.kind {
        AxisKind::DeltaT => v.iter().map(|k| k * t0).collect(),
        _ => v,
    }
}

/// Fidelity against time for the full model without decay, the effective
/// model, and the full model with the configured decay rate.
pub fn cmd_evolve(cfg: &SweepConfig) -> Result<CsvReport, CliError> {
    cfg.params.validate()?;
    let t0 = cfg.params.optimal_time();
    let axis = match cfg.axes.as_slice() {
        [] => Axis {
            kind: AxisKind::Time,
            min: Bound::Value(0.0),
            max: Bound::TimesT0(1.0),
            points: 201,
        },
        [a] if a.kind.is_trace() => *a,
        _ => return config_err("evolve takes a single time or delta_t axis"),
    };
    let labels = axis.values(t0);
    let times = axis_times(&axis, t0);
    let t_max = *times.last().expect("at least two points");

    let clean = cfg.params.with_gamma(0.0);
    let (psi_full, ideal_full) = states(cfg, HamiltonianSource::Full)?;
    let steps_full = cfg
        .steps
        .unwrap_or_else(|| default_steps(HamiltonianSource::Full, &clean, t_max));
    let steps_gamma = cfg
        .steps
        .unwrap_or_else(|| default_steps(HamiltonianSource::Full, &cfg.params, t_max));
    let steps_eff = cfg
        .steps
        .unwrap_or_else(|| default_steps(HamiltonianSource::Effective, &clean, t_max));

    let run_full = || {
        fidelity_at_times(
            HamiltonianSource::Full,
            &clean,
            &psi_full,
            &ideal_full,
            &times,
            Some(steps_full),
        )
    };
    let run_gamma = || {
        fidelity_at_times(
            HamiltonianSource::Full,
            &cfg.params,
            &psi_full,
            &ideal_full,
            &times,
            Some(steps_gamma),
        )
    };
    let run_eff = || -> Result<Option<Vec<f64>>, Error> {
        if !clean.is_symmetric() {
            return Ok(None);
        }
        let (psi, ideal) = states(cfg, HamiltonianSource::Effective)?;
        fidelity_at_times(
            HamiltonianSource::Effective,
            &clean,
            &psi,
            &ideal,
            &times,
            Some(steps_eff),
        )
        .map(Some)
    };
    let (f_full, (f_gamma, f_eff)) = rayon::join(run_full, || rayon::join(run_gamma, run_eff));
    let (f_full, f_gamma, f_eff) = (f_full?, f_gamma?, f_eff?);

    let mut report = CsvReport::new([axis.kind.name(), "f_full", "f_eff", "f_full_gamma"]);
    for i in 0..times.len() {
        report.push_row(vec![
            plain(labels[i]),
            sig9(f_full[i]),
            f_eff.as_ref().map_or("nan".to_string(), |f| sig9(f[i])),
            sig9(f_gamma[i]),
        ]);
    }
    common_footer(&mut report, cfg);
    report.note(
        "steps",
        format!("f_full={steps_full} f_eff={steps_eff} f_full_gamma={steps_gamma}"),
    );
    if f_eff.is_none() {
        report.note("f_eff", "nan: effective model needs symmetric lasers");
    }
    Ok(report)
}

fn apply_axis(p: AtomParams, kind: AxisKind, v: f64) -> AtomParams {
    match kind {
        AxisKind::Gamma => p.with_gamma(v * p.omega_b),
        AxisKind::DeltaOmega => p.with_delta_omega(v),
        AxisKind::DeltaT | AxisKind::Time => p,
    }
}

/// Fidelity over a one- or two-axis grid using the full model. Time-like
/// axes are integrated in one run per value of the other axis; every other
/// grid point is evaluated at the optimal time.
pub fn cmd_sweep(cfg: &SweepConfig) -> Result<CsvReport, CliError> {
    cfg.params.validate()?;
    if cfg.axes.is_empty() {
        return config_err("sweep needs at least one axis");
    }
    if cfg.axes.iter().filter(|a| a.kind.is_trace()).count() > 1 {
        return config_err("at most one of time and delta_t may be swept");
    }
    let t0 = cfg.params.optimal_time();
    let values: Vec<Vec<f64>> = cfg.axes.iter().map(|a| a.values(t0)).collect();
    let trace = cfg.axes.iter().position(|a| a.kind.is_trace());
    let times = match trace {
        Some(i) => axis_times(&cfg.axes[i], t0),
        None => vec![t0],
    };
    let t_max = *times.last().expect("non-empty");

    // every combination of the non-time axes, in grid order
    let param_axes: Vec<usize> = (0..cfg.axes.len()).filter(|&i| Some(i) != trace).collect();
    let mut runs: Vec<Vec<usize>> = vec![vec![]];
    for &ax in &param_axes {
        runs = runs
            .into_iter()
            .flat_map(|r| {
                (0..values[ax].len()).map(move |k| {
                    let mut r = r.clone();
                    r.push(k);
                    r
                })
            })
            .collect();
    }
    let (psi0, ideal) = states(cfg, HamiltonianSource::Full)?;
    let results: Vec<Vec<f64>> = runs
        .par_iter()
        .map(|run| {
            let mut p = cfg.params;
            for (&ax, &k) in param_axes.iter().zip(run) {
                p = apply_axis(p, cfg.axes[ax].kind, values[ax][k]);
            }
            p.validate()?;
            fidelity_at_times(HamiltonianSource::Full, &p, &psi0, &ideal, &times, cfg.steps)
        })
        .collect::<Result<_, Error>>()?;

    let mut header: Vec<&str> = cfg.axes.iter().map(|a| a.kind.name()).collect();
    header.push("fidelity");
    let mut report = CsvReport::new(header);
    let dims: Vec<usize> = values.iter().map(Vec::len).collect();
    let total: usize = dims.iter().product();
    for flat in 0..total {
        // row-major index over the configured axes
        let mut idx = vec![0; dims.len()];
        let mut rem = flat;
        for d in (0..dims.len()).rev() {
            idx[d] = rem % dims[d];
            rem /= dims[d];
        }
        let run_index = param_axes
            .iter()
            .fold(0, |acc, &ax| acc * dims[ax] + idx[ax]);
        let time_index = trace.map_or(0, |t| idx[t]);
        let mut row: Vec<String> = idx
            .iter()
            .enumerate()
            .map(|(d, &k)| plain(values[d][k]))
            .collect();
        row.push(sig9(results[run_index][time_index]));
        report.push_row(row);
    }
    common_footer(&mut report, cfg);
    for a in &cfg.axes {
        report.note("axis", a);
    }
    report.note(
        "steps",
        match cfg.steps {
            Some(n) => format!("{n} per run"),
            None => format!(
                "auto ({} for the base parameters)",
                default_steps(HamiltonianSource::Full, &cfg.params, t_max)
            ),
        },
    );
    report.note("model", "full");
    if cfg.axes.iter().any(|a| a.kind == AxisKind::Gamma) {
        report.note("gamma_axis_units", "omega_b");
    }
    Ok(report)
}

/// Output of `fuse`: the branch table and its CSV form.
#[derive(Debug, Clone, PartialEq)]
pub struct FuseReport {
    pub branches: Vec<FusionBranch>,
    pub success_probability: f64,
    pub gate_fidelity: f64,
    pub post_gate_fidelity: f64,
    pub table: String,
    pub csv: CsvReport,
}

pub fn parse_protocol(s: &str) -> Result<Protocol, CliError> {
    match s.to_ascii_lowercase().as_str() {
        "ghz" => Ok(Protocol::Ghz),
        "w" => Ok(Protocol::W),
        _ => config_err(format!("unknown protocol `{s}` (expected ghz or w)")),
    }
}

/// Run GHZ or W fusion of `m`- and `n`-qubit registers with the ideal gate
/// or the gate simulated at the physical parameter set.
pub fn cmd_fuse(
    protocol: Protocol,
    m: usize,
    n: usize,
    gate: &str,
    steps: Option<usize>,
    seed: Option<u64>,
) -> Result<FuseReport, CliError> {
    let (a, b) = registers(protocol, m, n)?;
    let model = match gate {
        "ideal" => GateModel::ideal(),
        "physical" => {
            let p = AtomParams::physical();
            GateModel::Channel(Box::new(crate::fusion::PairChannel::extract(
                &p,
                p.optimal_time(),
                steps,
            )?))
        }
        _ => return config_err(format!("unknown gate `{gate}` (expected ideal or physical)")),
    };
    let branches = run_fusion(&a, &b, &model)?;
    let success = success_probability(&branches);
    let gate_fidelity = fusion_fidelity(&model, protocol, m, n)?;
    let post_gate = post_gate_fidelity(&model, &a, &b)?;

    let mut table = String::new();
    let _ = writeln!(table, "{protocol} fusion, m={m}, n={n}, gate={gate}");
    let _ = writeln!(
        table,
        "{:<8} {:<13} {:<8} {:<28} {}",
        "outcome", "probability", "verdict", "correction", "fidelity"
    );
    let mut csv = CsvReport::new(["outcome", "probability", "verdict", "correction", "fidelity", "target"]);
    for br in &branches {
        let fid = br.corrected_fidelity.map_or("-".to_string(), sig9);
        let target = match (br.verdict, br.protocol, br.relabeled_target) {
            (Verdict::Success, Protocol::Ghz, true) => "ghz_relabeled",
            (Verdict::Success, Protocol::Ghz, false) => "ghz",
            (Verdict::Success, Protocol::W, _) => "w",
            _ => "-",
        };
        let _ = writeln!(
            table,
            "{:<8} {:<13} {:<8} {:<28} {}",
            br.outcome.to_string(),
            sig9(br.probability),
            br.verdict.to_string(),
            br.describe_correction(),
            fid
        );
        csv.push_row(vec![
            br.outcome.to_string(),
            sig9(br.probability),
            br.verdict.to_string(),
            br.describe_correction(),
            fid,
            target.to_string(),
        ]);
    }
    let _ = writeln!(table, "total success probability {}", sig9(success));
    if protocol == Protocol::W {
        let exact = w_success_probability(m, n)?;
        let _ = writeln!(table, "expected (m+n-2)/(mn) = {exact}");
        csv.note("expected_success", exact);
    }
    let _ = writeln!(table, "gate fidelity (input-weighted) {}", sig9(gate_fidelity));
    let _ = writeln!(table, "post-gate state fidelity {}", sig9(post_gate));
    if let Some(seed) = seed {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        if let Some(br) = sample_branch(&branches, &mut rng) {
            let _ = writeln!(table, "sampled outcome (seed {seed}): {}", br.outcome);
        }
    }
    csv.note("protocol", protocol);
    csv.note("m", m);
    csv.note("n", n);
    csv.note("gate", gate);
    if let GateModel::Channel(ch) = &model {
        csv.note("params", params_note(&ch.params));
        csv.note("steps", ch.steps);
    }
    csv.note("success_probability", sig9(success));
    csv.note("gate_fidelity", sig9(gate_fidelity));
    csv.note("post_gate_fidelity", sig9(post_gate));
    Ok(FuseReport {
        branches,
        success_probability: success,
        gate_fidelity,
        post_gate_fidelity: post_gate,
        table,
        csv,
    })
}

/// Human-readable parameter record for a preset.
pub fn cmd_params(preset: &str) -> Result<String, CliError> {
    let preset: Preset = preset.parse()?;
    let p = preset.params();
    let t0 = p.optimal_time();
    let (f, t) = match preset {
        Preset::Fig2 => ("", ""),
        Preset::Physical => (" MHz", " us"),
    };
    let mut s = String::new();
    let _ = writeln!(s, "preset    {}", preset.name());
    let _ = writeln!(s, "units     {}", preset.units());
    let _ = writeln!(s, "omega_a   {}{f}", p.omega_a);
    let _ = writeln!(s, "omega_b   {}{f}", p.omega_b);
    let _ = writeln!(s, "delta_a   {}{f}", p.delta_a);
    let _ = writeln!(s, "delta_b   {}{f}", p.delta_b);
    let _ = writeln!(s, "delta_rr  {}{f}", p.delta_rr);
    let _ = writeln!(s, "gamma     {}{f}", p.gamma);
    let _ = writeln!(
        s,
        "antiblockade delta_a + delta_b = delta_rr: {}",
        if p.antiblockade_satisfied() { "yes" } else { "no" }
    );
    let _ = writeln!(s, "t0        {}{t} ({}*pi)", sig9(t0), plain(round9(t0 / PI)));
    Ok(s)
}

fn round9(x: f64) -> f64 {
    (x * 1e9).round() / 1e9
}
