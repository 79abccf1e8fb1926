//! Fixed-step RK4 time evolution of pure states and density matrices.
//!
//! The master equation is integrated in the rotated frame of the full
//! Hamiltonian:
//!
//! ```text
//! dρ/dt = −i[H(t), ρ] − ½ Σ_k (L_k† L_k ρ − 2 L_k ρ L_k† + ρ L_k† L_k)
//! ```
//!
//! with `L = √(γ/2)|g⟩⟨r|` for `g ∈ {0, 1}` on each atom. The jump
//! operators are diagonal-frame invariant, so they are time independent.
//!
//! Generators are kept as sparse `(row, col, value)` lists; both integrators
//! allocate only at setup.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::hamiltonian::{
    apply_gate_map, closed_form_coeffs, effective_basis, effective_hamiltonian,
    full_hamiltonian_bound, full_hamiltonian_terms, pair_layout, AtomParams, Subspace,
};
use crate::quantum::{fidelity, Basis, DensityMatrix, Layout, Operator, StateVector, ZERO};

/// Largest `h·‖H‖` allowed by the default step count.
pub const MAX_PHASE_PER_STEP: f64 = 0.05;
/// Default resolution of the fastest rotating-frame phase.
pub const STEPS_PER_PERIOD: f64 = 200.0;

type Terms = Vec<(usize, usize, Complex64)>;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HamiltonianSource {
    /// Time-dependent nine-state Hamiltonian.
    Full,
    /// Static five-state effective Hamiltonian.
    Effective,
    /// Closed-form propagator of the effective model (no integration).
    ClosedForm,
}

impl HamiltonianSource {
    pub fn basis(self) -> Basis {
        match self {
            HamiltonianSource::Full => Basis::product(pair_layout()),
            HamiltonianSource::Effective | HamiltonianSource::ClosedForm => effective_basis(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvolutionSpec {
    pub source: HamiltonianSource,
    pub params: AtomParams,
    pub t_final: f64,
    pub steps: usize,
    /// Record every `record_every` steps (the final step is always recorded).
    pub record_every: usize,
}

impl EvolutionSpec {
    /// Default step count; records only the endpoints.
    pub fn new(source: HamiltonianSource, params: AtomParams, t_final: f64) -> Self {
        let steps = default_steps(source, &params, t_final);
        EvolutionSpec {
            source,
            params,
            t_final,
            steps,
            record_every: steps,
        }
    }

    pub fn with_steps(mut self, steps: usize) -> Self {
        self.steps = steps;
        self.record_every = self.record_every.min(steps.max(1));
        self
    }

    pub fn with_record_every(mut self, record_every: usize) -> Self {
        self.record_every = record_every;
        self
    }

    /// Round `steps` up to a multiple of `samples` and record `samples + 1`
    /// evenly spaced points.
    pub fn with_samples(mut self, samples: usize) -> Self {
        let samples = samples.max(1);
        self.steps = self.steps.div_ceil(samples) * samples;
        self.record_every = self.steps / samples;
        self
    }

    pub fn basis(&self) -> Basis {
        self.source.basis()
    }

    fn validate(&self) -> Result<()> {
        self.params.validate()?;
        if self.steps == 0 || self.record_every == 0 {
            return Err(Error::ZeroSteps);
        }
        if !(self.t_final.is_finite() && self.t_final >= 0.0) {
            return Err(Error::InvalidParams(format!(
                "t_final must be finite and non-negative, got {}",
                self.t_final
            )));
        }
        if self.source != HamiltonianSource::Full {
            if !self.params.is_symmetric() {
                return Err(Error::AsymmetricParams);
            }
        }
        Ok(())
    }

    fn check_dim(&self, found: usize) -> Result<()> {
        let expected = self.basis().dim();
        if found != expected {
            return Err(Error::DimensionMismatch { expected, found });
        }
        Ok(())
    }

    fn record_times(&self) -> Vec<(usize, f64)> {
        (0..=self.steps)
            .filter(|k| k % self.record_every == 0 || *k == self.steps)
            .map(|k| (k, self.t_final * k as f64 / self.steps as f64))
            .collect()
    }
}

/// Step count satisfying `h·‖H‖ ≤ 0.05` and, for the full model, at least
/// 200 steps per period of the fastest frame phase.
pub fn default_steps(source: HamiltonianSource, params: &AtomParams, t_final: f64) -> usize {
    if !(t_final > 0.0) {
        return 1;
    }
    let bound = match source {
        HamiltonianSource::Full => full_hamiltonian_bound(params) + params.gamma,
        // largest row sum of the effective block is 3 Ω²/Δ (the |rr⟩ row)
        _ => 3.0 * params.effective_rate().abs(),
    };
    let by_norm = (t_final * bound / MAX_PHASE_PER_STEP).ceil();
    let by_phase = match source {
        HamiltonianSource::Full => {
            (STEPS_PER_PERIOD * t_final * params.max_phase_frequency() / (2.0 * PI)).ceil()
        }
        _ => 0.0,
    };
    (by_norm.max(by_phase).max(1.0)) as usize
}

/// The four Rydberg decay channels, `√(γ/2)|g⟩⟨r|` on each atom.
pub fn jump_operators(gamma: f64) -> Vec<Operator> {
    let amp = Complex64::new((gamma / 2.0).sqrt(), 0.0);
    let one = Layout::three_level(1);
    let id = Operator::identity(one.clone());
    let mut out = Vec::with_capacity(4);
    for atom in 0..2 {
        for ground in 0..2 {
            let mut m = DMatrix::zeros(3, 3);
            m[(ground, 2)] = amp;
            let local = Operator::new(one.clone(), m).expect("3x3");
            out.push(if atom == 0 {
                local.tensor(&id)
            } else {
                id.tensor(&local)
            });
        }
    }
    out
}

fn sparse(m: &DMatrix<Complex64>) -> Terms {
    let mut t = Vec::new();
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            if m[(i, j)] != ZERO {
                t.push((i, j, m[(i, j)]));
            }
        }
    }
    t
}

enum Generator {
    Full { params: AtomParams, buf: Terms },
    Static(Terms),
}

impl Generator {
    fn new(source: HamiltonianSource, params: &AtomParams) -> Result<Self> {
        match source {
            HamiltonianSource::Full => Ok(Generator::Full {
                params: *params,
                buf: Vec::with_capacity(24),
            }),
            _ => {
                let h = effective_hamiltonian(params, Subspace::Full5)?;
                Ok(Generator::Static(sparse(h.matrix())))
            }
        }
    }

    fn dim(&self) -> usize {
        match self {
            Generator::Full { .. } => 9,
            Generator::Static(_) => 5,
        }
    }

    fn terms(&mut self, t: f64) -> &[(usize, usize, Complex64)] {
        match self {
            Generator::Full { params, buf } => {
                full_hamiltonian_terms(params, t, buf);
                buf
            }
            Generator::Static(terms) => terms,
        }
    }
}

trait Rhs {
    fn eval(&mut self, t: f64, y: &[Complex64], out: &mut [Complex64]);
}

/// `dψ/dt = −i H(t) ψ`
struct PureRhs(Generator);

impl Rhs for PureRhs {
    fn eval(&mut self, t: f64, y: &[Complex64], out: &mut [Complex64]) {
        out.fill(ZERO);
        for &(r, c, v) in self.0.terms(t) {
            out[r] += Complex64::new(v.im, -v.re) * y[c];
        }
    }
}

/// `dρ/dt = Gρ + ρG† + Σ LρL†` with `G = −iH − ½ Σ L†L`.
struct LindbladRhs {
    gen: Generator,
    dim: usize,
    decay: Terms,
    jumps: Vec<Terms>,
    g: Terms,
}

impl LindbladRhs {
    fn new(gen: Generator, gamma: f64) -> Self {
        let dim = gen.dim();
        let (decay, jumps) = if gamma > 0.0 && dim == 9 {
            let ops = jump_operators(gamma);
            let k = ops
                .iter()
                .fold(DMatrix::<Complex64>::zeros(9, 9), |acc, l| {
                    acc + l.matrix().adjoint() * l.matrix()
                });
            (
                sparse(&(k * Complex64::new(-0.5, 0.0))),
                ops.iter().map(|l| sparse(l.matrix())).collect(),
            )
        } else {
            (Vec::new(), Vec::new())
        };
        LindbladRhs {
            gen,
            dim,
            decay,
            jumps,
            g: Vec::with_capacity(40),
        }
    }
}

impl Rhs for LindbladRhs {
    fn eval(&mut self, t: f64, rho: &[Complex64], out: &mut [Complex64]) {
        let d = self.dim;
        self.g.clear();
        self.g.extend(
            self.gen
                .terms(t)
                .iter()
                .map(|&(r, c, v)| (r, c, Complex64::new(v.im, -v.re))),
        );
        self.g.extend_from_slice(&self.decay);
        out.fill(ZERO);
        for &(a, c, g) in &self.g {
            let (src, dst) = (c * d, a * d);
            for b in 0..d {
                out[dst + b] += g * rho[src + b];
            }
        }
        for &(b, c, g) in &self.g {
            let gc = g.conj();
            for a in 0..d {
                out[a * d + b] += rho[a * d + c] * gc;
            }
        }
        for l in &self.jumps {
            for &(a, i, la) in l {
                for &(b, j, lb) in l {
                    out[a * d + b] += la * rho[i * d + j] * lb.conj();
                }
            }
        }
    }
}

struct Rk4 {
    k1: Vec<Complex64>,
    k2: Vec<Complex64>,
    k3: Vec<Complex64>,
    k4: Vec<Complex64>,
    tmp: Vec<Complex64>,
}

impl Rk4 {
    fn new(n: usize) -> Self {
        Rk4 {
            k1: vec![ZERO; n],
            k2: vec![ZERO; n],
            k3: vec![ZERO; n],
            k4: vec![ZERO; n],
            tmp: vec![ZERO; n],
        }
    }

    fn step<R: Rhs>(&mut self, rhs: &mut R, t: f64, h: f64, y: &mut [Complex64]) {
        let half = 0.5 * h;
        rhs.eval(t, y, &mut self.k1);
        for i in 0..y.len() {
            self.tmp[i] = y[i] + self.k1[i] * half;
        }
        rhs.eval(t + half, &self.tmp, &mut self.k2);
        for i in 0..y.len() {
            self.tmp[i] = y[i] + self.k2[i] * half;
        }
        rhs.eval(t + half, &self.tmp, &mut self.k3);
        for i in 0..y.len() {
            self.tmp[i] = y[i] + self.k3[i] * h;
        }
        rhs.eval(t + h, &self.tmp, &mut self.k4);
        let sixth = h / 6.0;
        for i in 0..y.len() {
            y[i] += (self.k1[i] + (self.k2[i] + self.k3[i]) * 2.0 + self.k4[i]) * sixth;
        }
    }

    /// `steps` equal steps from `t0` to `t1`.
    fn advance<R: Rhs>(&mut self, rhs: &mut R, y: &mut [Complex64], t0: f64, t1: f64, steps: usize) {
        if steps == 0 {
            return;
        }
        let h = (t1 - t0) / steps as f64;
        for k in 0..steps {
            let t = t0 + (t1 - t0) * k as f64 / steps as f64;
            self.step(rhs, t, h, y);
        }
    }
}

/// Recorded times and states of one evolution.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory<T> {
    pub times: Vec<f64>,
    pub states: Vec<T>,
}

impl<T> Trajectory<T> {
    pub fn last(&self) -> &T {
        self.states.last().expect("trajectory always holds the initial state")
    }
}

fn run_pure(
    spec: &EvolutionSpec,
    psi0: &StateVector,
    mut record: impl FnMut(f64, &StateVector) -> Result<()>,
) -> Result<()> {
    spec.validate()?;
    spec.check_dim(psi0.dim())?;
    let basis = spec.basis();
    let records = spec.record_times();
    if spec.source == HamiltonianSource::ClosedForm {
        for (_, t) in records {
            let coeffs = closed_form_coeffs(spec.params.theta_at(t));
            let psi = StateVector::new(basis.clone(), psi0.amplitudes().clone())?;
            record(t, &apply_gate_map(&coeffs, &psi, [0, 1])?)?;
        }
        return Ok(());
    }
    let mut rhs = PureRhs(Generator::new(spec.source, &spec.params)?);
    let mut rk = Rk4::new(psi0.dim());
    let mut y: Vec<Complex64> = psi0.amplitudes().iter().copied().collect();
    let mut prev = (0usize, 0.0);
    for (k, t) in records {
        rk.advance(&mut rhs, &mut y, prev.1, t, k - prev.0);
        record(t, &StateVector::from_amplitudes(basis.clone(), y.clone())?)?;
        prev = (k, t);
    }
    Ok(())
}

fn run_lindblad(
    spec: &EvolutionSpec,
    rho0: &DensityMatrix,
    mut record: impl FnMut(f64, &DensityMatrix) -> Result<()>,
) -> Result<()> {
    spec.validate()?;
    spec.check_dim(rho0.dim())?;
    rho0.validate()?;
    let basis = spec.basis();
    let gamma = spec.params.gamma;
    if spec.source != HamiltonianSource::Full && gamma > 0.0 {
        return Err(Error::InvalidParams(
            "dissipation is only defined for the full model".into(),
        ));
    }
    let records = spec.record_times();
    if spec.source == HamiltonianSource::ClosedForm {
        for (_, t) in records {
            let u = closed_form_coeffs(spec.params.theta_at(t)).unitary();
            let m = &u * rho0.matrix() * u.adjoint();
            record(t, &DensityMatrix::from_matrix_unchecked(basis.clone(), m)?)?;
        }
        return Ok(());
    }
    let d = rho0.dim();
    let mut rhs = LindbladRhs::new(Generator::new(spec.source, &spec.params)?, gamma);
    let mut rk = Rk4::new(d * d);
    // row-major
    let mut y: Vec<Complex64> = rho0.matrix().transpose().iter().copied().collect();
    let mut prev = (0usize, 0.0);
    for (k, t) in records {
        rk.advance(&mut rhs, &mut y, prev.1, t, k - prev.0);
        let m = DMatrix::from_row_slice(d, d, &y);
        record(t, &DensityMatrix::from_matrix_unchecked(basis.clone(), m)?)?;
        prev = (k, t);
    }
    Ok(())
}

/// Integrate `i dψ/dt = H(t)ψ`. No renormalization is applied.
pub fn evolve_pure(spec: &EvolutionSpec, psi0: &StateVector) -> Result<Trajectory<StateVector>> {
    let mut traj = Trajectory {
        times: Vec::new(),
        states: Vec::new(),
    };
    run_pure(spec, psi0, |t, psi| {
        traj.times.push(t);
        traj.states.push(psi.clone());
        Ok(())
    })?;
    Ok(traj)
}

/// Integrate the master equation with the four Rydberg decay channels.
pub fn evolve_lindblad(
    spec: &EvolutionSpec,
    rho0: &DensityMatrix,
) -> Result<Trajectory<DensityMatrix>> {
    let mut traj = Trajectory {
        times: Vec::new(),
        states: Vec::new(),
    };
    run_lindblad(spec, rho0, |t, rho| {
        traj.times.push(t);
        traj.states.push(rho.clone());
        Ok(())
    })?;
    Ok(traj)
}

#[derive(Debug, Clone, PartialEq)]
pub struct FidelityTrace {
    pub times: Vec<f64>,
    pub fidelities: Vec<f64>,
    pub spec: EvolutionSpec,
}

impl FidelityTrace {
    /// `(time, fidelity)` of the largest recorded fidelity.
    pub fn peak(&self) -> (f64, f64) {
        self.times
            .iter()
            .zip(&self.fidelities)
            .fold((0.0, f64::NEG_INFINITY), |best, (&t, &f)| {
                if f > best.1 {
                    (t, f)
                } else {
                    best
                }
            })
    }
}

/// Fidelity to `ideal` at every recorded time. Uses the master equation when
/// `gamma > 0`, pure evolution otherwise.
pub fn fidelity_trace(
    spec: &EvolutionSpec,
    psi0: &StateVector,
    ideal: &StateVector,
) -> Result<FidelityTrace> {
    spec.check_dim(ideal.dim())?;
    let mut times = Vec::new();
    let mut fidelities = Vec::new();
    if spec.params.gamma > 0.0 {
        run_lindblad(spec, &DensityMatrix::from_pure(psi0), |t, rho| {
            times.push(t);
            fidelities.push(fidelity(ideal, rho)?);
            Ok(())
        })?;
    } else {
        run_pure(spec, psi0, |t, psi| {
            times.push(t);
            fidelities.push(fidelity(ideal, psi)?);
            Ok(())
        })?;
    }
    Ok(FidelityTrace {
        times,
        fidelities,
        spec: spec.clone(),
    })
}

/// Fidelity at arbitrary non-decreasing sample times, integrating from
/// `t = 0`. `total_steps` spans `[0, max(times)]` and is split across the
/// gaps in proportion to their length.
pub fn fidelity_at_times(
    source: HamiltonianSource,
    params: &AtomParams,
    psi0: &StateVector,
    ideal: &StateVector,
    times: &[f64],
    total_steps: Option<usize>,
) -> Result<Vec<f64>> {
    let t_max = times.iter().copied().fold(0.0, f64::max);
    if times.windows(2).any(|w| w[1] < w[0]) || times.iter().any(|t| !(*t >= 0.0)) {
        return Err(Error::InvalidParams(
            "sample times must be non-negative and non-decreasing".into(),
        ));
    }
    let total = total_steps.unwrap_or_else(|| default_steps(source, params, t_max));
    let spec = EvolutionSpec::new(source, *params, t_max).with_steps(total);
    spec.validate()?;
    spec.check_dim(psi0.dim())?;
    spec.check_dim(ideal.dim())?;
    let steps_for = |from: f64, to: f64| -> usize {
        if to <= from {
            0
        } else {
            ((total as f64 * (to - from) / t_max) - 1e-9).ceil().max(1.0) as usize
        }
    };

    if source == HamiltonianSource::ClosedForm {
        return times
            .iter()
            .map(|&t| {
                let psi = apply_gate_map(&closed_form_coeffs(params.theta_at(t)), psi0, [0, 1])?;
                fidelity(ideal, &psi)
            })
            .collect();
    }

    let mut out = Vec::with_capacity(times.len());
    let mut prev = 0.0;
    if params.gamma > 0.0 {
        if source != HamiltonianSource::Full {
            return Err(Error::InvalidParams(
                "dissipation is only defined for the full model".into(),
            ));
        }
        let d = psi0.dim();
        let mut rhs = LindbladRhs::new(Generator::new(source, params)?, params.gamma);
        let mut rk = Rk4::new(d * d);
        let mut y: Vec<Complex64> = psi0.outer().transpose().iter().copied().collect();
        for &t in times {
            rk.advance(&mut rhs, &mut y, prev, t, steps_for(prev, t));
            let m = DMatrix::from_row_slice(d, d, &y);
            let rho = DensityMatrix::from_matrix_unchecked(psi0.basis().clone(), m)?;
            out.push(fidelity(ideal, &rho)?);
            prev = t;
        }
    } else {
        let mut rhs = PureRhs(Generator::new(source, params)?);
        let mut rk = Rk4::new(psi0.dim());
        let mut y: Vec<Complex64> = psi0.amplitudes().iter().copied().collect();
        for &t in times {
            rk.advance(&mut rhs, &mut y, prev, t, steps_for(prev, t));
            let psi = StateVector::new(psi0.basis().clone(), DVector::from_vec(y.clone()))?;
            out.push(fidelity(ideal, &psi)?);
            prev = t;
        }
    }
    Ok(out)
}

/// Evolve an arbitrary 9×9 operator (not necessarily a state) under the full
/// master equation from `0` to `t`. The map is linear, so matrix units give
/// the process.
pub(crate) fn propagate_operator(
    params: &AtomParams,
    x0: &DMatrix<Complex64>,
    t: f64,
    steps: usize,
) -> DMatrix<Complex64> {
    let mut rhs = LindbladRhs::new(
        Generator::Full {
            params: *params,
            buf: Vec::with_capacity(24),
        },
        params.gamma,
    );
    let mut rk = Rk4::new(81);
    let mut y: Vec<Complex64> = x0.transpose().iter().copied().collect();
    rk.advance(&mut rhs, &mut y, 0.0, t, steps);
    DMatrix::from_row_slice(9, 9, &y)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hamiltonian::ideal_gate_target;

    #[test]
    fn default_step_density() {
        let p = AtomParams::fig2();
        let n = default_steps(HamiltonianSource::Full, &p, p.optimal_time());
        assert_eq!(n, 320_000);
        let n = default_steps(HamiltonianSource::Full, &AtomParams::physical(), AtomParams::physical().optimal_time());
        assert_eq!(n, 80_000);
        let n = default_steps(HamiltonianSource::Effective, &p, p.optimal_time());
        let h = p.optimal_time() / n as f64;
        assert!(h * 3.0 * p.effective_rate() <= MAX_PHASE_PER_STEP);
        assert_eq!(default_steps(HamiltonianSource::Full, &p, 0.0), 1);
    }

    #[test]
    fn zero_time_is_identity() {
        let psi = StateVector::from_label(&pair_layout(), "01").unwrap();
        let spec = EvolutionSpec::new(HamiltonianSource::Full, AtomParams::fig2(), 0.0);
        let traj = evolve_pure(&spec, &psi).unwrap();
        assert_eq!(traj.times, vec![0.0, 0.0]);
        assert!((traj.last().amplitudes() - psi.amplitudes()).camax() < 1e-15);
    }

    #[test]
    fn zero_steps_rejected() {
        let psi = StateVector::from_label(&pair_layout(), "00").unwrap();
        let spec = EvolutionSpec::new(HamiltonianSource::Full, AtomParams::fig2(), 1.0).with_steps(0);
        assert_eq!(evolve_pure(&spec, &psi), Err(Error::ZeroSteps));
    }

    #[test]
    fn dimension_checked() {
        let psi = StateVector::from_label(&pair_layout(), "00").unwrap();
        let spec = EvolutionSpec::new(HamiltonianSource::Effective, AtomParams::fig2(), 1.0);
        assert!(matches!(
            evolve_pure(&spec, &psi),
            Err(Error::DimensionMismatch { expected: 5, found: 9 })
        ));
    }

    #[test]
    fn invalid_density_rejected() {
        let spec = EvolutionSpec::new(HamiltonianSource::Full, AtomParams::fig2(), 1.0);
        let m = DMatrix::<Complex64>::identity(9, 9);
        let rho = DensityMatrix::from_matrix_unchecked(spec.basis(), m).unwrap();
        assert!(matches!(
            evolve_lindblad(&spec, &rho),
            Err(Error::InvalidDensity(_))
        ));
    }

    #[test]
    fn record_grid() {
        let spec = EvolutionSpec::new(HamiltonianSource::Effective, AtomParams::fig2(), 10.0)
            .with_steps(10)
            .with_record_every(4);
        let times: Vec<f64> = spec.record_times().into_iter().map(|(_, t)| t).collect();
        assert_eq!(times, vec![0.0, 4.0, 8.0, 10.0]);
    }

    #[test]
    fn jump_operator_structure() {
        let ops = jump_operators(0.02);
        assert_eq!(ops.len(), 4);
        let total = ops.iter().fold(DMatrix::<Complex64>::zeros(9, 9), |acc, l| {
            acc + l.matrix().adjoint() * l.matrix()
        });
        // Σ L†L = γ (n_r ⊗ I + I ⊗ n_r)
        let layout = pair_layout();
        for i in 0..9 {
            let label = layout.label_of(i).to_string();
            let nr = label.matches('r').count() as f64;
            assert!((total[(i, i)].re - 0.02 * nr).abs() < 1e-15, "{label}");
        }
    }

    #[test]
    fn closed_form_source_hits_gate() {
        let p = AtomParams::fig2();
        let basis = effective_basis();
        let psi = StateVector::basis_state(basis.clone(), &"11".parse().unwrap()).unwrap();
        let ideal = ideal_gate_target(&basis, "11").unwrap();
        let spec = EvolutionSpec::new(HamiltonianSource::ClosedForm, p.with_gamma(0.0), p.optimal_time());
        let tr = fidelity_trace(&spec, &psi, &ideal).unwrap();
        assert!((tr.fidelities.last().unwrap() - 1.0).abs() < 1e-14);
    }
}
