//! GHZ and W state fusion through the two-atom gate.
//!
//! Alice holds an `m`-qubit register and Bob an `n`-qubit register; the last
//! qubit of each is handed to Claire, who applies the gate to the pair and
//! measures it. Every measurement branch is enumerated exactly. Successful
//! branches leave an `(m + n − 2)`-qubit GHZ or W state once a single-qubit
//! phase correction is applied.

use std::f64::consts::PI;
use std::fmt;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::Rng;
use rayon::prelude::*;

use crate::dynamics::{default_steps, propagate_operator, HamiltonianSource};
use crate::error::{Error, Result};
use crate::hamiltonian::{
    apply_gate_map, closed_form_coeffs, ideal_gate_target, pair_layout, AtomParams,
    PropagatorCoeffs,
};
use crate::quantum::{fidelity, BasisLabel, Layout, SiteKind, StateVector, I, ONE, ZERO};

/// Largest total number of qubits across both registers.
pub const SITE_CAP: usize = 12;

/// Pair labels of the computational inputs, in map-column order.
const COMPUTATIONAL: [&str; 4] = ["00", "01", "10", "11"];
/// Their indices in the nine-state pair basis.
const COMPUTATIONAL_INDEX: [usize; 4] = [0, 1, 3, 4];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Party {
    Alice,
    Bob,
    Claire,
}

impl fmt::Display for Party {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Party::Alice => "Alice",
            Party::Bob => "Bob",
            Party::Claire => "Claire",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Protocol {
    Ghz,
    W,
}

impl fmt::Display for Protocol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Protocol::Ghz => "ghz",
            Protocol::W => "w",
        })
    }
}

/// Pure qubit register with a party tag per site.
#[derive(Debug, Clone, PartialEq)]
pub struct QubitRegister {
    state: StateVector,
    parties: Vec<Party>,
    family: Option<Protocol>,
}

impl QubitRegister {
    pub fn new(state: StateVector, parties: Vec<Party>) -> Result<Self> {
        if parties.len() != state.layout().num_sites() {
            return Err(Error::DimensionMismatch {
                expected: state.layout().num_sites(),
                found: parties.len(),
            });
        }
        if state.layout().sites().iter().any(|s| *s != SiteKind::Qubit) {
            return Err(Error::InvalidSites("register sites must be qubits".into()));
        }
        if (state.norm_sqr() - 1.0).abs() > 1e-10 {
            return Err(Error::Fusion(format!(
                "register is not normalized (norm² = {})",
                state.norm_sqr()
            )));
        }
        Ok(QubitRegister {
            state: state.to_product_basis(),
            parties,
            family: None,
        })
    }

    fn with_family(mut self, family: Protocol) -> Self {
        self.family = Some(family);
        self
    }

    pub fn state(&self) -> &StateVector {
        &self.state
    }

    pub fn parties(&self) -> &[Party] {
        &self.parties
    }

    pub fn num_sites(&self) -> usize {
        self.parties.len()
    }

    /// Which entangled family the register was prepared in, if any.
    pub fn family(&self) -> Option<Protocol> {
        self.family
    }

    pub fn claire_sites(&self) -> Vec<usize> {
        self.sites_of(Party::Claire)
    }

    pub fn sites_of(&self, party: Party) -> Vec<usize> {
        (0..self.parties.len())
            .filter(|&i| self.parties[i] == party)
            .collect()
    }

    /// The single non-Claire party holding sites, if there is exactly one.
    pub fn owner(&self) -> Option<Party> {
        let mut owners = self.parties.iter().filter(|p| **p != Party::Claire);
        let first = *owners.next()?;
        owners.all(|p| *p == first).then_some(first)
    }

    /// Apply `gate` to each listed site.
    pub fn apply_phase(&self, gate: PhaseGate, sites: &[usize]) -> Result<QubitRegister> {
        self.state.layout().check_sites(sites)?;
        let m = gate.matrix();
        let mut state = self.state.clone();
        for &s in sites {
            state = state.apply_local(s, &m)?;
        }
        Ok(QubitRegister {
            state,
            parties: self.parties.clone(),
            family: self.family,
        })
    }
}

/// `(|0…0⟩ + |1…1⟩)/√2` over `k` qubits.
pub fn ghz_state(k: usize) -> Result<StateVector> {
    let zeros = "0".repeat(k);
    let ones = "1".repeat(k);
    StateVector::superposition(Layout::qubits(k), &[(ONE, &zeros), (ONE, &ones)])
}

/// Uniform single-excitation state over `k ≥ 1` qubits.
pub fn w_state(k: usize) -> Result<StateVector> {
    if k == 0 {
        return Err(Error::ZeroNorm);
    }
    let layout = Layout::qubits(k);
    let amp = Complex64::new(1.0 / (k as f64).sqrt(), 0.0);
    let mut amps = DVector::from_element(layout.dim(), ZERO);
    for site in 0..k {
        amps[1 << (k - 1 - site)] = amp;
    }
    StateVector::new(layout, amps)
}

fn tag_register(k: usize, party: Party) -> Result<Vec<Party>> {
    if k < 2 {
        return Err(Error::Fusion(format!("register needs at least 2 qubits, got {k}")));
    }
    if k > SITE_CAP {
        return Err(Error::SizeCap {
            sites: k,
            cap: SITE_CAP,
        });
    }
    if party == Party::Claire {
        return Err(Error::Fusion("registers are owned by Alice or Bob".into()));
    }
    let mut parties = vec![party; k];
    parties[k - 1] = Party::Claire;
    Ok(parties)
}

/// `k`-qubit GHZ register owned by `party`; its last qubit goes to Claire.
pub fn make_ghz(k: usize, party: Party) -> Result<QubitRegister> {
    let parties = tag_register(k, party)?;
    Ok(QubitRegister::new(ghz_state(k)?, parties)?.with_family(Protocol::Ghz))
}

/// `k`-qubit W register owned by `party`; its last qubit goes to Claire.
pub fn make_w(k: usize, party: Party) -> Result<QubitRegister> {
    let parties = tag_register(k, party)?;
    Ok(QubitRegister::new(w_state(k)?, parties)?.with_family(Protocol::W))
}

/// Single-qubit phase gate used for corrections.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PhaseGate {
    /// `diag(1, i)`
    S,
    /// `diag(1, −i)`
    SDagger,
}

impl PhaseGate {
    pub fn matrix(self) -> DMatrix<Complex64> {
        let p = match self {
            PhaseGate::S => I,
            PhaseGate::SDagger => -I,
        };
        DMatrix::from_diagonal(&DVector::from_vec(vec![ONE, p]))
    }

    pub fn adjoint(self) -> PhaseGate {
        match self {
            PhaseGate::S => PhaseGate::SDagger,
            PhaseGate::SDagger => PhaseGate::S,
        }
    }
}

impl fmt::Display for PhaseGate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            PhaseGate::S => "S",
            PhaseGate::SDagger => "S†",
        })
    }
}

/// Phase gate applied to the listed sites of the post-measurement register.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Correction {
    pub gate: PhaseGate,
    pub sites: Vec<usize>,
    /// Party holding `sites`.
    pub party: Party,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Success,
    Failure,
    Leakage,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::Success => "success",
            Verdict::Failure => "failure",
            Verdict::Leakage => "leakage",
        })
    }
}

/// One outcome of Claire's measurement.
#[derive(Debug, Clone, PartialEq)]
pub struct FusionBranch {
    pub protocol: Protocol,
    pub outcome: BasisLabel,
    pub probability: f64,
    /// Post-measurement register over the `m + n − 2` remaining qubits.
    /// Absent for leakage, zero-probability outcomes and mixed-state gates.
    pub post_state: Option<QubitRegister>,
    pub correction: Option<Correction>,
    pub verdict: Verdict,
    /// Standard state the corrected branch is compared with.
    pub target: Option<StateVector>,
    /// The GHZ target pairs Alice-zeros with Bob-ones (outcomes `01`, `10`).
    pub relabeled_target: bool,
    /// Fidelity of the corrected branch state to `target`.
    pub corrected_fidelity: Option<f64>,
}

impl FusionBranch {
    pub fn describe_correction(&self) -> String {
        match &self.correction {
            Some(c) => format!("{} on {} site(s) of {}", c.gate, c.sites.len(), c.party),
            None => "-".to_string(),
        }
    }
}

/// Process of the gate on the computational pair inputs, extracted from the
/// master equation: `E(|i⟩⟨j|)` for `i, j ∈ {00, 01, 10, 11}`.
#[derive(Debug, Clone, PartialEq)]
pub struct PairChannel {
    pub params: AtomParams,
    pub duration: f64,
    pub steps: usize,
    images: Vec<DMatrix<Complex64>>,
}

impl PairChannel {
    /// Evolve each pair matrix unit for `duration`. Only the upper triangle
    /// is integrated; `E(|j⟩⟨i|) = E(|i⟩⟨j|)†`.
    pub fn extract(params: &AtomParams, duration: f64, steps: Option<usize>) -> Result<Self> {
        params.validate()?;
        let steps = steps.unwrap_or_else(|| default_steps(HamiltonianSource::Full, params, duration));
        if steps == 0 {
            return Err(Error::ZeroSteps);
        }
        let pairs: Vec<(usize, usize)> = (0..4).flat_map(|i| (i..4).map(move |j| (i, j))).collect();
        let evolved: Vec<((usize, usize), DMatrix<Complex64>)> = pairs
            .par_iter()
            .map(|&(i, j)| {
                let mut unit = DMatrix::zeros(9, 9);
                unit[(COMPUTATIONAL_INDEX[i], COMPUTATIONAL_INDEX[j])] = ONE;
                ((i, j), propagate_operator(params, &unit, duration, steps))
            })
            .collect();
        let mut images = vec![DMatrix::zeros(9, 9); 16];
        for ((i, j), m) in evolved {
            if i != j {
                images[4 * j + i] = m.adjoint();
            }
            images[4 * i + j] = m;
        }
        Ok(PairChannel {
            params: *params,
            duration,
            steps,
            images,
        })
    }

    /// `E(|c_i⟩⟨c_j|)` over the nine pair states.
    pub fn image(&self, i: usize, j: usize) -> &DMatrix<Complex64> {
        &self.images[4 * i + j]
    }

    /// Output pair state for a 4×4 input over `00, 01, 10, 11`.
    pub fn apply(&self, rho: &DMatrix<Complex64>) -> DMatrix<Complex64> {
        let mut out = DMatrix::zeros(9, 9);
        for i in 0..4 {
            for j in 0..4 {
                if rho[(i, j)] != ZERO {
                    out += self.image(i, j) * rho[(i, j)];
                }
            }
        }
        out
    }

    /// Fidelity of computational input `input` to its ideal gate image.
    pub fn target_fidelity(&self, input: usize) -> f64 {
        let target = ideal_gate_target(&pair_layout().into(), COMPUTATIONAL[input])
            .expect("static label");
        let psi = target.amplitudes();
        psi.dotc(&(self.image(input, input) * psi)).re.clamp(0.0, 1.0)
    }
}

/// The gate Claire applies.
#[derive(Debug, Clone, PartialEq)]
pub enum GateModel {
    /// Closed-form effective map at some `theta` (unitary, pure output).
    ClosedForm(PropagatorCoeffs),
    /// Dissipative process from the full master equation.
    Channel(Box<PairChannel>),
}

impl GateModel {
    /// Closed-form map at `θ = π`.
    pub fn ideal() -> Self {
        GateModel::ClosedForm(closed_form_coeffs(PI))
    }

    /// Master-equation process at `params`, run for the optimal time.
    pub fn numerical(params: &AtomParams) -> Result<Self> {
        Ok(GateModel::Channel(Box::new(PairChannel::extract(
            params,
            params.optimal_time(),
            None,
        )?)))
    }

    /// Fidelity of pair input `input` (index into `00, 01, 10, 11`) to its
    /// ideal image.
    pub fn pair_fidelity(&self, input: usize) -> Result<f64> {
        match self {
            GateModel::ClosedForm(c) => {
                let layout = pair_layout();
                let psi = StateVector::from_label(&layout, COMPUTATIONAL[input])?;
                let out = apply_gate_map(c, &psi, [0, 1])?;
                fidelity(&ideal_gate_target(&layout.into(), COMPUTATIONAL[input])?, &out)
            }
            GateModel::Channel(ch) => Ok(ch.target_fidelity(input)),
        }
    }
}

/// Exact rational number.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Fraction {
    pub num: u64,
    pub den: u64,
}

impl Fraction {
    pub fn new(num: u64, den: u64) -> Self {
        let g = gcd(num, den).max(1);
        Fraction {
            num: num / g,
            den: den / g,
        }
    }

    pub fn to_f64(self) -> f64 {
        self.num as f64 / self.den as f64
    }
}

impl fmt::Display for Fraction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.num, self.den)
    }
}

fn gcd(a: u64, b: u64) -> u64 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// Total W fusion success probability `(m + n − 2)/(mn)`.
pub fn w_success_probability(m: usize, n: usize) -> Result<Fraction> {
    if m < 2 || n < 2 {
        return Err(Error::Fusion(format!("need m, n ≥ 2, got {m}, {n}")));
    }
    Ok(Fraction::new((m + n - 2) as u64, (m * n) as u64))
}

/// The product state split by the Claire pair: full index of
/// (spectator `s`, pair level `x`, pair level `y`).
struct PairSplit {
    rest_layout: Layout,
    rest_strides: Vec<usize>,
    keep: Vec<usize>,
    pair_strides: [usize; 2],
}

impl PairSplit {
    fn new(layout: &Layout, pair: [usize; 2]) -> Self {
        let strides = layout.strides();
        let keep: Vec<usize> = (0..layout.num_sites())
            .filter(|s| !pair.contains(s))
            .collect();
        let rest_layout = layout.without(&pair);
        PairSplit {
            rest_strides: keep.iter().map(|&s| strides[s]).collect(),
            rest_layout,
            keep,
            pair_strides: [strides[pair[0]], strides[pair[1]]],
        }
    }

    fn rest_dim(&self) -> usize {
        self.rest_layout.dim()
    }

    fn full_index(&self, s: usize, x: usize, y: usize) -> usize {
        let label = self.rest_layout.label_of(s);
        let mut idx = x * self.pair_strides[0] + y * self.pair_strides[1];
        for (l, stride) in label.levels().iter().zip(&self.rest_strides) {
            idx += l.index() * stride;
        }
        idx
    }

    /// Spectator vectors `S_xy[s]` for the four computational pair inputs.
    fn components(&self, full: &StateVector) -> Vec<DVector<Complex64>> {
        let amps = full.amplitudes();
        COMPUTATIONAL
            .iter()
            .enumerate()
            .map(|(c, _)| {
                let (x, y) = (c >> 1, c & 1);
                DVector::from_iterator(
                    self.rest_dim(),
                    (0..self.rest_dim()).map(|s| amps[self.full_index(s, x, y)]),
                )
            })
            .collect()
    }
}

struct FusionSetup {
    protocol: Protocol,
    product: StateVector,
    pair: [usize; 2],
    rest_parties: Vec<Party>,
    /// Number of remaining sites from the first register.
    first_len: usize,
}

fn setup(a: &QubitRegister, b: &QubitRegister) -> Result<FusionSetup> {
    let (ca, cb) = (a.claire_sites(), b.claire_sites());
    if ca.len() != 1 || cb.len() != 1 {
        return Err(Error::Fusion(format!(
            "each register needs exactly one Claire site (found {} and {})",
            ca.len(),
            cb.len()
        )));
    }
    let (oa, ob) = (a.owner(), b.owner());
    if oa.is_none() || ob.is_none() || oa == ob {
        return Err(Error::Fusion(
            "registers overlap: they must be owned by different parties".into(),
        ));
    }
    let protocol = match (a.family(), b.family()) {
        (Some(x), Some(y)) if x == y => x,
        _ => {
            return Err(Error::Fusion(
                "both registers must be GHZ or both W".into(),
            ))
        }
    };
    let total = a.num_sites() + b.num_sites();
    if total > SITE_CAP {
        return Err(Error::SizeCap {
            sites: total,
            cap: SITE_CAP,
        });
    }
    let pair = [ca[0], a.num_sites() + cb[0]];
    let rest_parties = a
        .parties()
        .iter()
        .chain(b.parties())
        .enumerate()
        .filter(|(i, _)| !pair.contains(i))
        .map(|(_, p)| *p)
        .collect();
    Ok(FusionSetup {
        protocol,
        product: a.state().tensor(b.state()).embed_three_level(&pair)?,
        pair,
        rest_parties,
        first_len: a.num_sites() - 1,
    })
}

fn classify(
    protocol: Protocol,
    outcome: &str,
    parties: &[Party],
    first_len: usize,
) -> (Verdict, Option<Correction>) {
    let first: Vec<usize> = (0..first_len).collect();
    let second: Vec<usize> = (first_len..parties.len()).collect();
    let corr = |gate, sites: Vec<usize>| {
        let party = parties[sites[0]];
        Some(Correction { gate, sites, party })
    };
    match (protocol, outcome) {
        (_, o) if o.contains('r') => (Verdict::Leakage, None),
        (Protocol::Ghz, "00") | (Protocol::Ghz, "01") => {
            (Verdict::Success, corr(PhaseGate::SDagger, vec![0]))
        }
        (Protocol::Ghz, _) => (Verdict::Success, corr(PhaseGate::S, vec![0])),
        (Protocol::W, "10") => (Verdict::Success, corr(PhaseGate::S, second)),
        (Protocol::W, "01") => (Verdict::Success, corr(PhaseGate::S, first)),
        (Protocol::W, _) => (Verdict::Failure, None),
    }
}

fn target_for(protocol: Protocol, outcome: &str, first_len: usize, total: usize) -> Result<(StateVector, bool)> {
    match (protocol, outcome) {
        (Protocol::Ghz, "01") | (Protocol::Ghz, "10") => {
            let a = format!("{}{}", "0".repeat(first_len), "1".repeat(total - first_len));
            let b = format!("{}{}", "1".repeat(first_len), "0".repeat(total - first_len));
            Ok((
                StateVector::superposition(Layout::qubits(total), &[(ONE, &a), (ONE, &b)])?,
                true,
            ))
        }
        (Protocol::Ghz, _) => Ok((ghz_state(total)?, false)),
        (Protocol::W, _) => Ok((w_state(total)?, false)),
    }
}

fn correction_adjoint(target: &StateVector, c: &Correction) -> Result<StateVector> {
    let m = c.gate.adjoint().matrix();
    let mut out = target.clone();
    for &s in &c.sites {
        out = out.apply_local(s, &m)?;
    }
    Ok(out)
}

/// Run Claire's gate and measurement on the two registers and enumerate all
/// outcomes of the pair.
pub fn run_fusion(
    a: &QubitRegister,
    b: &QubitRegister,
    gate: &GateModel,
) -> Result<Vec<FusionBranch>> {
    let setup = setup(a, b)?;
    let total = setup.rest_parties.len();
    match gate {
        GateModel::ClosedForm(coeffs) => {
            let after = apply_gate_map(coeffs, &setup.product, setup.pair)?;
            ["00", "01", "10", "11", "rr"]
                .iter()
                .map(|&o| {
                    let proj = after.project(&setup.pair, &o.parse()?)?;
                    let (verdict, correction) =
                        classify(setup.protocol, o, &setup.rest_parties, setup.first_len);
                    let post_state = match proj.collapsed {
                        Some(s) if verdict != Verdict::Leakage => Some(QubitRegister {
                            state: s,
                            parties: setup.rest_parties.clone(),
                            family: None,
                        }),
                        _ => None,
                    };
                    let (target, relabeled_target, corrected_fidelity) =
                        match (&correction, &post_state) {
                            (Some(c), Some(reg)) => {
                                let (t, relabeled) =
                                    target_for(setup.protocol, o, setup.first_len, total)?;
                                let fixed = reg.apply_phase(c.gate, &c.sites)?;
                                let f = fidelity(&t, fixed.state())?;
                                (Some(t), relabeled, Some(f))
                            }
                            _ => (None, false, None),
                        };
                    Ok(FusionBranch {
                        protocol: setup.protocol,
                        outcome: o.parse()?,
                        probability: proj.probability,
                        post_state,
                        correction,
                        verdict,
                        target,
                        relabeled_target,
                        corrected_fidelity,
                    })
                })
                .collect()
        }
        GateModel::Channel(channel) => {
            let split = PairSplit::new(setup.product.layout(), setup.pair);
            debug_assert_eq!(split.keep.len(), total);
            let comps = split.components(&setup.product);
            let layout = pair_layout();
            (0..9)
                .map(|o| {
                    let outcome = layout.label_of(o);
                    let label = outcome.to_string();
                    let mut p = ZERO;
                    for i in 0..4 {
                        for j in 0..4 {
                            p += channel.image(i, j)[(o, o)] * comps[j].dotc(&comps[i]);
                        }
                    }
                    let probability = p.re.max(0.0);
                    let (verdict, correction) =
                        classify(setup.protocol, &label, &setup.rest_parties, setup.first_len);
                    let (target, relabeled_target, corrected_fidelity) = match &correction {
                        Some(c) if probability > 0.0 => {
                            let (t, relabeled) =
                                target_for(setup.protocol, &label, setup.first_len, total)?;
                            let tp = correction_adjoint(&t, c)?;
                            let overlaps: Vec<Complex64> =
                                comps.iter().map(|s| tp.amplitudes().dotc(s)).collect();
                            let mut f = ZERO;
                            for i in 0..4 {
                                for j in 0..4 {
                                    f += channel.image(i, j)[(o, o)] * overlaps[i] * overlaps[j].conj();
                                }
                            }
                            (Some(t), relabeled, Some((f.re / probability).clamp(0.0, 1.0)))
                        }
                        _ => (None, false, None),
                    };
                    Ok(FusionBranch {
                        protocol: setup.protocol,
                        outcome,
                        probability,
                        post_state: None,
                        correction,
                        verdict,
                        target,
                        relabeled_target,
                        corrected_fidelity,
                    })
                })
                .collect()
        }
    }
}

/// Apply a success branch's phase correction to its post-measurement register.
pub fn apply_correction(branch: &FusionBranch) -> Result<QubitRegister> {
    let outcome = branch.outcome.to_string();
    if branch.verdict != Verdict::Success {
        return Err(Error::NotCorrectable(outcome));
    }
    match (&branch.correction, &branch.post_state) {
        (Some(c), Some(reg)) => reg.apply_phase(c.gate, &c.sites),
        _ => Err(Error::NotCorrectable(outcome)),
    }
}

/// Sum of success-branch probabilities.
pub fn success_probability(branches: &[FusionBranch]) -> f64 {
    branches
        .iter()
        .filter(|b| b.verdict == Verdict::Success)
        .map(|b| b.probability)
        .sum()
}

/// Draw one branch according to the Born rule.
pub fn sample_branch<'a, R: Rng + ?Sized>(
    branches: &'a [FusionBranch],
    rng: &mut R,
) -> Option<&'a FusionBranch> {
    let total: f64 = branches.iter().map(|b| b.probability).sum();
    let mut u = rng.random::<f64>() * total;
    for b in branches {
        if u < b.probability {
            return Some(b);
        }
        u -= b.probability;
    }
    branches.iter().rev().find(|b| b.probability > 0.0)
}

/// Gate fidelity of the fusion run weighted by the input decomposition: the
/// product state is split by the Claire pair input `|xy⟩`, and each piece
/// contributes its weight times the pair fidelity of `|xy⟩`.
pub fn fusion_fidelity(gate: &GateModel, protocol: Protocol, m: usize, n: usize) -> Result<f64> {
    let (a, b) = registers(protocol, m, n)?;
    let setup = setup(&a, &b)?;
    let split = PairSplit::new(setup.product.layout(), setup.pair);
    let comps = split.components(&setup.product);
    let mut f = 0.0;
    for (input, s) in comps.iter().enumerate() {
        let w = s.norm_squared();
        if w > 0.0 {
            f += w * gate.pair_fidelity(input)?;
        }
    }
    Ok(f)
}

/// Fidelity of the whole post-gate state (before Claire measures) to the
/// ideal post-gate state, keeping coherences between input components.
pub fn post_gate_fidelity(gate: &GateModel, a: &QubitRegister, b: &QubitRegister) -> Result<f64> {
    let setup = setup(a, b)?;
    let ideal = match GateModel::ideal() {
        GateModel::ClosedForm(c) => apply_gate_map(&c, &setup.product, setup.pair)?,
        GateModel::Channel(_) => unreachable!(),
    };
    match gate {
        GateModel::ClosedForm(c) => {
            fidelity(&ideal, &apply_gate_map(c, &setup.product, setup.pair)?)
        }
        GateModel::Channel(channel) => {
            let split = PairSplit::new(setup.product.layout(), setup.pair);
            let comps = split.components(&setup.product);
            let ideal_amps = ideal.amplitudes();
            // w_i = Σ_s conj(S_i[s]) χ_s
            let w: Vec<DVector<Complex64>> = comps
                .iter()
                .map(|s_i| {
                    DVector::from_iterator(
                        9,
                        (0..9).map(|p| {
                            let (x, y) = (p / 3, p % 3);
                            (0..split.rest_dim())
                                .map(|s| s_i[s].conj() * ideal_amps[split.full_index(s, x, y)])
                                .sum::<Complex64>()
                        }),
                    )
                })
                .collect();
            let mut f = ZERO;
            for i in 0..4 {
                for j in 0..4 {
                    f += w[i].dotc(&(channel.image(i, j) * &w[j]));
                }
            }
            Ok(f.re.clamp(0.0, 1.0))
        }
    }
}

/// Alice's `m`-qubit and Bob's `n`-qubit registers for `protocol`.
pub fn registers(protocol: Protocol, m: usize, n: usize) -> Result<(QubitRegister, QubitRegister)> {
    if m + n > SITE_CAP {
        return Err(Error::SizeCap {
            sites: m + n,
            cap: SITE_CAP,
        });
    }
    let make = match protocol {
        Protocol::Ghz => make_ghz,
        Protocol::W => make_w,
    };
    Ok((make(m, Party::Alice)?, make(n, Party::Bob)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::FRAC_1_SQRT_2;

    #[test]
    fn ghz_amplitudes() {
        let g = make_ghz(3, Party::Alice).unwrap();
        let amps = g.state().amplitudes();
        for (i, a) in amps.iter().enumerate() {
            let expected = if i == 0 || i == 7 { FRAC_1_SQRT_2 } else { 0.0 };
            assert!((a.re - expected).abs() < 1e-15 && a.im == 0.0);
        }
        assert_eq!(g.claire_sites(), vec![2]);
        assert_eq!(g.owner(), Some(Party::Alice));
        let g6 = make_ghz(6, Party::Bob).unwrap();
        assert!((g6.state().norm_sqr() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn bell_cases() {
        let g = make_ghz(2, Party::Alice).unwrap();
        assert!((g.state().amplitude("00").unwrap().re - FRAC_1_SQRT_2).abs() < 1e-15);
        assert!((g.state().amplitude("11").unwrap().re - FRAC_1_SQRT_2).abs() < 1e-15);
        let w = make_w(2, Party::Alice).unwrap();
        assert!((w.state().amplitude("01").unwrap().re - FRAC_1_SQRT_2).abs() < 1e-15);
        assert!((w.state().amplitude("10").unwrap().re - FRAC_1_SQRT_2).abs() < 1e-15);
    }

    #[test]
    fn w3_amplitudes() {
        let w = make_w(3, Party::Alice).unwrap();
        let a = 1.0 / 3f64.sqrt();
        for l in ["001", "010", "100"] {
            assert!((w.state().amplitude(l).unwrap().re - a).abs() < 1e-15);
        }
        for l in ["000", "011", "111"] {
            assert_eq!(w.state().amplitude(l).unwrap(), ZERO);
        }
    }

    #[test]
    fn register_size_limits() {
        assert!(matches!(make_ghz(13, Party::Alice), Err(Error::SizeCap { .. })));
        assert!(make_w(1, Party::Alice).is_err());
        assert!(make_ghz(3, Party::Claire).is_err());
    }

    #[test]
    fn overlap_and_family_errors() {
        let a = make_ghz(3, Party::Alice).unwrap();
        let a2 = make_ghz(3, Party::Alice).unwrap();
        assert!(matches!(run_fusion(&a, &a2, &GateModel::ideal()), Err(Error::Fusion(_))));
        let w = make_w(3, Party::Bob).unwrap();
        assert!(matches!(run_fusion(&a, &w, &GateModel::ideal()), Err(Error::Fusion(_))));
        let untagged = QubitRegister::new(ghz_state(3).unwrap(), vec![Party::Bob; 3]).unwrap();
        assert!(matches!(
            run_fusion(&a, &untagged, &GateModel::ideal()),
            Err(Error::Fusion(_))
        ));
        let big = make_ghz(7, Party::Bob).unwrap();
        let a6 = make_ghz(6, Party::Alice).unwrap();
        assert!(matches!(run_fusion(&a6, &big, &GateModel::ideal()), Err(Error::SizeCap { .. })));
    }

    #[test]
    fn fractions() {
        assert_eq!(w_success_probability(3, 3).unwrap(), Fraction::new(4, 9));
        assert_eq!(w_success_probability(3, 4).unwrap(), Fraction { num: 5, den: 12 });
        assert_eq!(w_success_probability(2, 2).unwrap().to_string(), "1/2");
        assert!(w_success_probability(1, 3).is_err());
    }

    #[test]
    fn correction_on_failure_rejected() {
        let (a, b) = registers(Protocol::W, 3, 3).unwrap();
        let branches = run_fusion(&a, &b, &GateModel::ideal()).unwrap();
        let fail = branches.iter().find(|b| b.outcome.to_string() == "00").unwrap();
        assert_eq!(fail.verdict, Verdict::Failure);
        assert_eq!(apply_correction(fail), Err(Error::NotCorrectable("00".into())));
        let leak = branches.iter().find(|b| b.outcome.to_string() == "rr").unwrap();
        assert_eq!(leak.verdict, Verdict::Leakage);
        assert!(apply_correction(leak).is_err());
    }

    #[test]
    fn phase_gate_acts_trivially_on_zero() {
        let reg = QubitRegister::new(
            StateVector::from_label(&Layout::qubits(3), "000").unwrap(),
            vec![Party::Alice; 3],
        )
        .unwrap();
        let twice = reg
            .apply_phase(PhaseGate::S, &[0, 1, 2])
            .unwrap()
            .apply_phase(PhaseGate::S, &[0, 1, 2])
            .unwrap();
        assert_eq!(twice.state(), reg.state());
    }

    #[test]
    fn sampling_follows_weights() {
        use rand::SeedableRng;
        let (a, b) = registers(Protocol::W, 3, 3).unwrap();
        let branches = run_fusion(&a, &b, &GateModel::ideal()).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        let n = 20_000;
        let hits = (0..n)
            .filter(|_| sample_branch(&branches, &mut rng).unwrap().outcome.to_string() == "10")
            .count();
        assert!((hits as f64 / n as f64 - 2.0 / 9.0).abs() < 0.01);
        assert!(sample_branch(&branches, &mut rng).unwrap().outcome.to_string() != "rr");
    }
}
