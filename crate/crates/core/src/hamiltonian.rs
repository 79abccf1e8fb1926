//! Two-atom antiblockade Hamiltonians and the closed-form gate map.
//!
//! Each atom has ground states `|0⟩`, `|1⟩` and a Rydberg level `|r⟩`.
//! Laser `a` drives `|0⟩ ↔ |r⟩` with Rabi frequency `omega_a` and detuning
//! `delta_a`; laser `b` drives `|1⟩ ↔ |r⟩`. The interaction shift
//! `delta_rr |rr⟩⟨rr|` is removed by moving to its rotating frame, which
//! attaches `e^{∓i delta_rr t}` to every transition into or out of `|rr⟩`.
//!
//! In the antiblockade regime (`delta_a + delta_b = delta_rr`) with large
//! detuning, the ground pair states couple to `|rr⟩` at second order and the
//! evolution over `theta = Ω² t / Δ` is given in closed form by
//! [`closed_form_coeffs`].

use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::quantum::{
    Basis, BasisLabel, Layout, Operator, SiteKind, StateVector, I, ONE, ZERO,
};

/// Physical knobs of the two-atom system, in angular-frequency units.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AtomParams {
    pub omega_a: f64,
    pub omega_b: f64,
    pub delta_a: f64,
    pub delta_b: f64,
    pub delta_rr: f64,
    /// Total Rydberg decay rate per atom.
    pub gamma: f64,
}

impl AtomParams {
    pub fn new(
        omega_a: f64,
        omega_b: f64,
        delta_a: f64,
        delta_b: f64,
        delta_rr: f64,
        gamma: f64,
    ) -> Result<Self> {
        let p = AtomParams {
            omega_a,
            omega_b,
            delta_a,
            delta_b,
            delta_rr,
            gamma,
        };
        p.validate()?;
        Ok(p)
    }

    /// `omega_a = omega_b = omega`, `delta_a = delta_b = delta`.
    pub fn symmetric(omega: f64, delta: f64, delta_rr: f64, gamma: f64) -> Result<Self> {
        Self::new(omega, omega, delta, delta, delta_rr, gamma)
    }

    /// Dimensionless set with `Ω = 1`, `Δ = 40`, `Δ_rr = 80`, `γ = 0.001`.
    pub fn fig2() -> Self {
        AtomParams {
            omega_a: 1.0,
            omega_b: 1.0,
            delta_a: 40.0,
            delta_b: 40.0,
            delta_rr: 80.0,
            gamma: 0.001,
        }
    }

    /// Experimental set in MHz (time in µs): `Ω = 50`, `Δ = 10³`,
    /// `Δ_rr = 2×10³`, `γ = 10 kHz`.
    pub fn physical() -> Self {
        AtomParams {
            omega_a: 50.0,
            omega_b: 50.0,
            delta_a: 1000.0,
            delta_b: 1000.0,
            delta_rr: 2000.0,
            gamma: 0.01,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let fields = [
            ("omega_a", self.omega_a),
            ("omega_b", self.omega_b),
            ("delta_a", self.delta_a),
            ("delta_b", self.delta_b),
            ("delta_rr", self.delta_rr),
            ("gamma", self.gamma),
        ];
        for (name, v) in fields {
            if !v.is_finite() {
                return Err(Error::InvalidParams(format!("{name} is not finite")));
            }
        }
        if self.gamma < 0.0 {
            return Err(Error::InvalidParams(format!(
                "gamma must be non-negative, got {}",
                self.gamma
            )));
        }
        Ok(())
    }

    pub fn with_gamma(mut self, gamma: f64) -> Self {
        self.gamma = gamma;
        self
    }

    /// Sets `omega_a = omega_b (1 + delta_omega)`.
    pub fn with_delta_omega(mut self, delta_omega: f64) -> Self {
        self.omega_a = self.omega_b * (1.0 + delta_omega);
        self
    }

    /// `(omega_a − omega_b) / omega_b`
    pub fn delta_omega(&self) -> f64 {
        (self.omega_a - self.omega_b) / self.omega_b
    }

    pub fn antiblockade_satisfied(&self) -> bool {
        (self.delta_a + self.delta_b - self.delta_rr).abs() <= 1e-9 * self.delta_rr.abs()
    }

    pub fn is_symmetric(&self) -> bool {
        self.omega_a == self.omega_b && self.delta_a == self.delta_b
    }

    /// Effective coupling scale `Ω²/Δ`, taken from the `b` laser.
    pub fn effective_rate(&self) -> f64 {
        self.omega_b * self.omega_b / self.delta_b
    }

    /// Gate time `t₀ = πΔ/Ω²` (nominal, from the `b` laser).
    pub fn optimal_time(&self) -> f64 {
        PI / self.effective_rate()
    }

    pub fn theta_at(&self, t: f64) -> f64 {
        self.effective_rate() * t
    }

    /// Fastest phase rotation appearing in the rotated-frame Hamiltonian.
    pub fn max_phase_frequency(&self) -> f64 {
        [
            self.delta_rr,
            self.delta_a,
            self.delta_b,
            self.delta_a - self.delta_rr,
            self.delta_b - self.delta_rr,
        ]
        .iter()
        .fold(0.0_f64, |m, v| m.max(v.abs()))
    }
}

/// Layout of the gate pair: two three-level atoms.
pub fn pair_layout() -> Layout {
    Layout::three_level(2)
}

pub const EFFECTIVE_LABELS: [&str; 5] = ["00", "01", "10", "11", "rr"];

/// The five-state basis `{00, 01, 10, 11, rr}` of the effective model.
pub fn effective_basis() -> Basis {
    let labels: Vec<BasisLabel> = EFFECTIVE_LABELS
        .iter()
        .map(|l| l.parse().expect("static label"))
        .collect();
    Basis::subset(pair_layout(), &labels).expect("static basis")
}

/// Index of `|rr⟩` in the two-atom product basis.
pub(crate) const RR: usize = 8;

/// Nonzero entries `(row, col, value)` of the rotated-frame Hamiltonian
/// at time `t`, written into `out` (cleared first).
pub(crate) fn full_hamiltonian_terms(
    p: &AtomParams,
    t: f64,
    out: &mut Vec<(usize, usize, Complex64)>,
) {
    out.clear();
    let ga = Complex64::from_polar(0.5 * p.omega_a, p.delta_a * t);
    let gb = Complex64::from_polar(0.5 * p.omega_b, p.delta_b * t);
    let rot = Complex64::from_polar(1.0, -p.delta_rr * t);
    // atom 1 has stride 3, atom 2 stride 1
    for (stride, other_stride) in [(3usize, 1usize), (1, 3)] {
        for spectator in 0..3 {
            let base = spectator * other_stride;
            let r = base + 2 * stride;
            for (ground, g) in [(0usize, ga), (1, gb)] {
                let row = base + ground * stride;
                let v = if r == RR { g * rot } else { g };
                out.push((row, r, v));
                out.push((r, row, v.conj()));
            }
        }
    }
}

/// Largest absolute row sum of the rotated-frame Hamiltonian; bounds its
/// spectral norm for every `t`.
pub(crate) fn full_hamiltonian_bound(p: &AtomParams) -> f64 {
    let mut rows = [0.0; 9];
    let mut terms = Vec::new();
    full_hamiltonian_terms(p, 0.0, &mut terms);
    for (r, _, v) in terms {
        rows[r] += v.norm();
    }
    rows.iter().fold(0.0, |m: f64, v| m.max(*v))
}

fn single_atom(p: &AtomParams, t: f64) -> Operator {
    let mut h = DMatrix::zeros(3, 3);
    h[(0, 2)] = Complex64::from_polar(0.5 * p.omega_a, p.delta_a * t);
    h[(1, 2)] = Complex64::from_polar(0.5 * p.omega_b, p.delta_b * t);
    h[(2, 0)] = h[(0, 2)].conj();
    h[(2, 1)] = h[(1, 2)].conj();
    Operator::hermitian(Layout::three_level(1), h).expect("hermitian by construction")
}

/// Rotated-frame two-atom Hamiltonian `H″(t)` over
/// `00, 01, 0r, 10, 11, 1r, r0, r1, rr`.
///
/// Built as `h₁ ⊗ I + I ⊗ h₂ + Δ_rr|rr⟩⟨rr|` and rotated by
/// `e^{iΔ_rr t |rr⟩⟨rr|}`, so `⟨x|H″|rr⟩ = ⟨x|H|rr⟩ e^{−iΔ_rr t}` and the
/// `|rr⟩` diagonal vanishes.
pub fn full_hamiltonian(p: &AtomParams, t: f64) -> Operator {
    let h = single_atom(p, t);
    let id = Operator::identity(Layout::three_level(1));
    let mut m = h.tensor(&id).into_matrix() + id.tensor(&h).into_matrix();
    let rot = Complex64::from_polar(1.0, -p.delta_rr * t);
    for x in 0..RR {
        m[(x, RR)] *= rot;
        m[(RR, x)] *= rot.conj();
    }
    Operator::new(pair_layout(), m)
        .expect("9x9")
        .check_hermitian()
}

/// Which effective model to build.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Subspace {
    /// `{00, 01, 10, 11, rr}`
    Full5,
    /// All nine pair states; the single-excitation block is decoupled and
    /// only serves to check that dropping it is exact.
    Extended9,
}

/// Coupling pattern of the five-state effective model in units of `Ω²/Δ`,
/// indexed over `00, 01, 10, 11, rr`.
fn effective_block() -> [[f64; 5]; 5] {
    let mut m = [[0.0; 5]; 5];
    for (i, row) in m.iter_mut().enumerate().take(4) {
        row[i] = 0.5;
    }
    m[4][4] = 1.0;
    for (i, j) in [(0, 1), (0, 2), (3, 1), (3, 2)] {
        m[i][j] = 0.25;
        m[j][i] = 0.25;
    }
    for i in 0..4 {
        m[i][4] = 0.5;
        m[4][i] = 0.5;
    }
    m
}

/// Second-order effective Hamiltonian (requires `omega_a = omega_b`,
/// `delta_a = delta_b`).
///
/// In units of `Ω²/Δ`: every ground pair state carries a Stark shift of ½
/// and `|rr⟩` a shift of 1; pair states differing on one atom couple with ¼;
/// each ground pair state couples to `|rr⟩` with ½. `|00⟩` and `|11⟩` do not
/// couple directly, nor do `|01⟩` and `|10⟩`.
pub fn effective_hamiltonian(p: &AtomParams, subspace: Subspace) -> Result<Operator> {
    p.validate()?;
    if !p.is_symmetric() {
        return Err(Error::AsymmetricParams);
    }
    let k = p.effective_rate();
    let block = effective_block();
    match subspace {
        Subspace::Full5 => {
            let m = DMatrix::from_fn(5, 5, |i, j| Complex64::new(k * block[i][j], 0.0));
            Operator::hermitian(effective_basis(), m)
        }
        Subspace::Extended9 => {
            let comp = [0usize, 1, 3, 4, RR];
            let mut m = DMatrix::zeros(9, 9);
            for (i, &ri) in comp.iter().enumerate() {
                for (j, &cj) in comp.iter().enumerate() {
                    m[(ri, cj)] = Complex64::new(k * block[i][j], 0.0);
                }
            }
            // single-excitation block: 0r=2, 1r=5, r0=6, r1=7
            let (s0r, s1r, sr0, sr1) = (2, 5, 6, 7);
            let mut add = |i: usize, j: usize, v: f64| {
                m[(i, j)] += Complex64::new(k * v, 0.0);
            };
            for pair in [[s0r, s1r], [sr0, sr1]] {
                for &i in &pair {
                    for &j in &pair {
                        add(i, j, -0.5);
                    }
                }
            }
            for &i in &[s0r, s1r] {
                for &j in &[sr0, sr1] {
                    add(i, j, -0.25);
                    add(j, i, -0.25);
                }
            }
            for (i, j) in [(s0r, sr0), (s1r, sr1)] {
                add(i, j, -0.5);
                add(j, i, -0.5);
            }
            Operator::hermitian(pair_layout(), m)
        }
    }
}

/// Closed-form propagator coefficients of the effective model at
/// dimensionless time `theta = Ω² t / Δ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PropagatorCoeffs {
    pub a: Complex64,
    pub b: Complex64,
    pub c: Complex64,
    pub d: Complex64,
    pub theta: f64,
}

/// With `x = e^{−iθ/2}`: `a = (3+4x+x⁴)/8`, `b = (x⁴−1)/8`,
/// `c = (3−4x+x⁴)/8`, `d = (x⁴−1)/4`.
pub fn closed_form_coeffs(theta: f64) -> PropagatorCoeffs {
    let x = Complex64::from_polar(1.0, -0.5 * theta);
    let x4 = Complex64::from_polar(1.0, -2.0 * theta);
    PropagatorCoeffs {
        a: (3.0 + 4.0 * x + x4) / 8.0,
        b: (x4 - 1.0) / 8.0,
        c: (3.0 - 4.0 * x + x4) / 8.0,
        d: (x4 - 1.0) / 4.0,
        theta,
    }
}

impl PropagatorCoeffs {
    /// `|a|² + 2|b|² + |c|² + |d|²`
    pub fn norm_sqr(&self) -> f64 {
        self.a.norm_sqr() + 2.0 * self.b.norm_sqr() + self.c.norm_sqr() + self.d.norm_sqr()
    }

    /// `⟨rr|U|rr⟩ = (1 + x⁴)/2`, the return amplitude of `|rr⟩`.
    pub fn rr_return(&self) -> Complex64 {
        (ONE + Complex64::from_polar(1.0, -2.0 * self.theta)) / 2.0
    }

    /// Output amplitude on pair state `out` (index into `00, 01, 10, 11, rr`)
    /// for computational input `input` (index into `00, 01, 10, 11`).
    pub fn entry(&self, out: usize, input: usize) -> Complex64 {
        if out == 4 {
            return self.d;
        }
        match (out ^ input).count_ones() {
            0 => self.a,
            1 => self.b,
            _ => self.c,
        }
    }

    /// The 5×4 map, columns = inputs `00, 01, 10, 11`, rows = outputs
    /// `00, 01, 10, 11, rr`.
    pub fn map_matrix(&self) -> DMatrix<Complex64> {
        DMatrix::from_fn(5, 4, |i, j| self.entry(i, j))
    }

    /// The full 5×5 propagator over `00, 01, 10, 11, rr`; the `|rr⟩` column
    /// follows from the symmetry of the effective evolution.
    pub fn unitary(&self) -> DMatrix<Complex64> {
        DMatrix::from_fn(5, 5, |i, j| match (i, j) {
            (4, 4) => self.rr_return(),
            (_, 4) => self.d,
            _ => self.entry(i, j),
        })
    }
}

/// Apply the closed-form gate to sites `pair` of `state`.
///
/// Qubit sites are lifted to three levels first. Input must have no weight on
/// pair states containing `r`.
pub fn apply_gate_map(
    coeffs: &PropagatorCoeffs,
    state: &StateVector,
    pair: [usize; 2],
) -> Result<StateVector> {
    let mut full = state.to_product_basis();
    full.layout().check_sites(&pair)?;
    if pair
        .iter()
        .any(|&s| full.layout().sites()[s] == SiteKind::Qubit)
    {
        full = full.embed_three_level(&pair)?;
    }
    let layout = full.layout().clone();
    let strides = layout.strides();
    let (s0, s1) = (strides[pair[0]], strides[pair[1]]);

    let mut out = nalgebra::DVector::from_element(layout.dim(), ZERO);
    let mut outside = 0.0;
    for (i, amp) in full.amplitudes().iter().enumerate() {
        if *amp == ZERO {
            continue;
        }
        let (x, y) = ((i / s0) % 3, (i / s1) % 3);
        if x == 2 || y == 2 {
            outside += amp.norm_sqr();
            continue;
        }
        let base = i - x * s0 - y * s1;
        let input = 2 * x + y;
        for (k, (ox, oy)) in [(0, 0), (0, 1), (1, 0), (1, 1), (2, 2)].iter().enumerate() {
            out[base + ox * s0 + oy * s1] += coeffs.entry(k, input) * amp;
        }
    }
    if outside > 1e-12 {
        return Err(Error::OutsideComputational(outside));
    }
    let result = StateVector::new(layout.clone(), out)?;
    if !state.basis().is_product() && state.layout() == &layout {
        let (restricted, lost) = result.restrict_to(state.basis())?;
        if lost <= 1e-12 {
            return Ok(restricted);
        }
    }
    Ok(result)
}

/// Ideal image of a computational pair input at `θ = π` (global phase
/// dropped): `|xy⟩ → (|xy⟩ + i|x̄ȳ⟩)/√2`.
pub fn ideal_gate_target(basis: &Basis, input: &str) -> Result<StateVector> {
    let label: BasisLabel = input.parse()?;
    if label.len() != 2 || !label.is_computational() {
        return Err(Error::InvalidLabel(input.to_string()));
    }
    let flipped: String = input
        .chars()
        .map(|c| if c == '0' { '1' } else { '0' })
        .collect();
    StateVector::superposition(basis.clone(), &[(ONE, input), (I, flipped.as_str())])
}
