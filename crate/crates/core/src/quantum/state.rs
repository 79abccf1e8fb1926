use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use super::basis::{Basis, BasisLabel, Layout, SiteKind};
use crate::error::{Error, Result};

/// Pure state: complex amplitudes over a labeled basis.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    basis: Basis,
    amps: DVector<Complex64>,
}

/// Result of a projective measurement on a subset of sites.
#[derive(Debug, Clone, PartialEq)]
pub struct Projection {
    pub probability: f64,
    /// Renormalized state of the unmeasured sites; `None` when the outcome
    /// has zero probability.
    pub collapsed: Option<StateVector>,
}

impl StateVector {
    pub fn new(basis: impl Into<Basis>, amps: DVector<Complex64>) -> Result<Self> {
        let basis = basis.into();
        if basis.dim() != amps.len() {
            return Err(Error::DimensionMismatch {
                expected: basis.dim(),
                found: amps.len(),
            });
        }
        Ok(StateVector { basis, amps })
    }

    pub fn from_amplitudes(basis: impl Into<Basis>, amps: Vec<Complex64>) -> Result<Self> {
        Self::new(basis, DVector::from_vec(amps))
    }

    pub fn zeros(basis: impl Into<Basis>) -> Self {
        let basis = basis.into();
        let amps = DVector::zeros(basis.dim());
        StateVector { basis, amps }
    }

    pub fn basis_state(basis: impl Into<Basis>, label: &BasisLabel) -> Result<Self> {
        let mut out = Self::zeros(basis);
        let i = out.basis.index_of(label)?;
        out.amps[i] = Complex64::new(1.0, 0.0);
        Ok(out)
    }

    /// Basis state from a label string over `layout`, e.g. `"0r"`.
    pub fn from_label(layout: &Layout, label: &str) -> Result<Self> {
        Self::basis_state(layout.clone(), &label.parse()?)
    }

    /// Normalized superposition `Σ c_k |label_k⟩`.
    pub fn superposition(
        basis: impl Into<Basis>,
        terms: &[(Complex64, &str)],
    ) -> Result<Self> {
        let mut out = Self::zeros(basis);
        for (c, label) in terms {
            let i = out.basis.index_of(&label.parse()?)?;
            out.amps[i] += c;
        }
        out.normalized()
    }

    pub fn basis(&self) -> &Basis {
        &self.basis
    }

    pub fn layout(&self) -> &Layout {
        self.basis.layout()
    }

    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    pub fn amplitudes(&self) -> &DVector<Complex64> {
        &self.amps
    }

    pub fn into_amplitudes(self) -> DVector<Complex64> {
        self.amps
    }

    pub fn amplitude(&self, label: &str) -> Result<Complex64> {
        Ok(self.amps[self.basis.index_of(&label.parse()?)?])
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum()
    }

    pub fn normalized(mut self) -> Result<Self> {
        let n = self.norm_sqr().sqrt();
        if n == 0.0 {
            return Err(Error::ZeroNorm);
        }
        self.amps.unscale_mut(n);
        Ok(self)
    }

    pub fn scaled(mut self, c: Complex64) -> Self {
        self.amps *= c;
        self
    }

    /// `⟨self|other⟩`
    pub fn inner(&self, other: &StateVector) -> Result<Complex64> {
        self.check_same_basis(other)?;
        Ok(self.amps.dotc(&other.amps))
    }

    pub(crate) fn check_same_basis(&self, other: &StateVector) -> Result<()> {
        if self.dim() != other.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: other.dim(),
            });
        }
        Ok(())
    }

    /// Kronecker product, `self` occupying the leading sites.
    pub fn tensor(&self, other: &StateVector) -> StateVector {
        StateVector {
            basis: self.basis.tensor(&other.basis),
            amps: self.amps.kronecker(&other.amps),
        }
    }

    /// `|ψ⟩⟨ψ|`
    pub fn outer(&self) -> DMatrix<Complex64> {
        &self.amps * self.amps.adjoint()
    }

    /// Re-express the state over the full product basis of its layout.
    pub fn to_product_basis(&self) -> StateVector {
        if self.basis.is_product() {
            return self.clone();
        }
        let layout = self.layout().clone();
        let mut amps = DVector::zeros(layout.dim());
        for (i, a) in self.amps.iter().enumerate() {
            amps[self.basis.layout_index(i)] = *a;
        }
        StateVector {
            basis: Basis::product(layout),
            amps,
        }
    }

    /// Restrict to `basis`, which must share this state's layout. Returns the
    /// restricted state and the weight that was discarded.
    pub fn restrict_to(&self, basis: &Basis) -> Result<(StateVector, f64)> {
        if basis.layout() != self.layout() {
            return Err(Error::InvalidSites("restriction changes the layout".into()));
        }
        let full = self.to_product_basis();
        let amps = DVector::from_iterator(
            basis.dim(),
            (0..basis.dim()).map(|i| full.amps[basis.layout_index(i)]),
        );
        let kept: f64 = amps.iter().map(|a| a.norm_sqr()).sum();
        let lost = (full.norm_sqr() - kept).max(0.0);
        Ok((
            StateVector {
                basis: basis.clone(),
                amps,
            },
            lost,
        ))
    }

    /// Lift the given qubit sites to three-level sites (amplitudes unchanged,
    /// `|r⟩` components zero).
    pub fn embed_three_level(&self, sites: &[usize]) -> Result<StateVector> {
        let full = self.to_product_basis();
        full.layout().check_sites(sites)?;
        let layout = full.layout().with_kind(sites, SiteKind::ThreeLevel);
        let mut amps = DVector::zeros(layout.dim());
        for (i, a) in full.amps.iter().enumerate() {
            if *a != Complex64::new(0.0, 0.0) {
                amps[layout.index_of(&full.layout().label_of(i))?] = *a;
            }
        }
        Ok(StateVector {
            basis: Basis::product(layout),
            amps,
        })
    }

    /// Apply a single-site operator (`k × k` for a `k`-level site).
    pub fn apply_local(&self, site: usize, op: &DMatrix<Complex64>) -> Result<StateVector> {
        let full = self.to_product_basis();
        let layout = full.layout().clone();
        layout.check_sites(&[site])?;
        let k = layout.sites()[site].dim();
        if op.nrows() != k || op.ncols() != k {
            return Err(Error::DimensionMismatch {
                expected: k,
                found: op.nrows(),
            });
        }
        let stride = layout.strides()[site];
        let mut amps = DVector::zeros(layout.dim());
        for i in 0..layout.dim() {
            let level = (i / stride) % k;
            let base = i - level * stride;
            for (out_level, row) in op.column(level).iter().enumerate() {
                amps[base + out_level * stride] += row * full.amps[i];
            }
        }
        Ok(StateVector {
            basis: Basis::product(layout),
            amps,
        })
    }

    /// Measure `sites` in the level basis with the given outcome.
    ///
    /// The measured sites are removed from the returned register.
    pub fn project(&self, sites: &[usize], outcome: &BasisLabel) -> Result<Projection> {
        if outcome.len() != sites.len() {
            return Err(Error::OutcomeLength {
                expected: sites.len(),
                found: outcome.len(),
            });
        }
        let layout = self.layout();
        layout.check_sites(sites)?;
        for (&s, l) in sites.iter().zip(outcome.levels()) {
            if !layout.sites()[s].allows(*l) {
                return Err(Error::InvalidLabel(outcome.to_string()));
            }
        }
        let rest_layout = layout.without(sites);
        let keep: Vec<usize> = (0..layout.num_sites())
            .filter(|s| !sites.contains(s))
            .collect();

        let mut indices = Vec::new();
        let mut amps = Vec::new();
        for i in 0..self.dim() {
            let label = self.basis.label(i);
            let levels = label.levels();
            if sites
                .iter()
                .zip(outcome.levels())
                .all(|(&s, l)| levels[s] == *l)
            {
                let rest = BasisLabel::new(keep.iter().map(|&s| levels[s]).collect());
                indices.push(rest_layout.index_of(&rest)?);
                amps.push(self.amps[i]);
            }
        }
        let probability: f64 = amps.iter().map(|a| a.norm_sqr()).sum();
        if probability == 0.0 {
            return Ok(Projection {
                probability,
                collapsed: None,
            });
        }
        let basis = if self.basis.is_product() {
            Basis::product(rest_layout)
        } else {
            Basis::from_indices(rest_layout, indices)
        };
        let norm = probability.sqrt();
        let collapsed = StateVector {
            basis,
            amps: DVector::from_iterator(amps.len(), amps.into_iter().map(|a| a / norm)),
        };
        Ok(Projection {
            probability,
            collapsed: Some(collapsed),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::FRAC_1_SQRT_2;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn product_of_ground_states() {
        let zero = StateVector::from_label(&Layout::three_level(1), "0").unwrap();
        let pair = zero.tensor(&zero);
        assert_eq!(pair.dim(), 9);
        assert_eq!(pair.amplitudes()[0], c(1.0, 0.0));
        assert_eq!(pair.amplitude("00").unwrap(), c(1.0, 0.0));
    }

    #[test]
    fn bell_projection_to_vacuum() {
        let bell = StateVector::superposition(
            Layout::qubits(2),
            &[(c(1.0, 0.0), "00"), (c(0.0, 1.0), "11")],
        )
        .unwrap();
        let p = bell.project(&[0, 1], &"00".parse().unwrap()).unwrap();
        assert!((p.probability - 0.5).abs() < 1e-15);
        let vac = p.collapsed.unwrap();
        assert_eq!(vac.dim(), 1);
        assert_eq!(vac.layout().num_sites(), 0);
        assert!((vac.norm_sqr() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn zero_probability_outcome_has_no_state() {
        let s = StateVector::from_label(&Layout::qubits(2), "00").unwrap();
        let p = s.project(&[1], &"1".parse().unwrap()).unwrap();
        assert_eq!(p.probability, 0.0);
        assert!(p.collapsed.is_none());
    }

    #[test]
    fn outcome_length_checked() {
        let s = StateVector::from_label(&Layout::qubits(2), "00").unwrap();
        let err = s.project(&[0, 1], &"0".parse().unwrap()).unwrap_err();
        assert_eq!(err, Error::OutcomeLength { expected: 2, found: 1 });
        assert!(s.project(&[1, 1], &"00".parse().unwrap()).is_err());
    }

    #[test]
    fn projection_keeps_remaining_order() {
        // (|010> + |111>)/√2, measure middle site -> 1, remaining (|00> + |11>)/√2
        let s = StateVector::superposition(
            Layout::qubits(3),
            &[(c(1.0, 0.0), "010"), (c(1.0, 0.0), "111")],
        )
        .unwrap();
        let p = s.project(&[1], &"1".parse().unwrap()).unwrap();
        let rest = p.collapsed.unwrap();
        assert!((rest.amplitude("00").unwrap().re - FRAC_1_SQRT_2).abs() < 1e-15);
        assert!((rest.amplitude("11").unwrap().re - FRAC_1_SQRT_2).abs() < 1e-15);
    }

    #[test]
    fn embed_preserves_amplitudes() {
        let s = StateVector::superposition(
            Layout::qubits(3),
            &[(c(1.0, 0.0), "001"), (c(0.0, 1.0), "110")],
        )
        .unwrap();
        let e = s.embed_three_level(&[2]).unwrap();
        assert_eq!(e.dim(), 12);
        assert_eq!(e.amplitude("001").unwrap(), s.amplitude("001").unwrap());
        assert_eq!(e.amplitude("110").unwrap(), s.amplitude("110").unwrap());
        assert_eq!(e.amplitude("00r").unwrap(), c(0.0, 0.0));
    }

    #[test]
    fn local_phase_gate() {
        let s = StateVector::superposition(
            Layout::qubits(2),
            &[(c(1.0, 0.0), "00"), (c(1.0, 0.0), "11")],
        )
        .unwrap();
        let sgate = DMatrix::from_diagonal(&DVector::from_vec(vec![c(1.0, 0.0), c(0.0, 1.0)]));
        let out = s.apply_local(1, &sgate).unwrap();
        assert!((out.amplitude("11").unwrap() - c(0.0, FRAC_1_SQRT_2)).norm() < 1e-15);
        assert!((out.amplitude("00").unwrap() - c(FRAC_1_SQRT_2, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn restriction_reports_lost_weight() {
        let s = StateVector::superposition(
            Layout::three_level(2),
            &[(c(1.0, 0.0), "00"), (c(1.0, 0.0), "0r")],
        )
        .unwrap();
        let labels: Vec<BasisLabel> = ["00", "11"].iter().map(|l| l.parse().unwrap()).collect();
        let basis = Basis::subset(Layout::three_level(2), &labels).unwrap();
        let (r, lost) = s.restrict_to(&basis).unwrap();
        assert_eq!(r.dim(), 2);
        assert!((lost - 0.5).abs() < 1e-15);
    }
}
