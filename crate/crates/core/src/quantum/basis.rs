//! Basis labels and register layouts.
//!
//! Sites are ordered site-major: site 0 is the most significant digit of the
//! flat index. A two-atom three-level register therefore enumerates
//! `00, 01, 0r, 10, 11, 1r, r0, r1, rr`.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use crate::error::{Error, Result};

/// Single-site level symbol.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Level {
    Zero,
    One,
    Rydberg,
}

impl Level {
    pub fn index(self) -> usize {
        match self {
            Level::Zero => 0,
            Level::One => 1,
            Level::Rydberg => 2,
        }
    }

    pub fn symbol(self) -> char {
        match self {
            Level::Zero => '0',
            Level::One => '1',
            Level::Rydberg => 'r',
        }
    }

    pub fn from_symbol(c: char) -> Option<Self> {
        match c {
            '0' => Some(Level::Zero),
            '1' => Some(Level::One),
            'r' => Some(Level::Rydberg),
            _ => None,
        }
    }

    fn from_index(i: usize) -> Self {
        match i {
            0 => Level::Zero,
            1 => Level::One,
            _ => Level::Rydberg,
        }
    }
}

/// Level structure of one site.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SiteKind {
    /// `{0, 1}`
    Qubit,
    /// `{0, 1, r}`
    ThreeLevel,
}

impl SiteKind {
    pub fn dim(self) -> usize {
        match self {
            SiteKind::Qubit => 2,
            SiteKind::ThreeLevel => 3,
        }
    }

    pub fn allows(self, level: Level) -> bool {
        level.index() < self.dim()
    }
}

/// A sequence of basis symbols, one per site.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct BasisLabel(Vec<Level>);

impl BasisLabel {
    pub fn new(levels: Vec<Level>) -> Self {
        BasisLabel(levels)
    }

    pub fn levels(&self) -> &[Level] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// True when every symbol is `0` or `1`.
    pub fn is_computational(&self) -> bool {
        self.0.iter().all(|l| *l != Level::Rydberg)
    }
}

impl FromStr for BasisLabel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        s.chars()
            .map(|c| Level::from_symbol(c).ok_or_else(|| Error::InvalidLabel(s.to_string())))
            .collect::<Result<Vec<_>>>()
            .map(BasisLabel)
    }
}

impl fmt::Display for BasisLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for l in &self.0 {
            write!(f, "{}", l.symbol())?;
        }
        Ok(())
    }
}

/// Tensor-product layout: the level structure of every site.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Layout {
    sites: Vec<SiteKind>,
}

impl Layout {
    /// An empty layout is the vacuum register (dimension 1).
    pub fn new(sites: Vec<SiteKind>) -> Self {
        Layout { sites }
    }

    pub fn qubits(n: usize) -> Self {
        Layout::new(vec![SiteKind::Qubit; n])
    }

    pub fn three_level(n: usize) -> Self {
        Layout::new(vec![SiteKind::ThreeLevel; n])
    }

    pub fn sites(&self) -> &[SiteKind] {
        &self.sites
    }

    pub fn num_sites(&self) -> usize {
        self.sites.len()
    }

    pub fn dim(&self) -> usize {
        self.sites.iter().map(|s| s.dim()).product()
    }

    /// Stride of each site in the flat index.
    pub fn strides(&self) -> Vec<usize> {
        let mut strides = vec![1; self.sites.len()];
        for i in (0..self.sites.len().saturating_sub(1)).rev() {
            strides[i] = strides[i + 1] * self.sites[i + 1].dim();
        }
        strides
    }

    pub fn index_of(&self, label: &BasisLabel) -> Result<usize> {
        if label.len() != self.sites.len() {
            return Err(Error::InvalidLabel(format!(
                "{label} (expected {} sites)",
                self.sites.len()
            )));
        }
        let mut idx = 0;
        for (kind, level) in self.sites.iter().zip(label.levels()) {
            if !kind.allows(*level) {
                return Err(Error::InvalidLabel(format!(
                    "{label} (symbol {} not allowed on {kind:?} site)",
                    level.symbol()
                )));
            }
            idx = idx * kind.dim() + level.index();
        }
        Ok(idx)
    }

    pub fn label_of(&self, mut index: usize) -> BasisLabel {
        let mut levels = vec![Level::Zero; self.sites.len()];
        for (slot, kind) in levels.iter_mut().zip(&self.sites).rev() {
            *slot = Level::from_index(index % kind.dim());
            index /= kind.dim();
        }
        BasisLabel(levels)
    }

    pub fn concat(&self, other: &Layout) -> Layout {
        let mut sites = self.sites.clone();
        sites.extend_from_slice(&other.sites);
        Layout::new(sites)
    }

    /// Layout with the given sites removed.
    pub fn without(&self, removed: &[usize]) -> Layout {
        Layout::new(
            self.sites
                .iter()
                .enumerate()
                .filter(|(i, _)| !removed.contains(i))
                .map(|(_, s)| *s)
                .collect(),
        )
    }

    /// Layout with the given sites replaced by `kind`.
    pub fn with_kind(&self, sites: &[usize], kind: SiteKind) -> Layout {
        let mut out = self.sites.clone();
        for &s in sites {
            out[s] = kind;
        }
        Layout::new(out)
    }

    pub(crate) fn check_sites(&self, sites: &[usize]) -> Result<()> {
        for (i, &s) in sites.iter().enumerate() {
            if s >= self.sites.len() {
                return Err(Error::InvalidSites(format!(
                    "site {s} out of range for {} sites",
                    self.sites.len()
                )));
            }
            if sites[..i].contains(&s) {
                return Err(Error::InvalidSites(format!("site {s} listed twice")));
            }
        }
        Ok(())
    }
}

/// The basis an amplitude vector or matrix is indexed by: either the full
/// product basis of a layout or an ordered subset of it (e.g. the five
/// states `00, 01, 10, 11, rr` of the effective model).
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Basis {
    layout: Layout,
    subset: Option<Arc<[usize]>>,
}

impl Basis {
    pub fn product(layout: Layout) -> Self {
        Basis {
            layout,
            subset: None,
        }
    }

    /// Subset of the product basis; labels must be distinct and given in
    /// increasing basis order.
    pub fn subset(layout: Layout, labels: &[BasisLabel]) -> Result<Self> {
        let indices = labels
            .iter()
            .map(|l| layout.index_of(l))
            .collect::<Result<Vec<_>>>()?;
        if indices.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidLabel(
                "subset labels must be strictly increasing".into(),
            ));
        }
        Ok(Basis {
            layout,
            subset: Some(indices.into()),
        })
    }

    pub(crate) fn from_indices(layout: Layout, indices: Vec<usize>) -> Self {
        if indices.len() == layout.dim() {
            Basis::product(layout)
        } else {
            Basis {
                layout,
                subset: Some(indices.into()),
            }
        }
    }

    pub fn layout(&self) -> &Layout {
        &self.layout
    }

    pub fn is_product(&self) -> bool {
        self.subset.is_none()
    }

    pub fn dim(&self) -> usize {
        match &self.subset {
            Some(s) => s.len(),
            None => self.layout.dim(),
        }
    }

    pub fn num_sites(&self) -> usize {
        self.layout.num_sites()
    }

    /// Flat product-layout index of basis vector `i`.
    pub fn layout_index(&self, i: usize) -> usize {
        match &self.subset {
            Some(s) => s[i],
            None => i,
        }
    }

    pub fn label(&self, i: usize) -> BasisLabel {
        self.layout.label_of(self.layout_index(i))
    }

    pub fn index_of(&self, label: &BasisLabel) -> Result<usize> {
        let full = self.layout.index_of(label)?;
        match &self.subset {
            None => Ok(full),
            Some(s) => s
                .binary_search(&full)
                .map_err(|_| Error::InvalidLabel(format!("{label} is not in this basis"))),
        }
    }

    pub fn labels(&self) -> impl Iterator<Item = BasisLabel> + '_ {
        (0..self.dim()).map(move |i| self.label(i))
    }

    pub fn tensor(&self, other: &Basis) -> Basis {
        let layout = self.layout.concat(&other.layout);
        if self.is_product() && other.is_product() {
            return Basis::product(layout);
        }
        let db = other.layout.dim();
        let indices = (0..self.dim())
            .flat_map(|i| {
                let a = self.layout_index(i);
                (0..other.dim()).map(move |j| (a, j))
            })
            .map(|(a, j)| a * db + other.layout_index(j))
            .collect();
        Basis::from_indices(layout, indices)
    }
}

impl From<Layout> for Basis {
    fn from(layout: Layout) -> Self {
        Basis::product(layout)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_atom_ordering_matches_level_list() {
        let layout = Layout::three_level(2);
        let labels: Vec<String> = (0..9).map(|i| layout.label_of(i).to_string()).collect();
        assert_eq!(
            labels,
            ["00", "01", "0r", "10", "11", "1r", "r0", "r1", "rr"]
        );
    }

    #[test]
    fn label_round_trip_mixed_layout() {
        let layout = Layout::new(vec![SiteKind::Qubit, SiteKind::ThreeLevel, SiteKind::Qubit]);
        assert_eq!(layout.dim(), 12);
        for i in 0..12 {
            assert_eq!(layout.index_of(&layout.label_of(i)).unwrap(), i);
        }
    }

    #[test]
    fn rydberg_symbol_rejected_on_qubit() {
        let layout = Layout::qubits(2);
        let label: BasisLabel = "0r".parse().unwrap();
        assert!(layout.index_of(&label).is_err());
        assert!("0x".parse::<BasisLabel>().is_err());
    }

    #[test]
    fn subset_lookup() {
        let labels: Vec<BasisLabel> = ["00", "01", "10", "11", "rr"]
            .iter()
            .map(|s| s.parse().unwrap())
            .collect();
        let basis = Basis::subset(Layout::three_level(2), &labels).unwrap();
        assert_eq!(basis.dim(), 5);
        assert_eq!(basis.index_of(&"rr".parse().unwrap()).unwrap(), 4);
        assert!(basis.index_of(&"0r".parse().unwrap()).is_err());
        assert_eq!(basis.label(2).to_string(), "10");
    }

    #[test]
    fn duplicate_sites_rejected() {
        assert!(Layout::qubits(3).check_sites(&[0, 0]).is_err());
        assert!(Layout::qubits(3).check_sites(&[3]).is_err());
        assert!(Layout::qubits(3).check_sites(&[2, 0]).is_ok());
    }
}
