//! Factor spaces of discrete graphical models.
//!
//! For variables `(E_i, i ∈ I)` a function on `E_I = Π E_i` is *cylindric* in
//! `a ⊆ I` when it depends only on the coordinates in `a`. These factor
//! spaces form a family over the power set of `I` that always decomposes;
//! its pieces are the classical interaction spaces, of dimension
//! `Π_{i∈a}(|E_i| − 1)`. A strictly positive law `P` is a Gibbs state for
//! the hierarchical model `A` exactly when `ln P` has no component in the
//! pieces outside the lower-set closure of `A`.
//!
//! Subsets of variables are bit masks: bit `i` stands for the `i`-th
//! variable. States are flattened row-major with the first variable slowest.

use std::collections::BTreeMap;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::interaction::{self, Decomposition, SubspaceFamily};
use crate::linalg::{join, AmbientSpace, Subspace};
use crate::poset::Poset;
use crate::tolerance::{Limits, Tolerance};

/// Relative threshold of the factorization test, scaled by `‖ln P‖`.
pub const DEFAULT_FACTOR_TOL: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteModel {
    names: Vec<String>,
    cards: Vec<usize>,
    size: usize,
}

impl DiscreteModel {
    pub fn new(variables: Vec<(String, usize)>, limits: &Limits) -> Result<Self> {
        if variables.len() > 16 {
            return Err(Error::Invalid(format!(
                "{} variables; at most 16 are supported",
                variables.len()
            )));
        }
        let mut names = Vec::with_capacity(variables.len());
        let mut cards = Vec::with_capacity(variables.len());
        let mut size: usize = 1;
        for (name, card) in variables {
            if names.contains(&name) {
                return Err(Error::DuplicateElement(name));
            }
            if card == 0 {
                return Err(Error::Invalid(format!("variable `{name}` has no states")));
            }
            size = size.saturating_mul(card);
            names.push(name);
            cards.push(card);
        }
        if size > limits.max_states {
            return Err(Error::StateSpaceTooLarge {
                size,
                cap: limits.max_states,
            });
        }
        Ok(Self { names, cards, size })
    }

    /// Variables named `"1"`, `"2"`, ... with the given state counts.
    pub fn with_cards(cards: &[usize]) -> Result<Self> {
        let vars = cards
            .iter()
            .enumerate()
            .map(|(i, &c)| ((i + 1).to_string(), c))
            .collect();
        Self::new(vars, &Limits::default())
    }

    pub fn num_vars(&self) -> usize {
        self.cards.len()
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn cards(&self) -> &[usize] {
        &self.cards
    }

    pub fn full_mask(&self) -> u32 {
        ((1u64 << self.num_vars()) - 1) as u32
    }

    pub fn index_of(&self, name: &str) -> Result<usize> {
        self.names
            .iter()
            .position(|n| n == name)
            .ok_or_else(|| Error::UnknownVariable(name.to_owned()))
    }

    pub fn mask_of<S: AsRef<str>>(&self, names: &[S]) -> Result<u32> {
        names
            .iter()
            .try_fold(0u32, |m, n| Ok(m | 1 << self.index_of(n.as_ref())?))
    }

    pub fn check_mask(&self, mask: u32) -> Result<()> {
        if mask & !self.full_mask() != 0 {
            return Err(Error::UnknownVariable(format!("#{}", 31 - mask.leading_zeros())));
        }
        Ok(())
    }

    /// Coordinates of the flat state index.
    pub fn state(&self, mut index: usize) -> Vec<usize> {
        let mut out = vec![0; self.num_vars()];
        for i in (0..self.num_vars()).rev() {
            out[i] = index % self.cards[i];
            index /= self.cards[i];
        }
        out
    }

    /// `|E_a|`.
    pub fn marginal_size(&self, mask: u32) -> usize {
        (0..self.num_vars())
            .filter(|i| mask >> i & 1 == 1)
            .map(|i| self.cards[i])
            .product()
    }

    /// Index of `p_a(x)` in `E_a`, flattened in the same variable order.
    pub fn marginal_index(&self, mask: u32, index: usize) -> usize {
        let s = self.state(index);
        (0..self.num_vars())
            .filter(|i| mask >> i & 1 == 1)
            .fold(0, |acc, i| acc * self.cards[i] + s[i])
    }

    pub fn ambient(&self, tol: Tolerance) -> Arc<AmbientSpace> {
        AmbientSpace::euclidean(self.size, tol)
    }

    /// Power-set poset of the variables; element index equals the mask.
    pub fn power_set(&self) -> Poset {
        Poset::power_set(&self.names).expect("at most 16 variables")
    }
}

/// The `a`-factor subspace of functions on `E_I` that depend only on the
/// coordinates in `mask`.
pub fn factor_subspace(
    model: &DiscreteModel,
    ambient: &Arc<AmbientSpace>,
    mask: u32,
) -> Result<Subspace> {
    model.check_mask(mask)?;
    if ambient.dim() != model.size() || !ambient.is_euclidean() {
        return Err(Error::AmbientMismatch);
    }
    // Cylinder indicators are orthogonal; normalising them gives a basis.
    let k = model.marginal_size(mask);
    let mut basis = DMatrix::zeros(model.size(), k);
    for x in 0..model.size() {
        basis[(x, model.marginal_index(mask, x))] = 1.0;
    }
    for mut col in basis.column_iter_mut() {
        let n = col.norm();
        col /= n;
    }
    Ok(Subspace::from_white(ambient, &basis))
}

/// The factor spaces `(V(a), a ⊆ I)` over the power set.
pub fn factor_family(model: &DiscreteModel, tol: Tolerance) -> Result<SubspaceFamily> {
    let amb = model.ambient(tol);
    let spaces = (0..=model.full_mask())
        .map(|m| factor_subspace(model, &amb, m))
        .collect::<Result<Vec<_>>>()?;
    SubspaceFamily::new(model.power_set(), amb, spaces)
}

/// Masks in the lower-set closure of `classes`.
pub fn lower_closure(model: &DiscreteModel, classes: &[u32]) -> Result<Vec<u32>> {
    for &c in classes {
        model.check_mask(c)?;
    }
    Ok((0..=model.full_mask())
        .filter(|&m| classes.iter().any(|&c| m & !c == 0))
        .collect())
}

/// `H_A = Σ_{a∈A} V(a)`.
pub fn hierarchical_subspace(
    model: &DiscreteModel,
    ambient: &Arc<AmbientSpace>,
    classes: &[u32],
) -> Result<Subspace> {
    let spaces = classes
        .iter()
        .map(|&c| factor_subspace(model, ambient, c))
        .collect::<Result<Vec<_>>>()?;
    join(ambient, spaces.iter())
}

#[derive(Debug, Clone)]
pub struct Potential {
    model: DiscreteModel,
    terms: BTreeMap<u32, DVector<f64>>,
}

impl Potential {
    pub fn new(model: DiscreteModel) -> Self {
        Self {
            model,
            terms: BTreeMap::new(),
        }
    }

    pub fn model(&self) -> &DiscreteModel {
        &self.model
    }

    /// Sets `φ_a`, a function on `E_a` flattened like the full state space.
    pub fn set_term(&mut self, mask: u32, values: DVector<f64>) -> Result<()> {
        self.model.check_mask(mask)?;
        let k = self.model.marginal_size(mask);
        if values.len() != k {
            return Err(Error::DimensionMismatch {
                expected: k,
                found: values.len(),
            });
        }
        self.terms.insert(mask, values);
        Ok(())
    }

    pub fn terms(&self) -> impl Iterator<Item = (u32, &DVector<f64>)> {
        self.terms.iter().map(|(&m, v)| (m, v))
    }

    /// `Σ_a φ_a ∘ p_a` as a vector on `E_I`.
    pub fn energy(&self) -> DVector<f64> {
        DVector::from_fn(self.model.size(), |x, _| {
            self.terms
                .iter()
                .map(|(&m, v)| v[self.model.marginal_index(m, x)])
                .sum()
        })
    }
}

#[derive(Debug, Clone)]
pub struct GibbsState {
    model: DiscreteModel,
    probs: DVector<f64>,
}

impl GibbsState {
    pub fn new(model: DiscreteModel, probs: DVector<f64>) -> Result<Self> {
        if probs.len() != model.size() {
            return Err(Error::DimensionMismatch {
                expected: model.size(),
                found: probs.len(),
            });
        }
        if let Some((index, &value)) = probs.iter().enumerate().find(|(_, p)| !(**p > 0.0)) {
            return Err(Error::NonPositiveProbability { index, value });
        }
        let total = probs.sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::Invalid(format!(
                "probabilities sum to {total}, not 1"
            )));
        }
        Ok(Self { model, probs })
    }

    pub fn model(&self) -> &DiscreteModel {
        &self.model
    }

    pub fn probs(&self) -> &DVector<f64> {
        &self.probs
    }

    pub fn log_probs(&self) -> DVector<f64> {
        self.probs.map(f64::ln)
    }
}

pub fn gibbs_from_potential(pot: &Potential) -> GibbsState {
    let e = pot.energy();
    let m = e.max();
    let w = e.map(|v| (v - m).exp());
    let probs = &w / w.sum();
    GibbsState {
        model: pot.model.clone(),
        probs,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct InteractionNorm {
    pub mask: u32,
    pub in_model: bool,
    pub norm: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FactorizationReport {
    pub factorizes: bool,
    /// `‖s_a^⊥ ln P‖` for every `a ⊆ I`.
    pub norms: Vec<InteractionNorm>,
    pub max_off_model: f64,
    pub threshold: f64,
}

/// Tests whether `P` lies in the hierarchical model generated by `classes`.
pub fn factorization_test(
    p: &GibbsState,
    classes: &[u32],
    rel_tol: f64,
) -> Result<FactorizationReport> {
    let fam = factor_family(p.model(), Tolerance::default())?;
    let dec = interaction::decompose(&fam).map_err(|f| {
        Error::Invalid(format!(
            "factor family failed to decompose (gap {:.3e})",
            f.report.max_gap
        ))
    })?;
    factorization_test_with(p, classes, rel_tol, &dec)
}

/// As [`factorization_test`] with a precomputed factor-family decomposition.
pub fn factorization_test_with(
    p: &GibbsState,
    classes: &[u32],
    rel_tol: f64,
    dec: &Decomposition,
) -> Result<FactorizationReport> {
    let model = p.model();
    let closure = lower_closure(model, classes)?;
    let lnp = p.log_probs();
    let threshold = rel_tol * lnp.norm();
    let mut norms = Vec::with_capacity(model.full_mask() as usize + 1);
    let mut max_off: f64 = 0.0;
    for mask in 0..=model.full_mask() {
        let piece = dec.piece(mask as usize).white_basis();
        let norm = (piece.transpose() * &lnp).norm();
        let in_model = closure.contains(&mask);
        if !in_model {
            max_off = max_off.max(norm);
        }
        norms.push(InteractionNorm {
            mask,
            in_model,
            norm,
        });
    }
    Ok(FactorizationReport {
        factorizes: max_off <= threshold,
        norms,
        max_off_model: max_off,
        threshold,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::interaction::{check_intersection_property, meet_semilattice_shortcut};

    fn tol() -> Tolerance {
        Tolerance::default()
    }

    #[test]
    fn factor_subspace_dims() {
        let m = DiscreteModel::with_cards(&[2, 2]).unwrap();
        let amb = m.ambient(tol());
        assert_eq!(factor_subspace(&m, &amb, 0).unwrap().dim(), 1);
        assert_eq!(factor_subspace(&m, &amb, 0b01).unwrap().dim(), 2);
        assert_eq!(factor_subspace(&m, &amb, 0b11).unwrap().dim(), 4);
        assert!(matches!(
            factor_subspace(&m, &amb, 0b100),
            Err(Error::UnknownVariable(_))
        ));
        // Cylinders in the first variable: x ↦ f(x_1), first variable slowest.
        let v1 = factor_subspace(&m, &amb, 0b01).unwrap();
        let cyl = DMatrix::from_column_slice(4, 2, &[1., 1., 0., 0., 0., 0., 1., 1.]);
        let expected = Subspace::span(&amb, &cyl).unwrap();
        assert!(v1.approx_eq(&expected).unwrap());
    }

    #[test]
    fn factor_family_dims() {
        let fam = factor_family(&DiscreteModel::with_cards(&[2]).unwrap(), tol()).unwrap();
        assert_eq!(fam.spaces().iter().map(|s| s.dim()).collect::<Vec<_>>(), [1, 2]);
        let fam = factor_family(&DiscreteModel::with_cards(&[2, 2]).unwrap(), tol()).unwrap();
        assert_eq!(
            fam.spaces().iter().map(|s| s.dim()).collect::<Vec<_>>(),
            [1, 2, 2, 4]
        );
        assert!(meet_semilattice_shortcut(&fam).unwrap().holds);
    }

    #[test]
    fn three_binary_variables_decompose() {
        let fam = factor_family(&DiscreteModel::with_cards(&[2, 2, 2]).unwrap(), tol()).unwrap();
        assert!(check_intersection_property(&fam).holds);
        let dec = interaction::decompose(&fam).unwrap();
        assert_eq!(dec.dims()[..8], [1; 8]);
    }

    #[test]
    fn piece_dims_follow_product_formula() {
        let m = DiscreteModel::with_cards(&[2, 3, 4]).unwrap();
        let dec = interaction::decompose(&factor_family(&m, tol()).unwrap()).unwrap();
        let dims = dec.dims();
        for mask in 0..8u32 {
            let expected: usize = (0..3)
                .filter(|i| mask >> i & 1 == 1)
                .map(|i| m.cards()[i] - 1)
                .product();
            assert_eq!(dims[mask as usize], expected, "mask {mask:03b}");
        }
        assert_eq!(dims[..8].iter().sum::<usize>(), 24);
        assert_eq!(dims[8], 0);
    }

    #[test]
    fn hierarchical_examples() {
        let m = DiscreteModel::with_cards(&[2, 2, 2]).unwrap();
        let amb = m.ambient(tol());
        assert_eq!(hierarchical_subspace(&m, &amb, &[0b111]).unwrap().dim(), 8);
        assert_eq!(hierarchical_subspace(&m, &amb, &[0]).unwrap().dim(), 1);
        let pairs = hierarchical_subspace(&m, &amb, &[0b011, 0b101, 0b110]).unwrap();
        assert_eq!(pairs.dim(), 7);
        assert_eq!(lower_closure(&m, &[0b011]).unwrap(), vec![0, 1, 2, 3]);
    }

    #[test]
    fn gibbs_examples() {
        let m = DiscreteModel::with_cards(&[2, 2]).unwrap();
        let g = gibbs_from_potential(&Potential::new(m));
        assert!(g.probs().iter().all(|&p| (p - 0.25).abs() < 1e-15));

        let m = DiscreteModel::with_cards(&[2]).unwrap();
        let mut pot = Potential::new(m);
        pot.set_term(1, DVector::from_column_slice(&[0.0, 3f64.ln()])).unwrap();
        let g = gibbs_from_potential(&pot);
        assert!((g.probs()[0] - 0.25).abs() < 1e-15);
        assert!((g.probs()[1] - 0.75).abs() < 1e-15);
        assert!(pot.set_term(1, DVector::zeros(3)).is_err());
    }

    #[test]
    fn gibbs_state_validation() {
        let m = DiscreteModel::with_cards(&[2]).unwrap();
        let bad = GibbsState::new(m.clone(), DVector::from_column_slice(&[0.0, 1.0]));
        assert!(matches!(bad, Err(Error::NonPositiveProbability { index: 0, .. })));
        let bad = GibbsState::new(m, DVector::from_column_slice(&[0.5, 0.6]));
        assert!(matches!(bad, Err(Error::Invalid(_))));
    }

    #[test]
    fn uniform_and_product_laws() {
        let m = DiscreteModel::with_cards(&[2, 3]).unwrap();
        let uniform = gibbs_from_potential(&Potential::new(m.clone()));
        assert!(factorization_test(&uniform, &[0], DEFAULT_FACTOR_TOL).unwrap().factorizes);

        let (p1, p2) = ([0.3, 0.7], [0.2, 0.5, 0.3]);
        let probs = DVector::from_fn(6, |x, _| p1[x / 3] * p2[x % 3]);
        let product = GibbsState::new(m, probs).unwrap();
        let rep = factorization_test(&product, &[0b01, 0b10], DEFAULT_FACTOR_TOL).unwrap();
        assert!(rep.factorizes);
        let rep = factorization_test(&product, &[0b01], DEFAULT_FACTOR_TOL).unwrap();
        assert!(!rep.factorizes);
    }

    #[test]
    fn pairwise_potential_round_trip() {
        let m = DiscreteModel::with_cards(&[2, 2, 2]).unwrap();
        let mut pot = Potential::new(m);
        pot.set_term(0b011, DVector::from_column_slice(&[0.1, -0.4, 0.7, 0.2])).unwrap();
        pot.set_term(0b110, DVector::from_column_slice(&[-0.3, 0.5, 0.0, 0.9])).unwrap();
        pot.set_term(0b101, DVector::from_column_slice(&[0.6, 0.1, -0.2, 0.3])).unwrap();
        let g = gibbs_from_potential(&pot);
        let pairs = [0b011, 0b101, 0b110];
        let rep = factorization_test(&g, &pairs, DEFAULT_FACTOR_TOL).unwrap();
        assert!(rep.factorizes, "{rep:?}");
        assert!(rep.norms[7].norm <= rep.threshold);
        assert!(rep.norms[0b101].norm > 1e-3);
        assert!(!factorization_test(&g, &[0b011, 0b110], DEFAULT_FACTOR_TOL).unwrap().factorizes);
    }
}
