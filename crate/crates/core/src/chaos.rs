//! Wiener chaos of a finite centred Gaussian vector.
//!
//! Polynomials in the coordinates `φ(s)` of a Gaussian vector are handled in
//! monomial coordinates, with the inner product `E[Ψ(x)Ψ(y)]` given by Wick's
//! pairing formula. `H(m)` is the span of monomials of degree at most `m`;
//! the chaos pieces `S_m = H(m) ∩ H(m−1)^⊥` are the interaction spaces of
//! that chain and the component of `Ψ(x)` in `S_m` is its Hermite-Ito
//! polynomial `:Ψ(x):`.

use std::collections::HashMap;
use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::interaction::{self, SubspaceFamily};
use crate::linalg::{AmbientSpace, Subspace};
use crate::poset::Poset;
use crate::tolerance::{Limits, Tolerance};

#[derive(Debug, Clone, PartialEq)]
pub struct GaussianModel {
    sites: Vec<String>,
    cov: DMatrix<f64>,
}

impl GaussianModel {
    pub fn new(sites: Vec<String>, cov: DMatrix<f64>, tol: Tolerance) -> Result<Self> {
        if cov.nrows() != sites.len() || cov.ncols() != sites.len() {
            return Err(Error::DimensionMismatch {
                expected: sites.len(),
                found: cov.nrows(),
            });
        }
        for (i, s) in sites.iter().enumerate() {
            if sites[..i].contains(s) {
                return Err(Error::DuplicateElement(s.clone()));
            }
        }
        AmbientSpace::with_gram(cov.clone(), tol)?;
        Ok(Self { sites, cov })
    }

    /// Independent unit-variance sites named `s1, ..., sn`.
    pub fn standard(n: usize) -> Self {
        Self {
            sites: (1..=n).map(|i| format!("s{i}")).collect(),
            cov: DMatrix::identity(n, n),
        }
    }

    pub fn sites(&self) -> &[String] {
        &self.sites
    }

    pub fn covariance(&self) -> &DMatrix<f64> {
        &self.cov
    }

    pub fn num_sites(&self) -> usize {
        self.sites.len()
    }

    pub fn site_index(&self, name: &str) -> Result<usize> {
        self.sites
            .iter()
            .position(|s| s == name)
            .ok_or_else(|| Error::UnknownElement(name.to_owned()))
    }
}

/// A multiset of sites, kept sorted. The empty monomial is the constant 1.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct Monomial(Vec<usize>);

impl Monomial {
    pub fn new(mut sites: Vec<usize>) -> Self {
        sites.sort_unstable();
        Self(sites)
    }

    pub fn constant() -> Self {
        Self(Vec::new())
    }

    /// Parses `"s1*s1*s2"`; `"1"` or the empty string is the constant.
    pub fn parse(model: &GaussianModel, text: &str) -> Result<Self> {
        let text = text.trim();
        if text.is_empty() || text == "1" {
            return Ok(Self::constant());
        }
        let sites = text
            .split('*')
            .map(|t| model.site_index(t.trim()))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self::new(sites))
    }

    pub fn degree(&self) -> usize {
        self.0.len()
    }

    pub fn sites(&self) -> &[usize] {
        &self.0
    }

    pub fn counts(&self, n: usize) -> Vec<u8> {
        let mut c = vec![0u8; n];
        for &s in &self.0 {
            c[s] += 1;
        }
        c
    }

    pub fn product(&self, other: &Monomial) -> Monomial {
        Monomial::new(self.0.iter().chain(&other.0).copied().collect())
    }

    pub fn display<'a>(&'a self, model: &'a GaussianModel) -> impl fmt::Display + 'a {
        struct D<'a>(&'a Monomial, &'a GaussianModel);
        impl fmt::Display for D<'_> {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                if self.0 .0.is_empty() {
                    return f.write_str("1");
                }
                for (k, &s) in self.0 .0.iter().enumerate() {
                    if k > 0 {
                        f.write_str("*")?;
                    }
                    f.write_str(&self.1.sites[s])?;
                }
                Ok(())
            }
        }
        D(self, model)
    }
}

/// Memoised Gaussian moments `E[Π_s φ(s)^{c_s}]`.
#[derive(Debug)]
pub struct WickMoments<'m> {
    model: &'m GaussianModel,
    memo: HashMap<Vec<u8>, f64>,
}

impl<'m> WickMoments<'m> {
    pub fn new(model: &'m GaussianModel) -> Self {
        Self {
            model,
            memo: HashMap::new(),
        }
    }

    /// Moment of the monomial with the given site counts.
    pub fn moment(&mut self, counts: &[u8]) -> f64 {
        let total: usize = counts.iter().map(|&c| c as usize).sum();
        if total == 0 {
            return 1.0;
        }
        if total % 2 == 1 {
            return 0.0;
        }
        if let Some(&v) = self.memo.get(counts) {
            return v;
        }
        // Pair one copy of the first present site with every remaining factor.
        let i = counts.iter().position(|&c| c > 0).expect("total > 0");
        let mut rest = counts.to_vec();
        rest[i] -= 1;
        let mut acc = 0.0;
        for j in 0..rest.len() {
            if rest[j] == 0 {
                continue;
            }
            let cij = self.model.cov[(i, j)];
            if cij == 0.0 {
                continue;
            }
            let mult = rest[j] as f64;
            rest[j] -= 1;
            acc += mult * cij * self.moment(&rest);
            rest[j] += 1;
        }
        self.memo.insert(counts.to_vec(), acc);
        acc
    }

    pub fn inner(&mut self, x: &Monomial, y: &Monomial) -> f64 {
        let n = self.model.num_sites();
        self.moment(&x.product(y).counts(n))
    }
}

/// `E[Ψ(x)Ψ(y)]`.
pub fn wick_moment(model: &GaussianModel, x: &Monomial, y: &Monomial) -> f64 {
    WickMoments::new(model).inner(x, y)
}

/// All monomials of degree at most `max_degree`, ordered by degree and then
/// lexicographically.
pub fn monomials(n_sites: usize, max_degree: usize) -> Vec<Monomial> {
    let mut out = vec![Monomial::constant()];
    let mut layer = vec![Vec::<usize>::new()];
    for _ in 0..max_degree {
        let mut next = Vec::new();
        for m in &layer {
            let start = m.last().copied().unwrap_or(0);
            for s in start..n_sites {
                let mut v = m.clone();
                v.push(s);
                next.push(v);
            }
        }
        out.extend(next.iter().cloned().map(Monomial));
        layer = next;
    }
    out
}

/// Number of monomials of degree at most `m` in `n` variables, `C(n+m, m)`.
pub fn monomial_count(n: usize, m: usize) -> usize {
    let mut c: u128 = 1;
    for k in 1..=m as u128 {
        c = c * (n as u128 + k) / k;
        if c > usize::MAX as u128 {
            return usize::MAX;
        }
    }
    c as usize
}

/// The filtration `H(0) ⊆ ... ⊆ H(M)` in monomial coordinates.
#[derive(Debug, Clone)]
pub struct ChaosSpace {
    model: GaussianModel,
    max_degree: usize,
    monomials: Vec<Monomial>,
    index: HashMap<Monomial, usize>,
    family: SubspaceFamily,
}

pub fn chaos_filtration(
    model: &GaussianModel,
    max_degree: usize,
    limits: &Limits,
    tol: Tolerance,
) -> Result<ChaosSpace> {
    let count = monomial_count(model.num_sites(), max_degree);
    if count > limits.max_monomials {
        return Err(Error::TooManyMonomials {
            count,
            cap: limits.max_monomials,
        });
    }
    if 2 * max_degree > u8::MAX as usize {
        return Err(Error::DegreeTooLarge {
            degree: max_degree,
            max: u8::MAX as usize / 2,
        });
    }
    let monos = monomials(model.num_sites(), max_degree);
    let mut wick = WickMoments::new(model);
    let k = monos.len();
    let mut gram = DMatrix::zeros(k, k);
    for i in 0..k {
        for j in i..k {
            let v = wick.inner(&monos[i], &monos[j]);
            gram[(i, j)] = v;
            gram[(j, i)] = v;
        }
    }
    let amb = AmbientSpace::with_gram(gram, tol).map_err(|e| match e {
        Error::NotPositiveDefinite(msg) => Error::GramRankCollapse(msg),
        other => other,
    })?;
    let eye = DMatrix::<f64>::identity(k, k);
    let mut spaces = Vec::with_capacity(max_degree + 1);
    for m in 0..=max_degree {
        let upto = monos.iter().take_while(|x| x.degree() <= m).count();
        spaces.push(Subspace::span(&amb, &eye.columns(0, upto).into_owned())?);
    }
    let family = SubspaceFamily::new(Poset::chain(max_degree + 1), amb, spaces)?;
    let index = monos.iter().cloned().enumerate().map(|(i, m)| (m, i)).collect();
    Ok(ChaosSpace {
        model: model.clone(),
        max_degree,
        monomials: monos,
        index,
        family,
    })
}

impl ChaosSpace {
    pub fn model(&self) -> &GaussianModel {
        &self.model
    }

    pub fn max_degree(&self) -> usize {
        self.max_degree
    }

    pub fn monomials(&self) -> &[Monomial] {
        &self.monomials
    }

    pub fn family(&self) -> &SubspaceFamily {
        &self.family
    }

    pub fn ambient(&self) -> &Arc<AmbientSpace> {
        self.family.ambient()
    }

    /// Wick Gram matrix of the monomial coordinates.
    pub fn gram(&self) -> &DMatrix<f64> {
        self.ambient().gram()
    }

    pub fn coordinate(&self, x: &Monomial) -> Result<usize> {
        self.index.get(x).copied().ok_or(Error::DegreeTooLarge {
            degree: x.degree(),
            max: self.max_degree,
        })
    }

    /// `H(m)`.
    pub fn level(&self, m: usize) -> &Subspace {
        self.family.space(m)
    }
}

/// `S_0, ..., S_M`.
pub fn chaos_pieces(space: &ChaosSpace) -> Result<Vec<Subspace>> {
    let dec = interaction::decompose(space.family()).map_err(|f| {
        Error::GramRankCollapse(format!(
            "filtration failed to decompose (gap {:.3e})",
            f.report.max_gap
        ))
    })?;
    let mut pieces = dec.pieces;
    pieces.truncate(space.max_degree + 1);
    Ok(pieces)
}

/// Coefficients of `:Ψ(x):` in monomial coordinates.
pub fn hermite_ito(space: &ChaosSpace, x: &Monomial) -> Result<DVector<f64>> {
    let pieces = chaos_pieces(space)?;
    hermite_ito_with(space, &pieces, x)
}

/// As [`hermite_ito`] with precomputed pieces.
pub fn hermite_ito_with(
    space: &ChaosSpace,
    pieces: &[Subspace],
    x: &Monomial,
) -> Result<DVector<f64>> {
    let m = x.degree();
    if m > space.max_degree {
        return Err(Error::DegreeTooLarge {
            degree: m,
            max: space.max_degree,
        });
    }
    let mut e = DVector::zeros(space.monomials.len());
    e[space.coordinate(x)?] = 1.0;
    Ok(pieces[m].projector().as_operator().apply(&e))
}

/// Nonzero terms of a coefficient vector, largest degree first.
pub fn terms(space: &ChaosSpace, coeffs: &DVector<f64>, threshold: f64) -> Vec<(Monomial, f64)> {
    let mut out: Vec<(Monomial, f64)> = space
        .monomials
        .iter()
        .cloned()
        .zip(coeffs.iter().copied())
        .filter(|(_, c)| c.abs() > threshold)
        .collect();
    out.sort_by(|a, b| b.0.degree().cmp(&a.0.degree()).then(a.0.cmp(&b.0)));
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn space(model: &GaussianModel, m: usize) -> ChaosSpace {
        chaos_filtration(model, m, &Limits::default(), Tolerance::default()).unwrap()
    }

    /// Sum over perfect matchings of the listed factors.
    fn matchings(cov: &DMatrix<f64>, items: &[usize]) -> f64 {
        if items.is_empty() {
            return 1.0;
        }
        let (first, rest) = (items[0], &items[1..]);
        (0..rest.len())
            .map(|k| {
                let mut r = rest.to_vec();
                let partner = r.remove(k);
                cov[(first, partner)] * matchings(cov, &r)
            })
            .sum()
    }

    #[test]
    fn wick_examples() {
        let m = GaussianModel::standard(1);
        let x = |d| Monomial::new(vec![0; d]);
        assert_eq!(wick_moment(&m, &x(1), &x(1)), 1.0);
        assert_eq!(wick_moment(&m, &x(2), &x(2)), 3.0);
        assert_eq!(wick_moment(&m, &x(2), &x(1)), 0.0);
        assert_eq!(wick_moment(&m, &x(4), &x(4)), 105.0);
    }

    #[test]
    fn wick_matches_matching_enumeration() {
        let cov = DMatrix::from_row_slice(3, 3, &[2.0, 0.5, -0.3, 0.5, 1.0, 0.2, -0.3, 0.2, 1.5]);
        let model = GaussianModel::new(
            vec!["a".into(), "b".into(), "c".into()],
            cov.clone(),
            Tolerance::default(),
        )
        .unwrap();
        for x in monomials(3, 3) {
            for y in monomials(3, 3) {
                let all: Vec<usize> = x.sites().iter().chain(y.sites()).copied().collect();
                let expected = if all.len() % 2 == 1 { 0.0 } else { matchings(&cov, &all) };
                let got = wick_moment(&model, &x, &y);
                assert!((got - expected).abs() <= 1e-12 * expected.abs().max(1.0));
            }
        }
    }

    #[test]
    fn monomial_parsing() {
        let m = GaussianModel::standard(2);
        let x = Monomial::parse(&m, "s2*s1*s1").unwrap();
        assert_eq!(x.sites(), &[0, 0, 1]);
        assert_eq!(x.display(&m).to_string(), "s1*s1*s2");
        assert_eq!(Monomial::parse(&m, "1").unwrap(), Monomial::constant());
        assert!(Monomial::parse(&m, "s3").is_err());
        assert_eq!(monomials(2, 3).len(), monomial_count(2, 3));
    }

    #[test]
    fn filtration_dims() {
        let m = GaussianModel::standard(1);
        let s = space(&m, 0);
        assert_eq!(s.level(0).dim(), 1);
        let s = space(&m, 2);
        assert_eq!((0..3).map(|k| s.level(k).dim()).collect::<Vec<_>>(), [1, 2, 3]);
        let pieces = chaos_pieces(&s).unwrap();
        assert_eq!(pieces.iter().map(|p| p.dim()).collect::<Vec<_>>(), [1, 1, 1]);
        let s2 = space(&GaussianModel::standard(2), 2);
        assert_eq!(chaos_pieces(&s2).unwrap().iter().map(|p| p.dim()).collect::<Vec<_>>(), [1, 2, 3]);
    }

    #[test]
    fn low_degree_hermite() {
        let m = GaussianModel::standard(1);
        let s = space(&m, 3);
        let he = |d| hermite_ito(&s, &Monomial::new(vec![0; d])).unwrap();
        let close = |v: DVector<f64>, w: &[f64]| (v - DVector::from_column_slice(w)).amax() < 1e-10;
        assert!(close(he(0), &[1.0, 0.0, 0.0, 0.0]));
        assert!(close(he(2), &[-1.0, 0.0, 1.0, 0.0]));
        assert!(close(he(3), &[0.0, -3.0, 0.0, 1.0]));
    }

    #[test]
    fn correlated_pair_is_wick_product() {
        // :ab: = ab − E[ab].
        let cov = DMatrix::from_row_slice(2, 2, &[1.0, 0.6, 0.6, 2.0]);
        let model = GaussianModel::new(vec!["a".into(), "b".into()], cov, Tolerance::default()).unwrap();
        let s = space(&model, 2);
        let v = hermite_ito(&s, &Monomial::new(vec![0, 1])).unwrap();
        let ab = s.coordinate(&Monomial::new(vec![0, 1])).unwrap();
        assert!((v[0] + 0.6).abs() < 1e-10);
        assert!((v[ab] - 1.0).abs() < 1e-10);
        assert!(v.iter().enumerate().all(|(i, c)| i == 0 || i == ab || c.abs() < 1e-10));
    }

    #[test]
    fn degree_and_cap_errors() {
        let m = GaussianModel::standard(1);
        let s = space(&m, 2);
        assert!(matches!(
            hermite_ito(&s, &Monomial::new(vec![0; 3])),
            Err(Error::DegreeTooLarge { degree: 3, max: 2 })
        ));
        let limits = Limits {
            max_monomials: 5,
            ..Limits::default()
        };
        assert!(matches!(
            chaos_filtration(&GaussianModel::standard(2), 2, &limits, Tolerance::default()),
            Err(Error::TooManyMonomials { count: 6, cap: 5 })
        ));
        let singular = DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 1.0, 1.0]);
        assert!(GaussianModel::new(vec!["a".into(), "b".into()], singular, Tolerance::default()).is_err());
    }
}
