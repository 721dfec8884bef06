//! Finite-dimensional real inner-product spaces and subspace arithmetic.
//!
//! An [`AmbientSpace`] is `R^n` with a symmetric positive-definite gram matrix
//! `G`. Internally everything is carried in whitened coordinates `w = Lᵀx`
//! where `G = LLᵀ`, so the gram inner product becomes the Euclidean one and
//! a subspace is a matrix with orthonormal columns. Public accessors convert
//! back to the original coordinates.
//!
//! Closures of sums are the identity in finite dimension, so `join` is the
//! span of the stacked frames.

use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tolerance::Tolerance;

/// `R^n` equipped with an inner product `⟨x, y⟩ = xᵀGy`.
#[derive(Clone)]
pub struct AmbientSpace {
    dim: usize,
    gram: DMatrix<f64>,
    // Lower Cholesky factor of the gram; `None` for the canonical product.
    chol: Option<DMatrix<f64>>,
    tol: Tolerance,
}

impl fmt::Debug for AmbientSpace {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("AmbientSpace")
            .field("dim", &self.dim)
            .field("euclidean", &self.chol.is_none())
            .finish()
    }
}

impl AmbientSpace {
    /// `R^n` with the canonical inner product.
    pub fn euclidean(dim: usize, tol: Tolerance) -> Arc<Self> {
        Arc::new(Self {
            dim,
            gram: DMatrix::identity(dim, dim),
            chol: None,
            tol,
        })
    }

    pub fn with_gram(gram: DMatrix<f64>, tol: Tolerance) -> Result<Arc<Self>> {
        let n = gram.nrows();
        if gram.ncols() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: gram.ncols(),
            });
        }
        if gram == DMatrix::identity(n, n) {
            return Ok(Self::euclidean(n, tol));
        }
        let scale = gram.amax().max(f64::MIN_POSITIVE);
        let asym = (&gram - gram.transpose()).amax();
        if asym > 1e-12 * scale {
            return Err(Error::NotPositiveDefinite(format!(
                "asymmetry {asym:.3e}"
            )));
        }
        let sym = (&gram + gram.transpose()) * 0.5;
        let eig = SymmetricEigen::new(sym.clone());
        let lmax = eig.eigenvalues.max();
        let lmin = eig.eigenvalues.min();
        if !(lmin > tol.tol_pd * lmax) {
            return Err(Error::NotPositiveDefinite(format!(
                "eigenvalue range [{lmin:.3e}, {lmax:.3e}]"
            )));
        }
        let chol = nalgebra::Cholesky::new(sym.clone())
            .ok_or_else(|| Error::NotPositiveDefinite("cholesky failed".into()))?;
        Ok(Arc::new(Self {
            dim: n,
            gram: sym,
            chol: Some(chol.l()),
            tol,
        }))
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn gram(&self) -> &DMatrix<f64> {
        &self.gram
    }

    pub fn tol(&self) -> &Tolerance {
        &self.tol
    }

    pub fn is_euclidean(&self) -> bool {
        self.chol.is_none()
    }

    /// Original coordinates to whitened ones: `Lᵀx`.
    pub fn whiten(&self, x: &DMatrix<f64>) -> DMatrix<f64> {
        match &self.chol {
            None => x.clone(),
            Some(l) => l.transpose() * x,
        }
    }

    /// Whitened coordinates back to original ones: `L⁻ᵀw`.
    pub fn unwhiten(&self, w: &DMatrix<f64>) -> DMatrix<f64> {
        match &self.chol {
            None => w.clone(),
            Some(l) => l
                .tr_solve_lower_triangular(w)
                .expect("cholesky factor is invertible"),
        }
    }

    pub fn inner(&self, x: &DVector<f64>, y: &DVector<f64>) -> f64 {
        (x.transpose() * &self.gram * y)[(0, 0)]
    }

    /// Same space: shared allocation, or identical dimension and gram.
    pub fn same(self: &Arc<Self>, other: &Arc<Self>) -> bool {
        Arc::ptr_eq(self, other) || (self.dim == other.dim && self.gram == other.gram)
    }
}

/// Largest singular value; zero for empty matrices.
pub fn op_norm(m: &DMatrix<f64>) -> f64 {
    if m.nrows() == 0 || m.ncols() == 0 {
        return 0.0;
    }
    // nalgebra's SVD mis-factors some structured inputs; the symmetric
    // eigensolver on the smaller Gram matrix is reliable.
    let g = if m.nrows() < m.ncols() {
        m * m.transpose()
    } else {
        m.transpose() * m
    };
    SymmetricEigen::new((&g + g.transpose()) * 0.5)
        .eigenvalues
        .max()
        .max(0.0)
        .sqrt()
}

/// Orthonormal basis of the column span of `m`, with the rank decided by a
/// column-pivoted QR and a threshold relative to the largest pivot.
pub(crate) fn orthonormal_basis(m: &DMatrix<f64>, tol_rank: f64) -> DMatrix<f64> {
    let n = m.nrows();
    if m.ncols() == 0 || n == 0 {
        return DMatrix::zeros(n, 0);
    }
    let qr = m.clone().col_piv_qr();
    let r = qr.r();
    let diag: Vec<f64> = (0..r.nrows().min(r.ncols())).map(|i| r[(i, i)].abs()).collect();
    let rmax = diag.iter().copied().fold(0.0, f64::max);
    if !(rmax > 0.0) {
        return DMatrix::zeros(n, 0);
    }
    let rank = diag.iter().take_while(|&&d| d > tol_rank * rmax).count();
    qr.q().columns(0, rank).into_owned()
}

/// A subspace of an ambient space, stored as an orthonormal frame.
#[derive(Clone)]
pub struct Subspace {
    ambient: Arc<AmbientSpace>,
    // n×k, orthonormal columns in whitened coordinates.
    basis: DMatrix<f64>,
}

impl fmt::Debug for Subspace {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Subspace")
            .field("ambient_dim", &self.ambient.dim)
            .field("dim", &self.dim())
            .finish()
    }
}

impl Subspace {
    /// The column span of `generators` (n×m, original coordinates).
    pub fn span(ambient: &Arc<AmbientSpace>, generators: &DMatrix<f64>) -> Result<Self> {
        if generators.nrows() != ambient.dim {
            return Err(Error::DimensionMismatch {
                expected: ambient.dim,
                found: generators.nrows(),
            });
        }
        let w = ambient.whiten(generators);
        Ok(Self::from_white(ambient, &w))
    }

    /// Span of generators already given in whitened coordinates.
    pub(crate) fn from_white(ambient: &Arc<AmbientSpace>, w: &DMatrix<f64>) -> Self {
        Self {
            ambient: Arc::clone(ambient),
            basis: orthonormal_basis(w, ambient.tol.tol_rank),
        }
    }

    pub fn zero(ambient: &Arc<AmbientSpace>) -> Self {
        Self {
            ambient: Arc::clone(ambient),
            basis: DMatrix::zeros(ambient.dim, 0),
        }
    }

    pub fn full(ambient: &Arc<AmbientSpace>) -> Self {
        Self {
            ambient: Arc::clone(ambient),
            basis: DMatrix::identity(ambient.dim, ambient.dim),
        }
    }

    pub fn ambient(&self) -> &Arc<AmbientSpace> {
        &self.ambient
    }

    pub fn dim(&self) -> usize {
        self.basis.ncols()
    }

    /// Frame in original coordinates; `FᵀGF = I`.
    pub fn frame(&self) -> DMatrix<f64> {
        self.ambient.unwhiten(&self.basis)
    }

    /// Frame in whitened coordinates; orthonormal in the Euclidean sense.
    pub fn white_basis(&self) -> &DMatrix<f64> {
        &self.basis
    }

    pub fn projector(&self) -> Projector {
        Projector(Operator {
            ambient: Arc::clone(&self.ambient),
            white: &self.basis * self.basis.transpose(),
        })
    }

    fn same_ambient(&self, other: &Subspace) -> Result<()> {
        if self.ambient.same(&other.ambient) {
            Ok(())
        } else {
            Err(Error::AmbientMismatch)
        }
    }

    pub fn join(&self, other: &Subspace) -> Result<Subspace> {
        join(&self.ambient, [self, other])
    }

    /// Orthogonal complement with respect to the gram inner product.
    pub fn complement(&self) -> Subspace {
        let n = self.ambient.dim;
        if self.dim() == 0 {
            return Subspace::full(&self.ambient);
        }
        if self.dim() == n {
            return Subspace::zero(&self.ambient);
        }
        let q = DMatrix::identity(n, n) - &self.basis * self.basis.transpose();
        let eig = SymmetricEigen::new((&q + q.transpose()) * 0.5);
        // Eigenvalues of a projector cluster at 0 and 1.
        let keep: Vec<usize> = eig
            .eigenvalues
            .iter()
            .enumerate()
            .filter(|(_, l)| **l > 0.5)
            .map(|(i, _)| i)
            .collect();
        let v = eig.eigenvectors.select_columns(&keep);
        Subspace {
            ambient: Arc::clone(&self.ambient),
            basis: orthonormal_basis(&v, self.ambient.tol.tol_rank),
        }
    }

    /// `a ∩ b`, computed as `(a^⊥ ∨ b^⊥)^⊥`.
    pub fn intersect(&self, other: &Subspace) -> Result<Subspace> {
        self.same_ambient(other)?;
        Ok(self.complement().join(&other.complement())?.complement())
    }

    /// Norm of the projector difference `‖P_a − P_b‖`.
    pub fn distance(&self, other: &Subspace) -> Result<f64> {
        self.same_ambient(other)?;
        if self.dim() != other.dim() {
            return Ok(1.0);
        }
        // Equal dimensions: ‖P_a − P_b‖ = ‖(I − P_a) Q_b‖.
        let resid = &other.basis - &self.basis * (self.basis.transpose() * &other.basis);
        Ok(op_norm(&resid))
    }

    /// `‖P_a P_b − P_b‖`, zero exactly when `b ⊆ a`.
    pub fn containment_gap(&self, other: &Subspace) -> Result<f64> {
        self.same_ambient(other)?;
        let resid = &other.basis - &self.basis * (self.basis.transpose() * &other.basis);
        Ok(op_norm(&resid))
    }

    pub fn approx_eq(&self, other: &Subspace) -> Result<bool> {
        Ok(self.distance(other)? <= self.ambient.tol.tol_eq)
    }

    /// Whether `other ⊆ self`.
    pub fn contains(&self, other: &Subspace) -> Result<bool> {
        Ok(self.containment_gap(other)? <= self.ambient.tol.tol_eq)
    }

    /// `‖P_a P_b‖`; zero exactly when the subspaces are orthogonal.
    pub fn overlap(&self, other: &Subspace) -> Result<f64> {
        self.same_ambient(other)?;
        Ok(op_norm(&(self.basis.transpose() * &other.basis)))
    }
}

/// Join of any number of subspaces of `ambient`.
pub fn join<'a>(
    ambient: &Arc<AmbientSpace>,
    spaces: impl IntoIterator<Item = &'a Subspace>,
) -> Result<Subspace> {
    let mut cols: Vec<&DMatrix<f64>> = Vec::new();
    for s in spaces {
        if !ambient.same(&s.ambient) {
            return Err(Error::AmbientMismatch);
        }
        if s.dim() > 0 {
            cols.push(&s.basis);
        }
    }
    if cols.is_empty() {
        return Ok(Subspace::zero(ambient));
    }
    if cols.len() == 1 {
        return Ok(Subspace {
            ambient: Arc::clone(ambient),
            basis: cols[0].clone(),
        });
    }
    let k: usize = cols.iter().map(|c| c.ncols()).sum();
    let mut stacked = DMatrix::zeros(ambient.dim, k);
    let mut off = 0;
    for c in cols {
        stacked.columns_mut(off, c.ncols()).copy_from(c);
        off += c.ncols();
    }
    Ok(Subspace::from_white(ambient, &stacked))
}

/// A linear map of an ambient space into itself.
#[derive(Clone)]
pub struct Operator {
    ambient: Arc<AmbientSpace>,
    // Matrix in whitened coordinates.
    white: DMatrix<f64>,
}

impl fmt::Debug for Operator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Operator")
            .field("ambient_dim", &self.ambient.dim)
            .finish()
    }
}

impl Operator {
    pub fn zero(ambient: &Arc<AmbientSpace>) -> Self {
        Self {
            ambient: Arc::clone(ambient),
            white: DMatrix::zeros(ambient.dim, ambient.dim),
        }
    }

    pub fn identity(ambient: &Arc<AmbientSpace>) -> Self {
        Self {
            ambient: Arc::clone(ambient),
            white: DMatrix::identity(ambient.dim, ambient.dim),
        }
    }

    /// Wraps a matrix given in original coordinates.
    pub fn from_matrix(ambient: &Arc<AmbientSpace>, m: &DMatrix<f64>) -> Result<Self> {
        if m.nrows() != ambient.dim || m.ncols() != ambient.dim {
            return Err(Error::DimensionMismatch {
                expected: ambient.dim,
                found: m.nrows(),
            });
        }
        // M_white = Lᵀ M L⁻ᵀ = (L⁻¹ Mᵀ L)ᵀ.
        let white = match &ambient.chol {
            None => m.clone(),
            Some(l) => l
                .solve_lower_triangular(&(m.transpose() * l))
                .expect("cholesky factor is invertible")
                .transpose(),
        };
        Ok(Self {
            ambient: Arc::clone(ambient),
            white,
        })
    }

    pub fn ambient(&self) -> &Arc<AmbientSpace> {
        &self.ambient
    }

    /// Matrix in original coordinates: `L⁻ᵀ M Lᵀ`.
    pub fn matrix(&self) -> DMatrix<f64> {
        match &self.ambient.chol {
            None => self.white.clone(),
            Some(l) => self.ambient.unwhiten(&(&self.white * l.transpose())),
        }
    }

    pub fn white_matrix(&self) -> &DMatrix<f64> {
        &self.white
    }

    /// Applies the map to a vector given in original coordinates.
    pub fn apply(&self, x: &DVector<f64>) -> DVector<f64> {
        let xm = DMatrix::from_column_slice(x.len(), 1, x.as_slice());
        let y = self.ambient.unwhiten(&(&self.white * self.ambient.whiten(&xm)));
        DVector::from_column_slice(y.as_slice())
    }

    /// Operator norm induced by the gram inner product.
    pub fn norm(&self) -> f64 {
        op_norm(&self.white)
    }

    pub fn add(&self, other: &Operator) -> Operator {
        Operator {
            ambient: Arc::clone(&self.ambient),
            white: &self.white + &other.white,
        }
    }

    pub fn sub(&self, other: &Operator) -> Operator {
        Operator {
            ambient: Arc::clone(&self.ambient),
            white: &self.white - &other.white,
        }
    }

    pub fn scale(&self, c: f64) -> Operator {
        Operator {
            ambient: Arc::clone(&self.ambient),
            white: &self.white * c,
        }
    }

    /// `self ∘ other`.
    pub fn compose(&self, other: &Operator) -> Operator {
        Operator {
            ambient: Arc::clone(&self.ambient),
            white: &self.white * &other.white,
        }
    }

    pub fn distance(&self, other: &Operator) -> f64 {
        op_norm(&(&self.white - &other.white))
    }
}

/// An orthogonal projector onto a subspace.
#[derive(Debug, Clone)]
pub struct Projector(Operator);

impl Projector {
    pub fn zero(ambient: &Arc<AmbientSpace>) -> Self {
        Projector(Operator::zero(ambient))
    }

    pub fn as_operator(&self) -> &Operator {
        &self.0
    }

    pub fn into_operator(self) -> Operator {
        self.0
    }

    pub fn matrix(&self) -> DMatrix<f64> {
        self.0.matrix()
    }

    pub fn rank(&self) -> usize {
        self.0.white.trace().round().max(0.0) as usize
    }

    /// `‖P² − P‖`.
    pub fn idempotence_gap(&self) -> f64 {
        op_norm(&(&self.0.white * &self.0.white - &self.0.white))
    }

    /// `‖GP − PᵀG‖`, in original coordinates.
    pub fn adjointness_gap(&self) -> f64 {
        let p = self.matrix();
        let g = self.0.ambient.gram();
        op_norm(&(g * &p - p.transpose() * g))
    }
}

/// JSON form of a matrix: `{"dim": [rows, cols], "data": [row-major]}`, or a
/// plain array of rows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum MatrixSpec {
    Flat { dim: [usize; 2], data: Vec<f64> },
    Rows(Vec<Vec<f64>>),
}

impl MatrixSpec {
    pub fn to_matrix(&self) -> Result<DMatrix<f64>> {
        match self {
            MatrixSpec::Flat { dim: [r, c], data } => {
                if data.len() != r * c {
                    return Err(Error::DimensionMismatch {
                        expected: r * c,
                        found: data.len(),
                    });
                }
                Ok(DMatrix::from_row_slice(*r, *c, data))
            }
            MatrixSpec::Rows(rows) => {
                let r = rows.len();
                let c = rows.first().map_or(0, Vec::len);
                if let Some(bad) = rows.iter().find(|row| row.len() != c) {
                    return Err(Error::DimensionMismatch {
                        expected: c,
                        found: bad.len(),
                    });
                }
                let flat: Vec<f64> = rows.iter().flatten().copied().collect();
                Ok(DMatrix::from_row_slice(r, c, &flat))
            }
        }
    }

    pub fn from_matrix(m: &DMatrix<f64>) -> Self {
        let data = (0..m.nrows())
            .flat_map(|i| (0..m.ncols()).map(move |j| m[(i, j)]))
            .collect();
        MatrixSpec::Flat {
            dim: [m.nrows(), m.ncols()],
            data,
        }
    }
}
