// SPDX-License-Identifier: Apache-2.0

//! Dense complex linear algebra for small Hilbert spaces.
//!
//! Operators are `d x d` complex matrices. Superoperators act on operators in
//! the Liouville representation with **column-stacking** vectorization:
//! `vec(A)[i + d*j] = A[(i, j)]`, which is also nalgebra's storage order. With
//! this convention `vec(A X B) = (B^T ⊗ A) vec(X)`. Every superoperator in the
//! crate uses it; nothing else is supported.
//!
//! Units: ħ = 1 throughout.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type CMatrix = DMatrix<Complex64>;

pub const IM: Complex64 = Complex64::new(0.0, 1.0);
pub const ONE: Complex64 = Complex64::new(1.0, 0.0);
pub const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Construction tolerance for Hermiticity (relative to `max(1, max|entry|)`).
pub const HERMITIAN_TOL: f64 = 1e-12;
/// Default condition-number threshold above which a map counts as singular.
pub const DEFAULT_CONDITION_THRESHOLD: f64 = 1e12;

pub fn c(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

pub fn dagger(m: &CMatrix) -> CMatrix {
    m.adjoint()
}

pub fn trace(m: &CMatrix) -> Complex64 {
    m.diagonal().sum()
}

/// Largest entry modulus.
pub fn max_abs(m: &CMatrix) -> f64 {
    m.iter().fold(0.0_f64, |acc, z| acc.max(z.norm()))
}

pub fn frobenius(m: &CMatrix) -> f64 {
    m.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// `|j><k|` in dimension `d`.
pub fn basis_element(d: usize, j: usize, k: usize) -> CMatrix {
    let mut m = CMatrix::zeros(d, d);
    m[(j, k)] = ONE;
    m
}

pub fn commutator(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a * b - b * a
}

/// `Tr_B` of an operator on `C^{da} ⊗ C^{db}` (Kronecker ordering).
pub fn partial_trace_second(m: &CMatrix, da: usize, db: usize) -> CMatrix {
    CMatrix::from_fn(da, da, |i, j| {
        (0..db).map(|k| m[(i * db + k, j * db + k)]).sum()
    })
}

fn anti_hermitian_residual(m: &CMatrix) -> f64 {
    let n = m.nrows();
    let mut r = 0.0_f64;
    for i in 0..n {
        for j in 0..n {
            r = r.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    r
}

/// Qubit Pauli matrices. Basis index 0 is the `σ_z = +1` (excited) state.
pub mod pauli {
    use super::*;

    pub fn identity() -> CMatrix {
        CMatrix::identity(2, 2)
    }
    pub fn x() -> CMatrix {
        CMatrix::from_row_slice(2, 2, &[ZERO, ONE, ONE, ZERO])
    }
    pub fn y() -> CMatrix {
        CMatrix::from_row_slice(2, 2, &[ZERO, -IM, IM, ZERO])
    }
    pub fn z() -> CMatrix {
        CMatrix::from_row_slice(2, 2, &[ONE, ZERO, ZERO, -ONE])
    }
    /// σ_+ = |e><g|
    pub fn raising() -> CMatrix {
        basis_element(2, 0, 1)
    }
    /// σ_- = |g><e|
    pub fn lowering() -> CMatrix {
        basis_element(2, 1, 0)
    }
    /// `[I, σx, σy, σz]`
    pub fn basis() -> [CMatrix; 4] {
        [identity(), x(), y(), z()]
    }
}

/// Eigen-decomposition of a Hermitian operator, eigenvalues ascending.
#[derive(Clone, Debug)]
pub struct Spectrum {
    pub values: Vec<f64>,
    /// Orthonormal eigenvectors stored as columns, in the order of `values`.
    pub vectors: CMatrix,
}

impl Spectrum {
    pub fn reconstruct(&self) -> CMatrix {
        self.with_values(|x| x)
    }

    /// `Σ f(λ_n) |n><n|`
    pub fn with_values(&self, f: impl Fn(f64) -> f64) -> CMatrix {
        let d = self.values.len();
        let mut diag = CMatrix::zeros(d, d);
        for (n, &v) in self.values.iter().enumerate() {
            diag[(n, n)] = c(f(v));
        }
        &self.vectors * diag * self.vectors.adjoint()
    }

    pub fn vector(&self, n: usize) -> DVector<Complex64> {
        self.vectors.column(n).into_owned()
    }

    /// Projector onto the span of eigenvectors `idx`.
    pub fn projector(&self, idx: &[usize]) -> CMatrix {
        let d = self.values.len();
        let mut p = CMatrix::zeros(d, d);
        for &n in idx {
            let v = self.vectors.column(n);
            p += v * v.adjoint();
        }
        p
    }

    /// Group eigenvalue indices whose values lie within `tol` of their
    /// neighbour. Clusters come out ordered by value.
    pub fn clusters(&self, tol: f64) -> Vec<(f64, Vec<usize>)> {
        let mut out: Vec<(f64, Vec<usize>)> = Vec::new();
        for (n, &v) in self.values.iter().enumerate() {
            match out.last_mut() {
                Some((_, members)) if (v - self.values[*members.last().unwrap()]).abs() <= tol => {
                    members.push(n)
                }
                _ => out.push((v, vec![n])),
            }
        }
        for (value, members) in out.iter_mut() {
            *value = members.iter().map(|&n| self.values[n]).sum::<f64>() / members.len() as f64;
        }
        out
    }
}

/// A Hermitian operator on a `d`-dimensional Hilbert space.
#[derive(Clone, Debug, PartialEq)]
pub struct Hermitian {
    m: CMatrix,
}

impl Hermitian {
    /// Accepts matrices within [`HERMITIAN_TOL`] of Hermitian and symmetrizes
    /// them; rejects anything further off.
    pub fn new(m: CMatrix) -> Result<Self> {
        Self::with_tolerance(m, HERMITIAN_TOL)
    }

    pub fn with_tolerance(m: CMatrix, tol: f64) -> Result<Self> {
        if m.nrows() != m.ncols() || m.nrows() == 0 {
            return Err(Error::DimensionMismatch {
                expected: m.nrows(),
                found: m.ncols(),
            });
        }
        let scale = max_abs(&m).max(1.0);
        let residual = anti_hermitian_residual(&m);
        if residual > tol * scale {
            return Err(Error::NotHermitian {
                residual,
                tolerance: tol,
            });
        }
        Ok(Self::symmetrized(m))
    }

    /// Hermitian part `(m + m†)/2`, no check.
    pub fn symmetrized(m: CMatrix) -> Self {
        let h = (&m + m.adjoint()) * c(0.5);
        Hermitian { m: h }
    }

    pub fn from_real_diagonal(diag: &[f64]) -> Self {
        let d = diag.len();
        let mut m = CMatrix::zeros(d, d);
        for (i, &x) in diag.iter().enumerate() {
            m[(i, i)] = c(x);
        }
        Hermitian { m }
    }

    pub fn zeros(d: usize) -> Self {
        Hermitian {
            m: CMatrix::zeros(d, d),
        }
    }

    pub fn identity(d: usize) -> Self {
        Hermitian {
            m: CMatrix::identity(d, d),
        }
    }

    pub fn dim(&self) -> usize {
        self.m.nrows()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.m
    }

    pub fn into_matrix(self) -> CMatrix {
        self.m
    }

    pub fn trace(&self) -> f64 {
        trace(&self.m).re
    }

    pub fn scale(&self, s: f64) -> Self {
        Hermitian { m: &self.m * c(s) }
    }

    pub fn add(&self, other: &Hermitian) -> Self {
        Hermitian {
            m: &self.m + &other.m,
        }
    }

    pub fn sub(&self, other: &Hermitian) -> Self {
        Hermitian {
            m: &self.m - &other.m,
        }
    }

    /// Traceless part `H - Tr(H)/d`.
    pub fn traceless(&self) -> Self {
        let d = self.dim();
        let shift = self.trace() / d as f64;
        Hermitian {
            m: &self.m - CMatrix::identity(d, d) * c(shift),
        }
    }

    /// Re Tr(H ρ).
    pub fn expectation(&self, rho: &CMatrix) -> f64 {
        trace(&(&self.m * rho)).re
    }

    pub fn eig(&self) -> Spectrum {
        let se = SymmetricEigen::new(self.m.clone());
        let d = self.dim();
        let mut order: Vec<usize> = (0..d).collect();
        order.sort_by(|&a, &b| se.eigenvalues[a].total_cmp(&se.eigenvalues[b]));
        let values = order.iter().map(|&i| se.eigenvalues[i]).collect();
        let mut vectors = CMatrix::zeros(d, d);
        for (col, &i) in order.iter().enumerate() {
            vectors.set_column(col, &se.eigenvectors.column(i));
        }
        Spectrum { values, vectors }
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        self.eig().values
    }

    pub fn lambda_min(&self) -> f64 {
        self.eigenvalues()[0]
    }

    pub fn lambda_max(&self) -> f64 {
        *self.eigenvalues().last().unwrap()
    }

    /// `Σ f(λ_n)|n><n|`; fails if `f` yields a non-finite value.
    pub fn apply_fn(&self, f: impl Fn(f64) -> f64) -> Result<Hermitian> {
        let spec = self.eig();
        for &v in &spec.values {
            let y = f(v);
            if !y.is_finite() {
                return Err(Error::Domain(format!("f({v}) = {y}")));
            }
        }
        Ok(Hermitian::symmetrized(spec.with_values(f)))
    }

    /// Matrix logarithm with `ln 0 := 0`. Eigenvalues in `[-zero_tol, zero_tol]`
    /// count as zero; more negative ones are a domain error.
    pub fn log_zero_convention(&self, zero_tol: f64) -> Result<Hermitian> {
        let spec = self.eig();
        if let Some(&bad) = spec.values.iter().find(|&&v| v < -zero_tol) {
            return Err(Error::Domain(format!(
                "logarithm of negative eigenvalue {bad}"
            )));
        }
        Ok(Hermitian::symmetrized(spec.with_values(|v| {
            if v.abs() <= zero_tol {
                0.0
            } else {
                v.ln()
            }
        })))
    }

    /// `e^{s H}`.
    pub fn exp_scaled(&self, s: f64) -> Hermitian {
        Hermitian::symmetrized(self.eig().with_values(|v| (s * v).exp()))
    }

    /// `ln Tr e^{-β H}` evaluated without overflow.
    pub fn log_partition(&self, beta: f64) -> f64 {
        log_sum_exp(self.eigenvalues().iter().map(|&e| -beta * e))
    }
}

/// `ln Σ e^{x_i}`, stable for large arguments.
pub fn log_sum_exp(xs: impl Iterator<Item = f64> + Clone) -> f64 {
    let m = xs.clone().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return m;
    }
    m + xs.map(|x| (x - m).exp()).sum::<f64>().ln()
}

/// A density matrix: Hermitian, unit trace, positive semidefinite.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityMatrix {
    m: CMatrix,
}

impl DensityMatrix {
    pub fn new(m: CMatrix) -> Result<Self> {
        let h = Hermitian::new(m)?;
        let tr = h.trace();
        if (tr - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidDensity(format!("trace {tr} != 1")));
        }
        let min = h.lambda_min();
        if min < -1e-10 {
            return Err(Error::InvalidDensity(format!("negative eigenvalue {min}")));
        }
        Ok(DensityMatrix { m: h.into_matrix() })
    }

    /// Gibbs state `e^{-βH}/Tr e^{-βH}`.
    pub fn gibbs(h: &Hermitian, beta: f64) -> Self {
        let spec = h.eig();
        let shift = spec.values[0];
        let weights: Vec<f64> = spec
            .values
            .iter()
            .map(|&e| (-beta * (e - shift)).exp())
            .collect();
        let z: f64 = weights.iter().sum();
        let d = spec.values.len();
        let mut diag = CMatrix::zeros(d, d);
        for (n, w) in weights.iter().enumerate() {
            diag[(n, n)] = c(w / z);
        }
        let m = &spec.vectors * diag * spec.vectors.adjoint();
        DensityMatrix {
            m: Hermitian::symmetrized(m).into_matrix(),
        }
    }

    pub fn maximally_mixed(d: usize) -> Self {
        DensityMatrix {
            m: CMatrix::identity(d, d) * c(1.0 / d as f64),
        }
    }

    /// Qubit state `(I + r·σ)/2`.
    pub fn from_bloch(r: [f64; 3]) -> Result<Self> {
        let [x, y, z] = pauli::basis()[1..].to_owned().try_into().unwrap();
        let m = (pauli::identity() + x * c(r[0]) + y * c(r[1]) + z * c(r[2])) * c(0.5);
        Self::new(m)
    }

    pub fn dim(&self) -> usize {
        self.m.nrows()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.m
    }

    pub fn as_hermitian(&self) -> Hermitian {
        Hermitian::symmetrized(self.m.clone())
    }

    /// `-Tr ρ ln ρ` with `0 ln 0 = 0`.
    pub fn von_neumann_entropy(&self) -> f64 {
        self.as_hermitian()
            .eigenvalues()
            .iter()
            .filter(|&&p| p > 0.0)
            .map(|&p| -p * p.ln())
            .sum()
    }
}

/// Column-stacking vectorization.
pub fn vectorize(a: &CMatrix) -> DVector<Complex64> {
    DVector::from_column_slice(a.as_slice())
}

pub fn unvectorize(v: &DVector<Complex64>, d: usize) -> CMatrix {
    CMatrix::from_column_slice(d, d, v.as_slice())
}

/// Diagnostics for complete positivity and trace preservation.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CptpReport {
    pub trace_preserving_residual: f64,
    /// Minimum eigenvalue of the unnormalized Choi matrix
    /// `Σ_ij |i><j| ⊗ S(|i><j|)`; the identity map gives 0 (rank one).
    pub choi_min_eigenvalue: f64,
    pub unital_residual: f64,
}

/// A linear map on `d x d` operators stored as a `d² x d²` matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct Superoperator {
    dim: usize,
    m: CMatrix,
}

impl Superoperator {
    pub fn from_matrix(dim: usize, m: CMatrix) -> Result<Self> {
        let n = dim * dim;
        if m.nrows() != n || m.ncols() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: m.nrows(),
            });
        }
        Ok(Superoperator { dim, m })
    }

    pub fn identity(dim: usize) -> Self {
        Superoperator {
            dim,
            m: CMatrix::identity(dim * dim, dim * dim),
        }
    }

    pub fn zeros(dim: usize) -> Self {
        Superoperator {
            dim,
            m: CMatrix::zeros(dim * dim, dim * dim),
        }
    }

    /// `X -> A X B`.
    pub fn sandwich(a: &CMatrix, b: &CMatrix) -> Self {
        Superoperator {
            dim: a.nrows(),
            m: b.transpose().kronecker(a),
        }
    }

    /// `X -> U X U†`.
    pub fn unitary_conjugation(u: &CMatrix) -> Self {
        Self::sandwich(u, &u.adjoint())
    }

    /// `X -> -i[H, X]`.
    pub fn hamiltonian(h: &CMatrix) -> Self {
        let d = h.nrows();
        let id = CMatrix::identity(d, d);
        Superoperator {
            dim: d,
            m: (id.kronecker(h) - h.transpose().kronecker(&id)) * (-IM),
        }
    }

    /// `X -> L X L† - {L†L, X}/2`.
    pub fn lindblad(l: &CMatrix) -> Self {
        let d = l.nrows();
        let id = CMatrix::identity(d, d);
        let ldl = l.adjoint() * l;
        let m = l.conjugate().kronecker(l)
            - (id.kronecker(&ldl) + ldl.transpose().kronecker(&id)) * c(0.5);
        Superoperator { dim: d, m }
    }

    /// `X -> Σ_k K_k X K_k†`.
    pub fn from_kraus(ops: &[CMatrix]) -> Self {
        let d = ops[0].nrows();
        let mut s = Self::zeros(d);
        for k in ops {
            s.m += k.conjugate().kronecker(k);
        }
        s
    }

    /// Qubit map from its Pauli transfer matrix `R_ij = Tr(σ_i S(σ_j))/2` in the
    /// ordering `[I, σx, σy, σz]`. Together with [`Self::to_pauli_transfer`]
    /// this is the only place the two representations are converted.
    pub fn from_pauli_transfer(r: &DMatrix<f64>) -> Self {
        let b = pauli_change_of_basis();
        let rc = r.map(c);
        let m = &b * rc * b.adjoint() * c(0.5);
        Superoperator { dim: 2, m }
    }

    pub fn to_pauli_transfer(&self) -> DMatrix<f64> {
        assert_eq!(self.dim, 2, "Pauli transfer matrices are qubit-only");
        let b = pauli_change_of_basis();
        let r = b.adjoint() * &self.m * &b * c(0.5);
        r.map(|z| z.re)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.m
    }

    pub fn apply(&self, a: &CMatrix) -> Result<CMatrix> {
        if a.nrows() != self.dim || a.ncols() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: a.nrows(),
            });
        }
        Ok(unvectorize(&(&self.m * vectorize(a)), self.dim))
    }

    /// Hilbert–Schmidt adjoint: `Tr(A† S(B)) = Tr(S†(A)† B)`.
    pub fn hs_adjoint(&self) -> Self {
        Superoperator {
            dim: self.dim,
            m: self.m.adjoint(),
        }
    }

    /// `self ∘ other`.
    pub fn compose(&self, other: &Superoperator) -> Self {
        assert_eq!(self.dim, other.dim);
        Superoperator {
            dim: self.dim,
            m: &self.m * &other.m,
        }
    }

    pub fn add(&self, other: &Superoperator) -> Self {
        Superoperator {
            dim: self.dim,
            m: &self.m + &other.m,
        }
    }

    pub fn sub(&self, other: &Superoperator) -> Self {
        Superoperator {
            dim: self.dim,
            m: &self.m - &other.m,
        }
    }

    pub fn scale(&self, s: f64) -> Self {
        Superoperator {
            dim: self.dim,
            m: &self.m * c(s),
        }
    }

    /// Spectral-norm condition number `σ_max/σ_min`.
    pub fn condition_number(&self) -> f64 {
        let sv = self.m.clone().svd(false, false).singular_values;
        let max = sv.max();
        let min = sv.min();
        if min == 0.0 {
            f64::INFINITY
        } else {
            max / min
        }
    }

    /// Inverse together with its condition number. Fails with `SingularMap`
    /// when the condition number exceeds `threshold`.
    pub fn invert(&self, threshold: f64) -> Result<(Superoperator, f64)> {
        let cond = self.condition_number();
        let singular = Error::SingularMap {
            time: None,
            condition: cond,
            threshold,
        };
        if !(cond <= threshold) {
            return Err(singular);
        }
        let inv = self.m.clone().try_inverse().ok_or(singular)?;
        Ok((
            Superoperator {
                dim: self.dim,
                m: inv,
            },
            cond,
        ))
    }

    /// Max over matrix units `E_ij` of `|Tr S(E_ij) - δ_ij|`.
    pub fn trace_preservation_residual(&self) -> f64 {
        let d = self.dim;
        let mut r = 0.0_f64;
        for j in 0..d {
            for i in 0..d {
                let out = unvectorize(&self.m.column(i + d * j).into_owned(), d);
                let expect = if i == j { ONE } else { ZERO };
                r = r.max((trace(&out) - expect).norm());
            }
        }
        r
    }

    /// Max over the Hermitian basis `{E_jj, E_jk + E_kj, i(E_jk - E_kj)}` of the
    /// anti-Hermitian residual of the image.
    pub fn hermiticity_residual(&self) -> f64 {
        let d = self.dim;
        let mut r = 0.0_f64;
        for j in 0..d {
            for k in j..d {
                let mut probes = vec![basis_element(d, j, k) + basis_element(d, k, j)];
                if j != k {
                    probes.push((basis_element(d, j, k) - basis_element(d, k, j)) * IM);
                }
                for p in probes {
                    let out = self.apply(&p).expect("dimension checked");
                    r = r.max(anti_hermitian_residual(&out));
                }
            }
        }
        r
    }

    /// `Tr S(X)` for every `X` equals zero (generators of trace-preserving maps).
    pub fn trace_annihilation_residual(&self) -> f64 {
        let d = self.dim;
        let mut r = 0.0_f64;
        for col in 0..d * d {
            let out = unvectorize(&self.m.column(col).into_owned(), d);
            r = r.max(trace(&out).norm());
        }
        r
    }

    /// Unnormalized Choi matrix `Σ_ij |i><j| ⊗ S(|i><j|)`.
    pub fn choi(&self) -> CMatrix {
        let d = self.dim;
        let mut choi = CMatrix::zeros(d * d, d * d);
        for i in 0..d {
            for j in 0..d {
                let out = self
                    .apply(&basis_element(d, i, j))
                    .expect("dimension checked");
                choi.view_mut((i * d, j * d), (d, d)).copy_from(&out);
            }
        }
        choi
    }

    pub fn cptp_diagnostics(&self) -> CptpReport {
        let d = self.dim;
        let choi = Hermitian::symmetrized(self.choi());
        let unital = self
            .apply(&CMatrix::identity(d, d))
            .expect("dimension checked")
            - CMatrix::identity(d, d);
        CptpReport {
            trace_preserving_residual: self.trace_preservation_residual(),
            choi_min_eigenvalue: choi.lambda_min(),
            unital_residual: frobenius(&unital),
        }
    }

    /// Entrywise max distance.
    pub fn distance(&self, other: &Superoperator) -> f64 {
        max_abs(&(&self.m - &other.m))
    }

    /// Dense matrix exponential `e^{s S}` (for generators).
    pub fn exp_scaled(&self, s: f64) -> Self {
        Superoperator {
            dim: self.dim,
            m: (&self.m * c(s)).exp(),
        }
    }
}

/// Columns are `vec(σ_j)` for `σ = [I, σx, σy, σz]`; its inverse is `B†/2`.
fn pauli_change_of_basis() -> CMatrix {
    let mut b = CMatrix::zeros(4, 4);
    for (j, p) in pauli::basis().iter().enumerate() {
        b.set_column(j, &vectorize(p));
    }
    b
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synthetic;
    use approx::assert_abs_diff_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn sigma_z_spectrum_is_computational_basis() {
        let s = Hermitian::new(pauli::z()).unwrap().eig();
        assert_eq!(s.values, vec![-1.0, 1.0]);
        assert_abs_diff_eq!(s.vectors[(1, 0)].norm(), 1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(s.vectors[(0, 1)].norm(), 1.0, epsilon = 1e-14);
    }

    #[test]
    fn identity_has_degenerate_spectrum() {
        let s = Hermitian::identity(2).eig();
        assert_eq!(s.values, vec![1.0, 1.0]);
        let gram = s.vectors.adjoint() * &s.vectors;
        assert!(max_abs(&(gram - CMatrix::identity(2, 2))) < 1e-12);
        assert_eq!(s.clusters(1e-9).len(), 1);
    }

    #[test]
    fn random_spectral_reconstruction() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..20 {
            let h = synthetic::random_hermitian(&mut rng, 3, 1.0);
            let s = h.eig();
            assert!(frobenius(&(h.matrix() - s.reconstruct())) < 1e-10);
            let gram = s.vectors.adjoint() * &s.vectors;
            assert!(max_abs(&(gram - CMatrix::identity(3, 3))) < 1e-10);
            assert!(s.values.windows(2).all(|w| w[0] <= w[1]));
        }
    }

    #[test]
    fn hermiticity_is_repaired_or_rejected() {
        let mut m = pauli::x();
        m[(0, 1)] += c(1e-13);
        let h = Hermitian::new(m.clone()).unwrap();
        assert_eq!(h.matrix()[(0, 1)], h.matrix()[(1, 0)].conj());
        m[(0, 1)] += c(1e-6);
        assert!(matches!(Hermitian::new(m), Err(Error::NotHermitian { .. })));
    }

    #[test]
    fn functional_calculus() {
        let h = Hermitian::from_real_diagonal(&[0.0, 2f64.ln()]);
        let e = h.apply_fn(f64::exp).unwrap();
        assert_abs_diff_eq!(e.matrix()[(0, 0)].re, 1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(e.matrix()[(1, 1)].re, 2.0, epsilon = 1e-14);

        let rho = Hermitian::from_real_diagonal(&[1.0, 0.0]);
        let l = rho.log_zero_convention(1e-12).unwrap();
        assert!(max_abs(l.matrix()) < 1e-14);

        assert!(matches!(rho.apply_fn(f64::ln), Err(Error::Domain(_))));

        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let h = synthetic::random_hermitian(&mut rng, 4, 2.0);
        let sq = h.apply_fn(|x| x * x).unwrap();
        assert!(max_abs(&(sq.matrix() - h.matrix() * h.matrix())) < 1e-10);
    }

    #[test]
    fn apply_identity_and_unitary() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let a = synthetic::random_matrix(&mut rng, 3);
        assert_eq!(Superoperator::identity(3).apply(&a).unwrap(), a);
        let u = synthetic::random_unitary(&mut rng, 3);
        let out = Superoperator::unitary_conjugation(&u).apply(&a).unwrap();
        assert!(max_abs(&(out - &u * &a * u.adjoint())) < 1e-12);
        assert!(Superoperator::identity(2).apply(&a).is_err());
    }

    #[test]
    fn hs_adjoint_duality_and_involution() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let u = synthetic::random_unitary(&mut rng, 2);
        let s = Superoperator::unitary_conjugation(&u);
        let expected = Superoperator::unitary_conjugation(&u.adjoint());
        assert!(s.hs_adjoint().distance(&expected) < 1e-12);

        let phi = synthetic::random_cptp(&mut rng, 3, 2);
        assert_eq!(phi.hs_adjoint().hs_adjoint(), phi);
        for _ in 0..5 {
            let a = synthetic::random_matrix(&mut rng, 3);
            let b = synthetic::random_matrix(&mut rng, 3);
            let lhs = trace(&(a.adjoint() * phi.apply(&b).unwrap()));
            let rhs = trace(&(phi.hs_adjoint().apply(&a).unwrap().adjoint() * &b));
            assert!((lhs - rhs).norm() < 1e-10);
        }
    }

    #[test]
    fn inversion_and_condition() {
        let (inv, cond) = Superoperator::identity(2).invert(1e12).unwrap();
        assert_eq!(inv, Superoperator::identity(2));
        assert_abs_diff_eq!(cond, 1.0, epsilon = 1e-12);

        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let u = synthetic::random_unitary(&mut rng, 2);
        let (inv, _) = Superoperator::unitary_conjugation(&u).invert(1e12).unwrap();
        assert!(inv.distance(&Superoperator::unitary_conjugation(&u.adjoint())) < 1e-12);

        for seed in 0..10 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let phi = synthetic::random_invertible_cptp(&mut rng, 2);
            let (inv, cond) = phi.invert(1e12).unwrap();
            let id = phi.compose(&inv);
            assert!(id.distance(&Superoperator::identity(2)) < (cond * 1e-13).max(1e-10));
        }

        let singular = Superoperator::zeros(2);
        assert!(matches!(
            singular.invert(1e12),
            Err(Error::SingularMap { .. })
        ));
    }

    #[test]
    fn condition_is_submultiplicative() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for _ in 0..10 {
            let a = synthetic::random_invertible_cptp(&mut rng, 2);
            let b = synthetic::random_invertible_cptp(&mut rng, 2);
            let ab = a.compose(&b);
            assert!(ab.condition_number() <= 1.1 * a.condition_number() * b.condition_number());
        }
    }

    #[test]
    fn cptp_diagnostics_of_known_maps() {
        let id = Superoperator::identity(2).cptp_diagnostics();
        assert_eq!(id.trace_preserving_residual, 0.0);
        assert_eq!(id.unital_residual, 0.0);
        assert_abs_diff_eq!(id.choi_min_eigenvalue, 0.0, epsilon = 1e-14);

        // amplitude damping, p = 0.5, textbook Kraus pair
        let p: f64 = 0.5;
        let k0 = CMatrix::from_row_slice(2, 2, &[c((1.0 - p).sqrt()), ZERO, ZERO, ONE]);
        let k1 = CMatrix::from_row_slice(2, 2, &[ZERO, ZERO, c(p.sqrt()), ZERO]);
        let ad = Superoperator::from_kraus(&[k0, k1]).cptp_diagnostics();
        assert!(ad.choi_min_eigenvalue >= -1e-12);
        assert!(ad.trace_preserving_residual < 1e-12);
        assert!(ad.unital_residual > 0.1);

        // the inverse of a contracting channel is not positive
        let (inv, _) = synthetic::random_invertible_cptp(&mut ChaCha8Rng::seed_from_u64(1), 2)
            .invert(1e12)
            .unwrap();
        let report = inv.cptp_diagnostics();
        assert!(report.choi_min_eigenvalue < 0.0);
        assert!(report.trace_preserving_residual < 1e-10);
    }

    #[test]
    fn pauli_transfer_round_trip() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let phi = synthetic::random_cptp(&mut rng, 2, 3);
        let r = phi.to_pauli_transfer();
        assert_abs_diff_eq!(r[(0, 0)], 1.0, epsilon = 1e-12);
        let back = Superoperator::from_pauli_transfer(&r);
        assert!(back.distance(&phi) < 1e-12);
        let id = DMatrix::<f64>::identity(4, 4);
        assert!(
            Superoperator::from_pauli_transfer(&id).distance(&Superoperator::identity(2)) < 1e-15
        );
    }

    #[test]
    fn generator_building_blocks() {
        let h = pauli::z() * c(0.5);
        let x = pauli::x();
        let out = Superoperator::hamiltonian(&h).apply(&x).unwrap();
        assert!(max_abs(&(out - commutator(&h, &x) * (-IM))) < 1e-15);

        let l = pauli::lowering();
        let rho = basis_element(2, 0, 0);
        let d = Superoperator::lindblad(&l).apply(&rho).unwrap();
        let expected =
            &l * &rho * l.adjoint() - (l.adjoint() * &l * &rho + &rho * l.adjoint() * &l) * c(0.5);
        assert!(max_abs(&(d - expected)) < 1e-15);
        assert!(Superoperator::lindblad(&l).trace_annihilation_residual() < 1e-15);
    }

    #[test]
    fn gibbs_and_entropy() {
        let h = Hermitian::from_real_diagonal(&[0.5, -0.5]);
        let rho = DensityMatrix::gibbs(&h, 1.0);
        let p_e = (-0.5f64).exp() / ((-0.5f64).exp() + 0.5f64.exp());
        assert_abs_diff_eq!(rho.matrix()[(0, 0)].re, p_e, epsilon = 1e-14);
        assert_abs_diff_eq!(
            DensityMatrix::maximally_mixed(2).von_neumann_entropy(),
            2f64.ln(),
            epsilon = 1e-14
        );
        assert!(DensityMatrix::new(pauli::z()).is_err());
    }
}
