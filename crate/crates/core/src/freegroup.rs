//! The free two-step nilpotent group `F(n)` in exponential coordinates.
//!
//! A point is a pair `(x, a)` with `x ∈ R^n` and `a ∈ R^{n(n-1)/2}`. The
//! central coordinates are indexed lexicographically by pairs `i < j`, and
//! `a[idx(i, j)]` is the coefficient of `X_{ij} = [X_i, X_j]`.
//!
//! Skew matrices realize the center through `[X, Y] = Y Xᵀ - X Yᵀ`, so the
//! coordinate `c_{ij}` sits at matrix entry `(j, i)` and `-c_{ij}` at `(i, j)`.

use nalgebra::{Complex, DMatrix, DVector};

use crate::error::{check_finite, check_len, Error, Result};

/// Number of central coordinates, `n(n-1)/2`.
pub fn center_dim(n: usize) -> usize {
    n * n.saturating_sub(1) / 2
}

/// Lexicographic index of the pair `(i, j)`, `i < j`.
pub fn pair_index(n: usize, i: usize, j: usize) -> usize {
    debug_assert!(i < j && j < n);
    i * n - i * (i + 1) / 2 + (j - i - 1)
}

/// A point of `F(n)` or, equivalently, an element of its Lie algebra.
#[derive(Debug, Clone, PartialEq)]
pub struct GroupElement {
    pub x: Vec<f64>,
    pub a: Vec<f64>,
}

/// Lie algebra elements share the coordinate layout of group points.
pub type FreeAlgebraElement = GroupElement;

impl GroupElement {
    pub fn new(x: Vec<f64>, a: Vec<f64>) -> Result<Self> {
        let n = x.len();
        check_len("central coordinates", center_dim(n), a.len())?;
        check_finite("group element", &x)?;
        check_finite("group element", &a)?;
        Ok(Self { x, a })
    }

    pub fn identity(n: usize) -> Self {
        Self {
            x: vec![0.0; n],
            a: vec![0.0; center_dim(n)],
        }
    }

    pub fn n(&self) -> usize {
        self.x.len()
    }

    pub fn inverse(&self) -> Self {
        Self {
            x: self.x.iter().map(|v| -v).collect(),
            a: self.a.iter().map(|v| -v).collect(),
        }
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self {
            x: self.x.iter().map(|v| s * v).collect(),
            a: self.a.iter().map(|v| s * v).collect(),
        }
    }

    pub fn center_matrix(&self) -> DMatrix<f64> {
        skew_from_coords(self.n(), &self.a)
    }
}

/// Skew matrix of central coordinates.
pub fn skew_from_coords(n: usize, a: &[f64]) -> DMatrix<f64> {
    let mut m = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in i + 1..n {
            let c = a[pair_index(n, i, j)];
            m[(j, i)] = c;
            m[(i, j)] = -c;
        }
    }
    m
}

/// Central coordinates of a skew matrix (only the lower triangle is read).
pub fn coords_from_skew(m: &DMatrix<f64>) -> Vec<f64> {
    let n = m.nrows();
    let mut a = vec![0.0; center_dim(n)];
    for i in 0..n {
        for j in i + 1..n {
            a[pair_index(n, i, j)] = m[(j, i)];
        }
    }
    a
}

/// Lie bracket of two first-layer vectors, in central coordinates.
pub fn bracket(x: &[f64], y: &[f64]) -> Result<Vec<f64>> {
    let n = x.len();
    check_len("bracket operand", n, y.len())?;
    let mut out = vec![0.0; center_dim(n)];
    for i in 0..n {
        for j in i + 1..n {
            out[pair_index(n, i, j)] = x[i] * y[j] - x[j] * y[i];
        }
    }
    Ok(out)
}

/// Group law `(x, a)(x', a') = (x + x', a + a' + [x, x']/2)`.
pub fn group_mul(g: &GroupElement, h: &GroupElement) -> Result<GroupElement> {
    let n = g.n();
    check_len("group operand", n, h.n())?;
    let br = bracket(&g.x, &h.x)?;
    let x = g.x.iter().zip(&h.x).map(|(p, q)| p + q).collect();
    let a = g
        .a
        .iter()
        .zip(&h.a)
        .zip(&br)
        .map(|((p, q), b)| p + q + 0.5 * b)
        .collect();
    Ok(GroupElement { x, a })
}

/// Action of `k ∈ O(n)`: `x ↦ kx`, `A ↦ k A kᵀ`.
pub fn act_orthogonal(k: &DMatrix<f64>, g: &GroupElement) -> Result<GroupElement> {
    let n = g.n();
    if k.nrows() != n || k.ncols() != n {
        return Err(Error::Dimension {
            what: "orthogonal matrix",
            expected: n,
            got: k.nrows().max(k.ncols()),
        });
    }
    if (k.transpose() * k - DMatrix::identity(n, n)).amax() > 1e-12 {
        return Err(Error::Invalid("matrix is not orthogonal".into()));
    }
    let x = k * DVector::from_column_slice(&g.x);
    let a = k * g.center_matrix() * k.transpose();
    Ok(GroupElement {
        x: x.iter().copied().collect(),
        a: coords_from_skew(&a),
    })
}

/// Invariant inner product on the center: the Euclidean product of the
/// coordinate vectors, i.e. half the Frobenius product of skew matrices.
pub fn z_inner(a: &[f64], b: &[f64]) -> Result<f64> {
    check_len("central vector", a.len(), b.len())?;
    Ok(a.iter().zip(b).map(|(p, q)| p * q).sum())
}

/// Block-diagonal skew matrix with blocks `[[0, δ], [-δ, 0]]`, padded with zeros.
pub fn d2(n: usize, deltas: &[f64]) -> DMatrix<f64> {
    let mut m = DMatrix::zeros(n, n);
    for (i, &d) in deltas.iter().enumerate() {
        m[(2 * i, 2 * i + 1)] = d;
        m[(2 * i + 1, 2 * i)] = -d;
    }
    m
}

/// Result of [`canonicalize_skew`]: `k D2(deltas) kᵀ = A`.
#[derive(Debug, Clone)]
pub struct SkewCanonicalForm {
    /// `floor(n/2)` values, non-increasing, zeros last.
    pub deltas: Vec<f64>,
    pub k: DMatrix<f64>,
    /// Number of nonzero deltas.
    pub p0: usize,
    /// Number of distinct nonzero deltas.
    pub p1: usize,
    /// Distinct nonzero deltas, strictly decreasing.
    pub mu: Vec<f64>,
    pub mult: Vec<usize>,
}

/// Relative tolerance under which two deltas form one cluster.
pub const CLUSTER_TOL: f64 = 1e-9;
/// Deltas at most this fraction of `‖A‖` count as zero.
pub const ZERO_TOL: f64 = 1e-12;

/// Orthogonal normal form of a real skew matrix.
///
/// Uses the Hermitian eigenproblem of `iA`. An eigenvector `p + iq` for the
/// eigenvalue `δ > 0` satisfies `Ap = δq`, `Aq = -δp`, so `(√2 q, √2 p)` is a
/// canonical pair.
pub fn canonicalize_skew(a: &DMatrix<f64>) -> Result<SkewCanonicalForm> {
    let n = a.nrows();
    if a.ncols() != n {
        return Err(Error::Invalid("skew matrix must be square".into()));
    }
    check_finite("skew matrix", a.as_slice())?;
    let scale = a.norm();
    if (a + a.transpose()).norm() > 1e-12 * scale.max(f64::MIN_POSITIVE) {
        return Err(Error::Invalid("matrix is not skew-symmetric".into()));
    }
    if n == 0 {
        return Err(Error::Invalid("empty matrix".into()));
    }
    let ia = a.map(|v| Complex::new(0.0, v));
    let eig = ia.symmetric_eigen();
    let zero_tol = ZERO_TOL * scale;

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&p, &q| eig.eigenvalues[q].total_cmp(&eig.eigenvalues[p]));
    let positives: Vec<usize> = order
        .iter()
        .copied()
        .filter(|&i| eig.eigenvalues[i] > zero_tol)
        .collect();

    let mut cols: Vec<DVector<f64>> = Vec::with_capacity(n);
    for &i in &positives {
        let v = eig.eigenvectors.column(i);
        let p = DVector::from_iterator(n, v.iter().map(|c| c.re));
        let q = DVector::from_iterator(n, v.iter().map(|c| c.im));
        let k1 = orthonormalize(q, &cols);
        let k1 = k1.ok_or_else(|| Error::Invalid("degenerate eigenvector".into()))?;
        cols.push(k1.clone());
        // Recover the partner from A itself so the pair is exact up to rounding.
        let w = a * &k1;
        let k2 = orthonormalize(-w, &cols).unwrap_or_else(|| {
            orthonormalize(p, &cols).expect("partner vector of a nonzero eigenvalue")
        });
        cols.push(k2);
    }
    // Real kernel: real and imaginary parts of the null eigenvectors.
    let mut candidates: Vec<DVector<f64>> = Vec::new();
    for &i in order.iter().filter(|&&i| eig.eigenvalues[i].abs() <= zero_tol) {
        let v = eig.eigenvectors.column(i);
        candidates.push(DVector::from_iterator(n, v.iter().map(|c| c.re)));
        candidates.push(DVector::from_iterator(n, v.iter().map(|c| c.im)));
    }
    for e in 0..n {
        candidates.push(DVector::from_fn(n, |r, _| if r == e { 1.0 } else { 0.0 }));
    }
    for c in candidates {
        if cols.len() == n {
            break;
        }
        if let Some(u) = orthonormalize(c, &cols) {
            cols.push(u);
        }
    }
    let k = DMatrix::from_columns(&cols);
    let b = k.transpose() * a * &k;
    let p0 = positives.len();
    let mut deltas: Vec<f64> = (0..p0).map(|i| b[(2 * i, 2 * i + 1)]).collect();
    let (mu, mult) = cluster(&deltas);
    deltas.resize(n / 2, 0.0);
    Ok(SkewCanonicalForm {
        deltas,
        k,
        p0,
        p1: mu.len(),
        mu,
        mult,
    })
}

/// Groups non-increasing positive deltas into distinct values and
/// multiplicities; each cluster is represented by its mean.
pub fn cluster(deltas: &[f64]) -> (Vec<f64>, Vec<usize>) {
    let Some(&top) = deltas.first() else {
        return (vec![], vec![]);
    };
    let tol = CLUSTER_TOL * top.max(1.0);
    let mut groups: Vec<Vec<f64>> = Vec::new();
    for &d in deltas {
        match groups.last_mut() {
            Some(g) if (g[0] - d).abs() <= tol => g.push(d),
            _ => groups.push(vec![d]),
        }
    }
    let mu = groups.iter().map(|g| g.iter().sum::<f64>() / g.len() as f64).collect();
    let mult = groups.iter().map(Vec::len).collect();
    (mu, mult)
}

fn orthonormalize(mut v: DVector<f64>, basis: &[DVector<f64>]) -> Option<DVector<f64>> {
    let start = v.norm();
    if start == 0.0 {
        return None;
    }
    for _ in 0..2 {
        for b in basis {
            let c = b.dot(&v);
            v.axpy(-c, b, 1.0);
        }
    }
    let r = v.norm();
    if r <= 1e-8 * start {
        None
    } else {
        Some(v / r)
    }
}

/// A Lie group written in exponential coordinates, enough structure for the
/// finite-difference Laplacian.
pub trait ExpCoordinates {
    type Point: Clone;
    /// `exp(s · dir)`.
    fn exp(&self, dir: &Self::Point, s: f64) -> Self::Point;
    fn mul(&self, g: &Self::Point, h: &Self::Point) -> Self::Point;
}

/// `F(n)` as an [`ExpCoordinates`] group.
#[derive(Debug, Clone, Copy)]
pub struct FreeGroup {
    pub n: usize,
}

impl FreeGroup {
    /// The generators `X_1, ..., X_n` of the first layer.
    pub fn generators(&self) -> Vec<GroupElement> {
        (0..self.n)
            .map(|i| {
                let mut g = GroupElement::identity(self.n);
                g.x[i] = 1.0;
                g
            })
            .collect()
    }
}

impl ExpCoordinates for FreeGroup {
    type Point = GroupElement;

    fn exp(&self, dir: &GroupElement, s: f64) -> GroupElement {
        dir.scaled(s)
    }

    fn mul(&self, g: &GroupElement, h: &GroupElement) -> GroupElement {
        group_mul(g, h).expect("points of the same group")
    }
}

/// `-Σ_d (d/ds)² f(g exp(s d))` at `s = 0`, by Richardson-extrapolated
/// central differences. This is the sign convention of `L = -Σ X_i²`.
pub fn li_laplacian_fd<G, F, V>(
    group: &G,
    f: F,
    g: &G::Point,
    directions: &[G::Point],
    h: f64,
) -> Result<V>
where
    G: ExpCoordinates,
    F: Fn(&G::Point) -> V,
    V: FdValue,
{
    if !(h.is_finite() && h > 0.0) {
        return Err(Error::Invalid(format!("finite-difference step {h}")));
    }
    let mut acc = V::zero();
    let f0 = f(g);
    for d in directions {
        let second = |step: f64| {
            let up = f(&group.mul(g, &group.exp(d, step)));
            let dn = f(&group.mul(g, &group.exp(d, -step)));
            up.add(&dn).sub(&f0.scale(2.0)).scale(1.0 / (step * step))
        };
        let coarse = second(h);
        let fine = second(0.5 * h);
        acc = acc.add(&fine.scale(4.0).sub(&coarse).scale(1.0 / 3.0));
    }
    let out = acc.scale(-1.0);
    if out.is_finite() {
        Ok(out)
    } else {
        Err(Error::NonFinite("finite-difference Laplacian"))
    }
}

/// Scalar types the finite-difference routines accept.
pub trait FdValue: Clone {
    fn zero() -> Self;
    fn add(&self, o: &Self) -> Self;
    fn sub(&self, o: &Self) -> Self;
    fn scale(&self, s: f64) -> Self;
    fn is_finite(&self) -> bool;
}

impl FdValue for f64 {
    fn zero() -> Self {
        0.0
    }
    fn add(&self, o: &Self) -> Self {
        self + o
    }
    fn sub(&self, o: &Self) -> Self {
        self - o
    }
    fn scale(&self, s: f64) -> Self {
        self * s
    }
    fn is_finite(&self) -> bool {
        f64::is_finite(*self)
    }
}

impl FdValue for Complex<f64> {
    fn zero() -> Self {
        Complex::new(0.0, 0.0)
    }
    fn add(&self, o: &Self) -> Self {
        self + o
    }
    fn sub(&self, o: &Self) -> Self {
        self - o
    }
    fn scale(&self, s: f64) -> Self {
        self * s
    }
    fn is_finite(&self) -> bool {
        self.re.is_finite() && self.im.is_finite()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn el(x: &[f64], a: &[f64]) -> GroupElement {
        GroupElement::new(x.to_vec(), a.to_vec()).unwrap()
    }

    #[test]
    fn pair_index_is_lexicographic() {
        let n = 4;
        let mut expected = 0;
        for i in 0..n {
            for j in i + 1..n {
                assert_eq!(pair_index(n, i, j), expected);
                expected += 1;
            }
        }
        assert_eq!(expected, center_dim(n));
    }

    #[test]
    fn bracket_example() {
        let b = bracket(&[2.0, 0.0, 1.0], &[0.0, 1.0, 0.0]).unwrap();
        assert_eq!(b, vec![2.0, 0.0, -1.0]);
    }

    #[test]
    fn bracket_matches_matrix_form() {
        let x = [0.3, -1.2, 0.7, 2.0];
        let y = [1.1, 0.4, -0.5, 0.9];
        let xv = DVector::from_column_slice(&x);
        let yv = DVector::from_column_slice(&y);
        let m = &yv * xv.transpose() - &xv * yv.transpose();
        let b = bracket(&x, &y).unwrap();
        assert_eq!(coords_from_skew(&m), b);
    }

    #[test]
    fn multiplication_example() {
        let g = el(&[1.0, 0.0], &[0.0]);
        let h = el(&[0.0, 1.0], &[0.0]);
        let p = group_mul(&g, &h).unwrap();
        assert_eq!(p, el(&[1.0, 1.0], &[0.5]));
    }

    #[test]
    fn inverse_and_identity() {
        let g = el(&[0.2, -0.4, 1.5], &[0.1, 0.2, -0.3]);
        let e = GroupElement::identity(3);
        assert_eq!(group_mul(&g, &g.inverse()).unwrap(), e);
        assert_eq!(group_mul(&g, &e).unwrap(), g);
    }

    #[test]
    fn dimension_mismatch_is_rejected() {
        assert!(GroupElement::new(vec![0.0; 3], vec![0.0; 2]).is_err());
        assert!(bracket(&[0.0; 3], &[0.0; 2]).is_err());
    }

    #[test]
    fn z_inner_is_half_frobenius() {
        let a = [0.5, -1.0, 2.0];
        let b = [1.5, 0.25, -0.75];
        let fa = skew_from_coords(3, &a);
        let fb = skew_from_coords(3, &b);
        let frob = fa.component_mul(&fb).sum();
        assert!((z_inner(&a, &b).unwrap() - 0.5 * frob).abs() < 1e-15);
    }

    #[test]
    fn canonical_form_of_a_known_matrix() {
        let a = d2(5, &[3.0, 1.0]);
        let c = canonicalize_skew(&a).unwrap();
        assert_eq!((c.p0, c.p1), (2, 2));
        assert!((c.deltas[0] - 3.0).abs() < 1e-13);
        assert!((c.deltas[1] - 1.0).abs() < 1e-13);
    }

    #[test]
    fn canonical_form_of_zero() {
        let c = canonicalize_skew(&DMatrix::zeros(3, 3)).unwrap();
        assert_eq!(c.deltas, vec![0.0]);
        assert_eq!((c.p0, c.p1), (0, 0));
        assert!((c.k.transpose() * &c.k - DMatrix::identity(3, 3)).norm() < 1e-14);
    }

    #[test]
    fn two_by_two_example() {
        let a = DMatrix::from_row_slice(2, 2, &[0.0, 2.0, -2.0, 0.0]);
        let c = canonicalize_skew(&a).unwrap();
        assert_eq!((c.p0, c.p1, c.mult.clone()), (1, 1, vec![1]));
        assert!((c.mu[0] - 2.0).abs() < 1e-14);
    }

    #[test]
    fn equal_deltas_cluster() {
        let a = d2(4, &[1.5, 1.5]);
        let c = canonicalize_skew(&a).unwrap();
        assert_eq!((c.p0, c.p1, c.mult.clone()), (2, 1, vec![2]));
    }

    #[test]
    fn non_skew_is_rejected() {
        let mut a = d2(2, &[1.0]);
        a[(0, 0)] = 1.0;
        assert!(canonicalize_skew(&a).is_err());
    }

    #[test]
    fn fd_laplacian_of_a_quadratic() {
        // f(x, a) = x_1² + 3 x_1 x_2 + a_12, on F(2). Along X_i the curve is
        // (x + s e_i, a + s [x, e_i]/2); the second derivative of f is 2 for
        // X_1 and 0 for X_2, so L f = -2.
        let grp = FreeGroup { n: 2 };
        let f = |g: &GroupElement| g.x[0] * g.x[0] + 3.0 * g.x[0] * g.x[1] + g.a[0];
        let g = el(&[0.4, -0.8], &[1.3]);
        let v = li_laplacian_fd(&grp, f, &g, &grp.generators(), 1e-2).unwrap();
        assert!((v + 2.0).abs() < 1e-9, "{v}");
    }
}
