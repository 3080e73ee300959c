//! Tensor-product B-spline sieve bases and their roughness-penalty Gram
//! matrices.
//!
//! Each dimension carries a clamped (open uniform) knot vector; the tensor
//! basis is enumerated in row-major dimension order (first dimension
//! slowest). The order-`m` penalty is the Sobolev quadratic form
//! `sum_{|k|=m} m!/prod(k_d!) * integral of f^(k) g^(k)` assembled from
//! per-dimension derivative Gram matrices, which are themselves exact
//! per-cell Gauss–Legendre integrals of piecewise polynomials.

use crate::quad::gauss_legendre;
use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use std::sync::atomic::{AtomicU64, Ordering};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum BasisError {
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("penalty order {order} exceeds spline degree {degree}")]
    OrderTooHigh { order: usize, degree: usize },
}

/// One dimension of the tensor basis: a clamped B-spline family.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct DimBasis {
    /// Full knot vector with (degree+1)-fold end knots.
    knots: Vec<f64>,
    lo: f64,
    hi: f64,
}

impl DimBasis {
    fn new(lo: f64, hi: f64, interior: usize, degree: usize) -> Self {
        let mut knots = Vec::with_capacity(2 * (degree + 1) + interior);
        knots.extend(std::iter::repeat(lo).take(degree + 1));
        for j in 1..=interior {
            knots.push(lo + (hi - lo) * j as f64 / (interior + 1) as f64);
        }
        knots.extend(std::iter::repeat(hi).take(degree + 1));
        DimBasis { knots, lo, hi }
    }

    fn len(&self, degree: usize) -> usize {
        self.knots.len() - degree - 1
    }

    /// Index of the knot span containing `u` (right end maps to the last
    /// nonempty span).
    fn span(&self, u: f64, degree: usize) -> usize {
        let n = self.len(degree);
        if u >= self.knots[n] {
            return n - 1;
        }
        // Largest i with knots[i] <= u: clamped vectors make i >= degree.
        let mut lo = degree;
        let mut hi = n;
        while hi - lo > 1 {
            let mid = (lo + hi) / 2;
            if u < self.knots[mid] {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        lo
    }

    /// Values and derivatives up to order `n_der` of all basis functions at
    /// `u`, as `n_der+1` rows of length `len`.
    fn eval_all(&self, u: f64, degree: usize, n_der: usize) -> Vec<Vec<f64>> {
        let span = self.span(u, degree);
        let ders = ders_basis_funs(span, u, degree, n_der, &self.knots);
        let len = self.len(degree);
        let mut out = vec![vec![0.0; len]; n_der + 1];
        for (k, row) in ders.iter().enumerate() {
            for (j, &v) in row.iter().enumerate() {
                out[k][span - degree + j] = v;
            }
        }
        out
    }

    /// Distinct knot values spanning the cells of the domain.
    fn cells(&self, degree: usize) -> Vec<f64> {
        let mut cells = vec![self.lo];
        for &k in &self.knots[degree + 1..self.knots.len() - degree - 1] {
            cells.push(k);
        }
        cells.push(self.hi);
        cells
    }
}

/// B-spline basis values and derivatives at a point (The NURBS Book, A2.3).
/// Returns `(n_der+1) x (degree+1)` rows covering the nonzero functions
/// `span-degree ..= span`.
fn ders_basis_funs(span: usize, u: f64, p: usize, n_der: usize, knots: &[f64]) -> Vec<Vec<f64>> {
    let n = n_der.min(p);
    let mut ndu = vec![vec![0.0; p + 1]; p + 1];
    let mut left = vec![0.0; p + 1];
    let mut right = vec![0.0; p + 1];
    ndu[0][0] = 1.0;
    for j in 1..=p {
        left[j] = u - knots[span + 1 - j];
        right[j] = knots[span + j] - u;
        let mut saved = 0.0;
        for r in 0..j {
            ndu[j][r] = right[r + 1] + left[j - r];
            let temp = ndu[r][j - 1] / ndu[j][r];
            ndu[r][j] = saved + right[r + 1] * temp;
            saved = left[j - r] * temp;
        }
        ndu[j][j] = saved;
    }
    let mut ders = vec![vec![0.0; p + 1]; n_der + 1];
    for j in 0..=p {
        ders[0][j] = ndu[j][p];
    }
    let mut a = [vec![0.0; p + 1], vec![0.0; p + 1]];
    for r in 0..=p {
        let mut s1 = 0;
        let mut s2 = 1;
        a[0].iter_mut().for_each(|v| *v = 0.0);
        a[1].iter_mut().for_each(|v| *v = 0.0);
        a[0][0] = 1.0;
        for k in 1..=n {
            let mut d = 0.0;
            let rk = r as isize - k as isize;
            let pk = p - k;
            if r >= k {
                a[s2][0] = a[s1][0] / ndu[pk + 1][rk as usize];
                d = a[s2][0] * ndu[rk as usize][pk];
            }
            let j1 = if rk >= -1 { 1 } else { (-rk) as usize };
            let j2 = if r as isize - 1 <= pk as isize {
                k - 1
            } else {
                p - r
            };
            for j in j1..=j2 {
                a[s2][j] = (a[s1][j] - a[s1][j - 1]) / ndu[pk + 1][(rk + j as isize) as usize];
                d += a[s2][j] * ndu[(rk + j as isize) as usize][pk];
            }
            if r <= pk {
                a[s2][k] = -a[s1][k - 1] / ndu[pk + 1][r];
                d += a[s2][k] * ndu[r][pk];
            }
            ders[k][r] = d;
            std::mem::swap(&mut s1, &mut s2);
        }
    }
    let mut factor = p as f64;
    for k in 1..=n {
        for j in 0..=p {
            ders[k][j] *= factor;
        }
        factor *= (p - k) as f64;
    }
    ders
}

/// A tensor-product B-spline basis over a rectangular domain.
#[derive(Debug, Serialize, Deserialize)]
pub struct SieveBasis {
    degree: usize,
    dims: Vec<DimBasis>,
    #[serde(skip, default)]
    clamped: AtomicU64,
}

impl Clone for SieveBasis {
    fn clone(&self) -> Self {
        SieveBasis {
            degree: self.degree,
            dims: self.dims.clone(),
            clamped: AtomicU64::new(self.clamped.load(Ordering::Relaxed)),
        }
    }
}

impl PartialEq for SieveBasis {
    fn eq(&self, other: &Self) -> bool {
        self.degree == other.degree && self.dims == other.dims
    }
}

/// Builds the tensor basis: per-dimension clamped uniform knot vectors with
/// `interior_knots` interior knots and the given spline degree.
pub fn build_basis(
    domain: &[(f64, f64)],
    interior_knots: usize,
    degree: usize,
) -> Result<SieveBasis, BasisError> {
    if domain.is_empty() {
        return Err(BasisError::InvalidInput("empty domain".into()));
    }
    if degree < 1 {
        return Err(BasisError::InvalidInput("degree must be >= 1".into()));
    }
    for &(lo, hi) in domain {
        if !(lo.is_finite() && hi.is_finite() && lo < hi) {
            return Err(BasisError::InvalidInput(format!(
                "degenerate or inverted domain [{lo}, {hi}]"
            )));
        }
    }
    Ok(SieveBasis {
        degree,
        dims: domain
            .iter()
            .map(|&(lo, hi)| DimBasis::new(lo, hi, interior_knots, degree))
            .collect(),
        clamped: AtomicU64::new(0),
    })
}

impl SieveBasis {
    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn n_dims(&self) -> usize {
        self.dims.len()
    }

    pub fn domain(&self) -> Vec<(f64, f64)> {
        self.dims.iter().map(|d| (d.lo, d.hi)).collect()
    }

    /// Total tensor basis size r.
    pub fn len(&self) -> usize {
        self.dims.iter().map(|d| d.len(self.degree)).product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Number of out-of-domain evaluations that were clamped so far.
    pub fn clamp_count(&self) -> u64 {
        self.clamped.load(Ordering::Relaxed)
    }

    /// Evaluates all r tensor basis functions at `x`, clamping coordinates
    /// outside the domain onto the boundary.
    pub fn eval(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.dims.len(), "point dimension mismatch");
        let mut per_dim = Vec::with_capacity(self.dims.len());
        let mut clamped = false;
        for (dim, &xi) in self.dims.iter().zip(x) {
            let u = xi.clamp(dim.lo, dim.hi);
            if u != xi {
                clamped = true;
            }
            per_dim.push(dim.eval_all(u, self.degree, 0).swap_remove(0));
        }
        if clamped {
            self.clamped.fetch_add(1, Ordering::Relaxed);
        }
        tensor_outer(&per_dim)
    }

    /// The order-`m` Sobolev penalty matrix.
    pub fn penalty_matrix(&self, m: usize) -> Result<PenaltyMatrix, BasisError> {
        if m > self.degree {
            return Err(BasisError::OrderTooHigh {
                order: m,
                degree: self.degree,
            });
        }
        // Per-dimension Gram matrices of q-th derivatives, q = 0..=m.
        let grams: Vec<Vec<DMatrix<f64>>> = self
            .dims
            .iter()
            .map(|dim| derivative_grams(dim, self.degree, m))
            .collect();
        let p = self.dims.len();
        let r = self.len();
        let mut matrix = DMatrix::zeros(r, r);
        for combo in compositions(m, p) {
            let coeff = multinomial(m, &combo);
            let mut term = grams[0][combo[0]].clone();
            for d in 1..p {
                term = term.kronecker(&grams[d][combo[d]]);
            }
            matrix += coeff * term;
        }
        // Symmetrize away roundoff.
        let matrix = (&matrix + matrix.transpose()) * 0.5;
        Ok(PenaltyMatrix { order: m, matrix })
    }
}

/// Flattens per-dimension value vectors into the tensor basis vector,
/// row-major in dimension order.
fn tensor_outer(per_dim: &[Vec<f64>]) -> Vec<f64> {
    let mut out = vec![1.0];
    for values in per_dim {
        let mut next = Vec::with_capacity(out.len() * values.len());
        for &o in &out {
            for &v in values {
                next.push(o * v);
            }
        }
        out = next;
    }
    out
}

/// Gram matrices `G_q[i][j] = integral b_i^(q) b_j^(q)` for q = 0..=m, by
/// Gauss–Legendre on each knot cell with degree+1 nodes (exact: the
/// integrand is a polynomial of degree <= 2*degree on each cell).
fn derivative_grams(dim: &DimBasis, degree: usize, m: usize) -> Vec<DMatrix<f64>> {
    let len = dim.len(degree);
    let nodes = degree + 1;
    let (gl_x, gl_w) = gauss_legendre(nodes);
    let mut grams = vec![DMatrix::zeros(len, len); m + 1];
    let cells = dim.cells(degree);
    for w in cells.windows(2) {
        let (a, b) = (w[0], w[1]);
        if b <= a {
            continue;
        }
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        for (&xk, &wk) in gl_x.iter().zip(&gl_w) {
            let u = mid + half * xk;
            let ders = dim.eval_all(u, degree, m);
            for (q, gram) in grams.iter_mut().enumerate() {
                let row = &ders[q];
                for i in 0..len {
                    if row[i] == 0.0 {
                        continue;
                    }
                    for j in 0..len {
                        gram[(i, j)] += wk * half * row[i] * row[j];
                    }
                }
            }
        }
    }
    grams
}

/// All vectors of `parts` nonnegative integers summing to `total`.
fn compositions(total: usize, parts: usize) -> Vec<Vec<usize>> {
    fn rec(total: usize, parts: usize, prefix: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if parts == 1 {
            prefix.push(total);
            out.push(prefix.clone());
            prefix.pop();
            return;
        }
        for k in 0..=total {
            prefix.push(k);
            rec(total - k, parts - 1, prefix, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    rec(total, parts, &mut Vec::new(), &mut out);
    out
}

fn multinomial(total: usize, parts: &[usize]) -> f64 {
    let fact = |n: usize| (1..=n).map(|k| k as f64).product::<f64>();
    fact(total) / parts.iter().map(|&k| fact(k)).product::<f64>()
}

/// A symmetric positive-semidefinite roughness penalty.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PenaltyMatrix {
    /// Derivative order of the penalty.
    pub order: usize,
    pub matrix: DMatrix<f64>,
}
