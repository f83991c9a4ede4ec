//! Dense symmetric linear algebra for small systems.
//!
//! Every solve in this crate involves a symmetric positive semi-definite
//! matrix whose dimension is the regression width (a handful of columns),
//! so a cyclic Jacobi eigensolver is simple, deterministic and accurate.
//! Rank detection uses a power-of-two diagonal equilibration first: the
//! scaling is exact in floating point and makes the relative singular
//! value tolerance meaningful when columns live on wildly different
//! scales (say dollars next to indicator variables).

use alloc::vec;
use alloc::vec::Vec;

use crate::fmath;

/// Relative singular value tolerance for rank detection.
pub(crate) const SINGULAR_REL_TOL: f64 = 1e-10;

const JACOBI_MAX_SWEEPS: usize = 64;
const REFINE_STEPS: usize = 3;

/// Symmetric matrix in full row-major storage.
#[derive(Debug, Clone, PartialEq)]
pub(crate) struct SymMat {
    pub n: usize,
    pub a: Vec<f64>,
}

impl SymMat {
    pub fn zeros(n: usize) -> Self {
        SymMat {
            n,
            a: vec![0.0; n * n],
        }
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.a[i * self.n + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.a[i * self.n + j] = v;
    }

    #[inline]
    pub fn add(&mut self, i: usize, j: usize, v: f64) {
        self.a[i * self.n + j] += v;
    }

    pub fn matvec(&self, x: &[f64], out: &mut [f64]) {
        debug_assert_eq!(x.len(), self.n);
        for i in 0..self.n {
            let row = &self.a[i * self.n..(i + 1) * self.n];
            out[i] = row.iter().zip(x).map(|(a, b)| a * b).sum();
        }
    }

    pub fn scale(&mut self, s: f64) {
        for v in &mut self.a {
            *v *= s;
        }
    }
}

#[derive(Debug)]
pub(crate) struct Eigen {
    /// Eigenvalues, unordered.
    pub values: Vec<f64>,
    /// Row-major matrix whose column k is the eigenvector for `values[k]`.
    pub vectors: Vec<f64>,
    n: usize,
}

impl Eigen {
    /// Solve `A x = b` given `A = V diag(values) V^T`.
    fn solve(&self, b: &[f64], out: &mut [f64]) {
        let n = self.n;
        let mut u = vec![0.0; n];
        for k in 0..n {
            let mut dot = 0.0;
            for i in 0..n {
                dot += self.vectors[i * n + k] * b[i];
            }
            u[k] = dot / self.values[k];
        }
        for i in 0..n {
            let mut acc = 0.0;
            for k in 0..n {
                acc += self.vectors[i * n + k] * u[k];
            }
            out[i] = acc;
        }
    }
}

/// Cyclic Jacobi eigendecomposition. Deterministic: fixed sweep order,
/// fixed stopping rule.
pub(crate) fn jacobi_eigen(m: &SymMat) -> Eigen {
    let n = m.n;
    let mut a = m.a.clone();
    let mut v = vec![0.0; n * n];
    for i in 0..n {
        v[i * n + i] = 1.0;
    }
    if n <= 1 {
        return Eigen {
            values: if n == 1 { vec![a[0]] } else { Vec::new() },
            vectors: v,
            n,
        };
    }
    for _ in 0..JACOBI_MAX_SWEEPS {
        let mut off = 0.0;
        let mut fro = 0.0;
        for i in 0..n {
            for j in 0..n {
                let x = a[i * n + j];
                fro += x * x;
                if i != j {
                    off += x * x;
                }
            }
        }
        if off <= 1e-30 * fro || fro == 0.0 {
            break;
        }
        for p in 0..n - 1 {
            for q in p + 1..n {
                let apq = a[p * n + q];
                if apq == 0.0 {
                    continue;
                }
                let app = a[p * n + p];
                let aqq = a[q * n + q];
                // Skip rotations that cannot change anything at f64 precision.
                if fmath::abs(apq) <= 1e-18 * (fmath::abs(app) + fmath::abs(aqq)) {
                    continue;
                }
                let theta = (aqq - app) / (2.0 * apq);
                let t = if theta >= 0.0 {
                    1.0 / (theta + fmath::sqrt(1.0 + theta * theta))
                } else {
                    -1.0 / (-theta + fmath::sqrt(1.0 + theta * theta))
                };
                let c = 1.0 / fmath::sqrt(1.0 + t * t);
                let s = t * c;
                // Update A = J^T A J on rows/columns p and q.
                for i in 0..n {
                    let aip = a[i * n + p];
                    let aiq = a[i * n + q];
                    a[i * n + p] = c * aip - s * aiq;
                    a[i * n + q] = s * aip + c * aiq;
                }
                for j in 0..n {
                    let apj = a[p * n + j];
                    let aqj = a[q * n + j];
                    a[p * n + j] = c * apj - s * aqj;
                    a[q * n + j] = s * apj + c * aqj;
                }
                for i in 0..n {
                    let vip = v[i * n + p];
                    let viq = v[i * n + q];
                    v[i * n + p] = c * vip - s * viq;
                    v[i * n + q] = s * vip + c * viq;
                }
            }
        }
    }
    let values = (0..n).map(|i| a[i * n + i]).collect();
    Eigen {
        values,
        vectors: v,
        n,
    }
}

/// Why a solve was rejected.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct SingularInfo {
    pub ratio: f64,
    pub tol: f64,
}

/// Factorization of an equilibrated SPD matrix, reusable across many
/// right-hand sides.
#[derive(Debug)]
pub(crate) struct SpdSolver {
    scale: Vec<f64>,
    eig: Eigen,
    g: SymMat,
    n: usize,
}

impl SpdSolver {
    /// Factor `g`, rejecting matrices whose equilibrated eigenvalue ratio
    /// is at or below `rel_tol`.
    pub fn new(g: &SymMat, rel_tol: f64) -> Result<Self, SingularInfo> {
        let n = g.n;
        if n == 0 {
            return Err(SingularInfo {
                ratio: 0.0,
                tol: rel_tol,
            });
        }
        let mut scale = vec![1.0; n];
        for j in 0..n {
            let d = g.get(j, j);
            scale[j] = fmath::pow2_floor(fmath::sqrt(d.max(0.0)));
        }
        let mut gs = SymMat::zeros(n);
        for i in 0..n {
            for j in 0..n {
                gs.set(i, j, g.get(i, j) / (scale[i] * scale[j]));
            }
        }
        let eig = jacobi_eigen(&gs);
        let mut max_abs = 0.0_f64;
        let mut min_val = f64::INFINITY;
        for &v in &eig.values {
            max_abs = max_abs.max(fmath::abs(v));
            min_val = min_val.min(v);
        }
        if max_abs == 0.0 {
            return Err(SingularInfo {
                ratio: 0.0,
                tol: rel_tol,
            });
        }
        let ratio = min_val / max_abs;
        if !(ratio > rel_tol) {
            return Err(SingularInfo {
                ratio,
                tol: rel_tol,
            });
        }
        Ok(SpdSolver {
            scale,
            eig,
            g: g.clone(),
            n,
        })
    }

    fn solve_once(&self, rhs: &[f64], out: &mut [f64]) {
        let n = self.n;
        let mut b = vec![0.0; n];
        for i in 0..n {
            b[i] = rhs[i] / self.scale[i];
        }
        self.eig.solve(&b, out);
        for i in 0..n {
            out[i] /= self.scale[i];
        }
    }

    /// Solve with a couple of iterative refinement steps to push the
    /// normal-equation residual well below 1e-8 * |rhs|.
    pub fn solve(&self, rhs: &[f64]) -> Vec<f64> {
        let n = self.n;
        let mut x = vec![0.0; n];
        self.solve_once(rhs, &mut x);
        let rhs_norm = fmath::norm2(rhs);
        let mut ax = vec![0.0; n];
        let mut corr = vec![0.0; n];
        for _ in 0..REFINE_STEPS {
            self.g.matvec(&x, &mut ax);
            let mut res = vec![0.0; n];
            for i in 0..n {
                res[i] = rhs[i] - ax[i];
            }
            if fmath::norm2(&res) <= 1e-14 * (1.0 + rhs_norm) {
                break;
            }
            self.solve_once(&res, &mut corr);
            for i in 0..n {
                x[i] += corr[i];
            }
        }
        x
    }
}

/// One-shot factor-and-solve.
pub(crate) fn solve_spd(
    g: &SymMat,
    rhs: &[f64],
    rel_tol: f64,
) -> Result<Vec<f64>, SingularInfo> {
    Ok(SpdSolver::new(g, rel_tol)?.solve(rhs))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha12Rng;

    fn residual(g: &SymMat, x: &[f64], rhs: &[f64]) -> f64 {
        let mut ax = vec![0.0; g.n];
        g.matvec(x, &mut ax);
        let r: Vec<f64> = ax.iter().zip(rhs).map(|(a, b)| a - b).collect();
        fmath::norm2(&r)
    }

    #[test]
    fn eigen_of_diagonal_matrix() {
        let mut m = SymMat::zeros(3);
        m.set(0, 0, 4.0);
        m.set(1, 1, 9.0);
        m.set(2, 2, 1.0);
        let e = jacobi_eigen(&m);
        let mut vals = e.values.clone();
        vals.sort_by(|a, b| a.partial_cmp(b).unwrap());
        assert_eq!(vals, vec![1.0, 4.0, 9.0]);
    }

    #[test]
    fn eigen_known_2x2() {
        // [[2,1],[1,2]] has eigenvalues 1 and 3.
        let mut m = SymMat::zeros(2);
        m.set(0, 0, 2.0);
        m.set(0, 1, 1.0);
        m.set(1, 0, 1.0);
        m.set(1, 1, 2.0);
        let e = jacobi_eigen(&m);
        let mut vals = e.values.clone();
        vals.sort_by(|a, b| a.partial_cmp(b).unwrap());
        assert!((vals[0] - 1.0).abs() < 1e-14);
        assert!((vals[1] - 3.0).abs() < 1e-14);
    }

    #[test]
    fn random_spd_solves_have_small_residuals() {
        let mut rng = ChaCha12Rng::seed_from_u64(7);
        for trial in 0..50 {
            let n = 1 + (trial % 9);
            // G = B^T B + tiny ridge, with badly scaled columns.
            let mut b = vec![0.0; (n + 3) * n];
            for v in &mut b {
                *v = rng.gen_range(-1.0..1.0);
            }
            let mut g = SymMat::zeros(n);
            for i in 0..n {
                for j in 0..n {
                    let mut acc = 0.0;
                    for r in 0..n + 3 {
                        acc += b[r * n + i] * b[r * n + j];
                    }
                    g.set(i, j, acc);
                }
            }
            for i in 0..n {
                g.add(i, i, 1e-3);
            }
            // Rescale row/col i by 10^(i-2): exercises equilibration.
            for i in 0..n {
                for j in 0..n {
                    let s = libm::pow(10.0, (i as f64) - 2.0) * libm::pow(10.0, (j as f64) - 2.0);
                    let v = g.get(i, j) * s;
                    g.set(i, j, v);
                }
            }
            // Right-hand sides in real use are X^T y, so their entries carry
            // the same per-column scale as the Gram matrix. Build one that way.
            let t: Vec<f64> = (0..n).map(|_| rng.gen_range(-2.0..2.0)).collect();
            let mut rhs = vec![0.0; n];
            g.matvec(&t, &mut rhs);
            let x = solve_spd(&g, &rhs, SINGULAR_REL_TOL).expect("nonsingular");
            let rel = residual(&g, &x, &rhs) / (1.0 + fmath::norm2(&rhs));
            assert!(rel < 1e-10, "trial {trial}: relative residual {rel:e}");
        }
    }

    #[test]
    fn exactly_singular_matrix_is_rejected() {
        // Rank-1 matrix from a repeated column.
        let mut g = SymMat::zeros(2);
        g.set(0, 0, 4.0);
        g.set(0, 1, 4.0);
        g.set(1, 0, 4.0);
        g.set(1, 1, 4.0);
        let err = SpdSolver::new(&g, SINGULAR_REL_TOL).unwrap_err();
        assert_eq!(err.tol, SINGULAR_REL_TOL);
        assert!(err.ratio <= SINGULAR_REL_TOL);
    }

    #[test]
    fn scale_disparity_alone_is_not_singular() {
        // Diagonal with entries 1 and 1e-24: a raw relative eigenvalue test
        // would reject this, but the columns are orthogonal, so after
        // equilibration it solves cleanly.
        let mut g = SymMat::zeros(2);
        g.set(0, 0, 1.0);
        g.set(1, 1, 1e-24);
        let x = solve_spd(&g, &[2.0, 3e-24], SINGULAR_REL_TOL).expect("solvable");
        assert!((x[0] - 2.0).abs() < 1e-12);
        assert!((x[1] - 3.0).abs() < 1e-10);
    }
}
