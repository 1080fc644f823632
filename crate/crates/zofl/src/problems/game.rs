use serde::{Deserialize, Serialize};

use super::ValueFunction;
use crate::error::{Error, Result};
use crate::vecspace::{DenseVector, FeasibleSet};

/// Row-major dense matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let r = rows.len();
        let c = rows.first().map_or(0, |row| row.len());
        if r == 0 || c == 0 {
            return Err(Error::Config("matrix must be non-empty".into()));
        }
        if let Some(bad) = rows.iter().find(|row| row.len() != c) {
            return Err(Error::DimensionMismatch { expected: c, got: bad.len() });
        }
        let data: Vec<f64> = rows.concat();
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("matrix entry".into()));
        }
        Ok(Self { rows: r, cols: c, data })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, data: vec![0.0; rows * cols] }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    /// `A y`.
    pub fn mul_vec(&self, y: &[f64]) -> Vec<f64> {
        assert_eq!(y.len(), self.cols, "mul_vec: dimension mismatch");
        self.data.chunks(self.cols).map(|row| crate::vecspace::dot(row, y)).collect()
    }

    /// `A^T x`.
    pub fn mul_t_vec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.rows, "mul_t_vec: dimension mismatch");
        let mut out = vec![0.0; self.cols];
        for (row, &xi) in self.data.chunks(self.cols).zip(x) {
            for (o, a) in out.iter_mut().zip(row) {
                *o += xi * a;
            }
        }
        out
    }

    /// `x^T A y`.
    pub fn bilinear(&self, x: &[f64], y: &[f64]) -> f64 {
        crate::vecspace::dot(x, &self.mul_vec(y))
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Largest singular value by power iteration on `A^T A`.
    pub fn spectral_norm(&self) -> f64 {
        let mut v = vec![1.0 / (self.cols as f64).sqrt(); self.cols];
        // A deterministic tilt so a symmetric start cannot sit in a null space.
        for (j, vj) in v.iter_mut().enumerate() {
            *vj *= 1.0 + 1e-3 * j as f64;
        }
        let mut sigma = 0.0;
        for _ in 0..1000 {
            let w = self.mul_t_vec(&self.mul_vec(&v));
            let n = crate::vecspace::norm(&w, crate::vecspace::Norm::L2);
            if n == 0.0 {
                return 0.0;
            }
            let next = n.sqrt();
            v = w.into_iter().map(|x| x / n).collect();
            if (next - sigma).abs() <= 1e-14 * next {
                return next;
            }
            sigma = next;
        }
        sigma
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SaddleObjective {
    /// `x^T A y`, minimized in `x` and maximized in `y`.
    Bilinear { a: Matrix },
}

/// A convex-concave `f(x, y, xi)` on `Q_x x Q_y`, queried at `z = (x, y)`.
///
/// `l` is the Lipschitz constant of the operator `F(z) = (grad_x f, -grad_y f)`
/// in the Euclidean setup and `v` the additive inexactness term (zero for
/// bilinear games). `m2_x` and `m2_y` are the blockwise Lipschitz constants
/// of `f`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SaddleProblem {
    pub objective: SaddleObjective,
    pub set_x: FeasibleSet,
    pub set_y: FeasibleSet,
    pub m2_x: f64,
    pub m2_y: f64,
    pub l: f64,
    pub v: f64,
}

impl SaddleProblem {
    pub fn dims(&self) -> (usize, usize) {
        match &self.objective {
            SaddleObjective::Bilinear { a } => (a.rows(), a.cols()),
        }
    }

    pub fn f(&self, x: &[f64], y: &[f64]) -> f64 {
        match &self.objective {
            SaddleObjective::Bilinear { a } => a.bilinear(x, y),
        }
    }

    /// The exact operator `F(z) = (A y, -A^T x)`.
    pub fn operator(&self, z: &[f64]) -> DenseVector {
        let (dx, _) = self.dims();
        let (x, y) = z.split_at(dx);
        match &self.objective {
            SaddleObjective::Bilinear { a } => {
                let mut out = a.mul_vec(y);
                out.extend(a.mul_t_vec(x).into_iter().map(|v| -v));
                DenseVector::from_vec_unchecked(out)
            }
        }
    }

    /// Operator Lipschitz constant in the l1/l_inf setup used with entropy prox.
    pub fn l_entropy(&self) -> f64 {
        match &self.objective {
            SaddleObjective::Bilinear { a } => a.max_abs(),
        }
    }
}

impl ValueFunction for SaddleProblem {
    fn dim(&self) -> usize {
        let (dx, dy) = self.dims();
        dx + dy
    }

    fn value(&self, z: &[f64], _xi: u64) -> f64 {
        let (dx, _) = self.dims();
        let (x, y) = z.split_at(dx);
        self.f(x, y)
    }

    fn domain_distance(&self, z: &[f64]) -> f64 {
        let (dx, _) = self.dims();
        let (x, y) = z.split_at(dx);
        let a = self.set_x.distance(x);
        let b = self.set_y.distance(y);
        (a * a + b * b).sqrt()
    }
}

/// `f(x, y) = x^T A y` on simplex x simplex.
pub fn make_bilinear_game(a: Matrix) -> SaddleProblem {
    let col_norm = (0..a.cols()).map(|j| (0..a.rows()).map(|i| a.get(i, j).powi(2)).sum::<f64>().sqrt()).fold(0.0, f64::max);
    let row_norm = (0..a.rows()).map(|i| (0..a.cols()).map(|j| a.get(i, j).powi(2)).sum::<f64>().sqrt()).fold(0.0, f64::max);
    SaddleProblem {
        l: a.spectral_norm(),
        v: 0.0,
        // grad_x f = A y with y on the simplex, so its norm is at most the largest column norm.
        m2_x: col_norm,
        m2_y: row_norm,
        set_x: FeasibleSet::Simplex,
        set_y: FeasibleSet::Simplex,
        objective: SaddleObjective::Bilinear { a },
    }
}

/// Duality gap `max_j (A^T x)_j - min_i (A y)_i`.
pub fn exact_gap(game: &SaddleProblem, x: &[f64], y: &[f64]) -> Result<f64> {
    match &game.objective {
        SaddleObjective::Bilinear { a } => {
            if x.len() != a.rows() {
                return Err(Error::DimensionMismatch { expected: a.rows(), got: x.len() });
            }
            if y.len() != a.cols() {
                return Err(Error::DimensionMismatch { expected: a.cols(), got: y.len() });
            }
            let best_y = a.mul_t_vec(x).into_iter().fold(f64::NEG_INFINITY, f64::max);
            let best_x = a.mul_vec(y).into_iter().fold(f64::INFINITY, f64::min);
            Ok(best_y - best_x)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::vecspace::RngStream;
    use approx::assert_abs_diff_eq;

    fn swap() -> Matrix {
        Matrix::from_rows(&[vec![0.0, 1.0], vec![1.0, 0.0]]).unwrap()
    }

    #[test]
    fn symmetric_game() {
        let g = make_bilinear_game(swap());
        assert_eq!(exact_gap(&g, &[0.5, 0.5], &[0.5, 0.5]).unwrap(), 0.0);
        assert_eq!(g.f(&[0.5, 0.5], &[0.5, 0.5]), 0.5);
        assert_eq!(exact_gap(&g, &[1.0, 0.0], &[1.0, 0.0]).unwrap(), 1.0);
        assert_abs_diff_eq!(g.l, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn zero_and_corner_games() {
        let z = make_bilinear_game(Matrix::zeros(2, 3));
        assert_eq!(exact_gap(&z, &[0.2, 0.8], &[0.1, 0.1, 0.8]).unwrap(), 0.0);
        assert_eq!(z.l, 0.0);
        // The row player avoids the only payoff, so the value is 0.
        let g = make_bilinear_game(Matrix::from_rows(&[vec![1.0, 0.0], vec![0.0, 0.0]]).unwrap());
        assert_eq!(exact_gap(&g, &[0.0, 1.0], &[0.0, 1.0]).unwrap(), 0.0);
        assert_eq!(exact_gap(&g, &[0.0, 1.0], &[1.0, 0.0]).unwrap(), 0.0);
        assert_eq!(g.f(&[0.0, 1.0], &[0.0, 1.0]), 0.0);
    }

    #[test]
    fn gap_is_nonnegative() {
        let a = Matrix::from_rows(&[vec![0.3, -1.0, 2.0], vec![0.5, 0.0, -0.7]]).unwrap();
        let g = make_bilinear_game(a);
        let mut rng = RngStream::from_seed(1);
        let mut simplex = |d: usize| {
            let raw: Vec<f64> = (0..d).map(|_| -rng.uniform_open().ln()).collect();
            let s: f64 = raw.iter().sum();
            raw.into_iter().map(|v| v / s).collect::<Vec<_>>()
        };
        for _ in 0..10_000 {
            let x = simplex(2);
            let y = simplex(3);
            assert!(exact_gap(&g, &x, &y).unwrap() >= -1e-15);
        }
    }

    #[test]
    fn spectral_norm_of_diagonal() {
        let a = Matrix::from_rows(&[vec![3.0, 0.0], vec![0.0, -4.0]]).unwrap();
        assert_abs_diff_eq!(a.spectral_norm(), 4.0, epsilon = 1e-9);
        assert_eq!(a.max_abs(), 4.0);
    }

    #[test]
    fn operator_of_swap_game() {
        let g = make_bilinear_game(swap());
        let f = g.operator(&[1.0, 0.0, 0.25, 0.75]);
        assert_eq!(f.as_slice(), &[0.75, 0.25, -0.0, -1.0]);
    }
}
