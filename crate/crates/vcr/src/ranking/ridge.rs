//! Closed-form ridge regression from activations to concept labels.

use ndarray::{Array1, Array2, ArrayView1, ArrayView2, Axis};

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum RidgeError {
    #[error("need at least two rows, got {0}")]
    TooFewRows(usize),
    #[error("rows of A ({a}) and labels ({y}) differ")]
    Shape { a: usize, y: usize },
    #[error("penalty must be finite and non-negative, got {0}")]
    Penalty(f64),
    #[error("input contains NaN or infinity")]
    NonFinite,
    #[error("normal equations are singular")]
    Singular,
    #[error("ridge weights are zero, so no direction is defined")]
    ZeroWeights,
    #[error("gradient width {grad} does not match concept width {cav}")]
    Dimension { grad: usize, cav: usize },
}

/// Lower-triangular `L` with `L Lᵀ = a`. Fails unless `a` is numerically
/// positive definite.
pub fn cholesky(a: &Array2<f64>) -> Result<Array2<f64>, RidgeError> {
    let n = a.nrows();
    let mut l = Array2::<f64>::zeros((n, n));
    for j in 0..n {
        let mut d = a[[j, j]];
        for k in 0..j {
            d -= l[[j, k]] * l[[j, k]];
        }
        if !(d > 0.0) || !d.is_finite() {
            return Err(RidgeError::Singular);
        }
        let d = d.sqrt();
        l[[j, j]] = d;
        for i in j + 1..n {
            let mut s = a[[i, j]];
            for k in 0..j {
                s -= l[[i, k]] * l[[j, k]];
            }
            l[[i, j]] = s / d;
        }
    }
    Ok(l)
}

/// Solves `L Lᵀ X = B` column by column.
pub fn cho_solve(l: &Array2<f64>, b: &Array2<f64>) -> Array2<f64> {
    let n = l.nrows();
    let mut x = b.clone();
    for mut col in x.axis_iter_mut(Axis(1)) {
        for i in 0..n {
            let mut s = col[i];
            for k in 0..i {
                s -= l[[i, k]] * col[k];
            }
            col[i] = s / l[[i, i]];
        }
        for i in (0..n).rev() {
            let mut s = col[i];
            for k in i + 1..n {
                s -= l[[k, i]] * col[k];
            }
            col[i] = s / l[[i, i]];
        }
    }
    x
}

fn add_diagonal(m: &mut Array2<f64>, lambda: f64) {
    for i in 0..m.nrows() {
        m[[i, i]] += lambda;
    }
}

fn center_columns(a: ArrayView2<f64>) -> Array2<f64> {
    let mean = a.mean_axis(Axis(0)).expect("nonempty");
    &a - &mean
}

/// Precomputed linear map from labels to ridge weights for a fixed
/// activation matrix, so that many concepts cost one matrix product.
#[derive(Clone, Debug)]
pub struct RidgeSolver {
    /// `D × N`; weights are `map · y`.
    map: Array2<f64>,
    center: bool,
    pub dual: bool,
}

impl RidgeSolver {
    /// Uses the primal normal equations when `D ≤ N` and the dual (kernel)
    /// form otherwise.
    pub fn new(a: ArrayView2<f64>, lambda: f64, center: bool) -> Result<Self, RidgeError> {
        let dual = a.ncols() > a.nrows();
        Self::with_form(a, lambda, center, dual)
    }

    pub fn with_form(a: ArrayView2<f64>, lambda: f64, center: bool, dual: bool) -> Result<Self, RidgeError> {
        if a.nrows() < 2 {
            return Err(RidgeError::TooFewRows(a.nrows()));
        }
        if !(lambda >= 0.0 && lambda.is_finite()) {
            return Err(RidgeError::Penalty(lambda));
        }
        if a.iter().any(|v| !v.is_finite()) {
            return Err(RidgeError::NonFinite);
        }
        let ac = if center { center_columns(a) } else { a.to_owned() };
        let map = if dual {
            // w = Aᵀ (A Aᵀ + λI)⁻¹ y
            let mut k = ac.dot(&ac.t());
            add_diagonal(&mut k, lambda);
            let l = cholesky(&k)?;
            let kinv = cho_solve(&l, &Array2::eye(ac.nrows()));
            ac.t().dot(&kinv)
        } else {
            // w = (AᵀA + λI)⁻¹ Aᵀ y
            let mut g = ac.t().dot(&ac);
            add_diagonal(&mut g, lambda);
            let l = cholesky(&g)?;
            cho_solve(&l, &ac.t().to_owned())
        };
        Ok(Self { map, center, dual })
    }

    /// Weights for each column of `y` (`N × K`), returned as `D × K`.
    pub fn solve_many(&self, y: ArrayView2<f64>) -> Array2<f64> {
        if self.center {
            let yc = center_columns(y);
            self.map.dot(&yc)
        } else {
            self.map.dot(&y)
        }
    }

    pub fn solve(&self, y: ArrayView1<f64>) -> Array1<f64> {
        if self.center {
            let m = y.mean().unwrap_or(0.0);
            self.map.dot(&y.mapv(|v| v - m))
        } else {
            self.map.dot(&y)
        }
    }
}

/// A fitted concept direction.
#[derive(Clone, Debug, PartialEq)]
pub struct ConceptVector {
    pub concept_name: String,
    pub raw_weights: Array1<f64>,
    pub unit_vector: Array1<f64>,
    pub lambda: f64,
    pub fit_r2: f64,
}

pub fn fit_cav_named(name: &str, a: ArrayView2<f64>, y: ArrayView1<f64>, lambda: f64, center: bool) -> Result<ConceptVector, RidgeError> {
    if a.nrows() != y.len() {
        return Err(RidgeError::Shape { a: a.nrows(), y: y.len() });
    }
    if y.iter().any(|v| !v.is_finite()) {
        return Err(RidgeError::NonFinite);
    }
    let solver = RidgeSolver::new(a, lambda, center)?;
    let w = solver.solve(y);
    let norm = w.dot(&w).sqrt();
    if norm == 0.0 {
        return Err(RidgeError::ZeroWeights);
    }
    let (ac, yc) = if center {
        let m = y.mean().unwrap();
        (center_columns(a), y.mapv(|v| v - m))
    } else {
        (a.to_owned(), y.to_owned())
    };
    let resid = &yc - &ac.dot(&w);
    let m = y.mean().unwrap();
    let sst = y.mapv(|v| (v - m).powi(2)).sum();
    let fit_r2 = if sst > 0.0 { 1.0 - resid.dot(&resid) / sst } else { 0.0 };
    Ok(ConceptVector {
        concept_name: name.to_string(),
        unit_vector: &w / norm,
        raw_weights: w,
        lambda,
        fit_r2,
    })
}

pub fn fit_cav(a: ArrayView2<f64>, y: ArrayView1<f64>, lambda: f64, center: bool) -> Result<ConceptVector, RidgeError> {
    fit_cav_named("", a, y, lambda, center)
}

/// Mean directional derivative of the task score along `cav.unit_vector`.
pub fn sensitivity(gradients: ArrayView2<f64>, cav: &ConceptVector) -> Result<f64, RidgeError> {
    if gradients.ncols() != cav.unit_vector.len() {
        return Err(RidgeError::Dimension {
            grad: gradients.ncols(),
            cav: cav.unit_vector.len(),
        });
    }
    if gradients.nrows() == 0 {
        return Ok(0.0);
    }
    Ok(gradients.dot(&cav.unit_vector).mean().unwrap())
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn one_dimensional_example() {
        let a = array![[1.0], [2.0]];
        let y = array![1.0, 2.0];
        let cav = fit_cav(a.view(), y.view(), 1.0, false).unwrap();
        assert!((cav.raw_weights[0] - 5.0 / 6.0).abs() < 1e-15);
        assert_eq!(cav.unit_vector[0], 1.0);
    }

    #[test]
    fn heavy_penalty_shrinks_to_zero() {
        let a = array![[1.0, 0.5], [2.0, -1.0], [0.0, 3.0]];
        let y = array![1.0, 2.0, -1.0];
        let cav = fit_cav(a.view(), y.view(), 1e12, true).unwrap();
        assert!(cav.raw_weights.dot(&cav.raw_weights).sqrt() < 1e-6);
        assert!((cav.unit_vector.dot(&cav.unit_vector) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn singular_without_penalty() {
        let a = array![[1.0, 2.0], [2.0, 4.0], [3.0, 6.0]];
        let y = array![1.0, 2.0, 3.0];
        assert_eq!(fit_cav(a.view(), y.view(), 0.0, false).unwrap_err(), RidgeError::Singular);
    }

    #[test]
    fn rejects_nan_and_short_input() {
        let a = array![[1.0], [f64::NAN]];
        let y = array![1.0, 2.0];
        assert_eq!(fit_cav(a.view(), y.view(), 1.0, false).unwrap_err(), RidgeError::NonFinite);
        let a = array![[1.0]];
        let y = array![1.0];
        assert_eq!(fit_cav(a.view(), y.view(), 1.0, false).unwrap_err(), RidgeError::TooFewRows(1));
    }

    #[test]
    fn cholesky_reconstructs() {
        let a = array![[4.0, 2.0, 0.4], [2.0, 5.0, 1.0], [0.4, 1.0, 3.0]];
        let l = cholesky(&a).unwrap();
        let back = l.dot(&l.t());
        assert!(back.iter().zip(a.iter()).all(|(x, y)| (x - y).abs() < 1e-14));
    }

    #[test]
    fn sensitivity_examples() {
        let mut g = Array2::zeros((1, 4));
        g[[0, 0]] = 2.0;
        let mut cav = ConceptVector {
            concept_name: "x".into(),
            raw_weights: array![1.0, 0.0, 0.0, 0.0],
            unit_vector: array![1.0, 0.0, 0.0, 0.0],
            lambda: 1.0,
            fit_r2: 0.0,
        };
        assert_eq!(sensitivity(g.view(), &cav).unwrap(), 2.0);
        cav.unit_vector = array![0.0, 1.0, 0.0, 0.0];
        assert_eq!(sensitivity(g.view(), &cav).unwrap(), 0.0);
        let bad = Array2::zeros((1, 3));
        assert!(matches!(sensitivity(bad.view(), &cav), Err(RidgeError::Dimension { .. })));
    }
}
