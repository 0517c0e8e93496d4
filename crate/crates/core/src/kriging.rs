//! Gaussian-correlation Kriging.
//!
//! Correlation between coded points `a` and `b`:
//!
//! ```text
//! R(a, b) = exp(-sum_d 10^theta_d * |a_d - b_d|^p_d)
//! ```
//!
//! with `theta` kept on a log10 scale and factor coordinates compared by
//! equality (distance 0 or 1). The diagonal of the training correlation
//! matrix carries the nugget `Lambda` plus a small jitter. Hyperparameters
//! are fitted by minimizing the concentrated negative log-likelihood
//!
//! ```text
//! n/2 * ln(sigma2_hat) + 1/2 * ln det R
//! ```
//!
//! where the generalized least-squares mean `mu_hat` and process variance
//! `sigma2_hat` have been profiled out.

use std::f64::consts::{FRAC_1_SQRT_2, PI};

use serde::{Deserialize, Serialize};

use crate::error::KrigingError;
use crate::linalg::{dot, Cholesky};
use crate::par;
use crate::surrogate_opt::{coordinate_search, minimize, OptimizerConfig, OptimizerKind};

pub const JITTER_START: f64 = 1e-10;
pub const JITTER_MAX: f64 = 1e-4;
/// Search range of log10(Lambda).
pub const LAMBDA_LOG10_RANGE: (f64, f64) = (-9.0, 0.0);
pub const P_RANGE: (f64, f64) = (1.0, 2.0);
pub const SIGMA2_FLOOR: f64 = 1e-300;
/// Extra evaluations per parameter for the coordinate polish after the
/// global likelihood search.
const POLISH_EVALS_PER_PARAM: usize = 200;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CodType {
    /// Scale each input dimension to [0, 1] using the training data range.
    #[default]
    Norm,
    None,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct KrigingConfig {
    pub noise: bool,
    pub n_theta: usize,
    pub min_theta: f64,
    pub max_theta: f64,
    pub n_p: usize,
    pub optim_p: bool,
    pub cod_type: CodType,
    pub use_cod_y: bool,
    /// Generations of the likelihood optimizer.
    pub model_fun_evals: usize,
    pub model_optimizer: OptimizerKind,
}

impl Default for KrigingConfig {
    fn default() -> Self {
        Self {
            noise: false,
            n_theta: 1,
            min_theta: -3.0,
            max_theta: 3.0,
            n_p: 1,
            optim_p: false,
            cod_type: CodType::Norm,
            use_cod_y: false,
            model_fun_evals: 100,
            model_optimizer: OptimizerKind::DifferentialEvolution,
        }
    }
}

impl KrigingConfig {
    pub fn validate(&self, k: usize) -> Result<(), KrigingError> {
        let bad = |m: String| Err(KrigingError::Config(m));
        if !(self.min_theta < self.max_theta) {
            return bad(format!("min_theta {} must be below max_theta {}", self.min_theta, self.max_theta));
        }
        if self.n_theta != 1 && self.n_theta != k {
            return bad(format!("n_theta must be 1 or {k}, got {}", self.n_theta));
        }
        if self.n_p != 1 && self.n_p != k {
            return bad(format!("n_p must be 1 or {k}, got {}", self.n_p));
        }
        if self.model_fun_evals == 0 {
            return bad("model_fun_evals must be at least 1".into());
        }
        Ok(())
    }

    fn n_params(&self) -> usize {
        self.n_theta + if self.optim_p { self.n_p } else { 0 } + usize::from(self.noise)
    }

    fn param_bounds(&self) -> (Vec<f64>, Vec<f64>) {
        let mut lo = vec![self.min_theta; self.n_theta];
        let mut hi = vec![self.max_theta; self.n_theta];
        if self.optim_p {
            lo.extend(std::iter::repeat_n(P_RANGE.0, self.n_p));
            hi.extend(std::iter::repeat_n(P_RANGE.1, self.n_p));
        }
        if self.noise {
            lo.push(LAMBDA_LOG10_RANGE.0);
            hi.push(LAMBDA_LOG10_RANGE.1);
        }
        (lo, hi)
    }

    /// Split a flat parameter vector into `(theta, p, Lambda)`.
    fn unpack(&self, params: &[f64]) -> (Vec<f64>, Vec<f64>, f64) {
        let theta = params[..self.n_theta].to_vec();
        let mut at = self.n_theta;
        let p = if self.optim_p {
            at += self.n_p;
            params[self.n_theta..at].to_vec()
        } else {
            vec![2.0; self.n_p]
        };
        let lambda = if self.noise { 10f64.powf(params[at]) } else { 0.0 };
        (theta, p, lambda)
    }
}

fn broadcast(v: &[f64], k: usize) -> Vec<f64> {
    if v.len() == k {
        v.to_vec()
    } else {
        vec![v[0]; k]
    }
}

#[inline]
fn correlation(a: &[f64], b: &[f64], weights: &[f64], p: &[f64], factor_mask: &[bool]) -> f64 {
    let mut s = 0.0;
    for d in 0..a.len() {
        let diff = if factor_mask.get(d).copied().unwrap_or(false) {
            if a[d].round() == b[d].round() {
                0.0
            } else {
                1.0
            }
        } else {
            (a[d] - b[d]).abs()
        };
        if diff > 0.0 {
            s += weights[d] * if p[d] == 2.0 { diff * diff } else { diff.powf(p[d]) };
        }
    }
    (-s).exp()
}

/// Correlation matrix (row-major, `n x n`) of coded points with unit
/// diagonal plus `lambda`. `theta` is log10-scaled and broadcast when it has
/// a single entry; likewise `p`.
pub fn build_correlation(
    x: &[Vec<f64>],
    theta: &[f64],
    p: &[f64],
    lambda: f64,
    factor_mask: &[bool],
) -> Result<Vec<f64>, KrigingError> {
    let n = x.len();
    let k = x.first().map_or(0, Vec::len);
    let weights: Vec<f64> = broadcast(theta, k).iter().map(|t| 10f64.powf(*t)).collect();
    let p = broadcast(p, k);
    let mut r = vec![0.0; n * n];
    for i in 0..n {
        r[i * n + i] = 1.0 + lambda;
        for j in 0..i {
            let c = correlation(&x[i], &x[j], &weights, &p, factor_mask);
            r[i * n + j] = c;
            r[j * n + i] = c;
        }
    }
    if r.iter().any(|v| !v.is_finite()) {
        return Err(KrigingError::NonFiniteCorrelation);
    }
    Ok(r)
}

/// Everything the concentrated likelihood produces at one parameter point.
#[derive(Debug, Clone)]
struct Concentrated {
    neg_ln_like: f64,
    mu: f64,
    sigma2: f64,
    chol: Cholesky,
    jitter: f64,
    /// `R^-1 (y - 1 mu)`
    alpha: Vec<f64>,
    /// `R^-1 1`
    r_inv_one: Vec<f64>,
    one_r_inv_one: f64,
}

/// Factor `r + jitter * I`, escalating the jitter tenfold from
/// [`JITTER_START`] up to [`JITTER_MAX`].
fn factor_with_jitter(r: &[f64], n: usize) -> Option<(Cholesky, f64)> {
    let mut jitter = JITTER_START;
    let mut a = r.to_vec();
    while jitter <= JITTER_MAX * (1.0 + 1e-9) {
        for i in 0..n {
            a[i * n + i] = r[i * n + i] + jitter;
        }
        if let Some(c) = Cholesky::factor(&a, n) {
            return Some((c, jitter));
        }
        jitter *= 10.0;
    }
    None
}

fn concentrate(
    x: &[Vec<f64>],
    y: &[f64],
    theta: &[f64],
    p: &[f64],
    lambda: f64,
    factor_mask: &[bool],
) -> Option<Concentrated> {
    if !theta.iter().chain(p).all(|v| v.is_finite()) || !(lambda >= 0.0) {
        return None;
    }
    let n = x.len();
    let r = build_correlation(x, theta, p, lambda, factor_mask).ok()?;
    let (chol, jitter) = factor_with_jitter(&r, n)?;
    let ones = vec![1.0; n];
    let r_inv_one = chol.solve(&ones);
    let r_inv_y = chol.solve(y);
    let one_r_inv_one: f64 = r_inv_one.iter().sum();
    let mu = r_inv_y.iter().sum::<f64>() / one_r_inv_one;
    let resid: Vec<f64> = y.iter().map(|v| v - mu).collect();
    let alpha = chol.solve(&resid);
    let sigma2 = (dot(&resid, &alpha) / n as f64).max(SIGMA2_FLOOR);
    let neg_ln_like = 0.5 * n as f64 * sigma2.ln() + 0.5 * chol.ln_det();
    if !neg_ln_like.is_finite() || !mu.is_finite() {
        return None;
    }
    Some(Concentrated {
        neg_ln_like,
        mu,
        sigma2,
        chol,
        jitter,
        alpha,
        r_inv_one,
        one_r_inv_one,
    })
}

/// Concentrated negative log-likelihood on already coded inputs. Returns
/// `+inf` when the correlation matrix cannot be factored even with the
/// largest jitter.
pub fn neg_ln_like(x: &[Vec<f64>], y: &[f64], theta: &[f64], p: &[f64], lambda: f64, factor_mask: &[bool]) -> f64 {
    concentrate(x, y, theta, p, lambda, factor_mask).map_or(f64::INFINITY, |c| c.neg_ln_like)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Prediction {
    pub mean: f64,
    pub std: f64,
    /// Negative expected improvement over the best training target (≤ 0).
    pub neg_ei: f64,
}

/// Standard normal density and distribution function.
pub fn norm_pdf(z: f64) -> f64 {
    (-0.5 * z * z).exp() / (2.0 * PI).sqrt()
}

pub fn norm_cdf(z: f64) -> f64 {
    0.5 * libm::erfc(-z * FRAC_1_SQRT_2)
}

pub fn expected_improvement(y_min: f64, mean: f64, std: f64) -> f64 {
    if !(std > 0.0) {
        return 0.0;
    }
    let d = y_min - mean;
    let z = d / std;
    (d * norm_cdf(z) + std * norm_pdf(z)).max(0.0)
}

/// The serialized form of a fitted model. Derived quantities (factor,
/// weights) are recomputed on load.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct ModelDoc {
    #[serde(rename = "X")]
    x: Vec<Vec<f64>>,
    y: Vec<f64>,
    theta: Vec<f64>,
    p: Vec<f64>,
    #[serde(rename = "Lambda")]
    lambda: Option<f64>,
    mu_hat: f64,
    sigma2_hat: f64,
    cod_bounds: Vec<(f64, f64)>,
    #[serde(rename = "negLnLike")]
    neg_ln_like: f64,
    factor_mask: Vec<bool>,
    /// `(offset, scale)` applied to targets before fitting.
    y_scale: (f64, f64),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(try_from = "ModelDoc", into = "ModelDoc")]
pub struct KrigingModel {
    x: Vec<Vec<f64>>,
    y: Vec<f64>,
    theta: Vec<f64>,
    p: Vec<f64>,
    lambda: Option<f64>,
    cod_bounds: Vec<(f64, f64)>,
    factor_mask: Vec<bool>,
    y_scale: (f64, f64),

    xn: Vec<Vec<f64>>,
    weights: Vec<f64>,
    p_full: Vec<f64>,
    y_min: f64,
    fit: Concentrated,
}

impl PartialEq for KrigingModel {
    fn eq(&self, other: &Self) -> bool {
        ModelDoc::from(self.clone()) == ModelDoc::from(other.clone())
    }
}

impl From<KrigingModel> for ModelDoc {
    fn from(m: KrigingModel) -> Self {
        ModelDoc {
            mu_hat: m.fit.mu,
            sigma2_hat: m.fit.sigma2,
            neg_ln_like: m.fit.neg_ln_like,
            x: m.x,
            y: m.y,
            theta: m.theta,
            p: m.p,
            lambda: m.lambda,
            cod_bounds: m.cod_bounds,
            factor_mask: m.factor_mask,
            y_scale: m.y_scale,
        }
    }
}

impl TryFrom<ModelDoc> for KrigingModel {
    type Error = KrigingError;

    fn try_from(d: ModelDoc) -> Result<Self, Self::Error> {
        KrigingModel::from_parts(d.x, d.y, d.theta, d.p, d.lambda, d.cod_bounds, d.factor_mask, d.y_scale)
    }
}

fn code_inputs(x: &[Vec<f64>], bounds: &[(f64, f64)]) -> Vec<Vec<f64>> {
    x.iter().map(|row| code_point(row, bounds)).collect()
}

fn code_point(row: &[f64], bounds: &[(f64, f64)]) -> Vec<f64> {
    row.iter()
        .zip(bounds)
        .map(|(&v, &(lo, hi))| if hi > lo { (v - lo) / (hi - lo) } else { v - lo })
        .collect()
}

impl KrigingModel {
    /// Rebuild a model from its fitted hyperparameters.
    #[allow(clippy::too_many_arguments)]
    pub fn from_parts(
        x: Vec<Vec<f64>>,
        y: Vec<f64>,
        theta: Vec<f64>,
        p: Vec<f64>,
        lambda: Option<f64>,
        cod_bounds: Vec<(f64, f64)>,
        factor_mask: Vec<bool>,
        y_scale: (f64, f64),
    ) -> Result<Self, KrigingError> {
        let n = x.len();
        if n < 2 || y.len() != n {
            return Err(KrigingError::TooFewPoints(n.min(y.len())));
        }
        let k = x[0].len();
        if k == 0 || theta.is_empty() || p.is_empty() || cod_bounds.len() != k || factor_mask.len() != k {
            return Err(KrigingError::Config("inconsistent model dimensions".into()));
        }
        let xn = code_inputs(&x, &cod_bounds);
        let yn: Vec<f64> = y.iter().map(|v| (v - y_scale.0) / y_scale.1).collect();
        let fit = concentrate(&xn, &yn, &theta, &p, lambda.unwrap_or(0.0), &factor_mask)
            .ok_or(KrigingError::NotPositiveDefinite)?;
        let weights = broadcast(&theta, k).iter().map(|t| 10f64.powf(*t)).collect();
        let p_full = broadcast(&p, k);
        let y_min = y.iter().copied().fold(f64::INFINITY, f64::min);
        Ok(Self {
            x,
            y,
            theta,
            p,
            lambda,
            cod_bounds,
            factor_mask,
            y_scale,
            xn,
            weights,
            p_full,
            y_min,
            fit,
        })
    }

    /// Maximum-likelihood fit on coded inputs `x` and targets `y`. Rows with
    /// non-finite targets are dropped. `factor_mask` marks categorical
    /// dimensions (all numeric when `None`).
    pub fn fit(
        x: &[Vec<f64>],
        y: &[f64],
        config: &KrigingConfig,
        factor_mask: Option<&[bool]>,
        seed: u64,
    ) -> Result<Self, KrigingError> {
        if x.len() != y.len() {
            return Err(KrigingError::Config(format!("{} inputs but {} targets", x.len(), y.len())));
        }
        let (x, y): (Vec<Vec<f64>>, Vec<f64>) = x
            .iter()
            .zip(y)
            .filter(|(_, v)| v.is_finite())
            .map(|(r, v)| (r.clone(), *v))
            .unzip();
        let n = x.len();
        if n < 2 {
            return Err(KrigingError::TooFewPoints(n));
        }
        let k = x[0].len();
        if k == 0 || x.iter().any(|r| r.len() != k || r.iter().any(|v| !v.is_finite())) {
            return Err(KrigingError::NonFiniteInput);
        }
        config.validate(k)?;
        if !config.noise && x.iter().all(|r| r == &x[0]) {
            return Err(KrigingError::IdenticalInputs);
        }
        let factor_mask = factor_mask.map_or_else(|| vec![false; k], <[bool]>::to_vec);
        if factor_mask.len() != k {
            return Err(KrigingError::Config(format!("factor mask has {} entries, need {k}", factor_mask.len())));
        }

        let cod_bounds: Vec<(f64, f64)> = (0..k)
            .map(|d| {
                if config.cod_type == CodType::None || factor_mask[d] {
                    (0.0, 1.0)
                } else {
                    let lo = x.iter().map(|r| r[d]).fold(f64::INFINITY, f64::min);
                    let hi = x.iter().map(|r| r[d]).fold(f64::NEG_INFINITY, f64::max);
                    (lo, hi)
                }
            })
            .collect();
        let y_scale = if config.use_cod_y {
            let lo = y.iter().copied().fold(f64::INFINITY, f64::min);
            let hi = y.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            (lo, if hi > lo { hi - lo } else { 1.0 })
        } else {
            (0.0, 1.0)
        };
        let xn = code_inputs(&x, &cod_bounds);
        let yn: Vec<f64> = y.iter().map(|v| (v - y_scale.0) / y_scale.1).collect();

        let objective = |params: &[f64]| {
            let (theta, p, lambda) = config.unpack(params);
            neg_ln_like(&xn, &yn, &theta, &p, lambda, &factor_mask)
        };
        let (lo, hi) = config.param_bounds();
        let opt = OptimizerConfig {
            kind: config.model_optimizer,
            max_iter: config.model_fun_evals,
            population: None,
            seed,
        };
        let global = minimize(objective, &lo, &hi, &opt);
        let (best, best_f, _) = coordinate_search(
            &objective,
            &global.x,
            global.f,
            &lo,
            &hi,
            POLISH_EVALS_PER_PARAM * config.n_params(),
        );
        if !best_f.is_finite() {
            return Err(KrigingError::NoFiniteLikelihood);
        }
        let (theta, p, lambda) = config.unpack(&best);
        Self::from_parts(
            x,
            y,
            theta,
            p,
            config.noise.then_some(lambda),
            cod_bounds,
            factor_mask,
            y_scale,
        )
    }

    pub fn dim(&self) -> usize {
        self.cod_bounds.len()
    }

    pub fn n(&self) -> usize {
        self.x.len()
    }

    pub fn x(&self) -> &[Vec<f64>] {
        &self.x
    }

    pub fn y(&self) -> &[f64] {
        &self.y
    }

    /// log10-scaled activity parameters.
    pub fn theta(&self) -> &[f64] {
        &self.theta
    }

    pub fn p(&self) -> &[f64] {
        &self.p
    }

    pub fn lambda(&self) -> Option<f64> {
        self.lambda
    }

    pub fn mu_hat(&self) -> f64 {
        self.fit.mu
    }

    pub fn sigma2_hat(&self) -> f64 {
        self.fit.sigma2
    }

    pub fn neg_ln_like(&self) -> f64 {
        self.fit.neg_ln_like
    }

    pub fn jitter(&self) -> f64 {
        self.fit.jitter
    }

    pub fn cod_bounds(&self) -> &[(f64, f64)] {
        &self.cod_bounds
    }

    pub fn factor_mask(&self) -> &[bool] {
        &self.factor_mask
    }

    /// Lower-triangular factor of the (jittered) correlation matrix,
    /// row-major.
    pub fn chol(&self) -> &[f64] {
        self.fit.chol.lower()
    }

    /// Best training target, the reference of expected improvement.
    pub fn y_min(&self) -> f64 {
        self.y_min
    }

    /// Audit document with `X`, `y`, `theta`, `p`, `Lambda`, `mu_hat`,
    /// `sigma2_hat`, `cod_bounds` and `negLnLike`.
    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(self).expect("model serializes")
    }

    pub fn predict(&self, x: &[f64]) -> Prediction {
        let xn = code_point(x, &self.cod_bounds);
        let interpolating = self.lambda.is_none();
        let mut exact = false;
        let r: Vec<f64> = self
            .xn
            .iter()
            .map(|t| {
                let c = correlation(&xn, t, &self.weights, &self.p_full, &self.factor_mask);
                if c == 1.0 && interpolating && xn == *t {
                    // same site as a training row: use the row's diagonal
                    exact = true;
                    1.0 + self.fit.jitter
                } else {
                    c
                }
            })
            .collect();
        let mean_n = self.fit.mu + dot(&r, &self.fit.alpha);
        let var_factor = if exact {
            0.0
        } else {
            let v = self.fit.chol.forward(&r);
            let gls = 1.0 - dot(&r, &self.fit.r_inv_one);
            1.0 - dot(&v, &v) + gls * gls / self.fit.one_r_inv_one
        };
        let std_n = (self.fit.sigma2 * var_factor.max(0.0)).sqrt();
        let mean = mean_n * self.y_scale.1 + self.y_scale.0;
        let std = std_n * self.y_scale.1;
        let neg_ei = -expected_improvement(self.y_min, mean, std);
        Prediction { mean, std, neg_ei }
    }

    pub fn predict_many(&self, xs: &[Vec<f64>]) -> Vec<Prediction> {
        par::map(xs, |x| self.predict(x))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn schonlau() -> (Vec<Vec<f64>>, Vec<f64>) {
        (
            [1.0, 2.0, 3.0, 4.0, 12.0].iter().map(|v| vec![*v]).collect(),
            vec![0.0, -1.75, -2.0, -0.5, 5.0],
        )
    }

    #[test]
    fn correlation_closed_forms() {
        let r = build_correlation(&[vec![0.3, 0.1], vec![0.3, 0.1]], &[0.0], &[2.0], 0.0, &[false, false]).unwrap();
        assert_eq!(r[1], 1.0);
        let r = build_correlation(&[vec![0.0], vec![1.0]], &[0.0], &[2.0], 0.0, &[false]).unwrap();
        assert_abs_diff_eq!(r[1], (-1.0f64).exp(), epsilon = 1e-15);
        assert_abs_diff_eq!(r[1], 0.367879, epsilon = 1e-6);
        assert_eq!(r[0], 1.0);
    }

    #[test]
    fn factor_dimensions_use_equality_distance() {
        let x = [vec![0.0, 0.0], vec![0.0, 2.0], vec![0.0, 3.0]];
        let r = build_correlation(&x, &[0.0], &[2.0], 0.0, &[false, true]).unwrap();
        assert_abs_diff_eq!(r[1], (-1.0f64).exp(), epsilon = 1e-15);
        assert_abs_diff_eq!(r[2], r[1], epsilon = 0.0);
    }

    #[test]
    fn schonlau_likelihood_at_reported_theta() {
        let (x, y) = schonlau();
        let xn = code_inputs(&x, &[(1.0, 12.0)]);
        let v = neg_ln_like(&xn, &y, &[1.09276], &[2.0], 0.0, &[false]);
        assert_abs_diff_eq!(v, 1.20788205, epsilon = 1e-4);
    }

    #[test]
    fn schonlau_fit() {
        let (x, y) = schonlau();
        let m = KrigingModel::fit(&x, &y, &KrigingConfig::default(), None, 123).unwrap();
        assert_abs_diff_eq!(m.theta()[0], 1.09276, epsilon = 0.15);
        assert_abs_diff_eq!(m.neg_ln_like(), 1.20788, epsilon = 0.05);
        assert!(m.lambda().is_none());
    }

    #[test]
    fn constant_targets_stay_finite() {
        let x = vec![vec![0.0], vec![1.0]];
        let v = neg_ln_like(&x, &[2.0, 2.0], &[0.0], &[2.0], 0.0, &[false]);
        assert!(v.is_finite());
        assert!(v < -600.0);
    }

    #[test]
    fn fit_errors() {
        let cfg = KrigingConfig::default();
        assert_eq!(
            KrigingModel::fit(&[vec![0.0]], &[1.0], &cfg, None, 1).unwrap_err(),
            KrigingError::TooFewPoints(1)
        );
        assert_eq!(
            KrigingModel::fit(&[vec![0.0], vec![1.0]], &[1.0, f64::NAN], &cfg, None, 1).unwrap_err(),
            KrigingError::TooFewPoints(1)
        );
        assert_eq!(
            KrigingModel::fit(&[vec![0.5], vec![0.5], vec![0.5]], &[1.0, 1.1, 0.9], &cfg, None, 1).unwrap_err(),
            KrigingError::IdenticalInputs
        );
        let noisy = KrigingConfig { noise: true, ..cfg };
        assert!(KrigingModel::fit(&[vec![0.5], vec![0.5], vec![0.5]], &[1.0, 1.1, 0.9], &noisy, None, 1).is_ok());
    }

    #[test]
    fn linear_data_interpolated() {
        let x: Vec<Vec<f64>> = (0..6).map(|i| vec![i as f64]).collect();
        let y: Vec<f64> = (0..6).map(|i| 2.0 * i as f64 - 1.0).collect();
        let m = KrigingModel::fit(&x, &y, &KrigingConfig::default(), None, 5).unwrap();
        for (xi, yi) in x.iter().zip(&y) {
            let p = m.predict(xi);
            assert_abs_diff_eq!(p.mean, *yi, epsilon = 1e-6);
            assert_eq!(p.std, 0.0);
            assert_eq!(p.neg_ei, 0.0);
        }
    }

    #[test]
    fn ei_at_mean_equal_ymin() {
        let std = 0.7;
        assert_abs_diff_eq!(expected_improvement(1.0, 1.0, std), std * 0.3989422804014327, epsilon = 1e-14);
        assert_eq!(expected_improvement(1.0, 0.0, 0.0), 0.0);
    }

    #[test]
    fn far_field_reverts_to_process_mean() {
        let (x, y) = schonlau();
        let m = KrigingModel::fit(&x, &y, &KrigingConfig::default(), None, 123).unwrap();
        let p = m.predict(&[1e6]);
        assert_abs_diff_eq!(p.mean, m.mu_hat(), epsilon = 1e-12);
        let expected = (m.sigma2_hat() * (1.0 + 1.0 / m.fit.one_r_inv_one)).sqrt();
        assert_abs_diff_eq!(p.std, expected, epsilon = 1e-12);
    }

    #[test]
    fn cholesky_reconstructs_correlation() {
        let (x, y) = schonlau();
        let m = KrigingModel::fit(&x, &y, &KrigingConfig::default(), None, 123).unwrap();
        let n = m.n();
        let mut r = build_correlation(&m.xn, m.theta(), m.p(), 0.0, m.factor_mask()).unwrap();
        for i in 0..n {
            r[i * n + i] += m.jitter();
        }
        let l = m.chol();
        let (mut err, mut norm) = (0.0, 0.0);
        for i in 0..n {
            for j in 0..n {
                let v: f64 = (0..n).map(|q| l[i * n + q] * l[j * n + q]).sum();
                err += (v - r[i * n + j]).powi(2);
                norm += r[i * n + j].powi(2);
            }
        }
        assert!((err / norm).sqrt() < 1e-8);
    }

    #[test]
    fn serde_round_trip_rebuilds_caches() {
        let (x, y) = schonlau();
        let m = KrigingModel::fit(&x, &y, &KrigingConfig::default(), None, 123).unwrap();
        let doc = serde_json::to_string(&m).unwrap();
        for key in ["\"X\"", "\"theta\"", "\"Lambda\"", "\"negLnLike\"", "\"mu_hat\"", "\"sigma2_hat\"", "\"cod_bounds\""] {
            assert!(doc.contains(key), "{key}");
        }
        let back: KrigingModel = serde_json::from_str(&doc).unwrap();
        assert_eq!(back, m);
        assert_eq!(back.predict(&[5.5]), m.predict(&[5.5]));
    }

    #[test]
    fn anisotropic_fit_has_theta_per_dimension() {
        let x: Vec<Vec<f64>> = (0..12).map(|i| vec![(i % 4) as f64 / 3.0, (i / 4) as f64 / 2.0]).collect();
        let y: Vec<f64> = x.iter().map(|r| r[0] * r[0] + r[1] * r[1]).collect();
        let cfg = KrigingConfig { n_theta: 2, ..Default::default() };
        let m = KrigingModel::fit(&x, &y, &cfg, None, 1).unwrap();
        assert_eq!(m.theta().len(), 2);
    }

    #[test]
    fn optim_p_stays_in_range() {
        let (x, y) = schonlau();
        let cfg = KrigingConfig { optim_p: true, ..Default::default() };
        let m = KrigingModel::fit(&x, &y, &cfg, None, 3).unwrap();
        assert!(m.p()[0] >= 1.0 && m.p()[0] <= 2.0);
        assert!(m.neg_ln_like() <= 1.20788 + 1e-6);
    }

    #[test]
    fn config_validation() {
        assert!(KrigingConfig { n_theta: 3, ..Default::default() }.validate(2).is_err());
        assert!(KrigingConfig { min_theta: 3.0, ..Default::default() }.validate(2).is_err());
        assert!(KrigingConfig { n_theta: 2, n_p: 2, ..Default::default() }.validate(2).is_ok());
    }
}
