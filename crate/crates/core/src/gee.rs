//! Clustered logistic regression by generalized estimating equations.
//!
//! The marginal model is `logit P(y = 1) = x'b` with binomial variance and
//! either an independence or an exchangeable working correlation within each
//! cluster (carrier). Coefficients solve the estimating equations by Fisher
//! scoring; the exchangeable correlation is re-estimated from Pearson
//! residuals on every iteration; the covariance is the Liang-Zeger sandwich.
//!
//! With `A = diag(v)` and Pearson residuals `e = A^{-1/2}(y - mu)`, the
//! exchangeable inverse `R^{-1} = (I - k 11') / (1 - rho)`,
//! `k = rho / (1 + (n - 1) rho)`, lets each cluster contribute
//!
//! ```text
//! B_c = (X~'X~ - k s s') / (1 - rho)        X~ = A^{1/2} X,  s = X~'1
//! U_c = (X~'e  - k s sum(e)) / (1 - rho)
//! ```
//!
//! without forming any n_c x n_c matrix. The dispersion cancels from both the
//! update and the sandwich and is reported for information only.

use std::collections::BTreeMap;
use std::path::Path;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use crate::coefficients::{
    self, CoefficientEntry, CoefficientSet, FitMetadata, Source, WorkingCorrelation,
    COEFFICIENT_SET_SCHEMA,
};
use crate::error::{Error, Result};
use crate::linalg;

/// Log-odds magnitude treated as evidence of perfect separation.
pub const SEPARATION_BOUND: f64 = 30.0;

/// Clusters per parallel work unit; fixed so reductions are reproducible.
const CHUNK: usize = 32;

/// Dummy-encoded design with the intercept in column 0.
#[derive(Clone, Debug)]
pub struct DesignMatrix {
    names: Vec<String>,
    x: DMatrix<f64>,
    y: DVector<f64>,
    clusters: Vec<String>,
}

impl DesignMatrix {
    pub fn new(names: Vec<String>, x: DMatrix<f64>, y: Vec<f64>, clusters: Vec<String>) -> Result<Self> {
        let n = x.nrows();
        if names.len() != x.ncols() {
            return Err(Error::Shape { expected: x.ncols(), actual: names.len() });
        }
        if y.len() != n {
            return Err(Error::Shape { expected: n, actual: y.len() });
        }
        if clusters.len() != n {
            return Err(Error::Shape { expected: n, actual: clusters.len() });
        }
        if names.first().map(String::as_str) != Some("const") {
            return Err(Error::domain("design must start with the `const` column"));
        }
        if y.iter().any(|&v| v != 0.0 && v != 1.0) {
            return Err(Error::domain("outcomes must be 0 or 1"));
        }
        if clusters.iter().any(String::is_empty) {
            return Err(Error::domain("every row needs a cluster id"));
        }
        Ok(DesignMatrix { names, x, y: DVector::from_vec(y), clusters })
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn x(&self) -> &DMatrix<f64> {
        &self.x
    }

    pub fn y(&self) -> &DVector<f64> {
        &self.y
    }

    pub fn clusters(&self) -> &[String] {
        &self.clusters
    }

    pub fn n_obs(&self) -> usize {
        self.x.nrows()
    }

    pub fn n_cols(&self) -> usize {
        self.x.ncols()
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GeeOptions {
    pub tol: f64,
    pub max_iter: usize,
    /// L2 penalty on the non-intercept coefficients.
    pub ridge: f64,
}

impl Default for GeeOptions {
    fn default() -> Self {
        GeeOptions { tol: 1e-8, max_iter: 100, ridge: 0.0 }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct GeeFit {
    pub names: Vec<String>,
    pub coefficients: Vec<f64>,
    pub sandwich_cov: DMatrix<f64>,
    pub correlation: WorkingCorrelation,
    pub rho: f64,
    pub scale: f64,
    pub n_obs: usize,
    pub n_clusters: usize,
    pub converged: bool,
    pub iterations: usize,
    pub max_abs_score: f64,
    pub ridge: f64,
}

impl GeeFit {
    pub fn standard_errors(&self) -> Vec<f64> {
        (0..self.names.len())
            .map(|j| self.sandwich_cov[(j, j)].max(0.0).sqrt())
            .collect()
    }

    pub fn coefficient(&self, name: &str) -> Option<f64> {
        self.names.iter().position(|n| n == name).map(|j| self.coefficients[j])
    }

    pub fn to_coefficient_set(&self, segment: Option<String>) -> CoefficientSet {
        let se = self.standard_errors();
        CoefficientSet {
            schema: COEFFICIENT_SET_SCHEMA.into(),
            source: Source::Fitted,
            segment,
            coefficients: self
                .names
                .iter()
                .zip(&self.coefficients)
                .zip(se)
                .map(|((name, &estimate), se)| CoefficientEntry { name: name.clone(), estimate, se: Some(se) })
                .collect(),
            covariance: Some(linalg::to_rows(&self.sandwich_cov)),
            fit: Some(FitMetadata {
                correlation: self.correlation,
                rho: self.rho,
                scale: self.scale,
                n_obs: self.n_obs,
                n_clusters: self.n_clusters,
                converged: self.converged,
                iterations: self.iterations,
                max_abs_score: self.max_abs_score,
                ridge: self.ridge,
            }),
            bases: BTreeMap::new(),
            config_hash: None,
        }
    }

    pub fn from_coefficient_set(set: &CoefficientSet) -> Result<Self> {
        let (Some(cov), Some(meta)) = (&set.covariance, &set.fit) else {
            return Err(Error::Config("coefficient set carries no fit metadata".into()));
        };
        let p = set.coefficients.len();
        if cov.len() != p || cov.iter().any(|r| r.len() != p) {
            return Err(Error::Shape { expected: p, actual: cov.len() });
        }
        Ok(GeeFit {
            names: set.coefficients.iter().map(|c| c.name.clone()).collect(),
            coefficients: set.coefficients.iter().map(|c| c.estimate).collect(),
            sandwich_cov: linalg::from_rows(cov),
            correlation: meta.correlation,
            rho: meta.rho,
            scale: meta.scale,
            n_obs: meta.n_obs,
            n_clusters: meta.n_clusters,
            converged: meta.converged,
            iterations: meta.iterations,
            max_abs_score: meta.max_abs_score,
            ridge: meta.ridge,
        })
    }

    pub fn save(&self, path: &Path, segment: Option<String>) -> Result<()> {
        self.to_coefficient_set(segment).save(path)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_coefficient_set(&CoefficientSet::load(path)?)
    }
}

/// Rows of one cluster.
struct Cluster {
    x: DMatrix<f64>,
    y: DVector<f64>,
}

/// Per-chunk sums used both for the moment estimates and the update.
struct Moments {
    sum_e2: f64,
    sum_pairs: f64,
}

struct Step {
    bread: DMatrix<f64>,
    score: DVector<f64>,
    meat: DMatrix<f64>,
}

fn partition(design: &DesignMatrix) -> Vec<Cluster> {
    let mut by_id: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
    for (i, c) in design.clusters.iter().enumerate() {
        by_id.entry(c.as_str()).or_default().push(i);
    }
    let p = design.n_cols();
    by_id
        .into_values()
        .map(|rows| Cluster {
            x: DMatrix::from_fn(rows.len(), p, |i, j| design.x[(rows[i], j)]),
            y: DVector::from_iterator(rows.len(), rows.iter().map(|&i| design.y[i])),
        })
        .collect()
}

/// Weighted design rows and Pearson residuals of one cluster at `beta`.
fn pearson(cluster: &Cluster, beta: &DVector<f64>) -> (DMatrix<f64>, DVector<f64>) {
    let eta = &cluster.x * beta;
    let n = eta.len();
    let mut xt = cluster.x.clone();
    let mut e = DVector::zeros(n);
    for i in 0..n {
        let mu = coefficients::logistic(eta[i]);
        let v = (mu * (1.0 - mu)).max(1e-300);
        let sv = v.sqrt();
        e[i] = (cluster.y[i] - mu) / sv;
        xt.row_mut(i).scale_mut(sv);
    }
    (xt, e)
}

fn moments(clusters: &[Cluster], beta: &DVector<f64>) -> Moments {
    let parts: Vec<Moments> = clusters
        .par_chunks(CHUNK)
        .map(|chunk| {
            let mut m = Moments { sum_e2: 0.0, sum_pairs: 0.0 };
            for c in chunk {
                let (_, e) = pearson(c, beta);
                let s = e.sum();
                let s2 = e.norm_squared();
                m.sum_e2 += s2;
                m.sum_pairs += 0.5 * (s * s - s2);
            }
            m
        })
        .collect();
    parts.into_iter().fold(Moments { sum_e2: 0.0, sum_pairs: 0.0 }, |a, b| Moments {
        sum_e2: a.sum_e2 + b.sum_e2,
        sum_pairs: a.sum_pairs + b.sum_pairs,
    })
}

fn step(clusters: &[Cluster], beta: &DVector<f64>, rho: f64, with_meat: bool) -> Step {
    let p = beta.len();
    let zero = || Step {
        bread: DMatrix::zeros(p, p),
        score: DVector::zeros(p),
        meat: DMatrix::zeros(if with_meat { p } else { 0 }, if with_meat { p } else { 0 }),
    };
    let inv = 1.0 / (1.0 - rho);
    let parts: Vec<Step> = clusters
        .par_chunks(CHUNK)
        .map(|chunk| {
            let mut acc = zero();
            for c in chunk {
                let (xt, e) = pearson(c, beta);
                let n = e.len() as f64;
                let k = rho / (1.0 + (n - 1.0) * rho);
                let s = xt.row_sum().transpose();
                let mut b = xt.tr_mul(&xt);
                b.ger(-k, &s, &s, 1.0);
                let mut u = xt.tr_mul(&e);
                u.axpy(-k * e.sum(), &s, 1.0);
                acc.bread += b * inv;
                let u = u * inv;
                if with_meat {
                    acc.meat.ger(1.0, &u, &u, 1.0);
                }
                acc.score += u;
            }
            acc
        })
        .collect();
    parts.into_iter().fold(zero(), |mut a, b| {
        a.bread += b.bread;
        a.score += b.score;
        if with_meat {
            a.meat += b.meat;
        }
        a
    })
}

/// Exchangeable correlation by the bias-adjusted moment estimator, clamped
/// to the range where every cluster's working correlation is positive
/// definite.
fn estimate_rho(clusters: &[Cluster], m: &Moments, n_obs: usize, p: usize) -> f64 {
    let pairs: f64 = clusters
        .iter()
        .map(|c| {
            let n = c.y.len() as f64;
            0.5 * n * (n - 1.0)
        })
        .sum();
    let phi = m.sum_e2 / (n_obs.saturating_sub(p).max(1)) as f64;
    let denom = (pairs - p as f64) * phi;
    if !(denom > 0.0) {
        return 0.0;
    }
    let max_n = clusters.iter().map(|c| c.y.len()).max().unwrap_or(1);
    let lower = if max_n > 1 { -1.0 / (max_n as f64 - 1.0) } else { -1.0 };
    let margin = 1e-6;
    (m.sum_pairs / denom).clamp(lower + margin, 1.0 - margin)
}

/// Fits the marginal logistic model by GEE with a cluster-robust sandwich
/// covariance.
pub fn fit_gee_logit(
    design: &DesignMatrix,
    correlation: WorkingCorrelation,
    options: &GeeOptions,
) -> Result<GeeFit> {
    let n = design.n_obs();
    let p = design.n_cols();
    let clusters = partition(design);
    if clusters.len() < 2 {
        return Err(Error::InsufficientData(format!(
            "{} cluster(s); at least 2 are required",
            clusters.len()
        )));
    }
    let ones = design.y.iter().filter(|&&v| v == 1.0).count();
    if ones == 0 || ones == n {
        return Err(Error::InsufficientData("all outcomes are identical".into()));
    }
    linalg::check_gram_rank(&design.x.tr_mul(&design.x), &design.names)?;

    let mut penalty = DMatrix::<f64>::identity(p, p) * options.ridge;
    penalty[(0, 0)] = 0.0;

    let ybar = ones as f64 / n as f64;
    let mut beta = DVector::<f64>::zeros(p);
    beta[0] = coefficients::logit(ybar);

    let mut rho = 0.0;
    let mut last_step = f64::INFINITY;
    let mut converged = false;
    let mut iterations = 0;
    while iterations < options.max_iter {
        iterations += 1;
        if correlation == WorkingCorrelation::Exchangeable {
            rho = estimate_rho(&clusters, &moments(&clusters, &beta), n, p);
        }
        let s = step(&clusters, &beta, rho, false);
        let h = &s.bread + &penalty;
        let g = &s.score - &penalty * &beta;
        let chol = linalg::spd_cholesky(h, &design.names)?;
        let delta = chol.solve(&g);
        beta += &delta;
        last_step = delta.amax();
        if let Some(j) = (0..p).find(|&j| !beta[j].is_finite() || beta[j].abs() > SEPARATION_BOUND) {
            if options.ridge == 0.0 {
                return Err(Error::Separation { column: design.names[j].clone(), value: beta[j] });
            }
        }
        log::debug!("gee iteration {iterations}: rho {rho:.6}, max step {last_step:.3e}");
        if last_step < options.tol {
            converged = true;
            break;
        }
    }

    let m = moments(&clusters, &beta);
    if correlation == WorkingCorrelation::Exchangeable {
        rho = estimate_rho(&clusters, &m, n, p);
    }
    let s = step(&clusters, &beta, rho, true);
    let bread = &s.bread + &penalty;
    let bread_inv = linalg::spd_cholesky(bread, &design.names)?.inverse();
    let mut cov = &bread_inv * &s.meat * &bread_inv;
    linalg::symmetrize(&mut cov);
    let score = &s.score - &penalty * &beta;

    let fit = GeeFit {
        names: design.names.clone(),
        coefficients: beta.iter().copied().collect(),
        sandwich_cov: cov,
        correlation,
        rho,
        scale: m.sum_e2 / (n.saturating_sub(p).max(1)) as f64,
        n_obs: n,
        n_clusters: clusters.len(),
        converged,
        iterations,
        max_abs_score: score.amax(),
        ridge: options.ridge,
    };
    if !converged {
        return Err(Error::NonConvergence { iterations, last_step, last: Box::new(fit) });
    }
    Ok(fit)
}

/// Acceptance probability `logistic(x'b)` for a dummy-encoded row.
pub fn predict_accept_probability(fit: &GeeFit, row: &[f64]) -> Result<f64> {
    if row.len() != fit.coefficients.len() {
        return Err(Error::Shape { expected: fit.coefficients.len(), actual: row.len() });
    }
    let eta: f64 = row.iter().zip(&fit.coefficients).map(|(x, b)| x * b).sum();
    Ok(coefficients::logistic(eta))
}

/// Two-sided Wald test of every coefficient at `level` using sandwich SEs.
pub fn wald_significance(fit: &GeeFit, level: f64) -> BTreeMap<String, bool> {
    fit.names
        .iter()
        .zip(&fit.coefficients)
        .zip(fit.standard_errors())
        .map(|((name, &b), se)| (name.clone(), coefficients::is_significant(b, Some(se), level)))
        .collect()
}
