//! Linear-regression backbone: fixed-effect absorption, OLS, and the
//! inference flavors used across the estimators.
//!
//! Fixed effects are absorbed by iterated within-group demeaning (alternating
//! projections), which is exact in one pass for a single effect and converges
//! geometrically for several. Covariance flavors:
//!
//! * classical: `σ̂²(X'X)⁻¹` with `σ̂² = SSR/(n−K)`;
//! * HC1: sandwich with `Σ xᵢxᵢ'eᵢ²` meat and an `n/(n−K)` inflation;
//! * CR1 cluster: sandwich over cluster score sums with the small-sample
//!   factor `(G/(G−1))·((N−1)/(N−K))`; t/p use G−1 degrees of freedom;
//! * Newey–West: Bartlett-kernel HAC,
//!   `S = Σ_t uₜuₜ' + Σ_{l=1..L} w_l Σ_t (uₜu'_{t−l} + u_{t−l}uₜ')` with
//!   `w_l = 1 − l/(L+1)` and `uₜ = xₜeₜ`; `L = 0` reduces to HC0 exactly.
//!
//! `K` counts explicit columns plus absorbed fixed-effect levels, except that
//! a fixed effect nested inside the clustering key is not counted in the
//! cluster factor (its variation never enters a between-cluster comparison).

use indexmap::IndexMap;
use nalgebra::{Cholesky, DMatrix, DVector, SymmetricEigen};
use statrs::distribution::{ContinuousCDF, FisherSnedecor, StudentsT};

use crate::error::{Error, Result};

/// One categorical fixed effect: a name plus a dense group id per row.
#[derive(Debug, Clone)]
pub struct FixedEffect {
    pub name: String,
    pub groups: Vec<usize>,
    pub n_groups: usize,
}

impl FixedEffect {
    pub fn from_keys<K: std::hash::Hash + Eq + Clone>(name: impl Into<String>, keys: &[K]) -> Self {
        let mut ids: IndexMap<K, usize> = IndexMap::new();
        let groups = keys
            .iter()
            .map(|k| {
                let next = ids.len();
                *ids.entry(k.clone()).or_insert(next)
            })
            .collect();
        Self { name: name.into(), groups, n_groups: ids.len() }
    }
}

/// A regression design: outcome, named columns, fixed effects, clusters.
///
/// Rows are observations; for Newey–West inference rows must be in time
/// order.
#[derive(Debug, Clone, Default)]
pub struct Design {
    y: Vec<f64>,
    names: Vec<String>,
    cols: Vec<Vec<f64>>,
    fixed_effects: Vec<FixedEffect>,
    cluster: Option<(String, Vec<usize>, usize)>,
}

impl Design {
    pub fn new(y: Vec<f64>) -> Self {
        Self { y, ..Self::default() }
    }

    pub fn n_obs(&self) -> usize {
        self.y.len()
    }

    pub fn n_cols(&self) -> usize {
        self.cols.len()
    }

    pub fn add_column(&mut self, name: impl Into<String>, values: Vec<f64>) -> Result<&mut Self> {
        let name = name.into();
        if values.len() != self.y.len() {
            return Err(Error::estimation(format!(
                "column '{}' has {} rows, outcome has {}",
                name,
                values.len(),
                self.y.len()
            )));
        }
        if self.names.iter().any(|n| *n == name) {
            return Err(Error::estimation(format!("duplicate design column '{name}'")));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::estimation(format!(
                "column '{name}' has a non-finite value at row {i}"
            )));
        }
        self.names.push(name);
        self.cols.push(values);
        Ok(self)
    }

    /// Convenience: a column of ones.
    pub fn add_intercept(&mut self) -> Result<&mut Self> {
        let n = self.y.len();
        self.add_column("const", vec![1.0; n])
    }

    pub fn add_fixed_effect<K: std::hash::Hash + Eq + Clone>(
        &mut self,
        name: impl Into<String>,
        keys: &[K],
    ) -> Result<&mut Self> {
        if keys.len() != self.y.len() {
            return Err(Error::estimation("fixed-effect keys do not match row count"));
        }
        self.fixed_effects.push(FixedEffect::from_keys(name, keys));
        Ok(self)
    }

    pub fn set_clusters<K: std::hash::Hash + Eq + Clone>(
        &mut self,
        name: impl Into<String>,
        keys: &[K],
    ) -> Result<&mut Self> {
        if keys.len() != self.y.len() {
            return Err(Error::estimation("cluster keys do not match row count"));
        }
        let fe = FixedEffect::from_keys(name.into(), keys);
        self.cluster = Some((fe.name, fe.groups, fe.n_groups));
        Ok(self)
    }

    pub fn column_names(&self) -> &[String] {
        &self.names
    }
}

/// Requested covariance flavor.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SeFlavor {
    Classical,
    /// Heteroskedasticity-robust HC1.
    Hc1,
    /// CR1 clustered on the design's cluster key.
    Cluster,
    /// Bartlett-kernel HAC with the given lag; rows must be time-ordered.
    NeweyWest { lag: usize },
}

impl std::fmt::Display for SeFlavor {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            SeFlavor::Classical => write!(f, "classical"),
            SeFlavor::Hc1 => write!(f, "HC1"),
            SeFlavor::Cluster => write!(f, "cluster"),
            SeFlavor::NeweyWest { lag } => write!(f, "newey-west(lag={lag})"),
        }
    }
}

/// A named joint hypothesis test.
#[derive(Debug, Clone)]
pub struct JointTest {
    pub name: String,
    pub f_stat: f64,
    pub df1: f64,
    pub df2: f64,
    pub p_value: f64,
}

/// Estimated coefficients with covariance and fit diagnostics.
#[derive(Debug, Clone)]
pub struct RegressionResult {
    pub names: Vec<String>,
    pub coef: Vec<f64>,
    pub cov: DMatrix<f64>,
    pub se_flavor: String,
    pub n_obs: usize,
    /// Cluster count when clustered.
    pub n_clusters: Option<usize>,
    /// Degrees of freedom used for t statistics and intervals.
    pub resid_df: f64,
    /// R² on the within-transformed data (centered total sum of squares).
    pub r2: f64,
    pub adj_r2: f64,
    pub ssr: f64,
    pub joint_tests: Vec<JointTest>,
}

impl RegressionResult {
    pub fn index_of(&self, name: &str) -> Result<usize> {
        self.names
            .iter()
            .position(|n| n == name)
            .ok_or_else(|| Error::estimation(format!("no coefficient named '{name}'")))
    }

    pub fn coef_named(&self, name: &str) -> Result<f64> {
        Ok(self.coef[self.index_of(name)?])
    }

    pub fn se(&self, i: usize) -> f64 {
        self.cov[(i, i)].max(0.0).sqrt()
    }

    pub fn se_named(&self, name: &str) -> Result<f64> {
        Ok(self.se(self.index_of(name)?))
    }

    /// t statistic; an exactly-zero coefficient with zero SE reports 0.
    pub fn t_stat(&self, i: usize) -> f64 {
        let se = self.se(i);
        if se == 0.0 && self.coef[i] == 0.0 {
            return 0.0;
        }
        self.coef[i] / se
    }

    /// Two-sided p-value from the Student t with `resid_df`.
    pub fn p_value(&self, i: usize) -> f64 {
        let t = self.t_stat(i);
        if !t.is_finite() {
            return if t.is_nan() { f64::NAN } else { 0.0 };
        }
        let dist = match StudentsT::new(0.0, 1.0, self.resid_df.max(1.0)) {
            Ok(d) => d,
            Err(_) => return f64::NAN,
        };
        2.0 * dist.cdf(-t.abs())
    }

    /// 95% confidence interval using the t critical value at `resid_df`.
    pub fn ci95(&self, i: usize) -> (f64, f64) {
        let crit = match StudentsT::new(0.0, 1.0, self.resid_df.max(1.0)) {
            Ok(d) => d.inverse_cdf(0.975),
            Err(_) => f64::NAN,
        };
        (self.coef[i] - crit * self.se(i), self.coef[i] + crit * self.se(i))
    }

    /// Wald F test that all listed coefficients are zero.
    ///
    /// The covariance block can be rank deficient — clustered covariances
    /// have rank at most the cluster count, and an exactly-fit model has a
    /// zero block — so the quadratic form uses the eigenvalue pseudoinverse
    /// and `df1` is the identified rank, not the coefficient count. A zero
    /// block with zero coefficients degrades to F = 0 (no evidence against
    /// the null); a zero block with nonzero coefficients is an error.
    pub fn wald_joint(&mut self, name: impl Into<String>, indices: &[usize]) -> Result<&JointTest> {
        let q = indices.len();
        if q == 0 {
            return Err(Error::estimation("joint test needs at least one coefficient"));
        }
        let beta = DVector::from_iterator(q, indices.iter().map(|&i| self.coef[i]));
        let mut vv = DMatrix::zeros(q, q);
        for (a, &i) in indices.iter().enumerate() {
            for (b, &j) in indices.iter().enumerate() {
                vv[(a, b)] = self.cov[(i, j)];
            }
        }
        let eig = SymmetricEigen::new(vv);
        let max_eig = eig.eigenvalues.iter().fold(0.0_f64, |m, &l| m.max(l));
        // An eigenvalue is signal only if the SE it implies is visible at
        // the coefficients' own scale; exact fits leave rounding-level
        // covariance (~1e-30) that must not masquerade as uncertainty.
        let beta_scale = self.coef.iter().fold(0.0_f64, |m, c| m.max(c.abs()));
        let zero_floor = (1e-10 * (1.0 + beta_scale)).powi(2);
        let tol = (max_eig * 1e-12 * q as f64).max(zero_floor);
        let mut rank = 0usize;
        let mut quad = 0.0;
        for (i, &l) in eig.eigenvalues.iter().enumerate() {
            if l > tol {
                rank += 1;
                let proj = eig.eigenvectors.column(i).dot(&beta);
                quad += proj * proj / l;
            }
        }
        let f = if rank > 0 {
            quad / rank as f64
        } else if beta.amax() <= 1e-8 * (1.0 + beta_scale) {
            0.0
        } else {
            return Err(Error::estimation("joint-test covariance block is singular"));
        };
        let df1 = rank.max(1) as f64;
        let df2 = self.resid_df.max(1.0);
        let p = match FisherSnedecor::new(df1, df2) {
            Ok(d) => 1.0 - d.cdf(f.max(0.0)),
            Err(_) => f64::NAN,
        };
        self.joint_tests.push(JointTest {
            name: name.into(),
            f_stat: f,
            df1,
            df2,
            p_value: p,
        });
        Ok(self.joint_tests.last().expect("just pushed"))
    }
}

/// Demean `values` within each group of each fixed effect, iterating to
/// convergence for multiple effects.
fn absorb_fixed_effects(values: &mut [f64], fes: &[FixedEffect]) -> Result<()> {
    if fes.is_empty() {
        return Ok(());
    }
    let scale = values.iter().fold(1.0_f64, |m, v| m.max(v.abs()));
    let tol = 1e-13 * scale;
    for _sweep in 0..500 {
        let mut largest = 0.0_f64;
        for fe in fes {
            let mut sums = vec![0.0; fe.n_groups];
            let mut counts = vec![0usize; fe.n_groups];
            for (v, &g) in values.iter().zip(&fe.groups) {
                sums[g] += *v;
                counts[g] += 1;
            }
            for g in 0..fe.n_groups {
                if counts[g] > 0 {
                    sums[g] /= counts[g] as f64;
                    largest = largest.max(sums[g].abs());
                }
            }
            for (v, &g) in values.iter_mut().zip(&fe.groups) {
                *v -= sums[g];
            }
        }
        if largest < tol || fes.len() == 1 {
            return Ok(());
        }
    }
    Err(Error::estimation(
        "fixed-effect absorption did not converge in 500 sweeps",
    ))
}

/// Absorbed parameter count: Σ (Gⱼ − 1) plus one shared grand mean.
fn absorbed_df(fes: &[FixedEffect]) -> usize {
    if fes.is_empty() {
        0
    } else {
        1 + fes.iter().map(|fe| fe.n_groups - 1).sum::<usize>()
    }
}

/// True when every group of `fe` maps into a single cluster.
fn nested_in_clusters(fe: &FixedEffect, clusters: &[usize]) -> bool {
    let mut seen: Vec<Option<usize>> = vec![None; fe.n_groups];
    for (&g, &c) in fe.groups.iter().zip(clusters) {
        match seen[g] {
            None => seen[g] = Some(c),
            Some(prev) if prev != c => return false,
            _ => {}
        }
    }
    true
}

/// Report which columns of the (within-transformed) design are collinear,
/// via modified Gram–Schmidt.
fn collinear_columns(names: &[String], cols: &[Vec<f64>]) -> Vec<String> {
    let n = cols.first().map_or(0, Vec::len);
    let mut basis: Vec<Vec<f64>> = Vec::new();
    let mut bad = Vec::new();
    for (name, col) in names.iter().zip(cols) {
        let mut v = col.clone();
        let orig = v.iter().map(|x| x * x).sum::<f64>().sqrt().max(1e-300);
        for b in &basis {
            let proj: f64 = v.iter().zip(b).map(|(x, y)| x * y).sum();
            for (x, y) in v.iter_mut().zip(b) {
                *x -= proj * y;
            }
        }
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm < 1e-10 * orig.max((n as f64).sqrt()) {
            bad.push(name.clone());
        } else {
            for x in v.iter_mut() {
                *x /= norm;
            }
            basis.push(v);
        }
    }
    bad
}

/// Within-transformed copy of the design, the absorbed df, and solve pieces
/// shared by `ols` and the fast SSR path.
struct Transformed {
    y: Vec<f64>,
    cols: Vec<Vec<f64>>,
    xtx_inv: DMatrix<f64>,
    beta: Vec<f64>,
    residuals: Vec<f64>,
    ssr: f64,
    absorbed: usize,
}

fn transform_and_solve(design: &Design) -> Result<Transformed> {
    let n = design.n_obs();
    let k = design.n_cols();
    if k == 0 {
        return Err(Error::estimation("design has no columns"));
    }
    let absorbed = absorbed_df(&design.fixed_effects);
    if n < k + absorbed {
        return Err(Error::estimation(format!(
            "{n} observations cannot identify {k} coefficients plus {absorbed} absorbed effects"
        )));
    }

    let mut y = design.y.clone();
    if let Some(i) = y.iter().position(|v| !v.is_finite()) {
        return Err(Error::estimation(format!(
            "outcome has a non-finite value at row {i}"
        )));
    }
    absorb_fixed_effects(&mut y, &design.fixed_effects)?;
    let mut cols = design.cols.clone();
    for col in cols.iter_mut() {
        absorb_fixed_effects(col, &design.fixed_effects)?;
    }

    // Normal equations with a Cholesky solve; fall back to a collinearity
    // report when the Gram matrix is not positive definite.
    let mut xtx = DMatrix::zeros(k, k);
    let mut xty = DVector::zeros(k);
    for i in 0..k {
        for j in i..k {
            let s: f64 = cols[i].iter().zip(&cols[j]).map(|(a, b)| a * b).sum();
            xtx[(i, j)] = s;
            xtx[(j, i)] = s;
        }
        xty[i] = cols[i].iter().zip(&y).map(|(a, b)| a * b).sum();
    }
    let chol = match Cholesky::new(xtx.clone()) {
        Some(c) => c,
        None => {
            let bad = collinear_columns(&design.names, &cols);
            return Err(Error::estimation(format!(
                "design is rank deficient after fixed-effect absorption; collinear columns: [{}]",
                bad.join(", ")
            )));
        }
    };
    // Cholesky succeeding does not guarantee a well-conditioned system;
    // double-check with an explicit near-zero pivot test.
    {
        let l = chol.l();
        let max_pivot = (0..k).map(|i| l[(i, i)]).fold(0.0_f64, f64::max);
        for i in 0..k {
            if l[(i, i)] < 1e-10 * max_pivot.max(1e-300) {
                let bad = collinear_columns(&design.names, &cols);
                return Err(Error::estimation(format!(
                    "design is rank deficient after fixed-effect absorption; collinear columns: [{}]",
                    bad.join(", ")
                )));
            }
        }
    }

    let beta_v = chol.solve(&xty);
    let xtx_inv = chol.inverse();
    let beta: Vec<f64> = beta_v.iter().copied().collect();

    let mut residuals = y.clone();
    for (j, col) in cols.iter().enumerate() {
        let b = beta[j];
        for (r, x) in residuals.iter_mut().zip(col) {
            *r -= b * x;
        }
    }
    let ssr: f64 = residuals.iter().map(|e| e * e).sum();

    Ok(Transformed { y, cols, xtx_inv, beta, residuals, ssr, absorbed })
}

/// Bartlett-kernel HAC "meat" matrix from per-row score columns.
fn bartlett_meat(cols: &[Vec<f64>], residuals: &[f64], lag: usize) -> DMatrix<f64> {
    let k = cols.len();
    let n = residuals.len();
    // scores u_t = x_t e_t, stored row-wise
    let scores: Vec<Vec<f64>> = (0..n)
        .map(|t| cols.iter().map(|c| c[t] * residuals[t]).collect())
        .collect();
    let mut meat = DMatrix::zeros(k, k);
    for t in 0..n {
        for i in 0..k {
            for j in 0..k {
                meat[(i, j)] += scores[t][i] * scores[t][j];
            }
        }
    }
    for l in 1..=lag {
        if l >= n {
            break;
        }
        let w = 1.0 - l as f64 / (lag as f64 + 1.0);
        for t in l..n {
            for i in 0..k {
                for j in 0..k {
                    let cross = scores[t][i] * scores[t - l][j] + scores[t - l][i] * scores[t][j];
                    meat[(i, j)] += w * cross;
                }
            }
        }
    }
    meat
}

/// Ordinary least squares with fixed-effect absorption and the requested
/// covariance flavor.
pub fn ols(design: &Design, se: SeFlavor) -> Result<RegressionResult> {
    let n = design.n_obs();
    let k = design.n_cols();
    let t = transform_and_solve(design)?;
    let model_df = k + t.absorbed;
    let resid_df_classical = (n - model_df) as f64;

    // Fit statistics on the transformed data.
    let mean_y = t.y.iter().sum::<f64>() / n as f64;
    let tss: f64 = t.y.iter().map(|v| (v - mean_y) * (v - mean_y)).sum();
    let r2 = if tss > 0.0 { 1.0 - t.ssr / tss } else { f64::NAN };
    let adj_r2 = if tss > 0.0 && resid_df_classical > 0.0 {
        1.0 - (1.0 - r2) * (n as f64 - 1.0) / resid_df_classical
    } else {
        f64::NAN
    };

    // Exactly identified design: coefficients are well defined but there is
    // no residual variation to price uncertainty with. Accept the fit when
    // it is in fact exact and report zero covariance.
    if resid_df_classical == 0.0 {
        if t.ssr > 1e-8 * (1.0 + tss) {
            return Err(Error::estimation(
                "no residual degrees of freedom and a nonzero residual: add observations or drop columns",
            ));
        }
        return Ok(RegressionResult {
            names: design.names.clone(),
            coef: t.beta,
            cov: DMatrix::zeros(k, k),
            se_flavor: se.to_string(),
            n_obs: n,
            n_clusters: None,
            resid_df: 1.0,
            r2,
            adj_r2,
            ssr: t.ssr,
            joint_tests: Vec::new(),
        });
    }

    let (cov, resid_df, n_clusters) = match se {
        SeFlavor::Classical => {
            let sigma2 = t.ssr / resid_df_classical;
            (&t.xtx_inv * sigma2, resid_df_classical, None)
        }
        SeFlavor::Hc1 => {
            let meat = bartlett_meat(&t.cols, &t.residuals, 0);
            let factor = n as f64 / resid_df_classical;
            (&t.xtx_inv * meat * &t.xtx_inv * factor, resid_df_classical, None)
        }
        SeFlavor::NeweyWest { lag } => {
            if lag >= n {
                return Err(Error::estimation(format!(
                    "Newey-West lag {lag} must be below the {n} observations"
                )));
            }
            let meat = bartlett_meat(&t.cols, &t.residuals, lag);
            (&t.xtx_inv * meat * &t.xtx_inv, resid_df_classical, None)
        }
        SeFlavor::Cluster => {
            let (_, ref ids, g) = *design
                .cluster
                .as_ref()
                .ok_or_else(|| Error::estimation("cluster SEs requested without a cluster key"))?;
            if g < 2 {
                return Err(Error::estimation("clustered inference needs >= 2 clusters"));
            }
            // cluster score sums
            let mut sums = vec![vec![0.0; k]; g];
            for (row, &c) in ids.iter().enumerate() {
                for j in 0..k {
                    sums[c][j] += t.cols[j][row] * t.residuals[row];
                }
            }
            let mut meat = DMatrix::zeros(k, k);
            for s in &sums {
                for i in 0..k {
                    for j in 0..k {
                        meat[(i, j)] += s[i] * s[j];
                    }
                }
            }
            // Small-sample factor (G/(G−1))·((N−1)/(N−K)); K excludes fixed
            // effects nested inside the clusters.
            let nested_excluded: usize = design
                .fixed_effects
                .iter()
                .filter(|fe| nested_in_clusters(fe, ids))
                .map(|fe| fe.n_groups - 1)
                .sum();
            let k_for_factor = (model_df - nested_excluded) as f64;
            let factor = (g as f64 / (g as f64 - 1.0))
                * ((n as f64 - 1.0) / (n as f64 - k_for_factor));
            (&t.xtx_inv * meat * &t.xtx_inv * factor, g as f64 - 1.0, Some(g))
        }
    };

    Ok(RegressionResult {
        names: design.names.clone(),
        coef: t.beta,
        cov,
        se_flavor: se.to_string(),
        n_obs: n,
        n_clusters,
        resid_df,
        r2,
        adj_r2,
        ssr: t.ssr,
        joint_tests: Vec::new(),
    })
}

/// Coefficients and SSR only — the hot path for grid searches and bootstrap
/// replicates where covariance work would dominate.
pub fn ols_ssr(design: &Design) -> Result<(Vec<f64>, f64)> {
    let t = transform_and_solve(design)?;
    Ok((t.beta, t.ssr))
}

/// Standalone Newey–West covariance for an already-estimated regression:
/// `(X'X)⁻¹ S (X'X)⁻¹` with the Bartlett meat `S` described in the module
/// docs. `columns` are the regressor columns in time order and `residuals`
/// the fitted residuals.
pub fn newey_west(columns: &[Vec<f64>], residuals: &[f64], lag: usize) -> Result<DMatrix<f64>> {
    let n = residuals.len();
    if columns.is_empty() {
        return Err(Error::estimation("newey_west needs at least one column"));
    }
    if columns.iter().any(|c| c.len() != n) {
        return Err(Error::estimation("newey_west column lengths differ from residuals"));
    }
    if lag >= n {
        return Err(Error::estimation(format!(
            "Newey-West lag {lag} must be below the {n} observations"
        )));
    }
    let k = columns.len();
    let mut xtx = DMatrix::zeros(k, k);
    for i in 0..k {
        for j in i..k {
            let s: f64 = columns[i].iter().zip(&columns[j]).map(|(a, b)| a * b).sum();
            xtx[(i, j)] = s;
            xtx[(j, i)] = s;
        }
    }
    let chol = Cholesky::new(xtx)
        .ok_or_else(|| Error::estimation("newey_west design is rank deficient"))?;
    let inv = chol.inverse();
    let meat = bartlett_meat(columns, residuals, lag);
    Ok(&inv * meat * &inv)
}

/// Residuals of `outcome` on `factors` plus an intercept. The residual mean
/// is zero by construction (within 1e-12 numerically).
pub fn residualize(outcome: &[f64], factors: &[Vec<f64>]) -> Result<Vec<f64>> {
    let mut design = Design::new(outcome.to_vec());
    design.add_intercept()?;
    for (i, f) in factors.iter().enumerate() {
        design.add_column(format!("factor_{i}"), f.clone())?;
    }
    let t = transform_and_solve(&design)?;
    Ok(t.residuals)
}

/// Welch two-sample difference in means with unequal variances.
#[derive(Debug, Clone, Copy)]
pub struct WelchTest {
    pub diff: f64,
    pub se: f64,
    pub t_stat: f64,
    pub df: f64,
    pub p_value: f64,
    pub n_a: usize,
    pub n_b: usize,
}

/// Welch's t-test for mean(A) − mean(B); each group needs ≥ 2 values.
pub fn welch_diff_means(group_a: &[f64], group_b: &[f64]) -> Result<WelchTest> {
    if group_a.len() < 2 || group_b.len() < 2 {
        return Err(Error::estimation(format!(
            "welch test needs >= 2 values per group, got {} and {}",
            group_a.len(),
            group_b.len()
        )));
    }
    let n_a = group_a.len() as f64;
    let n_b = group_b.len() as f64;
    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
    let var = |v: &[f64], m: f64| v.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (v.len() as f64 - 1.0);
    let (ma, mb) = (mean(group_a), mean(group_b));
    let (va, vb) = (var(group_a, ma), var(group_b, mb));
    let diff = ma - mb;
    let se2 = va / n_a + vb / n_b;
    let se = se2.sqrt();
    if se == 0.0 {
        // identical (constant) groups: no evidence of a difference
        return Ok(WelchTest {
            diff,
            se,
            t_stat: 0.0,
            df: n_a + n_b - 2.0,
            p_value: if diff == 0.0 { 1.0 } else { 0.0 },
            n_a: group_a.len(),
            n_b: group_b.len(),
        });
    }
    let df = se2 * se2
        / ((va / n_a).powi(2) / (n_a - 1.0) + (vb / n_b).powi(2) / (n_b - 1.0));
    let t = diff / se;
    let p = match StudentsT::new(0.0, 1.0, df) {
        Ok(d) => 2.0 * d.cdf(-t.abs()),
        Err(_) => f64::NAN,
    };
    Ok(WelchTest { diff, se, t_stat: t, df, p_value: p, n_a: group_a.len(), n_b: group_b.len() })
}
