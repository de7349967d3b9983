//! Gradient-boosted regression trees for nonparametric threshold detection,
//! plus the maximum-curvature elbow locator applied to partial-dependence
//! curves.
//!
//! Boosting is plain squared-error gradient descent: each round fits a
//! depth-limited CART tree to the current residuals and adds a
//! learning-rate fraction of it. Everything is deterministic — split ties
//! resolve toward the lower feature index and lower split point — so a
//! fitted model is a pure function of its inputs. Feature importance is the
//! impurity (SSE) reduction accumulated per feature, normalized to sum to
//! one; a constant target yields a zero-tree model with all-zero
//! importances and a warning.

use crate::error::{Error, Result};
use crate::ingest::winsorize;

/// Hyperparameters for [`fit_gbr`].
#[derive(Debug, Clone)]
pub struct GbrConfig {
    pub n_trees: usize,
    pub max_depth: usize,
    pub learning_rate: f64,
    /// Target winsorization percentile `p`: clip at the (p, 100−p)
    /// empirical percentiles before fitting. 0 disables.
    pub winsor_pct: f64,
    /// Minimum observations a split must leave on each side.
    pub min_leaf: usize,
}

impl Default for GbrConfig {
    fn default() -> Self {
        Self { n_trees: 100, max_depth: 3, learning_rate: 0.1, winsor_pct: 5.0, min_leaf: 2 }
    }
}

#[derive(Debug, Clone)]
enum Node {
    Leaf { value: f64 },
    Split { feature: usize, threshold: f64, left: usize, right: usize },
}

/// One regression tree, nodes stored flat with the root at index 0.
#[derive(Debug, Clone)]
pub struct Tree {
    nodes: Vec<Node>,
}

impl Tree {
    fn predict(&self, row: &[f64]) -> f64 {
        let mut at = 0usize;
        loop {
            match &self.nodes[at] {
                Node::Leaf { value } => return *value,
                Node::Split { feature, threshold, left, right } => {
                    at = if row[*feature] <= *threshold { *left } else { *right };
                }
            }
        }
    }
}

/// A fitted boosted ensemble.
#[derive(Debug, Clone)]
pub struct GbrModel {
    pub feature_names: Vec<String>,
    /// Base prediction (mean of the winsorized target).
    pub initial_prediction: f64,
    pub learning_rate: f64,
    pub trees: Vec<Tree>,
    /// Per-feature impurity-reduction shares; all zero for a constant
    /// target, otherwise summing to one.
    pub importances: Vec<f64>,
    pub warning: Option<String>,
}

impl GbrModel {
    /// Predict one observation; `row` holds one value per feature, in
    /// `feature_names` order.
    pub fn predict_row(&self, row: &[f64]) -> f64 {
        let boost: f64 = self.trees.iter().map(|t| t.predict(row)).sum();
        self.initial_prediction + self.learning_rate * boost
    }

    pub fn feature_index(&self, name: &str) -> Result<usize> {
        self.feature_names
            .iter()
            .position(|n| n == name)
            .ok_or_else(|| Error::estimation(format!("no feature named '{name}'")))
    }
}

/// Recursive CART builder on a row subset; returns the new node's index and
/// accumulates per-feature SSE reductions into `gains`.
fn grow(
    nodes: &mut Vec<Node>,
    columns: &[Vec<f64>],
    residual: &[f64],
    rows: &[u32],
    depth: usize,
    cfg: &GbrConfig,
    gains: &mut [f64],
) -> usize {
    let m = rows.len();
    let sum: f64 = rows.iter().map(|&i| residual[i as usize]).sum();
    let mean = sum / m as f64;
    let node_sse: f64 = rows
        .iter()
        .map(|&i| {
            let d = residual[i as usize] - mean;
            d * d
        })
        .sum();

    let mut best: Option<(f64, usize, f64, usize)> = None; // (gain, feature, threshold, left count)
    if depth > 0 && m >= 2 * cfg.min_leaf && node_sse > 1e-12 {
        let mut scratch: Vec<u32> = rows.to_vec();
        for (f, col) in columns.iter().enumerate() {
            scratch.sort_by(|&a, &b| {
                col[a as usize].partial_cmp(&col[b as usize]).expect("finite feature")
            });
            // prefix scan: evaluate each split between distinct values
            let mut left_sum = 0.0;
            let mut left_sq = 0.0;
            let total_sq: f64 = rows
                .iter()
                .map(|&i| residual[i as usize] * residual[i as usize])
                .sum();
            for i in 1..m {
                let prev = scratch[i - 1] as usize;
                left_sum += residual[prev];
                left_sq += residual[prev] * residual[prev];
                let (xa, xb) = (col[prev], col[scratch[i] as usize]);
                if xa == xb {
                    continue;
                }
                if i < cfg.min_leaf || m - i < cfg.min_leaf {
                    continue;
                }
                let right_sum = sum - left_sum;
                let right_sq = total_sq - left_sq;
                let nl = i as f64;
                let nr = (m - i) as f64;
                let split_sse =
                    (left_sq - left_sum * left_sum / nl) + (right_sq - right_sum * right_sum / nr);
                let gain = node_sse - split_sse;
                // strict improvement keeps the first (= lowest feature,
                // lowest threshold) candidate on ties
                if gain > 1e-12 && best.as_ref().map_or(true, |b| gain > b.0 + 1e-12) {
                    best = Some((gain, f, (xa + xb) / 2.0, i));
                }
            }
        }
    }

    match best {
        None => {
            nodes.push(Node::Leaf { value: mean });
            nodes.len() - 1
        }
        Some((gain, feature, threshold, _)) => {
            gains[feature] += gain;
            let col = &columns[feature];
            let (left_rows, right_rows): (Vec<u32>, Vec<u32>) =
                rows.iter().partition(|&&i| col[i as usize] <= threshold);
            let left = grow(nodes, columns, residual, &left_rows, depth - 1, cfg, gains);
            let right = grow(nodes, columns, residual, &right_rows, depth - 1, cfg, gains);
            nodes.push(Node::Split { feature, threshold, left, right });
            nodes.len() - 1
        }
    }
}

/// Fit the boosted ensemble of `(name, column)` features against `target`.
pub fn fit_gbr(
    features: &[(String, Vec<f64>)],
    target: &[f64],
    cfg: &GbrConfig,
) -> Result<GbrModel> {
    if features.is_empty() {
        return Err(Error::estimation("boosting needs at least one feature"));
    }
    let n = target.len();
    if n < 20 {
        return Err(Error::estimation(format!("boosting needs >= 20 rows, got {n}")));
    }
    for (name, col) in features {
        if col.len() != n {
            return Err(Error::estimation(format!(
                "feature '{name}' has {} rows, target has {n}",
                col.len()
            )));
        }
        if col.iter().any(|v| !v.is_finite()) {
            return Err(Error::data(format!("feature '{name}' has non-finite values")));
        }
    }
    if target.iter().any(|v| !v.is_finite()) {
        return Err(Error::data("target has non-finite values"));
    }
    if !(0.0..50.0).contains(&cfg.winsor_pct) {
        return Err(Error::estimation("winsor percentile must lie in [0, 50)"));
    }
    if cfg.n_trees == 0 || cfg.max_depth == 0 || !(0.0..=1.0).contains(&cfg.learning_rate)
        || cfg.learning_rate <= 0.0
    {
        return Err(Error::estimation(
            "boosting config needs n_trees >= 1, max_depth >= 1, learning_rate in (0, 1]",
        ));
    }

    let y = if cfg.winsor_pct > 0.0 {
        winsorize(target, cfg.winsor_pct, 100.0 - cfg.winsor_pct)?
    } else {
        target.to_vec()
    };
    let feature_names: Vec<String> = features.iter().map(|(n, _)| n.clone()).collect();
    let columns: Vec<Vec<f64>> = features.iter().map(|(_, c)| c.clone()).collect();
    let f0 = y.iter().sum::<f64>() / n as f64;

    let spread = y.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
        (lo.min(v), hi.max(v))
    });
    if spread.1 - spread.0 == 0.0 {
        return Ok(GbrModel {
            feature_names,
            initial_prediction: f0,
            learning_rate: cfg.learning_rate,
            trees: Vec::new(),
            importances: vec![0.0; columns.len()],
            warning: Some("constant target: returning the mean with no trees".into()),
        });
    }

    let mut pred = vec![f0; n];
    let mut gains = vec![0.0; columns.len()];
    let mut trees = Vec::with_capacity(cfg.n_trees);
    let all_rows: Vec<u32> = (0..n as u32).collect();
    for _ in 0..cfg.n_trees {
        let residual: Vec<f64> = y.iter().zip(&pred).map(|(a, b)| a - b).collect();
        let mut nodes = Vec::new();
        let root = grow(&mut nodes, &columns, &residual, &all_rows, cfg.max_depth, cfg, &mut gains);
        debug_assert_eq!(root, nodes.len() - 1);
        // the root must end up last so prediction can start at a fixed
        // index; reverse the layout so the root is node 0
        let count = nodes.len();
        let remap = |i: usize| count - 1 - i;
        let mut flipped: Vec<Node> = Vec::with_capacity(count);
        for node in nodes.into_iter().rev() {
            flipped.push(match node {
                Node::Leaf { value } => Node::Leaf { value },
                Node::Split { feature, threshold, left, right } => Node::Split {
                    feature,
                    threshold,
                    left: remap(left),
                    right: remap(right),
                },
            });
        }
        let tree = Tree { nodes: flipped };
        let stop = matches!(tree.nodes[0], Node::Leaf { value } if value.abs() < 1e-12);
        for (p, row) in pred.iter_mut().enumerate() {
            let r: Vec<f64> = columns.iter().map(|c| c[p]).collect();
            *row += cfg.learning_rate * tree.predict(&r);
        }
        trees.push(tree);
        if stop {
            break;
        }
    }

    let total: f64 = gains.iter().sum();
    let importances = if total > 0.0 {
        gains.iter().map(|g| g / total).collect()
    } else {
        vec![0.0; columns.len()]
    };

    Ok(GbrModel {
        feature_names,
        initial_prediction: f0,
        learning_rate: cfg.learning_rate,
        trees,
        importances,
        warning: None,
    })
}

/// Partial-dependence curve of `model` over the named feature: for each
/// grid value, the mean prediction with that feature pinned and all others
/// left at their observed values.
pub fn partial_dependence(
    model: &GbrModel,
    features: &[(String, Vec<f64>)],
    feature: &str,
    n_grid: usize,
) -> Result<Vec<(f64, f64)>> {
    let j = model.feature_index(feature)?;
    if n_grid < 2 {
        return Err(Error::estimation("partial dependence needs a grid of >= 2 points"));
    }
    let n = features
        .first()
        .map(|(_, c)| c.len())
        .ok_or_else(|| Error::estimation("partial dependence needs feature data"))?;
    let col = &features[j].1;
    let (lo, hi) = col
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
    let mut distinct: Vec<f64> = col.clone();
    distinct.sort_by(|a, b| a.partial_cmp(b).expect("finite feature"));
    distinct.dedup();
    let grid: Vec<f64> = if distinct.len() <= n_grid {
        distinct
    } else {
        (0..n_grid)
            .map(|i| lo + (hi - lo) * i as f64 / (n_grid as f64 - 1.0))
            .collect()
    };

    let mut rows: Vec<Vec<f64>> = (0..n)
        .map(|i| features.iter().map(|(_, c)| c[i]).collect())
        .collect();
    let curve = grid
        .into_iter()
        .map(|x| {
            let mut acc = 0.0;
            for row in rows.iter_mut() {
                row[j] = x;
                acc += model.predict_row(row);
            }
            (x, acc / n as f64)
        })
        .collect();
    Ok(curve)
}

/// Locate the maximum-curvature point of a sampled response curve.
///
/// The curve is smoothed with a 3-point moving average (end points kept
/// raw, so straight lines stay exactly straight), then the discrete
/// curvature `|f″| / (1 + f′²)^{3/2}` is evaluated at interior points with
/// divided differences. The x of the maximum is returned; an exact
/// curvature tie — the two shoulders of a smoothed hard step — resolves to
/// the later sample, the completion of the bend. A curve with no
/// meaningful second derivative — a straight line or a constant — is
/// reported as an error.
pub fn elbow_detect(points: &[(f64, f64)]) -> Result<f64> {
    let m = points.len();
    if m < 5 {
        return Err(Error::estimation(format!(
            "elbow detection needs >= 5 samples, got {m}"
        )));
    }
    for w in points.windows(2) {
        if !(w[1].0 > w[0].0) {
            return Err(Error::estimation("elbow detection needs strictly increasing x samples"));
        }
    }

    // 3-point moving average on interior points, raw values at the ends
    let smooth: Vec<f64> = (0..m)
        .map(|i| {
            if i == 0 || i == m - 1 {
                points[i].1
            } else {
                (points[i - 1].1 + points[i].1 + points[i + 1].1) / 3.0
            }
        })
        .collect();

    let range = {
        let (lo, hi) = smooth
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
        hi - lo
    };
    let mean_dx = (points[m - 1].0 - points[0].0) / (m as f64 - 1.0);

    let mut best: Option<(f64, f64)> = None; // (curvature, x)
    let mut max_f2 = 0.0_f64;
    for i in 1..m - 1 {
        let (x0, x1, x2) = (points[i - 1].0, points[i].0, points[i + 1].0);
        let (f0, f1, f2v) = (smooth[i - 1], smooth[i], smooth[i + 1]);
        let d1 = (f2v - f0) / (x2 - x0);
        let dd = 2.0 * ((f2v - f1) / (x2 - x1) - (f1 - f0) / (x1 - x0)) / (x2 - x0);
        max_f2 = max_f2.max(dd.abs());
        let kappa = dd.abs() / (1.0 + d1 * d1).powf(1.5);
        // scanning left to right: strictly better wins, and an exact tie
        // moves the elbow to the later shoulder
        let take = match &best {
            None => true,
            Some((bk, _)) => kappa > bk + 1e-15 || (kappa - bk).abs() <= 1e-15,
        };
        if take {
            best = Some((kappa, x1));
        }
    }

    // Degeneracy test: the implied bump must be visible against the total
    // variation of the curve, otherwise the "curvature" is numerical noise.
    if range == 0.0 || max_f2 * mean_dx * mean_dx <= 1e-7 * range {
        return Err(Error::estimation("no elbow: the response curve has no curvature"));
    }
    Ok(best.expect("interior points exist").1)
}
