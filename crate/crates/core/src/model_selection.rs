//! Grid search over hyperparameters with k-fold cross-validation.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::metrics::{compute_metrics, MetricsError, MetricsReport};
use crate::pipeline::FeatureMatrix;
use crate::regressors::{
    ForestParams, GradBoostParams, KnnParams, ModelError, ModelHyperparams, ModelKind,
    RegressorSpec, RidgeParams, SvrParams, TreeParams, Weighting, XgbLikeParams,
};

#[derive(Debug, Error)]
pub enum SelectionError {
    #[error("k = {k} folds is outside [2, {n}]")]
    KOutOfRange { k: usize, n: usize },
    #[error("fold plan covers {expected} rows but the matrix has {got}")]
    PlanMismatch { expected: usize, got: usize },
    #[error("fit failed on fold {fold}: {source}")]
    FoldFit {
        fold: usize,
        #[source]
        source: ModelError,
    },
    #[error("scoring failed on fold {fold}: {source}")]
    FoldMetrics {
        fold: usize,
        #[source]
        source: MetricsError,
    },
    #[error("the hyperparameter grid is empty")]
    EmptyGrid,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FoldMode {
    /// Consecutive time-ordered blocks (the default for hourly data).
    ContiguousChronological,
    /// Seeded shuffle, then consecutive blocks of the shuffled order.
    SeededRandom,
}

/// Assignment of every row to exactly one of `k` folds, sizes differing by
/// at most one (earlier folds take the remainder).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldPlan {
    pub n: usize,
    pub k: usize,
    pub assignment: Vec<usize>,
    pub mode: FoldMode,
}

impl FoldPlan {
    pub fn validation_indices(&self, fold: usize) -> Vec<usize> {
        (0..self.n).filter(|&i| self.assignment[i] == fold).collect()
    }

    pub fn train_indices(&self, fold: usize) -> Vec<usize> {
        (0..self.n).filter(|&i| self.assignment[i] != fold).collect()
    }
}

pub fn make_folds(
    n: usize,
    k: usize,
    mode: FoldMode,
    seed: u64,
) -> Result<FoldPlan, SelectionError> {
    if k < 2 || k > n {
        return Err(SelectionError::KOutOfRange { k, n });
    }
    let base = n / k;
    let extra = n % k;
    let mut order: Vec<usize> = (0..n).collect();
    if mode == FoldMode::SeededRandom {
        order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    }
    let mut assignment = vec![0usize; n];
    let mut at = 0usize;
    for fold in 0..k {
        let size = base + usize::from(fold < extra);
        for _ in 0..size {
            assignment[order[at]] = fold;
            at += 1;
        }
    }
    Ok(FoldPlan {
        n,
        k,
        assignment,
        mode,
    })
}

/// Fit on every row outside fold f, score on fold f, for each f in order.
/// The matrix is already standardized once on the global training split;
/// per-fold re-standardization is deliberately not repeated.
pub fn cross_validate(
    spec: &RegressorSpec,
    fm: &FeatureMatrix,
    plan: &FoldPlan,
) -> Result<Vec<MetricsReport>, SelectionError> {
    if plan.n != fm.n_rows() {
        return Err(SelectionError::PlanMismatch {
            expected: plan.n,
            got: fm.n_rows(),
        });
    }
    let mut reports = Vec::with_capacity(plan.k);
    for fold in 0..plan.k {
        let train_idx = plan.train_indices(fold);
        let val_idx = plan.validation_indices(fold);
        debug_assert!(train_idx.iter().all(|i| !val_idx.contains(i)));
        let train = fm.select_rows(&train_idx);
        let val = fm.select_rows(&val_idx);
        let model = crate::regressors::FittedModel::fit(
            spec.clone(),
            &train.x,
            &train.y,
            &train.feature_names,
        )
        .map_err(|source| SelectionError::FoldFit { fold, source })?;
        let pred = model
            .predict(&val.x)
            .map_err(|source| SelectionError::FoldFit { fold, source })?;
        let report = compute_metrics(&val.y, &pred)
            .map_err(|source| SelectionError::FoldMetrics { fold, source })?;
        reports.push(report);
    }
    Ok(reports)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GridCandidate {
    pub hyperparams: ModelHyperparams,
    pub fold_reports: Vec<MetricsReport>,
    pub mean_rmse: f64,
}

/// Every grid candidate with its per-fold reports; `best` minimizes the mean
/// validation RMSE, ties going to the earlier grid position.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GridResult {
    pub candidates: Vec<GridCandidate>,
    pub best: usize,
}

impl GridResult {
    pub fn winner(&self) -> &GridCandidate {
        &self.candidates[self.best]
    }
}

pub fn grid_search(
    grid: &[ModelHyperparams],
    seed: u64,
    fm: &FeatureMatrix,
    plan: &FoldPlan,
) -> Result<GridResult, SelectionError> {
    if grid.is_empty() {
        return Err(SelectionError::EmptyGrid);
    }
    let mut candidates = Vec::with_capacity(grid.len());
    for hp in grid {
        let spec = RegressorSpec::new(hp.clone(), seed);
        let fold_reports = cross_validate(&spec, fm, plan)?;
        let mean_rmse =
            fold_reports.iter().map(|r| r.rmse).sum::<f64>() / fold_reports.len() as f64;
        candidates.push(GridCandidate {
            hyperparams: hp.clone(),
            fold_reports,
            mean_rmse,
        });
    }
    let mut best = 0usize;
    for (i, c) in candidates.iter().enumerate() {
        if c.mean_rmse < candidates[best].mean_rmse {
            best = i;
        }
    }
    Ok(GridResult { candidates, best })
}

/// Shipped grids bracketing each model's default hyperparameters.
pub fn default_grid(kind: ModelKind) -> Vec<ModelHyperparams> {
    match kind {
        ModelKind::Linear => vec![ModelHyperparams::Linear],
        ModelKind::Ridge => [0.01, 0.1, 1.0, 10.0]
            .into_iter()
            .map(|alpha| ModelHyperparams::Ridge(RidgeParams { alpha }))
            .collect(),
        ModelKind::DecisionTree => [4usize, 6, 8, 12]
            .into_iter()
            .map(|max_depth| {
                ModelHyperparams::DecisionTree(TreeParams {
                    max_depth,
                    ..Default::default()
                })
            })
            .collect(),
        ModelKind::Knn => [3usize, 5, 7, 11, 15]
            .into_iter()
            .map(|k| {
                ModelHyperparams::Knn(KnnParams {
                    k,
                    weighting: Weighting::InverseDistance,
                })
            })
            .collect(),
        ModelKind::RandomForest => {
            let mut grid = Vec::new();
            for n_trees in [50usize, 100] {
                for feature_ratio in [0.7, 1.0] {
                    grid.push(ModelHyperparams::RandomForest(ForestParams {
                        n_trees,
                        feature_ratio,
                        ..Default::default()
                    }));
                }
            }
            grid
        }
        ModelKind::GradBoost => {
            let mut grid = Vec::new();
            for n_stages in [100usize, 200] {
                for learning_rate in [0.05, 0.1] {
                    grid.push(ModelHyperparams::GradBoost(GradBoostParams {
                        n_stages,
                        learning_rate,
                        ..Default::default()
                    }));
                }
            }
            grid
        }
        ModelKind::Svr => {
            let mut grid = Vec::new();
            for c in [0.1, 1.0, 10.0] {
                for gamma in [0.01, 0.1] {
                    grid.push(ModelHyperparams::Svr(SvrParams {
                        c,
                        gamma,
                        ..Default::default()
                    }));
                }
            }
            grid
        }
        ModelKind::XgbLike => {
            let mut grid = Vec::new();
            for learning_rate in [0.05, 0.1] {
                for max_depth in [4usize, 6] {
                    grid.push(ModelHyperparams::XgbLike(XgbLikeParams {
                        learning_rate,
                        max_depth,
                        ..Default::default()
                    }));
                }
            }
            grid
        }
    }
}
