//! Eight from-scratch regressors behind one fit/predict contract.

mod forest;
mod gradboost;
mod knn;
mod linear;
mod svr;
mod tree;
mod xgblike;

pub use forest::ForestFit;
pub use gradboost::GradBoostFit;
pub use knn::{KnnFit, Weighting};
pub use linear::LinearFit;
pub use svr::SvrFit;
pub use tree::{GrowConfig, Tree, TreeNode};
pub use xgblike::XgbLikeFit;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linalg::Matrix;

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("invalid hyperparameter: {detail}")]
    InvalidHyperparam { detail: String },
    #[error("hyperparameter {name} must be positive, got {value}")]
    NonPositiveHyperparam { name: &'static str, value: f64 },
    #[error("training set is empty")]
    EmptyTrainingSet,
    #[error("need at least {needed} samples for {d} features, got {n}")]
    TooFewSamples { needed: usize, n: usize, d: usize },
    #[error("design matrix is rank deficient at column {column}; features are exactly collinear")]
    RankDeficient { column: usize },
    #[error("k = {k} exceeds the {n} training samples")]
    KExceedsN { k: usize, n: usize },
    #[error("dimension mismatch: model expects {expected} features, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("non-finite value in training data")]
    NonFinite,
}

/// The eight model kinds, in the benchmark table's reporting order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    Linear,
    Ridge,
    DecisionTree,
    Knn,
    RandomForest,
    GradBoost,
    Svr,
    XgbLike,
}

impl ModelKind {
    pub const ALL: [ModelKind; 8] = [
        ModelKind::Linear,
        ModelKind::Ridge,
        ModelKind::DecisionTree,
        ModelKind::Knn,
        ModelKind::RandomForest,
        ModelKind::GradBoost,
        ModelKind::Svr,
        ModelKind::XgbLike,
    ];

    /// Display name used in report tables.
    pub fn display_name(&self) -> &'static str {
        match self {
            ModelKind::Linear => "Linear",
            ModelKind::Ridge => "Ridge",
            ModelKind::DecisionTree => "Decision Tree",
            ModelKind::Knn => "KNN",
            ModelKind::RandomForest => "Random Forest",
            ModelKind::GradBoost => "GradBoost",
            ModelKind::Svr => "SVR",
            ModelKind::XgbLike => "XGBoost",
        }
    }

    /// CLI key, e.g. `tune knn`.
    pub fn key(&self) -> &'static str {
        match self {
            ModelKind::Linear => "linear",
            ModelKind::Ridge => "ridge",
            ModelKind::DecisionTree => "tree",
            ModelKind::Knn => "knn",
            ModelKind::RandomForest => "forest",
            ModelKind::GradBoost => "gradboost",
            ModelKind::Svr => "svr",
            ModelKind::XgbLike => "xgboost",
        }
    }
}

impl std::str::FromStr for ModelKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        ModelKind::ALL
            .iter()
            .find(|k| k.key() == s.to_ascii_lowercase())
            .copied()
            .ok_or_else(|| {
                format!(
                    "unknown model {s:?}; expected one of {}",
                    ModelKind::ALL.map(|k| k.key()).join(", ")
                )
            })
    }
}

impl std::fmt::Display for ModelKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.display_name())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RidgeParams {
    pub alpha: f64,
}

impl Default for RidgeParams {
    fn default() -> Self {
        RidgeParams { alpha: 0.1 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TreeParams {
    pub max_depth: usize,
    pub min_samples_leaf: usize,
}

impl Default for TreeParams {
    fn default() -> Self {
        TreeParams {
            max_depth: 8,
            min_samples_leaf: 5,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct KnnParams {
    pub k: usize,
    pub weighting: Weighting,
}

impl Default for KnnParams {
    fn default() -> Self {
        KnnParams {
            k: 5,
            weighting: Weighting::InverseDistance,
        }
    }
}

/// Whether the forest samples split candidates per split (standard) or
/// draws one feature subset per tree.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeatureSampling {
    PerSplit,
    PerTree,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ForestParams {
    pub n_trees: usize,
    pub feature_ratio: f64,
    pub max_depth: Option<usize>,
    pub min_samples_leaf: usize,
    pub bootstrap: bool,
    pub feature_sampling: FeatureSampling,
}

impl Default for ForestParams {
    fn default() -> Self {
        ForestParams {
            n_trees: 100,
            feature_ratio: 0.7,
            max_depth: None,
            min_samples_leaf: 1,
            bootstrap: true,
            feature_sampling: FeatureSampling::PerSplit,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GradBoostParams {
    pub n_stages: usize,
    pub learning_rate: f64,
    pub max_depth: usize,
}

impl Default for GradBoostParams {
    fn default() -> Self {
        GradBoostParams {
            n_stages: 100,
            learning_rate: 0.1,
            max_depth: 4,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SvrParams {
    pub c: f64,
    pub gamma: f64,
    pub epsilon: f64,
    pub tol: f64,
    pub max_iterations: usize,
    /// Training sets larger than this are subsampled (seeded) before the
    /// dual solve; `None` disables the cap.
    pub max_train: Option<usize>,
}

impl Default for SvrParams {
    fn default() -> Self {
        SvrParams {
            c: 1.0,
            gamma: 0.1,
            epsilon: 0.1,
            tol: 1e-3,
            max_iterations: 50_000,
            max_train: Some(8000),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct XgbLikeParams {
    pub n_stages: usize,
    pub learning_rate: f64,
    pub max_depth: usize,
    pub subsample: f64,
    pub colsample: f64,
    pub lambda: f64,
}

impl Default for XgbLikeParams {
    fn default() -> Self {
        XgbLikeParams {
            n_stages: 200,
            learning_rate: 0.05,
            max_depth: 6,
            subsample: 0.8,
            colsample: 0.7,
            lambda: 1.0,
        }
    }
}

/// Kind plus kind-specific hyperparameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ModelHyperparams {
    Linear,
    Ridge(RidgeParams),
    DecisionTree(TreeParams),
    Knn(KnnParams),
    RandomForest(ForestParams),
    GradBoost(GradBoostParams),
    Svr(SvrParams),
    XgbLike(XgbLikeParams),
}

impl ModelHyperparams {
    pub fn kind(&self) -> ModelKind {
        match self {
            ModelHyperparams::Linear => ModelKind::Linear,
            ModelHyperparams::Ridge(_) => ModelKind::Ridge,
            ModelHyperparams::DecisionTree(_) => ModelKind::DecisionTree,
            ModelHyperparams::Knn(_) => ModelKind::Knn,
            ModelHyperparams::RandomForest(_) => ModelKind::RandomForest,
            ModelHyperparams::GradBoost(_) => ModelKind::GradBoost,
            ModelHyperparams::Svr(_) => ModelKind::Svr,
            ModelHyperparams::XgbLike(_) => ModelKind::XgbLike,
        }
    }

    pub fn default_for(kind: ModelKind) -> Self {
        match kind {
            ModelKind::Linear => ModelHyperparams::Linear,
            ModelKind::Ridge => ModelHyperparams::Ridge(RidgeParams::default()),
            ModelKind::DecisionTree => ModelHyperparams::DecisionTree(TreeParams::default()),
            ModelKind::Knn => ModelHyperparams::Knn(KnnParams::default()),
            ModelKind::RandomForest => ModelHyperparams::RandomForest(ForestParams::default()),
            ModelKind::GradBoost => ModelHyperparams::GradBoost(GradBoostParams::default()),
            ModelKind::Svr => ModelHyperparams::Svr(SvrParams::default()),
            ModelKind::XgbLike => ModelHyperparams::XgbLike(XgbLikeParams::default()),
        }
    }
}

/// A model recipe: kind, hyperparameters, and an RNG seed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegressorSpec {
    pub hyperparams: ModelHyperparams,
    pub seed: u64,
}

impl RegressorSpec {
    pub fn new(hyperparams: ModelHyperparams, seed: u64) -> Self {
        RegressorSpec { hyperparams, seed }
    }

    pub fn kind(&self) -> ModelKind {
        self.hyperparams.kind()
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        fn positive(name: &'static str, value: f64) -> Result<(), ModelError> {
            if value > 0.0 {
                Ok(())
            } else {
                Err(ModelError::NonPositiveHyperparam { name, value })
            }
        }
        fn rate(name: &'static str, value: f64) -> Result<(), ModelError> {
            if value > 0.0 && value <= 1.0 {
                Ok(())
            } else {
                Err(ModelError::InvalidHyperparam {
                    detail: format!("{name} must be in (0, 1], got {value}"),
                })
            }
        }
        match &self.hyperparams {
            ModelHyperparams::Linear => Ok(()),
            ModelHyperparams::Ridge(p) => {
                if p.alpha >= 0.0 {
                    Ok(())
                } else {
                    Err(ModelError::InvalidHyperparam {
                        detail: format!("alpha must be >= 0, got {}", p.alpha),
                    })
                }
            }
            ModelHyperparams::DecisionTree(p) => {
                if p.max_depth < 1 {
                    return Err(ModelError::InvalidHyperparam {
                        detail: "max_depth must be >= 1".into(),
                    });
                }
                if p.min_samples_leaf < 1 {
                    return Err(ModelError::InvalidHyperparam {
                        detail: "min_samples_leaf must be >= 1".into(),
                    });
                }
                Ok(())
            }
            ModelHyperparams::Knn(p) => {
                if p.k < 1 {
                    return Err(ModelError::InvalidHyperparam {
                        detail: "k must be >= 1".into(),
                    });
                }
                Ok(())
            }
            ModelHyperparams::RandomForest(p) => {
                if p.n_trees < 1 {
                    return Err(ModelError::InvalidHyperparam {
                        detail: "n_trees must be >= 1".into(),
                    });
                }
                rate("feature_ratio", p.feature_ratio)
            }
            ModelHyperparams::GradBoost(p) => {
                if p.n_stages < 1 || p.max_depth < 1 {
                    return Err(ModelError::InvalidHyperparam {
                        detail: "n_stages and max_depth must be >= 1".into(),
                    });
                }
                // learning_rate = 0 is allowed: it freezes the ensemble at
                // the mean prediction, which is occasionally useful as a
                // baseline probe.
                if p.learning_rate < 0.0 {
                    return Err(ModelError::InvalidHyperparam {
                        detail: format!("learning_rate must be >= 0, got {}", p.learning_rate),
                    });
                }
                Ok(())
            }
            ModelHyperparams::Svr(p) => {
                positive("C", p.c)?;
                positive("gamma", p.gamma)?;
                if p.epsilon < 0.0 {
                    return Err(ModelError::InvalidHyperparam {
                        detail: format!("epsilon must be >= 0, got {}", p.epsilon),
                    });
                }
                positive("tol", p.tol)
            }
            ModelHyperparams::XgbLike(p) => {
                if p.n_stages < 1 || p.max_depth < 1 {
                    return Err(ModelError::InvalidHyperparam {
                        detail: "n_stages and max_depth must be >= 1".into(),
                    });
                }
                if p.learning_rate < 0.0 {
                    return Err(ModelError::InvalidHyperparam {
                        detail: format!("learning_rate must be >= 0, got {}", p.learning_rate),
                    });
                }
                rate("subsample", p.subsample)?;
                rate("colsample", p.colsample)?;
                if p.lambda < 0.0 {
                    return Err(ModelError::InvalidHyperparam {
                        detail: format!("lambda must be >= 0, got {}", p.lambda),
                    });
                }
                Ok(())
            }
        }
    }
}

/// Learned state per model kind.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ModelParams {
    Linear(LinearFit),
    Ridge(LinearFit),
    DecisionTree(Tree),
    Knn(KnnFit),
    RandomForest(ForestFit),
    GradBoost(GradBoostFit),
    Svr(SvrFit),
    XgbLike(XgbLikeFit),
}

/// A trained model: immutable after fit, `predict` never mutates it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FittedModel {
    pub spec: RegressorSpec,
    pub train_feature_names: Vec<String>,
    pub params: ModelParams,
}

impl FittedModel {
    /// Fit `spec` on `(x, y)`; `feature_names` travel with the model so
    /// prediction inputs can be shape-checked and explanations labeled.
    pub fn fit(
        spec: RegressorSpec,
        x: &Matrix,
        y: &[f64],
        feature_names: &[String],
    ) -> Result<FittedModel, ModelError> {
        spec.validate()?;
        if x.nrows() == 0 || y.is_empty() {
            return Err(ModelError::EmptyTrainingSet);
        }
        if x.nrows() != y.len() {
            return Err(ModelError::DimensionMismatch {
                expected: x.nrows(),
                got: y.len(),
            });
        }
        if x.data().iter().any(|v| !v.is_finite()) || y.iter().any(|v| !v.is_finite()) {
            return Err(ModelError::NonFinite);
        }
        let params = match &spec.hyperparams {
            ModelHyperparams::Linear => ModelParams::Linear(linear::fit_ols(x, y)?),
            ModelHyperparams::Ridge(p) => ModelParams::Ridge(linear::fit_ridge(x, y, p.alpha)?),
            ModelHyperparams::DecisionTree(p) => {
                ModelParams::DecisionTree(tree::fit_tree(x, y, p)?)
            }
            ModelHyperparams::Knn(p) => ModelParams::Knn(knn::fit(x, y, p)?),
            ModelHyperparams::RandomForest(p) => {
                ModelParams::RandomForest(forest::fit(x, y, p, spec.seed)?)
            }
            ModelHyperparams::GradBoost(p) => ModelParams::GradBoost(gradboost::fit(x, y, p)?),
            ModelHyperparams::Svr(p) => ModelParams::Svr(svr::fit(x, y, p, spec.seed)?),
            ModelHyperparams::XgbLike(p) => ModelParams::XgbLike(xgblike::fit(x, y, p, spec.seed)?),
        };
        Ok(FittedModel {
            spec,
            train_feature_names: feature_names.to_vec(),
            params,
        })
    }

    pub fn kind(&self) -> ModelKind {
        self.spec.kind()
    }

    /// Kind-dispatched prediction; deterministic, one output per row.
    pub fn predict(&self, x: &Matrix) -> Result<Vec<f64>, ModelError> {
        if x.ncols() != self.train_feature_names.len() {
            return Err(ModelError::DimensionMismatch {
                expected: self.train_feature_names.len(),
                got: x.ncols(),
            });
        }
        if x.nrows() == 0 {
            return Ok(Vec::new());
        }
        let out = match &self.params {
            ModelParams::Linear(f) | ModelParams::Ridge(f) => f.predict(x),
            ModelParams::DecisionTree(t) => t.predict(x),
            ModelParams::Knn(f) => f.predict(x),
            ModelParams::RandomForest(f) => f.predict(x),
            ModelParams::GradBoost(f) => f.predict(x),
            ModelParams::Svr(f) => f.predict(x),
            ModelParams::XgbLike(f) => f.predict(x),
        };
        debug_assert!(out.iter().all(|v| v.is_finite()));
        Ok(out)
    }
}
