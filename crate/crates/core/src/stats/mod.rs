//! Correlation, linear mixed models and penalized additive models.

mod correlation;
mod design;
mod formula;
mod gam;
mod inference;
mod lmm;
mod optim;

pub use correlation::{pearson, pearson_matrix, CorrelationMatrix};
pub use design::{
    assemble_design, build_design, DesignMatrices, FixedInput, RandomBlock, SmoothBlock, SplineBasis,
    DEFAULT_BASIS,
};
pub use formula::{parse_formula, ModelFormula, SmoothTerm};
pub use gam::{fit_gam, gcv_at, partial_effects, GamFit, LambdaChoice, PartialEffect, RandomFit, SmoothFit};
pub use inference::{
    compare_models, normal_p, wald_tests, AicComparison, ComparisonRow, ModelSummary, SimilarPair, WaldRow,
    WaldTable, SIMILAR_SUPPORT, WALD_CAVEAT,
};
pub use lmm::{fit_lmm, fit_lmm_reml, ml_loglik, LmmFit, Method, VarianceComponent};
pub use optim::{golden_section, Minimum, NelderMead};
