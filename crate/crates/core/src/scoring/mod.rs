//! Integer scoring tables and the Arnold PSA scorers.

mod psa;
mod table;

pub use psa::{
    score_psa_nca, score_psa_nvca, NcaInputs, NcaScore, NvcaInputs, NvcaScore, PsaFields,
    PsaNcaModel, PsaNvcaModel,
};
pub use table::{
    Comparator, CompiledTable, Condition, Evaluation, Row, ScoringTable, Threshold,
    DEFAULT_COEF_RANGE, OFFSET_RANGE,
};
