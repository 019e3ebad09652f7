//! Evolutionary identification of non-linear dynamical models.
//!
//! The engine searches over model structures generated by a tree adjoining
//! grammar: genetic programming proposes derivations, least squares fits
//! each candidate's coefficients on the estimation record, and NSGA-II
//! selection maintains a Pareto front over one-step-ahead prediction error,
//! free-run simulation error, and model complexity (coefficient count).
//!
//! Modules:
//! * [`grammar`] — the TAG kernel: elementary trees, substitution,
//!   adjunction, yields, the four built-in grammars, and a text format for
//!   user-defined grammars.
//! * [`genotype`] — derivation trees as replayable genotypes.
//! * [`model`] — decoded model structures and their evaluation in
//!   prediction and simulation modes.
//! * [`estimation`] — linear and extended (pseudo-linear) least squares.
//! * [`objectives`] — objective triples, quality measures, non-dominated
//!   sorting and crowding-distance selection.
//! * [`gp`] — the generational loop.
//! * [`data`] — datasets, CSV input/output, excitation signals and the
//!   shipped synthetic benchmark systems.

pub mod data;
pub mod error;
pub mod estimation;
pub mod genotype;
pub mod gp;
pub mod grammar;
pub mod linalg;
pub mod model;
pub mod objectives;

pub use data::{
    builtin_system, generate_benchmark, generate_excitation, load_csv, save_csv, save_sidecar,
    Dataset, DatasetBundle, ExcitationKind, Role, SyntheticSystem,
};
pub use error::{DataError, EstimationError, GrammarError, ModelError, QualityError};
pub use estimation::{extended_least_squares, least_squares, EstimationReport};
pub use genotype::DerivationTree;
pub use gp::{init_population, run, GenerationStats, GpConfig, Individual, RunOptions, RunResult};
pub use grammar::{builtin_grammar, parse_grammar_text, DerivedTree, Grammar};
pub use model::{
    format_model, parse_equation, parse_model, predict_one_step, regressor_row, simulate,
    FittedModel, ModelStructure,
};
pub use objectives::{
    non_dominated_sort, objectives, quality, MetricForm, ObjectiveTriple, QualityMeasures,
};
