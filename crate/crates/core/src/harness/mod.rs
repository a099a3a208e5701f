//! Synthetic experiments, counterexamples, races and the command line.

mod cli;
mod counterexample;
mod generate;
mod race;
mod reference;
mod verify;

pub use cli::{cli_main, cli_main_with, EXIT_FAILED, EXIT_OK, EXIT_USAGE};
pub use counterexample::{
    case_problem, cases, run_counterexamples, CaseReport, CounterexampleCase, CounterexampleName, CounterexampleReport,
    RuleOutcome, BOUND_TOLERANCE, GS_BOUND, RATIO_TOLERANCE, UNIFORM_BOUND,
};
pub use generate::{
    connected_components, gen_experiment, knn_graph, max_degree, scaled_matrix, sparsity_level, two_moons_points,
    Experiment, ExperimentData, ExperimentKind, ExperimentSpec, LABEL_FLIP_PROB, TWO_MOONS_LABELS,
    TWO_MOONS_NEIGHBOURS, TWO_MOONS_NOISE,
};
pub use race::{
    entries_for, experiment_step, race_experiment, race_problem, RaceRun, RaceSummary, RuleSummary,
    RACE_ITERS_PER_COORD, TARGET_REL_GAP,
};
pub use reference::reference_solution;
pub use verify::{verify_all, CheckOutcome, VerifyReport};
