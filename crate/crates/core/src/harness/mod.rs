//! Leave-one-domain-out experiments driven by config files.

mod config;
mod report;
mod run;

pub use config::{
    ClassifierKind, ClassifierSettings, DataSource, Dataset, ExperimentConfig, Method, SvmC,
    SVM_C_GRID,
};
pub use report::{emit_report, CaseResult, EvalReport};
pub use run::{
    file_stem, load_dataset, merge_available, merge_parts, run_case, run_leave_one_domain_out, run_on_corpus, run_repetitions, source_domains,
    write_extras, write_outputs, ExperimentOutput, JobOutput,
};
