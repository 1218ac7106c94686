//! Supervised learners on top of learnt features.

mod checkpoint;
mod cv;
mod net;
mod svm;

pub use checkpoint::{load_linear_model, load_net, save_linear_model, save_net};
pub use cv::{cross_validate, cross_validate_svm, stratified_folds, CvOutcome, Split};
pub use net::{fine_tune_1hnn, net_gradients, net_loss, softmax, NetConfig, NetGradients, OneHiddenNet};
pub use svm::{
    accuracy, argmax, predict, svm_objective, train_linear_svm, train_linear_svm_traced,
    LinearModel,
};
