//! Link-level Monte Carlo simulator for uncoordinated radio access.
//!
//! Two receivers are modeled over the same narrowband signal model. The
//! sequence-decomposition receiver lets every transmitter pick a continuous
//! random frequency and separates the superposed waveforms by decomposing the
//! sampled sum into geometric components. The baseline assigns transmitters
//! to an orthogonal subcarrier grid, demodulates with a DFT, and resolves
//! grid collisions with power-ordered successive interference cancellation.

mod channel;
mod experiments;
mod qam;
mod receivers;

pub use channel::{
    draw_scenario, implied_components, received_sequence, ReceiverKind, SimConfig,
    TransmitterRealization,
};
pub use experiments::{
    run_denoise_experiment, run_detection_experiment, run_experiment, run_ser_experiment,
    DenoiseRow, DetectionRow, ExperimentKind, ExperimentSpec, ReportRows, SerRow, SimReport,
    SimilarityName,
};
pub use qam::{constellation, qam_demodulate, qam_modulate};
pub use receivers::{noinfra_receive, ora_sic_receive, NoInfraReceiverConfig, OraSicKnown};
