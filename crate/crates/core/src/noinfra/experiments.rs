//! Seeded Monte Carlo experiments: symbol error rate, order-detection rate,
//! and de-noising quality sweeps.
//!
//! Every trial derives its own RNG stream from `(seed, point, trial)`, so
//! reports are identical regardless of execution order or thread count.
//! Per-trial records are collected in trial order and reduced sequentially,
//! which keeps floating-point aggregation deterministic under parallelism.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::decompose::recover_with_order;
use crate::denoise::{
    cadzow_denoise, estimate_k, DenoiseConfig, SimilarityKind, DEFAULT_PAIR_BUDGET,
};
use crate::error::{Error, Result};
use crate::formats::format_f64;
use crate::noinfra::channel::{
    draw_scenario, received_sequence, ReceiverKind, SimConfig,
};
use crate::noinfra::receivers::{noinfra_receive, ora_sic_receive, NoInfraReceiverConfig, OraSicKnown};
use crate::seeding::{derive_rng, mix};
use crate::sequence::{nmse, synthesize, IndexPattern};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    Ser,
    Detection,
    Denoise,
}

/// Similarity function selector as spelled in config files.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SimilarityName {
    Full,
    Diagonal,
    Rapid,
}

impl SimilarityName {
    pub fn kind(self) -> SimilarityKind {
        match self {
            SimilarityName::Full => SimilarityKind::Full,
            SimilarityName::Diagonal => SimilarityKind::Diagonal,
            SimilarityName::Rapid => SimilarityKind::Rapid,
        }
    }

    fn label(self) -> &'static str {
        match self {
            SimilarityName::Full => "full",
            SimilarityName::Diagonal => "diagonal",
            SimilarityName::Rapid => "rapid",
        }
    }
}

fn default_trials() -> usize {
    10_000
}
fn default_seed() -> u64 {
    1
}
fn default_k() -> Vec<usize> {
    vec![2]
}
fn default_modulation() -> Vec<usize> {
    vec![16]
}
fn default_gamma() -> Vec<f64> {
    vec![30.0]
}
fn default_sigma() -> Vec<f64> {
    vec![0.0]
}
fn default_receivers() -> Vec<ReceiverKind> {
    vec![ReceiverKind::NoInfra, ReceiverKind::OraSic]
}
fn default_similarity() -> Vec<SimilarityName> {
    vec![SimilarityName::Diagonal]
}
fn default_k_max() -> usize {
    4
}
fn default_pair_budget() -> usize {
    DEFAULT_PAIR_BUDGET
}
fn default_epsilon() -> f64 {
    1e-10
}
fn default_i_max() -> usize {
    30
}
fn default_center_frequency() -> f64 {
    6e9
}
fn default_bandwidth() -> f64 {
    1e6
}
fn default_symbol_duration() -> f64 {
    30e-6
}
fn default_samples() -> usize {
    30
}
fn default_doppler() -> (f64, f64) {
    (-1e3, 1e3)
}
fn default_delay() -> (f64, f64) {
    (0.0, 1e-6)
}

/// Experiment description as read from JSON config files. Sweep fields are
/// arrays; the run is the cartesian product of the arrays relevant to the
/// experiment kind.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSpec {
    pub experiment: ExperimentKind,
    #[serde(default = "default_trials")]
    pub trials: usize,
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default = "default_k")]
    pub k: Vec<usize>,
    #[serde(default = "default_modulation")]
    pub modulation_order: Vec<usize>,
    #[serde(default = "default_gamma")]
    pub gamma_db: Vec<f64>,
    #[serde(default = "default_sigma")]
    pub sigma_db: Vec<f64>,
    #[serde(default = "default_receivers")]
    pub receivers: Vec<ReceiverKind>,
    #[serde(default = "default_similarity")]
    pub similarity: Vec<SimilarityName>,
    #[serde(default = "default_k_max")]
    pub k_max: usize,
    #[serde(default = "default_pair_budget")]
    pub pair_budget: usize,
    #[serde(default = "default_epsilon")]
    pub epsilon: f64,
    #[serde(default = "default_i_max")]
    pub i_max: usize,
    #[serde(default = "default_center_frequency")]
    pub center_frequency_hz: f64,
    #[serde(default = "default_bandwidth")]
    pub bandwidth_hz: f64,
    #[serde(default = "default_symbol_duration")]
    pub symbol_duration_s: f64,
    #[serde(default = "default_samples")]
    pub samples_per_symbol: usize,
    #[serde(default = "default_doppler")]
    pub doppler_range_hz: (f64, f64),
    #[serde(default = "default_delay")]
    pub delay_spread_range_s: (f64, f64),
}

impl ExperimentSpec {
    pub fn new(experiment: ExperimentKind) -> Self {
        serde_json::from_value(serde_json::json!({
            "experiment": match experiment {
                ExperimentKind::Ser => "ser",
                ExperimentKind::Detection => "detection",
                ExperimentKind::Denoise => "denoise",
            }
        }))
        .expect("default experiment spec is valid")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let spec: Self = serde_json::from_str(text)
            .map_err(|e| Error::parse(format!("experiment config: {e}")))?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(Error::invalid("trials must be at least 1"));
        }
        if self.k.is_empty()
            || self.modulation_order.is_empty()
            || self.gamma_db.is_empty()
            || self.sigma_db.is_empty()
        {
            return Err(Error::invalid("sweep arrays must be non-empty"));
        }
        if self.experiment == ExperimentKind::Ser && self.receivers.is_empty() {
            return Err(Error::invalid("ser experiment needs at least one receiver"));
        }
        if self.experiment == ExperimentKind::Detection && self.similarity.is_empty() {
            return Err(Error::invalid("detection experiment needs at least one similarity kind"));
        }
        if self.k_max == 0 {
            return Err(Error::invalid("k_max must be at least 1"));
        }
        // Validate the physical setup once via a representative point config.
        self.point_config(self.gamma_db[0], self.sigma_db[0], self.k[0],
            self.modulation_order[0], ReceiverKind::NoInfra)
            .validate()
    }

    fn point_config(
        &self,
        gamma_db: f64,
        sigma_db: f64,
        k: usize,
        modulation_order: usize,
        receiver: ReceiverKind,
    ) -> SimConfig {
        SimConfig {
            center_frequency_hz: self.center_frequency_hz,
            bandwidth_hz: self.bandwidth_hz,
            symbol_duration_s: self.symbol_duration_s,
            samples_per_symbol: self.samples_per_symbol,
            k,
            modulation_order,
            gamma_db,
            sigma_db,
            doppler_range_hz: self.doppler_range_hz,
            delay_spread_range_s: self.delay_spread_range_s,
            trials: self.trials,
            seed: self.seed,
            receiver,
        }
    }

    fn denoise_config(&self) -> DenoiseConfig {
        DenoiseConfig { epsilon: self.epsilon, max_iterations: self.i_max }
    }
}

// ---------------------------------------------------------------------------
// Report
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq)]
pub struct SerRow {
    pub gamma_db: f64,
    pub sigma_db: f64,
    pub k: usize,
    pub modulation_order: usize,
    pub noinfra_ser: Option<f64>,
    pub orasic_ser: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DetectionRow {
    pub k: usize,
    pub gamma_db: f64,
    pub sigma_db: f64,
    pub kind: SimilarityName,
    pub rate: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DenoiseRow {
    pub gamma_db: f64,
    pub sigma_db: f64,
    pub k: usize,
    pub nmse_observed: f64,
    pub nmse_raw_reconstruction: f64,
    pub nmse_denoised_reconstruction: f64,
    pub mean_iterations: f64,
    pub nonconverged_fraction: f64,
    pub raw_failures: usize,
    pub denoised_failures: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ReportRows {
    Ser(Vec<SerRow>),
    Detection(Vec<DetectionRow>),
    Denoise(Vec<DenoiseRow>),
}

/// Aggregated experiment output; a pure function of `(config, seed)` except
/// for the wallclock field, which is excluded from the CSV rendering.
#[derive(Debug, Clone, PartialEq)]
pub struct SimReport {
    pub kind: ExperimentKind,
    pub rows: ReportRows,
    pub trials_run: usize,
    pub wallclock_seconds: f64,
    pub config_echo: ExperimentSpec,
}

impl SimReport {
    /// Plot-ready CSV: one row per sweep point. Deterministic for a fixed
    /// `(config, seed)`.
    pub fn to_csv(&self) -> String {
        match &self.rows {
            ReportRows::Ser(rows) => {
                let with_noinfra = rows.iter().any(|r| r.noinfra_ser.is_some());
                let with_orasic = rows.iter().any(|r| r.orasic_ser.is_some());
                let mut header = String::from("gamma_db,sigma_db,k,modulation_order");
                if with_noinfra {
                    header.push_str(",noinfra_ser");
                }
                if with_orasic {
                    header.push_str(",orasic_ser");
                }
                header.push_str(",trials\n");
                let mut out = header;
                for row in rows {
                    out.push_str(&format!(
                        "{},{},{},{}",
                        format_f64(row.gamma_db),
                        format_f64(row.sigma_db),
                        row.k,
                        row.modulation_order
                    ));
                    if with_noinfra {
                        out.push_str(&format!(",{}", format_f64(row.noinfra_ser.unwrap_or(f64::NAN))));
                    }
                    if with_orasic {
                        out.push_str(&format!(",{}", format_f64(row.orasic_ser.unwrap_or(f64::NAN))));
                    }
                    out.push_str(&format!(",{}\n", self.trials_run));
                }
                out
            }
            ReportRows::Detection(rows) => {
                let mut out = String::from("k,gamma_db,sigma_db,kind,rate,trials\n");
                for row in rows {
                    out.push_str(&format!(
                        "{},{},{},{},{},{}\n",
                        row.k,
                        format_f64(row.gamma_db),
                        format_f64(row.sigma_db),
                        row.kind.label(),
                        format_f64(row.rate),
                        self.trials_run
                    ));
                }
                out
            }
            ReportRows::Denoise(rows) => {
                let mut out = String::from(
                    "gamma_db,sigma_db,k,nmse_observed,nmse_raw_reconstruction,\
                     nmse_denoised_reconstruction,mean_iterations,nonconverged_fraction,\
                     raw_failures,denoised_failures,trials\n",
                );
                for row in rows {
                    out.push_str(&format!(
                        "{},{},{},{},{},{},{},{},{},{},{}\n",
                        format_f64(row.gamma_db),
                        format_f64(row.sigma_db),
                        row.k,
                        format_f64(row.nmse_observed),
                        format_f64(row.nmse_raw_reconstruction),
                        format_f64(row.nmse_denoised_reconstruction),
                        format_f64(row.mean_iterations),
                        format_f64(row.nonconverged_fraction),
                        row.raw_failures,
                        row.denoised_failures,
                        self.trials_run
                    ));
                }
                out
            }
        }
    }

    /// Human-readable summary table.
    pub fn summary(&self) -> String {
        let mut out = String::new();
        match &self.rows {
            ReportRows::Ser(rows) => {
                for row in rows {
                    out.push_str(&format!(
                        "gamma={:>6.1} dB  sigma={:>5.1} dB  k={}  M={:<4}",
                        row.gamma_db, row.sigma_db, row.k, row.modulation_order
                    ));
                    if let Some(ser) = row.noinfra_ser {
                        out.push_str(&format!("  noinfra_ser={ser:.6}"));
                    }
                    if let Some(ser) = row.orasic_ser {
                        out.push_str(&format!("  orasic_ser={ser:.6}"));
                    }
                    out.push('\n');
                }
            }
            ReportRows::Detection(rows) => {
                for row in rows {
                    out.push_str(&format!(
                        "k={}  gamma={:>6.1} dB  sigma={:>5.1} dB  {}  rate={:.4}\n",
                        row.k,
                        row.gamma_db,
                        row.sigma_db,
                        row.kind.label(),
                        row.rate
                    ));
                }
            }
            ReportRows::Denoise(rows) => {
                for row in rows {
                    out.push_str(&format!(
                        "gamma={:>6.1} dB  k={}  nmse obs={:.3e} raw={:.3e} denoised={:.3e}  \
                         iters={:.2}  nonconverged={:.4}\n",
                        row.gamma_db,
                        row.k,
                        row.nmse_observed,
                        row.nmse_raw_reconstruction,
                        row.nmse_denoised_reconstruction,
                        row.mean_iterations,
                        row.nonconverged_fraction
                    ));
                }
            }
        }
        out.push_str(&format!(
            "{} point(s), {} trial(s) each, {:.2} s\n",
            match &self.rows {
                ReportRows::Ser(r) => r.len(),
                ReportRows::Detection(r) => r.len(),
                ReportRows::Denoise(r) => r.len(),
            },
            self.trials_run,
            self.wallclock_seconds
        ));
        out
    }
}

// ---------------------------------------------------------------------------
// Experiment runners
// ---------------------------------------------------------------------------

const SER_TAG: u64 = 0x5e52;
const DETECTION_TAG: u64 = 0xde7e;
const DENOISE_TAG: u64 = 0xd305;
const RECEIVER_SEED_TAG: u64 = 0x77aa;

/// Symbol error rate per sweep point: `errors / (k * trials)`.
pub fn run_ser_experiment(spec: &ExperimentSpec) -> Result<SimReport> {
    spec.validate()?;
    let started = std::time::Instant::now();
    let mut rows = Vec::new();
    let mut point_index = 0u64;
    for &gamma in &spec.gamma_db {
        for &sigma in &spec.sigma_db {
            for &k in &spec.k {
                for &m in &spec.modulation_order {
                    let mut row = SerRow {
                        gamma_db: gamma,
                        sigma_db: sigma,
                        k,
                        modulation_order: m,
                        noinfra_ser: None,
                        orasic_ser: None,
                    };
                    for &receiver in &spec.receivers {
                        let cfg = spec.point_config(gamma, sigma, k, m, receiver);
                        cfg.validate()?;
                        let point_seed = mix(spec.seed, SER_TAG ^ point_index);
                        point_index += 1;
                        let errors = run_ser_point(spec, &cfg, point_seed)?;
                        let ser = errors as f64 / (k * spec.trials) as f64;
                        match receiver {
                            ReceiverKind::NoInfra => row.noinfra_ser = Some(ser),
                            ReceiverKind::OraSic => row.orasic_ser = Some(ser),
                        }
                    }
                    rows.push(row);
                }
            }
        }
    }
    Ok(SimReport {
        kind: ExperimentKind::Ser,
        rows: ReportRows::Ser(rows),
        trials_run: spec.trials,
        wallclock_seconds: started.elapsed().as_secs_f64(),
        config_echo: spec.clone(),
    })
}

fn run_ser_point(spec: &ExperimentSpec, cfg: &SimConfig, point_seed: u64) -> Result<usize> {
    let per_trial: Vec<usize> = (0..spec.trials)
        .into_par_iter()
        .map(|trial| {
            let mut rng = derive_rng(point_seed, trial as u64);
            let (txs, noise_variance) =
                draw_scenario(cfg, &mut rng).expect("validated scenario config");
            let s_w = received_sequence(&txs, noise_variance, cfg, &mut rng)
                .expect("validated scenario config");
            let errors = match cfg.receiver {
                ReceiverKind::NoInfra => {
                    let known: Vec<(f64, f64)> =
                        txs.iter().map(|t| (t.amplitude, t.phase)).collect();
                    let rx = NoInfraReceiverConfig {
                        modulation_order: cfg.modulation_order,
                        denoise: spec.denoise_config(),
                        similarity: SimilarityKind::Diagonal,
                        pair_budget: spec.pair_budget,
                        seed: mix(point_seed, trial as u64 ^ RECEIVER_SEED_TAG),
                    };
                    match noinfra_receive(&s_w, &known, Some(cfg.k), &rx) {
                        Ok(symbols) => symbols
                            .iter()
                            .zip(&txs)
                            .filter(|(got, tx)| **got != tx.symbol_index)
                            .count(),
                        Err(_) => cfg.k,
                    }
                }
                ReceiverKind::OraSic => {
                    let known: Vec<OraSicKnown> = txs
                        .iter()
                        .map(|t| OraSicKnown {
                            amplitude: t.amplitude,
                            phase: t.phase,
                            grid_index: t.grid_index.expect("grid receiver draws grid indices"),
                            doppler_shifted_hz: t.doppler_shifted_hz,
                        })
                        .collect();
                    match ora_sic_receive(&s_w, &known, cfg) {
                        Ok(symbols) => symbols
                            .iter()
                            .zip(&txs)
                            .filter(|(got, tx)| **got != tx.symbol_index)
                            .count(),
                        Err(_) => cfg.k,
                    }
                }
            };
            errors
        })
        .collect();
    Ok(per_trial.iter().sum())
}

/// Fraction of trials whose estimated component count equals the truth.
pub fn run_detection_experiment(spec: &ExperimentSpec) -> Result<SimReport> {
    spec.validate()?;
    let started = std::time::Instant::now();
    let mut rows = Vec::new();
    let mut point_index = 0u64;
    for &k in &spec.k {
        for &gamma in &spec.gamma_db {
            for &sigma in &spec.sigma_db {
                for &kind in &spec.similarity {
                    let cfg = spec.point_config(
                        gamma,
                        sigma,
                        k,
                        spec.modulation_order[0],
                        ReceiverKind::NoInfra,
                    );
                    cfg.validate()?;
                    let point_seed = mix(spec.seed, DETECTION_TAG ^ point_index);
                    point_index += 1;
                    let hits: Vec<usize> = (0..spec.trials)
                        .into_par_iter()
                        .map(|trial| {
                            let mut rng = derive_rng(point_seed, trial as u64);
                            let (txs, noise_variance) =
                                draw_scenario(&cfg, &mut rng).expect("validated scenario config");
                            let s_w = received_sequence(&txs, noise_variance, &cfg, &mut rng)
                                .expect("validated scenario config");
                            let estimate = estimate_k(
                                &s_w,
                                spec.k_max,
                                kind.kind(),
                                spec.pair_budget,
                                mix(point_seed, trial as u64 ^ RECEIVER_SEED_TAG),
                            );
                            usize::from(estimate.map_or(false, |est| est == k))
                        })
                        .collect();
                    let rate = hits.iter().sum::<usize>() as f64 / spec.trials as f64;
                    rows.push(DetectionRow { k, gamma_db: gamma, sigma_db: sigma, kind, rate });
                }
            }
        }
    }
    Ok(SimReport {
        kind: ExperimentKind::Detection,
        rows: ReportRows::Detection(rows),
        trials_run: spec.trials,
        wallclock_seconds: started.elapsed().as_secs_f64(),
        config_echo: spec.clone(),
    })
}

struct DenoiseTrial {
    observed: f64,
    raw: f64,
    denoised: f64,
    iterations: usize,
    converged: bool,
    raw_failed: bool,
    denoised_failed: bool,
}

/// Mean NMSE of the observation, of the reconstruction without de-noising,
/// and of the reconstruction with de-noising, plus iteration statistics.
pub fn run_denoise_experiment(spec: &ExperimentSpec) -> Result<SimReport> {
    spec.validate()?;
    let started = std::time::Instant::now();
    let sigma = spec.sigma_db[0];
    let m = spec.modulation_order[0];
    let mut rows = Vec::new();
    let mut point_index = 0u64;
    for &gamma in &spec.gamma_db {
        for &k in &spec.k {
            let cfg = spec.point_config(gamma, sigma, k, m, ReceiverKind::NoInfra);
            cfg.validate()?;
            let denoise_cfg = spec.denoise_config();
            let point_seed = mix(spec.seed, DENOISE_TAG ^ point_index);
            point_index += 1;
            let pattern = IndexPattern::consecutive(k);
            let trials: Vec<DenoiseTrial> = (0..spec.trials)
                .into_par_iter()
                .map(|trial| {
                    let mut rng = derive_rng(point_seed, trial as u64);
                    let (txs, noise_variance) =
                        draw_scenario(&cfg, &mut rng).expect("validated scenario config");
                    let clean = received_sequence(&txs, 0.0, &cfg, &mut rng)
                        .expect("validated scenario config");
                    let observed_seq = received_sequence(&txs, noise_variance, &cfg, &mut rng)
                        .expect("validated scenario config");
                    let observed = nmse(&clean, &observed_seq).expect("equal lengths");

                    let reconstruction_nmse = |sequence: &crate::sequence::ComplexSequence| {
                        recover_with_order(sequence, k, &pattern).ok().and_then(|(d, _)| {
                            synthesize(&d, clean.len())
                                .ok()
                                .and_then(|rec| nmse(&clean, &rec).ok())
                        })
                    };

                    let raw_value = reconstruction_nmse(&observed_seq);
                    let denoise_result = cadzow_denoise(&observed_seq, k, &denoise_cfg)
                        .expect("validated rank");
                    let denoised_value = reconstruction_nmse(&denoise_result.sequence);

                    DenoiseTrial {
                        observed,
                        // A failed recovery reconstructs nothing; score it as
                        // the zero estimate (NMSE one).
                        raw: raw_value.unwrap_or(1.0),
                        denoised: denoised_value.unwrap_or(1.0),
                        iterations: denoise_result.iterations,
                        converged: denoise_result.converged,
                        raw_failed: raw_value.is_none(),
                        denoised_failed: denoised_value.is_none(),
                    }
                })
                .collect();

            let n = trials.len() as f64;
            rows.push(DenoiseRow {
                gamma_db: gamma,
                sigma_db: sigma,
                k,
                nmse_observed: trials.iter().map(|t| t.observed).sum::<f64>() / n,
                nmse_raw_reconstruction: trials.iter().map(|t| t.raw).sum::<f64>() / n,
                nmse_denoised_reconstruction: trials.iter().map(|t| t.denoised).sum::<f64>() / n,
                mean_iterations: trials.iter().map(|t| t.iterations as f64).sum::<f64>() / n,
                nonconverged_fraction: trials.iter().filter(|t| !t.converged).count() as f64 / n,
                raw_failures: trials.iter().filter(|t| t.raw_failed).count(),
                denoised_failures: trials.iter().filter(|t| t.denoised_failed).count(),
            });
        }
    }
    Ok(SimReport {
        kind: ExperimentKind::Denoise,
        rows: ReportRows::Denoise(rows),
        trials_run: spec.trials,
        wallclock_seconds: started.elapsed().as_secs_f64(),
        config_echo: spec.clone(),
    })
}

/// Dispatch on the config's experiment kind.
pub fn run_experiment(spec: &ExperimentSpec) -> Result<SimReport> {
    match spec.experiment {
        ExperimentKind::Ser => run_ser_experiment(spec),
        ExperimentKind::Detection => run_detection_experiment(spec),
        ExperimentKind::Denoise => run_denoise_experiment(spec),
    }
}
