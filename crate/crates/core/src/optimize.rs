//! Fidelity optimization and curves: for each fixed total gate time, scan the
//! shared drive amplitude over a grid, force the coupling scale from the time
//! budget, simulate the schedule, and keep the best fidelity. Builds
//! single-tensor curves, random-ensemble curves at fixed eta, and their
//! pointwise means.

use crate::fidelity::{average_fidelity_channel, average_fidelity_unitary};
use crate::model::{
    angular_from_mhz, mhz_from_angular, ns_from_seconds, sample_random_tensor, seconds_from_ns,
    CouplingTensor, DeviceParams, ModelError,
};
use crate::propagate::{
    propagate_superoperator, propagate_unitary, DecoherenceParams, Frame, PropagateError,
    StepControl,
};
use crate::pulse::{compile_cnot_schedule, g_for_gate_time, ideal_cnot, PulseError};
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use rayon::prelude::*;

#[derive(Debug, thiserror::Error)]
pub enum OptimizeError {
    #[error("coupling tensor has eta = 0; no drive amplitude can produce a CNOT")]
    ZeroEta,
    #[error(
        "no feasible drive amplitude at t_gate = {t_gate_ns:.4} ns: every grid point leaves \
         either no interaction window or a coupling outside the device range"
    )]
    NoFeasibleOmega { t_gate_ns: f64 },
    #[error(transparent)]
    Propagate(#[from] PropagateError),
    #[error(transparent)]
    Sampling(#[from] ModelError),
}

/// Sweep parameters; `Default` matches the reference evaluation grid.
#[derive(Debug, Clone)]
pub struct SweepConfig {
    /// Gate times in seconds, positive increasing.
    pub times: Vec<f64>,
    /// Drive amplitudes to scan (angular), ascending.
    pub omega_grid: Vec<f64>,
    pub device: DeviceParams,
    pub decoherence: DecoherenceParams,
    pub step: StepControl,
    pub frame: Frame,
}

/// The 15 gate times used throughout: 10 to 30 ns in 1.25/2.5 ns steps, then
/// 40 and 50 ns.
pub fn default_times() -> Vec<f64> {
    [
        10.0, 11.25, 12.5, 13.75, 15.0, 16.25, 17.5, 18.75, 20.0, 22.5, 25.0, 27.5, 30.0, 40.0,
        50.0,
    ]
    .iter()
    .map(|&t| seconds_from_ns(t))
    .collect()
}

/// Inclusive MHz grid converted to angular frequencies.
pub fn omega_grid_mhz(min_mhz: f64, max_mhz: f64, step_mhz: f64) -> Vec<f64> {
    assert!(step_mhz > 0.0 && max_mhz >= min_mhz, "invalid drive-amplitude grid");
    let count = ((max_mhz - min_mhz) / step_mhz + 1e-9).floor() as usize + 1;
    (0..count).map(|k| angular_from_mhz(min_mhz + k as f64 * step_mhz)).collect()
}

impl Default for SweepConfig {
    fn default() -> Self {
        SweepConfig {
            times: default_times(),
            omega_grid: omega_grid_mhz(50.0, 500.0, 10.0),
            device: DeviceParams::default(),
            decoherence: DecoherenceParams::none(),
            step: StepControl::default(),
            frame: Frame::Rotating,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurvePoint {
    /// Seconds.
    pub t_gate: f64,
    /// Average fidelity in [0, 1].
    pub fidelity: f64,
    /// Coupling scale (angular) forced by the time budget.
    pub g: f64,
    /// Winning drive amplitude (angular).
    pub omega: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct FidelityCurve {
    pub points: Vec<CurvePoint>,
}

/// Simulated fidelity of one (tensor, omega, g) candidate.
fn candidate_fidelity(
    c: &CouplingTensor,
    omega: f64,
    cfg: &SweepConfig,
) -> Result<f64, OptimizeError> {
    let sched = compile_cnot_schedule(c, omega).map_err(|_| OptimizeError::ZeroEta)?;
    let cnot = ideal_cnot();
    if cfg.decoherence.gamma() > 0.0 {
        let sr = propagate_superoperator(&sched, &cfg.device, c, &cfg.decoherence, &cfg.step)?;
        Ok(average_fidelity_channel(&cnot, &sr.s))
    } else {
        let r = propagate_unitary(&sched, &cfg.device, c, &cfg.step, cfg.frame)?;
        Ok(average_fidelity_unitary(&cnot, &r.gate()))
    }
}

/// Best fidelity over the drive-amplitude grid at one fixed gate time. Grid
/// points whose forced coupling is infeasible are skipped; ties keep the
/// smaller amplitude (the grid is scanned in ascending order).
pub fn optimize_point(
    c: &CouplingTensor,
    t_gate: f64,
    cfg: &SweepConfig,
) -> Result<CurvePoint, OptimizeError> {
    if c.eta() == 0.0 {
        return Err(OptimizeError::ZeroEta);
    }
    let mut best: Option<CurvePoint> = None;
    for &omega in &cfg.omega_grid {
        let g = match g_for_gate_time(c, t_gate, omega) {
            Ok(g) => g,
            Err(PulseError::GateTimeTooShort { .. }) => continue,
            Err(PulseError::ZeroEta) => return Err(OptimizeError::ZeroEta),
        };
        if g < cfg.device.g_min || g > cfg.device.g_max {
            continue;
        }
        let ct = c.with_g(g).expect("g is positive and finite");
        let fidelity = candidate_fidelity(&ct, omega, cfg)?;
        if best.map_or(true, |b| fidelity > b.fidelity) {
            best = Some(CurvePoint { t_gate, fidelity, g, omega });
        }
    }
    best.ok_or(OptimizeError::NoFeasibleOmega { t_gate_ns: ns_from_seconds(t_gate) })
}

/// `optimize_point` mapped over the configured times, in order.
pub fn fidelity_curve(c: &CouplingTensor, cfg: &SweepConfig) -> Result<FidelityCurve, OptimizeError> {
    let points: Vec<Result<CurvePoint, OptimizeError>> =
        cfg.times.par_iter().map(|&t| optimize_point(c, t, cfg)).collect();
    Ok(FidelityCurve { points: points.into_iter().collect::<Result<Vec<_>, _>>()? })
}

/// Reference operating points (gate time in ns, drive amplitude nu = omega/h
/// in MHz) for the intrinsic Heisenberg curve.
pub const REFERENCE_POINTS_HEISENBERG: [(f64, f64); 15] = [
    (10.0, 430.0),
    (11.25, 430.0),
    (12.5, 430.0),
    (13.75, 430.0),
    (15.0, 430.0),
    (16.25, 430.0),
    (17.5, 430.0),
    (18.75, 430.0),
    (20.0, 430.0),
    (22.5, 430.0),
    (25.0, 430.0),
    (27.5, 430.0),
    (30.0, 340.0),
    (40.0, 340.0),
    (50.0, 340.0),
];

/// Reference operating points for the intrinsic XY curve.
pub const REFERENCE_POINTS_XY: [(f64, f64); 15] = [
    (10.0, 500.0),
    (11.25, 250.0),
    (12.5, 250.0),
    (13.75, 240.0),
    (15.0, 240.0),
    (16.25, 240.0),
    (17.5, 240.0),
    (18.75, 240.0),
    (20.0, 240.0),
    (22.5, 240.0),
    (25.0, 240.0),
    (27.5, 240.0),
    (30.0, 250.0),
    (40.0, 250.0),
    (50.0, 250.0),
];

/// Reference operating points for the Heisenberg curve with 500 ns
/// amplitude damping on both qubits; the drive is fixed at 370 MHz.
pub const REFERENCE_POINTS_DAMPED: [(f64, f64); 15] = [
    (10.0, 370.0),
    (11.25, 370.0),
    (12.5, 370.0),
    (13.75, 370.0),
    (15.0, 370.0),
    (16.25, 370.0),
    (17.5, 370.0),
    (18.75, 370.0),
    (20.0, 370.0),
    (22.5, 370.0),
    (25.0, 370.0),
    (27.5, 370.0),
    (30.0, 370.0),
    (40.0, 370.0),
    (50.0, 370.0),
];

/// Evaluates the schedule at fixed (gate time, drive amplitude) pairs
/// instead of scanning the drive grid. `cfg.times` and `cfg.omega_grid`
/// are ignored; decoherence, device bounds and step control apply.
pub fn evaluate_at_operating_points(
    c: &CouplingTensor,
    points: &[(f64, f64)],
    cfg: &SweepConfig,
) -> Result<FidelityCurve, OptimizeError> {
    let evaluated: Vec<Result<CurvePoint, OptimizeError>> = points
        .par_iter()
        .map(|&(t_ns, nu_mhz)| {
            let mut pinned = cfg.clone();
            pinned.omega_grid = vec![angular_from_mhz(nu_mhz)];
            optimize_point(c, seconds_from_ns(t_ns), &pinned)
        })
        .collect();
    Ok(FidelityCurve { points: evaluated.into_iter().collect::<Result<Vec<_>, _>>()? })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnsembleConfig {
    /// Coupling strength shared by every sampled tensor.
    pub target_eta: f64,
    pub samples: u32,
    pub seed: u64,
    /// Rejection-sampling half-width around `target_eta`.
    pub eta_tol: f64,
}

impl EnsembleConfig {
    pub fn new(target_eta: f64, samples: u32, seed: u64) -> EnsembleConfig {
        EnsembleConfig { target_eta, samples, seed, eta_tol: 0.01 }
    }
}

#[derive(Debug, Clone)]
pub struct EnsembleResult {
    /// The sampled tensors, in draw order.
    pub tensors: Vec<CouplingTensor>,
    /// One curve per sample; points whose optimization failed are absent.
    pub curves: Vec<FidelityCurve>,
    /// Pointwise mean fidelity over the samples present at each time.
    pub mean: Vec<(f64, f64)>,
    /// Count of (sample, time) evaluations excluded from the mean.
    pub excluded: u32,
}

/// Curves for `samples` random tensors at fixed eta plus their pointwise
/// mean. Tensors are drawn sequentially from the seed, so the result is
/// reproducible; failed points are logged and excluded from the mean at that
/// time only.
pub fn ensemble_curves(
    ens: &EnsembleConfig,
    cfg: &SweepConfig,
) -> Result<EnsembleResult, OptimizeError> {
    let mut rng = ChaCha12Rng::seed_from_u64(ens.seed);
    let mut tensors = Vec::with_capacity(ens.samples as usize);
    for _ in 0..ens.samples {
        tensors.push(sample_random_tensor(&mut rng, ens.target_eta, ens.eta_tol)?);
    }
    let per_sample: Vec<Vec<Option<CurvePoint>>> = tensors
        .par_iter()
        .enumerate()
        .map(|(s, ct)| {
            cfg.times
                .iter()
                .map(|&t| match optimize_point(ct, t, cfg) {
                    Ok(p) => Some(p),
                    Err(e) => {
                        log::warn!(
                            "ensemble sample {s} excluded at t_gate = {:.4} ns: {e}",
                            ns_from_seconds(t)
                        );
                        None
                    }
                })
                .collect()
        })
        .collect();
    let mut excluded = 0;
    let mut mean = Vec::with_capacity(cfg.times.len());
    for (ti, &t) in cfg.times.iter().enumerate() {
        let values: Vec<f64> =
            per_sample.iter().filter_map(|row| row[ti].map(|p| p.fidelity)).collect();
        excluded += (per_sample.len() - values.len()) as u32;
        if !values.is_empty() {
            mean.push((t, values.iter().sum::<f64>() / values.len() as f64));
        }
    }
    let curves = per_sample
        .into_iter()
        .map(|row| FidelityCurve { points: row.into_iter().flatten().collect() })
        .collect();
    Ok(EnsembleResult { tensors, curves, mean, excluded })
}

/// Renders `x` with six significant digits.
pub fn sig6(x: f64) -> String {
    if x == 0.0 {
        return "0.00000".to_string();
    }
    let decimals = (5 - x.abs().log10().floor() as i32).clamp(0, 17) as usize;
    format!("{x:.decimals$}")
}

pub const CURVE_CSV_HEADER: &str = "t_gate_ns,fidelity_percent,g_over_h_mhz,omega_over_h_mhz";
pub const MEAN_CSV_HEADER: &str = "t_gate_ns,fidelity_percent";

pub fn curve_to_csv(curve: &FidelityCurve) -> String {
    let mut out = String::from(CURVE_CSV_HEADER);
    out.push('\n');
    for p in &curve.points {
        out.push_str(&format!(
            "{},{},{},{}\n",
            sig6(ns_from_seconds(p.t_gate)),
            sig6(p.fidelity * 100.0),
            sig6(mhz_from_angular(p.g)),
            sig6(mhz_from_angular(p.omega)),
        ));
    }
    out
}

pub fn mean_to_csv(mean: &[(f64, f64)]) -> String {
    let mut out = String::from(MEAN_CSV_HEADER);
    out.push('\n');
    for &(t, f) in mean {
        out.push_str(&format!("{},{}\n", sig6(ns_from_seconds(t)), sig6(f * 100.0)));
    }
    out
}
