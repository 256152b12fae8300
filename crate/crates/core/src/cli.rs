//! Command-line front end. All frequencies on the command line are plain
//! frequencies (E/h) in MHz unless a flag says otherwise; times are in
//! nanoseconds. Conversion to internal angular units happens here.
//!
//! Exit codes: 0 success; 2 when the coupling cannot entangle (eta = 0);
//! 3 when the requested gate time is infeasible; 1 for anything else.

use crate::model::{
    angular_from_mhz, mhz_from_angular, ns_from_seconds, seconds_from_ns, CanonicalForm,
    CouplingTensor, DeviceParams, ModelError, TWO_PI,
};
use crate::optimize::{
    curve_to_csv, ensemble_curves, evaluate_at_operating_points, fidelity_curve, mean_to_csv,
    omega_grid_mhz, EnsembleConfig, OptimizeError, SweepConfig, REFERENCE_POINTS_DAMPED,
    REFERENCE_POINTS_HEISENBERG, REFERENCE_POINTS_XY,
};
use crate::propagate::DecoherenceParams;
use crate::pulse::{compile_cnot_schedule, g_for_gate_time, verify_sequence_identity, PulseError};
use clap::{Parser, Subcommand};
use std::ffi::OsString;
use std::path::{Path, PathBuf};

#[derive(Parser)]
#[command(
    name = "cnotsim",
    about = "Pulse-level CNOT simulator and optimizer for two weakly coupled qubits",
    version
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Optimal-fidelity curve over gate times for one coupling tensor
    Curve {
        /// heisenberg | xy | ising | @tensor.json
        #[arg(long)]
        coupling: String,
        /// Amplitude-damping T1 in ns on both qubits; omit for a closed system
        #[arg(long)]
        t1_ns: Option<f64>,
        /// Comma-separated gate times in ns (default: the 15-point reference grid)
        #[arg(long)]
        times: Option<String>,
        /// Smallest drive amplitude in MHz
        #[arg(long, default_value_t = 50.0)]
        omega_min: f64,
        /// Largest drive amplitude in MHz
        #[arg(long, default_value_t = 500.0)]
        omega_max: f64,
        /// Drive-amplitude grid step in MHz
        #[arg(long, default_value_t = 10.0)]
        omega_step: f64,
        /// Output CSV path; a .meta.json sidecar is written next to it
        #[arg(long)]
        out: PathBuf,
    },
    /// Curves for random tensors at fixed eta, plus their pointwise mean
    Ensemble {
        /// Target coupling strength eta in (0, sqrt(2)]
        #[arg(long)]
        eta: f64,
        #[arg(long, default_value_t = 20)]
        samples: u32,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// Output directory for sample_NN.csv, mean.csv and meta.json
        #[arg(long)]
        out: PathBuf,
    },
    /// Reference grids: 2 = Heisenberg, 3 = XY, 4 = Heisenberg with 500 ns T1
    Tables {
        #[arg(long)]
        which: u8,
        #[arg(long)]
        out: PathBuf,
    },
    /// Coupling strength eta of a tensor
    Eta {
        #[arg(long)]
        coupling: String,
    },
    /// Monte Carlo mean of eta over unconstrained random tensors
    EtaMean {
        #[arg(long, default_value_t = 1_000_000)]
        samples: u64,
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
    /// Check that the compiled sequence composes to CNOT exactly
    VerifyIdentity {
        #[arg(long)]
        coupling: String,
        /// Drive amplitude in MHz (the identity holds for any value)
        #[arg(long, default_value_t = 430.0)]
        omega: f64,
    },
    /// Print the compiled segment list for one gate time
    DumpSchedule {
        #[arg(long)]
        coupling: String,
        /// Drive amplitude in MHz
        #[arg(long)]
        omega: f64,
        /// Total gate time in ns
        #[arg(long)]
        t_gate: f64,
    },
}

#[derive(Debug)]
struct Failure {
    code: i32,
    msg: String,
}

impl Failure {
    fn new(code: i32, msg: impl Into<String>) -> Failure {
        Failure { code, msg: msg.into() }
    }
}

impl From<OptimizeError> for Failure {
    fn from(e: OptimizeError) -> Failure {
        let code = match &e {
            OptimizeError::ZeroEta => 2,
            OptimizeError::NoFeasibleOmega { .. } => 3,
            _ => 1,
        };
        Failure::new(code, e.to_string())
    }
}

impl From<PulseError> for Failure {
    fn from(e: PulseError) -> Failure {
        let code = match &e {
            PulseError::ZeroEta => 2,
            PulseError::GateTimeTooShort { .. } => 3,
        };
        Failure::new(code, e.to_string())
    }
}

impl From<ModelError> for Failure {
    fn from(e: ModelError) -> Failure {
        Failure::new(1, e.to_string())
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Failure {
        Failure::new(1, e.to_string())
    }
}

/// Parses argv, dispatches, and returns the process exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            // --help and --version land here with non-error status.
            let failed = e.use_stderr();
            let _ = e.print();
            return if failed { 1 } else { 0 };
        }
    };
    match dispatch(cli.cmd) {
        Ok(()) => 0,
        Err(f) => {
            eprintln!("error: {}", f.msg);
            f.code
        }
    }
}

fn dispatch(cmd: Cmd) -> Result<(), Failure> {
    match cmd {
        Cmd::Curve { coupling, t1_ns, times, omega_min, omega_max, omega_step, out } => {
            run_curve(&coupling, t1_ns, times.as_deref(), omega_min, omega_max, omega_step, &out)
        }
        Cmd::Ensemble { eta, samples, seed, out } => run_ensemble(eta, samples, seed, &out),
        Cmd::Tables { which, out } => run_tables(which, &out),
        Cmd::Eta { coupling } => {
            let (c, _) = parse_coupling(&coupling)?;
            println!("{:.6}", c.eta());
            Ok(())
        }
        Cmd::EtaMean { samples, seed } => {
            if samples == 0 {
                return Err(Failure::new(1, "--samples must be positive"));
            }
            let (mean, stderr) = crate::model::mean_eta_unconstrained(samples, seed);
            println!("{mean:.6} +/- {stderr:.6}");
            Ok(())
        }
        Cmd::VerifyIdentity { coupling, omega } => {
            let (c, _) = parse_coupling(&coupling)?;
            let f = verify_sequence_identity(&c, angular_from_mhz(omega))?;
            println!("{f:.12}");
            Ok(())
        }
        Cmd::DumpSchedule { coupling, omega, t_gate } => {
            let (c, _) = parse_coupling(&coupling)?;
            let om = angular_from_mhz(omega);
            let g = g_for_gate_time(&c, seconds_from_ns(t_gate), om)?;
            let ct = c.with_g(g)?;
            let sched = compile_cnot_schedule(&ct, om)?;
            print!("{}", sched.describe(&DeviceParams::default()));
            Ok(())
        }
    }
}

/// Named canonical tensor (placeholder scale; sweeps force g per point) or a
/// JSON file via `@path`.
fn parse_coupling(spec: &str) -> Result<(CouplingTensor, String), Failure> {
    let placeholder_g = angular_from_mhz(10.0);
    let form = match spec {
        "heisenberg" => Some(CanonicalForm::Heisenberg),
        "xy" => Some(CanonicalForm::Xy),
        "ising" => Some(CanonicalForm::Ising),
        _ => None,
    };
    if let Some(form) = form {
        let c = CouplingTensor::from_canonical(form, placeholder_g)
            .expect("canonical tensors are valid");
        return Ok((c, spec.to_string()));
    }
    if let Some(path) = spec.strip_prefix('@') {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Failure::new(1, format!("--coupling {spec}: {e}")))?;
        let c: CouplingTensor = serde_json::from_str(&text)
            .map_err(|e| Failure::new(1, format!("--coupling {spec}: {e}")))?;
        return Ok((c, spec.to_string()));
    }
    Err(Failure::new(
        1,
        format!("--coupling must be heisenberg, xy, ising or @file, got {spec:?}"),
    ))
}

fn parse_times(spec: &str) -> Result<Vec<f64>, Failure> {
    let mut times = Vec::new();
    for part in spec.split(',') {
        let t_ns: f64 = part
            .trim()
            .parse()
            .map_err(|_| Failure::new(1, format!("--times: {part:?} is not a number")))?;
        if !(t_ns.is_finite() && t_ns > 0.0) {
            return Err(Failure::new(1, format!("--times: {t_ns} ns is not positive")));
        }
        let t = seconds_from_ns(t_ns);
        if times.last().is_some_and(|&prev| t <= prev) {
            return Err(Failure::new(1, "--times must be strictly increasing"));
        }
        times.push(t);
    }
    Ok(times)
}

fn validated_grid(min: f64, max: f64, step: f64) -> Result<Vec<f64>, Failure> {
    if !(min.is_finite() && min > 0.0) {
        return Err(Failure::new(1, "--omega-min must be positive"));
    }
    if !(max.is_finite() && max >= min) {
        return Err(Failure::new(1, "--omega-max must be at least --omega-min"));
    }
    if !(step.is_finite() && step > 0.0) {
        return Err(Failure::new(1, "--omega-step must be positive"));
    }
    Ok(omega_grid_mhz(min, max, step))
}

fn device_json(d: &DeviceParams) -> serde_json::Value {
    serde_json::json!({
        "eps_tuned_ghz": d.eps_tuned / (TWO_PI * 1.0e9),
        "eps_detuned_q2_ghz": d.eps_detuned_q2 / (TWO_PI * 1.0e9),
        "omega_min_mhz": mhz_from_angular(d.omega_min),
        "omega_max_mhz": mhz_from_angular(d.omega_max),
        "g_min_mhz": mhz_from_angular(d.g_min),
        "g_max_mhz": mhz_from_angular(d.g_max),
    })
}

fn sweep_json(cfg: &SweepConfig) -> serde_json::Value {
    serde_json::json!({
        "times_ns": cfg.times.iter().map(|&t| ns_from_seconds(t)).collect::<Vec<_>>(),
        "omega_grid_mhz": cfg.omega_grid.iter().map(|&w| mhz_from_angular(w)).collect::<Vec<_>>(),
        "t1_ns": if cfg.decoherence.t1.is_finite() {
            Some(ns_from_seconds(cfg.decoherence.t1))
        } else {
            None
        },
        "device": device_json(&cfg.device),
    })
}

fn write_file(path: &Path, contents: &str) -> Result<(), Failure> {
    std::fs::write(path, contents)
        .map_err(|e| Failure::new(1, format!("writing {}: {e}", path.display())))
}

fn meta_path(out: &Path) -> PathBuf {
    let mut name = out.file_name().unwrap_or_default().to_os_string();
    name.push(".meta.json");
    out.with_file_name(name)
}

fn run_curve(
    coupling: &str,
    t1_ns: Option<f64>,
    times: Option<&str>,
    omega_min: f64,
    omega_max: f64,
    omega_step: f64,
    out: &Path,
) -> Result<(), Failure> {
    let (c, coupling_name) = parse_coupling(coupling)?;
    if let Some(t1) = t1_ns {
        if !(t1.is_finite() && t1 > 0.0) {
            return Err(Failure::new(1, "--t1-ns must be positive"));
        }
    }
    let mut cfg = SweepConfig::default();
    if let Some(times) = times {
        cfg.times = parse_times(times)?;
    }
    cfg.omega_grid = validated_grid(omega_min, omega_max, omega_step)?;
    if let Some(t1) = t1_ns {
        cfg.decoherence = DecoherenceParams::t1_ns(t1);
    }
    let curve = fidelity_curve(&c, &cfg)?;
    write_file(out, &curve_to_csv(&curve))?;
    let meta = serde_json::json!({
        "command": "curve",
        "coupling": coupling_name,
        "tensor": c,
        "eta": c.eta(),
        "sweep": sweep_json(&cfg),
    });
    write_file(&meta_path(out), &format!("{:#}\n", meta))?;
    println!("wrote {} ({} points)", out.display(), curve.points.len());
    Ok(())
}

fn run_tables(which: u8, out: &Path) -> Result<(), Failure> {
    let (form, t1_ns, name, points): (_, _, _, &[(f64, f64)]) = match which {
        2 => (CanonicalForm::Heisenberg, None, "heisenberg", &REFERENCE_POINTS_HEISENBERG),
        3 => (CanonicalForm::Xy, None, "xy", &REFERENCE_POINTS_XY),
        4 => (CanonicalForm::Heisenberg, Some(500.0), "heisenberg", &REFERENCE_POINTS_DAMPED),
        _ => return Err(Failure::new(1, "--which must be 2, 3 or 4")),
    };
    let c = CouplingTensor::from_canonical(form, angular_from_mhz(10.0))
        .expect("canonical tensors are valid");
    let mut cfg = SweepConfig::default();
    if let Some(t1) = t1_ns {
        cfg.decoherence = DecoherenceParams::t1_ns(t1);
    }
    let curve = evaluate_at_operating_points(&c, points, &cfg)?;
    write_file(out, &curve_to_csv(&curve))?;
    let meta = serde_json::json!({
        "command": "tables",
        "which": which,
        "coupling": name,
        "tensor": c,
        "eta": c.eta(),
        "operating_points": points.iter().map(|&(t, nu)| serde_json::json!([t, nu])).collect::<Vec<_>>(),
        "sweep": sweep_json(&cfg),
    });
    write_file(&meta_path(out), &format!("{:#}\n", meta))?;
    println!("wrote {} ({} points)", out.display(), curve.points.len());
    Ok(())
}

fn run_ensemble(eta: f64, samples: u32, seed: u64, out: &Path) -> Result<(), Failure> {
    if !(eta.is_finite() && eta > 0.0) {
        return Err(Failure::new(2, "--eta must be positive; eta = 0 cannot entangle"));
    }
    if eta > 2.0f64.sqrt() {
        return Err(Failure::new(1, "--eta exceeds sqrt(2), the largest reachable value"));
    }
    if samples == 0 {
        return Err(Failure::new(1, "--samples must be positive"));
    }
    let cfg = SweepConfig::default();
    let ens = EnsembleConfig::new(eta, samples, seed);
    let result = ensemble_curves(&ens, &cfg)?;
    std::fs::create_dir_all(out)
        .map_err(|e| Failure::new(1, format!("creating {}: {e}", out.display())))?;
    for (i, curve) in result.curves.iter().enumerate() {
        write_file(&out.join(format!("sample_{i:02}.csv")), &curve_to_csv(curve))?;
    }
    write_file(&out.join("mean.csv"), &mean_to_csv(&result.mean))?;
    let meta = serde_json::json!({
        "command": "ensemble",
        "target_eta": eta,
        "eta_tol": ens.eta_tol,
        "samples": samples,
        "seed": seed,
        "sample_etas": result.tensors.iter().map(|t| t.eta()).collect::<Vec<_>>(),
        "excluded_points": result.excluded,
        "sweep": sweep_json(&cfg),
    });
    write_file(&out.join("meta.json"), &format!("{:#}\n", meta))?;
    println!("wrote {} ({} samples)", out.display(), result.curves.len());
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn coupling_names_parse() {
        assert_eq!(parse_coupling("heisenberg").unwrap().0.eta(), 1.0);
        assert_eq!(parse_coupling("xy").unwrap().0.eta(), 1.0);
        assert_eq!(parse_coupling("ising").unwrap().0.eta(), 0.0);
        assert!(parse_coupling("bogus").is_err());
        assert!(parse_coupling("@/nonexistent/tensor.json").is_err());
    }

    #[test]
    fn times_validation() {
        let t = parse_times("10,11.25,15").unwrap();
        assert_eq!(t.len(), 3);
        assert!((t[1] - seconds_from_ns(11.25)).abs() < 1e-18);
        assert!(parse_times("10,9").is_err());
        assert!(parse_times("10,abc").is_err());
        assert!(parse_times("-1").is_err());
    }

    #[test]
    fn grid_validation() {
        let g = validated_grid(50.0, 500.0, 10.0).unwrap();
        assert_eq!(g.len(), 46);
        assert!((mhz_from_angular(g[0]) - 50.0).abs() < 1e-9);
        assert!((mhz_from_angular(*g.last().unwrap()) - 500.0).abs() < 1e-9);
        assert!(validated_grid(0.0, 500.0, 10.0).is_err());
        assert!(validated_grid(50.0, 40.0, 10.0).is_err());
        assert!(validated_grid(50.0, 500.0, 0.0).is_err());
    }

    #[test]
    fn meta_path_appends_suffix() {
        assert_eq!(
            meta_path(Path::new("/tmp/x/curve.csv")),
            PathBuf::from("/tmp/x/curve.csv.meta.json")
        );
    }

    #[test]
    fn help_succeeds_and_bad_flags_fail() {
        assert_eq!(run(["cnotsim", "--help"]), 0);
        assert_eq!(run(["cnotsim", "eta"]), 1); // missing --coupling
        assert_eq!(run(["cnotsim", "tables", "--which", "7", "--out", "/dev/null"]), 1);
    }

    #[test]
    fn eta_command_exit_codes() {
        assert_eq!(run(["cnotsim", "eta", "--coupling", "heisenberg"]), 0);
        assert_eq!(run(["cnotsim", "verify-identity", "--coupling", "ising"]), 2);
    }
}
