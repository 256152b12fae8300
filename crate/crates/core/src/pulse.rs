//! CNOT pulse schedule: the fixed sequence of single-qubit rotations and
//! interaction windows that composes to a CNOT for any coupling tensor with a
//! nonzero XY component, plus the time-budget algebra relating gate time,
//! drive amplitude and coupling strength.
//!
//! Drive segments act in the frame rotating at each qubit's own frequency,
//! where a resonant pulse of phase phi generates (Omega/2)(cos(phi) sigma_x -
//! sin(phi) sigma_y). Entangle windows evolve under the effective interaction
//! alone for one eighth of the flip-flop period, each contributing a quarter
//! of the iSWAP-like rotation the sequence needs.

use crate::model::{derive, ns_from_seconds, CouplingTensor, DerivedCoupling, DeviceParams};
use crate::qmath::{c, cr, expm_hermitian_generator, id2, kron2, pauli_x, pauli_y, Op2, Op4};
use std::f64::consts::PI;
use std::fmt::Write as _;

/// Pulse phases selecting the rotation axis of a resonant drive.
pub const PHASE_PLUS_X: f64 = 0.0;
pub const PHASE_MINUS_X: f64 = PI;
pub const PHASE_PLUS_Y: f64 = 3.0 * PI / 2.0;
pub const PHASE_MINUS_Y: f64 = PI / 2.0;

#[derive(Debug, thiserror::Error)]
pub enum PulseError {
    #[error("coupling tensor has no XY component (eta = 0); the sequence cannot entangle")]
    ZeroEta,
    #[error(
        "gate time {t_gate_ns:.4} ns is not longer than the drive time {drive_ns:.4} ns; \
         no interaction window remains"
    )]
    GateTimeTooShort { t_gate_ns: f64, drive_ns: f64 },
}

/// One resonant microwave pulse on one qubit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DrivePulse {
    pub phase: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SegmentKind {
    /// Simultaneous resonant pulses; `pulses[i]` is the drive on qubit i+1,
    /// None when that qubit idles. Qubit 2 stays detuned.
    Drive { pulses: [Option<DrivePulse>; 2] },
    /// Both qubits on resonance, drives off, interaction active.
    Entangle,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Segment {
    pub kind: SegmentKind,
    /// Seconds; zero is allowed (compensation pulses vanish when phi = 0).
    pub duration: f64,
}

impl Segment {
    fn drive1(phase: f64, duration: f64) -> Segment {
        Segment {
            kind: SegmentKind::Drive { pulses: [Some(DrivePulse { phase }), None] },
            duration,
        }
    }

    fn drive2(phase: f64, duration: f64) -> Segment {
        Segment {
            kind: SegmentKind::Drive { pulses: [None, Some(DrivePulse { phase })] },
            duration,
        }
    }

    fn drive_both(phase1: f64, phase2: f64, duration: f64) -> Segment {
        Segment {
            kind: SegmentKind::Drive {
                pulses: [Some(DrivePulse { phase: phase1 }), Some(DrivePulse { phase: phase2 })],
            },
            duration,
        }
    }
}

/// Compiled CNOT sequence for one tensor and drive amplitude.
#[derive(Debug, Clone, PartialEq)]
pub struct PulseSchedule {
    pub segments: Vec<Segment>,
    /// Drive amplitude Omega (angular), shared by every pulse.
    pub omega: f64,
    /// Seconds; always equals `gate_time(g, eta, phi, omega)`.
    pub total_time: f64,
    pub derived: DerivedCoupling,
}

/// Total single-qubit rotation angle the sequence spends on drives.
pub fn total_drive_angle(phi: f64) -> f64 {
    3.0 * PI + 2.0 * phi.abs()
}

/// Gate time for a coupling of scale `g` (angular) and strength `eta`:
/// two interaction windows of pi/(8 g eta) plus the drive budget at `omega`.
pub fn gate_time(g: f64, eta: f64, phi: f64, omega: f64) -> f64 {
    PI / (4.0 * g * eta) + total_drive_angle(phi) / omega
}

/// Inverts `gate_time` for `g`: the coupling scale that makes the sequence
/// finish in exactly `t_gate` seconds at drive amplitude `omega`.
pub fn g_for_gate_time(c: &CouplingTensor, t_gate: f64, omega: f64) -> Result<f64, PulseError> {
    let d = derive(c);
    if d.eta == 0.0 {
        return Err(PulseError::ZeroEta);
    }
    let drive = total_drive_angle(d.phi) / omega;
    if t_gate <= drive {
        return Err(PulseError::GateTimeTooShort {
            t_gate_ns: ns_from_seconds(t_gate),
            drive_ns: ns_from_seconds(drive),
        });
    }
    Ok(PI / (4.0 * d.eta * (t_gate - drive)))
}

/// The CNOT sequence (control = qubit 1), in execution order:
///   1. Ry(pi/2) on 1 together with Rx(-pi/2) on 2
///   2. Ry(phi) on 2 (compensates the antisymmetric part of the coupling)
///   3. Rx(pi/2) on 2
///   4. interaction window
///   5. Rx(pi) on 1 (echo between the two windows)
///   6. interaction window
///   7. Rx(pi/2) on 1 together with Rx(-pi/2) on 2
///   8. Ry(-phi) on 2
///   9. Ry(-pi/2) on 1
pub fn compile_cnot_schedule(c: &CouplingTensor, omega: f64) -> Result<PulseSchedule, PulseError> {
    let d = derive(c);
    let delta_t = d.delta_t.ok_or(PulseError::ZeroEta)?;
    let quarter = (PI / 2.0) / omega;
    let phi_dur = d.phi.abs() / omega;
    let (phi_plus, phi_minus) = if d.phi >= 0.0 {
        (PHASE_PLUS_Y, PHASE_MINUS_Y)
    } else {
        (PHASE_MINUS_Y, PHASE_PLUS_Y)
    };
    let segments = vec![
        Segment::drive_both(PHASE_PLUS_Y, PHASE_MINUS_X, quarter),
        Segment::drive2(phi_plus, phi_dur),
        Segment::drive2(PHASE_PLUS_X, quarter),
        Segment { kind: SegmentKind::Entangle, duration: delta_t },
        Segment::drive1(PHASE_PLUS_X, 2.0 * quarter),
        Segment { kind: SegmentKind::Entangle, duration: delta_t },
        Segment::drive_both(PHASE_PLUS_X, PHASE_MINUS_X, quarter),
        Segment::drive2(phi_minus, phi_dur),
        Segment::drive1(PHASE_MINUS_Y, quarter),
    ];
    let total_time = segments.iter().map(|s| s.duration).sum();
    Ok(PulseSchedule { segments, omega, total_time, derived: d })
}

impl PulseSchedule {
    /// Qubit 2 frequency during a segment: detuned while driving, on
    /// resonance inside interaction windows.
    pub fn eps2_for(&self, kind: &SegmentKind, device: &DeviceParams) -> f64 {
        match kind {
            SegmentKind::Drive { .. } => device.eps_detuned_q2,
            SegmentKind::Entangle => device.eps_tuned,
        }
    }

    /// Human-readable listing, one line per segment.
    pub fn describe(&self, device: &DeviceParams) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            "omega/2pi = {:.4} MHz, g/2pi = {:.4} MHz, eta = {:.4}, phi = {:.4} rad",
            crate::model::mhz_from_angular(self.omega),
            crate::model::mhz_from_angular(self.g_of_derived()),
            self.derived.eta,
            self.derived.phi,
        );
        for (i, s) in self.segments.iter().enumerate() {
            let eps2_ghz = self.eps2_for(&s.kind, device) / (crate::model::TWO_PI * 1.0e9);
            match &s.kind {
                SegmentKind::Drive { pulses } => {
                    let p = |q: &Option<DrivePulse>| match q {
                        Some(d) => format!("{:.4}", d.phase),
                        None => "off".to_string(),
                    };
                    let _ = writeln!(
                        out,
                        "{:>2}  drive     {:>9.4} ns  phase1 {:>7} phase2 {:>7}  eps2 {:.1} GHz",
                        i + 1,
                        ns_from_seconds(s.duration),
                        p(&pulses[0]),
                        p(&pulses[1]),
                        eps2_ghz,
                    );
                }
                SegmentKind::Entangle => {
                    let _ = writeln!(
                        out,
                        "{:>2}  entangle  {:>9.4} ns  phase1 {:>7} phase2 {:>7}  eps2 {:.1} GHz",
                        i + 1,
                        ns_from_seconds(s.duration),
                        "-",
                        "-",
                        eps2_ghz,
                    );
                }
            }
        }
        let _ = writeln!(out, "total {:.4} ns", ns_from_seconds(self.total_time));
        out
    }

    fn g_of_derived(&self) -> f64 {
        // g recovered from the derived quantities: sqrt(J^2+J'^2)/eta.
        if self.derived.eta > 0.0 {
            self.derived.j.hypot(self.derived.jprime) / self.derived.eta
        } else {
            0.0
        }
    }
}

/// CNOT with qubit 1 (left Kronecker factor) as control.
pub fn ideal_cnot() -> Op4 {
    let mut u = Op4::zeros();
    u[(0, 0)] = cr(1.0);
    u[(1, 1)] = cr(1.0);
    u[(2, 3)] = cr(1.0);
    u[(3, 2)] = cr(1.0);
    u
}

/// Closed-form rotation of a resonant pulse:
/// exp(-i (theta/2) (cos(phase) sigma_x - sin(phase) sigma_y)).
pub fn drive_rotation(phase: f64, theta: f64) -> Op2 {
    let half = theta / 2.0;
    let (s, co) = half.sin_cos();
    id2() * cr(co)
        + (pauli_x() * cr(phase.cos()) - pauli_y() * cr(phase.sin())) * c(0.0, -s)
}

/// Two-qubit unitary of one schedule segment in the idealized frame where
/// drives are exact rotations and interaction windows are exact exponentials
/// of the effective interaction.
pub fn segment_unitary_ideal(seg: &Segment, omega: f64, c: &CouplingTensor) -> Op4 {
    match &seg.kind {
        SegmentKind::Drive { pulses } => {
            let theta = omega * seg.duration;
            let u1 = pulses[0].map_or_else(id2, |p| drive_rotation(p.phase, theta));
            let u2 = pulses[1].map_or_else(id2, |p| drive_rotation(p.phase, theta));
            kron2(&u1, &u2)
        }
        SegmentKind::Entangle => {
            let h = crate::model::rwa_interaction(c);
            expm_hermitian_generator(&h, seg.duration)
                .expect("effective interaction is Hermitian by construction")
        }
    }
}

/// Composes the schedule with exact segment unitaries and returns the average
/// gate fidelity against CNOT. Equals 1 (to roundoff) for every tensor with
/// nonzero eta; this checks the sequence algebra, not the time evolution.
pub fn verify_sequence_identity(c: &CouplingTensor, omega: f64) -> Result<f64, PulseError> {
    let schedule = compile_cnot_schedule(c, omega)?;
    let mut u = Op4::identity();
    for seg in &schedule.segments {
        u = segment_unitary_ideal(seg, omega, c) * u;
    }
    Ok(crate::fidelity::average_fidelity_unitary(&u, &ideal_cnot()))
}
