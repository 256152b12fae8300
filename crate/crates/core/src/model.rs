//! Device and coupling model: hardware parameters, the dimensionless coupling
//! tensor, the quantities derived from it (effective XY couplings, entangler
//! duration, coupling strength eta), and the lab- and interaction-picture
//! Hamiltonians built from them.
//!
//! Internally every energy is an angular frequency (H/ħ, rad/s). Public
//! constructors and the JSON interchange format take plain frequencies
//! (E/h, MHz or GHz) because that is how device parameters are quoted.

use crate::qmath::{cr, kron2, on_qubit1, on_qubit2, pauli_x, pauli_y, pauli_z, Op2, Op4};
use rand::Rng;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

pub const TWO_PI: f64 = 2.0 * PI;

pub fn angular_from_mhz(nu_mhz: f64) -> f64 {
    TWO_PI * nu_mhz * 1.0e6
}

pub fn mhz_from_angular(w: f64) -> f64 {
    w / (TWO_PI * 1.0e6)
}

pub fn angular_from_ghz(nu_ghz: f64) -> f64 {
    TWO_PI * nu_ghz * 1.0e9
}

pub fn seconds_from_ns(t_ns: f64) -> f64 {
    t_ns * 1.0e-9
}

pub fn ns_from_seconds(t: f64) -> f64 {
    t * 1.0e9
}

#[derive(Debug, thiserror::Error)]
pub enum ModelError {
    #[error("coupling tensor entry ({row},{col}) is not finite")]
    NonFiniteEntry { row: usize, col: usize },
    #[error("coupling strength g must be positive and finite, got {g}")]
    InvalidG { g: f64 },
    #[error("no tensor with eta within {tol} of {target} found in {attempts} attempts")]
    SamplingFailed { target: f64, tol: f64, attempts: u64 },
}

/// Fixed hardware parameters: qubit frequencies, drive-amplitude range and
/// coupling-strength range. All fields are angular frequencies.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DeviceParams {
    /// Qubit frequency when tuned into resonance (both qubits).
    pub eps_tuned: f64,
    /// Qubit 2 frequency when detuned to suppress the interaction.
    pub eps_detuned_q2: f64,
    pub omega_min: f64,
    pub omega_max: f64,
    pub g_min: f64,
    pub g_max: f64,
}

impl Default for DeviceParams {
    fn default() -> Self {
        DeviceParams {
            eps_tuned: angular_from_ghz(10.0),
            eps_detuned_q2: angular_from_ghz(11.0),
            omega_min: angular_from_mhz(50.0),
            omega_max: angular_from_mhz(500.0),
            g_min: angular_from_mhz(1.0),
            g_max: angular_from_mhz(500.0),
        }
    }
}

impl DeviceParams {
    /// True when the strongest allowed drive is no longer a small fraction of
    /// the qubit splitting, i.e. when rotating-wave treatments degrade.
    pub fn drive_exceeds_perturbative_regime(&self) -> bool {
        self.omega_max / self.eps_tuned > 0.1
    }
}

/// Named canonical interaction symmetries.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CanonicalForm {
    Heisenberg,
    Xy,
    Ising,
}

/// Dimensionless 3x3 tensor for the named form, row index = Pauli on qubit 1,
/// column index = Pauli on qubit 2, order (x, y, z).
pub fn canonical_form(form: CanonicalForm) -> [[f64; 3]; 3] {
    let mut j = [[0.0; 3]; 3];
    match form {
        CanonicalForm::Heisenberg => {
            j[0][0] = 1.0;
            j[1][1] = 1.0;
            j[2][2] = 1.0;
        }
        CanonicalForm::Xy => {
            j[0][0] = 1.0;
            j[1][1] = 1.0;
        }
        CanonicalForm::Ising => {
            j[2][2] = 1.0;
        }
    }
    j
}

/// Two-qubit interaction g * sum_{mu,nu} J*_{mu,nu} sigma_mu (x) sigma_nu with
/// a dimensionless tensor J* and an overall angular-frequency scale g.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "TensorText", into = "TensorText")]
pub struct CouplingTensor {
    g: f64,
    jstar: [[f64; 3]; 3],
}

/// JSON interchange form; `g_mhz` is a plain frequency (E/h).
#[derive(Debug, Clone, Serialize, Deserialize)]
struct TensorText {
    g_mhz: f64,
    jstar: [[f64; 3]; 3],
}

impl TryFrom<TensorText> for CouplingTensor {
    type Error = ModelError;
    fn try_from(t: TensorText) -> Result<Self, ModelError> {
        CouplingTensor::new(angular_from_mhz(t.g_mhz), t.jstar)
    }
}

impl From<CouplingTensor> for TensorText {
    fn from(c: CouplingTensor) -> TensorText {
        TensorText { g_mhz: mhz_from_angular(c.g), jstar: c.jstar }
    }
}

impl CouplingTensor {
    pub fn new(g: f64, jstar: [[f64; 3]; 3]) -> Result<Self, ModelError> {
        if !(g.is_finite() && g > 0.0) {
            return Err(ModelError::InvalidG { g });
        }
        for (row, r) in jstar.iter().enumerate() {
            for (col, v) in r.iter().enumerate() {
                if !v.is_finite() {
                    return Err(ModelError::NonFiniteEntry { row, col });
                }
            }
        }
        Ok(CouplingTensor { g, jstar })
    }

    pub fn from_canonical(form: CanonicalForm, g: f64) -> Result<Self, ModelError> {
        CouplingTensor::new(g, canonical_form(form))
    }

    pub fn g(&self) -> f64 {
        self.g
    }

    pub fn jstar(&self) -> &[[f64; 3]; 3] {
        &self.jstar
    }

    /// Same tensor with the overall scale replaced.
    pub fn with_g(&self, g: f64) -> Result<Self, ModelError> {
        CouplingTensor::new(g, self.jstar)
    }

    pub fn eta(&self) -> f64 {
        eta_of(&self.jstar)
    }
}

/// Coupling strength of the tensor: magnitude of the rotating-frame XY part,
/// eta = sqrt(J^2 + J'^2) / g, which depends only on the dimensionless entries.
pub fn eta_of(jstar: &[[f64; 3]; 3]) -> f64 {
    let j = 0.5 * (jstar[0][0] + jstar[1][1]);
    let jp = 0.5 * (jstar[0][1] - jstar[1][0]);
    j.hypot(jp)
}

/// Quantities the pulse sequence needs, all computed from the tensor.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DerivedCoupling {
    /// Symmetric XY coupling J = g (J*xx + J*yy) / 2 (angular).
    pub j: f64,
    /// Antisymmetric XY coupling J' = g (J*xy - J*yx) / 2 (angular).
    pub jprime: f64,
    /// Ising coupling Jzz = g J*zz (angular).
    pub jzz: f64,
    /// Interaction phase phi = atan2(J', J), compensated by single-qubit
    /// rotations in the sequence.
    pub phi: f64,
    /// Dimensionless coupling strength sqrt(J^2 + J'^2) / g.
    pub eta: f64,
    /// Entangler duration pi / (8 sqrt(J^2 + J'^2)) in seconds; None when the
    /// XY part vanishes and no CNOT can be generated.
    pub delta_t: Option<f64>,
}

pub fn derive(c: &CouplingTensor) -> DerivedCoupling {
    let js = c.jstar();
    let j = c.g() * 0.5 * (js[0][0] + js[1][1]);
    let jp = c.g() * 0.5 * (js[0][1] - js[1][0]);
    let jzz = c.g() * js[2][2];
    let mag = j.hypot(jp);
    DerivedCoupling {
        j,
        jprime: jp,
        jzz,
        phi: if mag > 0.0 { jp.atan2(j) } else { 0.0 },
        eta: mag / c.g(),
        delta_t: if mag > 0.0 { Some(PI / (8.0 * mag)) } else { None },
    }
}

fn pauli(i: usize) -> Op2 {
    match i {
        0 => pauli_x(),
        1 => pauli_y(),
        _ => pauli_z(),
    }
}

/// Full interaction operator g sum_{mu,nu} J*_{mu,nu} sigma_mu (x) sigma_nu.
pub fn interaction_operator(c: &CouplingTensor) -> Op4 {
    let mut h = Op4::zeros();
    for mu in 0..3 {
        for nu in 0..3 {
            let w = c.g() * c.jstar()[mu][nu];
            if w != 0.0 {
                h += kron2(&pauli(mu), &pauli(nu)) * cr(w);
            }
        }
    }
    h
}

/// Effective interaction after dropping terms that average out on resonance:
/// J (XX + YY) + Jzz ZZ + J' (XY - YX).
pub fn rwa_interaction(c: &CouplingTensor) -> Op4 {
    let d = derive(c);
    let xx = kron2(&pauli_x(), &pauli_x());
    let yy = kron2(&pauli_y(), &pauli_y());
    let xy = kron2(&pauli_x(), &pauli_y());
    let yx = kron2(&pauli_y(), &pauli_x());
    let zz = kron2(&pauli_z(), &pauli_z());
    (xx + yy) * cr(d.j) + zz * cr(d.jzz) + (xy - yx) * cr(d.jprime)
}

/// One microwave drive line: amplitude and pulse phase. The carrier runs at
/// the qubit's current frequency; its accumulated phase enters separately.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DriveTerm {
    /// Drive amplitude Omega (angular).
    pub omega: f64,
    /// Pulse phase selecting the rotation axis.
    pub phase: f64,
}

/// Instantaneous lab-frame Hamiltonian
///   -(eps1/2) Z1 - (eps2/2) Z2
///   + sum_i Omega_i cos(theta_i + phase_i) X_i
///   + g sum J*_{mu,nu} sigma_mu (x) sigma_nu
/// where `thetas[i]` is the carrier phase eps_i * tau accumulated at the
/// evaluation time.
pub fn lab_hamiltonian(
    eps: [f64; 2],
    drives: [Option<DriveTerm>; 2],
    thetas: [f64; 2],
    c: &CouplingTensor,
) -> Op4 {
    let mut h = on_qubit1(&pauli_z()) * cr(-0.5 * eps[0]) + on_qubit2(&pauli_z()) * cr(-0.5 * eps[1]);
    if let Some(d) = drives[0] {
        h += on_qubit1(&pauli_x()) * cr(d.omega * (thetas[0] + d.phase).cos());
    }
    if let Some(d) = drives[1] {
        h += on_qubit2(&pauli_x()) * cr(d.omega * (thetas[1] + d.phase).cos());
    }
    h + interaction_operator(c)
}

/// One uniform draw of the nine dimensionless entries in [-1, 1], rescaled so
/// the largest magnitude is exactly 1.
fn draw_normalized_jstar<R: Rng>(rng: &mut R) -> [[f64; 3]; 3] {
    loop {
        let mut js = [[0.0f64; 3]; 3];
        let mut max = 0.0f64;
        for row in js.iter_mut() {
            for v in row.iter_mut() {
                *v = rng.gen_range(-1.0..=1.0);
                max = max.max((*v).abs());
            }
        }
        if max == 0.0 {
            continue;
        }
        for row in js.iter_mut() {
            for v in row.iter_mut() {
                *v /= max;
            }
        }
        return js;
    }
}

/// Rejection-samples a normalized random tensor whose eta lies within `tol`
/// of `target_eta`. The scale is set to 1 rad/s; callers replace it with the
/// value required by their gate time.
pub fn sample_random_tensor<R: Rng>(
    rng: &mut R,
    target_eta: f64,
    tol: f64,
) -> Result<CouplingTensor, ModelError> {
    const MAX_ATTEMPTS: u64 = 10_000_000;
    for _ in 0..MAX_ATTEMPTS {
        let js = draw_normalized_jstar(rng);
        if (eta_of(&js) - target_eta).abs() <= tol {
            return Ok(CouplingTensor { g: 1.0, jstar: js });
        }
    }
    Err(ModelError::SamplingFailed { target: target_eta, tol, attempts: MAX_ATTEMPTS })
}

/// Monte Carlo mean and standard error of eta over unnormalized tensors with
/// entries uniform in [-1, 1].
pub fn mean_eta_unconstrained(samples: u64, seed: u64) -> (f64, f64) {
    use rand::SeedableRng;
    let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(seed);
    let mut sum = 0.0;
    let mut sumsq = 0.0;
    for _ in 0..samples {
        let mut js = [[0.0; 3]; 3];
        for row in js.iter_mut() {
            for v in row.iter_mut() {
                *v = rng.gen_range(-1.0..=1.0);
            }
        }
        let e = eta_of(&js);
        sum += e;
        sumsq += e * e;
    }
    let n = samples as f64;
    let mean = sum / n;
    let var = (sumsq / n - mean * mean).max(0.0);
    (mean, (var / n).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qmath::{frobenius_distance, max_abs};
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha12Rng;

    #[test]
    fn canonical_forms() {
        let h = canonical_form(CanonicalForm::Heisenberg);
        for i in 0..3 {
            for j in 0..3 {
                assert_eq!(h[i][j], if i == j { 1.0 } else { 0.0 });
            }
        }
        let ising = canonical_form(CanonicalForm::Ising);
        assert_eq!(ising.iter().flatten().filter(|v| **v != 0.0).count(), 1);
        assert_eq!(ising[2][2], 1.0);
        let xy = canonical_form(CanonicalForm::Xy);
        assert_eq!(xy[0][0], 1.0);
        assert_eq!(xy[1][1], 1.0);
        assert_eq!(xy[2][2], 0.0);
        assert_eq!(xy.iter().flatten().filter(|v| **v != 0.0).count(), 2);
    }

    #[test]
    fn derive_heisenberg_example() {
        let g = angular_from_mhz(10.8586);
        let c = CouplingTensor::from_canonical(CanonicalForm::Heisenberg, g).unwrap();
        let d = derive(&c);
        assert!((d.j - g).abs() < 1e-6);
        assert_eq!(d.jprime, 0.0);
        assert!((d.jzz - g).abs() < 1e-6);
        assert_eq!(d.phi, 0.0);
        assert!((d.eta - 1.0).abs() < 1e-15);
        // Entangler duration 1/(16 g/h) = 5.7558 ns for g/h = 10.8586 MHz.
        let dt_ns = ns_from_seconds(d.delta_t.unwrap());
        assert!((dt_ns - 5.7558).abs() < 5e-4, "dt = {dt_ns} ns");
    }

    #[test]
    fn derive_antisymmetric_example() {
        // J*xy = 1, J*yx = -1, everything else 0: pure J' coupling, phi = pi/2.
        let mut js = [[0.0; 3]; 3];
        js[0][1] = 1.0;
        js[1][0] = -1.0;
        let g = angular_from_mhz(5.0);
        let c = CouplingTensor::new(g, js).unwrap();
        let d = derive(&c);
        assert_eq!(d.j, 0.0);
        assert!((d.jprime - g).abs() < 1e-9);
        assert!((d.phi - PI / 2.0).abs() < 1e-15);
        assert!((d.eta - 1.0).abs() < 1e-15);
    }

    #[test]
    fn derive_ising_has_no_entangler() {
        let c = CouplingTensor::from_canonical(CanonicalForm::Ising, angular_from_mhz(10.0)).unwrap();
        let d = derive(&c);
        assert_eq!(d.eta, 0.0);
        assert!(d.delta_t.is_none());
        assert!((d.jzz - angular_from_mhz(10.0)).abs() < 1e-6);
    }

    #[test]
    fn rwa_interaction_matches_manual_matrix() {
        // Heisenberg: J(XX+YY) + Jzz ZZ has the flip-flop block
        // [[Jzz, 0, 0, 0], [0, -Jzz, 2J, 0], [0, 2J, -Jzz, 0], [0, 0, 0, Jzz]].
        let g = 1.0;
        let c = CouplingTensor::from_canonical(CanonicalForm::Heisenberg, g).unwrap();
        let h = rwa_interaction(&c);
        let mut want = Op4::zeros();
        want[(0, 0)] = cr(1.0);
        want[(3, 3)] = cr(1.0);
        want[(1, 1)] = cr(-1.0);
        want[(2, 2)] = cr(-1.0);
        want[(1, 2)] = cr(2.0);
        want[(2, 1)] = cr(2.0);
        assert!(frobenius_distance(&h, &want) < 1e-15);
    }

    #[test]
    fn rwa_drops_non_secular_entries() {
        // A tensor with only J*xz = 1 has no XY or ZZ component.
        let mut js = [[0.0; 3]; 3];
        js[0][2] = 1.0;
        let c = CouplingTensor::new(1.0, js).unwrap();
        assert!(max_abs(&rwa_interaction(&c)) == 0.0);
        let d = derive(&c);
        assert_eq!(d.eta, 0.0);
        // The full interaction operator keeps it.
        assert!(max_abs(&interaction_operator(&c)) == 1.0);
    }

    #[test]
    fn lab_hamiltonian_diagonal_and_drive() {
        let eps = [angular_from_ghz(10.0), angular_from_ghz(11.0)];
        let c = CouplingTensor::from_canonical(CanonicalForm::Heisenberg, angular_from_mhz(10.0)).unwrap();
        let h0 = lab_hamiltonian(eps, [None, None], [0.0, 0.0], &c);
        // |00> energy: -(eps1+eps2)/2 + g.
        let want00 = -(eps[0] + eps[1]) / 2.0 + c.g();
        assert!((h0[(0, 0)].re - want00).abs() < 1.0);
        // Adding a drive at theta = 0 puts Omega on the X of qubit 1.
        let om = angular_from_mhz(430.0);
        let h1 = lab_hamiltonian(
            eps,
            [Some(DriveTerm { omega: om, phase: 0.0 }), None],
            [0.0, 0.0],
            &c,
        );
        assert!(((h1 - h0)[(0, 2)].re - om).abs() < 1e-6);
        // At carrier phase pi/2 the cosine vanishes to machine precision
        // relative to the drive amplitude.
        let h2 = lab_hamiltonian(
            eps,
            [Some(DriveTerm { omega: om, phase: 0.0 }), None],
            [PI / 2.0, 0.0],
            &c,
        );
        assert!(max_abs(&(h2 - h0)) / om < 1e-15);
    }

    #[test]
    fn sampled_tensors_hit_target_eta_and_are_normalized() {
        let mut rng = ChaCha12Rng::seed_from_u64(11);
        for &target in &[0.1, 0.5, 1.0] {
            let c = sample_random_tensor(&mut rng, target, 0.01).unwrap();
            assert!((c.eta() - target).abs() <= 0.01);
            let max = c.jstar().iter().flatten().fold(0.0f64, |m, v| m.max(v.abs()));
            assert!((max - 1.0).abs() < 1e-12);
            assert_eq!(c.g(), 1.0);
        }
    }

    #[test]
    fn sampling_impossible_target_fails_cleanly() {
        // eta cannot exceed sqrt(2); keep the tolerance tiny so rejection
        // never terminates by luck.
        let mut rng = ChaCha12Rng::seed_from_u64(3);
        let c = sample_random_tensor(&mut rng, 5.0, 1e-12);
        assert!(matches!(c, Err(ModelError::SamplingFailed { .. })));
    }

    #[test]
    fn mean_eta_small_sample_is_reproducible() {
        let (m1, s1) = mean_eta_unconstrained(20_000, 99);
        let (m2, _) = mean_eta_unconstrained(20_000, 99);
        assert_eq!(m1, m2);
        assert!((m1 - 0.52).abs() < 0.01, "mean {m1}");
        assert!(s1 > 0.0 && s1 < 0.01);
    }

    #[test]
    fn json_round_trip() {
        let text = r#"{"g_mhz": 10.8586, "jstar": [[1,0,0],[0,1,0],[0,0,1]]}"#;
        let c: CouplingTensor = serde_json::from_str(text).unwrap();
        assert!((mhz_from_angular(c.g()) - 10.8586).abs() < 1e-9);
        assert_eq!(c.eta(), 1.0);
        let back = serde_json::to_string(&c).unwrap();
        let c2: CouplingTensor = serde_json::from_str(&back).unwrap();
        assert_eq!(c, c2);
    }

    #[test]
    fn device_defaults() {
        let d = DeviceParams::default();
        assert!((d.eps_tuned - angular_from_ghz(10.0)).abs() < 1.0);
        assert!((d.eps_detuned_q2 - angular_from_ghz(11.0)).abs() < 1.0);
        assert!((d.omega_max - angular_from_mhz(500.0)).abs() < 1.0);
        assert!((d.g_min - angular_from_mhz(1.0)).abs() < 1.0);
        // 500 MHz drive on a 10 GHz qubit is 5 percent, still perturbative.
        assert!(!d.drive_exceeds_perturbative_regime());
    }

    proptest! {
        #[test]
        fn eta_invariant_under_scale(seed in 0u64..500, gm in 1.0f64..400.0) {
            let mut rng = ChaCha12Rng::seed_from_u64(seed);
            let mut js = [[0.0; 3]; 3];
            for row in js.iter_mut() { for v in row.iter_mut() { *v = rng.gen_range(-1.0..=1.0); } }
            let c1 = CouplingTensor::new(1.0, js).unwrap();
            let c2 = c1.with_g(angular_from_mhz(gm)).unwrap();
            prop_assert!((c1.eta() - c2.eta()).abs() < 1e-12);
            let d2 = derive(&c2);
            prop_assert!((d2.eta - c2.eta()).abs() < 1e-12);
        }

        #[test]
        fn eta_stays_in_range(seed in 0u64..500) {
            let mut rng = ChaCha12Rng::seed_from_u64(seed);
            let mut js = [[0.0; 3]; 3];
            for row in js.iter_mut() { for v in row.iter_mut() { *v = rng.gen_range(-1.0..=1.0); } }
            let e = eta_of(&js);
            prop_assert!((0.0..=2.0f64.sqrt()).contains(&e));
        }

        #[test]
        fn rwa_is_hermitian_and_commutes_with_total_z(seed in 0u64..200) {
            let mut rng = ChaCha12Rng::seed_from_u64(seed);
            let mut js = [[0.0; 3]; 3];
            for row in js.iter_mut() { for v in row.iter_mut() { *v = rng.gen_range(-1.0..=1.0); } }
            let c = CouplingTensor::new(angular_from_mhz(rng.gen_range(1.0..100.0)), js).unwrap();
            let h = rwa_interaction(&c);
            prop_assert!(crate::qmath::hermiticity_defect(&h) < 1e-6 * (1.0 + max_abs(&h)));
            let z = on_qubit1(&pauli_z()) + on_qubit2(&pauli_z());
            prop_assert!(max_abs(&(h * z - z * h)) < 1e-9 * (1.0 + max_abs(&h)));
        }
    }
}
