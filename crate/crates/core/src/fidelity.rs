//! Gate fidelity measures: the closed-form average fidelity over Haar-random
//! input states for a pair of unitaries, a Monte Carlo estimator of the same
//! quantity used as an independent cross-check, and the process-fidelity
//! generalization for trace-preserving channels.

use crate::qmath::{c, kron4, unitarity_defect, Op4, Op16, C};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

/// Average fidelity of `u` against `u_target` over Haar-random states:
/// (4 + |Tr(U_target^dag U)|^2) / 20. Symmetric, global-phase invariant, and
/// in [0.2, 1] for 4x4 unitaries.
pub fn average_fidelity_unitary(u_target: &Op4, u: &Op4) -> f64 {
    for (name, m) in [("target", u_target), ("candidate", u)] {
        let defect = unitarity_defect(m);
        assert!(
            defect <= 1e-6,
            "{name} operator is not unitary (defect {defect:.3e}); decoherent results \
             need the channel fidelity"
        );
    }
    let tr: C = (u_target.adjoint() * u).diagonal().iter().sum();
    (4.0 + tr.norm_sqr()) / 20.0
}

/// Monte Carlo estimate of the average state fidelity |<chi|U_target^dag U|chi>|^2
/// over Haar-random |chi>, with its standard error. Sampling is chunked with
/// one generator per chunk, so the result depends only on `seed` and
/// `samples`, not on thread count.
pub fn montecarlo_state_fidelity(
    u_target: &Op4,
    u: &Op4,
    samples: u64,
    seed: u64,
) -> (f64, f64) {
    assert!(samples >= 1_000, "need at least 1000 samples for a meaningful standard error");
    const CHUNK: u64 = 4096;
    let m = u_target.adjoint() * u;
    let chunks = samples.div_ceil(CHUNK);
    let partials: Vec<(f64, f64)> = (0..chunks)
        .into_par_iter()
        .map(|chunk| {
            let mut rng =
                ChaCha12Rng::seed_from_u64(seed.wrapping_add(chunk.wrapping_mul(0x9E3779B97F4A7C15)));
            let n = CHUNK.min(samples - chunk * CHUNK);
            let mut sum = 0.0;
            let mut sumsq = 0.0;
            for _ in 0..n {
                let mut chi = [C::default(); 4];
                let mut norm_sq = 0.0;
                for z in chi.iter_mut() {
                    let re: f64 = rng.sample(StandardNormal);
                    let im: f64 = rng.sample(StandardNormal);
                    *z = c(re, im);
                    norm_sq += z.norm_sqr();
                }
                // <chi|M|chi> / <chi|chi>.
                let mut amp = C::default();
                for r in 0..4 {
                    let mut row = C::default();
                    for k in 0..4 {
                        row += m[(r, k)] * chi[k];
                    }
                    amp += chi[r].conj() * row;
                }
                let f = amp.norm_sqr() / (norm_sq * norm_sq);
                sum += f;
                sumsq += f * f;
            }
            (sum, sumsq)
        })
        .collect();
    let (sum, sumsq) = partials.iter().fold((0.0, 0.0), |a, b| (a.0 + b.0, a.1 + b.1));
    let n = samples as f64;
    let mean = sum / n;
    let var = (sumsq / n - mean * mean).max(0.0);
    (mean, (var / n).sqrt())
}

/// Column-stacked superoperator of rho -> U rho U^dag, i.e. conj(U) (x) U
/// acting on vec(rho) with vec index r + 4c.
pub fn conjugation_superoperator(u: &Op4) -> Op16 {
    kron4(&u.conjugate(), u)
}

/// Process fidelity Re Tr(S_target^dag S) / 16 against the conjugation
/// superoperator of `u_target`.
pub fn process_fidelity(u_target: &Op4, s: &Op16) -> f64 {
    let st = conjugation_superoperator(u_target);
    let tr: C = (st.adjoint() * s).diagonal().iter().sum();
    tr.re / 16.0
}

/// Average fidelity of a trace-preserving channel against a target unitary:
/// (4 F_pro + 1) / 5. Reduces to `average_fidelity_unitary` when the channel
/// is a unitary conjugation.
pub fn average_fidelity_channel(u_target: &Op4, s: &Op16) -> f64 {
    let tp = crate::propagate::trace_preservation_defect(s);
    assert!(tp <= 1e-6, "channel is not trace preserving (defect {tp:.3e})");
    (4.0 * process_fidelity(u_target, s) + 1.0) / 5.0
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pulse::ideal_cnot;
    use crate::qmath::{cr, haar_random_unitary, id4, kron2, pauli_x, Op2};
    use proptest::prelude::*;
    use rand::Rng;

    #[test]
    fn identical_unitaries_give_one() {
        let mut rng = ChaCha12Rng::seed_from_u64(5);
        let u = haar_random_unitary(&mut rng);
        assert_eq!(average_fidelity_unitary(&u, &u), 1.0);
        let (mean, stderr) = montecarlo_state_fidelity(&u, &u, 2_000, 9);
        assert!((mean - 1.0).abs() < 1e-12);
        assert!(stderr < 1e-12);
    }

    #[test]
    fn global_phase_is_irrelevant() {
        let mut rng = ChaCha12Rng::seed_from_u64(6);
        let u = haar_random_unitary(&mut rng);
        for alpha in [0.3, 2.0, -1.1] {
            let v = u * C::from_polar(1.0, alpha);
            assert!((average_fidelity_unitary(&u, &v) - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn orthogonal_trace_gives_floor() {
        // (I (x) sigma_x) CNOT differs from CNOT by a traceless factor:
        // fidelity (4 + 0)/20 = 0.2.
        let cnot = ideal_cnot();
        let v = kron2(&Op2::identity(), &pauli_x()) * cnot;
        assert!((average_fidelity_unitary(&cnot, &v) - 0.2).abs() < 1e-12);
    }

    #[test]
    fn montecarlo_agrees_with_closed_form() {
        let mut rng = ChaCha12Rng::seed_from_u64(17);
        for _ in 0..3 {
            let a = haar_random_unitary(&mut rng);
            let b = haar_random_unitary(&mut rng);
            let exact = average_fidelity_unitary(&a, &b);
            let (mean, stderr) = montecarlo_state_fidelity(&a, &b, 100_000, 23);
            assert!(
                (mean - exact).abs() <= 3.0 * stderr,
                "mean {mean}, exact {exact}, stderr {stderr}"
            );
        }
    }

    #[test]
    fn montecarlo_is_deterministic_and_chunk_independent() {
        let mut rng = ChaCha12Rng::seed_from_u64(2);
        let a = haar_random_unitary(&mut rng);
        let b = haar_random_unitary(&mut rng);
        let r1 = montecarlo_state_fidelity(&a, &b, 10_000, 7);
        let r2 = montecarlo_state_fidelity(&a, &b, 10_000, 7);
        assert_eq!(r1, r2);
    }

    #[test]
    fn conjugation_superoperator_acts_correctly() {
        let mut rng = ChaCha12Rng::seed_from_u64(8);
        let u = haar_random_unitary(&mut rng);
        let s = conjugation_superoperator(&u);
        // Apply to a random Hermitian rho via vec and compare to U rho U^dag.
        let mut rho = Op4::zeros();
        for i in 0..4 {
            for j in 0..4 {
                rho[(i, j)] = c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
            }
        }
        rho = (rho + rho.adjoint()) * cr(0.5);
        let mut vec_rho = [C::default(); 16];
        for r in 0..4 {
            for cc in 0..4 {
                vec_rho[r + 4 * cc] = rho[(r, cc)];
            }
        }
        let want = u * rho * u.adjoint();
        for r in 0..4 {
            for cc in 0..4 {
                let mut got = C::default();
                for k in 0..16 {
                    got += s[(r + 4 * cc, k)] * vec_rho[k];
                }
                assert!((got - want[(r, cc)]).norm() < 1e-12);
            }
        }
        assert!(crate::propagate::trace_preservation_defect(&s) < 1e-12);
    }

    #[test]
    fn channel_fidelity_reduces_to_unitary_form() {
        let mut rng = ChaCha12Rng::seed_from_u64(19);
        for _ in 0..20 {
            let a = haar_random_unitary(&mut rng);
            let b = haar_random_unitary(&mut rng);
            let via_channel = average_fidelity_channel(&a, &conjugation_superoperator(&b));
            let direct = average_fidelity_unitary(&a, &b);
            assert!((via_channel - direct).abs() < 1e-10);
        }
        let u = haar_random_unitary(&mut rng);
        assert!((average_fidelity_channel(&u, &conjugation_superoperator(&u)) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn depolarizing_channel_fidelity() {
        // rho -> Tr(rho) I/4: S[r+4c, i+4j] = delta_ij delta_rc / 4.
        let mut s = Op16::zeros();
        for i in 0..4 {
            for r in 0..4 {
                s[(r + 4 * r, i + 4 * i)] = cr(0.25);
            }
        }
        let cnot = ideal_cnot();
        assert!((process_fidelity(&cnot, &s) - 1.0 / 16.0).abs() < 1e-12);
        assert!((average_fidelity_channel(&cnot, &s) - 0.25).abs() < 1e-12);
        assert!((average_fidelity_channel(&id4(), &s) - 0.25).abs() < 1e-12);
    }

    #[test]
    #[should_panic(expected = "not unitary")]
    fn non_unitary_input_is_rejected() {
        let m = id4() * cr(0.9);
        let _ = average_fidelity_unitary(&id4(), &m);
    }

    proptest! {
        #[test]
        fn unitary_fidelity_range_and_symmetry(seed in 0u64..300) {
            let mut rng = ChaCha12Rng::seed_from_u64(seed);
            let a = haar_random_unitary(&mut rng);
            let b = haar_random_unitary(&mut rng);
            let f = average_fidelity_unitary(&a, &b);
            prop_assert!((0.2..=1.0 + 1e-12).contains(&f));
            prop_assert!((f - average_fidelity_unitary(&b, &a)).abs() < 1e-12);
        }
    }
}
