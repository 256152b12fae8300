//! Dense complex linear algebra on the 2-, 4-, and 16-dimensional operator
//! spaces used by the simulator: Pauli matrices, Kronecker products, matrix
//! exponentials, and distance/unitarity diagnostics.
//!
//! All Hamiltonians are stored as angular frequencies (H/ħ), so exponents are
//! dimensionless after multiplying by a time in seconds.

use nalgebra::SMatrix;
use num_complex::Complex64;
use rand::Rng;
use thiserror::Error;

pub type C = Complex64;
pub type Op2 = SMatrix<C, 2, 2>;
pub type Op4 = SMatrix<C, 4, 4>;
pub type Op16 = SMatrix<C, 16, 16>;

#[derive(Debug, Error)]
pub enum QmathError {
    #[error("matrix is not Hermitian: max |A - A^dag| = {defect:.3e} exceeds tolerance {tol:.3e}")]
    NotHermitian { defect: f64, tol: f64 },
}

pub fn c(re: f64, im: f64) -> C {
    C::new(re, im)
}

pub fn cr(re: f64) -> C {
    C::new(re, 0.0)
}

pub fn pauli_x() -> Op2 {
    Op2::new(cr(0.0), cr(1.0), cr(1.0), cr(0.0))
}

pub fn pauli_y() -> Op2 {
    Op2::new(cr(0.0), c(0.0, -1.0), c(0.0, 1.0), cr(0.0))
}

pub fn pauli_z() -> Op2 {
    Op2::new(cr(1.0), cr(0.0), cr(0.0), cr(-1.0))
}

pub fn id2() -> Op2 {
    Op2::identity()
}

pub fn id4() -> Op4 {
    Op4::identity()
}

/// |1><0| in the (|0>, |1>) basis with sigma_z|0> = +|0>.
pub fn raising() -> Op2 {
    Op2::new(cr(0.0), cr(0.0), cr(1.0), cr(0.0))
}

/// Kronecker product of two single-qubit operators; qubit 1 is the left factor.
pub fn kron2(a: &Op2, b: &Op2) -> Op4 {
    let mut out = Op4::zeros();
    for i in 0..2 {
        for j in 0..2 {
            for k in 0..2 {
                for l in 0..2 {
                    out[(2 * i + k, 2 * j + l)] = a[(i, j)] * b[(k, l)];
                }
            }
        }
    }
    out
}

/// Kronecker product of two two-qubit operators (used for superoperators).
pub fn kron4(a: &Op4, b: &Op4) -> Op16 {
    let mut out = Op16::zeros();
    for i in 0..4 {
        for j in 0..4 {
            for k in 0..4 {
                for l in 0..4 {
                    out[(4 * i + k, 4 * j + l)] = a[(i, j)] * b[(k, l)];
                }
            }
        }
    }
    out
}

/// Operator acting as `a` on qubit 1, identity on qubit 2.
pub fn on_qubit1(a: &Op2) -> Op4 {
    kron2(a, &id2())
}

/// Operator acting as `a` on qubit 2, identity on qubit 1.
pub fn on_qubit2(a: &Op2) -> Op4 {
    kron2(&id2(), a)
}

pub fn max_abs<const N: usize>(m: &SMatrix<C, N, N>) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

pub fn frobenius_distance<const N: usize>(a: &SMatrix<C, N, N>, b: &SMatrix<C, N, N>) -> f64 {
    (a - b).norm()
}

/// Max-norm deviation of A from Hermiticity, relative to its largest entry.
pub fn hermiticity_defect<const N: usize>(m: &SMatrix<C, N, N>) -> f64 {
    max_abs(&(m - m.adjoint()))
}

/// Max-norm of U^dag U - I.
pub fn unitarity_defect<const N: usize>(u: &SMatrix<C, N, N>) -> f64 {
    max_abs(&(u.adjoint() * u - SMatrix::<C, N, N>::identity()))
}

/// exp(M) for an arbitrary square matrix by scaling-and-squaring with a
/// truncated Taylor series. The series is summed to machine precision after
/// scaling the norm below 1/4.
pub fn expm<const N: usize>(m: &SMatrix<C, N, N>) -> SMatrix<C, N, N> {
    let norm = max_abs(m) * N as f64;
    let mut squarings = 0u32;
    while norm / f64::powi(2.0, squarings as i32) > 0.25 {
        squarings += 1;
        if squarings > 60 {
            break;
        }
    }
    let scaled = m / cr(f64::powi(2.0, squarings as i32));
    let mut term = SMatrix::<C, N, N>::identity();
    let mut acc = SMatrix::<C, N, N>::identity();
    for k in 1..=40 {
        term = (scaled * term) / cr(k as f64);
        acc += term;
        if max_abs(&term) < 1e-18 {
            break;
        }
    }
    for _ in 0..squarings {
        acc *= acc;
    }
    acc
}

/// exp(-i h t) for a Hermitian generator `h` (angular-frequency units) and a
/// time `t` in seconds. Errors when `h` is not Hermitian within tolerance.
pub fn expm_hermitian_generator(h: &Op4, t: f64) -> Result<Op4, QmathError> {
    let scale = max_abs(h).max(1e-300);
    let defect = hermiticity_defect(h);
    let tol = 1e-12 * scale;
    if defect > tol {
        return Err(QmathError::NotHermitian { defect, tol });
    }
    Ok(expm(&(h * c(0.0, -t))))
}

/// Haar-distributed random 4x4 unitary: QR of a complex Gaussian matrix via
/// modified Gram-Schmidt with the R diagonal phase-fixed to be positive.
pub fn haar_random_unitary<R: Rng>(rng: &mut R) -> Op4 {
    use rand_distr::StandardNormal;
    let mut g = Op4::zeros();
    for i in 0..4 {
        for j in 0..4 {
            let re: f64 = rng.sample(StandardNormal);
            let im: f64 = rng.sample(StandardNormal);
            g[(i, j)] = c(re, im);
        }
    }
    let mut cols: Vec<nalgebra::SVector<C, 4>> = (0..4).map(|j| g.column(j).into_owned()).collect();
    for j in 0..4 {
        for k in 0..j {
            let proj: C = cols[k].dotc(&cols[j]);
            let prev = cols[k];
            cols[j] -= prev * proj;
        }
        let norm = cols[j].norm();
        cols[j] /= cr(norm);
        // Fix the phase so the decomposition is unique (Haar-correct).
        let pivot = cols[j][j];
        if pivot.norm() > 0.0 {
            let phase = pivot / cr(pivot.norm());
            cols[j] /= phase;
        }
    }
    Op4::from_columns(&cols)
}

/// Smallest eigenvalue of a Hermitian matrix (used for Choi positivity).
pub fn hermitian_min_eigenvalue(m: &Op16) -> f64 {
    // Symmetrize to suppress roundoff before the solver.
    let h = (m + m.adjoint()) * cr(0.5);
    let eig = nalgebra::linalg::SymmetricEigen::new(h);
    eig.eigenvalues.iter().copied().fold(f64::INFINITY, f64::min)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha12Rng;
    use std::f64::consts::PI;

    fn random_hermitian4(rng: &mut ChaCha12Rng, scale: f64) -> Op4 {
        let mut m = Op4::zeros();
        for i in 0..4 {
            for j in 0..4 {
                m[(i, j)] = c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)) * cr(scale);
            }
        }
        (m + m.adjoint()) * cr(0.5)
    }

    #[test]
    fn kron_identity_and_pauli_examples() {
        assert_eq!(kron2(&id2(), &id2()), id4());
        let zz = kron2(&pauli_z(), &pauli_z());
        for (i, want) in [1.0, -1.0, -1.0, 1.0].iter().enumerate() {
            assert_eq!(zz[(i, i)], cr(*want));
        }
        // sigma_x (x) sigma_y is antidiagonal (-i, i, -i, i) with nonzeros at
        // columns 4,3,2,1 reading rows 1..4.
        let xy = kron2(&pauli_x(), &pauli_y());
        let want = [(0, 3, c(0.0, -1.0)), (1, 2, c(0.0, 1.0)), (2, 1, c(0.0, -1.0)), (3, 0, c(0.0, 1.0))];
        for &(i, j, v) in &want {
            assert!((xy[(i, j)] - v).norm() < 1e-15);
        }
        assert_eq!(xy.iter().filter(|z| z.norm() > 0.0).count(), 4);
    }

    #[test]
    fn expm_of_zero_is_identity() {
        let u = expm_hermitian_generator(&Op4::zeros(), 1.7).unwrap();
        assert!(frobenius_distance(&u, &id4()) < 1e-15);
    }

    #[test]
    fn expm_of_sigma_z_rotations() {
        // exp(-i theta Z1) is -i Z1 at theta = pi/2 and -I at theta = pi.
        let omega = 2.0 * PI * 1.0e9;
        let h = on_qubit1(&pauli_z()) * cr(omega);
        let quarter = expm_hermitian_generator(&h, PI / (2.0 * omega)).unwrap();
        let want_quarter = on_qubit1(&pauli_z()) * c(0.0, -1.0);
        assert!(frobenius_distance(&quarter, &want_quarter) < 1e-12);
        let half = expm_hermitian_generator(&h, PI / omega).unwrap();
        let want_half = id4() * cr(-1.0);
        assert!(frobenius_distance(&half, &want_half) < 1e-12);
    }

    #[test]
    fn expm_matches_plain_series_on_entangler() {
        // XY-type generator J(XX+YY) with J*dt = pi/8: compare the
        // scaling-and-squaring result to a direct power series.
        let j = 2.0 * PI * 10.0e6;
        let dt = PI / (8.0 * j);
        let h = (kron2(&pauli_x(), &pauli_x()) + kron2(&pauli_y(), &pauli_y())) * cr(j);
        let u = expm_hermitian_generator(&h, dt).unwrap();
        let m = h * c(0.0, -dt);
        let mut term = id4();
        let mut acc = id4();
        for k in 1..60 {
            term = (m * term) / cr(k as f64);
            acc += term;
        }
        assert!(frobenius_distance(&u, &acc) < 1e-13);
        assert!(unitarity_defect(&u) < 1e-13);
    }

    #[test]
    fn expm_rejects_non_hermitian() {
        let mut h = Op4::zeros();
        h[(0, 1)] = cr(1.0);
        assert!(expm_hermitian_generator(&h, 1.0).is_err());
    }

    #[test]
    fn expm_unitarity_over_many_random_generators() {
        // Includes large ||h||*t products exercised through scaling-and-squaring.
        let mut rng = ChaCha12Rng::seed_from_u64(42);
        for k in 0..10_000 {
            let scale = if k % 10 == 0 { 1e3 } else { 1.0 };
            let h = random_hermitian4(&mut rng, scale);
            let u = expm_hermitian_generator(&h, 1.0).unwrap();
            assert!(unitarity_defect(&u) <= 1e-10, "defect {} at case {}", unitarity_defect(&u), k);
        }
    }

    #[test]
    fn frobenius_examples() {
        assert_eq!(frobenius_distance(&id4(), &id4()), 0.0);
        // ||sigma_x - (-sigma_x)||_F = 2 sqrt(2).
        let x = pauli_x();
        assert!((frobenius_distance(&x, &(x * cr(-1.0))) - 2.0 * 2.0f64.sqrt()).abs() < 1e-12);
        // CNOT differs from the identity in a 2x2 block: distance 2.
        let cnot = crate::pulse::ideal_cnot();
        assert!((frobenius_distance(&id4(), &cnot) - 2.0).abs() < 1e-12);
    }

    #[test]
    fn symmetric_eigen_handles_complex_hermitian() {
        // Known spectrum: U diag(d) U^dag for a Haar-random U.
        let mut rng = ChaCha12Rng::seed_from_u64(7);
        let u4 = haar_random_unitary(&mut rng);
        let mut u = Op16::zeros();
        // Block-diagonal embedding of four copies keeps the test cheap.
        for b in 0..4 {
            for i in 0..4 {
                for j in 0..4 {
                    u[(4 * b + i, 4 * b + j)] = u4[(i, j)];
                }
            }
        }
        let mut d = Op16::zeros();
        for i in 0..16 {
            d[(i, i)] = cr(i as f64 - 3.5);
        }
        let h = u * d * u.adjoint();
        let min = hermitian_min_eigenvalue(&h);
        assert!((min - (-3.5)).abs() < 1e-9, "min eigenvalue {min}");
    }

    #[test]
    fn haar_unitaries_are_unitary() {
        let mut rng = ChaCha12Rng::seed_from_u64(1);
        for _ in 0..50 {
            let u = haar_random_unitary(&mut rng);
            assert!(unitarity_defect(&u) < 1e-12);
        }
    }

    proptest! {
        #[test]
        fn kron_mixed_product(seed in 0u64..1000) {
            let mut rng = ChaCha12Rng::seed_from_u64(seed);
            let mut m = || {
                let mut a = Op2::zeros();
                for i in 0..2 { for j in 0..2 {
                    a[(i,j)] = c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
                }}
                a
            };
            let (a, b, cc, d) = (m(), m(), m(), m());
            let lhs = kron2(&a, &b) * kron2(&cc, &d);
            let rhs = kron2(&(a * cc), &(b * d));
            prop_assert!(max_abs(&(lhs - rhs)) < 1e-12);
        }

        #[test]
        fn expm_semigroup(seed in 0u64..200) {
            let mut rng = ChaCha12Rng::seed_from_u64(seed);
            let h = random_hermitian4(&mut rng, 1.0);
            let (t1, t2) = (0.3, 1.1);
            let u = expm_hermitian_generator(&h, t1).unwrap()
                  * expm_hermitian_generator(&h, t2).unwrap();
            let v = expm_hermitian_generator(&h, t1 + t2).unwrap();
            prop_assert!(max_abs(&(u - v)) < 1e-10);
        }
    }
}
