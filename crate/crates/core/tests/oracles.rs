//! Independent reference algorithms checked against the library routes.

use born_markov::evolution::{self, product_state};
use born_markov::linalg;
use born_markov::operators::{self, BasisTag, ModelParams};
use born_markov::spectra;
use born_markov::{Complex64, FockBasis, StateVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Cyclic Jacobi rotations; slow but simple.
fn jacobi_eigenvalues(mut a: Vec<f64>, n: usize) -> Vec<f64> {
    for _sweep in 0..100 {
        let off: f64 = (0..n).flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j))).map(|(i, j)| a[i * n + j].powi(2)).sum();
        if off < 1e-26 {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = a[p * n + q];
                if apq.abs() < 1e-300 {
                    continue;
                }
                let theta = (a[q * n + q] - a[p * n + p]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let (akp, akq) = (a[k * n + p], a[k * n + q]);
                    a[k * n + p] = c * akp - s * akq;
                    a[k * n + q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let (apk, aqk) = (a[p * n + k], a[q * n + k]);
                    a[p * n + k] = c * apk - s * aqk;
                    a[q * n + k] = s * apk + c * aqk;
                }
            }
        }
    }
    let mut d: Vec<f64> = (0..n).map(|i| a[i * n + i]).collect();
    d.sort_by(f64::total_cmp);
    d
}

#[test]
fn eigenvalues_match_jacobi_on_random_matrices() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for n in [1, 2, 7, 25, 40] {
        let mut a = vec![0.0; n * n];
        for i in 0..n {
            for j in i..n {
                let v: f64 = rng.random_range(-1.0..1.0);
                a[i * n + j] = v;
                a[j * n + i] = v;
            }
        }
        let ours = linalg::symmetric_eigen(a.clone(), n, false).unwrap().values;
        let oracle = jacobi_eigenvalues(a, n);
        for (x, y) in ours.iter().zip(&oracle) {
            assert!((x - y).abs() < 1e-11, "n={n}: {x} vs {y}");
        }
    }
}

#[test]
fn bath_spectrum_matches_jacobi() {
    let p = ModelParams::REFERENCE.with_size(3, 4);
    let b = FockBasis::new(3, 4).unwrap();
    let h = operators::build_bath_hamiltonian(&p, &b).unwrap();
    let es = spectra::diagonalize(&h).unwrap();
    let oracle = jacobi_eigenvalues(h.to_dense_real().unwrap(), b.dim());
    for (x, y) in es.energies().iter().zip(&oracle) {
        assert!((x - y).abs() < 1e-12);
    }
    assert!(es.max_residual(&h).unwrap() < 1e-12);
    assert!(es.orthonormality_defect() < 1e-12);
}

#[test]
fn hermitian_route_matches_jacobi_embedding() {
    // The Jacobi oracle on the real embedding sees every eigenvalue twice.
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let n = 12;
    let mut h = vec![Complex64::new(0.0, 0.0); n * n];
    for i in 0..n {
        h[i * n + i] = Complex64::new(rng.random_range(-1.0..1.0), 0.0);
        for j in i + 1..n {
            let z = Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
            h[i * n + j] = z;
            h[j * n + i] = z.conj();
        }
    }
    let (values, vectors) = linalg::hermitian_eigen(&h, n, true).unwrap();
    let m = 2 * n;
    let mut emb = vec![0.0; m * m];
    for i in 0..n {
        for j in 0..n {
            let z = h[i * n + j];
            emb[i * m + j] = z.re;
            emb[(i + n) * m + j + n] = z.re;
            emb[(i + n) * m + j] = z.im;
            emb[i * m + j + n] = -z.im;
        }
    }
    let doubled = jacobi_eigenvalues(emb, m);
    for (k, v) in values.iter().enumerate() {
        assert!((v - doubled[2 * k]).abs() < 1e-11);
    }
    for (k, vec) in vectors.unwrap().iter().enumerate() {
        let hv: Vec<Complex64> = (0..n).map(|i| (0..n).map(|j| h[i * n + j] * vec[j]).sum()).collect();
        let res: f64 = hv.iter().zip(vec).map(|(a, b)| (a - b * values[k]).norm_sqr()).sum::<f64>().sqrt();
        assert!(res < 1e-11);
    }
}

type Dense = Vec<Complex64>;

fn cmul(a: &Dense, b: &Dense, n: usize) -> Dense {
    let mut c = vec![Complex64::new(0.0, 0.0); n * n];
    for i in 0..n {
        for k in 0..n {
            let aik = a[i * n + k];
            for j in 0..n {
                c[i * n + j] += aik * b[k * n + j];
            }
        }
    }
    c
}

/// `exp(A)` by scaling and squaring with a truncated Taylor series.
fn expm(a: &Dense, n: usize) -> Dense {
    let norm = (0..n).map(|i| (0..n).map(|j| a[i * n + j].norm()).sum::<f64>()).fold(0.0, f64::max);
    let squarings = (norm.max(1e-300).log2().ceil().max(0.0) as u32) + 4;
    let scale = 0.5f64.powi(squarings as i32);
    let x: Dense = a.iter().map(|z| z * scale).collect();
    let mut result: Dense = (0..n * n).map(|k| Complex64::new(if k % (n + 1) == 0 { 1.0 } else { 0.0 }, 0.0)).collect();
    let mut term = result.clone();
    for k in 1..30 {
        term = cmul(&term, &x, n).into_iter().map(|z| z / k as f64).collect();
        for (r, t) in result.iter_mut().zip(&term) {
            *r += t;
        }
    }
    for _ in 0..squarings {
        result = cmul(&result, &result, n);
    }
    result
}

#[test]
fn evolution_matches_matrix_exponential() {
    let p = ModelParams::REFERENCE.with_size(3, 4);
    let b = FockBasis::new(3, 4).unwrap();
    let h = operators::build_total_hamiltonian(&p, &b).unwrap();
    let n = h.dim();
    assert_eq!(n, 40);
    let es = spectra::diagonalize(&h).unwrap();
    let hb = spectra::diagonalize(&operators::build_bath_hamiltonian(&p, &b).unwrap()).unwrap();
    let psi0 = product_state(
        &StateVector::spin(0.7).unwrap(),
        &StateVector::from_real(hb.vector(9), BasisTag::Bath).unwrap(),
    )
    .unwrap();
    let dense = h.to_dense();
    for t in [0.3, 2.0, 17.5] {
        let a: Dense = dense.iter().map(|z| z * Complex64::new(0.0, -t)).collect();
        let u = expm(&a, n);
        let expected: Vec<Complex64> =
            (0..n).map(|i| (0..n).map(|j| u[i * n + j] * psi0.amplitudes()[j]).sum()).collect();
        let got = evolution::evolve_to(&es, &psi0, t).unwrap();
        let err = got.amplitudes().iter().zip(&expected).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
        assert!(err < 1e-9, "t={t}: {err}");
    }
}

#[test]
fn two_by_two_closed_form() {
    let m = [
        [Complex64::new(0.3, 0.0), Complex64::new(0.1, -0.2)],
        [Complex64::new(0.1, 0.2), Complex64::new(-0.4, 0.0)],
    ];
    let (vals, _) = linalg::hermitian_eigen_2x2(&m);
    let (tr, det): (f64, f64) = (-0.1, 0.3 * -0.4 - 0.05);
    let disc = (tr * tr / 4.0 - det).sqrt();
    assert!((vals[0] - (tr / 2.0 - disc)).abs() < 1e-15);
    assert!((vals[1] - (tr / 2.0 + disc)).abs() < 1e-15);
}
