use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use stochabs::casestudy;
use stochabs::certificates::*;
use stochabs::matlib::Matrix;
use stochabs::systems::{Nonlinearity, SystemModel};

/// Double integrator with a deadbeat gain, reduced to its position.
fn double_integrator() -> (SystemModel, SystemModel, StorageCertificate) {
    let conc = SystemModel::new(
        Matrix::from_rows(&[vec![1.0, 1.0], vec![0.0, 1.0]]).unwrap(),
        Matrix::from_rows(&[vec![0.0], vec![1.0]]).unwrap(),
        Matrix::from_rows(&[vec![1.0, 0.0]]).unwrap(),
        Matrix::zeros(1, 2),
        Matrix::zeros(2, 1),
        Matrix::zeros(2, 1),
        Matrix::zeros(1, 2),
        Matrix::zeros(2, 1),
        Nonlinearity::zero(),
    )
    .unwrap();
    let abst = SystemModel::new(
        Matrix::scalar(1.0),
        Matrix::scalar(1.0),
        Matrix::scalar(1.0),
        Matrix::zeros(1, 1),
        Matrix::zeros(1, 1),
        Matrix::zeros(1, 1),
        Matrix::zeros(1, 1),
        Matrix::zeros(1, 1),
        Nonlinearity::zero(),
    )
    .unwrap();
    // A + B K is nilpotent, and M̃ = I + (A+BK)ᵀ(A+BK) solves the Lyapunov
    // equation (A+BK)ᵀ M̃ (A+BK) = M̃ − I.
    let mut cert = StorageCertificate {
        mtil: Matrix::from_rows(&[vec![3.0, 2.0], vec![2.0, 3.0]]).unwrap(),
        k: Matrix::from_rows(&[vec![-1.0, -2.0]]).unwrap(),
        q: Matrix::zeros(1, 1),
        l1: Matrix::zeros(1, 1),
        l2: Matrix::zeros(1, 1),
        z: Matrix::zeros(2, 1),
        g: Matrix::zeros(1, 1),
        ghat: Matrix::zeros(1, 1),
        h: Matrix::zeros(1, 1),
        p: Matrix::from_rows(&[vec![1.0], vec![0.0]]).unwrap(),
        rtil: Matrix::zeros(1, 1),
        xbar11: Matrix::zeros(1, 1),
        xbar12: Matrix::zeros(1, 1),
        xbar21: Matrix::zeros(1, 1),
        xbar22: Matrix::zeros(1, 1),
        kappa_hat: 0.9,
        k_til: 100.0,
    };
    cert.rtil = optimal_rtil(&cert, &conc, &abst).unwrap();
    (conc, abst, cert)
}

#[test]
fn stabilizable_linear_pair_passes() {
    let (conc, abst, cert) = double_integrator();
    // (BᵀM̃B)⁻¹BᵀM̃P B̂ = 2/3
    assert!((cert.rtil[(0, 0)] - 2.0 / 3.0).abs() < 1e-14);
    let rep = verify_storage(&conc, &abst, &cert, 1e-9).unwrap();
    assert!(rep.passed, "{rep:?}");
    let p = derive_params(&conc, &abst, &cert, &rep).unwrap();
    assert!(p.is_valid());
    // λ_min([[3,2],[2,3]]) = 1, C₁ᵀC₁ has λ_max = 1
    assert!((p.alpha_coeff - 1.0).abs() < 1e-12);
    assert!((p.kappa_lin - 0.1).abs() < 1e-15);
    // w = B R̃ − P B̂ = (−1, 2/3), wᵀM̃w = 3 − 8/3 + 4/3 = 5/3
    assert!((p.rho_coeff - 100.0 * 5.0 / 3.0).abs() < 1e-9);
    assert_eq!(p.psi, 0.0);

    let mut slow = cert.clone();
    slow.kappa_hat = 0.7; // (1 − κ̂)·λ_max(M̃) = 1.5 > 1
    let rep = verify_storage(&conc, &abst, &slow, 1e-9).unwrap();
    let failing: Vec<&str> = rep.conditions.iter().filter(|c| !c.passed()).map(|c| c.name.as_str()).collect();
    assert_eq!(failing, [COND_DISSIPATION]);
}

#[test]
fn optimal_rtil_beats_random_competitors() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let (conc, abst, cert) = casestudy::subsystem_triple(4, 0.0);
    for _ in 0..5 {
        let mut c = conc.clone();
        c.b = Matrix::from_fn(4, 4, |i, j| if i == j { 2.0 } else { 0.0 } + rng.random_range(-0.5..0.5));
        let mut cert = cert.clone();
        cert.mtil = Matrix::from_fn(4, 4, |i, j| if i == j { 2.0 } else { 0.3 });
        let best = rho_coeff_for(&cert, &c, &abst, &optimal_rtil(&cert, &c, &abst).unwrap()).unwrap();
        for _ in 0..100 {
            let r0 = Matrix::from_fn(4, 1, |_, _| rng.random_range(-2.0..2.0));
            assert!(best <= rho_coeff_for(&cert, &c, &abst, &r0).unwrap() + 1e-12);
        }
    }
}

fn random_orthonormal(n: usize, seed: u64) -> Matrix {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut cols: Vec<Vec<f64>> = Vec::new();
    while cols.len() < n {
        let mut v: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
        for c in &cols {
            let d: f64 = v.iter().zip(c).map(|(a, b)| a * b).sum();
            v.iter_mut().zip(c).for_each(|(a, b)| *a -= d * b);
        }
        let norm = v.iter().map(|a| a * a).sum::<f64>().sqrt();
        if norm > 1e-3 {
            cols.push(v.into_iter().map(|a| a / norm).collect());
        }
    }
    Matrix::from_fn(n, n, |i, j| cols[j][i])
}

/// The same pair in coordinates `x' = T x` for orthonormal `T`.
fn rebase(conc: &SystemModel, cert: &StorageCertificate, t: &Matrix) -> (SystemModel, StorageCertificate) {
    let tt = t.transpose();
    let c = SystemModel::new(
        &(t * &conc.a) * &tt,
        t * &conc.b,
        &conc.c1 * &tt,
        &conc.c2 * &tt,
        t * &conc.d,
        t * &conc.e,
        &conc.f * &tt,
        t * &conc.r,
        conc.phi.clone(),
    )
    .unwrap();
    let mut k = cert.clone();
    k.mtil = &(t * &cert.mtil) * &tt;
    k.p = t * &cert.p;
    k.k = &cert.k * &tt;
    k.z = t * &cert.z;
    (c, k)
}

fn residuals(conc: &SystemModel, abst: &SystemModel, cert: &StorageCertificate) -> Vec<f64> {
    verify_storage(conc, abst, cert, 1e-9).unwrap().conditions.iter().map(|c| c.residual).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn verification_is_invariant_under_rebasing(seed in any::<u64>(), n in 2usize..6) {
        let (conc, abst, cert) = casestudy::subsystem_triple(n, casestudy::NOISE_GAIN);
        let t = random_orthonormal(n, seed);
        let (c2, k2) = rebase(&conc, &cert, &t);
        let before = residuals(&conc, &abst, &cert);
        let after = residuals(&c2, &abst, &k2);
        for (a, b) in before.iter().zip(&after) {
            prop_assert!((a - b).abs() < 1e-8, "{before:?} vs {after:?}");
        }
        let p1 = derive_params(&conc, &abst, &cert, &verify_storage(&conc, &abst, &cert, 1e-9).unwrap()).unwrap();
        let p2 = derive_params(&c2, &abst, &k2, &verify_storage(&c2, &abst, &k2, 1e-9).unwrap()).unwrap();
        prop_assert!((p1.psi - p2.psi).abs() < 1e-12);
        prop_assert!((p1.alpha_coeff - p2.alpha_coeff).abs() < 1e-9);
        // V is coordinate-free
        let x: Vec<f64> = (0..n).map(|i| i as f64 - 1.5).collect();
        let tx = t.mul_vec(&x).unwrap();
        prop_assert!((eval_v(&cert, &x, &[0.4]).unwrap() - eval_v(&k2, &tx, &[0.4]).unwrap()).abs() < 1e-10);
    }

    #[test]
    fn double_integrator_rebasing(seed in any::<u64>()) {
        let (conc, abst, cert) = double_integrator();
        let (c2, k2) = rebase(&conc, &cert, &random_orthonormal(2, seed));
        let before = residuals(&conc, &abst, &cert);
        let after = residuals(&c2, &abst, &k2);
        for (a, b) in before.iter().zip(&after) {
            prop_assert!((a - b).abs() < 1e-8);
        }
    }
}
