//! Straight-line transcription of the uncoupled updates with explicit
//! inverses, checked against the trainer iteration by iteration.

mod common;

use common::{phi, synth, upper_tail};
use gpmil::vi::{FitConfig, Trainer};
use nalgebra::{DMatrix, DVector};

fn se(a: &[f64], b: &[f64], ell: f64) -> f64 {
    let d2: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum();
    (-d2 / (2.0 * ell * ell)).exp()
}

#[test]
fn uncoupled_trajectory_matches_explicit_inverse_transcription() {
    let ds = synth(12, 3, 4, 5);
    let cfg = FitConfig { lambda: 0.0, inducing: 8, iterations: 0, seed: 9, ..Default::default() };
    let mut trainer = Trainer::new(&ds, cfg).unwrap();

    let z = trainer.cache().inducing.clone();
    let jitter = trainer.cache().kzz_factor.jitter();
    assert_eq!(jitter, 1e-6);
    let ell = (ds.dim as f64).sqrt();
    let m = z.nrows();
    let x: Vec<Vec<f64>> = ds.bags.iter().flat_map(|b| (0..b.len()).map(|i| b.instance(i))).collect();
    let zr: Vec<Vec<f64>> = (0..m).map(|i| z.row(i).iter().copied().collect()).collect();
    let n = x.len();

    let kzz = DMatrix::from_fn(m, m, |i, j| se(&zr[i], &zr[j], ell) + if i == j { jitter } else { 0.0 });
    let kxz = DMatrix::from_fn(n, m, |i, j| se(&x[i], &zr[j], ell));
    let kinv = kzz.clone().try_inverse().unwrap();
    let sigma_u = (&kinv + &kinv * kxz.transpose() * &kxz * &kinv).try_inverse().unwrap();

    let mut e = DVector::from_iterator(n, trainer.expectations().iter().flat_map(|v| v.iter().copied()));
    for t in 0..25 {
        trainer.step().unwrap();
        let mu_u = &sigma_u * &kinv * kxz.transpose() * &e;
        let mu_m = &kxz * &kinv * &mu_u;

        let mut next = DVector::zeros(n);
        let mut offset = 0;
        for bag in &ds.bags {
            let idx = offset..offset + bag.len();
            offset += bag.len();
            let neg: Vec<f64> = idx.clone().map(|i| mu_m[i] - phi(mu_m[i]) / upper_tail(mu_m[i])).collect();
            if bag.label {
                let all_neg: f64 = idx.clone().map(|i| upper_tail(mu_m[i])).product();
                let zc = 1.0 - all_neg;
                for (k, i) in idx.enumerate() {
                    next[i] = (mu_m[i] - (1.0 - zc) * neg[k]) / zc;
                }
            } else {
                for (k, i) in idx.enumerate() {
                    next[i] = neg[k];
                }
            }
        }
        e = next;

        let q = trainer.inducing_posterior();
        let du = (&q.mean - &mu_u).amax();
        let ds_u = (&q.cov - &sigma_u).amax();
        let got = DVector::from_iterator(n, trainer.expectations().iter().flat_map(|v| v.iter().copied()));
        let de = (&got - &e).amax();
        assert!(du < 1e-8 && ds_u < 1e-8 && de < 1e-8, "iteration {t}: Δμᵘ={du:e} ΔΣᵘ={ds_u:e} ΔE={de:e}");
    }
}
