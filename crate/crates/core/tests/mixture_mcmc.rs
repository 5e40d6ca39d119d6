mod common;

use std::collections::HashMap;

use cgp::cgp::{eppf_log, sample_sequence};
use cgp::conditionals::HyperPriors;
use cgp::mixture::{
    allocation_sweep, draw_niw, niw_marginal_log, niw_posterior, run_mixture_chain_seeded, update_cluster_params,
    update_mixture_hyperparams, MixtureFitConfig, MixtureModel, MixtureState, NiwParams,
};
use cgp::numerics::random::mvn;
use cgp::numerics::{stream, DataMatrix, SpdMatrix};
use cgp::partition::{set_partitions, vi_point_estimate, Partition};
use cgp::synthetic::{gen_mixture_with_outliers, SyntheticMixtureConfig};
use cgp::{CgpParams, FrequencyVector};
use statrs::distribution::{ContinuousCDF, Gamma};

fn niw(d: usize, kappa: f64, nu: f64) -> NiwParams {
    NiwParams::new(vec![0.0; d], kappa, nu, SpdMatrix::identity(d)).unwrap()
}

fn sizes_of(labels: &[usize]) -> Vec<usize> {
    let k = labels.iter().copied().max().unwrap_or(0);
    (1..=k).map(|j| labels.iter().filter(|&&l| l == j).count()).collect()
}

/// Posterior over flagged partitions by enumeration, hyperparameters fixed.
fn exact_posterior(model: &MixtureModel, p: &CgpParams) -> HashMap<Vec<usize>, f64> {
    let n = model.n();
    let mut out = HashMap::new();
    for mask in 0u32..(1 << n) {
        let base: Vec<usize> = (0..n).filter(|i| mask & (1 << i) == 0).collect();
        for rgs in set_partitions(base.len()).unwrap() {
            let mut labels = vec![0; n];
            for (pos, &i) in base.iter().enumerate() {
                labels[i] = rgs[pos];
            }
            let mut lp = base.len() as f64 * p.beta.ln() + (n - base.len()) as f64 * (1.0 - p.beta).ln();
            if !rgs.is_empty() {
                lp += eppf_log(&FrequencyVector::new(sizes_of(&rgs)).unwrap(), &p.without_contamination()).unwrap();
            }
            for (i, &l) in labels.iter().enumerate() {
                if l == 0 {
                    lp += niw_marginal_log(model.data().row(i), model.contaminant()).unwrap();
                }
            }
            for j in 1..=rgs.iter().copied().max().unwrap_or(0) {
                let rows: Vec<&[f64]> = (0..n).filter(|&i| labels[i] == j).map(|i| model.data().row(i)).collect();
                let mut post = model.base().clone();
                for y in rows {
                    lp += niw_marginal_log(y, &post).unwrap();
                    post = niw_posterior(&post, &[y]).unwrap();
                }
            }
            out.insert(Partition::new(&labels).labels().to_vec(), lp);
        }
    }
    let max = out.values().cloned().fold(f64::NEG_INFINITY, f64::max);
    let z: f64 = out.values().map(|v| (v - max).exp()).sum();
    out.into_iter().map(|(k, v)| (k, (v - max).exp() / z)).collect()
}

#[test]
fn two_dimensional_pair_matches_enumeration() {
    let data = DataMatrix::from_rows(&[vec![0.2, -0.1], vec![1.4, 0.9]]).unwrap();
    let model = MixtureModel::new(data, niw(2, 0.5, 4.0), niw(2, 0.1, 4.0)).unwrap();
    for (sigma, theta, beta) in [(0.5, 1.0, 0.6), (0.0, 2.0, 0.9)] {
        let p = CgpParams::pitman_yor(sigma, theta, beta).unwrap();
        let exact = exact_posterior(&model, &p);
        assert_eq!(exact.len(), 5);
        let mut rng = stream(61);
        let mut st = MixtureState::new(&model, &[1, 1], sigma, theta, beta, &mut rng).unwrap();
        let sweeps = 200_000;
        let mut counts: HashMap<Vec<usize>, f64> = HashMap::new();
        for _ in 0..sweeps {
            allocation_sweep(&mut st, &model, &mut rng);
            update_cluster_params(&mut st, &model, &mut rng);
            *counts.entry(st.labels().to_vec()).or_insert(0.0) += 1.0 / sweeps as f64;
        }
        assert!(counts.keys().all(|k| exact.contains_key(k)));
        let keys: Vec<_> = exact.keys().cloned().collect();
        let p: Vec<f64> = keys.iter().map(|k| exact[k]).collect();
        let q: Vec<f64> = keys.iter().map(|k| counts.get(k).copied().unwrap_or(0.0)).collect();
        let tv = common::total_variation(&p, &q);
        assert!(tv < 0.02, "σ={sigma}: TV {tv}");
    }
}

#[test]
fn without_contamination_no_point_is_flagged() {
    let data = DataMatrix::from_rows(&[vec![0.0], vec![5.0], vec![-4.0], vec![0.3]]).unwrap();
    let model = MixtureModel::new(data, niw(1, 0.1, 3.0), niw(1, 0.01, 3.0)).unwrap();
    let cfg = MixtureFitConfig { iterations: 400, burn_in: 100, thin: 1, pure_py: true, seed: 3, ..Default::default() };
    let t = run_mixture_chain_seeded(&model, &cfg).unwrap();
    assert!(t.mbar.iter().all(|m| *m == 0));
    assert!(t.beta.iter().all(|b| *b == 1.0));
    assert!(t.allocations.iter().all(|a| a.iter().all(|l| *l > 0)));
}

/// Draws data from the model given allocations and cluster parameters.
fn regenerate(state: &MixtureState, contaminant: &NiwParams, rng: &mut impl rand::Rng) -> DataMatrix {
    let rows: Vec<Vec<f64>> = state
        .labels()
        .iter()
        .map(|&l| {
            if l == 0 {
                let xi = draw_niw(contaminant, rng);
                mvn(rng, &xi.mean, &xi.chol)
            } else {
                let xi = &state.clusters()[l - 1];
                mvn(rng, &xi.mean, &xi.chol)
            }
        })
        .collect();
    DataMatrix::from_rows(&rows).unwrap()
}

#[test]
fn successive_conditional_simulator_keeps_the_prior() {
    // Alternating full sweeps with data redrawn from the likelihood must leave
    // the prior on (σ, θ, β) invariant.
    let n = 5;
    let (base, cont) = (niw(1, 0.2, 3.0), niw(1, 0.05, 3.0));
    let cfg = MixtureFitConfig::default();
    let mut rng = stream(67);
    // Start from an exact prior draw.
    let (s0, t0, b0) = (0.4, 80.0, 0.6);
    let seq = sample_sequence(&CgpParams::pitman_yor(s0, t0, b0).unwrap(), n, &mut rng);
    let labels: Vec<usize> = seq.labels.iter().zip(&seq.contaminant).map(|(l, c)| if *c { 0 } else { *l + 1 }).collect();
    let model = MixtureModel::new(DataMatrix::new(n, 1, vec![0.0; n]).unwrap(), base.clone(), cont.clone()).unwrap();
    let mut st = MixtureState::new(&model, &labels, s0, t0, b0, &mut rng).unwrap();
    let (mut sig, mut th, mut be) = (Vec::new(), Vec::new(), Vec::new());
    for it in 0..60_000 {
        let data = regenerate(&st, &cont, &mut rng);
        let model = MixtureModel::new(data, base.clone(), cont.clone()).unwrap();
        st = MixtureState::new(&model, &st.labels().to_vec(), st.sigma, st.theta, st.beta, &mut rng).unwrap();
        allocation_sweep(&mut st, &model, &mut rng);
        update_cluster_params(&mut st, &model, &mut rng);
        update_mixture_hyperparams(&mut st, &cfg, 1.2, 1.0, &mut rng);
        if it >= 500 && it % 20 == 0 {
            sig.push(st.sigma);
            th.push(st.theta);
            be.push(st.beta);
        }
    }
    let g = HyperPriors::default().theta;
    let g = Gamma::new(g.shape, g.rate).unwrap();
    let p = [common::ks_pvalue(&sig, |x| x), common::ks_pvalue(&th, |x| g.cdf(x)), common::ks_pvalue(&be, |x| x)];
    assert!(p.iter().all(|v| *v > 1e-4), "{p:?}");
}

#[test]
fn outliers_are_flagged_on_separated_data() {
    let cfg = SyntheticMixtureConfig { d: 2, m: 60, s: 4, c: 3.0, seed: 71 };
    let sample = gen_mixture_with_outliers(&cfg).unwrap();
    let base = NiwParams::empirical(&sample.data, 0.1, true).unwrap();
    let mut cont = base.clone();
    cont.kappa = 0.01;
    let model = MixtureModel::new(sample.data.clone(), base, cont).unwrap();
    let fit = MixtureFitConfig { iterations: 1500, burn_in: 500, thin: 5, seed: 72, ..Default::default() };
    let t = run_mixture_chain_seeded(&model, &fit).unwrap();
    // Posterior probability of being a contaminant, per row.
    let rate: Vec<f64> = (0..model.n())
        .map(|i| t.allocations.iter().filter(|a| a[i] == 0).count() as f64 / t.len() as f64)
        .collect();
    let outl = rate[60..].iter().sum::<f64>() / 4.0;
    let inl = rate[..60].iter().sum::<f64>() / 60.0;
    assert!(outl > 10.0 * inl && inl < 0.05, "outliers {outl}, inliers {inl}");
    // The point estimate splits the inliers by the sign of their first coordinate.
    let parts: Vec<Partition> = t.allocations.iter().map(|a| Partition::new(a)).collect();
    let est = vi_point_estimate(&parts).unwrap();
    let ids = est.partition.block_ids();
    let group = |i: usize| sample.data.row(i)[0] > 0.0;
    for i in 0..60 {
        for j in 0..60 {
            assert_eq!(ids[i] == ids[j], group(i) == group(j), "rows {i} and {j}");
        }
    }
}
