mod common;

use cbd_core::datagen::oracle_sampler;
use cbd_core::inference::run_test;
use cbd_core::resampling::{
    cpt_resample, crt_resample, dlb_probabilities, dlb_resample, log_density_table, lwb_resample,
    metropolis_permutation,
};
use cbd_core::rng::{derive_seed, rng_from_seed};
use cbd_core::{
    gen_scenario, ConditionalSampler, Dataset, EstimatorConfig, KernelSpec, ResampleMethod,
    ResamplePlan, ScenarioSpec,
};
use common::*;
use statrs::distribution::{ChiSquared, ContinuousCDF};

fn perm_of(original: &[f64], shuffled: &[f64]) -> Vec<usize> {
    shuffled
        .iter()
        .map(|v| original.iter().position(|o| o == v).unwrap())
        .collect()
}

#[test]
fn permutation_chain_stays_at_dominant_identity() {
    let ds = Dataset::from_columns(&[0.0, 10.0], &[0.0, 0.0], &[0.0, 10.0]).unwrap();
    let sampler = ConditionalSampler::gaussian_scalar(1.0, 0.0, 1.0).unwrap();
    let mut rng = rng_from_seed(21);
    let runs = 10_000;
    let mut identity = 0;
    for _ in 0..runs {
        let (out, _) = cpt_resample(&ds, &sampler, &mut rng, 20).unwrap();
        if out.x().as_slice() == ds.x().as_slice() {
            identity += 1;
        }
    }
    assert!(identity as f64 / runs as f64 >= 0.99, "{identity}");
}

#[test]
fn permutation_chain_targets_the_product_density() {
    let x = [0.3, -0.8, 1.6];
    let ds = Dataset::from_columns(&x, &[0.0; 3], &[0.1, -0.5, 1.0]).unwrap();
    let sampler = ConditionalSampler::gaussian_scalar(1.0, 0.0, 0.8).unwrap();
    let lp = log_density_table(&ds, &sampler).unwrap();
    let perms = permutations(&[0usize, 1, 2]);
    let weight: Vec<f64> = perms
        .iter()
        .map(|p| (0..3).map(|l| lp[p[l] * 3 + l]).sum::<f64>().exp())
        .collect();
    let total: f64 = weight.iter().sum();

    let chains = 100_000;
    let mut counts = vec![0usize; perms.len()];
    let mut rng = rng_from_seed(22);
    for _ in 0..chains {
        let (p, _) = metropolis_permutation(&lp, 3, 30, &mut rng);
        counts[perms.iter().position(|q| *q == p).unwrap()] += 1;
    }
    for (k, w) in weight.iter().enumerate() {
        let target = w / total;
        let freq = counts[k] as f64 / chains as f64;
        let se = (target * (1.0 - target) / chains as f64).sqrt();
        assert!((freq - target).abs() <= 3.0 * se, "{:?}: {freq} vs {target}", perms[k]);
    }

    // the dataset-level resampler applies the same chain
    let (out, acc) = cpt_resample(&ds, &sampler, &mut rng, 30).unwrap();
    assert!((0.0..=1.0).contains(&acc));
    let mut p = perm_of(&x, out.x().as_slice());
    p.sort_unstable();
    assert_eq!(p, vec![0, 1, 2]);
}

#[test]
fn wild_bootstrap_adds_centered_gaussian_noise() {
    let ds = Dataset::from_columns(&[1.0, -2.0, 0.5, 3.0, 0.0], &[0.0; 5], &[0.0, 1.0, 2.0, 3.0, 4.0])
        .unwrap();
    let h0 = 0.7;
    let mut rng = rng_from_seed(23);
    let mut noise = Vec::with_capacity(100_000);
    for _ in 0..20_000 {
        let out = lwb_resample(&ds, h0, 0.0, KernelSpec::epanechnikov(), &mut rng).unwrap();
        for (a, b) in out.x().as_slice().iter().zip(ds.x().as_slice()) {
            noise.push(a - b);
        }
    }
    let (m, sd) = mean_sd(&noise);
    let n = noise.len() as f64;
    assert!(m.abs() <= 4.0 * sd / n.sqrt(), "mean {m}");
    let var_se = h0 * h0 * (2.0 / (n - 1.0)).sqrt();
    assert!((sd * sd - h0 * h0).abs() <= 4.0 * var_se, "variance {}", sd * sd);
}

#[test]
fn localized_wild_bootstrap_centers_on_kernel_average() {
    let x = [1.0, -2.0, 0.5, 3.0];
    let z = [0.0, 0.5, 1.2, 5.0];
    let ds = Dataset::from_columns(&x, &[0.0; 4], &z).unwrap();
    let (h0, hp) = (0.3, 1.0);
    // row 0 under a unit Epanechnikov kernel: weights 1, 0.75, 0, 0
    let expect0 = (1.0 * x[0] + 0.75 * x[1]) / 1.75;
    let mut rng = rng_from_seed(24);
    let draws: Vec<f64> = (0..100_000)
        .map(|_| {
            lwb_resample(&ds, h0, hp, KernelSpec::epanechnikov(), &mut rng)
                .unwrap()
                .x()
                .get(0, 0)
        })
        .collect();
    let (m, sd) = mean_sd(&draws);
    assert!((m - expect0).abs() <= 4.0 * sd / (draws.len() as f64).sqrt(), "{m} vs {expect0}");
}

#[test]
fn discrete_bootstrap_is_uniform_when_z_is_constant() {
    let x = [1.0, 2.0, 3.0, 4.0, 5.0];
    let ds = Dataset::from_columns(&x, &[0.0; 5], &[0.3; 5]).unwrap();
    let mut rng = rng_from_seed(25);
    let draws = 20_000;
    let mut counts = [0usize; 5];
    for _ in 0..draws {
        let out = dlb_resample(&ds, 0.5, KernelSpec::epanechnikov(), &mut rng).unwrap();
        counts[perm_of(&x, &out.x().as_slice()[..1])[0]] += 1;
    }
    let expected = draws as f64 / 5.0;
    let chi2: f64 = counts
        .iter()
        .map(|&c| (c as f64 - expected).powi(2) / expected)
        .sum();
    let crit = ChiSquared::new(4.0).unwrap().inverse_cdf(0.99);
    assert!(chi2 < crit, "{counts:?}");
    for j in 0..5 {
        for p in dlb_probabilities(&ds, 0.5, KernelSpec::epanechnikov(), j).unwrap() {
            assert!((p - 0.2).abs() < 1e-15);
        }
    }
}

#[test]
fn discrete_bootstrap_follows_hand_computed_weights() {
    let x = [10.0, 20.0, 30.0];
    let ds = Dataset::from_columns(&x, &[0.0; 3], &[0.0, 0.5, 2.0]).unwrap();
    let spec = KernelSpec::epanechnikov();
    let hand = [
        [1.0 / 1.75, 0.75 / 1.75, 0.0],
        [0.75 / 1.75, 1.0 / 1.75, 0.0],
        [0.0, 0.0, 1.0],
    ];
    for (j, row) in hand.iter().enumerate() {
        let p = dlb_probabilities(&ds, 1.0, spec, j).unwrap();
        for k in 0..3 {
            assert!((p[k] - row[k]).abs() < 1e-15);
        }
    }
    let mut rng = rng_from_seed(26);
    let draws = 100_000;
    let mut counts = [[0usize; 3]; 3];
    for _ in 0..draws {
        let out = dlb_resample(&ds, 1.0, spec, &mut rng).unwrap();
        for (j, src) in perm_of(&x, out.x().as_slice()).into_iter().enumerate() {
            counts[j][src] += 1;
        }
    }
    for j in 0..3 {
        for k in 0..3 {
            let target = hand[j][k];
            let freq = counts[j][k] as f64 / draws as f64;
            let se = (target * (1.0 - target) / draws as f64).sqrt();
            assert!((freq - target).abs() <= 4.0 * se + 1e-12, "row {j} src {k}: {freq}");
        }
    }
}

#[test]
fn randomization_draws_have_model_moments() {
    let z: Vec<f64> = (0..4).map(f64::from).collect();
    let ds = Dataset::from_columns(&[0.0; 4], &[0.0; 4], &z).unwrap();
    let sampler = ConditionalSampler::gaussian_scalar(2.0, 1.0, 0.5).unwrap();
    let mut rng = rng_from_seed(27);
    let mut cols = vec![Vec::new(); 4];
    for _ in 0..20_000 {
        let out = crt_resample(&ds, &sampler, &mut rng).unwrap();
        for (i, c) in cols.iter_mut().enumerate() {
            c.push(out.x().get(i, 0));
        }
    }
    for (i, c) in cols.iter().enumerate() {
        let (m, sd) = mean_sd(c);
        let want = 2.0 * z[i] + 1.0;
        assert!((m - want).abs() <= 4.0 * 0.5 / (c.len() as f64).sqrt(), "{m} vs {want}");
        let var_se = 0.25 * (2.0 / (c.len() as f64 - 1.0)).sqrt();
        assert!((sd * sd - 0.25).abs() <= 4.0 * var_se);
    }
}

/// Under the null with the true conditional law, the observed statistic is
/// exchangeable with the resamples, so its rank among M + 1 values is uniform.
#[test]
fn oracle_randomization_ranks_are_uniform() {
    let trials = 20_000;
    let m = 9;
    let mut counts = vec![0usize; m + 1];
    for t in 0..trials {
        let scen = ScenarioSpec::new("ex4a", 20).with_r(0.0);
        let ds = gen_scenario(&scen, &mut rng_from_seed(derive_seed(31, &[t as u64]))).unwrap();
        let method = ResampleMethod::Crt {
            sampler: oracle_sampler(&scen).unwrap(),
        };
        let plan = ResamplePlan::new(method, m, derive_seed(32, &[t as u64]));
        let res = run_test(&ds, &plan, &EstimatorConfig::default(), 0.05).unwrap();
        let rank = res.resampled.iter().filter(|&&s| s < res.statistic).count();
        counts[rank] += 1;
    }
    let expected = trials as f64 / (m + 1) as f64;
    let chi2: f64 = counts
        .iter()
        .map(|&c| (c as f64 - expected).powi(2) / expected)
        .sum();
    let crit = ChiSquared::new(m as f64).unwrap().inverse_cdf(0.99);
    assert!(chi2 < crit, "chi2 {chi2:.2} >= {crit:.2}: {counts:?}");
}
