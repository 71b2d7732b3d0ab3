mod common;

use dpd_smc::data::{simulate_contaminated_gaussian, Dataset};
use dpd_smc::dpd;
use dpd_smc::models::ParamPoint;
use dpd_smc::smc::{self, InitBox, MhConfig, ParticleSystem, Prior, Proposal, StepDiagnostics};
use dpd_smc::stats;
use dpd_smc::ModelSpec;
use nalgebra::DMatrix;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

fn g() -> ModelSpec {
    ModelSpec::gaussian()
}

fn system(particles: Vec<Vec<f64>>, weights: Vec<f64>, gamma: f64) -> ParticleSystem {
    let n = particles.len();
    ParticleSystem {
        step: 0,
        gamma,
        particles: particles.into_iter().map(ParamPoint::new).collect(),
        weights,
        ancestors: (0..n).collect(),
        rng_seed: 42,
        diagnostics: StepDiagnostics {
            ess: n as f64,
            acceptance_rate: f64::NAN,
            resampled: false,
            fallback_proposal: false,
        },
    }
}

fn toy_data() -> Dataset {
    simulate_contaminated_gaussian(50, 1.0, 1.0, 10.0, 5.0, 3).unwrap()
}

#[test]
fn init_is_uniform_and_deterministic() {
    let d = toy_data();
    let a = smc::init_particles(&g(), &Prior::Flat, &d, 4, 9).unwrap();
    assert!(a.weights.iter().all(|&w| w == 0.25));
    assert_eq!(a.step, 0);
    let b = smc::init_particles(&g(), &Prior::Flat, &d, 4, 9).unwrap();
    assert_eq!((a.particles, a.weights), (b.particles, b.weights));
    assert!(smc::init_particles(&g(), &Prior::Flat, &d, 1, 9).is_err());
}

#[test]
fn flat_prior_draws_stay_in_the_box() {
    let d = toy_data();
    let s = smc::init_particles(&g(), &Prior::Flat, &d, 10_000, 1).unwrap();
    let sd = d.sd();
    for p in &s.particles {
        assert!(p[0] >= d.min() - 2.0 * sd && p[0] <= d.max() + 2.0 * sd);
        assert!(p[1] >= 0.1 * sd && p[1] <= 3.0 * sd && p[1] > 0.0);
    }
    let b = InitBox::from_data(&g(), &Prior::Flat, &d).unwrap();
    assert!(s.particles.iter().all(|p| b.contains(p)));
}

#[test]
fn known_scale_is_fixed_at_init() {
    let d = toy_data();
    let s = smc::init_particles(&g(), &Prior::FlatKnownScale { sigma: 1.0 }, &d, 100, 1).unwrap();
    assert!(s.particles.iter().all(|p| p[1] == 1.0));
}

#[test]
fn incremental_weights_are_potential_differences() {
    let d = Dataset::from_responses(vec![0.0, 0.5]);
    let s = system(vec![vec![0.0, 1.0], vec![0.3, 0.8], vec![-1.0, 2.0]], vec![1.0 / 3.0; 3], 0.5);
    let lw = smc::incremental_log_weights(&g(), &s, 0.6, &d).unwrap();
    for (p, l) in s.particles.iter().zip(&lw) {
        let want = dpd::total_log_potential(&g(), p, 0.6, &d).unwrap()
            - dpd::total_log_potential(&g(), p, 0.5, &d).unwrap();
        assert!((l - want).abs() < 1e-12);
    }
    let same = smc::incremental_log_weights(&g(), &s, 0.5, &d).unwrap();
    assert!(same.iter().all(|&v| v == 0.0));
    let w = stats::normalize_log_weights(&lw).unwrap();
    assert!((w.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    assert!(smc::incremental_log_weights(&g(), &s, 2.5, &d).is_err());
}

#[test]
fn resampling_frequencies() {
    let uniform = system(vec![vec![0.0, 1.0]; 4], vec![0.25; 4], 0.5);
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut counts = [0usize; 4];
    let trials = 100_000 / 4;
    for _ in 0..trials {
        for a in smc::resample_multinomial(&uniform, &mut rng).unwrap().ancestors {
            counts[a] += 1;
        }
    }
    for c in counts {
        assert!((c as f64 / 100_000.0 - 0.25).abs() < 0.005);
    }

    let skew = system(vec![vec![0.0, 1.0]; 2], vec![0.7, 0.3], 0.5);
    let mut first = 0usize;
    for _ in 0..50_000 {
        first += smc::resample_multinomial(&skew, &mut rng)
            .unwrap()
            .ancestors
            .iter()
            .filter(|&&a| a == 0)
            .count();
    }
    assert!((first as f64 / 100_000.0 - 0.7).abs() < 0.01);
}

#[test]
fn resampling_is_unbiased() {
    let xs = [-1.0, 0.5, 2.0, 3.0, 7.0];
    let w = [0.1, 0.4, 0.2, 0.25, 0.05];
    let s = system(xs.iter().map(|&x| vec![x, 1.0]).collect(), w.to_vec(), 0.5);
    let h = |x: f64| x * x;
    let want: f64 = xs.iter().zip(&w).map(|(x, w)| w * h(*x)).sum();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let reps = 20_000;
    let est: Vec<f64> = (0..reps)
        .map(|_| {
            let r = smc::resample_multinomial(&s, &mut rng).unwrap();
            r.particles.iter().map(|p| h(p[0])).sum::<f64>() / xs.len() as f64
        })
        .collect();
    let se = (stats::variance(&est) / reps as f64).sqrt();
    assert!((stats::mean(&est) - want).abs() < 3.0 * se);
}

#[test]
fn proposal_covariance_from_gaussian_draws() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let (s1, s2, rho) = (2.0, 0.5, 0.6);
    let z = Normal::new(0.0, 1.0).unwrap();
    let particles: Vec<Vec<f64>> = (0..10_000)
        .map(|_| {
            let (a, b): (f64, f64) = (z.sample(&mut rng), z.sample(&mut rng));
            vec![1.0 + s1 * a, 3.0 + s2 * (rho * a + (1.0 - rho * rho).sqrt() * b)]
        })
        .collect();
    let s = system(particles, vec![1e-4; 10_000], 0.5);
    let p = smc::adaptive_proposal_cov(&s, &[0, 1]).unwrap();
    let truth = [[s1 * s1, rho * s1 * s2], [rho * s1 * s2, s2 * s2]];
    for a in 0..2 {
        for b in 0..2 {
            assert!((p.sample_cov[(a, b)] - truth[a][b]).abs() < 0.05 * truth[a][b].abs());
        }
    }
    let factor = smc::RW_SCALE / 2f64.sqrt();
    assert!((p.proposal_cov[(0, 0)] - factor * (p.sample_cov[(0, 0)] + 1e-10)).abs() < 1e-12);
}

#[test]
fn tiny_proposal_accepts_and_barely_moves() {
    let d = toy_data();
    let start = smc::init_particles(&g(), &Prior::Flat, &d, 50, 2).unwrap();
    let prop = Proposal::isotropic(vec![0, 1], 1e-12);
    let cfg = MhConfig::with_moves(20);
    let moved = smc::mh_move_with(&g(), &start, 0.3, &d, &Prior::Flat, &cfg, &prop).unwrap();
    assert!(moved.diagnostics.acceptance_rate > 0.9);
    for (a, b) in start.particles.iter().zip(&moved.particles) {
        assert!((a[0] - b[0]).abs() < 1e-9 && (a[1] - b[1]).abs() < 1e-9);
    }
}

#[test]
fn negative_scale_proposals_are_rejected() {
    let d = toy_data();
    let s = system(vec![vec![1.0, 1e-3]; 3], vec![1.0 / 3.0; 3], 0.3);
    // Pushes sigma far below zero with overwhelming probability.
    let cov = DMatrix::from_row_slice(2, 2, &[1e-20, 0.0, 0.0, 1e-20]);
    let prop = Proposal::from_covariance(vec![0, 1], cov).unwrap();
    let moved = smc::mh_move_with(&g(), &s, 0.3, &d, &Prior::Flat, &MhConfig::with_moves(5), &prop);
    assert!(moved.is_ok());
    let wild = Proposal::isotropic(vec![0, 1], 1e3);
    let m = smc::mh_move_with(&g(), &s, 0.3, &d, &Prior::Flat, &MhConfig::with_moves(50), &wild)
        .unwrap();
    assert!(m.particles.iter().all(|p| p[1] > 0.0));
}

#[test]
fn single_chain_mean_matches_flat_prior_posterior() {
    let d = simulate_contaminated_gaussian(30, 1.0, 1.0, 0.0, 0.0, 12).unwrap();
    let prior = Prior::FlatKnownScale { sigma: 1.0 };
    let s = system(vec![vec![d.mean(), 1.0], vec![d.mean() + 0.1, 1.0]], vec![0.5, 0.5], 1e-4);
    let prop = Proposal::isotropic(vec![0], 0.4);
    let cfg = MhConfig::with_moves(1);
    let mut cur = s;
    let mut draws = Vec::new();
    for step in 0..10_000u64 {
        cur.step = step;
        cur = smc::mh_move_with(&g(), &cur, 1e-4, &d, &prior, &cfg, &prop).unwrap();
        draws.push(cur.particles[0][0]);
    }
    // Batch-means standard error accounts for autocorrelation.
    let batches: Vec<f64> = draws.chunks(500).map(stats::mean).collect();
    let se = (stats::variance(&batches) / batches.len() as f64).sqrt();
    assert!((stats::mean(&draws) - d.mean()).abs() < 3.0 * se + 1e-3);
}

#[test]
fn smc_step_contract() {
    let d = toy_data();
    let cfg = MhConfig::with_moves(3);
    let s0 = smc::init_particles(&g(), &Prior::Flat, &d, 200, 7).unwrap();
    let s1 = smc::bridge_to_gamma(&g(), &s0, 0.2, &d, &Prior::Flat, &cfg).unwrap();
    assert_eq!(s1.gamma, 0.2);
    let s2 = smc::smc_step(&g(), &s1, 0.25, &d, &Prior::Flat, &cfg).unwrap();
    assert_eq!(s2.gamma, 0.25);
    assert_eq!(s2.step, s1.step + 1);
    assert!(s2.weights.iter().all(|&w| w == 1.0 / 200.0));
    assert!(s2.ancestors.iter().all(|&a| a < 200));
    let again = smc::smc_step(&g(), &s1, 0.25, &d, &Prior::Flat, &cfg).unwrap();
    assert_eq!(s2, again);

    let same = smc::smc_step(&g(), &s2, 0.25, &d, &Prior::Flat, &cfg).unwrap();
    assert!((same.diagnostics.ess - 200.0).abs() < 1e-9);
}

#[test]
fn ess_policy_keeps_weights_between_resamplings() {
    let d = toy_data();
    let cfg = MhConfig {
        resampling: smc::ResamplePolicy::EssBelow { fraction: 0.5 },
        ..MhConfig::with_moves(2)
    };
    let s0 = smc::init_particles(&g(), &Prior::Flat, &d, 200, 7).unwrap();
    let s1 = smc::bridge_to_gamma(&g(), &s0, 0.2, &d, &Prior::Flat, &cfg).unwrap();
    let s2 = smc::smc_step(&g(), &s1, 0.201, &d, &Prior::Flat, &cfg).unwrap();
    assert!(!s2.diagnostics.resampled);
    assert!(s2.weights.iter().any(|&w| w != 1.0 / 200.0));
    assert!((s2.weights.iter().sum::<f64>() - 1.0).abs() < 1e-10);
}

#[test]
fn thread_count_does_not_change_the_trajectory() {
    let d = toy_data();
    let cfg = MhConfig::with_moves(3);
    let run = || {
        let s0 = smc::init_particles(&g(), &Prior::Flat, &d, 300, 3).unwrap();
        let s1 = smc::bridge_to_gamma(&g(), &s0, 0.1, &d, &Prior::Flat, &cfg).unwrap();
        smc::smc_step(&g(), &s1, 0.15, &d, &Prior::Flat, &cfg).unwrap()
    };
    let a = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap().install(run);
    let b = rayon::ThreadPoolBuilder::new().num_threads(4).build().unwrap().install(run);
    assert_eq!(a, b);
}

#[test]
fn trajectory_dump_layout() {
    let d = toy_data();
    let s = smc::init_particles(&g(), &Prior::Flat, &d, 20, 3).unwrap();
    let csv = smc::trajectory_csv(&[smc::StepRecord::of(&s)], &g().param_names());
    let mut lines = csv.lines();
    assert_eq!(
        lines.next().unwrap(),
        "t,gamma,ess,acceptance_rate,mean_mu,mean_sigma,sd_mu,sd_sigma"
    );
    assert_eq!(lines.next().unwrap().split(',').count(), 8);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(30))]

    #[test]
    fn weights_normalised_after_every_step(seed in 0u64..10_000, g1 in 0.05f64..1.0, g2 in 0.05f64..1.0) {
        let d = simulate_contaminated_gaussian(30, 1.0, 1.0, 20.0, 5.0, seed).unwrap();
        let cfg = MhConfig { resampling: smc::ResamplePolicy::EssBelow { fraction: 0.5 }, ..MhConfig::with_moves(1) };
        let s0 = smc::init_particles(&g(), &Prior::Flat, &d, 64, seed).unwrap();
        let s1 = smc::smc_step(&g(), &s0, g1, &d, &Prior::Flat, &cfg).unwrap();
        let s2 = smc::smc_step(&g(), &s1, g2, &d, &Prior::Flat, &cfg).unwrap();
        for s in [&s1, &s2] {
            prop_assert!((s.weights.iter().sum::<f64>() - 1.0).abs() < 1e-10);
            prop_assert!(s.weights.iter().all(|&w| w >= 0.0));
        }
    }
}
