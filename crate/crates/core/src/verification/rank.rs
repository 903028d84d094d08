//! Multivariate rank histograms and the reliability index.

use crate::linalg::Vec2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

/// Rank of the observation within `ensemble ∪ {obs}`, in `1..=M+1`.
///
/// Each pooled vector gets a pre-rank: the number of pooled vectors that are
/// componentwise `≤` it (itself included). The observation's rank is the
/// position of its pre-rank among all pre-ranks, with ties resolved
/// uniformly at random.
pub fn multivariate_rank(ensemble: &[Vec2], obs: Vec2, rng_seed: u64) -> usize {
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    multivariate_rank_with(ensemble, obs, &mut rng)
}

pub fn multivariate_rank_with<R: Rng + ?Sized>(ensemble: &[Vec2], obs: Vec2, rng: &mut R) -> usize {
    let below = |u: Vec2, v: Vec2| v[0] <= u[0] && v[1] <= u[1];
    let pre_rank = |u: Vec2| {
        ensemble.iter().filter(|&&v| below(u, v)).count() + usize::from(below(u, obs))
    };
    let obs_pre = pre_rank(obs);
    let mut lower = 0usize;
    let mut ties = 1usize; // the observation itself
    for &f in ensemble {
        let p = pre_rank(f);
        if p < obs_pre {
            lower += 1;
        } else if p == obs_pre {
            ties += 1;
        }
    }
    lower + 1 + rng.random_range(0..ties)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RankHistogram {
    pub counts: Vec<u64>,
}

impl RankHistogram {
    /// Empty histogram with `bins = M + 1` bins.
    pub fn new(bins: usize) -> Self {
        Self { counts: vec![0; bins] }
    }

    pub fn from_ranks(bins: usize, ranks: impl IntoIterator<Item = usize>) -> Self {
        let mut h = Self::new(bins);
        for r in ranks {
            h.add(r);
        }
        h
    }

    /// Record a 1-based rank.
    pub fn add(&mut self, rank: usize) {
        self.counts[rank - 1] += 1;
    }

    pub fn merge(&mut self, other: &RankHistogram) {
        for (a, b) in self.counts.iter_mut().zip(&other.counts) {
            *a += b;
        }
    }

    pub fn bins(&self) -> usize {
        self.counts.len()
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    pub fn relative_freqs(&self) -> Vec<f64> {
        let t = self.total() as f64;
        self.counts.iter().map(|&c| c as f64 / t).collect()
    }
}

/// `Δ = Σ_r |ρ_r − 1/(M+1)|`. `NaN` for an empty histogram.
pub fn reliability_index(hist: &RankHistogram) -> f64 {
    if hist.total() == 0 {
        return f64::NAN;
    }
    let uniform = 1.0 / hist.bins() as f64;
    hist.relative_freqs().iter().map(|r| (r - uniform).abs()).sum()
}

/// Rank histogram of observations against samples drawn from each case's
/// predictive law. `sampler(case_index, n, seed)` must return `n` draws;
/// the histogram has `samples_per_case + 1` bins.
pub fn rank_histogram_for_law<S>(sampler: S, obs: &[Vec2], samples_per_case: usize, seed: u64) -> RankHistogram
where
    S: Fn(usize, usize, u64) -> Vec<Vec2>,
{
    let mut hist = RankHistogram::new(samples_per_case + 1);
    for (i, &o) in obs.iter().enumerate() {
        let case_seed = case_seed(seed, i as u64);
        let ens = sampler(i, samples_per_case, case_seed);
        hist.add(multivariate_rank(&ens, o, case_seed ^ 0x9e37_79b9_7f4a_7c15));
    }
    hist
}

/// Deterministic per-case seed derived from a run seed.
pub fn case_seed(seed: u64, index: u64) -> u64 {
    // splitmix64 finalizer
    let mut z = seed.wrapping_add(index.wrapping_add(1).wrapping_mul(0x9e37_79b9_7f4a_7c15));
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}
