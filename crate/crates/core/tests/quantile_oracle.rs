use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use switchcal::conformal::{empirical_quantile, ScoreBuffer};

/// Sort, then take the k-th smallest with k = ceil((n + 1) * level).
fn oracle(scores: &[f64], level: f64) -> f64 {
    let mut s = scores.to_vec();
    s.sort_by(f64::total_cmp);
    let k = ((s.len() + 1) as f64 * level - 1e-9).ceil();
    if k <= 0.0 {
        0.0
    } else if k as usize > s.len() {
        f64::INFINITY
    } else {
        s[k as usize - 1]
    }
}

#[test]
fn matches_brute_force_for_every_rank() {
    let mut rng = ChaCha8Rng::seed_from_u64(500);
    for n in 1..=500usize {
        let scores: Vec<f64> = (0..n).map(|_| rng.random::<f64>() * 10.0).collect();
        let buffer = ScoreBuffer::from_scores(n, scores.clone()).unwrap();
        // Levels hitting each rank exactly, plus the two out-of-range ends.
        for k in 0..=n + 1 {
            let level = k as f64 / (n + 1) as f64;
            assert_eq!(
                empirical_quantile(&buffer, level).unwrap(),
                oracle(&scores, level),
                "n={n} k={k}"
            );
        }
        let level: f64 = rng.random();
        assert_eq!(
            empirical_quantile(&buffer, level).unwrap(),
            oracle(&scores, level)
        );
    }
}
