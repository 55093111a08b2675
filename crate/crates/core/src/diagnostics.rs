//! Monte Carlo checks of calibration and detection behavior.
//!
//! Each replication draws from its own ChaCha stream keyed by the replication
//! index, so results do not depend on the execution mode or thread count.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::conformal::{split_cp_interval, ScoreBuffer};
use crate::error::Result;
use crate::forecasters::{CusumDetector, CusumParams};
use crate::parallel::{self, Execution};

fn replication_rng(seed: u64, rep: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(rep);
    rng
}

/// Fraction of trials in which a fresh |N(0, 1)| score falls inside the
/// split-conformal band built from `n_cal` exchangeable scores.
pub fn split_cp_coverage(
    n_cal: usize,
    alpha: f64,
    trials: u64,
    seed: u64,
    exec: Execution,
) -> Result<f64> {
    let hits = parallel::map_range(exec, trials, |rep| -> Result<bool> {
        let mut rng = replication_rng(seed, rep);
        let mut draw = || -> f64 { StandardNormal.sample(&mut rng) };
        let scores: Vec<f64> = (0..n_cal).map(|_| draw().abs()).collect();
        let buffer = ScoreBuffer::from_scores(n_cal, scores)?;
        let interval = split_cp_interval(0.0, &buffer, alpha)?;
        Ok(interval.contains(draw()))
    });
    let mut covered = 0u64;
    for h in hits {
        covered += u64::from(h?);
    }
    Ok(covered as f64 / trials as f64)
}

/// For each replication: `params.warmup` N(0, 1) residuals, then residuals
/// from N(`shift`, 1). Returns the 1-based step after the shift at which the
/// detector first alarms, or `None` if it stays quiet for `horizon` steps.
/// Alarms during warm-up are impossible since nothing is monitored yet.
pub fn cusum_detection_delays(
    reps: u64,
    shift: f64,
    params: CusumParams,
    horizon: usize,
    seed: u64,
    exec: Execution,
) -> Result<Vec<Option<usize>>> {
    CusumDetector::new(params)?;
    Ok(parallel::map_range(exec, reps, |rep| {
        let mut rng = replication_rng(seed, rep);
        let mut detector = CusumDetector::new(params).expect("validated above");
        for _ in 0..params.warmup {
            let z: f64 = StandardNormal.sample(&mut rng);
            detector.update(z);
        }
        (1..=horizon).find(|_| {
            let z: f64 = StandardNormal.sample(&mut rng);
            detector.update(shift + z)
        })
    }))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn split_cp_coverage_near_nominal() {
        let c = split_cp_coverage(200, 0.1, 20_000, 3, Execution::default()).unwrap();
        assert!((0.89..=0.91).contains(&c), "coverage {c}");
    }

    #[test]
    fn execution_mode_does_not_change_results() {
        let a = split_cp_coverage(50, 0.2, 2_000, 9, Execution::Sequential).unwrap();
        let b = split_cp_coverage(50, 0.2, 2_000, 9, Execution::default()).unwrap();
        assert_eq!(a, b);
        let p = CusumParams::default();
        let a = cusum_detection_delays(200, 3.0, p, 20, 4, Execution::Sequential).unwrap();
        let b = cusum_detection_delays(200, 3.0, p, 20, 4, Execution::default()).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn large_shift_detected_quickly() {
        let delays = cusum_detection_delays(
            500,
            5.0,
            CusumParams::default(),
            50,
            1,
            Execution::default(),
        )
        .unwrap();
        let fast = delays
            .iter()
            .filter(|d| matches!(d, Some(k) if *k <= 5))
            .count();
        assert!(fast >= 495, "{fast}/500");
    }

    #[test]
    fn no_shift_rarely_alarms_quickly() {
        let delays =
            cusum_detection_delays(500, 0.0, CusumParams::default(), 5, 1, Execution::default())
                .unwrap();
        assert!(delays.iter().filter(|d| d.is_some()).count() < 10);
    }

    #[test]
    fn bad_params_rejected() {
        let p = CusumParams {
            warmup: 10,
            ..CusumParams::default()
        };
        assert!(cusum_detection_delays(1, 5.0, p, 5, 0, Execution::Sequential).is_err());
    }
}
