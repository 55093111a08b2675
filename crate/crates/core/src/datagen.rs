//! Seeded synthetic generators: Markov regime chains, switching AR(1) series
//! and Lorenz-63 trajectories.
//!
//! Every generator is a pure function of its spec. Regime draws and noise draws
//! come from separate ChaCha streams of the same seed, so changing noise
//! levels never changes the regime path.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::series::TimeSeries;

const REGIME_STREAM: u64 = 0;
const NOISE_STREAM: u64 = 1;

fn stream(seed: u64, id: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(id);
    rng
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MarkovChainSpec {
    /// Row-stochastic `K x K` matrix; row `i` is the law of the next regime given `i`.
    pub transition: Vec<Vec<f64>>,
    pub initial: Vec<f64>,
}

impl MarkovChainSpec {
    pub fn num_regimes(&self) -> usize {
        self.initial.len()
    }

    pub fn validate(&self) -> Result<()> {
        let k = self.initial.len();
        if k == 0 {
            return Err(Error::InvalidParameter(
                "chain needs at least one regime".into(),
            ));
        }
        check_probabilities("initial distribution", &self.initial)?;
        if self.transition.len() != k {
            return Err(Error::InvalidParameter(format!(
                "transition matrix has {} rows for {k} regimes",
                self.transition.len()
            )));
        }
        for (i, row) in self.transition.iter().enumerate() {
            if row.len() != k {
                return Err(Error::InvalidParameter(format!(
                    "transition row {i} has {} entries, expected {k}",
                    row.len()
                )));
            }
            check_probabilities(&format!("transition row {i}"), row)?;
        }
        Ok(())
    }
}

fn check_probabilities(what: &str, p: &[f64]) -> Result<()> {
    if p.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
        return Err(Error::InvalidParameter(format!(
            "{what} has negative or non-finite entries: {p:?}"
        )));
    }
    let sum: f64 = p.iter().sum();
    if (sum - 1.0).abs() > 1e-12 {
        return Err(Error::InvalidParameter(format!(
            "{what} sums to {sum}, not 1"
        )));
    }
    Ok(())
}

fn draw_categorical(rng: &mut ChaCha8Rng, probs: &[f64]) -> usize {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    for (i, p) in probs.iter().enumerate() {
        acc += p;
        if u < acc {
            return i;
        }
    }
    // u landed in the rounding gap above the cumulative sum
    probs.iter().rposition(|&p| p > 0.0).unwrap_or(0)
}

fn regimes_from(spec: &MarkovChainSpec, len: usize, rng: &mut ChaCha8Rng) -> Vec<usize> {
    let mut out = Vec::with_capacity(len);
    if len == 0 {
        return out;
    }
    let mut d = draw_categorical(rng, &spec.initial);
    out.push(d);
    for _ in 1..len {
        d = draw_categorical(rng, &spec.transition[d]);
        out.push(d);
    }
    out
}

/// Regime path `d_0, ..., d_{len-1}` (0-based regime ids).
pub fn sample_regimes(spec: &MarkovChainSpec, len: usize, seed: u64) -> Result<Vec<usize>> {
    spec.validate()?;
    Ok(regimes_from(spec, len, &mut stream(seed, REGIME_STREAM)))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ArRegime {
    pub intercept: f64,
    pub coefficient: f64,
    pub sigma: f64,
}

impl ArRegime {
    pub fn stationary_mean(&self) -> f64 {
        self.intercept / (1.0 - self.coefficient)
    }
}

/// `y_t = c_{d_t} + phi_{d_t} * y_{t-1} + sigma_{d_t} * eps_t`, starting from `y_0 = initial_value`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SwitchingArSpec {
    pub regimes: Vec<ArRegime>,
    pub chain: MarkovChainSpec,
    pub length: usize,
    pub initial_value: f64,
    pub seed: u64,
}

impl Default for SwitchingArSpec {
    fn default() -> Self {
        Self {
            regimes: vec![
                ArRegime {
                    intercept: 0.0,
                    coefficient: 0.9,
                    sigma: 0.1,
                },
                ArRegime {
                    intercept: 2.0,
                    coefficient: -0.5,
                    sigma: 0.4,
                },
            ],
            chain: MarkovChainSpec {
                transition: vec![vec![0.99, 0.01], vec![0.02, 0.98]],
                initial: vec![1.0, 0.0],
            },
            length: 3000,
            initial_value: 0.0,
            seed: 7,
        }
    }
}

impl SwitchingArSpec {
    pub fn validate(&self) -> Result<()> {
        self.chain.validate()?;
        if self.regimes.len() != self.chain.num_regimes() {
            return Err(Error::InvalidParameter(format!(
                "{} AR regimes for a {}-state chain",
                self.regimes.len(),
                self.chain.num_regimes()
            )));
        }
        for (k, r) in self.regimes.iter().enumerate() {
            if !(r.coefficient.abs() < 1.0) {
                return Err(Error::InvalidParameter(format!(
                    "regime {k}: |coefficient| must be < 1, got {}",
                    r.coefficient
                )));
            }
            if !(r.sigma >= 0.0 && r.sigma.is_finite()) || !r.intercept.is_finite() {
                return Err(Error::InvalidParameter(format!(
                    "regime {k}: bad intercept/sigma {r:?}"
                )));
            }
        }
        if self.length == 0 || !self.initial_value.is_finite() {
            return Err(Error::InvalidParameter(
                "length must be positive and initial_value finite".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Generated {
    pub series: TimeSeries,
    /// Ground-truth regimes, for diagnostics only.
    pub regimes: Option<Vec<usize>>,
}

/// Switching AR(1) series plus its regime path.
pub fn generate_toy(spec: &SwitchingArSpec) -> Result<(TimeSeries, Vec<usize>)> {
    spec.validate()?;
    let regimes = regimes_from(
        &spec.chain,
        spec.length,
        &mut stream(spec.seed, REGIME_STREAM),
    );
    let mut noise = stream(spec.seed, NOISE_STREAM);
    let mut values = Vec::with_capacity(spec.length);
    values.push(spec.initial_value);
    for &d in &regimes[1..] {
        let eps: f64 = noise.sample(StandardNormal);
        let r = &spec.regimes[d];
        let prev = *values.last().expect("seeded with y_0");
        values.push(r.intercept + r.coefficient * prev + r.sigma * eps);
    }
    Ok((TimeSeries::new(values)?, regimes))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LorenzSpec {
    pub sigma: f64,
    pub rho: f64,
    pub beta: f64,
    pub dt: f64,
    pub initial: [f64; 3],
    /// Number of emitted points.
    pub length: usize,
    /// Integration steps between emitted points.
    pub subsample: usize,
    pub obs_noise: f64,
    pub seed: u64,
}

impl Default for LorenzSpec {
    fn default() -> Self {
        Self {
            sigma: 10.0,
            rho: 28.0,
            beta: 8.0 / 3.0,
            dt: 0.01,
            initial: [1.0, 1.0, 1.0],
            length: 10_000,
            subsample: 5,
            obs_noise: 0.01,
            seed: 7,
        }
    }
}

impl LorenzSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "dt must be > 0, got {}",
                self.dt
            )));
        }
        if self.subsample == 0 || self.length == 0 {
            return Err(Error::InvalidParameter(
                "subsample and length must be >= 1".into(),
            ));
        }
        if !(self.obs_noise >= 0.0 && self.obs_noise.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "obs_noise must be >= 0, got {}",
                self.obs_noise
            )));
        }
        if [self.sigma, self.rho, self.beta]
            .iter()
            .chain(&self.initial)
            .any(|v| !v.is_finite())
        {
            return Err(Error::InvalidParameter(
                "Lorenz parameters and initial state must be finite".into(),
            ));
        }
        Ok(())
    }
}

pub fn lorenz_derivative(state: [f64; 3], sigma: f64, rho: f64, beta: f64) -> [f64; 3] {
    let [x, y, z] = state;
    [sigma * (y - x), x * (rho - z) - y, x * y - beta * z]
}

/// One classical fourth-order Runge-Kutta step.
pub fn rk4_step<const N: usize>(
    f: impl Fn([f64; N]) -> [f64; N],
    state: [f64; N],
    dt: f64,
) -> [f64; N] {
    let axpy = |a: [f64; N], k: [f64; N], h: f64| {
        let mut out = a;
        for i in 0..N {
            out[i] += h * k[i];
        }
        out
    };
    let k1 = f(state);
    let k2 = f(axpy(state, k1, dt / 2.0));
    let k3 = f(axpy(state, k2, dt / 2.0));
    let k4 = f(axpy(state, k3, dt));
    let mut out = state;
    for i in 0..N {
        out[i] += dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    }
    out
}

/// Integrates the Lorenz system for `steps` RK4 steps of size `dt`.
pub fn integrate_lorenz(
    spec: &LorenzSpec,
    state: [f64; 3],
    dt: f64,
    steps: usize,
) -> Result<[f64; 3]> {
    let f = |s| lorenz_derivative(s, spec.sigma, spec.rho, spec.beta);
    let mut s = state;
    for step in 0..steps {
        s = rk4_step(f, s, dt);
        if s.iter().any(|v| !v.is_finite()) {
            return Err(Error::NumericBlowup { step: step + 1 });
        }
    }
    Ok(s)
}

/// Step-halving convergence ratio of the integrator over `[0, horizon]`.
///
/// Integrates at `dt`, `dt / 2` and `dt / 4`, takes the largest componentwise
/// gap between neighbouring resolutions at the coarse sample times, and
/// returns `gap(dt, dt/2) / gap(dt/2, dt/4)`. A fourth-order scheme gives
/// about 16 as long as the horizon stays short of chaotic divergence.
pub fn self_convergence_ratio(spec: &LorenzSpec, dt: f64, horizon: f64) -> Result<f64> {
    let steps = (horizon / dt).round() as usize;
    let (mut coarse, mut mid, mut fine) = (spec.initial, spec.initial, spec.initial);
    let (mut gap_coarse, mut gap_fine) = (0.0f64, 0.0f64);
    for _ in 0..steps {
        coarse = integrate_lorenz(spec, coarse, dt, 1)?;
        mid = integrate_lorenz(spec, mid, dt / 2.0, 2)?;
        fine = integrate_lorenz(spec, fine, dt / 4.0, 4)?;
        for i in 0..3 {
            gap_coarse = gap_coarse.max((coarse[i] - mid[i]).abs());
            gap_fine = gap_fine.max((mid[i] - fine[i]).abs());
        }
    }
    Ok(gap_coarse / gap_fine)
}

/// x-coordinate sampled every `subsample` RK4 steps, plus optional Gaussian noise.
pub fn generate_lorenz(spec: &LorenzSpec) -> Result<TimeSeries> {
    spec.validate()?;
    let f = |s| lorenz_derivative(s, spec.sigma, spec.rho, spec.beta);
    let mut noise = stream(spec.seed, NOISE_STREAM);
    let mut state = spec.initial;
    let mut values = Vec::with_capacity(spec.length);
    let mut step = 0usize;
    for _ in 0..spec.length {
        for _ in 0..spec.subsample {
            state = rk4_step(f, state, spec.dt);
            step += 1;
            if state.iter().any(|v| !v.is_finite()) {
                return Err(Error::NumericBlowup { step });
            }
        }
        let eps: f64 = noise.sample(StandardNormal);
        values.push(state[0] + spec.obs_noise * eps);
    }
    TimeSeries::new(values)
}

/// Generator spec file: `{"kind": "toy", ...}` or `{"kind": "lorenz", ...}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum GeneratorSpec {
    Toy(SwitchingArSpec),
    Lorenz(LorenzSpec),
}

impl GeneratorSpec {
    pub fn name(&self) -> &'static str {
        match self {
            GeneratorSpec::Toy(_) => "toy",
            GeneratorSpec::Lorenz(_) => "lorenz",
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        match &mut self {
            GeneratorSpec::Toy(s) => s.seed = seed,
            GeneratorSpec::Lorenz(s) => s.seed = seed,
        }
        self
    }

    pub fn generate(&self) -> Result<Generated> {
        match self {
            GeneratorSpec::Toy(spec) => {
                let (series, regimes) = generate_toy(spec)?;
                Ok(Generated {
                    series,
                    regimes: Some(regimes),
                })
            }
            GeneratorSpec::Lorenz(spec) => Ok(Generated {
                series: generate_lorenz(spec)?,
                regimes: None,
            }),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_state() -> MarkovChainSpec {
        MarkovChainSpec {
            transition: vec![vec![0.99, 0.01], vec![0.02, 0.98]],
            initial: vec![0.5, 0.5],
        }
    }

    #[test]
    fn identity_chain_is_absorbing() {
        let spec = MarkovChainSpec {
            transition: vec![vec![1.0, 0.0], vec![0.0, 1.0]],
            initial: vec![1.0, 0.0],
        };
        assert!(sample_regimes(&spec, 500, 3)
            .unwrap()
            .iter()
            .all(|&d| d == 0));
        let second = MarkovChainSpec {
            initial: vec![0.0, 1.0],
            ..spec
        };
        for seed in 0..50 {
            assert_eq!(sample_regimes(&second, 1, seed).unwrap()[0], 1);
        }
    }

    #[test]
    fn empirical_transitions_match() {
        let spec = two_state();
        let d = sample_regimes(&spec, 100_000, 12345).unwrap();
        let mut counts = [[0usize; 2]; 2];
        for w in d.windows(2) {
            counts[w[0]][w[1]] += 1;
        }
        for i in 0..2 {
            let total = (counts[i][0] + counts[i][1]) as f64;
            for j in 0..2 {
                let freq = counts[i][j] as f64 / total;
                assert!(
                    (freq - spec.transition[i][j]).abs() < 0.005,
                    "P[{i}][{j}] ~ {freq}"
                );
            }
        }
    }

    #[test]
    fn invalid_chains_rejected() {
        let bad_row = MarkovChainSpec {
            transition: vec![vec![0.5, 0.4], vec![0.5, 0.5]],
            initial: vec![1.0, 0.0],
        };
        assert!(sample_regimes(&bad_row, 10, 0).is_err());
        let negative = MarkovChainSpec {
            transition: vec![vec![1.5, -0.5], vec![0.5, 0.5]],
            initial: vec![1.0, 0.0],
        };
        assert!(sample_regimes(&negative, 10, 0).is_err());
        let bad_init = MarkovChainSpec {
            initial: vec![0.3, 0.3],
            ..two_state()
        };
        assert!(sample_regimes(&bad_init, 10, 0).is_err());
    }

    #[test]
    fn deterministic_toy_recursion() {
        let spec = SwitchingArSpec {
            regimes: vec![ArRegime {
                intercept: 0.0,
                coefficient: 0.5,
                sigma: 0.0,
            }],
            chain: MarkovChainSpec {
                transition: vec![vec![1.0]],
                initial: vec![1.0],
            },
            length: 5,
            initial_value: 1.0,
            seed: 0,
        };
        let (s, _) = generate_toy(&spec).unwrap();
        assert_eq!(s.values(), &[1.0, 0.5, 0.25, 0.125, 0.0625]);
    }

    #[test]
    fn identity_chain_equals_plain_ar1() {
        let spec = SwitchingArSpec {
            chain: MarkovChainSpec {
                transition: vec![vec![1.0, 0.0], vec![0.0, 1.0]],
                initial: vec![1.0, 0.0],
            },
            length: 400,
            seed: 21,
            ..Default::default()
        };
        let (s, d) = generate_toy(&spec).unwrap();
        assert!(d.iter().all(|&k| k == 0));
        // Same noise stream, one regime only.
        let mut noise = stream(21, NOISE_STREAM);
        let mut y = 0.0;
        for t in 1..400 {
            let eps: f64 = noise.sample(StandardNormal);
            y = 0.9 * y + 0.1 * eps;
            assert_eq!(s.values()[t], y);
        }
    }

    #[test]
    fn regimes_independent_of_noise_level() {
        let base = SwitchingArSpec::default();
        let mut louder = base.clone();
        for r in &mut louder.regimes {
            r.sigma *= 3.0;
        }
        let (a, da) = generate_toy(&base).unwrap();
        let (b, db) = generate_toy(&louder).unwrap();
        assert_eq!(da, db);
        assert_ne!(a.values(), b.values());
    }

    #[test]
    fn within_regime_means() {
        let spec = SwitchingArSpec::default();
        let (s, d) = generate_toy(&spec).unwrap();
        assert_eq!(s.len(), 3000);
        for (k, regime) in spec.regimes.iter().enumerate() {
            let vals: Vec<f64> = s
                .values()
                .iter()
                .zip(&d)
                .filter(|(_, &r)| r == k)
                .map(|(v, _)| *v)
                .collect();
            assert!(vals.len() > 100, "regime {k} visited {} times", vals.len());
            let mean = vals.iter().sum::<f64>() / vals.len() as f64;
            let target = regime.stationary_mean();
            assert!(
                (mean - target).abs() < 0.15,
                "regime {k}: mean {mean} vs {target}"
            );
        }
    }

    #[test]
    fn lorenz_fixed_points() {
        assert_eq!(lorenz_derivative([0.0; 3], 10.0, 28.0, 8.0 / 3.0), [0.0; 3]);
        let (rho, beta) = (28.0, 8.0 / 3.0);
        let c = (beta * (rho - 1.0f64)).sqrt();
        let d = lorenz_derivative([c, c, rho - 1.0], 10.0, rho, beta);
        assert!(d.iter().all(|v| v.abs() < 1e-9), "{d:?}");
        let once = lorenz_derivative([1.0, 3.0, 2.0], 10.0, rho, beta);
        let twice = lorenz_derivative([1.0, 3.0, 2.0], 20.0, rho, beta);
        assert_eq!(twice[0], 2.0 * once[0]);
    }

    #[test]
    fn rk4_scalar_growth() {
        let y = rk4_step(|s: [f64; 1]| s, [1.0], 0.1)[0];
        assert!((y - 1.10517083).abs() < 1e-8);
        assert!((y - 0.1f64.exp()).abs() < 1e-7);
    }

    #[test]
    fn lorenz_self_convergence() {
        let spec = LorenzSpec::default();
        for dt in [0.02, 0.01, 0.005] {
            let ratio = self_convergence_ratio(&spec, dt, 2.0).unwrap();
            assert!((12.0..=20.0).contains(&ratio), "dt {dt}: ratio {ratio}");
        }
    }

    #[test]
    fn lorenz_shape_and_determinism() {
        let spec = LorenzSpec::default();
        let a = generate_lorenz(&spec).unwrap();
        assert_eq!(a.len(), 10_000);
        let quiet = LorenzSpec {
            obs_noise: 0.0,
            length: 500,
            ..spec.clone()
        };
        let (x, y) = (
            generate_lorenz(&quiet).unwrap(),
            generate_lorenz(&quiet).unwrap(),
        );
        assert_eq!(x, y);
        assert_eq!(a, generate_lorenz(&spec).unwrap());
    }

    #[test]
    fn lorenz_blow_up_names_step() {
        let spec = LorenzSpec {
            dt: 10.0,
            length: 100,
            ..Default::default()
        };
        assert!(matches!(
            generate_lorenz(&spec),
            Err(Error::NumericBlowup { .. })
        ));
        assert!(generate_lorenz(&LorenzSpec {
            dt: 0.0,
            ..Default::default()
        })
        .is_err());
    }

    #[test]
    fn spec_json_defaults_and_unknown_keys() {
        let toy: GeneratorSpec = serde_json::from_str(r#"{"kind":"toy"}"#).unwrap();
        assert_eq!(toy, GeneratorSpec::Toy(SwitchingArSpec::default()));
        let lz: GeneratorSpec = serde_json::from_str(r#"{"kind":"lorenz","dt":0.005}"#).unwrap();
        let GeneratorSpec::Lorenz(l) = lz else {
            panic!()
        };
        assert_eq!(l.dt, 0.005);
        assert!(serde_json::from_str::<GeneratorSpec>(r#"{"kind":"toy","lenght":5}"#).is_err());
    }
}
