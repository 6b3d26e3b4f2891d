//! Truncated distribution sampling, analytic CDFs, and Monte Carlo
//! expectation machinery for the random variables `f`, `t`, `c`, `r`.
//!
//! All randomness flows through [`RngStream`]: a (master seed, label) pair
//! that deterministically derives an independent ChaCha stream. Per-sample
//! sub-streams are derived from (seed, label, sample index), so Monte Carlo
//! batches are order-independent and safe to evaluate in parallel.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use rand_distr::{Distribution, Exp, Normal};
use rayon::prelude::*;
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::model::{Realization, Scenario};

/// A reproducible, labeled random stream derived from a master seed.
///
/// Distinct labels yield statistically independent streams: the ChaCha key is
/// the SHA-256 of `(master_seed, label)`. The same (seed, label) always
/// produces the same sample sequence.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RngStream {
    master_seed: u64,
    label: String,
}

impl RngStream {
    pub fn new(master_seed: u64, label: impl Into<String>) -> Self {
        Self {
            master_seed,
            label: label.into(),
        }
    }

    pub fn master_seed(&self) -> u64 {
        self.master_seed
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    /// Derives a sub-stream labeled `"{label}/{suffix}"`.
    pub fn child(&self, suffix: &str) -> Self {
        Self {
            master_seed: self.master_seed,
            label: format!("{}/{}", self.label, suffix),
        }
    }

    /// Derives the per-sample sub-stream `"{label}#{index}"`.
    pub fn indexed(&self, index: usize) -> Self {
        Self {
            master_seed: self.master_seed,
            label: format!("{}#{}", self.label, index),
        }
    }

    /// Materializes the stream as a ChaCha generator positioned at the start.
    pub fn rng(&self) -> ChaCha12Rng {
        let mut hasher = Sha256::new();
        hasher.update(self.master_seed.to_le_bytes());
        hasher.update([0u8]);
        hasher.update(self.label.as_bytes());
        let key: [u8; 32] = hasher.finalize().into();
        ChaCha12Rng::from_seed(key)
    }

    /// Collapses the stream to a plain 64-bit seed, for generator APIs that
    /// take an integer seed.
    pub fn seed_u64(&self) -> u64 {
        let mut rng = self.rng();
        rng.gen()
    }
}

/// Gaussian draw clamped into `[lo, hi]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TruncGaussian {
    pub mean: f64,
    pub var: f64,
    pub lo: f64,
    pub hi: f64,
}

impl TruncGaussian {
    pub fn new(mean: f64, var: f64, lo: f64, hi: f64) -> Result<Self> {
        if var <= 0.0 || !var.is_finite() {
            return Err(Error::InvalidDistribution(format!(
                "gaussian variance must be positive and finite, got {var}"
            )));
        }
        if !lo.is_finite() || !hi.is_finite() || lo >= hi {
            return Err(Error::InvalidDistribution(format!(
                "gaussian clamp bounds must be finite with lo < hi, got [{lo}, {hi}]"
            )));
        }
        if !mean.is_finite() {
            return Err(Error::InvalidDistribution(format!(
                "gaussian mean must be finite, got {mean}"
            )));
        }
        Ok(Self { mean, var, lo, hi })
    }

    /// Draws from Normal(mean, var) and clamps into `[lo, hi]`.
    ///
    /// Clamping, not rejection: out-of-range draws saturate at the bounds.
    pub fn sample(&self, rng: &mut impl Rng) -> f64 {
        let normal = Normal::new(self.mean, self.var.sqrt()).expect("validated at construction");
        normal.sample(rng).clamp(self.lo, self.hi)
    }
}

/// Exponential draw clamped into `[0, hi]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TruncExponential {
    pub mean: f64,
    pub hi: f64,
}

impl TruncExponential {
    pub fn new(mean: f64, hi: f64) -> Result<Self> {
        if mean <= 0.0 || !mean.is_finite() {
            return Err(Error::InvalidDistribution(format!(
                "exponential mean must be positive and finite, got {mean}"
            )));
        }
        if hi <= 0.0 || !hi.is_finite() {
            return Err(Error::InvalidDistribution(format!(
                "exponential clamp bound must be positive and finite, got {hi}"
            )));
        }
        Ok(Self { mean, hi })
    }

    pub fn sample(&self, rng: &mut impl Rng) -> f64 {
        let exp = Exp::new(1.0 / self.mean).expect("validated at construction");
        exp.sample(rng).clamp(0.0, self.hi)
    }

    /// P(t < w) for the clamped variable: `1 - exp(-w/mean)` below the clamp,
    /// 1 beyond it (clamped values never exceed `hi`).
    pub fn cdf_below(&self, w: f64) -> Result<f64> {
        if w < 0.0 || !w.is_finite() {
            return Err(Error::NegativeDuration(w));
        }
        if w > self.hi {
            return Ok(1.0);
        }
        Ok(1.0 - (-w / self.mean).exp())
    }
}

/// Probability that a contact duration drawn from `d` falls short of `w`.
pub fn cdf_contact_below(w: f64, d: &TruncExponential) -> Result<f64> {
    d.cdf_below(w)
}

/// One concrete draw of every random variable in the scenario.
///
/// Per-vehicle values are drawn in vehicle id order (f then r), per-edge
/// values in canonical edge order (t then c), all from the given stream.
pub fn realize(s: &Scenario, stream: &RngStream) -> Realization {
    let mut rng = stream.rng();
    let clips = &s.clips;
    let mut f = Vec::with_capacity(s.cloud.vehicles.len());
    let mut r = Vec::with_capacity(s.cloud.vehicles.len());
    for v in &s.cloud.vehicles {
        let df = TruncGaussian::new(v.f_mean_ghz, v.f_var_ghz2, clips.f_lo_ghz, clips.f_hi_ghz)
            .expect("scenario validation guarantees vehicle parameters");
        f.push(df.sample(&mut rng));
        let dr = TruncGaussian::new(v.r_mean_mbps, v.r_var_mbps2, clips.r_lo_mbps, clips.r_hi_mbps)
            .expect("scenario validation guarantees vehicle parameters");
        r.push(dr.sample(&mut rng));
    }
    let mut t = Vec::with_capacity(s.cloud.edges.len());
    let mut c = Vec::with_capacity(s.cloud.edges.len());
    for e in &s.cloud.edges {
        let dt = TruncExponential::new(e.t_mean_s, clips.t_hi_s)
            .expect("scenario validation guarantees edge parameters");
        t.push(dt.sample(&mut rng));
        let dc = TruncGaussian::new(e.c_mean, e.c_var, clips.c_lo, clips.c_hi)
            .expect("scenario validation guarantees edge parameters");
        c.push(dc.sample(&mut rng));
    }
    Realization::new(f, r, t, c, s).expect("clamped draws always lie inside the clip bounds")
}

/// Draws `n` independent realizations via per-index sub-streams.
///
/// Sample `i` comes from `stream.indexed(i)`, so the result is independent of
/// evaluation order and identical whether drawn in parallel or sequentially.
pub fn draw_realizations(s: &Scenario, stream: &RngStream, n: usize) -> Vec<Realization> {
    (0..n)
        .into_par_iter()
        .map(|i| realize(s, &stream.indexed(i)))
        .collect()
}

/// A Monte Carlo estimate with its sample standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McEstimate {
    pub mean: f64,
    pub std_error: f64,
    pub n_samples: usize,
}

/// Monte Carlo expectation of `eval` over `n_samples` realizations of `s`.
///
/// Errors if `n_samples` is zero or `eval` returns a non-finite value (the
/// diagnostic names the offending sample index).
pub fn mc_expectation<F>(
    eval: F,
    s: &Scenario,
    n_samples: usize,
    stream: &RngStream,
) -> Result<McEstimate>
where
    F: Fn(&Realization) -> f64 + Sync,
{
    if n_samples == 0 {
        return Err(Error::NoSamples);
    }
    let values: Vec<f64> = (0..n_samples)
        .into_par_iter()
        .map(|i| eval(&realize(s, &stream.indexed(i))))
        .collect();
    for (index, &value) in values.iter().enumerate() {
        if !value.is_finite() {
            return Err(Error::NonFiniteSample { index, value });
        }
    }
    // Sequential reduction keeps the result bit-identical across runs.
    let n = n_samples as f64;
    let mean = values.iter().sum::<f64>() / n;
    let std_error = if n_samples > 1 {
        let ss = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>();
        (ss / (n - 1.0)).sqrt() / n.sqrt()
    } else {
        0.0
    };
    Ok(McEstimate {
        mean,
        std_error,
        n_samples,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::test_fixtures::small_scenario;

    #[test]
    fn streams_are_reproducible_and_label_sensitive() {
        let a = RngStream::new(7, "event:1");
        let b = RngStream::new(7, "event:1");
        let c = RngStream::new(7, "event:2");
        let mut ra = a.rng();
        let mut rb = b.rng();
        let mut rc = c.rng();
        let xa: u64 = ra.gen();
        assert_eq!(xa, rb.gen::<u64>());
        assert_ne!(xa, rc.gen::<u64>());
        assert_ne!(RngStream::new(8, "event:1").seed_u64(), a.seed_u64());
    }

    #[test]
    fn degenerate_variance_collapses_to_mean() {
        let d = TruncGaussian::new(3.0, 1e-18, 1.5, 4.5).unwrap();
        let mut rng = RngStream::new(1, "t").rng();
        for _ in 0..100 {
            assert!((d.sample(&mut rng) - 3.0).abs() < 1e-6);
        }
    }

    #[test]
    fn far_out_mean_saturates_at_clamp() {
        let d = TruncGaussian::new(10.0, 0.04, 4.0, 8.0).unwrap();
        let mut rng = RngStream::new(2, "t").rng();
        for _ in 0..100 {
            assert_eq!(d.sample(&mut rng), 8.0);
        }
    }

    #[test]
    fn gaussian_sample_mean_matches() {
        let d = TruncGaussian::new(3.0, 0.05, 1.5, 4.5).unwrap();
        let mut rng = RngStream::new(3, "t").rng();
        let n = 100_000;
        let mean = (0..n).map(|_| d.sample(&mut rng)).sum::<f64>() / n as f64;
        assert!((mean - 3.0).abs() < 0.01, "sample mean {mean}");
    }

    #[test]
    fn gaussian_rejects_bad_parameters() {
        assert!(TruncGaussian::new(3.0, 0.0, 1.5, 4.5).is_err());
        assert!(TruncGaussian::new(3.0, -1.0, 1.5, 4.5).is_err());
        assert!(TruncGaussian::new(3.0, 1.0, 4.5, 1.5).is_err());
        assert!(TruncGaussian::new(f64::NAN, 1.0, 1.5, 4.5).is_err());
    }

    #[test]
    fn exponential_clamp_statistics() {
        let d = TruncExponential::new(10.0, 60.0).unwrap();
        let mut rng = RngStream::new(4, "t").rng();
        let n = 100_000;
        let samples: Vec<f64> = (0..n).map(|_| d.sample(&mut rng)).collect();
        let mean = samples.iter().sum::<f64>() / n as f64;
        // clamped mean = mu * (1 - exp(-hi/mu))
        let expected = 10.0 * (1.0 - (-6.0f64).exp());
        assert!((mean - expected).abs() < 0.1, "mean {mean} vs {expected}");
        let at_cap = samples.iter().filter(|&&x| x == 60.0).count() as f64 / n as f64;
        let p_cap = (-6.0f64).exp();
        assert!((at_cap - p_cap).abs() < 0.002, "cap frequency {at_cap}");
    }

    #[test]
    fn tiny_mean_collapses_to_zero() {
        let d = TruncExponential::new(1e-12, 60.0).unwrap();
        let mut rng = RngStream::new(5, "t").rng();
        for _ in 0..100 {
            assert!(d.sample(&mut rng) < 1e-9);
        }
    }

    #[test]
    fn contact_cdf_closed_form() {
        let d = TruncExponential::new(10.0, 60.0).unwrap();
        assert_eq!(cdf_contact_below(0.0, &d).unwrap(), 0.0);
        let p = cdf_contact_below(2.0, &d).unwrap();
        assert!((p - (1.0 - (-0.2f64).exp())).abs() < 1e-12);
        assert!((p - 0.18127).abs() < 1e-5);
        assert_eq!(cdf_contact_below(61.0, &d).unwrap(), 1.0);
        assert!(cdf_contact_below(-1.0, &d).is_err());
    }

    #[test]
    fn contact_cdf_is_monotone() {
        let d = TruncExponential::new(8.0, 60.0).unwrap();
        let mut prev = 0.0;
        for i in 0..200 {
            let w = i as f64 * 0.4;
            let p = cdf_contact_below(w, &d).unwrap();
            assert!(p >= prev);
            assert!((0.0..=1.0).contains(&p));
            prev = p;
        }
    }

    #[test]
    fn realize_is_deterministic_and_clipped() {
        let s = small_scenario();
        let stream = RngStream::new(11, "event:3");
        let a = realize(&s, &stream);
        let b = realize(&s, &stream);
        assert_eq!(a, b);
        for &x in &a.f {
            assert!(x >= s.clips.f_lo_ghz && x <= s.clips.f_hi_ghz);
        }
        for &x in &a.r {
            assert!(x >= s.clips.r_lo_mbps && x <= s.clips.r_hi_mbps);
        }
        for &x in &a.t {
            assert!(x >= s.clips.t_lo_s && x <= s.clips.t_hi_s);
        }
        for &x in &a.c {
            assert!(x >= s.clips.c_lo && x <= s.clips.c_hi);
        }
        assert_eq!(a.f.len(), s.cloud.vehicles.len());
        assert_eq!(a.t.len(), s.cloud.edges.len());
        let other = realize(&s, &RngStream::new(11, "event:4"));
        assert_ne!(a, other);
    }

    #[test]
    fn contact_draws_match_analytic_cdf() {
        // Kolmogorov-Smirnov distance between 10^4 realized t draws on one
        // edge and the closed-form CDF.
        let s = small_scenario();
        let edge = 0;
        let mean = s.cloud.edges[edge].t_mean_s;
        let d = TruncExponential::new(mean, s.clips.t_hi_s).unwrap();
        let stream = RngStream::new(13, "ks");
        let n = 10_000;
        let mut draws: Vec<f64> = (0..n)
            .map(|i| realize(&s, &stream.indexed(i)).t[edge])
            .collect();
        draws.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let mut ks: f64 = 0.0;
        for (i, &x) in draws.iter().enumerate() {
            let fx = d.cdf_below(x.min(d.hi)).unwrap();
            let lo = i as f64 / n as f64;
            let hi = (i + 1) as f64 / n as f64;
            ks = ks.max((fx - lo).abs()).max((fx - hi).abs());
        }
        assert!(ks < 0.02, "KS distance {ks}");
    }

    #[test]
    fn mc_constant_is_exact() {
        let s = small_scenario();
        let est = mc_expectation(|_| 1.0, &s, 64, &RngStream::new(1, "mc")).unwrap();
        assert_eq!(est.mean, 1.0);
        assert_eq!(est.std_error, 0.0);
    }

    #[test]
    fn mc_edge_mean_matches_clamped_exponential() {
        let mut s = small_scenario();
        s.cloud.edges[0].t_mean_s = 10.0;
        let est = mc_expectation(|real| real.t[0], &s, 100_000, &RngStream::new(2, "mc")).unwrap();
        let expected = 10.0 * (1.0 - (-6.0f64).exp());
        assert!((est.mean - expected).abs() < 0.1, "mean {}", est.mean);
    }

    #[test]
    fn mc_std_error_scales_with_sample_count() {
        let s = small_scenario();
        let e1 = mc_expectation(|real| real.t[0], &s, 20_000, &RngStream::new(3, "mc")).unwrap();
        let e2 = mc_expectation(|real| real.t[0], &s, 40_000, &RngStream::new(3, "mc")).unwrap();
        let ratio = e1.std_error / e2.std_error;
        assert!((1.2..=1.7).contains(&ratio), "ratio {ratio}");
    }

    #[test]
    fn mc_rejects_non_finite_eval() {
        let s = small_scenario();
        let err = mc_expectation(
            |real| {
                if real.t[0] > 1.0 {
                    f64::NAN
                } else {
                    0.0
                }
            },
            &s,
            100,
            &RngStream::new(4, "mc"),
        )
        .unwrap_err();
        match err {
            Error::NonFiniteSample { index, .. } => {
                // the diagnostic names the first offending sample
                let bad = draw_realizations(&s, &RngStream::new(4, "mc"), 100)
                    .iter()
                    .position(|real| real.t[0] > 1.0)
                    .unwrap();
                assert_eq!(index, bad);
            }
            other => panic!("unexpected error {other:?}"),
        }
        assert!(matches!(
            mc_expectation(|_| 0.0, &s, 0, &RngStream::new(4, "mc")),
            Err(Error::NoSamples)
        ));
    }

    #[test]
    fn mc_indicator_matches_analytic_probability() {
        // Indicator of a contact shortfall vs the analytic CDF, within 4
        // standard errors.
        let s = small_scenario();
        let mean = s.cloud.edges[1].t_mean_s;
        let d = TruncExponential::new(mean, s.clips.t_hi_s).unwrap();
        for (seed, w) in [(21u64, 3.0), (22, 8.0), (23, 14.0)] {
            let est = mc_expectation(
                |real| if real.t[1] < w { 1.0 } else { 0.0 },
                &s,
                20_000,
                &RngStream::new(seed, "mc"),
            )
            .unwrap();
            let p = d.cdf_below(w).unwrap();
            let tol = 4.0 * est.std_error.max(1e-4);
            assert!(
                (est.mean - p).abs() <= tol,
                "seed {seed}: {} vs {p} (tol {tol})",
                est.mean
            );
        }
    }
}
