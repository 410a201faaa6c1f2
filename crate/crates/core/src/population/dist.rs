//! Truncated sampling distributions fitted by moment matching.
//!
//! Table-style measurement data gives the mean, standard deviation and range
//! of the *observed* values. Plugging those directly into a normal and
//! rejecting outside the range would shift the realized mean (truncation is
//! asymmetric here), so the fitter solves for underlying parameters whose
//! truncated distribution reproduces the target moments.
//!
//! Some targets are not reachable at all: no truncated normal on
//! [17.39, 173.50] has sd 40.19 at mean 64.60 (the family's supremum there,
//! the exponential-tilt limit, is ≈ 38.5). In that case the fit matches the
//! mean exactly and gets as close as the family allows on the sd; the
//! realized sd is exposed for reporting.

use rand::Rng;
use serde::{Deserialize, Serialize};
use statrs::function::erf;

use crate::model::{Error, Result};

const SQRT_2: f64 = std::f64::consts::SQRT_2;
const INV_SQRT_2PI: f64 = 0.398_942_280_401_432_7;

fn phi(x: f64) -> f64 {
    INV_SQRT_2PI * (-0.5 * x * x).exp()
}

/// P(lo ≤ Z ≤ hi) for standard normal Z, stable far into either tail.
fn normal_interval_prob(lo: f64, hi: f64) -> f64 {
    debug_assert!(lo <= hi);
    if lo >= 0.0 {
        0.5 * (erf::erfc(lo / SQRT_2) - erf::erfc(hi / SQRT_2))
    } else if hi <= 0.0 {
        0.5 * (erf::erfc(-hi / SQRT_2) - erf::erfc(-lo / SQRT_2))
    } else {
        0.5 * (erf::erf(hi / SQRT_2) - erf::erf(lo / SQRT_2))
    }
}

/// Mean and sd of a normal(mu, sigma) truncated to [lo, hi].
fn truncated_normal_moments(mu: f64, sigma: f64, lo: f64, hi: f64) -> (f64, f64) {
    let a = (lo - mu) / sigma;
    let b = (hi - mu) / sigma;
    let z = normal_interval_prob(a, b);
    let pa = phi(a);
    let pb = phi(b);
    let r1 = (pa - pb) / z;
    let mean = mu + sigma * r1;
    let var = sigma * sigma * (1.0 + (a * pa - b * pb) / z - r1 * r1);
    (mean, var.max(0.0).sqrt())
}

/// Mean and sd of exp(Y) where Y ~ normal(mu, sigma) truncated to [lo, hi]
/// (in log space).
fn truncated_lognormal_moments(mu: f64, sigma: f64, lo: f64, hi: f64) -> (f64, f64) {
    let a = (lo - mu) / sigma;
    let b = (hi - mu) / sigma;
    let z = normal_interval_prob(a, b);
    let e1 = (mu + 0.5 * sigma * sigma).exp() * normal_interval_prob(a - sigma, b - sigma) / z;
    let e2 =
        (2.0 * mu + 2.0 * sigma * sigma).exp() * normal_interval_prob(a - 2.0 * sigma, b - 2.0 * sigma)
            / z;
    (e1, (e2 - e1 * e1).max(0.0).sqrt())
}

/// Damped Newton on (location, ln scale) against target (mean, sd).
/// Returns the fitted (mu, sigma) or None when the residual cannot be
/// driven down (typically: the sd target is outside the family).
fn newton_fit(
    moments: impl Fn(f64, f64) -> (f64, f64),
    target_mean: f64,
    target_sd: f64,
    start: (f64, f64),
    sigma_max: f64,
) -> Option<(f64, f64)> {
    let scale = target_sd.abs().max(target_mean.abs()).max(1e-12);
    let residual = |mu: f64, sigma: f64| -> (f64, f64) {
        let (m, s) = moments(mu, sigma);
        (m - target_mean, s - target_sd)
    };
    let norm = |r: (f64, f64)| (r.0 * r.0 + r.1 * r.1).sqrt();

    let (mut mu, mut sigma) = start;
    let mut r = residual(mu, sigma);
    for _ in 0..200 {
        if norm(r) < 1e-10 * scale {
            return Some((mu, sigma));
        }
        // numeric Jacobian in (mu, t = ln sigma)
        let h_mu = 1e-6 * scale.max(mu.abs());
        let h_t = 1e-6_f64;
        let r_mu = residual(mu + h_mu, sigma);
        let r_t = residual(mu, sigma * h_t.exp());
        let j = [
            [(r_mu.0 - r.0) / h_mu, (r_t.0 - r.0) / h_t],
            [(r_mu.1 - r.1) / h_mu, (r_t.1 - r.1) / h_t],
        ];
        let det = j[0][0] * j[1][1] - j[0][1] * j[1][0];
        if !det.is_finite() || det.abs() < 1e-300 {
            return None;
        }
        let d_mu = (r.0 * j[1][1] - r.1 * j[0][1]) / det;
        let d_t = (j[0][0] * r.1 - j[1][0] * r.0) / det;

        let mut step = 1.0;
        let mut improved = false;
        for _ in 0..30 {
            let mu_n = mu - step * d_mu;
            let sigma_n = (sigma.ln() - step * d_t).exp();
            if sigma_n.is_finite() && sigma_n > 0.0 && sigma_n <= sigma_max {
                let r_n = residual(mu_n, sigma_n);
                if r_n.0.is_finite() && r_n.1.is_finite() && norm(r_n) < norm(r) {
                    mu = mu_n;
                    sigma = sigma_n;
                    r = r_n;
                    improved = true;
                    break;
                }
            }
            step *= 0.5;
        }
        if !improved {
            return None;
        }
    }
    if norm(r) < 1e-8 * scale {
        Some((mu, sigma))
    } else {
        None
    }
}

/// Mean-only fallback: hold sigma at the family's practical ceiling and
/// bisect the location, since the truncated mean is monotone in it.
fn fit_mean_only(
    moments: impl Fn(f64, f64) -> (f64, f64),
    target_mean: f64,
    lo: f64,
    hi: f64,
    sigma: f64,
) -> Result<(f64, f64)> {
    let mut mu_lo = lo - 20.0 * sigma;
    let mut mu_hi = hi + 20.0 * sigma;
    let mean_at = |mu: f64| moments(mu, sigma).0;
    if mean_at(mu_lo) > target_mean || mean_at(mu_hi) < target_mean {
        return Err(Error::FitFailed(format!(
            "target mean {target_mean} not reachable on [{lo}, {hi}]"
        )));
    }
    for _ in 0..200 {
        let mid = 0.5 * (mu_lo + mu_hi);
        if mean_at(mid) < target_mean {
            mu_lo = mid;
        } else {
            mu_hi = mid;
        }
    }
    Ok((0.5 * (mu_lo + mu_hi), sigma))
}

/// Family a truncated distribution is fitted in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum DistFamily {
    #[default]
    Normal,
    LogNormal,
}

impl DistFamily {
    pub fn name(self) -> &'static str {
        match self {
            DistFamily::Normal => "normal",
            DistFamily::LogNormal => "lognormal",
        }
    }

    pub fn parse(s: &str) -> Option<DistFamily> {
        match s {
            "normal" => Some(DistFamily::Normal),
            "lognormal" => Some(DistFamily::LogNormal),
            _ => None,
        }
    }
}

/// A range-truncated distribution with target mean/sd, moment-fitted at
/// construction. Sampling is exact (rejection with a tail-safe fallback)
/// and a pure function of the RNG stream.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TruncatedDist {
    pub family: DistFamily,
    pub mean: f64,
    pub sd: f64,
    pub lo: f64,
    pub hi: f64,
    /// Underlying location/scale. In the lognormal family these live in log
    /// space. `scale == 0` marks a degenerate point mass at `mean`.
    location: f64,
    scale: f64,
    /// Moments the fit actually realizes (== targets unless the sd was out
    /// of the family's reach).
    pub fitted_mean: f64,
    pub fitted_sd: f64,
}

impl TruncatedDist {
    pub fn fit(family: DistFamily, mean: f64, sd: f64, lo: f64, hi: f64) -> Result<TruncatedDist> {
        if !(lo <= hi) {
            return Err(Error::InvalidArgument(format!(
                "truncation range [{lo}, {hi}] has low > high"
            )));
        }
        if !(lo <= mean && mean <= hi) {
            return Err(Error::InvalidArgument(format!(
                "truncation range [{lo}, {hi}] must contain the mean {mean}"
            )));
        }
        if sd < 0.0 {
            return Err(Error::InvalidArgument(format!("sd must be >= 0, got {sd}")));
        }
        if family == DistFamily::LogNormal && lo <= 0.0 {
            return Err(Error::InvalidArgument(
                "lognormal family needs a positive lower bound".into(),
            ));
        }

        if sd == 0.0 || hi == lo {
            return Ok(TruncatedDist {
                family,
                mean,
                sd,
                lo,
                hi,
                location: mean,
                scale: 0.0,
                fitted_mean: mean,
                fitted_sd: 0.0,
            });
        }

        let (location, scale) = match family {
            DistFamily::Normal => {
                let sigma_max = 4.0 * (hi - lo);
                match newton_fit(
                    |mu, s| truncated_normal_moments(mu, s, lo, hi),
                    mean,
                    sd,
                    (mean, sd),
                    sigma_max,
                ) {
                    Some(fit) => fit,
                    None => fit_mean_only(
                        |mu, s| truncated_normal_moments(mu, s, lo, hi),
                        mean,
                        lo,
                        hi,
                        sigma_max,
                    )?,
                }
            }
            DistFamily::LogNormal => {
                let (llo, lhi) = (lo.ln(), hi.ln());
                let sigma_max = 4.0 * (lhi - llo);
                // start from the untruncated-lognormal parameterization
                let cv2 = (sd / mean).powi(2);
                let s0 = (1.0 + cv2).ln().sqrt().max(1e-3);
                let m0 = mean.ln() - 0.5 * s0 * s0;
                match newton_fit(
                    |mu, s| truncated_lognormal_moments(mu, s, llo, lhi),
                    mean,
                    sd,
                    (m0, s0),
                    sigma_max,
                ) {
                    Some(fit) => fit,
                    None => fit_mean_only(
                        |mu, s| truncated_lognormal_moments(mu, s, llo, lhi),
                        mean,
                        llo,
                        lhi,
                        sigma_max,
                    )?,
                }
            }
        };

        let (fitted_mean, fitted_sd) = match family {
            DistFamily::Normal => truncated_normal_moments(location, scale, lo, hi),
            DistFamily::LogNormal => {
                truncated_lognormal_moments(location, scale, lo.ln(), hi.ln())
            }
        };
        Ok(TruncatedDist {
            family,
            mean,
            sd,
            lo,
            hi,
            location,
            scale,
            fitted_mean,
            fitted_sd,
        })
    }

    /// Convenience: default family (truncated normal).
    pub fn normal(mean: f64, sd: f64, lo: f64, hi: f64) -> Result<TruncatedDist> {
        TruncatedDist::fit(DistFamily::Normal, mean, sd, lo, hi)
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        if self.scale == 0.0 {
            return self.mean;
        }
        match self.family {
            DistFamily::Normal => {
                let z = sample_std_truncated(
                    rng,
                    (self.lo - self.location) / self.scale,
                    (self.hi - self.location) / self.scale,
                );
                (self.location + self.scale * z).clamp(self.lo, self.hi)
            }
            DistFamily::LogNormal => {
                let (llo, lhi) = (self.lo.ln(), self.hi.ln());
                let z = sample_std_truncated(
                    rng,
                    (llo - self.location) / self.scale,
                    (lhi - self.location) / self.scale,
                );
                (self.location + self.scale * z).exp().clamp(self.lo, self.hi)
            }
        }
    }
}

/// Sample a standard normal truncated to [a, b]. Plain rejection near the
/// mode; Robert (1995) exponential-proposal rejection when the interval sits
/// deep in one tail, where plain rejection would almost never accept.
fn sample_std_truncated<R: Rng + ?Sized>(rng: &mut R, a: f64, b: f64) -> f64 {
    debug_assert!(a < b);
    if a <= 1.5 && b >= -1.5 {
        // interval touches the bulk; plain rejection is efficient
        loop {
            let z: f64 = rand_distr::StandardNormal.sample(rng);
            if z >= a && z <= b {
                return z;
            }
        }
    }
    if a >= 0.0 {
        tail_sample(rng, a, b)
    } else {
        -tail_sample(rng, -b, -a)
    }
}

/// Robert's one-sided tail sampler for 0 ≤ a < b.
fn tail_sample<R: Rng + ?Sized>(rng: &mut R, a: f64, b: f64) -> f64 {
    use rand_distr::Distribution;
    let lambda = 0.5 * (a + (a * a + 4.0).sqrt());
    let exp = rand_distr::Exp::new(lambda).expect("positive rate");
    loop {
        let x = a + exp.sample(rng);
        if x > b {
            continue;
        }
        let accept = (-0.5 * (x - lambda) * (x - lambda)).exp();
        if rng.random::<f64>() <= accept {
            return x;
        }
    }
}

use rand_distr::Distribution as _;

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn sample_stats(d: &TruncatedDist, n: usize, seed: u64) -> (f64, f64, f64, f64) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let xs: Vec<f64> = (0..n).map(|_| d.sample(&mut rng)).collect();
        let mean = xs.iter().sum::<f64>() / n as f64;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        let min = xs.iter().copied().fold(f64::INFINITY, f64::min);
        let max = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        (mean, var.sqrt(), min, max)
    }

    #[test]
    fn moments_match_numeric_integration() {
        // oracle: midpoint quadrature of the truncated density
        let (mu, sigma, lo, hi) = (3.0, 2.0, 1.0, 8.0);
        let n = 400_000;
        let dx = (hi - lo) / n as f64;
        let mut z = 0.0;
        let mut m1 = 0.0;
        let mut m2 = 0.0;
        for i in 0..n {
            let x: f64 = lo + (i as f64 + 0.5) * dx;
            let f = (-((x - mu) / sigma).powi(2) / 2.0).exp();
            z += f * dx;
            m1 += x * f * dx;
            m2 += x * x * f * dx;
        }
        let mean_oracle = m1 / z;
        let sd_oracle = (m2 / z - mean_oracle * mean_oracle).sqrt();
        let (mean, sd) = truncated_normal_moments(mu, sigma, lo, hi);
        assert!((mean - mean_oracle).abs() < 1e-6, "{mean} vs {mean_oracle}");
        assert!((sd - sd_oracle).abs() < 1e-6, "{sd} vs {sd_oracle}");
    }

    #[test]
    fn internal_count_targets_are_fit_exactly() {
        // Table-1 internal-count stats are inside the family's reach
        let d = TruncatedDist::normal(5.10, 3.15, 1.0, 14.0).unwrap();
        assert!((d.fitted_mean - 5.10).abs() < 1e-8, "{}", d.fitted_mean);
        assert!((d.fitted_sd - 3.15).abs() < 1e-8, "{}", d.fitted_sd);
    }

    #[test]
    fn diameter_targets_get_exact_mean_best_effort_sd() {
        let d = TruncatedDist::normal(64.60, 40.19, 17.39, 173.50).unwrap();
        assert!((d.fitted_mean - 64.60).abs() < 1e-6, "{}", d.fitted_mean);
        // sd 40.19 is above the family supremum (~38.5); fit should land close
        assert!(d.fitted_sd > 37.5, "fitted sd {}", d.fitted_sd);
        assert!(d.fitted_sd <= 40.19);
    }

    #[test]
    fn sampled_moments_track_fit() {
        let d = TruncatedDist::normal(5.10, 3.15, 1.0, 14.0).unwrap();
        let (mean, sd, min, max) = sample_stats(&d, 200_000, 42);
        assert!((mean - 5.10).abs() < 0.03, "mean {mean}");
        assert!((sd - 3.15).abs() < 0.03, "sd {sd}");
        assert!(min >= 1.0 && max <= 14.0);

        let d = TruncatedDist::normal(64.60, 40.19, 17.39, 173.50).unwrap();
        let (mean, sd, min, max) = sample_stats(&d, 200_000, 43);
        assert!((mean - 64.60).abs() < 0.4, "mean {mean}");
        assert!((sd - d.fitted_sd).abs() < 0.3, "sd {sd} vs fit {}", d.fitted_sd);
        assert!(min >= 17.39 && max <= 173.50);
    }

    #[test]
    fn lognormal_family_reaches_the_diameter_sd() {
        let d = TruncatedDist::fit(DistFamily::LogNormal, 64.60, 40.19, 17.39, 173.50).unwrap();
        assert!((d.fitted_mean - 64.60).abs() < 1e-6);
        assert!((d.fitted_sd - 40.19).abs() < 1e-6, "{}", d.fitted_sd);
        let (mean, sd, min, max) = sample_stats(&d, 200_000, 44);
        assert!((mean - 64.60).abs() < 0.4, "mean {mean}");
        assert!((sd - 40.19).abs() < 0.5, "sd {sd}");
        assert!(min >= 17.39 && max <= 173.50);
    }

    #[test]
    fn degenerate_point_mass() {
        let d = TruncatedDist::normal(65.0, 0.0, 17.39, 173.50).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        assert_eq!(d.sample(&mut rng), 65.0);
    }

    #[test]
    fn invalid_ranges_rejected() {
        assert!(TruncatedDist::normal(5.0, 1.0, 10.0, 1.0).is_err());
        assert!(TruncatedDist::normal(20.0, 1.0, 1.0, 10.0).is_err());
        assert!(TruncatedDist::normal(5.0, -1.0, 1.0, 10.0).is_err());
        assert!(TruncatedDist::fit(DistFamily::LogNormal, 5.0, 1.0, -1.0, 10.0).is_err());
    }

    #[test]
    fn tail_sampler_stays_in_range() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..20_000 {
            let z = sample_std_truncated(&mut rng, 6.0, 6.5);
            assert!((6.0..=6.5).contains(&z));
        }
    }

    #[test]
    fn sampling_is_reproducible() {
        let d = TruncatedDist::normal(64.60, 40.19, 17.39, 173.50).unwrap();
        let mut a = ChaCha8Rng::seed_from_u64(5);
        let mut b = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..100 {
            assert_eq!(d.sample(&mut a), d.sample(&mut b));
        }
    }
}
