//! Frequency-domain link model: Rayleigh block fading, power-law path loss
//! and circularly-symmetric complex Gaussian noise.

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};

/// Draws `CN(0, variance)`: real and imaginary parts each `N(0, variance/2)`.
pub fn complex_gaussian<R: Rng + ?Sized>(rng: &mut R, variance: f64) -> Complex64 {
    let scale = (0.5 * variance).sqrt();
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(re * scale, im * scale)
}

/// Average power attenuation `distance^(−alpha)`.
pub fn path_loss(distance: f64, alpha: f64) -> f64 {
    distance.powf(-alpha)
}

/// One hop's per-subcarrier complex gains for a single block.
#[derive(Debug, Clone, PartialEq)]
pub struct HopChannel {
    gains: Vec<Complex64>,
    distance: f64,
    path_loss_exponent: f64,
}

impl HopChannel {
    /// Draws i.i.d. unit-power Rayleigh coefficients on `n_subcarriers` and
    /// applies the path loss of a hop of length `distance`.
    pub fn sample<R: Rng + ?Sized>(
        rng: &mut R,
        n_subcarriers: usize,
        distance: f64,
        alpha: f64,
    ) -> Result<Self> {
        check_distance(distance)?;
        let amp = path_loss(distance, alpha).sqrt();
        let gains = (0..n_subcarriers)
            .map(|_| complex_gaussian(rng, 1.0) * amp)
            .collect();
        Ok(HopChannel {
            gains,
            distance,
            path_loss_exponent: alpha,
        })
    }

    /// Builds a hop from given small-scale coefficients.
    pub fn from_small_scale(small_scale: &[Complex64], distance: f64, alpha: f64) -> Result<Self> {
        check_distance(distance)?;
        let amp = path_loss(distance, alpha).sqrt();
        Ok(HopChannel {
            gains: small_scale.iter().map(|h| h * amp).collect(),
            distance,
            path_loss_exponent: alpha,
        })
    }

    /// Combined gains `h[n]·distance^(−α/2)`.
    pub fn gains(&self) -> &[Complex64] {
        &self.gains
    }

    pub fn power(&self, subcarrier: usize) -> f64 {
        self.gains[subcarrier].norm_sqr()
    }

    pub fn powers(&self) -> impl Iterator<Item = f64> + '_ {
        self.gains.iter().map(|g| g.norm_sqr())
    }

    /// Small-scale coefficients with the path loss divided back out.
    pub fn small_scale(&self) -> Vec<Complex64> {
        let inv = path_loss(self.distance, self.path_loss_exponent).sqrt().recip();
        self.gains.iter().map(|g| g * inv).collect()
    }

    pub fn distance(&self) -> f64 {
        self.distance
    }

    pub fn path_loss_exponent(&self) -> f64 {
        self.path_loss_exponent
    }

    pub fn len(&self) -> usize {
        self.gains.len()
    }

    pub fn is_empty(&self) -> bool {
        self.gains.is_empty()
    }
}

fn check_distance(distance: f64) -> Result<()> {
    if distance > 0.0 && distance.is_finite() {
        Ok(())
    } else {
        Err(Error::param(format!("hop distance must be positive, got {distance}")))
    }
}

/// Complex AWGN with a fixed variance per subcarrier.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseModel {
    variance: f64,
}

impl NoiseModel {
    pub fn new(variance: f64) -> Result<Self> {
        if variance > 0.0 && variance.is_finite() {
            Ok(NoiseModel { variance })
        } else {
            Err(Error::param(format!("noise variance must be positive, got {variance}")))
        }
    }

    pub fn variance(&self) -> f64 {
        self.variance
    }
}

/// `y[n] = gains[n]·x[n] + w[n]` with `w[n] ~ CN(0, σ²)`.
pub fn transmit<R: Rng + ?Sized>(
    block: &[Complex64],
    hop: &HopChannel,
    noise: NoiseModel,
    rng: &mut R,
) -> Vec<Complex64> {
    debug_assert_eq!(block.len(), hop.len());
    block
        .iter()
        .zip(hop.gains())
        .map(|(x, g)| g * x + complex_gaussian(rng, noise.variance))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn rng(seed: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(seed)
    }

    #[test]
    fn rejects_bad_distance() {
        assert!(HopChannel::sample(&mut rng(0), 4, 0.0, 2.0).is_err());
        assert!(HopChannel::sample(&mut rng(0), 4, -1.0, 2.0).is_err());
        assert!(NoiseModel::new(0.0).is_err());
    }

    #[test]
    fn path_loss_values() {
        assert_eq!(path_loss(1.0, 2.0), 1.0);
        assert!((path_loss(5.0, 2.0) - 0.04).abs() < 1e-15);
    }

    #[test]
    fn mean_power_follows_path_loss() {
        let mut r = rng(1);
        let draws = 1_000_000;
        let mut acc = 0.0;
        for _ in 0..draws / 4 {
            let hop = HopChannel::sample(&mut r, 4, 5.0, 2.0).unwrap();
            acc += hop.powers().sum::<f64>();
        }
        let mean = acc / draws as f64;
        assert!((mean / 0.04 - 1.0).abs() < 0.01, "mean {mean}");
    }

    #[test]
    fn noiseless_limit_and_noise_only_power() {
        let mut r = rng(2);
        let hop = HopChannel::sample(&mut r, 4, 1.0, 2.0).unwrap();
        let x = vec![Complex64::new(0.5, -0.25); 4];
        let y = transmit(&x, &hop, NoiseModel::new(1e-30).unwrap(), &mut r);
        for n in 0..4 {
            assert!((y[n] - hop.gains()[n] * x[n]).norm() < 1e-12);
        }

        let zero = vec![Complex64::new(0.0, 0.0); 4];
        let noise = NoiseModel::new(2.5).unwrap();
        let trials = 200_000;
        let mut power = 0.0;
        for _ in 0..trials {
            power += transmit(&zero, &hop, noise, &mut r).iter().map(|v| v.norm_sqr()).sum::<f64>();
        }
        let mean = power / (4 * trials) as f64;
        assert!((mean / 2.5 - 1.0).abs() < 0.01, "mean {mean}");
    }

    #[test]
    fn active_subcarrier_snr_matches_analytic() {
        // Pt = 2, K = 2, distance 5, alpha 2, sigma^2 = 0.5 -> SNR = 1 * 0.04 / 0.5.
        let mut r = rng(3);
        let noise = NoiseModel::new(0.5).unwrap();
        let x = [Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0)];
        let (mut sig, mut noi) = (0.0, 0.0);
        let trials = 1_000_000;
        for _ in 0..trials {
            let hop = HopChannel::sample(&mut r, 2, 5.0, 2.0).unwrap();
            let y = transmit(&x, &hop, noise, &mut r);
            sig += (hop.gains()[0] * x[0]).norm_sqr();
            noi += (y[0] - hop.gains()[0] * x[0]).norm_sqr();
        }
        let snr = sig / noi;
        assert!((snr / 0.08 - 1.0).abs() < 0.01, "snr {snr}");
    }

    #[test]
    fn independent_across_subcarriers_and_hops() {
        let mut r = rng(4);
        let samples = 1_000_000;
        let (mut s01, mut s_hop, mut p0, mut p1) = (0.0, 0.0, 0.0, 0.0);
        let mut prev: Option<Complex64> = None;
        let (mut sp, mut n_hop) = (0.0, 0usize);
        for _ in 0..samples {
            let g = HopChannel::sample(&mut r, 2, 1.0, 2.0).unwrap();
            let g = g.gains();
            s01 += (g[0] * g[1].conj()).re;
            p0 += g[0].norm_sqr();
            p1 += g[1].norm_sqr();
            if let Some(q) = prev {
                s_hop += (g[0] * q.conj()).re;
                sp += g[0].norm_sqr();
                n_hop += 1;
            }
            prev = Some(g[0]);
        }
        let rho_sub = s01 / (p0 * p1).sqrt();
        let rho_hop = s_hop / sp;
        assert!(rho_sub.abs() < 0.01, "{rho_sub}");
        assert!(rho_hop.abs() < 0.01, "{rho_hop} over {n_hop}");
    }

    #[test]
    fn envelope_is_rayleigh_ks() {
        let mut r = rng(5);
        let n = 100_000;
        let mut env: Vec<f64> = (0..n).map(|_| complex_gaussian(&mut r, 1.0).norm()).collect();
        env.sort_by(f64::total_cmp);
        // Unit-power Rayleigh CDF: 1 − exp(−r²).
        let d = env
            .iter()
            .enumerate()
            .map(|(i, &x)| {
                let f = 1.0 - (-x * x).exp();
                (f - i as f64 / n as f64).abs().max(((i + 1) as f64 / n as f64 - f).abs())
            })
            .fold(0.0, f64::max);
        // Asymptotic KS critical value at significance 0.01.
        let critical = 1.628 / (n as f64).sqrt();
        assert!(d < critical, "D = {d}, critical {critical}");
    }

    #[test]
    fn same_seed_same_channels() {
        let a = HopChannel::sample(&mut rng(9), 8, 3.0, 2.0).unwrap();
        let b = HopChannel::sample(&mut rng(9), 8, 3.0, 2.0).unwrap();
        assert_eq!(a, b);
        let back = HopChannel::from_small_scale(&a.small_scale(), 3.0, 2.0).unwrap();
        for (x, y) in back.gains().iter().zip(a.gains()) {
            assert!((x - y).norm() < 1e-12);
        }
    }
}
