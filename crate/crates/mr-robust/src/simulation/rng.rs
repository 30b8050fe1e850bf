//! Deterministic random sources for the simulation engine.
//!
//! Every stochastic draw goes through [`SimRng`], a ChaCha12 counter-based
//! generator. Seeding is a single `u64`; each Monte Carlo replicate runs on
//! its own ChaCha stream derived from the replicate index, so experiment
//! results are bit-identical no matter how the replicates are scheduled.
//! Normal deviates are produced by inverting Φ with a fixed rational
//! approximation (about one ulp of accuracy in double precision) instead of
//! rejection or ziggurat sampling, which keeps the draw count per variate
//! constant and the sequences exactly reproducible across platforms.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha12Rng;

use crate::error::{Error, Result};

/// Seeded, stream-splittable random generator for simulations.
#[derive(Debug, Clone)]
pub struct SimRng {
    inner: ChaCha12Rng,
}

impl SimRng {
    /// Generator for config-level draws (stream 0).
    pub fn base(seed: u64) -> Self {
        Self {
            inner: ChaCha12Rng::seed_from_u64(seed),
        }
    }

    /// Generator for one replicate: stream `index + 1` of the seed, so
    /// replicate draws never overlap each other or the base stream.
    pub fn replicate(seed: u64, index: u64) -> Self {
        let mut inner = ChaCha12Rng::seed_from_u64(seed);
        inner.set_stream(index + 1);
        Self { inner }
    }

    /// Uniform draw strictly inside (0, 1): the top 53 bits of a `u64`,
    /// centered on the cell midpoint so 0 and 1 are unreachable.
    pub fn uniform(&mut self) -> f64 {
        let x = self.inner.next_u64();
        ((x >> 11) as f64 + 0.5) * (1.0 / 9_007_199_254_740_992.0)
    }

    /// Uniform draw strictly inside (lo, hi).
    pub fn uniform_in(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.uniform()
    }

    /// Standard normal deviate by inverse-CDF transform.
    pub fn normal(&mut self) -> f64 {
        ppnd16(self.uniform())
    }

    /// Binomial(2, p) draw by quantile inversion of a single uniform.
    ///
    /// `p` must lie in (0, 1); the configuration layer validates that.
    pub fn binomial2(&mut self, p: f64) -> u8 {
        debug_assert!(p > 0.0 && p < 1.0);
        let q = 1.0 - p;
        let t0 = q * q;
        let t1 = t0 + 2.0 * p * q;
        let u = self.uniform();
        if u < t0 {
            0
        } else if u < t1 {
            1
        } else {
            2
        }
    }
}

/// Inverse of the standard normal CDF, Φ⁻¹(p), for p strictly in (0, 1).
///
/// Rational minimax approximations on three regions (central, tail, far
/// tail), accurate to roughly one ulp of double precision.
pub fn inverse_normal_cdf(p: f64) -> Result<f64> {
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::Domain(format!(
            "the inverse normal CDF needs p strictly inside (0, 1), got {p}"
        )));
    }
    Ok(ppnd16(p))
}

// Numerator/denominator coefficients for the three rational approximations;
// denominators have an implicit trailing constant term of 1.
const CENTRAL_NUM: [f64; 8] = [
    3.387_132_872_796_366_608e0,
    1.331_416_678_917_843_774_5e2,
    1.971_590_950_306_551_442_7e3,
    1.373_169_376_550_946_112_5e4,
    4.592_195_393_154_987_145_7e4,
    6.726_577_092_700_870_085_3e4,
    3.343_057_558_358_812_810_5e4,
    2.509_080_928_730_122_672_7e3,
];
const CENTRAL_DEN: [f64; 7] = [
    4.231_333_070_160_091_125_2e1,
    6.871_870_074_920_579_083e2,
    5.394_196_021_424_751_107_7e3,
    2.121_379_430_158_659_586_7e4,
    3.930_789_580_009_271_061e4,
    2.872_908_573_572_194_267_4e4,
    5.226_495_278_852_854_561e3,
];
const TAIL_NUM: [f64; 8] = [
    1.423_437_110_749_683_577_34e0,
    4.630_337_846_156_545_295_9e0,
    5.769_497_221_460_691_405_5e0,
    3.647_848_324_763_204_605_04e0,
    1.270_458_252_452_368_382_58e0,
    2.417_807_251_774_506_117_7e-1,
    2.272_384_498_926_918_458_33e-2,
    7.745_450_142_783_414_076_4e-4,
];
const TAIL_DEN: [f64; 7] = [
    2.053_191_626_637_758_821_87e0,
    1.676_384_830_183_803_849_4e0,
    6.897_673_349_851_000_045_5e-1,
    1.481_039_764_274_800_745_9e-1,
    1.519_866_656_361_645_719_66e-2,
    5.475_938_084_995_344_946e-4,
    1.050_750_071_644_416_843_24e-9,
];
const FAR_TAIL_NUM: [f64; 8] = [
    6.657_904_643_501_103_777_2e0,
    5.463_784_911_164_114_369_9e0,
    1.784_826_539_917_291_335_8e0,
    2.965_605_718_285_048_912_3e-1,
    2.653_218_952_657_612_309_3e-2,
    1.242_660_947_388_078_438_6e-3,
    2.711_555_568_743_487_578_15e-5,
    2.010_334_399_292_288_132_65e-7,
];
const FAR_TAIL_DEN: [f64; 7] = [
    5.998_322_065_558_879_376_9e-1,
    1.369_298_809_227_358_053_1e-1,
    1.487_536_129_085_061_485_25e-2,
    7.868_691_311_456_132_591e-4,
    1.846_318_317_510_054_681_8e-5,
    1.421_511_758_316_445_888_7e-7,
    2.044_263_103_389_939_785_64e-15,
];

fn rational(num: &[f64; 8], den: &[f64; 7], r: f64) -> f64 {
    let mut n = num[7];
    for &c in num[..7].iter().rev() {
        n = n * r + c;
    }
    let mut d = den[6];
    for &c in den[..6].iter().rev() {
        d = d * r + c;
    }
    n / (d * r + 1.0)
}

fn ppnd16(p: f64) -> f64 {
    let q = p - 0.5;
    if q.abs() <= 0.425 {
        let r = 0.180_625 - q * q;
        return q * rational(&CENTRAL_NUM, &CENTRAL_DEN, r);
    }
    let tail_p = if q < 0.0 { p } else { 1.0 - p };
    let r = (-tail_p.ln()).sqrt();
    let x = if r <= 5.0 {
        rational(&TAIL_NUM, &TAIL_DEN, r - 1.6)
    } else {
        rational(&FAR_TAIL_NUM, &FAR_TAIL_DEN, r - 5.0)
    };
    if q < 0.0 {
        -x
    } else {
        x
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use statrs::distribution::{ContinuousCDF, Normal};

    #[test]
    fn inverse_normal_cdf_matches_frozen_references() {
        // Reference quantiles computed independently to 17 digits.
        let cases = [
            (0.5, 0.0),
            (0.975, 1.9599639845400539),
            (0.9, 1.2815515655446006),
            (0.01, -2.3263478740408411),
            (1e-8, -5.6120012441747887),
            (0.3, -0.52440051270804082),
            (0.9999999999, 6.3613408896974219),
            (0.6827, 0.47526233751529845),
        ];
        for (p, expected) in cases {
            let got = inverse_normal_cdf(p).unwrap();
            if expected == 0.0 {
                assert_eq!(got, 0.0);
            } else {
                assert_relative_eq!(got, expected, max_relative = 1e-14);
            }
        }
    }

    #[test]
    fn inverse_normal_cdf_agrees_with_independent_implementation() {
        let normal = Normal::new(0.0, 1.0).unwrap();
        let mut p = 1e-12;
        while p < 1.0 {
            let ours = inverse_normal_cdf(p).unwrap();
            let theirs = normal.inverse_cdf(p);
            assert_relative_eq!(ours, theirs, max_relative = 1e-7, epsilon = 1e-8);
            // Round trip through the reference CDF. The tolerance reflects
            // the reference's own tail accuracy (~1e-10 relative); agreement
            // with high-precision values to 1e-14 is checked above.
            assert_relative_eq!(normal.cdf(ours), p, max_relative = 1e-9);
            p *= 3.7;
        }
    }

    #[test]
    fn inverse_normal_cdf_is_antisymmetric() {
        // Moderate p: 1 − p carries at most an ulp of representation error,
        // which the flat slope of Φ⁻¹ keeps far inside the tolerance.
        for p in [0.001, 0.05, 0.2, 0.4, 0.49, 0.0001] {
            let lower = inverse_normal_cdf(p).unwrap();
            let upper = inverse_normal_cdf(1.0 - p).unwrap();
            assert_relative_eq!(lower, -upper, max_relative = 1e-12, epsilon = 1e-13);
        }
        // Deep tail: dyadic p make 1 − p exactly representable, so both
        // evaluations traverse identical arithmetic and must mirror to
        // machine precision. (For generic tiny p the float representation
        // of 1 − p alone shifts Φ⁻¹ by ~ulp(1)/φ(z), not a property of the
        // algorithm.)
        for exponent in [-20, -30, -40] {
            let p = 2f64.powi(exponent);
            let lower = inverse_normal_cdf(p).unwrap();
            let upper = inverse_normal_cdf(1.0 - p).unwrap();
            assert_relative_eq!(lower, -upper, max_relative = 1e-15);
        }
    }

    #[test]
    fn inverse_normal_cdf_rejects_the_boundary() {
        for p in [0.0, 1.0, -0.1, 1.1, f64::NAN] {
            assert!(matches!(inverse_normal_cdf(p), Err(Error::Domain(_))));
        }
    }

    #[test]
    fn uniform_draws_stay_strictly_inside_the_unit_interval() {
        let mut rng = SimRng::base(7);
        let mut sum = 0.0;
        let n = 100_000;
        for _ in 0..n {
            let u = rng.uniform();
            assert!(u > 0.0 && u < 1.0);
            sum += u;
        }
        let mean = sum / n as f64;
        assert!((mean - 0.5).abs() < 0.005, "uniform mean {mean} suspicious");
    }

    #[test]
    fn streams_are_deterministic_and_independent() {
        let mut a = SimRng::replicate(42, 3);
        let mut b = SimRng::replicate(42, 3);
        let first: Vec<f64> = (0..32).map(|_| a.uniform()).collect();
        let second: Vec<f64> = (0..32).map(|_| b.uniform()).collect();
        assert_eq!(first, second, "same seed and stream must be bit-identical");

        let mut c = SimRng::replicate(42, 4);
        let third: Vec<f64> = (0..32).map(|_| c.uniform()).collect();
        assert_ne!(first, third, "different streams must diverge");

        let mut d = SimRng::base(42);
        let fourth: Vec<f64> = (0..32).map(|_| d.uniform()).collect();
        assert_ne!(first, fourth, "base stream is distinct from replicate streams");
    }

    #[test]
    fn binomial2_frequencies_match_hardy_weinberg() {
        let p = 0.3;
        let mut rng = SimRng::base(2024);
        let n = 200_000;
        let mut counts = [0usize; 3];
        for _ in 0..n {
            counts[rng.binomial2(p) as usize] += 1;
        }
        let expected = [0.49, 0.42, 0.09];
        for (k, &e) in expected.iter().enumerate() {
            let freq = counts[k] as f64 / n as f64;
            assert!(
                (freq - e).abs() < 0.005,
                "genotype {k}: frequency {freq} vs expected {e}"
            );
        }
    }

    #[test]
    fn normal_draws_have_standard_moments() {
        let mut rng = SimRng::base(99);
        let n = 100_000;
        let mut sum = 0.0;
        let mut sum_sq = 0.0;
        for _ in 0..n {
            let z = rng.normal();
            sum += z;
            sum_sq += z * z;
        }
        let mean = sum / n as f64;
        let var = sum_sq / n as f64 - mean * mean;
        assert!(mean.abs() < 4.0 / (n as f64).sqrt(), "normal mean {mean}");
        assert!((var - 1.0).abs() < 0.02, "normal variance {var}");
    }
}
