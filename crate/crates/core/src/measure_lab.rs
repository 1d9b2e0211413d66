//! The Bernoulli-shift universe: points of `[0, 1)` as explicit binary digit
//! sequences, the doubling map acting on them, orbit statistics, and product
//! measures on cylinder sets.
//!
//! Points are never stored as `f64`: the doubling map discards one mantissa
//! bit per step, so after 53 iterations a binary64 orbit carries no
//! information about the seed. All statistics here work on exact digits.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use rand::distr::{Bernoulli, Distribution};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MeasureError {
    #[error("value {numerator}/{denominator} is outside [0, 1)")]
    NotInUnitInterval { numerator: u64, denominator: u64 },
    #[error("denominator must be positive")]
    ZeroDenominator,
    #[error("requested {requested} digits but the sequence holds {available}")]
    TooShort { requested: usize, available: usize },
    #[error("sequence is empty")]
    Empty,
    #[error("invalid digit {0:?}; expected '0' or '1'")]
    InvalidDigit(char),
    #[error("digit index must be positive (indices start at 1)")]
    ZeroIndex,
    #[error("index {0} is constrained twice")]
    DuplicateIndex(usize),
    #[error("digit probability {0} is outside [0, 1]")]
    InvalidAlpha(f64),
}

/// A finite prefix of the binary expansion of a point in `[0, 1)`.
///
/// Digit `k` (0-based) is the coefficient of `2^-(k+1)`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct BitSequence {
    digits: Vec<u8>,
}

impl BitSequence {
    pub fn from_digits(digits: Vec<u8>) -> Result<Self, MeasureError> {
        if let Some(&d) = digits.iter().find(|&&d| d > 1) {
            return Err(MeasureError::InvalidDigit(char::from(b'0' + d.min(9))));
        }
        Ok(Self { digits })
    }

    pub fn zeros(n: usize) -> Self {
        Self { digits: vec![0; n] }
    }

    pub fn len(&self) -> usize {
        self.digits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.digits.is_empty()
    }

    pub fn digits(&self) -> &[u8] {
        &self.digits
    }

    pub fn count_zeros(&self, n: usize) -> Result<usize, MeasureError> {
        self.check_len(n)?;
        Ok(self.digits[..n].iter().filter(|&&d| d == 0).count())
    }

    fn check_len(&self, n: usize) -> Result<(), MeasureError> {
        if n > self.digits.len() {
            Err(MeasureError::TooShort {
                requested: n,
                available: self.digits.len(),
            })
        } else {
            Ok(())
        }
    }
}

impl fmt::Display for BitSequence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s: String = self.digits.iter().map(|&d| char::from(b'0' + d)).collect();
        f.write_str(&s)
    }
}

impl FromStr for BitSequence {
    type Err = MeasureError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let digits = s
            .chars()
            .map(|c| match c {
                '0' => Ok(0),
                '1' => Ok(1),
                other => Err(MeasureError::InvalidDigit(other)),
            })
            .collect::<Result<Vec<u8>, _>>()?;
        Ok(Self { digits })
    }
}

impl Serialize for BitSequence {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for BitSequence {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// A cylinder set: finitely many digit positions (1-based) pinned to fixed values.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct CylinderConstraint {
    constraints: BTreeMap<usize, u8>,
}

impl CylinderConstraint {
    pub fn new<I>(pairs: I) -> Result<Self, MeasureError>
    where
        I: IntoIterator<Item = (usize, u8)>,
    {
        let mut constraints = BTreeMap::new();
        for (index, digit) in pairs {
            if index == 0 {
                return Err(MeasureError::ZeroIndex);
            }
            if digit > 1 {
                return Err(MeasureError::InvalidDigit(char::from(b'0' + digit.min(9))));
            }
            if constraints.insert(index, digit).is_some() {
                return Err(MeasureError::DuplicateIndex(index));
            }
        }
        Ok(Self { constraints })
    }

    /// Returns a copy with one more pinned digit.
    pub fn with(&self, index: usize, digit: u8) -> Result<Self, MeasureError> {
        Self::new(self.iter().chain(std::iter::once((index, digit))))
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, u8)> + '_ {
        self.constraints.iter().map(|(&i, &d)| (i, d))
    }

    pub fn len(&self) -> usize {
        self.constraints.len()
    }

    pub fn is_empty(&self) -> bool {
        self.constraints.is_empty()
    }

    pub fn contains_index(&self, index: usize) -> bool {
        self.constraints.contains_key(&index)
    }

    /// Whether a sequence lies in the cylinder. Positions beyond the
    /// sequence length count as unmatched.
    pub fn matches(&self, seq: &BitSequence) -> bool {
        self.iter()
            .all(|(i, d)| seq.digits().get(i - 1).is_some_and(|&x| x == d))
    }
}

/// I.i.d. digit law: each digit is 0 with probability `alpha`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DigitMeasure {
    alpha: f64,
}

impl DigitMeasure {
    pub fn new(alpha: f64) -> Result<Self, MeasureError> {
        if (0.0..=1.0).contains(&alpha) {
            Ok(Self { alpha })
        } else {
            Err(MeasureError::InvalidAlpha(alpha))
        }
    }

    /// Lebesgue measure on `[0, 1)` in digit form.
    pub fn lebesgue() -> Self {
        Self { alpha: 0.5 }
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }
}

/// First `n` binary digits of `numerator / denominator`.
///
/// Dyadic rationals get the expansion ending in zeros.
pub fn expand_rational(
    numerator: u64,
    denominator: u64,
    n: usize,
) -> Result<BitSequence, MeasureError> {
    if denominator == 0 {
        return Err(MeasureError::ZeroDenominator);
    }
    if numerator >= denominator {
        return Err(MeasureError::NotInUnitInterval {
            numerator,
            denominator,
        });
    }
    let den = u128::from(denominator);
    let mut rem = u128::from(numerator);
    let digits = (0..n)
        .map(|_| {
            rem *= 2;
            if rem >= den {
                rem -= den;
                1
            } else {
                0
            }
        })
        .collect();
    Ok(BitSequence { digits })
}

/// One application of the doubling map `a -> 2a mod 1`: drop the leading digit.
pub fn bernoulli_step(s: &BitSequence) -> Result<BitSequence, MeasureError> {
    match s.digits.split_first() {
        Some((_, rest)) => Ok(BitSequence {
            digits: rest.to_vec(),
        }),
        None => Err(MeasureError::Empty),
    }
}

/// Fraction of zero digits among the first `n`, which is also the fraction
/// of the first `n` orbit points that fall in `[0, 1/2)`.
pub fn orbit_zero_frequency(seed: &BitSequence, n: usize) -> Result<f64, MeasureError> {
    if n == 0 {
        return Err(MeasureError::TooShort {
            requested: 0,
            available: seed.len(),
        });
    }
    Ok(seed.count_zeros(n)? as f64 / n as f64)
}

/// Finite-`n` estimate of the limiting zero frequency with a crude
/// convergence diagnostic.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FrequencyEstimate {
    pub n: usize,
    pub frequency: f64,
    pub half_frequency: f64,
}

impl FrequencyEstimate {
    /// `|freq(n) - freq(n/2)|`.
    pub fn drift(&self) -> f64 {
        (self.frequency - self.half_frequency).abs()
    }
}

pub fn estimate_frequency(seed: &BitSequence, n: usize) -> Result<FrequencyEstimate, MeasureError> {
    let frequency = orbit_zero_frequency(seed, n)?;
    let half_frequency = orbit_zero_frequency(seed, (n / 2).max(1))?;
    Ok(FrequencyEstimate {
        n,
        frequency,
        half_frequency,
    })
}

/// `alpha^p (1 - alpha)^q` for `p` pinned zeros and `q` pinned ones.
pub fn cylinder_measure(c: &CylinderConstraint, m: &DigitMeasure) -> f64 {
    let zeros = c.iter().filter(|&(_, d)| d == 0).count();
    let ones = c.len() - zeros;
    m.alpha.powi(zeros as i32) * (1.0 - m.alpha).powi(ones as i32)
}

/// `n` i.i.d. digits under `m`, reproducible from `seed` on every platform
/// (ChaCha8 stream).
pub fn sample_sequence(m: &DigitMeasure, n: usize, seed: u64) -> BitSequence {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    // alpha is validated on construction, so this cannot fail
    let zero = Bernoulli::new(m.alpha).expect("alpha in [0, 1]");
    let digits = (0..n).map(|_| u8::from(!zero.sample(&mut rng))).collect();
    BitSequence { digits }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn seq(s: &str) -> BitSequence {
        s.parse().unwrap()
    }

    #[test]
    fn expands_rationals() {
        assert_eq!(expand_rational(1, 3, 8).unwrap().to_string(), "01010101");
        assert_eq!(expand_rational(2, 7, 9).unwrap().to_string(), "010010010");
        assert_eq!(expand_rational(1, 2, 4).unwrap().to_string(), "1000");
        assert_eq!(expand_rational(0, 5, 3).unwrap().to_string(), "000");
        assert!(matches!(
            expand_rational(3, 3, 4),
            Err(MeasureError::NotInUnitInterval { .. })
        ));
        assert_eq!(expand_rational(1, 0, 4), Err(MeasureError::ZeroDenominator));
    }

    #[test]
    fn large_denominators_do_not_overflow() {
        let s = expand_rational(u64::MAX - 1, u64::MAX, 64).unwrap();
        assert_eq!(s.len(), 64);
        assert_eq!(s.digits()[0], 1);
    }

    #[test]
    fn shift_drops_leading_digit() {
        assert_eq!(bernoulli_step(&seq("0110")).unwrap(), seq("110"));
        assert_eq!(bernoulli_step(&seq("0000")).unwrap(), seq("000"));
        let once = bernoulli_step(&seq("010101")).unwrap();
        assert_eq!(once, seq("10101"));
        assert_eq!(bernoulli_step(&once).unwrap(), seq("0101"));
        assert_eq!(
            bernoulli_step(&BitSequence::default()),
            Err(MeasureError::Empty)
        );
    }

    #[test]
    fn rational_orbit_frequencies() {
        let third = expand_rational(1, 3, 1000).unwrap();
        assert_eq!(orbit_zero_frequency(&third, 1000).unwrap(), 0.5);
        let two_sevenths = expand_rational(2, 7, 999).unwrap();
        assert!((orbit_zero_frequency(&two_sevenths, 999).unwrap() - 2.0 / 3.0).abs() < 1e-15);
        assert_eq!(
            orbit_zero_frequency(&BitSequence::zeros(100), 100).unwrap(),
            1.0
        );
        assert!(orbit_zero_frequency(&third, 1001).is_err());
    }

    #[test]
    fn frequency_estimate_reports_drift() {
        let e = estimate_frequency(&expand_rational(1, 3, 1000).unwrap(), 1000).unwrap();
        assert_eq!(e.drift(), 0.0);
    }

    /// Brute-force oracle: sum product weights over all prefixes of length
    /// `k` that satisfy the constraint.
    fn enumerate_measure(c: &CylinderConstraint, alpha: f64, k: usize) -> f64 {
        (0u32..(1 << k))
            .map(|bits| {
                let digits: Vec<u8> = (0..k).map(|i| ((bits >> i) & 1) as u8).collect();
                let s = BitSequence::from_digits(digits).unwrap();
                if c.matches(&s) {
                    s.digits()
                        .iter()
                        .map(|&d| if d == 0 { alpha } else { 1.0 - alpha })
                        .product::<f64>()
                } else {
                    0.0
                }
            })
            .sum()
    }

    #[test]
    fn cylinder_measure_examples() {
        let single = CylinderConstraint::new([(1, 0)]).unwrap();
        assert_eq!(cylinder_measure(&single, &DigitMeasure::lebesgue()), 0.5);
        let whole = CylinderConstraint::default();
        assert_eq!(
            cylinder_measure(&whole, &DigitMeasure::new(0.3).unwrap()),
            1.0
        );
        let pair = CylinderConstraint::new([(1, 0), (3, 1)]).unwrap();
        let m = DigitMeasure::new(0.7).unwrap();
        let oracle = enumerate_measure(&pair, 0.7, 3);
        assert!((oracle - 0.21).abs() < 1e-15);
        assert!((cylinder_measure(&pair, &m) - oracle).abs() < 1e-15);
    }

    #[test]
    fn constraint_validation() {
        assert_eq!(
            CylinderConstraint::new([(0, 1)]),
            Err(MeasureError::ZeroIndex)
        );
        assert_eq!(
            CylinderConstraint::new([(2, 1), (2, 0)]),
            Err(MeasureError::DuplicateIndex(2))
        );
        assert!(DigitMeasure::new(1.5).is_err());
        assert!("01x".parse::<BitSequence>().is_err());
    }

    #[test]
    fn degenerate_sampling() {
        for seed in [0, 7, 12345] {
            assert_eq!(
                sample_sequence(&DigitMeasure::new(1.0).unwrap(), 5, seed),
                seq("00000")
            );
            assert_eq!(
                sample_sequence(&DigitMeasure::new(0.0).unwrap(), 5, seed),
                seq("11111")
            );
        }
    }

    #[test]
    fn sampling_is_seed_deterministic() {
        let m = DigitMeasure::new(0.3).unwrap();
        assert_eq!(sample_sequence(&m, 500, 42), sample_sequence(&m, 500, 42));
        assert_ne!(sample_sequence(&m, 500, 42), sample_sequence(&m, 500, 43));
    }

    #[test]
    fn biased_sampling_concentrates() {
        // Binomial sd at n = 1e4, alpha = 0.7 is 0.0046; +-0.02 is > 4 sd.
        let m = DigitMeasure::new(0.7).unwrap();
        let inside = (0..1000u64)
            .filter(|&seed| {
                let f = orbit_zero_frequency(&sample_sequence(&m, 10_000, seed), 10_000).unwrap();
                (f - 0.7).abs() <= 0.02
            })
            .count();
        assert!(inside >= 990, "{inside} of 1000 within tolerance");
    }

    #[test]
    fn lebesgue_prefixes_are_dyadic() {
        let m = DigitMeasure::lebesgue();
        for k in 1..12usize {
            let c = CylinderConstraint::new((1..=k).map(|i| (i, (i % 2) as u8))).unwrap();
            assert_eq!(cylinder_measure(&c, &m), 2f64.powi(-(k as i32)));
        }
    }

    #[test]
    fn rational_frequency_converges_at_rate_one_over_n() {
        // 2/7 repeats the block 010, so the period average is 2/3.
        for n in [10usize, 100, 1000, 10_000] {
            let s = expand_rational(2, 7, n).unwrap();
            let err = (orbit_zero_frequency(&s, n).unwrap() - 2.0 / 3.0).abs();
            assert!(err <= 2.0 / n as f64, "n={n} err={err}");
        }
    }

    fn digits_strategy() -> impl Strategy<Value = BitSequence> {
        prop::collection::vec(0u8..=1, 2..200).prop_map(|d| BitSequence::from_digits(d).unwrap())
    }

    proptest! {
        #[test]
        fn shift_frequency_identity(s in digits_strategy(), frac in 0.0f64..1.0) {
            let n = 2 + ((s.len() - 2) as f64 * frac) as usize;
            let n = n.min(s.len() - 1).max(2);
            let shifted = bernoulli_step(&s).unwrap();
            let lhs = n as f64 * orbit_zero_frequency(&s, n).unwrap()
                - (n - 1) as f64 * orbit_zero_frequency(&shifted, n - 1).unwrap();
            let r = lhs.round();
            prop_assert!((lhs - r).abs() < 1e-9);
            prop_assert!(r == 0.0 || r == 1.0);
        }

        #[test]
        fn cylinder_additivity(
            pins in prop::collection::btree_map(1usize..20, 0u8..=1, 0..8),
            k in 1usize..25,
            alpha in 0.0f64..=1.0,
        ) {
            let c = CylinderConstraint::new(pins).unwrap();
            prop_assume!(!c.contains_index(k));
            let m = DigitMeasure::new(alpha).unwrap();
            let whole = cylinder_measure(&c, &m);
            let split = cylinder_measure(&c.with(k, 0).unwrap(), &m)
                + cylinder_measure(&c.with(k, 1).unwrap(), &m);
            prop_assert!((whole - split).abs() <= 4.0 * f64::EPSILON * whole.max(1e-300));
        }

        #[test]
        fn ascii_round_trip(s in digits_strategy()) {
            prop_assert_eq!(s.to_string().parse::<BitSequence>().unwrap(), s);
        }
    }
}
