//! Exact probabilities on the unit interval.
//!
//! Every mass, conditional probability, and accuracy in this crate is a
//! [`Prob`]: a rational number in `[0, 1]` kept in lowest terms. All
//! arithmetic is exact; there is no floating point anywhere in an accuracy
//! or comparison path, so strict inequalities certified by the auditor are
//! genuine inequalities between rationals, not artifacts of rounding.

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

/// Errors from constructing or parsing a [`Prob`].
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ProbError {
    #[error("denominator must be positive")]
    ZeroDenominator,
    #[error("value {0} lies outside [0, 1]")]
    OutOfRange(String),
    #[error("malformed rational `{0}`: expected `num` or `num/den` with non-negative integers")]
    Malformed(String),
}

/// A binary classification label.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Label {
    Zero,
    One,
}

impl Label {
    pub fn from_bool(b: bool) -> Self {
        if b {
            Label::One
        } else {
            Label::Zero
        }
    }

    pub fn as_u8(self) -> u8 {
        match self {
            Label::Zero => 0,
            Label::One => 1,
        }
    }

    /// The other label.
    pub fn flip(self) -> Self {
        match self {
            Label::Zero => Label::One,
            Label::One => Label::Zero,
        }
    }

    /// The label as an exact probability (0 or 1).
    pub fn as_prob(self) -> Prob {
        match self {
            Label::Zero => Prob::zero(),
            Label::One => Prob::one(),
        }
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.as_u8())
    }
}

impl Serialize for Label {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_u8(self.as_u8())
    }
}

impl<'de> Deserialize<'de> for Label {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        match u8::deserialize(deserializer)? {
            0 => Ok(Label::Zero),
            1 => Ok(Label::One),
            other => Err(serde::de::Error::custom(format!(
                "label must be 0 or 1, got {other}"
            ))),
        }
    }
}

/// An exact rational probability in `[0, 1]`, stored in lowest terms.
///
/// ```
/// use collab::Prob;
///
/// let p: Prob = "3/5".parse().unwrap();
/// assert_eq!(p.complement().to_string(), "2/5");
/// assert_eq!(p.mul(&p).to_string(), "9/25");
/// ```
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Prob(BigRational);

impl Prob {
    pub fn zero() -> Self {
        Prob(BigRational::zero())
    }

    pub fn one() -> Self {
        Prob(BigRational::one())
    }

    pub fn half() -> Self {
        Prob(BigRational::new(BigInt::from(1), BigInt::from(2)))
    }

    /// Builds `num/den`, reducing to lowest terms.
    pub fn new(num: u64, den: u64) -> Result<Self, ProbError> {
        if den == 0 {
            return Err(ProbError::ZeroDenominator);
        }
        if num > den {
            return Err(ProbError::OutOfRange(format!("{num}/{den}")));
        }
        Ok(Prob(BigRational::new(BigInt::from(num), BigInt::from(den))))
    }

    /// Wraps an arbitrary rational, rejecting values outside `[0, 1]`.
    pub fn try_from_ratio(r: BigRational) -> Result<Self, ProbError> {
        if r.is_negative() || r > BigRational::one() {
            return Err(ProbError::OutOfRange(r.to_string()));
        }
        Ok(Prob(r))
    }

    /// The underlying rational.
    pub fn ratio(&self) -> &BigRational {
        &self.0
    }

    pub fn is_zero(&self) -> bool {
        self.0.is_zero()
    }

    pub fn is_one(&self) -> bool {
        self.0.is_one()
    }

    pub fn is_half(&self) -> bool {
        self == &Prob::half()
    }

    /// Exactly 0 or exactly 1: the certainty carve-out of the open cube.
    pub fn is_certain(&self) -> bool {
        self.is_zero() || self.is_one()
    }

    /// `1 - p`, exact.
    pub fn complement(&self) -> Prob {
        Prob(BigRational::one() - &self.0)
    }

    /// `p + q` when the sum stays in `[0, 1]`.
    pub fn try_add(&self, other: &Prob) -> Option<Prob> {
        Prob::try_from_ratio(&self.0 + &other.0).ok()
    }

    /// `p - q` when `q <= p`.
    pub fn try_sub(&self, other: &Prob) -> Option<Prob> {
        Prob::try_from_ratio(&self.0 - &other.0).ok()
    }

    /// `p * q`, always in `[0, 1]`.
    pub fn mul(&self, other: &Prob) -> Prob {
        Prob(&self.0 * &other.0)
    }

    /// `max(p, 1 - p)`: the chance the rounded label is right.
    pub fn max_with_complement(&self) -> Prob {
        let c = self.complement();
        if *self >= c {
            self.clone()
        } else {
            c
        }
    }

    /// Exact arithmetic mean of a non-empty slice; stays in `[0, 1]`.
    pub fn mean(values: &[Prob]) -> Prob {
        assert!(!values.is_empty(), "mean of empty slice");
        let sum: BigRational = values.iter().map(|p| p.0.clone()).sum();
        Prob(sum / BigRational::from(BigInt::from(values.len())))
    }

    /// `|p - 1/2|` as a rational, for exact confidence comparisons.
    pub fn distance_from_half(&self) -> BigRational {
        (&self.0 - Prob::half().0).abs()
    }

    /// Rounds to a label with ties going up: 1 iff `p >= 1/2`.
    pub fn round_half_up(&self) -> Label {
        if *self >= Prob::half() {
            Label::One
        } else {
            Label::Zero
        }
    }
}

impl PartialOrd for Prob {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Prob {
    fn cmp(&self, other: &Self) -> Ordering {
        self.0.cmp(&other.0)
    }
}

impl fmt::Display for Prob {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.denom().is_one() {
            write!(f, "{}", self.0.numer())
        } else {
            write!(f, "{}/{}", self.0.numer(), self.0.denom())
        }
    }
}

impl FromStr for Prob {
    type Err = ProbError;

    /// Parses `num/den` or a bare integer. Non-canonical inputs such as
    /// `2/4` are accepted and reduced; signs, floats, and empty parts are not.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let malformed = || ProbError::Malformed(s.to_string());
        let (num_s, den_s) = match s.split_once('/') {
            Some((n, d)) => (n, d),
            None => (s, "1"),
        };
        let digits_only = |t: &str| !t.is_empty() && t.bytes().all(|b| b.is_ascii_digit());
        if !digits_only(num_s) || !digits_only(den_s) {
            return Err(malformed());
        }
        let num: BigUint = num_s.parse().map_err(|_| malformed())?;
        let den: BigUint = den_s.parse().map_err(|_| malformed())?;
        if den.is_zero() {
            return Err(ProbError::ZeroDenominator);
        }
        let r = BigRational::new(BigInt::from(num), BigInt::from(den));
        Prob::try_from_ratio(r)
    }
}

impl Serialize for Prob {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for Prob {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Sums an iterator of probabilities, requiring the total to stay in `[0, 1]`.
pub fn sum_probs<'a, I: IntoIterator<Item = &'a Prob>>(iter: I) -> Result<Prob, ProbError> {
    let total: BigRational = iter.into_iter().map(|p| p.0.clone()).sum();
    Prob::try_from_ratio(total)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn p(s: &str) -> Prob {
        s.parse().unwrap()
    }

    #[test]
    fn rounds_half_up() {
        assert_eq!(p("1/2").round_half_up(), Label::One);
        assert_eq!(p("0").round_half_up(), Label::Zero);
        assert_eq!(p("3/10").round_half_up(), Label::Zero);
        assert_eq!(p("3/4").round_half_up(), Label::One);
    }

    #[test]
    fn stored_in_lowest_terms() {
        assert_eq!(p("2/4").to_string(), "1/2");
        assert_eq!(p("6/8"), p("3/4"));
        assert_eq!(p("0/7").to_string(), "0");
        assert_eq!(p("5/5").to_string(), "1");
    }

    #[test]
    fn rejects_malformed_and_out_of_range() {
        assert!(matches!(
            "3/2".parse::<Prob>(),
            Err(ProbError::OutOfRange(_))
        ));
        assert!(matches!(
            "1/0".parse::<Prob>(),
            Err(ProbError::ZeroDenominator)
        ));
        for bad in ["", "-1/2", "1.5", "a/b", "1/", "/2", "1 / 2", "+1/2"] {
            assert!(
                matches!(bad.parse::<Prob>(), Err(ProbError::Malformed(_))),
                "expected Malformed for {bad:?}"
            );
        }
        assert!(Prob::new(3, 0).is_err());
        assert!(Prob::new(4, 3).is_err());
    }

    #[test]
    fn serde_round_trip_is_canonical() {
        let v: Vec<Prob> = vec![p("0"), p("1"), p("2/4"), p("27/32")];
        let json = serde_json::to_string(&v).unwrap();
        assert_eq!(json, r#"["0","1","1/2","27/32"]"#);
        let back: Vec<Prob> = serde_json::from_str(&json).unwrap();
        assert_eq!(back, v);
    }

    #[test]
    fn mean_is_exact() {
        assert_eq!(Prob::mean(&[p("3/5"), p("1/10")]), p("7/20"));
        assert_eq!(Prob::mean(&[p("1")]), p("1"));
    }

    #[test]
    fn label_flip_and_display() {
        assert_eq!(Label::Zero.flip(), Label::One);
        assert_eq!(Label::One.to_string(), "1");
        assert_eq!(serde_json::to_string(&Label::One).unwrap(), "1");
        assert!(serde_json::from_str::<Label>("2").is_err());
    }

    prop_compose! {
        fn arb_prob()(num in 0u64..=240, den in 1u64..=240) -> Prob {
            let (num, den) = if num <= den { (num, den) } else { (den, num.max(1)) };
            Prob::new(num, den).unwrap()
        }
    }

    proptest! {
        #[test]
        fn add_then_sub_round_trips(a in arb_prob(), b in arb_prob()) {
            if let Some(sum) = a.try_add(&b) {
                prop_assert_eq!(sum.try_sub(&b).unwrap(), a);
            }
        }

        #[test]
        fn complement_is_involutive(a in arb_prob()) {
            prop_assert_eq!(a.complement().complement(), a);
        }

        #[test]
        fn comparison_is_a_total_order(a in arb_prob(), b in arb_prob(), c in arb_prob()) {
            // antisymmetry
            if a <= b && b <= a {
                prop_assert_eq!(&a, &b);
            }
            // transitivity
            if a <= b && b <= c {
                prop_assert!(a <= c);
            }
            // totality
            prop_assert!(a <= b || b <= a);
        }

        #[test]
        fn rounding_matches_threshold(a in arb_prob()) {
            let expected = if a >= Prob::half() { Label::One } else { Label::Zero };
            prop_assert_eq!(a.round_half_up(), expected);
        }
    }
}
