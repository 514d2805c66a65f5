//! Machine-readable match reports shared by the library checks and the CLI.

use std::collections::BTreeMap;
use std::fmt::Display;
use std::time::Instant;

use num_bigint::BigInt;
use num_rational::BigRational;
use serde::{Deserialize, Serialize};

/// One compared quantity.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MatchItem {
    pub label: String,
    pub expected: String,
    pub computed: String,
    pub pass: bool,
}

/// A list of comparisons with an overall verdict.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MatchReport {
    pub command: String,
    pub params: BTreeMap<String, String>,
    pub items: Vec<MatchItem>,
    pub pass: bool,
    pub elapsed_ms: u64,
}

impl MatchReport {
    pub fn new(command: impl Into<String>) -> Self {
        MatchReport {
            command: command.into(),
            params: BTreeMap::new(),
            items: Vec::new(),
            pass: true,
            elapsed_ms: 0,
        }
    }

    pub fn param(mut self, key: &str, value: impl Display) -> Self {
        self.params.insert(key.to_string(), value.to_string());
        self
    }

    /// Records a comparison that passes iff the two values are equal.
    pub fn compare<T: PartialEq>(
        &mut self,
        label: impl Into<String>,
        expected: &T,
        computed: &T,
        show: impl Fn(&T) -> String,
    ) {
        let pass = expected == computed;
        self.push(label, show(expected), show(computed), pass);
    }

    pub fn push(
        &mut self,
        label: impl Into<String>,
        expected: impl Into<String>,
        computed: impl Into<String>,
        pass: bool,
    ) {
        self.pass &= pass;
        self.items.push(MatchItem {
            label: label.into(),
            expected: expected.into(),
            computed: computed.into(),
            pass,
        });
    }

    /// Appends all items of `other`, prefixing their labels.
    pub fn absorb(&mut self, prefix: &str, other: MatchReport) {
        for item in other.items {
            self.push(
                format!("{prefix}{}", item.label),
                item.expected,
                item.computed,
                item.pass,
            );
        }
        self.pass &= other.pass;
    }

    pub fn timed(mut self, start: Instant) -> Self {
        self.elapsed_ms = start.elapsed().as_millis() as u64;
        self
    }

    pub fn failures(&self) -> impl Iterator<Item = &MatchItem> {
        self.items.iter().filter(|i| !i.pass)
    }
}

/// `"num/den"`, the exact serialization of a rational.
pub fn rat_string(x: &BigRational) -> String {
    format!("{}/{}", x.numer(), x.denom())
}

pub fn int_string(x: &BigInt) -> String {
    x.to_string()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pass_tracks_items() {
        let mut r = MatchReport::new("t").param("q", 2);
        r.push("a", "1", "1", true);
        assert!(r.pass);
        r.compare("b", &1, &2, |x| x.to_string());
        assert!(!r.pass);
        assert_eq!(r.failures().count(), 1);
        assert_eq!(r.params["q"], "2");
    }

    #[test]
    fn rationals_always_carry_a_denominator() {
        let x = BigRational::new(BigInt::from(-6), BigInt::from(4));
        assert_eq!(rat_string(&x), "-3/2");
        assert_eq!(rat_string(&BigRational::from_integer(5.into())), "5/1");
    }

    #[test]
    fn json_round_trip_is_byte_identical() {
        let mut r = MatchReport::new("verify local").param("T", 4);
        r.push("x^1", "-1/2", "-1/2", true);
        let s = serde_json::to_string_pretty(&r).unwrap();
        let back: MatchReport = serde_json::from_str(&s).unwrap();
        assert_eq!(serde_json::to_string_pretty(&back).unwrap(), s);
    }
}
