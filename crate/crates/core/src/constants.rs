//! Calibrated constants, stored as `key=value` text.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::frobenius::SimulationConstants;
use crate::sensing::DesignKind;

/// Constants consumed by the pilot rate, the simulation-regime radii and the
/// nuclear-norm set. Per-`(design, sigma)` overrides of `D` use keys like
/// `D@pauli:1`.
#[derive(Clone, Debug, PartialEq)]
pub struct Constants {
    pub big_d: f64,
    pub lambda_scale: f64,
    pub c_v: f64,
    pub c_nuclear: f64,
    pub sim: SimulationConstants,
    pub per_fixture: BTreeMap<String, f64>,
}

impl Default for Constants {
    fn default() -> Self {
        Self {
            big_d: 8.0,
            lambda_scale: 2.0,
            c_v: 1.0,
            c_nuclear: 2.0,
            sim: SimulationConstants::default(),
            per_fixture: BTreeMap::new(),
        }
    }
}

pub fn fixture_key(name: &str, design: DesignKind, sigma: f64) -> String {
    format!("{name}@{}:{sigma}", design.label())
}

impl Constants {
    /// `D` for a design and noise level, falling back to the global value.
    pub fn big_d_for(&self, design: DesignKind, sigma: f64) -> f64 {
        self.per_fixture.get(&fixture_key("D", design, sigma)).copied().unwrap_or(self.big_d)
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for (k, v) in [
            ("D", self.big_d),
            ("lambda_scale", self.lambda_scale),
            ("c_v", self.c_v),
            ("C_nuclear", self.c_nuclear),
            ("C_UStat", self.sim.c_ustat),
            ("C_UStat_prime", self.sim.c_ustat_prime),
            ("C_RSS", self.sim.c_rss),
            ("C_RSS_prime", self.sim.c_rss_prime),
        ] {
            let _ = writeln!(out, "{k}={v}");
        }
        for (k, v) in &self.per_fixture {
            let _ = writeln!(out, "{k}={v}");
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut c = Constants::default();
        for (ln, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap().trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| Error::parse(ln + 1, "expected key=value"))?;
            let (k, v) = (k.trim(), v.trim());
            let x: f64 = v.parse().map_err(|_| Error::parse(ln + 1, format!("bad number {v:?}")))?;
            if !(x.is_finite() && x >= 0.0) {
                return Err(Error::parse(ln + 1, format!("{k} must be finite and nonnegative")));
            }
            match k {
                "D" => c.big_d = x,
                "lambda_scale" => c.lambda_scale = x,
                "c_v" => c.c_v = x,
                "C_nuclear" => c.c_nuclear = x,
                "C_UStat" => c.sim.c_ustat = x,
                "C_UStat_prime" => c.sim.c_ustat_prime = x,
                "C_RSS" => c.sim.c_rss = x,
                "C_RSS_prime" => c.sim.c_rss_prime = x,
                _ if k.contains('@') => {
                    c.per_fixture.insert(k.to_string(), x);
                }
                _ => return Err(Error::parse(ln + 1, format!("unknown key {k:?}"))),
            }
        }
        Ok(c)
    }

    pub fn load(path: &std::path::Path) -> Result<Self> {
        Self::from_text(&std::fs::read_to_string(path)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_and_fallback() {
        let mut c = Constants::default();
        c.per_fixture.insert(fixture_key("D", DesignKind::PauliBasis, 1.0), 3.5);
        let back = Constants::from_text(&c.to_text()).unwrap();
        assert_eq!(back, c);
        assert_eq!(back.big_d_for(DesignKind::PauliBasis, 1.0), 3.5);
        assert_eq!(back.big_d_for(DesignKind::GaussianIsotropic, 1.0), c.big_d);
    }

    #[test]
    fn parse_errors() {
        assert!(Constants::from_text("D=abc").is_err());
        assert!(Constants::from_text("nonsense=1").is_err());
        assert!(Constants::from_text("D").is_err());
        assert_eq!(Constants::from_text("# comment\nD=2 # trailing\n").unwrap().big_d, 2.0);
    }
}
