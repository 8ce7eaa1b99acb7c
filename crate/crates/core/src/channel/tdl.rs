//! Tapped-delay-line power-delay profiles.

use std::path::Path;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct TdlProfile {
    pub name: String,
    pub tap_delays_ns: Vec<f64>,
    pub tap_powers_db: Vec<f64>,
}

/// 3GPP TDLA30 (38.104 Annex G), 12 taps, 30 ns RMS delay spread.
pub fn tdla30_profile() -> TdlProfile {
    TdlProfile {
        name: "TDLA30".into(),
        tap_delays_ns: vec![0.0, 10.0, 15.0, 20.0, 25.0, 50.0, 65.0, 75.0, 105.0, 135.0, 150.0, 290.0],
        tap_powers_db: vec![-15.5, 0.0, -5.1, -5.1, -9.6, -8.2, -13.1, -11.5, -11.0, -16.2, -16.6, -26.2],
    }
}

impl TdlProfile {
    pub fn new(name: impl Into<String>, tap_delays_ns: Vec<f64>, tap_powers_db: Vec<f64>) -> Result<Self> {
        let p = Self {
            name: name.into(),
            tap_delays_ns,
            tap_powers_db,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if self.tap_delays_ns.is_empty() || self.tap_delays_ns.len() != self.tap_powers_db.len() {
            return Err(Error::Config(format!(
                "profile {}: {} delays vs {} powers",
                self.name,
                self.tap_delays_ns.len(),
                self.tap_powers_db.len()
            )));
        }
        if self.tap_delays_ns.iter().any(|d| !d.is_finite() || *d < 0.0)
            || self.tap_delays_ns.windows(2).any(|w| w[1] < w[0])
        {
            return Err(Error::Config(format!(
                "profile {}: delays must be non-negative and non-decreasing",
                self.name
            )));
        }
        if self.tap_powers_db.iter().any(|p| !p.is_finite()) {
            return Err(Error::Config(format!("profile {}: non-finite tap power", self.name)));
        }
        Ok(())
    }

    pub fn n_taps(&self) -> usize {
        self.tap_delays_ns.len()
    }

    /// Linear tap powers scaled to sum to one.
    pub fn normalized_powers(&self) -> Vec<f64> {
        let lin: Vec<f64> = self.tap_powers_db.iter().map(|db| 10f64.powf(db / 10.0)).collect();
        let total: f64 = lin.iter().sum();
        lin.into_iter().map(|p| p / total).collect()
    }

    pub fn rms_delay_spread_ns(&self) -> f64 {
        let p = self.normalized_powers();
        let mean: f64 = p.iter().zip(&self.tap_delays_ns).map(|(p, d)| p * d).sum();
        let second: f64 = p.iter().zip(&self.tap_delays_ns).map(|(p, d)| p * d * d).sum();
        (second - mean * mean).max(0.0).sqrt()
    }

    /// Tap delays rounded to the nearest sample.
    pub fn delay_samples(&self, sample_rate_hz: f64) -> Vec<usize> {
        self.tap_delays_ns
            .iter()
            .map(|d| (d * 1e-9 * sample_rate_hz).round() as usize)
            .collect()
    }

    /// Sorted distinct sample delays once coincident taps are merged.
    pub fn distinct_delays(&self, sample_rate_hz: f64) -> Vec<usize> {
        let mut d = self.delay_samples(sample_rate_hz);
        d.sort_unstable();
        d.dedup();
        d
    }

    /// Parses `name delay_ns power_db` lines (whitespace or comma separated,
    /// `#` comments) and returns the rows belonging to `name`.
    pub fn parse_table(text: &str, name: &str) -> Result<Self> {
        let mut delays = Vec::new();
        let mut powers = Vec::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let fields: Vec<&str> = line
                .split(|c: char| c == ',' || c.is_whitespace())
                .filter(|f| !f.is_empty())
                .collect();
            if fields.len() != 3 {
                return Err(Error::Config(format!(
                    "profile table line {}: expected `name delay_ns power_db`",
                    lineno + 1
                )));
            }
            if fields[0] != name {
                continue;
            }
            let parse = |s: &str| {
                s.parse::<f64>()
                    .map_err(|_| Error::Config(format!("profile table line {}: bad number `{s}`", lineno + 1)))
            };
            delays.push(parse(fields[1])?);
            powers.push(parse(fields[2])?);
        }
        if delays.is_empty() {
            return Err(Error::Config(format!("profile `{name}` not found in table")));
        }
        Self::new(name, delays, powers)
    }

    pub fn load(path: &Path, name: &str) -> Result<Self> {
        Self::parse_table(&std::fs::read_to_string(path)?, name)
    }
}
