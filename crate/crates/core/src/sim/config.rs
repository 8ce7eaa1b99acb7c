//! Experiment configuration and its flat `key = value` file format.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::channel::{tdla30_profile, TdlProfile};
use crate::error::{Error, Result};
use crate::linalg::PivotRule;
use crate::phy::{pack_allocations, OfdmConfig, UserAllocation};

/// Fronthaul treatment under test.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Compressor {
    /// Quantized samples of `Y` at full resolution.
    None,
    Qr,
    SvdBaseline,
}

impl Compressor {
    pub fn name(&self) -> &'static str {
        match self {
            Compressor::None => "none",
            Compressor::Qr => "qr",
            Compressor::SvdBaseline => "svd-baseline",
        }
    }
}

impl fmt::Display for Compressor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Compressor {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "none" => Ok(Compressor::None),
            "qr" => Ok(Compressor::Qr),
            "svd-baseline" | "svd" => Ok(Compressor::SvdBaseline),
            other => Err(Error::Config(format!("unknown compressor `{other}`"))),
        }
    }
}

/// Truncation rank: a fixed value or a multiple of the channel rank.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RankPolicy {
    Fixed(usize),
    RankMultiple(usize),
}

impl RankPolicy {
    pub fn resolve(&self, rank: usize) -> usize {
        match *self {
            RankPolicy::Fixed(n) => n,
            RankPolicy::RankMultiple(m) => m * rank,
        }
    }
}

impl fmt::Display for RankPolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RankPolicy::Fixed(n) => write!(f, "{n}"),
            RankPolicy::RankMultiple(1) => f.write_str("rank"),
            RankPolicy::RankMultiple(m) => write!(f, "{m}rank"),
        }
    }
}

impl FromStr for RankPolicy {
    type Err = Error;

    /// `12`, `rank`, `2rank` or `2*rank`.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let bad = || Error::Config(format!("bad rank policy `{s}`"));
        if let Some(prefix) = s.strip_suffix("rank") {
            let prefix = prefix.trim_end_matches('*').trim();
            let m = if prefix.is_empty() { 1 } else { prefix.parse().map_err(|_| bad())? };
            if m == 0 {
                return Err(bad());
            }
            return Ok(RankPolicy::RankMultiple(m));
        }
        match s.parse() {
            Ok(0) | Err(_) => Err(bad()),
            Ok(n) => Ok(RankPolicy::Fixed(n)),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ChannelSpec {
    Tdl(TdlProfile),
    /// Unit-gain single tap: AWGN only.
    Awgn,
}

impl ChannelSpec {
    pub fn name(&self) -> &str {
        match self {
            ChannelSpec::Tdl(p) => &p.name,
            ChannelSpec::Awgn => "awgn",
        }
    }
}

/// Complete description of one experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub modulation: usize,
    pub n_r: usize,
    pub ofdm: OfdmConfig,
    pub subcarrier_spacing_hz: f64,
    pub channel: ChannelSpec,
    pub rho: f64,
    /// RB counts per user, users ordered by increasing SNR.
    pub rb_allocation: Vec<usize>,
    /// Per-user received power spacing; offsets are centred on the mean.
    pub user_power_step_db: f64,
    pub l_u: RankPolicy,
    pub pivot: PivotRule,
    /// SVD baseline rank; `rank` resolves to users × channel rank.
    pub svd_rank: RankPolicy,
    pub quant_bits: u32,
    pub compressors: Vec<Compressor>,
    pub snr_db: Vec<f64>,
    pub trials: usize,
    pub seed: u64,
    /// Record per-call compressor wall-clock time in sweep output.
    pub record_timing: bool,
    /// L_u values tabulated by `analyze-cr`.
    pub cr_l_u: Vec<usize>,
    pub bench_n_f: Vec<usize>,
    pub bench_l_u: Vec<usize>,
    pub bench_runs: usize,
}

/// RB allocations from the 8- and 12-user experiments, increasing-SNR order.
pub fn reference_rb_counts(user_count: usize) -> Result<Vec<usize>> {
    match user_count {
        8 => Ok(vec![26, 28, 30, 32, 34, 36, 38, 40]),
        12 => Ok(vec![10, 12, 14, 16, 18, 20, 22, 24, 26, 28, 30, 32]),
        n => Err(Error::Config(format!("no reference allocation for {n} users (8 or 12)"))),
    }
}

/// Reference allocation packed contiguously from RB 0.
pub fn allocate_rbs_paper(user_count: usize) -> Result<Vec<UserAllocation>> {
    Ok(pack_allocations(&reference_rb_counts(user_count)?))
}

impl SimConfig {
    /// Reduced scenario for quick runs: 64 antennas, 512-point FFT, 4 users × 8 RBs.
    pub fn desk() -> Self {
        Self {
            modulation: 64,
            n_r: 64,
            ofdm: OfdmConfig::desk(),
            subcarrier_spacing_hz: 30e3,
            channel: ChannelSpec::Tdl(tdla30_profile()),
            rho: 0.7,
            rb_allocation: vec![8; 4],
            user_power_step_db: 1.0,
            l_u: RankPolicy::RankMultiple(1),
            pivot: PivotRule::ColumnNorm,
            svd_rank: RankPolicy::RankMultiple(1),
            quant_bits: 15,
            compressors: vec![Compressor::Qr, Compressor::None],
            snr_db: vec![-5.0, 0.0, 5.0],
            trials: 100,
            seed: 1,
            record_timing: false,
            cr_l_u: vec![4, 8],
            bench_n_f: vec![96, 192, 384],
            bench_l_u: vec![4, 8],
            bench_runs: 10,
        }
    }

    /// Full 100 MHz scenario: 256 antennas, 4096-point FFT, 8 users with the
    /// reference allocation.
    pub fn full_scale() -> Self {
        Self {
            n_r: 256,
            ofdm: OfdmConfig::table1(),
            rb_allocation: reference_rb_counts(8).expect("8 users"),
            l_u: RankPolicy::Fixed(24),
            svd_rank: RankPolicy::Fixed(96),
            snr_db: vec![-10.0, -8.0, -6.0],
            trials: 10,
            cr_l_u: vec![12, 24],
            bench_n_f: vec![312, 624, 1248],
            bench_l_u: vec![12, 24],
            ..Self::desk()
        }
    }

    pub fn n_users(&self) -> usize {
        self.rb_allocation.len()
    }

    pub fn allocations(&self) -> Vec<UserAllocation> {
        pack_allocations(&self.rb_allocation)
    }

    pub fn sample_rate_hz(&self) -> f64 {
        self.ofdm.n_fft as f64 * self.subcarrier_spacing_hz
    }

    /// Distinct resolvable delays per user, the rank of noiseless `Y_u`.
    pub fn channel_rank(&self) -> usize {
        match &self.channel {
            ChannelSpec::Tdl(p) => p.distinct_delays(self.sample_rate_hz()).len(),
            ChannelSpec::Awgn => 1,
        }
    }

    pub fn resolved_l_u(&self) -> usize {
        self.l_u.resolve(self.channel_rank())
    }

    pub fn resolved_svd_rank(&self) -> usize {
        match self.svd_rank {
            RankPolicy::RankMultiple(m) => m * self.n_users() * self.channel_rank(),
            RankPolicy::Fixed(k) => k,
        }
    }

    /// Received power offset of user `u` in dB.
    pub fn user_power_offset_db(&self, u: usize) -> f64 {
        (u as f64 - (self.n_users() as f64 - 1.0) / 2.0) * self.user_power_step_db
    }

    pub fn validate(&self) -> Result<()> {
        let cfg_err = |m: String| Err(Error::Config(m));
        self.ofdm.validate()?;
        if ![4, 16, 64, 256].contains(&self.modulation) {
            return cfg_err(format!("unsupported modulation order {}", self.modulation));
        }
        if self.n_r == 0 || self.rb_allocation.is_empty() || self.rb_allocation.contains(&0) {
            return cfg_err("need at least one antenna and one user with RBs".into());
        }
        let total: usize = self.rb_allocation.iter().sum();
        if total > self.ofdm.n_rb_max {
            return cfg_err(format!("{total} RBs allocated, carrier has {}", self.ofdm.n_rb_max));
        }
        if !(0.0..1.0).contains(&self.rho) {
            return cfg_err(format!("rho {} outside [0, 1)", self.rho));
        }
        if !(2..=16).contains(&self.quant_bits) {
            return cfg_err(format!("quant_bits {} outside 2..=16", self.quant_bits));
        }
        if self.trials == 0 || self.snr_db.is_empty() || self.compressors.is_empty() {
            return cfg_err("trials, snr_db and compressor must be non-empty".into());
        }
        if let ChannelSpec::Tdl(p) = &self.channel {
            p.validate()?;
            let max_delay = p.delay_samples(self.sample_rate_hz()).into_iter().max().unwrap_or(0);
            if max_delay >= self.ofdm.cp_len {
                return cfg_err(format!(
                    "profile delay of {max_delay} samples exceeds the {}-sample CP",
                    self.ofdm.cp_len
                ));
            }
        }
        let l = self.resolved_l_u();
        let min_nf = self.rb_allocation.iter().min().copied().unwrap_or(0) * 12;
        if self.compressors.contains(&Compressor::Qr) && (l == 0 || l > self.n_r.min(min_nf)) {
            return cfg_err(format!("L_u = {l} outside 1..={}", self.n_r.min(min_nf)));
        }
        let k = self.resolved_svd_rank();
        if self.compressors.contains(&Compressor::SvdBaseline) && (k == 0 || k > self.n_r) {
            return cfg_err(format!("SVD rank {k} outside 1..={}", self.n_r));
        }
        Ok(())
    }

    /// Parses a config file over the desk (or full-scale) defaults.
    pub fn from_text(text: &str, full_scale: bool, base_dir: Option<&Path>) -> Result<Self> {
        let mut cfg = if full_scale { Self::full_scale() } else { Self::desk() };
        let mut users: Option<usize> = None;
        let mut allocation: Option<String> = None;
        let mut n_fft = cfg.ofdm.n_fft;
        let mut cp_len = cfg.ofdm.cp_len;
        let mut n_rb_max = cfg.ofdm.n_rb_max;
        let mut first_subcarrier: Option<i64> = None;
        let mut channel: Option<String> = None;
        let mut channel_file: Option<PathBuf> = None;

        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {}: expected `key = value`", lineno + 1)))?;
            let (key, value) = (key.trim(), value.trim());
            let ctx = |e: Error| Error::Config(format!("line {} (`{key}`): {e}", lineno + 1));
            match key {
                "modulation" => cfg.modulation = num(value).map_err(ctx)?,
                "n_r" => cfg.n_r = num(value).map_err(ctx)?,
                "n_fft" => n_fft = num(value).map_err(ctx)?,
                "cp_len" => cp_len = num(value).map_err(ctx)?,
                "n_rb_max" => n_rb_max = num(value).map_err(ctx)?,
                "first_subcarrier" => first_subcarrier = Some(num(value).map_err(ctx)?),
                "subcarrier_spacing_hz" => cfg.subcarrier_spacing_hz = num(value).map_err(ctx)?,
                "channel" => channel = Some(value.to_string()),
                "channel_file" => channel_file = Some(PathBuf::from(value)),
                "rho" => cfg.rho = num(value).map_err(ctx)?,
                "users" => users = Some(num(value).map_err(ctx)?),
                "rb_allocation" => allocation = Some(value.to_string()),
                "user_power_step_db" => cfg.user_power_step_db = num(value).map_err(ctx)?,
                "l_u" => cfg.l_u = value.parse().map_err(ctx)?,
                "pivot" => {
                    cfg.pivot = match value {
                        "norm" => PivotRule::ColumnNorm,
                        "residual" => PivotRule::ResidualNorm,
                        other => return Err(Error::Config(format!("line {}: unknown pivot rule `{other}`", lineno + 1))),
                    }
                }
                "svd_rank" => cfg.svd_rank = value.parse().map_err(ctx)?,
                "quant_bits" => cfg.quant_bits = num(value).map_err(ctx)?,
                "compressor" => cfg.compressors = list(value).map_err(ctx)?,
                "snr_db" => cfg.snr_db = list(value).map_err(ctx)?,
                "trials" => cfg.trials = num(value).map_err(ctx)?,
                "seed" => cfg.seed = num(value).map_err(ctx)?,
                "record_timing" => cfg.record_timing = num(value).map_err(ctx)?,
                "cr_l_u" => cfg.cr_l_u = list(value).map_err(ctx)?,
                "bench_n_f" => cfg.bench_n_f = list(value).map_err(ctx)?,
                "bench_l_u" => cfg.bench_l_u = list(value).map_err(ctx)?,
                "bench_runs" => cfg.bench_runs = num(value).map_err(ctx)?,
                other => return Err(Error::Config(format!("line {}: unknown key `{other}`", lineno + 1))),
            }
        }

        cfg.ofdm = OfdmConfig::centered(n_fft, cp_len, n_rb_max).map_err(|e| Error::Config(e.to_string()))?;
        if let Some(first) = first_subcarrier {
            cfg.ofdm.first_subcarrier = first;
            cfg.ofdm.validate().map_err(|e| Error::Config(e.to_string()))?;
        }

        match (allocation.as_deref(), users) {
            (Some("reference"), Some(n)) => cfg.rb_allocation = reference_rb_counts(n)?,
            (Some("reference"), None) => return Err(Error::Config("`rb_allocation = reference` needs `users`".into())),
            (Some(list_text), _) => {
                cfg.rb_allocation = list(list_text)?;
                if let Some(n) = users {
                    if n != cfg.rb_allocation.len() {
                        return Err(Error::Config(format!(
                            "users = {n} but rb_allocation lists {} users",
                            cfg.rb_allocation.len()
                        )));
                    }
                }
            }
            (None, Some(n)) => {
                let per_user = cfg.rb_allocation.first().copied().unwrap_or(1);
                cfg.rb_allocation = vec![per_user; n];
            }
            (None, None) => {}
        }

        cfg.channel = match (channel.as_deref(), channel_file) {
            (None, None) => cfg.channel,
            (Some("awgn"), None) => ChannelSpec::Awgn,
            (Some("tdla30") | Some("TDLA30"), None) => ChannelSpec::Tdl(tdla30_profile()),
            (Some(name), Some(path)) => {
                let path = match base_dir {
                    Some(dir) if path.is_relative() => dir.join(path),
                    _ => path,
                };
                ChannelSpec::Tdl(TdlProfile::load(&path, name)?)
            }
            (Some(other), None) => return Err(Error::Config(format!("unknown channel `{other}`"))),
            (None, Some(_)) => return Err(Error::Config("`channel_file` needs a `channel` profile name".into())),
        };

        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path, full_scale: bool) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_text(&text, full_scale, path.parent())
    }
}

fn num<T: FromStr>(s: &str) -> Result<T> {
    s.parse().map_err(|_| Error::Config(format!("cannot parse `{s}`")))
}

fn list<T: FromStr>(s: &str) -> Result<Vec<T>> {
    s.split(',').map(|v| num(v.trim())).collect()
}
