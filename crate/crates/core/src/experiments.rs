//! Seeded Monte Carlo harness.
//!
//! Each experiment draws `trials` independent matrices, computes
//! per-trial statistics and folds them into aggregates. Trials run in
//! parallel; each one owns the RNG stream derived from
//! `(seed, trial index)` and aggregation folds in trial order, so a
//! report is bit-identical across runs no matter how many workers are
//! active.

use std::collections::BTreeMap;
use std::fmt;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analytics::{self, decay, fixed_points, phi, slush_constants, AnalyticProfile};
use crate::gf2::{frozen_set, BitMatrix, RankProfile};
use crate::graph::{gen_bernoulli, pin, sample_tree, stream, NodeKind, PinMode, TannerGraph};
use crate::wp::{self, classify, standard_messages, wp_run, Mark, MessageState, Msg, StdMsg};

#[derive(Debug)]
pub struct ConfigError(pub String);

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "config error: {}", self.0)
    }
}

impl std::error::Error for ConfigError {}

#[derive(Debug)]
pub enum ExperimentError {
    Config(ConfigError),
    Runtime(String),
}

impl fmt::Display for ExperimentError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ExperimentError::Config(e) => write!(f, "{e}"),
            ExperimentError::Runtime(msg) => write!(f, "runtime error: {msg}"),
        }
    }
}

impl std::error::Error for ExperimentError {}

impl From<ConfigError> for ExperimentError {
    fn from(e: ConfigError) -> Self {
        ExperimentError::Config(e)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    TwoPoint,
    Slush,
    Overlap,
    Local,
    Symmetry,
}

impl std::str::FromStr for ExperimentKind {
    type Err = ConfigError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "two-point" => Ok(Self::TwoPoint),
            "slush" => Ok(Self::Slush),
            "overlap" => Ok(Self::Overlap),
            "local" => Ok(Self::Local),
            "symmetry" => Ok(Self::Symmetry),
            other => Err(ConfigError(format!(
                "unknown experiment kind {other:?} (expected two-point|slush|overlap|local|symmetry)"
            ))),
        }
    }
}

/// Number of coordinate pairs sampled by the symmetry estimator.
pub const SYMMETRY_PAIRS: usize = 500;
/// Sample count behind the branching-process census reference.
pub const ZETA_SAMPLES: usize = 100_000;
/// Largest root degree entering the neighbourhood-census comparison.
pub const CENSUS_MAX_ROOT_DEGREE: usize = 6;
/// Largest per-slot count entering the generalised-degree comparison.
pub const CENSUS_MAX_SLOT: u64 = 6;
/// Exact per-edge oracle is used up to this many variables.
pub const EXACT_CENSUS_MAX_N: usize = 500;

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub kind: ExperimentKind,
    pub n: usize,
    pub d: f64,
    pub trials: usize,
    /// Kernel samples (or sample pairs) per trial.
    #[serde(default = "default_samples")]
    pub samples_per_trial: usize,
    /// Neighbourhood census depth for the local experiment.
    #[serde(default = "default_depth")]
    pub depth: usize,
    /// Rows to activate in the pinning variant of the symmetry experiment.
    #[serde(default)]
    pub pin_t: usize,
    pub seed: u64,
    /// Peak window around each fixed point.
    #[serde(default = "default_epsilon")]
    pub epsilon: f64,
    /// Balance window: trials with |n_s - m_s| below it are inconclusive.
    #[serde(default = "default_omega")]
    pub omega: i64,
}

fn default_samples() -> usize {
    400
}
fn default_depth() -> usize {
    1
}
fn default_epsilon() -> f64 {
    0.03
}
fn default_omega() -> i64 {
    20
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.n < 1 {
            return Err(ConfigError(format!("n={} must be >= 1", self.n)));
        }
        if self.trials < 1 {
            return Err(ConfigError(format!("trials={} must be >= 1", self.trials)));
        }
        if !(self.d >= 0.0) || !self.d.is_finite() {
            return Err(ConfigError(format!("d={} must be finite and >= 0", self.d)));
        }
        if !(self.epsilon > 0.0 && self.epsilon < 0.25) {
            return Err(ConfigError(format!(
                "epsilon={} outside (0, 0.25)",
                self.epsilon
            )));
        }
        if self.omega < 1 {
            return Err(ConfigError(format!("omega={} must be >= 1", self.omega)));
        }
        if self.samples_per_trial < 1 {
            return Err(ConfigError(format!(
                "samples_per_trial={} must be >= 1",
                self.samples_per_trial
            )));
        }
        if self.kind == ExperimentKind::Local {
            if self.depth > 2 {
                return Err(ConfigError(format!(
                    "depth={} exceeds 2 (census classes are enumerated explicitly)",
                    self.depth
                )));
            }
            if self.d > crate::graph::POISSON_MAX_RATE {
                return Err(ConfigError(format!(
                    "d={} exceeds the tree sampler cap {}",
                    self.d,
                    crate::graph::POISSON_MAX_RATE
                )));
            }
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum PeakLabel {
    Low,
    Mid,
    High,
    None,
}

impl fmt::Display for PeakLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            PeakLabel::Low => "low",
            PeakLabel::Mid => "mid",
            PeakLabel::High => "high",
            PeakLabel::None => "none",
        };
        write!(f, "{s}")
    }
}

/// Labels a frozen fraction by the nearest fixed point within `epsilon`.
pub fn peak_label(f: f64, profile: &AnalyticProfile, epsilon: f64) -> PeakLabel {
    let candidates = [
        (PeakLabel::Low, profile.alpha_star),
        (PeakLabel::Mid, profile.alpha_zero),
        (PeakLabel::High, profile.alpha_upper),
    ];
    let mut best = PeakLabel::None;
    let mut best_dist = f64::INFINITY;
    for (label, alpha) in candidates {
        let dist = (f - alpha).abs();
        // ties resolve to the earliest candidate, so the collapsed case
        // (all fixed points equal) labels low
        if dist <= epsilon && dist < best_dist {
            best = label;
            best_dist = dist;
        }
    }
    best
}

#[derive(Clone, Debug, Default, Serialize)]
pub struct TrialRecord {
    pub trial: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub f: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub f_hat: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub nullity_per_n: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n_s: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub m_s: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub peak: Option<PeakLabel>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub v_f_frac: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub v_u_frac: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub v_u_frozen_frac: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub slush_var_deg_hist: Option<Vec<usize>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub slush_check_deg_hist: Option<Vec<usize>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub r: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub s: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub u: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub overlap_mean: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub overlap_se: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub overlap_expected: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub overlap_within_3se: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub balance_mean: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub f_phi_gap: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub xi_census: Option<BTreeMap<String, f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub xi_max_dev: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub delta_census: Option<BTreeMap<String, f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub delta_max_dev: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gamma_census: Option<BTreeMap<String, f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gamma_max_dev: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub wp_rounds: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub wp_changes: Option<Vec<usize>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sym_discrepancy: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sym_discrepancy_pinned: Option<f64>,
    pub elapsed_ms: u64,
}

#[derive(Clone, Copy, Debug, Default, Serialize)]
pub struct PeakCounts {
    pub low: usize,
    pub mid: usize,
    pub high: usize,
    pub none: usize,
}

impl PeakCounts {
    fn add(&mut self, label: PeakLabel) {
        match label {
            PeakLabel::Low => self.low += 1,
            PeakLabel::Mid => self.mid += 1,
            PeakLabel::High => self.high += 1,
            PeakLabel::None => self.none += 1,
        }
    }

    pub fn total(&self) -> usize {
        self.low + self.mid + self.high + self.none
    }
}

/// Sign-of-balance versus peak contingency table; `neg` collects trials
/// with at least `omega` more slush checks than variables, `pos` the
/// mirror image, `inconclusive` the rest.
#[derive(Clone, Copy, Debug, Default, Serialize)]
pub struct BalanceTable {
    pub neg: PeakCounts,
    pub inconclusive: PeakCounts,
    pub pos: PeakCounts,
}

#[derive(Clone, Debug, Default, Serialize)]
pub struct Aggregates {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub peak_counts: Option<PeakCounts>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mean_f: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mean_f_hat: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mean_nullity_per_n: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mean_v_f_frac: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mean_v_u_frac: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mean_v_u_frozen_frac: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mean_ns_frac: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mean_ms_frac: Option<f64>,
    /// Total-variation gap between the pooled slush degree histogram and
    /// the conditioned Poisson law.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub slush_deg_tv: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mean_r: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mean_s: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mean_u: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub expected_r: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub expected_s: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub expected_u: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub balance_table: Option<BalanceTable>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub overlap_trials_within_3se: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mean_balance_stat: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mean_f_phi_gap: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub xi_max_dev: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub delta_max_dev: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gamma_max_dev: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub zeta_census: Option<BTreeMap<String, f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mean_sym_discrepancy: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mean_sym_discrepancy_pinned: Option<f64>,
    /// True when warning-propagation messages stood in for the exact
    /// per-edge oracle in the generalised-degree censuses.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub census_proxy: Option<bool>,
}

#[derive(Clone, Debug, Serialize)]
pub struct Report {
    pub config: ExperimentConfig,
    pub profile: AnalyticProfile,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub timestamp: Option<String>,
    pub per_trial: Vec<TrialRecord>,
    pub aggregates: Aggregates,
}

fn profile_for(d: f64) -> Result<AnalyticProfile, ExperimentError> {
    if d == 0.0 {
        return Ok(analytics::zero_density_profile());
    }
    fixed_points(d, 1e-12).map_err(|e| ExperimentError::Runtime(e.to_string()))
}

/// Runs the experiment described by `cfg` and returns the full report.
pub fn run(cfg: &ExperimentConfig) -> Result<Report, ExperimentError> {
    cfg.validate()?;
    let profile = profile_for(cfg.d)?;
    let zeta = if cfg.kind == ExperimentKind::Local {
        Some(zeta_census(cfg, &profile))
    } else {
        None
    };
    let per_trial: Vec<TrialRecord> = (0..cfg.trials)
        .into_par_iter()
        .map(|t| run_trial(cfg, &profile, zeta.as_ref(), t))
        .collect::<Result<_, _>>()?;
    let aggregates = aggregate(cfg, &profile, zeta, &per_trial);
    Ok(Report {
        config: cfg.clone(),
        profile,
        timestamp: None,
        per_trial,
        aggregates,
    })
}

fn run_trial(
    cfg: &ExperimentConfig,
    profile: &AnalyticProfile,
    zeta: Option<&BTreeMap<String, f64>>,
    t: usize,
) -> Result<TrialRecord, ExperimentError> {
    let started = Instant::now();
    let mut rng = stream(cfg.seed, t as u64);
    let a = gen_bernoulli(cfg.n, cfg.d, &mut rng)
        .map_err(|e| ExperimentError::Runtime(e.to_string()))?;
    let mut rec = match cfg.kind {
        ExperimentKind::TwoPoint => trial_two_point(cfg, profile, &a),
        ExperimentKind::Slush => trial_slush(cfg, profile, &a),
        ExperimentKind::Overlap => trial_overlap(cfg, &a, &mut rng),
        ExperimentKind::Local => trial_local(cfg, profile, zeta.expect("zeta census"), &a),
        ExperimentKind::Symmetry => trial_symmetry(cfg, &a, &mut rng),
    }?;
    rec.trial = t;
    rec.elapsed_ms = started.elapsed().as_millis() as u64;
    Ok(rec)
}

struct FrozenData {
    rank: RankProfile,
    is_frozen: Vec<bool>,
    f: f64,
}

fn frozen_data(a: &BitMatrix) -> FrozenData {
    let rank = a.rank_profile();
    let frozen = frozen_set(a, &rank);
    let mut is_frozen = vec![false; a.n_cols()];
    for &v in &frozen {
        is_frozen[v] = true;
    }
    let f = if a.n_cols() == 0 {
        0.0
    } else {
        frozen.len() as f64 / a.n_cols() as f64
    };
    FrozenData { rank, is_frozen, f }
}

/// Fraction of checks all of whose neighbours are frozen.
fn frozen_check_fraction(a: &BitMatrix, is_frozen: &[bool]) -> f64 {
    if a.n_rows() == 0 {
        return 0.0;
    }
    let frozen_checks = (0..a.n_rows())
        .filter(|&i| a.row(i).ones().all(|j| is_frozen[j]))
        .count();
    frozen_checks as f64 / a.n_rows() as f64
}

fn trial_two_point(
    cfg: &ExperimentConfig,
    profile: &AnalyticProfile,
    a: &BitMatrix,
) -> Result<TrialRecord, ExperimentError> {
    let fd = frozen_data(a);
    let g = TannerGraph::from_matrix(a);
    let ms = wp_run(&g).map_err(|e| ExperimentError::Runtime(e.to_string()))?;
    let dec = classify(&g, &ms).map_err(|e| ExperimentError::Runtime(e.to_string()))?;
    let n = cfg.n as f64;
    let v_u_frozen = dec.v_u.iter().filter(|&&v| fd.is_frozen[v]).count();
    Ok(TrialRecord {
        f: Some(fd.f),
        f_hat: Some(frozen_check_fraction(a, &fd.is_frozen)),
        nullity_per_n: Some(fd.rank.nullity as f64 / n),
        n_s: Some(dec.n_s),
        m_s: Some(dec.m_s),
        peak: Some(peak_label(fd.f, profile, cfg.epsilon)),
        v_f_frac: Some(dec.v_f.len() as f64 / n),
        v_u_frac: Some(dec.v_u.len() as f64 / n),
        v_u_frozen_frac: Some(v_u_frozen as f64 / n),
        wp_rounds: Some(ms.rounds_run),
        ..Default::default()
    })
}

fn trial_slush(
    cfg: &ExperimentConfig,
    profile: &AnalyticProfile,
    a: &BitMatrix,
) -> Result<TrialRecord, ExperimentError> {
    let fd = frozen_data(a);
    let g = TannerGraph::from_matrix(a);
    let ms = wp_run(&g).map_err(|e| ExperimentError::Runtime(e.to_string()))?;
    let dec = classify(&g, &ms).map_err(|e| ExperimentError::Runtime(e.to_string()))?;
    let n = cfg.n as f64;

    // degrees inside the slush subgraph
    let mut in_vs = vec![false; g.n_vars()];
    for &v in &dec.v_s {
        in_vs[v] = true;
    }
    let mut in_cs = vec![false; g.n_checks()];
    for &c in &dec.c_s {
        in_cs[c] = true;
    }
    let mut var_hist: Vec<usize> = Vec::new();
    for &v in &dec.v_s {
        let deg = g.var_adj(v).iter().filter(|&&(c, _)| in_cs[c]).count();
        if var_hist.len() <= deg {
            var_hist.resize(deg + 1, 0);
        }
        var_hist[deg] += 1;
    }
    let mut check_hist: Vec<usize> = Vec::new();
    for &c in &dec.c_s {
        let deg = g.check_adj(c).iter().filter(|&&(v, _)| in_vs[v]).count();
        if check_hist.len() <= deg {
            check_hist.resize(deg + 1, 0);
        }
        check_hist[deg] += 1;
    }

    // structural censuses: degree-two and degree-three all-slush checks,
    // and the variables pinched between two of the degree-three kind
    let mut check_s_count = vec![0usize; g.n_checks()];
    for (e, &(_, c)) in ms.edges.iter().enumerate() {
        if ms.var_to_check[e] == Msg::S {
            check_s_count[c] += 1;
        }
    }
    let mut set_r = 0usize;
    let mut in_t = vec![false; g.n_checks()];
    for c in 0..g.n_checks() {
        let deg = g.check_degree(c);
        if deg == 2 && check_s_count[c] == 2 {
            set_r += 1;
        }
        if deg == 3 && check_s_count[c] == 3 {
            in_t[c] = true;
        }
    }
    let set_s = (0..g.n_vars()).filter(|&v| g.var_degree(v) == 0).count();
    let set_u = (0..g.n_vars())
        .filter(|&v| {
            let adj = g.var_adj(v);
            adj.len() == 2 && g.var_degree(v) == 2 && adj.iter().all(|&(c, _)| in_t[c])
        })
        .count();

    let v_u_frozen = dec.v_u.iter().filter(|&&v| fd.is_frozen[v]).count();
    Ok(TrialRecord {
        f: Some(fd.f),
        f_hat: Some(frozen_check_fraction(a, &fd.is_frozen)),
        nullity_per_n: Some(fd.rank.nullity as f64 / n),
        n_s: Some(dec.n_s),
        m_s: Some(dec.m_s),
        peak: Some(peak_label(fd.f, profile, cfg.epsilon)),
        v_f_frac: Some(dec.v_f.len() as f64 / n),
        v_u_frac: Some(dec.v_u.len() as f64 / n),
        v_u_frozen_frac: Some(v_u_frozen as f64 / n),
        slush_var_deg_hist: Some(var_hist),
        slush_check_deg_hist: Some(check_hist),
        r: Some(set_r as f64 / n),
        s: Some(set_s as f64 / n),
        u: Some(set_u as f64 / n),
        wp_rounds: Some(ms.rounds_run),
        ..Default::default()
    })
}

fn trial_overlap(
    cfg: &ExperimentConfig,
    a: &BitMatrix,
    rng: &mut impl rand::Rng,
) -> Result<TrialRecord, ExperimentError> {
    let fd = frozen_data(a);
    let n = cfg.n as f64;
    let g = TannerGraph::from_matrix(a);
    let degree: Vec<usize> = (0..a.n_cols()).map(|v| g.var_degree(v)).collect();
    let unfrozen_weight: usize = (0..a.n_cols())
        .filter(|&v| !fd.is_frozen[v])
        .map(|v| degree[v])
        .sum();

    let pairs = cfg.samples_per_trial;
    let mut overlaps = Vec::with_capacity(pairs);
    let mut balance_acc = 0.0f64;
    let mut balance_count = 0usize;
    for _ in 0..pairs {
        let x = fd.rank.sample_kernel_one(a.n_cols(), rng);
        let y = fd.rank.sample_kernel_one(a.n_cols(), rng);
        let mut agree = 0usize;
        for v in 0..a.n_cols() {
            if x.get(v) == y.get(v) {
                agree += 1;
            }
        }
        overlaps.push(agree as f64 / n);
        if unfrozen_weight > 0 {
            for sample in [&x, &y] {
                let w: usize = sample
                    .ones()
                    .filter(|&v| !fd.is_frozen[v])
                    .map(|v| degree[v])
                    .sum();
                balance_acc += w as f64 / unfrozen_weight as f64;
                balance_count += 1;
            }
        }
    }
    let mean = overlaps.iter().sum::<f64>() / pairs as f64;
    let var = if pairs > 1 {
        overlaps.iter().map(|&x| (x - mean).powi(2)).sum::<f64>() / (pairs - 1) as f64
    } else {
        0.0
    };
    let se = (var / pairs as f64).sqrt();
    let expected = (1.0 + fd.f) / 2.0;
    Ok(TrialRecord {
        f: Some(fd.f),
        nullity_per_n: Some(fd.rank.nullity as f64 / n),
        overlap_mean: Some(mean),
        overlap_se: Some(se),
        overlap_expected: Some(expected),
        overlap_within_3se: Some((mean - expected).abs() <= 3.0 * se),
        balance_mean: if balance_count > 0 {
            Some(balance_acc / balance_count as f64)
        } else {
            None
        },
        ..Default::default()
    })
}

/// Extracts the depth-`depth` neighbourhood of `v` as a message-decorated
/// tree; `None` when the ball contains a cycle.
fn local_messaged_tree(
    g: &TannerGraph,
    ms: &MessageState,
    v: usize,
    depth: usize,
) -> Option<crate::graph::DecoratedTree> {
    use crate::graph::{DecoratedTree, TreeNode};
    let edge_id = |var: usize, check: usize| -> usize {
        ms.edges.binary_search(&(var, check)).expect("edge present")
    };
    let mut nodes = vec![TreeNode {
        kind: NodeKind::Variable,
        parent: None,
        msg_to_parent: None,
        level: 0,
    }];
    let mut hosts = vec![v];
    let mut seen_var = vec![false; g.n_vars()];
    let mut seen_check = vec![false; g.n_checks()];
    seen_var[v] = true;
    let mut frontier = vec![0usize];
    for level in 1..=depth {
        let mut next = Vec::new();
        for &i in &frontier {
            let host = hosts[i];
            let parent_host = nodes[i].parent.map(|p| hosts[p]);
            match nodes[i].kind {
                NodeKind::Variable => {
                    for &(c, m) in g.var_adj(host) {
                        if Some(c) == parent_host {
                            if m > 1 {
                                return None;
                            }
                            continue;
                        }
                        if m > 1 || seen_check[c] {
                            return None;
                        }
                        seen_check[c] = true;
                        nodes.push(TreeNode {
                            kind: NodeKind::Check,
                            parent: Some(i),
                            msg_to_parent: Some(ms.check_to_var[edge_id(host, c)]),
                            level,
                        });
                        hosts.push(c);
                        next.push(nodes.len() - 1);
                    }
                }
                NodeKind::Check => {
                    for &(y, m) in g.check_adj(host) {
                        if Some(y) == parent_host {
                            if m > 1 {
                                return None;
                            }
                            continue;
                        }
                        if m > 1 || seen_var[y] {
                            return None;
                        }
                        seen_var[y] = true;
                        nodes.push(TreeNode {
                            kind: NodeKind::Variable,
                            parent: Some(i),
                            msg_to_parent: Some(ms.var_to_check[edge_id(y, host)]),
                            level,
                        });
                        hosts.push(y);
                        next.push(nodes.len() - 1);
                    }
                }
            }
        }
        frontier = next;
        if frontier.is_empty() {
            break;
        }
    }
    Some(DecoratedTree { nodes, depth })
}

/// Reference census from the messaged branching process.
fn zeta_census(cfg: &ExperimentConfig, profile: &AnalyticProfile) -> BTreeMap<String, f64> {
    let mut rng = stream(cfg.seed, u64::MAX);
    let mut counts: BTreeMap<String, usize> = BTreeMap::new();
    for _ in 0..ZETA_SAMPLES {
        let t = sample_tree(
            NodeKind::Variable,
            cfg.depth,
            cfg.d,
            Some(profile),
            &mut rng,
        )
        .expect("validated rate");
        *counts.entry(census_key(&t)).or_insert(0) += 1;
    }
    counts
        .into_iter()
        .map(|(k, c)| (k, c as f64 / ZETA_SAMPLES as f64))
        .collect()
}

/// Census key: canonical code, with overly bushy roots pooled.
fn census_key(t: &crate::graph::DecoratedTree) -> String {
    let root_children = t.nodes.iter().filter(|n| n.parent == Some(0)).count();
    if root_children > CENSUS_MAX_ROOT_DEGREE {
        "_big".to_string()
    } else {
        t.canonical_code()
    }
}

/// Two-valued per-edge messages, either exact or proxied from the
/// warning-propagation fixed point.
struct EdgeMessages {
    edges: Vec<(usize, usize)>,
    incoming_at_var: Vec<StdMsg>,
    outgoing_at_var: Vec<StdMsg>,
}

fn edge_messages(
    a: &BitMatrix,
    ms: &MessageState,
    f: f64,
    profile: &AnalyticProfile,
) -> EdgeMessages {
    if a.n_cols() <= EXACT_CENSUS_MAX_N && a.count_ones() <= wp::STANDARD_MESSAGE_EDGE_LIMIT {
        let sm = standard_messages(a).expect("guard checked");
        return EdgeMessages {
            edges: sm.edges,
            incoming_at_var: sm.check_to_var,
            outgoing_at_var: sm.var_to_check,
        };
    }
    // slush messages resolve with the realized peak: frozen on the high
    // branch, unfrozen on the low one
    let s_to_f = (f - profile.alpha_upper).abs() < (f - profile.alpha_star).abs();
    let map = |m: Msg| -> StdMsg {
        match m {
            Msg::F => StdMsg::F,
            Msg::U => StdMsg::U,
            Msg::S => {
                if s_to_f {
                    StdMsg::F
                } else {
                    StdMsg::U
                }
            }
        }
    };
    EdgeMessages {
        edges: ms.edges.clone(),
        incoming_at_var: ms.check_to_var.iter().map(|&m| map(m)).collect(),
        outgoing_at_var: ms.var_to_check.iter().map(|&m| map(m)).collect(),
    }
}

fn mark_key(z: Mark) -> &'static str {
    match z {
        Mark::F => "f",
        Mark::Star => "star",
        Mark::U => "u",
    }
}

fn census_cell_key(z: Mark, l: [u64; 4]) -> String {
    format!("{}:{},{},{},{}", mark_key(z), l[0], l[1], l[2], l[3])
}

/// All (mark, counts) cells with every slot at most `CENSUS_MAX_SLOT`.
fn small_cells() -> Vec<(Mark, [u64; 4])> {
    let mut cells = Vec::new();
    for uu in 0..=CENSUS_MAX_SLOT {
        for uf in 0..=CENSUS_MAX_SLOT {
            for fu in 0..=CENSUS_MAX_SLOT {
                for ff in 0..=CENSUS_MAX_SLOT {
                    for z in [Mark::F, Mark::Star, Mark::U] {
                        cells.push((z, [uu, uf, fu, ff]));
                    }
                }
            }
        }
    }
    cells
}

struct GenDegCensus {
    census: BTreeMap<String, f64>,
    max_dev: f64,
}

/// Variable-side generalised degree census against its closed form.
fn delta_census(a: &BitMatrix, em: &EdgeMessages, d: f64, alpha_hat: f64) -> GenDegCensus {
    let n = a.n_cols();
    let mut var_edges: Vec<Vec<usize>> = vec![Vec::new(); n];
    for (e, &(v, _)) in em.edges.iter().enumerate() {
        var_edges[v].push(e);
    }
    let mut counts: BTreeMap<String, usize> = BTreeMap::new();
    for v in 0..n {
        let mut l = [0u64; 4];
        let mut incoming_f = 0usize;
        for &e in &var_edges[v] {
            let inc = em.incoming_at_var[e];
            let out = em.outgoing_at_var[e];
            if inc == StdMsg::F {
                incoming_f += 1;
            }
            l[message_slot(inc, out)] += 1;
        }
        let z = match incoming_f {
            0 => Mark::U,
            1 => Mark::Star,
            _ => Mark::F,
        };
        *counts.entry(census_cell_key(z, l)).or_insert(0) += 1;
    }
    finish_census(counts, n, |z, l| analytics::gen_deg_d(d, alpha_hat, z, l))
}

/// Check-side generalised degree census against its closed form.
fn gamma_census(a: &BitMatrix, em: &EdgeMessages, d: f64, alpha: f64) -> GenDegCensus {
    let m = a.n_rows();
    let mut check_edges: Vec<Vec<usize>> = vec![Vec::new(); m];
    for (e, &(_, c)) in em.edges.iter().enumerate() {
        check_edges[c].push(e);
    }
    let mut counts: BTreeMap<String, usize> = BTreeMap::new();
    for c in 0..m {
        let deg = check_edges[c].len();
        let mut l = [0u64; 4];
        let mut incoming_f = 0usize;
        for &e in &check_edges[c] {
            // at a check the incoming message is the variable's and the
            // outgoing one is sent back to the variable
            let inc = em.outgoing_at_var[e];
            let out = em.incoming_at_var[e];
            if inc == StdMsg::F {
                incoming_f += 1;
            }
            l[message_slot(inc, out)] += 1;
        }
        let z = if incoming_f == deg {
            Mark::F
        } else if incoming_f + 1 == deg {
            Mark::Star
        } else {
            Mark::U
        };
        *counts.entry(census_cell_key(z, l)).or_insert(0) += 1;
    }
    finish_census(counts, m, |z, l| analytics::gen_deg_g(d, alpha, z, l))
}

/// Slot order matches the closed forms: (uu, uf, fu, ff).
fn message_slot(inc: StdMsg, out: StdMsg) -> usize {
    match (inc, out) {
        (StdMsg::U, StdMsg::U) => 0,
        (StdMsg::U, StdMsg::F) => 1,
        (StdMsg::F, StdMsg::U) => 2,
        (StdMsg::F, StdMsg::F) => 3,
    }
}

fn finish_census(
    counts: BTreeMap<String, usize>,
    total: usize,
    expect: impl Fn(Mark, [u64; 4]) -> f64,
) -> GenDegCensus {
    let census: BTreeMap<String, f64> = counts
        .into_iter()
        .map(|(k, c)| (k, c as f64 / total as f64))
        .collect();
    let mut max_dev = 0.0f64;
    for (z, l) in small_cells() {
        let got = census.get(&census_cell_key(z, l)).copied().unwrap_or(0.0);
        max_dev = max_dev.max((got - expect(z, l)).abs());
    }
    GenDegCensus { census, max_dev }
}

fn trial_local(
    cfg: &ExperimentConfig,
    profile: &AnalyticProfile,
    zeta: &BTreeMap<String, f64>,
    a: &BitMatrix,
) -> Result<TrialRecord, ExperimentError> {
    let fd = frozen_data(a);
    let g = TannerGraph::from_matrix(a);
    let ms = wp_run(&g).map_err(|e| ExperimentError::Runtime(e.to_string()))?;
    let n = cfg.n as f64;

    // neighbourhood census with messages toward the root
    let mut counts: BTreeMap<String, usize> = BTreeMap::new();
    for v in 0..g.n_vars() {
        let key = match local_messaged_tree(&g, &ms, v, cfg.depth) {
            Some(t) => census_key(&t),
            None => "_cyclic".to_string(),
        };
        *counts.entry(key).or_insert(0) += 1;
    }
    let xi: BTreeMap<String, f64> = counts.into_iter().map(|(k, c)| (k, c as f64 / n)).collect();
    let mut xi_max_dev = 0.0f64;
    for key in xi.keys().chain(zeta.keys()) {
        if key.starts_with('_') {
            continue;
        }
        let p = xi.get(key).copied().unwrap_or(0.0);
        let q = zeta.get(key).copied().unwrap_or(0.0);
        xi_max_dev = xi_max_dev.max((p - q).abs());
    }

    // generalised degree censuses; the frozen-message probability at a
    // variable is the decay of the realized frozen fraction
    let em = edge_messages(a, &ms, fd.f, profile);
    let alpha_hat = decay(cfg.d, fd.f);
    let dc = delta_census(a, &em, cfg.d, alpha_hat);
    let gc = gamma_census(a, &em, cfg.d, fd.f);

    Ok(TrialRecord {
        f: Some(fd.f),
        f_hat: Some(frozen_check_fraction(a, &fd.is_frozen)),
        nullity_per_n: Some(fd.rank.nullity as f64 / n),
        peak: Some(peak_label(fd.f, profile, cfg.epsilon)),
        f_phi_gap: Some((fd.f - phi(cfg.d, fd.f)).abs()),
        xi_census: Some(xi),
        xi_max_dev: Some(xi_max_dev),
        delta_census: Some(dc.census),
        delta_max_dev: Some(dc.max_dev),
        gamma_census: Some(gc.census),
        gamma_max_dev: Some(gc.max_dev),
        wp_rounds: Some(ms.rounds_run),
        wp_changes: Some(ms.changes_per_round.clone()),
        ..Default::default()
    })
}

/// Mean over sampled coordinate pairs of the total absolute gap between
/// the empirical joint law and the product of the marginals.
fn pair_discrepancy(
    rank: &RankProfile,
    n_cols: usize,
    samples: usize,
    rng: &mut impl rand::Rng,
) -> f64 {
    let draws = rank.sample_kernel(n_cols, samples, rng);
    let mut total = 0.0f64;
    let mut pairs = 0usize;
    for _ in 0..SYMMETRY_PAIRS {
        let i = rng.gen_range(0..n_cols);
        let j = rng.gen_range(0..n_cols);
        if i == j {
            continue;
        }
        let mut n1 = 0usize;
        let mut m1 = 0usize;
        let mut both = 0usize;
        for x in &draws {
            let xi = x.get(i);
            let xj = x.get(j);
            n1 += xi as usize;
            m1 += xj as usize;
            both += (xi && xj) as usize;
        }
        let s = samples as f64;
        let (pi, pj, pij) = (n1 as f64 / s, m1 as f64 / s, both as f64 / s);
        // all four joint cells deviate by the same covariance gap
        total += 4.0 * (pij - pi * pj).abs();
        pairs += 1;
    }
    if pairs == 0 {
        0.0
    } else {
        total / pairs as f64
    }
}

fn trial_symmetry(
    cfg: &ExperimentConfig,
    a: &BitMatrix,
    rng: &mut impl rand::Rng,
) -> Result<TrialRecord, ExperimentError> {
    let fd = frozen_data(a);
    let disc = pair_discrepancy(&fd.rank, a.n_cols(), cfg.samples_per_trial, rng);
    let pinned = if cfg.pin_t > 0 {
        let b = pin(a, cfg.pin_t, PinMode::Replace, rng);
        let rank = b.rank_profile();
        Some(pair_discrepancy(
            &rank,
            b.n_cols(),
            cfg.samples_per_trial,
            rng,
        ))
    } else {
        None
    };
    Ok(TrialRecord {
        f: Some(fd.f),
        nullity_per_n: Some(fd.rank.nullity as f64 / cfg.n as f64),
        sym_discrepancy: Some(disc),
        sym_discrepancy_pinned: pinned,
        ..Default::default()
    })
}

fn mean_of(values: impl Iterator<Item = Option<f64>>) -> Option<f64> {
    let mut sum = 0.0;
    let mut count = 0usize;
    for v in values.flatten() {
        sum += v;
        count += 1;
    }
    if count == 0 {
        None
    } else {
        Some(sum / count as f64)
    }
}

fn aggregate(
    cfg: &ExperimentConfig,
    profile: &AnalyticProfile,
    zeta: Option<BTreeMap<String, f64>>,
    trials: &[TrialRecord],
) -> Aggregates {
    let mut agg = Aggregates {
        mean_f: mean_of(trials.iter().map(|t| t.f)),
        mean_f_hat: mean_of(trials.iter().map(|t| t.f_hat)),
        mean_nullity_per_n: mean_of(trials.iter().map(|t| t.nullity_per_n)),
        mean_v_f_frac: mean_of(trials.iter().map(|t| t.v_f_frac)),
        mean_v_u_frac: mean_of(trials.iter().map(|t| t.v_u_frac)),
        mean_v_u_frozen_frac: mean_of(trials.iter().map(|t| t.v_u_frozen_frac)),
        mean_ns_frac: mean_of(
            trials
                .iter()
                .map(|t| t.n_s.map(|v| v as f64 / cfg.n as f64)),
        ),
        mean_ms_frac: mean_of(
            trials
                .iter()
                .map(|t| t.m_s.map(|v| v as f64 / cfg.n as f64)),
        ),
        mean_r: mean_of(trials.iter().map(|t| t.r)),
        mean_s: mean_of(trials.iter().map(|t| t.s)),
        mean_u: mean_of(trials.iter().map(|t| t.u)),
        mean_balance_stat: mean_of(trials.iter().map(|t| t.balance_mean)),
        mean_f_phi_gap: mean_of(trials.iter().map(|t| t.f_phi_gap)),
        mean_sym_discrepancy: mean_of(trials.iter().map(|t| t.sym_discrepancy)),
        mean_sym_discrepancy_pinned: mean_of(trials.iter().map(|t| t.sym_discrepancy_pinned)),
        zeta_census: zeta,
        ..Default::default()
    };

    if trials.iter().any(|t| t.peak.is_some()) {
        let mut counts = PeakCounts::default();
        for t in trials {
            if let Some(p) = t.peak {
                counts.add(p);
            }
        }
        agg.peak_counts = Some(counts);
    }

    if cfg.kind == ExperimentKind::Slush {
        // pooled variable-side slush degree histogram against the
        // conditioned Poisson law
        let mut hist: Vec<usize> = Vec::new();
        let mut total = 0usize;
        for t in trials {
            if let Some(h) = &t.slush_var_deg_hist {
                if hist.len() < h.len() {
                    hist.resize(h.len(), 0);
                }
                for (deg, &c) in h.iter().enumerate() {
                    hist[deg] += c;
                    total += c;
                }
            }
        }
        if total > 0 && profile.lambda > 0.0 {
            let mut tv = 0.0f64;
            let mut theory_seen = 0.0f64;
            for (deg, &c) in hist.iter().enumerate().skip(2) {
                let p = analytics::po_ge2(profile.lambda, deg as u64).unwrap_or(0.0);
                tv += (c as f64 / total as f64 - p).abs();
                theory_seen += p;
            }
            // histogram mass below degree two plus unseen theory tail
            let low: usize = hist.iter().take(2).sum();
            tv += low as f64 / total as f64;
            tv += (1.0 - theory_seen).max(0.0);
            agg.slush_deg_tv = Some(tv / 2.0);
        }
        let (r_bar, s_bar, u_bar) = slush_constants(cfg.d, profile);
        agg.expected_r = Some(r_bar);
        agg.expected_s = Some(s_bar);
        agg.expected_u = Some(u_bar);

        if cfg.d > std::f64::consts::E {
            let mut table = BalanceTable::default();
            for t in trials {
                let (Some(ns), Some(ms_), Some(peak)) = (t.n_s, t.m_s, t.peak) else {
                    continue;
                };
                let b = ns as i64 - ms_ as i64;
                if b >= cfg.omega {
                    table.pos.add(peak);
                } else if -b >= cfg.omega {
                    table.neg.add(peak);
                } else {
                    table.inconclusive.add(peak);
                }
            }
            agg.balance_table = Some(table);
        }
    }

    if cfg.kind == ExperimentKind::Overlap {
        agg.overlap_trials_within_3se = Some(
            trials
                .iter()
                .filter(|t| t.overlap_within_3se == Some(true))
                .count(),
        );
    }

    if cfg.kind == ExperimentKind::Local {
        agg.xi_max_dev = trials
            .iter()
            .filter_map(|t| t.xi_max_dev)
            .fold(None, fold_max);
        agg.delta_max_dev = trials
            .iter()
            .filter_map(|t| t.delta_max_dev)
            .fold(None, fold_max);
        agg.gamma_max_dev = trials
            .iter()
            .filter_map(|t| t.gamma_max_dev)
            .fold(None, fold_max);
        agg.census_proxy = Some(cfg.n > EXACT_CENSUS_MAX_N);
    }

    agg
}

fn fold_max(acc: Option<f64>, x: f64) -> Option<f64> {
    Some(acc.map_or(x, |a| a.max(x)))
}

/// Stable CSV flattening: one row per trial, fixed column order.
pub const CSV_COLUMNS: &[&str] = &[
    "trial",
    "f",
    "f_hat",
    "nullity_per_n",
    "n_s",
    "m_s",
    "peak",
    "v_f_frac",
    "v_u_frac",
    "v_u_frozen_frac",
    "r",
    "s",
    "u",
    "overlap_mean",
    "overlap_se",
    "overlap_expected",
    "balance_mean",
    "f_phi_gap",
    "xi_max_dev",
    "delta_max_dev",
    "gamma_max_dev",
    "sym_discrepancy",
    "sym_discrepancy_pinned",
    "wp_rounds",
    "elapsed_ms",
];

pub fn report_to_csv(report: &Report) -> String {
    fn cell_f(v: Option<f64>) -> String {
        v.map(|x| format!("{x}")).unwrap_or_default()
    }
    fn cell_u(v: Option<usize>) -> String {
        v.map(|x| x.to_string()).unwrap_or_default()
    }
    let mut out = CSV_COLUMNS.join(",");
    out.push('\n');
    for t in &report.per_trial {
        let row = [
            t.trial.to_string(),
            cell_f(t.f),
            cell_f(t.f_hat),
            cell_f(t.nullity_per_n),
            cell_u(t.n_s),
            cell_u(t.m_s),
            t.peak.map(|p| p.to_string()).unwrap_or_default(),
            cell_f(t.v_f_frac),
            cell_f(t.v_u_frac),
            cell_f(t.v_u_frozen_frac),
            cell_f(t.r),
            cell_f(t.s),
            cell_f(t.u),
            cell_f(t.overlap_mean),
            cell_f(t.overlap_se),
            cell_f(t.overlap_expected),
            cell_f(t.balance_mean),
            cell_f(t.f_phi_gap),
            cell_f(t.xi_max_dev),
            cell_f(t.delta_max_dev),
            cell_f(t.gamma_max_dev),
            cell_f(t.sym_discrepancy),
            cell_f(t.sym_discrepancy_pinned),
            cell_u(t.wp_rounds),
            t.elapsed_ms.to_string(),
        ];
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}

/// Clears the wall-clock fields so two runs of the same seeded config
/// serialise byte-identically.
pub fn strip_volatile(report: &mut Report) {
    report.timestamp = None;
    for t in &mut report.per_trial {
        t.elapsed_ms = 0;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(kind: ExperimentKind, n: usize, d: f64, trials: usize, seed: u64) -> ExperimentConfig {
        ExperimentConfig {
            kind,
            n,
            d,
            trials,
            samples_per_trial: 50,
            depth: 1,
            pin_t: 0,
            seed,
            epsilon: 0.03,
            omega: 20,
        }
    }

    #[test]
    fn config_validation() {
        let mut c = cfg(ExperimentKind::TwoPoint, 100, 3.0, 2, 1);
        c.validate().unwrap();
        c.epsilon = 0.3;
        assert!(c.validate().is_err());
        c.epsilon = 0.03;
        c.trials = 0;
        assert!(c.validate().is_err());
        c.trials = 1;
        c.kind = ExperimentKind::Local;
        c.depth = 3;
        assert!(c.validate().is_err());
    }

    #[test]
    fn two_point_zero_density() {
        // every trial sees the zero matrix: nothing freezes, full kernel
        let report = run(&cfg(ExperimentKind::TwoPoint, 200, 0.0, 3, 7)).unwrap();
        for t in &report.per_trial {
            assert_eq!(t.f, Some(0.0));
            assert_eq!(t.nullity_per_n, Some(1.0));
            assert_eq!(t.peak, Some(PeakLabel::Low));
        }
    }

    #[test]
    fn reports_are_deterministic() {
        let c = cfg(ExperimentKind::TwoPoint, 300, 3.0, 4, 42);
        let mut r1 = run(&c).unwrap();
        let mut r2 = run(&c).unwrap();
        strip_volatile(&mut r1);
        strip_volatile(&mut r2);
        assert_eq!(
            serde_json::to_string(&r1).unwrap(),
            serde_json::to_string(&r2).unwrap()
        );
    }

    #[test]
    fn peak_labeling_rules() {
        let p = fixed_points(3.0, 1e-12).unwrap();
        assert_eq!(peak_label(p.alpha_star + 0.01, &p, 0.03), PeakLabel::Low);
        assert_eq!(peak_label(p.alpha_upper - 0.01, &p, 0.03), PeakLabel::High);
        assert_eq!(peak_label(p.alpha_zero, &p, 0.03), PeakLabel::Mid);
        assert_eq!(peak_label(0.5, &p, 0.03), PeakLabel::None);
    }

    #[test]
    fn overlap_pair_mean_matches_enumeration() {
        // a single constraint on two variables: mean overlap over all
        // ordered kernel pairs is 1/2 = (1+f)/2 with f = 0
        let a = BitMatrix::from_dense(&[&[1, 1]]);
        let fd = frozen_data(&a);
        let kernel = fd.rank.enumerate_kernel(2);
        let mut total = 0.0;
        for x in &kernel {
            for y in &kernel {
                let agree = (0..2).filter(|&i| x.get(i) == y.get(i)).count();
                total += agree as f64 / 2.0;
            }
        }
        let mean = total / (kernel.len() * kernel.len()) as f64;
        assert!((mean - 0.5).abs() < 1e-12);
        assert!((mean - (1.0 + fd.f) / 2.0).abs() < 1e-12);
    }

    #[test]
    fn overlap_trials_stay_within_three_se() {
        let report = run(&ExperimentConfig {
            samples_per_trial: 200,
            ..cfg(ExperimentKind::Overlap, 400, 3.0, 3, 11)
        })
        .unwrap();
        for t in &report.per_trial {
            assert!(t.overlap_within_3se.unwrap(), "trial {}: {t:?}", t.trial);
        }
    }

    #[test]
    fn symmetry_zero_matrix_small_discrepancy() {
        // kernel of the zero matrix is all of F2^n: fair independent coins
        let report = run(&ExperimentConfig {
            samples_per_trial: 10_000,
            ..cfg(ExperimentKind::Symmetry, 50, 0.0, 1, 5)
        })
        .unwrap();
        let d = report.per_trial[0].sym_discrepancy.unwrap();
        assert!(d <= 0.02, "discrepancy={d}");
    }

    #[test]
    fn symmetry_point_mass_kernel() {
        // the identity has kernel {0}: every pair discrepancy vanishes
        let a = BitMatrix::identity(30);
        let fd = frozen_data(&a);
        let mut rng = stream(9, 9);
        let disc = pair_discrepancy(&fd.rank, 30, 500, &mut rng);
        assert_eq!(disc, 0.0);
    }

    #[test]
    fn symmetry_with_pinning_reports_both() {
        let report = run(&ExperimentConfig {
            pin_t: 5,
            samples_per_trial: 200,
            ..cfg(ExperimentKind::Symmetry, 200, 3.0, 2, 21)
        })
        .unwrap();
        for t in &report.per_trial {
            assert!(t.sym_discrepancy.is_some());
            assert!(t.sym_discrepancy_pinned.is_some());
        }
    }

    #[test]
    fn local_exact_path_on_small_instance() {
        let report = run(&ExperimentConfig {
            depth: 1,
            ..cfg(ExperimentKind::Local, 300, 3.0, 2, 3)
        })
        .unwrap();
        assert_eq!(report.aggregates.census_proxy, Some(false));
        for t in &report.per_trial {
            // the neighbourhood census is a probability vector
            let total: f64 = t.xi_census.as_ref().unwrap().values().sum();
            assert!((total - 1.0).abs() < 1e-9);
            assert!(t.xi_max_dev.unwrap() <= 0.2, "loose small-n sanity bound");
        }
    }

    #[test]
    fn local_zero_density_census_is_exact() {
        let report = run(&ExperimentConfig {
            depth: 1,
            ..cfg(ExperimentKind::Local, 100, 0.0, 1, 3)
        })
        .unwrap();
        let t = &report.per_trial[0];
        // every neighbourhood is the bare root
        assert_eq!(t.xi_census.as_ref().unwrap().len(), 1);
        assert_eq!(t.xi_max_dev, Some(0.0));
        assert_eq!(t.f_phi_gap, Some(0.0));
    }

    #[test]
    fn local_depth_two_census_runs() {
        let report = run(&ExperimentConfig {
            depth: 2,
            ..cfg(ExperimentKind::Local, 300, 2.0, 1, 8)
        })
        .unwrap();
        let t = &report.per_trial[0];
        let total: f64 = t.xi_census.as_ref().unwrap().values().sum();
        assert!((total - 1.0).abs() < 1e-9);
        // depth-two codes nest one level deeper than depth-one ones
        assert!(t
            .xi_census
            .as_ref()
            .unwrap()
            .keys()
            .any(|k| k.matches('(').count() >= 3 || k == "_big" || k == "_cyclic"));
    }

    #[test]
    fn misclassified_unfrozen_share_is_small_at_scale() {
        let report = run(&cfg(ExperimentKind::TwoPoint, 4000, 3.0, 3, 17)).unwrap();
        for t in &report.per_trial {
            let share = t.v_u_frozen_frac.unwrap();
            assert!(share <= 0.02, "misclassified unfrozen share {share}");
        }
    }

    #[test]
    fn symmetry_at_scale_has_small_discrepancy() {
        let report = run(&ExperimentConfig {
            samples_per_trial: 1000,
            ..cfg(ExperimentKind::Symmetry, 2000, 3.0, 2, 23)
        })
        .unwrap();
        for t in &report.per_trial {
            let d = t.sym_discrepancy.unwrap();
            assert!(d <= 0.05, "mean pair discrepancy {d}");
        }
    }

    #[test]
    fn overlap_of_point_mass_kernel_is_one() {
        let a = BitMatrix::identity(40);
        let c = ExperimentConfig {
            samples_per_trial: 10,
            ..cfg(ExperimentKind::Overlap, 40, 1.0, 1, 2)
        };
        let rec = trial_overlap(&c, &a, &mut stream(2, 0)).unwrap();
        assert_eq!(rec.overlap_mean, Some(1.0));
        assert_eq!(rec.overlap_expected, Some(1.0));
        assert_eq!(rec.overlap_within_3se, Some(true));
    }

    #[test]
    fn slush_low_density_is_empty() {
        let report = run(&cfg(ExperimentKind::Slush, 2000, 1.0, 3, 13)).unwrap();
        for t in &report.per_trial {
            let frac = t.n_s.unwrap() as f64 / 2000.0;
            assert!(frac <= 0.01, "slush fraction {frac} at d=1");
        }
        assert_eq!(report.profile.nu, 0.0);
    }

    #[test]
    fn csv_has_stable_header_and_rows() {
        let report = run(&cfg(ExperimentKind::TwoPoint, 100, 2.0, 2, 1)).unwrap();
        let csv = report_to_csv(&report);
        let mut lines = csv.lines();
        assert_eq!(lines.next().unwrap(), CSV_COLUMNS.join(","));
        assert_eq!(lines.count(), 2);
    }
}
