use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{
    recommend, sample_bipartite_graph, sample_user_items, Color, GenerativeParams, RecommenderConfig, RecsysError,
};
use crate::seeds::{Component, SeedStreams};

/// Accepted samples needed before the verdict can be anything but
/// inconclusive.
pub const MIN_VERDICT_SAMPLES: u64 = 100;

/// Two-sided 95% normal quantile.
const Z_95: f64 = 1.959_963_984_540_054;

/// How the probe user reacts to a recommendation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum AcceptanceMode {
    /// Accept RED with probability `x`, BLUE with probability `1 - x`.
    Biased,
    /// Accept with a fixed probability whatever the color.
    Unbiased(f64),
}

impl FromStr for AcceptanceMode {
    type Err = RecsysError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || RecsysError::InvalidMode(s.to_string());
        match s.split_once(':') {
            None if s == "biased" => Ok(AcceptanceMode::Biased),
            Some(("unbiased", p)) => {
                let p: f64 = p.parse().map_err(|_| bad())?;
                if (0.0..=1.0).contains(&p) {
                    Ok(AcceptanceMode::Unbiased(p))
                } else {
                    Err(bad())
                }
            }
            _ => Err(bad()),
        }
    }
}

impl fmt::Display for AcceptanceMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AcceptanceMode::Biased => f.write_str("biased"),
            AcceptanceMode::Unbiased(p) => write!(f, "unbiased:{p}"),
        }
    }
}

impl TryFrom<String> for AcceptanceMode {
    type Error = RecsysError;

    fn try_from(s: String) -> Result<Self, Self::Error> {
        s.parse()
    }
}

impl From<AcceptanceMode> for String {
    fn from(m: AcceptanceMode) -> String {
        m.to_string()
    }
}

pub fn accept<R: Rng + ?Sized>(opinion: f64, color: Color, mode: AcceptanceMode, rng: &mut R) -> bool {
    let p = match (mode, color) {
        (AcceptanceMode::Biased, Color::Red) => opinion,
        (AcceptanceMode::Biased, Color::Blue) => 1.0 - opinion,
        (AcceptanceMode::Unbiased(p), _) => p,
    };
    rng.random::<f64>() < p
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    Polarizing,
    NotPolarizing,
    Inconclusive,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EstimateConfig {
    pub generative: GenerativeParams,
    pub recommender: RecommenderConfig,
    pub probe_opinion: f64,
    pub mode: AcceptanceMode,
    pub trials: u64,
    /// Consecutive trials that share one sampled graph; each trial still
    /// gets a freshly wired probe.
    pub trials_per_graph: u64,
}

impl EstimateConfig {
    pub fn problems(&self) -> Vec<String> {
        let mut out = self.generative.problems();
        if !(self.probe_opinion > 0.0 && self.probe_opinion < 1.0) {
            out.push(format!("probe opinion {} must lie strictly between 0 and 1", self.probe_opinion));
        }
        if let AcceptanceMode::Unbiased(p) = self.mode {
            if !(0.0..=1.0).contains(&p) {
                out.push(format!("acceptance probability {p} must lie in [0, 1]"));
            }
        }
        if self.trials == 0 {
            out.push("trials must be at least 1".into());
        }
        if self.trials_per_graph == 0 {
            out.push("trials per graph must be at least 1".into());
        }
        if self.recommender.walks == super::WalkBudget::Sampled(0) {
            out.push("walk count must be at least 1".into());
        }
        out
    }
}

/// One recommendation to a planted probe.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub trial: u64,
    pub graph: u64,
    pub probe_degree: usize,
    pub probe_red_fraction: f64,
    pub item: usize,
    pub color: Color,
    pub accepted: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PolarizationEstimate {
    pub probe_opinion: f64,
    /// Fraction of accepted recommendations that were RED; `None` when
    /// nothing was accepted.
    pub p_red_given_accept: Option<f64>,
    /// Fraction of all recommendations that were RED.
    pub p_red: f64,
    /// Number of accepted recommendations.
    pub sample_count: u64,
    pub trials: u64,
    pub ci_halfwidth: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub verdict: Verdict,
    /// Probe draws discarded because the probe owned no items.
    pub resampled_probes: u64,
}

impl PolarizationEstimate {
    pub fn from_records(probe_opinion: f64, records: &[TrialRecord], resampled_probes: u64) -> Self {
        let trials = records.len() as u64;
        let red = records.iter().filter(|r| r.color == Color::Red).count() as f64;
        let accepted = records.iter().filter(|r| r.accepted).count() as u64;
        let red_accepted = records.iter().filter(|r| r.accepted && r.color == Color::Red).count() as f64;
        let p_red = if trials > 0 { red / trials as f64 } else { 0.0 };
        let (p_hat, half) = if accepted > 0 {
            let p = red_accepted / accepted as f64;
            (Some(p), Z_95 * (p * (1.0 - p) / accepted as f64).sqrt())
        } else {
            (None, 0.0)
        };
        let centre = p_hat.unwrap_or(0.5);
        let (ci_low, ci_high) = if p_hat.is_some() { (centre - half, centre + half) } else { (0.0, 1.0) };
        let verdict = verdict(probe_opinion, accepted, ci_low, ci_high);
        Self {
            probe_opinion,
            p_red_given_accept: p_hat,
            p_red,
            sample_count: accepted,
            trials,
            ci_halfwidth: half,
            ci_low,
            ci_high,
            verdict,
            resampled_probes,
        }
    }
}

/// Polarizing when the interval excludes `x` on the side of the probe's
/// majority color; not polarizing when it excludes `x` on the other side.
fn verdict(x: f64, accepted: u64, low: f64, high: f64) -> Verdict {
    if accepted < MIN_VERDICT_SAMPLES || (low <= x && x <= high) {
        return Verdict::Inconclusive;
    }
    let above = low > x;
    let toward_majority = if x > 0.5 {
        above
    } else if x < 0.5 {
        !above
    } else {
        false
    };
    if toward_majority {
        Verdict::Polarizing
    } else {
        Verdict::NotPolarizing
    }
}

/// Monte Carlo estimate of `P(RED | accepted)` for a probe user of opinion
/// `config.probe_opinion`.
///
/// Trial `t` runs on graph `t / trials_per_graph`. Graphs and trials draw
/// from their own seed streams, so the result does not depend on how the
/// work is split across threads. Records come back in trial order.
pub fn estimate_polarization(
    config: &EstimateConfig,
    seeds: &SeedStreams,
) -> Result<(PolarizationEstimate, Vec<TrialRecord>), RecsysError> {
    let problems = config.problems();
    if !problems.is_empty() {
        return Err(RecsysError::InvalidParams(problems));
    }
    let graphs = config.trials.div_ceil(config.trials_per_graph);
    let per_graph: Vec<(Vec<TrialRecord>, u64)> =
        (0..graphs).into_par_iter().map(|g| run_graph(config, seeds, g)).collect::<Result<_, _>>()?;
    let mut records = Vec::with_capacity(config.trials as usize);
    let mut resampled = 0;
    for (recs, r) in per_graph {
        records.extend(recs);
        resampled += r;
    }
    Ok((PolarizationEstimate::from_records(config.probe_opinion, &records, resampled), records))
}

fn run_graph(config: &EstimateConfig, seeds: &SeedStreams, g: u64) -> Result<(Vec<TrialRecord>, u64), RecsysError> {
    let mut graph = sample_bipartite_graph(&config.generative, &mut seeds.rng(Component::GraphSampling, g))?;
    let n = config.generative.n;
    let x = config.probe_opinion;
    let first = g * config.trials_per_graph;
    let last = (first + config.trials_per_graph).min(config.trials);
    let mut records = Vec::with_capacity((last - first) as usize);
    let mut resampled = 0;
    for trial in first..last {
        let mut probe_rng = seeds.rng(Component::Probe, trial);
        let items = loop {
            let items = sample_user_items(n, config.generative.k, x, &mut probe_rng);
            if !items.is_empty() {
                break items;
            }
            resampled += 1;
        };
        let probe = graph.add_user(x, items)?;
        let item = recommend(&graph, probe, &config.recommender, &mut seeds.rng(Component::Walks, trial));
        let probe_degree = graph.user_items(probe).len();
        let probe_red_fraction = graph.red_fraction(probe).unwrap_or(0.0);
        graph.remove_last_user();
        let item = item?;
        let color = graph.item_color(item);
        let accepted = accept(x, color, config.mode, &mut seeds.rng(Component::Acceptance, trial));
        records.push(TrialRecord { trial, graph: g, probe_degree, probe_red_fraction, item, color, accepted });
    }
    Ok((records, resampled))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::recsys::{Algorithm, OpinionDistribution, WalkBudget};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn config(x: f64, mode: AcceptanceMode, trials: u64) -> EstimateConfig {
        EstimateConfig {
            generative: GenerativeParams::new(60, 120, 8.0, OpinionDistribution::Uniform).unwrap(),
            recommender: RecommenderConfig::new(Algorithm::Salsa, WalkBudget::Exact).unwrap(),
            probe_opinion: x,
            mode,
            trials,
            trials_per_graph: 50,
        }
    }

    #[test]
    fn mode_parsing() {
        assert_eq!("biased".parse::<AcceptanceMode>().unwrap(), AcceptanceMode::Biased);
        assert_eq!("unbiased:0.5".parse::<AcceptanceMode>().unwrap(), AcceptanceMode::Unbiased(0.5));
        assert!("unbiased:1.5".parse::<AcceptanceMode>().is_err());
        assert!("sometimes".parse::<AcceptanceMode>().is_err());
    }

    #[test]
    fn acceptance_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..1000 {
            assert!(accept(1.0, Color::Red, AcceptanceMode::Biased, &mut rng));
            assert!(!accept(1.0, Color::Blue, AcceptanceMode::Biased, &mut rng));
            assert!(!accept(0.3, Color::Red, AcceptanceMode::Unbiased(0.0), &mut rng));
        }
        let n = 100_000;
        let hits = (0..n).filter(|_| accept(0.7, Color::Red, AcceptanceMode::Biased, &mut rng)).count() as f64;
        let sd = (0.7 * 0.3 / n as f64).sqrt();
        assert!((hits / n as f64 - 0.7).abs() < 3.0 * sd);
    }

    #[test]
    fn verdict_rules() {
        assert_eq!(verdict(0.75, 99, 0.9, 0.95), Verdict::Inconclusive);
        assert_eq!(verdict(0.75, 100, 0.76, 0.8), Verdict::Polarizing);
        assert_eq!(verdict(0.75, 100, 0.5, 0.7), Verdict::NotPolarizing);
        assert_eq!(verdict(0.75, 100, 0.7, 0.8), Verdict::Inconclusive);
        assert_eq!(verdict(0.25, 100, 0.1, 0.2), Verdict::Polarizing);
        assert_eq!(verdict(0.25, 100, 0.3, 0.4), Verdict::NotPolarizing);
    }

    #[test]
    fn zero_acceptances_is_inconclusive() {
        let (est, records) =
            estimate_polarization(&config(0.75, AcceptanceMode::Unbiased(0.0), 40), &SeedStreams::new(5)).unwrap();
        assert_eq!(records.len(), 40);
        assert_eq!(est.sample_count, 0);
        assert_eq!(est.p_red_given_accept, None);
        assert_eq!(est.verdict, Verdict::Inconclusive);
        assert!(est.ci_halfwidth >= 0.0);
    }

    #[test]
    fn rejects_bad_configs() {
        let mut c = config(1.0, AcceptanceMode::Biased, 0);
        c.trials_per_graph = 0;
        match estimate_polarization(&c, &SeedStreams::new(0)) {
            Err(RecsysError::InvalidParams(p)) => assert_eq!(p.len(), 3),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn records_are_deterministic_and_ordered() {
        let c = config(0.75, AcceptanceMode::Biased, 230);
        let (a, ra) = estimate_polarization(&c, &SeedStreams::new(42)).unwrap();
        let (b, rb) = estimate_polarization(&c, &SeedStreams::new(42)).unwrap();
        assert_eq!(a, b);
        assert_eq!(ra, rb);
        assert!(ra.iter().enumerate().all(|(i, r)| r.trial == i as u64 && r.graph == i as u64 / 50));
        let (c2, _) = estimate_polarization(&c, &SeedStreams::new(43)).unwrap();
        assert_ne!(a, c2);
    }

    #[test]
    fn mirror_probes_give_mirror_estimates() {
        let trials = 20_000;
        let (hi, _) =
            estimate_polarization(&config(0.8, AcceptanceMode::Biased, trials), &SeedStreams::new(7)).unwrap();
        let (lo, _) =
            estimate_polarization(&config(0.2, AcceptanceMode::Biased, trials), &SeedStreams::new(8)).unwrap();
        let p_hi = hi.p_red_given_accept.unwrap();
        let p_lo = lo.p_red_given_accept.unwrap();
        let combined = (hi.ci_halfwidth.powi(2) + lo.ci_halfwidth.powi(2)).sqrt();
        assert!((p_hi - (1.0 - p_lo)).abs() <= combined, "{p_hi} vs 1 - {p_lo}");
        assert_eq!(hi.verdict, Verdict::Polarizing);
        assert_eq!(lo.verdict, Verdict::Polarizing);
    }
}
