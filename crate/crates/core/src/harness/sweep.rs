use num_rational::Ratio;
use serde::{Deserialize, Serialize};

use super::trial::{guarded, map_trials, TrialSetup, Wrap};
use super::{AttackId, ExperimentConfig, GridPoint, LARGE_UNKNOWN_DENOM, SCHEMA, SMALL_UNKNOWN_COEF, Z_TOLERANCE};
use crate::bounds::{bound_small, bound_upper_k1, large_applicable, small_applicable, BoundReport};
use crate::error::Result;
use crate::rng::derive_seed;

/// One graded trial.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub attack: AttackId,
    pub grid_index: usize,
    pub n: usize,
    pub m: usize,
    pub k: usize,
    pub trial: usize,
    pub seed: u64,
    /// Positions predicted correctly; the accuracy is `matches / n`.
    pub matches: usize,
    pub queries: usize,
    pub t: Option<usize>,
    pub ms: Option<f64>,
}

impl TrialRecord {
    pub fn accuracy(&self) -> Ratio<u64> {
        Ratio::new_raw(self.matches as u64, self.n as u64)
    }

    pub fn accuracy_f64(&self) -> f64 {
        self.matches as f64 / self.n as f64
    }
}

/// Mean accuracy and its standard error over a set of trials.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MeanEstimate {
    pub mean: f64,
    /// Sample standard deviation over `√trials`; zero for a single trial.
    pub se: f64,
}

/// Sums are kept in integers, so the estimate does not depend on the order
/// of `matches`.
pub fn estimate(matches: &[usize], n: usize) -> MeanEstimate {
    let t = matches.len() as u128;
    if t == 0 {
        return MeanEstimate {
            mean: f64::NAN,
            se: f64::NAN,
        };
    }
    let sum: u128 = matches.iter().map(|&x| x as u128).sum();
    let sum_sq: u128 = matches.iter().map(|&x| (x as u128) * (x as u128)).sum();
    let mean = sum as f64 / (t as f64 * n as f64);
    let se = if t < 2 {
        0.0
    } else {
        // t·Σx² - (Σx)² = t(t-1)·s²
        let spread = t * sum_sq - sum * sum;
        let var = spread as f64 / (t * (t - 1)) as f64 / (n as f64 * n as f64);
        (var / t as f64).sqrt()
    };
    MeanEstimate { mean, se }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Verdict {
    #[serde(rename = "PASS")]
    Pass,
    #[serde(rename = "FAIL")]
    Fail,
    #[serde(rename = "N/A")]
    NotApplicable,
}

impl Verdict {
    pub fn as_str(self) -> &'static str {
        match self {
            Verdict::Pass => "PASS",
            Verdict::Fail => "FAIL",
            Verdict::NotApplicable => "N/A",
        }
    }

    /// `Fail` if any part failed, else `Pass` if any passed, else `N/A`.
    pub fn combine(parts: impl IntoIterator<Item = Verdict>) -> Verdict {
        let mut out = Verdict::NotApplicable;
        for v in parts {
            match v {
                Verdict::Fail => return Verdict::Fail,
                Verdict::Pass => out = Verdict::Pass,
                Verdict::NotApplicable => {}
            }
        }
        out
    }
}

impl std::fmt::Display for Verdict {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CheckKind {
    /// `mean ≥ threshold - tolerance`
    AtLeast,
    /// `mean ≤ threshold + tolerance`
    AtMost,
    /// `|mean - threshold| ≤ tolerance`
    Equal,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub kind: CheckKind,
    #[serde(with = "super::float")]
    pub threshold: f64,
    #[serde(with = "super::float")]
    pub tolerance: f64,
    pub verdict: Verdict,
}

impl Check {
    pub fn evaluate(name: &str, kind: CheckKind, threshold: f64, est: MeanEstimate) -> Check {
        let tolerance = Z_TOLERANCE * est.se;
        let ok = match kind {
            CheckKind::AtLeast => est.mean >= threshold - tolerance,
            CheckKind::AtMost => est.mean <= threshold + tolerance,
            CheckKind::Equal => (est.mean - threshold).abs() <= tolerance,
        };
        Check {
            name: name.into(),
            kind,
            threshold,
            tolerance,
            verdict: if ok { Verdict::Pass } else { Verdict::Fail },
        }
    }
}

/// The guarantees that apply to `attack` at `p`, checked against `est`.
///
/// Guarantees are about uniformly random labels; with any other labeling
/// they are only checked when the permutation wrapper is on. A single
/// trial has no error estimate, so nothing is checked.
pub(crate) fn checks_for(
    attack: AttackId,
    p: GridPoint,
    est: MeanEstimate,
    trials: usize,
    uniform_like: bool,
) -> Vec<Check> {
    if !uniform_like || trials < 2 {
        return Vec::new();
    }
    let GridPoint { n, m, k } = p;
    let base = 1.0 / m as f64;
    let mut out = Vec::new();
    match attack {
        AttackId::Small if small_applicable(n, m, k) => {
            out.push(Check::evaluate(
                "lower-small",
                CheckKind::AtLeast,
                bound_small(n, m, k),
                est,
            ));
        }
        AttackId::Large if large_applicable(m, k) => {
            let bound = base + k as f64 / (36.0 * n as f64 * (m as f64).ln());
            out.push(Check::evaluate("lower-large", CheckKind::AtLeast, bound, est));
        }
        AttackId::SmallUnknown if small_applicable(n, m, k) => {
            let bound = base + SMALL_UNKNOWN_COEF * (k as f64 / (m as f64 * n as f64)).sqrt();
            out.push(Check::evaluate("lower-small-unknown", CheckKind::AtLeast, bound, est));
        }
        AttackId::LargeUnknown if large_applicable(m, k) => {
            let bound = base + k as f64 / (LARGE_UNKNOWN_DENOM * n as f64 * (m as f64).ln());
            out.push(Check::evaluate("lower-large-unknown", CheckKind::AtLeast, bound, est));
        }
        AttackId::RandomBaseline => {
            out.push(Check::evaluate("baseline", CheckKind::Equal, base, est));
        }
        _ => {}
    }
    if k == 1 {
        out.push(Check::evaluate(
            "upper-k1",
            CheckKind::AtMost,
            bound_upper_k1(n, m),
            est,
        ));
    }
    out
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Tolerance {
    pub policy: String,
    #[serde(with = "super::float")]
    pub z: f64,
}

impl Default for Tolerance {
    fn default() -> Self {
        Tolerance {
            policy: "mean within z standard errors of the bound".into(),
            z: Z_TOLERANCE,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridSummary {
    pub index: usize,
    pub n: usize,
    pub m: usize,
    pub k: usize,
    pub trials: usize,
    #[serde(with = "super::float")]
    pub mean: f64,
    #[serde(with = "super::float")]
    pub se: f64,
    pub max_queries: usize,
    /// Prefix length used by the large attacks.
    pub t: Option<usize>,
    /// Whether the bounds describe this labeling (uniform, or wrapped).
    pub bounds_apply: bool,
    pub bounds: BoundReport,
    pub checks: Vec<Check>,
    pub verdict: Verdict,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepSummary {
    pub schema: String,
    pub config: ExperimentConfig,
    pub tolerance: Tolerance,
    pub grid: Vec<GridSummary>,
}

impl SweepSummary {
    pub fn verdict(&self) -> Verdict {
        Verdict::combine(self.grid.iter().map(|g| g.verdict))
    }

    /// No grid point failed.
    pub fn passed(&self) -> bool {
        self.verdict() != Verdict::Fail
    }
}

#[derive(Clone, Debug)]
pub struct SweepResult {
    pub summary: SweepSummary,
    /// Sorted by grid index, then trial.
    pub records: Vec<TrialRecord>,
}

/// Runs every trial of every grid point and attaches bound verdicts.
pub fn run_sweep(cfg: &ExperimentConfig) -> Result<SweepResult> {
    cfg.validate()?;
    let wrap = if cfg.wrap_permutation { Wrap::Random } else { Wrap::None };
    let uniform_like = cfg.labeling.is_uniform() || cfg.wrap_permutation;
    let mut records = Vec::with_capacity(cfg.grid().len() * cfg.trials);
    let mut grid = Vec::new();

    for (index, point) in cfg.grid().into_iter().enumerate() {
        let setup = TrialSetup {
            attack: cfg.attack,
            point,
            labeling: &cfg.labeling,
            wrap,
            universe_size: cfg.universe_size,
            force_t: cfg.force_t,
        };
        let point_records = map_trials(cfg.trials, |trial| {
            let seed = derive_seed(cfg.seed, &[index as u64, trial as u64]);
            guarded(trial, seed, || {
                let clock = cfg.timing.then(std::time::Instant::now);
                let out = setup.run(seed)?;
                Ok(TrialRecord {
                    attack: cfg.attack,
                    grid_index: index,
                    n: point.n,
                    m: point.m,
                    k: point.k,
                    trial,
                    seed,
                    matches: out.matches,
                    queries: out.queries,
                    t: out.t,
                    ms: clock.map(|c| c.elapsed().as_secs_f64() * 1e3),
                })
            })
        })?;

        let matches: Vec<usize> = point_records.iter().map(|r| r.matches).collect();
        let est = estimate(&matches, point.n);
        let checks = checks_for(cfg.attack, point, est, cfg.trials, uniform_like);
        grid.push(GridSummary {
            index,
            n: point.n,
            m: point.m,
            k: point.k,
            trials: cfg.trials,
            mean: est.mean,
            se: est.se,
            max_queries: point_records.iter().map(|r| r.queries).max().unwrap_or(0),
            t: setup.prefix_len()?,
            bounds_apply: uniform_like,
            bounds: BoundReport::new(point.n, point.m, point.k),
            verdict: Verdict::combine(checks.iter().map(|c| c.verdict)),
            checks,
        });
        records.extend(point_records);
    }

    Ok(SweepResult {
        summary: SweepSummary {
            schema: SCHEMA.into(),
            config: cfg.clone(),
            tolerance: Tolerance::default(),
            grid,
        },
        records,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::Labeling;

    #[test]
    fn estimate_matches_textbook_formulas() {
        let xs = [3usize, 5, 4, 8, 0];
        let n = 10;
        let est = estimate(&xs, n);
        let acc: Vec<f64> = xs.iter().map(|&x| x as f64 / n as f64).collect();
        let mean = acc.iter().sum::<f64>() / 5.0;
        let sd = (acc.iter().map(|a| (a - mean).powi(2)).sum::<f64>() / 4.0).sqrt();
        assert!((est.mean - mean).abs() < 1e-15);
        assert!((est.se - sd / 5f64.sqrt()).abs() < 1e-15);
        assert_eq!(estimate(&[7], 10).se, 0.0);
        let mut rev = xs;
        rev.reverse();
        assert_eq!(estimate(&rev, n), est);
    }

    #[test]
    fn verdict_combination() {
        use Verdict::*;
        assert_eq!(Verdict::combine([]), NotApplicable);
        assert_eq!(Verdict::combine([NotApplicable, Pass]), Pass);
        assert_eq!(Verdict::combine([Pass, Fail, Pass]), Fail);
    }

    #[test]
    fn checks_follow_tolerance() {
        let est = MeanEstimate { mean: 0.5, se: 0.01 };
        assert_eq!(
            Check::evaluate("x", CheckKind::AtLeast, 0.54, est).verdict,
            Verdict::Pass
        );
        assert_eq!(
            Check::evaluate("x", CheckKind::AtLeast, 0.5401, est).verdict,
            Verdict::Fail
        );
        assert_eq!(
            Check::evaluate("x", CheckKind::AtMost, 0.46, est).verdict,
            Verdict::Pass
        );
        assert_eq!(Check::evaluate("x", CheckKind::Equal, 0.45, est).verdict, Verdict::Fail);
    }

    #[test]
    fn baseline_sweep_passes() {
        let cfg = ExperimentConfig::new(AttackId::RandomBaseline, 50, 3, 0, 2000, 9);
        let r = run_sweep(&cfg).unwrap();
        assert_eq!(r.records.len(), 2000);
        assert_eq!(r.summary.grid[0].checks.len(), 1);
        assert_eq!(r.summary.verdict(), Verdict::Pass);
        assert!(r.records.iter().all(|x| x.queries == 0 && x.ms.is_none()));
    }

    #[test]
    fn adversarial_labels_without_wrapper_are_not_judged() {
        let mut cfg = ExperimentConfig::new(AttackId::Small, 100, 4, 3, 20, 1);
        cfg.labeling = Labeling::Constant(4);
        let r = run_sweep(&cfg).unwrap();
        assert!(r.summary.grid[0].checks.is_empty());
        assert_eq!(r.summary.verdict(), Verdict::NotApplicable);
        cfg.wrap_permutation = true;
        let r = run_sweep(&cfg).unwrap();
        assert!(!r.summary.grid[0].checks.is_empty());
    }

    #[test]
    fn records_are_sorted_and_conserve_counts() {
        let mut cfg = ExperimentConfig::new(AttackId::Large, 40, 3, 30, 7, 5);
        cfg.k = vec![30, 12];
        let r = run_sweep(&cfg).unwrap();
        let keys: Vec<_> = r.records.iter().map(|x| (x.grid_index, x.trial)).collect();
        let mut sorted = keys.clone();
        sorted.sort_unstable();
        assert_eq!(keys, sorted);
        assert!(r.records.iter().all(|x| x.matches <= x.n && x.queries == x.k));
    }
}
