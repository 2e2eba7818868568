//! Two-sample check that a wrapped attack on a fixed labeling performs like
//! the plain attack on uniform labels.

use serde::{Deserialize, Serialize};

use super::sweep::{estimate, Verdict};
use super::trial::{guarded, map_trials, Outcome, TrialSetup, Wrap};
use super::{validate_point, AttackId, GridPoint, Labeling, SCHEMA, Z_TOLERANCE};
use crate::error::{Error, Result};
use crate::rng::derive_seed;

const SIDE_WRAPPED: u64 = 0;
const SIDE_PLAIN: u64 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReductionConfig {
    pub attack: AttackId,
    pub n: usize,
    pub m: usize,
    pub k: usize,
    pub trials: usize,
    pub seed: u64,
    /// The fixed labeling the wrapped side faces; must not be `uniform`.
    pub labeling: Labeling,
    #[serde(default)]
    pub universe_size: Option<u64>,
    #[serde(default)]
    pub force_t: Option<usize>,
    /// Test hook: wrap with identity permutations and run the plain side on
    /// the same labeling with the same seeds. Paired trials must then agree
    /// exactly.
    #[serde(default)]
    pub identity_hook: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SideStats {
    pub labeling: String,
    pub wrapped: bool,
    pub trials: usize,
    #[serde(with = "super::float")]
    pub mean: f64,
    #[serde(with = "super::float")]
    pub se: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReductionReport {
    pub schema: String,
    pub config: ReductionConfig,
    pub wrapped: SideStats,
    pub plain: SideStats,
    #[serde(with = "super::float")]
    pub difference: f64,
    #[serde(with = "super::float")]
    pub combined_se: f64,
    #[serde(with = "super::float")]
    pub tolerance: f64,
    /// Set in identity-hook mode: every paired trial matched exactly.
    pub paired_exact: Option<bool>,
    pub verdict: Verdict,
}

fn run_side(setup: &TrialSetup<'_>, trials: usize, seed_of: impl Fn(usize) -> u64 + Sync) -> Result<Vec<Outcome>> {
    map_trials(trials, |i| {
        let seed = seed_of(i);
        guarded(i, seed, || setup.run(seed))
    })
}

pub fn verify_reduction(cfg: &ReductionConfig) -> Result<ReductionReport> {
    if cfg.trials == 0 {
        return Err(Error::config("trials must be at least 1"));
    }
    if cfg.labeling.is_uniform() {
        return Err(Error::config(
            "verify-reduction needs a fixed labeling (constant:L or file:PATH)",
        ));
    }
    let point = GridPoint {
        n: cfg.n,
        m: cfg.m,
        k: cfg.k,
    };
    validate_point(cfg.attack, point, &cfg.labeling, cfg.universe_size, cfg.force_t)?;

    let uniform = Labeling::Uniform;
    let base = |labeling, wrap| TrialSetup {
        attack: cfg.attack,
        point,
        labeling,
        wrap,
        universe_size: cfg.universe_size,
        force_t: cfg.force_t,
    };
    let (wrapped_setup, plain_setup, plain_seed_side) = if cfg.identity_hook {
        (
            base(&cfg.labeling, Wrap::Identity),
            base(&cfg.labeling, Wrap::None),
            SIDE_WRAPPED,
        )
    } else {
        (
            base(&cfg.labeling, Wrap::Random),
            base(&uniform, Wrap::None),
            SIDE_PLAIN,
        )
    };

    let a = run_side(&wrapped_setup, cfg.trials, |i| {
        derive_seed(cfg.seed, &[SIDE_WRAPPED, i as u64])
    })?;
    let b = run_side(&plain_setup, cfg.trials, |i| {
        derive_seed(cfg.seed, &[plain_seed_side, i as u64])
    })?;

    let ea = estimate(&a.iter().map(|o| o.matches).collect::<Vec<_>>(), cfg.n);
    let eb = estimate(&b.iter().map(|o| o.matches).collect::<Vec<_>>(), cfg.n);
    let difference = ea.mean - eb.mean;
    let combined_se = (ea.se * ea.se + eb.se * eb.se).sqrt();
    let tolerance = Z_TOLERANCE * combined_se;
    let paired_exact = cfg.identity_hook.then(|| a == b);
    let ok = match paired_exact {
        Some(exact) => exact,
        None => difference.abs() <= tolerance,
    };

    Ok(ReductionReport {
        schema: SCHEMA.into(),
        config: cfg.clone(),
        wrapped: SideStats {
            labeling: wrapped_setup.labeling.spec(),
            wrapped: true,
            trials: cfg.trials,
            mean: ea.mean,
            se: ea.se,
        },
        plain: SideStats {
            labeling: plain_setup.labeling.spec(),
            wrapped: false,
            trials: cfg.trials,
            mean: eb.mean,
            se: eb.se,
        },
        difference,
        combined_se,
        tolerance,
        paired_exact,
        verdict: if ok { Verdict::Pass } else { Verdict::Fail },
    })
}
