//! Seeded Monte Carlo sweeps, bound verdicts and CSV/JSON output.
//!
//! Every trial draws from streams derived from `(master seed, grid index,
//! trial index)`, so a sweep's output depends only on its config: the same
//! config gives byte-identical files under any thread schedule.

mod emit;
pub mod float;
mod sweep;
mod trial;
mod verify;

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

pub use emit::{write_csv, write_csv_file, write_json, write_json_file, CSV_HEADER};
pub use sweep::{
    estimate, run_sweep, Check, CheckKind, GridSummary, MeanEstimate, SweepResult, SweepSummary, Tolerance,
    TrialRecord, Verdict,
};
pub use verify::{verify_reduction, ReductionConfig, ReductionReport, SideStats};

use crate::attack_large::LargeAttack;
use crate::error::{Error, Result};
use crate::oracle::{check_params, Label};

pub const SCHEMA: &str = "hamming-overfit/1";

/// Standard errors of slack allowed by every statistical verdict.
pub const Z_TOLERANCE: f64 = 4.0;

/// Coefficient of `√(k/(mn))` in the small-unknown acceptance threshold.
pub const SMALL_UNKNOWN_COEF: f64 = 1.0 / 16.0;

/// Denominator constant `c` in the large-unknown threshold `1/m + k/(c·n·ln m)`.
pub const LARGE_UNKNOWN_DENOM: f64 = 72.0;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AttackId {
    Small,
    Large,
    SmallUnknown,
    LargeUnknown,
    RandomBaseline,
}

impl AttackId {
    pub const ALL: [AttackId; 5] = [
        AttackId::Small,
        AttackId::Large,
        AttackId::SmallUnknown,
        AttackId::LargeUnknown,
        AttackId::RandomBaseline,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            AttackId::Small => "small",
            AttackId::Large => "large",
            AttackId::SmallUnknown => "small-unknown",
            AttackId::LargeUnknown => "large-unknown",
            AttackId::RandomBaseline => "random-baseline",
        }
    }

    /// Whether the attack works on classifiers over a feature universe.
    pub fn uses_features(self) -> bool {
        matches!(self, AttackId::SmallUnknown | AttackId::LargeUnknown)
    }
}

impl fmt::Display for AttackId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for AttackId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        AttackId::ALL.into_iter().find(|a| a.as_str() == s).ok_or_else(|| {
            let known: Vec<_> = AttackId::ALL.iter().map(|a| a.as_str()).collect();
            Error::config(format!("unknown attack `{s}` (expected one of {})", known.join(", ")))
        })
    }
}

/// How hidden labels are produced.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Labeling {
    /// Independent uniform labels, fresh per trial.
    Uniform,
    /// Every position carries this label.
    Constant(Label),
    /// A fixed sequence read from `source`.
    Sequence { source: String, labels: Vec<Label> },
}

impl Labeling {
    /// Parses `uniform`, `constant:ℓ` or `file:path`. Files hold labels
    /// separated by whitespace or commas.
    pub fn parse(spec: &str) -> Result<Self> {
        if spec == "uniform" {
            return Ok(Labeling::Uniform);
        }
        if let Some(l) = spec.strip_prefix("constant:") {
            let label = l
                .trim()
                .parse::<Label>()
                .map_err(|_| Error::config(format!("bad constant label `{l}`")))?;
            return Ok(Labeling::Constant(label));
        }
        if let Some(path) = spec.strip_prefix("file:") {
            let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
                path: Path::new(path).to_path_buf(),
                source,
            })?;
            let labels = text
                .split(|c: char| c.is_whitespace() || c == ',')
                .filter(|t| !t.is_empty())
                .map(|t| {
                    t.parse::<Label>()
                        .map_err(|_| Error::config(format!("{path}: bad label `{t}`")))
                })
                .collect::<Result<Vec<_>>>()?;
            return Ok(Labeling::Sequence {
                source: path.to_string(),
                labels,
            });
        }
        Err(Error::config(format!(
            "bad labeling `{spec}` (expected uniform, constant:L or file:PATH)"
        )))
    }

    pub fn spec(&self) -> String {
        match self {
            Labeling::Uniform => "uniform".into(),
            Labeling::Constant(l) => format!("constant:{l}"),
            Labeling::Sequence { source, .. } => format!("file:{source}"),
        }
    }

    pub fn is_uniform(&self) -> bool {
        matches!(self, Labeling::Uniform)
    }

    fn validate(&self, n: usize, m: usize) -> Result<()> {
        match self {
            Labeling::Uniform => Ok(()),
            Labeling::Constant(l) if *l >= 1 && usize::from(*l) <= m => Ok(()),
            Labeling::Constant(l) => Err(Error::config(format!("constant label {l} outside 1..={m}"))),
            Labeling::Sequence { source, labels } => {
                if labels.len() != n {
                    return Err(Error::config(format!(
                        "{source} holds {} labels but n = {n}",
                        labels.len()
                    )));
                }
                match labels.iter().find(|&&l| l == 0 || usize::from(l) > m) {
                    Some(l) => Err(Error::config(format!("{source}: label {l} outside 1..={m}"))),
                    None => Ok(()),
                }
            }
        }
    }
}

impl Serialize for Labeling {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.spec())
    }
}

impl<'de> Deserialize<'de> for Labeling {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let spec = String::deserialize(d)?;
        Labeling::parse(&spec).map_err(serde::de::Error::custom)
    }
}

/// One `(n, m, k)` point of a sweep.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GridPoint {
    pub n: usize,
    pub m: usize,
    pub k: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub attack: AttackId,
    pub n: Vec<usize>,
    pub m: Vec<usize>,
    pub k: Vec<usize>,
    pub trials: usize,
    pub seed: u64,
    #[serde(default)]
    pub wrap_permutation: bool,
    pub labeling: Labeling,
    /// Feature universe size for the unknown-features attacks; `4n` if unset.
    #[serde(default)]
    pub universe_size: Option<u64>,
    #[serde(default)]
    pub force_t: Option<usize>,
    /// Record per-trial wall time. Off by default so that outputs replay
    /// byte for byte.
    #[serde(default)]
    pub timing: bool,
}

impl ExperimentConfig {
    /// A single grid point with uniform labels.
    pub fn new(attack: AttackId, n: usize, m: usize, k: usize, trials: usize, seed: u64) -> Self {
        ExperimentConfig {
            attack,
            n: vec![n],
            m: vec![m],
            k: vec![k],
            trials,
            seed,
            wrap_permutation: false,
            labeling: Labeling::Uniform,
            universe_size: None,
            force_t: None,
            timing: false,
        }
    }

    /// The cartesian product `n × m × k`, in that nesting order.
    pub fn grid(&self) -> Vec<GridPoint> {
        let mut out = Vec::with_capacity(self.n.len() * self.m.len() * self.k.len());
        for &n in &self.n {
            for &m in &self.m {
                for &k in &self.k {
                    out.push(GridPoint { n, m, k });
                }
            }
        }
        out
    }

    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(Error::config("trials must be at least 1"));
        }
        for (name, list) in [("n", &self.n), ("m", &self.m), ("k", &self.k)] {
            if list.is_empty() {
                return Err(Error::config(format!("--{name} needs at least one value")));
            }
        }
        for p in self.grid() {
            validate_point(self.attack, p, &self.labeling, self.universe_size, self.force_t)?;
        }
        Ok(())
    }
}

/// Rejects parameter combinations no trial could run with.
pub(crate) fn validate_point(
    attack: AttackId,
    p: GridPoint,
    labeling: &Labeling,
    universe_size: Option<u64>,
    force_t: Option<usize>,
) -> Result<()> {
    let GridPoint { n, m, k } = p;
    check_params(n, m).map_err(|e| Error::config(format!("{e} at n={n}, m={m}")))?;
    labeling.validate(n, m)?;
    match attack {
        AttackId::Small | AttackId::SmallUnknown if k == 0 => {
            return Err(Error::config(format!("{attack} needs k ≥ 1")));
        }
        AttackId::Small if k >= 2 && k - 1 > n => {
            return Err(Error::config(format!("small needs k - 1 ≤ n blocks, got k={k}, n={n}")));
        }
        _ => {}
    }
    if let Some(t) = force_t {
        if !matches!(attack, AttackId::Large | AttackId::LargeUnknown) {
            return Err(Error::config("--force-t only applies to the large attacks"));
        }
        LargeAttack { force_t: Some(t) }
            .prefix_len(n, m, k)
            .map_err(|e| Error::config(e.to_string()))?;
    }
    if let Some(u) = universe_size {
        if !attack.uses_features() {
            return Err(Error::config(
                "--universe-size only applies to the unknown-features attacks",
            ));
        }
        if u < n as u64 {
            return Err(Error::config(format!("universe size {u} is smaller than n = {n}")));
        }
        if usize::try_from(u).is_err() {
            return Err(Error::config(format!("universe size {u} exceeds the address space")));
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn attack_ids_round_trip() {
        for a in AttackId::ALL {
            assert_eq!(a.as_str().parse::<AttackId>().unwrap(), a);
            assert_eq!(serde_json::to_string(&a).unwrap(), format!("\"{a}\""));
        }
        assert!(matches!("medium".parse::<AttackId>(), Err(Error::Config(_))));
    }

    #[test]
    fn labeling_specs() {
        assert_eq!(Labeling::parse("uniform").unwrap(), Labeling::Uniform);
        assert_eq!(Labeling::parse("constant:3").unwrap(), Labeling::Constant(3));
        assert!(Labeling::parse("constant:x").is_err());
        assert!(Labeling::parse("gaussian").is_err());
        assert!(matches!(
            Labeling::parse("file:/nonexistent/labels"),
            Err(Error::Io { .. })
        ));

        let dir = std::env::temp_dir().join(format!("hamming-overfit-labels-{}", std::process::id()));
        std::fs::write(&dir, "1, 2 3\n2\n").unwrap();
        let l = Labeling::parse(&format!("file:{}", dir.display())).unwrap();
        assert!(matches!(&l, Labeling::Sequence { labels, .. } if labels == &[1, 2, 3, 2]));
        assert!(l.validate(4, 3).is_ok());
        assert!(l.validate(5, 3).is_err());
        assert!(l.validate(4, 2).is_err());
        std::fs::remove_file(dir).ok();
    }

    #[test]
    fn validation_rejects_infeasible_points() {
        let ok = ExperimentConfig::new(AttackId::Small, 100, 10, 5, 3, 1);
        assert!(ok.validate().is_ok());
        let bad = |f: &dyn Fn(&mut ExperimentConfig)| {
            let mut c = ok.clone();
            f(&mut c);
            matches!(c.validate(), Err(Error::Config(_)))
        };
        assert!(bad(&|c| c.trials = 0));
        assert!(bad(&|c| c.m = vec![1]));
        assert!(bad(&|c| c.k = vec![]));
        assert!(bad(&|c| c.k = vec![0]));
        assert!(bad(&|c| c.k = vec![200]));
        assert!(bad(&|c| c.labeling = Labeling::Constant(11)));
        assert!(bad(&|c| c.force_t = Some(3)));
        assert!(bad(&|c| c.universe_size = Some(500)));
        assert!(bad(&|c| {
            c.attack = AttackId::Large;
            c.force_t = Some(101);
        }));
        assert!(bad(&|c| {
            c.attack = AttackId::SmallUnknown;
            c.universe_size = Some(99);
        }));
    }

    #[test]
    fn grid_order() {
        let mut c = ExperimentConfig::new(AttackId::Small, 10, 2, 1, 1, 0);
        c.n = vec![10, 20];
        c.k = vec![1, 2, 3];
        let g = c.grid();
        assert_eq!(g.len(), 6);
        assert_eq!(g[1], GridPoint { n: 10, m: 2, k: 2 });
        assert_eq!(g[3], GridPoint { n: 20, m: 2, k: 1 });
    }
}
