//! Zero-query reference attacks.

use rand::distributions::{Distribution, Uniform};
use rand::RngCore;

use crate::error::{Error, Result};
use crate::oracle::{Attack, Label, LabelSequence, QueryOracle};

/// Predicts the same label everywhere without querying.
#[derive(Clone, Copy, Debug)]
pub struct ConstantGuess(pub Label);

impl Attack for ConstantGuess {
    fn name(&self) -> String {
        format!("constant-{}", self.0)
    }

    fn run(&self, oracle: &mut dyn QueryOracle, _k: usize, _rng: &mut dyn RngCore) -> Result<LabelSequence> {
        LabelSequence::constant(oracle.len(), oracle.classes(), self.0)
    }
}

/// Predicts an independent uniform label at every position without querying.
#[derive(Clone, Copy, Debug, Default)]
pub struct UniformGuess;

impl Attack for UniformGuess {
    fn name(&self) -> String {
        "random-baseline".into()
    }

    fn run(&self, oracle: &mut dyn QueryOracle, _k: usize, rng: &mut dyn RngCore) -> Result<LabelSequence> {
        let m = oracle.classes();
        if m > Label::MAX as usize {
            return Err(Error::param("too many classes"));
        }
        let dist = Uniform::new_inclusive(1, m as Label);
        let labels = (0..oracle.len()).map(|_| dist.sample(rng)).collect();
        LabelSequence::new(labels, m)
    }
}
