//! Overrelaxation sequences `r_k`, relaxation `alpha_k`, weights `lambda_{i,k}`
//! and control sequences `I_k`.
//!
//! Everything here is index-based: values at step `k` are computed directly
//! from `k` without an internal cursor.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// The overrelaxation sequence `r_k`.
///
/// `Power` is shifted by one so that it is defined at `k = 0`:
/// `r_k = r0 / (k + 1)^alpha_exp`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum OverrelaxSchedule {
    Zero,
    Constant { r0: f64 },
    Geometric { r0: f64, q: f64 },
    Power { r0: f64, alpha_exp: f64 },
    Explicit { values: Vec<f64> },
}

/// Asymptotic regime of a schedule.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Regime {
    Zero,
    /// Decays at least geometrically; fails the "slower than any geometric
    /// sequence" condition.
    GeometricOrFaster,
    /// Slower than any geometric sequence with a divergent series.
    StagDivergent,
    /// Slower than any geometric sequence with a summable series.
    StagSummable,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Classification {
    pub regime: Regime,
    /// `r_k -> 0` monotonically.
    pub vanishing: bool,
    pub summable: bool,
    /// Set when the classification needs a caveat (constant schedules).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub warning: Option<String>,
}

impl OverrelaxSchedule {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidParameter(m));
        match *self {
            OverrelaxSchedule::Zero => Ok(()),
            OverrelaxSchedule::Constant { r0 } if !(r0 > 0.0 && r0.is_finite()) => {
                bad(format!("constant schedule needs r0 > 0, got {r0}"))
            }
            OverrelaxSchedule::Geometric { r0, q }
                if !(r0 > 0.0 && r0.is_finite() && q > 0.0 && q < 1.0) =>
            {
                bad(format!("geometric schedule needs r0 > 0 and q in (0, 1), got {r0}, {q}"))
            }
            OverrelaxSchedule::Power { r0, alpha_exp }
                if !(r0 > 0.0 && r0.is_finite() && alpha_exp > 0.0 && alpha_exp.is_finite()) =>
            {
                bad(format!("power schedule needs r0 > 0 and alpha_exp > 0, got {r0}, {alpha_exp}"))
            }
            OverrelaxSchedule::Explicit { ref values } => {
                if values.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
                    bad("explicit schedule values must be finite and >= 0".into())
                } else {
                    Ok(())
                }
            }
            _ => Ok(()),
        }
    }

    pub fn at(&self, k: usize) -> Result<f64> {
        Ok(match self {
            OverrelaxSchedule::Zero => 0.0,
            OverrelaxSchedule::Constant { r0 } => *r0,
            OverrelaxSchedule::Geometric { r0, q } => r0 * q.powf(k as f64),
            OverrelaxSchedule::Power { r0, alpha_exp } => r0 / ((k + 1) as f64).powf(*alpha_exp),
            OverrelaxSchedule::Explicit { values } => *values
                .get(k)
                .ok_or(Error::ExplicitExhausted { k, len: values.len() })?,
        })
    }

    pub fn classify(&self) -> Result<Classification> {
        let c = |regime, vanishing, summable| Classification {
            regime,
            vanishing,
            summable,
            warning: None,
        };
        Ok(match *self {
            OverrelaxSchedule::Zero => c(Regime::Zero, true, true),
            OverrelaxSchedule::Geometric { .. } => c(Regime::GeometricOrFaster, true, true),
            OverrelaxSchedule::Power { alpha_exp, .. } if alpha_exp > 1.0 => {
                c(Regime::StagSummable, true, true)
            }
            OverrelaxSchedule::Power { .. } => c(Regime::StagDivergent, true, false),
            OverrelaxSchedule::Constant { .. } => Classification {
                warning: Some("constant schedule does not converge to zero".into()),
                ..c(Regime::StagDivergent, false, false)
            },
            OverrelaxSchedule::Explicit { .. } => return Err(Error::UnclassifiableExplicit),
        })
    }

    /// Whether the emitted values never increase (over the whole list for
    /// explicit schedules).
    pub fn is_monotone(&self) -> bool {
        match self {
            OverrelaxSchedule::Explicit { values } => values.windows(2).all(|w| w[1] <= w[0]),
            _ => true,
        }
    }

    /// For power schedules, an index `K(q)` past which `r_{k+1}/r_k > q`.
    ///
    /// From Bernoulli's inequality, `((k+1)/(k+2))^a >= 1 - max(a, 1)/(k+2)`,
    /// which exceeds `q` once `k + 2 > max(a, 1)/(1 - q)`.
    pub fn ratio_threshold(&self, q: f64) -> Option<usize> {
        match *self {
            OverrelaxSchedule::Power { alpha_exp, .. } if q > 0.0 && q < 1.0 => {
                let k = (alpha_exp.max(1.0) / (1.0 - q)).ceil() - 1.0;
                Some(k.max(0.0) as usize)
            }
            _ => None,
        }
    }
}

/// A finite index set `I_k`, stored sorted and zero-based.
pub type IndexSet = Vec<usize>;

/// The control sequence `{I_k}`.
///
/// In configuration files indices are one-based; they are converted to
/// zero-based on construction.
#[derive(Clone, Debug, PartialEq)]
pub enum ControlSequence {
    Full { m: usize },
    CyclicSingleton { m: usize },
    CyclicBlocks { m: usize, blocks: Vec<IndexSet> },
}

impl ControlSequence {
    /// Builds `CyclicBlocks` from one-based index lists.
    pub fn cyclic_blocks(m: usize, blocks: &[Vec<usize>]) -> Result<Self> {
        if blocks.is_empty() {
            return Err(Error::InvalidParameter("cyclic blocks need at least one block".into()));
        }
        let mut out = Vec::with_capacity(blocks.len());
        for b in blocks {
            if b.is_empty() {
                return Err(Error::EmptyControlSet);
            }
            let mut set = Vec::with_capacity(b.len());
            for &i in b {
                if i == 0 || i > m {
                    return Err(Error::IndexOutOfRange { index: i, m });
                }
                set.push(i - 1);
            }
            set.sort_unstable();
            set.dedup();
            out.push(set);
        }
        Ok(ControlSequence::CyclicBlocks { m, blocks: out })
    }

    pub fn m(&self) -> usize {
        match self {
            ControlSequence::Full { m }
            | ControlSequence::CyclicSingleton { m }
            | ControlSequence::CyclicBlocks { m, .. } => *m,
        }
    }

    pub fn period(&self) -> usize {
        match self {
            ControlSequence::Full { .. } => 1,
            ControlSequence::CyclicSingleton { m } => *m,
            ControlSequence::CyclicBlocks { blocks, .. } => blocks.len(),
        }
    }

    /// `I_k`, zero-based.
    pub fn at(&self, k: usize) -> IndexSet {
        match self {
            ControlSequence::Full { m } => (0..*m).collect(),
            ControlSequence::CyclicSingleton { m } => vec![k % m],
            ControlSequence::CyclicBlocks { blocks, .. } => blocks[k % blocks.len()].clone(),
        }
    }

    /// Smallest `s >= 1` with `I_k ∪ ... ∪ I_{k+s} = {1..m}` for every `k`, or
    /// `None` if no `s <= horizon` works.
    ///
    /// All variants are periodic, so checking the windows that start in one
    /// period certifies every `k`.
    pub fn minimal_intermittency(&self, horizon: usize) -> Option<usize> {
        let m = self.m();
        let period = self.period();
        if m == 0 {
            return None;
        }
        let covers = |start: usize, s: usize| {
            let mut seen = vec![false; m];
            let mut count = 0;
            for k in start..=start + s {
                for i in self.at(k) {
                    if !seen[i] {
                        seen[i] = true;
                        count += 1;
                    }
                }
            }
            count == m
        };
        // a window longer than one period adds nothing new
        let max_s = horizon.min(period.max(1));
        (1..=max_s).find(|&s| (0..period).all(|k| covers(k, s)))
    }
}

/// Serialised form of a control sequence; `m` comes from the problem.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ControlSpec {
    Full,
    CyclicSingleton,
    CyclicBlocks { blocks: Vec<Vec<usize>> },
}

impl ControlSpec {
    pub fn build(&self, m: usize) -> Result<ControlSequence> {
        if m == 0 {
            return Err(Error::InvalidParameter("control needs m >= 1".into()));
        }
        match self {
            ControlSpec::Full => Ok(ControlSequence::Full { m }),
            ControlSpec::CyclicSingleton => Ok(ControlSequence::CyclicSingleton { m }),
            ControlSpec::CyclicBlocks { blocks } => ControlSequence::cyclic_blocks(m, blocks),
        }
    }
}

/// How the weights `lambda_{i,k}` are chosen over `I_k`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum WeightRule {
    Uniform,
    /// Positive weights for indices 1..=m, renormalised over each `I_k`.
    Fixed { values: Vec<f64> },
}

/// Constant relaxation `alpha` and a weight rule, both kept inside the margin
/// `[eps, 2 - eps]` and `[eps, 1]`.
#[derive(Clone, Debug, PartialEq)]
pub struct RelaxationPlan {
    alpha: f64,
    weights: WeightRule,
    epsilon_margin: f64,
}

impl RelaxationPlan {
    pub fn new(alpha: f64, weights: WeightRule, epsilon_margin: f64) -> Result<Self> {
        if !(epsilon_margin > 0.0 && epsilon_margin < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "epsilon_margin = {epsilon_margin} must lie in (0, 1)"
            )));
        }
        if !(alpha >= epsilon_margin && alpha <= 2.0 - epsilon_margin) {
            return Err(Error::MarginViolation(format!(
                "alpha = {alpha} outside [{epsilon_margin}, {}]",
                2.0 - epsilon_margin
            )));
        }
        if let WeightRule::Fixed { values } = &weights {
            if values.iter().any(|v| !(v.is_finite() && *v > 0.0)) {
                return Err(Error::InvalidParameter("fixed weights must be positive".into()));
            }
        }
        Ok(RelaxationPlan { alpha, weights, epsilon_margin })
    }

    pub fn epsilon_margin(&self) -> f64 {
        self.epsilon_margin
    }

    pub fn weight_rule(&self) -> &WeightRule {
        &self.weights
    }

    pub fn relaxation_at(&self, _k: usize) -> f64 {
        self.alpha
    }

    /// Weights over the zero-based index set `active`.
    pub fn weights_at(&self, _k: usize, active: &[usize]) -> Result<Vec<f64>> {
        if active.is_empty() {
            return Err(Error::EmptyControlSet);
        }
        let w = match &self.weights {
            WeightRule::Uniform => vec![1.0 / active.len() as f64; active.len()],
            WeightRule::Fixed { values } => {
                let mut raw = Vec::with_capacity(active.len());
                for &i in active {
                    raw.push(*values.get(i).ok_or(Error::IndexOutOfRange {
                        index: i + 1,
                        m: values.len(),
                    })?);
                }
                let total: f64 = raw.iter().sum();
                raw.into_iter().map(|v| v / total).collect()
            }
        };
        if let Some(v) = w.iter().find(|v| **v < self.epsilon_margin) {
            return Err(Error::MarginViolation(format!(
                "weight {v} below epsilon_margin {}",
                self.epsilon_margin
            )));
        }
        Ok(w)
    }
}
