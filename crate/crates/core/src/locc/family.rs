//! λ-indexed circuit families and their gate budgets.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::circuit::LoccCircuit;
use crate::error::Result;
use crate::poly::Polynomial;
use crate::states::Key;

const BUDGET_TOL: f64 = 1e-9;

/// Polynomial bound `c(λ)` on total gate count.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GateBudget(pub Polynomial);

impl GateBudget {
    pub fn new(poly: Polynomial) -> Self {
        Self(poly)
    }

    pub fn eval(&self, lambda: u32) -> f64 {
        self.0.eval(f64::from(lambda))
    }

    pub fn allows(&self, lambda: u32, count: usize) -> bool {
        count as f64 <= self.eval(lambda) + BUDGET_TOL
    }
}

pub type CircuitGenerator = Arc<dyn Fn(u32) -> Result<LoccCircuit> + Send + Sync>;
pub type KeyedCircuitGenerator = Arc<dyn Fn(u32, &Key) -> Result<LoccCircuit> + Send + Sync>;

#[derive(Clone)]
pub struct ChannelFamily {
    pub name: String,
    pub budget: GateBudget,
    generator: CircuitGenerator,
}

impl ChannelFamily {
    pub fn new(
        name: impl Into<String>,
        budget: GateBudget,
        generator: impl Fn(u32) -> Result<LoccCircuit> + Send + Sync + 'static,
    ) -> Self {
        Self {
            name: name.into(),
            budget,
            generator: Arc::new(generator),
        }
    }

    pub fn generate(&self, lambda: u32) -> Result<LoccCircuit> {
        (self.generator)(lambda)
    }
}

/// Family whose circuits also read a key from `A'` and `B'`.
#[derive(Clone)]
pub struct KeyedChannelFamily {
    pub name: String,
    pub key_len: Polynomial,
    pub budget: GateBudget,
    generator: KeyedCircuitGenerator,
}

impl KeyedChannelFamily {
    pub fn new(
        name: impl Into<String>,
        key_len: Polynomial,
        budget: GateBudget,
        generator: impl Fn(u32, &Key) -> Result<LoccCircuit> + Send + Sync + 'static,
    ) -> Self {
        Self {
            name: name.into(),
            key_len,
            budget,
            generator: Arc::new(generator),
        }
    }

    pub fn keys(&self, lambda: u32) -> Vec<Key> {
        Key::all(self.key_len.count(lambda))
    }

    pub fn generate(&self, lambda: u32, key: &Key) -> Result<LoccCircuit> {
        (self.generator)(lambda, key)
    }
}

impl From<ChannelFamily> for KeyedChannelFamily {
    fn from(f: ChannelFamily) -> Self {
        let generator = f.generator;
        Self {
            name: f.name,
            key_len: Polynomial::constant(0.0),
            budget: f.budget,
            generator: Arc::new(move |lambda, _key| generator(lambda)),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub lambda: u32,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub key: Option<String>,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EfficiencyReport {
    pub pass: bool,
    pub violations: Vec<Violation>,
}

impl EfficiencyReport {
    fn from_violations(violations: Vec<Violation>) -> Self {
        Self {
            pass: violations.is_empty(),
            violations,
        }
    }
}

/// Checks `gate_count(generator(λ)) ≤ budget(λ)` at every listed λ.
pub fn is_efficient(family: &ChannelFamily, lambdas: &[u32]) -> EfficiencyReport {
    is_efficient_keyed(&family.clone().into(), lambdas)
}

/// Keyed version: every key must fit the budget and all keys at one λ must
/// share the same gate count.
pub fn is_efficient_keyed(family: &KeyedChannelFamily, lambdas: &[u32]) -> EfficiencyReport {
    let mut violations = Vec::new();
    for &lambda in lambdas {
        let keys = family.keys(lambda);
        let keyed = !keys.iter().all(Key::is_empty);
        let key_label = |k: &Key| keyed.then(|| k.to_string());
        let mut first_count: Option<usize> = None;
        for key in &keys {
            let count = match family.generate(lambda, key) {
                Ok(c) => c.gate_count(),
                Err(e) => {
                    violations.push(Violation {
                        lambda,
                        key: key_label(key),
                        message: format!("generator failed: {e}"),
                    });
                    continue;
                }
            };
            if !family.budget.allows(lambda, count) {
                violations.push(Violation {
                    lambda,
                    key: key_label(key),
                    message: format!("gate count {count} exceeds budget {}", family.budget.eval(lambda)),
                });
            }
            match first_count {
                None => first_count = Some(count),
                Some(c) if c != count => violations.push(Violation {
                    lambda,
                    key: key_label(key),
                    message: format!("gate count {count} differs from {c} at another key"),
                }),
                _ => {}
            }
        }
    }
    EfficiencyReport::from_violations(violations)
}
