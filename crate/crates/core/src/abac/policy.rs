use std::collections::BTreeSet;

use super::data::AttributeData;
use super::evaluator::Evaluator;
use super::rule::{rules_wsc, Rule, WscWeights};
use super::universe::TupleSet;
use crate::error::{Error, Result};

/// Attribute data, operations and a rule set.
#[derive(Debug, Clone, PartialEq)]
pub struct AbacPolicy {
    pub data: AttributeData,
    pub operations: BTreeSet<String>,
    pub rules: Vec<Rule>,
}

impl AbacPolicy {
    /// Builds a policy after checking every rule against the schema and
    /// operation set.
    pub fn new(data: AttributeData, operations: BTreeSet<String>, rules: Vec<Rule>) -> Result<Self> {
        let p = AbacPolicy {
            data,
            operations,
            rules,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if self.operations.is_empty() {
            return Err(Error::Schema("policy has no operations".into()));
        }
        for r in &self.rules {
            r.validate(self.data.schema(), &self.operations)?;
        }
        Ok(())
    }

    pub fn evaluator(&self) -> Evaluator {
        Evaluator::new(&self.data, &self.operations)
    }

    pub fn meaning(&self) -> Result<TupleSet> {
        self.evaluator().policy_meaning(&self.rules)
    }

    pub fn wsc(&self, w: &WscWeights) -> f64 {
        rules_wsc(&self.rules, w)
    }

    /// Rules sorted into canonical order with duplicates removed.
    pub fn canonicalize(&mut self) {
        self.rules.sort();
        self.rules.dedup();
    }
}
