//! Concrete mixed-integer linear model.

use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};

use crate::error::ModelError;
use crate::superstructure::{Sense, VarKind, VarRole, VarSpec};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Row {
    pub name: String,
    /// Variable indices with coefficients; each index appears once.
    pub terms: Vec<(usize, f64)>,
    pub sense: Sense,
    pub rhs: f64,
}

impl Row {
    pub fn activity(&self, x: &[f64]) -> f64 {
        self.terms.iter().map(|&(i, a)| a * x[i]).sum()
    }

    /// Amount by which `x` violates the row (0 when satisfied).
    pub fn violation(&self, x: &[f64]) -> f64 {
        let lhs = self.activity(x);
        match self.sense {
            Sense::Le => (lhs - self.rhs).max(0.0),
            Sense::Ge => (self.rhs - lhs).max(0.0),
            Sense::Eq => (lhs - self.rhs).abs(),
        }
    }
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct MilpModel {
    pub name: String,
    pub variables: Vec<VarSpec>,
    pub rows: Vec<Row>,
    /// Minimised linear objective.
    pub objective: Vec<(usize, f64)>,
    pub objective_constant: f64,
    /// Free-form annotations (encoding sizes, source case, ...).
    pub metadata: BTreeMap<String, String>,
    #[serde(skip)]
    index: HashMap<String, usize>,
    #[serde(skip)]
    row_index: HashMap<String, usize>,
}

impl PartialEq for MilpModel {
    fn eq(&self, other: &Self) -> bool {
        self.name == other.name
            && self.variables == other.variables
            && self.rows == other.rows
            && self.objective == other.objective
            && self.objective_constant == other.objective_constant
            && self.metadata == other.metadata
    }
}

/// Sums coefficients of repeated names, keeping first-appearance order.
fn merge_terms(terms: impl IntoIterator<Item = (usize, f64)>) -> Vec<(usize, f64)> {
    let mut out: Vec<(usize, f64)> = Vec::new();
    let mut seen: HashMap<usize, usize> = HashMap::new();
    for (i, a) in terms {
        match seen.get(&i) {
            Some(&p) => out[p].1 += a,
            None => {
                seen.insert(i, out.len());
                out.push((i, a));
            }
        }
    }
    out.retain(|&(_, a)| a != 0.0);
    out
}

impl MilpModel {
    pub fn new(name: impl Into<String>) -> Self {
        MilpModel {
            name: name.into(),
            ..Default::default()
        }
    }

    /// Rebuilds the name lookups, e.g. after deserialising.
    pub fn reindex(&mut self) {
        self.index = self
            .variables
            .iter()
            .enumerate()
            .map(|(i, v)| (v.name.clone(), i))
            .collect();
        self.row_index = self
            .rows
            .iter()
            .enumerate()
            .map(|(i, r)| (r.name.clone(), i))
            .collect();
    }

    pub fn add_var(
        &mut self,
        name: impl Into<String>,
        kind: VarKind,
        lb: f64,
        ub: f64,
        role: VarRole,
    ) -> Result<usize, ModelError> {
        let name = name.into();
        if self.index.contains_key(&name) {
            return Err(ModelError::DuplicateVariable(name));
        }
        let (lb, ub) = match kind {
            VarKind::Binary => (lb.max(0.0), ub.min(1.0)),
            VarKind::Continuous => (lb, ub),
        };
        let i = self.variables.len();
        self.index.insert(name.clone(), i);
        self.variables.push(VarSpec {
            name,
            kind,
            lb,
            ub,
            role,
        });
        Ok(i)
    }

    pub fn var(&self, name: &str) -> Option<usize> {
        self.index.get(name).copied()
    }

    pub fn require(&self, name: &str) -> Result<usize, ModelError> {
        self.var(name)
            .ok_or_else(|| ModelError::UnknownVariable(name.to_string()))
    }

    pub fn spec(&self, name: &str) -> Option<&VarSpec> {
        self.var(name).map(|i| &self.variables[i])
    }

    pub fn spec_mut(&mut self, name: &str) -> Option<&mut VarSpec> {
        self.var(name).map(move |i| &mut self.variables[i])
    }

    pub fn add_row(
        &mut self,
        name: impl Into<String>,
        terms: &[(String, f64)],
        sense: Sense,
        rhs: f64,
    ) -> Result<usize, ModelError> {
        let idx = terms
            .iter()
            .map(|(n, a)| self.require(n).map(|i| (i, *a)))
            .collect::<Result<Vec<_>, _>>()?;
        self.add_row_idx(name, idx, sense, rhs)
    }

    pub fn add_row_idx(
        &mut self,
        name: impl Into<String>,
        terms: Vec<(usize, f64)>,
        sense: Sense,
        rhs: f64,
    ) -> Result<usize, ModelError> {
        let name = name.into();
        if self.row_index.contains_key(&name) {
            return Err(ModelError::Unsupported(format!("duplicate row `{name}`")));
        }
        if let Some(&(i, _)) = terms.iter().find(|(i, _)| *i >= self.variables.len()) {
            return Err(ModelError::UnknownVariable(format!("#{i}")));
        }
        let r = self.rows.len();
        self.row_index.insert(name.clone(), r);
        self.rows.push(Row {
            name,
            terms: merge_terms(terms),
            sense,
            rhs,
        });
        Ok(r)
    }

    pub fn row(&self, name: &str) -> Option<&Row> {
        self.row_index.get(name).map(|&i| &self.rows[i])
    }

    pub fn add_objective(&mut self, name: &str, coef: f64) -> Result<(), ModelError> {
        let i = self.require(name)?;
        self.objective.push((i, coef));
        self.objective = merge_terms(std::mem::take(&mut self.objective));
        Ok(())
    }

    pub fn num_vars(&self) -> usize {
        self.variables.len()
    }

    pub fn num_binaries(&self) -> usize {
        self.variables
            .iter()
            .filter(|v| v.kind == VarKind::Binary)
            .count()
    }

    pub fn num_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn objective_value(&self, x: &[f64]) -> f64 {
        self.objective_constant + self.objective.iter().map(|&(i, a)| a * x[i]).sum::<f64>()
    }

    /// Rows and bounds violated by more than `tol`, with the violation.
    pub fn violations(&self, x: &[f64], tol: f64) -> Vec<(String, f64)> {
        let mut out = Vec::new();
        for (v, &xi) in self.variables.iter().zip(x) {
            let viol = (v.lb - xi).max(xi - v.ub).max(0.0);
            if viol > tol {
                out.push((format!("bound:{}", v.name), viol));
            }
            if v.kind == VarKind::Binary && (xi - xi.round()).abs() > tol {
                out.push((format!("integrality:{}", v.name), (xi - xi.round()).abs()));
            }
        }
        for r in &self.rows {
            let viol = r.violation(x);
            if viol > tol {
                out.push((r.name.clone(), viol));
            }
        }
        out
    }

    /// Value vector from a name map; missing names default to zero.
    pub fn point(&self, values: &BTreeMap<String, f64>) -> Vec<f64> {
        self.variables
            .iter()
            .map(|v| values.get(&v.name).copied().unwrap_or(0.0))
            .collect()
    }
}
