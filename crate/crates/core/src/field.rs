//! Scalar fields sampled on a domain's quadrature nodes.

use std::sync::Arc;

use crate::domain::GaussianDomain;
use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub struct GridField {
    domain: Arc<GaussianDomain>,
    values: Vec<f64>,
    label: String,
}

impl GridField {
    pub fn from_values(
        domain: Arc<GaussianDomain>,
        label: impl Into<String>,
        values: Vec<f64>,
    ) -> Result<Self> {
        if values.len() != domain.quadrature().len() {
            return Err(Error::config(format!(
                "field has {} values for {} quadrature nodes",
                values.len(),
                domain.quadrature().len()
            )));
        }
        Ok(GridField { domain, values, label: label.into() })
    }

    pub fn from_fn(
        domain: &Arc<GaussianDomain>,
        label: impl Into<String>,
        mut f: impl FnMut(&[f64]) -> f64,
    ) -> Self {
        let rule = domain.quadrature();
        let values = (0..rule.len()).map(|i| f(&rule.node(i)[..domain.dim() as usize])).collect();
        GridField {
            domain: Arc::clone(domain),
            values,
            label: label.into(),
        }
    }

    pub fn constant(domain: &Arc<GaussianDomain>, c: f64, label: impl Into<String>) -> Self {
        GridField {
            domain: Arc::clone(domain),
            values: vec![c; domain.quadrature().len()],
            label: label.into(),
        }
    }

    pub fn domain(&self) -> &Arc<GaussianDomain> {
        &self.domain
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn weights(&self) -> &[f64] {
        self.domain.quadrature().weights()
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Both fields must live on the same node set.
    pub fn same_grid(&self, other: &GridField) -> bool {
        if Arc::ptr_eq(&self.domain, &other.domain) {
            return true;
        }
        let (a, b) = (self.domain.quadrature(), other.domain.quadrature());
        a.len() == b.len()
            && a.xs()
                .iter()
                .zip(b.xs())
                .all(|(x, y)| (x - y).abs() <= 1e-12 * (1.0 + x.abs()))
    }

    /// L²(γ) inner product by the domain rule.
    pub fn inner(&self, other: &GridField) -> Result<f64> {
        if !self.same_grid(other) {
            return Err(Error::config("inner product of fields on different grids"));
        }
        Ok(self
            .values
            .iter()
            .zip(&other.values)
            .zip(self.weights())
            .map(|((u, v), w)| w * u * v)
            .sum())
    }

    pub fn l2_norm(&self) -> f64 {
        self.values
            .iter()
            .zip(self.weights())
            .map(|(u, w)| w * u * u)
            .sum::<f64>()
            .sqrt()
    }

    pub fn lp_norm(&self, p: f64) -> f64 {
        assert!(p >= 1.0, "lp_norm requires p >= 1");
        self.values
            .iter()
            .zip(self.weights())
            .map(|(u, w)| w * u.abs().powf(p))
            .sum::<f64>()
            .powf(1.0 / p)
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }

    /// self + c · other, node-wise.
    pub fn add_scaled(&self, c: f64, other: &GridField) -> Result<GridField> {
        if !self.same_grid(other) {
            return Err(Error::config("adding fields on different grids"));
        }
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| a + c * b)
            .collect();
        Ok(GridField {
            domain: Arc::clone(&self.domain),
            values,
            label: self.label.clone(),
        })
    }

    pub fn scaled(&self, c: f64) -> GridField {
        GridField {
            domain: Arc::clone(&self.domain),
            values: self.values.iter().map(|v| c * v).collect(),
            label: self.label.clone(),
        }
    }

    pub fn sup_distance(&self, other: &GridField) -> Result<f64> {
        if !self.same_grid(other) {
            return Err(Error::config("comparing fields on different grids"));
        }
        Ok(self
            .values
            .iter()
            .zip(&other.values)
            .fold(0.0f64, |m, (a, b)| m.max((a - b).abs())))
    }

    pub fn l2_distance(&self, other: &GridField) -> Result<f64> {
        if !self.same_grid(other) {
            return Err(Error::config("comparing fields on different grids"));
        }
        Ok(self
            .values
            .iter()
            .zip(&other.values)
            .zip(self.weights())
            .map(|((a, b), w)| w * (a - b) * (a - b))
            .sum::<f64>()
            .sqrt())
    }
}
