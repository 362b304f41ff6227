//! Composite Gauss–Legendre rules on `[-1, 1]`.

use gauss_quad::legendre::GaussLegendre;

use crate::error::{invalid, Result};

/// Precomputed composite rule with `panels` equal subintervals of
/// `[-1, 1]` and `nodes_per_panel` Gauss–Legendre nodes in each. Weights
/// are normalised so that they integrate against the uniform probability
/// measure, i.e. they sum to 1.
#[derive(Clone, Debug)]
pub struct CompositeRule {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl CompositeRule {
    pub fn new(panels: usize, nodes_per_panel: usize) -> Result<Self> {
        if panels == 0 {
            return Err(invalid("panels", "must be positive"));
        }
        let rule = GaussLegendre::new(nodes_per_panel)
            .map_err(|_| invalid("nodes_per_panel", "must be at least 2"))?;
        let h = 2.0 / panels as f64;
        let mut nodes = Vec::with_capacity(panels * nodes_per_panel);
        let mut weights = Vec::with_capacity(panels * nodes_per_panel);
        for p in 0..panels {
            let a = -1.0 + h * p as f64;
            for &(x, w) in rule.as_node_weight_pairs() {
                nodes.push(a + 0.5 * h * (x + 1.0));
                // 0.5·h for the affine map, 0.5 for the probability measure.
                weights.push(0.25 * h * w);
            }
        }
        Ok(Self { nodes, weights })
    }

    /// 32 panels of 64 nodes: 2048 nodes in total.
    pub fn standard() -> Self {
        Self::new(32, 64).expect("static rule parameters are valid")
    }

    /// Standard rule refined so that each panel sees at most two periods of
    /// `cos(π·max_freq·x)`, which keeps polynomial exactness far above what
    /// the integrand needs.
    pub fn resolving(max_freq: usize) -> Self {
        let panels = 32.max(max_freq.div_ceil(2).next_power_of_two());
        Self::new(panels, 64).expect("static rule parameters are valid")
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// `∫ f dD` with `D` uniform on `[-1, 1]`.
    pub fn integrate(&self, mut f: impl FnMut(f64) -> f64) -> f64 {
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(&x, &w)| w * f(x))
            .sum()
    }
}
