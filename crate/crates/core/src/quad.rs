//! Gauss-Legendre rules mapped to `[0, 1]`.

use gauss_quad::GaussLegendre;
use std::num::NonZeroUsize;

/// Nodes and weights of the `order`-point Gauss-Legendre rule on `[0, 1]`.
pub fn gl01(order: usize) -> Vec<(f64, f64)> {
    let rule = GaussLegendre::new(NonZeroUsize::new(order.max(1)).unwrap());
    let mut out: Vec<(f64, f64)> = rule
        .as_node_weight_pairs()
        .iter()
        .map(|&(x, w)| (0.5 * (x + 1.0), 0.5 * w))
        .collect();
    out.sort_by(|a, b| a.0.total_cmp(&b.0));
    out
}

/// A fixed ladder of rules, picked by the smallest order covering a request.
#[derive(Debug, Clone)]
pub struct RuleLadder {
    orders: Vec<usize>,
    rules: Vec<Vec<(f64, f64)>>,
}

impl RuleLadder {
    pub fn new(orders: &[usize]) -> Self {
        RuleLadder { orders: orders.to_vec(), rules: orders.iter().map(|&o| gl01(o)).collect() }
    }

    /// Smallest rule with at least `order` points (the largest if none).
    pub fn at_least(&self, order: usize) -> &[(f64, f64)] {
        let i = self.orders.iter().position(|&o| o >= order).unwrap_or(self.orders.len() - 1);
        &self.rules[i]
    }

    pub fn largest(&self) -> usize {
        *self.orders.last().unwrap()
    }
}
