//! Brute-force optima over a finite class, computed member by member with
//! the metric functions and sharing no code with the learners.

use crate::distribution::LabeledDistribution;
use crate::error::Result;
use crate::hypothesis::MaterializedClass;
use crate::metrics::{false_rates, FalseRates};

pub fn all_rates(class: &MaterializedClass, d: &LabeledDistribution) -> Result<Vec<FalseRates>> {
    class.members().iter().map(|c| false_rates(d, c)).collect()
}

/// `min false⁻` over members with `false⁺ = 0`.
pub fn opt_plus(class: &MaterializedClass, d: &LabeledDistribution) -> Result<f64> {
    Ok(all_rates(class, d)?
        .iter()
        .filter(|r| r.positive == 0.0)
        .map(|r| r.negative)
        .fold(f64::INFINITY, f64::min))
}

/// `min false⁺` over members with `false⁻ = 0`.
pub fn opt_minus(class: &MaterializedClass, d: &LabeledDistribution) -> Result<f64> {
    Ok(all_rates(class, d)?
        .iter()
        .filter(|r| r.negative == 0.0)
        .map(|r| r.positive)
        .fold(f64::INFINITY, f64::min))
}

/// `min Pr[c₊ ≠ c₋]` over pairs with `false⁺(c₊) = 0` and `false⁻(c₋) = 0`.
pub fn opt_bottom(class: &MaterializedClass, d: &LabeledDistribution) -> Result<f64> {
    let rates = all_rates(class, d)?;
    let u = d.universe();
    let support: Vec<(usize, f64)> = d.marginal().support()?.collect();
    let mut best = f64::INFINITY;
    for (i, ri) in rates.iter().enumerate() {
        if ri.positive != 0.0 {
            continue;
        }
        for (j, rj) in rates.iter().enumerate() {
            if rj.negative != 0.0 {
                continue;
            }
            let (a, b) = (class.member(i), class.member(j));
            let disagree: f64 = support
                .iter()
                .filter(|&&(x, _)| a.eval(u.point(x)) != b.eval(u.point(x)))
                .map(|&(_, w)| w)
                .sum();
            best = best.min(disagree);
        }
    }
    Ok(best)
}
