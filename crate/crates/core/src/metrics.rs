//! Exact evaluation of error, rejection and one-sided error rates.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::distribution::{Distribution, LabeledDistribution};
use crate::error::{Error, Result};
use crate::hypothesis::{Classifier, Hypothesis};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FalseRates {
    /// Mass of `h(x) = 1 ∧ y = 0`.
    pub positive: f64,
    /// Mass of `h(x) = 0 ∧ y = 1`.
    pub negative: f64,
}

impl FalseRates {
    pub fn total(&self) -> f64 {
        self.positive + self.negative
    }
}

/// Mass where `h` commits to a label different from `f`.
pub fn err(p: &Distribution, h: &impl Classifier, f: &Hypothesis) -> Result<f64> {
    let u = p.universe();
    Ok(p.support()?
        .filter(|&(id, _)| {
            let x = u.point(id);
            matches!(h.predict(x), Some(v) if v != f.eval(x))
        })
        .map(|(_, w)| w)
        .sum())
}

/// Abstention mass.
pub fn rej(p: &Distribution, h: &impl Classifier) -> Result<f64> {
    let u = p.universe();
    Ok(p.support()?.filter(|&(id, _)| h.predict(u.point(id)).is_none()).map(|(_, w)| w).sum())
}

pub fn false_rates(d: &LabeledDistribution, h: &impl Classifier) -> Result<FalseRates> {
    let u = d.universe();
    let mut rates = FalseRates { positive: 0.0, negative: 0.0 };
    for (id, w) in d.marginal().support()? {
        let x = u.point(id);
        let eta = d.positive_probability(x);
        match h.predict(x) {
            Some(true) => rates.positive += w * (1.0 - eta),
            Some(false) => rates.negative += w * eta,
            None => {}
        }
    }
    Ok(rates)
}

/// `½ Σ |P(x) − Q(x)|`.
pub fn tv_distance(p: &Distribution, q: &Distribution) -> Result<f64> {
    if !Arc::ptr_eq(p.universe(), q.universe()) && p.universe() != q.universe() {
        return Err(Error::UniverseMismatch);
    }
    let a: Vec<_> = p.support()?.collect();
    let b: Vec<_> = q.support()?.collect();
    let (mut i, mut j, mut sum) = (0, 0, 0.0);
    while i < a.len() || j < b.len() {
        let ia = a.get(i).map(|e| e.0).unwrap_or(usize::MAX);
        let jb = b.get(j).map(|e| e.0).unwrap_or(usize::MAX);
        if ia < jb {
            sum += a[i].1;
            i += 1;
        } else if jb < ia {
            sum += b[j].1;
            j += 1;
        } else {
            sum += (a[i].1 - b[j].1).abs();
            i += 1;
            j += 1;
        }
    }
    Ok(0.5 * sum)
}
