//! Random finite instances for property checks and acceptance runs.

use std::sync::Arc;

use rand::seq::SliceRandom;
use rand::Rng;

use crate::distribution::{Distribution, LabeledDistribution};
use crate::domain::Universe;
use crate::hypothesis::{Hypothesis, MaterializedClass, TruthTable};
use crate::parity::{BitVector, Gf2Basis};
use crate::rng::Stream;

/// A finite universe with two marginals, a class and a target in it.
#[derive(Debug, Clone)]
pub struct FiniteInstance {
    pub universe: Arc<Universe>,
    pub p: Distribution,
    pub q: Distribution,
    pub class: Arc<MaterializedClass>,
    pub target: Hypothesis,
}

/// Label noise applied on top of a target.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Noise {
    None,
    /// Positives read as negatives with this rate.
    OneSided(f64),
    /// Independent rates for both directions.
    TwoSided { flip_positive: f64, flip_negative: f64 },
    /// An arbitrary conditional label probability per point.
    Arbitrary,
}

/// Random weights on a random nonempty subset of the universe. Some
/// supports are tiny and some weights are skewed, so thresholds get hit
/// from both sides.
pub fn random_distribution(rng: &mut Stream, universe: &Arc<Universe>) -> Distribution {
    let n = universe.len();
    let k = rng.gen_range(1..=n);
    let mut ids: Vec<usize> = (0..n).collect();
    ids.shuffle(rng);
    ids.truncate(k);
    ids.sort_unstable();
    let skew: f64 = rng.gen_range(0.0..3.0);
    let pairs: Vec<(usize, f64)> = ids.iter().map(|&id| (id, rng.gen::<f64>().powf(1.0 + skew) + 1e-3)).collect();
    Distribution::normalized(universe.clone(), pairs).expect("positive weights")
}

/// Constants first, then random truth tables with a random bias each.
pub fn random_class(rng: &mut Stream, universe: &Arc<Universe>, size: usize) -> MaterializedClass {
    let n = universe.len();
    let mut tables = vec![TruthTable::zeros(n), TruthTable::zeros(n).complement()];
    while tables.len() < size.max(2) {
        let bias: f64 = rng.gen_range(0.05..0.95);
        tables.push(TruthTable::from_fn(n, |_| rng.gen_bool(bias)));
    }
    MaterializedClass::from_tables(universe.clone(), tables)
}

/// `|X| ≤ max_points`, `|C| ≤ max_class`, target drawn from the class.
pub fn random_instance(rng: &mut Stream, max_points: usize, max_class: usize) -> FiniteInstance {
    let n = rng.gen_range(2..=max_points.max(2));
    let universe = Universe::indexed(n).expect("small universe");
    let size = rng.gen_range(2..=max_class.max(2));
    let class = random_class(rng, &universe, size);
    let p = random_distribution(rng, &universe);
    let q = if rng.gen_bool(0.15) { p.clone() } else { random_distribution(rng, &universe) };
    let target = class.member(rng.gen_range(0..class.len())).clone();
    FiniteInstance { universe, p, q, class: Arc::new(class), target }
}

/// Conditional label probabilities for `target` under `noise`.
pub fn noisy_labels(rng: &mut Stream, universe: &Universe, target: &Hypothesis, noise: Noise) -> Vec<f64> {
    universe
        .points()
        .iter()
        .map(|x| {
            let y = target.eval(x);
            match noise {
                Noise::None => f64::from(u8::from(y)),
                Noise::OneSided(r) => {
                    if y {
                        1.0 - r
                    } else {
                        0.0
                    }
                }
                Noise::TwoSided { flip_positive, flip_negative } => {
                    if y {
                        1.0 - flip_positive
                    } else {
                        flip_negative
                    }
                }
                Noise::Arbitrary => match rng.gen_range(0..4) {
                    0 => 0.0,
                    1 => 1.0,
                    _ => rng.gen(),
                },
            }
        })
        .collect()
}

pub fn labeled(p: &Distribution, eta: Vec<f64>) -> LabeledDistribution {
    LabeledDistribution::noisy(p.clone(), eta).expect("probabilities in [0, 1]")
}

/// A uniformly random subspace of `{0,1}^dim` of the given rank.
pub fn random_subspace(rng: &mut Stream, dim: usize, rank: usize) -> Gf2Basis {
    let mut basis = Gf2Basis::empty(dim);
    while basis.rank() < rank.min(dim) {
        let v = BitVector::from_bits(&(0..dim).map(|_| rng.gen_bool(0.5)).collect::<Vec<_>>());
        basis.insert(&v).expect("matching dimension");
    }
    basis
}

pub fn random_parity(rng: &mut Stream, dim: usize) -> BitVector {
    BitVector::from_bits(&(0..dim).map(|_| rng.gen_bool(0.5)).collect::<Vec<_>>())
}

/// Uniform distribution over the span of `basis` inside the cube universe,
/// whose point ids are the integer encodings of the vectors.
pub fn uniform_on_span(universe: &Arc<Universe>, basis: &Gf2Basis) -> Distribution {
    let mut ids: Vec<usize> = basis.elements().iter().map(|v| v.to_index() as usize).collect();
    ids.sort_unstable();
    Distribution::uniform(universe.clone(), &ids).expect("span lies in the cube")
}
