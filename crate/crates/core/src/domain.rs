//! Points and the finite universes they live in.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::parity::BitVector;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Payload {
    None,
    Real(Vec<f64>),
    Bits(BitVector),
}

impl Payload {
    fn dimension(&self) -> usize {
        match self {
            Payload::None => 0,
            Payload::Real(v) => v.len(),
            Payload::Bits(b) => b.dim(),
        }
    }

    fn kind(&self) -> u8 {
        match self {
            Payload::None => 0,
            Payload::Real(_) => 1,
            Payload::Bits(_) => 2,
        }
    }
}

/// An element of the input space: an index into its universe plus an
/// optional geometric or boolean payload.
#[derive(Debug, Clone, PartialEq)]
pub struct Point {
    pub id: usize,
    pub payload: Payload,
}

impl Point {
    pub fn coords(&self) -> Option<&[f64]> {
        match &self.payload {
            Payload::Real(v) => Some(v),
            _ => None,
        }
    }

    pub fn bits(&self) -> Option<&BitVector> {
        match &self.payload {
            Payload::Bits(b) => Some(b),
            _ => None,
        }
    }
}

/// The finite table of points every distribution and truth table of a
/// scenario indexes into.
#[derive(Debug, Clone, PartialEq)]
pub struct Universe {
    points: Vec<Point>,
}

impl Universe {
    pub const MAX_SIZE: usize = 1 << 20;

    pub fn from_payloads(payloads: Vec<Payload>) -> Result<Arc<Self>> {
        if payloads.is_empty() {
            return Err(Error::InvalidParameter("universe must not be empty".into()));
        }
        if payloads.len() > Self::MAX_SIZE {
            return Err(Error::ResolutionCap {
                size: payloads.len() as u128,
                cap: Self::MAX_SIZE as u128,
            });
        }
        let (kind, dim) = (payloads[0].kind(), payloads[0].dimension());
        for p in &payloads {
            if p.kind() != kind {
                return Err(Error::InvalidParameter("mixed payload kinds in one universe".into()));
            }
            if p.dimension() != dim {
                return Err(Error::DimensionMismatch { expected: dim, found: p.dimension() });
            }
        }
        let points = payloads
            .into_iter()
            .enumerate()
            .map(|(id, payload)| Point { id, payload })
            .collect();
        Ok(Arc::new(Universe { points }))
    }

    /// `n` anonymous points.
    pub fn indexed(n: usize) -> Result<Arc<Self>> {
        Self::from_payloads(vec![Payload::None; n])
    }

    pub fn plane(points: &[[f64; 2]]) -> Result<Arc<Self>> {
        Self::from_payloads(points.iter().map(|p| Payload::Real(p.to_vec())).collect())
    }

    /// The full boolean cube `{0,1}^dim`; point `id` has bit `i` equal to
    /// bit `i` of `id`.
    pub fn cube(dim: usize) -> Result<Arc<Self>> {
        if dim == 0 || dim > 20 {
            return Err(Error::InvalidParameter(format!(
                "cube dimension must lie in 1..=20, got {dim}"
            )));
        }
        Self::from_payloads(
            (0..1usize << dim)
                .map(|id| Payload::Bits(BitVector::from_index(dim, id as u64)))
                .collect(),
        )
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn point(&self, id: usize) -> &Point {
        &self.points[id]
    }

    pub fn points(&self) -> &[Point] {
        &self.points
    }

    /// Dimension of the payloads; zero for anonymous points.
    pub fn dimension(&self) -> usize {
        self.points[0].payload.dimension()
    }

    pub fn is_plane(&self) -> bool {
        matches!(self.points[0].payload, Payload::Real(ref v) if v.len() == 2)
    }

    pub fn radius(&self) -> f64 {
        self.points
            .iter()
            .filter_map(|p| p.coords())
            .map(|c| c.iter().map(|v| v * v).sum::<f64>().sqrt())
            .fold(0.0, f64::max)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cube_ids_match_bits() {
        let u = Universe::cube(3).unwrap();
        assert_eq!(u.len(), 8);
        let b = u.point(5).bits().unwrap();
        assert!(b.get(0) && !b.get(1) && b.get(2));
    }

    #[test]
    fn mixed_dimensions_rejected() {
        let err = Universe::from_payloads(vec![
            Payload::Real(vec![0.0, 1.0]),
            Payload::Real(vec![0.0]),
        ])
        .unwrap_err();
        assert!(matches!(err, Error::DimensionMismatch { .. }));
    }
}
