use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::net::{FeatureVector, GradientOf, NetworkModel, Shape};

/// The selectable units of an instance: single features, or rectangular
/// pixel blocks of an image (row-major block grid; edge blocks may be smaller).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum UnitLayout {
    Features(usize),
    Blocks {
        height: usize,
        width: usize,
        block_h: usize,
        block_w: usize,
    },
}

impl UnitLayout {
    pub fn for_shape(shape: Shape, block: Option<(usize, usize)>) -> Result<Self> {
        match (shape, block) {
            (_, None) => Ok(UnitLayout::Features(shape.len())),
            (Shape::Flat(_), Some(_)) => Err(Error::NotImage),
            (Shape::Image { height, width }, Some((bh, bw))) => {
                if bh == 0 || bw == 0 {
                    return Err(Error::InvalidConfig("block sides must be at least 1".into()));
                }
                Ok(UnitLayout::Blocks {
                    height,
                    width,
                    block_h: bh,
                    block_w: bw,
                })
            }
        }
    }

    pub fn dim(&self) -> usize {
        match *self {
            UnitLayout::Features(d) => d,
            UnitLayout::Blocks { height, width, .. } => height * width,
        }
    }

    fn grid(&self) -> (usize, usize) {
        match *self {
            UnitLayout::Features(d) => (1, d),
            UnitLayout::Blocks {
                height,
                width,
                block_h,
                block_w,
            } => (height.div_ceil(block_h), width.div_ceil(block_w)),
        }
    }

    pub fn unit_count(&self) -> usize {
        let (r, c) = self.grid();
        r * c
    }

    /// Flat feature indices covered by unit `u`, ascending.
    pub fn unit_indices(&self, u: usize) -> Vec<usize> {
        match *self {
            UnitLayout::Features(_) => vec![u],
            UnitLayout::Blocks {
                height,
                width,
                block_h,
                block_w,
            } => {
                let (_, cols) = self.grid();
                let (r0, c0) = ((u / cols) * block_h, (u % cols) * block_w);
                let mut out = Vec::with_capacity(block_h * block_w);
                for r in r0..(r0 + block_h).min(height) {
                    for c in c0..(c0 + block_w).min(width) {
                        out.push(r * width + c);
                    }
                }
                out
            }
        }
    }

    pub fn unit_of(&self, i: usize) -> usize {
        match *self {
            UnitLayout::Features(_) => i,
            UnitLayout::Blocks {
                width,
                block_h,
                block_w,
                ..
            } => {
                let (_, cols) = self.grid();
                (i / width / block_h) * cols + (i % width) / block_w
            }
        }
    }
}

/// `{0,1}^d` mask whose bits are set one unit at a time.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BinaryMask {
    bits: Vec<u8>,
    layout: UnitLayout,
}

impl BinaryMask {
    pub fn empty(layout: UnitLayout) -> Self {
        Self {
            bits: vec![0; layout.dim()],
            layout,
        }
    }

    pub fn full(layout: UnitLayout) -> Self {
        Self {
            bits: vec![1; layout.dim()],
            layout,
        }
    }

    pub fn from_bits(bits: Vec<u8>) -> Result<Self> {
        if bits.iter().any(|&b| b > 1) {
            return Err(Error::InvalidConfig("mask bits must be 0 or 1".into()));
        }
        let layout = UnitLayout::Features(bits.len());
        Ok(Self { bits, layout })
    }

    pub fn bits(&self) -> &[u8] {
        &self.bits
    }

    pub fn layout(&self) -> UnitLayout {
        self.layout
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    pub fn is_set(&self, i: usize) -> bool {
        self.bits[i] == 1
    }

    pub fn is_unit_set(&self, u: usize) -> bool {
        self.layout.unit_indices(u).iter().all(|&i| self.bits[i] == 1)
    }

    pub fn set_unit(&mut self, u: usize) {
        for i in self.layout.unit_indices(u) {
            self.bits[i] = 1;
        }
    }

    /// Number of fully selected units.
    pub fn unit_cardinality(&self) -> usize {
        (0..self.layout.unit_count()).filter(|&u| self.is_unit_set(u)).count()
    }

    pub fn masked_indices(&self) -> Vec<usize> {
        (0..self.bits.len()).filter(|&i| self.bits[i] == 1).collect()
    }

    pub fn count_ones(&self) -> usize {
        self.bits.iter().filter(|&&b| b == 1).count()
    }
}

/// `(1 − M)∘X + M∘C`. With `clamp`, masked coordinates are clipped to the
/// feature bounds of `x`; unmasked coordinates always equal `x` exactly.
pub fn compose(x: &FeatureVector, mask: &BinaryMask, composite: &[f64], clamp: bool) -> Result<FeatureVector> {
    if mask.len() != x.len() || composite.len() != x.len() {
        return Err(Error::DimensionMismatch {
            expected: x.len(),
            got: if mask.len() != x.len() { mask.len() } else { composite.len() },
        });
    }
    let values = x
        .values()
        .iter()
        .zip(mask.bits())
        .zip(composite)
        .enumerate()
        .map(|(i, ((&xv, &m), &c))| {
            if m == 0 {
                xv
            } else if clamp {
                let (lo, hi) = x.bound(i);
                c.clamp(lo, hi)
            } else {
                c
            }
        })
        .collect();
    x.replace_values(values)
}

/// Units ordered by descending summed `|gradient|`, ties by ascending index.
pub fn rank_units(gradient: &[f64], layout: UnitLayout) -> Vec<usize> {
    let scores: Vec<f64> = (0..layout.unit_count())
        .map(|u| layout.unit_indices(u).iter().map(|&i| gradient[i].abs()).sum())
        .collect();
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]));
    order
}

/// Ranks the units of `x` by the target-class gradient magnitude.
pub fn rank_features(
    model: &NetworkModel,
    x: &[f64],
    target: usize,
    layout: UnitLayout,
    of: GradientOf,
) -> Result<Vec<usize>> {
    if layout.dim() != x.len() {
        return Err(Error::DimensionMismatch {
            expected: x.len(),
            got: layout.dim(),
        });
    }
    Ok(rank_units(&model.input_gradient(x, target, of)?, layout))
}
