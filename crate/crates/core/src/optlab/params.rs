use serde::{Deserialize, Serialize};

use super::OptimError;

/// A named, row-major parameter tensor.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamBlock {
    pub name: String,
    pub rows: usize,
    pub cols: usize,
    pub values: Vec<f64>,
}

impl ParamBlock {
    pub fn zeros(name: &str, rows: usize, cols: usize) -> Self {
        Self {
            name: name.to_string(),
            rows,
            cols,
            values: vec![0.0; rows * cols],
        }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// An ordered collection of blocks; gradients share the parameters' layout.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Params {
    pub blocks: Vec<ParamBlock>,
}

impl Params {
    pub fn new(blocks: Vec<ParamBlock>) -> Self {
        Self { blocks }
    }

    pub fn zeros_like(&self) -> Self {
        Self {
            blocks: self
                .blocks
                .iter()
                .map(|b| ParamBlock::zeros(&b.name, b.rows, b.cols))
                .collect(),
        }
    }

    pub fn block(&self, name: &str) -> Option<&ParamBlock> {
        self.blocks.iter().find(|b| b.name == name)
    }

    pub fn block_mut(&mut self, name: &str) -> Option<&mut ParamBlock> {
        self.blocks.iter_mut().find(|b| b.name == name)
    }

    pub fn len(&self) -> usize {
        self.blocks.iter().map(ParamBlock::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Flat (block, offset) coordinates in block order.
    pub fn coordinates(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.blocks
            .iter()
            .enumerate()
            .flat_map(|(b, block)| (0..block.len()).map(move |i| (b, i)))
    }

    /// `self += scale * other`; layouts must agree.
    pub fn add_scaled(&mut self, other: &Params, scale: f64) {
        for (a, b) in self.blocks.iter_mut().zip(&other.blocks) {
            for (x, y) in a.values.iter_mut().zip(&b.values) {
                *x += scale * y;
            }
        }
    }

    pub fn scale(&mut self, factor: f64) {
        for block in &mut self.blocks {
            for x in &mut block.values {
                *x *= factor;
            }
        }
    }

    pub fn l2_norm(&self) -> f64 {
        self.blocks
            .iter()
            .flat_map(|b| &b.values)
            .map(|x| x * x)
            .sum::<f64>()
            .sqrt()
    }

    /// Shape and finiteness checks for a gradient against these parameters.
    pub fn check_gradient(&self, grads: &Params) -> Result<(), OptimError> {
        if self.blocks.len() != grads.blocks.len() {
            return Err(OptimError::Dimension(format!(
                "{} parameter blocks but {} gradient blocks",
                self.blocks.len(),
                grads.blocks.len()
            )));
        }
        for (p, g) in self.blocks.iter().zip(&grads.blocks) {
            if p.name != g.name || p.rows != g.rows || p.cols != g.cols || g.values.len() != p.values.len() {
                return Err(OptimError::Dimension(format!(
                    "block {} is {}x{} but gradient {} is {}x{}",
                    p.name, p.rows, p.cols, g.name, g.rows, g.cols
                )));
            }
            if let Some(i) = g.values.iter().position(|v| !v.is_finite()) {
                return Err(OptimError::Numeric {
                    block: g.name.clone(),
                    index: i,
                });
            }
        }
        Ok(())
    }
}
