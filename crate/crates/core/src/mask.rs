use crate::error::{Error, Result};

/// Binary keep-map at image resolution.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RetentionMask {
    height: usize,
    width: usize,
    bits: Vec<bool>,
    retained: usize,
}

impl RetentionMask {
    pub fn new(height: usize, width: usize, bits: Vec<bool>) -> Result<Self> {
        if bits.len() != height * width {
            return Err(Error::invalid(format!(
                "mask of {height}×{width} needs {} bits, got {}",
                height * width,
                bits.len()
            )));
        }
        let retained = bits.iter().filter(|&&b| b).count();
        Ok(RetentionMask {
            height,
            width,
            bits,
            retained,
        })
    }

    pub fn full(height: usize, width: usize) -> Self {
        RetentionMask {
            height,
            width,
            bits: vec![true; height * width],
            retained: height * width,
        }
    }

    pub fn empty(height: usize, width: usize) -> Self {
        RetentionMask {
            height,
            width,
            bits: vec![false; height * width],
            retained: 0,
        }
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    pub fn is_set(&self, y: usize, x: usize) -> bool {
        self.bits[y * self.width + x]
    }

    pub fn retained_count(&self) -> usize {
        self.retained
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }
}
