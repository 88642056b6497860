//! Shaped, row-major `f32` arrays.
//!
//! Batched tensors are batch-first: a tensor of shape `[B, ...]` holds `B`
//! samples laid out contiguously, so `row(i)` is a plain slice.

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct Tensor {
    shape: Vec<usize>,
    data: Vec<f32>,
}

impl Tensor {
    pub fn new(shape: Vec<usize>, data: Vec<f32>) -> Result<Self> {
        let expected: usize = shape.iter().product();
        if shape.contains(&0) {
            return Err(Error::Shape(format!("zero-sized dimension in {shape:?}")));
        }
        if expected != data.len() {
            return Err(Error::Shape(format!(
                "shape {shape:?} needs {expected} elements, got {}",
                data.len()
            )));
        }
        Ok(Self { shape, data })
    }

    pub fn zeros(shape: Vec<usize>) -> Self {
        let n = shape.iter().product();
        Self {
            shape,
            data: vec![0.0; n],
        }
    }

    pub fn filled(shape: Vec<usize>, value: f32) -> Self {
        let n = shape.iter().product();
        Self {
            shape,
            data: vec![value; n],
        }
    }

    /// Stacks equally sized samples into a `[B] + sample_shape` batch.
    pub fn stack<'a, I>(sample_shape: &[usize], rows: I) -> Result<Self>
    where
        I: IntoIterator<Item = &'a [f32]>,
    {
        let width: usize = sample_shape.iter().product();
        let mut data = Vec::new();
        let mut count = 0;
        for row in rows {
            if row.len() != width {
                return Err(Error::Shape(format!(
                    "sample of length {} does not fit shape {sample_shape:?}",
                    row.len()
                )));
            }
            data.extend_from_slice(row);
            count += 1;
        }
        if count == 0 {
            return Err(Error::Shape("cannot stack an empty batch".into()));
        }
        let mut shape = vec![count];
        shape.extend_from_slice(sample_shape);
        Tensor::new(shape, data)
    }

    #[inline]
    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    #[inline]
    pub fn data(&self) -> &[f32] {
        &self.data
    }

    #[inline]
    pub fn data_mut(&mut self) -> &mut [f32] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<f32> {
        self.data
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.data.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    /// Leading dimension.
    #[inline]
    pub fn batch_size(&self) -> usize {
        self.shape[0]
    }

    /// Elements per leading-dimension entry.
    #[inline]
    pub fn row_width(&self) -> usize {
        self.shape[1..].iter().product()
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f32] {
        let w = self.row_width();
        &self.data[i * w..(i + 1) * w]
    }

    #[inline]
    pub fn row_mut(&mut self, i: usize) -> &mut [f32] {
        let w = self.row_width();
        &mut self.data[i * w..(i + 1) * w]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f32]> {
        self.data.chunks_exact(self.row_width())
    }

    pub fn reshape(mut self, shape: Vec<usize>) -> Result<Self> {
        let n: usize = shape.iter().product();
        if n != self.data.len() || shape.contains(&0) {
            return Err(Error::Shape(format!(
                "cannot reshape {:?} into {shape:?}",
                self.shape
            )));
        }
        self.shape = shape;
        Ok(self)
    }

    /// Gathers the given leading-dimension entries into a new tensor.
    pub fn select_rows(&self, indices: &[usize]) -> Result<Self> {
        let n = self.batch_size();
        if let Some(&bad) = indices.iter().find(|&&i| i >= n) {
            return Err(Error::Shape(format!("row {bad} out of range for {n} rows")));
        }
        Tensor::stack(&self.shape[1..], indices.iter().map(|&i| self.row(i)))
    }

    /// Contiguous range `[start, end)` of the leading dimension.
    pub fn slice_rows(&self, start: usize, end: usize) -> Result<Self> {
        if start >= end || end > self.batch_size() {
            return Err(Error::Shape(format!(
                "row range {start}..{end} invalid for {} rows",
                self.batch_size()
            )));
        }
        let w = self.row_width();
        let mut shape = self.shape.clone();
        shape[0] = end - start;
        Tensor::new(shape, self.data[start * w..end * w].to_vec())
    }

    pub fn all_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }
}
