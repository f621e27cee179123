//! Per-element dG coefficient storage.
//!
//! A [`DGField`] is a logical `N x n` matrix: one row of `n` local
//! coefficients per mesh element. Physically it is stored either row-major
//! (the coefficients of one element are contiguous) or column-major
//! (coefficient `k` of every element is contiguous). The layout is runtime
//! metadata, so one kernel serves both; all access goes through a pair of
//! strides computed once per field.

use std::fmt::{Debug, Display};

use ndarray::{ArrayView2, ArrayViewMut2, LinalgScalar, ScalarOperand, ShapeBuilder};
use num_traits::Float;

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum StorageLayout {
    RowMajor,
    ColMajor,
}

impl StorageLayout {
    pub fn name(self) -> &'static str {
        match self {
            StorageLayout::RowMajor => "row",
            StorageLayout::ColMajor => "col",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Precision {
    F64,
    F32,
}

impl Precision {
    pub fn name(self) -> &'static str {
        match self {
            Precision::F64 => "f64",
            Precision::F32 => "f32",
        }
    }
}

/// Floating point type a field (and a kernel call) is instantiated with.
pub trait Scalar:
    Float + LinalgScalar + ScalarOperand + Send + Sync + Default + Debug + Display + 'static
{
    const PRECISION: Precision;

    /// Rounds an `f64` to this precision.
    fn lit(x: f64) -> Self;

    fn as_f64(self) -> f64;
}

impl Scalar for f64 {
    const PRECISION: Precision = Precision::F64;

    #[inline(always)]
    fn lit(x: f64) -> Self {
        x
    }

    #[inline(always)]
    fn as_f64(self) -> f64 {
        self
    }
}

impl Scalar for f32 {
    const PRECISION: Precision = Precision::F32;

    #[inline(always)]
    fn lit(x: f64) -> Self {
        x as f32
    }

    #[inline(always)]
    fn as_f64(self) -> f64 {
        self as f64
    }
}

/// Largest number of stored scalars; element indices are kept 32-bit.
pub const MAX_FIELD_LEN: usize = u32::MAX as usize;

#[derive(Clone, Debug, PartialEq)]
pub struct DGField<T> {
    n_elements: usize,
    n_local: usize,
    layout: StorageLayout,
    elem_stride: usize,
    local_stride: usize,
    data: Vec<T>,
}

fn strides(layout: StorageLayout, n_elements: usize, n_local: usize) -> (usize, usize) {
    match layout {
        StorageLayout::RowMajor => (n_local, 1),
        StorageLayout::ColMajor => (1, n_elements),
    }
}

fn checked_len(n_elements: usize, n_local: usize) -> Result<usize> {
    if n_elements == 0 || n_local == 0 {
        return Err(Error::InvalidArgument(format!(
            "field dimensions must be positive, got {n_elements} x {n_local}"
        )));
    }
    match n_elements.checked_mul(n_local) {
        Some(len) if len <= MAX_FIELD_LEN => Ok(len),
        _ => Err(Error::InvalidArgument(format!(
            "{n_elements} x {n_local} entries exceed the 32-bit index range"
        ))),
    }
}

impl<T: Scalar> DGField<T> {
    /// Creates a field with every coefficient equal to `fill`.
    pub fn new(n_elements: usize, n_local: usize, layout: StorageLayout, fill: T) -> Result<Self> {
        let len = checked_len(n_elements, n_local)?;
        let mut data = Vec::new();
        data.try_reserve_exact(len)
            .map_err(|_| Error::Allocation(len))?;
        data.resize(len, fill);
        let (elem_stride, local_stride) = strides(layout, n_elements, n_local);
        Ok(DGField {
            n_elements,
            n_local,
            layout,
            elem_stride,
            local_stride,
            data,
        })
    }

    pub fn zeros(n_elements: usize, n_local: usize, layout: StorageLayout) -> Result<Self> {
        Self::new(n_elements, n_local, layout, T::zero())
    }

    /// Builds a field from logical rows given in row-major order.
    pub fn from_rows(n_local: usize, layout: StorageLayout, rows: &[T]) -> Result<Self> {
        if n_local == 0 || !rows.len().is_multiple_of(n_local) {
            return Err(Error::DimensionMismatch(format!(
                "{} values do not form rows of length {n_local}",
                rows.len()
            )));
        }
        let n_elements = rows.len() / n_local;
        let mut field = Self::zeros(n_elements, n_local, layout)?;
        for (i, row) in rows.chunks_exact(n_local).enumerate() {
            field.write_row(i, row);
        }
        Ok(field)
    }

    pub fn n_elements(&self) -> usize {
        self.n_elements
    }

    pub fn n_local(&self) -> usize {
        self.n_local
    }

    pub fn layout(&self) -> StorageLayout {
        self.layout
    }

    pub fn precision(&self) -> Precision {
        T::PRECISION
    }

    /// Physical storage, in layout order.
    pub fn as_slice(&self) -> &[T] {
        &self.data
    }

    #[inline(always)]
    pub fn get(&self, i: usize, k: usize) -> T {
        self.data[i * self.elem_stride + k * self.local_stride]
    }

    #[inline(always)]
    pub fn set(&mut self, i: usize, k: usize, value: T) {
        self.data[i * self.elem_stride + k * self.local_stride] = value;
    }

    /// Copies logical row `i` into `out` (length `n_local`).
    #[inline]
    pub fn read_row(&self, i: usize, out: &mut [T]) {
        let base = i * self.elem_stride;
        for (k, o) in out.iter_mut().enumerate().take(self.n_local) {
            *o = self.data[base + k * self.local_stride];
        }
    }

    #[inline]
    fn write_row(&mut self, i: usize, row: &[T]) {
        let base = i * self.elem_stride;
        for (k, &v) in row.iter().enumerate() {
            self.data[base + k * self.local_stride] = v;
        }
    }

    pub fn element_row(&self, i: usize) -> Result<Vec<T>> {
        self.check_index(i)?;
        let mut row = vec![T::zero(); self.n_local];
        self.read_row(i, &mut row);
        Ok(row)
    }

    pub fn set_element_row(&mut self, i: usize, row: &[T]) -> Result<()> {
        self.check_index(i)?;
        if row.len() != self.n_local {
            return Err(Error::DimensionMismatch(format!(
                "row of length {} for a field with {} local coefficients",
                row.len(),
                self.n_local
            )));
        }
        self.write_row(i, row);
        Ok(())
    }

    fn check_index(&self, i: usize) -> Result<()> {
        if i >= self.n_elements {
            return Err(Error::IndexOutOfRange {
                index: i,
                len: self.n_elements,
            });
        }
        Ok(())
    }

    /// Returns a logically identical copy stored in `target` layout.
    pub fn to_layout(&self, target: StorageLayout) -> DGField<T> {
        if target == self.layout {
            return self.clone();
        }
        let (elem_stride, local_stride) = strides(target, self.n_elements, self.n_local);
        let mut data = vec![T::zero(); self.data.len()];
        for i in 0..self.n_elements {
            for k in 0..self.n_local {
                data[i * elem_stride + k * local_stride] = self.get(i, k);
            }
        }
        DGField {
            layout: target,
            elem_stride,
            local_stride,
            data,
            ..*self
        }
    }

    /// Converts every coefficient to precision `U` (rounding when narrowing).
    pub fn cast<U: Scalar>(&self) -> DGField<U> {
        DGField {
            n_elements: self.n_elements,
            n_local: self.n_local,
            layout: self.layout,
            elem_stride: self.elem_stride,
            local_stride: self.local_stride,
            data: self.data.iter().map(|&x| U::lit(x.as_f64())).collect(),
        }
    }

    fn check_same_shape<U>(&self, other: &DGField<U>) -> Result<()> {
        if self.n_elements != other.n_elements || self.n_local != other.n_local {
            return Err(Error::DimensionMismatch(format!(
                "{} x {} vs {} x {}",
                self.n_elements, self.n_local, other.n_elements, other.n_local
            )));
        }
        Ok(())
    }

    /// Largest `|a - b|` over logical positions; layouts may differ.
    pub fn max_abs_diff(&self, other: &DGField<T>) -> Result<f64> {
        self.check_same_shape(other)?;
        let mut worst = 0.0f64;
        for i in 0..self.n_elements {
            for k in 0..self.n_local {
                let d = (self.get(i, k).as_f64() - other.get(i, k).as_f64()).abs();
                if d > worst || d.is_nan() {
                    worst = d;
                }
            }
        }
        Ok(worst)
    }

    pub fn max_abs(&self) -> f64 {
        self.data
            .iter()
            .fold(0.0f64, |m, &x| m.max(x.as_f64().abs()))
    }

    /// Sum of `|x|` in `f64`, accumulated in logical (element, coefficient)
    /// order so the value does not depend on the storage layout.
    pub fn abs_sum(&self) -> f64 {
        let mut sum = 0.0f64;
        for i in 0..self.n_elements {
            for k in 0..self.n_local {
                sum += self.get(i, k).as_f64().abs();
            }
        }
        sum
    }

    /// `N x n` view with strides matching the storage layout.
    pub fn view(&self) -> ArrayView2<'_, T> {
        let shape = (self.n_elements, self.n_local);
        match self.layout {
            StorageLayout::RowMajor => ArrayView2::from_shape(shape, &self.data),
            StorageLayout::ColMajor => ArrayView2::from_shape(shape.f(), &self.data),
        }
        .expect("field length matches its shape")
    }

    pub fn view_mut(&mut self) -> ArrayViewMut2<'_, T> {
        let shape = (self.n_elements, self.n_local);
        match self.layout {
            StorageLayout::RowMajor => ArrayViewMut2::from_shape(shape, &mut self.data),
            StorageLayout::ColMajor => ArrayViewMut2::from_shape(shape.f(), &mut self.data),
        }
        .expect("field length matches its shape")
    }

    /// Splits the field into disjoint mutable blocks of `block_len`
    /// consecutive elements (the last block may be shorter).
    pub fn blocks_mut(&mut self, block_len: usize) -> Vec<ElementBlockMut<'_, T>> {
        let block_len = block_len.max(1);
        let n_local = self.n_local;
        match self.layout {
            StorageLayout::RowMajor => self
                .data
                .chunks_mut(block_len * n_local)
                .enumerate()
                .map(|(b, rows)| ElementBlockMut {
                    start: b * block_len,
                    len: rows.len() / n_local,
                    storage: BlockStorage::Rows { rows, n_local },
                })
                .collect(),
            StorageLayout::ColMajor => {
                let n = self.n_elements;
                let n_blocks = n.div_ceil(block_len);
                let mut columns: Vec<_> = self
                    .data
                    .chunks_mut(n)
                    .map(|col| col.chunks_mut(block_len))
                    .collect();
                (0..n_blocks)
                    .map(|b| {
                        let parts: Vec<&mut [T]> = columns
                            .iter_mut()
                            .map(|col| col.next().expect("every column has n_blocks chunks"))
                            .collect();
                        ElementBlockMut {
                            start: b * block_len,
                            len: parts[0].len(),
                            storage: BlockStorage::Columns(parts),
                        }
                    })
                    .collect()
            }
        }
    }
}

/// Exclusive access to the rows of a contiguous element range.
pub struct ElementBlockMut<'a, T> {
    start: usize,
    len: usize,
    storage: BlockStorage<'a, T>,
}

enum BlockStorage<'a, T> {
    Rows { rows: &'a mut [T], n_local: usize },
    Columns(Vec<&'a mut [T]>),
}

impl<T: Copy> ElementBlockMut<'_, T> {
    /// Global index of the first element in the block.
    pub fn start(&self) -> usize {
        self.start
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// Reads the row of block-local element `local` into `out`.
    #[inline]
    pub fn read_row(&self, local: usize, out: &mut [T]) {
        match &self.storage {
            BlockStorage::Rows { rows, n_local } => {
                out[..*n_local].copy_from_slice(&rows[local * n_local..(local + 1) * n_local])
            }
            BlockStorage::Columns(cols) => {
                for (o, col) in out.iter_mut().zip(cols) {
                    *o = col[local];
                }
            }
        }
    }

    #[inline]
    pub fn write_row(&mut self, local: usize, row: &[T]) {
        match &mut self.storage {
            BlockStorage::Rows { rows, n_local } => {
                rows[local * *n_local..(local + 1) * *n_local].copy_from_slice(&row[..*n_local])
            }
            BlockStorage::Columns(cols) => {
                for (&v, col) in row.iter().zip(cols.iter_mut()) {
                    col[local] = v;
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn create_fills_every_entry() {
        let f = DGField::<f64>::new(4, 3, StorageLayout::RowMajor, 0.0).unwrap();
        assert_eq!(f.as_slice(), &[0.0; 12]);
        assert_eq!(f.precision(), Precision::F64);

        let g = DGField::<f64>::new(1, 1, StorageLayout::ColMajor, 2.5).unwrap();
        assert_eq!(g.as_slice(), &[2.5]);
        assert_eq!(g.layout(), StorageLayout::ColMajor);
    }

    #[test]
    fn zero_dimensions_are_rejected() {
        assert!(matches!(
            DGField::<f64>::new(0, 3, StorageLayout::RowMajor, 0.0),
            Err(Error::InvalidArgument(_))
        ));
        assert!(matches!(
            DGField::<f32>::new(3, 0, StorageLayout::ColMajor, 0.0),
            Err(Error::InvalidArgument(_))
        ));
    }

    #[test]
    fn index_range_is_32_bit() {
        let too_big = MAX_FIELD_LEN / 8 + 1;
        assert!(matches!(
            DGField::<f32>::new(too_big, 8, StorageLayout::RowMajor, 0.0),
            Err(Error::InvalidArgument(_))
        ));
    }

    #[test]
    fn col_major_physical_order() {
        let mut f = DGField::<f64>::zeros(2, 2, StorageLayout::ColMajor).unwrap();
        f.set_element_row(0, &[0.0, 1.0]).unwrap();
        f.set_element_row(1, &[10.0, 11.0]).unwrap();
        // a00, a10, a01, a11
        assert_eq!(f.as_slice(), &[0.0, 10.0, 1.0, 11.0]);
    }

    #[test]
    fn rows_are_layout_blind() {
        let rows = [1.0, 2.0, 3.0, 4.0];
        let r = DGField::<f64>::from_rows(2, StorageLayout::RowMajor, &rows).unwrap();
        let c = DGField::<f64>::from_rows(2, StorageLayout::ColMajor, &rows).unwrap();
        assert_eq!(r.element_row(1).unwrap(), vec![3.0, 4.0]);
        assert_eq!(c.element_row(1).unwrap(), vec![3.0, 4.0]);
        assert_eq!(c.as_slice(), &[1.0, 3.0, 2.0, 4.0]);

        let single = DGField::<f64>::from_rows(3, StorageLayout::ColMajor, &[7.0, 8.0, 9.0]).unwrap();
        assert_eq!(single.element_row(0).unwrap(), vec![7.0, 8.0, 9.0]);
    }

    #[test]
    fn row_access_errors() {
        let mut f = DGField::<f64>::zeros(3, 2, StorageLayout::RowMajor).unwrap();
        assert!(matches!(
            f.element_row(3),
            Err(Error::IndexOutOfRange { index: 3, len: 3 })
        ));
        assert!(matches!(
            f.set_element_row(0, &[1.0]),
            Err(Error::DimensionMismatch(_))
        ));
        assert!(f.set_element_row(5, &[1.0, 2.0]).is_err());
    }

    #[test]
    fn set_row_touches_only_that_row() {
        for layout in [StorageLayout::RowMajor, StorageLayout::ColMajor] {
            let mut f = DGField::<f64>::new(4, 3, layout, -1.0).unwrap();
            f.set_element_row(2, &[5.0, 6.0, 7.0]).unwrap();
            for i in [0, 1, 3] {
                assert_eq!(f.element_row(i).unwrap(), vec![-1.0; 3]);
            }
            assert_eq!(f.element_row(2).unwrap(), vec![5.0, 6.0, 7.0]);
        }
        let mut g = DGField::<f64>::zeros(1, 8, StorageLayout::RowMajor).unwrap();
        let row: Vec<f64> = (0..8).map(f64::from).collect();
        g.set_element_row(0, &row).unwrap();
        assert_eq!(g.as_slice(), row.as_slice());
    }

    #[test]
    fn convert_layout_examples() {
        let f = DGField::<f64>::from_rows(2, StorageLayout::RowMajor, &[1.0, 2.0, 3.0, 4.0]).unwrap();
        let c = f.to_layout(StorageLayout::ColMajor);
        assert_eq!(c.as_slice(), &[1.0, 3.0, 2.0, 4.0]);
        assert_eq!(c.to_layout(StorageLayout::RowMajor).as_slice(), f.as_slice());
        assert_eq!(f.to_layout(StorageLayout::RowMajor), f);
        assert_eq!(f.max_abs_diff(&c).unwrap(), 0.0);
    }

    #[test]
    fn max_abs_diff_examples() {
        let a = DGField::<f64>::from_rows(2, StorageLayout::RowMajor, &[1.0, 2.0, 3.0, 4.0]).unwrap();
        assert_eq!(a.max_abs_diff(&a).unwrap(), 0.0);
        let mut b = a.clone();
        b.set(1, 0, 3.0 + 1e-3);
        assert!((a.max_abs_diff(&b).unwrap() - 1e-3).abs() < 1e-15);
        let c = DGField::<f64>::zeros(2, 3, StorageLayout::RowMajor).unwrap();
        assert!(matches!(a.max_abs_diff(&c), Err(Error::DimensionMismatch(_))));
    }

    #[test]
    fn blocks_cover_all_elements_once() {
        for layout in [StorageLayout::RowMajor, StorageLayout::ColMajor] {
            let mut f = DGField::<f64>::zeros(10, 3, layout).unwrap();
            let mut seen = 0;
            for mut block in f.blocks_mut(4) {
                for local in 0..block.len() {
                    let i = (block.start() + local) as f64;
                    block.write_row(local, &[i, 10.0 * i, 100.0 * i]);
                    seen += 1;
                }
            }
            assert_eq!(seen, 10);
            for i in 0..10 {
                let x = i as f64;
                assert_eq!(f.element_row(i).unwrap(), vec![x, 10.0 * x, 100.0 * x]);
            }
            let blocks = f.blocks_mut(4);
            let mut row = [0.0; 3];
            blocks[2].read_row(1, &mut row);
            assert_eq!(row, [9.0, 90.0, 900.0]);
        }
    }

    #[test]
    fn views_follow_logical_indexing() {
        let rows = [1.0, 2.0, 3.0, 4.0, 5.0, 6.0];
        for layout in [StorageLayout::RowMajor, StorageLayout::ColMajor] {
            let f = DGField::<f64>::from_rows(3, layout, &rows).unwrap();
            let v = f.view();
            assert_eq!(v[[1, 2]], 6.0);
            assert_eq!(v[[0, 1]], 2.0);
        }
    }

    fn field_strategy() -> impl Strategy<Value = (usize, Vec<f64>)> {
        (1usize..6, 1usize..9).prop_flat_map(|(n_local, n)| {
            (
                Just(n_local),
                proptest::collection::vec(-1e6f64..1e6, n_local * n),
            )
        })
    }

    proptest! {
        #[test]
        fn layout_round_trip((n_local, rows) in field_strategy()) {
            let f = DGField::from_rows(n_local, StorageLayout::RowMajor, &rows).unwrap();
            for target in [StorageLayout::RowMajor, StorageLayout::ColMajor] {
                let back = f.to_layout(target).to_layout(StorageLayout::RowMajor);
                prop_assert_eq!(back.as_slice(), f.as_slice());
                let other = f.to_layout(target);
                for i in 0..f.n_elements() {
                    prop_assert_eq!(other.element_row(i).unwrap(), f.element_row(i).unwrap());
                }
            }
        }

        #[test]
        fn f32_representable_values_survive_downcast(
            (n_local, rows) in field_strategy()
        ) {
            let rows: Vec<f64> = rows.iter().map(|&x| x as f32 as f64).collect();
            let f = DGField::from_rows(n_local, StorageLayout::ColMajor, &rows).unwrap();
            let back = f.cast::<f32>().cast::<f64>();
            prop_assert_eq!(back.as_slice(), f.as_slice());
            prop_assert_eq!(f.cast::<f32>().precision(), Precision::F32);
        }
    }
}
