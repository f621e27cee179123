//! Whole-field formulation of the stress update.
//!
//! The element loop disappears: Gauss-point values of all elements are
//! `(N x n) . (n x n_G)` products, pointwise work runs on `N x n_G` arrays,
//! and the per-element maps (an `N x n_S x n_G` tensor) are applied to the
//! right-hand sides either as `N` independent matrix-vector products or as a
//! broadcast multiply followed by a reduction over the Gauss-point axis.

use ndarray::linalg::general_mat_vec_mul;
use ndarray::{Array2, ArrayView2, ArrayView3, Axis, Zip};

use crate::basis::{ngp_for_dofs, psi_table, BasisTable};
use crate::error::{Error, Result};
use crate::fields::Scalar;

use super::maps::InverseMapTable;
use super::pointwise::{gauss_point_values, KernelConsts};
use super::update::check_maps;
use super::{StressState, VPParams};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum TensorStrategy {
    /// One `(n_S x n_G) . (n_G)` product per element.
    BatchedMatVec,
    /// `(N x n_S x n_G) * (N x 1 x n_G)`, then a sum over the last axis.
    MultiplyReduce,
}

impl TensorStrategy {
    pub fn name(self) -> &'static str {
        match self {
            TensorStrategy::BatchedMatVec => "tensor-bmm",
            TensorStrategy::MultiplyReduce => "tensor-sum",
        }
    }
}

fn table_array<T: Scalar>(table: &BasisTable) -> Array2<T> {
    Array2::from_shape_fn((table.n_local(), table.n_points()), |(j, g)| {
        T::lit(table.get(j, g))
    })
}

fn apply_maps<T: Scalar>(
    maps: &ArrayView3<'_, T>,
    rhs: &Array2<T>,
    strategy: TensorStrategy,
) -> Array2<T> {
    match strategy {
        TensorStrategy::BatchedMatVec => {
            let (n, n_s, _) = maps.dim();
            let mut out = Array2::<T>::zeros((n, n_s));
            Zip::from(out.rows_mut())
                .and(maps.outer_iter())
                .and(rhs.rows())
                .for_each(|mut o, m, r| general_mat_vec_mul(T::one(), &m, &r, T::zero(), &mut o));
            out
        }
        TensorStrategy::MultiplyReduce => {
            let rhs3 = rhs.view().insert_axis(Axis(1));
            (maps * &rhs3).sum_axis(Axis(2))
        }
    }
}

/// Stress update over the whole field at once; requires precomputed maps.
pub fn tensorized_stress_update<T: Scalar>(
    state: &mut StressState<T>,
    maps: &InverseMapTable<T>,
    params: &VPParams,
    strategy: TensorStrategy,
) -> Result<()> {
    params.validate()?;
    let dims = state.validate()?;
    let ngp = ngp_for_dofs(dims.n_s)?;
    check_maps(maps, dims, ngp)?;
    let ng = ngp * ngp;
    let psi_a = table_array::<T>(&psi_table(dims.n_a, ngp)?);
    let psi_s = table_array::<T>(&psi_table(dims.n_s, ngp)?);
    let k = KernelConsts::<T>::new(params);

    let hg = state.h.view().dot(&psi_a);
    let ag = state.a.view().dot(&psi_a);
    let e11 = state.e11.view().dot(&psi_s);
    let e12 = state.e12.view().dot(&psi_s);
    let e22 = state.e22.view().dot(&psi_s);

    let c58 = T::lit(5.0 / 8.0);
    let c38 = T::lit(3.0 / 8.0);
    let quarter = T::lit(0.25);
    let half = T::lit(0.5);
    let rhs = Zip::from(&hg)
        .and(&ag)
        .and(&e11)
        .and(&e12)
        .and(&e22)
        .map_collect(|&h, &a, &x11, &x12, &x22| {
            let v = gauss_point_values(&k, h, a, x11, x12, x22);
            [
                k.alpha_inv * (v.p_delta * (c58 * x11 + c38 * x22) - half * v.p),
                k.alpha_inv * (v.p_delta * quarter * x12),
                k.alpha_inv * (v.p_delta * (c58 * x22 + c38 * x11) - half * v.p),
            ]
        });
    let rhs11 = rhs.mapv(|r| r[0]);
    let rhs12 = rhs.mapv(|r| r[1]);
    let rhs22 = rhs.mapv(|r| r[2]);

    let maps3 = ArrayView3::from_shape((dims.n_elements, dims.n_s, ng), maps.as_slice())
        .map_err(|e| Error::DimensionMismatch(e.to_string()))?;
    for (field, rhs) in [
        (&mut state.s11, &rhs11),
        (&mut state.s12, &rhs12),
        (&mut state.s22, &rhs22),
    ] {
        let delta = apply_maps(&maps3, rhs, strategy);
        relax_into(field.view_mut(), delta.view(), k.fac);
    }
    Ok(())
}

fn relax_into<T: Scalar>(mut s: ndarray::ArrayViewMut2<'_, T>, delta: ArrayView2<'_, T>, fac: T) {
    Zip::from(&mut s)
        .and(&delta)
        .for_each(|s, &d| *s = fac * *s + d);
}
