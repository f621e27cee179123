use crate::basis::{ngp_for_dofs, psi_table, BasisTable};
use crate::error::{Error, Result};
use crate::fields::{DGField, ElementBlockMut, Scalar};
use crate::mesh::Mesh;

use super::maps::{InverseMapTable, LocalAssembly};
use super::pointwise::{gauss_point_values, GaussPointValues, KernelConsts};
use super::{ExecPolicy, MapMode, StateDims, StressState, VPParams};

enum MapSource<'a, T> {
    Table(&'a InverseMapTable<T>),
    Assemble(LocalAssembly, &'a Mesh),
}

struct Inputs<'a, T> {
    e11: &'a DGField<T>,
    e12: &'a DGField<T>,
    e22: &'a DGField<T>,
    h: &'a DGField<T>,
    a: &'a DGField<T>,
}

/// One mEVP relaxation step, updating `S11`, `S12` and `S22` in place.
///
/// `maps` is required for [`MapMode::Precomputed`]; with
/// [`MapMode::OnTheFly`] each element's map is rebuilt from `mesh` by the
/// same routine that fills the table, so both modes give identical bits.
/// Every element is processed by the same straight-line code with a fixed
/// summation order, so the result does not depend on `exec` or the layout.
pub fn stress_update<T: Scalar>(
    state: &mut StressState<T>,
    maps: Option<&InverseMapTable<T>>,
    mesh: &Mesh,
    params: &VPParams,
    mode: MapMode,
    exec: ExecPolicy,
) -> Result<()> {
    params.validate()?;
    let dims = state.validate()?;
    check_mesh(mesh, dims)?;
    if exec == ExecPolicy::Parallel(0) {
        return Err(Error::InvalidArgument("parallel execution needs at least one worker".into()));
    }
    let ngp = ngp_for_dofs(dims.n_s)?;
    let source = match mode {
        MapMode::Precomputed => {
            let table = maps.ok_or_else(|| {
                Error::Config("precomputed map mode requires an inverse map table".into())
            })?;
            check_maps(table, dims, ngp)?;
            MapSource::Table(table)
        }
        MapMode::OnTheFly => {
            let rule = crate::basis::gauss_rule(ngp)?;
            let table = psi_table(dims.n_s, ngp)?;
            MapSource::Assemble(LocalAssembly::new(dims.n_s, &rule, &table)?, mesh)
        }
    };
    match (dims.n_a, dims.n_s) {
        (1, 3) => run::<T, 1, 3, 4>(state, &source, params, exec),
        (3, 3) => run::<T, 3, 3, 4>(state, &source, params, exec),
        (6, 3) => run::<T, 6, 3, 4>(state, &source, params, exec),
        (1, 8) => run::<T, 1, 8, 9>(state, &source, params, exec),
        (3, 8) => run::<T, 3, 8, 9>(state, &source, params, exec),
        (6, 8) => run::<T, 6, 8, 9>(state, &source, params, exec),
        (n_a, n_s) => Err(Error::Unsupported(format!("(n_A, n_S) = ({n_a}, {n_s})"))),
    }
}

pub(crate) fn check_mesh(mesh: &Mesh, dims: StateDims) -> Result<()> {
    if mesh.n_elements() != dims.n_elements {
        return Err(Error::DimensionMismatch(format!(
            "mesh has {} elements, fields have {}",
            mesh.n_elements(),
            dims.n_elements
        )));
    }
    Ok(())
}

pub(crate) fn check_maps<T: Scalar>(maps: &InverseMapTable<T>, dims: StateDims, ngp: usize) -> Result<()> {
    if maps.n_elements() != dims.n_elements || maps.n_s() != dims.n_s || maps.n_g() != ngp * ngp {
        return Err(Error::DimensionMismatch(format!(
            "map table is {} x {} x {}, state needs {} x {} x {}",
            maps.n_elements(),
            maps.n_s(),
            maps.n_g(),
            dims.n_elements,
            dims.n_s,
            ngp * ngp
        )));
    }
    Ok(())
}

fn table_array<T: Scalar, const N: usize, const NG: usize>(table: &BasisTable) -> [[T; NG]; N] {
    let mut out = [[T::zero(); NG]; N];
    for (j, row) in out.iter_mut().enumerate() {
        for (g, v) in row.iter_mut().enumerate() {
            *v = T::lit(table.get(j, g));
        }
    }
    out
}

fn block_len(n: usize) -> usize {
    (n / 64).clamp(64, 2048)
}

fn run<T: Scalar, const NA: usize, const NS: usize, const NG: usize>(
    state: &mut StressState<T>,
    source: &MapSource<'_, T>,
    params: &VPParams,
    exec: ExecPolicy,
) -> Result<()> {
    let ngp = ngp_for_dofs(NS)?;
    let psi_a = table_array::<T, NA, NG>(&psi_table(NA, ngp)?);
    let psi_s = table_array::<T, NS, NG>(&psi_table(NS, ngp)?);
    let k = KernelConsts::<T>::new(params);

    let StressState {
        s11,
        s12,
        s22,
        e11,
        e12,
        e22,
        h,
        a,
    } = state;
    let inputs = Inputs {
        e11: &*e11,
        e12: &*e12,
        e22: &*e22,
        h: &*h,
        a: &*a,
    };
    let len = block_len(s11.n_elements());
    let blocks: Vec<[ElementBlockMut<'_, T>; 3]> = s11
        .blocks_mut(len)
        .into_iter()
        .zip(s12.blocks_mut(len))
        .zip(s22.blocks_mut(len))
        .map(|((x, y), z)| [x, y, z])
        .collect();

    let body = |mut blk: [ElementBlockMut<'_, T>; 3]| -> Result<()> {
        let mut s = [[T::zero(); NS]; 3];
        for local in 0..blk[0].len() {
            let i = blk[0].start() + local;
            let map = load_map::<T, NS, NG>(source, i)?;
            for (c, b) in blk.iter().enumerate() {
                b.read_row(local, &mut s[c]);
            }
            let new = update_element::<T, NA, NS, NG>(&k, &inputs, i, &psi_a, &psi_s, &map, &s);
            for (c, b) in blk.iter_mut().enumerate() {
                b.write_row(local, &new[c]);
            }
        }
        Ok(())
    };
    for_each_block(blocks, exec, body)
}

#[inline(always)]
fn load_map<T: Scalar, const NS: usize, const NG: usize>(
    source: &MapSource<'_, T>,
    i: usize,
) -> Result<[[T; NG]; NS]> {
    let mut map = [[T::zero(); NG]; NS];
    match source {
        MapSource::Table(table) => {
            let m = table.matrix(i);
            for (j, row) in map.iter_mut().enumerate() {
                row.copy_from_slice(&m[j * NG..(j + 1) * NG]);
            }
        }
        MapSource::Assemble(asm, mesh) => {
            let mut local = [[0.0f64; NG]; NS];
            asm.element_map_into(&mesh.quad(i), i, local.as_flattened_mut())?;
            for (row, lrow) in map.iter_mut().zip(&local) {
                for (v, &l) in row.iter_mut().zip(lrow) {
                    *v = T::lit(l);
                }
            }
        }
    }
    Ok(map)
}

#[inline(always)]
fn eval_row<T: Scalar, const N: usize, const NG: usize>(
    field: &DGField<T>,
    i: usize,
    psi: &[[T; NG]; N],
) -> [T; NG] {
    let mut row = [T::zero(); N];
    field.read_row(i, &mut row);
    let mut out = [T::zero(); NG];
    for (j, &c) in row.iter().enumerate() {
        for g in 0..NG {
            out[g] = out[g] + c * psi[j][g];
        }
    }
    out
}

#[inline(always)]
fn update_element<T: Scalar, const NA: usize, const NS: usize, const NG: usize>(
    k: &KernelConsts<T>,
    inp: &Inputs<'_, T>,
    i: usize,
    psi_a: &[[T; NG]; NA],
    psi_s: &[[T; NG]; NS],
    map: &[[T; NG]; NS],
    s: &[[T; NS]; 3],
) -> [[T; NS]; 3] {
    let hg = eval_row(inp.h, i, psi_a);
    let ag = eval_row(inp.a, i, psi_a);
    let e11 = eval_row(inp.e11, i, psi_s);
    let e12 = eval_row(inp.e12, i, psi_s);
    let e22 = eval_row(inp.e22, i, psi_s);

    let c58 = T::lit(5.0 / 8.0);
    let c38 = T::lit(3.0 / 8.0);
    let quarter = T::lit(0.25);
    let half = T::lit(0.5);
    let mut rhs = [[T::zero(); NG]; 3];
    for g in 0..NG {
        let v = gauss_point_values(k, hg[g], ag[g], e11[g], e12[g], e22[g]);
        rhs[0][g] = k.alpha_inv * (v.p_delta * (c58 * e11[g] + c38 * e22[g]) - half * v.p);
        rhs[1][g] = k.alpha_inv * (v.p_delta * quarter * e12[g]);
        rhs[2][g] = k.alpha_inv * (v.p_delta * (c58 * e22[g] + c38 * e11[g]) - half * v.p);
    }

    let mut out = [[T::zero(); NS]; 3];
    for c in 0..3 {
        for j in 0..NS {
            let mut acc = T::zero();
            for g in 0..NG {
                acc = acc + map[j][g] * rhs[c][g];
            }
            out[c][j] = k.fac * s[c][j] + acc;
        }
    }
    out
}

fn for_each_block<B, F>(blocks: Vec<B>, exec: ExecPolicy, body: F) -> Result<()>
where
    B: Send,
    F: Fn(B) -> Result<()> + Sync + Send,
{
    match exec {
        ExecPolicy::Serial => blocks.into_iter().try_for_each(body),
        #[cfg(feature = "parallel")]
        ExecPolicy::Parallel(workers) => {
            use rayon::prelude::*;
            pool::get(workers)?.install(|| blocks.into_par_iter().try_for_each(&body))
        }
        #[cfg(not(feature = "parallel"))]
        ExecPolicy::Parallel(_) => blocks.into_iter().try_for_each(body),
    }
}

#[cfg(feature = "parallel")]
mod pool {
    use std::collections::HashMap;
    use std::sync::{Arc, Mutex, OnceLock};

    use rayon::{ThreadPool, ThreadPoolBuilder};

    use crate::error::{Error, Result};

    /// Pools are built once per worker count and reused across calls.
    pub(super) fn get(workers: usize) -> Result<Arc<ThreadPool>> {
        static POOLS: OnceLock<Mutex<HashMap<usize, Arc<ThreadPool>>>> = OnceLock::new();
        let mut pools = POOLS
            .get_or_init(Default::default)
            .lock()
            .unwrap_or_else(|e| e.into_inner());
        if let Some(p) = pools.get(&workers) {
            return Ok(p.clone());
        }
        let pool = ThreadPoolBuilder::new()
            .num_threads(workers)
            .thread_name(|i| format!("mevp-worker-{i}"))
            .build()
            .map_err(|e| Error::InvalidArgument(format!("cannot start {workers} workers: {e}")))?;
        let pool = Arc::new(pool);
        pools.insert(workers, pool.clone());
        Ok(pool)
    }
}

/// Gauss-point intermediates of element `i`, computed with the kernel's
/// evaluation order. Used to inspect clipping and the deformation floor.
pub fn gauss_values_for_element<T: Scalar>(
    state: &StressState<T>,
    params: &VPParams,
    i: usize,
) -> Result<Vec<GaussPointValues<T>>> {
    let dims = state.validate()?;
    if i >= dims.n_elements {
        return Err(Error::IndexOutOfRange {
            index: i,
            len: dims.n_elements,
        });
    }
    let ngp = ngp_for_dofs(dims.n_s)?;
    let psi_a = psi_table(dims.n_a, ngp)?;
    let psi_s = psi_table(dims.n_s, ngp)?;
    let k = KernelConsts::<T>::new(params);
    let ng = ngp * ngp;
    let eval = |field: &DGField<T>, table: &BasisTable| -> Vec<T> {
        let mut out = vec![T::zero(); ng];
        for j in 0..table.n_local() {
            let c = field.get(i, j);
            for (g, o) in out.iter_mut().enumerate() {
                *o = *o + c * T::lit(table.get(j, g));
            }
        }
        out
    };
    let (hg, ag) = (eval(&state.h, &psi_a), eval(&state.a, &psi_a));
    let (e11, e12, e22) = (
        eval(&state.e11, &psi_s),
        eval(&state.e12, &psi_s),
        eval(&state.e22, &psi_s),
    );
    Ok((0..ng)
        .map(|g| gauss_point_values(&k, hg[g], ag[g], e11[g], e12[g], e22[g]))
        .collect())
}
