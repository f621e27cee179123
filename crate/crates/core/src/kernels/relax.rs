use crate::error::{Error, Result};
use crate::fields::Scalar;
use crate::mesh::Mesh;

use super::{stress_update, ExecPolicy, InverseMapTable, MapMode, StressState, VPParams};

/// Applies `steps` stress updates with `E`, `H` and `A` held fixed and
/// returns the max-norm stress increment of every step.
///
/// The iteration is affine in `S` with linear part `(1 - 1/alpha) I`, so the
/// increments shrink by exactly that factor per step up to rounding.
#[allow(clippy::too_many_arguments)]
pub fn mevp_relax<T: Scalar>(
    state: &mut StressState<T>,
    maps: Option<&InverseMapTable<T>>,
    mesh: &Mesh,
    params: &VPParams,
    mode: MapMode,
    exec: ExecPolicy,
    steps: usize,
) -> Result<Vec<f64>> {
    if steps == 0 {
        return Err(Error::InvalidArgument("relaxation needs at least one step".into()));
    }
    let mut history = Vec::with_capacity(steps);
    for _ in 0..steps {
        let before = [state.s11.clone(), state.s12.clone(), state.s22.clone()];
        stress_update(state, maps, mesh, params, mode, exec)?;
        let mut inc = 0.0f64;
        for (old, new) in before.iter().zip(state.stresses()) {
            inc = inc.max(old.max_abs_diff(new)?);
        }
        history.push(inc);
    }
    Ok(history)
}
