//! The mEVP stress update and its variants.
//!
//! One update relaxes the three stress components of every element toward
//! the viscous-plastic stress evaluated at the Gauss points:
//!
//! ```text
//! h   = max(0, H_i PSI_A)            a = clamp(A_i PSI_A, 0, 1)
//! e** = E**_i PSI_S
//! P   = P* h exp(-C (1 - a))
//! D   = sqrt(dmin^2 + 5/4 (e11^2 + e22^2) + 3/2 e11 e22 + e12^2)
//! S11 <- (1 - 1/alpha) S11 + 1/alpha M_i^-1 (P/D (5/8 e11 + 3/8 e22) - P/2)
//! S12 <- (1 - 1/alpha) S12 + 1/alpha M_i^-1 (P/D e12 / 4)
//! S22 <- (1 - 1/alpha) S22 + 1/alpha M_i^-1 (P/D (5/8 e22 + 3/8 e11) - P/2)
//! ```
//!
//! `M_i^-1` is the `n_S x n_G` inverse local mass matrix composed with the
//! Jacobian-and-weight-scaled basis values ([`InverseMapTable`]).

mod maps;
mod pointwise;
mod reference;
mod relax;
mod synth;
mod tensorized;
mod update;

pub use maps::{element_inverse_map, precompute_inverse_maps, InverseMapTable, LocalAssembly};
pub use pointwise::{gauss_point_values, GaussPointValues, KernelConsts};
pub use reference::{relative_deviation, stress_update_reference, ReferenceStress};
pub use relax::mevp_relax;
pub use synth::{random_state, synth_fields, Scenario, VortexField};
pub use tensorized::{tensorized_stress_update, TensorStrategy};
pub use update::{gauss_values_for_element, stress_update};

use crate::basis::ngp_for_dofs;
use crate::error::{Error, Result};
use crate::fields::{DGField, Scalar, StorageLayout};

/// Supported advection-space sizes.
pub const ADVECTION_DOFS: [usize; 3] = [1, 3, 6];
/// Supported stress-space sizes.
pub const STRESS_DOFS: [usize; 2] = [3, 8];

/// Rheology and solver constants.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct VPParams {
    /// Ice strength scale P* in N/m^2.
    pub pstar: f64,
    /// Deformation-rate floor in 1/s.
    pub delta_min: f64,
    /// mEVP stabilization, > 1.
    pub alpha: f64,
    /// Concentration exponent in `exp(-C (1 - a))`.
    pub c: f64,
}

impl Default for VPParams {
    fn default() -> Self {
        VPParams {
            pstar: 27500.0,
            delta_min: 2e-9,
            alpha: 1500.0,
            c: 20.0,
        }
    }
}

impl VPParams {
    pub fn with_alpha(self, alpha: f64) -> Self {
        VPParams { alpha, ..self }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = self.pstar > 0.0 && self.delta_min > 0.0 && self.alpha > 1.0 && self.c > 0.0;
        if !ok {
            return Err(Error::InvalidArgument(format!(
                "need pstar > 0, delta_min > 0, alpha > 1, c > 0; got {self:?}"
            )));
        }
        Ok(())
    }
}

/// Where the per-element inverse maps come from.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum MapMode {
    Precomputed,
    /// Rebuilt from the element's four vertices inside the kernel.
    OnTheFly,
}

impl MapMode {
    pub fn name(self) -> &'static str {
        match self {
            MapMode::Precomputed => "pre",
            MapMode::OnTheFly => "fly",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ExecPolicy {
    Serial,
    /// Element blocks distributed over a pool of this many workers. Without
    /// the `parallel` feature the blocks run sequentially.
    Parallel(usize),
}

impl ExecPolicy {
    pub fn workers(self) -> usize {
        match self {
            ExecPolicy::Serial => 1,
            ExecPolicy::Parallel(n) => n,
        }
    }
}

/// Stress, strain, ice height and concentration coefficients for one mesh.
#[derive(Clone, Debug, PartialEq)]
pub struct StressState<T> {
    pub s11: DGField<T>,
    pub s12: DGField<T>,
    pub s22: DGField<T>,
    pub e11: DGField<T>,
    pub e12: DGField<T>,
    pub e22: DGField<T>,
    pub h: DGField<T>,
    pub a: DGField<T>,
}

/// `(n_elements, n_a, n_s)` of a validated state.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct StateDims {
    pub n_elements: usize,
    pub n_a: usize,
    pub n_s: usize,
}

impl<T: Scalar> StressState<T> {
    fn stress_fields(&self) -> [&DGField<T>; 6] {
        [
            &self.s11, &self.s12, &self.s22, &self.e11, &self.e12, &self.e22,
        ]
    }

    /// Checks shared element count and layout and the supported DOF pairs.
    pub fn validate(&self) -> Result<StateDims> {
        let n = self.s11.n_elements();
        let n_s = self.s11.n_local();
        let n_a = self.h.n_local();
        let layout = self.s11.layout();
        for f in self.stress_fields() {
            if f.n_elements() != n || f.n_local() != n_s {
                return Err(Error::DimensionMismatch(format!(
                    "stress/strain field is {} x {}, expected {n} x {n_s}",
                    f.n_elements(),
                    f.n_local()
                )));
            }
        }
        for f in [&self.h, &self.a] {
            if f.n_elements() != n || f.n_local() != n_a {
                return Err(Error::DimensionMismatch(format!(
                    "H/A field is {} x {}, expected {n} x {n_a}",
                    f.n_elements(),
                    f.n_local()
                )));
            }
        }
        if self
            .stress_fields()
            .into_iter()
            .chain([&self.h, &self.a])
            .any(|f| f.layout() != layout)
        {
            return Err(Error::DimensionMismatch(
                "all fields of a state must share one layout".into(),
            ));
        }
        if !ADVECTION_DOFS.contains(&n_a) {
            return Err(Error::Unsupported(format!(
                "advection space with {n_a} local DOFs (supported: 1, 3, 6)"
            )));
        }
        ngp_for_dofs(n_s)?;
        Ok(StateDims {
            n_elements: n,
            n_a,
            n_s,
        })
    }

    pub fn layout(&self) -> StorageLayout {
        self.s11.layout()
    }

    pub fn to_layout(&self, layout: StorageLayout) -> StressState<T> {
        self.map_fields(|f| f.to_layout(layout))
    }

    pub fn cast<U: Scalar>(&self) -> StressState<U> {
        self.map_fields(|f| f.cast())
    }

    fn map_fields<U>(&self, f: impl Fn(&DGField<T>) -> DGField<U>) -> StressState<U> {
        StressState {
            s11: f(&self.s11),
            s12: f(&self.s12),
            s22: f(&self.s22),
            e11: f(&self.e11),
            e12: f(&self.e12),
            e22: f(&self.e22),
            h: f(&self.h),
            a: f(&self.a),
        }
    }

    pub fn stresses(&self) -> [&DGField<T>; 3] {
        [&self.s11, &self.s12, &self.s22]
    }

    /// Sum of `|S|` over the three stress fields, in `f64`.
    pub fn checksum(&self) -> f64 {
        self.stresses().iter().map(|f| f.abs_sum()).sum()
    }

    /// Largest coefficient magnitude over the three stress fields.
    pub fn stress_max_abs(&self) -> f64 {
        self.stresses()
            .iter()
            .map(|f| f.max_abs())
            .fold(0.0, f64::max)
    }

    /// Largest coefficient change between two states' stress fields.
    pub fn stress_max_abs_diff(&self, other: &StressState<T>) -> Result<f64> {
        let mut worst = 0.0f64;
        for (a, b) in self.stresses().into_iter().zip(other.stresses()) {
            worst = worst.max(a.max_abs_diff(b)?);
        }
        Ok(worst)
    }
}
