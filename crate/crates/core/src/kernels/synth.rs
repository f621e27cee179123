//! Synthetic kernel inputs.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::basis::{gauss_rule, ngp_for_dofs, project_function, psi_table};
use crate::error::{Error, Result};
use crate::fields::{DGField, Scalar, StorageLayout};
use crate::mesh::Mesh;

use super::{StressState, ADVECTION_DOFS};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Scenario {
    /// `H = A = 1`, `E = 0`, `S = 0`.
    Uniform,
    /// Gaussian-enveloped rotating eddy; see [`VortexField`]. `S = 0`.
    SmoothVortex,
}

impl Scenario {
    pub fn name(self) -> &'static str {
        match self {
            Scenario::Uniform => "uniform",
            Scenario::SmoothVortex => "vortex",
        }
    }
}

/// Analytic fields of the vortex scenario, centered on the domain with
/// envelope `g(r) = exp(-r^2 / R^2)`, `R` a quarter of the shorter side:
///
/// * velocity `v = omega g (-(y - yc), x - xc)`
/// * strain rate: the symmetric gradient of `v`
/// * ice height `0.3 + 0.7 g`, concentration `0.8 + 0.2 g`
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct VortexField {
    pub center: [f64; 2],
    pub radius: f64,
    /// Angular velocity at the center, 1/s.
    pub omega: f64,
}

impl VortexField {
    pub fn for_mesh(mesh: &Mesh) -> Self {
        let (ex, ey) = mesh.extent();
        VortexField {
            center: [0.5 * ex, 0.5 * ey],
            radius: 0.25 * ex.min(ey),
            omega: 1e-5,
        }
    }

    fn envelope(&self, x: f64, y: f64) -> (f64, f64, f64) {
        let (dx, dy) = (x - self.center[0], y - self.center[1]);
        (dx, dy, (-(dx * dx + dy * dy) / (self.radius * self.radius)).exp())
    }

    pub fn velocity(&self, x: f64, y: f64) -> [f64; 2] {
        let (dx, dy, g) = self.envelope(x, y);
        [-self.omega * g * dy, self.omega * g * dx]
    }

    /// `[e11, e12, e22]` of the symmetric velocity gradient.
    pub fn strain(&self, x: f64, y: f64) -> [f64; 3] {
        let (dx, dy, g) = self.envelope(x, y);
        let k = self.omega * g / (self.radius * self.radius);
        [2.0 * k * dx * dy, k * (dy * dy - dx * dx), -2.0 * k * dx * dy]
    }

    pub fn height(&self, x: f64, y: f64) -> f64 {
        0.3 + 0.7 * self.envelope(x, y).2
    }

    pub fn concentration(&self, x: f64, y: f64) -> f64 {
        0.8 + 0.2 * self.envelope(x, y).2
    }
}

fn check_dofs(n_a: usize, n_s: usize) -> Result<()> {
    if !ADVECTION_DOFS.contains(&n_a) {
        return Err(Error::Unsupported(format!(
            "advection space with {n_a} local DOFs (supported: 1, 3, 6)"
        )));
    }
    ngp_for_dofs(n_s).map(|_| ())
}

fn leading<T: Scalar>(n: usize, n_local: usize, layout: StorageLayout, value: f64) -> Result<DGField<T>> {
    let mut f = DGField::zeros(n, n_local, layout)?;
    for i in 0..n {
        f.set(i, 0, T::lit(value));
    }
    Ok(f)
}

/// Builds the kernel inputs of `scenario` on `mesh`. Analytic fields are
/// L2-projected in `f64` with a 3-point rule (exact mass matrices for every
/// supported space) and then rounded to `T`.
pub fn synth_fields<T: Scalar>(
    mesh: &Mesh,
    n_a: usize,
    n_s: usize,
    scenario: Scenario,
    layout: StorageLayout,
) -> Result<StressState<T>> {
    check_dofs(n_a, n_s)?;
    let n = mesh.n_elements();
    let zeros = || DGField::<T>::zeros(n, n_s, layout);
    let (h, a, e11, e12, e22) = match scenario {
        Scenario::Uniform => (
            leading(n, n_a, layout, 1.0)?,
            leading(n, n_a, layout, 1.0)?,
            zeros()?,
            zeros()?,
            zeros()?,
        ),
        Scenario::SmoothVortex => {
            let v = VortexField::for_mesh(mesh);
            let rule = gauss_rule(3)?;
            let ta = psi_table(n_a, 3)?;
            let ts = psi_table(n_s, 3)?;
            let proj = |table, f: &dyn Fn(f64, f64) -> f64| -> Result<DGField<T>> {
                Ok(project_function(mesh, table, &rule, f)?
                    .to_layout(layout)
                    .cast())
            };
            (
                proj(&ta, &|x, y| v.height(x, y))?,
                proj(&ta, &|x, y| v.concentration(x, y))?,
                proj(&ts, &|x, y| v.strain(x, y)[0])?,
                proj(&ts, &|x, y| v.strain(x, y)[1])?,
                proj(&ts, &|x, y| v.strain(x, y)[2])?,
            )
        }
    };
    Ok(StressState {
        s11: zeros()?,
        s12: zeros()?,
        s22: zeros()?,
        e11,
        e12,
        e22,
        h,
        a,
    })
}

/// Seeded random state. Leading coefficients of `H` and `A` range past
/// `[0, 1]` so both clamps are exercised; stresses are O(1e4) N/m and
/// strain rates O(1e-5) 1/s.
pub fn random_state<T: Scalar>(
    n_elements: usize,
    n_a: usize,
    n_s: usize,
    layout: StorageLayout,
    seed: u64,
) -> Result<StressState<T>> {
    check_dofs(n_a, n_s)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut field = |n_local: usize, lead: (f64, f64), rest: f64| -> Result<DGField<T>> {
        let mut f = DGField::zeros(n_elements, n_local, layout)?;
        for i in 0..n_elements {
            f.set(i, 0, T::lit(rng.gen_range(lead.0..lead.1)));
            for k in 1..n_local {
                f.set(i, k, T::lit(rng.gen_range(-rest..rest)));
            }
        }
        Ok(f)
    };
    Ok(StressState {
        s11: field(n_s, (-1e4, 1e4), 1e4)?,
        s12: field(n_s, (-1e4, 1e4), 1e4)?,
        s22: field(n_s, (-1e4, 1e4), 1e4)?,
        e11: field(n_s, (-1e-5, 1e-5), 1e-5)?,
        e12: field(n_s, (-1e-5, 1e-5), 1e-5)?,
        e22: field(n_s, (-1e-5, 1e-5), 1e-5)?,
        h: field(n_a, (-0.2, 1.5), 0.5)?,
        a: field(n_a, (0.5, 1.2), 0.3)?,
    })
}
