//! Oracle suite: every execution variant against the reference update on
//! random states, plus bitwise agreement of the per-element variants.

use std::fmt;

use crate::basis::{gauss_rule, ngp_for_dofs, psi_table};
use crate::error::{Error, Result};
use crate::fields::{Precision, Scalar, StorageLayout};
use crate::kernels::{
    precompute_inverse_maps, random_state, relative_deviation, stress_update,
    stress_update_reference, tensorized_stress_update, ExecPolicy, MapMode, ReferenceStress,
    StressState, TensorStrategy, VPParams,
};
use crate::mesh::Mesh;

use super::{tolerance, KernelVariant, ProblemSize};

/// `(n_A, n_S)` pairs with a compiled kernel.
pub const KERNEL_PAIRS: [(usize, usize); 6] = [(1, 3), (3, 3), (6, 3), (1, 8), (3, 8), (6, 8)];

#[derive(Clone, Debug, PartialEq)]
pub struct VerifyOptions {
    pub sizes: Vec<usize>,
    pub pairs: Vec<(usize, usize)>,
    pub precisions: Vec<Precision>,
    pub workers: usize,
    pub distortion: f64,
    pub params: VPParams,
    pub oracle_cap: usize,
    pub seed: u64,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        VerifyOptions {
            sizes: vec![1024],
            pairs: KERNEL_PAIRS.to_vec(),
            precisions: vec![Precision::F64, Precision::F32],
            workers: 4,
            distortion: 0.2,
            params: VPParams::default(),
            oracle_cap: super::DEFAULT_ORACLE_CAP,
            seed: 0x5eed,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CheckKind {
    /// Relative deviation from the reference after one update.
    Oracle,
    /// Max abs difference from the serial row-major precomputed run.
    Bitwise,
}

#[derive(Clone, Debug, PartialEq)]
pub struct VerifyCheck {
    pub n_elements: usize,
    pub n_a: usize,
    pub n_s: usize,
    pub precision: Precision,
    pub layout: StorageLayout,
    pub map_mode: MapMode,
    pub kernel: KernelVariant,
    pub kind: CheckKind,
    pub value: f64,
    pub limit: f64,
}

impl VerifyCheck {
    pub fn passed(&self) -> bool {
        self.value <= self.limit
    }
}

impl fmt::Display for VerifyCheck {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let exec = match self.kernel {
            KernelVariant::PerElement(ExecPolicy::Parallel(w)) => format!("parallel({w})"),
            k => k.exec_name().to_string(),
        };
        let what = match self.kind {
            CheckKind::Oracle => "deviation",
            CheckKind::Bitwise => "bitwise",
        };
        write!(
            f,
            "{} N={} nA={} nS={} {} {} {} {}: {what} {:.3e} (limit {:.0e})",
            if self.passed() { "ok  " } else { "FAIL" },
            self.n_elements,
            self.n_a,
            self.n_s,
            self.precision.name(),
            self.layout.name(),
            self.map_mode.name(),
            exec,
            self.value,
            self.limit,
        )
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct VerifyReport {
    pub checks: Vec<VerifyCheck>,
}

impl VerifyReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(VerifyCheck::passed)
    }

    pub fn failures(&self) -> impl Iterator<Item = &VerifyCheck> {
        self.checks.iter().filter(|c| !c.passed())
    }
}

/// Every `(layout, map mode, kernel)` combination the harness can run.
pub fn all_variants(workers: usize) -> Vec<(StorageLayout, MapMode, KernelVariant)> {
    let mut out = Vec::new();
    for layout in [StorageLayout::RowMajor, StorageLayout::ColMajor] {
        for map in [MapMode::Precomputed, MapMode::OnTheFly] {
            for exec in [ExecPolicy::Serial, ExecPolicy::Parallel(workers)] {
                out.push((layout, map, KernelVariant::PerElement(exec)));
            }
        }
        for strategy in [TensorStrategy::BatchedMatVec, TensorStrategy::MultiplyReduce] {
            out.push((layout, MapMode::Precomputed, KernelVariant::Tensorized(strategy)));
        }
    }
    out
}

pub fn verify(opts: &VerifyOptions) -> Result<VerifyReport> {
    if opts.workers == 0 {
        return Err(Error::Config("verification needs at least one worker".into()));
    }
    let mut report = VerifyReport::default();
    for &n in &opts.sizes {
        if n > opts.oracle_cap {
            return Err(Error::Config(format!(
                "{n} elements exceeds the oracle cap of {}",
                opts.oracle_cap
            )));
        }
        let mesh = ProblemSize::Elements(n).mesh(opts.distortion)?;
        for &(n_a, n_s) in &opts.pairs {
            let state = random_state::<f64>(n, n_a, n_s, StorageLayout::RowMajor, opts.seed)?;
            let reference = stress_update_reference(&state, &mesh, &opts.params)?;
            for &p in &opts.precisions {
                let checks = match p {
                    Precision::F64 => verify_case::<f64>(&mesh, &state, &reference, opts)?,
                    Precision::F32 => verify_case::<f32>(&mesh, &state, &reference, opts)?,
                };
                report.checks.extend(checks);
            }
        }
    }
    Ok(report)
}

fn verify_case<T: Scalar>(
    mesh: &Mesh,
    state: &StressState<f64>,
    reference: &ReferenceStress,
    opts: &VerifyOptions,
) -> Result<Vec<VerifyCheck>> {
    let dims = state.validate()?;
    let ngp = ngp_for_dofs(dims.n_s)?;
    let maps =
        precompute_inverse_maps::<T>(mesh, dims.n_s, &gauss_rule(ngp)?, &psi_table(dims.n_s, ngp)?)?;
    let initial: StressState<T> = state.cast();
    let limit = tolerance(T::PRECISION);

    let mut checks = Vec::new();
    let mut baseline: Option<StressState<T>> = None;
    for (layout, map_mode, kernel) in all_variants(opts.workers) {
        let mut s = initial.to_layout(layout);
        match kernel {
            KernelVariant::PerElement(exec) => {
                let m = (map_mode == MapMode::Precomputed).then_some(&maps);
                stress_update(&mut s, m, mesh, &opts.params, map_mode, exec)?;
            }
            KernelVariant::Tensorized(strategy) => {
                tensorized_stress_update(&mut s, &maps, &opts.params, strategy)?;
            }
        }
        let check = |kind, value| VerifyCheck {
            n_elements: dims.n_elements,
            n_a: dims.n_a,
            n_s: dims.n_s,
            precision: T::PRECISION,
            layout,
            map_mode,
            kernel,
            kind,
            value,
            limit: match kind {
                CheckKind::Oracle => limit,
                CheckKind::Bitwise => 0.0,
            },
        };
        checks.push(check(CheckKind::Oracle, relative_deviation(&s, reference)?));
        if let KernelVariant::PerElement(_) = kernel {
            let s = s.to_layout(StorageLayout::RowMajor);
            match &baseline {
                None => baseline = Some(s),
                Some(b) => checks.push(check(CheckKind::Bitwise, s.stress_max_abs_diff(b)?)),
            }
        }
    }
    Ok(checks)
}
