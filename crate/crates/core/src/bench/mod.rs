//! Benchmark harness: variant comparison, problem-size scaling and the
//! oracle verification suite, with CSV output.
//!
//! Only the stress-update loop is timed. Input synthesis, map precomputation,
//! the warmup update and the oracle comparison all happen outside the timer.

mod csv_out;
mod verify;

pub use csv_out::{emit_csv, write_csv, CSV_HEADER};
pub use verify::{
    all_variants, verify, CheckKind, VerifyCheck, VerifyOptions, VerifyReport, KERNEL_PAIRS,
};

use std::hint::black_box;
use std::time::Instant;

use crate::basis::{gauss_rule, ngp_for_dofs, psi_table};
use crate::error::{Error, Result};
use crate::fields::{Precision, Scalar, StorageLayout};
use crate::kernels::{
    precompute_inverse_maps, relative_deviation, stress_update, stress_update_reference,
    synth_fields, tensorized_stress_update, ExecPolicy, InverseMapTable, MapMode, ReferenceStress,
    Scenario, StressState, TensorStrategy, VPParams,
};
use crate::mesh::{elements_per_side, Mesh};

/// Side of the square benchmark domain, meters.
pub const DOMAIN_EXTENT_M: f64 = 512e3;
/// Stress updates in one simulated hour.
pub const DEFAULT_ITERATIONS: usize = 3000;
/// Largest element count for which runs are checked against the reference.
pub const DEFAULT_ORACLE_CAP: usize = 100_000;
/// Resolutions of the default scaling sweep, km.
pub const DEFAULT_SWEEP_KM: [f64; 5] = [4.0, 2.0, 1.0, 0.5, 0.25];
/// Allowed single-update deviation from the reference, relative max-norm.
pub const TOLERANCE_F64: f64 = 1e-12;
pub const TOLERANCE_F32: f64 = 1e-4;

pub fn tolerance(precision: Precision) -> f64 {
    match precision {
        Precision::F64 => TOLERANCE_F64,
        Precision::F32 => TOLERANCE_F32,
    }
}

/// How the update is executed: the per-element kernel under an execution
/// policy, or the whole-field formulation.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum KernelVariant {
    PerElement(ExecPolicy),
    Tensorized(TensorStrategy),
}

impl KernelVariant {
    /// Value of the `exec` CSV column.
    pub fn exec_name(self) -> &'static str {
        match self {
            KernelVariant::PerElement(ExecPolicy::Serial) => "serial",
            KernelVariant::PerElement(ExecPolicy::Parallel(_)) => "parallel",
            KernelVariant::Tensorized(s) => s.name(),
        }
    }

    pub fn workers(self) -> usize {
        match self {
            KernelVariant::PerElement(exec) => exec.workers(),
            KernelVariant::Tensorized(_) => 1,
        }
    }
}

/// Number of elements of a benchmark problem.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ProblemSize {
    /// Square cells of this size on the 512 km domain.
    ResolutionKm(f64),
    Elements(usize),
}

impl ProblemSize {
    /// `(nx, ny, extent_x, extent_y)` of the mesh. An element count is
    /// factored as `nx * ny` with `nx` the smallest divisor not below its
    /// square root; cells stay square with `extent_x` = 512 km.
    pub fn grid(self) -> Result<(usize, usize, f64, f64)> {
        match self {
            ProblemSize::ResolutionKm(km) => {
                let n = elements_per_side(DOMAIN_EXTENT_M, km)?;
                Ok((n, n, DOMAIN_EXTENT_M, DOMAIN_EXTENT_M))
            }
            ProblemSize::Elements(0) => Err(Error::InvalidArgument("zero elements".into())),
            ProblemSize::Elements(n) => {
                let root = (n as f64).sqrt().ceil() as usize;
                let nx = (root..=n).find(|d| n % d == 0).unwrap_or(n);
                let ny = n / nx;
                let h = DOMAIN_EXTENT_M / nx as f64;
                Ok((nx, ny, DOMAIN_EXTENT_M, h * ny as f64))
            }
        }
    }

    pub fn n_elements(self) -> Result<usize> {
        let (nx, ny, _, _) = self.grid()?;
        Ok(nx * ny)
    }

    pub fn mesh(self, distortion: f64) -> Result<Mesh> {
        let (nx, ny, ex, ey) = self.grid()?;
        Mesh::structured(nx, ny, ex, ey, distortion)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct BenchConfig {
    pub size: ProblemSize,
    pub dg_stress: usize,
    pub dg_advection: usize,
    pub layout: StorageLayout,
    pub map_mode: MapMode,
    pub kernel: KernelVariant,
    pub precision: Precision,
    pub iterations: usize,
    pub scenario: Scenario,
    pub distortion: f64,
    pub params: VPParams,
    /// Runs above this many elements skip the reference comparison.
    pub oracle_cap: usize,
}

impl Default for BenchConfig {
    fn default() -> Self {
        BenchConfig {
            size: ProblemSize::ResolutionKm(4.0),
            dg_stress: 8,
            dg_advection: 6,
            layout: StorageLayout::RowMajor,
            map_mode: MapMode::Precomputed,
            kernel: KernelVariant::PerElement(ExecPolicy::Serial),
            precision: Precision::F64,
            iterations: DEFAULT_ITERATIONS,
            scenario: Scenario::SmoothVortex,
            distortion: 0.1,
            params: VPParams::default(),
            oracle_cap: DEFAULT_ORACLE_CAP,
        }
    }
}

impl BenchConfig {
    pub fn validate(&self) -> Result<()> {
        if self.iterations == 0 {
            return Err(Error::Config("iterations must be at least 1".into()));
        }
        if let (KernelVariant::Tensorized(_), MapMode::OnTheFly) = (self.kernel, self.map_mode) {
            return Err(Error::Config(
                "the tensorized formulation needs precomputed maps, not on-the-fly".into(),
            ));
        }
        if self.kernel == KernelVariant::PerElement(ExecPolicy::Parallel(0)) {
            return Err(Error::Config("parallel execution needs at least one worker".into()));
        }
        if !crate::kernels::ADVECTION_DOFS.contains(&self.dg_advection) {
            return Err(Error::Config(format!(
                "--dg-advection {} (supported: 1, 3, 6)",
                self.dg_advection
            )));
        }
        ngp_for_dofs(self.dg_stress)
            .map_err(|_| Error::Config(format!("--dg-stress {} (supported: 3, 8)", self.dg_stress)))?;
        self.params.validate()?;
        self.size.n_elements()?;
        Ok(())
    }

    /// Copy of `self` with one axis changed.
    pub fn with_axis(&self, axis: VariantAxis) -> BenchConfig {
        let mut c = self.clone();
        match axis {
            VariantAxis::Layout(l) => c.layout = l,
            VariantAxis::MapMode(m) => c.map_mode = m,
            VariantAxis::Kernel(k) => c.kernel = k,
            VariantAxis::Precision(p) => c.precision = p,
        }
        c
    }
}

/// One experiment axis and the value a variant sets it to.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum VariantAxis {
    Layout(StorageLayout),
    MapMode(MapMode),
    Kernel(KernelVariant),
    Precision(Precision),
}

/// Variants that flip one axis of `baseline` each, as in an ablation table.
/// `workers` is the pool size used when the baseline runs serially.
pub fn standard_variants(baseline: &BenchConfig, workers: usize) -> Vec<VariantAxis> {
    let other_layout = match baseline.layout {
        StorageLayout::RowMajor => StorageLayout::ColMajor,
        StorageLayout::ColMajor => StorageLayout::RowMajor,
    };
    let other_map = match baseline.map_mode {
        MapMode::Precomputed => MapMode::OnTheFly,
        MapMode::OnTheFly => MapMode::Precomputed,
    };
    let other_exec = match baseline.kernel {
        KernelVariant::PerElement(ExecPolicy::Serial) => ExecPolicy::Parallel(workers.max(1)),
        _ => ExecPolicy::Serial,
    };
    let other_precision = match baseline.precision {
        Precision::F64 => Precision::F32,
        Precision::F32 => Precision::F64,
    };
    vec![
        VariantAxis::Layout(other_layout),
        VariantAxis::MapMode(other_map),
        VariantAxis::Kernel(KernelVariant::PerElement(other_exec)),
        VariantAxis::Precision(other_precision),
        VariantAxis::Kernel(KernelVariant::Tensorized(TensorStrategy::BatchedMatVec)),
        VariantAxis::Kernel(KernelVariant::Tensorized(TensorStrategy::MultiplyReduce)),
    ]
}

#[derive(Clone, Debug, PartialEq)]
pub struct BenchRecord {
    pub scenario: Scenario,
    pub n_elements: usize,
    pub dg_stress: usize,
    pub dg_advection: usize,
    pub layout: StorageLayout,
    pub map_mode: MapMode,
    pub kernel: KernelVariant,
    pub precision: Precision,
    pub iterations: usize,
    pub wall_seconds: f64,
    pub elements_per_second: f64,
    /// Single-update relative deviation from the reference, when checked.
    pub max_deviation: Option<f64>,
    /// Sum of `|S|` over the final stress fields, in `f64`.
    pub checksum: f64,
}

impl BenchRecord {
    /// Deviation within the precision's tolerance (unchecked runs pass).
    pub fn within_tolerance(&self) -> bool {
        self.max_deviation
            .is_none_or(|d| d <= tolerance(self.precision))
    }
}

/// Mesh, `f64` inputs and (optionally) the reference result shared by a set
/// of runs, so every variant starts from identical data.
pub struct Problem {
    pub mesh: Mesh,
    pub state: StressState<f64>,
    pub reference: Option<ReferenceStress>,
}

impl Problem {
    pub fn build(config: &BenchConfig) -> Result<Problem> {
        let mesh = config.size.mesh(config.distortion)?;
        let state = synth_fields::<f64>(
            &mesh,
            config.dg_advection,
            config.dg_stress,
            config.scenario,
            StorageLayout::RowMajor,
        )?;
        let reference = if mesh.n_elements() <= config.oracle_cap {
            Some(stress_update_reference(&state, &mesh, &config.params)?)
        } else {
            None
        };
        Ok(Problem {
            mesh,
            state,
            reference,
        })
    }
}

/// Runs `config` on a prepared problem.
pub fn run_on(problem: &Problem, config: &BenchConfig) -> Result<BenchRecord> {
    config.validate()?;
    let dims = problem.state.validate()?;
    if dims.n_s != config.dg_stress || dims.n_a != config.dg_advection {
        return Err(Error::Config("problem was built for a different DOF configuration".into()));
    }
    match config.precision {
        Precision::F64 => run_typed::<f64>(problem, config),
        Precision::F32 => run_typed::<f32>(problem, config),
    }
}

struct Runner<'a, T> {
    mesh: &'a Mesh,
    maps: Option<InverseMapTable<T>>,
    config: &'a BenchConfig,
}

impl<T: Scalar> Runner<'_, T> {
    fn step(&self, state: &mut StressState<T>) -> Result<()> {
        match self.config.kernel {
            KernelVariant::PerElement(exec) => stress_update(
                state,
                self.maps.as_ref(),
                self.mesh,
                &self.config.params,
                self.config.map_mode,
                exec,
            ),
            KernelVariant::Tensorized(strategy) => tensorized_stress_update(
                state,
                self.maps.as_ref().expect("validated: tensorized runs precompute maps"),
                &self.config.params,
                strategy,
            ),
        }
    }
}

fn run_typed<T: Scalar>(problem: &Problem, config: &BenchConfig) -> Result<BenchRecord> {
    let mesh = &problem.mesh;
    let initial: StressState<T> = problem.state.to_layout(config.layout).cast();
    let maps = match config.map_mode {
        MapMode::Precomputed => {
            let ngp = ngp_for_dofs(config.dg_stress)?;
            Some(precompute_inverse_maps::<T>(
                mesh,
                config.dg_stress,
                &gauss_rule(ngp)?,
                &psi_table(config.dg_stress, ngp)?,
            )?)
        }
        MapMode::OnTheFly => None,
    };
    let runner = Runner { mesh, maps, config };

    // warmup, and the single update compared against the reference
    let mut probe = initial.clone();
    runner.step(&mut probe)?;
    let max_deviation = match &problem.reference {
        Some(r) => Some(relative_deviation(&probe, r)?),
        None => None,
    };
    drop(probe);

    let mut state = initial;
    let start = Instant::now();
    for _ in 0..config.iterations {
        runner.step(black_box(&mut state))?;
    }
    let wall_seconds = start.elapsed().as_secs_f64();

    let n = mesh.n_elements();
    Ok(BenchRecord {
        scenario: config.scenario,
        n_elements: n,
        dg_stress: config.dg_stress,
        dg_advection: config.dg_advection,
        layout: config.layout,
        map_mode: config.map_mode,
        kernel: config.kernel,
        precision: config.precision,
        iterations: config.iterations,
        wall_seconds,
        elements_per_second: (n * config.iterations) as f64 / wall_seconds,
        max_deviation,
        checksum: state.checksum(),
    })
}

/// Runs the baseline and then each single-axis variant on the same inputs.
pub fn run_variant_comparison(
    baseline: &BenchConfig,
    variants: &[VariantAxis],
) -> Result<Vec<BenchRecord>> {
    let configs: Vec<BenchConfig> = std::iter::once(baseline.clone())
        .chain(variants.iter().map(|&v| baseline.with_axis(v)))
        .collect();
    for c in &configs {
        c.validate()?;
    }
    let problem = Problem::build(baseline)?;
    configs.iter().map(|c| run_on(&problem, c)).collect()
}

/// Records of a scaling sweep plus the sizes that could not be run.
#[derive(Debug, Default)]
pub struct ScalingReport {
    pub records: Vec<BenchRecord>,
    pub failures: Vec<(ProblemSize, String)>,
}

/// Runs `config` at each size; a failing size is reported and skipped.
pub fn run_scaling(sizes: &[ProblemSize], config: &BenchConfig) -> Result<ScalingReport> {
    config.validate()?;
    let mut report = ScalingReport::default();
    for &size in sizes {
        let c = BenchConfig {
            size,
            ..config.clone()
        };
        match Problem::build(&c).and_then(|p| run_on(&p, &c)) {
            Ok(r) => report.records.push(r),
            Err(e) => report.failures.push((size, e.to_string())),
        }
    }
    Ok(report)
}

pub fn default_sweep() -> Vec<ProblemSize> {
    DEFAULT_SWEEP_KM
        .iter()
        .map(|&km| ProblemSize::ResolutionKm(km))
        .collect()
}
