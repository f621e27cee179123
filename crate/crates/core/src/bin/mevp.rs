use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use mevp::basis::{gauss_rule, ngp_for_dofs, psi_table, BasisTable};
use mevp::bench::{
    default_sweep, run_scaling, run_variant_comparison, standard_variants, verify, write_csv,
    BenchConfig, BenchRecord, KernelVariant, ProblemSize, VerifyOptions, DEFAULT_ITERATIONS,
    DEFAULT_ORACLE_CAP,
};
use mevp::kernels::{Scenario, ADVECTION_DOFS};
use mevp::{Error, ExecPolicy, MapMode, Precision, StorageLayout};

#[derive(Parser)]
#[command(name = "mevp", version, about = "mEVP stress-update kernel benchmarks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Timed benchmark runs
    Bench {
        #[command(subcommand)]
        kind: BenchKind,
    },
    /// Check every execution variant against the reference update
    Verify(CommonArgs),
    /// Print basis tables and quadrature rules
    Tables(CommonArgs),
}

#[derive(Subcommand)]
enum BenchKind {
    /// One run per problem size
    Scale(CommonArgs),
    /// Baseline plus one run per single-axis modification
    Variants(CommonArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum LayoutArg {
    Row,
    Col,
}

#[derive(Clone, Copy, ValueEnum)]
enum MapArg {
    Pre,
    Fly,
}

#[derive(Clone, Copy, ValueEnum)]
enum PrecisionArg {
    F64,
    F32,
}

#[derive(Clone, Copy, ValueEnum)]
enum ScenarioArg {
    Uniform,
    Vortex,
}

#[derive(Args)]
struct CommonArgs {
    /// Cell sizes in km on the 512 km domain (comma separated)
    #[arg(long, value_delimiter = ',', conflicts_with = "elements")]
    resolution_km: Vec<f64>,
    /// Element counts (comma separated)
    #[arg(long, value_delimiter = ',')]
    elements: Vec<usize>,
    /// Local DOFs of the stress and strain fields (3 or 8)
    #[arg(long)]
    dg_stress: Option<usize>,
    /// Local DOFs of ice height and concentration (1, 3 or 6)
    #[arg(long)]
    dg_advection: Option<usize>,
    #[arg(long, value_enum, default_value = "row")]
    layout: LayoutArg,
    #[arg(long, value_enum, default_value = "pre")]
    map: MapArg,
    /// Worker threads; serial execution when omitted
    #[arg(long)]
    threads: Option<usize>,
    #[arg(long, value_enum)]
    precision: Option<PrecisionArg>,
    #[arg(long, default_value_t = DEFAULT_ITERATIONS)]
    iterations: usize,
    #[arg(long, value_enum, default_value = "vortex")]
    scenario: ScenarioArg,
    /// Interior vertex displacement as a fraction of the cell size
    #[arg(long, default_value_t = 0.1)]
    distortion: f64,
    /// Largest element count checked against the reference
    #[arg(long, default_value_t = DEFAULT_ORACLE_CAP)]
    oracle_cap: usize,
    /// CSV output file; stdout when omitted
    #[arg(long)]
    out: Option<PathBuf>,
}

impl CommonArgs {
    fn sizes(&self) -> Vec<ProblemSize> {
        if !self.elements.is_empty() {
            self.elements.iter().map(|&n| ProblemSize::Elements(n)).collect()
        } else {
            self.resolution_km.iter().map(|&km| ProblemSize::ResolutionKm(km)).collect()
        }
    }

    fn precision(&self) -> Precision {
        match self.precision {
            Some(PrecisionArg::F32) => Precision::F32,
            _ => Precision::F64,
        }
    }

    fn config(&self, size: ProblemSize) -> BenchConfig {
        BenchConfig {
            size,
            dg_stress: self.dg_stress.unwrap_or(8),
            dg_advection: self.dg_advection.unwrap_or(6),
            layout: match self.layout {
                LayoutArg::Row => StorageLayout::RowMajor,
                LayoutArg::Col => StorageLayout::ColMajor,
            },
            map_mode: match self.map {
                MapArg::Pre => MapMode::Precomputed,
                MapArg::Fly => MapMode::OnTheFly,
            },
            kernel: KernelVariant::PerElement(match self.threads {
                Some(n) => ExecPolicy::Parallel(n),
                None => ExecPolicy::Serial,
            }),
            precision: self.precision(),
            iterations: self.iterations,
            scenario: match self.scenario {
                ScenarioArg::Uniform => Scenario::Uniform,
                ScenarioArg::Vortex => Scenario::SmoothVortex,
            },
            distortion: self.distortion,
            oracle_cap: self.oracle_cap,
            ..BenchConfig::default()
        }
    }
}

enum Failure {
    Usage(String),
    Runtime(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Config(_) | Error::InvalidArgument(_) | Error::Unsupported(_) => {
                Failure::Usage(e.to_string())
            }
            _ => Failure::Runtime(e.to_string()),
        }
    }
}

fn output(records: &[BenchRecord], out: &Option<PathBuf>) -> Result<(), Failure> {
    match out {
        Some(path) => mevp::bench::emit_csv(records, path)?,
        None => write_csv(records, std::io::stdout().lock())?,
    }
    Ok(())
}

fn report_deviations(records: &[BenchRecord]) -> Result<(), Failure> {
    let bad: Vec<_> = records.iter().filter(|r| !r.within_tolerance()).collect();
    if bad.is_empty() {
        return Ok(());
    }
    for r in &bad {
        eprintln!(
            "deviation {:e} exceeds tolerance: N={} {} {} {} {}",
            r.max_deviation.unwrap_or(f64::NAN),
            r.n_elements,
            r.layout.name(),
            r.map_mode.name(),
            r.kernel.exec_name(),
            r.precision.name()
        );
    }
    Err(Failure::Runtime(format!("{} run(s) deviate from the reference", bad.len())))
}

fn bench_scale(args: &CommonArgs) -> Result<(), Failure> {
    let mut sizes = args.sizes();
    if sizes.is_empty() {
        sizes = default_sweep();
    }
    let config = args.config(sizes[0]);
    let report = run_scaling(&sizes, &config)?;
    for (size, err) in &report.failures {
        eprintln!("skipped {size:?}: {err}");
    }
    output(&report.records, &args.out)?;
    report_deviations(&report.records)
}

fn bench_variants(args: &CommonArgs) -> Result<(), Failure> {
    let sizes = args.sizes();
    let size = match sizes.as_slice() {
        [] => ProblemSize::ResolutionKm(4.0),
        [one] => *one,
        _ => return Err(Failure::Usage("bench variants takes a single size".into())),
    };
    let baseline = args.config(size);
    let records = run_variant_comparison(&baseline, &standard_variants(&baseline, args.threads.unwrap_or(4)))?;
    output(&records, &args.out)?;
    report_deviations(&records)
}

fn run_verify(args: &CommonArgs) -> Result<(), Failure> {
    let mut opts = VerifyOptions {
        distortion: args.distortion,
        oracle_cap: args.oracle_cap,
        workers: args.threads.unwrap_or(4),
        ..VerifyOptions::default()
    };
    if !args.resolution_km.is_empty() || !args.elements.is_empty() {
        opts.sizes = args
            .sizes()
            .into_iter()
            .map(ProblemSize::n_elements)
            .collect::<Result<_, _>>()?;
    }
    opts.pairs.retain(|&(n_a, n_s)| {
        args.dg_advection.is_none_or(|a| a == n_a) && args.dg_stress.is_none_or(|s| s == n_s)
    });
    if opts.pairs.is_empty() {
        return Err(Failure::Usage("no kernel for the requested DOF combination".into()));
    }
    if args.precision.is_some() {
        opts.precisions = vec![args.precision()];
    }
    let report = verify(&opts)?;
    for c in &report.checks {
        println!("{c}");
    }
    let failed = report.failures().count();
    println!("{} checks, {failed} failed", report.checks.len());
    if failed > 0 {
        return Err(Failure::Runtime("verification failed".into()));
    }
    Ok(())
}

fn print_table(name: &str, table: &BasisTable) {
    println!("{name}: {} x {}", table.n_local(), table.n_points());
    for j in 0..table.n_local() {
        let row: Vec<String> = table.row(j).iter().map(|v| format!("{v:>12.8}")).collect();
        println!("  {}", row.join(" "));
    }
}

fn tables(args: &CommonArgs) -> Result<(), Failure> {
    let n_s = args.dg_stress.unwrap_or(8);
    let ngp = ngp_for_dofs(n_s)?;
    let rule = gauss_rule(ngp)?;
    println!("Gauss rule: {ngp} points per direction, {} points", rule.n_points());
    println!("  points  {:?}", rule.points_1d());
    println!("  weights {:?}", rule.weights_1d());
    print_table("PSI stress", &psi_table(n_s, ngp)?);
    let advection: Vec<usize> = match args.dg_advection {
        Some(n) => vec![n],
        None => ADVECTION_DOFS.to_vec(),
    };
    for n_a in advection {
        print_table(&format!("PSI advection (n={n_a})"), &psi_table(n_a, ngp)?);
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let result = match &cli.command {
        Command::Bench { kind: BenchKind::Scale(a) } => bench_scale(a),
        Command::Bench { kind: BenchKind::Variants(a) } => bench_variants(a),
        Command::Verify(a) => run_verify(a),
        Command::Tables(a) => tables(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Runtime(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
    }
}
