use std::io::Write;
use std::path::Path;

use crate::error::Result;

use super::BenchRecord;

pub const CSV_HEADER: [&str; 14] = [
    "scenario",
    "n_elements",
    "dg_stress",
    "dg_advection",
    "layout",
    "map_mode",
    "exec",
    "workers",
    "precision",
    "iterations",
    "wall_seconds",
    "elements_per_second",
    "max_deviation",
    "checksum",
];

/// Shortest decimal that round-trips; exponent notation outside
/// `[1e-4, 1e16)` so deviations do not print as long runs of zeros.
fn float(x: f64) -> String {
    if x != 0.0 && x.is_finite() && !(1e-4..1e16).contains(&x.abs()) {
        format!("{x:e}")
    } else {
        x.to_string()
    }
}

fn row(r: &BenchRecord) -> [String; 14] {
    [
        r.scenario.name().to_string(),
        r.n_elements.to_string(),
        r.dg_stress.to_string(),
        r.dg_advection.to_string(),
        r.layout.name().to_string(),
        r.map_mode.name().to_string(),
        r.kernel.exec_name().to_string(),
        r.kernel.workers().to_string(),
        r.precision.name().to_string(),
        r.iterations.to_string(),
        float(r.wall_seconds),
        float(r.elements_per_second),
        r.max_deviation.map(float).unwrap_or_default(),
        float(r.checksum),
    ]
}

/// Writes the header and one row per record, in input order.
pub fn write_csv<W: Write>(records: &[BenchRecord], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CSV_HEADER)?;
    for r in records {
        w.write_record(row(r))?;
    }
    w.flush()?;
    Ok(())
}

pub fn emit_csv(records: &[BenchRecord], path: &Path) -> Result<()> {
    let file = std::fs::File::create(path)?;
    write_csv(records, std::io::BufWriter::new(file))
}

#[cfg(test)]
mod tests {
    use super::float;

    #[test]
    fn floats_round_trip() {
        for x in [0.0, 1.0, 0.1, 2468336.741892713, 1.0954672183034495e-14, 3e20, -5e-7] {
            assert_eq!(float(x).parse::<f64>().unwrap(), x);
        }
        assert_eq!(float(1.0954672183034495e-14), "1.0954672183034495e-14");
        assert_eq!(float(0.25), "0.25");
    }
}
