//! Serialization of run artifacts: the metrics, event, beam-grid and
//! coverage CSVs plus the TOML metadata sidecar that makes every output
//! set reproducible on its own.

use crate::config::ScenarioConfig;
use crate::engine::{CoverageMap, MetricsLog, RunMeta};
use crate::handover::HandoverEvent;
use serde::Serialize;
use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

pub const METRICS_HEADER: &str = "time,ue_id,serving_cell,serving_beam,indoor,\
serving_rsrp_dbm,best_rsrp_dbm,delta_rsrp_db,l3_serving_dbm,sinr_db";
pub const EVENTS_HEADER: &str = "time,ue_id,source,target,outcome";
pub const GRID_HEADER: &str = "beam_id,azimuth_deg,zenith_deg,peak_gain_dbi";

pub fn write_metrics_csv<W: Write>(log: &MetricsLog, w: &mut W) -> io::Result<()> {
    writeln!(w, "{METRICS_HEADER}")?;
    for s in &log.samples {
        writeln!(
            w,
            "{:.2},{},{},{},{},{:.2},{:.2},{:.2},{:.2},{:.2}",
            s.time,
            s.ue_id,
            s.serving_cell,
            s.serving_beam,
            s.indoor as u8,
            s.serving_rsrp_dbm,
            s.best_rsrp_dbm,
            s.delta_rsrp_db,
            s.l3_serving_dbm,
            s.sinr_db,
        )?;
    }
    Ok(())
}

pub fn write_events_csv<W: Write>(events: &[HandoverEvent], w: &mut W) -> io::Result<()> {
    writeln!(w, "{EVENTS_HEADER}")?;
    for e in events {
        writeln!(
            w,
            "{:.3},{},{},{},{}",
            e.time, e.ue_id, e.source_cell, e.target_cell, e.outcome
        )?;
    }
    Ok(())
}

pub fn write_coverage_csv<W: Write>(map: &CoverageMap, w: &mut W) -> io::Result<()> {
    write!(w, "x_m,y_m")?;
    for e in &map.element_counts {
        write!(w, ",rsrp_e{e}_dbm")?;
    }
    writeln!(w, ",rsrp_nbf_dbm")?;
    for row in &map.rows {
        write!(w, "{:.2},{:.2}", row.x_m, row.y_m)?;
        for v in &row.rsrp_dbm {
            write!(w, ",{v:.2}")?;
        }
        writeln!(w, ",{:.2}", row.rsrp_nbf_dbm)?;
    }
    Ok(())
}

/// `rows` as produced by [`crate::engine::grid_summary`]:
/// (beam id, steer azimuth, steer zenith, gain at the steer).
pub fn write_grid_csv<W: Write>(rows: &[(usize, f64, f64, f64)], w: &mut W) -> io::Result<()> {
    writeln!(w, "{GRID_HEADER}")?;
    for (id, az, zen, peak) in rows {
        writeln!(w, "{id},{az:.4},{zen:.4},{peak:.4}")?;
    }
    Ok(())
}

#[derive(Serialize)]
struct MetaDoc<'a> {
    artifact_version: &'a str,
    rng_seed: u64,
    antenna_elements: usize,
    config_hash: &'a str,
    config: &'a ScenarioConfig,
}

pub fn write_meta_toml<W: Write>(meta: &RunMeta, w: &mut W) -> io::Result<()> {
    let doc = MetaDoc {
        artifact_version: &meta.artifact_version,
        rng_seed: meta.rng_seed,
        antenna_elements: meta.antenna_elements,
        config_hash: &meta.config_hash,
        config: &meta.config,
    };
    let text =
        toml::to_string_pretty(&doc).map_err(|e| io::Error::new(io::ErrorKind::InvalidData, e))?;
    w.write_all(text.as_bytes())
}

fn create(path: &Path) -> io::Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(path)?))
}

/// Stem shared by all files of one simulation run.
pub fn run_stem(elements: usize, seed: u64) -> String {
    format!("run_{elements}elem_seed{seed}")
}

/// Write the full artifact set of one run — metrics, events, beam grid and
/// metadata — returning the created paths.
pub fn write_run_files(
    log: &MetricsLog,
    grid: &[(usize, f64, f64, f64)],
    dir: &Path,
) -> io::Result<Vec<PathBuf>> {
    let stem = run_stem(log.meta.antenna_elements, log.meta.rng_seed);
    let paths = [
        dir.join(format!("{stem}.csv")),
        dir.join(format!("{stem}.events.csv")),
        dir.join(format!("{stem}.grid.csv")),
        dir.join(format!("{stem}.meta.toml")),
    ];
    write_metrics_csv(log, &mut create(&paths[0])?)?;
    write_events_csv(&log.events, &mut create(&paths[1])?)?;
    write_grid_csv(grid, &mut create(&paths[2])?)?;
    write_meta_toml(&log.meta, &mut create(&paths[3])?)?;
    Ok(paths.into_iter().collect())
}

/// Write a coverage map and its metadata sidecar.
pub fn write_coverage_files(
    map: &CoverageMap,
    meta: &RunMeta,
    dir: &Path,
) -> io::Result<Vec<PathBuf>> {
    let stem = format!("coverage-map_seed{}", meta.rng_seed);
    let paths = [
        dir.join(format!("{stem}.csv")),
        dir.join(format!("{stem}.meta.toml")),
    ];
    write_coverage_csv(map, &mut create(&paths[0])?)?;
    write_meta_toml(meta, &mut create(&paths[1])?)?;
    Ok(paths.into_iter().collect())
}
