//! Measurement processing between raw beam power and the quantities
//! handover decisions consume.
//!
//! Raw per-beam RSRP is averaged over a short physical-layer window,
//! per-cell quality is consolidated from the best beams above an absolute
//! threshold, and both beam and cell quantities are smoothed by a
//! first-order RRC-level filter. A UE only refreshes its beam set at sweep
//! instants, so between sweeps its view can lag the network's — that lag is
//! exactly what the delta-RSRP metric captures.

use crate::config::RrmConfig;
use crate::units::{dbm_to_mw, mw_to_dbm};
use std::collections::{BTreeMap, VecDeque};
use thiserror::Error;

/// (cell id, beam id) — beams are only unique within their cell.
pub type BeamKey = (usize, usize);

#[derive(Debug, Error, PartialEq)]
pub enum RrmError {
    #[error("cannot filter an empty sample window")]
    NoSamples,
    #[error("cannot consolidate an empty beam list")]
    NoBeams,
}

// ===========================================================================
// Filters
// ===========================================================================

/// Physical-layer beam filter: power-domain moving average of the last
/// `window` samples, returned in dBm.
pub fn l1_filter(samples: &[f64], window: usize) -> Result<f64, RrmError> {
    assert!(window >= 1, "filter window must hold at least one sample");
    if samples.is_empty() {
        return Err(RrmError::NoSamples);
    }
    let tail = &samples[samples.len().saturating_sub(window)..];
    if let [only] = tail {
        // The power mean of one sample is that sample; skip the dBm→mW→dBm
        // round trip so a width-1 window is bit-exact.
        return Ok(*only);
    }
    let mean_mw = tail.iter().map(|&dbm| dbm_to_mw(dbm)).sum::<f64>() / tail.len() as f64;
    Ok(mw_to_dbm(mean_mw))
}

/// Smoothing weight of the RRC-level filter for coefficient index `k`.
#[inline]
pub fn l3_coefficient(k: f64) -> f64 {
    0.5f64.powf(k / 4.0)
}

/// RRC-level exponential filter in the dB domain. The first measurement
/// initializes the state; k = 0 disables smoothing.
pub fn l3_filter(prev: Option<f64>, meas_dbm: f64, k: f64) -> f64 {
    match prev {
        None => meas_dbm,
        Some(prev) => {
            let a = l3_coefficient(k);
            (1.0 - a) * prev + a * meas_dbm
        }
    }
}

// ===========================================================================
// Cell-quality consolidation
// ===========================================================================

/// Quality of one cell as derived from its measured beams.
#[derive(Debug, Clone, PartialEq)]
pub struct CellQuality {
    pub cell_id: usize,
    /// Power average of the contributing beams (dBm).
    pub consolidated_rsrp_dbm: f64,
    /// RRC-filtered cell quality (dBm); equals the consolidated value until
    /// a filter history exists.
    pub l3_rsrp_dbm: f64,
    /// Beams whose L1 values entered the average, strongest first.
    pub contributing_beams: Vec<usize>,
}

/// Consolidate a cell's quality from `(beam_id, l1_rsrp_dbm)` pairs: the
/// power average of up to `n_best_beams` strongest beams at or above the
/// absolute threshold. If nothing clears the threshold the single best beam
/// stands in, so a cell with any measured beam always has a quality.
pub fn consolidate_cell_quality(
    cell_id: usize,
    beams: &[(usize, f64)],
    cfg: &RrmConfig,
) -> Result<CellQuality, RrmError> {
    if beams.is_empty() {
        return Err(RrmError::NoBeams);
    }
    let mut ranked: Vec<(usize, f64)> = beams.to_vec();
    ranked.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));

    let eligible: Vec<(usize, f64)> = ranked
        .iter()
        .filter(|(_, rsrp)| *rsrp >= cfg.abs_threshold)
        .take(cfg.n_best_beams)
        .copied()
        .collect();
    let contributing = if eligible.is_empty() {
        vec![ranked[0]]
    } else {
        eligible
    };

    let mean_mw = contributing
        .iter()
        .map(|&(_, dbm)| dbm_to_mw(dbm))
        .sum::<f64>()
        / contributing.len() as f64;

    Ok(CellQuality {
        cell_id,
        consolidated_rsrp_dbm: mw_to_dbm(mean_mw),
        l3_rsrp_dbm: mw_to_dbm(mean_mw),
        contributing_beams: contributing.into_iter().map(|(id, _)| id).collect(),
    })
}

// ===========================================================================
// Per-UE measurement state
// ===========================================================================

/// Measurement record of one tracked beam.
#[derive(Debug, Clone)]
pub struct BeamMeasurement {
    pub raw_rsrp_dbm: f64,
    pub l1_rsrp_dbm: f64,
    pub l3_rsrp_dbm: f64,
    pub last_seen_s: f64,
    window: VecDeque<f64>,
    l3_state: Option<f64>,
}

impl BeamMeasurement {
    fn push_sample(&mut self, raw_dbm: f64, now: f64, cfg: &RrmConfig) {
        self.window.push_back(raw_dbm);
        while self.window.len() > cfg.l1_window {
            self.window.pop_front();
        }
        self.raw_rsrp_dbm = raw_dbm;
        self.l1_rsrp_dbm =
            l1_filter(self.window.make_contiguous(), cfg.l1_window).expect("window is non-empty");
        self.l3_state = Some(l3_filter(self.l3_state, self.l1_rsrp_dbm, cfg.l3_k));
        self.l3_rsrp_dbm = self.l3_state.unwrap();
        self.last_seen_s = now;
    }

    fn fresh(raw_dbm: f64, now: f64, cfg: &RrmConfig) -> BeamMeasurement {
        let mut m = BeamMeasurement {
            raw_rsrp_dbm: raw_dbm,
            l1_rsrp_dbm: raw_dbm,
            l3_rsrp_dbm: raw_dbm,
            last_seen_s: now,
            window: VecDeque::new(),
            l3_state: None,
        };
        m.push_sample(raw_dbm, now, cfg);
        m
    }
}

/// What one UE currently knows about the beams around it.
///
/// The beam set refreshes only at sweep instants: each cell keeps its
/// strongest `n_best_beams` beams above the detectable threshold, and
/// history (filter windows) survives for beams that stay in the set.
/// Between sweeps only the serving beam is re-measured — new beams are
/// invisible until the next sweep. The serving beam is always kept, even
/// when it falls below the detectable threshold or out of the top set.
#[derive(Debug, Clone, Default)]
pub struct UeMeasurementState {
    beams: BTreeMap<BeamKey, BeamMeasurement>,
    cell_l3: BTreeMap<usize, f64>,
    last_sweep_s: Option<f64>,
}

impl UeMeasurementState {
    pub fn new() -> UeMeasurementState {
        UeMeasurementState::default()
    }

    /// Feed the current true per-beam RSRP field to the UE. Performs a full
    /// sweep when one is due, otherwise just refreshes the serving beam.
    pub fn observe(
        &mut self,
        now: f64,
        truth: &BTreeMap<BeamKey, f64>,
        serving: Option<BeamKey>,
        cfg: &RrmConfig,
    ) {
        let sweep_due = match self.last_sweep_s {
            None => true,
            // Tolerance so sweep_period == n·dt sweeps on the n-th step.
            Some(last) => now - last >= cfg.sweep_period - 1e-9,
        };
        if sweep_due {
            self.sweep(now, truth, serving, cfg);
            self.last_sweep_s = Some(now);
        } else if let Some(key) = serving {
            if let Some(&raw) = truth.get(&key) {
                match self.beams.get_mut(&key) {
                    Some(m) => m.push_sample(raw, now, cfg),
                    None => {
                        self.beams
                            .insert(key, BeamMeasurement::fresh(raw, now, cfg));
                    }
                }
            }
        }
    }

    fn sweep(
        &mut self,
        now: f64,
        truth: &BTreeMap<BeamKey, f64>,
        serving: Option<BeamKey>,
        cfg: &RrmConfig,
    ) {
        // Rank detectable beams per cell.
        let mut per_cell: BTreeMap<usize, Vec<(usize, f64)>> = BTreeMap::new();
        for (&(cell, beam), &rsrp) in truth {
            if rsrp >= cfg.ue_detectable_threshold {
                per_cell.entry(cell).or_default().push((beam, rsrp));
            }
        }
        let mut keep: Vec<(BeamKey, f64)> = Vec::new();
        for (cell, mut beams) in per_cell {
            beams.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
            beams.truncate(cfg.n_best_beams);
            keep.extend(beams.into_iter().map(|(beam, rsrp)| ((cell, beam), rsrp)));
        }
        if let Some(key) = serving {
            if !keep.iter().any(|&(k, _)| k == key) {
                if let Some(&raw) = truth.get(&key) {
                    keep.push((key, raw));
                }
            }
        }

        let mut next = BTreeMap::new();
        for (key, raw) in keep {
            let mut m = match self.beams.remove(&key) {
                Some(m) => m,
                None => {
                    next.insert(key, BeamMeasurement::fresh(raw, now, cfg));
                    continue;
                }
            };
            m.push_sample(raw, now, cfg);
            next.insert(key, m);
        }
        self.beams = next;
    }

    /// Consolidate every tracked cell and advance its RRC-level filter.
    /// Cells that lost all tracked beams also lose their filter history.
    pub fn update_cell_qualities(&mut self, cfg: &RrmConfig) -> BTreeMap<usize, CellQuality> {
        let mut per_cell: BTreeMap<usize, Vec<(usize, f64)>> = BTreeMap::new();
        for (&(cell, beam), m) in &self.beams {
            per_cell
                .entry(cell)
                .or_default()
                .push((beam, m.l1_rsrp_dbm));
        }
        let mut qualities = BTreeMap::new();
        for (cell, beams) in per_cell {
            let mut q = consolidate_cell_quality(cell, &beams, cfg)
                .expect("tracked cells have at least one beam");
            let l3 = l3_filter(
                self.cell_l3.get(&cell).copied(),
                q.consolidated_rsrp_dbm,
                cfg.l3_k,
            );
            self.cell_l3.insert(cell, l3);
            q.l3_rsrp_dbm = l3;
            qualities.insert(cell, q);
        }
        self.cell_l3.retain(|cell, _| qualities.contains_key(cell));
        qualities
    }

    pub fn tracked_beams(&self) -> impl Iterator<Item = (&BeamKey, &BeamMeasurement)> {
        self.beams.iter()
    }

    pub fn beam(&self, key: BeamKey) -> Option<&BeamMeasurement> {
        self.beams.get(&key)
    }

    /// Strongest L1 value across every tracked beam.
    pub fn best_l1(&self) -> Option<f64> {
        self.beams
            .values()
            .map(|m| m.l1_rsrp_dbm)
            .max_by(f64::total_cmp)
    }

    /// Strongest tracked beam of one cell by L1, ties to the lowest beam id.
    pub fn best_beam_of_cell(&self, cell: usize) -> Option<(usize, f64)> {
        self.beams
            .range((cell, 0)..=(cell, usize::MAX))
            .map(|(&(_, beam), m)| (beam, m.l1_rsrp_dbm))
            .max_by(|a, b| a.1.total_cmp(&b.1).then(b.0.cmp(&a.0)))
    }
}

// ===========================================================================
// Reports
// ===========================================================================

#[derive(Debug, Clone, PartialEq)]
pub struct ReportBeamEntry {
    pub beam_id: usize,
    pub l3_rsrp_dbm: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReportCellEntry {
    pub cell_id: usize,
    pub l3_rsrp_dbm: f64,
    /// Strongest-first beam-level results, at most `report_max_beams`.
    pub beams: Vec<ReportBeamEntry>,
}

/// Snapshot handed to the handover logic: serving cell first, then every
/// neighbor the UE currently has a quality for.
#[derive(Debug, Clone, PartialEq)]
pub struct MeasurementReport {
    pub serving: ReportCellEntry,
    pub neighbors: Vec<ReportCellEntry>,
}

/// Assemble the report from consolidated cell qualities. Each cell carries
/// the RRC-filtered values of its contributing beams, strongest first,
/// truncated to `report_max_beams`.
pub fn build_report(
    serving_cell: usize,
    qualities: &BTreeMap<usize, CellQuality>,
    state: &UeMeasurementState,
    cfg: &RrmConfig,
) -> MeasurementReport {
    let entry = |q: &CellQuality| {
        let mut beams: Vec<ReportBeamEntry> = q
            .contributing_beams
            .iter()
            .filter_map(|&beam_id| {
                state.beam((q.cell_id, beam_id)).map(|m| ReportBeamEntry {
                    beam_id,
                    l3_rsrp_dbm: m.l3_rsrp_dbm,
                })
            })
            .collect();
        beams.sort_by(|a, b| {
            b.l3_rsrp_dbm
                .total_cmp(&a.l3_rsrp_dbm)
                .then(a.beam_id.cmp(&b.beam_id))
        });
        beams.truncate(cfg.report_max_beams);
        ReportCellEntry {
            cell_id: q.cell_id,
            l3_rsrp_dbm: q.l3_rsrp_dbm,
            beams,
        }
    };
    let serving = qualities
        .get(&serving_cell)
        .expect("a report requires a quality for the serving cell");
    MeasurementReport {
        serving: entry(serving),
        neighbors: qualities
            .values()
            .filter(|q| q.cell_id != serving_cell)
            .map(entry)
            .collect(),
    }
}
