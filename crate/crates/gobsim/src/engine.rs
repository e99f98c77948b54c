//! The time-stepped simulation itself: walks UEs through the deployment,
//! runs every beam's RSRP through the measurement chain, drives handovers
//! and traffic, and collects the per-step metric samples. Also hosts the
//! static coverage-map mode and small distribution helpers.
//!
//! Runs are deterministic in (scenario, seed). Every random purpose draws
//! from its own counter-based stream keyed by entity (UE, link), so
//! changing the antenna element count alters no random draw: sweeps over
//! the element counts see identical placements, walks, shadow processes
//! and traffic arrivals.

use crate::antenna::{beam_gain, build_grid, ElementPattern, GridOfBeams, GridParams};
use crate::channel::{
    self, median_los, noise_per_re_dbm, pathloss, update_shadow, LinkState, RadioParams,
};
use crate::config::{
    build_deployment, place_ues, ConfigError, ScenarioConfig, SectorSite, ServingLink,
};
use crate::geo::Vec2;
use crate::handover::{classify_outcome, HandoverEvent, PendingHandover, TriggerState};
use crate::mobility::{step_position, TrafficState};
use crate::rrm::{build_report, BeamKey, CellQuality, UeMeasurementState};
use crate::units::{db_to_ratio, dbm_to_mw, mw_to_dbm};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::collections::{BTreeMap, BTreeSet};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum EngineError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("cannot build a distribution from zero samples")]
    EmptyDistribution,
}

// ===========================================================================
// Random streams
// ===========================================================================

// Stream ids partition the generator so that every random purpose and
// entity has its own independent sequence under one scenario seed.
const STREAM_PLACEMENT: u64 = 1;
const STREAM_MOBILITY: u64 = 2;
const STREAM_SHADOW: u64 = 3;
const STREAM_LOS: u64 = 4;
const STREAM_TRAFFIC: u64 = 5;
const STREAM_COVERAGE: u64 = 6;

fn domain_rng(seed: u64, domain: u64, entity: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream((domain << 48) ^ entity);
    rng
}

fn link_entity(ue_id: usize, site_id: usize) -> u64 {
    ((ue_id as u64) << 16) | site_id as u64
}

// ===========================================================================
// Log types
// ===========================================================================

/// One (step, UE) row of the metrics log.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricsSample {
    pub time: f64,
    pub ue_id: usize,
    pub serving_cell: usize,
    pub serving_beam: usize,
    pub indoor: bool,
    /// L1-filtered RSRP of the beam the UE is served on (dBm).
    pub serving_rsrp_dbm: f64,
    /// Strongest L1-filtered RSRP across the UE's measured beam set (dBm).
    pub best_rsrp_dbm: f64,
    /// Instantaneous network-wide best minus the UE-side best, floored at
    /// zero (dB) — how much signal the UE's limited view leaves on the table.
    pub delta_rsrp_db: f64,
    /// RRC-filtered serving-cell quality (dBm).
    pub l3_serving_dbm: f64,
    pub sinr_db: f64,
}

/// Everything needed to reproduce and identify a run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunMeta {
    pub artifact_version: String,
    pub rng_seed: u64,
    pub antenna_elements: usize,
    pub config_hash: String,
    pub config: ScenarioConfig,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MetricsLog {
    pub samples: Vec<MetricsSample>,
    pub events: Vec<HandoverEvent>,
    pub meta: RunMeta,
}

fn fnv1a_64(bytes: &[u8]) -> u64 {
    let mut hash = 0xcbf29ce484222325u64;
    for &b in bytes {
        hash ^= b as u64;
        hash = hash.wrapping_mul(0x100000001b3);
    }
    hash
}

/// Reproducibility metadata for an artifact produced from `cfg`.
pub fn run_meta(cfg: &ScenarioConfig) -> RunMeta {
    let echo = cfg.to_toml_string();
    RunMeta {
        artifact_version: env!("CARGO_PKG_VERSION").to_string(),
        rng_seed: cfg.rng_seed,
        antenna_elements: cfg.antenna_elements,
        config_hash: format!("fnv1a:{:016x}", fnv1a_64(echo.as_bytes())),
        config: cfg.clone(),
    }
}

// ===========================================================================
// Simulation state
// ===========================================================================

struct UeCtx {
    ue: crate::config::UeState,
    meas: UeMeasurementState,
    trigger: TriggerState,
    pending: Option<PendingHandover>,
    traffic: TrafficState,
    /// Service gap of the most recent handover execution.
    interruption: Option<(f64, f64)>,
    history: Vec<HandoverEvent>,
    mobility_rng: ChaCha8Rng,
    /// True instantaneous RSRP of every network beam, this step.
    truth: BTreeMap<BeamKey, f64>,
    network_best_dbm: f64,
    qualities: BTreeMap<usize, CellQuality>,
}

struct LinkCtx {
    link: LinkState,
    shadow_rng: ChaCha8Rng,
    los_rng: ChaCha8Rng,
}

struct Sim {
    cfg: ScenarioConfig,
    cells: Vec<SectorSite>,
    site_positions: BTreeMap<usize, Vec2>,
    grid: GridOfBeams,
    pattern: ElementPattern,
    params: RadioParams,
    noise_re_dbm: f64,
    ues: Vec<UeCtx>,
    /// Keyed by (ue, site): co-located sectors share the channel.
    links: BTreeMap<(usize, usize), LinkCtx>,
    events: Vec<HandoverEvent>,
}

fn element_pattern(cfg: &ScenarioConfig) -> ElementPattern {
    ElementPattern {
        gain_max_dbi: cfg.antenna.gain_max,
        beamwidth_3db_deg: cfg.antenna.beamwidth_3db,
        a_max_db: cfg.antenna.front_to_back,
        sla_v_db: cfg.antenna.sla_v,
    }
}

fn grid_params(cfg: &ScenarioConfig) -> GridParams {
    GridParams {
        downtilt_deg: cfg.antenna.downtilt,
        azimuth_span_deg: cfg.antenna.azimuth_span,
        azimuth_oversampling: cfg.antenna.azimuth_oversampling,
        zenith_layers: cfg.antenna.zenith_layers,
    }
}

impl Sim {
    fn new(cfg: &ScenarioConfig) -> Result<Sim, EngineError> {
        cfg.validate()?;
        let cells = build_deployment(cfg)?;
        let grid = build_grid(&cfg.array_geometry()?, &grid_params(cfg)).map_err(|e| {
            ConfigError::Validation(format!("antenna: cannot build beam grid: {e}"))
        })?;
        let params = RadioParams {
            p_re_dbm: cfg.per_re_power_dbm(),
            fc_ghz: cfg.carrier_frequency,
            bs_height_m: cfg.bs_height,
            ue_height_m: cfg.ue_height,
        };
        let seed = cfg.rng_seed;

        let mut placement_rng = domain_rng(seed, STREAM_PLACEMENT, 0);
        let ue_states = place_ues(cfg, &mut placement_rng);

        let mut links = BTreeMap::new();
        let mut site_positions: BTreeMap<usize, Vec2> = BTreeMap::new();
        for c in &cells {
            site_positions.insert(c.site_id, c.position);
        }
        for ue in &ue_states {
            for (&site_id, &site_pos) in &site_positions {
                let entity = link_entity(ue.ue_id, site_id);
                let mut shadow_rng = domain_rng(seed, STREAM_SHADOW, entity);
                let los_rng = domain_rng(seed, STREAM_LOS, entity);
                let link = LinkState::init(
                    ue.ue_id,
                    site_id,
                    site_pos,
                    ue.position,
                    ue.indoor,
                    ue.indoor_depth_m,
                    &params,
                    &cfg.channel,
                    &mut shadow_rng,
                );
                links.insert(
                    (ue.ue_id, site_id),
                    LinkCtx {
                        link,
                        shadow_rng,
                        los_rng,
                    },
                );
            }
        }

        let ues = ue_states
            .into_iter()
            .map(|ue| {
                let mut traffic_rng = domain_rng(seed, STREAM_TRAFFIC, ue.ue_id as u64);
                let start = traffic_rng.gen_range(0.0..cfg.traffic.chunk_interval);
                UeCtx {
                    meas: UeMeasurementState::new(),
                    trigger: TriggerState::new(),
                    pending: None,
                    traffic: TrafficState::new(&cfg.traffic, start),
                    interruption: None,
                    history: Vec::new(),
                    mobility_rng: domain_rng(seed, STREAM_MOBILITY, ue.ue_id as u64),
                    truth: BTreeMap::new(),
                    network_best_dbm: f64::NEG_INFINITY,
                    qualities: BTreeMap::new(),
                    ue,
                }
            })
            .collect();

        Ok(Sim {
            cells,
            site_positions,
            grid,
            pattern: element_pattern(cfg),
            params,
            noise_re_dbm: noise_per_re_dbm(cfg.subcarrier_spacing, cfg.channel.noise_figure),
            ues,
            links,
            events: Vec::new(),
            cfg: cfg.clone(),
        })
    }

    /// Recompute one UE's true per-beam RSRP across the whole network.
    fn refresh_truth(&mut self, u: usize, scratch: &mut Vec<f64>) {
        let ue_id = self.ues[u].ue.ue_id;
        let mut best = f64::NEG_INFINITY;
        let mut truth = std::mem::take(&mut self.ues[u].truth);
        truth.clear();
        for cell in &self.cells {
            let ctx = &self.links[&(ue_id, cell.site_id)];
            let (az, zen) = ctx.link.direction_from(cell, &self.params);
            let elem = self
                .pattern
                .gain(az, zen)
                .expect("directions are wrapped into the pattern domain");
            let base = self.params.p_re_dbm + elem
                - ctx
                    .link
                    .pathloss_db(&self.params)
                    .expect("distance floored")
                - ctx.link.shadow_db
                - ctx.link.penetration_db;
            scratch.clear();
            self.grid.array_factors_db_into(az, zen, scratch);
            for (beam_id, af_db) in scratch.iter().enumerate() {
                let rsrp = base + af_db;
                best = best.max(rsrp);
                truth.insert((cell.sector_id, beam_id), rsrp);
            }
        }
        self.ues[u].truth = truth;
        self.ues[u].network_best_dbm = best;
    }

    /// Strongest true beam network-wide; ties take the lowest (cell, beam).
    fn strongest_true_beam(truth: &BTreeMap<BeamKey, f64>) -> BeamKey {
        *truth
            .iter()
            .max_by(|a, b| a.1.total_cmp(b.1).then_with(|| b.0.cmp(a.0)))
            .expect("deployments have at least one beam")
            .0
    }

    fn serving_key(ue: &crate::config::UeState) -> BeamKey {
        let s = ue.serving.as_ref().expect("UE attached at start-up");
        (s.cell, s.beam)
    }

    /// Attach every UE to its strongest true beam and prime the filters.
    fn initial_attach(&mut self, scratch: &mut Vec<f64>) {
        for u in 0..self.ues.len() {
            self.refresh_truth(u, scratch);
            let ue = &mut self.ues[u];
            let (cell, beam) = Sim::strongest_true_beam(&ue.truth);
            ue.ue.serving = Some(ServingLink { cell, beam });
            ue.meas
                .observe(0.0, &ue.truth, Some((cell, beam)), &self.cfg.rrm);
            ue.qualities = ue.meas.update_cell_qualities(&self.cfg.rrm);
        }
    }

    /// Phase one of a step: movement, channel evolution, measurements and
    /// intra-cell beam reselection for every UE.
    fn advance_ues(&mut self, now: f64, scratch: &mut Vec<f64>) {
        let bounds = self.cfg.mobility_bounds();
        let dt = self.cfg.time_step;
        for u in 0..self.ues.len() {
            {
                let ue = &mut self.ues[u];
                step_position(&mut ue.ue, dt, &bounds, &mut ue.mobility_rng);
            }
            let (ue_id, pos) = (self.ues[u].ue.ue_id, self.ues[u].ue.position);
            for ((_, site_id), ctx) in self.links.range_mut((ue_id, 0)..=(ue_id, usize::MAX)) {
                let site_pos = self.site_positions[site_id];
                update_shadow(&mut ctx.link, pos, &self.cfg.channel, &mut ctx.shadow_rng);
                ctx.link.update_geometry(site_pos, pos, &self.params);
                ctx.link
                    .maybe_resample_los(&self.cfg.channel, &mut ctx.los_rng);
            }
            self.refresh_truth(u, scratch);

            let ue = &mut self.ues[u];
            let serving = Sim::serving_key(&ue.ue);
            ue.meas
                .observe(now, &ue.truth, Some(serving), &self.cfg.rrm);
            ue.qualities = ue.meas.update_cell_qualities(&self.cfg.rrm);
            // Intra-cell beam switching is transparent and instant: follow
            // the strongest measured beam of the serving cell.
            if let Some((beam, _)) = ue.meas.best_beam_of_cell(serving.0) {
                ue.ue.serving = Some(ServingLink {
                    cell: serving.0,
                    beam,
                });
            }
        }
    }

    /// Beams transmitting at instant `now`: serving beams of UEs with a
    /// chunk in flight and no ongoing service gap.
    fn active_beams(&self, now: f64) -> BTreeSet<BeamKey> {
        self.ues
            .iter()
            .filter(|u| u.traffic.active)
            .filter(|u| match u.interruption {
                Some((start, end)) => !(start <= now && now < end),
                None => true,
            })
            .map(|u| Sim::serving_key(&u.ue))
            .collect()
    }

    fn sinr_db(&self, u: usize, active: &BTreeSet<BeamKey>) -> f64 {
        let ue = &self.ues[u];
        let serving = Sim::serving_key(&ue.ue);
        let signal_dbm = ue.truth[&serving];
        let mut interference_mw = 0.0;
        for &key in active {
            if key.0 != serving.0 {
                interference_mw += dbm_to_mw(ue.truth[&key]);
            }
        }
        signal_dbm - mw_to_dbm(interference_mw + dbm_to_mw(self.noise_re_dbm))
    }

    fn sample(&self, u: usize, now: f64, sinr_db: f64) -> MetricsSample {
        let ue = &self.ues[u];
        let serving = Sim::serving_key(&ue.ue);
        let serving_rsrp = ue
            .meas
            .beam(serving)
            .expect("serving beam is always tracked")
            .l1_rsrp_dbm;
        let best_rsrp = ue.meas.best_l1().expect("tracked set is never empty");
        let delta = (ue.network_best_dbm - best_rsrp).max(0.0);
        assert!(
            best_rsrp >= serving_rsrp && delta >= 0.0,
            "metric invariants violated at t={now} for UE {}",
            ue.ue.ue_id
        );
        MetricsSample {
            time: now,
            ue_id: ue.ue.ue_id,
            serving_cell: serving.0,
            serving_beam: serving.1,
            indoor: ue.ue.indoor,
            serving_rsrp_dbm: serving_rsrp,
            best_rsrp_dbm: best_rsrp,
            delta_rsrp_db: delta,
            l3_serving_dbm: ue.qualities[&serving.0].l3_rsrp_dbm,
            sinr_db,
        }
    }

    fn handle_handover(&mut self, u: usize, now: f64) {
        let rrm = self.cfg.rrm.clone();
        let ho = self.cfg.handover.clone();
        let ue = &mut self.ues[u];
        let serving_cell = Sim::serving_key(&ue.ue).0;

        if let Some(pending) = ue.pending.clone() {
            if now >= pending.execute_at - 1e-9 {
                let source_l3 = ue.qualities[&serving_cell].l3_rsrp_dbm;
                let outcome = classify_outcome(
                    source_l3,
                    &ue.history,
                    serving_cell,
                    pending.target_cell,
                    pending.execute_at,
                    &ho,
                );
                let event = HandoverEvent {
                    time: pending.execute_at,
                    ue_id: ue.ue.ue_id,
                    source_cell: serving_cell,
                    target_cell: pending.target_cell,
                    outcome,
                };
                ue.history.push(event.clone());
                self.events.push(event);

                let beam = match ue.meas.best_beam_of_cell(pending.target_cell) {
                    Some((beam, _)) => beam,
                    // The target's beams were swept away during preparation:
                    // attach to its instantaneously best beam.
                    None => {
                        ue.truth
                            .range((pending.target_cell, 0)..=(pending.target_cell, usize::MAX))
                            .max_by(|a, b| a.1.total_cmp(b.1).then_with(|| b.0.cmp(a.0)))
                            .expect("every cell has beams")
                            .0
                             .1
                    }
                };
                ue.ue.serving = Some(ServingLink {
                    cell: pending.target_cell,
                    beam,
                });
                ue.interruption = Some((
                    pending.execute_at,
                    pending.execute_at + ho.exec_interruption,
                ));
                ue.trigger.reset();
                ue.pending = None;
            }
        } else {
            let serving_l3 = ue.qualities[&serving_cell].l3_rsrp_dbm;
            let report = build_report(serving_cell, &ue.qualities, &ue.meas, &rrm);
            let neighbors: Vec<(usize, f64)> = report
                .neighbors
                .iter()
                .map(|n| (n.cell_id, n.l3_rsrp_dbm))
                .collect();
            if let Some(target) = ue.trigger.evaluate(serving_l3, &neighbors, &ho, now) {
                ue.pending = Some(PendingHandover::schedule(target, now, &ho));
            }
        }
    }

    fn step_traffic(&mut self, u: usize, now: f64, sinr_db: f64) {
        let dt = self.cfg.time_step;
        let bw_hz = self.cfg.bandwidth * 1e6;
        let ue = &mut self.ues[u];
        // Shannon-bound proxy with a spectral-efficiency cap, silenced for
        // the part of the step spent in a handover service gap.
        let gap = match ue.interruption {
            Some((start, end)) => (now.min(end) - (now - dt).max(start)).max(0.0),
            None => 0.0,
        };
        let se = (1.0 + db_to_ratio(sinr_db)).log2().min(8.0);
        let bits = se * bw_hz * (dt - gap).max(0.0);
        ue.traffic.step(now, bits);
    }

    fn run(mut self) -> MetricsLog {
        let steps = (self.cfg.sim_duration / self.cfg.time_step + 1e-9).floor() as usize;
        let mut samples = Vec::with_capacity(steps * self.ues.len());
        let mut scratch: Vec<f64> = Vec::with_capacity(self.grid.beams.len());

        self.initial_attach(&mut scratch);
        for k in 1..=steps {
            let now = k as f64 * self.cfg.time_step;
            self.advance_ues(now, &mut scratch);
            let active = self.active_beams(now);
            for u in 0..self.ues.len() {
                let sinr = self.sinr_db(u, &active);
                samples.push(self.sample(u, now, sinr));
                self.handle_handover(u, now);
                self.step_traffic(u, now, sinr);
            }
        }

        let mut events = self.events;
        events.sort_by(|a, b| a.time.total_cmp(&b.time).then(a.ue_id.cmp(&b.ue_id)));
        MetricsLog {
            samples,
            events,
            meta: run_meta(&self.cfg),
        }
    }
}

/// Simulate one scenario end to end.
pub fn run(cfg: &ScenarioConfig) -> Result<MetricsLog, EngineError> {
    Ok(Sim::new(cfg)?.run())
}

// ===========================================================================
// Distributions
// ===========================================================================

/// Empirical distribution: ascending values paired with cumulative
/// probability i/n at the i-th sorted value.
pub fn cdf(values: &[f64]) -> Result<Vec<(f64, f64)>, EngineError> {
    if values.is_empty() {
        return Err(EngineError::EmptyDistribution);
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len() as f64;
    Ok(sorted
        .into_iter()
        .enumerate()
        .map(|(i, v)| (v, (i + 1) as f64 / n))
        .collect())
}

/// First sorted value whose cumulative probability reaches `q` (0 < q ≤ 1).
pub fn percentile(values: &[f64], q: f64) -> Result<f64, EngineError> {
    assert!((0.0..=1.0).contains(&q), "quantile must lie in [0, 1]");
    if values.is_empty() {
        return Err(EngineError::EmptyDistribution);
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let idx = ((q * sorted.len() as f64).ceil() as usize).clamp(1, sorted.len()) - 1;
    Ok(sorted[idx])
}

pub fn median(values: &[f64]) -> Result<f64, EngineError> {
    percentile(values, 0.5)
}

// ===========================================================================
// Coverage maps
// ===========================================================================

#[derive(Debug, Clone, PartialEq)]
pub struct CoverageRow {
    pub x_m: f64,
    pub y_m: f64,
    /// Best beamformed RSRP per element count, in sweep order (dBm).
    pub rsrp_dbm: Vec<f64>,
    /// Single-element baseline without any array term (dBm).
    pub rsrp_nbf_dbm: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CoverageMap {
    pub freq_ghz: f64,
    pub element_counts: Vec<usize>,
    pub rows: Vec<CoverageRow>,
}

/// Static best-beam field over uniformly drawn positions, one column per
/// element count plus the no-beamforming baseline. The field is
/// deterministic: no shadow fading, and line of sight wherever its
/// probability is at least one half.
pub fn coverage_map(
    cfg: &ScenarioConfig,
    freq_ghz: f64,
    n_positions: usize,
) -> Result<CoverageMap, EngineError> {
    cfg.validate()?;
    let cells = build_deployment(cfg)?;
    let pattern = element_pattern(cfg);
    let gp = grid_params(cfg);
    let mut grids = Vec::new();
    for &elements in &cfg.element_sweep {
        let geom = cfg.antenna.shape_for(elements)?;
        let grid = build_grid(&geom, &gp).map_err(|e| {
            ConfigError::Validation(format!("antenna: cannot build beam grid: {e}"))
        })?;
        grids.push(grid);
    }
    let params = RadioParams {
        p_re_dbm: cfg.per_re_power_dbm(),
        fc_ghz: freq_ghz,
        bs_height_m: cfg.bs_height,
        ue_height_m: cfg.ue_height,
    };

    let bounds = cfg.mobility_bounds();
    let mut rng = domain_rng(cfg.rng_seed, STREAM_COVERAGE, 0);
    let mut rows = Vec::with_capacity(n_positions);
    let mut scratch: Vec<f64> = Vec::new();
    for _ in 0..n_positions {
        let pos = Vec2::new(
            rng.gen_range(bounds.min.x..=bounds.max.x),
            rng.gen_range(bounds.min.y..=bounds.max.y),
        );
        let mut best = vec![f64::NEG_INFINITY; grids.len()];
        let mut best_nbf = f64::NEG_INFINITY;
        for cell in &cells {
            let d2d = cell.position.dist(pos);
            let d3d = d2d.hypot(params.bs_height_m - params.ue_height_m);
            let los = median_los(d2d);
            let pl = pathloss(los, d3d.max(1.0), params.fc_ghz, params.ue_height_m)
                .expect("distance floored");
            let (az, zen) = channel::direction(cell.position, cell.bearing_deg, pos, &params);
            let elem = pattern.gain(az, zen).expect("wrapped directions");
            let base = params.p_re_dbm + elem - pl;
            best_nbf = best_nbf.max(base);
            for (g, grid) in grids.iter().enumerate() {
                scratch.clear();
                grid.array_factors_db_into(az, zen, &mut scratch);
                for af_db in &scratch {
                    best[g] = best[g].max(base + af_db);
                }
            }
        }
        rows.push(CoverageRow {
            x_m: pos.x,
            y_m: pos.y,
            rsrp_dbm: best,
            rsrp_nbf_dbm: best_nbf,
        });
    }
    Ok(CoverageMap {
        freq_ghz,
        element_counts: cfg.element_sweep.clone(),
        rows,
    })
}

/// Static description of one sector's beam grid (steer directions and the
/// gain each beam reaches there), for the grid CSV.
pub fn grid_summary(cfg: &ScenarioConfig) -> Result<Vec<(usize, f64, f64, f64)>, EngineError> {
    cfg.validate()?;
    let geom = cfg.array_geometry()?;
    let grid = build_grid(&geom, &grid_params(cfg))
        .map_err(|e| ConfigError::Validation(format!("antenna: cannot build beam grid: {e}")))?;
    let pattern = element_pattern(cfg);
    Ok(grid
        .beams
        .iter()
        .map(|b| {
            let peak = beam_gain(&pattern, &geom, b, b.azimuth_deg, b.zenith_deg)
                .expect("steer directions are in range");
            (b.id, b.azimuth_deg, b.zenith_deg, peak)
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::LosMode;
    use approx::assert_relative_eq;
    use rand_distr::{Distribution, StandardNormal};

    /// One site, one sector, a single column array pointing straight at a
    /// stationary UE 100 m down the boresight, no randomness in the channel.
    fn boresight_cfg() -> ScenarioConfig {
        let mut cfg = ScenarioConfig::default();
        cfg.num_sites = 1;
        cfg.sectors_per_site = 1;
        cfg.bs_height = 1.6;
        cfg.ue_height = 1.5;
        cfg.num_ues = 1;
        cfg.ue_positions = Some(vec![[100.0, 0.0]]);
        cfg.ue_speed_range = [0.0, 0.0];
        cfg.indoor_fraction = 0.0;
        cfg.sim_duration = 1.0;
        cfg.antenna_elements = 16;
        cfg.element_sweep = vec![16];
        cfg.antenna.array_shapes = vec![[16, 16, 1]];
        cfg.antenna.downtilt = 0.0;
        cfg.antenna.zenith_layers = Some(1);
        cfg.channel.shadow_enabled = false;
        cfg.channel.los_mode = LosMode::AlwaysLos;
        cfg.validate().unwrap();
        cfg
    }

    #[test]
    fn zero_duration_yields_an_empty_log() {
        let mut cfg = boresight_cfg();
        cfg.sim_duration = 0.0;
        let log = run(&cfg).unwrap();
        assert!(log.samples.is_empty());
        assert!(log.events.is_empty());
        assert_eq!(log.meta.rng_seed, cfg.rng_seed);
    }

    #[test]
    fn boresight_ue_is_served_at_the_chain_level_every_step() {
        let log = run(&boresight_cfg()).unwrap();
        assert_eq!(log.samples.len(), 10);
        for s in &log.samples {
            assert!(
                (s.serving_rsrp_dbm - -50.88).abs() < 0.01,
                "t={} served at {}",
                s.time,
                s.serving_rsrp_dbm
            );
            assert_eq!(s.serving_cell, 0);
            assert_eq!(s.delta_rsrp_db, 0.0);
            assert!(!s.indoor);
            // Alone in the network: SINR is the SNR of the serving beam.
            assert_relative_eq!(
                s.sinr_db,
                s.serving_rsrp_dbm - noise_per_re_dbm(30.0, 9.0),
                epsilon = 1e-9
            );
        }
        assert!(log.events.is_empty());
    }

    #[test]
    fn identical_runs_are_identical_logs() {
        let mut cfg = ScenarioConfig::default();
        cfg.sim_duration = 2.0;
        cfg.num_ues = 5;
        cfg.antenna_elements = 16;
        let a = run(&cfg).unwrap();
        let b = run(&cfg).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn samples_respect_the_metric_invariants() {
        let mut cfg = ScenarioConfig::default();
        cfg.sim_duration = 3.0;
        cfg.num_ues = 8;
        cfg.antenna_elements = 16;
        cfg.rng_seed = 11;
        let log = run(&cfg).unwrap();
        assert_eq!(log.samples.len(), 30 * 8);
        let mut last_t = 0.0;
        for s in &log.samples {
            assert!(s.best_rsrp_dbm >= s.serving_rsrp_dbm);
            assert!(s.delta_rsrp_db >= 0.0);
            assert!(s.time >= last_t);
            last_t = s.time;
        }
    }

    #[test]
    fn single_cell_deployments_never_hand_over() {
        let mut cfg = ScenarioConfig::default();
        cfg.num_sites = 1;
        cfg.sectors_per_site = 1;
        cfg.num_ues = 6;
        cfg.sim_duration = 5.0;
        cfg.antenna_elements = 16;
        let log = run(&cfg).unwrap();
        assert!(log.events.is_empty());
    }

    #[test]
    fn event_log_is_ordered_and_self_consistent() {
        let mut cfg = ScenarioConfig::default();
        cfg.sim_duration = 30.0;
        cfg.num_ues = 10;
        cfg.antenna_elements = 16;
        cfg.rng_seed = 3;
        cfg.handover.hysteresis = 0.0;
        let log = run(&cfg).unwrap();
        assert!(
            !log.events.is_empty(),
            "a 30 s hysteresis-free run should hand over at least once"
        );
        for pair in log.events.windows(2) {
            assert!(
                pair[0].time < pair[1].time
                    || (pair[0].time == pair[1].time && pair[0].ue_id <= pair[1].ue_id)
            );
        }
        for e in &log.events {
            assert_ne!(e.source_cell, e.target_cell);
            assert!(e.time <= cfg.sim_duration + 1e-9);
            if e.outcome == crate::handover::HandoverOutcome::Pingpong {
                let anchored = log.events.iter().any(|p| {
                    p.ue_id == e.ue_id
                        && p.outcome == crate::handover::HandoverOutcome::Success
                        && p.source_cell == e.target_cell
                        && p.target_cell == e.source_cell
                        && e.time - p.time <= cfg.handover.pingpong_window + 1e-9
                        && p.time < e.time
                });
                assert!(anchored, "unanchored ping-pong event {e:?}");
            }
        }
    }

    // -- distributions ---------------------------------------------------------

    #[test]
    fn cdf_of_tiny_samples() {
        assert_eq!(cdf(&[-80.0]).unwrap(), vec![(-80.0, 1.0)]);
        assert_eq!(
            cdf(&[-80.0, -90.0]).unwrap(),
            vec![(-90.0, 0.5), (-80.0, 1.0)]
        );
        assert!(matches!(cdf(&[]), Err(EngineError::EmptyDistribution)));
    }

    #[test]
    fn median_of_many_standard_normals_is_near_zero() {
        let mut rng = ChaCha8Rng::seed_from_u64(123);
        let draws: Vec<f64> = (0..1001).map(|_| StandardNormal.sample(&mut rng)).collect();
        let m = median(&draws).unwrap();
        assert!(m.abs() < 0.1, "median drifted to {m}");
    }

    #[test]
    fn percentile_picks_the_first_qualifying_sorted_value() {
        let v = [4.0, 1.0, 3.0, 2.0];
        assert_eq!(percentile(&v, 0.25).unwrap(), 1.0);
        assert_eq!(percentile(&v, 0.5).unwrap(), 2.0);
        assert_eq!(percentile(&v, 1.0).unwrap(), 4.0);
    }

    // -- coverage --------------------------------------------------------------

    #[test]
    fn coverage_rows_match_the_request_and_scale_with_elements() {
        let mut cfg = ScenarioConfig::default();
        cfg.rng_seed = 5;
        let map = coverage_map(&cfg, 28.0, 300).unwrap();
        assert_eq!(map.rows.len(), 300);
        assert_eq!(map.element_counts, vec![16, 32, 64, 128]);
        let e16 = 0;
        let e128 = 3;
        for row in &map.rows {
            assert!(
                row.rsrp_dbm[e128] >= row.rsrp_dbm[e16],
                "at ({}, {}): 128-element map {} under 16-element {}",
                row.x_m,
                row.y_m,
                row.rsrp_dbm[e128],
                row.rsrp_dbm[e16]
            );
            assert!(row.rsrp_nbf_dbm <= row.rsrp_dbm[e16]);
        }
    }

    #[test]
    fn nbf_column_is_the_bare_element_field() {
        // With every sweep entry mapped to a 1x1 panel the beamformed and
        // baseline columns coincide.
        let mut cfg = ScenarioConfig::default();
        cfg.element_sweep = vec![1];
        cfg.antenna_elements = 1;
        cfg.antenna.array_shapes = vec![[1, 1, 1]];
        cfg.antenna.zenith_layers = Some(1);
        let map = coverage_map(&cfg, 28.0, 50).unwrap();
        for row in &map.rows {
            assert_relative_eq!(row.rsrp_dbm[0], row.rsrp_nbf_dbm, epsilon = 1e-9);
        }
    }

    #[test]
    fn grid_summary_lists_every_beam_with_its_peak() {
        let mut cfg = ScenarioConfig::default();
        cfg.antenna_elements = 64;
        let rows = grid_summary(&cfg).unwrap();
        assert_eq!(rows.len(), 64);
        let pattern = element_pattern(&cfg);
        for (i, (id, az, zen, peak)) in rows.iter().enumerate() {
            assert_eq!(*id, i);
            assert!(az.abs() < 60.0);
            // On its own steer a matched beam adds exactly the full array
            // term on top of whatever the element pattern leaves there.
            let expect = pattern.gain(*az, *zen).unwrap() + 10.0 * 64f64.log10();
            assert_relative_eq!(*peak, expect, epsilon = 1e-9);
        }
    }
}
