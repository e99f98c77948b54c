//! Scenario definition: configuration schema with defaults, the TOML parser
//! with strict key checking, deployment layout (sites/sectors) and initial
//! UE placement.
//!
//! All distances are metres, powers dBm, frequencies GHz (carrier) / MHz
//! (bandwidth) / kHz (subcarrier spacing), durations seconds, UE speeds km/h.

use crate::antenna::ArrayGeometry;
use crate::geo::{convex_hull, dist_to_hull, Bounds, Vec2};
use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("scenario file syntax error: {0}")]
    Syntax(#[from] toml::de::Error),
    #[error("invalid scenario: {0}")]
    Validation(String),
}

fn invalid(msg: impl Into<String>) -> ConfigError {
    ConfigError::Validation(msg.into())
}

// ===========================================================================
// Configuration schema
// ===========================================================================

/// Top-level scenario description. Every field has a default so an empty
/// document is a valid scenario; unknown keys are rejected.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioConfig {
    /// Number of three-sector macro sites.
    pub num_sites: usize,
    /// Sectors per site, laid out with evenly split bearings.
    pub sectors_per_site: usize,
    /// Distance between neighbouring sites (m).
    pub inter_site_distance: f64,
    /// Base-station antenna height (m).
    pub bs_height: f64,
    /// UE antenna height (m).
    pub ue_height: f64,
    /// Base-station transmit power (dBm), spread over the carrier bandwidth.
    pub bs_tx_power: f64,
    /// UE transmit power (dBm). Carried for completeness; the downlink-only
    /// simulation never reads it.
    pub ue_tx_power: f64,
    /// Carrier frequency (GHz).
    pub carrier_frequency: f64,
    /// Carrier bandwidth (MHz).
    pub bandwidth: f64,
    /// Subcarrier spacing (kHz).
    pub subcarrier_spacing: f64,
    /// Antenna elements per sector array for a single run. Must be one of
    /// `element_sweep` and have a shape in `antenna.array_shapes`.
    pub antenna_elements: usize,
    /// Element counts swept by the CLI `run` command.
    pub element_sweep: Vec<usize>,
    /// Number of UEs dropped into the deployment.
    pub num_ues: usize,
    /// `[min, max]` UE speed (km/h); each UE draws one constant speed.
    pub ue_speed_range: [f64; 2],
    /// Fraction of UEs placed indoors (0..=1).
    pub indoor_fraction: f64,
    /// Simulated time (s).
    pub sim_duration: f64,
    /// Fixed step of the simulation loop (s).
    pub time_step: f64,
    /// Master seed; every stochastic stream derives from it.
    pub rng_seed: u64,
    /// Optional fixed UE drop (one `[x, y]` per UE, metres). When set, its
    /// length must equal `num_ues`; speeds/indoor states are still drawn.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ue_positions: Option<Vec<[f64; 2]>>,
    pub antenna: AntennaConfig,
    pub channel: ChannelConfig,
    pub rrm: RrmConfig,
    pub handover: HandoverConfig,
    pub traffic: TrafficConfig,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        ScenarioConfig {
            num_sites: 3,
            sectors_per_site: 3,
            inter_site_distance: 500.0,
            bs_height: 25.0,
            ue_height: 1.5,
            bs_tx_power: 43.0,
            ue_tx_power: 23.0,
            carrier_frequency: 3.5,
            bandwidth: 40.0,
            subcarrier_spacing: 30.0,
            antenna_elements: 64,
            element_sweep: vec![16, 32, 64, 128],
            num_ues: 15,
            ue_speed_range: [3.0, 30.0],
            indoor_fraction: 0.5,
            sim_duration: 60.0,
            time_step: 0.1,
            rng_seed: 1,
            ue_positions: None,
            antenna: AntennaConfig::default(),
            channel: ChannelConfig::default(),
            rrm: RrmConfig::default(),
            handover: HandoverConfig::default(),
            traffic: TrafficConfig::default(),
        }
    }
}

/// Sector array and beam-grid shape parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AntennaConfig {
    /// `[vertical, horizontal]` element spacing in wavelengths.
    pub element_spacing: [f64; 2],
    /// Electrical downtilt applied to the zenith steering centre (deg).
    pub downtilt: f64,
    /// Peak element gain (dBi).
    pub gain_max: f64,
    /// 3 dB beamwidth of the element pattern, both planes (deg).
    pub beamwidth_3db: f64,
    /// Front-to-back attenuation cap of the element pattern (dB).
    pub front_to_back: f64,
    /// Vertical side-lobe attenuation cap of the element pattern (dB).
    pub sla_v: f64,
    /// Azimuth span covered by the beam grid, centred on boresight (deg).
    pub azimuth_span: f64,
    /// Azimuth steering oversampling (1 = one beam per array column).
    pub azimuth_oversampling: usize,
    /// Zenith steering layers; defaults to the number of array rows.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub zenith_layers: Option<usize>,
    /// `[elements, rows, cols]` triples mapping an element count to the
    /// panel shape used for it.
    pub array_shapes: Vec<[usize; 3]>,
}

impl Default for AntennaConfig {
    fn default() -> Self {
        AntennaConfig {
            element_spacing: [0.5, 0.5],
            downtilt: 6.0,
            gain_max: 8.0,
            beamwidth_3db: 65.0,
            front_to_back: 30.0,
            sla_v: 30.0,
            azimuth_span: 120.0,
            azimuth_oversampling: 1,
            zenith_layers: None,
            array_shapes: vec![[16, 2, 8], [32, 4, 8], [64, 8, 8], [128, 8, 16]],
        }
    }
}

impl AntennaConfig {
    /// Panel shape for an element count, from `array_shapes`.
    pub fn shape_for(&self, elements: usize) -> Result<ArrayGeometry, ConfigError> {
        let [_, rows, cols] = *self
            .array_shapes
            .iter()
            .find(|s| s[0] == elements)
            .ok_or_else(|| {
                invalid(format!(
                    "antenna.array_shapes has no entry for {elements} elements"
                ))
            })?;
        ArrayGeometry::with_spacing(rows, cols, self.element_spacing[0], self.element_spacing[1])
            .map_err(|e| invalid(format!("antenna.array_shapes[{elements}]: {e}")))
    }
}

/// How the line-of-sight state of a link is decided.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LosMode {
    /// Distance-dependent Bernoulli draw, re-drawn after large displacement.
    Probabilistic,
    AlwaysLos,
    AlwaysNlos,
}

/// Large-scale channel parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ChannelConfig {
    /// Disable to get a deterministic field (used by coverage maps).
    pub shadow_enabled: bool,
    /// Shadow-fading standard deviation on LOS links (dB).
    pub shadow_sigma_los: f64,
    /// Shadow-fading standard deviation on NLOS links (dB).
    pub shadow_sigma_nlos: f64,
    /// Shadow decorrelation distance on LOS links (m).
    pub shadow_corr_dist_los: f64,
    /// Shadow decorrelation distance on NLOS links (m).
    pub shadow_corr_dist_nlos: f64,
    pub los_mode: LosMode,
    /// External wall loss applied to indoor UEs (dB).
    pub wall_loss: f64,
    /// Additional indoor loss per metre of penetration depth (dB/m).
    pub indoor_loss_per_meter: f64,
    /// Indoor depth is drawn uniformly from [0, this] at UE creation (m).
    pub indoor_depth_max: f64,
    /// UE receiver noise figure (dB), used only by the SINR column.
    pub noise_figure: f64,
}

impl Default for ChannelConfig {
    fn default() -> Self {
        ChannelConfig {
            shadow_enabled: true,
            shadow_sigma_los: 4.0,
            shadow_sigma_nlos: 6.0,
            shadow_corr_dist_los: 37.0,
            shadow_corr_dist_nlos: 50.0,
            los_mode: LosMode::Probabilistic,
            wall_loss: 20.0,
            indoor_loss_per_meter: 0.5,
            indoor_depth_max: 25.0,
            noise_figure: 9.0,
        }
    }
}

/// Measurement-model parameters: beam sweep, L1 averaging, cell
/// consolidation and L3 smoothing.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RrmConfig {
    /// Beams consolidated into a cell quality (the "N best").
    pub n_best_beams: usize,
    /// Beams below this value (dBm) never contribute to consolidation.
    pub abs_threshold: f64,
    /// L1 moving-average window (samples).
    pub l1_window: usize,
    /// L3 filter coefficient index; the weight of a new sample is
    /// `1 / 2^(l3_k / 4)`.
    pub l3_k: f64,
    /// Per-cell beam entries included in a measurement report.
    pub report_max_beams: usize,
    /// Beams below this true value (dBm) are invisible to a UE sweep.
    pub ue_detectable_threshold: f64,
    /// Interval between UE beam sweeps (s).
    pub sweep_period: f64,
}

impl Default for RrmConfig {
    fn default() -> Self {
        RrmConfig {
            n_best_beams: 4,
            abs_threshold: -110.0,
            l1_window: 5,
            l3_k: 4.0,
            report_max_beams: 4,
            ue_detectable_threshold: -120.0,
            sweep_period: 0.02,
        }
    }
}

/// A3-style handover parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HandoverConfig {
    /// Margin a neighbour must exceed the serving cell by (dB).
    pub hysteresis: f64,
    /// Time the entry condition must hold continuously (s).
    pub time_to_trigger: f64,
    /// Delay between trigger and the switch taking effect (s).
    pub prep_delay: f64,
    /// Traffic interruption after the switch (s).
    pub exec_interruption: f64,
    /// Returning to the just-left cell within this window is a ping-pong (s).
    pub pingpong_window: f64,
    /// Source-cell quality below this at execution marks a failure (dBm).
    pub fail_rsrp_threshold: f64,
}

impl Default for HandoverConfig {
    fn default() -> Self {
        HandoverConfig {
            hysteresis: 3.0,
            time_to_trigger: 0.16,
            prep_delay: 0.05,
            exec_interruption: 0.03,
            pingpong_window: 1.0,
            fail_rsrp_threshold: -120.0,
        }
    }
}

/// FTP-style chunked download model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrafficConfig {
    /// File size per session (Mbit).
    pub file_size: f64,
    /// Chunks the file is split into.
    pub num_chunks: usize,
    /// Size of one chunk (Mbit).
    pub chunk_size: f64,
    /// Pause between a chunk completing and the next starting (s).
    pub chunk_interval: f64,
}

impl Default for TrafficConfig {
    fn default() -> Self {
        TrafficConfig {
            file_size: 200.0,
            num_chunks: 10,
            chunk_size: 20.0,
            chunk_interval: 1.5,
        }
    }
}

// ===========================================================================
// Parsing and validation
// ===========================================================================

/// Parse a TOML scenario document, fill defaults and validate it.
pub fn parse_config(text: &str) -> Result<ScenarioConfig, ConfigError> {
    let cfg: ScenarioConfig = toml::from_str(text)?;
    cfg.validate()?;
    Ok(cfg)
}

impl ScenarioConfig {
    /// Check every cross-field rule; the message names the violated rule.
    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.num_sites == 0 {
            return Err(invalid("num_sites must be >= 1"));
        }
        if self.sectors_per_site == 0 {
            return Err(invalid("sectors_per_site must be >= 1"));
        }
        if !(self.inter_site_distance > 0.0) {
            return Err(invalid("inter_site_distance must be > 0"));
        }
        if !(self.bs_height > self.ue_height) || !(self.ue_height > 0.0) {
            return Err(invalid("heights must satisfy bs_height > ue_height > 0"));
        }
        if !(self.carrier_frequency > 0.0) {
            return Err(invalid("carrier_frequency must be > 0"));
        }
        if !(self.time_step > 0.0) {
            return Err(invalid("time_step must be > 0"));
        }
        if !(self.sim_duration >= 0.0) {
            return Err(invalid("sim_duration must be >= 0"));
        }
        let [lo, hi] = self.ue_speed_range;
        if !(lo >= 0.0 && hi >= lo) {
            return Err(invalid(
                "ue_speed_range must satisfy 0 <= min <= max (km/h)",
            ));
        }
        if !(0.0..=1.0).contains(&self.indoor_fraction) {
            return Err(invalid("indoor_fraction must lie in [0, 1]"));
        }
        if !self.element_sweep.contains(&self.antenna_elements) {
            return Err(invalid(format!(
                "antenna_elements {} is not part of element_sweep {:?}",
                self.antenna_elements, self.element_sweep
            )));
        }
        if let Some(pos) = &self.ue_positions {
            if pos.len() != self.num_ues {
                return Err(invalid(format!(
                    "ue_positions has {} entries but num_ues is {}",
                    pos.len(),
                    self.num_ues
                )));
            }
        }
        // Every sweep entry must resolve to a panel shape.
        for &e in &self.element_sweep {
            self.antenna.shape_for(e)?;
        }
        self.antenna.validate()?;
        self.channel.validate()?;
        self.rrm.validate()?;
        self.handover.validate()?;
        self.traffic.validate()?;
        // The resource-grid size must be resolvable for the per-RE power.
        crate::channel::prb_count(self.bandwidth, self.subcarrier_spacing)
            .map_err(|e| invalid(e.to_string()))?;
        Ok(())
    }

    /// Serialize the effective configuration (defaults filled in).
    pub fn to_toml_string(&self) -> String {
        toml::to_string_pretty(self).expect("config serializes")
    }

    /// Per-resource-element transmit power (dBm).
    pub fn per_re_power_dbm(&self) -> f64 {
        let n_prb = crate::channel::prb_count(self.bandwidth, self.subcarrier_spacing)
            .expect("validated config");
        crate::channel::per_re_power_dbm(self.bs_tx_power, n_prb)
    }

    /// Geometry of one sector panel for the configured element count.
    pub fn array_geometry(&self) -> Result<ArrayGeometry, ConfigError> {
        self.antenna.shape_for(self.antenna_elements)
    }

    /// Rectangle the UEs move in: site bounding box inflated by half the
    /// inter-site distance.
    pub fn mobility_bounds(&self) -> Bounds {
        Bounds::around(&site_positions(self), self.inter_site_distance / 2.0)
    }
}

impl AntennaConfig {
    fn validate(&self) -> Result<(), ConfigError> {
        if !(self.element_spacing[0] > 0.0 && self.element_spacing[1] > 0.0) {
            return Err(invalid("antenna.element_spacing entries must be > 0"));
        }
        if !(self.beamwidth_3db > 0.0) {
            return Err(invalid("antenna.beamwidth_3db must be > 0"));
        }
        if !(self.azimuth_span > 0.0 && self.azimuth_span <= 360.0) {
            return Err(invalid("antenna.azimuth_span must lie in (0, 360]"));
        }
        if self.azimuth_oversampling == 0 {
            return Err(invalid("antenna.azimuth_oversampling must be >= 1"));
        }
        if self.zenith_layers == Some(0) {
            return Err(invalid("antenna.zenith_layers must be >= 1 when set"));
        }
        for s in &self.array_shapes {
            if s[1] * s[2] != s[0] {
                return Err(invalid(format!(
                    "antenna.array_shapes entry {s:?} is inconsistent (rows*cols != elements)"
                )));
            }
        }
        Ok(())
    }
}

impl ChannelConfig {
    fn validate(&self) -> Result<(), ConfigError> {
        if !(self.shadow_sigma_los >= 0.0 && self.shadow_sigma_nlos >= 0.0) {
            return Err(invalid("channel shadow sigmas must be >= 0"));
        }
        if !(self.shadow_corr_dist_los > 0.0 && self.shadow_corr_dist_nlos > 0.0) {
            return Err(invalid(
                "channel shadow decorrelation distances must be > 0",
            ));
        }
        if !(self.indoor_depth_max >= 0.0) {
            return Err(invalid("channel.indoor_depth_max must be >= 0"));
        }
        Ok(())
    }
}

impl RrmConfig {
    fn validate(&self) -> Result<(), ConfigError> {
        if self.n_best_beams == 0 {
            return Err(invalid("rrm.n_best_beams must be >= 1"));
        }
        if self.l1_window == 0 {
            return Err(invalid("rrm.l1_window must be >= 1"));
        }
        if !(self.l3_k >= 0.0) {
            return Err(invalid("rrm.l3_k must be >= 0"));
        }
        if self.report_max_beams > self.n_best_beams {
            return Err(invalid(
                "rrm.report_max_beams must not exceed rrm.n_best_beams",
            ));
        }
        if !(self.sweep_period > 0.0) {
            return Err(invalid("rrm.sweep_period must be > 0"));
        }
        Ok(())
    }
}

impl HandoverConfig {
    fn validate(&self) -> Result<(), ConfigError> {
        if !(self.hysteresis >= 0.0) {
            return Err(invalid("handover.hysteresis must be >= 0"));
        }
        if !(self.time_to_trigger >= 0.0) {
            return Err(invalid("handover.time_to_trigger must be >= 0"));
        }
        if !(self.prep_delay >= 0.0) {
            return Err(invalid("handover.prep_delay must be >= 0"));
        }
        if !(self.exec_interruption >= 0.0) {
            return Err(invalid("handover.exec_interruption must be >= 0"));
        }
        if !(self.pingpong_window > 0.0) {
            return Err(invalid("handover.pingpong_window must be > 0"));
        }
        Ok(())
    }
}

impl TrafficConfig {
    fn validate(&self) -> Result<(), ConfigError> {
        if self.num_chunks == 0 {
            return Err(invalid("traffic.num_chunks must be >= 1"));
        }
        let total = self.num_chunks as f64 * self.chunk_size;
        if (total - self.file_size).abs() > 1e-9 * self.file_size.max(1.0) {
            return Err(invalid(format!(
                "traffic.num_chunks * traffic.chunk_size = {total} Mbit does not equal traffic.file_size = {} Mbit",
                self.file_size
            )));
        }
        if !(self.chunk_interval > 0.0) {
            return Err(invalid("traffic.chunk_interval must be > 0"));
        }
        Ok(())
    }
}

// ===========================================================================
// Deployment layout
// ===========================================================================

/// One sector of a site: position shared with its siblings, its own bearing.
#[derive(Debug, Clone)]
pub struct SectorSite {
    pub site_id: usize,
    pub sector_id: usize,
    pub position: Vec2,
    /// Boresight bearing, degrees counter-clockwise from the +x axis.
    pub bearing_deg: f64,
    pub downtilt_deg: f64,
    pub array: ArrayGeometry,
}

/// Site positions on a triangular lattice: one centre site, then hexagonal
/// rings with `inter_site_distance` between lattice neighbours. The first
/// three sites form an equilateral triangle with that side length.
pub fn site_positions(cfg: &ScenarioConfig) -> Vec<Vec2> {
    let isd = cfg.inter_site_distance;
    let mut out = vec![Vec2::new(0.0, 0.0)];
    let mut ring = 1usize;
    while out.len() < cfg.num_sites {
        // Walk the hexagonal ring: 6 corners at radius ring*isd with
        // ring-1 evenly spaced sites along each edge.
        let corners: Vec<Vec2> = (0..6)
            .map(|k| {
                let a = (k as f64) * 60f64.to_radians();
                Vec2::new(ring as f64 * isd * a.cos(), ring as f64 * isd * a.sin())
            })
            .collect();
        'ring: for k in 0..6 {
            let a = corners[k];
            let b = corners[(k + 1) % 6];
            for step in 0..ring {
                let t = step as f64 / ring as f64;
                out.push(a + (b - a).scale(t));
                if out.len() == cfg.num_sites {
                    break 'ring;
                }
            }
        }
        ring += 1;
    }
    out.truncate(cfg.num_sites);
    out
}

/// Expand the configuration into the list of sectors.
pub fn build_deployment(cfg: &ScenarioConfig) -> Result<Vec<SectorSite>, ConfigError> {
    cfg.validate()?;
    let array = cfg.array_geometry()?;
    let sites = site_positions(cfg);
    let mut sectors = Vec::with_capacity(cfg.num_sites * cfg.sectors_per_site);
    let split = 360.0 / cfg.sectors_per_site as f64;
    for (site_id, &position) in sites.iter().enumerate() {
        for s in 0..cfg.sectors_per_site {
            sectors.push(SectorSite {
                site_id,
                sector_id: site_id * cfg.sectors_per_site + s,
                position,
                bearing_deg: s as f64 * split,
                downtilt_deg: cfg.antenna.downtilt,
                array: array.clone(),
            });
        }
    }
    Ok(sectors)
}

// ===========================================================================
// UE state and placement
// ===========================================================================

/// Connection endpoint of a UE: a sector and one beam of its grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ServingLink {
    pub cell: usize,
    pub beam: usize,
}

/// Kinematic and attachment state of one UE. Measurement and traffic state
/// live beside it in the engine.
#[derive(Debug, Clone)]
pub struct UeState {
    pub ue_id: usize,
    pub position: Vec2,
    pub velocity: Vec2,
    /// Constant travel speed (m/s); the velocity direction changes at
    /// waypoints but its magnitude stays at this value.
    pub speed_mps: f64,
    pub indoor: bool,
    /// Penetration depth behind the external wall (m); 0 for outdoor UEs.
    pub indoor_depth_m: f64,
    /// Current random-waypoint target.
    pub waypoint: Vec2,
    /// Attachment, set by the engine once initial RSRPs are known.
    pub serving: Option<ServingLink>,
}

/// Drop `num_ues` UEs uniformly into the convex hull of the sites expanded
/// by half the inter-site distance, and draw their per-UE constants. The
/// same seed always yields the same drop.
pub fn place_ues(cfg: &ScenarioConfig, rng: &mut impl Rng) -> Vec<UeState> {
    let sites = site_positions(cfg);
    let hull = convex_hull(&sites);
    let margin = cfg.inter_site_distance / 2.0;
    let bounds = Bounds::around(&sites, margin);
    let mut ues = Vec::with_capacity(cfg.num_ues);
    for ue_id in 0..cfg.num_ues {
        let position = match &cfg.ue_positions {
            Some(fixed) => Vec2::new(fixed[ue_id][0], fixed[ue_id][1]),
            None => loop {
                let p = Vec2::new(
                    rng.gen_range(bounds.min.x..=bounds.max.x),
                    rng.gen_range(bounds.min.y..=bounds.max.y),
                );
                if dist_to_hull(p, &hull) <= margin {
                    break p;
                }
            },
        };
        let [lo, hi] = cfg.ue_speed_range;
        let speed_kmh = if hi > lo { rng.gen_range(lo..=hi) } else { lo };
        let speed_mps = speed_kmh / 3.6;
        // Draw the remaining per-UE constants unconditionally so the stream
        // position never depends on earlier outcomes.
        let indoor_draw: f64 = rng.gen();
        let depth_draw: f64 = rng.gen_range(0.0..=cfg.channel.indoor_depth_max);
        let waypoint = Vec2::new(
            rng.gen_range(bounds.min.x..=bounds.max.x),
            rng.gen_range(bounds.min.y..=bounds.max.y),
        );
        let indoor = indoor_draw < cfg.indoor_fraction;
        let dir = waypoint - position;
        let dir_norm = dir.norm();
        let velocity = if dir_norm > 1e-12 {
            dir.scale(speed_mps / dir_norm)
        } else {
            Vec2::new(speed_mps, 0.0)
        };
        ues.push(UeState {
            ue_id,
            position,
            velocity,
            speed_mps,
            indoor,
            indoor_depth_m: if indoor { depth_draw } else { 0.0 },
            waypoint,
            serving: None,
        });
    }
    ues
}
