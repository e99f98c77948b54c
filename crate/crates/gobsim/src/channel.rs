//! Large-scale radio channel between a UE and a site: urban-macro pathloss,
//! distance-driven line-of-sight, spatially correlated shadow fading,
//! building penetration, and the per-resource-element RSRP a beam delivers.

use crate::antenna::{beam_gain, AntennaError, Beam, ElementPattern};
use crate::config::{ChannelConfig, LosMode, SectorSite};
use crate::geo::{wrap_deg, Vec2};
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum ChannelError {
    #[error("3D distance {0} m is below the 1 m model floor")]
    DistanceTooSmall(f64),
    #[error(
        "unsupported numerology: {bandwidth_mhz} MHz carrier at {scs_khz} kHz subcarrier spacing"
    )]
    UnsupportedNumerology { bandwidth_mhz: f64, scs_khz: f64 },
    #[error(transparent)]
    Antenna(#[from] AntennaError),
}

// ===========================================================================
// Pathloss and line of sight
// ===========================================================================

/// Urban-macro pathloss (dB) at `d3d` metres and `fc_ghz` GHz. The NLOS
/// branch is floored by the LOS value. Valid from 1 m outward.
pub fn pathloss(los: bool, d3d_m: f64, fc_ghz: f64, ue_height_m: f64) -> Result<f64, ChannelError> {
    if !(d3d_m >= 1.0) {
        return Err(ChannelError::DistanceTooSmall(d3d_m));
    }
    let pl_los = 28.0 + 22.0 * d3d_m.log10() + 20.0 * fc_ghz.log10();
    if los {
        Ok(pl_los)
    } else {
        let pl_nlos =
            13.54 + 39.08 * d3d_m.log10() + 20.0 * fc_ghz.log10() - 0.6 * (ue_height_m - 1.5);
        Ok(pl_los.max(pl_nlos))
    }
}

/// Probability that a link of ground distance `d2d` is line-of-sight.
pub fn los_probability(d2d_m: f64) -> f64 {
    if d2d_m <= 18.0 {
        1.0
    } else {
        18.0 / d2d_m + (-d2d_m / 63.0).exp() * (1.0 - 18.0 / d2d_m)
    }
}

/// Draw a LOS state for a link according to the configured mode.
pub fn sample_los(d2d_m: f64, mode: LosMode, rng: &mut impl Rng) -> bool {
    match mode {
        LosMode::AlwaysLos => true,
        LosMode::AlwaysNlos => false,
        LosMode::Probabilistic => rng.gen::<f64>() < los_probability(d2d_m),
    }
}

/// Median LOS state: true where the LOS probability is at least one half.
/// Coverage maps use this so the field stays deterministic.
pub fn median_los(d2d_m: f64) -> bool {
    los_probability(d2d_m) >= 0.5
}

// ===========================================================================
// Shadow fading
// ===========================================================================

/// Exponential shadow autocorrelation over a moved distance.
#[inline]
pub fn shadow_correlation(delta_d_m: f64, corr_dist_m: f64) -> f64 {
    (-delta_d_m / corr_dist_m).exp()
}

fn shadow_sigma(cfg: &ChannelConfig, los: bool) -> f64 {
    if los {
        cfg.shadow_sigma_los
    } else {
        cfg.shadow_sigma_nlos
    }
}

fn shadow_corr_dist(cfg: &ChannelConfig, los: bool) -> f64 {
    if los {
        cfg.shadow_corr_dist_los
    } else {
        cfg.shadow_corr_dist_nlos
    }
}

// ===========================================================================
// Penetration
// ===========================================================================

/// Building entry loss (dB): a wall loss plus a per-metre depth term for
/// indoor UEs, zero outdoors.
pub fn penetration_loss(indoor: bool, depth_m: f64, cfg: &ChannelConfig) -> f64 {
    if indoor {
        cfg.wall_loss + cfg.indoor_loss_per_meter * depth_m
    } else {
        0.0
    }
}

// ===========================================================================
// Resource grid
// ===========================================================================

/// Resource blocks available in a carrier, from the standard FR1
/// transmission-bandwidth tables.
pub fn prb_count(bandwidth_mhz: f64, scs_khz: f64) -> Result<usize, ChannelError> {
    let bw = bandwidth_mhz.round() as i64;
    let scs = scs_khz.round() as i64;
    let n = match (scs, bw) {
        (15, 5) => 25,
        (15, 10) => 52,
        (15, 15) => 79,
        (15, 20) => 106,
        (15, 25) => 133,
        (15, 30) => 160,
        (15, 40) => 216,
        (15, 50) => 270,
        (30, 5) => 11,
        (30, 10) => 24,
        (30, 15) => 38,
        (30, 20) => 51,
        (30, 25) => 65,
        (30, 30) => 78,
        (30, 40) => 106,
        (30, 50) => 133,
        (30, 60) => 162,
        (30, 70) => 189,
        (30, 80) => 217,
        (30, 90) => 245,
        (30, 100) => 273,
        (60, 10) => 11,
        (60, 15) => 18,
        (60, 20) => 24,
        (60, 25) => 31,
        (60, 30) => 38,
        (60, 40) => 51,
        (60, 50) => 65,
        (60, 60) => 79,
        (60, 70) => 93,
        (60, 80) => 107,
        (60, 90) => 121,
        (60, 100) => 135,
        _ => {
            return Err(ChannelError::UnsupportedNumerology {
                bandwidth_mhz,
                scs_khz,
            })
        }
    };
    Ok(n)
}

/// Transmit power of a single resource element (dBm) when the carrier power
/// is spread evenly over all subcarriers.
pub fn per_re_power_dbm(tx_power_dbm: f64, n_prb: usize) -> f64 {
    tx_power_dbm - 10.0 * (12.0 * n_prb as f64).log10()
}

/// Thermal noise in one resource element's bandwidth (dBm), including the
/// receiver noise figure.
pub fn noise_per_re_dbm(scs_khz: f64, noise_figure_db: f64) -> f64 {
    -174.0 + 10.0 * (scs_khz * 1e3).log10() + noise_figure_db
}

// ===========================================================================
// Link state
// ===========================================================================

/// Large-scale channel realization between one UE and one site. Sectors of
/// a site are co-located, so they share this state; only the per-sector
/// antenna response differs.
#[derive(Debug, Clone)]
pub struct LinkState {
    pub ue_id: usize,
    pub site_id: usize,
    pub d2d_m: f64,
    pub d3d_m: f64,
    pub los: bool,
    pub shadow_db: f64,
    pub penetration_db: f64,
    /// UE position at the last shadow update.
    pub ue_position: Vec2,
    /// Ground distance at which the LOS state was last drawn.
    los_anchor_d2d: f64,
}

/// Heights and radio constants needed to evaluate a link.
#[derive(Debug, Clone, Copy)]
pub struct RadioParams {
    pub p_re_dbm: f64,
    pub fc_ghz: f64,
    pub bs_height_m: f64,
    pub ue_height_m: f64,
}

impl LinkState {
    /// Create the link at the UE's initial position: geometry, a LOS draw,
    /// a shadow sample from the stationary distribution and the fixed
    /// penetration loss.
    #[allow(clippy::too_many_arguments)]
    pub fn init(
        ue_id: usize,
        site_id: usize,
        site_pos: Vec2,
        ue_pos: Vec2,
        indoor: bool,
        indoor_depth_m: f64,
        params: &RadioParams,
        cfg: &ChannelConfig,
        rng: &mut impl Rng,
    ) -> LinkState {
        let d2d = site_pos.dist(ue_pos);
        let dh = params.bs_height_m - params.ue_height_m;
        let d3d = d2d.hypot(dh);
        let los = sample_los(d2d, cfg.los_mode, rng);
        let shadow = if cfg.shadow_enabled {
            let z: f64 = StandardNormal.sample(rng);
            shadow_sigma(cfg, los) * z
        } else {
            0.0
        };
        LinkState {
            ue_id,
            site_id,
            d2d_m: d2d,
            d3d_m: d3d,
            los,
            shadow_db: shadow,
            penetration_db: penetration_loss(indoor, indoor_depth_m, cfg),
            ue_position: ue_pos,
            los_anchor_d2d: d2d,
        }
    }

    /// Refresh the distances for a new UE position.
    pub fn update_geometry(&mut self, site_pos: Vec2, ue_pos: Vec2, params: &RadioParams) {
        self.d2d_m = site_pos.dist(ue_pos);
        let dh = params.bs_height_m - params.ue_height_m;
        self.d3d_m = self.d2d_m.hypot(dh);
    }

    /// Re-draw the LOS state once the ground distance has drifted more than
    /// a decorrelation distance away from where it was last drawn.
    pub fn maybe_resample_los(&mut self, cfg: &ChannelConfig, rng: &mut impl Rng) {
        if (self.d2d_m - self.los_anchor_d2d).abs() > shadow_corr_dist(cfg, self.los) {
            self.los = sample_los(self.d2d_m, cfg.los_mode, rng);
            self.los_anchor_d2d = self.d2d_m;
        }
    }

    /// Pathloss of this link (dB).
    pub fn pathloss_db(&self, params: &RadioParams) -> Result<f64, ChannelError> {
        pathloss(
            self.los,
            self.d3d_m.max(1.0),
            params.fc_ghz,
            params.ue_height_m,
        )
    }

    /// Direction from the sector to this link's UE, in the sector frame:
    /// (azimuth deg, zenith deg).
    pub fn direction_from(&self, sector: &SectorSite, params: &RadioParams) -> (f64, f64) {
        direction(
            sector.position,
            sector.bearing_deg,
            self.ue_position,
            params,
        )
    }
}

/// Direction from a sector at `sector_pos` with boresight `bearing_deg`
/// toward a UE, as (local azimuth deg in (-180, 180], zenith deg).
pub fn direction(
    sector_pos: Vec2,
    bearing_deg: f64,
    ue_pos: Vec2,
    params: &RadioParams,
) -> (f64, f64) {
    let d = ue_pos - sector_pos;
    let az_global = d.y.atan2(d.x).to_degrees();
    let az_local = wrap_deg(az_global - bearing_deg);
    let d2d = d.norm();
    let d3d = d2d.hypot(params.bs_height_m - params.ue_height_m);
    let zen = if d3d < 1e-12 {
        90.0
    } else {
        ((params.ue_height_m - params.bs_height_m) / d3d)
            .clamp(-1.0, 1.0)
            .acos()
            .to_degrees()
    };
    (az_local, zen)
}

/// Advance the shadow-fading process to the UE's new position: an
/// exponentially correlated Gauss-Markov step that preserves the stationary
/// deviation. A zero displacement leaves the sample untouched.
pub fn update_shadow(
    link: &mut LinkState,
    new_ue_pos: Vec2,
    cfg: &ChannelConfig,
    rng: &mut impl Rng,
) {
    let delta = link.ue_position.dist(new_ue_pos);
    link.ue_position = new_ue_pos;
    if delta <= 0.0 || !cfg.shadow_enabled {
        return;
    }
    let rho = shadow_correlation(delta, shadow_corr_dist(cfg, link.los));
    let sigma = shadow_sigma(cfg, link.los);
    let z: f64 = StandardNormal.sample(rng);
    link.shadow_db = rho * link.shadow_db + (1.0 - rho * rho).sqrt() * sigma * z;
}

/// RSRP (dBm) a beam of `sector` delivers over `link`: per-RE power plus
/// beam gain toward the UE, minus pathloss, shadow and penetration.
pub fn beam_rsrp(
    link: &LinkState,
    sector: &SectorSite,
    pattern: &ElementPattern,
    beam: &Beam,
    params: &RadioParams,
) -> Result<f64, ChannelError> {
    let (az, zen) = link.direction_from(sector, params);
    let gain = beam_gain(pattern, &sector.array, beam, az, zen)?;
    Ok(params.p_re_dbm + gain - link.pathloss_db(params)? - link.shadow_db - link.penetration_db)
}
