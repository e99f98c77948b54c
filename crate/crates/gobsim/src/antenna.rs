//! Sector antenna model: parabolic element pattern, uniform planar array
//! steering vectors, and the grid of conjugate-steered beams each sector
//! transmits on.
//!
//! Angles follow the local sector frame: azimuth in degrees from boresight
//! (positive counter-clockwise, valid range [-180, 180]) and zenith in
//! degrees from straight up (90 = horizon, valid range [0, 180]).
//!
//! Beam steering directions form a grid: azimuth centres evenly partition
//! the configured span, and zenith centres sit on the array's orthogonal
//! cos-space lattice (spacing `1 / (rows * element spacing)`) shifted so the
//! lattice is centred on the electrical downtilt. That keeps neighbouring
//! beams at the classic crossover overlap in both planes while letting the
//! tilt be tuned independently.

use num_complex::Complex64;
use std::f64::consts::PI;
use thiserror::Error;

/// Floor applied inside `log10` so a perfect pattern null still yields a
/// finite dB value (-120 dB array term).
const ARRAY_FACTOR_FLOOR: f64 = 1e-12;

#[derive(Debug, Error, PartialEq)]
pub enum AntennaError {
    #[error("azimuth {0} deg outside [-180, 180]")]
    AzimuthOutOfRange(f64),
    #[error("zenith {0} deg outside [0, 180]")]
    ZenithOutOfRange(f64),
    #[error("array needs at least one row and one column")]
    EmptyArray,
    #[error("element spacing must be > 0 wavelengths")]
    BadSpacing,
    #[error("zenith steering layers collide; reduce layers or downtilt")]
    ZenithLayerCollision,
}

// ===========================================================================
// Element pattern
// ===========================================================================

/// Parabolic single-element pattern with side-lobe floors, the standard
/// sector-antenna shape: 8 dBi peak, 65 deg beamwidth in both planes and a
/// 30 dB front-to-back cap by default.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ElementPattern {
    pub gain_max_dbi: f64,
    pub beamwidth_3db_deg: f64,
    /// Cap on horizontal and combined attenuation (dB).
    pub a_max_db: f64,
    /// Cap on vertical attenuation (dB).
    pub sla_v_db: f64,
}

impl Default for ElementPattern {
    fn default() -> Self {
        ElementPattern {
            gain_max_dbi: 8.0,
            beamwidth_3db_deg: 65.0,
            a_max_db: 30.0,
            sla_v_db: 30.0,
        }
    }
}

impl ElementPattern {
    /// Element gain (dBi) toward a direction in the sector frame.
    pub fn gain(&self, azimuth_deg: f64, zenith_deg: f64) -> Result<f64, AntennaError> {
        check_angles(azimuth_deg, zenith_deg)?;
        let bw = self.beamwidth_3db_deg;
        let att_v = (12.0 * ((zenith_deg - 90.0) / bw).powi(2)).min(self.sla_v_db);
        let att_h = (12.0 * (azimuth_deg / bw).powi(2)).min(self.a_max_db);
        Ok(self.gain_max_dbi - (att_v + att_h).min(self.a_max_db))
    }
}

fn check_angles(azimuth_deg: f64, zenith_deg: f64) -> Result<(), AntennaError> {
    if !(-180.0..=180.0).contains(&azimuth_deg) || !azimuth_deg.is_finite() {
        return Err(AntennaError::AzimuthOutOfRange(azimuth_deg));
    }
    if !(0.0..=180.0).contains(&zenith_deg) || !zenith_deg.is_finite() {
        return Err(AntennaError::ZenithOutOfRange(zenith_deg));
    }
    Ok(())
}

// ===========================================================================
// Array geometry and steering
// ===========================================================================

/// Uniform planar array: `rows` vertical by `cols` horizontal elements.
#[derive(Debug, Clone, PartialEq)]
pub struct ArrayGeometry {
    pub rows: usize,
    pub cols: usize,
    /// Vertical element spacing (wavelengths).
    pub spacing_v: f64,
    /// Horizontal element spacing (wavelengths).
    pub spacing_h: f64,
}

impl ArrayGeometry {
    /// Half-wavelength spaced panel.
    pub fn new(rows: usize, cols: usize) -> Result<Self, AntennaError> {
        Self::with_spacing(rows, cols, 0.5, 0.5)
    }

    pub fn with_spacing(
        rows: usize,
        cols: usize,
        spacing_v: f64,
        spacing_h: f64,
    ) -> Result<Self, AntennaError> {
        if rows == 0 || cols == 0 {
            return Err(AntennaError::EmptyArray);
        }
        if !(spacing_v > 0.0) || !(spacing_h > 0.0) {
            return Err(AntennaError::BadSpacing);
        }
        Ok(ArrayGeometry {
            rows,
            cols,
            spacing_v,
            spacing_h,
        })
    }

    pub fn total_elements(&self) -> usize {
        self.rows * self.cols
    }
}

/// Unit-magnitude phase response of every element toward a direction,
/// row-major (element `(m, n)` at index `m * cols + n`). The phase of
/// element `(m, n)` is `2*pi*(spacing_h*n*sin(zen)*sin(az) +
/// spacing_v*m*cos(zen))`.
pub fn steering_vector(
    geom: &ArrayGeometry,
    azimuth_deg: f64,
    zenith_deg: f64,
) -> Result<Vec<Complex64>, AntennaError> {
    check_angles(azimuth_deg, zenith_deg)?;
    let az = azimuth_deg.to_radians();
    let zen = zenith_deg.to_radians();
    let kh = 2.0 * PI * geom.spacing_h * zen.sin() * az.sin();
    let kv = 2.0 * PI * geom.spacing_v * zen.cos();
    let mut v = Vec::with_capacity(geom.total_elements());
    for m in 0..geom.rows {
        for n in 0..geom.cols {
            let phase = kh * n as f64 + kv * m as f64;
            v.push(Complex64::from_polar(1.0, phase));
        }
    }
    Ok(v)
}

// ===========================================================================
// Beams and the grid
// ===========================================================================

/// One transmit beam: a steering direction and the matched, unit-norm
/// weight vector for it.
#[derive(Debug, Clone)]
pub struct Beam {
    pub id: usize,
    pub azimuth_deg: f64,
    pub zenith_deg: f64,
    pub weights: Vec<Complex64>,
}

impl Beam {
    /// Conjugate-matched beam toward a direction: the steering vector
    /// scaled to unit norm (the conjugation happens in the inner product).
    pub fn steered(
        id: usize,
        geom: &ArrayGeometry,
        azimuth_deg: f64,
        zenith_deg: f64,
    ) -> Result<Beam, AntennaError> {
        let mut weights = steering_vector(geom, azimuth_deg, zenith_deg)?;
        let norm = (geom.total_elements() as f64).sqrt();
        for w in &mut weights {
            *w /= norm;
        }
        Ok(Beam {
            id,
            azimuth_deg,
            zenith_deg,
            weights,
        })
    }
}

/// Beam gain (dBi) of `beam` toward a direction: element gain plus the
/// array term `10*log10(|w^H v|^2)`. Finite for every direction; exact
/// pattern nulls are floored at -120 dB.
pub fn beam_gain(
    pattern: &ElementPattern,
    geom: &ArrayGeometry,
    beam: &Beam,
    azimuth_deg: f64,
    zenith_deg: f64,
) -> Result<f64, AntennaError> {
    let v = steering_vector(geom, azimuth_deg, zenith_deg)?;
    let response: Complex64 = beam.weights.iter().zip(&v).map(|(w, x)| w.conj() * x).sum();
    let af = response.norm_sqr().max(ARRAY_FACTOR_FLOOR);
    Ok(pattern.gain(azimuth_deg, zenith_deg)? + 10.0 * af.log10())
}

/// Steering-grid parameters; defaults match the default scenario.
#[derive(Debug, Clone, PartialEq)]
pub struct GridParams {
    pub downtilt_deg: f64,
    pub azimuth_span_deg: f64,
    pub azimuth_oversampling: usize,
    /// Zenith steering layers; `None` uses one layer per array row.
    pub zenith_layers: Option<usize>,
}

impl Default for GridParams {
    fn default() -> Self {
        GridParams {
            downtilt_deg: 6.0,
            azimuth_span_deg: 120.0,
            azimuth_oversampling: 1,
            zenith_layers: None,
        }
    }
}

/// The set of beams one sector transmits on, plus precomputed steering
/// constants for the closed-form response evaluation.
#[derive(Debug, Clone)]
pub struct GridOfBeams {
    pub geom: ArrayGeometry,
    pub beams: Vec<Beam>,
    az_centers_deg: Vec<f64>,
    zen_centers_deg: Vec<f64>,
    /// Horizontal steering constant per (layer, azimuth column).
    k_h: Vec<f64>,
    /// Vertical steering constant per layer.
    k_v: Vec<f64>,
}

/// Build the sector beam grid: `cols * oversampling` azimuth centres evenly
/// partitioning the span, times the zenith layers described on the module.
/// Beam ids run layer-major, azimuth minor, starting at 0.
pub fn build_grid(geom: &ArrayGeometry, params: &GridParams) -> Result<GridOfBeams, AntennaError> {
    if params.azimuth_oversampling == 0 || params.zenith_layers == Some(0) {
        return Err(AntennaError::EmptyArray);
    }
    let n_az = geom.cols * params.azimuth_oversampling;
    let span = params.azimuth_span_deg;
    let az_centers_deg: Vec<f64> = (0..n_az)
        .map(|i| -span / 2.0 + (i as f64 + 0.5) * span / n_az as f64)
        .collect();

    let layers = params.zenith_layers.unwrap_or(geom.rows);
    let lattice_step = 1.0 / (geom.rows as f64 * geom.spacing_v);
    let center_cos = (90.0 + params.downtilt_deg).to_radians().cos();
    let zen_centers_deg: Vec<f64> = (0..layers)
        .map(|j| {
            let c = center_cos + (j as f64 - (layers as f64 - 1.0) / 2.0) * lattice_step;
            c.clamp(-1.0, 1.0).acos().to_degrees()
        })
        .collect();
    for pair in zen_centers_deg.windows(2) {
        if (pair[0] - pair[1]).abs() < 1e-9 {
            return Err(AntennaError::ZenithLayerCollision);
        }
    }

    let mut beams = Vec::with_capacity(layers * n_az);
    let mut k_h = Vec::with_capacity(layers * n_az);
    let mut k_v = Vec::with_capacity(layers);
    for (j, &zen) in zen_centers_deg.iter().enumerate() {
        let zen_r = zen.to_radians();
        k_v.push(geom.spacing_v * zen_r.cos());
        for &az in &az_centers_deg {
            k_h.push(geom.spacing_h * zen_r.sin() * az.to_radians().sin());
            let id = beams.len();
            beams.push(Beam::steered(id, geom, az, zen)?);
        }
        debug_assert_eq!(k_h.len(), (j + 1) * n_az);
    }
    Ok(GridOfBeams {
        geom: geom.clone(),
        beams,
        az_centers_deg,
        zen_centers_deg,
        k_h,
        k_v,
    })
}

/// Dirichlet-kernel power of an `n`-element uniform aperture at inter-element
/// phase `phi`; continuous limit `n^2` at the coherent points.
#[inline]
fn dirichlet_power(n: usize, phi: f64) -> f64 {
    let half = phi / 2.0;
    let s = half.sin();
    if s.abs() < 1e-9 {
        (n * n) as f64
    } else {
        let r = (n as f64 * half).sin() / s;
        r * r
    }
}

impl GridOfBeams {
    pub fn num_beams(&self) -> usize {
        self.beams.len()
    }

    pub fn azimuth_centers_deg(&self) -> &[f64] {
        &self.az_centers_deg
    }

    pub fn zenith_centers_deg(&self) -> &[f64] {
        &self.zen_centers_deg
    }

    /// Array term (dB) of one beam toward a direction, via the separable
    /// closed form. Equal to the weight-vector inner product of `beam_gain`
    /// up to float rounding, but O(1) instead of O(elements).
    pub fn array_factor_db(&self, beam_id: usize, azimuth_deg: f64, zenith_deg: f64) -> f64 {
        let az = azimuth_deg.to_radians();
        let zen = zenith_deg.to_radians();
        let u_h = self.geom.spacing_h * zen.sin() * az.sin();
        let u_v = self.geom.spacing_v * zen.cos();
        self.factor_from_components(beam_id, u_h, u_v)
    }

    /// Array terms (dB) of every beam toward one direction, appended to
    /// `out` in beam-id order.
    pub fn array_factors_db_into(&self, azimuth_deg: f64, zenith_deg: f64, out: &mut Vec<f64>) {
        let az = azimuth_deg.to_radians();
        let zen = zenith_deg.to_radians();
        let u_h = self.geom.spacing_h * zen.sin() * az.sin();
        let u_v = self.geom.spacing_v * zen.cos();
        let n_az = self.az_centers_deg.len();
        let elements = self.geom.total_elements() as f64;
        for j in 0..self.zen_centers_deg.len() {
            let d_v = dirichlet_power(self.geom.rows, 2.0 * PI * (u_v - self.k_v[j]));
            for i in 0..n_az {
                let d_h =
                    dirichlet_power(self.geom.cols, 2.0 * PI * (u_h - self.k_h[j * n_az + i]));
                let af = (d_v * d_h / elements).max(ARRAY_FACTOR_FLOOR);
                out.push(10.0 * af.log10());
            }
        }
    }

    fn factor_from_components(&self, beam_id: usize, u_h: f64, u_v: f64) -> f64 {
        let n_az = self.az_centers_deg.len();
        let j = beam_id / n_az;
        let d_v = dirichlet_power(self.geom.rows, 2.0 * PI * (u_v - self.k_v[j]));
        let d_h = dirichlet_power(self.geom.cols, 2.0 * PI * (u_h - self.k_h[beam_id]));
        let af = (d_v * d_h / self.geom.total_elements() as f64).max(ARRAY_FACTOR_FLOOR);
        10.0 * af.log10()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    const ELEMENT_SWEEP: [usize; 4] = [16, 32, 64, 128];

    fn default_geom(elements: usize) -> ArrayGeometry {
        let (rows, cols) = match elements {
            16 => (2, 8),
            32 => (4, 8),
            64 => (8, 8),
            128 => (8, 16),
            _ => panic!("no default shape for {elements}"),
        };
        ArrayGeometry::new(rows, cols).unwrap()
    }

    // -- element pattern ----------------------------------------------------

    #[test]
    fn element_gain_fixed_points() {
        let p = ElementPattern::default();
        assert_eq!(p.gain(0.0, 90.0).unwrap(), 8.0);
        assert_eq!(p.gain(65.0, 90.0).unwrap(), -4.0);
        assert_eq!(p.gain(180.0, 90.0).unwrap(), -22.0);
    }

    #[test]
    fn element_gain_rejects_out_of_range_angles() {
        let p = ElementPattern::default();
        assert!(matches!(
            p.gain(181.0, 90.0),
            Err(AntennaError::AzimuthOutOfRange(_))
        ));
        assert!(matches!(
            p.gain(0.0, -1.0),
            Err(AntennaError::ZenithOutOfRange(_))
        ));
        assert!(p.gain(0.0, 190.0).is_err());
    }

    #[test]
    fn element_gain_is_symmetric_and_capped() {
        let p = ElementPattern::default();
        for off in [5.0, 20.0, 50.0] {
            assert_eq!(p.gain(off, 90.0).unwrap(), p.gain(-off, 90.0).unwrap());
            assert_eq!(
                p.gain(0.0, 90.0 + off).unwrap(),
                p.gain(0.0, 90.0 - off).unwrap()
            );
        }
        // Attenuation never exceeds the front-to-back cap.
        for az in [-180.0, -120.0, 120.0, 180.0] {
            for zen in [0.0, 90.0, 180.0] {
                assert!(p.gain(az, zen).unwrap() >= 8.0 - 30.0);
            }
        }
    }

    // -- steering vectors ---------------------------------------------------

    #[test]
    fn boresight_steering_is_all_ones() {
        let geom = ArrayGeometry::new(4, 4).unwrap();
        let v = steering_vector(&geom, 0.0, 90.0).unwrap();
        assert_eq!(v.len(), 16);
        for x in v {
            assert_relative_eq!(x.re, 1.0, epsilon = 1e-12);
            assert_relative_eq!(x.im, 0.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn single_element_steering_is_trivial() {
        let geom = ArrayGeometry::new(1, 1).unwrap();
        let v = steering_vector(&geom, 37.0, 112.0).unwrap();
        assert_eq!(v.len(), 1);
        assert_relative_eq!(v[0].re, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn row_array_mirrored_azimuth_conjugates_the_vector() {
        let geom = ArrayGeometry::new(1, 8).unwrap();
        let vplus = steering_vector(&geom, 25.0, 90.0).unwrap();
        let vminus = steering_vector(&geom, -25.0, 90.0).unwrap();
        for (a, b) in vplus.iter().zip(&vminus) {
            assert_relative_eq!(a.re, b.re, epsilon = 1e-12);
            assert_relative_eq!(a.im, -b.im, epsilon = 1e-12);
        }
    }

    #[test]
    fn steering_magnitudes_are_unity() {
        let geom = ArrayGeometry::new(3, 5).unwrap();
        let v = steering_vector(&geom, -47.0, 104.0).unwrap();
        for x in v {
            assert_relative_eq!(x.norm(), 1.0, epsilon = 1e-12);
        }
    }

    // -- beam gain ----------------------------------------------------------

    #[test]
    fn matched_beam_hits_full_array_gain_at_its_steer() {
        let p = ElementPattern::default();
        let geom = default_geom(16);
        let beam = Beam::steered(0, &geom, 0.0, 90.0).unwrap();
        let g = beam_gain(&p, &geom, &beam, 0.0, 90.0).unwrap();
        assert_relative_eq!(g, 8.0 + 10.0 * 16f64.log10(), epsilon = 1e-9);
        assert!((g - 20.04).abs() < 0.01);

        let geom128 = default_geom(128);
        let beam128 = Beam::steered(0, &geom128, 0.0, 90.0).unwrap();
        let g128 = beam_gain(&p, &geom128, &beam128, 0.0, 90.0).unwrap();
        assert!((g128 - 29.07).abs() < 0.01);
    }

    #[test]
    fn array_term_collapses_at_the_first_null() {
        // 1x16 row aperture steered at boresight: first null at
        // sin(az) = 1/(16 * 0.5).
        let p = ElementPattern::default();
        let geom = ArrayGeometry::new(1, 16).unwrap();
        let beam = Beam::steered(0, &geom, 0.0, 90.0).unwrap();
        let null_az = (1.0 / 8.0f64).asin().to_degrees();
        let g = beam_gain(&p, &geom, &beam, null_az, 90.0).unwrap();
        let element = p.gain(null_az, 90.0).unwrap();
        let array_term_rel_peak = g - element - 10.0 * 16f64.log10();
        assert!(
            array_term_rel_peak <= -30.0,
            "null depth only {array_term_rel_peak:.2} dB"
        );
        // ... and stays finite thanks to the floor.
        assert!(g.is_finite());
    }

    #[test]
    fn beam_weights_have_unit_norm() {
        for elements in ELEMENT_SWEEP {
            let geom = default_geom(elements);
            let grid = build_grid(&geom, &GridParams::default()).unwrap();
            for beam in &grid.beams {
                let norm: f64 = beam.weights.iter().map(|w| w.norm_sqr()).sum();
                assert_relative_eq!(norm, 1.0, epsilon = 1e-9);
            }
        }
    }

    // -- grid construction --------------------------------------------------

    #[test]
    fn four_column_row_array_gets_the_expected_azimuth_centers() {
        let geom = ArrayGeometry::new(1, 4).unwrap();
        let grid = build_grid(&geom, &GridParams::default()).unwrap();
        assert_eq!(grid.num_beams(), 4);
        let az: Vec<f64> = grid.beams.iter().map(|b| b.azimuth_deg).collect();
        assert_eq!(az, vec![-45.0, -15.0, 15.0, 45.0]);
    }

    #[test]
    fn single_element_grid_is_the_bare_sector_antenna() {
        let p = ElementPattern::default();
        let geom = ArrayGeometry::new(1, 1).unwrap();
        let grid = build_grid(&geom, &GridParams::default()).unwrap();
        assert_eq!(grid.num_beams(), 1);
        assert_eq!(grid.beams[0].azimuth_deg, 0.0);
        for (az, zen) in [(0.0, 90.0), (30.0, 100.0), (-120.0, 70.0), (180.0, 96.0)] {
            let g = beam_gain(&p, &geom, &grid.beams[0], az, zen).unwrap();
            assert_relative_eq!(g, p.gain(az, zen).unwrap(), epsilon = 1e-9);
        }
    }

    #[test]
    fn beam_count_is_layers_times_azimuth_columns() {
        for elements in ELEMENT_SWEEP {
            let geom = default_geom(elements);
            let grid = build_grid(&geom, &GridParams::default()).unwrap();
            assert_eq!(grid.num_beams(), geom.rows * geom.cols);
            assert_eq!(grid.num_beams(), elements);
            // Steering directions are pairwise distinct.
            for a in 0..grid.num_beams() {
                for b in (a + 1)..grid.num_beams() {
                    let da = (grid.beams[a].azimuth_deg - grid.beams[b].azimuth_deg).abs();
                    let dz = (grid.beams[a].zenith_deg - grid.beams[b].zenith_deg).abs();
                    assert!(da > 1e-9 || dz > 1e-9);
                }
            }
        }
    }

    #[test]
    fn zenith_layers_straddle_the_downtilt() {
        let geom = default_geom(64);
        let grid = build_grid(&geom, &GridParams::default()).unwrap();
        let centers = grid.zenith_centers_deg();
        assert_eq!(centers.len(), 8);
        let mean_cos: f64 = centers.iter().map(|z| z.to_radians().cos()).sum::<f64>() / 8.0;
        assert_relative_eq!(mean_cos, 96f64.to_radians().cos(), epsilon = 1e-9);
    }

    #[test]
    fn single_layer_override_steers_at_the_downtilt_only() {
        let geom = ArrayGeometry::new(16, 1).unwrap();
        let params = GridParams {
            downtilt_deg: 0.0,
            zenith_layers: Some(1),
            ..GridParams::default()
        };
        let grid = build_grid(&geom, &params).unwrap();
        assert_eq!(grid.num_beams(), 1);
        assert_relative_eq!(grid.beams[0].zenith_deg, 90.0, epsilon = 1e-9);
        assert_eq!(grid.beams[0].azimuth_deg, 0.0);
    }

    // -- gain law across the sweep -------------------------------------------

    #[test]
    fn peak_array_gain_follows_ten_log_elements() {
        let p = ElementPattern::default();
        let mut peaks = Vec::new();
        for elements in ELEMENT_SWEEP {
            let geom = default_geom(elements);
            let grid = build_grid(&geom, &GridParams::default()).unwrap();
            let mut peak = f64::NEG_INFINITY;
            for beam in &grid.beams {
                let g = beam_gain(&p, &geom, beam, beam.azimuth_deg, beam.zenith_deg).unwrap();
                let e = p.gain(beam.azimuth_deg, beam.zenith_deg).unwrap();
                peak = peak.max(g - e);
            }
            assert!(
                (peak - 10.0 * (elements as f64).log10()).abs() < 0.1,
                "{elements} elements peaked at {peak:.3} dB"
            );
            peaks.push(peak);
        }
        for pair in peaks.windows(2) {
            assert!(pair[1] > pair[0]);
            assert!((pair[1] - pair[0] - 3.01).abs() < 0.1);
        }
    }

    #[test]
    fn azimuth_span_is_covered_without_deep_crossover_notches() {
        // Max-over-beams response along the span, checked at each steered
        // zenith. Evenly partitioning the span in angle leaves the broadside
        // crossover slightly past the classic orthogonal-grid value, so the
        // guaranteed floor is 4.5 dB below peak.
        for elements in ELEMENT_SWEEP {
            let geom = default_geom(elements);
            let grid = build_grid(&geom, &GridParams::default()).unwrap();
            let floor = 10.0 * (elements as f64).log10() - 4.5;
            for &zen in grid.zenith_centers_deg() {
                let mut az = -60.0;
                while az <= 60.0 {
                    let mut best = f64::NEG_INFINITY;
                    for b in 0..grid.num_beams() {
                        best = best.max(grid.array_factor_db(b, az, zen));
                    }
                    assert!(
                        best >= floor,
                        "{elements} elements: {best:.2} dB at az {az:.2}, zen {zen:.2}"
                    );
                    az += 0.25;
                }
            }
        }
    }

    // -- closed form vs. inner product ---------------------------------------

    proptest! {
        #[test]
        fn closed_form_matches_inner_product(
            az in -180.0..180.0f64,
            zen in 0.0..180.0f64,
            beam_idx in 0usize..64,
        ) {
            let p = ElementPattern::default();
            let geom = default_geom(64);
            let grid = build_grid(&geom, &GridParams::default()).unwrap();
            let beam = &grid.beams[beam_idx];
            let exact = beam_gain(&p, &geom, beam, az, zen).unwrap()
                - p.gain(az, zen).unwrap();
            let fast = grid.array_factor_db(beam_idx, az, zen);
            prop_assert!((exact - fast).abs() < 1e-6,
                "beam {beam_idx} at ({az}, {zen}): {exact} vs {fast}");
        }

        #[test]
        fn response_energy_never_exceeds_element_count(
            az in -180.0..180.0f64,
            zen in 0.0..180.0f64,
        ) {
            let geom = default_geom(32);
            let grid = build_grid(&geom, &GridParams::default()).unwrap();
            let v = steering_vector(&geom, az, zen).unwrap();
            for beam in &grid.beams {
                let resp: Complex64 = beam
                    .weights
                    .iter()
                    .zip(&v)
                    .map(|(w, x)| w.conj() * x)
                    .sum();
                prop_assert!(resp.norm_sqr() <= 32.0 * (1.0 + 1e-9));
            }
        }
    }
}
