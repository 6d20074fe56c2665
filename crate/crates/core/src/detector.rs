//! Polarization-selective planar photodetector.
//!
//! A detector in the plane `z = z0` whose electrons only respond to the field
//! component along `j` registers the photocurrent `I_j`, the flux of
//! `|A . j|^2` through the plane during the detection time. For a planar
//! wavefront this equals the energy fraction `W_j`; behind a lens the
//! oblique rays cross the plane with an extra `1/cos(theta)`, which shifts
//! the normalized probabilities away from the density-matrix diagonal at
//! fourth order in the half-angle.

use std::f64::consts::FRAC_1_SQRT_2;

use nalgebra::Vector3;

use crate::error::{Error, Result};
use crate::lens::{circular, lens_density, ConvergingSphericalWave, LensSpec};
use crate::modes::{GaussianPacket, Helicity};
use crate::polmat3::{error_probability, Complex3Vector};
use crate::quad::{self, check_theta_max, QuadratureSpec};
use crate::reduce::circular_block;
use crate::C64;

/// Speed of light in m/s.
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// Transverse half-width of the detector window, in beam radii.
pub const PLANAR_WINDOW_RADII: f64 = 8.0;

/// Largest half-angle accepted by [`detection_discrepancy`].
pub const DISCREPANCY_THETA_LIMIT: f64 = 1.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Wavefront {
    PlanarParaxial,
    SphericalPostLens { theta_max: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DetectorScenario {
    /// Absorption direction used by [`photocurrent_along`].
    pub axis: Vector3<f64>,
    /// Position of the detector plane behind the focus (m).
    pub z0: f64,
    /// Detection time (s).
    pub delta: f64,
    pub wavefront: Wavefront,
}

impl DetectorScenario {
    pub fn new(axis: Vector3<f64>, z0: f64, delta: f64, wavefront: Wavefront) -> Result<Self> {
        if (axis.norm() - 1.0).abs() > 1e-12 {
            return Err(Error::domain("detector axis must be a unit vector"));
        }
        if !(delta > 0.0 && delta.is_finite()) {
            return Err(Error::domain(format!("detection time must be positive, got {delta}")));
        }
        if let Wavefront::SphericalPostLens { theta_max } = wavefront {
            check_theta_max(theta_max)?;
            if !(z0 > 0.0 && z0.is_finite()) {
                return Err(Error::domain(format!("z0 must be positive behind the focus, got {z0}")));
            }
        }
        Ok(Self {
            axis,
            z0,
            delta,
            wavefront,
        })
    }

    /// Spherical scenario with `z0 = 1 m`, `delta = 1 s`.
    pub fn spherical(theta_max: f64) -> Result<Self> {
        Self::new(Vector3::z(), 1.0, 1.0, Wavefront::SphericalPostLens { theta_max })
    }

    /// Planar scenario with `z0 = 1 m`, `delta = 1 s`.
    pub fn planar() -> Result<Self> {
        Self::new(Vector3::z(), 1.0, 1.0, Wavefront::PlanarParaxial)
    }
}

/// Photocurrents along x, y, z and their normalized probabilities.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhotocurrentTriple {
    pub currents: [f64; 3],
    pub probabilities: [f64; 3],
}

impl PhotocurrentTriple {
    pub fn from_currents(currents: [f64; 3]) -> Result<Self> {
        let total: f64 = currents.iter().sum();
        if !(total > 0.0 && total.is_finite()) || currents.iter().any(|c| *c < 0.0) {
            return Err(Error::domain("photocurrents must be nonnegative with a positive sum"));
        }
        Ok(Self {
            currents,
            probabilities: currents.map(|c| c / total),
        })
    }
}

fn axis_weights(a: &Complex3Vector) -> [C64; 3] {
    [a.x.norm_sqr(), a.y.norm_sqr(), a.z.norm_sqr()].map(C64::from)
}

/// Integrates `weight(theta) |alpha . j|^2` over the cap for the three axes,
/// with the total in the last slot.
fn cap_axis_integrals(
    state: &ConvergingSphericalWave,
    weight: impl Fn(f64) -> f64,
    spec: &QuadratureSpec,
) -> Result<[f64; 4]> {
    let q = quad::integrate_cap(
        |theta, phi| {
            let [x, y, z] = axis_weights(&state.ray_polarization(theta, phi));
            [x, y, z, x + y + z]
        },
        state.theta_max,
        weight,
        spec,
    )?
    .into_result()?;
    Ok(q.value.map(|z| z.re))
}

/// `W_j / W` with `|a|^2 = cos^-3` on the shell: weight `sin / cos^3`.
pub fn energy_fractions(state: &ConvergingSphericalWave, spec: &QuadratureSpec) -> Result<[f64; 3]> {
    let w = cap_axis_integrals(state, |t| t.sin() / t.cos().powi(3), spec)?;
    Ok([w[0] / w[3], w[1] / w[3], w[2] / w[3]])
}

/// Photocurrents through the plane behind the focus: the plane's area
/// element adds `1 / cos` to the shell weight, giving `sin / cos^4`.
pub fn photocurrents_spherical(
    state: &ConvergingSphericalWave,
    scenario: &DetectorScenario,
    spec: &QuadratureSpec,
) -> Result<PhotocurrentTriple> {
    match scenario.wavefront {
        Wavefront::SphericalPostLens { theta_max } if (theta_max - state.theta_max).abs() <= 1e-12 => {}
        Wavefront::SphericalPostLens { .. } => {
            return Err(Error::domain("scenario and state disagree on theta_max"));
        }
        Wavefront::PlanarParaxial => {
            return Err(Error::domain("spherical photocurrents need a spherical scenario"));
        }
    }
    let w = cap_axis_integrals(state, |t| t.sin() / t.cos().powi(4), spec)?;
    PhotocurrentTriple::from_currents([w[0], w[1], w[2]].map(|v| v * scenario.delta))
}

/// Photocurrent along the scenario's own axis for the spherical wavefront.
pub fn photocurrent_along(
    state: &ConvergingSphericalWave,
    scenario: &DetectorScenario,
    spec: &QuadratureSpec,
) -> Result<f64> {
    let j = scenario.axis.map(C64::from);
    let q = quad::integrate_cap(
        |theta, phi| [C64::from(state.ray_polarization(theta, phi).dot(&j).norm_sqr())],
        state.theta_max,
        |t| t.sin() / t.cos().powi(4),
        spec,
    )?
    .into_result()?;
    Ok(q.scalar().re * scenario.delta)
}

/// Circularly polarized Gaussian beam in the paraxial approximation,
/// `A = E eps + (i/k)(eps . grad E) z_hat` with `E = exp(-r^2 / 2 tau^2)`,
/// carried by a pulse envelope `exp(-s^2 / 2 L^2)` of length `L`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ParaxialBeam {
    pub k0: f64,
    pub tau: f64,
    pub helicity: Helicity,
    /// Whether the first-order longitudinal term is kept.
    pub longitudinal: bool,
    pub pulse_length: f64,
}

impl ParaxialBeam {
    pub fn new(k0: f64, tau: f64, helicity: Helicity, longitudinal: bool, pulse_length: f64) -> Result<Self> {
        for (name, v) in [("k0", k0), ("tau", tau), ("pulse_length", pulse_length)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::domain(format!("{name} must be positive, got {v}")));
            }
        }
        Ok(Self {
            k0,
            tau,
            helicity,
            longitudinal,
            pulse_length,
        })
    }

    /// Beam with waist `tau = 1 / delta_r` and pulse length `1 / delta_z`.
    pub fn from_packet(p: &GaussianPacket, longitudinal: bool) -> Result<Self> {
        Self::new(p.k0, 1.0 / p.delta_r, p.helicity, longitudinal, 1.0 / p.delta_z)
    }

    /// Transverse profile of the field at `(x, y)`.
    pub fn transverse_field(&self, x: f64, y: f64) -> Complex3Vector {
        let s = self.helicity.sign();
        let t2 = self.tau * self.tau;
        let e = (-(x * x + y * y) / (2.0 * t2)).exp();
        let h = C64::from(FRAC_1_SQRT_2);
        let ex = h * e;
        let ey = h * C64::new(0.0, s) * e;
        let ez = if self.longitudinal {
            // (i/k) (d_x E + i s d_y E) / sqrt 2
            let grad = C64::new(-x / t2, -s * y / t2) * e;
            C64::i() * grad * h / self.k0
        } else {
            C64::from(0.0)
        };
        Vector3::new(ex, ey, ez)
    }

    fn envelope_sq(&self, s: f64) -> f64 {
        (-s * s / (self.pulse_length * self.pulse_length)).exp()
    }
}

/// Photocurrents and energy fractions for a planar wavefront.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlanarDetection {
    pub currents: PhotocurrentTriple,
    /// Normalized energy fractions `W_j / W` in the slab the pulse crosses.
    pub energy_fractions: [f64; 3],
}

/// `I_j = int_0^delta dt int dxdy |A . j|^2` at the plane `z0`, against
/// `W_j = (1/c) int dz int dxdy |A . j|^2` over the slab `[z0 - c delta, z0]`.
/// The pulse is centred in the slab at `t = 0`.
pub fn photocurrents_planar(
    beam: &ParaxialBeam,
    scenario: &DetectorScenario,
    spec: &QuadratureSpec,
) -> Result<PlanarDetection> {
    if scenario.wavefront != Wavefront::PlanarParaxial {
        return Err(Error::domain("planar photocurrents need a planar scenario"));
    }
    let c = SPEED_OF_LIGHT;
    let z0 = scenario.z0;
    let delta = scenario.delta;
    let centre = z0 - 0.5 * c * delta;
    let tau = beam.tau;
    let half = PLANAR_WINDOW_RADII;
    // integrate over x/tau, y/tau and t/delta so that abs_tol is meaningful
    let field = |u: f64, v: f64| axis_weights(&beam.transverse_field(u * tau, v * tau));
    let area = tau * tau;

    // the pulse sits at z - centre = c t, so the plane sees s = z0 - c t - centre
    let mut currents = quad::integrate_cuboid(
        |[u, v, s]| field(u, v).map(|w| w * beam.envelope_sq(z0 - c * delta * s - centre)),
        [-half, -half, 0.0],
        [half, half, 1.0],
        spec,
    )?
    .into_result()?;
    let mut energy = quad::integrate_cuboid(
        |[u, v, s]| field(u, v).map(|w| w * beam.envelope_sq(z0 - c * delta * (1.0 - s) - centre)),
        [-half, -half, 0.0],
        [half, half, 1.0],
        spec,
    )?
    .into_result()?;
    // dt = delta ds; dz / c = delta ds as well
    for v in currents.value.iter_mut().chain(energy.value.iter_mut()) {
        *v *= area * delta;
    }
    let w = energy.value.map(|v| v.re);
    let total: f64 = w.iter().sum();
    Ok(PlanarDetection {
        currents: PhotocurrentTriple::from_currents(currents.value.map(|v| v.re))?,
        energy_fractions: w.map(|v| v / total),
    })
}

/// `max_j |p_j - rho_jj|` behind a lens of half-angle `theta_max` for
/// circular input.
pub fn detection_discrepancy(theta_max: f64, spec: &QuadratureSpec) -> Result<f64> {
    if !(theta_max > 0.0 && theta_max <= DISCREPANCY_THETA_LIMIT) {
        return Err(Error::domain(format!(
            "theta_max must lie in (0, {DISCREPANCY_THETA_LIMIT}], got {theta_max}"
        )));
    }
    let lens = LensSpec::from_theta_max(theta_max)?;
    let state = crate::lens::lens_output_state(&lens, &circular(Helicity::Plus))?;
    let p = photocurrents_spherical(&state, &DetectorScenario::spherical(theta_max)?, spec)?.probabilities;
    let rho = lens_density(&state, spec)?;
    Ok((0..3).map(|j| (p[j] - rho.get(j, j).re).abs()).fold(0.0, f64::max))
}

/// Error probability when the detector probabilities replace the diagonal of
/// the leading-order focused states: `p_z / 2`.
pub fn error_probability_detector(theta_max: f64, spec: &QuadratureSpec) -> Result<f64> {
    let lens = LensSpec::from_theta_max(theta_max)?;
    let state = crate::lens::lens_output_state(&lens, &circular(Helicity::Plus))?;
    let p = photocurrents_spherical(&state, &DetectorScenario::spherical(theta_max)?, spec)?.probabilities;
    let pz = p[2];
    let plus = circular_block(1.0 - pz, pz, Helicity::Plus);
    let minus = circular_block(1.0 - pz, pz, Helicity::Minus);
    Ok(error_probability(&plus, &minus))
}

/// Closed forms for circular input behind a lens.
pub mod closed_form {
    /// `p_z = [(sec^3 - 1)/3 - (sec - 1)] / [2 (sec^3 - 1) / 3]`.
    pub fn p_z(theta_max: f64) -> f64 {
        let c = theta_max.cos();
        let s = (0.5 * theta_max).sin();
        // sec - 1 and sec^3 - 1 without cancellation
        let sec_m1 = 2.0 * s * s / c;
        let sec3_m1 = sec_m1 * (1.0 + (1.0 + sec_m1) + (1.0 + sec_m1).powi(2));
        (sec3_m1 / 3.0 - sec_m1) / (2.0 * sec3_m1 / 3.0)
    }

    /// `p_z - rho_zz`.
    pub fn discrepancy(theta_max: f64) -> f64 {
        p_z(theta_max) - crate::lens::closed_form::rho_zz(theta_max)
    }
}

/// Planar-wavefront longitudinal fraction of [`ParaxialBeam`]:
/// `S_z / S = (1/(k tau)^2) / (2 + 1/(k tau)^2)`.
pub fn paraxial_longitudinal_fraction(k0: f64, tau: f64) -> f64 {
    let g = 1.0 / (k0 * tau).powi(2);
    g / (2.0 + g)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lens::lens_output_state;
    use approx::assert_relative_eq;

    fn spec() -> QuadratureSpec {
        QuadratureSpec::default()
    }

    fn state(theta: f64) -> ConvergingSphericalWave {
        lens_output_state(&LensSpec::from_theta_max(theta).unwrap(), &circular(Helicity::Plus)).unwrap()
    }

    #[test]
    fn energy_fractions_match_lens_density() {
        let s = state(0.1);
        let w = energy_fractions(&s, &spec()).unwrap();
        let rho = lens_density(&s, &spec()).unwrap();
        for (j, wj) in w.iter().enumerate() {
            assert!((wj - rho.get(j, j).re).abs() < 1e-8);
        }
        assert_relative_eq!(w[2], 0.002_499_997_214_267_153, max_relative = 1e-9);
        assert_relative_eq!(w.iter().sum::<f64>(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn spherical_photocurrents() {
        let s = state(0.1);
        let t = photocurrents_spherical(&s, &DetectorScenario::spherical(0.1).unwrap(), &spec()).unwrap();
        assert_relative_eq!(t.probabilities[2], closed_form::p_z(0.1), max_relative = 1e-9);
        assert_relative_eq!(t.probabilities[2], 0.002_502_077_053_635_2, max_relative = 1e-9);
        assert_relative_eq!(t.probabilities[0], t.probabilities[1], epsilon = 1e-12);
        assert_relative_eq!(t.probabilities.iter().sum::<f64>(), 1.0, epsilon = 1e-12);

        let small = state(1e-3);
        let t = photocurrents_spherical(&small, &DetectorScenario::spherical(1e-3).unwrap(), &spec()).unwrap();
        assert!((t.probabilities[0] - 0.5).abs() < 1e-6 && t.probabilities[2] < 1e-6);

        assert!(photocurrents_spherical(&s, &DetectorScenario::spherical(0.2).unwrap(), &spec()).is_err());
        assert!(photocurrents_spherical(&s, &DetectorScenario::planar().unwrap(), &spec()).is_err());
    }

    #[test]
    fn single_axis_current_matches_triple() {
        let s = state(0.4);
        let mut scenario = DetectorScenario::spherical(0.4).unwrap();
        let t = photocurrents_spherical(&s, &scenario, &spec()).unwrap();
        scenario.axis = Vector3::z();
        assert_relative_eq!(
            photocurrent_along(&s, &scenario, &spec()).unwrap(),
            t.currents[2],
            max_relative = 1e-9
        );
    }

    #[test]
    fn discrepancy_examples() {
        let d = detection_discrepancy(0.1, &spec()).unwrap();
        assert_relative_eq!(d, closed_form::discrepancy(0.1), max_relative = 1e-4);
        assert!((d - 2.1e-6).abs() < 0.5e-6);
        let ratio = closed_form::discrepancy(0.2) / closed_form::discrepancy(0.1);
        assert!((ratio - 16.0).abs() < 0.5);
        assert!(detection_discrepancy(1.2, &spec()).is_err());
        assert!(detection_discrepancy(0.0, &spec()).is_err());
    }

    #[test]
    fn detector_error_probability_leading_order() {
        for theta in [0.05, 0.1, 0.2] {
            let pe = error_probability_detector(theta, &spec()).unwrap();
            assert!((pe - theta * theta / 8.0).abs() <= theta.powi(4));
        }
    }

    #[test]
    fn planar_identity_without_longitudinal_term() {
        let beam = ParaxialBeam::new(1e7, 1e-3, Helicity::Plus, false, 0.05).unwrap();
        let scenario = DetectorScenario::new(Vector3::z(), 1.0, 2e-9, Wavefront::PlanarParaxial).unwrap();
        let d = photocurrents_planar(&beam, &scenario, &spec()).unwrap();
        let p = d.currents.probabilities;
        assert!((p[0] - 0.5).abs() < 1e-12 && (p[1] - 0.5).abs() < 1e-12 && p[2] == 0.0);
    }

    #[test]
    fn planar_identity_with_longitudinal_term() {
        let beam = ParaxialBeam::new(10.0, 1.0, Helicity::Minus, true, 0.05).unwrap();
        let scenario = DetectorScenario::new(Vector3::z(), 1.0, 2e-9, Wavefront::PlanarParaxial).unwrap();
        let d = photocurrents_planar(&beam, &scenario, &spec()).unwrap();
        for j in 0..3 {
            assert!((d.currents.probabilities[j] - d.energy_fractions[j]).abs() < 1e-9);
        }
        assert_relative_eq!(
            d.currents.probabilities[2],
            paraxial_longitudinal_fraction(10.0, 1.0),
            max_relative = 1e-8
        );
    }
}
