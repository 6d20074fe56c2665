//! Ray-traced thin lens.
//!
//! A plane wave along z hits an ideal lens of focal length `f` and aperture
//! radius `l`. The ray at height `r = f tan(theta)` leaves towards the focus
//! along `k' = -sin(theta) r_hat + cos(theta) z_hat`; its polarization turns
//! with it in the meridional plane and keeps its azimuthal part. Energy
//! conservation along ray tubes fixes the strength `cos(theta)^(-3/2)`.

use nalgebra::Vector3;

use crate::error::{Error, Result};
use crate::modes::{Helicity, PhotonMode, Support, WaveVector, POLARIZATION_TOL};
use crate::polmat3::{error_probability, Complex3Vector, DensityMatrix3};
use crate::quad::{check_theta_max, QuadratureSpec};
use crate::reduce::{circular_block, effective_density};
use crate::C64;

/// Upper end of the half-angle range where the leading-order forms are offered.
pub const SERIES_THETA_LIMIT: f64 = 0.5;

/// Thin lens given by focal length and aperture radius, in meters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LensSpec {
    pub focal_length: f64,
    pub aperture_radius: f64,
}

impl LensSpec {
    pub fn new(focal_length: f64, aperture_radius: f64) -> Result<Self> {
        if !(focal_length > 0.0 && focal_length.is_finite()) {
            return Err(Error::domain(format!(
                "focal length must be positive, got {focal_length}"
            )));
        }
        if !(aperture_radius > 0.0 && aperture_radius.is_finite()) {
            return Err(Error::domain(format!(
                "aperture radius must be positive, got {aperture_radius}"
            )));
        }
        let lens = Self {
            focal_length,
            aperture_radius,
        };
        check_theta_max(lens.theta_max())?;
        Ok(lens)
    }

    /// Lens of unit focal length with the given half-angle.
    pub fn from_theta_max(theta_max: f64) -> Result<Self> {
        check_theta_max(theta_max)?;
        Self::new(1.0, theta_max.tan())
    }

    /// `atan(l / f)`.
    pub fn theta_max(&self) -> f64 {
        theta_of_r(self.aperture_radius, self.focal_length)
    }

    /// Nominal focal ratio `f / 2l`.
    pub fn focal_ratio(&self) -> f64 {
        self.focal_length / (2.0 * self.aperture_radius)
    }
}

/// Angle of the ray entering the lens at height `r`.
pub fn theta_of_r(r: f64, f: f64) -> f64 {
    (r / f).atan()
}

/// Direction of the ray leaving the lens at polar position `(theta, phi)`.
pub fn deflect_direction(theta: f64, phi: f64) -> Vector3<f64> {
    let (st, ct) = theta.sin_cos();
    let (sp, cp) = phi.sin_cos();
    Vector3::new(-st * cp, -st * sp, ct)
}

fn refract_unchecked(pol: &Complex3Vector, theta: f64, phi: f64) -> Complex3Vector {
    let (st, ct) = theta.sin_cos();
    let (sp, cp) = phi.sin_cos();
    let a_r = pol.x * cp + pol.y * sp;
    let a_phi = -pol.x * sp + pol.y * cp;
    Vector3::new(a_r * (ct * cp) - a_phi * sp, a_r * (ct * sp) + a_phi * cp, a_r * st)
}

fn check_input_polarization(pol: &Complex3Vector) -> Result<()> {
    if pol.z.norm() > POLARIZATION_TOL {
        return Err(Error::domain("incoming polarization must be transversal to z"));
    }
    let n2 = pol.norm_squared();
    if (n2 - 1.0).abs() > POLARIZATION_TOL {
        return Err(Error::domain(format!(
            "incoming polarization must be normalized, |pol|^2 = {n2}"
        )));
    }
    Ok(())
}

/// Polarization of the ray at `(theta, phi)` after the lens.
pub fn refract_polarization(pol_in: &Complex3Vector, theta: f64, phi: f64) -> Result<Complex3Vector> {
    check_input_polarization(pol_in)?;
    Ok(refract_unchecked(pol_in, theta, phi))
}

/// Field strength at distance `radius` from the focus for unit input field.
pub fn field_strength(theta: f64, radius: f64, f: f64) -> f64 {
    theta.cos().powf(-1.5) * f / radius
}

/// The converging spherical wave behind the lens.
///
/// As a [`PhotonMode`] it lives on the cap of directions within `theta_max`
/// of z, at wavenumber `k0` (arbitrary units, since it drops out of every
/// normalized quantity).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConvergingSphericalWave {
    pub theta_max: f64,
    pub incoming_polarization: Complex3Vector,
    pub k0: f64,
}

impl ConvergingSphericalWave {
    pub fn ray_direction(&self, theta: f64, phi: f64) -> Vector3<f64> {
        deflect_direction(theta, phi)
    }

    pub fn ray_polarization(&self, theta: f64, phi: f64) -> Complex3Vector {
        refract_unchecked(&self.incoming_polarization, theta, phi)
    }

    /// Strength relative to the incoming field, `cos(theta)^(-3/2)`.
    pub fn strength(&self, theta: f64) -> f64 {
        theta.cos().powf(-1.5)
    }

    /// Ray coordinates `(theta, phi)` of the direction of `k`.
    pub fn ray_coordinates(k: &WaveVector) -> (f64, f64) {
        let v = k.0;
        let theta = v.x.hypot(v.y).atan2(v.z);
        // rays at azimuth phi travel towards azimuth phi + pi
        let phi = (-v.y).atan2(-v.x);
        (theta, phi)
    }
}

impl PhotonMode for ConvergingSphericalWave {
    fn amplitude(&self, k: &WaveVector) -> C64 {
        let (theta, _) = Self::ray_coordinates(k);
        C64::from(self.strength(theta))
    }

    fn polarization(&self, k: &WaveVector) -> Complex3Vector {
        let (theta, phi) = Self::ray_coordinates(k);
        self.ray_polarization(theta, phi)
    }

    fn support(&self) -> Support {
        Support::cap(self.k0, self.theta_max)
    }
}

pub fn lens_output_state(lens: &LensSpec, pol_in: &Complex3Vector) -> Result<ConvergingSphericalWave> {
    check_input_polarization(pol_in)?;
    Ok(ConvergingSphericalWave {
        theta_max: lens.theta_max(),
        incoming_polarization: *pol_in,
        k0: 1.0,
    })
}

/// Effective density matrix of the focused photon.
pub fn lens_density(state: &ConvergingSphericalWave, spec: &QuadratureSpec) -> Result<DensityMatrix3> {
    check_theta_max(state.theta_max)?;
    effective_density(state, spec)
}

/// `(1 - theta^2/4)` on the circular projector and `theta^2 / 4` along z.
pub fn lens_density_series_eq18(theta_max: f64, helicity: Helicity) -> Result<DensityMatrix3> {
    if !(theta_max > 0.0 && theta_max < SERIES_THETA_LIMIT) {
        return Err(Error::domain(format!(
            "series form needs 0 < theta_max < {SERIES_THETA_LIMIT}, got {theta_max}"
        )));
    }
    let zz = 0.25 * theta_max * theta_max;
    Ok(circular_block(1.0 - zz, zz, helicity))
}

/// Circular input polarization `(1, +-i, 0) / sqrt 2`.
pub fn circular(h: Helicity) -> Complex3Vector {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    Vector3::new(C64::from(s), C64::new(0.0, s * h.sign()), C64::from(0.0))
}

/// Focused densities for both circular inputs.
pub fn lens_density_pair(theta_max: f64, spec: &QuadratureSpec) -> Result<(DensityMatrix3, DensityMatrix3)> {
    let lens = LensSpec::from_theta_max(theta_max)?;
    let plus = lens_density(&lens_output_state(&lens, &circular(Helicity::Plus))?, spec)?;
    let minus = lens_density(&lens_output_state(&lens, &circular(Helicity::Minus))?, spec)?;
    Ok((plus, minus))
}

/// Error probability for the two focused helicity states.
pub fn error_probability_lens(theta_max: f64, spec: &QuadratureSpec) -> Result<f64> {
    let (plus, minus) = lens_density_pair(theta_max, spec)?;
    Ok(error_probability(&plus, &minus))
}

/// Closed forms for circular input, obtained by averaging over phi and
/// integrating the weight `sin/cos^3` in theta.
pub mod closed_form {
    /// `sec(t) - 1` without cancellation.
    fn sec_minus_one(t: f64) -> f64 {
        let s = (0.5 * t).sin();
        2.0 * s * s / t.cos()
    }

    /// `(tan^2/2 + ln cos) / tan^2`.
    pub fn rho_zz(theta_max: f64) -> f64 {
        let t2 = theta_max.tan().powi(2);
        let ln_cos = 0.5 * (-theta_max.sin().powi(2)).ln_1p();
        (0.5 * t2 + ln_cos) / t2
    }

    /// Imaginary part of `rho_xy` for positive helicity: `-(sec - 1) / tan^2`.
    pub fn rho_xy_im(theta_max: f64) -> f64 {
        -sec_minus_one(theta_max) / theta_max.tan().powi(2)
    }

    /// `1/2 - (sec - 1) / tan^2`.
    pub fn error_probability(theta_max: f64) -> f64 {
        0.5 + rho_xy_im(theta_max)
    }
}
