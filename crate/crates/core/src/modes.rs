//! Photon states as classical mode data.
//!
//! A one-photon state is a momentum amplitude `f(k)` together with a unit,
//! transversal polarization field `alpha(k)`. Modes are evaluated on demand
//! and declare the region of k-space the quadrature has to cover.

use std::f64::consts::{FRAC_1_SQRT_2, PI};

use nalgebra::{Matrix3, Vector3};

use crate::error::{Error, Result};
use crate::polmat3::{Complex3Vector, Rotation3};
use crate::quad::{self, QuadratureResult, QuadratureSpec};
use crate::C64;

/// Tolerance for transversality and unit norm of polarization vectors.
pub const POLARIZATION_TOL: f64 = 1e-12;

/// Ratio `delta_r / k0` above which a packet is no longer treated as paraxial.
pub const PARAXIAL_LIMIT: f64 = 0.1;

/// Half-width of the k-space box covering a Gaussian, in units of its spread.
pub const GAUSSIAN_BOX_SIGMAS: f64 = 6.0;

/// Photon wave vector in 1/m.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WaveVector(pub Vector3<f64>);

impl WaveVector {
    pub fn new(kx: f64, ky: f64, kz: f64) -> Self {
        Self(Vector3::new(kx, ky, kz))
    }

    pub fn along_z(k0: f64) -> Self {
        Self::new(0.0, 0.0, k0)
    }

    pub fn norm(&self) -> f64 {
        self.0.norm()
    }

    pub fn unit(&self) -> Result<Vector3<f64>> {
        let n = self.norm();
        if n > 0.0 && n.is_finite() {
            Ok(self.0 / n)
        } else {
            Err(Error::domain("wave vector must be nonzero and finite"))
        }
    }
}

/// Photon helicity, right (+) or left (-) circular.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Helicity {
    Plus,
    Minus,
}

impl Helicity {
    pub fn sign(self) -> f64 {
        match self {
            Helicity::Plus => 1.0,
            Helicity::Minus => -1.0,
        }
    }

    pub fn from_sign(s: i32) -> Result<Self> {
        match s {
            1 => Ok(Helicity::Plus),
            -1 => Ok(Helicity::Minus),
            _ => Err(Error::domain(format!("helicity must be +1 or -1, got {s}"))),
        }
    }

    pub fn flipped(self) -> Self {
        match self {
            Helicity::Plus => Helicity::Minus,
            Helicity::Minus => Helicity::Plus,
        }
    }
}

/// Circular polarization vectors transversal to `k_hat`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HelicityBasis {
    pub eps_plus: Complex3Vector,
    pub eps_minus: Complex3Vector,
    pub k_hat: Vector3<f64>,
}

impl HelicityBasis {
    pub fn get(&self, h: Helicity) -> Complex3Vector {
        match h {
            Helicity::Plus => self.eps_plus,
            Helicity::Minus => self.eps_minus,
        }
    }
}

/// `(1, +-i, 0) / sqrt 2` carried from the z axis to `k_hat` by the minimal
/// rotation about `z x k_hat`. Undefined on the negative z axis.
pub fn helicity_basis(k: &WaveVector) -> Result<HelicityBasis> {
    let u = k.unit()?;
    let t2 = u.x * u.x + u.y * u.y;
    if t2 == 0.0 && u.z < 0.0 {
        return Err(Error::domain("helicity basis is singular on the negative z axis"));
    }
    Ok(minimal_rotation_basis(&u))
}

/// The rotation about `z x k_hat` taking the z axis to `k_hat`.
pub fn minimal_rotation(k_hat: &Vector3<f64>) -> Result<Rotation3> {
    let u = WaveVector(*k_hat).unit()?;
    if u.x == 0.0 && u.y == 0.0 && u.z < 0.0 {
        return Err(Error::domain("minimal rotation is not unique for the negative z axis"));
    }
    let (c1, c2) = minimal_rotation_columns(&u);
    Rotation3::new(Matrix3::from_columns(&[c1, c2, u]))
}

fn minimal_rotation_columns(u: &Vector3<f64>) -> (Vector3<f64>, Vector3<f64>) {
    let t2 = u.x * u.x + u.y * u.y;
    // 1 / (1 + cos theta), written to avoid cancellation near the south pole
    let inv = if u.z >= 0.0 {
        1.0 / (1.0 + u.z)
    } else {
        (1.0 - u.z) / t2
    };
    (
        Vector3::new(1.0 - u.x * u.x * inv, -u.x * u.y * inv, -u.x),
        Vector3::new(-u.x * u.y * inv, 1.0 - u.y * u.y * inv, -u.y),
    )
}

fn minimal_rotation_basis(u: &Vector3<f64>) -> HelicityBasis {
    let (col1, col2) = minimal_rotation_columns(u);
    let s = C64::from(FRAC_1_SQRT_2);
    let i = C64::i();
    let eps_plus = (col1.map(C64::from) + col2.map(C64::from) * i) * s;
    HelicityBasis {
        eps_plus,
        eps_minus: eps_plus.map(|z| z.conj()),
        k_hat: *u,
    }
}

/// Region of k-space a mode lives on, with its integration measure.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Support {
    /// A single wave vector; the mode is a plane wave.
    Point(WaveVector),
    /// The box `lo..hi` mapped through `frame`, with measure `d^3k / (2 pi)^3`.
    Box3 {
        lo: [f64; 3],
        hi: [f64; 3],
        frame: Rotation3,
    },
    /// Directions within `theta_max` of the frame's z axis on the shell
    /// `|k| = k0`, with measure `sin(theta) dtheta dphi`.
    Cap { k0: f64, theta_max: f64, frame: Rotation3 },
}

impl Support {
    pub fn box3(lo: [f64; 3], hi: [f64; 3]) -> Self {
        Support::Box3 {
            lo,
            hi,
            frame: Rotation3::identity(),
        }
    }

    pub fn cap(k0: f64, theta_max: f64) -> Self {
        Support::Cap {
            k0,
            theta_max,
            frame: Rotation3::identity(),
        }
    }

    pub fn rotated(&self, r: &Rotation3) -> Self {
        match *self {
            Support::Point(k) => Support::Point(WaveVector(r.apply(&k.0))),
            Support::Box3 { lo, hi, frame } => Support::Box3 {
                lo,
                hi,
                frame: *r * frame,
            },
            Support::Cap { k0, theta_max, frame } => Support::Cap {
                k0,
                theta_max,
                frame: *r * frame,
            },
        }
    }
}

/// A one-photon mode: amplitude `f(k)` and unit transversal polarization `alpha(k)`.
pub trait PhotonMode: Sync {
    fn amplitude(&self, k: &WaveVector) -> C64;
    fn polarization(&self, k: &WaveVector) -> Complex3Vector;
    fn support(&self) -> Support;
}

impl<M: PhotonMode + ?Sized> PhotonMode for &M {
    fn amplitude(&self, k: &WaveVector) -> C64 {
        (**self).amplitude(k)
    }
    fn polarization(&self, k: &WaveVector) -> Complex3Vector {
        (**self).polarization(k)
    }
    fn support(&self) -> Support {
        (**self).support()
    }
}

/// Integrates `g(k, f(k), alpha(k))` over the support of `mode` with its measure.
pub fn integrate_mode<const N: usize, M, G>(mode: &M, g: G, spec: &QuadratureSpec) -> Result<QuadratureResult<N>>
where
    M: PhotonMode + ?Sized,
    G: Fn(&WaveVector, C64, &Complex3Vector) -> [C64; N],
{
    let eval = |k: WaveVector| g(&k, mode.amplitude(&k), &mode.polarization(&k));
    match mode.support() {
        Support::Point(k) => Ok(QuadratureResult {
            value: eval(k),
            component_errors: [0.0; N],
            error_estimate: 0.0,
            subdivisions_used: 0,
            converged: true,
        }),
        Support::Box3 { lo, hi, frame } => {
            quad::integrate_box3(|kp| eval(WaveVector(frame.apply(&Vector3::from(kp)))), lo, hi, spec)
        }
        Support::Cap { k0, theta_max, frame } => quad::integrate_cap(
            |theta, phi| {
                let (st, ct) = theta.sin_cos();
                let (sp, cp) = phi.sin_cos();
                let dir = Vector3::new(st * cp, st * sp, ct);
                eval(WaveVector(frame.apply(&dir) * k0))
            },
            theta_max,
            f64::sin,
            spec,
        ),
    }
}

/// A mode given by two closures and a declared support.
pub struct CustomMode<F, P> {
    amplitude: F,
    polarization: P,
    support: Support,
}

impl<F, P> CustomMode<F, P>
where
    F: Fn(&WaveVector) -> C64 + Sync,
    P: Fn(&WaveVector) -> Complex3Vector + Sync,
{
    pub fn new(amplitude: F, polarization: P, support: Support) -> Self {
        Self {
            amplitude,
            polarization,
            support,
        }
    }
}

impl<F, P> PhotonMode for CustomMode<F, P>
where
    F: Fn(&WaveVector) -> C64 + Sync,
    P: Fn(&WaveVector) -> Complex3Vector + Sync,
{
    fn amplitude(&self, k: &WaveVector) -> C64 {
        (self.amplitude)(k)
    }
    fn polarization(&self, k: &WaveVector) -> Complex3Vector {
        (self.polarization)(k)
    }
    fn support(&self) -> Support {
        self.support
    }
}

/// The mode seen from a rotated frame: `f(R^-1 k)`, `R alpha(R^-1 k)`.
#[derive(Debug, Clone)]
pub struct RotatedMode<M> {
    inner: M,
    rotation: Rotation3,
}

pub fn rotate_mode<M: PhotonMode>(mode: M, rotation: Rotation3) -> RotatedMode<M> {
    RotatedMode { inner: mode, rotation }
}

impl<M: PhotonMode> PhotonMode for RotatedMode<M> {
    fn amplitude(&self, k: &WaveVector) -> C64 {
        self.inner.amplitude(&WaveVector(self.rotation.inverse().apply(&k.0)))
    }
    fn polarization(&self, k: &WaveVector) -> Complex3Vector {
        let back = WaveVector(self.rotation.inverse().apply(&k.0));
        self.rotation.apply_complex(&self.inner.polarization(&back))
    }
    fn support(&self) -> Support {
        self.inner.support().rotated(&self.rotation)
    }
}

fn check_polarization(k: &WaveVector, pol: &Complex3Vector) -> Result<()> {
    let u = k.unit()?;
    let n2 = pol.norm_squared();
    if (n2 - 1.0).abs() > POLARIZATION_TOL {
        return Err(Error::domain(format!(
            "polarization must be normalized, |pol|^2 = {n2}"
        )));
    }
    let long = (pol.x * u.x + pol.y * u.y + pol.z * u.z).norm();
    if long > POLARIZATION_TOL {
        return Err(Error::domain(format!(
            "polarization is not transversal to k (|k_hat . pol| = {long:e})"
        )));
    }
    Ok(())
}

/// Monochromatic plane wave with a fixed wave vector and polarization.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlaneWaveMode {
    pub k: WaveVector,
    pub pol: Complex3Vector,
}

pub fn plane_wave_mode(k: WaveVector, pol: Complex3Vector) -> Result<PlaneWaveMode> {
    check_polarization(&k, &pol)?;
    Ok(PlaneWaveMode { k, pol })
}

impl PhotonMode for PlaneWaveMode {
    fn amplitude(&self, _k: &WaveVector) -> C64 {
        C64::from(1.0)
    }
    fn polarization(&self, _k: &WaveVector) -> Complex3Vector {
        self.pol
    }
    fn support(&self) -> Support {
        Support::Point(self.k)
    }
}

/// Gaussian momentum distribution around `k0 z_hat`:
/// `exp(-(kz - k0)^2 / 2 dz^2) exp(-kr^2 / 2 dr^2)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussianPacket {
    pub k0: f64,
    pub delta_r: f64,
    pub delta_z: f64,
    pub helicity: Helicity,
    /// Beam radius the radial spread was derived from, if any.
    pub tau: Option<f64>,
}

impl GaussianPacket {
    pub fn new(k0: f64, delta_r: f64, delta_z: f64, helicity: Helicity) -> Result<Self> {
        for (name, v) in [("k0", k0), ("delta_r", delta_r), ("delta_z", delta_z)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::domain(format!("{name} must be positive, got {v}")));
            }
        }
        Ok(Self {
            k0,
            delta_r,
            delta_z,
            helicity,
            tau: None,
        })
    }

    /// Radial spread from the beam radius, `delta_r = 1 / tau`.
    pub fn with_beam_radius(k0: f64, tau: f64, delta_z: f64, helicity: Helicity) -> Result<Self> {
        if !(tau > 0.0 && tau.is_finite()) {
            return Err(Error::domain(format!("tau must be positive, got {tau}")));
        }
        let mut p = Self::new(k0, 1.0 / tau, delta_z, helicity)?;
        p.tau = Some(tau);
        Ok(p)
    }

    pub fn is_paraxial(&self) -> bool {
        self.delta_r / self.k0 < PARAXIAL_LIMIT
    }

    pub fn with_helicity(&self, helicity: Helicity) -> Self {
        Self { helicity, ..*self }
    }

    pub fn support(&self) -> Support {
        let r = GAUSSIAN_BOX_SIGMAS * self.delta_r;
        let z = GAUSSIAN_BOX_SIGMAS * self.delta_z;
        Support::box3([-r, -r, self.k0 - z], [r, r, self.k0 + z])
    }

    /// `int dmu |f|^2` for the unnormalized amplitude.
    ///
    /// Integrated in units of the spreads so the integrand is of order one
    /// whatever the physical scale of k.
    pub fn norm_squared(&self, spec: &QuadratureSpec) -> Result<f64> {
        let s = GAUSSIAN_BOX_SIGMAS;
        let r = quad::integrate_cuboid(
            |u| {
                let k = WaveVector::new(u[0] * self.delta_r, u[1] * self.delta_r, self.k0 + u[2] * self.delta_z);
                [C64::from(gaussian_amplitude(self, &k).norm_sqr())]
            },
            [-s; 3],
            [s; 3],
            spec,
        )?
        .into_result()?;
        let jacobian = self.delta_r * self.delta_r * self.delta_z / (2.0 * PI).powi(3);
        Ok(r.scalar().re * jacobian)
    }
}

impl From<[f64; 3]> for WaveVector {
    fn from(k: [f64; 3]) -> Self {
        WaveVector(Vector3::from(k))
    }
}

/// Unnormalized Gaussian amplitude (peak value 1).
pub fn gaussian_amplitude(p: &GaussianPacket, k: &WaveVector) -> C64 {
    let dz = k.0.z - p.k0;
    let kr2 = k.0.x * k.0.x + k.0.y * k.0.y;
    C64::from((-dz * dz / (2.0 * p.delta_z * p.delta_z) - kr2 / (2.0 * p.delta_r * p.delta_r)).exp())
}

/// Leading-order width parameter `delta_r / k0`.
pub fn omega_parameter(p: &GaussianPacket) -> f64 {
    p.delta_r / p.k0
}

pub fn wavenumber_from_wavelength(lambda: f64) -> Result<f64> {
    if lambda > 0.0 && lambda.is_finite() {
        Ok(2.0 * PI / lambda)
    } else {
        Err(Error::domain(format!("wavelength must be positive, got {lambda}")))
    }
}

/// Gaussian packet of a single helicity, normalized so `int dmu |f|^2 = 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussianHelicityMode {
    pub packet: GaussianPacket,
    /// Normalization constant N.
    pub norm: f64,
}

pub fn gaussian_helicity_mode(p: &GaussianPacket, spec: &QuadratureSpec) -> Result<GaussianHelicityMode> {
    if p.k0 - GAUSSIAN_BOX_SIGMAS * p.delta_z <= 0.0 {
        return Err(Error::domain(
            "packet support reaches kz <= 0, where the helicity basis is not defined",
        ));
    }
    let n2 = p.norm_squared(spec)?;
    Ok(GaussianHelicityMode {
        packet: *p,
        norm: 1.0 / n2.sqrt(),
    })
}

impl PhotonMode for GaussianHelicityMode {
    fn amplitude(&self, k: &WaveVector) -> C64 {
        gaussian_amplitude(&self.packet, k) * self.norm
    }

    fn polarization(&self, k: &WaveVector) -> Complex3Vector {
        // the support keeps kz > 0; the fallback only serves points outside it
        match helicity_basis(k) {
            Ok(b) => b.get(self.packet.helicity),
            Err(_) => minimal_rotation_basis(&Vector3::z()).get(self.packet.helicity),
        }
    }

    fn support(&self) -> Support {
        self.packet.support()
    }
}
