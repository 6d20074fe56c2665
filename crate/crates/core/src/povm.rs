//! Direction POVM on physical polarization states.
//!
//! The Cartesian direction state `|j>` is not physical: for a photon with
//! momentum k it has a longitudinal part along `k_hat`. Dropping that part
//! leaves `b_j(k) = j - (j . k_hat) k_hat`, and the operators
//! `E_j = int dmu |k, b_j(k)><k, b_j(k)|` sum to the identity on physical
//! states. Their expectations are the diagonal of the effective density matrix.

use nalgebra::{Matrix3, Vector3};

use crate::error::{Error, Result};
use crate::modes::{helicity_basis, integrate_mode, PhotonMode, WaveVector};
use crate::polmat3::Complex3Vector;
use crate::quad::QuadratureSpec;
use crate::C64;

/// Coefficients of a direction state in the basis `eps+, eps-, k_hat` at one k.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DirectionDecomposition {
    pub direction: Vector3<f64>,
    /// `<eps+|j>`
    pub x_plus: C64,
    /// `<eps-|j>`
    pub x_minus: C64,
    /// `j . k_hat`
    pub x_long: f64,
}

impl DirectionDecomposition {
    /// Expands `j` in the helicity basis at `k`.
    pub fn at(j: &Vector3<f64>, k: &WaveVector) -> Result<Self> {
        check_direction(j)?;
        let b = helicity_basis(k)?;
        let jc = j.map(C64::from);
        Ok(Self {
            direction: *j,
            x_plus: b.eps_plus.dotc(&jc),
            x_minus: b.eps_minus.dotc(&jc),
            x_long: j.dot(&b.k_hat),
        })
    }

    /// `x+ eps+ + x- eps-`, the physical part of `|j>`.
    pub fn transversal(&self, k: &WaveVector) -> Result<Complex3Vector> {
        let b = helicity_basis(k)?;
        Ok(b.eps_plus * self.x_plus + b.eps_minus * self.x_minus)
    }

    /// The full direction state, longitudinal part included.
    pub fn full(&self, k: &WaveVector) -> Result<Complex3Vector> {
        let b = helicity_basis(k)?;
        Ok(self.transversal(k)? + b.k_hat.map(C64::from) * C64::from(self.x_long))
    }
}

/// A POVM element `E_j` given by its direction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PovmElement {
    pub direction: Vector3<f64>,
}

impl PovmElement {
    pub fn new(direction: Vector3<f64>) -> Result<Self> {
        check_direction(&direction)?;
        Ok(Self { direction })
    }

    pub fn axes() -> [Self; 3] {
        [Vector3::x(), Vector3::y(), Vector3::z()].map(|direction| Self { direction })
    }

    pub fn b(&self, k: &WaveVector) -> Result<Complex3Vector> {
        transversal_part(&self.direction, k)
    }
}

fn check_direction(j: &Vector3<f64>) -> Result<()> {
    if (j.norm() - 1.0).abs() > 1e-12 {
        return Err(Error::domain(format!(
            "direction must be a unit vector, |j| = {}",
            j.norm()
        )));
    }
    Ok(())
}

fn transversal_real(j: &Vector3<f64>, u: &Vector3<f64>) -> Vector3<f64> {
    j - u * j.dot(u)
}

/// `b_j(k) = j - (j . k_hat) k_hat`.
pub fn transversal_part(j: &Vector3<f64>, k: &WaveVector) -> Result<Complex3Vector> {
    check_direction(j)?;
    Ok(transversal_real(j, &k.unit()?).map(C64::from))
}

/// `<Psi| E_j |Psi> = int dmu |f|^2 |b_j . alpha|^2 / int dmu |f|^2`.
pub fn povm_expectation(mode: &(impl PhotonMode + ?Sized), j: &Vector3<f64>, spec: &QuadratureSpec) -> Result<f64> {
    check_direction(j)?;
    let q = integrate_mode(
        mode,
        |k, f, a| {
            let w = f.norm_sqr();
            let b = k
                .unit()
                .map(|u| transversal_real(j, &u))
                .unwrap_or_else(|_| Vector3::zeros());
            let amp = a.x * b.x + a.y * b.y + a.z * b.z;
            [C64::from(w * amp.norm_sqr()), C64::from(w)]
        },
        spec,
    )?
    .into_result()?;
    let norm = q.value[1].re;
    if !(norm > 0.0 && norm.is_finite()) {
        return Err(Error::domain("mode has zero norm on its support"));
    }
    Ok(q.value[0].re / norm)
}

/// Max-norm of `sum_j b_j b_j^T - (1 - k_hat k_hat^T)`.
pub fn completeness_defect(k: &WaveVector) -> Result<f64> {
    let u = k.unit()?;
    let mut sum = Matrix3::<f64>::zeros();
    for j in [Vector3::x(), Vector3::y(), Vector3::z()] {
        let b = transversal_real(&j, &u);
        sum += b * b.transpose();
    }
    let defect = sum - (Matrix3::identity() - u * u.transpose());
    Ok(defect.amax())
}

/// Directions used by [`direction_state_completeness`]: a Fibonacci lattice
/// on the sphere, which never hits the poles exactly.
pub fn sample_directions(n: usize) -> Vec<WaveVector> {
    let golden = std::f64::consts::PI * (3.0 - 5f64.sqrt());
    (0..n)
        .map(|i| {
            let z = 1.0 - 2.0 * (i as f64 + 0.5) / n as f64;
            let r = (1.0 - z * z).sqrt();
            let phi = golden * i as f64;
            WaveVector::new(r * phi.cos(), r * phi.sin(), z)
        })
        .collect()
}

/// Largest defect of `sum_j |j><j| = 1` when each `|j>` is rebuilt from its
/// helicity and longitudinal coefficients, over [`sample_directions`].
pub fn direction_state_completeness() -> f64 {
    let mut worst: f64 = 0.0;
    for k in sample_directions(200) {
        let mut sum = Matrix3::<C64>::zeros();
        for j in [Vector3::x(), Vector3::y(), Vector3::z()] {
            let v = DirectionDecomposition::at(&j, &k)
                .and_then(|d| d.full(&k))
                .expect("lattice avoids the negative z axis");
            sum += v * v.adjoint();
        }
        let defect = (sum - Matrix3::identity()).map(|z| z.norm()).max();
        worst = worst.max(defect);
    }
    worst
}
