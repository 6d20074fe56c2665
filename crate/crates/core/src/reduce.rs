//! Density matrices from photon modes.
//!
//! [`effective_density`] is the rotation-covariant 3x3 description. The
//! helicity-component 2x2 matrix of [`naive_reduced_2x2`] is kept as a
//! diagnostic: it depends on the phase convention of the helicity basis and
//! therefore has no definite behaviour under rotations.

use std::cell::Cell;

use nalgebra::{Matrix2, Matrix3, Vector3};

use crate::error::{Error, Result};
use crate::modes::{helicity_basis, integrate_mode, minimal_rotation, Helicity, PhotonMode};
use crate::polmat3::{DensityMatrix3, DensityTolerance, Rotation3};
use crate::quad::{QuadratureResult, QuadratureSpec};
use crate::C64;

/// Largest width parameter accepted by the leading-order series forms.
pub const SERIES_OMEGA_LIMIT: f64 = 0.3;

/// 2x2 matrix in the (+, -) helicity basis.
pub type HelicityMatrix2 = Matrix2<C64>;

/// Upper-triangle index pairs integrated for a Hermitian 3x3 matrix.
const UPPER: [(usize, usize); 6] = [(0, 0), (1, 1), (2, 2), (0, 1), (0, 2), (1, 2)];

/// A density matrix together with the quadrature that produced it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DensityEstimate {
    pub rho: DensityMatrix3,
    /// Upper-triangle entries in the order xx, yy, zz, xy, xz, yz, then the norm.
    pub quadrature: QuadratureResult<7>,
}

/// `rho_mn = int dmu |f|^2 alpha_m alpha_n^* / int dmu |f|^2`.
pub fn effective_density(mode: &(impl PhotonMode + ?Sized), spec: &QuadratureSpec) -> Result<DensityMatrix3> {
    Ok(effective_density_estimate(mode, spec)?.rho)
}

pub fn effective_density_estimate(mode: &(impl PhotonMode + ?Sized), spec: &QuadratureSpec) -> Result<DensityEstimate> {
    let q = integrate_mode(
        mode,
        |_, f, a| {
            let w = f.norm_sqr();
            let mut out = [C64::from(0.0); 7];
            for (slot, &(m, n)) in out.iter_mut().zip(UPPER.iter()) {
                *slot = a[m] * a[n].conj() * w;
            }
            out[6] = C64::from(w);
            out
        },
        spec,
    )?
    .into_result()?;
    let norm = q.value[6].re;
    if !(norm > 0.0 && norm.is_finite()) {
        return Err(Error::domain("mode has zero norm on its support"));
    }
    let mut m = Matrix3::<C64>::zeros();
    for (c, &(i, j)) in UPPER.iter().enumerate() {
        let v = q.value[c] / norm;
        if i == j {
            m[(i, i)] = C64::from(v.re);
        } else {
            m[(i, j)] = v;
            m[(j, i)] = v.conj();
        }
    }
    let rho = DensityMatrix3::with_tolerance(m, DensityTolerance::quadrature(spec.rel_tol))?;
    Ok(DensityEstimate { rho, quadrature: q })
}

/// `rho_{s s'} = int dmu f_s f_{s'}^*` with `f_s = f (alpha . eps_s^*)`,
/// normalized by `int dmu |f|^2`.
pub fn naive_reduced_2x2(mode: &(impl PhotonMode + ?Sized), spec: &QuadratureSpec) -> Result<HelicityMatrix2> {
    let singular = Cell::new(false);
    let q = integrate_mode(
        mode,
        |k, f, a| {
            let Ok(b) = helicity_basis(k) else {
                singular.set(true);
                return [C64::from(0.0); 4];
            };
            let fp = f * a.dotc(&b.eps_plus).conj();
            let fm = f * a.dotc(&b.eps_minus).conj();
            [
                C64::from(fp.norm_sqr()),
                C64::from(fm.norm_sqr()),
                fp * fm.conj(),
                C64::from(f.norm_sqr()),
            ]
        },
        spec,
    )?
    .into_result()?;
    if singular.get() {
        return Err(Error::domain(
            "mode support touches the negative z axis, where the helicity basis is undefined",
        ));
    }
    let norm = q.value[3].re;
    if !(norm > 0.0 && norm.is_finite()) {
        return Err(Error::domain("mode has zero norm on its support"));
    }
    let off = q.value[2] / norm;
    Ok(Matrix2::new(
        C64::from(q.value[0].re / norm),
        off,
        off.conj(),
        C64::from(q.value[1].re / norm),
    ))
}

/// Eigenvalues of a Hermitian 2x2 matrix, descending.
pub fn eigenvalues_hermitian2(m: &HelicityMatrix2) -> [f64; 2] {
    let a = m[(0, 0)].re;
    let d = m[(1, 1)].re;
    let b = 0.5 * (m[(0, 1)] + m[(1, 0)].conj());
    let mean = 0.5 * (a + d);
    let r = (0.5 * (a - d)).hypot(b.norm());
    [mean + r, mean - r]
}

fn check_series_omega(omega: f64) -> Result<()> {
    if (0.0..SERIES_OMEGA_LIMIT).contains(&omega) {
        Ok(())
    } else {
        Err(Error::domain(format!(
            "series forms need 0 <= omega < {SERIES_OMEGA_LIMIT}, got {omega}"
        )))
    }
}

/// `w` times the circular projector on the xy block plus `zz` on the z axis.
pub(crate) fn circular_block(w: f64, zz: f64, h: Helicity) -> DensityMatrix3 {
    let half = C64::from(0.5 * w);
    let off = C64::new(0.0, -0.5 * w * h.sign());
    let zero = C64::from(0.0);
    DensityMatrix3::from_raw(Matrix3::new(
        half,
        off,
        zero,
        off.conj(),
        half,
        zero,
        zero,
        zero,
        C64::from(zz),
    ))
}

/// Leading-order density matrix of a helicity wave packet:
/// `(1 - omega^2/2)` on the circular projector and `omega^2 / 2` along z.
pub fn series_density_eq9(omega: f64, helicity: Helicity) -> Result<DensityMatrix3> {
    check_series_omega(omega)?;
    let zz = 0.5 * omega * omega;
    Ok(circular_block(1.0 - zz, zz, helicity))
}

/// Leading-order error probability `omega^2 / 2` for telling the two
/// helicities of a wave packet apart, as stated in closed form.
///
/// Evaluating [`crate::polmat3::error_probability`] on the two
/// [`series_density_eq9`] matrices gives `omega^2 / 4` instead; both are
/// exposed so callers can report the two side by side.
pub fn error_probability_series_eq10(omega: f64) -> Result<f64> {
    check_series_omega(omega)?;
    Ok(0.5 * omega * omega)
}

/// Frame whose z axis is the intensity-weighted mean of `k_hat`.
pub fn mean_momentum_frame(mode: &(impl PhotonMode + ?Sized), spec: &QuadratureSpec) -> Result<Rotation3> {
    let q = integrate_mode(
        mode,
        |k, f, _| {
            let w = f.norm_sqr();
            let u = k.unit().unwrap_or_else(|_| Vector3::zeros());
            [C64::from(w * u.x), C64::from(w * u.y), C64::from(w * u.z)]
        },
        spec,
    )?
    .into_result()?;
    let mean = Vector3::new(q.value[0].re, q.value[1].re, q.value[2].re);
    if mean.norm() == 0.0 {
        return Err(Error::domain("mean momentum direction is undefined"));
    }
    minimal_rotation(&(mean / mean.norm()))
}

/// `rho` expressed in the coordinates of `frame`: `R^T rho R`.
pub fn in_frame(rho: &DensityMatrix3, frame: &Rotation3) -> DensityMatrix3 {
    rho.rotate(&frame.inverse())
}

/// Largest coupling between the transverse block and the z axis of `frame`.
pub fn block_diagonality_residual(rho: &DensityMatrix3, frame: &Rotation3) -> f64 {
    let r = in_frame(rho, frame);
    [r.get(0, 2), r.get(1, 2), r.get(2, 0), r.get(2, 1)]
        .iter()
        .map(|z| z.norm())
        .fold(0.0, f64::max)
}

/// Width parameter read off a computed matrix: `sqrt(2 rho_zz)` in `frame`.
pub fn omega_from_density(rho: &DensityMatrix3, frame: &Rotation3) -> f64 {
    (2.0 * in_frame(rho, frame).get(2, 2).re).max(0.0).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::modes::{
        gaussian_helicity_mode, plane_wave_mode, rotate_mode, CustomMode, GaussianPacket, Support, WaveVector,
    };
    use crate::polmat3::error_probability;
    use approx::assert_relative_eq;
    use std::f64::consts::{FRAC_1_SQRT_2, PI};

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn spec() -> QuadratureSpec {
        QuadratureSpec::default()
    }

    fn eps(h: Helicity) -> Vector3<C64> {
        helicity_basis(&WaveVector::along_z(1.0)).unwrap().get(h)
    }

    fn packet(omega: f64, dz: f64, h: Helicity) -> GaussianPacket {
        GaussianPacket::new(1.0, omega, dz, h).unwrap()
    }

    #[test]
    fn plane_wave_densities_are_exact() {
        let m = plane_wave_mode(WaveVector::along_z(5.0), eps(Helicity::Plus)).unwrap();
        let rho = effective_density(&m, &spec()).unwrap();
        let expected = Matrix3::new(
            c(0.5, 0.0),
            c(0.0, -0.5),
            c(0.0, 0.0),
            c(0.0, 0.5),
            c(0.5, 0.0),
            c(0.0, 0.0),
            c(0.0, 0.0),
            c(0.0, 0.0),
            c(0.0, 0.0),
        );
        assert!((rho.matrix() - expected).norm() < 1e-15);

        let x = Vector3::<f64>::x().map(C64::from);
        let rho = effective_density(&plane_wave_mode(WaveVector::along_z(1.0), x).unwrap(), &spec()).unwrap();
        assert_eq!(rho, DensityMatrix3::diagonal(1.0, 0.0, 0.0).unwrap());
        let z = Vector3::<f64>::z().map(C64::from);
        let rho = effective_density(&plane_wave_mode(WaveVector::new(1.0, 0.0, 0.0), z).unwrap(), &spec()).unwrap();
        assert_eq!(rho, DensityMatrix3::diagonal(0.0, 0.0, 1.0).unwrap());
    }

    #[test]
    fn naive_plane_wave_examples() {
        let m = plane_wave_mode(WaveVector::along_z(1.0), eps(Helicity::Plus)).unwrap();
        let n = naive_reduced_2x2(&m, &spec()).unwrap();
        assert!((n - Matrix2::new(c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(0.0, 0.0))).norm() < 1e-15);

        let sup = (eps(Helicity::Plus) + eps(Helicity::Minus)) * C64::from(FRAC_1_SQRT_2);
        let m = plane_wave_mode(WaveVector::along_z(1.0), sup).unwrap();
        let n = naive_reduced_2x2(&m, &spec()).unwrap();
        let h = c(0.5, 0.0);
        assert!((n - Matrix2::new(h, h, h, h)).norm() < 1e-15);
    }

    #[test]
    fn gaussian_packet_density_structure() {
        let p = packet(0.05, 0.01, Helicity::Plus);
        let plus = gaussian_helicity_mode(&p, &spec()).unwrap();
        let minus = gaussian_helicity_mode(&p.with_helicity(Helicity::Minus), &spec()).unwrap();
        let rp = effective_density(&plus, &spec()).unwrap();
        let rm = effective_density(&minus, &spec()).unwrap();
        assert!(rm.max_abs_diff(&rp.conj()) < 1e-10);

        // single helicity: the naive matrix is a pure projector while rho is mixed
        let n = naive_reduced_2x2(&plus, &spec()).unwrap();
        assert!((n[(0, 0)].re - 1.0).abs() < 1e-9);
        assert!(n[(1, 1)].re.abs() < 1e-12 && n[(0, 1)].norm() < 1e-12);
        assert!(rp.purity() < 1.0 - 1e-3);

        let zz = rp.get(2, 2).re;
        assert_relative_eq!(zz, 0.5 * 0.05 * 0.05, max_relative = 0.01);
        let frame = mean_momentum_frame(&plus, &spec()).unwrap();
        assert!(block_diagonality_residual(&rp, &frame) < 1e-8);
        assert_relative_eq!(omega_from_density(&rp, &frame), 0.05, max_relative = 0.01);
    }

    #[test]
    fn packet_zz_against_riemann_sum() {
        // midpoint sum over a +-5 sigma box with 100^3 nodes
        let p = packet(0.05, 0.01, Helicity::Plus);
        let n = 100;
        let (mut num, mut den) = (0.0, 0.0);
        for i in 0..n {
            for j in 0..n {
                for l in 0..n {
                    let u = |t: usize| -5.0 + 10.0 * (t as f64 + 0.5) / n as f64;
                    let k = Vector3::new(u(i) * p.delta_r, u(j) * p.delta_r, p.k0 + u(l) * p.delta_z);
                    let w = (-(u(i).powi(2) + u(j).powi(2) + u(l).powi(2))).exp();
                    let kz = k.z / k.norm();
                    num += w * 0.5 * (1.0 - kz * kz);
                    den += w;
                }
            }
        }
        let oracle = num / den;
        let mode = gaussian_helicity_mode(&p, &spec()).unwrap();
        let zz = effective_density(&mode, &spec()).unwrap().get(2, 2).re;
        assert_relative_eq!(zz, oracle, max_relative = 0.01);
    }

    #[test]
    fn series_examples() {
        let r0 = series_density_eq9(0.0, Helicity::Plus).unwrap();
        assert!(r0.max_abs_diff(&DensityMatrix3::pure(&eps(Helicity::Plus)).unwrap()) < 1e-15);
        let r = series_density_eq9(0.1, Helicity::Plus).unwrap();
        assert_relative_eq!(r.get(2, 2).re, 0.005, epsilon = 1e-15);
        assert_relative_eq!(r.trace(), 1.0, epsilon = 1e-15);
        assert_eq!(series_density_eq9(0.1, Helicity::Minus).unwrap(), r.conj());
        assert!(series_density_eq9(0.3, Helicity::Plus).is_err());
        assert!(series_density_eq9(-0.1, Helicity::Plus).is_err());

        assert_eq!(error_probability_series_eq10(0.0).unwrap(), 0.0);
        assert_relative_eq!(
            error_probability_series_eq10(5e-4).unwrap(),
            1.25e-7,
            max_relative = 1e-12
        );
    }

    #[test]
    fn series_matrices_give_a_quarter_omega_squared() {
        // The two series matrices differ only in the xy block, where the
        // difference has eigenvalues +-(1 - omega^2/2) / 2.
        for omega in [0.01, 0.05, 0.1, 0.2] {
            let a = series_density_eq9(omega, Helicity::Plus).unwrap();
            let b = series_density_eq9(omega, Helicity::Minus).unwrap();
            let pe = error_probability(&a, &b);
            assert_relative_eq!(pe, 0.25 * omega * omega, max_relative = 1e-9);
        }
    }

    #[test]
    fn gaussian_quadrature_matches_series_to_fourth_order() {
        let omega = 0.05;
        let p = packet(omega, 0.01, Helicity::Plus);
        let rho = effective_density(&gaussian_helicity_mode(&p, &spec()).unwrap(), &spec()).unwrap();
        let series = series_density_eq9(omega, Helicity::Plus).unwrap();
        assert!(rho.max_abs_diff(&series) <= omega.powi(4) + 1e-8);
    }

    #[test]
    fn rotation_covariance_of_packet() {
        let p = packet(0.05, 0.02, Helicity::Minus);
        let mode = gaussian_helicity_mode(&p, &spec()).unwrap();
        let r = Rotation3::about_axis(&Vector3::new(1.0, 2.0, -0.5), 1.1).unwrap();
        let rho = effective_density(&mode, &spec()).unwrap();
        let rotated = effective_density(&rotate_mode(mode, r), &spec()).unwrap();
        assert!(rotated.max_abs_diff(&rho.rotate(&r)) < 1e-8);
    }

    /// A linearly polarized packet turned by a quarter turn about x: the
    /// rotation shuffles helicity phases in a k-dependent way, so the naive
    /// matrix loses purity and no 2x2 unitary can map one onto the other.
    #[test]
    fn naive_reduction_is_not_covariant() {
        let p = packet(0.08, 0.02, Helicity::Plus);
        let g = gaussian_helicity_mode(&p, &spec()).unwrap();
        let linear = CustomMode::new(
            |k: &WaveVector| g.amplitude(k),
            |k: &WaveVector| {
                let b = helicity_basis(k).unwrap();
                (b.eps_plus + b.eps_minus) * C64::from(FRAC_1_SQRT_2)
            },
            g.support(),
        );
        let r = Rotation3::about_axis(&Vector3::x(), PI / 2.0).unwrap();
        let before = eigenvalues_hermitian2(&naive_reduced_2x2(&linear, &spec()).unwrap());
        let after = eigenvalues_hermitian2(&naive_reduced_2x2(&rotate_mode(&linear, r), &spec()).unwrap());
        let gap = (before[0] - after[0]).abs().max((before[1] - after[1]).abs());
        assert!(gap > 100.0 * spec().rel_tol, "spectral gap {gap:e}");

        // the 3x3 description transforms covariantly for the same pair
        let rho = effective_density(&linear, &spec()).unwrap();
        let rho_r = effective_density(&rotate_mode(&linear, r), &spec()).unwrap();
        assert!(rho_r.max_abs_diff(&rho.rotate(&r)) < 1e-8);
    }

    #[test]
    fn support_on_south_pole_is_rejected_by_naive_reduction() {
        let pw = plane_wave_mode(WaveVector::new(0.0, 0.0, -1.0), Vector3::<f64>::x().map(C64::from)).unwrap();
        assert!(naive_reduced_2x2(&pw, &spec()).is_err());
        assert!(matches!(pw.support(), Support::Point(_)));
    }
}
