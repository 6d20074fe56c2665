//! Browser bindings: three interactive views of a focused photon.
//!
//! Each binding wraps a plain function that returns a flat `Vec<f64>`, so
//! the numerics are tested natively and the page only unpacks arrays.

use polfocus_core::detector::{self, photocurrents_spherical, DetectorScenario};
use polfocus_core::lens::{self, circular, lens_output_state, theta_of_r, LensSpec};
use polfocus_core::modes::Helicity;
use polfocus_core::polmat3::error_probability;
use polfocus_core::quad::check_theta_max;
use polfocus_core::reduce::effective_density;
use polfocus_core::{QuadratureSpec, Result};
use wasm_bindgen::prelude::*;

/// Relative tolerance used by every view.
pub const DEMO_TOL: f64 = 1e-9;

/// Number of values returned by [`lens_summary_values`].
pub const SUMMARY_LEN: usize = 9;

/// Values per row of [`sweep_values`].
pub const SWEEP_STRIDE: usize = 4;

/// Values per sample of [`pupil_field_values`].
pub const FIELD_STRIDE: usize = 7;

fn spec() -> QuadratureSpec {
    QuadratureSpec::with_rel_tol(DEMO_TOL)
}

/// `[P_E, theta^2/8, P_E closed form, rho_xx, rho_zz, Im rho_xy, p_z, |p - rho| max, purity]`
/// for circular input behind a lens of half-angle `theta_max`.
pub fn lens_summary_values(theta_max: f64) -> Result<Vec<f64>> {
    let spec = spec();
    let lens = LensSpec::from_theta_max(theta_max)?;
    let plus_state = lens_output_state(&lens, &circular(Helicity::Plus))?;
    let plus = effective_density(&plus_state, &spec)?;
    let minus = effective_density(&lens_output_state(&lens, &circular(Helicity::Minus))?, &spec)?;
    let p = photocurrents_spherical(&plus_state, &DetectorScenario::spherical(theta_max)?, &spec)?.probabilities;
    let discrepancy = (0..3).map(|j| (p[j] - plus.get(j, j).re).abs()).fold(0.0, f64::max);
    Ok(vec![
        error_probability(&plus, &minus),
        theta_max * theta_max / 8.0,
        lens::closed_form::error_probability(theta_max),
        plus.get(0, 0).re,
        plus.get(2, 2).re,
        plus.get(0, 1).im,
        p[2],
        discrepancy,
        plus.purity(),
    ])
}

/// Rows `[theta, P_E, theta^2/8, p_z - rho_zz]` at `steps` log-spaced angles.
/// The last column uses the closed forms so the curve stays smooth far below
/// the quadrature tolerance.
pub fn sweep_values(theta_min: f64, theta_max: f64, steps: usize) -> Result<Vec<f64>> {
    if !(theta_min > 0.0 && theta_min < theta_max) || steps < 2 {
        return Err(polfocus_core::Error::Domain(format!(
            "need 0 < theta_min < theta_max and at least 2 steps, got {theta_min}, {theta_max}, {steps}"
        )));
    }
    check_theta_max(theta_max)?;
    let spec = spec();
    let (a, b) = (theta_min.ln(), theta_max.ln());
    let mut out = Vec::with_capacity(steps * SWEEP_STRIDE);
    for i in 0..steps {
        let t = (a + (b - a) * i as f64 / (steps - 1) as f64).exp();
        let pe = lens::error_probability_lens(t, &spec)?;
        out.extend([t, pe, t * t / 8.0, detector::closed_form::discrepancy(t)]);
    }
    Ok(out)
}

/// Field just behind the lens on an `n x n` grid over the unit pupil.
/// Samples inside the aperture are `[x, y, Re a_x, Re a_y, Im a_x, Im a_y, |a_z|^2]`
/// with the pupil radius scaled to 1.
pub fn pupil_field_values(theta_max: f64, helicity: i32, n: usize) -> Result<Vec<f64>> {
    if !(2..=64).contains(&n) {
        return Err(polfocus_core::Error::Domain(format!(
            "grid size must lie in [2, 64], got {n}"
        )));
    }
    let lens = LensSpec::from_theta_max(theta_max)?;
    let state = lens_output_state(&lens, &circular(Helicity::from_sign(helicity)?))?;
    let mut out = Vec::new();
    for i in 0..n {
        for j in 0..n {
            let x = -1.0 + 2.0 * (j as f64 + 0.5) / n as f64;
            let y = 1.0 - 2.0 * (i as f64 + 0.5) / n as f64;
            let rho = (x * x + y * y).sqrt();
            if rho > 1.0 {
                continue;
            }
            let theta = theta_of_r(rho * lens.aperture_radius, lens.focal_length);
            let a = state.ray_polarization(theta, y.atan2(x));
            out.extend([x, y, a.x.re, a.y.re, a.x.im, a.y.im, a.z.norm_sqr()]);
        }
    }
    Ok(out)
}

fn js(r: Result<Vec<f64>>) -> std::result::Result<Vec<f64>, JsError> {
    r.map_err(|e| JsError::new(&e.to_string()))
}

#[wasm_bindgen]
pub fn lens_summary(theta_max: f64) -> std::result::Result<Vec<f64>, JsError> {
    js(lens_summary_values(theta_max))
}

#[wasm_bindgen]
pub fn sweep(theta_min: f64, theta_max: f64, steps: usize) -> std::result::Result<Vec<f64>, JsError> {
    js(sweep_values(theta_min, theta_max, steps))
}

#[wasm_bindgen]
pub fn pupil_field(theta_max: f64, helicity: i32, n: usize) -> std::result::Result<Vec<f64>, JsError> {
    js(pupil_field_values(theta_max, helicity, n))
}
