//! The five report-producing commands.

use std::collections::BTreeMap;

use nalgebra::Vector3;
use polfocus_core::detector::{
    self, energy_fractions, error_probability_detector, paraxial_longitudinal_fraction, photocurrents_planar,
    photocurrents_spherical, DetectorScenario, ParaxialBeam, Wavefront,
};
use polfocus_core::lens::{self, circular, lens_density_series_eq18, lens_output_state, LensSpec, SERIES_THETA_LIMIT};
use polfocus_core::modes::{
    gaussian_helicity_mode, omega_parameter, wavenumber_from_wavelength, GaussianPacket, Helicity, PARAXIAL_LIMIT,
};
use polfocus_core::polmat3::{error_probability, DensityTolerance};
use polfocus_core::povm::{completeness_defect, povm_expectation, DirectionDecomposition, PovmElement};
use polfocus_core::reduce::{
    block_diagonality_residual, effective_density_estimate, eigenvalues_hermitian2, error_probability_series_eq10,
    mean_momentum_frame, naive_reduced_2x2, omega_from_density, series_density_eq9, DensityEstimate,
};
use polfocus_core::{DensityMatrix3, QuadratureSpec, WaveVector, C64};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde_json::Value;
use thiserror::Error;

use crate::config::{ConfigError, Params};
use crate::report::{QuadratureInfo, Report, Results, Table};

pub const DEFAULT_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Command {
    Lens,
    Wavepacket,
    Detector,
    PovmCheck,
    Sweep,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Lens => "lens",
            Command::Wavepacket => "wavepacket",
            Command::Detector => "detector",
            Command::PovmCheck => "povm-check",
            Command::Sweep => "sweep",
        }
    }
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Core(#[from] polfocus_core::Error),
    #[error("cannot write {path}: {source}")]
    Output { path: String, source: std::io::Error },
}

impl CliError {
    /// 2 for configuration problems, 3 for numerical failures.
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Core(polfocus_core::Error::NonConvergence { .. })
            | CliError::Core(polfocus_core::Error::InvalidDensity(_)) => 3,
            _ => 2,
        }
    }
}

type CliResult<T> = Result<T, CliError>;

/// Collects a report while a command runs.
struct Builder {
    tol: f64,
    params: BTreeMap<String, Value>,
    results: Results,
    error_estimates: BTreeMap<String, f64>,
}

impl Builder {
    fn new(tol: f64) -> Self {
        let mut params = BTreeMap::new();
        params.insert("tol".into(), Value::from(tol));
        Self {
            tol,
            params,
            results: Results::default(),
            error_estimates: BTreeMap::new(),
        }
    }

    fn param(&mut self, name: &str, v: impl Into<Value>) {
        self.params.insert(name.into(), v.into());
    }

    /// Re-runs the density validator before the matrix is emitted.
    fn matrix(&mut self, name: &str, rho: &DensityMatrix3) -> CliResult<()> {
        let checked = DensityMatrix3::with_tolerance(*rho.matrix(), DensityTolerance::quadrature(self.tol))?;
        self.results.matrix(name, &checked);
        Ok(())
    }

    /// Records the quadrature error relative to the normalization integral.
    fn estimate(&mut self, name: &str, est: &DensityEstimate) {
        let norm = est.quadrature.value[6].re;
        self.error_estimates
            .insert(name.into(), est.quadrature.error_estimate / norm);
    }

    fn finish(self, command: Command) -> Report {
        Report {
            command: command.name().into(),
            params: self.params,
            results: self.results,
            quadrature: QuadratureInfo {
                tol: self.tol,
                error_estimates: self.error_estimates,
                converged: true,
            },
        }
    }
}

pub fn quadrature_spec(params: &Params) -> CliResult<QuadratureSpec> {
    let tol = params.f64("tol")?.unwrap_or(DEFAULT_TOL);
    let mut spec = QuadratureSpec::with_rel_tol(tol);
    if let Some(n) = params.usize("max_subdivisions")? {
        spec.max_subdivisions = n;
    }
    spec.validate()?;
    Ok(spec)
}

pub fn run(command: Command, params: &Params) -> CliResult<Report> {
    let spec = quadrature_spec(params)?;
    match command {
        Command::Lens => run_lens(params, &spec),
        Command::Wavepacket => run_wavepacket(params, &spec),
        Command::Detector => run_detector(params, &spec),
        Command::PovmCheck => run_povm_check(params, &spec),
        Command::Sweep => run_sweep(params, &spec),
    }
}

const LENS_KEYS: [&str; 4] = ["theta_max", "aperture_ratio", "focal_length", "aperture_radius"];

/// `theta_max`, or `aperture_ratio = l/f`, or `focal_length` with `aperture_radius`.
fn lens_from_params(params: &Params) -> CliResult<LensSpec> {
    params.exclusive(&["theta_max", "aperture_ratio", "focal_length"])?;
    if let Some(t) = params.f64("theta_max")? {
        return Ok(LensSpec::from_theta_max(t)?);
    }
    if let Some(ratio) = params.f64("aperture_ratio")? {
        return Ok(LensSpec::new(1.0, ratio)?);
    }
    if let Some(f) = params.f64("focal_length")? {
        return Ok(LensSpec::new(f, params.require_f64("aperture_radius")?)?);
    }
    Err(ConfigError::Missing("theta_max").into())
}

fn with_tol(keys: &[&'static str]) -> Vec<&'static str> {
    let mut v = keys.to_vec();
    v.extend(["tol", "max_subdivisions"]);
    v
}

fn run_lens(params: &Params, spec: &QuadratureSpec) -> CliResult<Report> {
    params.check_known(&with_tol(&LENS_KEYS))?;
    let lens = lens_from_params(params)?;
    let theta = lens.theta_max();
    let mut b = Builder::new(spec.rel_tol);
    b.param("theta_max", theta);
    b.param("focal_length", lens.focal_length);
    b.param("aperture_radius", lens.aperture_radius);

    let mut rho = Vec::new();
    for (h, name) in [(Helicity::Plus, "rho_plus"), (Helicity::Minus, "rho_minus")] {
        let est = effective_density_estimate(&lens_output_state(&lens, &circular(h))?, spec)?;
        b.matrix(name, &est.rho)?;
        b.estimate(name, &est);
        rho.push(est.rho);
    }
    let (plus, minus) = (rho[0], rho[1]);
    let pe = error_probability(&plus, &minus);

    let r = &mut b.results;
    r.scalar("theta_max", theta);
    r.scalar("error_probability", pe);
    r.scalar("error_probability_series", theta * theta / 8.0);
    r.scalar("rho_zz", plus.get(2, 2).re);
    r.scalar("rho_xy_im", plus.get(0, 1).im);
    r.oracle("rho_zz", lens::closed_form::rho_zz(theta));
    r.oracle("rho_xy_im", lens::closed_form::rho_xy_im(theta));
    r.oracle("error_probability", lens::closed_form::error_probability(theta));
    r.residual("rho_zz", (plus.get(2, 2).re - lens::closed_form::rho_zz(theta)).abs());
    r.residual(
        "rho_xy_im",
        (plus.get(0, 1).im - lens::closed_form::rho_xy_im(theta)).abs(),
    );
    r.residual(
        "error_probability",
        (pe - lens::closed_form::error_probability(theta)).abs(),
    );
    r.residual("error_probability_series", (pe - theta * theta / 8.0).abs());
    r.residual("conjugation_symmetry", minus.max_abs_diff(&plus.conj()));
    if theta < SERIES_THETA_LIMIT {
        let sp = lens_density_series_eq18(theta, Helicity::Plus)?;
        let sm = lens_density_series_eq18(theta, Helicity::Minus)?;
        b.results.residual("series_plus", plus.max_abs_diff(&sp));
        b.results.residual("series_minus", minus.max_abs_diff(&sm));
        b.results.scalar("series_bound", theta.powi(4));
        b.matrix("rho_series_plus", &sp)?;
        b.matrix("rho_series_minus", &sm)?;
    }
    Ok(b.finish(Command::Lens))
}

fn packet_from_params(params: &Params) -> CliResult<GaussianPacket> {
    params.exclusive(&["k0", "lambda"])?;
    params.exclusive(&["delta_r", "tau"])?;
    let k0 = match (params.f64("k0")?, params.f64("lambda")?) {
        (Some(k0), _) => k0,
        (None, Some(lambda)) => wavenumber_from_wavelength(lambda)?,
        (None, None) => return Err(ConfigError::Missing("k0").into()),
    };
    let delta_r = match (params.f64("delta_r")?, params.f64("tau")?) {
        (Some(d), _) => d,
        (None, Some(tau)) if tau > 0.0 => 1.0 / tau,
        (None, Some(tau)) => return Err(ConfigError::Invalid(format!("tau must be positive, got {tau}")).into()),
        (None, None) => return Err(ConfigError::Missing("delta_r").into()),
    };
    let delta_z = params.f64("delta_z")?.unwrap_or(0.01 * k0);
    let helicity = Helicity::from_sign(params.helicity("helicity")?.unwrap_or(1))?;
    let omega = delta_r / k0;
    if omega.is_nan() || omega >= PARAXIAL_LIMIT {
        return Err(ConfigError::Invalid(format!(
            "paraxial validity requires delta_r/k0 < {PARAXIAL_LIMIT}, got {omega}"
        ))
        .into());
    }
    Ok(GaussianPacket::new(k0, delta_r, delta_z, helicity)?)
}

fn run_wavepacket(params: &Params, spec: &QuadratureSpec) -> CliResult<Report> {
    params.check_known(&with_tol(&["k0", "lambda", "delta_r", "tau", "delta_z", "helicity"]))?;
    let packet = packet_from_params(params)?;
    let omega = omega_parameter(&packet);
    let mut b = Builder::new(spec.rel_tol);
    b.param("k0", packet.k0);
    b.param("delta_r", packet.delta_r);
    b.param("delta_z", packet.delta_z);
    b.param("helicity", packet.helicity.sign());

    let mut rho = Vec::new();
    for (h, name) in [(Helicity::Plus, "rho_plus"), (Helicity::Minus, "rho_minus")] {
        let mode = gaussian_helicity_mode(&packet.with_helicity(h), spec)?;
        let est = effective_density_estimate(&mode, spec)?;
        b.matrix(name, &est.rho)?;
        b.estimate(name, &est);
        rho.push(est.rho);
    }
    let (plus, minus) = (rho[0], rho[1]);
    let selected = if packet.helicity == Helicity::Plus { plus } else { minus };
    let mode = gaussian_helicity_mode(&packet, spec)?;
    let frame = mean_momentum_frame(&mode, spec)?;
    let naive = naive_reduced_2x2(&mode, spec)?;
    b.results.matrix2("naive_2x2", &naive);
    let sp = series_density_eq9(omega, Helicity::Plus)?;
    let sm = series_density_eq9(omega, Helicity::Minus)?;
    b.matrix("rho_series_plus", &sp)?;
    b.matrix("rho_series_minus", &sm)?;

    let pe = error_probability(&plus, &minus);
    let stated = error_probability_series_eq10(omega)?;
    let [n0, n1] = eigenvalues_hermitian2(&naive);
    let r = &mut b.results;
    r.scalar("omega", omega);
    r.scalar("omega_from_density", omega_from_density(&selected, &frame));
    r.scalar("error_probability", pe);
    r.scalar("error_probability_series_matrices", error_probability(&sp, &sm));
    r.scalar("naive_eigenvalue_0", n0);
    r.scalar("naive_eigenvalue_1", n1);
    r.scalar("naive_trace", (naive[(0, 0)] + naive[(1, 1)]).re);
    r.scalar("series_bound", omega.powi(4));
    r.oracle("error_probability_omega_sq_over_2", stated);
    r.oracle("error_probability_omega_sq_over_4", 0.25 * omega * omega);
    r.residual("error_probability_vs_omega_sq_over_2", (pe - stated).abs());
    r.residual(
        "error_probability_vs_omega_sq_over_4",
        (pe - 0.25 * omega * omega).abs(),
    );
    r.residual("block_diagonality", block_diagonality_residual(&selected, &frame));
    r.residual("series_plus", plus.max_abs_diff(&sp));
    r.residual("series_minus", minus.max_abs_diff(&sm));
    r.residual("conjugation_symmetry", minus.max_abs_diff(&plus.conj()));
    Ok(b.finish(Command::Wavepacket))
}

fn run_detector(params: &Params, spec: &QuadratureSpec) -> CliResult<Report> {
    params.check_known(&with_tol(&[
        "theta_max",
        "aperture_ratio",
        "focal_length",
        "aperture_radius",
        "k0",
        "tau",
        "pulse_length",
        "delta",
        "z0",
    ]))?;
    let lens = lens_from_params(params)?;
    let theta = lens.theta_max();
    let k0 = params.f64("k0")?.unwrap_or(10.0);
    let tau = params.f64("tau")?.unwrap_or(1.0);
    let pulse_length = params.f64("pulse_length")?.unwrap_or(0.05);
    let delta = params.f64("delta")?.unwrap_or(2e-9);
    let z0 = params.f64("z0")?.unwrap_or(1.0);
    let mut b = Builder::new(spec.rel_tol);
    b.param("theta_max", theta);
    b.param("k0", k0);
    b.param("tau", tau);
    b.param("pulse_length", pulse_length);
    b.param("delta", delta);
    b.param("z0", z0);

    let state = lens_output_state(&lens, &circular(Helicity::Plus))?;
    let est = effective_density_estimate(&state, spec)?;
    b.matrix("rho_plus", &est.rho)?;
    b.estimate("rho_plus", &est);
    let rho = est.rho;
    let sph = photocurrents_spherical(&state, &DetectorScenario::spherical(theta)?, spec)?;
    let w = energy_fractions(&state, spec)?;
    let pe_det = error_probability_detector(theta, spec)?;

    let beam = ParaxialBeam::new(k0, tau, Helicity::Plus, true, pulse_length)?;
    let scenario = DetectorScenario::new(Vector3::z(), z0, delta, Wavefront::PlanarParaxial)?;
    let planar = photocurrents_planar(&beam, &scenario, spec)?;

    let r = &mut b.results;
    let axes = ["x", "y", "z"];
    let mut discrepancy: f64 = 0.0;
    let mut planar_identity: f64 = 0.0;
    for (j, a) in axes.iter().enumerate() {
        r.scalar(&format!("current_{a}"), sph.currents[j]);
        r.scalar(&format!("p_{a}"), sph.probabilities[j]);
        r.scalar(&format!("energy_fraction_{a}"), w[j]);
        r.scalar(&format!("rho_{a}{a}"), rho.get(j, j).re);
        r.scalar(&format!("planar_p_{a}"), planar.currents.probabilities[j]);
        r.scalar(&format!("planar_energy_fraction_{a}"), planar.energy_fractions[j]);
        discrepancy = discrepancy.max((sph.probabilities[j] - rho.get(j, j).re).abs());
        planar_identity = planar_identity.max((planar.currents.probabilities[j] - planar.energy_fractions[j]).abs());
    }
    r.scalar("discrepancy", discrepancy);
    r.scalar("error_probability_detector", pe_det);
    r.oracle("p_z", detector::closed_form::p_z(theta));
    r.oracle("rho_zz", lens::closed_form::rho_zz(theta));
    r.oracle("discrepancy", detector::closed_form::discrepancy(theta));
    r.oracle("error_probability_detector", 0.5 * detector::closed_form::p_z(theta));
    r.oracle("planar_p_z", paraxial_longitudinal_fraction(k0, tau));
    r.residual("p_z", (sph.probabilities[2] - detector::closed_form::p_z(theta)).abs());
    r.residual("rho_zz", (rho.get(2, 2).re - lens::closed_form::rho_zz(theta)).abs());
    r.residual(
        "discrepancy",
        (discrepancy - detector::closed_form::discrepancy(theta).abs()).abs(),
    );
    r.residual(
        "energy_fractions_vs_rho",
        (0..3).map(|j| (w[j] - rho.get(j, j).re).abs()).fold(0.0, f64::max),
    );
    r.residual("planar_identity", planar_identity);
    r.residual(
        "planar_p_z",
        (planar.currents.probabilities[2] - paraxial_longitudinal_fraction(k0, tau)).abs(),
    );
    Ok(b.finish(Command::Detector))
}

/// Uniform random unit vectors from a seeded generator.
fn random_directions(n: usize, seed: u64) -> Vec<WaveVector> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| {
            let z: f64 = rng.random_range(-1.0..1.0);
            let phi: f64 = rng.random_range(0.0..std::f64::consts::TAU);
            let r = (1.0 - z * z).sqrt();
            WaveVector::new(r * phi.cos(), r * phi.sin(), z)
        })
        .collect()
}

fn run_povm_check(params: &Params, spec: &QuadratureSpec) -> CliResult<Report> {
    params.check_known(&with_tol(&["samples", "seed", "k0", "delta_r", "delta_z"]))?;
    let samples = params.usize("samples")?.unwrap_or(100);
    if samples == 0 {
        return Err(ConfigError::Invalid("samples must be at least 1".into()).into());
    }
    let seed = params.u64("seed")?.unwrap_or(0);
    let k0 = params.f64("k0")?.unwrap_or(1.0);
    let delta_r = params.f64("delta_r")?.unwrap_or(0.05 * k0);
    let delta_z = params.f64("delta_z")?.unwrap_or(0.01 * k0);
    let mut b = Builder::new(spec.rel_tol);
    b.param("samples", samples);
    b.param("seed", seed);
    b.param("k0", k0);
    b.param("delta_r", delta_r);
    b.param("delta_z", delta_z);

    let mut projector: f64 = 0.0;
    let mut states: f64 = 0.0;
    for k in random_directions(samples, seed) {
        projector = projector.max(completeness_defect(&k)?);
        let mut sum = nalgebra::Matrix3::<C64>::zeros();
        for j in [Vector3::x(), Vector3::y(), Vector3::z()] {
            let v = DirectionDecomposition::at(&j, &k)?.full(&k)?;
            sum += v * v.adjoint();
        }
        states = states.max((sum - nalgebra::Matrix3::identity()).map(|z| z.norm()).max());
    }

    let packet = GaussianPacket::new(k0, delta_r, delta_z, Helicity::Plus)?;
    let mode = gaussian_helicity_mode(&packet, spec)?;
    let est = effective_density_estimate(&mode, spec)?;
    b.matrix("rho_plus", &est.rho)?;
    b.estimate("rho_plus", &est);
    let r = &mut b.results;
    r.residual("projector_completeness", projector);
    r.residual("direction_state_completeness", states);
    let mut total = 0.0;
    let mut worst: f64 = 0.0;
    for (j, (e, a)) in PovmElement::axes().iter().zip(["x", "y", "z"]).enumerate() {
        let v = povm_expectation(&mode, &e.direction, spec)?;
        let d = est.rho.get(j, j).re;
        r.scalar(&format!("povm_{a}"), v);
        r.oracle(&format!("rho_{a}{a}"), d);
        worst = worst.max((v - d).abs());
        total += v;
    }
    r.scalar("povm_total", total);
    r.residual("povm_vs_density", worst);
    r.residual("povm_total", (total - 1.0).abs());
    Ok(b.finish(Command::PovmCheck))
}

/// Least-squares slope of `ln y` against `ln x`.
pub fn log_log_slope(x: &[f64], y: &[f64]) -> f64 {
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.abs().ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = lx.iter().map(|a| (a - mx) * (a - mx)).sum();
    sxy / sxx
}

pub fn log_spaced(lo: f64, hi: f64, steps: usize) -> Vec<f64> {
    if steps == 1 {
        return vec![lo];
    }
    let (a, b) = (lo.ln(), hi.ln());
    let mut v: Vec<f64> = (0..steps)
        .map(|i| (a + (b - a) * i as f64 / (steps - 1) as f64).exp())
        .collect();
    // pin the endpoints to the requested values
    v[0] = lo;
    v[steps - 1] = hi;
    v
}

const SWEEP_COLUMNS: [&str; 6] = [
    "theta_max",
    "error_probability",
    "residual",
    "p_z",
    "rho_zz",
    "discrepancy",
];

fn sweep_row(theta: f64, spec: &QuadratureSpec) -> CliResult<[f64; 6]> {
    let lens = LensSpec::from_theta_max(theta)?;
    let plus_state = lens_output_state(&lens, &circular(Helicity::Plus))?;
    let plus = effective_density_estimate(&plus_state, spec)?.rho;
    let minus = effective_density_estimate(&lens_output_state(&lens, &circular(Helicity::Minus))?, spec)?.rho;
    let pe = error_probability(&plus, &minus);
    let p = photocurrents_spherical(&plus_state, &DetectorScenario::spherical(theta)?, spec)?.probabilities;
    let discrepancy = (0..3).map(|j| (p[j] - plus.get(j, j).re).abs()).fold(0.0, f64::max);
    Ok([
        theta,
        pe,
        (pe - theta * theta / 8.0).abs(),
        p[2],
        plus.get(2, 2).re,
        discrepancy,
    ])
}

fn run_sweep(params: &Params, spec: &QuadratureSpec) -> CliResult<Report> {
    params.check_known(&with_tol(&["theta_min", "theta_max", "steps"]))?;
    let lo = params.f64("theta_min")?.unwrap_or(0.05);
    let hi = params.f64("theta_max")?.unwrap_or(0.4);
    let steps = params.usize("steps")?.unwrap_or(8);
    if !(lo > 0.0 && lo < hi) {
        return Err(ConfigError::Invalid(format!("need 0 < theta_min < theta_max, got {lo} and {hi}")).into());
    }
    if steps < 2 {
        return Err(ConfigError::Invalid("steps must be at least 2".into()).into());
    }
    polfocus_core::quad::check_theta_max(hi)?;
    let mut b = Builder::new(spec.rel_tol);
    b.param("theta_min", lo);
    b.param("theta_max", hi);
    b.param("steps", steps);

    let thetas = log_spaced(lo, hi, steps);
    let rows = thetas
        .par_iter()
        .map(|&t| sweep_row(t, spec))
        .collect::<CliResult<Vec<_>>>()?;
    let col = |c: usize| rows.iter().map(|r| r[c]).collect::<Vec<f64>>();
    let slope_pe = log_log_slope(&thetas, &col(1));
    let slope_disc = log_log_slope(&thetas, &col(5));
    let worst_rho = rows
        .iter()
        .map(|r| (r[4] - lens::closed_form::rho_zz(r[0])).abs())
        .fold(0.0, f64::max);
    let worst_pz = rows
        .iter()
        .map(|r| (r[3] - detector::closed_form::p_z(r[0])).abs())
        .fold(0.0, f64::max);

    let r = &mut b.results;
    r.scalar("slope_error_probability", slope_pe);
    r.scalar("slope_discrepancy", slope_disc);
    r.oracle("slope_error_probability", 2.0);
    r.oracle("slope_discrepancy", 4.0);
    r.residual("slope_error_probability", (slope_pe - 2.0).abs());
    r.residual("slope_discrepancy", (slope_disc - 4.0).abs());
    r.residual("rho_zz_vs_closed_form", worst_rho);
    r.residual("p_z_vs_closed_form", worst_pz);
    r.table = Some(Table {
        columns: SWEEP_COLUMNS.iter().map(|s| s.to_string()).collect(),
        rows: rows.iter().map(|r| r.to_vec()).collect(),
    });
    Ok(b.finish(Command::Sweep))
}
