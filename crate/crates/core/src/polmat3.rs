//! 3x3 polarization density matrices.
//!
//! Indices run over the Cartesian axes x, y, z. A density matrix built from
//! transversal polarization vectors `alpha(k)` as `sum w |alpha><alpha|` is
//! Hermitian, has unit trace and is positive semidefinite; [`DensityMatrix3`]
//! checks those three properties on construction.

use std::cmp::Ordering;
use std::f64::consts::PI;
use std::ops::Mul;

use nalgebra::{Matrix2, Matrix3, Vector2, Vector3};

use crate::error::{Error, Result};
use crate::C64;

/// Polarization amplitudes along x, y, z.
pub type Complex3Vector = Vector3<C64>;

/// Hermiticity tolerance accepted by [`eigensystem_hermitian3`], relative to
/// the largest entry (or 1, whichever is larger).
pub const HERMITIAN_INPUT_TOL: f64 = 1e-10;

const ORTHOGONALITY_TOL: f64 = 1e-12;

/// Tolerances used when validating a [`DensityMatrix3`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DensityTolerance {
    pub hermitian: f64,
    pub trace: f64,
    /// Smallest eigenvalue may be as low as `-psd`.
    pub psd: f64,
}

impl DensityTolerance {
    /// For matrices assembled in closed form.
    pub const ANALYTIC: Self = Self {
        hermitian: 1e-12,
        trace: 1e-12,
        psd: 1e-10,
    };

    /// For matrices obtained by quadrature at relative tolerance `rel_tol`.
    pub fn quadrature(rel_tol: f64) -> Self {
        let t = 10.0 * rel_tol;
        Self {
            hermitian: t.max(1e-12),
            trace: t.max(1e-12),
            psd: t.max(1e-10),
        }
    }
}

/// A validated effective polarization density matrix.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DensityMatrix3(Matrix3<C64>);

impl DensityMatrix3 {
    /// Validates `m` with [`DensityTolerance::ANALYTIC`].
    pub fn new(m: Matrix3<C64>) -> Result<Self> {
        Self::with_tolerance(m, DensityTolerance::ANALYTIC)
    }

    pub fn with_tolerance(m: Matrix3<C64>, tol: DensityTolerance) -> Result<Self> {
        if m.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::InvalidDensity("non-finite entry".into()));
        }
        let herm = hermiticity_defect(&m);
        if herm > tol.hermitian {
            return Err(Error::InvalidDensity(format!(
                "not Hermitian: max |m - m^dagger| = {herm:e}"
            )));
        }
        let tr = m.trace();
        if (tr.re - 1.0).abs() > tol.trace || tr.im.abs() > tol.trace {
            return Err(Error::InvalidDensity(format!("trace {tr} differs from 1")));
        }
        let min = eigenvalues_hermitian3(&hermitize(&m))[2];
        if min < -tol.psd {
            return Err(Error::InvalidDensity(format!(
                "not positive semidefinite: smallest eigenvalue {min:e}"
            )));
        }
        Ok(Self(m))
    }

    /// Wraps a matrix that is a density matrix by construction.
    pub(crate) fn from_raw(m: Matrix3<C64>) -> Self {
        Self(m)
    }

    /// `diag(a, b, c)`.
    pub fn diagonal(a: f64, b: f64, c: f64) -> Result<Self> {
        Self::new(Matrix3::from_diagonal(&Vector3::new(
            C64::from(a),
            C64::from(b),
            C64::from(c),
        )))
    }

    /// The projector `|v><v|` of a normalized vector.
    pub fn pure(v: &Complex3Vector) -> Result<Self> {
        from_weighted_outer_products(&[(1.0, *v)])
    }

    pub fn matrix(&self) -> &Matrix3<C64> {
        &self.0
    }

    pub fn get(&self, m: usize, n: usize) -> C64 {
        self.0[(m, n)]
    }

    pub fn trace(&self) -> f64 {
        self.0.trace().re
    }

    /// Entrywise complex conjugate, which maps one helicity onto the other.
    pub fn conj(&self) -> Self {
        Self(self.0.map(|z| z.conj()))
    }

    pub fn rotate(&self, r: &Rotation3) -> Self {
        rotate_density(self, r)
    }

    /// Eigenvalues in descending order.
    pub fn eigenvalues(&self) -> [f64; 3] {
        eigenvalues_hermitian3(&self.0)
    }

    /// `tr(rho^2)`.
    pub fn purity(&self) -> f64 {
        (self.0 * self.0).trace().re
    }

    /// `<j| rho |j>` for a real unit direction.
    pub fn directional(&self, j: &Vector3<f64>) -> f64 {
        let jc = j.map(C64::from);
        (jc.transpose() * self.0 * jc)[(0, 0)].re
    }

    /// Largest entrywise modulus of `self - other`.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        max_abs(&(self.0 - other.0))
    }

    /// Row-major `[re, im]` pairs.
    pub fn to_pairs(&self) -> [[[f64; 2]; 3]; 3] {
        let mut out = [[[0.0; 2]; 3]; 3];
        for (m, row) in out.iter_mut().enumerate() {
            for (n, e) in row.iter_mut().enumerate() {
                let z = self.0[(m, n)];
                *e = [z.re, z.im];
            }
        }
        out
    }
}

/// A proper rotation of the coordinate axes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rotation3(Matrix3<f64>);

impl Rotation3 {
    pub fn new(m: Matrix3<f64>) -> Result<Self> {
        let defect = max_abs_real(&(m * m.transpose() - Matrix3::identity()));
        if defect > ORTHOGONALITY_TOL {
            return Err(Error::domain(format!("matrix is not orthogonal (defect {defect:e})")));
        }
        let det = m.determinant();
        if (det - 1.0).abs() > ORTHOGONALITY_TOL {
            return Err(Error::domain(format!("rotation must have determinant +1, got {det}")));
        }
        Ok(Self(m))
    }

    pub fn identity() -> Self {
        Self(Matrix3::identity())
    }

    /// Right-handed rotation by `angle` about `axis` (Rodrigues' formula).
    pub fn about_axis(axis: &Vector3<f64>, angle: f64) -> Result<Self> {
        let n = axis.norm();
        if !(n > 0.0 && n.is_finite()) {
            return Err(Error::domain("rotation axis must be a nonzero finite vector"));
        }
        let u = axis / n;
        let k = Matrix3::new(0.0, -u.z, u.y, u.z, 0.0, -u.x, -u.y, u.x, 0.0);
        let m = Matrix3::identity() + k * angle.sin() + k * k * (1.0 - angle.cos());
        Ok(Self(m))
    }

    pub fn about_z(angle: f64) -> Self {
        let (s, c) = angle.sin_cos();
        Self(Matrix3::new(c, -s, 0.0, s, c, 0.0, 0.0, 0.0, 1.0))
    }

    pub fn matrix(&self) -> &Matrix3<f64> {
        &self.0
    }

    pub fn inverse(&self) -> Self {
        Self(self.0.transpose())
    }

    pub fn apply(&self, v: &Vector3<f64>) -> Vector3<f64> {
        self.0 * v
    }

    pub fn apply_complex(&self, v: &Complex3Vector) -> Complex3Vector {
        self.0.map(C64::from) * v
    }
}

impl Mul for Rotation3 {
    type Output = Rotation3;

    fn mul(self, rhs: Rotation3) -> Rotation3 {
        Rotation3(self.0 * rhs.0)
    }
}

/// `sum_i w_i v_i v_i^dagger / sum_i w_i`.
pub fn from_weighted_outer_products(samples: &[(f64, Complex3Vector)]) -> Result<DensityMatrix3> {
    if samples.is_empty() {
        return Err(Error::domain("no samples"));
    }
    let mut total = 0.0;
    let mut acc = Matrix3::<C64>::zeros();
    for (w, v) in samples {
        if !(*w >= 0.0 && w.is_finite()) {
            return Err(Error::domain(format!("weights must be nonnegative, got {w}")));
        }
        let n2 = v.norm_squared();
        if (n2 - 1.0).abs() > 1e-10 {
            return Err(Error::domain(format!("sample vector not normalized: |v|^2 = {n2}")));
        }
        acc += v * v.adjoint() * C64::from(*w);
        total += w;
    }
    if total <= 0.0 {
        return Err(Error::domain("total weight is zero"));
    }
    DensityMatrix3::new(acc / C64::from(total))
}

/// `R rho R^T`.
pub fn rotate_density(rho: &DensityMatrix3, r: &Rotation3) -> DensityMatrix3 {
    let rc = r.0.map(C64::from);
    DensityMatrix3(rc * rho.0 * rc.transpose())
}

/// `tr |a - b|`, the sum of absolute eigenvalues of the difference.
pub fn trace_distance_term(a: &DensityMatrix3, b: &DensityMatrix3) -> f64 {
    let d = hermitize(&(a.0 - b.0));
    eigenvalues_hermitian3(&d).iter().map(|l| l.abs()).sum::<f64>().min(2.0)
}

/// Minimum error probability for telling two equiprobable states apart:
/// `1/2 - tr|a - b| / 4`.
pub fn error_probability(a: &DensityMatrix3, b: &DensityMatrix3) -> f64 {
    (0.5 - 0.25 * trace_distance_term(a, b)).clamp(0.0, 0.5)
}

/// Eigenvalues (descending) and orthonormal eigenvectors of a Hermitian matrix.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Eigensystem {
    pub values: [f64; 3],
    pub vectors: [Complex3Vector; 3],
}

pub fn eigensystem_hermitian3(m: &Matrix3<C64>) -> Result<Eigensystem> {
    let scale = max_abs(m).max(1.0);
    let defect = hermiticity_defect(m);
    if defect > HERMITIAN_INPUT_TOL * scale || m.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::domain(format!("matrix is not Hermitian (defect {defect:e})")));
    }
    let (values, vectors) = solve_hermitian3(&hermitize(m));

    let mut pairs: Vec<(f64, Complex3Vector)> = values.into_iter().zip(vectors).collect();
    pairs.sort_by(|(la, _), (lb, _)| lb.total_cmp(la));
    // within a cluster of tied eigenvalues only the vectors are reordered
    let tie = 1e-12 * scale;
    let mut start = 0;
    while start < 3 {
        let mut end = start + 1;
        while end < 3 && pairs[end - 1].0 - pairs[end].0 <= tie {
            end += 1;
        }
        let mut vs: Vec<Complex3Vector> = pairs[start..end].iter().map(|p| p.1).collect();
        vs.sort_by(|a, b| lexicographic(b, a));
        for (p, v) in pairs[start..end].iter_mut().zip(vs) {
            p.1 = v;
        }
        start = end;
    }
    Ok(Eigensystem {
        values: [pairs[0].0, pairs[1].0, pairs[2].0],
        vectors: [pairs[0].1, pairs[1].1, pairs[2].1],
    })
}

fn lexicographic(a: &Complex3Vector, b: &Complex3Vector) -> Ordering {
    for (x, y) in a.iter().zip(b.iter()) {
        let o = x.re.total_cmp(&y.re).then(x.im.total_cmp(&y.im));
        if o != Ordering::Equal {
            return o;
        }
    }
    Ordering::Equal
}

/// Eigenvalues in descending order.
pub(crate) fn eigenvalues_hermitian3(m: &Matrix3<C64>) -> [f64; 3] {
    let mut v = solve_hermitian3(m).0;
    v.sort_by(|a, b| b.total_cmp(a));
    v
}

/// Roots of the traceless characteristic polynomial in trigonometric form,
/// each polished by one Newton step. Descending, relative to the mean.
fn characteristic_roots(b: &Matrix3<C64>) -> [f64; 3] {
    let tr_b2 = b.iter().map(|z| z.norm_sqr()).sum::<f64>();
    let p = (tr_b2 / 6.0).sqrt();
    if p == 0.0 {
        return [0.0; 3];
    }
    let det_b = b.determinant().re;
    let r = (det_b / (2.0 * p * p * p)).clamp(-1.0, 1.0);
    let phi = r.acos() / 3.0;
    let mut mu = [2.0 * p * phi.cos(), 0.0, 2.0 * p * (phi + 2.0 * PI / 3.0).cos()];
    mu[1] = -mu[0] - mu[2];

    // mu^3 - (tr B^2 / 2) mu - det B
    let half = 0.5 * tr_b2;
    for x in mu.iter_mut() {
        let d = 3.0 * *x * *x - half;
        if d.abs() > 1e-6 * p * p {
            *x -= (*x * *x * *x - half * *x - det_b) / d;
        }
    }
    mu.sort_by(|a, b| b.total_cmp(a));
    mu
}

/// Eigenpairs, unsorted. The best separated root of the characteristic
/// polynomial is accurate even when the other two nearly coincide; its
/// vector comes from a cross product of two rows of `B - mu I`. The remaining
/// pair is solved exactly as a 2x2 problem on the orthogonal complement.
fn solve_hermitian3(m: &Matrix3<C64>) -> ([f64; 3], [Complex3Vector; 3]) {
    let mean = m.trace().re / 3.0;
    let b = m - Matrix3::identity() * C64::from(mean);
    let mu = characteristic_roots(&b);
    let axes = [Vector3::x(), Vector3::y(), Vector3::z()].map(|v: Vector3<f64>| v.map(C64::from));
    let spread = mu[0] - mu[2];
    if spread <= 1e-15 * mean.abs() || spread == 0.0 {
        let d = b.diagonal();
        return ([mean + d[0].re, mean + d[1].re, mean + d[2].re], axes);
    }
    let isolated = if mu[0] - mu[1] >= mu[1] - mu[2] { mu[0] } else { mu[2] };
    let v = null_vector(&(b - Matrix3::identity() * C64::from(isolated)));

    let (u1, u2) = complement(&v);
    let basis = [u1, u2];
    let mut h = Matrix2::<C64>::zeros();
    for i in 0..2 {
        for j in 0..2 {
            h[(i, j)] = (basis[i].adjoint() * b * basis[j])[(0, 0)];
        }
    }
    let (l_hi, w_hi, l_lo, w_lo) = eig_hermitian2(&h);
    let hi = u1 * w_hi[0] + u2 * w_hi[1];
    let lo = u1 * w_lo[0] + u2 * w_lo[1];
    let unit = |x: Complex3Vector| fix_phase(&(x / C64::from(x.norm())));
    (
        [mean + isolated, mean + l_hi, mean + l_lo],
        [unit(v), unit(hi), unit(lo)],
    )
}

fn cross(a: &Complex3Vector, b: &Complex3Vector) -> Complex3Vector {
    Vector3::new(a.y * b.z - a.z * b.y, a.z * b.x - a.x * b.z, a.x * b.y - a.y * b.x)
}

/// A unit vector annihilated by a rank-2 matrix: every row dotted
/// (bilinearly) with the cross product of two rows vanishes.
fn null_vector(a: &Matrix3<C64>) -> Complex3Vector {
    let rows: Vec<Complex3Vector> = (0..3).map(|i| a.row(i).transpose()).collect();
    let candidates = [
        cross(&rows[0], &rows[1]),
        cross(&rows[0], &rows[2]),
        cross(&rows[1], &rows[2]),
    ];
    let best = candidates
        .iter()
        .max_by(|p, q| p.norm().total_cmp(&q.norm()))
        .copied()
        .unwrap_or_else(Vector3::zeros);
    let n = best.norm();
    if n > 0.0 {
        best / C64::from(n)
    } else {
        Vector3::<f64>::x().map(C64::from)
    }
}

/// Two unit vectors completing `v` to an orthonormal basis of C^3.
fn complement(v: &Complex3Vector) -> (Complex3Vector, Complex3Vector) {
    let k = (0..3).min_by(|&i, &j| v[i].norm().total_cmp(&v[j].norm())).unwrap_or(0);
    let mut e = Complex3Vector::zeros();
    e[k] = C64::from(1.0);
    let u1 = e - v * v.dotc(&e);
    let u1 = u1 / C64::from(u1.norm());
    let u2 = cross(v, &u1).map(|z| z.conj());
    let u2 = u2 / C64::from(u2.norm());
    (u1, u2)
}

/// Eigenpairs of a 2x2 Hermitian matrix, larger eigenvalue first.
fn eig_hermitian2(h: &Matrix2<C64>) -> (f64, Vector2<C64>, f64, Vector2<C64>) {
    let a = h[(0, 0)].re;
    let d = h[(1, 1)].re;
    let b = h[(0, 1)];
    let half = (0.25 * (a - d) * (a - d) + b.norm_sqr()).sqrt();
    let top = 0.5 * (a + d) + half;
    let bottom = 0.5 * (a + d) - half;
    let x = if b.norm() == 0.0 {
        if a >= d {
            Vector2::new(C64::from(1.0), C64::from(0.0))
        } else {
            Vector2::new(C64::from(0.0), C64::from(1.0))
        }
    } else {
        let p = Vector2::new(b, C64::from(top - a));
        let q = Vector2::new(C64::from(top - d), b.conj());
        let best = if p.norm() >= q.norm() { p } else { q };
        best / C64::from(best.norm())
    };
    let y = Vector2::new(-x[1].conj(), x[0].conj());
    (top, x, bottom, y)
}

/// Rotates the global phase so the largest component is real and positive.
fn fix_phase(v: &Complex3Vector) -> Complex3Vector {
    let mut k = 0;
    for i in 1..3 {
        if v[i].norm() > v[k].norm() * (1.0 + 1e-12) {
            k = i;
        }
    }
    let z = v[k];
    if z.norm() == 0.0 {
        return *v;
    }
    let phase = z.conj() / z.norm();
    v * phase
}

fn hermitize(m: &Matrix3<C64>) -> Matrix3<C64> {
    (m + m.adjoint()) * C64::from(0.5)
}

fn hermiticity_defect(m: &Matrix3<C64>) -> f64 {
    max_abs(&(m - m.adjoint()))
}

fn max_abs(m: &Matrix3<C64>) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

fn max_abs_real(m: &Matrix3<f64>) -> f64 {
    m.iter().map(|x| x.abs()).fold(0.0, f64::max)
}
