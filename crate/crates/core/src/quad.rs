//! Deterministic adaptive quadrature.
//!
//! Everything here is built on one globally adaptive Gauss-Kronrod driver
//! over an interval. Two- and three-dimensional integrals are iterated
//! one-dimensional integrals: the inner integral is evaluated at every node of
//! the outer rule, and its error estimate is carried into the outer panel so
//! the reported error covers both levels.
//!
//! Integrands are vector valued (`[C64; N]`). Convergence is judged in the
//! max norm over components, `max_c err_c <= max(abs_tol, rel_tol * max_c |I_c|)`,
//! so entries that vanish by symmetry do not stall the refinement.

use std::cell::Cell;
use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::C64;

/// Largest polar half-angle accepted by the angular-cap integrator (rad).
pub const MAX_THETA: f64 = 1.45;

/// Share of the tolerance handed down to an inner integral of a nested rule.
const INNER_TOL_SHARE: f64 = 0.25;

/// Tolerances and limits for the adaptive integrators.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureSpec {
    pub rel_tol: f64,
    pub abs_tol: f64,
    /// Bisections allowed per one-dimensional integral.
    pub max_subdivisions: usize,
    /// Kronrod rule size on each axis: 15 or 21 points.
    pub rule_order: usize,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        Self {
            rel_tol: 1e-9,
            abs_tol: 1e-12,
            max_subdivisions: 20_000,
            rule_order: 15,
        }
    }
}

impl QuadratureSpec {
    pub fn with_rel_tol(rel_tol: f64) -> Self {
        Self {
            rel_tol,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.rel_tol > 0.0 && self.rel_tol.is_finite()) {
            return Err(Error::domain(format!("rel_tol must be positive, got {}", self.rel_tol)));
        }
        if !(self.abs_tol > 0.0 && self.abs_tol.is_finite()) {
            return Err(Error::domain(format!("abs_tol must be positive, got {}", self.abs_tol)));
        }
        if self.max_subdivisions < 1 {
            return Err(Error::domain("max_subdivisions must be at least 1"));
        }
        self.rule()?;
        Ok(())
    }

    fn rule(&self) -> Result<&'static KronrodRule> {
        match self.rule_order {
            15 => Ok(&GK15),
            21 => Ok(&GK21),
            n => Err(Error::domain(format!("unsupported rule order {n}; expected 15 or 21"))),
        }
    }

    /// Spec for an inner integral nested inside an outer interval of length `outer_len`.
    fn inner(&self, outer_len: f64) -> Self {
        Self {
            rel_tol: self.rel_tol * INNER_TOL_SHARE,
            abs_tol: self.abs_tol * INNER_TOL_SHARE / outer_len.max(f64::MIN_POSITIVE),
            ..*self
        }
    }

    fn tolerance(&self, scale: f64) -> f64 {
        self.abs_tol.max(self.rel_tol * scale)
    }
}

/// Outcome of an adaptive integration of an `N`-component integrand.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureResult<const N: usize> {
    pub value: [C64; N],
    /// Per-component absolute error estimates.
    pub component_errors: [f64; N],
    /// Max-norm of `component_errors`.
    pub error_estimate: f64,
    /// Total bisections performed, summed over all nested levels.
    pub subdivisions_used: usize,
    pub converged: bool,
}

impl<const N: usize> QuadratureResult<N> {
    /// Converts a non-converged result into [`Error::NonConvergence`].
    pub fn into_result(self) -> Result<Self> {
        if self.converged {
            Ok(self)
        } else {
            Err(Error::NonConvergence {
                error_estimate: self.error_estimate,
                subdivisions: self.subdivisions_used,
            })
        }
    }

    /// Largest component modulus of the integral.
    pub fn value_norm(&self) -> f64 {
        max_norm(&self.value)
    }
}

impl QuadratureResult<1> {
    pub fn scalar(&self) -> C64 {
        self.value[0]
    }
}

/// A Gauss-Kronrod pair on [-1, 1] in QUADPACK layout: abscissae in
/// decreasing order ending at 0, Gauss nodes at the odd indices.
struct KronrodRule {
    xgk: &'static [f64],
    wgk: &'static [f64],
    wg: &'static [f64],
}

// published QUADPACK digits, kept verbatim
#[allow(clippy::excessive_precision)]
static GK15: KronrodRule = KronrodRule {
    xgk: &[
        0.991_455_371_120_812_639_206_854_697_526_329,
        0.949_107_912_342_758_524_526_189_684_047_851,
        0.864_864_423_359_769_072_789_712_788_640_926,
        0.741_531_185_599_394_439_863_864_773_280_788,
        0.586_087_235_467_691_130_294_144_845_693_013,
        0.405_845_151_377_397_166_906_606_412_076_961,
        0.207_784_955_007_898_467_600_689_403_773_245,
        0.0,
    ],
    wgk: &[
        0.022_935_322_010_529_224_963_732_008_058_970,
        0.063_092_092_629_978_553_290_700_663_189_204,
        0.104_790_010_322_250_183_839_876_322_541_518,
        0.140_653_259_715_525_918_745_189_590_510_238,
        0.169_004_726_639_267_902_826_583_426_598_550,
        0.190_350_578_064_785_409_913_256_402_421_014,
        0.204_432_940_075_298_892_414_161_999_234_649,
        0.209_482_141_084_727_828_012_999_174_891_714,
    ],
    wg: &[
        0.129_484_966_168_869_693_270_611_432_679_082,
        0.279_705_391_489_276_667_901_467_771_423_780,
        0.381_830_050_505_118_944_950_369_775_488_975,
        0.417_959_183_673_469_387_755_102_040_816_327,
    ],
};

#[allow(clippy::excessive_precision)]
static GK21: KronrodRule = KronrodRule {
    xgk: &[
        0.995_657_163_025_808_080_735_527_280_689_003,
        0.973_906_528_517_171_720_077_964_012_084_452,
        0.930_157_491_355_708_226_001_207_180_059_508,
        0.865_063_366_688_984_510_732_096_688_423_493,
        0.780_817_726_586_416_897_063_717_578_345_042,
        0.679_409_568_299_024_406_234_327_365_114_874,
        0.562_757_134_668_604_683_339_000_099_272_694,
        0.433_395_394_129_247_190_799_265_943_165_784,
        0.294_392_862_701_460_198_131_126_603_103_866,
        0.148_874_338_981_631_210_884_826_001_129_720,
        0.0,
    ],
    wgk: &[
        0.011_694_638_867_371_874_278_064_396_062_192,
        0.032_558_162_307_964_727_478_818_972_459_390,
        0.054_755_896_574_351_996_031_381_300_244_580,
        0.075_039_674_810_919_952_767_043_140_916_190,
        0.093_125_454_583_697_605_535_065_465_083_366,
        0.109_387_158_802_297_641_899_210_590_325_805,
        0.123_491_976_262_065_851_077_208_745_063_740,
        0.134_709_217_311_473_325_928_054_001_771_707,
        0.142_775_938_577_060_080_797_094_273_138_717,
        0.147_739_104_901_338_491_374_841_515_972_068,
        0.149_445_554_002_916_905_664_936_468_389_821,
    ],
    wg: &[
        0.066_671_344_308_688_137_593_568_809_893_332,
        0.149_451_349_150_580_593_145_776_339_657_697,
        0.219_086_362_515_982_043_995_534_934_228_163,
        0.269_266_719_309_996_355_091_226_921_569_469,
        0.295_524_224_714_752_870_173_892_994_651_338,
    ],
};

fn max_norm<const N: usize>(v: &[C64; N]) -> f64 {
    v.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

fn max_of<const N: usize>(v: &[f64; N]) -> f64 {
    v.iter().copied().fold(0.0, f64::max)
}

/// Value and pointwise error of an integrand sample. Plain functions report a
/// zero error; nested integrals report the inner error estimate.
type Sample<const N: usize> = ([C64; N], [f64; N]);

#[derive(Clone, Copy)]
struct Panel<const N: usize> {
    a: f64,
    b: f64,
    value: [C64; N],
    error: [f64; N],
}

impl<const N: usize> Panel<N> {
    fn evaluate<F: Fn(f64) -> Sample<N>>(f: &F, a: f64, b: f64, rule: &KronrodRule) -> Self {
        let (value, error) = kronrod_panel(f, a, b, rule);
        Panel { a, b, value, error }
    }

    fn error_norm(&self) -> f64 {
        max_of(&self.error)
    }
}

/// One application of a Kronrod rule with the QUADPACK error heuristic,
/// applied per component.
fn kronrod_panel<const N: usize, F: Fn(f64) -> Sample<N>>(
    f: &F,
    a: f64,
    b: f64,
    rule: &KronrodRule,
) -> ([C64; N], [f64; N]) {
    let zero = C64::new(0.0, 0.0);
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let n = rule.xgk.len();

    let mut samples: Vec<(Sample<N>, Option<Sample<N>>)> = Vec::with_capacity(n);
    for (j, x) in rule.xgk.iter().enumerate() {
        if j + 1 == n {
            samples.push((f(center), None));
        } else {
            let dx = half * x;
            samples.push((f(center - dx), Some(f(center + dx))));
        }
    }

    let mut res_k = [zero; N];
    let mut res_g = [zero; N];
    let mut res_abs = [0.0; N];
    let mut inner_err = [0.0; N];
    for (j, (lo, hi)) in samples.iter().enumerate() {
        let wk = rule.wgk[j];
        let wg = if j % 2 == 1 { rule.wg[j / 2] } else { 0.0 };
        for c in 0..N {
            let mut fs = lo.0[c];
            let mut fa = lo.0[c].norm();
            let mut fe = lo.1[c];
            if let Some(h) = hi {
                fs += h.0[c];
                fa += h.0[c].norm();
                fe += h.1[c];
            }
            res_k[c] += fs * wk;
            res_g[c] += fs * wg;
            res_abs[c] += fa * wk;
            inner_err[c] += fe * wk;
        }
    }

    let mut value = [zero; N];
    let mut error = [0.0; N];
    for c in 0..N {
        let mean = res_k[c] * 0.5;
        let mut res_asc = 0.0;
        for (j, (lo, hi)) in samples.iter().enumerate() {
            let mut d = (lo.0[c] - mean).norm();
            if let Some(h) = hi {
                d += (h.0[c] - mean).norm();
            }
            res_asc += rule.wgk[j] * d;
        }
        let scale = half.abs();
        value[c] = res_k[c] * half;
        let res_abs_c = res_abs[c] * scale;
        res_asc *= scale;
        let mut err = ((res_k[c] - res_g[c]) * half).norm();
        if res_asc != 0.0 && err != 0.0 {
            err = res_asc * (200.0 * err / res_asc).powf(1.5).min(1.0);
        }
        if res_abs_c > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
            err = err.max(50.0 * f64::EPSILON * res_abs_c);
        }
        error[c] = err + inner_err[c] * scale;
    }
    (value, error)
}

#[derive(PartialEq)]
struct HeapKey {
    error: f64,
    index: usize,
}

impl Eq for HeapKey {}

impl Ord for HeapKey {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error
            .total_cmp(&other.error)
            .then_with(|| other.index.cmp(&self.index))
    }
}

impl PartialOrd for HeapKey {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Globally adaptive bisection: always refine the panel with the largest error.
fn adaptive<const N: usize, F: Fn(f64) -> Sample<N>>(
    f: &F,
    a: f64,
    b: f64,
    spec: &QuadratureSpec,
) -> Result<QuadratureResult<N>> {
    spec.validate()?;
    if !(a.is_finite() && b.is_finite() && a < b) {
        return Err(Error::domain(format!(
            "integration bounds must satisfy a < b, got [{a}, {b}]"
        )));
    }
    let rule = spec.rule()?;

    let first = Panel::evaluate(f, a, b, rule);
    let mut panels = vec![first];
    let mut heap = BinaryHeap::new();
    heap.push(HeapKey {
        error: first.error_norm(),
        index: 0,
    });
    let mut total = first.value;
    let mut total_err = first.error;
    let mut subdivisions = 0;
    let mut converged = false;

    loop {
        if max_of(&total_err) <= spec.tolerance(max_norm(&total)) {
            converged = true;
            break;
        }
        if subdivisions >= spec.max_subdivisions {
            break;
        }
        let Some(worst) = heap.pop() else { break };
        let parent = panels[worst.index];
        let mid = 0.5 * (parent.a + parent.b);
        if !(parent.a < mid && mid < parent.b) {
            break;
        }
        let left = Panel::evaluate(f, parent.a, mid, rule);
        let right = Panel::evaluate(f, mid, parent.b, rule);
        for c in 0..N {
            total[c] += left.value[c] + right.value[c] - parent.value[c];
            total_err[c] += left.error[c] + right.error[c] - parent.error[c];
        }
        panels[worst.index] = left;
        heap.push(HeapKey {
            error: left.error_norm(),
            index: worst.index,
        });
        panels.push(right);
        heap.push(HeapKey {
            error: right.error_norm(),
            index: panels.len() - 1,
        });
        subdivisions += 1;
    }

    // Resum in a fixed order, left to right, so the reported value does not
    // carry the incremental update history.
    panels.sort_by(|p, q| p.a.total_cmp(&q.a));
    let mut value = [C64::new(0.0, 0.0); N];
    let mut component_errors = [0.0; N];
    for p in &panels {
        for c in 0..N {
            value[c] += p.value[c];
            component_errors[c] += p.error[c];
        }
    }
    let error_estimate = max_of(&component_errors);
    if converged && error_estimate > spec.tolerance(max_norm(&value)) {
        converged = false;
    }
    Ok(QuadratureResult {
        value,
        component_errors,
        error_estimate,
        subdivisions_used: subdivisions,
        converged,
    })
}

/// Adapts a plain integrand to the sample form with zero pointwise error.
fn exact<const N: usize>(v: [C64; N]) -> Sample<N> {
    (v, [0.0; N])
}

/// Runs `inner` at each outer node and folds its error estimate and
/// convergence flag into the outer integration.
fn nested<const N: usize, G>(a: f64, b: f64, spec: &QuadratureSpec, inner: G) -> Result<QuadratureResult<N>>
where
    G: Fn(f64, &QuadratureSpec) -> Result<QuadratureResult<N>>,
{
    let inner_spec = spec.inner(b - a);
    let all_converged = Cell::new(true);
    let inner_subdivisions = Cell::new(0usize);
    let failure: Cell<Option<Error>> = Cell::new(None);
    let outer = adaptive(
        &|x| match inner(x, &inner_spec) {
            Ok(r) => {
                if !r.converged {
                    all_converged.set(false);
                }
                inner_subdivisions.set(inner_subdivisions.get() + r.subdivisions_used);
                (r.value, r.component_errors)
            }
            Err(e) => {
                failure.set(Some(e));
                ([C64::new(f64::NAN, 0.0); N], [f64::INFINITY; N])
            }
        },
        a,
        b,
        spec,
    )?;
    if let Some(e) = failure.take() {
        return Err(e);
    }
    Ok(QuadratureResult {
        converged: outer.converged && all_converged.get(),
        subdivisions_used: outer.subdivisions_used + inner_subdivisions.get(),
        ..outer
    })
}

/// Integrates a complex scalar function over `[a, b]`.
pub fn integrate_interval<F: Fn(f64) -> C64>(
    f: F,
    a: f64,
    b: f64,
    spec: &QuadratureSpec,
) -> Result<QuadratureResult<1>> {
    adaptive(&|x| exact([f(x)]), a, b, spec)
}

/// Integrates an `N`-component integrand over `[a, b]`.
pub fn integrate_interval_vec<const N: usize, F: Fn(f64) -> [C64; N]>(
    f: F,
    a: f64,
    b: f64,
    spec: &QuadratureSpec,
) -> Result<QuadratureResult<N>> {
    adaptive(&|x| exact(f(x)), a, b, spec)
}

/// Integrates `f(theta, phi) * weight(theta)` over the cap
/// `[0, theta_max] x [0, 2 pi)`.
pub fn integrate_cap<const N: usize, F, W>(
    f: F,
    theta_max: f64,
    weight: W,
    spec: &QuadratureSpec,
) -> Result<QuadratureResult<N>>
where
    F: Fn(f64, f64) -> [C64; N],
    W: Fn(f64) -> f64,
{
    check_theta_max(theta_max)?;
    nested(0.0, theta_max, spec, |theta, inner| {
        let w = weight(theta);
        let mut r = adaptive(&|phi| exact(f(theta, phi)), 0.0, 2.0 * PI, inner)?;
        for c in 0..N {
            r.value[c] *= w;
            r.component_errors[c] *= w.abs();
        }
        Ok(r)
    })
}

/// Validates a cap half-angle against the range accepted by [`integrate_cap`].
pub fn check_theta_max(theta_max: f64) -> Result<()> {
    if theta_max > 0.0 && theta_max <= MAX_THETA {
        Ok(())
    } else {
        Err(Error::domain(format!(
            "theta_max must lie in (0, {MAX_THETA}] rad, got {theta_max}"
        )))
    }
}

/// Plain iterated integral over a rectangle, no measure factor.
pub fn integrate_rect<const N: usize, F: Fn(f64, f64) -> [C64; N]>(
    f: F,
    x: (f64, f64),
    y: (f64, f64),
    spec: &QuadratureSpec,
) -> Result<QuadratureResult<N>> {
    nested(x.0, x.1, spec, |xv, inner| {
        adaptive(&|yv| exact(f(xv, yv)), y.0, y.1, inner)
    })
}

/// Plain iterated integral over an axis-aligned box, no measure factor.
pub fn integrate_cuboid<const N: usize, F: Fn([f64; 3]) -> [C64; N]>(
    f: F,
    lo: [f64; 3],
    hi: [f64; 3],
    spec: &QuadratureSpec,
) -> Result<QuadratureResult<N>> {
    nested(lo[2], hi[2], spec, |z, s2| {
        nested(lo[1], hi[1], s2, |y, s1| {
            adaptive(&|x| exact(f([x, y, z])), lo[0], hi[0], s1)
        })
    })
}

/// Integrates over a box in k-space with the measure `d^3k / (2 pi)^3`.
pub fn integrate_box3<const N: usize, F: Fn([f64; 3]) -> [C64; N]>(
    f: F,
    lo: [f64; 3],
    hi: [f64; 3],
    spec: &QuadratureSpec,
) -> Result<QuadratureResult<N>> {
    let measure = (2.0 * PI).powi(-3);
    // abs_tol refers to the measured integral
    let unscaled = QuadratureSpec {
        abs_tol: spec.abs_tol / measure,
        ..*spec
    };
    let mut r = integrate_cuboid(f, lo, hi, &unscaled)?;
    for c in 0..N {
        r.value[c] *= measure;
        r.component_errors[c] *= measure;
    }
    r.error_estimate *= measure;
    Ok(r)
}
