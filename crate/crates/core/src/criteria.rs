//! Unilateral-approximation analysis: condition sides, the structured
//! Frobenius fast path, the harmonic-number lower bound, the Poisson-summation
//! limit, divergence certificates and growth-exponent fits.

use crate::antenna::{
    inter_array_coupling, radiation_resistance, InterArrayAmplitude, LinkGeometry,
    PhysicalConstants, SpacingMode, UlaSpec,
};
use crate::error::{Error, Result};
use crate::linalg::{KahanSum, Matrix};
use crate::multiport::{PartitionedImpedance, TerminationSpec};
use crate::region::{classify_region, FieldRegion, RegionClassification};
use crate::scalar::Scalar;
use crate::C;

/// Default margin threshold realizing the "much smaller" requirement.
pub const DEFAULT_MARGIN_THRESHOLD: f64 = 10.0;

/// Default cap on N for the exact structured Frobenius evaluation.
pub const DEFAULT_RHS_EXACT_CAP: usize = 20_000;

/// Both sides of the unilateral-approximation condition with margins.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConditionSides<T> {
    /// Inter-array side in ohms.
    pub lhs: T,
    /// Intra-array Frobenius norm in ohms, when computed.
    pub rhs_exact: Option<T>,
    /// Harmonic-number lower bound on the intra-array norm in ohms.
    pub rhs_bound: T,
    /// `rhs_bound / lhs`; infinite when the coupling side vanishes.
    pub margin_bound: T,
    /// `rhs_exact / lhs`, when the exact norm is present.
    pub margin_exact: Option<T>,
}

impl<T: Scalar> ConditionSides<T> {
    pub fn new(lhs: T, rhs_exact: Option<T>, rhs_bound: T) -> Self {
        debug_assert!(lhs >= T::zero() && rhs_bound >= T::zero());
        if let Some(exact) = rhs_exact {
            // The bound side never exceeds the exact norm (rounding slack).
            debug_assert!(rhs_bound <= exact * (T::one() + T::lit(1e-12)));
        }
        let margin = |rhs: T| {
            if lhs == T::zero() {
                T::infinity()
            } else {
                rhs / lhs
            }
        };
        Self {
            lhs,
            rhs_exact,
            rhs_bound,
            margin_bound: margin(rhs_bound),
            margin_exact: rhs_exact.map(margin),
        }
    }
}

/// Which side of the combined network the condition is written against.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ConditionSide {
    /// `‖Z_TR (Z_L I + Z_R)^-1 Z_RT‖_F ≪ ‖Z_G I + Z_T‖_F`.
    Transmitter,
    /// `‖Z_RT (Z_G I + Z_T)^-1 Z_TR‖_F ≪ ‖Z_L I + Z_R‖_F`.
    Receiver,
}

/// Evaluates the general unilateral-approximation condition on a combined
/// network. The bound side uses `sqrt(N)` times the smallest row norm, which
/// lower-bounds the Frobenius norm of any matrix.
pub fn general_condition<T: Scalar>(
    net: &PartitionedImpedance<T>,
    term: &TerminationSpec<T>,
    side: ConditionSide,
) -> Result<ConditionSides<T>> {
    let gt = net.tt.add_scaled_identity(term.z_generator())?;
    let rl = net.rr.add_scaled_identity(term.z_load())?;
    let (lhs_matrix, rhs_matrix) = match side {
        ConditionSide::Transmitter => (net.tr.matmul(&rl.lu("Z_L I + Z_R")?.solve(&net.rt)?)?, gt),
        ConditionSide::Receiver => (net.rt.matmul(&gt.lu("Z_G I + Z_T")?.solve(&net.tr)?)?, rl),
    };
    let lhs = lhs_matrix.frobenius();
    let rhs_exact = rhs_matrix.frobenius();
    let n = rhs_matrix.rows();
    let min_row = (0..n)
        .map(|i| rhs_matrix.row_norm(i))
        .fold(T::infinity(), |a, b| a.min(b));
    let rhs_bound = T::from_count(n).sqrt() * min_row;
    Ok(ConditionSides::new(lhs, Some(rhs_exact), rhs_bound))
}

/// Rank-one condition side `Σ|z_n|² / |z_divisor|` in ohms.
pub fn rank_one_lhs<T: Scalar>(entries: &[C<T>], z_divisor: C<T>) -> Result<T> {
    let mag = z_divisor.norm();
    if mag == T::zero() {
        return Err(Error::Domain(
            "rank-one condition divisor must be nonzero".into(),
        ));
    }
    let mut acc = KahanSum::new();
    for z in entries {
        acc.add(z.norm_sqr());
    }
    Ok(acc.value() / mag)
}

/// Exact Frobenius norm of the symmetric Toeplitz matrix generated by
/// `first_row`, in O(N): `sqrt(N·|z_0|² + 2·Σ (N-m)·|z_m|²)`.
pub fn toeplitz_frobenius<T: Scalar>(first_row: &[C<T>]) -> T {
    let n = first_row.len();
    let mut acc = KahanSum::new();
    acc.add(T::from_count(n) * first_row[0].norm_sqr());
    for (m, z) in first_row.iter().enumerate().skip(1) {
        acc.add(T::lit(2.0) * T::from_count(n - m) * z.norm_sqr());
    }
    acc.value().sqrt()
}

/// Generalized harmonic number `H_n^(q) = Σ_{m=1}^{n} m^{-q}`, with
/// `H_0 = 0`. Terms are accumulated smallest first with compensation.
pub fn generalized_harmonic<T: Scalar>(n: usize, q: u32) -> T {
    let mut acc = KahanSum::new();
    for m in (1..=n).rev() {
        acc.add(T::from_count(m).powi(-(q as i32)));
    }
    acc.value()
}

/// First row of the `Z_G I + Z_T` (or dual) Toeplitz matrix for a ULA:
/// `[z_end + R_r, R_r·ψ(kd), R_r·ψ(2kd), ...]`.
pub fn gt_toeplitz_row<T: Scalar>(
    ula: &UlaSpec<T>,
    z_end: C<T>,
    constants: &PhysicalConstants<T>,
) -> Result<Vec<C<T>>> {
    let r_r = radiation_resistance(ula.dipole_length_m(), ula.wavelength_m(), constants)?;
    let intra = crate::antenna::intra_array_impedance(ula, constants)?;
    let mut row = intra.first_row().to_vec();
    row[0] = row[0] + z_end;
    debug_assert_eq!(row[0], C::new(r_r, T::zero()) + z_end);
    Ok(row)
}

/// Harmonic-number lower bound on `‖Z_GT‖_F` (the square root of
/// `N|Z_GT|² + (9/4) N R_r² (H²/(kd)² - H⁴/(kd)⁴ + H⁶/(kd)⁶)`), equal to
/// `sqrt(N)` times the Euclidean norm of the first row.
pub fn frobenius_lower_bound<T: Scalar>(
    ula: &UlaSpec<T>,
    z_end: C<T>,
    constants: &PhysicalConstants<T>,
) -> Result<T> {
    let r_r = radiation_resistance(ula.dipole_length_m(), ula.wavelength_m(), constants)?;
    let n = ula.n_elements();
    let diag = z_end + C::new(r_r, T::zero());
    let mut row_norm_sq = diag.norm_sqr();
    if n >= 2 {
        let kd = ula.wavenumber() * ula.spacing_m();
        let h2: T = generalized_harmonic(n - 1, 2);
        let h4: T = generalized_harmonic(n - 1, 4);
        let h6: T = generalized_harmonic(n - 1, 6);
        let kd2 = kd * kd;
        let kd4 = kd2 * kd2;
        let kd6 = kd4 * kd2;
        let series = h2 / kd2 - h4 / kd4 + h6 / kd6;
        row_norm_sq = row_norm_sq + T::lit(2.25) * r_r * r_r * series;
    }
    Ok((T::from_count(n) * row_norm_sq).sqrt())
}

/// Streamed broadside coupling side
/// `(R_r²/k²) · Σ_{n=0}^{N-1} 1/(r² + (nd)²) / |z_divisor|`, in ohms.
/// Supports N up to 10⁸ without materializing a vector. Requires a broadside
/// link; other angles go through [`rank_one_lhs`] over the coupling vector.
pub fn lhs_partial_sum<T: Scalar>(
    ula: &UlaSpec<T>,
    link: &LinkGeometry<T>,
    z_divisor: C<T>,
    constants: &PhysicalConstants<T>,
    amplitude: InterArrayAmplitude,
) -> Result<T> {
    if !link.is_broadside() {
        return Err(Error::Domain(
            "closed-form partial sum requires broadside incidence".into(),
        ));
    }
    let mag = z_divisor.norm();
    if mag == T::zero() {
        return Err(Error::Domain(
            "rank-one condition divisor must be nonzero".into(),
        ));
    }
    let r_r = radiation_resistance(ula.dipole_length_m(), ula.wavelength_m(), constants)?;
    let k = ula.wavenumber();
    let scale = amplitude.scale::<T>();
    let front = (scale * r_r / k).powi(2);
    let r2 = link.distance_m() * link.distance_m();
    let d = ula.spacing_m();
    let mut acc = KahanSum::new();
    for n in 0..ula.n_elements() {
        let offset = T::from_count(n) * d;
        acc.add((r2 + offset * offset).recip());
    }
    Ok(front * acc.value() / mag)
}

/// Overflow-safe hyperbolic cotangent; exactly 1 beyond `y = 40` where the
/// deviation is far below representable precision.
fn coth<T: Scalar>(y: T) -> T {
    if y > T::lit(40.0) {
        T::one()
    } else {
        T::one() + T::lit(2.0) / (T::lit(2.0) * y).exp_m1()
    }
}

/// Poisson-summation limit of the fixed-spacing coupling side:
/// `(R_r²/|z_divisor|)·(d + rπ·coth(πr/d)) / (2d(rk)²)`, in ohms.
pub fn poisson_limit<T: Scalar>(
    spacing_m: T,
    distance_m: T,
    wavelength_m: T,
    radiation_resistance_ohm: T,
    z_divisor: C<T>,
) -> Result<T> {
    if !(spacing_m > T::zero()) || !(distance_m > T::zero()) || !(wavelength_m > T::zero()) {
        return Err(Error::Domain(
            "poisson limit needs positive spacing, distance and wavelength".into(),
        ));
    }
    let mag = z_divisor.norm();
    if mag == T::zero() {
        return Err(Error::Domain(
            "rank-one condition divisor must be nonzero".into(),
        ));
    }
    let k = T::TAU() / wavelength_m;
    let r = distance_m;
    let d = spacing_m;
    let numer = d + r * T::PI() * coth(T::PI() * r / d);
    let denom = T::lit(2.0) * d * (r * k) * (r * k);
    Ok(radiation_resistance_ohm * radiation_resistance_ohm / mag * numer / denom)
}

/// Term `a_n` of the fixed-aperture coupling series together with its
/// uniform floor `(R_r²/k²)/(r² + D²)`; `a_n >= floor` certifies the O(N)
/// divergence by comparison.
pub fn fixed_aperture_term_bound<T: Scalar>(
    n: usize,
    n_total: usize,
    aperture_m: T,
    distance_m: T,
    radiation_resistance_ohm: T,
    wavenumber: T,
) -> Result<(T, T)> {
    if n_total < 2 || n == 0 || n > n_total - 1 {
        return Err(Error::Domain(format!(
            "term index must satisfy 1 <= n <= N-1, got n = {n}, N = {n_total}"
        )));
    }
    let front = (radiation_resistance_ohm / wavenumber).powi(2);
    let offset = T::from_count(n) * aperture_m / T::from_count(n_total - 1);
    let r2 = distance_m * distance_m;
    let a_n = front / (r2 + offset * offset);
    let floor = front / (r2 + aperture_m * aperture_m);
    debug_assert!(a_n >= floor);
    Ok((a_n, floor))
}

/// Log-log growth fit of positive samples over a window of N.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AsymptoticFit<T> {
    /// Least-squares slope of `log(value)` against `log(N)`.
    pub exponent: T,
    /// Inclusive window of N actually fitted.
    pub fit_window: (usize, usize),
    /// RMS residual of the fit in log-log space.
    pub residual: T,
}

/// Least-squares growth exponent of `(N, value)` samples restricted to the
/// inclusive window. Needs at least three distinct N and positive values.
pub fn estimate_growth_exponent<T: Scalar>(
    samples: &[(usize, T)],
    window: (usize, usize),
) -> Result<AsymptoticFit<T>> {
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    let mut seen = std::collections::BTreeSet::new();
    for &(n, value) in samples {
        if n < window.0 || n > window.1 {
            continue;
        }
        if !(value > T::zero()) {
            return Err(Error::Domain(format!(
                "growth fit requires positive values, got {value} at N = {n}"
            )));
        }
        seen.insert(n);
        xs.push(T::from_count(n).ln());
        ys.push(value.ln());
    }
    if seen.len() < 3 {
        return Err(Error::Domain(format!(
            "growth fit needs at least 3 distinct N in [{}, {}], found {}",
            window.0,
            window.1,
            seen.len()
        )));
    }
    let count = T::from_count(xs.len());
    let x_mean = xs.iter().copied().sum::<T>() / count;
    let y_mean = ys.iter().copied().sum::<T>() / count;
    let mut sxy = T::zero();
    let mut sxx = T::zero();
    for (x, y) in xs.iter().zip(&ys) {
        sxy = sxy + (*x - x_mean) * (*y - y_mean);
        sxx = sxx + (*x - x_mean) * (*x - x_mean);
    }
    let slope = sxy / sxx;
    let intercept = y_mean - slope * x_mean;
    let mut ss = T::zero();
    for (x, y) in xs.iter().zip(&ys) {
        let e = *y - (slope * *x + intercept);
        ss = ss + e * e;
    }
    Ok(AsymptoticFit {
        exponent: slope,
        fit_window: window,
        residual: (ss / count).sqrt(),
    })
}

/// Link direction: which end carries the array.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LinkRole {
    /// Array transmits; condition divides by `Z_RL` and bounds `‖Z_GT‖`.
    Miso,
    /// Array receives; the dual with `Z_GT` and `Z_RL` swapped.
    Simo,
}

/// Options of a single condition evaluation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvaluateOptions<T> {
    pub role: LinkRole,
    /// Verdict threshold on `margin_bound`.
    pub threshold: T,
    /// Largest N for which the exact structured Frobenius norm is computed.
    pub rhs_exact_cap: usize,
    pub amplitude: InterArrayAmplitude,
}

impl<T: Scalar> Default for EvaluateOptions<T> {
    fn default() -> Self {
        Self {
            role: LinkRole::Miso,
            threshold: T::lit(DEFAULT_MARGIN_THRESHOLD),
            rhs_exact_cap: DEFAULT_RHS_EXACT_CAP,
            amplitude: InterArrayAmplitude::default(),
        }
    }
}

/// Everything evaluated at one (scenario, N) point.
#[derive(Debug, Clone, PartialEq)]
pub struct CouplingReport<T> {
    pub n: usize,
    pub role: LinkRole,
    pub spacing_m: T,
    pub aperture_m: T,
    pub region: RegionClassification<T>,
    pub sides: ConditionSides<T>,
    /// Fixed-spacing asymptote of the coupling side, absent in
    /// fixed-aperture mode.
    pub poisson_limit: Option<T>,
    pub threshold: T,
    /// `margin_bound >= threshold`.
    pub verdict: bool,
}

/// Evaluates the unilateral-approximation condition at one scenario point.
pub fn evaluate_condition<T: Scalar>(
    ula: &UlaSpec<T>,
    link: &LinkGeometry<T>,
    term: &TerminationSpec<T>,
    constants: &PhysicalConstants<T>,
    options: &EvaluateOptions<T>,
) -> Result<CouplingReport<T>> {
    let r_r = radiation_resistance(ula.dipole_length_m(), ula.wavelength_m(), constants)?;
    let r_r_c = C::new(r_r, T::zero());
    // The SIMO condition is the MISO condition with Z_GT and Z_RL swapped.
    let (z_divisor_end, z_diag_end) = match options.role {
        LinkRole::Miso => (term.z_load(), term.z_generator()),
        LinkRole::Simo => (term.z_generator(), term.z_load()),
    };
    let z_divisor = z_divisor_end + r_r_c;

    let lhs = if link.is_broadside() {
        lhs_partial_sum(ula, link, z_divisor, constants, options.amplitude)?
    } else {
        let coupling = inter_array_coupling(ula, link, constants, options.amplitude)?;
        rank_one_lhs(coupling.entries(), z_divisor)?
    };

    let rhs_bound = frobenius_lower_bound(ula, z_diag_end, constants)?;
    let rhs_exact = if ula.n_elements() <= options.rhs_exact_cap {
        let row = gt_toeplitz_row(ula, z_diag_end, constants)?;
        Some(toeplitz_frobenius(&row))
    } else {
        None
    };

    let poisson = match ula.spacing_mode() {
        SpacingMode::FixedSpacing => {
            let amp2 = options.amplitude.scale::<T>().powi(2);
            Some(
                poisson_limit(
                    ula.spacing_m(),
                    link.distance_m(),
                    ula.wavelength_m(),
                    r_r,
                    z_divisor,
                )? * amp2,
            )
        }
        SpacingMode::FixedAperture => None,
    };

    let region = if ula.aperture_m() > T::zero() {
        classify_region(ula.aperture_m(), ula.wavelength_m(), link.distance_m())?
    } else {
        // A single element has no aperture; the link is trivially far-field.
        RegionClassification {
            fresnel_distance: T::zero(),
            fraunhofer_distance: T::zero(),
            region: FieldRegion::FarField,
            boundary_case: false,
        }
    };

    let sides = ConditionSides::new(lhs, rhs_exact, rhs_bound);
    let verdict = sides.margin_bound >= options.threshold;
    Ok(CouplingReport {
        n: ula.n_elements(),
        role: options.role,
        spacing_m: ula.spacing_m(),
        aperture_m: ula.aperture_m(),
        region,
        sides,
        poisson_limit: poisson,
        threshold: options.threshold,
        verdict,
    })
}

/// Convenience: dense row-norm minimum of a materialized matrix, used by the
/// row-minimum tests of the lower bound.
pub fn min_row_norm<T: Scalar>(m: &Matrix<T>) -> T {
    (0..m.rows())
        .map(|i| m.row_norm(i))
        .fold(T::infinity(), |a, b| a.min(b))
}
