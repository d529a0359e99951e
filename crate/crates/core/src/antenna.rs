//! Physical layer: uniform linear arrays of loaded Hertzian dipoles, the
//! near-field coupling kernel, intra-array Toeplitz impedance matrices and the
//! point-source inter-array coupling vector.
//!
//! Units: lengths in meters, impedances in ohms, angles in radians.

use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::scalar::Scalar;
use crate::C;

/// Exact free-space impedance in ohms.
pub const FREE_SPACE_IMPEDANCE: f64 = 376.730313668;

/// Default cap for materializing a structured matrix into dense storage.
pub const DEFAULT_DENSE_CAP: usize = 20_000;

/// Physical constants of the model. Only the free-space impedance is needed;
/// all lengths are meters and the wavelength is explicit everywhere.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhysicalConstants<T> {
    /// Free-space impedance in ohms (real, positive).
    pub eta: T,
}

impl<T: Scalar> PhysicalConstants<T> {
    pub fn new(eta: T) -> Result<Self> {
        if !(eta > T::zero()) {
            return Err(Error::Domain(format!(
                "free-space impedance must be positive, got {eta}"
            )));
        }
        Ok(Self { eta })
    }
}

impl<T: Scalar> Default for PhysicalConstants<T> {
    fn default() -> Self {
        Self {
            eta: T::lit(FREE_SPACE_IMPEDANCE),
        }
    }
}

/// Which array dimension stays fixed while the element count grows.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SpacingMode {
    /// `d` fixed; aperture `D = (N-1)·d` grows with the element count.
    FixedSpacing,
    /// Aperture `D` fixed; spacing `d = D/(N-1)` shrinks with the element count.
    FixedAperture,
}

/// Uniform linear array of loaded Hertzian dipoles.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UlaSpec<T> {
    n_elements: usize,
    spacing_m: T,
    aperture_m: T,
    dipole_length_m: T,
    wavelength_m: T,
    spacing_mode: SpacingMode,
}

impl<T: Scalar> UlaSpec<T> {
    /// Array with a fixed inter-element spacing `d`; the aperture follows as
    /// `(N-1)·d`.
    pub fn fixed_spacing(
        n_elements: usize,
        spacing_m: T,
        dipole_length_m: T,
        wavelength_m: T,
    ) -> Result<Self> {
        Self::validate_common(n_elements, dipole_length_m, wavelength_m)?;
        if n_elements >= 2 && !(spacing_m > T::zero()) {
            return Err(Error::Domain(format!(
                "spacing must be positive for N >= 2, got {spacing_m}"
            )));
        }
        Ok(Self {
            n_elements,
            spacing_m,
            aperture_m: T::from_count(n_elements - 1) * spacing_m,
            dipole_length_m,
            wavelength_m,
            spacing_mode: SpacingMode::FixedSpacing,
        })
    }

    /// Array with a fixed aperture `D`; the spacing follows as `D/(N-1)`,
    /// which requires at least two elements.
    pub fn fixed_aperture(
        n_elements: usize,
        aperture_m: T,
        dipole_length_m: T,
        wavelength_m: T,
    ) -> Result<Self> {
        Self::validate_common(n_elements, dipole_length_m, wavelength_m)?;
        if n_elements < 2 {
            return Err(Error::Domain(
                "a fixed-aperture array needs N >= 2 elements".into(),
            ));
        }
        if !(aperture_m > T::zero()) {
            return Err(Error::Domain(format!(
                "aperture must be positive, got {aperture_m}"
            )));
        }
        Ok(Self {
            n_elements,
            spacing_m: aperture_m / T::from_count(n_elements - 1),
            aperture_m,
            dipole_length_m,
            wavelength_m,
            spacing_mode: SpacingMode::FixedAperture,
        })
    }

    fn validate_common(n_elements: usize, dipole_length_m: T, wavelength_m: T) -> Result<()> {
        if n_elements == 0 {
            return Err(Error::Domain("array needs at least one element".into()));
        }
        if !(dipole_length_m > T::zero()) {
            return Err(Error::Domain(format!(
                "dipole length must be positive, got {dipole_length_m}"
            )));
        }
        if !(wavelength_m > T::zero()) {
            return Err(Error::Domain(format!(
                "wavelength must be positive, got {wavelength_m}"
            )));
        }
        Ok(())
    }

    pub fn n_elements(&self) -> usize {
        self.n_elements
    }

    pub fn spacing_m(&self) -> T {
        self.spacing_m
    }

    pub fn aperture_m(&self) -> T {
        self.aperture_m
    }

    pub fn dipole_length_m(&self) -> T {
        self.dipole_length_m
    }

    pub fn wavelength_m(&self) -> T {
        self.wavelength_m
    }

    pub fn spacing_mode(&self) -> SpacingMode {
        self.spacing_mode
    }

    /// Wavenumber `k = 2π/λ` in rad/m.
    pub fn wavenumber(&self) -> T {
        T::TAU() / self.wavelength_m
    }
}

/// Placement of the single-antenna endpoint relative to the first array
/// element: distance `r > 0` and incidence angle `θ ∈ (0, π]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkGeometry<T> {
    distance_m: T,
    incidence_angle_rad: T,
}

impl<T: Scalar> LinkGeometry<T> {
    pub fn new(distance_m: T, incidence_angle_rad: T) -> Result<Self> {
        if !(distance_m > T::zero()) {
            return Err(Error::Domain(format!(
                "link distance must be positive, got {distance_m}"
            )));
        }
        if !(incidence_angle_rad > T::zero()) || !(incidence_angle_rad <= T::PI()) {
            return Err(Error::Domain(format!(
                "incidence angle must lie in (0, pi], got {incidence_angle_rad}"
            )));
        }
        Ok(Self {
            distance_m,
            incidence_angle_rad,
        })
    }

    /// Broadside placement (`θ = π/2`) at distance `r`.
    pub fn broadside(distance_m: T) -> Result<Self> {
        Self::new(distance_m, T::FRAC_PI_2())
    }

    pub fn distance_m(&self) -> T {
        self.distance_m
    }

    pub fn incidence_angle_rad(&self) -> T {
        self.incidence_angle_rad
    }

    /// True when the incidence angle is broadside to working precision.
    pub fn is_broadside(&self) -> bool {
        (self.incidence_angle_rad - T::FRAC_PI_2()).abs() <= T::lit(1e-12)
    }
}

/// Radiation resistance of a Hertzian dipole: `(2/3)·π·η·(l/λ)²` ohms.
pub fn radiation_resistance<T: Scalar>(
    dipole_length_m: T,
    wavelength_m: T,
    constants: &PhysicalConstants<T>,
) -> Result<T> {
    if !(dipole_length_m > T::zero()) {
        return Err(Error::Domain(format!(
            "dipole length must be positive, got {dipole_length_m}"
        )));
    }
    if !(wavelength_m > T::zero()) {
        return Err(Error::Domain(format!(
            "wavelength must be positive, got {wavelength_m}"
        )));
    }
    let ratio = dipole_length_m / wavelength_m;
    Ok(T::lit(2.0 / 3.0) * T::PI() * constants.eta * ratio * ratio)
}

/// Normalized Hertzian-dipole coupling kernel
/// `(3/2)·j·e^{-jx}·(1/x - j/x² - 1/x³)` for `x > 0`.
///
/// `x` is an electrical distance (wavenumber times separation), so the kernel
/// is dimensionless; the leading `1/x` term dominates in the far field.
pub fn coupling_kernel<T: Scalar>(x: T) -> Result<C<T>> {
    if !(x > T::zero()) {
        return Err(Error::Domain(format!(
            "coupling kernel is singular at zero separation, got x = {x}"
        )));
    }
    let inv = x.recip();
    let inv2 = inv * inv;
    let inv3 = inv2 * inv;
    let bracket = C::new(inv - inv3, -inv2);
    let phase = C::new(T::zero(), -x).exp();
    let j = C::new(T::zero(), T::lit(1.5));
    Ok(j * phase * bracket)
}

/// Symmetric Toeplitz intra-array impedance matrix, stored by its first row.
///
/// Entry `(m, n)` equals the generator at lag `|m - n|`; the diagonal is the
/// real radiation resistance.
#[derive(Debug, Clone, PartialEq)]
pub struct IntraArrayMatrix<T> {
    first_row: Vec<C<T>>,
}

impl<T: Scalar> IntraArrayMatrix<T> {
    pub fn from_first_row(first_row: Vec<C<T>>) -> Result<Self> {
        if first_row.is_empty() {
            return Err(Error::Domain("empty Toeplitz generator".into()));
        }
        Ok(Self { first_row })
    }

    pub fn n(&self) -> usize {
        self.first_row.len()
    }

    pub fn first_row(&self) -> &[C<T>] {
        &self.first_row
    }

    /// Entry at `(i, j)`.
    pub fn entry(&self, i: usize, j: usize) -> C<T> {
        self.first_row[i.abs_diff(j)]
    }

    /// Dense materialization, refused above `cap` to keep O(N²) storage an
    /// explicit decision.
    pub fn materialize(&self, cap: usize) -> Result<Matrix<T>> {
        let n = self.n();
        if n > cap {
            return Err(Error::DenseCapExceeded { n, cap });
        }
        Ok(Matrix::from_fn(n, n, |i, j| self.entry(i, j)))
    }
}

/// Intra-array impedance of a ULA of loaded Hertzian dipoles: diagonal `R_r`,
/// off-diagonal `R_r·ψ(k·d·|m-n|)`.
pub fn intra_array_impedance<T: Scalar>(
    ula: &UlaSpec<T>,
    constants: &PhysicalConstants<T>,
) -> Result<IntraArrayMatrix<T>> {
    let r_r = radiation_resistance(ula.dipole_length_m(), ula.wavelength_m(), constants)?;
    let kd = ula.wavenumber() * ula.spacing_m();
    let n = ula.n_elements();
    let mut first_row = Vec::with_capacity(n);
    first_row.push(C::new(r_r, T::zero()));
    for m in 1..n {
        let kernel = coupling_kernel(kd * T::from_count(m))?;
        first_row.push(kernel * r_r);
    }
    IntraArrayMatrix::from_first_row(first_row)
}

/// Distance from the link endpoint to each array element by the law of
/// cosines, `r_n = sqrt(r² + (nd)² - 2·r·nd·cosθ)`; broadside reduces to
/// `sqrt(r² + (nd)²)`.
pub fn element_distances<T: Scalar>(ula: &UlaSpec<T>, link: &LinkGeometry<T>) -> Result<Vec<T>> {
    let r = link.distance_m();
    let cos_theta = link.incidence_angle_rad().cos();
    let d = ula.spacing_m();
    let two = T::lit(2.0);
    let mut out = Vec::with_capacity(ula.n_elements());
    for n in 0..ula.n_elements() {
        let offset = T::from_count(n) * d;
        let sq = r * r + offset * offset - two * r * offset * cos_theta;
        let dist = sq.max(T::zero()).sqrt();
        if !(dist > T::zero()) {
            return Err(Error::DegenerateGeometry { index: n });
        }
        out.push(dist);
    }
    Ok(out)
}

/// Amplitude convention for the point-source inter-array model. The paper's
/// vector entry `j·R_r·e^{-jkr}/(kr)` carries no 3/2 factor, while the
/// coupling kernel's leading term does; both forms are kept selectable.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum InterArrayAmplitude {
    /// `j·R_r·e^{-jkr}/(kr)` as printed.
    #[default]
    Paper,
    /// Scaled by 3/2 to match the kernel's leading term.
    KernelConsistent,
}

impl InterArrayAmplitude {
    pub fn scale<T: Scalar>(&self) -> T {
        match self {
            InterArrayAmplitude::Paper => T::one(),
            InterArrayAmplitude::KernelConsistent => T::lit(1.5),
        }
    }
}

/// Inter-array coupling vector between the array and the single-antenna end
/// (`z_TR` for MISO, identically `z_RT` for SIMO).
#[derive(Debug, Clone, PartialEq)]
pub struct InterArrayVector<T> {
    entries: Vec<C<T>>,
}

impl<T: Scalar> InterArrayVector<T> {
    pub fn entries(&self) -> &[C<T>] {
        &self.entries
    }

    pub fn n(&self) -> usize {
        self.entries.len()
    }

    /// Squared Euclidean norm `Σ |z_n|²`.
    pub fn norm_sqr(&self) -> T {
        let mut acc = T::zero();
        for z in &self.entries {
            acc = acc + z.norm_sqr();
        }
        acc
    }
}

/// Point-source inter-array coupling: entry `n` is
/// `amplitude · j·R_r·e^{-j·k·r_n}/(k·r_n)`.
pub fn inter_array_coupling<T: Scalar>(
    ula: &UlaSpec<T>,
    link: &LinkGeometry<T>,
    constants: &PhysicalConstants<T>,
    amplitude: InterArrayAmplitude,
) -> Result<InterArrayVector<T>> {
    let r_r = radiation_resistance(ula.dipole_length_m(), ula.wavelength_m(), constants)?;
    let k = ula.wavenumber();
    let scale = amplitude.scale::<T>();
    let distances = element_distances(ula, link)?;
    let entries = distances
        .iter()
        .map(|&r_n| {
            let kr = k * r_n;
            let phase = C::new(T::zero(), -kr).exp();
            C::new(T::zero(), scale * r_r / kr) * phase
        })
        .collect();
    Ok(InterArrayVector { entries })
}
