//! Field-region classification for an aperture/wavelength/distance triple.

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Relative distance to a region boundary under which a classification is
/// flagged as a boundary case.
pub const BOUNDARY_RTOL: f64 = 0.01;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FieldRegion {
    ReactiveNearField,
    RadiativeNearField,
    FarField,
}

impl FieldRegion {
    /// Stable lowercase label used in CSV output.
    pub fn label(&self) -> &'static str {
        match self {
            FieldRegion::ReactiveNearField => "reactive-near-field",
            FieldRegion::RadiativeNearField => "radiative-near-field",
            FieldRegion::FarField => "far-field",
        }
    }
}

/// Region boundaries and verdict for one geometry.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RegionClassification<T> {
    /// Fresnel distance `0.62·sqrt(D³/λ)` in meters.
    pub fresnel_distance: T,
    /// Fraunhofer distance `2·D²/λ` in meters.
    pub fraunhofer_distance: T,
    pub region: FieldRegion,
    /// Set when the link distance sits within [`BOUNDARY_RTOL`] of either
    /// boundary, marking the classification as marginal.
    pub boundary_case: bool,
}

/// Classifies the link distance `r` against the Fresnel and Fraunhofer
/// boundaries of an aperture-`D` antenna at wavelength `λ`.
pub fn classify_region<T: Scalar>(
    aperture_m: T,
    wavelength_m: T,
    distance_m: T,
) -> Result<RegionClassification<T>> {
    for (name, v) in [
        ("aperture", aperture_m),
        ("wavelength", wavelength_m),
        ("distance", distance_m),
    ] {
        if !(v > T::zero()) {
            return Err(Error::Domain(format!("{name} must be positive, got {v}")));
        }
    }
    let fresnel = T::lit(0.62) * (aperture_m.powi(3) / wavelength_m).sqrt();
    let fraunhofer = T::lit(2.0) * aperture_m * aperture_m / wavelength_m;
    let region = if distance_m < fresnel {
        FieldRegion::ReactiveNearField
    } else if distance_m < fraunhofer {
        FieldRegion::RadiativeNearField
    } else {
        FieldRegion::FarField
    };
    let tol = T::lit(BOUNDARY_RTOL);
    let boundary_case = (distance_m - fresnel).abs() <= tol * fresnel
        || (distance_m - fraunhofer).abs() <= tol * fraunhofer;
    Ok(RegionClassification {
        fresnel_distance: fresnel,
        fraunhofer_distance: fraunhofer,
        region,
        boundary_case,
    })
}
