//! Scenario configuration, N-grid generation and the sweep engine.

use std::path::Path;

use crate::antenna::{InterArrayAmplitude, LinkGeometry, PhysicalConstants, SpacingMode, UlaSpec};
use crate::criteria::{
    evaluate_condition, CouplingReport, EvaluateOptions, LinkRole, DEFAULT_MARGIN_THRESHOLD,
    DEFAULT_RHS_EXACT_CAP,
};
use crate::error::{Error, Result};
use crate::multiport::TerminationSpec;
use crate::region::FieldRegion;
use crate::scalar::Scalar;
use crate::C;

/// Environment variable capping the sweep worker count.
pub const THREADS_ENV_VAR: &str = "COUPLING_LAB_THREADS";

/// Default number of grid points per sweep.
pub const DEFAULT_GRID_POINTS: usize = 60;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GridSpacing {
    Log,
    Linear,
}

/// A full sweep description: array recipe, link, terminations and grid.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig<T> {
    pub name: String,
    pub spacing_mode: SpacingMode,
    /// Inter-element spacing in meters (FixedSpacing mode).
    pub spacing_m: Option<T>,
    /// Aperture in meters (FixedAperture mode).
    pub aperture_m: Option<T>,
    pub dipole_length_m: T,
    pub wavelength_m: T,
    pub distance_m: T,
    pub incidence_angle_rad: T,
    pub z_generator: C<T>,
    pub z_load: C<T>,
    pub n_min: usize,
    pub n_max: usize,
    pub points: usize,
    pub grid_spacing: GridSpacing,
    pub threshold: T,
    pub rhs_exact_cap: usize,
    pub eta: T,
    pub role: LinkRole,
    pub amplitude: InterArrayAmplitude,
}

impl<T: Scalar> ScenarioConfig<T> {
    /// Fixed half-wavelength spacing at 55 m, the first built-in setup.
    pub fn scenario1() -> Self {
        Self {
            name: "scenario1".into(),
            spacing_mode: SpacingMode::FixedSpacing,
            spacing_m: Some(T::lit(5e-4)),
            aperture_m: None,
            dipole_length_m: T::lit(5e-5),
            wavelength_m: T::lit(1e-3),
            distance_m: T::lit(55.0),
            incidence_angle_rad: T::FRAC_PI_2(),
            z_generator: C::new(T::lit(186.0), T::lit(-31.6)),
            z_load: C::new(T::lit(186.0), T::lit(-31.6)),
            n_min: 10,
            n_max: 2000,
            points: DEFAULT_GRID_POINTS,
            grid_spacing: GridSpacing::Log,
            threshold: T::lit(DEFAULT_MARGIN_THRESHOLD),
            rhs_exact_cap: DEFAULT_RHS_EXACT_CAP,
            eta: PhysicalConstants::<T>::default().eta,
            role: LinkRole::Miso,
            amplitude: InterArrayAmplitude::Paper,
        }
    }

    /// Fixed one-meter aperture at the Fresnel distance, the second built-in
    /// setup. The distance stores the computed `0.62·sqrt(D³/λ)` rather than
    /// its rounded value.
    pub fn scenario2() -> Self {
        let aperture = T::lit(1.0);
        let wavelength = T::lit(1e-3);
        let fresnel = T::lit(0.62) * (aperture.powi(3) / wavelength).sqrt();
        Self {
            name: "scenario2".into(),
            spacing_mode: SpacingMode::FixedAperture,
            spacing_m: None,
            aperture_m: Some(aperture),
            dipole_length_m: T::lit(5e-5),
            wavelength_m: wavelength,
            distance_m: fresnel,
            incidence_angle_rad: T::FRAC_PI_2(),
            z_generator: C::new(T::lit(186.0), T::lit(-31.6)),
            z_load: C::new(T::lit(186.0), T::lit(-31.6)),
            n_min: 10,
            n_max: 1_000_000,
            points: DEFAULT_GRID_POINTS,
            grid_spacing: GridSpacing::Log,
            threshold: T::lit(DEFAULT_MARGIN_THRESHOLD),
            rhs_exact_cap: DEFAULT_RHS_EXACT_CAP,
            eta: PhysicalConstants::<T>::default().eta,
            role: LinkRole::Miso,
            amplitude: InterArrayAmplitude::Paper,
        }
    }

    /// Looks a preset up by name.
    pub fn preset(name: &str) -> Result<Self> {
        match name {
            "scenario1" => Ok(Self::scenario1()),
            "scenario2" => Ok(Self::scenario2()),
            other => Err(Error::Config(format!(
                "unknown scenario '{other}' (available: scenario1, scenario2)"
            ))),
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self.spacing_mode {
            SpacingMode::FixedSpacing => {
                if self.spacing_m.is_none() {
                    return Err(Error::Config(
                        "fixed-spacing mode requires spacing_m".into(),
                    ));
                }
                if self.n_min < 1 {
                    return Err(Error::Config("n_min must be at least 1".into()));
                }
            }
            SpacingMode::FixedAperture => {
                if self.aperture_m.is_none() {
                    return Err(Error::Config(
                        "fixed-aperture mode requires aperture_m".into(),
                    ));
                }
                if self.n_min < 2 {
                    return Err(Error::Config(
                        "fixed-aperture mode requires n_min >= 2 (spacing is D/(N-1))".into(),
                    ));
                }
            }
        }
        if self.n_min > self.n_max {
            return Err(Error::Config(format!(
                "n_min {} exceeds n_max {}",
                self.n_min, self.n_max
            )));
        }
        if self.points == 0 {
            return Err(Error::Config("points must be positive".into()));
        }
        if !(self.threshold > T::zero()) || !self.threshold.is_finite() {
            return Err(Error::Config(
                "threshold must be positive and finite".into(),
            ));
        }
        // Construct one point end to end so bad physical parameters surface
        // here rather than mid-sweep.
        self.ula_at(self.n_min)?;
        self.link()?;
        self.terminations()?;
        self.constants()?;
        Ok(())
    }

    /// Array at one grid point; fixed-aperture mode recomputes `d = D/(N-1)`,
    /// fixed-spacing mode recomputes `D = (N-1)·d`.
    pub fn ula_at(&self, n: usize) -> Result<UlaSpec<T>> {
        match self.spacing_mode {
            SpacingMode::FixedSpacing => UlaSpec::fixed_spacing(
                n,
                self.spacing_m
                    .ok_or_else(|| Error::Config("fixed-spacing mode requires spacing_m".into()))?,
                self.dipole_length_m,
                self.wavelength_m,
            ),
            SpacingMode::FixedAperture => UlaSpec::fixed_aperture(
                n,
                self.aperture_m.ok_or_else(|| {
                    Error::Config("fixed-aperture mode requires aperture_m".into())
                })?,
                self.dipole_length_m,
                self.wavelength_m,
            ),
        }
    }

    pub fn link(&self) -> Result<LinkGeometry<T>> {
        LinkGeometry::new(self.distance_m, self.incidence_angle_rad)
    }

    pub fn terminations(&self) -> Result<TerminationSpec<T>> {
        TerminationSpec::new(self.z_generator, self.z_load)
    }

    pub fn constants(&self) -> Result<PhysicalConstants<T>> {
        PhysicalConstants::new(self.eta)
    }

    pub fn evaluate_options(&self) -> EvaluateOptions<T> {
        EvaluateOptions {
            role: self.role,
            threshold: self.threshold,
            rhs_exact_cap: self.rhs_exact_cap,
            amplitude: self.amplitude,
        }
    }

    /// The deduplicated ascending integer grid.
    pub fn n_grid(&self) -> Vec<usize> {
        if self.n_min == self.n_max || self.points == 1 {
            return vec![self.n_min];
        }
        let steps = self.points - 1;
        let mut grid: Vec<usize> = (0..=steps)
            .map(|i| {
                let t = i as f64 / steps as f64;
                let v = match self.grid_spacing {
                    GridSpacing::Log => {
                        let lo = (self.n_min as f64).log10();
                        let hi = (self.n_max as f64).log10();
                        10f64.powf(lo + t * (hi - lo))
                    }
                    GridSpacing::Linear => self.n_min as f64 + t * (self.n_max - self.n_min) as f64,
                };
                (v.round() as usize).clamp(self.n_min, self.n_max)
            })
            .collect();
        grid.sort_unstable();
        grid.dedup();
        grid
    }

    /// Evaluates one point of this scenario at the given element count.
    pub fn report_at(&self, n: usize) -> Result<CouplingReport<T>> {
        let ula = self.ula_at(n)?;
        evaluate_condition(
            &ula,
            &self.link()?,
            &self.terminations()?,
            &self.constants()?,
            &self.evaluate_options(),
        )
    }

    /// Parses the flat `key = value` config format.
    pub fn from_config_str(text: &str) -> Result<Self> {
        parse_config(text)
    }

    pub fn from_config_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        parse_config(&text)
    }
}

/// One computed sweep point.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow<T> {
    pub n: usize,
    pub d_m: T,
    pub aperture_m: T,
    pub region: FieldRegion,
    pub lhs: T,
    pub rhs_exact: Option<T>,
    pub rhs_bound: T,
    pub poisson_limit: Option<T>,
    pub margin_bound: T,
    pub margin_exact: Option<T>,
    pub verdict: bool,
}

impl<T: Scalar> From<CouplingReport<T>> for SweepRow<T> {
    fn from(report: CouplingReport<T>) -> Self {
        Self {
            n: report.n,
            d_m: report.spacing_m,
            aperture_m: report.aperture_m,
            region: report.region.region,
            lhs: report.sides.lhs,
            rhs_exact: report.sides.rhs_exact,
            rhs_bound: report.sides.rhs_bound,
            poisson_limit: report.poisson_limit,
            margin_bound: report.sides.margin_bound,
            margin_exact: report.sides.margin_exact,
            verdict: report.verdict,
        }
    }
}

/// Worker count for a sweep: `COUPLING_LAB_THREADS` when set, otherwise the
/// available parallelism, never more than the number of grid points.
fn worker_count(grid_len: usize) -> Result<usize> {
    let configured = match std::env::var(THREADS_ENV_VAR) {
        Ok(raw) => {
            let parsed: usize = raw.parse().map_err(|_| {
                Error::Config(format!(
                    "{THREADS_ENV_VAR} must be a positive integer, got '{raw}'"
                ))
            })?;
            if parsed == 0 {
                return Err(Error::Config(format!(
                    "{THREADS_ENV_VAR} must be a positive integer, got '0'"
                )));
            }
            parsed
        }
        Err(_) => std::thread::available_parallelism().map_or(1, |p| p.get()),
    };
    Ok(configured.max(1).min(grid_len.max(1)))
}

/// Runs the scenario over its N grid, one row per point in ascending order.
///
/// Rows are computed by a strided worker pool; every row is a pure function
/// of the config, so the output is byte-identical for any worker count. A
/// failing row aborts the sweep and names its grid point.
pub fn run_sweep<T: Scalar>(config: &ScenarioConfig<T>) -> Result<Vec<SweepRow<T>>> {
    config.validate()?;
    let grid = config.n_grid();
    let workers = worker_count(grid.len())?;

    let mut slots: Vec<Option<Result<SweepRow<T>>>> = Vec::new();
    slots.resize_with(grid.len(), || None);

    if workers <= 1 {
        for (slot, &n) in slots.iter_mut().zip(&grid) {
            *slot = Some(config.report_at(n).map(SweepRow::from));
        }
    } else {
        let results = std::thread::scope(|scope| {
            let mut handles = Vec::with_capacity(workers);
            for w in 0..workers {
                let grid = &grid;
                let config = &config;
                handles.push(scope.spawn(move || {
                    let mut out = Vec::new();
                    let mut idx = w;
                    while idx < grid.len() {
                        out.push((idx, config.report_at(grid[idx]).map(SweepRow::from)));
                        idx += workers;
                    }
                    out
                }));
            }
            handles
                .into_iter()
                .flat_map(|h| h.join().expect("sweep worker panicked"))
                .collect::<Vec<_>>()
        });
        for (idx, row) in results {
            slots[idx] = Some(row);
        }
    }

    let mut rows = Vec::with_capacity(grid.len());
    for (slot, &n) in slots.into_iter().zip(&grid) {
        match slot.expect("every grid slot filled") {
            Ok(row) => rows.push(row),
            Err(err) => {
                return Err(Error::SweepRow {
                    n,
                    source: Box::new(err),
                })
            }
        }
    }
    Ok(rows)
}

// --- flat key = value config format ---------------------------------------

/// Parses `a+bj` / `a-bj` / `a` / `bj` complex literals.
pub fn parse_complex<T: Scalar>(raw: &str) -> Result<C<T>> {
    let s: String = raw.chars().filter(|ch| !ch.is_whitespace()).collect();
    if s.is_empty() {
        return Err(Error::Config("empty complex literal".into()));
    }
    let parse_real = |part: &str| -> Result<T> {
        part.parse::<f64>()
            .map(T::lit)
            .map_err(|_| Error::Config(format!("invalid number '{part}' in '{raw}'")))
    };
    if let Some(body) = s.strip_suffix('j') {
        // Split at the last '+'/'-' that is not a leading sign and not part
        // of an exponent.
        let bytes = body.as_bytes();
        let mut split = None;
        for i in (1..bytes.len()).rev() {
            let ch = bytes[i] as char;
            if (ch == '+' || ch == '-') && !matches!(bytes[i - 1] as char, 'e' | 'E') {
                split = Some(i);
                break;
            }
        }
        match split {
            Some(i) => {
                let re = parse_real(&body[..i])?;
                let im_str = &body[i..];
                let im = if im_str == "+" {
                    T::one()
                } else if im_str == "-" {
                    -T::one()
                } else {
                    parse_real(im_str)?
                };
                Ok(C::new(re, im))
            }
            None => {
                let im = if body.is_empty() {
                    T::one()
                } else if body == "-" {
                    -T::one()
                } else {
                    parse_real(body)?
                };
                Ok(C::new(T::zero(), im))
            }
        }
    } else {
        Ok(C::new(parse_real(&s)?, T::zero()))
    }
}

/// Renders a complex impedance in the config literal form.
pub fn format_complex<T: Scalar>(z: C<T>) -> String {
    if z.im == T::zero() {
        format!("{}", z.re)
    } else if z.im < T::zero() {
        format!("{}{}j", z.re, z.im)
    } else {
        format!("{}+{}j", z.re, z.im)
    }
}

fn parse_config<T: Scalar>(text: &str) -> Result<ScenarioConfig<T>> {
    let mut pairs: Vec<(String, String)> = Vec::new();
    for (line_no, raw_line) in text.lines().enumerate() {
        let line = match raw_line.find('#') {
            Some(pos) => &raw_line[..pos],
            None => raw_line,
        }
        .trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| {
            Error::Config(format!(
                "line {}: expected 'key = value', got '{}'",
                line_no + 1,
                line
            ))
        })?;
        let key = key.trim().to_string();
        let value = value.trim().to_string();
        if pairs.iter().any(|(k, _)| *k == key) {
            return Err(Error::Config(format!("duplicate key '{key}'")));
        }
        pairs.push((key, value));
    }

    let take = |key: &str| pairs.iter().find(|(k, _)| k == key).map(|(_, v)| v.clone());
    let parse_t = |key: &str, v: &str| -> Result<T> {
        v.parse::<f64>()
            .map(T::lit)
            .map_err(|_| Error::Config(format!("key '{key}': invalid number '{v}'")))
    };
    let parse_usize = |key: &str, v: &str| -> Result<usize> {
        v.parse::<usize>()
            .map_err(|_| Error::Config(format!("key '{key}': invalid integer '{v}'")))
    };

    const KNOWN_KEYS: &[&str] = &[
        "name",
        "spacing_mode",
        "spacing_m",
        "aperture_m",
        "dipole_length_m",
        "wavelength_m",
        "distance_m",
        "incidence_angle_rad",
        "z_generator_ohm",
        "z_load_ohm",
        "n_min",
        "n_max",
        "points",
        "grid_spacing",
        "threshold",
        "rhs_exact_cap",
        "eta_ohm",
        "role",
        "interarray_amplitude",
    ];
    for (key, _) in &pairs {
        if !KNOWN_KEYS.contains(&key.as_str()) {
            return Err(Error::Config(format!("unknown key '{key}'")));
        }
    }

    let require = |key: &str| -> Result<String> {
        take(key).ok_or_else(|| Error::Config(format!("missing required key '{key}'")))
    };

    let spacing_mode = match require("spacing_mode")?.as_str() {
        "fixed-spacing" => SpacingMode::FixedSpacing,
        "fixed-aperture" => SpacingMode::FixedAperture,
        other => {
            return Err(Error::Config(format!(
                "spacing_mode must be 'fixed-spacing' or 'fixed-aperture', got '{other}'"
            )))
        }
    };
    match spacing_mode {
        SpacingMode::FixedSpacing if take("aperture_m").is_some() => {
            return Err(Error::Config(
                "aperture_m is not accepted in fixed-spacing mode (it follows from N)".into(),
            ));
        }
        SpacingMode::FixedAperture if take("spacing_m").is_some() => {
            return Err(Error::Config(
                "spacing_m is not accepted in fixed-aperture mode (it follows from N)".into(),
            ));
        }
        _ => {}
    }

    let grid_spacing = match take("grid_spacing").as_deref() {
        None | Some("log") => GridSpacing::Log,
        Some("linear") => GridSpacing::Linear,
        Some(other) => {
            return Err(Error::Config(format!(
                "grid_spacing must be 'log' or 'linear', got '{other}'"
            )))
        }
    };
    let role = match take("role").as_deref() {
        None | Some("miso") => LinkRole::Miso,
        Some("simo") => LinkRole::Simo,
        Some(other) => {
            return Err(Error::Config(format!(
                "role must be 'miso' or 'simo', got '{other}'"
            )))
        }
    };
    let amplitude = match take("interarray_amplitude").as_deref() {
        None | Some("paper") => InterArrayAmplitude::Paper,
        Some("kernel-consistent") => InterArrayAmplitude::KernelConsistent,
        Some(other) => {
            return Err(Error::Config(format!(
                "interarray_amplitude must be 'paper' or 'kernel-consistent', got '{other}'"
            )))
        }
    };

    let config = ScenarioConfig {
        name: take("name").unwrap_or_else(|| "custom".into()),
        spacing_mode,
        spacing_m: match take("spacing_m") {
            Some(v) => Some(parse_t("spacing_m", &v)?),
            None => None,
        },
        aperture_m: match take("aperture_m") {
            Some(v) => Some(parse_t("aperture_m", &v)?),
            None => None,
        },
        dipole_length_m: parse_t("dipole_length_m", &require("dipole_length_m")?)?,
        wavelength_m: parse_t("wavelength_m", &require("wavelength_m")?)?,
        distance_m: parse_t("distance_m", &require("distance_m")?)?,
        incidence_angle_rad: match take("incidence_angle_rad") {
            Some(v) => parse_t("incidence_angle_rad", &v)?,
            None => T::FRAC_PI_2(),
        },
        z_generator: parse_complex(&require("z_generator_ohm")?)?,
        z_load: parse_complex(&require("z_load_ohm")?)?,
        n_min: parse_usize("n_min", &require("n_min")?)?,
        n_max: parse_usize("n_max", &require("n_max")?)?,
        points: match take("points") {
            Some(v) => parse_usize("points", &v)?,
            None => DEFAULT_GRID_POINTS,
        },
        grid_spacing,
        threshold: match take("threshold") {
            Some(v) => parse_t("threshold", &v)?,
            None => T::lit(DEFAULT_MARGIN_THRESHOLD),
        },
        rhs_exact_cap: match take("rhs_exact_cap") {
            Some(v) => parse_usize("rhs_exact_cap", &v)?,
            None => DEFAULT_RHS_EXACT_CAP,
        },
        eta: match take("eta_ohm") {
            Some(v) => parse_t("eta_ohm", &v)?,
            None => PhysicalConstants::<T>::default().eta,
        },
        role,
        amplitude,
    };
    config.validate()?;
    Ok(config)
}
