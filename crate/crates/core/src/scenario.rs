//! Scenario files, figure presets and curve output.
//!
//! A scenario is a flat TOML table. Physical keys match [`OpoParams`];
//! the remaining keys describe the grid, the detector family being swept and
//! the local oscillator. Every detection-plane length is read in the unit
//! named by `length_unit`.

use std::f64::consts::FRAC_PI_2;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::homodyne::{
    spectrum_planepump_circular, spectrum_planepump_far_1d, sweep, CurvePoint, DetectorFamily, DetectorShape,
    LoProfile, LocalOscillator,
};
use crate::iosolver::{solve_io, threshold_margin, BogoliubovPair};
use crate::kernels::{
    build_kernel_matrix, check_kernel_grid, delta_2d, CoherenceRegime, Domain, Grid1D, LOCAL_STEP_RATIO,
    STEPS_PER_SCALE, WAISTS_PER_EXTENT,
};
use crate::params::{DerivedScales, OpoParams, PumpProfile};

/// Largest grid the automatic sizing will pick.
pub const MAX_AUTO_POINTS: usize = 2048;
/// Coherence scales kept between the outermost detector edge and the grid edge.
const EDGE_MARGIN: f64 = 4.0;

pub const CSV_HEADER: &str = "abscissa,vn_squeezed,vn_antisqueezed,shot";
/// Header of the kernel curve, which has no noise columns.
pub const KERNEL_CSV_HEADER: &str = "abscissa,delta";

/// Either a number or the string `"auto"`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Extent {
    Value(f64),
    Keyword(String),
}

/// The raw contents of a scenario file. Missing physical keys take the
/// values of [`OpoParams::default`].
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lambda_s: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n_s: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub l_c: Option<f64>,
    #[serde(rename = "z_C", skip_serializing_if = "Option::is_none")]
    pub z_c: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub w_p: Option<f64>,
    /// Pump waist given as `w_p^2 / l_coh^2`; excludes `w_p`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub b: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub plane_pump: Option<bool>,
    #[serde(rename = "A_p", skip_serializing_if = "Option::is_none")]
    pub a_p: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub detuning: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub omega_bar: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub f_lens: Option<f64>,

    /// `near` or `far`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub plane: Option<String>,
    /// `dense`, `analytic` (plane pump, far field) or `kernel`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub solver: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub grid_n: Option<usize>,
    /// Metres (near) or 1/m (far), or `"auto"`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub grid_half_extent: Option<Extent>,
    /// `interval`, `radial` or `pixel_pair`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub detector: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub pixel_width: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sweep_min: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sweep_max: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sweep_points: Option<usize>,
    /// `m`, `l_coh`, `r0` or `l_cohf`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub length_unit: Option<String>,
    /// `plane` or `gaussian`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lo: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lo_waist: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lo_amplitude: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub phi_lo: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub output: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Solver {
    Dense,
    Analytic,
    Kernel,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GridSpec {
    Auto { n: Option<usize> },
    Fixed { n: usize, half_extent: f64 },
}

/// A validated scenario, ready to run.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub params: OpoParams,
    pub scales: DerivedScales,
    pub plane: Domain,
    pub solver: Solver,
    pub grid: GridSpec,
    pub family: DetectorFamily,
    /// Swept detector sizes in detection-plane metres.
    pub sizes: Vec<f64>,
    pub lo: LocalOscillator,
    /// Detection-plane length the abscissa is expressed in, and its name.
    pub abscissa_unit: (f64, &'static str),
    pub output: PathBuf,
    /// One-line `key=value` echo of the scenario file.
    pub echo: String,
}

fn config_error(key: &str, message: impl Into<String>) -> Error {
    Error::config(key, message)
}

/// Parses a scenario file's text.
pub fn parse_scenario_file(text: &str) -> Result<ScenarioFile> {
    toml::from_str(text).map_err(|e| {
        let message = e.message().to_string();
        let key = unknown_key(&message).unwrap_or_else(|| "<file>".to_string());
        config_error(&key, message)
    })
}

/// Pulls the offending key out of a serde "unknown field" message.
fn unknown_key(message: &str) -> Option<String> {
    let rest = message.strip_prefix("unknown field `")?;
    Some(rest[..rest.find('`')?].to_string())
}

fn to_table(file: &ScenarioFile) -> toml::Table {
    toml::Table::try_from(file).expect("scenario file serialises to a table")
}

fn from_table(table: toml::Table) -> Result<ScenarioFile> {
    parse_scenario_file(&toml::to_string(&table).expect("table serialises"))
}

/// Applies one `key=value` override. The value is read as a TOML value and
/// falls back to a bare string.
pub fn apply_override(file: &ScenarioFile, assignment: &str) -> Result<ScenarioFile> {
    let (key, raw) = assignment
        .split_once('=')
        .ok_or_else(|| config_error(assignment, "override must have the form key=value"))?;
    let key = key.trim();
    let raw = raw.trim();
    let value = toml::from_str::<toml::Table>(&format!("v = {raw}"))
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(raw.to_string()));
    let mut table = to_table(file);
    // A pump given one way replaces a pump given the other way.
    match key {
        "w_p" | "b" => {
            table.remove("w_p");
            table.remove("b");
            table.remove("plane_pump");
        }
        "plane_pump" if value.as_bool() == Some(true) => {
            table.remove("w_p");
            table.remove("b");
        }
        _ => {}
    }
    table.insert(key.to_string(), value);
    from_table(table)
}

/// One-line echo of every key present in the file, in declaration order.
pub fn echo_line(file: &ScenarioFile) -> String {
    toml::to_string(file)
        .expect("scenario file serialises")
        .lines()
        .map(|l| l.replace(" = ", "="))
        .collect::<Vec<_>>()
        .join(" ")
}

impl ScenarioFile {
    fn physics(&self) -> Result<OpoParams> {
        let d = OpoParams::default();
        let mut p = OpoParams {
            lambda_s: self.lambda_s.unwrap_or(d.lambda_s),
            n_s: self.n_s.unwrap_or(d.n_s),
            l_c: self.l_c.unwrap_or(d.l_c),
            z_c: self.z_c.unwrap_or(d.z_c),
            w_p: None,
            plane_pump: true,
            a_p: self.a_p.unwrap_or(d.a_p),
            detuning: self.detuning.unwrap_or(d.detuning),
            omega_bar: self.omega_bar.unwrap_or(d.omega_bar),
            f_lens: self.f_lens.unwrap_or(d.f_lens),
        };
        let waist = match (self.w_p, self.b) {
            (Some(_), Some(_)) => return Err(config_error("b", "give either `w_p` or `b`, not both")),
            (Some(w), None) => Some(w),
            (None, Some(b)) => {
                if !(b.is_finite() && b > 0.0) {
                    return Err(Error::NonPhysical { field: "b", value: b });
                }
                Some(b.sqrt() * p.derive_scales().l_coh)
            }
            (None, None) => None,
        };
        p.w_p = waist;
        p.plane_pump = self.plane_pump.unwrap_or(waist.is_none());
        p.validate()
    }

    /// Validates the file and fills in defaults.
    pub fn resolve(&self) -> Result<Scenario> {
        let params = self.physics()?;
        let scales = params.derive_scales();
        let plane = match self.plane.as_deref().unwrap_or("near") {
            "near" => Domain::Near,
            "far" => Domain::Far,
            other => {
                return Err(config_error(
                    "plane",
                    format!("expected `near` or `far`, got `{other}`"),
                ))
            }
        };
        let solver = match self.solver.as_deref().unwrap_or("dense") {
            "dense" => Solver::Dense,
            "analytic" => Solver::Analytic,
            "kernel" => Solver::Kernel,
            other => {
                return Err(config_error(
                    "solver",
                    format!("expected `dense`, `analytic` or `kernel`, got `{other}`"),
                ))
            }
        };
        if solver == Solver::Analytic && !(params.is_plane_pump() && plane == Domain::Far) {
            return Err(config_error(
                "solver",
                "the analytic solver needs a plane pump and plane = \"far\"",
            ));
        }
        let unit_name = self.length_unit.as_deref().unwrap_or("m");
        let unit = unit_length(unit_name, &scales)?;
        let grid = match (&self.grid_half_extent, self.grid_n) {
            (None, n) => GridSpec::Auto { n },
            (Some(Extent::Keyword(k)), n) if k == "auto" => GridSpec::Auto { n },
            (Some(Extent::Keyword(k)), _) => {
                return Err(config_error(
                    "grid_half_extent",
                    format!("expected a number or \"auto\", got `{k}`"),
                ))
            }
            (Some(Extent::Value(l)), Some(n)) => GridSpec::Fixed { n, half_extent: *l },
            (Some(Extent::Value(_)), None) => {
                return Err(config_error("grid_n", "a fixed `grid_half_extent` needs `grid_n`"))
            }
        };
        if let GridSpec::Fixed { n, half_extent } = grid {
            if n < 2 {
                return Err(config_error("grid_n", "at least 2 points are needed"));
            }
            if !(half_extent.is_finite() && half_extent > 0.0) {
                return Err(Error::NonPhysical {
                    field: "grid_half_extent",
                    value: half_extent,
                });
            }
        }
        let family = match self.detector.as_deref().unwrap_or("interval") {
            "interval" => DetectorFamily::Interval,
            "radial" => DetectorFamily::Radial,
            "pixel_pair" => {
                let width = match self.pixel_width {
                    Some(w) => w * unit,
                    None => coherence_scale(plane, &scales, &params),
                };
                if !(width.is_finite() && width > 0.0) {
                    return Err(Error::NonPhysical {
                        field: "pixel_width",
                        value: width,
                    });
                }
                DetectorFamily::PixelPair { pixel_width: width }
            }
            other => {
                return Err(config_error(
                    "detector",
                    format!("expected `interval`, `radial` or `pixel_pair`, got `{other}`"),
                ))
            }
        };
        let lo_min = self.sweep_min.ok_or_else(|| config_error("sweep_min", "missing"))?;
        let lo_max = self.sweep_max.ok_or_else(|| config_error("sweep_max", "missing"))?;
        let points = self.sweep_points.unwrap_or(50);
        if points < 2 {
            return Err(config_error("sweep_points", "at least 2 points are needed"));
        }
        if !(lo_min.is_finite() && lo_max.is_finite() && lo_min >= 0.0 && lo_max > lo_min) {
            return Err(config_error("sweep_min", "need 0 <= sweep_min < sweep_max"));
        }
        let sizes: Vec<f64> = (0..points)
            .map(|i| (lo_min + (lo_max - lo_min) * i as f64 / (points - 1) as f64) * unit)
            .collect();
        if solver != Solver::Kernel {
            // Reject zero-size detectors before any numerics.
            family.mask(sizes[0].max(0.0), plane)?;
        }
        let phi_lo = self.phi_lo.unwrap_or(FRAC_PI_2);
        let amplitude = self.lo_amplitude.unwrap_or(1.0);
        let profile = match self.lo.as_deref().unwrap_or("plane") {
            "plane" => LoProfile::Plane { amplitude },
            "gaussian" => LoProfile::Gaussian {
                waist: self
                    .lo_waist
                    .ok_or_else(|| config_error("lo_waist", "a gaussian LO needs a waist"))?
                    * unit,
                amplitude,
            },
            other => {
                return Err(config_error(
                    "lo",
                    format!("expected `plane` or `gaussian`, got `{other}`"),
                ))
            }
        };
        let lo = LocalOscillator { profile, phi_lo }.validate()?;
        let abscissa_unit = match solver {
            Solver::Kernel => (scales.l_coh, "l_coh"),
            _ => natural_unit(plane, &scales, &params),
        };
        let echo = echo_line(&self.completed(&params, points, unit_name));
        Ok(Scenario {
            params,
            scales,
            plane,
            solver,
            grid,
            family,
            sizes,
            lo,
            abscissa_unit,
            output: PathBuf::from(self.output.clone().unwrap_or_else(|| "out".to_string())),
            echo,
        })
    }

    /// The file with every default written out, so that its echo alone
    /// reproduces the run.
    fn completed(&self, p: &OpoParams, points: usize, unit_name: &str) -> ScenarioFile {
        let or = |v: &Option<String>, d: &str| Some(v.clone().unwrap_or_else(|| d.to_string()));
        ScenarioFile {
            lambda_s: Some(p.lambda_s),
            n_s: Some(p.n_s),
            l_c: Some(p.l_c),
            z_c: Some(p.z_c),
            w_p: if self.b.is_some() { None } else { p.w_p },
            b: self.b,
            plane_pump: Some(p.is_plane_pump()),
            a_p: Some(p.a_p),
            detuning: Some(p.detuning),
            omega_bar: Some(p.omega_bar),
            f_lens: Some(p.f_lens),
            plane: or(&self.plane, "near"),
            solver: or(&self.solver, "dense"),
            detector: or(&self.detector, "interval"),
            sweep_points: Some(points),
            length_unit: Some(unit_name.to_string()),
            lo: or(&self.lo, "plane"),
            lo_amplitude: Some(self.lo_amplitude.unwrap_or(1.0)),
            phi_lo: Some(self.phi_lo.unwrap_or(FRAC_PI_2)),
            ..self.clone()
        }
    }
}

fn unit_length(name: &str, s: &DerivedScales) -> Result<f64> {
    match name {
        "m" => Ok(1.0),
        "l_coh" => Ok(s.l_coh),
        "r0" => Ok(s.r0),
        "l_cohf" => s
            .q_coh
            .map(|q| s.q_to_detector(q))
            .ok_or_else(|| config_error("length_unit", "`l_cohf` needs a finite pump")),
        other => Err(config_error(
            "length_unit",
            format!("expected `m`, `l_coh`, `r0` or `l_cohf`, got `{other}`"),
        )),
    }
}

/// Detection-plane coherence scale: `l_coh` in the near field; in the far
/// field `λ f / (2π w_p)` for a finite pump and `r0` for a plane pump.
pub fn coherence_scale(plane: Domain, s: &DerivedScales, p: &OpoParams) -> f64 {
    natural_unit(plane, s, p).0
}

fn natural_unit(plane: Domain, s: &DerivedScales, p: &OpoParams) -> (f64, &'static str) {
    match (plane, p.pump()) {
        (Domain::Near, _) => (s.l_coh, "l_coh"),
        (Domain::Far, PumpProfile::Gaussian { waist }) => (s.q_to_detector(1.0 / waist), "l_cohf"),
        (Domain::Far, PumpProfile::Plane) => (s.r0, "r0"),
    }
}

/// Converts a detection-plane length to grid units.
fn to_grid_units(x: f64, plane: Domain, s: &DerivedScales) -> f64 {
    match plane {
        Domain::Near => x,
        Domain::Far => s.detector_to_q(x),
    }
}

/// Grid-unit scales the grid has to resolve and to contain.
struct GridNeeds {
    /// Minimum half-extent.
    reach: f64,
    /// Largest step that resolves the pump, LO and detectors.
    feature_step: f64,
    /// Step that resolves the coherence structure of the kernel.
    coherence_step: f64,
}

fn grid_needs(sc: &Scenario) -> GridNeeds {
    let s = &sc.scales;
    let g = |x: f64| to_grid_units(x, sc.plane, s);
    let coherence = g(coherence_scale(sc.plane, s, &sc.params));
    let edge = sc
        .sizes
        .iter()
        .filter_map(|&size| sc.family.mask(size, sc.plane).ok())
        .map(|m| m.outer_edge())
        .fold(0.0, f64::max);
    let mut reach = g(edge) + EDGE_MARGIN * coherence;
    let mut feature_step = f64::INFINITY;
    if let LoProfile::Gaussian { waist, .. } = sc.lo.profile {
        reach = reach.max(WAISTS_PER_EXTENT * g(waist));
        feature_step = feature_step.min(g(waist) / STEPS_PER_SCALE);
    }
    let smallest = sc
        .sizes
        .iter()
        .copied()
        .filter(|&x| x > 0.0)
        .fold(f64::INFINITY, f64::min);
    match sc.family {
        DetectorFamily::PixelPair { pixel_width } => {
            feature_step = feature_step.min(g(pixel_width) / STEPS_PER_SCALE);
            if smallest.is_finite() {
                feature_step = feature_step.min(g(smallest));
            }
        }
        _ => feature_step = feature_step.min(g(smallest)),
    }
    if let PumpProfile::Gaussian { waist } = sc.params.pump() {
        let (scale, pump_reach) = match sc.plane {
            Domain::Near => (waist, WAISTS_PER_EXTENT * waist),
            Domain::Far => (1.0 / waist, WAISTS_PER_EXTENT * 2.0 / waist),
        };
        reach = reach.max(pump_reach);
        feature_step = feature_step.min(scale / STEPS_PER_SCALE);
    }
    let coherence_step = match sc.plane {
        Domain::Near => s.l_coh / STEPS_PER_SCALE,
        Domain::Far => {
            let band = s.phase_matching_bandwidth();
            reach = reach.max(WAISTS_PER_EXTENT * band);
            band / (2.0 * STEPS_PER_SCALE)
        }
    };
    GridNeeds {
        reach,
        feature_step,
        coherence_step,
    }
}

/// Builds the grid of a dense scenario, sizing it automatically if asked.
pub fn resolve_grid(sc: &Scenario) -> Result<Grid1D> {
    let needs = grid_needs(sc);
    let grid = match sc.grid {
        GridSpec::Fixed { n, half_extent } => {
            let grid = Grid1D::new(n, half_extent, sc.plane)?;
            if half_extent < needs.reach {
                return Err(Error::GridTooCoarse(format!(
                    "half-extent {half_extent:.3e} does not reach {:.3e} (detector edge plus margin, pump and LO)",
                    needs.reach
                )));
            }
            grid
        }
        GridSpec::Auto { n } => {
            let local = sc.plane == Domain::Near && needs.feature_step >= LOCAL_STEP_RATIO * sc.scales.l_coh;
            let step = if local {
                needs.feature_step
            } else {
                needs.feature_step.min(needs.coherence_step)
            };
            let n = match n {
                Some(n) => n,
                None => {
                    let wanted = (2.0 * needs.reach / step).ceil() as usize;
                    let n = wanted + wanted % 2;
                    if n > MAX_AUTO_POINTS {
                        return Err(Error::GridTooCoarse(format!(
                            "automatic sizing needs {n} points, more than {MAX_AUTO_POINTS}"
                        )));
                    }
                    n.max(16)
                }
            };
            Grid1D::new(n, needs.reach, sc.plane)?
        }
    };
    check_kernel_grid(&grid, &sc.params, &sc.scales)?;
    Ok(grid)
}

/// Result of one scenario.
#[derive(Debug, Clone, PartialEq)]
pub struct RunOutput {
    pub header: &'static str,
    pub rows: Vec<Vec<f64>>,
    /// `(key, value)` lines for the summary file.
    pub summary: Vec<(String, String)>,
    pub echo: String,
}

impl RunOutput {
    pub fn csv(&self) -> String {
        let mut out = String::new();
        writeln!(out, "# {}", self.echo).unwrap();
        writeln!(out, "{}", self.header).unwrap();
        for row in &self.rows {
            let cells: Vec<String> = row.iter().map(|&v| format_number(v)).collect();
            writeln!(out, "{}", cells.join(",")).unwrap();
        }
        out
    }
}

/// Twelve significant digits in scientific notation.
pub fn format_number(v: f64) -> String {
    format!("{v:.11e}")
}

fn curve_rows(points: &[CurvePoint]) -> Vec<Vec<f64>> {
    points
        .iter()
        .map(|p| vec![p.abscissa, p.vn_squeezed, p.vn_antisqueezed, p.shot])
        .collect()
}

fn base_summary(sc: &Scenario) -> Vec<(String, String)> {
    let s = &sc.scales;
    let mut out = vec![
        ("l_coh".to_string(), format_number(s.l_coh)),
        (
            "b".to_string(),
            s.b.map(format_number).unwrap_or_else(|| "inf".to_string()),
        ),
        ("r0".to_string(), format_number(s.r0)),
        ("w_C".to_string(), format_number(s.w_c)),
        ("k_s".to_string(), format_number(s.k_s)),
    ];
    if let Some(q) = s.q_coh {
        out.push(("q_coh".to_string(), format_number(q)));
    }
    out.push(("plane".to_string(), sc.plane.name().to_string()));
    out.push(("abscissa_unit".to_string(), sc.abscissa_unit.1.to_string()));
    out.push(("abscissa_unit_m".to_string(), format_number(sc.abscissa_unit.0)));
    out
}

/// Runs a resolved scenario.
pub fn run_scenario(sc: &Scenario) -> Result<RunOutput> {
    let mut summary = base_summary(sc);
    let (header, rows) = match sc.solver {
        Solver::Kernel => {
            let rows = sc
                .sizes
                .iter()
                .map(|&r| {
                    let l2 = sc.scales.l_coh * sc.scales.l_coh;
                    vec![r / sc.scales.l_coh, delta_2d(r, &sc.scales) * l2]
                })
                .collect();
            summary.push(("solver".to_string(), "kernel".to_string()));
            (KERNEL_CSV_HEADER, rows)
        }
        Solver::Analytic => {
            let points = analytic_curve(sc)?;
            summary.push(("solver".to_string(), "analytic".to_string()));
            summary.push(("threshold_margin".to_string(), format_number(1.0 - sc.params.a_p)));
            (CSV_HEADER, curve_rows(&points))
        }
        Solver::Dense => {
            let grid = resolve_grid(sc)?;
            let k = build_kernel_matrix(&grid, &sc.params, &sc.scales)?;
            let margin = threshold_margin(&k);
            let pair = solve_io(&k, &sc.params)?;
            let BogoliubovPair::Dense(dense) = pair else {
                unreachable!("solve_io returns a dense pair")
            };
            let points = sweep(
                &dense,
                &sc.lo,
                sc.family,
                sc.plane,
                &sc.sizes,
                sc.abscissa_unit.0,
                &sc.scales,
            )?;
            summary.push(("solver".to_string(), "dense".to_string()));
            summary.push(("grid_n".to_string(), grid.len().to_string()));
            summary.push(("grid_half_extent".to_string(), format_number(grid.half_extent())));
            let regime = match k.regime() {
                CoherenceRegime::Resolved => "resolved",
                CoherenceRegime::Local => "local",
            };
            summary.push(("coherence_regime".to_string(), regime.to_string()));
            summary.push(("threshold_margin".to_string(), format_number(margin)));
            summary.push(("condition_number".to_string(), format_number(dense.condition)));
            (CSV_HEADER, curve_rows(&points))
        }
    };
    Ok(RunOutput {
        header,
        rows,
        summary,
        echo: sc.echo.clone(),
    })
}

fn analytic_curve(sc: &Scenario) -> Result<Vec<CurvePoint>> {
    let eval = |size: f64, lo: &LocalOscillator| {
        let mask = sc.family.mask(size, Domain::Far)?;
        match mask.shape {
            DetectorShape::Radial { radius } => spectrum_planepump_circular(radius, &sc.params, &sc.scales, lo),
            _ => spectrum_planepump_far_1d(&mask, &sc.params, &sc.scales, lo),
        }
    };
    sc.sizes
        .par_iter()
        .map(|&size| {
            let sq = eval(size, &sc.lo)?;
            let anti = eval(size, &sc.lo.rotated())?;
            Ok(CurvePoint {
                abscissa: size / sc.abscissa_unit.0,
                vn_squeezed: sq.vn,
                vn_antisqueezed: anti.vn,
                shot: sq.shot,
            })
        })
        .collect()
}

/// A figure preset: named scenario files plus the choices the preset makes
/// on its own authority.
#[derive(Debug, Clone, PartialEq)]
pub struct Preset {
    pub id: u32,
    pub title: &'static str,
    pub variants: Vec<(String, ScenarioFile)>,
    pub artifact_defaults: &'static str,
}

pub const PRESET_IDS: [u32; 7] = [2, 5, 6, 7, 8, 9, 10];

const MULTI_B: [f64; 3] = [4.0, 25.0, 100.0];

fn base_preset() -> ScenarioFile {
    ScenarioFile {
        a_p: Some(0.9),
        length_unit: Some("l_coh".to_string()),
        ..ScenarioFile::default()
    }
}

fn per_b(file: ScenarioFile) -> Vec<(String, ScenarioFile)> {
    MULTI_B
        .iter()
        .map(|&b| {
            (
                format!("b{b}"),
                ScenarioFile {
                    b: Some(b),
                    plane_pump: Some(false),
                    ..file.clone()
                },
            )
        })
        .collect()
}

pub fn preset(id: u32) -> Result<Preset> {
    let base = base_preset();
    let defaults_common = "lambda_s=1.064e-6 n_s=2.12 l_c=z_C=0.01 f_lens=0.1 A_p=0.9";
    let p = match id {
        2 => Preset {
            id,
            title: "coupling kernel Delta l_coh^2 against r / l_coh",
            variants: vec![(
                "kernel".to_string(),
                ScenarioFile {
                    solver: Some("kernel".to_string()),
                    sweep_min: Some(0.0),
                    sweep_max: Some(5.0),
                    sweep_points: Some(501),
                    ..base
                },
            )],
            artifact_defaults: "lambda_s=1.064e-6 n_s=2.12 l_c=0.01",
        },
        5 => Preset {
            id,
            title: "near field, plane pump, plane LO, interval detector against half-width / l_coh",
            variants: vec![(
                "plane".to_string(),
                ScenarioFile {
                    plane: Some("near".to_string()),
                    detector: Some("interval".to_string()),
                    sweep_min: Some(0.05),
                    sweep_max: Some(5.0),
                    sweep_points: Some(100),
                    ..base
                },
            )],
            artifact_defaults: defaults_common,
        },
        6 => Preset {
            id,
            title: "near field, finite pump, plane LO, interval detector against half-width / l_coh",
            variants: per_b(ScenarioFile {
                plane: Some("near".to_string()),
                detector: Some("interval".to_string()),
                sweep_min: Some(0.1),
                sweep_max: Some(30.0),
                sweep_points: Some(60),
                ..base
            }),
            artifact_defaults: "lambda_s=1.064e-6 n_s=2.12 l_c=z_C=0.01 A_p=0.9 b in {4,25,100}",
        },
        7 => Preset {
            id,
            title: "near field, finite pump, plane LO, pixel pair of width l_coh against centre distance / l_coh",
            variants: per_b(ScenarioFile {
                plane: Some("near".to_string()),
                detector: Some("pixel_pair".to_string()),
                pixel_width: Some(1.0),
                sweep_min: Some(0.0),
                sweep_max: Some(35.0),
                sweep_points: Some(71),
                ..base
            }),
            artifact_defaults: "lambda_s=1.064e-6 n_s=2.12 l_c=z_C=0.01 A_p=0.9 b in {4,25,100}",
        },
        8 => {
            let far = ScenarioFile {
                plane: Some("far".to_string()),
                solver: Some("analytic".to_string()),
                length_unit: Some("r0".to_string()),
                sweep_max: Some(3.0),
                sweep_points: Some(121),
                ..base
            };
            Preset {
                id,
                title: "far field, plane pump: disc with Gaussian LO (v) and small pixel pair with plane LO (r) against r / r0",
                variants: vec![
                    (
                        "v".to_string(),
                        ScenarioFile {
                            detector: Some("radial".to_string()),
                            lo: Some("gaussian".to_string()),
                            lo_waist: Some(1.0),
                            sweep_min: Some(0.01),
                            ..far.clone()
                        },
                    ),
                    (
                        "r".to_string(),
                        ScenarioFile {
                            detector: Some("pixel_pair".to_string()),
                            pixel_width: Some(0.02),
                            sweep_min: Some(0.0),
                            ..far
                        },
                    ),
                ],
                artifact_defaults: "lambda_s=1.064e-6 n_s=2.12 l_c=0.01 f_lens=0.1 A_p=0.9 lo_waist=r0 pixel_width=0.02 r0",
            }
        }
        9 => Preset {
            id,
            title: "far field, finite pump, plane LO, disc detector against radius / l_cohf",
            variants: per_b(ScenarioFile {
                plane: Some("far".to_string()),
                detector: Some("radial".to_string()),
                length_unit: Some("l_cohf".to_string()),
                sweep_min: Some(0.5),
                sweep_max: Some(40.0),
                sweep_points: Some(80),
                ..base
            }),
            artifact_defaults: "lambda_s=1.064e-6 n_s=2.12 l_c=z_C=0.01 f_lens=0.1 A_p=0.9 b in {4,25,100} plane LO",
        },
        10 => Preset {
            id,
            title: "far field, finite pump, plane LO, pixel pair of width l_cohf against centre distance / l_cohf",
            variants: per_b(ScenarioFile {
                plane: Some("far".to_string()),
                detector: Some("pixel_pair".to_string()),
                length_unit: Some("l_cohf".to_string()),
                pixel_width: Some(1.0),
                sweep_min: Some(0.0),
                sweep_max: Some(40.0),
                sweep_points: Some(81),
                ..base
            }),
            artifact_defaults: "lambda_s=1.064e-6 n_s=2.12 l_c=z_C=0.01 f_lens=0.1 A_p=0.9 b in {4,25,100} plane LO",
        },
        other => {
            return Err(config_error(
                "id",
                format!("no preset {other}; available: 2, 5, 6, 7, 8, 9, 10"),
            ))
        }
    };
    Ok(p)
}

/// Files written by one run or figure.
#[derive(Debug, Clone, PartialEq)]
pub struct Written {
    pub files: Vec<PathBuf>,
}

fn io_error(path: &Path, e: std::io::Error) -> Error {
    config_error("output", format!("{}: {e}", path.display()))
}

fn write_file(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| io_error(path, e))
}

fn summary_text(sections: &[(String, Vec<(String, String)>)], preamble: &[(String, String)]) -> String {
    let mut out = String::new();
    for (k, v) in preamble {
        writeln!(out, "{k} = {v}").unwrap();
    }
    for (name, lines) in sections {
        writeln!(out, "[{name}]").unwrap();
        for (k, v) in lines {
            writeln!(out, "{k} = {v}").unwrap();
        }
    }
    out
}

/// Runs a scenario file and writes `curve.csv` and `summary.txt`.
pub fn run_file(file: &ScenarioFile, out: Option<&Path>) -> Result<Written> {
    let sc = file.resolve()?;
    let dir = out.map(Path::to_path_buf).unwrap_or_else(|| sc.output.clone());
    let result = run_scenario(&sc)?;
    std::fs::create_dir_all(&dir).map_err(|e| io_error(&dir, e))?;
    let curve = dir.join("curve.csv");
    let summary = dir.join("summary.txt");
    write_file(&curve, &result.csv())?;
    let mut lines = result.summary.clone();
    lines.push(("files".to_string(), "curve.csv".to_string()));
    write_file(&summary, &summary_text(&[("curve".to_string(), lines)], &[]))?;
    Ok(Written {
        files: vec![curve, summary],
    })
}

/// Runs a figure preset with `key=value` overrides. A single-curve figure
/// writes `curve.csv`; a figure with several curves writes
/// `curve_<tag>.csv` for each. `summary.txt` covers all of them.
pub fn run_figure(id: u32, overrides: &[String], out: Option<&Path>) -> Result<Written> {
    let preset = preset(id)?;
    let mut resolved = Vec::new();
    for (tag, file) in &preset.variants {
        let mut file = file.clone();
        for o in overrides {
            file = apply_override(&file, o)?;
        }
        resolved.push((tag.clone(), file.resolve()?));
    }
    let dir = out
        .map(Path::to_path_buf)
        .unwrap_or_else(|| PathBuf::from(format!("fig{id}")));
    let results: Vec<(String, RunOutput)> = resolved
        .iter()
        .map(|(tag, sc)| run_scenario(sc).map(|r| (tag.clone(), r)))
        .collect::<Result<_>>()?;
    std::fs::create_dir_all(&dir).map_err(|e| io_error(&dir, e))?;
    let single = results.len() == 1;
    let mut files = Vec::new();
    let mut sections = Vec::new();
    for (tag, result) in &results {
        let name = if single {
            "curve.csv".to_string()
        } else {
            format!("curve_{tag}.csv")
        };
        let path = dir.join(&name);
        write_file(&path, &result.csv())?;
        files.push(path);
        let mut lines = result.summary.clone();
        lines.push(("file".to_string(), name));
        sections.push((tag.clone(), lines));
    }
    let preamble = vec![
        ("figure".to_string(), id.to_string()),
        ("title".to_string(), preset.title.to_string()),
        ("artifact_defaults".to_string(), preset.artifact_defaults.to_string()),
        ("overrides".to_string(), overrides.join(" ")),
    ];
    let summary = dir.join("summary.txt");
    write_file(&summary, &summary_text(&sections, &preamble))?;
    files.push(summary);
    Ok(Written { files })
}
