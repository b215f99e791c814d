//! Case files: streams, conventional utilities, cost data and settings.
//!
//! Case files are TOML documents. Numeric stream fields accept a scalar
//! (fixed value), a two-element array `[lo, hi]` (closed range) or an
//! interval string such as `"(0, 20]"` or `"[31, 80]"`. An open lower bound
//! is shifted up by the case epsilon.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::CaseError;

/// Default shift applied to open lower interval bounds.
pub const DEFAULT_EPSILON: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Hot,
    Cold,
}

impl fmt::Display for Side {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Side::Hot => write!(f, "hot"),
            Side::Cold => write!(f, "cold"),
        }
    }
}

/// A stream parameter that is either fixed or free within a closed range.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum BoundedQuantity {
    Fixed { value: f64 },
    Range { lo: f64, hi: f64 },
}

impl BoundedQuantity {
    pub fn fixed(value: f64) -> Self {
        BoundedQuantity::Fixed { value }
    }

    pub fn range(lo: f64, hi: f64) -> Self {
        BoundedQuantity::Range { lo, hi }
    }

    pub fn min(&self) -> f64 {
        match *self {
            BoundedQuantity::Fixed { value } => value,
            BoundedQuantity::Range { lo, .. } => lo,
        }
    }

    pub fn max(&self) -> f64 {
        match *self {
            BoundedQuantity::Fixed { value } => value,
            BoundedQuantity::Range { hi, .. } => hi,
        }
    }

    pub fn is_range(&self) -> bool {
        matches!(self, BoundedQuantity::Range { .. })
    }

    pub fn fixed_value(&self) -> Option<f64> {
        match *self {
            BoundedQuantity::Fixed { value } => Some(value),
            BoundedQuantity::Range { .. } => None,
        }
    }

    pub fn contains(&self, x: f64, tol: f64) -> bool {
        x >= self.min() - tol && x <= self.max() + tol
    }

    fn validate(&self, field: &str) -> Result<(), CaseError> {
        match *self {
            BoundedQuantity::Fixed { value } if !value.is_finite() => {
                Err(CaseError::schema(field, "value must be finite"))
            }
            BoundedQuantity::Range { lo, hi } if !(lo.is_finite() && hi.is_finite()) => {
                Err(CaseError::schema(field, "range bounds must be finite"))
            }
            BoundedQuantity::Range { lo, hi } if lo >= hi => Err(CaseError::schema(
                field,
                format!("range requires lo < hi, got [{lo}, {hi}]"),
            )),
            _ => Ok(()),
        }
    }
}

impl fmt::Display for BoundedQuantity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BoundedQuantity::Fixed { value } => write!(f, "{value}"),
            BoundedQuantity::Range { lo, hi } => write!(f, "[{lo}, {hi}]"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StreamSpec {
    pub id: String,
    pub side: Side,
    pub t_in: BoundedQuantity,
    pub t_out: BoundedQuantity,
    pub flow_capacity: BoundedQuantity,
    pub h: f64,
    pub is_utility_stream: bool,
    pub utility_cost: f64,
}

impl StreamSpec {
    /// Lowest temperature the stream can take anywhere along its path.
    pub fn t_min(&self) -> f64 {
        match self.side {
            Side::Hot => self.t_out.min(),
            Side::Cold => self.t_in.min(),
        }
    }

    /// Highest temperature the stream can take anywhere along its path.
    pub fn t_max(&self) -> f64 {
        match self.side {
            Side::Hot => self.t_in.max(),
            Side::Cold => self.t_out.max(),
        }
    }

    /// Largest admissible inlet-to-outlet temperature change.
    pub fn max_delta_t(&self) -> f64 {
        match self.side {
            Side::Hot => self.t_in.max() - self.t_out.min(),
            Side::Cold => self.t_out.max() - self.t_in.min(),
        }
    }

    /// Smallest admissible inlet-to-outlet temperature change.
    pub fn min_delta_t(&self) -> f64 {
        match self.side {
            Side::Hot => (self.t_in.min() - self.t_out.max()).max(0.0),
            Side::Cold => (self.t_out.min() - self.t_in.max()).max(0.0),
        }
    }

    /// Largest duty the stream can deliver or absorb.
    pub fn max_duty(&self) -> f64 {
        self.flow_capacity.max() * self.max_delta_t()
    }

    pub fn has_variable_flow(&self) -> bool {
        self.flow_capacity.is_range()
    }

    /// A stream with fixed flow capacity and temperatures.
    pub fn is_fully_fixed(&self) -> bool {
        !(self.flow_capacity.is_range() || self.t_in.is_range() || self.t_out.is_range())
    }
}

/// A utility with fixed supply and return temperatures (steam, cooling water).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConventionalUtility {
    pub id: String,
    pub side: Side,
    pub t_in: f64,
    pub t_out: f64,
    pub h: f64,
    pub cost: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CostParams {
    /// Step-fixed cost per exchanger, currency/yr.
    pub c_f: f64,
    /// Variable cost coefficient, currency/(m²)^β/yr.
    pub c_v: f64,
    pub beta: f64,
    pub currency_label: String,
}

/// Optional overrides for the heat-load bounds; missing upper bounds are
/// derived from stream data per match.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct HeatLoadBounds {
    pub omega_s: f64,
    pub big_omega_s: Option<f64>,
    pub omega_cu: f64,
    pub big_omega_cu: Option<f64>,
    pub omega_hu: f64,
    pub big_omega_hu: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverSettings {
    pub adapter: String,
    pub rel_gap: f64,
    pub time_limit: f64,
    pub threads: usize,
    pub seed: u64,
}

impl Default for SolverSettings {
    fn default() -> Self {
        SolverSettings {
            adapter: "cbc".to_string(),
            rel_gap: 1e-4,
            time_limit: 3600.0,
            threads: 1,
            seed: 0,
        }
    }
}

/// Surrogate settings used when fitting the nonlinear terms of a case.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitSettings {
    /// Target percent RMSE for the stream exchanger area planes.
    pub area_rmse: f64,
    pub max_planes: usize,
    /// Target percent RMSE for utility exchanger areas.
    pub utility_rmse: f64,
    pub max_segments: usize,
    /// Grid width of the two-dimensional simplex surrogates.
    pub grid_w: usize,
    pub area_samples: usize,
    pub grid_samples: usize,
    pub line_samples: usize,
    pub lmtd_free_breakpoints: bool,
    pub balance_free_breakpoints: bool,
    pub seed: u64,
}

impl Default for FitSettings {
    fn default() -> Self {
        FitSettings {
            area_rmse: 1.0,
            max_planes: 22,
            utility_rmse: 0.5,
            max_segments: 4,
            grid_w: 4,
            area_samples: 2048,
            grid_samples: 900,
            line_samples: 32,
            lmtd_free_breakpoints: true,
            balance_free_breakpoints: false,
            seed: 7,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CaseStudy {
    pub name: String,
    pub streams: Vec<StreamSpec>,
    pub utilities: Vec<ConventionalUtility>,
    pub costs: CostParams,
    pub n_stages: usize,
    pub dt_min: f64,
    /// Upper bound for big-M temperature terms. Defaults to the full
    /// temperature span of the case.
    pub gamma: f64,
    pub heat_load_bounds: HeatLoadBounds,
    pub solver: SolverSettings,
    pub fit: FitSettings,
    pub epsilon: f64,
}

/// Index sets derived from which stream fields are ranges.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct DerivedSets {
    pub h_f: Vec<String>,
    pub h_tin: Vec<String>,
    pub h_tout: Vec<String>,
    pub c_f: Vec<String>,
    pub c_tin: Vec<String>,
    pub c_tout: Vec<String>,
}

impl CaseStudy {
    pub fn hot_streams(&self) -> impl Iterator<Item = &StreamSpec> {
        self.streams.iter().filter(|s| s.side == Side::Hot)
    }

    pub fn cold_streams(&self) -> impl Iterator<Item = &StreamSpec> {
        self.streams.iter().filter(|s| s.side == Side::Cold)
    }

    pub fn hot_utilities(&self) -> impl Iterator<Item = &ConventionalUtility> {
        self.utilities.iter().filter(|u| u.side == Side::Hot)
    }

    pub fn cold_utilities(&self) -> impl Iterator<Item = &ConventionalUtility> {
        self.utilities.iter().filter(|u| u.side == Side::Cold)
    }

    pub fn stream(&self, id: &str) -> Option<&StreamSpec> {
        self.streams.iter().find(|s| s.id == id)
    }

    pub fn utility(&self, id: &str) -> Option<&ConventionalUtility> {
        self.utilities.iter().find(|u| u.id == id)
    }

    pub fn has_utility_streams(&self) -> bool {
        self.streams.iter().any(|s| s.is_utility_stream)
    }

    pub fn derived_sets(&self) -> DerivedSets {
        let mut sets = DerivedSets::default();
        for s in &self.streams {
            let (f, tin, tout) = match s.side {
                Side::Hot => (&mut sets.h_f, &mut sets.h_tin, &mut sets.h_tout),
                Side::Cold => (&mut sets.c_f, &mut sets.c_tin, &mut sets.c_tout),
            };
            if s.flow_capacity.is_range() {
                f.push(s.id.clone());
            }
            if s.t_in.is_range() {
                tin.push(s.id.clone());
            }
            if s.t_out.is_range() {
                tout.push(s.id.clone());
            }
        }
        sets
    }

    /// Utility cost allocated to a hot stream; non-zero only for hot utility streams.
    pub fn hot_stream_cost(&self, id: &str) -> f64 {
        match self.stream(id) {
            Some(s) if s.side == Side::Hot && s.is_utility_stream => s.utility_cost,
            _ => 0.0,
        }
    }

    /// Utility cost allocated to a cold stream; non-zero only for cold utility streams.
    pub fn cold_stream_cost(&self, id: &str) -> f64 {
        match self.stream(id) {
            Some(s) if s.side == Side::Cold && s.is_utility_stream => s.utility_cost,
            _ => 0.0,
        }
    }

    /// Full temperature span over streams and utilities.
    pub fn temperature_span(&self) -> f64 {
        let hi = self
            .streams
            .iter()
            .map(|s| s.t_max())
            .chain(self.utilities.iter().map(|u| u.t_in.max(u.t_out)))
            .fold(f64::NEG_INFINITY, f64::max);
        let lo = self
            .streams
            .iter()
            .map(|s| s.t_min())
            .chain(self.utilities.iter().map(|u| u.t_in.min(u.t_out)))
            .fold(f64::INFINITY, f64::min);
        hi - lo
    }

    pub fn from_path(path: impl AsRef<Path>) -> Result<Self, CaseError> {
        load_case_file(path)
    }

    /// Re-runs the load-time checks on an in-memory case.
    pub fn validate(&self) -> Result<(), CaseError> {
        check_case(self)
    }
}

/// Reads and validates a case file from disk.
pub fn load_case_file(path: impl AsRef<Path>) -> Result<CaseStudy, CaseError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| CaseError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    load_case(&text)
}

/// Parses and validates a case document.
pub fn load_case(document: &str) -> Result<CaseStudy, CaseError> {
    let raw: RawCase = toml::from_str(document).map_err(|e| {
        let field = e
            .span()
            .map(|span| field_at(document, span.start))
            .unwrap_or_else(|| "document".to_string());
        CaseError::schema(field, e.message().to_string())
    })?;
    let case = raw.into_case()?;
    check_case(&case)?;
    Ok(case)
}

/// Best-effort name of the key nearest to a byte offset, used in error messages.
fn field_at(document: &str, offset: usize) -> String {
    let head = &document[..offset.min(document.len())];
    let line = head.rsplit('\n').next().unwrap_or("");
    let full_line = document[head.len() - line.len()..].lines().next().unwrap_or("");
    match full_line.split_once('=') {
        Some((key, _)) => key.trim().to_string(),
        None => full_line.trim().to_string(),
    }
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum RawQuantity {
    Scalar(f64),
    Pair(Vec<f64>),
    Interval(String),
}

impl RawQuantity {
    fn resolve(&self, field: &str, epsilon: f64) -> Result<BoundedQuantity, CaseError> {
        let q = match self {
            RawQuantity::Scalar(v) => BoundedQuantity::fixed(*v),
            RawQuantity::Pair(v) if v.len() == 2 => BoundedQuantity::range(v[0], v[1]),
            RawQuantity::Pair(v) => {
                return Err(CaseError::schema(
                    field,
                    format!("expected a scalar or a two-element array, got {} elements", v.len()),
                ))
            }
            RawQuantity::Interval(s) => parse_interval(s, epsilon).ok_or_else(|| {
                CaseError::schema(field, format!("cannot parse interval `{s}`"))
            })?,
        };
        q.validate(field)?;
        Ok(q)
    }
}

/// Parses `"[a, b]"`, `"(a, b]"` style interval strings. An open lower bound
/// is shifted by `epsilon`; an open upper bound is shifted down likewise.
fn parse_interval(s: &str, epsilon: f64) -> Option<BoundedQuantity> {
    let s = s.trim();
    let open_lo = s.starts_with('(');
    let open_hi = s.ends_with(')');
    if !(open_lo || s.starts_with('[')) || !(open_hi || s.ends_with(']')) {
        return None;
    }
    let inner = &s[1..s.len() - 1];
    let (a, b) = inner.split_once(',')?;
    let mut lo: f64 = a.trim().parse().ok()?;
    let mut hi: f64 = b.trim().parse().ok()?;
    if open_lo {
        lo += epsilon;
    }
    if open_hi {
        hi -= epsilon;
    }
    Some(BoundedQuantity::range(lo, hi))
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawCase {
    name: Option<String>,
    n_stages: usize,
    dt_min: f64,
    gamma: Option<f64>,
    epsilon: Option<f64>,
    costs: RawCosts,
    #[serde(default)]
    solver: Option<RawSolver>,
    #[serde(default)]
    bounds: Option<RawBounds>,
    #[serde(default)]
    fit: Option<RawFit>,
    #[serde(default, rename = "stream")]
    streams: Vec<RawStream>,
    #[serde(default, rename = "utility")]
    utilities: Vec<RawUtility>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawCosts {
    c_f: f64,
    c_v: f64,
    beta: f64,
    currency: Option<String>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSolver {
    adapter: Option<String>,
    rel_gap: Option<f64>,
    time_limit: Option<f64>,
    threads: Option<usize>,
    seed: Option<u64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawBounds {
    omega_s: Option<f64>,
    big_omega_s: Option<f64>,
    omega_cu: Option<f64>,
    big_omega_cu: Option<f64>,
    omega_hu: Option<f64>,
    big_omega_hu: Option<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawFit {
    area_rmse: Option<f64>,
    max_planes: Option<usize>,
    utility_rmse: Option<f64>,
    max_segments: Option<usize>,
    grid_w: Option<usize>,
    area_samples: Option<usize>,
    grid_samples: Option<usize>,
    line_samples: Option<usize>,
    lmtd_free_breakpoints: Option<bool>,
    balance_free_breakpoints: Option<bool>,
    seed: Option<u64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawStream {
    id: String,
    side: Side,
    t_in: RawQuantity,
    t_out: RawQuantity,
    f: RawQuantity,
    h: f64,
    #[serde(default)]
    cost: f64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawUtility {
    id: String,
    side: Side,
    t_in: f64,
    t_out: f64,
    h: f64,
    cost: f64,
}

impl RawCase {
    fn into_case(self) -> Result<CaseStudy, CaseError> {
        let epsilon = self.epsilon.unwrap_or(DEFAULT_EPSILON);
        if !(epsilon > 0.0) {
            return Err(CaseError::schema("epsilon", "must be positive"));
        }
        let mut streams = Vec::with_capacity(self.streams.len());
        for (n, s) in self.streams.into_iter().enumerate() {
            let field = |name: &str| format!("stream[{n}].{name}");
            streams.push(StreamSpec {
                t_in: s.t_in.resolve(&field("t_in"), epsilon)?,
                t_out: s.t_out.resolve(&field("t_out"), epsilon)?,
                flow_capacity: s.f.resolve(&field("f"), epsilon)?,
                h: s.h,
                is_utility_stream: s.cost > 0.0,
                utility_cost: s.cost,
                side: s.side,
                id: s.id,
            });
        }
        let utilities = self
            .utilities
            .into_iter()
            .map(|u| ConventionalUtility {
                id: u.id,
                side: u.side,
                t_in: u.t_in,
                t_out: u.t_out,
                h: u.h,
                cost: u.cost,
            })
            .collect();
        let solver = match self.solver {
            Some(s) => {
                let d = SolverSettings::default();
                SolverSettings {
                    adapter: s.adapter.unwrap_or(d.adapter),
                    rel_gap: s.rel_gap.unwrap_or(d.rel_gap),
                    time_limit: s.time_limit.unwrap_or(d.time_limit),
                    threads: s.threads.unwrap_or(d.threads),
                    seed: s.seed.unwrap_or(d.seed),
                }
            }
            None => SolverSettings::default(),
        };
        let fit = match self.fit {
            Some(f) => {
                let d = FitSettings::default();
                FitSettings {
                    area_rmse: f.area_rmse.unwrap_or(d.area_rmse),
                    max_planes: f.max_planes.unwrap_or(d.max_planes),
                    utility_rmse: f.utility_rmse.unwrap_or(d.utility_rmse),
                    max_segments: f.max_segments.unwrap_or(d.max_segments),
                    grid_w: f.grid_w.unwrap_or(d.grid_w),
                    area_samples: f.area_samples.unwrap_or(d.area_samples),
                    grid_samples: f.grid_samples.unwrap_or(d.grid_samples),
                    line_samples: f.line_samples.unwrap_or(d.line_samples),
                    lmtd_free_breakpoints: f.lmtd_free_breakpoints.unwrap_or(d.lmtd_free_breakpoints),
                    balance_free_breakpoints: f
                        .balance_free_breakpoints
                        .unwrap_or(d.balance_free_breakpoints),
                    seed: f.seed.unwrap_or(d.seed),
                }
            }
            None => FitSettings::default(),
        };
        let heat_load_bounds = match self.bounds {
            Some(b) => HeatLoadBounds {
                omega_s: b.omega_s.unwrap_or(0.0),
                big_omega_s: b.big_omega_s,
                omega_cu: b.omega_cu.unwrap_or(0.0),
                big_omega_cu: b.big_omega_cu,
                omega_hu: b.omega_hu.unwrap_or(0.0),
                big_omega_hu: b.big_omega_hu,
            },
            None => HeatLoadBounds::default(),
        };
        let mut case = CaseStudy {
            name: self.name.unwrap_or_else(|| "case".to_string()),
            streams,
            utilities,
            costs: CostParams {
                c_f: self.costs.c_f,
                c_v: self.costs.c_v,
                beta: self.costs.beta,
                currency_label: self.costs.currency.unwrap_or_else(|| "$".to_string()),
            },
            n_stages: self.n_stages,
            dt_min: self.dt_min,
            gamma: 0.0,
            heat_load_bounds,
            solver,
            fit,
            epsilon,
        };
        case.gamma = match self.gamma {
            Some(g) => g,
            None => case.temperature_span(),
        };
        Ok(case)
    }
}

fn valid_id(id: &str) -> bool {
    !id.is_empty() && id.chars().all(|c| c.is_ascii_alphanumeric())
}

fn check_case(case: &CaseStudy) -> Result<(), CaseError> {
    if case.n_stages < 1 {
        return Err(CaseError::schema("n_stages", "must be at least 1"));
    }
    if !(case.dt_min > 0.0) {
        return Err(CaseError::schema("dt_min", "must be positive"));
    }
    if !(case.gamma > 0.0) {
        return Err(CaseError::schema("gamma", "must be positive"));
    }
    let c = &case.costs;
    if !(c.c_f >= 0.0) {
        return Err(CaseError::schema("costs.c_f", "must be non-negative"));
    }
    if !(c.c_v > 0.0) {
        return Err(CaseError::schema("costs.c_v", "must be positive"));
    }
    if !(c.beta > 0.0 && c.beta <= 1.0) {
        return Err(CaseError::schema("costs.beta", "must lie in (0, 1]"));
    }
    let s = &case.solver;
    if !(s.rel_gap > 0.0 && s.rel_gap < 1.0) {
        return Err(CaseError::schema("solver.rel_gap", "must lie in (0, 1)"));
    }
    if !(s.time_limit > 0.0) {
        return Err(CaseError::schema("solver.time_limit", "must be positive"));
    }
    if !case.fit.grid_w.is_power_of_two() {
        return Err(CaseError::schema("fit.grid_w", "must be a power of two"));
    }
    if !case.fit.max_segments.is_power_of_two() {
        return Err(CaseError::schema("fit.max_segments", "must be a power of two"));
    }

    let mut seen: BTreeMap<&str, &str> = BTreeMap::new();
    let ids = case
        .streams
        .iter()
        .map(|s| (s.id.as_str(), "stream"))
        .chain(case.utilities.iter().map(|u| (u.id.as_str(), "utility")));
    for (id, kind) in ids {
        if !valid_id(id) {
            return Err(CaseError::schema(
                format!("{kind}.id"),
                format!("`{id}` must be non-empty ASCII alphanumeric"),
            ));
        }
        if let Some(prev) = seen.insert(id, kind) {
            return Err(CaseError::schema(
                format!("{kind}.id"),
                format!("`{id}` already used by a {prev}"),
            ));
        }
    }

    for s in &case.streams {
        let field = |name: &str| format!("stream `{}`.{name}", s.id);
        if !(s.h > 0.0) {
            return Err(CaseError::unit(field("h"), format!("must be positive, got {}", s.h)));
        }
        if !(s.flow_capacity.min() > 0.0) {
            return Err(CaseError::unit(
                field("f"),
                format!("must be positive, got {}", s.flow_capacity),
            ));
        }
        if !(s.utility_cost >= 0.0) {
            return Err(CaseError::schema(field("cost"), "must be non-negative"));
        }
        // every admissible inlet must lie on the correct side of every admissible outlet
        let (ordered, decreases) = match s.side {
            Side::Hot => (s.t_in.min() >= s.t_out.max(), s.t_in.max() > s.t_out.min()),
            Side::Cold => (s.t_in.max() <= s.t_out.min(), s.t_out.max() > s.t_in.min()),
        };
        if !ordered {
            return Err(CaseError::Infeasible {
                stream: s.id.clone(),
                message: format!(
                    "inlet {} and outlet {} overlap for a {} stream",
                    s.t_in, s.t_out, s.side
                ),
            });
        }
        if !decreases {
            return Err(CaseError::Infeasible {
                stream: s.id.clone(),
                message: format!(
                    "no admissible temperature change between inlet {} and outlet {}",
                    s.t_in, s.t_out
                ),
            });
        }
    }
    for u in &case.utilities {
        let field = |name: &str| format!("utility `{}`.{name}", u.id);
        if !(u.h > 0.0) {
            return Err(CaseError::unit(field("h"), format!("must be positive, got {}", u.h)));
        }
        if !(u.cost >= 0.0) {
            return Err(CaseError::schema(field("cost"), "must be non-negative"));
        }
        let ordered = match u.side {
            Side::Hot => u.t_in >= u.t_out,
            Side::Cold => u.t_in <= u.t_out,
        };
        if !ordered {
            return Err(CaseError::schema(
                field("t_out"),
                format!("{} utility cannot go from {} to {}", u.side, u.t_in, u.t_out),
            ));
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    const SMALL: &str = r#"
n_stages = 1
dt_min = 1.0

[costs]
c_f = 0.0
c_v = 300.0
beta = 0.5

[[stream]]
id = "H1"
side = "hot"
t_in = 150.0
t_out = 60.0
f = 2.0
h = 0.4

[[stream]]
id = "CUS"
side = "cold"
t_in = 20.0
t_out = [21.0, 60.0]
f = "(0, 20]"
h = 0.4
cost = 10.0
"#;

    #[test]
    fn parses_scalars_ranges_and_intervals() {
        let case = load_case(SMALL).unwrap();
        let cus = case.stream("CUS").unwrap();
        assert!(cus.is_utility_stream);
        assert_eq!(cus.t_out, BoundedQuantity::range(21.0, 60.0));
        assert_eq!(cus.flow_capacity, BoundedQuantity::range(DEFAULT_EPSILON, 20.0));
        let sets = case.derived_sets();
        assert_eq!(sets.c_f, vec!["CUS".to_string()]);
        assert_eq!(sets.c_tout, vec!["CUS".to_string()]);
        assert!(sets.h_f.is_empty());
        assert_eq!(case.gamma, 150.0 - 20.0);
    }

    #[test]
    fn equal_fixed_temperatures_are_infeasible() {
        let doc = SMALL.replace("t_out = 60.0", "t_out = 150.0");
        match load_case(&doc) {
            Err(CaseError::Infeasible { stream, .. }) => assert_eq!(stream, "H1"),
            other => panic!("expected infeasibility, got {other:?}"),
        }
    }

    #[test]
    fn overlapping_ranges_are_rejected() {
        let doc = SMALL.replace("t_out = [21.0, 60.0]", "t_out = [19.0, 60.0]");
        assert!(matches!(load_case(&doc), Err(CaseError::Infeasible { .. })));
    }

    #[test]
    fn negative_coefficients_are_unit_errors() {
        let doc = SMALL.replacen("h = 0.4", "h = -0.4", 1);
        assert!(matches!(load_case(&doc), Err(CaseError::Unit { .. })));
        let doc = SMALL.replacen("f = 2.0", "f = -2.0", 1);
        assert!(matches!(load_case(&doc), Err(CaseError::Unit { .. })));
    }

    #[test]
    fn schema_errors_name_the_field() {
        let doc = SMALL.replacen("h = 0.4", "h = \"x\"", 1);
        match load_case(&doc) {
            Err(CaseError::Schema { field, .. }) => assert_eq!(field, "h"),
            other => panic!("expected schema error, got {other:?}"),
        }
        let doc = SMALL.replace("n_stages = 1\n", "");
        assert!(matches!(load_case(&doc), Err(CaseError::Schema { .. })));
        let doc = SMALL.replace("t_out = [21.0, 60.0]", "t_out = [60.0, 21.0]");
        assert!(matches!(load_case(&doc), Err(CaseError::Schema { .. })));
    }

    #[test]
    fn cost_vector_follows_stream_role() {
        let case = load_case(SMALL).unwrap();
        assert_eq!(case.cold_stream_cost("CUS"), 10.0);
        assert_eq!(case.hot_stream_cost("H1"), 0.0);
        assert_eq!(case.cold_stream_cost("H1"), 0.0);
    }
}
