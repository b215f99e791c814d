//! Symbolic constraint system of the stage-wise superstructure with utility
//! streams, before any piecewise-linear lowering.
//!
//! Temperatures are indexed at positions `k = 1..=N+2` (hot end first) and
//! matches at intervals `k = 1..=N+1`. Interval 1 is reserved for hot
//! utility streams and interval N+1 for cold utility streams; conventional
//! heaters sit in interval 1 of a cold stream and conventional coolers in
//! interval N+1 of a hot stream.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use super::case::{CaseStudy, Side, StreamSpec};
use super::envelope::{PairEnvelope, UtilityEnvelope};

pub type Terms = Vec<(String, f64)>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum VarKind {
    Continuous,
    Binary,
}

/// What a variable stands for in the network model.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum VarRole {
    Duty,
    Existence,
    Temperature,
    Approach,
    Flow,
    Lmtd,
    ReducedArea,
    CoolerDuty,
    CoolerExistence,
    CoolerApproach,
    CoolerArea,
    HeaterDuty,
    HeaterExistence,
    HeaterApproach,
    HeaterArea,
    TemperatureChange,
    /// Auxiliary variables introduced by the lowering (node weights, selectors).
    Auxiliary,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VarSpec {
    pub name: String,
    pub kind: VarKind,
    pub lb: f64,
    pub ub: f64,
    pub role: VarRole,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Sense {
    Le,
    Eq,
    Ge,
}

impl fmt::Display for Sense {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Sense::Le => "<=",
            Sense::Eq => "=",
            Sense::Ge => ">=",
        })
    }
}

/// Group a constraint belongs to; used for presence checks and reporting.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Family {
    UtilityLoadLink,
    UtilityDisable,
    StageBlock,
    MatchPrune,
    StreamBalance,
    StageBalance,
    FlowFix,
    FlowBound,
    InletFix,
    OutletFix,
    InletBound,
    OutletBound,
    Monotonic,
    LoadBound,
    ApproachBound,
    UtilityApproachBound,
    DifferenceDef,
    LmtdDef,
    AreaDef,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum AreaRelation {
    /// Reduced area of a stream/stream exchanger as a function of (LMTD, q).
    Stream {
        lmtd: String,
        q: String,
        ared: String,
        gate: String,
        fit: String,
    },
    /// Reduced area of a conventional utility exchanger as a function of q.
    Utility {
        q: String,
        ared: String,
        gate: String,
        fit: String,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Relation {
    Linear { terms: Terms, sense: Sense, rhs: f64 },
    /// `Σ lhs = flow · delta`
    Bilinear {
        lhs: Terms,
        flow: String,
        delta: String,
        fit: String,
    },
    /// `lmtd = LMTD(dt1, dt2)`
    Lmtd {
        dt1: String,
        dt2: String,
        lmtd: String,
        fit: String,
    },
    Area(AreaRelation),
}

impl Relation {
    /// Tag of a nonlinear relation, `None` for linear rows.
    pub fn tag(&self) -> Option<&'static str> {
        match self {
            Relation::Linear { .. } => None,
            Relation::Bilinear { .. } => Some("NONLINEAR-BILINEAR"),
            Relation::Lmtd { .. } => Some("NONLINEAR-LMTD"),
            Relation::Area(_) => Some("NONLINEAR-AREA"),
        }
    }

    pub fn fit_key(&self) -> Option<&str> {
        match self {
            Relation::Linear { .. } => None,
            Relation::Bilinear { fit, .. } | Relation::Lmtd { fit, .. } => Some(fit),
            Relation::Area(AreaRelation::Stream { fit, .. })
            | Relation::Area(AreaRelation::Utility { fit, .. }) => Some(fit),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SymbolicConstraint {
    pub family: Family,
    pub label: String,
    pub relation: Relation,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SlotStatus {
    Allowed,
    /// Stage reserved for utility streams.
    Blocked,
    /// Can never satisfy the minimum approach temperature.
    Pruned,
    /// Conventional utility replaced by a utility stream.
    Disabled,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatchSlot {
    pub hot: String,
    pub cold: String,
    pub stage: usize,
    pub status: SlotStatus,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UtilitySlot {
    pub utility: String,
    pub stream: String,
    /// Side of the utility: `Cold` for coolers, `Hot` for heaters.
    pub side: Side,
    pub status: SlotStatus,
    pub envelope: Option<UtilityEnvelope>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FitKind {
    StreamArea { hot: String, cold: String },
    UtilityArea { utility: String, stream: String },
    Lmtd { hot: String, cold: String },
    StageBalance { stream: String },
    StreamBalance { stream: String },
}

/// A surrogate the lowering will need, with the domain it must cover.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitRequest {
    pub key: String,
    pub kind: FitKind,
    pub domain: Vec<[f64; 2]>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SymbolicModel {
    pub n_stages: usize,
    pub variables: Vec<VarSpec>,
    pub constraints: Vec<SymbolicConstraint>,
    pub objective: Terms,
    pub matches: Vec<MatchSlot>,
    pub utility_slots: Vec<UtilitySlot>,
    pub pairs: Vec<PairEnvelope>,
    pub fit_requests: Vec<FitRequest>,
}

impl SymbolicModel {
    pub fn variable(&self, name: &str) -> Option<&VarSpec> {
        self.variables.iter().find(|v| v.name == name)
    }

    pub fn nonlinear(&self) -> impl Iterator<Item = &SymbolicConstraint> {
        self.constraints.iter().filter(|c| c.relation.tag().is_some())
    }

    pub fn count_tag(&self, tag: &str) -> usize {
        self.nonlinear().filter(|c| c.relation.tag() == Some(tag)).count()
    }

    pub fn family(&self, family: Family) -> impl Iterator<Item = &SymbolicConstraint> {
        self.constraints.iter().filter(move |c| c.family == family)
    }

    pub fn match_slot(&self, hot: &str, cold: &str, stage: usize) -> Option<&MatchSlot> {
        self.matches
            .iter()
            .find(|m| m.hot == hot && m.cold == cold && m.stage == stage)
    }

    pub fn allowed_matches(&self) -> impl Iterator<Item = &MatchSlot> {
        self.matches.iter().filter(|m| m.status == SlotStatus::Allowed)
    }

    pub fn pair(&self, hot: &str, cold: &str) -> Option<&PairEnvelope> {
        self.pairs.iter().find(|p| p.hot == hot && p.cold == cold)
    }

    pub fn fit_request(&self, key: &str) -> Option<&FitRequest> {
        self.fit_requests.iter().find(|r| r.key == key)
    }
}

pub fn q_name(hot: &str, cold: &str, k: usize) -> String {
    format!("q[{hot},{cold},{k}]")
}

pub fn z_name(hot: &str, cold: &str, k: usize) -> String {
    format!("z[{hot},{cold},{k}]")
}

pub fn t_name(stream: &str, k: usize) -> String {
    format!("T[{stream},{k}]")
}

pub fn dt_name(hot: &str, cold: &str, k: usize) -> String {
    format!("dt[{hot},{cold},{k}]")
}

pub fn f_name(stream: &str) -> String {
    format!("F[{stream}]")
}

pub fn lmtd_name(hot: &str, cold: &str, k: usize) -> String {
    format!("lmtd[{hot},{cold},{k}]")
}

pub fn ared_name(hot: &str, cold: &str, k: usize) -> String {
    format!("ared[{hot},{cold},{k}]")
}

/// Names of the duty, existence, approach and area variables of a
/// conventional utility placement, in that order.
pub fn utility_names(side: Side, utility: &str, stream: &str) -> [String; 5] {
    let p = match side {
        Side::Cold => "cu",
        Side::Hot => "hu",
    };
    [
        format!("q{p}[{utility},{stream}]"),
        format!("z{p}[{utility},{stream}]"),
        format!("dt{p}1[{utility},{stream}]"),
        format!("dt{p}2[{utility},{stream}]"),
        format!("ared{p}[{utility},{stream}]"),
    ]
}

pub fn d_name(stream: &str, k: usize) -> String {
    format!("d[{stream},{k}]")
}

pub fn dtot_name(stream: &str) -> String {
    format!("dtot[{stream}]")
}

pub fn lmtd_fit_key(hot: &str, cold: &str) -> String {
    format!("lmtd:{hot}:{cold}")
}

pub fn area_fit_key(hot: &str, cold: &str) -> String {
    format!("area:{hot}:{cold}")
}

pub fn utility_area_fit_key(utility: &str, stream: &str) -> String {
    format!("uarea:{utility}:{stream}")
}

pub fn stage_balance_fit_key(stream: &str) -> String {
    format!("bal:{stream}:stage")
}

pub fn stream_balance_fit_key(stream: &str) -> String {
    format!("bal:{stream}:stream")
}

/// Whether a hot/cold pair may exchange heat in interval `k` given the
/// reservation of the end intervals for utility streams.
pub fn stage_allows(hot: &StreamSpec, cold: &StreamSpec, k: usize, n_stages: usize) -> bool {
    let hus = hot.is_utility_stream;
    let cus = cold.is_utility_stream;
    if hus && cus {
        // two utilities exchanging heat with each other only burn money
        return false;
    }
    if k == 1 {
        return hus;
    }
    if k == n_stages + 1 {
        return cus;
    }
    true
}

struct Builder<'a> {
    case: &'a CaseStudy,
    variables: Vec<VarSpec>,
    index: BTreeMap<String, usize>,
    constraints: Vec<SymbolicConstraint>,
}

impl<'a> Builder<'a> {
    fn var(&mut self, name: String, kind: VarKind, lb: f64, ub: f64, role: VarRole) -> String {
        debug_assert!(!self.index.contains_key(&name), "duplicate variable {name}");
        self.index.insert(name.clone(), self.variables.len());
        self.variables.push(VarSpec {
            name: name.clone(),
            kind,
            lb,
            ub,
            role,
        });
        name
    }

    fn push(&mut self, family: Family, label: String, relation: Relation) {
        self.constraints.push(SymbolicConstraint {
            family,
            label,
            relation,
        });
    }

    fn linear(&mut self, family: Family, label: String, terms: Terms, sense: Sense, rhs: f64) {
        let terms = terms.into_iter().filter(|(_, c)| *c != 0.0).collect();
        self.push(family, label, Relation::Linear { terms, sense, rhs });
    }

    /// Big-M for an approach row `dt <= a - b + M (1 - z)`: the smallest
    /// value that keeps the row slack for every admissible `a - b`.
    fn gamma_for(&self, lowest_difference: f64) -> f64 {
        (self.case.dt_min - lowest_difference).max(0.0).min(self.case.gamma)
    }
}

/// Generates the full symbolic relation set of a case.
pub fn build_symbolic_model(case: &CaseStudy) -> SymbolicModel {
    let n = case.n_stages;
    let intervals = n + 1;
    let positions = n + 2;
    let mut b = Builder {
        case,
        variables: Vec::new(),
        index: BTreeMap::new(),
        constraints: Vec::new(),
    };
    let hots: Vec<&StreamSpec> = case.hot_streams().collect();
    let colds: Vec<&StreamSpec> = case.cold_streams().collect();

    // flow capacities and stage temperatures
    for s in &case.streams {
        let f = b.var(
            f_name(&s.id),
            VarKind::Continuous,
            s.flow_capacity.min(),
            s.flow_capacity.max(),
            VarRole::Flow,
        );
        match s.flow_capacity.fixed_value() {
            Some(v) => b.linear(
                Family::FlowFix,
                format!("flow_fix[{}]", s.id),
                vec![(f, 1.0)],
                Sense::Eq,
                v,
            ),
            None => {
                b.linear(
                    Family::FlowBound,
                    format!("flow_lo[{}]", s.id),
                    vec![(f.clone(), 1.0)],
                    Sense::Ge,
                    s.flow_capacity.min(),
                );
                b.linear(
                    Family::FlowBound,
                    format!("flow_hi[{}]", s.id),
                    vec![(f, 1.0)],
                    Sense::Le,
                    s.flow_capacity.max(),
                );
            }
        }
        for k in 1..=positions {
            b.var(
                t_name(&s.id, k),
                VarKind::Continuous,
                s.t_min(),
                s.t_max(),
                VarRole::Temperature,
            );
        }
        let (inlet, outlet) = match s.side {
            Side::Hot => (1, positions),
            Side::Cold => (positions, 1),
        };
        for (pos, q, fix, bound, what) in [
            (inlet, s.t_in, Family::InletFix, Family::InletBound, "inlet"),
            (outlet, s.t_out, Family::OutletFix, Family::OutletBound, "outlet"),
        ] {
            let t = t_name(&s.id, pos);
            match q.fixed_value() {
                Some(v) => b.linear(fix, format!("{what}_fix[{}]", s.id), vec![(t, 1.0)], Sense::Eq, v),
                None => {
                    b.linear(
                        bound,
                        format!("{what}_lo[{}]", s.id),
                        vec![(t.clone(), 1.0)],
                        Sense::Ge,
                        q.min(),
                    );
                    b.linear(bound, format!("{what}_hi[{}]", s.id), vec![(t, 1.0)], Sense::Le, q.max());
                }
            }
        }
        for k in 1..=intervals {
            b.linear(
                Family::Monotonic,
                format!("mono[{},{k}]", s.id),
                vec![(t_name(&s.id, k), 1.0), (t_name(&s.id, k + 1), -1.0)],
                Sense::Ge,
                0.0,
            );
        }
    }

    // stream/stream matches
    let bounds = &case.heat_load_bounds;
    let mut matches = Vec::new();
    let mut pairs = Vec::new();
    let mut fit_requests = Vec::new();
    for h in &hots {
        for c in &colds {
            let env = PairEnvelope::new(h, c, case.dt_min);
            let pruned = env.is_infeasible();
            let omega = bounds.big_omega_s.map_or(env.omega, |o| o.min(env.omega));
            let mut any_allowed = false;
            let mut allowed_stages = Vec::new();
            for k in 1..=intervals {
                let status = if pruned {
                    SlotStatus::Pruned
                } else if stage_allows(h, c, k, n) {
                    SlotStatus::Allowed
                } else {
                    SlotStatus::Blocked
                };
                let q = b.var(
                    q_name(&h.id, &c.id, k),
                    VarKind::Continuous,
                    0.0,
                    if status == SlotStatus::Allowed { omega } else { 0.0 },
                    VarRole::Duty,
                );
                let z = b.var(z_name(&h.id, &c.id, k), VarKind::Binary, 0.0, 1.0, VarRole::Existence);
                match status {
                    SlotStatus::Blocked => b.linear(
                        Family::StageBlock,
                        format!("block[{},{},{k}]", h.id, c.id),
                        vec![(z.clone(), 1.0)],
                        Sense::Eq,
                        0.0,
                    ),
                    SlotStatus::Pruned => b.linear(
                        Family::MatchPrune,
                        format!("prune[{},{},{k}]", h.id, c.id),
                        vec![(z.clone(), 1.0)],
                        Sense::Eq,
                        0.0,
                    ),
                    _ => {
                        any_allowed = true;
                        allowed_stages.push(k);
                    }
                }
                let bound_omega = if status == SlotStatus::Allowed { omega } else { 0.0 };
                b.linear(
                    Family::LoadBound,
                    format!("load_hi[{},{},{k}]", h.id, c.id),
                    vec![(q.clone(), 1.0), (z.clone(), -bound_omega)],
                    Sense::Le,
                    0.0,
                );
                if bounds.omega_s > 0.0 && status == SlotStatus::Allowed {
                    b.linear(
                        Family::LoadBound,
                        format!("load_lo[{},{},{k}]", h.id, c.id),
                        vec![(q, 1.0), (z, -bounds.omega_s)],
                        Sense::Ge,
                        0.0,
                    );
                }
                matches.push(MatchSlot {
                    hot: h.id.clone(),
                    cold: c.id.clone(),
                    stage: k,
                    status,
                });
            }
            if any_allowed {
                let mut positions_used: Vec<usize> =
                    allowed_stages.iter().flat_map(|&k| [k, k + 1]).collect();
                positions_used.sort_unstable();
                positions_used.dedup();
                for &k in &positions_used {
                    b.var(
                        dt_name(&h.id, &c.id, k),
                        VarKind::Continuous,
                        case.dt_min,
                        env.dt_hi,
                        VarRole::Approach,
                    );
                }
                let gamma = b.gamma_for(h.t_min() - c.t_max());
                let lmtd_key = lmtd_fit_key(&h.id, &c.id);
                let area_key = area_fit_key(&h.id, &c.id);
                for &k in &allowed_stages {
                    let z = z_name(&h.id, &c.id, k);
                    for pos in [k, k + 1] {
                        b.linear(
                            Family::ApproachBound,
                            format!("approach[{},{},{k},{pos}]", h.id, c.id),
                            vec![
                                (dt_name(&h.id, &c.id, pos), 1.0),
                                (t_name(&h.id, pos), -1.0),
                                (t_name(&c.id, pos), 1.0),
                                (z.clone(), gamma),
                            ],
                            Sense::Le,
                            gamma,
                        );
                    }
                    let lmtd = b.var(
                        lmtd_name(&h.id, &c.id, k),
                        VarKind::Continuous,
                        case.dt_min,
                        env.dt_hi,
                        VarRole::Lmtd,
                    );
                    let ared = b.var(
                        ared_name(&h.id, &c.id, k),
                        VarKind::Continuous,
                        0.0,
                        f64::INFINITY,
                        VarRole::ReducedArea,
                    );
                    b.push(
                        Family::LmtdDef,
                        format!("lmtd[{},{},{k}]", h.id, c.id),
                        Relation::Lmtd {
                            dt1: dt_name(&h.id, &c.id, k),
                            dt2: dt_name(&h.id, &c.id, k + 1),
                            lmtd: lmtd.clone(),
                            fit: lmtd_key.clone(),
                        },
                    );
                    b.push(
                        Family::AreaDef,
                        format!("area[{},{},{k}]", h.id, c.id),
                        Relation::Area(AreaRelation::Stream {
                            lmtd,
                            q: q_name(&h.id, &c.id, k),
                            ared,
                            gate: z,
                            fit: area_key.clone(),
                        }),
                    );
                }
                fit_requests.push(FitRequest {
                    key: lmtd_key,
                    kind: FitKind::Lmtd {
                        hot: h.id.clone(),
                        cold: c.id.clone(),
                    },
                    domain: vec![[case.dt_min, env.dt_hi], [case.dt_min, env.dt_hi]],
                });
                fit_requests.push(FitRequest {
                    key: area_key,
                    kind: FitKind::StreamArea {
                        hot: h.id.clone(),
                        cold: c.id.clone(),
                    },
                    domain: vec![[case.dt_min, env.dt_hi], [0.0, omega]],
                });
            }
            pairs.push(env);
        }
    }

    // conventional utility placements
    let mut utility_slots = Vec::new();
    for u in &case.utilities {
        let targets: Vec<&StreamSpec> = match u.side {
            Side::Cold => hots.clone(),
            Side::Hot => colds.clone(),
        };
        for s in targets {
            let [qn, zn, dt1n, dt2n, aredn] = utility_names(u.side, &u.id, &s.id);
            let envelope = UtilityEnvelope::new(s, u, case.dt_min);
            let status = if s.is_utility_stream {
                SlotStatus::Disabled
            } else if envelope.is_none() {
                SlotStatus::Pruned
            } else {
                SlotStatus::Allowed
            };
            let (duty_role, z_role, dt_role, area_role) = match u.side {
                Side::Cold => (
                    VarRole::CoolerDuty,
                    VarRole::CoolerExistence,
                    VarRole::CoolerApproach,
                    VarRole::CoolerArea,
                ),
                Side::Hot => (
                    VarRole::HeaterDuty,
                    VarRole::HeaterExistence,
                    VarRole::HeaterApproach,
                    VarRole::HeaterArea,
                ),
            };
            let (omega_lo, omega_hi) = match u.side {
                Side::Cold => (bounds.omega_cu, bounds.big_omega_cu),
                Side::Hot => (bounds.omega_hu, bounds.big_omega_hu),
            };
            let omega = match (&envelope, status) {
                (Some(env), SlotStatus::Allowed) => omega_hi.map_or(env.omega, |o| o.min(env.omega)),
                _ => 0.0,
            };
            b.var(qn.clone(), VarKind::Continuous, 0.0, omega, duty_role);
            b.var(zn.clone(), VarKind::Binary, 0.0, 1.0, z_role);
            match status {
                SlotStatus::Disabled => b.linear(
                    Family::UtilityDisable,
                    format!("disable[{},{}]", u.id, s.id),
                    vec![(zn.clone(), 1.0)],
                    Sense::Eq,
                    0.0,
                ),
                SlotStatus::Pruned => b.linear(
                    Family::MatchPrune,
                    format!("prune[{},{}]", u.id, s.id),
                    vec![(zn.clone(), 1.0)],
                    Sense::Eq,
                    0.0,
                ),
                _ => {}
            }
            b.linear(
                Family::LoadBound,
                format!("load_hi[{},{}]", u.id, s.id),
                vec![(qn.clone(), 1.0), (zn.clone(), -omega)],
                Sense::Le,
                0.0,
            );
            if status == SlotStatus::Allowed {
                if omega_lo > 0.0 {
                    b.linear(
                        Family::LoadBound,
                        format!("load_lo[{},{}]", u.id, s.id),
                        vec![(qn.clone(), 1.0), (zn.clone(), -omega_lo)],
                        Sense::Ge,
                        0.0,
                    );
                }
                let hi = match u.side {
                    Side::Cold => s.t_max() - u.t_in.min(u.t_out),
                    Side::Hot => u.t_in.max(u.t_out) - s.t_min(),
                }
                .max(case.dt_min);
                b.var(dt1n.clone(), VarKind::Continuous, case.dt_min, hi, dt_role);
                b.var(dt2n.clone(), VarKind::Continuous, case.dt_min, hi, dt_role);
                // (approach var, stream position, utility temperature) per exchanger end
                let ends = match u.side {
                    Side::Cold => [(dt1n.clone(), n + 1, u.t_out), (dt2n.clone(), n + 2, u.t_in)],
                    Side::Hot => [(dt1n.clone(), 2, u.t_out), (dt2n.clone(), 1, u.t_in)],
                };
                for (i, (dt, pos, t_u)) in ends.into_iter().enumerate() {
                    // cooler: dt <= T - t_u + M (1 - z); heater: dt <= t_u - T + M (1 - z)
                    let (t_coef, lowest, rhs_t) = match u.side {
                        Side::Cold => (-1.0, s.t_min() - t_u, -t_u),
                        Side::Hot => (1.0, t_u - s.t_max(), t_u),
                    };
                    let gamma = b.gamma_for(lowest);
                    b.linear(
                        Family::UtilityApproachBound,
                        format!("uapproach[{},{},{}]", u.id, s.id, i + 1),
                        vec![(dt, 1.0), (t_name(&s.id, pos), t_coef), (zn.clone(), gamma)],
                        Sense::Le,
                        gamma + rhs_t,
                    );
                }
                let key = utility_area_fit_key(&u.id, &s.id);
                b.var(aredn.clone(), VarKind::Continuous, 0.0, f64::INFINITY, area_role);
                b.push(
                    Family::AreaDef,
                    format!("uarea[{},{}]", u.id, s.id),
                    Relation::Area(AreaRelation::Utility {
                        q: qn.clone(),
                        ared: aredn,
                        gate: zn.clone(),
                        fit: key.clone(),
                    }),
                );
                fit_requests.push(FitRequest {
                    key,
                    kind: FitKind::UtilityArea {
                        utility: u.id.clone(),
                        stream: s.id.clone(),
                    },
                    domain: vec![[0.0, omega]],
                });
            }
            utility_slots.push(UtilitySlot {
                utility: u.id.clone(),
                stream: s.id.clone(),
                side: u.side,
                status,
                envelope,
            });
        }
    }

    // energy balances
    for s in &case.streams {
        let f = f_name(&s.id);
        let variable_flow = s.has_variable_flow();
        let interval_terms = |k: usize| -> Terms {
            let mut terms: Terms = Vec::new();
            match s.side {
                Side::Hot => {
                    for c in &colds {
                        terms.push((q_name(&s.id, &c.id, k), 1.0));
                    }
                }
                Side::Cold => {
                    for h in &hots {
                        terms.push((q_name(&h.id, &s.id, k), 1.0));
                    }
                }
            }
            terms
        };
        let utility_terms: Terms = utility_slots
            .iter()
            .filter(|slot| slot.stream == s.id)
            .map(|slot| (utility_names(slot.side, &slot.utility, &slot.stream)[0].clone(), 1.0))
            .collect();
        let utility_interval = match s.side {
            Side::Hot => intervals,
            Side::Cold => 1,
        };
        let links_utilities = !(s.flow_capacity.is_range() && s.t_out.is_range());
        let mut active_intervals = 0;
        for k in 1..=intervals {
            let mut terms = interval_terms(k);
            let with_utilities = k == utility_interval;
            if with_utilities {
                terms.extend(utility_terms.iter().cloned());
            }
            let family = if with_utilities && links_utilities {
                Family::UtilityLoadLink
            } else {
                Family::StageBalance
            };
            let label = format!("balance[{},{k}]", s.id);
            let (tk, tk1) = (t_name(&s.id, k), t_name(&s.id, k + 1));
            if !variable_flow {
                let fv = s.flow_capacity.min();
                terms.push((tk, -fv));
                terms.push((tk1, fv));
                b.linear(family, label, terms, Sense::Eq, 0.0);
                continue;
            }
            let active = terms.iter().any(|(name, _)| {
                b.variables[b.index[name]].ub > 0.0
            });
            if !active {
                b.linear(family, label, vec![(tk, 1.0), (tk1, -1.0)], Sense::Eq, 0.0);
                continue;
            }
            active_intervals += 1;
            let d = b.var(
                d_name(&s.id, k),
                VarKind::Continuous,
                0.0,
                s.max_delta_t(),
                VarRole::TemperatureChange,
            );
            b.linear(
                Family::DifferenceDef,
                format!("diff[{},{k}]", s.id),
                vec![(d.clone(), 1.0), (tk, -1.0), (tk1, 1.0)],
                Sense::Eq,
                0.0,
            );
            b.push(
                family,
                label,
                Relation::Bilinear {
                    lhs: terms,
                    flow: f.clone(),
                    delta: d,
                    fit: stage_balance_fit_key(&s.id),
                },
            );
        }
        if active_intervals > 0 {
            fit_requests.push(FitRequest {
                key: stage_balance_fit_key(&s.id),
                kind: FitKind::StageBalance { stream: s.id.clone() },
                domain: vec![
                    [s.flow_capacity.min(), s.flow_capacity.max()],
                    [0.0, s.max_delta_t()],
                ],
            });
        }

        let mut all_terms: Terms = (1..=intervals).flat_map(interval_terms).collect();
        all_terms.extend(utility_terms.iter().cloned());
        let (t_first, t_last) = (t_name(&s.id, 1), t_name(&s.id, positions));
        let temperatures_fixed = !(s.t_in.is_range() || s.t_out.is_range());
        let label = format!("stream_balance[{}]", s.id);
        if !variable_flow || temperatures_fixed {
            let mut terms = all_terms;
            match s.flow_capacity.fixed_value() {
                Some(fv) => {
                    terms.push((t_first, -fv));
                    terms.push((t_last, fv));
                }
                None => {
                    // both end temperatures fixed: the balance is linear in F
                    let delta = s.max_delta_t();
                    terms.push((f.clone(), -delta));
                }
            }
            b.linear(Family::StreamBalance, label, terms, Sense::Eq, 0.0);
        } else {
            let dtot = b.var(
                dtot_name(&s.id),
                VarKind::Continuous,
                s.min_delta_t(),
                s.max_delta_t(),
                VarRole::TemperatureChange,
            );
            b.linear(
                Family::DifferenceDef,
                format!("diff_total[{}]", s.id),
                vec![(dtot.clone(), 1.0), (t_first, -1.0), (t_last, 1.0)],
                Sense::Eq,
                0.0,
            );
            b.push(
                Family::StreamBalance,
                label,
                Relation::Bilinear {
                    lhs: all_terms,
                    flow: f,
                    delta: dtot,
                    fit: stream_balance_fit_key(&s.id),
                },
            );
            fit_requests.push(FitRequest {
                key: stream_balance_fit_key(&s.id),
                kind: FitKind::StreamBalance { stream: s.id.clone() },
                domain: vec![
                    [s.flow_capacity.min(), s.flow_capacity.max()],
                    [s.min_delta_t(), s.max_delta_t()],
                ],
            });
        }
    }

    // objective
    let mut objective: Terms = Vec::new();
    for m in &matches {
        let cost = case.hot_stream_cost(&m.hot) + case.cold_stream_cost(&m.cold);
        if cost != 0.0 {
            objective.push((q_name(&m.hot, &m.cold, m.stage), cost));
        }
    }
    for slot in &utility_slots {
        let u = case.utility(&slot.utility).expect("slot refers to a known utility");
        let [qn, _, _, _, _] = utility_names(slot.side, &slot.utility, &slot.stream);
        if u.cost != 0.0 {
            objective.push((qn, u.cost));
        }
    }
    if case.costs.c_f != 0.0 {
        for v in &b.variables {
            if v.kind == VarKind::Binary {
                objective.push((v.name.clone(), case.costs.c_f));
            }
        }
    }
    for v in &b.variables {
        if matches!(
            v.role,
            VarRole::ReducedArea | VarRole::CoolerArea | VarRole::HeaterArea
        ) {
            objective.push((v.name.clone(), case.costs.c_v));
        }
    }

    SymbolicModel {
        n_stages: n,
        variables: b.variables,
        constraints: b.constraints,
        objective,
        matches,
        utility_slots,
        pairs,
        fit_requests,
    }
}
