//! Physically reachable ranges of duties and approach temperatures for a
//! hot/cold pair and for utility placements. Used both to size big-M values
//! and to restrict the sampling domain of the surrogate fits.

use serde::{Deserialize, Serialize};

use super::case::{ConventionalUtility, Side, StreamSpec};
use crate::thermo;

/// Duty and temperature envelope of a hot/cold stream pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairEnvelope {
    pub hot: String,
    pub cold: String,
    pub u: f64,
    pub dt_min: f64,
    /// Largest temperature difference the pair can ever see.
    pub dt_hi: f64,
    /// Largest duty a single exchanger of the pair can carry.
    pub omega: f64,
    pub hot_flow_max: f64,
    pub cold_flow_max: f64,
}

impl PairEnvelope {
    pub fn new(hot: &StreamSpec, cold: &StreamSpec, dt_min: f64) -> Self {
        debug_assert!(hot.side == Side::Hot && cold.side == Side::Cold);
        let fh = hot.flow_capacity.max();
        let fc = cold.flow_capacity.max();
        let t_hot = hot.t_in.max();
        let t_cold = cold.t_in.min();
        let dt_hi = t_hot - t_cold;
        let hot_side = fh * (t_hot - hot.t_out.min().max(t_cold + dt_min));
        let cold_side = fc * (cold.t_out.max().min(t_hot - dt_min) - t_cold);
        let driving = (dt_hi - dt_min) * fh.min(fc);
        let omega = hot_side.min(cold_side).min(driving).max(0.0);
        PairEnvelope {
            hot: hot.id.clone(),
            cold: cold.id.clone(),
            u: thermo::overall_u(hot.h, cold.h),
            dt_min,
            dt_hi,
            omega,
            hot_flow_max: fh,
            cold_flow_max: fc,
        }
    }

    /// True when no exchanger between the two streams can satisfy the
    /// minimum approach temperature.
    pub fn is_infeasible(&self) -> bool {
        self.dt_hi <= self.dt_min || self.omega <= 0.0
    }

    /// Highest LMTD reachable while transferring duty `q`: the hot stream
    /// enters at its hottest and the cold stream at its coldest admissible
    /// temperature.
    pub fn lmtd_max(&self, q: f64) -> f64 {
        let a = self.dt_hi - q / self.cold_flow_max;
        let b = self.dt_hi - q / self.hot_flow_max;
        thermo::lmtd(a, b)
    }

    /// Range of LMTD values reachable at duty `q`, or `None` if `q` cannot be
    /// transferred at all.
    pub fn lmtd_range(&self, q: f64) -> Option<(f64, f64)> {
        let hi = self.lmtd_max(q);
        if hi.is_finite() && hi >= self.dt_min {
            Some((self.dt_min, hi))
        } else {
            None
        }
    }
}

/// Duty range of a conventional utility exchanger placed at the end of a
/// process stream with fixed flow capacity and outlet temperature.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UtilityEnvelope {
    pub utility: String,
    pub stream: String,
    pub side: Side,
    pub u: f64,
    pub flow: f64,
    pub stream_out: f64,
    pub utility_in: f64,
    pub utility_out: f64,
    /// Smallest duty that respects the minimum approach at the far end.
    pub q_lo: f64,
    pub omega: f64,
}

impl UtilityEnvelope {
    /// Returns `None` when the placement can never satisfy the minimum
    /// approach temperature or the stream has no fixed flow/outlet.
    pub fn new(stream: &StreamSpec, utility: &ConventionalUtility, dt_min: f64) -> Option<Self> {
        let flow = stream.flow_capacity.fixed_value()?;
        let stream_out = stream.t_out.fixed_value()?;
        let duty = flow * stream.max_delta_t();
        let (q_lo, fits) = match (stream.side, utility.side) {
            // cooler on a hot stream
            (Side::Hot, Side::Cold) => (
                flow * (utility.t_out + dt_min - stream_out),
                stream_out - utility.t_in >= dt_min,
            ),
            // heater on a cold stream
            (Side::Cold, Side::Hot) => (
                flow * (stream_out + dt_min - utility.t_out),
                utility.t_in - stream_out >= dt_min,
            ),
            _ => return None,
        };
        let q_lo = q_lo.max(0.0);
        if !fits || q_lo >= duty {
            return None;
        }
        Some(UtilityEnvelope {
            utility: utility.id.clone(),
            stream: stream.id.clone(),
            side: stream.side,
            u: thermo::overall_u(stream.h, utility.h),
            flow,
            stream_out,
            utility_in: utility.t_in,
            utility_out: utility.t_out,
            q_lo,
            omega: duty,
        })
    }

    /// Exact reduced area at duty `q`.
    pub fn reduced_area(&self, q: f64, beta: f64) -> f64 {
        match self.side {
            Side::Hot => thermo::cooler_reduced_area(
                q,
                self.stream_out,
                self.flow,
                self.utility_in,
                self.utility_out,
                self.u,
                beta,
            ),
            Side::Cold => thermo::heater_reduced_area(
                q,
                self.stream_out,
                self.flow,
                self.utility_in,
                self.utility_out,
                self.u,
                beta,
            ),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::superstructure::case::BoundedQuantity;

    fn stream(id: &str, side: Side, t_in: f64, t_out: f64, f: f64) -> StreamSpec {
        StreamSpec {
            id: id.into(),
            side,
            t_in: BoundedQuantity::fixed(t_in),
            t_out: BoundedQuantity::fixed(t_out),
            flow_capacity: BoundedQuantity::fixed(f),
            h: 1.0,
            is_utility_stream: false,
            utility_cost: 0.0,
        }
    }

    #[test]
    fn pair_duty_limited_by_hot_side() {
        let h = stream("H", Side::Hot, 270.0, 160.0, 18.0);
        let c = stream("C", Side::Cold, 50.0, 210.0, 20.0);
        let env = PairEnvelope::new(&h, &c, 10.0);
        assert_eq!(env.omega, 18.0 * 110.0);
        assert_eq!(env.dt_hi, 220.0);
        assert!((env.lmtd_max(0.0) - 220.0).abs() < 1e-12);
        assert!(env.lmtd_max(1980.0) < 220.0);
    }

    #[test]
    fn pairs_without_driving_force_are_infeasible() {
        let h = stream("H", Side::Hot, 100.0, 60.0, 1.0);
        let c = stream("C", Side::Cold, 99.5, 150.0, 1.0);
        assert!(PairEnvelope::new(&h, &c, 1.0).is_infeasible());
    }

    #[test]
    fn cooler_needs_cold_enough_water() {
        let h = stream("H", Side::Hot, 90.0, 60.0, 2.0);
        let cw = ConventionalUtility {
            id: "CW".into(),
            side: Side::Cold,
            t_in: 38.0,
            t_out: 82.0,
            h: 1.0,
            cost: 1.0,
        };
        let env = UtilityEnvelope::new(&h, &cw, 1.0).unwrap();
        assert!((env.q_lo - 2.0 * 23.0).abs() < 1e-12);
        let warm = ConventionalUtility { t_in: 59.5, ..cw };
        assert!(UtilityEnvelope::new(&h, &warm, 1.0).is_none());
    }
}
