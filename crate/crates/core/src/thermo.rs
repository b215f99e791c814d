//! Heat transfer relations shared by the fitting, lowering and validation code.
//!
//! Temperatures are in °C, temperature differences in K, duties in kW and
//! heat transfer coefficients in kW/(m²K).

/// Approach temperatures closer than this are treated as equal.
pub const LMTD_SINGULAR_TOL: f64 = 1e-9;

/// Overall heat transfer coefficient of a match from the two film coefficients.
pub fn overall_u(h_a: f64, h_b: f64) -> f64 {
    1.0 / (1.0 / h_a + 1.0 / h_b)
}

/// Logarithmic mean temperature difference of two approach temperatures.
///
/// Returns the continuous extension `a` when the approach temperatures are
/// (numerically) equal and `NaN` when either is not strictly positive.
pub fn lmtd(a: f64, b: f64) -> f64 {
    if !(a > 0.0 && b > 0.0) {
        return f64::NAN;
    }
    if (a - b).abs() < LMTD_SINGULAR_TOL {
        return 0.5 * (a + b);
    }
    (a - b) / (a / b).ln()
}

/// Reduced area `(q / (U·LMTD))^β`; zero duty gives zero area.
pub fn reduced_area(q: f64, u: f64, lmtd: f64, beta: f64) -> f64 {
    if q <= 0.0 {
        return 0.0;
    }
    (q / (u * lmtd)).powf(beta)
}

/// Plain area `q / (U·LMTD)` in m².
pub fn area(q: f64, u: f64, lmtd: f64) -> f64 {
    if q <= 0.0 {
        return 0.0;
    }
    q / (u * lmtd)
}

/// Approach temperatures of a cooler on a hot stream that leaves at
/// `stream_out` with flow capacity `flow`, carrying duty `q`.
///
/// The stream enters the cooler at `stream_out + q/flow`; the first value is
/// the approach at the stream inlet side, the second at the outlet side.
pub fn cooler_approaches(q: f64, stream_out: f64, flow: f64, cu_in: f64, cu_out: f64) -> (f64, f64) {
    (stream_out + q / flow - cu_out, stream_out - cu_in)
}

/// Approach temperatures of a heater on a cold stream leaving at `stream_out`.
///
/// The first value is the approach at the utility inlet (stream outlet), the
/// second at the utility outlet (stream inlet `stream_out - q/flow`).
pub fn heater_approaches(q: f64, stream_out: f64, flow: f64, hu_in: f64, hu_out: f64) -> (f64, f64) {
    (hu_in - stream_out, hu_out - (stream_out - q / flow))
}

/// Reduced area of a cooler as a function of its duty.
pub fn cooler_reduced_area(
    q: f64,
    stream_out: f64,
    flow: f64,
    cu_in: f64,
    cu_out: f64,
    u: f64,
    beta: f64,
) -> f64 {
    if q <= 0.0 {
        return 0.0;
    }
    let (a, b) = cooler_approaches(q, stream_out, flow, cu_in, cu_out);
    reduced_area(q, u, lmtd(a, b), beta)
}

/// Reduced area of a heater as a function of its duty.
pub fn heater_reduced_area(
    q: f64,
    stream_out: f64,
    flow: f64,
    hu_in: f64,
    hu_out: f64,
    u: f64,
    beta: f64,
) -> f64 {
    if q <= 0.0 {
        return 0.0;
    }
    let (a, b) = heater_approaches(q, stream_out, flow, hu_in, hu_out);
    reduced_area(q, u, lmtd(a, b), beta)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn lmtd_limit_and_symmetry() {
        assert_relative_eq!(lmtd(20.0, 20.0), 20.0);
        assert_relative_eq!(lmtd(20.0, 20.0 + 1e-12), 20.0, epsilon = 1e-9);
        assert_relative_eq!(lmtd(10.0, 40.0), lmtd(40.0, 10.0));
        assert_relative_eq!(lmtd(10.0, 40.0), 30.0 / 4.0f64.ln());
        assert!(lmtd(-1.0, 4.0).is_nan());
        assert!(lmtd(0.0, 4.0).is_nan());
    }

    #[test]
    fn lmtd_is_continuous_through_the_singularity() {
        let near = lmtd(50.0, 50.0 + 1e-6);
        assert!((near - 50.0).abs() < 1e-5);
    }

    #[test]
    fn reduced_area_formula() {
        let a = reduced_area(500.0, 0.5, 50.0, 0.8);
        assert_relative_eq!(a, 20f64.powf(0.8), max_relative = 1e-14);
        assert_eq!(reduced_area(0.0, 0.5, 50.0, 0.8), 0.0);
    }

    #[test]
    fn cooler_area_matches_closed_form() {
        // q (ln(Tout + q/F - tcu_out) - ln(Tout - tcu_in)) / (U (q/F - tcu_out + tcu_in))
        let (q, t_out, f, ci, co, u, beta): (f64, f64, f64, f64, f64, f64, f64) = (990.0, 160.0, 18.0, 10.0, 30.0, 0.5, 0.8);
        let closed = (q * ((t_out + q / f - co).ln() - (t_out - ci).ln()) / (u * (q / f - co + ci))).powf(beta);
        assert_relative_eq!(cooler_reduced_area(q, t_out, f, ci, co, u, beta), closed, max_relative = 1e-12);
    }

    #[test]
    fn heater_area_handles_condensing_steam() {
        // 280 -> 280 steam heating a stream to 235 °C
        let a = heater_reduced_area(20.0, 235.0, 2.0, 280.0, 280.0, 0.2, 0.5);
        let direct = (20.0 / (0.2 * lmtd(45.0, 55.0))).sqrt();
        assert_relative_eq!(a, direct, max_relative = 1e-12);
    }
}
