use alloc::vec::Vec;

use super::{attempt_probability, bisect_increasing, effective_failure, AnalyticsError, MacParams};
use crate::math::powi;

pub const BISECTION_MAX_ITERATIONS: u32 = 200;
/// Relaxation weight of the multi-class successive substitution.
pub const DAMPING: f64 = 0.5;

const F_UPPER: f64 = 1.0 - 1e-12;
const HETEROGENEOUS_MAX_ITERATIONS: u32 = 100_000;
const RESIDUAL_TOLERANCE: f64 = 1e-12;

/// Self-consistent per-station attempt probability `x` and collision
/// probability `f` (failure from other stations only).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FixedPoint {
    pub attempt: f64,
    pub collision: f64,
    pub residual: f64,
}

/// One class of identical saturated stations.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClassSpec {
    pub count: u32,
    pub params: MacParams,
    pub p_nack: f64,
}

impl ClassSpec {
    pub fn new(count: u32, params: MacParams, p_nack: f64) -> Self {
        ClassSpec { count, params, p_nack }
    }
}

/// Solves `x = g(f)`, `f = 1 - (1 - x)^(n-1)` for `n` identical stations by
/// bisection on `f`.
pub fn homogeneous_fixed_point(n: u32, params: &MacParams) -> Result<FixedPoint, AnalyticsError> {
    if n == 0 {
        return Err(AnalyticsError::Domain { what: "station count", value: 0.0 });
    }
    params.validate()?;
    let others = n - 1;
    let collision_of = |x: f64| 1.0 - powi(1.0 - x, others);
    // Increasing in f: f grows while the induced collision probability shrinks.
    let h = |f: f64| f - collision_of(attempt_probability(f, params).unwrap_or(0.0));

    let f = bisect_increasing(h, 0.0, F_UPPER, 1e-16);
    let x = attempt_probability(f, params)?;
    let residual = (f - collision_of(x)).abs();
    if residual > 1e-10 {
        return Err(AnalyticsError::NoConvergence { iterations: BISECTION_MAX_ITERATIONS, residual });
    }
    Ok(FixedPoint { attempt: x, collision: f, residual })
}

/// Solves the multi-class system
/// `x_i = g_i(1 - (1 - f_i)(1 - P_i))`, `f_i = 1 - prod_{j != i} (1 - x_j)`
/// by damped successive substitution. Returns one [`FixedPoint`] per class.
pub fn heterogeneous_fixed_point(classes: &[ClassSpec]) -> Result<Vec<FixedPoint>, AnalyticsError> {
    if classes.is_empty() {
        return Err(AnalyticsError::Domain { what: "class count", value: 0.0 });
    }
    for class in classes {
        if class.count == 0 {
            return Err(AnalyticsError::Domain { what: "class station count", value: 0.0 });
        }
        class.params.validate()?;
        super::check_probability("ACK suppression probability", class.p_nack)?;
    }

    let mut x: Vec<f64> = classes
        .iter()
        .map(|c| attempt_probability(0.0, &c.params))
        .collect::<Result<_, _>>()?;
    let mut next = x.clone();
    let mut residual = f64::INFINITY;

    for _ in 0..HETEROGENEOUS_MAX_ITERATIONS {
        residual = 0.0;
        for (i, class) in classes.iter().enumerate() {
            let target = class_map(classes, &x, i, class)?;
            residual = f64::max(residual, (target - x[i]).abs());
            next[i] = (1.0 - DAMPING) * x[i] + DAMPING * target;
        }
        if residual < RESIDUAL_TOLERANCE {
            break;
        }
        core::mem::swap(&mut x, &mut next);
    }
    if residual >= RESIDUAL_TOLERANCE * 1e3 {
        return Err(AnalyticsError::NoConvergence { iterations: HETEROGENEOUS_MAX_ITERATIONS, residual });
    }

    Ok(classes
        .iter()
        .enumerate()
        .map(|(i, class)| {
            let collision = collision_for(classes, &x, i);
            let r = (class_map(classes, &x, i, class).unwrap_or(f64::NAN) - x[i]).abs();
            FixedPoint { attempt: x[i], collision, residual: r }
        })
        .collect())
}

fn collision_for(classes: &[ClassSpec], x: &[f64], i: usize) -> f64 {
    let idle: f64 = classes
        .iter()
        .zip(x)
        .enumerate()
        .map(|(j, (c, &xj))| {
            let others = if i == j { c.count - 1 } else { c.count };
            powi(1.0 - xj, others)
        })
        .product();
    1.0 - idle
}

fn class_map(classes: &[ClassSpec], x: &[f64], i: usize, class: &ClassSpec) -> Result<f64, AnalyticsError> {
    let f = collision_for(classes, x, i);
    let eff = effective_failure(f, class.p_nack)?;
    if eff >= 1.0 {
        return super::backoff::full_failure_limit(&class.params);
    }
    attempt_probability(eff, &class.params)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analytics::attempt_probability;

    // Independent scalar solver: bisection on f - (1 - (1 - g(f))^(n-1)).
    fn oracle(n: u32, p: &MacParams) -> (f64, f64) {
        let (mut lo, mut hi) = (0.0f64, 1.0 - 1e-12);
        for _ in 0..300 {
            let mid = 0.5 * (lo + hi);
            let g = attempt_probability(mid, p).unwrap();
            let h = mid - (1.0 - (1.0 - g).powi(n as i32 - 1));
            if h > 0.0 {
                hi = mid
            } else {
                lo = mid
            }
        }
        let f = 0.5 * (lo + hi);
        (attempt_probability(f, p).unwrap(), f)
    }

    #[test]
    fn single_station_has_no_contenders() {
        let fp = homogeneous_fixed_point(1, &MacParams::compliant()).unwrap();
        assert!(fp.collision.abs() < 1e-12);
        assert!((fp.attempt - 2.0 / 33.0).abs() < 1e-12);
    }

    #[test]
    fn matches_oracle_and_golden_values() {
        // 40-digit fixed points of the compliant model.
        let golden = [
            (2, 0.057_044_320_889_177_663_962, 0.057_044_320_889_177_663_962),
            (3, 0.053_721_844_968_408_530_060, 0.104_557_653_310_007_339_223),
            (5, 0.047_847_316_546_677_881_839, 0.178_085_990_808_585_376_925),
            (8, 0.040_909_156_975_571_038_583, 0.253_519_938_989_502_542_763),
            (10, 0.037_325_319_469_704_298_302, 0.289_905_832_311_579_961_388),
        ];
        let p = MacParams::compliant();
        for (n, x, f) in golden {
            let fp = homogeneous_fixed_point(n, &p).unwrap();
            let (ox, of) = oracle(n, &p);
            assert!((fp.attempt - x).abs() < 1e-12, "n={n}");
            assert!((fp.collision - f).abs() < 1e-12, "n={n}");
            assert!((fp.attempt - ox).abs() < 1e-12 && (fp.collision - of).abs() < 1e-12);
            assert!(fp.residual < 1e-10);
        }
    }

    #[test]
    fn two_stations_see_each_others_attempt_rate() {
        let fp = homogeneous_fixed_point(2, &MacParams::compliant()).unwrap();
        assert!((fp.attempt - fp.collision).abs() < 1e-12);
    }

    #[test]
    fn more_contenders_more_collisions() {
        let p = MacParams::compliant();
        let two = homogeneous_fixed_point(2, &p).unwrap();
        let ten = homogeneous_fixed_point(10, &p).unwrap();
        assert!(ten.collision > two.collision);
        assert!(ten.attempt < two.attempt);
    }

    #[test]
    fn zero_stations_is_an_error() {
        assert!(homogeneous_fixed_point(0, &MacParams::compliant()).is_err());
        assert!(heterogeneous_fixed_point(&[]).is_err());
    }

    #[test]
    fn single_class_reduces_to_homogeneous() {
        let p = MacParams::compliant();
        for n in 1..=10 {
            let hom = homogeneous_fixed_point(n, &p).unwrap();
            let het = heterogeneous_fixed_point(&[ClassSpec::new(n, p, 0.0)]).unwrap();
            assert!((hom.attempt - het[0].attempt).abs() < 1e-8);
            assert!((hom.collision - het[0].collision).abs() < 1e-8);
            assert!(het[0].residual < 1e-9);
        }
    }

    #[test]
    fn halved_cw_min_nearly_doubles_attempts() {
        let fair = MacParams::compliant();
        let selfish = MacParams { cw_min: 16, max_backoff_stage: 6, ..fair };
        let fp = heterogeneous_fixed_point(&[ClassSpec::new(1, selfish, 0.0), ClassSpec::new(2, fair, 0.0)])
            .unwrap();
        let ratio = fp[0].attempt / fp[1].attempt;
        // 40-digit damped-iteration value of the two-class model.
        assert!((ratio - 2.104_368_993_866_051_7).abs() < 1e-8, "{ratio}");
        assert!(fp.iter().all(|c| c.residual < 1e-9));
    }

    #[test]
    fn suppression_can_equalise_attempt_rates() {
        let fair = MacParams::compliant();
        let selfish = MacParams { cw_min: 16, max_backoff_stage: 6, ..fair };
        let ratio = |p: f64| {
            let fp = heterogeneous_fixed_point(&[ClassSpec::new(1, selfish, p), ClassSpec::new(2, fair, 0.0)])
                .unwrap();
            fp[0].attempt / fp[1].attempt - 1.0
        };
        let (mut lo, mut hi) = (0.0, 1.0);
        for _ in 0..80 {
            let mid = 0.5 * (lo + hi);
            if ratio(mid) > 0.0 {
                lo = mid
            } else {
                hi = mid
            }
        }
        let p_star = 0.5 * (lo + hi);
        assert!(p_star > 0.0 && p_star < 1.0);
        assert!(ratio(p_star).abs() < 1e-6);
    }
}
