use alloc::vec;
use alloc::vec::Vec;

use super::AdversaryError;
use crate::math::{floor, powi};

/// Largest `|grid|^T` the exhaustive search accepts.
pub const MAX_SEARCH_SPACE: f64 = 1e8;

const TIE_TOLERANCE: f64 = 1e-12;

/// A gaming strategy expressed as relative deviations from the fair rate.
#[derive(Debug, Clone, PartialEq)]
pub struct StrategyTrace {
    pub y: Vec<f64>,
    /// Upper bound `Y` on every `y(t)`.
    pub y_bound: f64,
    pub alpha: f64,
    /// Tail length `Delta > 1 / alpha + Y` left free by the robustness result.
    pub delta: usize,
}

/// Smallest integer strictly greater than `1 / alpha + Y`.
pub fn minimal_delta(alpha: f64, y_bound: f64) -> usize {
    (floor(1.0 / alpha + y_bound) + 1.0).max(1.0) as usize
}

impl StrategyTrace {
    pub fn new(y: Vec<f64>, y_bound: f64, alpha: f64) -> Result<Self, AdversaryError> {
        Self::with_delta(y, y_bound, alpha, minimal_delta(alpha, y_bound))
    }

    pub fn with_delta(y: Vec<f64>, y_bound: f64, alpha: f64, delta: usize) -> Result<Self, AdversaryError> {
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(AdversaryError::InvalidTrace("alpha must lie in (0, 1)"));
        }
        if y.iter().any(|v| !v.is_finite() || *v > y_bound || *v < -1.0) {
            return Err(AdversaryError::InvalidTrace("every y must lie in [-1, Y]"));
        }
        if delta == 0 || (delta as f64) <= 1.0 / alpha + y_bound {
            return Err(AdversaryError::InvalidTrace("delta must exceed 1/alpha + Y"));
        }
        Ok(StrategyTrace { y, y_bound, alpha, delta })
    }

    pub fn horizon(&self) -> usize {
        self.y.len()
    }
}

/// Unclamped penalty recursion `p(0) = 0`, `p(t+1) = max(0, p(t) + alpha y(t))`.
/// Returns `T + 1` values.
pub fn penalty_sequence(trace: &StrategyTrace) -> Vec<f64> {
    penalties(&trace.y, trace.alpha)
}

fn penalties(y: &[f64], alpha: f64) -> Vec<f64> {
    let mut p = Vec::with_capacity(y.len() + 1);
    p.push(0.0);
    for (t, v) in y.iter().enumerate() {
        p.push((p[t] + alpha * v).max(0.0));
    }
    p
}

/// Mean goodput relative to the fair rate,
/// `S(T) = (1/T) sum_t (1 + y(t)) (1 - p(t))`, with the unclamped penalty.
pub fn mean_goodput(trace: &StrategyTrace) -> f64 {
    goodput(&trace.y, trace.alpha)
}

fn goodput(y: &[f64], alpha: f64) -> f64 {
    if y.is_empty() {
        return 1.0;
    }
    let mut p = 0.0;
    let mut sum = 0.0;
    for v in y {
        sum += (1.0 + v) * (1.0 - p);
        p = f64::max(0.0, p + alpha * v);
    }
    sum / y.len() as f64
}

/// Every partial sum `y(0) + ... + y(t-1)` for `1 <= t < T` is non-negative.
fn admissible(y: &[f64]) -> bool {
    let mut sum = 0.0;
    for v in &y[..y.len().saturating_sub(1)] {
        sum += v;
        if sum < -TIE_TOLERANCE {
            return false;
        }
    }
    true
}

/// One enumerated strategy.
#[derive(Debug, Clone, PartialEq)]
pub struct StrategyRecord {
    pub y: Vec<f64>,
    pub goodput: f64,
    pub admissible: bool,
    pub maximiser: bool,
}

/// Result of the exhaustive search over admissible sequences.
#[derive(Debug, Clone, PartialEq)]
pub struct PrefixSearch {
    pub horizon: usize,
    pub delta: usize,
    /// `T - Delta` steps that the robustness result pins to zero (0 when
    /// `T <= Delta`, in which case nothing is constrained).
    pub constrained_prefix: usize,
    pub best_sequence: Vec<f64>,
    pub best_goodput: f64,
    pub maximisers: usize,
    pub admissible_sequences: usize,
    /// Every sequence attaining the maximum has a zero prefix.
    pub all_maximisers_zero_prefix: bool,
    /// Some zero-prefix sequence attains the maximum.
    pub zero_prefix_attains_max: bool,
    /// Goodput gained by end-game aggression over the fair baseline.
    pub tail_gain: f64,
}

impl PrefixSearch {
    pub fn constrained(&self) -> bool {
        self.constrained_prefix > 0
    }
}

fn check_grid(horizon: usize, y_bound: f64, grid: &[f64]) -> Result<(), AdversaryError> {
    if grid.is_empty() || !grid.iter().any(|g| *g == 0.0) {
        return Err(AdversaryError::InvalidTrace("grid must contain 0"));
    }
    if grid.iter().any(|g| *g > y_bound || *g < -1.0 || !g.is_finite()) {
        return Err(AdversaryError::InvalidTrace("grid values must lie in [-1, Y]"));
    }
    let size = powi(grid.len() as f64, horizon as u32);
    if size > MAX_SEARCH_SPACE {
        return Err(AdversaryError::SearchTooLarge { size });
    }
    Ok(())
}

/// Visits every sequence in `grid^T` in lexicographic grid order.
fn for_each_sequence<F: FnMut(&[f64])>(horizon: usize, grid: &[f64], mut visit: F) {
    let mut idx = vec![0usize; horizon];
    let mut y: Vec<f64> = vec![grid[0]; horizon];
    loop {
        visit(&y);
        let mut pos = horizon;
        loop {
            if pos == 0 {
                return;
            }
            pos -= 1;
            idx[pos] += 1;
            if idx[pos] < grid.len() {
                y[pos] = grid[idx[pos]];
                break;
            }
            idx[pos] = 0;
            y[pos] = grid[0];
        }
    }
}

/// Exhaustive search for the goodput-maximising admissible strategy over
/// `grid^T`.
pub fn brute_force_best_prefix(
    horizon: usize,
    delta: usize,
    alpha: f64,
    y_bound: f64,
    grid: &[f64],
) -> Result<PrefixSearch, AdversaryError> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(AdversaryError::InvalidTrace("alpha must lie in (0, 1)"));
    }
    check_grid(horizon, y_bound, grid)?;
    let constrained_prefix = horizon.saturating_sub(delta);

    let mut best = f64::NEG_INFINITY;
    let mut best_sequence = Vec::new();
    let mut admissible_sequences = 0;
    for_each_sequence(horizon, grid, |y| {
        if !admissible(y) {
            return;
        }
        admissible_sequences += 1;
        let s = goodput(y, alpha);
        if s > best + TIE_TOLERANCE {
            best = s;
            best_sequence = y.to_vec();
        }
    });

    let mut maximisers = 0;
    let mut all_zero = true;
    let mut zero_attains = false;
    for_each_sequence(horizon, grid, |y| {
        if admissible(y) && goodput(y, alpha) >= best - TIE_TOLERANCE {
            maximisers += 1;
            let zero_prefix = y[..constrained_prefix].iter().all(|v| *v == 0.0);
            all_zero &= zero_prefix;
            zero_attains |= zero_prefix;
        }
    });

    Ok(PrefixSearch {
        horizon,
        delta,
        constrained_prefix,
        best_sequence,
        best_goodput: best,
        maximisers,
        admissible_sequences,
        all_maximisers_zero_prefix: all_zero,
        zero_prefix_attains_max: zero_attains,
        tail_gain: best - 1.0,
    })
}

/// Every sequence of `grid^T` with its goodput and flags, for tabulation.
pub fn enumerate_strategies(
    horizon: usize,
    alpha: f64,
    y_bound: f64,
    grid: &[f64],
) -> Result<Vec<StrategyRecord>, AdversaryError> {
    check_grid(horizon, y_bound, grid)?;
    let mut out = Vec::new();
    for_each_sequence(horizon, grid, |y| {
        out.push(StrategyRecord {
            y: y.to_vec(),
            goodput: goodput(y, alpha),
            admissible: admissible(y),
            maximiser: false,
        });
    });
    let best = out
        .iter()
        .filter(|r| r.admissible)
        .map(|r| r.goodput)
        .fold(f64::NEG_INFINITY, f64::max);
    for r in out.iter_mut() {
        r.maximiser = r.admissible && r.goodput >= best - TIE_TOLERANCE;
    }
    Ok(out)
}
