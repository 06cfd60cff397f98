//! Attendance predictors and the charger-threshold decision rule.
//!
//! Every drone carries `k` fixed linear predictors over the last `m` station
//! attendance counts. Each tick the drone scores all of them in hindsight
//! against the broadcast history and trusts the one with the lowest error.
//! The battery thresholds short-circuit the predictor at both ends.

use crate::battery::SocValue;
use crate::rng::RngStream;

/// Linear attendance predictor with `m + 1` weights in `[-1, 1)`.
///
/// `weights[0]` multiplies the population size; `weights[i]` for `i >= 1`
/// multiplies the attendance `i` ticks ago.
#[derive(Debug, Clone, PartialEq)]
pub struct Strategy {
    weights: Vec<f64>,
}

impl Strategy {
    /// # Panics
    /// If `weights` has fewer than two entries.
    pub fn new(weights: Vec<f64>) -> Self {
        assert!(weights.len() >= 2, "a strategy needs m + 1 >= 2 weights");
        Self { weights }
    }

    pub fn random(m: usize, rng: &mut RngStream) -> Self {
        assert!(m >= 1, "window length must be at least 1");
        let weights = (0..=m).map(|_| 2.0 * rng.uniform() - 1.0).collect();
        Self { weights }
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Window length this strategy reads.
    pub fn window(&self) -> usize {
        self.weights.len() - 1
    }

    /// Raw (unclamped) attendance forecast from `recent`, most recent first.
    ///
    /// # Panics
    /// If `recent.len() != m`.
    pub fn predict(&self, recent: &[u32], population: u32) -> f64 {
        assert_eq!(
            recent.len(),
            self.window(),
            "prediction window length mismatch"
        );
        let mut total = self.weights[0] * f64::from(population);
        for (w, &x) in self.weights[1..].iter().zip(recent) {
            total += w * f64::from(x);
        }
        total
    }

    /// Sum of absolute hindsight errors over the `m` most recent predictable
    /// ticks of a `2m`-long history (most recent first).
    ///
    /// # Panics
    /// If `history.len() != 2m`.
    pub fn score(&self, history: &[u32], population: u32) -> f64 {
        let m = self.window();
        assert_eq!(history.len(), 2 * m, "scoring history must hold 2m entries");
        (1..=m)
            .map(|w| {
                (f64::from(history[w - 1]) - self.predict(&history[w..w + m], population)).abs()
            })
            .sum()
    }
}

/// Draws a fresh strategy with `m + 1` uniform weights.
pub fn random_strategy(m: usize, rng: &mut RngStream) -> Strategy {
    Strategy::random(m, rng)
}

pub fn predict_attendance(strategy: &Strategy, recent: &[u32], population: u32) -> f64 {
    strategy.predict(recent, population)
}

pub fn score_strategy(strategy: &Strategy, history: &[u32], population: u32) -> f64 {
    strategy.score(history, population)
}

#[derive(Debug, Clone, PartialEq)]
pub struct PredictorEnsemble {
    strategies: Vec<Strategy>,
    best: usize,
}

impl PredictorEnsemble {
    /// # Panics
    /// If `strategies` is empty or the strategies disagree on window length.
    pub fn new(strategies: Vec<Strategy>) -> Self {
        assert!(
            !strategies.is_empty(),
            "an ensemble needs at least one strategy"
        );
        let m = strategies[0].window();
        assert!(
            strategies.iter().all(|s| s.window() == m),
            "all strategies must share one window length"
        );
        Self {
            strategies,
            best: 0,
        }
    }

    pub fn random(k: usize, m: usize, rng: &mut RngStream) -> Self {
        Self::new((0..k).map(|_| Strategy::random(m, rng)).collect())
    }

    pub fn strategies(&self) -> &[Strategy] {
        &self.strategies
    }

    pub fn best_index(&self) -> usize {
        self.best
    }

    pub fn best(&self) -> &Strategy {
        &self.strategies[self.best]
    }

    pub(crate) fn set_best(&mut self, index: usize) {
        debug_assert!(index < self.strategies.len());
        self.best = index;
    }

    /// Re-scores every strategy and stores the lowest-error index.
    ///
    /// Ties go to the highest index among the minimal scorers.
    pub fn select_best(&mut self, history: &[u32], population: u32) -> usize {
        let mut best = 0;
        let mut best_score = f64::INFINITY;
        for (i, s) in self.strategies.iter().enumerate() {
            let score = s.score(history, population);
            if score <= best_score {
                best = i;
                best_score = score;
            }
        }
        self.best = best;
        best
    }
}

pub fn select_best_strategy(
    ensemble: &mut PredictorEnsemble,
    history: &[u32],
    population: u32,
) -> usize {
    ensemble.select_best(history, population)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Decision {
    AttemptRecharge,
    Work,
}

/// Charger-threshold rule.
///
/// Below `lw` the drone always heads to the station, above `up` it always
/// works. In between it attends only if the forecast is strictly below the
/// station's absolute capacity.
pub fn ct_decide(soc: SocValue, lw: f64, up: f64, predicted: f64, capacity: u32) -> Decision {
    if soc.0 < lw {
        Decision::AttemptRecharge
    } else if soc.0 > up {
        Decision::Work
    } else if predicted < f64::from(capacity) {
        Decision::AttemptRecharge
    } else {
        Decision::Work
    }
}
