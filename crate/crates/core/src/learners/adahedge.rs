use crate::design::SimplexWeights;

/// AdaHedge over a finite set of experts.
///
/// Weights are `λ_{t+1} ∝ exp(-η_{t+1} L_t)` in terms of the cumulative
/// losses `L_t`, with `η_{t+1} = ln K / Δ_t` and `Δ_t` the accumulated
/// mixability gap. While `Δ_t = 0` the learning rate is infinite and the
/// weights are uniform over the leaders (the argmin of `L_t`).
#[derive(Debug, Clone)]
pub struct AdaHedge {
    cum_loss: Vec<f64>,
    weights: Vec<f64>,
    cum_gap: f64,
    lr: f64,
}

impl AdaHedge {
    pub fn new(k: usize) -> Self {
        assert!(k > 0, "AdaHedge needs at least one expert");
        Self {
            cum_loss: vec![0.0; k],
            weights: vec![1.0 / k as f64; k],
            cum_gap: 0.0,
            lr: f64::INFINITY,
        }
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn simplex_weights(&self) -> SimplexWeights {
        SimplexWeights::normalized(self.weights.clone()).expect("AdaHedge weights are a distribution")
    }

    /// Accumulated mixability gap `Δ`.
    pub fn cum_gap(&self) -> f64 {
        self.cum_gap
    }

    /// Current learning rate `η`; `f64::INFINITY` before any gap is observed.
    pub fn learning_rate(&self) -> f64 {
        self.lr
    }

    pub fn cum_loss(&self) -> &[f64] {
        &self.cum_loss
    }

    /// Hedge loss and mixed loss of `loss` under the current weights.
    fn hedge_and_mixed(&self, loss: &[f64]) -> (f64, f64) {
        let h: f64 = self.weights.iter().zip(loss).map(|(w, l)| w * l).sum();
        let support_min = self
            .weights
            .iter()
            .zip(loss)
            .filter(|(w, _)| **w > 0.0)
            .map(|(_, l)| *l)
            .fold(f64::INFINITY, f64::min);
        let m = if self.lr.is_infinite() {
            support_min
        } else {
            let s: f64 = self
                .weights
                .iter()
                .zip(loss)
                .filter(|(w, _)| **w > 0.0)
                .map(|(w, l)| w * (-self.lr * (l - support_min)).exp())
                .sum();
            support_min - s.ln() / self.lr
        };
        (h, m)
    }

    /// Feeds one loss vector and returns the mixability gap `δ ≥ 0` it produced.
    pub fn update(&mut self, loss: &[f64]) -> f64 {
        assert_eq!(loss.len(), self.len(), "one loss per expert");
        assert!(loss.iter().all(|l| l.is_finite()), "losses must be finite");
        let (h, m) = self.hedge_and_mixed(loss);
        let range = loss.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
            - loss.iter().cloned().fold(f64::INFINITY, f64::min);
        let delta = (h - m).clamp(0.0, range.max(0.0));
        self.cum_gap += delta;
        for (c, l) in self.cum_loss.iter_mut().zip(loss) {
            *c += l;
        }
        self.lr = if self.cum_gap > 0.0 {
            (self.len() as f64).ln() / self.cum_gap
        } else {
            f64::INFINITY
        };
        self.reweight();
        delta
    }

    /// The learner after one more loss vector; `self` is left untouched.
    pub fn with_loss(&self, loss: &[f64]) -> Self {
        let mut next = self.clone();
        next.update(loss);
        next
    }

    fn reweight(&mut self) {
        let min = self.cum_loss.iter().cloned().fold(f64::INFINITY, f64::min);
        if self.lr.is_infinite() {
            for (w, c) in self.weights.iter_mut().zip(&self.cum_loss) {
                *w = if *c == min { 1.0 } else { 0.0 };
            }
        } else {
            for (w, c) in self.weights.iter_mut().zip(&self.cum_loss) {
                *w = (-self.lr * (c - min)).exp();
            }
        }
        let total: f64 = self.weights.iter().sum();
        self.weights.iter_mut().for_each(|w| *w /= total);
    }
}
