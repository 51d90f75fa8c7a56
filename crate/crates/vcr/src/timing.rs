//! Wall-clock accounting for the five audit components.

use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Component {
    ModelSetup,
    ConceptEmbedding,
    ConceptTraining,
    DirectionalDerivatives,
    /// Forward passes that collect hook activations. Counted under "other".
    Activations,
}

/// Seconds per component. `other` covers everything not attributed to a
/// named component, activation collection included, so the five fields sum
/// to the measured total.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct TimingBreakdown {
    pub model_setup: f64,
    pub concept_embedding: f64,
    pub concept_training: f64,
    pub directional_derivatives: f64,
    pub other: f64,
    /// Part of `other` spent collecting activations.
    pub activations: f64,
}

impl TimingBreakdown {
    pub fn total(&self) -> f64 {
        self.model_setup + self.concept_embedding + self.concept_training + self.directional_derivatives + self.other
    }

    /// Directional derivatives plus activation collection: the per-image
    /// forward and backward work.
    pub fn per_image_work(&self) -> f64 {
        self.directional_derivatives + self.activations
    }

    /// Componentwise sum, used when runs are split into parts.
    pub fn add(&mut self, o: &TimingBreakdown) {
        self.model_setup += o.model_setup;
        self.concept_embedding += o.concept_embedding;
        self.concept_training += o.concept_training;
        self.directional_derivatives += o.directional_derivatives;
        self.other += o.other;
        self.activations += o.activations;
    }
}

#[derive(Debug, Default)]
pub struct ComponentTimer {
    named: [Duration; 5],
}

impl ComponentTimer {
    pub fn time<T>(&mut self, c: Component, f: impl FnOnce() -> T) -> T {
        let t0 = Instant::now();
        let out = f();
        self.named[c as usize] += t0.elapsed();
        out
    }

    pub fn elapsed(&self, c: Component) -> Duration {
        self.named[c as usize]
    }
}

/// Runs `f` with a timer and splits its wall time into components.
pub fn timing_breakdown<T>(f: impl FnOnce(&mut ComponentTimer) -> T) -> (T, TimingBreakdown) {
    let mut timer = ComponentTimer::default();
    let t0 = Instant::now();
    let out = f(&mut timer);
    let wall = t0.elapsed().as_secs_f64();
    let s = |c| timer.elapsed(c).as_secs_f64();
    let named = s(Component::ModelSetup) + s(Component::ConceptEmbedding) + s(Component::ConceptTraining) + s(Component::DirectionalDerivatives);
    let b = TimingBreakdown {
        model_setup: s(Component::ModelSetup),
        concept_embedding: s(Component::ConceptEmbedding),
        concept_training: s(Component::ConceptTraining),
        directional_derivatives: s(Component::DirectionalDerivatives),
        other: (wall - named).max(0.0),
        activations: s(Component::Activations),
    };
    (out, b)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn no_op_components_are_near_zero() {
        let ((), b) = timing_breakdown(|t| {
            t.time(Component::ModelSetup, || ());
            t.time(Component::DirectionalDerivatives, || ());
        });
        assert!(b.total() < 0.01);
        let sum = b.model_setup + b.concept_embedding + b.concept_training + b.directional_derivatives + b.other;
        assert_eq!(b.total(), sum);
        assert!([b.model_setup, b.concept_embedding, b.concept_training, b.directional_derivatives, b.other].iter().all(|&x| x >= 0.0));
    }

    #[test]
    fn sleeping_component_is_attributed() {
        let ((), b) = timing_breakdown(|t| t.time(Component::ConceptTraining, || std::thread::sleep(Duration::from_millis(20))));
        assert!(b.concept_training >= 0.02);
        assert!(b.other < 0.01);
    }
}
