use crate::error::Result;
use crate::game::oracle::STATE_PROXIMITY;
use crate::game::MarkovGame;
use crate::neural::QNetwork;

use super::Probe;

/// Probe bookkeeping shared by both learners: state ids, Q snapshots and the
/// convergence window.
pub(super) struct Tracker<'a, S> {
    probes: &'a [Probe<S>],
    features: Vec<Vec<f64>>,
    previous: Option<Vec<f64>>,
    calm: usize,
    threshold: f64,
    window: usize,
}

impl<'a, S> Tracker<'a, S> {
    pub fn new<G: MarkovGame<State = S>>(
        game: &G,
        probes: &'a [Probe<S>],
        threshold: f64,
        window: usize,
    ) -> Self {
        Self {
            probes,
            features: probes.iter().map(|p| game.features(&p.state)).collect(),
            previous: None,
            calm: 0,
            threshold,
            window,
        }
    }

    pub fn named_features(&self) -> Vec<(String, Vec<f64>)> {
        self.probes
            .iter()
            .zip(&self.features)
            .map(|(p, x)| (p.name.clone(), x.clone()))
            .collect()
    }

    pub fn state_id<G: MarkovGame<State = S>>(&self, game: &G, s: &S) -> String {
        self.probes
            .iter()
            .find(|p| game.distance(&p.state, s) <= STATE_PROXIMITY)
            .map(|p| p.name.clone())
            .unwrap_or_default()
    }

    /// Probe rows of every network, concatenated probe by probe.
    pub fn snapshot(&self, nets: &[&QNetwork]) -> Result<Vec<f64>> {
        let mut out = Vec::new();
        for x in &self.features {
            for net in nets {
                out.extend(net.forward(x)?);
            }
        }
        Ok(out)
    }

    /// Records a snapshot; true once the probe Q-values have moved less than
    /// the threshold for a full window of training steps.
    pub fn settle(&mut self, snapshot: &[f64], trained: bool) -> bool {
        if let Some(prev) = &self.previous {
            let delta = prev
                .iter()
                .zip(snapshot)
                .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
            if trained && delta < self.threshold {
                self.calm += 1;
            } else {
                self.calm = 0;
            }
        }
        self.previous = Some(snapshot.to_vec());
        !self.probes.is_empty() && self.calm >= self.window
    }
}
