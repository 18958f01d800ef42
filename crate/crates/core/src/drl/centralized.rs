use crate::error::Result;
use crate::game::{bit_string, joint_actions, JointAction, MarkovGame};
use crate::neural::{sync_target, QNetwork, TrainBatch};
use crate::rng::substream;

use super::track::Tracker;
use super::{
    epsilon_greedy, extract_ne, max_min, DivergenceGuard, EpisodeLog, Learned, LearnedNets,
    LearnerConfig, LogRow, PolicyTable, Probe, ReplayBuffer, TransitionRecord,
};

#[derive(Debug, Clone)]
pub struct CentralizedRun {
    pub online: QNetwork,
    pub target: QNetwork,
    pub log: EpisodeLog,
    /// Greedy pair at each probe after training.
    pub policy: PolicyTable,
}

impl LearnedNets for CentralizedRun {
    fn learned(&self) -> Learned<'_> {
        Learned::Centralized(&self.online)
    }
}

pub(super) fn joint_columns(probes: &[String], n: usize) -> Vec<String> {
    let mut cols = Vec::new();
    for p in probes {
        for i in 0..joint_actions(n) {
            let a = JointAction::decode(i, n).expect("index in range");
            cols.push(format!(
                "q_{p}_a{}_b{}",
                bit_string(&a.alpha),
                bit_string(&a.beta)
            ));
        }
    }
    cols
}

/// Trains one joint network with minimax TD targets.
pub fn run_centralized<G: MarkovGame>(
    game: &G,
    probes: &[Probe<G::State>],
    cfg: &LearnerConfig,
) -> Result<CentralizedRun> {
    cfg.validate()?;
    let n = game.devices();
    let k = joint_actions(n);
    let sizes = cfg.layer_sizes(game.feature_len(), k);
    let mut online = QNetwork::new(&sizes, &mut substream(cfg.seed, 0))?;
    let mut target = sync_target(&online);
    let mut behavior = substream(cfg.seed, 1);
    let mut sampler = substream(cfg.seed, 2);
    let mut buffer = ReplayBuffer::new(cfg.replay_capacity);

    let mut tracker = Tracker::new(
        game,
        probes,
        cfg.convergence_threshold,
        cfg.convergence_window,
    );
    let names: Vec<String> = probes.iter().map(|p| p.name.clone()).collect();
    let mut log = EpisodeLog {
        q_columns: joint_columns(&names, n),
        ..EpisodeLog::default()
    };

    let mut guard = DivergenceGuard::default();
    let mut step = 0;
    'episodes: for episode in 0..cfg.max_episodes {
        log.episodes = episode + 1;
        let mut s = game.initial_state();
        for _ in 0..cfg.episode_len {
            if step >= cfg.step_cap {
                break 'episodes;
            }
            let x = game.features(&s);
            let q = online.forward(&x)?;
            log.argext_cells += q.len() as u64;
            let (_, ga, gb) = max_min(&q)?;
            let greedy = JointAction::from_sides(ga, gb, n)?.index();
            let a_idx = epsilon_greedy(greedy, k, cfg.epsilon, &mut behavior);
            let action = JointAction::decode(a_idx, n)?;
            let (next, reward) = game.step(&s, &action)?;
            let x_next = game.features(&next);
            buffer.push(TransitionRecord {
                state: x,
                action: a_idx,
                reward,
                next_state: x_next,
            });

            let loss = if buffer.len() >= cfg.batch_size {
                let sample = buffer.sample(cfg.batch_size, &mut sampler)?;
                let mut targets = Vec::with_capacity(sample.len());
                for rec in &sample {
                    let q_next = target.forward(&rec.next_state)?;
                    targets.push(rec.reward + cfg.rho * max_min(&q_next)?.0);
                }
                let batch = TrainBatch::new(
                    sample.iter().map(|r| r.state.clone()).collect(),
                    sample.iter().map(|r| r.action).collect(),
                    targets,
                )?;
                Some(online.train_step(&batch, cfg.eta)?)
            } else {
                None
            };

            guard.check(loss, "joint network")?;
            step += 1;
            if step % cfg.sync_period == 0 {
                target = sync_target(&online);
            }
            let snapshot = tracker.snapshot(&[&online])?;
            let converged = tracker.settle(&snapshot, loss.is_some());
            log.rows.push(LogRow {
                episode,
                step,
                state_id: tracker.state_id(game, &s),
                alpha: action.alpha,
                beta: action.beta,
                reward,
                loss_device: loss,
                loss_attacker: None,
                q: (step % cfg.q_log_period == 0).then_some(snapshot),
            });
            if converged {
                log.converged_at = Some(step);
                break 'episodes;
            }
            s = next;
        }
    }

    let policy = extract_ne(Learned::Centralized(&online), &tracker.named_features())?;
    Ok(CentralizedRun {
        online,
        target,
        log,
        policy,
    })
}
