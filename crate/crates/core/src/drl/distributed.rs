use rand::Rng;

use crate::error::Result;
use crate::game::{bit_string, side_actions, side_decode, JointAction, MarkovGame};
use crate::neural::{sync_target, QNetwork, TrainBatch};
use crate::rng::{substream, SimRng};

use super::track::Tracker;
use super::{
    argmax, argmin, epsilon_greedy, extract_ne, DivergenceGuard, EpisodeLog, Learned, LearnedNets,
    LearnerConfig, LogRow, PolicyTable, Probe, ReplayBuffer, SidePolicy, TransitionRecord,
};

#[derive(Debug, Clone)]
pub struct DistributedRun {
    pub device: QNetwork,
    pub attacker: QNetwork,
    pub log: EpisodeLog,
    /// Device policy over visited states.
    pub device_policy: SidePolicy,
    /// Attacker policy over visited states.
    pub attacker_policy: SidePolicy,
    /// Equilibrium pair at each probe after training.
    pub policy: PolicyTable,
}

impl LearnedNets for DistributedRun {
    fn learned(&self) -> Learned<'_> {
        Learned::Distributed {
            device: &self.device,
            attacker: &self.attacker,
        }
    }
}

#[derive(Clone, Copy)]
enum Side {
    Device,
    Attacker,
}

impl Side {
    fn pick(self, q: &[f64]) -> usize {
        match self {
            Side::Device => argmin(q),
            Side::Attacker => argmax(q),
        }
    }

    fn bootstrap(self, q: &[f64]) -> f64 {
        q[self.pick(q)]
    }
}

struct Agent {
    side: Side,
    online: QNetwork,
    target: QNetwork,
    buffer: ReplayBuffer,
    sampler: SimRng,
    behavior: SimRng,
    eta: f64,
    policy: SidePolicy,
}

impl Agent {
    fn new(
        side: Side,
        sizes: &[usize],
        cfg: &LearnerConfig,
        streams: [u64; 3],
        eta: f64,
    ) -> Result<Self> {
        let online = QNetwork::new(sizes, &mut substream(cfg.seed, streams[0]))?;
        Ok(Self {
            side,
            target: sync_target(&online),
            online,
            buffer: ReplayBuffer::new(cfg.replay_capacity),
            sampler: substream(cfg.seed, streams[1]),
            behavior: substream(cfg.seed, streams[2]),
            eta,
            policy: SidePolicy::default(),
        })
    }

    fn train(&mut self, cfg: &LearnerConfig) -> Result<Option<f64>> {
        if self.buffer.len() < cfg.batch_size {
            return Ok(None);
        }
        let sample = self.buffer.sample(cfg.batch_size, &mut self.sampler)?;
        let mut targets = Vec::with_capacity(sample.len());
        for rec in &sample {
            let q_next = self.target.forward(&rec.next_state)?;
            targets.push(rec.reward + cfg.rho * self.side.bootstrap(&q_next));
        }
        let batch = TrainBatch::new(
            sample.iter().map(|r| r.state.clone()).collect(),
            sample.iter().map(|r| r.action).collect(),
            targets,
        )?;
        Ok(Some(self.online.train_step(&batch, self.eta)?))
    }

    /// Moves the visited state's entry to the new greedy action when the
    /// update changed it. Unseen states start from a uniformly random action.
    fn update_policy(
        &mut self,
        key: String,
        before: usize,
        x: &[f64],
        init: &mut SimRng,
    ) -> Result<()> {
        let after = self.side.pick(&self.online.forward(x)?);
        let k = self.online.output_len();
        let entry = self
            .policy
            .entries
            .entry(key)
            .or_insert_with(|| init.gen_range(0..k));
        if after != before && *entry != after {
            *entry = after;
            self.policy.updates += 1;
        }
        Ok(())
    }
}

fn side_columns(probes: &[String], n: usize) -> Vec<String> {
    let mut cols = Vec::new();
    for p in probes {
        for (prefix, tag) in [("qd", "a"), ("qa", "b")] {
            for i in 0..side_actions(n) {
                let bits = side_decode(i, n).expect("index in range");
                cols.push(format!("{prefix}_{p}_{tag}{}", bit_string(&bits)));
            }
        }
    }
    cols
}

/// Trains separate device and attacker networks.
pub fn run_distributed<G: MarkovGame>(
    game: &G,
    probes: &[Probe<G::State>],
    cfg: &LearnerConfig,
) -> Result<DistributedRun> {
    cfg.validate()?;
    let n = game.devices();
    let k = side_actions(n);
    let sizes = cfg.layer_sizes(game.feature_len(), k);
    let mut device = Agent::new(Side::Device, &sizes, cfg, [0, 2, 1], cfg.eta)?;
    let mut attacker = Agent::new(Side::Attacker, &sizes, cfg, [3, 5, 4], cfg.eta_attacker)?;
    let mut policy_init = substream(cfg.seed, 6);

    let mut tracker = Tracker::new(
        game,
        probes,
        cfg.convergence_threshold,
        cfg.convergence_window,
    );
    let names: Vec<String> = probes.iter().map(|p| p.name.clone()).collect();
    let mut log = EpisodeLog {
        q_columns: side_columns(&names, n),
        ..EpisodeLog::default()
    };

    let mut guard_d = DivergenceGuard::default();
    let mut guard_a = DivergenceGuard::default();
    let mut step = 0;
    'episodes: for episode in 0..cfg.max_episodes {
        log.episodes = episode + 1;
        let mut s = game.initial_state();
        for _ in 0..cfg.episode_len {
            if step >= cfg.step_cap {
                break 'episodes;
            }
            let x = game.features(&s);
            let qd = device.online.forward(&x)?;
            let qa = attacker.online.forward(&x)?;
            log.argext_cells += (qd.len() + qa.len()) as u64;
            let greedy_d = argmin(&qd);
            let greedy_a = argmax(&qa);
            let alpha = epsilon_greedy(greedy_d, k, cfg.epsilon, &mut device.behavior);
            let beta = epsilon_greedy(greedy_a, k, cfg.epsilon, &mut attacker.behavior);
            let action = JointAction::from_sides(alpha, beta, n)?;
            let (next, reward) = game.step(&s, &action)?;
            let x_next = game.features(&next);
            for (agent, a) in [(&mut device, alpha), (&mut attacker, beta)] {
                agent.buffer.push(TransitionRecord {
                    state: x.clone(),
                    action: a,
                    reward,
                    next_state: x_next.clone(),
                });
            }

            let loss_d = device.train(cfg)?;
            let loss_a = attacker.train(cfg)?;
            guard_d.check(loss_d, "device network")?;
            guard_a.check(loss_a, "attacker network")?;
            let key = game.state_key(&s);
            device.update_policy(key.clone(), greedy_d, &x, &mut policy_init)?;
            attacker.update_policy(key, greedy_a, &x, &mut policy_init)?;

            step += 1;
            if step % cfg.sync_period == 0 {
                device.target = sync_target(&device.online);
                attacker.target = sync_target(&attacker.online);
            }
            let snapshot = tracker.snapshot(&[&device.online, &attacker.online])?;
            let converged = tracker.settle(&snapshot, loss_d.is_some());
            log.rows.push(LogRow {
                episode,
                step,
                state_id: tracker.state_id(game, &s),
                alpha: action.alpha,
                beta: action.beta,
                reward,
                loss_device: loss_d,
                loss_attacker: loss_a,
                q: (step % cfg.q_log_period == 0).then_some(snapshot),
            });
            if converged {
                log.converged_at = Some(step);
                break 'episodes;
            }
            s = next;
        }
    }

    let policy = extract_ne(
        Learned::Distributed {
            device: &device.online,
            attacker: &attacker.online,
        },
        &tracker.named_features(),
    )?;
    Ok(DistributedRun {
        device: device.online,
        attacker: attacker.online,
        log,
        device_policy: device.policy,
        attacker_policy: attacker.policy,
        policy,
    })
}
