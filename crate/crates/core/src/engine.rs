//! Tick-based swarm simulation.
//!
//! A tick runs five phases in a fixed order:
//!
//! 1. every alive drone re-selects its best predictor against the broadcast
//!    history and decides whether to attempt a recharge, with the station
//!    capacity computed from the alive count at tick start;
//! 2. if attempts exceed capacity a uniformly random subset of attendees is
//!    served; served drones gain `bg` and consume nothing, every other alive
//!    drone consumes one tick of battery;
//! 3. the attempt count (not the served count) is pushed into the history;
//! 4. drones at or below zero charge die;
//! 5. the tick counter advances.

use std::io::{self, Write};

use thiserror::Error;

use crate::battery::{consume_battery, recharge, SocValue};
use crate::params::{ParamError, SimParams};
use crate::policy::{ct_decide, Decision, PredictorEnsemble};
use crate::rng::{derive_seed, RngStream};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EngineError {
    #[error("population size must be positive")]
    EmptyPopulation,
    #[error("remaining drones ({remaining}) exceed the initial population ({qty})")]
    RemainingExceedsPopulation { remaining: u32, qty: u32 },
}

/// Station capacity: `floor(b% of alive)`.
pub fn station_capacity(b: f64, alive: u32) -> u32 {
    (b / 100.0 * f64::from(alive)).floor() as u32
}

/// Fraction of the initial swarm still alive at the end of a run.
pub fn asrd(remaining: u32, qty: u32) -> Result<f64, EngineError> {
    if qty == 0 {
        return Err(EngineError::EmptyPopulation);
    }
    if remaining > qty {
        return Err(EngineError::RemainingExceedsPopulation { remaining, qty });
    }
    Ok(f64::from(remaining) / f64::from(qty))
}

/// The last `2m` per-tick attempt counts, most recent first.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AttendanceHistory {
    entries: Vec<u32>,
    window: usize,
}

impl AttendanceHistory {
    /// Builds a history from `2m` entries, most recent first.
    ///
    /// # Panics
    /// If `entries.len()` is zero or odd.
    pub fn from_entries(entries: Vec<u32>) -> Self {
        assert!(
            !entries.is_empty() && entries.len().is_multiple_of(2),
            "history must hold 2m entries"
        );
        let window = entries.len() / 2;
        Self { entries, window }
    }

    /// Pre-fills `2m` entries uniformly from `[0, qty]`.
    pub fn random(m: usize, qty: u32, rng: &mut RngStream) -> Self {
        let entries = (0..2 * m)
            .map(|_| rng.below(u64::from(qty) + 1) as u32)
            .collect();
        Self::from_entries(entries)
    }

    pub fn window(&self) -> usize {
        self.window
    }

    pub fn as_slice(&self) -> &[u32] {
        &self.entries
    }

    /// The `m` most recent entries.
    pub fn recent(&self) -> &[u32] {
        &self.entries[..self.window]
    }

    pub fn push(&mut self, attempts: u32) {
        self.entries.rotate_right(1);
        self.entries[0] = attempts;
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Drone {
    pub id: u32,
    pub soc: SocValue,
    pub ensemble: PredictorEnsemble,
    pub alive: bool,
    /// Cosmetic 2D position; only tracked when enabled in [`SimOptions`].
    pub position: Option<(f64, f64)>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct SimOptions {
    /// Record one [`TickStats`] row per tick.
    pub trace: bool,
    /// Random-walk drone positions on their own stream. Never feeds back into
    /// decisions or energy.
    pub positions: bool,
}

/// Per-tick summary; `alive` and `mean_soc` are measured after deaths.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TickStats {
    pub tick: u32,
    pub alive: u32,
    pub attempts: u32,
    pub served: u32,
    pub mean_soc: f64,
}

const WORLD_SIZE: f64 = 100.0;
const STATION: (f64, f64) = (WORLD_SIZE / 2.0, WORLD_SIZE / 2.0);
const MOTION_STREAM: u64 = u64::MAX;

#[derive(Debug, Clone)]
pub struct SimState {
    pub tick: u32,
    pub params: SimParams,
    drones: Vec<Drone>,
    history: AttendanceHistory,
    rng: RngStream,
    motion: Option<RngStream>,
    alive: u32,
    /// Hindsight predictions per drone and strategy: entry `w - 1` is the
    /// forecast from history window `w` (`history[w..w + m]`), for `w` in
    /// `1..=m`. Windows slide by one slot per tick, so only the newest
    /// forecast has to be computed. `None` after external mutation.
    hindsight: Option<Vec<f64>>,
}

impl SimState {
    /// Builds the initial swarm: full charge, `k` random predictors per drone,
    /// then a random `2m` history, all from the run's stream.
    pub fn new(params: SimParams, options: SimOptions) -> Result<Self, ParamError> {
        params.validate()?;
        let mut rng = RngStream::new(params.seed);
        let (m, k) = (params.m as usize, params.k as usize);
        let mut motion = options
            .positions
            .then(|| RngStream::new(derive_seed(params.seed, MOTION_STREAM, 0)));
        let drones = (0..params.qty)
            .map(|id| Drone {
                id,
                soc: SocValue::FULL,
                ensemble: PredictorEnsemble::random(k, m, &mut rng),
                alive: true,
                position: motion
                    .as_mut()
                    .map(|r| (r.uniform() * WORLD_SIZE, r.uniform() * WORLD_SIZE)),
            })
            .collect();
        let history = AttendanceHistory::random(m, params.qty, &mut rng);
        Ok(Self {
            tick: 0,
            drones,
            history,
            params,
            rng,
            motion,
            alive: params.qty,
            hindsight: None,
        })
    }

    pub fn drones(&self) -> &[Drone] {
        &self.drones
    }

    /// Mutable access to the swarm; drops cached predictions.
    pub fn drones_mut(&mut self) -> &mut [Drone] {
        self.hindsight = None;
        &mut self.drones
    }

    pub fn history(&self) -> &AttendanceHistory {
        &self.history
    }

    /// # Panics
    /// If the window length differs from `params.m`.
    pub fn set_history(&mut self, history: AttendanceHistory) {
        assert_eq!(
            history.window(),
            self.params.m as usize,
            "history window mismatch"
        );
        self.history = history;
        self.hindsight = None;
    }

    fn rebuild_hindsight(&self) -> Vec<f64> {
        let m = self.params.m as usize;
        let h = self.history.as_slice();
        let mut cache = Vec::with_capacity(self.drones.len() * self.params.k as usize * m);
        for drone in &self.drones {
            for s in drone.ensemble.strategies() {
                cache.extend((1..=m).map(|w| s.predict(&h[w..w + m], self.params.qty)));
            }
        }
        cache
    }

    pub fn alive_count(&self) -> u32 {
        self.alive
    }

    pub fn is_finished(&self) -> bool {
        self.alive == 0 || self.tick >= self.params.max_ticks
    }

    /// Advances one tick.
    ///
    /// # Panics
    /// If the run is already finished.
    pub fn step(&mut self) -> TickStats {
        assert!(!self.is_finished(), "step called on a finished run");
        let p = self.params;
        let capacity = station_capacity(p.b, self.alive);

        let m = p.m as usize;
        let per_drone = p.k as usize * m;
        let mut hindsight = match self.hindsight.take() {
            Some(cache) => cache,
            None => self.rebuild_hindsight(),
        };
        let h = self.history.as_slice();
        let recent = self.history.recent();

        let mut attendees = Vec::new();
        let mut newest = vec![0.0; p.k as usize];
        for (i, drone) in self.drones.iter_mut().enumerate() {
            if !drone.alive {
                continue;
            }
            let cache = &mut hindsight[i * per_drone..(i + 1) * per_drone];
            // Same arithmetic, in the same order, as `Strategy::score`.
            let mut best = 0;
            let mut best_score = f64::INFINITY;
            for (s, preds) in cache.chunks_exact(m).enumerate() {
                let score: f64 = (0..m).map(|j| (f64::from(h[j]) - preds[j]).abs()).sum();
                if score <= best_score {
                    best = s;
                    best_score = score;
                }
            }
            drone.ensemble.set_best(best);
            for (slot, s) in newest.iter_mut().zip(drone.ensemble.strategies()) {
                *slot = s.predict(recent, p.qty);
            }
            if ct_decide(drone.soc, p.lw, p.up, newest[best], capacity) == Decision::AttemptRecharge
            {
                attendees.push(i);
            }
            // After this tick's push, today's window becomes window 1.
            for (preds, &fresh) in cache.chunks_exact_mut(m).zip(&newest) {
                preds.rotate_right(1);
                preds[0] = fresh;
            }
        }
        self.hindsight = Some(hindsight);
        let attempts = attendees.len() as u32;

        let served = self.pick_served(&mut attendees, capacity as usize);
        let mut is_served = vec![false; self.drones.len()];
        for &i in served {
            is_served[i] = true;
        }
        let served = served.len() as u32;

        for (drone, &served) in self.drones.iter_mut().zip(&is_served) {
            if !drone.alive {
                continue;
            }
            drone.soc = if served {
                recharge(drone.soc, p.bg)
            } else {
                consume_battery(drone.soc, p.bc, p.sd, &mut self.rng)
            };
        }

        self.history.push(attempts);

        let mut soc_total = 0.0;
        for drone in &mut self.drones {
            if drone.alive && !drone.soc.is_alive() {
                drone.alive = false;
                self.alive -= 1;
            } else if drone.alive {
                soc_total += drone.soc.value();
            }
        }

        if let Some(motion) = self.motion.as_mut() {
            for (drone, &served) in self.drones.iter_mut().zip(&is_served) {
                if let (true, Some(pos)) = (drone.alive, drone.position.as_mut()) {
                    *pos = if served {
                        STATION
                    } else {
                        (
                            (pos.0 + 2.0 * motion.uniform() - 1.0).clamp(0.0, WORLD_SIZE),
                            (pos.1 + 2.0 * motion.uniform() - 1.0).clamp(0.0, WORLD_SIZE),
                        )
                    };
                }
            }
        }

        self.tick += 1;
        TickStats {
            tick: self.tick,
            alive: self.alive,
            attempts,
            served,
            mean_soc: if self.alive == 0 {
                0.0
            } else {
                soc_total / f64::from(self.alive)
            },
        }
    }

    /// Partial Fisher-Yates: the first `capacity` slots become a uniform
    /// random subset. No draws when everyone fits.
    fn pick_served<'a>(&mut self, attendees: &'a mut [usize], capacity: usize) -> &'a [usize] {
        if attendees.len() <= capacity {
            return attendees;
        }
        let n = attendees.len();
        for i in 0..capacity {
            let j = i + self.rng.below((n - i) as u64) as usize;
            attendees.swap(i, j);
        }
        &attendees[..capacity]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimResult {
    pub remaining: u32,
    pub ticks_run: u32,
    pub asrd: f64,
    pub trace: Option<Vec<TickStats>>,
}

impl SimResult {
    pub fn attendance_series(&self) -> Option<Vec<u32>> {
        self.trace
            .as_ref()
            .map(|t| t.iter().map(|s| s.attempts).collect())
    }

    pub fn served_series(&self) -> Option<Vec<u32>> {
        self.trace
            .as_ref()
            .map(|t| t.iter().map(|s| s.served).collect())
    }
}

pub fn simulate(params: &SimParams) -> Result<SimResult, ParamError> {
    simulate_with(params, SimOptions::default())
}

/// Runs until the swarm is dead or `max_ticks` is reached.
pub fn simulate_with(params: &SimParams, options: SimOptions) -> Result<SimResult, ParamError> {
    let mut state = SimState::new(*params, options)?;
    let mut trace = options.trace.then(Vec::new);
    while !state.is_finished() {
        let stats = state.step();
        if let Some(t) = trace.as_mut() {
            t.push(stats);
        }
    }
    let remaining = state.alive_count();
    Ok(SimResult {
        remaining,
        ticks_run: state.tick,
        asrd: asrd(remaining, params.qty).expect("validated population"),
        trace,
    })
}

pub const TRACE_HEADER: &str = "tick,alive,attempts,served,mean_soc";

pub fn write_trace_csv<W: Write>(mut out: W, trace: &[TickStats]) -> io::Result<()> {
    writeln!(out, "{TRACE_HEADER}")?;
    for s in trace {
        writeln!(
            out,
            "{},{},{},{},{:.6}",
            s.tick, s.alive, s.attempts, s.served, s.mean_soc
        )?;
    }
    Ok(())
}
