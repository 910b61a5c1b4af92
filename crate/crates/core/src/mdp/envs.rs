//! The three discrete benchmark environments.
//!
//! All of them are ergodic under any policy with full support, which the
//! average-reward setting needs: episodic endings are turned into resets.

use std::fmt;
use std::str::FromStr;

use super::types::TabularMdp;
use crate::error::OpeError;

/// Environment identifiers accepted by the harness.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Environment {
    Taxi,
    Gridworld,
    SinglePath,
}

impl Environment {
    pub const ALL: [Environment; 3] = [Environment::Taxi, Environment::Gridworld, Environment::SinglePath];

    pub fn name(self) -> &'static str {
        match self {
            Environment::Taxi => "taxi",
            Environment::Gridworld => "gridworld",
            Environment::SinglePath => "singlepath",
        }
    }

    pub fn build(self) -> TabularMdp {
        match self {
            Environment::Taxi => build_taxi(),
            Environment::Gridworld => build_gridworld(),
            Environment::SinglePath => build_singlepath(),
        }
    }

    /// Low-dimensional coordinates of each state, for Gaussian kernels.
    pub fn state_embedding(self) -> Vec<Vec<f64>> {
        match self {
            Environment::Taxi => (0..TAXI_STATES)
                .map(|s| {
                    let t = TaxiState::decode(s);
                    let mut v = vec![(t.cell / 5) as f64, (t.cell % 5) as f64];
                    v.extend((0..4).map(|c| ((t.passengers >> c) & 1) as f64));
                    v.push(t.taxi as f64);
                    v
                })
                .collect(),
            Environment::Gridworld => (0..16).map(|s| vec![(s / 4) as f64, (s % 4) as f64]).collect(),
            Environment::SinglePath => (0..SINGLEPATH_STATES).map(|s| vec![s as f64]).collect(),
        }
    }
}

impl fmt::Display for Environment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Environment {
    type Err = OpeError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Environment::ALL
            .into_iter()
            .find(|e| e.name() == s.trim())
            .ok_or_else(|| OpeError::UnknownEnvironment(s.to_string()))
    }
}

// ---------------------------------------------------------------- Taxi

const GRID: usize = 5;
const CORNERS: [usize; 4] = [0, GRID - 1, GRID * (GRID - 1), GRID * GRID - 1];
const PASSENGER_STATUSES: usize = 16;
const TAXI_STATUSES: usize = 5;
pub const TAXI_STATES: usize = GRID * GRID * PASSENGER_STATUSES * TAXI_STATUSES;
pub const TAXI_ACTIONS: usize = 6;
/// Per-corner, per-step probability that a passenger appears (or leaves).
pub const TAXI_PASSENGER_FLIP: f64 = 0.05;
pub const TAXI_SUCCESS_REWARD: f64 = 20.0;
pub const STEP_COST: f64 = -1.0;

/// Decoded Taxi state. `passengers` is a bitmask of corners with a waiting
/// passenger; `taxi` is 0 when empty and `1 + d` when carrying a passenger to
/// corner `d`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TaxiState {
    pub cell: usize,
    pub passengers: usize,
    pub taxi: usize,
}

impl TaxiState {
    pub fn encode(self) -> usize {
        self.cell * (PASSENGER_STATUSES * TAXI_STATUSES) + self.passengers * TAXI_STATUSES + self.taxi
    }

    pub fn decode(s: usize) -> Self {
        Self {
            cell: s / (PASSENGER_STATUSES * TAXI_STATUSES),
            passengers: (s / TAXI_STATUSES) % PASSENGER_STATUSES,
            taxi: s % TAXI_STATUSES,
        }
    }
}

fn move_cell(cell: usize, action: usize) -> usize {
    let (row, col) = (cell / GRID, cell % GRID);
    match action {
        0 if row > 0 => cell - GRID,
        1 if col + 1 < GRID => cell + 1,
        2 if row + 1 < GRID => cell + GRID,
        3 if col > 0 => cell - 1,
        _ => cell,
    }
}

/// Distribution over passenger masks after every corner independently flips.
fn passenger_transitions(mask: usize) -> Vec<(usize, f64)> {
    (0..PASSENGER_STATUSES)
        .map(|next| {
            let flips = (mask ^ next).count_ones() as i32;
            (next, TAXI_PASSENGER_FLIP.powi(flips) * (1.0 - TAXI_PASSENGER_FLIP).powi(4 - flips))
        })
        .collect()
}

/// 5x5 Taxi with passengers appearing and disappearing at the four corners.
///
/// Actions: 0 north, 1 east, 2 south, 3 west, 4 pick up, 5 drop off. A
/// successful pickup or dropoff pays +20, every other step costs -1. A pickup
/// assigns a destination uniformly among the three other corners.
pub fn build_taxi() -> TabularMdp {
    let mut rows = Vec::with_capacity(TAXI_STATES * TAXI_ACTIONS);
    let mut rewards = Vec::with_capacity(TAXI_STATES * TAXI_ACTIONS);
    for s in 0..TAXI_STATES {
        let state = TaxiState::decode(s);
        for a in 0..TAXI_ACTIONS {
            // (cell, mask before passenger dynamics, taxi status, probability)
            let mut outcomes: Vec<(usize, usize, usize, f64)> = Vec::new();
            let mut reward = STEP_COST;
            match a {
                0..=3 => outcomes.push((move_cell(state.cell, a), state.passengers, state.taxi, 1.0)),
                4 => match CORNERS.iter().position(|&c| c == state.cell) {
                    Some(corner) if state.taxi == 0 && state.passengers & (1 << corner) != 0 => {
                        reward = TAXI_SUCCESS_REWARD;
                        let mask = state.passengers & !(1 << corner);
                        for dest in (0..4).filter(|&d| d != corner) {
                            outcomes.push((state.cell, mask, 1 + dest, 1.0 / 3.0));
                        }
                    }
                    _ => outcomes.push((state.cell, state.passengers, state.taxi, 1.0)),
                },
                _ => {
                    if state.taxi > 0 && CORNERS[state.taxi - 1] == state.cell {
                        reward = TAXI_SUCCESS_REWARD;
                        outcomes.push((state.cell, state.passengers, 0, 1.0));
                    } else {
                        outcomes.push((state.cell, state.passengers, state.taxi, 1.0));
                    }
                }
            }
            let row = outcomes
                .into_iter()
                .flat_map(|(cell, mask, taxi, p)| {
                    passenger_transitions(mask)
                        .into_iter()
                        .map(move |(passengers, q)| (TaxiState { cell, passengers, taxi }.encode(), p * q))
                })
                .collect();
            rows.push(row);
            rewards.push(reward);
        }
    }
    let mut initial = vec![0.0; TAXI_STATES];
    for cell in 0..GRID * GRID {
        initial[TaxiState { cell, passengers: 0, taxi: 0 }.encode()] = 1.0 / (GRID * GRID) as f64;
    }
    TabularMdp::new(TAXI_STATES, TAXI_ACTIONS, rows, rewards, initial).expect("taxi construction is stochastic")
}

// ---------------------------------------------------------------- Gridworld

pub const GRIDWORLD_START: usize = 0;
pub const GRIDWORLD_REWARD_STATE: usize = 6;
pub const GRIDWORLD_FIRE_STATE: usize = 9;
pub const GRIDWORLD_TERMINATE_STATE: usize = 15;

/// Reward collected while standing in `s`.
pub fn gridworld_state_reward(s: usize) -> f64 {
    match s {
        GRIDWORLD_REWARD_STATE => 1.0,
        GRIDWORLD_FIRE_STATE => -11.0,
        GRIDWORLD_TERMINATE_STATE => 100.0,
        _ => -1.0,
    }
}

/// 4x4 grid, start in the top-left corner, actions up/down/left/right.
///
/// Moves are deterministic and bumping into a wall leaves the agent in place.
/// The terminate state pays +100 and then resets to the start distribution.
pub fn build_gridworld() -> TabularMdp {
    const SIDE: usize = 4;
    let n = SIDE * SIDE;
    let mut rows = Vec::with_capacity(n * 4);
    let mut rewards = Vec::with_capacity(n * 4);
    let mut initial = vec![0.0; n];
    initial[GRIDWORLD_START] = 1.0;
    for s in 0..n {
        let (row, col) = (s / SIDE, s % SIDE);
        for a in 0..4 {
            let next_row: Vec<(usize, f64)> = if s == GRIDWORLD_TERMINATE_STATE {
                initial.iter().copied().enumerate().filter(|&(_, p)| p > 0.0).collect()
            } else {
                let next = match a {
                    0 if row > 0 => s - SIDE,
                    1 if row + 1 < SIDE => s + SIDE,
                    2 if col > 0 => s - 1,
                    3 if col + 1 < SIDE => s + 1,
                    _ => s,
                };
                vec![(next, 1.0)]
            };
            rows.push(next_row);
            rewards.push(gridworld_state_reward(s));
        }
    }
    TabularMdp::new(n, 4, rows, rewards, initial).expect("gridworld construction is stochastic")
}

// ---------------------------------------------------------------- SinglePath

pub const SINGLEPATH_STATES: usize = 5;
pub const SINGLEPATH_ADVANCE: usize = 0;
pub const SINGLEPATH_REMAIN: usize = 1;

/// Five-state chain starting at state 0.
///
/// Action 0 moves the agent from `n` to `n + 1` (state 4 wraps to 0) and pays
/// +1 for arriving somewhere new; action 1 keeps it in place at a cost of -1.
pub fn build_singlepath() -> TabularMdp {
    let n = SINGLEPATH_STATES;
    let mut rows = Vec::with_capacity(n * 2);
    let mut rewards = Vec::with_capacity(n * 2);
    for s in 0..n {
        rows.push(vec![((s + 1) % n, 1.0)]);
        rewards.push(1.0);
        rows.push(vec![(s, 1.0)]);
        rewards.push(-1.0);
    }
    let mut initial = vec![0.0; n];
    initial[0] = 1.0;
    TabularMdp::new(n, 2, rows, rewards, initial).expect("singlepath construction is stochastic")
}
