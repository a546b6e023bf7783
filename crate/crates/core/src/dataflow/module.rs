//! Cycle-level model of the processing module: a register memory holding the
//! precomputed taps, a fully parallel minimal filtering datapath, and an
//! optional pipeline of `pipeline_depth` stages.
//!
//! A module accepts one tile per cycle. A tile issued at cycle `c` completes
//! at cycle `c + pipeline_depth`.

use std::collections::VecDeque;

use crate::arith::{ArithError, Arithmetic};
use crate::kernel::{winograd_pair, OutPair, Tile4, TransformedTaps};

/// One pipeline register per operator stage (pre-add, multiply, post-add).
pub const DEFAULT_PIPELINE_DEPTH: usize = 3;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SimError {
    #[error("tile submitted before the tap registers were loaded")]
    NotLoaded,
    #[error("a cluster needs at least one module")]
    EmptyCluster,
    #[error(transparent)]
    Arith(#[from] ArithError),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Completed<V> {
    pub tile_index: usize,
    pub issued: u64,
    pub cycle: u64,
    pub out: OutPair<V>,
}

#[derive(Debug, Clone)]
pub struct ModuleState<V> {
    tap_registers: Option<TransformedTaps<V>>,
    pipeline_depth: usize,
    in_flight: VecDeque<Completed<V>>,
    cycle: u64,
}

impl<V: Clone> ModuleState<V> {
    pub fn new(pipeline_depth: usize) -> Self {
        ModuleState {
            tap_registers: None,
            pipeline_depth,
            in_flight: VecDeque::new(),
            cycle: 0,
        }
    }

    /// Writes the register memory. Must happen before the first tile.
    pub fn load(&mut self, taps: TransformedTaps<V>) {
        self.tap_registers = Some(taps);
    }

    pub fn is_loaded(&self) -> bool {
        self.tap_registers.is_some()
    }

    pub fn pipeline_depth(&self) -> usize {
        self.pipeline_depth
    }

    pub fn cycle(&self) -> u64 {
        self.cycle
    }

    pub fn in_flight(&self) -> usize {
        self.in_flight.len()
    }

    /// Advances one clock, optionally issuing a tile, and returns the result
    /// leaving the pipeline this cycle, if any.
    pub fn step<A: Arithmetic<Value = V>>(
        &mut self,
        arith: &A,
        tile: Option<(usize, &Tile4<V>)>,
    ) -> Result<Option<Completed<V>>, SimError> {
        if let Some((tile_index, tile)) = tile {
            let taps = self.tap_registers.as_ref().ok_or(SimError::NotLoaded)?;
            let out = winograd_pair(arith, tile, taps)?;
            self.in_flight.push_back(Completed {
                tile_index,
                issued: self.cycle,
                cycle: self.cycle + self.pipeline_depth as u64,
                out,
            });
        }
        let done = match self.in_flight.front() {
            Some(head) if head.cycle == self.cycle => self.in_flight.pop_front(),
            _ => None,
        };
        self.cycle += 1;
        Ok(done)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimulationTrace<V> {
    /// Results ordered by tile index.
    pub results: Vec<Completed<V>>,
    /// Cycles from the first issue until the last result (inclusive).
    pub total_cycles: u64,
    pub latency: usize,
    pub modules: usize,
}

impl<V: Clone> SimulationTrace<V> {
    pub fn outputs(&self) -> Vec<OutPair<V>> {
        self.results.iter().map(|c| c.out.clone()).collect()
    }

    /// Outputs per cycle at steady state: two per module.
    pub fn steady_state_outputs_per_cycle(&self) -> usize {
        2 * self.modules
    }
}

/// Streams `tiles` through a single module.
pub fn simulate_module<A: Arithmetic>(
    state: &mut ModuleState<A::Value>,
    tiles: &[Tile4<A::Value>],
    arith: &A,
) -> Result<SimulationTrace<A::Value>, SimError> {
    simulate_cluster(std::slice::from_mut(state), tiles, arith)
}

/// Streams `tiles` through `states.len()` modules in lockstep; tile `i` goes to
/// module `i % K` at cycle `i / K`.
pub fn simulate_cluster<A: Arithmetic>(
    states: &mut [ModuleState<A::Value>],
    tiles: &[Tile4<A::Value>],
    arith: &A,
) -> Result<SimulationTrace<A::Value>, SimError> {
    let k = states.len();
    if k == 0 {
        return Err(SimError::EmptyCluster);
    }
    if !tiles.is_empty() && states.iter().any(|s| !s.is_loaded()) {
        return Err(SimError::NotLoaded);
    }
    let start = states[0].cycle();
    let mut results = Vec::with_capacity(tiles.len());
    let mut next = 0;
    while next < tiles.len() || states.iter().any(|s| s.in_flight() > 0) {
        for state in states.iter_mut() {
            let issue = (next < tiles.len()).then(|| (next, &tiles[next]));
            if issue.is_some() {
                next += 1;
            }
            if let Some(done) = state.step(arith, issue)? {
                results.push(done);
            }
        }
    }
    results.sort_by_key(|c| c.tile_index);
    let total_cycles = results.iter().map(|c| c.cycle + 1 - start).max().unwrap_or(0);
    Ok(SimulationTrace {
        results,
        total_cycles,
        latency: states[0].pipeline_depth(),
        modules: k,
    })
}
