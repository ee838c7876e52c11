use std::collections::HashSet;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::trajectory::{Observable, TrajectoryEngine, TrajectoryModel, TrajectoryRecord};
use crate::qcore::{Hamiltonian, LindbladModel, StateVector, TimeGrid};
use crate::{Error, Result};

/// Trajectory-averaged observables with their standard errors.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnsembleResult {
    pub times: Vec<f64>,
    pub observable_ids: Vec<String>,
    /// `mean[observable][sample]`
    pub mean: Vec<Vec<f64>>,
    /// Sample standard deviation over trajectories divided by `√M`.
    pub sem: Vec<Vec<f64>>,
    pub m: usize,
    pub seeds: Vec<u64>,
}

impl EnsembleResult {
    /// Reduces records in the given order.
    pub fn from_records(
        records: &[TrajectoryRecord],
        ids: Vec<String>,
        seeds: Vec<u64>,
    ) -> Result<Self> {
        let first = records
            .first()
            .ok_or_else(|| Error::InvalidArgument("no trajectories to reduce".into()))?;
        let m = records.len();
        let (n_t, n_o) = (first.times.len(), ids.len());
        let mut mean = vec![vec![0.0; n_t]; n_o];
        let mut sem = vec![vec![0.0; n_t]; n_o];
        for o in 0..n_o {
            for t in 0..n_t {
                let mu = records.iter().map(|r| r.values[t][o]).sum::<f64>() / m as f64;
                mean[o][t] = mu;
                if m > 1 {
                    let var = records
                        .iter()
                        .map(|r| (r.values[t][o] - mu).powi(2))
                        .sum::<f64>()
                        / (m - 1) as f64;
                    sem[o][t] = (var / m as f64).sqrt();
                }
            }
        }
        Ok(Self {
            times: first.times.clone(),
            observable_ids: ids,
            mean,
            sem,
            m,
            seeds,
        })
    }

    /// `(mean, sem)` of the named observable.
    pub fn series(&self, id: &str) -> Option<(&[f64], &[f64])> {
        let i = self.observable_ids.iter().position(|x| x == id)?;
        Some((&self.mean[i], &self.sem[i]))
    }
}

/// Runs one trajectory per seed on a pool of `workers` threads and reduces
/// in seed-list order, so the result does not depend on `workers`.
pub fn run_ensemble(
    engine: &TrajectoryEngine,
    psi0: &StateVector,
    seeds: &[u64],
    workers: usize,
) -> Result<EnsembleResult> {
    let records = run_records(engine, psi0, seeds, workers)?;
    let ids = engine.observables().iter().map(|o| o.id.clone()).collect();
    EnsembleResult::from_records(&records, ids, seeds.to_vec())
}

/// Per-trajectory records in seed order.
pub fn run_records(
    engine: &TrajectoryEngine,
    psi0: &StateVector,
    seeds: &[u64],
    workers: usize,
) -> Result<Vec<TrajectoryRecord>> {
    if seeds.is_empty() {
        return Err(Error::InvalidArgument("need at least one seed".into()));
    }
    let mut seen = HashSet::new();
    for &s in seeds {
        if !seen.insert(s) {
            return Err(Error::DuplicateSeed(s));
        }
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| Error::InvalidArgument(format!("worker pool: {e}")))?;
    pool.install(|| {
        seeds
            .par_iter()
            .map(|&s| engine.run(s, psi0))
            .collect::<Result<Vec<_>>>()
    })
}

/// Quantum-jump unravelling of `model` (no engineered noise), one trajectory
/// per seed.
pub fn mcwf_reference(
    model: &LindbladModel,
    psi0: &StateVector,
    grid: &TimeGrid,
    observables: Vec<Observable>,
    seeds: &[u64],
    workers: usize,
) -> Result<EnsembleResult> {
    let traj = TrajectoryModel {
        hamiltonian: Hamiltonian::clone(model.hamiltonian()),
        noise_sites: Vec::new(),
        gamma: 0.0,
        dt_section: grid.dt(),
        decoherence: model.jumps().to_vec(),
        mode: super::DecoherenceMode::JumpChannels,
    };
    let engine = TrajectoryEngine::new(traj, *grid, observables)?;
    run_ensemble(&engine, psi0, seeds, workers)
}
