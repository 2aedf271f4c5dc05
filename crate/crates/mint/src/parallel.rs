//! Threaded MINTEE driver: one thread per chain. Rings have a single writer
//! (the owning chain) and are read by the chain below under a read lock,
//! so a reader always sees a prefix of the append-only levels.

use std::sync::atomic::{AtomicBool, AtomicU64, Ordering};
use std::sync::{RwLock, RwLockReadGuard};
use std::thread;
use std::time::Duration;

use mint_core::diagnostics::SampleRun;
use mint_core::mintee::{chain_rng, ChainStats, EnergyRings, LadderConfig, MinteeChain, MinteeRun, RingEntry, RingView};
use mint_core::{Dataset, Model, ParameterVector, RngStream};

use crate::error::{config_error, Error, Result};

struct SharedRings<'a>(&'a RwLock<EnergyRings>);

impl SharedRings<'_> {
    fn read(&self) -> RwLockReadGuard<'_, EnergyRings> {
        self.0.read().unwrap_or_else(|e| e.into_inner())
    }
}

impl RingView for SharedRings<'_> {
    fn level_len(&self, level: usize) -> usize {
        self.read().level(level).len()
    }

    fn entry(&self, level: usize, index: usize) -> RingEntry {
        self.read().level(level)[index].clone()
    }
}

struct ChainOutput {
    run: SampleRun,
    stats: ChainStats,
    step: f64,
    evaluations: u64,
    window: u64,
}

/// Chain `k` starts once chain `k+1` has completed `B+N` iterations and then
/// runs `(k+1)(B+N)` iterations, as in the sequential schedule. The
/// evaluation window sums each chain's last `N` iterations. Results depend
/// on thread timing.
pub fn run_mintee_parallel<M: Model>(
    model: &M,
    data: &Dataset<M::Point>,
    ladder: &LadderConfig,
    inits: &[ParameterVector],
    rng: &RngStream,
) -> Result<MinteeRun> {
    ladder.validate()?;
    let k_max = ladder.chains();
    let inits: Vec<ParameterVector> = match inits.len() {
        1 => vec![inits[0].clone(); k_max],
        l if l == k_max => inits.to_vec(),
        _ => return Err(config_error("need one initial point, or one per chain")),
    };
    for init in &inits {
        init.check_dim(model.dim())?;
    }
    let span = (ladder.burn_in + ladder.samples) as u64;
    let rings: Vec<RwLock<EnergyRings>> = (0..k_max).map(|_| RwLock::new(EnergyRings::new(ladder.energy.clone()))).collect();
    let progress: Vec<AtomicU64> = (0..k_max).map(|_| AtomicU64::new(0)).collect();
    let failed = AtomicBool::new(false);

    let outputs: Vec<Result<ChainOutput>> = thread::scope(|s| {
        let handles: Vec<_> = (0..k_max)
            .map(|k| {
                let (rings, progress, failed, init) = (&rings, &progress, &failed, inits[k].clone());
                s.spawn(move || {
                    let out = run_chain(model, data, ladder, k, init, rng, span, rings, progress, failed);
                    if out.is_err() {
                        failed.store(true, Ordering::SeqCst);
                    }
                    out
                })
            })
            .collect();
        handles.into_iter().map(|h| h.join().expect("chain thread panicked")).collect()
    });

    let mut run = MinteeRun {
        ladder: ladder.clone(),
        chains: Vec::with_capacity(k_max),
        stats: Vec::with_capacity(k_max),
        ring_counts: rings.iter().map(|r| r.read().unwrap_or_else(|e| e.into_inner()).occupancy()).collect(),
        final_steps: Vec::with_capacity(k_max),
        chain_evaluations: Vec::with_capacity(k_max),
        window_evaluations: 0,
        total_evaluations: 0,
    };
    let mut first_error = None;
    for out in outputs {
        match out {
            Ok(c) => {
                run.chains.push(c.run);
                run.stats.push(c.stats);
                run.final_steps.push(c.step);
                run.chain_evaluations.push(c.evaluations);
                run.window_evaluations += c.window;
            }
            // a chain aborted by another chain's failure reports the original error
            Err(Error::Config(msg)) if msg == ABORTED => {}
            Err(e) => {
                first_error.get_or_insert(e);
            }
        }
    }
    if let Some(e) = first_error {
        return Err(e);
    }
    run.total_evaluations = run.chain_evaluations.iter().sum();
    Ok(run)
}

const ABORTED: &str = "aborted after another chain failed";

#[allow(clippy::too_many_arguments)]
fn run_chain<M: Model>(
    model: &M,
    data: &Dataset<M::Point>,
    ladder: &LadderConfig,
    k: usize,
    init: ParameterVector,
    rng: &RngStream,
    span: u64,
    rings: &[RwLock<EnergyRings>],
    progress: &[AtomicU64],
    failed: &AtomicBool,
) -> Result<ChainOutput> {
    if let Some(upper) = progress.get(k + 1) {
        while upper.load(Ordering::Acquire) < span {
            if failed.load(Ordering::SeqCst) {
                return Err(config_error(ABORTED));
            }
            thread::sleep(Duration::from_micros(200));
        }
    }
    let mut chain = MinteeChain::new(model, data, ladder, k, init, chain_rng(rng, k))?;
    let own = (k as u64 + 1) * span;
    let window_start = own - ladder.samples as u64;
    let upper = rings.get(k + 1).map(SharedRings);
    let mut snapshot = 0;
    for it in 0..own {
        if it == window_start {
            snapshot = chain.evaluations();
        }
        if failed.load(Ordering::Relaxed) {
            return Err(config_error(ABORTED));
        }
        if let Some(entry) = chain.step(upper.as_ref().map(|u| u as &dyn RingView))? {
            rings[k].write().unwrap_or_else(|e| e.into_inner()).append(entry)?;
        }
        progress[k].store(it + 1, Ordering::Release);
    }
    let evaluations = chain.evaluations();
    let (run, stats, step) = chain.finish();
    Ok(ChainOutput {
        run,
        stats,
        step,
        evaluations,
        window: evaluations - snapshot,
    })
}
