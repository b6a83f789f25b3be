//! Uniform random pairwise scheduler and execution runner.

use crate::core::{apply_interaction_unchecked, Configuration, Protocol};
use rand::Rng;

/// Aggregate view of one per-agent metric at a point in parallel time.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Snapshot {
    pub time: f64,
    pub min: f64,
    pub mean: f64,
    pub max: f64,
}

/// Metrics from one run.
#[derive(Clone, Debug, PartialEq)]
pub struct ExecutionReport<O> {
    pub n: usize,
    /// Total interactions applied by this run, confirmation tail included.
    pub interactions: u64,
    /// interactions / (n/2), exactly.
    pub parallel_time: f64,
    /// Interaction count at which the stop predicate first held, if it did.
    pub stopped_at: Option<u64>,
    /// Interaction count of the first correctness checkpoint after which the
    /// correctness predicate held for the remainder of the run (including
    /// the confirmation tail). Checked every `check_stride` interactions.
    pub converged_at: Option<u64>,
    pub budget_exhausted: bool,
    pub snapshots: Vec<Snapshot>,
    pub final_outputs: Vec<O>,
}

impl<O> ExecutionReport<O> {
    pub fn stopped(&self) -> bool {
        self.stopped_at.is_some()
    }
}

/// Draw one ordered pair uniformly from the n(n-1) possibilities. A single
/// uniform index is split arithmetically, so no pair is ever rejected.
#[inline]
pub fn draw_pair<R: Rng>(n: usize, rng: &mut R) -> (usize, usize) {
    debug_assert!(n >= 2);
    let k = rng.gen_range(0..(n as u64) * (n as u64 - 1));
    let i = (k / (n as u64 - 1)) as usize;
    let mut j = (k % (n as u64 - 1)) as usize;
    if j >= i {
        j += 1;
    }
    (i, j)
}

/// One scheduler step: draw an ordered pair and apply the interaction.
/// Returns the pair for instrumentation.
#[inline]
pub fn step<P: Protocol, R: Rng>(
    config: &mut Configuration<P>,
    proto: &P,
    rng: &mut R,
) -> (usize, usize) {
    let (i, j) = draw_pair(config.agents.len(), rng);
    apply_interaction_unchecked(config, i, j, proto, rng);
    (i, j)
}

pub struct RunOptions<'a, S> {
    pub budget: u64,
    /// Extra interactions run after the stop/budget boundary to confirm the
    /// correctness predicate does not flip; `None` means 10·n.
    pub confirmation_tail: Option<u64>,
    /// How often (in interactions) the stop and correctness predicates are
    /// evaluated. 1 gives exact stop times; larger strides amortize O(n)
    /// predicates on long runs.
    pub check_stride: u64,
    /// Parallel-time distance between snapshots; `None` disables sampling.
    pub snapshot_stride: Option<f64>,
    /// Per-agent metric that snapshots aggregate.
    pub metric: Option<&'a dyn Fn(&S) -> f64>,
}

impl<S> RunOptions<'_, S> {
    pub fn new(budget: u64) -> Self {
        RunOptions {
            budget,
            confirmation_tail: None,
            check_stride: 1,
            snapshot_stride: None,
            metric: None,
        }
    }

    pub fn stride(mut self, stride: u64) -> Self {
        self.check_stride = stride.max(1);
        self
    }

    pub fn tail(mut self, tail: u64) -> Self {
        self.confirmation_tail = Some(tail);
        self
    }
}

fn take_snapshot<P: Protocol>(
    config: &Configuration<P>,
    metric: &dyn Fn(&P::State) -> f64,
    time: f64,
) -> Snapshot {
    let mut min = f64::INFINITY;
    let mut max = f64::NEG_INFINITY;
    let mut sum = 0.0;
    for a in &config.agents {
        let v = metric(a);
        min = min.min(v);
        max = max.max(v);
        sum += v;
    }
    Snapshot { time, min, mean: sum / config.agents.len() as f64, max }
}

/// Run until `stop` holds or the budget is exhausted, then (if the
/// correctness predicate currently holds) run the confirmation tail.
pub fn run_until<P, R, F>(
    config: &mut Configuration<P>,
    proto: &P,
    mut stop: F,
    opts: RunOptions<'_, P::State>,
    rng: &mut R,
) -> ExecutionReport<P::Output>
where
    P: Protocol,
    R: Rng,
    F: FnMut(&Configuration<P>) -> bool,
{
    let n = config.agents.len();
    let start = config.interactions;
    let tail = opts.confirmation_tail.unwrap_or(10 * n as u64);
    let stride = opts.check_stride.max(1);
    let mut snapshots = Vec::new();
    let mut next_snap = 0.0;
    let snap_stride = opts.snapshot_stride.filter(|s| *s > 0.0);

    let mut stopped_at = None;
    let mut converged_at: Option<u64> = None;
    let mut budget_exhausted = false;

    macro_rules! maybe_snapshot {
        () => {
            if let (Some(stride_t), Some(metric)) = (snap_stride, opts.metric) {
                let t = 2.0 * (config.interactions - start) as f64 / n as f64;
                while t >= next_snap {
                    snapshots.push(take_snapshot(config, metric, next_snap));
                    next_snap += stride_t;
                }
            }
        };
    }

    maybe_snapshot!();
    loop {
        let done = config.interactions - start;
        if stop(config) {
            stopped_at = Some(done);
            break;
        }
        if done >= opts.budget {
            budget_exhausted = true;
            break;
        }
        let chunk = stride.min(opts.budget - done);
        for _ in 0..chunk {
            step(config, proto, rng);
        }
        maybe_snapshot!();
        if proto.correct(&config.agents) {
            converged_at.get_or_insert(config.interactions - start);
        } else {
            converged_at = None;
        }
    }

    if converged_at.is_some() {
        let mut remaining = tail;
        while remaining > 0 {
            let chunk = stride.min(remaining);
            for _ in 0..chunk {
                step(config, proto, rng);
            }
            maybe_snapshot!();
            if !proto.correct(&config.agents) {
                converged_at = None;
                break;
            }
            remaining -= chunk;
        }
    }

    let interactions = config.interactions - start;
    ExecutionReport {
        n,
        interactions,
        parallel_time: 2.0 * interactions as f64 / n as f64,
        stopped_at,
        converged_at,
        budget_exhausted,
        snapshots,
        final_outputs: config.outputs(proto),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::core::Configuration;
    use crate::toy::{Epidemic, Null};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::collections::HashMap;

    fn epidemic_config(n: usize) -> Configuration<Epidemic> {
        let mut inputs = vec![false; n];
        inputs[0] = true;
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        Configuration::from_inputs(&Epidemic, &inputs, &mut rng)
    }

    #[test]
    fn pair_ordering_uniform_at_n2() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let mut first = 0u32;
        let total = 100_000;
        for _ in 0..total {
            let (i, j) = draw_pair(2, &mut rng);
            assert_ne!(i, j);
            if i == 0 {
                first += 1;
            }
        }
        let freq = first as f64 / total as f64;
        assert!((freq - 0.5).abs() < 0.01, "frequency {freq}");
    }

    #[test]
    fn pair_frequencies_uniform_at_n3() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let mut counts: HashMap<(usize, usize), u64> = HashMap::new();
        let total = 1_000_000u64;
        for _ in 0..total {
            *counts.entry(draw_pair(3, &mut rng)).or_default() += 1;
        }
        assert_eq!(counts.len(), 6);
        for (&pair, &c) in &counts {
            let freq = c as f64 / total as f64;
            assert!(
                (freq - 1.0 / 6.0).abs() < 0.01,
                "pair {pair:?} frequency {freq}"
            );
        }
    }

    /// Chi-squared goodness of fit against uniform ordered pairs. Critical
    /// values at significance 0.001: df=5 -> 20.515, df=19 -> 43.820.
    #[test]
    fn scheduler_uniformity_chi_squared() {
        for (n, crit) in [(3usize, 20.515f64), (5, 43.820)] {
            let mut rng = ChaCha8Rng::seed_from_u64(n as u64);
            let pairs = n * (n - 1);
            let mut counts = vec![0u64; n * n];
            let total = 1_000_000u64;
            for _ in 0..total {
                let (i, j) = draw_pair(n, &mut rng);
                counts[i * n + j] += 1;
            }
            let expected = total as f64 / pairs as f64;
            let chi2: f64 = (0..n * n)
                .filter(|k| k / n != k % n)
                .map(|k| {
                    let d = counts[k] as f64 - expected;
                    d * d / expected
                })
                .sum();
            assert!(chi2 < crit, "n={n}: chi2={chi2} >= {crit}");
        }
    }

    #[test]
    fn null_protocol_multiset_unchanged() {
        let proto = Null;
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut cfg = Configuration::from_inputs(&proto, &[(); 5], &mut rng);
        for _ in 0..1000 {
            step(&mut cfg, &proto, &mut rng);
        }
        assert_eq!(cfg.interactions, 1000);
        assert_eq!(cfg.agents.len(), 5);
    }

    #[test]
    fn budget_zero_reports_empty_run() {
        let proto = Epidemic;
        let mut cfg = epidemic_config(10);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let report = run_until(
            &mut cfg,
            &proto,
            |c| c.agents.iter().all(|&a| a),
            RunOptions::new(0).tail(0),
            &mut rng,
        );
        assert_eq!(report.interactions, 0);
        assert_eq!(report.converged_at, None);
        assert!(report.budget_exhausted);
    }

    #[test]
    fn epidemic_n2_takes_exactly_one_interaction() {
        let proto = Epidemic;
        for seed in 0..20 {
            let mut cfg = epidemic_config(2);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let report = run_until(
                &mut cfg,
                &proto,
                |c| c.agents.iter().all(|&a| a),
                RunOptions::new(1000),
                &mut rng,
            );
            assert_eq!(report.stopped_at, Some(1));
        }
    }

    /// Oracle: E[T_n] = (n-1)·H_{n-1}; at n=100 that is 99·H_99 ≈ 513.
    #[test]
    fn epidemic_mean_matches_harmonic_formula() {
        let proto = Epidemic;
        let n = 100;
        let trials = 1000u64;
        let mut total = 0u64;
        for seed in 0..trials {
            let mut cfg = epidemic_config(n);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let report = run_until(
                &mut cfg,
                &proto,
                |c| c.agents.iter().all(|&a| a),
                RunOptions::new(1_000_000).tail(0),
                &mut rng,
            );
            total += report.stopped_at.expect("epidemic must finish");
        }
        let mean = total as f64 / trials as f64;
        let expected: f64 = (n as f64 - 1.0) * (1..n).map(|k| 1.0 / k as f64).sum::<f64>();
        assert!(
            (mean - expected).abs() / expected < 0.05,
            "mean {mean} vs {expected}"
        );
    }

    #[test]
    fn parallel_time_is_two_k_over_n() {
        let proto = Null;
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut cfg = Configuration::from_inputs(&proto, &[(); 8], &mut rng);
        let report = run_until(
            &mut cfg,
            &proto,
            |_| false,
            RunOptions::new(1234).stride(7).tail(0),
            &mut rng,
        );
        assert_eq!(report.interactions, 1234);
        assert_eq!(report.parallel_time, 2.0 * 1234.0 / 8.0);
    }

    #[test]
    fn identical_seeds_give_identical_reports() {
        let proto = Epidemic;
        let run = |seed| {
            let mut cfg = epidemic_config(30);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            run_until(
                &mut cfg,
                &proto,
                |c| c.agents.iter().all(|&a| a),
                RunOptions::new(100_000),
                &mut rng,
            )
        };
        assert_eq!(run(42), run(42));
        assert_ne!(run(42).stopped_at, run(43).stopped_at);
    }

    #[test]
    fn snapshots_sample_at_stride() {
        let proto = Epidemic;
        let mut cfg = epidemic_config(10);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let metric = |s: &bool| if *s { 1.0 } else { 0.0 };
        let opts = RunOptions {
            budget: 200,
            confirmation_tail: Some(0),
            check_stride: 1,
            snapshot_stride: Some(1.0),
            metric: Some(&metric),
        };
        let report = run_until(&mut cfg, &proto, |_| false, opts, &mut rng);
        assert!(!report.snapshots.is_empty());
        assert_eq!(report.snapshots[0].time, 0.0);
        for w in report.snapshots.windows(2) {
            assert_eq!(w[1].time - w[0].time, 1.0);
        }
        let last = report.snapshots.last().unwrap();
        assert_eq!(last.min, 1.0); // fully infected well before 200 interactions
    }
}
