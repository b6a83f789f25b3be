//! Monte-Carlo validators for the timing and distribution bounds, plus
//! time-series export.
//!
//! Every statistical check carries its bound, sample size, and sampling
//! allowance so reports are self-describing, and a check whose bound is
//! vacuous at the tested scale reports "uninformative" rather than a pass.

use crate::core::Configuration;
use crate::engine::{run_until, RunOptions, Snapshot};
use crate::junta::sample_level;
use crate::toy::Epidemic;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::io::{self, Write};

/// Outcome of comparing an empirical frequency against a theoretical bound.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Verdict {
    Pass,
    Fail,
    /// The bound exceeds 1 (or otherwise cannot discriminate) at this scale.
    Uninformative,
}

#[derive(Clone, Copy, Debug)]
pub struct BoundCheck {
    pub empirical: f64,
    pub bound: f64,
    /// Additive allowance for sampling noise, already included in the verdict.
    pub allowance: f64,
    pub samples: u64,
}

impl BoundCheck {
    pub fn verdict(&self) -> Verdict {
        if self.bound + self.allowance >= 1.0 {
            Verdict::Uninformative
        } else if self.empirical <= self.bound + self.allowance {
            Verdict::Pass
        } else {
            Verdict::Fail
        }
    }
}

/// Three binomial standard deviations around probability `p`.
pub fn binomial_allowance(p: f64, samples: u64) -> f64 {
    3.0 * (p * (1.0 - p) / samples as f64).sqrt()
}

pub fn harmonic(k: u64) -> f64 {
    (1..=k).map(|i| 1.0 / i as f64).sum()
}

#[derive(Clone, Debug)]
pub struct EpidemicSummary {
    pub n: usize,
    pub trials: u64,
    pub mean: f64,
    /// (n-1) * H_{n-1}, the exact expectation.
    pub expected: f64,
    /// Per delta in {0.5, 1}: empirical Pr[T > (1+delta) E] against the
    /// 2.5 ln(n) n^{-2 delta} tail bound.
    pub tails: Vec<(f64, BoundCheck)>,
}

/// Complete-infection times of the one-infected epidemic.
pub fn epidemic_stats(n: usize, trials: u64, seed: u64) -> EpidemicSummary {
    assert!(n >= 2);
    let proto = Epidemic;
    let expected = (n as f64 - 1.0) * harmonic(n as u64 - 1);
    let mut times = Vec::with_capacity(trials as usize);
    for t in 0..trials {
        let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(t));
        let mut inputs = vec![false; n];
        inputs[0] = true;
        let mut cfg = Configuration::from_inputs(&proto, &inputs, &mut rng);
        let report = run_until(
            &mut cfg,
            &proto,
            |c| c.agents.iter().all(|&a| a),
            RunOptions::new(u64::MAX).tail(0),
            &mut rng,
        );
        times.push(report.stopped_at.expect("epidemic always completes") as f64);
    }
    let mean = times.iter().sum::<f64>() / trials as f64;
    let tails = [0.5, 1.0]
        .into_iter()
        .map(|delta| {
            let cut = (1.0 + delta) * expected;
            let hits = times.iter().filter(|&&t| t > cut).count() as f64;
            let bound = 2.5 * (n as f64).ln() * (n as f64).powf(-2.0 * delta);
            let check = BoundCheck {
                empirical: hits / trials as f64,
                bound,
                allowance: binomial_allowance(bound.min(1.0), trials),
                samples: trials,
            };
            (delta, check)
        })
        .collect();
    EpidemicSummary { n, trials, mean, expected, tails }
}

#[derive(Clone, Debug)]
pub struct PartialEpidemicSummary {
    pub n: usize,
    pub alpha: f64,
    pub gamma: f64,
    pub trials: u64,
    pub mean_interactions: f64,
    pub mean_parallel_time: f64,
}

/// Epidemic growth from an alpha-fraction infected until a gamma-fraction is,
/// reported without a hard bound (the constants are not pinned down).
pub fn partial_epidemic_stats(
    n: usize,
    alpha: f64,
    gamma: f64,
    trials: u64,
    seed: u64,
) -> PartialEpidemicSummary {
    assert!(n >= 2 && alpha > 0.0 && alpha < gamma && gamma <= 1.0);
    let proto = Epidemic;
    let start = ((alpha * n as f64).ceil() as usize).max(1);
    let goal = ((gamma * n as f64).ceil() as usize).min(n);
    let mut total = 0u64;
    for t in 0..trials {
        let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(t));
        let mut inputs = vec![false; n];
        for i in &mut inputs[..start] {
            *i = true;
        }
        let mut cfg = Configuration::from_inputs(&proto, &inputs, &mut rng);
        let report = run_until(
            &mut cfg,
            &proto,
            |c| c.agents.iter().filter(|&&a| a).count() >= goal,
            RunOptions::new(u64::MAX).tail(0),
            &mut rng,
        );
        total += report.stopped_at.unwrap();
    }
    let mean = total as f64 / trials as f64;
    PartialEpidemicSummary {
        n,
        alpha,
        gamma,
        trials,
        mean_interactions: mean,
        mean_parallel_time: 2.0 * mean / n as f64,
    }
}

#[derive(Clone, Debug)]
pub struct CensusSummary {
    pub n: usize,
    pub interactions: u64,
    pub trials: u64,
    /// Mean fraction of agents whose interaction count fell below `lo`.
    pub below: f64,
    /// Mean fraction whose count exceeded `hi`.
    pub above: f64,
}

/// Scheduler-only census: after a fixed number of interactions, how many
/// agents sit outside a [lo, hi] count window. Reported without a hard bound.
pub fn interaction_census(
    n: usize,
    interactions: u64,
    lo: u64,
    hi: u64,
    trials: u64,
    seed: u64,
) -> CensusSummary {
    assert!(n >= 2);
    let mut below = 0u64;
    let mut above = 0u64;
    for t in 0..trials {
        let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(t));
        let mut counts = vec![0u64; n];
        for _ in 0..interactions {
            let (i, j) = crate::engine::draw_pair(n, &mut rng);
            counts[i] += 1;
            counts[j] += 1;
        }
        below += counts.iter().filter(|&&c| c < lo).count() as u64;
        above += counts.iter().filter(|&&c| c > hi).count() as u64;
    }
    let denom = (n as u64 * trials) as f64;
    CensusSummary {
        n,
        interactions,
        trials,
        below: below as f64 / denom,
        above: above as f64 / denom,
    }
}

#[derive(Clone, Debug)]
pub struct DriftSummary {
    pub n: usize,
    pub m: u64,
    pub b: u64,
    pub check: BoundCheck,
}

/// Interaction-count drift between two fixed agents: frequency of
/// max_t (C_i(t) - C_j(t)) > b before their joint count reaches m,
/// against the e^{-b^2 / 2m} bound.
///
/// Only interactions touching the pair matter, so the scheduler is sampled
/// conditioned on relevance: of the 4n-6 relevant ordered pairs, 2 hit both
/// agents and 2(n-2) hit each alone.
pub fn drift_stats(n: usize, m: u64, b: u64, trials: u64, seed: u64) -> DriftSummary {
    assert!(n >= 2);
    let both_w = 2u64;
    let solo_w = 2 * (n as u64 - 2);
    let total_w = both_w + 2 * solo_w;
    let mut hits = 0u64;
    for t in 0..trials {
        let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(t));
        let (mut ci, mut cj) = (0i64, 0i64);
        let mut peak = 0i64;
        while ((ci + cj) as u64) < m {
            let k = rng.gen_range(0..total_w);
            if k < both_w {
                ci += 1;
                cj += 1;
            } else if k < both_w + solo_w {
                ci += 1;
            } else {
                cj += 1;
            }
            peak = peak.max(ci - cj);
        }
        if peak > b as i64 {
            hits += 1;
        }
    }
    let bound = (-((b * b) as f64) / (2.0 * m as f64)).exp();
    let check = BoundCheck {
        empirical: hits as f64 / trials as f64,
        bound,
        allowance: binomial_allowance(bound.min(1.0), trials),
        samples: trials,
    };
    DriftSummary { n, m, b, check }
}

#[derive(Clone, Debug)]
pub struct LevelReport {
    pub n: u64,
    pub trials: u64,
    /// Mean count of agents at each level.
    pub mean_counts: Vec<f64>,
    /// Exclusive (lower, upper) expectation band per level i >= 1.
    pub bands: Vec<(f64, f64)>,
    /// Fraction of trials with any in-band level count outside its band.
    pub violation_rate: f64,
    /// Histogram over the per-trial maximum level.
    pub max_level_counts: std::collections::BTreeMap<u32, u64>,
}

/// Per-level occupancy of the geometric level distribution: level i holds
/// n (2^-2^{i-1}} - 2^{-2^i}) agents in expectation, inside the exclusive
/// band (n / 2^{2^{i-1}+2}, n / 2^{2^{i-1}}) for 1 <= i <= log2 log2 n.
pub fn level_histogram(n: u64, trials: u64, seed: u64) -> LevelReport {
    let max_i = ((n as f64).log2().log2()).floor() as u32;
    let bands: Vec<(f64, f64)> = (1..=max_i)
        .map(|i| {
            let e = (1u64 << (i - 1)) as f64;
            (n as f64 / 2f64.powf(e + 2.0), n as f64 / 2f64.powf(e))
        })
        .collect();
    let mut sums = vec![0u64; (max_i + 2) as usize];
    let mut violations = 0u64;
    let mut max_level_counts = std::collections::BTreeMap::new();
    for t in 0..trials {
        let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(t));
        let mut counts = vec![0u64; (max_i + 2) as usize];
        let mut max_level = 0u32;
        for _ in 0..n {
            let lv = sample_level(&mut rng);
            max_level = max_level.max(lv);
            if (lv as usize) < counts.len() {
                counts[lv as usize] += 1;
            }
        }
        *max_level_counts.entry(max_level).or_insert(0) += 1;
        let mut bad = false;
        for i in 1..=max_i {
            let c = counts[i as usize] as f64;
            let (lo, hi) = bands[(i - 1) as usize];
            if c <= lo || c >= hi {
                bad = true;
            }
        }
        if bad {
            violations += 1;
        }
        for (s, c) in sums.iter_mut().zip(&counts) {
            *s += c;
        }
    }
    LevelReport {
        n,
        trials,
        mean_counts: sums.iter().map(|&s| s as f64 / trials as f64).collect(),
        bands,
        violation_rate: violations as f64 / trials as f64,
        max_level_counts,
    }
}

/// Decimal formatting with six significant digits (no exponent notation).
pub fn format_sig6(x: f64) -> String {
    if x == 0.0 || !x.is_finite() {
        return format!("{x}");
    }
    let digits = x.abs().log10().floor() as i32;
    let decimals = (5 - digits).max(0) as usize;
    format!("{x:.decimals$}")
}

/// CSV rows (parallel_time, min, mean, max) for captured snapshots.
pub fn emit_timeseries<W: Write>(snapshots: &[Snapshot], out: &mut W) -> io::Result<()> {
    writeln!(out, "time,min,mean,max")?;
    for s in snapshots {
        writeln!(
            out,
            "{},{},{},{}",
            format_sig6(s.time),
            format_sig6(s.min),
            format_sig6(s.mean),
            format_sig6(s.max)
        )?;
    }
    Ok(())
}

/// A standalone SVG line chart of the min/mean/max series.
pub fn emit_svg_chart<W: Write>(snapshots: &[Snapshot], title: &str, out: &mut W) -> io::Result<()> {
    let (w, h, ml, mb) = (720.0, 420.0, 60.0, 40.0);
    let xs: Vec<f64> = snapshots.iter().map(|s| s.time).collect();
    let lo = snapshots.iter().map(|s| s.min).fold(f64::INFINITY, f64::min);
    let hi = snapshots.iter().map(|s| s.max).fold(f64::NEG_INFINITY, f64::max);
    let (lo, hi) = if snapshots.is_empty() || lo >= hi { (0.0, 1.0) } else { (lo, hi) };
    let xmax = xs.last().copied().unwrap_or(1.0).max(1e-9);
    let px = |t: f64| ml + (w - ml - 20.0) * t / xmax;
    let py = |v: f64| (h - mb) - (h - mb - 30.0) * (v - lo) / (hi - lo);
    writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}">"#
    )?;
    writeln!(out, r#"<rect width="{w}" height="{h}" fill="white"/>"#)?;
    writeln!(
        out,
        r#"<text x="{}" y="20" text-anchor="middle" font-family="sans-serif">{title}</text>"#,
        w / 2.0
    )?;
    writeln!(
        out,
        r#"<line x1="{ml}" y1="{0}" x2="{1}" y2="{0}" stroke="black"/>"#,
        h - mb,
        w - 20.0
    )?;
    writeln!(out, r#"<line x1="{ml}" y1="30" x2="{ml}" y2="{}" stroke="black"/>"#, h - mb)?;
    for (field, color) in [("min", "#2166ac"), ("mean", "#4d4d4d"), ("max", "#b2182b")] {
        let pts: Vec<String> = snapshots
            .iter()
            .map(|s| {
                let v = match field {
                    "min" => s.min,
                    "mean" => s.mean,
                    _ => s.max,
                };
                format!("{:.2},{:.2}", px(s.time), py(v))
            })
            .collect();
        if !pts.is_empty() {
            writeln!(
                out,
                r#"<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{}"/>"#,
                pts.join(" ")
            )?;
        }
    }
    writeln!(
        out,
        r#"<text x="{}" y="{}" text-anchor="middle" font-family="sans-serif" font-size="12">parallel time</text>"#,
        w / 2.0,
        h - 8.0
    )?;
    writeln!(out, "</svg>")
}

/// One protocol run per seed, with summaries recomputable from the raw
/// per-trial metrics.
#[derive(Clone, Debug, PartialEq)]
pub struct TrialBatch {
    pub protocol: String,
    pub n: usize,
    pub seeds: Vec<u64>,
    pub metrics: Vec<TrialMetric>,
    pub summary: BatchSummary,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TrialMetric {
    pub seed: u64,
    pub interactions: u64,
    pub converged: bool,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BatchSummary {
    pub trials: u64,
    pub success_rate: f64,
    /// Over converged trials only; zero when none converged.
    pub mean_interactions: f64,
    pub p50: u64,
    pub p95: u64,
}

pub fn summarize(metrics: &[TrialMetric]) -> BatchSummary {
    let mut done: Vec<u64> = metrics.iter().filter(|m| m.converged).map(|m| m.interactions).collect();
    done.sort_unstable();
    let pct = |p: f64| -> u64 {
        if done.is_empty() {
            0
        } else {
            done[((done.len() - 1) as f64 * p).round() as usize]
        }
    };
    BatchSummary {
        trials: metrics.len() as u64,
        success_rate: done.len() as f64 / metrics.len().max(1) as f64,
        mean_interactions: if done.is_empty() {
            0.0
        } else {
            done.iter().sum::<u64>() as f64 / done.len() as f64
        },
        p50: pct(0.5),
        p95: pct(0.95),
    }
}

impl TrialBatch {
    pub fn new(protocol: &str, n: usize, metrics: Vec<TrialMetric>) -> TrialBatch {
        let seeds = metrics.iter().map(|m| m.seed).collect();
        let summary = summarize(&metrics);
        TrialBatch { protocol: protocol.to_string(), n, seeds, metrics, summary }
    }

    /// Invariant: the stored summary equals one recomputed from raw metrics.
    pub fn consistent(&self) -> bool {
        self.seeds.len() == self.metrics.len() && summarize(&self.metrics) == self.summary
    }
}

/// Sanity helper used by tests: n(n-1) ordered pairs really are what the
/// scheduler draws from (exposed here so validators can share it).
pub fn pair_space(n: usize) -> u64 {
    (n as u64) * (n as u64 - 1)
}
