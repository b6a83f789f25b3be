//! Leader-driven exact counting by interval halving, plus the early-exit
//! log-estimate variant and input-vector counting built on the same
//! machinery.
//!
//! Every agent tracks an interval [a, a+2^-r] containing the population-wide
//! average mass, where a is an exact dyadic rational. Per round the agents
//! average their weights, spread the minimum weight, then shift/halve the
//! interval. Rounds are paced by a leader-driven clock whose hour and phase
//! ride in the message.

use crate::core::{Protocol, Role};
use num_bigint::BigUint;
use num_integer::Integer;
use num_traits::{One, Zero};
use rand::RngCore;

/// [a, a + 2^-r] with a = a_num / 2^(r+2); a has r+2 bits after the binary
/// point, so the upper end is (a_num + 4) / 2^(r+2).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DyadicInterval {
    pub a_num: BigUint,
    pub r: u32,
}

impl DyadicInterval {
    pub fn unit() -> Self {
        DyadicInterval { a_num: BigUint::zero(), r: 0 }
    }

    /// Exponent of the common denominator 2^e.
    pub fn e(&self) -> u32 {
        self.r + 2
    }

    fn denom(&self) -> BigUint {
        BigUint::one() << self.e()
    }

    fn upper_num(&self) -> BigUint {
        &self.a_num + 4u32
    }

    /// a += w_min/(4·2^r), r += 1. The numerator doubles because the
    /// denominator exponent grows by one.
    pub fn shift_halve(&mut self, w_min: u8) {
        self.a_num = (&self.a_num + w_min) << 1;
        self.r += 1;
        debug_assert!(self.upper_num() <= self.denom());
    }

    /// The unique n >= 1 with 1/n inside the interval, if exactly one exists.
    pub fn unique_reciprocal(&self) -> Option<u64> {
        if self.a_num.is_zero() {
            return None; // [0, b] holds every sufficiently large n
        }
        // 1/n >= a  <=>  n <= 2^e / a_num;  1/n <= a + 2^-r  <=>  n >= 2^e / (a_num + 4)
        let n_max = self.denom().div_floor(&self.a_num);
        let n_min = self.denom().div_ceil(&self.upper_num());
        (n_min == n_max && !n_max.is_zero()).then(|| u64::try_from(&n_max).unwrap())
    }

    /// The unique k >= 0 with k/n inside the interval, if exactly one exists.
    pub fn unique_fraction(&self, n: u64) -> Option<u64> {
        let k_min = (&self.a_num * n).div_ceil(&self.denom());
        let k_max = (self.upper_num() * n).div_floor(&self.denom());
        (k_min == k_max).then(|| u64::try_from(&k_max).unwrap())
    }

    /// Exponents k with 2^-k inside the interval; `None` when infinitely
    /// many (a = 0).
    pub fn powers_of_two(&self) -> Option<Vec<u32>> {
        if self.a_num.is_zero() {
            return None;
        }
        let upper = self.upper_num();
        let mut ks = Vec::new();
        for k in 0..=self.e() {
            let p = BigUint::one() << (self.e() - k);
            if p >= self.a_num && p <= upper {
                ks.push(k);
            }
        }
        Some(ks)
    }
}

/// Exponent chosen by the early-exit rule: the unique power of two in the
/// current interval, or — when the interval skipped past every power — the
/// smaller exponent among those the previous round's interval contained.
pub fn unique_power_of_two(
    interval: &DyadicInterval,
    previous: Option<&DyadicInterval>,
) -> Option<u64> {
    match interval.powers_of_two() {
        None => None,
        Some(ks) if ks.len() == 1 => Some(ks[0] as u64),
        Some(ks) if ks.is_empty() => {
            let prev = previous?;
            let prev_ks = prev.powers_of_two()?;
            prev_ks.first().map(|&k| k as u64)
        }
        Some(_) => None,
    }
}

/// i, j -> (floor((i+j)/2), ceil((i+j)/2)): initiator rounds down.
pub fn average_weights(w_init: u8, w_resp: u8) -> (u8, u8) {
    let s = w_init + w_resp;
    (s / 2, s.div_ceil(2))
}

pub fn end_averaging(w: u8) -> u8 {
    w.min(3)
}

pub fn propagate_min(own: u8, observed: u8) -> u8 {
    own.min(observed)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FailReason {
    /// An agent fell two phases behind the clock.
    Desync,
    /// Weight spread exceeded 2 at an Updating boundary, so the halved
    /// interval can no longer hold every agent's mass.
    WeightSpread,
    /// Two agents both claim the leader bit.
    TwoLeaders,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Mode {
    /// Terminate when the interval pins a unique 1/n; result = n.
    ExactCount,
    /// Terminate on the unique-power-of-two rule; result = k ≈ log2 n.
    LogEstimate,
    /// Terminate when the interval pins a unique k/n; result = k.
    FractionCount { n: u64 },
}

#[derive(Clone, Debug, PartialEq)]
pub struct CountingState {
    pub leader: bool,
    pub w: u8,
    pub w_min: u8,
    pub interval: DyadicInterval,
    pub prev_interval: Option<DyadicInterval>,
    /// Absolute phase index: even = Averaging, odd = Updating; r = pi/2.
    pub pi: u32,
    pub hour: u8,
    pub result: Option<u64>,
    pub failed: Option<FailReason>,
}

impl CountingState {
    pub fn averaging(&self) -> bool {
        self.pi % 2 == 0
    }

    /// Mass numerator over the common denominator 2^e: a_num + w.
    pub fn mass_num(&self) -> BigUint {
        &self.interval.a_num + self.w
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct CountingMsg {
    pub leader: bool,
    pub w: u8,
    pub w_min: u8,
    /// Phase index mod 4; two bits are enough to tell "one ahead" from
    /// "one behind" and to notice a two-phase desync.
    pub pi4: u8,
    pub hour: u8,
}

#[derive(Clone, Copy, Debug)]
pub struct CountingInput {
    pub leader: bool,
    /// Starts with weight 4 (mass 1) instead of 0.
    pub weighted: bool,
}

pub struct Counting {
    pub mode: Mode,
    /// Clock modulus: hours per phase.
    pub m: u8,
}

impl Counting {
    pub fn exact() -> Self {
        Counting { mode: Mode::ExactCount, m: 16 }
    }

    pub fn log_estimate() -> Self {
        Counting { mode: Mode::LogEstimate, m: 16 }
    }

    pub fn fraction(n: u64) -> Self {
        Counting { mode: Mode::FractionCount { n }, m: 16 }
    }

    /// Phase-boundary bookkeeping for one agent moving from phase `pi` to
    /// `pi + 1`.
    fn advance_phase(&self, s: &mut CountingState) {
        if s.averaging() {
            s.w_min = end_averaging(s.w);
        } else {
            if s.w < s.w_min || s.w - s.w_min > 2 {
                s.failed = Some(FailReason::WeightSpread);
                return;
            }
            s.prev_interval = Some(s.interval.clone());
            let w_min = s.w_min;
            s.interval.shift_halve(w_min);
            s.w = 2 * (s.w - w_min);
            s.result = match self.mode {
                Mode::ExactCount => s.interval.unique_reciprocal(),
                Mode::LogEstimate => {
                    unique_power_of_two(&s.interval, s.prev_interval.as_ref()).or(s.result)
                }
                Mode::FractionCount { n } => s.interval.unique_fraction(n),
            };
        }
        s.pi += 1;
    }

    pub fn all_decided(&self, agents: &[CountingState]) -> bool {
        agents.iter().all(|a| a.result.is_some())
    }

    pub fn any_failed(&self, agents: &[CountingState]) -> Option<FailReason> {
        agents.iter().find_map(|a| a.failed)
    }
}

impl Protocol for Counting {
    type State = CountingState;
    type Msg = CountingMsg;
    type Input = CountingInput;
    type Output = Option<u64>;

    fn init(&self, input: &CountingInput, _rng: &mut dyn RngCore) -> CountingState {
        let w = if input.weighted { 4 } else { 0 };
        CountingState {
            leader: input.leader,
            w,
            w_min: end_averaging(w),
            interval: DyadicInterval::unit(),
            prev_interval: None,
            pi: 0,
            hour: 0,
            result: None,
            failed: None,
        }
    }

    fn message(&self, s: &CountingState) -> CountingMsg {
        CountingMsg {
            leader: s.leader,
            w: s.w,
            w_min: s.w_min,
            pi4: (s.pi % 4) as u8,
            hour: s.hour,
        }
    }

    fn delta(&self, own: &mut CountingState, m: &CountingMsg, role: Role, _rng: &mut dyn RngCore) {
        if own.failed.is_some() {
            return;
        }
        let dp = (m.pi4 + 4 - (own.pi % 4) as u8) % 4;
        match dp {
            2 => own.failed = Some(FailReason::Desync),
            1 => {
                // Partner is one phase ahead: catch up and adopt its hour.
                self.advance_phase(own);
                own.hour = m.hour;
            }
            0 => {
                if own.leader && m.leader {
                    own.failed = Some(FailReason::TwoLeaders);
                    return;
                }
                // Same phase: payload first, on pre-interaction weights.
                if own.averaging() {
                    let (wi, wr) = match role {
                        Role::Initiator => average_weights(own.w, m.w),
                        Role::Responder => average_weights(m.w, own.w),
                    };
                    own.w = if role == Role::Initiator { wi } else { wr };
                } else {
                    own.w_min = propagate_min(own.w_min, m.w_min);
                }
                // Clock: the leader ticks when it meets a caught-up agent;
                // followers chase the highest hour they have seen.
                if own.leader {
                    if m.hour >= own.hour {
                        own.hour += 1;
                        if own.hour == self.m {
                            own.hour = 0;
                            self.advance_phase(own);
                        }
                    }
                } else if m.hour > own.hour {
                    own.hour = m.hour;
                }
            }
            _ => {} // partner one phase behind: nothing to do
        }
    }

    fn message_alphabet(&self) -> Vec<CountingMsg> {
        let mut out = Vec::new();
        for leader in [false, true] {
            for w in 0..=4 {
                for w_min in 0..=3 {
                    for pi4 in 0..4 {
                        for hour in 0..self.m {
                            out.push(CountingMsg { leader, w, w_min, pi4, hour });
                        }
                    }
                }
            }
        }
        out
    }

    fn output(&self, s: &CountingState) -> Option<u64> {
        s.result
    }

    fn correct(&self, agents: &[CountingState]) -> bool {
        match self.mode {
            Mode::ExactCount => {
                let n = agents.len() as u64;
                agents.iter().all(|a| a.result == Some(n))
            }
            _ => self.all_decided(agents),
        }
    }
}

/// Per-agent outcome of the input-vector run: the population size and one
/// count per alphabet symbol.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct VectorRecord {
    pub n: u64,
    pub counts: Vec<u64>,
}

/// Count the input vector over a d-symbol alphabet. Agent 0 is the leader
/// (holding no symbol); `symbols[k]` is the symbol of agent k+1. Runs one
/// population-size instance then d-1 fraction instances sequentially; each
/// agent recovers the last symbol's count as n - 1 - (sum of the others).
/// Returns `None` when any sub-instance failed or exhausted its budget.
pub fn count_input_vector(
    symbols: &[u8],
    d: u8,
    budget_per_instance: u64,
    rng: &mut rand_chacha::ChaCha8Rng,
) -> Option<Vec<VectorRecord>> {
    use crate::core::Configuration;
    use crate::engine::{run_until, RunOptions};

    assert!(d >= 1);
    assert!(symbols.iter().all(|&s| s < d));
    let n = symbols.len() + 1;

    let run_instance = |proto: &Counting,
                        weighted: &dyn Fn(usize) -> bool,
                        rng: &mut rand_chacha::ChaCha8Rng|
     -> Option<Vec<u64>> {
        let inputs: Vec<CountingInput> = (0..n)
            .map(|k| CountingInput { leader: k == 0, weighted: weighted(k) })
            .collect();
        let mut cfg = Configuration::from_inputs(proto, &inputs, rng);
        let report = run_until(
            &mut cfg,
            proto,
            |c| proto.all_decided(&c.agents) || proto.any_failed(&c.agents).is_some(),
            RunOptions::new(budget_per_instance)
                .stride(n as u64)
                .tail(0),
            rng,
        );
        if !report.stopped() || proto.any_failed(&cfg.agents).is_some() {
            return None;
        }
        cfg.agents.iter().map(|a| a.result).collect()
    };

    let size_proto = Counting::exact();
    let sizes = run_instance(&size_proto, &|k| k == 0, rng)?;
    let n_counted = sizes[0];

    let mut per_symbol: Vec<Vec<u64>> = Vec::new();
    for x in 0..d.saturating_sub(1) {
        let proto = Counting::fraction(n_counted);
        let counts = run_instance(&proto, &|k| k > 0 && symbols[k - 1] == x, rng)?;
        per_symbol.push(counts);
    }

    Some(
        (0..n)
            .map(|k| {
                let mut counts: Vec<u64> = per_symbol.iter().map(|c| c[k]).collect();
                let rest: u64 = counts.iter().sum();
                counts.push(sizes[k] - 1 - rest);
                VectorRecord { n: sizes[k], counts }
            })
            .collect(),
    )
}
