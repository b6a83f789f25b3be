//! Stably composable leader election: fratricide plus base-station follower
//! counting, wrapped around an arbitrary leader-driven downstream protocol
//! that gets restarted until the leader has counted everyone.

use crate::core::{Protocol, Role};
use rand::RngCore;
use std::fmt::Debug;

/// A leader-driven protocol: initial states are an input symbol plus a
/// leader/follower designation that a composition layer may reassign on
/// restarts.
pub trait LeaderDriven: Protocol {
    /// Input symbol without the leader designation.
    type Sym: Clone + PartialEq + Debug;

    fn init_with_role(&self, sym: &Self::Sym, leader: bool) -> Self::State;
}

/// The leader broadcasts its value; everyone else copies the first value
/// they see. The smallest useful leader-driven downstream.
pub struct BitBroadcast;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct BitBroadcastState {
    pub leader: bool,
    pub val: Option<u8>,
}

impl Protocol for BitBroadcast {
    type State = BitBroadcastState;
    type Msg = Option<u8>;
    type Input = (u8, bool);
    type Output = Option<u8>;

    fn init(&self, &(sym, leader): &(u8, bool), _rng: &mut dyn RngCore) -> Self::State {
        BitBroadcastState { leader, val: leader.then_some(sym) }
    }

    fn message(&self, s: &Self::State) -> Option<u8> {
        s.val
    }

    fn delta(&self, own: &mut Self::State, observed: &Option<u8>, _role: Role, _rng: &mut dyn RngCore) {
        if own.val.is_none() {
            own.val = *observed;
        }
    }

    fn message_alphabet(&self) -> Vec<Option<u8>> {
        vec![None, Some(0), Some(1)]
    }

    fn output(&self, s: &Self::State) -> Option<u8> {
        s.val
    }

    fn correct(&self, agents: &[Self::State]) -> bool {
        agents
            .iter()
            .find(|a| a.leader)
            .map(|l| agents.iter().all(|a| a.val == l.val && a.val.is_some()))
            .unwrap_or(false)
    }
}

impl LeaderDriven for BitBroadcast {
    type Sym = u8;

    fn init_with_role(&self, sym: &u8, leader: bool) -> Self::State {
        BitBroadcastState { leader, val: leader.then_some(*sym) }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Signal {
    Restart,
    Go,
}

pub struct SceState<P: LeaderDriven> {
    pub is_leader: bool,
    pub phase: u8,
    pub signal: Signal,
    pub c: [u64; 2],
    pub count: u64,
    pub i_p: P::Sym,
    pub q_p: P::State,
}

// Manual impls: deriving would wrongly require the protocol type itself to be
// Clone/Debug rather than its associated state and symbol types.
impl<P: LeaderDriven> Clone for SceState<P> {
    fn clone(&self) -> Self {
        SceState {
            is_leader: self.is_leader,
            phase: self.phase,
            signal: self.signal,
            c: self.c,
            count: self.count,
            i_p: self.i_p.clone(),
            q_p: self.q_p.clone(),
        }
    }
}

impl<P: LeaderDriven> Debug for SceState<P>
where
    P::State: Debug,
{
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("SceState")
            .field("is_leader", &self.is_leader)
            .field("phase", &self.phase)
            .field("signal", &self.signal)
            .field("c", &self.c)
            .field("count", &self.count)
            .field("i_p", &self.i_p)
            .field("q_p", &self.q_p)
            .finish()
    }
}

impl<P: LeaderDriven> PartialEq for SceState<P>
where
    P::State: PartialEq,
{
    fn eq(&self, other: &Self) -> bool {
        self.is_leader == other.is_leader
            && self.phase == other.phase
            && self.signal == other.signal
            && self.c == other.c
            && self.count == other.count
            && self.i_p == other.i_p
            && self.q_p == other.q_p
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SceMsg<M> {
    pub is_leader: bool,
    pub phase: u8,
    pub signal: Signal,
    pub m_p: M,
}

pub struct Sce<P: LeaderDriven> {
    pub down: P,
}

impl<P: LeaderDriven> Sce<P> {
    pub fn new(down: P) -> Self {
        Sce { down }
    }

    fn reinit_leader(&self, s: &mut SceState<P>) {
        s.c = [0, 0];
        s.count = 0;
        s.phase = 0;
        s.signal = Signal::Restart;
        s.q_p = self.down.init_with_role(&s.i_p, true);
    }

    /// Idle threshold 6·c·ln(c) + 1, with ln clamped to 0 for c in {0, 1}.
    fn idle_threshold(c: u64) -> u64 {
        let ln = if c <= 1 { 0.0 } else { (c as f64).ln() };
        (6.0 * c as f64 * ln).floor() as u64 + 1
    }
}

impl<P: LeaderDriven> Protocol for Sce<P> {
    type State = SceState<P>;
    type Msg = SceMsg<P::Msg>;
    type Input = P::Sym;
    type Output = P::Output;

    fn init(&self, sym: &P::Sym, _rng: &mut dyn RngCore) -> Self::State {
        SceState {
            is_leader: true,
            phase: 0,
            signal: Signal::Restart,
            c: [0, 0],
            count: 0,
            i_p: sym.clone(),
            q_p: self.down.init_with_role(sym, true),
        }
    }

    fn message(&self, s: &Self::State) -> Self::Msg {
        SceMsg {
            is_leader: s.is_leader,
            phase: s.phase,
            signal: s.signal,
            m_p: self.down.message(&s.q_p),
        }
    }

    fn delta(&self, v: &mut Self::State, m: &Self::Msg, role: Role, rng: &mut dyn RngCore) {
        // Both agents signalling go execute the downstream transition.
        if v.signal == Signal::Go && m.signal == Signal::Go {
            self.down.delta(&mut v.q_p, &m.m_p, role, rng);
        }
        if v.is_leader && m.is_leader {
            if role == Role::Responder {
                v.is_leader = false; // fratricide
            } else {
                self.reinit_leader(v); // surviving leader starts over
            }
        } else if v.is_leader {
            // Base-station counting: the leader cycles followers between
            // phases, tracking how many sit in each.
            let b = v.phase as usize;
            if m.phase == v.phase {
                v.count = 0;
                v.c[1 - b] += 1;
                if v.c[b] == 0 {
                    // The population estimate c0 + c1 just grew: everyone
                    // counted so far must restart the downstream protocol.
                    v.signal = Signal::Restart;
                    v.q_p = self.down.init_with_role(&v.i_p, true);
                } else {
                    v.c[b] -= 1;
                    if v.c[b] == 0 {
                        v.signal = Signal::Go; // all counted agents restarted
                    }
                }
            } else if v.count >= Self::idle_threshold(v.c[1 - b]) {
                v.count = 0;
                v.phase = 1 - v.phase;
            } else if v.c[b] == 0 {
                v.count += 1;
            }
        } else if m.is_leader {
            v.phase = 1 - m.phase;
            v.signal = m.signal;
            if v.signal == Signal::Restart {
                v.q_p = self.down.init_with_role(&v.i_p, false);
            }
        }
    }

    fn message_alphabet(&self) -> Vec<Self::Msg> {
        let mut out = Vec::new();
        for is_leader in [false, true] {
            for phase in 0..2 {
                for signal in [Signal::Restart, Signal::Go] {
                    for m_p in self.down.message_alphabet() {
                        out.push(SceMsg { is_leader, phase, signal, m_p });
                    }
                }
            }
        }
        out
    }

    fn output(&self, s: &Self::State) -> P::Output {
        self.down.output(&s.q_p)
    }

    fn correct(&self, agents: &[Self::State]) -> bool {
        agents.iter().filter(|a| a.is_leader).count() == 1
            && self
                .down
                .correct(&agents.iter().map(|a| a.q_p.clone()).collect::<Vec<_>>())
    }
}

/// One instrumented run: per-interaction bookkeeping that records downstream
/// resets and validates that every downstream state change is either a reset
/// or a transition between two agents that were both signalling go.
pub struct SceRunReport<P: LeaderDriven> {
    pub interactions: u64,
    pub leader_idx: Option<usize>,
    /// c0 + c1 of the unique leader, if there is one.
    pub leader_count_sum: Option<u64>,
    /// Interaction index of the last downstream reset anywhere.
    pub last_reset_at: Option<u64>,
    pub go_discipline_valid: bool,
    pub final_outputs: Vec<P::Output>,
}

pub fn run_sce_instrumented<P>(
    proto: &Sce<P>,
    inputs: &[P::Sym],
    budget: u64,
    rng: &mut rand_chacha::ChaCha8Rng,
) -> SceRunReport<P>
where
    P: LeaderDriven,
    P::State: PartialEq,
{
    use crate::core::Configuration;

    let mut cfg: Configuration<Sce<P>> = Configuration::from_inputs(proto, inputs, rng);
    let n = cfg.n();
    let mut last_reset_at = None;
    let mut go_discipline_valid = true;

    for t in 1..=budget {
        let (i, j) = crate::engine::draw_pair(n, rng);
        let pre_i = cfg.agents[i].clone();
        let pre_j = cfg.agents[j].clone();
        crate::core::apply_interaction(&mut cfg, i, j, proto, rng).unwrap();
        let both_go = pre_i.signal == Signal::Go && pre_j.signal == Signal::Go;
        for (pre, post) in [(&pre_i, &cfg.agents[i]), (&pre_j, &cfg.agents[j])] {
            if post.q_p != pre.q_p {
                let is_reset = post.q_p == proto.down.init_with_role(&post.i_p, post.is_leader)
                    && post.signal == Signal::Restart;
                if is_reset {
                    last_reset_at = Some(t);
                } else if !both_go {
                    go_discipline_valid = false;
                }
            }
        }
    }

    let leaders: Vec<usize> = (0..n).filter(|&k| cfg.agents[k].is_leader).collect();
    let leader_idx = (leaders.len() == 1).then(|| leaders[0]);
    SceRunReport {
        interactions: budget,
        leader_idx,
        leader_count_sum: leader_idx.map(|k| cfg.agents[k].c[0] + cfg.agents[k].c[1]),
        last_reset_at,
        go_discipline_valid,
        final_outputs: cfg.outputs(proto),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn proto() -> Sce<BitBroadcast> {
        Sce::new(BitBroadcast)
    }

    fn msg(is_leader: bool, phase: u8, signal: Signal) -> SceMsg<Option<u8>> {
        SceMsg { is_leader, phase, signal, m_p: None }
    }

    #[test]
    fn fratricide_demotes_responder_and_reinitializes_initiator() {
        let p = proto();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let mut a = p.init(&1, &mut rng);
        a.c = [3, 2];
        a.count = 7;
        a.signal = Signal::Go;
        let m = msg(true, 0, Signal::Go);
        // initiator survives and resets
        let mut surv = a.clone();
        p.delta(&mut surv, &m, Role::Initiator, &mut rng);
        assert!(surv.is_leader);
        assert_eq!(surv.c, [0, 0]);
        assert_eq!(surv.count, 0);
        assert_eq!(surv.signal, Signal::Restart);
        // responder demotes, keeping its counters
        let mut dead = a.clone();
        p.delta(&mut dead, &m, Role::Responder, &mut rng);
        assert!(!dead.is_leader);
        assert_eq!(dead.c, [3, 2]);
    }

    #[test]
    fn leader_counts_same_phase_follower_and_signals_restart_on_growth() {
        let p = proto();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let mut l = p.init(&0, &mut rng);
        l.signal = Signal::Go;
        // c0 = 0: seeing a same-phase follower must grow the estimate.
        p.delta(&mut l, &msg(false, 0, Signal::Go), Role::Initiator, &mut rng);
        assert_eq!(l.c, [0, 1]);
        assert_eq!(l.signal, Signal::Restart);
        // Now with c0 > 0 the leader decrements instead and goes go at zero.
        l.c = [1, 5];
        p.delta(&mut l, &msg(false, 0, Signal::Restart), Role::Initiator, &mut rng);
        assert_eq!(l.c, [0, 6]);
        assert_eq!(l.signal, Signal::Go);
    }

    #[test]
    fn leader_idle_count_flips_phase_at_threshold() {
        let p = proto();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let mut l = p.init(&0, &mut rng);
        l.c = [0, 2];
        // threshold for c=2: floor(12 ln 2) + 1 = 9
        assert_eq!(Sce::<BitBroadcast>::idle_threshold(2), 9);
        for expect in 1..=9u64 {
            p.delta(&mut l, &msg(false, 1, Signal::Restart), Role::Initiator, &mut rng);
            assert_eq!(l.count, expect);
            assert_eq!(l.phase, 0);
        }
        // count has reached the threshold; the next idle sighting flips
        p.delta(&mut l, &msg(false, 1, Signal::Restart), Role::Initiator, &mut rng);
        assert_eq!(l.phase, 1);
        assert_eq!(l.count, 0);
    }

    #[test]
    fn idle_threshold_clamps_small_counts() {
        assert_eq!(Sce::<BitBroadcast>::idle_threshold(0), 1);
        assert_eq!(Sce::<BitBroadcast>::idle_threshold(1), 1);
    }

    #[test]
    fn follower_adopts_opposite_phase_and_signal() {
        let p = proto();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let mut f = p.init(&1, &mut rng);
        f.is_leader = false;
        f.signal = Signal::Go;
        f.q_p = BitBroadcastState { leader: false, val: Some(1) };
        p.delta(&mut f, &msg(true, 1, Signal::Restart), Role::Responder, &mut rng);
        assert_eq!(f.phase, 0);
        assert_eq!(f.signal, Signal::Restart);
        assert_eq!(f.q_p, BitBroadcastState { leader: false, val: None }); // reset
        p.delta(&mut f, &msg(true, 1, Signal::Go), Role::Responder, &mut rng);
        assert_eq!(f.signal, Signal::Go);
    }

    #[test]
    fn downstream_runs_only_between_go_agents() {
        let p = proto();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let mut f = p.init(&0, &mut rng);
        f.is_leader = false;
        f.q_p = BitBroadcastState { leader: false, val: None };
        // partner broadcasting a value but not in go: no adoption
        let mut m = msg(false, 0, Signal::Restart);
        m.m_p = Some(1);
        p.delta(&mut f, &m, Role::Initiator, &mut rng);
        assert_eq!(f.q_p.val, None);
        // both go: adoption happens
        f.signal = Signal::Go;
        let mut m = msg(false, 0, Signal::Go);
        m.m_p = Some(1);
        p.delta(&mut f, &m, Role::Initiator, &mut rng);
        assert_eq!(f.q_p.val, Some(1));
    }

    #[test]
    fn n2_single_fratricide_stabilizes_immediately() {
        let p = proto();
        for seed in 0..20 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let report = run_sce_instrumented(&p, &[0, 1], 4000, &mut rng);
            let leader = report.leader_idx.expect("unique leader");
            assert_eq!(report.leader_count_sum, Some(1));
            assert!(report.go_discipline_valid);
            let expect = Some(leader as u8);
            assert!(report.final_outputs.iter().all(|o| *o == expect));
        }
    }

    #[test]
    fn broadcast_tail_is_correct_at_small_n() {
        let p = proto();
        for (n, seeds) in [(4usize, 25u64), (10, 10)] {
            let budget = (200.0 * n as f64 * (n as f64).ln()) as u64;
            let inputs: Vec<u8> = (0..n).map(|k| (k % 2) as u8).collect();
            for seed in 0..seeds {
                let mut rng = ChaCha8Rng::seed_from_u64(900 + seed);
                let report = run_sce_instrumented(&p, &inputs, budget, &mut rng);
                let leader = report.leader_idx.expect("unique leader");
                assert_eq!(report.leader_count_sum, Some(n as u64 - 1), "n={n} seed={seed}");
                assert!(report.go_discipline_valid);
                let expect = Some(inputs[leader]);
                assert!(
                    report.final_outputs.iter().all(|o| *o == expect),
                    "n={n} seed={seed}: {:?} != {expect:?}",
                    report.final_outputs
                );
            }
        }
    }
}
