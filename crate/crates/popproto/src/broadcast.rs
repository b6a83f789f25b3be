//! Synchronous rounds over 1-bit messages, and convergent computation of
//! symmetric functions on top of them.
//!
//! Round r lasts 5r² of the agent's own interactions: a barrier of 2r²
//! silent steps, then 3r² steps in which the round's epidemic (broadcast) or
//! selection runs. A controller is invoked at each agent's round boundary to
//! digest the round outcome and pick the agent's stance for the next round.
//! Rounds lengthen over time, so only finitely many are desynchronized and
//! the suffix is failure-free with probability 1; the controllers recover
//! from early garbage by restarting.

use crate::core::{Configuration, Protocol, Role};
use rand::{Rng, RngCore};
use std::collections::BTreeMap;
use std::fmt::Debug;

/// Within-round agent status (Algorithm-4 state).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum AgentPhase {
    Broadcasting,
    Receiving,
    Received,
    Selecting,
    Candidate,
    Selected,
    Idle,
}

/// A controller's choice of stance at the start of a round.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StartPhase {
    Broadcast,
    Listen,
    Select,
    Candidate,
}

impl StartPhase {
    fn agent_phase(self) -> AgentPhase {
        match self {
            StartPhase::Broadcast => AgentPhase::Broadcasting,
            StartPhase::Listen => AgentPhase::Receiving,
            StartPhase::Select => AgentPhase::Selecting,
            StartPhase::Candidate => AgentPhase::Candidate,
        }
    }
}

/// What the finished round looked like from this agent's point of view. A
/// broadcaster counts its own epidemic as observed.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct RoundOutcome {
    pub observed_one: bool,
    pub selected: bool,
    pub chose: bool,
}

/// Per-round logic layered on the substrate: digest the finished round,
/// choose the stance for the next one.
pub trait RoundController {
    type Ctl: Clone;
    type Input: Clone;
    type Out: Clone + PartialEq + Debug;

    fn init(&self, input: &Self::Input, rng: &mut dyn RngCore) -> Self::Ctl;
    fn first_phase(&self, ctl: &Self::Ctl) -> StartPhase;
    fn round_update(
        &self,
        ctl: &mut Self::Ctl,
        finished: u64,
        outcome: &RoundOutcome,
        rng: &mut dyn RngCore,
    ) -> StartPhase;
    fn output(&self, ctl: &Self::Ctl) -> Self::Out;
    fn correct(&self, ctls: &[Self::Ctl]) -> bool;
}

#[derive(Clone, Debug, PartialEq)]
pub struct BcState<C> {
    pub tick: u64,
    pub r: u64,
    pub phase: AgentPhase,
    pub msg: bool,
    pub ctl: C,
}

/// The substrate as a population protocol with a true 1-bit message.
pub struct Rounds<C: RoundController> {
    pub ctrl: C,
}

impl<C: RoundController> Rounds<C> {
    pub fn new(ctrl: C) -> Self {
        Rounds { ctrl }
    }
}

pub fn outcome_of(phase: AgentPhase) -> RoundOutcome {
    RoundOutcome {
        observed_one: matches!(phase, AgentPhase::Received | AgentPhase::Broadcasting),
        selected: phase == AgentPhase::Selected,
        chose: phase == AgentPhase::Idle,
    }
}

impl<C: RoundController> Protocol for Rounds<C> {
    type State = BcState<C::Ctl>;
    type Msg = bool;
    type Input = C::Input;
    type Output = C::Out;

    fn init(&self, input: &Self::Input, rng: &mut dyn RngCore) -> Self::State {
        let ctl = self.ctrl.init(input, rng);
        let phase = self.ctrl.first_phase(&ctl).agent_phase();
        BcState { tick: 0, r: 1, phase, msg: false, ctl }
    }

    fn message(&self, s: &Self::State) -> bool {
        s.msg
    }

    fn delta(&self, v: &mut Self::State, m: &bool, _role: Role, rng: &mut dyn RngCore) {
        v.tick += 1;
        let rr = v.r * v.r;
        if v.tick < 2 * rr {
            // barrier phase: do nothing
        } else if v.tick == 2 * rr && v.phase == AgentPhase::Broadcasting {
            v.msg = true; // end of barrier: start epidemic
        } else if v.tick == 5 * rr {
            // end of interaction phase: hand the round to the controller
            let outcome = outcome_of(v.phase);
            let next = self.ctrl.round_update(&mut v.ctl, v.r, &outcome, rng);
            v.phase = next.agent_phase();
            v.r += 1;
            v.tick = 0;
            v.msg = false;
        } else if v.tick > 2 * rr && v.phase == AgentPhase::Receiving && *m {
            v.phase = AgentPhase::Received;
            v.msg = true;
        } else if v.tick == 3 * rr && v.phase == AgentPhase::Selecting {
            v.msg = true; // attempt to select
        } else if v.tick > 3 * rr && v.phase == AgentPhase::Selecting && !*m {
            v.msg = false; // selected whoever just saw the 1
            v.phase = AgentPhase::Idle;
        } else if v.tick > 2 * rr && v.phase == AgentPhase::Candidate && *m {
            v.phase = AgentPhase::Selected;
        }
    }

    fn message_alphabet(&self) -> Vec<bool> {
        vec![false, true]
    }

    fn output(&self, s: &Self::State) -> Self::Output {
        self.ctrl.output(&s.ctl)
    }

    fn correct(&self, agents: &[Self::State]) -> bool {
        let ctls: Vec<C::Ctl> = agents.iter().map(|a| a.ctl.clone()).collect();
        self.ctrl.correct(&ctls)
    }
}

// ---------------------------------------------------------------------------
// The 2-bit-per-cycle transmission channel shared by the controllers.

/// Channel symbol carried by one (round 5, round 6) bit pair.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ChannelSym {
    Bit(bool),
    Stop,
}

/// Pair encoding: 01 = 0, 10 = 1, 00 = stop.
pub fn encode_sym(sym: ChannelSym) -> (bool, bool) {
    match sym {
        ChannelSym::Bit(false) => (false, true),
        ChannelSym::Bit(true) => (true, false),
        ChannelSym::Stop => (false, false),
    }
}

/// 11 (two simultaneous transmitters) decodes as the fixed value 1.
pub fn decode_pair(b5: bool, b6: bool) -> ChannelSym {
    match (b5, b6) {
        (false, false) => ChannelSym::Stop,
        (false, true) => ChannelSym::Bit(false),
        (true, _) => ChannelSym::Bit(true),
    }
}

/// Values go over the wire as the binary digits of value+1, most significant
/// first, followed by stop. The +1 keeps every payload nonempty, so an empty
/// transmission unambiguously means "nothing to say".
pub fn value_bits(v: u64) -> Vec<bool> {
    let x = v + 1;
    let width = 64 - x.leading_zeros();
    (0..width).rev().map(|k| (x >> k) & 1 == 1).collect()
}

pub fn decode_value(bits: &[bool]) -> Option<u64> {
    if bits.is_empty() || bits.len() > 63 {
        return None;
    }
    let x = bits.iter().fold(0u64, |acc, &b| (acc << 1) | b as u64);
    x.checked_sub(1)
}

/// An outgoing transmission: pending bits, then one stop symbol.
#[derive(Clone, Debug, PartialEq)]
pub struct Tx {
    bits: Vec<bool>,
    pos: usize,
}

impl Tx {
    pub fn from_value(v: u64) -> Tx {
        Tx { bits: value_bits(v), pos: 0 }
    }

    /// Transmit nothing: a lone stop.
    pub fn empty() -> Tx {
        Tx { bits: Vec::new(), pos: 0 }
    }

    pub fn symbol(&self) -> ChannelSym {
        match self.bits.get(self.pos) {
            Some(&b) => ChannelSym::Bit(b),
            None => ChannelSym::Stop,
        }
    }

    /// Advance past the symbol just sent; true once the stop went out.
    pub fn advance(&mut self) -> bool {
        if self.pos < self.bits.len() {
            self.pos += 1;
            false
        } else {
            true
        }
    }
}

/// Leadership, restart, and channel bookkeeping common to every 7-round
/// controller. Round indices here are cycle positions (r-1) mod 7.
#[derive(Clone, Debug, PartialEq)]
pub struct Chan {
    /// Lost leadership last round; will broadcast the next round 2.
    pub cleared: bool,
    /// This agent wants to trigger a restart in the next round 2.
    pub restart_pending: bool,
    coin_heads: bool,
    /// A transmission (by anyone) is in progress: a non-stop pair was seen
    /// and no stop since.
    pub in_progress: bool,
    bit5: bool,
    pub tx: Option<Tx>,
    rx: Vec<bool>,
}

impl Chan {
    pub fn new() -> Chan {
        Chan {
            cleared: false,
            restart_pending: false,
            coin_heads: false,
            in_progress: false,
            bit5: false,
            tx: None,
            rx: Vec::new(),
        }
    }

    /// Digest a finished leadership round (cycle positions 0-2). Returns
    /// true when a round-2 restart was observed; the caller resets its own
    /// payload state on top of the channel reset done here.
    pub fn leadership(
        &mut self,
        rho: u64,
        outcome: &RoundOutcome,
        leader: &mut bool,
        eligible: bool,
    ) -> bool {
        match rho {
            0 => {
                if !*leader && !outcome.observed_one && eligible {
                    *leader = true; // no leader present: volunteer
                }
            }
            1 => {
                if *leader && !self.coin_heads && outcome.observed_one {
                    *leader = false; // lost the coin-flip duel
                    self.cleared = true;
                }
            }
            2 => {
                if outcome.observed_one {
                    self.tx = None;
                    self.in_progress = false;
                    self.rx.clear();
                    self.restart_pending = false;
                    return true;
                }
            }
            _ => unreachable!("leadership() covers cycle rounds 0-2"),
        }
        false
    }

    /// Digest a finished transmission round (cycle position 5 or 6). On a
    /// round 6 this decodes the pair; the return value reports a completed
    /// incoming payload and whether this agent's own transmission finished.
    pub fn transmission(&mut self, rho: u64, outcome: &RoundOutcome) -> ChanRound {
        let mut res = ChanRound { completed: None, tx_done: false };
        match rho {
            5 => self.bit5 = outcome.observed_one,
            6 => {
                match decode_pair(self.bit5, outcome.observed_one) {
                    ChannelSym::Bit(b) => {
                        self.rx.push(b);
                        self.in_progress = true;
                    }
                    ChannelSym::Stop => {
                        if self.in_progress {
                            res.completed = Some(decode_value(&self.rx));
                            self.rx.clear();
                            self.in_progress = false;
                        }
                    }
                }
                if let Some(tx) = &mut self.tx {
                    if tx.advance() {
                        self.tx = None;
                        res.tx_done = true;
                    }
                }
            }
            _ => unreachable!("transmission() covers cycle rounds 5-6"),
        }
        res
    }

    /// Stance for an upcoming round at cycle position 0-2 or 5-6; the
    /// payload rounds 3-4 are controller-specific.
    pub fn start_phase(&mut self, rho: u64, leader: bool, rng: &mut dyn RngCore) -> StartPhase {
        match rho {
            0 => {
                if leader {
                    StartPhase::Broadcast
                } else {
                    StartPhase::Listen
                }
            }
            1 => {
                self.coin_heads = leader && rng.gen::<bool>();
                if self.coin_heads {
                    StartPhase::Broadcast
                } else {
                    StartPhase::Listen
                }
            }
            2 => {
                let up = self.cleared || self.restart_pending;
                self.cleared = false;
                if up {
                    StartPhase::Broadcast
                } else {
                    StartPhase::Listen
                }
            }
            5 | 6 => {
                let raise = match &self.tx {
                    Some(tx) => {
                        let (b5, b6) = encode_sym(tx.symbol());
                        if rho == 5 {
                            b5
                        } else {
                            b6
                        }
                    }
                    None => false,
                };
                if raise {
                    StartPhase::Broadcast
                } else {
                    StartPhase::Listen
                }
            }
            _ => unreachable!("start_phase() covers cycle rounds 0-2 and 5-6"),
        }
    }

    /// No transmission underway and none of our own queued.
    pub fn quiet(&self) -> bool {
        !self.in_progress && self.tx.is_none() && !self.restart_pending
    }
}

impl Default for Chan {
    fn default() -> Self {
        Chan::new()
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ChanRound {
    /// A payload transmission just completed; None inside means the bits
    /// did not decode to a value (garbled).
    pub completed: Option<Option<u64>>,
    pub tx_done: bool,
}

// ---------------------------------------------------------------------------
// Gather-and-compute controller: elect a leader, collect every input over
// the channel, broadcast f(inputs), restart forever.

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SymFunc {
    Or,
    CountOnes,
    Max,
}

impl SymFunc {
    pub fn eval(&self, inputs: &[u64]) -> u64 {
        match self {
            SymFunc::Or => inputs.iter().any(|&x| x != 0) as u64,
            SymFunc::CountOnes => inputs.iter().filter(|&&x| x == 1).count() as u64,
            SymFunc::Max => inputs.iter().copied().max().unwrap_or(0),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct GatherCtl {
    pub chan: Chan,
    pub leader: bool,
    pub processed: bool,
    pub input: u64,
    saw_unprocessed: bool,
    /// The leader is currently transmitting its computed output.
    out_active: bool,
    gathered: Vec<u64>,
    last_completed: Option<u64>,
    pub output: Option<u64>,
}

pub struct Gather {
    pub f: SymFunc,
}

impl Gather {
    pub fn new(f: SymFunc) -> Self {
        Gather { f }
    }
}

impl RoundController for Gather {
    type Ctl = GatherCtl;
    type Input = u64;
    type Out = Option<u64>;

    fn init(&self, input: &u64, _rng: &mut dyn RngCore) -> GatherCtl {
        GatherCtl {
            chan: Chan::new(),
            leader: false,
            processed: false,
            input: *input,
            saw_unprocessed: false,
            out_active: false,
            gathered: Vec::new(),
            last_completed: None,
            output: None,
        }
    }

    fn first_phase(&self, _ctl: &GatherCtl) -> StartPhase {
        StartPhase::Listen
    }

    fn round_update(
        &self,
        ctl: &mut GatherCtl,
        finished: u64,
        outcome: &RoundOutcome,
        rng: &mut dyn RngCore,
    ) -> StartPhase {
        let rho = (finished - 1) % 7;
        match rho {
            0 | 1 | 2 => {
                let restart = ctl.chan.leadership(rho, outcome, &mut ctl.leader, true);
                if restart {
                    if ctl.leader {
                        ctl.gathered.clear();
                    } else {
                        // The transmission that ended just before a restart
                        // is the leader's output broadcast.
                        if ctl.last_completed.is_some() {
                            ctl.output = ctl.last_completed;
                        }
                        ctl.processed = false;
                    }
                    ctl.out_active = false;
                }
            }
            3 => {
                ctl.saw_unprocessed = outcome.observed_one;
                if ctl.leader && !outcome.observed_one && ctl.chan.quiet() && !ctl.out_active {
                    // every input collected: compute and broadcast the output
                    let mut all = ctl.gathered.clone();
                    all.push(ctl.input);
                    let v = self.f.eval(&all);
                    ctl.output = Some(v);
                    ctl.chan.tx = Some(Tx::from_value(v));
                    ctl.out_active = true;
                }
            }
            4 => {
                if outcome.selected {
                    if !ctl.processed {
                        ctl.processed = true;
                        ctl.chan.tx = Some(Tx::from_value(ctl.input));
                    } else {
                        ctl.chan.tx = Some(Tx::empty()); // nothing to report
                    }
                }
            }
            5 | 6 => {
                let res = ctl.chan.transmission(rho, outcome);
                if let Some(Some(v)) = res.completed {
                    ctl.last_completed = Some(v);
                    if ctl.leader && !ctl.out_active {
                        ctl.gathered.push(v);
                    }
                }
                if res.tx_done && ctl.out_active {
                    ctl.out_active = false;
                    ctl.chan.restart_pending = true;
                }
            }
            _ => unreachable!(),
        }

        let rho2 = finished % 7;
        match rho2 {
            3 => {
                if !ctl.leader && !ctl.processed {
                    StartPhase::Broadcast
                } else {
                    StartPhase::Listen
                }
            }
            4 => {
                if ctl.leader && ctl.saw_unprocessed && ctl.chan.quiet() && !ctl.out_active {
                    StartPhase::Select
                } else {
                    StartPhase::Candidate
                }
            }
            _ => ctl.chan.start_phase(rho2, ctl.leader, rng),
        }
    }

    fn output(&self, ctl: &GatherCtl) -> Option<u64> {
        ctl.output
    }

    fn correct(&self, ctls: &[GatherCtl]) -> bool {
        let inputs: Vec<u64> = ctls.iter().map(|c| c.input).collect();
        let expect = self.f.eval(&inputs);
        ctls.iter().all(|c| c.output == Some(expect))
    }
}

// ---------------------------------------------------------------------------
// Instrumentation: per-round tallies for the safety lemmas.

#[derive(Clone, Copy, Debug, Default)]
pub struct RoundTally {
    /// Some agent finished the round having raised a 1 on purpose
    /// (broadcasting or selecting).
    pub initiated: bool,
    /// Some agent finished the round having seen a 1.
    pub observed: bool,
    pub selected: u32,
    pub chose: u32,
    pub sel_initiators: u32,
}

#[derive(Clone, Debug, Default)]
pub struct RoundAudit {
    pub tally: BTreeMap<u64, RoundTally>,
}

impl RoundAudit {
    /// Record the two participants before an interaction is applied: an
    /// agent one tick from its round boundary is finishing that round, and
    /// its current phase is the round's outcome.
    pub fn observe<C: RoundController>(&mut self, cfg: &Configuration<Rounds<C>>, i: usize, j: usize) {
        for k in [i, j] {
            let s = &cfg.agents[k];
            if s.tick + 1 == 5 * s.r * s.r {
                let t = self.tally.entry(s.r).or_default();
                match s.phase {
                    AgentPhase::Broadcasting => t.initiated = true,
                    AgentPhase::Received => t.observed = true,
                    AgentPhase::Selecting => {
                        t.initiated = true;
                        t.sel_initiators += 1;
                    }
                    AgentPhase::Idle => {
                        t.initiated = true;
                        t.sel_initiators += 1;
                        t.chose += 1;
                    }
                    AgentPhase::Selected => {
                        t.observed = true;
                        t.selected += 1;
                    }
                    AgentPhase::Receiving | AgentPhase::Candidate => {}
                }
            }
        }
    }

    /// Rounds in which someone observed a 1 nobody initiated.
    pub fn ghost_rounds(&self) -> Vec<u64> {
        self.tally
            .iter()
            .filter(|(_, t)| t.observed && !t.initiated)
            .map(|(&r, _)| r)
            .collect()
    }

    /// Selection rounds with a single selector that did not end with
    /// exactly one selected agent.
    pub fn selection_violations(&self) -> Vec<u64> {
        self.tally
            .iter()
            .filter(|(_, t)| t.sel_initiators == 1 && t.chose == 1 && t.selected != 1)
            .map(|(&r, _)| r)
            .collect()
    }

    pub fn max_round(&self) -> u64 {
        self.tally.keys().next_back().copied().unwrap_or(0)
    }
}

/// Run with auditing; stops once `stop` holds or the budget runs out.
pub fn run_audited<C, F>(
    proto: &Rounds<C>,
    cfg: &mut Configuration<Rounds<C>>,
    mut stop: F,
    budget: u64,
    check_stride: u64,
    rng: &mut rand_chacha::ChaCha8Rng,
) -> RoundAudit
where
    C: RoundController,
    F: FnMut(&Configuration<Rounds<C>>) -> bool,
{
    let mut audit = RoundAudit::default();
    let n = cfg.n();
    let mut since_check = 0;
    for _ in 0..budget {
        let (i, j) = crate::engine::draw_pair(n, rng);
        audit.observe(cfg, i, j);
        crate::core::apply_interaction(cfg, i, j, proto, rng).unwrap();
        since_check += 1;
        if since_check >= check_stride {
            since_check = 0;
            if stop(cfg) {
                break;
            }
        }
    }
    audit
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn rng(seed: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(seed)
    }

    fn proto(f: SymFunc) -> Rounds<Gather> {
        Rounds::new(Gather::new(f))
    }

    fn agent(r: u64, tick: u64, phase: AgentPhase, msg: bool) -> BcState<GatherCtl> {
        let mut rg = rng(0);
        let mut s = proto(SymFunc::Or).init(&0, &mut rg);
        s.r = r;
        s.tick = tick;
        s.phase = phase;
        s.msg = msg;
        s
    }

    #[test]
    fn pair_encoding_convention() {
        assert_eq!(encode_sym(ChannelSym::Bit(true)), (true, false));
        assert_eq!(encode_sym(ChannelSym::Bit(false)), (false, true));
        assert_eq!(encode_sym(ChannelSym::Stop), (false, false));
        assert_eq!(decode_pair(false, false), ChannelSym::Stop);
        assert_eq!(decode_pair(false, true), ChannelSym::Bit(false));
        assert_eq!(decode_pair(true, false), ChannelSym::Bit(true));
        // two simultaneous transmitters decode as the fixed value 1
        assert_eq!(decode_pair(true, true), ChannelSym::Bit(true));
    }

    #[test]
    fn value_encoding_roundtrips_and_is_nonempty() {
        for v in 0..40u64 {
            let bits = value_bits(v);
            assert!(!bits.is_empty());
            assert_eq!(decode_value(&bits), Some(v));
        }
        assert_eq!(decode_value(&[]), None);
    }

    #[test]
    fn tx_emits_bits_then_stop() {
        let mut tx = Tx::from_value(2); // 2+1 = 11b
        assert_eq!(tx.symbol(), ChannelSym::Bit(true));
        assert!(!tx.advance());
        assert_eq!(tx.symbol(), ChannelSym::Bit(true));
        assert!(!tx.advance());
        assert_eq!(tx.symbol(), ChannelSym::Stop);
        assert!(tx.advance());
        let mut e = Tx::empty();
        assert_eq!(e.symbol(), ChannelSym::Stop);
        assert!(e.advance());
    }

    #[test]
    fn barrier_phase_only_ticks() {
        let p = proto(SymFunc::Or);
        let mut s = agent(2, 5, AgentPhase::Broadcasting, false);
        p.delta(&mut s, &true, Role::Initiator, &mut rng(0));
        assert_eq!(s.tick, 6);
        assert!(!s.msg);
        assert_eq!(s.phase, AgentPhase::Broadcasting);
    }

    #[test]
    fn broadcaster_raises_at_barrier_end() {
        let p = proto(SymFunc::Or);
        let mut s = agent(2, 7, AgentPhase::Broadcasting, false);
        p.delta(&mut s, &false, Role::Initiator, &mut rng(0)); // tick hits 2r^2 = 8
        assert!(s.msg);
    }

    #[test]
    fn receiver_past_barrier_adopts_and_propagates() {
        let p = proto(SymFunc::Or);
        let mut s = agent(2, 8, AgentPhase::Receiving, false);
        p.delta(&mut s, &true, Role::Initiator, &mut rng(0));
        assert_eq!(s.phase, AgentPhase::Received);
        assert!(s.msg);
        // seeing 0 does nothing
        let mut q = agent(2, 8, AgentPhase::Receiving, false);
        p.delta(&mut q, &false, Role::Initiator, &mut rng(0));
        assert_eq!(q.phase, AgentPhase::Receiving);
    }

    #[test]
    fn selection_handshake() {
        let p = proto(SymFunc::Or);
        // selector raises at 3r^2
        let mut sel = agent(2, 11, AgentPhase::Selecting, false);
        p.delta(&mut sel, &false, Role::Initiator, &mut rng(0));
        assert!(sel.msg);
        // next encounter showing 0 finishes the selection
        p.delta(&mut sel, &false, Role::Initiator, &mut rng(0));
        assert!(!sel.msg);
        assert_eq!(sel.phase, AgentPhase::Idle);
        // the candidate that saw the 1 is selected
        let mut cand = agent(2, 12, AgentPhase::Candidate, false);
        p.delta(&mut cand, &true, Role::Responder, &mut rng(0));
        assert_eq!(cand.phase, AgentPhase::Selected);
    }

    #[test]
    fn round_boundary_resets_and_advances() {
        let p = proto(SymFunc::Or);
        let mut s = agent(1, 4, AgentPhase::Received, true);
        p.delta(&mut s, &false, Role::Initiator, &mut rng(0)); // tick hits 5r^2 = 5
        assert_eq!(s.r, 2);
        assert_eq!(s.tick, 0);
        assert!(!s.msg);
    }

    #[test]
    fn leaderless_round0_recovers_a_leader() {
        let g = Gather::new(SymFunc::Or);
        let mut ctl = g.init(&0, &mut rng(0));
        let out = RoundOutcome { observed_one: false, selected: false, chose: false };
        g.round_update(&mut ctl, 1, &out, &mut rng(0));
        assert!(ctl.leader);
        // with a 1 observed, a non-leader stays follower
        let mut ctl2 = g.init(&0, &mut rng(0));
        let saw = RoundOutcome { observed_one: true, selected: false, chose: false };
        g.round_update(&mut ctl2, 1, &saw, &mut rng(0));
        assert!(!ctl2.leader);
    }

    #[test]
    fn coin_flip_fratricide_clears_loser() {
        let g = Gather::new(SymFunc::Or);
        let mut ctl = g.init(&0, &mut rng(0));
        ctl.leader = true;
        ctl.chan.coin_heads = false; // flipped tails, did not broadcast
        let saw = RoundOutcome { observed_one: true, selected: false, chose: false };
        let next = g.round_update(&mut ctl, 2, &saw, &mut rng(0));
        assert!(!ctl.leader);
        // ... and the loser announces the change in the next round 2
        assert_eq!(next, StartPhase::Broadcast);
    }

    #[test]
    fn restart_clears_processed_and_records_output() {
        let g = Gather::new(SymFunc::Or);
        let mut ctl = g.init(&0, &mut rng(0));
        ctl.processed = true;
        ctl.last_completed = Some(7);
        let saw = RoundOutcome { observed_one: true, selected: false, chose: false };
        g.round_update(&mut ctl, 3, &saw, &mut rng(0));
        assert!(!ctl.processed);
        assert_eq!(ctl.output, Some(7));
    }

    #[test]
    fn selected_agent_queues_its_input_once() {
        let g = Gather::new(SymFunc::Or);
        let mut ctl = g.init(&5, &mut rng(0));
        let sel = RoundOutcome { observed_one: false, selected: true, chose: false };
        g.round_update(&mut ctl, 5, &sel, &mut rng(0));
        assert!(ctl.processed);
        assert_eq!(ctl.chan.tx.as_ref().unwrap().symbol(), ChannelSym::Bit(true)); // 5+1 = 110b
        // a second selection transmits nothing
        ctl.chan.tx = None;
        g.round_update(&mut ctl, 5, &sel, &mut rng(0));
        assert_eq!(ctl.chan.tx.as_ref().unwrap().symbol(), ChannelSym::Stop);
    }

    #[test]
    fn sym_funcs() {
        assert_eq!(SymFunc::Or.eval(&[0, 0, 1]), 1);
        assert_eq!(SymFunc::Or.eval(&[0, 0]), 0);
        assert_eq!(SymFunc::CountOnes.eval(&[1, 0, 1, 1, 2]), 3);
        assert_eq!(SymFunc::Max.eval(&[3, 7, 2]), 7);
    }

    fn converge(f: SymFunc, inputs: &[u64], seed: u64, budget: u64) -> (bool, RoundAudit, Configuration<Rounds<Gather>>) {
        let p = proto(f);
        let mut r = rng(seed);
        let mut cfg = Configuration::from_inputs(&p, inputs, &mut r);
        let audit = run_audited(&p, &mut cfg, |c| p.correct(&c.agents), budget, 2048, &mut r);
        let ok = p.correct(&cfg.agents);
        (ok, audit, cfg)
    }

    #[test]
    fn gather_or_converges() {
        let inputs = [0, 0, 1, 0, 0, 0];
        let (ok, audit, cfg) = converge(SymFunc::Or, &inputs, 1, 400_000_000);
        assert!(ok, "did not converge; reached round {}", audit.max_round());
        assert!(cfg.agents.iter().all(|a| a.ctl.output == Some(1)));
    }

    #[test]
    fn gather_count_converges() {
        let inputs = [1, 0, 1, 0, 1, 0];
        let (ok, _, cfg) = converge(SymFunc::CountOnes, &inputs, 2, 400_000_000);
        assert!(ok);
        assert!(cfg.agents.iter().all(|a| a.ctl.output == Some(3)));
    }

    #[test]
    fn gather_max_of_equal_inputs() {
        let inputs = [4, 4, 4, 4, 4];
        let (ok, _, cfg) = converge(SymFunc::Max, &inputs, 3, 400_000_000);
        assert!(ok);
        assert!(cfg.agents.iter().all(|a| a.ctl.output == Some(4)));
    }

    #[test]
    fn failures_are_front_loaded() {
        let inputs = [0, 1, 0, 0, 0, 1];
        let (ok, audit, _) = converge(SymFunc::CountOnes, &inputs, 4, 400_000_000);
        assert!(ok);
        let last = audit.max_round();
        for r in audit.ghost_rounds() {
            assert!(r + 50 <= last, "ghost broadcast in round {r} of {last}");
        }
        for r in audit.selection_violations() {
            assert!(r + 50 <= last, "selection violation in round {r} of {last}");
        }
    }
}
