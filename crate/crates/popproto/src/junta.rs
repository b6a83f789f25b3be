//! Junta election with 1-bit messages.
//!
//! Every agent draws a geometric level, then counts interactions through
//! alternating green/red intervals. An agent below its own level is *eager*
//! (always says Go, always counts); at or beyond its level it is *cautious*
//! (says Stop in red intervals and waits at each door until it sees a Go).
//! The population halts with every counter parked at a common door d_k, and
//! the agents whose level matches the final round form the junta.

use crate::core::{Protocol, Role};
use rand::{Rng, RngCore};

/// Green/red interval geometry: |G_i| = c·b^i, |R_i| = (3c/2)·b^i, and the
/// doors d_i = Σ_{j≤i} (|G_j| + |R_j|).
#[derive(Clone, Copy, Debug)]
pub struct IntervalSchedule {
    pub b: u64,
    pub c: u64,
}

/// Where a counter value sits inside the schedule.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CountKind {
    PreStart,
    Green,
    Red,
    Door,
}

impl IntervalSchedule {
    pub fn new(b: u64, c: u64) -> Self {
        assert!(b == 2 || b == 4, "base must be 2 or 4");
        assert!(c >= 2 && c % 2 == 0, "scale must be even and positive");
        IntervalSchedule { b, c }
    }

    /// Figure-2 experiment geometry.
    pub fn experiment() -> Self {
        Self::new(2, 16)
    }

    /// Geometry from the analysis (c >= 700, base 4).
    pub fn theory() -> Self {
        Self::new(4, 700)
    }

    pub fn green_len(&self, i: u32) -> u64 {
        self.c * self.b.pow(i)
    }

    pub fn red_len(&self, i: u32) -> u64 {
        (3 * self.c / 2) * self.b.pow(i)
    }

    /// d_i; d(-1) is represented by `door_before(0) = 0`.
    pub fn door(&self, i: u32) -> u64 {
        (0..=i).map(|j| self.green_len(j) + self.red_len(j)).sum()
    }

    /// Last element of G_i.
    pub fn green_end(&self, i: u32) -> u64 {
        let prev = if i == 0 { 0 } else { self.door(i - 1) };
        prev + self.green_len(i)
    }

    pub fn classify_count(&self, count: u64) -> (u32, CountKind) {
        if count == 0 {
            return (0, CountKind::PreStart);
        }
        let mut i = 0;
        while count > self.door(i) {
            i += 1;
        }
        let kind = if count == self.door(i) {
            CountKind::Door
        } else if count <= self.green_end(i) {
            CountKind::Green
        } else {
            CountKind::Red
        };
        (i, kind)
    }
}

/// Draw the level: G fair coin flips until the first heads, level = ⌈log₂ G⌉.
pub fn sample_level(rng: &mut dyn RngCore) -> u32 {
    let mut g: u64 = 1;
    while !rng.gen::<bool>() {
        g += 1;
    }
    ceil_log2(g)
}

fn ceil_log2(g: u64) -> u32 {
    debug_assert!(g >= 1);
    64 - (g - 1).leading_zeros()
}

/// Downstream protocol slot restarted at every door crossing. The default
/// carries no payload and does nothing.
pub trait DoorHook {
    type Slot: Clone + Default;
    fn on_door_crossing(&self, slot: &mut Self::Slot, new_round: u32);
}

pub struct NoHook;

impl DoorHook for NoHook {
    type Slot = ();
    fn on_door_crossing(&self, _slot: &mut (), _new_round: u32) {}
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GoStop {
    Go,
    Stop,
}

#[derive(Clone, Debug, PartialEq)]
pub struct JuntaState<Slot = ()> {
    pub count: u32,
    /// Cached last element of the current round's green interval.
    green_end: u32,
    /// Cached current door d_round.
    door: u32,
    pub round: u32,
    pub level: u32,
    pub in_junta: bool,
    pub logn_estimation: u64,
    pub down: Slot,
}

impl<Slot> JuntaState<Slot> {
    pub fn at_door(&self) -> bool {
        self.count == self.door
    }

    pub fn cautious(&self) -> bool {
        self.level <= self.round
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct JuntaOutput {
    pub in_junta: bool,
    pub logn_estimation: u64,
}

pub struct JuntaElection<H: DoorHook = NoHook> {
    pub schedule: IntervalSchedule,
    pub hook: H,
}

impl JuntaElection {
    pub fn new(schedule: IntervalSchedule) -> Self {
        JuntaElection { schedule, hook: NoHook }
    }
}

impl<H: DoorHook> JuntaElection<H> {
    pub fn with_hook(schedule: IntervalSchedule, hook: H) -> Self {
        JuntaElection { schedule, hook }
    }

    fn fresh(&self, level: u32) -> JuntaState<H::Slot> {
        JuntaState {
            count: 0,
            green_end: self.schedule.green_end(0) as u32,
            door: self.schedule.door(0) as u32,
            round: 0,
            level,
            in_junta: true,
            logn_estimation: 1,
            down: H::Slot::default(),
        }
    }

    /// All agents halted at one common door with every message Stop: no
    /// counter can ever move again.
    pub fn halted(&self, agents: &[JuntaState<H::Slot>]) -> bool {
        let first = agents[0].count;
        agents
            .iter()
            .all(|a| a.count == first && a.at_door() && a.cautious())
    }
}

impl<H: DoorHook> Protocol for JuntaElection<H> {
    type State = JuntaState<H::Slot>;
    type Msg = GoStop;
    type Input = ();
    type Output = JuntaOutput;

    fn init(&self, _input: &(), rng: &mut dyn RngCore) -> Self::State {
        self.fresh(sample_level(rng))
    }

    fn message(&self, s: &Self::State) -> GoStop {
        // Eager agents and agents in a green interval (or still unstarted)
        // say Go; cautious agents in a red interval (door included) say Stop.
        if s.count == 0 || s.level > s.round || s.count <= s.green_end {
            GoStop::Go
        } else {
            GoStop::Stop
        }
    }

    #[inline]
    fn delta(&self, own: &mut Self::State, observed: &GoStop, _role: Role, _rng: &mut dyn RngCore) {
        if own.cautious() && own.at_door() && *observed == GoStop::Stop {
            return; // wait at the door
        }
        own.count += 1;
        if own.count > own.door {
            own.round += 1;
            own.green_end = self.schedule.green_end(own.round) as u32;
            own.door = self.schedule.door(own.round) as u32;
            self.hook.on_door_crossing(&mut own.down, own.round);
        }
        if own.at_door() {
            own.logn_estimation = 1u64 << own.round;
            own.in_junta = own.level >= own.round;
        }
    }

    fn message_alphabet(&self) -> Vec<GoStop> {
        vec![GoStop::Go, GoStop::Stop]
    }

    fn output(&self, s: &Self::State) -> JuntaOutput {
        JuntaOutput { in_junta: s.in_junta, logn_estimation: s.logn_estimation }
    }

    fn correct(&self, agents: &[Self::State]) -> bool {
        self.halted(agents)
    }
}
