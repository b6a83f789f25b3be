//! Self-stabilizing size predicate via ball passing.
//!
//! Every agent starts as a leader holding one ball. Leaders eliminate each
//! other pairwise; followers shuffle single balls among themselves and hand
//! the surviving leader a batch of `c` whenever they accumulate that many.
//! The leader ends up holding `1 + c*floor((n-1)/c)` balls and publishes
//! whether `floor((n-1)/c)` is a power of two; followers copy that bit.
//! Messages stay constant-size: a ball count is abstracted to nothing / one
//! ball / at least a batch.

use crate::core::{Protocol, Role};
use rand::RngCore;

/// What a ball count looks like from the outside.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Give {
    Zero,
    One,
    Batch,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct BallState {
    pub leader: bool,
    pub k: u32,
    pub out: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct BallMsg {
    pub give: Give,
    pub leader: bool,
    pub out: bool,
}

pub struct Balls {
    pub c: u32,
}

impl Balls {
    pub fn new(c: u32) -> Self {
        assert!(c >= 1);
        Balls { c }
    }

    fn give(&self, k: u32) -> Give {
        match k {
            0 => Give::Zero,
            k if k >= self.c => Give::Batch,
            _ => Give::One,
        }
    }

    /// The decided predicate: is floor((n-1)/c) a positive power of two
    /// (including 2^0)?
    pub fn predicate(&self, n: u32) -> bool {
        let m = (n - 1) / self.c;
        m >= 1 && m.is_power_of_two()
    }

    fn leader_out(&self, k: u32) -> bool {
        let m = (k - 1) / self.c;
        m >= 1 && m.is_power_of_two()
    }
}

impl Protocol for Balls {
    type State = BallState;
    type Msg = BallMsg;
    type Input = ();
    type Output = bool;

    fn init(&self, _input: &(), _rng: &mut dyn RngCore) -> BallState {
        BallState { leader: true, k: 1, out: false }
    }

    fn message(&self, s: &BallState) -> BallMsg {
        BallMsg { give: self.give(s.k), leader: s.leader, out: s.out }
    }

    fn delta(&self, own: &mut BallState, m: &BallMsg, role: Role, _rng: &mut dyn RngCore) {
        if own.leader {
            if m.leader {
                if role == Role::Responder {
                    own.leader = false; // fratricide keeps the ball count
                }
            } else if m.give == Give::Batch {
                own.k += self.c;
                own.out = self.leader_out(own.k);
            }
        } else if m.leader {
            // The leader simultaneously collects the batch it sees.
            if own.k >= self.c {
                own.k -= self.c;
            }
            own.out = m.out;
        } else if own.k >= 1 && own.k < self.c && m.give == Give::One {
            // Two single-ball followers consolidate: initiator gives one.
            match role {
                Role::Initiator => own.k -= 1,
                Role::Responder => own.k += 1,
            }
        }
    }

    fn message_alphabet(&self) -> Vec<BallMsg> {
        let mut out = Vec::new();
        for give in [Give::Zero, Give::One, Give::Batch] {
            for leader in [false, true] {
                for o in [false, true] {
                    out.push(BallMsg { give, leader, out: o });
                }
            }
        }
        out
    }

    fn output(&self, s: &BallState) -> bool {
        s.out
    }

    fn correct(&self, agents: &[BallState]) -> bool {
        let n = agents.len() as u32;
        let leaders: Vec<&BallState> = agents.iter().filter(|a| a.leader).collect();
        let expect = self.predicate(n);
        leaders.len() == 1
            && leaders[0].k == 1 + self.c * ((n - 1) / self.c)
            && agents.iter().all(|a| a.out == expect)
    }
}
