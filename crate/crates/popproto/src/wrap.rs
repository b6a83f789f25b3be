//! Generic compiler from an arbitrary protocol with a finite message
//! alphabet to one whose messages fit in a few bits.
//!
//! A single token circulates. The current leader hands the token to its next
//! interaction partner and steps down; the token holder then pairs up with
//! its own next partner, the two mark themselves with their interaction
//! roles, and exchange their wrapped messages bit by bit (fixed width, most
//! significant bit first, a terminator symbol after the last bit). Once both
//! sides hold the full message they apply the wrapped transition in the same
//! interaction, unmark, and the token holder becomes the new leader. All
//! other interactions are null, so the wrapped protocol's projected schedule
//! is a legal (merely slowed down) schedule of the original.

use crate::core::{Configuration, Protocol, Role, SimError};
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::fmt::Debug;
use std::hash::{Hash, Hasher};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Mark {
    /// Unmarked.
    U,
    /// Marked as initiator of the simulated interaction.
    I,
    /// Marked as responder.
    R,
}

/// One symbol of the serialized message channel.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum BitSym {
    Zero,
    One,
    End,
}

pub struct WrapState<P: Protocol> {
    pub p: P::State,
    pub leader: bool,
    pub token: bool,
    pub mark: Mark,
    /// Bits of the partner's message received so far.
    pub pos: u8,
    /// Those bits, most significant first.
    pub acc: u32,
    /// Alphabet index of the own message frozen at marking time.
    pub own_idx: u32,
}

impl<P: Protocol> WrapState<P> {
    fn key(&self) -> (&P::State, bool, bool, Mark, u8, u32, u32) {
        (&self.p, self.leader, self.token, self.mark, self.pos, self.acc, self.own_idx)
    }
}

impl<P: Protocol> Clone for WrapState<P> {
    fn clone(&self) -> Self {
        WrapState {
            p: self.p.clone(),
            leader: self.leader,
            token: self.token,
            mark: self.mark,
            pos: self.pos,
            acc: self.acc,
            own_idx: self.own_idx,
        }
    }
}

impl<P: Protocol> Debug for WrapState<P>
where
    P::State: Debug,
{
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("WrapState")
            .field("p", &self.p)
            .field("leader", &self.leader)
            .field("token", &self.token)
            .field("mark", &self.mark)
            .field("pos", &self.pos)
            .field("acc", &self.acc)
            .field("own_idx", &self.own_idx)
            .finish()
    }
}

impl<P: Protocol> PartialEq for WrapState<P>
where
    P::State: PartialEq,
{
    fn eq(&self, other: &Self) -> bool {
        self.key() == other.key()
    }
}

impl<P: Protocol> Eq for WrapState<P> where P::State: Eq {}

impl<P: Protocol> PartialOrd for WrapState<P>
where
    P::State: Ord,
{
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl<P: Protocol> Ord for WrapState<P>
where
    P::State: Ord,
{
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.key().cmp(&other.key())
    }
}

impl<P: Protocol> Hash for WrapState<P>
where
    P::State: Hash,
{
    fn hash<H: Hasher>(&self, state: &mut H) {
        self.key().hash(state);
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct WrapMsg {
    pub leader: bool,
    pub token: bool,
    pub mark: Mark,
    pub bit: BitSym,
}

pub struct Wrap<P: Protocol> {
    pub inner: P,
    alphabet: Vec<P::Msg>,
    width: u8,
}

impl<P: Protocol> Wrap<P> {
    pub fn new(inner: P) -> Self {
        let alphabet = inner.message_alphabet();
        assert!(!alphabet.is_empty());
        let width = (usize::BITS - (alphabet.len() - 1).leading_zeros()).min(u32::BITS) as u8;
        Wrap { inner, alphabet, width }
    }

    pub fn width(&self) -> u8 {
        self.width
    }

    fn index_of(&self, m: &P::Msg) -> u32 {
        self.alphabet
            .iter()
            .position(|x| x == m)
            .expect("message outside the declared alphabet") as u32
    }

    fn display(&self, s: &WrapState<P>) -> BitSym {
        if s.mark == Mark::U || s.pos >= self.width {
            BitSym::End
        } else if (s.own_idx >> (self.width - 1 - s.pos)) & 1 == 1 {
            BitSym::One
        } else {
            BitSym::Zero
        }
    }

    pub fn project(agents: &[WrapState<P>]) -> Vec<P::State> {
        agents.iter().map(|a| a.p.clone()).collect()
    }
}

impl<P: Protocol> Protocol for Wrap<P> {
    type State = WrapState<P>;
    type Msg = WrapMsg;
    /// Wrapped input plus the initial-leader designation.
    type Input = (P::Input, bool);
    type Output = P::Output;

    fn init(&self, (input, leader): &Self::Input, rng: &mut dyn RngCore) -> Self::State {
        WrapState {
            p: self.inner.init(input, rng),
            leader: *leader,
            token: false,
            mark: Mark::U,
            pos: 0,
            acc: 0,
            own_idx: 0,
        }
    }

    fn message(&self, s: &Self::State) -> WrapMsg {
        WrapMsg { leader: s.leader, token: s.token, mark: s.mark, bit: self.display(s) }
    }

    fn delta(&self, own: &mut Self::State, m: &WrapMsg, role: Role, rng: &mut dyn RngCore) {
        let had_token = own.token;
        let was_leader = own.leader;

        // Leader hand-off: the leader steps down on its next interaction and
        // its partner picks up the token.
        if was_leader {
            own.leader = false;
        }
        if m.leader {
            own.token = true;
        }

        // Marking: the token holder pairs with its next partner; both record
        // their interaction roles and freeze their messages for serialization.
        let holder_marks = had_token && own.mark == Mark::U && m.mark == Mark::U && !m.leader;
        let partner_marks = m.token && m.mark == Mark::U && own.mark == Mark::U && !was_leader;
        if holder_marks || partner_marks {
            own.mark = if role == Role::Initiator { Mark::I } else { Mark::R };
            own.pos = 0;
            own.acc = 0;
            own.own_idx = self.index_of(&self.inner.message(&own.p));
            return;
        }

        // Bit exchange between the two marked agents. Fixed width keeps them
        // in lockstep, so both finish (and apply the wrapped transition)
        // in the same interaction.
        if own.mark != Mark::U && m.mark != Mark::U {
            debug_assert_ne!(own.mark, m.mark);
            if own.pos < self.width {
                let b = match m.bit {
                    BitSym::Zero => 0,
                    BitSym::One => 1,
                    BitSym::End => unreachable!("serialization desynchronized"),
                };
                own.acc = (own.acc << 1) | b;
                own.pos += 1;
            } else if m.bit == BitSym::End {
                let msg = self.alphabet[own.acc as usize].clone();
                let p_role = if own.mark == Mark::I { Role::Initiator } else { Role::Responder };
                self.inner.delta(&mut own.p, &msg, p_role, rng);
                own.mark = Mark::U;
                own.pos = 0;
                own.acc = 0;
                own.own_idx = 0;
                if had_token {
                    own.token = false;
                    own.leader = true;
                }
            }
        }
    }

    fn message_alphabet(&self) -> Vec<WrapMsg> {
        let mut out = Vec::new();
        for leader in [false, true] {
            for token in [false, true] {
                for mark in [Mark::U, Mark::I, Mark::R] {
                    for bit in [BitSym::Zero, BitSym::One, BitSym::End] {
                        out.push(WrapMsg { leader, token, mark, bit });
                    }
                }
            }
        }
        out
    }

    fn output(&self, s: &Self::State) -> P::Output {
        self.inner.output(&s.p)
    }

    fn correct(&self, agents: &[Self::State]) -> bool {
        self.inner.correct(&Self::project(agents))
    }
}

/// Replay check: run the wrapped protocol, drop every interaction that left
/// the projection unchanged, and verify each remaining step is a legal
/// single interaction of the inner protocol under some role assignment.
/// Returns the number of effective (non-null) projected steps.
///
/// Only meaningful for rng-independent inner deltas; replay uses a fixed
/// throwaway stream.
pub fn validate_projected_replay<P>(
    wrap: &Wrap<P>,
    initial: Vec<WrapState<P>>,
    steps: u64,
    seed: u64,
) -> Result<u64, SimError>
where
    P: Protocol,
    P::State: PartialEq + Debug,
{
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut cfg: Configuration<Wrap<P>> = Configuration::new(initial);
    let mut effective = 0;
    for _ in 0..steps {
        let before = Wrap::project(&cfg.agents);
        let (i, j) = crate::engine::step(&mut cfg, wrap, &mut rng);
        let after = Wrap::project(&cfg.agents);
        let changed: Vec<usize> = (0..before.len()).filter(|&k| before[k] != after[k]).collect();
        if changed.is_empty() {
            continue;
        }
        effective += 1;
        if changed.iter().any(|k| *k != i && *k != j) {
            return Err(SimError::ProtocolViolation(format!(
                "agents outside interaction ({i}, {j}) changed: {changed:?}"
            )));
        }
        // Some role assignment of the pair must reproduce the step.
        let mut replay_rng = ChaCha8Rng::seed_from_u64(0);
        let legal = [(i, j), (j, i)].iter().any(|&(a, b)| {
            let ma = wrap.inner.message(&before[a]);
            let mb = wrap.inner.message(&before[b]);
            let mut na = before[a].clone();
            let mut nb = before[b].clone();
            wrap.inner.delta(&mut na, &mb, Role::Initiator, &mut replay_rng);
            wrap.inner.delta(&mut nb, &ma, Role::Responder, &mut replay_rng);
            na == after[a] && nb == after[b]
        });
        if !legal {
            return Err(SimError::ProtocolViolation(format!(
                "projected step at interaction {} is not a legal inner interaction",
                cfg.interactions
            )));
        }
    }
    Ok(effective)
}
