//! The message-restricted population-protocol model.
//!
//! An agent's state splits into an internal record and a constant-size
//! visible message. During an interaction each agent sees only its own full
//! state plus the *message* of its partner, so the transition function takes
//! `(own state, observed message, role)`. This is enforced structurally:
//! `delta` is never handed the partner's state.

use rand::RngCore;
use std::fmt::Debug;
use thiserror::Error;

/// The asymmetric role an agent plays in one interaction.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Role {
    Initiator,
    Responder,
}

#[derive(Error, Debug)]
pub enum SimError {
    #[error("invalid interaction pair ({i}, {j}) in population of {n}")]
    InvalidInteraction { i: usize, j: usize, n: usize },
    #[error("reachability cap of {cap} configurations exceeded (visited {visited})")]
    CapExceeded { cap: usize, visited: usize },
    #[error("protocol violation: {0}")]
    ProtocolViolation(String),
    #[error("construction error: {0}")]
    Construction(String),
}

/// Behavioral interface every protocol implements.
///
/// `delta` mutates the agent in place (several protocols carry heap data the
/// hot loop must not clone) but is observationally pure: same pre-state,
/// observed message, role and RNG stream give the same post-state.
pub trait Protocol {
    type State: Clone;
    type Msg: Clone + PartialEq + Debug;
    type Input: Clone;
    type Output: Clone + PartialEq + Debug;

    fn init(&self, input: &Self::Input, rng: &mut dyn RngCore) -> Self::State;

    /// Projection onto the visible part of the state.
    fn message(&self, state: &Self::State) -> Self::Msg;

    fn delta(&self, own: &mut Self::State, observed: &Self::Msg, role: Role, rng: &mut dyn RngCore);

    /// The finite message alphabet; independent of population size.
    fn message_alphabet(&self) -> Vec<Self::Msg>;

    /// Total output extraction; protocols that have not decided yet return
    /// their sentinel "undecided" value.
    fn output(&self, state: &Self::State) -> Self::Output;

    /// Correctness predicate over the whole population, used by the engine
    /// for convergence detection.
    fn correct(&self, agents: &[Self::State]) -> bool;
}

/// The full population: an ordered sequence of agent states plus the number
/// of interactions applied so far.
#[derive(Clone, Debug)]
pub struct Configuration<P: Protocol> {
    pub agents: Vec<P::State>,
    pub interactions: u64,
}

impl<P: Protocol> Configuration<P> {
    pub fn new(agents: Vec<P::State>) -> Self {
        assert!(agents.len() >= 2, "population must have n >= 2 agents");
        Configuration { agents, interactions: 0 }
    }

    pub fn from_inputs(proto: &P, inputs: &[P::Input], rng: &mut dyn RngCore) -> Self {
        let agents = inputs.iter().map(|x| proto.init(x, rng)).collect();
        Self::new(agents)
    }

    pub fn n(&self) -> usize {
        self.agents.len()
    }

    pub fn outputs(&self, proto: &P) -> Vec<P::Output> {
        self.agents.iter().map(|a| proto.output(a)).collect()
    }
}

/// One interaction between initiator `i` and responder `j`.
///
/// Both deltas consume the pre-interaction messages: agent `i` sees `j`'s
/// message as it was before either update, and vice versa.
pub fn apply_interaction<P: Protocol>(
    config: &mut Configuration<P>,
    i: usize,
    j: usize,
    proto: &P,
    rng: &mut dyn RngCore,
) -> Result<(), SimError> {
    let n = config.agents.len();
    if i == j || i >= n || j >= n {
        return Err(SimError::InvalidInteraction { i, j, n });
    }
    apply_interaction_unchecked(config, i, j, proto, rng);
    Ok(())
}

#[inline]
pub(crate) fn apply_interaction_unchecked<P: Protocol>(
    config: &mut Configuration<P>,
    i: usize,
    j: usize,
    proto: &P,
    rng: &mut dyn RngCore,
) {
    let msg_i = proto.message(&config.agents[i]);
    let msg_j = proto.message(&config.agents[j]);
    proto.delta(&mut config.agents[i], &msg_j, Role::Initiator, rng);
    proto.delta(&mut config.agents[j], &msg_i, Role::Responder, rng);
    config.interactions += 1;
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::toy::{Epidemic, Null, SwapMessage};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn rng() -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(1)
    }

    #[test]
    fn null_protocol_leaves_agents_unchanged() {
        let proto = Null;
        let mut cfg = Configuration::from_inputs(&proto, &[(), (), ()], &mut rng());
        let before = cfg.agents.clone();
        apply_interaction(&mut cfg, 0, 2, &proto, &mut rng()).unwrap();
        assert_eq!(cfg.agents, before);
        assert_eq!(cfg.interactions, 1);
    }

    #[test]
    fn epidemic_infects_responder() {
        let proto = Epidemic;
        let mut cfg = Configuration::from_inputs(&proto, &[true, false], &mut rng());
        apply_interaction(&mut cfg, 0, 1, &proto, &mut rng()).unwrap();
        assert!(cfg.agents.iter().all(|&a| a));
    }

    #[test]
    fn swap_message_confirms_simultaneous_semantics() {
        // Only simultaneous updates produce a swap: under either sequential
        // order one of the two pre-interaction messages is lost.
        let proto = SwapMessage;
        let mut cfg = Configuration::from_inputs(&proto, &[3u8, 7u8], &mut rng());
        apply_interaction(&mut cfg, 0, 1, &proto, &mut rng()).unwrap();
        assert_eq!(cfg.agents, vec![7, 3]);
        apply_interaction(&mut cfg, 1, 0, &proto, &mut rng()).unwrap();
        assert_eq!(cfg.agents, vec![3, 7]);
    }

    #[test]
    fn self_interaction_rejected() {
        let proto = Null;
        let mut cfg = Configuration::from_inputs(&proto, &[(), ()], &mut rng());
        assert!(matches!(
            apply_interaction(&mut cfg, 1, 1, &proto, &mut rng()),
            Err(SimError::InvalidInteraction { .. })
        ));
        assert!(matches!(
            apply_interaction(&mut cfg, 0, 2, &proto, &mut rng()),
            Err(SimError::InvalidInteraction { .. })
        ));
        assert_eq!(cfg.interactions, 0);
    }

    #[test]
    fn population_size_invariant() {
        let proto = Epidemic;
        let mut cfg = Configuration::from_inputs(&proto, &[true, false, false, false], &mut rng());
        for (i, j) in [(0, 1), (2, 3), (1, 2)] {
            apply_interaction(&mut cfg, i, j, &proto, &mut rng()).unwrap();
            assert_eq!(cfg.n(), 4);
        }
        assert_eq!(cfg.interactions, 3);
    }
}
