//! Small open protocols (message = whole state) used as scheduler fixtures,
//! reachability oracles, and simulation targets.

use crate::core::{Protocol, Role};
use rand::RngCore;

/// Does nothing; every transition is the identity.
pub struct Null;

impl Protocol for Null {
    type State = ();
    type Msg = ();
    type Input = ();
    type Output = ();

    fn init(&self, _input: &(), _rng: &mut dyn RngCore) -> () {}
    fn message(&self, _state: &()) -> () {}
    fn delta(&self, _own: &mut (), _observed: &(), _role: Role, _rng: &mut dyn RngCore) {}
    fn message_alphabet(&self) -> Vec<()> {
        vec![()]
    }
    fn output(&self, _state: &()) -> () {}
    fn correct(&self, _agents: &[()]) -> bool {
        true
    }
}

/// One-way infection i,s -> i,i. State is `true` when infected.
pub struct Epidemic;

impl Protocol for Epidemic {
    type State = bool;
    type Msg = bool;
    type Input = bool;
    type Output = bool;

    fn init(&self, input: &bool, _rng: &mut dyn RngCore) -> bool {
        *input
    }
    fn message(&self, state: &bool) -> bool {
        *state
    }
    fn delta(&self, own: &mut bool, observed: &bool, _role: Role, _rng: &mut dyn RngCore) {
        *own = *own || *observed;
    }
    fn message_alphabet(&self) -> Vec<bool> {
        vec![false, true]
    }
    fn output(&self, state: &bool) -> bool {
        *state
    }
    fn correct(&self, agents: &[bool]) -> bool {
        agents.iter().all(|&a| a)
    }
}

/// Each agent adopts the partner's pre-interaction message. A fixture for the
/// simultaneous-update semantics: any sequential order would duplicate one
/// message instead of swapping.
pub struct SwapMessage;

impl Protocol for SwapMessage {
    type State = u8;
    type Msg = u8;
    type Input = u8;
    type Output = u8;

    fn init(&self, input: &u8, _rng: &mut dyn RngCore) -> u8 {
        *input
    }
    fn message(&self, state: &u8) -> u8 {
        *state
    }
    fn delta(&self, own: &mut u8, observed: &u8, _role: Role, _rng: &mut dyn RngCore) {
        *own = *observed;
    }
    fn message_alphabet(&self) -> Vec<u8> {
        (0..=255).collect()
    }
    fn output(&self, state: &u8) -> u8 {
        *state
    }
    fn correct(&self, _agents: &[u8]) -> bool {
        true
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum LeaderBit {
    L,
    F,
}

/// Leader election by fratricide: when two leaders meet the responder
/// demotes itself and the initiator survives.
pub struct Fratricide;

impl Protocol for Fratricide {
    type State = LeaderBit;
    type Msg = LeaderBit;
    type Input = LeaderBit;
    type Output = bool;

    fn init(&self, input: &LeaderBit, _rng: &mut dyn RngCore) -> LeaderBit {
        *input
    }
    fn message(&self, state: &LeaderBit) -> LeaderBit {
        *state
    }
    fn delta(&self, own: &mut LeaderBit, observed: &LeaderBit, role: Role, _rng: &mut dyn RngCore) {
        if *own == LeaderBit::L && *observed == LeaderBit::L && role == Role::Responder {
            *own = LeaderBit::F;
        }
    }
    fn message_alphabet(&self) -> Vec<LeaderBit> {
        vec![LeaderBit::L, LeaderBit::F]
    }
    fn output(&self, state: &LeaderBit) -> bool {
        *state == LeaderBit::L
    }
    fn correct(&self, agents: &[LeaderBit]) -> bool {
        agents.iter().filter(|&&a| a == LeaderBit::L).count() == 1
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Contender {
    Undecided,
    Leader,
    Follower,
}

/// Three-state fratricide: everyone starts undecided; undecided or leader
/// pairs resolve with the initiator surviving as leader, and an undecided
/// agent that meets a leader gives up.
pub struct ThreeStateFratricide;

impl Protocol for ThreeStateFratricide {
    type State = Contender;
    type Msg = Contender;
    type Input = Contender;
    type Output = bool;

    fn init(&self, input: &Contender, _rng: &mut dyn RngCore) -> Contender {
        *input
    }
    fn message(&self, state: &Contender) -> Contender {
        *state
    }
    fn delta(&self, own: &mut Contender, observed: &Contender, role: Role, _rng: &mut dyn RngCore) {
        use Contender::*;
        *own = match (*own, *observed, role) {
            (Undecided, Undecided, Role::Initiator) => Leader,
            (Undecided, Undecided, Role::Responder) => Follower,
            (Undecided, Leader, _) => Follower,
            (Leader, Leader, Role::Responder) => Follower,
            (s, _, _) => s,
        };
    }
    fn message_alphabet(&self) -> Vec<Contender> {
        vec![Contender::Undecided, Contender::Leader, Contender::Follower]
    }
    fn output(&self, state: &Contender) -> bool {
        *state == Contender::Leader
    }
    fn correct(&self, agents: &[Contender]) -> bool {
        agents.iter().filter(|&&a| a == Contender::Leader).count() == 1
            && !agents.contains(&Contender::Undecided)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::core::{apply_interaction, Configuration};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn fratricide_responder_demotes() {
        let proto = Fratricide;
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let mut cfg =
            Configuration::from_inputs(&proto, &[LeaderBit::L, LeaderBit::L], &mut rng);
        apply_interaction(&mut cfg, 0, 1, &proto, &mut rng).unwrap();
        assert_eq!(cfg.agents, vec![LeaderBit::L, LeaderBit::F]);
        assert!(proto.correct(&cfg.agents));
    }

    #[test]
    fn three_state_fratricide_resolves_undecided_pair() {
        let proto = ThreeStateFratricide;
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let mut cfg = Configuration::from_inputs(
            &proto,
            &[Contender::Undecided, Contender::Undecided],
            &mut rng,
        );
        apply_interaction(&mut cfg, 1, 0, &proto, &mut rng).unwrap();
        assert_eq!(cfg.agents, vec![Contender::Follower, Contender::Leader]);
    }
}
