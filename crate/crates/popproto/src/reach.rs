//! Brute-force reachability and stabilization oracle for tiny populations.
//!
//! Configurations are treated as multisets over agent states (the scheduler
//! is symmetric, so agent identity is irrelevant to reachability). Intended
//! for n up to ~6 and small state spaces; a cap guards blowup.

use crate::core::{Protocol, Role, SimError};
use petgraph::graph::DiGraph;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::collections::{BTreeMap, HashMap, HashSet, VecDeque};
use std::hash::Hash;

/// Canonical multiset form of a configuration: sorted (state, count) pairs.
pub type Multiset<S> = Vec<(S, u32)>;

pub fn multiset_of<S: Ord + Clone>(agents: &[S]) -> Multiset<S> {
    let mut counts: BTreeMap<S, u32> = BTreeMap::new();
    for a in agents {
        *counts.entry(a.clone()).or_default() += 1;
    }
    counts.into_iter().collect()
}

pub fn expand<S: Clone>(ms: &Multiset<S>) -> Vec<S> {
    let mut out = Vec::new();
    for (s, c) in ms {
        for _ in 0..*c {
            out.push(s.clone());
        }
    }
    out
}

fn successors<P>(proto: &P, ms: &Multiset<P::State>) -> Vec<Multiset<P::State>>
where
    P: Protocol,
    P::State: Ord + Hash,
{
    // Reachability is only meaningful for rng-independent deltas; a fixed
    // throwaway stream keeps the signature satisfied.
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let mut out = Vec::new();
    for (a, ca) in ms {
        for (b, cb) in ms {
            if a == b && *ca < 2 {
                continue;
            }
            let _ = cb;
            let msg_a = proto.message(a);
            let msg_b = proto.message(b);
            let mut na = a.clone();
            let mut nb = b.clone();
            proto.delta(&mut na, &msg_b, Role::Initiator, &mut rng);
            proto.delta(&mut nb, &msg_a, Role::Responder, &mut rng);
            let mut counts: BTreeMap<P::State, i64> =
                ms.iter().map(|(s, c)| (s.clone(), *c as i64)).collect();
            *counts.entry(a.clone()).or_default() -= 1;
            *counts.entry(b.clone()).or_default() -= 1;
            *counts.entry(na).or_default() += 1;
            *counts.entry(nb).or_default() += 1;
            out.push(
                counts
                    .into_iter()
                    .filter(|(_, c)| *c > 0)
                    .map(|(s, c)| (s, c as u32))
                    .collect(),
            );
        }
    }
    out
}

/// Breadth-first closure of the initial configuration under all ordered-pair
/// interactions, quotiented by agent permutation.
pub fn reachable_set<P>(
    proto: &P,
    initial: &[P::State],
    cap: usize,
) -> Result<HashSet<Multiset<P::State>>, SimError>
where
    P: Protocol,
    P::State: Ord + Hash,
{
    let start = multiset_of(initial);
    let mut seen = HashSet::new();
    seen.insert(start.clone());
    let mut queue = VecDeque::from([start]);
    while let Some(ms) = queue.pop_front() {
        for next in successors(proto, &ms) {
            if !seen.contains(&next) {
                if seen.len() >= cap {
                    return Err(SimError::CapExceeded { cap, visited: seen.len() });
                }
                seen.insert(next.clone());
                queue.push_back(next);
            }
        }
    }
    Ok(seen)
}

/// True iff every fair execution from `initial` stabilizes to correct
/// output: under the random scheduler an execution eventually enters a
/// bottom strongly-connected component of the reachability graph and visits
/// all of it, so the protocol is stably correct with probability 1 iff every
/// configuration in every bottom SCC satisfies the correctness predicate.
pub fn check_stably_correct<P>(
    proto: &P,
    initial: &[P::State],
    cap: usize,
) -> Result<bool, SimError>
where
    P: Protocol,
    P::State: Ord + Hash,
{
    let start = multiset_of(initial);
    let mut index: HashMap<Multiset<P::State>, petgraph::graph::NodeIndex> = HashMap::new();
    let mut graph: DiGraph<Multiset<P::State>, ()> = DiGraph::new();
    let s = graph.add_node(start.clone());
    index.insert(start.clone(), s);
    let mut queue = VecDeque::from([start]);
    while let Some(ms) = queue.pop_front() {
        let from = index[&ms];
        for next in successors(proto, &ms) {
            let to = match index.get(&next) {
                Some(&ix) => ix,
                None => {
                    if index.len() >= cap {
                        return Err(SimError::CapExceeded { cap, visited: index.len() });
                    }
                    let ix = graph.add_node(next.clone());
                    index.insert(next.clone(), ix);
                    queue.push_back(next.clone());
                    ix
                }
            };
            graph.update_edge(from, to, ());
        }
    }

    let sccs = petgraph::algo::tarjan_scc(&graph);
    let mut scc_of = vec![usize::MAX; graph.node_count()];
    for (k, scc) in sccs.iter().enumerate() {
        for &node in scc {
            scc_of[node.index()] = k;
        }
    }
    for (k, scc) in sccs.iter().enumerate() {
        let terminal = scc.iter().all(|&node| {
            graph
                .neighbors(node)
                .all(|succ| scc_of[succ.index()] == k)
        });
        if terminal {
            for &node in scc {
                if !proto.correct(&expand(&graph[node])) {
                    return Ok(false);
                }
            }
        }
    }
    Ok(true)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::toy::{Epidemic, Fratricide, LeaderBit, Null};

    #[test]
    fn epidemic_n3_has_three_configurations() {
        let set = reachable_set(&Epidemic, &[true, false, false], 100).unwrap();
        assert_eq!(set.len(), 3);
        assert!(set.contains(&vec![(false, 2), (true, 1)]));
        assert!(set.contains(&vec![(false, 1), (true, 2)]));
        assert!(set.contains(&vec![(true, 3)]));
    }

    #[test]
    fn null_protocol_reaches_only_itself() {
        let set = reachable_set(&Null, &[(), (), (), ()], 100).unwrap();
        assert_eq!(set.len(), 1);
    }

    #[test]
    fn fratricide_n3_has_three_configurations() {
        use LeaderBit::*;
        let set = reachable_set(&Fratricide, &[L, L, L], 100).unwrap();
        assert_eq!(set.len(), 3);
        assert!(set.contains(&vec![(L, 3)]));
        assert!(set.contains(&vec![(L, 2), (F, 1)]));
        assert!(set.contains(&vec![(L, 1), (F, 2)]));
    }

    #[test]
    fn cap_overflow_is_reported() {
        assert!(matches!(
            reachable_set(&Epidemic, &[true, false, false], 2),
            Err(SimError::CapExceeded { cap: 2, .. })
        ));
    }

    #[test]
    fn permutation_invariance() {
        let a = reachable_set(&Epidemic, &[true, false, false, false], 100).unwrap();
        let b = reachable_set(&Epidemic, &[false, false, true, false], 100).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn null_protocol_stably_correct_under_trivial_predicate() {
        assert!(check_stably_correct(&Null, &[(), (), ()], 100).unwrap());
    }

    #[test]
    fn epidemic_stably_infects_everyone() {
        assert!(check_stably_correct(&Epidemic, &[true, false, false], 100).unwrap());
    }

    #[test]
    fn unelected_fratricide_is_not_stably_correct_from_all_followers() {
        // No leader can ever appear, so the single bottom SCC is incorrect.
        use LeaderBit::*;
        assert!(!check_stably_correct(&Fratricide, &[F, F, F], 100).unwrap());
        assert!(check_stably_correct(&Fratricide, &[L, L, L], 100).unwrap());
    }
}
