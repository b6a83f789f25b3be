//! Turing-machine simulation over the 1-bit round substrate.
//!
//! After a restart, the leader recruits every agent to hold tape cells (cell
//! i lives at follower i mod (n-1), local slot i div (n-1)), counts the
//! population as a side effect, then runs the machine. Every agent hears
//! every channel transmission, so all of them maintain an identical shadow
//! of the controller (state, head, fuel, population count): the only traffic
//! per machine step is the cell owner transmitting the symbol under the
//! head. Writes, head moves, the step bound and the halting result are all
//! derived locally from the shared transition table. A cycle with no
//! response where one is due means initialization failed and triggers a
//! restart, as does an unrecruited agent's report after counting ended.

use crate::broadcast::{Chan, RoundController, RoundOutcome, StartPhase, Tx};
use crate::core::{Protocol, SimError};
use rand::RngCore;
use std::collections::HashMap;
use std::fmt::Debug;

/// Head movement of one transition.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Move {
    Left,
    Right,
    Stay,
}

/// A machine description: states and symbols are interned in order of first
/// appearance in the source text.
#[derive(Clone, Debug)]
pub struct TmSpec {
    pub states: Vec<String>,
    pub symbols: Vec<String>,
    pub start: u8,
    pub halting: Vec<bool>,
    pub blank: u8,
    /// Marker planted one past the last input cell during setup.
    pub end: Option<u8>,
    pub rules: HashMap<(u8, u8), (u8, u8, Move)>,
}

impl TmSpec {
    /// Line-oriented grammar; `#` starts a comment, blank lines ignored:
    ///
    /// ```text
    /// start <state>
    /// halt <state> [<state> ...]
    /// blank <symbol>
    /// end <symbol>            # optional
    /// <state> <symbol> -> <state> <symbol> <L|R|S>
    /// ```
    ///
    /// The transition table must be total on (non-halting state, symbol).
    pub fn parse(text: &str) -> Result<TmSpec, SimError> {
        let bad = |msg: String| SimError::Construction(msg);
        let mut states: Vec<String> = Vec::new();
        let mut symbols: Vec<String> = Vec::new();
        let intern = |pool: &mut Vec<String>, name: &str| -> u8 {
            match pool.iter().position(|x| x == name) {
                Some(k) => k as u8,
                None => {
                    pool.push(name.to_string());
                    (pool.len() - 1) as u8
                }
            }
        };
        let mut start = None;
        let mut halting_names: Vec<String> = Vec::new();
        let mut blank = None;
        let mut end = None;
        let mut rules = HashMap::new();

        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let toks: Vec<&str> = line.split_whitespace().collect();
            match toks[0] {
                "start" if toks.len() == 2 => start = Some(intern(&mut states, toks[1])),
                "halt" if toks.len() >= 2 => {
                    for t in &toks[1..] {
                        intern(&mut states, t);
                        halting_names.push(t.to_string());
                    }
                }
                "blank" if toks.len() == 2 => blank = Some(intern(&mut symbols, toks[1])),
                "end" if toks.len() == 2 => end = Some(intern(&mut symbols, toks[1])),
                _ => {
                    // <state> <symbol> -> <state> <symbol> <move>
                    if toks.len() != 6 || toks[2] != "->" {
                        return Err(bad(format!("line {}: unrecognized directive", lineno + 1)));
                    }
                    let q = intern(&mut states, toks[0]);
                    let c = intern(&mut symbols, toks[1]);
                    let q2 = intern(&mut states, toks[3]);
                    let c2 = intern(&mut symbols, toks[4]);
                    let mv = match toks[5] {
                        "L" => Move::Left,
                        "R" => Move::Right,
                        "S" => Move::Stay,
                        other => return Err(bad(format!("line {}: bad move '{other}'", lineno + 1))),
                    };
                    if rules.insert((q, c), (q2, c2, mv)).is_some() {
                        return Err(bad(format!(
                            "line {}: duplicate rule for ({}, {})",
                            lineno + 1,
                            toks[0],
                            toks[1]
                        )));
                    }
                }
            }
        }

        let start = start.ok_or_else(|| bad("missing start directive".into()))?;
        let blank = blank.ok_or_else(|| bad("missing blank directive".into()))?;
        let halting: Vec<bool> = states
            .iter()
            .map(|s| halting_names.iter().any(|h| h == s))
            .collect();
        for (qi, q) in states.iter().enumerate() {
            if halting[qi] {
                continue;
            }
            for (ci, c) in symbols.iter().enumerate() {
                if !rules.contains_key(&(qi as u8, ci as u8)) {
                    return Err(bad(format!("transition table not total: missing ({q}, {c})")));
                }
            }
        }
        Ok(TmSpec { states, symbols, start, halting, blank, end, rules })
    }

    pub fn symbol_index(&self, name: &str) -> Option<u8> {
        self.symbols.iter().position(|s| s == name).map(|k| k as u8)
    }

    /// Parity of the number of 1 symbols on the tape, reported via the
    /// symbol written by the halting transition (acc = even).
    pub fn unary_parity() -> TmSpec {
        TmSpec::parse(
            "start even\n\
             halt done\n\
             blank B\n\
             end E\n\
             even 1 -> odd 1 R\n\
             even B -> even B R\n\
             even E -> done acc S\n\
             odd 1 -> even 1 R\n\
             odd B -> odd B R\n\
             odd E -> done rej S\n\
             # verdict symbols are write-only; these rules are unreachable\n\
             # but keep the table total\n\
             even acc -> done acc S\n\
             even rej -> done rej S\n\
             odd acc -> done acc S\n\
             odd rej -> done rej S\n",
        )
        .expect("builtin spec parses")
    }
}

fn shift(head: u64, mv: Move) -> u64 {
    match mv {
        Move::Left => head.saturating_sub(1), // moving left at cell 0 stays
        Move::Right => head + 1,
        Move::Stay => head,
    }
}

/// In-memory reference machine, the oracle for the distributed simulation.
#[derive(Clone, Debug, PartialEq)]
pub struct RefTm {
    pub tape: Vec<u8>,
    pub head: u64,
    pub q: u8,
    pub steps: u64,
    pub result: Option<u8>,
}

impl RefTm {
    pub fn new(spec: &TmSpec, tape: Vec<u8>) -> RefTm {
        let mut tm = RefTm { tape, head: 0, q: spec.start, steps: 0, result: None };
        if spec.halting[spec.start as usize] {
            tm.result = Some(spec.blank); // starts halted: degenerate blank verdict
        }
        tm
    }

    pub fn read(&self, spec: &TmSpec, i: u64) -> u8 {
        *self.tape.get(i as usize).unwrap_or(&spec.blank)
    }

    /// One transition; false when already halted or the table has no rule.
    pub fn step(&mut self, spec: &TmSpec) -> bool {
        if self.result.is_some() {
            return false;
        }
        let c = self.read(spec, self.head);
        let Some(&(q2, c2, mv)) = spec.rules.get(&(self.q, c)) else {
            return false;
        };
        if self.tape.len() as u64 <= self.head {
            self.tape.resize(self.head as usize + 1, spec.blank);
        }
        self.tape[self.head as usize] = c2;
        self.q = q2;
        self.head = shift(self.head, mv);
        self.steps += 1;
        if spec.halting[q2 as usize] {
            self.result = Some(c2); // verdict = symbol written while halting
        }
        true
    }

    /// Run to halt or the step bound; the verdict, or None on timeout.
    pub fn run(&mut self, spec: &TmSpec, bound: u64) -> Option<u8> {
        while self.result.is_none() && self.steps < bound {
            if !self.step(spec) {
                return None;
            }
        }
        self.result
    }
}

/// Which follower stores tape cell `i` in a population of `n` (n-1
/// followers, indexed 0..n-2 in recruitment order), and at which local slot.
pub fn cell_owner(i: u64, n: u64) -> u64 {
    i % (n - 1)
}

pub fn cell_slot(i: u64, n: u64) -> u64 {
    i / (n - 1)
}

/// What the shadow machine is currently doing.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Stage {
    /// Recruiting followers / counting the population.
    Counting,
    /// Executing machine steps.
    Running,
    /// Finished (or given up); waiting for the leader's restart.
    Halted,
}

#[derive(Clone, Debug)]
pub struct TmCtl {
    pub chan: Chan,
    pub leader: bool,
    pub processed: bool,
    pub input: u8,
    saw_unprocessed: bool,
    /// Selected and acknowledging; the index arrives when the ack completes.
    claiming: bool,
    pub stage: Stage,
    pub n_hat: u64,
    pub my_index: Option<u64>,
    tape: Vec<u8>,
    pub head: u64,
    pub q: u8,
    fuel: u64,
    await_empty: u8,
    pub steps_done: u64,
    /// Completed restarts observed (setup generation counter).
    pub generation: u64,
    pub output: Option<u8>,
}

pub struct TmCtrl {
    pub spec: TmSpec,
    pub bound: fn(u64) -> u64,
}

pub fn default_bound(n: u64) -> u64 {
    4 * n * n
}

impl TmCtrl {
    pub fn new(spec: TmSpec) -> TmCtrl {
        TmCtrl { spec, bound: default_bound }
    }

    fn reset(&self, ctl: &mut TmCtl) {
        ctl.processed = false;
        ctl.claiming = false;
        ctl.my_index = None;
        ctl.stage = Stage::Counting;
        ctl.n_hat = 1;
        ctl.tape.clear();
        ctl.tape.push(ctl.input);
        ctl.head = 0;
        ctl.q = self.spec.start;
        ctl.fuel = 0;
        ctl.await_empty = 0;
        ctl.steps_done = 0;
        ctl.generation += 1;
    }

    fn set_slot(&self, ctl: &mut TmCtl, slot: u64, sym: u8) {
        if ctl.tape.len() as u64 <= slot {
            ctl.tape.resize(slot as usize + 1, self.spec.blank);
        }
        ctl.tape[slot as usize] = sym;
    }

    fn get_slot(&self, ctl: &TmCtl, slot: u64) -> u8 {
        *ctl.tape.get(slot as usize).unwrap_or(&self.spec.blank)
    }

    pub fn owns_head(&self, ctl: &TmCtl) -> bool {
        ctl.n_hat >= 2 && ctl.my_index == Some(cell_owner(ctl.head, ctl.n_hat))
    }

    fn halt(&self, ctl: &mut TmCtl, result: Option<u8>) {
        if let Some(r) = result {
            ctl.output = Some(r);
        }
        ctl.stage = Stage::Halted;
        if ctl.leader {
            ctl.chan.restart_pending = true;
        }
    }

    fn finish_counting(&self, ctl: &mut TmCtl) {
        if ctl.n_hat < 2 {
            self.halt(ctl, None); // nobody recruited: setup failed
            return;
        }
        ctl.stage = Stage::Running;
        ctl.fuel = (self.bound)(ctl.n_hat);
        ctl.head = 0;
        ctl.q = self.spec.start;
        ctl.await_empty = 0;
        // plant the end marker one past the input cells (derivable locally)
        if let Some(e) = self.spec.end {
            let cell = ctl.n_hat - 1;
            if ctl.my_index == Some(cell_owner(cell, ctl.n_hat)) {
                let slot = cell_slot(cell, ctl.n_hat);
                self.set_slot(ctl, slot, e);
            }
        }
        if self.spec.halting[ctl.q as usize] {
            self.halt(ctl, Some(self.spec.blank)); // starts halted
        }
    }

    fn apply_step(&self, ctl: &mut TmCtl, c: u8) {
        let Some(&(q2, c2, mv)) = self.spec.rules.get(&(ctl.q, c)) else {
            self.halt(ctl, None);
            return;
        };
        if self.owns_head(ctl) {
            let slot = cell_slot(ctl.head, ctl.n_hat);
            self.set_slot(ctl, slot, c2);
        }
        ctl.q = q2;
        ctl.head = shift(ctl.head, mv);
        ctl.fuel -= 1;
        ctl.steps_done += 1;
        ctl.await_empty = 0;
        if self.spec.halting[q2 as usize] {
            self.halt(ctl, Some(c2));
        } else if ctl.fuel == 0 {
            self.halt(ctl, None); // runtime bound exceeded
        }
    }
}

impl RoundController for TmCtrl {
    type Ctl = TmCtl;
    type Input = u8;
    type Out = Option<u8>;

    fn init(&self, input: &u8, _rng: &mut dyn RngCore) -> TmCtl {
        let mut ctl = TmCtl {
            chan: Chan::new(),
            leader: false,
            processed: false,
            input: *input,
            saw_unprocessed: false,
            claiming: false,
            stage: Stage::Counting,
            n_hat: 1,
            my_index: None,
            tape: Vec::new(),
            head: 0,
            q: self.spec.start,
            fuel: 0,
            await_empty: 0,
            steps_done: 0,
            generation: 0,
            output: None,
        };
        self.reset(&mut ctl);
        ctl.generation = 0;
        ctl
    }

    fn first_phase(&self, _ctl: &TmCtl) -> StartPhase {
        StartPhase::Listen
    }

    fn round_update(
        &self,
        ctl: &mut TmCtl,
        finished: u64,
        outcome: &RoundOutcome,
        rng: &mut dyn RngCore,
    ) -> StartPhase {
        let rho = (finished - 1) % 7;
        match rho {
            0 | 1 | 2 => {
                // only blank-input agents may lead: the leader's own input
                // never reaches the tape
                let eligible = ctl.input == self.spec.blank;
                let restart = ctl.chan.leadership(rho, outcome, &mut ctl.leader, eligible);
                if rho == 2 && restart {
                    self.reset(ctl);
                }
            }
            3 => {
                ctl.saw_unprocessed = outcome.observed_one;
                match ctl.stage {
                    Stage::Counting => {
                        if !outcome.observed_one && ctl.chan.quiet() {
                            self.finish_counting(ctl);
                        }
                    }
                    Stage::Running | Stage::Halted => {
                        if outcome.observed_one && ctl.leader {
                            // an unrecruited agent surfaced after counting
                            ctl.chan.restart_pending = true;
                        }
                    }
                }
            }
            4 => {
                if outcome.selected {
                    if !ctl.processed {
                        ctl.processed = true;
                        ctl.claiming = true;
                        ctl.chan.tx = Some(Tx::from_value(0)); // acknowledgment
                    } else {
                        ctl.chan.tx = Some(Tx::empty());
                    }
                }
                // the owner of the head cell answers the pending read
                if ctl.stage == Stage::Running
                    && self.owns_head(ctl)
                    && !ctl.claiming
                    && ctl.chan.quiet()
                {
                    let slot = cell_slot(ctl.head, ctl.n_hat);
                    ctl.chan.tx = Some(Tx::from_value(self.get_slot(ctl, slot) as u64));
                }
            }
            5 | 6 => {
                let res = ctl.chan.transmission(rho, outcome);
                if rho == 6 {
                    match (ctl.stage, res.completed) {
                        (Stage::Counting, Some(_)) => {
                            // an acknowledgment: everyone counts it, the
                            // acknowledger learns its index
                            if ctl.claiming {
                                ctl.my_index = Some(ctl.n_hat - 1);
                                ctl.claiming = false;
                            }
                            ctl.n_hat += 1;
                        }
                        (Stage::Running, Some(Some(v))) if v < self.spec.symbols.len() as u64 => {
                            self.apply_step(ctl, v as u8);
                        }
                        (Stage::Running, Some(_)) => {
                            // garbled read response
                            if ctl.leader {
                                ctl.chan.restart_pending = true;
                            }
                        }
                        (Stage::Running, None) => {
                            // a silent cycle while a read is due: the owner
                            // is missing, so initialization failed
                            if ctl.chan.quiet() {
                                ctl.await_empty += 1;
                                if ctl.await_empty >= 3 && ctl.leader {
                                    ctl.chan.restart_pending = true;
                                }
                            }
                        }
                        _ => {}
                    }
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
                if ctl.leader
                    && ctl.stage == Stage::Counting
                    && ctl.saw_unprocessed
                    && ctl.chan.quiet()
                {
                    StartPhase::Select
                } else {
                    StartPhase::Candidate
                }
            }
            _ => ctl.chan.start_phase(rho2, ctl.leader, rng),
        }
    }

    fn output(&self, ctl: &TmCtl) -> Option<u8> {
        ctl.output
    }

    fn correct(&self, ctls: &[TmCtl]) -> bool {
        let inputs: Vec<u8> = ctls.iter().map(|c| c.input).collect();
        match self.expected(&inputs) {
            Some(v) => ctls.iter().all(|c| c.output == Some(v)),
            None => false,
        }
    }
}

impl TmCtrl {
    /// Reference verdict for a population with these inputs: one blank input
    /// becomes the leader, the rest land on cells 0..n-2 (order must not
    /// matter to the machine), then the end marker.
    pub fn expected(&self, inputs: &[u8]) -> Option<u8> {
        let n = inputs.len() as u64;
        let mut rest: Vec<u8> = inputs.to_vec();
        let blank_at = rest.iter().position(|&x| x == self.spec.blank)?;
        rest.remove(blank_at);
        if let Some(e) = self.spec.end {
            rest.push(e);
        }
        let mut tm = RefTm::new(&self.spec, rest);
        tm.run(&self.spec, (self.bound)(n))
    }
}

/// Exact-fidelity check: run the protocol, and whenever every agent agrees
/// it is mid-execution (same generation, population count, state, head, and
/// step count), compare the assembled distributed tape and controller
/// against a reference machine initialized from that generation's actual
/// cell assignment and stepped the same number of times.
#[derive(Clone, Copy, Debug)]
pub struct FidelityStats {
    pub windows: u64,
    pub checks: u64,
    pub max_steps_checked: u64,
    pub converged: bool,
}

pub fn run_tm_fidelity(
    ctrl: &TmCtrl,
    inputs: &[u8],
    budget: u64,
    seed: u64,
) -> Result<FidelityStats, SimError> {
    use crate::broadcast::Rounds;
    use crate::core::Configuration;
    use rand::SeedableRng;

    let proto = Rounds::new(TmCtrl { spec: ctrl.spec.clone(), bound: ctrl.bound });
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let mut cfg: Configuration<Rounds<TmCtrl>> = Configuration::from_inputs(&proto, inputs, &mut rng);
    let n = cfg.n();

    let mut stats = FidelityStats { windows: 0, checks: 0, max_steps_checked: 0, converged: false };
    let mut reference: Option<(u64, RefTm)> = None; // (generation, machine)
    let spec = &proto.ctrl.spec;

    let mut steps = 0u64;
    while steps < budget {
        for _ in 0..n as u64 {
            crate::engine::step(&mut cfg, &proto, &mut rng);
        }
        steps += n as u64;

        let first = &cfg.agents[0].ctl;
        let (generation, n_hat, q, head, done) =
            (first.generation, first.n_hat, first.q, first.head, first.steps_done);
        let agreed = cfg.agents.iter().all(|a| {
            let c = &a.ctl;
            c.stage == Stage::Running
                && c.generation == generation
                && c.n_hat == n_hat
                && c.q == q
                && c.head == head
                && c.steps_done == done
        });
        if !agreed {
            continue;
        }
        if n_hat != n as u64 {
            continue; // miscounted generation; it will restart on its own
        }

        if reference.as_ref().map(|(g, _)| *g) != Some(generation) {
            if done != 0 {
                continue; // joined this generation too late to seed the oracle
            }
            // assemble the initial tape from the actual assignment
            let mut tape = vec![spec.blank; n - 1];
            for a in &cfg.agents {
                if let Some(j) = a.ctl.my_index {
                    tape[j as usize] = a.ctl.input;
                }
            }
            if let Some(e) = spec.end {
                tape.push(e);
            }
            reference = Some((generation, RefTm::new(spec, tape)));
            stats.windows += 1;
        }
        let (_, tm) = reference.as_mut().unwrap();
        while tm.steps < done {
            if !tm.step(spec) {
                return Err(SimError::ProtocolViolation(
                    "reference machine stuck before the distributed one".into(),
                ));
            }
        }
        if tm.q != q || tm.head != head {
            return Err(SimError::ProtocolViolation(format!(
                "controller mismatch after {done} steps: reference ({}, {}), distributed ({q}, {head})",
                tm.q, tm.head
            )));
        }
        let cells = tm.tape.len().max(1) as u64;
        for i in 0..cells {
            let owner = cell_owner(i, n as u64);
            let slot = cell_slot(i, n as u64);
            let agent = cfg
                .agents
                .iter()
                .find(|a| a.ctl.my_index == Some(owner))
                .ok_or_else(|| SimError::ProtocolViolation(format!("cell {i} has no owner")))?;
            let stored = proto.ctrl.get_slot(&agent.ctl, slot);
            let expect = tm.read(spec, i);
            if stored != expect {
                return Err(SimError::ProtocolViolation(format!(
                    "tape mismatch at cell {i} after {done} steps: {stored} != {expect}"
                )));
            }
        }
        stats.checks += 1;
        stats.max_steps_checked = stats.max_steps_checked.max(done);
        if proto.correct(&cfg.agents) {
            stats.converged = true;
            break;
        }
    }
    if !stats.converged {
        stats.converged = proto.correct(&cfg.agents);
    }
    Ok(stats)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::broadcast::{run_audited, Rounds};
    use crate::core::Configuration;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn parity() -> TmSpec {
        TmSpec::unary_parity()
    }

    #[test]
    fn parse_rejects_partial_tables_and_bad_moves() {
        let missing = "start a\nhalt h\nblank B\na B -> h B S\n";
        assert!(TmSpec::parse(missing).is_ok()); // total: only symbol is B
        let partial = "start a\nhalt h\nblank B\nend E\na B -> h B S\n";
        assert!(matches!(TmSpec::parse(partial), Err(SimError::Construction(_))));
        let badmove = "start a\nhalt h\nblank B\na B -> h B X\n";
        assert!(matches!(TmSpec::parse(badmove), Err(SimError::Construction(_))));
        let dup = "start a\nhalt h\nblank B\na B -> h B S\na B -> a B R\n";
        assert!(matches!(TmSpec::parse(dup), Err(SimError::Construction(_))));
        assert!(matches!(TmSpec::parse("blank B\n"), Err(SimError::Construction(_))));
    }

    #[test]
    fn parity_machine_reference_runs() {
        let spec = parity();
        let one = spec.symbol_index("1").unwrap();
        let b = spec.blank;
        let e = spec.end.unwrap();
        let acc = spec.symbol_index("acc").unwrap();
        let rej = spec.symbol_index("rej").unwrap();
        // three 1s, blanks interspersed: odd
        let mut tm = RefTm::new(&spec, vec![one, b, one, one, e]);
        assert_eq!(tm.run(&spec, 100), Some(rej));
        assert_eq!(tm.steps, 5); // four input cells plus the end marker
        // two 1s: even
        let mut tm = RefTm::new(&spec, vec![one, one, e]);
        assert_eq!(tm.run(&spec, 100), Some(acc));
        // zero 1s
        let mut tm = RefTm::new(&spec, vec![b, b, e]);
        assert_eq!(tm.run(&spec, 100), Some(acc));
        // bound too small: no verdict
        let mut tm = RefTm::new(&spec, vec![one, one, e]);
        assert_eq!(tm.run(&spec, 2), None);
    }

    #[test]
    fn machine_halted_at_start_reports_blank() {
        let spec = TmSpec::parse("start h\nhalt h\nblank B\n").unwrap();
        let mut tm = RefTm::new(&spec, vec![]);
        assert_eq!(tm.run(&spec, 10), Some(spec.blank));
        assert_eq!(tm.steps, 0);
    }

    #[test]
    fn cell_ownership_layout() {
        // n = 5: follower 2 owns cells 2, 6, 10, ...
        for (i, slot) in [(2u64, 0u64), (6, 1), (10, 2)] {
            assert_eq!(cell_owner(i, 5), 2);
            assert_eq!(cell_slot(i, 5), slot);
        }
        assert_eq!(cell_owner(4, 5), 0); // cell n-1 wraps to follower 0
        assert_eq!(cell_slot(4, 5), 1);
    }

    fn run_parity(inputs: &[u8], seed: u64, budget: u64) -> (bool, Configuration<Rounds<TmCtrl>>) {
        let proto = Rounds::new(TmCtrl::new(parity()));
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut cfg = Configuration::from_inputs(&proto, inputs, &mut rng);
        run_audited(&proto, &mut cfg, |c| proto.correct(&c.agents), budget, 4096, &mut rng);
        let ok = proto.correct(&cfg.agents);
        (ok, cfg)
    }

    #[test]
    fn expected_verdict_strips_one_blank_leader() {
        let ctrl = TmCtrl::new(parity());
        let spec = &ctrl.spec;
        let one = spec.symbol_index("1").unwrap();
        let acc = spec.symbol_index("acc").unwrap();
        let rej = spec.symbol_index("rej").unwrap();
        let b = spec.blank;
        assert_eq!(ctrl.expected(&[b, one, one, one, b]), Some(rej));
        assert_eq!(ctrl.expected(&[b, one, one, b, b]), Some(acc));
        assert_eq!(ctrl.expected(&[one, one]), None); // no eligible leader
    }

    #[test]
    fn distributed_parity_converges() {
        let spec = parity();
        let one = spec.symbol_index("1").unwrap();
        let b = spec.blank;
        let ctrl = TmCtrl::new(parity());
        for (inputs, seed) in [
            (vec![b, one, one, one, b], 11u64), // odd
            (vec![b, one, one, b, b], 12),      // even
        ] {
            let expect = ctrl.expected(&inputs).unwrap();
            let (ok, cfg) = run_parity(&inputs, seed, 2_000_000_000);
            assert!(ok, "seed {seed} did not converge");
            assert!(cfg.agents.iter().all(|a| a.ctl.output == Some(expect)));
        }
    }

    #[test]
    fn exhausted_runtime_bound_restarts() {
        let spec = parity();
        let one = spec.symbol_index("1").unwrap();
        let b = spec.blank;
        let mut ctrl = TmCtrl::new(parity());
        ctrl.bound = |_| 1; // the machine needs several steps
        let proto = Rounds::new(ctrl);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let inputs = [b, one, one, b];
        let mut cfg = Configuration::from_inputs(&proto, &inputs, &mut rng);
        run_audited(&proto, &mut cfg, |_| false, 400_000_000, 1 << 62, &mut rng);
        // never a verdict, but the protocol keeps restarting
        assert!(cfg.agents.iter().all(|a| a.ctl.output.is_none()));
        let max_gen = cfg.agents.iter().map(|a| a.ctl.generation).max().unwrap();
        assert!(max_gen >= 3, "only {max_gen} restarts observed");
        assert!(cfg.agents.iter().all(|a| a.ctl.steps_done <= 1));
    }

    #[test]
    fn restart_free_windows_match_reference_exactly() {
        let spec = parity();
        let one = spec.symbol_index("1").unwrap();
        let b = spec.blank;
        let ctrl = TmCtrl::new(parity());
        let stats =
            run_tm_fidelity(&ctrl, &[b, one, one, one, b, one], 2_000_000_000, 21).unwrap();
        assert!(stats.converged, "no convergence within budget");
        assert!(stats.windows >= 1);
        assert!(stats.checks > 0);
        assert!(stats.max_steps_checked >= 3, "checked only {} steps", stats.max_steps_checked);
    }
}
