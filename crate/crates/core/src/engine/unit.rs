//! Execution of one time unit.
//!
//! Agents are pulled from an agenda. Tells post immediately; `when`, sums
//! and calls whose arguments are not yet known wait in a pending list that
//! is re-examined after the agenda drains, until a round fires nothing.
//! Time operators only contribute to the future, except `unless`, which is
//! decided against the final store.

use std::collections::{HashSet, VecDeque};
use std::mem;

use super::defs::{DefinitionError, Definitions};
use super::process::{Arg, Branch, Process, WeightedBranch};
use super::rng::{choose_prob, EngineRng};
use super::{EngineConfig, EngineError, Signature, UnlessMode};
use crate::store::{Constraint, Entailment, PropagationResult, Store, Value, Var};

/// Bound on immediate (non-`next`) call chains within a unit.
const MAX_UNFOLD_DEPTH: u32 = 256;

/// What a time unit produced.
#[derive(Clone, Debug)]
pub struct UnitOutcome {
    pub store: Store,
    /// The process to run at the next unit.
    pub future: Process,
    pub failed: bool,
    /// Agents scheduled during the unit, `par` nodes excluded.
    pub activations: usize,
}

struct Item {
    process: Process,
    depth: u32,
}

enum Waiting {
    Sum(Vec<Branch>),
    PSum(Vec<WeightedBranch>),
    Call { name: String, args: Vec<Arg> },
}

struct Pending {
    waiting: Waiting,
    depth: u32,
}

pub(crate) struct UnitRun<'a> {
    store: Store,
    defs: &'a Definitions,
    rng: &'a mut EngineRng,
    config: &'a EngineConfig,
    signature: &'a Signature,
    locals: &'a mut u64,
    hidden: HashSet<Var>,
    agenda: VecDeque<Item>,
    pending: Vec<Pending>,
    unless: Vec<(Constraint, Process)>,
    future: Vec<Process>,
    activations: usize,
    failed: bool,
}

impl<'a> UnitRun<'a> {
    pub(crate) fn new(
        defs: &'a Definitions,
        rng: &'a mut EngineRng,
        config: &'a EngineConfig,
        signature: &'a Signature,
        locals: &'a mut u64,
    ) -> Self {
        Self::with_store(Store::default(), defs, rng, config, signature, locals)
    }

    pub(crate) fn with_store(
        store: Store,
        defs: &'a Definitions,
        rng: &'a mut EngineRng,
        config: &'a EngineConfig,
        signature: &'a Signature,
        locals: &'a mut u64,
    ) -> Self {
        let failed = store.is_failed();
        UnitRun {
            store,
            defs,
            rng,
            config,
            signature,
            locals,
            hidden: HashSet::new(),
            agenda: VecDeque::new(),
            pending: Vec::new(),
            unless: Vec::new(),
            future: Vec::new(),
            activations: 0,
            failed,
        }
    }

    /// Posts an environment constraint.
    pub(crate) fn input(&mut self, c: &Constraint) -> Result<(), EngineError> {
        if self.failed {
            return Ok(());
        }
        self.post(c.clone())
    }

    pub(crate) fn schedule(&mut self, p: Process) {
        self.agenda.push_back(Item {
            process: p,
            depth: 0,
        });
    }

    fn ensure_declared(&mut self, c: &Constraint) {
        let store = &mut self.store;
        let hidden = &self.hidden;
        let signature = self.signature;
        c.for_each_var(&mut |v, kind| {
            if store.is_declared(v) {
                return;
            }
            let dom = signature.domain_for(v, kind);
            // Neither call can fail: the name is fresh.
            let _ = if hidden.contains(v) {
                store.declare_hidden(v.clone(), dom)
            } else {
                store.declare(v.clone(), dom)
            };
        });
    }

    fn post(&mut self, c: Constraint) -> Result<(), EngineError> {
        self.ensure_declared(&c);
        match self.store.post(c)? {
            PropagationResult::Consistent => {}
            PropagationResult::Failed => self.failed = true,
        }
        Ok(())
    }

    fn entails(&mut self, c: &Constraint) -> Entailment {
        self.ensure_declared(c);
        self.store.entailment_status(c)
    }

    fn resolve_args(&self, args: &[Arg]) -> Option<Vec<Value>> {
        args.iter()
            .map(|a| match a {
                Arg::Value(v) => Some(*v),
                Arg::ValueOf { value_of } => self.store.value(value_of),
            })
            .collect()
    }

    fn unfold(&mut self, name: &str, args: &[Value], depth: u32) -> Result<(), EngineError> {
        if depth >= MAX_UNFOLD_DEPTH {
            return Err(DefinitionError::UnfoldingDepth(name.to_string()).into());
        }
        let body = self.defs.unfold(name, args)?;
        self.agenda.push_back(Item {
            process: body,
            depth: depth + 1,
        });
        Ok(())
    }

    fn fresh_local(&mut self, var: &Var) -> Var {
        let fresh = Var::new(format!("{var}#{}", *self.locals));
        *self.locals += 1;
        self.hidden.insert(fresh.clone());
        fresh
    }

    fn step_item(&mut self, item: Item) -> Result<(), EngineError> {
        let Item { process, depth } = item;
        let push = |agenda: &mut VecDeque<Item>, p: Process| agenda.push_back(Item { process: p, depth });
        match process {
            Process::Skip => {}
            Process::Par { children } => {
                for c in children {
                    push(&mut self.agenda, c);
                }
            }
            Process::Tell { constraint } => {
                self.activations += 1;
                if !self.failed {
                    self.post(constraint)?;
                }
            }
            Process::When { guard, body } => {
                self.activations += 1;
                self.wait(Waiting::Sum(vec![Branch { guard, body: *body }]), depth);
            }
            Process::Sum { branches } => {
                self.activations += 1;
                self.wait(Waiting::Sum(branches), depth);
            }
            Process::PSum { branches } => {
                self.activations += 1;
                self.wait(Waiting::PSum(branches), depth);
            }
            Process::Next { body } => {
                self.activations += 1;
                self.future.push(*body);
            }
            Process::Unless { guard, body } => {
                self.activations += 1;
                self.unless.push((guard, *body));
            }
            Process::Bang { body } => {
                self.activations += 1;
                self.future.push(Process::Bang { body: body.clone() });
                push(&mut self.agenda, *body);
            }
            Process::Star { body } => {
                self.activations += 1;
                match self.rng.up_to(self.config.star_bound) {
                    0 => push(&mut self.agenda, *body),
                    d => self.future.push(Process::delay(*body, d - 1)),
                }
            }
            Process::Local { var, body } => {
                self.activations += 1;
                let fresh = self.fresh_local(&var);
                push(&mut self.agenda, body.rename_var(&var, &fresh));
            }
            Process::Call { name, args } => {
                self.activations += 1;
                match self.resolve_args(&args) {
                    Some(values) => self.unfold(&name, &values, depth)?,
                    None => self.wait(Waiting::Call { name, args }, depth),
                }
            }
        }
        Ok(())
    }

    fn wait(&mut self, waiting: Waiting, depth: u32) {
        // After failure, guarded activations are discarded for the unit.
        if !self.failed {
            self.pending.push(Pending { waiting, depth });
        }
    }

    fn drain(&mut self) -> Result<(), EngineError> {
        while let Some(item) = self.agenda.pop_front() {
            self.step_item(item)?;
        }
        Ok(())
    }

    /// One examination round over every pending agent. Returns whether any fired.
    fn examine(&mut self) -> Result<bool, EngineError> {
        let mut fired = false;
        for Pending { waiting, depth } in mem::take(&mut self.pending) {
            let kept = match waiting {
                Waiting::Sum(mut branches) => {
                    let enabled: Vec<usize> = (0..branches.len())
                        .filter(|&i| self.entails(&branches[i].guard) == Entailment::Entailed)
                        .collect();
                    if enabled.is_empty() {
                        Some(Waiting::Sum(branches))
                    } else {
                        let pick = enabled[self.rng.index(enabled.len())];
                        let body = branches.swap_remove(pick).body;
                        self.agenda.push_back(Item { process: body, depth });
                        None
                    }
                }
                Waiting::PSum(mut branches) => {
                    let flags: Vec<(bool, f64)> = (0..branches.len())
                        .map(|i| {
                            let on = self.entails(&branches[i].guard) == Entailment::Entailed;
                            (on, branches[i].weight)
                        })
                        .collect();
                    match choose_prob(&flags, self.rng) {
                        Some(pick) => {
                            let body = branches.swap_remove(pick).body;
                            self.agenda.push_back(Item { process: body, depth });
                            None
                        }
                        None => Some(Waiting::PSum(branches)),
                    }
                }
                Waiting::Call { name, args } => match self.resolve_args(&args) {
                    Some(values) => {
                        self.unfold(&name, &values, depth)?;
                        None
                    }
                    None => Some(Waiting::Call { name, args }),
                },
            };
            match kept {
                Some(waiting) => self.pending.push(Pending { waiting, depth }),
                None => fired = true,
            }
        }
        Ok(fired)
    }

    /// Runs the agenda and the guard rounds to quiescence.
    pub(crate) fn quiesce(&mut self) -> Result<(), EngineError> {
        loop {
            self.drain()?;
            if self.failed {
                self.pending.clear();
                return Ok(());
            }
            if !self.examine()? {
                return Ok(());
            }
        }
    }

    /// Resolves `unless` against the final store and assembles the future.
    pub(crate) fn finish(mut self) -> UnitOutcome {
        for (guard, body) in mem::take(&mut self.unless) {
            let fire = if self.failed {
                true
            } else {
                let status = self.entails(&guard);
                match self.config.unless {
                    UnlessMode::NotEntailed => status != Entailment::Entailed,
                    UnlessMode::Disentailed => status == Entailment::Disentailed,
                }
            };
            if fire {
                self.future.push(body);
            }
        }
        UnitOutcome {
            future: compose(self.future),
            store: self.store,
            failed: self.failed,
            activations: self.activations,
        }
    }
}

/// Parallel composition of `parts`, flattened; `Skip` when empty.
pub(crate) fn compose(parts: Vec<Process>) -> Process {
    let mut flat = Vec::with_capacity(parts.len());
    let mut stack: Vec<Process> = parts.into_iter().rev().collect();
    while let Some(p) = stack.pop() {
        match p {
            Process::Skip => {}
            Process::Par { children } => stack.extend(children.into_iter().rev()),
            other => flat.push(other),
        }
    }
    match flat.len() {
        0 => Process::Skip,
        1 => flat.pop().unwrap_or(Process::Skip),
        _ => Process::Par { children: flat },
    }
}

/// Encodes a process without time operators into `store`: tells are posted,
/// guards are reified until no further branch fires.
pub fn ptc(
    p: &Process,
    store: Store,
    defs: &Definitions,
    rng: &mut EngineRng,
) -> Result<UnitOutcome, EngineError> {
    if p.has_time_operator() {
        return Err(EngineError::TimedProcess);
    }
    tptc(p, store, defs, rng, &EngineConfig::default())
}

/// Runs `p` for one unit over `store`: the current-unit output together with
/// the future of `p`.
pub fn tptc(
    p: &Process,
    store: Store,
    defs: &Definitions,
    rng: &mut EngineRng,
    config: &EngineConfig,
) -> Result<UnitOutcome, EngineError> {
    let signature = Signature::default();
    let mut locals = 0;
    let mut run = UnitRun::with_store(store, defs, rng, config, &signature, &mut locals);
    run.schedule(p.clone());
    run.quiesce()?;
    Ok(run.finish())
}
