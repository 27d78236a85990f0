//! ntcc / pntcc interpreter.
//!
//! Each time unit starts from a fresh store holding only the environment's
//! input. The residual process runs to quiescence over that store, and
//! whatever it scheduled with `next`, `unless`, `!` or `*` becomes the
//! process of the following unit.

mod defs;
mod process;
mod rng;
mod unit;

use std::collections::HashMap;
use std::time::{Duration, Instant};

use serde::ser::SerializeStruct;
use serde::{Serialize, Serializer};
use thiserror::Error;

pub use defs::{Definition, DefinitionError, Definitions};
pub use process::{Arg, Branch, Process, WeightedBranch};
pub use rng::{choose_prob, EngineRng};
pub use unit::{ptc, tptc, UnitOutcome};

use crate::store::{Constraint, Domain, IntDomain, SetDomain, Snapshot, Store, StoreError, Var, VarKind};
use unit::UnitRun;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum EngineError {
    #[error(transparent)]
    Definition(#[from] DefinitionError),
    #[error(transparent)]
    Store(#[from] StoreError),
    #[error("ptc applies only to processes without time operators")]
    TimedProcess,
}

/// When `unless c next P` schedules `P`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum UnlessMode {
    /// `P` runs unless the final store entails `c`: it also reacts when `c`
    /// cannot be deduced.
    #[default]
    NotEntailed,
    /// Table form: `P` runs only when the reified guard is decided false.
    Disentailed,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EngineConfig {
    /// `*P` fires after a delay drawn uniformly from `0..=star_bound`.
    pub star_bound: u32,
    pub unless: UnlessMode,
}

impl Default for EngineConfig {
    fn default() -> Self {
        Self {
            star_bound: 16,
            unless: UnlessMode::NotEntailed,
        }
    }
}

/// Initial domains for variables, declared on first use in each unit.
/// Variables not listed get `[0, 2^32-1]` (or the unknown set).
#[derive(Clone, Debug, Default)]
pub struct Signature {
    decls: HashMap<Var, Domain>,
}

impl Signature {
    pub fn declare(&mut self, var: impl Into<Var>, domain: Domain) {
        self.decls.insert(var.into(), domain);
    }

    pub fn domain_for(&self, var: &Var, kind: VarKind) -> Domain {
        match self.decls.get(var) {
            Some(d) => d.clone(),
            None => match kind {
                VarKind::Int => Domain::Int(IntDomain::full()),
                VarKind::Set => Domain::Set(SetDomain::unknown()),
            },
        }
    }
}

/// One unit's result as recorded in traces.
#[derive(Clone, Debug)]
pub struct TimeUnitOutput {
    pub unit: u64,
    pub store: Store,
    pub future: Process,
    pub failed: bool,
    pub activations: usize,
}

impl TimeUnitOutput {
    pub fn snapshot(&self) -> Snapshot {
        self.store.snapshot()
    }
}

impl Serialize for TimeUnitOutput {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let mut st = s.serialize_struct("TimeUnitOutput", 5)?;
        st.serialize_field("unit", &self.unit)?;
        st.serialize_field("snapshot", &self.snapshot())?;
        st.serialize_field("future", &self.future)?;
        st.serialize_field("failed", &self.failed)?;
        st.serialize_field("activations", &self.activations)?;
        st.end()
    }
}

#[derive(Clone, Debug, Default, Serialize)]
pub struct ExecutionTrace {
    pub units: Vec<TimeUnitOutput>,
    /// Wall-clock time of each `step`, parallel to `units`.
    #[serde(skip)]
    pub durations: Vec<Duration>,
}

impl ExecutionTrace {
    pub fn len(&self) -> usize {
        self.units.len()
    }

    pub fn is_empty(&self) -> bool {
        self.units.is_empty()
    }
}

#[derive(Clone, Debug)]
pub struct Engine {
    config: EngineConfig,
    defs: Definitions,
    signature: Signature,
    rng: EngineRng,
    residual: Process,
    unit: u64,
    locals: u64,
}

impl Engine {
    pub fn new(program: Process, defs: Definitions, seed: u64) -> Self {
        Self::with_config(program, defs, seed, EngineConfig::default())
    }

    pub fn with_config(program: Process, defs: Definitions, seed: u64, config: EngineConfig) -> Self {
        Engine {
            config,
            defs,
            signature: Signature::default(),
            rng: EngineRng::new(seed),
            residual: program,
            unit: 0,
            locals: 0,
        }
    }

    pub fn config(&self) -> &EngineConfig {
        &self.config
    }

    pub fn definitions(&self) -> &Definitions {
        &self.defs
    }

    /// Definitions may be added between units.
    pub fn definitions_mut(&mut self) -> &mut Definitions {
        &mut self.defs
    }

    pub fn signature_mut(&mut self) -> &mut Signature {
        &mut self.signature
    }

    /// The process the next `step` will run.
    pub fn residual(&self) -> &Process {
        &self.residual
    }

    /// Units executed so far.
    pub fn unit(&self) -> u64 {
        self.unit
    }

    /// Runs one time unit with `input` as the environment's store.
    pub fn step(&mut self, input: &[Constraint]) -> Result<TimeUnitOutput, EngineError> {
        let program = std::mem::replace(&mut self.residual, Process::Skip);
        let mut run = UnitRun::new(&self.defs, &mut self.rng, &self.config, &self.signature, &mut self.locals);
        for c in input {
            run.input(c)?;
        }
        run.schedule(program);
        run.quiesce()?;
        let outcome = run.finish();
        self.unit += 1;
        self.residual = outcome.future.clone();
        Ok(TimeUnitOutput {
            unit: self.unit,
            store: outcome.store,
            future: outcome.future,
            failed: outcome.failed,
            activations: outcome.activations,
        })
    }

    /// Runs `n` units; missing stimuli are empty inputs.
    pub fn run(&mut self, stimuli: &[Vec<Constraint>], n: usize) -> Result<ExecutionTrace, EngineError> {
        let mut trace = ExecutionTrace::default();
        for i in 0..n {
            let input = stimuli.get(i).map(Vec::as_slice).unwrap_or(&[]);
            let start = Instant::now();
            let out = self.step(input)?;
            trace.durations.push(start.elapsed());
            trace.units.push(out);
        }
        Ok(trace)
    }
}
