//! Process definitions `q(x) =def P_q`.
//!
//! A definition body is produced from the call's argument values, so a
//! parameterised body is instantiated the way a macro would be. Recursive
//! calls must sit under a `next` (or the implicit next of `unless`): ntcc
//! does not allow recursion within a time unit.

use std::collections::HashMap;
use std::fmt;
use std::sync::Arc;

use thiserror::Error;

use super::process::Process;
use crate::store::Value;

type BodyFn = dyn Fn(&[Value]) -> Process + Send + Sync;

#[derive(Clone)]
pub struct Definition {
    params: Vec<String>,
    body: Arc<BodyFn>,
}

impl Definition {
    pub fn params(&self) -> &[String] {
        &self.params
    }

    pub fn instantiate(&self, args: &[Value]) -> Process {
        (self.body)(args)
    }
}

impl fmt::Debug for Definition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Definition")
            .field("params", &self.params)
            .finish_non_exhaustive()
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum DefinitionError {
    #[error("no definition named `{0}`")]
    Unbound(String),
    #[error("`{name}` takes {expected} argument(s), got {got}")]
    Arity {
        name: String,
        expected: usize,
        got: usize,
    },
    #[error("`{0}` calls itself outside the scope of a next")]
    UnguardedRecursion(String),
    #[error("`{0}` is already defined")]
    Duplicate(String),
    #[error("call chain through `{0}` exceeds the per-unit unfolding depth")]
    UnfoldingDepth(String),
}

#[derive(Clone, Debug, Default)]
pub struct Definitions {
    table: HashMap<String, Definition>,
}

impl Definitions {
    pub fn new() -> Self {
        Self::default()
    }

    /// Registers a parameterised definition. The body is instantiated once
    /// with all-zero arguments to check the guarded-recursion rule.
    pub fn define<F>(&mut self, name: &str, params: &[&str], body: F) -> Result<(), DefinitionError>
    where
        F: Fn(&[Value]) -> Process + Send + Sync + 'static,
    {
        if self.table.contains_key(name) {
            return Err(DefinitionError::Duplicate(name.to_string()));
        }
        let probe = body(&vec![0; params.len()]);
        check_guarded(&probe, name, false)?;
        self.table.insert(
            name.to_string(),
            Definition {
                params: params.iter().map(|p| p.to_string()).collect(),
                body: Arc::new(body),
            },
        );
        Ok(())
    }

    /// Replaces (or adds) a definition, with the same recursion check.
    /// Calls already scheduled pick up the new body when they unfold.
    pub fn redefine<F>(&mut self, name: &str, params: &[&str], body: F) -> Result<(), DefinitionError>
    where
        F: Fn(&[Value]) -> Process + Send + Sync + 'static,
    {
        let previous = self.table.remove(name);
        let result = self.define(name, params, body);
        if let (Err(_), Some(old)) = (&result, previous) {
            self.table.insert(name.to_string(), old);
        }
        result
    }

    /// Registers a definition without parameters.
    pub fn define_static(&mut self, name: &str, body: Process) -> Result<(), DefinitionError> {
        self.define(name, &[], move |_| body.clone())
    }

    pub fn get(&self, name: &str) -> Option<&Definition> {
        self.table.get(name)
    }

    pub fn contains(&self, name: &str) -> bool {
        self.table.contains_key(name)
    }

    /// Looks up `name` and instantiates it with `args`.
    pub fn unfold(&self, name: &str, args: &[Value]) -> Result<Process, DefinitionError> {
        let def = self
            .get(name)
            .ok_or_else(|| DefinitionError::Unbound(name.to_string()))?;
        if def.params.len() != args.len() {
            return Err(DefinitionError::Arity {
                name: name.to_string(),
                expected: def.params.len(),
                got: args.len(),
            });
        }
        Ok(def.instantiate(args))
    }
}

fn check_guarded(p: &Process, name: &str, under_next: bool) -> Result<(), DefinitionError> {
    match p {
        Process::Call { name: callee, .. } if callee == name && !under_next => {
            Err(DefinitionError::UnguardedRecursion(name.to_string()))
        }
        Process::Skip | Process::Tell { .. } | Process::Call { .. } => Ok(()),
        Process::Next { body } | Process::Unless { body, .. } => check_guarded(body, name, true),
        Process::When { body, .. }
        | Process::Bang { body }
        | Process::Star { body }
        | Process::Local { body, .. } => check_guarded(body, name, under_next),
        Process::Par { children } => children
            .iter()
            .try_for_each(|c| check_guarded(c, name, under_next)),
        Process::Sum { branches } => branches
            .iter()
            .try_for_each(|b| check_guarded(&b.body, name, under_next)),
        Process::PSum { branches } => branches
            .iter()
            .try_for_each(|b| check_guarded(&b.body, name, under_next)),
    }
}
