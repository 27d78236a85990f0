use serde::{Deserialize, Serialize};

use crate::store::{Constraint, Value, Var};

/// A guarded alternative of a [`Process::Sum`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Branch {
    pub guard: Constraint,
    pub body: Process,
}

/// A guarded alternative of a [`Process::PSum`] with its weight.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WeightedBranch {
    pub guard: Constraint,
    pub body: Process,
    pub weight: f64,
}

/// Argument of a definition call. `ValueOf` reads the variable's assigned
/// value from the store at the moment the call unfolds.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Arg {
    Value(Value),
    ValueOf { value_of: Var },
}

impl From<Value> for Arg {
    fn from(v: Value) -> Self {
        Arg::Value(v)
    }
}

/// ntcc / pntcc agents.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "node", rename_all = "snake_case")]
pub enum Process {
    Skip,
    Tell {
        constraint: Constraint,
    },
    When {
        guard: Constraint,
        body: Box<Process>,
    },
    Par {
        children: Vec<Process>,
    },
    Next {
        body: Box<Process>,
    },
    Unless {
        guard: Constraint,
        body: Box<Process>,
    },
    Sum {
        branches: Vec<Branch>,
    },
    #[serde(rename = "psum")]
    PSum {
        branches: Vec<WeightedBranch>,
    },
    Bang {
        body: Box<Process>,
    },
    Star {
        body: Box<Process>,
    },
    Local {
        var: Var,
        body: Box<Process>,
    },
    Call {
        name: String,
        args: Vec<Arg>,
    },
}

impl Process {
    pub fn tell(c: Constraint) -> Self {
        Process::Tell { constraint: c }
    }

    pub fn when(guard: Constraint, body: Process) -> Self {
        Process::When {
            guard,
            body: Box::new(body),
        }
    }

    pub fn par<I: IntoIterator<Item = Process>>(children: I) -> Self {
        Process::Par {
            children: children.into_iter().collect(),
        }
    }

    pub fn next(body: Process) -> Self {
        Process::Next {
            body: Box::new(body),
        }
    }

    /// `next` applied `n` times.
    pub fn delay(body: Process, n: u32) -> Self {
        (0..n).fold(body, |p, _| Process::next(p))
    }

    pub fn unless(guard: Constraint, body: Process) -> Self {
        Process::Unless {
            guard,
            body: Box::new(body),
        }
    }

    pub fn sum<I: IntoIterator<Item = (Constraint, Process)>>(branches: I) -> Self {
        Process::Sum {
            branches: branches
                .into_iter()
                .map(|(guard, body)| Branch { guard, body })
                .collect(),
        }
    }

    pub fn psum<I: IntoIterator<Item = (Constraint, Process, f64)>>(branches: I) -> Self {
        Process::PSum {
            branches: branches
                .into_iter()
                .map(|(guard, body, weight)| WeightedBranch { guard, body, weight })
                .collect(),
        }
    }

    pub fn bang(body: Process) -> Self {
        Process::Bang {
            body: Box::new(body),
        }
    }

    pub fn star(body: Process) -> Self {
        Process::Star {
            body: Box::new(body),
        }
    }

    pub fn local(var: impl Into<Var>, body: Process) -> Self {
        Process::Local {
            var: var.into(),
            body: Box::new(body),
        }
    }

    pub fn call<I: IntoIterator<Item = Arg>>(name: impl Into<String>, args: I) -> Self {
        Process::Call {
            name: name.into(),
            args: args.into_iter().collect(),
        }
    }

    pub fn is_skip(&self) -> bool {
        matches!(self, Process::Skip)
    }

    /// Whether the process uses `next`, `unless`, `!` or `*` anywhere
    /// outside definition bodies.
    pub fn has_time_operator(&self) -> bool {
        match self {
            Process::Next { .. }
            | Process::Unless { .. }
            | Process::Bang { .. }
            | Process::Star { .. } => true,
            Process::Skip | Process::Tell { .. } | Process::Call { .. } => false,
            Process::When { body, .. } | Process::Local { body, .. } => body.has_time_operator(),
            Process::Par { children } => children.iter().any(Process::has_time_operator),
            Process::Sum { branches } => branches.iter().any(|b| b.body.has_time_operator()),
            Process::PSum { branches } => branches.iter().any(|b| b.body.has_time_operator()),
        }
    }

    /// Renames free occurrences of `from`. An inner `local` of the same name
    /// shadows it.
    pub fn rename_var(&self, from: &Var, to: &Var) -> Process {
        let r = |p: &Process| Box::new(p.rename_var(from, to));
        let rc = |c: &Constraint| c.rename(from, to);
        match self {
            Process::Skip => Process::Skip,
            Process::Tell { constraint } => Process::tell(rc(constraint)),
            Process::When { guard, body } => Process::When {
                guard: rc(guard),
                body: r(body),
            },
            Process::Par { children } => {
                Process::par(children.iter().map(|c| c.rename_var(from, to)))
            }
            Process::Next { body } => Process::Next { body: r(body) },
            Process::Unless { guard, body } => Process::Unless {
                guard: rc(guard),
                body: r(body),
            },
            Process::Sum { branches } => Process::Sum {
                branches: branches
                    .iter()
                    .map(|b| Branch {
                        guard: rc(&b.guard),
                        body: b.body.rename_var(from, to),
                    })
                    .collect(),
            },
            Process::PSum { branches } => Process::PSum {
                branches: branches
                    .iter()
                    .map(|b| WeightedBranch {
                        guard: rc(&b.guard),
                        body: b.body.rename_var(from, to),
                        weight: b.weight,
                    })
                    .collect(),
            },
            Process::Bang { body } => Process::Bang { body: r(body) },
            Process::Star { body } => Process::Star { body: r(body) },
            Process::Local { var, body } if var == from => Process::Local {
                var: var.clone(),
                body: body.clone(),
            },
            Process::Local { var, body } => Process::Local {
                var: var.clone(),
                body: r(body),
            },
            Process::Call { name, args } => Process::Call {
                name: name.clone(),
                args: args
                    .iter()
                    .map(|a| match a {
                        Arg::ValueOf { value_of } if value_of == from => Arg::ValueOf {
                            value_of: to.clone(),
                        },
                        other => other.clone(),
                    })
                    .collect(),
            },
        }
    }
}
