use serde::Serialize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Holds,
    /// No instance satisfied the premise of the conclusion.
    Vacuous,
    Violated,
    /// A hypothesis failed, so the conclusion was not evaluated.
    HypothesisFailed,
}

impl Status {
    pub fn token(self) -> &'static str {
        match self {
            Status::Holds => "holds",
            Status::Vacuous => "vacuous",
            Status::Violated => "violated",
            Status::HypothesisFailed => "hypothesis_failed",
        }
    }
}

/// Coordinates of the worst violation found.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Witness {
    pub indices: Vec<usize>,
    pub lambda: Option<f64>,
    pub points: Vec<f64>,
}

impl Witness {
    pub fn new(indices: Vec<usize>, lambda: Option<f64>, points: Vec<f64>) -> Self {
        Self { indices, lambda, points }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Verdict {
    pub check_id: String,
    /// Label of the instance the check ran on; empty for ad hoc calls.
    pub instance: String,
    pub status: Status,
    /// False only for [`Status::Violated`].
    pub holds: bool,
    pub max_violation: f64,
    pub tol: f64,
    pub witness: Option<Witness>,
    pub notes: String,
}

impl Verdict {
    pub fn hypothesis_failed(check_id: &str, tol: f64, notes: impl Into<String>) -> Self {
        Self {
            check_id: check_id.to_string(),
            instance: String::new(),
            status: Status::HypothesisFailed,
            holds: true,
            max_violation: 0.0,
            tol,
            witness: None,
            notes: notes.into(),
        }
    }

    pub fn with_instance(mut self, instance: impl Into<String>) -> Self {
        self.instance = instance.into();
        self
    }

    /// True when the conclusion was evaluated on at least one instance and
    /// failed.
    pub fn is_failure(&self) -> bool {
        self.status == Status::Violated
    }

    pub fn summary_line(&self) -> String {
        let mut line = format!(
            "{:<28} {:<40} {:<18} max_violation={:e} tol={:e}",
            self.check_id,
            self.instance,
            self.status.token(),
            self.max_violation,
            self.tol
        );
        if !self.notes.is_empty() {
            line.push_str(" | ");
            line.push_str(&self.notes);
        }
        line
    }
}

/// Accumulates per-instance violations of a conclusion.
#[derive(Debug)]
pub(crate) struct Sweep {
    check_id: &'static str,
    tol: f64,
    checked: usize,
    max_violation: f64,
    witness: Option<Witness>,
    failed: bool,
}

impl Sweep {
    pub(crate) fn new(check_id: &'static str, tol: f64) -> Self {
        Self {
            check_id,
            tol,
            checked: 0,
            max_violation: 0.0,
            witness: None,
            failed: false,
        }
    }

    /// Records an instance whose conclusion fails outright, whatever the
    /// violation measure says.
    pub(crate) fn fail(&mut self, violation: f64, witness: Witness) {
        self.checked += 1;
        self.max_violation = self.max_violation.max(violation);
        if !self.failed {
            self.witness = Some(witness);
        }
        self.failed = true;
    }

    /// Records one instance whose premise held. `violation` is the amount by
    /// which the conclusion fails; non-positive means it holds.
    pub(crate) fn observe(&mut self, violation: f64, witness: impl FnOnce() -> Witness) {
        self.observe_with_tol(violation, self.tol, witness);
    }

    /// As [`Sweep::observe`] but against an instance-specific tolerance; the
    /// stored violation is the excess over `tol - self.tol`.
    pub(crate) fn observe_with_tol(&mut self, violation: f64, tol: f64, witness: impl FnOnce() -> Witness) {
        self.checked += 1;
        let v = violation - (tol - self.tol);
        if v > self.max_violation || v.is_nan() {
            self.max_violation = if v.is_nan() { f64::MAX } else { v.min(f64::MAX) };
            if self.max_violation > self.tol {
                self.witness = Some(witness());
            }
        }
    }

    pub(crate) fn finish(self, notes: impl Into<String>) -> Verdict {
        let mut notes = notes.into();
        let status = if self.checked == 0 {
            notes = if notes.is_empty() { "vacuous".into() } else { format!("vacuous; {notes}") };
            Status::Vacuous
        } else if self.failed || self.max_violation > self.tol {
            Status::Violated
        } else {
            Status::Holds
        };
        Verdict {
            check_id: self.check_id.to_string(),
            instance: String::new(),
            status,
            holds: status != Status::Violated,
            max_violation: self.max_violation,
            tol: self.tol,
            witness: self.witness,
            notes,
        }
    }
}
