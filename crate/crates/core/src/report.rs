//! Serializable audit records shared by every inequality check.

use serde::Serialize;
use serde_json::Value;

/// One checked (or merely measured) inequality `lhs <= rhs`.
///
/// `pass` is `None` for reported witnesses whose constant is not explicit;
/// those never fail.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AuditRecord {
    pub statement_id: String,
    pub inequality: String,
    pub parameters: Value,
    pub lhs: f64,
    pub rhs: f64,
    pub margin: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub pass: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness: Option<f64>,
}

impl AuditRecord {
    /// Hard check `lhs <= rhs + tolerance`.
    pub fn check(
        statement_id: &str,
        inequality: &str,
        parameters: Value,
        lhs: f64,
        rhs: f64,
        tolerance: f64,
    ) -> Self {
        AuditRecord {
            statement_id: statement_id.to_string(),
            inequality: inequality.to_string(),
            parameters,
            lhs,
            rhs,
            margin: rhs - lhs,
            pass: Some(lhs <= rhs + tolerance),
            witness: None,
        }
    }

    /// Reported value with no pass/fail semantics.
    pub fn witness(statement_id: &str, inequality: &str, parameters: Value, lhs: f64, rhs: f64, witness: f64) -> Self {
        AuditRecord {
            statement_id: statement_id.to_string(),
            inequality: inequality.to_string(),
            parameters,
            lhs,
            rhs,
            margin: rhs - lhs,
            pass: None,
            witness: Some(witness),
        }
    }

    pub fn failed(&self) -> bool {
        self.pass == Some(false)
    }
}

/// A batch of records from one audit operation.
#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct AuditReport {
    pub records: Vec<AuditRecord>,
}

impl AuditReport {
    pub fn push(&mut self, record: AuditRecord) {
        self.records.push(record);
    }

    pub fn extend(&mut self, other: AuditReport) {
        self.records.extend(other.records);
    }

    /// True when no hard check failed.
    pub fn passed(&self) -> bool {
        !self.records.iter().any(AuditRecord::failed)
    }

    pub fn failures(&self) -> impl Iterator<Item = &AuditRecord> {
        self.records.iter().filter(|r| r.failed())
    }
}
