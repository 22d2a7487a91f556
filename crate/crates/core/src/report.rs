//! Pass/fail check records shared by every verification routine.

use serde::Serialize;
use serde_json::Value;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Pass,
    Fail,
    Skipped,
}

#[derive(Clone, Debug, Serialize)]
pub struct CheckEntry {
    pub check_id: String,
    pub paper_anchor: String,
    pub status: Status,
    pub data: Value,
}

#[derive(Clone, Debug, Default, Serialize)]
pub struct Report {
    pub entries: Vec<CheckEntry>,
}

impl Report {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn check(&mut self, id: impl Into<String>, anchor: impl Into<String>, ok: bool, data: Value) -> bool {
        self.entries.push(CheckEntry {
            check_id: id.into(),
            paper_anchor: anchor.into(),
            status: if ok { Status::Pass } else { Status::Fail },
            data,
        });
        ok
    }

    pub fn skip(&mut self, id: impl Into<String>, anchor: impl Into<String>, data: Value) {
        self.entries.push(CheckEntry {
            check_id: id.into(),
            paper_anchor: anchor.into(),
            status: Status::Skipped,
            data,
        });
    }

    pub fn extend(&mut self, other: Report) {
        self.entries.extend(other.entries);
    }

    pub fn all_pass(&self) -> bool {
        self.entries.iter().all(|e| e.status != Status::Fail)
    }

    pub fn failures(&self) -> impl Iterator<Item = &CheckEntry> {
        self.entries.iter().filter(|e| e.status == Status::Fail)
    }

    pub fn get(&self, id: &str) -> Option<&CheckEntry> {
        self.entries.iter().find(|e| e.check_id == id)
    }
}
