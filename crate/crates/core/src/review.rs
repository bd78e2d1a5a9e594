//! Human-in-the-loop review: dual-rater annotation with expert
//! adjudication, and accept/reject triage of classifier decisions.
//!
//! All state changes append to a line-delimited event log; the in-memory
//! store is a pure fold over (classifier artifacts, log), so restarting a
//! review session reconstructs identical queues. Classifier outputs are
//! never mutated.

use crate::analytics::{cohens_kappa, KappaResult};
use crate::category::Category;
use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::io::{BufRead, Write};
use std::path::{Path, PathBuf};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ReviewStatus {
    Pending,
    Accepted,
    Rejected,
    Disputed,
}

/// One item under review: the classifier's decision on a post plus the
/// human decisions layered on top.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ReviewItem {
    pub id: String,
    pub image_path: Option<String>,
    pub text: Option<String>,
    /// Classifier decision and its confidence.
    pub decision: Category,
    pub confidence: f64,
    pub cam_path: Option<String>,
    pub status: ReviewStatus,
    /// Up to two (rater id, category) decisions.
    pub rater_decisions: Vec<(String, Category)>,
    pub expert_decision: Option<Category>,
}

impl ReviewItem {
    /// The label an accepted item contributes to the retraining export.
    pub fn final_label(&self) -> Option<Category> {
        if self.status != ReviewStatus::Accepted {
            return None;
        }
        if let Some(c) = self.expert_decision {
            return Some(c);
        }
        if self.rater_decisions.len() == 2 {
            return Some(self.rater_decisions[0].1);
        }
        Some(self.decision)
    }
}

/// Classifier-side facts seeding an item; immutable for the review's life.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ItemSeed {
    pub id: String,
    pub image_path: Option<String>,
    pub text: Option<String>,
    pub decision: Category,
    pub confidence: f64,
    pub cam_path: Option<String>,
}

/// An append-only log record.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ReviewEvent {
    RaterDecision {
        item_id: String,
        rater_id: String,
        category: Category,
    },
    ExpertResolution {
        item_id: String,
        category: Category,
    },
    Triage {
        item_id: String,
        accept: bool,
    },
}

impl ReviewEvent {
    fn item_id(&self) -> &str {
        match self {
            ReviewEvent::RaterDecision { item_id, .. } => item_id,
            ReviewEvent::ExpertResolution { item_id, .. } => item_id,
            ReviewEvent::Triage { item_id, .. } => item_id,
        }
    }
}

#[derive(Serialize, Deserialize)]
struct LogLine {
    seq: u64,
    #[serde(flatten)]
    event: ReviewEvent,
}

/// Listing order; annotation works hardest-first (ascending confidence),
/// false-positive triage most-confident-first.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SortOrder {
    Asc,
    Desc,
}

pub const DEFAULT_PAGE_SIZE: usize = 50;

pub struct ReviewStore {
    items: BTreeMap<String, ReviewItem>,
    log_path: PathBuf,
    next_seq: u64,
}

impl ReviewStore {
    /// Builds the store from classifier artifacts and replays any existing
    /// event log at `log_path`.
    pub fn open(seeds: Vec<ItemSeed>, log_path: &Path) -> Result<ReviewStore> {
        let mut items = BTreeMap::new();
        for seed in seeds {
            items.insert(
                seed.id.clone(),
                ReviewItem {
                    id: seed.id,
                    image_path: seed.image_path,
                    text: seed.text,
                    decision: seed.decision,
                    confidence: seed.confidence,
                    cam_path: seed.cam_path,
                    status: ReviewStatus::Pending,
                    rater_decisions: Vec::new(),
                    expert_decision: None,
                },
            );
        }
        let mut store = ReviewStore {
            items,
            log_path: log_path.to_path_buf(),
            next_seq: 0,
        };
        if log_path.exists() {
            let file = std::fs::File::open(log_path).map_err(|e| Error::io(log_path, e))?;
            for line in std::io::BufReader::new(file).lines() {
                let line = line.map_err(|e| Error::io(log_path, e))?;
                if line.trim().is_empty() {
                    continue;
                }
                let record: LogLine = serde_json::from_str(&line)?;
                store.apply(&record.event)?;
                store.next_seq = store.next_seq.max(record.seq + 1);
            }
        }
        Ok(store)
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn item(&self, id: &str) -> Result<&ReviewItem> {
        self.items
            .get(id)
            .ok_or_else(|| Error::NotFound(format!("item {id}")))
    }

    /// Items filtered by status, sorted by confidence then id, paged.
    pub fn list(
        &self,
        status: Option<ReviewStatus>,
        order: SortOrder,
        page: usize,
        page_size: usize,
    ) -> Vec<&ReviewItem> {
        let mut items: Vec<&ReviewItem> = self
            .items
            .values()
            .filter(|item| status.is_none_or(|s| item.status == s))
            .collect();
        items.sort_by(|a, b| {
            let ord = a
                .confidence
                .partial_cmp(&b.confidence)
                .expect("confidences are finite")
                .then_with(|| a.id.cmp(&b.id));
            match order {
                SortOrder::Asc => ord,
                SortOrder::Desc => ord.reverse(),
            }
        });
        items
            .into_iter()
            .skip(page * page_size)
            .take(page_size)
            .collect()
    }

    pub fn status_counts(&self) -> BTreeMap<String, usize> {
        let mut counts = BTreeMap::new();
        for item in self.items.values() {
            let key = match item.status {
                ReviewStatus::Pending => "pending",
                ReviewStatus::Accepted => "accepted",
                ReviewStatus::Rejected => "rejected",
                ReviewStatus::Disputed => "disputed",
            };
            *counts.entry(key.to_string()).or_insert(0) += 1;
        }
        counts
    }

    /// Validates an event against the current state without applying it.
    fn check(&self, event: &ReviewEvent) -> Result<()> {
        let item = self.item(event.item_id())?;
        match event {
            ReviewEvent::RaterDecision { rater_id, .. } => {
                if item.status != ReviewStatus::Pending {
                    return Err(Error::Conflict(format!(
                        "item {} is not pending",
                        item.id
                    )));
                }
                if item.rater_decisions.iter().any(|(r, _)| r == rater_id) {
                    return Err(Error::Conflict(format!(
                        "rater {rater_id} already decided item {}",
                        item.id
                    )));
                }
            }
            ReviewEvent::ExpertResolution { .. } => {
                if item.status != ReviewStatus::Disputed {
                    return Err(Error::Conflict(format!(
                        "item {} is not disputed",
                        item.id
                    )));
                }
            }
            ReviewEvent::Triage { .. } => {
                if item.status != ReviewStatus::Pending {
                    return Err(Error::Conflict(format!(
                        "item {} is not pending",
                        item.id
                    )));
                }
            }
        }
        Ok(())
    }

    fn apply(&mut self, event: &ReviewEvent) -> Result<()> {
        self.check(event)?;
        let item = self.items.get_mut(event.item_id()).expect("checked");
        match event {
            ReviewEvent::RaterDecision {
                rater_id, category, ..
            } => {
                item.rater_decisions.push((rater_id.clone(), *category));
                if item.rater_decisions.len() == 2 {
                    item.status = if item.rater_decisions[0].1 == item.rater_decisions[1].1 {
                        ReviewStatus::Accepted
                    } else {
                        ReviewStatus::Disputed
                    };
                }
            }
            ReviewEvent::ExpertResolution { category, .. } => {
                item.expert_decision = Some(*category);
                item.status = ReviewStatus::Accepted;
            }
            ReviewEvent::Triage { accept, .. } => {
                item.status = if *accept {
                    ReviewStatus::Accepted
                } else {
                    ReviewStatus::Rejected
                };
            }
        }
        Ok(())
    }

    /// Validates, durably appends, then applies.
    pub fn submit(&mut self, event: ReviewEvent) -> Result<&ReviewItem> {
        self.check(&event)?;
        let line = LogLine {
            seq: self.next_seq,
            event: event.clone(),
        };
        let mut file = std::fs::OpenOptions::new()
            .create(true)
            .append(true)
            .open(&self.log_path)
            .map_err(|e| Error::io(&self.log_path, e))?;
        serde_json::to_writer(&mut file, &line)?;
        file.write_all(b"\n")
            .map_err(|e| Error::io(&self.log_path, e))?;
        self.next_seq += 1;
        self.apply(&event)?;
        Ok(self.items.get(event.item_id()).expect("applied"))
    }

    /// Agreement over doubly-labeled items, pairing the first decision
    /// against the second.
    pub fn kappa(&self) -> Result<KappaResult> {
        let mut a = Vec::new();
        let mut b = Vec::new();
        for item in self.items.values() {
            if item.rater_decisions.len() == 2 {
                a.push(item.rater_decisions[0].1);
                b.push(item.rater_decisions[1].1);
            }
        }
        cohens_kappa(&a, &b)
    }

    /// The labeled-dataset increment: accepted items only, with their
    /// final labels.
    pub fn export(&self) -> Vec<ExportRow> {
        self.items
            .values()
            .filter_map(|item| {
                item.final_label().map(|category| ExportRow {
                    id: item.id.clone(),
                    category,
                    image_path: item.image_path.clone(),
                    text: item.text.clone(),
                })
            })
            .collect()
    }

    pub fn write_export_csv(&self, path: &Path) -> Result<usize> {
        let rows = self.export();
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(["id", "category", "image_path", "text"])?;
        for row in &rows {
            w.write_record([
                row.id.clone(),
                row.category.name().to_string(),
                row.image_path.clone().unwrap_or_default(),
                row.text.clone().unwrap_or_default(),
            ])?;
        }
        w.flush().map_err(|e| Error::io(path, e))?;
        Ok(rows.len())
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExportRow {
    pub id: String,
    pub category: Category,
    pub image_path: Option<String>,
    pub text: Option<String>,
}
