// Copyright 2026 The uiq Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

use std::collections::BTreeSet;
use std::sync::{Condvar, Mutex};
use std::time::{Duration, Instant};

use thiserror::Error;

use super::{AdapterFailure, SubjectAdapter, SubjectInfo};
use crate::bank::{Modality, Question};
use crate::grading::{AnswerPayload, AnswerRecord};
use crate::session::{SubjectDescriptor, SubjectKind};

#[derive(Debug, Clone, PartialEq)]
pub struct ParkedQuestion {
    pub question: Question,
    pub parked_at: Instant,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum BridgeError {
    #[error("no question is waiting for an answer")]
    NothingParked,
    #[error("question `{got}` is not the parked question `{parked}`")]
    WrongQuestion { parked: String, got: String },
}

#[derive(Debug, Default)]
struct Slot {
    parked: Option<ParkedQuestion>,
    answer: Option<Option<AnswerPayload>>,
    closed: bool,
}

/// Parks each probed question until a person answers it through
/// [`HumanBridge::answer`], or its budget runs out.
#[derive(Debug)]
pub struct HumanBridge {
    subject: SubjectInfo,
    capabilities: BTreeSet<Modality>,
    slot: Mutex<Slot>,
    changed: Condvar,
}

impl HumanBridge {
    pub fn new(subject: SubjectInfo, capabilities: BTreeSet<Modality>) -> Self {
        HumanBridge {
            subject,
            capabilities,
            slot: Mutex::new(Slot::default()),
            changed: Condvar::new(),
        }
    }

    pub fn parked(&self) -> Option<ParkedQuestion> {
        self.slot.lock().unwrap().parked.clone()
    }

    /// Blocks until a question is parked or `wait` elapses.
    pub fn wait_parked(&self, wait: Duration) -> Option<ParkedQuestion> {
        let slot = self.slot.lock().unwrap();
        let (slot, _) = self
            .changed
            .wait_timeout_while(slot, wait, |s| s.parked.is_none() && !s.closed)
            .unwrap();
        slot.parked.clone()
    }

    pub fn answer(&self, question_id: &str, payload: Option<AnswerPayload>) -> Result<(), BridgeError> {
        let mut slot = self.slot.lock().unwrap();
        let parked = slot.parked.as_ref().ok_or(BridgeError::NothingParked)?;
        if parked.question.id != question_id {
            return Err(BridgeError::WrongQuestion {
                parked: parked.question.id.clone(),
                got: question_id.to_string(),
            });
        }
        slot.answer = Some(payload);
        self.changed.notify_all();
        Ok(())
    }

    /// The person walked away; any waiting probe fails the session.
    pub fn close(&self) {
        self.slot.lock().unwrap().closed = true;
        self.changed.notify_all();
    }
}

impl SubjectAdapter for HumanBridge {
    fn descriptor(&self) -> SubjectDescriptor {
        self.subject.describe(SubjectKind::Human, self.capabilities.clone())
    }

    fn probe(&self, question: &Question, budget: Duration) -> Result<AnswerRecord, AdapterFailure> {
        let start = Instant::now();
        let mut slot = self.slot.lock().unwrap();
        if slot.closed {
            return Err(AdapterFailure("human bridge closed".into()));
        }
        slot.parked = Some(ParkedQuestion {
            question: question.clone(),
            parked_at: start,
        });
        slot.answer = None;
        self.changed.notify_all();

        // Waits one millisecond past the budget so a lapse is always a timeout.
        let deadline = budget + Duration::from_millis(1);
        let (mut slot, _) = self
            .changed
            .wait_timeout_while(slot, deadline, |s| s.answer.is_none() && !s.closed)
            .unwrap();
        slot.parked = None;
        let answer = slot.answer.take();
        if answer.is_none() && slot.closed {
            return Err(AdapterFailure("human bridge closed".into()));
        }
        let elapsed = start.elapsed();
        Ok(match answer {
            Some(payload) => AnswerRecord {
                question_id: question.id.clone(),
                raw_answer: payload,
                elapsed_ms: elapsed.as_millis() as u64,
                delivery_failed: false,
                note: None,
            },
            None => AnswerRecord::silent(&question.id, elapsed.max(deadline)),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bundled;
    use std::sync::Arc;

    fn bridge() -> Arc<HumanBridge> {
        Arc::new(HumanBridge::new(
            SubjectInfo {
                id: "h".into(),
                display_name: "H".into(),
                group: None,
                region: None,
            },
            Modality::ALL.into_iter().collect(),
        ))
    }

    #[test]
    fn parks_until_answered() {
        let b = bridge();
        let q = bundled::bank().questions[0].clone();
        let worker = {
            let b = b.clone();
            let q = q.clone();
            std::thread::spawn(move || b.probe(&q, Duration::from_secs(30)).unwrap())
        };
        let parked = b.wait_parked(Duration::from_secs(5)).expect("question parked");
        assert_eq!(parked.question.id, "q01-1");
        assert_eq!(
            b.answer("q02-1", None),
            Err(BridgeError::WrongQuestion {
                parked: "q01-1".into(),
                got: "q02-1".into()
            })
        );
        b.answer("q01-1", Some(AnswerPayload::Text("2".into()))).unwrap();
        let rec = worker.join().unwrap();
        assert_eq!(rec.raw_answer, Some(AnswerPayload::Text("2".into())));
        assert!(b.parked().is_none());
    }

    #[test]
    fn lapse_is_reported_past_budget() {
        let b = bridge();
        let q = bundled::bank().questions[0].clone();
        let rec = b.probe(&q, Duration::from_millis(20)).unwrap();
        assert!(rec.elapsed_ms > 20);
        assert_eq!(rec.raw_answer, None);
    }

    #[test]
    fn closing_fails_the_probe() {
        let b = bridge();
        b.close();
        let q = bundled::bank().questions[0].clone();
        assert!(b.probe(&q, Duration::from_secs(1)).is_err());
        assert_eq!(b.answer("q01-1", None), Err(BridgeError::NothingParked));
    }
}
