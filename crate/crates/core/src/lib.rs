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

//! Universal IQ benchmarking harness.
//!
//! Administers a weighted fifteen-subtest intelligence scale to machine and
//! human subjects, grades their answers under a three-minute per-question
//! limit, and turns the graded results into General IQ scores and
//! leaderboards. Published raw score tables can be scored directly through
//! [`scoring::score_matrix`].

pub mod adapters;
pub mod bank;
pub mod bundled;
pub mod cli;
pub mod clock;
pub mod grading;
pub mod mock_engine;
pub mod scale;
pub mod scoring;
pub mod service;
pub mod server;
pub mod session;
pub mod store;

pub use bank::{load_bank, validate_bank, GradingSpec, Modality, Question, QuestionBank};
pub use grading::{grade_answer, subtest_score, AnswerRecord, Verdict, VerdictState};
pub use scale::{category_breakdown, compute_iq, validate_scale, Category, Hundredths, Scale, SubTestDef, SubTestScoreVector};
pub use scoring::{rank_subjects, score_matrix, score_transcript, IqReport, Ranking};
pub use session::{run_session, Session, SessionStatus, SessionTranscript, SubjectDescriptor, SubjectKind};
pub use store::{Store, TestRun};
