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

use std::time::Duration;

use proptest::prelude::*;
use uiq::adapters::{AdapterConfig, ScriptedAdapter, ScriptedAnswer, ScriptedConfig, SubjectConfig, SubjectInfo};
use uiq::bundled;
use uiq::clock::{Clock, ManualClock};
use uiq::grading::{AnswerPayload, VerdictState, DEFAULT_TIMEOUT};
use uiq::scoring::{score_transcript, transcript_vector};
use uiq::session::{run_session, Next, Session, SessionError, SessionStatus};
use uiq::store::Store;
use uiq::{Hundredths, SubTestScoreVector};

fn info(id: &str) -> SubjectInfo {
    SubjectInfo {
        id: id.into(),
        display_name: id.into(),
        group: None,
        region: None,
    }
}

#[test]
fn google_behavior_fixture_reproduces_its_row() {
    let bank = bundled::bank();
    let scale = bundled::scale();
    let config = SubjectConfig::from_json(bundled::GOOGLE_BEHAVIOR_JSON).unwrap();
    let AdapterConfig::Scripted(script) = &config.adapter else {
        panic!("fixture is scripted")
    };
    let adapter = config.build().unwrap();
    let clock = ManualClock::pinned();
    let mut t = run_session(adapter.as_ref(), &bank, &scale, DEFAULT_TIMEOUT, &clock, "g1").unwrap();
    assert_eq!(t.status, SessionStatus::PendingGrading);
    assert_eq!(script.apply_manual_verdicts(&mut t, &bank).unwrap(), 9);
    assert_eq!(t.status, SessionStatus::Complete);

    let v = transcript_vector(&t, &bank, &scale).unwrap();
    assert_eq!(v.values, [100, 100, 100, 75, 100, 100, 0, 0, 0, 0, 0, 0, 100, 0, 0]);
    let report = score_transcript(&t, &bank, &scale, "r", clock.now()).unwrap();
    assert_eq!(report.iq, Hundredths(2650));
    // Scripted latencies are reproduced exactly.
    assert_eq!(t.entry("q06-1").unwrap().answer.elapsed_ms, script.answers["q06-1"].latency_ms);
}

#[test]
fn all_correct_script_scores_full_marks() {
    let bank = bundled::bank();
    let scale = bundled::scale();
    let cfg = ScriptedConfig::all_correct(&bank, Duration::from_millis(5), Some(true));
    let adapter = ScriptedAdapter::new(info("ace"), cfg.clone());
    let clock = ManualClock::pinned();
    let mut t = run_session(&adapter, &bank, &scale, DEFAULT_TIMEOUT, &clock, "ace").unwrap();
    assert_eq!(t.pending_manual().count(), bank.manual_count());
    cfg.apply_manual_verdicts(&mut t, &bank).unwrap();
    let r = score_transcript(&t, &bank, &scale, "r", clock.now()).unwrap();
    assert_eq!(r.iq, Hundredths(10_000));
}

#[test]
fn text_only_subject_gets_undeliverable_media_questions() {
    let bank = bundled::bank();
    let scale = bundled::scale();
    let mut cfg = ScriptedConfig::all_correct(&bank, Duration::from_millis(5), Some(true));
    cfg.capabilities = [uiq::Modality::Text].into_iter().collect();
    let adapter = ScriptedAdapter::new(info("txt"), cfg.clone());
    let clock = ManualClock::pinned();
    let mut t = run_session(&adapter, &bank, &scale, DEFAULT_TIMEOUT, &clock, "txt").unwrap();
    for q in ["q02-1", "q03-1", "q14-1", "q15-1"] {
        assert_eq!(t.entry(q).unwrap().verdict.state, VerdictState::Undeliverable, "{q}");
    }
    cfg.apply_manual_verdicts(&mut t, &bank).unwrap();
    let v = transcript_vector(&t, &bank, &scale).unwrap();
    assert_eq!(v.values, [100, 0, 0, 100, 100, 100, 100, 100, 100, 100, 100, 100, 100, 0, 0]);
}

#[test]
fn adapter_death_marks_the_rest_undeliverable() {
    let bank = bundled::bank();
    let scale = bundled::scale();
    let mut cfg = ScriptedConfig::all_correct(&bank, Duration::from_millis(5), None);
    cfg.fail_after = Some(5);
    let adapter = ScriptedAdapter::new(info("dies"), cfg);
    let clock = ManualClock::pinned();
    let err = run_session(&adapter, &bank, &scale, DEFAULT_TIMEOUT, &clock, "d").unwrap_err();
    let SessionError::AdapterFatal { reason, transcript } = err else {
        panic!("expected a fatal adapter error")
    };
    assert!(reason.contains("after 5"));
    assert_eq!(transcript.entries.len(), bank.questions.len());
    assert!(transcript.entries[5..]
        .iter()
        .all(|e| e.verdict.state == VerdictState::Undeliverable));
    assert_eq!(transcript.error_note.as_deref(), Some(reason.as_str()));
}

#[test]
fn replaying_reproduces_every_published_row() {
    let bank = bundled::bank();
    let scale = bundled::scale();
    let clock = ManualClock::pinned();
    for table in [bundled::TABLE2_JSON, bundled::TABLE3_JSON] {
        let m = uiq::scoring::MatrixFile::from_json(table).unwrap();
        for (subject, vector) in m.into_rows() {
            let cfg = ScriptedConfig::replaying(&bank, &scale, &vector);
            let adapter = ScriptedAdapter::new(info(&subject.id), cfg.clone());
            let mut t = run_session(&adapter, &bank, &scale, DEFAULT_TIMEOUT, &clock, &subject.id).unwrap();
            cfg.apply_manual_verdicts(&mut t, &bank).unwrap();
            assert_eq!(transcript_vector(&t, &bank, &scale).unwrap(), vector, "{}", subject.id);
        }
    }
}

#[test]
fn live_session_resumes_with_its_timer_running() {
    let bank = bundled::bank();
    let dir = tempfile::tempdir().unwrap();
    let store = Store::open(dir.path()).unwrap();
    let clock = ManualClock::pinned();
    let subject = info("h").describe(uiq::SubjectKind::Human, uiq::Modality::ALL.into_iter().collect());
    let mut s = Session::new("live", subject, &bank, DEFAULT_TIMEOUT, &clock);
    let Next::Question { question, .. } = s.next_question(&bank, &clock).unwrap() else {
        panic!()
    };
    assert_eq!(question.id, "q01-1");
    store.save_session(&s).unwrap();

    clock.advance(Duration::from_secs(100));
    drop(store);
    let store = Store::open(dir.path()).unwrap();
    let mut s = store.load_session("live").unwrap();
    let Next::Question { question, remaining, .. } = s.next_question(&bank, &clock).unwrap() else {
        panic!()
    };
    assert_eq!(question.id, "q01-1");
    assert_eq!(remaining, Duration::from_secs(80));

    clock.advance(Duration::from_millis(80_001));
    let e = s
        .submit_answer(&bank, &clock, "q01-1", Some(AnswerPayload::Text("2".into())))
        .unwrap();
    assert_eq!(e.verdict.state, VerdictState::Timeout);
    assert_eq!(e.answer.elapsed_ms, 180_001);
}

#[test]
fn submissions_must_follow_bank_order() {
    let bank = bundled::bank();
    let clock = ManualClock::pinned();
    let subject = info("h").describe(uiq::SubjectKind::Human, uiq::Modality::ALL.into_iter().collect());
    let mut s = Session::new("o", subject, &bank, DEFAULT_TIMEOUT, &clock);
    assert!(matches!(
        s.submit_answer(&bank, &clock, "q01-1", None),
        Err(SessionError::NotDispatched(_))
    ));
    s.next_question(&bank, &clock).unwrap();
    assert!(matches!(
        s.submit_answer(&bank, &clock, "q02-1", None),
        Err(SessionError::OutOfOrder { .. })
    ));
    s.submit_answer(&bank, &clock, "q01-1", Some(AnswerPayload::Text("2".into())))
        .unwrap();
    assert!(matches!(
        s.submit_answer(&bank, &clock, "q01-1", None),
        Err(SessionError::Duplicate(_))
    ));
    assert!(matches!(
        s.submit_answer(&bank, &clock, "nope", None),
        Err(SessionError::UnknownQuestion(_))
    ));
}

fn single_answer_script(qid: &str, answer: &str, latency_ms: u64) -> ScriptedConfig {
    let mut cfg = ScriptedConfig::all_correct(&bundled::bank(), Duration::ZERO, Some(false));
    cfg.answers.insert(
        qid.to_string(),
        ScriptedAnswer {
            answer: Some(answer.to_string()),
            asset: None,
            latency_ms,
            no_response: false,
        },
    );
    cfg
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    // Over the limit the answer never counts, whatever it says.
    #[test]
    fn late_answers_never_score(extra in 1u64..10_000_000, answer in "\\PC{0,30}|100|Jupiter|2") {
        let bank = bundled::bank();
        let scale = bundled::scale();
        let clock = ManualClock::pinned();
        let cfg = single_answer_script("q06-1", &answer, 180_000 + extra);
        let adapter = ScriptedAdapter::new(info("late"), cfg.clone());
        let mut t = run_session(&adapter, &bank, &scale, DEFAULT_TIMEOUT, &clock, "late").unwrap();
        cfg.apply_manual_verdicts(&mut t, &bank).unwrap();
        prop_assert_eq!(t.entry("q06-1").unwrap().verdict.state, VerdictState::Timeout);
        let v = transcript_vector(&t, &bank, &scale).unwrap();
        prop_assert_eq!(v.values[5], 75);
    }

    #[test]
    fn on_time_correct_answers_score(latency in 0u64..=180_000) {
        let bank = bundled::bank();
        let scale = bundled::scale();
        let clock = ManualClock::pinned();
        let cfg = single_answer_script("q06-1", "25 × 4 = 100", latency);
        let adapter = ScriptedAdapter::new(info("prompt"), cfg.clone());
        let t = run_session(&adapter, &bank, &scale, DEFAULT_TIMEOUT, &clock, "p").unwrap();
        prop_assert_eq!(t.entry("q06-1").unwrap().verdict.state, VerdictState::Correct);
        prop_assert_eq!(t.entry("q06-1").unwrap().answer.elapsed_ms, latency);
    }

    #[test]
    fn replayed_vectors_round_trip(seed in proptest::collection::vec(0u32..=4, 15)) {
        let bank = bundled::bank();
        let scale = bundled::scale();
        let values: Vec<u32> = scale
            .subtests
            .iter()
            .zip(&seed)
            .map(|(st, &k)| (k.min(st.question_count)) * st.points_per_question())
            .collect();
        let vector = SubTestScoreVector::new(scale.id.clone(), values);
        let cfg = ScriptedConfig::replaying(&bank, &scale, &vector);
        let adapter = ScriptedAdapter::new(info("r"), cfg.clone());
        let clock = ManualClock::pinned();
        let mut t = run_session(&adapter, &bank, &scale, DEFAULT_TIMEOUT, &clock, "r").unwrap();
        cfg.apply_manual_verdicts(&mut t, &bank).unwrap();
        prop_assert_eq!(transcript_vector(&t, &bank, &scale).unwrap(), vector);
    }
}
