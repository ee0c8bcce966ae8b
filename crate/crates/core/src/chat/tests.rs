use std::collections::BTreeSet;

use chrono::TimeZone;

use super::*;
use crate::corpus::{parse_corpus, Paragraph};
use crate::pq_graph::{build_graph, StoryGraph};
use crate::providers::instrument::CountingAnswerer;
use crate::providers::reference::LexicalAnswerer;
use crate::providers::{ProviderError, QaVerdict, QuestionAnswerer};
use crate::question_bank::build_question_bank;
use crate::store::MemoryStore;

const FIXTURE: &str = include_str!("../../../../fixtures/corpus.jsonl");

fn corpus() -> Arc<Corpus> {
    let (records, _) = parse_corpus(FIXTURE.as_bytes(), None).unwrap();
    Arc::new(Corpus::from_records(&records).unwrap())
}

fn graphs(corpus: &Corpus, skip: &[&str]) -> BTreeMap<String, PQGraph> {
    let cfg = EngineConfig::default();
    let p = Providers::reference();
    corpus
        .stories()
        .filter(|s| !skip.contains(&s.id.as_str()))
        .map(|s| {
            let bank = build_question_bank(corpus, &s.id, p.questions.as_ref(), &cfg).unwrap();
            let full = build_graph(corpus, &s.id, &bank.questions, p.answers.as_ref(), &cfg).unwrap();
            (s.id.clone(), StoryGraph::from_full(full).unwrap().pruned)
        })
        .collect()
}

fn t0() -> DateTime<Utc> {
    Utc.with_ymd_and_hms(2020, 2, 1, 12, 0, 0).unwrap()
}

struct Fixture {
    engine: ChatEngine,
    store: Arc<MemoryStore>,
    clock: Arc<ManualClock>,
}

fn fixture_with(providers: Providers, chat: ChatConfig) -> Fixture {
    let corpus = corpus();
    let graphs = graphs(&corpus, &[]);
    let store = Arc::new(MemoryStore::new());
    let clock = Arc::new(ManualClock::new(t0()));
    let engine = ChatEngine::new(corpus, graphs, providers, EngineConfig::default(), chat, store.clone())
        .with_clock(clock.clone());
    Fixture { engine, store, clock }
}

fn fixture() -> Fixture {
    fixture_with(Providers::reference(), ChatConfig::default())
}

struct FailingAnswerer;

impl QuestionAnswerer for FailingAnswerer {
    fn answer_question(&self, _: &str, _: &Paragraph) -> Result<QaVerdict, ProviderError> {
        Err(ProviderError::Transport("connection refused".into()))
    }
}

#[test]
fn open_room_event_boundaries() {
    let f = fixture();
    let cases = [
        ("australia-fires", vec!["fires-e4", "fires-e5"], true),
        ("boeing-737-max", vec!["max-e2", "max-e3"], true),
        ("lebanon-protests", vec!["leb-e1", "leb-e2"], false),
        ("nato-summit", vec!["nato-e1"], false),
    ];
    for (i, (story, events, has_previous)) in cases.into_iter().enumerate() {
        let open = f.engine.open_room(&format!("s{i}"), story).unwrap();
        let shown: Vec<&str> = open
            .messages
            .iter()
            .filter(|m| m.kind == MessageKind::Event)
            .map(|m| m.event_id.as_deref().unwrap())
            .collect();
        assert_eq!(shown, events, "{story}");
        assert_eq!(open.has_previous, has_previous, "{story}");
        assert_eq!(open.oldest_event_id.as_deref(), Some(events[0]));
        let last = open.messages.last().unwrap();
        assert_eq!(last.kind, MessageKind::Recommendations);
        assert!(!last.questions.is_empty() && last.questions.len() <= 3);
        let state = f.engine.session_state(&format!("s{i}")).unwrap();
        assert_eq!(state.shown_events, events.iter().map(|e| e.to_string()).collect());
        assert!(state.read_paragraphs.is_empty(), "event display marks nothing read");
    }
}

#[test]
fn open_room_errors() {
    let corpus = corpus();
    let g = graphs(&corpus, &["nato-summit"]);
    let chat = ChatConfig {
        blocklist: vec!["lebanon-protests".into()],
        ..ChatConfig::default()
    };
    let engine = ChatEngine::new(corpus, g, Providers::reference(), EngineConfig::default(), chat, Arc::new(MemoryStore::new()));
    assert!(matches!(engine.open_room("s", "nope"), Err(ChatError::UnknownStory(_))));
    assert!(matches!(engine.open_room("s", "nato-summit"), Err(ChatError::NotReady(_))));
    assert!(matches!(engine.open_room("s", "lebanon-protests"), Err(ChatError::UnknownStory(_))));
    assert!(matches!(engine.open_room("", "australia-fires"), Err(ChatError::BadRequest(_))));
    engine.open_room("s", "australia-fires").unwrap();
    assert!(matches!(
        engine.open_room("s", "boeing-737-max"),
        Err(ChatError::SessionStoryMismatch { .. })
    ));
    let rooms: Vec<String> = engine.list_rooms().into_iter().map(|r| r.story_id).collect();
    assert!(!rooms.contains(&"lebanon-protests".to_string()));
}

#[test]
fn earlier_events_paging() {
    let f = fixture();
    let e = &f.engine;
    let ids = |page: &EventPage| -> Vec<String> { page.messages.iter().map(|m| m.event_id.clone().unwrap()).collect() };
    // the third oldest has exactly two older events
    let page = e.earlier_events(None, "australia-fires", "fires-e3", 2).unwrap();
    assert_eq!(ids(&page), ["fires-e2", "fires-e1"]);
    assert!(!page.has_previous);
    assert!(e.earlier_events(None, "australia-fires", "fires-e1", 5).unwrap().messages.is_empty());
    assert!(e.earlier_events(None, "australia-fires", "fires-e5", 0).unwrap().messages.is_empty());
    assert!(matches!(
        e.earlier_events(None, "australia-fires", "max-e1", 2),
        Err(ChatError::UnknownEvent { .. })
    ));

    // two limit-2 pages exhaust the five-event history
    let open = e.open_room("pager", "australia-fires").unwrap();
    let first = e.earlier_events(Some("pager"), "australia-fires", open.oldest_event_id.as_deref().unwrap(), 2).unwrap();
    assert_eq!(ids(&first), ["fires-e3", "fires-e2"]);
    assert!(first.has_previous);
    let second = e.earlier_events(Some("pager"), "australia-fires", "fires-e2", 2).unwrap();
    assert_eq!(ids(&second), ["fires-e1"]);
    assert!(!second.has_previous);
    assert_eq!(e.session_state("pager").unwrap().shown_events.len(), 5);
    assert_eq!(first.messages[0].id, "pager-0004");
}

#[test]
fn clarifications_and_small_talk() {
    let f = fixture();
    f.engine.open_room("c", "boeing-737-max").unwrap();
    let post = |t: &str| f.engine.post_message("c", t, Origin::FreeForm, None).unwrap();

    let out = post("Who is Dennis Muilenburg?");
    assert_eq!(out.len(), 2);
    assert_eq!((out[0].sender, out[0].kind), (Sender::User, MessageKind::Question));
    assert_eq!(out[1].kind, MessageKind::Clarification);
    assert!(out[1].text.contains("Boeing"));
    assert!(out[1].geo.is_none());

    let out = post("Where is Lebanon?");
    assert_eq!(out[1].kind, MessageKind::Clarification);
    assert!(out[1].geo.is_some());

    let out = post("Who is Zaphod Beeblebrox?");
    assert_eq!(out[1].kind, MessageKind::NoAnswer);
    assert_eq!(out[1].text, "No entry found for Zaphod Beeblebrox.");

    let out = post("how are you");
    assert_eq!((out[1].kind, out[1].text.as_str()), (MessageKind::NoAnswer, SMALL_TALK_REPLY));

    let state = f.engine.session_state("c").unwrap();
    assert!(state.read_paragraphs.is_empty());
    assert_eq!(state.asked_questions.len(), 4);
    assert!(matches!(
        f.engine.post_message("c", "   ", Origin::FreeForm, None),
        Err(ChatError::BadRequest(_))
    ));
    assert!(matches!(
        f.engine.post_message("ghost", "hi", Origin::FreeForm, None),
        Err(ChatError::UnknownSession(_))
    ));
}

#[test]
fn free_form_answer_is_trimmed_bolded_and_sourced() {
    let f = fixture();
    f.engine.open_room("a", "australia-fires").unwrap();
    let question = "How many people fled to the beach at Mallacoota?";
    let out = f.engine.post_message("a", question, Origin::FreeForm, None).unwrap();
    let kinds: Vec<MessageKind> = out.iter().map(|m| m.kind).collect();
    assert_eq!(kinds, [MessageKind::Question, MessageKind::Answer, MessageKind::Recommendations]);
    let answer = &out[1];
    assert_eq!(answer.paragraph_id.as_deref(), Some("fires-a3/p0"));
    assert_eq!(answer.source.as_deref(), Some("bbc.co.uk"));
    assert!(!answer.repeat);

    // the bold slice equals the reader's span in the source paragraph
    let paragraph = f.engine.corpus().paragraph("fires-a3/p0").unwrap();
    let verdict = LexicalAnswerer.answer_question(question, paragraph).unwrap();
    let expected = slice_chars(&paragraph.text, verdict.answer_span.unwrap());
    assert_eq!(answer.answer_text(), Some(expected));
    assert!(answer.text.split_whitespace().count() <= 30 || answer.text == expected);

    let state = f.engine.session_state("a").unwrap();
    assert_eq!(state.read_paragraphs, BTreeSet::from(["fires-a3/p0".to_string()]));
    let recs: Vec<&String> = out[2].questions.iter().map(|q| &q.id).collect();
    assert!(recs.iter().all(|q| !state.answered_questions.contains(*q)));

    let out = f.engine.post_message("a", "Why do volcanoes on Jupiter glow purple?", Origin::FreeForm, None).unwrap();
    assert_eq!(out[1].kind, MessageKind::NoAnswer);
    assert_eq!(out.len(), 2);
}

#[test]
fn recommended_click_uses_cache() {
    let counter = CountingAnswerer::new(LexicalAnswerer);
    let f = fixture_with(Providers::reference().with_answers(counter.clone()), ChatConfig::default());
    let open = f.engine.open_room("r", "australia-fires").unwrap();
    let rec = open.messages.last().unwrap().questions[0].clone();

    assert!(!f.engine.recommendations("r").unwrap().precomputed);
    assert!(f.engine.precompute("r").unwrap());
    assert!(f.engine.recommendations("r").unwrap().precomputed);
    counter.reset();
    let out = f.engine.post_message("r", &rec.text, Origin::Recommended, Some(&rec.id)).unwrap();
    assert_eq!(counter.calls(), 0);
    assert_eq!(out[1].kind, MessageKind::Answer);
    assert_eq!(out[2].kind, MessageKind::Recommendations);
    assert!(out[2].questions.iter().all(|q| q.id != rec.id));

    // the read set changed, so the old cache no longer applies
    assert!(!f.engine.recommendations("r").unwrap().precomputed);
    let next = out[2].questions[0].clone();
    f.engine.post_message("r", &next.text, Origin::Recommended, None).unwrap();
    assert!(counter.calls() >= 1);
}

#[test]
fn provider_failure_leaves_state_unchanged() {
    let f = fixture_with(Providers::reference().with_answers(Arc::new(FailingAnswerer)), ChatConfig::default());
    f.engine.open_room("x", "australia-fires").unwrap();
    let before = f.engine.session_state("x").unwrap();
    let out = f.engine.post_message("x", "How many people fled to the beach?", Origin::FreeForm, None).unwrap();
    assert_eq!(out[1].kind, MessageKind::Error);
    assert_eq!(f.engine.session_state("x").unwrap(), before);
}

#[test]
fn rooms_follow_activity() {
    let f = fixture();
    let order = |e: &ChatEngine| -> Vec<String> { e.list_rooms().into_iter().map(|r| r.story_id).collect() };
    assert_eq!(order(&f.engine), ["australia-fires", "boeing-737-max", "nato-summit", "lebanon-protests"]);
    f.engine.open_room("l", "lebanon-protests").unwrap();
    // opening alone is not activity
    assert_eq!(order(&f.engine)[0], "australia-fires");
    f.engine.post_message("l", "hello", Origin::FreeForm, None).unwrap();
    assert_eq!(order(&f.engine)[0], "lebanon-protests");
    let rooms = f.engine.list_rooms();
    assert_eq!(rooms[0].last_active, Some(t0()));
    assert_eq!(rooms[0].open_sessions, 1);
    assert_eq!(rooms[0].title, "Lebanon protests");

    f.clock.advance(chrono::Duration::minutes(5));
    f.engine.open_room("n", "nato-summit").unwrap();
    f.engine.post_message("n", "hi", Origin::FreeForm, None).unwrap();
    assert_eq!(order(&f.engine)[..2], ["nato-summit", "lebanon-protests"]);
}

#[test]
fn sessions_persist_and_replay() {
    let f = fixture();
    f.engine.open_room("p", "australia-fires").unwrap();
    let mut next = f.engine.recommendations("p").unwrap().message.questions;
    for _ in 0..3 {
        let Some(q) = next.first().cloned() else { break };
        f.engine.precompute("p").unwrap();
        let out = f.engine.post_message("p", &q.text, Origin::Recommended, Some(&q.id)).unwrap();
        next = out.last().unwrap().questions.clone();
        f.clock.advance(chrono::Duration::seconds(30));
    }
    f.engine.post_message("p", "Who is Scott Morrison?", Origin::FreeForm, None).unwrap();
    f.engine.post_message("p", "How many people died in the fires?", Origin::FreeForm, None).unwrap();

    let report = f.engine.replay("p").unwrap();
    assert!(report.matches, "{report:?}");

    // a second engine over the same store resumes the session
    let corpus = corpus();
    let g = graphs(&corpus, &[]);
    let other = ChatEngine::new(corpus, g, Providers::reference(), EngineConfig::default(), ChatConfig::default(), f.store.clone());
    assert_eq!(other.session_state("p").unwrap(), f.engine.session_state("p").unwrap());
    let out = other.post_message("p", "hi", Origin::FreeForm, None).unwrap();
    let seq: u64 = out[0].id.rsplit('-').next().unwrap().parse().unwrap();
    assert!(seq > 5);
}

#[test]
fn answers_never_repeat_a_paragraph_silently() {
    let f = fixture();
    f.engine.open_room("w", "australia-fires").unwrap();
    let mut served: BTreeSet<String> = BTreeSet::new();
    let asks = [
        "How much are the insurance claims worth?",
        "How many claims have insurers received?",
        "What did the Insurance Council of Australia say about claims?",
        "How many claims have insurers received?",
    ];
    for q in asks {
        let out = f.engine.post_message("w", q, Origin::FreeForm, None).unwrap();
        if let Some(a) = out.iter().find(|m| m.kind == MessageKind::Answer) {
            let pid = a.paragraph_id.clone().unwrap();
            assert!(a.repeat || served.insert(pid.clone()), "{pid} served twice without repeat");
            if a.repeat {
                assert!(served.contains(&pid) || f.engine.session_state("w").unwrap().read_paragraphs.len() > 1);
            }
        }
    }
}
