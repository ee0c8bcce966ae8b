//! Wrappers that observe or slow down a provider. Used for latency
//! measurements and call-count assertions.

use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Arc;
use std::time::Duration;

use super::{ProviderError, QaVerdict, QuestionAnswerer};
use crate::corpus::Paragraph;

/// Counts `answer_question` calls on the wrapped answerer.
#[derive(Debug)]
pub struct CountingAnswerer<A> {
    inner: A,
    calls: AtomicUsize,
}

impl<A> CountingAnswerer<A> {
    pub fn new(inner: A) -> Arc<Self> {
        Arc::new(Self {
            inner,
            calls: AtomicUsize::new(0),
        })
    }

    pub fn calls(&self) -> usize {
        self.calls.load(Ordering::SeqCst)
    }

    pub fn reset(&self) -> usize {
        self.calls.swap(0, Ordering::SeqCst)
    }
}

impl<A: QuestionAnswerer> QuestionAnswerer for CountingAnswerer<A> {
    fn answer_question(&self, question: &str, paragraph: &Paragraph) -> Result<QaVerdict, ProviderError> {
        self.calls.fetch_add(1, Ordering::SeqCst);
        self.inner.answer_question(question, paragraph)
    }
}

/// Sleeps for a fixed delay before every call.
#[derive(Debug, Clone)]
pub struct DelayedAnswerer<A> {
    inner: A,
    delay: Duration,
}

impl<A> DelayedAnswerer<A> {
    pub fn new(inner: A, delay: Duration) -> Self {
        Self { inner, delay }
    }
}

impl<A: QuestionAnswerer> QuestionAnswerer for DelayedAnswerer<A> {
    fn answer_question(&self, question: &str, paragraph: &Paragraph) -> Result<QaVerdict, ProviderError> {
        std::thread::sleep(self.delay);
        self.inner.answer_question(question, paragraph)
    }
}
