//! Reply trimming: the answer sentence plus neighbors within a word budget.

use crate::corpus::split_sentences;
use crate::text::{slice_chars, Span};

fn words_in(text: &str, span: Span) -> usize {
    slice_chars(text, span).split_whitespace().count()
}

/// Cut `paragraph` down to the sentences around `answer`.
///
/// Sentences overlapping the answer are always kept whole. Neighbors are
/// then added one at a time, alternating before and after, while the total
/// stays within `word_target` words. The returned span is rebased onto the
/// display text.
pub fn trim_reply(paragraph: &str, answer: Span, word_target: usize) -> (String, Span) {
    let sentences = split_sentences(paragraph);
    if sentences.is_empty() {
        return (paragraph.to_string(), answer);
    }
    let overlapping: Vec<usize> = (0..sentences.len())
        .filter(|&i| sentences[i].overlaps(&answer) || (answer.is_empty() && sentences[i].contains(&answer)))
        .collect();
    let (mut first, mut last) = match (overlapping.first(), overlapping.last()) {
        (Some(&a), Some(&b)) => (a, b),
        _ => {
            let i = sentences.iter().position(|s| s.start >= answer.end).unwrap_or(sentences.len() - 1);
            (i, i)
        }
    };
    let mut total: usize = (first..=last).map(|i| words_in(paragraph, sentences[i])).sum();
    loop {
        let mut grew = false;
        if first > 0 {
            let w = words_in(paragraph, sentences[first - 1]);
            if total + w <= word_target {
                first -= 1;
                total += w;
                grew = true;
            }
        }
        if last + 1 < sentences.len() {
            let w = words_in(paragraph, sentences[last + 1]);
            if total + w <= word_target {
                last += 1;
                total += w;
                grew = true;
            }
        }
        if !grew {
            break;
        }
    }
    let start = sentences[first].start.min(answer.start);
    let end = sentences[last].end.max(answer.end);
    let display = slice_chars(paragraph, Span::new(start, end)).to_string();
    (display, Span::new(answer.start - start, answer.end - start))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::text::char_len;

    fn sentence(tag: &str, n: usize) -> String {
        let mut words: Vec<String> = (0..n).map(|i| format!("{tag}{i}")).collect();
        words[0] = format!("{}{}", tag.to_uppercase(), 0);
        format!("{}.", words.join(" "))
    }

    fn span_of(text: &str, needle: &str) -> Span {
        let b = text.find(needle).unwrap();
        let s = text[..b].chars().count();
        Span::new(s, s + needle.chars().count())
    }

    #[test]
    fn ten_word_answer_in_sixty_word_paragraph() {
        // sentences of 12, 10, 8, 10, 20 words = 60; the answer is the second.
        let parts = [sentence("a", 12), sentence("b", 10), sentence("c", 8), sentence("d", 10), sentence("e", 20)];
        let text = parts.join(" ");
        assert_eq!(text.split_whitespace().count(), 60);
        let answer = span_of(&text, &parts[1]);
        let (display, span) = trim_reply(&text, answer, 30);
        // b=10; +a(12)=22; +c(8)=30; d would make 40.
        assert_eq!(display, format!("{} {} {}", parts[0], parts[1], parts[2]));
        assert_eq!(display.split_whitespace().count(), 30);
        assert_eq!(slice_chars(&display, span), parts[1]);
    }

    #[test]
    fn long_answer_sentence_is_kept_whole() {
        let parts = [sentence("a", 5), sentence("b", 35), sentence("c", 5)];
        let text = parts.join(" ");
        let (display, span) = trim_reply(&text, span_of(&text, &parts[1]), 30);
        assert_eq!(display, parts[1]);
        assert_eq!(span, Span::new(0, char_len(&parts[1])));
    }

    #[test]
    fn short_paragraph_is_whole() {
        let text = "Short one. Another short one here. And a third.";
        let (display, span) = trim_reply(text, span_of(text, "Another short one here."), 30);
        assert_eq!(display, text);
        assert_eq!(slice_chars(&display, span), "Another short one here.");
    }

    #[test]
    fn sub_sentence_span_is_rebased() {
        let parts = [sentence("a", 25), sentence("b", 10)];
        let text = parts.join(" ");
        let (display, span) = trim_reply(&text, span_of(&text, "b3 b4"), 30);
        assert_eq!(display, parts[1]);
        assert_eq!(slice_chars(&display, span), "b3 b4");
    }

    #[test]
    fn multibyte_offsets() {
        let text = "Café opens — maybe. Naïve plans fail. Ok.";
        let (display, span) = trim_reply(text, span_of(text, "Naïve plans fail."), 4);
        assert_eq!(slice_chars(&display, span), "Naïve plans fail.");
        assert_eq!(display, "Naïve plans fail. Ok.");
    }
}
