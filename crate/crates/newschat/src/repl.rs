//! Line-oriented terminal chat over one room.
//!
//! Plain lines are free-form questions. `/rec N` asks the N-th suggested
//! question, `/more` pages back through older events, `/quit` leaves.
//! Output depends only on the engine state, so scripted sessions produce
//! stable transcripts.

use std::io::{BufRead, Write};

use anyhow::Result;
use newschat_core::chat::{ChatMessage, MessageKind, SuggestedQuestion};
use newschat_core::conversation::Origin;
use newschat_core::text::{char_to_byte, Span};
use newschat_core::ChatEngine;

pub const EVENTS_PER_PAGE: usize = 2;

pub const HELP: &str = "commands: /rec N asks suggestion N, /more shows older events, /help, /quit";

/// Wrap the answer span in `**`.
pub fn bold(text: &str, span: Span) -> String {
    let (s, e) = (char_to_byte(text, span.start), char_to_byte(text, span.end));
    format!("{}**{}**{}", &text[..s], &text[s..e], &text[e..])
}

pub fn render(msg: &ChatMessage) -> String {
    match msg.kind {
        MessageKind::Event => format!("[event {}] {}", msg.timestamp.format("%Y-%m-%d"), msg.text),
        MessageKind::Question => format!("> {}", msg.text),
        MessageKind::Answer => {
            let body = msg.answer_span.map_or_else(|| msg.text.clone(), |s| bold(&msg.text, s));
            let source = msg.source.as_deref().unwrap_or("unknown source");
            let repeat = if msg.repeat { " (repeat)" } else { "" };
            format!("[answer from {source}{repeat}] {body}")
        }
        MessageKind::Clarification => match msg.geo {
            Some(g) => format!("[clarification] {}\n  map: {:.4}, {:.4}", msg.text, g.lat, g.lon),
            None => format!("[clarification] {}", msg.text),
        },
        MessageKind::NoAnswer => format!("[no answer] {}", msg.text),
        MessageKind::Error => format!("[error] {}", msg.text),
        MessageKind::Recommendations => {
            let mut out = format!("[suggestions] {}", msg.text);
            for (i, q) in msg.questions.iter().enumerate() {
                out.push_str(&format!("\n  {}. {}", i + 1, q.text));
            }
            out
        }
    }
}

struct Room<'a, W> {
    engine: &'a ChatEngine,
    session_id: &'a str,
    story_id: &'a str,
    out: W,
    suggestions: Vec<SuggestedQuestion>,
    anchor: Option<String>,
    has_previous: bool,
}

impl<W: Write> Room<'_, W> {
    fn show(&mut self, messages: &[ChatMessage]) -> Result<()> {
        for m in messages {
            if m.kind == MessageKind::Recommendations {
                self.suggestions = m.questions.clone();
            }
            writeln!(self.out, "{}", render(m))?;
        }
        Ok(())
    }

    fn more(&mut self) -> Result<()> {
        let Some(anchor) = self.anchor.clone().filter(|_| self.has_previous) else {
            writeln!(self.out, "(no earlier events)")?;
            return Ok(());
        };
        let page = self
            .engine
            .earlier_events(Some(self.session_id), self.story_id, &anchor, EVENTS_PER_PAGE)?;
        if let Some(oldest) = page.messages.last() {
            self.anchor = oldest.event_id.clone();
        }
        self.has_previous = page.has_previous;
        self.show(&page.messages)?;
        if self.has_previous {
            writeln!(self.out, "(older events: /more)")?;
        }
        Ok(())
    }

    fn ask(&mut self, text: &str, origin: Origin, question_id: Option<&str>) -> Result<()> {
        let messages = self.engine.post_message(self.session_id, text, origin, question_id)?;
        self.show(&messages)
    }

    fn line(&mut self, line: &str) -> Result<bool> {
        let line = line.trim();
        if line.is_empty() {
            return Ok(true);
        }
        let mut words = line.split_whitespace();
        match words.next() {
            Some("/quit") => return Ok(false),
            Some("/help") => writeln!(self.out, "{HELP}")?,
            Some("/more") => self.more()?,
            Some("/rec") => {
                let pick = words.next().unwrap_or("1").parse::<usize>().ok();
                match pick.and_then(|n| n.checked_sub(1)).and_then(|i| self.suggestions.get(i).cloned()) {
                    Some(q) => self.ask(&q.text, Origin::Recommended, Some(&q.id))?,
                    None => writeln!(self.out, "(no such suggestion)")?,
                }
            }
            Some(cmd) if cmd.starts_with('/') => writeln!(self.out, "(unknown command; {HELP})")?,
            _ => self.ask(line, Origin::FreeForm, None)?,
        }
        Ok(true)
    }
}

/// Open `story_id` and answer lines from `input` until EOF or `/quit`.
///
/// Suggested questions are answered ahead of each prompt, as the server does
/// in the background.
pub fn run<R: BufRead, W: Write>(engine: &ChatEngine, session_id: &str, story_id: &str, input: R, out: W) -> Result<()> {
    let opened = engine.open_room(session_id, story_id)?;
    let mut room = Room {
        engine,
        session_id,
        story_id,
        out,
        suggestions: Vec::new(),
        anchor: opened.oldest_event_id.clone(),
        has_previous: opened.has_previous,
    };
    writeln!(room.out, "== {} ==", opened.title)?;
    let (events, rest): (Vec<_>, Vec<_>) = opened.messages.into_iter().partition(|m| m.kind == MessageKind::Event);
    room.show(&events)?;
    if opened.has_previous {
        writeln!(room.out, "(older events: /more)")?;
    }
    room.show(&rest)?;
    for line in input.lines() {
        engine.precompute(session_id)?;
        if !room.line(&line?)? {
            break;
        }
    }
    room.out.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bold_uses_char_offsets() {
        assert_eq!(bold("Naïve café opens", Span::new(6, 10)), "Naïve **café** opens");
        assert_eq!(bold("abc", Span::new(0, 3)), "**abc**");
    }
}
