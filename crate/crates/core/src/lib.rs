//! News chat engine: story chatrooms backed by a paragraph/question graph.

pub mod chat;
pub mod config;
pub mod conversation;
pub mod corpus;
pub mod pipeline;
pub mod pq_graph;
pub mod providers;
pub mod question_bank;
pub mod store;
pub mod text;

pub use chat::{ChatEngine, ChatMessage};
pub use config::{AppConfig, EngineConfig};
pub use conversation::ConversationState;
pub use corpus::Corpus;
pub use pq_graph::{PQGraph, StoryGraph};
pub use providers::Providers;
pub use question_bank::{Question, QuestionBank};
