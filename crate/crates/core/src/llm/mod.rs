//! LLM-guided structure search: prompts, chat clients, reply parsing, the
//! dialogue loop, and the hybrid warm start.

mod client;
mod dialogue;
mod domain;
mod hybrid;
mod parse;
mod prompts;

pub use client::{request_body, response_content, ChatClient, ChatMessage, LlmClientConfig, Role, ScriptedClient};
#[cfg(feature = "http")]
pub use client::{chat_complete, HttpChatClient};
pub use dialogue::{run_llm_search, DialogueState, Explanation, LlmSearchConfig};
pub use domain::{DomainInfo, ModeInfo};
pub use hybrid::{hybrid_search, DEFAULT_LLM_BUDGET};
pub use parse::parse_solution;
pub use prompts::{
    describe_structure, format_spec, render_behavior_prompt, render_optimization_prompt, render_task_prompt,
    render_template, LastProposal, PromptTemplates,
};
