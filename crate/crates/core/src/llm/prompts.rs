//! Versioned prompt templates.

use crate::program::Language;

pub const PROMPT_VERSION: &str = "v1";

pub const SYSTEM_PROMPT: &str = "You are a careful programming assistant.";

pub fn code_generation(requirement: &str, language: Language) -> String {
    let lang = match language {
        Language::Python => "Python",
        Language::Java => "Java",
    };
    format!(
        "Write a {lang} program that satisfies the following requirement.\n\
         Reply with exactly one fenced code block tagged `{tag}` and no explanation.\n\n\
         Requirement:\n{requirement}",
        tag = language.as_str()
    )
}

pub fn code_judgment(requirement: &str, code: &str) -> String {
    format!(
        "Requirement:\n{requirement}\n\nCandidate code:\n```\n{code}\n```\n\n\
         Is the candidate code functionally correct for the requirement? Answer Yes or No."
    )
}

pub fn requirement_judgment(requirement: &str) -> String {
    format!(
        "Requirement:\n{requirement}\n\n\
         Can you write code that correctly solves this requirement? Answer Yes or No."
    )
}
