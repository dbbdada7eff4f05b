//! Model-assisted constraint suggestion: prompt construction from file
//! samples, parsing of fenced constraint blocks out of a completion, and
//! comparison of the suggestions against an existing spec.

mod compare;
mod parse;
mod prompt;
mod provider;

use std::time::Duration;

use thiserror::Error;

pub use compare::{compare_with_spec, Comparison, Status, SuggestionOutcome};
pub use parse::{parse_response, render_blocks, Diagnostic, ParsedResponse, BLOCK_TAG};
pub use prompt::{build_prompt, FileSample, SampleFormat, SuggestionRequest, Task, DEFAULT_SAMPLE_ROWS};
pub use provider::{HttpProvider, MockProvider, Provider, ProviderError, AUTH_ENV, ENDPOINT_ENV};

use crate::spec::GuardSpec;

#[derive(Debug, Error)]
pub enum SuggestError {
    #[error("request has neither file samples nor a description")]
    EmptyRequest,
    #[error("prompt needs {size} bytes even without data rows; limit is {limit}")]
    SampleTooLarge { size: usize, limit: usize },
    #[error("cannot sample {name}: {reason}")]
    Sample { name: String, reason: String },
    #[error(transparent)]
    Provider(#[from] ProviderError),
}

/// Everything one suggestion round produced.
#[derive(Debug, Clone)]
pub struct SuggestionRun {
    pub prompt: String,
    pub response: String,
    pub parsed: ParsedResponse,
    /// Present when the request carried an existing spec.
    pub outcome: Option<SuggestionOutcome>,
}

/// Prompt, complete, parse, and (given an existing spec) compare.
pub fn suggest(
    req: &SuggestionRequest,
    provider: &dyn Provider,
    timeout: Duration,
) -> Result<SuggestionRun, SuggestError> {
    let prompt = build_prompt(req)?;
    let response = provider.complete(&prompt, timeout)?;
    let parsed = parse_response(&response);
    let outcome = req
        .existing_spec
        .as_ref()
        .map(|spec: &GuardSpec| compare_with_spec(&parsed.decls, spec));
    Ok(SuggestionRun {
        prompt,
        response,
        parsed,
        outcome,
    })
}
