//! Chain-of-thought prompt construction.
//!
//! The 3-hop template carries a fixed instruction header, the task
//! structure, a worked water-boiling example, and the target question
//! block. The 1- and 2-hop variants adjust the step-count instruction and
//! compress the example's reasoning to the requested depth.

use thiserror::Error;

use crate::corpus::CorpusRecord;

#[derive(Debug, Clone, PartialEq)]
pub struct PromptSpec {
    pub question: String,
    pub context: String,
    pub options: Vec<String>,
    pub hops: usize,
    /// When set, the correct answer is revealed in the target block.
    pub answer: Option<String>,
}

impl PromptSpec {
    pub fn from_record(record: &CorpusRecord) -> Self {
        Self {
            question: record.question.clone(),
            context: record.context.clone(),
            options: record.options.clone(),
            hops: record.reference.hops,
            answer: None,
        }
    }

    pub fn reveal_answer(mut self, answer: impl Into<String>) -> Self {
        self.answer = Some(answer.into());
        self
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PromptError {
    #[error("unsupported reasoning depth {hops}; templates exist for 1, 2 and 3 hops")]
    UnsupportedDepth { hops: usize },
}

struct DepthText {
    instruction: &'static str,
    example_steps: &'static str,
}

fn depth_text(hops: usize) -> Result<DepthText, PromptError> {
    match hops {
        1 => Ok(DepthText {
            instruction: "BECAUSE: Provide one reasoning step: Step 1",
            example_steps: "BECAUSE: 1: The water is heated until it starts to boil at 100 degrees.",
        }),
        2 => Ok(DepthText {
            instruction: "BECAUSE: Provide two reasoning steps: Step 1 → Step 2",
            example_steps: "BECAUSE: 1: Water is heated. 2: The water starts to boil at 100 degrees.",
        }),
        3 => Ok(DepthText {
            instruction: "BECAUSE: Provide three reasoning steps: Step 1 → Step 2 → Step 3",
            example_steps: "BECAUSE: 1: Water is heated. 2: The temperature of the water increases. 3: The water starts to boil at 100 degrees.",
        }),
        hops => Err(PromptError::UnsupportedDepth { hops }),
    }
}

fn render_options(options: &[String]) -> String {
    options
        .iter()
        .enumerate()
        .map(|(i, text)| {
            let letter = (b'A' + (i % 26) as u8) as char;
            // Options that already carry a "(A)"-style tag pass through.
            if text.trim_start().starts_with('(') {
                text.trim().to_string()
            } else {
                format!("({letter}) {}", text.trim())
            }
        })
        .collect::<Vec<_>>()
        .join(" ")
}

/// Renders the full prompt. Identical specs produce byte-identical prompts.
pub fn build_prompt(spec: &PromptSpec) -> Result<String, PromptError> {
    let depth = depth_text(spec.hops)?;
    let final_step = spec.hops;
    let answer_line = match &spec.answer {
        Some(answer) => format!("Answer: {answer}"),
        None => "Answer:".to_string(),
    };
    Ok(format!(
        "Follow the provided structure strictly and stop after completing the THEREFORE section.\n\
Task Structure:\n\
Question: [Insert the question here]\n\
Context: [Insert the context here]\n\
Options: [Provide options in format (A), (B), ...]\n\
Answer: [Provide the correct answer]\n\
{instruction}\n\
THEREFORE: Derive the final conclusion based on Step {final_step}\n\
\n\
Example Task:\n\
Question: What happens when water is heated to 100 degrees?\n\
Context: When water is heated, its temperature increases. At 100 degrees, water reaches its boiling point and turns into steam.\n\
Options: (A) Water freezes at 100 degrees. (B) Steam is produced when water boils.\n\
Answer: The answer is B.\n\
{example_steps}\n\
THEREFORE: When the water starts to boil, steam will be produced.\n\
\n\
Question: {question}\n\
Context: {context}\n\
Options: {options}\n\
{answer_line}\n",
        instruction = depth.instruction,
        example_steps = depth.example_steps,
        question = spec.question,
        context = spec.context,
        options = render_options(&spec.options),
    ))
}
