//! Product aspects and the two question templates asked about each one.

use std::collections::HashSet;
use std::fmt;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Aspect {
    /// Canonical lowercase name, unique within a set.
    pub key: String,
    pub display: String,
    /// Keep `display` casing inside questions ("WiFi").
    pub keep_case: bool,
}

impl Aspect {
    pub fn new(display: &str) -> Self {
        Self {
            key: display.trim().to_lowercase(),
            display: display.trim().to_string(),
            keep_case: false,
        }
    }

    pub fn cased(display: &str) -> Self {
        Self {
            keep_case: true,
            ..Self::new(display)
        }
    }

    /// The aspect name as it appears inside a question.
    pub fn question_form(&self) -> String {
        if self.keep_case {
            self.display.clone()
        } else {
            self.display.to_lowercase()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QuestionVariant {
    HowIs,
    WhatIsOpinionOn,
}

impl QuestionVariant {
    pub const ALL: [QuestionVariant; 2] = [QuestionVariant::HowIs, QuestionVariant::WhatIsOpinionOn];

    pub fn render(self, aspect: &Aspect) -> String {
        let name = aspect.question_form();
        match self {
            QuestionVariant::HowIs => format!("How is {name}?"),
            QuestionVariant::WhatIsOpinionOn => format!("What is opinion on {name}?"),
        }
    }
}

impl fmt::Display for QuestionVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            QuestionVariant::HowIs => "how_is",
            QuestionVariant::WhatIsOpinionOn => "what_is_opinion_on",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AspectQuery {
    pub aspect: Aspect,
    pub variant: QuestionVariant,
    pub question: String,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum AspectError {
    #[error("aspect list is empty")]
    Empty,
    #[error("duplicate aspect key `{0}`")]
    DuplicateKey(String),
}

/// The ten tablet/laptop features, in order.
pub fn default_aspects() -> Vec<Aspect> {
    [
        "Display",
        "Memory",
        "Speaker",
        "Sound",
        "Processor",
        "WiFi",
        "Battery",
        "Brand",
        "Operating System",
        "Camera",
    ]
    .iter()
    .map(|name| {
        if *name == "WiFi" {
            Aspect::cased(name)
        } else {
            Aspect::new(name)
        }
    })
    .collect()
}

/// Two queries per aspect, grouped by aspect.
pub fn generate_questions(aspects: &[Aspect]) -> Result<Vec<AspectQuery>, AspectError> {
    if aspects.is_empty() {
        return Err(AspectError::Empty);
    }
    let mut seen = HashSet::new();
    for aspect in aspects {
        if aspect.key.is_empty() || !seen.insert(aspect.key.as_str()) {
            return Err(AspectError::DuplicateKey(aspect.key.clone()));
        }
    }
    Ok(aspects
        .iter()
        .flat_map(|aspect| {
            QuestionVariant::ALL.iter().map(move |&variant| AspectQuery {
                aspect: aspect.clone(),
                variant,
                question: variant.render(aspect),
            })
        })
        .collect())
}

/// Parses an aspects file: one aspect per line, `!` prefix keeps casing,
/// blank lines and `#` comments ignored.
pub fn parse_aspects(text: &str) -> Result<Vec<Aspect>, AspectError> {
    let aspects: Vec<Aspect> = text
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(|l| match l.strip_prefix('!') {
            Some(name) => Aspect::cased(name),
            None => Aspect::new(l),
        })
        .collect();
    // Validates emptiness and key uniqueness.
    generate_questions(&aspects)?;
    Ok(aspects)
}
