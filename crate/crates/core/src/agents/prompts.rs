//! Versioned prompt templates with `{{name}}` placeholders.

use std::path::Path;

#[derive(Debug, thiserror::Error)]
pub enum PromptError {
    #[error("cannot read prompt template {path}: {message}")]
    Io { path: String, message: String },
    #[error("template {template} has no value for placeholder {{{{{name}}}}}")]
    MissingValue { template: String, name: String },
    #[error("template {template} has an unterminated placeholder")]
    Unterminated { template: String },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PromptSet {
    pub generator_system: String,
    pub generator_user: String,
    pub validator_system: String,
    pub validator_user: String,
    pub repair: String,
    pub tool_reminder: String,
}

const FILES: [&str; 6] = [
    "generator.system.v1.txt",
    "generator.user.v1.txt",
    "validator.system.v1.txt",
    "validator.user.v1.txt",
    "repair.v1.txt",
    "tool_reminder.v1.txt",
];

impl Default for PromptSet {
    fn default() -> Self {
        Self {
            generator_system: include_str!("../../prompts/generator.system.v1.txt").into(),
            generator_user: include_str!("../../prompts/generator.user.v1.txt").into(),
            validator_system: include_str!("../../prompts/validator.system.v1.txt").into(),
            validator_user: include_str!("../../prompts/validator.user.v1.txt").into(),
            repair: include_str!("../../prompts/repair.v1.txt").into(),
            tool_reminder: include_str!("../../prompts/tool_reminder.v1.txt").into(),
        }
    }
}

impl PromptSet {
    /// Loads templates from `dir`; files that are absent keep the built-in text.
    pub fn load(dir: &Path) -> Result<Self, PromptError> {
        let mut set = Self::default();
        let slots: [&mut String; 6] = [
            &mut set.generator_system,
            &mut set.generator_user,
            &mut set.validator_system,
            &mut set.validator_user,
            &mut set.repair,
            &mut set.tool_reminder,
        ];
        for (file, slot) in FILES.iter().zip(slots) {
            let path = dir.join(file);
            match std::fs::read_to_string(&path) {
                Ok(text) => *slot = text,
                Err(e) if e.kind() == std::io::ErrorKind::NotFound => {}
                Err(e) => {
                    return Err(PromptError::Io { path: path.display().to_string(), message: e.to_string() })
                }
            }
        }
        Ok(set)
    }
}

/// Substitutes every `{{name}}` in `template`. Values are inserted verbatim
/// and never re-scanned.
pub fn render(name: &str, template: &str, values: &[(&str, &str)]) -> Result<String, PromptError> {
    let mut out = String::with_capacity(template.len());
    let mut rest = template;
    while let Some(start) = rest.find("{{") {
        out.push_str(&rest[..start]);
        let after = &rest[start + 2..];
        let end = after
            .find("}}")
            .ok_or_else(|| PromptError::Unterminated { template: name.to_string() })?;
        let key = after[..end].trim();
        let value = values
            .iter()
            .find(|(k, _)| *k == key)
            .map(|(_, v)| *v)
            .ok_or_else(|| PromptError::MissingValue { template: name.to_string(), name: key.to_string() })?;
        out.push_str(value);
        rest = &after[end + 2..];
    }
    out.push_str(rest);
    Ok(out)
}
