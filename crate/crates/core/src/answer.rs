use std::fmt;

use serde::{Deserialize, Serialize};

/// An ordered list of answer scalars in their canonical rendering.
///
/// Executed programs render numbers without a trailing `.0` for integral
/// values and dates as `YYYY-MM-DD`; gold answers are kept as annotated.
/// An empty value is allowed and stands for an empty or failed execution.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct AnswerValue(pub Vec<String>);

impl AnswerValue {
    pub fn new<I, S>(values: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        AnswerValue(values.into_iter().map(Into::into).collect())
    }

    pub fn single(value: impl Into<String>) -> Self {
        AnswerValue(vec![value.into()])
    }

    /// Splits a `|`-separated multi-value target, as used by dataset files.
    pub fn from_pipe_separated(s: &str) -> Self {
        AnswerValue(s.split('|').map(str::to_owned).collect())
    }

    pub fn values(&self) -> &[String] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl fmt::Display for AnswerValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[")?;
        for (i, v) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{v:?}")?;
        }
        write!(f, "]")
    }
}

impl<S: Into<String>> FromIterator<S> for AnswerValue {
    fn from_iter<T: IntoIterator<Item = S>>(iter: T) -> Self {
        AnswerValue::new(iter)
    }
}
