//! Plain-text reports: a title, `key: value` lines and optional sections.

use std::fmt::{Display, Write};

#[derive(Debug, Default, Clone)]
pub struct Report {
    text: String,
}

impl Report {
    pub fn new(title: &str) -> Self {
        let mut r = Self::default();
        let _ = writeln!(r.text, "# {title}");
        r
    }

    pub fn line(&mut self, key: &str, value: impl Display) -> &mut Self {
        let _ = writeln!(self.text, "{key}: {value}");
        self
    }

    pub fn section(&mut self, name: &str) -> &mut Self {
        let _ = writeln!(self.text, "\n[{name}]");
        self
    }

    pub fn raw(&mut self, text: impl Display) -> &mut Self {
        let _ = writeln!(self.text, "{text}");
        self
    }

    pub fn as_str(&self) -> &str {
        &self.text
    }
}

/// Fixed-precision number; keeps reports stable across platforms.
pub fn fmt(v: f64, digits: usize) -> String {
    if v.is_finite() {
        format!("{v:.digits$}")
    } else {
        v.to_string()
    }
}

pub fn pm(v: f64, sigma: f64, digits: usize) -> String {
    format!("{} +- {}", fmt(v, digits), fmt(sigma, digits))
}
