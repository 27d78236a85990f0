use std::fmt;

use crate::oracle::Symbol;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct NotesError {
    /// 1-based.
    pub line: usize,
    pub msg: String,
}

impl fmt::Display for NotesError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "line {}: {}", self.line, self.msg)
    }
}

impl std::error::Error for NotesError {}

/// A note token: a lowercase letter (`a` = 0 … `z` = 25) or an integer label.
pub fn parse_token(token: &str) -> Result<Symbol, String> {
    let mut chars = token.chars();
    match (chars.next(), chars.next()) {
        (Some(c @ 'a'..='z'), None) => Ok(c as Symbol - 'a' as Symbol),
        _ => token
            .parse::<Symbol>()
            .map_err(|_| format!("`{token}` is neither a letter a-z nor a non-negative integer")),
    }
}

/// Renders a label the way notes files write it.
pub fn format_symbol(sym: Symbol) -> String {
    match char::from_u32('a' as u32 + sym) {
        Some(c) if sym < 26 => c.to_string(),
        _ => sym.to_string(),
    }
}

/// One token per line; `#` starts a comment; blank lines are skipped.
pub fn parse_notes(text: &str, alphabet: u32) -> Result<Vec<Symbol>, NotesError> {
    let mut out = Vec::new();
    for (n, raw) in text.lines().enumerate() {
        let err = |msg: String| NotesError { line: n + 1, msg };
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let mut tokens = line.split_whitespace();
        let token = tokens.next().unwrap_or_default();
        if tokens.next().is_some() {
            return Err(err(format!("expected one note, found `{line}`")));
        }
        let sym = parse_token(token).map_err(err)?;
        if sym >= alphabet {
            return Err(err(format!("note {sym} is outside the alphabet of size {alphabet}")));
        }
        out.push(sym);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn letters_integers_and_comments() {
        let text = "# riff\na\n\nb   # second\n  2\n";
        assert_eq!(parse_notes(text, 26).unwrap(), vec![0, 1, 2]);
        assert_eq!(parse_token("z"), Ok(25));
        assert_eq!(format_symbol(1), "b");
        assert_eq!(format_symbol(30), "30");
    }

    #[test]
    fn errors_carry_line_numbers() {
        let e = parse_notes("a\nb c\n", 26).unwrap_err();
        assert_eq!(e.line, 2);
        let e = parse_notes("a\n\nQ\n", 26).unwrap_err();
        assert_eq!(e.line, 3);
        assert!(e.to_string().starts_with("line 3:"));
        let e = parse_notes("a\nd\n", 3).unwrap_err();
        assert_eq!(e.line, 2);
        assert!(parse_notes("-1", 26).is_err());
    }
}
