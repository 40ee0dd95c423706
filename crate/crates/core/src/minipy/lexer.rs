//! Indentation-aware tokenizer for the mini-language.

use super::ParseError;

#[derive(Debug, Clone, PartialEq)]
pub enum Tok {
    Name(String),
    Int(i64),
    Real(f64),
    Str(String),
    Op(&'static str),
    Newline,
    Indent,
    Dedent,
    Eof,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Token {
    pub tok: Tok,
    pub line: u32,
    pub col: u32,
}

// Longest first so that `**` wins over `*`.
const OPERATORS: [&str; 21] = [
    "**", "<=", ">=", "==", "!=", "->", "+", "-", "*", "/", "<", ">", "=", "(", ")", ",", ":", ".",
    "[", "]", "@",
];

pub fn tokenize(source: &str) -> Result<Vec<Token>, ParseError> {
    let mut out = Vec::new();
    let mut indents = vec![0usize];
    let mut depth = 0usize;

    for (idx, raw_line) in source.lines().enumerate() {
        let line = idx as u32 + 1;
        let chars: Vec<char> = raw_line.chars().collect();
        let mut i = 0;

        if depth == 0 {
            let mut width = 0;
            while i < chars.len() && (chars[i] == ' ' || chars[i] == '\t') {
                if chars[i] == '\t' {
                    return Err(ParseError::syntax(line, i as u32 + 1, "tab in indentation"));
                }
                width += 1;
                i += 1;
            }
            if i == chars.len() || chars[i] == '#' {
                continue;
            }
            let current = *indents.last().expect("indent stack never empty");
            if width > current {
                indents.push(width);
                out.push(Token { tok: Tok::Indent, line, col: 1 });
            } else {
                while width < *indents.last().expect("indent stack never empty") {
                    indents.pop();
                    out.push(Token { tok: Tok::Dedent, line, col: 1 });
                }
                if width != *indents.last().expect("indent stack never empty") {
                    return Err(ParseError::syntax(line, 1, "inconsistent dedent"));
                }
            }
        }

        while i < chars.len() {
            let c = chars[i];
            let col = i as u32 + 1;
            if c == ' ' || c == '\t' {
                i += 1;
            } else if c == '#' {
                break;
            } else if c.is_ascii_alphabetic() || c == '_' {
                let start = i;
                while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                    i += 1;
                }
                let name: String = chars[start..i].iter().collect();
                out.push(Token { tok: Tok::Name(name), line, col });
            } else if c.is_ascii_digit() || (c == '.' && chars.get(i + 1).is_some_and(char::is_ascii_digit)) {
                let (tok, next) = number(&chars, i, line)?;
                out.push(Token { tok, line, col });
                i = next;
            } else if c == '"' || c == '\'' {
                let (text, next) = string(&chars, i, line)?;
                out.push(Token { tok: Tok::Str(text), line, col });
                i = next;
            } else if c == '\\' {
                return Err(ParseError::unsupported(line, col, "line continuation"));
            } else {
                let rest: String = chars[i..].iter().take(2).collect();
                let op = OPERATORS
                    .iter()
                    .find(|op| rest.starts_with(*op))
                    .ok_or_else(|| ParseError::syntax(line, col, format!("unexpected character {c:?}")))?;
                match *op {
                    "(" | "[" => depth += 1,
                    ")" | "]" => {
                        depth = depth
                            .checked_sub(1)
                            .ok_or_else(|| ParseError::syntax(line, col, "unbalanced bracket"))?
                    }
                    _ => {}
                }
                out.push(Token { tok: Tok::Op(op), line, col });
                i += op.len();
            }
        }

        if depth == 0 && out.last().is_some_and(|t| t.tok != Tok::Newline) {
            out.push(Token {
                tok: Tok::Newline,
                line,
                col: chars.len() as u32 + 1,
            });
        }
    }

    let end = source.lines().count() as u32 + 1;
    if depth != 0 {
        return Err(ParseError::syntax(end, 1, "unexpected end of input inside brackets"));
    }
    while indents.len() > 1 {
        indents.pop();
        out.push(Token { tok: Tok::Dedent, line: end, col: 1 });
    }
    out.push(Token { tok: Tok::Eof, line: end, col: 1 });
    Ok(out)
}

fn number(chars: &[char], start: usize, line: u32) -> Result<(Tok, usize), ParseError> {
    let mut i = start;
    let mut real = false;
    while i < chars.len() && chars[i].is_ascii_digit() {
        i += 1;
    }
    if i < chars.len() && chars[i] == '.' {
        real = true;
        i += 1;
        while i < chars.len() && chars[i].is_ascii_digit() {
            i += 1;
        }
    }
    if i < chars.len() && (chars[i] == 'e' || chars[i] == 'E') {
        let mut j = i + 1;
        if j < chars.len() && (chars[j] == '+' || chars[j] == '-') {
            j += 1;
        }
        if j < chars.len() && chars[j].is_ascii_digit() {
            real = true;
            i = j;
            while i < chars.len() && chars[i].is_ascii_digit() {
                i += 1;
            }
        }
    }
    let text: String = chars[start..i].iter().collect();
    let col = start as u32 + 1;
    let tok = if real {
        Tok::Real(
            text.parse()
                .map_err(|_| ParseError::syntax(line, col, format!("bad number {text}")))?,
        )
    } else {
        Tok::Int(
            text.parse()
                .map_err(|_| ParseError::syntax(line, col, format!("integer literal {text} too large")))?,
        )
    };
    Ok((tok, i))
}

fn string(chars: &[char], start: usize, line: u32) -> Result<(String, usize), ParseError> {
    let quote = chars[start];
    let mut i = start + 1;
    let mut text = String::new();
    while i < chars.len() {
        match chars[i] {
            c if c == quote => return Ok((text, i + 1)),
            '\\' if i + 1 < chars.len() => {
                text.push(match chars[i + 1] {
                    'n' => '\n',
                    't' => '\t',
                    other => other,
                });
                i += 2;
            }
            c => {
                text.push(c);
                i += 1;
            }
        }
    }
    Err(ParseError::syntax(line, start as u32 + 1, "unterminated string literal"))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn kinds(src: &str) -> Vec<Tok> {
        tokenize(src).unwrap().into_iter().map(|t| t.tok).collect()
    }

    #[test]
    fn indentation_tokens() {
        let toks = kinds("class A:\n    def f(self):\n        return 1\n");
        assert_eq!(toks.iter().filter(|t| **t == Tok::Indent).count(), 2);
        assert_eq!(toks.iter().filter(|t| **t == Tok::Dedent).count(), 2);
        assert_eq!(toks.last(), Some(&Tok::Eof));
    }

    #[test]
    fn brackets_join_lines() {
        let toks = kinds("x = f(1,\n      2)\n");
        assert_eq!(toks.iter().filter(|t| **t == Tok::Newline).count(), 1);
    }

    #[test]
    fn numbers_strings_operators() {
        let toks = kinds("a ** 2 <= 100.0 'it\\'s' \"q\" 1e3\n");
        assert_eq!(
            toks[..8],
            [
                Tok::Name("a".into()),
                Tok::Op("**"),
                Tok::Int(2),
                Tok::Op("<="),
                Tok::Real(100.0),
                Tok::Str("it's".into()),
                Tok::Str("q".into()),
                Tok::Real(1000.0),
            ]
        );
    }

    #[test]
    fn lexical_errors_carry_position() {
        let err = tokenize("x = 'open\n").unwrap_err();
        assert!(err.to_string().starts_with("1:5"), "{err}");
        assert!(tokenize("x = $\n").is_err());
        assert!(tokenize("if a:\n        b\n    c\n").is_err());
    }
}
