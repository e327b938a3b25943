//! Parser for the ascii formula grammar:
//!
//! ```text
//! expr := term ('|' term)*
//! term := '(' conj ')' | conj
//! conj := lit ('&' lit)*
//! lit  := '~'? NAME | 'True' | 'False'
//! ```
//!
//! Whitespace is insignificant and names must match the dataset header.
//! Constants inside conjunctions are folded away (`x & True` is `x`, a
//! `False` conjunct kills its term); repeated literals deduplicate and a
//! contradictory term (`x & ~x`) drops out. An expression left with no
//! terms is the constant `False`.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use super::{DnfFormula, Literal, Minterm};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
enum Token {
    Or,
    And,
    Not,
    Open,
    Close,
    True,
    False,
    Name(String),
}

fn tokenize(text: &str) -> Result<Vec<Token>> {
    let mut tokens = Vec::new();
    let mut chars = text.chars().peekable();
    while let Some(&c) = chars.peek() {
        match c {
            ' ' | '\t' | '\r' | '\n' => {
                chars.next();
            }
            '|' => {
                chars.next();
                tokens.push(Token::Or);
            }
            '&' => {
                chars.next();
                tokens.push(Token::And);
            }
            '~' => {
                chars.next();
                tokens.push(Token::Not);
            }
            '(' => {
                chars.next();
                tokens.push(Token::Open);
            }
            ')' => {
                chars.next();
                tokens.push(Token::Close);
            }
            _ => {
                if c.is_alphanumeric() || c == '_' {
                    let mut name = String::new();
                    while let Some(&n) = chars.peek() {
                        if n.is_alphanumeric() || n == '_' {
                            name.push(n);
                            chars.next();
                        } else {
                            break;
                        }
                    }
                    tokens.push(match name.as_str() {
                        "True" => Token::True,
                        "False" => Token::False,
                        _ => Token::Name(name),
                    });
                } else {
                    return Err(Error::Parse(format!("unexpected character '{c}'")));
                }
            }
        }
    }
    Ok(tokens)
}

enum ParsedLit {
    ConstTrue,
    ConstFalse,
    Concept(usize, String, bool),
}

/// A conjunction before normalization: literals plus any constant conjuncts.
struct RawTerm {
    literals: Vec<(usize, String, bool)>,
    forced_false: bool,
}

struct Parser<'a> {
    tokens: Vec<Token>,
    pos: usize,
    names: &'a BTreeMap<&'a str, usize>,
}

impl<'a> Parser<'a> {
    fn peek(&self) -> Option<&Token> {
        self.tokens.get(self.pos)
    }

    fn next(&mut self) -> Option<Token> {
        let t = self.tokens.get(self.pos).cloned();
        if t.is_some() {
            self.pos += 1;
        }
        t
    }

    fn literal(&mut self) -> Result<ParsedLit> {
        let negated = if self.peek() == Some(&Token::Not) {
            self.next();
            true
        } else {
            false
        };
        match self.next() {
            Some(Token::Name(name)) => {
                let index = *self.names.get(name.as_str()).ok_or_else(|| {
                    Error::Parse(format!("unknown concept name '{name}'"))
                })?;
                Ok(ParsedLit::Concept(index, name, negated))
            }
            Some(Token::True) if !negated => Ok(ParsedLit::ConstTrue),
            Some(Token::False) if !negated => Ok(ParsedLit::ConstFalse),
            Some(t) => Err(Error::Parse(format!("expected a literal, found {t:?}"))),
            None => Err(Error::Parse("expected a literal, found end of input".to_string())),
        }
    }

    fn conjunction(&mut self) -> Result<RawTerm> {
        let mut term = RawTerm {
            literals: Vec::new(),
            forced_false: false,
        };
        loop {
            match self.literal()? {
                ParsedLit::ConstFalse => term.forced_false = true,
                ParsedLit::ConstTrue => {} // identity inside a conjunction
                ParsedLit::Concept(index, name, negated) => {
                    term.literals.push((index, name, negated));
                }
            }
            if self.peek() == Some(&Token::And) {
                self.next();
            } else {
                break;
            }
        }
        Ok(term)
    }

    fn term(&mut self) -> Result<RawTerm> {
        if self.peek() == Some(&Token::Open) {
            self.next();
            let inner = self.conjunction()?;
            match self.next() {
                Some(Token::Close) => Ok(inner),
                other => Err(Error::Parse(format!(
                    "expected ')', found {other:?}"
                ))),
            }
        } else {
            self.conjunction()
        }
    }
}

/// Parses ascii formula text against a dataset header. The class index is
/// supplied by the caller since the text does not carry it.
pub fn parse(text: &str, concept_names: &[String], class_index: usize) -> Result<DnfFormula> {
    let name_index: BTreeMap<&str, usize> = concept_names
        .iter()
        .enumerate()
        .map(|(i, n)| (n.as_str(), i))
        .collect();
    let tokens = tokenize(text)?;
    if tokens.is_empty() {
        return Err(Error::Parse("empty formula text".to_string()));
    }
    let mut parser = Parser {
        tokens,
        pos: 0,
        names: &name_index,
    };

    let mut terms: Vec<Minterm> = Vec::new();
    let mut any_true_term = false;
    loop {
        let raw = parser.term()?;
        if !raw.forced_false {
            if raw.literals.is_empty() {
                // A bare or fully folded `True` makes the disjunction true.
                any_true_term = true;
            } else {
                // Deduplicate same-sign repeats; opposite signs kill the term.
                let mut by_concept: BTreeMap<usize, (String, bool)> = BTreeMap::new();
                let mut contradictory = false;
                for (index, name, negated) in raw.literals {
                    match by_concept.get(&index) {
                        Some((_, prev)) if *prev != negated => {
                            contradictory = true;
                            break;
                        }
                        _ => {
                            by_concept.insert(index, (name, negated));
                        }
                    }
                }
                if !contradictory {
                    let literals: Vec<Literal> = by_concept
                        .into_iter()
                        .map(|(index, (name, negated))| Literal::new(index, name, negated))
                        .collect();
                    terms.push(Minterm::new(literals)?);
                }
            }
        }
        match parser.next() {
            Some(Token::Or) => continue,
            None => break,
            Some(t) => return Err(Error::Parse(format!("expected '|', found {t:?}"))),
        }
    }

    if any_true_term {
        return Ok(DnfFormula::true_formula(class_index));
    }
    Ok(DnfFormula::from_terms(class_index, terms))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::logic::{render, RenderStyle};
    use alloc::vec;

    fn names() -> Vec<String> {
        vec!["x1".to_string(), "x2".to_string(), "x3".to_string(), "x4".to_string()]
    }

    #[test]
    fn parses_xor_text() {
        let f = parse("(x1 & ~x2) | (~x1 & x2)", &names(), 0).unwrap();
        assert_eq!(f.term_count(), 2);
        assert!(f.evaluate(&[true, false, false, false]));
        assert!(!f.evaluate(&[true, true, false, false]));
        // Term order follows the text; literal order follows concept index.
        assert_eq!(render(&f, RenderStyle::Ascii), "(x1 & ~x2) | (~x1 & x2)");
        assert_eq!(
            render(&f, RenderStyle::DnfCanonical),
            "(~x1 & x2) | (x1 & ~x2)"
        );
    }

    #[test]
    fn whitespace_and_parens_are_flexible() {
        let a = parse("x3|x4", &names(), 1).unwrap();
        let b = parse("  ( x3 ) |\n x4 ", &names(), 1).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn constants_parse_and_fold() {
        assert!(parse("True", &names(), 0).unwrap().is_true());
        assert!(parse("False", &names(), 0).unwrap().is_false());
        // Identity and annihilator inside conjunctions.
        let f = parse("x1 & True", &names(), 0).unwrap();
        assert_eq!(render(&f, RenderStyle::Ascii), "x1");
        let f = parse("x1 & False | x2", &names(), 0).unwrap();
        assert_eq!(render(&f, RenderStyle::Ascii), "x2");
        let f = parse("x1 & False", &names(), 0).unwrap();
        assert!(f.is_false());
        // A contradictory term drops out.
        let f = parse("x1 & ~x1 | x2", &names(), 0).unwrap();
        assert_eq!(render(&f, RenderStyle::Ascii), "x2");
    }

    #[test]
    fn unknown_name_is_reported() {
        let err = parse("x9", &names(), 0).unwrap_err();
        assert!(matches!(err, Error::Parse(msg) if msg.contains("x9")));
    }

    #[test]
    fn negated_constant_is_rejected() {
        assert!(parse("~True", &names(), 0).is_err());
        assert!(parse("~False", &names(), 0).is_err());
    }

    #[test]
    fn garbage_is_rejected() {
        assert!(parse("", &names(), 0).is_err());
        assert!(parse("x1 &", &names(), 0).is_err());
        assert!(parse("(x1", &names(), 0).is_err());
        assert!(parse("x1 ^ x2", &names(), 0).is_err());
        assert!(parse("x1 x2", &names(), 0).is_err());
    }

    #[test]
    fn roundtrip_random_formulas() {
        // parse(render(f)) must equal f structurally for generated formulas.
        let mut rng = crate::rng::seeded(101);
        let header = names();
        for _ in 0..100 {
            let term_count = 1 + rand::Rng::gen_range(&mut rng, 0..4usize);
            let mut terms = Vec::new();
            for _ in 0..term_count {
                let mut literals = Vec::new();
                for (j, name) in header.iter().enumerate() {
                    match rand::Rng::gen_range(&mut rng, 0..3u8) {
                        0 => literals.push(Literal::new(j, name.clone(), false)),
                        1 => literals.push(Literal::new(j, name.clone(), true)),
                        _ => {}
                    }
                }
                if !literals.is_empty() {
                    terms.push(Minterm::new(literals).unwrap());
                }
            }
            let formula = DnfFormula::from_terms(2, terms);
            for style in [RenderStyle::Ascii, RenderStyle::DnfCanonical] {
                let text = render(&formula, style);
                let back = parse(&text, &header, 2).unwrap();
                if style == RenderStyle::Ascii {
                    assert_eq!(back, formula, "through {text}");
                } else {
                    // Canonical rendering may reorder terms.
                    assert_eq!(back.term_count(), formula.term_count());
                    for t in formula.terms() {
                        assert!(back.terms().contains(t));
                    }
                }
            }
        }
    }
}
