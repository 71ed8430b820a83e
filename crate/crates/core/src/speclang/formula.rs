use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use super::SpecError;

/// Largest `T` accepted in the bounded-always sugar `G[a,T] φ`.
pub const MAX_BOUNDED_DEPTH: usize = 64;

/// Syntactically co-safe LTL: negation only on atoms.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Formula {
    True,
    Atom(String),
    NegAtom(String),
    And(Box<Formula>, Box<Formula>),
    Or(Box<Formula>, Box<Formula>),
    Next(Box<Formula>),
    Until(Box<Formula>, Box<Formula>),
    Eventually(Box<Formula>),
}

impl Formula {
    pub fn atom(p: &str) -> Self {
        Formula::Atom(p.into())
    }

    pub fn and(a: Formula, b: Formula) -> Self {
        Formula::And(Box::new(a), Box::new(b))
    }

    pub fn or(a: Formula, b: Formula) -> Self {
        Formula::Or(Box::new(a), Box::new(b))
    }

    pub fn next(a: Formula) -> Self {
        Formula::Next(Box::new(a))
    }

    pub fn until(a: Formula, b: Formula) -> Self {
        Formula::Until(Box::new(a), Box::new(b))
    }

    pub fn eventually(a: Formula) -> Self {
        Formula::Eventually(Box::new(a))
    }

    /// `⋀_{j=from}^{to} ○ʲ φ`.
    pub fn bounded_always(phi: Formula, from: usize, to: usize) -> Self {
        let mut terms = (from..=to).map(|j| {
            let mut f = phi.clone();
            for _ in 0..j {
                f = Formula::next(f);
            }
            f
        });
        let first = terms.next().unwrap_or(Formula::True);
        terms.fold(first, Formula::and)
    }

    /// Atomic propositions mentioned by the formula.
    pub fn atoms(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.collect_atoms(&mut out);
        out
    }

    fn collect_atoms(&self, out: &mut BTreeSet<String>) {
        match self {
            Formula::True => {}
            Formula::Atom(p) | Formula::NegAtom(p) => {
                out.insert(p.clone());
            }
            Formula::And(a, b) | Formula::Or(a, b) | Formula::Until(a, b) => {
                a.collect_atoms(out);
                b.collect_atoms(out);
            }
            Formula::Next(a) | Formula::Eventually(a) => a.collect_atoms(out),
        }
    }

    pub fn depth(&self) -> usize {
        match self {
            Formula::True | Formula::Atom(_) | Formula::NegAtom(_) => 0,
            Formula::And(a, b) | Formula::Or(a, b) | Formula::Until(a, b) => {
                1 + a.depth().max(b.depth())
            }
            Formula::Next(a) | Formula::Eventually(a) => 1 + a.depth(),
        }
    }
}

impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Formula::True => write!(f, "true"),
            Formula::Atom(p) => write!(f, "{p}"),
            Formula::NegAtom(p) => write!(f, "!{p}"),
            Formula::And(a, b) => write!(f, "({a} & {b})"),
            Formula::Or(a, b) => write!(f, "({a} | {b})"),
            Formula::Next(a) => write!(f, "X {a}"),
            Formula::Until(a, b) => write!(f, "({a} U {b})"),
            Formula::Eventually(a) => write!(f, "F {a}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    True,
    Ident(String),
    Num(usize),
    Not,
    And,
    Or,
    Next,
    Until,
    Eventually,
    Always,
    LParen,
    RParen,
    LBracket,
    RBracket,
    Comma,
}

fn tokenize(text: &str) -> Result<Vec<(usize, Tok)>, SpecError> {
    let mut out = Vec::new();
    let chars: Vec<(usize, char)> = text.char_indices().collect();
    let mut i = 0;
    while i < chars.len() {
        let (pos, c) = chars[i];
        if c.is_whitespace() {
            i += 1;
            continue;
        }
        let single = match c {
            '!' | '¬' => Some(Tok::Not),
            '&' | '∧' => Some(Tok::And),
            '|' | '∨' => Some(Tok::Or),
            '○' => Some(Tok::Next),
            '◇' => Some(Tok::Eventually),
            '(' => Some(Tok::LParen),
            ')' => Some(Tok::RParen),
            '[' => Some(Tok::LBracket),
            ']' => Some(Tok::RBracket),
            ',' => Some(Tok::Comma),
            _ => None,
        };
        if let Some(t) = single {
            out.push((pos, t));
            i += 1;
            continue;
        }
        if c.is_ascii_digit() {
            let start = i;
            while i < chars.len() && chars[i].1.is_ascii_digit() {
                i += 1;
            }
            let s: String = chars[start..i].iter().map(|p| p.1).collect();
            let n = s.parse().map_err(|_| SpecError::Syntax {
                pos,
                msg: format!("number {s} is too large"),
            })?;
            out.push((pos, Tok::Num(n)));
            continue;
        }
        if c.is_alphabetic() || c == '_' {
            let start = i;
            while i < chars.len() && (chars[i].1.is_alphanumeric() || chars[i].1 == '_') {
                i += 1;
            }
            let word: String = chars[start..i].iter().map(|p| p.1).collect();
            let tok = match word.as_str() {
                "true" => Tok::True,
                "X" => Tok::Next,
                "U" => Tok::Until,
                "F" => Tok::Eventually,
                "G" => Tok::Always,
                _ => Tok::Ident(word),
            };
            out.push((pos, tok));
            continue;
        }
        return Err(SpecError::Syntax {
            pos,
            msg: format!("unexpected character '{c}'"),
        });
    }
    Ok(out)
}

struct Parser {
    toks: Vec<(usize, Tok)>,
    at: usize,
    end: usize,
}

impl Parser {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.at).map(|t| &t.1)
    }

    fn pos(&self) -> usize {
        self.toks.get(self.at).map_or(self.end, |t| t.0)
    }

    fn err<T>(&self, msg: impl Into<String>) -> Result<T, SpecError> {
        Err(SpecError::Syntax {
            pos: self.pos(),
            msg: msg.into(),
        })
    }

    fn expect(&mut self, t: Tok, what: &str) -> Result<(), SpecError> {
        if self.peek() == Some(&t) {
            self.at += 1;
            Ok(())
        } else {
            self.err(format!("expected {what}"))
        }
    }

    fn or(&mut self) -> Result<Formula, SpecError> {
        let mut f = self.and()?;
        while self.peek() == Some(&Tok::Or) {
            self.at += 1;
            f = Formula::or(f, self.and()?);
        }
        Ok(f)
    }

    fn and(&mut self) -> Result<Formula, SpecError> {
        let mut f = self.until()?;
        while self.peek() == Some(&Tok::And) {
            self.at += 1;
            f = Formula::and(f, self.until()?);
        }
        Ok(f)
    }

    fn until(&mut self) -> Result<Formula, SpecError> {
        let lhs = self.unary()?;
        if self.peek() == Some(&Tok::Until) {
            self.at += 1;
            let rhs = self.until()?;
            return Ok(Formula::until(lhs, rhs));
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Formula, SpecError> {
        match self.peek() {
            Some(Tok::Not) => {
                let pos = self.pos();
                self.at += 1;
                match self.unary()? {
                    Formula::Atom(p) => Ok(Formula::NegAtom(p)),
                    _ => Err(SpecError::NegationNotOnAtom { pos }),
                }
            }
            Some(Tok::Next) => {
                self.at += 1;
                Ok(Formula::next(self.unary()?))
            }
            Some(Tok::Eventually) => {
                self.at += 1;
                Ok(Formula::eventually(self.unary()?))
            }
            Some(Tok::Always) => {
                self.at += 1;
                self.expect(Tok::LBracket, "'[' after G")?;
                let from = self.number()?;
                self.expect(Tok::Comma, "','")?;
                let to = self.number()?;
                self.expect(Tok::RBracket, "']'")?;
                if from > to {
                    return self.err(format!("empty interval [{from},{to}]"));
                }
                if to > MAX_BOUNDED_DEPTH {
                    return Err(SpecError::BoundTooDeep {
                        depth: to,
                        max: MAX_BOUNDED_DEPTH,
                    });
                }
                let body = self.unary()?;
                Ok(Formula::bounded_always(body, from, to))
            }
            _ => self.primary(),
        }
    }

    fn number(&mut self) -> Result<usize, SpecError> {
        match self.peek() {
            Some(Tok::Num(n)) => {
                let n = *n;
                self.at += 1;
                Ok(n)
            }
            _ => self.err("expected a number"),
        }
    }

    fn primary(&mut self) -> Result<Formula, SpecError> {
        match self.peek().cloned() {
            Some(Tok::True) => {
                self.at += 1;
                Ok(Formula::True)
            }
            Some(Tok::Ident(p)) => {
                self.at += 1;
                Ok(Formula::Atom(p))
            }
            Some(Tok::LParen) => {
                self.at += 1;
                let f = self.or()?;
                self.expect(Tok::RParen, "')'")?;
                Ok(f)
            }
            Some(t) => self.err(format!("unexpected token {t:?}")),
            None => self.err("unexpected end of formula"),
        }
    }
}

/// Parses the concrete syntax: identifiers, `true`, `!`, `&`, `|`, `X`, `U`,
/// `F`, parentheses, and `G[a,b] φ` for `⋀_{j=a}^{b} ○ʲ φ`.
///
/// Precedence from tightest: `!`, then `X`/`F`/`G[..]`, then `U` (right
/// associative), then `&`, then `|`.
pub fn parse_scltl(text: &str) -> Result<Formula, SpecError> {
    let toks = tokenize(text)?;
    let mut p = Parser {
        toks,
        at: 0,
        end: text.len(),
    };
    let f = p.or()?;
    if p.at != p.toks.len() {
        return p.err("trailing input");
    }
    Ok(f)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn a() -> Formula {
        Formula::atom("a")
    }
    fn b() -> Formula {
        Formula::atom("b")
    }

    #[test]
    fn until_example() {
        assert_eq!(parse_scltl("a U b").unwrap(), Formula::until(a(), b()));
    }

    #[test]
    fn eventually() {
        assert_eq!(parse_scltl("F b").unwrap(), Formula::eventually(b()));
        assert_eq!(parse_scltl("◇ b").unwrap(), Formula::eventually(b()));
    }

    #[test]
    fn negation_only_on_atoms() {
        assert!(matches!(
            parse_scltl("!(a U b)"),
            Err(SpecError::NegationNotOnAtom { pos: 0 })
        ));
        assert!(matches!(parse_scltl("!!a"), Err(SpecError::NegationNotOnAtom { .. })));
        assert!(matches!(parse_scltl("!true"), Err(SpecError::NegationNotOnAtom { .. })));
        assert_eq!(parse_scltl("!(a)").unwrap(), Formula::NegAtom("a".into()));
    }

    #[test]
    fn precedence_and_associativity() {
        let c = Formula::atom("c");
        assert_eq!(
            parse_scltl("a U b U c").unwrap(),
            Formula::until(a(), Formula::until(b(), c.clone()))
        );
        assert_eq!(
            parse_scltl("a & b | c").unwrap(),
            Formula::or(Formula::and(a(), b()), c.clone())
        );
        assert_eq!(
            parse_scltl("a U b & c").unwrap(),
            Formula::and(Formula::until(a(), b()), c.clone())
        );
        assert_eq!(
            parse_scltl("X a U !b").unwrap(),
            Formula::until(Formula::next(a()), Formula::NegAtom("b".into()))
        );
        assert_eq!(
            parse_scltl("F a & X true").unwrap(),
            Formula::and(Formula::eventually(a()), Formula::next(Formula::True))
        );
    }

    #[test]
    fn bounded_always_sugar() {
        let f = parse_scltl("G[0,2] a").unwrap();
        let want = Formula::and(
            Formula::and(a(), Formula::next(a())),
            Formula::next(Formula::next(a())),
        );
        assert_eq!(f, want);
        assert!(matches!(
            parse_scltl("G[0,65] a"),
            Err(SpecError::BoundTooDeep { depth: 65, .. })
        ));
        assert!(parse_scltl("G[3,1] a").is_err());
    }

    #[test]
    fn syntax_errors_carry_positions() {
        assert!(matches!(parse_scltl("a U"), Err(SpecError::Syntax { pos: 3, .. })));
        assert!(matches!(parse_scltl("a $ b"), Err(SpecError::Syntax { pos: 2, .. })));
        assert!(matches!(parse_scltl("(a"), Err(SpecError::Syntax { .. })));
        assert!(matches!(parse_scltl("a b"), Err(SpecError::Syntax { pos: 2, .. })));
    }

    #[test]
    fn display_round_trips() {
        for text in ["a U b", "!a & X (b | F c)", "G[0,3] (s & !o) & F t", "true U X !a"] {
            let f = parse_scltl(text).unwrap();
            assert_eq!(parse_scltl(&f.to_string()).unwrap(), f);
        }
    }
}
