//! Parser for `--bound` expressions:
//!
//! ```text
//! pi(E,E') | pi(P,E)=0.14644660 pi(P,E')=0.14644660
//! pi(P,E)+pi(P,E') | pi(E,E')=0.5
//! 2*pi(E,P) - pi(E',P) | ...
//! ```
//!
//! Left of `|` is a linear functional; right of it, fixed pair values
//! separated by whitespace or commas.

use bellforge::polytope::{PairTarget, Term};

#[derive(Debug, PartialEq)]
pub struct BoundSpec {
    pub functional: Vec<Term>,
    pub fixed: Vec<PairTarget>,
}

struct Cursor<'a> {
    s: &'a str,
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn skip_ws(&mut self) {
        while self.s[self.pos..].starts_with(|c: char| c.is_whitespace() || c == ',') {
            self.pos += 1;
        }
    }

    fn eat(&mut self, tok: &str) -> bool {
        self.skip_ws();
        if self.s[self.pos..].starts_with(tok) {
            self.pos += tok.len();
            true
        } else {
            false
        }
    }

    fn expect(&mut self, tok: &str) -> Result<(), String> {
        if self.eat(tok) {
            Ok(())
        } else {
            Err(format!(
                "expected `{tok}` at offset {} in `{}`",
                self.pos, self.s
            ))
        }
    }

    fn done(&mut self) -> bool {
        self.skip_ws();
        self.pos >= self.s.len()
    }

    fn number(&mut self) -> Result<f64, String> {
        self.skip_ws();
        let rest = &self.s[self.pos..];
        let len = rest
            .find(|c: char| !(c.is_ascii_digit() || matches!(c, '.' | 'e' | 'E' | '-' | '+')))
            .unwrap_or(rest.len());
        let v: f64 = rest[..len]
            .parse()
            .map_err(|_| format!("bad number `{}`", &rest[..len]))?;
        self.pos += len;
        Ok(v)
    }

    /// `pi(X,Y)`; the inner comma is the only separator.
    fn pair(&mut self) -> Result<(String, String), String> {
        self.expect("pi(")?;
        let rest = &self.s[self.pos..];
        let close = rest.find(')').ok_or("unclosed `pi(`")?;
        let inner = &rest[..close];
        let (x, y) = inner
            .split_once(',')
            .ok_or_else(|| format!("expected `pi(X,Y)`, got `pi({inner})`"))?;
        let (x, y) = (x.trim(), y.trim());
        if x.is_empty() || y.is_empty() {
            return Err(format!("empty observable in `pi({inner})`"));
        }
        self.pos += close + 1;
        Ok((x.to_string(), y.to_string()))
    }
}

fn parse_functional(s: &str) -> Result<Vec<Term>, String> {
    let mut c = Cursor { s, pos: 0 };
    let mut terms = Vec::new();
    let mut sign = 1.0;
    if c.eat("-") {
        sign = -1.0;
    }
    loop {
        c.skip_ws();
        let coeff = if c.s[c.pos..].starts_with("pi(") {
            1.0
        } else {
            let v = c.number()?;
            c.expect("*")?;
            v
        };
        let (x, y) = c.pair()?;
        terms.push(Term {
            x,
            y,
            coeff: sign * coeff,
        });
        if c.done() {
            break;
        }
        sign = if c.eat("+") {
            1.0
        } else if c.eat("-") {
            -1.0
        } else {
            return Err(format!("expected `+` or `-` at offset {} in `{s}`", c.pos));
        };
    }
    Ok(terms)
}

fn parse_fixed(s: &str) -> Result<Vec<PairTarget>, String> {
    let mut c = Cursor { s, pos: 0 };
    let mut out = Vec::new();
    while !c.done() {
        let (x, y) = c.pair()?;
        c.expect("=")?;
        let pi = c.number()?;
        out.push(PairTarget { x, y, pi });
    }
    Ok(out)
}

pub fn parse(expr: &str) -> Result<BoundSpec, String> {
    let (lhs, rhs) = expr.split_once('|').unwrap_or((expr, ""));
    let functional = parse_functional(lhs.trim())?;
    let fixed = parse_fixed(rhs.trim())?;
    Ok(BoundSpec { functional, fixed })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_coordinate() {
        let b = parse("pi(E,E') | pi(P,E)=0.14644660 pi(P,E')=0.14644660").unwrap();
        assert_eq!(b.functional, vec![Term::new("E", "E'", 1.0)]);
        assert_eq!(
            b.fixed,
            vec![
                PairTarget::new("P", "E", 0.1464466),
                PairTarget::new("P", "E'", 0.1464466)
            ]
        );
    }

    #[test]
    fn sums_and_coefficients() {
        let b = parse("pi(P,E)+pi(P,E') | pi(E,E')=0.5").unwrap();
        assert_eq!(b.functional.len(), 2);
        let b = parse("2*pi(E, P) - 0.5*pi(E',P)|").unwrap();
        assert_eq!(
            b.functional,
            vec![Term::new("E", "P", 2.0), Term::new("E'", "P", -0.5)]
        );
        assert!(b.fixed.is_empty());
        let b = parse("-pi(E,P)").unwrap();
        assert_eq!(b.functional, vec![Term::new("E", "P", -1.0)]);
        let b = parse("pi(E,P) | pi(E,E')=0.5, pi(P,E')=1e-1").unwrap();
        assert_eq!(b.fixed[1].pi, 0.1);
    }

    #[test]
    fn errors() {
        assert!(parse("").is_err());
        assert!(parse("pi(E)").is_err());
        assert!(parse("pi(E,P) pi(E,E')").is_err());
        assert!(parse("pi(E,P) | pi(E,E')").is_err());
        assert!(parse("pi(E,P) | pi(E,E')=abc").is_err());
        assert!(parse("pi(E,P").is_err());
    }
}
