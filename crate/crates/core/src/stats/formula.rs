use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SmoothTerm {
    pub variable: String,
    /// Basis dimension; `None` uses the design default.
    pub k: Option<usize>,
}

/// `response ~ term + term + ...` with terms `x`, `s(x)`, `s(x, k=5)`,
/// `(1|g)` and `s(g, bs="re")`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModelFormula {
    pub response: String,
    pub fixed: Vec<String>,
    pub smooth: Vec<SmoothTerm>,
    pub random: Vec<String>,
}

impl ModelFormula {
    pub fn predictors(&self) -> impl Iterator<Item = &str> {
        self.fixed
            .iter()
            .map(String::as_str)
            .chain(self.smooth.iter().map(|s| s.variable.as_str()))
            .chain(self.random.iter().map(String::as_str))
    }
}

impl fmt::Display for ModelFormula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut terms: Vec<String> = self.fixed.clone();
        terms.extend(self.smooth.iter().map(|s| match s.k {
            Some(k) => format!("s({}, k={k})", s.variable),
            None => format!("s({})", s.variable),
        }));
        terms.extend(self.random.iter().map(|g| format!("(1|{g})")));
        if terms.is_empty() {
            terms.push("1".into());
        }
        write!(f, "{} ~ {}", self.response, terms.join(" + "))
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Ident(String),
    Number(String),
    Str(String),
    Sym(char),
}

fn tokenize(text: &str) -> Result<Vec<(usize, Tok)>> {
    let chars: Vec<(usize, char)> = text.char_indices().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let (pos, c) = chars[i];
        if c.is_whitespace() {
            i += 1;
        } else if c.is_alphabetic() || c == '_' || c == '.' {
            let start = i;
            while i < chars.len() && (chars[i].1.is_alphanumeric() || chars[i].1 == '_' || chars[i].1 == '.') {
                i += 1;
            }
            out.push((pos, Tok::Ident(chars[start..i].iter().map(|p| p.1).collect())));
        } else if c.is_ascii_digit() {
            let start = i;
            while i < chars.len() && (chars[i].1.is_ascii_digit() || chars[i].1 == '.') {
                i += 1;
            }
            out.push((pos, Tok::Number(chars[start..i].iter().map(|p| p.1).collect())));
        } else if c == '"' || c == '\'' {
            let start = i + 1;
            i += 1;
            while i < chars.len() && chars[i].1 != c {
                i += 1;
            }
            if i == chars.len() {
                return Err(Error::Formula {
                    position: pos,
                    message: "unterminated string".into(),
                });
            }
            out.push((pos, Tok::Str(chars[start..i].iter().map(|p| p.1).collect())));
            i += 1;
        } else if "~+()|,=".contains(c) {
            out.push((pos, Tok::Sym(c)));
            i += 1;
        } else {
            return Err(Error::Formula {
                position: pos,
                message: format!("unexpected character `{c}`"),
            });
        }
    }
    Ok(out)
}

struct Parser {
    toks: Vec<(usize, Tok)>,
    at: usize,
    end: usize,
}

impl Parser {
    fn pos(&self) -> usize {
        self.toks.get(self.at).map_or(self.end, |t| t.0)
    }

    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.at).map(|t| &t.1)
    }

    fn err<T>(&self, message: impl Into<String>) -> Result<T> {
        Err(Error::Formula {
            position: self.pos(),
            message: message.into(),
        })
    }

    fn sym(&mut self, c: char) -> Result<()> {
        match self.peek() {
            Some(Tok::Sym(s)) if *s == c => {
                self.at += 1;
                Ok(())
            }
            Some(t) => {
                let t = format!("{t:?}");
                self.err(format!("expected `{c}`, found {t}"))
            }
            None => self.err(format!("expected `{c}`, found end of input")),
        }
    }

    fn ident(&mut self) -> Result<String> {
        match self.peek() {
            Some(Tok::Ident(s)) => {
                let s = s.clone();
                self.at += 1;
                Ok(s)
            }
            _ => self.err("expected a variable name"),
        }
    }

    fn is_sym(&self, c: char) -> bool {
        matches!(self.peek(), Some(Tok::Sym(s)) if *s == c)
    }
}

enum Term {
    Fixed(String),
    Smooth(SmoothTerm),
    Random(String),
    Intercept,
}

fn parse_term(p: &mut Parser) -> Result<Term> {
    if p.is_sym('(') {
        // (1|g)
        p.sym('(')?;
        match p.peek() {
            Some(Tok::Number(n)) if n == "1" => p.at += 1,
            _ => return p.err("only random intercepts `(1|group)` are supported"),
        }
        p.sym('|')?;
        let g = p.ident()?;
        p.sym(')')?;
        return Ok(Term::Random(g));
    }
    if let Some(Tok::Number(n)) = p.peek() {
        if n == "1" {
            p.at += 1;
            return Ok(Term::Intercept);
        }
        return p.err(format!("unexpected number `{n}`"));
    }
    let start = p.pos();
    let name = p.ident()?;
    if !p.is_sym('(') {
        return Ok(Term::Fixed(name));
    }
    match name.as_str() {
        "te" | "ti" | "t2" => Err(Error::Unsupported(format!(
            "tensor smooth `{name}(...)` at position {start}; use univariate s() terms"
        ))),
        "s" => {
            p.sym('(')?;
            let variable = p.ident()?;
            let mut k = None;
            let mut random = false;
            while p.is_sym(',') {
                p.sym(',')?;
                let arg_pos = p.pos();
                let key = match p.peek() {
                    Some(Tok::Ident(s)) if matches!(p.toks.get(p.at + 1), Some((_, Tok::Sym('=')))) => s.clone(),
                    Some(Tok::Ident(_)) => {
                        return Err(Error::Unsupported(format!(
                            "multivariate smooth at position {arg_pos}; use univariate s() terms"
                        )))
                    }
                    _ => return p.err("expected `name=value`"),
                };
                p.at += 1;
                p.sym('=')?;
                match key.as_str() {
                    "bs" => {
                        let v = match p.peek() {
                            Some(Tok::Str(s)) | Some(Tok::Ident(s)) => s.clone(),
                            _ => return p.err("expected a basis name"),
                        };
                        match v.as_str() {
                            "re" => random = true,
                            "ps" | "cr" | "tp" | "bs" => {}
                            other => {
                                return Err(Error::Formula {
                                    position: arg_pos,
                                    message: format!("unknown basis `{other}`"),
                                })
                            }
                        }
                        p.at += 1;
                    }
                    "k" => {
                        let v = match p.peek() {
                            Some(Tok::Number(s)) => s.parse::<usize>().ok(),
                            _ => None,
                        };
                        match v {
                            Some(v) => k = Some(v),
                            None => return p.err("k must be a positive integer"),
                        }
                        p.at += 1;
                    }
                    other => {
                        return Err(Error::Formula {
                            position: arg_pos,
                            message: format!("unknown smooth argument `{other}`"),
                        })
                    }
                }
            }
            p.sym(')')?;
            if random {
                Ok(Term::Random(variable))
            } else {
                Ok(Term::Smooth(SmoothTerm { variable, k }))
            }
        }
        other => Err(Error::Formula {
            position: start,
            message: format!("unknown function `{other}`"),
        }),
    }
}

/// Parses a model formula. An optional `name = lmer(...)`, `bam(...)`,
/// `gam(...)` or `gamm(...)` wrapper is stripped first.
pub fn parse_formula(text: &str) -> Result<ModelFormula> {
    let mut toks = tokenize(text)?;
    if toks.len() >= 2 && matches!(toks[0].1, Tok::Ident(_)) && toks[1].1 == Tok::Sym('=') {
        toks.drain(..2);
    }
    if let (Some((_, Tok::Ident(f))), Some((_, Tok::Sym('(')))) = (toks.first(), toks.get(1)) {
        if ["lmer", "bam", "gam", "gamm", "lm"].contains(&f.as_str()) {
            if toks.last().map(|t| &t.1) != Some(&Tok::Sym(')')) {
                return Err(Error::Formula {
                    position: text.len(),
                    message: format!("unclosed `{f}(`"),
                });
            }
            toks.drain(..2);
            toks.pop();
        }
    }
    let mut p = Parser {
        toks,
        at: 0,
        end: text.len(),
    };
    let response = p.ident()?;
    p.sym('~')?;
    let mut f = ModelFormula {
        response,
        fixed: vec![],
        smooth: vec![],
        random: vec![],
    };
    loop {
        let pos = p.pos();
        let term = parse_term(&mut p)?;
        let name = match &term {
            Term::Fixed(n) | Term::Random(n) => Some(n.clone()),
            Term::Smooth(s) => Some(s.variable.clone()),
            Term::Intercept => None,
        };
        if let Some(n) = &name {
            if *n == f.response {
                return Err(Error::Formula {
                    position: pos,
                    message: format!("response `{n}` used as a predictor"),
                });
            }
            if f.predictors().any(|q| q == n) {
                return Err(Error::Formula {
                    position: pos,
                    message: format!("duplicate term `{n}`"),
                });
            }
        }
        match term {
            Term::Fixed(n) => f.fixed.push(n),
            Term::Smooth(s) => f.smooth.push(s),
            Term::Random(g) => f.random.push(g),
            Term::Intercept => {}
        }
        if p.is_sym('+') {
            p.sym('+')?;
            continue;
        }
        if p.peek().is_some() {
            return p.err("expected `+` or end of formula");
        }
        break;
    }
    Ok(f)
}
