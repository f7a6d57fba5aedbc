//! Plain-text problem files. The format is line oriented:
//!
//! ```text
//! # exponent and amplitude of the integrand
//! dim 1
//! box -1 1
//! h poly
//! -0.5 2
//! end
//! sigma builtin one
//! g poly
//! 1.0 0
//! end
//! p 1.25
//! s 1
//! k 0
//! ```
//!
//! `h`, `sigma` and `g` take either `poly` (followed by one `coefficient
//! exponents...` line per term and a closing `end`) or `builtin <name>`.
//! `sigma` may be omitted when `s` is zero, as may `p` (it also accepts
//! `inf`). Blank lines and `#` comments are ignored; every error carries the
//! offending line number.

use crate::critpoint::ProblemSpec;
use crate::error::{Error, Result};
use crate::fields::{parse_term_line, Builtin, ScalarField};

fn parse_err(line: usize, msg: impl Into<String>) -> Error {
    Error::Parse { line, msg: msg.into() }
}

fn parse_f64(line: usize, token: &str, what: &str) -> Result<f64> {
    token
        .parse::<f64>()
        .map_err(|_| parse_err(line, format!("cannot parse {what} value {token:?}")))
}

/// Parses a problem description; see the module docs for the format.
pub fn parse_problem(text: &str) -> Result<ProblemSpec> {
    let lines: Vec<&str> = text.lines().collect();
    let mut dim: Option<usize> = None;
    let mut bounds: Option<Vec<(f64, f64)>> = None;
    let mut fields: [Option<ScalarField>; 3] = [None, None, None]; // h, sigma, g
    let mut p: Option<f64> = None;
    let mut s: Option<f64> = None;
    let mut k: Option<u32> = None;

    let mut idx = 0usize;
    while idx < lines.len() {
        let lineno = idx + 1;
        let line = lines[idx].trim();
        idx += 1;
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut tokens = line.split_whitespace();
        let key = tokens.next().expect("nonblank line has a first token");
        let rest: Vec<&str> = tokens.collect();
        match key {
            "dim" => {
                if dim.is_some() {
                    return Err(parse_err(lineno, "duplicate key dim"));
                }
                if rest.len() != 1 {
                    return Err(parse_err(lineno, "dim takes exactly one value"));
                }
                let d: usize = rest[0]
                    .parse()
                    .map_err(|_| parse_err(lineno, format!("bad dimension {:?}", rest[0])))?;
                dim = Some(d);
            }
            "box" => {
                if bounds.is_some() {
                    return Err(parse_err(lineno, "duplicate key box"));
                }
                let d = dim.ok_or_else(|| parse_err(lineno, "dim must come before box"))?;
                if rest.len() != 2 * d {
                    return Err(parse_err(
                        lineno,
                        format!("box needs {} numbers for dim {d}, got {}", 2 * d, rest.len()),
                    ));
                }
                let mut bs = Vec::with_capacity(d);
                for pair in rest.chunks(2) {
                    let a = parse_f64(lineno, pair[0], "box bound")?;
                    let b = parse_f64(lineno, pair[1], "box bound")?;
                    bs.push((a, b));
                }
                bounds = Some(bs);
            }
            "h" | "sigma" | "g" => {
                let slot = match key {
                    "h" => 0,
                    "sigma" => 1,
                    _ => 2,
                };
                if fields[slot].is_some() {
                    return Err(parse_err(lineno, format!("duplicate key {key}")));
                }
                let d = dim.ok_or_else(|| parse_err(lineno, format!("dim must come before {key}")))?;
                match rest.first().copied() {
                    Some("poly") => {
                        let mut terms = Vec::new();
                        let mut closed = false;
                        while idx < lines.len() {
                            let term_no = idx + 1;
                            let term_line = lines[idx].trim();
                            idx += 1;
                            if term_line.is_empty() || term_line.starts_with('#') {
                                continue;
                            }
                            if term_line == "end" {
                                closed = true;
                                break;
                            }
                            let term = parse_term_line(d, term_line)
                                .map_err(|e| parse_err(term_no, e.to_string()))?;
                            terms.push(term);
                        }
                        if !closed {
                            return Err(parse_err(lineno, format!("poly block for {key} has no end")));
                        }
                        let field = ScalarField::polynomial(d, terms)
                            .map_err(|e| parse_err(lineno, e.to_string()))?;
                        fields[slot] = Some(field);
                    }
                    Some("builtin") => {
                        if rest.len() != 2 {
                            return Err(parse_err(lineno, "builtin takes exactly one name"));
                        }
                        let which = Builtin::from_name(rest[1]).ok_or_else(|| {
                            parse_err(lineno, format!("unknown builtin {:?}", rest[1]))
                        })?;
                        fields[slot] = Some(
                            ScalarField::builtin(d, which)
                                .map_err(|e| parse_err(lineno, e.to_string()))?,
                        );
                    }
                    _ => {
                        return Err(parse_err(
                            lineno,
                            format!("{key} must be followed by `poly` or `builtin <name>`"),
                        ))
                    }
                }
            }
            "p" => {
                if p.is_some() {
                    return Err(parse_err(lineno, "duplicate key p"));
                }
                if rest.len() != 1 {
                    return Err(parse_err(lineno, "p takes exactly one value"));
                }
                p = Some(match rest[0] {
                    "inf" | "infinity" => f64::INFINITY,
                    tok => parse_f64(lineno, tok, "p")?,
                });
            }
            "s" => {
                if s.is_some() {
                    return Err(parse_err(lineno, "duplicate key s"));
                }
                if rest.len() != 1 {
                    return Err(parse_err(lineno, "s takes exactly one value"));
                }
                s = Some(parse_f64(lineno, rest[0], "s")?);
            }
            "k" => {
                if k.is_some() {
                    return Err(parse_err(lineno, "duplicate key k"));
                }
                if rest.len() != 1 {
                    return Err(parse_err(lineno, "k takes exactly one value"));
                }
                k = Some(
                    rest[0]
                        .parse()
                        .map_err(|_| parse_err(lineno, format!("bad k {:?}", rest[0])))?,
                );
            }
            other => return Err(parse_err(lineno, format!("unknown key {other:?}"))),
        }
    }

    let total = lines.len();
    let dim = dim.ok_or_else(|| parse_err(total, "missing key dim"))?;
    let bounds = bounds.ok_or_else(|| parse_err(total, "missing key box"))?;
    let [h, sigma, g] = fields;
    let h = h.ok_or_else(|| parse_err(total, "missing key h"))?;
    let g = g.ok_or_else(|| parse_err(total, "missing key g"))?;
    let s = s.ok_or_else(|| parse_err(total, "missing key s"))?;
    let k = k.ok_or_else(|| parse_err(total, "missing key k"))?;
    let sigma = match sigma {
        Some(f) => f,
        None if s == 0.0 => ScalarField::builtin(dim, Builtin::Zero)
            .map_err(|e| parse_err(total, e.to_string()))?,
        None => return Err(parse_err(total, "sigma is required when s > 0")),
    };
    let p = match p {
        Some(v) => v,
        None if s == 0.0 => f64::INFINITY,
        None => return Err(parse_err(total, "p is required when s > 0")),
    };
    ProblemSpec::new(bounds, h, sigma, g, p, s, k)
}
