//! Human-readable equation format for fitted models.
//!
//! ```text
//! y[k] = 0.7*y[k-1] - 0.1*y[k-2] + 0.5*u[k-1] + 0.2*u[k-1]*y[k-1] + xi[k]
//! ```
//!
//! Coefficients print with Rust's shortest round-trip float formatting, so
//! parsing an exported line recovers the exact fitted values. The trailing
//! `+ xi[k]` names the innovation and carries no coefficient.

use super::{Factor, FittedModel, ModelStructure, Source, Term, Wrapper};
use crate::error::ModelError;

fn factor_text(f: &Factor) -> String {
    let name = match f.source {
        Source::Input => "u",
        Source::Output => "y",
        Source::Noise => "xi",
    };
    let idx = if f.lag == 0 {
        "[k]".to_string()
    } else {
        format!("[k-{}]", f.lag)
    };
    if f.exponent == 1 {
        format!("{name}{idx}")
    } else {
        format!("{name}{idx}^{}", f.exponent)
    }
}

fn term_text(t: &Term) -> Option<String> {
    if t.factors.is_empty() && t.wrapper == Wrapper::None {
        return None; // constant regressor: the coefficient stands alone
    }
    let product: Vec<String> = t.factors.iter().map(factor_text).collect();
    let inner = if product.is_empty() {
        "1".to_string()
    } else {
        product.join("*")
    };
    Some(match t.wrapper.name() {
        Some(w) => format!("{w}({inner})"),
        None => inner,
    })
}

/// Renders a fitted model as a single-line equation.
pub fn format_model(fm: &FittedModel) -> String {
    let mut out = String::from("y[k] =");
    for (i, (c, t)) in fm.coefficients.iter().zip(&fm.structure.terms).enumerate() {
        match (i, *c < 0.0) {
            (0, false) => out.push(' '),
            (0, true) => out.push_str(" -"),
            (_, false) => out.push_str(" + "),
            (_, true) => out.push_str(" - "),
        }
        let magnitude = c.abs();
        match term_text(t) {
            Some(body) => out.push_str(&format!("{magnitude}*{body}")),
            None => out.push_str(&format!("{magnitude}")),
        }
    }
    out.push_str(" + xi[k]");
    out
}

struct EqScanner<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> EqScanner<'a> {
    fn err(&self, message: impl Into<String>) -> ModelError {
        ModelError::Equation {
            offset: self.pos,
            message: message.into(),
        }
    }

    fn skip_ws(&mut self) {
        while self.pos < self.bytes.len() && self.bytes[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&self) -> Option<u8> {
        self.bytes.get(self.pos).copied()
    }

    fn eat(&mut self, lit: &str) -> bool {
        if self.bytes[self.pos..].starts_with(lit.as_bytes()) {
            self.pos += lit.len();
            true
        } else {
            false
        }
    }

    fn expect(&mut self, lit: &str) -> Result<(), ModelError> {
        if self.eat(lit) {
            Ok(())
        } else {
            Err(self.err(format!("expected {lit:?}")))
        }
    }

    fn number(&mut self) -> Result<f64, ModelError> {
        let start = self.pos;
        let mut prev_exp = false;
        while let Some(c) = self.peek() {
            let c = c as char;
            let take = c.is_ascii_digit()
                || c == '.'
                || c == 'e'
                || c == 'E'
                || ((c == '+' || c == '-') && prev_exp);
            if !take {
                break;
            }
            prev_exp = c == 'e' || c == 'E';
            self.pos += 1;
        }
        let text = std::str::from_utf8(&self.bytes[start..self.pos]).unwrap();
        text.parse::<f64>()
            .map_err(|_| self.err(format!("bad number {text:?}")))
    }

    fn integer(&mut self) -> Result<usize, ModelError> {
        let start = self.pos;
        while self.peek().is_some_and(|c| c.is_ascii_digit()) {
            self.pos += 1;
        }
        let text = std::str::from_utf8(&self.bytes[start..self.pos]).unwrap();
        text.parse::<usize>()
            .map_err(|_| self.err("expected an integer"))
    }

    /// `u[k-3]^2`, `y[k-1]`, `xi[k-2]` ...
    fn factor(&mut self) -> Result<(Source, usize, u32), ModelError> {
        let source = if self.eat("xi") {
            Source::Noise
        } else if self.eat("u") {
            Source::Input
        } else if self.eat("y") {
            Source::Output
        } else {
            return Err(self.err("expected a signal name (u, y or xi)"));
        };
        self.expect("[k")?;
        let lag = if self.eat("-") { self.integer()? } else { 0 };
        self.expect("]")?;
        let exponent = if self.eat("^") { self.integer()? as u32 } else { 1 };
        if exponent == 0 {
            return Err(self.err("exponent must be positive"));
        }
        Ok((source, lag, exponent))
    }
}

/// Parses a `models.txt`-style equation back into a fitted model. The
/// innovation marker `xi[k]` is accepted and ignored; the noise variance is
/// not recorded in the text form and is returned as zero.
pub fn parse_equation(text: &str) -> Result<FittedModel, ModelError> {
    let mut s = EqScanner {
        bytes: text.trim().as_bytes(),
        pos: 0,
    };
    s.skip_ws();
    s.expect("y[k]")?;
    s.skip_ws();
    s.expect("=")?;

    let mut terms = Vec::new();
    let mut coefficients = Vec::new();
    let mut first = true;
    loop {
        s.skip_ws();
        if s.peek().is_none() {
            break;
        }
        let negative = if s.eat("-") {
            true
        } else if s.eat("+") {
            false
        } else if first {
            false
        } else {
            return Err(s.err("expected + or - between terms"));
        };
        first = false;
        s.skip_ws();
        // the innovation marker has no coefficient
        if s.eat("xi[k]") {
            let trailing = s.bytes.len() != s.pos;
            if negative || trailing {
                return Err(s.err("the innovation enters as a trailing + xi[k]"));
            }
            break;
        }
        let magnitude = s.number()?;
        let coefficient = if negative { -magnitude } else { magnitude };
        let mut wrapper = Wrapper::None;
        let mut raw: Vec<(Source, usize, u32)> = Vec::new();
        if s.eat("*") {
            if s.eat("sin(") {
                wrapper = Wrapper::Sin;
            } else if s.eat("cos(") {
                wrapper = Wrapper::Cos;
            } else if s.eat("abs(") {
                wrapper = Wrapper::Abs;
            }
            loop {
                raw.push(s.factor()?);
                if !s.eat("*") {
                    break;
                }
            }
            if wrapper != Wrapper::None {
                s.expect(")")?;
            }
        }
        let at = s.pos;
        terms.push(Term::assemble(wrapper, raw, at).map_err(|e| match e {
            ModelError::Parse { message, .. } => ModelError::Equation {
                offset: at,
                message,
            },
            other => other,
        })?);
        coefficients.push(coefficient);
    }
    if terms.is_empty() {
        return Err(s.err("equation has no terms"));
    }
    Ok(FittedModel::new(
        ModelStructure::new(terms),
        coefficients,
        0.0,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn model() -> FittedModel {
        FittedModel::new(
            ModelStructure::new(vec![
                Term::monomial(&[(Source::Output, 1, 1)]),
                Term::monomial(&[(Source::Input, 1, 1), (Source::Output, 2, 3)]),
                Term::wrapped(Wrapper::Sin, &[(Source::Output, 1, 1)]),
                Term::constant(),
                Term::monomial(&[(Source::Noise, 2, 1)]),
            ]),
            vec![0.7, -0.25, -0.1, 1.5e-4, 0.3333333333333333],
            0.0,
        )
    }

    #[test]
    fn formats_in_equation_style() {
        let text = format_model(&model());
        assert_eq!(
            text,
            "y[k] = 0.7*y[k-1] - 0.25*u[k-1]*y[k-2]^3 - 0.1*sin(y[k-1]) \
             + 0.00015 + 0.3333333333333333*xi[k-2] + xi[k]"
        );
    }

    #[test]
    fn round_trips_exactly() {
        let fm = model();
        let text = format_model(&fm);
        let back = parse_equation(&text).unwrap();
        assert_eq!(back.structure, fm.structure);
        assert_eq!(back.coefficients, fm.coefficients);
        assert_eq!(format_model(&back), text);
    }

    #[test]
    fn leading_negative_and_lag_zero() {
        let fm = FittedModel::new(
            ModelStructure::new(vec![Term::monomial(&[(Source::Input, 0, 1)])]),
            vec![-2.5],
            0.0,
        );
        let text = format_model(&fm);
        assert_eq!(text, "y[k] = -2.5*u[k] + xi[k]");
        let back = parse_equation(&text).unwrap();
        assert_eq!(back.coefficients, vec![-2.5]);
    }

    #[test]
    fn rejects_malformed_equations() {
        assert!(parse_equation("0.5*y[k-1]").is_err());
        assert!(parse_equation("y[k] = 0.5*z[k-1]").is_err());
        assert!(parse_equation("y[k] = 0.5*y[k-1] 0.3*u[k]").is_err());
        assert!(parse_equation("y[k] = 0.5*sin(xi[k-1])").is_err());
        assert!(parse_equation("y[k] = ").is_err());
    }
}
