//! Model structures decoded from derived-tree yields, and their evaluation
//! in one-step-ahead prediction and free-run simulation modes.

mod equation;

pub use equation::{format_model, parse_equation};

use crate::data::Dataset;
use crate::error::ModelError;

/// Which measured (or estimated) sequence a factor draws from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Source {
    Input,
    Output,
    Noise,
}

/// One lagged, exponentiated signal inside a term.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Factor {
    pub source: Source,
    pub lag: usize,
    pub exponent: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Wrapper {
    None,
    Sin,
    Cos,
    Abs,
}

impl Wrapper {
    fn apply(self, x: f64) -> f64 {
        match self {
            Wrapper::None => x,
            Wrapper::Sin => x.sin(),
            Wrapper::Cos => x.cos(),
            Wrapper::Abs => x.abs(),
        }
    }

    pub fn name(self) -> Option<&'static str> {
        match self {
            Wrapper::None => None,
            Wrapper::Sin => Some("sin"),
            Wrapper::Cos => Some("cos"),
            Wrapper::Abs => Some("abs"),
        }
    }
}

/// One model term: an optionally wrapped product of factors. An empty factor
/// list is the constant regressor 1.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Term {
    pub wrapper: Wrapper,
    pub factors: Vec<Factor>,
}

impl Term {
    /// Builds a term from raw factors: drops constant sources, merges equal
    /// (source, lag) pairs by summing exponents, and checks the lag and
    /// wrapper rules. `at` is a token position for error reporting.
    fn assemble(
        wrapper: Wrapper,
        raw: Vec<(Source, usize, u32)>,
        at: usize,
    ) -> Result<Term, ModelError> {
        let mut factors: Vec<Factor> = Vec::new();
        for (source, lag, exponent) in raw {
            match source {
                Source::Output | Source::Noise if lag == 0 => {
                    return Err(ModelError::Parse {
                        position: at,
                        message: "output and noise factors require lag >= 1".into(),
                    });
                }
                Source::Noise if wrapper != Wrapper::None => {
                    return Err(ModelError::Parse {
                        position: at,
                        message: "wrapped terms cannot contain noise factors".into(),
                    });
                }
                _ => {}
            }
            match factors
                .iter_mut()
                .find(|f| f.source == source && f.lag == lag)
            {
                Some(f) => f.exponent += exponent,
                None => factors.push(Factor {
                    source,
                    lag,
                    exponent,
                }),
            }
        }
        Ok(Term { wrapper, factors })
    }

    /// Convenience constructor for tests and the shipped synthetic systems.
    pub fn monomial(factors: &[(Source, usize, u32)]) -> Term {
        Term::assemble(
            Wrapper::None,
            factors.iter().map(|&(s, l, e)| (s, l, e)).collect(),
            0,
        )
        .expect("valid monomial")
    }

    pub fn wrapped(wrapper: Wrapper, factors: &[(Source, usize, u32)]) -> Term {
        Term::assemble(
            wrapper,
            factors.iter().map(|&(s, l, e)| (s, l, e)).collect(),
            0,
        )
        .expect("valid wrapped term")
    }

    pub fn constant() -> Term {
        Term {
            wrapper: Wrapper::None,
            factors: Vec::new(),
        }
    }

    fn max_lag(&self) -> usize {
        self.factors.iter().map(|f| f.lag).max().unwrap_or(0)
    }

    /// Evaluates the term at time `k` against raw sequences. The caller
    /// guarantees `k >= max_lag`.
    fn value(&self, u: &[f64], y: &[f64], noise: &[f64], k: usize) -> f64 {
        let mut prod = 1.0;
        for f in &self.factors {
            let v = match f.source {
                Source::Input => u[k - f.lag],
                Source::Output => y[k - f.lag],
                Source::Noise => noise[k - f.lag],
            };
            prod *= v.powi(f.exponent as i32);
        }
        self.wrapper.apply(prod)
    }
}

/// An ordered list of terms; the model's complexity is the term count,
/// which equals its coefficient count.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ModelStructure {
    pub terms: Vec<Term>,
}

impl ModelStructure {
    pub fn new(terms: Vec<Term>) -> Self {
        assert!(!terms.is_empty(), "a model needs at least one term");
        Self { terms }
    }

    pub fn complexity(&self) -> usize {
        self.terms.len()
    }

    pub fn max_lag(&self) -> usize {
        self.terms.iter().map(Term::max_lag).max().unwrap_or(0)
    }

    pub fn has_noise(&self) -> bool {
        self.terms
            .iter()
            .any(|t| t.factors.iter().any(|f| f.source == Source::Noise))
    }

    /// The noise-free sub-structure and the indices of the kept terms.
    pub fn without_noise_terms(&self) -> (Vec<Term>, Vec<usize>) {
        let mut terms = Vec::new();
        let mut kept = Vec::new();
        for (i, t) in self.terms.iter().enumerate() {
            if !t.factors.iter().any(|f| f.source == Source::Noise) {
                terms.push(t.clone());
                kept.push(i);
            }
        }
        (terms, kept)
    }
}

/// A model structure with estimated coefficients.
#[derive(Debug, Clone, PartialEq)]
pub struct FittedModel {
    pub structure: ModelStructure,
    pub coefficients: Vec<f64>,
    pub noise_variance: f64,
}

impl FittedModel {
    pub fn new(structure: ModelStructure, coefficients: Vec<f64>, noise_variance: f64) -> Self {
        assert_eq!(structure.complexity(), coefficients.len());
        Self {
            structure,
            coefficients,
            noise_variance,
        }
    }
}

/// Decodes a token sequence (a derived tree's yield) into a model structure.
///
/// Token language: terms separated by `+`; a term is either `wrapper ( factors )`
/// with wrapper in sin/cos/abs, or a bare factor product; factors are
/// separated by `*`; a factor is a source token (`1`, `u`, `y`, `xi`)
/// followed by lag marks `q` and exponent marks `^` in any order. Constant
/// sources absorb their marks; equal (source, lag) factors merge by summing
/// exponents; duplicate terms are kept.
pub fn parse_model<S: AsRef<str>>(tokens: &[S]) -> Result<ModelStructure, ModelError> {
    let toks: Vec<&str> = tokens.iter().map(|s| s.as_ref()).collect();
    let err = |position: usize, message: &str| ModelError::Parse {
        position,
        message: message.into(),
    };
    let mut pos = 0usize;
    let mut terms = Vec::new();
    if toks.is_empty() {
        return Err(err(0, "empty token sequence"));
    }
    loop {
        let term_start = pos;
        let wrapper = match toks.get(pos).copied() {
            Some("sin") => Some(Wrapper::Sin),
            Some("cos") => Some(Wrapper::Cos),
            Some("abs") => Some(Wrapper::Abs),
            _ => None,
        };
        let wrapper = match wrapper {
            Some(w) => {
                pos += 1;
                if toks.get(pos).copied() != Some("(") {
                    return Err(err(pos, "expected ( after wrapper"));
                }
                pos += 1;
                w
            }
            None => Wrapper::None,
        };
        // factor list
        let mut raw: Vec<(Source, usize, u32)> = Vec::new();
        loop {
            let source = match toks.get(pos).copied() {
                Some("1") => Source::Input, // placeholder; constants are dropped below
                Some("u") => Source::Input,
                Some("y") => Source::Output,
                Some("xi") => Source::Noise,
                Some(t) => return Err(err(pos, &format!("expected a factor, found {t:?}"))),
                None => return Err(err(pos, "expected a factor")),
            };
            let is_constant = toks[pos] == "1";
            pos += 1;
            let mut lag = 0usize;
            let mut exponent = 1u32;
            loop {
                match toks.get(pos).copied() {
                    Some("q") => {
                        lag += 1;
                        pos += 1;
                    }
                    Some("^") => {
                        exponent += 1;
                        pos += 1;
                    }
                    _ => break,
                }
            }
            if !is_constant {
                raw.push((source, lag, exponent));
            }
            match toks.get(pos).copied() {
                Some("*") => {
                    pos += 1;
                }
                _ => break,
            }
        }
        if wrapper != Wrapper::None {
            if toks.get(pos).copied() != Some(")") {
                return Err(err(pos, "expected ) after wrapped argument"));
            }
            pos += 1;
        }
        terms.push(Term::assemble(wrapper, raw, term_start)?);
        match toks.get(pos).copied() {
            None => break,
            Some("+") => {
                pos += 1;
            }
            Some(t) => return Err(err(pos, &format!("expected + between terms, found {t:?}"))),
        }
    }
    Ok(ModelStructure::new(terms))
}

/// One row of the regression matrix: every term evaluated at time `k`,
/// with `residuals` standing in for the noise sequence.
pub fn regressor_row(
    m: &ModelStructure,
    data: &Dataset,
    residuals: &[f64],
    k: usize,
) -> Result<Vec<f64>, ModelError> {
    if m.max_lag() > k {
        return Err(ModelError::LagOutOfRange {
            lag: m.max_lag(),
            index: k,
        });
    }
    Ok(m.terms
        .iter()
        .map(|t| t.value(&data.u, &data.y, residuals, k))
        .collect())
}

/// One-step-ahead prediction output.
#[derive(Debug, Clone)]
pub struct Prediction {
    /// Predicted output; samples before `valid_from` are copied from the data.
    pub y_hat: Vec<f64>,
    /// One-step-ahead residuals, zero before `valid_from`.
    pub residuals: Vec<f64>,
    /// First sample index with all lags in range (the model's maximum lag).
    pub valid_from: usize,
}

/// One-step-ahead prediction: the model is conditioned on measured past
/// outputs, noise factors are evaluated on recursively computed residuals,
/// and the time-`k` innovation enters at its expectation (zero).
pub fn predict_one_step(fm: &FittedModel, data: &Dataset) -> Result<Prediction, ModelError> {
    let lag = fm.structure.max_lag();
    let n = data.len();
    if lag >= n {
        return Err(ModelError::LagOutOfRange { lag, index: n });
    }
    let mut y_hat = data.y.clone();
    let mut residuals = vec![0.0; n];
    for k in lag..n {
        let mut acc = 0.0;
        for (c, t) in fm.coefficients.iter().zip(&fm.structure.terms) {
            acc += c * t.value(&data.u, &data.y, &residuals, k);
        }
        y_hat[k] = acc;
        residuals[k] = data.y[k] - acc;
    }
    Ok(Prediction {
        y_hat,
        residuals,
        valid_from: lag,
    })
}

/// Free-run simulation: model outputs feed back into output factors and the
/// noise process is fixed at its mean (zero). Initial conditions are the
/// first max-lag measured outputs.
pub fn simulate(fm: &FittedModel, data: &Dataset) -> Result<Vec<f64>, ModelError> {
    let lag = fm.structure.max_lag();
    let n = data.len();
    if lag >= n {
        return Err(ModelError::LagOutOfRange { lag, index: n });
    }
    let limit = 1e6 * data.y.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    let zeros = vec![0.0; n];
    let mut ys = vec![0.0; n];
    ys[..lag].copy_from_slice(&data.y[..lag]);
    for k in lag..n {
        let mut acc = 0.0;
        for (c, t) in fm.coefficients.iter().zip(&fm.structure.terms) {
            acc += c * t.value(&data.u, &ys, &zeros, k);
        }
        if !acc.is_finite() || acc.abs() > limit {
            return Err(ModelError::Divergence { at: k });
        }
        ys[k] = acc;
    }
    Ok(ys)
}
