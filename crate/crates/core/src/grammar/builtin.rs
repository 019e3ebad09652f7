//! The four built-in grammars.
//!
//! All four generate sums of model terms over the token alphabet consumed by
//! `model::parse_model`. A term is a product of factors; a factor is one of
//! the sources `1`, `u`, `y`, `xi` followed by lag marks `q` (one per unit
//! delay) and exponent marks `^` (exponent = 1 + number of marks).
//!
//! * `narx` — polynomial input/output terms only.
//! * `narmax` — adds noise factors `xi` and the any-factor lag tree.
//! * `trig` — adds sin/cos-wrapped terms (arguments stay noise-free).
//! * `full` — adds abs-wrapped terms.
//!
//! Auxiliary tree roles: `b1`/`b2` multiply the factor chain by a fresh
//! input/output factor, `b3` raises an exponent, `b4` appends an additive
//! unit term, `b5` adds one lag step to an input/output variable, `b6`
//! multiplies a bare term by a noise factor, `b7` adds one lag step to any
//! factor (noise included), and `b8` appends an additive wrapped term whose
//! wrapper is chosen by substitution (`wsin`/`wcos`/`wabs`); `b8`'s root
//! carries a null-adjunction constraint. Wrapped-term arguments deliberately
//! contain no `Mono` node, so `b6` can never move noise inside a wrapper.

use super::Grammar;
use crate::error::GrammarError;

pub const BUILTIN_GRAMMAR_NAMES: [&str; 4] = ["narx", "narmax", "trig", "full"];

const NARX: &str = r#"
grammar narx
start Expr
nonterminals Expr Term Mono Fac Var
terminals 1 u y q ^ * +

initial a1 (Expr (Term (Mono (Fac 1))))

aux b1 (Fac (Fac @foot) * (Fac (Var u)))
aux b2 (Fac (Fac @foot) * (Fac (Var y q)))
aux b3 (Fac (Fac @foot) ^)
aux b4 (Expr (Expr @foot) + (Term (Mono (Fac 1))))
aux b5 (Var (Var @foot) q)
"#;

const NARMAX: &str = r#"
grammar narmax
start Expr
nonterminals Expr Term Mono Fac Var
terminals 1 u y xi q ^ * +

initial a1 (Expr (Term (Mono (Fac 1))))

aux b1 (Fac (Fac @foot) * (Fac (Var u)))
aux b2 (Fac (Fac @foot) * (Fac (Var y q)))
aux b3 (Fac (Fac @foot) ^)
aux b4 (Expr (Expr @foot) + (Term (Mono (Fac 1))))
aux b5 (Var (Var @foot) q)
aux b6 (Mono (Mono @foot) * (Fac xi q))
aux b7 (Fac (Fac @foot) q)
"#;

const TRIG: &str = r#"
grammar trig
start Expr
nonterminals Expr Term Mono Fac Var Wrap
terminals 1 u y xi q ^ * + sin cos "(" ")"

initial a1 (Expr (Term (Mono (Fac 1))))
initial a2 (Expr (Term (Wrap sin "(" (Fac 1) ")")))
initial a3 (Expr (Term (Wrap cos "(" (Fac 1) ")")))
initial wsin (Wrap sin "(" (Fac 1) ")")
initial wcos (Wrap cos "(" (Fac 1) ")")

aux b1 (Fac (Fac @foot) * (Fac (Var u)))
aux b2 (Fac (Fac @foot) * (Fac (Var y q)))
aux b3 (Fac (Fac @foot) ^)
aux b4 (Expr (Expr @foot) + (Term (Mono (Fac 1))))
aux b5 (Var (Var @foot) q)
aux b6 (Mono (Mono @foot) * (Fac xi q))
aux b7 (Fac (Fac @foot) q)
aux b8 (Expr @na (Expr @foot) + (Term Wrap))
"#;

const FULL: &str = r#"
grammar full
start Expr
nonterminals Expr Term Mono Fac Var Wrap
terminals 1 u y xi q ^ * + sin cos abs "(" ")"

initial a1 (Expr (Term (Mono (Fac 1))))
initial a2 (Expr (Term (Wrap sin "(" (Fac 1) ")")))
initial a3 (Expr (Term (Wrap cos "(" (Fac 1) ")")))
initial a4 (Expr (Term (Wrap abs "(" (Fac 1) ")")))
initial wsin (Wrap sin "(" (Fac 1) ")")
initial wcos (Wrap cos "(" (Fac 1) ")")
initial wabs (Wrap abs "(" (Fac 1) ")")

aux b1 (Fac (Fac @foot) * (Fac (Var u)))
aux b2 (Fac (Fac @foot) * (Fac (Var y q)))
aux b3 (Fac (Fac @foot) ^)
aux b4 (Expr (Expr @foot) + (Term (Mono (Fac 1))))
aux b5 (Var (Var @foot) q)
aux b6 (Mono (Mono @foot) * (Fac xi q))
aux b7 (Fac (Fac @foot) q)
aux b8 (Expr @na (Expr @foot) + (Term Wrap))
"#;

/// Returns one of the built-in grammars by name.
pub fn builtin_grammar(name: &str) -> Result<Grammar, GrammarError> {
    let text = match name {
        "narx" => NARX,
        "narmax" => NARMAX,
        "trig" => TRIG,
        "full" => FULL,
        other => return Err(GrammarError::UnknownGrammar(other.to_string())),
    };
    super::parse_grammar_text(text)
}
