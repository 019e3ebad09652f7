//! Text format for grammar definitions.
//!
//! ```text
//! # comment
//! grammar my-grammar
//! start Expr
//! nonterminals Expr Term
//! terminals a b "(" ")"
//! initial a1 (Expr (Term a))
//! aux b1 (Expr @na (Expr @foot) b)
//! ```
//!
//! Trees are nested s-expressions: `(Label children...)`. A bare atom is a
//! leaf — a terminal when the name is declared terminal, otherwise an open
//! substitution site (`(Label)` is the same site written with parens).
//! `(Label @foot)` marks the auxiliary tree's foot node and `@na` directly
//! after a label marks a null-adjunction constraint. Names containing
//! whitespace, parentheses or `#` must be double-quoted. The `nonterminals`
//! and `terminals` directives may be repeated; tree definitions may span
//! lines until their parentheses balance.

use crate::error::GrammarError;

use super::{Grammar, GrammarTree, Symbol, SymbolKind, TreeKind, TreeNode};

#[derive(Debug, Clone, PartialEq)]
enum SExpr {
    Atom(String),
    List(Vec<SExpr>),
}

struct Scanner<'a> {
    chars: std::iter::Peekable<std::str::Chars<'a>>,
    line: usize,
}

impl<'a> Scanner<'a> {
    fn new(text: &'a str, line: usize) -> Self {
        Self {
            chars: text.chars().peekable(),
            line,
        }
    }

    fn error(&self, message: impl Into<String>) -> GrammarError {
        GrammarError::TextParse {
            line: self.line,
            message: message.into(),
        }
    }

    fn skip_ws(&mut self) {
        while let Some(&c) = self.chars.peek() {
            if c == '\n' {
                self.line += 1;
                self.chars.next();
            } else if c.is_whitespace() {
                self.chars.next();
            } else if c == '#' {
                for c in self.chars.by_ref() {
                    if c == '\n' {
                        self.line += 1;
                        break;
                    }
                }
            } else {
                break;
            }
        }
    }

    fn atom(&mut self) -> Result<String, GrammarError> {
        if self.chars.peek() == Some(&'"') {
            self.chars.next();
            let mut s = String::new();
            loop {
                match self.chars.next() {
                    Some('"') => return Ok(s),
                    Some(c) => s.push(c),
                    None => return Err(self.error("unterminated quoted name")),
                }
            }
        }
        let mut s = String::new();
        while let Some(&c) = self.chars.peek() {
            if c.is_whitespace() || c == '(' || c == ')' || c == '#' || c == '"' {
                break;
            }
            s.push(c);
            self.chars.next();
        }
        if s.is_empty() {
            Err(self.error("expected a name"))
        } else {
            Ok(s)
        }
    }

    fn sexpr(&mut self) -> Result<SExpr, GrammarError> {
        self.skip_ws();
        match self.chars.peek() {
            Some('(') => {
                self.chars.next();
                let mut items = Vec::new();
                loop {
                    self.skip_ws();
                    match self.chars.peek() {
                        Some(')') => {
                            self.chars.next();
                            return Ok(SExpr::List(items));
                        }
                        Some(_) => items.push(self.sexpr()?),
                        None => return Err(self.error("unbalanced parenthesis")),
                    }
                }
            }
            Some(_) => Ok(SExpr::Atom(self.atom()?)),
            None => Err(self.error("expected a tree")),
        }
    }
}

struct Builder<'a> {
    decls: &'a [(String, SymbolKind)],
    nodes: Vec<TreeNode>,
    line: usize,
}

impl Builder<'_> {
    fn error(&self, message: impl Into<String>) -> GrammarError {
        GrammarError::TextParse {
            line: self.line,
            message: message.into(),
        }
    }

    fn lookup(&self, name: &str) -> Result<(u32, SymbolKind), GrammarError> {
        self.decls
            .iter()
            .position(|(n, _)| n == name)
            .map(|i| (i as u32, self.decls[i].1))
            .ok_or_else(|| self.error(format!("undeclared symbol {name:?}")))
    }

    fn build(&mut self, e: &SExpr) -> Result<usize, GrammarError> {
        match e {
            SExpr::Atom(name) => {
                let (id, _) = self.lookup(name)?;
                self.nodes.push(TreeNode {
                    label: super::SymbolId(id),
                    children: Vec::new(),
                    no_adjoin: false,
                    foot: false,
                });
                Ok(self.nodes.len() - 1)
            }
            SExpr::List(items) => {
                let mut it = items.iter();
                let label = match it.next() {
                    Some(SExpr::Atom(name)) => name,
                    _ => return Err(self.error("a tree node must start with its label")),
                };
                let (id, _) = self.lookup(label)?;
                let here = self.nodes.len();
                self.nodes.push(TreeNode {
                    label: super::SymbolId(id),
                    children: Vec::new(),
                    no_adjoin: false,
                    foot: false,
                });
                let mut children = Vec::new();
                for item in it {
                    match item {
                        SExpr::Atom(a) if a == "@foot" => {
                            self.nodes[here].foot = true;
                        }
                        SExpr::Atom(a) if a == "@na" => {
                            self.nodes[here].no_adjoin = true;
                        }
                        SExpr::Atom(a) if a.starts_with('@') => {
                            return Err(self.error(format!("unknown annotation {a:?}")));
                        }
                        other => children.push(self.build(other)?),
                    }
                }
                if self.nodes[here].foot && !children.is_empty() {
                    return Err(self.error("a foot node cannot have children"));
                }
                self.nodes[here].children = children;
                Ok(here)
            }
        }
    }
}

/// Parses a grammar definition from text.
pub fn parse_grammar_text(text: &str) -> Result<Grammar, GrammarError> {
    let mut name = String::from("user");
    let mut start: Option<String> = None;
    let mut decls: Vec<(String, SymbolKind)> = Vec::new();
    let mut initial_trees: Vec<GrammarTree> = Vec::new();
    let mut auxiliary_trees: Vec<GrammarTree> = Vec::new();

    let lines: Vec<&str> = text.lines().collect();
    let mut i = 0usize;
    while i < lines.len() {
        let line_no = i + 1;
        let line = lines[i];
        i += 1;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let mut scan = Scanner::new(trimmed, line_no);
        scan.skip_ws();
        let directive = scan.atom()?;
        let err = |message: String| GrammarError::TextParse {
            line: line_no,
            message,
        };
        match directive.as_str() {
            "grammar" => {
                scan.skip_ws();
                name = scan.atom()?;
            }
            "start" => {
                scan.skip_ws();
                start = Some(scan.atom()?);
            }
            "nonterminals" | "terminals" => {
                let kind = if directive == "nonterminals" {
                    SymbolKind::NonTerminal
                } else {
                    SymbolKind::Terminal
                };
                loop {
                    scan.skip_ws();
                    if scan.chars.peek().is_none() {
                        break;
                    }
                    decls.push((scan.atom()?, kind));
                }
            }
            "initial" | "aux" => {
                scan.skip_ws();
                let tree_name = scan.atom()?;
                // gather lines until the parentheses balance
                let mut body: String = scan.chars.clone().collect();
                while paren_balance(&body) > 0 && i < lines.len() {
                    body.push('\n');
                    body.push_str(lines[i]);
                    i += 1;
                }
                if paren_balance(&body) != 0 {
                    return Err(err(format!("unbalanced tree definition {tree_name:?}")));
                }
                let mut scan = Scanner::new(&body, line_no);
                let expr = scan.sexpr()?;
                scan.skip_ws();
                if scan.chars.peek().is_some() {
                    return Err(err(format!("trailing input after tree {tree_name:?}")));
                }
                let mut b = Builder {
                    decls: &decls,
                    nodes: Vec::new(),
                    line: line_no,
                };
                b.build(&expr)?;
                let kind = if directive == "initial" {
                    TreeKind::Initial
                } else {
                    TreeKind::Auxiliary
                };
                let tree = GrammarTree::new(tree_name, kind, b.nodes)?;
                match kind {
                    TreeKind::Initial => initial_trees.push(tree),
                    TreeKind::Auxiliary => auxiliary_trees.push(tree),
                }
            }
            other => {
                return Err(err(format!(
                    "unknown directive {other:?} (expected grammar, start, nonterminals, terminals, initial or aux)"
                )));
            }
        }
    }

    let start = start.ok_or_else(|| GrammarError::InvalidGrammar("missing start symbol".into()))?;
    let symbols: Vec<Symbol> = decls
        .iter()
        .map(|(n, k)| Symbol {
            name: n.clone(),
            kind: *k,
        })
        .collect();
    Grammar::new(name, symbols, &start, initial_trees, auxiliary_trees)
}

/// Open-parenthesis surplus, ignoring quoted names and comments.
fn paren_balance(s: &str) -> i64 {
    let mut depth = 0i64;
    let mut quoted = false;
    let mut commented = false;
    for c in s.chars() {
        match c {
            '\n' => commented = false,
            _ if commented => {}
            '"' => quoted = !quoted,
            _ if quoted => {}
            '#' => commented = true,
            '(' => depth += 1,
            ')' => depth -= 1,
            _ => {}
        }
    }
    depth
}
