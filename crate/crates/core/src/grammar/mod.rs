//! Tree adjoining grammar kernel.
//!
//! A grammar is a set of labelled elementary trees (initial and auxiliary)
//! over disjoint non-terminal and terminal symbol sets. Derived trees are
//! built from an initial tree by two operations:
//!
//! * **substitution** replaces a non-terminal leaf with a copy of an
//!   initial tree whose root carries the same label;
//! * **adjunction** detaches the subtree at a node, plants a copy of an
//!   auxiliary tree there, and re-attaches the detached subtree beneath the
//!   auxiliary tree's foot node.
//!
//! Nodes may carry a null-adjunction constraint which forbids adjunction at
//! that node. Adjunction is permitted at any non-foot node with a matching
//! non-terminal label, including open substitution sites. All operations
//! have value semantics: the input tree is never mutated.

mod builtin;
mod text;

pub use builtin::{builtin_grammar, BUILTIN_GRAMMAR_NAMES};
pub use text::parse_grammar_text;

use std::collections::HashMap;
use std::fmt;

use crate::error::GrammarError;

/// Index of a symbol within its [`Grammar`]'s symbol table.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SymbolId(pub u32);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SymbolKind {
    NonTerminal,
    Terminal,
}

/// A named grammar symbol. Names are unique across both kind sets.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Symbol {
    pub name: String,
    pub kind: SymbolKind,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TreeKind {
    Initial,
    Auxiliary,
}

/// Which elementary tree a derived-tree node was copied from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TreeRef {
    Initial(usize),
    Auxiliary(usize),
}

/// A node of an elementary or derived tree.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TreeNode {
    pub label: SymbolId,
    pub children: Vec<usize>,
    /// Null-adjunction constraint.
    pub no_adjoin: bool,
    pub foot: bool,
}

/// An elementary tree. Nodes are stored in an arena with the root at
/// index 0; auxiliary trees designate exactly one foot node whose label
/// equals the root label.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GrammarTree {
    pub name: String,
    pub kind: TreeKind,
    nodes: Vec<TreeNode>,
    foot: Option<usize>,
    /// Child-index path of every node, precomputed for site enumeration.
    paths: Vec<Vec<usize>>,
}

impl GrammarTree {
    pub fn new(
        name: impl Into<String>,
        kind: TreeKind,
        nodes: Vec<TreeNode>,
    ) -> Result<Self, GrammarError> {
        let name = name.into();
        if nodes.is_empty() {
            return Err(GrammarError::InvalidGrammar(format!(
                "tree {name} has no nodes"
            )));
        }
        let feet: Vec<usize> = (0..nodes.len()).filter(|&i| nodes[i].foot).collect();
        let foot = match (kind, feet.as_slice()) {
            (TreeKind::Initial, []) => None,
            (TreeKind::Initial, _) => {
                return Err(GrammarError::InvalidGrammar(format!(
                    "initial tree {name} declares a foot node"
                )))
            }
            (TreeKind::Auxiliary, [f]) => Some(*f),
            (TreeKind::Auxiliary, _) => {
                return Err(GrammarError::InvalidGrammar(format!(
                    "auxiliary tree {name} must have exactly one foot node"
                )))
            }
        };
        if let Some(f) = foot {
            if nodes[f].label != nodes[0].label {
                return Err(GrammarError::InvalidGrammar(format!(
                    "auxiliary tree {name}: foot label must equal root label"
                )));
            }
            if !nodes[f].children.is_empty() {
                return Err(GrammarError::InvalidGrammar(format!(
                    "auxiliary tree {name}: foot node must be a leaf"
                )));
            }
        }
        let mut paths = vec![Vec::new(); nodes.len()];
        let mut stack = vec![0usize];
        while let Some(at) = stack.pop() {
            for (i, &c) in nodes[at].children.iter().enumerate() {
                if c < nodes.len() {
                    let mut p = paths[at].clone();
                    p.push(i);
                    paths[c] = p;
                    stack.push(c);
                }
            }
        }
        Ok(Self {
            name,
            kind,
            nodes,
            foot,
            paths,
        })
    }

    pub fn root_label(&self) -> SymbolId {
        self.nodes[0].label
    }

    pub fn nodes(&self) -> &[TreeNode] {
        &self.nodes
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn foot(&self) -> Option<usize> {
        self.foot
    }

    /// Resolves a child-index path from the root to a node index.
    pub fn resolve_path(&self, path: &[usize]) -> Result<usize, GrammarError> {
        let mut at = 0usize;
        for &step in path {
            at = *self.nodes[at]
                .children
                .get(step)
                .ok_or_else(|| GrammarError::BadAddress {
                    path: path.to_vec(),
                })?;
        }
        Ok(at)
    }

    /// Child-index path of a node from the root.
    pub fn node_path(&self, node: usize) -> &[usize] {
        &self.paths[node]
    }
}

/// A tree adjoining grammar: symbol table, start symbol, and the two
/// elementary tree sets.
#[derive(Debug, Clone)]
pub struct Grammar {
    pub name: String,
    symbols: Vec<Symbol>,
    by_name: HashMap<String, SymbolId>,
    start: SymbolId,
    pub initial_trees: Vec<GrammarTree>,
    pub auxiliary_trees: Vec<GrammarTree>,
    aux_by_root: HashMap<SymbolId, Vec<usize>>,
    initial_by_root: HashMap<SymbolId, Vec<usize>>,
}

impl Grammar {
    pub fn new(
        name: impl Into<String>,
        symbols: Vec<Symbol>,
        start: &str,
        initial_trees: Vec<GrammarTree>,
        auxiliary_trees: Vec<GrammarTree>,
    ) -> Result<Self, GrammarError> {
        let mut by_name = HashMap::new();
        for (i, s) in symbols.iter().enumerate() {
            if by_name.insert(s.name.clone(), SymbolId(i as u32)).is_some() {
                return Err(GrammarError::InvalidGrammar(format!(
                    "symbol {:?} declared twice",
                    s.name
                )));
            }
        }
        let start = *by_name
            .get(start)
            .ok_or_else(|| GrammarError::InvalidGrammar(format!("undeclared start symbol {start:?}")))?;
        let mut aux_by_root: HashMap<SymbolId, Vec<usize>> = HashMap::new();
        for (i, t) in auxiliary_trees.iter().enumerate() {
            aux_by_root.entry(t.root_label()).or_default().push(i);
        }
        let mut initial_by_root: HashMap<SymbolId, Vec<usize>> = HashMap::new();
        for (i, t) in initial_trees.iter().enumerate() {
            initial_by_root.entry(t.root_label()).or_default().push(i);
        }
        let g = Self {
            name: name.into(),
            symbols,
            by_name,
            start,
            initial_trees,
            auxiliary_trees,
            aux_by_root,
            initial_by_root,
        };
        g.validate()?;
        Ok(g)
    }

    fn validate(&self) -> Result<(), GrammarError> {
        if self.symbol(self.start).kind != SymbolKind::NonTerminal {
            return Err(GrammarError::InvalidGrammar(
                "start symbol must be a non-terminal".into(),
            ));
        }
        let mut names = HashMap::new();
        for t in self.initial_trees.iter().chain(&self.auxiliary_trees) {
            if names.insert(t.name.clone(), ()).is_some() {
                return Err(GrammarError::InvalidGrammar(format!(
                    "tree {:?} declared twice",
                    t.name
                )));
            }
            for (i, n) in t.nodes.iter().enumerate() {
                let sym = self
                    .symbols
                    .get(n.label.0 as usize)
                    .ok_or_else(|| GrammarError::InvalidGrammar(format!(
                        "tree {}: node {} uses an unknown symbol id",
                        t.name, i
                    )))?;
                match sym.kind {
                    SymbolKind::Terminal => {
                        if !n.children.is_empty() {
                            return Err(GrammarError::InvalidGrammar(format!(
                                "tree {}: terminal {:?} must be a leaf",
                                t.name, sym.name
                            )));
                        }
                        if n.foot {
                            return Err(GrammarError::InvalidGrammar(format!(
                                "tree {}: a terminal cannot be a foot node",
                                t.name
                            )));
                        }
                    }
                    SymbolKind::NonTerminal => {}
                }
                for &c in &n.children {
                    if c >= t.nodes.len() {
                        return Err(GrammarError::InvalidGrammar(format!(
                            "tree {}: child index out of range",
                            t.name
                        )));
                    }
                }
            }
        }
        if !self
            .initial_trees
            .iter()
            .any(|t| t.root_label() == self.start)
        {
            return Err(GrammarError::InvalidGrammar(
                "no initial tree is rooted at the start symbol".into(),
            ));
        }
        Ok(())
    }

    pub fn start(&self) -> SymbolId {
        self.start
    }

    pub fn symbol(&self, id: SymbolId) -> &Symbol {
        &self.symbols[id.0 as usize]
    }

    pub fn symbols(&self) -> &[Symbol] {
        &self.symbols
    }

    pub fn symbol_id(&self, name: &str) -> Option<SymbolId> {
        self.by_name.get(name).copied()
    }

    pub fn is_terminal(&self, id: SymbolId) -> bool {
        self.symbol(id).kind == SymbolKind::Terminal
    }

    /// Names of all terminal symbols (the grammar's token alphabet).
    pub fn terminal_names(&self) -> Vec<&str> {
        self.symbols
            .iter()
            .filter(|s| s.kind == SymbolKind::Terminal)
            .map(|s| s.name.as_str())
            .collect()
    }

    pub fn tree(&self, r: TreeRef) -> &GrammarTree {
        match r {
            TreeRef::Initial(i) => &self.initial_trees[i],
            TreeRef::Auxiliary(i) => &self.auxiliary_trees[i],
        }
    }

    /// Indices of initial trees rooted at the start symbol (valid derivation
    /// bases).
    pub fn start_initials(&self) -> Vec<usize> {
        (0..self.initial_trees.len())
            .filter(|&i| self.initial_trees[i].root_label() == self.start)
            .collect()
    }

    /// Indices of auxiliary trees whose root carries `label`.
    pub fn auxiliaries_rooted(&self, label: SymbolId) -> &[usize] {
        self.aux_by_root.get(&label).map_or(&[], Vec::as_slice)
    }

    /// Indices of initial trees whose root carries `label`.
    pub fn initials_rooted(&self, label: SymbolId) -> &[usize] {
        self.initial_by_root.get(&label).map_or(&[], Vec::as_slice)
    }
}

/// A node of a [`DerivedTree`], carrying provenance back to the elementary
/// tree it was copied from.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DerivedNode {
    pub label: SymbolId,
    pub children: Vec<usize>,
    pub no_adjoin: bool,
    pub foot: bool,
    pub origin: TreeRef,
}

/// A tree built from an initial tree by substitution and adjunction.
///
/// Nodes live in an arena; operations with value semantics return a fresh
/// tree and leave the receiver untouched. Detached nodes may linger in the
/// arena of trees built through the in-place API; every traversal starts
/// from `root`, so they are unreachable.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DerivedTree {
    nodes: Vec<DerivedNode>,
    parent: Vec<usize>,
    root: usize,
    adjunction_count: usize,
}

const NO_PARENT: usize = usize::MAX;

impl DerivedTree {
    /// Instantiates a copy of an initial tree.
    pub fn from_initial(grammar: &Grammar, index: usize) -> Self {
        let mut t = Self {
            nodes: Vec::new(),
            parent: Vec::new(),
            root: 0,
            adjunction_count: 0,
        };
        let ids = t.plant(grammar, TreeRef::Initial(index));
        t.root = ids[0];
        t
    }

    /// Copies every node of an elementary tree into the arena. Returns the
    /// arena ids indexed by the elementary tree's node indices.
    fn plant(&mut self, grammar: &Grammar, r: TreeRef) -> Vec<usize> {
        let tree = grammar.tree(r);
        let offset = self.nodes.len();
        for n in tree.nodes() {
            self.nodes.push(DerivedNode {
                label: n.label,
                children: n.children.iter().map(|&c| c + offset).collect(),
                no_adjoin: n.no_adjoin,
                foot: n.foot,
                origin: r,
            });
            self.parent.push(NO_PARENT);
        }
        for i in 0..tree.len() {
            for &c in &tree.nodes()[i].children {
                self.parent[c + offset] = i + offset;
            }
        }
        (offset..self.nodes.len()).collect()
    }

    pub fn root(&self) -> usize {
        self.root
    }

    pub fn node(&self, id: usize) -> &DerivedNode {
        &self.nodes[id]
    }

    pub fn adjunction_count(&self) -> usize {
        self.adjunction_count
    }

    /// Number of reachable nodes.
    pub fn node_count(&self) -> usize {
        let mut n = 0;
        self.walk(|_, _| n += 1);
        n
    }

    /// Pre-order traversal of reachable nodes: `f(id, depth)`.
    pub fn walk(&self, mut f: impl FnMut(usize, usize)) {
        let mut stack = vec![(self.root, 0usize)];
        while let Some((id, d)) = stack.pop() {
            f(id, d);
            for &c in self.nodes[id].children.iter().rev() {
                stack.push((c, d + 1));
            }
        }
    }

    /// Resolves a child-index path from the root.
    pub fn resolve_path(&self, path: &[usize]) -> Result<usize, GrammarError> {
        let mut at = self.root;
        for &step in path {
            at = *self.nodes[at]
                .children
                .get(step)
                .ok_or_else(|| GrammarError::BadAddress {
                    path: path.to_vec(),
                })?;
        }
        Ok(at)
    }

    /// Child-index path from the root to `id`.
    pub fn path_of(&self, id: usize) -> Vec<usize> {
        let mut rev = Vec::new();
        let mut at = id;
        while self.parent[at] != NO_PARENT {
            let p = self.parent[at];
            let pos = self.nodes[p].children.iter().position(|&c| c == at).unwrap();
            rev.push(pos);
            at = p;
        }
        rev.reverse();
        rev
    }

    /// Substitution with value semantics: replaces the non-terminal leaf at
    /// `path` with a copy of `grammar.initial_trees[initial]`.
    pub fn substitute(
        &self,
        grammar: &Grammar,
        path: &[usize],
        initial: usize,
    ) -> Result<DerivedTree, GrammarError> {
        let mut out = self.clone();
        let id = out.resolve_path(path)?;
        out.substitute_at(grammar, id, initial)?;
        Ok(out)
    }

    /// Adjunction with value semantics: plants a copy of
    /// `grammar.auxiliary_trees[aux]` at `path` and re-attaches the detached
    /// subtree beneath the copy's foot node.
    pub fn adjoin(
        &self,
        grammar: &Grammar,
        path: &[usize],
        aux: usize,
    ) -> Result<DerivedTree, GrammarError> {
        let mut out = self.clone();
        let id = out.resolve_path(path)?;
        out.adjoin_at(grammar, id, aux)?;
        Ok(out)
    }

    /// In-place substitution by node id. Returns the arena ids of the
    /// planted copy, indexed by the initial tree's node indices.
    pub(crate) fn substitute_at(
        &mut self,
        grammar: &Grammar,
        id: usize,
        initial: usize,
    ) -> Result<Vec<usize>, GrammarError> {
        let path = self.path_of(id);
        let node = &self.nodes[id];
        if !node.children.is_empty() || grammar.is_terminal(node.label) || node.foot {
            return Err(GrammarError::NotASubstitutionSite { path });
        }
        let tree = &grammar.initial_trees[initial];
        if tree.root_label() != node.label {
            return Err(GrammarError::LabelMismatch {
                path,
                expected: grammar.symbol(node.label).name.clone(),
                found: grammar.symbol(tree.root_label()).name.clone(),
            });
        }
        let ids = self.plant(grammar, TreeRef::Initial(initial));
        self.replace_child(id, ids[0]);
        Ok(ids)
    }

    /// In-place adjunction by node id. Returns the arena ids of the planted
    /// copy, indexed by the auxiliary tree's node indices.
    pub(crate) fn adjoin_at(
        &mut self,
        grammar: &Grammar,
        id: usize,
        aux: usize,
    ) -> Result<Vec<usize>, GrammarError> {
        let path = self.path_of(id);
        let node = &self.nodes[id];
        if node.foot {
            return Err(GrammarError::AdjunctionAtFoot { path });
        }
        if node.no_adjoin {
            return Err(GrammarError::NullAdjunctionViolation { path });
        }
        let tree = &grammar.auxiliary_trees[aux];
        if tree.root_label() != node.label {
            return Err(GrammarError::LabelMismatch {
                path,
                expected: grammar.symbol(node.label).name.clone(),
                found: grammar.symbol(tree.root_label()).name.clone(),
            });
        }
        let foot = tree.foot().expect("auxiliary tree has a foot");
        let ids = self.plant(grammar, TreeRef::Auxiliary(aux));
        self.replace_child(id, ids[0]);
        self.nodes[ids[foot]].children.push(id);
        self.parent[id] = ids[foot];
        self.adjunction_count += 1;
        Ok(ids)
    }

    /// Rewires the edge above `old` to point at `new`.
    fn replace_child(&mut self, old: usize, new: usize) {
        let p = self.parent[old];
        if p == NO_PARENT {
            self.root = new;
        } else {
            let pos = self.nodes[p].children.iter().position(|&c| c == old).unwrap();
            self.nodes[p].children[pos] = new;
        }
        self.parent[new] = p;
        self.parent[old] = NO_PARENT;
    }

    /// True when every reachable leaf is a terminal.
    pub fn is_complete(&self, grammar: &Grammar) -> bool {
        let mut complete = true;
        self.walk(|id, _| {
            let n = &self.nodes[id];
            if n.children.is_empty() && !grammar.is_terminal(n.label) {
                complete = false;
            }
        });
        complete
    }

    /// Left-to-right sequence of terminal labels.
    pub fn yield_symbols(&self, grammar: &Grammar) -> Result<Vec<SymbolId>, GrammarError> {
        let mut out = Vec::new();
        let mut err = None;
        self.walk(|id, _| {
            let n = &self.nodes[id];
            if n.children.is_empty() {
                if grammar.is_terminal(n.label) {
                    out.push(n.label);
                } else if err.is_none() {
                    err = Some(GrammarError::IncompleteTree {
                        label: grammar.symbol(n.label).name.clone(),
                    });
                }
            }
        });
        match err {
            Some(e) => Err(e),
            None => Ok(out),
        }
    }

    /// The yield as terminal names.
    pub fn yield_tokens(&self, grammar: &Grammar) -> Result<Vec<String>, GrammarError> {
        Ok(self
            .yield_symbols(grammar)?
            .iter()
            .map(|&s| grammar.symbol(s).name.clone())
            .collect())
    }

    /// Structural invariant check, used by tests and fuzzing: parent links
    /// consistent, labels known, foot nodes have exactly one child, and (if
    /// `complete`) all leaves terminal and the root carries the start symbol.
    pub fn verify(&self, grammar: &Grammar, complete: bool) -> Result<(), String> {
        if self.parent[self.root] != NO_PARENT {
            return Err("root has a parent".into());
        }
        let mut seen = vec![false; self.nodes.len()];
        let mut problems = Vec::new();
        self.walk(|id, _| {
            if seen[id] {
                problems.push(format!("node {id} reached twice"));
            }
            seen[id] = true;
            let n = &self.nodes[id];
            if (n.label.0 as usize) >= grammar.symbols().len() {
                problems.push(format!("node {id} has an unknown label"));
                return;
            }
            if n.foot && n.children.len() != 1 {
                problems.push(format!(
                    "foot node {id} has {} children, expected 1",
                    n.children.len()
                ));
            }
            if n.foot {
                let child = n.children.first().copied();
                if let Some(c) = child {
                    if self.nodes[c].label != n.label {
                        problems.push(format!("foot node {id}: child label differs"));
                    }
                }
            }
            if grammar.is_terminal(n.label) && !n.children.is_empty() {
                problems.push(format!("terminal node {id} has children"));
            }
            for &c in &n.children {
                if self.parent[c] != id {
                    problems.push(format!("parent link broken at {c}"));
                }
            }
            if complete && n.children.is_empty() && !grammar.is_terminal(n.label) {
                problems.push(format!(
                    "non-terminal leaf {id} ({})",
                    grammar.symbol(n.label).name
                ));
            }
        });
        if complete && self.nodes[self.root].label != grammar.start() {
            problems.push("root label is not the start symbol".into());
        }
        if problems.is_empty() {
            Ok(())
        } else {
            Err(problems.join("; "))
        }
    }
}

impl fmt::Display for TreeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TreeKind::Initial => write!(f, "initial"),
            TreeKind::Auxiliary => write!(f, "auxiliary"),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Two-symbol toy grammar: X -> a, with an auxiliary X -> (X* b).
    fn toy() -> Grammar {
        parse_grammar_text(
            "grammar toy\nstart X\nnonterminals X Y\nterminals a b c\n\
             initial ix (X a)\n\
             initial iy (Y c)\n\
             initial ixy (X (Y) a)\n\
             aux bx (X (X @foot) b)\n",
        )
        .unwrap()
    }

    #[test]
    fn substitution_replaces_leaf_and_counts_nodes() {
        let g = toy();
        // ixy: X with children [Y-leaf, a]; Y is a substitution site.
        let base = DerivedTree::from_initial(&g, 2);
        assert_eq!(base.node_count(), 3);
        let out = base.substitute(&g, &[0], 1).unwrap();
        // 3 - 1 + |iy| = 3 - 1 + 2 = 4
        assert_eq!(out.node_count(), 4);
        assert!(out.is_complete(&g));
        assert_eq!(out.yield_tokens(&g).unwrap(), vec!["c", "a"]);
        // the original is untouched
        assert_eq!(base.node_count(), 3);
    }

    #[test]
    fn substitution_at_terminal_leaf_is_rejected() {
        let g = toy();
        let base = DerivedTree::from_initial(&g, 0); // (X a)
        let err = base.substitute(&g, &[0], 0).unwrap_err();
        assert!(matches!(err, GrammarError::NotASubstitutionSite { .. }));
    }

    #[test]
    fn substitution_label_mismatch() {
        let g = toy();
        let base = DerivedTree::from_initial(&g, 2);
        let err = base.substitute(&g, &[0], 0).unwrap_err(); // ix is rooted X, site is Y
        assert!(matches!(err, GrammarError::LabelMismatch { .. }));
    }

    #[test]
    fn adjunction_inserts_and_reattaches() {
        let g = toy();
        let base = DerivedTree::from_initial(&g, 0); // (X a), 2 nodes
        let out = base.adjoin(&g, &[], 0).unwrap();
        // size = original + |aux| = 2 + 3
        assert_eq!(out.node_count(), 5);
        assert_eq!(out.yield_tokens(&g).unwrap(), vec!["a", "b"]);
        assert_eq!(out.adjunction_count(), 1);
        // chain a second adjunction at the new root
        let out2 = out.adjoin(&g, &[], 0).unwrap();
        assert_eq!(out2.yield_tokens(&g).unwrap(), vec!["a", "b", "b"]);
        assert_eq!(out2.adjunction_count(), 2);
        out2.verify(&g, true).unwrap();
    }

    #[test]
    fn adjunction_at_foot_is_rejected() {
        let g = toy();
        let out = DerivedTree::from_initial(&g, 0).adjoin(&g, &[], 0).unwrap();
        // the foot of bx is its first child
        let err = out.adjoin(&g, &[0], 0).unwrap_err();
        assert!(matches!(err, GrammarError::AdjunctionAtFoot { .. }));
        // but the re-attached original X below the foot is a valid site
        let deeper = out.adjoin(&g, &[0, 0], 0).unwrap();
        assert_eq!(deeper.yield_tokens(&g).unwrap(), vec!["a", "b", "b"]);
    }

    #[test]
    fn yield_requires_complete_tree() {
        let g = toy();
        let base = DerivedTree::from_initial(&g, 2);
        let err = base.yield_tokens(&g).unwrap_err();
        assert!(matches!(err, GrammarError::IncompleteTree { .. }));
    }

    #[test]
    fn grammar_rejects_duplicate_symbols_and_bad_feet() {
        let err = parse_grammar_text("start X\nnonterminals X X\nterminals a\ninitial i (X a)\n")
            .unwrap_err();
        assert!(matches!(err, GrammarError::InvalidGrammar(_)));
        let err = parse_grammar_text(
            "start X\nnonterminals X Y\nterminals a\ninitial i (X a)\naux b (X (Y @foot) a)\n",
        )
        .unwrap_err();
        assert!(matches!(err, GrammarError::InvalidGrammar(_)));
    }
}
