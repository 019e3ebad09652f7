//! Derivation-tree genotypes.
//!
//! A genotype records how a derived tree was assembled: a base initial tree
//! plus a tree of operations, each attaching an elementary tree at a site
//! (a node address) inside its parent's elementary-tree copy. Each site of
//! each copy hosts at most one adjunction and one substitution, so every
//! operation subtree is self-contained and can be deleted, regrown or
//! exchanged between individuals without re-addressing.

use rand::Rng;

use crate::error::GrammarError;
use crate::grammar::{DerivedTree, Grammar, GrammarTree, TreeRef};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OpKind {
    Substitute,
    Adjoin,
}

/// One recorded operation: `tree` attaches at `site` (a node path within
/// the parent instance's elementary tree); `children` are the operations
/// that attach inside this copy.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DerivOp {
    pub kind: OpKind,
    pub tree: usize,
    pub site: Vec<usize>,
    pub children: Vec<DerivOp>,
}

impl DerivOp {
    pub fn tree_ref(&self) -> TreeRef {
        match self.kind {
            OpKind::Substitute => TreeRef::Initial(self.tree),
            OpKind::Adjoin => TreeRef::Auxiliary(self.tree),
        }
    }

    pub fn count_adjoins(&self) -> usize {
        let own = usize::from(self.kind == OpKind::Adjoin);
        own + self.children.iter().map(DerivOp::count_adjoins).sum::<usize>()
    }
}

/// A replayable derivation: base initial tree plus operation tree.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DerivationTree {
    pub base: usize,
    pub ops: Vec<DerivOp>,
}

/// One step of the flat replay view: the operation kind, the grammar tree
/// index, and the target address in the derived tree at application time.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ReplayStep {
    pub kind: OpKind,
    pub tree: usize,
    pub address: Vec<usize>,
}

/// A place where an auxiliary tree may adjoin right now.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AdjoinChoice {
    /// Path (child indices through the operation tree) to the host
    /// operation; empty means the base instance.
    pub host: Vec<usize>,
    /// Node path within the host's elementary tree.
    pub site: Vec<usize>,
    /// Auxiliary tree to adjoin.
    pub aux: usize,
}

impl DerivationTree {
    pub fn new(base: usize) -> Self {
        Self {
            base,
            ops: Vec::new(),
        }
    }

    pub fn adjunction_count(&self) -> usize {
        self.ops.iter().map(DerivOp::count_adjoins).sum()
    }

    pub fn op_at(&self, path: &[usize]) -> &DerivOp {
        let mut ops = &self.ops;
        let mut op = &ops[path[0]];
        for &step in &path[1..] {
            ops = &op.children;
            op = &ops[step];
        }
        op
    }

    /// Children list of the host instance (the base's top-level operations
    /// for an empty path).
    pub fn ops_mut(&mut self, host: &[usize]) -> &mut Vec<DerivOp> {
        let mut ops = &mut self.ops;
        for &step in host {
            ops = &mut ops[step].children;
        }
        ops
    }

    pub fn remove_op(&mut self, path: &[usize]) -> DerivOp {
        let (last, host) = path.split_last().expect("non-empty op path");
        self.ops_mut(host).remove(*last)
    }

    /// Replays the derivation into a derived tree.
    pub fn decode(&self, grammar: &Grammar) -> Result<DerivedTree, GrammarError> {
        self.decode_inner(grammar, &mut None)
    }

    /// Replays the derivation, also returning the flat operation list with
    /// derived-tree addresses as they were at each application.
    pub fn decode_with_script(
        &self,
        grammar: &Grammar,
    ) -> Result<(DerivedTree, Vec<ReplayStep>), GrammarError> {
        let mut script = Some(Vec::new());
        let t = self.decode_inner(grammar, &mut script)?;
        Ok((t, script.unwrap()))
    }

    fn decode_inner(
        &self,
        grammar: &Grammar,
        script: &mut Option<Vec<ReplayStep>>,
    ) -> Result<DerivedTree, GrammarError> {
        let mut t = DerivedTree::from_initial(grammar, self.base);
        let ids: Vec<usize> = (0..grammar.initial_trees[self.base].len()).collect();
        apply_ops(
            &mut t,
            grammar,
            TreeRef::Initial(self.base),
            ids,
            &self.ops,
            script,
        )?;
        Ok(t)
    }

    /// All operation-tree paths of adjunction operations, in depth-first
    /// order.
    pub fn adjoin_paths(&self) -> Vec<Vec<usize>> {
        fn walk(ops: &[DerivOp], prefix: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
            for (i, op) in ops.iter().enumerate() {
                prefix.push(i);
                if op.kind == OpKind::Adjoin {
                    out.push(prefix.clone());
                }
                walk(&op.children, prefix, out);
                prefix.pop();
            }
        }
        let mut out = Vec::new();
        walk(&self.ops, &mut Vec::new(), &mut out);
        out
    }

    /// Every currently valid (auxiliary tree, site) pair across the whole
    /// derivation.
    pub fn adjoin_choices(&self, grammar: &Grammar) -> Vec<AdjoinChoice> {
        let mut out = Vec::new();
        collect_adjoin_sites(
            grammar,
            TreeRef::Initial(self.base),
            &self.ops,
            &mut Vec::new(),
            &mut out,
        );
        out
    }

    /// Valid adjunction sites within the operation subtree rooted at `root`
    /// (including the subtree's own copy).
    fn adjoin_choices_within(&self, grammar: &Grammar, root: &[usize]) -> Vec<AdjoinChoice> {
        let op = self.op_at(root);
        let mut out = Vec::new();
        let mut prefix = root.to_vec();
        collect_adjoin_sites(grammar, op.tree_ref(), &op.children, &mut prefix, &mut out);
        out
    }

    /// Inserts an adjunction and fills any substitution sites the new copy
    /// opened. Returns the path of the new operation.
    pub fn attach_adjoin(
        &mut self,
        grammar: &Grammar,
        choice: &AdjoinChoice,
        rng: &mut impl Rng,
    ) -> Result<Vec<usize>, GrammarError> {
        let ops = self.ops_mut(&choice.host);
        ops.push(DerivOp {
            kind: OpKind::Adjoin,
            tree: choice.aux,
            site: choice.site.clone(),
            children: Vec::new(),
        });
        let mut path = choice.host.clone();
        path.push(ops.len() - 1);
        self.fill_substitution_sites(grammar, rng)?;
        Ok(path)
    }

    /// Fills every open substitution site with a uniformly chosen initial
    /// tree of matching root label, repeating until the derivation is
    /// complete. Deep fill chains fall back to trees without further sites.
    pub fn fill_substitution_sites(
        &mut self,
        grammar: &Grammar,
        rng: &mut impl Rng,
    ) -> Result<(), GrammarError> {
        let mut filled = 0usize;
        loop {
            let mut open = Vec::new();
            collect_open_subst_sites(
                grammar,
                TreeRef::Initial(self.base),
                &self.ops,
                &mut Vec::new(),
                &mut open,
            );
            let Some((host, site, label)) = open.into_iter().next() else {
                return Ok(());
            };
            let candidates = grammar.initials_rooted(label);
            if candidates.is_empty() {
                return Err(GrammarError::IncompleteTree {
                    label: grammar.symbol(label).name.clone(),
                });
            }
            // past a sane depth, prefer closed trees so filling terminates
            let pick = if filled > 64 {
                let closed: Vec<usize> = candidates
                    .iter()
                    .copied()
                    .filter(|&i| !has_open_leaf(grammar, &grammar.initial_trees[i]))
                    .collect();
                if closed.is_empty() {
                    candidates[rng.random_range(0..candidates.len())]
                } else {
                    closed[rng.random_range(0..closed.len())]
                }
            } else {
                candidates[rng.random_range(0..candidates.len())]
            };
            self.ops_mut(&host).push(DerivOp {
                kind: OpKind::Substitute,
                tree: pick,
                site,
                children: Vec::new(),
            });
            filled += 1;
        }
    }

    /// Grows a random derivation: uniform base among start-rooted initial
    /// trees, then `target` adjunctions drawn uniformly over the currently
    /// valid (tree, site) pairs, filling substitution sites as they appear.
    pub fn grow(
        grammar: &Grammar,
        target: usize,
        rng: &mut impl Rng,
    ) -> Result<Self, GrammarError> {
        let bases = grammar.start_initials();
        assert!(!bases.is_empty(), "grammar has no start-rooted initial tree");
        let base = bases[rng.random_range(0..bases.len())];
        let mut g = DerivationTree::new(base);
        g.fill_substitution_sites(grammar, rng)?;
        for _ in 0..target {
            let choices = g.adjoin_choices(grammar);
            if choices.is_empty() {
                break;
            }
            let c = choices[rng.random_range(0..choices.len())].clone();
            g.attach_adjoin(grammar, &c, rng)?;
        }
        Ok(g)
    }

    /// Regrows in place of a removed operation: adjoins a random auxiliary
    /// tree at (`host`, `site`) and extends it with up to `extra` further
    /// adjunctions confined to the new subtree.
    pub fn regrow_at(
        &mut self,
        grammar: &Grammar,
        host: &[usize],
        site: &[usize],
        label: crate::grammar::SymbolId,
        extra: usize,
        rng: &mut impl Rng,
    ) -> Result<(), GrammarError> {
        let candidates = grammar.auxiliaries_rooted(label);
        if candidates.is_empty() {
            return Ok(());
        }
        let aux = candidates[rng.random_range(0..candidates.len())];
        let choice = AdjoinChoice {
            host: host.to_vec(),
            site: site.to_vec(),
            aux,
        };
        let root = self.attach_adjoin(grammar, &choice, rng)?;
        for _ in 0..extra {
            let choices = self.adjoin_choices_within(grammar, &root);
            if choices.is_empty() {
                break;
            }
            let c = choices[rng.random_range(0..choices.len())].clone();
            self.attach_adjoin(grammar, &c, rng)?;
        }
        Ok(())
    }
}

fn has_open_leaf(grammar: &Grammar, tree: &GrammarTree) -> bool {
    tree.nodes()
        .iter()
        .any(|n| n.children.is_empty() && !n.foot && !grammar.is_terminal(n.label))
}

fn collect_adjoin_sites(
    grammar: &Grammar,
    host_ref: TreeRef,
    ops: &[DerivOp],
    host_path: &mut Vec<usize>,
    out: &mut Vec<AdjoinChoice>,
) {
    let tree = grammar.tree(host_ref);
    for (idx, node) in tree.nodes().iter().enumerate() {
        if node.foot || node.no_adjoin || grammar.is_terminal(node.label) {
            continue;
        }
        let auxes = grammar.auxiliaries_rooted(node.label);
        if auxes.is_empty() {
            continue;
        }
        let path = tree.node_path(idx);
        if ops
            .iter()
            .any(|o| o.kind == OpKind::Adjoin && o.site == path)
        {
            continue;
        }
        for &aux in auxes {
            out.push(AdjoinChoice {
                host: host_path.clone(),
                site: path.to_vec(),
                aux,
            });
        }
    }
    for (i, op) in ops.iter().enumerate() {
        host_path.push(i);
        collect_adjoin_sites(grammar, op.tree_ref(), &op.children, host_path, out);
        host_path.pop();
    }
}

type OpenSite = (Vec<usize>, Vec<usize>, crate::grammar::SymbolId);

fn collect_open_subst_sites(
    grammar: &Grammar,
    host_ref: TreeRef,
    ops: &[DerivOp],
    host_path: &mut Vec<usize>,
    out: &mut Vec<OpenSite>,
) {
    let tree = grammar.tree(host_ref);
    for (idx, node) in tree.nodes().iter().enumerate() {
        if !node.children.is_empty() || node.foot || grammar.is_terminal(node.label) {
            continue;
        }
        let path = tree.node_path(idx);
        if ops
            .iter()
            .any(|o| o.kind == OpKind::Substitute && o.site == path)
        {
            continue;
        }
        out.push((host_path.clone(), path.to_vec(), node.label));
    }
    for (i, op) in ops.iter().enumerate() {
        host_path.push(i);
        collect_open_subst_sites(grammar, op.tree_ref(), &op.children, host_path, out);
        host_path.pop();
    }
}

fn apply_ops(
    t: &mut DerivedTree,
    grammar: &Grammar,
    host_ref: TreeRef,
    mut ids: Vec<usize>,
    ops: &[DerivOp],
    script: &mut Option<Vec<ReplayStep>>,
) -> Result<(), GrammarError> {
    for op in ops {
        let tree = grammar.tree(host_ref);
        let clean = tree.resolve_path(&op.site)?;
        let target = ids[clean];
        if let Some(s) = script.as_mut() {
            s.push(ReplayStep {
                kind: op.kind,
                tree: op.tree,
                address: t.path_of(target),
            });
        }
        match op.kind {
            OpKind::Adjoin => {
                let copy = t.adjoin_at(grammar, target, op.tree)?;
                apply_ops(t, grammar, op.tree_ref(), copy, &op.children, script)?;
            }
            OpKind::Substitute => {
                let copy = t.substitute_at(grammar, target, op.tree)?;
                ids[clean] = copy[0];
                apply_ops(t, grammar, op.tree_ref(), copy, &op.children, script)?;
            }
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grammar::builtin_grammar;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn hand_built_derivation_yields_expected_tokens() {
        let g = builtin_grammar("narx").unwrap();
        // base a1; b1 at the Fac node; two b5 lag steps on the new Var; b2 on
        // the b1 copy's root: 1 * u q q * y q  ->  u[k-2] * y[k-1]
        let mut d = DerivationTree::new(0);
        d.ops.push(DerivOp {
            kind: OpKind::Adjoin,
            tree: 0, // b1
            site: vec![0, 0, 0],
            children: vec![
                DerivOp {
                    kind: OpKind::Adjoin,
                    tree: 4, // b5 at the Var below the new factor
                    site: vec![2, 0],
                    children: vec![DerivOp {
                        kind: OpKind::Adjoin,
                        tree: 4,
                        site: vec![],
                        children: vec![],
                    }],
                },
                DerivOp {
                    kind: OpKind::Adjoin,
                    tree: 1, // b2 at the copy's root Fac
                    site: vec![],
                    children: vec![],
                },
            ],
        });
        let t = d.decode(&g).unwrap();
        t.verify(&g, true).unwrap();
        assert_eq!(
            t.yield_tokens(&g).unwrap(),
            vec!["1", "*", "u", "q", "q", "*", "y", "q"]
        );
        assert_eq!(d.adjunction_count(), 4);
        assert_eq!(t.adjunction_count(), 4);
    }

    #[test]
    fn replay_script_matches_value_semantics_replay() {
        let g = builtin_grammar("full").unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for _ in 0..50 {
            let d = DerivationTree::grow(&g, rng.random_range(0..25), &mut rng).unwrap();
            let (decoded, script) = d.decode_with_script(&g).unwrap();
            let mut replayed = DerivedTree::from_initial(&g, d.base);
            for step in &script {
                replayed = match step.kind {
                    OpKind::Adjoin => replayed.adjoin(&g, &step.address, step.tree).unwrap(),
                    OpKind::Substitute => {
                        replayed.substitute(&g, &step.address, step.tree).unwrap()
                    }
                };
            }
            assert_eq!(
                replayed.yield_tokens(&g).unwrap(),
                decoded.yield_tokens(&g).unwrap()
            );
            assert_eq!(replayed.node_count(), decoded.node_count());
        }
    }

    #[test]
    fn grown_derivations_hit_their_adjunction_target() {
        let g = builtin_grammar("narmax").unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for target in [0usize, 1, 5, 20] {
            let d = DerivationTree::grow(&g, target, &mut rng).unwrap();
            assert_eq!(d.adjunction_count(), target);
            d.decode(&g).unwrap().verify(&g, true).unwrap();
        }
    }

    #[test]
    fn trig_growth_fills_wrapper_sites() {
        let g = builtin_grammar("trig").unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        let mut saw_wrapped = false;
        for _ in 0..200 {
            let d = DerivationTree::grow(&g, rng.random_range(0..12), &mut rng).unwrap();
            let t = d.decode(&g).unwrap();
            assert!(t.is_complete(&g), "unfilled substitution site");
            let toks = t.yield_tokens(&g).unwrap();
            saw_wrapped |= toks.iter().any(|t| t == "sin" || t == "cos");
        }
        assert!(saw_wrapped, "b8/a2/a3 should produce wrapped terms");
    }
}
