//! The memetic loop: initialization, TAG-aware crossover and mutation,
//! per-individual least-squares fitting, and NSGA-II survivor selection.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::data::DatasetBundle;
use crate::estimation::{extended_least_squares, least_squares};
use crate::genotype::{AdjoinChoice, DerivationTree};
use crate::grammar::Grammar;
use crate::model::{parse_model, FittedModel, ModelStructure};
use crate::objectives::{nsga_select, objectives, MetricForm, ObjectiveTriple};

/// Hyper-parameters of the evolutionary loop. Defaults follow the published
/// settings: population 100, 150 iterations, 150 adjunctions, crossover
/// probability 1, mutation probability 0.8.
#[derive(Debug, Clone, PartialEq)]
pub struct GpConfig {
    pub population_size: usize,
    pub iterations: usize,
    pub max_adjunctions: usize,
    pub p_c: f64,
    pub p_m: f64,
    pub rng_seed: u64,
}

impl Default for GpConfig {
    fn default() -> Self {
        Self {
            population_size: 100,
            iterations: 150,
            max_adjunctions: 150,
            p_c: 1.0,
            p_m: 0.8,
            rng_seed: 0,
        }
    }
}

/// Engine settings beyond the published hyper-parameters.
#[derive(Debug, Clone)]
pub struct RunOptions {
    pub gp: GpConfig,
    pub els_iterations: usize,
    pub els_tol: f64,
    /// Worker threads for fitness evaluation; 1 means strictly sequential.
    pub threads: usize,
    pub metric_form: MetricForm,
}

impl Default for RunOptions {
    fn default() -> Self {
        Self {
            gp: GpConfig::default(),
            els_iterations: crate::estimation::DEFAULT_ELS_ITERATIONS,
            els_tol: crate::estimation::DEFAULT_ELS_TOL,
            threads: 1,
            metric_form: MetricForm::Paper,
        }
    }
}

/// One population member: genotype, its decoded phenotype, and bookkeeping
/// filled in by evaluation and sorting.
#[derive(Debug, Clone)]
pub struct Individual {
    pub genotype: DerivationTree,
    pub phenotype: ModelStructure,
    pub fitted: Option<FittedModel>,
    pub objectives: Option<ObjectiveTriple>,
    pub rank: usize,
    pub crowding: f64,
}

impl Individual {
    /// Decodes a genotype. Operator closure guarantees the decode succeeds;
    /// a failure here is an engine bug.
    pub fn from_genotype(genotype: DerivationTree, grammar: &Grammar) -> Self {
        let derived = genotype.decode(grammar).expect("genotype decodes");
        let tokens = derived
            .yield_tokens(grammar)
            .expect("decoded trees are complete");
        let phenotype = parse_model(&tokens).expect("yields parse into model structures");
        Self {
            genotype,
            phenotype,
            fitted: None,
            objectives: None,
            rank: 0,
            crowding: 0.0,
        }
    }

    /// A copy with evaluation state cleared (offspring bookkeeping).
    fn reset_clone(&self) -> Self {
        Self {
            genotype: self.genotype.clone(),
            phenotype: self.phenotype.clone(),
            fitted: None,
            objectives: None,
            rank: 0,
            crowding: 0.0,
        }
    }
}

/// Ramped initialization: adjunction targets cycle over
/// [0, max_adjunctions/10] and operations are drawn uniformly over the
/// currently valid (tree, site) pairs.
pub fn init_population(
    grammar: &Grammar,
    cfg: &GpConfig,
    rng: &mut impl Rng,
) -> Vec<Individual> {
    let cap = cfg.max_adjunctions / 10;
    (0..cfg.population_size)
        .map(|i| {
            let target = i % (cap + 1);
            let g = DerivationTree::grow(grammar, target, rng).expect("growth succeeds");
            Individual::from_genotype(g, grammar)
        })
        .collect()
}

/// Subtree-exchange crossover: picks one adjunction subtree in each parent
/// with matching auxiliary-root labels and swaps them. Incompatible or
/// budget-breaking draws (16 attempts) degrade to plain reproduction.
pub fn crossover(
    a: &Individual,
    b: &Individual,
    grammar: &Grammar,
    max_adjunctions: usize,
    rng: &mut impl Rng,
) -> (Individual, Individual) {
    let pa = a.genotype.adjoin_paths();
    let pb = b.genotype.adjoin_paths();
    if !pa.is_empty() && !pb.is_empty() {
        for _ in 0..16 {
            let i = &pa[rng.random_range(0..pa.len())];
            let j = &pb[rng.random_range(0..pb.len())];
            let la = grammar.auxiliary_trees[a.genotype.op_at(i).tree].root_label();
            let lb = grammar.auxiliary_trees[b.genotype.op_at(j).tree].root_label();
            if la != lb {
                continue;
            }
            let mut ga = a.genotype.clone();
            let mut gb = b.genotype.clone();
            let mut sub_a = ga.remove_op(i);
            let mut sub_b = gb.remove_op(j);
            // each subtree adopts the site it lands on
            std::mem::swap(&mut sub_a.site, &mut sub_b.site);
            let (ia, host_a) = i.split_last().unwrap();
            ga.ops_mut(host_a).insert(*ia, sub_b);
            let (jb, host_b) = j.split_last().unwrap();
            gb.ops_mut(host_b).insert(*jb, sub_a);
            if ga.adjunction_count() <= max_adjunctions
                && gb.adjunction_count() <= max_adjunctions
            {
                return (
                    Individual::from_genotype(ga, grammar),
                    Individual::from_genotype(gb, grammar),
                );
            }
        }
    }
    (a.reset_clone(), b.reset_clone())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MutationKind {
    Delete,
    Regrow,
    Insert,
}

/// Whether the mutation coin fired; moves without a valid target leave the
/// genotype unchanged.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MutationOutcome {
    Skipped,
    Attempted(MutationKind),
}

/// With probability `p_m`, applies one of delete / regrow / insert on a
/// random adjunction subtree.
pub fn mutate(
    a: &Individual,
    grammar: &Grammar,
    p_m: f64,
    max_adjunctions: usize,
    rng: &mut impl Rng,
) -> (Individual, MutationOutcome) {
    if rng.random::<f64>() >= p_m {
        return (a.reset_clone(), MutationOutcome::Skipped);
    }
    let kind = match rng.random_range(0..3u8) {
        0 => MutationKind::Delete,
        1 => MutationKind::Regrow,
        _ => MutationKind::Insert,
    };
    let mut g = a.genotype.clone();
    match kind {
        MutationKind::Delete => {
            let paths = g.adjoin_paths();
            if !paths.is_empty() {
                let p = &paths[rng.random_range(0..paths.len())];
                g.remove_op(p);
            }
        }
        MutationKind::Regrow => {
            let paths = g.adjoin_paths();
            if !paths.is_empty() {
                let p = &paths[rng.random_range(0..paths.len())];
                let budget = g.op_at(p).count_adjoins();
                let removed = g.remove_op(p);
                let label = grammar.auxiliary_trees[removed.tree].root_label();
                let (_, host) = p.split_last().unwrap();
                let target = rng.random_range(1..=budget);
                g.regrow_at(grammar, host, &removed.site, label, target - 1, rng)
                    .expect("regrowth succeeds");
            }
        }
        MutationKind::Insert => {
            if g.adjunction_count() < max_adjunctions {
                let choices = g.adjoin_choices(grammar);
                if !choices.is_empty() {
                    let c: AdjoinChoice = choices[rng.random_range(0..choices.len())].clone();
                    g.attach_adjoin(grammar, &c, rng).expect("insert succeeds");
                }
            }
        }
    }
    (
        Individual::from_genotype(g, grammar),
        MutationOutcome::Attempted(kind),
    )
}

/// Fits one structure on the estimation data and scores it on the fitness
/// data. Estimation failures yield the worst-case sentinel triple.
fn fit_and_score(
    structure: &ModelStructure,
    bundle: &DatasetBundle,
    opts: &RunOptions,
) -> (Option<FittedModel>, ObjectiveTriple) {
    let report = if structure.has_noise() {
        extended_least_squares(
            structure,
            &bundle.estimation,
            opts.els_iterations,
            opts.els_tol,
        )
    } else {
        least_squares(structure, &bundle.estimation)
    };
    match report {
        Ok(rep) if rep.coefficients.iter().all(|c| c.is_finite()) => {
            let fm = FittedModel::new(structure.clone(), rep.coefficients, rep.residual_variance);
            let triple = objectives(&fm, &bundle.fitness);
            (Some(fm), triple)
        }
        _ => (None, ObjectiveTriple::sentinel(structure.complexity())),
    }
}

fn evaluate(
    pop: &mut [Individual],
    bundle: &DatasetBundle,
    opts: &RunOptions,
    pool: Option<&rayon::ThreadPool>,
) {
    let work = |ind: &mut Individual| {
        if ind.objectives.is_none() {
            let (fitted, triple) = fit_and_score(&ind.phenotype, bundle, opts);
            ind.fitted = fitted;
            ind.objectives = Some(triple);
        }
    };
    match pool {
        Some(pool) => pool.install(|| pop.par_iter_mut().for_each(work)),
        None => pop.iter_mut().for_each(work),
    }
}

/// Binary tournament on (rank, crowding distance); ties keep the first draw.
fn tournament(pop: &[Individual], rng: &mut impl Rng) -> usize {
    let i = rng.random_range(0..pop.len());
    let j = rng.random_range(0..pop.len());
    let j_better = pop[j].rank < pop[i].rank
        || (pop[j].rank == pop[i].rank && pop[j].crowding > pop[i].crowding);
    if j_better {
        j
    } else {
        i
    }
}

/// Applies NSGA-II selection to `pop`, keeping `m` survivors in selection
/// order with ranks and crowding distances filled in.
fn select(pop: Vec<Individual>, m: usize) -> Vec<Individual> {
    let points: Vec<ObjectiveTriple> = pop
        .iter()
        .map(|i| i.objectives.expect("evaluated before selection"))
        .collect();
    let ties: Vec<usize> = pop.iter().map(|i| i.genotype.adjunction_count()).collect();
    let sel = nsga_select(&points, &ties, m);
    let mut slots: Vec<Option<Individual>> = pop.into_iter().map(Some).collect();
    sel.selected
        .iter()
        .map(|&idx| {
            let mut ind = slots[idx].take().expect("selected once");
            ind.rank = sel.ranks[idx];
            ind.crowding = sel.crowding[idx];
            ind
        })
        .collect()
}

fn breed(
    pop: &[Individual],
    grammar: &Grammar,
    cfg: &GpConfig,
    rng: &mut impl Rng,
) -> Vec<Individual> {
    let m = cfg.population_size;
    let mut children = Vec::with_capacity(m);
    while children.len() < m {
        let p1 = tournament(pop, rng);
        let p2 = tournament(pop, rng);
        let (c1, c2) = if rng.random::<f64>() < cfg.p_c {
            crossover(&pop[p1], &pop[p2], grammar, cfg.max_adjunctions, rng)
        } else {
            (pop[p1].reset_clone(), pop[p2].reset_clone())
        };
        let (c1, _) = mutate(&c1, grammar, cfg.p_m, cfg.max_adjunctions, rng);
        children.push(c1);
        if children.len() < m {
            let (c2, _) = mutate(&c2, grammar, cfg.p_m, cfg.max_adjunctions, rng);
            children.push(c2);
        }
    }
    children
}

/// Per-generation progress record.
#[derive(Debug, Clone)]
pub struct GenerationStats {
    pub generation: usize,
    pub front_size: usize,
    pub best_rms_p: f64,
    pub best_rms_s: f64,
    pub min_complexity: usize,
}

fn stats(
    pop: &[Individual],
    generation: usize,
    bundle: &DatasetBundle,
    form: MetricForm,
) -> GenerationStats {
    let span = (bundle.fitness.len() - bundle.fitness.n_t) as f64;
    let rms = |sse: f64| match form {
        MetricForm::Paper => sse.sqrt() / span,
        MetricForm::Conventional => (sse / span).sqrt(),
    };
    let front: Vec<&Individual> = pop.iter().filter(|i| i.rank == 0).collect();
    let mut best_p = f64::INFINITY;
    let mut best_s = f64::INFINITY;
    let mut min_c = usize::MAX;
    for ind in &front {
        let t = ind.objectives.expect("evaluated");
        best_p = best_p.min(rms(t.pred_sse));
        best_s = best_s.min(rms(t.sim_sse));
        min_c = min_c.min(t.complexity);
    }
    GenerationStats {
        generation,
        front_size: front.len(),
        best_rms_p: best_p,
        best_rms_s: best_s,
        min_complexity: min_c,
    }
}

#[derive(Debug, Clone)]
pub struct RunResult {
    /// Rank-0 individuals of the final population, sorted by complexity
    /// then prediction error.
    pub front: Vec<Individual>,
    pub history: Vec<GenerationStats>,
}

/// Runs the full loop: evaluate, merge with the previous population,
/// non-dominated sort, truncate to M, breed; repeated for
/// `cfg.iterations` breeding generations.
pub fn run(
    grammar: &Grammar,
    bundle: &DatasetBundle,
    opts: &RunOptions,
    mut on_generation: impl FnMut(&GenerationStats),
) -> RunResult {
    let cfg = &opts.gp;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.rng_seed);
    let pool = (opts.threads > 1).then(|| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(opts.threads)
            .build()
            .expect("thread pool")
    });

    let mut pop = init_population(grammar, cfg, &mut rng);
    evaluate(&mut pop, bundle, opts, pool.as_ref());
    pop = select(pop, cfg.population_size);
    let mut history = vec![stats(&pop, 0, bundle, opts.metric_form)];
    on_generation(&history[0]);

    for gen in 1..=cfg.iterations {
        let mut offspring = breed(&pop, grammar, cfg, &mut rng);
        evaluate(&mut offspring, bundle, opts, pool.as_ref());
        let mut merged = pop;
        merged.append(&mut offspring);
        pop = select(merged, cfg.population_size);
        let s = stats(&pop, gen, bundle, opts.metric_form);
        on_generation(&s);
        history.push(s);
    }

    let mut front: Vec<Individual> = pop.into_iter().filter(|i| i.rank == 0).collect();
    front.sort_by(|a, b| {
        let ta = a.objectives.expect("evaluated");
        let tb = b.objectives.expect("evaluated");
        ta.complexity
            .cmp(&tb.complexity)
            .then(ta.pred_sse.partial_cmp(&tb.pred_sse).unwrap_or(std::cmp::Ordering::Equal))
            .then(ta.sim_sse.partial_cmp(&tb.sim_sse).unwrap_or(std::cmp::Ordering::Equal))
    });
    RunResult { front, history }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{builtin_system, generate_benchmark, DatasetBundle};
    use crate::grammar::builtin_grammar;

    fn tiny_bundle() -> DatasetBundle {
        let sys = builtin_system("s1").unwrap();
        let est = generate_benchmark(&sys, 300, 11, 20, None).unwrap();
        let val = generate_benchmark(&sys, 300, 12, 20, None).unwrap();
        DatasetBundle::new(est, Some(val), None)
    }

    #[test]
    fn init_is_sized_ramped_and_seeded() {
        let g = builtin_grammar("narx").unwrap();
        let cfg = GpConfig {
            population_size: 100,
            ..GpConfig::default()
        };
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let pop = init_population(&g, &cfg, &mut rng);
        assert_eq!(pop.len(), 100);
        for (i, ind) in pop.iter().enumerate() {
            assert_eq!(ind.genotype.adjunction_count(), i % 16);
        }
        let mut rng2 = ChaCha8Rng::seed_from_u64(1);
        let pop2 = init_population(&g, &cfg, &mut rng2);
        for (a, b) in pop.iter().zip(&pop2) {
            assert_eq!(a.genotype, b.genotype);
        }
    }

    #[test]
    fn crossover_of_leafless_parents_reproduces() {
        let g = builtin_grammar("narx").unwrap();
        let a = Individual::from_genotype(DerivationTree::new(0), &g);
        let b = Individual::from_genotype(DerivationTree::new(0), &g);
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let (c, d) = crossover(&a, &b, &g, 150, &mut rng);
        assert_eq!(c.genotype, a.genotype);
        assert_eq!(d.genotype, b.genotype);
    }

    #[test]
    fn mutation_of_flat_individual_can_only_insert() {
        let g = builtin_grammar("narx").unwrap();
        let a = Individual::from_genotype(DerivationTree::new(0), &g);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..100 {
            let (m, outcome) = mutate(&a, &g, 1.0, 150, &mut rng);
            match outcome {
                MutationOutcome::Attempted(MutationKind::Insert) => {
                    assert_eq!(m.genotype.adjunction_count(), 1)
                }
                MutationOutcome::Attempted(_) => {
                    assert_eq!(m.genotype, a.genotype)
                }
                MutationOutcome::Skipped => unreachable!("p_m = 1"),
            }
        }
    }

    #[test]
    fn mutation_rate_tracks_pm() {
        let g = builtin_grammar("narmax").unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let a = Individual::from_genotype(DerivationTree::grow(&g, 6, &mut rng).unwrap(), &g);
        let trials = 10_000;
        let mut attempted = 0;
        for _ in 0..trials {
            let (_, outcome) = mutate(&a, &g, 0.8, 150, &mut rng);
            if matches!(outcome, MutationOutcome::Attempted(_)) {
                attempted += 1;
            }
        }
        let rate = attempted as f64 / trials as f64;
        assert!((rate - 0.8).abs() <= 0.02, "rate {rate}");
    }

    #[test]
    fn zero_iterations_returns_sorted_initial_front() {
        let g = builtin_grammar("narx").unwrap();
        let bundle = tiny_bundle();
        let opts = RunOptions {
            gp: GpConfig {
                population_size: 20,
                iterations: 0,
                rng_seed: 5,
                ..GpConfig::default()
            },
            ..RunOptions::default()
        };
        let r = run(&g, &bundle, &opts, |_| {});
        assert_eq!(r.history.len(), 1);
        assert!(!r.front.is_empty());
        // front members are mutually non-dominated
        for a in &r.front {
            for b in &r.front {
                let (ta, tb) = (a.objectives.unwrap(), b.objectives.unwrap());
                assert!(!ta.dominates(&tb));
            }
        }
    }

    #[test]
    fn runs_are_seed_reproducible_and_population_stays_sized() {
        let g = builtin_grammar("narx").unwrap();
        let bundle = tiny_bundle();
        let opts = RunOptions {
            gp: GpConfig {
                population_size: 16,
                iterations: 4,
                rng_seed: 9,
                ..GpConfig::default()
            },
            ..RunOptions::default()
        };
        let mut sizes = Vec::new();
        let r1 = run(&g, &bundle, &opts, |s| sizes.push(s.front_size));
        let r2 = run(&g, &bundle, &opts, |_| {});
        assert_eq!(sizes.len(), 5);
        assert_eq!(r1.front.len(), r2.front.len());
        for (a, b) in r1.front.iter().zip(&r2.front) {
            assert_eq!(a.genotype, b.genotype);
            assert_eq!(a.objectives, b.objectives);
        }
    }

    #[test]
    fn front_never_regresses_across_generations() {
        let g = builtin_grammar("narx").unwrap();
        let bundle = tiny_bundle();
        let opts = RunOptions {
            gp: GpConfig {
                population_size: 16,
                iterations: 6,
                rng_seed: 7,
                ..GpConfig::default()
            },
            ..RunOptions::default()
        };
        let mut best = Vec::new();
        run(&g, &bundle, &opts, |s| best.push(s.best_rms_s));
        for w in best.windows(2) {
            assert!(
                w[1] <= w[0] + 1e-12,
                "front regressed: {} -> {}",
                w[0],
                w[1]
            );
        }
    }
}
