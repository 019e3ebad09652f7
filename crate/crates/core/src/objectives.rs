//! Multi-objective fitness: prediction error, simulation error and model
//! complexity, plus quality measures and the non-dominated sorting and
//! crowding-distance selection used by the generational loop.

use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::error::QualityError;
use crate::model::{predict_one_step, simulate, FittedModel};

/// The three minimized objectives. Failed evaluations carry infinite error
/// components, which every finite value dominates at equal complexity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ObjectiveTriple {
    pub pred_sse: f64,
    pub sim_sse: f64,
    pub complexity: usize,
}

impl ObjectiveTriple {
    pub fn sentinel(complexity: usize) -> Self {
        Self {
            pred_sse: f64::INFINITY,
            sim_sse: f64::INFINITY,
            complexity,
        }
    }

    /// Pareto dominance: no worse in every objective and strictly better in
    /// at least one.
    pub fn dominates(&self, other: &Self) -> bool {
        let le = self.pred_sse <= other.pred_sse
            && self.sim_sse <= other.sim_sse
            && self.complexity <= other.complexity;
        let lt = self.pred_sse < other.pred_sse
            || self.sim_sse < other.sim_sse
            || self.complexity < other.complexity;
        le && lt
    }

    fn objective(&self, i: usize) -> f64 {
        match i {
            0 => self.pred_sse,
            1 => self.sim_sse,
            _ => self.complexity as f64,
        }
    }
}

/// Which printed form the quality measures take.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MetricForm {
    /// The published formulas: RMS = sqrt(SSE)/(N - N_t) and
    /// BFR = 100 (1 - SSE / sum((y - mean)^2)).
    Paper,
    /// Textbook alternatives: RMS = sqrt(SSE/(N - N_t)) and
    /// BFR = 100 (1 - sqrt(SSE / sum((y - mean)^2))).
    Conventional,
}

impl MetricForm {
    pub fn parse(s: &str) -> Option<Self> {
        match s.to_ascii_lowercase().as_str() {
            "paper" => Some(Self::Paper),
            "conventional" => Some(Self::Conventional),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QualityMeasures {
    pub rms_p: f64,
    pub rms_s: f64,
    pub bfr_p: f64,
    pub bfr_s: f64,
}

/// Error-sum pieces shared by the objectives and the quality measures.
/// Sums run over k in [max(N_t, model max lag), N).
struct ErrorSums {
    pred_sse: f64,
    sim_sse: f64,
    scored: usize,
    deviation: f64,
}

fn error_sums(fm: &FittedModel, data: &Dataset, n_t: usize) -> ErrorSums {
    let n = data.len();
    let k0 = n_t.max(fm.structure.max_lag());
    if k0 >= n {
        return ErrorSums {
            pred_sse: f64::INFINITY,
            sim_sse: f64::INFINITY,
            scored: 0,
            deviation: 0.0,
        };
    }
    let pred_sse = match predict_one_step(fm, data) {
        Ok(p) => {
            let s: f64 = p.residuals[k0..].iter().map(|e| e * e).sum();
            if s.is_finite() {
                s
            } else {
                f64::INFINITY
            }
        }
        Err(_) => f64::INFINITY,
    };
    let sim_sse = match simulate(fm, data) {
        Ok(ys) => {
            let s: f64 = (k0..n).map(|k| (data.y[k] - ys[k]).powi(2)).sum();
            if s.is_finite() {
                s
            } else {
                f64::INFINITY
            }
        }
        Err(_) => f64::INFINITY,
    };
    let mean = data.y[k0..].iter().sum::<f64>() / (n - k0) as f64;
    let deviation = data.y[k0..].iter().map(|v| (v - mean).powi(2)).sum();
    ErrorSums {
        pred_sse,
        sim_sse,
        scored: n - k0,
        deviation,
    }
}

/// Computes the objective triple of a fitted model on the fitness dataset.
/// Divergent or non-finite evaluations yield infinite error components.
pub fn objectives(fm: &FittedModel, fitness_data: &Dataset) -> ObjectiveTriple {
    let sums = error_sums(fm, fitness_data, fitness_data.n_t);
    ObjectiveTriple {
        pred_sse: sums.pred_sse,
        sim_sse: sums.sim_sse,
        complexity: fm.structure.complexity(),
    }
}

/// Quality measures over `data` with transient count `n_t` (raised to the
/// model's maximum lag when larger).
pub fn quality(
    fm: &FittedModel,
    data: &Dataset,
    n_t: usize,
    form: MetricForm,
) -> Result<QualityMeasures, QualityError> {
    let sums = error_sums(fm, data, n_t);
    if sums.deviation == 0.0 || sums.scored == 0 {
        return Err(QualityError::DegenerateOutput);
    }
    let span = (data.len() - n_t) as f64;
    let (rms, bfr): (fn(f64, f64) -> f64, fn(f64, f64) -> f64) = match form {
        MetricForm::Paper => (
            |sse, span| sse.sqrt() / span,
            |sse, dev| 100.0 * (1.0 - sse / dev),
        ),
        MetricForm::Conventional => (
            |sse, span| (sse / span).sqrt(),
            |sse, dev| 100.0 * (1.0 - (sse / dev).sqrt()),
        ),
    };
    Ok(QualityMeasures {
        rms_p: rms(sums.pred_sse, span),
        rms_s: rms(sums.sim_sse, span),
        bfr_p: bfr(sums.pred_sse, sums.deviation),
        bfr_s: bfr(sums.sim_sse, sums.deviation),
    })
}

/// Deb's fast non-dominated sort. Returns fronts of indices into `points`;
/// every index appears in exactly one front.
pub fn non_dominated_sort(points: &[ObjectiveTriple]) -> Vec<Vec<usize>> {
    let n = points.len();
    let mut dominated: Vec<Vec<usize>> = vec![Vec::new(); n];
    let mut count = vec![0usize; n];
    for i in 0..n {
        for j in (i + 1)..n {
            if points[i].dominates(&points[j]) {
                dominated[i].push(j);
                count[j] += 1;
            } else if points[j].dominates(&points[i]) {
                dominated[j].push(i);
                count[i] += 1;
            }
        }
    }
    let mut fronts = Vec::new();
    let mut current: Vec<usize> = (0..n).filter(|&i| count[i] == 0).collect();
    while !current.is_empty() {
        let mut next = Vec::new();
        for &p in &current {
            for &q in &dominated[p] {
                count[q] -= 1;
                if count[q] == 0 {
                    next.push(q);
                }
            }
        }
        next.sort_unstable();
        fronts.push(std::mem::replace(&mut current, next));
    }
    fronts
}

/// Crowding distances for one front, aligned with `front`'s order. Boundary
/// points per objective get infinite distance; objectives with zero or
/// non-finite spread contribute nothing.
pub fn crowding_distances(points: &[ObjectiveTriple], front: &[usize]) -> Vec<f64> {
    let m = front.len();
    let mut dist = vec![0.0f64; m];
    if m <= 2 {
        return vec![f64::INFINITY; m];
    }
    for obj in 0..3 {
        let mut order: Vec<usize> = (0..m).collect();
        order.sort_by(|&a, &b| {
            points[front[a]]
                .objective(obj)
                .partial_cmp(&points[front[b]].objective(obj))
                .unwrap_or(std::cmp::Ordering::Equal)
                .then(front[a].cmp(&front[b]))
        });
        let lo = points[front[order[0]]].objective(obj);
        let hi = points[front[order[m - 1]]].objective(obj);
        let range = hi - lo;
        dist[order[0]] = f64::INFINITY;
        dist[order[m - 1]] = f64::INFINITY;
        if range > 0.0 && range.is_finite() {
            for w in 1..m - 1 {
                let below = points[front[order[w - 1]]].objective(obj);
                let above = points[front[order[w + 1]]].objective(obj);
                let gap = (above - below) / range;
                if gap.is_finite() {
                    dist[order[w]] += gap;
                }
            }
        }
    }
    dist
}

/// Ranks and crowding distances for every point plus the indices that
/// survive truncation to `m`.
#[derive(Debug, Clone)]
pub struct RankedSelection {
    pub selected: Vec<usize>,
    pub ranks: Vec<usize>,
    pub crowding: Vec<f64>,
}

/// NSGA-II selection: admit whole fronts in rank order; truncate the
/// straddling front by descending crowding distance, breaking ties by the
/// `tie` key (lower wins, e.g. adjunction count) and then input order.
pub fn nsga_select(points: &[ObjectiveTriple], tie: &[usize], m: usize) -> RankedSelection {
    assert_eq!(points.len(), tie.len());
    let fronts = non_dominated_sort(points);
    let mut ranks = vec![0usize; points.len()];
    let mut crowding = vec![0.0f64; points.len()];
    for (r, front) in fronts.iter().enumerate() {
        let d = crowding_distances(points, front);
        for (i, &idx) in front.iter().enumerate() {
            ranks[idx] = r;
            crowding[idx] = d[i];
        }
    }
    let mut selected = Vec::with_capacity(m.min(points.len()));
    for front in &fronts {
        let remaining = m - selected.len();
        if remaining == 0 {
            break;
        }
        if front.len() <= remaining {
            selected.extend_from_slice(front);
        } else {
            let mut order = front.clone();
            order.sort_by(|&a, &b| {
                crowding[b]
                    .partial_cmp(&crowding[a])
                    .unwrap_or(std::cmp::Ordering::Equal)
                    .then(tie[a].cmp(&tie[b]))
                    .then(a.cmp(&b))
            });
            selected.extend(order.into_iter().take(remaining));
        }
    }
    RankedSelection {
        selected,
        ranks,
        crowding,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::Role;
    use crate::model::{ModelStructure, Source, Term};

    fn t(p: f64, s: f64, c: usize) -> ObjectiveTriple {
        ObjectiveTriple {
            pred_sse: p,
            sim_sse: s,
            complexity: c,
        }
    }

    #[test]
    fn two_objective_projection_example() {
        // (1,1), (1,2), (2,1), (2,2) at equal complexity
        let pts = vec![t(1.0, 1.0, 1), t(1.0, 2.0, 1), t(2.0, 1.0, 1), t(2.0, 2.0, 1)];
        let fronts = non_dominated_sort(&pts);
        assert_eq!(fronts, vec![vec![0], vec![1, 2], vec![3]]);
    }

    #[test]
    fn identical_points_share_one_front() {
        let pts = vec![t(1.0, 1.0, 2); 5];
        let fronts = non_dominated_sort(&pts);
        assert_eq!(fronts.len(), 1);
        assert_eq!(fronts[0].len(), 5);
    }

    #[test]
    fn sentinel_is_dominated_at_equal_complexity_but_not_across() {
        let good = t(0.5, 0.5, 3);
        let bad = ObjectiveTriple::sentinel(3);
        assert!(good.dominates(&bad));
        assert!(!bad.dominates(&good));
        let simpler_bad = ObjectiveTriple::sentinel(1);
        assert!(!good.dominates(&simpler_bad));
    }

    #[test]
    fn collinear_front_keeps_its_boundary_points() {
        let pts = vec![t(0.0, 2.0, 1), t(1.0, 1.0, 1), t(2.0, 0.0, 1)];
        let sel = nsga_select(&pts, &[0, 0, 0], 2);
        let mut got = sel.selected.clone();
        got.sort_unstable();
        assert_eq!(got, vec![0, 2]);
        assert_eq!(sel.ranks, vec![0, 0, 0]);
    }

    #[test]
    fn truncation_edge_cases() {
        let pts = vec![t(1.0, 1.0, 1), t(0.5, 2.0, 2)];
        assert_eq!(nsga_select(&pts, &[0, 0], 5).selected.len(), 2);
        assert!(nsga_select(&pts, &[0, 0], 0).selected.is_empty());
    }

    #[test]
    fn hand_computed_sse() {
        // 3-sample error sequence (1, -1, 2) -> sse 6
        let e = [1.0f64, -1.0, 2.0];
        let sse: f64 = e.iter().map(|v| v * v).sum();
        assert_eq!(sse, 6.0);
    }

    #[test]
    fn quality_of_exact_model_and_mean_predictor() {
        // exact model: zero errors, BFR 100
        let n = 60;
        let u: Vec<f64> = (0..n).map(|k| (k as f64 * 0.7).sin()).collect();
        let mut y = vec![0.0; n];
        for k in 1..n {
            y[k] = 0.5 * y[k - 1] + u[k - 1];
        }
        let data = Dataset::new(u, y, 1.0, 5, Role::Estimation).unwrap();
        let fm = FittedModel::new(
            ModelStructure::new(vec![
                Term::monomial(&[(Source::Output, 1, 1)]),
                Term::monomial(&[(Source::Input, 1, 1)]),
            ]),
            vec![0.5, 1.0],
            0.0,
        );
        let q = quality(&fm, &data, 5, MetricForm::Paper).unwrap();
        assert_eq!(q.rms_p, 0.0);
        assert_eq!(q.rms_s, 0.0);
        assert_eq!(q.bfr_p, 100.0);
        assert_eq!(q.bfr_s, 100.0);
        let triple = objectives(&fm, &data);
        assert!(triple.pred_sse < 1e-18 && triple.sim_sse < 1e-18);
        assert_eq!(triple.complexity, 2);

        // predicting the mean: BFR_p = 0 by construction
        let mean = data.y[5..].iter().sum::<f64>() / (n - 5) as f64;
        let constant = FittedModel::new(
            ModelStructure::new(vec![Term::constant()]),
            vec![mean],
            0.0,
        );
        let q = quality(&constant, &data, 5, MetricForm::Paper).unwrap();
        assert!(q.bfr_p.abs() < 1e-9, "bfr_p {}", q.bfr_p);
    }

    #[test]
    fn degenerate_output_is_reported() {
        let data = Dataset::new(vec![0.0; 10], vec![2.0; 10], 1.0, 0, Role::Test).unwrap();
        let fm = FittedModel::new(
            ModelStructure::new(vec![Term::constant()]),
            vec![2.0],
            0.0,
        );
        assert!(matches!(
            quality(&fm, &data, 0, MetricForm::Paper),
            Err(QualityError::DegenerateOutput)
        ));
    }

    #[test]
    fn unstable_model_gets_sentinel_simulation_only() {
        let n = 50;
        let y: Vec<f64> = (0..n).map(|k| 1.0 + (k as f64 * 0.3).sin()).collect();
        let data = Dataset::new(vec![0.0; n], y, 1.0, 0, Role::Validation).unwrap();
        let fm = FittedModel::new(
            ModelStructure::new(vec![Term::monomial(&[(Source::Output, 1, 1)])]),
            vec![3.0],
            0.0,
        );
        let triple = objectives(&fm, &data);
        assert!(triple.pred_sse.is_finite());
        assert!(triple.sim_sse.is_infinite());
    }
}
