//! Multilinear extension of the objective, its exact evaluation through
//! order-statistic probabilities, continuous double greedy, and pipage
//! rounding back to an integral selection.
//!
//! For a fractional point `x`, a random set `S` includes each candidate `u`
//! independently with probability `x_u`. Per novel class, all base classes
//! are sorted by similarity `q_[1] ≥ q_[2] ≥ …` and
//!
//! ```text
//! P(s_[j] ≥ q_[i]) = (1 − x_[i])·P(s_[j] ≥ q_[i−1]) + x_[i]·P(s_[j−1] ≥ q_[i−1])   [i] ∈ B_u
//! P(s_[j] ≥ q_[i]) = P(s_[j−1] ≥ q_[i−1])                                           [i] ∈ B_s
//! ```
//!
//! with `P(s_[0] ≥ ·) = 1` and `P(s_[j] ≥ q_[0]) = 0`. Positions are compared
//! by sorted index, so tied similarities are distinct thresholds. When fewer
//! than `j` classes are present the `j`-th order statistic is missing and
//! counts as 0, matching the short-vector rule of `max_k_sum`.

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::problem::{Algorithm, SelectionProblem, SelectionResult};
use crate::similarity::ClassId;
use crate::state::SelectionState;

pub const DEFAULT_STEPS: usize = 100;
const LEVEL_TOLERANCE: f64 = 1e-12;
const INTEGRAL_EPS: f64 = 1e-9;
const BUDGET_TOLERANCE: f64 = 1e-6;

/// Fractional selection over the candidates, in candidate order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FractionalSolution {
    pub ids: Vec<ClassId>,
    pub x: Vec<f64>,
    pub budget: usize,
}

impl FractionalSolution {
    pub fn new(problem: &SelectionProblem, x: Vec<f64>) -> Result<Self> {
        check_point(problem, &x)?;
        Ok(FractionalSolution { ids: problem.candidate_ids().to_vec(), x, budget: problem.m() })
    }

    /// Indicator vector of a set of candidate positions.
    pub fn from_set(problem: &SelectionProblem, set: &[usize]) -> Result<Self> {
        let mut x = vec![0.0; problem.num_candidates()];
        for &u in set {
            *x.get_mut(u).ok_or(Error::CandidateIndex { index: u, count: problem.num_candidates() })? = 1.0;
        }
        Self::new(problem, x)
    }

    pub fn get(&self, id: &ClassId) -> Option<f64> {
        self.ids.binary_search(id).ok().map(|i| self.x[i])
    }

    pub fn sum(&self) -> f64 {
        self.x.iter().sum()
    }

    pub fn is_integral(&self) -> bool {
        self.x.iter().all(|&v| v == 0.0 || v == 1.0)
    }
}

fn check_point(problem: &SelectionProblem, x: &[f64]) -> Result<()> {
    if x.len() != problem.num_candidates() {
        return Err(Error::InvalidInput(format!(
            "fractional point has {} coordinates, expected {}",
            x.len(),
            problem.num_candidates()
        )));
    }
    if let Some(v) = x.iter().find(|v| !(0.0..=1.0).contains(*v)) {
        return Err(Error::InvalidInput(format!("coordinate {v} outside [0, 1]")));
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BaseKind {
    Candidate,
    Preselected,
}

#[derive(Debug, Clone, Copy)]
struct Threshold {
    kind: BaseKind,
    /// position within its role list
    index: usize,
    q: f64,
}

/// `P(s_[j] ≥ q_[i])` for one novel class, `j = 1..=K`, `i = 1..=|B|`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrderStatProbTable {
    pub novel: ClassId,
    /// base classes in threshold order with their similarity and role
    pub thresholds: Vec<(ClassId, BaseKind, f64)>,
    pub k: usize,
    geq: Vec<f64>,
}

impl OrderStatProbTable {
    pub fn len(&self) -> usize {
        self.thresholds.len()
    }

    pub fn is_empty(&self) -> bool {
        self.thresholds.is_empty()
    }

    /// `P(s_[j] ≥ q_[i])`; `i = 0` gives the base case 0.
    pub fn prob_geq(&self, j: usize, i: usize) -> f64 {
        assert!((1..=self.k).contains(&j) && i <= self.len());
        if i == 0 {
            0.0
        } else {
            self.geq[(j - 1) * self.len() + (i - 1)]
        }
    }

    /// `P(s_[j] = q_[i])`, i.e. the `j`-th largest selected class sits at position `i`.
    pub fn prob_eq(&self, j: usize, i: usize) -> f64 {
        self.prob_geq(j, i) - self.prob_geq(j, i - 1)
    }

    /// Probability that fewer than `j` base classes are present.
    pub fn prob_short(&self, j: usize) -> f64 {
        1.0 - self.prob_geq(j, self.len())
    }
}

/// Exact evaluator of the multilinear extension and its partial derivatives.
/// Holds the per-novel threshold orders so repeated evaluations skip the sort.
#[derive(Debug, Clone)]
pub struct Multilinear<'p> {
    problem: &'p SelectionProblem,
    orders: Vec<Vec<Threshold>>,
}

impl<'p> Multilinear<'p> {
    pub fn new(problem: &'p SelectionProblem) -> Self {
        let cand = problem.candidate_ids();
        let pre = problem.preselected_ids();
        let id_of = |t: &Threshold| match t.kind {
            BaseKind::Candidate => &cand[t.index],
            BaseKind::Preselected => &pre[t.index],
        };
        let orders = (0..problem.num_novel())
            .map(|n| {
                let mut v: Vec<Threshold> = (0..cand.len())
                    .map(|u| Threshold { kind: BaseKind::Candidate, index: u, q: problem.candidate_sim(u, n) })
                    .chain((0..pre.len()).map(|s| Threshold {
                        kind: BaseKind::Preselected,
                        index: s,
                        q: problem.preselected_sim(s, n),
                    }))
                    .collect();
                v.sort_by(|a, b| b.q.total_cmp(&a.q).then_with(|| id_of(a).cmp(id_of(b))));
                v
            })
            .collect();
        Multilinear { problem, orders }
    }

    pub fn problem(&self) -> &'p SelectionProblem {
        self.problem
    }

    fn inclusion(&self, x: &[f64], t: &Threshold, exclude: Option<usize>) -> f64 {
        match t.kind {
            BaseKind::Preselected => 1.0,
            BaseKind::Candidate if Some(t.index) == exclude => 0.0,
            BaseKind::Candidate => x[t.index],
        }
    }

    /// One DP step: `next[j] = P(s_[j] ≥ q_[i])` from `prev[j] = P(s_[j] ≥ q_[i−1])`.
    #[inline]
    fn advance(prev: &[f64], next: &mut [f64], p: f64) {
        next[0] = 1.0;
        for j in 1..prev.len() {
            next[j] = (1.0 - p) * prev[j] + p * prev[j - 1];
        }
    }

    pub fn order_stat_table(&self, x: &[f64], n: usize, exclude: Option<usize>) -> OrderStatProbTable {
        let k = self.problem.k();
        let order = &self.orders[n];
        let len = order.len();
        let mut geq = vec![0.0; k * len];
        let mut prev = vec![0.0; k + 1];
        prev[0] = 1.0;
        let mut next = prev.clone();
        for (i, t) in order.iter().enumerate() {
            Self::advance(&prev, &mut next, self.inclusion(x, t, exclude));
            for j in 1..=k {
                geq[(j - 1) * len + i] = next[j];
            }
            std::mem::swap(&mut prev, &mut next);
        }
        let (cand, pre) = (self.problem.candidate_ids(), self.problem.preselected_ids());
        OrderStatProbTable {
            novel: self.problem.novel_ids()[n].clone(),
            thresholds: order
                .iter()
                .map(|t| {
                    let id = match t.kind {
                        BaseKind::Candidate => &cand[t.index],
                        BaseKind::Preselected => &pre[t.index],
                    };
                    (id.clone(), t.kind, t.q)
                })
                .collect(),
            k,
            geq,
        }
    }

    /// `F(x)`: expected objective under independent inclusion.
    pub fn value(&self, x: &[f64]) -> f64 {
        let p = self.problem;
        let k = p.k();
        let mut prev = vec![0.0; k + 1];
        let mut next = prev.clone();
        let mut expected_top = 0.0;
        let mut expected_all = 0.0;
        for (n, order) in self.orders.iter().enumerate() {
            prev.fill(0.0);
            prev[0] = 1.0;
            for t in order {
                Self::advance(&prev, &mut next, self.inclusion(x, t, None));
                // Σ_j P(s_[j] = q_[i]) · q_[i]
                let mass: f64 = (1..=k).map(|j| next[j] - prev[j]).sum();
                expected_top += mass * t.q;
                std::mem::swap(&mut prev, &mut next);
            }
            expected_all += (0..p.num_preselected()).map(|s| p.preselected_sim(s, n)).sum::<f64>();
            expected_all += (0..p.num_candidates()).map(|u| x[u] * p.candidate_sim(u, n)).sum::<f64>();
        }
        expected_top * p.topk_scale() - expected_all * p.diversity_scale()
    }

    /// `∂F/∂x_u = F(x ∨ u) − F(x ∧ (B_u − u))`.
    pub fn partial(&self, x: &[f64], u: usize) -> f64 {
        let p = self.problem;
        let k = p.k();
        let mut prev = vec![0.0; k + 1];
        let mut next = prev.clone();
        let mut top = 0.0;
        for (n, order) in self.orders.iter().enumerate() {
            let f = p.candidate_sim(u, n);
            prev.fill(0.0);
            prev[0] = 1.0;
            for t in order {
                Self::advance(&prev, &mut next, self.inclusion(x, t, Some(u)));
                let at_kth = next[k] - prev[k];
                if f > t.q {
                    top += at_kth * (f - t.q);
                }
                std::mem::swap(&mut prev, &mut next);
            }
            // fewer than K present: u enters the top-K unconditionally
            top += (1.0 - prev[k]) * f;
        }
        top * p.topk_scale() - p.candidate_row_sum(u) * p.diversity_scale()
    }

    pub fn gradient(&self, x: &[f64]) -> Vec<f64> {
        (0..self.problem.num_candidates()).map(|u| self.partial(x, u)).collect()
    }
}

/// Order-statistic table for novel class `novel` at `x`, optionally with
/// candidate `exclude` forced out.
pub fn order_stat_probs(
    problem: &SelectionProblem,
    x: &[f64],
    novel: &ClassId,
    exclude: Option<&ClassId>,
) -> Result<OrderStatProbTable> {
    check_point(problem, x)?;
    let n = problem.novel_ids().binary_search(novel).map_err(|_| Error::UnknownClass(novel.clone()))?;
    let exclude =
        exclude.map(|id| problem.candidate_index(id).ok_or_else(|| Error::NotCandidate(id.clone()))).transpose()?;
    Ok(Multilinear::new(problem).order_stat_table(x, n, exclude))
}

pub fn multilinear_value(problem: &SelectionProblem, x: &[f64]) -> Result<f64> {
    check_point(problem, x)?;
    Ok(Multilinear::new(problem).value(x))
}

pub fn multilinear_partial(problem: &SelectionProblem, x: &[f64], u: &ClassId) -> Result<f64> {
    check_point(problem, x)?;
    let u = problem.candidate_index(u).ok_or_else(|| Error::NotCandidate(u.clone()))?;
    Ok(Multilinear::new(problem).partial(x, u))
}

/// Diagnostics for one continuous double greedy step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepTrace {
    pub t: usize,
    pub level: f64,
    pub rate_sum: f64,
    pub sum_x: f64,
    pub sum_y: f64,
    /// min over u of `y_u − x_u`
    pub min_gap: f64,
}

fn rates(a: &[f64], b: &[f64], level: f64, dx: &mut [f64], dy: &mut [f64]) -> f64 {
    let mut total = 0.0;
    for u in 0..a.len() {
        let up = (a[u] - level).max(0.0);
        let down = (b[u] + level).max(0.0);
        let den = up + down;
        // zero denominator freezes the coordinate for this step
        let (rx, ry) = if den > 0.0 { (up / den, -down / den) } else { (0.0, 0.0) };
        dx[u] = rx;
        dy[u] = ry;
        total += rx;
    }
    total
}

/// Water level `l*` with `Σ_u dx_u/dt(l*) = budget`. The rate sum is
/// nonincreasing in `l`; where it jumps across the budget the two one-sided
/// rate vectors are blended so the budget is met exactly.
fn water_fill(a: &[f64], b: &[f64], budget: f64, dx: &mut [f64], dy: &mut [f64]) -> Result<(f64, f64)> {
    let r = a.len();
    let max_a = a.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let min_a = a.iter().copied().fold(f64::INFINITY, f64::min);
    let max_b = b.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let min_b = b.iter().copied().fold(f64::INFINITY, f64::min);
    let mut lo = min_a.min(-max_b) - 1.0;
    let mut hi = max_a.max(-min_b) + 1.0;

    let (mut dx_lo, mut dy_lo) = (vec![0.0; r], vec![0.0; r]);
    let (mut dx_hi, mut dy_hi) = (vec![0.0; r], vec![0.0; r]);
    let mut sum_lo = rates(a, b, lo, &mut dx_lo, &mut dy_lo);
    let mut sum_hi = rates(a, b, hi, &mut dx_hi, &mut dy_hi);
    if sum_lo < budget - BUDGET_TOLERANCE || sum_hi > budget + BUDGET_TOLERANCE || !lo.is_finite() || !hi.is_finite() {
        return Err(Error::BracketFailure { low: lo, high: hi, low_sum: sum_lo, high_sum: sum_hi, target: budget });
    }

    for _ in 0..200 {
        if hi - lo <= LEVEL_TOLERANCE * (1.0 + lo.abs().max(hi.abs())) {
            break;
        }
        let mid = 0.5 * (lo + hi);
        let s = rates(a, b, mid, dx, dy);
        if s >= budget {
            lo = mid;
            sum_lo = s;
            dx_lo.copy_from_slice(dx);
            dy_lo.copy_from_slice(dy);
        } else {
            hi = mid;
            sum_hi = s;
            dx_hi.copy_from_slice(dx);
            dy_hi.copy_from_slice(dy);
        }
    }

    let theta = if sum_lo > sum_hi { ((budget - sum_hi) / (sum_lo - sum_hi)).clamp(0.0, 1.0) } else { 0.0 };
    let mut total = 0.0;
    for u in 0..r {
        dx[u] = theta * dx_lo[u] + (1.0 - theta) * dx_hi[u];
        dy[u] = theta * dy_lo[u] + (1.0 - theta) * dy_hi[u];
        total += dx[u];
    }
    Ok((hi - theta * (hi - lo), total))
}

/// Continuous double greedy from `x = 0`, `y = 1` over `steps` time steps.
pub fn continuous_double_greedy(problem: &SelectionProblem, steps: usize) -> Result<FractionalSolution> {
    continuous_double_greedy_traced(problem, steps).map(|(x, _)| x)
}

pub fn continuous_double_greedy_traced(
    problem: &SelectionProblem,
    steps: usize,
) -> Result<(FractionalSolution, Vec<StepTrace>)> {
    if steps == 0 {
        return Err(Error::InvalidInput("continuous double greedy needs at least one step".into()));
    }
    let r = problem.num_candidates();
    let budget = problem.m() as f64;
    let eval = Multilinear::new(problem);
    let mut x = vec![0.0; r];
    let mut y = vec![1.0; r];
    let (mut dx, mut dy) = (vec![0.0; r], vec![0.0; r]);
    let step = 1.0 / steps as f64;
    let mut trace = Vec::with_capacity(steps);

    for t in 1..=steps {
        let a = eval.gradient(&x);
        // benefit of lowering y_u
        let b: Vec<f64> = eval.gradient(&y).into_iter().map(|g| -g).collect();
        let (level, rate_sum) = water_fill(&a, &b, budget, &mut dx, &mut dy)?;
        for u in 0..r {
            x[u] = (x[u] + step * dx[u]).clamp(0.0, 1.0);
            y[u] = (y[u] + step * dy[u]).clamp(x[u], 1.0);
        }
        trace.push(StepTrace {
            t,
            level,
            rate_sum,
            sum_x: x.iter().sum(),
            sum_y: y.iter().sum(),
            min_gap: y.iter().zip(&x).map(|(yv, xv)| yv - xv).fold(f64::INFINITY, f64::min),
        });
    }
    Ok((FractionalSolution { ids: problem.candidate_ids().to_vec(), x, budget: problem.m() }, trace))
}

/// Pipage rounding: repeatedly take the two fractional coordinates with the
/// smallest ids, push mass between them until one becomes integral, and keep
/// whichever of the two end points has the larger `F`. `F` is convex along
/// these directions, so it never decreases. `seed` is recorded but unused.
pub fn pipage_round(problem: &SelectionProblem, x: &FractionalSolution, seed: u64) -> Result<SelectionResult> {
    pipage_round_traced(problem, x, seed).map(|(res, _)| res)
}

/// Like [`pipage_round`], also returning `F` before the first and after every step.
pub fn pipage_round_traced(
    problem: &SelectionProblem,
    x: &FractionalSolution,
    seed: u64,
) -> Result<(SelectionResult, Vec<f64>)> {
    let started = Instant::now();
    check_point(problem, &x.x)?;
    let sum = x.sum();
    if x.budget != problem.m() || (sum - problem.m() as f64).abs() > BUDGET_TOLERANCE {
        return Err(Error::NotBudgetFeasible { sum, budget: problem.m() });
    }
    let eval = Multilinear::new(problem);
    let mut v: Vec<f64> =
        x.x.iter()
            .map(|&c| {
                if c < INTEGRAL_EPS {
                    0.0
                } else if c > 1.0 - INTEGRAL_EPS {
                    1.0
                } else {
                    c
                }
            })
            .collect();
    let mut history = vec![eval.value(&v)];

    loop {
        let mut frac = (0..v.len()).filter(|&u| v[u] > 0.0 && v[u] < 1.0);
        let (i, j) = match (frac.next(), frac.next()) {
            (Some(i), Some(j)) => (i, j),
            (Some(i), None) => {
                // remaining mass is rounding error on an integral budget
                v[i] = v[i].round();
                history.push(eval.value(&v));
                break;
            }
            _ => break,
        };
        let (vi, vj) = (v[i], v[j]);

        let mut raise_i = v.clone();
        if 1.0 - vi <= vj {
            raise_i[i] = 1.0;
            raise_i[j] = vj - (1.0 - vi);
        } else {
            raise_i[i] = vi + vj;
            raise_i[j] = 0.0;
        }
        let mut lower_i = v.clone();
        if vi <= 1.0 - vj {
            lower_i[i] = 0.0;
            lower_i[j] = vj + vi;
        } else {
            lower_i[i] = vi - (1.0 - vj);
            lower_i[j] = 1.0;
        }
        for w in [&mut raise_i, &mut lower_i] {
            for u in [i, j] {
                if w[u] < INTEGRAL_EPS {
                    w[u] = 0.0;
                } else if w[u] > 1.0 - INTEGRAL_EPS {
                    w[u] = 1.0;
                }
            }
        }
        let (f_raise, f_lower) = (eval.value(&raise_i), eval.value(&lower_i));
        if f_raise >= f_lower {
            v = raise_i;
            history.push(f_raise);
        } else {
            v = lower_i;
            history.push(f_lower);
        }
    }

    let chosen: Vec<usize> = (0..v.len()).filter(|&u| v[u] == 1.0).collect();
    if chosen.len() != problem.m() {
        return Err(Error::NotBudgetFeasible { sum: v.iter().sum(), budget: problem.m() });
    }
    let mut state = SelectionState::new(problem);
    let mut gains = Vec::with_capacity(chosen.len());
    for &u in &chosen {
        gains.push(state.gain(u));
        state.add(u)?;
    }
    let res = SelectionResult::finish(problem, &chosen, gains, Algorithm::ContinuousDouble, Some(seed), started);
    Ok((res, history))
}

/// Continuous double greedy followed by pipage rounding.
pub fn continuous_double_select(problem: &SelectionProblem, steps: usize, seed: u64) -> Result<SelectionResult> {
    let started = Instant::now();
    let x = continuous_double_greedy(problem, steps)?;
    let mut res = pipage_round(problem, &x, seed)?;
    res.elapsed_secs = started.elapsed().as_secs_f64();
    Ok(res)
}
