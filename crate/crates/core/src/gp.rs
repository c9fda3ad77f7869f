//! Multi-objective genetic programming of control laws.
//!
//! The loop is the usual one: a random initial population is evaluated,
//! then each generation breeds `λ` offspring with varOr (one-point
//! crossover, uniform mutation, or reproduction), evaluates them, and keeps
//! `μ` survivors of parents ∪ offspring by NSGA-II. Objectives are the
//! control cost Γ1 and the tree length, both minimised. Trees with
//! constants get them fitted by Levenberg–Marquardt before costing.

use alloc::vec;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::analysis::{cost_desync, cost_sync};
use crate::dynsys::{integrate, Control, NetworkSpec, Tolerances, Trajectory};
use crate::expr::{generate, random_tree, ExpressionTree, GenMethod, PrimitiveSet};
use crate::linalg::{norm, solve, Matrix};
use crate::parallel::Parallelism;
use crate::{Error, Result, WORST_COST};

/// Cost vector `(Γ1, length)`.
pub type Costs = [f64; 2];

/// A candidate control law.
#[derive(Debug, Clone, PartialEq)]
pub struct Individual {
    pub tree: ExpressionTree,
    /// One value per constant of the primitive set.
    pub constants: Vec<f64>,
    pub costs: Option<Costs>,
}

impl Individual {
    pub fn new(tree: ExpressionTree, n_constants: usize) -> Self {
        Self { tree, constants: vec![1.0; n_constants], costs: None }
    }

    pub fn is_evaluated(&self) -> bool {
        self.costs.is_some()
    }

    pub fn costs(&self) -> Result<Costs> {
        self.costs.ok_or(Error::UnevaluatedIndividual)
    }
}

/// Settings of a GP run.
#[derive(Debug, Clone, PartialEq)]
pub struct GpConfig {
    pub population_size: usize,
    pub offspring: usize,
    pub max_generations: usize,
    pub crossover_prob: f64,
    pub mutation_prob: f64,
    pub tournament_size: usize,
    pub init_min_height: usize,
    pub init_max_height: usize,
    pub max_height_breeding: usize,
    pub seed: u64,
    /// Stop once any Γ1 is at or below this.
    pub stop_threshold: Option<f64>,
    pub lm: LmConfig,
}

impl Default for GpConfig {
    fn default() -> Self {
        Self {
            population_size: 500,
            offspring: 500,
            max_generations: 20,
            crossover_prob: 0.5,
            mutation_prob: 0.2,
            tournament_size: 2,
            init_min_height: 1,
            init_max_height: 4,
            max_height_breeding: 20,
            seed: 0,
            stop_threshold: None,
            lm: LmConfig::default(),
        }
    }
}

impl GpConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidConfig(m.into()));
        if self.population_size == 0 || self.offspring == 0 {
            return bad("population and offspring sizes must be at least 1");
        }
        if !(0.0..=1.0).contains(&self.crossover_prob)
            || !(0.0..=1.0).contains(&self.mutation_prob)
            || self.crossover_prob + self.mutation_prob > 1.0
        {
            return bad("crossover and mutation probabilities must be in [0, 1] and sum to at most 1");
        }
        if self.tournament_size == 0 {
            return bad("tournament size must be at least 1");
        }
        if self.init_min_height < 1 || self.init_min_height > self.init_max_height {
            return Err(Error::InvalidHeightRange { min: self.init_min_height, max: self.init_max_height });
        }
        if self.max_height_breeding < self.init_max_height {
            return bad("breeding height cap is below the initial maximum height");
        }
        Ok(())
    }
}

/// Γ1 of a control law; anything that fails must come back as
/// [`WORST_COST`], not panic.
pub trait Objective: Sync {
    fn cost(&self, tree: &ExpressionTree, constants: &[f64]) -> f64;
}

impl<F> Objective for F
where
    F: Fn(&ExpressionTree, &[f64]) -> f64 + Sync,
{
    fn cost(&self, tree: &ExpressionTree, constants: &[f64]) -> f64 {
        self(tree, constants)
    }
}

/// `Γ = φ(x(t_f)) + L[trajectory]`: a terminal part on the final state and
/// a running part on the whole sampled trajectory. Diverged or non-finite
/// results cost [`WORST_COST`].
#[derive(Debug, Clone, Copy)]
pub struct CostFunctional {
    pub terminal: fn(&[f64]) -> f64,
    pub running: fn(&Trajectory, f64) -> f64,
    /// Transient fraction handed to `running`.
    pub transient: f64,
}

fn no_terminal(_: &[f64]) -> f64 {
    0.0
}

impl CostFunctional {
    /// `|Ω0 − Ω1|`.
    pub fn sync(transient: f64) -> Self {
        Self { terminal: no_terminal, running: cost_sync, transient }
    }

    /// `exp(−|Ω0 − Ω1|)`.
    pub fn desync(transient: f64) -> Self {
        Self { terminal: no_terminal, running: cost_desync, transient }
    }

    pub fn evaluate(&self, traj: &Trajectory) -> f64 {
        if traj.diverged || traj.is_empty() {
            return WORST_COST;
        }
        let last = traj.sample(traj.len() - 1);
        let running = (self.running)(traj, self.transient);
        if running >= WORST_COST {
            return WORST_COST;
        }
        let v = (self.terminal)(last) + running;
        if v.is_finite() {
            v
        } else {
            WORST_COST
        }
    }
}

/// Γ1 by simulating the network with the control law in place.
#[derive(Debug, Clone)]
pub struct SimulationObjective {
    pub network: NetworkSpec,
    pub init: Vec<f64>,
    pub t0: f64,
    pub tn: f64,
    pub n: usize,
    pub tol: Tolerances,
    pub inputs: Vec<usize>,
    pub functional: CostFunctional,
}

impl SimulationObjective {
    pub fn simulate(&self, tree: &ExpressionTree, constants: &[f64]) -> Result<Trajectory> {
        let control = Control { tree: tree.clone(), constants: constants.to_vec(), inputs: self.inputs.clone() };
        let spec = self.network.clone().with_control(Some(control));
        integrate(&spec, &self.init, self.t0, self.tn, self.n, &self.tol)
    }
}

impl Objective for SimulationObjective {
    fn cost(&self, tree: &ExpressionTree, constants: &[f64]) -> f64 {
        match self.simulate(tree, constants) {
            Ok(traj) => self.functional.evaluate(&traj),
            Err(_) => WORST_COST,
        }
    }
}

/// Levenberg–Marquardt settings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LmConfig {
    pub max_iter: usize,
    /// Cap on residual evaluations, Jacobian columns included.
    pub max_evals: usize,
    pub ftol: f64,
    pub gtol: f64,
    /// Initial step bound is `step_factor · max(‖x0‖, 1)`, as in MINPACK.
    pub step_factor: f64,
}

impl Default for LmConfig {
    fn default() -> Self {
        Self { max_iter: 20, max_evals: 60, ftol: 1e-10, gtol: 0.0, step_factor: 100.0 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LmReport {
    pub x: Vec<f64>,
    pub residuals: Vec<f64>,
    pub evaluations: usize,
    pub converged: bool,
}

/// Minimises `½‖r(x)‖²` by Levenberg–Marquardt with a forward-difference
/// Jacobian. Only improving steps are accepted, so the returned point is
/// the last accepted iterate whether or not the solver converged.
pub fn levenberg_marquardt<F>(mut r: F, x0: &[f64], cfg: &LmConfig) -> LmReport
where
    F: FnMut(&[f64]) -> Vec<f64>,
{
    let p = x0.len();
    let mut x = x0.to_vec();
    let mut res = r(&x);
    let mut evals = 1usize;
    let half_sq = |v: &[f64]| 0.5 * v.iter().map(|a| a * a).sum::<f64>();
    let mut cost = half_sq(&res);
    let mut mu: Option<f64> = None;
    let mut radius = cfg.step_factor * norm(x0).max(1.0);
    let mut converged = false;

    'outer: for _ in 0..cfg.max_iter {
        if !cost.is_finite() || cost == 0.0 {
            converged = cost == 0.0;
            break;
        }
        if evals + p > cfg.max_evals {
            break;
        }
        let m = res.len();
        let mut jac = Matrix::zeros(m, p);
        for j in 0..p {
            let h = 1.4901161193847656e-8 * x[j].abs().max(1.0);
            let mut xh = x.clone();
            xh[j] += h;
            let rh = r(&xh);
            evals += 1;
            for i in 0..m {
                jac[(i, j)] = (rh[i] - res[i]) / h;
            }
        }
        let mut jtj = Matrix::zeros(p, p);
        let mut g = vec![0.0; p];
        for a in 0..p {
            for i in 0..m {
                g[a] += jac[(i, a)] * res[i];
            }
            for b in 0..p {
                for i in 0..m {
                    jtj[(a, b)] += jac[(i, a)] * jac[(i, b)];
                }
            }
        }
        if !g.iter().all(|v| v.is_finite()) || g.iter().fold(0.0f64, |acc, v| acc.max(v.abs())) <= cfg.gtol {
            converged = g.iter().all(|v| v.is_finite());
            break;
        }
        let diag_max = (0..p).fold(0.0f64, |acc, i| acc.max(jtj[(i, i)]));
        let mut lambda = *mu.get_or_insert(1e-3 * diag_max.max(1e-12));
        loop {
            if evals >= cfg.max_evals {
                break 'outer;
            }
            let mut a = jtj.clone();
            for i in 0..p {
                a[(i, i)] += lambda * jtj[(i, i)].max(1e-12 * diag_max.max(1e-300)) + lambda * 1e-12;
            }
            let neg: Vec<f64> = g.iter().map(|v| -v).collect();
            let Ok(mut delta) = solve(&a, &neg) else {
                lambda *= 10.0;
                continue;
            };
            let len = norm(&delta);
            if len > radius {
                delta.iter_mut().for_each(|d| *d *= radius / len);
            }
            let step = len.min(radius);
            let xn: Vec<f64> = x.iter().zip(&delta).map(|(a, d)| a + d).collect();
            let rn = r(&xn);
            evals += 1;
            let cn = half_sq(&rn);
            if cn.is_finite() && cn < cost {
                let rel = (cost - cn) / cost;
                x = xn;
                res = rn;
                cost = cn;
                mu = Some(lambda / 3.0);
                radius = radius.max(2.0 * step);
                if rel < cfg.ftol {
                    converged = true;
                    break 'outer;
                }
                break;
            }
            lambda *= 4.0;
            radius = 0.5 * step;
            if lambda > 1e16 * diag_max.max(1.0) {
                break 'outer;
            }
        }
    }
    LmReport { x, residuals: res, evaluations: evals, converged }
}

/// Fits the individual's constants with Levenberg–Marquardt, using Γ1 as a
/// single residual and 1.0 as the initial value of every constant, then
/// sets its costs. Trees without constants are just costed.
pub fn optimize_constants<O: Objective + ?Sized>(ind: &Individual, objective: &O, cfg: &LmConfig) -> Individual {
    let used = ind.tree.constant_indices();
    let mut constants = vec![1.0; ind.constants.len()];
    let len = ind.tree.len() as f64;
    if used.is_empty() {
        let c = sanitize(objective.cost(&ind.tree, &constants));
        return Individual { tree: ind.tree.clone(), constants, costs: Some([c, len]) };
    }
    let used: Vec<usize> = used.into_iter().collect();
    let rep = levenberg_marquardt(
        |x| {
            let mut k = constants.clone();
            for (slot, v) in used.iter().zip(x) {
                k[*slot] = *v;
            }
            let c = sanitize(objective.cost(&ind.tree, &k));
            vec![c]
        },
        &vec![1.0; used.len()],
        cfg,
    );
    for (slot, v) in used.iter().zip(&rep.x) {
        constants[*slot] = *v;
    }
    let cost = sanitize(rep.residuals[0]);
    Individual { tree: ind.tree.clone(), constants, costs: Some([cost, len]) }
}

fn sanitize(c: f64) -> f64 {
    if c.is_finite() && c < WORST_COST {
        c
    } else {
        WORST_COST
    }
}

/// True if `a` Pareto-dominates `b` (minimisation).
pub fn dominates(a: &Costs, b: &Costs) -> bool {
    a.iter().zip(b).all(|(x, y)| x <= y) && a.iter().zip(b).any(|(x, y)| x < y)
}

fn beats(a: &Costs, b: &Costs) -> bool {
    if dominates(a, b) {
        return true;
    }
    if dominates(b, a) {
        return false;
    }
    a[0] < b[0] || (a[0] == b[0] && a[1] < b[1])
}

/// `count` tournament winners among `size` uniform draws each. The winner
/// is the dominating draw, else lower Γ1, else lower length, else the
/// earlier draw.
pub fn tournament_select<R: Rng + ?Sized>(
    rng: &mut R,
    pop: &[Individual],
    count: usize,
    size: usize,
) -> Result<Vec<Individual>> {
    if pop.is_empty() {
        return Err(Error::InvalidConfig("tournament on an empty population".into()));
    }
    let costs: Vec<Costs> = pop.iter().map(Individual::costs).collect::<Result<_>>()?;
    let size = size.max(1);
    let mut out = Vec::with_capacity(count);
    for _ in 0..count {
        let mut best = rng.random_range(0..pop.len());
        for _ in 1..size {
            let cand = rng.random_range(0..pop.len());
            if beats(&costs[cand], &costs[best]) {
                best = cand;
            }
        }
        out.push(pop[best].clone());
    }
    Ok(out)
}

/// Swaps the subtree at `i` of `a` with the subtree at `j` of `b`.
pub fn crossover_at(a: &ExpressionTree, b: &ExpressionTree, i: usize, j: usize) -> (ExpressionTree, ExpressionTree) {
    let sa = &a.nodes()[i..a.subtree_end(i)];
    let sb = &b.nodes()[j..b.subtree_end(j)];
    (a.replace_subtree(i, sb), b.replace_subtree(j, sa))
}

/// One-point crossover: a uniformly chosen subtree of each parent is
/// swapped. An offspring taller than `max_h` is replaced by its parent.
/// Two single-leaf parents are returned unchanged.
pub fn crossover_one_point<R: Rng + ?Sized>(
    rng: &mut R,
    a: &ExpressionTree,
    b: &ExpressionTree,
    max_h: usize,
) -> (ExpressionTree, ExpressionTree) {
    if a.len() < 2 && b.len() < 2 {
        return (a.clone(), b.clone());
    }
    let i = rng.random_range(0..a.len());
    let j = rng.random_range(0..b.len());
    let (x, y) = crossover_at(a, b, i, j);
    let x = if x.height() > max_h { a.clone() } else { x };
    let y = if y.height() > max_h { b.clone() } else { y };
    (x, y)
}

/// Uniform mutation: a uniformly chosen node's subtree is replaced by a
/// fresh grow-tree of height 0 to 2. Over-tall results fall back to the
/// parent.
pub fn mutate_uniform<R: Rng + ?Sized>(rng: &mut R, a: &ExpressionTree, pset: &PrimitiveSet, max_h: usize) -> ExpressionTree {
    let i = rng.random_range(0..a.len());
    let fresh = generate(rng, pset, 0, 2, GenMethod::Grow);
    let m = a.replace_subtree(i, &fresh);
    if m.height() > max_h {
        a.clone()
    } else {
        m
    }
}

/// Which varOr branch produced an offspring.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Variation {
    Crossover,
    Mutation,
    Reproduction,
}

/// varOr breeding of exactly `lambda` offspring. Crossover keeps the first
/// child; reproduction copies a parent including its costs.
pub fn breed_var_or<R: Rng + ?Sized>(
    rng: &mut R,
    parents: &[Individual],
    lambda: usize,
    cfg: &GpConfig,
    pset: &PrimitiveSet,
) -> Vec<(Individual, Variation)> {
    if parents.is_empty() {
        return Vec::new();
    }
    let nc = pset.constants().len();
    let mut out = Vec::with_capacity(lambda);
    for _ in 0..lambda {
        let op: f64 = rng.random();
        if op < cfg.crossover_prob {
            let i = rng.random_range(0..parents.len());
            let j = if parents.len() > 1 {
                let j = rng.random_range(0..parents.len() - 1);
                if j >= i {
                    j + 1
                } else {
                    j
                }
            } else {
                i
            };
            let (child, _) = crossover_one_point(rng, &parents[i].tree, &parents[j].tree, cfg.max_height_breeding);
            out.push((Individual::new(child, nc), Variation::Crossover));
        } else if op < cfg.crossover_prob + cfg.mutation_prob {
            let i = rng.random_range(0..parents.len());
            let child = mutate_uniform(rng, &parents[i].tree, pset, cfg.max_height_breeding);
            out.push((Individual::new(child, nc), Variation::Mutation));
        } else {
            let i = rng.random_range(0..parents.len());
            out.push((parents[i].clone(), Variation::Reproduction));
        }
    }
    out
}

/// Nondominated fronts as index lists, best first.
pub fn nondominated_fronts(costs: &[Costs]) -> Vec<Vec<usize>> {
    let n = costs.len();
    let mut dominated_by = vec![0usize; n];
    let mut dominates_list: Vec<Vec<usize>> = vec![Vec::new(); n];
    for i in 0..n {
        for j in 0..n {
            if i != j && dominates(&costs[i], &costs[j]) {
                dominates_list[i].push(j);
            } else if i != j && dominates(&costs[j], &costs[i]) {
                dominated_by[i] += 1;
            }
        }
    }
    let mut fronts = Vec::new();
    let mut current: Vec<usize> = (0..n).filter(|&i| dominated_by[i] == 0).collect();
    while !current.is_empty() {
        let mut next = Vec::new();
        for &i in &current {
            for &j in &dominates_list[i] {
                dominated_by[j] -= 1;
                if dominated_by[j] == 0 {
                    next.push(j);
                }
            }
        }
        next.sort_unstable();
        fronts.push(current);
        current = next;
    }
    fronts
}

/// Crowding distance of each member of one front (same order as `front`).
pub fn crowding_distance(costs: &[Costs], front: &[usize]) -> Vec<f64> {
    let n = front.len();
    let mut dist = vec![0.0; n];
    if n <= 2 {
        return vec![f64::INFINITY; n];
    }
    for obj in 0..2 {
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| costs[front[a]][obj].total_cmp(&costs[front[b]][obj]).then(a.cmp(&b)));
        let lo = costs[front[order[0]]][obj];
        let hi = costs[front[order[n - 1]]][obj];
        dist[order[0]] = f64::INFINITY;
        dist[order[n - 1]] = f64::INFINITY;
        let range = hi - lo;
        if !(range > 0.0) || !range.is_finite() {
            continue;
        }
        for w in 1..n - 1 {
            let gap = costs[front[order[w + 1]]][obj] - costs[front[order[w - 1]]][obj];
            dist[order[w]] += gap / range;
        }
    }
    dist
}

/// NSGA-II environmental selection of `mu` individuals. Output is ordered
/// by front rank, then descending crowding distance, then `(Γ1, length,
/// input index)`.
pub fn nsga2_select(pop: &[Individual], mu: usize) -> Result<Vec<Individual>> {
    Ok(nsga2_indices(pop, mu)?.into_iter().map(|i| pop[i].clone()).collect())
}

/// Indices chosen by [`nsga2_select`], in output order.
pub fn nsga2_indices(pop: &[Individual], mu: usize) -> Result<Vec<usize>> {
    let costs: Vec<Costs> = pop.iter().map(Individual::costs).collect::<Result<_>>()?;
    let mut chosen = Vec::with_capacity(mu.min(pop.len()));
    for front in nondominated_fronts(&costs) {
        if chosen.len() >= mu {
            break;
        }
        let dist = crowding_distance(&costs, &front);
        let mut order: Vec<usize> = (0..front.len()).collect();
        order.sort_by(|&a, &b| {
            let (ia, ib) = (front[a], front[b]);
            dist[b]
                .total_cmp(&dist[a])
                .then(costs[ia][0].total_cmp(&costs[ib][0]))
                .then(costs[ia][1].total_cmp(&costs[ib][1]))
                .then(ia.cmp(&ib))
        });
        for o in order {
            if chosen.len() == mu {
                break;
            }
            chosen.push(front[o]);
        }
    }
    Ok(chosen)
}

/// Per-generation summary.
#[derive(Debug, Clone, PartialEq)]
pub struct GenerationStats {
    /// 0 is the initial population.
    pub generation: usize,
    pub best_cost: f64,
    pub median_cost: f64,
    pub front_size: usize,
    /// Individuals evaluated in this generation.
    pub evaluations: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GpResult {
    /// Distinct nondominated individuals of the final population, sorted
    /// by Γ1 then length.
    pub front: Vec<Individual>,
    pub history: Vec<GenerationStats>,
    pub population: Vec<Individual>,
}

/// Evaluates every unevaluated individual (constants fitted first).
pub fn evaluate_all<O: Objective, P: Parallelism>(pop: Vec<Individual>, objective: &O, lm: &LmConfig, par: &P) -> (Vec<Individual>, usize) {
    let todo = pop.iter().filter(|i| !i.is_evaluated()).count();
    let out = par.map(&pop, |ind| if ind.is_evaluated() { ind.clone() } else { optimize_constants(ind, objective, lm) });
    (out, todo)
}

fn stats(pop: &[Individual], generation: usize, evaluations: usize) -> GenerationStats {
    let costs: Vec<Costs> = pop.iter().map(|i| i.costs.expect("evaluated")).collect();
    let mut g: Vec<f64> = costs.iter().map(|c| c[0]).collect();
    g.sort_by(f64::total_cmp);
    let median = if g.len() % 2 == 1 { g[g.len() / 2] } else { 0.5 * (g[g.len() / 2 - 1] + g[g.len() / 2]) };
    GenerationStats {
        generation,
        best_cost: g[0],
        median_cost: median,
        front_size: nondominated_fronts(&costs).first().map_or(0, Vec::len),
        evaluations,
    }
}

/// The nondominated members of `pop`, deduplicated and sorted by Γ1 then
/// length.
pub fn pareto_front(pop: &[Individual]) -> Vec<Individual> {
    let costs: Vec<Costs> = pop.iter().filter_map(|i| i.costs).collect();
    if costs.len() != pop.len() {
        return Vec::new();
    }
    let mut front: Vec<Individual> = Vec::new();
    if let Some(first) = nondominated_fronts(&costs).into_iter().next() {
        for i in first {
            let cand = &pop[i];
            if !front.iter().any(|f| f.tree == cand.tree && f.costs == cand.costs) {
                front.push(cand.clone());
            }
        }
    }
    front.sort_by(|a, b| {
        let (ca, cb) = (a.costs.expect("evaluated"), b.costs.expect("evaluated"));
        ca[0].total_cmp(&cb[0]).then(ca[1].total_cmp(&cb[1]))
    });
    front
}

/// Runs the GP search. Results depend only on `cfg` (including the seed),
/// not on how `par` schedules evaluations.
pub fn run<O: Objective, P: Parallelism>(cfg: &GpConfig, pset: &PrimitiveSet, objective: &O, par: &P) -> Result<GpResult> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let nc = pset.constants().len();
    let mut init = Vec::with_capacity(cfg.population_size);
    for _ in 0..cfg.population_size {
        let tree = random_tree(&mut rng, pset, cfg.init_min_height, cfg.init_max_height, GenMethod::HalfAndHalf)?;
        init.push(Individual::new(tree, nc));
    }
    let (mut pop, evals) = evaluate_all(init, objective, &cfg.lm, par);
    let mut history = vec![stats(&pop, 0, evals)];

    let good = |pop: &[Individual]| match cfg.stop_threshold {
        Some(th) => pop.iter().any(|i| i.costs.is_some_and(|c| c[0] <= th)),
        None => false,
    };

    for generation in 1..=cfg.max_generations {
        let parents = tournament_select(&mut rng, &pop, cfg.population_size, cfg.tournament_size)?;
        let offspring: Vec<Individual> =
            breed_var_or(&mut rng, &parents, cfg.offspring, cfg, pset).into_iter().map(|(i, _)| i).collect();
        let (offspring, evals) = evaluate_all(offspring, objective, &cfg.lm, par);
        let mut pool = pop;
        pool.extend(offspring);
        pop = nsga2_select(&pool, cfg.population_size)?;
        history.push(stats(&pop, generation, evals));
        if good(&pop) {
            break;
        }
    }
    Ok(GpResult { front: pareto_front(&pop), history, population: pop })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::parse;
    use crate::parallel::Sequential;

    fn ind(text: &str, costs: Costs) -> Individual {
        let ps = PrimitiveSet::two_oscillator_default();
        Individual { tree: parse(text, &ps).unwrap(), constants: vec![1.0], costs: Some(costs) }
    }

    #[test]
    fn tournament_basics() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let one = [ind("x0d", [1.0, 1.0])];
        let picks = tournament_select(&mut rng, &one, 5, 2).unwrap();
        assert!(picks.iter().all(|p| p == &one[0]));
        let two = [ind("x0d", [5.0, 2.0]), ind("x1d", [0.0, 2.0])];
        // whenever both are drawn the dominating one wins, so the loser can
        // only appear when drawn twice (probability 1/4)
        let picks = tournament_select(&mut rng, &two, 4000, 2).unwrap();
        let losers = picks.iter().filter(|p| p.costs == Some([5.0, 2.0])).count();
        assert!((losers as f64 - 1000.0).abs() < 4.0 * (4000.0f64 * 0.25 * 0.75).sqrt(), "{losers}");
        let unevaluated = [Individual::new(parse("x0d", &PrimitiveSet::two_oscillator_default()).unwrap(), 1)];
        assert_eq!(tournament_select(&mut rng, &unevaluated, 1, 2), Err(Error::UnevaluatedIndividual));
    }

    #[test]
    fn lm_steps_are_bounded() {
        // nearly flat residual: the Gauss-Newton step would be about -1e6
        let mut tried = Vec::new();
        let rep = levenberg_marquardt(
            |x| {
                tried.push(x[0]);
                vec![1.0 + 1e-6 * x[0]]
            },
            &[1.0],
            &LmConfig::default(),
        );
        // tried = [x0, x0 + h, first trial, ...]
        assert!((tried[2] - 1.0).abs() <= 100.0 * (1.0 + 1e-12), "{tried:?}");
        // the bound may at most double per accepted step
        assert!((tried[4] - tried[2]).abs() <= 200.0 * (1.0 + 1e-9), "{tried:?}");
        assert!(rep.x[0] < 1.0);
    }

    #[test]
    fn crossover_edge_cases() {
        let ps = PrimitiveSet::two_oscillator_default();
        let a = parse("x0d", &ps).unwrap();
        let b = parse("x1d", &ps).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert_eq!(crossover_one_point(&mut rng, &a, &b, 20), (a.clone(), b.clone()));
        let a = parse("x0d + x1d", &ps).unwrap();
        let b = parse("cos(x0d)", &ps).unwrap();
        assert_eq!(crossover_at(&a, &b, 0, 0), (b.clone(), a.clone()));
    }

    #[test]
    fn mutation_of_single_leaf_replaces_everything() {
        let ps = PrimitiveSet::two_oscillator_default();
        let a = parse("x0d", &ps).unwrap();
        let mut seen_other = false;
        for s in 0..50 {
            let m = mutate_uniform(&mut ChaCha8Rng::seed_from_u64(s), &a, &ps, 20);
            seen_other |= m != a;
            assert!(m.height() <= 2);
        }
        assert!(seen_other);
    }

    #[test]
    fn var_or_edge_cases() {
        let ps = PrimitiveSet::two_oscillator_default();
        let parents = [ind("x0d", [1.0, 1.0]), ind("x1d", [2.0, 1.0])];
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let cfg = GpConfig { crossover_prob: 0.0, mutation_prob: 0.0, ..Default::default() };
        assert!(breed_var_or(&mut rng, &parents, 0, &cfg, &ps).is_empty());
        let out = breed_var_or(&mut rng, &parents, 10, &cfg, &ps);
        assert_eq!(out.len(), 10);
        assert!(out.iter().all(|(i, v)| *v == Variation::Reproduction && parents.contains(i)));
    }

    #[test]
    fn nsga2_basics() {
        let all = [ind("x0d", [0.0, 3.0]), ind("x1d", [1.0, 2.0]), ind("k", [2.0, 1.0])];
        assert_eq!(nsga2_select(&all, 3).unwrap().len(), 3);
        let pair = [ind("x1d", [1.0, 3.0]), ind("x0d", [0.0, 2.0])];
        assert_eq!(nsga2_select(&pair, 1).unwrap(), vec![pair[1].clone()]);
    }

    #[test]
    fn lm_finds_quadratic_minimum() {
        let rep = levenberg_marquardt(|x| vec![x[0] - 3.0], &[1.0], &LmConfig::default());
        assert!((rep.x[0] - 3.0).abs() < 1e-6);
        // (k − 3)² as a single residual: Γ1 itself, not its square root
        let ps = PrimitiveSet::two_oscillator_default();
        let tree = parse("k", &ps).unwrap();
        let obj = |_: &ExpressionTree, k: &[f64]| (k[0] - 3.0) * (k[0] - 3.0);
        let out = optimize_constants(&Individual::new(tree, 1), &obj, &LmConfig { max_evals: 500, max_iter: 200, ..Default::default() });
        assert!((out.constants[0] - 3.0).abs() < 1e-6, "{:?}", out.constants);
    }

    #[test]
    fn constant_free_tree_is_only_costed() {
        let ps = PrimitiveSet::two_oscillator_default();
        let tree = parse("x0d", &ps).unwrap();
        let obj = |_: &ExpressionTree, _: &[f64]| 0.5;
        let out = optimize_constants(&Individual::new(tree.clone(), 1), &obj, &LmConfig::default());
        assert_eq!(out.tree, tree);
        assert_eq!(out.constants, vec![1.0]);
        assert_eq!(out.costs, Some([0.5, 1.0]));
    }

    #[test]
    fn zero_generations_keeps_initial_population() {
        let ps = PrimitiveSet::two_oscillator_default();
        let cfg = GpConfig { population_size: 20, offspring: 20, max_generations: 0, seed: 5, ..Default::default() };
        let obj = |_: &ExpressionTree, _: &[f64]| 1.0;
        let r = run(&cfg, &ps, &obj, &Sequential).unwrap();
        assert_eq!(r.history.len(), 1);
        assert_eq!(r.population.len(), 20);
        // constant cost: the front is the shortest trees
        let min_len = r.population.iter().map(|i| i.tree.len()).min().unwrap();
        assert!(r.front.iter().all(|i| i.tree.len() == min_len));
    }
}
