//! The four subcommands. Each one reads a resolved config, writes its CSV
//! files into `opts.out` and prints a short summary to stderr.

use std::path::PathBuf;

use synctrl_core::analysis::{
    arnold_sweep, frequency_pair, kuramoto_order, order_tail_stats, SweepSetup,
};
use synctrl_core::continuation::{
    continue_branch, scan_for_seed, seed_branch, stationary_states, trace_contour, Direction, PairSystem,
    Parameter, PlaneRange, StepConfig,
};
use synctrl_core::averaging::AveragedState;
use synctrl_core::dynsys::{integrate, Control, NetworkSpec, OscillatorParams};
use synctrl_core::expr::{parse, PrimitiveSet};
use synctrl_core::gp::{self, CostFunctional, GpConfig, LmConfig, SimulationObjective};
use synctrl_core::parallel::Parallelism;

use crate::config::{
    BranchTask, ContinuationSection, CostKind, Directions, ExperimentConfig, Seed, SeedName, SystemConfig, Which,
};
use crate::error::CliError;
use crate::output::{self, num, Header};
use crate::pool::Pool;

/// Command-line settings shared by every command.
#[derive(Debug, Clone)]
pub struct Options {
    pub out: PathBuf,
    pub seed: Option<u64>,
    pub jobs: Option<usize>,
    pub banner: bool,
    /// `simulate` only: overrides `simulate.expression`.
    pub expr: Option<String>,
}

impl Default for Options {
    fn default() -> Self {
        Self { out: PathBuf::from("."), seed: None, jobs: None, banner: true, expr: None }
    }
}

/// Folds command-line overrides into the config, so that the hash covers
/// everything that affects the data rows.
pub fn resolve(mut cfg: ExperimentConfig, opts: &Options) -> ExperimentConfig {
    if let (Some(seed), Some(gp)) = (opts.seed, cfg.gp.as_mut()) {
        gp.seed = seed;
    }
    if let Some(e) = &opts.expr {
        let sim = cfg.simulate.get_or_insert_with(|| crate::config::SimulateSection {
            expression: None,
            constants: Vec::new(),
            stride: 1,
        });
        sim.expression = Some(e.clone());
    }
    cfg
}

fn header<'a>(command: &'a str, hash: &'a str, opts: &Options) -> Header<'a> {
    Header { command, config_hash: hash, banner: opts.banner }
}

fn pair(sys: &SystemConfig) -> NetworkSpec {
    let osc = |omega: f64| OscillatorParams { omega, alpha: sys.alpha.get(), beta: sys.beta.get() };
    NetworkSpec::diffusive_pair(osc(sys.omega0.get()), osc(sys.omega1.get()), sys.c.get())
}

pub fn sweep(cfg: &ExperimentConfig, opts: &Options) -> Result<Vec<PathBuf>, CliError> {
    let sw = cfg.sweep.as_ref().ok_or_else(|| CliError::Config("missing [sweep] section".into()))?;
    let dws = sw.delta_omega.values()?;
    let cs = sw.c.values()?;
    if cs.is_empty() || dws.is_empty() {
        return Err(CliError::Config("sweep: c and delta_omega need at least one value".into()));
    }
    let sys = &cfg.system;
    let t0 = sys.t0.get();
    let tn = match sw.periods {
        Some(p) => t0 + p.get() * 2.0 * std::f64::consts::PI / sys.omega0.get(),
        None => sys.tn(),
    };
    let setup = SweepSetup {
        omega0: sys.omega0.get(),
        alpha: sys.alpha.get(),
        beta: sys.beta.get(),
        init: sys.init(),
        t0,
        tn,
        n: sw.n.unwrap_or(sys.n),
        tol: sys.tolerances(),
        transient: sys.transient.get(),
        threshold: sw.threshold.get(),
    };
    let pool = Pool::new(opts.jobs)?;
    let res = arnold_sweep(&setup, &dws, &cs, &pool);

    let hash = cfg.hash();
    let cols = ["delta_omega", "c", "delta_big_omega", "synchronized", "diverged"];
    let (mut w, path) = output::create(&opts.out, "sweep.csv", &header("sweep", &hash, opts), &cols)?;
    for p in &res.points {
        w.write_record([
            num(p.delta_omega),
            num(p.c),
            num(p.delta_big_omega),
            (p.synchronized as u8).to_string(),
            (p.diverged as u8).to_string(),
        ])?;
    }
    w.flush()?;
    let n_sync = res.points.iter().filter(|p| p.synchronized).count();
    let n_div = res.points.iter().filter(|p| p.diverged).count();
    eprintln!("sweep: {} points, {n_sync} synchronized, {n_div} failed", res.points.len());
    Ok(vec![path])
}

fn objective(cfg: &ExperimentConfig, kind: CostKind) -> Result<SimulationObjective, CliError> {
    let sys = &cfg.system;
    let transient = sys.transient.get();
    Ok(SimulationObjective {
        network: pair(sys),
        init: sys.init().to_vec(),
        t0: sys.t0.get(),
        tn: sys.tn(),
        n: sys.n,
        tol: sys.tolerances(),
        inputs: cfg.primitives.inputs()?,
        functional: match kind {
            CostKind::Sync => CostFunctional::sync(transient),
            CostKind::Desync => CostFunctional::desync(transient),
        },
    })
}

pub fn gp(cfg: &ExperimentConfig, opts: &Options) -> Result<Vec<PathBuf>, CliError> {
    let g = cfg.gp.as_ref().ok_or_else(|| CliError::Config("missing [gp] section".into()))?;
    let pset = cfg.primitives.primitive_set()?;
    let gcfg = GpConfig {
        population_size: g.population,
        offspring: g.offspring.unwrap_or(g.population),
        max_generations: g.generations,
        crossover_prob: g.crossover_prob.get(),
        mutation_prob: g.mutation_prob.get(),
        tournament_size: g.tournament_size,
        init_min_height: g.init_min_height,
        init_max_height: g.init_max_height,
        max_height_breeding: g.max_height,
        seed: g.seed,
        stop_threshold: g.stop_threshold(),
        lm: LmConfig { max_iter: g.lm_max_iter, max_evals: g.lm_max_evals, ..LmConfig::default() },
    };
    gcfg.validate().map_err(|e| CliError::Config(format!("gp: {e}")))?;
    let obj = objective(cfg, g.cost)?;
    let pool = Pool::new(opts.jobs)?;
    let res = gp::run(&gcfg, &pset, &obj, &pool).map_err(|e| CliError::Run(e.to_string()))?;

    let hash = cfg.hash();
    let h = header("gp", &hash, opts);
    let (mut w, front_path) =
        output::create(&opts.out, "front.csv", &h, &["cost", "length", "expression", "folded", "constants"])?;
    for ind in &res.front {
        let costs = ind.costs.expect("front members are evaluated");
        let folded = match ind.tree.fold_constants(&ind.constants) {
            Ok(t) => t.to_prefix(&pset),
            Err(_) => String::new(),
        };
        let consts: Vec<String> = ind.constants.iter().map(|&c| num(c)).collect();
        w.write_record([
            num(costs[0]),
            (costs[1] as usize).to_string(),
            ind.tree.to_prefix(&pset),
            folded,
            consts.join(";"),
        ])?;
    }
    w.flush()?;
    let (mut w, hist_path) = output::create(
        &opts.out,
        "history.csv",
        &h,
        &["generation", "best_cost", "median_cost", "front_size", "evaluations"],
    )?;
    for s in &res.history {
        w.write_record([
            s.generation.to_string(),
            num(s.best_cost),
            num(s.median_cost),
            s.front_size.to_string(),
            s.evaluations.to_string(),
        ])?;
    }
    w.flush()?;
    if let Some(best) = res.front.first() {
        eprintln!(
            "gp: {} generations, best cost {} for {}",
            res.history.len() - 1,
            num(best.costs.expect("evaluated")[0]),
            best.tree.to_prefix(&pset)
        );
    }
    Ok(vec![front_path, hist_path])
}

/// Parses the control law against the configured primitive set.
pub fn control_law(cfg: &ExperimentConfig, pset: &PrimitiveSet) -> Result<Control, CliError> {
    let sim = cfg.simulate.as_ref();
    let text = sim
        .and_then(|s| s.expression.clone())
        .ok_or_else(|| CliError::Config("simulate: no expression (set simulate.expression or pass --expr)".into()))?;
    let tree = parse(&text, pset).map_err(|e| CliError::Expression(format!("'{text}': {e}")))?;
    let nc = pset.constants().len();
    let constants: Vec<f64> = match sim.map(|s| s.constants.as_slice()).unwrap_or(&[]) {
        [] => vec![1.0; nc],
        v if v.len() == nc => v.iter().map(|c| c.get()).collect(),
        v => {
            return Err(CliError::Config(format!("simulate: {} constant values given, the set has {nc}", v.len())));
        }
    };
    Ok(Control { tree, constants, inputs: cfg.primitives.inputs()? })
}

pub fn simulate(cfg: &ExperimentConfig, opts: &Options) -> Result<Vec<PathBuf>, CliError> {
    let pset = cfg.primitives.primitive_set()?;
    let control = control_law(cfg, &pset)?;
    let stride = cfg.simulate.as_ref().map_or(1, |s| s.stride);
    if stride == 0 {
        return Err(CliError::Config("simulate: stride must be at least 1".into()));
    }
    let sys = &cfg.system;
    let spec = pair(sys).with_control(Some(control));
    let traj = integrate(&spec, &sys.init(), sys.t0.get(), sys.tn(), sys.n, &sys.tolerances())
        .map_err(|e| CliError::Config(e.to_string()))?;
    let transient = sys.transient.get();

    let hash = cfg.hash();
    let h = header("simulate", &hash, opts);
    let (mut w, traj_path) = output::create(&opts.out, "trajectory.csv", &h, &["t", "x0", "x0d", "x1", "x1d"])?;
    for j in (0..traj.len()).step_by(stride) {
        let s = traj.sample(j);
        w.write_record([num(traj.t[j]), num(s[0]), num(s[1]), num(s[2]), num(s[3])])?;
    }
    w.flush()?;

    let r = kuramoto_order(&traj).unwrap_or_default();
    let (mut w, kur_path) = output::create(&opts.out, "kuramoto.csv", &h, &["t", "r"])?;
    for (j, rv) in r.iter().enumerate().step_by(stride) {
        w.write_record([num(traj.t[j]), num(*rv)])?;
    }
    w.flush()?;

    let (w0, w1) = frequency_pair(&traj, transient).unwrap_or((f64::NAN, f64::NAN));
    let sync = CostFunctional::sync(transient).evaluate(&traj);
    let desync = CostFunctional::desync(transient).evaluate(&traj);
    let (r_mean, r_sd) = if r.is_empty() { (f64::NAN, f64::NAN) } else { order_tail_stats(&r, 0.25) };
    let (mut w, cost_path) = output::create(
        &opts.out,
        "costs.csv",
        &h,
        &["omega0", "omega1", "cost_sync", "cost_desync", "diverged", "r_tail_mean", "r_tail_sd"],
    )?;
    w.write_record([
        num(w0),
        num(w1),
        num(sync),
        num(desync),
        (traj.diverged as u8).to_string(),
        num(r_mean),
        num(r_sd),
    ])?;
    w.flush()?;
    eprintln!("simulate: Ω0 = {}, Ω1 = {}, |Ω0 − Ω1| cost {}, exp(−|ΔΩ|) cost {}", num(w0), num(w1), num(sync), num(desync));
    Ok(vec![traj_path, kur_path, cost_path])
}

fn directions(d: Directions) -> &'static [Direction] {
    match d {
        Directions::Both => &[Direction::Increasing, Direction::Decreasing],
        Directions::Increasing => &[Direction::Increasing],
        Directions::Decreasing => &[Direction::Decreasing],
    }
}

fn dir_tag(d: Direction) -> &'static str {
    match d {
        Direction::Increasing => "increasing",
        Direction::Decreasing => "decreasing",
    }
}

fn step_config(sec: &ContinuationSection) -> Result<StepConfig, CliError> {
    let mut s = StepConfig::default();
    if let Some(v) = sec.ds_init {
        s.ds_init = v.get();
    }
    if let Some(v) = sec.ds_max {
        s.ds_max = v.get();
    }
    if let Some(v) = sec.ds_min {
        s.ds_min = v.get();
    }
    if let Some(v) = sec.max_points {
        s.max_points = v;
    }
    if !(s.ds_min > 0.0 && s.ds_min <= s.ds_init && s.ds_init <= s.ds_max) {
        return Err(CliError::Config("continuation: need 0 < ds_min ≤ ds_init ≤ ds_max".into()));
    }
    Ok(s)
}

/// One branch to trace: task, fixed value, root index, start.
struct BranchJob {
    task: usize,
    fixed: f64,
    root: usize,
    param: f64,
    state: AveragedState,
    direction: Direction,
}

fn plane(active: Which, param: f64, fixed: f64) -> (f64, f64) {
    match active {
        Which::C => (param, fixed),
        Which::K => (fixed, param),
    }
}

fn parameter(w: Which) -> Parameter {
    match w {
        Which::C => Parameter::C,
        Which::K => Parameter::K,
    }
}

fn which_tag(w: Which) -> &'static str {
    match w {
        Which::C => "c",
        Which::K => "k",
    }
}

/// Seeds for one `(task, fixed)` member: the start parameter and one or
/// more stationary states there.
fn seeds(sys: &PairSystem, t: &BranchTask, fixed: f64, cfg: &StepConfig) -> Result<(f64, Vec<AveragedState>), String> {
    let range = (t.range[0].get(), t.range[1].get());
    let start = t.start.map_or(range.0, |s| s.get());
    let (c, k) = plane(t.active, start, fixed);
    let found = if t.all_roots {
        stationary_states(sys, c, k, &cfg.newton)
    } else {
        seed_branch(sys, c, k, t.seed.strategy(), &cfg.newton).map(|s| vec![s]).unwrap_or_default()
    };
    if !found.is_empty() {
        return Ok((start, found));
    }
    // nothing at the start: fall back to the first parameter value with a root
    if t.start.is_none() && matches!(t.seed, Seed::Named(SeedName::Multistart)) {
        if let Some((v, s)) = scan_for_seed(sys, parameter(t.active), fixed, range, 41, &cfg.newton) {
            return Ok((v, vec![s]));
        }
    }
    Err(format!("no stationary state at {}={}", which_tag(t.active), num(start)))
}

pub fn continuation(cfg: &ExperimentConfig, opts: &Options) -> Result<Vec<PathBuf>, CliError> {
    let sec = cfg.continuation.as_ref().ok_or_else(|| CliError::Config("missing [continuation] section".into()))?;
    if sec.branch.is_empty() && sec.contour.is_empty() {
        return Err(CliError::Config("continuation: no branch or contour tasks".into()));
    }
    let step = step_config(sec)?;
    let sys = PairSystem {
        alpha: cfg.system.alpha.get(),
        beta: cfg.system.beta.get(),
        delta_omega: sec.delta_omega.map_or(cfg.system.omega1.get() - cfg.system.omega0.get(), |d| d.get()),
        convention: sec.convention.into(),
    };
    for (i, t) in sec.branch.iter().enumerate() {
        let (lo, hi) = (t.range[0].get(), t.range[1].get());
        if t.fixed.is_empty() || !(lo < hi) {
            return Err(CliError::Config(format!("continuation.branch[{i}]: need fixed values and range lo < hi")));
        }
        if let Some(s) = t.start {
            if !(lo..=hi).contains(&s.get()) {
                return Err(CliError::Config(format!("continuation.branch[{i}]: start outside range")));
            }
        }
    }
    for (i, t) in sec.contour.iter().enumerate() {
        if t.levels.is_empty() || !(t.c_range[0].get() < t.c_range[1].get()) || !(t.k_range[0].get() < t.k_range[1].get())
        {
            return Err(CliError::Config(format!("continuation.contour[{i}]: need levels and nonempty ranges")));
        }
    }
    let pool = Pool::new(opts.jobs)?;
    let hash = cfg.hash();
    let h = header("continue", &hash, opts);
    let mut written = Vec::new();

    if !sec.branch.is_empty() {
        let members: Vec<(usize, f64)> = sec
            .branch
            .iter()
            .enumerate()
            .flat_map(|(i, t)| t.fixed.iter().map(move |f| (i, f.get())))
            .collect();
        let seeded = pool.map(&members, |&(i, f)| seeds(&sys, &sec.branch[i], f, &step));
        let mut jobs = Vec::new();
        for (&(task, fixed), s) in members.iter().zip(seeded) {
            let t = &sec.branch[task];
            match s {
                Ok((param, states)) => {
                    for (root, state) in states.into_iter().enumerate() {
                        for &direction in directions(t.direction) {
                            jobs.push(BranchJob { task, fixed, root, param, state, direction });
                        }
                    }
                }
                Err(e) => eprintln!("continue: branch task {task}, fixed {}: {e}", num(fixed)),
            }
        }
        let traced = pool.map(&jobs, |j| {
            let t = &sec.branch[j.task];
            let (c, k) = plane(t.active, j.param, j.fixed);
            let range = (t.range[0].get(), t.range[1].get());
            continue_branch(&sys, &j.state, c, k, parameter(t.active), range, j.direction, &step)
        });
        let cols = [
            "task", "active", "fixed", "root", "direction", "arclength", "param", "r0", "r1", "dtheta",
            "residual_norm", "fold", "termination",
        ];
        let (mut w, path) = output::create(&opts.out, "branches.csv", &h, &cols)?;
        for (j, b) in jobs.iter().zip(traced) {
            let active = sec.branch[j.task].active;
            let b = match b {
                Ok(b) => b,
                Err(e) => {
                    eprintln!("continue: branch task {}, fixed {}, root {}: {e}", j.task, num(j.fixed), j.root);
                    continue;
                }
            };
            let (lo, hi) = b.param_extent();
            eprintln!(
                "continue: task {} {}={} root {} {}: {} ∈ [{}, {}], {} points, {}",
                j.task,
                if active == Which::C { "k" } else { "c" },
                num(j.fixed),
                j.root,
                dir_tag(j.direction),
                which_tag(active),
                num(lo),
                num(hi),
                b.points.len(),
                b.termination.tag()
            );
            for (i, p) in b.points.iter().enumerate() {
                w.write_record([
                    j.task.to_string(),
                    which_tag(active).to_string(),
                    num(j.fixed),
                    j.root.to_string(),
                    dir_tag(j.direction).to_string(),
                    num(p.arclength),
                    num(p.param),
                    num(p.state.r0),
                    num(p.state.r1),
                    num(p.state.dtheta),
                    num(p.residual_norm),
                    (b.folds.contains(&i) as u8).to_string(),
                    b.termination.tag().to_string(),
                ])?;
            }
        }
        w.flush()?;
        written.push(path);
    }

    if !sec.contour.is_empty() {
        let mut jobs = Vec::new();
        for (i, t) in sec.contour.iter().enumerate() {
            for lv in &t.levels {
                for &d in directions(t.direction) {
                    jobs.push((i, lv.get(), d));
                }
            }
        }
        let traced = pool.map(&jobs, |&(i, level, d)| {
            let t = &sec.contour[i];
            let start = seed_branch(&sys, t.c.get(), t.k.get(), t.seed.strategy(), &step.newton)?;
            let plane = PlaneRange { c: (t.c_range[0].get(), t.c_range[1].get()), k: (t.k_range[0].get(), t.k_range[1].get()) };
            trace_contour(&sys, t.component.into(), level, &start, t.c.get(), t.k.get(), plane, d, &step)
        });
        let cols = [
            "task", "component", "level", "direction", "arclength", "c", "k", "r0", "r1", "dtheta", "residual_norm",
            "termination",
        ];
        let (mut w, path) = output::create(&opts.out, "contours.csv", &h, &cols)?;
        for (&(i, level, d), res) in jobs.iter().zip(traced) {
            let ct = match res {
                Ok(ct) => ct,
                Err(e) => {
                    eprintln!("continue: contour task {i}, level {}: {e}", num(level));
                    continue;
                }
            };
            eprintln!(
                "continue: contour {i} {} = {} {}: {} points, {}",
                ct.component.tag(),
                num(level),
                dir_tag(d),
                ct.points.len(),
                ct.termination.tag()
            );
            for p in &ct.points {
                w.write_record([
                    i.to_string(),
                    ct.component.tag().to_string(),
                    num(level),
                    dir_tag(d).to_string(),
                    num(p.arclength),
                    num(p.c),
                    num(p.k),
                    num(p.state.r0),
                    num(p.state.r1),
                    num(p.state.dtheta),
                    num(p.residual_norm),
                    ct.termination.tag().to_string(),
                ])?;
            }
        }
        w.flush()?;
        written.push(path);
    }
    Ok(written)
}
