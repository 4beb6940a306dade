use std::collections::BTreeSet;
use std::fs;
use std::path::PathBuf;

use clap::{Parser, Subcommand, ValueEnum};
use infoseq_core::allocation::{
    block_bound, freq_bound_check, monotonicity_scan, myopic_path, t_optimal, MyopicMode,
    SearchBudget,
};
use infoseq_core::blackwell::{dominates, optimal_deadline_path, DeadlineDistribution};
use infoseq_core::games::{BeautyContest, BeautyContestConfig, CapacityDistribution};
use infoseq_core::gaussian::{posterior, transform};
use infoseq_core::special_cases::{k2_condition, k2_myopic_choice};
use infoseq_core::{Division, ObjectiveOracle, PosteriorModel};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Deserialize;
use serde_json::{json, Map, Value};

use crate::envfile::EnvironmentFile;
use crate::error::{CliError, CliResult};
use crate::format::{division_cell, division_json, fmt17, num, nums};
use crate::registry::{self, parse_counts, ResolvedEnv};
use crate::report::{Format, Report, Table};

pub const BUDGET_VAR: &str = "INFOSEQ_BUDGET";

#[derive(Parser, Debug)]
#[command(name = "infoseq", version, about = "Optimal and myopic allocation of correlated Gaussian signals")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,

    #[arg(long, value_enum, default_value_t = Format::Csv, global = true)]
    pub format: Format,

    /// Cap on enumerated compositions and paths; overrides INFOSEQ_BUDGET.
    #[arg(long, global = true)]
    pub budget: Option<u64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Mode {
    /// Best joint increment of B observations.
    Joint,
    /// B single greedy steps.
    Unit,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Posterior variance of θ₁ and the posterior covariance for given counts.
    Posterior {
        #[arg(long)]
        env: String,
        #[arg(long)]
        q: String,
    },
    /// All t-optimal divisions by exhaustive search.
    Toptimal {
        #[arg(long)]
        env: String,
        #[arg(long)]
        t: u32,
    },
    /// Myopic path with blocks of B observations.
    Myopic {
        #[arg(long)]
        env: String,
        #[arg(long = "B", default_value_t = 1)]
        block: u32,
        #[arg(long)]
        horizon: usize,
        #[arg(long, value_enum, default_value_t = Mode::Joint)]
        mode: Mode,
    },
    /// t-optimal divisions for t = 0..=tmax and their monotonicity.
    Scan {
        #[arg(long)]
        env: String,
        #[arg(long)]
        tmax: u32,
    },
    /// Brute-force optimal path against the myopic path for a deadline distribution.
    Compare {
        #[arg(long)]
        env: String,
        /// Deadline probabilities for periods 1..T as a JSON list.
        #[arg(long)]
        pi: String,
        #[arg(long = "B", default_value_t = 1)]
        block: u32,
    },
    /// Sufficient block size 8(R+1)K^1.5 for unit payoff weights.
    Bound {
        #[arg(long)]
        env: String,
    },
    /// Two-signal condition, greedy optimality and the myopic rule.
    K2 {
        /// Must be of the form k2:a,b,c,d.
        #[arg(long)]
        env: String,
        #[arg(long, default_value_t = 40)]
        tmax: u32,
        /// Random (q1, q2) checks of the rule against direct evaluation.
        #[arg(long, default_value_t = 0)]
        samples: usize,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Expected utilities and interaction signs in the beauty contest.
    Beauty {
        #[arg(long)]
        config: PathBuf,
    },
    /// Frequency bound |n_i(t) - t/K| <= 4(R+1)sqrt(K) over exact minimizers.
    Freqcheck {
        #[arg(long)]
        env: String,
        #[arg(long, default_value_t = 200)]
        tmax: u32,
    },
}

fn budget(flag: Option<u64>) -> CliResult<SearchBudget> {
    let cap = match flag {
        Some(b) => Some(b),
        None => match std::env::var(BUDGET_VAR) {
            Ok(s) => Some(
                s.trim()
                    .parse::<u64>()
                    .map_err(|_| CliError::input(format!("{BUDGET_VAR}={s:?} is not a non-negative integer")))?,
            ),
            Err(_) => None,
        },
    };
    Ok(match cap {
        Some(b) => SearchBudget { compositions: u128::from(b), paths: u128::from(b) },
        None => SearchBudget::default(),
    })
}

fn budget_json(b: &SearchBudget) -> Value {
    let clamp = |x: u128| Value::from(u64::try_from(x).unwrap_or(u64::MAX));
    json!({ "compositions": clamp(b.compositions), "paths": clamp(b.paths) })
}

fn base_config(env: &ResolvedEnv, b: &SearchBudget) -> Map<String, Value> {
    let mut m = Map::new();
    m.insert("env".into(), Value::from(env.reference.clone()));
    m.insert("K".into(), Value::from(env.env.num_signals()));
    m.insert("budget".into(), budget_json(b));
    m
}

fn model(env: &ResolvedEnv) -> CliResult<PosteriorModel> {
    Ok(PosteriorModel::new(&env.env)?)
}

pub fn run(cli: &Cli) -> CliResult<String> {
    let b = budget(cli.budget)?;
    let report = match &cli.command {
        Command::Posterior { env, q } => cmd_posterior(&registry::resolve(env)?, q, &b)?,
        Command::Toptimal { env, t } => cmd_toptimal(&registry::resolve(env)?, *t, &b)?,
        Command::Myopic { env, block, horizon, mode } => {
            cmd_myopic(&registry::resolve(env)?, *block, *horizon, *mode, &b)?
        }
        Command::Scan { env, tmax } => cmd_scan(&registry::resolve(env)?, *tmax, &b)?,
        Command::Compare { env, pi, block } => cmd_compare(&registry::resolve(env)?, pi, *block, &b)?,
        Command::Bound { env } => cmd_bound(&registry::resolve(env)?, &b)?,
        Command::K2 { env, tmax, samples, seed } => {
            cmd_k2(&registry::resolve(env)?, *tmax, *samples, *seed, &b)?
        }
        Command::Beauty { config } => cmd_beauty(config, &b)?,
        Command::Freqcheck { env, tmax } => cmd_freqcheck(&registry::resolve(env)?, *tmax, &b)?,
    };
    Ok(report.render(cli.format))
}

pub fn cmd_posterior(env: &ResolvedEnv, q: &str, b: &SearchBudget) -> CliResult<Report> {
    let counts = parse_counts(q)?;
    let k = env.env.num_signals();
    if counts.len() != k {
        return Err(CliError::input(format!("q has {} entries but the environment has {k} signals", counts.len())));
    }
    let q = Division::new(counts);
    let summary = posterior(&env.env, &q)?;
    let mut config = base_config(env, b);
    config.insert("q".into(), division_json(&q));
    let mut report = Report::new("posterior", config);
    report.set("f", num(summary.target_variance));
    let cov = &summary.post_cov;
    let rows: Vec<Value> = (0..k).map(|i| nums(&cov.row(i).iter().copied().collect::<Vec<_>>())).collect();
    report.set("postCov", Value::Array(rows));
    let mut table = Table::new(&["quantity", "i", "j", "value"]);
    table.push(vec!["f".into(), "0".into(), "0".into(), fmt17(summary.target_variance)]);
    for i in 0..k {
        for j in 0..k {
            table.push(vec!["postCov".into(), i.to_string(), j.to_string(), fmt17(cov[(i, j)])]);
        }
    }
    report.table = table;
    Ok(report)
}

pub fn cmd_toptimal(env: &ResolvedEnv, t: u32, b: &SearchBudget) -> CliResult<Report> {
    let res = t_optimal(&model(env)?, t, b)?;
    let mut config = base_config(env, b);
    config.insert("t".into(), Value::from(t));
    let mut report = Report::new("toptimal", config);
    report.set("t", Value::from(t));
    report.set("canonical", division_json(res.canonical()));
    report.set("minValue", num(res.min_value));
    report.set("unique", Value::from(res.is_unique()));
    report.set("minimizers", Value::Array(res.minimizers.iter().map(division_json).collect()));
    let mut table = Table::new(&["t", "division", "value", "canonical"]);
    for (i, d) in res.minimizers.iter().enumerate() {
        table.push(vec![t.to_string(), division_cell(d), fmt17(res.min_value), u8::from(i == 0).to_string()]);
    }
    report.table = table;
    Ok(report)
}

pub fn cmd_myopic(
    env: &ResolvedEnv,
    block: u32,
    horizon: usize,
    mode: Mode,
    b: &SearchBudget,
) -> CliResult<Report> {
    let m = model(env)?;
    let core_mode = match mode {
        Mode::Joint => MyopicMode::JointBlock,
        Mode::Unit => MyopicMode::OneAtATime,
    };
    let path = myopic_path(&m, block, horizon, core_mode, b)?;
    let mut config = base_config(env, b);
    config.insert("B".into(), Value::from(block));
    config.insert("horizon".into(), Value::from(horizon));
    config.insert("mode".into(), Value::from(if mode == Mode::Joint { "joint" } else { "unit" }));
    let mut report = Report::new("myopic", config);
    let values: Vec<f64> = path.divisions().iter().map(|d| m.value(d)).collect();
    report.set("divisions", Value::Array(path.divisions().iter().map(division_json).collect()));
    report.set("values", nums(&values));
    let mut table = Table::new(&["period", "t", "division", "value"]);
    for (period, (d, v)) in path.divisions().iter().zip(&values).enumerate() {
        table.push(vec![period.to_string(), d.total().to_string(), division_cell(d), fmt17(*v)]);
    }
    report.table = table;
    Ok(report)
}

pub fn cmd_scan(env: &ResolvedEnv, tmax: u32, b: &SearchBudget) -> CliResult<Report> {
    let scan = monotonicity_scan(&model(env)?, tmax, b)?;
    let mut config = base_config(env, b);
    config.insert("tmax".into(), Value::from(tmax));
    let mut report = Report::new("scan", config);
    report.set("failingTimes", Value::from(scan.failing_times()));
    let mut rows = Vec::new();
    let mut table = Table::new(&["t", "canonical", "minValue", "monotoneFlag"]);
    for row in &scan.rows {
        let flag = row.monotone_to_next.map(|m| u8::from(m).to_string()).unwrap_or_default();
        table.push(vec![row.t.to_string(), division_cell(&row.canonical), fmt17(row.min_value), flag]);
        rows.push(json!({
            "t": row.t,
            "canonical": division_json(&row.canonical),
            "minValue": num(row.min_value),
            "minimizerCount": row.minimizer_count,
            "monotoneToNext": row.monotone_to_next,
        }));
    }
    report.set("rows", Value::Array(rows));
    report.notes.push("monotoneFlag = 0 marks t where no t+1 minimizer dominates a t minimizer".into());
    report.table = table;
    Ok(report)
}

fn parse_deadline(pi: &str) -> CliResult<DeadlineDistribution> {
    let probs: Vec<f64> = serde_json::from_str(pi).map_err(|e| CliError::input(format!("--pi: {e}")))?;
    Ok(DeadlineDistribution::new(probs)?)
}

pub fn cmd_compare(env: &ResolvedEnv, pi: &str, block: u32, b: &SearchBudget) -> CliResult<Report> {
    let m = model(env)?;
    let deadline = parse_deadline(pi)?;
    let opt = optimal_deadline_path(&m, &deadline, block, b)?;
    let myopic = myopic_path(&m, block, deadline.horizon(), MyopicMode::JointBlock, b)?;
    let myopic_risk = infoseq_core::blackwell::expected_deadline_risk(&m, &myopic, &deadline)?;
    let cmp = dominates(&m, &opt.path, &myopic)?;
    let reverse = dominates(&m, &myopic, &opt.path)?;
    let mut config = base_config(env, b);
    config.insert("pi".into(), nums(deadline.probs()));
    config.insert("B".into(), Value::from(block));
    let mut report = Report::new("compare", config);
    let path_json = |p: &infoseq_core::allocation::AllocationPath| {
        Value::Array(p.divisions().iter().map(division_json).collect())
    };
    report.set("paths", json!({ "optimal": path_json(&opt.path), "myopic": path_json(&myopic) }));
    report.set(
        "perPeriodVariances",
        json!({ "optimal": nums(&cmp.variances_a), "myopic": nums(&cmp.variances_b) }),
    );
    report.set("dominanceFlag", Value::from(cmp.dominates));
    report.set("myopicDominatesOptimal", Value::from(reverse.dominates));
    report.set("firstViolation", cmp.first_violation.map_or(Value::Null, Value::from));
    report.set("optimalRisk", num(opt.risk));
    report.set("myopicRisk", num(myopic_risk));
    report.notes.push("dominanceFlag: the optimal path has weakly lower variance than the myopic path at every period".into());
    let mut table =
        Table::new(&["period", "pi", "optimalDivision", "optimalVariance", "myopicDivision", "myopicVariance"]);
    for t in 1..=deadline.horizon() {
        table.push(vec![
            t.to_string(),
            fmt17(deadline.prob(t)),
            division_cell(opt.path.division(t)),
            fmt17(cmp.variances_a[t - 1]),
            division_cell(myopic.division(t)),
            fmt17(cmp.variances_b[t - 1]),
        ]);
    }
    report.table = table;
    Ok(report)
}

pub fn cmd_bound(env: &ResolvedEnv, b: &SearchBudget) -> CliResult<Report> {
    let tenv = transform(&env.env)?;
    let bound = block_bound(&tenv)?;
    let mut report = Report::new("bound", base_config(env, b));
    report.set("R", num(bound.operator_norm));
    report.set("bound", num(bound.bound));
    report.set("weights", nums(tenv.weights().as_slice()));
    let mut table = Table::new(&["quantity", "value"]);
    table.push(vec!["K".into(), env.env.num_signals().to_string()]);
    table.push(vec!["R".into(), fmt17(bound.operator_norm)]);
    table.push(vec!["bound".into(), fmt17(bound.bound)]);
    report.table = table;
    Ok(report)
}

pub fn cmd_k2(
    env: &ResolvedEnv,
    tmax: u32,
    samples: usize,
    seed: Option<u64>,
    b: &SearchBudget,
) -> CliResult<Report> {
    let k2 = env.k2.ok_or_else(|| CliError::input("k2 needs --env k2:a,b,c,d"))?;
    if samples > 0 && seed.is_none() {
        return Err(CliError::input("--samples draws random counts and needs --seed"));
    }
    let cond = k2_condition(&k2);
    let greedy = myopic_path(&k2, 1, tmax.max(1) as usize, MyopicMode::OneAtATime, b)?;
    let mut config = base_config(env, b);
    config.insert("tmax".into(), Value::from(tmax));
    config.insert("samples".into(), Value::from(samples));
    config.insert("seed".into(), seed.map_or(Value::Null, Value::from));
    let mut report = Report::new("k2", config);
    report.set("conditionHolds", Value::from(cond.holds));
    report.set("conditionLhs", num(cond.lhs));
    report.set("conditionRhs", num(cond.rhs));
    report.set("abcdNonpositive", Value::from(cond.abcd_nonpositive));
    let mut table = Table::new(&["t", "greedy", "value", "tOptimal", "nextSignal", "tie"]);
    let mut optimal_upto = None;
    let mut all_optimal = true;
    for t in 0..=tmax {
        let d = greedy.division(t as usize);
        let is_opt = t_optimal(&k2, t, b)?.contains(d);
        all_optimal &= is_opt;
        if all_optimal {
            optimal_upto = Some(t);
        }
        let choice = k2_myopic_choice(&k2, d.counts()[0], d.counts()[1]);
        table.push(vec![
            t.to_string(),
            division_cell(d),
            fmt17(k2.value(d)),
            u8::from(is_opt).to_string(),
            choice.signal.to_string(),
            u8::from(choice.tie).to_string(),
        ]);
    }
    report.set("greedyOptimalThrough", optimal_upto.map_or(Value::Null, Value::from));
    if let Some(seed) = seed.filter(|_| samples > 0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (mut ties, mut disagreements) = (0usize, 0usize);
        for _ in 0..samples {
            let (q1, q2) = (rng.random_range(0..=1000u32), rng.random_range(0..=1000u32));
            let choice = k2_myopic_choice(&k2, q1, q2);
            if choice.tie {
                ties += 1;
                continue;
            }
            let direct = usize::from(k2.evaluate(&[q1 + 1, q2]) >= k2.evaluate(&[q1, q2 + 1]));
            disagreements += usize::from(direct != choice.signal);
        }
        report.set("ruleSamples", Value::from(samples));
        report.set("ruleDeclaredTies", Value::from(ties));
        report.set("ruleDisagreements", Value::from(disagreements));
    }
    report.table = table;
    Ok(report)
}

#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
enum EnvSource {
    Reference(String),
    Inline(EnvironmentFile),
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct BeautyFile {
    r: f64,
    /// Probabilities for periods 1..T.
    deadline: Vec<f64>,
    env: EnvSource,
    #[serde(rename = "capacityGrid")]
    capacity_grid: Vec<u32>,
    /// Capacity distributions as `[B, weight]` pairs; degenerate ones on the
    /// grid when absent.
    #[serde(default)]
    distributions: Option<Vec<Vec<(u32, f64)>>>,
}

fn mu_label(mu: &CapacityDistribution) -> String {
    mu.support().iter().map(|(b, w)| format!("{b}:{}", fmt17(*w))).collect::<Vec<_>>().join(";")
}

pub fn cmd_beauty(path: &PathBuf, b: &SearchBudget) -> CliResult<Report> {
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::input(format!("cannot read {}: {e}", path.display())))?;
    let raw: Value = serde_json::from_str(&text)?;
    let file: BeautyFile = serde_json::from_value(raw.clone())?;
    let resolved = match &file.env {
        EnvSource::Reference(r) => registry::resolve(r)?,
        EnvSource::Inline(f) => ResolvedEnv { reference: "inline".into(), env: f.to_environment()?, k2: None },
    };
    let deadline = DeadlineDistribution::new(file.deadline.clone())?;
    let cfg = BeautyContestConfig::new(file.r, deadline, resolved.env.clone(), file.capacity_grid.clone())?;
    let grid: BTreeSet<u32> = cfg.capacity_grid().iter().copied().collect();
    let mus: Vec<CapacityDistribution> = match &file.distributions {
        Some(list) => list.iter().map(|d| CapacityDistribution::new(d)).collect::<Result<_, _>>()?,
        None => grid.iter().map(|&g| CapacityDistribution::degenerate(g)).collect::<Result<_, _>>()?,
    };
    for mu in &mus {
        if let Some((off, _)) = mu.support().iter().find(|(c, _)| !grid.contains(c)) {
            return Err(CliError::input(format!("capacity {off} is not on capacityGrid")));
        }
    }
    let mut game = BeautyContest::new(cfg)?;
    let mut config = Map::new();
    config.insert("config".into(), Value::from(path.display().to_string()));
    config.insert("beauty".into(), raw);
    config.insert("budget".into(), budget_json(b));
    let mut report = Report::new("beauty", config);
    let truncation = format!(
        "capacity distributions are truncated to finite support on capacityGrid {:?}",
        grid.iter().collect::<Vec<_>>()
    );
    report.set("supportTruncation", Value::from(truncation.clone()));
    report.notes.push(truncation);

    let mut trajectories = Map::new();
    for &g in &grid {
        trajectories.insert(g.to_string(), nums(game.trajectory(g)?));
    }
    report.set("trajectories", Value::Object(trajectories));

    let mut table = Table::new(&["kind", "B", "Bhat", "mu", "muHat", "value", "sign"]);
    let mut eu_json = Vec::new();
    for &g in &grid {
        for mu in &mus {
            let eu = game.expected_utility(g, mu)?;
            table.push(vec!["EU".into(), g.to_string(), String::new(), mu_label(mu), String::new(), fmt17(eu), String::new()]);
            eu_json.push(json!({ "B": g, "mu": mu_label(mu), "value": num(eu) }));
        }
    }
    let mut signs = Vec::new();
    for &lo in &grid {
        for &hi in grid.range(lo + 1..) {
            for mu in &mus {
                for mu_hat in &mus {
                    if mu == mu_hat || !mu_hat.fosd(mu) {
                        continue;
                    }
                    let it = game.interaction(lo, hi, mu, mu_hat)?;
                    table.push(vec![
                        "interaction".into(),
                        lo.to_string(),
                        hi.to_string(),
                        mu_label(mu),
                        mu_label(mu_hat),
                        fmt17(it.value),
                        it.sign.to_string(),
                    ]);
                    signs.push(json!({
                        "B": lo, "Bhat": hi, "mu": mu_label(mu), "muHat": mu_label(mu_hat),
                        "value": num(it.value), "sign": it.sign,
                    }));
                }
            }
        }
    }
    report.set("expectedUtility", Value::Array(eu_json));
    report.set("interactions", Value::Array(signs));
    report.table = table;
    Ok(report)
}

pub fn cmd_freqcheck(env: &ResolvedEnv, tmax: u32, b: &SearchBudget) -> CliResult<Report> {
    let tenv = transform(&env.env)?;
    let check = freq_bound_check(&tenv, &model(env)?, tmax, b)?;
    let mut config = base_config(env, b);
    config.insert("tmax".into(), Value::from(tmax));
    let mut report = Report::new("freqcheck", config);
    report.set("R", num(check.operator_norm));
    report.set("tMin", Value::from(check.t_min));
    report.set("allowedDeviation", num(check.allowed_deviation));
    report.set("maxDeviation", num(check.max_deviation));
    report.set("checked", Value::from(check.checked.len()));
    report.set("violations", Value::from(check.violations.len()));
    report.set("truncated", Value::from(check.truncated));
    let mut table = Table::new(&["t", "division", "signal", "deviation"]);
    for v in &check.violations {
        table.push(vec![v.t.to_string(), division_cell(&v.division), v.signal.to_string(), fmt17(v.deviation)]);
    }
    report.table = table;
    Ok(report)
}
