//! `lifemodel`: simulate cellular automata games, learn their local rules,
//! play them with planning agents, tune agents and regenerate figure data.

use std::fs::{self, File};
use std::io::{self, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use lifemodel::agents::RheaConfig;
use lifemodel::ca::{hamming, step_grid, Boundary, BuiltinRule, Grid, RuleTable};
use lifemodel::experiments::{
    self as exp, stats, AgentKind, ExperimentSpec, ModelSource, TuningRun, TuningSettings,
};
use lifemodel::format::{parse_table, read_grids, table_to_string, write_grid};
use lifemodel::game::{random_start, trace_rows, write_trace_csv, EpisodeTrace, Objective};
use lifemodel::learners::{
    harvest_transitions, read_dataset_csv, write_dataset_csv, Dataset, LearnerKind,
};
use lifemodel::ntbea::{write_evaluation_log, NtbeaSettings, SearchSpace};
use lifemodel::seed::{derive_seed, rng_for, TAG_LEARNER, TAG_MODEL, TAG_START};

#[derive(Parser)]
#[command(
    name = "lifemodel",
    version,
    about = "Cellular automata games with learned forward models"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Step the automaton with no player and write the final grid or the trajectory.
    Simulate(SimulateArgs),
    /// Play one episode and write its trace as CSV.
    Play(PlayArgs),
    /// Learn a rule table from observed random transitions.
    Learn(LearnArgs),
    /// Fit a learner to a saved dataset and write its compiled table.
    Compile(CompileArgs),
    /// Tune the rolling horizon agent with NTBEA.
    Tune(TuneArgs),
    /// Regenerate the data behind one figure.
    Experiment(ExperimentArgs),
}

#[derive(Args, Clone)]
struct Common {
    /// `gol`, `cave` or `file:PATH` (a 512-character table file).
    #[arg(long, default_value = "gol")]
    rule: String,
    /// Cave rule threshold: alive iff more than T neighbours are alive.
    #[arg(long, default_value_t = 4)]
    threshold: u8,
    #[arg(long, default_value_t = 30)]
    width: usize,
    #[arg(long, default_value_t = 30)]
    height: usize,
    /// `torus` or `dead`.
    #[arg(long, default_value = "torus")]
    boundary: Boundary,
    /// Alive probability for random start grids.
    #[arg(long, default_value_t = 0.5)]
    density: f64,
    /// Master seed for every random draw.
    #[arg(long, env = "LIFEMODEL_SEED", default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 100)]
    ticks: usize,
    /// Output file (directory for `experiment`); standard output when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads; all cores when omitted.
    #[arg(long)]
    jobs: Option<usize>,
}

impl Common {
    fn rule_table(&self) -> Result<RuleTable> {
        match self.rule.as_str() {
            "gol" => Ok(BuiltinRule::GameOfLife.table()),
            "cave" => Ok(BuiltinRule::cave(self.threshold)?.table()),
            other => match other.strip_prefix("file:") {
                Some(path) => read_table(Path::new(path)),
                None => bail!("unknown rule `{other}` (expected gol, cave or file:PATH)"),
            },
        }
    }

    fn rule_name(&self) -> String {
        self.rule
            .strip_prefix("file:")
            .map_or(self.rule.clone(), |_| "file".into())
    }

    fn spec(&self) -> Result<ExperimentSpec> {
        let mut spec = ExperimentSpec::new(self.rule_table()?, self.seed);
        spec.width = self.width;
        spec.height = self.height;
        spec.boundary = self.boundary;
        spec.density = self.density;
        spec.ticks = self.ticks;
        Ok(spec)
    }

    fn start_grid(&self, file: Option<&Path>) -> Result<Grid> {
        match file {
            Some(path) => {
                let grids = read_grids(BufReader::new(open(path)?))
                    .with_context(|| format!("reading grid file {}", path.display()))?;
                grids
                    .into_iter()
                    .next()
                    .with_context(|| format!("{} holds no grid", path.display()))
            }
            None => {
                let mut rng = rng_for(self.seed, &[TAG_START, 0]);
                Ok(random_start(
                    self.width,
                    self.height,
                    self.boundary,
                    self.density,
                    &mut rng,
                )?)
            }
        }
    }

    fn output(&self) -> Result<Box<dyn Write>> {
        Ok(match &self.out {
            Some(path) => Box::new(BufWriter::new(
                File::create(path).with_context(|| format!("creating {}", path.display()))?,
            )),
            None => Box::new(BufWriter::new(io::stdout().lock())),
        })
    }
}

/// Every agent hyper-parameter as a flag; unset flags keep the tuned defaults
/// (or the values from `--config`).
#[derive(Args, Clone, Default)]
struct RheaFlags {
    /// `key=value` file; individual flags override it.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    flip_min_one_value: Option<bool>,
    #[arg(long)]
    prob_mutation: Option<f64>,
    #[arg(long)]
    sequence_length: Option<usize>,
    #[arg(long)]
    n_evals: Option<usize>,
    #[arg(long)]
    shift_buffer: Option<bool>,
    #[arg(long)]
    mutation_transducer: Option<bool>,
    #[arg(long)]
    repeat_prob: Option<f64>,
    #[arg(long)]
    discount_factor: Option<f64>,
    #[arg(long)]
    budget_iterations: Option<usize>,
}

impl RheaFlags {
    fn resolve(&self) -> Result<RheaConfig> {
        let mut c = match &self.config {
            Some(path) => RheaConfig::parse_kv(&read_text(path)?)
                .with_context(|| format!("reading config {}", path.display()))?,
            None => RheaConfig::default(),
        };
        macro_rules! apply {
            ($($field:ident),*) => { $(if let Some(v) = self.$field { c.$field = v; })* };
        }
        apply!(
            flip_min_one_value,
            prob_mutation,
            sequence_length,
            n_evals,
            shift_buffer,
            mutation_transducer,
            repeat_prob,
            discount_factor,
            budget_iterations
        );
        c.validate()?;
        Ok(c)
    }
}

#[derive(Args)]
struct SimulateArgs {
    #[command(flatten)]
    common: Common,
    /// Start from this grid file instead of a random grid.
    #[arg(long)]
    grid: Option<PathBuf>,
    /// Write every grid from the start onwards, not just the last.
    #[arg(long)]
    trajectory: bool,
}

#[derive(Args)]
struct PlayArgs {
    #[command(flatten)]
    common: Common,
    #[command(flatten)]
    rhea: RheaFlags,
    #[arg(long, default_value = "rhea")]
    agent: AgentKind,
    /// `perfect`, `degraded:K`, `corrupted:E`, `online:exact|dtree|mlp` or `file:PATH`.
    #[arg(long)]
    model: Option<String>,
    /// `max` or `min`.
    #[arg(long, default_value = "max")]
    objective: Objective,
    #[arg(long)]
    grid: Option<PathBuf>,
    /// Run index; selects the start grid and the random streams.
    #[arg(long, default_value_t = 0)]
    run_id: u64,
    /// Also write the effective agent configuration here.
    #[arg(long)]
    config_out: Option<PathBuf>,
}

#[derive(Args)]
struct LearnArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long, default_value = "exact")]
    learner: LearnerKind,
    /// Independent random start grids, each stepped once under the true rule.
    #[arg(long, default_value_t = 20)]
    transitions: usize,
    /// Also save the harvested samples as CSV.
    #[arg(long)]
    dataset_out: Option<PathBuf>,
}

#[derive(Args)]
struct CompileArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long)]
    dataset: PathBuf,
    #[arg(long, default_value = "exact")]
    learner: LearnerKind,
}

#[derive(Args, Clone)]
struct TuningFlags {
    /// Evaluations per tuning run.
    #[arg(long, default_value_t = 100)]
    budget: usize,
    /// UCB exploration constant.
    #[arg(long, default_value_t = 300.0)]
    k: f64,
    /// Per-dimension neighbour mutation probability.
    #[arg(long, default_value_t = 0.5)]
    epsilon: f64,
    #[arg(long, default_value_t = 50)]
    neighbours: usize,
    /// Fresh episodes used to re-evaluate each recommendation.
    #[arg(long, default_value_t = 5)]
    reeval: usize,
}

impl TuningFlags {
    fn settings(&self, known: usize, runs: usize) -> TuningSettings {
        TuningSettings {
            known,
            runs,
            ntbea: NtbeaSettings {
                budget: self.budget,
                k: self.k,
                epsilon: self.epsilon,
                neighbourhood_size: self.neighbours,
            },
            reeval_episodes: self.reeval,
        }
    }
}

#[derive(Args)]
struct TuneArgs {
    #[command(flatten)]
    common: Common,
    #[command(flatten)]
    rhea: RheaFlags,
    #[command(flatten)]
    tuning: TuningFlags,
    /// Known patterns in each run's model; 512 is a perfect model.
    #[arg(long, default_value_t = 512)]
    known: usize,
    #[arg(long, default_value_t = 1)]
    runs: usize,
    /// Write each run's evaluation log as `tune_run<i>.csv` here.
    #[arg(long)]
    log_dir: Option<PathBuf>,
    /// Write the best recommendation as a `key=value` config file.
    #[arg(long)]
    config_out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Figure {
    Fig2,
    Fig3,
    Fig4,
    Fig5,
    Nstep,
}

#[derive(Args)]
struct ExperimentArgs {
    figure: Figure,
    #[command(flatten)]
    common: Common,
    #[command(flatten)]
    rhea: RheaFlags,
    #[command(flatten)]
    tuning: TuningFlags,
    /// Divide default repeat counts by 5.
    #[arg(long)]
    desk: bool,
    /// Override the repeat count (runs, models or starts, by figure).
    #[arg(long)]
    repeats: Option<usize>,
    /// fig4: games played per sampled model.
    #[arg(long, default_value_t = 15)]
    games_per_model: usize,
    /// fig4: known-pattern counts to sweep.
    #[arg(
        long,
        value_delimiter = ',',
        default_value = "0,64,128,192,256,320,384,416,448,480,512"
    )]
    known_values: Vec<usize>,
    /// fig2: truth-table error counts to sweep.
    #[arg(
        long,
        value_delimiter = ',',
        default_value = "0,1,2,4,8,16,32,64,128,256"
    )]
    error_counts: Vec<usize>,
    /// fig3: known patterns of the degraded condition; nstep: model's known patterns.
    #[arg(long, default_value_t = 480)]
    known: usize,
    /// fig5: learner trained while playing.
    #[arg(long, default_value = "dtree")]
    learner: LearnerKind,
    /// nstep: prediction horizon.
    #[arg(long, default_value_t = 30)]
    horizon: usize,
}

fn open(path: &Path) -> Result<File> {
    File::open(path).with_context(|| format!("opening {}", path.display()))
}

fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

fn read_table(path: &Path) -> Result<RuleTable> {
    parse_table(&read_text(path)?).with_context(|| format!("parsing rule table {}", path.display()))
}

fn configure_threads(jobs: Option<usize>) -> Result<()> {
    if let Some(n) = jobs {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n.max(1))
            .build_global()
            .context("configuring worker threads")?;
    }
    Ok(())
}

fn simulate(args: SimulateArgs) -> Result<()> {
    let rule = args.common.rule_table()?;
    let mut grid = args.common.start_grid(args.grid.as_deref())?;
    let mut out = args.common.output()?;
    if args.trajectory {
        write_grid(&mut out, &grid)?;
    }
    for _ in 0..args.common.ticks {
        grid = step_grid(&grid, &rule);
        if args.trajectory {
            write_grid(&mut out, &grid)?;
        }
    }
    if !args.trajectory {
        write_grid(&mut out, &grid)?;
    }
    out.flush()?;
    Ok(())
}

fn model_source(text: &str) -> Result<ModelSource> {
    match text.strip_prefix("file:") {
        Some(path) => Ok(ModelSource::Fixed(Box::new(read_table(Path::new(path))?))),
        None => Ok(text.parse()?),
    }
}

fn play(args: PlayArgs) -> Result<()> {
    let mut spec = args.common.spec()?;
    spec.agent = args.agent;
    spec.objective = args.objective;
    spec.config = args.rhea.resolve()?;
    match (&args.model, args.agent) {
        (Some(_), AgentKind::Nothing) => {
            eprintln!("warning: --model has no effect with --agent nothing; using the true rule");
        }
        (Some(m), _) => spec.model = model_source(m)?,
        (None, _) => {}
    }
    if args.common.ticks == 0 {
        bail!("--ticks must be at least 1 for play");
    }
    let start = match &args.grid {
        Some(path) => args.common.start_grid(Some(path))?,
        None => spec.start_grid(args.run_id)?,
    };
    spec.width = start.width();
    spec.height = start.height();
    let record = exp::run_from(&spec, args.run_id, start)?;
    if let Some(path) = &args.config_out {
        fs::write(path, spec.config.to_kv())
            .with_context(|| format!("writing {}", path.display()))?;
    }
    let trace = EpisodeTrace {
        scores: record.scores,
        actions: record.actions,
        grids: None,
    };
    let mut out = args.common.output()?;
    write_trace_csv(&mut out, &trace_rows(args.run_id, &trace))?;
    out.flush()?;
    Ok(())
}

fn learn(args: LearnArgs) -> Result<()> {
    let c = &args.common;
    let rule = c.rule_table()?;
    let mut data = Dataset::new();
    for i in 0..args.transitions as u64 {
        let mut rng = rng_for(c.seed, &[TAG_START, i]);
        let before = random_start(c.width, c.height, c.boundary, c.density, &mut rng)?;
        let after = step_grid(&before, &rule);
        data.merge(&harvest_transitions(&before, &after)?);
    }
    if let Some(path) = &args.dataset_out {
        let file = File::create(path).with_context(|| format!("creating {}", path.display()))?;
        write_dataset_csv(BufWriter::new(file), &data)?;
    }
    let table = fit(args.learner, &data, c.seed)?;
    eprintln!(
        "observed {} distinct patterns; hamming error to the true rule: {}",
        data.unique_patterns(),
        hamming(&table, &rule)
    );
    let mut out = c.output()?;
    out.write_all(table_to_string(&table).as_bytes())?;
    out.flush()?;
    Ok(())
}

fn fit(kind: LearnerKind, data: &Dataset, seed: u64) -> Result<RuleTable> {
    let mut learner = kind.build(derive_seed(seed, &[TAG_LEARNER]));
    if !data.is_empty() {
        learner.observe_all(data);
        learner.refit()?;
    }
    Ok(learner.compile_to_table())
}

fn compile(args: CompileArgs) -> Result<()> {
    let data = read_dataset_csv(open(&args.dataset)?)
        .with_context(|| format!("reading dataset {}", args.dataset.display()))?;
    let table = fit(args.learner, &data, args.common.seed)?;
    let mut out = args.common.output()?;
    out.write_all(table_to_string(&table).as_bytes())?;
    out.flush()?;
    Ok(())
}

fn tune(args: TuneArgs) -> Result<()> {
    let mut spec = args.common.spec()?;
    spec.config = args.rhea.resolve()?;
    let settings = args.tuning.settings(args.known, args.runs);
    let runs = exp::tuning_experiment(&spec, &settings)?;
    let space = SearchSpace::rhea();
    if let Some(dir) = &args.log_dir {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        for run in &runs {
            let path = dir.join(format!("tune_run{}.csv", run.run));
            let file =
                File::create(&path).with_context(|| format!("creating {}", path.display()))?;
            write_evaluation_log(
                BufWriter::new(file),
                &space,
                &run.log,
                &run.best,
                run.tuned_mean,
            )?;
        }
    }
    if let Some(path) = &args.config_out {
        let best = runs
            .iter()
            .max_by(|a, b| a.fitness.total_cmp(&b.fitness).then(b.run.cmp(&a.run)))
            .expect("at least one run");
        let config = space.to_rhea_config(&best.best, spec.config.budget_iterations)?;
        fs::write(path, config.to_kv()).with_context(|| format!("writing {}", path.display()))?;
    }
    let mut out = args.common.output()?;
    exp::write_fig3_csv(&mut out, &[(settings.condition(), runs)])?;
    out.flush()?;
    Ok(())
}

fn experiment(args: ExperimentArgs) -> Result<()> {
    let dir = args
        .common
        .out
        .clone()
        .unwrap_or_else(|| PathBuf::from("."));
    fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
    let scale = |full: usize| {
        args.repeats
            .unwrap_or(if args.desk { (full / 5).max(1) } else { full })
    };
    let mut spec = args.common.spec()?;
    spec.config = args.rhea.resolve()?;
    let create = |name: &str| -> Result<BufWriter<File>> {
        let path = dir.join(name);
        Ok(BufWriter::new(
            File::create(&path).with_context(|| format!("creating {}", path.display()))?,
        ))
    };

    match args.figure {
        Figure::Fig2 => {
            spec.repeats = scale(50);
            let rules = if args.common.rule == "gol" || args.common.rule == "cave" {
                vec![
                    ("gol".to_string(), BuiltinRule::GameOfLife.table()),
                    (
                        "cave".to_string(),
                        BuiltinRule::cave(args.common.threshold)?.table(),
                    ),
                ]
            } else {
                vec![(args.common.rule_name(), spec.rule.clone())]
            };
            let rows = exp::fig2_rows(&rules, &args.error_counts, &spec)?;
            exp::write_rows(create("fig2.csv")?, &rows)?;
        }
        Figure::Fig3 => {
            let runs = scale(100);
            let mut groups = Vec::new();
            for known in [512, args.known] {
                let settings = args.tuning.settings(known, runs);
                let result: Vec<TuningRun> = exp::tuning_experiment(&spec, &settings)?;
                summarise_tuning(&settings.condition(), &result);
                groups.push((settings.condition(), result));
            }
            exp::write_fig3_csv(create("fig3.csv")?, &groups)?;
            exp::write_rows(create("fig3_marginals.csv")?, &exp::marginal_rows(&groups))?;
        }
        Figure::Fig4 => {
            spec.repeats = scale(50) * args.games_per_model;
            spec.games_per_model = args.games_per_model;
            let agents = [AgentKind::Rhea, AgentKind::Random, AgentKind::Nothing];
            let cells = exp::degradation_sweep(&spec, &args.known_values, &agents)?;
            exp::write_rows(create("fig4.csv")?, &exp::fig4_rows(&cells))?;
        }
        Figure::Fig5 => {
            spec.repeats = scale(50);
            let mut groups = Vec::new();
            for agent in [AgentKind::Rhea, AgentKind::Random, AgentKind::Nothing] {
                let s = ExperimentSpec {
                    agent,
                    ..spec.clone()
                };
                groups.push((
                    agent.name().to_string(),
                    exp::online_learning_run(args.learner, &s)?,
                ));
            }
            exp::write_rows(create("fig5.csv")?, &exp::fig5_rows(&groups))?;
        }
        Figure::Nstep => {
            let n = scale(100);
            let mut model_rng = rng_for(spec.master_seed, &[TAG_MODEL]);
            let model =
                lifemodel::learners::degrade_table(&spec.rule, args.known, 0, &mut model_rng)?.0;
            let starts = (0..n as u64)
                .map(|i| spec.prediction_start(i))
                .collect::<Result<Vec<_>, _>>()?;
            let rows = exp::nstep_rows(&model, &spec.rule, &starts, args.horizon)?;
            exp::write_rows(create("nstep.csv")?, &rows)?;
        }
    }
    Ok(())
}

fn summarise_tuning(condition: &str, runs: &[TuningRun]) {
    let fitness: Vec<f64> = runs.iter().map(|r| r.fitness).collect();
    let lengths: Vec<f64> = runs.iter().map(|r| exp::recommended_value(r, 2)).collect();
    eprintln!(
        "{condition}: mean fitness {:.1} (sd {:.1}), median sequenceLength {}",
        stats::mean(&fitness),
        stats::std_dev(&fitness),
        stats::median(&lengths)
    );
}

fn main() -> Result<()> {
    let cli = Cli::parse();
    let jobs = match &cli.command {
        Command::Simulate(a) => a.common.jobs,
        Command::Play(a) => a.common.jobs,
        Command::Learn(a) => a.common.jobs,
        Command::Compile(a) => a.common.jobs,
        Command::Tune(a) => a.common.jobs,
        Command::Experiment(a) => a.common.jobs,
    };
    configure_threads(jobs)?;
    match cli.command {
        Command::Simulate(a) => simulate(a),
        Command::Play(a) => play(a),
        Command::Learn(a) => learn(a),
        Command::Compile(a) => compile(a),
        Command::Tune(a) => tune(a),
        Command::Experiment(a) => experiment(a),
    }
}
