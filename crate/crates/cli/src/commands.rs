use std::path::{Path, PathBuf};

use kickcast_core::analysis::{
    match_metrics, permutation_importance, run_ablation, score_target, target_data, train_target, AblationConfig,
    CellMetric, MatchRecord, TargetColumn,
};
use kickcast_core::dataset::{build_dataset, read_csv, split, write_csv, Dataset};
use kickcast_core::events::{
    read_event_meta, read_events, write_event_meta, write_events, EventFileMeta, EVENT_FILE_NAME, EVENT_META_NAME,
};
use kickcast_core::neuralnet::{load_text, save_text, Task};
use kickcast_core::{EpisodeConfig, Flavor, NoiseConfig, OrderingMethod, PredictionTarget, TrainConfig};
use serde::Serialize;

use crate::args::{
    parse_methods, parse_targets, AblateArgs, Cli, Command, EvalArgs, ExtractArgs, FlavorArg, GenerateArgs,
    ImportanceArgs, MetricsArgs, SplitArgs, TrainArgs, TrainingFlags,
};
use crate::failure::Failure;

type Outcome = Result<(), Failure>;

struct Ctx {
    seed: u64,
    quiet: bool,
}

impl Ctx {
    fn say(&self, line: impl AsRef<str>) {
        if !self.quiet {
            println!("{}", line.as_ref());
        }
    }
}

pub fn run(cli: Cli) -> Outcome {
    let ctx = Ctx { seed: cli.seed, quiet: cli.quiet };
    match cli.command {
        Command::Generate(a) => generate(&ctx, a),
        Command::Extract(a) => extract(&ctx, a),
        Command::Split(a) => split_cmd(&ctx, a),
        Command::Train(a) => train_cmd(&ctx, a),
        Command::Eval(a) => eval(&ctx, a),
        Command::Importance(a) => importance(&ctx, a),
        Command::Ablate(a) => ablate(&ctx, a),
        Command::Metrics(a) => metrics(&ctx, a),
    }
}

fn flavor(f: FlavorArg) -> Flavor {
    match f {
        FlavorArg::Full => Flavor::Full,
        FlavorArg::Noisy => Flavor::Noisy,
    }
}

fn write_json<T: Serialize>(value: &T, path: &Path) -> Outcome {
    let text = serde_json::to_string_pretty(value).expect("report serializes") + "\n";
    std::fs::write(path, text).map_err(|e| Failure::io(format!("{}: {e}", path.display())))
}

fn read_noise(path: &Path) -> Result<NoiseConfig, Failure> {
    let text = std::fs::read_to_string(path).map_err(|e| Failure::io(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| Failure::usage(format!("{}: invalid noise config: {e}", path.display())))
}

fn generate(ctx: &Ctx, a: GenerateArgs) -> Outcome {
    let noise = match &a.noise {
        Some(p) => read_noise(p)?,
        None => NoiseConfig::default(),
    };
    let cfg = EpisodeConfig {
        n_events: a.events,
        seed: ctx.seed,
        noise,
        formation_spread: a.spread,
        pass_threshold_deg: a.pass_threshold,
        dribble_threshold_m: a.dribble_threshold,
    };
    cfg.validate()?;
    std::fs::create_dir_all(&a.out).map_err(|e| Failure::io(format!("{}: {e}", a.out.display())))?;
    let events = kickcast_core::synthgen::generate_events(&cfg)?;
    write_events(&events, &a.out.join(EVENT_FILE_NAME))?;
    write_event_meta(&EventFileMeta::new(cfg), &a.out.join(EVENT_META_NAME))?;
    ctx.say(format!("wrote {} events to {}", events.len(), a.out.display()));
    Ok(())
}

fn load_events(dir: &Path) -> Result<(Vec<kickcast_core::KickEvent>, EventFileMeta), Failure> {
    let meta = read_event_meta(&dir.join(EVENT_META_NAME))?;
    let events = read_events(&dir.join(EVENT_FILE_NAME))?;
    Ok((events, meta))
}

/// `dir/data.csv` with `unum_fk` → `dir/data_unum_fk.csv`.
fn suffixed(path: &Path, method: OrderingMethod) -> PathBuf {
    let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    let ext = path.extension().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "csv".into());
    path.with_file_name(format!("{stem}_{}.{ext}", method.name()))
}

fn extract(ctx: &Ctx, a: ExtractArgs) -> Outcome {
    let targets: Vec<(OrderingMethod, PathBuf)> = if a.sort == "all" {
        OrderingMethod::ALL.iter().map(|m| (*m, suffixed(&a.out, *m))).collect()
    } else {
        let m = a.sort.parse::<OrderingMethod>().map_err(Failure::usage)?;
        vec![(m, a.out.clone())]
    };
    let (events, meta) = load_events(&a.input)?;
    for (method, path) in targets {
        let mut ds = build_dataset(&events, method, flavor(a.flavor))?;
        ds.provenance.seed = Some(meta.config.seed);
        ds.provenance.source = a.input.display().to_string();
        write_csv(&ds, &path)?;
        ctx.say(format!("wrote {} rows ({method}) to {}", ds.len(), path.display()));
    }
    Ok(())
}

fn split_cmd(ctx: &Ctx, a: SplitArgs) -> Outcome {
    let ds = read_csv(&a.data)?;
    let (train, test) = split(&ds, a.train_fraction, ctx.seed)?;
    write_csv(&train, &a.out_train)?;
    write_csv(&test, &a.out_test)?;
    ctx.say(format!("train {} rows, test {} rows", train.len(), test.len()));
    Ok(())
}

fn train_config(ctx: &Ctx, t: &TrainingFlags) -> TrainConfig {
    TrainConfig {
        hidden_sizes: t.hidden.clone(),
        learning_rate: t.lr,
        momentum: t.momentum,
        batch_size: t.batch,
        epochs: t.epochs,
        seed: ctx.seed,
        standardize_features: !t.no_standardize,
    }
}

#[derive(Serialize)]
struct TrainOutput<'a> {
    data: String,
    target: PredictionTarget,
    method: OrderingMethod,
    flavor: Flavor,
    model: String,
    #[serde(flatten)]
    report: &'a kickcast_core::neuralnet::TrainReport,
}

fn report_path(model: &Path) -> PathBuf {
    let mut name = model.file_name().map(|s| s.to_os_string()).unwrap_or_default();
    name.push(".report.json");
    model.with_file_name(name)
}

fn train_cmd(ctx: &Ctx, a: TrainArgs) -> Outcome {
    let cfg = train_config(ctx, &a.training);
    cfg.validate()?;
    let ds = read_csv(&a.data)?;
    let (net, report) = train_target(&ds, a.target, &cfg)?;
    save_text(&net, &a.out)?;
    let out = TrainOutput {
        data: a.data.display().to_string(),
        target: a.target,
        method: ds.method,
        flavor: ds.provenance.flavor,
        model: a.out.display().to_string(),
        report: &report,
    };
    write_json(&out, &report_path(&a.out))?;
    ctx.say(format!(
        "trained {} on {} rows: loss {:.6} -> {:.6}",
        net.architecture(),
        report.rows,
        report.initial_loss,
        report.final_loss
    ));
    Ok(())
}

/// Model and dataset, with the width check that maps to the schema exit code.
fn load_pair(model: &Path, data: &Path) -> Result<(kickcast_core::DenseNetwork, Dataset), Failure> {
    let net = load_text(model)?;
    let ds = read_csv(data)?;
    let width = ds.schema().width();
    if net.input_width() != width {
        return Err(Failure::new(
            crate::failure::SCHEMA,
            format!(
                "model {} expects {} input columns but dataset {} has {}",
                model.display(),
                net.input_width(),
                data.display(),
                width
            ),
        ));
    }
    Ok((net, ds))
}

#[derive(Serialize)]
struct EvalOutput {
    model: String,
    data: String,
    target: PredictionTarget,
    method: OrderingMethod,
    task: Task,
    rows: usize,
    metric: CellMetric,
}

fn eval(ctx: &Ctx, a: EvalArgs) -> Outcome {
    let (net, ds) = load_pair(&a.model, &a.data)?;
    let (metric, rows) = score_target(&net, &ds, a.target).map_err(|e| match e {
        kickcast_core::Error::InvalidConfig(m) => Failure::new(crate::failure::SCHEMA, m),
        other => other.into(),
    })?;
    let out = EvalOutput {
        model: a.model.display().to_string(),
        data: a.data.display().to_string(),
        target: a.target,
        method: ds.method,
        task: net.task,
        rows,
        metric,
    };
    match &a.out {
        Some(p) => {
            write_json(&out, p)?;
            match metric {
                CellMetric::Accuracy { percent } => ctx.say(format!("{}: accuracy {percent:.2}% on {rows} rows", a.target)),
                CellMetric::Error { mae, rmse } => {
                    ctx.say(format!("{}: MAE {mae:.4}, RMSE {rmse:.4} on {rows} rows", a.target))
                }
            }
        }
        None => println!("{}", serde_json::to_string_pretty(&out).expect("report serializes")),
    }
    Ok(())
}

fn importance(ctx: &Ctx, a: ImportanceArgs) -> Outcome {
    let (net, ds) = load_pair(&a.model, &a.data)?;
    let (xs, ys) = target_data(&ds, a.target)?;
    let TargetColumn::Classes { labels, .. } = ys else {
        return Err(Failure::usage(format!("importance needs a classification target, not {}", a.target)));
    };
    if net.task != Task::Classification(net.output_width()) {
        return Err(Failure::new(crate::failure::SCHEMA, "model is not a classifier"));
    }
    let names = ds.schema().column_names.clone();
    let report = permutation_importance(&net, &xs, &labels, Some(&names), a.repeats, ctx.seed)?;
    write_json(&report, &a.out)?;
    ctx.say(report.to_text(a.top).trim_end());
    Ok(())
}

fn ablate(ctx: &Ctx, a: AblateArgs) -> Outcome {
    let methods = parse_methods(&a.methods).map_err(Failure::usage)?;
    let targets = parse_targets(&a.targets).map_err(Failure::usage)?;
    let cfg = AblationConfig {
        targets,
        methods,
        train_fraction: a.train_fraction,
        split_seed: ctx.seed,
        feature_flavor: flavor(a.flavor),
        train: train_config(ctx, &a.training),
    };
    let (events, _) = load_events(&a.input)?;
    let report = run_ablation(&events, &cfg)?;
    write_json(&report, &a.out)?;
    let text = report.to_text();
    let txt = a.out.with_extension("txt");
    std::fs::write(&txt, &text).map_err(|e| Failure::io(format!("{}: {e}", txt.display())))?;
    ctx.say(text.trim_end());
    Ok(())
}

fn read_scores(path: &Path) -> Result<Vec<MatchRecord>, Failure> {
    let file = std::fs::File::open(path).map_err(|e| Failure::io(format!("{}: {e}", path.display())))?;
    let mut reader = csv::ReaderBuilder::new().has_headers(false).trim(csv::Trim::All).from_reader(file);
    let mut records = Vec::new();
    for (i, rec) in reader.records().enumerate() {
        let line = i + 1;
        let rec = rec.map_err(|e| Failure::io(format!("{}: {e}", path.display())))?;
        let parsed = (rec.len() == 2)
            .then(|| Some(MatchRecord { our_goals: rec[0].parse().ok()?, their_goals: rec[1].parse().ok()? }))
            .flatten();
        match parsed {
            Some(r) => records.push(r),
            None if line == 1 => {}
            None => {
                return Err(Failure::io(format!(
                    "{}: line {line}: expected two non-negative goal counts",
                    path.display()
                )))
            }
        }
    }
    Ok(records)
}

fn metrics(ctx: &Ctx, a: MetricsArgs) -> Outcome {
    let records = read_scores(&a.scores)?;
    let m = match_metrics(&records).map_err(|_| Failure::io(format!("{}: no score rows", a.scores.display())))?;
    if let Some(p) = &a.out {
        write_json(&m, p)?;
    }
    ctx.say(format!("win_rate {}", m.win_rate));
    ctx.say(format!("expected_win_rate {}", m.expected_win_rate));
    ctx.say(format!("avg_goals_for {}", m.avg_goals_for));
    ctx.say(format!("avg_goals_against {}", m.avg_goals_against));
    Ok(())
}
