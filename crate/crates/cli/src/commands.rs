use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use gradcf::data::{sample_reference_set, Dataset, Membership, ReferenceLogitStats};
use gradcf::explain::{
    generate_from_seed, pgm_bytes, run, ExplainConfig, ExplainSession, LogitNorm, Objective, Outcome, RankMode, Scope,
    UnitLayout,
};
use gradcf::metrics::{evaluate_batch, paired_ablation, phi1, phi2, reports_csv, reports_json, select_instances, TargetPolicy};
use gradcf::net::{train, FeatureVector, GradientOf, ModelFile, NetworkModel, Shape, TrainConfig};
use gradcf::rng::{stream, Stream};
use serde_json::{json, Value};

use crate::args::*;
use crate::artifacts::Artifacts;
use crate::source::{DataSource, Loaded};

/// Exit status of an explanation that ran out of outer iterations.
pub const EXIT_BUDGET_EXHAUSTED: u8 = 3;

pub fn dispatch(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::Train(a) => cmd_train(a),
        Command::Explain(a) => cmd_explain(a),
        Command::Evaluate(a) => cmd_evaluate(a),
        Command::Generate(a) => cmd_generate(a),
        Command::Ablate(a) => cmd_ablate(a),
    }
}

fn objective(o: ObjectiveArg) -> Objective {
    match o {
        ObjectiveArg::Gradual => Objective::Gradual,
        ObjectiveArg::Wachter => Objective::Wachter,
        ObjectiveArg::Ablation => Objective::Ablation,
    }
}

fn parse_block(s: &str) -> Result<(usize, usize)> {
    let (h, w) = s
        .split_once(['x', 'X'])
        .with_context(|| format!("block size `{s}` is not of the form HxW"))?;
    Ok((h.trim().parse()?, w.trim().parse()?))
}

/// Materializes every hyperparameter for one objective.
pub fn build_config(c: &ConfigArgs, shape: Shape, obj: ObjectiveArg) -> Result<ExplainConfig> {
    let image = shape.is_image();
    let base = if image { ExplainConfig::image() } else { ExplainConfig::tabular() };
    let block = match (&c.block, image) {
        (Some(_), false) => bail!("--block only applies to image models"),
        (Some(b), true) => Some(parse_block(b)?),
        (None, _) => base.block,
    };
    let objective = objective(obj);
    let cfg = ExplainConfig {
        tau: c.tau.unwrap_or(base.tau),
        sigma: c.sigma.unwrap_or(base.sigma),
        lambda: c.lambda,
        eta: c.eta,
        beta: c.beta,
        reference_count: c.ref_count,
        lr: c.lr,
        block,
        objective,
        scope: match (objective, c.wachter_scope) {
            (Objective::Wachter, ScopeArg::Full) => Scope::Full,
            _ => Scope::Masked,
        },
        rank_mode: match c.rank_mode {
            RankArg::Static => RankMode::Static,
            RankArg::Recompute => RankMode::Recompute,
        },
        clamp: c.clamp,
        max_outer: Some(match c.max_outer {
            Some(n) => n,
            None => UnitLayout::for_shape(shape, block)?.unit_count(),
        }),
        seed: c.seed,
        gradient_of: match c.gradient_of {
            GradientArg::Probability => GradientOf::Probability,
            GradientArg::Logit => GradientOf::Logit,
        },
        logit_norm: match c.logit_norm {
            NormArg::Vector => LogitNorm::Vector,
            NormArg::ScalarSum => LogitNorm::ScalarSum,
        },
        warm_start: !c.cold_start,
        membership: match c.membership {
            MembershipArg::Predicted => Membership::Predicted,
            MembershipArg::Label => Membership::Label,
        },
    };
    cfg.validate()?;
    Ok(cfg)
}

fn stored_source(mf: &ModelFile) -> Result<Option<DataSource>> {
    mf.source
        .as_ref()
        .map(|v| serde_json::from_value(v.clone()).context("model file has an unreadable data source"))
        .transpose()
}

struct Opened {
    mf: ModelFile,
    source: DataSource,
    data: Loaded,
}

fn open(model: &Path, args: &DataArgs, seed: u64, artifacts: &mut Artifacts) -> Result<Opened> {
    let mf = ModelFile::load(model)?;
    artifacts.input(model)?;
    let source = DataSource::for_model(args, stored_source(&mf)?.as_ref(), seed)?;
    for p in source.paths() {
        artifacts.input(&p)?;
    }
    let data = source.load(Some(&mf.normalizer), mf.labels.as_deref())?;
    let d = mf.model.input_dim();
    if data.train.dim() != Some(d) {
        bail!(
            "data has {} features but the model expects {d}",
            data.train.dim().map_or("no".into(), |v| v.to_string())
        );
    }
    Ok(Opened { mf, source, data })
}

fn test_split(data: &Loaded) -> Result<&Dataset> {
    data.test.as_ref().context("the data source has no test split; pass --data with a CSV file")
}

fn reference(train: &Dataset, model: &NetworkModel, target: usize, cfg: &ExplainConfig) -> Result<ReferenceLogitStats> {
    let r = sample_reference_set(train, model, target, cfg.reference_count, cfg.seed, cfg.membership)?;
    if r.is_shortfall() {
        eprintln!(
            "warning: only {} training instances qualify for class {target} (requested {})",
            r.count(),
            r.requested
        );
    }
    Ok(r)
}

fn class_name(mf: &ModelFile, c: usize) -> String {
    match mf.labels.as_ref().and_then(|l| l.get(c)) {
        Some(name) => format!("{c} ({name})"),
        None => c.to_string(),
    }
}

fn session_json(session: &ExplainSession, mf: &ModelFile, source: &DataSource) -> Result<Vec<u8>> {
    let mut value = serde_json::to_value(session.record())?;
    if let DataSource::Csv { .. } = source {
        value["original_raw"] = json!(mf.normalizer.invert_values(session.original.values())?);
        value["counterfactual_raw"] = json!(mf.normalizer.invert_values(session.counterfactual.values())?);
    }
    Ok((serde_json::to_string_pretty(&value)? + "\n").into_bytes())
}

fn cmd_train(a: TrainArgs) -> Result<ExitCode> {
    let source = DataSource::for_training(&a.data, a.seed)?;
    let data = source.load(None, None)?;
    let d = data.train.dim().context("training set is empty")?;
    let shape = data.train.shape().context("training set is empty")?;
    let k = match &data.labels {
        Some(names) => names.len(),
        None => data
            .train
            .class_count()
            .max(data.test.as_ref().map_or(0, Dataset::class_count)),
    };
    if k < 2 {
        bail!("training data has a single class");
    }
    let hidden = a
        .hidden
        .clone()
        .unwrap_or_else(|| if shape.is_image() { vec![64, 32] } else { vec![32, 16] });
    let mut dims = vec![d];
    dims.extend(&hidden);
    dims.push(k);

    let cfg = TrainConfig {
        epochs: a.epochs,
        batch_size: a.batch_size,
        lr: a.lr,
        seed: a.seed,
    };
    let mut model = NetworkModel::mlp(&dims, &mut stream(a.seed, Stream::Init, 0))?;
    let report = train(&mut model, &data.train, data.test.as_ref(), &cfg)?;

    let mut mf = ModelFile::new(model, data.normalizer.clone(), shape)?;
    mf.labels = data.labels.clone();
    mf.source = Some(serde_json::to_value(&source)?);
    let bytes = mf.to_json()?.into_bytes();

    let out_dir = a.out_dir.clone().unwrap_or_else(|| match a.out.parent() {
        Some(p) if !p.as_os_str().is_empty() => p.to_path_buf(),
        _ => PathBuf::from("."),
    });
    let config = json!({
        "data": source,
        "layers": dims,
        "epochs": cfg.epochs,
        "batch_size": cfg.batch_size,
        "lr": cfg.lr,
        "report": report,
    });
    let mut artifacts = Artifacts::new(&out_dir, "train", config)?;
    artifacts.seed("seed", a.seed);
    for p in source.paths() {
        artifacts.input(&p)?;
    }
    std::fs::write(&a.out, &bytes).with_context(|| format!("writing {}", a.out.display()))?;
    artifacts.record_external(&a.out, &bytes);
    artifacts.finish()?;

    println!("train accuracy: {:.4}", report.train_accuracy);
    if let Some(acc) = report.test_accuracy {
        println!("test accuracy: {acc:.4}");
    }
    println!("model written to {}", a.out.display());
    Ok(ExitCode::SUCCESS)
}

fn cmd_explain(a: ExplainArgs) -> Result<ExitCode> {
    let mut artifacts = Artifacts::new(&a.out_dir, "explain", Value::Null)?;
    let ctx = open(&a.model, &a.data, a.config.seed, &mut artifacts)?;
    let mf = &ctx.mf;
    let x = match (a.row, &a.input) {
        (Some(row), _) => {
            let set = match a.split {
                SplitArg::Test => test_split(&ctx.data)?,
                SplitArg::Train => &ctx.data.train,
            };
            set.instances()
                .get(row)
                .cloned()
                .with_context(|| format!("row {row} is out of range ({} rows)", set.len()))?
        }
        (None, Some(text)) => {
            let raw = text
                .split(',')
                .map(|v| v.trim().parse::<f64>().with_context(|| format!("`{v}` is not a number")))
                .collect::<Result<Vec<_>>>()?;
            mf.model.check_input(&raw)?;
            FeatureVector::with_shape(mf.normalizer.apply_values(&raw)?, mf.shape)?
        }
        (None, None) => bail!("pass --row or --input"),
    };
    let cfg = build_config(&a.config, mf.shape, a.objective)?;
    let predicted = mf.model.predict(x.values())?;
    let target = a.target.unwrap_or((predicted + 1) % mf.model.class_count());
    mf.model.check_class(target)?;
    let reference = reference(&ctx.data.train, &mf.model, target, &cfg)?;
    let session = run(&mf.model, &x, target, &reference, &cfg)?;

    artifacts.seed("seed", cfg.seed);
    artifacts.set_config(json!({
        "data": ctx.source,
        "row": a.row,
        "input": a.input,
        "split": format!("{:?}", a.split).to_lowercase(),
        "target": target,
        "explain": cfg,
        "reference_samples": reference.count(),
    }));
    artifacts.write("session.json", &session_json(&session, mf, &ctx.source)?)?;
    if mf.shape.is_image() {
        artifacts.write("original.pgm", &pgm_bytes(&session.original)?)?;
        artifacts.write("counterfactual.pgm", &pgm_bytes(&session.counterfactual)?)?;
    }
    artifacts.finish()?;

    let outcome = match session.outcome {
        Outcome::Success => "success",
        Outcome::BudgetExhausted => "budget_exhausted",
        Outcome::InProgress => "in_progress",
    };
    println!("objective: {}", cfg.objective.name());
    println!(
        "class {} -> {}: {outcome}",
        class_name(mf, session.original_class),
        class_name(mf, target)
    );
    println!("p(target): {:.6} -> {:.6}", session.initial_prob, session.final_prob());
    println!("masked units: {}", session.mask.unit_cardinality());
    println!(
        "phi1: {}  phi2: {:.6}",
        phi1(session.original.values(), session.counterfactual.values())?,
        phi2(session.original.values(), session.counterfactual.values())?
    );
    Ok(match session.outcome {
        Outcome::Success => ExitCode::SUCCESS,
        _ => ExitCode::from(EXIT_BUDGET_EXHAUSTED),
    })
}

/// Test rows to explain: `n` random rows, skipping rows already predicted
/// as a fixed target.
fn pick_rows(model: &NetworkModel, test: &Dataset, n: usize, target: Option<usize>, seed: u64) -> Result<Vec<usize>> {
    let eligible: Vec<usize> = match target {
        Some(t) => {
            model.check_class(t)?;
            (0..test.len())
                .filter(|&i| model.predict(test.instances()[i].values()).map_or(true, |p| p != t))
                .collect()
        }
        None => (0..test.len()).collect(),
    };
    if eligible.is_empty() {
        bail!("no test instance is eligible for explanation");
    }
    Ok(select_instances(eligible.len(), n, seed).into_iter().map(|j| eligible[j]).collect())
}

fn policy(target: Option<usize>) -> TargetPolicy {
    target.map_or(TargetPolicy::NextClass, TargetPolicy::Fixed)
}

fn cmd_evaluate(a: EvaluateArgs) -> Result<ExitCode> {
    let mut artifacts = Artifacts::new(&a.out_dir, "evaluate", Value::Null)?;
    let ctx = open(&a.model, &a.data, a.config.seed, &mut artifacts)?;
    let test = test_split(&ctx.data)?;
    let model = &ctx.mf.model;
    let rows = pick_rows(model, test, a.n as usize, a.target, a.config.seed)?;
    let name = ctx.source.name();

    let mut reports = Vec::new();
    let mut configs = Vec::new();
    for &o in &a.objectives {
        let cfg = build_config(&a.config, ctx.mf.shape, o)?;
        reports.push(evaluate_batch(model, &ctx.data.train, test, &rows, policy(a.target), &cfg, a.epsilon, &name)?);
        configs.push(cfg);
    }
    artifacts.seed("seed", a.config.seed);
    artifacts.set_config(json!({
        "data": ctx.source,
        "n": a.n,
        "rows": rows,
        "epsilon": a.epsilon,
        "target_policy": policy(a.target),
        "objectives": configs,
    }));
    let csv = reports_csv(&reports);
    artifacts.write("report.csv", csv.as_bytes())?;
    artifacts.write("report.json", (reports_json(&reports) + "\n").as_bytes())?;
    artifacts.finish()?;
    print!("{csv}");
    for r in &reports {
        if r.coherence_undefined > 0 || r.budget_exhausted > 0 {
            eprintln!(
                "{}: {} budget exhausted, {} with an empty coherence neighbourhood",
                r.method, r.budget_exhausted, r.coherence_undefined
            );
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_generate(a: GenerateArgs) -> Result<ExitCode> {
    let mut artifacts = Artifacts::new(&a.out_dir, "generate", Value::Null)?;
    let ctx = open(&a.model, &a.data, a.config.seed, &mut artifacts)?;
    let mf = &ctx.mf;
    if !mf.shape.is_image() {
        bail!(gradcf::Error::NotImage);
    }
    mf.model.check_class(a.target)?;
    let seed_image = FeatureVector::with_shape(vec![a.fill; mf.model.input_dim()], mf.shape)?;
    let mut cfg = build_config(&a.config, mf.shape, ObjectiveArg::Gradual)?;
    cfg.lambda = 0.0;
    let reference = reference(&ctx.data.train, &mf.model, a.target, &cfg)?;
    let session = generate_from_seed(&mf.model, &seed_image, a.target, &reference, &cfg)?;
    let predicted = mf.model.predict(session.counterfactual.values())?;

    artifacts.seed("seed", cfg.seed);
    artifacts.set_config(json!({
        "data": ctx.source,
        "target": a.target,
        "fill": a.fill,
        "explain": cfg,
    }));
    artifacts.write("generated.pgm", &pgm_bytes(&session.counterfactual)?)?;
    artifacts.write("session.json", &session_json(&session, mf, &ctx.source)?)?;
    artifacts.finish()?;
    println!(
        "target {}: {:?}, predicted {}, p(target) {:.6}, masked units {}",
        class_name(mf, a.target),
        session.outcome,
        class_name(mf, predicted),
        session.final_prob(),
        session.mask.unit_cardinality()
    );
    Ok(ExitCode::SUCCESS)
}

fn cmd_ablate(a: AblateArgs) -> Result<ExitCode> {
    let mut artifacts = Artifacts::new(&a.out_dir, "ablate", Value::Null)?;
    let ctx = open(&a.model, &a.data, a.config.seed, &mut artifacts)?;
    let test = test_split(&ctx.data)?;
    let model = &ctx.mf.model;
    let rows = pick_rows(model, test, a.n as usize, a.target, a.config.seed)?;
    let cfg = build_config(&a.config, ctx.mf.shape, ObjectiveArg::Gradual)?;
    let report = paired_ablation(model, &ctx.data.train, test, &rows, policy(a.target), &cfg)?;

    let mut csv = String::from("index,target,gradual_success,ablation_success,gradual_distance,ablation_distance\n");
    for r in &report.rows {
        let _ = writeln!(
            csv,
            "{},{},{},{},{},{}",
            r.index, r.target, r.gradual_success, r.ablation_success, r.gradual_distance, r.ablation_distance
        );
    }
    artifacts.seed("seed", cfg.seed);
    artifacts.set_config(json!({
        "data": ctx.source,
        "n": a.n,
        "rows": rows,
        "target_policy": policy(a.target),
        "explain": cfg,
    }));
    artifacts.write("ablation.csv", csv.as_bytes())?;
    artifacts.write("ablation.json", (serde_json::to_string_pretty(&report)? + "\n").as_bytes())?;
    artifacts.finish()?;
    println!("pairs where both reach tau: {}", report.both_success);
    println!("gradual closer to the reference mean: {:.4}", report.gradual_lower_fraction);
    println!(
        "mean logit distance: gradual {:.6}, ablation {:.6}",
        report.gradual_mean_distance, report.ablation_mean_distance
    );
    println!(
        "success rate: gradual {:.4}, ablation {:.4}",
        report.gradual_success_rate, report.ablation_success_rate
    );
    Ok(ExitCode::SUCCESS)
}
