//! Command implementations. Every command maps library errors onto the
//! documented exit-code classes: usage (1), data/parse (2), runtime (3).

use std::fmt;
use std::path::Path;

use trigon::evaluation::{self, MetricReport};
use trigon::gradcheck::{self, GradCheckConfig, GradCheckTarget};
use trigon::io;
use trigon::sampling::LabeledDataset;
use trigon::training::{self, EncoderKind, LossKind, TrainConfig};
use trigon::Error;

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Data(String),
    Runtime(String),
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "{m}"),
            CliError::Data(m) => write!(f, "{m}"),
            CliError::Runtime(m) => write!(f, "{m}"),
        }
    }
}

/// Errors while loading or writing files are data errors.
fn data_err(e: impl fmt::Display) -> CliError {
    CliError::Data(e.to_string())
}

/// Errors raised while a command computes: bad configuration surfaces as a
/// usage error, unsatisfiable datasets as data errors, everything numeric as
/// a runtime error.
fn run_err(e: Error) -> CliError {
    match e {
        Error::InvalidInput(m) => CliError::Usage(m),
        Error::Sampling(m) => CliError::Data(format!("sampling failed: {m}")),
        Error::Parse { .. } | Error::Io(_) => CliError::Data(e.to_string()),
        Error::Numerical(m) => CliError::Runtime(format!("numerical failure: {m}")),
        Error::Diverged { .. } => CliError::Runtime(e.to_string()),
    }
}

fn load_dataset(path: &str) -> Result<LabeledDataset<f64>, CliError> {
    io::read_feature_file(Path::new(path))
        .map_err(|e| CliError::Data(format!("{path}: {e}")))
}

pub fn parse_loss_kind(token: &str) -> Result<LossKind, CliError> {
    match token {
        "triplet" => Ok(LossKind::TripletDisjoint),
        "triplet-npair" => Ok(LossKind::TripletNPair),
        "angular" => Ok(LossKind::Angular),
        "npair" => Ok(LossKind::NPair),
        "npair-angular" => Ok(LossKind::NPairAngular),
        _ => Err(CliError::Usage(format!(
            "unknown loss '{token}' (expected triplet, triplet-npair, angular, npair or npair-angular)"
        ))),
    }
}

fn parse_encoder(token: &str) -> Result<EncoderKind, CliError> {
    io::parse_kind_token(token).map_err(|e| CliError::Usage(e.to_string()))
}

fn parse_number_list<T: std::str::FromStr>(list: &str, what: &str) -> Result<Vec<T>, CliError> {
    let values: Result<Vec<T>, _> = list
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(str::parse)
        .collect();
    match values {
        Ok(v) if !v.is_empty() => Ok(v),
        _ => Err(CliError::Usage(format!(
            "could not parse {what} list '{list}'"
        ))),
    }
}

pub fn cmd_synth(
    classes: usize,
    per_class: usize,
    dim: usize,
    center_scale: f64,
    noise: f64,
    seed: u64,
    out: &str,
) -> Result<(), CliError> {
    let data =
        training::generate_synthetic::<f64>(classes, per_class, dim, center_scale, noise, seed)
            .map_err(run_err)?;
    let header = format!(
        "synthetic classes={classes} per_class={per_class} dim={dim} center_scale={center_scale} noise={noise} seed={seed}"
    );
    io::write_feature_file(Path::new(out), &data, &[header]).map_err(data_err)?;
    println!("rows\t{}", data.len());
    println!("classes\t{}", data.num_classes());
    Ok(())
}

pub struct TrainArgs {
    pub data: String,
    pub loss: String,
    pub alpha: Option<f64>,
    pub margin: f64,
    pub lambda: f64,
    pub batch: usize,
    pub iters: usize,
    pub lr: f64,
    pub embed_dim: usize,
    pub encoder: String,
    pub hidden_dim: usize,
    pub normalize: bool,
    pub seed: u64,
    pub out_model: Option<String>,
    pub out_history: Option<String>,
}

fn build_train_config(args: &TrainArgs) -> Result<(LossKind, TrainConfig), CliError> {
    let loss = parse_loss_kind(&args.loss)?;
    if loss.needs_alpha() && args.alpha.is_none() {
        return Err(CliError::Usage(format!(
            "loss '{}' requires --alpha",
            args.loss
        )));
    }
    let encoder = parse_encoder(&args.encoder)?;
    let config = TrainConfig {
        loss,
        alpha_degrees: args.alpha,
        margin: args.margin,
        lambda: args.lambda,
        batch_size: args.batch,
        iterations: args.iters,
        learning_rate: args.lr,
        seed: args.seed,
        encoder,
        embed_dim: args.embed_dim,
        hidden_dim: args.hidden_dim,
        normalize_output: args.normalize,
    };
    Ok((loss, config))
}

pub fn cmd_train(args: &TrainArgs) -> Result<(trigon::Encoder64, Vec<f64>), CliError> {
    let (_, config) = build_train_config(args)?;
    let data = load_dataset(&args.data)?;
    let (model, history) = training::train(&data, &config).map_err(run_err)?;
    if let Some(path) = &args.out_model {
        io::write_model_file(Path::new(path), &model).map_err(data_err)?;
    }
    if let Some(path) = &args.out_history {
        io::write_history_file(Path::new(path), &history).map_err(data_err)?;
    }
    println!("iterations\t{}", history.len());
    println!(
        "final_loss\t{}",
        io::fmt_f64(*history.last().expect("iterations >= 1"))
    );
    Ok((model, history))
}

pub fn cmd_embed(model_path: &str, data_path: &str, out: &str) -> Result<(), CliError> {
    let model = io::read_model_file(Path::new(model_path))
        .map_err(|e| CliError::Data(format!("{model_path}: {e}")))?;
    let data = load_dataset(data_path)?;
    if model.input_dim() != data.dim() {
        return Err(CliError::Data(format!(
            "model expects dimension {} but {data_path} has dimension {}",
            model.input_dim(),
            data.dim()
        )));
    }
    let embeddings = model.embed(data.vectors()).map_err(run_err)?;
    let embedded = LabeledDataset::from_parts(embeddings, data.labels().to_vec())
        .map_err(|e| CliError::Runtime(e.to_string()))?;
    let header = format!(
        "embeddings model={} embed_dim={} normalize_output={}",
        model_path,
        model.embed_dim(),
        model.normalize_output()
    );
    io::write_feature_file(Path::new(out), &embedded, &[header]).map_err(data_err)?;
    println!("rows\t{}", embedded.len());
    Ok(())
}

fn evaluate_dataset(
    data: &LabeledDataset<f64>,
    recall_list: &str,
    k: Option<usize>,
    seed: u64,
) -> Result<MetricReport, CliError> {
    let r_values: Vec<usize> = parse_number_list(recall_list, "recall")?;
    evaluation::evaluate(data.vectors(), data.labels(), &r_values, k, seed).map_err(run_err)
}

pub fn cmd_eval(
    data_path: &str,
    recall_list: &str,
    k: Option<usize>,
    seed: u64,
) -> Result<(), CliError> {
    let data = load_dataset(data_path)?;
    let report = evaluate_dataset(&data, recall_list, k, seed)?;
    print!("{}", report.to_text());
    Ok(())
}

pub fn cmd_grad_check(
    loss: &str,
    trials: usize,
    dim: usize,
    tol: f64,
    seed: u64,
) -> Result<(), CliError> {
    let target = match loss {
        "triplet" => GradCheckTarget::Triplet,
        "angular" => GradCheckTarget::Angular,
        "angular-batch" => GradCheckTarget::AngularBatch,
        "npair" => GradCheckTarget::NPair,
        "npair-angular" => GradCheckTarget::Combined,
        "triplet-npair" => GradCheckTarget::TripletBatch,
        _ => {
            return Err(CliError::Usage(format!(
                "unknown loss '{loss}' (expected triplet, angular, angular-batch, npair, npair-angular or triplet-npair)"
            )))
        }
    };
    if !(tol >= 0.0 && tol.is_finite()) {
        return Err(CliError::Usage("tolerance must be a nonnegative number".into()));
    }
    let config = GradCheckConfig {
        trials,
        dim,
        seed,
        ..GradCheckConfig::default()
    };
    let report = gradcheck::run_grad_check::<f64>(target, &config).map_err(run_err)?;
    println!("loss\t{loss}");
    println!("trials\t{}", report.trials);
    println!("skipped_kinks\t{}", report.skipped_kinks);
    println!("max_rel_error\t{:.6e}", report.max_rel_error);
    let pass = report.max_rel_error.is_finite() && report.max_rel_error <= tol;
    println!("result\t{}", if pass { "PASS" } else { "FAIL" });
    if pass {
        Ok(())
    } else {
        Err(CliError::Runtime(format!(
            "gradient check failed: max relative error {:.6e} exceeds tolerance {tol:e}",
            report.max_rel_error
        )))
    }
}

pub struct SweepArgs {
    pub data: String,
    pub eval_data: Option<String>,
    pub alphas: String,
    pub loss: String,
    pub margin: f64,
    pub lambda: f64,
    pub batch: usize,
    pub iters: usize,
    pub lr: f64,
    pub embed_dim: usize,
    pub encoder: String,
    pub hidden_dim: usize,
    pub normalize: bool,
    pub recall_list: String,
    pub k: Option<usize>,
    pub seed: u64,
}

pub fn cmd_sweep_alpha(args: &SweepArgs) -> Result<(), CliError> {
    let alphas: Vec<f64> = parse_number_list(&args.alphas, "alpha")?;
    let loss = parse_loss_kind(&args.loss)?;
    if !loss.needs_alpha() {
        return Err(CliError::Usage(format!(
            "sweep-alpha varies alpha; loss '{}' does not use it (expected angular or npair-angular)",
            args.loss
        )));
    }
    let r_values: Vec<usize> = parse_number_list(&args.recall_list, "recall")?;
    let encoder = parse_encoder(&args.encoder)?;
    let train_data = load_dataset(&args.data)?;
    let eval_data = match &args.eval_data {
        Some(path) => load_dataset(path)?,
        None => train_data.clone(),
    };

    let mut header = String::from("# alpha");
    for r in &r_values {
        header.push_str(&format!("\trecall@{r}"));
    }
    header.push_str("\tnmi\tf1");
    println!("{header}");

    for &alpha in &alphas {
        let config = TrainConfig {
            loss,
            alpha_degrees: Some(alpha),
            margin: args.margin,
            lambda: args.lambda,
            batch_size: args.batch,
            iterations: args.iters,
            learning_rate: args.lr,
            seed: args.seed,
            encoder,
            embed_dim: args.embed_dim,
            hidden_dim: args.hidden_dim,
            normalize_output: args.normalize,
        };
        let (model, _) = training::train(&train_data, &config).map_err(run_err)?;
        if model.input_dim() != eval_data.dim() {
            return Err(CliError::Data(format!(
                "evaluation data has dimension {}, training data {}",
                eval_data.dim(),
                train_data.dim()
            )));
        }
        let embeddings = model.embed(eval_data.vectors()).map_err(run_err)?;
        let report = evaluation::evaluate(
            &embeddings,
            eval_data.labels(),
            &r_values,
            args.k,
            args.seed,
        )
        .map_err(run_err)?;

        let mut row = format!("{alpha:.6}");
        for r in &r_values {
            row.push_str(&format!("\t{:.6}", report.recall_at[r]));
        }
        row.push_str(&format!("\t{:.6}\t{:.6}", report.nmi, report.f1));
        println!("{row}");
    }
    Ok(())
}
