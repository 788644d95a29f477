//! Command-line front end: dataset generation, training, embedding export,
//! evaluation, gradient verification and alpha sweeps.
//!
//! Exit codes: 0 success, 1 usage error, 2 data/parse error, 3
//! numerical/runtime error. Results go to standard output, diagnostics to
//! standard error.

mod commands;

use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{Parser, Subcommand};

use commands::CliError;

#[derive(Parser)]
#[command(
    name = "trigon",
    about = "Triplet-triangle metric learning: train embeddings with angular, triplet and N-pair losses, then evaluate retrieval and clustering quality",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic Gaussian-cluster feature file.
    Synth {
        /// Number of classes.
        #[arg(long, default_value_t = 20)]
        classes: usize,
        /// Samples per class.
        #[arg(long = "per-class", default_value_t = 30)]
        per_class: usize,
        /// Feature dimension.
        #[arg(long, default_value_t = 32)]
        dim: usize,
        /// Scale of the isotropic Gaussian the class centers are drawn from.
        #[arg(long = "center-scale", default_value_t = 1.0)]
        center_scale: f64,
        /// Standard deviation of the per-sample noise.
        #[arg(long, default_value_t = 0.6)]
        noise: f64,
        /// RNG seed (all randomized commands require one explicitly).
        #[arg(long)]
        seed: u64,
        /// Output feature file.
        #[arg(long)]
        out: String,
    },
    /// Train an encoder on a feature file.
    Train {
        /// Input feature file.
        #[arg(long)]
        data: String,
        /// Loss: triplet | triplet-npair | angular | npair | npair-angular.
        #[arg(long)]
        loss: String,
        /// Angular margin in degrees (required by angular losses).
        #[arg(long)]
        alpha: Option<f64>,
        /// Triplet margin.
        #[arg(long, default_value_t = 0.1)]
        margin: f64,
        /// Weight of the angular term in the combined loss.
        #[arg(long, default_value_t = 2.0)]
        lambda: f64,
        /// Mini-batch size (samples per iteration).
        #[arg(long, default_value_t = 32)]
        batch: usize,
        /// Training iterations.
        #[arg(long, default_value_t = 2000)]
        iters: usize,
        /// Learning rate.
        #[arg(long, default_value_t = 0.05)]
        lr: f64,
        /// Embedding dimension.
        #[arg(long = "embed-dim", default_value_t = 16)]
        embed_dim: usize,
        /// Encoder: identity | linear | one-hidden.
        #[arg(long, default_value = "linear")]
        encoder: String,
        /// Hidden width of the one-hidden encoder.
        #[arg(long = "hidden-dim", default_value_t = 32)]
        hidden_dim: usize,
        /// L2-normalize encoder outputs.
        #[arg(long)]
        normalize: bool,
        #[arg(long)]
        seed: u64,
        /// Output model file.
        #[arg(long = "out-model")]
        out_model: String,
        /// Output loss-history file (one value per iteration).
        #[arg(long = "out-history")]
        out_history: String,
    },
    /// Map a feature file through a trained model.
    Embed {
        /// Model file written by `train`.
        #[arg(long)]
        model: String,
        /// Input feature file.
        #[arg(long)]
        data: String,
        /// Output feature file of embeddings (labels preserved).
        #[arg(long)]
        out: String,
    },
    /// Score a feature file of embeddings: Recall@R, NMI, pairwise F1.
    Eval {
        /// Feature file of embeddings to score.
        #[arg(long)]
        data: String,
        /// Comma-separated Recall@R cut-offs.
        #[arg(long = "recall-list", default_value = "1,2,4,8")]
        recall_list: String,
        /// k for k-means; defaults to the number of distinct labels.
        #[arg(long)]
        k: Option<usize>,
        #[arg(long)]
        seed: u64,
    },
    /// Compare analytic loss gradients against finite differences.
    GradCheck {
        /// Loss: triplet | angular | angular-batch | npair | npair-angular |
        /// triplet-npair.
        #[arg(long)]
        loss: String,
        /// Random instances to check.
        #[arg(long, default_value_t = 1000)]
        trials: usize,
        /// Embedding dimension of the random instances.
        #[arg(long, default_value_t = 8)]
        dim: usize,
        /// Maximum accepted relative error.
        #[arg(long, default_value_t = 1e-5)]
        tol: f64,
        #[arg(long)]
        seed: u64,
    },
    /// Train and evaluate once per alpha, sharing the seed across runs.
    SweepAlpha {
        /// Training feature file.
        #[arg(long)]
        data: String,
        /// Feature file to embed and evaluate (defaults to the training data).
        #[arg(long = "eval-data")]
        eval_data: Option<String>,
        /// Comma-separated alpha values in degrees.
        #[arg(long)]
        alphas: String,
        /// Loss: angular | npair-angular.
        #[arg(long, default_value = "npair-angular")]
        loss: String,
        #[arg(long, default_value_t = 0.1)]
        margin: f64,
        #[arg(long, default_value_t = 2.0)]
        lambda: f64,
        #[arg(long, default_value_t = 32)]
        batch: usize,
        #[arg(long, default_value_t = 2000)]
        iters: usize,
        #[arg(long, default_value_t = 0.05)]
        lr: f64,
        #[arg(long = "embed-dim", default_value_t = 16)]
        embed_dim: usize,
        #[arg(long, default_value = "linear")]
        encoder: String,
        #[arg(long = "hidden-dim", default_value_t = 32)]
        hidden_dim: usize,
        #[arg(long)]
        normalize: bool,
        #[arg(long = "recall-list", default_value = "1,2,4,8")]
        recall_list: String,
        #[arg(long)]
        k: Option<usize>,
        #[arg(long)]
        seed: u64,
    },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                let _ = e.print();
                return ExitCode::SUCCESS;
            }
            let _ = e.print();
            return ExitCode::from(1);
        }
    };
    let result = match cli.command {
        Command::Synth {
            classes,
            per_class,
            dim,
            center_scale,
            noise,
            seed,
            out,
        } => commands::cmd_synth(classes, per_class, dim, center_scale, noise, seed, &out),
        Command::Train {
            data,
            loss,
            alpha,
            margin,
            lambda,
            batch,
            iters,
            lr,
            embed_dim,
            encoder,
            hidden_dim,
            normalize,
            seed,
            out_model,
            out_history,
        } => commands::cmd_train(&commands::TrainArgs {
            data,
            loss,
            alpha,
            margin,
            lambda,
            batch,
            iters,
            lr,
            embed_dim,
            encoder,
            hidden_dim,
            normalize,
            seed,
            out_model: Some(out_model),
            out_history: Some(out_history),
        })
        .map(|_| ()),
        Command::Embed { model, data, out } => commands::cmd_embed(&model, &data, &out),
        Command::Eval {
            data,
            recall_list,
            k,
            seed,
        } => commands::cmd_eval(&data, &recall_list, k, seed),
        Command::GradCheck {
            loss,
            trials,
            dim,
            tol,
            seed,
        } => commands::cmd_grad_check(&loss, trials, dim, tol, seed),
        Command::SweepAlpha {
            data,
            eval_data,
            alphas,
            loss,
            margin,
            lambda,
            batch,
            iters,
            lr,
            embed_dim,
            encoder,
            hidden_dim,
            normalize,
            recall_list,
            k,
            seed,
        } => commands::cmd_sweep_alpha(&commands::SweepArgs {
            data,
            eval_data,
            alphas,
            loss,
            margin,
            lambda,
            batch,
            iters,
            lr,
            embed_dim,
            encoder,
            hidden_dim,
            normalize,
            recall_list,
            k,
            seed,
        }),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(err.exit_code())
        }
    }
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Data(_) => 2,
            CliError::Runtime(_) => 3,
        }
    }
}
