//! `perfsearch eval`: joins a predictions file with a truth file by
//! architecture and prints MAE and Kendall-Tau, optionally writing the
//! discordance profile as CSV.

use std::collections::BTreeMap;
use std::path::PathBuf;

use clap::Args as ClapArgs;
use perfsearch_core::metrics::{discordance_profile, kendall_tau, mae, ScorePairs, TauOutcome};
use perfsearch_core::space::Architecture;

use crate::error::CliError;
use crate::formats;
use crate::manifest::{manifest_path_for, ManifestBuilder};

#[derive(Debug, ClapArgs)]
pub struct Args {
    /// Predictions JSONL ({"arch", "prediction"} rows).
    #[arg(long)]
    pub pred_file: PathBuf,
    /// Truth JSONL (eval records with {"arch", "score"} rows).
    #[arg(long)]
    pub truth_file: PathBuf,
    /// Write the discordant-pair distance histogram/CDF as CSV.
    #[arg(long)]
    pub discordance_out: Option<PathBuf>,
}

fn arch_key(arch: &Architecture) -> String {
    serde_json::to_string(arch).expect("architectures serialize")
}

pub fn run(args: &Args) -> Result<(), CliError> {
    let predictions = formats::read_predictions(&args.pred_file)?;
    let (_, truths) = formats::read_eval_records(&args.truth_file)?;

    let mut prediction_by_key: BTreeMap<String, f64> = BTreeMap::new();
    for row in &predictions {
        prediction_by_key.insert(arch_key(&row.arch), row.prediction);
    }
    let mut truth_by_key: BTreeMap<String, f64> = BTreeMap::new();
    for record in &truths {
        truth_by_key.insert(arch_key(&record.arch), record.score);
    }

    let missing_truth: Vec<&String> = prediction_by_key
        .keys()
        .filter(|k| !truth_by_key.contains_key(*k))
        .collect();
    let missing_pred: Vec<&String> = truth_by_key
        .keys()
        .filter(|k| !prediction_by_key.contains_key(*k))
        .collect();
    if !missing_truth.is_empty() || !missing_pred.is_empty() {
        let mut message = String::from("prediction and truth files cover different architectures.");
        for (label, missing) in [("truth", missing_truth), ("predictions", missing_pred)] {
            if !missing.is_empty() {
                message.push_str(&format!(" missing from {label} ({}):", missing.len()));
                for key in missing.iter().take(3) {
                    message.push_str(&format!(" {key}"));
                }
                if missing.len() > 3 {
                    message.push_str(" ...");
                }
            }
        }
        return Err(CliError::Input(message));
    }

    let mut preds = Vec::with_capacity(prediction_by_key.len());
    let mut golds = Vec::with_capacity(prediction_by_key.len());
    for (key, pred) in &prediction_by_key {
        preds.push(*pred);
        golds.push(truth_by_key[key]);
    }
    let pairs = ScorePairs::new(preds, golds).map_err(|e| CliError::Input(e.to_string()))?;
    println!("MAE: {:.6}", mae(&pairs));
    match kendall_tau(&pairs).map_err(|e| CliError::Input(e.to_string()))? {
        TauOutcome::Value(tau) => {
            // The x100 form is presentation only.
            println!("Kendall-Tau: {:.6} (x100: {:.2})", tau, tau * 100.0);
        }
        TauOutcome::Degenerate => println!("Kendall-Tau: degenerate (no rank variation)"),
    }
    if let Some(out) = &args.discordance_out {
        let profile = discordance_profile(&pairs).map_err(|e| CliError::Input(e.to_string()))?;
        formats::write_text(out, &profile.to_csv())?;
        ManifestBuilder::new("eval")
            .config(&serde_json::json!({"rows": pairs.len()}))
            .input(&args.pred_file)?
            .input(&args.truth_file)?
            .output(out)
            .write(&manifest_path_for(out))?;
        eprintln!("wrote {}", out.display());
    }
    Ok(())
}
