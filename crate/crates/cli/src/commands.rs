use std::fs;
use std::path::Path;

use mcdf_core::dataset::{
    family_files, load_family_csv, read_wildtype_fasta, write_family, LoadOptions,
};
use mcdf_core::eval::{
    generate_synthetic_benchmark, run_sweep, EvalConfig, SweepReport, DEFAULT_RATE_GRID,
};
use mcdf_core::hash::fnv1a64;
use mcdf_core::mc::{score_sequence, InjectionPlan, MCConfig};
use mcdf_core::model::{init_random, load_weights, save_weights, ModelConfig, Parameters};
use mcdf_core::vocab::{default_vocabulary, EncodeMode};
use mcdf_core::FamilyDataset;

use crate::error::{code, CliError};
use crate::{EvalArgs, FamilyArgs, GenSyntheticArgs, InitModelArgs, ScoreArgs, SweepArgs};

fn provenance(command: &str, seed: u64, config_hash: u64) {
    eprintln!(
        "mcdf {} {command} seed={seed} config_hash={config_hash:016x}",
        env!("CARGO_PKG_VERSION")
    );
}

fn load_model(path: &Path) -> Result<Parameters, CliError> {
    let (_, params) = load_weights(path)
        .map_err(|e| CliError::from(e).prefixed(&format!("{}", path.display())))?;
    Ok(params)
}

fn write_output(path: &Path, contents: &str) -> Result<(), CliError> {
    fs::write(path, contents).map_err(|e| CliError::io(format!("{}: {e}", path.display())))
}

impl CliError {
    fn prefixed(mut self, prefix: &str) -> Self {
        self.message = format!("{prefix}: {}", self.message);
        self
    }
}

pub fn init_model(args: InitModelArgs) -> Result<(), CliError> {
    let config = match args.config.as_deref() {
        None => ModelConfig::default(),
        Some(raw) => {
            let text = if raw.trim_start().starts_with('{') {
                raw.to_string()
            } else {
                fs::read_to_string(raw).map_err(|e| CliError::io(format!("{raw}: {e}")))?
            };
            serde_json::from_str(&text)
                .map_err(|e| CliError::usage(format!("malformed model config: {e}")))?
        }
    };
    let params = init_random(&config, args.seed)?;
    provenance("init-model", args.seed, config.fingerprint());
    save_weights(&params, &args.out)
        .map_err(|e| CliError::from(e).prefixed(&format!("{}", args.out.display())))?;
    println!(
        "{}",
        serde_json::to_string(&config).expect("config serializes")
    );
    Ok(())
}

pub fn score(args: ScoreArgs) -> Result<(), CliError> {
    let params = load_model(&args.model)?;
    let path = Path::new(&args.seq);
    let raw = if path.is_file() {
        read_wildtype_fasta(path)?
    } else {
        args.seq.clone()
    };
    let tokens = default_vocabulary().encode(raw.trim(), EncodeMode::Strict)?;
    let plan = InjectionPlan::new(args.dropout, args.mc.depth_fraction)?;
    let samples = if args.dropout == 0.0 {
        1
    } else {
        args.mc.samples
    };
    let mc = MCConfig::new(samples, args.mc.seed)?;
    provenance("score", args.mc.seed, params.config().fingerprint());
    let y = score_sequence(&params, &tokens, &plan, &mc)?;
    println!("{y}");
    Ok(())
}

fn load_families(args: &FamilyArgs) -> Result<Vec<FamilyDataset>, CliError> {
    let wildtype = args
        .wildtype
        .as_deref()
        .map(read_wildtype_fasta)
        .transpose()?;
    let paths = family_files(&args.families)?;
    let options = LoadOptions {
        lenient: args.lenient,
    };
    let mut families = Vec::new();
    for path in paths {
        match load_family_csv(&path, wildtype.as_deref(), options) {
            Ok(loaded) => {
                if !loaded.skipped.is_empty() {
                    eprintln!(
                        "{}: skipped {} rows (first at line {}: {})",
                        path.display(),
                        loaded.skipped.len(),
                        loaded.skipped[0].line,
                        loaded.skipped[0].reason
                    );
                }
                families.push(loaded.dataset);
            }
            Err(e) => eprintln!("skipping {}: {e}", path.display()),
        }
    }
    if families.is_empty() {
        return Err(CliError::new(
            code::NOTHING_EVALUABLE,
            format!("no loadable families in {}", args.families.display()),
        ));
    }
    Ok(families)
}

fn evaluate(command: &str, args: &FamilyArgs, rates: Vec<f64>) -> Result<(), CliError> {
    let params = load_model(&args.model)?;
    let config = EvalConfig {
        rates,
        depth_fraction: args.mc.depth_fraction,
        mc: MCConfig::new(args.mc.samples, args.mc.seed)?,
        model_path: Some(args.model.display().to_string()),
    }
    .with_baseline();
    config.validate()?;
    let families = load_families(args)?;
    let fingerprint = format!(
        "{}\n{}",
        serde_json::to_string(&config).expect("config serializes"),
        serde_json::to_string(params.config()).expect("config serializes")
    );
    provenance(command, args.mc.seed, fnv1a64(fingerprint.as_bytes()));

    let report = run_sweep(&params, &config, &families)?;
    for rate in &report.rates {
        for s in &rate.skipped {
            eprintln!("rate {}: skipped {}: {}", rate.rate, s.family_id, s.reason);
        }
    }
    if let Some(out) = &args.out {
        let is_csv = out
            .extension()
            .is_some_and(|e| e.eq_ignore_ascii_case("csv"));
        write_output(
            out,
            &if is_csv {
                report.to_csv()
            } else {
                report.to_json()
            },
        )?;
    }
    if let Some(out) = &args.csv_out {
        write_output(out, &report.to_csv())?;
    }
    print_medians(&report);
    Ok(())
}

fn print_medians(report: &SweepReport) {
    println!("rate\tmedian_srcc\tn_families\tn_skipped");
    for r in &report.rates {
        let median = r.median.map_or_else(|| "NA".to_string(), |m| m.to_string());
        println!(
            "{}\t{median}\t{}\t{}",
            r.rate,
            r.families.len(),
            r.skipped.len()
        );
    }
}

pub fn eval(args: EvalArgs) -> Result<(), CliError> {
    evaluate("eval", &args.common, vec![args.dropout])
}

pub fn sweep(args: SweepArgs) -> Result<(), CliError> {
    let rates = args.rates.unwrap_or_else(|| DEFAULT_RATE_GRID.to_vec());
    evaluate("sweep", &args.common, rates)
}

pub fn gen_synthetic(args: GenSyntheticArgs) -> Result<(), CliError> {
    let teacher = load_model(&args.teacher)?;
    let families =
        generate_synthetic_benchmark(&teacher, args.seed, args.families, args.mutants, args.noise)?;
    provenance("gen-synthetic", args.seed, teacher.config().fingerprint());
    fs::create_dir_all(&args.out)
        .map_err(|e| CliError::io(format!("{}: {e}", args.out.display())))?;
    println!("family_id\tn_mutants\twildtype_len");
    for fam in &families {
        write_family(&args.out, fam)?;
        println!(
            "{}\t{}\t{}",
            fam.family_id,
            fam.records.len(),
            fam.wildtype.len()
        );
    }
    Ok(())
}
