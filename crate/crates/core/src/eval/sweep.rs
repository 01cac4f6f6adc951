use std::time::{SystemTime, UNIX_EPOCH};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::stats::{median, spearman};
use super::EvalError;
use crate::dataset::FamilyDataset;
use crate::hash::fnv1a64;
use crate::mc::{score_sequence, InjectionPlan, MCConfig};
use crate::model::Parameters;
use crate::vocab::{default_vocabulary, EncodeMode};

/// Rates evaluated by default; 0.0 is the unmodified model.
pub const DEFAULT_RATE_GRID: [f64; 6] = [0.0, 0.05, 0.1, 0.2, 0.3, 0.5];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalConfig {
    pub rates: Vec<f64>,
    pub depth_fraction: f64,
    pub mc: MCConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub model_path: Option<String>,
}

impl Default for EvalConfig {
    fn default() -> Self {
        EvalConfig {
            rates: DEFAULT_RATE_GRID.to_vec(),
            depth_fraction: 0.0,
            mc: MCConfig::default(),
            model_path: None,
        }
    }
}

impl EvalConfig {
    /// Rates must be distinct, lie in `[0, 1)`, and include the 0.0
    /// baseline.
    pub fn validate(&self) -> Result<(), EvalError> {
        let bad = |m: String| Err(EvalError::Config(m));
        if self.rates.is_empty() {
            return bad("rate grid is empty".into());
        }
        for (i, &r) in self.rates.iter().enumerate() {
            if !(0.0..1.0).contains(&r) {
                return bad(format!("rate {r} outside [0, 1)"));
            }
            if self.rates[..i].contains(&r) {
                return bad(format!("rate {r} listed twice"));
            }
        }
        if !self.rates.contains(&0.0) {
            return bad("rate grid must include the 0.0 baseline".into());
        }
        if !(0.0..=1.0).contains(&self.depth_fraction) {
            return bad(format!(
                "depth fraction {} outside [0, 1]",
                self.depth_fraction
            ));
        }
        self.mc.validate()?;
        Ok(())
    }

    /// Adds the 0.0 baseline if missing and sorts ascending.
    pub fn with_baseline(mut self) -> Self {
        if !self.rates.contains(&0.0) {
            self.rates.push(0.0);
        }
        self.rates.sort_by(f64::total_cmp);
        self
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FamilyResult {
    pub family_id: String,
    pub srcc: f64,
    pub n_mutants: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SkippedFamily {
    pub family_id: String,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateResult {
    pub rate: f64,
    /// Median SRCC over evaluated families; absent when all were skipped.
    pub median: Option<f64>,
    pub families: Vec<FamilyResult>,
    pub skipped: Vec<SkippedFamily>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub version: String,
    pub base_seed: u64,
    pub n_samples: usize,
    pub depth_fraction: f64,
    /// FNV-1a over the JSON of the eval config and model config.
    pub config_hash: String,
    pub timestamp_unix: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepReport {
    pub provenance: Provenance,
    pub rates: Vec<RateResult>,
}

/// One line of the flat report CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub rate: f64,
    pub family_id: String,
    pub srcc: f64,
    pub n_mutants: usize,
}

impl SweepReport {
    pub fn rate(&self, rate: f64) -> Option<&RateResult> {
        self.rates.iter().find(|r| r.rate == rate)
    }

    pub fn rows(&self) -> Vec<ReportRow> {
        self.rates
            .iter()
            .flat_map(|r| {
                r.families.iter().map(move |f| ReportRow {
                    rate: r.rate,
                    family_id: f.family_id.clone(),
                    srcc: f.srcc,
                    n_mutants: f.n_mutants,
                })
            })
            .collect()
    }

    /// Flat `rate,family_id,srcc,n_mutants` table.
    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        for row in self.rows() {
            w.serialize(row).expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8")
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

pub fn parse_report_csv(text: &str) -> Result<Vec<ReportRow>, EvalError> {
    let mut reader = csv::Reader::from_reader(text.as_bytes());
    let headers = reader
        .headers()
        .map_err(|e| EvalError::ReportCsv(e.to_string()))?;
    if headers.iter().collect::<Vec<_>>() != ["rate", "family_id", "srcc", "n_mutants"] {
        return Err(EvalError::ReportCsv(format!(
            "unexpected header {headers:?}"
        )));
    }
    reader
        .deserialize()
        .map(|r| r.map_err(|e: csv::Error| EvalError::ReportCsv(e.to_string())))
        .collect()
}

/// `score_sequence` for every mutant, in record order. All mutants share
/// `mc.base_seed`, so equal-length variants see the same dropout masks.
pub fn score_family(
    params: &Parameters,
    family: &FamilyDataset,
    plan: &InjectionPlan,
    mc: &MCConfig,
) -> Result<Vec<f64>, EvalError> {
    let vocab = default_vocabulary();
    let tokens = family
        .mutant_sequences()?
        .iter()
        .map(|s| vocab.encode(s, EncodeMode::Strict))
        .collect::<Result<Vec<_>, _>>()?;
    tokens
        .par_iter()
        .map(|t| Ok(score_sequence(params, t, plan, mc)?))
        .collect()
}

pub fn evaluate_family(
    params: &Parameters,
    family: &FamilyDataset,
    plan: &InjectionPlan,
    mc: &MCConfig,
) -> Result<FamilyResult, EvalError> {
    let scores = score_family(params, family, plan, mc)?;
    let srcc = spearman(&scores, &family.fitness())?;
    Ok(FamilyResult {
        family_id: family.family_id.clone(),
        srcc,
        n_mutants: family.records.len(),
    })
}

/// Evaluates every family at every rate. Families that fail are listed as
/// skipped for that rate; the sweep fails only if nothing was evaluated.
/// Output is sorted by rate and family id.
pub fn run_sweep(
    params: &Parameters,
    config: &EvalConfig,
    families: &[FamilyDataset],
) -> Result<SweepReport, EvalError> {
    config.validate()?;
    if families.is_empty() {
        return Err(EvalError::Config("no families to evaluate".into()));
    }
    let mut rates = config.rates.clone();
    rates.sort_by(f64::total_cmp);

    let mut results = Vec::with_capacity(rates.len());
    for &rate in &rates {
        let plan = InjectionPlan::new(rate, config.depth_fraction)?;
        let outcomes: Vec<_> = families
            .par_iter()
            .map(|f| (f, evaluate_family(params, f, &plan, &config.mc)))
            .collect();
        let mut evaluated = Vec::new();
        let mut skipped = Vec::new();
        for (family, outcome) in outcomes {
            match outcome {
                Ok(r) => evaluated.push(r),
                Err(e) => skipped.push(SkippedFamily {
                    family_id: family.family_id.clone(),
                    reason: e.to_string(),
                }),
            }
        }
        evaluated.sort_by(|a, b| a.family_id.cmp(&b.family_id));
        skipped.sort_by(|a, b| a.family_id.cmp(&b.family_id));
        let srccs: Vec<f64> = evaluated.iter().map(|r| r.srcc).collect();
        results.push(RateResult {
            rate,
            median: median(&srccs).ok(),
            families: evaluated,
            skipped,
        });
    }
    if results.iter().all(|r| r.families.is_empty()) {
        return Err(EvalError::AllFamiliesSkipped);
    }

    let fingerprint = format!(
        "{}\n{}",
        serde_json::to_string(config).expect("config serializes"),
        serde_json::to_string(params.config()).expect("config serializes")
    );
    Ok(SweepReport {
        provenance: Provenance {
            version: env!("CARGO_PKG_VERSION").to_string(),
            base_seed: config.mc.base_seed,
            n_samples: config.mc.n_samples,
            depth_fraction: config.depth_fraction,
            config_hash: format!("{:016x}", fnv1a64(fingerprint.as_bytes())),
            timestamp_unix: SystemTime::now()
                .duration_since(UNIX_EPOCH)
                .map_or(0, |d| d.as_secs()),
        },
        rates: results,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::MutantRecord;
    use crate::mc::{score, InferenceError};
    use crate::model::{forward, init_random, ModelConfig};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn tiny() -> Parameters {
        let cfg = ModelConfig {
            n_layers: 1,
            d_model: 8,
            n_heads: 2,
            d_ff: 16,
            n_t: 27,
            max_len: 40,
            ln_eps: 1e-5,
        };
        init_random(&cfg, 11).unwrap()
    }

    const WT: &str = "MKTAYIAKQRQISFVKSHFSRQ";

    fn codes() -> Vec<&'static str> {
        vec![
            "",
            "K2R",
            "T3A",
            "A4G:Y5W",
            "I6L",
            "Q9E",
            "R10K:Q11N",
            "F14L",
        ]
    }

    /// Family whose labels are `sign *` the model's own deterministic score.
    fn self_labelled(params: &Parameters, id: &str, sign: f64) -> FamilyDataset {
        let vocab = default_vocabulary();
        let records = codes()
            .into_iter()
            .map(|code| {
                let seq = crate::mutation::apply_mutations(
                    WT,
                    &crate::mutation::parse_mutation_code(code).unwrap(),
                )
                .unwrap();
                let toks = vocab.encode(&seq, EncodeMode::Strict).unwrap();
                let lp = forward(params, &toks, None, &mut ChaCha8Rng::seed_from_u64(0)).unwrap();
                MutantRecord {
                    code: code.to_string(),
                    fitness: sign * score(&lp).unwrap(),
                }
            })
            .collect();
        FamilyDataset::new(id, WT, records).unwrap()
    }

    #[test]
    fn self_consistent_labels_give_perfect_rank_correlation() {
        let p = tiny();
        let plan = InjectionPlan::new(0.0, 0.0).unwrap();
        let mc = MCConfig::default();
        let fam = self_labelled(&p, "a", 1.0);
        assert_eq!(evaluate_family(&p, &fam, &plan, &mc).unwrap().srcc, 1.0);
        let fam = self_labelled(&p, "b", -1.0);
        assert_eq!(evaluate_family(&p, &fam, &plan, &mc).unwrap().srcc, -1.0);
    }

    #[test]
    fn sweep_shape_and_determinism() {
        let p = tiny();
        let fams = vec![self_labelled(&p, "z", 1.0), self_labelled(&p, "a", -1.0)];
        let config = EvalConfig {
            rates: vec![0.3, 0.0, 0.1],
            depth_fraction: 1.0,
            mc: MCConfig::new(4, 9).unwrap(),
            model_path: None,
        };
        let mut a = run_sweep(&p, &config, &fams).unwrap();
        let mut b = run_sweep(&p, &config, &fams).unwrap();
        a.provenance.timestamp_unix = 0;
        b.provenance.timestamp_unix = 0;
        assert_eq!(a, b);
        let rates: Vec<f64> = a.rates.iter().map(|r| r.rate).collect();
        assert_eq!(rates, vec![0.0, 0.1, 0.3]);
        let base = a.rate(0.0).unwrap();
        assert_eq!(base.families[0].family_id, "a");
        assert_eq!(base.median, Some(0.0));
        assert_eq!(a.rows().len(), 6);
    }

    #[test]
    fn baseline_ignores_sample_count_and_seed() {
        let p = tiny();
        let fams = vec![self_labelled(&p, "a", 1.0)];
        let run = |n, seed| {
            let config = EvalConfig {
                rates: vec![0.0],
                depth_fraction: 0.0,
                mc: MCConfig::new(n, seed).unwrap(),
                model_path: None,
            };
            run_sweep(&p, &config, &fams).unwrap().rates
        };
        assert_eq!(run(1, 0), run(30, 12345));
    }

    #[test]
    fn degenerate_family_is_skipped() {
        let p = tiny();
        let flat = FamilyDataset::new(
            "flat",
            WT,
            vec![
                MutantRecord {
                    code: "K2R".into(),
                    fitness: 1.0,
                },
                MutantRecord {
                    code: "T3A".into(),
                    fitness: 1.0,
                },
            ],
        )
        .unwrap();
        let good = self_labelled(&p, "good", 1.0);
        let config = EvalConfig {
            rates: vec![0.0],
            ..EvalConfig::default()
        };
        let report = run_sweep(&p, &config, &[flat.clone(), good]).unwrap();
        let r = &report.rates[0];
        assert_eq!(r.families.len(), 1);
        assert_eq!(r.skipped[0].family_id, "flat");
        assert_eq!(r.median, Some(1.0));
        assert!(matches!(
            run_sweep(&p, &config, &[flat]),
            Err(EvalError::AllFamiliesSkipped)
        ));
    }

    #[test]
    fn config_validation() {
        assert!(EvalConfig::default().validate().is_ok());
        let cfg = |rates: Vec<f64>| EvalConfig {
            rates,
            ..EvalConfig::default()
        };
        assert!(cfg(vec![0.1]).validate().is_err());
        assert!(cfg(vec![0.0, 0.1, 0.1]).validate().is_err());
        assert!(cfg(vec![0.0, 1.0]).validate().is_err());
        assert!(cfg(vec![]).validate().is_err());
        assert_eq!(
            cfg(vec![0.2, 0.1]).with_baseline().rates,
            vec![0.0, 0.1, 0.2]
        );
        let bad_mc = EvalConfig {
            mc: MCConfig {
                n_samples: 0,
                base_seed: 0,
            },
            ..EvalConfig::default()
        };
        assert!(matches!(
            bad_mc.validate(),
            Err(EvalError::Inference(InferenceError::InvalidSampleCount))
        ));
    }

    #[test]
    fn report_csv_round_trip() {
        let p = tiny();
        let fams = vec![
            self_labelled(&p, "fam,with,commas", 1.0),
            self_labelled(&p, "b", -1.0),
        ];
        let config = EvalConfig {
            rates: vec![0.0, 0.2],
            depth_fraction: 0.0,
            mc: MCConfig::new(3, 1).unwrap(),
            model_path: None,
        };
        let report = run_sweep(&p, &config, &fams).unwrap();
        let csv = report.to_csv();
        assert!(csv.starts_with("rate,family_id,srcc,n_mutants\n"));
        assert_eq!(parse_report_csv(&csv).unwrap(), report.rows());
        let back: SweepReport = serde_json::from_str(&report.to_json()).unwrap();
        assert_eq!(back, report);
        assert!(parse_report_csv("a,b\n1,2\n").is_err());
    }
}
