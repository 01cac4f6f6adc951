use std::collections::HashSet;

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;

use super::EvalError;
use crate::dataset::{FamilyDataset, MutantRecord};
use crate::hash::child_seed;
use crate::mc::score;
use crate::model::{forward, Parameters};
use crate::mutation::{apply_mutations, format_mutations, Mutation};
use crate::vocab::{default_vocabulary, EncodeMode, CANONICAL_RESIDUES};

pub const SYNTHETIC_MIN_LEN: usize = 50;
pub const SYNTHETIC_MAX_LEN: usize = 200;

/// Random families labelled by a teacher model.
///
/// Family `f` is built from ChaCha8 seeded with `child_seed(seed, f)`: a
/// wildtype of uniform length in `[50, 200]` (clipped to the teacher's
/// `max_len`) over the 20 canonical residues, then `mutants_per_family`
/// distinct single or double substitutions (equal odds). Each label is the
/// teacher's deterministic score of the mutant plus N(0, noise_sd²) noise
/// drawn from the same stream after all codes.
pub fn generate_synthetic_benchmark(
    teacher: &Parameters,
    seed: u64,
    n_families: usize,
    mutants_per_family: usize,
    noise_sd: f64,
) -> Result<Vec<FamilyDataset>, EvalError> {
    if mutants_per_family < 2 {
        return Err(EvalError::Config(format!(
            "need at least 2 mutants per family, got {mutants_per_family}"
        )));
    }
    if !(noise_sd.is_finite() && noise_sd >= 0.0) {
        return Err(EvalError::Config(format!(
            "noise_sd must be finite and >= 0, got {noise_sd}"
        )));
    }
    let max_len = teacher.config().max_len;
    let hi = SYNTHETIC_MAX_LEN.min(max_len);
    let lo = SYNTHETIC_MIN_LEN.min(hi);
    // Smallest wildtype may not admit enough distinct codes.
    let available = 19 * lo + lo * lo.saturating_sub(1) / 2 * 19 * 19;
    if mutants_per_family > available {
        return Err(EvalError::Config(format!(
            "{mutants_per_family} mutants requested but a length-{lo} wildtype admits only {available}"
        )));
    }

    (0..n_families)
        .map(|f| {
            let mut rng = ChaCha8Rng::seed_from_u64(child_seed(seed, f as u64));
            let len = rng.random_range(lo..=hi);
            let wildtype: String = (0..len)
                .map(|_| CANONICAL_RESIDUES[rng.random_range(0..20)] as char)
                .collect();
            let codes = random_codes(&mut rng, &wildtype, mutants_per_family);
            let labels = teacher_scores(teacher, &wildtype, &codes)?;
            let noise = (noise_sd > 0.0).then(|| Normal::new(0.0, noise_sd).expect("valid sd"));
            let records = codes
                .into_iter()
                .zip(labels)
                .map(|(code, y)| MutantRecord {
                    fitness: y + noise.map_or(0.0, |n| n.sample(&mut rng)),
                    code,
                })
                .collect();
            Ok(FamilyDataset {
                family_id: format!("SYN{f:03}"),
                wildtype,
                records,
            })
        })
        .collect()
}

fn random_codes(rng: &mut ChaCha8Rng, wildtype: &str, count: usize) -> Vec<String> {
    let wt = wildtype.as_bytes();
    let mut seen = HashSet::with_capacity(count);
    let mut codes = Vec::with_capacity(count);
    while codes.len() < count {
        let k = if wt.len() >= 2 && rng.random_bool(0.5) {
            2
        } else {
            1
        };
        let mut positions = sample(rng, wt.len(), k).into_vec();
        positions.sort_unstable();
        let muts: Vec<Mutation> = positions
            .into_iter()
            .map(|p| {
                let from_aa = wt[p] as char;
                let to_aa = loop {
                    let c = CANONICAL_RESIDUES[rng.random_range(0..20)] as char;
                    if c != from_aa {
                        break c;
                    }
                };
                Mutation {
                    position: p + 1,
                    from_aa,
                    to_aa,
                }
            })
            .collect();
        let code = format_mutations(&muts);
        if seen.insert(code.clone()) {
            codes.push(code);
        }
    }
    codes
}

fn teacher_scores(
    teacher: &Parameters,
    wildtype: &str,
    codes: &[String],
) -> Result<Vec<f64>, EvalError> {
    let vocab = default_vocabulary();
    codes
        .par_iter()
        .map(|code| {
            let muts = crate::mutation::parse_mutation_code(code)?;
            let seq = apply_mutations(wildtype, &muts)?;
            let tokens = vocab.encode(&seq, EncodeMode::Strict)?;
            let lp = forward(teacher, &tokens, None, &mut ChaCha8Rng::seed_from_u64(0))
                .map_err(crate::mc::InferenceError::from)?;
            Ok(score(&lp)?)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eval::{evaluate_family, median};
    use crate::mc::{InjectionPlan, MCConfig};
    use crate::model::{init_random, ModelConfig};

    fn teacher() -> Parameters {
        let cfg = ModelConfig {
            n_layers: 1,
            d_model: 8,
            n_heads: 2,
            d_ff: 16,
            n_t: 27,
            max_len: 256,
            ln_eps: 1e-5,
        };
        init_random(&cfg, 5).unwrap()
    }

    #[test]
    fn families_are_well_formed() {
        let t = teacher();
        let fams = generate_synthetic_benchmark(&t, 1, 4, 30, 0.5).unwrap();
        assert_eq!(fams.len(), 4);
        for fam in &fams {
            assert!((SYNTHETIC_MIN_LEN..=SYNTHETIC_MAX_LEN).contains(&fam.wildtype.len()));
            assert_eq!(fam.records.len(), 30);
            let again = FamilyDataset::new(&fam.family_id, &fam.wildtype, fam.records.clone());
            assert_eq!(again.unwrap(), *fam);
            let codes: HashSet<_> = fam.records.iter().map(|r| &r.code).collect();
            assert_eq!(codes.len(), 30);
            assert!(fam.records.iter().all(|r| {
                let n = r.code.split(':').count();
                n == 1 || n == 2
            }));
        }
    }

    #[test]
    fn byte_identical_given_seed() {
        let t = teacher();
        let a = generate_synthetic_benchmark(&t, 42, 3, 10, 1.0).unwrap();
        let b = generate_synthetic_benchmark(&t, 42, 3, 10, 1.0).unwrap();
        let c = generate_synthetic_benchmark(&t, 43, 3, 10, 1.0).unwrap();
        let csv = |fams: &[FamilyDataset]| {
            fams.iter()
                .map(|f| f.to_csv() + &f.to_fasta())
                .collect::<String>()
        };
        assert_eq!(csv(&a), csv(&b));
        assert_ne!(csv(&a), csv(&c));
    }

    #[test]
    fn noiseless_labels_are_recovered_exactly() {
        let t = teacher();
        let plan = InjectionPlan::new(0.0, 0.0).unwrap();
        for fam in generate_synthetic_benchmark(&t, 3, 3, 25, 0.0).unwrap() {
            let r = evaluate_family(&t, &fam, &plan, &MCConfig::default()).unwrap();
            assert_eq!(r.srcc, 1.0);
        }
    }

    #[test]
    fn overwhelming_noise_destroys_rank_signal() {
        let t = teacher();
        let plan = InjectionPlan::new(0.0, 0.0).unwrap();
        let fams = generate_synthetic_benchmark(&t, 8, 50, 100, 1e6).unwrap();
        let srccs: Vec<f64> = fams
            .iter()
            .map(|f| {
                evaluate_family(&t, f, &plan, &MCConfig::default())
                    .unwrap()
                    .srcc
            })
            .collect();
        let mean = srccs.iter().sum::<f64>() / srccs.len() as f64;
        assert!(mean.abs() < 0.15, "mean srcc {mean}");
        assert!(median(&srccs).unwrap().abs() < 0.15);
    }

    #[test]
    fn rejects_bad_arguments() {
        let t = teacher();
        assert!(matches!(
            generate_synthetic_benchmark(&t, 0, 1, 1, 0.0),
            Err(EvalError::Config(_))
        ));
        assert!(generate_synthetic_benchmark(&t, 0, 1, 5, -1.0).is_err());
        assert!(generate_synthetic_benchmark(&t, 0, 1, 5, f64::NAN).is_err());
    }

    #[test]
    fn short_teacher_clips_lengths() {
        let cfg = ModelConfig {
            max_len: 12,
            ..teacher().config().clone()
        };
        let t = init_random(&cfg, 1).unwrap();
        for fam in generate_synthetic_benchmark(&t, 0, 3, 5, 0.0).unwrap() {
            assert_eq!(fam.wildtype.len(), 12);
        }
    }
}
