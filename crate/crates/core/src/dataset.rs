//! Per-family DMS datasets: CSV records (`mutant,DMS_score`) plus a
//! wildtype from an explicit sequence, a `#wildtype=` sidecar line at the
//! top of the CSV, or a companion FASTA file next to it.

use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::mutation::{apply_mutations, parse_mutation_code, Mutation, MutationError};
use crate::vocab::{default_vocabulary, EncodeMode, VocabError};

pub const CODE_COLUMN: &str = "mutant";
pub const FITNESS_COLUMN: &str = "DMS_score";
const SIDECAR_PREFIX: &str = "#wildtype=";
const FASTA_EXTENSIONS: [&str; 3] = ["fasta", "fa", "faa"];

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("missing column {0:?}")]
    MissingColumn(&'static str),
    #[error("line {line}: {message}")]
    Csv { line: u64, message: String },
    #[error("line {line}: fitness {value:?} is not a finite number")]
    BadFitness { line: u64, value: String },
    #[error("line {line}: {source}")]
    Mutation {
        line: u64,
        #[source]
        source: MutationError,
    },
    #[error("dataset needs at least 2 records, found {found}")]
    EmptyDataset { found: usize },
    #[error("no wildtype for family {0}: pass one explicitly, add a #wildtype= line, or place a FASTA next to the CSV")]
    MissingWildtype(String),
    #[error("invalid wildtype: {0}")]
    InvalidWildtype(#[from] VocabError),
    #[error("malformed FASTA: {0}")]
    Fasta(String),
}

impl DatasetError {
    fn io(path: &Path, source: io::Error) -> Self {
        DatasetError::Io {
            path: path.to_path_buf(),
            source,
        }
    }
}

/// One measured variant. An empty code is the wildtype itself.
#[derive(Debug, Clone, PartialEq)]
pub struct MutantRecord {
    pub code: String,
    pub fitness: f64,
}

/// Wildtype plus measured variants for one DMS assay.
#[derive(Debug, Clone, PartialEq)]
pub struct FamilyDataset {
    pub family_id: String,
    pub wildtype: String,
    pub records: Vec<MutantRecord>,
}

impl FamilyDataset {
    /// Builds a dataset, validating the wildtype and every record.
    pub fn new(
        family_id: impl Into<String>,
        wildtype: &str,
        records: Vec<MutantRecord>,
    ) -> Result<Self, DatasetError> {
        let wildtype = normalize_wildtype(wildtype)?;
        if records.len() < 2 {
            return Err(DatasetError::EmptyDataset {
                found: records.len(),
            });
        }
        for (i, r) in records.iter().enumerate() {
            let line = i as u64 + 2;
            if !r.fitness.is_finite() {
                return Err(DatasetError::BadFitness {
                    line,
                    value: r.fitness.to_string(),
                });
            }
            resolve(&wildtype, &r.code)
                .map_err(|source| DatasetError::Mutation { line, source })?;
        }
        Ok(FamilyDataset {
            family_id: family_id.into(),
            wildtype,
            records,
        })
    }

    /// Mutant sequences in record order.
    pub fn mutant_sequences(&self) -> Result<Vec<String>, MutationError> {
        self.records
            .iter()
            .map(|r| resolve(&self.wildtype, &r.code))
            .collect()
    }

    pub fn fitness(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.fitness).collect()
    }

    /// CSV body with header `mutant,DMS_score`; floats in shortest
    /// round-trip form.
    pub fn to_csv(&self) -> String {
        let mut out = format!("{CODE_COLUMN},{FITNESS_COLUMN}\n");
        for r in &self.records {
            out.push_str(&format!("{},{}\n", r.code, r.fitness));
        }
        out
    }

    pub fn to_fasta(&self) -> String {
        format!(">{}\n{}\n", self.family_id, self.wildtype)
    }
}

fn resolve(wildtype: &str, code: &str) -> Result<String, MutationError> {
    let muts: Vec<Mutation> = parse_mutation_code(code)?;
    apply_mutations(wildtype, &muts)
}

fn normalize_wildtype(seq: &str) -> Result<String, VocabError> {
    let vocab = default_vocabulary();
    vocab.encode(seq, EncodeMode::Strict)?;
    Ok(seq.to_ascii_uppercase())
}

/// A row dropped by lenient loading.
#[derive(Debug, Clone, PartialEq)]
pub struct SkippedRow {
    pub line: u64,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LoadedFamily {
    pub dataset: FamilyDataset,
    pub skipped: Vec<SkippedRow>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct LoadOptions {
    /// Skip rows that fail to parse or do not match the wildtype instead of
    /// failing the whole family.
    pub lenient: bool,
}

/// Parses CSV text. `wildtype` takes precedence over a `#wildtype=` line.
/// Reported line numbers are 1-based lines of `text`.
pub fn parse_family_csv(
    text: &str,
    family_id: &str,
    wildtype: Option<&str>,
    options: LoadOptions,
) -> Result<LoadedFamily, DatasetError> {
    let mut sidecar = None;
    let mut skipped_lines = 0u64;
    let mut body = text;
    while body.starts_with('#') {
        let (line, rest) = body.split_once('\n').unwrap_or((body, ""));
        if let Some(seq) = line.trim_end().strip_prefix(SIDECAR_PREFIX) {
            sidecar = Some(seq.trim().to_string());
        }
        skipped_lines += 1;
        body = rest;
    }
    let wildtype = wildtype
        .map(str::to_string)
        .or(sidecar)
        .ok_or_else(|| DatasetError::MissingWildtype(family_id.to_string()))?;
    let wildtype = normalize_wildtype(&wildtype)?;

    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(body.as_bytes());
    let csv_err = |e: csv::Error, fallback_line: u64| DatasetError::Csv {
        line: e
            .position()
            .map_or(fallback_line, |p| p.line() + skipped_lines),
        message: e.to_string(),
    };
    let headers = reader
        .headers()
        .map_err(|e| csv_err(e, skipped_lines + 1))?
        .clone();
    let column = |name: &'static str| {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or(DatasetError::MissingColumn(name))
    };
    let code_idx = column(CODE_COLUMN)?;
    let fitness_idx = column(FITNESS_COLUMN)?;

    let mut records = Vec::new();
    let mut skipped = Vec::new();
    for row in reader.records() {
        let row = match row {
            Ok(row) => row,
            Err(e) if options.lenient && e.position().is_some() => {
                let line = e.position().map_or(0, |p| p.line()) + skipped_lines;
                skipped.push(SkippedRow {
                    line,
                    reason: e.to_string(),
                });
                continue;
            }
            Err(e) => return Err(csv_err(e, 0)),
        };
        let line = row.position().map_or(0, |p| p.line()) + skipped_lines;
        let checked = check_row(&wildtype, &row, code_idx, fitness_idx, line);
        match checked {
            Ok(record) => records.push(record),
            Err(e) if options.lenient => skipped.push(SkippedRow {
                line,
                reason: e.to_string(),
            }),
            Err(e) => return Err(e),
        }
    }
    if records.len() < 2 {
        return Err(DatasetError::EmptyDataset {
            found: records.len(),
        });
    }
    Ok(LoadedFamily {
        dataset: FamilyDataset {
            family_id: family_id.to_string(),
            wildtype,
            records,
        },
        skipped,
    })
}

fn check_row(
    wildtype: &str,
    row: &csv::StringRecord,
    code_idx: usize,
    fitness_idx: usize,
    line: u64,
) -> Result<MutantRecord, DatasetError> {
    let field = |idx: usize| {
        row.get(idx).ok_or_else(|| DatasetError::Csv {
            line,
            message: format!("row has {} fields", row.len()),
        })
    };
    let code = field(code_idx)?.to_string();
    let raw = field(fitness_idx)?;
    let fitness = raw
        .parse::<f64>()
        .ok()
        .filter(|v| v.is_finite())
        .ok_or_else(|| DatasetError::BadFitness {
            line,
            value: raw.to_string(),
        })?;
    resolve(wildtype, &code).map_err(|source| DatasetError::Mutation { line, source })?;
    Ok(MutantRecord { code, fitness })
}

/// Loads `<family>.csv`. The family id is the file stem. Without an explicit
/// wildtype, a `#wildtype=` line or a sibling `<family>.fasta` / `.fa` /
/// `.faa` is used.
pub fn load_family_csv(
    path: impl AsRef<Path>,
    wildtype: Option<&str>,
    options: LoadOptions,
) -> Result<LoadedFamily, DatasetError> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| DatasetError::io(path, e))?;
    let family_id = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    let mut explicit = wildtype.map(str::to_string);
    if explicit.is_none() && !text.starts_with(SIDECAR_PREFIX) {
        for ext in FASTA_EXTENSIONS {
            let candidate = path.with_extension(ext);
            if candidate.is_file() {
                explicit = Some(read_wildtype_fasta(&candidate)?);
                break;
            }
        }
    }
    parse_family_csv(&text, &family_id, explicit.as_deref(), options)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FastaRecord {
    pub header: String,
    pub sequence: String,
}

/// Parses FASTA text. Sequence lines before any `>` header form a record
/// with an empty header; blank lines are ignored.
pub fn parse_fasta(text: &str) -> Result<Vec<FastaRecord>, DatasetError> {
    let mut records: Vec<FastaRecord> = Vec::new();
    for line in text.lines() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(header) = line.strip_prefix('>') {
            records.push(FastaRecord {
                header: header.trim().to_string(),
                sequence: String::new(),
            });
        } else {
            if records.is_empty() {
                records.push(FastaRecord {
                    header: String::new(),
                    sequence: String::new(),
                });
            }
            let last = records.last_mut().expect("pushed above");
            last.sequence.push_str(line);
        }
    }
    if let Some(r) = records.iter().find(|r| r.sequence.is_empty()) {
        return Err(DatasetError::Fasta(format!(
            "record {:?} has no sequence",
            r.header
        )));
    }
    Ok(records)
}

/// First sequence of a FASTA file.
pub fn read_wildtype_fasta(path: impl AsRef<Path>) -> Result<String, DatasetError> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| DatasetError::io(path, e))?;
    parse_fasta(&text)?
        .into_iter()
        .next()
        .map(|r| r.sequence)
        .ok_or_else(|| DatasetError::Fasta(format!("{} contains no records", path.display())))
}

/// Writes `<family_id>.csv` and `<family_id>.fasta` into `dir`.
pub fn write_family(dir: impl AsRef<Path>, family: &FamilyDataset) -> Result<(), DatasetError> {
    let dir = dir.as_ref();
    let csv_path = dir.join(format!("{}.csv", family.family_id));
    fs::write(&csv_path, family.to_csv()).map_err(|e| DatasetError::io(&csv_path, e))?;
    let fasta_path = dir.join(format!("{}.fasta", family.family_id));
    fs::write(&fasta_path, family.to_fasta()).map_err(|e| DatasetError::io(&fasta_path, e))?;
    Ok(())
}

/// Sorted `*.csv` files directly inside `dir`.
pub fn family_files(dir: impl AsRef<Path>) -> Result<Vec<PathBuf>, DatasetError> {
    let dir = dir.as_ref();
    let mut out = Vec::new();
    for entry in fs::read_dir(dir).map_err(|e| DatasetError::io(dir, e))? {
        let path = entry.map_err(|e| DatasetError::io(dir, e))?.path();
        if path.is_file() && path.extension().is_some_and(|e| e == "csv") {
            out.push(path);
        }
    }
    out.sort();
    Ok(out)
}
