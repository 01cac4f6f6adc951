//! DMS substitution codes (`A24G`, `A24G:L30V`) and their application to a
//! wildtype sequence. Positions are 1-indexed.

use std::collections::HashSet;
use std::fmt;

use thiserror::Error;

use crate::vocab::RESIDUES;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MutationError {
    #[error("malformed mutation code {code:?}: {reason}")]
    MalformedCode { code: String, reason: String },
    #[error("position {0} is mutated more than once")]
    DuplicatePosition(usize),
    #[error("position {position} is outside the wildtype (length {len})")]
    PositionOutOfRange { position: usize, len: usize },
    #[error(
        "wildtype mismatch at position {position}: code expects {expected}, wildtype has {found}"
    )]
    WildtypeMismatch {
        position: usize,
        expected: char,
        found: char,
    },
}

/// One substitution.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Mutation {
    pub position: usize,
    pub from_aa: char,
    pub to_aa: char,
}

impl fmt::Display for Mutation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}{}{}", self.from_aa, self.position, self.to_aa)
    }
}

fn residue(c: char) -> Option<char> {
    if !c.is_ascii() {
        return None;
    }
    let up = c.to_ascii_uppercase();
    RESIDUES.contains(&(up as u8)).then_some(up)
}

fn parse_one(code: &str, token: &str) -> Result<Mutation, MutationError> {
    let malformed = |reason: &str| MutationError::MalformedCode {
        code: code.to_string(),
        reason: reason.to_string(),
    };
    let mut chars = token.chars();
    let (Some(first), Some(last)) = (chars.next(), chars.next_back()) else {
        return Err(malformed("expected <residue><position><residue>"));
    };
    let digits = chars.as_str();
    if digits.is_empty() || !digits.bytes().all(|b| b.is_ascii_digit()) {
        return Err(malformed("position must be a decimal integer"));
    }
    let position: usize = digits
        .parse()
        .map_err(|_| malformed("position does not fit in an integer"))?;
    if position == 0 {
        return Err(malformed("positions are 1-indexed"));
    }
    let from_aa = residue(first).ok_or_else(|| malformed("unknown wildtype residue"))?;
    let to_aa = residue(last).ok_or_else(|| malformed("unknown substituted residue"))?;
    if from_aa == to_aa {
        return Err(malformed("substitution does not change the residue"));
    }
    Ok(Mutation {
        position,
        from_aa,
        to_aa,
    })
}

/// Parses a colon-separated substitution list. The empty string is the
/// wildtype and yields no mutations.
pub fn parse_mutation_code(code: &str) -> Result<Vec<Mutation>, MutationError> {
    if code.is_empty() {
        return Ok(Vec::new());
    }
    let mut seen = HashSet::new();
    code.split(':')
        .map(|token| {
            let m = parse_one(code, token)?;
            if !seen.insert(m.position) {
                return Err(MutationError::DuplicatePosition(m.position));
            }
            Ok(m)
        })
        .collect()
}

/// Canonical code string: uppercase residues, colon-separated, in the given
/// order.
pub fn format_mutations(mutations: &[Mutation]) -> String {
    mutations
        .iter()
        .map(Mutation::to_string)
        .collect::<Vec<_>>()
        .join(":")
}

/// Applies substitutions to an ASCII wildtype, checking every `from_aa`.
pub fn apply_mutations(wildtype: &str, mutations: &[Mutation]) -> Result<String, MutationError> {
    let mut seq: Vec<u8> = wildtype.as_bytes().to_vec();
    for m in mutations {
        if m.position == 0 || m.position > seq.len() {
            return Err(MutationError::PositionOutOfRange {
                position: m.position,
                len: seq.len(),
            });
        }
        let found = seq[m.position - 1] as char;
        if found.to_ascii_uppercase() != m.from_aa {
            return Err(MutationError::WildtypeMismatch {
                position: m.position,
                expected: m.from_aa,
                found,
            });
        }
        seq[m.position - 1] = m.to_aa as u8;
    }
    String::from_utf8(seq).map_err(|_| MutationError::MalformedCode {
        code: format_mutations(mutations),
        reason: "wildtype is not ASCII".into(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn m(position: usize, from_aa: char, to_aa: char) -> Mutation {
        Mutation {
            position,
            from_aa,
            to_aa,
        }
    }

    #[test]
    fn parse_examples() {
        assert_eq!(parse_mutation_code("").unwrap(), vec![]);
        assert_eq!(parse_mutation_code("A24G").unwrap(), vec![m(24, 'A', 'G')]);
        assert_eq!(
            parse_mutation_code("A24G:L30V").unwrap(),
            vec![m(24, 'A', 'G'), m(30, 'L', 'V')]
        );
        assert_eq!(
            parse_mutation_code("A24G:A24V"),
            Err(MutationError::DuplicatePosition(24))
        );
        assert_eq!(parse_mutation_code("a24g").unwrap(), vec![m(24, 'A', 'G')]);
    }

    #[test]
    fn parse_rejects_malformed() {
        for bad in [
            "A",
            "AG",
            "A0G",
            "24G",
            "A24",
            "A2 4G",
            "A24G:",
            ":A24G",
            "J24G",
            "A24B",
            "A24A",
            "A+24G",
            "A-1G",
            "A99999999999999999999999G",
            "Ä24G",
            "A24G::L30V",
        ] {
            assert!(
                matches!(
                    parse_mutation_code(bad),
                    Err(MutationError::MalformedCode { .. })
                ),
                "{bad}"
            );
        }
    }

    #[test]
    fn apply_examples() {
        assert_eq!(apply_mutations("MKTA", &[]).unwrap(), "MKTA");
        assert_eq!(apply_mutations("MKTA", &[m(2, 'K', 'R')]).unwrap(), "MRTA");
        assert_eq!(
            apply_mutations("MKTA", &[m(2, 'Q', 'R')]),
            Err(MutationError::WildtypeMismatch {
                position: 2,
                expected: 'Q',
                found: 'K'
            })
        );
        assert_eq!(
            apply_mutations("MKTA", &[m(5, 'A', 'G')]),
            Err(MutationError::PositionOutOfRange {
                position: 5,
                len: 4
            })
        );
    }

    fn wildtype_and_code() -> impl Strategy<Value = (String, Vec<Mutation>)> {
        "[ACDEFGHIKLMNPQRSTVWY]{5,40}".prop_flat_map(|wt| {
            let len = wt.len();
            let wt2 = wt.clone();
            (
                Just(wt),
                proptest::sample::subsequence((1..=len).collect::<Vec<_>>(), 0..=3.min(len)),
                proptest::collection::vec(0usize..20, 3),
            )
                .prop_map(move |(wt, positions, picks)| {
                    let muts = positions
                        .iter()
                        .zip(&picks)
                        .map(|(&p, &k)| {
                            let from = wt2.as_bytes()[p - 1] as char;
                            let alphabet = b"ACDEFGHIKLMNPQRSTVWY";
                            let mut to = alphabet[k] as char;
                            if to == from {
                                to = alphabet[(k + 1) % 20] as char;
                            }
                            m(p, from, to)
                        })
                        .collect();
                    (wt, muts)
                })
        })
    }

    proptest! {
        #[test]
        fn format_parse_round_trip((_wt, muts) in wildtype_and_code()) {
            let code = format_mutations(&muts);
            prop_assert_eq!(parse_mutation_code(&code).unwrap(), muts.clone());
            prop_assert_eq!(format_mutations(&parse_mutation_code(&code).unwrap()), code);
        }

        #[test]
        fn hamming_distance_equals_mutation_count((wt, muts) in wildtype_and_code()) {
            let mutant = apply_mutations(&wt, &muts).unwrap();
            let diff = wt.bytes().zip(mutant.bytes()).filter(|(a, b)| a != b).count();
            prop_assert_eq!(diff, muts.len());
            for mu in &muts {
                prop_assert_eq!(mutant.as_bytes()[mu.position - 1] as char, mu.to_aa);
            }
        }
    }
}
