//! Fixed amino-acid vocabulary and the string <-> token-id mapping.
//!
//! Layout: ids 0..=4 are the special tokens PAD, MASK, BOS, EOS, UNK; ids
//! 5..=26 are the 22 proteinogenic residues in the order
//! `ACDEFGHIKLMNPQRSTVWY` followed by `U` (selenocysteine) and `O`
//! (pyrrolysine).

use std::collections::HashMap;
use std::fmt;

use thiserror::Error;

/// Residue letters in vocabulary order.
pub const RESIDUES: &[u8; 22] = b"ACDEFGHIKLMNPQRSTVWYUO";

/// The 20 canonical residues, used when sampling random sequences.
pub const CANONICAL_RESIDUES: &[u8; 20] = b"ACDEFGHIKLMNPQRSTVWY";

pub const PAD_ID: u32 = 0;
pub const MASK_ID: u32 = 1;
pub const BOS_ID: u32 = 2;
pub const EOS_ID: u32 = 3;
pub const UNK_ID: u32 = 4;

const SPECIAL_GLYPHS: [&str; 5] = ["<pad>", "<mask>", "<bos>", "<eos>", "<unk>"];

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum VocabError {
    #[error("empty sequence")]
    EmptySequence,
    #[error("invalid residue {1:?} at position {0}")]
    InvalidResidue(usize, char),
    #[error("token id {0} out of range for vocabulary of size {1}")]
    InvalidTokenId(u32, usize),
}

/// Whether `encode` rejects unknown characters or maps them to UNK.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum EncodeMode {
    #[default]
    Strict,
    Lenient,
}

/// A single vocabulary entry.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Token {
    Special(&'static str),
    Residue(char),
}

impl fmt::Display for Token {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Token::Special(glyph) => f.write_str(glyph),
            Token::Residue(c) => write!(f, "{c}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Vocabulary {
    residue_to_id: HashMap<char, u32>,
    id_to_token: Vec<Token>,
}

impl Vocabulary {
    /// Number of tokens, `n_t`.
    pub fn len(&self) -> usize {
        self.id_to_token.len()
    }

    pub fn is_empty(&self) -> bool {
        self.id_to_token.is_empty()
    }

    /// Id of an uppercase residue letter.
    pub fn id_of(&self, residue: char) -> Option<u32> {
        self.residue_to_id.get(&residue).copied()
    }

    pub fn token(&self, id: u32) -> Option<Token> {
        self.id_to_token.get(id as usize).copied()
    }

    pub fn is_residue(&self, c: char) -> bool {
        self.residue_to_id.contains_key(&c.to_ascii_uppercase())
    }

    pub fn encode(&self, seq: &str, mode: EncodeMode) -> Result<TokenSequence, VocabError> {
        if seq.is_empty() {
            return Err(VocabError::EmptySequence);
        }
        let ids = seq
            .chars()
            .enumerate()
            .map(|(pos, c)| match self.id_of(c.to_ascii_uppercase()) {
                Some(id) => Ok(id),
                None if mode == EncodeMode::Lenient => Ok(UNK_ID),
                None => Err(VocabError::InvalidResidue(pos, c)),
            })
            .collect::<Result<Vec<_>, _>>()?;
        Ok(TokenSequence(ids))
    }

    pub fn decode(&self, tokens: &TokenSequence) -> Result<String, VocabError> {
        let mut out = String::with_capacity(tokens.len());
        for &id in tokens.ids() {
            let token = self
                .token(id)
                .ok_or(VocabError::InvalidTokenId(id, self.len()))?;
            out.push_str(&token.to_string());
        }
        Ok(out)
    }
}

/// The fixed 27-token vocabulary.
pub fn default_vocabulary() -> Vocabulary {
    let mut id_to_token: Vec<Token> = SPECIAL_GLYPHS.iter().map(|g| Token::Special(g)).collect();
    let mut residue_to_id = HashMap::with_capacity(RESIDUES.len());
    for &r in RESIDUES {
        residue_to_id.insert(r as char, id_to_token.len() as u32);
        id_to_token.push(Token::Residue(r as char));
    }
    Vocabulary {
        residue_to_id,
        id_to_token,
    }
}

/// Strict encode against the default vocabulary.
pub fn encode(seq: &str) -> Result<TokenSequence, VocabError> {
    default_vocabulary().encode(seq, EncodeMode::Strict)
}

/// Integer-encoded sequence of length `n_a`. Holds residue tokens only; no
/// BOS/EOS are ever added.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct TokenSequence(Vec<u32>);

impl TokenSequence {
    pub fn from_ids(ids: Vec<u32>) -> Self {
        TokenSequence(ids)
    }

    pub fn ids(&self) -> &[u32] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl From<Vec<u32>> for TokenSequence {
    fn from(ids: Vec<u32>) -> Self {
        TokenSequence(ids)
    }
}
