//! IPv4 address anonymization: black-marker, truncation, keyed permutation,
//! pseudonym tables and Crypto-PAn style prefix preservation.

use std::collections::BTreeMap;
use std::fmt;
use std::net::Ipv4Addr;
use std::str::FromStr;

use aes::cipher::{BlockEncrypt, KeyInit};
use aes::Aes128;
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Ipv4Address(pub u32);

impl Ipv4Address {
    pub const UNSPECIFIED: Ipv4Address = Ipv4Address(0);

    /// Length of the common bit prefix of two addresses, 0 to 32.
    pub fn common_prefix_len(self, other: Ipv4Address) -> u32 {
        (self.0 ^ other.0).leading_zeros()
    }
}

impl fmt::Display for Ipv4Address {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        Ipv4Addr::from(self.0).fmt(f)
    }
}

impl FromStr for Ipv4Address {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        s.trim()
            .parse::<Ipv4Addr>()
            .map(|a| Ipv4Address(a.into()))
            .map_err(|_| Error::InvalidAddress(s.to_string()))
    }
}

impl From<Ipv4Addr> for Ipv4Address {
    fn from(a: Ipv4Addr) -> Self {
        Ipv4Address(a.into())
    }
}

pub fn black_marker(_a: Ipv4Address) -> Ipv4Address {
    Ipv4Address::UNSPECIFIED
}

/// Keeps the top `keep` bits and zeroes the rest. `keep` must be 8, 16 or 24.
pub fn truncate(a: Ipv4Address, keep: u8) -> Result<Ipv4Address> {
    match keep {
        8 | 16 | 24 => Ok(Ipv4Address(a.0 & (u32::MAX << (32 - keep)))),
        _ => Err(Error::InvalidTruncation(keep)),
    }
}

const FEISTEL_ROUNDS: usize = 8;

/// Seeded bijection on the 32-bit address space: a balanced Feistel network
/// over 16-bit halves.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Permutation {
    round_keys: [u64; FEISTEL_ROUNDS],
}

fn mix(key: u64, half: u16) -> u16 {
    // splitmix64 finalizer
    let mut z = key ^ (half as u64).wrapping_mul(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    (z ^ (z >> 31)) as u16
}

impl Permutation {
    pub fn new(seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut round_keys = [0; FEISTEL_ROUNDS];
        round_keys.iter_mut().for_each(|k| *k = rng.next_u64());
        Permutation { round_keys }
    }

    pub fn apply(&self, a: Ipv4Address) -> Ipv4Address {
        let (mut l, mut r) = ((a.0 >> 16) as u16, a.0 as u16);
        for &k in &self.round_keys {
            (l, r) = (r, l ^ mix(k, r));
        }
        Ipv4Address(((l as u32) << 16) | r as u32)
    }

    pub fn invert(&self, a: Ipv4Address) -> Ipv4Address {
        let (mut l, mut r) = ((a.0 >> 16) as u16, a.0 as u16);
        for &k in self.round_keys.iter().rev() {
            (l, r) = (r ^ mix(k, l), l);
        }
        Ipv4Address(((l as u32) << 16) | r as u32)
    }
}

pub fn permute(a: Ipv4Address, seed: u64) -> Ipv4Address {
    Permutation::new(seed).apply(a)
}

/// Crypto-PAn: output bit `i` is input bit `i` flipped by a pseudorandom
/// function of the first `i` input bits.
#[derive(Clone)]
pub struct PrefixPreserving {
    cipher: Aes128,
    pad: [u8; 16],
}

impl fmt::Debug for PrefixPreserving {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("PrefixPreserving { .. }")
    }
}

impl PrefixPreserving {
    /// First half of the key is the AES key, the second half is encrypted
    /// to form the padding block.
    pub fn from_key_bytes(key: &[u8; 32]) -> Self {
        let cipher = Aes128::new_from_slice(&key[..16]).expect("16-byte key");
        let mut pad = aes::Block::clone_from_slice(&key[16..]);
        cipher.encrypt_block(&mut pad);
        PrefixPreserving {
            cipher,
            pad: pad.into(),
        }
    }

    /// Derives the 32 key bytes from a passphrase with SHA-256.
    pub fn from_passphrase(key: &str) -> Result<Self> {
        if key.is_empty() {
            return Err(Error::InvalidKey("key must not be empty".into()));
        }
        let digest: [u8; 32] = Sha256::digest(key.as_bytes()).into();
        Ok(Self::from_key_bytes(&digest))
    }

    pub fn apply(&self, a: Ipv4Address) -> Ipv4Address {
        let pad_word = u32::from_be_bytes(self.pad[..4].try_into().unwrap());
        let mut flips = 0u32;
        for i in 0..32 {
            let prefix_mask = if i == 0 { 0 } else { u32::MAX << (32 - i) };
            let word = (a.0 & prefix_mask) | (pad_word & !prefix_mask);
            let mut block = aes::Block::clone_from_slice(&self.pad);
            block[..4].copy_from_slice(&word.to_be_bytes());
            self.cipher.encrypt_block(&mut block);
            flips |= ((block[0] >> 7) as u32) << (31 - i);
        }
        Ipv4Address(a.0 ^ flips)
    }

    /// Inverse, recovered bit by bit from the most significant end.
    pub fn invert(&self, out: Ipv4Address) -> Ipv4Address {
        let mut a = 0u32;
        for i in 0..32 {
            let bit = 1u32 << (31 - i);
            // The flip of bit i depends only on bits above it, which are known.
            let flip = self.apply(Ipv4Address(a)).0 ^ a;
            a |= (out.0 ^ flip) & bit;
        }
        Ipv4Address(a)
    }
}

pub fn prefix_preserving(a: Ipv4Address, key: &str) -> Result<Ipv4Address> {
    Ok(PrefixPreserving::from_passphrase(key)?.apply(a))
}

/// Opaque replacement for an address.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Token(String);

impl Token {
    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for Token {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl FromStr for Token {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let ok =
            s.len() == 10 && s.starts_with("ip") && s[2..].bytes().all(|b| b.is_ascii_hexdigit());
        if ok {
            Ok(Token(s.to_string()))
        } else {
            Err(Error::InvalidAddress(format!("malformed token {s}")))
        }
    }
}

/// Address-to-token table. Tokens come from a seeded permutation, so they
/// are injective; the table is what makes them reversible.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PseudonymTable {
    permutation: Permutation,
    forward: BTreeMap<Ipv4Address, Token>,
    inverse: BTreeMap<Token, Ipv4Address>,
}

impl PseudonymTable {
    pub fn new(seed: u64) -> Self {
        PseudonymTable {
            permutation: Permutation::new(seed),
            forward: BTreeMap::new(),
            inverse: BTreeMap::new(),
        }
    }

    pub fn token(&mut self, a: Ipv4Address) -> Token {
        if let Some(t) = self.forward.get(&a) {
            return t.clone();
        }
        let t = Token(format!("ip{:08x}", self.permutation.apply(a).0));
        self.forward.insert(a, t.clone());
        self.inverse.insert(t.clone(), a);
        t
    }

    pub fn lookup(&self, t: &Token) -> Option<Ipv4Address> {
        self.inverse.get(t).copied()
    }

    /// Adds a persisted pair, refusing anything that would break injectivity.
    pub fn insert(&mut self, a: Ipv4Address, t: Token) -> Result<()> {
        match (self.forward.get(&a), self.inverse.get(&t)) {
            (None, None) => {
                self.forward.insert(a, t.clone());
                self.inverse.insert(t, a);
                Ok(())
            }
            (Some(old), _) if *old == t => Ok(()),
            _ => Err(Error::InvalidMapping(format!(
                "{a} -> {t} conflicts with the table"
            ))),
        }
    }

    pub fn len(&self) -> usize {
        self.forward.len()
    }

    pub fn is_empty(&self) -> bool {
        self.forward.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (Ipv4Address, &Token)> + '_ {
        self.forward.iter().map(|(a, t)| (*a, t))
    }
}

pub fn pseudonymize(a: Ipv4Address, seed: u64) -> Token {
    PseudonymTable::new(seed).token(a)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum AnonScheme {
    BlackMarker,
    RandomPermutation { seed: u64 },
    Truncation { keep: u8 },
    Pseudonym { seed: u64 },
    PrefixPreserving { key: String },
}

impl AnonScheme {
    /// Whether a key holder can recover the original address.
    pub fn reversible(&self) -> bool {
        match self {
            AnonScheme::BlackMarker | AnonScheme::Truncation { .. } => false,
            AnonScheme::RandomPermutation { .. }
            | AnonScheme::Pseudonym { .. }
            | AnonScheme::PrefixPreserving { .. } => true,
        }
    }

    pub fn anonymizer(&self) -> Result<AddressAnonymizer> {
        Ok(match self {
            AnonScheme::BlackMarker => AddressAnonymizer::BlackMarker,
            AnonScheme::Truncation { keep } => {
                truncate(Ipv4Address(0), *keep)?;
                AddressAnonymizer::Truncation(*keep)
            }
            AnonScheme::RandomPermutation { seed } => {
                AddressAnonymizer::Permutation(Permutation::new(*seed))
            }
            AnonScheme::Pseudonym { seed } => {
                AddressAnonymizer::Pseudonym(PseudonymTable::new(*seed))
            }
            AnonScheme::PrefixPreserving { key } => AddressAnonymizer::PrefixPreserving(Box::new(
                PrefixPreserving::from_passphrase(key)?,
            )),
        })
    }
}

/// A ready-to-use scheme, holding its keys and, for pseudonyms, the table.
#[derive(Debug, Clone)]
pub enum AddressAnonymizer {
    BlackMarker,
    Truncation(u8),
    Permutation(Permutation),
    Pseudonym(PseudonymTable),
    PrefixPreserving(Box<PrefixPreserving>),
}

impl AddressAnonymizer {
    /// The replacement text for `a`.
    pub fn anonymize(&mut self, a: Ipv4Address) -> String {
        match self {
            AddressAnonymizer::BlackMarker => black_marker(a).to_string(),
            AddressAnonymizer::Truncation(keep) => truncate(a, *keep)
                .expect("keep checked on construction")
                .to_string(),
            AddressAnonymizer::Permutation(p) => p.apply(a).to_string(),
            AddressAnonymizer::Pseudonym(t) => t.token(a).to_string(),
            AddressAnonymizer::PrefixPreserving(p) => p.apply(a).to_string(),
        }
    }

    pub fn table(&self) -> Option<&PseudonymTable> {
        match self {
            AddressAnonymizer::Pseudonym(t) => Some(t),
            _ => None,
        }
    }

    pub fn table_mut(&mut self) -> Option<&mut PseudonymTable> {
        match self {
            AddressAnonymizer::Pseudonym(t) => Some(t),
            _ => None,
        }
    }
}
