use std::cmp::Ordering;
use std::iter::Peekable;
use std::vec::IntoIter;

use crate::error::{Error, Result};
use crate::gene::{EncodedGene, GeneKey, Genome};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PairKind {
    Matched,
    OnlyA,
    OnlyB,
}

/// Genes sharing one key, one word from each parent that has it.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AlignedPair {
    pub key: GeneKey,
    pub from_a: Option<EncodedGene>,
    pub from_b: Option<EncodedGene>,
}

impl AlignedPair {
    pub fn kind(&self) -> PairKind {
        match (self.from_a, self.from_b) {
            (Some(_), Some(_)) => PairKind::Matched,
            (Some(_), None) => PairKind::OnlyA,
            _ => PairKind::OnlyB,
        }
    }
}

/// Merge-join of two parent gene streams. Because every node key orders
/// before every connection key, one pass over both full streams keeps the
/// node cluster ahead of the connection cluster.
#[derive(Debug, Clone)]
pub struct GeneSplit {
    a: Peekable<IntoIter<EncodedGene>>,
    b: Peekable<IntoIter<EncodedGene>>,
}

impl Iterator for GeneSplit {
    type Item = AlignedPair;

    fn next(&mut self) -> Option<AlignedPair> {
        let order = match (self.a.peek(), self.b.peek()) {
            (None, None) => return None,
            (Some(_), None) => Ordering::Less,
            (None, Some(_)) => Ordering::Greater,
            (Some(a), Some(b)) => a.key().cmp(&b.key()),
        };
        Some(match order {
            Ordering::Less => {
                let a = self.a.next()?;
                AlignedPair {
                    key: a.key(),
                    from_a: Some(a),
                    from_b: None,
                }
            }
            Ordering::Greater => {
                let b = self.b.next()?;
                AlignedPair {
                    key: b.key(),
                    from_a: None,
                    from_b: Some(b),
                }
            }
            Ordering::Equal => {
                let a = self.a.next()?;
                let b = self.b.next()?;
                AlignedPair {
                    key: a.key(),
                    from_a: Some(a),
                    from_b: Some(b),
                }
            }
        })
    }
}

pub fn split_streams(parent_a: &Genome, parent_b: &Genome) -> Result<GeneSplit> {
    for p in [parent_a, parent_b] {
        if !p.is_canonical() {
            return Err(Error::NonCanonical {
                genome_id: p.genome_id,
            });
        }
    }
    Ok(GeneSplit {
        a: parent_a.encode()?.into_iter().peekable(),
        b: parent_b.encode()?.into_iter().peekable(),
    })
}
