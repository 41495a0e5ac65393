//! Population container, memory footprint and the binary population file.
//!
//! File layout, all little-endian:
//!
//! ```text
//! "GENE" | version u16 (=1) | genome count u16
//! per genome:
//!   genome_id u32 | num_inputs u16 | num_outputs u16 | node count u32 |
//!   connection count u32 | fitness f64 | flags u8 (bit 0: fitness present) | 7 zero bytes
//!   node words (u64)...
//!   connection words (u64)...
//! ```

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gene::{decode_gene, EncodedGene, Gene, Genome, GenomeId};

pub const MAGIC: &[u8; 4] = b"GENE";
pub const FORMAT_VERSION: u16 = 1;
pub const FILE_HEADER_BYTES: usize = 8;
pub const GENOME_HEADER_BYTES: usize = 32;
pub const GENE_BYTES: usize = 8;

const FLAG_HAS_FITNESS: u8 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Population {
    pub generation_index: u32,
    pub genomes: Vec<Genome>,
}

impl Population {
    pub fn new(generation_index: u32, genomes: Vec<Genome>) -> Self {
        Population {
            generation_index,
            genomes,
        }
    }

    pub fn len(&self) -> usize {
        self.genomes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.genomes.is_empty()
    }

    pub fn get(&self, id: GenomeId) -> Option<&Genome> {
        self.genomes.iter().find(|g| g.genome_id == id)
    }

    pub fn total_genes(&self) -> usize {
        self.genomes.iter().map(Genome::gene_count).sum()
    }

    /// Fitness of every genome keyed by id; errors on the first genome without one.
    pub fn fitness_map(&self) -> Result<BTreeMap<GenomeId, f64>> {
        self.genomes
            .iter()
            .map(|g| {
                g.fitness
                    .map(|f| (g.genome_id, f))
                    .ok_or(Error::MissingFitness(g.genome_id))
            })
            .collect()
    }

    pub fn validate(&self) -> Result<()> {
        let mut seen = BTreeSet::new();
        for g in &self.genomes {
            if !seen.insert(g.genome_id) {
                return Err(Error::InvalidGenome {
                    genome_id: g.genome_id,
                    reason: "duplicate genome id".into(),
                });
            }
            g.validate()?;
        }
        Ok(())
    }
}

/// Bytes needed to hold the population: one word per gene plus a fixed
/// header per genome.
pub fn footprint_bytes(pop: &Population) -> u64 {
    pop.genomes
        .iter()
        .map(|g| (GENE_BYTES * g.gene_count() + GENOME_HEADER_BYTES) as u64)
        .sum()
}

pub fn serialize_population(pop: &Population) -> Result<Vec<u8>> {
    let count = u16::try_from(pop.genomes.len()).map_err(|_| {
        Error::EncodingRange(format!(
            "{} genomes exceed the 16-bit count",
            pop.genomes.len()
        ))
    })?;
    let mut out = Vec::with_capacity(FILE_HEADER_BYTES + footprint_bytes(pop) as usize);
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
    out.extend_from_slice(&count.to_le_bytes());
    for g in &pop.genomes {
        let words = g.encode()?;
        out.extend_from_slice(&g.genome_id.to_le_bytes());
        out.extend_from_slice(&g.num_inputs.to_le_bytes());
        out.extend_from_slice(&g.num_outputs.to_le_bytes());
        out.extend_from_slice(&(g.nodes.len() as u32).to_le_bytes());
        out.extend_from_slice(&(g.connections.len() as u32).to_le_bytes());
        out.extend_from_slice(&g.fitness.unwrap_or(0.0).to_le_bytes());
        out.push(if g.fitness.is_some() {
            FLAG_HAS_FITNESS
        } else {
            0
        });
        out.extend_from_slice(&[0u8; 7]);
        for w in words {
            out.extend_from_slice(&w.0.to_le_bytes());
        }
    }
    Ok(out)
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self
            .pos
            .checked_add(n)
            .filter(|&e| e <= self.bytes.len())
            .ok_or_else(|| Error::Format {
                offset: self.pos,
                reason: format!(
                    "truncated stream: wanted {n} bytes, {} left",
                    self.bytes.len() - self.pos
                ),
            })?;
        let s = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u16(&mut self) -> Result<u16> {
        Ok(u16::from_le_bytes(self.take(2)?.try_into().unwrap()))
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
}

/// Parses a population file. The file carries no generation index, so the
/// result is stamped with `generation_index = 0`; see
/// [`deserialize_population_at`].
pub fn deserialize_population(bytes: &[u8]) -> Result<Population> {
    deserialize_population_at(bytes, 0)
}

pub fn deserialize_population_at(bytes: &[u8], generation_index: u32) -> Result<Population> {
    let mut r = Reader { bytes, pos: 0 };
    if r.take(4)? != MAGIC {
        return Err(Error::Format {
            offset: 0,
            reason: "bad magic, expected \"GENE\"".into(),
        });
    }
    let version = r.u16()?;
    if version != FORMAT_VERSION {
        return Err(Error::Format {
            offset: 4,
            reason: format!("unsupported version {version}"),
        });
    }
    let count = r.u16()?;
    let mut genomes = Vec::with_capacity(count as usize);
    for _ in 0..count {
        let header_at = r.pos;
        let genome_id = r.u32()?;
        let num_inputs = r.u16()?;
        let num_outputs = r.u16()?;
        let node_count = r.u32()? as usize;
        let conn_count = r.u32()? as usize;
        let fitness = f64::from_le_bytes(r.take(8)?.try_into().unwrap());
        let flags = r.take(8)?;
        if flags[0] & !FLAG_HAS_FITNESS != 0 || flags[1..].iter().any(|&b| b != 0) {
            return Err(Error::Format {
                offset: header_at + 24,
                reason: "nonzero header padding".into(),
            });
        }
        let mut nodes = Vec::with_capacity(node_count.min(1 << 16));
        let mut connections = Vec::with_capacity(conn_count.min(1 << 16));
        for i in 0..node_count + conn_count {
            let at = r.pos;
            let word = EncodedGene(r.u64()?);
            let gene = decode_gene(word).map_err(|e| Error::Format {
                offset: at,
                reason: e.to_string(),
            })?;
            match (gene, i < node_count) {
                (Gene::Node(n), true) => nodes.push(n),
                (Gene::Connection(c), false) => connections.push(c),
                _ => {
                    return Err(Error::Format {
                        offset: at,
                        reason: "gene type does not match its cluster".into(),
                    })
                }
            }
        }
        let genome = Genome {
            genome_id,
            nodes,
            connections,
            num_inputs,
            num_outputs,
            fitness: (flags[0] & FLAG_HAS_FITNESS != 0).then_some(fitness),
        };
        genome.validate().map_err(|e| Error::Format {
            offset: header_at,
            reason: e.to_string(),
        })?;
        genomes.push(genome);
    }
    if r.pos != bytes.len() {
        return Err(Error::Format {
            offset: r.pos,
            reason: "trailing bytes".into(),
        });
    }
    let pop = Population {
        generation_index,
        genomes,
    };
    pop.validate().map_err(|e| Error::Format {
        offset: FILE_HEADER_BYTES,
        reason: e.to_string(),
    })?;
    Ok(pop)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gene::{Activation, ConnectionGene, NodeGene};

    fn genome_with_genes(id: u32, genes: usize) -> Genome {
        // 1 input, 1 output, hidden nodes then connections from input to hidden
        let mut g = Genome::initial(id, 1, 1, Activation::Sigmoid);
        g.connections.clear();
        let mut next = 2;
        while g.gene_count() < genes {
            if g.nodes.len() <= g.connections.len() + 2 {
                g.nodes
                    .push(NodeGene::with_defaults(next, Activation::Tanh));
                next += 1;
            } else {
                let dst = g.nodes[g.connections.len() + 1].id;
                g.connections.push(ConnectionGene::new(0, dst, 0.25));
            }
        }
        g
    }

    #[test]
    fn footprint_counts_words_and_headers() {
        let pop = Population::new(0, (0..150).map(|i| genome_with_genes(i, 10)).collect());
        assert!(pop.genomes.iter().all(|g| g.gene_count() == 10));
        assert_eq!(footprint_bytes(&pop), 150 * (80 + 32));
        assert_eq!(footprint_bytes(&Population::new(0, vec![])), 0);
    }

    #[test]
    fn single_genome_file_size() {
        let mut g = genome_with_genes(7, 5);
        g.fitness = Some(-1.5);
        let pop = Population::new(0, vec![g]);
        let bytes = serialize_population(&pop).unwrap();
        assert_eq!(bytes.len(), FILE_HEADER_BYTES + 32 + 8 * 5);
        assert_eq!(deserialize_population(&bytes).unwrap(), pop);
    }

    #[test]
    fn rejects_bad_magic_and_truncation() {
        let pop = Population::new(0, vec![genome_with_genes(1, 6)]);
        let mut bytes = serialize_population(&pop).unwrap();
        let short = &bytes[..bytes.len() - 3];
        assert!(matches!(
            deserialize_population(short),
            Err(Error::Format { .. })
        ));
        bytes[0] = b'X';
        assert!(matches!(
            deserialize_population(&bytes),
            Err(Error::Format { offset: 0, .. })
        ));
    }

    #[test]
    fn corrupted_word_reports_offset() {
        let pop = Population::new(0, vec![genome_with_genes(1, 6)]);
        let mut bytes = serialize_population(&pop).unwrap();
        let word_at = FILE_HEADER_BYTES + GENOME_HEADER_BYTES;
        bytes[word_at] = 0xff; // reserved low byte of the first node word
        match deserialize_population(&bytes) {
            Err(Error::Format { offset, .. }) => assert_eq!(offset, word_at),
            other => panic!("expected format error, got {other:?}"),
        }
    }

    #[test]
    fn fitness_map_requires_every_genome() {
        let mut pop = Population::new(0, vec![genome_with_genes(1, 4), genome_with_genes(2, 4)]);
        pop.genomes[0].fitness = Some(1.0);
        assert!(matches!(pop.fitness_map(), Err(Error::MissingFitness(2))));
        pop.genomes[1].fitness = Some(2.0);
        assert_eq!(pop.fitness_map().unwrap().len(), 2);
    }
}
