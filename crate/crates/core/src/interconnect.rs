//! Genome-buffer SRAM and the network that delivers parent genes to PEs.
//!
//! Reads are counted in gene words. Under point-to-point delivery every PE
//! fetches its own copy of each parent gene; under multicast a parent gene
//! is read once per round and fanned out to every PE that needs it.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::eve::{CycleStats, PeSchedule};
use crate::gene::{Genome, GenomeId};
use crate::population::{GENE_BYTES, GENOME_HEADER_BYTES};

const PICO: f64 = 1e-12;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NocMode {
    #[default]
    P2p,
    Multicast,
}

impl std::str::FromStr for NocMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "p2p" => Ok(NocMode::P2p),
            "multicast" => Ok(NocMode::Multicast),
            other => Err(Error::Config(format!("unknown noc mode {other:?}"))),
        }
    }
}

impl std::fmt::Display for NocMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            NocMode::P2p => "p2p",
            NocMode::Multicast => "multicast",
        })
    }
}

/// Energy per event in picojoules. The defaults are placeholders chosen for
/// relative comparisons only; they are not physical measurements.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EnergyTable {
    pub sram_read_word: f64,
    pub sram_write_word: f64,
    pub noc_hop: f64,
    pub pe_gene_op: f64,
    pub mac_op: f64,
}

impl Default for EnergyTable {
    fn default() -> Self {
        EnergyTable {
            sram_read_word: 10.0,
            sram_write_word: 12.0,
            noc_hop: 1.0,
            pe_gene_op: 0.5,
            mac_op: 0.2,
        }
    }
}

impl EnergyTable {
    pub fn validate(&self) -> Result<()> {
        let entries = [
            ("sram_read_word", self.sram_read_word),
            ("sram_write_word", self.sram_write_word),
            ("noc_hop", self.noc_hop),
            ("pe_gene_op", self.pe_gene_op),
            ("mac_op", self.mac_op),
        ];
        for (name, v) in entries {
            if !v.is_finite() || v < 0.0 {
                return Err(Error::Energy(format!(
                    "{name} must be a finite non-negative energy, got {v}"
                )));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct HwConfig {
    pub num_eve_pes: usize,
    pub systolic_rows: usize,
    pub systolic_cols: usize,
    pub sram_bytes: u64,
    pub sram_banks: usize,
    pub noc_mode: NocMode,
    pub energy_table: EnergyTable,
    pub clock_hz: f64,
    /// Cycles charged per node for gathering its inputs into a packed vector.
    pub vectorize_cycles_per_node: u64,
}

impl Default for HwConfig {
    fn default() -> Self {
        HwConfig {
            num_eve_pes: 256,
            systolic_rows: 32,
            systolic_cols: 32,
            sram_bytes: 1_572_864,
            sram_banks: 48,
            noc_mode: NocMode::P2p,
            energy_table: EnergyTable::default(),
            clock_hz: 2e8,
            vectorize_cycles_per_node: 0,
        }
    }
}

impl HwConfig {
    pub fn validate(&self) -> Result<()> {
        if self.num_eve_pes == 0 {
            return Err(Error::ZeroPes);
        }
        if self.systolic_rows == 0 || self.systolic_cols == 0 {
            return Err(Error::Config(
                "systolic array dimensions must be positive".into(),
            ));
        }
        if self.sram_banks == 0 {
            return Err(Error::Config("sram_banks must be at least 1".into()));
        }
        if !(self.clock_hz.is_finite() && self.clock_hz > 0.0) {
            return Err(Error::Config(format!(
                "clock_hz must be positive, got {}",
                self.clock_hz
            )));
        }
        self.energy_table.validate()
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct MemStats {
    pub sram_reads: u64,
    pub sram_writes: u64,
    /// Reads of parent words that did not fit in SRAM.
    pub dram_reads: u64,
    pub bank_conflicts: u64,
    /// Gene words delivered to PEs; equals the sum of multicast fanouts.
    pub noc_multicast_fanout_sum: u64,
}

impl MemStats {
    pub fn total_reads(&self) -> u64 {
        self.sram_reads + self.dram_reads
    }
}

/// Placement of parent genomes in the banked buffer.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SramMap {
    pub banks: usize,
    pub bank_of: BTreeMap<GenomeId, usize>,
    /// Trailing gene words of each genome that spilled past the SRAM capacity.
    pub spilled_words: BTreeMap<GenomeId, u64>,
    pub used_bytes: u64,
}

impl SramMap {
    /// Bank that serves the most parents; with more parents than banks some bank is shared.
    pub fn max_bank_load(&self) -> usize {
        let mut load = vec![0usize; self.banks];
        for &b in self.bank_of.values() {
            load[b] += 1;
        }
        load.into_iter().max().unwrap_or(0)
    }
}

/// Lays parents out in id order, dealing them to banks round-robin.
pub fn sram_map(parents: &[Genome], banks: usize, sram_bytes: u64) -> Result<SramMap> {
    if banks == 0 {
        return Err(Error::Config("sram_banks must be at least 1".into()));
    }
    let mut sorted: Vec<&Genome> = parents.iter().collect();
    sorted.sort_by_key(|g| g.genome_id);
    let mut map = SramMap {
        banks,
        ..SramMap::default()
    };
    for (i, g) in sorted.into_iter().enumerate() {
        map.bank_of.insert(g.genome_id, i % banks);
        let start = map.used_bytes + GENOME_HEADER_BYTES as u64;
        let end = start + GENE_BYTES as u64 * g.gene_count() as u64;
        let resident_end = end.min(sram_bytes.max(start));
        let spilled = (end - resident_end).div_ceil(GENE_BYTES as u64);
        if spilled > 0 {
            map.spilled_words.insert(g.genome_id, spilled);
        }
        map.used_bytes = end;
    }
    Ok(map)
}

/// Parent fetch streams in one round: for each parent, how many PE slots consume it.
fn round_consumers(round: &[crate::eve::Assignment]) -> BTreeMap<GenomeId, u64> {
    let mut uses = BTreeMap::new();
    for a in round {
        *uses.entry(a.mating.parent_a).or_insert(0) += 1;
        *uses.entry(a.mating.parent_b).or_insert(0) += 1;
    }
    uses
}

/// Same-cycle fetches that land on an already busy bank. Every stream reads
/// one word per cycle from cycle 0 until its genome is exhausted.
fn conflicts(streams: &[(usize, u64)], banks: usize) -> u64 {
    let mut per_bank: Vec<Vec<u64>> = vec![Vec::new(); banks];
    for &(bank, len) in streams {
        per_bank[bank].push(len);
    }
    let mut total = 0;
    for mut lens in per_bank {
        // at cycle t, active streams are those longer than t
        lens.sort_unstable_by(|a, b| b.cmp(a));
        total += lens.iter().skip(1).sum::<u64>();
    }
    total
}

fn genes_of(lookup: &BTreeMap<GenomeId, &Genome>, id: GenomeId) -> Result<u64> {
    lookup
        .get(&id)
        .map(|g| g.gene_count() as u64)
        .ok_or_else(|| Error::InvalidGenome {
            genome_id: id,
            reason: "parent not in population".into(),
        })
}

/// Counts memory traffic for building `children` from `parents` under `schedule`.
pub fn plan_fetch(
    schedule: &PeSchedule,
    parents: &[Genome],
    children: &[Genome],
    hw: &HwConfig,
    mode: NocMode,
) -> Result<MemStats> {
    let map = sram_map(parents, hw.sram_banks, hw.sram_bytes)?;
    let lookup: BTreeMap<GenomeId, &Genome> = parents.iter().map(|g| (g.genome_id, g)).collect();
    let mut stats = MemStats::default();
    for round in &schedule.rounds {
        let mut streams = Vec::new();
        for (parent, consumers) in round_consumers(round) {
            let words = genes_of(&lookup, parent)?;
            let spilled = map.spilled_words.get(&parent).copied().unwrap_or(0);
            let reads_per_word = match mode {
                NocMode::P2p => consumers,
                NocMode::Multicast => 1,
            };
            stats.sram_reads += reads_per_word * (words - spilled);
            stats.dram_reads += reads_per_word * spilled;
            stats.noc_multicast_fanout_sum += consumers * words;
            let bank = map.bank_of[&parent];
            for _ in 0..reads_per_word {
                streams.push((bank, words - spilled));
            }
        }
        stats.bank_conflicts += conflicts(&streams, hw.sram_banks);
    }
    stats.sram_writes = children.iter().map(|c| c.gene_count() as u64).sum();
    Ok(stats)
}

/// Reads of one parent's gene words under each delivery mode: `(p2p, multicast)`.
pub fn parent_traffic(
    schedule: &PeSchedule,
    parents: &[Genome],
    parent: GenomeId,
) -> Result<(u64, u64)> {
    let lookup: BTreeMap<GenomeId, &Genome> = parents.iter().map(|g| (g.genome_id, g)).collect();
    let words = genes_of(&lookup, parent)?;
    let (mut p2p, mut mcast) = (0, 0);
    for round in &schedule.rounds {
        if let Some(&consumers) = round_consumers(round).get(&parent) {
            p2p += consumers * words;
            mcast += words;
        }
    }
    Ok((p2p, mcast))
}

/// Energy totals in joules.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct EnergyLedger {
    pub sram: f64,
    pub noc: f64,
    pub eve_pes: f64,
    pub adam_macs: f64,
    pub total: f64,
    pub runtime_s: f64,
}

/// Weights event counts by the energy table; runtime covers evolution and inference cycles.
pub fn account_energy(
    cycles: &CycleStats,
    mem: &MemStats,
    adam_macs: u64,
    adam_cycles: u64,
    hw: &HwConfig,
) -> Result<EnergyLedger> {
    let t = &hw.energy_table;
    t.validate()?;
    if !(hw.clock_hz.is_finite() && hw.clock_hz > 0.0) {
        return Err(Error::Energy(format!(
            "clock_hz must be positive, got {}",
            hw.clock_hz
        )));
    }
    let sram = PICO
        * (mem.sram_reads as f64 * t.sram_read_word + mem.sram_writes as f64 * t.sram_write_word);
    let noc = PICO * mem.noc_multicast_fanout_sum as f64 * t.noc_hop;
    let eve_pes = PICO * (cycles.ops_crossover + cycles.ops_mutation) as f64 * t.pe_gene_op;
    let adam = PICO * adam_macs as f64 * t.mac_op;
    Ok(EnergyLedger {
        sram,
        noc,
        eve_pes,
        adam_macs: adam,
        total: sram + noc + eve_pes + adam,
        runtime_s: (cycles.eve_cycles + adam_cycles) as f64 / hw.clock_hz,
    })
}
