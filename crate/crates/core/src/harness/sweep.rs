use serde::{Deserialize, Serialize};

use super::config::RunConfig;
use super::run::{run_evolve, GenRecord, RunOutcome};
use crate::error::{Error, Result};
use crate::interconnect::NocMode;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepAxis {
    PeCount,
    NocMode,
    Population,
}

impl SweepAxis {
    pub fn name(self) -> &'static str {
        match self {
            SweepAxis::PeCount => "pe_count",
            SweepAxis::NocMode => "noc_mode",
            SweepAxis::Population => "population",
        }
    }

    /// Copy of `base` with this axis set to `value`.
    pub fn apply(self, base: &RunConfig, value: &str) -> Result<RunConfig> {
        let mut c = base.clone();
        let bad = |_| Error::Config(format!("{} value {value:?} is not a count", self.name()));
        match self {
            SweepAxis::PeCount => c.hw.num_eve_pes = value.parse().map_err(bad)?,
            SweepAxis::NocMode => c.hw.noc_mode = value.parse::<NocMode>()?,
            SweepAxis::Population => c.run.population_size = value.parse().map_err(bad)?,
        }
        c.run.output_dir = None;
        c.validate()?;
        Ok(c)
    }
}

impl std::str::FromStr for SweepAxis {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "pe_count" => Ok(SweepAxis::PeCount),
            "noc_mode" => Ok(SweepAxis::NocMode),
            "population" => Ok(SweepAxis::Population),
            other => Err(Error::Config(format!("unknown sweep axis {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepPoint {
    pub value: String,
    pub outcome: RunOutcome,
}

/// Repeats the same fixed-seed run once per axis value.
pub fn run_sweep(
    config: &RunConfig,
    axis: SweepAxis,
    values: &[String],
) -> Result<Vec<SweepPoint>> {
    if values.is_empty() {
        return Err(Error::Config("sweep needs at least one value".into()));
    }
    values
        .iter()
        .map(|v| {
            Ok(SweepPoint {
                value: v.clone(),
                outcome: run_evolve(&axis.apply(config, v)?)?,
            })
        })
        .collect()
}

/// All sweep points in one table: the axis name and value, then the stats columns.
pub fn sweep_csv(axis: SweepAxis, points: &[SweepPoint]) -> Result<String> {
    let mut w = csv::WriterBuilder::new()
        .has_headers(false)
        .from_writer(Vec::new());
    let mut header = vec!["axis", "value"];
    header.extend(GenRecord::FIELDS);
    w.write_record(&header)?;
    for p in points {
        for r in &p.outcome.records {
            w.serialize((axis.name(), &p.value, r))?;
        }
    }
    let bytes = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}
