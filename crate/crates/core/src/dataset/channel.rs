use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;

use super::DatasetError;

/// One measured channel of the sensor node, in canonical column order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum SensorChannel {
    Ds18s20TempC,
    Sht10TempC,
    Sht10HumidityPct,
    Yl69Raw,
    Sen13322Raw,
}

/// A physical part. The SHT10 carries two channels but is bought once.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Sensor {
    Ds18s20,
    Sht10,
    Yl69,
    Sen13322,
}

impl Sensor {
    /// Unit price in euro cents.
    pub fn price_cents(self) -> u32 {
        match self {
            Sensor::Ds18s20 => 1550,
            Sensor::Sht10 => 5400,
            Sensor::Yl69 => 130,
            Sensor::Sen13322 => 490,
        }
    }
}

/// Price of the reference TDR probe the low-cost channels stand in for, in cents.
pub const REFERENCE_5TM_PRICE_CENTS: u32 = 18000;

impl SensorChannel {
    pub const ALL: [SensorChannel; 5] = [
        SensorChannel::Ds18s20TempC,
        SensorChannel::Sht10TempC,
        SensorChannel::Sht10HumidityPct,
        SensorChannel::Yl69Raw,
        SensorChannel::Sen13322Raw,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    /// CSV column name.
    pub fn column(self) -> &'static str {
        match self {
            SensorChannel::Ds18s20TempC => "ds18s20_temp_c",
            SensorChannel::Sht10TempC => "sht10_temp_c",
            SensorChannel::Sht10HumidityPct => "sht10_humidity_pct",
            SensorChannel::Yl69Raw => "yl69_raw",
            SensorChannel::Sen13322Raw => "sen13322_raw",
        }
    }

    pub fn sensor(self) -> Sensor {
        match self {
            SensorChannel::Ds18s20TempC => Sensor::Ds18s20,
            SensorChannel::Sht10TempC | SensorChannel::Sht10HumidityPct => Sensor::Sht10,
            SensorChannel::Yl69Raw => Sensor::Yl69,
            SensorChannel::Sen13322Raw => Sensor::Sen13322,
        }
    }

    /// Inclusive physical range a reading must fall into.
    pub fn range(self) -> (f64, f64) {
        match self {
            SensorChannel::Ds18s20TempC | SensorChannel::Sht10TempC => {
                (f64::NEG_INFINITY, f64::INFINITY)
            }
            SensorChannel::Sht10HumidityPct => (0.0, 100.0),
            SensorChannel::Yl69Raw | SensorChannel::Sen13322Raw => (0.0, 1023.0),
        }
    }

    /// Short label used in comparison tables.
    pub fn short_label(self) -> &'static str {
        match self {
            SensorChannel::Ds18s20TempC => "DS18S20(T)",
            SensorChannel::Sht10TempC => "SHT10(T)",
            SensorChannel::Sht10HumidityPct => "SHT10(H)",
            SensorChannel::Yl69Raw => "YL-69(M)",
            SensorChannel::Sen13322Raw => "SEN13322(M)",
        }
    }
}

impl fmt::Display for SensorChannel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.column())
    }
}

impl FromStr for SensorChannel {
    type Err = DatasetError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        SensorChannel::ALL
            .into_iter()
            .find(|c| c.column() == s)
            .ok_or_else(|| DatasetError::UnknownColumn(s.to_string()))
    }
}

/// Nonempty, duplicate-free subset of channels used as model inputs.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "Vec<SensorChannel>", into = "Vec<SensorChannel>")]
pub struct FeatureSet {
    // kept sorted in canonical order
    channels: Vec<SensorChannel>,
}

impl FeatureSet {
    pub fn new(channels: &[SensorChannel]) -> Result<Self, DatasetError> {
        if channels.is_empty() {
            return Err(DatasetError::EmptyFeatureSet);
        }
        let mut sorted = channels.to_vec();
        sorted.sort();
        if let Some(w) = sorted.windows(2).find(|w| w[0] == w[1]) {
            return Err(DatasetError::DuplicateFeature(w[0].column().to_string()));
        }
        Ok(FeatureSet { channels: sorted })
    }

    pub fn all() -> Self {
        FeatureSet { channels: SensorChannel::ALL.to_vec() }
    }

    /// Channels in canonical order.
    pub fn channels(&self) -> &[SensorChannel] {
        &self.channels
    }

    pub fn len(&self) -> usize {
        self.channels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.channels.is_empty()
    }

    pub fn contains(&self, c: SensorChannel) -> bool {
        self.channels.contains(&c)
    }

    /// Parses a comma-separated list of column names.
    pub fn parse_list(s: &str) -> Result<Self, DatasetError> {
        let chans = s
            .split(',')
            .map(|t| t.trim())
            .filter(|t| !t.is_empty())
            .map(SensorChannel::from_str)
            .collect::<Result<Vec<_>, _>>()?;
        FeatureSet::new(&chans)
    }

    /// Comma-separated column names, canonical order.
    pub fn to_list(&self) -> String {
        self.channels.iter().map(|c| c.column()).collect::<Vec<_>>().join(",")
    }

    /// Distinct physical sensors needed to read these channels.
    pub fn sensors(&self) -> Vec<Sensor> {
        let mut s: Vec<Sensor> = self.channels.iter().map(|c| c.sensor()).collect();
        s.sort();
        s.dedup();
        s
    }
}

impl TryFrom<Vec<SensorChannel>> for FeatureSet {
    type Error = DatasetError;

    fn try_from(v: Vec<SensorChannel>) -> Result<Self, Self::Error> {
        FeatureSet::new(&v)
    }
}

impl From<FeatureSet> for Vec<SensorChannel> {
    fn from(fs: FeatureSet) -> Self {
        fs.channels
    }
}

/// Sensor cost of a feature set in euro cents. Each physical sensor is counted once.
pub fn sensor_cost_cents(fs: &FeatureSet) -> u32 {
    fs.sensors().into_iter().map(Sensor::price_cents).sum()
}

/// Sensor cost of a feature set in euros.
pub fn sensor_cost(fs: &FeatureSet) -> f64 {
    f64::from(sensor_cost_cents(fs)) / 100.0
}
