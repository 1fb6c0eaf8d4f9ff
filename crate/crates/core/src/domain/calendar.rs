use std::fmt;
use std::path::Path;
use std::str::FromStr;

use chrono::{Datelike, NaiveDate, Weekday};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// An ISO-8601 calendar week (`2016-W05`).
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct IsoWeek {
    year: i32,
    week: u32,
}

fn epoch_monday() -> NaiveDate {
    NaiveDate::from_ymd_opt(1970, 1, 5).expect("valid date")
}

impl IsoWeek {
    pub fn new(year: i32, week: u32) -> Result<Self> {
        NaiveDate::from_isoywd_opt(year, week, Weekday::Mon)
            .map(|_| IsoWeek { year, week })
            .ok_or_else(|| Error::domain(format!("invalid ISO week {year}-W{week:02}")))
    }

    pub fn of_date(date: NaiveDate) -> Self {
        let w = date.iso_week();
        IsoWeek {
            year: w.year(),
            week: w.week(),
        }
    }

    pub fn year(&self) -> i32 {
        self.year
    }

    pub fn week(&self) -> u32 {
        self.week
    }

    pub fn monday(&self) -> NaiveDate {
        NaiveDate::from_isoywd_opt(self.year, self.week, Weekday::Mon).expect("validated week")
    }

    /// Weeks since the Monday of 1970-W02; consecutive weeks differ by one.
    pub fn index(&self) -> i64 {
        (self.monday() - epoch_monday()).num_days().div_euclid(7)
    }

    pub fn from_index(index: i64) -> Self {
        Self::of_date(epoch_monday() + chrono::Duration::weeks(index))
    }

    pub fn offset(&self, weeks: i64) -> Self {
        Self::from_index(self.index() + weeks)
    }
}

impl fmt::Display for IsoWeek {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}-W{:02}", self.year, self.week)
    }
}

impl FromStr for IsoWeek {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::domain(format!("malformed ISO week `{s}` (expected YYYY-Www)"));
        let (y, w) = s.trim().split_once("-W").ok_or_else(bad)?;
        let year = y.parse().map_err(|_| bad())?;
        let week = w.parse().map_err(|_| bad())?;
        IsoWeek::new(year, week)
    }
}

impl Serialize for IsoWeek {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for IsoWeek {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MarketCondition {
    Soft,
    Tight,
}

impl MarketCondition {
    pub fn label(&self) -> &'static str {
        match self {
            MarketCondition::Soft => "soft",
            MarketCondition::Tight => "tight",
        }
    }
}

impl fmt::Display for MarketCondition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for MarketCondition {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "soft" => Ok(MarketCondition::Soft),
            "tight" => Ok(MarketCondition::Tight),
            other => Err(Error::UnknownLevel {
                variable: "market".into(),
                level: other.into(),
            }),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RegimeSwitch {
    pub switch_week: IsoWeek,
    pub new_label: MarketCondition,
}

/// Dated soft/tight regime table. A switch week belongs to the new regime.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Segmentation {
    switches: Vec<RegimeSwitch>,
    end: Option<IsoWeek>,
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum SegmentationFile {
    List(Vec<RegimeSwitch>),
    Bounded {
        switches: Vec<RegimeSwitch>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        end_week: Option<IsoWeek>,
    },
}

impl Segmentation {
    pub fn new(switches: Vec<RegimeSwitch>, end: Option<IsoWeek>) -> Result<Self> {
        if switches.is_empty() {
            return Err(Error::Config("segmentation needs at least one switch".into()));
        }
        if switches.windows(2).any(|w| w[0].switch_week >= w[1].switch_week) {
            return Err(Error::Config(
                "segmentation switch weeks must be strictly increasing".into(),
            ));
        }
        if let Some(end) = end {
            if end < switches[0].switch_week {
                return Err(Error::Config("segmentation ends before it starts".into()));
            }
        }
        Ok(Segmentation { switches, end })
    }

    pub fn from_json(text: &str) -> Result<Self> {
        match serde_json::from_str(text)? {
            SegmentationFile::List(switches) => Self::new(switches, None),
            SegmentationFile::Bounded { switches, end_week } => Self::new(switches, end_week),
        }
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> String {
        let file = SegmentationFile::Bounded {
            switches: self.switches.clone(),
            end_week: self.end,
        };
        serde_json::to_string_pretty(&file).expect("segmentation serializes")
    }

    pub fn start(&self) -> IsoWeek {
        self.switches[0].switch_week
    }

    pub fn end(&self) -> Option<IsoWeek> {
        self.end
    }

    pub fn switches(&self) -> &[RegimeSwitch] {
        &self.switches
    }

    pub fn assign(&self, week: IsoWeek) -> Result<MarketCondition> {
        let out_of_range = || Error::OutOfRange {
            week: week.to_string(),
            start: self.start().to_string(),
            end: self.end.map_or_else(|| "open".to_string(), |e| e.to_string()),
        };
        if week < self.start() || self.end.is_some_and(|e| week > e) {
            return Err(out_of_range());
        }
        let idx = self.switches.partition_point(|s| s.switch_week <= week);
        Ok(self.switches[idx - 1].new_label)
    }
}

impl Default for Segmentation {
    /// Tight before 2016-W05, soft through 2017-W26, tight through 2019-W01,
    /// soft from 2019-W02 to the end of the data window (2020-W05).
    fn default() -> Self {
        let w = |y, n| IsoWeek::new(y, n).expect("valid week");
        let sw = |week, new_label| RegimeSwitch {
            switch_week: week,
            new_label,
        };
        Segmentation::new(
            vec![
                sw(w(2015, 36), MarketCondition::Tight),
                sw(w(2016, 5), MarketCondition::Soft),
                sw(w(2017, 27), MarketCondition::Tight),
                sw(w(2019, 2), MarketCondition::Soft),
            ],
            Some(w(2020, 5)),
        )
        .expect("default segmentation is ordered")
    }
}

/// Regime for `week` under `segmentation`.
pub fn assign_market_condition(
    week: IsoWeek,
    segmentation: &Segmentation,
) -> Result<MarketCondition> {
    segmentation.assign(week)
}
