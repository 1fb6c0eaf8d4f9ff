use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Minimum lane distance in miles; shorter moves are not long-haul truckload.
pub const MIN_LANE_DISTANCE: f64 = 250.0;

/// A market region code, e.g. `LOWER_ATLANTIC`.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Region(Arc<str>);

impl Region {
    pub fn new(code: impl AsRef<str>) -> Self {
        Region(Arc::from(code.as_ref()))
    }

    pub fn code(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for Region {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for Region {
    fn from(s: &str) -> Self {
        Region::new(s)
    }
}

/// Partition of the continental US states (plus DC) into market regions.
///
/// Each state belongs to exactly one region. The shipped default has 15
/// regions; any other partition can be loaded from a JSON file mapping
/// region code to a list of state codes.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RegionTaxonomy {
    regions: BTreeMap<Region, Vec<String>>,
    state_to_region: BTreeMap<String, Region>,
}

const DEFAULT_TAXONOMY: &[(&str, &[&str])] = &[
    ("NEW_ENGLAND", &["CT", "MA", "ME", "NH", "RI", "VT"]),
    ("NY_NJ", &["NJ", "NY"]),
    ("MID_ATLANTIC", &["DC", "DE", "MD", "PA"]),
    ("LOWER_ATLANTIC", &["GA", "NC", "SC", "VA", "WV"]),
    ("FLORIDA", &["FL"]),
    ("SOUTHEAST", &["AL", "KY", "MS", "TN"]),
    ("GREAT_LAKES", &["IN", "MI", "OH"]),
    ("MIDWEST", &["IA", "IL"]),
    ("UPPER_MIDWEST", &["MN", "WI"]),
    ("CENTRAL_PLAINS", &["KS", "MO", "ND", "NE", "SD"]),
    ("SOUTH_CENTRAL", &["AR", "LA", "OK", "TX"]),
    ("MOUNTAIN", &["CO", "ID", "MT", "UT", "WY"]),
    ("SOUTHWEST", &["AZ", "NM", "NV"]),
    ("CALIFORNIA", &["CA"]),
    ("PACIFIC_NORTHWEST", &["OR", "WA"]),
];

/// Default base-case origin (the region with the most spot volume in the
/// original study).
pub const DEFAULT_BASE_ORIGIN: &str = "LOWER_ATLANTIC";
/// Default base-case destination.
pub const DEFAULT_BASE_DEST: &str = "SOUTH_CENTRAL";

impl Default for RegionTaxonomy {
    fn default() -> Self {
        let map = DEFAULT_TAXONOMY
            .iter()
            .map(|(code, states)| {
                (
                    code.to_string(),
                    states.iter().map(|s| s.to_string()).collect(),
                )
            })
            .collect();
        RegionTaxonomy::from_map(map).expect("default taxonomy is a partition")
    }
}

impl RegionTaxonomy {
    pub fn from_map(map: BTreeMap<String, Vec<String>>) -> Result<Self> {
        if map.is_empty() {
            return Err(Error::Config("taxonomy has no regions".into()));
        }
        let mut regions = BTreeMap::new();
        let mut state_to_region = BTreeMap::new();
        for (code, states) in map {
            if code.trim().is_empty() {
                return Err(Error::Config("empty region code".into()));
            }
            let region = Region::new(&code);
            for state in &states {
                if let Some(prev) = state_to_region.insert(state.clone(), region.clone()) {
                    return Err(Error::Config(format!(
                        "state {state} assigned to both {prev} and {region}"
                    )));
                }
            }
            regions.insert(region, states);
        }
        Ok(RegionTaxonomy {
            regions,
            state_to_region,
        })
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let map: BTreeMap<String, Vec<String>> = serde_json::from_str(text)?;
        Self::from_map(map)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> String {
        let map: BTreeMap<&str, &Vec<String>> =
            self.regions.iter().map(|(r, s)| (r.code(), s)).collect();
        serde_json::to_string_pretty(&map).expect("taxonomy serializes")
    }

    /// Regions in code order.
    pub fn regions(&self) -> impl Iterator<Item = &Region> {
        self.regions.keys()
    }

    pub fn len(&self) -> usize {
        self.regions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.regions.is_empty()
    }

    pub fn contains(&self, region: &Region) -> bool {
        self.regions.contains_key(region)
    }

    pub fn region(&self, code: &str) -> Result<Region> {
        let region = Region::new(code);
        if self.contains(&region) {
            Ok(region)
        } else {
            Err(Error::UnknownLevel {
                variable: "region".into(),
                level: code.into(),
            })
        }
    }

    pub fn region_of_state(&self, state: &str) -> Option<&Region> {
        self.state_to_region.get(state)
    }

    pub fn states(&self, region: &Region) -> Option<&[String]> {
        self.regions.get(region).map(Vec::as_slice)
    }
}

/// A directed origin-region to destination-region freight lane.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Lane {
    pub origin: Region,
    pub destination: Region,
    pub distance: f64,
}

impl Lane {
    pub fn new(origin: Region, destination: Region, distance: f64) -> Result<Self> {
        if !(distance > MIN_LANE_DISTANCE) {
            return Err(Error::domain(format!(
                "lane distance {distance} must exceed {MIN_LANE_DISTANCE} miles"
            )));
        }
        Ok(Lane {
            origin,
            destination,
            distance,
        })
    }

    /// Region pair key, `ORIGIN>DEST`.
    pub fn pair_key(&self) -> String {
        pair_key(&self.origin, &self.destination)
    }

    /// Encodes the lane as `ORIGIN>DEST@distance`.
    pub fn encode(&self) -> String {
        format!("{}>{}@{}", self.origin, self.destination, self.distance)
    }

    pub fn decode(s: &str, taxonomy: &RegionTaxonomy) -> Result<Self> {
        let bad = || Error::domain(format!("malformed lane `{s}`"));
        let (pair, dist) = s.split_once('@').ok_or_else(bad)?;
        let (o, d) = pair.split_once('>').ok_or_else(bad)?;
        let distance: f64 = dist.parse().map_err(|_| bad())?;
        Lane::new(taxonomy.region(o)?, taxonomy.region(d)?, distance)
    }
}

pub fn pair_key(origin: &Region, destination: &Region) -> String {
    format!("{origin}>{destination}")
}
