//! Categorical levels of the acceptance model and their coefficient labels.

use std::fmt;

use crate::domain::Vertical;
use crate::error::{Error, Result};

/// A categorical explanatory variable with a fixed, ordered level set and an
/// omitted base level.
pub trait Level: Copy + Eq + Ord + fmt::Debug + Send + Sync + 'static {
    const VARIABLE: &'static str;
    const BASE: Self;

    fn all() -> &'static [Self];
    fn label(&self) -> &'static str;

    /// Coefficient name, e.g. `cadence:25`.
    fn coefficient_name(&self) -> String {
        format!("{}:{}", Self::VARIABLE, self.label())
    }

    fn from_label(s: &str) -> Result<Self> {
        Self::all()
            .iter()
            .copied()
            .find(|l| l.label() == s)
            .ok_or_else(|| Error::UnknownLevel {
                variable: Self::VARIABLE.into(),
                level: s.into(),
            })
    }
}

/// Spot rate differential bin. Index 0 is the low tail (< -50), indices
/// 1..=20 are the 5-point bins [-50,-45) .. [45,50), index 21 the high tail
/// (>= 50).
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct SrdBin(u8);

const SRD_LABELS: [&str; 22] = [
    "<-50", "[-50,-45)", "[-45,-40)", "[-40,-35)", "[-35,-30)", "[-30,-25)", "[-25,-20)",
    "[-20,-15)", "[-15,-10)", "[-10,-5)", "[-5,0)", "[0,5)", "[5,10)", "[10,15)", "[15,20)",
    "[20,25)", "[25,30)", "[30,35)", "[35,40)", "[40,45)", "[45,50)", ">=50",
];

const SRD_ALL: [SrdBin; 22] = {
    let mut a = [SrdBin(0); 22];
    let mut i = 0;
    while i < 22 {
        a[i] = SrdBin(i as u8);
        i += 1;
    }
    a
};

/// Plotting position of the open tails, in SRD percent.
pub const SRD_TAIL_MIDPOINT: f64 = 55.0;

impl SrdBin {
    pub const COUNT: usize = 22;
    pub const LOW_TAIL: SrdBin = SrdBin(0);
    pub const HIGH_TAIL: SrdBin = SrdBin(21);

    pub fn index(&self) -> usize {
        self.0 as usize
    }

    pub fn from_index(i: usize) -> Option<Self> {
        (i < Self::COUNT).then_some(SrdBin(i as u8))
    }

    /// Half-open bin for a finite SRD, closed on the left.
    pub fn of(srd: f64) -> Result<Self> {
        if !srd.is_finite() {
            return Err(Error::domain(format!("SRD {srd} is not finite")));
        }
        if srd < -50.0 {
            return Ok(Self::LOW_TAIL);
        }
        if srd >= 50.0 {
            return Ok(Self::HIGH_TAIL);
        }
        let mut k = (((srd + 50.0) / 5.0).floor() as i64).clamp(0, 19);
        // edges are exact multiples of 5; correct for rounding in the division
        if srd < -50.0 + 5.0 * k as f64 {
            k -= 1;
        } else if k < 19 && srd >= -50.0 + 5.0 * (k + 1) as f64 {
            k += 1;
        }
        Ok(SrdBin(k as u8 + 1))
    }

    /// Inclusive lower edge, or `None` for the low tail.
    pub fn lower(&self) -> Option<f64> {
        (self.0 > 0).then(|| -50.0 + 5.0 * (self.0 as f64 - 1.0))
    }

    /// Exclusive upper edge, or `None` for the high tail.
    pub fn upper(&self) -> Option<f64> {
        (self.0 < 21).then(|| -50.0 + 5.0 * self.0 as f64)
    }

    /// Bin centre; the open tails sit at -55 and +55.
    pub fn midpoint(&self) -> f64 {
        match (self.lower(), self.upper()) {
            (Some(lo), Some(hi)) => 0.5 * (lo + hi),
            (None, _) => -SRD_TAIL_MIDPOINT,
            (_, None) => SRD_TAIL_MIDPOINT,
        }
    }
}

impl Level for SrdBin {
    const VARIABLE: &'static str = "srd";
    const BASE: Self = SrdBin(11);

    fn all() -> &'static [Self] {
        &SRD_ALL
    }

    fn label(&self) -> &'static str {
        SRD_LABELS[self.0 as usize]
    }
}

macro_rules! level_enum {
    (
        $(#[$meta:meta])*
        $name:ident, $variable:literal, base = $base:ident,
        { $($variant:ident => $label:literal),+ $(,)? }
    ) => {
        $(#[$meta])*
        #[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
        pub enum $name {
            $($variant),+
        }

        impl $name {
            pub const ALL: &'static [$name] = &[$($name::$variant),+];
        }

        impl Level for $name {
            const VARIABLE: &'static str = $variable;
            const BASE: Self = $name::$base;

            fn all() -> &'static [Self] {
                Self::ALL
            }

            fn label(&self) -> &'static str {
                match self {
                    $($name::$variant => $label),+
                }
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(self.label())
            }
        }
    };
}

level_enum! {
    /// Share of the preceding four weeks with at least one tender.
    Cadence, "cadence", base = P75,
    { P0 => "0", P25 => "25", P50 => "50", P75 => "75", P100 => "100" }
}

level_enum! {
    /// Normalized week-over-week volume volatility, percent.
    VolatilityBin, "volatility", base = To50,
    {
        UpTo10 => "<=10",
        To25 => "(10,25]",
        To50 => "(25,50]",
        To75 => "(50,75]",
        To100 => "(75,100]",
        To125 => "(100,125]",
        To150 => "(125,150]",
        To200 => "(150,200]",
        Over200 => ">200",
    }
}

level_enum! {
    /// Position of a load relative to the awarded weekly volume.
    SurgeClass, "surge", base = MeanTo10,
    {
        WithinMean => "within_mean",
        MeanTo10 => "mean_to_10",
        Surge10To20 => "surge_10_to_20",
        SurgeOver20 => "surge_over_20",
    }
}

level_enum! {
    /// Driving days at 400 miles per day, rounded up.
    TravelDays, "travel_days", base = Two,
    { One => "1", Two => "2", Three => "3", Four => "4", OverFour => ">4" }
}

impl fmt::Display for SrdBin {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl Cadence {
    pub fn percent(&self) -> u32 {
        match self {
            Cadence::P0 => 0,
            Cadence::P25 => 25,
            Cadence::P50 => 50,
            Cadence::P75 => 75,
            Cadence::P100 => 100,
        }
    }

    pub fn from_percent(p: u32) -> Result<Self> {
        Self::from_label(&p.to_string())
    }
}

impl VolatilityBin {
    pub fn of(percent: f64) -> Result<Self> {
        if !(percent >= 0.0) || !percent.is_finite() {
            return Err(Error::domain(format!("volatility {percent} must be finite and >= 0")));
        }
        const EDGES: [(f64, VolatilityBin); 8] = [
            (10.0, VolatilityBin::UpTo10),
            (25.0, VolatilityBin::To25),
            (50.0, VolatilityBin::To50),
            (75.0, VolatilityBin::To75),
            (100.0, VolatilityBin::To100),
            (125.0, VolatilityBin::To125),
            (150.0, VolatilityBin::To150),
            (200.0, VolatilityBin::To200),
        ];
        Ok(EDGES
            .iter()
            .find(|(edge, _)| percent <= *edge)
            .map_or(VolatilityBin::Over200, |(_, b)| *b))
    }
}

impl Level for Vertical {
    const VARIABLE: &'static str = "vertical";
    const BASE: Self = Vertical::PaperPackaging;

    fn all() -> &'static [Self] {
        &Vertical::ALL
    }

    fn label(&self) -> &'static str {
        Vertical::label(self)
    }
}
