use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::FeatureError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum FeatureKind {
    #[serde(rename = "CD")]
    Cd,
    #[serde(rename = "MV")]
    Mv,
    #[serde(rename = "MV_DIR")]
    MvDir,
    #[serde(rename = "QDC")]
    Qdc,
    #[serde(rename = "QTC_C1")]
    QtcC1,
    #[serde(rename = "QTC_C3")]
    QtcC3,
}

impl FeatureKind {
    pub const ALL: [FeatureKind; 6] = [
        FeatureKind::Cd,
        FeatureKind::Mv,
        FeatureKind::MvDir,
        FeatureKind::Qdc,
        FeatureKind::QtcC1,
        FeatureKind::QtcC3,
    ];

    pub fn arity(self) -> usize {
        match self {
            FeatureKind::Mv | FeatureKind::MvDir => 1,
            _ => 2,
        }
    }

    /// Kinds whose value at frame `t` depends on the motion from `t` to `t + 1`.
    pub fn is_transition(self) -> bool {
        !matches!(self, FeatureKind::Cd | FeatureKind::Qdc)
    }

    /// Only QDC bands carry an order usable by `<`, `<=`, `>`, `>=`.
    pub fn is_ordered(self) -> bool {
        self == FeatureKind::Qdc
    }

    pub fn name(self) -> &'static str {
        match self {
            FeatureKind::Cd => "CD",
            FeatureKind::Mv => "MV",
            FeatureKind::MvDir => "MV_DIR",
            FeatureKind::Qdc => "QDC",
            FeatureKind::QtcC1 => "QTC_C1",
            FeatureKind::QtcC3 => "QTC_C3",
        }
    }

    /// Every value of the kind, in ordinal order.
    pub fn domain(self) -> Vec<FeatureValue> {
        match self {
            FeatureKind::Cd => Compass::ALL
                .iter()
                .map(|&c| FeatureValue::Cd(CdValue::Dir(c)))
                .chain(std::iter::once(FeatureValue::Cd(CdValue::Eq)))
                .collect(),
            FeatureKind::Mv => vec![FeatureValue::Mv(false), FeatureValue::Mv(true)],
            FeatureKind::MvDir => Compass::ALL
                .iter()
                .map(|&c| FeatureValue::MvDir(MoveDir::Dir(c)))
                .chain(std::iter::once(FeatureValue::MvDir(MoveDir::Static)))
                .collect(),
            FeatureKind::Qdc => (0..4).map(|b| FeatureValue::Qdc(QdcBand(b))).collect(),
            FeatureKind::QtcC1 => QtcSign::ALL.iter().map(|&s| FeatureValue::QtcC1(s)).collect(),
            FeatureKind::QtcC3 => QtcSign::ALL.iter().map(|&s| FeatureValue::QtcC3(s)).collect(),
        }
    }

    pub fn domain_size(self) -> usize {
        match self {
            FeatureKind::Cd | FeatureKind::MvDir => 9,
            FeatureKind::Mv => 2,
            FeatureKind::Qdc => 4,
            FeatureKind::QtcC1 | FeatureKind::QtcC3 => 3,
        }
    }

    pub fn value_at(self, ordinal: usize) -> Option<FeatureValue> {
        self.domain().get(ordinal).copied()
    }

    pub fn parse_value(self, text: &str) -> Result<FeatureValue, FeatureError> {
        self.domain()
            .into_iter()
            .find(|v| v.symbol() == text)
            .ok_or_else(|| FeatureError::UnknownValue { kind: self, text: text.to_string() })
    }
}

impl fmt::Display for FeatureKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for FeatureKind {
    type Err = FeatureError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        FeatureKind::ALL.into_iter().find(|k| k.name() == s).ok_or_else(|| FeatureError::UnknownKind(s.to_string()))
    }
}

/// Eight 45-degree compass sectors, clockwise from north.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Compass {
    N,
    NE,
    E,
    SE,
    S,
    SW,
    W,
    NW,
}

impl Compass {
    pub const ALL: [Compass; 8] =
        [Compass::N, Compass::NE, Compass::E, Compass::SE, Compass::S, Compass::SW, Compass::W, Compass::NW];

    /// Sector of a vector `(dx, dy)` with north = +y. Sectors are half-open
    /// with the lower bearing included: N covers `[-22.5, 22.5)`.
    pub fn from_vector(dx: f64, dy: f64) -> Compass {
        let bearing = dx.atan2(dy).to_degrees();
        let idx = ((bearing + 22.5) / 45.0).floor().rem_euclid(8.0) as usize;
        Compass::ALL[idx.min(7)]
    }

    /// The sector 90 degrees clockwise.
    pub fn quarter_turn(self) -> Compass {
        Compass::ALL[(self as usize + 2) % 8]
    }

    pub fn symbol(self) -> &'static str {
        match self {
            Compass::N => "N",
            Compass::NE => "NE",
            Compass::E => "E",
            Compass::SE => "SE",
            Compass::S => "S",
            Compass::SW => "SW",
            Compass::W => "W",
            Compass::NW => "NW",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum CdValue {
    Dir(Compass),
    /// The two locations coincide.
    Eq,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum MoveDir {
    Dir(Compass),
    Static,
}

/// Distance band: 0 adjacent, 1 close, 2 far, 3 very far.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct QdcBand(pub u8);

impl QdcBand {
    pub fn name(self) -> &'static str {
        match self.0 {
            0 => "adjacent",
            1 => "close",
            2 => "far",
            _ => "very_far",
        }
    }
}

/// QTC symbol: `-` toward / clockwise, `0` neutral, `+` away / counterclockwise.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum QtcSign {
    Minus,
    Zero,
    Plus,
}

impl QtcSign {
    pub const ALL: [QtcSign; 3] = [QtcSign::Minus, QtcSign::Zero, QtcSign::Plus];

    pub fn symbol(self) -> &'static str {
        match self {
            QtcSign::Minus => "-",
            QtcSign::Zero => "0",
            QtcSign::Plus => "+",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum FeatureValue {
    Cd(CdValue),
    Mv(bool),
    MvDir(MoveDir),
    Qdc(QdcBand),
    QtcC1(QtcSign),
    QtcC3(QtcSign),
}

impl FeatureValue {
    pub fn kind(self) -> FeatureKind {
        match self {
            FeatureValue::Cd(_) => FeatureKind::Cd,
            FeatureValue::Mv(_) => FeatureKind::Mv,
            FeatureValue::MvDir(_) => FeatureKind::MvDir,
            FeatureValue::Qdc(_) => FeatureKind::Qdc,
            FeatureValue::QtcC1(_) => FeatureKind::QtcC1,
            FeatureValue::QtcC3(_) => FeatureKind::QtcC3,
        }
    }

    /// Zero-based position within the kind's domain.
    pub fn ordinal(self) -> usize {
        match self {
            FeatureValue::Cd(CdValue::Dir(c)) | FeatureValue::MvDir(MoveDir::Dir(c)) => c as usize,
            FeatureValue::Cd(CdValue::Eq) | FeatureValue::MvDir(MoveDir::Static) => 8,
            FeatureValue::Mv(m) => m as usize,
            FeatureValue::Qdc(b) => b.0 as usize,
            FeatureValue::QtcC1(s) | FeatureValue::QtcC3(s) => s as usize,
        }
    }

    /// Symbol used in the pattern grammar.
    pub fn symbol(self) -> &'static str {
        match self {
            FeatureValue::Cd(CdValue::Dir(c)) | FeatureValue::MvDir(MoveDir::Dir(c)) => c.symbol(),
            FeatureValue::Cd(CdValue::Eq) => "EQ",
            FeatureValue::MvDir(MoveDir::Static) => "STATIC",
            FeatureValue::Mv(false) => "0",
            FeatureValue::Mv(true) => "1",
            FeatureValue::Qdc(b) => ["0", "1", "2", "3"][b.0.min(3) as usize],
            FeatureValue::QtcC1(s) | FeatureValue::QtcC3(s) => s.symbol(),
        }
    }
}

impl fmt::Display for FeatureValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.symbol())
    }
}
