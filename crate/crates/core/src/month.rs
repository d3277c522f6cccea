use std::fmt;
use std::str::FromStr;

use crate::error::Error;

/// A calendar month, ordered chronologically.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct YearMonth {
    year: i32,
    month: u8,
}

impl YearMonth {
    pub fn new(year: i32, month: u8) -> Result<Self, Error> {
        if !(1..=12).contains(&month) {
            return Err(Error::invalid(format!("month {month} outside 1-12")));
        }
        Ok(Self { year, month })
    }

    pub fn year(self) -> i32 {
        self.year
    }

    /// Calendar month, 1-12.
    pub fn month(self) -> u8 {
        self.month
    }

    /// Months since year 0, January.
    pub fn ordinal(self) -> i64 {
        self.year as i64 * 12 + (self.month as i64 - 1)
    }

    pub fn from_ordinal(ordinal: i64) -> Self {
        Self {
            year: ordinal.div_euclid(12) as i32,
            month: (ordinal.rem_euclid(12) + 1) as u8,
        }
    }

    pub fn plus(self, months: i64) -> Self {
        Self::from_ordinal(self.ordinal() + months)
    }

    /// Signed number of months from `earlier` to `self`.
    pub fn months_since(self, earlier: YearMonth) -> i64 {
        self.ordinal() - earlier.ordinal()
    }

    pub fn season(self) -> Season {
        Season::of_month(self.month)
    }
}

impl fmt::Display for YearMonth {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:04}-{:02}", self.year, self.month)
    }
}

impl FromStr for YearMonth {
    type Err = Error;

    /// Parses `YYYY-MM`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || Error::invalid(format!("malformed month {s:?}, expected YYYY-MM"));
        let (y, m) = s.trim().split_once('-').ok_or_else(bad)?;
        if y.len() != 4 || m.len() != 2 {
            return Err(bad());
        }
        let year: i32 = y.parse().map_err(|_| bad())?;
        let month: u8 = m.parse().map_err(|_| bad())?;
        YearMonth::new(year, month).map_err(|_| bad())
    }
}

/// Meteorological seasons.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Season {
    Djf,
    Mam,
    Jja,
    Son,
}

impl Season {
    pub const ALL: [Season; 4] = [Season::Djf, Season::Mam, Season::Jja, Season::Son];

    pub fn of_month(month: u8) -> Season {
        match month {
            12 | 1 | 2 => Season::Djf,
            3..=5 => Season::Mam,
            6..=8 => Season::Jja,
            _ => Season::Son,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Season::Djf => "DJF",
            Season::Mam => "MAM",
            Season::Jja => "JJA",
            Season::Son => "SON",
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_and_display() {
        let ym: YearMonth = "1995-06".parse().unwrap();
        assert_eq!((ym.year(), ym.month()), (1995, 6));
        assert_eq!(ym.to_string(), "1995-06");
        assert!("1995-6".parse::<YearMonth>().is_err());
        assert!("1995-13".parse::<YearMonth>().is_err());
        assert!("95-06".parse::<YearMonth>().is_err());
        assert!("1995/06".parse::<YearMonth>().is_err());
    }

    #[test]
    fn arithmetic_crosses_years() {
        let ym = YearMonth::new(2010, 11).unwrap();
        assert_eq!(ym.plus(3).to_string(), "2011-02");
        assert_eq!(ym.plus(-11).to_string(), "2009-12");
        assert_eq!(ym.plus(3).months_since(ym), 3);
    }

    #[test]
    fn seasons() {
        assert_eq!(Season::of_month(1), Season::Djf);
        assert_eq!(Season::of_month(12), Season::Djf);
        assert_eq!(Season::of_month(4), Season::Mam);
        assert_eq!(Season::of_month(7), Season::Jja);
        assert_eq!(Season::of_month(10), Season::Son);
    }
}
