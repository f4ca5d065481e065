//! Resource ceilings shared by the enumerators and counters.

use crate::error::{Error, Result};

/// Environment variable holding comma-separated `name=value` cap overrides,
/// e.g. `PACKETS_CAPS="classes=2e6,grid=4e6"`.
pub const CAPS_ENV: &str = "PACKETS_CAPS";

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Caps {
    /// Maximum number of geodesic classes in one spectrum.
    pub classes: usize,
    /// Maximum number of pending states in the best-first frontier.
    pub frontier: usize,
    /// Maximum estimated tuple count accepted by exact DFS counting.
    pub exact_count: u64,
    /// Maximum number of distinct sums kept by distinct-sum counting and the simulator.
    pub distinct: usize,
    /// Maximum number of budget cells in the grid DP.
    pub grid: usize,
    /// Bit depth at which interval refinement gives up.
    pub refine_bits: u32,
}

impl Default for Caps {
    fn default() -> Self {
        Caps {
            classes: 10_000_000,
            frontier: 2_000_000,
            exact_count: 1_000_000_000,
            distinct: 2_000_000,
            grid: 1_000_000,
            refine_bits: 512,
        }
    }
}

impl Caps {
    /// Defaults overridden by [`CAPS_ENV`] when it is set.
    pub fn from_env() -> Result<Self> {
        match std::env::var(CAPS_ENV) {
            Ok(s) => Caps::default().with_overrides(&s),
            Err(_) => Ok(Caps::default()),
        }
    }

    pub fn with_overrides(mut self, spec: &str) -> Result<Self> {
        for item in spec.split(',').map(str::trim).filter(|s| !s.is_empty()) {
            let (name, value) = item
                .split_once('=')
                .ok_or_else(|| Error::Parse(format!("cap override `{item}` is not name=value")))?;
            let v: f64 = value
                .trim()
                .parse()
                .map_err(|_| Error::Parse(format!("cap `{name}` has non-numeric value `{value}`")))?;
            if !(v.is_finite() && v >= 1.0) {
                return Err(Error::Parse(format!("cap `{name}` must be a positive number")));
            }
            match name.trim() {
                "classes" => self.classes = v as usize,
                "frontier" => self.frontier = v as usize,
                "exact" | "exact_count" => self.exact_count = v as u64,
                "distinct" => self.distinct = v as usize,
                "grid" => self.grid = v as usize,
                "refine_bits" => self.refine_bits = v as u32,
                other => return Err(Error::Parse(format!("unknown cap `{other}`"))),
            }
        }
        Ok(self)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn overrides_parse() {
        let c = Caps::default().with_overrides("classes=2e6, grid=4000").unwrap();
        assert_eq!(c.classes, 2_000_000);
        assert_eq!(c.grid, 4000);
        assert_eq!(c.frontier, Caps::default().frontier);
    }

    #[test]
    fn bad_overrides_rejected() {
        assert!(Caps::default().with_overrides("classes").is_err());
        assert!(Caps::default().with_overrides("bogus=3").is_err());
        assert!(Caps::default().with_overrides("grid=0").is_err());
    }
}
