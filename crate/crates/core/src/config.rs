//! Runtime limits.

/// Largest deck handled by exact (all-of-S_n) analysis unless overridden.
pub const DEFAULT_EXACT_CAP: usize = 8;

/// Environment variable that overrides [`DEFAULT_EXACT_CAP`].
pub const EXACT_CAP_ENV: &str = "MONTEMIX_EXACT_CAP";

/// Hard ceiling for the override: 12! states is already ~3.8 GB of `f64`.
const MAX_EXACT_CAP: usize = 12;

/// Current exact-analysis cap, honouring `MONTEMIX_EXACT_CAP`.
pub fn exact_cap() -> usize {
    parse_cap(std::env::var(EXACT_CAP_ENV).ok().as_deref())
}

pub(crate) fn parse_cap(raw: Option<&str>) -> usize {
    raw.and_then(|s| s.trim().parse::<usize>().ok())
        .filter(|&c| c >= 1)
        .map(|c| c.min(MAX_EXACT_CAP))
        .unwrap_or(DEFAULT_EXACT_CAP)
}

pub(crate) fn check_exact(n: usize) -> crate::Result<()> {
    let cap = exact_cap();
    if n > cap {
        return Err(crate::Error::ExactCapExceeded { n, cap });
    }
    Ok(())
}
