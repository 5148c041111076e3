//! Fixed-particle-number Fock sectors and fermionic operator signs.
//!
//! Configurations are bitstrings with bit `j` the occupation of site `j`.
//! Operators are ordered by site, so `c_j` picks up `(-1)` to the number of
//! occupied sites below `j`.

use crate::error::{EngineError, Result};

/// Sectors up to this many sites are supported.
pub const MAX_SITES: usize = 22;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SectorBasis {
    l: usize,
    n: usize,
    configs: Vec<u64>,
}

impl SectorBasis {
    pub fn new(l: usize, n: usize) -> Result<Self> {
        if l > MAX_SITES {
            return Err(EngineError::SizeLimit { size: l, limit: MAX_SITES });
        }
        if n > l {
            return Err(EngineError::InvalidParameter(format!("{n} particles on {l} sites")));
        }
        let configs = (0u64..1 << l).filter(|c| c.count_ones() as usize == n).collect();
        Ok(Self { l, n, configs })
    }

    pub fn half_filling(l: usize) -> Result<Self> {
        if l % 2 != 0 || l == 0 {
            return Err(EngineError::OddSize(l));
        }
        Self::new(l, l / 2)
    }

    pub fn sites(&self) -> usize {
        self.l
    }

    pub fn particles(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        self.configs.len()
    }

    /// Configurations in increasing order.
    pub fn configs(&self) -> &[u64] {
        &self.configs
    }

    pub fn unrank(&self, index: usize) -> u64 {
        self.configs[index]
    }

    pub fn rank(&self, config: u64) -> Option<usize> {
        self.configs.binary_search(&config).ok()
    }

    /// Neel configuration with the 0-based odd sites filled.
    pub fn neel_config(&self) -> u64 {
        (0..self.l).filter(|j| j % 2 == 1).fold(0, |acc, j| acc | 1 << j)
    }
}

fn parity_below(config: u64, site: usize) -> f64 {
    if (config & ((1u64 << site) - 1)).count_ones() % 2 == 0 {
        1.0
    } else {
        -1.0
    }
}

/// `c_site |config>` as `(config', sign)`, or `None` if the site is empty.
pub fn annihilate(config: u64, site: usize) -> Option<(u64, f64)> {
    if config >> site & 1 == 0 {
        return None;
    }
    Some((config ^ 1 << site, parity_below(config, site)))
}

/// `c_site^dagger |config>`, or `None` if the site is occupied.
pub fn create(config: u64, site: usize) -> Option<(u64, f64)> {
    if config >> site & 1 == 1 {
        return None;
    }
    Some((config | 1 << site, parity_below(config, site)))
}

/// `c_a^dagger c_b |config>`.
pub fn hop(config: u64, a: usize, b: usize) -> Option<(u64, f64)> {
    let (mid, s1) = annihilate(config, b)?;
    let (out, s2) = create(mid, a)?;
    Some((out, s1 * s2))
}

/// Position of every bitstring of a given width inside its popcount class,
/// counted in increasing order.
pub(crate) fn class_ranks(width: usize) -> Vec<u32> {
    let mut counters = vec![0u32; width + 1];
    (0u64..1 << width)
        .map(|x| {
            let k = x.count_ones() as usize;
            let r = counters[k];
            counters[k] += 1;
            r
        })
        .collect()
}

pub(crate) fn binomial(n: usize, k: usize) -> usize {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    (0..k).fold(1usize, |acc, i| acc * (n - i) / (i + 1))
}
