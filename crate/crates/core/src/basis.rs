//! Fixed-magnetization sectors of an L-site spin-1/2 chain.
//!
//! A configuration is an `L`-bit integer; bit `j` is the spin at site `j`
//! (1 = up). A sector holds every configuration with exactly `n_up` set bits,
//! stored in ascending order so that the ordinal of a state is its rank.

use crate::error::{Error, Result};

/// Largest supported chain. The half-filled sector at this size has
/// 2 704 156 states.
pub const MAX_SITES: usize = 24;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SpinBasis {
    sites: usize,
    n_up: usize,
    states: Vec<u64>,
}

impl SpinBasis {
    pub fn new(sites: usize, n_up: usize) -> Result<Self> {
        if !(2..=MAX_SITES).contains(&sites) {
            return Err(Error::domain(format!(
                "chain length must lie in 2..={MAX_SITES}, got {sites}"
            )));
        }
        if n_up > sites {
            return Err(Error::domain(format!(
                "n_up = {n_up} exceeds the number of sites {sites}"
            )));
        }

        let mut states = Vec::with_capacity(binomial(sites, n_up));
        if n_up == 0 {
            states.push(0);
        } else {
            // Gosper's hack: next larger integer with the same popcount.
            let end = 1u64 << sites;
            let mut x = (1u64 << n_up) - 1;
            while x < end {
                states.push(x);
                let c = x & x.wrapping_neg();
                let r = x + c;
                x = (((r ^ x) >> 2) / c) | r;
            }
        }
        debug_assert_eq!(states.len(), binomial(sites, n_up));

        Ok(Self {
            sites,
            n_up,
            states,
        })
    }

    pub fn sites(&self) -> usize {
        self.sites
    }

    pub fn n_up(&self) -> usize {
        self.n_up
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn states(&self) -> &[u64] {
        &self.states
    }

    pub fn state(&self, index: usize) -> u64 {
        self.states[index]
    }

    /// Ordinal of `state` within the sector.
    pub fn state_index(&self, state: u64) -> Result<usize> {
        self.states
            .binary_search(&state)
            .map_err(|_| Error::Lookup { state })
    }

    pub fn contains(&self, state: u64) -> bool {
        self.states.binary_search(&state).is_ok()
    }
}

pub fn binomial(n: usize, k: usize) -> usize {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    (0..k).fold(1usize, |acc, i| acc * (n - i) / (i + 1))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_site_sector() {
        let b = SpinBasis::new(2, 1).unwrap();
        assert_eq!(b.states(), &[0b01, 0b10]);
        assert_eq!(b.state_index(0b01).unwrap(), 0);
        assert_eq!(b.state_index(0b10).unwrap(), 1);
    }

    #[test]
    fn sector_sizes() {
        assert_eq!(SpinBasis::new(4, 2).unwrap().len(), 6);
        assert_eq!(SpinBasis::new(16, 8).unwrap().len(), 12870);
        assert_eq!(SpinBasis::new(5, 0).unwrap().states(), &[0]);
        assert_eq!(SpinBasis::new(5, 5).unwrap().states(), &[0b11111]);
    }

    #[test]
    fn smallest_member_first() {
        let b = SpinBasis::new(4, 2).unwrap();
        assert_eq!(b.state_index(0b0011).unwrap(), 0);
        assert_eq!(b.state(5), 0b1100);
    }

    #[test]
    fn out_of_range_arguments() {
        assert!(matches!(SpinBasis::new(1, 0), Err(Error::Domain(_))));
        assert!(matches!(SpinBasis::new(25, 12), Err(Error::Domain(_))));
        assert!(matches!(SpinBasis::new(4, 5), Err(Error::Domain(_))));
    }

    #[test]
    fn lookup_outside_sector() {
        let b = SpinBasis::new(4, 2).unwrap();
        assert!(matches!(b.state_index(0b0111), Err(Error::Lookup { .. })));
        assert!(matches!(b.state_index(1 << 5 | 1), Err(Error::Lookup { .. })));
    }

    #[test]
    fn invariants_hold_for_every_small_sector() {
        for sites in 2..=12 {
            for n_up in 0..=sites {
                let b = SpinBasis::new(sites, n_up).unwrap();
                assert_eq!(b.len(), binomial(sites, n_up));
                assert!(b.states().windows(2).all(|w| w[0] < w[1]));
                for (i, &s) in b.states().iter().enumerate() {
                    assert_eq!(s.count_ones() as usize, n_up);
                    assert_eq!(s >> sites, 0);
                    assert_eq!(b.state_index(s).unwrap(), i);
                }
            }
        }
    }

    #[test]
    fn hops_stay_in_sector() {
        let sites = 8;
        let b = SpinBasis::new(sites, 3).unwrap();
        for &s in b.states() {
            for j in 0..sites {
                for k in 0..sites {
                    // S+_j S-_k is nonzero only when j is down and k is up.
                    if j != k && (s >> j) & 1 == 0 && (s >> k) & 1 == 1 {
                        assert!(b.contains(s ^ (1 << j) ^ (1 << k)));
                    }
                }
            }
        }
    }
}
