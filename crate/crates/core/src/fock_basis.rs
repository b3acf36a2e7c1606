//! Occupation-number basis for `N` bosons on `L` sites.
//!
//! States are stored in strictly descending lexicographic order, so
//! `(N, 0, …, 0)` is always index 0 and `(0, …, 0, N)` the last index.

use alloc::format;
use core::fmt;

use hashbrown::HashMap;

use crate::error::{Error, Result};
use crate::prelude::*;

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct FockState(Vec<u32>);

impl FockState {
    pub fn new(occupations: Vec<u32>) -> Self {
        Self(occupations)
    }

    pub fn occupations(&self) -> &[u32] {
        &self.0
    }

    pub fn sites(&self) -> usize {
        self.0.len()
    }

    pub fn particles(&self) -> u64 {
        self.0.iter().map(|&n| n as u64).sum()
    }

    pub fn occupation(&self, site: usize) -> u32 {
        self.0[site]
    }
}

impl fmt::Display for FockState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("(")?;
        for (i, n) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{n}")?;
        }
        f.write_str(")")
    }
}

/// Binomial coefficient `C(N+L-1, N)`: the number of ways to place `N`
/// bosons on `L` sites. Fails instead of wrapping on overflow.
pub fn dimension(particles: usize, sites: usize) -> Result<usize> {
    if sites == 0 {
        return Err(Error::InvalidArgument("a chain needs at least one site".into()));
    }
    let overflow = || Error::DimensionOverflow { n: particles, l: sites };
    let top = particles.checked_add(sites - 1).ok_or_else(overflow)?;
    let k = particles.min(sites - 1);
    // Multiplicative formula; each partial product is itself a binomial
    // coefficient, so the division is exact. u128 holds the intermediate.
    let mut acc: u128 = 1;
    for i in 1..=k {
        acc = acc * (top - k + i) as u128 / i as u128;
        if acc > usize::MAX as u128 {
            return Err(overflow());
        }
    }
    Ok(acc as usize)
}

#[derive(Debug, Clone)]
pub struct FockBasis {
    particles: usize,
    sites: usize,
    states: Vec<FockState>,
    index: HashMap<FockState, usize>,
}

impl FockBasis {
    /// Enumerates every occupation vector with `sum = particles`.
    pub fn new(particles: usize, sites: usize) -> Result<Self> {
        let dim = dimension(particles, sites)?;
        if particles > u32::MAX as usize {
            return Err(Error::InvalidArgument(format!("{particles} particles do not fit in u32")));
        }
        let mut states = Vec::with_capacity(dim);
        let mut current = vec![0u32; sites];
        fill(&mut current, 0, particles as u32, &mut states);
        debug_assert_eq!(states.len(), dim);
        let index = states.iter().enumerate().map(|(i, s)| (s.clone(), i)).collect();
        Ok(Self { particles, sites, states, index })
    }

    pub fn particles(&self) -> usize {
        self.particles
    }

    pub fn sites(&self) -> usize {
        self.sites
    }

    pub fn dim(&self) -> usize {
        self.states.len()
    }

    pub fn states(&self) -> &[FockState] {
        &self.states
    }

    pub fn state(&self, k: usize) -> &FockState {
        &self.states[k]
    }

    pub fn index_of(&self, s: &FockState) -> Result<usize> {
        if s.sites() != self.sites || s.particles() != self.particles as u64 {
            return Err(Error::StateNotInBasis(format!(
                "{s} (basis has N={}, L={})",
                self.particles, self.sites
            )));
        }
        self.index.get(s).copied().ok_or_else(|| Error::StateNotInBasis(format!("{s}")))
    }

    /// Lookup by raw occupations, used on hot paths where the caller has
    /// already guaranteed `N` and `L`.
    pub(crate) fn lookup(&self, occupations: &[u32]) -> Option<usize> {
        // hashbrown lets us query a FockState key with a Vec<u32> borrow.
        self.index.get(occupations).copied()
    }

    /// Combinatorial rank of an occupation vector in descending
    /// lexicographic order. Equivalent to [`FockBasis::index_of`] for valid
    /// states; kept as an O(L) alternative.
    pub fn rank(&self, s: &FockState) -> Result<usize> {
        if s.sites() != self.sites || s.particles() != self.particles as u64 {
            return Err(Error::StateNotInBasis(format!("{s}")));
        }
        let mut remaining = self.particles;
        let mut rank = 0usize;
        for (site, &n) in s.occupations().iter().enumerate() {
            let sites_after = self.sites - site - 1;
            if sites_after == 0 {
                break;
            }
            // States sharing the prefix but with a larger occupation here
            // come first.
            for larger in (n as usize + 1)..=remaining {
                rank += dimension(remaining - larger, sites_after)?;
            }
            remaining -= n as usize;
        }
        Ok(rank)
    }
}

impl core::borrow::Borrow<[u32]> for FockState {
    fn borrow(&self) -> &[u32] {
        &self.0
    }
}

fn fill(current: &mut [u32], site: usize, remaining: u32, out: &mut Vec<FockState>) {
    if site + 1 == current.len() {
        current[site] = remaining;
        out.push(FockState(current.to_vec()));
        current[site] = 0;
        return;
    }
    for n in (0..=remaining).rev() {
        current[site] = n;
        fill(current, site + 1, remaining - n, out);
    }
    current[site] = 0;
}

#[cfg(test)]
mod tests {
    use super::*;

    fn brute_force(particles: u32, sites: usize) -> Vec<Vec<u32>> {
        // Odometer over [0, N]^L, keep sum == N, sort descending.
        let mut out = Vec::new();
        let mut occ = vec![0u32; sites];
        loop {
            if occ.iter().sum::<u32>() == particles {
                out.push(occ.clone());
            }
            let mut i = 0;
            loop {
                if i == sites {
                    out.sort_by(|a, b| b.cmp(a));
                    return out;
                }
                occ[i] += 1;
                if occ[i] <= particles {
                    break;
                }
                occ[i] = 0;
                i += 1;
            }
        }
    }

    #[test]
    fn dimension_values() {
        assert_eq!(dimension(6, 7).unwrap(), 924);
        assert_eq!(dimension(7, 8).unwrap(), 3432);
        assert_eq!(dimension(0, 5).unwrap(), 1);
        assert_eq!(dimension(2, 2).unwrap(), brute_force(2, 2).len());
        assert_eq!(dimension(5, 6).unwrap(), 252);
    }

    #[test]
    fn dimension_overflow_is_an_error() {
        assert!(dimension(32, 33).is_ok());
        assert!(matches!(dimension(1000, 1000), Err(Error::DimensionOverflow { .. })));
        assert!(matches!(dimension(usize::MAX, 2), Err(Error::DimensionOverflow { .. })));
        assert!(dimension(3, 0).is_err());
    }

    #[test]
    fn enumeration_matches_brute_force() {
        for (n, l) in [(1, 2), (2, 2), (3, 3), (4, 3), (2, 5), (0, 3)] {
            let basis = FockBasis::new(n, l).unwrap();
            let got: Vec<Vec<u32>> = basis.states().iter().map(|s| s.occupations().to_vec()).collect();
            assert_eq!(got, brute_force(n as u32, l), "N={n} L={l}");
        }
    }

    #[test]
    fn small_examples() {
        let b = FockBasis::new(1, 2).unwrap();
        assert_eq!(b.state(0).occupations(), &[1, 0]);
        assert_eq!(b.state(1).occupations(), &[0, 1]);
        assert_eq!(b.index_of(&FockState::new(vec![1, 0])).unwrap(), 0);

        let b = FockBasis::new(2, 2).unwrap();
        assert_eq!(b.index_of(&FockState::new(vec![2, 0])).unwrap(), 0);
        assert_eq!(b.index_of(&FockState::new(vec![1, 1])).unwrap(), 1);
        assert_eq!(b.index_of(&FockState::new(vec![0, 2])).unwrap(), 2);

        let b = FockBasis::new(6, 7).unwrap();
        assert_eq!(b.dim(), 924);
        assert_eq!(b.state(0).occupations(), &[6, 0, 0, 0, 0, 0, 0]);
    }

    #[test]
    fn foreign_states_are_rejected() {
        let b = FockBasis::new(2, 3).unwrap();
        assert!(b.index_of(&FockState::new(vec![1, 0, 0])).is_err());
        assert!(b.index_of(&FockState::new(vec![1, 1])).is_err());
        assert!(b.rank(&FockState::new(vec![3, 0, 0])).is_err());
    }

    #[test]
    fn rank_agrees_with_hash_lookup() {
        let b = FockBasis::new(5, 5).unwrap();
        for (k, s) in b.states().iter().enumerate() {
            assert_eq!(b.index_of(s).unwrap(), k);
            assert_eq!(b.rank(s).unwrap(), k);
        }
    }

    #[test]
    fn strictly_descending() {
        let b = FockBasis::new(4, 4).unwrap();
        assert!(b.states().windows(2).all(|w| w[0] > w[1]));
    }
}
