use std::collections::BTreeSet;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::ClassId;
use crate::error::{Error, Result};

/// Halves the existing unseen set with a seeded shuffle. The first
/// `⌊|U_E|/2⌋` shuffled classes become the common unseen set, the rest stay
/// available to the selector. Both halves are returned sorted.
pub fn split_unseen(u_existing: &[ClassId], rng_seed: u64) -> Result<(Vec<ClassId>, Vec<ClassId>)> {
    let mut pool: Vec<ClassId> = u_existing.iter().copied().collect::<BTreeSet<_>>().into_iter().collect();
    if pool.len() != u_existing.len() {
        return Err(Error::Split("existing unseen set contains duplicates".into()));
    }
    if pool.len() < 2 {
        return Err(Error::Split(format!(
            "need at least 2 unseen classes to split, got {}",
            pool.len()
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    pool.shuffle(&mut rng);
    let half = pool.len() / 2;
    let mut common = pool[..half].to_vec();
    let mut remaining = pool[half..].to_vec();
    common.sort_unstable();
    remaining.sort_unstable();
    Ok((common, remaining))
}

/// Existing and proposed seen/unseen sets for one repeat.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitDefinition {
    pub seen_existing: Vec<ClassId>,
    pub unseen_existing: Vec<ClassId>,
    pub common_unseen: Vec<ClassId>,
    pub remaining_unseen: Vec<ClassId>,
    pub seen_proposed: Vec<ClassId>,
    pub rng_seed: u64,
}

impl SplitDefinition {
    pub fn from_existing(seen_existing: &[ClassId], unseen_existing: &[ClassId], rng_seed: u64) -> Result<Self> {
        let (common_unseen, remaining_unseen) = split_unseen(unseen_existing, rng_seed)?;
        let mut seen_existing = seen_existing.to_vec();
        seen_existing.sort_unstable();
        let mut unseen_existing = unseen_existing.to_vec();
        unseen_existing.sort_unstable();
        let split = Self {
            seen_existing,
            unseen_existing,
            common_unseen,
            remaining_unseen,
            seen_proposed: Vec::new(),
            rng_seed,
        };
        split.validate()?;
        Ok(split)
    }

    /// Classes available to the selector: existing seen plus the remaining
    /// unseen half, ascending.
    pub fn domain(&self) -> Vec<ClassId> {
        let mut d: Vec<ClassId> = self
            .seen_existing
            .iter()
            .chain(&self.remaining_unseen)
            .copied()
            .collect();
        d.sort_unstable();
        d
    }

    pub fn validate(&self) -> Result<()> {
        let seen: BTreeSet<_> = self.seen_existing.iter().collect();
        let unseen: BTreeSet<_> = self.unseen_existing.iter().collect();
        let common: BTreeSet<_> = self.common_unseen.iter().collect();
        let remaining: BTreeSet<_> = self.remaining_unseen.iter().collect();
        if seen.intersection(&unseen).next().is_some() {
            return Err(Error::Protocol("existing seen and unseen sets overlap".into()));
        }
        if common.intersection(&remaining).next().is_some() {
            return Err(Error::Protocol("common and remaining unseen sets overlap".into()));
        }
        let union: BTreeSet<_> = common.union(&remaining).copied().collect();
        if union != unseen {
            return Err(Error::Protocol(
                "common and remaining unseen sets do not cover the existing unseen set".into(),
            ));
        }
        if let Some(c) = self.seen_proposed.iter().find(|c| common.contains(c)) {
            return Err(Error::Protocol(format!("proposed seen class {c} is a common unseen class")));
        }
        if let Some(c) = self
            .seen_proposed
            .iter()
            .find(|c| !seen.contains(c) && !remaining.contains(c))
        {
            return Err(Error::Protocol(format!("proposed seen class {c} is outside the selector domain")));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn halves_match_dataset_sizes() {
        let cub: Vec<_> = (150..200).collect();
        assert_eq!(split_unseen(&cub, 1).unwrap().0.len(), 25);
        let sun: Vec<_> = (0..72).collect();
        assert_eq!(split_unseen(&sun, 1).unwrap().0.len(), 36);
    }

    #[test]
    fn deterministic() {
        let u: Vec<_> = (0..31).collect();
        assert_eq!(split_unseen(&u, 99).unwrap(), split_unseen(&u, 99).unwrap());
        assert_ne!(split_unseen(&u, 99).unwrap(), split_unseen(&u, 100).unwrap());
    }

    #[test]
    fn rejects_tiny_inputs() {
        assert!(split_unseen(&[], 0).is_err());
        assert!(split_unseen(&[3], 0).is_err());
    }

    #[test]
    fn proposed_set_may_not_touch_common() {
        let mut s = SplitDefinition::from_existing(&[0, 1, 2], &[3, 4, 5, 6], 5).unwrap();
        s.seen_proposed = vec![s.common_unseen[0]];
        assert!(matches!(s.validate(), Err(Error::Protocol(_))));
        s.seen_proposed = vec![s.remaining_unseen[0], 0];
        s.validate().unwrap();
    }
}
