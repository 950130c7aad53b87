use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{PcsmError, Result};

/// A set of ground-set indices, kept sorted and duplicate free.
///
/// The derived ordering compares the sorted index lists lexicographically,
/// which is the tie-break order used by every solver.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Subset(Vec<usize>);

impl Subset {
    pub fn empty() -> Self {
        Subset(Vec::new())
    }

    pub fn from_indices<I: IntoIterator<Item = usize>>(items: I) -> Self {
        let mut v: Vec<usize> = items.into_iter().collect();
        v.sort_unstable();
        v.dedup();
        Subset(v)
    }

    /// Like [`Subset::from_indices`] but rejects out-of-range and repeated indices.
    pub fn try_new(items: &[usize], n: usize) -> Result<Self> {
        if let Some(&bad) = items.iter().find(|&&i| i >= n) {
            return Err(PcsmError::ElementOutOfRange { element: bad, n });
        }
        let s = Subset::from_indices(items.iter().copied());
        if s.len() != items.len() {
            return Err(PcsmError::InvalidParameter("subset has duplicate indices".into()));
        }
        Ok(s)
    }

    pub fn full(n: usize) -> Self {
        Subset((0..n).collect())
    }

    pub fn from_mask(mask: u64) -> Self {
        Subset((0..64).filter(|&i| mask >> i & 1 == 1).collect())
    }

    /// `None` when some index does not fit in 64 bits.
    pub fn to_mask(&self) -> Option<u64> {
        self.0.iter().try_fold(0u64, |m, &i| (i < 64).then(|| m | 1 << i))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn contains(&self, x: usize) -> bool {
        self.0.binary_search(&x).is_ok()
    }

    pub fn insert(&mut self, x: usize) -> bool {
        match self.0.binary_search(&x) {
            Ok(_) => false,
            Err(pos) => {
                self.0.insert(pos, x);
                true
            }
        }
    }

    pub fn remove(&mut self, x: usize) -> bool {
        match self.0.binary_search(&x) {
            Ok(pos) => {
                self.0.remove(pos);
                true
            }
            Err(_) => false,
        }
    }

    pub fn with(&self, x: usize) -> Subset {
        let mut s = self.clone();
        s.insert(x);
        s
    }

    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.0.iter().copied()
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.0
    }

    pub fn max_index(&self) -> Option<usize> {
        self.0.last().copied()
    }

    pub fn union(&self, other: &Subset) -> Subset {
        Subset::from_indices(self.iter().chain(other.iter()))
    }

    pub fn difference(&self, other: &Subset) -> Subset {
        Subset(self.iter().filter(|&i| !other.contains(i)).collect())
    }

    pub fn intersection(&self, other: &Subset) -> Subset {
        Subset(self.iter().filter(|&i| other.contains(i)).collect())
    }

    pub fn is_disjoint(&self, other: &Subset) -> bool {
        self.iter().all(|i| !other.contains(i))
    }

    pub fn is_subset(&self, other: &Subset) -> bool {
        self.iter().all(|i| other.contains(i))
    }
}

impl FromIterator<usize> for Subset {
    fn from_iter<I: IntoIterator<Item = usize>>(iter: I) -> Self {
        Subset::from_indices(iter)
    }
}

impl fmt::Display for Subset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (k, i) in self.0.iter().enumerate() {
            if k > 0 {
                write!(f, ",")?;
            }
            write!(f, "{i}")?;
        }
        write!(f, "}}")
    }
}
