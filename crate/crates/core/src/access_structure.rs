//! Monotone access structures over participants `{1..K}`.
//!
//! Subsets are bitmasks (`bit i-1` ⇔ participant `i`). The qualified family is
//! treated as a generating family and closed upward implicitly; the forbidden
//! family is closed downward. Operations that enumerate all `2^K` subsets are
//! limited to [`MAX_ENUMERATION_PARTICIPANTS`].

use std::cmp::Ordering;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest `K` accepted by full `2^K` enumerations.
pub const MAX_ENUMERATION_PARTICIPANTS: usize = 20;
/// Largest `K` representable by the bitmask encoding.
pub const MAX_PARTICIPANTS: usize = 64;

/// A set of participants, stored as a bitmask.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(into = "Vec<usize>", try_from = "Vec<usize>")]
pub struct Subset(u64);

impl Subset {
    pub const EMPTY: Subset = Subset(0);

    pub fn from_bits(bits: u64) -> Self {
        Subset(bits)
    }

    pub fn bits(self) -> u64 {
        self.0
    }

    /// Builds a subset from 1-based participant indices.
    pub fn from_members(members: &[usize]) -> Result<Self> {
        let mut bits = 0u64;
        for &m in members {
            if m == 0 || m > MAX_PARTICIPANTS {
                return Err(Error::InvalidStructure(format!(
                    "participant index {m} outside 1..={MAX_PARTICIPANTS}"
                )));
            }
            bits |= 1 << (m - 1);
        }
        Ok(Subset(bits))
    }

    /// All of `{1..k}`.
    pub fn full(k: usize) -> Self {
        if k >= 64 {
            Subset(u64::MAX)
        } else {
            Subset((1u64 << k) - 1)
        }
    }

    pub fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn contains(self, participant: usize) -> bool {
        (1..=64).contains(&participant) && self.0 & (1 << (participant - 1)) != 0
    }

    pub fn is_subset_of(self, other: Subset) -> bool {
        self.0 & !other.0 == 0
    }

    pub fn union(self, other: Subset) -> Subset {
        Subset(self.0 | other.0)
    }

    /// Highest participant index present, 0 for the empty set.
    pub fn max_member(self) -> usize {
        64 - self.0.leading_zeros() as usize
    }

    /// 1-based members in increasing order.
    pub fn members(self) -> impl Iterator<Item = usize> {
        let bits = self.0;
        (0..64).filter(move |i| bits & (1 << i) != 0).map(|i| i + 1)
    }

    /// 0-based receiver indices in increasing order.
    pub fn indices(self) -> impl Iterator<Item = usize> {
        self.members().map(|m| m - 1)
    }
}

impl Ord for Subset {
    /// Size first, then lexicographic on the sorted member lists.
    fn cmp(&self, other: &Self) -> Ordering {
        self.len()
            .cmp(&other.len())
            .then_with(|| other.0.reverse_bits().cmp(&self.0.reverse_bits()))
    }
}

impl PartialOrd for Subset {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for Subset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (i, m) in self.members().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{m}")?;
        }
        write!(f, "}}")
    }
}

impl fmt::Debug for Subset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl From<Subset> for Vec<usize> {
    fn from(s: Subset) -> Self {
        s.members().collect()
    }
}

impl TryFrom<Vec<usize>> for Subset {
    type Error = Error;
    fn try_from(v: Vec<usize>) -> Result<Self> {
        Subset::from_members(&v)
    }
}

/// Inclusion-minimal members of `family`, deduplicated and canonically sorted.
pub fn minimal_elements(family: &[Subset]) -> Vec<Subset> {
    let mut out: Vec<Subset> = family
        .iter()
        .copied()
        .filter(|&a| !family.iter().any(|&b| b != a && b.is_subset_of(a)))
        .collect();
    out.sort();
    out.dedup();
    out
}

/// Inclusion-maximal members of `family`, deduplicated and canonically sorted.
pub fn maximal_elements(family: &[Subset]) -> Vec<Subset> {
    let mut out: Vec<Subset> = family
        .iter()
        .copied()
        .filter(|&a| !family.iter().any(|&b| b != a && a.is_subset_of(b)))
        .collect();
    out.sort();
    out.dedup();
    out
}

/// No member strictly contains another.
pub fn is_antichain(family: &[Subset]) -> bool {
    family.iter().enumerate().all(|(i, &a)| {
        family
            .iter()
            .enumerate()
            .all(|(j, &b)| i == j || a == b || !a.is_subset_of(b))
    })
}

fn check_enumerable(participants: usize) -> Result<()> {
    if participants > MAX_ENUMERATION_PARTICIPANTS {
        return Err(Error::InvalidParameter(format!(
            "K = {participants} exceeds the enumeration limit {MAX_ENUMERATION_PARTICIPANTS}"
        )));
    }
    Ok(())
}

/// Every nonempty subset of `{1..K}` in canonical order.
pub fn all_nonempty_subsets(participants: usize) -> Result<Vec<Subset>> {
    check_enumerable(participants)?;
    let mut v: Vec<Subset> = (1u64..(1u64 << participants)).map(Subset).collect();
    v.sort();
    Ok(v)
}

/// All nonempty subsets that are not in the upward closure of `qualified`.
pub fn complement_forbidden(qualified: &[Subset], participants: usize) -> Result<Vec<Subset>> {
    check_participants(participants)?;
    check_enumerable(participants)?;
    Ok(all_nonempty_subsets(participants)?
        .into_iter()
        .filter(|s| !qualified.iter().any(|q| q.is_subset_of(*s)))
        .collect())
}

fn check_participants(participants: usize) -> Result<()> {
    if participants == 0 || participants > MAX_PARTICIPANTS {
        return Err(Error::InvalidParameter(format!(
            "participant count {participants} outside 1..={MAX_PARTICIPANTS}"
        )));
    }
    Ok(())
}

/// Participants plus generating families of qualified and forbidden sets.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AccessStructure {
    participants: usize,
    qualified: Vec<Subset>,
    forbidden: Vec<Subset>,
}

/// Outcome of [`AccessStructure::validate`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ValidationReport {
    pub participants: usize,
    pub qualified_given: usize,
    pub forbidden_given: usize,
    pub minimal_qualified: usize,
    pub maximal_forbidden: usize,
    /// Whether the qualified family was already upward closed as supplied.
    /// `None` when `K` is too large to enumerate.
    pub qualified_upward_closed: Option<bool>,
    /// Size of the upward closure of the qualified family.
    pub qualified_closure_size: Option<u64>,
    pub forbidden_downward_closed: Option<bool>,
    pub anomalies: Vec<String>,
}

impl AccessStructure {
    /// Checks ranges only; call [`validate`](Self::validate) for consistency.
    pub fn new(participants: usize, qualified: Vec<Subset>, forbidden: Vec<Subset>) -> Result<Self> {
        check_participants(participants)?;
        let universe = Subset::full(participants);
        for (name, family) in [("qualified", &qualified), ("forbidden", &forbidden)] {
            for s in family {
                if s.is_empty() {
                    return Err(Error::InvalidStructure(format!("empty set in {name} family")));
                }
                if !s.is_subset_of(universe) {
                    return Err(Error::InvalidStructure(format!(
                        "{name} set {s} mentions a participant beyond K = {participants}"
                    )));
                }
            }
        }
        Ok(Self { participants, qualified, forbidden })
    }

    /// Forbidden family taken as everything not qualified.
    pub fn with_complement(participants: usize, qualified: Vec<Subset>) -> Result<Self> {
        let forbidden = complement_forbidden(&qualified, participants)?;
        Self::new(participants, qualified, forbidden)
    }

    /// `(k, K)` threshold structure: any `k` recover, any `k-1` learn nothing.
    pub fn threshold(k: usize, participants: usize) -> Result<Self> {
        if k < 1 || k > participants {
            return Err(Error::InvalidParameter(format!(
                "threshold requires 1 <= k <= K, got k = {k}, K = {participants}"
            )));
        }
        let all = all_nonempty_subsets(participants)?;
        let qualified = all.iter().copied().filter(|s| s.len() >= k).collect();
        let forbidden = all.into_iter().filter(|s| s.len() < k).collect();
        Self::new(participants, qualified, forbidden)
    }

    pub fn participants(&self) -> usize {
        self.participants
    }

    pub fn qualified(&self) -> &[Subset] {
        &self.qualified
    }

    pub fn forbidden(&self) -> &[Subset] {
        &self.forbidden
    }

    /// Membership in the upward closure of the qualified family.
    pub fn is_qualified(&self, s: Subset) -> bool {
        self.qualified.iter().any(|q| q.is_subset_of(s))
    }

    /// Membership in the downward closure of the forbidden family.
    pub fn is_forbidden(&self, s: Subset) -> bool {
        !s.is_empty() && self.forbidden.iter().any(|f| s.is_subset_of(*f))
    }

    /// The closures intersect iff some qualified generator sits inside some
    /// forbidden generator, so no enumeration is needed for the conflict test.
    pub fn validate(&self) -> Result<ValidationReport> {
        let mut conflicts: Vec<(Subset, Subset)> = Vec::new();
        for &q in &self.qualified {
            for &f in &self.forbidden {
                if q.is_subset_of(f) {
                    conflicts.push((q, f));
                }
            }
        }
        if let Some(&(qualified, forbidden)) = conflicts.iter().min() {
            return Err(Error::Overlap { qualified, forbidden });
        }

        let mut anomalies = Vec::new();
        if self.qualified.is_empty() {
            anomalies.push("qualified family is empty: no group can recover the secret".into());
        }
        if self.forbidden.is_empty() {
            anomalies.push("forbidden family is empty: no secrecy constraint".into());
        }
        let mut q = self.qualified.clone();
        q.sort();
        if q.windows(2).any(|w| w[0] == w[1]) {
            anomalies.push("qualified family lists duplicate sets".into());
        }

        let (qualified_upward_closed, qualified_closure_size, forbidden_downward_closed) =
            if self.participants <= MAX_ENUMERATION_PARTICIPANTS {
                let all = all_nonempty_subsets(self.participants)?;
                let closure = all.iter().filter(|s| self.is_qualified(**s)).count() as u64;
                let up_closed = all
                    .iter()
                    .filter(|s| self.is_qualified(**s))
                    .all(|s| self.qualified.contains(s));
                let down_closed = all
                    .iter()
                    .filter(|s| self.is_forbidden(**s))
                    .all(|s| self.forbidden.contains(s));
                (Some(up_closed), Some(closure), Some(down_closed))
            } else {
                (None, None, None)
            };

        Ok(ValidationReport {
            participants: self.participants,
            qualified_given: self.qualified.len(),
            forbidden_given: self.forbidden.len(),
            minimal_qualified: self.minimal_qualified().len(),
            maximal_forbidden: self.maximal_forbidden().len(),
            qualified_upward_closed,
            qualified_closure_size,
            forbidden_downward_closed,
            anomalies,
        })
    }

    /// Minimal members of the upward closure of the qualified family; they
    /// coincide with the minimal generators.
    pub fn minimal_qualified(&self) -> Vec<Subset> {
        minimal_elements(&self.qualified)
    }

    /// Maximal members of the downward closure of the forbidden family.
    pub fn maximal_forbidden(&self) -> Vec<Subset> {
        maximal_elements(&self.forbidden)
    }
}
