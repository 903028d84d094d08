use crate::error::{EmosError, Result};
use serde::{Deserialize, Serialize};
use std::fmt;

/// Partition of the `M` ensemble members into `m` exchangeable groups.
///
/// Members within a group share one location coefficient matrix. Group `k`
/// owns `group_sizes[k]` members; `member_to_group[j]` names the group of
/// member `j`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GroupSpec {
    group_sizes: Vec<usize>,
    member_to_group: Vec<usize>,
}

impl GroupSpec {
    /// Contiguous layout: the first `sizes[0]` members form group 0, and so on.
    pub fn from_sizes(sizes: &[usize]) -> Result<Self> {
        if sizes.is_empty() || sizes.contains(&0) {
            return Err(EmosError::Config(format!(
                "group sizes must be a nonempty list of positive counts, got {sizes:?}"
            )));
        }
        let member_to_group = sizes
            .iter()
            .enumerate()
            .flat_map(|(k, &s)| std::iter::repeat_n(k, s))
            .collect();
        Ok(Self { group_sizes: sizes.to_vec(), member_to_group })
    }

    /// Arbitrary assignment of members to groups `0..m`.
    pub fn from_assignment(member_to_group: Vec<usize>) -> Result<Self> {
        let m = member_to_group.iter().max().map_or(0, |g| g + 1);
        let mut sizes = vec![0; m];
        for &g in &member_to_group {
            sizes[g] += 1;
        }
        if m == 0 || sizes.contains(&0) {
            return Err(EmosError::Config("every group needs at least one member".into()));
        }
        Ok(Self { group_sizes: sizes, member_to_group })
    }

    /// Fully distinguishable ensemble: each member its own group.
    pub fn singletons(members: usize) -> Result<Self> {
        Self::from_sizes(&vec![1; members])
    }

    /// Parse a comma list of group sizes. Each item is either a size `s` or
    /// `sxn`, meaning `n` consecutive groups of size `s`: `1,10` is a control
    /// member plus ten exchangeable members, `1x8` is eight singletons.
    pub fn parse(spec: &str) -> Result<Self> {
        let bad = || EmosError::Config(format!("malformed group spec '{spec}'"));
        let mut sizes = Vec::new();
        for item in spec.split(',').map(str::trim).filter(|s| !s.is_empty()) {
            match item.split_once(['x', 'X']) {
                Some((size, count)) => {
                    let size: usize = size.trim().parse().map_err(|_| bad())?;
                    let count: usize = count.trim().parse().map_err(|_| bad())?;
                    if count == 0 {
                        return Err(bad());
                    }
                    sizes.extend(std::iter::repeat_n(size, count));
                }
                None => sizes.push(item.parse().map_err(|_| bad())?),
            }
        }
        Self::from_sizes(&sizes)
    }

    pub fn n_members(&self) -> usize {
        self.member_to_group.len()
    }

    pub fn n_groups(&self) -> usize {
        self.group_sizes.len()
    }

    pub fn group_sizes(&self) -> &[usize] {
        &self.group_sizes
    }

    pub fn group_of(&self, member: usize) -> usize {
        self.member_to_group[member]
    }

    pub fn member_to_group(&self) -> &[usize] {
        &self.member_to_group
    }
}

impl fmt::Display for GroupSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.group_sizes.iter().map(|s| s.to_string()).collect();
        f.write_str(&parts.join(","))
    }
}
