//! Protocol dimensions, user grouping, and the aggregation tree over groups.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Validated protocol dimensions. Every derived size (group size, group
/// count, segment length) comes from here.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProtocolParams {
    /// N
    pub users: usize,
    /// T, the collusion bound
    pub max_colluders: usize,
    /// D, the dropout bound
    pub max_dropouts: usize,
    /// K, number of model segments
    pub partitions: usize,
    /// L
    pub model_len: usize,
    /// Model entries are integers in `[0, ell)`.
    pub ell: u64,
}

impl ProtocolParams {
    pub fn new(n: usize, t: usize, d: usize, k: usize, l: usize, ell: u64) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidParams("N must be at least 1".into()));
        }
        if l == 0 {
            return Err(Error::InvalidParams("L must be at least 1".into()));
        }
        if ell < 2 {
            return Err(Error::InvalidParams("ell must be at least 2".into()));
        }
        if d >= n || t >= n - d {
            return Err(Error::ThresholdViolation {
                t,
                bound: n.saturating_sub(d),
            });
        }
        let max_k = n - t - d;
        if k == 0 || k > max_k {
            return Err(Error::BadK { k, max: max_k });
        }
        let group_size = k + t + d;
        if !n.is_multiple_of(group_size) {
            return Err(Error::IndivisibleGroups {
                users: n,
                group_size,
            });
        }
        Ok(ProtocolParams {
            users: n,
            max_colluders: t,
            max_dropouts: d,
            partitions: k,
            model_len: l,
            ell,
        })
    }

    /// nu = K + T + D
    pub fn group_size(&self) -> usize {
        self.partitions + self.max_colluders + self.max_dropouts
    }

    /// Gamma = N / nu
    pub fn group_count(&self) -> usize {
        self.users / self.group_size()
    }

    /// Number of evaluations the server needs: K + T.
    pub fn recovery_threshold(&self) -> usize {
        self.partitions + self.max_colluders
    }

    /// ceil(L / K)
    pub fn segment_len(&self) -> usize {
        self.model_len.div_ceil(self.partitions)
    }

    pub fn user(&self, index: usize) -> UserId {
        UserId::new(index, self.group_size())
    }
}

/// A user's global index with its (group, position) label.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct UserId {
    pub index: usize,
    pub group: usize,
    pub position: usize,
}

impl UserId {
    pub fn new(index: usize, group_size: usize) -> Self {
        UserId {
            index,
            group: index / group_size,
            position: index % group_size,
        }
    }
}

/// Group `g` holds users `g*nu .. g*nu + nu` in position order.
pub fn assign_groups(params: &ProtocolParams) -> Vec<Vec<usize>> {
    let nu = params.group_size();
    (0..params.group_count())
        .map(|g| (g * nu..(g + 1) * nu).collect())
        .collect()
}

/// |E| = N (K+T+D+1) / 2
pub fn count_edges(params: &ProtocolParams) -> usize {
    params.users * (params.group_size() + 1) / 2
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TreeShape {
    Chain,
    Star,
    /// `parents[g]` is the parent group of `g`, `None` meaning the server.
    Parents(Vec<Option<usize>>),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Parent {
    Server,
    Group(usize),
}

/// Rooted tree over groups. The server is the root and its only child is the
/// last group.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AggregationTree {
    parent: Vec<Parent>,
    children: Vec<Vec<usize>>,
}

impl AggregationTree {
    pub fn build(groups: usize, shape: &TreeShape) -> Result<Self> {
        if groups == 0 {
            return Err(Error::NotATree("no groups".into()));
        }
        let last = groups - 1;
        let parents: Vec<Option<usize>> = match shape {
            TreeShape::Chain => (0..groups).map(|g| (g != last).then_some(g + 1)).collect(),
            TreeShape::Star => (0..groups).map(|g| (g != last).then_some(last)).collect(),
            TreeShape::Parents(p) => p.clone(),
        };
        if parents.len() != groups {
            return Err(Error::NotATree(format!(
                "parent map has {} entries for {groups} groups",
                parents.len()
            )));
        }
        let server_children: Vec<usize> = (0..groups).filter(|&g| parents[g].is_none()).collect();
        if server_children != [last] {
            return Err(Error::BadRoot {
                expected: last,
                found: server_children,
            });
        }
        for (g, p) in parents.iter().enumerate() {
            match *p {
                Some(q) if q >= groups => {
                    return Err(Error::NotATree(format!("group {g} has unknown parent {q}")))
                }
                Some(q) if q == g => {
                    return Err(Error::NotATree(format!("group {g} is its own parent")))
                }
                _ => {}
            }
        }
        // every group must reach the server within `groups` hops
        for start in 0..groups {
            let mut cur = start;
            let mut hops = 0;
            while let Some(q) = parents[cur] {
                cur = q;
                hops += 1;
                if hops > groups {
                    return Err(Error::NotATree(format!("cycle through group {start}")));
                }
            }
        }
        let mut children = vec![Vec::new(); groups];
        for (g, p) in parents.iter().enumerate() {
            if let Some(q) = p {
                children[*q].push(g);
            }
        }
        Ok(AggregationTree {
            parent: parents
                .into_iter()
                .map(|p| p.map_or(Parent::Server, Parent::Group))
                .collect(),
            children,
        })
    }

    pub fn group_count(&self) -> usize {
        self.parent.len()
    }

    pub fn last_group(&self) -> usize {
        self.parent.len() - 1
    }

    fn check(&self, g: usize) -> Result<()> {
        if g < self.parent.len() {
            Ok(())
        } else {
            Err(Error::UnknownGroup(g))
        }
    }

    pub fn parent(&self, g: usize) -> Result<Parent> {
        self.check(g)?;
        Ok(self.parent[g])
    }

    pub fn children(&self, g: usize) -> Result<&[usize]> {
        self.check(g)?;
        Ok(&self.children[g])
    }

    /// All groups below `g`, excluding `g`, sorted.
    pub fn descendants(&self, g: usize) -> Result<Vec<usize>> {
        self.check(g)?;
        let mut out = Vec::new();
        let mut stack = self.children[g].clone();
        while let Some(c) = stack.pop() {
            out.push(c);
            stack.extend(&self.children[c]);
        }
        out.sort_unstable();
        Ok(out)
    }

    /// Groups on the path from `g` to the server, excluding `g` and the
    /// server, sorted.
    pub fn ancestors(&self, g: usize) -> Result<Vec<usize>> {
        self.check(g)?;
        let mut out = Vec::new();
        let mut cur = self.parent[g];
        while let Parent::Group(q) = cur {
            out.push(q);
            cur = self.parent[q];
        }
        out.sort_unstable();
        Ok(out)
    }

    /// Inter-group hops from `g` up to the last group.
    pub fn depth(&self, g: usize) -> Result<usize> {
        self.check(g)?;
        let mut cur = self.parent[g];
        let mut d = 0;
        while let Parent::Group(q) = cur {
            d += 1;
            cur = self.parent[q];
        }
        Ok(d)
    }

    /// Groups ordered so every child precedes its parent.
    pub fn post_order(&self) -> Vec<usize> {
        let mut out = Vec::with_capacity(self.parent.len());
        let mut stack = vec![(self.last_group(), false)];
        while let Some((g, expanded)) = stack.pop() {
            if expanded {
                out.push(g);
            } else {
                stack.push((g, true));
                stack.extend(self.children[g].iter().rev().map(|&c| (c, false)));
            }
        }
        out
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DelayModel {
    pub delta_inter: f64,
    pub delta_intra: f64,
}

impl Default for DelayModel {
    fn default() -> Self {
        DelayModel {
            delta_inter: 1.0,
            delta_intra: 1.0,
        }
    }
}

/// Synchronous round delay: one intra-group round, then one inter-group hop
/// per level from the deepest group up to and including the server link.
pub fn total_delay(tree: &AggregationTree, delays: &DelayModel) -> f64 {
    let deepest = (0..tree.group_count())
        .map(|g| tree.depth(g).unwrap_or(0))
        .max()
        .unwrap_or(0);
    (deepest + 1) as f64 * delays.delta_inter + delays.delta_intra
}
