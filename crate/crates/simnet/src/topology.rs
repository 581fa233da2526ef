//! Complete f-ary tree shapes with the base station at node 0.
//!
//! Nodes fill level by level in heap order: node `i`'s structural parent
//! is `(i − 1) / fanout`. The base station accepts a single packet per
//! epoch, so when the heap gives node 0 several children, the extra ones
//! (ids `2..=fanout`) route their aggregates through node 1, which
//! performs the final merge before the root link. Shape metrics (`depth`)
//! describe the heap; roles and traffic follow the routing.

use secagg_core::protocol::Role;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum TopologyError {
    #[error("a tree needs at least 2 nodes, got {0}")]
    TooFewNodes(u32),
    #[error("fanout must be at least 1")]
    ZeroFanout,
    #[error("node ids are 16-bit: at most 65536 nodes, got {0}")]
    TooManyNodes(u32),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Topology {
    nodes: u32,
    fanout: u32,
    depth: u32,
    route_parent: Vec<Option<u16>>,
    route_children: Vec<Vec<u16>>,
}

impl Topology {
    /// Builds the complete f-ary tree. The shape is fully determined by
    /// `nodes` and `fanout`; `seed` is accepted for interface stability
    /// and unused.
    pub fn build(nodes: u32, fanout: u32, _seed: u64) -> Result<Self, TopologyError> {
        if nodes < 2 {
            return Err(TopologyError::TooFewNodes(nodes));
        }
        if fanout == 0 {
            return Err(TopologyError::ZeroFanout);
        }
        if nodes > u16::MAX as u32 + 1 {
            return Err(TopologyError::TooManyNodes(nodes));
        }
        let mut route_parent: Vec<Option<u16>> = vec![None; nodes as usize];
        let mut route_children: Vec<Vec<u16>> = vec![Vec::new(); nodes as usize];
        let mut depth = 0u32;
        for i in 1..nodes {
            let heap_parent = (i - 1) / fanout;
            // siblings of node 1 merge through node 1 instead of hitting
            // the base directly
            let parent = if heap_parent == 0 && i != 1 { 1 } else { heap_parent };
            route_parent[i as usize] = Some(parent as u16);
            route_children[parent as usize].push(i as u16);

            // heap depth of node i
            let mut level = 0;
            let mut at = i;
            while at != 0 {
                at = (at - 1) / fanout;
                level += 1;
            }
            depth = depth.max(level);
        }
        Ok(Topology {
            nodes,
            fanout,
            depth,
            route_parent,
            route_children,
        })
    }

    pub fn node_count(&self) -> u32 {
        self.nodes
    }

    pub fn fanout(&self) -> u32 {
        self.fanout
    }

    /// Heap depth of the deepest node.
    pub fn depth(&self) -> u32 {
        self.depth
    }

    pub fn parent(&self, id: u16) -> Option<u16> {
        self.route_parent[id as usize]
    }

    pub fn children(&self, id: u16) -> &[u16] {
        &self.route_children[id as usize]
    }

    pub fn role(&self, id: u16) -> Role {
        if id == 0 {
            Role::Base
        } else if self.route_children[id as usize].is_empty() {
            Role::Leaf
        } else {
            Role::Aggregator
        }
    }

    pub fn leaf_count(&self) -> u32 {
        (1..self.nodes)
            .filter(|&i| self.route_children[i as usize].is_empty())
            .count() as u32
    }

    /// Node ids ordered for upward processing: deepest routing level
    /// first, ascending id within a level. The base is excluded.
    pub fn upward_order(&self) -> Vec<u16> {
        let mut level = vec![0u32; self.nodes as usize];
        // route_parent always points to a lower id, so one forward pass
        // suffices
        for i in 1..self.nodes as usize {
            let p = self.route_parent[i].expect("non-base has a parent") as usize;
            level[i] = level[p] + 1;
        }
        let mut ids: Vec<u16> = (1..self.nodes as u16).collect();
        ids.sort_by_key(|&i| (std::cmp::Reverse(level[i as usize]), i));
        ids
    }

    /// Every non-base node reaches the base without cycles.
    pub fn check_acyclic(&self) -> bool {
        for mut at in 1..self.nodes as usize {
            let mut hops = 0;
            while let Some(p) = self.route_parent[at] {
                at = p as usize;
                hops += 1;
                if hops > self.nodes {
                    return false;
                }
            }
            if at != 0 {
                return false;
            }
        }
        true
    }
}
