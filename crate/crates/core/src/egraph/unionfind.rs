use std::cell::Cell;

use super::Id;

/// Union-find with path halving. `find` takes `&self`; compression goes
/// through `Cell` so lookups during matching can still shorten paths.
#[derive(Debug, Clone, Default)]
pub(crate) struct UnionFind {
    parents: Vec<Cell<u32>>,
}

impl UnionFind {
    pub fn make_set(&mut self) -> Id {
        let id = Id::from(self.parents.len());
        self.parents.push(Cell::new(id.0));
        id
    }

    pub fn find(&self, id: Id) -> Id {
        let mut x = id.0;
        loop {
            let p = self.parents[x as usize].get();
            if p == x {
                return Id(x);
            }
            let gp = self.parents[p as usize].get();
            self.parents[x as usize].set(gp);
            x = gp;
        }
    }

    /// Makes `root` the representative of `other`. Both must be roots.
    pub fn union(&mut self, root: Id, other: Id) {
        debug_assert_eq!(self.find(root), root);
        debug_assert_eq!(self.find(other), other);
        self.parents[other.index()].set(root.0);
    }
}
