//! Disjoint-set forests over lazily activated integer elements.

const NONE: u32 = u32::MAX;

/// Union-find with path halving. Elements are inactive until [`activate`]d,
/// which lets a single dense table cover every grid edge while only the
/// handful that carry a sign change take part.
///
/// [`activate`]: DisjointSet::activate
#[derive(Debug, Clone)]
pub struct DisjointSet {
    parent: Vec<u32>,
    active: Vec<u32>,
}

impl DisjointSet {
    pub fn new(capacity: usize) -> Self {
        assert!(capacity < NONE as usize, "too many elements for u32 labels");
        DisjointSet {
            parent: vec![NONE; capacity],
            active: Vec::new(),
        }
    }

    #[inline]
    pub fn activate(&mut self, x: usize) {
        if self.parent[x] == NONE {
            self.parent[x] = x as u32;
            self.active.push(x as u32);
        }
    }

    #[inline]
    pub fn is_active(&self, x: usize) -> bool {
        self.parent[x] != NONE
    }

    #[inline]
    pub fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] as usize != x {
            let grand = self.parent[self.parent[x] as usize];
            self.parent[x] = grand;
            x = grand as usize;
        }
        x
    }

    /// Activates both elements and merges their sets.
    #[inline]
    pub fn union(&mut self, a: usize, b: usize) {
        self.activate(a);
        self.activate(b);
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            // Deterministic: the smaller index becomes the root.
            let (lo, hi) = if ra < rb { (ra, rb) } else { (rb, ra) };
            self.parent[hi] = lo as u32;
        }
    }

    /// Appends a new active singleton and returns its label.
    pub fn push(&mut self) -> usize {
        let id = self.parent.len();
        assert!(id < NONE as usize, "too many elements for u32 labels");
        self.parent.push(id as u32);
        self.active.push(id as u32);
        id
    }

    /// Appends a new inactive element and returns its label.
    pub fn grow(&mut self) -> usize {
        let id = self.parent.len();
        assert!(id < NONE as usize, "too many elements for u32 labels");
        self.parent.push(NONE);
        id
    }

    /// Active elements in activation order.
    pub fn active(&self) -> &[u32] {
        &self.active
    }

    /// Roots of all active sets.
    pub fn roots(&self) -> impl Iterator<Item = usize> + '_ {
        self.active
            .iter()
            .map(|&x| x as usize)
            .filter(|&x| self.parent[x] as usize == x)
    }
}

/// Union-find that also tracks, for each element, its lift to the universal
/// cover of the torus: `offset(x)` is the period shift from `x` to its root.
/// Merging two elements already in one set with an inconsistent shift means
/// the set contains a non-contractible loop.
#[derive(Debug, Clone)]
pub struct PeriodicDisjointSet {
    parent: Vec<u32>,
    offset: Vec<[i32; 2]>,
    wraps: Vec<bool>,
    active: Vec<u32>,
}

impl PeriodicDisjointSet {
    pub fn new(capacity: usize) -> Self {
        assert!(capacity < NONE as usize, "too many elements for u32 labels");
        PeriodicDisjointSet {
            parent: vec![NONE; capacity],
            offset: vec![[0, 0]; capacity],
            wraps: vec![false; capacity],
            active: Vec::new(),
        }
    }

    fn activate(&mut self, x: usize) {
        if self.parent[x] == NONE {
            self.parent[x] = x as u32;
            self.active.push(x as u32);
        }
    }

    /// Root of `x` and the period shift from `x` to it.
    pub fn find(&mut self, x: usize) -> (usize, [i32; 2]) {
        let mut path = Vec::new();
        let mut cur = x;
        while self.parent[cur] as usize != cur {
            path.push(cur);
            cur = self.parent[cur] as usize;
        }
        let root = cur;
        // Walk back from the node nearest the root, accumulating shifts.
        let mut acc = [0, 0];
        for &node in path.iter().rev() {
            let o = self.offset[node];
            acc = [acc[0] + o[0], acc[1] + o[1]];
            self.offset[node] = acc;
            self.parent[node] = root as u32;
        }
        (root, if path.is_empty() { [0, 0] } else { self.offset[x] })
    }

    /// Records that the lift of `b` sits `shift` periods from the lift of `a`.
    pub fn union(&mut self, a: usize, b: usize, shift: [i32; 2]) {
        self.activate(a);
        self.activate(b);
        let (ra, oa) = self.find(a);
        let (rb, ob) = self.find(b);
        if ra == rb {
            // lift(b) - lift(a) must equal shift for a contractible set.
            if [oa[0] - ob[0], oa[1] - ob[1]] != shift {
                self.wraps[ra] = true;
            }
            return;
        }
        // pos(x) = pos(root) - offset(x) in period units:
        // pos(rb) - pos(ra) = shift - oa + ob.
        let d = [shift[0] - oa[0] + ob[0], shift[1] - oa[1] + ob[1]];
        let wraps = self.wraps[ra] || self.wraps[rb];
        if ra < rb {
            self.parent[rb] = ra as u32;
            // offset(rb) = pos(ra) - pos(rb)
            self.offset[rb] = [-d[0], -d[1]];
            self.wraps[ra] = wraps;
        } else {
            self.parent[ra] = rb as u32;
            self.offset[ra] = d;
            self.wraps[rb] = wraps;
        }
    }

    pub fn push(&mut self) -> usize {
        let id = self.parent.len();
        assert!(id < NONE as usize, "too many elements for u32 labels");
        self.parent.push(id as u32);
        self.offset.push([0, 0]);
        self.wraps.push(false);
        self.active.push(id as u32);
        id
    }

    pub fn roots(&self) -> impl Iterator<Item = usize> + '_ {
        self.active
            .iter()
            .map(|&x| x as usize)
            .filter(|&x| self.parent[x] as usize == x)
    }

    pub fn wraps(&self, root: usize) -> bool {
        self.wraps[root]
    }
}
