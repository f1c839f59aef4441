//! Indexed binary min-heap with decrease-key.
//!
//! Keys are `(u, node)`: ties are broken by the smaller node index so that
//! extraction order, and hence the whole sweep, is bit-reproducible.

/// Binary min-heap over `(node, key)` pairs with a reverse index table.
#[derive(Debug, Clone)]
pub struct IndexedMinHeap {
    /// Heap slots, each holding a node index.
    heap: Vec<usize>,
    /// `slot[node]` = position of `node` in `heap`, or `NONE`.
    slot: Vec<usize>,
    /// `key[node]` = current key of `node` (valid only while present).
    key: Vec<f64>,
}

const NONE: usize = usize::MAX;

impl IndexedMinHeap {
    pub fn new(n_nodes: usize) -> Self {
        Self {
            heap: Vec::new(),
            slot: vec![NONE; n_nodes],
            key: vec![f64::INFINITY; n_nodes],
        }
    }

    pub fn len(&self) -> usize {
        self.heap.len()
    }

    pub fn is_empty(&self) -> bool {
        self.heap.is_empty()
    }

    pub fn contains(&self, node: usize) -> bool {
        self.slot[node] != NONE
    }

    pub fn key_of(&self, node: usize) -> Option<f64> {
        self.contains(node).then(|| self.key[node])
    }

    /// `true` iff `(ka, a)` orders strictly before `(kb, b)`.
    #[inline]
    fn before(ka: f64, a: usize, kb: f64, b: usize) -> bool {
        ka < kb || (ka == kb && a < b)
    }

    /// Insert a node that is not currently present.
    ///
    /// # Panics
    /// Panics if `node` is already in the heap.
    pub fn insert(&mut self, node: usize, key: f64) {
        assert!(!self.contains(node), "insert: node {node} already present");
        self.key[node] = key;
        self.heap.push(node);
        self.slot[node] = self.heap.len() - 1;
        self.sift_up(self.heap.len() - 1);
    }

    /// Lower the key of a present node.
    ///
    /// # Panics
    /// Panics if `node` is absent or the new key is larger than the current one.
    pub fn decrease_key(&mut self, node: usize, key: f64) {
        assert!(self.contains(node), "decrease_key: node {node} absent");
        assert!(
            key <= self.key[node],
            "decrease_key: new key {key} > current {}",
            self.key[node]
        );
        self.key[node] = key;
        self.sift_up(self.slot[node]);
    }

    /// Remove and return the node with the minimal `(key, node)` pair.
    pub fn extract_min(&mut self) -> Option<(usize, f64)> {
        if self.heap.is_empty() {
            return None;
        }
        let top = self.heap[0];
        let key = self.key[top];
        let last = self.heap.pop().unwrap();
        self.slot[top] = NONE;
        if !self.heap.is_empty() {
            self.heap[0] = last;
            self.slot[last] = 0;
            self.sift_down(0);
        }
        Some((top, key))
    }

    fn sift_up(&mut self, mut i: usize) {
        while i > 0 {
            let parent = (i - 1) / 2;
            let (n, p) = (self.heap[i], self.heap[parent]);
            if Self::before(self.key[n], n, self.key[p], p) {
                self.heap.swap(i, parent);
                self.slot[n] = parent;
                self.slot[p] = i;
                i = parent;
            } else {
                break;
            }
        }
    }

    fn sift_down(&mut self, mut i: usize) {
        loop {
            let (l, r) = (2 * i + 1, 2 * i + 2);
            let mut best = i;
            for c in [l, r] {
                if c < self.heap.len() {
                    let (cn, bn) = (self.heap[c], self.heap[best]);
                    if Self::before(self.key[cn], cn, self.key[bn], bn) {
                        best = c;
                    }
                }
            }
            if best == i {
                break;
            }
            let (a, b) = (self.heap[i], self.heap[best]);
            self.heap.swap(i, best);
            self.slot[a] = best;
            self.slot[b] = i;
            i = best;
        }
    }

    /// Check the heap order and reverse-table invariants. Test support.
    #[cfg(test)]
    fn check_invariants(&self) {
        for i in 1..self.heap.len() {
            let parent = (i - 1) / 2;
            let (n, p) = (self.heap[i], self.heap[parent]);
            assert!(!Self::before(self.key[n], n, self.key[p], p), "heap order violated");
        }
        for (pos, &node) in self.heap.iter().enumerate() {
            assert_eq!(self.slot[node], pos, "reverse table out of sync");
        }
    }
}
