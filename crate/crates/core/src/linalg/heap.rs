use crate::error::{Error, Result};

/// Binary max-heap over a fixed set of coordinates `0..n` with arbitrary key
/// updates.
///
/// `order[node]` is the coordinate stored at heap node `node` and
/// `position[coord]` is its inverse. Among equal keys the smallest coordinate
/// sits closer to the root, so [`peek`](Self::peek) always returns the smallest
/// index attaining the maximum.
#[derive(Debug, Clone)]
pub struct IndexedMaxHeap {
    keys: Vec<f64>,
    order: Vec<usize>,
    position: Vec<usize>,
}

impl IndexedMaxHeap {
    /// Bottom-up O(n) construction.
    pub fn build(keys: Vec<f64>) -> Result<Self> {
        if keys.is_empty() {
            return Err(Error::EmptyHeap);
        }
        if let Some(i) = keys.iter().position(|k| !k.is_finite()) {
            return Err(Error::NonFinite(format!("heap key {i} is {}", keys[i])));
        }
        let n = keys.len();
        let mut heap = Self {
            keys,
            order: (0..n).collect(),
            position: (0..n).collect(),
        };
        for node in (0..n / 2).rev() {
            heap.sift_down(node);
        }
        Ok(heap)
    }

    pub fn len(&self) -> usize {
        self.keys.len()
    }

    pub fn is_empty(&self) -> bool {
        self.keys.is_empty()
    }

    /// Index and key of the maximum.
    pub fn peek(&self) -> (usize, f64) {
        let top = self.order[0];
        (top, self.keys[top])
    }

    pub fn key(&self, i: usize) -> f64 {
        self.keys[i]
    }

    pub fn keys(&self) -> &[f64] {
        &self.keys
    }

    /// Replaces the key of coordinate `i` and restores heap order in O(log n).
    /// Returns the number of swaps performed.
    pub fn update_key(&mut self, i: usize, new_key: f64) -> Result<usize> {
        if i >= self.keys.len() {
            return Err(Error::IndexOutOfRange {
                index: i,
                len: self.keys.len(),
            });
        }
        if !new_key.is_finite() {
            return Err(Error::NonFinite(format!("heap key for {i} is {new_key}")));
        }
        let old = self.keys[i];
        self.keys[i] = new_key;
        let node = self.position[i];
        let swaps = if new_key > old {
            self.sift_up(node)
        } else if new_key < old {
            self.sift_down(node)
        } else {
            0
        };
        Ok(swaps)
    }

    #[inline]
    fn beats(&self, a: usize, b: usize) -> bool {
        let (ka, kb) = (self.keys[a], self.keys[b]);
        ka > kb || (ka == kb && a < b)
    }

    fn swap_nodes(&mut self, p: usize, q: usize) {
        self.order.swap(p, q);
        self.position[self.order[p]] = p;
        self.position[self.order[q]] = q;
    }

    fn sift_up(&mut self, mut node: usize) -> usize {
        let mut swaps = 0;
        while node > 0 {
            let parent = (node - 1) / 2;
            if self.beats(self.order[node], self.order[parent]) {
                self.swap_nodes(node, parent);
                node = parent;
                swaps += 1;
            } else {
                break;
            }
        }
        swaps
    }

    fn sift_down(&mut self, mut node: usize) -> usize {
        let n = self.order.len();
        let mut swaps = 0;
        loop {
            let left = 2 * node + 1;
            if left >= n {
                break;
            }
            let right = left + 1;
            let mut best = left;
            if right < n && self.beats(self.order[right], self.order[left]) {
                best = right;
            }
            if self.beats(self.order[best], self.order[node]) {
                self.swap_nodes(node, best);
                node = best;
                swaps += 1;
            } else {
                break;
            }
        }
        swaps
    }

    /// Checks the heap property and that `position` inverts `order`.
    pub fn is_consistent(&self) -> bool {
        let n = self.order.len();
        for node in 0..n {
            if self.position[self.order[node]] != node {
                return false;
            }
            for child in [2 * node + 1, 2 * node + 2] {
                if child < n && self.beats(self.order[child], self.order[node]) {
                    return false;
                }
            }
        }
        true
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn scan_argmax(keys: &[f64]) -> usize {
        let mut best = 0;
        for (i, &k) in keys.iter().enumerate() {
            if k > keys[best] {
                best = i;
            }
        }
        best
    }

    #[test]
    fn build_peeks_argmax() {
        assert_eq!(IndexedMaxHeap::build(vec![3.0, 1.0, 2.0]).unwrap().peek().0, 0);
    }

    #[test]
    fn ties_go_to_smallest_index() {
        assert_eq!(IndexedMaxHeap::build(vec![5.0, 5.0, 1.0]).unwrap().peek().0, 0);
        assert_eq!(IndexedMaxHeap::build(vec![1.0, 5.0, 5.0, 5.0]).unwrap().peek().0, 1);
        let mut h = IndexedMaxHeap::build(vec![0.0; 7]).unwrap();
        assert_eq!(h.peek().0, 0);
        h.update_key(0, -1.0).unwrap();
        assert_eq!(h.peek().0, 1);
    }

    #[test]
    fn empty_is_an_error() {
        assert!(matches!(IndexedMaxHeap::build(vec![]), Err(Error::EmptyHeap)));
    }

    #[test]
    fn update_examples() {
        let mut h = IndexedMaxHeap::build(vec![3.0, 1.0, 2.0]).unwrap();
        h.update_key(1, 5.0).unwrap();
        assert_eq!(h.peek().0, 1);

        let mut h = IndexedMaxHeap::build(vec![3.0, 1.0, 2.0]).unwrap();
        h.update_key(0, 0.0).unwrap();
        assert_eq!(h.peek().0, 2);
    }

    #[test]
    fn update_errors() {
        let mut h = IndexedMaxHeap::build(vec![1.0, 2.0]).unwrap();
        assert!(h.update_key(2, 1.0).is_err());
        assert!(h.update_key(0, f64::NAN).is_err());
        assert_eq!(h.peek().0, 1);
    }

    #[test]
    fn random_build_matches_scan() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let keys: Vec<f64> = (0..1000).map(|_| rng.random::<f64>()).collect();
        let h = IndexedMaxHeap::build(keys.clone()).unwrap();
        assert!(h.is_consistent());
        assert_eq!(h.peek().0, scan_argmax(&keys));
    }

    #[test]
    fn interleaved_updates_match_scan() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let n = 64;
        // coarse keys so ties are frequent
        let mut keys: Vec<f64> = (0..n).map(|_| rng.random_range(0..8) as f64).collect();
        let mut h = IndexedMaxHeap::build(keys.clone()).unwrap();
        for _ in 0..10_000 {
            let i = rng.random_range(0..n);
            let k = rng.random_range(0..8) as f64;
            keys[i] = k;
            h.update_key(i, k).unwrap();
            assert_eq!(h.peek().0, scan_argmax(&keys));
        }
        assert!(h.is_consistent());
    }
}
