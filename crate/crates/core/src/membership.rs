//! Overlapping group membership stored as one bitmask row per node.
//!
//! Bit `r` of node `u`'s row is set iff `u` belongs to group `r`. Bit 0 is
//! always set. The highest common group of two nodes is the highest set bit
//! of the AND of their rows.
//!
//! Each group `r >= 1` also keeps a permutation of all nodes with its
//! members in the leading `size(r)` slots, so a uniformly random member or
//! non-member can be drawn in O(1).

const WORD_BITS: usize = 64;

#[derive(Debug, Clone)]
pub struct Membership {
    n: usize,
    k: usize,
    stride: usize,
    masks: Vec<u64>,
    order: Vec<Vec<u32>>,
    slot: Vec<Vec<u32>>,
    sizes: Vec<usize>,
}

fn words_for(k: usize) -> usize {
    k.div_ceil(WORD_BITS).max(1)
}

fn identity_order(n: usize) -> Vec<u32> {
    (0..n as u32).collect()
}

impl Membership {
    /// `n` nodes and `k` groups, every node in group 0 only.
    pub fn new(n: usize, k: usize) -> Self {
        assert!(k >= 1, "k must be at least 1");
        let stride = words_for(k);
        let mut masks = vec![0u64; n * stride];
        for u in 0..n {
            masks[u * stride] = 1;
        }
        let mut order = vec![Vec::new()];
        let mut slot = vec![Vec::new()];
        for _ in 1..k {
            order.push(identity_order(n));
            slot.push(identity_order(n));
        }
        let mut sizes = vec![0; k];
        sizes[0] = n;
        Membership {
            n,
            k,
            stride,
            masks,
            order,
            slot,
            sizes,
        }
    }

    /// Builds a membership from per-group member lists; `groups[i]` lists
    /// the members of group `i + 1`. Duplicate entries are ignored.
    pub fn from_groups(n: usize, groups: &[Vec<usize>]) -> Self {
        let mut mem = Membership::new(n, groups.len() + 1);
        for (i, members) in groups.iter().enumerate() {
            for &u in members {
                if !mem.contains(u, i + 1) {
                    mem.add(u, i + 1);
                }
            }
        }
        mem
    }

    pub fn num_nodes(&self) -> usize {
        self.n
    }

    pub fn num_groups(&self) -> usize {
        self.k
    }

    #[inline]
    fn row(&self, u: usize) -> &[u64] {
        &self.masks[u * self.stride..(u + 1) * self.stride]
    }

    #[inline]
    pub fn contains(&self, u: usize, r: usize) -> bool {
        debug_assert!(r < self.k);
        self.masks[u * self.stride + r / WORD_BITS] >> (r % WORD_BITS) & 1 == 1
    }

    pub fn size(&self, r: usize) -> usize {
        self.sizes[r]
    }

    pub fn sizes(&self) -> &[usize] {
        &self.sizes
    }

    /// Highest group containing both `u` and `v`.
    #[inline]
    pub fn highest_common_group(&self, u: usize, v: usize) -> usize {
        let a = self.row(u);
        let b = self.row(v);
        for w in (0..self.stride).rev() {
            let x = a[w] & b[w];
            if x != 0 {
                return w * WORD_BITS + (WORD_BITS - 1 - x.leading_zeros() as usize);
            }
        }
        unreachable!("bit 0 is always set")
    }

    /// Highest common group of `u` and `v` ignoring `u`'s membership of
    /// group `skip`.
    #[inline]
    pub fn highest_common_group_without(&self, u: usize, v: usize, skip: usize) -> usize {
        let a = self.row(u);
        let b = self.row(v);
        let skip_word = skip / WORD_BITS;
        let skip_bit = 1u64 << (skip % WORD_BITS);
        for w in (0..self.stride).rev() {
            let mut x = a[w] & b[w];
            if w == skip_word {
                x &= !skip_bit;
            }
            if x != 0 {
                return w * WORD_BITS + (WORD_BITS - 1 - x.leading_zeros() as usize);
            }
        }
        unreachable!("bit 0 is always set")
    }

    /// Groups of `u` in ascending order, always starting with 0.
    pub fn groups_of(&self, u: usize) -> Vec<usize> {
        (0..self.k).filter(|&r| self.contains(u, r)).collect()
    }

    /// Highest group `u` belongs to.
    pub fn top_group(&self, u: usize) -> usize {
        let row = self.row(u);
        for w in (0..self.stride).rev() {
            if row[w] != 0 {
                return w * WORD_BITS + (WORD_BITS - 1 - row[w].leading_zeros() as usize);
            }
        }
        unreachable!("bit 0 is always set")
    }

    /// Members of group `r >= 1`, in internal (unsorted) order.
    pub fn members(&self, r: usize) -> &[u32] {
        &self.order[r][..self.size(r)]
    }

    /// Nodes outside group `r >= 1`, in internal order.
    pub fn non_members(&self, r: usize) -> &[u32] {
        &self.order[r][self.size(r)..]
    }

    /// Sorted member list of group `r`.
    pub fn sorted_members(&self, r: usize) -> Vec<usize> {
        if r == 0 {
            return (0..self.n).collect();
        }
        let mut out: Vec<usize> = self.members(r).iter().map(|&u| u as usize).collect();
        out.sort_unstable();
        out
    }

    pub fn add(&mut self, u: usize, r: usize) {
        assert!(r >= 1 && r < self.k, "group {r} out of range");
        assert!(!self.contains(u, r), "node {u} already in group {r}");
        self.masks[u * self.stride + r / WORD_BITS] |= 1 << (r % WORD_BITS);
        let boundary = self.size(r);
        let pos = self.slot[r][u] as usize;
        self.swap_slots(r, pos, boundary);
        self.sizes[r] += 1;
    }

    pub fn remove(&mut self, u: usize, r: usize) {
        assert!(r >= 1 && r < self.k, "group {r} out of range");
        assert!(self.contains(u, r), "node {u} not in group {r}");
        self.masks[u * self.stride + r / WORD_BITS] &= !(1 << (r % WORD_BITS));
        let last = self.size(r) - 1;
        let pos = self.slot[r][u] as usize;
        self.swap_slots(r, pos, last);
        self.sizes[r] -= 1;
    }

    fn swap_slots(&mut self, r: usize, i: usize, j: usize) {
        if i == j {
            return;
        }
        let order = &mut self.order[r];
        order.swap(i, j);
        let (a, b) = (order[i] as usize, order[j] as usize);
        self.slot[r][a] = i as u32;
        self.slot[r][b] = j as u32;
    }

    fn restride(&mut self, stride: usize) {
        let mut masks = vec![0u64; self.n * stride];
        let keep = stride.min(self.stride);
        for u in 0..self.n {
            masks[u * stride..u * stride + keep]
                .copy_from_slice(&self.masks[u * self.stride..u * self.stride + keep]);
        }
        self.masks = masks;
        self.stride = stride;
    }

    /// Inserts a new empty group at index `s`, relabelling groups `>= s`
    /// up by one.
    pub fn insert_group(&mut self, s: usize) {
        assert!(s >= 1 && s <= self.k, "insert position {s} out of range");
        if words_for(self.k + 1) > self.stride {
            self.restride(words_for(self.k + 1));
        }
        for u in 0..self.n {
            let row = &mut self.masks[u * self.stride..(u + 1) * self.stride];
            shift_up_from(row, s);
        }
        self.k += 1;
        self.order.insert(s, identity_order(self.n));
        self.slot.insert(s, identity_order(self.n));
        self.sizes.insert(s, 0);
    }

    /// Deletes empty group `s >= 1`, relabelling groups above it down by one.
    pub fn delete_group(&mut self, s: usize) {
        assert!(s >= 1 && s < self.k, "group {s} out of range");
        assert_eq!(self.size(s), 0, "group {s} is not empty");
        for u in 0..self.n {
            let row = &mut self.masks[u * self.stride..(u + 1) * self.stride];
            shift_down_from(row, s);
        }
        self.k -= 1;
        self.order.remove(s);
        self.slot.remove(s);
        self.sizes.remove(s);
        if words_for(self.k) < self.stride {
            self.restride(words_for(self.k));
        }
    }

    /// Encodes groups `1..k` as a bit string, bit `(r-1)*n + u` set iff
    /// `u` is in group `r`. `None` when it does not fit in 64 bits.
    pub fn state_code(&self) -> Option<u64> {
        let bits = self.n * (self.k - 1);
        if bits > 64 {
            return None;
        }
        let mut code = 0u64;
        for r in 1..self.k {
            for &u in self.members(r) {
                code |= 1 << ((r - 1) * self.n + u as usize);
            }
        }
        Some(code)
    }

    pub fn from_state_code(n: usize, k: usize, code: u64) -> Self {
        assert!(n * (k - 1) <= 64);
        let mut mem = Membership::new(n, k);
        for r in 1..k {
            for u in 0..n {
                if code >> ((r - 1) * n + u) & 1 == 1 {
                    mem.add(u, r);
                }
            }
        }
        mem
    }

    /// Sorted member lists for groups `1..k`.
    pub fn group_lists(&self) -> Vec<Vec<usize>> {
        (1..self.k).map(|r| self.sorted_members(r)).collect()
    }
}

impl PartialEq for Membership {
    fn eq(&self, other: &Self) -> bool {
        self.n == other.n
            && self.k == other.k
            && (0..self.n).all(|u| {
                let keep = self.stride.min(other.stride);
                self.row(u)[..keep] == other.row(u)[..keep]
                    && self.row(u)[keep..].iter().all(|&w| w == 0)
                    && other.row(u)[keep..].iter().all(|&w| w == 0)
            })
    }
}

impl Eq for Membership {}

/// Mask with bits `0..b` of word `w` set, for a global bit boundary `b`.
fn below(w: usize, b: usize) -> u64 {
    let lo = w * WORD_BITS;
    if b <= lo {
        0
    } else if b >= lo + WORD_BITS {
        u64::MAX
    } else {
        (1u64 << (b - lo)) - 1
    }
}

fn shift_up_from(row: &mut [u64], s: usize) {
    let words = row.len();
    let mut shifted = vec![0u64; words];
    for w in 0..words {
        shifted[w] = row[w] << 1;
        if w > 0 {
            shifted[w] |= row[w - 1] >> (WORD_BITS - 1);
        }
    }
    for w in 0..words {
        row[w] = (row[w] & below(w, s)) | (shifted[w] & !below(w, s + 1));
    }
}

fn shift_down_from(row: &mut [u64], s: usize) {
    let words = row.len();
    let mut shifted = vec![0u64; words];
    for w in 0..words {
        shifted[w] = row[w] >> 1;
        if w + 1 < words {
            shifted[w] |= row[w + 1] << (WORD_BITS - 1);
        }
    }
    for w in 0..words {
        row[w] = (row[w] & below(w, s)) | (shifted[w] & !below(w, s));
    }
}
