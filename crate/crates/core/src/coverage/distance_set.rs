use std::ops::RangeInclusive;

/// Set of relative distances in `[0, len)`, stored as a fixed-size bit vector.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct DistanceSet {
    len: usize,
    words: Vec<u64>,
}

impl DistanceSet {
    pub fn new(len: usize) -> Self {
        Self {
            len,
            words: vec![0; len.div_ceil(64)],
        }
    }

    /// Capacity: distances `0..len` are representable.
    pub fn capacity(&self) -> usize {
        self.len
    }

    pub fn insert(&mut self, d: usize) {
        assert!(d < self.len, "distance {d} outside [0, {})", self.len);
        self.words[d / 64] |= 1 << (d % 64);
    }

    pub fn contains(&self, d: usize) -> bool {
        d < self.len && self.words[d / 64] & (1 << (d % 64)) != 0
    }

    /// Inserts the closed interval `[lo, hi]`, clipped to the capacity.
    /// Empty when `lo > hi`.
    pub fn insert_interval(&mut self, lo: i64, hi: i64) {
        let lo = lo.max(0);
        let hi = hi.min(self.len as i64 - 1);
        if lo > hi {
            return;
        }
        let (lo, hi) = (lo as usize, hi as usize);
        let (first, last) = (lo / 64, hi / 64);
        let low_mask = u64::MAX << (lo % 64);
        let high_mask = u64::MAX >> (63 - hi % 64);
        if first == last {
            self.words[first] |= low_mask & high_mask;
        } else {
            self.words[first] |= low_mask;
            for w in &mut self.words[first + 1..last] {
                *w = u64::MAX;
            }
            self.words[last] |= high_mask;
        }
    }

    pub fn union_with(&mut self, other: &DistanceSet) {
        assert_eq!(self.len, other.len, "distance sets of different capacity");
        for (a, b) in self.words.iter_mut().zip(&other.words) {
            *a |= *b;
        }
    }

    pub fn count(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn is_full(&self) -> bool {
        self.count() == self.len
    }

    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.words.iter().enumerate().flat_map(|(i, &w)| {
            let mut bits = w;
            std::iter::from_fn(move || {
                if bits == 0 {
                    return None;
                }
                let t = bits.trailing_zeros() as usize;
                bits &= bits - 1;
                Some(i * 64 + t)
            })
        })
    }

    /// Maximal runs of consecutive members.
    pub fn ranges(&self) -> Vec<RangeInclusive<usize>> {
        let mut out: Vec<RangeInclusive<usize>> = Vec::new();
        for d in self.iter() {
            match out.last_mut() {
                Some(r) if *r.end() + 1 == d => *r = *r.start()..=d,
                _ => out.push(d..=d),
            }
        }
        out
    }
}
