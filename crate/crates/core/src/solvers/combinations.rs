/// `C(n, r)`, saturating.
pub fn binomial(n: usize, r: usize) -> u128 {
    if r > n {
        return 0;
    }
    let r = r.min(n - r);
    let mut acc: u128 = 1;
    for i in 0..r {
        acc = acc.saturating_mul((n - i) as u128) / (i as u128 + 1);
    }
    acc
}

/// Lexicographic r-combinations of `start..n`.
pub struct Combinations {
    idx: Vec<usize>,
    n: usize,
    fresh: bool,
    done: bool,
}

impl Combinations {
    pub fn new(start: usize, n: usize, r: usize) -> Self {
        let idx: Vec<usize> = (start..start + r).collect();
        let done = start + r > n;
        Self {
            idx,
            n,
            fresh: true,
            done,
        }
    }

    /// Advances to the next combination; returns `None` when exhausted.
    pub fn next_combination(&mut self) -> Option<&[usize]> {
        if self.done {
            return None;
        }
        if self.fresh {
            self.fresh = false;
            return Some(&self.idx);
        }
        let r = self.idx.len();
        let mut i = r;
        loop {
            if i == 0 {
                self.done = true;
                return None;
            }
            i -= 1;
            if self.idx[i] < self.n - r + i {
                break;
            }
        }
        self.idx[i] += 1;
        for j in i + 1..r {
            self.idx[j] = self.idx[j - 1] + 1;
        }
        Some(&self.idx)
    }
}

/// Every combination of `0..n` with size in `lo..=hi`, ordered by size then
/// lexicographically.
pub fn all_up_to(n: usize, lo: usize, hi: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    for r in lo..=hi.min(n) {
        let mut it = Combinations::new(0, n, r);
        while let Some(c) = it.next_combination() {
            out.push(c.to_vec());
        }
    }
    out
}
