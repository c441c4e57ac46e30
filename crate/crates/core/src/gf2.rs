//! Dense GF(2) row reduction, just enough to express a vector in the span
//! of a fixed set of generators.

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BitVec {
    words: Vec<u64>,
    len: usize,
}

impl BitVec {
    pub fn zeros(len: usize) -> Self {
        BitVec { words: vec![0; len.div_ceil(64)], len }
    }

    pub fn from_indices(len: usize, idx: impl IntoIterator<Item = usize>) -> Self {
        let mut v = Self::zeros(len);
        for i in idx {
            v.flip(i);
        }
        v
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn get(&self, i: usize) -> bool {
        self.words[i / 64] >> (i % 64) & 1 == 1
    }

    pub fn flip(&mut self, i: usize) {
        self.words[i / 64] ^= 1 << (i % 64);
    }

    pub fn xor_assign(&mut self, other: &BitVec) {
        for (a, b) in self.words.iter_mut().zip(&other.words) {
            *a ^= b;
        }
    }

    pub fn is_zero(&self) -> bool {
        self.words.iter().all(|&w| w == 0)
    }

    pub fn ones(&self) -> impl Iterator<Item = usize> + '_ {
        self.words.iter().enumerate().flat_map(|(wi, &w)| {
            let mut w = w;
            std::iter::from_fn(move || {
                if w == 0 {
                    return None;
                }
                let b = w.trailing_zeros() as usize;
                w &= w - 1;
                Some(wi * 64 + b)
            })
        })
    }
}

/// Reduced echelon form of a generator set, remembering which generators
/// were combined into each pivot row.
#[derive(Clone, Debug)]
pub struct SpanSolver {
    rows: Vec<(usize, BitVec, BitVec)>, // (pivot column, row, combination)
    generators: usize,
}

impl SpanSolver {
    pub fn new(generators: &[BitVec]) -> Self {
        let k = generators.len();
        let mut rows: Vec<(usize, BitVec, BitVec)> = Vec::new();
        for (g, gen) in generators.iter().enumerate() {
            let mut r = gen.clone();
            let mut c = BitVec::from_indices(k, [g]);
            for (p, row, comb) in &rows {
                if r.get(*p) {
                    r.xor_assign(row);
                    c.xor_assign(comb);
                }
            }
            let pivot = r.ones().next();
            if let Some(p) = pivot {
                // keep earlier rows reduced with respect to the new pivot
                for (_, row, comb) in rows.iter_mut() {
                    if row.get(p) {
                        row.xor_assign(&r);
                        comb.xor_assign(&c);
                    }
                }
                rows.push((p, r, c));
            }
        }
        SpanSolver { rows, generators: k }
    }

    pub fn rank(&self) -> usize {
        self.rows.len()
    }

    /// Coefficients of `target` over the generators, or `None` when it lies
    /// outside their span. Unique when the generators are independent.
    pub fn solve(&self, target: &BitVec) -> Option<BitVec> {
        let mut r = target.clone();
        let mut c = BitVec::zeros(self.generators);
        for (p, row, comb) in &self.rows {
            if r.get(*p) {
                r.xor_assign(row);
                c.xor_assign(comb);
            }
        }
        r.is_zero().then_some(c)
    }
}
