//! Dense linear algebra over the two-element field.
//!
//! Vectors are packed bitsets. [`Reducer`] is an incremental echelon basis
//! that optionally tracks which inserted vectors each row is a combination
//! of, which is all the spectral-sequence code needs: ranks, kernels, and
//! coordinates of a vector modulo a subspace.

use std::fmt;

#[derive(Clone, PartialEq, Eq, Hash)]
pub struct BitVec {
    len: usize,
    words: Vec<u64>,
}

impl BitVec {
    pub fn zeros(len: usize) -> Self {
        Self {
            len,
            words: vec![0; len.div_ceil(64)],
        }
    }

    pub fn unit(len: usize, i: usize) -> Self {
        let mut v = Self::zeros(len);
        v.set(i, true);
        v
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
        debug_assert!(i < self.len);
        (self.words[i / 64] >> (i % 64)) & 1 == 1
    }

    pub fn set(&mut self, i: usize, on: bool) {
        debug_assert!(i < self.len);
        let mask = 1u64 << (i % 64);
        if on {
            self.words[i / 64] |= mask;
        } else {
            self.words[i / 64] &= !mask;
        }
    }

    pub fn flip(&mut self, i: usize) {
        debug_assert!(i < self.len);
        self.words[i / 64] ^= 1u64 << (i % 64);
    }

    pub fn xor_assign(&mut self, other: &BitVec) {
        debug_assert_eq!(self.len, other.len);
        for (a, b) in self.words.iter_mut().zip(&other.words) {
            *a ^= b;
        }
    }

    pub fn and_assign(&mut self, other: &BitVec) {
        debug_assert_eq!(self.len, other.len);
        for (a, b) in self.words.iter_mut().zip(&other.words) {
            *a &= b;
        }
    }

    pub fn is_zero(&self) -> bool {
        self.words.iter().all(|&w| w == 0)
    }

    pub fn count_ones(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    /// Highest set index.
    pub fn leading(&self) -> Option<usize> {
        for (wi, &w) in self.words.iter().enumerate().rev() {
            if w != 0 {
                return Some(wi * 64 + 63 - w.leading_zeros() as usize);
            }
        }
        None
    }

    pub fn ones(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.len).filter(move |&i| self.get(i))
    }

    /// Dot product over the two-element field.
    pub fn dot(&self, other: &BitVec) -> bool {
        let mut acc = 0u32;
        for (a, b) in self.words.iter().zip(&other.words) {
            acc ^= (a & b).count_ones() & 1;
        }
        acc == 1
    }
}

impl fmt::Debug for BitVec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s: String = (0..self.len)
            .map(|i| if self.get(i) { '1' } else { '0' })
            .collect();
        write!(f, "[{s}]")
    }
}

/// Column-major matrix: `cols[c]` is the image of the c-th basis vector.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BitMatrix {
    pub rows: usize,
    pub cols: Vec<BitVec>,
}

impl BitMatrix {
    pub fn zeros(rows: usize, ncols: usize) -> Self {
        Self {
            rows,
            cols: (0..ncols).map(|_| BitVec::zeros(rows)).collect(),
        }
    }

    pub fn ncols(&self) -> usize {
        self.cols.len()
    }

    pub fn get(&self, r: usize, c: usize) -> bool {
        self.cols[c].get(r)
    }

    pub fn apply(&self, v: &BitVec) -> BitVec {
        let mut out = BitVec::zeros(self.rows);
        for c in v.ones() {
            out.xor_assign(&self.cols[c]);
        }
        out
    }

    /// `self * rhs`.
    pub fn compose(&self, rhs: &BitMatrix) -> BitMatrix {
        assert_eq!(self.ncols(), rhs.rows);
        BitMatrix {
            rows: self.rows,
            cols: rhs.cols.iter().map(|c| self.apply(c)).collect(),
        }
    }

    pub fn is_zero(&self) -> bool {
        self.cols.iter().all(BitVec::is_zero)
    }

    pub fn rank(&self) -> usize {
        rank(self.cols.iter().cloned())
    }
}

#[derive(Clone, Debug)]
struct Row {
    vec: BitVec,
    combo: BitVec,
}

/// Incremental row-echelon basis with combination tracking.
#[derive(Clone, Debug)]
pub struct Reducer {
    dim: usize,
    tags: usize,
    rows: Vec<Row>,
    pivot_row: Vec<Option<usize>>,
}

impl Reducer {
    /// `dim` is the ambient dimension; `tags` the number of inserted vectors
    /// whose combinations are tracked.
    pub fn new(dim: usize, tags: usize) -> Self {
        Self {
            dim,
            tags,
            rows: Vec::new(),
            pivot_row: vec![None; dim],
        }
    }

    pub fn rank(&self) -> usize {
        self.rows.len()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Reduce `v` against the basis; returns the residual and the combination
    /// of tagged inputs that was subtracted.
    pub fn reduce(&self, v: &BitVec) -> (BitVec, BitVec) {
        let mut v = v.clone();
        let mut combo = BitVec::zeros(self.tags);
        while let Some(p) = v.leading() {
            match self.pivot_row[p] {
                Some(r) => {
                    v.xor_assign(&self.rows[r].vec);
                    combo.xor_assign(&self.rows[r].combo);
                }
                None => break,
            }
        }
        (v, combo)
    }

    pub fn contains(&self, v: &BitVec) -> bool {
        self.reduce(v).0.is_zero()
    }

    /// Insert `v` carrying combination `combo`. Returns `Err(combo')` with the
    /// dependency relation if `v` is already in the span.
    pub fn insert_tagged(&mut self, v: &BitVec, combo: BitVec) -> Result<(), BitVec> {
        let (res, sub) = self.reduce(v);
        let mut combo = combo;
        combo.xor_assign(&sub);
        match res.leading() {
            Some(p) => {
                self.pivot_row[p] = Some(self.rows.len());
                self.rows.push(Row { vec: res, combo });
                Ok(())
            }
            None => Err(combo),
        }
    }

    pub fn insert(&mut self, v: &BitVec) -> bool {
        let empty = BitVec::zeros(self.tags);
        self.insert_tagged(v, empty).is_ok()
    }

    pub fn basis(&self) -> impl Iterator<Item = &BitVec> {
        self.rows.iter().map(|r| &r.vec)
    }
}

pub fn rank(vectors: impl IntoIterator<Item = BitVec>) -> usize {
    let mut it = vectors.into_iter().peekable();
    let Some(first) = it.peek() else {
        return 0;
    };
    let mut red = Reducer::new(first.len(), 0);
    for v in it {
        red.insert(&v);
    }
    red.rank()
}

/// Basis of the kernel of the linear map sending the i-th domain basis vector
/// to `images[i]` (all images live in a space of dimension `codim`).
pub fn kernel(images: &[BitVec], codim: usize) -> Vec<BitVec> {
    let n = images.len();
    let mut red = Reducer::new(codim, n);
    let mut out = Vec::new();
    for (i, img) in images.iter().enumerate() {
        if let Err(rel) = red.insert_tagged(img, BitVec::unit(n, i)) {
            out.push(rel);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bit_ops() {
        let mut v = BitVec::zeros(130);
        v.set(0, true);
        v.set(129, true);
        assert_eq!(v.leading(), Some(129));
        assert_eq!(v.count_ones(), 2);
        let w = BitVec::unit(130, 129);
        v.xor_assign(&w);
        assert_eq!(v.leading(), Some(0));
        assert!(v.dot(&BitVec::unit(130, 0)));
    }

    #[test]
    fn rank_and_kernel() {
        // images: e0 -> (1,1,0), e1 -> (0,1,1), e2 -> (1,0,1) ; rank 2 over GF(2)
        let imgs = vec![
            BitVec::from_indices(3, [0, 1]),
            BitVec::from_indices(3, [1, 2]),
            BitVec::from_indices(3, [0, 2]),
        ];
        assert_eq!(rank(imgs.clone()), 2);
        let k = kernel(&imgs, 3);
        assert_eq!(k.len(), 1);
        assert_eq!(k[0], BitVec::from_indices(3, [0, 1, 2]));
    }

    #[test]
    fn reducer_coordinates() {
        let mut r = Reducer::new(4, 2);
        r.insert_tagged(&BitVec::from_indices(4, [0, 3]), BitVec::unit(2, 0))
            .unwrap();
        r.insert_tagged(&BitVec::from_indices(4, [1, 3]), BitVec::unit(2, 1))
            .unwrap();
        let (res, combo) = r.reduce(&BitVec::from_indices(4, [0, 1]));
        assert!(res.is_zero());
        assert_eq!(combo, BitVec::from_indices(2, [0, 1]));
    }
}
