use std::collections::BTreeMap;

use serde::Serialize;

use super::complex::FilteredZ2Complex;
use crate::gf2::{kernel, BitMatrix, BitVec, Reducer};

pub type Bidegree = (i32, i32);

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PageDifferential {
    pub source: Bidegree,
    pub target: Bidegree,
    pub rank: usize,
    /// Columns are images of the source representatives in target
    /// coordinates.
    #[serde(skip)]
    pub matrix: BitMatrix,
}

/// Page `E^k` with dimensions, representative cycles and the differential
/// `d^k: E^k_{i,j} → E^k_{i−k, j+k−1}` in those bases.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpectralPage {
    pub k: usize,
    /// Nonzero dimensions only.
    pub dims: BTreeMap<Bidegree, usize>,
    /// Nonzero differentials only.
    pub differentials: Vec<PageDifferential>,
    /// Chain-level representatives (vectors over all generators).
    #[serde(skip)]
    pub representatives: BTreeMap<Bidegree, Vec<BitVec>>,
}

impl SpectralPage {
    pub fn dim(&self, bd: Bidegree) -> usize {
        self.dims.get(&bd).copied().unwrap_or(0)
    }

    pub fn euler_characteristic(&self) -> i64 {
        self.dims
            .iter()
            .map(|(&(i, j), &d)| {
                if (i + j).rem_euclid(2) == 0 {
                    d as i64
                } else {
                    -(d as i64)
                }
            })
            .sum()
    }

    pub fn total_dim(&self, degree: i32) -> usize {
        self.dims
            .iter()
            .filter(|(&(i, j), _)| i + j == degree)
            .map(|(_, &d)| d)
            .sum()
    }

    pub fn differential(&self, source: Bidegree) -> Option<&PageDifferential> {
        self.differentials.iter().find(|d| d.source == source)
    }

    pub fn has_zero_differentials(&self) -> bool {
        self.differentials.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpectralSequence {
    pub pages: Vec<SpectralPage>,
    /// Dimensions of `E^∞`.
    pub infinity: BTreeMap<Bidegree, usize>,
    /// First page after which every differential vanishes.
    pub stabilized_at: usize,
}

impl SpectralSequence {
    pub fn page(&self, k: usize) -> Option<&SpectralPage> {
        self.pages.iter().find(|p| p.k == k)
    }

    pub fn infinity_total(&self) -> BTreeMap<i32, usize> {
        let mut out = BTreeMap::new();
        for (&(i, j), &d) in &self.infinity {
            *out.entry(i + j).or_insert(0) += d;
        }
        out
    }

    pub fn infinity_dim(&self, bd: Bidegree) -> usize {
        self.infinity.get(&bd).copied().unwrap_or(0)
    }
}

/// Quotient `Z/B` at one bidegree with coordinates for reduction.
struct Cell {
    reps: Vec<BitVec>,
    coords: Reducer,
}

struct Engine<'a> {
    complex: &'a FilteredZ2Complex,
    n: usize,
}

impl<'a> Engine<'a> {
    /// Basis of `Z^r_p(l) = {x ∈ F_p C_l : ∂x ∈ F_{p−r}}`; for `r ≤ 0` this
    /// is `F_p C_l`.
    fn z(&self, r: i64, p: i32, l: i32) -> Vec<BitVec> {
        let gens: Vec<usize> = self.complex.filtered(l, p).collect();
        if r <= 0 {
            return gens.iter().map(|&g| BitVec::unit(self.n, g)).collect();
        }
        let cutoff = p as i64 - r;
        let mask = BitVec::from_indices(
            self.n,
            self.complex
                .generators()
                .iter()
                .enumerate()
                .filter(|(_, g)| (g.i as i64) > cutoff)
                .map(|(idx, _)| idx),
        );
        let images: Vec<BitVec> = gens
            .iter()
            .map(|&g| {
                let mut v = self.complex.boundary().cols[g].clone();
                v.and_assign(&mask);
                v
            })
            .collect();
        kernel(&images, self.n)
            .into_iter()
            .map(|combo| BitVec::from_indices(self.n, combo.ones().map(|c| gens[c])))
            .collect()
    }

    fn cell(&self, r: i64, p: i32, l: i32) -> Cell {
        let z = self.z(r, p, l);
        let mut b: Vec<BitVec> = self.z(r - 1, p - 1, l);
        let upper = self.z(r - 1, p + r as i32 - 1, l + 1);
        b.extend(upper.iter().map(|x| self.complex.apply(x)));
        let mut probe = Reducer::new(self.n, 0);
        for v in &b {
            probe.insert(v);
        }
        let reps: Vec<BitVec> = z.into_iter().filter(|v| probe.insert(v)).collect();
        let mut coords = Reducer::new(self.n, reps.len());
        for v in &b {
            coords.insert(v);
        }
        for (t, v) in reps.iter().enumerate() {
            coords
                .insert_tagged(v, BitVec::unit(reps.len(), t))
                .expect("representatives are independent modulo B");
        }
        Cell { reps, coords }
    }
}

/// All pages `E^1 … E^{w+2}` (w = filtration width), computed from the
/// approximation subspaces `Z^k_p = {x ∈ F_p : ∂x ∈ F_{p−k}}` and
/// `E^k_p = Z^k_p / (Z^{k−1}_{p−1} + ∂Z^{k−1}_{p+k−1})`. `k_max` caps the
/// number of pages; `E^∞` is always taken from page `w + 1`.
pub fn compute_pages(complex: &FilteredZ2Complex, k_max: Option<usize>) -> SpectralSequence {
    let engine = Engine {
        complex,
        n: complex.len(),
    };
    let Some((pmin, pmax)) = complex.base_range() else {
        return SpectralSequence {
            pages: Vec::new(),
            infinity: BTreeMap::new(),
            stabilized_at: 1,
        };
    };
    let (lmin, lmax) = complex.degree_range().expect("nonempty");
    let width = (pmax - pmin) as usize;
    let last = width + 2;
    let stop = k_max.map_or(last, |k| k.clamp(1, last));
    let mut pages = Vec::new();
    let mut infinity = BTreeMap::new();
    let mut stabilized_at = 1;
    for r in 1..=last.max(width + 1) {
        let mut cells: BTreeMap<(i32, i32), Cell> = BTreeMap::new();
        for p in pmin..=pmax {
            for l in lmin..=lmax {
                let cell = engine.cell(r as i64, p, l);
                if !cell.reps.is_empty() {
                    cells.insert((p, l), cell);
                }
            }
        }
        let mut dims = BTreeMap::new();
        let mut representatives = BTreeMap::new();
        for (&(p, l), cell) in &cells {
            dims.insert((p, l - p), cell.reps.len());
            representatives.insert((p, l - p), cell.reps.clone());
        }
        let mut differentials = Vec::new();
        for (&(p, l), cell) in &cells {
            let tp = p - r as i32;
            let Some(target) = cells.get(&(tp, l - 1)) else {
                continue;
            };
            let cols: Vec<BitVec> = cell
                .reps
                .iter()
                .map(|x| {
                    let (res, combo) = target.coords.reduce(&complex.apply(x));
                    debug_assert!(res.is_zero(), "boundary of a representative lies in Z");
                    combo
                })
                .collect();
            let matrix = BitMatrix {
                rows: target.reps.len(),
                cols,
            };
            let rank = matrix.rank();
            if rank > 0 {
                stabilized_at = r + 1;
                differentials.push(PageDifferential {
                    source: (p, l - p),
                    target: (tp, l - 1 - tp),
                    rank,
                    matrix,
                });
            }
        }
        if r == width + 1 {
            infinity = dims.clone();
        }
        if r <= stop {
            pages.push(SpectralPage {
                k: r,
                dims,
                differentials,
                representatives,
            });
        }
    }
    SpectralSequence {
        pages,
        infinity,
        stabilized_at,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct SequenceChecks {
    pub d_squared_zero: bool,
    pub euler_constant: bool,
    /// `dim E^{k+1} = dim ker d^k − rank d^k(incoming)` at every bidegree.
    pub pages_consistent: bool,
    pub stabilized: bool,
}

impl SpectralSequence {
    pub fn checks(&self) -> SequenceChecks {
        let mut d2 = true;
        for page in &self.pages {
            for d in &page.differentials {
                if let Some(next) = page.differential(d.target) {
                    if !next.matrix.compose(&d.matrix).is_zero() {
                        d2 = false;
                    }
                }
            }
        }
        let euler: Vec<i64> = self
            .pages
            .iter()
            .map(SpectralPage::euler_characteristic)
            .collect();
        let euler_constant = euler.windows(2).all(|w| w[0] == w[1]);
        let mut consistent = true;
        for w in self.pages.windows(2) {
            let (cur, next) = (&w[0], &w[1]);
            let mut keys: Vec<Bidegree> =
                cur.dims.keys().chain(next.dims.keys()).copied().collect();
            keys.sort();
            keys.dedup();
            for bd in keys {
                let out_rank = cur.differential(bd).map_or(0, |d| d.rank);
                let in_rank = cur
                    .differentials
                    .iter()
                    .filter(|d| d.target == bd)
                    .map(|d| d.rank)
                    .sum::<usize>();
                if cur.dim(bd) as i64 - out_rank as i64 - in_rank as i64 != next.dim(bd) as i64 {
                    consistent = false;
                }
            }
        }
        let stabilized = match self.pages.as_slice() {
            [.., a, b] => a.dims == b.dims && b.has_zero_differentials() && b.dims == self.infinity,
            _ => true,
        };
        SequenceChecks {
            d_squared_zero: d2,
            euler_constant,
            pages_consistent: consistent,
            stabilized,
        }
    }
}
