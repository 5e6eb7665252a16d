//! Filtered chain complexes over the two-element field and their spectral
//! sequences, with the bundle closed forms for `E¹`, `E²` and the
//! degree-`2m` splitting test for sphere bundles.

mod bundle;
mod complex;
mod pages;

use rand::seq::SliceRandom;
use rand::Rng;
use thiserror::Error;

pub use bundle::{
    e1_from_bundle, e2_from_bundle, splitting_check, BaseCritical, BundleMorseData, FiberClass,
    SplittingReport, TransportEntry,
};
pub use complex::{
    brute_force_homology, validate_complex, BoundaryPair, ComplexSpec, FilteredZ2Complex, Generator,
};
pub use pages::{
    compute_pages, Bidegree, PageDifferential, SequenceChecks, SpectralPage, SpectralSequence,
};

use crate::gf2::{BitMatrix, BitVec, Reducer};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SpectralError {
    #[error("boundary does not square to zero (∂²{generator} ≠ 0)")]
    NotAComplex { generator: String },
    #[error("boundary {from} → {to} raises the filtration degree")]
    FiltrationViolation { from: String, to: String },
    #[error("boundary {from} → {to} does not lower total degree by one")]
    DegreeError { from: String, to: String },
    #[error("unknown generator {0}")]
    UnknownGenerator(String),
    #[error("duplicate generator {0}")]
    DuplicateGenerator(String),
    #[error("invalid complex: {0}")]
    InvalidComplex(String),
    #[error("invalid bundle data: {0}")]
    InvalidBundle(String),
    #[error("twisted fibre coefficients are not supported")]
    TwistedCoefficients,
    #[error("not a sphere-bundle complex: {0}")]
    DegreeMismatch(String),
}

fn gen(name: &str, i: i32, j: i32) -> Generator {
    Generator {
        name: name.into(),
        i,
        j,
    }
}

/// Perfect Morse data on `ℂP^m` (one critical point in each even index up
/// to `2m`) with fibre homology `fiber_dims`.
pub fn cp_bundle(m: u32, fiber_dims: Vec<usize>) -> BundleMorseData {
    BundleMorseData {
        base: (0..=m)
            .map(|k| BaseCritical {
                name: format!("b{}", 2 * k),
                index: 2 * k as i32,
            })
            .collect(),
        base_boundary: Vec::new(),
        fiber_dims,
        transport: Vec::new(),
        twisted: false,
    }
}

/// Betti numbers of `ℂP^m`.
pub fn cp_betti(m: u32) -> Vec<usize> {
    (0..=2 * m as usize)
        .map(|k| usize::from(k % 2 == 0))
        .collect()
}

fn sphere_dims(dim: u32) -> Vec<usize> {
    let mut d = vec![0; dim as usize + 1];
    d[0] = 1;
    d[dim as usize] = 1;
    d
}

/// `ℂP^m × S^{2n−1}` as an untwisted bundle.
pub fn trivial_sphere_bundle(m: u32, n: u32) -> BundleMorseData {
    cp_bundle(m, sphere_dims(2 * n - 1))
}

/// The Hopf fibration `S¹ → S³ → S²`: the only nonzero boundary goes from
/// the top cell of the base to the fibre class over the bottom cell.
pub fn hopf_bundle() -> BundleMorseData {
    let mut data = trivial_sphere_bundle(1, 1);
    data.transport.push(TransportEntry {
        from: FiberClass {
            base: "b2".into(),
            j: 0,
            slot: 0,
        },
        to: FiberClass {
            base: "b0".into(),
            j: 1,
            slot: 0,
        },
    });
    data
}

/// Four-generator Hopf complex `g00, g20, g01, g21` with `∂g20 = g01`.
pub fn hopf_complex() -> FilteredZ2Complex {
    validate_complex(&ComplexSpec {
        generators: vec![
            gen("g00", 0, 0),
            gen("g20", 2, 0),
            gen("g01", 0, 1),
            gen("g21", 2, 1),
        ],
        boundary: vec![BoundaryPair {
            from: "g20".into(),
            to: "g01".into(),
        }],
    })
    .expect("Hopf complex is valid")
}

/// `S¹ × S¹` with product Morse data (all boundaries vanish).
pub fn torus_complex() -> FilteredZ2Complex {
    validate_complex(&ComplexSpec {
        generators: vec![
            gen("t00", 0, 0),
            gen("t10", 1, 0),
            gen("t01", 0, 1),
            gen("t11", 1, 1),
        ],
        boundary: Vec::new(),
    })
    .expect("torus complex is valid")
}

/// Random filtered complex: elementary pairs `∂x = y` (with `i(y) ≤ i(x)`)
/// and cycles, conjugated by a random filtration- and degree-preserving
/// change of basis so that higher differentials appear.
pub fn random_filtered_complex<R: Rng + ?Sized>(rng: &mut R, max_gens: usize) -> FilteredZ2Complex {
    const I_MAX: i32 = 4;
    const J_MAX: i32 = 3;
    let n_target = rng.random_range(4..=max_gens.max(4));
    let mut gens: Vec<(i32, i32)> = Vec::new();
    let mut pairs: Vec<(usize, usize)> = Vec::new();
    while gens.len() < n_target {
        if gens.len() + 2 <= n_target && rng.random_bool(0.6) {
            let ix = rng.random_range(0..=I_MAX);
            let jx = rng.random_range(0..=J_MAX);
            let deg = ix + jx;
            if deg == 0 {
                continue;
            }
            let dy = deg - 1;
            let lo = (dy - J_MAX).max(0);
            let hi = ix.min(dy);
            if lo > hi {
                continue;
            }
            let iy = rng.random_range(lo..=hi);
            pairs.push((gens.len(), gens.len() + 1));
            gens.push((ix, jx));
            gens.push((iy, dy - iy));
        } else {
            gens.push((rng.random_range(0..=I_MAX), rng.random_range(0..=J_MAX)));
        }
    }
    let n = gens.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(rng);
    let mut pos = vec![0; n];
    for (new, &old) in order.iter().enumerate() {
        pos[old] = new;
    }
    let generators: Vec<Generator> = order
        .iter()
        .enumerate()
        .map(|(new, &old)| gen(&format!("x{new}"), gens[old].0, gens[old].1))
        .collect();
    let mut d = BitMatrix::zeros(n, n);
    for &(x, y) in &pairs {
        d.cols[pos[x]].set(pos[y], true);
    }
    // Basis change T: each generator picks up random lower-filtration (or
    // earlier, same-filtration) generators of the same degree.
    let mut t = BitMatrix::zeros(n, n);
    for g in 0..n {
        t.cols[g].set(g, true);
        for h in 0..n {
            let (a, b) = (&generators[g], &generators[h]);
            let below = b.i < a.i || (b.i == a.i && h < g);
            if h != g && a.degree() == b.degree() && below && rng.random_bool(0.35) {
                t.cols[g].set(h, true);
            }
        }
    }
    let t_inv = invert(&t);
    let conj = t_inv.compose(&d).compose(&t);
    FilteredZ2Complex::new(generators, conj).expect("conjugated complex is valid")
}

fn invert(m: &BitMatrix) -> BitMatrix {
    let n = m.ncols();
    let mut red = Reducer::new(n, n);
    for (c, col) in m.cols.iter().enumerate() {
        red.insert_tagged(col, BitVec::unit(n, c))
            .expect("matrix is invertible");
    }
    BitMatrix {
        rows: n,
        cols: (0..n).map(|k| red.reduce(&BitVec::unit(n, k)).1).collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn hopf_pages() {
        let c = hopf_complex();
        let seq = compute_pages(&c, None);
        let e2 = seq.page(2).unwrap();
        for bd in [(0, 0), (2, 0), (0, 1), (2, 1)] {
            assert_eq!(e2.dim(bd), 1);
        }
        let d2 = e2.differential((2, 0)).unwrap();
        assert_eq!(d2.target, (0, 1));
        assert_eq!(d2.rank, 1);
        assert_eq!(seq.infinity.len(), 2);
        assert_eq!(seq.infinity_dim((0, 0)), 1);
        assert_eq!(seq.infinity_dim((2, 1)), 1);
        let tot = seq.infinity_total();
        assert_eq!(tot.get(&0), Some(&1));
        assert_eq!(tot.get(&3), Some(&1));
        assert_eq!(
            brute_force_homology(&c),
            [(0, 1), (1, 0), (2, 0), (3, 1)].into_iter().collect()
        );
        let ch = seq.checks();
        assert!(ch.d_squared_zero && ch.euler_constant && ch.pages_consistent && ch.stabilized);
        assert_eq!(seq.stabilized_at, 3);
    }

    #[test]
    fn hopf_bundle_matches_complex() {
        let c = hopf_bundle().to_complex().unwrap();
        let seq = compute_pages(&c, None);
        assert_eq!(seq.infinity, compute_pages(&hopf_complex(), None).infinity);
        let rep = splitting_check(&seq, 1, 1, &cp_betti(1)).unwrap();
        assert!(!rep.splits);
        assert_eq!((rep.h_2m, rep.expected), (0, 1));
        assert!(!rep.corner_survives);
    }

    #[test]
    fn zero_differential_is_e1() {
        let c = torus_complex();
        let seq = compute_pages(&c, None);
        assert_eq!(seq.pages[0].dims, seq.infinity);
        let tot = seq.infinity_total();
        assert_eq!((tot[&0], tot[&1], tot[&2]), (1, 2, 1));
    }

    #[test]
    fn bundle_e1_e2() {
        let s2s1 = trivial_sphere_bundle(1, 1);
        let e1 = e1_from_bundle(&s2s1).unwrap();
        let e2 = e2_from_bundle(&s2s1).unwrap();
        let four: std::collections::BTreeMap<_, _> =
            [((0, 0), 1), ((0, 1), 1), ((2, 0), 1), ((2, 1), 1)]
                .into_iter()
                .collect();
        assert_eq!(e1.dims, four);
        assert_eq!(e2.dims, four);

        let point = BundleMorseData {
            base: vec![BaseCritical {
                name: "p".into(),
                index: 0,
            }],
            base_boundary: vec![],
            fiber_dims: vec![1, 0, 2],
            transport: vec![],
            twisted: false,
        };
        let e1 = e1_from_bundle(&point).unwrap();
        assert_eq!(e1.dims, [((0, 0), 1), ((0, 2), 2)].into_iter().collect());

        // T² base with a non-perfect Morse function: extra index-1/index-2 pair.
        let torus = BundleMorseData {
            base: ["a0", "a1", "b1", "a2", "c1", "c2"]
                .iter()
                .map(|s| BaseCritical {
                    name: s.to_string(),
                    index: s[1..].parse().unwrap(),
                })
                .collect(),
            base_boundary: vec![BoundaryPair {
                from: "c2".into(),
                to: "c1".into(),
            }],
            fiber_dims: vec![1, 1],
            transport: vec![],
            twisted: false,
        };
        let e1 = e1_from_bundle(&torus).unwrap();
        assert_eq!(e1.dim((1, 0)), 3);
        assert_eq!(e1.differential((2, 1)).unwrap().rank, 1);
        let e2 = e2_from_bundle(&torus).unwrap();
        for j in 0..2 {
            assert_eq!((e2.dim((0, j)), e2.dim((1, j)), e2.dim((2, j))), (1, 2, 1));
        }
        let seq = compute_pages(&torus.to_complex().unwrap(), None);
        assert_eq!(seq.page(2).unwrap().dims, e2.dims);
        assert_eq!(seq.page(1).unwrap().dims, e1.dims);
    }

    #[test]
    fn twisted_rejected() {
        let mut d = trivial_sphere_bundle(1, 1);
        d.twisted = true;
        assert_eq!(e2_from_bundle(&d), Err(SpectralError::TwistedCoefficients));
    }

    #[test]
    fn trivial_bundles_split() {
        for (m, n) in [(1, 1), (1, 2), (2, 1), (2, 3)] {
            let seq = compute_pages(&trivial_sphere_bundle(m, n).to_complex().unwrap(), None);
            let rep = splitting_check(&seq, m, n, &cp_betti(m)).unwrap();
            assert!(rep.splits, "{m} {n}");
            assert!(rep.corner_survives);
        }
    }

    #[test]
    fn degree_mismatch() {
        let seq = compute_pages(&torus_complex(), None);
        // Fibre degree 1 is not 0 or 2n − 1 = 3.
        assert!(matches!(
            splitting_check(&seq, 1, 2, &[1, 2, 1]),
            Err(SpectralError::DegreeMismatch(_))
        ));
    }

    #[test]
    fn random_complexes_converge() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..20 {
            let c = random_filtered_complex(&mut rng, 40);
            let seq = compute_pages(&c, None);
            let h = brute_force_homology(&c);
            let inf = seq.infinity_total();
            for (l, d) in &h {
                assert_eq!(inf.get(l).copied().unwrap_or(0), *d);
            }
            let ch = seq.checks();
            assert!(ch.d_squared_zero && ch.euler_constant && ch.pages_consistent && ch.stabilized);
        }
    }
}
