use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};

use super::complex::{
    brute_force_homology, validate_complex, BoundaryPair, ComplexSpec, FilteredZ2Complex, Generator,
};
use super::pages::{Bidegree, PageDifferential, SpectralPage, SpectralSequence};
use super::SpectralError;
use crate::gf2::BitMatrix;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BaseCritical {
    pub name: String,
    /// Morse index, equal to the critical value (self-indexing).
    pub index: i32,
}

/// A product generator `b ⊗ f` where `f` is the `slot`-th basis class of
/// `H_j(F)`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct FiberClass {
    pub base: String,
    pub j: i32,
    #[serde(default)]
    pub slot: usize,
}

/// Boundary component beyond `∂¹` between product generators.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TransportEntry {
    pub from: FiberClass,
    pub to: FiberClass,
}

/// Morse data of a fibre bundle: a base Morse complex and the fibre
/// homology, with untwisted coefficients.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BundleMorseData {
    pub base: Vec<BaseCritical>,
    #[serde(default)]
    pub base_boundary: Vec<BoundaryPair>,
    /// `dim H_j(F)` for `j = 0, 1, …`
    pub fiber_dims: Vec<usize>,
    #[serde(default)]
    pub transport: Vec<TransportEntry>,
    /// Nontrivial monodromy on the fibre homology (not supported).
    #[serde(default)]
    pub twisted: bool,
}

fn product_name(base: &str, j: i32, slot: usize) -> String {
    format!("{base}|{j}.{slot}")
}

impl BundleMorseData {
    pub fn validate(&self) -> Result<FilteredZ2Complex, SpectralError> {
        if self.twisted {
            return Err(SpectralError::TwistedCoefficients);
        }
        if self.fiber_dims.iter().all(|&d| d == 0) {
            return Err(SpectralError::InvalidBundle(
                "fibre homology is zero".into(),
            ));
        }
        self.base_complex()
    }

    /// The base Morse complex, graded by index.
    pub fn base_complex(&self) -> Result<FilteredZ2Complex, SpectralError> {
        validate_complex(&ComplexSpec {
            generators: self
                .base
                .iter()
                .map(|b| Generator {
                    name: b.name.clone(),
                    i: b.index,
                    j: 0,
                })
                .collect(),
            boundary: self.base_boundary.clone(),
        })
    }

    fn fiber_slots(&self) -> impl Iterator<Item = (i32, usize)> + '_ {
        self.fiber_dims
            .iter()
            .enumerate()
            .flat_map(|(j, &d)| (0..d).map(move |a| (j as i32, a)))
    }

    /// Total complex `C(B) ⊗ H(F)` with `∂ = ∂_B ⊗ 1 + transport`.
    pub fn to_complex(&self) -> Result<FilteredZ2Complex, SpectralError> {
        self.validate()?;
        let mut generators = Vec::new();
        for b in &self.base {
            for (j, a) in self.fiber_slots() {
                generators.push(Generator {
                    name: product_name(&b.name, j, a),
                    i: b.index,
                    j,
                });
            }
        }
        let mut boundary = Vec::new();
        for pair in &self.base_boundary {
            for (j, a) in self.fiber_slots() {
                boundary.push(BoundaryPair {
                    from: product_name(&pair.from, j, a),
                    to: product_name(&pair.to, j, a),
                });
            }
        }
        for t in &self.transport {
            boundary.push(BoundaryPair {
                from: product_name(&t.from.base, t.from.j, t.from.slot),
                to: product_name(&t.to.base, t.to.j, t.to.slot),
            });
        }
        validate_complex(&ComplexSpec {
            generators,
            boundary,
        })
    }

    fn base_counts(&self) -> BTreeMap<i32, usize> {
        let mut out = BTreeMap::new();
        for b in &self.base {
            *out.entry(b.index).or_insert(0) += 1;
        }
        out
    }
}

/// `E¹_{i,j} = C_i(h_B) ⊗ H_j(F)` with `d¹ = ∂_B ⊗ 1`.
pub fn e1_from_bundle(data: &BundleMorseData) -> Result<SpectralPage, SpectralError> {
    let base = data.validate()?;
    let counts = data.base_counts();
    let mut dims = BTreeMap::new();
    for (&i, &c) in &counts {
        for (j, &d) in data.fiber_dims.iter().enumerate() {
            if c * d > 0 {
                dims.insert((i, j as i32), c * d);
            }
        }
    }
    // Position of each base generator among those of the same index.
    let mut local: HashMap<usize, usize> = HashMap::new();
    let mut seen: BTreeMap<i32, usize> = BTreeMap::new();
    for (idx, g) in base.generators().iter().enumerate() {
        let slot = seen.entry(g.i).or_insert(0);
        local.insert(idx, *slot);
        *slot += 1;
    }
    let mut differentials = Vec::new();
    for (&i, &c) in &counts {
        let Some(&c_low) = counts.get(&(i - 1)) else {
            continue;
        };
        let mut block = BitMatrix::zeros(c_low, c);
        for (idx, g) in base.generators().iter().enumerate() {
            if g.i != i {
                continue;
            }
            for r in base.boundary().cols[idx].ones() {
                block.cols[local[&idx]].set(local[&r], true);
            }
        }
        let rank = block.rank();
        if rank == 0 {
            continue;
        }
        for (j, &d) in data.fiber_dims.iter().enumerate() {
            if d == 0 {
                continue;
            }
            // d¹ = block ⊗ 1 on the d fibre slots, ordered (base, slot).
            let mut m = BitMatrix::zeros(c_low * d, c * d);
            for col in 0..c {
                for r in block.cols[col].ones() {
                    for a in 0..d {
                        m.cols[col * d + a].set(r * d + a, true);
                    }
                }
            }
            differentials.push(PageDifferential {
                source: (i, j as i32),
                target: (i - 1, j as i32),
                rank: rank * d,
                matrix: m,
            });
        }
    }
    Ok(SpectralPage {
        k: 1,
        dims,
        differentials,
        representatives: BTreeMap::new(),
    })
}

/// `E²_{i,j} = H_i(B) ⊗ H_j(F)` (constant coefficients).
pub fn e2_from_bundle(data: &BundleMorseData) -> Result<SpectralPage, SpectralError> {
    let base = data.validate()?;
    let hb = brute_force_homology(&base);
    let mut dims = BTreeMap::new();
    for (&i, &h) in &hb {
        for (j, &d) in data.fiber_dims.iter().enumerate() {
            if h * d > 0 {
                dims.insert((i, j as i32), h * d);
            }
        }
    }
    Ok(SpectralPage {
        k: 2,
        dims,
        differentials: Vec::new(),
        representatives: BTreeMap::new(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SplittingReport {
    pub m: u32,
    pub n: u32,
    pub splits: bool,
    /// `Σ_{i+j=2m} dim E^∞_{i,j}`
    pub h_2m: usize,
    /// `β_{2m} + β_{2(m−n)+1}`
    pub expected: usize,
    pub corner_e2: usize,
    pub corner_infinity: usize,
    /// The `E²_{2m,0}` corner is nonzero and no differential leaves it.
    pub corner_survives: bool,
}

/// Compare `H_{2m}` of the sphere bundle, read off `E^∞`, with
/// `H_{2m}(M) ⊕ H_{2(m−n)+1}(M)`.
pub fn splitting_check(
    seq: &SpectralSequence,
    m: u32,
    n: u32,
    betti: &[usize],
) -> Result<SplittingReport, SpectralError> {
    if m == 0 || n == 0 {
        return Err(SpectralError::DegreeMismatch(format!(
            "m and n must be positive (m = {m}, n = {n})"
        )));
    }
    let top = 2 * n as i32 - 1;
    if let Some(first) = seq.pages.first() {
        if let Some(&(_, j)) = first.dims.keys().find(|&&(_, j)| j != 0 && j != top) {
            return Err(SpectralError::DegreeMismatch(format!(
                "fibre degree {j} is not 0 or {top}"
            )));
        }
    }
    let beta = |k: i64| -> usize {
        if k < 0 {
            0
        } else {
            betti.get(k as usize).copied().unwrap_or(0)
        }
    };
    let deg = 2 * m as i32;
    let h_2m: usize = seq
        .infinity
        .iter()
        .filter(|(&(i, j), _)| i + j == deg)
        .map(|(_, &d)| d)
        .sum();
    let expected = beta(2 * m as i64) + beta(2 * (m as i64 - n as i64) + 1);
    let corner: Bidegree = (deg, 0);
    let corner_e2 = seq.page(2).map_or(0, |p| p.dim(corner));
    let corner_infinity = seq.infinity_dim(corner);
    Ok(SplittingReport {
        m,
        n,
        splits: h_2m == expected,
        h_2m,
        expected,
        corner_e2,
        corner_infinity,
        corner_survives: corner_e2 > 0 && corner_infinity == corner_e2,
    })
}
