use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};

use super::SpectralError;
use crate::gf2::{BitMatrix, BitVec};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Generator {
    pub name: String,
    /// Base (filtration) degree.
    pub i: i32,
    /// Fiber degree.
    pub j: i32,
}

impl Generator {
    pub fn degree(&self) -> i32 {
        self.i + self.j
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BoundaryPair {
    pub from: String,
    pub to: String,
}

/// Textual description of a complex: generators and the pairs `(x, y)` with
/// coefficient 1 in `∂x`. Repeated pairs cancel.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ComplexSpec {
    pub generators: Vec<Generator>,
    #[serde(default)]
    pub boundary: Vec<BoundaryPair>,
}

/// Bigraded chain complex over the two-element field, filtered by the base
/// degree `i`.
#[derive(Debug, Clone, PartialEq)]
pub struct FilteredZ2Complex {
    generators: Vec<Generator>,
    /// Column `g` is `∂(g)`.
    boundary: BitMatrix,
}

impl FilteredZ2Complex {
    /// Check `∂² = 0`, that `∂` lowers total degree by one, and that it
    /// respects the filtration.
    pub fn new(generators: Vec<Generator>, boundary: BitMatrix) -> Result<Self, SpectralError> {
        let n = generators.len();
        if boundary.rows != n || boundary.ncols() != n {
            return Err(SpectralError::InvalidComplex(format!(
                "boundary must be {n}×{n}, got {}×{}",
                boundary.rows,
                boundary.ncols()
            )));
        }
        let mut seen = HashMap::new();
        for (idx, g) in generators.iter().enumerate() {
            if seen.insert(g.name.clone(), idx).is_some() {
                return Err(SpectralError::DuplicateGenerator(g.name.clone()));
            }
        }
        let sq = boundary.compose(&boundary);
        if let Some(c) = (0..n).find(|&c| !sq.cols[c].is_zero()) {
            return Err(SpectralError::NotAComplex {
                generator: generators[c].name.clone(),
            });
        }
        for (c, col) in boundary.cols.iter().enumerate() {
            for r in col.ones() {
                let (x, y) = (&generators[c], &generators[r]);
                if y.degree() != x.degree() - 1 {
                    return Err(SpectralError::DegreeError {
                        from: x.name.clone(),
                        to: y.name.clone(),
                    });
                }
                if y.i > x.i {
                    return Err(SpectralError::FiltrationViolation {
                        from: x.name.clone(),
                        to: y.name.clone(),
                    });
                }
            }
        }
        Ok(Self {
            generators,
            boundary,
        })
    }

    pub fn generators(&self) -> &[Generator] {
        &self.generators
    }

    pub fn boundary(&self) -> &BitMatrix {
        &self.boundary
    }

    pub fn len(&self) -> usize {
        self.generators.len()
    }

    pub fn is_empty(&self) -> bool {
        self.generators.is_empty()
    }

    pub fn apply(&self, v: &BitVec) -> BitVec {
        self.boundary.apply(v)
    }

    /// `(min i, max i)`, or `None` for the empty complex.
    pub fn base_range(&self) -> Option<(i32, i32)> {
        let lo = self.generators.iter().map(|g| g.i).min()?;
        let hi = self.generators.iter().map(|g| g.i).max()?;
        Some((lo, hi))
    }

    pub fn degree_range(&self) -> Option<(i32, i32)> {
        let lo = self.generators.iter().map(Generator::degree).min()?;
        let hi = self.generators.iter().map(Generator::degree).max()?;
        Some((lo, hi))
    }

    /// Generators of total degree `l` with base degree at most `p`.
    pub(crate) fn filtered(&self, l: i32, p: i32) -> impl Iterator<Item = usize> + '_ {
        self.generators
            .iter()
            .enumerate()
            .filter(move |(_, g)| g.degree() == l && g.i <= p)
            .map(|(idx, _)| idx)
    }

    /// Same complex with generators listed in a different order
    /// (`perm[new] = old`).
    pub fn permuted(&self, perm: &[usize]) -> Self {
        let n = self.len();
        let mut inv = vec![0; n];
        for (new, &old) in perm.iter().enumerate() {
            inv[old] = new;
        }
        let generators = perm.iter().map(|&o| self.generators[o].clone()).collect();
        let mut boundary = BitMatrix::zeros(n, n);
        for (new, &old) in perm.iter().enumerate() {
            for r in self.boundary.cols[old].ones() {
                boundary.cols[new].set(inv[r], true);
            }
        }
        Self {
            generators,
            boundary,
        }
    }

    pub fn to_spec(&self) -> ComplexSpec {
        let mut boundary = Vec::new();
        for (c, col) in self.boundary.cols.iter().enumerate() {
            for r in col.ones() {
                boundary.push(BoundaryPair {
                    from: self.generators[c].name.clone(),
                    to: self.generators[r].name.clone(),
                });
            }
        }
        ComplexSpec {
            generators: self.generators.clone(),
            boundary,
        }
    }
}

/// Build and check a complex from its textual description.
pub fn validate_complex(spec: &ComplexSpec) -> Result<FilteredZ2Complex, SpectralError> {
    let n = spec.generators.len();
    let mut index = HashMap::new();
    for (idx, g) in spec.generators.iter().enumerate() {
        if index.insert(g.name.as_str(), idx).is_some() {
            return Err(SpectralError::DuplicateGenerator(g.name.clone()));
        }
    }
    let mut boundary = BitMatrix::zeros(n, n);
    for pair in &spec.boundary {
        let from = *index
            .get(pair.from.as_str())
            .ok_or_else(|| SpectralError::UnknownGenerator(pair.from.clone()))?;
        let to = *index
            .get(pair.to.as_str())
            .ok_or_else(|| SpectralError::UnknownGenerator(pair.to.clone()))?;
        boundary.cols[from].flip(to);
    }
    FilteredZ2Complex::new(spec.generators.clone(), boundary)
}

/// Total homology dimensions `dim ker ∂_l − rank ∂_{l+1}`, ignoring the
/// filtration.
pub fn brute_force_homology(complex: &FilteredZ2Complex) -> BTreeMap<i32, usize> {
    let mut out = BTreeMap::new();
    let Some((lo, hi)) = complex.degree_range() else {
        return out;
    };
    let rank_out = |l: i32| -> usize {
        crate::gf2::rank(
            complex
                .generators
                .iter()
                .enumerate()
                .filter(|(_, g)| g.degree() == l)
                .map(|(c, _)| complex.boundary.cols[c].clone()),
        )
    };
    for l in lo..=hi {
        let dim = complex
            .generators
            .iter()
            .filter(|g| g.degree() == l)
            .count();
        out.insert(l, dim - rank_out(l) - rank_out(l + 1));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn gen(name: &str, i: i32, j: i32) -> Generator {
        Generator {
            name: name.into(),
            i,
            j,
        }
    }

    fn pair(a: &str, b: &str) -> BoundaryPair {
        BoundaryPair {
            from: a.into(),
            to: b.into(),
        }
    }

    #[test]
    fn zero_boundary_is_valid() {
        let spec = ComplexSpec {
            generators: vec![gen("a", 0, 0), gen("b", 3, 1), gen("c", 1, 1)],
            boundary: vec![],
        };
        let c = validate_complex(&spec).unwrap();
        let h = brute_force_homology(&c);
        assert_eq!(h.values().sum::<usize>(), 3);
        assert_eq!(h[&2], 1);
        assert_eq!(h[&4], 1);
    }

    #[test]
    fn two_cycle_is_not_a_complex() {
        let spec = ComplexSpec {
            generators: vec![gen("x", 0, 0), gen("y", 0, 0)],
            boundary: vec![pair("x", "y"), pair("y", "x")],
        };
        assert!(matches!(
            validate_complex(&spec),
            Err(SpectralError::NotAComplex { .. })
        ));
    }

    #[test]
    fn filtration_and_degree_checks() {
        let spec = ComplexSpec {
            generators: vec![gen("x", 0, 1), gen("y", 1, -1)],
            boundary: vec![pair("x", "y")],
        };
        assert!(matches!(
            validate_complex(&spec),
            Err(SpectralError::FiltrationViolation { .. })
        ));
        let spec = ComplexSpec {
            generators: vec![gen("x", 1, 1), gen("y", 0, 0)],
            boundary: vec![pair("x", "y")],
        };
        assert!(matches!(
            validate_complex(&spec),
            Err(SpectralError::DegreeError { .. })
        ));
        let spec = ComplexSpec {
            generators: vec![gen("x", 1, 1)],
            boundary: vec![pair("x", "z")],
        };
        assert!(matches!(
            validate_complex(&spec),
            Err(SpectralError::UnknownGenerator(_))
        ));
    }

    #[test]
    fn round_trip_spec() {
        let spec = ComplexSpec {
            generators: vec![gen("a", 2, 0), gen("b", 0, 1)],
            boundary: vec![pair("a", "b")],
        };
        let c = validate_complex(&spec).unwrap();
        assert_eq!(c.to_spec(), spec);
        assert_eq!(brute_force_homology(&c).values().sum::<usize>(), 0);
    }
}
