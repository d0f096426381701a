//! Integer homology of short chain complexes, and the Spin-structure and
//! stable-orientation counts of a closed orientable 3-manifold.
//!
//! Counts use mod-2 homology `H_1` and `H_2`; by Poincaré duality and universal
//! coefficients these have the same size as the `H^1` and `H^2` groups.

mod matrix;
mod snf;

use std::fmt;

use num_bigint::{BigInt, BigUint};
use num_integer::Integer;
use num_traits::{One, ToPrimitive};
use serde::{Deserialize, Serialize, Serializer};
use thiserror::Error;

pub use matrix::IntegerMatrix;
pub use snf::{smith_normal_form, SmithDecomposition};

/// Order of the stable 3-stem, the image of the J-homomorphism `Z/24`.
pub const STABLE_THREE_STEM_ORDER: u32 = 24;

#[derive(Debug, Error)]
pub enum HomologyError {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("not a chain complex: {0} is nonzero")]
    NotAComplex(&'static str),
    #[error("cannot infer the size of {0}; add a \"dims\" field [c0, c1, c2, c3]")]
    AmbiguousDimension(&'static str),
    #[error("invalid chain complex JSON: {0}")]
    Json(#[from] serde_json::Error),
}

/// `C_3 -> C_2 -> C_1 -> C_0`, maps acting on column vectors.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ChainComplex {
    d3: IntegerMatrix,
    d2: IntegerMatrix,
    d1: IntegerMatrix,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ChainComplexFile {
    d3: Vec<Vec<i64>>,
    d2: Vec<Vec<i64>>,
    d1: Vec<Vec<i64>>,
    #[serde(default)]
    dims: Option<[usize; 4]>,
}

impl ChainComplex {
    /// Checks composability and that both composites vanish.
    pub fn new(d3: IntegerMatrix, d2: IntegerMatrix, d1: IntegerMatrix) -> Result<Self, HomologyError> {
        if d1.cols() != d2.rows() || d2.cols() != d3.rows() {
            return Err(HomologyError::DimensionMismatch(format!(
                "d1 is {}x{}, d2 is {}x{}, d3 is {}x{}",
                d1.rows(),
                d1.cols(),
                d2.rows(),
                d2.cols(),
                d3.rows(),
                d3.cols()
            )));
        }
        if !d1.mul(&d2)?.is_zero() {
            return Err(HomologyError::NotAComplex("d1 d2"));
        }
        if !d2.mul(&d3)?.is_zero() {
            return Err(HomologyError::NotAComplex("d2 d3"));
        }
        Ok(ChainComplex { d3, d2, d1 })
    }

    /// Parses `{"d3": .., "d2": .., "d1": .., "dims": [c0, c1, c2, c3]}`.
    ///
    /// A map with no rows carries no column count, so `dims` is required
    /// exactly when `d3` is empty and `C_3` is nonzero.
    pub fn from_json(text: &str) -> Result<Self, HomologyError> {
        let file: ChainComplexFile = serde_json::from_str(text)?;
        let c0 = file.d1.len();
        let c1 = file.d2.len();
        let c2 = file.d3.len();
        let c3 = match (file.d3.first(), file.dims) {
            (_, Some(d)) => d[3],
            (Some(row), None) => row.len(),
            (None, None) => return Err(HomologyError::AmbiguousDimension("C3")),
        };
        if let Some(d) = file.dims {
            if d[..3] != [c0, c1, c2] {
                return Err(HomologyError::DimensionMismatch(format!(
                    "dims {d:?} disagree with the matrix row counts [{c0}, {c1}, {c2}, _]"
                )));
            }
        }
        let d1 = IntegerMatrix::from_rows(&file.d1, Some(c1))?;
        let d2 = IntegerMatrix::from_rows(&file.d2, Some(c2))?;
        let d3 = IntegerMatrix::from_rows(&file.d3, Some(c3))?;
        Self::new(d3, d2, d1)
    }

    /// Ranks `[c0, c1, c2, c3]` of the chain groups.
    pub fn dims(&self) -> [usize; 4] {
        [self.d1.rows(), self.d1.cols(), self.d2.cols(), self.d3.cols()]
    }

    pub fn d1(&self) -> &IntegerMatrix {
        &self.d1
    }

    pub fn d2(&self) -> &IntegerMatrix {
        &self.d2
    }

    pub fn d3(&self) -> &IntegerMatrix {
        &self.d3
    }
}

fn serialize_bigints<S: Serializer>(xs: &[BigInt], s: S) -> Result<S::Ok, S::Error> {
    use serde::ser::SerializeSeq;
    let mut seq = s.serialize_seq(Some(xs.len()))?;
    for x in xs {
        match x.to_i64() {
            Some(v) => seq.serialize_element(&v)?,
            None => seq.serialize_element(&x.to_string())?,
        }
    }
    seq.end()
}

/// `Z^rank + Z/t_1 + Z/t_2 + ...` with `t_1 | t_2 | ...`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct HomologyGroup {
    pub rank: usize,
    #[serde(serialize_with = "serialize_bigints")]
    pub torsion: Vec<BigInt>,
}

impl HomologyGroup {
    pub fn is_infinite_cyclic(&self) -> bool {
        self.rank == 1 && self.torsion.is_empty()
    }

    fn even_torsion_count(&self) -> usize {
        self.torsion.iter().filter(|t| t.is_even()).count()
    }
}

impl fmt::Display for HomologyGroup {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut parts = Vec::new();
        match self.rank {
            0 => {}
            1 => parts.push("Z".to_string()),
            r => parts.push(format!("Z^{r}")),
        }
        parts.extend(self.torsion.iter().map(|t| format!("Z/{t}")));
        if parts.is_empty() {
            write!(f, "0")
        } else {
            write!(f, "{}", parts.join(" + "))
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct HomologySummary {
    /// `H_0 .. H_3` over the integers.
    pub groups: [HomologyGroup; 4],
    /// Dimensions of `H_0 .. H_3` over the two-element field, when requested.
    pub mod2: Option<[usize; 4]>,
}

impl HomologySummary {
    /// Mod-2 dimensions, from the direct computation if present and from
    /// universal coefficients otherwise.
    pub fn mod2_dims(&self) -> [usize; 4] {
        if let Some(d) = self.mod2 {
            return d;
        }
        std::array::from_fn(|i| {
            let below = if i == 0 { 0 } else { self.groups[i - 1].even_torsion_count() };
            self.groups[i].rank + self.groups[i].even_torsion_count() + below
        })
    }

    /// `H_0 = Z` and `H_3 = Z`, the shape of a connected closed orientable
    /// 3-manifold.
    pub fn is_closed_orientable(&self) -> bool {
        self.groups[0].is_infinite_cyclic() && self.groups[3].is_infinite_cyclic()
    }
}

impl fmt::Display for HomologySummary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, g) in self.groups.iter().enumerate() {
            writeln!(f, "H{i} = {g}")?;
        }
        let d = self.mod2_dims();
        write!(f, "mod 2 dims = ({}, {}, {}, {})", d[0], d[1], d[2], d[3])
    }
}

/// Rank and invariant factors of a boundary map.
fn boundary_data(m: &IntegerMatrix) -> (usize, Vec<BigInt>) {
    let factors = smith_normal_form(m).invariant_factors();
    let torsion = factors.iter().filter(|d| !d.is_one()).cloned().collect();
    (factors.len(), torsion)
}

pub fn homology(c: &ChainComplex, mod2: bool) -> HomologySummary {
    let dims = c.dims();
    // maps into degree i and out of degree i; d0 and d4 are zero
    let (r1, t1) = boundary_data(&c.d1);
    let (r2, t2) = boundary_data(&c.d2);
    let (r3, t3) = boundary_data(&c.d3);
    let ranks_in = [r1, r2, r3, 0];
    let ranks_out = [0, r1, r2, r3];
    let torsion_in = [t1, t2, t3, Vec::new()];
    let groups: [HomologyGroup; 4] = std::array::from_fn(|i| HomologyGroup {
        rank: dims[i] - ranks_out[i] - ranks_in[i],
        torsion: torsion_in[i].clone(),
    });
    let mod2 = mod2.then(|| {
        let r = [c.d1.rank_mod2(), c.d2.rank_mod2(), c.d3.rank_mod2()];
        let out = [0, r[0], r[1], r[2]];
        let inn = [r[0], r[1], r[2], 0];
        std::array::from_fn(|i| dims[i] - out[i] - inn[i])
    });
    HomologySummary { groups, mod2 }
}

/// `|H^1(M; Z/2)| = 2^{h_1}`. `None` unless the homology is that of a
/// connected closed orientable 3-manifold.
pub fn count_spin_structures(h: &HomologySummary) -> Option<BigUint> {
    if !h.is_closed_orientable() {
        return None;
    }
    Some(BigUint::one() << h.mod2_dims()[1])
}

/// `|pi_3^s| * |H_1(M; Z/2)| * |H_2(M; Z/2)| * 2`, with the same precondition
/// as [`count_spin_structures`].
pub fn count_stable_orientations(h: &HomologySummary) -> Option<BigUint> {
    if !h.is_closed_orientable() {
        return None;
    }
    let d = h.mod2_dims();
    Some((BigUint::from(STABLE_THREE_STEM_ORDER) << (d[1] + d[2])) * 2u32)
}
