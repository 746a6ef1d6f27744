//! Ramp secret sharing of a model vector.
//!
//! A model of length `L` is cut into `K` segments of length `ceil(L/K)`. For
//! every coordinate of a segment the owner builds a polynomial whose low `K`
//! coefficients are the segment values and whose top `T` coefficients are
//! uniform noise. Shares are evaluations of those polynomials at non-zero
//! points, and any `K+T` evaluations of a *sum* of such polynomials give back
//! the summed segments.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{FieldContext, FieldElement, Polynomial};

/// A user's private vector. Entries are bounded by the context's `ell`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Model {
    entries: Vec<FieldElement>,
}

impl Model {
    pub fn from_values(ctx: &FieldContext, values: &[u64]) -> Result<Self> {
        if let Some(bad) = values.iter().find(|&&v| v >= ctx.ell()) {
            return Err(Error::InvalidParams(format!(
                "model entry {bad} is not below ell={}",
                ctx.ell()
            )));
        }
        if let Some(bad) = values.iter().find(|&&v| v >= ctx.modulus()) {
            return Err(Error::InvalidParams(format!(
                "model entry {bad} is not below p={}",
                ctx.modulus()
            )));
        }
        Ok(Model {
            entries: values.iter().map(|&v| ctx.element(v)).collect(),
        })
    }

    pub fn zeros(len: usize) -> Self {
        Model {
            entries: vec![FieldElement::ZERO; len],
        }
    }

    pub fn entries(&self) -> &[FieldElement] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ModelPartition {
    segments: Vec<Vec<FieldElement>>,
    pad_count: usize,
}

impl ModelPartition {
    pub fn segments(&self) -> &[Vec<FieldElement>] {
        &self.segments
    }

    pub fn pad_count(&self) -> usize {
        self.pad_count
    }

    pub fn segment_len(&self) -> usize {
        self.segments.first().map_or(0, Vec::len)
    }

    /// Concatenates the segments and drops the padding.
    pub fn unpartition(&self) -> Vec<FieldElement> {
        let mut out: Vec<_> = self.segments.iter().flatten().copied().collect();
        out.truncate(out.len() - self.pad_count);
        out
    }
}

pub fn segment_len(model_len: usize, k: usize) -> usize {
    model_len.div_ceil(k)
}

pub fn partition_model(model: &Model, k: usize) -> Result<ModelPartition> {
    if k == 0 {
        return Err(Error::BadK { k, max: 0 });
    }
    let seg = segment_len(model.len(), k);
    let mut padded = model.entries.clone();
    let pad_count = seg * k - padded.len();
    padded.resize(seg * k, FieldElement::ZERO);
    let segments = if seg == 0 {
        vec![Vec::new(); k]
    } else {
        padded.chunks(seg).map(<[_]>::to_vec).collect()
    };
    Ok(ModelPartition {
        segments,
        pad_count,
    })
}

/// `T` noise vectors of segment length.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct NoiseBlock {
    vectors: Vec<Vec<FieldElement>>,
    /// Seed the block was drawn from; `None` for explicitly supplied noise.
    seed: Option<u64>,
}

impl NoiseBlock {
    pub fn from_vectors(vectors: Vec<Vec<FieldElement>>) -> Self {
        NoiseBlock {
            vectors,
            seed: None,
        }
    }

    pub fn zeros(t: usize, seg_len: usize) -> Self {
        Self::from_vectors(vec![vec![FieldElement::ZERO; seg_len]; t])
    }

    pub fn vectors(&self) -> &[Vec<FieldElement>] {
        &self.vectors
    }

    pub fn seed(&self) -> Option<u64> {
        self.seed
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }
}

/// Draws `t` uniform vectors from a ChaCha stream keyed by `seed`.
///
/// This is a reproducible stand-in for true randomness; the privacy argument
/// only holds when the noise is genuinely uniform and secret.
pub fn sample_noise(ctx: &FieldContext, t: usize, seg_len: usize, seed: u64) -> NoiseBlock {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let p = ctx.modulus();
    let vectors = (0..t)
        .map(|_| {
            (0..seg_len)
                .map(|_| ctx.element(rng.gen_range(0..p)))
                .collect()
        })
        .collect();
    NoiseBlock {
        vectors,
        seed: Some(seed),
    }
}

/// Per-coordinate share polynomials with coefficient layout
/// `[W_1[i], .., W_K[i], Z_1[i], .., Z_T[i]]`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SharePolynomial {
    k: usize,
    t: usize,
    coordinates: Vec<Vec<FieldElement>>,
}

impl SharePolynomial {
    pub fn k(&self) -> usize {
        self.k
    }

    pub fn t(&self) -> usize {
        self.t
    }

    pub fn segment_len(&self) -> usize {
        self.coordinates.len()
    }

    /// Raw coefficients of coordinate `i`, always `K+T` long.
    pub fn raw_coeffs(&self, i: usize) -> &[FieldElement] {
        &self.coordinates[i]
    }

    pub fn coordinate(&self, i: usize) -> Polynomial {
        Polynomial::new(self.coordinates[i].clone())
    }
}

pub fn make_share_poly(partition: &ModelPartition, noise: &NoiseBlock) -> Result<SharePolynomial> {
    let seg = partition.segment_len();
    if let Some(bad) = noise.vectors.iter().find(|v| v.len() != seg) {
        return Err(Error::DimensionMismatch(format!(
            "noise vector of length {} for segment length {seg}",
            bad.len()
        )));
    }
    let k = partition.segments.len();
    let t = noise.vectors.len();
    let coordinates = (0..seg)
        .map(|i| {
            partition
                .segments
                .iter()
                .chain(&noise.vectors)
                .map(|v| v[i])
                .collect()
        })
        .collect();
    Ok(SharePolynomial { k, t, coordinates })
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Share {
    pub evaluation_point: FieldElement,
    pub values: Vec<FieldElement>,
}

/// Evaluation point of in-group position `position` (0-indexed): `position + 1`.
pub fn evaluation_point(ctx: &FieldContext, position: usize) -> FieldElement {
    ctx.element(position as u64 + 1)
}

pub fn share_at(ctx: &FieldContext, poly: &SharePolynomial, alpha: FieldElement) -> Result<Share> {
    if alpha.is_zero() {
        return Err(Error::ZeroEvaluationPoint);
    }
    Ok(Share {
        evaluation_point: alpha,
        values: poly
            .coordinates
            .iter()
            .map(|c| ctx.horner(c, alpha))
            .collect(),
    })
}

/// Interpolates the summed share polynomial from the first `K+T` evaluations
/// and returns its model coefficients, concatenated segment by segment and
/// truncated to `original_length`. Noise coefficients are discarded.
pub fn recover_aggregate(
    ctx: &FieldContext,
    evals: &[(FieldElement, Vec<FieldElement>)],
    k: usize,
    t: usize,
    original_length: usize,
) -> Result<Vec<FieldElement>> {
    let needed = k + t;
    if k == 0 {
        return Err(Error::BadK { k, max: 0 });
    }
    if evals.len() < needed {
        return Err(Error::InsufficientEvaluations {
            needed,
            got: evals.len(),
        });
    }
    let used = &evals[..needed];
    if used.iter().any(|(a, _)| a.is_zero()) {
        return Err(Error::ZeroEvaluationPoint);
    }
    let seg = used[0].1.len();
    if used.iter().any(|(_, v)| v.len() != seg) {
        return Err(Error::DimensionMismatch(
            "evaluation vectors differ in length".into(),
        ));
    }
    if seg * k < original_length {
        return Err(Error::DimensionMismatch(format!(
            "{k} segments of length {seg} cannot hold {original_length} entries"
        )));
    }
    let xs: Vec<_> = used.iter().map(|(a, _)| *a).collect();
    let basis = ctx.lagrange_basis(&xs)?;
    let mut out = Vec::with_capacity(seg * k);
    for j in 0..k {
        for c in 0..seg {
            let v = basis
                .iter()
                .zip(used)
                .fold(FieldElement::ZERO, |acc, (b, (_, ys))| {
                    ctx.add(acc, ctx.mul(b[j], ys[c]))
                });
            out.push(v);
        }
    }
    out.truncate(original_length);
    Ok(out)
}
