//! Conserved-charge towers from the boost operator `B = Σ_n n H_{n,n+1}`.
//!
//! The commutator `[B, Q_r]` is formed term-locally as a [`FormalLocalSum`]
//! whose weights are affine in the site index. Re-indexing each term to its
//! leftmost site gives a weight-linear part, which telescopes, and a constant
//! part; their sum is the range-`(r+1)` density of `Q_{r+1}`.

use crate::linalg::{self, CMatrix, C64, ZERO};
use crate::pauli::PauliVec;
use crate::tensor::{self, LocalDensity};
use crate::{Error, Result};

/// Relative size below which the site-linear remainder counts as zero.
pub const TELESCOPING_TOL: f64 = 1e-8;

pub const MAX_TOWER: usize = 6;

/// One term `(constant + slope·n) · density_{n + offset, …}` of a formal sum
/// over all sites `n`.
#[derive(Clone, Debug, PartialEq)]
pub struct FormalTerm {
    pub constant: C64,
    pub slope: C64,
    pub density: LocalDensity,
    pub offset: isize,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct FormalLocalSum {
    pub terms: Vec<FormalTerm>,
    /// Size of the inputs the terms were built from; the telescoping
    /// tolerance is relative to the larger of this and the sum itself.
    /// For a boost this is `‖h‖ · max(‖q‖, ‖h‖^(r-1))`, the size of a range-`r`
    /// charge grown from `h`, so that a charge which is zero up to rounding
    /// does not turn that rounding into a failure.
    pub magnitude: f64,
}

impl FormalLocalSum {
    /// `[Σ_n n H_{n,n+1}, Σ_m Q_{m..m+r-1}]` with one term per overlapping
    /// relative placement `n = m + k`, `k = -1 … r-1`, indexed by `m`.
    pub fn boost_commutator(h: &LocalDensity, q: &LocalDensity) -> Result<Self> {
        h.expect_range(2)?;
        let r = q.range();
        let mut terms = Vec::with_capacity(r + 1);
        for k in -1..=(r as isize - 1) {
            let offset = k.min(0);
            let width = (r as isize).max(k + 2) - offset;
            let width = width as usize;
            let h_at = (k - offset) as usize;
            let q_at = (-offset) as usize;
            let hm = tensor::embed_operator(h.matrix(), &[h_at, h_at + 1], width);
            let sites: Vec<usize> = (q_at..q_at + r).collect();
            let qm = tensor::embed_operator(q.matrix(), &sites, width);
            let density = LocalDensity::new(linalg::commutator(&hm, &qm))?;
            terms.push(FormalTerm { constant: C64::new(k as f64, 0.0), slope: C64::new(1.0, 0.0), density, offset });
        }
        Ok(Self { terms, magnitude: h.norm() * q.norm().max(h.norm().powi(r as i32 - 1)) })
    }

    /// Shifts every term so that its leftmost site is the summation index.
    pub fn reindexed(&self) -> Self {
        let terms = self
            .terms
            .iter()
            .map(|t| FormalTerm {
                constant: t.constant - t.slope * t.offset as f64,
                slope: t.slope,
                density: t.density.clone(),
                offset: 0,
            })
            .collect();
        Self { terms, magnitude: self.magnitude }
    }

    /// Collapses the sum to a single translation-invariant density of range
    /// `range`, moving the site-linear part through telescoping.
    ///
    /// Fails with [`Error::Telescoping`] when the site-linear part is not a sum
    /// of differences `Y ⊗ 1 - 1 ⊗ Y`, i.e. when the formal sum is not
    /// translation invariant.
    pub fn canonicalize(&self, range: usize) -> Result<LocalDensity> {
        let re = self.reindexed();
        let dim = 1usize << range;
        let mut d0 = CMatrix::zeros(dim, dim);
        let mut d1 = CMatrix::zeros(dim, dim);
        for t in &re.terms {
            let padded = t.density.padded(range).into_matrix();
            d0 += &padded * t.constant;
            d1 += &padded * t.slope;
        }
        let scale = linalg::frobenius(&d1).max(linalg::frobenius(&d0)).max(self.magnitude);
        let mut lin = PauliVec::from_matrix(&d1).into_coeffs();
        let mut constant = PauliVec::from_matrix(&d0).into_coeffs();
        // A string with p leading identities equals, as a weighted sum, the
        // left-justified string with weight n plus p times minus its plain sum.
        let width = 2 * range;
        for s in 0..lin.len() {
            let c = lin[s];
            if c == ZERO || s == 0 {
                continue;
            }
            let lead = (s.leading_zeros() as usize - (usize::BITS as usize - width)) / 2;
            if lead == 0 {
                continue;
            }
            let justified = s << (2 * lead);
            lin[s] = ZERO;
            lin[justified] += c;
            constant[justified] -= c * lead as f64;
        }
        let remainder = lin.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if remainder > TELESCOPING_TOL * scale.max(f64::MIN_POSITIVE) {
            return Err(Error::Telescoping { residual: remainder / scale });
        }
        LocalDensity::new(PauliVec::from_coeffs(range, constant).to_matrix())
    }
}

/// `[H ⊗ 1, 1 ⊗ H]`, the density of `Q_3`.
pub fn q3_density(h: &LocalDensity) -> Result<LocalDensity> {
    h.expect_range(2)?;
    let id = linalg::identity(2);
    let a = linalg::kron(h.matrix(), &id);
    let b = linalg::kron(&id, h.matrix());
    LocalDensity::new(linalg::commutator(&a, &b))
}

/// Density of `Q_{r+1} = [B[Q_2], Q_r]`, normalised so that
/// `boost_step(H, H) = [H ⊗ 1, 1 ⊗ H]`.
pub fn boost_step(h: &LocalDensity, q: &LocalDensity) -> Result<LocalDensity> {
    let formal = FormalLocalSum::boost_commutator(h, q)?;
    let d = formal.canonicalize(q.range() + 1)?;
    LocalDensity::new(-d.into_matrix())
}

#[derive(Clone, Debug, PartialEq)]
pub struct ChargeTower {
    hamiltonian: LocalDensity,
    densities: Vec<LocalDensity>,
}

impl ChargeTower {
    pub fn hamiltonian(&self) -> &LocalDensity {
        &self.hamiltonian
    }

    pub fn r_max(&self) -> usize {
        self.densities.len() + 1
    }

    /// Density of `Q_r`, `2 ≤ r ≤ r_max`.
    pub fn density(&self, r: usize) -> Option<&LocalDensity> {
        r.checked_sub(2).and_then(|i| self.densities.get(i))
    }

    pub fn densities(&self) -> &[LocalDensity] {
        &self.densities
    }
}

pub fn charge_tower(h: &LocalDensity, r_max: usize) -> Result<ChargeTower> {
    h.expect_range(2)?;
    if !(2..=MAX_TOWER).contains(&r_max) {
        return Err(Error::TowerRange(r_max));
    }
    let mut densities = vec![h.clone()];
    for _ in 2..r_max {
        let next = boost_step(h, densities.last().expect("non-empty"))?;
        densities.push(next);
    }
    Ok(ChargeTower { hamiltonian: h.clone(), densities })
}

/// `‖[Q_r, Q_s]‖_F / max(1, ‖q_r‖_F ‖q_s‖_F)` on a periodic chain, with `q`
/// the densities.
pub fn commutator_residual(qr: &LocalDensity, qs: &LocalDensity, length: usize) -> Result<f64> {
    let needed = qr.range() + qs.range();
    if length < needed {
        return Err(Error::ChainTooShort { r: qr.range(), s: qs.range(), needed, length });
    }
    let a = tensor::periodic_sum(qr, length)?;
    let b = tensor::periodic_sum(qs, length)?;
    let c = linalg::commutator(&a, &b);
    Ok(linalg::frobenius(&c) / (qr.norm() * qs.norm()).max(1.0))
}

pub fn verify_commutation(tower: &ChargeTower, pairs: &[(usize, usize)], length: usize) -> Result<Vec<f64>> {
    pairs
        .iter()
        .map(|&(r, s)| {
            let qr = tower.density(r).ok_or(Error::TowerRange(r))?;
            let qs = tower.density(s).ok_or(Error::TowerRange(s))?;
            commutator_residual(qr, qs, length)
        })
        .collect()
}
