//! Eigen lists of group-covariant pure-state channels and their scalar
//! functionals.

use num_complex::Complex64;

use crate::dual::gram_row_from_eigenlist;
use crate::error::{Error, Result};
use crate::group::GroupSpec;

/// Largest allowed negative entry before clipping to zero.
pub const NEGATIVE_TOL: f64 = 1e-9;
/// Relative tolerance on `sum lambda = |G|`.
pub const SUM_TOL: f64 = 1e-6;

/// Eigenvalues of the Gram matrix indexed by characters in canonical order.
#[derive(Clone, Debug, PartialEq)]
pub struct EigenList {
    group: GroupSpec,
    values: Vec<f64>,
}

impl EigenList {
    /// Validates length, sign and trace, clipping tiny negatives.
    pub fn new(group: &GroupSpec, mut values: Vec<f64>) -> Result<Self> {
        let n = group.order();
        if values.len() != n {
            return Err(Error::validation(format!(
                "eigen list has {} entries, group {} has order {}",
                values.len(),
                group,
                n
            )));
        }
        for (i, v) in values.iter_mut().enumerate() {
            if !v.is_finite() {
                return Err(Error::validation(format!(
                    "eigen list entry {} is not finite",
                    group.label(i)
                )));
            }
            if *v < -NEGATIVE_TOL {
                return Err(Error::validation(format!(
                    "eigen list entry {} = {} is negative",
                    group.label(i),
                    v
                )));
            }
            if *v < 0.0 {
                *v = 0.0;
            }
        }
        let sum: f64 = values.iter().sum();
        if (sum - n as f64).abs() > SUM_TOL * n as f64 {
            return Err(Error::validation(format!(
                "eigen list sums to {sum}, expected {n}"
            )));
        }
        Ok(EigenList {
            group: group.clone(),
            values,
        })
    }

    pub(crate) fn from_raw(group: &GroupSpec, values: Vec<f64>) -> Self {
        debug_assert_eq!(values.len(), group.order());
        EigenList {
            group: group.clone(),
            values,
        }
    }

    /// Identical output states: `(|G|, 0, ..., 0)`.
    pub fn useless(group: &GroupSpec) -> Self {
        let mut v = vec![0.0; group.order()];
        v[0] = group.order() as f64;
        EigenList::from_raw(group, v)
    }

    /// Orthonormal output states: all ones.
    pub fn perfect(group: &GroupSpec) -> Self {
        EigenList::from_raw(group, vec![1.0; group.order()])
    }

    pub fn group(&self) -> &GroupSpec {
        &self.group
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    /// Normalized list `mu = lambda / |G|`.
    pub fn normalized(&self) -> Vec<f64> {
        let n = self.group.order() as f64;
        self.values.iter().map(|v| v / n).collect()
    }

    pub fn max_abs_diff(&self, other: &EigenList) -> f64 {
        self.values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

/// Re-checks the invariants of an eigen list.
pub fn validate(lam: &EigenList) -> Result<()> {
    EigenList::new(lam.group(), lam.values().to_vec()).map(|_| ())
}

/// First row `gamma_g = <psi_e|psi_g>` of a Gram matrix, indexed by elements.
#[derive(Clone, Debug, PartialEq)]
pub struct GramRow {
    group: GroupSpec,
    values: Vec<Complex64>,
}

impl GramRow {
    /// Validates `gamma_e = 1`, conjugate symmetry and `|gamma_g| <= 1`.
    pub fn new(group: &GroupSpec, values: Vec<Complex64>) -> Result<Self> {
        const TOL: f64 = 1e-9;
        if values.len() != group.order() {
            return Err(Error::validation("gram row length differs from group order"));
        }
        if (values[0] - Complex64::new(1.0, 0.0)).norm() > TOL {
            return Err(Error::validation("gram row must have gamma_e = 1"));
        }
        for (g, v) in values.iter().enumerate() {
            if v.norm() > 1.0 + TOL {
                return Err(Error::validation(format!(
                    "|gamma_{}| exceeds 1",
                    group.label(g)
                )));
            }
            if (values[group.neg_idx(g)] - v.conj()).norm() > TOL {
                return Err(Error::validation(format!(
                    "gram row is not conjugate symmetric at {}",
                    group.label(g)
                )));
            }
        }
        Ok(GramRow {
            group: group.clone(),
            values,
        })
    }

    pub(crate) fn new_unchecked(group: &GroupSpec, values: Vec<Complex64>) -> Self {
        GramRow {
            group: group.clone(),
            values,
        }
    }

    pub fn group(&self) -> &GroupSpec {
        &self.group
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }
}

/// Shannon entropy in bits of a probability vector.
pub fn entropy_bits(p: &[f64]) -> f64 {
    p.iter()
        .filter(|&&x| x > 0.0)
        .map(|&x| -x * x.log2())
        .sum()
}

/// Symmetric Holevo information `H(mu)` in bits.
pub fn holevo_info(lam: &EigenList) -> f64 {
    entropy_bits(&lam.normalized())
}

/// Average overlap magnitude `(1/(|G|-1)) sum_{g != e} |gamma_g|`.
pub fn channel_fidelity(lam: &EigenList) -> f64 {
    let n = lam.group().order();
    if n < 2 {
        return 1.0;
    }
    let row = gram_row_from_eigenlist(lam);
    row.values()[1..].iter().map(|v| v.norm()).sum::<f64>() / (n - 1) as f64
}

/// Pretty-good-measurement error `1 - ((1/|G|) sum sqrt(lambda))^2`.
pub fn pgm_error(lam: &EigenList) -> f64 {
    pgm_error_values(lam.values())
}

pub(crate) fn pgm_error_values(v: &[f64]) -> f64 {
    let n = v.len() as f64;
    let s: f64 = v.iter().map(|x| x.max(0.0).sqrt()).sum::<f64>() / n;
    (1.0 - s * s).max(0.0)
}
