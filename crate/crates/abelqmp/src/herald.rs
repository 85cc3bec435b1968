//! Heralded mixtures of group-covariant pure-state channels.

use std::collections::HashMap;

use rand::Rng;

use crate::eigen::{holevo_info, pgm_error, EigenList};
use crate::error::{Error, Result};
use crate::group::GroupSpec;

/// Default L-infinity tolerance for merging identical branches.
pub const MERGE_TOL: f64 = 1e-9;
/// Branches with smaller probability are dropped before normalizing.
pub const MIN_PROB: f64 = 1e-15;
/// Herald labels are truncated beyond this many entries.
pub const LABEL_CAP: usize = 32;

const PROB_SUM_TOL: f64 = 1e-9;

/// One herald value of a mixture.
#[derive(Clone, Debug, PartialEq)]
pub struct Branch {
    pub p: f64,
    pub lambda: EigenList,
    pub label: Vec<String>,
}

/// A finite ensemble `{(p_x, lambda_x)}` of covariant channels on one group.
#[derive(Clone, Debug, PartialEq)]
pub struct HeraldedMessage {
    group: GroupSpec,
    branches: Vec<Branch>,
}

pub(crate) fn concat_labels(a: &[String], b: &[String]) -> Vec<String> {
    let mut out = Vec::with_capacity((a.len() + b.len()).min(LABEL_CAP + 1));
    for s in a.iter().chain(b) {
        if out.len() == LABEL_CAP {
            out.push("...".to_string());
            break;
        }
        if out.len() > LABEL_CAP {
            break;
        }
        out.push(s.clone());
    }
    out
}

impl HeraldedMessage {
    /// Validates probabilities and branch groups.
    pub fn new(group: &GroupSpec, branches: Vec<Branch>) -> Result<Self> {
        if branches.is_empty() {
            return Err(Error::validation("heralded message has no branches"));
        }
        let mut total = 0.0;
        for b in &branches {
            group.ensure_same(b.lambda.group())?;
            if !(b.p >= 0.0) {
                return Err(Error::validation(format!("negative probability {}", b.p)));
            }
            total += b.p;
        }
        if (total - 1.0).abs() > PROB_SUM_TOL {
            return Err(Error::validation(format!(
                "branch probabilities sum to {total}"
            )));
        }
        Ok(HeraldedMessage {
            group: group.clone(),
            branches,
        })
    }

    pub(crate) fn from_parts(group: &GroupSpec, branches: Vec<Branch>) -> Self {
        HeraldedMessage {
            group: group.clone(),
            branches,
        }
    }

    /// A single branch with probability one.
    pub fn pure(lam: EigenList) -> Self {
        HeraldedMessage {
            group: lam.group().clone(),
            branches: vec![Branch {
                p: 1.0,
                lambda: lam,
                label: Vec::new(),
            }],
        }
    }

    pub fn group(&self) -> &GroupSpec {
        &self.group
    }

    pub fn branches(&self) -> &[Branch] {
        &self.branches
    }

    pub fn into_branches(self) -> Vec<Branch> {
        self.branches
    }

    pub fn len(&self) -> usize {
        self.branches.len()
    }

    pub fn is_empty(&self) -> bool {
        self.branches.is_empty()
    }

    /// The single eigen list of a one-branch message.
    pub fn as_pure(&self) -> Option<&EigenList> {
        match self.branches.as_slice() {
            [b] => Some(&b.lambda),
            _ => None,
        }
    }

    /// Merges branches whose eigen lists agree within `tol` (L-infinity),
    /// keeping the order of first appearance.
    pub fn merge_duplicates(self, tol: f64) -> Self {
        let group = self.group;
        let scale = if tol > 0.0 { 1.0 / tol } else { 1e15 };
        let key = |v: &[f64]| -> Vec<i64> { v.iter().map(|x| (x * scale).round() as i64).collect() };
        let mut slots: HashMap<Vec<i64>, usize> = HashMap::new();
        let mut out: Vec<Branch> = Vec::new();
        for b in self.branches {
            let k = key(b.lambda.values());
            match slots.get(&k) {
                Some(&i) => absorb(&mut out[i], b),
                None => {
                    slots.insert(k, out.len());
                    out.push(b);
                }
            }
        }
        // second pass catches pairs split across rounding boundaries
        if out.len() <= 4096 {
            let mut merged: Vec<Branch> = Vec::with_capacity(out.len());
            for b in out {
                match merged
                    .iter_mut()
                    .find(|m| m.lambda.max_abs_diff(&b.lambda) <= tol)
                {
                    Some(m) => absorb(m, b),
                    None => merged.push(b),
                }
            }
            out = merged;
        }
        HeraldedMessage {
            group,
            branches: out,
        }
    }

    /// Drops branches with probability below `eps` and renormalizes.
    pub fn prune(self, eps: f64) -> Result<Self> {
        if !(0.0..0.5).contains(&eps) {
            return Err(Error::validation(format!("prune epsilon {eps} outside [0, 0.5)")));
        }
        if eps == 0.0 {
            return Ok(self);
        }
        let group = self.group;
        let kept: Vec<Branch> = self.branches.into_iter().filter(|b| b.p >= eps).collect();
        let total: f64 = kept.iter().map(|b| b.p).sum();
        if kept.is_empty() || total <= 0.0 {
            return Err(Error::numerical("all branches pruned"));
        }
        let branches = kept
            .into_iter()
            .map(|mut b| {
                b.p /= total;
                b
            })
            .collect();
        Ok(HeraldedMessage { group, branches })
    }

    /// Draws one branch with its probability.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> &Branch {
        let probs: Vec<f64> = self.branches.iter().map(|b| b.p).collect();
        &self.branches[sample_index(&probs, rng)]
    }

    /// Branch-averaged Holevo information in bits.
    pub fn avg_holevo(&self) -> f64 {
        self.branches
            .iter()
            .map(|b| b.p * holevo_info(&b.lambda))
            .sum()
    }

    /// Branch-averaged PGM error.
    pub fn avg_pgm_error(&self) -> f64 {
        self.branches
            .iter()
            .map(|b| b.p * pgm_error(&b.lambda))
            .sum()
    }

    /// Merged branches sorted lexicographically by eigen list, for comparing
    /// mixtures independent of herald labelling.
    pub fn canonical_form(&self) -> Vec<(f64, Vec<f64>)> {
        let merged = self.clone().merge_duplicates(MERGE_TOL);
        let mut v: Vec<(f64, Vec<f64>)> = merged
            .branches
            .into_iter()
            .filter(|b| b.p > 1e-13)
            .map(|b| (b.p, b.lambda.into_values()))
            .collect();
        v.sort_by(|a, b| {
            a.1.iter()
                .zip(&b.1)
                .map(|(x, y)| x.total_cmp(y))
                .find(|o| o.is_ne())
                .unwrap_or(std::cmp::Ordering::Equal)
        });
        v
    }

    /// Largest deviation between canonical forms, or infinity when the
    /// number of distinct branches differs.
    pub fn max_deviation(&self, other: &HeraldedMessage) -> f64 {
        let a = self.canonical_form();
        let b = other.canonical_form();
        if a.len() != b.len() || self.group != other.group {
            return f64::INFINITY;
        }
        a.iter()
            .zip(&b)
            .map(|(x, y)| {
                let dl = x
                    .1
                    .iter()
                    .zip(&y.1)
                    .map(|(p, q)| (p - q).abs())
                    .fold(0.0, f64::max);
                dl.max((x.0 - y.0).abs())
            })
            .fold(0.0, f64::max)
    }
}

fn absorb(into: &mut Branch, b: Branch) {
    into.p += b.p;
    into.label = concat_labels(&into.label, &b.label);
}

/// Inverse-CDF draw from unnormalized weights.
pub fn sample_index<R: Rng + ?Sized>(probs: &[f64], rng: &mut R) -> usize {
    let total: f64 = probs.iter().sum();
    let u = rng.gen::<f64>() * total;
    let mut acc = 0.0;
    let mut last = 0;
    for (i, &p) in probs.iter().enumerate() {
        if p <= 0.0 {
            continue;
        }
        acc += p;
        last = i;
        if u < acc {
            return i;
        }
    }
    last
}
