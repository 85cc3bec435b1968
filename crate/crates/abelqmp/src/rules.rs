//! Local update rules on eigen lists and their herald-lifted versions on
//! heralded mixtures.
//!
//! Each herald-producing rule is split into a probability pass and a branch
//! constructor so that sampled decoders can build only the drawn branch.

use rand::Rng;

use crate::dual::{CosetTable, DualMap, DualSubgroup};
use crate::eigen::EigenList;
use crate::error::{Error, Result};
use crate::group::{GroupSpec, HomSpec};
use crate::herald::{concat_labels, sample_index, Branch, HeraldedMessage, MERGE_TOL, MIN_PROB};

/// Tolerance for the support condition of the supported homomorphism rule.
pub const SUPPORT_TOL: f64 = 1e-9;

fn same(a: &EigenList, b: &EigenList) -> Result<()> {
    a.group().ensure_same(b.group())
}

/// Herald probabilities `p_chi` of the check rule.
pub fn check_probs(l1: &[f64], l2: &[f64], g: &GroupSpec) -> Vec<f64> {
    let n = g.order();
    let scale = 1.0 / (n * n) as f64;
    (0..n)
        .map(|chi| {
            l2.iter()
                .enumerate()
                .filter(|(_, &b)| b != 0.0)
                .map(|(c2, &b)| l1[g.add_idx(chi, c2)] * b)
                .sum::<f64>()
                * scale
        })
        .collect()
}

/// Branch list of the check rule at herald `chi` with probability `p`.
pub fn check_branch(l1: &[f64], l2: &[f64], g: &GroupSpec, chi: usize, p: f64) -> Vec<f64> {
    let denom = g.order() as f64 * p;
    l2.iter()
        .enumerate()
        .map(|(c2, &b)| l1[g.add_idx(chi, c2)] * b / denom)
        .collect()
}

/// Check factor `h = g1 g2`: heralds are the characters of the group.
pub fn check_combine(l1: &EigenList, l2: &EigenList) -> Result<HeraldedMessage> {
    same(l1, l2)?;
    let g = l1.group();
    let probs = check_probs(l1.values(), l2.values(), g);
    Ok(assemble(g, &probs, |chi, p| {
        (
            check_branch(l1.values(), l2.values(), g, chi, p),
            format!("check:\u{3c7}={}", g.label(chi)),
        )
    }))
}

/// Equality factor: dual-group convolution scaled by `1/|G|`.
pub fn equality_combine(l1: &EigenList, l2: &EigenList) -> Result<EigenList> {
    same(l1, l2)?;
    let g = l1.group();
    Ok(EigenList::from_raw(
        g,
        equality_values(l1.values(), l2.values(), g),
    ))
}

pub(crate) fn equality_values(l1: &[f64], l2: &[f64], g: &GroupSpec) -> Vec<f64> {
    let n = g.order();
    let mut out = vec![0.0; n];
    let nz2: Vec<(usize, f64)> = l2
        .iter()
        .enumerate()
        .filter(|(_, &b)| b != 0.0)
        .map(|(i, &b)| (i, b))
        .collect();
    let inv = 1.0 / n as f64;
    for (a, &x) in l1.iter().enumerate() {
        if x == 0.0 {
            continue;
        }
        let xs = x * inv;
        for &(b, y) in &nz2 {
            out[g.add_idx(a, b)] += xs * y;
        }
    }
    out
}

/// Precomputed data for pushing eigen lists through a homomorphism.
///
/// A non-surjective map is replaced by its corestriction onto the image.
#[derive(Clone, Debug)]
pub struct HomRule {
    hom: HomSpec,
    dual: DualMap,
    cosets: CosetTable,
    restricted: bool,
}

impl HomRule {
    pub fn new(hom: &HomSpec) -> Result<Self> {
        let (surj, restricted) = if hom.is_surjective()? {
            (hom.clone(), false)
        } else {
            (hom.restrict_to_image()?.surjection, true)
        };
        let dual = DualMap::new(&surj)?;
        let sub = DualSubgroup::new(surj.source(), dual.as_slice().to_vec())?;
        let cosets = CosetTable::new(&sub);
        Ok(HomRule {
            hom: surj,
            dual,
            cosets,
            restricted,
        })
    }

    /// The surjective map actually used.
    pub fn hom(&self) -> &HomSpec {
        &self.hom
    }

    pub fn dual(&self) -> &DualMap {
        &self.dual
    }

    pub fn cosets(&self) -> &CosetTable {
        &self.cosets
    }

    /// Whether the codomain was restricted to the image.
    pub fn restricted(&self) -> bool {
        self.restricted
    }

    pub fn probs(&self, lam: &[f64]) -> Vec<f64> {
        let mut p = vec![0.0; self.cosets.reps().len()];
        for (chi, &v) in lam.iter().enumerate() {
            p[self.cosets.coset_of(chi)] += v;
        }
        let inv = 1.0 / self.hom.source().order() as f64;
        p.iter_mut().for_each(|x| *x *= inv);
        p
    }

    pub fn branch(&self, lam: &[f64], coset: usize, p: f64) -> Vec<f64> {
        let src = self.hom.source();
        let tgt = self.hom.target();
        let scale = tgt.order() as f64 / (src.order() as f64 * p);
        let rep = self.cosets.reps()[coset];
        (0..tgt.order())
            .map(|xi| lam[src.add_idx(rep, self.dual.apply_idx(xi))] * scale)
            .collect()
    }

    pub fn push(&self, lam: &EigenList) -> Result<HeraldedMessage> {
        self.hom.source().ensure_same(lam.group())?;
        let probs = self.probs(lam.values());
        let src = self.hom.source();
        Ok(assemble(self.hom.target(), &probs, |k, p| {
            (
                self.branch(lam.values(), k, p),
                format!("hom:\u{3b7}={}", src.label(self.cosets.reps()[k])),
            )
        }))
    }

    pub fn push_supported(&self, lam: &EigenList) -> Result<EigenList> {
        self.hom.source().ensure_same(lam.group())?;
        let src = self.hom.source();
        if let Some((chi, _)) = lam
            .values()
            .iter()
            .enumerate()
            .find(|&(chi, &v)| self.cosets.coset_of(chi) != 0 && v > SUPPORT_TOL)
        {
            return Err(Error::SupportViolation(src.label(chi)));
        }
        let scale = self.hom.target().order() as f64 / src.order() as f64;
        let v = (0..self.hom.target().order())
            .map(|xi| lam.values()[self.dual.apply_idx(xi)] * scale)
            .collect();
        Ok(EigenList::from_raw(self.hom.target(), v))
    }
}

/// Surjective homomorphism factor; a non-surjective map is first corestricted
/// to its image, which becomes the output group.
pub fn hom_push(lam: &EigenList, hom: &HomSpec) -> Result<HeraldedMessage> {
    HomRule::new(hom)?.push(lam)
}

/// Homomorphism factor when the input is supported on `Im phi-hat`.
pub fn hom_push_supported(lam: &EigenList, hom: &HomSpec) -> Result<EigenList> {
    hom.ensure_surjective()?;
    HomRule::new(hom)?.push_supported(lam)
}

/// Pull a target-side eigen list back along a homomorphism.
#[derive(Clone, Debug)]
pub struct LiftRule {
    dual: DualMap,
}

impl LiftRule {
    pub fn new(hom: &HomSpec) -> Result<Self> {
        Ok(LiftRule {
            dual: DualMap::new(hom)?,
        })
    }

    pub fn hom(&self) -> &HomSpec {
        self.dual.hom()
    }

    pub fn lift_values(&self, lam: &[f64]) -> Vec<f64> {
        let h = self.dual.hom();
        let scale = h.source().order() as f64 / h.target().order() as f64;
        let mut out = vec![0.0; h.source().order()];
        for (xi, &v) in lam.iter().enumerate() {
            out[self.dual.apply_idx(xi)] += v * scale;
        }
        out
    }

    pub fn lift(&self, lam: &EigenList) -> Result<EigenList> {
        self.dual.hom().target().ensure_same(lam.group())?;
        Ok(EigenList::from_raw(
            self.dual.hom().source(),
            self.lift_values(lam.values()),
        ))
    }
}

/// `lambda_chi = (|G1|/|G2|) lambda_xi` when `chi = phi-hat(xi)`, else 0.
pub fn lift_along_hom(lam: &EigenList, hom: &HomSpec) -> Result<EigenList> {
    hom.ensure_surjective()?;
    LiftRule::new(hom)?.lift(lam)
}

fn split_groups(g: &GroupSpec, keep: usize) -> Result<(GroupSpec, GroupSpec)> {
    if keep > g.rank() {
        return Err(Error::validation(format!(
            "cannot keep {keep} coordinates of {g}"
        )));
    }
    Ok((
        GroupSpec::new(g.moduli()[..keep].to_vec())?,
        GroupSpec::new(g.moduli()[keep..].to_vec())?,
    ))
}

pub(crate) fn marginal_probs(lam: &[f64], n1: usize, n2: usize) -> Vec<f64> {
    let inv = 1.0 / (n1 * n2) as f64;
    (0..n2)
        .map(|eta| lam[eta * n1..(eta + 1) * n1].iter().sum::<f64>() * inv)
        .collect()
}

pub(crate) fn marginal_branch(lam: &[f64], n1: usize, n2: usize, eta: usize, p: f64) -> Vec<f64> {
    let denom = n2 as f64 * p;
    lam[eta * n1..(eta + 1) * n1].iter().map(|v| v / denom).collect()
}

/// Marginalize `G1 x G2` onto the first `keep` coordinates; heralds are the
/// characters of the discarded block.
pub fn marginalize_split(lam: &EigenList, keep: usize) -> Result<HeraldedMessage> {
    let (g1, g2) = split_groups(lam.group(), keep)?;
    let (n1, n2) = (g1.order(), g2.order());
    let probs = marginal_probs(lam.values(), n1, n2);
    Ok(assemble(&g1, &probs, |eta, p| {
        (
            marginal_branch(lam.values(), n1, n2, eta, p),
            format!("marg:\u{3b7}={}", g2.label(eta)),
        )
    }))
}

/// `lambda'_chi = lambda_{phi-hat(chi)}` for an automorphism `phi`.
pub fn apply_automorphism(lam: &EigenList, phi: &HomSpec) -> Result<EigenList> {
    if !phi.is_automorphism()? {
        return Err(Error::NotAutomorphism);
    }
    phi.source().ensure_same(lam.group())?;
    let dm = DualMap::new(phi)?;
    Ok(EigenList::from_raw(
        lam.group(),
        permute_values(lam.values(), dm.as_slice()),
    ))
}

pub(crate) fn permute_values(lam: &[f64], map: &[usize]) -> Vec<f64> {
    map.iter().map(|&j| lam[j]).collect()
}

/// Relabel `chi -> chi^{-1}`, the channel `g -> W(g^{-1})`.
pub fn inverse_relabel(lam: &EigenList) -> EigenList {
    let g = lam.group();
    let v = (0..g.order()).map(|chi| lam.values()[g.neg_idx(chi)]).collect();
    EigenList::from_raw(g, v)
}

/// Adjoin a fresh uniform coordinate group `fresh` in front of `lam`.
pub fn adjoin_uniform(lam: &EigenList, fresh: &GroupSpec) -> EigenList {
    let out_group = fresh.product(lam.group());
    EigenList::from_raw(&out_group, adjoin_values(lam.values(), fresh.order()))
}

pub(crate) fn adjoin_values(lam: &[f64], q: usize) -> Vec<f64> {
    let mut out = vec![0.0; lam.len() * q];
    for (z, &v) in lam.iter().enumerate() {
        out[z * q] = v * q as f64;
    }
    out
}

/// Builds a message from herald probabilities, dropping negligible heralds
/// before division and renormalizing.
fn assemble(
    g: &GroupSpec,
    probs: &[f64],
    mut branch: impl FnMut(usize, f64) -> (Vec<f64>, String),
) -> HeraldedMessage {
    let total: f64 = probs.iter().filter(|&&p| p >= MIN_PROB).sum();
    let branches = probs
        .iter()
        .enumerate()
        .filter(|(_, &p)| p >= MIN_PROB)
        .map(|(h, &p)| {
            let (v, label) = branch(h, p);
            Branch {
                p: p / total,
                lambda: EigenList::from_raw(g, v),
                label: vec![label],
            }
        })
        .collect();
    HeraldedMessage::from_parts(g, branches)
}

/// Draws a herald index from rule probabilities.
pub fn draw<R: Rng + ?Sized>(probs: &[f64], rng: &mut R) -> usize {
    sample_index(probs, rng)
}

fn lift_unary(
    m: &HeraldedMessage,
    out_group: &GroupSpec,
    mut f: impl FnMut(&EigenList) -> Result<HeraldedMessage>,
) -> Result<HeraldedMessage> {
    let mut out = Vec::new();
    for b in m.branches() {
        for c in f(&b.lambda)?.into_branches() {
            let p = b.p * c.p;
            if p < MIN_PROB {
                continue;
            }
            out.push(Branch {
                p,
                lambda: c.lambda,
                label: concat_labels(&b.label, &c.label),
            });
        }
    }
    finish(out_group, out)
}

fn lift_binary(
    m1: &HeraldedMessage,
    m2: &HeraldedMessage,
    out_group: &GroupSpec,
    mut f: impl FnMut(&EigenList, &EigenList) -> Result<HeraldedMessage>,
) -> Result<HeraldedMessage> {
    m1.group().ensure_same(m2.group())?;
    let mut out = Vec::new();
    for a in m1.branches() {
        for b in m2.branches() {
            let pab = a.p * b.p;
            if pab < MIN_PROB {
                continue;
            }
            let ab = concat_labels(&a.label, &b.label);
            for c in f(&a.lambda, &b.lambda)?.into_branches() {
                let p = pab * c.p;
                if p < MIN_PROB {
                    continue;
                }
                out.push(Branch {
                    p,
                    lambda: c.lambda,
                    label: concat_labels(&ab, &c.label),
                });
            }
        }
    }
    finish(out_group, out)
}

fn finish(g: &GroupSpec, mut out: Vec<Branch>) -> Result<HeraldedMessage> {
    let total: f64 = out.iter().map(|b| b.p).sum();
    if out.is_empty() || total <= 0.0 {
        return Err(Error::numerical("all branches have negligible probability"));
    }
    out.iter_mut().for_each(|b| b.p /= total);
    Ok(HeraldedMessage::from_parts(g, out).merge_duplicates(MERGE_TOL))
}

/// Herald-lifted check rule.
pub fn check_mixed(m1: &HeraldedMessage, m2: &HeraldedMessage) -> Result<HeraldedMessage> {
    lift_binary(m1, m2, m1.group(), check_combine)
}

/// Herald-lifted equality rule.
pub fn equality_mixed(m1: &HeraldedMessage, m2: &HeraldedMessage) -> Result<HeraldedMessage> {
    lift_binary(m1, m2, m1.group(), |a, b| {
        equality_combine(a, b).map(HeraldedMessage::pure)
    })
}

/// Herald-lifted homomorphism rule.
pub fn hom_push_mixed(m: &HeraldedMessage, rule: &HomRule) -> Result<HeraldedMessage> {
    lift_unary(m, rule.hom().target(), |l| rule.push(l))
}

/// Herald-lifted lift along a homomorphism.
pub fn lift_mixed(m: &HeraldedMessage, rule: &LiftRule) -> Result<HeraldedMessage> {
    lift_unary(m, rule.hom().source(), |l| rule.lift(l).map(HeraldedMessage::pure))
}

/// Herald-lifted marginalization.
pub fn marginalize_mixed(m: &HeraldedMessage, keep: usize) -> Result<HeraldedMessage> {
    let (g1, _) = split_groups(m.group(), keep)?;
    lift_unary(m, &g1, |l| marginalize_split(l, keep))
}

/// Herald-lifted automorphism rule.
pub fn automorphism_mixed(m: &HeraldedMessage, phi: &HomSpec) -> Result<HeraldedMessage> {
    if !phi.is_automorphism()? {
        return Err(Error::NotAutomorphism);
    }
    phi.source().ensure_same(m.group())?;
    let dm = DualMap::new(phi)?;
    let branches = m
        .branches()
        .iter()
        .map(|b| Branch {
            p: b.p,
            lambda: EigenList::from_raw(m.group(), permute_values(b.lambda.values(), dm.as_slice())),
            label: b.label.clone(),
        })
        .collect();
    Ok(HeraldedMessage::from_parts(m.group(), branches))
}

/// Herald-lifted inverse relabeling.
pub fn inverse_relabel_mixed(m: &HeraldedMessage) -> HeraldedMessage {
    let branches = m
        .branches()
        .iter()
        .map(|b| Branch {
            p: b.p,
            lambda: inverse_relabel(&b.lambda),
            label: b.label.clone(),
        })
        .collect();
    HeraldedMessage::from_parts(m.group(), branches)
}

/// Left fold of the check rule, realizing `h = g1 g2 ... gk`.
pub fn check_fold(msgs: &[HeraldedMessage]) -> Result<HeraldedMessage> {
    let (first, rest) = msgs
        .split_first()
        .ok_or_else(|| Error::validation("check fold of no messages"))?;
    rest.iter()
        .try_fold(first.clone(), |acc, m| check_mixed(&acc, m))
}

/// Left fold of the equality rule.
pub fn equality_fold(msgs: &[HeraldedMessage]) -> Result<HeraldedMessage> {
    let (first, rest) = msgs
        .split_first()
        .ok_or_else(|| Error::validation("equality fold of no messages"))?;
    rest.iter()
        .try_fold(first.clone(), |acc, m| equality_mixed(&acc, m))
}

/// Check rule drawing a single herald.
pub fn check_sampled<R: Rng + ?Sized>(l1: &EigenList, l2: &EigenList, rng: &mut R) -> Result<EigenList> {
    same(l1, l2)?;
    let g = l1.group();
    let probs = check_probs(l1.values(), l2.values(), g);
    let chi = draw(&probs, rng);
    Ok(EigenList::from_raw(
        g,
        check_branch(l1.values(), l2.values(), g, chi, probs[chi]),
    ))
}

/// Homomorphism rule drawing a single coset herald.
pub fn hom_sampled<R: Rng + ?Sized>(lam: &EigenList, rule: &HomRule, rng: &mut R) -> Result<EigenList> {
    rule.hom().source().ensure_same(lam.group())?;
    let probs = rule.probs(lam.values());
    let k = draw(&probs, rng);
    Ok(EigenList::from_raw(
        rule.hom().target(),
        rule.branch(lam.values(), k, probs[k]),
    ))
}

/// Marginalization drawing a single discarded-block character.
pub fn marginalize_sampled<R: Rng + ?Sized>(lam: &EigenList, keep: usize, rng: &mut R) -> Result<EigenList> {
    let (g1, g2) = split_groups(lam.group(), keep)?;
    let (n1, n2) = (g1.order(), g2.order());
    let probs = marginal_probs(lam.values(), n1, n2);
    let eta = draw(&probs, rng);
    Ok(EigenList::from_raw(
        &g1,
        marginal_branch(lam.values(), n1, n2, eta, probs[eta]),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn g(m: &[usize]) -> GroupSpec {
        GroupSpec::new(m.to_vec()).unwrap()
    }

    fn el(gr: &GroupSpec, v: &[f64]) -> EigenList {
        EigenList::new(gr, v.to_vec()).unwrap()
    }

    fn assert_close(a: &[f64], b: &[f64], tol: f64) {
        assert_eq!(a.len(), b.len());
        for (x, y) in a.iter().zip(b) {
            assert!((x - y).abs() <= tol, "{a:?} vs {b:?}");
        }
    }

    #[test]
    fn check_with_useless_partner() {
        let z = g(&[3, 2]);
        let l1 = el(&z, &[2.0, 1.0, 0.0, 2.0, 1.0, 0.0]);
        let m = check_combine(&l1, &EigenList::useless(&z)).unwrap();
        for b in m.branches() {
            assert_close(b.lambda.values(), EigenList::useless(&z).values(), 1e-12);
        }
        let ps: Vec<f64> = m.branches().iter().map(|b| b.p).collect();
        assert_close(&ps, &[2.0 / 6.0, 1.0 / 6.0, 2.0 / 6.0, 1.0 / 6.0], 1e-12);
    }

    #[test]
    fn check_with_perfect_partner_reindexes() {
        let z = g(&[3, 2]);
        let l1 = el(&z, &[2.0, 1.0, 0.0, 2.0, 1.0, 0.0]);
        let m = check_combine(&l1, &EigenList::perfect(&z)).unwrap();
        assert_eq!(m.len(), 6);
        for (chi, b) in m.branches().iter().enumerate() {
            assert!((b.p - 1.0 / 6.0).abs() < 1e-12);
            let expect: Vec<f64> = (0..6).map(|c| l1.values()[z.add_idx(chi, c)]).collect();
            assert_close(b.lambda.values(), &expect, 1e-12);
        }
    }

    #[test]
    fn equality_identities() {
        let z = g(&[3, 2]);
        let l1 = el(&z, &[2.0, 1.0, 0.0, 2.0, 1.0, 0.0]);
        let u = equality_combine(&l1, &EigenList::useless(&z)).unwrap();
        assert_close(u.values(), l1.values(), 1e-12);
        let p = equality_combine(&l1, &EigenList::perfect(&z)).unwrap();
        assert_close(p.values(), &[1.0; 6], 1e-12);
    }

    #[test]
    fn identity_hom_push() {
        let z = g(&[3, 2]);
        let l1 = el(&z, &[2.0, 1.0, 0.0, 2.0, 1.0, 0.0]);
        let m = hom_push(&l1, &HomSpec::identity(&z)).unwrap();
        assert_eq!(m.len(), 1);
        assert_eq!(m.branches()[0].label, vec!["hom:\u{3b7}=(0,0)"]);
        assert_close(m.branches()[0].lambda.values(), l1.values(), 1e-12);
        let s = hom_push_supported(&l1, &HomSpec::identity(&z)).unwrap();
        assert_close(s.values(), l1.values(), 1e-12);
    }

    #[test]
    fn lift_projection() {
        let z = g(&[3, 2]);
        let p = HomSpec::projection(&z, &[0]).unwrap();
        let l = lift_along_hom(&EigenList::useless(&g(&[3])), &p).unwrap();
        assert_close(l.values(), &[6.0, 0.0, 0.0, 0.0, 0.0, 0.0], 0.0);
        let l = lift_along_hom(&EigenList::perfect(&g(&[3])), &p).unwrap();
        assert_close(l.values(), &[2.0, 2.0, 2.0, 0.0, 0.0, 0.0], 0.0);
        let back = hom_push_supported(&l, &p).unwrap();
        assert_close(back.values(), &[1.0; 3], 1e-15);
    }

    #[test]
    fn marginalize_cases() {
        let z = g(&[3, 2]);
        let m = marginalize_split(&el(&z, &[2.0, 2.0, 2.0, 0.0, 0.0, 0.0]), 1).unwrap();
        assert_eq!(m.len(), 1);
        assert_close(m.branches()[0].lambda.values(), &[1.0; 3], 1e-15);
        let m = marginalize_split(&EigenList::perfect(&z), 1).unwrap();
        assert_eq!(m.len(), 2);
        assert!(m.branches().iter().all(|b| (b.p - 0.5).abs() < 1e-15));
        // separable lambda(chi, eta) = la_chi lb_eta
        let la = [2.0, 0.5, 0.5];
        let lb = [1.5, 0.5];
        let prod: Vec<f64> = (0..6).map(|i| la[i % 3] * lb[i / 3]).collect();
        let m = marginalize_split(&el(&z, &prod), 1).unwrap();
        for (eta, b) in m.branches().iter().enumerate() {
            assert!((b.p - lb[eta] / 2.0).abs() < 1e-15);
            assert_close(b.lambda.values(), &la, 1e-15);
        }
    }

    #[test]
    fn automorphism_examples() {
        let z3 = g(&[3]);
        let out = apply_automorphism(&el(&z3, &[1.0, 2.0, 0.0]), &HomSpec::inversion(&z3)).unwrap();
        assert_close(out.values(), &[1.0, 0.0, 2.0], 0.0);
        let z22 = g(&[2, 2]);
        let swap = HomSpec::permute_coordinates(&z22, &[1, 0]).unwrap();
        let out = apply_automorphism(&el(&z22, &[1.5, 0.5, 1.25, 0.75]), &swap).unwrap();
        assert_close(out.values(), &[1.5, 1.25, 0.5, 0.75], 0.0);
        let dbl = HomSpec::new(g(&[4]), g(&[4]), vec![vec![2]]).unwrap();
        assert!(apply_automorphism(&EigenList::perfect(&g(&[4])), &dbl).is_err());
    }

    #[test]
    fn adjoin_matches_lift() {
        let z3 = g(&[3]);
        let a = adjoin_uniform(&EigenList::perfect(&z3), &z3);
        let proj = HomSpec::projection(&a.group().clone(), &[1]).unwrap();
        let l = lift_along_hom(&EigenList::perfect(&z3), &proj).unwrap();
        assert_eq!(a, l);
        let b = adjoin_uniform(&EigenList::useless(&z3), &g(&[2]));
        assert_close(b.values(), &[6.0, 0.0, 0.0, 0.0, 0.0, 0.0], 0.0);
    }

    #[test]
    fn pure_inputs_lift_to_pure_rule() {
        let z = g(&[3, 2]);
        let l1 = el(&z, &[2.0, 1.0, 0.0, 2.0, 1.0, 0.0]);
        let l2 = el(&z, &[2.0, 0.0, 1.0, 1.0, 0.0, 2.0]);
        let direct = check_combine(&l1, &l2).unwrap().merge_duplicates(MERGE_TOL);
        let lifted =
            check_mixed(&HeraldedMessage::pure(l1.clone()), &HeraldedMessage::pure(l2.clone()))
                .unwrap();
        assert!(direct.max_deviation(&lifted) < 1e-15);
        let two = HeraldedMessage::new(
            &z,
            vec![
                Branch { p: 0.3, lambda: l1.clone(), label: vec![] },
                Branch { p: 0.7, lambda: l2.clone(), label: vec![] },
            ],
        )
        .unwrap();
        let e = equality_mixed(&two, &two).unwrap();
        assert!(e.len() <= 4);
        let total: f64 = e.branches().iter().map(|b| b.p).sum();
        assert!((total - 1.0).abs() < 1e-15);
    }
}
