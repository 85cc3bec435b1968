//! Characters of finite abelian groups, dual maps of homomorphisms and coset
//! tables of dual-image subgroups.
//!
//! The dual group is identified with the group itself: the character with
//! residues `u` evaluates as `exp(2 pi i sum_j u_j a_j / n_j)`.

use std::f64::consts::TAU;

use num_complex::Complex64;

use crate::eigen::{EigenList, GramRow};
use crate::error::{Error, Result};
use crate::group::{lcm, tuple_label, GroupElement, GroupSpec, HomSpec};

/// A character of a group, stored by its residue vector.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CharIndex {
    group: GroupSpec,
    residues: Vec<usize>,
}

impl CharIndex {
    pub fn new(group: &GroupSpec, residues: Vec<usize>) -> Result<Self> {
        let e = group.element(residues)?;
        Ok(CharIndex {
            group: group.clone(),
            residues: e.residues().to_vec(),
        })
    }

    pub fn at(group: &GroupSpec, idx: usize) -> Self {
        CharIndex {
            group: group.clone(),
            residues: group.residues_of(idx),
        }
    }

    pub fn trivial(group: &GroupSpec) -> Self {
        CharIndex::at(group, 0)
    }

    pub fn group(&self) -> &GroupSpec {
        &self.group
    }

    pub fn residues(&self) -> &[usize] {
        &self.residues
    }

    pub fn index(&self) -> usize {
        self.group.index_of(&self.residues)
    }

    /// Pointwise product of characters.
    pub fn op(&self, other: &CharIndex) -> Result<CharIndex> {
        self.group.ensure_same(&other.group)?;
        Ok(CharIndex::at(
            &self.group,
            self.group.add_idx(self.index(), other.index()),
        ))
    }

    pub fn inv(&self) -> CharIndex {
        CharIndex::at(&self.group, self.group.neg_idx(self.index()))
    }

    pub fn label(&self) -> String {
        tuple_label(&self.residues)
    }
}

/// Evaluation tables for all characters of a group, using reduced rational
/// phases over the least common multiple of the moduli.
#[derive(Clone, Debug)]
pub struct Characters {
    group: GroupSpec,
    scale: Vec<usize>,
    lcm: usize,
    roots: Vec<Complex64>,
}

impl Characters {
    pub fn new(group: &GroupSpec) -> Self {
        let l = group.moduli().iter().copied().fold(1, lcm);
        let scale = group.moduli().iter().map(|&n| l / n).collect();
        let roots = (0..l)
            .map(|k| {
                let t = TAU * k as f64 / l as f64;
                Complex64::new(t.cos(), t.sin())
            })
            .collect();
        Characters {
            group: group.clone(),
            scale,
            lcm: l,
            roots,
        }
    }

    pub fn group(&self) -> &GroupSpec {
        &self.group
    }

    /// Phase numerator `k` such that `chi_u(g) = exp(2 pi i k / L)`.
    pub fn phase(&self, u: usize, g: usize) -> usize {
        let ur = self.group.residues_of(u);
        let gr = self.group.residues_of(g);
        let l = self.lcm as u128;
        let s: u128 = ur
            .iter()
            .zip(&gr)
            .zip(&self.scale)
            .map(|((&a, &b), &c)| (a as u128 * b as u128 % l) * c as u128)
            .sum();
        (s % l) as usize
    }

    #[inline]
    pub fn eval_idx(&self, u: usize, g: usize) -> Complex64 {
        self.roots[self.phase(u, g)]
    }
}

/// `chi(g)` for a character and an element of the same group.
pub fn char_eval(chi: &CharIndex, g: &GroupElement) -> Result<Complex64> {
    chi.group.ensure_same(g.group())?;
    Ok(Characters::new(&chi.group).eval_idx(chi.index(), g.index()))
}

/// The dual map of a homomorphism, sending target characters to source
/// characters by `xi -> xi o phi`.
#[derive(Clone, Debug)]
pub struct DualMap {
    hom: HomSpec,
    map: Vec<usize>,
}

impl DualMap {
    pub fn new(hom: &HomSpec) -> Result<Self> {
        hom.target().check_enumerable()?;
        let src = hom.source();
        let tgt = hom.target();
        let l = tgt.moduli().iter().copied().fold(1, lcm) as u128;
        let map = (0..tgt.order())
            .map(|xi| {
                let r = tgt.residues_of(xi);
                let res: Vec<usize> = (0..src.rank())
                    .map(|j| {
                        let nj = src.moduli()[j] as u128;
                        let num: u128 = r
                            .iter()
                            .zip(tgt.moduli())
                            .enumerate()
                            .map(|(i, (&ri, &mi))| {
                                ri as u128 * hom.matrix()[i][j] as u128 % l * (l / mi as u128)
                            })
                            .sum::<u128>()
                            % l;
                        ((nj * num / l) % nj) as usize
                    })
                    .collect();
                src.index_of(&res)
            })
            .collect();
        Ok(DualMap {
            hom: hom.clone(),
            map,
        })
    }

    pub fn hom(&self) -> &HomSpec {
        &self.hom
    }

    /// Source character index of `phi-hat(xi)` for a target character index.
    #[inline]
    pub fn apply_idx(&self, xi: usize) -> usize {
        self.map[xi]
    }

    pub fn apply(&self, xi: &CharIndex) -> Result<CharIndex> {
        self.hom.target().ensure_same(xi.group())?;
        Ok(CharIndex::at(self.hom.source(), self.map[xi.index()]))
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.map
    }
}

pub fn dual_map(hom: &HomSpec) -> Result<DualMap> {
    DualMap::new(hom)
}

/// A subgroup of the dual group, members sorted by canonical index.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DualSubgroup {
    group: GroupSpec,
    members: Vec<usize>,
}

impl DualSubgroup {
    /// Builds a subgroup and checks closure.
    pub fn new(group: &GroupSpec, mut members: Vec<usize>) -> Result<Self> {
        members.sort_unstable();
        members.dedup();
        let mut is_member = vec![false; group.order()];
        for &m in &members {
            if m >= group.order() {
                return Err(Error::validation("subgroup member out of range"));
            }
            is_member[m] = true;
        }
        if !is_member[0] {
            return Err(Error::validation("subgroup lacks the trivial character"));
        }
        for &a in &members {
            for &b in &members {
                if !is_member[group.sub_idx(a, b)] {
                    return Err(Error::validation("member set is not closed"));
                }
            }
        }
        Ok(DualSubgroup {
            group: group.clone(),
            members,
        })
    }

    pub fn full(group: &GroupSpec) -> Self {
        DualSubgroup {
            group: group.clone(),
            members: (0..group.order()).collect(),
        }
    }

    /// Characters trivial on every listed element.
    pub fn annihilator(group: &GroupSpec, elements: &[usize]) -> Self {
        let ch = Characters::new(group);
        let members = (0..group.order())
            .filter(|&u| elements.iter().all(|&k| ch.phase(u, k) == 0))
            .collect();
        DualSubgroup {
            group: group.clone(),
            members,
        }
    }

    pub fn group(&self) -> &GroupSpec {
        &self.group
    }

    pub fn members(&self) -> &[usize] {
        &self.members
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn contains(&self, idx: usize) -> bool {
        self.members.binary_search(&idx).is_ok()
    }
}

/// `Im phi-hat`, the characters of the source trivial on `ker phi`.
pub fn dual_image(hom: &HomSpec) -> Result<DualSubgroup> {
    hom.ensure_surjective()?;
    let dm = DualMap::new(hom)?;
    DualSubgroup::new(hom.source(), dm.map.clone())
}

/// Coset decomposition of the dual group by a subgroup.
#[derive(Clone, Debug)]
pub struct CosetTable {
    subgroup: DualSubgroup,
    reps: Vec<usize>,
    coset_of: Vec<usize>,
    residual: Vec<usize>,
}

impl CosetTable {
    /// Representatives are the lexicographically smallest residue tuples of
    /// their cosets, comparing the first coordinate first.
    pub fn new(subgroup: &DualSubgroup) -> Self {
        let g = &subgroup.group;
        let n = g.order();
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by_key(|&i| g.residues_of(i));
        let mut coset_of = vec![usize::MAX; n];
        let mut residual = vec![0usize; n];
        let mut reps = Vec::with_capacity(n / subgroup.len().max(1));
        for &c in &order {
            if coset_of[c] != usize::MAX {
                continue;
            }
            let k = reps.len();
            reps.push(c);
            for &h in &subgroup.members {
                let x = g.add_idx(c, h);
                coset_of[x] = k;
                residual[x] = h;
            }
        }
        CosetTable {
            subgroup: subgroup.clone(),
            reps,
            coset_of,
            residual,
        }
    }

    pub fn subgroup(&self) -> &DualSubgroup {
        &self.subgroup
    }

    pub fn reps(&self) -> &[usize] {
        &self.reps
    }

    /// Coset number of a character.
    pub fn coset_of(&self, chi: usize) -> usize {
        self.coset_of[chi]
    }

    /// Subgroup member `h` with `chi = rep(coset) * h`.
    pub fn residual(&self, chi: usize) -> usize {
        self.residual[chi]
    }
}

pub fn coset_table(sub: &DualSubgroup) -> CosetTable {
    CosetTable::new(sub)
}

/// `lambda_chi = sum_g gamma_g conj(chi(g))`, clipping tiny negatives.
pub fn eigenlist_from_gram_row(gamma: &GramRow) -> Result<EigenList> {
    let g = gamma.group();
    let ch = Characters::new(g);
    let n = g.order();
    let mut lam = Vec::with_capacity(n);
    for u in 0..n {
        let s: Complex64 = gamma
            .values()
            .iter()
            .enumerate()
            .map(|(x, &v)| v * ch.eval_idx(u, x).conj())
            .sum();
        if s.re < -1e-6 {
            return Err(Error::numerical(format!(
                "gram row is not positive semidefinite: lambda_{} = {}",
                g.label(u),
                s.re
            )));
        }
        lam.push(s.re.max(0.0));
    }
    EigenList::new(g, lam)
}

/// `gamma_g = (1/|G|) sum_chi lambda_chi chi(g)`.
pub fn gram_row_from_eigenlist(lam: &EigenList) -> GramRow {
    let g = lam.group();
    let ch = Characters::new(g);
    let n = g.order();
    let inv = 1.0 / n as f64;
    let values = (0..n)
        .map(|x| {
            lam.values()
                .iter()
                .enumerate()
                .filter(|(_, &l)| l != 0.0)
                .map(|(u, &l)| ch.eval_idx(u, x) * l)
                .sum::<Complex64>()
                * inv
        })
        .collect();
    GramRow::new_unchecked(g, values)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn g(m: &[usize]) -> GroupSpec {
        GroupSpec::new(m.to_vec()).unwrap()
    }

    fn close(a: Complex64, b: Complex64) -> bool {
        (a - b).norm() < 1e-12
    }

    #[test]
    fn character_values() {
        let z = g(&[3, 2]);
        let w = Complex64::new(-0.5, 3f64.sqrt() / 2.0);
        let chi = CharIndex::new(&z, vec![1, 0]).unwrap();
        assert!(close(
            char_eval(&chi, &z.element(vec![1, 0]).unwrap()).unwrap(),
            w
        ));
        let chi = CharIndex::new(&z, vec![0, 1]).unwrap();
        assert!(close(
            char_eval(&chi, &z.element(vec![0, 1]).unwrap()).unwrap(),
            Complex64::new(-1.0, 0.0)
        ));
        let t = CharIndex::trivial(&z);
        for e in z.elements() {
            assert!(close(char_eval(&t, &e).unwrap(), Complex64::new(1.0, 0.0)));
        }
    }

    #[test]
    fn dual_algebra() {
        let z = g(&[3, 2]);
        let a = CharIndex::new(&z, vec![1, 1]).unwrap();
        let b = CharIndex::new(&z, vec![2, 1]).unwrap();
        assert_eq!(a.op(&b).unwrap(), CharIndex::trivial(&z));
        assert_eq!(
            CharIndex::new(&z, vec![1, 0]).unwrap().inv().residues(),
            &[2, 0]
        );
        assert_eq!(a.op(&a.inv()).unwrap().index(), 0);
    }

    #[test]
    fn dual_map_of_mixed_radix_hom() {
        let phi =
            HomSpec::new(g(&[4, 3, 2]), g(&[4, 3]), vec![vec![1, 0, 2], vec![0, 1, 0]]).unwrap();
        let dm = dual_map(&phi).unwrap();
        for r in 0..4 {
            for s in 0..3 {
                let xi = CharIndex::new(phi.target(), vec![r, s]).unwrap();
                assert_eq!(dm.apply(&xi).unwrap().residues(), &[r, s, r % 2]);
            }
        }
        let img = dual_image(&phi).unwrap();
        let ann = DualSubgroup::annihilator(phi.source(), &phi.kernel().unwrap());
        assert_eq!(img, ann);
        let ct = coset_table(&img);
        let reps: Vec<Vec<usize>> = ct
            .reps()
            .iter()
            .map(|&i| phi.source().residues_of(i))
            .collect();
        assert_eq!(reps, vec![vec![0, 0, 0], vec![0, 0, 1]]);
    }

    #[test]
    fn dual_map_of_inversion_inverts() {
        let z = g(&[3, 2]);
        let dm = dual_map(&HomSpec::inversion(&z)).unwrap();
        for u in 0..z.order() {
            assert_eq!(dm.apply_idx(u), z.neg_idx(u));
        }
    }

    #[test]
    fn projection_dual_image() {
        let z = g(&[3, 2]);
        let p = HomSpec::projection(&z, &[0]).unwrap();
        let img = dual_image(&p).unwrap();
        assert_eq!(img.members(), &[0, 1, 2]);
        assert!(dual_image(&HomSpec::new(g(&[4]), g(&[4]), vec![vec![2]]).unwrap()).is_err());
    }

    #[test]
    fn full_subgroup_has_single_coset() {
        let z = g(&[3, 2]);
        let ct = coset_table(&DualSubgroup::full(&z));
        assert_eq!(ct.reps(), &[0]);
    }

    #[test]
    fn gram_pair_extremes() {
        let z = g(&[6]);
        let ones = EigenList::new(&z, vec![1.0; 6]).unwrap();
        let row = gram_row_from_eigenlist(&ones);
        assert!((row.values()[0].re - 1.0).abs() < 1e-12);
        assert!(row.values()[1..].iter().all(|v| v.norm() < 1e-12));
        let useless = EigenList::useless(&z);
        let row = gram_row_from_eigenlist(&useless);
        assert!(row.values().iter().all(|v| close(*v, Complex64::new(1.0, 0.0))));
        let back = eigenlist_from_gram_row(&row).unwrap();
        assert!((back.values()[0] - 6.0).abs() < 1e-12);
    }
}
