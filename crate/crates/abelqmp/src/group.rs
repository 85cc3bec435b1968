//! Finite abelian groups as products of cyclic groups, their elements and
//! homomorphisms given by integer matrices.
//!
//! Elements are addressed either by residue vectors or by a canonical
//! mixed-radix index in which the first coordinate varies fastest.

use std::collections::BTreeSet;
use std::fmt;
use std::sync::{Arc, OnceLock};

use crate::error::{Error, Result};

/// Largest group order that is enumerated exhaustively.
pub const ENUMERATION_CAP: usize = 1_000_000;

const ADD_TABLE_CAP: usize = 512;

struct Inner {
    moduli: Vec<usize>,
    strides: Vec<usize>,
    order: usize,
    add: OnceLock<Option<Vec<u32>>>,
}

/// A finite abelian group `Z_{n1} x ... x Z_{nk}`. The empty product is the
/// trivial group.
#[derive(Clone)]
pub struct GroupSpec(Arc<Inner>);

impl GroupSpec {
    pub fn new(moduli: Vec<usize>) -> Result<Self> {
        if let Some(bad) = moduli.iter().find(|&&n| n < 2) {
            return Err(Error::validation(format!("modulus {bad} is below 2")));
        }
        let mut strides = Vec::with_capacity(moduli.len());
        let mut order: usize = 1;
        for &n in &moduli {
            strides.push(order);
            order = order
                .checked_mul(n)
                .ok_or_else(|| Error::validation("group order overflows"))?;
        }
        Ok(GroupSpec(Arc::new(Inner {
            moduli,
            strides,
            order,
            add: OnceLock::new(),
        })))
    }

    pub fn cyclic(n: usize) -> Result<Self> {
        GroupSpec::new(vec![n])
    }

    pub fn trivial() -> Self {
        GroupSpec::new(Vec::new()).expect("empty moduli are valid")
    }

    pub fn moduli(&self) -> &[usize] {
        &self.0.moduli
    }

    pub fn order(&self) -> usize {
        self.0.order
    }

    pub fn rank(&self) -> usize {
        self.0.moduli.len()
    }

    /// Canonical index of a residue vector (first coordinate fastest).
    pub fn index_of(&self, residues: &[usize]) -> usize {
        residues
            .iter()
            .zip(&self.0.strides)
            .zip(&self.0.moduli)
            .map(|((&a, &s), &n)| (a % n) * s)
            .sum()
    }

    pub fn residues_of(&self, mut idx: usize) -> Vec<usize> {
        self.0
            .moduli
            .iter()
            .map(|&n| {
                let r = idx % n;
                idx /= n;
                r
            })
            .collect()
    }

    fn add_table(&self) -> Option<&[u32]> {
        self.0
            .add
            .get_or_init(|| {
                let n = self.order();
                (n <= ADD_TABLE_CAP).then(|| {
                    let mut t = vec![0u32; n * n];
                    for a in 0..n {
                        for b in 0..n {
                            t[a * n + b] = self.add_slow(a, b) as u32;
                        }
                    }
                    t
                })
            })
            .as_deref()
    }

    fn add_slow(&self, mut a: usize, mut b: usize) -> usize {
        let mut out = 0;
        for (&n, &s) in self.0.moduli.iter().zip(&self.0.strides) {
            out += ((a % n + b % n) % n) * s;
            a /= n;
            b /= n;
        }
        out
    }

    /// Sum of two elements given by canonical index.
    #[inline]
    pub fn add_idx(&self, a: usize, b: usize) -> usize {
        match self.add_table() {
            Some(t) => t[a * self.order() + b] as usize,
            None => self.add_slow(a, b),
        }
    }

    pub fn neg_idx(&self, mut a: usize) -> usize {
        let mut out = 0;
        for (&n, &s) in self.0.moduli.iter().zip(&self.0.strides) {
            out += ((n - a % n) % n) * s;
            a /= n;
        }
        out
    }

    #[inline]
    pub fn sub_idx(&self, a: usize, b: usize) -> usize {
        self.add_idx(a, self.neg_idx(b))
    }

    pub fn element(&self, residues: Vec<usize>) -> Result<GroupElement> {
        if residues.len() != self.rank() {
            return Err(Error::validation(format!(
                "element has {} residues, group {} has rank {}",
                residues.len(),
                self,
                self.rank()
            )));
        }
        if let Some((j, (&a, &n))) = residues
            .iter()
            .zip(self.moduli())
            .enumerate()
            .find(|(_, (&a, &n))| a >= n)
        {
            return Err(Error::validation(format!(
                "residue {a} at coordinate {j} is out of range for modulus {n}"
            )));
        }
        Ok(GroupElement {
            group: self.clone(),
            residues,
        })
    }

    pub fn element_at(&self, idx: usize) -> GroupElement {
        GroupElement {
            group: self.clone(),
            residues: self.residues_of(idx),
        }
    }

    pub fn identity(&self) -> GroupElement {
        self.element_at(0)
    }

    pub fn elements(&self) -> impl Iterator<Item = GroupElement> + '_ {
        (0..self.order()).map(move |i| self.element_at(i))
    }

    /// Direct product `self x other` (moduli concatenated).
    pub fn product(&self, other: &GroupSpec) -> GroupSpec {
        let mut m = self.moduli().to_vec();
        m.extend_from_slice(other.moduli());
        GroupSpec::new(m).expect("moduli already validated")
    }

    /// `self^k`.
    pub fn power(&self, k: usize) -> GroupSpec {
        let m: Vec<usize> = (0..k).flat_map(|_| self.moduli().iter().copied()).collect();
        GroupSpec::new(m).expect("moduli already validated")
    }

    /// Join canonical indices of the two factors of `self x other`.
    pub fn join_idx(&self, a: usize, b: usize) -> usize {
        a + self.order() * b
    }

    /// Human-readable residue tuple for an index, e.g. `(1,0)`.
    pub fn label(&self, idx: usize) -> String {
        tuple_label(&self.residues_of(idx))
    }

    pub(crate) fn check_enumerable(&self) -> Result<()> {
        if self.order() > ENUMERATION_CAP {
            return Err(Error::validation(format!(
                "group order {} exceeds enumeration cap {}",
                self.order(),
                ENUMERATION_CAP
            )));
        }
        Ok(())
    }

    pub(crate) fn ensure_same(&self, other: &GroupSpec) -> Result<()> {
        if self != other {
            return Err(Error::GroupMismatch(self.to_string(), other.to_string()));
        }
        Ok(())
    }
}

pub(crate) fn tuple_label(r: &[usize]) -> String {
    let parts: Vec<String> = r.iter().map(|a| a.to_string()).collect();
    format!("({})", parts.join(","))
}

impl PartialEq for GroupSpec {
    fn eq(&self, other: &Self) -> bool {
        Arc::ptr_eq(&self.0, &other.0) || self.0.moduli == other.0.moduli
    }
}

impl Eq for GroupSpec {}

impl fmt::Debug for GroupSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "GroupSpec({:?})", self.moduli())
    }
}

impl fmt::Display for GroupSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.rank() == 0 {
            return write!(f, "Z1");
        }
        let parts: Vec<String> = self.moduli().iter().map(|n| format!("Z{n}")).collect();
        write!(f, "{}", parts.join("x"))
    }
}

/// An element of a [`GroupSpec`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GroupElement {
    group: GroupSpec,
    residues: Vec<usize>,
}

impl GroupElement {
    pub fn group(&self) -> &GroupSpec {
        &self.group
    }

    pub fn residues(&self) -> &[usize] {
        &self.residues
    }

    pub fn index(&self) -> usize {
        self.group.index_of(&self.residues)
    }

    /// Group operation (componentwise addition).
    pub fn op(&self, other: &GroupElement) -> Result<GroupElement> {
        self.group.ensure_same(&other.group)?;
        let residues = self
            .residues
            .iter()
            .zip(&other.residues)
            .zip(self.group.moduli())
            .map(|((&a, &b), &n)| (a + b) % n)
            .collect();
        Ok(GroupElement {
            group: self.group.clone(),
            residues,
        })
    }

    pub fn inv(&self) -> GroupElement {
        let residues = self
            .residues
            .iter()
            .zip(self.group.moduli())
            .map(|(&a, &n)| (n - a) % n)
            .collect();
        GroupElement {
            group: self.group.clone(),
            residues,
        }
    }

    pub fn is_identity(&self) -> bool {
        self.residues.iter().all(|&a| a == 0)
    }

    /// Split an element of `G1 x G2` after the first `k` coordinates.
    pub fn split(&self, k: usize) -> Result<(GroupElement, GroupElement)> {
        if k > self.residues.len() {
            return Err(Error::validation("split point beyond rank"));
        }
        let g1 = GroupSpec::new(self.group.moduli()[..k].to_vec())?;
        let g2 = GroupSpec::new(self.group.moduli()[k..].to_vec())?;
        Ok((
            GroupElement {
                group: g1,
                residues: self.residues[..k].to_vec(),
            },
            GroupElement {
                group: g2,
                residues: self.residues[k..].to_vec(),
            },
        ))
    }

    /// Inverse of [`GroupElement::split`].
    pub fn join(&self, other: &GroupElement) -> GroupElement {
        let mut residues = self.residues.clone();
        residues.extend_from_slice(&other.residues);
        GroupElement {
            group: self.group.product(&other.group),
            residues,
        }
    }
}

impl fmt::Display for GroupElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&tuple_label(&self.residues))
    }
}

/// A homomorphism `source -> target` given by `matrix[i][j]`, the image of
/// the j-th source generator in the i-th target coordinate.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct HomSpec {
    source: GroupSpec,
    target: GroupSpec,
    matrix: Vec<Vec<usize>>,
}

/// Codomain restriction of a homomorphism onto its image.
#[derive(Clone, Debug)]
pub struct ImageRestriction {
    /// Surjection from the source onto the image group.
    pub surjection: HomSpec,
    /// Injective embedding of the image group into the original target.
    pub embedding: HomSpec,
}

impl HomSpec {
    /// Builds and validates a homomorphism.
    pub fn new(source: GroupSpec, target: GroupSpec, matrix: Vec<Vec<usize>>) -> Result<Self> {
        if matrix.len() != target.rank() {
            return Err(Error::validation(format!(
                "matrix has {} rows, target {} has rank {}",
                matrix.len(),
                target,
                target.rank()
            )));
        }
        for (i, row) in matrix.iter().enumerate() {
            if row.len() != source.rank() {
                return Err(Error::validation(format!(
                    "matrix row {i} has {} entries, source {} has rank {}",
                    row.len(),
                    source,
                    source.rank()
                )));
            }
        }
        let h = HomSpec {
            source,
            target,
            matrix,
        };
        h.validate()?;
        Ok(h)
    }

    /// Checks `n_j * M[i][j] = 0 mod m_i` and the entry ranges.
    pub fn validate(&self) -> Result<()> {
        for (i, row) in self.matrix.iter().enumerate() {
            let m = self.target.moduli()[i];
            for (j, &v) in row.iter().enumerate() {
                let n = self.source.moduli()[j];
                if v >= m {
                    return Err(Error::InvalidHom {
                        row: i,
                        col: j,
                        detail: format!("entry {v} not reduced mod {m}"),
                    });
                }
                if (n as u128 * v as u128) % m as u128 != 0 {
                    return Err(Error::InvalidHom {
                        row: i,
                        col: j,
                        detail: format!("{n}*{v} is not 0 mod {m}"),
                    });
                }
            }
        }
        Ok(())
    }

    pub fn source(&self) -> &GroupSpec {
        &self.source
    }

    pub fn target(&self) -> &GroupSpec {
        &self.target
    }

    pub fn matrix(&self) -> &[Vec<usize>] {
        &self.matrix
    }

    pub fn identity(g: &GroupSpec) -> HomSpec {
        let r = g.rank();
        let matrix = (0..r)
            .map(|i| (0..r).map(|j| usize::from(i == j)).collect())
            .collect();
        HomSpec {
            source: g.clone(),
            target: g.clone(),
            matrix,
        }
    }

    /// The automorphism `g -> g^{-1}`.
    pub fn inversion(g: &GroupSpec) -> HomSpec {
        let r = g.rank();
        let matrix = (0..r)
            .map(|i| {
                (0..r)
                    .map(|j| if i == j { g.moduli()[i] - 1 } else { 0 })
                    .collect()
            })
            .collect();
        HomSpec {
            source: g.clone(),
            target: g.clone(),
            matrix,
        }
    }

    /// Map whose output coordinate `i` is input coordinate `perm[i]`.
    pub fn permute_coordinates(g: &GroupSpec, perm: &[usize]) -> Result<HomSpec> {
        let r = g.rank();
        let mut seen = vec![false; r];
        if perm.len() != r {
            return Err(Error::validation("permutation length differs from rank"));
        }
        for &p in perm {
            if p >= r || seen[p] {
                return Err(Error::validation(format!("invalid permutation {perm:?}")));
            }
            seen[p] = true;
        }
        let target = GroupSpec::new(perm.iter().map(|&p| g.moduli()[p]).collect())?;
        let matrix = perm
            .iter()
            .map(|&p| (0..r).map(|j| usize::from(j == p)).collect())
            .collect();
        HomSpec::new(g.clone(), target, matrix)
    }

    /// Projection onto the listed coordinates, in the listed order.
    pub fn projection(g: &GroupSpec, coords: &[usize]) -> Result<HomSpec> {
        if let Some(&c) = coords.iter().find(|&&c| c >= g.rank()) {
            return Err(Error::validation(format!("coordinate {c} beyond rank")));
        }
        let target = GroupSpec::new(coords.iter().map(|&c| g.moduli()[c]).collect())?;
        let matrix = coords
            .iter()
            .map(|&c| (0..g.rank()).map(|j| usize::from(j == c)).collect())
            .collect();
        HomSpec::new(g.clone(), target, matrix)
    }

    /// `self o inner`: apply `inner` first.
    pub fn compose(&self, inner: &HomSpec) -> Result<HomSpec> {
        self.source.ensure_same(&inner.target)?;
        let matrix = (0..self.target.rank())
            .map(|i| {
                let m = self.target.moduli()[i] as u128;
                (0..inner.source.rank())
                    .map(|j| {
                        let s: u128 = (0..self.source.rank())
                            .map(|k| self.matrix[i][k] as u128 * inner.matrix[k][j] as u128)
                            .sum();
                        (s % m) as usize
                    })
                    .collect()
            })
            .collect();
        HomSpec::new(inner.source.clone(), self.target.clone(), matrix)
    }

    pub fn eval_residues(&self, a: &[usize]) -> Vec<usize> {
        self.matrix
            .iter()
            .zip(self.target.moduli())
            .map(|(row, &m)| {
                let s: u128 = row
                    .iter()
                    .zip(a)
                    .map(|(&v, &x)| v as u128 * x as u128)
                    .sum();
                (s % m as u128) as usize
            })
            .collect()
    }

    pub fn eval(&self, g: &GroupElement) -> Result<GroupElement> {
        self.source.ensure_same(g.group())?;
        Ok(GroupElement {
            group: self.target.clone(),
            residues: self.eval_residues(g.residues()),
        })
    }

    pub fn eval_idx(&self, idx: usize) -> usize {
        self.target
            .index_of(&self.eval_residues(&self.source.residues_of(idx)))
    }

    /// Value table indexed by canonical source index.
    pub fn table(&self) -> Result<Vec<usize>> {
        self.source.check_enumerable()?;
        Ok((0..self.source.order()).map(|i| self.eval_idx(i)).collect())
    }

    /// Kernel as sorted canonical indices.
    pub fn kernel(&self) -> Result<Vec<usize>> {
        Ok(self
            .table()?
            .into_iter()
            .enumerate()
            .filter(|&(_, v)| v == 0)
            .map(|(i, _)| i)
            .collect())
    }

    /// Image as sorted canonical target indices.
    pub fn image(&self) -> Result<Vec<usize>> {
        let set: BTreeSet<usize> = self.table()?.into_iter().collect();
        let image: Vec<usize> = set.into_iter().collect();
        let kernel = self.kernel()?;
        if kernel.len() * image.len() != self.source.order() {
            return Err(Error::numerical(format!(
                "|ker|*|Im| = {}*{} differs from |G| = {}",
                kernel.len(),
                image.len(),
                self.source.order()
            )));
        }
        Ok(image)
    }

    pub fn is_surjective(&self) -> Result<bool> {
        Ok(self.image()?.len() == self.target.order())
    }

    pub fn ensure_surjective(&self) -> Result<()> {
        let image = self.image()?.len();
        if image != self.target.order() {
            return Err(Error::NotSurjective {
                image,
                target: self.target.order(),
            });
        }
        Ok(())
    }

    pub fn is_automorphism(&self) -> Result<bool> {
        Ok(self.source == self.target && self.is_surjective()?)
    }

    /// Inverse of an automorphism, recovered from the inverted value table.
    pub fn invert_automorphism(&self) -> Result<HomSpec> {
        if !self.is_automorphism()? {
            return Err(Error::NotAutomorphism);
        }
        let table = self.table()?;
        let mut inv = vec![0usize; table.len()];
        for (i, &v) in table.iter().enumerate() {
            inv[v] = i;
        }
        let g = &self.source;
        let columns: Vec<Vec<usize>> = (0..g.rank())
            .map(|j| {
                let mut e = vec![0; g.rank()];
                e[j] = 1;
                g.residues_of(inv[g.index_of(&e)])
            })
            .collect();
        let matrix = (0..g.rank())
            .map(|i| columns.iter().map(|c| c[i]).collect())
            .collect();
        HomSpec::new(g.clone(), g.clone(), matrix)
    }

    /// Factor `self = embedding o surjection` through its image.
    ///
    /// The image group is taken coordinate-aligned when the image is a product
    /// of cyclic subgroups of the target coordinates, otherwise it is
    /// decomposed by a search for independent generators.
    pub fn restrict_to_image(&self) -> Result<ImageRestriction> {
        let image = self.image()?;
        let gens = aligned_generators(&self.target, &image)
            .map(Ok)
            .unwrap_or_else(|| searched_generators(&self.target, &image))?;
        let image_group = GroupSpec::new(gens.iter().map(|&(_, o)| o).collect())?;
        let emb_matrix: Vec<Vec<usize>> = (0..self.target.rank())
            .map(|i| {
                gens.iter()
                    .map(|&(g, _)| self.target.residues_of(g)[i])
                    .collect()
            })
            .collect();
        let embedding = HomSpec::new(image_group.clone(), self.target.clone(), emb_matrix)?;
        let emb_table = embedding.table()?;
        let mut back = std::collections::HashMap::with_capacity(emb_table.len());
        for (i, &v) in emb_table.iter().enumerate() {
            if back.insert(v, i).is_some() {
                return Err(Error::numerical("image decomposition is not injective"));
            }
        }
        let columns: Vec<Vec<usize>> = (0..self.source.rank())
            .map(|j| {
                let mut e = vec![0; self.source.rank()];
                e[j] = 1;
                let v = self.target.index_of(&self.eval_residues(&e));
                back.get(&v)
                    .map(|&k| image_group.residues_of(k))
                    .ok_or_else(|| Error::numerical("generator image outside decomposition"))
            })
            .collect::<Result<_>>()?;
        let matrix = (0..image_group.rank())
            .map(|i| columns.iter().map(|c| c[i]).collect())
            .collect();
        let surjection = HomSpec::new(self.source.clone(), image_group, matrix)?;
        Ok(ImageRestriction {
            surjection,
            embedding,
        })
    }
}

/// Generators `(index, order)` when the subgroup is a product of per-coordinate
/// cyclic subgroups.
fn aligned_generators(g: &GroupSpec, sub: &[usize]) -> Option<Vec<(usize, usize)>> {
    let mut sizes = Vec::with_capacity(g.rank());
    for (i, &m) in g.moduli().iter().enumerate() {
        let proj: BTreeSet<usize> = sub.iter().map(|&s| g.residues_of(s)[i]).collect();
        sizes.push((i, m, proj.len()));
    }
    let prod: usize = sizes.iter().map(|&(_, _, s)| s).product();
    if prod != sub.len() {
        return None;
    }
    Some(
        sizes
            .into_iter()
            .filter(|&(_, _, s)| s > 1)
            .map(|(i, m, s)| {
                let mut r = vec![0; g.rank()];
                r[i] = m / s;
                (g.index_of(&r), s)
            })
            .collect(),
    )
}

fn element_order(g: &GroupSpec, idx: usize) -> usize {
    g.residues_of(idx)
        .iter()
        .zip(g.moduli())
        .map(|(&a, &n)| n / gcd(a, n))
        .fold(1, lcm)
}

fn span(g: &GroupSpec, base: &BTreeSet<usize>, gen: usize, ord: usize) -> BTreeSet<usize> {
    let mut out = BTreeSet::new();
    let mut m = 0;
    for _ in 0..ord {
        for &b in base {
            out.insert(g.add_idx(b, m));
        }
        m = g.add_idx(m, gen);
    }
    out
}

/// Independent generators of a subgroup found by depth-first search,
/// preferring elements of large order.
fn searched_generators(g: &GroupSpec, sub: &[usize]) -> Result<Vec<(usize, usize)>> {
    let mut cands: Vec<(usize, usize)> = sub
        .iter()
        .map(|&s| (s, element_order(g, s)))
        .filter(|&(_, o)| o > 1)
        .collect();
    cands.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(&b.0)));

    fn dfs(
        g: &GroupSpec,
        cands: &[(usize, usize)],
        target: usize,
        spanned: &BTreeSet<usize>,
        chosen: &mut Vec<(usize, usize)>,
        budget: &mut usize,
    ) -> bool {
        if spanned.len() == target {
            return true;
        }
        for &(c, o) in cands {
            if *budget == 0 {
                return false;
            }
            *budget -= 1;
            if spanned.contains(&c) {
                continue;
            }
            let next = span(g, spanned, c, o);
            if next.len() != spanned.len() * o {
                continue;
            }
            chosen.push((c, o));
            if dfs(g, cands, target, &next, chosen, budget) {
                return true;
            }
            chosen.pop();
        }
        false
    }

    let mut chosen = Vec::new();
    let mut budget = 1_000_000usize;
    let start: BTreeSet<usize> = std::iter::once(0).collect();
    if dfs(g, &cands, sub.len(), &start, &mut chosen, &mut budget) {
        Ok(chosen)
    } else {
        Err(Error::numerical("failed to decompose image subgroup"))
    }
}

pub(crate) fn gcd(a: usize, b: usize) -> usize {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

pub(crate) fn lcm(a: usize, b: usize) -> usize {
    a / gcd(a, b) * b
}
