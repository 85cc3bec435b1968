//! Dense-matrix oracle.
//!
//! Builds the canonical states of a covariant pure-state channel explicitly,
//! applies the unitaries and isometries that realize each factor, and reads
//! off herald probabilities and eigen lists without using the closed-form
//! update rules. Dual maps and coset representatives are found here by brute
//! force rather than by the closed forms in [`crate::dual`].

pub mod linalg;

use std::collections::BTreeMap;

use num_complex::Complex64;
use rand::Rng;
use serde::Serialize;

use crate::dual::Characters;
use crate::eigen::{entropy_bits, EigenList};
use crate::error::{Error, Result};
use crate::group::{gcd, GroupSpec, HomSpec};
use crate::rules;
pub use linalg::{jacobi_eigh, CMatrix};

/// Oracle output of a herald-producing rule: herald key (a character or coset
/// representative index) mapped to probability and eigen list.
#[derive(Clone, Debug, Default)]
pub struct OracleMixture {
    pub heralds: BTreeMap<usize, (f64, Vec<f64>)>,
    /// Largest structural defect seen (off-block mass, rank or covariance
    /// deviation, isometry defect).
    pub defect: f64,
}

/// Canonical states `|psi_g> = |G|^{-1/2} sum_chi sqrt(lambda_chi) chi(g) |chi>`
/// as the columns of a matrix in the character basis.
pub fn state_matrix(lam: &EigenList) -> CMatrix {
    let g = lam.group();
    let ch = Characters::new(g);
    let n = g.order();
    let s = 1.0 / (n as f64).sqrt();
    CMatrix::from_fn(n, n, |chi, x| {
        ch.eval_idx(chi, x) * (lam.values()[chi].max(0.0).sqrt() * s)
    })
}

/// Character vectors `|chi> = |G|^{-1/2} sum_g conj(chi(g)) |g>` in the element
/// basis, as columns.
pub fn character_vectors(g: &GroupSpec) -> CMatrix {
    let ch = Characters::new(g);
    let n = g.order();
    let s = 1.0 / (n as f64).sqrt();
    CMatrix::from_fn(n, n, |x, chi| ch.eval_idx(chi, x).conj() * s)
}

/// Gram matrix `<psi_g|psi_g'>` of the columns of `states`.
pub fn gram_of(states: &CMatrix) -> CMatrix {
    states.adjoint().mul(states).expect("square product")
}

/// Rayleigh quotients `<chi|Gamma|chi>` and the worst residual of
/// `Gamma|chi> = lambda_chi |chi>`.
pub fn eigen_by_characters(gram: &CMatrix, g: &GroupSpec) -> (Vec<f64>, f64) {
    let cv = character_vectors(g);
    let mut lam = Vec::with_capacity(g.order());
    let mut worst: f64 = 0.0;
    for chi in 0..g.order() {
        let v = cv.column(chi);
        let gv = gram.mul_vec(&v);
        let q: Complex64 = v.iter().zip(&gv).map(|(a, b)| a.conj() * b).sum();
        let res = gv
            .iter()
            .zip(&v)
            .map(|(a, b)| (a - b * q.re).norm())
            .fold(0.0, f64::max);
        worst = worst.max(res).max(q.im.abs());
        lam.push(q.re);
    }
    (lam, worst)
}

/// Report of the Gram diagonalization check.
#[derive(Clone, Debug, Serialize)]
pub struct GramReport {
    pub eigen_residual: f64,
    pub circulant_defect: f64,
    pub spectrum_defect: f64,
    pub norm_defect: f64,
}

/// Builds the states, forms their Gram matrix and checks that the character
/// vectors are eigenvectors with eigenvalues `lambda_chi`.
pub fn verify_gram_diagonalization(lam: &EigenList) -> Result<GramReport> {
    let g = lam.group();
    let n = g.order();
    let s = state_matrix(lam);
    let norm_defect = (0..n)
        .map(|x| {
            let c = s.column(x);
            (c.iter().map(|z| z.norm_sqr()).sum::<f64>() - 1.0).abs()
        })
        .fold(0.0, f64::max);
    let gram = gram_of(&s);
    let (est, eigen_res) = eigen_by_characters(&gram, g);
    let mut circ: f64 = 0.0;
    for a in 0..n {
        for b in 0..n {
            for h in 0..n {
                let d = (gram[(g.add_idx(h, a), g.add_idx(h, b))] - gram[(a, b)]).norm();
                circ = circ.max(d);
            }
        }
    }
    let label_dev = est
        .iter()
        .zip(lam.values())
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    let (w, _) = jacobi_eigh(&gram)?;
    let mut sorted = lam.values().to_vec();
    sorted.sort_by(|a, b| b.total_cmp(a));
    let spec = w
        .iter()
        .zip(&sorted)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    Ok(GramReport {
        eigen_residual: eigen_res.max(label_dev),
        circulant_defect: circ,
        spectrum_defect: spec,
        norm_defect,
    })
}

/// Average state `rho-bar = (1/|G|) sum_g |psi_g><psi_g|`.
pub fn average_state(lam: &EigenList) -> CMatrix {
    let s = state_matrix(lam);
    let mut r = s.mul(&s.adjoint()).expect("square product");
    let n = lam.group().order() as f64;
    r = CMatrix::from_fn(r.rows(), r.cols(), |i, j| r[(i, j)] / n);
    r
}

/// Von Neumann entropy of the average state in bits.
pub fn holevo_dense(lam: &EigenList) -> Result<f64> {
    let (w, _) = jacobi_eigh(&average_state(lam))?;
    let p: Vec<f64> = w.into_iter().map(|x| x.max(0.0)).collect();
    Ok(entropy_bits(&p))
}

/// PGM error from the explicit square-root measurement
/// `|tau_g> = |G|^{-1/2} rho-bar^{-1/2} |psi_g>` on the support of `rho-bar`.
pub fn pgm_bruteforce(lam: &EigenList) -> Result<f64> {
    let n = lam.group().order();
    let rho = average_state(lam);
    let (w, v) = jacobi_eigh(&rho)?;
    let mut inv_sqrt = CMatrix::zeros(n, n);
    for (k, &x) in w.iter().enumerate() {
        if x < 1e-12 {
            continue;
        }
        let col = v.column(k);
        inv_sqrt.add_assign(&CMatrix::outer(&col), 1.0 / x.sqrt());
    }
    let s = state_matrix(lam);
    let tau = inv_sqrt.mul(&s)?;
    let scale = 1.0 / (n as f64).sqrt();
    let success: f64 = (0..n)
        .map(|x| {
            let ov: Complex64 = (0..n).map(|r| (tau[(r, x)] * scale).conj() * s[(r, x)]).sum();
            ov.norm_sqr()
        })
        .sum::<f64>()
        / n as f64;
    Ok(1.0 - success)
}

/// Largest deviation of `U_{g'} |psi_g> - |psi_{g'g}>` with the diagonal
/// representation `U_{g'} = sum_chi chi(g') |chi><chi|`.
pub fn verify_covariance(lam: &EigenList) -> f64 {
    let g = lam.group();
    let ch = Characters::new(g);
    let s = state_matrix(lam);
    let n = g.order();
    let mut worst: f64 = 0.0;
    for gp in 0..n {
        for x in 0..n {
            let y = g.add_idx(gp, x);
            for chi in 0..n {
                let d = (ch.eval_idx(chi, gp) * s[(chi, x)] - s[(chi, y)]).norm();
                worst = worst.max(d);
            }
        }
    }
    worst
}

/// Brute-force dual map: for each target character the unique source
/// character with `chi(g) = xi(phi(g))` for all `g`.
pub fn dual_map_bruteforce(hom: &HomSpec) -> Result<Vec<usize>> {
    let src = hom.source();
    let tgt = hom.target();
    let cs = Characters::new(src);
    let ct = Characters::new(tgt);
    let table = hom.table()?;
    (0..tgt.order())
        .map(|xi| {
            let found: Vec<usize> = (0..src.order())
                .filter(|&chi| {
                    (0..src.order())
                        .all(|x| (cs.eval_idx(chi, x) - ct.eval_idx(xi, table[x])).norm() < 1e-9)
                })
                .collect();
            match found.as_slice() {
                [c] => Ok(*c),
                _ => Err(Error::numerical("dual character not unique")),
            }
        })
        .collect()
}

/// Coset representatives by brute force: smallest residue tuple per coset.
fn cosets_bruteforce(g: &GroupSpec, members: &[usize]) -> (Vec<usize>, Vec<usize>) {
    let n = g.order();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by_key(|&i| g.residues_of(i));
    let mut coset = vec![usize::MAX; n];
    let mut reps = Vec::new();
    for &c in &order {
        if coset[c] == usize::MAX {
            for &h in members {
                coset[g.add_idx(c, h)] = reps.len();
            }
            reps.push(c);
        }
    }
    (reps, coset)
}

/// Reads one herald block: probability, eigen list from the diagonal of the
/// identity-input block, and defects for rank one and covariance.
fn read_block(blocks: &[CMatrix], g: &GroupSpec) -> (f64, Vec<f64>, f64) {
    let ch = Characters::new(g);
    let n = g.order();
    let b0 = &blocks[0];
    let p = b0.trace().re;
    if p < 1e-15 {
        return (0.0, vec![0.0; n], 0.0);
    }
    let lam: Vec<f64> = (0..n).map(|x| b0[(x, x)].re * n as f64 / p).collect();
    let rank_defect = (b0.frobenius() - p).abs();
    let mut cov: f64 = 0.0;
    for (h, bh) in blocks.iter().enumerate() {
        cov = cov.max((bh.trace().re - p).abs());
        for a in 0..n {
            for b in 0..n {
                let want = ch.eval_idx(a, h) * b0[(a, b)] * ch.eval_idx(b, h).conj();
                cov = cov.max((bh[(a, b)] - want).norm());
            }
        }
    }
    (p, lam, rank_defect.max(cov))
}

/// Check factor via the product states, the unitary
/// `|chi>|chi'> -> |chi chi'^{-1}>|chi'>` and herald blocks of the first register.
pub fn simulate_check(l1: &EigenList, l2: &EigenList) -> Result<OracleMixture> {
    l1.group().ensure_same(l2.group())?;
    let g = l1.group();
    let n = g.order();
    let s1 = state_matrix(l1);
    let s2 = state_matrix(l2);
    // permutation index: new (c, b) <- old (a = c b, b); tensor index a * n + b
    let mut per_h: Vec<Vec<CMatrix>> = vec![Vec::with_capacity(n); n];
    let mut off: f64 = 0.0;
    for h in 0..n {
        let mut rho = CMatrix::zeros(n * n, n * n);
        for g1 in 0..n {
            let g2 = g.sub_idx(h, g1);
            let psi: Vec<Complex64> = (0..n * n)
                .map(|k| s1[(k / n, g1)] * s2[(k % n, g2)])
                .collect();
            let moved: Vec<Complex64> = (0..n * n)
                .map(|k| {
                    let (c, b) = (k / n, k % n);
                    psi[g.add_idx(c, b) * n + b]
                })
                .collect();
            rho.add_assign(&CMatrix::outer(&moved), 1.0 / n as f64);
        }
        for c in 0..n {
            for c2 in 0..n {
                if c != c2 {
                    for a in 0..n {
                        for b in 0..n {
                            off = off.max(rho[(c * n + a, c2 * n + b)].norm());
                        }
                    }
                }
            }
        }
        for (c, slot) in per_h.iter_mut().enumerate() {
            let idx: Vec<usize> = (0..n).map(|b| c * n + b).collect();
            slot.push(rho.select(&idx, &idx));
        }
    }
    let mut out = OracleMixture {
        defect: off,
        ..Default::default()
    };
    for (c, blocks) in per_h.iter().enumerate() {
        let (p, lam, d) = read_block(blocks, g);
        out.defect = out.defect.max(d);
        if p >= 1e-15 {
            out.heralds.insert(c, (p, lam));
        }
    }
    Ok(out)
}

/// Equality factor via the Gram matrix of tensor-product states
/// `|psi1_g> (x) |psi2_g>`, diagonalized by characters.
pub fn simulate_equality(l1: &EigenList, l2: &EigenList) -> Result<(Vec<f64>, f64)> {
    l1.group().ensure_same(l2.group())?;
    let g = l1.group();
    let n = g.order();
    let s1 = state_matrix(l1);
    let s2 = state_matrix(l2);
    let cols: Vec<Vec<Complex64>> = (0..n)
        .map(|x| {
            (0..n * n)
                .map(|k| s1[(k / n, x)] * s2[(k % n, x)])
                .collect()
        })
        .collect();
    let gram = gram_of(&CMatrix::from_columns(&cols));
    let (lam, res) = eigen_by_characters(&gram, g);
    let (w, _) = jacobi_eigh(&gram)?;
    let mut sorted = lam.clone();
    sorted.sort_by(|a, b| b.total_cmp(a));
    let spec = w
        .iter()
        .zip(&sorted)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    Ok((lam, res.max(spec)))
}

/// Surjective homomorphism factor via the fiber-averaged states and the
/// isometry `V = sum_xi sum_eta |xi>|eta><eta phi-hat(xi)|`.
pub fn simulate_hom(lam: &EigenList, hom: &HomSpec) -> Result<OracleMixture> {
    hom.ensure_surjective()?;
    let src = hom.source();
    let tgt = hom.target();
    src.ensure_same(lam.group())?;
    let (n1, n2) = (src.order(), tgt.order());
    let dual = dual_map_bruteforce(hom)?;
    let (reps, _) = cosets_bruteforce(src, &dual);
    let t = reps.len();
    let mut v = CMatrix::zeros(n2 * t, n1);
    for (k, &eta) in reps.iter().enumerate() {
        for (xi, &d) in dual.iter().enumerate() {
            v[(k * n2 + xi, src.add_idx(eta, d))] = Complex64::new(1.0, 0.0);
        }
    }
    let iso = v.adjoint().mul(&v)?.max_abs_diff(&CMatrix::identity(n1));
    let table = hom.table()?;
    let kernel = table.iter().filter(|&&y| y == 0).count();
    let s = state_matrix(lam);
    let mut per_k: Vec<Vec<CMatrix>> = vec![Vec::with_capacity(n2); t];
    let mut off: f64 = 0.0;
    for h in 0..n2 {
        let mut rho = CMatrix::zeros(n1, n1);
        for (x, _) in table.iter().enumerate().filter(|&(_, &y)| y == h) {
            rho.add_assign(&CMatrix::outer(&s.column(x)), 1.0 / kernel as f64);
        }
        let sigma = v.mul(&rho)?.mul(&v.adjoint())?;
        for k in 0..t {
            for k2 in 0..t {
                if k != k2 {
                    for a in 0..n2 {
                        for b in 0..n2 {
                            off = off.max(sigma[(k * n2 + a, k2 * n2 + b)].norm());
                        }
                    }
                }
            }
        }
        for (k, slot) in per_k.iter_mut().enumerate() {
            let idx: Vec<usize> = (0..n2).map(|x| k * n2 + x).collect();
            slot.push(sigma.select(&idx, &idx));
        }
    }
    let mut out = OracleMixture {
        defect: off.max(iso),
        ..Default::default()
    };
    for (k, blocks) in per_k.iter().enumerate() {
        let (p, l, d) = read_block(blocks, tgt);
        out.defect = out.defect.max(d);
        if p >= 1e-15 {
            out.heralds.insert(reps[k], (p, l));
        }
    }
    Ok(out)
}

/// Marginalization of `G1 x G2` onto the first `keep` coordinates via the
/// reindexing `|(chi, eta)> -> |chi>|eta>` and averaging over `G2`.
pub fn simulate_marginalize(lam: &EigenList, keep: usize) -> Result<OracleMixture> {
    let u = lam.group();
    if keep > u.rank() {
        return Err(Error::validation("split beyond rank"));
    }
    let g1 = GroupSpec::new(u.moduli()[..keep].to_vec())?;
    let n1 = g1.order();
    let n2 = u.order() / n1;
    let s = state_matrix(lam);
    let mut per_eta: Vec<Vec<CMatrix>> = vec![Vec::with_capacity(n1); n2];
    let mut off: f64 = 0.0;
    for a in 0..n1 {
        let mut rho = CMatrix::zeros(u.order(), u.order());
        for b in 0..n2 {
            rho.add_assign(&CMatrix::outer(&s.column(u.index_of(&join(&g1, a, u, b)))), 1.0 / n2 as f64);
        }
        // (chi, eta) has canonical index chi + n1 * eta, so the eta register is the slow one
        for e in 0..n2 {
            for e2 in 0..n2 {
                if e != e2 {
                    for x in 0..n1 {
                        for y in 0..n1 {
                            off = off.max(rho[(e * n1 + x, e2 * n1 + y)].norm());
                        }
                    }
                }
            }
        }
        for (e, slot) in per_eta.iter_mut().enumerate() {
            let idx: Vec<usize> = (0..n1).map(|x| e * n1 + x).collect();
            slot.push(rho.select(&idx, &idx));
        }
    }
    let mut out = OracleMixture {
        defect: off,
        ..Default::default()
    };
    for (e, blocks) in per_eta.iter().enumerate() {
        let (p, l, d) = read_block(blocks, &g1);
        out.defect = out.defect.max(d);
        if p >= 1e-15 {
            out.heralds.insert(e, (p, l));
        }
    }
    Ok(out)
}

fn join(g1: &GroupSpec, a: usize, u: &GroupSpec, b: usize) -> Vec<usize> {
    let mut r = g1.residues_of(a);
    let rest = GroupSpec::new(u.moduli()[g1.rank()..].to_vec()).expect("valid moduli");
    r.extend(rest.residues_of(b));
    r
}

/// Automorphism factor via the Gram matrix of the states `psi_{phi^{-1}(h)}`.
pub fn simulate_automorphism(lam: &EigenList, phi: &HomSpec) -> Result<(Vec<f64>, f64)> {
    if !phi.is_automorphism()? {
        return Err(Error::NotAutomorphism);
    }
    let g = lam.group();
    let table = phi.table()?;
    let mut inv = vec![0; table.len()];
    for (x, &y) in table.iter().enumerate() {
        inv[y] = x;
    }
    let s = state_matrix(lam);
    let cols: Vec<Vec<Complex64>> = (0..g.order()).map(|h| s.column(inv[h])).collect();
    let gram = gram_of(&CMatrix::from_columns(&cols));
    Ok(eigen_by_characters(&gram, g))
}

/// Largest deviation between an oracle mixture and a fast-path message with
/// heralds matched by key. Heralds missing on one side must have negligible
/// probability.
pub fn compare_mixture(
    oracle: &OracleMixture,
    fast: &[(usize, f64, Vec<f64>)],
) -> (f64, f64) {
    let mut dp: f64 = 0.0;
    let mut dl: f64 = 0.0;
    let fast_map: BTreeMap<usize, (f64, &Vec<f64>)> =
        fast.iter().map(|(k, p, l)| (*k, (*p, l))).collect();
    for (k, (p, l)) in &oracle.heralds {
        match fast_map.get(k) {
            Some((fp, fl)) => {
                dp = dp.max((p - fp).abs());
                if *p > 1e-12 {
                    dl = dl.max(
                        l.iter()
                            .zip(fl.iter())
                            .map(|(a, b)| (a - b).abs())
                            .fold(0.0, f64::max),
                    );
                }
            }
            None => dp = dp.max(*p),
        }
    }
    for (k, (fp, _)) in &fast_map {
        if !oracle.heralds.contains_key(k) {
            dp = dp.max(*fp);
        }
    }
    (dp, dl)
}

/// Random eigen list: exponential weights with occasional exact zeros.
pub fn random_eigenlist<R: Rng + ?Sized>(g: &GroupSpec, rng: &mut R) -> EigenList {
    let n = g.order();
    loop {
        let w: Vec<f64> = (0..n)
            .map(|_| {
                if rng.gen_bool(0.15) {
                    0.0
                } else {
                    -rng.gen::<f64>().max(1e-300).ln()
                }
            })
            .collect();
        let s: f64 = w.iter().sum();
        if s > 0.0 {
            let v = w.iter().map(|x| x * n as f64 / s).collect();
            return EigenList::new(g, v).expect("normalized weights");
        }
    }
}

/// Random valid homomorphism matrix between two groups.
pub fn random_hom<R: Rng + ?Sized>(src: &GroupSpec, tgt: &GroupSpec, rng: &mut R) -> HomSpec {
    let matrix = tgt
        .moduli()
        .iter()
        .map(|&m| {
            src.moduli()
                .iter()
                .map(|&n| {
                    let step = m / gcd(n, m);
                    step * rng.gen_range(0..m / step)
                })
                .collect()
        })
        .collect();
    HomSpec::new(src.clone(), tgt.clone(), matrix).expect("entries chosen valid")
}

/// Random surjective homomorphism onto some group of order at most `|src|`
/// drawn from `targets`; falls back to the identity.
pub fn random_surjection<R: Rng + ?Sized>(
    src: &GroupSpec,
    targets: &[GroupSpec],
    rng: &mut R,
) -> HomSpec {
    let cands: Vec<&GroupSpec> = targets
        .iter()
        .filter(|t| t.order() <= src.order() && src.order() % t.order() == 0)
        .collect();
    for _ in 0..64 {
        if cands.is_empty() {
            break;
        }
        let t = cands[rng.gen_range(0..cands.len())];
        let h = random_hom(src, t, rng);
        if h.is_surjective().unwrap_or(false) {
            return h;
        }
    }
    HomSpec::identity(src)
}

/// Random automorphism; falls back to inversion.
pub fn random_automorphism<R: Rng + ?Sized>(g: &GroupSpec, rng: &mut R) -> HomSpec {
    for _ in 0..64 {
        let h = random_hom(g, g, rng);
        if h.is_automorphism().unwrap_or(false) {
            return h;
        }
    }
    HomSpec::inversion(g)
}

/// Fast-path herald list of a check output keyed by character index.
pub fn keyed_check(l1: &EigenList, l2: &EigenList) -> Result<Vec<(usize, f64, Vec<f64>)>> {
    let g = l1.group();
    let probs = rules::check_probs(l1.values(), l2.values(), g);
    let total: f64 = probs.iter().filter(|&&p| p >= 1e-15).sum();
    Ok(probs
        .iter()
        .enumerate()
        .filter(|(_, &p)| p >= 1e-15)
        .map(|(c, &p)| (c, p / total, rules::check_branch(l1.values(), l2.values(), g, c, p)))
        .collect())
}

/// Fast-path herald list of a homomorphism output keyed by representative.
pub fn keyed_hom(lam: &EigenList, hom: &HomSpec) -> Result<Vec<(usize, f64, Vec<f64>)>> {
    let rule = rules::HomRule::new(hom)?;
    let probs = rule.probs(lam.values());
    Ok(probs
        .iter()
        .enumerate()
        .filter(|(_, &p)| p >= 1e-15)
        .map(|(k, &p)| (rule.cosets().reps()[k], p, rule.branch(lam.values(), k, p)))
        .collect())
}

/// Fast-path herald list of a marginalization keyed by discarded character.
pub fn keyed_marginal(lam: &EigenList, keep: usize) -> Result<Vec<(usize, f64, Vec<f64>)>> {
    let n1: usize = lam.group().moduli()[..keep].iter().product();
    let n2 = lam.group().order() / n1;
    let probs = rules::marginal_probs(lam.values(), n1, n2);
    Ok(probs
        .iter()
        .enumerate()
        .filter(|(_, &p)| p >= 1e-15)
        .map(|(e, &p)| (e, p, rules::marginal_branch(lam.values(), n1, n2, e, p)))
        .collect())
}

/// Result of certifying one rule over random instances.
#[derive(Clone, Debug, Serialize)]
pub struct RuleReport {
    pub rule: String,
    pub group: Vec<usize>,
    pub instances: usize,
    pub max_dp: f64,
    pub max_dlambda: f64,
    pub max_defect: f64,
    pub pass: bool,
}

/// Rules certified by [`verify_rule`].
pub const RULES: [&str; 5] = ["check", "equality", "hom", "marginalize", "automorphism"];

/// Compares fast path and oracle on `count` random instances of one rule.
pub fn verify_rule<R: Rng + ?Sized>(
    rule: &str,
    g: &GroupSpec,
    count: usize,
    rng: &mut R,
) -> Result<RuleReport> {
    let targets: Vec<GroupSpec> = [vec![], vec![2], vec![3], vec![4], vec![6], vec![2, 2], vec![3, 2]]
        .into_iter()
        .map(|m| GroupSpec::new(m).expect("valid moduli"))
        .collect();
    let mut max_dp: f64 = 0.0;
    let mut max_dl: f64 = 0.0;
    let mut defect: f64 = 0.0;
    for _ in 0..count {
        match rule {
            "check" => {
                let l1 = random_eigenlist(g, rng);
                let l2 = random_eigenlist(g, rng);
                let o = simulate_check(&l1, &l2)?;
                let (dp, dl) = compare_mixture(&o, &keyed_check(&l1, &l2)?);
                max_dp = max_dp.max(dp);
                max_dl = max_dl.max(dl);
                defect = defect.max(o.defect);
            }
            "equality" => {
                let l1 = random_eigenlist(g, rng);
                let l2 = random_eigenlist(g, rng);
                let (o, d) = simulate_equality(&l1, &l2)?;
                let f = rules::equality_combine(&l1, &l2)?;
                max_dl = max_dl.max(max_diff(&o, f.values()));
                defect = defect.max(d);
            }
            "hom" => {
                let lam = random_eigenlist(g, rng);
                let h = random_surjection(g, &targets, rng);
                let o = simulate_hom(&lam, &h)?;
                let (dp, dl) = compare_mixture(&o, &keyed_hom(&lam, &h)?);
                max_dp = max_dp.max(dp);
                max_dl = max_dl.max(dl);
                defect = defect.max(o.defect);
            }
            "marginalize" => {
                let extra = GroupSpec::cyclic(rng.gen_range(2..=3))?;
                let u = g.product(&extra);
                let lam = random_eigenlist(&u, rng);
                let o = simulate_marginalize(&lam, g.rank())?;
                let (dp, dl) = compare_mixture(&o, &keyed_marginal(&lam, g.rank())?);
                max_dp = max_dp.max(dp);
                max_dl = max_dl.max(dl);
                defect = defect.max(o.defect);
            }
            "automorphism" => {
                let lam = random_eigenlist(g, rng);
                let phi = random_automorphism(g, rng);
                let (o, d) = simulate_automorphism(&lam, &phi)?;
                let f = rules::apply_automorphism(&lam, &phi)?;
                max_dl = max_dl.max(max_diff(&o, f.values()));
                defect = defect.max(d);
            }
            other => return Err(Error::validation(format!("unknown rule {other}"))),
        }
    }
    Ok(RuleReport {
        rule: rule.to_string(),
        group: g.moduli().to_vec(),
        instances: count,
        max_dp,
        max_dlambda: max_dl,
        max_defect: defect,
        pass: max_dp <= 1e-10 && max_dl <= 1e-9 && defect <= 1e-9,
    })
}

fn max_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}
