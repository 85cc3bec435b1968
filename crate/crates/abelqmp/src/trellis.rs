//! Finite-state (trellis) message passing for convolutional encoders over
//! abelian groups.
//!
//! A section is indexed by the branch variable `(g_t, S_t)` in `G^{m+1}`
//! with the fresh symbol block first. The automorphism `phi` reindexes the
//! branch as `(S_{t+1}, w_t)`, where `w_t` is the coordinate block leaving
//! the memory, so the next state is read off by marginalizing the last block.
//!
//! Forward step: adjoin a uniform symbol to the state message, combine with
//! the section evidence, apply `phi`, marginalize. Backward step: lift the
//! next-state message along `(g, S) -> S_{t+1}`, combine, swap the symbol
//! block to the back, marginalize.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::eigen::EigenList;
use crate::error::{Error, Result};
use crate::group::{gcd, GroupSpec, HomSpec};
use crate::herald::{sample_index, Branch, HeraldedMessage, MERGE_TOL, MIN_PROB};
use crate::io::{GroupDoc, SCHEMA_VERSION};
use crate::rules::{adjoin_values, equality_values, marginal_branch, marginal_probs, permute_values, LiftRule};
use crate::seed::task_rng;
use crate::tree::{FactorGraph, FactorKind, FactorSpec, Mode, Root};

/// Structure of one trellis section.
#[derive(Clone, Debug, PartialEq)]
pub struct TrellisSpec {
    symbol_group: GroupSpec,
    memory: usize,
    output_group: GroupSpec,
    outputs: Vec<HomSpec>,
    phi: HomSpec,
}

impl TrellisSpec {
    /// Validates output maps (surjective onto `output_group`) and `phi`
    /// (automorphism of the branch group).
    pub fn new(
        symbol_group: GroupSpec,
        memory: usize,
        output_group: GroupSpec,
        outputs: Vec<HomSpec>,
        phi: HomSpec,
    ) -> Result<Self> {
        let branch = symbol_group.power(memory + 1);
        for (i, l) in outputs.iter().enumerate() {
            if l.source() != &branch || l.target() != &output_group {
                return Err(Error::validation(format!(
                    "output L{i} maps {} -> {}, expected {branch} -> {output_group}",
                    l.source(),
                    l.target()
                )));
            }
            if !l.is_surjective()? {
                return Err(Error::validation(format!("output L{i} is not surjective")));
            }
        }
        if phi.source() != &branch || phi.target() != &branch {
            return Err(Error::validation(format!(
                "section automorphism must map {branch} to itself"
            )));
        }
        if !phi.is_automorphism()? {
            return Err(Error::validation("section map phi is not an automorphism"));
        }
        Ok(TrellisSpec {
            symbol_group,
            memory,
            output_group,
            outputs,
            phi,
        })
    }

    /// Feedforward shift register: the state holds the previous `m` inputs
    /// and `phi` is the identity in branch coordinates.
    pub fn shift_register(
        symbol_group: GroupSpec,
        memory: usize,
        output_group: GroupSpec,
        outputs: Vec<HomSpec>,
    ) -> Result<Self> {
        let phi = HomSpec::identity(&symbol_group.power(memory + 1));
        TrellisSpec::new(symbol_group, memory, output_group, outputs, phi)
    }

    /// Recursive encoder `p(D)/q(D)` over `Z_modulus` in controller canonical
    /// form. The state holds the last `m` feedback register cells
    /// `a_{t-1}, ..., a_{t-m}` with `a_t = q0^{-1}(u_t - sum_k q_k a_{t-k})`
    /// and parity `sum_k p_k a_{t-k}`; the discarded block is `a_{t-m}`.
    pub fn from_transfer_function(p: &[usize], q: &[usize], modulus: usize) -> Result<Self> {
        if p.is_empty() || q.is_empty() {
            return Err(Error::validation("transfer function needs coefficients"));
        }
        let zq = GroupSpec::cyclic(modulus)?;
        let m = p.len().max(q.len()) - 1;
        let coef = |v: &[usize], k: usize| v.get(k).copied().unwrap_or(0) % modulus;
        let q0 = coef(q, 0);
        if gcd(q0, modulus) != 1 {
            return Err(Error::validation(format!(
                "q(0) = {q0} is not a unit modulo {modulus}"
            )));
        }
        let q0inv = (1..modulus)
            .find(|x| (x * q0) % modulus == 1)
            .unwrap_or(1);
        let neg = |x: usize| (modulus - x % modulus) % modulus;
        // a_t as a row over (u, s_1, ..., s_m)
        let mut a_row = vec![q0inv];
        a_row.extend((1..=m).map(|k| neg(q0inv * coef(q, k) % modulus)));
        let mut phi = vec![a_row.clone()];
        for i in 1..=m {
            phi.push((0..=m).map(|j| usize::from(j == i)).collect());
        }
        let p0 = coef(p, 0);
        let mut l_row: Vec<usize> = a_row.iter().map(|&x| p0 * x % modulus).collect();
        for k in 1..=m {
            l_row[k] = (l_row[k] + coef(p, k)) % modulus;
        }
        let branch = zq.power(m + 1);
        let parity = HomSpec::new(branch.clone(), zq.clone(), vec![l_row])?;
        let phi = HomSpec::new(branch.clone(), branch, phi)?;
        TrellisSpec::new(zq.clone(), m, zq, vec![parity], phi)
    }

    pub fn symbol_group(&self) -> &GroupSpec {
        &self.symbol_group
    }

    pub fn memory(&self) -> usize {
        self.memory
    }

    pub fn output_group(&self) -> &GroupSpec {
        &self.output_group
    }

    pub fn outputs(&self) -> &[HomSpec] {
        &self.outputs
    }

    pub fn phi(&self) -> &HomSpec {
        &self.phi
    }

    pub fn branch_group(&self) -> GroupSpec {
        self.symbol_group.power(self.memory + 1)
    }

    pub fn state_group(&self) -> GroupSpec {
        self.symbol_group.power(self.memory)
    }
}

/// Re-checks the invariants of a trellis.
pub fn validate_trellis(spec: &TrellisSpec) -> Result<()> {
    TrellisSpec::new(
        spec.symbol_group.clone(),
        spec.memory,
        spec.output_group.clone(),
        spec.outputs.clone(),
        spec.phi.clone(),
    )
    .map(|_| ())
}

/// Compiled section: dual maps and lifts as index tables.
#[derive(Clone, Debug)]
pub struct Section {
    spec: TrellisSpec,
    branch: GroupSpec,
    state: GroupSpec,
    sym_lift: LiftRule,
    out_lifts: Vec<LiftRule>,
    next_lift: LiftRule,
    phi_dual: Vec<usize>,
    swap_dual: Vec<usize>,
}

fn dual_perm(h: &HomSpec) -> Result<Vec<usize>> {
    Ok(crate::dual::DualMap::new(h)?.as_slice().to_vec())
}

impl Section {
    pub fn new(spec: &TrellisSpec) -> Result<Self> {
        let branch = spec.branch_group();
        let state = spec.state_group();
        let r = spec.symbol_group.rank();
        let rank = branch.rank();
        let sym = HomSpec::projection(&branch, &(0..r).collect::<Vec<_>>())?;
        let state_of_next = HomSpec::projection(&branch, &(0..rank - r).collect::<Vec<_>>())?;
        let next = state_of_next.compose(&spec.phi)?;
        let swap: Vec<usize> = (r..rank).chain(0..r).collect();
        let swap = HomSpec::permute_coordinates(&branch, &swap)?;
        Ok(Section {
            spec: spec.clone(),
            sym_lift: LiftRule::new(&sym)?,
            out_lifts: spec.outputs.iter().map(LiftRule::new).collect::<Result<_>>()?,
            next_lift: LiftRule::new(&next)?,
            phi_dual: dual_perm(&spec.phi)?,
            swap_dual: dual_perm(&swap)?,
            branch,
            state,
        })
    }

    pub fn spec(&self) -> &TrellisSpec {
        &self.spec
    }

    pub fn branch_group(&self) -> &GroupSpec {
        &self.branch
    }

    pub fn state_group(&self) -> &GroupSpec {
        &self.state
    }

    fn sym_order(&self) -> usize {
        self.spec.symbol_group.order()
    }

    /// Equality combination of symbol-level lists and lifted output lists,
    /// as a branch-group list. `None` when there is no evidence.
    pub fn local_evidence(&self, outputs: &[&[f64]], symbol: &[&[f64]]) -> Option<Vec<f64>> {
        let g = &self.spec.symbol_group;
        let mut sym: Option<Vec<f64>> = None;
        for s in symbol {
            sym = Some(match sym {
                None => s.to_vec(),
                Some(acc) => equality_values(&acc, s, g),
            });
        }
        let mut acc = sym.map(|s| self.sym_lift.lift_values(&s));
        for (i, o) in outputs.iter().enumerate() {
            let lifted = self.out_lifts[i].lift_values(o);
            acc = Some(match acc {
                None => lifted,
                Some(a) => equality_values(&a, &lifted, &self.branch),
            });
        }
        acc
    }

    fn with_evidence(&self, v: Vec<f64>, local: Option<&[f64]>) -> Vec<f64> {
        match local {
            None => v,
            Some(l) => equality_values(&v, l, &self.branch),
        }
    }

    /// Branch-group list before the forward marginalization.
    fn forward_joint(&self, alpha: &[f64], local: Option<&[f64]>) -> Vec<f64> {
        let v = self.with_evidence(adjoin_values(alpha, self.sym_order()), local);
        permute_values(&v, &self.phi_dual)
    }

    fn backward_joint(&self, beta: &[f64], local: Option<&[f64]>) -> Vec<f64> {
        let v = self.with_evidence(self.next_lift.lift_values(beta), local);
        permute_values(&v, &self.swap_dual)
    }

    fn posterior_joint(&self, alpha: &[f64], beta: &[f64], local: Option<&[f64]>) -> Vec<f64> {
        let a = adjoin_values(alpha, self.sym_order());
        let b = self.next_lift.lift_values(beta);
        self.with_evidence(equality_values(&a, &b, &self.branch), local)
    }

    fn split_state(&self) -> (usize, usize) {
        (self.state.order(), self.sym_order())
    }

    fn split_symbol(&self) -> (usize, usize) {
        (self.sym_order(), self.state.order())
    }

    /// One forward step on pure lists with a drawn herald.
    pub fn forward_sampled<R: Rng + ?Sized>(&self, alpha: &[f64], local: Option<&[f64]>, rng: &mut R) -> Vec<f64> {
        let (n1, n2) = self.split_state();
        draw_marginal(&self.forward_joint(alpha, local), n1, n2, rng)
    }

    pub fn backward_sampled<R: Rng + ?Sized>(&self, beta: &[f64], local: Option<&[f64]>, rng: &mut R) -> Vec<f64> {
        let (n1, n2) = self.split_state();
        draw_marginal(&self.backward_joint(beta, local), n1, n2, rng)
    }

    /// Symbol message from state messages and evidence, with a drawn herald.
    pub fn symbol_sampled<R: Rng + ?Sized>(
        &self,
        alpha: &[f64],
        beta: &[f64],
        local: Option<&[f64]>,
        rng: &mut R,
    ) -> Vec<f64> {
        let (n1, n2) = self.split_symbol();
        draw_marginal(&self.posterior_joint(alpha, beta, local), n1, n2, rng)
    }
}

fn draw_marginal<R: Rng + ?Sized>(joint: &[f64], n1: usize, n2: usize, rng: &mut R) -> Vec<f64> {
    let probs = marginal_probs(joint, n1, n2);
    let eta = sample_index(&probs, rng);
    marginal_branch(joint, n1, n2, eta, probs[eta])
}

/// Evidence observed on one section.
#[derive(Clone, Debug)]
pub struct SectionObs {
    /// One list per output map, on the output group.
    pub outputs: Vec<EigenList>,
    /// Systematic observation of the symbol.
    pub symbol: Option<EigenList>,
    /// A priori message on the symbol.
    pub apriori: Option<EigenList>,
}

impl SectionObs {
    pub fn outputs_only(outputs: Vec<EigenList>) -> Self {
        SectionObs {
            outputs,
            symbol: None,
            apriori: None,
        }
    }
}

/// Either a fixed known state (all-ones list) or an unknown one (useless list).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Boundary {
    Known,
    Unknown,
}

impl Boundary {
    fn list(self, g: &GroupSpec) -> EigenList {
        match self {
            Boundary::Known => EigenList::perfect(g),
            Boundary::Unknown => EigenList::useless(g),
        }
    }
}

#[derive(Clone, Debug)]
pub struct TrellisOptions {
    pub mode: Mode,
    pub seed: u64,
    pub prune_eps: f64,
    pub branch_cap: usize,
    pub cap_prune_eps: f64,
    pub start: Boundary,
    pub end: Boundary,
}

impl Default for TrellisOptions {
    fn default() -> Self {
        TrellisOptions {
            mode: Mode::Exact,
            seed: 0,
            prune_eps: 0.0,
            branch_cap: 100_000,
            cap_prune_eps: 1e-12,
            start: Boundary::Known,
            end: Boundary::Known,
        }
    }
}

/// Per-section symbol messages of a decoded block.
#[derive(Clone, Debug)]
pub struct BlockResult {
    pub posterior: Vec<HeraldedMessage>,
    /// Omits the a priori message of the section itself.
    pub extrinsic: Vec<HeraldedMessage>,
    pub warnings: Vec<String>,
}

const DIR_FWD: u64 = 0;
const DIR_BWD: u64 = 1;
const DIR_POST: u64 = 2;
const DIR_EXT: u64 = 3;

struct Decoder<'a> {
    sec: &'a Section,
    opts: &'a TrellisOptions,
    warnings: Vec<String>,
}

impl Decoder<'_> {
    fn rng(&self, dir: u64, t: usize) -> ChaCha8Rng {
        task_rng(self.opts.seed, &[dir, t as u64])
    }

    /// Applies `joint` to every branch (or pair of branches) and splits by
    /// marginalization into `(n1, n2)`.
    fn mixed(
        &mut self,
        inputs: Vec<(f64, Vec<f64>, Vec<String>)>,
        out_group: &GroupSpec,
        n2: usize,
        tag: &str,
        rng: &mut ChaCha8Rng,
    ) -> Result<HeraldedMessage> {
        let n1 = out_group.order();
        let mut out = Vec::new();
        if self.opts.mode == Mode::Sampled {
            let probs: Vec<f64> = inputs.iter().map(|x| x.0).collect();
            let (_, joint, label) = &inputs[sample_index(&probs, rng)];
            let v = draw_marginal(joint, n1, n2, rng);
            out.push(Branch {
                p: 1.0,
                lambda: EigenList::from_raw(out_group, v),
                label: label.clone(),
            });
            return Ok(HeraldedMessage::from_parts(out_group, out));
        }
        let blk = GroupSpec::new(vec![n2]).ok();
        for (p, joint, label) in inputs {
            let probs = marginal_probs(&joint, n1, n2);
            for (eta, &q) in probs.iter().enumerate() {
                let pq = p * q;
                if pq < MIN_PROB {
                    continue;
                }
                let mut label = label.clone();
                let eta_label = blk.as_ref().map_or("()".into(), |b| b.label(eta));
                label.push(format!("{tag}:\u{3b7}={eta_label}"));
                out.push(Branch {
                    p: pq,
                    lambda: EigenList::from_raw(out_group, marginal_branch(&joint, n1, n2, eta, q)),
                    label: crate::herald::concat_labels(&label, &[]),
                });
            }
        }
        let total: f64 = out.iter().map(|b| b.p).sum();
        if out.is_empty() || total <= 0.0 {
            return Err(Error::numerical(format!("all branches vanish at {tag}")));
        }
        out.iter_mut().for_each(|b| b.p /= total);
        let m = HeraldedMessage::from_parts(out_group, out)
            .merge_duplicates(MERGE_TOL)
            .prune(self.opts.prune_eps)?;
        if m.len() > self.opts.branch_cap {
            self.warnings.push(format!(
                "{} branches at {tag} exceed cap {}; pruning below {}",
                m.len(),
                self.opts.branch_cap,
                self.opts.cap_prune_eps
            ));
            return m.prune(self.opts.cap_prune_eps);
        }
        Ok(m)
    }
}

fn branch_inputs(m: &HeraldedMessage, f: impl Fn(&[f64]) -> Vec<f64>) -> Vec<(f64, Vec<f64>, Vec<String>)> {
    m.branches()
        .iter()
        .map(|b| (b.p, f(b.lambda.values()), b.label.clone()))
        .collect()
}

fn evidence(sec: &Section, o: &SectionObs, with_apriori: bool) -> Result<Option<Vec<f64>>> {
    if o.outputs.len() != sec.spec.outputs.len() {
        return Err(Error::validation(format!(
            "section has {} outputs, observation has {}",
            sec.spec.outputs.len(),
            o.outputs.len()
        )));
    }
    for l in &o.outputs {
        sec.spec.output_group.ensure_same(l.group())?;
    }
    let mut sym: Vec<&[f64]> = Vec::new();
    for l in o.symbol.iter().chain(if with_apriori { o.apriori.as_ref() } else { None }) {
        sec.spec.symbol_group.ensure_same(l.group())?;
        sym.push(l.values());
    }
    let outs: Vec<&[f64]> = o.outputs.iter().map(|l| l.values()).collect();
    Ok(sec.local_evidence(&outs, &sym))
}

/// Forward messages `alpha_0 .. alpha_T` on the state group.
pub fn forward_messages(sec: &Section, obs: &[SectionObs], opts: &TrellisOptions) -> Result<(Vec<HeraldedMessage>, Vec<String>)> {
    let mut dec = Decoder {
        sec,
        opts,
        warnings: Vec::new(),
    };
    let alphas = dec.forward(obs)?;
    Ok((alphas, dec.warnings))
}

impl Decoder<'_> {
    fn forward(&mut self, obs: &[SectionObs]) -> Result<Vec<HeraldedMessage>> {
        let sec = self.sec;
        let mut alphas = vec![HeraldedMessage::pure(self.opts.start.list(&sec.state))];
        for (t, o) in obs.iter().enumerate() {
            let local = evidence(sec, o, true)?;
            let inputs = branch_inputs(&alphas[t], |a| sec.forward_joint(a, local.as_deref()));
            let mut rng = self.rng(DIR_FWD, t);
            let next = self.mixed(inputs, &sec.state, sec.sym_order(), &format!("fwd{t}"), &mut rng)?;
            alphas.push(next);
        }
        Ok(alphas)
    }

    fn backward(&mut self, obs: &[SectionObs]) -> Result<Vec<HeraldedMessage>> {
        let sec = self.sec;
        let n = obs.len();
        let mut betas = vec![HeraldedMessage::pure(self.opts.end.list(&sec.state)); n + 1];
        for t in (0..n).rev() {
            let local = evidence(sec, &obs[t], true)?;
            let inputs = branch_inputs(&betas[t + 1], |b| sec.backward_joint(b, local.as_deref()));
            let mut rng = self.rng(DIR_BWD, t);
            betas[t] = self.mixed(inputs, &sec.state, sec.sym_order(), &format!("bwd{t}"), &mut rng)?;
        }
        Ok(betas)
    }

    fn symbol(
        &mut self,
        alpha: &HeraldedMessage,
        beta: &HeraldedMessage,
        local: Option<&[f64]>,
        tag: &str,
        rng: &mut ChaCha8Rng,
    ) -> Result<HeraldedMessage> {
        let sec = self.sec;
        let mut inputs = Vec::with_capacity(alpha.len() * beta.len());
        for a in alpha.branches() {
            for b in beta.branches() {
                let p = a.p * b.p;
                if p < MIN_PROB {
                    continue;
                }
                inputs.push((
                    p,
                    sec.posterior_joint(a.lambda.values(), b.lambda.values(), local),
                    crate::herald::concat_labels(&a.label, &b.label),
                ));
            }
        }
        self.mixed(inputs, &sec.spec.symbol_group, sec.state.order(), tag, rng)
    }
}

/// Full forward-backward decoding with per-section posterior and extrinsic
/// symbol messages.
pub fn decode_block(sec: &Section, obs: &[SectionObs], opts: &TrellisOptions) -> Result<BlockResult> {
    let mut dec = Decoder {
        sec,
        opts,
        warnings: Vec::new(),
    };
    let alphas = dec.forward(obs)?;
    let betas = dec.backward(obs)?;
    let mut posterior = Vec::with_capacity(obs.len());
    let mut extrinsic = Vec::with_capacity(obs.len());
    for (t, o) in obs.iter().enumerate() {
        let full = evidence(sec, o, true)?;
        let mut rng = dec.rng(DIR_POST, t);
        posterior.push(dec.symbol(&alphas[t], &betas[t + 1], full.as_deref(), &format!("post{t}"), &mut rng)?);
        if o.apriori.is_some() {
            let ext = evidence(sec, o, false)?;
            let mut rng = dec.rng(DIR_EXT, t);
            extrinsic.push(dec.symbol(&alphas[t], &betas[t + 1], ext.as_deref(), &format!("ext{t}"), &mut rng)?);
        } else {
            extrinsic.push(posterior[t].clone());
        }
    }
    Ok(BlockResult {
        posterior,
        extrinsic,
        warnings: dec.warnings,
    })
}

/// Branch posterior on `G^{m+1}` as a heralded mixture (no marginalization).
pub fn branch_posterior(
    sec: &Section,
    fwd: &HeraldedMessage,
    bwd: &HeraldedMessage,
    obs: &SectionObs,
    include_apriori: bool,
) -> Result<HeraldedMessage> {
    sec.state.ensure_same(fwd.group())?;
    sec.state.ensure_same(bwd.group())?;
    let local = evidence(sec, obs, include_apriori)?;
    let mut out = Vec::new();
    for a in fwd.branches() {
        for b in bwd.branches() {
            let p = a.p * b.p;
            if p < MIN_PROB {
                continue;
            }
            out.push(Branch {
                p,
                lambda: EigenList::from_raw(
                    &sec.branch,
                    sec.posterior_joint(a.lambda.values(), b.lambda.values(), local.as_deref()),
                ),
                label: crate::herald::concat_labels(&a.label, &b.label),
            });
        }
    }
    let total: f64 = out.iter().map(|b| b.p).sum();
    out.iter_mut().for_each(|b| b.p /= total);
    Ok(HeraldedMessage::from_parts(&sec.branch, out).merge_duplicates(MERGE_TOL))
}

/// Single forward step from `alpha_t` with section evidence.
pub fn forward_step(sec: &Section, alpha: &HeraldedMessage, obs: &SectionObs, opts: &TrellisOptions) -> Result<HeraldedMessage> {
    sec.state.ensure_same(alpha.group())?;
    let mut dec = Decoder {
        sec,
        opts,
        warnings: Vec::new(),
    };
    let local = evidence(sec, obs, true)?;
    let inputs = branch_inputs(alpha, |a| sec.forward_joint(a, local.as_deref()));
    let mut rng = dec.rng(DIR_FWD, 0);
    dec.mixed(inputs, &sec.state, sec.sym_order(), "fwd", &mut rng)
}

/// Single backward step from `beta_{t+1}` with section evidence.
pub fn backward_step(sec: &Section, beta: &HeraldedMessage, obs: &SectionObs, opts: &TrellisOptions) -> Result<HeraldedMessage> {
    sec.state.ensure_same(beta.group())?;
    let mut dec = Decoder {
        sec,
        opts,
        warnings: Vec::new(),
    };
    let local = evidence(sec, obs, true)?;
    let inputs = branch_inputs(beta, |b| sec.backward_joint(b, local.as_deref()));
    let mut rng = dec.rng(DIR_BWD, 0);
    dec.mixed(inputs, &sec.state, sec.sym_order(), "bwd", &mut rng)
}

/// The block as an explicit tree factor graph rooted at symbol `target`.
///
/// Per section: branch variable `b_t`, its reindexing `c_t = phi(b_t)`,
/// states `S_t`, symbol `g_t` and outputs `x_t^i`, tied by homomorphism,
/// automorphism and marginalization factors. With `include_apriori` false
/// the a priori leaf of the target section is left out.
pub fn unrolled_graph(
    spec: &TrellisSpec,
    obs: &[SectionObs],
    target: usize,
    include_apriori: bool,
    start: Boundary,
    end: Boundary,
) -> Result<FactorGraph> {
    if target >= obs.len() {
        return Err(Error::validation("target section out of range"));
    }
    let branch = spec.branch_group();
    let state = spec.state_group();
    let r = spec.symbol_group.rank();
    let rank = branch.rank();
    let mut vars = Vec::new();
    let mut factors = Vec::new();
    let leaf = |id: String, v: String, l: EigenList| FactorSpec {
        id,
        kind: FactorKind::Leaf(HeraldedMessage::pure(l)),
        edges: vec![v],
    };
    let n = obs.len();
    for t in 0..=n {
        vars.push((format!("S{t}"), state.clone()));
    }
    factors.push(leaf("start".into(), "S0".into(), start.list(&state)));
    factors.push(leaf("end".into(), format!("S{n}"), end.list(&state)));
    let to_state = HomSpec::projection(&branch, &(r..rank).collect::<Vec<_>>())?;
    let to_symbol = HomSpec::projection(&branch, &(0..r).collect::<Vec<_>>())?;
    for (t, o) in obs.iter().enumerate() {
        let (b, c, g) = (format!("b{t}"), format!("c{t}"), format!("g{t}"));
        vars.push((b.clone(), branch.clone()));
        vars.push((c.clone(), branch.clone()));
        vars.push((g.clone(), spec.symbol_group.clone()));
        factors.push(FactorSpec {
            id: format!("state{t}"),
            kind: FactorKind::Hom(to_state.clone()),
            edges: vec![b.clone(), format!("S{t}")],
        });
        factors.push(FactorSpec {
            id: format!("phi{t}"),
            kind: FactorKind::Automorphism(spec.phi.clone()),
            edges: vec![b.clone(), c.clone()],
        });
        factors.push(FactorSpec {
            id: format!("next{t}"),
            kind: FactorKind::Marginalize { keep: rank - r },
            edges: vec![c, format!("S{}", t + 1)],
        });
        factors.push(FactorSpec {
            id: format!("sym{t}"),
            kind: FactorKind::Hom(to_symbol.clone()),
            edges: vec![b.clone(), g.clone()],
        });
        for (i, (l, lam)) in spec.outputs.iter().zip(&o.outputs).enumerate() {
            let x = format!("x{t}_{i}");
            vars.push((x.clone(), spec.output_group.clone()));
            factors.push(FactorSpec {
                id: format!("L{t}_{i}"),
                kind: FactorKind::Hom(l.clone()),
                edges: vec![b.clone(), x.clone()],
            });
            factors.push(leaf(format!("obs{t}_{i}"), x, lam.clone()));
        }
        if let Some(s) = &o.symbol {
            factors.push(leaf(format!("sys{t}"), g.clone(), s.clone()));
        }
        if let Some(a) = &o.apriori {
            if include_apriori || t != target {
                factors.push(leaf(format!("apr{t}"), g.clone(), a.clone()));
            }
        }
    }
    FactorGraph::new(
        vars,
        factors,
        Root {
            factor: None,
            variable: format!("g{target}"),
        },
    )
}

/// Shorthand for a recursive encoder over `Z_modulus`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TransferFunctionDoc {
    pub p: Vec<usize>,
    pub q: Vec<usize>,
    pub modulus: usize,
}

/// JSON form of a trellis: either `transfer_function` alone or the explicit
/// fields. A missing `phi` selects the shift-register identity.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrellisDoc {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub version: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub transfer_function: Option<TransferFunctionDoc>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub symbol_group: Option<GroupDoc>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub memory: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_group: Option<GroupDoc>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub outputs: Option<Vec<Vec<Vec<usize>>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub phi: Option<Vec<Vec<usize>>>,
}

impl TrellisDoc {
    pub fn build(&self) -> Result<TrellisSpec> {
        if let Some(v) = self.version {
            if v != SCHEMA_VERSION {
                return Err(Error::validation(format!("unsupported trellis version {v}")));
            }
        }
        if let Some(tf) = &self.transfer_function {
            if self.symbol_group.is_some()
                || self.memory.is_some()
                || self.output_group.is_some()
                || self.outputs.is_some()
                || self.phi.is_some()
            {
                return Err(Error::validation(
                    "transfer_function excludes the explicit trellis fields",
                ));
            }
            return TrellisSpec::from_transfer_function(&tf.p, &tf.q, tf.modulus);
        }
        let need = |name: &str| Error::validation(format!("trellis is missing '{name}'"));
        let g = self.symbol_group.as_ref().ok_or_else(|| need("symbol_group"))?.to_spec()?;
        let m = self.memory.ok_or_else(|| need("memory"))?;
        let h = self.output_group.as_ref().ok_or_else(|| need("output_group"))?.to_spec()?;
        let branch = g.power(m + 1);
        let outputs = self
            .outputs
            .as_ref()
            .ok_or_else(|| need("outputs"))?
            .iter()
            .enumerate()
            .map(|(i, mat)| {
                HomSpec::new(branch.clone(), h.clone(), mat.clone())
                    .map_err(|e| Error::validation(format!("outputs[{i}] (L{i}): {e}")))
            })
            .collect::<Result<Vec<_>>>()?;
        match &self.phi {
            None => TrellisSpec::shift_register(g, m, h, outputs),
            Some(mat) => {
                let phi = HomSpec::new(branch.clone(), branch, mat.clone())
                    .map_err(|e| Error::validation(format!("phi: {e}")))?;
                TrellisSpec::new(g, m, h, outputs, phi)
            }
        }
    }

    pub fn from_spec(spec: &TrellisSpec) -> Self {
        TrellisDoc {
            version: Some(SCHEMA_VERSION),
            transfer_function: None,
            symbol_group: Some(GroupDoc::from_spec(&spec.symbol_group)),
            memory: Some(spec.memory),
            output_group: Some(GroupDoc::from_spec(&spec.output_group)),
            outputs: Some(spec.outputs.iter().map(|l| l.matrix().to_vec()).collect()),
            phi: Some(spec.phi.matrix().to_vec()),
        }
    }
}

/// Observations of one section as raw eigen lists.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SectionObsDoc {
    pub outputs: Vec<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub symbol: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub apriori: Option<Vec<f64>>,
}

fn known() -> Boundary {
    Boundary::Known
}

/// A block of section observations with its boundary states.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BlockObsDoc {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub version: Option<u32>,
    pub sections: Vec<SectionObsDoc>,
    #[serde(default = "known")]
    pub start: Boundary,
    #[serde(default = "known")]
    pub end: Boundary,
}

impl BlockObsDoc {
    pub fn build(&self, spec: &TrellisSpec) -> Result<Vec<SectionObs>> {
        if let Some(v) = self.version {
            if v != SCHEMA_VERSION {
                return Err(Error::validation(format!("unsupported observation version {v}")));
            }
        }
        let h = spec.output_group();
        let g = spec.symbol_group();
        self.sections
            .iter()
            .enumerate()
            .map(|(t, s)| {
                let at = |what: &str, e: Error| Error::validation(format!("sections[{t}].{what}: {e}"));
                if s.outputs.len() != spec.outputs().len() {
                    return Err(Error::validation(format!(
                        "sections[{t}].outputs: expected {} lists, got {}",
                        spec.outputs().len(),
                        s.outputs.len()
                    )));
                }
                let outputs = s
                    .outputs
                    .iter()
                    .enumerate()
                    .map(|(i, v)| EigenList::new(h, v.clone()).map_err(|e| at(&format!("outputs[{i}]"), e)))
                    .collect::<Result<Vec<_>>>()?;
                let list = |v: &Option<Vec<f64>>, what: &str| {
                    v.as_ref()
                        .map(|v| EigenList::new(g, v.clone()).map_err(|e| at(what, e)))
                        .transpose()
                };
                Ok(SectionObs {
                    outputs,
                    symbol: list(&s.symbol, "symbol")?,
                    apriori: list(&s.apriori, "apriori")?,
                })
            })
            .collect()
    }
}
