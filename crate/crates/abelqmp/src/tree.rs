//! Tree factor graphs over abelian-group alphabets and root-directed message
//! passing with heralded mixtures.
//!
//! Factor conventions (edge order as given):
//! - `Leaf`: one edge, carries a channel message.
//! - `Equality`: all edges equal.
//! - `Check`: the last edge is the product of the others.
//! - `Hom`: edges `[x, y]` with `y = phi(x)`, `phi` surjective.
//! - `Marginalize`: edges `[x, y]` with `y` the first `keep` coordinates of `x`.
//! - `Automorphism`: edges `[x, y]` with `y = phi(x)`, `phi` bijective.
//!
//! A variable with no other neighbours sends the useless message, the
//! identity of the equality rule.

use std::collections::{BTreeMap, HashMap};

use rand::seq::SliceRandom;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::eigen::EigenList;
use crate::error::{Error, Result};
use crate::group::{GroupSpec, HomSpec};
use crate::herald::HeraldedMessage;
use crate::io::{GroupDoc, MessageDoc, SCHEMA_VERSION};
use crate::rules::{
    automorphism_mixed, check_mixed, check_sampled, equality_combine, equality_mixed,
    hom_push_mixed, hom_sampled, inverse_relabel, inverse_relabel_mixed, lift_mixed,
    marginalize_mixed, marginalize_sampled, apply_automorphism, HomRule, LiftRule,
};
use crate::seed::task_rng;

/// Constraint carried by a factor node.
#[derive(Clone, Debug)]
pub enum FactorKind {
    Leaf(HeraldedMessage),
    Equality,
    Check,
    Hom(HomSpec),
    Marginalize { keep: usize },
    Automorphism(HomSpec),
}

impl FactorKind {
    fn name(&self) -> &'static str {
        match self {
            FactorKind::Leaf(_) => "leaf",
            FactorKind::Equality => "equality",
            FactorKind::Check => "check",
            FactorKind::Hom(_) => "hom",
            FactorKind::Marginalize { .. } => "marginalize",
            FactorKind::Automorphism(_) => "automorphism",
        }
    }
}

#[derive(Clone, Debug)]
pub struct FactorSpec {
    pub id: String,
    pub kind: FactorKind,
    pub edges: Vec<String>,
}

/// Where the result is read off.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Root {
    /// Restrict to the message sent by this factor; otherwise all incoming
    /// messages at the variable are combined.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub factor: Option<String>,
    pub variable: String,
}

#[derive(Clone, Debug)]
enum Prepared {
    Leaf(HeraldedMessage),
    Equality,
    Check,
    Hom { push: HomRule, pull: LiftRule },
    Marginalize { keep: usize, pull: LiftRule },
    Automorphism { fwd: HomSpec, inv: HomSpec },
}

#[derive(Clone, Debug)]
struct Factor {
    id: String,
    prepared: Prepared,
    edges: Vec<usize>,
}

/// A validated tree factor graph.
#[derive(Clone, Debug)]
pub struct FactorGraph {
    var_names: Vec<String>,
    var_groups: Vec<GroupSpec>,
    factors: Vec<Factor>,
    // variable -> (factor, edge position)
    adjacency: Vec<Vec<(usize, usize)>>,
    root_var: usize,
    root_factor: Option<usize>,
}

struct UnionFind(Vec<usize>);

impl UnionFind {
    fn find(&mut self, mut x: usize) -> usize {
        while self.0[x] != x {
            self.0[x] = self.0[self.0[x]];
            x = self.0[x];
        }
        x
    }

    fn union(&mut self, a: usize, b: usize) -> bool {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra == rb {
            return false;
        }
        self.0[ra] = rb;
        true
    }
}

fn mismatch(f: &str, kind: &str, detail: String) -> Error {
    Error::validation(format!("factor '{f}' ({kind}): {detail}"))
}

impl FactorGraph {
    /// Validates structure and signatures, precomputing rule data.
    pub fn new(variables: Vec<(String, GroupSpec)>, factors: Vec<FactorSpec>, root: Root) -> Result<Self> {
        let mut index = HashMap::new();
        for (i, (name, _)) in variables.iter().enumerate() {
            if index.insert(name.clone(), i).is_some() {
                return Err(Error::validation(format!("duplicate variable '{name}'")));
            }
        }
        let nv = variables.len();
        let groups: Vec<GroupSpec> = variables.iter().map(|(_, g)| g.clone()).collect();
        let mut uf = UnionFind((0..nv + factors.len()).collect());
        let mut adjacency = vec![Vec::new(); nv];
        let mut built = Vec::with_capacity(factors.len());
        let mut factor_index = HashMap::new();
        for (fi, f) in factors.into_iter().enumerate() {
            if factor_index.insert(f.id.clone(), fi).is_some() {
                return Err(Error::validation(format!("duplicate factor '{}'", f.id)));
            }
            let mut edges = Vec::with_capacity(f.edges.len());
            for (pos, v) in f.edges.iter().enumerate() {
                let vi = *index.get(v).ok_or_else(|| {
                    Error::validation(format!("factor '{}' references unknown variable '{v}'", f.id))
                })?;
                if !uf.union(vi, nv + fi) {
                    return Err(Error::validation(format!(
                        "cycle found at edge '{}' -- '{v}'",
                        f.id
                    )));
                }
                adjacency[vi].push((fi, pos));
                edges.push(vi);
            }
            let prepared = prepare(&f, &edges, &groups)?;
            built.push(Factor {
                id: f.id,
                prepared,
                edges,
            });
        }
        if nv + built.len() > 0 {
            let r = uf.find(0);
            for v in 1..nv {
                if uf.find(v) != r {
                    return Err(Error::validation(format!(
                        "graph is disconnected: variable '{}' unreachable",
                        variables[v].0
                    )));
                }
            }
            for (fi, f) in built.iter().enumerate() {
                if uf.find(nv + fi) != r {
                    return Err(Error::validation(format!(
                        "graph is disconnected: factor '{}' unreachable",
                        f.id
                    )));
                }
            }
        }
        let root_var = *index
            .get(&root.variable)
            .ok_or_else(|| Error::validation(format!("root variable '{}' unknown", root.variable)))?;
        let root_factor = match &root.factor {
            None => None,
            Some(name) => {
                let fi = *factor_index
                    .get(name)
                    .ok_or_else(|| Error::validation(format!("root factor '{name}' unknown")))?;
                if !built[fi].edges.contains(&root_var) {
                    return Err(Error::validation(format!(
                        "root edge '{name}' -- '{}' does not exist",
                        root.variable
                    )));
                }
                Some(fi)
            }
        };
        Ok(FactorGraph {
            var_names: variables.into_iter().map(|(n, _)| n).collect(),
            var_groups: groups,
            factors: built,
            adjacency,
            root_var,
            root_factor,
        })
    }

    pub fn variable_count(&self) -> usize {
        self.var_names.len()
    }

    pub fn factor_count(&self) -> usize {
        self.factors.len()
    }

    /// Group of the root variable.
    pub fn root_group(&self) -> &GroupSpec {
        &self.var_groups[self.root_var]
    }
}

fn prepare(f: &FactorSpec, edges: &[usize], groups: &[GroupSpec]) -> Result<Prepared> {
    let kind = f.kind.name();
    let arity = |n: usize| -> Result<()> {
        if edges.len() != n {
            return Err(mismatch(&f.id, kind, format!("expects {n} edges, got {}", edges.len())));
        }
        Ok(())
    };
    let all_same = || -> Result<()> {
        let g0 = &groups[edges[0]];
        for (pos, &v) in edges.iter().enumerate().skip(1) {
            if &groups[v] != g0 {
                return Err(mismatch(
                    &f.id,
                    kind,
                    format!("edge {} '{}' has group {}, expected {g0}", pos, f.edges[pos], groups[v]),
                ));
            }
        }
        Ok(())
    };
    let hom_fits = |h: &HomSpec| -> Result<()> {
        if h.source() != &groups[edges[0]] || h.target() != &groups[edges[1]] {
            return Err(mismatch(
                &f.id,
                kind,
                format!(
                    "map {} -> {} does not match edges {} -> {}",
                    h.source(),
                    h.target(),
                    groups[edges[0]],
                    groups[edges[1]]
                ),
            ));
        }
        Ok(())
    };
    Ok(match &f.kind {
        FactorKind::Leaf(m) => {
            arity(1)?;
            if m.group() != &groups[edges[0]] {
                return Err(mismatch(
                    &f.id,
                    kind,
                    format!("message on {} attached to {}", m.group(), groups[edges[0]]),
                ));
            }
            Prepared::Leaf(m.clone())
        }
        FactorKind::Equality => {
            if edges.is_empty() {
                return Err(mismatch(&f.id, kind, "needs at least one edge".into()));
            }
            all_same()?;
            Prepared::Equality
        }
        FactorKind::Check => {
            if edges.len() < 2 {
                return Err(mismatch(&f.id, kind, "needs at least two edges".into()));
            }
            all_same()?;
            Prepared::Check
        }
        FactorKind::Hom(h) => {
            arity(2)?;
            hom_fits(h)?;
            h.ensure_surjective()
                .map_err(|e| mismatch(&f.id, kind, e.to_string()))?;
            Prepared::Hom {
                push: HomRule::new(h)?,
                pull: LiftRule::new(h)?,
            }
        }
        FactorKind::Marginalize { keep } => {
            arity(2)?;
            let src = &groups[edges[0]];
            if *keep > src.rank() || src.moduli()[..*keep] != *groups[edges[1]].moduli() {
                return Err(mismatch(
                    &f.id,
                    kind,
                    format!("keeping {keep} coordinates of {src} does not give {}", groups[edges[1]]),
                ));
            }
            let proj = HomSpec::projection(src, &(0..*keep).collect::<Vec<_>>())?;
            Prepared::Marginalize {
                keep: *keep,
                pull: LiftRule::new(&proj)?,
            }
        }
        FactorKind::Automorphism(h) => {
            arity(2)?;
            hom_fits(h)?;
            if !h.is_automorphism()? {
                return Err(mismatch(&f.id, kind, "map is not an automorphism".into()));
            }
            Prepared::Automorphism {
                fwd: h.clone(),
                inv: h.invert_automorphism()?,
            }
        }
    })
}

/// Exact keeps every herald; sampled draws one herald per rule application.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Exact,
    Sampled,
}

#[derive(Clone, Debug)]
pub struct MpOptions {
    pub mode: Mode,
    pub seed: u64,
    /// Probability floor applied after every rule in exact mode.
    pub prune_eps: f64,
    /// Branch count above which the guard prune kicks in.
    pub branch_cap: usize,
    pub cap_prune_eps: f64,
    /// Shuffles sibling order; the result must not depend on it.
    pub schedule_seed: Option<u64>,
}

impl Default for MpOptions {
    fn default() -> Self {
        MpOptions {
            mode: Mode::Exact,
            seed: 0,
            prune_eps: 0.0,
            branch_cap: 100_000,
            cap_prune_eps: 1e-12,
            schedule_seed: None,
        }
    }
}

#[derive(Clone, Debug)]
pub struct MpOutcome {
    pub root: HeraldedMessage,
    pub warnings: Vec<String>,
}

struct Engine<'a> {
    graph: &'a FactorGraph,
    opts: &'a MpOptions,
    warnings: Vec<String>,
}

const TAG_FACTOR: u64 = 1;
const TAG_VARIABLE: u64 = 2;

impl Engine<'_> {
    fn rng(&self, tag: u64, a: usize, b: usize) -> ChaCha8Rng {
        task_rng(self.opts.seed, &[tag, a as u64, b as u64])
    }

    fn order<T>(&self, items: &mut [T], tag: u64, a: usize, b: usize) {
        if let Some(s) = self.opts.schedule_seed {
            items.shuffle(&mut task_rng(s, &[tag, a as u64, b as u64]));
        }
    }

    fn guard(&mut self, m: HeraldedMessage, at: &str) -> Result<HeraldedMessage> {
        let m = m.prune(self.opts.prune_eps)?;
        if m.len() > self.opts.branch_cap {
            self.warnings.push(format!(
                "{} branches at {at} exceed cap {}; pruning below {}",
                m.len(),
                self.opts.branch_cap,
                self.opts.cap_prune_eps
            ));
            return m.prune(self.opts.cap_prune_eps);
        }
        Ok(m)
    }

    fn sampled(&self) -> bool {
        self.opts.mode == Mode::Sampled
    }

    fn pure_of(m: &HeraldedMessage) -> &EigenList {
        m.as_pure().expect("sampled messages are pure")
    }

    fn equality(&mut self, msgs: Vec<HeraldedMessage>, g: &GroupSpec, at: &str) -> Result<HeraldedMessage> {
        let mut it = msgs.into_iter();
        let Some(mut acc) = it.next() else {
            return Ok(HeraldedMessage::pure(EigenList::useless(g)));
        };
        for m in it {
            acc = if self.sampled() {
                HeraldedMessage::pure(equality_combine(Self::pure_of(&acc), Self::pure_of(&m))?)
            } else {
                let out = equality_mixed(&acc, &m)?;
                self.guard(out, at)?
            };
        }
        Ok(acc)
    }

    fn check(&mut self, msgs: Vec<HeraldedMessage>, rng: &mut ChaCha8Rng, at: &str) -> Result<HeraldedMessage> {
        let mut it = msgs.into_iter();
        let mut acc = it.next().expect("check has inputs");
        for m in it {
            acc = if self.sampled() {
                HeraldedMessage::pure(check_sampled(Self::pure_of(&acc), Self::pure_of(&m), rng)?)
            } else {
                let out = check_mixed(&acc, &m)?;
                self.guard(out, at)?
            };
        }
        Ok(acc)
    }

    fn var_to_factor(&mut self, v: usize, exclude: Option<usize>) -> Result<HeraldedMessage> {
        let mut nbrs: Vec<(usize, usize)> = self.graph.adjacency[v]
            .iter()
            .copied()
            .filter(|&(f, _)| Some(f) != exclude)
            .collect();
        self.order(&mut nbrs, TAG_VARIABLE, v, exclude.map_or(usize::MAX, |f| f));
        let msgs = nbrs
            .iter()
            .map(|&(f, pos)| self.factor_to_var(f, pos))
            .collect::<Result<Vec<_>>>()?;
        let name = &self.graph.var_names[v];
        self.equality(msgs, &self.graph.var_groups[v], name)
    }

    fn factor_to_var(&mut self, f: usize, pos: usize) -> Result<HeraldedMessage> {
        let factor = &self.graph.factors[f];
        let mut rng = self.rng(TAG_FACTOR, f, pos);
        let mut others: Vec<usize> = (0..factor.edges.len()).filter(|&k| k != pos).collect();
        let at = factor.id.clone();
        let incoming = |eng: &mut Self, k: usize| eng.var_to_factor(factor.edges[k], Some(f));
        Ok(match &factor.prepared {
            Prepared::Leaf(m) => {
                if self.sampled() {
                    HeraldedMessage::pure(m.sample(&mut rng).lambda.clone())
                } else {
                    m.clone()
                }
            }
            Prepared::Equality => {
                self.order(&mut others, TAG_FACTOR, f, pos);
                let msgs = others
                    .iter()
                    .map(|&k| incoming(self, k))
                    .collect::<Result<Vec<_>>>()?;
                self.equality(msgs, &self.graph.var_groups[factor.edges[pos]], &at)?
            }
            Prepared::Check => {
                let last = factor.edges.len() - 1;
                self.order(&mut others, TAG_FACTOR, f, pos);
                let mut msgs = Vec::with_capacity(others.len());
                for &k in &others {
                    let m = incoming(self, k)?;
                    // g_pos = h * prod_{j != pos} g_j^{-1}
                    msgs.push(if pos == last || k == last {
                        m
                    } else if self.sampled() {
                        HeraldedMessage::pure(inverse_relabel(Self::pure_of(&m)))
                    } else {
                        inverse_relabel_mixed(&m)
                    });
                }
                self.check(msgs, &mut rng, &at)?
            }
            Prepared::Hom { push, pull } => {
                let m = incoming(self, 1 - pos)?;
                if pos == 1 {
                    if self.sampled() {
                        HeraldedMessage::pure(hom_sampled(Self::pure_of(&m), push, &mut rng)?)
                    } else {
                        let out = hom_push_mixed(&m, push)?;
                        self.guard(out, &at)?
                    }
                } else {
                    lift_mixed(&m, pull)?
                }
            }
            Prepared::Marginalize { keep, pull } => {
                let m = incoming(self, 1 - pos)?;
                if pos == 1 {
                    if self.sampled() {
                        HeraldedMessage::pure(marginalize_sampled(Self::pure_of(&m), *keep, &mut rng)?)
                    } else {
                        let out = marginalize_mixed(&m, *keep)?;
                        self.guard(out, &at)?
                    }
                } else {
                    lift_mixed(&m, pull)?
                }
            }
            Prepared::Automorphism { fwd, inv } => {
                let m = incoming(self, 1 - pos)?;
                let phi = if pos == 1 { fwd } else { inv };
                if self.sampled() {
                    HeraldedMessage::pure(apply_automorphism(Self::pure_of(&m), phi)?)
                } else {
                    automorphism_mixed(&m, phi)?
                }
            }
        })
    }
}

/// Runs root-directed message passing and returns the root message.
pub fn run_mp(graph: &FactorGraph, opts: &MpOptions) -> Result<MpOutcome> {
    let mut eng = Engine {
        graph,
        opts,
        warnings: Vec::new(),
    };
    let root = match graph.root_factor {
        Some(f) => {
            let pos = graph.adjacency[graph.root_var]
                .iter()
                .find(|&&(g, _)| g == f)
                .map(|&(_, p)| p)
                .expect("root edge validated");
            eng.factor_to_var(f, pos)?
        }
        None => eng.var_to_factor(graph.root_var, None)?,
    };
    Ok(MpOutcome {
        root,
        warnings: eng.warnings,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RootMetrics {
    pub avg_holevo: f64,
    pub avg_pgm_error: f64,
}

pub fn root_metrics(root: &HeraldedMessage) -> RootMetrics {
    RootMetrics {
        avg_holevo: root.avg_holevo(),
        avg_pgm_error: root.avg_pgm_error(),
    }
}

/// Mean and standard error of root metrics over independent sampled runs.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SampledMetrics {
    pub runs: usize,
    pub mean: RootMetrics,
    pub stderr: RootMetrics,
}

pub fn sampled_root_metrics(graph: &FactorGraph, runs: usize, seed: u64) -> Result<SampledMetrics> {
    if runs < 2 {
        return Err(Error::validation("need at least two sampled runs"));
    }
    let mut h = Vec::with_capacity(runs);
    let mut e = Vec::with_capacity(runs);
    for r in 0..runs {
        let opts = MpOptions {
            mode: Mode::Sampled,
            seed: crate::seed::derive_seed(seed, &[r as u64]),
            ..MpOptions::default()
        };
        let m = root_metrics(&run_mp(graph, &opts)?.root);
        h.push(m.avg_holevo);
        e.push(m.avg_pgm_error);
    }
    let stats = |x: &[f64]| {
        let n = x.len() as f64;
        let mean = x.iter().sum::<f64>() / n;
        let var = x.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
        (mean, (var / n).sqrt())
    };
    let (hm, hs) = stats(&h);
    let (em, es) = stats(&e);
    Ok(SampledMetrics {
        runs,
        mean: RootMetrics {
            avg_holevo: hm,
            avg_pgm_error: em,
        },
        stderr: RootMetrics {
            avg_holevo: hs,
            avg_pgm_error: es,
        },
    })
}

/// JSON form of a factor node.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum FactorDoc {
    Leaf { id: String, edges: Vec<String>, message: MessageDoc },
    Equality { id: String, edges: Vec<String> },
    Check { id: String, edges: Vec<String> },
    Hom { id: String, edges: Vec<String>, matrix: Vec<Vec<usize>> },
    Marginalize { id: String, edges: Vec<String>, keep: usize },
    Automorphism { id: String, edges: Vec<String>, matrix: Vec<Vec<usize>> },
}

/// JSON form of a factor graph.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FactorGraphDoc {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub version: Option<u32>,
    pub variables: BTreeMap<String, GroupDoc>,
    pub factors: Vec<FactorDoc>,
    pub root: Root,
}

impl FactorGraphDoc {
    pub fn build(&self) -> Result<FactorGraph> {
        if let Some(v) = self.version {
            if v != SCHEMA_VERSION {
                return Err(Error::validation(format!("unsupported factor graph version {v}")));
            }
        }
        let vars = self
            .variables
            .iter()
            .map(|(k, g)| {
                g.to_spec()
                    .map(|s| (k.clone(), s))
                    .map_err(|e| Error::validation(format!("variables.{k}: {e}")))
            })
            .collect::<Result<Vec<_>>>()?;
        let group_of = |name: &str| -> Result<GroupSpec> {
            self.variables
                .get(name)
                .ok_or_else(|| Error::validation(format!("unknown variable '{name}'")))?
                .to_spec()
        };
        let hom = |id: &str, edges: &[String], matrix: &[Vec<usize>]| -> Result<HomSpec> {
            if edges.len() != 2 {
                return Err(Error::validation(format!("factor '{id}' expects 2 edges")));
            }
            HomSpec::new(group_of(&edges[0])?, group_of(&edges[1])?, matrix.to_vec())
                .map_err(|e| Error::validation(format!("factor '{id}': {e}")))
        };
        let factors = self
            .factors
            .iter()
            .map(|f| {
                Ok(match f {
                    FactorDoc::Leaf { id, edges, message } => FactorSpec {
                        id: id.clone(),
                        kind: FactorKind::Leaf(
                            message
                                .to_message()
                                .map_err(|e| Error::validation(format!("factor '{id}'.message: {e}")))?,
                        ),
                        edges: edges.clone(),
                    },
                    FactorDoc::Equality { id, edges } => FactorSpec {
                        id: id.clone(),
                        kind: FactorKind::Equality,
                        edges: edges.clone(),
                    },
                    FactorDoc::Check { id, edges } => FactorSpec {
                        id: id.clone(),
                        kind: FactorKind::Check,
                        edges: edges.clone(),
                    },
                    FactorDoc::Hom { id, edges, matrix } => FactorSpec {
                        id: id.clone(),
                        kind: FactorKind::Hom(hom(id, edges, matrix)?),
                        edges: edges.clone(),
                    },
                    FactorDoc::Marginalize { id, edges, keep } => FactorSpec {
                        id: id.clone(),
                        kind: FactorKind::Marginalize { keep: *keep },
                        edges: edges.clone(),
                    },
                    FactorDoc::Automorphism { id, edges, matrix } => FactorSpec {
                        id: id.clone(),
                        kind: FactorKind::Automorphism(hom(id, edges, matrix)?),
                        edges: edges.clone(),
                    },
                })
            })
            .collect::<Result<Vec<_>>>()?;
        FactorGraph::new(vars, factors, self.root.clone())
    }
}

/// Parses and validates a factor graph document.
pub fn validate_tree(doc: &FactorGraphDoc) -> Result<FactorGraph> {
    doc.build()
}
