//! Monte-Carlo density evolution for turbo ensembles built from two
//! constituent trellises, plus the Holevo threshold of the symmetric channel
//! family.
//!
//! Each constituent keeps a population of extrinsic symbol lists. A sample
//! decodes a window of sections around a center symbol: a priori lists are
//! drawn i.i.d. from the other constituent's population (the random
//! interleaver ensemble), channel lists are fixed, heralds are sampled. All
//! randomness comes from per-sample streams keyed by
//! `(constituent, iteration, sample)`, so results do not depend on the
//! thread count.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::eigen::{entropy_bits, pgm_error_values, EigenList};
use crate::error::{Error, Result};
use crate::group::GroupSpec;
use crate::io::{csv_num, SCHEMA_VERSION};
use crate::rules::equality_values;
use crate::seed::{derive_seed, task_rng};
use crate::trellis::{Section, TrellisDoc, TrellisSpec};

/// `[l0, (q - l0)/(q - 1), ...]` on `Z_q`, for `1 <= l0 <= q`.
pub fn channel_family(q: usize, lambda0: f64) -> Result<EigenList> {
    if q < 2 {
        return Err(Error::validation("channel family needs q >= 2"));
    }
    if !(1.0..=q as f64).contains(&lambda0) {
        return Err(Error::validation(format!(
            "lambda0 = {lambda0} outside [1, {q}]"
        )));
    }
    let rest = (q as f64 - lambda0) / (q - 1) as f64;
    let mut v = vec![rest; q];
    v[0] = lambda0;
    EigenList::new(&GroupSpec::cyclic(q)?, v)
}

fn family_entropy(q: usize, lambda0: f64) -> f64 {
    let rest = (q as f64 - lambda0) / (q - 1) as f64;
    let mut mu = vec![rest / q as f64; q];
    mu[0] = lambda0 / q as f64;
    entropy_bits(&mu)
}

/// Largest `l0` whose family member still has Holevo information `R log2 q`.
pub fn holevo_threshold(q: usize, rate: f64) -> Result<f64> {
    if q < 2 {
        return Err(Error::validation("holevo threshold needs q >= 2"));
    }
    if !(rate > 0.0 && rate < 1.0) {
        return Err(Error::validation(format!("rate {rate} outside (0, 1)")));
    }
    let target = rate * (q as f64).log2();
    let (mut lo, mut hi) = (1.0, q as f64);
    while hi - lo > 1e-6 {
        let mid = 0.5 * (lo + hi);
        if family_entropy(q, mid) >= target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Two constituents sharing the systematic stream, with channel-use
/// multiplicities per stream. Without constituents only the systematic
/// stream remains (a repetition code).
#[derive(Clone, Debug)]
pub struct TurboSpec {
    constituents: Vec<TrellisSpec>,
    systematic: usize,
    parity: Vec<usize>,
}

impl TurboSpec {
    pub fn new(constituents: Vec<TrellisSpec>, systematic: usize, parity: Vec<usize>) -> Result<Self> {
        if !(constituents.is_empty() || constituents.len() == 2) {
            return Err(Error::validation("a turbo spec has zero or two constituents"));
        }
        if parity.len() != constituents.len() {
            return Err(Error::validation("one parity multiplicity per constituent"));
        }
        if let [a, b] = constituents.as_slice() {
            if a.symbol_group() != b.symbol_group() {
                return Err(Error::validation("constituents must share the symbol group"));
            }
        }
        let informative = systematic
            + constituents
                .iter()
                .zip(&parity)
                .map(|(c, k)| k * c.outputs().len())
                .sum::<usize>();
        if informative == 0 {
            return Err(Error::validation("turbo spec has no informative stream"));
        }
        Ok(TurboSpec {
            constituents,
            systematic,
            parity,
        })
    }

    /// Rate 1/3: systematic plus one parity stream from each constituent.
    pub fn rate_third(constituent: TrellisSpec) -> Result<Self> {
        TurboSpec::new(vec![constituent.clone(), constituent], 1, vec![1, 1])
    }

    /// Rate 1/4 assumed plan: the systematic stream is sent twice.
    pub fn rate_quarter(constituent: TrellisSpec) -> Result<Self> {
        TurboSpec::new(vec![constituent.clone(), constituent], 2, vec![1, 1])
    }

    /// Symbols per information symbol, inverted.
    pub fn rate(&self) -> f64 {
        let uses = self.systematic
            + self
                .constituents
                .iter()
                .zip(&self.parity)
                .map(|(c, k)| k * c.outputs().len())
                .sum::<usize>();
        1.0 / uses as f64
    }

    pub fn constituents(&self) -> &[TrellisSpec] {
        &self.constituents
    }

    pub fn systematic(&self) -> usize {
        self.systematic
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TurboDoc {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub version: Option<u32>,
    pub constituents: Vec<TrellisDoc>,
    pub systematic: usize,
    pub parity: Vec<usize>,
}

impl TurboDoc {
    pub fn build(&self) -> Result<TurboSpec> {
        if let Some(v) = self.version {
            if v != SCHEMA_VERSION {
                return Err(Error::validation(format!("unsupported turbo version {v}")));
            }
        }
        let cs = self
            .constituents
            .iter()
            .enumerate()
            .map(|(i, d)| d.build().map_err(|e| Error::validation(format!("constituents[{i}]: {e}"))))
            .collect::<Result<Vec<_>>>()?;
        TurboSpec::new(cs, self.systematic, self.parity.clone())
    }
}

/// Density-evolution parameters.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DeConfig {
    pub population: usize,
    pub max_iterations: usize,
    pub window: usize,
    pub target_error: f64,
    /// Stop when the error improved by less than `stall_rel` (relative) over
    /// the last `stall_window` iterations.
    pub stall_window: usize,
    pub stall_rel: f64,
    pub seed: u64,
    /// Independent runs per bisection probe, decided by majority.
    pub trials: usize,
    /// Keep the systematic observation inside the exchanged extrinsic list
    /// (the receiving constituent then skips its own copy).
    pub extrinsic_includes_systematic: bool,
    /// Worker threads; `None` uses the machine default.
    pub threads: Option<usize>,
}

impl Default for DeConfig {
    fn default() -> Self {
        DeConfig {
            population: 2000,
            max_iterations: 100,
            window: 41,
            target_error: 1e-3,
            stall_window: 10,
            stall_rel: 1e-3,
            seed: 1,
            trials: 3,
            extrinsic_includes_systematic: false,
            threads: None,
        }
    }
}

impl DeConfig {
    pub fn validate(&self) -> Result<()> {
        if self.population == 0 {
            return Err(Error::validation("population must be at least 1"));
        }
        if self.window % 2 == 0 {
            return Err(Error::validation("window length must be odd"));
        }
        if !(self.target_error > 0.0 && self.target_error < 1.0) {
            return Err(Error::validation("target error must lie in (0, 1)"));
        }
        if self.trials == 0 {
            return Err(Error::validation("need at least one trial per probe"));
        }
        Ok(())
    }

    fn pool(&self) -> Result<rayon::ThreadPool> {
        let mut b = rayon::ThreadPoolBuilder::new();
        if let Some(t) = self.threads {
            b = b.num_threads(t);
        }
        b.build().map_err(|e| Error::validation(format!("thread pool: {e}")))
    }
}

/// Fixed per-constituent data for one channel.
struct Prepared {
    sections: Vec<Section>,
    /// Lifted parity evidence on the branch group, per constituent.
    parity: Vec<Option<Vec<f64>>>,
    systematic: Option<Vec<f64>>,
    symbol: GroupSpec,
}

fn repeat_combine(l: &[f64], k: usize, g: &GroupSpec) -> Option<Vec<f64>> {
    (0..k).fold(None, |acc: Option<Vec<f64>>, _| {
        Some(match acc {
            None => l.to_vec(),
            Some(a) => equality_values(&a, l, g),
        })
    })
}

fn prepare(spec: &TurboSpec, channel: &EigenList) -> Result<Prepared> {
    let symbol = match spec.constituents.first() {
        Some(c) => c.symbol_group().clone(),
        None => channel.group().clone(),
    };
    let systematic = if spec.systematic > 0 {
        symbol.ensure_same(channel.group())?;
        repeat_combine(channel.values(), spec.systematic, &symbol)
    } else {
        None
    };
    let mut sections = Vec::new();
    let mut parity = Vec::new();
    for (c, &k) in spec.constituents.iter().zip(&spec.parity) {
        let sec = Section::new(c)?;
        let ev = if k > 0 {
            c.output_group().ensure_same(channel.group())?;
            let per = repeat_combine(channel.values(), k, c.output_group()).expect("k > 0");
            let outs: Vec<&[f64]> = c.outputs().iter().map(|_| per.as_slice()).collect();
            sec.local_evidence(&outs, &[])
        } else {
            None
        };
        sections.push(sec);
        parity.push(ev);
    }
    Ok(Prepared {
        sections,
        parity,
        systematic,
        symbol,
    })
}

fn combine_opt(a: Option<Vec<f64>>, b: Option<&[f64]>, g: &GroupSpec) -> Option<Vec<f64>> {
    match (a, b) {
        (None, None) => None,
        (Some(x), None) => Some(x),
        (None, Some(y)) => Some(y.to_vec()),
        (Some(x), Some(y)) => Some(equality_values(&x, y, g)),
    }
}

/// One window sample for constituent `c`: returns the extrinsic list and the
/// PGM error of the center posterior.
fn window_sample<R: Rng>(
    prep: &Prepared,
    c: usize,
    apriori: &[Vec<f64>],
    cfg: &DeConfig,
    rng: &mut R,
) -> (Vec<f64>, f64) {
    let sec = &prep.sections[c];
    let g = &prep.symbol;
    let br = sec.branch_group();
    let w = cfg.window;
    let center = w / 2;
    let p = apriori.len();
    let aprs: Vec<&[f64]> = (0..w).map(|_| apriori[rng.gen_range(0..p)].as_slice()).collect();
    // the receiving side skips its systematic copy when the exchanged list
    // already carries it
    let own_sys = if cfg.extrinsic_includes_systematic {
        None
    } else {
        prep.systematic.as_deref()
    };
    let local = |sym: Option<Vec<f64>>| -> Option<Vec<f64>> {
        let lifted = sym.map(|s| sec.local_evidence(&[], &[&s]).expect("symbol evidence"));
        combine_opt(lifted, prep.parity[c].as_deref(), br)
    };
    let full = |j: usize| local(combine_opt(own_sys.map(<[f64]>::to_vec), Some(aprs[j]), g));
    let useless = crate::eigen::EigenList::useless(sec.state_group());
    let mut alpha = useless.values().to_vec();
    for j in 0..center {
        let ev = full(j);
        alpha = sec.forward_sampled(&alpha, ev.as_deref(), rng);
    }
    let mut beta = useless.values().to_vec();
    for j in (center + 1..w).rev() {
        let ev = full(j);
        beta = sec.backward_sampled(&beta, ev.as_deref(), rng);
    }
    let ext_sym = if cfg.extrinsic_includes_systematic {
        prep.systematic.clone()
    } else {
        None
    };
    let ext = sec.symbol_sampled(&alpha, &beta, local(ext_sym).as_deref(), rng);
    let post = combine_opt(Some(ext.clone()), own_sys, g).expect("non-empty");
    let post = equality_values(&post, aprs[center], g);
    (ext, pgm_error_values(&post))
}

/// One outer iteration: constituent 0 then constituent 1, each drawing its
/// a priori lists from the other's current population. Returns the mean
/// posterior PGM error of the second half.
pub fn de_iteration(
    spec: &TurboSpec,
    channel: &EigenList,
    populations: &mut [Vec<Vec<f64>>; 2],
    iteration: usize,
    cfg: &DeConfig,
) -> Result<f64> {
    let prep = prepare(spec, channel)?;
    iterate(&prep, populations, iteration, cfg, cfg.seed)
}

fn iterate(prep: &Prepared, pops: &mut [Vec<Vec<f64>>; 2], it: usize, cfg: &DeConfig, seed: u64) -> Result<f64> {
    if prep.sections.is_empty() {
        let e = prep
            .systematic
            .as_deref()
            .map_or(1.0 - 1.0 / prep.symbol.order() as f64, pgm_error_values);
        return Ok(e);
    }
    let mut err = 0.0;
    for c in 0..2 {
        let other = &pops[1 - c];
        if other.is_empty() {
            return Err(Error::numerical("degenerate population"));
        }
        let out: Vec<(Vec<f64>, f64)> = (0..cfg.population)
            .into_par_iter()
            .map(|k| {
                let mut rng = task_rng(seed, &[c as u64, it as u64, k as u64]);
                window_sample(prep, c, other, cfg, &mut rng)
            })
            .collect();
        err = out.iter().map(|x| x.1).sum::<f64>() / out.len() as f64;
        pops[c] = out.into_iter().map(|x| x.0).collect();
    }
    Ok(err)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DeRun {
    pub converged: bool,
    pub trajectory: Vec<f64>,
}

fn run_with_seed(prep: &Prepared, cfg: &DeConfig, seed: u64) -> Result<DeRun> {
    let useless = EigenList::useless(&prep.symbol).into_values();
    let mut pops = [vec![useless.clone()], vec![useless]];
    let mut traj: Vec<f64> = Vec::new();
    for it in 0..cfg.max_iterations {
        let e = iterate(prep, &mut pops, it, cfg, seed)?;
        traj.push(e);
        if e < cfg.target_error {
            return Ok(DeRun {
                converged: true,
                trajectory: traj,
            });
        }
        let n = traj.len();
        if n > cfg.stall_window {
            let old = traj[n - 1 - cfg.stall_window];
            if old <= 0.0 || (old - e) / old < cfg.stall_rel {
                break;
            }
        }
    }
    Ok(DeRun {
        converged: false,
        trajectory: traj,
    })
}

/// Iterates until the error drops below the target, stalls, or the
/// iteration cap is reached.
pub fn de_run(spec: &TurboSpec, cfg: &DeConfig, channel: &EigenList) -> Result<DeRun> {
    cfg.validate()?;
    let prep = prepare(spec, channel)?;
    cfg.pool()?.install(|| run_with_seed(&prep, cfg, cfg.seed))
}

/// Family channel for `q` taken from the constituents (or the systematic
/// stream alone).
fn family_for(spec: &TurboSpec, lambda0: f64) -> Result<EigenList> {
    let q = match spec.constituents.first() {
        Some(c) => {
            let g = c.symbol_group();
            if g.rank() != 1 {
                return Err(Error::validation("channel family needs a cyclic symbol group"));
            }
            g.order()
        }
        None => return Err(Error::validation("spec without constituents needs an explicit channel group")),
    };
    channel_family(q, lambda0)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Probe {
    pub lambda0: f64,
    pub successes: usize,
    pub trials: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ThresholdResult {
    pub lambda_de: f64,
    pub lo: f64,
    pub hi: f64,
    pub probes: Vec<Probe>,
    /// Probes whose trials disagreed.
    pub split_probes: usize,
}

fn probe(prep: &Prepared, cfg: &DeConfig, tag: u64) -> Result<usize> {
    let mut wins = 0;
    for trial in 0..cfg.trials {
        let seed = derive_seed(cfg.seed, &[tag, trial as u64]);
        if run_with_seed(prep, cfg, seed)?.converged {
            wins += 1;
        }
    }
    Ok(wins)
}

/// Bisection of the family parameter on `[1, q]` to resolution 0.01; each
/// probe is decided by a majority of independently seeded runs.
pub fn threshold_bisect(spec: &TurboSpec, cfg: &DeConfig) -> Result<ThresholdResult> {
    let q = family_for(spec, 1.0)?.group().order();
    threshold_bisect_with(spec, cfg, |l0| channel_family(q, l0), q as f64)
}

/// Bisection with an arbitrary one-parameter channel on `[1, upper]`.
pub fn threshold_bisect_with(
    spec: &TurboSpec,
    cfg: &DeConfig,
    channel: impl Fn(f64) -> Result<EigenList>,
    upper: f64,
) -> Result<ThresholdResult> {
    cfg.validate()?;
    let pool = cfg.pool()?;
    let (mut lo, mut hi) = (1.0, upper);
    let mut probes = Vec::new();
    let mut split = 0;
    let mut tag = 0u64;
    while hi - lo > 0.01 {
        let mid = 0.5 * (lo + hi);
        let prep = prepare(spec, &channel(mid)?)?;
        let wins = pool.install(|| probe(&prep, cfg, tag))?;
        tag += 1;
        if wins != 0 && wins != cfg.trials {
            split += 1;
        }
        probes.push(Probe {
            lambda0: mid,
            successes: wins,
            trials: cfg.trials,
        });
        if 2 * wins > cfg.trials {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(ThresholdResult {
        lambda_de: 0.5 * (lo + hi),
        lo,
        hi,
        probes,
        split_probes: split,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct HeatPoint {
    pub lambda: [f64; 3],
    pub success_freq: f64,
}

/// Points of the simplex `l0 + l1 + l2 = 3` with barycentric step `h`.
pub fn simplex_grid(h: f64) -> Result<Vec<[f64; 3]>> {
    if !(h > 0.0 && h <= 1.0) {
        return Err(Error::validation("grid step must lie in (0, 1]"));
    }
    let n = (1.0 / h).round() as usize;
    if ((n as f64) * h - 1.0).abs() > 1e-9 {
        return Err(Error::validation("grid step must divide 1"));
    }
    let mut pts = Vec::new();
    for i in 0..=n {
        for j in 0..=n - i {
            let k = n - i - j;
            let s = 3.0 / n as f64;
            pts.push([i as f64 * s, j as f64 * s, k as f64 * s]);
        }
    }
    Ok(pts)
}

/// Points `(l0, (3 - l0)/2, (3 - l0)/2)` for `l0` from `start` to `stop`.
pub fn symmetric_ray(start: f64, stop: f64, step: f64) -> Result<Vec<[f64; 3]>> {
    if !(step > 0.0) || stop < start {
        return Err(Error::validation("bad ray range"));
    }
    let n = ((stop - start) / step + 1e-9).floor() as usize;
    Ok((0..=n)
        .map(|i| {
            let l0 = start + i as f64 * step;
            let r = (3.0 - l0) / 2.0;
            [l0, r, r]
        })
        .collect())
}

/// DE success frequency at each point of a ternary channel grid.
pub fn heatmap(spec: &TurboSpec, cfg: &DeConfig, points: &[[f64; 3]]) -> Result<Vec<HeatPoint>> {
    cfg.validate()?;
    let z3 = GroupSpec::cyclic(3)?;
    let pool = cfg.pool()?;
    points
        .iter()
        .enumerate()
        .map(|(i, p)| {
            let ch = EigenList::new(&z3, p.to_vec())?;
            let prep = prepare(spec, &ch)?;
            let wins = pool.install(|| probe(&prep, cfg, 1_000_000 + i as u64))?;
            Ok(HeatPoint {
                lambda: *p,
                success_freq: wins as f64 / cfg.trials as f64,
            })
        })
        .collect()
}

/// CSV with header `lambda0,lambda1,lambda2,success_freq`.
pub fn heatmap_csv(points: &[HeatPoint]) -> String {
    let mut out = String::from("lambda0,lambda1,lambda2,success_freq\n");
    for p in points {
        out.push_str(&format!(
            "{},{},{},{}\n",
            csv_num(p.lambda[0]),
            csv_num(p.lambda[1]),
            csv_num(p.lambda[2]),
            csv_num(p.success_freq)
        ));
    }
    out
}

/// First `l0` on a symmetric ray where the success frequency drops to one
/// half or below, interpolated between grid points.
pub fn ray_crossing(points: &[HeatPoint]) -> Option<f64> {
    points.windows(2).find_map(|w| {
        let (a, b) = (&w[0], &w[1]);
        if a.success_freq > 0.5 && b.success_freq <= 0.5 {
            let t = (a.success_freq - 0.5) / (a.success_freq - b.success_freq);
            Some(a.lambda[0] + t * (b.lambda[0] - a.lambda[0]))
        } else {
            None
        }
    })
}
