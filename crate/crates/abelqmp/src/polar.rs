//! Polar transform over abelian groups with the kernel `(x1, x2) = (u1 u2, u2)`.
//!
//! `W-` is a check combination with the second channel inverse-relabelled,
//! `W+` an equality combination. Synthetic channels are tracked recursively:
//! index `2j` is the minus child and `2j + 1` the plus child of index `j`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::eigen::{holevo_info, pgm_error, EigenList};
use crate::error::{Error, Result};
use crate::herald::HeraldedMessage;
use crate::rules::{check_mixed, check_sampled, equality_combine, equality_mixed, inverse_relabel, inverse_relabel_mixed};
use crate::seed::task_rng;
use crate::tree::Mode;

pub fn polar_minus(m1: &HeraldedMessage, m2: &HeraldedMessage) -> Result<HeraldedMessage> {
    m1.group().ensure_same(m2.group())?;
    check_mixed(m1, &inverse_relabel_mixed(m2))
}

pub fn polar_plus(m1: &HeraldedMessage, m2: &HeraldedMessage) -> Result<HeraldedMessage> {
    equality_mixed(m1, m2)
}

#[derive(Clone, Debug)]
pub struct PolarOptions {
    pub mode: Mode,
    pub seed: u64,
    pub prune_eps: f64,
    /// Exact mode fails when a message exceeds this many branches and
    /// `prune_eps` is zero.
    pub branch_cap: usize,
    /// Herald paths per index in sampled mode.
    pub population: usize,
    pub max_levels: usize,
}

impl Default for PolarOptions {
    fn default() -> Self {
        PolarOptions {
            mode: Mode::Exact,
            seed: 0,
            prune_eps: 0.0,
            branch_cap: 100_000,
            population: 1000,
            max_levels: 20,
        }
    }
}

impl PolarOptions {
    /// Exact tracking up to four levels, sampled beyond.
    pub fn for_levels(n: usize, seed: u64) -> Self {
        PolarOptions {
            mode: if n <= 4 { Mode::Exact } else { Mode::Sampled },
            seed,
            ..PolarOptions::default()
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct IndexStats {
    pub index: usize,
    pub avg_holevo: f64,
    pub avg_pgm_error: f64,
}

fn guard(m: HeraldedMessage, opts: &PolarOptions) -> Result<HeraldedMessage> {
    let m = m.prune(opts.prune_eps)?;
    if m.len() > opts.branch_cap {
        if opts.prune_eps == 0.0 {
            return Err(Error::numerical(format!(
                "{} branches exceed the exact-mode cap {}; set a prune epsilon or use sampled mode",
                m.len(),
                opts.branch_cap
            )));
        }
        return Err(Error::numerical(format!(
            "{} branches exceed the cap {} even after pruning at {}",
            m.len(),
            opts.branch_cap,
            opts.prune_eps
        )));
    }
    Ok(m)
}

/// Statistics of all `2^n` synthetic channels of `base`.
pub fn synthesize(base: &EigenList, n: usize, opts: &PolarOptions) -> Result<Vec<IndexStats>> {
    if n > opts.max_levels {
        return Err(Error::validation(format!(
            "{n} levels exceed the configured maximum {}",
            opts.max_levels
        )));
    }
    match opts.mode {
        Mode::Exact => synthesize_exact(base, n, opts),
        Mode::Sampled => synthesize_sampled(base, n, opts),
    }
}

/// Exact synthetic-channel messages, in index order.
pub fn synthesize_messages(base: &EigenList, n: usize, opts: &PolarOptions) -> Result<Vec<HeraldedMessage>> {
    let mut level = vec![HeraldedMessage::pure(base.clone())];
    for _ in 0..n {
        let next: Vec<Result<[HeraldedMessage; 2]>> = level
            .par_iter()
            .map(|m| Ok([guard(polar_minus(m, m)?, opts)?, guard(polar_plus(m, m)?, opts)?]))
            .collect();
        level = next
            .into_iter()
            .collect::<Result<Vec<_>>>()?
            .into_iter()
            .flatten()
            .collect();
    }
    Ok(level)
}

fn synthesize_exact(base: &EigenList, n: usize, opts: &PolarOptions) -> Result<Vec<IndexStats>> {
    Ok(synthesize_messages(base, n, opts)?
        .iter()
        .enumerate()
        .map(|(index, m)| IndexStats {
            index,
            avg_holevo: m.avg_holevo(),
            avg_pgm_error: m.avg_pgm_error(),
        })
        .collect())
}

fn synthesize_sampled(base: &EigenList, n: usize, opts: &PolarOptions) -> Result<Vec<IndexStats>> {
    let m = opts.population;
    if m == 0 {
        return Err(Error::validation("population must be positive"));
    }
    let mut level: Vec<Vec<EigenList>> = vec![vec![base.clone(); m]];
    for l in 0..n {
        let next: Vec<Result<Vec<EigenList>>> = (0..level.len() * 2)
            .into_par_iter()
            .map(|child| {
                let pop = &level[child / 2];
                let plus = child % 2 == 1;
                (0..m)
                    .map(|k| {
                        let mut rng = task_rng(opts.seed, &[l as u64, child as u64, k as u64]);
                        let a = &pop[rand::Rng::gen_range(&mut rng, 0..m)];
                        let b = &pop[rand::Rng::gen_range(&mut rng, 0..m)];
                        if plus {
                            equality_combine(a, b)
                        } else {
                            check_sampled(a, &inverse_relabel(b), &mut rng)
                        }
                    })
                    .collect()
            })
            .collect();
        level = next.into_iter().collect::<Result<Vec<_>>>()?;
    }
    Ok(level
        .iter()
        .enumerate()
        .map(|(index, pop)| IndexStats {
            index,
            avg_holevo: pop.iter().map(holevo_info).sum::<f64>() / m as f64,
            avg_pgm_error: pop.iter().map(pgm_error).sum::<f64>() / m as f64,
        })
        .collect())
}

/// The `k` indices of smallest error, ties to the smaller index, in
/// ascending index order.
pub fn select_info_set(stats: &[IndexStats], k: usize) -> Result<Vec<usize>> {
    if k > stats.len() {
        return Err(Error::validation(format!(
            "cannot select {k} of {} indices",
            stats.len()
        )));
    }
    let mut order: Vec<&IndexStats> = stats.iter().collect();
    order.sort_by(|a, b| {
        a.avg_pgm_error
            .total_cmp(&b.avg_pgm_error)
            .then(a.index.cmp(&b.index))
    });
    let mut set: Vec<usize> = order[..k].iter().map(|s| s.index).collect();
    set.sort_unstable();
    Ok(set)
}

/// CSV with header `index,avg_holevo_bits,avg_pgm_error`.
pub fn stats_csv(stats: &[IndexStats]) -> String {
    let mut out = String::from("index,avg_holevo_bits,avg_pgm_error\n");
    for s in stats {
        out.push_str(&format!(
            "{},{},{}\n",
            s.index,
            crate::io::csv_num(s.avg_holevo),
            crate::io::csv_num(s.avg_pgm_error)
        ));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::group::GroupSpec;

    fn g(m: &[usize]) -> GroupSpec {
        GroupSpec::new(m.to_vec()).unwrap()
    }

    fn pure(gr: &GroupSpec, v: &[f64]) -> HeraldedMessage {
        HeraldedMessage::pure(EigenList::new(gr, v.to_vec()).unwrap())
    }

    #[test]
    fn minus_of_worked_inputs_composes() {
        let gr = g(&[3, 2]);
        let m1 = pure(&gr, &[2.0, 1.0, 0.0, 2.0, 1.0, 0.0]);
        let m2 = pure(&gr, &[2.0, 0.0, 1.0, 1.0, 0.0, 2.0]);
        let inv = inverse_relabel(m2.as_pure().unwrap());
        assert_eq!(inv.values(), &[2.0, 1.0, 0.0, 1.0, 2.0, 0.0]);
        let want = crate::rules::check_combine(m1.as_pure().unwrap(), &inv).unwrap();
        assert!(polar_minus(&m1, &m2).unwrap().max_deviation(&want) < 1e-15);
    }

    #[test]
    fn minus_with_perfect_partner_keeps_information() {
        let gr = g(&[3, 2]);
        let m1 = pure(&gr, &[2.0, 1.0, 0.0, 2.0, 1.0, 0.0]);
        let out = polar_minus(&m1, &pure(&gr, &[1.0; 6])).unwrap();
        assert!((out.avg_holevo() - m1.avg_holevo()).abs() < 1e-12);
        let useless = pure(&gr, &[6.0, 0.0, 0.0, 0.0, 0.0, 0.0]);
        let out = polar_minus(&useless, &useless).unwrap();
        assert_eq!(out.len(), 1);
        assert_eq!(out.as_pure().unwrap().values()[0], 6.0);
    }

    #[test]
    fn plus_cases() {
        let gr = g(&[3, 2]);
        let m1 = pure(&gr, &[2.0, 1.0, 0.0, 2.0, 1.0, 0.0]);
        let m2 = pure(&gr, &[2.0, 0.0, 1.0, 1.0, 0.0, 2.0]);
        let p = polar_plus(&m1, &m2).unwrap();
        let want = [1.5, 0.5, 1.0, 1.5, 0.5, 1.0];
        assert!(p.as_pure().unwrap().values().iter().zip(want).all(|(a, b)| (a - b).abs() < 1e-12));
        let useless = pure(&gr, &[6.0, 0.0, 0.0, 0.0, 0.0, 0.0]);
        assert!(polar_plus(&m1, &useless).unwrap().max_deviation(&m1) < 1e-15);
        let perfect = pure(&gr, &[1.0; 6]);
        assert!(polar_plus(&m1, &perfect).unwrap().max_deviation(&perfect) < 1e-15);
    }

    #[test]
    fn one_level_extremes_and_conservation() {
        let gr = g(&[3]);
        let opts = PolarOptions::default();
        let s = synthesize(&EigenList::perfect(&gr), 1, &opts).unwrap();
        assert!(s.iter().all(|x| x.avg_pgm_error.abs() < 1e-15));
        let s = synthesize(&EigenList::useless(&gr), 1, &opts).unwrap();
        assert!(s.iter().all(|x| (x.avg_pgm_error - 2.0 / 3.0).abs() < 1e-15));
        let base = EigenList::new(&gr, vec![1.8, 0.9, 0.3]).unwrap();
        let s = synthesize(&base, 1, &opts).unwrap();
        assert!((s[0].avg_holevo + s[1].avg_holevo - 2.0 * holevo_info(&base)).abs() < 1e-8);
        assert_eq!(select_info_set(&s, 1).unwrap(), vec![1]);
    }

    #[test]
    fn info_set_selection() {
        let gr = g(&[2]);
        let s = synthesize(&EigenList::perfect(&gr), 2, &PolarOptions::default()).unwrap();
        assert_eq!(select_info_set(&s, 2).unwrap(), vec![0, 1]);
        assert_eq!(select_info_set(&s, 4).unwrap(), vec![0, 1, 2, 3]);
        assert!(select_info_set(&s, 5).is_err());
    }

    #[test]
    fn sampled_tracks_exact() {
        let gr = g(&[3]);
        let base = EigenList::new(&gr, vec![1.6, 0.9, 0.5]).unwrap();
        let exact = synthesize(&base, 3, &PolarOptions::default()).unwrap();
        let opts = PolarOptions {
            mode: Mode::Sampled,
            seed: 3,
            population: 4000,
            ..PolarOptions::default()
        };
        let sampled = synthesize(&base, 3, &opts).unwrap();
        for (a, b) in exact.iter().zip(&sampled) {
            assert!((a.avg_holevo - b.avg_holevo).abs() < 0.03, "{a:?} {b:?}");
        }
        assert_eq!(synthesize(&base, 3, &opts).unwrap(), sampled);
    }

    #[test]
    fn exact_cap_without_prune_errors() {
        let gr = g(&[3]);
        let base = EigenList::new(&gr, vec![1.6, 0.9, 0.5]).unwrap();
        let opts = PolarOptions {
            branch_cap: 2,
            ..PolarOptions::default()
        };
        assert!(synthesize(&base, 2, &opts).is_err());
    }
}
