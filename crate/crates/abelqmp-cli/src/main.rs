//! `abelqmp` command line: JSON in, JSON or CSV out.
//!
//! Exit codes: 0 success, 1 usage, 2 validation, 3 numerical failure. Errors
//! are written to stderr as a single JSON object.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use abelqmp::de::{self, DeConfig, TurboDoc};
use abelqmp::eigen::{channel_fidelity, holevo_info, pgm_error};
use abelqmp::io::{from_json, to_json, GroupDoc, HeraldedDoc, HomDoc, MessageDoc, SCHEMA_VERSION};
use abelqmp::oracle::{self, RULES};
use abelqmp::polar::{self, PolarOptions};
use abelqmp::rules;
use abelqmp::seed::task_rng;
use abelqmp::tree::{self, FactorGraphDoc, Mode, MpOptions};
use abelqmp::trellis::{self, BlockObsDoc, Section, TrellisDoc, TrellisOptions};
use abelqmp::{EigenList, Error, GroupSpec, HeraldedMessage};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

#[derive(Parser)]
#[command(name = "abelqmp", version = version_string(), about = "Quantum message passing over finite abelian groups")]
struct Cli {
    /// Worker threads (results do not depend on it).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    cmd: Cmd,
}

fn version_string() -> &'static str {
    concat!(env!("CARGO_PKG_VERSION"), " (schema version 1)")
}

#[derive(Subcommand)]
enum Cmd {
    /// Group and homomorphism structure.
    Groups {
        #[command(subcommand)]
        cmd: GroupsCmd,
    },
    /// Apply one local factor rule.
    Factor(FactorArgs),
    /// Holevo information, PGM error and fidelity of a message.
    Measures(MeasuresArgs),
    /// Certify the fast rules against the dense oracle.
    Verify(VerifyArgs),
    /// Tree message passing.
    Mp {
        #[command(subcommand)]
        cmd: MpCmd,
    },
    /// Polar synthetic-channel construction.
    Polar {
        #[command(subcommand)]
        cmd: PolarCmd,
    },
    /// Convolutional (trellis) block decoding.
    Conv {
        #[command(subcommand)]
        cmd: ConvCmd,
    },
    /// Turbo density evolution.
    De {
        #[command(subcommand)]
        cmd: DeCmd,
    },
}

#[derive(Subcommand)]
enum GroupsCmd {
    /// Order, rank and elements of a group, or the structure of a homomorphism.
    Info {
        /// Moduli as a JSON array, e.g. '[3,2]'.
        #[arg(long, conflicts_with = "hom")]
        group: Option<String>,
        /// Homomorphism document.
        #[arg(long)]
        hom: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Rule {
    Check,
    Equality,
    Hom,
    HomSupported,
    Lift,
    Marginalize,
    Automorphism,
    InverseRelabel,
}

#[derive(Args)]
struct FactorArgs {
    rule: Rule,
    /// Input message documents (two for check and equality).
    #[arg(long = "in", num_args = 1..=2, required = true)]
    inputs: Vec<PathBuf>,
    /// Homomorphism document for hom, lift and automorphism rules.
    #[arg(long)]
    hom: Option<PathBuf>,
    /// Leading coordinates kept by marginalize.
    #[arg(long)]
    keep: Option<usize>,
}

#[derive(Args)]
struct MeasuresArgs {
    /// Eigen list as a JSON array.
    #[arg(long, requires = "group", conflicts_with = "input")]
    lambda: Option<String>,
    /// Moduli as a JSON array.
    #[arg(long)]
    group: Option<String>,
    /// Message document instead of --lambda/--group.
    #[arg(long = "in")]
    input: Option<PathBuf>,
}

#[derive(Clone, Copy, PartialEq, ValueEnum)]
enum VerifyWhat {
    Rules,
    Measures,
    All,
}

#[derive(Args)]
struct VerifyArgs {
    #[arg(long, value_enum, default_value = "all")]
    what: VerifyWhat,
    /// Random instances per rule and group (or channels for measures).
    #[arg(long, default_value_t = 100)]
    count: usize,
    #[arg(long)]
    seed: u64,
}

#[derive(Clone, Copy, PartialEq, ValueEnum)]
enum ModeArg {
    Exact,
    Sampled,
}

impl From<ModeArg> for Mode {
    fn from(m: ModeArg) -> Mode {
        match m {
            ModeArg::Exact => Mode::Exact,
            ModeArg::Sampled => Mode::Sampled,
        }
    }
}

#[derive(Subcommand)]
enum MpCmd {
    /// Runs message passing toward the root variable.
    Run {
        #[arg(long)]
        graph: PathBuf,
        #[arg(long, value_enum, default_value = "exact")]
        mode: ModeArg,
        /// Required in sampled mode.
        #[arg(long)]
        seed: Option<u64>,
        /// Independent sampled runs averaged into the metrics.
        #[arg(long, default_value_t = 1)]
        runs: usize,
        #[arg(long, default_value_t = 0.0)]
        prune_eps: f64,
        /// Include the root message in the output.
        #[arg(long)]
        full: bool,
    },
}

#[derive(Subcommand)]
enum PolarCmd {
    /// Statistics of all synthetic channels after `levels` steps.
    Construct {
        #[arg(long)]
        lambda: String,
        #[arg(long)]
        group: String,
        #[arg(long)]
        levels: usize,
        /// Size of the information set to report.
        #[arg(long)]
        k: Option<usize>,
        /// Defaults to exact up to four levels, sampled beyond.
        #[arg(long, value_enum)]
        mode: Option<ModeArg>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, default_value_t = 1000)]
        population: usize,
        #[arg(long, default_value_t = 0.0)]
        prune_eps: f64,
        /// CSV destination; stdout when absent.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Subcommand)]
enum ConvCmd {
    /// Symbol posteriors and extrinsics of one observed block.
    Analyze {
        #[arg(long)]
        trellis: PathBuf,
        #[arg(long)]
        obs: PathBuf,
        #[arg(long, value_enum, default_value = "exact")]
        mode: ModeArg,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, default_value_t = 0.0)]
        prune_eps: f64,
        /// Include the messages, not only their metrics.
        #[arg(long)]
        full: bool,
    },
}

#[derive(Args)]
struct TurboArgs {
    /// Turbo document; the rate-1/3 ternary code when absent.
    #[arg(long)]
    turbo: Option<PathBuf>,
    /// DE configuration document; defaults otherwise.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: u64,
}

#[derive(Subcommand)]
enum DeCmd {
    /// Bisection for the largest family parameter where DE succeeds.
    Threshold {
        #[command(flatten)]
        turbo: TurboArgs,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Success frequency over the eigen-list simplex of Z3.
    Heatmap {
        #[command(flatten)]
        turbo: TurboArgs,
        /// Barycentric grid step over the whole simplex.
        #[arg(long, conflicts_with = "ray")]
        res: Option<f64>,
        /// Symmetric ray `start:stop:step` in the first entry.
        #[arg(long)]
        ray: Option<String>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Holevo threshold of the symmetric family.
    Holevo {
        #[arg(long)]
        q: usize,
        /// Rate as a fraction `a/b` or a decimal.
        #[arg(long)]
        rate: String,
    },
}

enum Fail {
    Usage(String),
    Lib(Error),
}

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail::Lib(e)
    }
}

type Out = Result<(), Fail>;

fn usage(msg: impl Into<String>) -> Fail {
    Fail::Usage(msg.into())
}

fn read(path: &Path) -> Result<String, Fail> {
    std::fs::read_to_string(path).map_err(|e| Fail::Lib(Error::validation(format!("{}: {e}", path.display()))))
}

fn write_out(path: Option<&Path>, text: &str) -> Out {
    match path {
        Some(p) => std::fs::write(p, text).map_err(|e| Fail::Lib(Error::validation(format!("{}: {e}", p.display())))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn emit(v: &Value) -> Out {
    println!("{}", to_json(v)?);
    Ok(())
}

fn parse_group(text: &str) -> Result<GroupSpec, Fail> {
    let moduli: Vec<usize> = from_json(text, "group")?;
    Ok(GroupDoc { moduli }.to_spec()?)
}

fn read_message(path: &Path) -> Result<HeraldedMessage, Fail> {
    let doc: MessageDoc = from_json(&read(path)?, &path.display().to_string())?;
    Ok(doc.to_message()?)
}

fn read_hom(path: &Path) -> Result<abelqmp::HomSpec, Fail> {
    let doc: HomDoc = from_json(&read(path)?, &path.display().to_string())?;
    Ok(doc.to_spec()?)
}

fn need_seed(seed: Option<u64>, what: &str) -> Result<u64, Fail> {
    seed.ok_or_else(|| usage(format!("--seed is required for {what}")))
}

fn message_json(m: &HeraldedMessage) -> Result<Value, Fail> {
    Ok(serde_json::to_value(HeraldedDoc::from_message(m)).map_err(Error::from)?)
}

fn metrics_json(m: &HeraldedMessage) -> Value {
    json!({ "avg_holevo_bits": m.avg_holevo(), "avg_pgm_error": m.avg_pgm_error() })
}

fn groups_info(group: Option<String>, hom: Option<PathBuf>) -> Out {
    if let Some(path) = hom {
        let h = read_hom(&path)?;
        let src = h.source();
        let tgt = h.target();
        let labels = |g: &GroupSpec, v: &[usize]| v.iter().map(|&i| g.label(i)).collect::<Vec<_>>();
        let dual = abelqmp::dual::dual_map(&h)?;
        let mut out = json!({
            "source": src.moduli(),
            "target": tgt.moduli(),
            "kernel": labels(src, &h.kernel()?),
            "image": labels(tgt, &h.image()?),
            "surjective": h.is_surjective()?,
            "automorphism": h.is_automorphism()?,
            "dual_map": (0..tgt.order()).map(|xi| json!([tgt.label(xi), src.label(dual.apply_idx(xi))])).collect::<Vec<_>>(),
        });
        let image = abelqmp::dual::dual_image(&h)?;
        out["dual_image"] = json!(labels(src, image.members()));
        let table = abelqmp::dual::coset_table(&image);
        out["coset_representatives"] = json!(labels(src, table.reps()));
        return emit(&out);
    }
    let g = parse_group(&group.ok_or_else(|| usage("give --group or --hom"))?)?;
    emit(&json!({
        "moduli": g.moduli(),
        "order": g.order(),
        "rank": g.rank(),
        "elements": (0..g.order()).map(|i| g.label(i)).collect::<Vec<_>>(),
    }))
}

fn pure_input(m: &HeraldedMessage, what: &str) -> Result<EigenList, Fail> {
    m.as_pure()
        .cloned()
        .ok_or_else(|| Fail::Lib(Error::validation(format!("{what} must be a single eigen list"))))
}

fn factor(a: FactorArgs) -> Out {
    let two = matches!(a.rule, Rule::Check | Rule::Equality);
    if two != (a.inputs.len() == 2) {
        return Err(usage(if two { "this rule takes two --in documents" } else { "this rule takes one --in document" }));
    }
    let msgs = a.inputs.iter().map(|p| read_message(p)).collect::<Result<Vec<_>, _>>()?;
    let hom = || -> Result<abelqmp::HomSpec, Fail> {
        read_hom(a.hom.as_deref().ok_or_else(|| usage("--hom is required for this rule"))?)
    };
    let out = match a.rule {
        Rule::Check => rules::check_mixed(&msgs[0], &msgs[1])?,
        Rule::Equality => rules::equality_mixed(&msgs[0], &msgs[1])?,
        Rule::Hom => rules::hom_push_mixed(&msgs[0], &rules::HomRule::new(&hom()?)?)?,
        Rule::HomSupported => {
            HeraldedMessage::pure(rules::hom_push_supported(&pure_input(&msgs[0], "input")?, &hom()?)?)
        }
        Rule::Lift => rules::lift_mixed(&msgs[0], &rules::LiftRule::new(&hom()?)?)?,
        Rule::Marginalize => {
            let keep = a.keep.ok_or_else(|| usage("--keep is required for marginalize"))?;
            rules::marginalize_mixed(&msgs[0], keep)?
        }
        Rule::Automorphism => rules::automorphism_mixed(&msgs[0], &hom()?)?,
        Rule::InverseRelabel => rules::inverse_relabel_mixed(&msgs[0]),
    };
    let mut v = message_json(&out)?;
    if let Some(l) = out.as_pure() {
        v = json!({ "version": SCHEMA_VERSION, "group": { "moduli": l.group().moduli() }, "lambda": l.values() });
    }
    emit(&v)
}

fn measures(a: MeasuresArgs) -> Out {
    let m = match (a.lambda, a.group, a.input) {
        (Some(l), Some(g), None) => {
            let v: Vec<f64> = from_json(&l, "lambda")?;
            HeraldedMessage::pure(EigenList::new(&parse_group(&g)?, v)?)
        }
        (None, None, Some(p)) => read_message(&p)?,
        _ => return Err(usage("give --lambda with --group, or --in")),
    };
    let mut v = json!({
        "branches": m.len(),
        "holevo_bits": m.avg_holevo(),
        "pgm_error": m.avg_pgm_error(),
    });
    if let Some(l) = m.as_pure() {
        v["holevo_bits"] = json!(holevo_info(l));
        v["pgm_error"] = json!(pgm_error(l));
        v["channel_fidelity"] = json!(channel_fidelity(l));
    }
    emit(&v)
}

const VERIFY_GROUPS: [&[usize]; 6] = [&[2], &[3], &[4], &[6], &[2, 2], &[3, 2]];

fn verify(a: VerifyArgs) -> Out {
    let mut pass = true;
    let mut out = json!({});
    if a.what != VerifyWhat::Measures {
        let mut reports = Vec::new();
        for (gi, m) in VERIFY_GROUPS.iter().enumerate() {
            let g = GroupSpec::new(m.to_vec())?;
            for (ri, rule) in RULES.iter().enumerate() {
                let mut rng = task_rng(a.seed, &[0, gi as u64, ri as u64]);
                let r = oracle::verify_rule(rule, &g, a.count, &mut rng)?;
                pass &= r.pass;
                reports.push(serde_json::to_value(&r).map_err(Error::from)?);
            }
        }
        out["rules"] = Value::Array(reports);
    }
    if a.what != VerifyWhat::Rules {
        let groups: [&[usize]; 8] = [&[2], &[3], &[5], &[6], &[2, 2], &[3, 2], &[4, 3], &[2, 2, 3]];
        let (mut gram, mut pgm, mut hol): (f64, f64, f64) = (0.0, 0.0, 0.0);
        for k in 0..a.count {
            let g = GroupSpec::new(groups[k % groups.len()].to_vec())?;
            let mut rng = task_rng(a.seed, &[1, k as u64]);
            let lam = oracle::random_eigenlist(&g, &mut rng);
            let r = oracle::verify_gram_diagonalization(&lam)?;
            gram = gram.max(r.eigen_residual).max(r.spectrum_defect).max(r.circulant_defect);
            pgm = pgm.max((oracle::pgm_bruteforce(&lam)? - pgm_error(&lam)).abs());
            hol = hol.max((oracle::holevo_dense(&lam)? - holevo_info(&lam)).abs());
        }
        let ok = gram <= 1e-8 && pgm <= 1e-8 && hol <= 1e-8;
        pass &= ok;
        out["measures"] = json!({
            "channels": a.count,
            "max_gram_defect": gram,
            "max_pgm_deviation": pgm,
            "max_holevo_deviation": hol,
            "pass": ok,
        });
    }
    out["pass"] = json!(pass);
    emit(&out)?;
    if pass {
        Ok(())
    } else {
        Err(Fail::Lib(Error::numerical("fast path disagrees with the oracle")))
    }
}

fn mp(cmd: MpCmd) -> Out {
    let MpCmd::Run { graph, mode, seed, runs, prune_eps, full } = cmd;
    if mode == ModeArg::Sampled {
        need_seed(seed, "sampled mode")?;
    }
    let doc: FactorGraphDoc = from_json(&read(&graph)?, &graph.display().to_string())?;
    let g = tree::validate_tree(&doc)?;
    if mode == ModeArg::Sampled {
        let seed = need_seed(seed, "sampled mode")?;
        if runs == 0 {
            return Err(usage("--runs must be positive"));
        }
        let s = tree::sampled_root_metrics(&g, runs, seed)?;
        return emit(&json!({
            "mode": "sampled",
            "runs": s.runs,
            "avg_holevo_bits": s.mean.avg_holevo,
            "avg_pgm_error": s.mean.avg_pgm_error,
            "stderr_holevo_bits": s.stderr.avg_holevo,
            "stderr_pgm_error": s.stderr.avg_pgm_error,
        }));
    }
    let opts = MpOptions {
        mode: Mode::Exact,
        prune_eps,
        ..MpOptions::default()
    };
    let res = tree::run_mp(&g, &opts)?;
    let mut v = json!({ "mode": "exact", "branches": res.root.len(), "warnings": res.warnings });
    v["avg_holevo_bits"] = json!(res.root.avg_holevo());
    v["avg_pgm_error"] = json!(res.root.avg_pgm_error());
    if full {
        v["root"] = message_json(&res.root)?;
    }
    emit(&v)
}

fn polar_construct(cmd: PolarCmd) -> Out {
    let PolarCmd::Construct { lambda, group, levels, k, mode, seed, population, prune_eps, out } = cmd;
    let v: Vec<f64> = from_json(&lambda, "lambda")?;
    let base = EigenList::new(&parse_group(&group)?, v)?;
    let mut opts = PolarOptions::for_levels(levels, 0);
    if let Some(m) = mode {
        opts.mode = m.into();
    }
    if opts.mode == Mode::Sampled {
        opts.seed = need_seed(seed, "sampled polar construction")?;
    }
    opts.population = population;
    opts.prune_eps = prune_eps;
    let stats = polar::synthesize(&base, levels, &opts)?;
    let csv = polar::stats_csv(&stats);
    match (out, k) {
        (None, None) => write_out(None, &csv),
        (out, k) => {
            write_out(out.as_deref(), &csv)?;
            if let Some(k) = k {
                let set = polar::select_info_set(&stats, k)?;
                let v = json!({ "levels": levels, "k": k, "info_set": set });
                if out.is_some() {
                    emit(&v)?;
                } else {
                    eprintln!("{}", to_json(&v)?);
                }
            }
            Ok(())
        }
    }
}

fn conv(cmd: ConvCmd) -> Out {
    let ConvCmd::Analyze { trellis, obs, mode, seed, prune_eps, full } = cmd;
    if mode == ModeArg::Sampled {
        need_seed(seed, "sampled decoding")?;
    }
    let tdoc: TrellisDoc = from_json(&read(&trellis)?, &trellis.display().to_string())?;
    let spec = tdoc.build()?;
    let odoc: BlockObsDoc = from_json(&read(&obs)?, &obs.display().to_string())?;
    let observations = odoc.build(&spec)?;
    let mut opts = TrellisOptions {
        mode: mode.into(),
        prune_eps,
        start: odoc.start,
        end: odoc.end,
        ..TrellisOptions::default()
    };
    if mode == ModeArg::Sampled {
        opts.seed = need_seed(seed, "sampled decoding")?;
    }
    let sec = Section::new(&spec)?;
    let res = trellis::decode_block(&sec, &observations, &opts)?;
    let mut sections = Vec::new();
    for (t, (p, e)) in res.posterior.iter().zip(&res.extrinsic).enumerate() {
        let mut s = json!({ "t": t, "posterior": metrics_json(p), "extrinsic": metrics_json(e) });
        if full {
            s["posterior_message"] = message_json(p)?;
            s["extrinsic_message"] = message_json(e)?;
        }
        sections.push(s);
    }
    emit(&json!({ "sections": sections, "warnings": res.warnings }))
}

fn load_turbo(a: &TurboArgs, threads: Option<usize>) -> Result<(de::TurboSpec, DeConfig), Fail> {
    let spec = match &a.turbo {
        Some(p) => from_json::<TurboDoc>(&read(p)?, &p.display().to_string())?.build()?,
        None => de::TurboSpec::rate_third(trellis::TrellisSpec::from_transfer_function(&[1, 0, 1], &[1, 1, 1], 3)?)?,
    };
    let mut cfg = match &a.config {
        Some(p) => from_json::<DeConfig>(&read(p)?, &p.display().to_string())?,
        None => DeConfig::default(),
    };
    cfg.seed = a.seed;
    if threads.is_some() {
        cfg.threads = threads;
    }
    cfg.validate()?;
    Ok((spec, cfg))
}

fn parse_rate(s: &str) -> Result<f64, Fail> {
    let bad = || usage(format!("cannot parse rate '{s}'"));
    match s.split_once('/') {
        Some((a, b)) => {
            let a: f64 = a.trim().parse().map_err(|_| bad())?;
            let b: f64 = b.trim().parse().map_err(|_| bad())?;
            Ok(a / b)
        }
        None => s.trim().parse().map_err(|_| bad()),
    }
}

fn de_cmd(cmd: DeCmd, threads: Option<usize>) -> Out {
    match cmd {
        DeCmd::Holevo { q, rate } => {
            let r = parse_rate(&rate)?;
            emit(&json!({ "q": q, "rate": r, "lambda_h": de::holevo_threshold(q, r)? }))
        }
        DeCmd::Threshold { turbo, out } => {
            let (spec, cfg) = load_turbo(&turbo, threads)?;
            let res = de::threshold_bisect(&spec, &cfg)?;
            let mut v = serde_json::to_value(&res).map_err(Error::from)?;
            v["rate"] = json!(spec.rate());
            v["config"] = serde_json::to_value(&DeConfig { threads: None, ..cfg }).map_err(Error::from)?;
            if let Some(c) = spec.constituents().first() {
                let q = c.symbol_group().order();
                if c.symbol_group().rank() == 1 {
                    v["lambda_h"] = json!(de::holevo_threshold(q, spec.rate())?);
                }
            }
            let text = to_json(&v)? + "\n";
            write_out(out.as_deref(), &text)
        }
        DeCmd::Heatmap { turbo, res, ray, out } => {
            let (spec, cfg) = load_turbo(&turbo, threads)?;
            let points = match (res, ray) {
                (Some(h), None) => de::simplex_grid(h)?,
                (None, Some(r)) => {
                    let parts: Vec<f64> = r
                        .split(':')
                        .map(|x| x.trim().parse::<f64>())
                        .collect::<Result<_, _>>()
                        .map_err(|_| usage(format!("cannot parse ray '{r}'")))?;
                    if parts.len() != 3 {
                        return Err(usage("--ray takes start:stop:step"));
                    }
                    de::symmetric_ray(parts[0], parts[1], parts[2])?
                }
                _ => return Err(usage("give --res or --ray")),
            };
            let hp = de::heatmap(&spec, &cfg, &points)?;
            write_out(out.as_deref(), &de::heatmap_csv(&hp))
        }
    }
}

fn run(cli: Cli) -> Out {
    if let Some(t) = cli.threads {
        if t == 0 {
            return Err(usage("--threads must be positive"));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build_global()
            .map_err(|e| usage(e.to_string()))?;
    }
    match cli.cmd {
        Cmd::Groups { cmd: GroupsCmd::Info { group, hom } } => groups_info(group, hom),
        Cmd::Factor(a) => factor(a),
        Cmd::Measures(a) => measures(a),
        Cmd::Verify(a) => verify(a),
        Cmd::Mp { cmd } => mp(cmd),
        Cmd::Polar { cmd } => polar_construct(cmd),
        Cmd::Conv { cmd } => conv(cmd),
        Cmd::De { cmd } => de_cmd(cmd, cli.threads),
    }
}

fn fail(kind: &str, code: u8, msg: String) -> ExitCode {
    let v = json!({ "error": { "kind": kind, "code": code, "message": msg } });
    eprintln!("{v}");
    ExitCode::from(code)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                print!("{e}");
                return ExitCode::SUCCESS;
            }
            return fail("usage", 1, e.to_string().trim().to_string());
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Fail::Usage(m)) => fail("usage", 1, m),
        Err(Fail::Lib(e)) if e.is_numerical() => fail("numerical", 3, e.to_string()),
        Err(Fail::Lib(e)) => fail("validation", 2, e.to_string()),
    }
}
