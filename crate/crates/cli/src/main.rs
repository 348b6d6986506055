//! `thinloop`: batch front end for the thin-homotopy pipeline.
//!
//! Curve arguments accept either a sampled curve file or a curve spec, which
//! is synthesised on the fly. Verdict commands exit with 0 (equivalent),
//! 1 (not equivalent) or 2 (undecided); any error also exits with 2.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Deserialize;

use thinloop::curve::{decompose, synth_curve, uniform_grid, ArcDecomposition, DecomposeOptions, SynthOptions};
use thinloop::equivalence::{crosscheck, BatteryOptions, EquivalenceReport, Verdict};
use thinloop::holonomy::{distance_from_identity, signature, transport, ConnectionField, GroupKind};
use thinloop::homotopy::{check_thin, image_containment, remove_whiskers};
use thinloop::io;
use thinloop::reparam::psi;
use thinloop::tree::{edge_list, factorize, svg};
use thinloop::{SampledCurve, Word};

/// Version stamped on every report and table this tool writes.
const REPORT_VERSION: u32 = 1;

#[derive(Debug, Parser)]
#[command(name = "thinloop", version, about = "Tree-like loops, thin homotopies and holonomy")]
struct Cli {
    #[command(flatten)]
    flags: Flags,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, ValueEnum, Deserialize)]
#[serde(rename_all = "lowercase")]
enum Emit {
    Svg,
    Frames,
    Tables,
}

#[derive(Debug, Default, Args, Deserialize)]
#[serde(default, deny_unknown_fields, rename_all = "kebab-case")]
struct Flags {
    /// TOML file of settings; its values take precedence over flags.
    #[arg(long, global = true)]
    #[serde(skip)]
    config: Option<PathBuf>,
    /// Geometric tolerance for arc matching and image containment.
    #[arg(long, global = true)]
    tol_geo: Option<f64>,
    /// Speed below which a sample counts as halted.
    #[arg(long, global = true)]
    v_min: Option<f64>,
    /// Turn angle below which a corner is a smooth pass-through.
    #[arg(long, global = true)]
    theta_tol: Option<f64>,
    /// Relative tolerance on the homotopy's 2×2 minors.
    #[arg(long, global = true)]
    tol_rank: Option<f64>,
    /// Relative tolerance on boundary partial derivatives.
    #[arg(long, global = true)]
    tol_edge: Option<f64>,
    /// `‖U − I‖` at or below which transport counts as trivial.
    #[arg(long, global = true)]
    tol_group: Option<f64>,
    /// `r` steps of the halting stage of a homotopy.
    #[arg(long, global = true)]
    grid: Option<usize>,
    /// Samples per arc traversal when synthesising a spec.
    #[arg(long, global = true)]
    samples: Option<usize>,
    #[arg(long, global = true)]
    #[serde(default, deserialize_with = "group_from_name")]
    group: Option<GroupKind>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Number of random connections to sample.
    #[arg(long, global = true)]
    connections: Option<usize>,
    /// Extra artifacts to write into the output directory.
    #[arg(long, global = true, value_enum)]
    emit: Vec<Emit>,
    /// Output directory for artifacts; reports go to stdout as well.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
}

fn group_from_name<'de, D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Option<GroupKind>, D::Error> {
    let name: Option<String> = Option::deserialize(d)?;
    name.map(|n| n.parse().map_err(serde::de::Error::custom)).transpose()
}

/// Settings after defaults, flags and the config file are combined.
#[derive(Debug, Clone)]
struct RunConfig {
    battery: BatteryOptions,
    samples: usize,
    emit: Vec<Emit>,
    out: Option<PathBuf>,
}

impl RunConfig {
    fn resolve(flags: Flags) -> Result<Self> {
        let file: Flags = match &flags.config {
            Some(path) => {
                let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
                toml::from_str(&text).with_context(|| format!("parsing {}", path.display()))?
            }
            None => Flags::default(),
        };
        let defaults = BatteryOptions::default();
        let pick = |f: Option<f64>, c: Option<f64>, d: f64| c.or(f).unwrap_or(d);
        let mut battery = defaults;
        battery.decompose = DecomposeOptions::new(
            pick(flags.tol_geo, file.tol_geo, defaults.decompose.eps_geo),
            pick(flags.v_min, file.v_min, defaults.decompose.v_min),
        );
        battery.theta_tol = pick(flags.theta_tol, file.theta_tol, defaults.theta_tol);
        battery.tol_rank = pick(flags.tol_rank, file.tol_rank, defaults.tol_rank);
        battery.tol_edge = pick(flags.tol_edge, file.tol_edge, defaults.tol_edge);
        battery.tol_trivial = pick(flags.tol_group, file.tol_group, defaults.tol_trivial);
        battery.n_r = file.grid.or(flags.grid).unwrap_or(defaults.n_r);
        battery.group = file.group.or(flags.group).unwrap_or(defaults.group);
        battery.seed = file.seed.or(flags.seed).unwrap_or(defaults.seed);
        battery.connections = file.connections.or(flags.connections).unwrap_or(defaults.connections);
        let samples = file.samples.or(flags.samples).unwrap_or(SynthOptions::default().samples_per_unit);
        let mut emit = if file.emit.is_empty() { flags.emit } else { file.emit };
        emit.sort();
        emit.dedup();
        let out = file.out.or(flags.out);

        for (name, v) in [
            ("tol-geo", battery.decompose.eps_geo),
            ("v-min", battery.decompose.v_min),
            ("theta-tol", battery.theta_tol),
            ("tol-rank", battery.tol_rank),
            ("tol-edge", battery.tol_edge),
            ("tol-group", battery.tol_trivial),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                bail!("{name} must be positive, got {v}");
            }
        }
        if battery.n_r < 12 {
            bail!("grid must be at least 12, got {}", battery.n_r);
        }
        if battery.connections == 0 {
            bail!("connections must be at least 1");
        }
        Ok(Self {
            battery,
            samples,
            emit,
            out,
        })
    }

    fn emits(&self, e: Emit) -> bool {
        self.emit.contains(&e)
    }

    /// Write an artifact into the output directory, if one is configured.
    fn write(&self, name: &str, contents: &str) -> Result<()> {
        let Some(dir) = &self.out else {
            return Ok(());
        };
        let path = dir.join(name);
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent).with_context(|| format!("creating {}", parent.display()))?;
        }
        fs::write(&path, contents).with_context(|| format!("writing {}", path.display()))
    }
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Synthesise a curve spec into a sampled curve file.
    Synth { spec: PathBuf },
    /// Decompose a curve into arcs and print its word.
    Decompose { curve: PathBuf },
    /// Reduce a word such as `a b b' c`.
    Reduce { word: String },
    /// Decide equivalence of two loops by their words.
    Equiv { a: PathBuf, b: PathBuf },
    /// Build the tree of a tree-like loop.
    Tree { curve: PathBuf },
    /// Contract the whiskers of a loop and check the homotopy is thin.
    Contract { curve: PathBuf },
    /// Transport random connections (or one from a file) around a loop.
    Holonomy {
        curve: PathBuf,
        /// Connection file to use instead of seeded random ones.
        #[arg(long)]
        connection: Option<PathBuf>,
    },
    /// Path signature up to a level.
    Signature {
        curve: PathBuf,
        #[arg(long, default_value_t = 3)]
        level: usize,
    },
    /// Run all four equivalence routes on two loops.
    Crosscheck { a: PathBuf, b: PathBuf },
    /// Tabulate the reparametrisation with critical values at the given points.
    PsiTable {
        values: Vec<f64>,
        #[arg(long, default_value_t = 64)]
        rows: usize,
    },
}

fn load_curve(path: &Path, cfg: &RunConfig) -> Result<SampledCurve> {
    let text = io::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    match io::curve_from_str(&text) {
        Ok(c) => Ok(c),
        Err(curve_err) => {
            let spec = io::spec_from_str(&text)
                .with_context(|| format!("{} is neither a curve file ({curve_err}) nor a spec", path.display()))?;
            let opts = SynthOptions {
                samples_per_unit: cfg.samples,
                ..SynthOptions::default()
            };
            Ok(synth_curve(&spec, &opts)
                .with_context(|| format!("synthesising {}", path.display()))?
                .curve)
        }
    }
}

fn decomposed(path: &Path, cfg: &RunConfig) -> Result<(SampledCurve, ArcDecomposition)> {
    let curve = load_curve(path, cfg)?;
    let dec = decompose(&curve, &cfg.battery.decompose).with_context(|| format!("decomposing {}", path.display()))?;
    Ok((curve, dec))
}

/// Words as printed in reports; the empty word is `1`.
fn show(w: &Word) -> String {
    if w.is_empty() {
        "1".to_string()
    } else {
        w.to_string()
    }
}

fn or_one(w: &str) -> &str {
    if w.is_empty() {
        "1"
    } else {
        w
    }
}

fn header(kind: &str) -> String {
    format!("# thinloop {kind} report, version {REPORT_VERSION}\n")
}

fn exit_for(v: Verdict) -> ExitCode {
    ExitCode::from(match v {
        Verdict::Equivalent => 0,
        Verdict::NotEquivalent => 1,
        Verdict::Undecided => 2,
    })
}

fn cmd_synth(spec: &Path, cfg: &RunConfig) -> Result<ExitCode> {
    let curve = load_curve(spec, cfg)?;
    let text = io::curve_to_string(&curve)?;
    if cfg.out.is_some() {
        cfg.write("curve.toml", &text)?;
        println!("samples: {}", curve.len());
    } else {
        print!("{text}");
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_decompose(path: &Path, cfg: &RunConfig) -> Result<ExitCode> {
    let (curve, dec) = decomposed(path, cfg)?;
    let word = dec.word();
    let mut r = header("decompose");
    writeln!(r, "samples: {}", curve.len())?;
    writeln!(r, "arcs: {}", dec.arcs.len())?;
    writeln!(r, "word: {}", show(&word))?;
    writeln!(r, "reduced: {}", show(&word.reduce()))?;
    writeln!(r, "whisker: {}", word.is_whisker())?;
    writeln!(r, "# letter start end multiplicity")?;
    for (l, iv) in word.letters.iter().zip(&dec.intervals) {
        writeln!(r, "{l} {:.9} {:.9} {}", curve.param(iv.start), curve.param(iv.end), iv.multiplicity)?;
    }
    print!("{r}");
    cfg.write("decompose.txt", &r)?;
    Ok(ExitCode::SUCCESS)
}

fn cmd_reduce(text: &str) -> Result<ExitCode> {
    let word: Word = text.parse().with_context(|| format!("parsing word `{text}`"))?;
    println!("{}", show(&word.reduce()));
    Ok(ExitCode::SUCCESS)
}

fn cmd_equiv(a: &Path, b: &Path, cfg: &RunConfig) -> Result<ExitCode> {
    let (ca, cb) = (load_curve(a, cfg)?, load_curve(b, cfg)?);
    let joined = ca.concat(&cb.reverse(), cfg.battery.decompose.eps_geo)?;
    let dec = decompose(&joined, &cfg.battery.decompose)?;
    let word = dec.word();
    let verdict = if word.is_whisker() { Verdict::Equivalent } else { Verdict::NotEquivalent };
    let mut r = header("equiv");
    writeln!(r, "loop word: {}", show(&word))?;
    writeln!(r, "reduced: {}", show(&word.reduce()))?;
    writeln!(r, "verdict: {verdict}")?;
    print!("{r}");
    cfg.write("equiv.txt", &r)?;
    Ok(exit_for(verdict))
}

fn cmd_tree(path: &Path, cfg: &RunConfig) -> Result<ExitCode> {
    let (curve, dec) = decomposed(path, cfg)?;
    let fac = factorize(&curve, &dec, cfg.battery.theta_tol)?;
    let word = dec.word();
    let letters: Vec<Vec<thinloop::Letter>> = fac
        .fused
        .chains
        .iter()
        .map(|chain| chain.iter().map(|&a| word.letters[fac.fused.nesting.annuli[a].left]).collect())
        .collect();
    let list = edge_list(&fac.tree, &letters);
    let rep = fac.report(2000, cfg.battery.seed);
    let mut r = header("tree");
    writeln!(r, "vertices: {}", fac.tree.vertices.len())?;
    writeln!(r, "edges: {}", fac.tree.edges.len())?;
    writeln!(r, "fold error: {:.3e}", rep.max_error)?;
    writeln!(r, "fold lipschitz: {:.6}", rep.lipschitz)?;
    r.push_str(&list);
    print!("{r}");
    cfg.write("tree.txt", &r)?;
    if cfg.emits(Emit::Svg) {
        cfg.write("tree.svg", &svg(&fac.fused, &fac.tree))?;
    }
    Ok(ExitCode::SUCCESS)
}

/// Rows of a grid written out as one table per frame.
fn frames(grid: &thinloop::HomotopyGrid, count: usize) -> Vec<(String, String)> {
    let n = grid.n_r();
    let mut picks: Vec<usize> = (0..count).map(|k| k * n / (count - 1).max(1)).collect();
    picks.dedup();
    picks
        .into_iter()
        .enumerate()
        .map(|(k, j)| {
            let mut t = format!("# frame {k}, r = {:.9}, version {REPORT_VERSION}\n", grid.r_params()[j]);
            for (i, p) in grid.row(j).chunks(grid.dim()).enumerate() {
                let coords: Vec<String> = p.iter().map(|x| format!("{x:.12e}")).collect();
                let _ = writeln!(t, "{:.12e} {}", grid.t_params()[i], coords.join(" "));
            }
            (format!("frames/frame-{k:03}.txt"), t)
        })
        .collect()
}

fn cmd_contract(path: &Path, cfg: &RunConfig) -> Result<ExitCode> {
    let (curve, dec) = decomposed(path, cfg)?;
    let o = &cfg.battery;
    let (grid, target) = remove_whiskers(&curve, &dec, o.theta_tol, o.n_r, o.per_window)?;
    let thin = check_thin(&grid, o.tol_rank, o.tol_edge)?;
    let image = image_containment(&grid, &curve, dec.eps_geo)?;
    let tdec = decompose(&target, &o.decompose)?;
    let mut r = header("contract");
    writeln!(r, "grid: {} x {}", grid.t_params().len(), grid.r_params().len())?;
    writeln!(r, "source word: {}", show(&dec.word()))?;
    writeln!(r, "target word: {}", show(&tdec.word()))?;
    writeln!(r, "max minor: {:.3e} (tol {:.1e})", thin.max_minor, thin.tol_rank)?;
    writeln!(r, "max edge partial: {:.3e} (tol {:.1e})", thin.max_edge_partial, thin.tol_edge)?;
    writeln!(r, "c1 ratio: {:.3}", thin.c1_ratio)?;
    writeln!(r, "image distance: {:.3e} (tol {:.1e})", image.max_distance, image.tol)?;
    writeln!(r, "thin: {}", thin.pass && image.within)?;
    print!("{r}");
    cfg.write("contract.txt", &r)?;
    cfg.write("target.toml", &io::curve_to_string(&target)?)?;
    if cfg.emits(Emit::Frames) {
        for (name, text) in frames(&grid, 9) {
            cfg.write(&name, &text)?;
        }
    }
    Ok(if thin.pass && image.within { ExitCode::SUCCESS } else { ExitCode::from(2) })
}

fn cmd_holonomy(path: &Path, connection: Option<&Path>, cfg: &RunConfig) -> Result<ExitCode> {
    let curve = load_curve(path, cfg)?;
    let o = &cfg.battery;
    let conns: Vec<ConnectionField> = match connection {
        Some(p) => vec![io::read_connection(p).with_context(|| format!("reading {}", p.display()))?],
        None => (0..o.connections as u64)
            .map(|k| ConnectionField::random(o.group, curve.dim(), o.seed + k))
            .collect(),
    };
    let mut r = header("holonomy");
    writeln!(r, "# seed group deviation defect richardson")?;
    let mut worst = 0.0f64;
    for c in &conns {
        let h = transport(&curve, c, curve.segments().max(thinloop::holonomy::MIN_STEPS))?;
        let dev = distance_from_identity(&h.u);
        worst = worst.max(dev);
        let seed = c.seed().map_or("-".to_string(), |s| s.to_string());
        writeln!(r, "{seed} {} {dev:.6e} {:.3e} {:.3e}", c.group(), h.defect, h.richardson)?;
    }
    writeln!(r, "worst: {worst:.6e}")?;
    writeln!(r, "trivial: {}", worst <= o.tol_trivial)?;
    print!("{r}");
    cfg.write("holonomy.txt", &r)?;
    Ok(ExitCode::SUCCESS)
}

fn cmd_signature(path: &Path, level: usize, cfg: &RunConfig) -> Result<ExitCode> {
    let curve = load_curve(path, cfg)?;
    let sig = signature(&curve, level)?;
    let mut r = header("signature");
    writeln!(r, "dim: {}", sig.dim())?;
    writeln!(r, "depth: {}", sig.depth())?;
    for k in 1..=sig.depth() {
        let entries: Vec<String> = sig.level(k).iter().map(|x| format!("{x:.12e}")).collect();
        writeln!(r, "level {k}: {}", entries.join(" "))?;
    }
    print!("{r}");
    cfg.write("signature.txt", &r)?;
    Ok(ExitCode::SUCCESS)
}

fn crosscheck_text(rep: &EquivalenceReport) -> Result<String> {
    let mut r = header("crosscheck");
    writeln!(r, "word a: {}", or_one(&rep.word_a))?;
    writeln!(r, "word b: {}", or_one(&rep.word_b))?;
    writeln!(r, "loop word: {}", or_one(&rep.loop_word))?;
    writeln!(r, "reduced: {}", or_one(&rep.reduced))?;
    for o in &rep.routes {
        writeln!(r, "route ({}) {:?}: {} ({})", o.route.tag(), o.route, o.verdict, o.note)?;
        for (k, v) in &o.detail {
            writeln!(r, "  {k}: {v:.6e}")?;
        }
    }
    writeln!(r, "agree: {}", rep.agree)?;
    writeln!(r, "verdict: {}", rep.verdict)?;
    Ok(r)
}

fn cmd_crosscheck(a: &Path, b: &Path, cfg: &RunConfig) -> Result<ExitCode> {
    let (ca, cb) = (load_curve(a, cfg)?, load_curve(b, cfg)?);
    let rep = crosscheck(&ca, &cb, &cfg.battery)?;
    let r = crosscheck_text(&rep)?;
    print!("{r}");
    cfg.write("crosscheck.txt", &r)?;
    Ok(exit_for(rep.verdict))
}

fn cmd_psi_table(values: &[f64], rows: usize, cfg: &RunConfig) -> Result<ExitCode> {
    let map = psi(values)?;
    let mut r = format!("# psi table, version {REPORT_VERSION}\n# x psi dpsi\n");
    for x in uniform_grid(rows.max(1) + 1) {
        let (y, dy) = map.eval_with_derivative(x);
        writeln!(r, "{x:.9} {y:.12e} {dy:.12e}")?;
    }
    print!("{r}");
    if cfg.emits(Emit::Tables) {
        cfg.write("psi.txt", &r)?;
    }
    Ok(ExitCode::SUCCESS)
}

fn run(cli: Cli) -> Result<ExitCode> {
    let cfg = RunConfig::resolve(cli.flags)?;
    match &cli.command {
        Command::Synth { spec } => cmd_synth(spec, &cfg),
        Command::Decompose { curve } => cmd_decompose(curve, &cfg),
        Command::Reduce { word } => cmd_reduce(word),
        Command::Equiv { a, b } => cmd_equiv(a, b, &cfg),
        Command::Tree { curve } => cmd_tree(curve, &cfg),
        Command::Contract { curve } => cmd_contract(curve, &cfg),
        Command::Holonomy { curve, connection } => cmd_holonomy(curve, connection.as_deref(), &cfg),
        Command::Signature { curve, level } => cmd_signature(curve, *level, &cfg),
        Command::Crosscheck { a, b } => cmd_crosscheck(a, b, &cfg),
        Command::PsiTable { values, rows } => cmd_psi_table(values, *rows, &cfg),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
