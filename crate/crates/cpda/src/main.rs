use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand};

use cpda::cache::RunCache;
use cpda::corpus::{accuracy_csv, ranks_csv, run_corpus, METHODS};
use cpda::formats::{
    read_config, read_manifest, read_model_json, write_edge_list, write_model_json, write_observations_csv,
    write_observations_meta, write_ranking_csv, write_scores_csv,
};
use cpda::pipeline::{analyze, localize, Options};
use cpda::report::{analysis_report, localization_report};
use cpda::suite::{parse_suite, Suite};
use cpda_core::cdfl::{apply_tiebreaker, FaultSpec, Method};
use cpda_core::cpdm::{diff_models, export_diff_dot, export_dot, filter_band, Band, DotOptions};

const DEFAULT_OUTPUT_DIR: &str = "cpda-out";

#[derive(Parser)]
#[command(name = "cpda", version, about = "Causal program dependence analysis and fault localization")]
struct Cli {
    /// Flat `key = value` file; flags override its entries.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build the dependence model of a program over a test suite.
    Analyze(RunArgs),
    /// Render a model (or the difference of two models) as DOT.
    Export(ExportArgs),
    /// Rank fault suspects by causal dependence and by Ochiai.
    Localize(LocalizeArgs),
    /// Localize every program of a corpus manifest and report acc@n.
    Corpus(CorpusArgs),
}

#[derive(Args)]
struct CommonArgs {
    /// Mutations sampled per node.
    #[arg(long)]
    nmpn: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads for mutant runs.
    #[arg(long)]
    jobs: Option<usize>,
    #[arg(long)]
    output_dir: Option<PathBuf>,
    /// Leave runs that exceed the step budget out of the observations.
    #[arg(long)]
    drop_timeouts: bool,
    /// Consider every intervention parent, not only safe parents.
    #[arg(long)]
    no_safe_parents: bool,
    /// Do not read or write the run cache.
    #[arg(long)]
    no_cache: bool,
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    program: Option<PathBuf>,
    #[arg(long)]
    suite: Option<PathBuf>,
    /// Use only the tests of this suite group.
    #[arg(long)]
    group: Option<String>,
    #[command(flatten)]
    common: CommonArgs,
}

#[derive(Args)]
struct ExportArgs {
    /// Model JSON written by `analyze`.
    #[arg(long)]
    model: Option<PathBuf>,
    /// Keep edges whose weight lies in `LO:HI` or an interval such as `(0.2,0.8]`.
    #[arg(long)]
    band: Option<String>,
    /// Second model; the output shows edges of `--model` minus those of `--diff`.
    #[arg(long)]
    diff: Option<PathBuf>,
    /// Print weights on edges.
    #[arg(long)]
    labels: bool,
    #[arg(long)]
    output_dir: Option<PathBuf>,
}

#[derive(Args)]
struct LocalizeArgs {
    #[command(flatten)]
    run: RunArgs,
    /// Node whose change stands for a change of outcome.
    #[arg(long)]
    out_node: Option<usize>,
    /// Known fault line; reports its rank under every tie policy.
    #[arg(long)]
    fault_line: Vec<u32>,
}

#[derive(Args)]
struct CorpusArgs {
    #[arg(long)]
    manifest: Option<PathBuf>,
    #[command(flatten)]
    common: CommonArgs,
}

enum Failure {
    Usage(String),
    Analysis(String),
}

fn usage(msg: impl Into<String>) -> Failure {
    Failure::Usage(msg.into())
}

fn analysis(msg: impl ToString) -> Failure {
    Failure::Analysis(msg.to_string())
}

const CONFIG_KEYS: &[&str] = &[
    "program",
    "suite",
    "group",
    "nmpn",
    "seed",
    "jobs",
    "output-dir",
    "drop-timeouts",
    "safe-parents",
    "cache",
    "model",
    "band",
    "diff",
    "labels",
    "out-node",
    "manifest",
];

/// Configuration file entries, consulted when a flag is absent.
struct Config(BTreeMap<String, String>);

impl Config {
    fn load(path: Option<&Path>) -> Result<Config, Failure> {
        let Some(path) = path else {
            return Ok(Config(BTreeMap::new()));
        };
        let text = fs::read_to_string(path).map_err(|e| usage(format!("{}: {e}", path.display())))?;
        let map = read_config(&text).map_err(|e| usage(format!("{}: {e}", path.display())))?;
        if let Some(k) = map.keys().find(|k| !CONFIG_KEYS.contains(&k.as_str())) {
            return Err(usage(format!("{}: unknown key '{k}'", path.display())));
        }
        Ok(Config(map))
    }

    fn value<T: FromStr>(&self, key: &str, flag: Option<T>) -> Result<Option<T>, Failure> {
        if flag.is_some() {
            return Ok(flag);
        }
        match self.0.get(key) {
            None => Ok(None),
            Some(v) => v
                .parse()
                .map(Some)
                .map_err(|_| usage(format!("config key '{key}': cannot read '{v}'"))),
        }
    }

    fn flag(&self, key: &str, flag: bool, default: bool) -> Result<bool, Failure> {
        if flag {
            return Ok(!default);
        }
        Ok(self.value::<bool>(key, None)?.unwrap_or(default))
    }

    fn required<T: FromStr>(&self, key: &str, flag: Option<T>) -> Result<T, Failure> {
        self.value(key, flag)?
            .ok_or_else(|| usage(format!("missing --{key} (flag or config key)")))
    }
}

struct Common {
    opts: Options,
    output_dir: PathBuf,
    cache: bool,
}

fn resolve_common(c: CommonArgs, cfg: &Config) -> Result<Common, Failure> {
    let seed = cfg.value("seed", c.seed)?;
    if seed.is_none() && std::env::var_os("CI").is_some_and(|v| !v.is_empty()) {
        return Err(usage("a seed is required when CI is set (--seed or config key 'seed')"));
    }
    let nmpn = cfg.value("nmpn", c.nmpn)?.unwrap_or(Options::default().nmpn);
    if nmpn == 0 {
        return Err(usage("--nmpn must be at least 1"));
    }
    let jobs = cfg.value("jobs", c.jobs)?;
    if jobs == Some(0) {
        return Err(usage("--jobs must be at least 1"));
    }
    Ok(Common {
        opts: Options {
            nmpn,
            seed: seed.unwrap_or(0),
            output_column: false,
            // `--no-safe-parents` turns the default (on) off.
            safe_parents: cfg.flag("safe-parents", c.no_safe_parents, true)?,
            drop_timeouts: cfg.flag("drop-timeouts", c.drop_timeouts, false)?,
            jobs,
        },
        output_dir: cfg
            .value("output-dir", c.output_dir)?
            .unwrap_or_else(|| PathBuf::from(DEFAULT_OUTPUT_DIR)),
        cache: cfg.flag("cache", c.no_cache, true)?,
    })
}

fn open_cache(c: &Common) -> Result<RunCache, Failure> {
    if c.cache {
        RunCache::open(&c.output_dir.join("cache")).map_err(|e| analysis(format!("cache: {e}")))
    } else {
        Ok(RunCache::in_memory())
    }
}

fn read(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| analysis(format!("{}: {e}", path.display())))
}

fn write(dir: &Path, name: &str, contents: &str) -> Result<(), Failure> {
    fs::create_dir_all(dir).map_err(|e| analysis(format!("{}: {e}", dir.display())))?;
    let path = dir.join(name);
    fs::write(&path, contents).map_err(|e| analysis(format!("{}: {e}", path.display())))
}

struct Inputs {
    source: String,
    suite: Suite,
    suite_name: String,
}

fn load_inputs(r: &RunArgs, cfg: &Config) -> Result<Inputs, Failure> {
    let program: PathBuf = cfg.required("program", r.program.clone())?;
    let suite_path: PathBuf = cfg.required("suite", r.suite.clone())?;
    let group: Option<String> = cfg.value("group", r.group.clone())?;
    let source = read(&program)?;
    let mut suite = parse_suite(&read(&suite_path)?).map_err(|e| analysis(format!("{}: {e}", suite_path.display())))?;
    let mut suite_name = suite_path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    if let Some(g) = group {
        suite = suite.group(&g);
        if suite.tests.is_empty() {
            return Err(analysis(format!("{}: no tests in group '{g}'", suite_path.display())));
        }
        suite_name = format!("{suite_name}/{g}");
    }
    Ok(Inputs {
        source,
        suite,
        suite_name,
    })
}

fn cmd_analyze(r: RunArgs, cfg: &Config) -> Result<(), Failure> {
    let inputs = load_inputs(&r, cfg)?;
    let common = resolve_common(r.common, cfg)?;
    let mut cache = open_cache(&common)?;
    let a = analyze(&inputs.source, &inputs.suite.inputs(), &inputs.suite_name, &common.opts, &mut cache)
        .map_err(analysis)?;
    let dir = &common.output_dir;
    write(dir, "observations.csv", &write_observations_csv(&a.collection.set))?;
    write(dir, "observations.meta.jsonl", &write_observations_meta(&a.collection.set))?;
    write(dir, "structure.edges", &write_edge_list(&a.structure.dag))?;
    write(dir, "scores.csv", &write_scores_csv(&a.dd))?;
    write(dir, "model.json", &write_model_json(&a.model))?;
    write(dir, "diagnostics.txt", &analysis_report(&a, &common.opts))?;
    println!(
        "{} nodes, {} observations, {} edges; results in {}",
        a.collection.nodes.len(),
        a.collection.set.observations().len(),
        a.model.edges.len(),
        dir.display()
    );
    Ok(())
}

fn cmd_export(e: ExportArgs, cfg: &Config) -> Result<(), Failure> {
    let model_path: PathBuf = cfg.required("model", e.model)?;
    let band: Option<String> = cfg.value("band", e.band)?;
    let band = band
        .map(|b| Band::parse(&b).map_err(|err| usage(format!("--band: {err}"))))
        .transpose()?;
    let diff: Option<PathBuf> = cfg.value("diff", e.diff)?;
    let labels = cfg.flag("labels", e.labels, false)?;
    let output_dir: Option<PathBuf> = cfg.value("output-dir", e.output_dir)?;
    let load = |p: &Path| read_model_json(&read(p)?).map_err(|err| analysis(format!("{}: {err}", p.display())));
    let mut model = load(&model_path)?;
    if let Some(b) = &band {
        model = filter_band(&model, b);
    }
    let (name, dot) = match diff {
        None => {
            let opts = DotOptions {
                name: Some(model.provenance.suite.clone()),
                edge_labels: labels,
            };
            let (dot, clamped) = export_dot(&model, &opts);
            for (i, j) in clamped {
                eprintln!("warning: weight of {i} -> {j} lies outside [0, 1]; drawn at the nearest class");
            }
            ("model.dot", dot)
        }
        Some(other) => {
            let mut b = load(&other)?;
            if let Some(band) = &band {
                b = filter_band(&b, band);
            }
            let d = diff_models(&model, &b).map_err(analysis)?;
            let opts = DotOptions {
                name: Some(format!("{} - {}", model.provenance.suite, b.provenance.suite)),
                edge_labels: labels,
            };
            ("diff.dot", export_diff_dot(&d, &model.labels, &opts))
        }
    };
    match output_dir {
        Some(dir) => {
            write(&dir, name, &dot)?;
            println!("wrote {}", dir.join(name).display());
        }
        None => print!("{dot}"),
    }
    Ok(())
}

fn cmd_localize(l: LocalizeArgs, cfg: &Config) -> Result<(), Failure> {
    let inputs = load_inputs(&l.run, cfg)?;
    let out_node: Option<usize> = cfg.value("out-node", l.out_node)?;
    let common = resolve_common(l.run.common, cfg)?;
    let mut cache = open_cache(&common)?;
    let loc = match localize(&inputs.source, &inputs.suite.inputs(), &common.opts, out_node, &mut cache) {
        Ok(loc) => loc,
        Err(e) if e.is_no_failing_test() => {
            println!("no failing test in the suite; nothing to localize");
            return Ok(());
        }
        Err(e) => return Err(analysis(e)),
    };
    let dir = &common.output_dir;
    write(dir, "ranking-cdfl.csv", &write_ranking_csv(&loc.cdfl.ranking, Method::Cdfl))?;
    write(dir, "ranking-sbfl.csv", &write_ranking_csv(&loc.sbfl, Method::SbflAvg))?;
    write(dir, "diagnostics.txt", &localization_report(&loc, &common.opts))?;
    let mut summary = String::new();
    let _ = writeln!(summary, "causal ranking (node, line, score):");
    for e in loc.cdfl.ranking.entries.iter().take(5) {
        let _ = writeln!(summary, "  {} line {} {:.4}", e.node.unwrap_or(0), e.line, e.score);
    }
    if !l.fault_line.is_empty() {
        let fault = FaultSpec {
            nodes: loc
                .collection
                .nodes
                .iter()
                .filter(|n| l.fault_line.contains(&n.location.line))
                .map(|n| n.index)
                .collect(),
            lines: l.fault_line.iter().copied().collect(),
            description: String::new(),
        };
        let mut table = String::from("method,rank\n");
        for m in METHODS {
            let r = if m == Method::Cdfl { &loc.cdfl.ranking } else { &loc.sbfl };
            let rank = apply_tiebreaker(r, m.tie_policy(), &fault).map_err(analysis)?;
            let _ = writeln!(table, "{},{rank}", m.as_str());
            let _ = writeln!(summary, "fault rank ({}): {rank}", m.as_str());
        }
        write(dir, "fault-ranks.csv", &table)?;
    }
    print!("{summary}");
    Ok(())
}

fn cmd_corpus(c: CorpusArgs, cfg: &Config) -> Result<(), Failure> {
    let manifest_path: PathBuf = cfg.required("manifest", c.manifest)?;
    let common = resolve_common(c.common, cfg)?;
    let manifest = read_manifest(&read(&manifest_path)?).map_err(|e| analysis(format!("{}: {e}", manifest_path.display())))?;
    let dir = manifest_path.parent().unwrap_or(Path::new("."));
    let mut cache = open_cache(&common)?;
    let outcome = run_corpus(dir, &manifest, &common.opts, &mut cache).map_err(analysis)?;
    for (_, notice) in &outcome.skipped {
        println!("{notice}");
    }
    let accuracy = accuracy_csv(&outcome, &[1, 3, 5, 10]);
    write(&common.output_dir, "corpus-ranks.csv", &ranks_csv(&outcome))?;
    write(&common.output_dir, "corpus-accuracy.csv", &accuracy)?;
    print!("{accuracy}");
    println!("causal ranking raw ties: {}", outcome.raw_ties());
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    let result = Config::load(cli.config.as_deref()).and_then(|cfg| match cli.command {
        Command::Analyze(r) => cmd_analyze(r, &cfg),
        Command::Export(e) => cmd_export(e, &cfg),
        Command::Localize(l) => cmd_localize(l, &cfg),
        Command::Corpus(c) => cmd_corpus(c, &cfg),
    });
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(1)
        }
        Err(Failure::Analysis(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(2)
        }
    }
}
