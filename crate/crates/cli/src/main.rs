use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::de::DeserializeOwned;

use polarscope::coordination::{CoActivityParams, CoKind, Windowing};
use polarscope::network::{build_network, ExportAttributes, ExportFormat, InteractionKind};
use polarscope::pipeline::{self, RunConfig, Stage};
use polarscope::synth::{generate_files, ScenarioConfig};
use polarscope::timeutil::parse_duration;
use polarscope::Error;

#[derive(Parser)]
#[command(
    name = "polarscope",
    version,
    about = "Polarisation, coordination and inauthenticity analytics"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Common {
    /// JSON run config; relative paths inside it resolve against its directory.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Corpus JSONL, overriding the config.
    #[arg(long)]
    input: Option<PathBuf>,
    /// Workdir for artifacts, overriding the config.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Parse the corpus and write summary, phase counts, growth and meta tables.
    Ingest(Common),
    /// Interaction networks.
    #[command(subcommand)]
    Net(NetCommand),
    /// Cluster the retweet network and assign affiliations.
    Polarise {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        seeds: Option<PathBuf>,
        /// Use a ready affiliation map instead of clustering.
        #[arg(long)]
        affiliations: Option<PathBuf>,
        #[arg(long)]
        target_clusters: Option<usize>,
        /// Edge weights in the sweep (default); `--weighted false` binarises.
        #[arg(long, action = clap::ArgAction::Set)]
        weighted: Option<bool>,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Centralities, k-cores and homophily over cached networks.
    Metrics {
        #[command(flatten)]
        common: Common,
        /// Network kinds; all when omitted.
        #[arg(long = "net", value_delimiter = ',')]
        nets: Vec<String>,
        #[arg(long)]
        centralities: bool,
        #[arg(long)]
        kcore: bool,
        #[arg(long)]
        ei: bool,
        #[arg(long)]
        assortativity: bool,
        /// pooled | group-mean
        #[arg(long)]
        ei_combine: Option<String>,
        /// labeled-only | broader
        #[arg(long)]
        ei_scope: Option<String>,
    },
    /// Hashtag networks, partisan hashtags, URL and location tables.
    Content {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        comention: bool,
        #[arg(long)]
        partisan: bool,
        #[arg(long)]
        urls: bool,
        #[arg(long)]
        locations: bool,
        #[arg(long)]
        url_categories: Option<PathBuf>,
        #[arg(long)]
        location_coding: Option<PathBuf>,
    },
    /// Co-activity networks and their reports.
    Coord {
        #[command(flatten)]
        common: Common,
        /// co_retweet | co_hashtag | co_url | co_domain | co_mention; config analyses when omitted.
        #[arg(long)]
        kind: Option<String>,
        #[arg(long, default_value = "60s")]
        gamma: String,
        #[arg(long, value_delimiter = ',')]
        exclude: Vec<String>,
        /// sliding | fixed
        #[arg(long)]
        windowing: Option<String>,
        #[arg(long, default_value_t = 1)]
        min_weight: u64,
        /// Restrict to one phase (1-based).
        #[arg(long)]
        phase: Option<usize>,
        #[arg(long)]
        bigraph: bool,
    },
    /// Text patterns, reply bursts and bot-score bucketing.
    Inauth {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        patterns: bool,
        #[arg(long)]
        bursts: bool,
        /// Offline score CSV `account_id,cap,english_score`.
        #[arg(long)]
        botscores: Option<PathBuf>,
    },
    /// Generate a synthetic corpus with planted ground truth.
    Synth {
        /// Scenario JSON; defaults apply when omitted.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        truth: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Run the pipeline end to end.
    Run {
        #[command(flatten)]
        common: Common,
        /// Comma-separated subset, e.g. `metrics,coordination`.
        #[arg(long)]
        stages: Option<String>,
    },
    /// Collect figure data from a workdir into plots/.
    Plots {
        #[arg(long)]
        workdir: PathBuf,
    },
}

#[derive(Subcommand)]
enum NetCommand {
    /// Build one network from the corpus, or all of them when --kind is omitted.
    Build {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        kind: Option<String>,
        /// 1-based phase; the whole corpus when omitted.
        #[arg(long)]
        phase: Option<usize>,
        /// graphml | csv
        #[arg(long, default_value = "graphml")]
        format: String,
    },
}

fn enum_arg<T: DeserializeOwned>(what: &str, s: &str) -> polarscope::Result<T> {
    serde_json::from_value(serde_json::Value::String(s.to_owned()))
        .map_err(|_| Error::Config(format!("unknown {what} `{s}`")))
}

fn phase_arg(phase: Option<usize>) -> polarscope::Result<Option<usize>> {
    match phase {
        Some(0) => Err(Error::Config("phases are numbered from 1".into())),
        p => Ok(p.map(|p| p - 1)),
    }
}

struct Loaded {
    cfg: RunConfig,
    bytes: Vec<u8>,
    workdir: PathBuf,
}

fn load(common: &Common) -> polarscope::Result<Loaded> {
    let (mut cfg, bytes) = match &common.config {
        Some(p) => RunConfig::load(p)?,
        None => (RunConfig::default(), b"{}".to_vec()),
    };
    if let Some(i) = &common.input {
        cfg.input = i.clone();
    }
    let workdir = common
        .out
        .clone()
        .or_else(|| cfg.workdir.clone())
        .unwrap_or_else(|| PathBuf::from("workdir"));
    Ok(Loaded {
        cfg,
        bytes,
        workdir,
    })
}

fn run_stages(mut l: Loaded, stages: Vec<Stage>) -> polarscope::Result<()> {
    l.cfg.stages = Some(stages);
    let m = pipeline::run_pipeline(&l.cfg, &l.bytes, &l.workdir)?;
    for r in &m.stages {
        log::info!("{}: {:?} ({} ms)", r.stage, r.status, r.millis);
    }
    println!(
        "{} artifacts in {} (digest {})",
        m.outputs.len(),
        l.workdir.display(),
        m.digest()
    );
    Ok(())
}

fn execute(cmd: Command) -> polarscope::Result<()> {
    match cmd {
        Command::Ingest(common) => run_stages(load(&common)?, vec![Stage::Ingest]),
        Command::Net(NetCommand::Build {
            common,
            kind,
            phase,
            format,
        }) => {
            let l = load(&common)?;
            let Some(kind) = kind else {
                return run_stages(l, vec![Stage::Networks]);
            };
            let kind: InteractionKind = kind.parse()?;
            let format: ExportFormat = format.parse()?;
            l.cfg.validate()?;
            let (phased, _) = pipeline::load_corpus(&l.cfg)?;
            let phase = phase_arg(phase)?;
            if let Some(p) = phase {
                if p >= phased.phase_count() {
                    return Err(Error::Config(format!(
                        "corpus has {} phase(s)",
                        phased.phase_count()
                    )));
                }
            }
            let net = build_network(&phased, kind, phase);
            let mut path = l.workdir.join(pipeline::network_file(kind, phase));
            if format == ExportFormat::EdgelistCsv {
                path.set_extension("csv");
            }
            net.export_to(
                &path,
                format,
                &ExportAttributes {
                    degree: true,
                    kcore: None,
                },
            )?;
            println!(
                "{} nodes, {} edges -> {}",
                net.node_count(),
                net.edge_count(),
                path.display()
            );
            Ok(())
        }
        Command::Polarise {
            common,
            seeds,
            affiliations,
            target_clusters,
            weighted,
            seed,
        } => {
            let mut l = load(&common)?;
            if seeds.is_some() {
                l.cfg.seeds = seeds;
            }
            if affiliations.is_some() {
                l.cfg.affiliations = affiliations;
            }
            if let Some(k) = target_clusters {
                l.cfg.clustering.target_clusters = k;
            }
            if let Some(w) = weighted {
                l.cfg.clustering.weighted = w;
            }
            if let Some(s) = seed {
                l.cfg.seed = s;
            }
            run_stages(l, vec![Stage::Polarisation])
        }
        Command::Metrics {
            common,
            nets,
            centralities,
            kcore,
            ei,
            assortativity,
            ei_combine,
            ei_scope,
        } => {
            let mut l = load(&common)?;
            let m = &mut l.cfg.metrics;
            if !nets.is_empty() {
                m.networks = nets
                    .iter()
                    .map(|n| n.parse())
                    .collect::<polarscope::Result<_>>()?;
            }
            if centralities || kcore || ei || assortativity {
                m.centralities = centralities;
                m.kcore = kcore;
                m.homophily = ei || assortativity;
            }
            if let Some(c) = ei_combine {
                m.ei.combine = enum_arg("E-I combination", &c)?;
            }
            if let Some(s) = ei_scope {
                m.ei.scope = enum_arg("E-I scope", &s)?;
            }
            run_stages(l, vec![Stage::Metrics])
        }
        Command::Content {
            common,
            comention,
            partisan,
            urls,
            locations,
            url_categories,
            location_coding,
        } => {
            let mut l = load(&common)?;
            if url_categories.is_some() {
                l.cfg.url_categories = url_categories;
            }
            if location_coding.is_some() {
                l.cfg.location_coding = location_coding;
            }
            let c = &mut l.cfg.content;
            if comention || partisan || urls || locations {
                c.comention = comention;
                c.partisan = partisan;
                c.urls = urls;
                c.locations_table = locations;
            }
            run_stages(l, vec![Stage::Content])
        }
        Command::Coord {
            common,
            kind,
            gamma,
            exclude,
            windowing,
            min_weight,
            phase,
            bigraph,
        } => {
            let mut l = load(&common)?;
            if let Some(kind) = kind {
                let kind: CoKind = kind.parse()?;
                let mut params = CoActivityParams::new(kind, parse_duration(&gamma)?);
                params.exclusions = exclude
                    .into_iter()
                    .map(|e| e.trim_start_matches('#').to_lowercase())
                    .collect();
                if let Some(w) = windowing {
                    params.windowing = w.parse::<Windowing>()?;
                }
                params.min_edge_weight = min_weight;
                params.phase = phase_arg(phase)?;
                l.cfg.coordination.analyses =
                    vec![pipeline::CoordinationAnalysis { params, bigraph }];
            }
            run_stages(l, vec![Stage::Coordination])
        }
        Command::Inauth {
            common,
            patterns,
            bursts,
            botscores,
        } => {
            let mut l = load(&common)?;
            if botscores.is_some() {
                l.cfg.bot_scores = botscores;
            }
            let i = &mut l.cfg.inauthenticity;
            if patterns || bursts {
                i.patterns = patterns;
                i.detect_bursts = bursts;
            }
            run_stages(l, vec![Stage::Inauthenticity])
        }
        Command::Synth {
            config,
            out,
            truth,
            seed,
        } => {
            let mut sc: ScenarioConfig = match config {
                Some(p) => {
                    let bytes = fs::read(&p).map_err(|e| Error::io(&p, e))?;
                    serde_json::from_slice(&bytes)
                        .map_err(|e| Error::Config(format!("{}: {e}", p.display())))?
                }
                None => ScenarioConfig::default(),
            };
            if let Some(s) = seed {
                sc.seed = s;
            }
            let t = generate_files(&sc, &out, &truth)?;
            println!(
                "{} tweets -> {}; truth -> {}",
                t.tweets,
                out.display(),
                truth.display()
            );
            Ok(())
        }
        Command::Run { common, stages } => {
            let mut l = load(&common)?;
            if let Some(s) = stages {
                l.cfg.stages = Some(pipeline::parse_stages(&s)?);
            }
            let stages = l.cfg.stages.clone().unwrap_or_else(|| Stage::ALL.to_vec());
            run_stages(l, stages)
        }
        Command::Plots { workdir } => {
            let files = pipeline::emit_plot_data(&workdir)?;
            for f in &files {
                println!("{}", f.display());
            }
            Ok(())
        }
    }
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Config(_) | Error::Scenario(_) | Error::SeedConflict(_) => 2,
        _ => 3,
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    if let Err(e) = pipeline::configure_threads() {
        eprintln!("error: {e}");
        return ExitCode::from(2);
    }
    match execute(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
