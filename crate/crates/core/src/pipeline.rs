//! End-to-end runs from one JSON config into a workdir of artifacts.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::fs;
use std::io::{BufReader, Read};
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Instant;

use chrono::TimeDelta;
use serde::{Deserialize, Serialize};

use crate::affiliation::{Affiliation, AffiliationMap};
use crate::content::{self, LocationCoding, LocationOptions, UrlCategoryMap};
use crate::coordination::{self, CoActivityParams, CoKind, ReportOptions};
use crate::corpus::{self, format_timestamp, Corpus, ParseReport, PhaseConfig, PhasedCorpus};
use crate::error::{Error, Result};
use crate::export::{sha256_hex, write_atomic, GraphmlDoc};
use crate::inauthenticity::{self, BurstParams, CapBucket, OfflineScores, ScoringSelection};
use crate::metrics::{
    self, CentralityOptions, EiCombine, EiOptions, EiScope, EiVariant, PhaseSlot,
};
use crate::network::{build_network, ExportAttributes, InteractionKind, InteractionNetwork};
use crate::polarisation::{self, ClusterParams};
use crate::report::{opt, Table};
use crate::timeutil::duration_serde;

pub const TOOL_VERSION: &str = concat!(env!("CARGO_PKG_NAME"), " ", env!("CARGO_PKG_VERSION"));
pub const THREADS_ENV: &str = "POLARSCOPE_THREADS";

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Stage {
    Ingest,
    Networks,
    Polarisation,
    Metrics,
    Content,
    Coordination,
    Inauthenticity,
}

impl Stage {
    pub const ALL: [Stage; 7] = [
        Stage::Ingest,
        Stage::Networks,
        Stage::Polarisation,
        Stage::Metrics,
        Stage::Content,
        Stage::Coordination,
        Stage::Inauthenticity,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Stage::Ingest => "ingest",
            Stage::Networks => "networks",
            Stage::Polarisation => "polarisation",
            Stage::Metrics => "metrics",
            Stage::Content => "content",
            Stage::Coordination => "coordination",
            Stage::Inauthenticity => "inauthenticity",
        }
    }
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Stage {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim().to_ascii_lowercase();
        let s = if s == "polarization" {
            "polarisation".to_owned()
        } else {
            s
        };
        Stage::ALL
            .into_iter()
            .find(|st| st.as_str() == s)
            .ok_or_else(|| Error::Config(format!("unknown stage `{s}`")))
    }
}

pub fn parse_stages(list: &str) -> Result<Vec<Stage>> {
    list.split(',')
        .filter(|s| !s.trim().is_empty())
        .map(str::parse)
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MetricsConfig {
    pub networks: Vec<InteractionKind>,
    pub centralities: bool,
    pub kcore: bool,
    /// E-I indices and assortativity.
    pub homophily: bool,
    pub centrality: CentralityOptions,
    pub ei: EiOptions,
}

impl Default for MetricsConfig {
    fn default() -> Self {
        MetricsConfig {
            networks: InteractionKind::ALL.to_vec(),
            centralities: true,
            kcore: true,
            homophily: true,
            centrality: CentralityOptions::default(),
            ei: EiOptions {
                weighted: false,
                variant: EiVariant::Classic,
                scope: EiScope::LabeledOnly,
                combine: EiCombine::GroupMean,
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ContentConfig {
    pub comention: bool,
    pub partisan: bool,
    pub urls: bool,
    pub locations_table: bool,
    pub comention_min_weight: u64,
    pub comention_exclude: BTreeSet<String>,
    pub partisan_k: usize,
    pub global_exclude_k: usize,
    pub top_hashtags_k: usize,
    pub usage_top_n: usize,
    pub locations: LocationOptions,
}

impl Default for ContentConfig {
    fn default() -> Self {
        ContentConfig {
            comention: true,
            partisan: true,
            urls: true,
            locations_table: true,
            comention_min_weight: 5,
            comention_exclude: BTreeSet::new(),
            partisan_k: 10,
            global_exclude_k: 10,
            top_hashtags_k: 10,
            usage_top_n: 20,
            locations: LocationOptions::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoordinationAnalysis {
    #[serde(flatten)]
    pub params: CoActivityParams,
    /// Also export the account/reason bigraph.
    #[serde(default)]
    pub bigraph: bool,
}

impl CoordinationAnalysis {
    pub fn name(&self) -> String {
        let mut n = format!("{}_{}s", self.params.kind, self.params.gamma.num_seconds());
        if let Some(p) = self.params.phase {
            n.push_str(&format!("_phase{}", p + 1));
        }
        n
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CoordinationConfig {
    pub analyses: Vec<CoordinationAnalysis>,
    pub report: ReportOptions,
}

impl Default for CoordinationConfig {
    fn default() -> Self {
        let a = |kind, secs, bigraph| CoordinationAnalysis {
            params: CoActivityParams::new(kind, TimeDelta::seconds(secs)),
            bigraph,
        };
        CoordinationConfig {
            analyses: vec![
                a(CoKind::CoRetweet, 60, false),
                a(CoKind::CoHashtag, 60, false),
                a(CoKind::CoUrl, 600, false),
                a(CoKind::CoUrl, 10, true),
                a(CoKind::CoDomain, 10, true),
                a(CoKind::CoMention, 60, true),
            ],
            report: ReportOptions::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct InauthenticityConfig {
    pub patterns: bool,
    pub detect_bursts: bool,
    pub bursts: BurstParams,
    pub selection: ScoringSelection,
    #[serde(with = "duration_serde")]
    pub profile_bucket: TimeDelta,
}

impl Default for InauthenticityConfig {
    fn default() -> Self {
        InauthenticityConfig {
            patterns: true,
            detect_bursts: true,
            bursts: BurstParams::default(),
            selection: ScoringSelection::default(),
            profile_bucket: TimeDelta::days(1),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RunConfig {
    pub input: PathBuf,
    pub workdir: Option<PathBuf>,
    pub phases: Option<PhaseConfig>,
    /// Seed labels (`account_id,label`) for the two largest clusters.
    pub seeds: Option<PathBuf>,
    /// A ready affiliation map; clustering is skipped when set.
    pub affiliations: Option<PathBuf>,
    pub url_categories: Option<PathBuf>,
    pub location_coding: Option<PathBuf>,
    pub bot_scores: Option<PathBuf>,
    pub meta_term: Option<String>,
    pub stages: Option<Vec<Stage>>,
    /// Single source of randomness; overrides the clustering seed.
    pub seed: u64,
    #[serde(with = "duration_serde")]
    pub growth_bucket: TimeDelta,
    #[serde(with = "duration_serde")]
    pub timeline_bucket: TimeDelta,
    pub clustering: ClusterParams,
    pub metrics: MetricsConfig,
    pub content: ContentConfig,
    pub coordination: CoordinationConfig,
    pub inauthenticity: InauthenticityConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            input: PathBuf::new(),
            workdir: None,
            phases: None,
            seeds: None,
            affiliations: None,
            url_categories: None,
            location_coding: None,
            bot_scores: None,
            meta_term: None,
            stages: None,
            seed: 42,
            growth_bucket: TimeDelta::hours(1),
            timeline_bucket: TimeDelta::hours(1),
            clustering: ClusterParams::default(),
            metrics: MetricsConfig::default(),
            content: ContentConfig::default(),
            coordination: CoordinationConfig::default(),
            inauthenticity: InauthenticityConfig::default(),
        }
    }
}

impl RunConfig {
    /// Reads a config; relative paths resolve against the config's directory.
    pub fn load(path: &Path) -> Result<(Self, Vec<u8>)> {
        let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
        let mut cfg: RunConfig = serde_json::from_slice(&bytes)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new(""));
        let fix = |p: &mut PathBuf| {
            if p.is_relative() && !p.as_os_str().is_empty() {
                *p = base.join(&*p);
            }
        };
        fix(&mut cfg.input);
        for p in [
            &mut cfg.workdir,
            &mut cfg.seeds,
            &mut cfg.affiliations,
            &mut cfg.url_categories,
            &mut cfg.location_coding,
            &mut cfg.bot_scores,
        ]
        .into_iter()
        .flatten()
        {
            fix(p);
        }
        Ok((cfg, bytes))
    }

    pub fn validate(&self) -> Result<()> {
        if self.input.as_os_str().is_empty() {
            return Err(Error::Config("config needs an `input` corpus".into()));
        }
        for p in std::iter::once(&self.input).chain(self.auxiliary_inputs()) {
            if !p.is_file() {
                return Err(Error::Config(format!(
                    "input `{}` does not exist",
                    p.display()
                )));
            }
        }
        if let Some(p) = &self.phases {
            p.validate()?;
        }
        if self.growth_bucket <= TimeDelta::zero() || self.timeline_bucket <= TimeDelta::zero() {
            return Err(Error::Config(
                "growth and timeline buckets must be positive".into(),
            ));
        }
        for a in &self.coordination.analyses {
            a.params.validate()?;
        }
        Ok(())
    }

    fn auxiliary_inputs(&self) -> impl Iterator<Item = &PathBuf> {
        [
            &self.seeds,
            &self.affiliations,
            &self.url_categories,
            &self.location_coding,
            &self.bot_scores,
        ]
        .into_iter()
        .flatten()
    }

    fn selected(&self) -> BTreeSet<Stage> {
        self.stages
            .clone()
            .unwrap_or_else(|| Stage::ALL.to_vec())
            .into_iter()
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StageStatus {
    Completed,
    Skipped,
    Failed,
    NotRun,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageRecord {
    pub stage: Stage,
    pub status: StageStatus,
    pub millis: u128,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool_version: String,
    pub config_sha256: String,
    pub inputs: BTreeMap<String, String>,
    pub seed: u64,
    pub stages: Vec<StageRecord>,
    /// Workdir-relative path → SHA-256 of every artifact except the manifest.
    pub outputs: BTreeMap<String, String>,
    pub complete: bool,
}

impl RunManifest {
    /// Digest over everything except timings.
    pub fn digest(&self) -> String {
        let mut s = format!(
            "{}\n{}\n{}\n",
            self.tool_version, self.config_sha256, self.seed
        );
        for (k, v) in self.inputs.iter().chain(&self.outputs) {
            s.push_str(&format!("{k} {v}\n"));
        }
        for r in &self.stages {
            s.push_str(&format!("{} {:?}\n", r.stage, r.status));
        }
        sha256_hex(s.as_bytes())
    }
}

pub const MANIFEST: &str = "manifest.json";

/// Builds the global rayon pool from `POLARSCOPE_THREADS` when set.
pub fn configure_threads() -> Result<Option<usize>> {
    let Ok(raw) = std::env::var(THREADS_ENV) else {
        return Ok(None);
    };
    let n: usize = raw.trim().parse().ok().filter(|n| *n > 0).ok_or_else(|| {
        Error::Config(format!(
            "{THREADS_ENV} must be a positive integer, got `{raw}`"
        ))
    })?;
    // a pool built earlier in the process wins
    let _ = rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global();
    Ok(Some(n))
}

fn hash_file(path: &Path) -> Result<String> {
    use sha2::{Digest, Sha256};
    let mut f = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut h = Sha256::new();
    let mut buf = vec![0u8; 1 << 20];
    loop {
        let n = f.read(&mut buf).map_err(|e| Error::io(path, e))?;
        if n == 0 {
            break;
        }
        h.update(&buf[..n]);
    }
    Ok(hex::encode(h.finalize()))
}

fn list_files(root: &Path, dir: &Path, out: &mut Vec<PathBuf>) -> Result<()> {
    let mut entries: Vec<_> = fs::read_dir(dir)
        .map_err(|e| Error::io(dir, e))?
        .collect::<std::io::Result<_>>()
        .map_err(|e| Error::io(dir, e))?;
    entries.sort_by_key(|e| e.file_name());
    for e in entries {
        let p = e.path();
        if p.is_dir() {
            list_files(root, &p, out)?;
        } else if !p.to_string_lossy().ends_with(".tmp") {
            out.push(p.strip_prefix(root).expect("under root").to_path_buf());
        }
    }
    Ok(())
}

fn rel_key(p: &Path) -> String {
    p.components()
        .map(|c| c.as_os_str().to_string_lossy().into_owned())
        .collect::<Vec<_>>()
        .join("/")
}

pub fn network_file(kind: InteractionKind, phase: Option<usize>) -> String {
    match phase {
        None => format!("networks/{kind}.graphml"),
        Some(p) => format!("networks/{kind}_phase{}.graphml", p + 1),
    }
}

pub const AFFILIATIONS_FILE: &str = "polarisation/affiliations.csv";

struct Run<'a> {
    cfg: &'a RunConfig,
    workdir: &'a Path,
    phased: PhasedCorpus,
    parse: ParseReport,
}

impl Run<'_> {
    fn write(&self, rel: &str, bytes: &[u8]) -> Result<()> {
        write_atomic(&self.workdir.join(rel), bytes)
    }

    fn table(&self, rel: &str, t: &Table) -> Result<()> {
        self.write(rel, &t.to_csv()?)
    }

    fn json<T: Serialize>(&self, rel: &str, v: &T) -> Result<()> {
        let mut bytes = serde_json::to_vec_pretty(v)?;
        bytes.push(b'\n');
        self.write(rel, &bytes)
    }

    fn read_cached(&self, rel: &str) -> Result<Vec<u8>> {
        let p = self.workdir.join(rel);
        if !p.is_file() {
            return Err(Error::MissingArtifact(p));
        }
        fs::read(&p).map_err(|e| Error::io(&p, e))
    }

    fn network(&self, kind: InteractionKind, phase: Option<usize>) -> Result<InteractionNetwork> {
        let bytes = self.read_cached(&network_file(kind, phase))?;
        let xml = String::from_utf8(bytes).map_err(|e| Error::Graphml(e.to_string()))?;
        InteractionNetwork::from_graphml(&GraphmlDoc::from_xml(&xml)?)
    }

    fn affiliations(&self) -> Result<AffiliationMap> {
        let bytes = self.read_cached(AFFILIATIONS_FILE)?;
        AffiliationMap::read_csv(bytes.as_slice(), AFFILIATIONS_FILE)
    }

    fn corpus(&self) -> &Corpus {
        self.phased.corpus()
    }

    fn phase_slots(&self) -> Vec<Option<usize>> {
        std::iter::once(None)
            .chain((0..self.phased.phase_count()).map(Some))
            .collect()
    }

    fn ingest(&self) -> Result<()> {
        #[derive(Serialize)]
        struct Summary<'a> {
            source: &'a str,
            summary: corpus::CorpusSummary,
            parsed: usize,
            malformed: usize,
            duplicates: usize,
        }
        self.json(
            "ingest/summary.json",
            &Summary {
                source: self.corpus().source(),
                summary: self.corpus().summary(),
                parsed: self.parse.parsed,
                malformed: self.parse.malformed.len(),
                duplicates: self.parse.duplicates.len(),
            },
        )?;
        let mut skipped = Table::new(&["line", "reason"]);
        for s in &self.parse.malformed {
            skipped.push([s.line.to_string(), s.reason.clone()]);
        }
        self.table("ingest/skipped.csv", &skipped)?;
        let mut phases = Table::new(&["phase", "name", "tweets", "accounts"]);
        for (p, c) in self.phased.phase_counts().iter().enumerate() {
            phases.push([
                PhaseSlot::Phase(p).to_string(),
                self.phased.phases().name(p),
                c.tweets.to_string(),
                c.accounts.to_string(),
            ]);
        }
        self.table("ingest/phase_counts.csv", &phases)?;
        let mut growth = Table::new(&["bucket_start", "cumulative_accounts"])
            .comment("cumulative_accounts: distinct authors seen by the end of the bucket");
        for g in corpus::growth_curve(self.corpus(), self.cfg.growth_bucket)? {
            growth.push([
                format_timestamp(g.bucket_start),
                g.cumulative_accounts.to_string(),
            ]);
        }
        self.table("ingest/growth.csv", &growth)?;
        if let Some(term) = &self.cfg.meta_term {
            let m = corpus::meta_discussion_report(self.corpus(), term)?;
            let mut t = Table::new(&["day", "meta_tweets", "total_tweets", "ratio"])
                .comment(format!("term: {}", m.term))
                .comment(format!(
                    "overall: {} of {} tweets, ratio {}",
                    m.meta_tweets,
                    m.total_tweets,
                    opt(m.ratio)
                ));
            for d in &m.days {
                t.push([
                    d.day.to_string(),
                    d.meta_tweets.to_string(),
                    d.total_tweets.to_string(),
                    opt(crate::report::ratio(
                        d.meta_tweets as u64,
                        d.total_tweets as u64,
                    )),
                ]);
            }
            self.table("ingest/meta.csv", &t)?;
        }
        Ok(())
    }

    fn networks(&self) -> Result<()> {
        let jobs: Vec<(InteractionKind, Option<usize>)> = InteractionKind::ALL
            .iter()
            .flat_map(|&k| self.phase_slots().into_iter().map(move |p| (k, p)))
            .collect();
        use rayon::prelude::*;
        jobs.par_iter().try_for_each(|&(kind, phase)| {
            let net = build_network(&self.phased, kind, phase);
            net.export_to(
                &self.workdir.join(network_file(kind, phase)),
                crate::network::ExportFormat::Graphml,
                &ExportAttributes {
                    degree: true,
                    kcore: None,
                },
            )
        })
    }

    fn polarisation(&self) -> Result<()> {
        let accounts = self.corpus().accounts();
        let outcome = if let Some(path) = &self.cfg.affiliations {
            let f = fs::File::open(path).map_err(|e| Error::io(path, e))?;
            let given = AffiliationMap::read_csv(f, path.display().to_string())?;
            let mut map = AffiliationMap::new(given.provenance.clone());
            for a in accounts {
                map.insert(a, given.get(a));
            }
            for (a, g) in given.iter() {
                map.insert(a, g);
            }
            polarisation::AffiliationOutcome {
                group_sizes: map.group_sizes(),
                map,
                warnings: Vec::new(),
            }
        } else {
            let Some(seed_path) = &self.cfg.seeds else {
                return Err(Error::Config(
                    "polarisation needs `seeds` or `affiliations` in the config".into(),
                ));
            };
            let f = fs::File::open(seed_path).map_err(|e| Error::io(seed_path, e))?;
            let seeds = polarisation::read_seed_labels(f)?;
            let net = self.network(InteractionKind::Retweet, None)?;
            let params = ClusterParams {
                seed: self.cfg.seed,
                ..self.cfg.clustering.clone()
            };
            let partition = if net.is_empty() {
                polarisation::Partition {
                    clusters: Vec::new(),
                    cut_conductance: Vec::new(),
                    warnings: vec!["empty retweet network; every account is Unaffiliated".into()],
                }
            } else {
                polarisation::cluster_retweet_network(&net, &params)?
            };
            self.json("polarisation/partition.json", &partition)?;
            let mut top = Table::new(&["cluster", "rank", "account_id", "retweeted"]);
            for (c, ranked) in polarisation::top_retweeted(&net, &partition, 10)
                .iter()
                .enumerate()
            {
                for (r, (id, n)) in ranked.iter().enumerate() {
                    top.push([
                        c.to_string(),
                        (r + 1).to_string(),
                        id.clone(),
                        n.to_string(),
                    ]);
                }
            }
            self.table("polarisation/top_retweeted.csv", &top)?;
            let mut o = polarisation::assign_affiliations(
                &partition,
                &seeds,
                accounts,
                seed_path.display().to_string(),
            )?;
            o.warnings.extend(partition.warnings.iter().cloned());
            o
        };
        for w in &outcome.warnings {
            log::warn!("{w}");
        }
        let mut buf = Vec::new();
        outcome.map.write_csv(&mut buf)?;
        self.write(AFFILIATIONS_FILE, &buf)?;
        self.json(
            "polarisation/summary.json",
            &serde_json::json!({
                "supporters": outcome.group_sizes[0],
                "opposers": outcome.group_sizes[1],
                "unaffiliated": outcome.group_sizes[2],
                "warnings": outcome.warnings,
            }),
        )?;
        let timeline = polarisation::community_timeline(
            self.corpus(),
            &outcome.map,
            self.cfg.timeline_bucket,
        )?;
        self.table("polarisation/timeline.csv", &timeline)
    }

    fn metrics(&self) -> Result<()> {
        let aff = self.affiliations()?;
        self.table(
            "metrics/activity.csv",
            &metrics::activity_table(&self.phased, &aff).to_table(),
        )?;
        let conc = metrics::retweet_concentration(&self.phased, &aff);
        self.table(
            "metrics/concentration.csv",
            &metrics::concentration_table(&conc),
        )?;

        let mut matrices = Table::new(&[
            "kind",
            "phase",
            "source_group",
            "target_group",
            "count",
            "proportion",
        ])
        .comment("count: interactions from source group to target group")
        .comment("proportion: count / source row total; empty when the row has no interactions");
        let mut homophily = Table::new(&[
            "network",
            "phase",
            "nodes",
            "edges",
            "ei_classic",
            "ei_modified",
            "assortativity",
        ])
        .comment("ei_classic: (external - internal) / total over Supporter/Opposer edges")
        .comment("ei_modified: per-group weighted E-I, then combined; empty when undefined");
        let mut means = Table::new(&[
            "network",
            "group",
            "members",
            "betweenness",
            "closeness",
            "degree",
            "eigenvector",
        ]);
        let mut hist = Table::new(&["network", "group", "core", "proportion", "members"])
            .comment("proportion: share of the group's members in the network at this core number");
        let mc = &self.cfg.metrics;
        for &kind in &mc.networks {
            for phase in self.phase_slots() {
                let gm = metrics::group_matrix(&self.phased, &aff, kind, phase);
                matrices.rows.extend(gm.to_table().rows);
                if !(mc.homophily || (phase.is_none() && (mc.kcore || mc.centralities))) {
                    continue;
                }
                let net = self.network(kind, phase)?.with_affiliations(&aff);
                if mc.homophily {
                    let classic = metrics::ei_index_network::<f64>(&net, &mc.ei).ok();
                    let modified = metrics::ei_index_network::<f64>(
                        &net,
                        &EiOptions {
                            variant: EiVariant::Modified,
                            weighted: true,
                            ..mc.ei
                        },
                    )
                    .ok();
                    let r = metrics::assortativity::<f64>(&net).ok();
                    let slot = phase.map_or(PhaseSlot::Overall, PhaseSlot::Phase);
                    homophily.push([
                        kind.to_string(),
                        slot.to_string(),
                        net.node_count().to_string(),
                        net.edge_count().to_string(),
                        opt(classic),
                        opt(modified),
                        opt(r),
                    ]);
                }
                if phase.is_some() {
                    continue;
                }
                if mc.kcore {
                    let kc = metrics::kcore(&net);
                    let mut cores = Table::new(&["account_id", "core"]);
                    for (id, k) in &kc.cores {
                        cores.push([id.clone(), k.to_string()]);
                    }
                    self.table(&format!("metrics/kcore_{kind}.csv"), &cores)?;
                    for h in &kc.histograms {
                        for (k, p) in &h.proportions {
                            hist.push([
                                kind.to_string(),
                                h.group.to_string(),
                                k.to_string(),
                                p.to_string(),
                                h.members.to_string(),
                            ]);
                        }
                    }
                }
                if mc.centralities {
                    let rep = metrics::centralities::<f64>(&net, &self.cfg.metrics.centrality)?;
                    let mut t = Table::new(&[
                        "account_id",
                        "betweenness",
                        "closeness",
                        "degree",
                        "eigenvector",
                    ]);
                    for (id, c) in &rep.nodes {
                        t.push([
                            id.clone(),
                            c.betweenness.to_string(),
                            c.closeness.to_string(),
                            c.degree.to_string(),
                            c.eigenvector.to_string(),
                        ]);
                    }
                    self.table(&format!("metrics/centrality_{kind}.csv"), &t)?;
                    for (g, m) in &rep.group_means {
                        means.push([
                            kind.to_string(),
                            g.to_string(),
                            m.members.to_string(),
                            m.mean.betweenness.to_string(),
                            m.mean.closeness.to_string(),
                            m.mean.degree.to_string(),
                            m.mean.eigenvector.to_string(),
                        ]);
                    }
                }
            }
        }
        self.table("metrics/group_matrices.csv", &matrices)?;
        if mc.homophily {
            self.table("metrics/homophily.csv", &homophily)?;
        }
        if mc.kcore {
            self.table("metrics/kcore_histograms.csv", &hist)?;
        }
        if mc.centralities {
            self.table("metrics/centrality_means.csv", &means)?;
        }
        Ok(())
    }

    fn content(&self) -> Result<()> {
        let aff = self.affiliations()?;
        let cc = &self.cfg.content;
        for (name, group) in [
            ("all", None),
            ("supporter", Some(Affiliation::Supporter)),
            ("opposer", Some(Affiliation::Opposer)),
        ]
        .into_iter()
        .filter(|_| cc.comention)
        {
            let g = content::hashtag_comention(
                self.corpus(),
                &aff,
                group,
                cc.comention_min_weight,
                &cc.comention_exclude,
            );
            self.write(
                &format!("content/comention_{name}.graphml"),
                g.to_graphml(Some(&aff)).to_xml().as_bytes(),
            )?;
        }
        match content::partisan_hashtags(self.corpus(), &aff, cc.partisan_k, cc.global_exclude_k) {
            _ if !cc.partisan => {}
            Ok(p) => {
                self.json("content/partisan.json", &p)?;
                let tweets = p.tweets.iter().map(|&i| &self.corpus().tweets()[i]);
                match content::account_cohashtag_network(tweets, &p.universe) {
                    Ok(net) => self.write(
                        "content/account_hashtag.graphml",
                        net.graph.to_graphml(Some(&aff)).to_xml().as_bytes(),
                    )?,
                    Err(e) => log::warn!("account/hashtag network skipped: {e}"),
                }
            }
            Err(e) => log::warn!("partisan hashtags skipped: {e}"),
        }
        if let Some(path) = self.cfg.url_categories.as_ref().filter(|_| cc.urls) {
            let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
            let map = UrlCategoryMap::from_csv(&bytes)?;
            let rows = content::categorize_urls(&self.phased, &aff, &map);
            self.table(
                "content/url_categories.csv",
                &content::url_category_table(&rows),
            )?;
        }
        if cc.urls {
            let usage = content::usage_distributions(
                self.corpus(),
                &aff,
                cc.usage_top_n,
                &cc.comention_exclude,
            );
            self.json("content/usage.json", &usage)?;
            let mut urls = Table::new(&["group", "rank", "url", "uses"])
                .comment("uses: tweets by the group carrying the canonical external URL");
            for u in &usage {
                for (r, (url, n)) in u.url_ranks.iter().enumerate() {
                    urls.push([
                        u.group.to_string(),
                        (r + 1).to_string(),
                        url.clone(),
                        n.to_string(),
                    ]);
                }
            }
            self.table("content/url_usage.csv", &urls)?;
        }
        let top = content::top_hashtag_table(&self.phased, &aff, cc.top_hashtags_k);
        self.table("content/top_hashtags.csv", &content::top_hashtag_csv(&top))?;
        if let Some(path) = self
            .cfg
            .location_coding
            .as_ref()
            .filter(|_| cc.locations_table)
        {
            let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
            let coding = LocationCoding::from_csv(&bytes)?;
            let groups = content::location_summary(self.corpus(), &aff, &coding, &cc.locations);
            self.table("content/locations.csv", &content::location_table(&groups))?;
        }
        Ok(())
    }

    fn coordination(&self) -> Result<()> {
        let aff = self.affiliations()?;
        for a in &self.cfg.coordination.analyses {
            let name = a.name();
            let g = coordination::co_activity(&self.phased, &aff, &a.params)?;
            self.write(
                &format!("coordination/{name}.graphml"),
                g.to_graphml().to_xml().as_bytes(),
            )?;
            let rep = coordination::coordination_report(&g, &self.cfg.coordination.report);
            self.table(&format!("coordination/{name}_report.csv"), &rep.to_table())?;
            if a.bigraph {
                let b = coordination::bigraph(&self.phased, &aff, &a.params)?;
                self.write(
                    &format!("coordination/{name}_bigraph.graphml"),
                    b.to_graphml().to_xml().as_bytes(),
                )?;
            }
        }
        Ok(())
    }

    fn inauthenticity(&self) -> Result<()> {
        let aff = self.affiliations()?;
        let ic = &self.cfg.inauthenticity;
        if ic.patterns {
            let patterns = inauthenticity::classify_patterns(&self.phased, &aff);
            self.table("inauthenticity/patterns.csv", &patterns.to_table())?;
        }
        if ic.detect_bursts {
            let bursts = inauthenticity::detect_reply_bursts(self.corpus(), &ic.bursts)?;
            self.table(
                "inauthenticity/bursts.csv",
                &inauthenticity::burst_table(&bursts),
            )?;
        }
        self.table(
            "inauthenticity/entity_use.csv",
            &inauthenticity::entity_use_table(self.corpus(), &aff),
        )?;
        if let Some(path) = &self.cfg.bot_scores {
            let f = fs::File::open(path).map_err(|e| Error::io(path, e))?;
            let client = OfflineScores::from_csv(BufReader::new(f), &path.display().to_string())?;
            let report = inauthenticity::score_accounts(&client, &self.phased, &aff, &ic.selection);
            self.table("inauthenticity/botness.csv", &report.to_table())?;
            self.table("inauthenticity/botscores.csv", &report.scores_table())?;
            let bots: Vec<&str> = report
                .scores
                .iter()
                .filter(|s| s.bucket == CapBucket::Bot)
                .map(|s| s.account_id.as_str())
                .collect();
            let profiles =
                inauthenticity::account_activity_profile(self.corpus(), &bots, ic.profile_bucket)?;
            let (series, summary) = inauthenticity::activity_profile_tables(&profiles);
            self.table("inauthenticity/bot_timeline.csv", &series)?;
            self.table("inauthenticity/bot_profiles.csv", &summary)?;
        }
        Ok(())
    }

    fn stage(&self, s: Stage) -> Result<()> {
        match s {
            Stage::Ingest => self.ingest(),
            Stage::Networks => self.networks(),
            Stage::Polarisation => self.polarisation(),
            Stage::Metrics => self.metrics(),
            Stage::Content => self.content(),
            Stage::Coordination => self.coordination(),
            Stage::Inauthenticity => self.inauthenticity(),
        }
    }
}

/// Loads the corpus and assigns phases per the config.
pub fn load_corpus(cfg: &RunConfig) -> Result<(PhasedCorpus, ParseReport)> {
    let f = fs::File::open(&cfg.input).map_err(|e| Error::io(&cfg.input, e))?;
    let (corpus, report) = corpus::parse_corpus(
        BufReader::with_capacity(1 << 20, f),
        cfg.input.display().to_string(),
    )?;
    let phases = cfg.phases.clone().unwrap_or_else(PhaseConfig::single);
    Ok((corpus::assign_phases(corpus, phases)?, report))
}

/// Runs the selected stages in order and writes the manifest last. A stage
/// failure stops the run; the manifest then records partial completion and
/// the stage error is returned.
pub fn run_pipeline(cfg: &RunConfig, config_bytes: &[u8], workdir: &Path) -> Result<RunManifest> {
    cfg.validate()?;
    fs::create_dir_all(workdir).map_err(|e| Error::io(workdir, e))?;
    let mut inputs = BTreeMap::new();
    for p in std::iter::once(&cfg.input).chain(cfg.auxiliary_inputs()) {
        let name = p
            .file_name()
            .map(|n| n.to_string_lossy().into_owned())
            .unwrap_or_default();
        inputs.insert(name, hash_file(p)?);
    }
    let (phased, parse) = load_corpus(cfg)?;
    let run = Run {
        cfg,
        workdir,
        phased,
        parse,
    };
    let selected = cfg.selected();
    let mut records = Vec::new();
    let mut failure = None;
    for s in Stage::ALL {
        if failure.is_some() {
            records.push(StageRecord {
                stage: s,
                status: StageStatus::NotRun,
                millis: 0,
                error: None,
            });
            continue;
        }
        if !selected.contains(&s) {
            records.push(StageRecord {
                stage: s,
                status: StageStatus::Skipped,
                millis: 0,
                error: None,
            });
            continue;
        }
        let t0 = Instant::now();
        let result = run.stage(s);
        let millis = t0.elapsed().as_millis();
        log::info!("stage {s} finished in {millis} ms");
        match result {
            Ok(()) => records.push(StageRecord {
                stage: s,
                status: StageStatus::Completed,
                millis,
                error: None,
            }),
            Err(e) => {
                records.push(StageRecord {
                    stage: s,
                    status: StageStatus::Failed,
                    millis,
                    error: Some(e.to_string()),
                });
                failure = Some((s, e));
            }
        }
    }
    let mut files = Vec::new();
    list_files(workdir, workdir, &mut files)?;
    let mut outputs = BTreeMap::new();
    for f in files {
        let key = rel_key(&f);
        if key != MANIFEST {
            outputs.insert(key, hash_file(&workdir.join(&f))?);
        }
    }
    let manifest = RunManifest {
        tool_version: TOOL_VERSION.into(),
        config_sha256: sha256_hex(config_bytes),
        inputs,
        seed: cfg.seed,
        stages: records,
        outputs,
        complete: failure.is_none(),
    };
    let mut bytes = serde_json::to_vec_pretty(&manifest)?;
    bytes.push(b'\n');
    write_atomic(&workdir.join(MANIFEST), &bytes)?;
    match failure {
        None => Ok(manifest),
        Some((stage, e)) => Err(match e {
            Error::Config(_) | Error::MissingArtifact(_) | Error::Stage { .. } => e,
            other => Error::Stage {
                stage: stage.to_string(),
                message: other.to_string(),
            },
        }),
    }
}

/// One figure family: output name, source artifact, and whether it must exist.
const PLOTS: [(&str, &str, bool); 13] = [
    ("growth.csv", "ingest/growth.csv", true),
    ("meta_discussion.csv", "ingest/meta.csv", false),
    ("community_timeline.csv", "polarisation/timeline.csv", true),
    ("activity.csv", "metrics/activity.csv", true),
    ("heatmaps.csv", "metrics/group_matrices.csv", true),
    ("kcore_histograms.csv", "metrics/kcore_histograms.csv", true),
    ("homophily.csv", "metrics/homophily.csv", true),
    ("url_use_distribution.csv", "content/url_usage.csv", true),
    ("url_categories.csv", "content/url_categories.csv", false),
    (
        "entity_use_distribution.csv",
        "inauthenticity/entity_use.csv",
        true,
    ),
    ("pattern_rates.csv", "inauthenticity/patterns.csv", true),
    ("botness.csv", "inauthenticity/botness.csv", false),
    ("bot_timeline.csv", "inauthenticity/bot_timeline.csv", false),
];

/// Collects figure data into `plots/`, one long-format CSV per family.
/// Returns the files written.
pub fn emit_plot_data(workdir: &Path) -> Result<Vec<PathBuf>> {
    let mut written = Vec::new();
    for (name, source, required) in PLOTS {
        let src = workdir.join(source);
        if !src.is_file() {
            if required {
                return Err(Error::MissingArtifact(src));
            }
            continue;
        }
        let bytes = fs::read(&src).map_err(|e| Error::io(&src, e))?;
        let mut t = Table::from_csv(&bytes)?;
        t.comments.insert(0, format!("source: {source}"));
        let dst = workdir.join("plots").join(name);
        write_atomic(&dst, &t.to_csv()?)?;
        written.push(dst);
    }
    Ok(written)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth::{generate_files, ScenarioConfig};

    fn scenario(dir: &Path) -> (RunConfig, Vec<u8>) {
        let sc = ScenarioConfig {
            n_supporters: 40,
            n_opposers: 40,
            n_unaffiliated: 150,
            background_tweets: 2500,
            ..Default::default()
        };
        let truth =
            generate_files(&sc, &dir.join("corpus.jsonl"), &dir.join("truth.json")).unwrap();
        let mut seeds = String::from("account_id,label\n");
        seeds.push_str("s0,Supporter\ns1,Supporter\no0,Opposer\no1,Opposer\n");
        fs::write(dir.join("seeds.csv"), seeds).unwrap();
        let mut scores = String::from("account_id,cap,english_score\n");
        for (i, a) in truth.affiliations.keys().enumerate() {
            scores.push_str(&format!("{a},{},\n", (i % 10) as f64 / 10.0));
        }
        fs::write(dir.join("scores.csv"), scores).unwrap();
        let raw = serde_json::json!({
            "input": "corpus.jsonl",
            "seeds": "seeds.csv",
            "bot_scores": "scores.csv",
            "meta_term": "arsonemergency",
            "phases": {"boundaries": ["2020-01-07T06:00:00Z", "2020-01-07T19:00:00Z"]},
            "coordination": {"analyses": [
                {"kind": "co_retweet", "gamma": "60s"},
                {"kind": "co_url", "gamma": "10s", "bigraph": true}
            ]}
        });
        let bytes = serde_json::to_vec(&raw).unwrap();
        fs::write(dir.join("run.json"), &bytes).unwrap();
        let (cfg, bytes) = RunConfig::load(&dir.join("run.json")).unwrap();
        (cfg, bytes)
    }

    #[test]
    fn full_run_is_deterministic_and_plottable() {
        let dir = tempfile::tempdir().unwrap();
        let (cfg, bytes) = scenario(dir.path());
        let a = run_pipeline(&cfg, &bytes, &dir.path().join("a")).unwrap();
        let b = run_pipeline(&cfg, &bytes, &dir.path().join("b")).unwrap();
        assert!(a.complete);
        assert_eq!(a.outputs, b.outputs);
        assert_eq!(a.digest(), b.digest());
        for stage in [
            "ingest/",
            "networks/",
            "polarisation/",
            "metrics/",
            "content/",
            "coordination/",
            "inauthenticity/",
        ] {
            assert!(a.outputs.keys().any(|k| k.starts_with(stage)), "{stage}");
        }
        let plots = emit_plot_data(&dir.path().join("a")).unwrap();
        assert!(plots.len() >= 10);
        let timeline =
            Table::from_csv(&fs::read(dir.path().join("a/plots/community_timeline.csv")).unwrap())
                .unwrap();
        assert_eq!(
            timeline.columns,
            ["timestamp_bucket", "group", "tweet_count"]
        );
        let heat =
            Table::from_csv(&fs::read(dir.path().join("a/plots/heatmaps.csv")).unwrap()).unwrap();
        assert!(heat.column("count").is_some() && heat.column("proportion").is_some());
        // every artifact CSV re-emits byte-identically
        for k in a.outputs.keys().filter(|k| k.ends_with(".csv")) {
            let bytes = fs::read(dir.path().join("a").join(k)).unwrap();
            assert_eq!(
                Table::from_csv(&bytes).unwrap().to_csv().unwrap(),
                bytes,
                "{k}"
            );
        }
    }

    #[test]
    fn cached_stages_refresh_only_selected_outputs() {
        let dir = tempfile::tempdir().unwrap();
        let (mut cfg, bytes) = scenario(dir.path());
        let work = dir.path().join("w");
        let first = run_pipeline(&cfg, &bytes, &work).unwrap();
        let ingest = work.join("ingest/summary.json");
        let before = fs::metadata(&ingest).unwrap().modified().unwrap();
        std::thread::sleep(std::time::Duration::from_millis(20));
        cfg.stages = Some(parse_stages("metrics,coordination").unwrap());
        let second = run_pipeline(&cfg, &bytes, &work).unwrap();
        assert_eq!(fs::metadata(&ingest).unwrap().modified().unwrap(), before);
        assert_eq!(first.outputs, second.outputs);
        let statuses: Vec<StageStatus> = second.stages.iter().map(|r| r.status).collect();
        assert_eq!(
            statuses
                .iter()
                .filter(|s| **s == StageStatus::Completed)
                .count(),
            2
        );
    }

    #[test]
    fn missing_upstream_is_named() {
        let dir = tempfile::tempdir().unwrap();
        let (mut cfg, bytes) = scenario(dir.path());
        cfg.stages = Some(vec![Stage::Metrics]);
        let err = run_pipeline(&cfg, &bytes, &dir.path().join("w")).unwrap_err();
        assert!(
            matches!(&err, Error::MissingArtifact(p) if p.ends_with(AFFILIATIONS_FILE)),
            "{err}"
        );
        let manifest: RunManifest =
            serde_json::from_slice(&fs::read(dir.path().join("w").join(MANIFEST)).unwrap())
                .unwrap();
        assert!(!manifest.complete);
        assert!(matches!(
            emit_plot_data(&dir.path().join("w")),
            Err(Error::MissingArtifact(_))
        ));
    }

    #[test]
    fn empty_corpus_gives_headers_only() {
        let dir = tempfile::tempdir().unwrap();
        fs::write(dir.path().join("empty.jsonl"), "").unwrap();
        fs::write(dir.path().join("aff.csv"), "account_id,affiliation\n").unwrap();
        let cfg = RunConfig {
            input: dir.path().join("empty.jsonl"),
            affiliations: Some(dir.path().join("aff.csv")),
            ..Default::default()
        };
        let work = dir.path().join("w");
        run_pipeline(&cfg, b"{}", &work).unwrap();
        emit_plot_data(&work).unwrap();
        let t =
            Table::from_csv(&fs::read(work.join("plots/community_timeline.csv")).unwrap()).unwrap();
        assert!(t.rows.is_empty());
        assert_eq!(t.columns.len(), 3);
    }

    #[test]
    fn stage_names() {
        assert_eq!(
            parse_stages("metrics, polarization").unwrap(),
            [Stage::Metrics, Stage::Polarisation]
        );
        assert!(parse_stages("plots").is_err());
        let c: RunConfig =
            serde_json::from_str(r#"{"input": "x", "growth_bucket": "2h"}"#).unwrap();
        assert_eq!(c.growth_bucket, TimeDelta::hours(2));
        assert_eq!(c.coordination.analyses.len(), 6);
    }
}
