//! End-to-end runs driven by one JSON configuration, including the three
//! ablation variants. Every run leaves a `manifest.json` that lists each
//! artifact with its SHA-256 and the hash of the configuration that made it.

use std::fs;
use std::io::BufReader;
use std::path::{Path, PathBuf};

use log::info;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::analysis::{
    enrichment, phylop_token_stats, region_sequences, ConsensusParams, PhylopTokenStats,
};
use crate::bpe::{BpeTrainer, BpeVocabulary};
use crate::encoder::{
    build_scored_vocab, serialize_tokenizer, LengthExponent, ScoredVocabulary,
};
use crate::genome_io::{
    parse_bed_regions, parse_bedgraph, parse_fasta, parse_meme, write_fasta, ConservationTrack,
    PwmMotif, RegionAnnotation, SequenceRecord,
};
use crate::merge::{merge_no_priority, merge_vocabularies, MergeReport};
use crate::report::{
    enrichment_report, motif_report, region_report, write_enrichment_tsv, write_jsd_tsv,
    write_motif_tsv, write_phylop_tsv, write_region_tsv, write_separation_tsv, EnrichmentReport,
    MotifReport, RegionReport,
};
use crate::stratify::{
    bin_track, classify_bins, extract_pools, BinnedTrack, Category, SequencePool, Stratification,
    StratificationParams,
};

pub const MANIFEST_FILE: &str = "manifest.json";
pub const TOKENIZER_FILE: &str = "tokenizer.json";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Variant {
    Full,
    NoPartition,
    NoPriority,
    NoLength,
}

impl Variant {
    pub fn as_str(self) -> &'static str {
        match self {
            Variant::Full => "full",
            Variant::NoPartition => "no_partition",
            Variant::NoPriority => "no_priority",
            Variant::NoLength => "no_length",
        }
    }
}

fn default_bin_size() -> usize {
    crate::stratify::DEFAULT_BIN_SIZE
}
fn default_z() -> f64 {
    crate::stratify::DEFAULT_Z
}
fn default_vocab_size() -> usize {
    5120
}
fn default_exponent() -> u32 {
    2
}
fn default_variant() -> Variant {
    Variant::Full
}
fn default_alpha() -> f64 {
    crate::analysis::DEFAULT_ALPHA
}
fn default_min_frequency() -> u64 {
    crate::bpe::DEFAULT_MIN_FREQUENCY
}
fn default_log_base() -> f64 {
    2.0
}
fn default_wildcard() -> f64 {
    0.25
}
fn default_max_variants() -> usize {
    256
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PipelineConfig {
    pub fasta: PathBuf,
    #[serde(default)]
    pub phylop: Option<PathBuf>,
    #[serde(default)]
    pub regions: Option<PathBuf>,
    #[serde(default)]
    pub motifs: Option<PathBuf>,
    pub output_dir: PathBuf,
    #[serde(default = "default_bin_size")]
    pub bin_size: usize,
    #[serde(default = "default_z")]
    pub z: f64,
    #[serde(default = "default_vocab_size")]
    pub vocab_size: usize,
    #[serde(default = "default_exponent")]
    pub length_exponent: u32,
    #[serde(default = "default_variant")]
    pub variant: Variant,
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    #[serde(default = "default_min_frequency")]
    pub min_frequency: u64,
    #[serde(default = "default_log_base")]
    pub log_base: f64,
    #[serde(default = "default_wildcard")]
    pub wildcard_threshold: f64,
    #[serde(default = "default_max_variants")]
    pub max_variants: usize,
}

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("stage `{stage}` failed: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<dyn std::error::Error + Send + Sync>,
    },
}

impl PipelineError {
    fn stage<E: Into<Box<dyn std::error::Error + Send + Sync>>>(stage: &'static str, e: E) -> Self {
        PipelineError::Stage {
            stage,
            source: e.into(),
        }
    }

    pub fn stage_name(&self) -> Option<&'static str> {
        match self {
            PipelineError::Stage { stage, .. } => Some(stage),
            PipelineError::Config(_) => None,
        }
    }
}

impl PipelineConfig {
    pub fn new(fasta: impl Into<PathBuf>, output_dir: impl Into<PathBuf>) -> Self {
        Self {
            fasta: fasta.into(),
            phylop: None,
            regions: None,
            motifs: None,
            output_dir: output_dir.into(),
            bin_size: default_bin_size(),
            z: default_z(),
            vocab_size: default_vocab_size(),
            length_exponent: default_exponent(),
            variant: default_variant(),
            alpha: default_alpha(),
            min_frequency: default_min_frequency(),
            log_base: default_log_base(),
            wildcard_threshold: default_wildcard(),
            max_variants: default_max_variants(),
        }
    }

    /// Reads a JSON config; relative paths are taken from the config's
    /// directory.
    pub fn from_file(path: &Path) -> Result<Self, PipelineError> {
        let text = fs::read_to_string(path)
            .map_err(|e| PipelineError::Config(format!("{}: {e}", path.display())))?;
        let mut cfg: PipelineConfig =
            serde_json::from_str(&text).map_err(|e| PipelineError::Config(e.to_string()))?;
        let base = path.parent().unwrap_or(Path::new("."));
        let resolve = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        resolve(&mut cfg.fasta);
        resolve(&mut cfg.output_dir);
        for p in [&mut cfg.phylop, &mut cfg.regions, &mut cfg.motifs].into_iter().flatten() {
            resolve(p);
        }
        Ok(cfg)
    }

    pub fn exponent(&self) -> LengthExponent {
        match self.variant {
            Variant::NoLength => LengthExponent::Linear,
            _ => LengthExponent::try_from(self.length_exponent).unwrap_or(LengthExponent::Quadratic),
        }
    }

    pub fn validate(&self) -> Result<(), PipelineError> {
        let bad = |m: String| Err(PipelineError::Config(m));
        if self.vocab_size < 4 {
            return bad(format!("vocab_size {} is below 4", self.vocab_size));
        }
        if LengthExponent::try_from(self.length_exponent).is_err() {
            return bad(format!("length_exponent must be 1 or 2, got {}", self.length_exponent));
        }
        if self.variant != Variant::NoPartition && self.phylop.is_none() {
            return bad(format!("variant {} needs a phylop track", self.variant.as_str()));
        }
        if self.alpha.is_nan() || self.alpha <= 0.0 {
            return bad(format!("alpha must be positive, got {}", self.alpha));
        }
        if self.log_base.is_nan() || self.log_base <= 1.0 {
            return bad(format!("log_base must exceed 1, got {}", self.log_base));
        }
        StratificationParams {
            z: self.z,
            bin_size: self.bin_size,
        }
        .validate()
        .map_err(|e| PipelineError::Config(e.to_string()))
    }

    /// SHA-256 of the canonical JSON form of this config. The output
    /// directory is left out so identical runs hash alike wherever they land.
    pub fn hash(&self) -> String {
        let mut canonical = self.clone();
        canonical.output_dir = PathBuf::new();
        sha256_hex(&serde_json::to_vec(&canonical).expect("config serializes"))
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Artifact {
    pub name: String,
    pub stage: String,
    pub sha256: String,
    pub bytes: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RunStatus {
    Complete,
    Stale,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Manifest {
    pub config_hash: String,
    pub variant: Variant,
    pub status: RunStatus,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub failed_stage: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub error: Option<String>,
    pub artifacts: Vec<Artifact>,
}

impl Manifest {
    pub fn load(path: &Path) -> std::io::Result<Self> {
        let text = fs::read(path)?;
        serde_json::from_slice(&text).map_err(std::io::Error::other)
    }

    pub fn artifact(&self, name: &str) -> Option<&Artifact> {
        self.artifacts.iter().find(|a| a.name == name)
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct StratifyStats {
    pub mu: f64,
    pub sigma: f64,
    pub z: f64,
    pub bin_size: usize,
    pub bin_counts: CategoryCounts,
    pub pool_sizes: CategoryCounts,
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct CategoryCounts {
    pub conserved: usize,
    pub neutral: usize,
    pub accelerated: usize,
}

impl From<[usize; 3]> for CategoryCounts {
    fn from(c: [usize; 3]) -> Self {
        Self {
            conserved: c[0],
            neutral: c[1],
            accelerated: c[2],
        }
    }
}

pub struct Stratified {
    pub binned: BinnedTrack<f64>,
    pub strat: Stratification<f64>,
    pub pools: [SequencePool; 3],
}

impl Stratified {
    pub fn stats(&self) -> StratifyStats {
        StratifyStats {
            mu: self.strat.mu,
            sigma: self.strat.sigma,
            z: self.strat.z,
            bin_size: self.binned.bin_size,
            bin_counts: self.strat.counts().into(),
            pool_sizes: self.pools.each_ref().map(SequencePool::len).into(),
        }
    }
}

pub fn stratify_genome(
    genome: &[SequenceRecord],
    track: &ConservationTrack<f64>,
    params: &StratificationParams<f64>,
) -> Result<Stratified, crate::stratify::StratifyError> {
    params.validate()?;
    let binned = bin_track(genome, track, params.bin_size);
    let strat = classify_bins(&binned, params)?;
    let pools = extract_pools(genome, &binned, &strat);
    Ok(Stratified {
        binned,
        strat,
        pools,
    })
}

/// Complete `bin_size` windows of every record, skipping all-`N` windows.
/// This is the training corpus of the unpartitioned variant: the same bins
/// the three pools are drawn from, without the category split.
pub fn genome_bins(genome: &[SequenceRecord], bin_size: usize) -> Vec<&str> {
    genome
        .iter()
        .flat_map(|r| {
            (0..r.len() / bin_size).map(move |k| &r.bases[k * bin_size..(k + 1) * bin_size])
        })
        .filter(|s| !s.bytes().all(|b| b == b'N'))
        .collect()
}

pub fn pool_file_name(cat: Category) -> String {
    format!("{}.fa", cat.as_str())
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct EvalSummary {
    pub tokenizer_sha256: String,
    pub vocab_size: usize,
    pub length_exponent: u32,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub motifs: Option<MotifReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub regions: Option<RegionReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub phylop: Option<PhylopTokenStats<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub enrichment: Option<EnrichmentReport>,
}

/// Collects artifacts and writes them under the output directory.
struct Run {
    dir: PathBuf,
    artifacts: Vec<Artifact>,
}

impl Run {
    fn write(&mut self, stage: &'static str, name: &str, bytes: &[u8]) -> Result<(), PipelineError> {
        let path = self.dir.join(name);
        fs::write(&path, bytes).map_err(|e| PipelineError::stage(stage, e))?;
        self.artifacts.push(Artifact {
            name: name.to_string(),
            stage: stage.to_string(),
            sha256: sha256_hex(bytes),
            bytes: bytes.len() as u64,
        });
        Ok(())
    }

    fn write_with<F>(&mut self, stage: &'static str, name: &str, f: F) -> Result<(), PipelineError>
    where
        F: FnOnce(&mut Vec<u8>) -> std::io::Result<()>,
    {
        let mut buf = Vec::new();
        f(&mut buf).map_err(|e| PipelineError::stage(stage, e))?;
        self.write(stage, name, &buf)
    }

    fn write_json<T: Serialize>(
        &mut self,
        stage: &'static str,
        name: &str,
        value: &T,
    ) -> Result<(), PipelineError> {
        let mut buf = serde_json::to_vec_pretty(value).map_err(|e| PipelineError::stage(stage, e))?;
        buf.push(b'\n');
        self.write(stage, name, &buf)
    }
}

fn read_file<T, E, F>(stage: &'static str, path: &Path, parse: F) -> Result<T, PipelineError>
where
    F: FnOnce(BufReader<fs::File>) -> Result<T, E>,
    E: std::fmt::Display,
{
    let file = fs::File::open(path)
        .map_err(|e| PipelineError::stage(stage, format!("{}: {e}", path.display())))?;
    parse(BufReader::new(file))
        .map_err(|e| PipelineError::stage(stage, format!("{}: {e}", path.display())))
}

/// Everything a run produced, kept in memory for callers.
pub struct PipelineOutput {
    pub manifest: Manifest,
    pub tokenizer: ScoredVocabulary,
    pub merge: Option<MergeReport>,
    pub vocabularies: Vec<BpeVocabulary>,
    pub eval: EvalSummary,
}

/// Runs the configured variant. On failure the manifest is still written,
/// marked stale and naming the failed stage.
pub fn run_pipeline(config: &PipelineConfig) -> Result<PipelineOutput, PipelineError> {
    config.validate()?;
    fs::create_dir_all(&config.output_dir).map_err(|e| PipelineError::stage("setup", e))?;
    let mut run = Run {
        dir: config.output_dir.clone(),
        artifacts: Vec::new(),
    };
    let result = execute(config, &mut run);
    let (status, failed_stage, error) = match &result {
        Ok(_) => (RunStatus::Complete, None, None),
        Err(e) => (
            RunStatus::Stale,
            e.stage_name().map(str::to_string),
            Some(e.to_string()),
        ),
    };
    let manifest = Manifest {
        config_hash: config.hash(),
        variant: config.variant,
        status,
        failed_stage,
        error,
        artifacts: run.artifacts,
    };
    let mut bytes = serde_json::to_vec_pretty(&manifest).expect("manifest serializes");
    bytes.push(b'\n');
    fs::write(config.output_dir.join(MANIFEST_FILE), bytes)
        .map_err(|e| PipelineError::stage("manifest", e))?;

    let (tokenizer, merge, vocabularies, eval) = result?;
    Ok(PipelineOutput {
        manifest,
        tokenizer,
        merge,
        vocabularies,
        eval,
    })
}

type Executed = (
    ScoredVocabulary,
    Option<MergeReport>,
    Vec<BpeVocabulary>,
    EvalSummary,
);

fn execute(cfg: &PipelineConfig, run: &mut Run) -> Result<Executed, PipelineError> {
    let genome = read_file("load", &cfg.fasta, parse_fasta)?;
    let track: Option<ConservationTrack<f64>> = cfg
        .phylop
        .as_deref()
        .map(|p| read_file("load", p, parse_bedgraph))
        .transpose()?;
    let regions: Option<Vec<RegionAnnotation>> = cfg
        .regions
        .as_deref()
        .map(|p| read_file("load", p, parse_bed_regions))
        .transpose()?;
    let motifs: Option<Vec<PwmMotif<f64>>> = cfg
        .motifs
        .as_deref()
        .map(|p| read_file("load", p, parse_meme))
        .transpose()?;

    let params = StratificationParams {
        z: cfg.z,
        bin_size: cfg.bin_size,
    };
    let stratified = match &track {
        Some(t) => {
            info!("stratifying {} records", genome.len());
            let s = stratify_genome(&genome, t, &params)
                .map_err(|e| PipelineError::stage("stratify", e))?;
            run.write_json("stratify", "stratify_stats.json", &s.stats())?;
            Some(s)
        }
        None => None,
    };

    let trainer = BpeTrainer {
        vocab_size: cfg.vocab_size,
        min_frequency: cfg.min_frequency,
    };
    let (vocabularies, merge) = match cfg.variant {
        Variant::NoPartition => {
            let corpus = genome_bins(&genome, cfg.bin_size);
            info!("training one vocabulary on {} bins", corpus.len());
            let v = trainer
                .train_sequences(corpus, "all")
                .map_err(|e| PipelineError::stage("train", e))?
                .vocab;
            run.write_with("train", "vocab_all.json", |buf| {
                v.write_json(buf).map_err(std::io::Error::other)
            })?;
            (vec![v], None)
        }
        _ => {
            let s = stratified.as_ref().expect("validated: partitioned variants have a track");
            let mut vocabs = Vec::with_capacity(3);
            for cat in Category::ALL {
                let pool = &s.pools[cat.index()];
                run.write_with("stratify", &pool_file_name(cat), |buf| {
                    write_fasta(buf, &pool.sequences)
                })?;
                info!("training {} vocabulary on {} bins", cat, pool.len());
                let v = trainer
                    .train(pool, cat.short())
                    .map_err(|e| PipelineError::stage("train", format!("{cat} pool: {e}")))?;
                run.write_with("train", &format!("vocab_{}.json", cat.short()), |buf| {
                    v.write_json(buf).map_err(std::io::Error::other)
                })?;
                vocabs.push(v);
            }
            let merged = if cfg.variant == Variant::NoPriority {
                merge_no_priority(&vocabs[0], &vocabs[1], &vocabs[2], cfg.vocab_size)
            } else {
                merge_vocabularies(&vocabs[0], &vocabs[1], &vocabs[2], cfg.vocab_size)
            }
            .map_err(|e| PipelineError::stage("merge", e))?;
            run.write_json("merge", "merge_report.json", &merged)?;
            (vocabs, Some(merged))
        }
    };

    let tokenizer = match &merge {
        Some(m) => build_scored_vocab(m, cfg.exponent()),
        None => ScoredVocabulary::new(vocabularies[0].tokens().iter().cloned(), cfg.exponent()),
    }
    .map_err(|e| PipelineError::stage("build", e))?;
    let tok_bytes = serialize_tokenizer(&tokenizer);
    run.write("build", TOKENIZER_FILE, &tok_bytes)?;

    let eval = evaluate(
        cfg,
        run,
        &tokenizer,
        &tok_bytes,
        &genome,
        track.as_ref(),
        stratified.as_ref(),
        regions.as_deref(),
        motifs.as_deref(),
    )?;
    Ok((tokenizer, merge, vocabularies, eval))
}

#[allow(clippy::too_many_arguments)]
fn evaluate(
    cfg: &PipelineConfig,
    run: &mut Run,
    tokenizer: &ScoredVocabulary,
    tok_bytes: &[u8],
    genome: &[SequenceRecord],
    track: Option<&ConservationTrack<f64>>,
    stratified: Option<&Stratified>,
    regions: Option<&[RegionAnnotation]>,
    motifs: Option<&[PwmMotif<f64>]>,
) -> Result<EvalSummary, PipelineError> {
    const STAGE: &str = "eval";
    let label = cfg.variant.as_str();
    let mut summary = EvalSummary {
        tokenizer_sha256: sha256_hex(tok_bytes),
        vocab_size: tokenizer.len(),
        length_exponent: tokenizer.exponent().into(),
        ..Default::default()
    };

    if let Some(pwms) = motifs {
        let params = ConsensusParams {
            wildcard: cfg.wildcard_threshold,
            max_variants: cfg.max_variants,
            ..Default::default()
        };
        let r = motif_report(tokenizer, pwms, &params).map_err(|e| PipelineError::stage(STAGE, e))?;
        run.write_with(STAGE, "motifs.tsv", |w| write_motif_tsv(w, label, &r))?;
        summary.motifs = Some(r);
    }

    if let (Some(track), Some(s)) = (track, stratified) {
        let stats = phylop_token_stats(tokenizer, genome, track, &s.binned, &s.strat);
        run.write_with(STAGE, "phylop.tsv", |w| write_phylop_tsv(w, label, &stats))?;
        summary.phylop = Some(stats);
    }

    if let Some(regions) = regions {
        let Some(s) = stratified else {
            return Err(PipelineError::stage(
                STAGE,
                "region analysis needs a phylop track for conservation bins",
            ));
        };
        let seqs = region_sequences(genome, regions, &s.binned, &s.strat);
        let r = region_report(tokenizer, &seqs, cfg.log_base)
            .map_err(|e| PipelineError::stage(STAGE, e))?;
        run.write_with(STAGE, "regions.tsv", |w| write_region_tsv(w, label, &r))?;
        run.write_with(STAGE, "region_jsd.tsv", |w| write_jsd_tsv(w, label, &r))?;
        summary.regions = Some(r);

        let table = enrichment(tokenizer, &seqs.bins, cfg.alpha)
            .map_err(|e| PipelineError::stage(STAGE, e))?;
        let e = enrichment_report(&table);
        run.write_with(STAGE, "enrichment.tsv", |w| write_enrichment_tsv(w, label, &e))?;
        run.write_with(STAGE, "separation.tsv", |w| write_separation_tsv(w, label, &e))?;
        summary.enrichment = Some(e);
    }

    run.write_json(STAGE, "eval_summary.json", &summary)?;
    Ok(summary)
}
