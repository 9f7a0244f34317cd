use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use log::info;

use evolen::analysis::{enrichment, phylop_token_stats, region_sequences, ConsensusParams};
use evolen::bpe::{BpeTrainer, BpeVocabulary, DEFAULT_MIN_FREQUENCY};
use evolen::encoder::{load_tokenizer, ScoredVocabulary};
use evolen::genome_io::{
    parse_bed_regions, parse_bedgraph, parse_fasta, parse_meme, write_fasta, ConservationTrack,
    SequenceRecord,
};
use evolen::merge::{merge_no_priority, merge_vocabularies};
use evolen::pipeline::{
    pool_file_name, run_pipeline, sha256_hex, stratify_genome, Manifest, PipelineConfig,
    TOKENIZER_FILE,
};
use evolen::report::{
    enrichment_report, motif_report, region_report, write_enrichment_tsv, write_jsd_tsv,
    write_motif_tsv, write_phylop_tsv, write_region_tsv, write_separation_tsv,
};
use evolen::stratify::{Category, SequencePool, StratificationParams, DEFAULT_BIN_SIZE, DEFAULT_Z};

#[derive(Parser)]
#[command(name = "evolen", version, about = "Conservation-aware genomic tokenizer")]
struct Cli {
    /// Worker threads (defaults to all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Bin the conservation track and write one FASTA pool per category.
    Stratify {
        #[arg(long)]
        fasta: PathBuf,
        #[arg(long)]
        phylop: PathBuf,
        #[arg(long, default_value_t = DEFAULT_BIN_SIZE)]
        bin_size: usize,
        #[arg(long, default_value_t = DEFAULT_Z)]
        z: f64,
        #[arg(long)]
        out_dir: PathBuf,
    },
    /// Train a BPE vocabulary on one pool.
    Train {
        #[arg(long)]
        pool: PathBuf,
        #[arg(long)]
        vocab_size: usize,
        #[arg(long)]
        label: String,
        #[arg(long, default_value_t = DEFAULT_MIN_FREQUENCY)]
        min_frequency: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Merge three category vocabularies into a scored tokenizer.
    Merge {
        #[arg(long)]
        con: PathBuf,
        #[arg(long)]
        neu: PathBuf,
        #[arg(long)]
        acc: PathBuf,
        #[arg(long)]
        target: usize,
        /// Order by summed frequency instead of conservation tiers.
        #[arg(long)]
        no_priority: bool,
        /// Token score exponent, 1 or 2.
        #[arg(long, default_value_t = 2)]
        length_exponent: u32,
        /// Tokenizer output; the merge report goes next to it.
        #[arg(long)]
        out: PathBuf,
    },
    /// Segment every FASTA record; writes `seq_id start end token`.
    Encode {
        #[arg(long)]
        tokenizer: PathBuf,
        #[arg(long)]
        fasta: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Token-quality metrics.
    Eval {
        #[command(subcommand)]
        which: EvalCommand,
    },
    /// Run stratify, train, merge, build and eval from one JSON config.
    Pipeline {
        #[arg(long)]
        config: PathBuf,
    },
}

#[derive(Args)]
struct EvalCommon {
    #[arg(long)]
    tokenizer: PathBuf,
    /// Check the tokenizer against the hash recorded in this manifest.
    #[arg(long)]
    manifest: Option<PathBuf>,
    #[arg(long)]
    out: PathBuf,
    /// Label written in the first TSV column.
    #[arg(long, default_value = "evolen")]
    label: String,
}

#[derive(Args)]
struct GenomeArgs {
    #[arg(long)]
    fasta: PathBuf,
    #[arg(long)]
    phylop: PathBuf,
    #[arg(long, default_value_t = DEFAULT_BIN_SIZE)]
    bin_size: usize,
    #[arg(long, default_value_t = DEFAULT_Z)]
    z: f64,
}

#[derive(Subcommand)]
enum EvalCommand {
    Motifs {
        #[command(flatten)]
        common: EvalCommon,
        #[arg(long)]
        meme: PathBuf,
        #[arg(long, default_value_t = 0.25)]
        wildcard_threshold: f64,
        #[arg(long, default_value_t = 256)]
        max_variants: usize,
    },
    Regions {
        #[command(flatten)]
        common: EvalCommon,
        #[command(flatten)]
        genome: GenomeArgs,
        #[arg(long)]
        regions: PathBuf,
        #[arg(long, default_value_t = 2.0)]
        log_base: f64,
    },
    Phylop {
        #[command(flatten)]
        common: EvalCommon,
        #[command(flatten)]
        genome: GenomeArgs,
    },
    Enrichment {
        #[command(flatten)]
        common: EvalCommon,
        #[command(flatten)]
        genome: GenomeArgs,
        #[arg(long)]
        regions: PathBuf,
        #[arg(long, default_value_t = evolen::analysis::DEFAULT_ALPHA)]
        alpha: f64,
        /// Separation table output.
        #[arg(long)]
        separation_out: Option<PathBuf>,
    },
}

fn open(path: &Path) -> Result<BufReader<File>> {
    Ok(BufReader::new(
        File::open(path).with_context(|| format!("opening {}", path.display()))?,
    ))
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    Ok(BufWriter::new(
        File::create(path).with_context(|| format!("creating {}", path.display()))?,
    ))
}

fn read_genome(path: &Path) -> Result<Vec<SequenceRecord>> {
    parse_fasta(open(path)?).with_context(|| format!("parsing {}", path.display()))
}

fn read_track(path: &Path) -> Result<ConservationTrack<f64>> {
    parse_bedgraph(open(path)?).with_context(|| format!("parsing {}", path.display()))
}

fn read_tokenizer(common: &EvalCommon) -> Result<ScoredVocabulary> {
    let bytes = fs::read(&common.tokenizer)
        .with_context(|| format!("reading {}", common.tokenizer.display()))?;
    if let Some(m) = &common.manifest {
        let manifest = Manifest::load(m).with_context(|| format!("reading {}", m.display()))?;
        let Some(entry) = manifest.artifact(TOKENIZER_FILE) else {
            bail!("{} lists no {TOKENIZER_FILE}", m.display());
        };
        let actual = sha256_hex(&bytes);
        if entry.sha256 != actual {
            bail!(
                "{} does not match its manifest (expected {}, found {actual})",
                common.tokenizer.display(),
                entry.sha256
            );
        }
    }
    load_tokenizer(&bytes).with_context(|| format!("loading {}", common.tokenizer.display()))
}

fn read_vocab(path: &Path) -> Result<BpeVocabulary> {
    BpeVocabulary::read_json(open(path)?).with_context(|| format!("reading {}", path.display()))
}

fn stratify_inputs(
    g: &GenomeArgs,
) -> Result<(Vec<SequenceRecord>, ConservationTrack<f64>, evolen::pipeline::Stratified)> {
    let genome = read_genome(&g.fasta)?;
    let track = read_track(&g.phylop)?;
    let params = StratificationParams {
        z: g.z,
        bin_size: g.bin_size,
    };
    let s = stratify_genome(&genome, &track, &params)?;
    Ok((genome, track, s))
}

fn main() -> Result<()> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .context("configuring thread pool")?;
    }
    match cli.command {
        Command::Stratify {
            fasta,
            phylop,
            bin_size,
            z,
            out_dir,
        } => {
            let genome = read_genome(&fasta)?;
            let track = read_track(&phylop)?;
            let s = stratify_genome(&genome, &track, &StratificationParams { z, bin_size })?;
            fs::create_dir_all(&out_dir)?;
            for cat in Category::ALL {
                let mut w = create(&out_dir.join(pool_file_name(cat)))?;
                write_fasta(&mut w, &s.pools[cat.index()].sequences)?;
                w.flush()?;
            }
            let stats = s.stats();
            let mut w = create(&out_dir.join("stratify_stats.json"))?;
            serde_json::to_writer_pretty(&mut w, &stats)?;
            writeln!(w)?;
            w.flush()?;
            info!(
                "mu {:.4} sigma {:.4}; bins conserved {} neutral {} accelerated {}",
                stats.mu,
                stats.sigma,
                stats.bin_counts.conserved,
                stats.bin_counts.neutral,
                stats.bin_counts.accelerated
            );
        }
        Command::Train {
            pool,
            vocab_size,
            label,
            min_frequency,
            out,
        } => {
            let records = read_genome(&pool)?;
            let trainer = BpeTrainer {
                vocab_size,
                min_frequency,
            };
            let pool = SequencePool {
                category: label.parse().unwrap_or(Category::Neutral),
                sequences: records,
            };
            let vocab = trainer.train(&pool, &label)?;
            info!("{label}: {} tokens", vocab.len());
            let mut w = create(&out)?;
            vocab.write_json(&mut w)?;
            w.flush()?;
        }
        Command::Merge {
            con,
            neu,
            acc,
            target,
            no_priority,
            length_exponent,
            out,
        } => {
            let (c, n, a) = (read_vocab(&con)?, read_vocab(&neu)?, read_vocab(&acc)?);
            let report = if no_priority {
                merge_no_priority(&c, &n, &a, target)?
            } else {
                merge_vocabularies(&c, &n, &a, target)?
            };
            let exponent = length_exponent
                .try_into()
                .map_err(|e: evolen::encoder::TokenizerError| anyhow::anyhow!(e))?;
            let vocab = evolen::encoder::build_scored_vocab(&report, exponent)?;
            let mut w = create(&out)?;
            w.write_all(&evolen::encoder::serialize_tokenizer(&vocab))?;
            w.flush()?;
            let report_path = out.with_file_name("merge_report.json");
            let mut w = create(&report_path)?;
            serde_json::to_writer_pretty(&mut w, &report)?;
            writeln!(w)?;
            w.flush()?;
            info!("tiers {:?}, {} tokens", report.tier_counts, report.len());
        }
        Command::Encode {
            tokenizer,
            fasta,
            out,
        } => {
            let bytes = fs::read(&tokenizer)
                .with_context(|| format!("reading {}", tokenizer.display()))?;
            let vocab = load_tokenizer(&bytes)?;
            let genome = read_genome(&fasta)?;
            let seqs: Vec<&str> = genome.iter().map(|r| r.bases.as_str()).collect();
            let pieces = evolen::encoder::encode_batch(&vocab, &seqs);
            let mut w = create(&out)?;
            writeln!(w, "seq_id\tstart\tend\ttoken")?;
            for (rec, ps) in genome.iter().zip(&pieces) {
                for p in ps {
                    let tok = match p.token {
                        Some(id) => vocab.token(id),
                        None => &rec.bases[p.start..p.end()],
                    };
                    writeln!(w, "{}\t{}\t{}\t{tok}", rec.id, p.start, p.end())?;
                }
            }
            w.flush()?;
        }
        Command::Eval { which } => eval(which)?,
        Command::Pipeline { config } => {
            let cfg = PipelineConfig::from_file(&config)?;
            let out = run_pipeline(&cfg)?;
            info!(
                "{} artifacts in {}",
                out.manifest.artifacts.len(),
                cfg.output_dir.display()
            );
        }
    }
    Ok(())
}

fn eval(which: EvalCommand) -> Result<()> {
    match which {
        EvalCommand::Motifs {
            common,
            meme,
            wildcard_threshold,
            max_variants,
        } => {
            let vocab = read_tokenizer(&common)?;
            let pwms = parse_meme(open(&meme)?).with_context(|| format!("parsing {}", meme.display()))?;
            let params = ConsensusParams {
                wildcard: wildcard_threshold,
                max_variants,
                ..Default::default()
            };
            let r = motif_report(&vocab, &pwms, &params)?;
            let mut w = create(&common.out)?;
            write_motif_tsv(&mut w, &common.label, &r)?;
            w.flush()?;
        }
        EvalCommand::Regions {
            common,
            genome,
            regions,
            log_base,
        } => {
            let vocab = read_tokenizer(&common)?;
            let (g, _, s) = stratify_inputs(&genome)?;
            let ann = parse_bed_regions(open(&regions)?)?;
            let seqs = region_sequences(&g, &ann, &s.binned, &s.strat);
            let r = region_report(&vocab, &seqs, log_base)?;
            let mut w = create(&common.out)?;
            write_region_tsv(&mut w, &common.label, &r)?;
            w.flush()?;
            let mut w = create(&common.out.with_extension("jsd.tsv"))?;
            write_jsd_tsv(&mut w, &common.label, &r)?;
            w.flush()?;
        }
        EvalCommand::Phylop { common, genome } => {
            let vocab = read_tokenizer(&common)?;
            let (g, track, s) = stratify_inputs(&genome)?;
            let stats = phylop_token_stats(&vocab, &g, &track, &s.binned, &s.strat);
            let mut w = create(&common.out)?;
            write_phylop_tsv(&mut w, &common.label, &stats)?;
            w.flush()?;
        }
        EvalCommand::Enrichment {
            common,
            genome,
            regions,
            alpha,
            separation_out,
        } => {
            let vocab = read_tokenizer(&common)?;
            let (g, _, s) = stratify_inputs(&genome)?;
            let ann = parse_bed_regions(open(&regions)?)?;
            let seqs = region_sequences(&g, &ann, &s.binned, &s.strat);
            let table = enrichment(&vocab, &seqs.bins, alpha)?;
            let r = enrichment_report(&table);
            let mut w = create(&common.out)?;
            write_enrichment_tsv(&mut w, &common.label, &r)?;
            w.flush()?;
            let sep = separation_out.unwrap_or_else(|| common.out.with_extension("separation.tsv"));
            let mut w = create(&sep)?;
            write_separation_tsv(&mut w, &common.label, &r)?;
            w.flush()?;
        }
    }
    Ok(())
}
