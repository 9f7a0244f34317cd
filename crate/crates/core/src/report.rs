//! Evaluation drivers shared by the `eval` subcommands and the pipeline,
//! with TSV writers whose columns follow the usual tokenizer comparison
//! tables.

use std::io::{self, Write};

use serde::Serialize;

use crate::analysis::{
    js_distance, js_divergence, length_signature, motif_outcomes, pwm_to_consensus, separation,
    summarize, AnalysisError, ConsensusParams, EnrichmentBin, EnrichmentTable, LengthSignature,
    MotifMetrics, MotifOutcome, PhylopTokenStats, RegionSequences,
};
use crate::encoder::ScoredVocabulary;
use crate::genome_io::{PwmMotif, RegionKind};
use crate::stratify::Category;

#[derive(Debug, Clone, Serialize)]
pub struct MotifReport {
    pub library_size: usize,
    /// Motifs dropped by the consensus rule (empty or too long).
    pub rejected: usize,
    pub metrics: MotifMetrics<f64>,
    pub outcomes: Vec<MotifOutcome<f64>>,
}

pub fn motif_report(
    vocab: &ScoredVocabulary,
    pwms: &[PwmMotif<f64>],
    params: &ConsensusParams<f64>,
) -> Result<MotifReport, AnalysisError> {
    let records: Vec<_> = pwms
        .iter()
        .filter_map(|m| pwm_to_consensus(m, params))
        .collect();
    if records.is_empty() {
        return Err(AnalysisError::NoMotifs);
    }
    let outcomes = motif_outcomes(vocab, &records);
    Ok(MotifReport {
        library_size: pwms.len(),
        rejected: pwms.len() - records.len(),
        metrics: summarize(&outcomes),
        outcomes,
    })
}

pub fn write_motif_tsv<W: Write>(mut w: W, label: &str, r: &MotifReport) -> io::Result<()> {
    writeln!(
        w,
        "tokenizer\tmotifs\tavg_tok_per_motif\tperfect_match_pct\texact_vocab_pct\tavg_token_frac\tconsistency"
    )?;
    let m = &r.metrics;
    writeln!(
        w,
        "{label}\t{}\t{:.4}\t{:.2}\t{:.2}\t{:.4}\t{:.4}",
        m.motifs,
        m.avg_tokens_per_motif,
        m.perfect_match_rate,
        m.exact_vocab_rate,
        m.avg_token_fraction,
        m.consistency
    )
}

#[derive(Debug, Clone, Serialize)]
pub struct JsPair {
    pub a: RegionKind,
    pub b: RegionKind,
    pub divergence: f64,
    pub distance: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct RegionReport {
    pub log_base: f64,
    pub signatures: Vec<(RegionKind, LengthSignature<f64>)>,
    pub pairs: Vec<JsPair>,
}

/// Length signature per region kind with sequences, and the pairwise
/// Jensen-Shannon divergence and distance between them.
pub fn region_report(
    vocab: &ScoredVocabulary,
    regions: &RegionSequences,
    log_base: f64,
) -> Result<RegionReport, AnalysisError> {
    let mut signatures = Vec::new();
    for kind in RegionKind::ALL {
        let seqs = &regions.by_region[kind as usize];
        if seqs.is_empty() {
            continue;
        }
        signatures.push((kind, length_signature(vocab, seqs)?));
    }
    let mut pairs = Vec::new();
    for i in 0..signatures.len() {
        for j in i + 1..signatures.len() {
            let (p, q) = (&signatures[i].1.probs, &signatures[j].1.probs);
            pairs.push(JsPair {
                a: signatures[i].0,
                b: signatures[j].0,
                divergence: js_divergence(p, q, log_base)?,
                distance: js_distance(p, q, log_base)?,
            });
        }
    }
    Ok(RegionReport {
        log_base,
        signatures,
        pairs,
    })
}

pub fn write_region_tsv<W: Write>(mut w: W, label: &str, r: &RegionReport) -> io::Result<()> {
    writeln!(w, "tokenizer\tregion\tpct_1_2\tpct_3_5\tpct_6_8\tpct_9_plus\ttokens")?;
    for (kind, sig) in &r.signatures {
        let p = sig.probs.map(|x| x * 100.0);
        writeln!(
            w,
            "{label}\t{kind}\t{:.2}\t{:.2}\t{:.2}\t{:.2}\t{}",
            p[0], p[1], p[2], p[3], sig.token_count
        )?;
    }
    Ok(())
}

pub fn write_jsd_tsv<W: Write>(mut w: W, label: &str, r: &RegionReport) -> io::Result<()> {
    writeln!(w, "tokenizer\tregion_a\tregion_b\tjs_divergence\tjs_distance")?;
    for p in &r.pairs {
        writeln!(
            w,
            "{label}\t{}\t{}\t{:.6}\t{:.6}",
            p.a, p.b, p.divergence, p.distance
        )?;
    }
    Ok(())
}

pub fn write_phylop_tsv<W: Write>(
    mut w: W,
    label: &str,
    stats: &PhylopTokenStats<f64>,
) -> io::Result<()> {
    writeln!(w, "tokenizer\tcategory\tmean_phylop\tpct_positive\tmean_var\ttokens")?;
    for cat in Category::ALL {
        match stats.get(cat) {
            Some(s) => writeln!(
                w,
                "{label}\t{cat}\t{:.3}\t{:.1}\t{:.3}\t{}",
                s.mean_phylop, s.pct_positive, s.mean_intra_variance, s.distinct_tokens
            )?,
            None => writeln!(w, "{label}\t{cat}\tNA\tNA\tNA\t0")?,
        }
    }
    Ok(())
}

#[derive(Debug, Clone, Serialize)]
pub struct EnrichmentRow {
    pub region: RegionKind,
    pub category: Category,
    pub tokens: u64,
    pub mean_log2_fc: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct EnrichmentReport {
    pub alpha: f64,
    pub vocab_size: usize,
    pub rows: Vec<EnrichmentRow>,
    /// Conserved vs accelerated gap per region, absent when a bin is empty.
    pub separation: Vec<(RegionKind, Option<f64>)>,
}

pub fn enrichment_report(table: &EnrichmentTable<f64>) -> EnrichmentReport {
    let rows = EnrichmentBin::all()
        .map(|b| EnrichmentRow {
            region: b.region,
            category: b.category,
            tokens: table.totals[b.index()],
            mean_log2_fc: table.mean_log2_fold_change(b),
        })
        .collect();
    let separation = RegionKind::ALL
        .into_iter()
        .map(|r| (r, separation(table, r).ok()))
        .collect();
    EnrichmentReport {
        alpha: table.alpha,
        vocab_size: table.vocab_size,
        rows,
        separation,
    }
}

fn opt(v: Option<f64>) -> String {
    v.map_or_else(|| "NA".to_string(), |x| format!("{x:.4}"))
}

pub fn write_enrichment_tsv<W: Write>(
    mut w: W,
    label: &str,
    r: &EnrichmentReport,
) -> io::Result<()> {
    writeln!(w, "tokenizer\tregion\tcategory\ttokens\tmean_log2fc")?;
    for row in &r.rows {
        writeln!(
            w,
            "{label}\t{}\t{}\t{}\t{}",
            row.region,
            row.category,
            row.tokens,
            opt(row.mean_log2_fc)
        )?;
    }
    Ok(())
}

pub fn write_separation_tsv<W: Write>(
    mut w: W,
    label: &str,
    r: &EnrichmentReport,
) -> io::Result<()> {
    writeln!(w, "tokenizer\tregion\tdelta_sep")?;
    for (region, d) in &r.separation {
        writeln!(w, "{label}\t{region}\t{}", opt(*d))?;
    }
    Ok(())
}
