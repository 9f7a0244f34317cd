//! Token-quality metrics: motif preservation, region length signatures
//! with Jensen-Shannon comparisons, per-token conservation statistics and
//! smoothed enrichment over region x conservation bins.

mod enrichment;
mod motif;
mod phylop;
mod regions;
mod signature;

use thiserror::Error;

use crate::genome_io::RegionKind;
use crate::stratify::Category;

pub use enrichment::{
    enrichment, separation, BinSequences, EnrichmentBin, EnrichmentTable, DEFAULT_ALPHA,
};
pub use motif::{
    motif_metrics, motif_outcome, motif_outcomes, pwm_to_consensus, summarize, ConsensusParams,
    MotifMetrics, MotifOutcome, MotifRecord,
};
pub use phylop::{phylop_token_stats, CategoryTokenStats, PhylopTokenStats};
pub use regions::{region_sequences, RegionSequences};
pub use signature::{
    js_distance, js_divergence, length_bin, length_signature, LengthSignature, LENGTH_BIN_LABELS,
};

#[derive(Debug, Error, PartialEq)]
pub enum AnalysisError {
    #[error("motif list is empty")]
    NoMotifs,
    #[error("tokenization produced no tokens")]
    NoTokens,
    #[error("distribution dimensions differ: {0} vs {1}")]
    DimensionMismatch(usize, usize),
    #[error("background bin (intron x neutral) has no sequences")]
    EmptyBackground,
    #[error("no tokens in the {region} x {category} bin")]
    MissingBin {
        region: RegionKind,
        category: Category,
    },
}
