//! Conservation-aware genomic tokenization.
//!
//! The pipeline stratifies a genome into conserved, neutral and accelerated
//! bins from a per-base conservation track, trains one BPE vocabulary per
//! category, merges them with a conservation-first tier order and segments
//! sequences by dynamic programming over length-scored tokens. The
//! [`analysis`] module holds the token-quality metrics used to compare
//! tokenizers.
//!
//! Numeric code is generic over [`scalar::Scalar`] (`f32` or `f64`); the
//! aliases below fix it to `f64`.

pub mod analysis;
pub mod bpe;
pub mod encoder;
pub mod genome_io;
pub mod merge;
pub mod pipeline;
pub mod report;
pub mod scalar;
pub mod stratify;

pub use scalar::Scalar;

pub type Real = f64;

pub type ConservationTrack = genome_io::ConservationTrack<Real>;
pub type PwmMotif = genome_io::PwmMotif<Real>;
pub type BinnedTrack = stratify::BinnedTrack<Real>;
pub type Stratification = stratify::Stratification<Real>;
pub type StratificationParams = stratify::StratificationParams<Real>;
pub type LengthSignature = analysis::LengthSignature<Real>;
pub type MotifMetrics = analysis::MotifMetrics<Real>;
pub type PhylopTokenStats = analysis::PhylopTokenStats<Real>;
pub type EnrichmentTable = analysis::EnrichmentTable<Real>;

pub type ConservationTrack32 = genome_io::ConservationTrack<f32>;
pub type BinnedTrack32 = stratify::BinnedTrack<f32>;
pub type Stratification32 = stratify::Stratification<f32>;
