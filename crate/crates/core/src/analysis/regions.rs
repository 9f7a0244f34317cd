use std::collections::HashMap;

use crate::genome_io::{RegionAnnotation, SequenceRecord};
use crate::scalar::Scalar;
use crate::stratify::{BinnedTrack, Stratification};

use super::enrichment::{BinSequences, EnrichmentBin};

#[derive(Debug, Clone, Default, PartialEq)]
pub struct RegionSequences {
    /// Indexed by `RegionKind as usize`.
    pub by_region: [Vec<String>; 4],
    /// Region pieces that overlap at least one classified bin.
    pub bins: BinSequences,
}

/// Cuts every annotated region out of the genome records on its contig and
/// assigns each piece the category of the classified bin it overlaps most.
/// Overlap ties go to the lower-indexed bin. Pieces that overlap no complete
/// bin only count towards `by_region`.
pub fn region_sequences<S: Scalar>(
    genome: &[SequenceRecord],
    regions: &[RegionAnnotation],
    binned: &BinnedTrack<S>,
    strat: &Stratification<S>,
) -> RegionSequences {
    assert_eq!(binned.bins.len(), strat.categories.len());
    let bs = binned.bin_size as u64;

    let mut by_contig: HashMap<&str, Vec<usize>> = HashMap::new();
    for (i, rec) in genome.iter().enumerate() {
        by_contig.entry(rec.source_contig.as_str()).or_default().push(i);
    }
    let mut first_bin: Vec<Option<usize>> = vec![None; genome.len()];
    for (i, b) in binned.bins.iter().enumerate() {
        first_bin[b.record].get_or_insert(i);
    }

    let mut out = RegionSequences::default();
    for region in regions {
        let Some(records) = by_contig.get(region.contig.as_str()) else {
            continue;
        };
        for &ri in records {
            let rec = &genome[ri];
            let off = rec.source_offset;
            let lo = region.start.max(off);
            let hi = region.end.min(off + rec.len() as u64);
            if lo >= hi {
                continue;
            }
            let piece = rec.bases[(lo - off) as usize..(hi - off) as usize].to_string();

            let n_bins = rec.len() as u64 / bs;
            let mut best: Option<(u64, u64)> = None;
            if let Some(first) = first_bin[ri] {
                for k in (lo - off) / bs..=((hi - off - 1) / bs).min(n_bins.saturating_sub(1)) {
                    if k >= n_bins {
                        break;
                    }
                    let b_lo = off + k * bs;
                    let overlap = hi.min(b_lo + bs).saturating_sub(lo.max(b_lo));
                    if overlap > 0 && best.is_none_or(|(_, o)| overlap > o) {
                        best = Some((k, overlap));
                    }
                }
                if let Some((k, _)) = best {
                    let category = strat.categories[first + k as usize];
                    let bin = EnrichmentBin {
                        region: region.kind,
                        category,
                    };
                    out.bins[bin.index()].push(piece.clone());
                }
            }
            out.by_region[region.kind as usize].push(piece);
        }
    }
    out
}
