#pragma once

#include "mfvi/io/dtm.hpp"
#include "mfvi/io/labor.hpp"
#include "mfvi/rng.hpp"

namespace mfvi {

/// The synthetic datasets shipped under data/, reproducible from their seeds.

inline constexpr double kSyntheticLaborAlpha = 0.6;
inline constexpr double kSyntheticLaborBeta = -0.02;

inline LaborDataset bundled_labor() {
  RngStream rng(20240753);
  return generate_synthetic_labor(753, kSyntheticLaborAlpha, kSyntheticLaborBeta, rng);
}

/// K = 2 topics, 200 documents, 60 terms, 80 words per document. Documents
/// lean towards one topic (alpha 0.5) and topics are sparse (beta 0.1).
inline SyntheticCorpus bundled_corpus() {
  RngStream rng(20240200);
  return generate_synthetic_corpus(2, 200, 60, 80, 0.5, 0.1, rng);
}

}  // namespace mfvi
