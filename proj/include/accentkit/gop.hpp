// Copyright 2026 The accentkit authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
//
// Goodness-of-pronunciation scoring over frame posteriors.
//
// The frame posterior of a phone is the sum over the senones it owns,
//     P(p | o_t) = sum_{s in p} P(s | o_t),
// clamped into [prob_floor, prob_ceiling] before any log. The span score
// (LPP) averages the frame log posteriors over the aligned, inclusive span:
//     LPP(p) = 1/(t_e - t_s + 1) * sum_{t=t_s}^{t_e} log P(p | o_t)
// and the GoP of the canonical phone is the log ratio against the
// best-scoring phone of the whole set:
//     GOP(p) = log( LPP(p) / max_q LPP(q) ).
// Clamping keeps every LPP strictly negative, so the ratio is >= 1 and the
// GoP >= 0, with 0 exactly when the canonical phone is the argmax.
// Intensity is the batch min-max normalization of GoP onto [0, 1]
// (optionally percentile-clipped), 1 = strongest accent.

#ifndef ACCENTKIT_GOP_HPP_
#define ACCENTKIT_GOP_HPP_

#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "accentkit/types.hpp"

namespace accentkit {

struct QuantizerConfig {
  double prob_floor = 1e-8;
  double prob_ceiling = 1.0 - 1e-8;
  double clip_low_pct = 0.0;    // percentile for the intensity-0 anchor
  double clip_high_pct = 100.0; // percentile for the intensity-1 anchor

  // Throws std::invalid_argument when the floor/ceiling or percentile
  // ordering constraints are broken.
  void validate() const;
};

double frame_phone_posterior(const Eigen::Ref<const Eigen::RowVectorXd>& row,
                             const PhonemeInventory& inventory,
                             std::string_view phone,
                             const QuantizerConfig& config = {});

// Span-averaged log posterior of `phone` (which may differ from the
// segment's canonical phone; the GoP denominator scans all of them).
double lpp(const PosteriorMatrix& matrix, const AlignmentSegment& segment,
           const PhonemeInventory& inventory, std::string_view phone,
           const QuantizerConfig& config = {});

double gop(const PosteriorMatrix& matrix, const AlignmentSegment& segment,
           const PhonemeInventory& inventory,
           const QuantizerConfig& config = {});

struct NormalizationBounds {
  double lo = 0.0;
  double hi = 0.0;
};

struct ScoreResult {
  std::vector<IntensityRecord> records;  // (utterance order, segment index)
  NormalizationBounds bounds;            // the batch lo/hi actually applied
};

// Scores every aligned segment of the corpus and normalizes the GoP values
// onto [0, 1]. Preconditions: validate_corpus(...) is empty. When
// `frozen_bounds` is set it replaces the batch percentile bounds (used to
// carry training-split statistics into inference); values are clamped into
// the bounds either way. A batch with no GoP spread gets intensity 0
// everywhere.
ScoreResult score_corpus(
    const PosteriorSet& posteriors, const AlignmentSet& alignments,
    const PhonemeInventory& inventory, const QuantizerConfig& config = {},
    const std::optional<NormalizationBounds>& frozen_bounds = std::nullopt);

// Three perceptual bins. The bin edges sit at the midpoints of the gaps
// the category definition leaves open, half-open on the low side:
// [0, 0.35) -> slight, [0.35, 0.65) -> average, [0.65, 1] -> strong.
// Throws std::out_of_range outside [0, 1].
IntensityCategory categorize(double intensity);

// Linear-interpolation percentile (rank = pct/100 * (n-1)) over an
// unsorted sample. pct 0 and 100 give the exact min and max.
double percentile(std::span<const double> values, double pct);

}  // namespace accentkit

#endif  // ACCENTKIT_GOP_HPP_
