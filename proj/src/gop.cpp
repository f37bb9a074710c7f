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

#include "accentkit/gop.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace accentkit {

namespace {

// S x P ownership indicator; posteriors * indicator marginalizes senones
// into phone posteriors for all phones at once.
Matrix ownership_indicator(const PhonemeInventory& inventory) {
  const int senones = inventory.senone_count();
  const int phones = static_cast<int>(inventory.phones.size());
  Matrix indicator = Matrix::Zero(senones, phones);
  for (const auto& [senone, phone] : inventory.senone_to_phone) {
    const int p = inventory.phone_index(phone);
    if (p < 0 || senone < 0 || senone >= senones)
      throw std::invalid_argument("inventory fails validate_inventory");
    indicator(senone, p) = 1.0;
  }
  return indicator;
}

void check_span(const PosteriorMatrix& matrix, const AlignmentSegment& segment) {
  if (segment.t_s < 0 || segment.t_s > segment.t_e ||
      segment.t_e >= matrix.num_frames())
    throw std::out_of_range("segment span [" + std::to_string(segment.t_s) +
                            "," + std::to_string(segment.t_e) +
                            "] outside matrix of " +
                            std::to_string(matrix.num_frames()) + " frames");
}

// LPP of every phone over the segment span, as a P-vector. One pass feeds
// both the canonical phone and the max_q denominator.
Vector all_phone_lpps(const PosteriorMatrix& matrix,
                      const AlignmentSegment& segment,
                      const Matrix& indicator, const QuantizerConfig& config) {
  const auto span =
      matrix.frames.middleRows(segment.t_s, segment.num_frames());
  Matrix phone_posteriors = span * indicator;  // frames x phones
  // std::log per entry, not Eigen's packet log: the packet path rounds the
  // SIMD lanes differently from its scalar tail, which would break exact
  // LPP ties between phones with identical marginals.
  phone_posteriors = phone_posteriors.array()
                         .max(config.prob_floor)
                         .min(config.prob_ceiling)
                         .unaryExpr([](double v) { return std::log(v); })
                         .matrix();
  return phone_posteriors.colwise().mean().transpose();
}

}  // namespace

void QuantizerConfig::validate() const {
  if (!(prob_floor > 0.0) || !(prob_floor < prob_ceiling) ||
      !(prob_ceiling < 1.0))
    throw std::invalid_argument("need 0 < prob_floor < prob_ceiling < 1");
  if (!(clip_low_pct >= 0.0) || !(clip_low_pct < clip_high_pct) ||
      !(clip_high_pct <= 100.0))
    throw std::invalid_argument("need 0 <= clip_low_pct < clip_high_pct <= 100");
}

double frame_phone_posterior(const Eigen::Ref<const Eigen::RowVectorXd>& row,
                             const PhonemeInventory& inventory,
                             std::string_view phone,
                             const QuantizerConfig& config) {
  config.validate();
  if (!inventory.has_phone(phone))
    throw std::invalid_argument("unknown phone '" + std::string(phone) + "'");

  double sum = 0.0;
  for (const auto& [senone, owner] : inventory.senone_to_phone) {
    if (owner == phone) {
      if (senone >= row.size())
        throw std::out_of_range("senone index beyond posterior row");
      sum += row(senone);
    }
  }
  return std::clamp(sum, config.prob_floor, config.prob_ceiling);
}

double lpp(const PosteriorMatrix& matrix, const AlignmentSegment& segment,
           const PhonemeInventory& inventory, std::string_view phone,
           const QuantizerConfig& config) {
  config.validate();
  check_span(matrix, segment);
  const int p = inventory.phone_index(phone);
  if (p < 0)
    throw std::invalid_argument("unknown phone '" + std::string(phone) + "'");
  return all_phone_lpps(matrix, segment, ownership_indicator(inventory),
                        config)(p);
}

double gop(const PosteriorMatrix& matrix, const AlignmentSegment& segment,
           const PhonemeInventory& inventory, const QuantizerConfig& config) {
  config.validate();
  check_span(matrix, segment);
  const int p = inventory.phone_index(segment.phone);
  if (p < 0)
    throw std::invalid_argument("unknown phone '" + segment.phone + "'");

  const Vector lpps =
      all_phone_lpps(matrix, segment, ownership_indicator(inventory), config);
  // All LPPs are strictly negative, so the best phone is the max and the
  // ratio is >= 1. When p itself is the argmax the ratio is exactly 1.
  return std::log(lpps(p) / lpps.maxCoeff());
}

double percentile(std::span<const double> values, double pct) {
  if (values.empty()) throw std::invalid_argument("percentile of empty sample");
  std::vector<double> sorted(values.begin(), values.end());
  std::sort(sorted.begin(), sorted.end());
  if (pct <= 0.0) return sorted.front();
  if (pct >= 100.0) return sorted.back();
  const double rank = pct / 100.0 * static_cast<double>(sorted.size() - 1);
  const std::size_t below = static_cast<std::size_t>(std::floor(rank));
  const double frac = rank - std::floor(rank);
  if (below + 1 >= sorted.size()) return sorted.back();
  return sorted[below] + (sorted[below + 1] - sorted[below]) * frac;
}

ScoreResult score_corpus(const PosteriorSet& posteriors,
                         const AlignmentSet& alignments,
                         const PhonemeInventory& inventory,
                         const QuantizerConfig& config,
                         const std::optional<NormalizationBounds>& frozen_bounds) {
  config.validate();
  {
    auto violations = validate_corpus(posteriors, alignments, inventory);
    if (!violations.empty())
      throw std::invalid_argument("corpus validation failed: " + violations.front());
  }

  const Matrix indicator = ownership_indicator(inventory);

  // Scoring pass, in (utterance order of the posterior set, segment index)
  // order so output is independent of alignment file interleaving.
  ScoreResult result;
  for (const auto& matrix : posteriors.utterances) {
    const UtteranceAlignment* utt = alignments.find(matrix.utt_id);
    if (utt == nullptr) continue;
    for (const auto& segment : utt->segments) {
      const Vector lpps = all_phone_lpps(matrix, segment, indicator, config);
      const int p = inventory.phone_index(segment.phone);
      IntensityRecord record;
      record.utt_id = segment.utt_id;
      record.index = segment.index;
      record.phone = segment.phone;
      record.t_s = segment.t_s;
      record.t_e = segment.t_e;
      record.lpp = lpps(p);
      record.gop = std::log(lpps(p) / lpps.maxCoeff());
      result.records.push_back(std::move(record));
    }
  }

  if (result.records.empty()) return result;

  if (frozen_bounds.has_value()) {
    result.bounds = *frozen_bounds;
  } else {
    std::vector<double> gops;
    gops.reserve(result.records.size());
    for (const auto& record : result.records) gops.push_back(record.gop);
    result.bounds.lo = percentile(gops, config.clip_low_pct);
    result.bounds.hi = percentile(gops, config.clip_high_pct);
  }

  const double lo = result.bounds.lo;
  const double hi = result.bounds.hi;
  for (auto& record : result.records) {
    if (hi <= lo) {
      // No spread, no measurable accent; the weakest label is the
      // conservative choice.
      record.intensity = 0.0;
    } else {
      const double clipped = std::clamp(record.gop, lo, hi);
      record.intensity = (clipped - lo) / (hi - lo);
    }
  }
  return result;
}

IntensityCategory categorize(double intensity) {
  if (!(intensity >= 0.0 && intensity <= 1.0))
    throw std::out_of_range("intensity outside [0,1]");
  if (intensity < 0.35) return IntensityCategory::kSlight;
  if (intensity < 0.65) return IntensityCategory::kAverage;
  return IntensityCategory::kStrong;
}

}  // namespace accentkit
