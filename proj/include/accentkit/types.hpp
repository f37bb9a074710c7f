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

#ifndef ACCENTKIT_TYPES_HPP_
#define ACCENTKIT_TYPES_HPP_

#include <Eigen/Dense>

#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace accentkit {

// Dense row-major doubles everywhere. Posterior matrices are indexed
// (frame, senone); all renderer activations are (item, feature).
using Matrix =
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;

// Absolute tolerance on posterior row sums. Admits float32 text dumps with
// per-entry rounding, rejects unnormalized logits.
inline constexpr double kRowSumTolerance = 1e-3;

// The phone set and the senone -> phone ownership map. A senone is one
// tied acoustic-model output state; a phone owns one or more senones and
// its frame posterior is the sum over the senones it owns.
struct PhonemeInventory {
  std::vector<std::string> phones;              // ordered, unique labels
  std::map<int, std::string> senone_to_phone;   // senone index -> label

  // Number of senones, assuming indexes are the contiguous range 0..S-1
  // (validate_inventory reports any gap).
  int senone_count() const {
    return senone_to_phone.empty() ? 0 : senone_to_phone.rbegin()->first + 1;
  }

  // Index into `phones`, or -1 when the label is unknown.
  int phone_index(std::string_view label) const;

  bool has_phone(std::string_view label) const { return phone_index(label) >= 0; }
};

// T x S frame posteriors P(s | o_t) for one utterance. Rows sum to one
// within kRowSumTolerance.
struct PosteriorMatrix {
  std::string utt_id;
  Matrix frames;  // T x S

  Eigen::Index num_frames() const { return frames.rows(); }
  Eigen::Index num_senones() const { return frames.cols(); }
};

struct PosteriorSet {
  std::vector<PosteriorMatrix> utterances;  // file order

  const PosteriorMatrix* find(std::string_view utt_id) const;
};

// One canonical phone with its inclusive frame span [t_s, t_e], produced
// by forced alignment. Spans of one utterance never overlap but may leave
// gaps (silence frames are legal and simply not scored).
struct AlignmentSegment {
  std::string utt_id;
  int index = 0;  // ordinal within the utterance
  std::string phone;
  int t_s = 0;  // first frame, inclusive
  int t_e = 0;  // last frame, inclusive

  int num_frames() const { return t_e - t_s + 1; }
};

struct UtteranceAlignment {
  std::string utt_id;
  std::vector<AlignmentSegment> segments;  // sorted by t_s, indexed 0..n-1
};

struct AlignmentSet {
  std::vector<UtteranceAlignment> utterances;  // first-appearance order

  const UtteranceAlignment* find(std::string_view utt_id) const;
  std::size_t total_segments() const;
};

// Scored segment: span-averaged log posterior of the canonical phone (lpp,
// nats, <= 0), its log posterior ratio against the best phone (gop, nats,
// >= 0), and the batch-normalized intensity in [0, 1].
struct IntensityRecord {
  std::string utt_id;
  int index = 0;
  std::string phone;
  int t_s = 0;
  int t_e = 0;
  double lpp = 0.0;
  double gop = 0.0;
  double intensity = 0.0;
};

enum class IntensityCategory { kSlight, kAverage, kStrong };

std::string_view to_string(IntensityCategory category);

// Structural checks. Violations are returned (never thrown) as short
// diagnostic strings of the form "code(details)"; an empty list means the
// input satisfies every invariant. Both functions are pure.
std::vector<std::string> validate_inventory(const PhonemeInventory& inventory);
std::vector<std::string> validate_corpus(const PosteriorSet& posteriors,
                                         const AlignmentSet& alignments,
                                         const PhonemeInventory& inventory);

}  // namespace accentkit

#endif  // ACCENTKIT_TYPES_HPP_
