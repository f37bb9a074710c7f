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

#include "accentkit/types.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <set>

namespace accentkit {

namespace {

std::string format_violation(std::string_view code, std::string_view details) {
  std::string out(code);
  out += '(';
  out += details;
  out += ')';
  return out;
}

bool label_is_clean(std::string_view label) {
  if (label.empty()) return false;
  return std::none_of(label.begin(), label.end(), [](unsigned char c) {
    return std::isspace(c) != 0;
  });
}

}  // namespace

int PhonemeInventory::phone_index(std::string_view label) const {
  for (std::size_t i = 0; i < phones.size(); ++i) {
    if (phones[i] == label) return static_cast<int>(i);
  }
  return -1;
}

const PosteriorMatrix* PosteriorSet::find(std::string_view utt_id) const {
  for (const auto& utt : utterances) {
    if (utt.utt_id == utt_id) return &utt;
  }
  return nullptr;
}

const UtteranceAlignment* AlignmentSet::find(std::string_view utt_id) const {
  for (const auto& utt : utterances) {
    if (utt.utt_id == utt_id) return &utt;
  }
  return nullptr;
}

std::size_t AlignmentSet::total_segments() const {
  std::size_t n = 0;
  for (const auto& utt : utterances) n += utt.segments.size();
  return n;
}

std::string_view to_string(IntensityCategory category) {
  switch (category) {
    case IntensityCategory::kSlight: return "slight";
    case IntensityCategory::kAverage: return "average";
    case IntensityCategory::kStrong: return "strong";
  }
  return "unknown";
}

std::vector<std::string> validate_inventory(const PhonemeInventory& inventory) {
  std::vector<std::string> violations;

  // Duplicate phone labels make phone_index ambiguous.
  std::set<std::string> seen;
  for (const auto& phone : inventory.phones) {
    if (!seen.insert(phone).second)
      violations.push_back(format_violation("duplicate-phone", phone));
    if (!label_is_clean(phone))
      violations.push_back(format_violation("invalid-phone-label", phone));
  }

  // Senone indexes must cover 0..S-1 exactly, S inferred from the largest
  // index present.
  std::set<std::string> owning;
  for (const auto& [senone, phone] : inventory.senone_to_phone) {
    if (senone < 0)
      violations.push_back(
          format_violation("negative-senone", std::to_string(senone)));
    if (!label_is_clean(phone))
      violations.push_back(format_violation("invalid-phone-label", phone));
    else if (!inventory.has_phone(phone))
      violations.push_back(format_violation("unknown-phone", phone));
    owning.insert(phone);
  }
  const int senone_count = inventory.senone_count();
  for (int s = 0; s < senone_count; ++s) {
    if (!inventory.senone_to_phone.count(s))
      violations.push_back(
          format_violation("missing-senone", std::to_string(s)));
  }

  // Every listed phone must own at least one senone.
  for (const auto& phone : inventory.phones) {
    if (!owning.count(phone))
      violations.push_back(format_violation("orphan-phone", phone));
  }

  return violations;
}

std::vector<std::string> validate_corpus(const PosteriorSet& posteriors,
                                         const AlignmentSet& alignments,
                                         const PhonemeInventory& inventory) {
  std::vector<std::string> violations;
  const int senones = inventory.senone_count();

  std::set<std::string> seen_utts;
  for (const auto& utt : posteriors.utterances) {
    if (!seen_utts.insert(utt.utt_id).second)
      violations.push_back(format_violation("duplicate-utterance", utt.utt_id));
    if (utt.num_frames() < 1)
      violations.push_back(format_violation("no-frames", utt.utt_id));
    if (utt.num_senones() < 2)
      violations.push_back(format_violation(
          "too-few-senones", utt.utt_id + " S=" + std::to_string(utt.num_senones())));
    if (utt.num_senones() != senones)
      violations.push_back(format_violation(
          "senone-count-mismatch", utt.utt_id + " S=" +
              std::to_string(utt.num_senones()) + " inventory=" +
              std::to_string(senones)));
    for (Eigen::Index t = 0; t < utt.num_frames(); ++t) {
      for (Eigen::Index s = 0; s < utt.num_senones(); ++s) {
        const double v = utt.frames(t, s);
        if (!(v >= 0.0 && v <= 1.0) || !std::isfinite(v)) {
          violations.push_back(format_violation(
              "probability-out-of-range",
              utt.utt_id + " row " + std::to_string(t) + " col " +
                  std::to_string(s)));
        }
      }
      const double sum = utt.frames.row(t).sum();
      if (std::abs(sum - 1.0) > kRowSumTolerance) {
        char buf[32];
        std::snprintf(buf, sizeof(buf), "%.6f", sum);
        violations.push_back(format_violation(
            "row-sum-violation",
            utt.utt_id + " row " + std::to_string(t) + " sum " + buf));
      }
    }
  }

  for (const auto& utt : alignments.utterances) {
    const PosteriorMatrix* matrix = posteriors.find(utt.utt_id);
    if (matrix == nullptr) {
      violations.push_back(format_violation("unknown-utterance", utt.utt_id));
      continue;
    }
    const int frames = static_cast<int>(matrix->num_frames());
    int prev_end = -1;
    for (std::size_t i = 0; i < utt.segments.size(); ++i) {
      const AlignmentSegment& seg = utt.segments[i];
      const std::string where = utt.utt_id + "#" + std::to_string(i);
      if (seg.index != static_cast<int>(i))
        violations.push_back(format_violation("bad-index", where));
      if (seg.t_s > seg.t_e) {
        violations.push_back(format_violation("inverted-span", where));
        continue;
      }
      if (seg.t_s < 0 || seg.t_e >= frames)
        violations.push_back(format_violation(
            "span-out-of-range", where + " [" + std::to_string(seg.t_s) + "," +
                std::to_string(seg.t_e) + "] T=" + std::to_string(frames)));
      if (seg.t_s <= prev_end)
        violations.push_back(format_violation("overlap", where));
      prev_end = seg.t_e;
      if (!inventory.has_phone(seg.phone))
        violations.push_back(
            format_violation("unknown-phone", where + " " + seg.phone));
    }
  }

  return violations;
}

}  // namespace accentkit
