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
// Random-but-valid corpus generator for tests: small inventories (2..4
// phones, up to 6 senones), short utterances (T <= 10), non-overlapping
// alignment spans. Every generated corpus passes validate_corpus by
// construction.

#ifndef ACCENTKIT_TESTS_CORPUS_GEN_HPP_
#define ACCENTKIT_TESTS_CORPUS_GEN_HPP_

#include <string>
#include <vector>

#include "accentkit/prng.hpp"
#include "accentkit/types.hpp"

namespace accentkit_tests {

struct GeneratedCorpus {
  accentkit::PhonemeInventory inventory;
  accentkit::PosteriorSet posteriors;
  accentkit::AlignmentSet alignments;
};

struct CorpusGenOptions {
  bool uniform_rows = false;     // every posterior row = 1/S
  bool equal_ownership = false;  // exactly one senone per phone
};

inline GeneratedCorpus random_corpus(accentkit::SplitMix64& rng,
                                     const CorpusGenOptions& options = {}) {
  static const std::vector<std::string> kPhonePool = {"A", "B", "C", "D"};
  GeneratedCorpus corpus;

  const int n_phones = 2 + static_cast<int>(rng.next_below(3));  // 2..4
  const int n_senones =
      options.equal_ownership
          ? n_phones
          : n_phones + static_cast<int>(rng.next_below(
                           static_cast<std::uint64_t>(6 - n_phones + 1)));
  for (int p = 0; p < n_phones; ++p) {
    corpus.inventory.phones.push_back(kPhonePool[static_cast<std::size_t>(p)]);
  }
  for (int s = 0; s < n_senones; ++s) {
    // First n_phones senones cover every phone; the rest land anywhere.
    const int owner =
        s < n_phones
            ? s
            : static_cast<int>(
                  rng.next_below(static_cast<std::uint64_t>(n_phones)));
    corpus.inventory.senone_to_phone[s] =
        kPhonePool[static_cast<std::size_t>(owner)];
  }

  const int n_utts = 1 + static_cast<int>(rng.next_below(2));  // 1..2
  for (int u = 0; u < n_utts; ++u) {
    const std::string utt_id = "u" + std::to_string(u);
    const int frames = 1 + static_cast<int>(rng.next_below(10));  // 1..10

    accentkit::PosteriorMatrix matrix;
    matrix.utt_id = utt_id;
    matrix.frames.resize(frames, n_senones);
    for (int t = 0; t < frames; ++t) {
      if (options.uniform_rows) {
        matrix.frames.row(t).setConstant(1.0 / n_senones);
      } else {
        double sum = 0.0;
        for (int s = 0; s < n_senones; ++s) {
          const double v = 0.05 + rng.next_unit();
          matrix.frames(t, s) = v;
          sum += v;
        }
        matrix.frames.row(t) /= sum;
      }
    }
    corpus.posteriors.utterances.push_back(std::move(matrix));

    accentkit::UtteranceAlignment alignment;
    alignment.utt_id = utt_id;
    int cursor = 0;
    int index = 0;
    while (cursor < frames && index < 4) {
      const int remaining = frames - cursor;
      const int len = 1 + static_cast<int>(rng.next_below(
                              static_cast<std::uint64_t>(
                                  remaining < 4 ? remaining : 4)));
      accentkit::AlignmentSegment segment;
      segment.utt_id = utt_id;
      segment.index = index++;
      segment.phone = kPhonePool[static_cast<std::size_t>(
          rng.next_below(static_cast<std::uint64_t>(n_phones)))];
      segment.t_s = cursor;
      segment.t_e = cursor + len - 1;
      alignment.segments.push_back(segment);
      cursor += len + static_cast<int>(rng.next_below(2));  // optional gap
    }
    corpus.alignments.utterances.push_back(std::move(alignment));
  }
  return corpus;
}

// The 2-frame/3-phone reference corpus: rows (0.7, 0.2, 0.1) and
// (0.5, 0.3, 0.2), phones A/B/C owning one senone each. The canonical-A
// and canonical-B readings live in separate utterances sharing the same
// matrix, because two segments over the same span inside one utterance
// would break the non-overlap invariant.
inline GeneratedCorpus worked_example_corpus() {
  GeneratedCorpus corpus;
  corpus.inventory.phones = {"A", "B", "C"};
  corpus.inventory.senone_to_phone = {{0, "A"}, {1, "B"}, {2, "C"}};

  accentkit::Matrix frames(2, 3);
  frames << 0.7, 0.2, 0.1,
            0.5, 0.3, 0.2;
  for (const char* utt_id : {"u1", "u2"}) {
    accentkit::PosteriorMatrix matrix;
    matrix.utt_id = utt_id;
    matrix.frames = frames;
    corpus.posteriors.utterances.push_back(std::move(matrix));
  }

  accentkit::UtteranceAlignment a1;
  a1.utt_id = "u1";
  a1.segments.push_back({"u1", 0, "A", 0, 1});
  accentkit::UtteranceAlignment a2;
  a2.utt_id = "u2";
  a2.segments.push_back({"u2", 0, "B", 0, 1});
  corpus.alignments.utterances.push_back(std::move(a1));
  corpus.alignments.utterances.push_back(std::move(a2));
  return corpus;
}

}  // namespace accentkit_tests

#endif  // ACCENTKIT_TESTS_CORPUS_GEN_HPP_
