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
// On-disk formats. Everything is line-oriented UTF-8 text, debuggable by
// eye and diff-friendly; corpora at the scale this tool targets are small
// enough that binary containers buy nothing.
//
//   APOST (posterior matrices, versioned header):
//       APOST 1
//       utt <utt_id> <T> <S>
//       <S space-separated probabilities>      (T such rows)
//       ... further utterances ...
//
//   PHONEMAP (senone -> phone map, versioned header):
//       PHONEMAP 1
//       <senone_index> <phone_label>           (S lines, indexes 0..S-1
//                                               in any order)
//     The phone order of the resulting inventory is first-appearance
//     order.
//
//   Alignments (one segment per line, '#' comments ignored):
//       <utt_id> <phone_label> <start_frame> <end_frame>
//     Frame spans are inclusive at both ends.
//
//   Intensity records (TSV, written by write_intensity_records):
//       utt_id  index  phone  t_s  t_e  lpp  gop  intensity
//     Reals carry exactly 6 decimal places, round-half-even.
//
//   Manifest (one corpus entry per line, '#' comments ignored):
//       <utt_id> <posterior_path> <0|1>
//     The flag records whether an alignment exists for the utterance.
//     Paths must not contain whitespace.
//
// Parsers are pure functions over streams and throw ParseError (with a
// 1-based line number) on the first malformed construct. Writers emit the
// complete stream in one call; parse(write(x)) == x holds exactly for any
// value that itself came out of a parser.

#ifndef ACCENTKIT_CORPUS_IO_HPP_
#define ACCENTKIT_CORPUS_IO_HPP_

#include <array>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "accentkit/types.hpp"

namespace accentkit {

class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& message, int line)
      : std::runtime_error("line " + std::to_string(line) + ": " + message),
        line_(line) {}

  int line() const { return line_; }

 private:
  int line_;
};

struct ManifestEntry {
  std::string utt_id;
  std::string posterior_path;
  bool has_alignment = false;

  friend bool operator==(const ManifestEntry&, const ManifestEntry&) = default;
};

struct CorpusManifest {
  std::vector<ManifestEntry> entries;  // file order; utt_ids unique

  friend bool operator==(const CorpusManifest&, const CorpusManifest&) = default;
};

PhonemeInventory parse_phone_map(std::istream& in);
PosteriorSet parse_posteriors(std::istream& in);
AlignmentSet parse_alignments(std::istream& in);
std::vector<IntensityRecord> parse_intensity_records(std::istream& in);
CorpusManifest parse_manifest(std::istream& in);

void write_phone_map(const PhonemeInventory& inventory, std::ostream& out);
void write_posteriors(const PosteriorSet& posteriors, std::ostream& out);
void write_alignments(const AlignmentSet& alignments, std::ostream& out);
void write_intensity_records(std::span<const IntensityRecord> records,
                             std::ostream& out);
void write_manifest(const CorpusManifest& manifest, std::ostream& out);

// Fixed 6-decimal rendering used by every textual real in these formats.
std::string format_real6(double value);

struct SplitResult {
  CorpusManifest train, val, test;
};

// Deterministic three-way partition. The manifest order is shuffled by a
// seeded Fisher-Yates pass (SplitMix64), subset sizes follow the
// largest-remainder apportionment of the ratios, and each subset keeps the
// original manifest order. Ratios need not be normalized but must all be
// positive. Throws std::invalid_argument on bad ratios or an empty
// manifest.
SplitResult split_corpus(const CorpusManifest& manifest,
                         const std::array<double, 3>& ratios,
                         std::uint64_t seed);

}  // namespace accentkit

#endif  // ACCENTKIT_CORPUS_IO_HPP_
