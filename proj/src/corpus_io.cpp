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

#include "accentkit/corpus_io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <istream>
#include <numeric>
#include <ostream>
#include <set>
#include <sstream>

#include "accentkit/prng.hpp"

namespace accentkit {

namespace {

// Reads lines and tracks the 1-based line number for diagnostics. Blank
// lines are skipped in every format; lines starting with '#' are skipped
// only where a format allows comments.
class LineReader {
 public:
  LineReader(std::istream& in, bool allow_comments)
      : in_(in), allow_comments_(allow_comments) {}

  bool next(std::vector<std::string>* tokens) {
    std::string line;
    while (std::getline(in_, line)) {
      ++line_number_;
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (line.empty()) continue;
      if (allow_comments_ && line.front() == '#') continue;
      tokens->clear();
      std::istringstream fields(line);
      std::string token;
      while (fields >> token) tokens->push_back(token);
      if (tokens->empty()) continue;  // whitespace-only line
      return true;
    }
    return false;
  }

  int line_number() const { return line_number_; }

 private:
  std::istream& in_;
  bool allow_comments_;
  int line_number_ = 0;
};

int parse_int(const std::string& token, int line) {
  int value = 0;
  auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), value);
  if (ec != std::errc() || ptr != token.data() + token.size())
    throw ParseError("bad-integer(" + token + ")", line);
  return value;
}

int parse_int(const std::string& token, const LineReader& reader) {
  return parse_int(token, reader.line_number());
}

double parse_real(const std::string& token, int line) {
  double value = 0.0;
  auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), value);
  if (ec != std::errc() || ptr != token.data() + token.size() ||
      !std::isfinite(value))
    throw ParseError("bad-real(" + token + ")", line);
  return value;
}

double parse_real(const std::string& token, const LineReader& reader) {
  return parse_real(token, reader.line_number());
}

void expect_header(LineReader& reader, const std::string& magic) {
  std::vector<std::string> tokens;
  if (!reader.next(&tokens) || tokens.size() != 2 || tokens[0] != magic ||
      tokens[1] != "1")
    throw ParseError("expected header '" + magic + " 1'", reader.line_number());
}

}  // namespace

std::string format_real6(double value) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.6f", value);
  return buf;
}

PhonemeInventory parse_phone_map(std::istream& in) {
  LineReader reader(in, /*allow_comments=*/false);
  expect_header(reader, "PHONEMAP");

  PhonemeInventory inventory;
  std::vector<std::string> tokens;
  while (reader.next(&tokens)) {
    if (tokens.size() != 2)
      throw ParseError("expected '<senone_index> <phone_label>'",
                       reader.line_number());
    const int senone = parse_int(tokens[0], reader);
    if (senone < 0)
      throw ParseError("negative-senone(" + tokens[0] + ")", reader.line_number());
    if (inventory.senone_to_phone.count(senone))
      throw ParseError("duplicate-senone(" + tokens[0] + ")", reader.line_number());
    inventory.senone_to_phone[senone] = tokens[1];
    if (!inventory.has_phone(tokens[1])) inventory.phones.push_back(tokens[1]);
  }

  if (inventory.senone_to_phone.empty())
    throw ParseError("empty phone map", reader.line_number());
  for (int s = 0; s < inventory.senone_count(); ++s) {
    if (!inventory.senone_to_phone.count(s))
      throw ParseError("missing-senone(" + std::to_string(s) + ")",
                       reader.line_number());
  }
  return inventory;
}

PosteriorSet parse_posteriors(std::istream& in) {
  LineReader reader(in, /*allow_comments=*/false);
  expect_header(reader, "APOST");

  PosteriorSet set;
  std::set<std::string> seen;
  std::vector<std::string> tokens;
  while (reader.next(&tokens)) {
    if (tokens.size() != 4 || tokens[0] != "utt")
      throw ParseError("expected 'utt <utt_id> <T> <S>'", reader.line_number());
    PosteriorMatrix utt;
    utt.utt_id = tokens[1];
    const int frames = parse_int(tokens[2], reader);
    const int senones = parse_int(tokens[3], reader);
    if (frames < 1)
      throw ParseError("frame count must be >= 1", reader.line_number());
    if (senones < 2)
      throw ParseError("senone count must be >= 2", reader.line_number());
    if (!seen.insert(utt.utt_id).second)
      throw ParseError("duplicate-utterance(" + utt.utt_id + ")",
                       reader.line_number());

    utt.frames.resize(frames, senones);
    for (int t = 0; t < frames; ++t) {
      if (!reader.next(&tokens))
        throw ParseError("unexpected end of file inside utterance " + utt.utt_id,
                         reader.line_number());
      if (static_cast<int>(tokens.size()) != senones)
        throw ParseError("row-length(expected " + std::to_string(senones) +
                             ", got " + std::to_string(tokens.size()) + ")",
                         reader.line_number());
      for (int s = 0; s < senones; ++s) {
        const double p = parse_real(tokens[s], reader);
        if (p < 0.0 || p > 1.0)
          throw ParseError("probability-out-of-range(" + tokens[s] + ")",
                           reader.line_number());
        utt.frames(t, s) = p;
      }
      const double sum = utt.frames.row(t).sum();
      if (std::abs(sum - 1.0) > kRowSumTolerance)
        throw ParseError("row-sum(" + format_real6(sum) + ")",
                         reader.line_number());
    }
    set.utterances.push_back(std::move(utt));
  }
  return set;
}

AlignmentSet parse_alignments(std::istream& in) {
  LineReader reader(in, /*allow_comments=*/true);

  AlignmentSet set;
  std::vector<std::string> tokens;
  while (reader.next(&tokens)) {
    if (tokens.size() != 4)
      throw ParseError("expected '<utt_id> <phone> <start> <end>'",
                       reader.line_number());
    AlignmentSegment segment;
    segment.utt_id = tokens[0];
    segment.phone = tokens[1];
    segment.t_s = parse_int(tokens[2], reader);
    segment.t_e = parse_int(tokens[3], reader);
    if (segment.t_s < 0)
      throw ParseError("negative-frame(" + tokens[2] + ")", reader.line_number());
    if (segment.t_s > segment.t_e)
      throw ParseError("inverted-span(" + tokens[2] + ">" + tokens[3] + ")",
                       reader.line_number());

    UtteranceAlignment* utt = nullptr;
    for (auto& candidate : set.utterances) {
      if (candidate.utt_id == segment.utt_id) {
        utt = &candidate;
        break;
      }
    }
    if (utt == nullptr) {
      set.utterances.push_back({segment.utt_id, {}});
      utt = &set.utterances.back();
    }
    utt->segments.push_back(std::move(segment));
  }

  // Segments are sorted by start frame and indexed; inclusive spans may
  // touch nowhere (gaps are fine) but never share a frame.
  for (auto& utt : set.utterances) {
    std::stable_sort(utt.segments.begin(), utt.segments.end(),
                     [](const AlignmentSegment& a, const AlignmentSegment& b) {
                       return a.t_s < b.t_s;
                     });
    for (std::size_t i = 0; i < utt.segments.size(); ++i) {
      utt.segments[i].index = static_cast<int>(i);
      if (i > 0 && utt.segments[i].t_s <= utt.segments[i - 1].t_e)
        throw ParseError("overlap(" + utt.utt_id + " frame " +
                             std::to_string(utt.segments[i].t_s) + ")",
                         reader.line_number());
    }
  }
  return set;
}

std::vector<IntensityRecord> parse_intensity_records(std::istream& in) {
  static const std::string kHeader =
      "utt_id\tindex\tphone\tt_s\tt_e\tlpp\tgop\tintensity";

  std::string line;
  if (!std::getline(in, line))
    throw ParseError("empty intensity table", 1);
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != kHeader) throw ParseError("bad intensity header", 1);

  std::vector<IntensityRecord> records;
  int line_number = 1;
  while (std::getline(in, line)) {
    ++line_number;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<std::string> fields;
    std::size_t start = 0;
    while (true) {
      const std::size_t tab = line.find('\t', start);
      fields.push_back(line.substr(start, tab - start));
      if (tab == std::string::npos) break;
      start = tab + 1;
    }
    if (fields.size() != 8)
      throw ParseError("expected 8 tab-separated fields, got " +
                           std::to_string(fields.size()),
                       line_number);

    IntensityRecord record;
    record.utt_id = fields[0];
    record.index = parse_int(fields[1], line_number);
    record.phone = fields[2];
    record.t_s = parse_int(fields[3], line_number);
    record.t_e = parse_int(fields[4], line_number);
    record.lpp = parse_real(fields[5], line_number);
    record.gop = parse_real(fields[6], line_number);
    record.intensity = parse_real(fields[7], line_number);
    records.push_back(std::move(record));
  }
  return records;
}

CorpusManifest parse_manifest(std::istream& in) {
  LineReader reader(in, /*allow_comments=*/true);

  CorpusManifest manifest;
  std::set<std::string> seen;
  std::vector<std::string> tokens;
  while (reader.next(&tokens)) {
    if (tokens.size() != 3)
      throw ParseError("expected '<utt_id> <posterior_path> <0|1>'",
                       reader.line_number());
    if (tokens[2] != "0" && tokens[2] != "1")
      throw ParseError("bad-flag(" + tokens[2] + ")", reader.line_number());
    if (!seen.insert(tokens[0]).second)
      throw ParseError("duplicate-utterance(" + tokens[0] + ")",
                       reader.line_number());
    manifest.entries.push_back({tokens[0], tokens[1], tokens[2] == "1"});
  }
  return manifest;
}

void write_phone_map(const PhonemeInventory& inventory, std::ostream& out) {
  out << "PHONEMAP 1\n";
  for (const auto& [senone, phone] : inventory.senone_to_phone)
    out << senone << ' ' << phone << '\n';
}

void write_posteriors(const PosteriorSet& posteriors, std::ostream& out) {
  out << "APOST 1\n";
  for (const auto& utt : posteriors.utterances) {
    out << "utt " << utt.utt_id << ' ' << utt.num_frames() << ' '
        << utt.num_senones() << '\n';
    for (Eigen::Index t = 0; t < utt.num_frames(); ++t) {
      for (Eigen::Index s = 0; s < utt.num_senones(); ++s) {
        if (s > 0) out << ' ';
        out << format_real6(utt.frames(t, s));
      }
      out << '\n';
    }
  }
}

void write_alignments(const AlignmentSet& alignments, std::ostream& out) {
  for (const auto& utt : alignments.utterances) {
    for (const auto& segment : utt.segments)
      out << utt.utt_id << ' ' << segment.phone << ' ' << segment.t_s << ' '
          << segment.t_e << '\n';
  }
}

void write_intensity_records(std::span<const IntensityRecord> records,
                             std::ostream& out) {
  out << "utt_id\tindex\tphone\tt_s\tt_e\tlpp\tgop\tintensity\n";
  for (const auto& record : records) {
    out << record.utt_id << '\t' << record.index << '\t' << record.phone
        << '\t' << record.t_s << '\t' << record.t_e << '\t'
        << format_real6(record.lpp) << '\t' << format_real6(record.gop) << '\t'
        << format_real6(record.intensity) << '\n';
  }
}

void write_manifest(const CorpusManifest& manifest, std::ostream& out) {
  for (const auto& entry : manifest.entries)
    out << entry.utt_id << ' ' << entry.posterior_path << ' '
        << (entry.has_alignment ? 1 : 0) << '\n';
}

SplitResult split_corpus(const CorpusManifest& manifest,
                         const std::array<double, 3>& ratios,
                         std::uint64_t seed) {
  for (double ratio : ratios) {
    if (!(ratio > 0.0) || !std::isfinite(ratio))
      throw std::invalid_argument("split ratios must be positive");
  }
  const std::size_t n = manifest.entries.size();
  if (n == 0) throw std::invalid_argument("cannot split an empty manifest");

  // Largest-remainder apportionment of n over the three ratios.
  const double total = ratios[0] + ratios[1] + ratios[2];
  std::array<std::size_t, 3> sizes{};
  std::array<double, 3> fraction{};
  std::size_t assigned = 0;
  for (int k = 0; k < 3; ++k) {
    const double quota = static_cast<double>(n) * ratios[k] / total;
    sizes[k] = static_cast<std::size_t>(std::floor(quota));
    fraction[k] = quota - std::floor(quota);
    assigned += sizes[k];
  }
  std::array<int, 3> order{0, 1, 2};
  std::stable_sort(order.begin(), order.end(),
                   [&](int a, int b) { return fraction[a] > fraction[b]; });
  for (std::size_t extra = 0; extra < n - assigned; ++extra)
    ++sizes[order[extra % 3]];

  // Seeded Fisher-Yates over the manifest positions.
  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  SplitMix64 rng(seed);
  for (std::size_t i = n - 1; i > 0; --i) {
    const std::size_t j = rng.next_below(i + 1);
    std::swap(perm[i], perm[j]);
  }

  // Each subset keeps the original manifest order.
  SplitResult result;
  auto take = [&](std::size_t begin, std::size_t count) {
    std::vector<std::size_t> picked(perm.begin() + begin,
                                    perm.begin() + begin + count);
    std::sort(picked.begin(), picked.end());
    CorpusManifest subset;
    for (std::size_t idx : picked) subset.entries.push_back(manifest.entries[idx]);
    return subset;
  };
  result.train = take(0, sizes[0]);
  result.val = take(sizes[0], sizes[1]);
  result.test = take(sizes[0] + sizes[1], sizes[2]);
  return result;
}

}  // namespace accentkit
