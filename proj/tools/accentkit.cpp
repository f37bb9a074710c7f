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
// accentkit command-line front end.
//
// Exit codes: 0 success, 1 data/validation error, 2 usage error. Standard
// output is machine-parseable key=value lines; diagnostics go to standard
// error with file name and line number where applicable. Output files are
// written to a temp path and renamed into place, so failed runs leave no
// partial files behind.

#include <charconv>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "accentkit/corpus_io.hpp"
#include "accentkit/gop.hpp"
#include "accentkit/prng.hpp"
#include "accentkit/renderer.hpp"
#include "accentkit/tensorlet.hpp"
#include "accentkit/types.hpp"

namespace fs = std::filesystem;
namespace ak = accentkit;

namespace {

// Flag values that fail semantic validation are usage errors (exit 2), as
// opposed to bad data inside files (exit 1).
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::string format_real17(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

template <typename Parser>
auto parse_file(const fs::path& path, Parser parser) {
  std::ifstream in(path);
  if (!in) {
    throw std::runtime_error(path.string() + ": cannot open");
  }
  try {
    return parser(in);
  } catch (const ak::ParseError& e) {
    // what() already carries "line N: ..."; prepend the file.
    throw std::runtime_error(path.string() + ": " + e.what());
  }
}

void write_file_atomic(const fs::path& path,
                       const std::function<void(std::ostream&)>& writer) {
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary);
    if (!out) {
      throw std::runtime_error(tmp.string() + ": cannot open for writing");
    }
    writer(out);
    out.flush();
    if (!out) {
      throw std::runtime_error(tmp.string() + ": write failed");
    }
  }
  fs::rename(tmp, path);
}

std::vector<std::string> split_on_comma(const std::string& s) {
  std::vector<std::string> parts;
  if (s.empty()) return parts;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = s.find(',', start);
    parts.push_back(s.substr(start, comma - start));
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return parts;
}

int usage_int(const std::string& token, const std::string& flag) {
  int value = 0;
  const char* first = token.data();
  const char* last = first + token.size();
  const auto res = std::from_chars(first, last, value);
  if (res.ec != std::errc() || res.ptr != last) {
    throw UsageError(flag + ": bad integer '" + token + "'");
  }
  return value;
}

double usage_real(const std::string& token, const std::string& flag) {
  double value = 0.0;
  const char* first = token.data();
  const char* last = first + token.size();
  const auto res = std::from_chars(first, last, value);
  if (res.ec != std::errc() || res.ptr != last) {
    throw UsageError(flag + ": bad real '" + token + "'");
  }
  return value;
}

std::pair<double, double> usage_real_pair(const std::string& s,
                                          const std::string& flag) {
  const std::vector<std::string> parts = split_on_comma(s);
  if (parts.size() != 2) {
    throw UsageError(flag + ": expected LO,HI, got '" + s + "'");
  }
  return {usage_real(parts[0], flag), usage_real(parts[1], flag)};
}

// ---------------------------------------------------------------- score --

struct ScoreArgs {
  std::string posteriors, align, phonemap, out;
  std::string clip, clip_frozen;
};

void run_score(const ScoreArgs& args) {
  ak::QuantizerConfig config;
  std::optional<ak::NormalizationBounds> frozen;
  if (!args.clip.empty() && !args.clip_frozen.empty()) {
    throw UsageError("--clip and --clip-frozen are mutually exclusive");
  }
  if (!args.clip.empty()) {
    const auto [lo, hi] = usage_real_pair(args.clip, "--clip");
    config.clip_low_pct = lo;
    config.clip_high_pct = hi;
    if (!(lo >= 0.0 && hi <= 100.0 && lo < hi)) {
      throw UsageError("--clip: need 0 <= LO < HI <= 100");
    }
  }
  if (!args.clip_frozen.empty()) {
    const auto [lo, hi] = usage_real_pair(args.clip_frozen, "--clip-frozen");
    frozen = ak::NormalizationBounds{lo, hi};
  }

  const ak::PhonemeInventory inventory =
      parse_file(args.phonemap, ak::parse_phone_map);
  const ak::PosteriorSet posteriors =
      parse_file(args.posteriors, ak::parse_posteriors);
  const ak::AlignmentSet alignments =
      parse_file(args.align, ak::parse_alignments);

  const std::vector<std::string> inventory_violations =
      ak::validate_inventory(inventory);
  if (!inventory_violations.empty()) {
    throw std::runtime_error(args.phonemap + ": " + inventory_violations[0]);
  }
  const std::vector<std::string> corpus_violations =
      ak::validate_corpus(posteriors, alignments, inventory);
  if (!corpus_violations.empty()) {
    throw std::runtime_error("corpus validation: " + corpus_violations[0]);
  }

  const ak::ScoreResult result =
      ak::score_corpus(posteriors, alignments, inventory, config, frozen);
  write_file_atomic(args.out, [&result](std::ostream& out) {
    ak::write_intensity_records(result.records, out);
  });
  std::cout << "records=" << result.records.size() << "\n"
            << "lo=" << format_real17(result.bounds.lo) << "\n"
            << "hi=" << format_real17(result.bounds.hi) << "\n"
            << "out=" << args.out << "\n";
}

// ----------------------------------------------------------- categorize --

struct CategorizeArgs {
  std::string in, out;
};

void run_categorize(const CategorizeArgs& args) {
  const std::vector<ak::IntensityRecord> records =
      parse_file(args.in, ak::parse_intensity_records);
  std::size_t counts[3] = {0, 0, 0};
  std::vector<ak::IntensityCategory> categories;
  categories.reserve(records.size());
  for (const ak::IntensityRecord& record : records) {
    ak::IntensityCategory category;
    try {
      category = ak::categorize(record.intensity);
    } catch (const std::out_of_range& e) {
      throw std::runtime_error(args.in + ": " + e.what());
    }
    categories.push_back(category);
    ++counts[static_cast<int>(category)];
  }
  write_file_atomic(args.out, [&records, &categories](std::ostream& out) {
    out << "utt_id\tindex\tphone\tt_s\tt_e\tlpp\tgop\tintensity\tcategory\n";
    for (std::size_t k = 0; k < records.size(); ++k) {
      const ak::IntensityRecord& r = records[k];
      out << r.utt_id << '\t' << r.index << '\t' << r.phone << '\t' << r.t_s
          << '\t' << r.t_e << '\t' << ak::format_real6(r.lpp) << '\t'
          << ak::format_real6(r.gop) << '\t' << ak::format_real6(r.intensity)
          << '\t' << ak::to_string(categories[k]) << '\n';
    }
  });
  std::cout << "records=" << records.size() << "\n"
            << "slight=" << counts[0] << "\n"
            << "average=" << counts[1] << "\n"
            << "strong=" << counts[2] << "\n"
            << "out=" << args.out << "\n";
}

// --------------------------------------------------------------- render --

struct RenderArgs {
  std::string params, phonemes, out_prefix;
  std::string intensity;
  double intensity_uniform = -1.0;
  bool has_intensity = false;
  bool has_uniform = false;
};

void run_render(const RenderArgs& args) {
  if (args.has_intensity == args.has_uniform) {
    throw UsageError(
        "exactly one of --intensity and --intensity-uniform is required");
  }
  std::vector<int> ids;
  for (const std::string& token : split_on_comma(args.phonemes)) {
    ids.push_back(usage_int(token, "--phonemes"));
  }
  std::vector<double> scores;
  if (args.has_intensity) {
    for (const std::string& token : split_on_comma(args.intensity)) {
      scores.push_back(usage_real(token, "--intensity"));
    }
    if (scores.size() != ids.size()) {
      throw std::runtime_error(
          "length mismatch: " + std::to_string(ids.size()) +
          " phonemes vs " + std::to_string(scores.size()) +
          " intensity scores");
    }
  } else {
    scores.assign(ids.size(), args.intensity_uniform);
  }

  std::ifstream in(args.params);
  if (!in) {
    throw std::runtime_error(args.params + ": cannot open");
  }
  ak::RendererParams params;
  try {
    params = ak::RendererParams::load(in);
  } catch (const std::exception& e) {
    throw std::runtime_error(args.params + ": " + e.what());
  }

  const ak::RenderOutput output = ak::render(ids, scores, params);

  const fs::path phoneme_csv = args.out_prefix + ".phoneme.csv";
  const fs::path frame_csv = args.out_prefix + ".frame.csv";
  write_file_atomic(phoneme_csv, [&ids, &scores, &output](std::ostream& out) {
    out << "index,phone_id,intensity,pitch,energy,duration\n";
    for (std::size_t t = 0; t < ids.size(); ++t) {
      out << t << ',' << ids[t] << ',' << format_real17(scores[t]) << ','
          << format_real17(output.pitch(static_cast<Eigen::Index>(t))) << ','
          << format_real17(output.energy(static_cast<Eigen::Index>(t))) << ','
          << output.durations[t] << '\n';
    }
  });
  write_file_atomic(frame_csv, [&params, &output](std::ostream& out) {
    out << "frame";
    for (int c = 0; c < params.config.mel_channels; ++c) out << ",mel_" << c;
    out << '\n';
    for (Eigen::Index r = 0; r < output.mel.rows(); ++r) {
      out << r;
      for (Eigen::Index c = 0; c < output.mel.cols(); ++c) {
        out << ',' << format_real17(output.mel(r, c));
      }
      out << '\n';
    }
  });
  std::cout << "phonemes=" << ids.size() << "\n"
            << "frames=" << output.mel.rows() << "\n"
            << "phoneme_csv=" << phoneme_csv.string() << "\n"
            << "frame_csv=" << frame_csv.string() << "\n";
}

// ---------------------------------------------------------------- split --

struct SplitArgs {
  std::string manifest, ratios = "8,1,1", out_dir;
  std::uint64_t seed = 1;
};

void run_split(const SplitArgs& args) {
  const std::vector<std::string> parts = split_on_comma(args.ratios);
  if (parts.size() != 3) {
    throw UsageError("--ratios: expected three comma-separated values");
  }
  std::array<double, 3> ratios{};
  for (int k = 0; k < 3; ++k) {
    ratios[static_cast<std::size_t>(k)] = usage_real(parts[static_cast<std::size_t>(k)], "--ratios");
    if (!(ratios[static_cast<std::size_t>(k)] > 0.0)) {
      throw UsageError("--ratios: ratios must be positive");
    }
  }
  const ak::CorpusManifest manifest =
      parse_file(args.manifest, ak::parse_manifest);
  const ak::SplitResult result = ak::split_corpus(manifest, ratios, args.seed);

  fs::create_directories(args.out_dir);
  const fs::path dir(args.out_dir);
  const auto write_subset = [&dir](const char* name,
                                   const ak::CorpusManifest& subset) {
    write_file_atomic(dir / name, [&subset](std::ostream& out) {
      ak::write_manifest(subset, out);
    });
  };
  write_subset("train.manifest", result.train);
  write_subset("val.manifest", result.val);
  write_subset("test.manifest", result.test);
  std::cout << "total=" << manifest.entries.size() << "\n"
            << "train=" << result.train.entries.size() << "\n"
            << "val=" << result.val.entries.size() << "\n"
            << "test=" << result.test.entries.size() << "\n"
            << "out_dir=" << args.out_dir << "\n";
}

// ------------------------------------------------------------- validate --

struct ValidateArgs {
  std::string posteriors, align, phonemap;
};

int run_validate(const ValidateArgs& args) {
  const ak::PhonemeInventory inventory =
      parse_file(args.phonemap, ak::parse_phone_map);
  const ak::PosteriorSet posteriors =
      parse_file(args.posteriors, ak::parse_posteriors);
  const ak::AlignmentSet alignments =
      parse_file(args.align, ak::parse_alignments);
  std::vector<std::string> violations = ak::validate_inventory(inventory);
  const std::vector<std::string> corpus_violations =
      ak::validate_corpus(posteriors, alignments, inventory);
  violations.insert(violations.end(), corpus_violations.begin(),
                    corpus_violations.end());
  for (const std::string& v : violations) {
    std::cout << "violation=" << v << "\n";
  }
  std::cout << "violations=" << violations.size() << "\n";
  return violations.empty() ? 0 : 1;
}

// ------------------------------------------------------------ gradcheck --

struct GradcheckArgs {
  std::string dims = "default";
  std::uint64_t seed = 1;
  std::string corrupt;  // test fixture: break one component's backward
};

struct GradcheckDims {
  int batch, vocab, embed, intensity, hidden, mel, cap;
};

ak::GradCheckResult check_linear(std::uint64_t seed, bool corrupt,
                                 const GradcheckDims& d) {
  ak::SplitMix64 seeder(seed);
  const std::uint64_t s1 = seeder.next_u64();
  const std::uint64_t s2 = seeder.next_u64();
  const std::uint64_t s3 = seeder.next_u64();
  ak::LinearLayer layer(d.embed, d.hidden, s1);
  const ak::Matrix x =
      ak::seeded_init(d.batch, d.embed, s2, ak::InitScheme::kGlorotUniform);
  const ak::Matrix target =
      ak::seeded_init(d.batch, d.hidden, s3, ak::InitScheme::kGlorotUniform);
  layer.zero_grad();
  const ak::Matrix y = layer.forward(x);
  layer.backward(ak::mse_loss_grad(y, target));
  if (corrupt) layer.weight_grad(0, 0) = layer.weight_grad(0, 0) * 2.0 + 1.0;
  const std::vector<ak::ParamRef> refs = {
      {"linear.weight", &layer.weight, &layer.weight_grad},
      {"linear.bias", &layer.bias, &layer.bias_grad},
  };
  return ak::finite_difference_check(
      [&layer, &x, &target] { return ak::mse_loss(layer.apply(x), target); },
      refs, 1e-5);
}

ak::GradCheckResult check_embedding(std::uint64_t seed, bool corrupt,
                                    const GradcheckDims& d) {
  ak::SplitMix64 seeder(seed);
  const std::uint64_t s1 = seeder.next_u64();
  const std::uint64_t s2 = seeder.next_u64();
  ak::EmbeddingTable table(d.vocab, d.embed, s1);
  std::vector<int> ids;
  ak::SplitMix64 id_rng(seeder.next_u64());
  for (int t = 0; t < d.batch + 2; ++t) {  // +2 forces repeated ids
    ids.push_back(static_cast<int>(
        id_rng.next_below(static_cast<std::uint64_t>(d.vocab))));
  }
  const ak::Matrix target = ak::seeded_init(
      static_cast<Eigen::Index>(ids.size()), d.embed, s2,
      ak::InitScheme::kGlorotUniform);
  table.zero_grad();
  const ak::Matrix y = table.forward(ids);
  table.backward(ak::mse_loss_grad(y, target));
  if (corrupt) table.table_grad(0, 0) = table.table_grad(0, 0) * 2.0 + 1.0;
  const std::vector<ak::ParamRef> refs = {
      {"embedding.table", &table.table, &table.table_grad},
  };
  return ak::finite_difference_check(
      [&table, &ids, &target] {
        return ak::mse_loss(table.apply(ids), target);
      },
      refs, 1e-5);
}

ak::GradCheckResult check_relu(std::uint64_t seed, bool corrupt,
                               const GradcheckDims& d) {
  ak::SplitMix64 seeder(seed);
  const std::uint64_t s1 = seeder.next_u64();
  const std::uint64_t s2 = seeder.next_u64();
  ak::Matrix x =
      ak::seeded_init(d.batch, d.embed, s1, ak::InitScheme::kGlorotUniform);
  const ak::Matrix target =
      ak::seeded_init(d.batch, d.embed, s2, ak::InitScheme::kGlorotUniform);
  ak::Matrix grad =
      ak::relu_backward(x, ak::mse_loss_grad(ak::relu(x), target));
  if (corrupt) grad(0, 0) = grad(0, 0) * 2.0 + 1.0;
  const std::vector<ak::ParamRef> refs = {{"relu.x", &x, &grad}};
  return ak::finite_difference_check(
      [&x, &target] { return ak::mse_loss(ak::relu(x), target); }, refs, 1e-5);
}

ak::GradCheckResult check_softmax(std::uint64_t seed, bool corrupt,
                                  const GradcheckDims& d) {
  ak::SplitMix64 seeder(seed);
  const std::uint64_t s1 = seeder.next_u64();
  const std::uint64_t s2 = seeder.next_u64();
  ak::Matrix x =
      ak::seeded_init(d.batch, d.embed, s1, ak::InitScheme::kGlorotUniform);
  const ak::Matrix target =
      ak::seeded_init(d.batch, d.embed, s2, ak::InitScheme::kGlorotUniform);
  const ak::Matrix y = ak::softmax_rows(x);
  ak::Matrix grad =
      ak::softmax_rows_backward(y, ak::mse_loss_grad(y, target));
  if (corrupt) grad(0, 0) = grad(0, 0) * 2.0 + 1.0;
  const std::vector<ak::ParamRef> refs = {{"softmax.x", &x, &grad}};
  return ak::finite_difference_check(
      [&x, &target] {
        return ak::mse_loss(ak::softmax_rows(x), target);
      },
      refs, 1e-5);
}

ak::GradCheckResult check_mlp(std::uint64_t seed, bool corrupt,
                              const GradcheckDims& d) {
  ak::SplitMix64 seeder(seed);
  const std::uint64_t s1 = seeder.next_u64();
  const std::uint64_t s2 = seeder.next_u64();
  const std::uint64_t s3 = seeder.next_u64();
  const std::uint64_t s4 = seeder.next_u64();
  ak::Mlp mlp(d.embed, d.hidden, 1, s1, s2);
  const ak::Matrix x =
      ak::seeded_init(d.batch, d.embed, s3, ak::InitScheme::kGlorotUniform);
  const ak::Matrix target =
      ak::seeded_init(d.batch, 1, s4, ak::InitScheme::kGlorotUniform);
  mlp.zero_grad();
  const ak::Matrix y = mlp.forward(x);
  mlp.backward(ak::mse_loss_grad(y, target));
  if (corrupt) mlp.l1.weight_grad(0, 0) = mlp.l1.weight_grad(0, 0) * 2.0 + 1.0;
  const std::vector<ak::ParamRef> refs = {
      {"mlp.l1.weight", &mlp.l1.weight, &mlp.l1.weight_grad},
      {"mlp.l1.bias", &mlp.l1.bias, &mlp.l1.bias_grad},
      {"mlp.l2.weight", &mlp.l2.weight, &mlp.l2.weight_grad},
      {"mlp.l2.bias", &mlp.l2.bias, &mlp.l2.bias_grad},
  };
  return ak::finite_difference_check(
      [&mlp, &x, &target] { return ak::mse_loss(mlp.apply(x), target); },
      refs, 1e-5);
}

ak::GradCheckResult check_renderer(std::uint64_t seed, bool corrupt,
                                   const GradcheckDims& d) {
  ak::RendererConfig config;
  config.phoneme_vocab = d.vocab;
  config.embed_dim = d.embed;
  config.intensity_dim = d.intensity;
  config.predictor_hidden = d.hidden;
  config.mel_channels = d.mel;
  config.max_duration = d.cap;
  ak::SplitMix64 seeder(seed);
  const std::uint64_t s_params = seeder.next_u64();
  const std::uint64_t s_batch = seeder.next_u64();
  ak::RendererParams params = ak::RendererParams::init(config, s_params);
  const ak::ProbeBatch batch =
      ak::make_probe_batch(config, s_batch, d.batch);
  params.zero_grad();
  ak::probe_loss(params, batch, true);
  if (corrupt) {
    params.phoneme_embedding.table_grad(0, 0) =
        params.phoneme_embedding.table_grad(0, 0) * 2.0 + 1.0;
  }
  const std::vector<ak::ParamRef> refs = params.parameters();
  return ak::finite_difference_check(
      [&params, &batch] { return ak::probe_loss(params, batch, false); },
      refs, 1e-5);
}

int run_gradcheck(const GradcheckArgs& args) {
  GradcheckDims dims{};
  if (args.dims == "small") {
    dims = {3, 4, 3, 3, 4, 2, 5};
  } else if (args.dims == "default") {
    dims = {6, 8, 8, 8, 8, 6, 8};
  } else {
    throw UsageError("--dims: expected 'small' or 'default'");
  }

  struct Component {
    const char* name;
    ak::GradCheckResult (*check)(std::uint64_t, bool, const GradcheckDims&);
  };
  const Component components[] = {
      {"linear", check_linear},       {"embedding", check_embedding},
      {"relu", check_relu},           {"softmax", check_softmax},
      {"mlp", check_mlp},             {"renderer", check_renderer},
  };

  constexpr double kThreshold = 1e-4;
  std::string failed;
  double failed_error = 0.0;
  for (const Component& component : components) {
    const ak::GradCheckResult result = component.check(
        args.seed, args.corrupt == component.name, dims);
    std::cout << component.name << "="
              << format_real17(result.max_rel_error) << "\n";
    if (!(result.max_rel_error < kThreshold) && failed.empty()) {
      failed = component.name;
      failed_error = result.max_rel_error;
    }
  }
  if (!failed.empty()) {
    std::cerr << "gradcheck failed: component '" << failed
              << "' max relative error " << format_real17(failed_error)
              << " (threshold " << format_real17(kThreshold) << ")\n";
    return 1;
  }
  std::cout << "gradcheck ok: 6 components under "
            << format_real17(kThreshold) << "\n";
  return 0;
}

// ------------------------------------------------------------ train-toy --

struct TrainToyArgs {
  int utts = 200;
  int holdout_utts = 50;
  int epochs = 200;
  double lr = 1e-3;
  std::uint64_t seed = 1;
  int vocab = 16;
  int embed_dim = 256;
  int intensity_dim = 256;
  int hidden = 64;
  int mel = 80;
  int max_duration = 50;
  std::string out;
};

void run_train_toy(const TrainToyArgs& args) {
  ak::RendererConfig config;
  config.phoneme_vocab = args.vocab;
  config.embed_dim = args.embed_dim;
  config.intensity_dim = args.intensity_dim;
  config.predictor_hidden = args.hidden;
  config.mel_channels = args.mel;
  config.max_duration = args.max_duration;
  try {
    config.validate();
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
  if (args.utts < 1 || args.holdout_utts < 1 || args.epochs < 0) {
    throw UsageError("--utts/--holdout-utts must be >= 1, --epochs >= 0");
  }

  const ak::ToyCorpus corpus = ak::synth_corpus(args.seed, args.utts, config);
  const ak::TrainResult result =
      ak::train_toy(corpus, config, args.epochs, args.lr, args.seed);

  // Held-out trend check: fresh corpus from an offset seed, rendered with
  // the trained parameters.
  const ak::ToyCorpus holdout =
      ak::synth_corpus(args.seed + 1, args.holdout_utts, config);
  std::vector<double> intensities;
  std::vector<double> predicted_pitch;
  std::vector<double> predicted_energy;
  for (const ak::ToyUtterance& utt : holdout.utterances) {
    const ak::RenderOutput rendered =
        ak::render(utt.ids, utt.intensity, result.params);
    for (std::size_t t = 0; t < utt.ids.size(); ++t) {
      intensities.push_back(utt.intensity[t]);
      predicted_pitch.push_back(rendered.pitch(static_cast<Eigen::Index>(t)));
      predicted_energy.push_back(
          rendered.energy(static_cast<Eigen::Index>(t)));
    }
  }

  write_file_atomic(args.out, [&result](std::ostream& out) {
    result.params.save(out);
  });
  std::cout << "utts=" << args.utts << "\n"
            << "phonemes=" << corpus.total_phonemes() << "\n"
            << "epochs=" << args.epochs << "\n";
  if (!result.epoch_losses.empty()) {
    std::cout << "first_loss=" << format_real17(result.epoch_losses.front())
              << "\n"
              << "final_loss=" << format_real17(result.epoch_losses.back())
              << "\n";
  }
  std::cout << "spearman_pitch="
            << format_real17(ak::spearman(intensities, predicted_pitch))
            << "\n"
            << "spearman_energy="
            << format_real17(ak::spearman(intensities, predicted_energy))
            << "\n"
            << "out=" << args.out << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"accentkit: phoneme accent-intensity scoring and rendering"};
  app.require_subcommand(1);
  app.failure_message(CLI::FailureMessage::help);

  ScoreArgs score_args;
  CLI::App* score = app.add_subcommand(
      "score", "Score aligned phonemes and write an intensity TSV");
  score->add_option("--posteriors", score_args.posteriors,
                    "Posterior matrix file")->required();
  score->add_option("--align", score_args.align, "Alignment file")->required();
  score->add_option("--phonemap", score_args.phonemap,
                    "Senone-to-phone map file")->required();
  score->add_option("--clip", score_args.clip,
                    "Percentile clip LO,HI for normalization bounds");
  score->add_option("--clip-frozen", score_args.clip_frozen,
                    "Frozen raw normalization bounds LO,HI");
  score->add_option("--out", score_args.out, "Output TSV path")->required();

  CategorizeArgs categorize_args;
  CLI::App* categorize = app.add_subcommand(
      "categorize", "Append a slight/average/strong category column");
  categorize->add_option("--in", categorize_args.in, "Input intensity TSV")
      ->required();
  categorize->add_option("--out", categorize_args.out, "Output TSV path")
      ->required();

  RenderArgs render_args;
  CLI::App* render = app.add_subcommand(
      "render", "Run the accent renderer and export CSV tables");
  render->add_option("--params", render_args.params, "Parameter checkpoint")
      ->required();
  render->add_option("--phonemes", render_args.phonemes,
                     "Comma-separated phoneme ids")->required();
  CLI::Option* intensity_opt = render->add_option(
      "--intensity", render_args.intensity, "Comma-separated scores in [0,1]");
  CLI::Option* uniform_opt = render->add_option(
      "--intensity-uniform", render_args.intensity_uniform,
      "One score shared by every phoneme");
  intensity_opt->excludes(uniform_opt);
  render->add_option("--out-prefix", render_args.out_prefix,
                     "Prefix for .phoneme.csv and .frame.csv")->required();

  SplitArgs split_args;
  CLI::App* split = app.add_subcommand(
      "split", "Partition a manifest into train/val/test");
  split->add_option("--manifest", split_args.manifest, "Manifest file")
      ->required();
  split->add_option("--ratios", split_args.ratios,
                    "Three positive ratios, default 8,1,1");
  split->add_option("--seed", split_args.seed, "Shuffle seed");
  split->add_option("--out-dir", split_args.out_dir, "Output directory")
      ->required();

  ValidateArgs validate_args;
  CLI::App* validate = app.add_subcommand(
      "validate", "Report every inventory/corpus violation");
  validate->add_option("--posteriors", validate_args.posteriors,
                       "Posterior matrix file")->required();
  validate->add_option("--align", validate_args.align, "Alignment file")
      ->required();
  validate->add_option("--phonemap", validate_args.phonemap,
                       "Senone-to-phone map file")->required();

  GradcheckArgs gradcheck_args;
  CLI::App* gradcheck = app.add_subcommand(
      "gradcheck", "Verify analytic gradients against finite differences");
  gradcheck->add_option("--dims", gradcheck_args.dims,
                        "Size preset: small or default");
  gradcheck->add_option("--seed", gradcheck_args.seed, "Instance seed");
  gradcheck->add_option("--corrupt", gradcheck_args.corrupt,
                        "Deliberately break one component (test fixture)")
      ->group("");  // hidden

  TrainToyArgs train_args;
  CLI::App* train = app.add_subcommand(
      "train-toy", "Train the renderer on a synthetic corpus");
  train->add_option("--utts", train_args.utts, "Training utterances");
  train->add_option("--holdout-utts", train_args.holdout_utts,
                    "Held-out utterances for the trend report");
  train->add_option("--epochs", train_args.epochs, "Training epochs");
  train->add_option("--lr", train_args.lr, "Learning rate");
  train->add_option("--seed", train_args.seed, "Corpus and init seed");
  train->add_option("--vocab", train_args.vocab, "Phoneme vocabulary size");
  train->add_option("--embed-dim", train_args.embed_dim, "Embedding dim");
  train->add_option("--intensity-dim", train_args.intensity_dim,
                    "Intensity embedding dim");
  train->add_option("--hidden", train_args.hidden, "Predictor hidden dim");
  train->add_option("--mel", train_args.mel, "Mel channels");
  train->add_option("--max-duration", train_args.max_duration,
                    "Duration cap in frames");
  train->add_option("--out", train_args.out, "Checkpoint output path")
      ->required();

  int exit_code = 0;
  score->callback([&score_args] { run_score(score_args); });
  categorize->callback([&categorize_args] { run_categorize(categorize_args); });
  render->callback([&render_args, intensity_opt, uniform_opt] {
    render_args.has_intensity = intensity_opt->count() > 0;
    render_args.has_uniform = uniform_opt->count() > 0;
    run_render(render_args);
  });
  split->callback([&split_args] { run_split(split_args); });
  validate->callback(
      [&validate_args, &exit_code] { exit_code = run_validate(validate_args); });
  gradcheck->callback([&gradcheck_args, &exit_code] {
    exit_code = run_gradcheck(gradcheck_args);
  });
  train->callback([&train_args] { run_train_toy(train_args); });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return exit_code;
}
