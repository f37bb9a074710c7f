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

#include "accentkit/renderer.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <stdexcept>
#include <string>

#include "accentkit/prng.hpp"

namespace accentkit {

void RendererConfig::validate() const {
  if (phoneme_vocab <= 0 || embed_dim <= 0 || intensity_dim <= 0 ||
      predictor_hidden <= 0 || mel_channels <= 0 || max_duration <= 0) {
    throw std::invalid_argument(
        "RendererConfig: every dimension must be positive");
  }
}

Mlp::Mlp(int in_dim, int hidden_dim, int out_dim, std::uint64_t seed1,
         std::uint64_t seed2)
    : l1(in_dim, hidden_dim, seed1), l2(hidden_dim, out_dim, seed2) {}

Matrix Mlp::apply(const Matrix& x) const { return l2.apply(relu(l1.apply(x))); }

Matrix Mlp::forward(const Matrix& x) {
  pre_activation_ = l1.forward(x);
  has_cached_ = true;
  return l2.forward(relu(pre_activation_));
}

Matrix Mlp::backward(const Matrix& grad_out) {
  if (!has_cached_) {
    throw std::logic_error("Mlp::backward called before forward");
  }
  const Matrix grad_hidden = l2.backward(grad_out);
  return l1.backward(relu_backward(pre_activation_, grad_hidden));
}

void Mlp::zero_grad() {
  l1.zero_grad();
  l2.zero_grad();
}

RendererParams RendererParams::init(const RendererConfig& config,
                                    std::uint64_t seed) {
  config.validate();
  // Component seeds come from named draws: function-argument evaluation
  // order is unspecified, so inlining the draws would not be portable.
  SplitMix64 seeder(seed);
  const std::uint64_t s_embed = seeder.next_u64();
  const std::uint64_t s_intensity = seeder.next_u64();
  const std::uint64_t s_pitch1 = seeder.next_u64();
  const std::uint64_t s_pitch2 = seeder.next_u64();
  const std::uint64_t s_energy1 = seeder.next_u64();
  const std::uint64_t s_energy2 = seeder.next_u64();
  const std::uint64_t s_duration1 = seeder.next_u64();
  const std::uint64_t s_duration2 = seeder.next_u64();
  const std::uint64_t s_pitch_proj = seeder.next_u64();
  const std::uint64_t s_energy_proj = seeder.next_u64();
  const std::uint64_t s_decoder = seeder.next_u64();

  const int dcat = config.concat_dim();
  RendererParams p;
  p.config = config;
  p.phoneme_embedding =
      EmbeddingTable(config.phoneme_vocab, config.embed_dim, s_embed);
  p.intensity_encoder = LinearLayer(1, config.intensity_dim, s_intensity);
  // The table and the intensity encoder produce the net's input features
  // rather than transform activations, so they start at unit scale
  // (uniform(-1,1), the usual embedding convention). Shape-fan Glorot
  // would feed the predictors ~0.15-scale inputs, and the toy training
  // budget cannot pull the intensity trend out of gradients that small.
  p.phoneme_embedding.table *= std::sqrt(
      static_cast<double>(config.phoneme_vocab + config.embed_dim) / 6.0);
  p.intensity_encoder.weight *=
      std::sqrt(static_cast<double>(1 + config.intensity_dim) / 6.0);
  p.pitch_predictor = Mlp(dcat, config.predictor_hidden, 1, s_pitch1, s_pitch2);
  p.energy_predictor =
      Mlp(dcat, config.predictor_hidden, 1, s_energy1, s_energy2);
  p.duration_predictor =
      Mlp(dcat, config.predictor_hidden, 1, s_duration1, s_duration2);
  p.pitch_projection = LinearLayer(1, dcat, s_pitch_proj);
  p.energy_projection = LinearLayer(1, dcat, s_energy_proj);
  p.decoder = LinearLayer(dcat, config.mel_channels, s_decoder);
  return p;
}

std::vector<ParamRef> RendererParams::parameters() {
  std::vector<ParamRef> refs;
  refs.push_back({"phoneme_embedding.table", &phoneme_embedding.table,
                  &phoneme_embedding.table_grad});
  auto add_linear = [&refs](const std::string& name, LinearLayer& l) {
    refs.push_back({name + ".weight", &l.weight, &l.weight_grad});
    refs.push_back({name + ".bias", &l.bias, &l.bias_grad});
  };
  add_linear("intensity_encoder", intensity_encoder);
  add_linear("pitch_predictor.l1", pitch_predictor.l1);
  add_linear("pitch_predictor.l2", pitch_predictor.l2);
  add_linear("energy_predictor.l1", energy_predictor.l1);
  add_linear("energy_predictor.l2", energy_predictor.l2);
  add_linear("duration_predictor.l1", duration_predictor.l1);
  add_linear("duration_predictor.l2", duration_predictor.l2);
  add_linear("pitch_projection", pitch_projection);
  add_linear("energy_projection", energy_projection);
  add_linear("decoder", decoder);
  return refs;
}

void RendererParams::zero_grad() {
  phoneme_embedding.zero_grad();
  intensity_encoder.zero_grad();
  pitch_predictor.zero_grad();
  energy_predictor.zero_grad();
  duration_predictor.zero_grad();
  pitch_projection.zero_grad();
  energy_projection.zero_grad();
  decoder.zero_grad();
}

void RendererParams::save(std::ostream& out) const {
  std::vector<NamedTensor> tensors;
  // parameters() is non-const only because training mutates through the
  // refs; serialization just copies the values out.
  auto& self = const_cast<RendererParams&>(*this);
  for (const ParamRef& ref : self.parameters()) {
    tensors.push_back({ref.name, *ref.value});
  }
  Matrix md(1, 1);
  md(0, 0) = static_cast<double>(config.max_duration);
  tensors.push_back({"max_duration", md});
  write_checkpoint(tensors, out);
}

namespace {

std::string shape_str(Eigen::Index rows, Eigen::Index cols) {
  return std::to_string(rows) + "x" + std::to_string(cols);
}

const Matrix& ckpt_tensor(const std::map<std::string, const Matrix*>& by_name,
                          const std::string& name) {
  const auto it = by_name.find(name);
  if (it == by_name.end()) {
    throw std::runtime_error("checkpoint: missing tensor '" + name + "'");
  }
  return *it->second;
}

const Matrix& ckpt_tensor(const std::map<std::string, const Matrix*>& by_name,
                          const std::string& name, Eigen::Index rows,
                          Eigen::Index cols) {
  const Matrix& m = ckpt_tensor(by_name, name);
  if (m.rows() != rows || m.cols() != cols) {
    throw std::runtime_error("checkpoint: tensor '" + name + "' is " +
                             shape_str(m.rows(), m.cols()) + ", expected " +
                             shape_str(rows, cols));
  }
  return m;
}

}  // namespace

RendererParams RendererParams::load(std::istream& in) {
  const std::vector<NamedTensor> tensors = read_checkpoint(in);
  std::map<std::string, const Matrix*> by_name;
  for (const NamedTensor& t : tensors) by_name[t.name] = &t.value;

  // Config is implied by the shapes; cross-check everything against it.
  const Matrix& table = ckpt_tensor(by_name, "phoneme_embedding.table");
  const Matrix& enc_w = ckpt_tensor(by_name, "intensity_encoder.weight");
  if (enc_w.cols() != 1) {
    throw std::runtime_error(
        "checkpoint: intensity_encoder.weight must have 1 column");
  }
  const Matrix& p_l1 = ckpt_tensor(by_name, "pitch_predictor.l1.weight");
  const Matrix& dec_w = ckpt_tensor(by_name, "decoder.weight");
  const Matrix& md = ckpt_tensor(by_name, "max_duration", 1, 1);

  RendererConfig config;
  config.phoneme_vocab = static_cast<int>(table.rows());
  config.embed_dim = static_cast<int>(table.cols());
  config.intensity_dim = static_cast<int>(enc_w.rows());
  config.predictor_hidden = static_cast<int>(p_l1.rows());
  config.mel_channels = static_cast<int>(dec_w.rows());
  const double md_value = md(0, 0);
  if (!(md_value >= 1.0) || md_value != std::floor(md_value)) {
    throw std::runtime_error("checkpoint: max_duration must be an integer >= 1");
  }
  config.max_duration = static_cast<int>(md_value);
  config.validate();

  RendererParams params;
  params.config = config;
  params.phoneme_embedding.table = table;
  const int dcat = config.concat_dim();
  const int hidden = config.predictor_hidden;
  params.intensity_encoder.weight = enc_w;
  params.intensity_encoder.bias =
      ckpt_tensor(by_name, "intensity_encoder.bias", config.intensity_dim, 1);
  auto load_mlp = [&by_name, dcat, hidden](const std::string& name, Mlp& mlp) {
    mlp.l1.weight = ckpt_tensor(by_name, name + ".l1.weight", hidden, dcat);
    mlp.l1.bias = ckpt_tensor(by_name, name + ".l1.bias", hidden, 1);
    mlp.l2.weight = ckpt_tensor(by_name, name + ".l2.weight", 1, hidden);
    mlp.l2.bias = ckpt_tensor(by_name, name + ".l2.bias", 1, 1);
  };
  load_mlp("pitch_predictor", params.pitch_predictor);
  load_mlp("energy_predictor", params.energy_predictor);
  load_mlp("duration_predictor", params.duration_predictor);
  params.pitch_projection.weight =
      ckpt_tensor(by_name, "pitch_projection.weight", dcat, 1);
  params.pitch_projection.bias =
      ckpt_tensor(by_name, "pitch_projection.bias", dcat, 1);
  params.energy_projection.weight =
      ckpt_tensor(by_name, "energy_projection.weight", dcat, 1);
  params.energy_projection.bias =
      ckpt_tensor(by_name, "energy_projection.bias", dcat, 1);
  params.decoder.weight = dec_w;
  if (dec_w.cols() != dcat) {
    throw std::runtime_error("checkpoint: decoder.weight is " +
                             shape_str(dec_w.rows(), dec_w.cols()) +
                             ", expected " +
                             shape_str(config.mel_channels, dcat));
  }
  params.decoder.bias =
      ckpt_tensor(by_name, "decoder.bias", config.mel_channels, 1);

  const std::size_t expected = params.parameters().size() + 1;
  if (tensors.size() != expected) {
    for (const NamedTensor& t : tensors) {
      bool known = t.name == "max_duration";
      for (const ParamRef& ref : params.parameters()) {
        known = known || ref.name == t.name;
      }
      if (!known) {
        throw std::runtime_error("checkpoint: unexpected tensor '" + t.name +
                                 "'");
      }
    }
  }
  params.zero_grad();
  return params;
}

Matrix encode_phonemes(std::span<const int> ids,
                       const RendererParams& params) {
  return params.phoneme_embedding.apply(ids);
}

Matrix encode_intensity(std::span<const double> scores,
                        const RendererParams& params) {
  Matrix col(static_cast<Eigen::Index>(scores.size()), 1);
  for (std::size_t t = 0; t < scores.size(); ++t) {
    if (!(scores[t] >= 0.0 && scores[t] <= 1.0)) {
      throw std::out_of_range("encode_intensity: score " +
                              std::to_string(scores[t]) + " outside [0,1]");
    }
    col(static_cast<Eigen::Index>(t), 0) = scores[t];
  }
  if (scores.empty()) {
    return Matrix(0, params.config.intensity_dim);
  }
  return params.intensity_encoder.apply(col);
}

Matrix length_regulate(const Matrix& h, std::span<const int> durations) {
  if (h.rows() != static_cast<Eigen::Index>(durations.size())) {
    throw std::invalid_argument(
        "length_regulate: " + std::to_string(h.rows()) + " rows vs " +
        std::to_string(durations.size()) + " durations");
  }
  long long total = 0;
  for (std::size_t t = 0; t < durations.size(); ++t) {
    if (durations[t] < 1) {
      throw std::invalid_argument("length_regulate: duration " +
                                  std::to_string(durations[t]) +
                                  " at index " + std::to_string(t) +
                                  " must be >= 1");
    }
    total += durations[t];
  }
  Matrix out(static_cast<Eigen::Index>(total), h.cols());
  Eigen::Index offset = 0;
  for (std::size_t t = 0; t < durations.size(); ++t) {
    out.middleRows(offset, durations[t]) =
        h.row(static_cast<Eigen::Index>(t)).replicate(durations[t], 1);
    offset += durations[t];
  }
  return out;
}

RenderOutput render(std::span<const int> ids, std::span<const double> scores,
                    const RendererParams& params) {
  if (ids.size() != scores.size()) {
    throw std::invalid_argument("render: " + std::to_string(ids.size()) +
                                " ids vs " + std::to_string(scores.size()) +
                                " scores");
  }
  const RendererConfig& config = params.config;
  RenderOutput out;
  if (ids.empty()) {
    out.pitch = Vector(0);
    out.energy = Vector(0);
    out.frame_embeddings = Matrix(0, config.concat_dim());
    out.mel = Matrix(0, config.mel_channels);
    return out;
  }

  const Matrix h_ph = encode_phonemes(ids, params);
  const Matrix h_i = encode_intensity(scores, params);
  Matrix h_prime(h_ph.rows(), config.concat_dim());
  h_prime.leftCols(config.embed_dim) = h_ph;
  h_prime.rightCols(config.intensity_dim) = h_i;

  const Matrix p_hat = params.pitch_predictor.apply(h_prime);
  const Matrix e_hat = params.energy_predictor.apply(h_prime);
  const Matrix d_raw = params.duration_predictor.apply(h_prime);

  out.durations.resize(ids.size());
  const double raw_cap =
      std::log(static_cast<double>(config.max_duration) + 1.0);
  for (std::size_t t = 0; t < ids.size(); ++t) {
    const double raw = d_raw(static_cast<Eigen::Index>(t), 0);
    if (raw >= raw_cap) {
      out.durations[t] = config.max_duration;  // exp could overflow llround
    } else {
      const long long rounded = std::llround(std::exp(raw));
      out.durations[t] = static_cast<int>(std::clamp<long long>(
          rounded, 1, config.max_duration));
    }
  }

  const Matrix h_pp =
      h_prime + params.pitch_projection.apply(p_hat) +
      params.energy_projection.apply(e_hat);
  out.frame_embeddings = length_regulate(h_pp, out.durations);
  out.mel = params.decoder.apply(out.frame_embeddings);
  out.pitch = p_hat.col(0);
  out.energy = e_hat.col(0);
  return out;
}

std::size_t ToyCorpus::total_phonemes() const {
  std::size_t total = 0;
  for (const ToyUtterance& utt : utterances) total += utt.ids.size();
  return total;
}

ToyCorpus synth_corpus(std::uint64_t seed, int n_utts,
                       const RendererConfig& config) {
  config.validate();
  if (n_utts < 1) {
    throw std::invalid_argument("synth_corpus: n_utts must be >= 1");
  }
  SplitMix64 rng(seed);
  ToyCorpus corpus;
  corpus.utterances.resize(static_cast<std::size_t>(n_utts));
  for (ToyUtterance& utt : corpus.utterances) {
    const int n = 3 + static_cast<int>(rng.next_below(6));
    for (int t = 0; t < n; ++t) {
      // Draw order per phoneme is fixed: id, intensity, pitch noise,
      // energy noise, duration jitter.
      utt.ids.push_back(static_cast<int>(
          rng.next_below(static_cast<std::uint64_t>(config.phoneme_vocab))));
      const double i = rng.next_unit();
      utt.intensity.push_back(i);
      utt.target_pitch.push_back(100.0 + 60.0 * i + rng.next_in(-2.0, 2.0));
      utt.target_energy.push_back(0.3 + 0.5 * i +
                                  rng.next_in(-0.02, 0.02));
      const int jitter = static_cast<int>(rng.next_below(3)) - 1;
      utt.target_duration.push_back(
          5 + static_cast<int>(std::llround(4.0 * i)) + jitter);
    }
  }
  return corpus;
}

namespace {

struct Standardizer {
  double mean = 0.0;
  double sigma = 1.0;
};

Standardizer fit_standardizer(const std::vector<double>& values) {
  Standardizer s;
  const double n = static_cast<double>(values.size());
  s.mean = std::accumulate(values.begin(), values.end(), 0.0) / n;
  double var = 0.0;
  for (const double v : values) var += (v - s.mean) * (v - s.mean);
  s.sigma = std::sqrt(var / n);
  if (s.sigma < 1e-12) s.sigma = 1.0;  // constant targets
  return s;
}

Matrix standardized_column(const std::vector<double>& values,
                           const Standardizer& s) {
  Matrix col(static_cast<Eigen::Index>(values.size()), 1);
  for (std::size_t k = 0; k < values.size(); ++k) {
    col(static_cast<Eigen::Index>(k), 0) = (values[k] - s.mean) / s.sigma;
  }
  return col;
}

// Rewrites the head so it emits target-scale values directly:
// sigma * (W h + b) + mean = (sigma W) h + (sigma b + mean).
void fold_standardizer(Mlp& head, const Standardizer& s) {
  head.l2.weight *= s.sigma;
  head.l2.bias *= s.sigma;
  head.l2.bias.array() += s.mean;
}

}  // namespace

TrainResult train_toy(const ToyCorpus& corpus, const RendererConfig& config,
                      int epochs, double learning_rate, std::uint64_t seed) {
  config.validate();
  if (epochs < 0) {
    throw std::invalid_argument("train_toy: epochs must be >= 0");
  }
  if (!(learning_rate > 0.0)) {
    throw std::invalid_argument("train_toy: learning rate must be positive");
  }
  if (corpus.utterances.empty()) {
    throw std::invalid_argument("train_toy: empty corpus");
  }

  // The predictors are per-phoneme maps, so the whole corpus flattens
  // into one full batch.
  std::vector<int> ids;
  std::vector<double> scores;
  std::vector<double> pitch_t;
  std::vector<double> energy_t;
  std::vector<double> log_duration_t;
  for (const ToyUtterance& utt : corpus.utterances) {
    const std::size_t n = utt.ids.size();
    if (n == 0) {
      throw std::invalid_argument("train_toy: empty utterance");
    }
    if (utt.intensity.size() != n || utt.target_pitch.size() != n ||
        utt.target_energy.size() != n || utt.target_duration.size() != n) {
      throw std::invalid_argument("train_toy: utterance field lengths differ");
    }
    for (std::size_t t = 0; t < n; ++t) {
      if (utt.ids[t] < 0 || utt.ids[t] >= config.phoneme_vocab) {
        throw std::out_of_range("train_toy: phoneme id " +
                                std::to_string(utt.ids[t]) +
                                " outside vocab");
      }
      if (!(utt.intensity[t] >= 0.0 && utt.intensity[t] <= 1.0)) {
        throw std::out_of_range("train_toy: intensity outside [0,1]");
      }
      if (utt.target_duration[t] < 1) {
        throw std::invalid_argument("train_toy: target duration must be >= 1");
      }
      ids.push_back(utt.ids[t]);
      scores.push_back(utt.intensity[t]);
      pitch_t.push_back(utt.target_pitch[t]);
      energy_t.push_back(utt.target_energy[t]);
      log_duration_t.push_back(
          std::log(static_cast<double>(utt.target_duration[t])));
    }
  }

  TrainResult result;
  result.params = RendererParams::init(config, seed);
  if (epochs == 0) {
    return result;
  }

  const Standardizer stat_p = fit_standardizer(pitch_t);
  const Standardizer stat_e = fit_standardizer(energy_t);
  const Standardizer stat_d = fit_standardizer(log_duration_t);
  const Matrix z_pitch = standardized_column(pitch_t, stat_p);
  const Matrix z_energy = standardized_column(energy_t, stat_e);
  const Matrix z_duration = standardized_column(log_duration_t, stat_d);

  const Eigen::Index n_rows = static_cast<Eigen::Index>(ids.size());
  Matrix score_col(n_rows, 1);
  for (Eigen::Index k = 0; k < n_rows; ++k) score_col(k, 0) = scores[k];

  RendererParams& params = result.params;
  std::vector<ParamRef> refs = params.parameters();
  for (int epoch = 0; epoch < epochs; ++epoch) {
    params.zero_grad();
    const Matrix h_ph = params.phoneme_embedding.forward(ids);
    const Matrix h_i = params.intensity_encoder.forward(score_col);
    Matrix h_prime(n_rows, config.concat_dim());
    h_prime.leftCols(config.embed_dim) = h_ph;
    h_prime.rightCols(config.intensity_dim) = h_i;

    const Matrix p_raw = params.pitch_predictor.forward(h_prime);
    const Matrix e_raw = params.energy_predictor.forward(h_prime);
    const Matrix d_raw = params.duration_predictor.forward(h_prime);

    const double loss = mse_loss(p_raw, z_pitch) + mse_loss(e_raw, z_energy) +
                        mse_loss(d_raw, z_duration);
    if (!std::isfinite(loss)) {
      throw std::runtime_error(
          "train_toy: non-finite loss (divergence; lower the learning rate)");
    }
    result.epoch_losses.push_back(loss);

    const Matrix grad_h_prime =
        params.pitch_predictor.backward(mse_loss_grad(p_raw, z_pitch)) +
        params.energy_predictor.backward(mse_loss_grad(e_raw, z_energy)) +
        params.duration_predictor.backward(mse_loss_grad(d_raw, z_duration));
    params.phoneme_embedding.backward(grad_h_prime.leftCols(config.embed_dim));
    params.intensity_encoder.backward(
        grad_h_prime.rightCols(config.intensity_dim));

    // Projections and the decoder have zero gradient under this loss (no
    // mel ground truth in the toy corpus); the update leaves them at init.
    for (const ParamRef& ref : refs) {
      *ref.value -= learning_rate * *ref.grad;
    }
  }

  fold_standardizer(params.pitch_predictor, stat_p);
  fold_standardizer(params.energy_predictor, stat_e);
  fold_standardizer(params.duration_predictor, stat_d);
  return result;
}

ProbeBatch make_probe_batch(const RendererConfig& config, std::uint64_t seed,
                            int n) {
  config.validate();
  if (n < 1) {
    throw std::invalid_argument("make_probe_batch: n must be >= 1");
  }
  SplitMix64 rng(seed);
  ProbeBatch batch;
  long long total_frames = 0;
  for (int t = 0; t < n; ++t) {
    batch.ids.push_back(static_cast<int>(
        rng.next_below(static_cast<std::uint64_t>(config.phoneme_vocab))));
    batch.scores.push_back(rng.next_unit());
    const int dur = 1 + static_cast<int>(rng.next_below(
                            static_cast<std::uint64_t>(config.max_duration)));
    batch.durations.push_back(dur);
    total_frames += dur;
  }
  auto random_column = [&rng](int rows) {
    Matrix col(rows, 1);
    for (int r = 0; r < rows; ++r) col(r, 0) = rng.next_in(-1.0, 1.0);
    return col;
  };
  batch.target_pitch = random_column(n);
  batch.target_energy = random_column(n);
  batch.target_log_duration = random_column(n);
  batch.target_mel =
      Matrix(static_cast<Eigen::Index>(total_frames), config.mel_channels);
  for (Eigen::Index r = 0; r < batch.target_mel.rows(); ++r) {
    for (Eigen::Index c = 0; c < batch.target_mel.cols(); ++c) {
      batch.target_mel(r, c) = rng.next_in(-1.0, 1.0);
    }
  }
  return batch;
}

double probe_loss(RendererParams& params, const ProbeBatch& batch,
                  bool accumulate_grads) {
  const RendererConfig& config = params.config;
  const Eigen::Index n = static_cast<Eigen::Index>(batch.ids.size());
  if (n == 0 || batch.scores.size() != batch.ids.size() ||
      batch.durations.size() != batch.ids.size()) {
    throw std::invalid_argument("probe_loss: inconsistent batch");
  }

  Matrix score_col(n, 1);
  for (Eigen::Index k = 0; k < n; ++k) score_col(k, 0) = batch.scores[k];

  const Matrix h_ph = accumulate_grads
                          ? params.phoneme_embedding.forward(batch.ids)
                          : params.phoneme_embedding.apply(batch.ids);
  const Matrix h_i = accumulate_grads
                         ? params.intensity_encoder.forward(score_col)
                         : params.intensity_encoder.apply(score_col);
  Matrix h_prime(n, config.concat_dim());
  h_prime.leftCols(config.embed_dim) = h_ph;
  h_prime.rightCols(config.intensity_dim) = h_i;

  auto head = [accumulate_grads, &h_prime](Mlp& mlp) {
    return accumulate_grads ? mlp.forward(h_prime) : mlp.apply(h_prime);
  };
  const Matrix p_raw = head(params.pitch_predictor);
  const Matrix e_raw = head(params.energy_predictor);
  const Matrix d_raw = head(params.duration_predictor);

  const Matrix p_emb = accumulate_grads
                           ? params.pitch_projection.forward(p_raw)
                           : params.pitch_projection.apply(p_raw);
  const Matrix e_emb = accumulate_grads
                           ? params.energy_projection.forward(e_raw)
                           : params.energy_projection.apply(e_raw);
  const Matrix h_pp = h_prime + p_emb + e_emb;
  const Matrix h_fm = length_regulate(h_pp, batch.durations);
  const Matrix mel = accumulate_grads ? params.decoder.forward(h_fm)
                                      : params.decoder.apply(h_fm);

  const double loss =
      mse_loss(p_raw, batch.target_pitch) +
      mse_loss(e_raw, batch.target_energy) +
      mse_loss(d_raw, batch.target_log_duration) +
      mse_loss(mel, batch.target_mel);
  if (!accumulate_grads) {
    return loss;
  }

  const Matrix g_h_fm = params.decoder.backward(
      mse_loss_grad(mel, batch.target_mel));
  // Length-regulator backward: each input row collects the grads of the
  // frames it was copied to.
  Matrix g_h_pp = Matrix::Zero(n, config.concat_dim());
  Eigen::Index offset = 0;
  for (Eigen::Index t = 0; t < n; ++t) {
    g_h_pp.row(t) =
        g_h_fm.middleRows(offset, batch.durations[static_cast<std::size_t>(t)])
            .colwise()
            .sum();
    offset += batch.durations[static_cast<std::size_t>(t)];
  }

  const Matrix g_p_raw = mse_loss_grad(p_raw, batch.target_pitch) +
                         params.pitch_projection.backward(g_h_pp);
  const Matrix g_e_raw = mse_loss_grad(e_raw, batch.target_energy) +
                         params.energy_projection.backward(g_h_pp);
  const Matrix g_d_raw = mse_loss_grad(d_raw, batch.target_log_duration);

  const Matrix g_h_prime = g_h_pp +
                           params.pitch_predictor.backward(g_p_raw) +
                           params.energy_predictor.backward(g_e_raw) +
                           params.duration_predictor.backward(g_d_raw);
  params.phoneme_embedding.backward(g_h_prime.leftCols(config.embed_dim));
  params.intensity_encoder.backward(
      g_h_prime.rightCols(config.intensity_dim));
  return loss;
}

namespace {

std::vector<double> average_ranks(std::span<const double> values) {
  const std::size_t n = values.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&values](std::size_t a,
                                                  std::size_t b) {
    return values[a] < values[b];
  });
  std::vector<double> ranks(n);
  std::size_t k = 0;
  while (k < n) {
    std::size_t j = k;
    while (j + 1 < n && values[order[j + 1]] == values[order[k]]) ++j;
    const double shared = (static_cast<double>(k) + static_cast<double>(j)) /
                          2.0;  // 0-based average rank of the tie block
    for (std::size_t m = k; m <= j; ++m) ranks[order[m]] = shared;
    k = j + 1;
  }
  return ranks;
}

}  // namespace

double spearman(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) {
    throw std::invalid_argument("spearman: size mismatch");
  }
  if (a.size() < 2) {
    throw std::invalid_argument("spearman: need at least 2 points");
  }
  const std::vector<double> ra = average_ranks(a);
  const std::vector<double> rb = average_ranks(b);
  const double n = static_cast<double>(a.size());
  const double mean = (n - 1.0) / 2.0;  // ranks are 0-based
  double cov = 0.0;
  double var_a = 0.0;
  double var_b = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    const double da = ra[k] - mean;
    const double db = rb[k] - mean;
    cov += da * db;
    var_a += da * da;
    var_b += db * db;
  }
  if (var_a < 1e-12 || var_b < 1e-12) return 0.0;
  return cov / std::sqrt(var_a * var_b);
}

}  // namespace accentkit
