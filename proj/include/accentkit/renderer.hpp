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
// Intensity-conditioned accent renderer, desk scale.
//
// The conditioning path is the interesting part and is kept intact:
//
//   H_ph  = embedding lookup over phoneme ids            (n x d_ph)
//   H_i   = linear encoding of the scalar intensity      (n x d_i)
//   H'    = [H_ph | H_i]                                 (n x (d_ph+d_i))
//   p_hat, e_hat, d_raw = 2-layer MLP heads over H'      (n x 1 each)
//   p_emb = pitch projection of p_hat, e_emb likewise    (n x (d_ph+d_i))
//   H''   = H' + p_emb + e_emb
//   H_fm  = length_regulate(H'', durations)              (sum(D) rows)
//   mel   = linear decoder over H_fm                     (sum(D) x mels)
//
// Full-scale systems put transformer stacks around this; here an embedding
// table and a linear decoder stand in for them, which exercises every
// conditioning mechanism at a size a laptop trains in seconds. The
// duration head works in log-domain: training regresses log durations,
// inference takes exp, rounds, and clamps to [1, max_duration].

#ifndef ACCENTKIT_RENDERER_HPP_
#define ACCENTKIT_RENDERER_HPP_

#include <cstdint>
#include <iosfwd>
#include <span>
#include <vector>

#include "accentkit/tensorlet.hpp"
#include "accentkit/types.hpp"

namespace accentkit {

struct RendererConfig {
  int phoneme_vocab = 0;
  int embed_dim = 256;      // d_ph
  int intensity_dim = 256;  // d_i
  int predictor_hidden = 64;
  int mel_channels = 80;
  int max_duration = 50;  // frames; duration predictions clamp to [1, this]

  int concat_dim() const { return embed_dim + intensity_dim; }
  // Throws std::invalid_argument unless every field is positive.
  void validate() const;
};

// 2-layer perceptron with a ReLU between the layers.
struct Mlp {
  Mlp() = default;
  Mlp(int in_dim, int hidden_dim, int out_dim, std::uint64_t seed1,
      std::uint64_t seed2);

  Matrix apply(const Matrix& x) const;
  Matrix forward(const Matrix& x);
  Matrix backward(const Matrix& grad_out);
  void zero_grad();

  LinearLayer l1;
  LinearLayer l2;

 private:
  Matrix pre_activation_;
  bool has_cached_ = false;
};

struct RendererParams {
  RendererConfig config;
  EmbeddingTable phoneme_embedding;  // V x d_ph
  LinearLayer intensity_encoder;     // 1 -> d_i
  Mlp pitch_predictor;               // d_ph+d_i -> hidden -> 1
  Mlp energy_predictor;
  Mlp duration_predictor;            // predicts log-duration
  LinearLayer pitch_projection;      // 1 -> d_ph+d_i
  LinearLayer energy_projection;
  LinearLayer decoder;               // d_ph+d_i -> mel_channels

  // Deterministic: component seeds are drawn from one SplitMix64 stream
  // seeded with `seed`, in declaration order above.
  static RendererParams init(const RendererConfig& config, std::uint64_t seed);

  // Views over every trainable tensor, fixed order, stable names (the
  // same names the checkpoint uses).
  std::vector<ParamRef> parameters();
  void zero_grad();

  // Tensorlet checkpoint round-trip. load() reconstructs the config from
  // tensor shapes and validates cross-tensor consistency.
  void save(std::ostream& out) const;
  static RendererParams load(std::istream& in);
};

struct RenderOutput {
  Vector pitch;                // n
  Vector energy;               // n
  std::vector<int> durations;  // n, each in [1, max_duration]
  Matrix frame_embeddings;     // sum(durations) x (d_ph+d_i)
  Matrix mel;                  // sum(durations) x mel_channels
};

// Row t = embedding row for ids[t]. Throws std::out_of_range on id >= V.
Matrix encode_phonemes(std::span<const int> ids, const RendererParams& params);

// Row t = intensity encoder applied to [scores[t]]. Scores must lie in
// [0,1]; throws std::out_of_range otherwise.
Matrix encode_intensity(std::span<const double> scores,
                        const RendererParams& params);

// Repeats row t of h durations[t] times, preserving order. Throws
// std::invalid_argument on length mismatch or a duration < 1.
Matrix length_regulate(const Matrix& h, std::span<const int> durations);

// Full inference pass; pure. n = 0 yields empty outputs. Throws
// std::invalid_argument on |ids| != |scores|, std::out_of_range on a bad
// id or score.
RenderOutput render(std::span<const int> ids, std::span<const double> scores,
                    const RendererParams& params);

// Synthetic training data: per phoneme, targets are affine in the
// intensity score plus bounded seeded noise.
struct ToyUtterance {
  std::vector<int> ids;
  std::vector<double> intensity;
  std::vector<double> target_pitch;
  std::vector<double> target_energy;
  std::vector<int> target_duration;  // frames, >= 1
};

struct ToyCorpus {
  std::vector<ToyUtterance> utterances;
  std::size_t total_phonemes() const;
};

// Deterministic given (seed, n_utts, config). Utterance lengths are 3..8;
// ids uniform over the vocab; intensity i ~ U(0,1);
//   pitch*    = 100 + 60 i + U(-2, 2)
//   energy*   = 0.3 + 0.5 i + U(-0.02, 0.02)
//   duration* = 5 + round(4 i) + jitter in {-1, 0, 1}
// The energy noise is scaled to the energy range so the trend stays
// recoverable; everything else follows the pitch recipe.
ToyCorpus synth_corpus(std::uint64_t seed, int n_utts,
                       const RendererConfig& config);

struct TrainResult {
  RendererParams params;
  std::vector<double> epoch_losses;  // per-epoch corpus-mean loss
};

// Full-batch gradient descent on the summed MSE of the pitch, energy, and
// log-duration heads. Targets are standardized internally for
// conditioning; after the last epoch the standardization is folded back
// into the head output layers, so the returned predictors emit
// target-scale values. epochs = 0 returns the seeded initialization
// unchanged. Throws std::runtime_error if the loss goes non-finite
// (divergence; lower the learning rate).
TrainResult train_toy(const ToyCorpus& corpus, const RendererConfig& config,
                      int epochs, double learning_rate, std::uint64_t seed);

// One batch of inputs and targets for gradient verification. Durations
// are teacher-forced so the loss stays differentiable (inference rounds
// them, which has no useful gradient).
struct ProbeBatch {
  std::vector<int> ids;
  std::vector<double> scores;
  std::vector<int> durations;
  Matrix target_pitch;         // n x 1
  Matrix target_energy;        // n x 1
  Matrix target_log_duration;  // n x 1
  Matrix target_mel;           // sum(durations) x mel_channels
};

// Deterministic random batch of n phonemes for the given config.
ProbeBatch make_probe_batch(const RendererConfig& config, std::uint64_t seed,
                            int n);

// Composite loss (pitch + energy + log-duration + mel MSE, mel through the
// length regulator and decoder) touching every parameter tensor. With
// accumulate_grads, runs the hand-written backward pass into the gradient
// buffers; pass false for the pure evaluations a finite-difference check
// needs.
double probe_loss(RendererParams& params, const ProbeBatch& batch,
                  bool accumulate_grads);

// Spearman rank correlation with average-rank tie handling. Requires
// equal sizes >= 2; returns 0 when either side is constant.
double spearman(std::span<const double> a, std::span<const double> b);

}  // namespace accentkit

#endif  // ACCENTKIT_RENDERER_HPP_
