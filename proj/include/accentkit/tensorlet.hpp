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
// A small training kernel: dense layers with hand-written backward passes,
// seeded initialization, a central-difference gradient checker, and a text
// checkpoint format. 64-bit floats throughout; the model sizes this
// project trains make speed irrelevant and the gradient checks need the
// headroom. There is no autodiff tape: the graphs are small and fixed, and
// explicit backward passes keep every gradient auditable.
//
// Layers expose two call paths:
//   apply(x)    pure, const, reentrant - inference.
//   forward(x)  caches what backward needs; backward(grad_out) then
//               returns grad wrt the input and accumulates parameter
//               gradients until zero_grad().

#ifndef ACCENTKIT_TENSORLET_HPP_
#define ACCENTKIT_TENSORLET_HPP_

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "accentkit/types.hpp"

namespace accentkit {

enum class InitScheme {
  kGlorotUniform,  // uniform(-a, a), a = sqrt(6 / (rows + cols))
  kZeros,
};

// Deterministic across runs and platforms for a given (shape, seed,
// scheme); draws come from a SplitMix64 stream in row-major order.
Matrix seeded_init(Eigen::Index rows, Eigen::Index cols, std::uint64_t seed,
                   InitScheme scheme);

// Shape-checked product. Throws std::invalid_argument on inner-dimension
// mismatch.
Matrix matmul(const Matrix& a, const Matrix& b);

Matrix relu(const Matrix& x);
Matrix relu_backward(const Matrix& x, const Matrix& grad_out);

// Rows sum to 1 within 1e-12; shift-by-max keeps the exponentials tame.
Matrix softmax_rows(const Matrix& x);
Matrix softmax_rows_backward(const Matrix& softmax_out, const Matrix& grad_out);

// Mean over all entries of the squared difference.
double mse_loss(const Matrix& pred, const Matrix& target);
Matrix mse_loss_grad(const Matrix& pred, const Matrix& target);

class LinearLayer {
 public:
  LinearLayer() = default;
  // Glorot-uniform weight, zero bias.
  LinearLayer(int in_dim, int out_dim, std::uint64_t seed);

  // x is (n x in); result (n x out) = x W^T + broadcast bias.
  Matrix apply(const Matrix& x) const;
  Matrix forward(const Matrix& x);
  Matrix backward(const Matrix& grad_out);
  void zero_grad();

  int in_dim() const { return static_cast<int>(weight.cols()); }
  int out_dim() const { return static_cast<int>(weight.rows()); }

  Matrix weight;       // out x in
  Matrix bias;         // out x 1
  Matrix weight_grad;  // accumulated
  Matrix bias_grad;

 private:
  Matrix cached_input_;
  bool has_cached_ = false;
};

class EmbeddingTable {
 public:
  EmbeddingTable() = default;
  EmbeddingTable(int vocab_size, int dim, std::uint64_t seed);

  // Row t of the result is the table row for ids[t]. Throws
  // std::out_of_range on an id outside [0, vocab).
  Matrix apply(std::span<const int> ids) const;
  Matrix forward(std::span<const int> ids);
  void backward(const Matrix& grad_out);  // scatter-adds into table_grad
  void zero_grad();

  int vocab_size() const { return static_cast<int>(table.rows()); }
  int dim() const { return static_cast<int>(table.cols()); }

  Matrix table;  // vocab x dim
  Matrix table_grad;

 private:
  std::vector<int> cached_ids_;
  bool has_cached_ = false;
};

// A named view of one parameter tensor and its gradient accumulator, for
// the gradient checker and for plain gradient-descent updates.
struct ParamRef {
  std::string name;
  Matrix* value = nullptr;
  Matrix* grad = nullptr;
};

struct GradCheckResult {
  double max_rel_error = 0.0;
  std::string worst_param;
};

// Central differences, coordinate by coordinate: perturb theta_i by +/-h,
// evaluate `loss`, and compare (f+ - f-)/(2h) against the analytic entry
// in each ParamRef's grad (which the caller computed beforehand with one
// forward/backward pass). `loss` must be a pure forward evaluation at the
// current parameter values. Relative error per coordinate is
// |analytic - numeric| / max(|analytic|, |numeric|, 1e-8). Throws
// std::runtime_error if the loss goes non-finite.
GradCheckResult finite_difference_check(const std::function<double()>& loss,
                                        std::span<const ParamRef> params,
                                        double h);

// Checkpoint stream: "TENSORLET 1" then, per tensor, a "name rows cols"
// line followed by `rows` whitespace-separated row lines. Reals use the
// shortest decimal form that parses back to the identical double (up to 17
// significant digits), so save/load round-trips are bit-exact.
struct NamedTensor {
  std::string name;
  Matrix value;
};

void write_checkpoint(std::span<const NamedTensor> tensors, std::ostream& out);
std::vector<NamedTensor> read_checkpoint(std::istream& in);

}  // namespace accentkit

#endif  // ACCENTKIT_TENSORLET_HPP_
