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

#include "accentkit/tensorlet.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <istream>
#include <ostream>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "accentkit/prng.hpp"

namespace accentkit {

namespace {

std::string shape_str(const Matrix& m) {
  return std::to_string(m.rows()) + "x" + std::to_string(m.cols());
}

void require_same_shape(const char* op, const Matrix& a, const Matrix& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw std::invalid_argument(std::string(op) + ": shape mismatch (" +
                                shape_str(a) + " vs " + shape_str(b) + ")");
  }
}

void require_nonempty(const char* op, const Matrix& m) {
  if (m.size() == 0) {
    throw std::invalid_argument(std::string(op) + ": empty input");
  }
}

}  // namespace

Matrix seeded_init(Eigen::Index rows, Eigen::Index cols, std::uint64_t seed,
                   InitScheme scheme) {
  if (rows <= 0 || cols <= 0) {
    throw std::invalid_argument("seeded_init: dimensions must be positive");
  }
  if (scheme == InitScheme::kZeros) {
    return Matrix::Zero(rows, cols);
  }
  const double a = std::sqrt(6.0 / static_cast<double>(rows + cols));
  SplitMix64 rng(seed);
  Matrix m(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r) {
    for (Eigen::Index c = 0; c < cols; ++c) {
      m(r, c) = a * (2.0 * rng.next_unit() - 1.0);
    }
  }
  return m;
}

Matrix matmul(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.rows()) {
    throw std::invalid_argument("matmul: inner dimensions mismatch (" +
                                shape_str(a) + " * " + shape_str(b) + ")");
  }
  return a * b;
}

Matrix relu(const Matrix& x) {
  require_nonempty("relu", x);
  return x.cwiseMax(0.0);
}

// Subgradient 0 at exactly 0; negative pre-activations pass nothing back.
Matrix relu_backward(const Matrix& x, const Matrix& grad_out) {
  require_nonempty("relu_backward", x);
  require_same_shape("relu_backward", x, grad_out);
  return ((x.array() > 0.0).cast<double>() * grad_out.array()).matrix();
}

Matrix softmax_rows(const Matrix& x) {
  require_nonempty("softmax_rows", x);
  const Eigen::ArrayXd row_max = x.rowwise().maxCoeff().array();
  Matrix e = (x.array().colwise() - row_max).exp().matrix();
  const Eigen::ArrayXd sums = e.rowwise().sum().array();
  return (e.array().colwise() / sums).matrix();
}

// dL/dx_j = y_j * (g_j - sum_k g_k y_k), per row.
Matrix softmax_rows_backward(const Matrix& softmax_out,
                             const Matrix& grad_out) {
  require_nonempty("softmax_rows_backward", softmax_out);
  require_same_shape("softmax_rows_backward", softmax_out, grad_out);
  const Eigen::ArrayXd dot =
      (softmax_out.array() * grad_out.array()).rowwise().sum();
  return (softmax_out.array() * (grad_out.array().colwise() - dot)).matrix();
}

double mse_loss(const Matrix& pred, const Matrix& target) {
  require_nonempty("mse_loss", pred);
  require_same_shape("mse_loss", pred, target);
  const double n = static_cast<double>(pred.size());
  return (pred - target).squaredNorm() / n;
}

Matrix mse_loss_grad(const Matrix& pred, const Matrix& target) {
  require_nonempty("mse_loss_grad", pred);
  require_same_shape("mse_loss_grad", pred, target);
  const double n = static_cast<double>(pred.size());
  return (2.0 / n) * (pred - target);
}

LinearLayer::LinearLayer(int in_dim, int out_dim, std::uint64_t seed) {
  if (in_dim <= 0 || out_dim <= 0) {
    throw std::invalid_argument("LinearLayer: dimensions must be positive");
  }
  weight = seeded_init(out_dim, in_dim, seed, InitScheme::kGlorotUniform);
  bias = Matrix::Zero(out_dim, 1);
  zero_grad();
}

Matrix LinearLayer::apply(const Matrix& x) const {
  if (x.cols() != weight.cols()) {
    throw std::invalid_argument("LinearLayer::apply: input has " +
                                std::to_string(x.cols()) + " cols, expected " +
                                std::to_string(weight.cols()));
  }
  Matrix out = x * weight.transpose();
  out.rowwise() += bias.col(0).transpose();
  return out;
}

Matrix LinearLayer::forward(const Matrix& x) {
  Matrix out = apply(x);
  cached_input_ = x;
  has_cached_ = true;
  return out;
}

Matrix LinearLayer::backward(const Matrix& grad_out) {
  if (!has_cached_) {
    throw std::logic_error("LinearLayer::backward called before forward");
  }
  if (grad_out.rows() != cached_input_.rows() ||
      grad_out.cols() != weight.rows()) {
    throw std::invalid_argument("LinearLayer::backward: grad_out is " +
                                shape_str(grad_out) + ", expected " +
                                std::to_string(cached_input_.rows()) + "x" +
                                std::to_string(weight.rows()));
  }
  weight_grad += grad_out.transpose() * cached_input_;
  bias_grad += grad_out.colwise().sum().transpose();
  return grad_out * weight;
}

void LinearLayer::zero_grad() {
  weight_grad = Matrix::Zero(weight.rows(), weight.cols());
  bias_grad = Matrix::Zero(bias.rows(), bias.cols());
}

EmbeddingTable::EmbeddingTable(int vocab_size, int dim, std::uint64_t seed) {
  if (vocab_size <= 0 || dim <= 0) {
    throw std::invalid_argument("EmbeddingTable: dimensions must be positive");
  }
  table = seeded_init(vocab_size, dim, seed, InitScheme::kGlorotUniform);
  zero_grad();
}

Matrix EmbeddingTable::apply(std::span<const int> ids) const {
  Matrix out(static_cast<Eigen::Index>(ids.size()), table.cols());
  for (std::size_t t = 0; t < ids.size(); ++t) {
    if (ids[t] < 0 || ids[t] >= table.rows()) {
      throw std::out_of_range("EmbeddingTable: id " + std::to_string(ids[t]) +
                              " outside [0, " + std::to_string(table.rows()) +
                              ")");
    }
    out.row(static_cast<Eigen::Index>(t)) = table.row(ids[t]);
  }
  return out;
}

Matrix EmbeddingTable::forward(std::span<const int> ids) {
  Matrix out = apply(ids);
  cached_ids_.assign(ids.begin(), ids.end());
  has_cached_ = true;
  return out;
}

void EmbeddingTable::backward(const Matrix& grad_out) {
  if (!has_cached_) {
    throw std::logic_error("EmbeddingTable::backward called before forward");
  }
  if (grad_out.rows() != static_cast<Eigen::Index>(cached_ids_.size()) ||
      grad_out.cols() != table.cols()) {
    throw std::invalid_argument("EmbeddingTable::backward: grad_out is " +
                                shape_str(grad_out) + ", expected " +
                                std::to_string(cached_ids_.size()) + "x" +
                                std::to_string(table.cols()));
  }
  for (std::size_t t = 0; t < cached_ids_.size(); ++t) {
    table_grad.row(cached_ids_[t]) +=
        grad_out.row(static_cast<Eigen::Index>(t));
  }
}

void EmbeddingTable::zero_grad() {
  table_grad = Matrix::Zero(table.rows(), table.cols());
}

GradCheckResult finite_difference_check(const std::function<double()>& loss,
                                        std::span<const ParamRef> params,
                                        double h) {
  if (!(h > 0.0)) {
    throw std::invalid_argument("finite_difference_check: h must be positive");
  }
  // Analytic gradients are snapshotted up front: re-evaluating `loss` with
  // perturbed parameters must not disturb what we compare against.
  std::vector<Matrix> analytic;
  analytic.reserve(params.size());
  for (const ParamRef& p : params) {
    if (p.value == nullptr || p.grad == nullptr) {
      throw std::invalid_argument("finite_difference_check: null param '" +
                                  p.name + "'");
    }
    if (p.value->rows() != p.grad->rows() ||
        p.value->cols() != p.grad->cols()) {
      throw std::invalid_argument(
          "finite_difference_check: grad shape mismatch for '" + p.name + "'");
    }
    analytic.push_back(*p.grad);
  }

  GradCheckResult result;
  for (std::size_t i = 0; i < params.size(); ++i) {
    Matrix& value = *params[i].value;
    for (Eigen::Index r = 0; r < value.rows(); ++r) {
      for (Eigen::Index c = 0; c < value.cols(); ++c) {
        const double orig = value(r, c);
        value(r, c) = orig + h;
        const double f_plus = loss();
        value(r, c) = orig - h;
        const double f_minus = loss();
        value(r, c) = orig;
        if (!std::isfinite(f_plus) || !std::isfinite(f_minus)) {
          throw std::runtime_error(
              "finite_difference_check: non-finite loss at '" +
              params[i].name + "'");
        }
        const double numeric = (f_plus - f_minus) / (2.0 * h);
        const double a = analytic[i](r, c);
        if (!std::isfinite(a)) {
          throw std::runtime_error(
              "finite_difference_check: non-finite analytic gradient at '" +
              params[i].name + "'");
        }
        const double rel = std::abs(a - numeric) /
                           std::max({std::abs(a), std::abs(numeric), 1e-8});
        if (rel > result.max_rel_error) {
          result.max_rel_error = rel;
          result.worst_param = params[i].name;
        }
      }
    }
  }
  return result;
}

namespace {

std::string format_real17(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

std::vector<std::string> split_ws(const std::string& line) {
  std::vector<std::string> tokens;
  std::istringstream iss(line);
  std::string tok;
  while (iss >> tok) tokens.push_back(tok);
  return tokens;
}

[[noreturn]] void ckpt_error(int line, const std::string& what) {
  throw std::runtime_error("checkpoint line " + std::to_string(line) + ": " +
                           what);
}

// Pulls the next non-blank line; returns false on clean EOF.
bool next_line(std::istream& in, std::string& line, int& line_number) {
  while (std::getline(in, line)) {
    ++line_number;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") != std::string::npos) return true;
  }
  return false;
}

int ckpt_int(const std::string& token, int line) {
  int value = 0;
  const char* first = token.data();
  const char* last = first + token.size();
  const auto res = std::from_chars(first, last, value);
  if (res.ec != std::errc() || res.ptr != last) {
    ckpt_error(line, "bad integer '" + token + "'");
  }
  return value;
}

double ckpt_real(const std::string& token, int line) {
  double value = 0.0;
  const char* first = token.data();
  const char* last = first + token.size();
  const auto res = std::from_chars(first, last, value);
  if (res.ec != std::errc() || res.ptr != last) {
    ckpt_error(line, "bad real '" + token + "'");
  }
  return value;
}

}  // namespace

void write_checkpoint(std::span<const NamedTensor> tensors,
                      std::ostream& out) {
  std::set<std::string> seen;
  for (const NamedTensor& t : tensors) {
    if (t.name.empty() ||
        t.name.find_first_of(" \t\r\n") != std::string::npos) {
      throw std::invalid_argument("write_checkpoint: bad tensor name '" +
                                  t.name + "'");
    }
    if (!seen.insert(t.name).second) {
      throw std::invalid_argument("write_checkpoint: duplicate tensor '" +
                                  t.name + "'");
    }
    if (t.value.rows() <= 0 || t.value.cols() <= 0) {
      throw std::invalid_argument("write_checkpoint: empty tensor '" + t.name +
                                  "'");
    }
    if (!t.value.allFinite()) {
      throw std::invalid_argument("write_checkpoint: non-finite entry in '" +
                                  t.name + "'");
    }
  }
  out << "TENSORLET 1\n";
  for (const NamedTensor& t : tensors) {
    out << t.name << ' ' << t.value.rows() << ' ' << t.value.cols() << '\n';
    for (Eigen::Index r = 0; r < t.value.rows(); ++r) {
      for (Eigen::Index c = 0; c < t.value.cols(); ++c) {
        if (c > 0) out << ' ';
        out << format_real17(t.value(r, c));
      }
      out << '\n';
    }
  }
  if (!out) {
    throw std::runtime_error("write_checkpoint: stream write failed");
  }
}

std::vector<NamedTensor> read_checkpoint(std::istream& in) {
  std::string line;
  int line_number = 0;
  if (!next_line(in, line, line_number)) {
    throw std::runtime_error("checkpoint: empty stream");
  }
  if (split_ws(line) != std::vector<std::string>{"TENSORLET", "1"}) {
    ckpt_error(line_number, "expected header 'TENSORLET 1', got '" + line +
                                "'");
  }
  std::vector<NamedTensor> tensors;
  std::set<std::string> seen;
  while (next_line(in, line, line_number)) {
    const std::vector<std::string> header = split_ws(line);
    if (header.size() != 3) {
      ckpt_error(line_number, "expected 'name rows cols', got '" + line + "'");
    }
    NamedTensor t;
    t.name = header[0];
    const int rows = ckpt_int(header[1], line_number);
    const int cols = ckpt_int(header[2], line_number);
    if (rows <= 0 || cols <= 0) {
      ckpt_error(line_number, "tensor '" + t.name + "' has non-positive shape");
    }
    if (!seen.insert(t.name).second) {
      ckpt_error(line_number, "duplicate tensor '" + t.name + "'");
    }
    t.value.resize(rows, cols);
    for (int r = 0; r < rows; ++r) {
      if (!next_line(in, line, line_number)) {
        throw std::runtime_error("checkpoint: unexpected end of stream in '" +
                                 t.name + "'");
      }
      const std::vector<std::string> row = split_ws(line);
      if (static_cast<int>(row.size()) != cols) {
        ckpt_error(line_number, "tensor '" + t.name + "' row has " +
                                    std::to_string(row.size()) +
                                    " entries, expected " +
                                    std::to_string(cols));
      }
      for (int c = 0; c < cols; ++c) {
        t.value(r, c) = ckpt_real(row[c], line_number);
      }
    }
    tensors.push_back(std::move(t));
  }
  return tensors;
}

}  // namespace accentkit
