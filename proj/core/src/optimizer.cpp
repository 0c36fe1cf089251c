// Copyright 2026 The AnyFace Lab Authors
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

#include "anyface/optimizer.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "anyface/errors.hpp"

namespace anyface {

AdamOptimizer::AdamOptimizer(std::vector<Tensor> parameters,
                             const AdamConfig& config)
    : parameters_(std::move(parameters)), config_(config) {
  if (config_.learning_rate <= 0.0) {
    throw ConfigError("learning rate must be positive");
  }
  if (config_.beta1 < 0.0 || config_.beta1 >= 1.0 || config_.beta2 < 0.0 ||
      config_.beta2 >= 1.0) {
    throw ConfigError("Adam betas must lie in [0, 1)");
  }
  if (parameters_.empty()) throw ConfigError("optimizer needs parameters");
  m_.reserve(parameters_.size());
  v_.reserve(parameters_.size());
  for (const Tensor& p : parameters_) {
    if (!p.requires_grad()) {
      throw ConfigError("optimizer handed a frozen parameter");
    }
    m_.emplace_back(static_cast<std::size_t>(p.numel()), 0.0);
    v_.emplace_back(static_cast<std::size_t>(p.numel()), 0.0);
  }
}

void AdamOptimizer::zero_grad() {
  for (Tensor& p : parameters_) p.zero_grad();
}

std::vector<double> AdamOptimizer::flattened_m() const {
  std::vector<double> out;
  for (const auto& m : m_) out.insert(out.end(), m.begin(), m.end());
  return out;
}

std::vector<double> AdamOptimizer::flattened_v() const {
  std::vector<double> out;
  for (const auto& v : v_) out.insert(out.end(), v.begin(), v.end());
  return out;
}

void AdamOptimizer::restore(const std::vector<double>& m,
                            const std::vector<double>& v, std::int64_t t) {
  std::size_t total = 0;
  for (const auto& b : m_) total += b.size();
  if (m.size() != total || v.size() != total) {
    throw InputError("optimizer state length mismatch: expected " +
                     std::to_string(total) + " values");
  }
  std::size_t pos = 0;
  for (std::size_t i = 0; i < m_.size(); ++i) {
    std::copy(m.begin() + pos, m.begin() + pos + m_[i].size(), m_[i].begin());
    std::copy(v.begin() + pos, v.begin() + pos + v_[i].size(), v_[i].begin());
    pos += m_[i].size();
  }
  t_ = t;
}

void AdamOptimizer::step() {
  ++t_;
  const double bc1 = 1.0 - std::pow(config_.beta1, static_cast<double>(t_));
  const double bc2 = 1.0 - std::pow(config_.beta2, static_cast<double>(t_));
  for (std::size_t i = 0; i < parameters_.size(); ++i) {
    Tensor& p = parameters_[i];
    if (!p.has_grad()) {
      throw NumericError("optimizer step " + std::to_string(t_) +
                         ": parameter " + std::to_string(i) +
                         " has no gradient");
    }
    const double* g = p.grad().data();
    double* x = p.mutable_data().data();
    std::vector<double>& m = m_[i];
    std::vector<double>& v = v_[i];
    const std::int64_t n = p.numel();
    for (std::int64_t k = 0; k < n; ++k) {
      m[k] = config_.beta1 * m[k] + (1.0 - config_.beta1) * g[k];
      v[k] = config_.beta2 * v[k] + (1.0 - config_.beta2) * g[k] * g[k];
      const double mhat = m[k] / bc1;
      const double vhat = v[k] / bc2;
      x[k] -= config_.learning_rate * mhat /
              (std::sqrt(vhat) + config_.epsilon);
    }
  }
}

}  // namespace anyface
