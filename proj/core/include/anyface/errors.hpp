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

#ifndef ANYFACE_ERRORS_HPP_
#define ANYFACE_ERRORS_HPP_

#include <stdexcept>
#include <string>

namespace anyface {

// Root of every error thrown by this library.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

// Shape/extent mismatch between tensors (a "dimension error").
class ShapeError : public Error {
 public:
  using Error::Error;
};

// Non-finite values, failed numeric invariants, singular linear systems.
class NumericError : public Error {
 public:
  using Error::Error;
};

// A caller-supplied value violates a precondition (counts, ranges, paths,
// malformed files, unknown vocabulary tokens, ...).
class InputError : public Error {
 public:
  using Error::Error;
};

// KL divergence support violation: q_i == 0 where p_i > 0.
class SupportError : public NumericError {
 public:
  using NumericError::NumericError;
};

// Configuration problems: unknown keys, out-of-range settings, mismatched
// artifacts (e.g. encoder checkpoint trained against a different vocabulary).
class ConfigError : public Error {
 public:
  using Error::Error;
};

// Latent recovery from an image failed.
class InversionError : public Error {
 public:
  using Error::Error;
};

// Pixels at the edge of the tanh range (atanh singularity).
class InversionRangeError : public InversionError {
 public:
  using InversionError::InversionError;
};

// Pixels outside [-1, 1]: not a decoder output at all.
class InversionDomainError : public InversionError {
 public:
  using InversionError::InversionError;
};

// Contrastive pretraining missed its retrieval bar.
class PretrainError : public Error {
 public:
  PretrainError(const std::string& what, double accuracy)
      : Error(what), accuracy_(accuracy) {}
  double accuracy() const { return accuracy_; }

 private:
  double accuracy_ = 0.0;
};

// A training loss became non-finite.
class DivergenceError : public Error {
 public:
  DivergenceError(const std::string& what, long long step)
      : Error(what), step_(step) {}
  long long step() const { return step_; }

 private:
  long long step_ = -1;
};

// The gradient verification suite found a mismatch.
class GradCheckError : public Error {
 public:
  using Error::Error;
};

}  // namespace anyface

#endif  // ANYFACE_ERRORS_HPP_
