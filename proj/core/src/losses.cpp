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

#include "anyface/losses.hpp"

#include <cmath>
#include <string>

#include "anyface/errors.hpp"

namespace anyface {
namespace {

void check_same_numel(const Tensor& a, const Tensor& b, const char* what) {
  if (a.shape() != b.shape()) {
    throw ShapeError(std::string(what) + ": operands must share a shape");
  }
}

void check_weights(const LossWeights& w) {
  for (double v : {w.lambda_cmt, w.lambda_clip, w.lambda_rec, w.margin}) {
    if (!(v >= 0.0) || !std::isfinite(v)) {
      throw ConfigError("loss weights must be finite and non-negative");
    }
  }
}

}  // namespace

Tensor cmt_loss(const Tensor& h_student, const Tensor& h_target) {
  check_same_numel(h_student, h_target, "cmt_loss");
  Tensor p = softmax(reshape(h_student, {h_student.numel()}));
  Tensor q = softmax(reshape(h_target.detach(), {h_target.numel()}));
  return kl_divergence(p, q);
}

Tensor pair_loss(const Tensor& w_t, const Tensor& w, int order) {
  check_same_numel(w_t, w, "pair_loss");
  Tensor d = sub(w_t, w);
  if (order == 1) return mean(abs_t(d));
  if (order == 2) return mean(mul(d, d));
  throw ConfigError("pair_loss order must be 1 or 2, got " +
                    std::to_string(order));
}

Tensor dt_loss(const Tensor& w_t, const Tensor& w_neg, const Tensor& w,
               const Tensor& w_avg, double margin,
               TripletOrientation orientation) {
  if (margin < 0.0 || !std::isfinite(margin)) {
    throw ConfigError("triplet margin must be non-negative and finite");
  }
  check_same_numel(w_t, w, "dt_loss");
  check_same_numel(w_neg, w, "dt_loss");
  check_same_numel(w_avg, w, "dt_loss");

  Tensor ratio_pos = div(cosine_similarity(w_t, w),
                         add_scalar(cosine_similarity(w_t, w_avg),
                                    kCosineEps));
  Tensor ratio_neg = div(cosine_similarity(w_neg, w),
                         add_scalar(cosine_similarity(w_neg, w_avg),
                                    kCosineEps));
  Tensor gap = orientation == TripletOrientation::kProse
                   ? sub(ratio_neg, ratio_pos)
                   : sub(ratio_pos, ratio_neg);
  return relu(add_scalar(gap, margin));
}

Tensor clip_loss(const Tensor& f_text, const Tensor& f_image) {
  check_same_numel(f_text, f_image, "clip_loss");
  return add_scalar(mul_scalar(cosine_similarity(f_text, f_image), -1.0),
                    1.0);
}

Tensor rec_loss(const Tensor& reconstruction, const Tensor& target) {
  check_same_numel(reconstruction, target, "rec_loss");
  return mean(abs_t(sub(reconstruction, target)));
}

Tensor mse_loss(const Tensor& predicted, const Tensor& target) {
  check_same_numel(predicted, target, "mse_loss");
  Tensor d = sub(predicted, target);
  return mean(mul(d, d));
}

Tensor synthesis_objective(const Tensor& dt, const Tensor& cmt,
                           const Tensor& clip, const LossWeights& weights) {
  check_weights(weights);
  return add(dt, add(mul_scalar(cmt, weights.lambda_cmt),
                     mul_scalar(clip, weights.lambda_clip)));
}

Tensor reconstruction_objective(const Tensor& mse, const Tensor& cmt,
                                const Tensor& rec,
                                const LossWeights& weights) {
  check_weights(weights);
  return add(mse, add(mul_scalar(cmt, weights.lambda_cmt),
                      mul_scalar(rec, weights.lambda_rec)));
}

}  // namespace anyface
