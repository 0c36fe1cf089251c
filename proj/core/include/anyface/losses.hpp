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
//
// Training losses for the two streams.  Every function returns a scalar
// tensor on the tape; targets that must not receive gradients are detached
// internally and documented per function.

#ifndef ANYFACE_LOSSES_HPP_
#define ANYFACE_LOSSES_HPP_

#include "anyface/tensor.hpp"

namespace anyface {

// Direction of the diverse-triplet hinge.  kProse penalizes the negative
// caption's ratio exceeding the positive's, so minimizing it pushes w_t
// toward its target and away from the average; kAsWritten is the mirrored
// sign convention, kept switchable for comparison runs.  Config strings:
// "prose" / "as-written".
enum class TripletOrientation { kProse, kAsWritten };

struct LossWeights {
  double lambda_cmt = 1.0;
  double lambda_clip = 1.0;
  double lambda_rec = 1.0;
  double margin = 0.2;
  int pair_norm_order = 2;  // 1 or 2
  TripletOrientation dt_orientation = TripletOrientation::kProse;
};

// KL(softmax(h_student) || softmax(h_target)); the target side is detached,
// so gradients reach only the student stream.
Tensor cmt_loss(const Tensor& h_student, const Tensor& h_target);

// Mean entrywise |w_t - w|^order; order must be 1 or 2.
Tensor pair_loss(const Tensor& w_t, const Tensor& w, int order = 2);

// Diverse triplet loss over cosine ratios.  ratio(x) = cos(x, w) /
// (cos(x, w_avg) + eps); the kProse hinge max(ratio(w_neg) - ratio(w_t) +
// margin, 0) rewards latents that match their target while escaping the
// average; kAsWritten swaps the two ratios.  margin must be >= 0.
Tensor dt_loss(const Tensor& w_t, const Tensor& w_neg, const Tensor& w,
               const Tensor& w_avg, double margin,
               TripletOrientation orientation = TripletOrientation::kProse);

// 1 - cosine(text_features, image_features).
Tensor clip_loss(const Tensor& f_text, const Tensor& f_image);

// Mean absolute error between a decoded reconstruction and its source.
Tensor rec_loss(const Tensor& reconstruction, const Tensor& target);

// Mean squared error between predicted and inverted latents.
Tensor mse_loss(const Tensor& predicted, const Tensor& target);

// L_S = dt + lambda_cmt * cmt + lambda_clip * clip.
Tensor synthesis_objective(const Tensor& dt, const Tensor& cmt,
                           const Tensor& clip, const LossWeights& weights);

// L_T = mse + lambda_cmt * cmt + lambda_rec * rec.
Tensor reconstruction_objective(const Tensor& mse, const Tensor& cmt,
                                const Tensor& rec, const LossWeights& weights);

}  // namespace anyface

#endif  // ANYFACE_LOSSES_HPP_
