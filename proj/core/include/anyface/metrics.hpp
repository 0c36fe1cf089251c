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
// Quantitative evaluation: Fréchet feature distance, identity retrieval
// rate, feature-space diversity, and the three-variant ablation harness.
// Image features throughout come from the frozen image encoder, the one
// shared stand-in feature space.

#ifndef ANYFACE_METRICS_HPP_
#define ANYFACE_METRICS_HPP_

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "anyface/tensor.hpp"
#include "anyface/trainer.hpp"

namespace anyface {

// Squared Fréchet distance between Gaussians fitted to two feature sets
// (rows of 1 x d tensors): |mu_a - mu_b|^2 + tr(Sa + Sb - 2 (Sa^1/2 Sb
// Sa^1/2)^1/2).  Each set needs at least d + 1 rows; covariances get a
// 1e-6 diagonal jitter.  Symmetric; tiny negative results (> -1e-6) clamp
// to zero.
double frechet_distance(const std::vector<Tensor>& features_a,
                        const std::vector<Tensor>& features_b);

// Identity retrieval over a gallery: for member i, `generate` renders an
// image from that member's caption, `embed` maps images to features, and
// the match is the argmax cosine against the embedded ground-truth gallery
// images.  Returns the fraction of members matched to themselves.  The
// hooks are injectable so chance-level and upper-bound oracles are
// testable.
double recognition_rate(
    const std::vector<PairedSample>& gallery,
    const std::function<Tensor(const PairedSample&)>& generate,
    const std::function<Tensor(const Tensor&)>& embed);

// recognition_rate on a trained model: caption 0 prompts each member,
// style seeds derive from style_seed and the member index.
double rfrr(const Trainer& model, const std::vector<PairedSample>& gallery,
            std::uint64_t style_seed);

// Mean pairwise L2 distance between feature rows (1 x d each); needs >= 2.
double mean_pairwise_distance(const std::vector<Tensor>& features);

// Diversity of one caption under style resampling: mean pairwise feature
// distance over `draws` syntheses with distinct style seeds.
double diversity_score(const Trainer& model, const Caption& caption,
                       int draws, std::uint64_t seed);

// Fréchet distance between generated and real images (feature space) over
// an evaluation set; each sample is prompted by its caption 0 with a
// seed-derived style.
double toy_frechet(const Trainer& model,
                   const std::vector<PairedSample>& eval_set,
                   std::uint64_t seed);

struct EvalProtocol {
  std::uint64_t seed = 9001;
  int fid_samples = 64;       // evaluation set size for toy_frechet
  int rfrr_gallery = 32;
  int diversity_draws = 8;
  int diversity_captions = 4; // captions averaged for the diversity score
  int curve_interval = 100;   // steps between toy-Frechet curve points
};

struct CurvePoint {
  int step = 0;
  double fid = 0.0;
};

struct EvalSummary {
  double fid = 0.0;
  double rfrr = 0.0;
  double diversity = 0.0;
};

// The protocol's final metrics for one model: toy-Frechet over the first
// fid_samples of `data`, retrieval over the first rfrr_gallery samples,
// and diversity averaged over the first diversity_captions prompts.
EvalSummary evaluate_model(const Trainer& model, const Dataset& data,
                           const EvalProtocol& protocol);

struct AblationRun {
  std::string variant;
  std::uint64_t seed = 0;
  std::vector<CurvePoint> curve;
  double final_fid = 0.0;
  double rfrr = 0.0;
  double diversity = 0.0;
  double train_seconds = 0.0;
};

struct AblationReport {
  std::vector<AblationRun> runs;
  EvalProtocol protocol;
};

// Named configuration variant for the ablation harness.
struct AblationVariant {
  std::string name;
  TrainConfig config;
};

// The standard three-way comparison: "full", "no-cmt" (lambda_cmt = 0),
// and "pairwise" (triplet replaced by latent regression), derived from a
// base configuration.
std::vector<AblationVariant> standard_ablation_variants(
    const TrainConfig& base);

// Trains every (variant, seed) pair and evaluates curves + final metrics.
// Jobs are independent; up to max_threads run concurrently (1 = serial;
// results are identical either way).
AblationReport run_ablation(const Dataset& data, const EncoderPair& encoders,
                            const std::vector<AblationVariant>& variants,
                            const std::vector<std::uint64_t>& seeds,
                            const EvalProtocol& protocol, int max_threads);

// report.json + curves.csv + curves.ppm under out_dir.
void write_ablation_outputs(const AblationReport& report,
                            const std::string& out_dir);

}  // namespace anyface

#endif  // ANYFACE_METRICS_HPP_
