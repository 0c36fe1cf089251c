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

#include "anyface/metrics.hpp"

#include <atomic>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <thread>

#include <nlohmann/json.hpp>

#include "anyface/errors.hpp"
#include "anyface/plot.hpp"
#include "anyface/rng.hpp"

namespace anyface {
namespace {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

// Accepts 1 x d rows or flat length-d tensors; returns d.
std::int64_t feature_dim(const Tensor& t) {
  if (t.rank() == 2 && t.rows() == 1) return t.cols();
  if (t.rank() == 1) return t.numel();
  throw ShapeError("features must be single rows (1 x d)");
}

// Gaussian moments of a feature set: mean (d) and covariance (d x d,
// unbiased, with diagonal jitter).
void fit_gaussian(const std::vector<Tensor>& rows, std::vector<double>* mu,
                  std::vector<double>* cov) {
  const auto n = static_cast<std::int64_t>(rows.size());
  const std::int64_t d = feature_dim(rows.front());
  if (n < d + 1) {
    throw InputError("Frechet distance needs at least d + 1 = " +
                     std::to_string(d + 1) + " samples per set, got " +
                     std::to_string(n));
  }
  mu->assign(static_cast<std::size_t>(d), 0.0);
  for (const Tensor& r : rows) {
    if (feature_dim(r) != d) {
      throw ShapeError("feature rows disagree in dimension");
    }
    for (std::int64_t j = 0; j < d; ++j) {
      (*mu)[static_cast<std::size_t>(j)] +=
          r.data()[static_cast<std::size_t>(j)];
    }
  }
  for (double& v : *mu) v /= static_cast<double>(n);

  cov->assign(static_cast<std::size_t>(d * d), 0.0);
  std::vector<double> centered(static_cast<std::size_t>(d));
  for (const Tensor& r : rows) {
    for (std::int64_t j = 0; j < d; ++j) {
      centered[static_cast<std::size_t>(j)] =
          r.data()[static_cast<std::size_t>(j)] -
          (*mu)[static_cast<std::size_t>(j)];
    }
    for (std::int64_t i = 0; i < d; ++i) {
      for (std::int64_t j = i; j < d; ++j) {
        (*cov)[static_cast<std::size_t>(i * d + j)] +=
            centered[static_cast<std::size_t>(i)] *
            centered[static_cast<std::size_t>(j)];
      }
    }
  }
  for (std::int64_t i = 0; i < d; ++i) {
    for (std::int64_t j = i; j < d; ++j) {
      const double v =
          (*cov)[static_cast<std::size_t>(i * d + j)] /
          static_cast<double>(n - 1);
      (*cov)[static_cast<std::size_t>(i * d + j)] = v;
      (*cov)[static_cast<std::size_t>(j * d + i)] = v;
    }
  }
  for (std::int64_t i = 0; i < d; ++i) {
    (*cov)[static_cast<std::size_t>(i * d + i)] += 1e-6;
  }
}

double trace(const Tensor& m) {
  double t = 0.0;
  for (std::int64_t i = 0; i < m.rows(); ++i) t += m.at(i, i);
  return t;
}

Tensor embed_image(const Trainer& model, const Tensor& image) {
  return model.encoders().image().encode(image).detach();
}

}  // namespace

double frechet_distance(const std::vector<Tensor>& features_a,
                        const std::vector<Tensor>& features_b) {
  if (features_a.empty() || features_b.empty()) {
    throw InputError("Frechet distance needs non-empty feature sets");
  }
  const std::int64_t d = feature_dim(features_a.front());
  if (feature_dim(features_b.front()) != d) {
    throw ShapeError("feature sets disagree in dimension");
  }

  std::vector<double> mu_a, cov_a, mu_b, cov_b;
  fit_gaussian(features_a, &mu_a, &cov_a);
  fit_gaussian(features_b, &mu_b, &cov_b);

  double mean_term = 0.0;
  for (std::int64_t j = 0; j < d; ++j) {
    const double diff = mu_a[static_cast<std::size_t>(j)] -
                        mu_b[static_cast<std::size_t>(j)];
    mean_term += diff * diff;
  }

  Tensor sa = Tensor::from_data({d, d}, cov_a);
  Tensor sb = Tensor::from_data({d, d}, cov_b);
  Tensor sa_half = matrix_sqrt_psd(sa);
  Tensor middle = matmul(matmul(sa_half, sb), sa_half);
  Tensor cross = matrix_sqrt_psd(middle);

  double fid = mean_term + trace(sa) + trace(sb) - 2.0 * trace(cross);
  if (fid < 0.0) {
    if (fid < -1e-6) {
      throw NumericError("Frechet distance computed a negative value " +
                         std::to_string(fid));
    }
    fid = 0.0;
  }
  return fid;
}

double recognition_rate(
    const std::vector<PairedSample>& gallery,
    const std::function<Tensor(const PairedSample&)>& generate,
    const std::function<Tensor(const Tensor&)>& embed) {
  if (gallery.empty()) throw InputError("recognition gallery is empty");

  const auto unit = [](const Tensor& f) {
    std::vector<double> v = f.data();
    double norm = 0.0;
    for (double x : v) norm += x * x;
    norm = std::sqrt(norm) + kCosineEps;
    for (double& x : v) x /= norm;
    return v;
  };

  std::vector<std::vector<double>> reference;
  reference.reserve(gallery.size());
  for (const PairedSample& s : gallery) {
    reference.push_back(unit(embed(s.image)));
  }

  std::size_t correct = 0;
  for (std::size_t i = 0; i < gallery.size(); ++i) {
    const std::vector<double> probe = unit(embed(generate(gallery[i])));
    std::size_t best = 0;
    double best_score = -2.0;
    for (std::size_t c = 0; c < reference.size(); ++c) {
      double dot = 0.0;
      for (std::size_t k = 0; k < probe.size(); ++k) {
        dot += probe[k] * reference[c][k];
      }
      if (dot > best_score) {
        best_score = dot;
        best = c;
      }
    }
    if (best == i) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(gallery.size());
}

double rfrr(const Trainer& model, const std::vector<PairedSample>& gallery,
            std::uint64_t style_seed) {
  return recognition_rate(
      gallery,
      [&](const PairedSample& s) {
        return model
            .synthesize({s.captions.at(0)},
                        substream(style_seed, "rfrr",
                                  static_cast<std::uint64_t>(s.id)))
            .image;
      },
      [&](const Tensor& image) { return embed_image(model, image); });
}

double mean_pairwise_distance(const std::vector<Tensor>& features) {
  const auto n = features.size();
  if (n < 2) {
    throw InputError("pairwise diversity needs at least 2 features");
  }
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      if (features[i].numel() != features[j].numel()) {
        throw ShapeError("feature rows disagree in dimension");
      }
      double sq = 0.0;
      for (std::int64_t k = 0; k < features[i].numel(); ++k) {
        const double diff = features[i].data()[static_cast<std::size_t>(k)] -
                            features[j].data()[static_cast<std::size_t>(k)];
        sq += diff * diff;
      }
      total += std::sqrt(sq);
    }
  }
  return total / (static_cast<double>(n) * static_cast<double>(n - 1) / 2.0);
}

double diversity_score(const Trainer& model, const Caption& caption,
                       int draws, std::uint64_t seed) {
  if (draws < 2) throw InputError("diversity needs at least 2 draws");
  std::vector<Tensor> features;
  features.reserve(static_cast<std::size_t>(draws));
  for (int i = 0; i < draws; ++i) {
    const auto style =
        substream(seed, "diversity", static_cast<std::uint64_t>(i));
    features.push_back(
        embed_image(model, model.synthesize({caption}, style).image));
  }
  return mean_pairwise_distance(features);
}

double toy_frechet(const Trainer& model,
                   const std::vector<PairedSample>& eval_set,
                   std::uint64_t seed) {
  std::vector<Tensor> generated, real;
  generated.reserve(eval_set.size());
  real.reserve(eval_set.size());
  for (const PairedSample& s : eval_set) {
    const auto style =
        substream(seed, "fid", static_cast<std::uint64_t>(s.id));
    generated.push_back(embed_image(
        model, model.synthesize({s.captions.at(0)}, style).image));
    real.push_back(embed_image(model, s.image));
  }
  return frechet_distance(generated, real);
}

EvalSummary evaluate_model(const Trainer& model, const Dataset& data,
                           const EvalProtocol& protocol) {
  if (protocol.fid_samples > data.size() ||
      protocol.rfrr_gallery > data.size() ||
      protocol.diversity_captions > data.size()) {
    throw InputError("evaluation protocol asks for more samples than the "
                     "dataset holds");
  }
  const std::vector<PairedSample> eval_set(
      data.samples().begin(), data.samples().begin() + protocol.fid_samples);
  const std::vector<PairedSample> gallery(
      data.samples().begin(),
      data.samples().begin() + protocol.rfrr_gallery);

  EvalSummary summary;
  summary.fid = toy_frechet(model, eval_set, protocol.seed);
  summary.rfrr = rfrr(model, gallery, protocol.seed);
  double diversity_total = 0.0;
  for (int c = 0; c < protocol.diversity_captions; ++c) {
    diversity_total += diversity_score(
        model, data.sample(c).captions.at(0), protocol.diversity_draws,
        substream(protocol.seed, "diversity.caption",
                  static_cast<std::uint64_t>(c)));
  }
  summary.diversity =
      diversity_total / static_cast<double>(protocol.diversity_captions);
  return summary;
}

std::vector<AblationVariant> standard_ablation_variants(
    const TrainConfig& base) {
  AblationVariant full{"full", base};
  full.config.use_pair_loss = false;

  AblationVariant no_cmt{"no-cmt", base};
  no_cmt.config.use_pair_loss = false;
  no_cmt.config.loss.lambda_cmt = 0.0;

  AblationVariant pairwise{"pairwise", base};
  pairwise.config.use_pair_loss = true;

  return {full, no_cmt, pairwise};
}

AblationReport run_ablation(const Dataset& data, const EncoderPair& encoders,
                            const std::vector<AblationVariant>& variants,
                            const std::vector<std::uint64_t>& seeds,
                            const EvalProtocol& protocol, int max_threads) {
  if (variants.empty() || seeds.empty()) {
    throw InputError("ablation needs at least one variant and one seed");
  }
  if (protocol.fid_samples > data.size() ||
      protocol.rfrr_gallery > data.size()) {
    throw InputError("evaluation protocol asks for more samples than the "
                     "dataset holds");
  }

  struct Job {
    std::size_t variant;
    std::uint64_t seed;
  };
  std::vector<Job> jobs;
  for (std::size_t v = 0; v < variants.size(); ++v) {
    for (std::uint64_t s : seeds) jobs.push_back({v, s});
  }

  std::vector<PairedSample> eval_set(
      data.samples().begin(), data.samples().begin() + protocol.fid_samples);
  std::vector<PairedSample> gallery(
      data.samples().begin(),
      data.samples().begin() + protocol.rfrr_gallery);

  AblationReport report;
  report.protocol = protocol;
  report.runs.resize(jobs.size());
  std::vector<std::string> failures(jobs.size());

  const auto run_job = [&](std::size_t index) {
    const Job& job = jobs[index];
    const AblationVariant& variant = variants[job.variant];
    try {
      TrainConfig config = variant.config;
      config.seed = job.seed;

      Trainer trainer(data, encoders, config);
      AblationRun run;
      run.variant = variant.name;
      run.seed = job.seed;

      const auto t0 = std::chrono::steady_clock::now();
      run.curve.push_back(
          {0, toy_frechet(trainer, eval_set, protocol.seed)});
      while (trainer.step() < config.steps) {
        const LossRecord record = trainer.train_step();
        if (record.step % protocol.curve_interval == 0 ||
            record.step == config.steps) {
          run.curve.push_back(
              {record.step, toy_frechet(trainer, eval_set, protocol.seed)});
        }
      }
      const auto t1 = std::chrono::steady_clock::now();
      run.train_seconds =
          std::chrono::duration<double>(t1 - t0).count();

      run.final_fid = run.curve.back().fid;
      run.rfrr = anyface::rfrr(trainer, gallery, protocol.seed);
      double diversity_total = 0.0;
      for (int c = 0; c < protocol.diversity_captions; ++c) {
        diversity_total += diversity_score(
            trainer, data.sample(c).captions.at(0),
            protocol.diversity_draws,
            substream(protocol.seed, "diversity.caption",
                      static_cast<std::uint64_t>(c)));
      }
      run.diversity =
          diversity_total / static_cast<double>(protocol.diversity_captions);
      report.runs[index] = std::move(run);
    } catch (const std::exception& e) {
      failures[index] = "variant '" + variant.name + "' seed " +
                        std::to_string(job.seed) + ": " + e.what();
    }
  };

  const int workers = std::max(
      1, std::min<int>(max_threads, static_cast<int>(jobs.size())));
  if (workers == 1) {
    for (std::size_t i = 0; i < jobs.size(); ++i) run_job(i);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(workers));
    for (int w = 0; w < workers; ++w) {
      pool.emplace_back([&]() {
        while (true) {
          const std::size_t i = next.fetch_add(1);
          if (i >= jobs.size()) return;
          run_job(i);
        }
      });
    }
    for (std::thread& t : pool) t.join();
  }

  for (const std::string& f : failures) {
    if (!f.empty()) throw Error("ablation run failed: " + f);
  }
  return report;
}

void write_ablation_outputs(const AblationReport& report,
                            const std::string& out_dir) {
  fs::create_directories(out_dir);

  json j;
  j["protocol"] = {{"seed", report.protocol.seed},
                   {"fid_samples", report.protocol.fid_samples},
                   {"rfrr_gallery", report.protocol.rfrr_gallery},
                   {"diversity_draws", report.protocol.diversity_draws},
                   {"diversity_captions", report.protocol.diversity_captions},
                   {"curve_interval", report.protocol.curve_interval}};
  json runs = json::array();
  for (const AblationRun& run : report.runs) {
    json r;
    r["variant"] = run.variant;
    r["seed"] = run.seed;
    r["final_fid"] = run.final_fid;
    r["rfrr"] = run.rfrr;
    r["diversity"] = run.diversity;
    r["train_seconds"] = run.train_seconds;
    json curve = json::array();
    for (const CurvePoint& p : run.curve) curve.push_back({p.step, p.fid});
    r["curve"] = std::move(curve);
    runs.push_back(std::move(r));
  }
  j["runs"] = std::move(runs);
  {
    std::ofstream out(fs::path(out_dir) / "report.json");
    out << j.dump(2) << "\n";
    if (!out) throw InputError("failed to write report.json in " + out_dir);
  }

  {
    std::ofstream out(fs::path(out_dir) / "curves.csv");
    out << "step,variant,seed,fid\n" << std::setprecision(17);
    for (const AblationRun& run : report.runs) {
      for (const CurvePoint& p : run.curve) {
        out << p.step << ',' << run.variant << ',' << run.seed << ','
            << p.fid << '\n';
      }
    }
    if (!out) throw InputError("failed to write curves.csv in " + out_dir);
  }

  std::vector<PlotSeries> series;
  for (const AblationRun& run : report.runs) {
    PlotSeries s;
    s.label = run.variant + "/" + std::to_string(run.seed);
    for (const CurvePoint& p : run.curve) {
      s.x.push_back(static_cast<double>(p.step));
      s.y.push_back(p.fid);
    }
    series.push_back(std::move(s));
  }
  write_ppm_rgb8((fs::path(out_dir) / "curves.ppm").string(),
                 render_line_chart(series, 640, 400));
}

}  // namespace anyface
