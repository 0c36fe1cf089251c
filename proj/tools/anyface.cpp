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
// Command-line surface for the whole pipeline.  Every command is a pure
// function of its flags: all randomness flows through seeds, so rerunning
// a command reproduces its outputs byte for byte.
//
// Exit codes: 0 success, 2 usage/validation, 3 pretraining shortfall,
// 4 divergence, 5 inversion failure, 6 verification failure.

#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "anyface/dataset.hpp"
#include "anyface/encoders.hpp"
#include "anyface/errors.hpp"
#include "anyface/gradcheck.hpp"
#include "anyface/image_io.hpp"
#include "anyface/metrics.hpp"
#include "anyface/tensor_io.hpp"
#include "anyface/trainer.hpp"
#include "anyface/vocab.hpp"
#include "anyface/world.hpp"

namespace {

using anyface::Caption;
using anyface::Dataset;
using anyface::EncoderConfig;
using anyface::EncoderPair;
using anyface::EvalProtocol;
using anyface::Tensor;
using anyface::TrainConfig;
using anyface::Trainer;
using anyface::WorldConfig;

int run_guarded(const std::function<void()>& body) {
  try {
    body();
    return 0;
  } catch (const anyface::PretrainError& e) {
    std::fprintf(stderr, "anyface: error: %s (final accuracy %.4f)\n",
                 e.what(), e.accuracy());
    return 3;
  } catch (const anyface::DivergenceError& e) {
    std::fprintf(stderr, "anyface: error: %s (step %lld)\n", e.what(),
                 e.step());
    return 4;
  } catch (const anyface::InversionError& e) {
    std::fprintf(stderr, "anyface: error: %s\n", e.what());
    return 5;
  } catch (const anyface::GradCheckError& e) {
    std::fprintf(stderr, "anyface: error: %s\n", e.what());
    return 6;
  } catch (const anyface::ConfigError& e) {
    std::fprintf(stderr, "anyface: error: %s\n", e.what());
    return 2;
  } catch (const anyface::InputError& e) {
    std::fprintf(stderr, "anyface: error: %s\n", e.what());
    return 2;
  } catch (const anyface::ShapeError& e) {
    std::fprintf(stderr, "anyface: error: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "anyface: error: %s\n", e.what());
    return 1;
  }
}

// Caption flags hold whitespace-separated vocabulary words.
Caption parse_caption(const std::string& text) {
  Caption caption;
  std::istringstream in(text);
  std::string word;
  while (in >> word) caption.tokens.push_back(anyface::token_id(word));
  if (caption.tokens.empty()) {
    throw anyface::InputError("caption is empty: '" + text + "'");
  }
  return caption;
}

void print_vocabulary() {
  const auto& words = anyface::vocabulary();
  std::printf("id\tword\tattribute\tpolarity\n");
  for (std::size_t id = 0; id < words.size(); ++id) {
    const int token = static_cast<int>(id);
    std::printf("%zu\t%s\t%s\t%s\n", id, words[id].c_str(),
                anyface::attribute_names()[static_cast<std::size_t>(
                                               anyface::token_attribute(
                                                   token))]
                    .c_str(),
                anyface::token_positive(token) ? "present" : "absent");
  }
}

// image.ppm -> image.tns (or path + ".tns" when there is no .ppm suffix).
std::string latent_path_for(const std::string& ppm_path) {
  if (ppm_path.size() > 4 &&
      ppm_path.compare(ppm_path.size() - 4, 4, ".ppm") == 0) {
    return ppm_path.substr(0, ppm_path.size() - 4) + ".tns";
  }
  return ppm_path + ".tns";
}

// Sources may be PPM renders or tensor block files (a bare image tensor or
// a whole dataset sample); for block files the uniquely image-shaped block
// is the source.  Tensor sources are exact; PPM sources carry 8-bit
// quantization, which the inversion spreads slightly across pixels.
Tensor load_source_image(const std::string& path, const anyface::World& world) {
  const anyface::Shape image_shape{world.config().image_height,
                                   world.config().image_width,
                                   world.config().image_channels};
  std::ifstream in(path, std::ios::binary);
  if (!in) throw anyface::InputError("cannot open source image " + path);
  char magic[6] = {};
  in.read(magic, 6);
  in.close();
  if (std::string(magic, 6) == "TNS v1") {
    const std::vector<Tensor> blocks = anyface::load_tns(path);
    const Tensor* image = nullptr;
    for (const Tensor& block : blocks) {
      if (block.shape() != image_shape) continue;
      if (image != nullptr) {
        throw anyface::InputError("source tensor file " + path +
                                  " holds multiple image-shaped blocks");
      }
      image = &block;
    }
    if (image == nullptr) {
      throw anyface::InputError("source tensor file " + path +
                                " holds no image-shaped block");
    }
    return *image;
  }
  Tensor image = anyface::read_ppm(path);
  if (image.shape() != image_shape) {
    throw anyface::InputError("source image dimensions do not match the "
                              "model's world");
  }
  return image;
}

int ablation_threads(std::size_t jobs) {
  unsigned hw = std::thread::hardware_concurrency();
  int threads = static_cast<int>(std::min<std::size_t>(jobs, hw > 0 ? hw : 1));
  if (const char* cap = std::getenv("ANYFACE_LAB_THREADS")) {
    const int limit = std::atoi(cap);
    if (limit < 1) {
      throw anyface::InputError(
          "ANYFACE_LAB_THREADS must be a positive integer");
    }
    threads = std::min(threads, limit);
  }
  return threads;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "anyface: two-stream text-to-face training on a synthetic world"};
  app.require_subcommand(0, 1);

  bool list_vocab = false;
  app.add_flag("--list-vocab", list_vocab,
               "print the caption vocabulary and exit");

  // ---- gen-data ----
  auto* gen = app.add_subcommand(
      "gen-data", "render a paired (latent, image, captions) dataset");
  std::uint64_t gen_seed = 7;
  std::int64_t gen_count = 0;
  std::string gen_out;
  gen->add_option("--seed", gen_seed, "world seed");
  gen->add_option("--count", gen_count, "number of samples")->required();
  gen->add_option("--out", gen_out, "output directory")->required();

  // ---- pretrain-encoders ----
  auto* pre = app.add_subcommand(
      "pretrain-encoders",
      "contrastively pretrain the text/image encoder pair, then freeze it");
  std::string pre_data, pre_out;
  pre->add_option("--data", pre_data, "dataset directory")->required();
  pre->add_option("--out", pre_out, "encoder checkpoint path (.tns)")
      ->required();

  // ---- train ----
  auto* train = app.add_subcommand(
      "train", "run alternating two-stream training from a JSON config");
  std::string train_config_path;
  bool train_no_cmt = false;
  train->add_option("--config", train_config_path, "train config JSON")
      ->required();
  train->add_flag("--no-cmt", train_no_cmt,
                  "ablation: zero the cross-stream distillation weight");

  // ---- synth ----
  auto* synth = app.add_subcommand(
      "synth", "synthesize a face from 1..10 captions");
  std::string synth_ckpt, synth_out;
  std::vector<std::string> synth_captions;
  std::uint64_t synth_style_seed = 0;
  synth->add_option("--checkpoint", synth_ckpt, "model checkpoint")
      ->required();
  synth->add_option("--caption", synth_captions,
                    "caption as whitespace-separated vocabulary words "
                    "(repeatable, 1..10)");
  synth->add_option("--style-seed", synth_style_seed,
                    "seed for the style rows");
  synth->add_option("--out", synth_out, "output image (.ppm)")->required();

  // ---- manipulate ----
  auto* manip = app.add_subcommand(
      "manipulate", "text-guided edit of an invertible source image");
  std::string manip_ckpt, manip_source, manip_caption, manip_out;
  int manip_m = 0;
  bool manip_sweep = false;
  manip->add_option("--checkpoint", manip_ckpt, "model checkpoint")
      ->required();
  manip->add_option("--source", manip_source,
                    "source image (.ppm or single-tensor .tns)")
      ->required();
  manip->add_option("--caption", manip_caption, "guiding caption")
      ->required();
  auto* m_opt = manip->add_option(
      "--m-split", manip_m,
      "caption-controlled row count (0 reproduces the source)");
  manip->add_flag("--sweep", manip_sweep,
                  "write one image per split value 0..L into --out (a "
                  "directory)")
      ->excludes(m_opt);
  manip->add_option("--out", manip_out, "output image, or directory with "
                                        "--sweep")
      ->required();

  // ---- eval ----
  auto* eval = app.add_subcommand(
      "eval", "quantitative metrics for a checkpoint");
  std::string eval_ckpt, eval_data, eval_report;
  eval->add_option("--checkpoint", eval_ckpt, "model checkpoint")
      ->required();
  eval->add_option("--data", eval_data, "evaluation dataset directory")
      ->required();
  eval->add_option("--report", eval_report, "report JSON output path")
      ->required();

  // ---- ablate ----
  auto* ablate = app.add_subcommand(
      "ablate",
      "train and evaluate config variants across seeds; one base config "
      "expands to the standard full/no-cmt/pairwise comparison");
  std::vector<std::string> ablate_configs;
  std::vector<std::uint64_t> ablate_seeds{1, 2, 3};
  std::string ablate_out;
  ablate->add_option("--configs", ablate_configs, "train config JSON paths")
      ->required();
  ablate->add_option("--seeds", ablate_seeds, "training seeds");
  ablate->add_option("--out", ablate_out, "report output directory")
      ->required();

  // ---- gradcheck ----
  auto* gradcheck = app.add_subcommand(
      "gradcheck",
      "finite-difference verification of every loss and module forward");
  int gc_points = 100;
  std::uint64_t gc_seed = 42;
  gradcheck->add_option("--points", gc_points, "random points per case");
  gradcheck->add_option("--seed", gc_seed, "suite seed");

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);  // --help and friends
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  if (list_vocab) {
    print_vocabulary();
    return 0;
  }
  if (app.get_subcommands().empty()) {
    std::cerr << app.help();
    return 2;
  }

  if (gen->parsed()) {
    return run_guarded([&] {
      if (gen_count <= 0) {
        throw anyface::InputError("count must be positive");
      }
      WorldConfig config;
      config.seed = gen_seed;
      const Dataset data = Dataset::generate(config, gen_count, gen_out);
      std::printf("wrote %lld samples to %s\n",
                  static_cast<long long>(data.size()), data.dir().c_str());
    });
  }

  if (pre->parsed()) {
    return run_guarded([&] {
      const Dataset data = Dataset::load(pre_data);
      EncoderPair encoders(EncoderConfig{}, data.world());
      encoders.pretrain(data);
      encoders.save(pre_out);
      std::printf("encoders frozen at held-out retrieval accuracy %.4f; "
                  "saved to %s\n",
                  encoders.holdout_accuracy(), pre_out.c_str());
    });
  }

  if (train->parsed()) {
    return run_guarded([&] {
      TrainConfig config = anyface::load_train_config(train_config_path);
      if (train_no_cmt) config.loss.lambda_cmt = 0.0;
      Trainer trainer(Dataset::load(config.data),
                      EncoderPair::load(config.encoders), config);
      trainer.train([](int step, const Trainer& t) {
        if (step % t.config().checkpoint_interval != 0 &&
            step != t.config().steps) {
          return;
        }
        const anyface::LossRecord& r = t.history().back();
        std::printf("step %d/%d  L_S %.6f  L_T %.6f\n", step,
                    t.config().steps, r.l_s, r.l_t);
      });
      std::printf("finished %d steps; checkpoints and losses.csv in %s\n",
                  config.steps, config.out.c_str());
    });
  }

  if (synth->parsed()) {
    return run_guarded([&] {
      if (synth_captions.empty() || synth_captions.size() > 10) {
        throw anyface::InputError(
            "between 1 and 10 --caption flags required, got " +
            std::to_string(synth_captions.size()));
      }
      std::vector<Caption> captions;
      captions.reserve(synth_captions.size());
      for (const std::string& text : synth_captions) {
        captions.push_back(parse_caption(text));
      }
      const Trainer trainer = Trainer::load_checkpoint(synth_ckpt);
      const anyface::SynthesisResult result =
          trainer.synthesize(captions, synth_style_seed);
      anyface::write_ppm(synth_out, result.image);
      const std::string latent_out = latent_path_for(synth_out);
      anyface::save_tns(latent_out, {result.latent});
      std::printf("wrote %s and %s\n", synth_out.c_str(),
                  latent_out.c_str());
    });
  }

  if (manip->parsed()) {
    return run_guarded([&] {
      const Caption caption = parse_caption(manip_caption);
      const Trainer trainer = Trainer::load_checkpoint(manip_ckpt);
      const Tensor source =
          load_source_image(manip_source, trainer.world());
      if (manip_sweep) {
        std::filesystem::create_directories(manip_out);
        const int rows = trainer.world().latent_rows();
        for (int m = 0; m <= rows; ++m) {
          const Tensor image = trainer.manipulate(source, caption, m);
          const std::string path =
              (std::filesystem::path(manip_out) /
               ("split_" + std::to_string(m) + ".ppm"))
                  .string();
          anyface::write_ppm(path, image);
        }
        std::printf("wrote %d images to %s\n", rows + 1, manip_out.c_str());
      } else {
        const Tensor image = trainer.manipulate(source, caption, manip_m);
        anyface::write_ppm(manip_out, image);
        std::printf("wrote %s\n", manip_out.c_str());
      }
    });
  }

  if (eval->parsed()) {
    return run_guarded([&] {
      const Trainer trainer =
          Trainer::load_checkpoint(eval_ckpt, eval_data);
      const EvalProtocol protocol;
      const anyface::EvalSummary summary =
          anyface::evaluate_model(trainer, trainer.dataset(), protocol);
      nlohmann::ordered_json report;
      report["fid"] = summary.fid;
      report["rfrr"] = summary.rfrr;
      report["diversity"] = summary.diversity;
      std::ofstream out(eval_report);
      if (!out) {
        throw anyface::InputError("cannot write report to " + eval_report);
      }
      out << report.dump(2) << "\n";
      std::printf("fid %.6f  rfrr %.4f  diversity %.6f  -> %s\n",
                  summary.fid, summary.rfrr, summary.diversity,
                  eval_report.c_str());
    });
  }

  if (ablate->parsed()) {
    return run_guarded([&] {
      std::vector<anyface::AblationVariant> variants;
      const TrainConfig base = anyface::load_train_config(ablate_configs[0]);
      if (ablate_configs.size() == 1) {
        variants = anyface::standard_ablation_variants(base);
      } else {
        for (const std::string& path : ablate_configs) {
          const TrainConfig config = anyface::load_train_config(path);
          if (config.data != base.data || config.encoders != base.encoders) {
            throw anyface::InputError(
                "ablation configs must share one dataset and encoder "
                "checkpoint; " +
                path + " disagrees with " + ablate_configs[0]);
          }
          variants.push_back(
              {std::filesystem::path(path).stem().string(), config});
        }
      }
      const Dataset data = Dataset::load(base.data);
      const EncoderPair encoders = EncoderPair::load(base.encoders);
      const EvalProtocol protocol;
      const std::size_t jobs = variants.size() * ablate_seeds.size();
      const int threads = ablation_threads(jobs);
      std::printf("running %zu jobs on %d threads\n", jobs, threads);
      const anyface::AblationReport report = anyface::run_ablation(
          data, encoders, variants, ablate_seeds, protocol, threads);
      anyface::write_ablation_outputs(report, ablate_out);
      std::printf("%-10s %-6s %-10s %-8s %-10s %s\n", "variant", "seed",
                  "final-fid", "rfrr", "diversity", "seconds");
      for (const anyface::AblationRun& run : report.runs) {
        std::printf("%-10s %-6llu %-10.4f %-8.4f %-10.4f %.1f\n",
                    run.variant.c_str(),
                    static_cast<unsigned long long>(run.seed), run.final_fid,
                    run.rfrr, run.diversity, run.train_seconds);
      }
      std::printf("report written to %s\n", ablate_out.c_str());
    });
  }

  if (gradcheck->parsed()) {
    return run_guarded([&] {
      const std::vector<anyface::GradSuiteCase> cases =
          anyface::run_gradient_suite(gc_points, gc_seed);
      std::vector<const anyface::GradSuiteCase*> failures;
      for (const anyface::GradSuiteCase& c : cases) {
        std::printf("[%s] %-32s max-rel %.3e  coords %lld  kinks %zu\n",
                    c.passed ? " ok " : "FAIL", c.name.c_str(),
                    c.report.max_rel_error,
                    static_cast<long long>(c.report.coords_checked),
                    c.report.kink_coords.size());
        if (!c.passed) failures.push_back(&c);
      }
      if (!failures.empty()) {
        std::string msg = "gradient verification failed:";
        for (const auto* c : failures) {
          msg += " " + c->name + " (max rel error " +
                 std::to_string(c->report.max_rel_error) + ")";
        }
        throw anyface::GradCheckError(msg);
      }
      std::printf("all %zu cases passed\n", cases.size());
    });
  }

  std::cerr << app.help();
  return 2;
}
