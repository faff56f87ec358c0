#pragma once

// Command-line front end. Exit codes: 0 success, 1 usage error, 2 runtime error.

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <ostream>
#include <string>
#include <vector>

#include "fcgan/checkpoint.hpp"
#include "fcgan/config.hpp"
#include "fcgan/data.hpp"
#include "fcgan/eval.hpp"
#include "fcgan/gradcheck.hpp"
#include "fcgan/metrics.hpp"
#include "fcgan/trainer.hpp"

namespace fcgan {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitRuntime = 2;

namespace cli {

namespace fs = std::filesystem;

/// Writes derived/{hr,lr,bhr}/<stem>.png for every image in `corpus_dir`.
inline std::size_t materialize(const fs::path& corpus_dir, const fs::path& out_dir, std::size_t image_size) {
  const Corpus corpus(corpus_dir);
  for (const auto& id : corpus.ids()) {
    const PairRecord r = corpus.load(id, image_size);
    encode_png(denormalize(r.hr), out_dir / "derived" / "hr" / (id + ".png"));
    encode_png(denormalize(r.lr), out_dir / "derived" / "lr" / (id + ".png"));
    encode_png(denormalize(r.bhr), out_dir / "derived" / "bhr" / (id + ".png"));
  }
  return corpus.size();
}

inline std::vector<fs::path> expand_inputs(const std::vector<std::string>& inputs) {
  std::vector<fs::path> files;
  for (const auto& in : inputs) {
    if (fs::is_directory(in)) {
      const Corpus dir(in);
      for (const auto& id : dir.ids()) files.push_back(dir.path(id));
    } else {
      files.emplace_back(in);
    }
  }
  return files;
}

/// Writes one super-resolved PNG per input into `out_dir`. Inputs of a quarter
/// of the model size are treated as LR and bicubically upsampled first.
inline std::size_t infer(const fs::path& checkpoint_path, const std::vector<std::string>& inputs, const fs::path& out_dir) {
  const Checkpoint ckpt = load_checkpoint(checkpoint_path);
  const TrainState state = TrainState::from_checkpoint(ckpt, ckpt.config);
  const std::size_t size = ckpt.config.image_size;
  const auto files = expand_inputs(inputs);
  if (files.empty()) fail(ErrorKind::kValue, "infer: no input images");
  for (const auto& file : files) {
    Image img = normalize(decode_image(file));
    const std::size_t h = img.dim(1), w = img.dim(2);
    if (h == size / kUpscale && w == size / kUpscale) {
      img = bicubic_resample(img, size, size);
    } else if (h != size || w != size) {
      fail(ErrorKind::kShape, file.string() + " is " + std::to_string(h) + "x" + std::to_string(w) + "; expected " +
                                  std::to_string(size / kUpscale) + " (LR) or " + std::to_string(size) + " (BHR)");
    }
    encode_png(denormalize(generate(state, img)), out_dir / (file.stem().string() + ".png"));
  }
  return files.size();
}

inline void print_gradcheck(std::ostream& out, const std::vector<GradCheckCase>& cases) {
  for (const auto& c : cases) {
    char line[160];
    std::snprintf(line, sizeof line, "%-4s %-50s max_rel_err=%.3e worst=%s coords=%zu", c.passed() ? "PASS" : "FAIL",
                  c.name.c_str(), c.result.max_relative_error, c.result.worst_parameter.c_str(), c.result.coordinates);
    out << line << '\n';
  }
}

}  // namespace cli

/// Parses argv and dispatches to a subcommand.
inline int run_cli(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  namespace fs = std::filesystem;
  CLI::App app{"Face super-resolution with a boundary-equilibrium conditional GAN", "fcgan"};
  app.require_subcommand(1);

  std::string corpus, out_dir, config_path, resume, checkpoint, manifest_path, split = "test", grid, csv_out, manifest_out;
  std::size_t size = kDefaultImageSize;
  std::uint64_t seed = 0;
  std::uint64_t gradcheck_seed = 7;
  std::string fractions = "0.9,0.05,0.05";
  std::vector<std::string> externals, infer_args;
  bool quiet = false;

  auto* degrade_cmd = app.add_subcommand("degrade", "Materialize HR/LR/BHR PNGs under <out>/derived/");
  degrade_cmd->add_option("corpus", corpus, "Directory of PNG/JPEG images")->required();
  degrade_cmd->add_option("out", out_dir, "Output directory")->required();
  degrade_cmd->add_option("--size", size, "HR side length");

  auto* manifest_cmd = app.add_subcommand("manifest", "Write a seeded train/val/test split");
  manifest_cmd->add_option("corpus", corpus, "Directory of PNG/JPEG images")->required();
  manifest_cmd->add_option("--seed", seed, "Shuffle seed");
  manifest_cmd->add_option("--fractions", fractions, "train,val,test fractions summing to 1");
  manifest_cmd->add_option("--out", manifest_out, "Output file (default: stdout)");

  auto* train_cmd = app.add_subcommand("train", "Train from a key = value config file");
  train_cmd->add_option("config", config_path, "Config file")->required();
  train_cmd->add_option("--resume", resume, "Checkpoint to resume from");
  train_cmd->add_flag("--quiet", quiet, "Suppress per-step progress");

  auto* infer_cmd = app.add_subcommand("infer", "Super-resolve images: infer <checkpoint> <inputs...> <out-dir>");
  infer_cmd->add_option("args", infer_args, "checkpoint, one or more images or directories, output directory")
      ->required()
      ->expected(3, -1);

  auto* eval_cmd = app.add_subcommand("eval", "PSNR table for a manifest split");
  eval_cmd->add_option("checkpoint", checkpoint, "Checkpoint file")->required();
  eval_cmd->add_option("manifest", manifest_path, "Manifest file")->required();
  eval_cmd->add_option("--external", externals, "Extra method as name=dir (repeatable)");
  eval_cmd->add_option("--split", split, "train, val or test");
  eval_cmd->add_option("--corpus", corpus, "Corpus directory (default: the one recorded in the checkpoint)");
  eval_cmd->add_option("--grid", grid, "Also write a comparison grid PNG");
  eval_cmd->add_option("--out", csv_out, "Write the CSV here instead of stdout");

  auto* gradcheck_cmd = app.add_subcommand("gradcheck", "Finite-difference check of every layer primitive");
  gradcheck_cmd->add_option("--seed", gradcheck_seed, "Seed for the random test points");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp& e) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "fcgan: " << e.what() << "\n\n" << app.help();
    return kExitUsage;
  }

  try {
    if (*degrade_cmd) {
      const std::size_t n = cli::materialize(corpus, out_dir, size);
      out << "materialized " << n << " records under " << (fs::path(out_dir) / "derived").string() << '\n';
    } else if (*manifest_cmd) {
      const SplitManifest m = build_manifest(Corpus(corpus), seed, parse_fractions(fractions));
      if (manifest_out.empty()) {
        out << format_manifest(m);
      } else {
        save_manifest(m, manifest_out);
        out << "train " << m.train.size() << ", val " << m.val.size() << ", test " << m.test.size() << " -> "
            << manifest_out << '\n';
      }
    } else if (*train_cmd) {
      const TrainConfig config = load_config(config_path);
      FitOptions options;
      if (!resume.empty()) options.resume_from = fs::path(resume);
      if (!quiet) {
        options.on_step = [&out](const LossReport& r) {
          if (r.step % 10 == 0 || r.step == 1) {
            out << "step " << r.step << " L_G=" << r.l_g << " L_Dr=" << r.l_dr << " L_Df=" << r.l_df << " k=" << r.k
                << " M_c=" << r.m_c << '\n' << std::flush;
          }
        };
      }
      const FitResult result = fit(config, options);
      out << "wrote " << result.final_checkpoint.string() << " and " << result.metrics_csv.string() << '\n';
    } else if (*infer_cmd) {
      const std::vector<std::string> inputs(infer_args.begin() + 1, infer_args.end() - 1);
      const std::size_t n = cli::infer(infer_args.front(), inputs, infer_args.back());
      out << "wrote " << n << " image(s) to " << infer_args.back() << '\n';
    } else if (*eval_cmd) {
      std::vector<ExternalMethod> methods;
      for (const auto& spec : externals) {
        const auto eq = spec.find('=');
        if (eq == std::string::npos || eq == 0 || eq + 1 == spec.size()) {
          err << "fcgan: --external expects name=dir, got '" << spec << "'\n";
          return kExitUsage;
        }
        methods.push_back({spec.substr(0, eq), spec.substr(eq + 1)});
      }
      const Checkpoint ckpt = load_checkpoint(checkpoint);
      const SplitManifest m = load_manifest(manifest_path);
      const Corpus data(corpus.empty() ? ckpt.config.corpus_dir : fs::path(corpus));
      const EvalReport report = evaluate(ckpt, m.ids(parse_split(split)), data, methods);
      for (const auto& w : report.warnings) err << "warning: " << w << '\n';
      if (csv_out.empty()) {
        write_metric_rows(out, report.rows);
      } else {
        std::ofstream file(csv_out);
        write_metric_rows(file, report.rows);
        if (!file) fail(ErrorKind::kIo, "cannot write " + csv_out);
      }
      if (!grid.empty()) emit_grid(report.records, report.generated, grid);
    } else if (*gradcheck_cmd) {
      const auto start = std::chrono::steady_clock::now();
      const auto cases = run_gradcheck_suite(gradcheck_seed);
      cli::print_gradcheck(out, cases);
      const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
      const bool ok = std::all_of(cases.begin(), cases.end(), [](const GradCheckCase& c) { return c.passed(); });
      out << (ok ? "all checks below " : "FAILED: tolerance ") << kGradCheckTolerance << " (" << seconds << " s)\n";
      return ok ? kExitOk : kExitRuntime;
    }
  } catch (const std::exception& e) {
    err << "fcgan: " << e.what() << '\n';
    return kExitRuntime;
  }
  return kExitOk;
}

}  // namespace fcgan
