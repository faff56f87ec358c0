#pragma once

// Adversarial training loop: simultaneous Adam updates of the generator and
// discriminator from one shared forward pass, the k_t controller, metrics
// logging and checkpointing.

#include <chrono>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "fcgan/adam.hpp"
#include "fcgan/checkpoint.hpp"
#include "fcgan/config.hpp"
#include "fcgan/data.hpp"
#include "fcgan/loss.hpp"
#include "fcgan/metrics.hpp"
#include "fcgan/model.hpp"

namespace fcgan {

inline constexpr char kMetricsHeader[] = "step,l_g,l_dr,l_df,l_d,k,m_c,wall_ms";

/// Condition z (BHR), target x (HR) and generated y, each (N, 3, S, S).
struct TrainingBatch {
  Tensor<float> z;
  Tensor<float> x;
  Tensor<float> y;
};

/// Stacks (3, S, S) images into one (N, 3, S, S) tensor.
inline Tensor<float> stack_images(const std::vector<const Image*>& images) {
  if (images.empty()) fail(ErrorKind::kShape, "stack_images: no images");
  const Shape& s = images.front()->shape();
  Tensor<float> out({images.size(), s[0], s[1], s[2]});
  const std::size_t block = shape_size(s);
  for (std::size_t i = 0; i < images.size(); ++i) {
    if (images[i]->shape() != s) fail(ErrorKind::kShape, "stack_images: mixed image shapes");
    std::copy(images[i]->data().begin(), images[i]->data().end(), out.data().begin() + i * block);
  }
  return out;
}

/// Image i of a batched (N, C, H, W) tensor as (C, H, W).
inline Image unstack_image(const Tensor<float>& batch, std::size_t i) {
  const std::size_t block = batch.c() * batch.h() * batch.w();
  Image out({batch.c(), batch.h(), batch.w()});
  std::copy_n(batch.data().begin() + i * block, block, out.data().begin());
  return out;
}

inline TrainingBatch make_batch(const std::vector<PairRecord>& records, const std::vector<std::size_t>& indices) {
  std::vector<const Image*> z, x;
  for (std::size_t i : indices) {
    z.push_back(&records.at(i).bhr);
    x.push_back(&records.at(i).hr);
  }
  return {stack_images(z), stack_images(x), {}};
}

/// Deterministic batch composition: the training order is the concatenation
/// of per-epoch permutations, each seeded by (seed, epoch), and step t takes
/// positions [t * B, (t + 1) * B).
class BatchSampler {
 public:
  BatchSampler(std::uint64_t seed, std::size_t corpus_size, std::size_t batch_size)
      : seed_(seed), n_(corpus_size), batch_(batch_size) {
    if (n_ == 0) fail(ErrorKind::kValue, "training split is empty");
  }

  std::uint64_t epoch_of(std::int64_t step) const { return static_cast<std::uint64_t>(step) * batch_ / n_; }

  std::vector<std::size_t> indices(std::int64_t step) {
    std::vector<std::size_t> out;
    for (std::size_t b = 0; b < batch_; ++b) {
      const std::uint64_t pos = static_cast<std::uint64_t>(step) * batch_ + b;
      out.push_back(permutation(pos / n_)[pos % n_]);
    }
    return out;
  }

 private:
  const std::vector<std::size_t>& permutation(std::uint64_t epoch) {
    if (epoch != cached_epoch_ || perm_.empty()) {
      perm_.resize(n_);
      std::iota(perm_.begin(), perm_.end(), std::size_t{0});
      std::seed_seq seq{static_cast<std::uint32_t>(seed_), static_cast<std::uint32_t>(seed_ >> 32),
                        static_cast<std::uint32_t>(epoch), static_cast<std::uint32_t>(epoch >> 32)};
      std::mt19937_64 engine(seq);
      std::shuffle(perm_.begin(), perm_.end(), engine);
      cached_epoch_ = epoch;
    }
    return perm_;
  }

  std::uint64_t seed_;
  std::size_t n_;
  std::size_t batch_;
  std::uint64_t cached_epoch_ = 0;
  std::vector<std::size_t> perm_;
};

/// Everything a training run mutates.
struct TrainState {
  TrainConfig config;
  NetworkSpec g_spec;
  NetworkSpec d_spec;
  ParameterSet<float> g;
  ParameterSet<float> d;
  EquilibriumState eq;
  std::int64_t step = 0;  // completed steps

  static TrainState fresh(const TrainConfig& config) {
    TrainState s{config,
                 generator_spec(config.width_multiplier),
                 discriminator_spec(config.width_multiplier),
                 {},
                 {},
                 EquilibriumState{0.0, config.gamma, config.lambda_k, 0},
                 0};
    s.g = init_network<float>(s.g_spec, config.seed);
    s.d = init_network<float>(s.d_spec, config.seed ^ 0x9E3779B97F4A7C15ULL);
    return s;
  }

  static TrainState from_checkpoint(const Checkpoint& c, const TrainConfig& config) {
    TrainState s{config, generator_spec(config.width_multiplier), discriminator_spec(config.width_multiplier),
                 c.generator, c.discriminator, c.eq, c.step};
    if (c.config.width_multiplier != config.width_multiplier || c.config.image_size != config.image_size) {
      fail(ErrorKind::kValue, "checkpoint architecture (width " + c.config.width_multiplier.str() + ", image size " +
                                  std::to_string(c.config.image_size) + ") does not match the config");
    }
    return s;
  }

  Checkpoint checkpoint() const { return {config, step, eq, g, d}; }
};

enum class UpdateOrder { kGeneratorFirst, kDiscriminatorFirst };

/// One adversarial step on `batch`; fills batch.y and advances `state`.
///
/// Both gradients come from the same forward results before either network is
/// updated, so the update order does not affect the outcome. The report's `k`
/// is the controller value used in this step's L_D.
inline LossReport train_step(TrainingBatch& batch, TrainState& state,
                             UpdateOrder order = UpdateOrder::kGeneratorFirst) {
  const double slope = state.config.leaky_slope;
  state.g.zero_grad();
  state.d.zero_grad();

  ForwardTape<float> g_tape;
  batch.y = generator_forward(state.g_spec, state.g, batch.z, slope, &g_tape);
  const double l_g = generator_loss(batch.y, batch.x);
  network_backward(state.g_spec, state.g, g_tape, l1_mean_grad(batch.y, batch.x), slope);
  g_tape = {};

  // y enters the discriminator as data: no gradient flows back into θ_G.
  const Tensor<float> real_pair = make_pair(batch.z, batch.x);
  const Tensor<float> fake_pair = make_pair(batch.z, batch.y);
  ForwardTape<float> d_tape;
  const Tensor<float> real_rec = discriminator_forward(state.d_spec, state.d, real_pair, slope, &d_tape);
  const double l_dr = l1_mean(real_rec, real_pair);
  network_backward(state.d_spec, state.d, d_tape, l1_mean_grad(real_rec, real_pair), slope);
  const Tensor<float> fake_rec = discriminator_forward(state.d_spec, state.d, fake_pair, slope, &d_tape);
  const double l_df = l1_mean(fake_rec, fake_pair);
  if (state.eq.k != 0.0) {
    network_backward(state.d_spec, state.d, d_tape, l1_mean_grad(fake_rec, fake_pair, -state.eq.k), slope);
  }
  const double l_d = discriminator_objective(l_dr, l_df, state.eq);

  for (double v : {l_g, l_dr, l_df, l_d}) {
    if (!std::isfinite(v)) {
      fail(ErrorKind::kNonFinite, "loss diverged at step " + std::to_string(state.step + 1) + " (L_G = " +
                                      std::to_string(l_g) + ", L_Dr = " + std::to_string(l_dr) + ", L_Df = " +
                                      std::to_string(l_df) + ")");
    }
  }

  const std::int64_t t = state.step + 1;
  const AdamConfig adam = state.config.adam();
  if (order == UpdateOrder::kGeneratorFirst) {
    adam_step(state.g, t, adam);
    adam_step(state.d, t, adam);
  } else {
    adam_step(state.d, t, adam);
    adam_step(state.g, t, adam);
  }

  LossReport report{t, l_g, l_dr, l_df, l_d, state.eq.k, convergence_measure(l_dr, l_g, state.eq.gamma)};
  state.eq = equilibrium_step(state.eq, l_dr, l_g);
  state.step = t;
  return report;
}

inline std::string format_metrics_row(const LossReport& r, double wall_ms) {
  using detail::format_double;
  char wall[32];
  std::snprintf(wall, sizeof wall, "%.3f", wall_ms);
  return std::to_string(r.step) + ',' + format_double(r.l_g) + ',' + format_double(r.l_dr) + ',' +
         format_double(r.l_df) + ',' + format_double(r.l_d) + ',' + format_double(r.k) + ',' +
         format_double(r.m_c) + ',' + wall;
}

/// One parsed metrics row; wall_ms is kept separately since it is not reproducible.
struct MetricsRow {
  LossReport report;
  double wall_ms = 0.0;
};

inline std::vector<MetricsRow> read_metrics_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::kIo, "cannot open metrics log " + path.string());
  std::string line;
  if (!std::getline(in, line) || line != kMetricsHeader) {
    fail(ErrorKind::kFormat, path.string() + ": missing metrics header");
  }
  std::vector<MetricsRow> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::stringstream ss(line);
    for (std::string cell; std::getline(ss, cell, ',');) cells.push_back(cell);
    if (cells.size() != 8) fail(ErrorKind::kFormat, path.string() + ": malformed row '" + line + "'");
    MetricsRow row;
    row.report.step = std::stoll(cells[0]);
    row.report.l_g = std::stod(cells[1]);
    row.report.l_dr = std::stod(cells[2]);
    row.report.l_df = std::stod(cells[3]);
    row.report.l_d = std::stod(cells[4]);
    row.report.k = std::stod(cells[5]);
    row.report.m_c = std::stod(cells[6]);
    row.wall_ms = std::stod(cells[7]);
    rows.push_back(row);
  }
  return rows;
}

struct FitOptions {
  std::optional<std::filesystem::path> resume_from;
  /// Called after every step; used for progress output.
  std::function<void(const LossReport&)> on_step;
};

struct FitResult {
  std::filesystem::path final_checkpoint;
  std::filesystem::path metrics_csv;
  std::vector<LossReport> reports;  // steps run by this call
  TrainState state;
};

/// Mean PSNR (dB) of generator outputs against HR over `records`.
inline double generator_psnr(const TrainState& state, const std::vector<PairRecord>& records) {
  std::vector<double> values;
  for (const auto& r : records) {
    const Tensor<float> out =
        generator_forward(state.g_spec, state.g, stack_images({&r.bhr}), state.config.leaky_slope);
    values.push_back(psnr(denormalize(unstack_image(out, 0)), denormalize(r.hr)));
  }
  return mean_psnr(values);
}

/// Trains to config.max_steps. Outputs under config.output_dir:
/// metrics.csv (one row per step), val.csv (one row per completed epoch when
/// the manifest has a val split), checkpoint-<step>.fcgn every
/// checkpoint_every steps, and final.fcgn.
///
/// On resume, metrics.csv is cut back to the checkpoint's step before new rows
/// are appended. A non-finite loss aborts with an error; checkpoints already on
/// disk are left in place.
inline FitResult fit(const TrainConfig& config, const FitOptions& options = {}) {
  config.validate();
  const Corpus corpus(config.corpus_dir);
  const SplitManifest manifest = load_manifest(config.manifest);
  const std::vector<PairRecord> train = corpus.load(manifest.train, config.image_size);
  const std::vector<PairRecord> val = corpus.load(manifest.val, config.image_size);

  FitResult result;
  result.state = options.resume_from ? TrainState::from_checkpoint(load_checkpoint(*options.resume_from), config)
                                     : TrainState::fresh(config);
  TrainState& state = result.state;
  std::filesystem::create_directories(config.output_dir);
  result.metrics_csv = config.output_dir / "metrics.csv";
  const auto val_csv = config.output_dir / "val.csv";

  std::vector<std::string> kept_rows, kept_val;
  if (options.resume_from) {
    std::ifstream old(result.metrics_csv);
    std::string line;
    std::getline(old, line);
    while (std::getline(old, line)) {
      if (!line.empty() && std::stoll(line.substr(0, line.find(','))) <= state.step) kept_rows.push_back(line);
    }
    std::ifstream old_val(val_csv);
    std::getline(old_val, line);
    while (std::getline(old_val, line)) {
      const auto first = line.find(',');
      if (!line.empty() && std::stoll(line.substr(first + 1, line.find(',', first + 1))) <= state.step) {
        kept_val.push_back(line);
      }
    }
  }
  std::ofstream metrics(result.metrics_csv, std::ios::trunc);
  metrics << kMetricsHeader << '\n';
  for (const auto& row : kept_rows) metrics << row << '\n';
  std::ofstream val_log;
  if (!val.empty()) {
    val_log.open(val_csv, std::ios::trunc);
    val_log << "epoch,step,psnr_db,count\n";
    for (const auto& row : kept_val) val_log << row << '\n';
  }
  if (!metrics) fail(ErrorKind::kIo, "cannot write " + result.metrics_csv.string());

  BatchSampler sampler(config.seed, train.size(), config.batch_size);
  while (state.step < config.max_steps) {
    const auto start = std::chrono::steady_clock::now();
    TrainingBatch batch = make_batch(train, sampler.indices(state.step));
    const LossReport report = train_step(batch, state);
    const double wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
    metrics << format_metrics_row(report, wall_ms) << '\n' << std::flush;
    result.reports.push_back(report);
    if (options.on_step) options.on_step(report);

    const std::uint64_t epoch_before = sampler.epoch_of(state.step - 1);
    const std::uint64_t epoch_after = sampler.epoch_of(state.step);
    if (!val.empty() && epoch_after > epoch_before) {
      val_log << epoch_after << ',' << state.step << ',' << format_psnr(generator_psnr(state, val)) << ','
              << val.size() << '\n'
              << std::flush;
    }
    if (config.checkpoint_every > 0 && state.step % config.checkpoint_every == 0) {
      save_checkpoint(config.output_dir / ("checkpoint-" + std::to_string(state.step) + ".fcgn"), state.checkpoint());
    }
  }
  result.final_checkpoint = config.output_dir / "final.fcgn";
  save_checkpoint(result.final_checkpoint, state.checkpoint());
  return result;
}

}  // namespace fcgan
