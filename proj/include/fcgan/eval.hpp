#pragma once

// Split-level PSNR comparison (bicubic baseline, the trained generator and any
// external method outputs) and single-image inference.

#include <filesystem>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

#include "fcgan/checkpoint.hpp"
#include "fcgan/data.hpp"
#include "fcgan/metrics.hpp"
#include "fcgan/trainer.hpp"

namespace fcgan {

struct MetricRow {
  std::string method;
  double psnr_db = 0.0;
  std::size_t count = 0;
  std::string corpus;
};

struct ExternalMethod {
  std::string name;
  std::filesystem::path dir;  // one image per id, named <id>.png/.jpg
};

struct EvalReport {
  std::vector<MetricRow> rows;
  std::vector<std::string> warnings;
  std::vector<PairRecord> records;
  std::vector<Image> generated;  // normalized generator outputs aligned with records
};

/// Runs the generator of a checkpoint on one normalized (3, S, S) BHR image.
inline Image generate(const TrainState& state, const Image& bhr) {
  return unstack_image(generator_forward(state.g_spec, state.g, stack_images({&bhr}), state.config.leaky_slope), 0);
}

inline EvalReport evaluate(const Checkpoint& checkpoint, const std::vector<std::string>& ids, const Corpus& corpus,
                           const std::vector<ExternalMethod>& externals = {}) {
  if (ids.empty()) fail(ErrorKind::kValue, "evaluation split is empty");
  const TrainState state = TrainState::from_checkpoint(checkpoint, checkpoint.config);
  const std::size_t size = checkpoint.config.image_size;
  const std::string corpus_name = corpus.dir().filename().empty() ? corpus.dir().parent_path().filename().string()
                                                                  : corpus.dir().filename().string();
  EvalReport report;
  report.records = corpus.load(ids, size);
  std::vector<double> bicubic, ours;
  for (const auto& r : report.records) {
    // HR sits on the 8-bit grid; snap away the float round trip through [-1, 1].
    const Image hr01 = quantize(denormalize(r.hr));
    bicubic.push_back(psnr(denormalize(r.bhr), hr01));
    report.generated.push_back(generate(state, r.bhr));
    ours.push_back(psnr(denormalize(report.generated.back()), hr01));
  }
  report.rows.push_back({"bicubic", mean_psnr(bicubic), ids.size(), corpus_name});
  report.rows.push_back({"ours", mean_psnr(ours), ids.size(), corpus_name});

  for (const auto& ext : externals) {
    const Corpus outputs(ext.dir);
    std::vector<double> values;
    for (const auto& r : report.records) {
      const auto ids_there = outputs.ids();
      if (!std::binary_search(ids_there.begin(), ids_there.end(), r.id)) {
        report.warnings.push_back(ext.name + ": no output for '" + r.id + "', excluded");
        continue;
      }
      const Image img = decode_image(outputs.path(r.id));
      if (img.dim(1) != size || img.dim(2) != size) {
        report.warnings.push_back(ext.name + ": '" + r.id + "' is " + std::to_string(img.dim(1)) + "x" +
                                  std::to_string(img.dim(2)) + ", expected " + std::to_string(size) + ", excluded");
        continue;
      }
      values.push_back(psnr(img, quantize(denormalize(r.hr))));
    }
    if (values.empty()) {
      report.warnings.push_back(ext.name + ": no usable outputs, row omitted");
      continue;
    }
    report.rows.push_back({ext.name, mean_psnr(values), values.size(), corpus_name});
  }
  return report;
}

inline void write_metric_rows(std::ostream& out, const std::vector<MetricRow>& rows) {
  out << "method,psnr_db,count,corpus\n";
  for (const auto& r : rows) out << r.method << ',' << format_psnr(r.psnr_db) << ',' << r.count << ',' << r.corpus << '\n';
}

}  // namespace fcgan
