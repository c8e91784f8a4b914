// Copyright (C) 2026 The minifloat-ptq Authors
// SPDX-License-Identifier: Apache-2.0
//
// mfq: command-line front end. Exit codes: 0 success, 1 fatal error,
// 2 when a sweep finished but some configurations failed.

#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "mfq/dataset.hpp"
#include "mfq/explorer.hpp"
#include "mfq/forward.hpp"
#include "mfq/hwcost.hpp"
#include "mfq/model_io.hpp"
#include "mfq/pipeline.hpp"
#include "mfq/recipe.hpp"
#include "mfq/reference_data.hpp"

namespace {

std::string read_text(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw std::runtime_error("cannot open " + path);
  }
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

nlohmann::json read_json(const std::string& path) {
  try {
    return nlohmann::json::parse(read_text(path));
  } catch (const nlohmann::json::parse_error& e) {
    throw std::runtime_error(path + ": " + e.what());
  }
}

// Writes to `path`, or stdout when the path is empty or "-".
void emit(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text;
    return;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw std::runtime_error("cannot write " + path);
  }
  out << text;
  if (!out) {
    throw std::runtime_error("write failed: " + path);
  }
}

struct QuantizeArgs {
  std::string model, data, eval, recipe, out, calib_out;
  bool json = false;
};

int run_quantize(const QuantizeArgs& a) {
  const auto model = mfq::load_model(a.model);
  const auto calib_set = mfq::load_dataset(a.data);
  const auto recipe = mfq::recipe_from_json(read_json(a.recipe));
  const auto q = mfq::run_pipeline(model, recipe, calib_set);
  if (!a.out.empty()) {
    mfq::save_model(q.graph, a.out);
  }
  if (!a.calib_out.empty()) {
    emit(a.calib_out, mfq::calib_to_json(q.calib).dump(2) + "\n");
  }
  nlohmann::json report{{"methods", recipe.methods_tag()},
                        {"cle_groups", q.cle.groups},
                        {"smoothquant_folded", q.smoothquant.folded},
                        {"smoothquant_inserted", q.smoothquant.inserted},
                        {"rounding_fallbacks", q.rounding_fallbacks},
                        {"sites", q.calib.size()}};
  if (!a.eval.empty()) {
    const auto eval_set = mfq::load_dataset(a.eval);
    report["fp_accuracy"] = mfq::accuracy(model, eval_set);
    report["accuracy"] = mfq::accuracy(q.graph, eval_set, q.sites());
  }
  if (a.json) {
    std::cout << report.dump(2) << "\n";
  } else {
    for (const auto& [k, v] : report.items()) {
      std::cout << k << ": " << v.dump() << "\n";
    }
  }
  return 0;
}

struct CalibrateArgs {
  std::string model, data, recipe, out;
};

int run_calibrate(const CalibrateArgs& a) {
  const auto model = mfq::load_model(a.model);
  const auto calib_set = mfq::load_dataset(a.data);
  const auto recipe = mfq::recipe_from_json(read_json(a.recipe));
  const auto table = mfq::calibrate_graph(model, recipe, calib_set);
  emit(a.out, mfq::calib_to_json(table).dump(2) + "\n");
  return 0;
}

struct SweepArgs {
  std::string model, data, calib, config, out, json, pareto_out, axis = "dot_bitwidth";
  bool detail = false;
  std::optional<uint64_t> seed;
  std::optional<size_t> jobs;
};

int run_sweep(const SweepArgs& a) {
  auto spec = a.config.empty() ? mfq::SweepSpec{} : mfq::sweep_spec_from_json(read_json(a.config));
  if (a.seed) {
    spec.seed = *a.seed;
  }
  if (a.jobs) {
    spec.jobs = *a.jobs;
  }
  const auto axis = mfq::parse_cost_axis(a.axis);
  const auto model = mfq::load_model(a.model);
  const auto eval_set = mfq::load_dataset(a.data);
  const auto calib_pool = a.calib.empty() ? eval_set : mfq::load_dataset(a.calib);
  const auto calib_set = mfq::calibration_subset(calib_pool, spec.calib_samples, spec.seed);

  const auto all = mfq::run_sweep(model, calib_set, eval_set, spec);
  const auto results = a.detail ? all : mfq::best_per_bitwidth(all);
  emit(a.out, mfq::results_to_csv(results));
  if (!a.json.empty()) {
    emit(a.json, mfq::results_to_json(results).dump(2) + "\n");
  }
  if (!a.pareto_out.empty()) {
    emit(a.pareto_out, mfq::pareto_to_csv(mfq::pareto_front(mfq::pareto_points(results, axis)), axis));
  }
  size_t failed = 0;
  for (const auto& r : all) {
    if (r.failed) {
      ++failed;
      std::cerr << "config " << r.config << " failed: " << r.error << "\n";
    }
  }
  std::string fp_accuracy = "n/a";
  try {
    fp_accuracy = mfq::format_double(mfq::accuracy(model, eval_set));
  } catch (const std::exception&) {
    // Already reported per configuration; the summary stays informative.
  }
  std::cerr << all.size() << " configurations, " << failed << " failed, fp accuracy " << fp_accuracy << "\n";
  return failed ? 2 : 0;
}

struct CostArgs {
  std::string wfmt, afmt, model = "resnet18";
  uint64_t n = mfq::kDefaultDotLength;
  bool json = false;
};

int run_cost(const CostArgs& a) {
  const auto w = mfq::parse_format(a.wfmt);
  const auto x = mfq::parse_format(a.afmt);
  const auto lut_model = a.model == "none" ? std::nullopt : std::optional(mfq::parse_reference_model(a.model));
  const auto c = mfq::mac_cost(w, x, a.n, lut_model);
  if (a.json) {
    nlohmann::json j{{"weight", mfq::to_string(w)},
                     {"activation", mfq::to_string(x)},
                     {"n", a.n},
                     {"dot_bitwidth", c.dot_bitwidth},
                     {"acc_width", c.acc_width},
                     {"lut", c.lut ? nlohmann::json(*c.lut) : nlohmann::json(nullptr)}};
    std::cout << j.dump(2) << "\n";
  } else {
    std::cout << "dot_bitwidth: " << c.dot_bitwidth << "\nacc_width: " << c.acc_width << "\n";
    std::cout << "lut: " << (c.lut ? std::to_string(*c.lut) : std::string("n/a")) << "\n";
  }
  return 0;
}

struct ParetoArgs {
  std::string in, out, axis = "dot_bitwidth";
};

int run_pareto(const ParetoArgs& a) {
  const auto axis = mfq::parse_cost_axis(a.axis);
  const auto results = mfq::results_from_csv(read_text(a.in));
  emit(a.out, mfq::pareto_to_csv(mfq::pareto_front(mfq::pareto_points(results, axis)), axis));
  return 0;
}

struct ReportArgs {
  std::string reference = "resnet18", format = "csv", out;
};

int run_report(const ReportArgs& a) {
  const auto results = mfq::reference_results(mfq::parse_reference_model(a.reference));
  if (a.format == "csv") {
    emit(a.out, mfq::results_to_csv(results));
  } else if (a.format == "json") {
    emit(a.out, mfq::results_to_json(results).dump(2) + "\n");
  } else {
    throw std::invalid_argument("--format must be csv or json");
  }
  return 0;
}

struct MakeDataArgs {
  size_t count = 1000;
  uint64_t seed = 0;
  std::string out;
};

int run_make_data(const MakeDataArgs& a) {
  mfq::save_dataset(mfq::make_blob_dataset(a.count, a.seed), a.out);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Post-training quantization with minifloats and integers"};
  app.require_subcommand(1);

  QuantizeArgs qa;
  auto* quantize = app.add_subcommand("quantize", "Run the PTQ pipeline for one recipe");
  quantize->add_option("--model", qa.model, "Model file (.mqtz)")->required();
  quantize->add_option("--data", qa.data, "Calibration dataset (.mqdt)")->required();
  quantize->add_option("--recipe", qa.recipe, "Recipe JSON")->required();
  quantize->add_option("--eval", qa.eval, "Evaluation dataset; reports accuracy");
  quantize->add_option("--out", qa.out, "Quantized model output (.mqtz)");
  quantize->add_option("--calib-out", qa.calib_out, "Calibration table output (JSON)");
  quantize->add_flag("--json", qa.json, "Print the report as JSON");

  CalibrateArgs ca;
  auto* calibrate = app.add_subcommand("calibrate", "Calibrate activation ranges");
  calibrate->add_option("--model", ca.model)->required();
  calibrate->add_option("--data", ca.data)->required();
  calibrate->add_option("--recipe", ca.recipe)->required();
  calibrate->add_option("--out", ca.out, "calib.json (stdout when omitted)");

  SweepArgs sa;
  auto* sweep = app.add_subcommand("sweep", "Design-space sweep");
  sweep->add_option("--model", sa.model)->required();
  sweep->add_option("--data", sa.data, "Evaluation dataset")->required();
  sweep->add_option("--calib", sa.calib, "Calibration pool (defaults to --data)");
  sweep->add_option("--config", sa.config, "Sweep JSON");
  sweep->add_option("--out", sa.out, "Results CSV (stdout when omitted)");
  sweep->add_option("--json", sa.json, "Also write results as JSON");
  sweep->add_option("--pareto-out", sa.pareto_out, "Pareto front CSV");
  sweep->add_option("--axis", sa.axis, "dot_bitwidth, lut or acc_width");
  sweep->add_flag("--detail", sa.detail, "Keep every minifloat split instead of the best per bit-width");
  sweep->add_option("--seed", sa.seed);
  sweep->add_option("--jobs", sa.jobs);

  CostArgs co;
  auto* cost = app.add_subcommand("cost", "MAC hardware cost of a format pair");
  cost->add_option("--wfmt", co.wfmt)->required();
  cost->add_option("--afmt", co.afmt)->required();
  cost->add_option("--n", co.n, "Dot-product length");
  cost->add_option("--model", co.model, "Reference model for the LUT column, or none");
  cost->add_flag("--json", co.json);

  ParetoArgs pa;
  auto* pareto = app.add_subcommand("pareto", "Pareto front of a results CSV");
  pareto->add_option("--in", pa.in)->required();
  pareto->add_option("--axis", pa.axis, "dot_bitwidth, lut or acc_width");
  pareto->add_option("--out", pa.out);

  ReportArgs ra;
  auto* report = app.add_subcommand("report", "Render the embedded reference results");
  report->add_option("--reference", ra.reference, "resnet18, mobilenetv2 or vit_b_32");
  report->add_option("--format", ra.format, "csv or json");
  report->add_option("--out", ra.out);

  MakeDataArgs ma;
  auto* make_data = app.add_subcommand("make-data", "Write the synthetic blob dataset");
  make_data->add_option("--count", ma.count);
  make_data->add_option("--seed", ma.seed);
  make_data->add_option("--out", ma.out)->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 1;
  }

  try {
    if (*quantize) return run_quantize(qa);
    if (*calibrate) return run_calibrate(ca);
    if (*sweep) return run_sweep(sa);
    if (*cost) return run_cost(co);
    if (*pareto) return run_pareto(pa);
    if (*report) return run_report(ra);
    if (*make_data) return run_make_data(ma);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}
