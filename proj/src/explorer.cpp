// Copyright (C) 2026 The minifloat-ptq Authors
// SPDX-License-Identifier: Apache-2.0

#include "mfq/explorer.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <chrono>
#include <cmath>
#include <map>
#include <numeric>
#include <set>
#include <sstream>
#include <stdexcept>
#include <thread>
#include <tuple>

#include "mfq/forward.hpp"
#include "mfq/hwcost.hpp"
#include "mfq/pipeline.hpp"
#include "mfq/random.hpp"

namespace mfq {

namespace {

const char* const kCsvHeader =
    "config,kind,w_bits,a_bits,e_w,m_w,e_a,m_a,granularity,methods,accuracy,dot_bitwidth,acc_width,lut";

std::string short_granularity(Granularity g) { return g == Granularity::per_tensor ? "pt" : "pc"; }

// One CSV record; fields may be double-quoted with "" as an escaped quote.
std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  bool quoted = false;
  for (size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        cur.push_back('"');
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        cur.push_back(c);
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  if (quoted) {
    throw std::invalid_argument("unterminated quote in CSV row");
  }
  out.push_back(cur);
  return out;
}

// Quotes fields holding a comma or quote, as reference names like "(3,3)" do.
std::string csv_field(const std::string& text) {
  if (text.find_first_of(",\"") == std::string::npos) {
    return text;
  }
  std::string out = "\"";
  for (char c : text) {
    out += c == '"' ? std::string("\"\"") : std::string(1, c);
  }
  return out + "\"";
}

template <typename T>
T parse_number(const std::string& text, const char* what) {
  T value{};
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc() || ptr != text.data() + text.size()) {
    throw std::invalid_argument(std::string("bad ") + what + " '" + text + "'");
  }
  return value;
}

std::optional<int> optional_int(const std::string& text, const char* what) {
  if (text.empty()) {
    return std::nullopt;
  }
  return parse_number<int>(text, what);
}

std::string opt(const std::optional<int>& v) { return v ? std::to_string(*v) : std::string(); }

// "e,m", or "," when the format is not a minifloat.
std::string split_fields(const std::optional<ExpMan>& s) {
  return s ? std::to_string(s->e) + "," + std::to_string(s->m) : std::string(",");
}

// 48.22 -> 0.4822 exactly as printed: two-decimal percentages become
// four-decimal fractions without a division artifact in the last digit.
double percent_to_fraction(double percent) { return std::round(percent * 100.0) / 1e4; }

}  // namespace

std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

SweepSpec sweep_spec_from_json(const nlohmann::json& j) {
  static const std::set<std::string> keys{"w_bits", "a_bits", "kinds", "granularity", "smoothquant", "rounding",
                                          "recipe", "lut_model", "seed", "jobs", "calib_samples"};
  if (!j.is_object()) {
    throw std::invalid_argument("sweep config must be a JSON object");
  }
  for (const auto& [k, _] : j.items()) {
    if (!keys.count(k)) {
      throw std::invalid_argument("sweep config: unknown key '" + k + "'");
    }
  }
  SweepSpec s;
  if (j.contains("w_bits")) {
    s.w_bits = j.at("w_bits").get<std::vector<int>>();
  }
  if (j.contains("a_bits")) {
    s.a_bits = j.at("a_bits").get<std::vector<int>>();
  }
  if (j.contains("kinds")) {
    s.include_int = s.include_fp = false;
    for (const auto& k : j.at("kinds").get<std::vector<std::string>>()) {
      (parse_format_kind(k) == FormatKind::int_kind ? s.include_int : s.include_fp) = true;
    }
  }
  if (j.contains("granularity")) {
    s.granularities.clear();
    for (const auto& g : j.at("granularity").get<std::vector<std::string>>()) {
      s.granularities.push_back(parse_granularity(g));
    }
  }
  if (j.contains("smoothquant")) {
    s.smoothquant = j.at("smoothquant").get<std::vector<bool>>();
  }
  if (j.contains("rounding")) {
    s.rounding.clear();
    for (const auto& r : j.at("rounding").get<std::vector<std::string>>()) {
      if (r == "rtn") {
        s.rounding.push_back(RoundingMethod::nearest);
      } else if (r == "lr") {
        s.rounding.push_back(RoundingMethod::learned);
      } else if (r == "gptq") {
        s.rounding.push_back(RoundingMethod::gptq);
      } else {
        throw std::invalid_argument("sweep config: rounding must be rtn, lr or gptq");
      }
    }
  }
  if (j.contains("recipe")) {
    s.base = recipe_from_json(j.at("recipe"));
  }
  if (j.contains("lut_model")) {
    const auto m = j.at("lut_model").get<std::string>();
    s.lut_model = m == "none" ? std::nullopt : std::optional(parse_reference_model(m));
  }
  s.seed = j.value("seed", s.seed);
  s.jobs = j.value("jobs", s.jobs);
  s.calib_samples = j.value("calib_samples", s.calib_samples);
  for (int b : s.w_bits) {
    if (b < 3 || b > 16) {
      throw std::invalid_argument("sweep config: weight bits must lie in [3, 16]");
    }
  }
  for (int b : s.a_bits) {
    if (b < 3 || b > 16) {
      throw std::invalid_argument("sweep config: activation bits must lie in [3, 16]");
    }
  }
  return s;
}

std::vector<ExpMan> minifloat_splits(int bits) {
  std::vector<ExpMan> out;
  for (int e = 1; e <= bits - 2; ++e) {
    out.push_back({e, bits - 1 - e});
  }
  return out;
}

std::vector<SweepConfig> enumerate_configs(const SweepSpec& spec) {
  std::vector<SweepConfig> out;
  auto w_bits = spec.w_bits;
  auto a_bits = spec.a_bits;
  std::sort(w_bits.begin(), w_bits.end());
  std::sort(a_bits.begin(), a_bits.end());
  w_bits.erase(std::unique(w_bits.begin(), w_bits.end()), w_bits.end());
  a_bits.erase(std::unique(a_bits.begin(), a_bits.end()), a_bits.end());
  for (int w : w_bits) {
    for (int a : a_bits) {
      if (a < w) {
        continue;
      }
      for (Granularity gran : spec.granularities) {
        for (bool sq : spec.smoothquant) {
          for (RoundingMethod rm : spec.rounding) {
            QuantRecipe r = spec.base;
            r.weight_granularity = gran;
            r.rounding = rm;
            if (sq) {
              r.smoothquant_alpha = spec.base.smoothquant_alpha.value_or(0.5);
            } else {
              r.smoothquant_alpha.reset();
            }
            const std::string suffix =
                "w" + std::to_string(w) + "a" + std::to_string(a) + "-" + short_granularity(gran) + "-" +
                r.methods_tag();
            if (spec.include_int) {
              SweepConfig c;
              c.kind = FormatKind::int_kind;
              c.w_bits = w;
              c.a_bits = a;
              c.recipe = r;
              c.recipe.weight_format = IntFormat(w);
              c.recipe.activation_format = IntFormat(a);
              c.name = "int-" + suffix;
              out.push_back(std::move(c));
            }
            if (spec.include_fp) {
              for (const auto& ws : minifloat_splits(w)) {
                for (const auto& as : minifloat_splits(a)) {
                  SweepConfig c;
                  c.kind = FormatKind::fp_kind;
                  c.w_bits = w;
                  c.a_bits = a;
                  c.weight_split = ws;
                  c.activation_split = as;
                  c.recipe = r;
                  c.recipe.weight_format = MinifloatFormat(ws.e, ws.m);
                  c.recipe.activation_format = MinifloatFormat(as.e, as.m);
                  c.name = "fp-" + suffix + "-" + to_string(*c.recipe.weight_format) + "-" +
                           to_string(*c.recipe.activation_format);
                  out.push_back(std::move(c));
                }
              }
            }
          }
        }
      }
    }
  }
  return out;
}

SweepResult run_config(const SweepConfig& cfg, const LayerGraph& model, const Dataset& calib_set,
                       const Dataset& eval_set, std::optional<ReferenceModel> lut_model) {
  const auto start = std::chrono::steady_clock::now();
  SweepResult r;
  r.config = cfg.name;
  r.kind = cfg.kind;
  r.w_bits = cfg.w_bits;
  r.a_bits = cfg.a_bits;
  r.weight_split = cfg.weight_split;
  r.activation_split = cfg.activation_split;
  r.granularity = short_granularity(cfg.recipe.weight_granularity);
  r.methods = cfg.recipe.methods_tag();
  const auto cost = mac_cost(*cfg.recipe.weight_format, *cfg.recipe.activation_format, kDefaultDotLength, lut_model);
  r.dot_bitwidth = cost.dot_bitwidth;
  r.acc_width = cost.acc_width;
  r.lut = cost.lut;
  const auto out_shape = model.infer_shapes()[model.output_id()];
  const double chance = 1.0 / static_cast<double>(element_count(out_shape));
  try {
    const QuantizedModel q = run_pipeline(model, cfg.recipe, calib_set);
    r.accuracy = accuracy(q.graph, eval_set, q.sites());
    if (std::isnan(r.accuracy)) {
      r.accuracy = chance;
      r.failed = true;
      r.error = "accuracy is NaN";
    }
  } catch (const std::exception& e) {
    r.accuracy = chance;
    r.failed = true;
    r.error = e.what();
  }
  r.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return r;
}

std::vector<SweepResult> run_sweep(const LayerGraph& model, const Dataset& calib_set, const Dataset& eval_set,
                                   const SweepSpec& spec) {
  const auto configs = enumerate_configs(spec);
  std::vector<SweepResult> results(configs.size());
  std::atomic<size_t> next{0};
  auto worker = [&] {
    for (size_t i = next++; i < configs.size(); i = next++) {
      results[i] = run_config(configs[i], model, calib_set, eval_set, spec.lut_model);
    }
  };
  const size_t threads = std::max<size_t>(1, std::min(spec.jobs, configs.size()));
  std::vector<std::thread> pool;
  for (size_t t = 1; t < threads; ++t) {
    pool.emplace_back(worker);
  }
  worker();
  for (auto& t : pool) {
    t.join();
  }
  std::sort(results.begin(), results.end(), [](const auto& a, const auto& b) { return a.config < b.config; });
  return results;
}

std::vector<SweepResult> best_per_bitwidth(const std::vector<SweepResult>& results) {
  std::vector<SweepResult> out;
  std::map<std::tuple<int, int, std::string, std::string>, SweepResult> best;
  for (const auto& r : results) {
    if (r.kind == FormatKind::int_kind) {
      out.push_back(r);
      continue;
    }
    const auto key = std::make_tuple(r.w_bits, r.a_bits, r.granularity, r.methods);
    auto it = best.find(key);
    if (it == best.end() || r.accuracy > it->second.accuracy ||
        (r.accuracy == it->second.accuracy && r.config < it->second.config)) {
      best[key] = r;
    }
  }
  for (auto& [_, r] : best) {
    out.push_back(std::move(r));
  }
  std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.config < b.config; });
  return out;
}

Dataset calibration_subset(const Dataset& data, size_t count, uint64_t seed) {
  std::vector<size_t> order(data.size());
  std::iota(order.begin(), order.end(), size_t{0});
  Rng rng(seed);
  for (size_t i = order.size(); i > 1; --i) {
    std::swap(order[i - 1], order[rng.below(i)]);
  }
  Dataset out;
  for (size_t i = 0; i < std::min(count, order.size()); ++i) {
    out.push_back(data.inputs[order[i]], data.labels[order[i]]);
  }
  return out;
}

CostAxis parse_cost_axis(const std::string& text) {
  if (text == "dot_bitwidth") {
    return CostAxis::dot_bitwidth;
  }
  if (text == "lut") {
    return CostAxis::lut;
  }
  if (text == "acc_width") {
    return CostAxis::acc_width;
  }
  throw std::invalid_argument("cost axis must be dot_bitwidth, lut or acc_width");
}

std::string to_string(CostAxis a) {
  switch (a) {
    case CostAxis::dot_bitwidth:
      return "dot_bitwidth";
    case CostAxis::lut:
      return "lut";
    case CostAxis::acc_width:
      return "acc_width";
  }
  return "?";
}

std::vector<ParetoPoint> pareto_front(const std::vector<ParetoPoint>& points) {
  std::vector<ParetoPoint> sorted = points;
  std::sort(sorted.begin(), sorted.end(), [](const auto& a, const auto& b) {
    if (a.cost != b.cost) {
      return a.cost < b.cost;
    }
    if (a.accuracy != b.accuracy) {
      return a.accuracy > b.accuracy;
    }
    return a.config < b.config;
  });
  std::vector<ParetoPoint> front;
  for (const auto& p : sorted) {
    if (front.empty() || p.accuracy > front.back().accuracy) {
      front.push_back(p);
    }
  }
  return front;
}

std::vector<ParetoPoint> pareto_points(const std::vector<SweepResult>& results, CostAxis axis) {
  std::vector<ParetoPoint> pts;
  for (const auto& r : results) {
    double cost = 0.0;
    switch (axis) {
      case CostAxis::dot_bitwidth:
        cost = r.dot_bitwidth;
        break;
      case CostAxis::acc_width:
        cost = r.acc_width;
        break;
      case CostAxis::lut:
        if (!r.lut) {
          continue;
        }
        cost = *r.lut;
        break;
    }
    pts.push_back({r.config, cost, r.accuracy});
  }
  return pts;
}

std::string results_to_csv(const std::vector<SweepResult>& results) {
  std::string out = std::string(kCsvHeader) + "\n";
  for (const auto& r : results) {
    out += csv_field(r.config) + "," + to_string(r.kind) + "," + std::to_string(r.w_bits) + "," +
           std::to_string(r.a_bits) + "," + split_fields(r.weight_split) + "," + split_fields(r.activation_split) +
           "," + csv_field(r.granularity) + "," + csv_field(r.methods) + "," + format_double(r.accuracy) + "," +
           std::to_string(r.dot_bitwidth) + "," + std::to_string(r.acc_width) + "," + opt(r.lut) + "\n";
  }
  return out;
}

std::vector<SweepResult> results_from_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) || line != kCsvHeader) {
    throw std::invalid_argument("CSV header does not match the results layout");
  }
  std::vector<SweepResult> out;
  while (std::getline(in, line)) {
    if (line.empty()) {
      continue;
    }
    const auto f = split_csv(line);
    if (f.size() != 14) {
      throw std::invalid_argument("CSV row has " + std::to_string(f.size()) + " fields, expected 14");
    }
    SweepResult r;
    r.config = f[0];
    r.kind = parse_format_kind(f[1]);
    r.w_bits = parse_number<int>(f[2], "w_bits");
    r.a_bits = parse_number<int>(f[3], "a_bits");
    const auto ew = optional_int(f[4], "e_w");
    const auto mw = optional_int(f[5], "m_w");
    const auto ea = optional_int(f[6], "e_a");
    const auto ma = optional_int(f[7], "m_a");
    if (ew && mw) {
      r.weight_split = ExpMan{*ew, *mw};
    }
    if (ea && ma) {
      r.activation_split = ExpMan{*ea, *ma};
    }
    r.granularity = f[8];
    r.methods = f[9];
    r.accuracy = parse_number<double>(f[10], "accuracy");
    r.dot_bitwidth = parse_number<int>(f[11], "dot_bitwidth");
    r.acc_width = parse_number<int>(f[12], "acc_width");
    r.lut = optional_int(f[13], "lut");
    out.push_back(std::move(r));
  }
  return out;
}

nlohmann::json results_to_json(const std::vector<SweepResult>& results) {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& r : results) {
    nlohmann::json j{{"config", r.config},
                     {"kind", to_string(r.kind)},
                     {"w_bits", r.w_bits},
                     {"a_bits", r.a_bits},
                     {"granularity", r.granularity},
                     {"methods", r.methods},
                     {"accuracy", r.accuracy},
                     {"dot_bitwidth", r.dot_bitwidth},
                     {"acc_width", r.acc_width},
                     {"lut", r.lut ? nlohmann::json(*r.lut) : nlohmann::json(nullptr)},
                     {"failed", r.failed}};
    if (r.weight_split) {
      j["e_w"] = r.weight_split->e;
      j["m_w"] = r.weight_split->m;
    }
    if (r.activation_split) {
      j["e_a"] = r.activation_split->e;
      j["m_a"] = r.activation_split->m;
    }
    if (!r.error.empty()) {
      j["error"] = r.error;
    }
    arr.push_back(std::move(j));
  }
  return arr;
}

std::string pareto_to_csv(const std::vector<ParetoPoint>& points, CostAxis axis) {
  std::string out = "config," + to_string(axis) + ",accuracy\n";
  for (const auto& p : points) {
    out += csv_field(p.config) + "," + format_double(p.cost) + "," + format_double(p.accuracy) + "\n";
  }
  return out;
}

std::vector<SweepResult> reference_results(ReferenceModel model) {
  std::vector<SweepResult> out;
  const size_t mi = static_cast<size_t>(model);
  for (const auto& row : reference_rows()) {
    const auto& m = row.models[mi];
    const std::string name = "(" + std::to_string(row.w_bits) + "," + std::to_string(row.a_bits) + ")";
    SweepResult i;
    i.config = name;
    i.kind = FormatKind::int_kind;
    i.w_bits = row.w_bits;
    i.a_bits = row.a_bits;
    i.granularity = "pc";
    i.methods = "reference";
    i.accuracy = percent_to_fraction(m.int_accuracy);
    i.dot_bitwidth = row.dot_bitwidth;
    i.acc_width = int_acc_width({IntFormat(row.w_bits), IntFormat(row.a_bits)});
    i.lut = m.int_lut;
    out.push_back(i);

    const auto& best = best_format(model, row.w_bits, row.a_bits);
    SweepResult f = i;
    f.kind = FormatKind::fp_kind;
    f.weight_split = best.weight;
    f.activation_split = best.activation;
    f.accuracy = percent_to_fraction(m.fp_accuracy);
    f.acc_width = fp_acc_width({MinifloatFormat(best.weight.e, best.weight.m),
                                MinifloatFormat(best.activation.e, best.activation.m)});
    f.lut = m.fp_lut;
    out.push_back(f);
  }
  return out;
}

}  // namespace mfq
