#ifndef NBPUF_CLI_HPP
#define NBPUF_CLI_HPP

/**
 * @file cli.hpp
 * @brief Command orchestration behind the nbpuf tool.
 *
 * Exit statuses: 0 success, 1 usage error, 2 data error, 3 numeric
 * non-convergence. Every failure prints one line "error: <code>: <reason>".
 */

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "nbpuf/beta_model.hpp"
#include "nbpuf/error.hpp"
#include "nbpuf/extraction.hpp"
#include "nbpuf/io.hpp"
#include "nbpuf/metrics.hpp"
#include "nbpuf/simulator.hpp"

namespace nbpuf {

class UsageError : public Error {
 public:
  using Error::Error;
  [[nodiscard]] const char* code() const noexcept override { return "usage"; }
};

enum class Command { Fit, Thresholds, Enroll, Reconstruct, Evaluate, Simulate, Report };

struct RunConfig {
  Command command = Command::Enroll;
  std::vector<std::filesystem::path> traces;
  std::optional<std::filesystem::path> profile;
  std::optional<std::filesystem::path> model;
  std::optional<std::filesystem::path> out;
  int t_bits = 2;
  FitMethod fit_method = FitMethod::MaxLikelihood;
  RescalePolicy rescale = RescalePolicy::SmallestRepresentable;
  std::optional<double> alpha;
  std::optional<double> beta;
  std::size_t cells = 1024;
  std::optional<std::uint64_t> k;
  std::uint64_t seed = 1;
  int repeats = 2;
};

enum ExitStatus : int { kExitOk = 0, kExitUsage = 1, kExitData = 2, kExitConvergence = 3 };

namespace detail {

inline void emit(const RunConfig& cfg, const std::string& text, std::ostream& out) {
  if (cfg.out) {
    write_text_file(*cfg.out, text);
  } else {
    out << text;
  }
}

inline const std::filesystem::path& single_trace(const RunConfig& cfg) {
  if (cfg.traces.size() != 1) throw UsageError("exactly one --traces file is required");
  return cfg.traces.front();
}

inline const std::filesystem::path& required(const std::optional<std::filesystem::path>& p, const char* flag) {
  if (!p) throw UsageError(std::string("missing required flag ") + flag);
  return *p;
}

inline void check_t_bits(int t) {
  if (t < 1 || t > kMaxSymbolBits) throw UsageError("--bits must be in [1, 8]");
}

inline BetaParams params_from_config(const RunConfig& cfg) {
  if (cfg.model) {
    const Json j = read_json_file(*cfg.model);
    try {
      return BetaParams(field<double>(j, "alpha"), field<double>(j, "beta"));
    } catch (const ParameterError& e) {
      throw DataError(std::string("model: ") + e.what());
    }
  }
  if (!cfg.alpha || !cfg.beta) throw UsageError("give --model or both --alpha and --beta");
  try {
    return BetaParams(*cfg.alpha, *cfg.beta);
  } catch (const ParameterError& e) {
    throw UsageError(e.what());
  }
}

inline Json responses_json(const ExtractionProfile& profile, std::span<const ResponseRecord> records, const BitSequence& key) {
  Json j;
  j["t_bits"] = profile.t_bits();
  j["k"] = profile.k();
  j["cells"] = Json::array();
  for (const ResponseRecord& r : records) j["cells"].push_back(to_json(r));
  j["key_bits"] = key.size();
  j["key"] = to_string(key);
  return j;
}

inline int run_fit(const RunConfig& cfg, std::ostream& out) {
  const std::vector<CellTrace> traces = parse_trace_file(single_trace(cfg));
  const CellPartition part = classify_cells(traces);
  const FrequencyBounds b = rescale_bounds(traces.front().k, cfg.rescale, part.variable);
  const std::vector<double> samples = rescaled_samples(part.variable, b);
  const FitReport f = fit(samples, cfg.fit_method);
  emit(cfg, to_canonical_json(to_json(f)), out);
  return f.converged ? kExitOk : kExitConvergence;
}

inline int run_thresholds(const RunConfig& cfg, std::ostream& out) {
  check_t_bits(cfg.t_bits);
  const BetaParams params = params_from_config(cfg);
  FrequencyBounds b{};
  std::uint64_t k = 0;
  if (!cfg.traces.empty()) {
    const std::vector<CellTrace> traces = parse_trace_file(single_trace(cfg));
    const CellPartition part = classify_cells(traces);
    k = traces.front().k;
    b = rescale_bounds(k, cfg.rescale, part.variable);
  } else {
    if (cfg.rescale != RescalePolicy::SmallestRepresentable) throw UsageError("--rescale observed needs --traces");
    if (!cfg.k) throw UsageError("give --k or --traces");
    k = *cfg.k;
    try {
      b = rescale_bounds(k, cfg.rescale, {});
    } catch (const ParameterError& e) {
      throw UsageError(e.what());
    }
  }
  Json j;
  j["alpha"] = params.alpha();
  j["beta"] = params.beta();
  j["k"] = k;
  j["t_bits"] = cfg.t_bits;
  j["min_freq"] = b.min_freq;
  j["max_freq"] = b.max_freq;
  j["thresholds"] = compute_thresholds(params, b.min_freq, b.max_freq, cfg.t_bits);
  emit(cfg, to_canonical_json(j), out);
  return kExitOk;
}

inline int run_enroll(const RunConfig& cfg, std::ostream& out) {
  check_t_bits(cfg.t_bits);
  const std::vector<CellTrace> traces = parse_trace_file(single_trace(cfg));
  const ExtractionProfile p = enroll(traces, {cfg.t_bits, cfg.fit_method, cfg.rescale});
  emit(cfg, to_canonical_json(to_json(p)), out);
  return kExitOk;
}

inline int run_reconstruct(const RunConfig& cfg, std::ostream& out) {
  const ExtractionProfile profile = read_profile(required(cfg.profile, "--profile"));
  const std::vector<CellTrace> traces = parse_trace_file(single_trace(cfg));
  const std::vector<ResponseRecord> records = reconstruct(traces, profile);
  const BitSequence key = assemble_key(records);
  emit(cfg, to_canonical_json(responses_json(profile, records, key)), out);
  if (cfg.out) {
    std::filesystem::path key_path = *cfg.out;
    key_path.replace_extension(".key");
    write_text_file(key_path, to_string(key) + "\n");
  }
  return kExitOk;
}

inline int run_evaluate(const RunConfig& cfg, std::ostream& out) {
  const ExtractionProfile profile = read_profile(required(cfg.profile, "--profile"));
  const std::vector<CellTrace> traces = parse_trace_file(single_trace(cfg));
  const MetricsReport m = evaluate_reconstruction(profile, reconstruct(traces, profile));
  if (cfg.out) {
    write_text_file(*cfg.out, to_canonical_json(to_json(m)));
    const TableRow row{alphabet_name(m.t_bits), m.entropy_per_cell, m.effective_key_length, m.symbol_error_rate,
                       m.bit_error_rate, m.bias};
    out << format_table(std::span(&row, 1));
  } else {
    out << to_canonical_json(to_json(m));
  }
  return kExitOk;
}

inline int run_simulate(const RunConfig& cfg, std::ostream& out) {
  check_t_bits(cfg.t_bits);
  if (!cfg.alpha || !cfg.beta) throw UsageError("simulate needs --alpha and --beta");
  PopulationSpec spec;
  try {
    spec.params = BetaParams(*cfg.alpha, *cfg.beta);
  } catch (const ParameterError& e) {
    throw UsageError(e.what());
  }
  spec.n_cells = cfg.cells;
  spec.k = cfg.k.value_or(1048575);
  spec.seed = cfg.seed;
  spec.repeats = cfg.repeats;
  try {
    validate(spec);
  } catch (const ParameterError& e) {
    throw UsageError(e.what());
  }
  const std::filesystem::path& dir = required(cfg.out, "--out");
  std::filesystem::create_directories(dir);
  auto sink = [&dir](int repeat, const std::vector<CellTrace>& traces) {
    char name[32];
    std::snprintf(name, sizeof name, "traces_r%03d.csv", repeat);
    write_text_file(dir / name, format_traces(traces));
  };
  const ExperimentResult r = run_experiment(spec, {cfg.t_bits, cfg.fit_method, cfg.rescale}, sink);
  write_text_file(dir / "experiment.json", to_canonical_json(to_json(r, spec)));
  std::vector<TableRow> rows;
  for (const MetricsReport& m : r.per_repeat) {
    rows.push_back({"r" + std::to_string(rows.size() + 1), m.entropy_per_cell, m.effective_key_length, m.symbol_error_rate,
                    m.bit_error_rate, m.bias});
  }
  out << format_table(rows);
  return kExitOk;
}

struct ReportRow {
  TableRow row;
  std::optional<double> variable_bit_error_rate;
  std::optional<double> variable_bias;
};

inline Json to_json(const ReportRow& r) {
  Json j;
  j["alphabet"] = r.row.alphabet;
  j["entropy"] = r.row.entropy;
  j["effective_key_length"] = r.row.effective_key_length;
  j["symbol_error_rate"] = r.row.symbol_error_rate ? Json(*r.row.symbol_error_rate) : Json(nullptr);
  j["bit_error_rate"] = r.row.bit_error_rate ? Json(*r.row.bit_error_rate) : Json(nullptr);
  j["variable_bit_error_rate"] = r.variable_bit_error_rate ? Json(*r.variable_bit_error_rate) : Json(nullptr);
  j["bias"] = r.row.bias;
  j["variable_bias"] = r.variable_bias ? Json(*r.variable_bias) : Json(nullptr);
  return j;
}

/// Majority-vote binary baseline: one bit per cell, 1 when more than half
/// the evaluations were 1.
inline BitSequence majority_bits(std::span<const CellTrace> traces) {
  std::vector<const CellTrace*> order;
  for (const CellTrace& t : traces) order.push_back(&t);
  std::sort(order.begin(), order.end(), [](const CellTrace* a, const CellTrace* b) { return a->cell_id < b->cell_id; });
  BitSequence bits;
  for (const CellTrace* t : order) bits.push_back(2 * t->ones > t->k ? 1 : 0);
  return bits;
}

inline int run_report(const RunConfig& cfg, std::ostream& out) {
  if (cfg.traces.empty()) throw UsageError("report needs at least one --traces file");
  std::vector<std::vector<CellTrace>> sets;
  for (const auto& p : cfg.traces) sets.push_back(parse_trace_file(p));
  const std::vector<CellTrace>& base = sets.front();
  const std::size_t n_meas = sets.size() - 1;

  std::vector<ReportRow> rows;
  {
    const BitSequence ref = majority_bits(base);
    std::uint64_t ones = 0;
    for (auto b : ref) ones += b;
    const std::uint64_t counts[2] = {ref.size() - ones, ones};
    const double h = shannon_entropy(counts);
    ReportRow r{{alphabet_name(1), h, effective_key_length(h, ref.size()), std::nullopt, std::nullopt, bias(ref)}, {}, {}};
    if (n_meas > 0) {
      double ber = 0.0;
      for (std::size_t i = 1; i < sets.size(); ++i) ber += bit_error_rate(ref, majority_bits(sets[i]));
      r.row.bit_error_rate = ber / static_cast<double>(n_meas);
    }
    rows.push_back(r);
  }
  for (int t = 2; t <= 4; ++t) {
    const ExtractionProfile profile = enroll(base, {t, cfg.fit_method, cfg.rescale});
    const BitSequence key = assemble_key(profile.enrolled());
    BitSequence var_bits;
    for (const ResponseRecord& rec : profile.enrolled()) {
      if (rec.cell_class != CellClass::Variable) continue;
      for (int b = 0; b < rec.bits.width(); ++b) var_bits.push_back(rec.bits.bit(b) ? 1 : 0);
    }
    const double h = profile_entropy(profile);
    ReportRow r{{alphabet_name(t), h, effective_key_length(h, profile.enrolled().size()), std::nullopt, std::nullopt, bias(key)},
                std::nullopt,
                var_bits.empty() ? std::nullopt : std::optional<double>(bias(var_bits))};
    if (n_meas > 0) {
      double ser = 0.0, ber = 0.0, vber = 0.0;
      for (std::size_t i = 1; i < sets.size(); ++i) {
        const MetricsReport m = evaluate_reconstruction(profile, reconstruct(sets[i], profile));
        ser += m.symbol_error_rate;
        ber += m.bit_error_rate;
        vber += m.variable_bit_error_rate;
      }
      const double n = static_cast<double>(n_meas);
      r.row.symbol_error_rate = ser / n;
      r.row.bit_error_rate = ber / n;
      r.variable_bit_error_rate = vber / n;
    }
    rows.push_back(r);
  }

  std::vector<TableRow> table;
  Json j;
  j["cells"] = base.size();
  j["k"] = base.front().k;
  j["reconstructions"] = n_meas;
  j["rows"] = Json::array();
  for (const ReportRow& r : rows) {
    table.push_back(r.row);
    j["rows"].push_back(to_json(r));
  }
  out << format_table(table);
  if (cfg.out) write_text_file(*cfg.out, to_canonical_json(j));
  return kExitOk;
}

inline std::string one_line(std::string s) {
  for (char& c : s)
    if (c == '\n' || c == '\r') c = ' ';
  return s;
}

}  // namespace detail

/// Runs one command. Never throws for library errors; maps them to exit codes.
inline int dispatch(const RunConfig& cfg, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  try {
    switch (cfg.command) {
      case Command::Fit: return detail::run_fit(cfg, out);
      case Command::Thresholds: return detail::run_thresholds(cfg, out);
      case Command::Enroll: return detail::run_enroll(cfg, out);
      case Command::Reconstruct: return detail::run_reconstruct(cfg, out);
      case Command::Evaluate: return detail::run_evaluate(cfg, out);
      case Command::Simulate: return detail::run_simulate(cfg, out);
      case Command::Report: return detail::run_report(cfg, out);
    }
    throw UsageError("unknown command");
  } catch (const UsageError& e) {
    err << "error: " << e.code() << ": " << detail::one_line(e.what()) << "\n";
    return kExitUsage;
  } catch (const ConvergenceError& e) {
    err << "error: " << e.code() << ": " << detail::one_line(e.what()) << "\n";
    return kExitConvergence;
  } catch (const Error& e) {
    err << "error: " << e.code() << ": " << detail::one_line(e.what()) << "\n";
    return kExitData;
  } catch (const std::filesystem::filesystem_error& e) {
    err << "error: io: " << detail::one_line(e.what()) << "\n";
    return kExitData;
  }
}

}  // namespace nbpuf

#endif  // NBPUF_CLI_HPP
