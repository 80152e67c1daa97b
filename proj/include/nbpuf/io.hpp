#ifndef NBPUF_IO_HPP
#define NBPUF_IO_HPP

/**
 * @file io.hpp
 * @brief Trace CSV and JSON document formats.
 *
 * JSON is emitted by a small canonical writer: keys keep insertion order,
 * reals use 17 significant digits (always with a '.' or exponent so they read
 * back as reals), two-space indentation. Identical inputs give byte-identical
 * files. Parsing goes through nlohmann::json.
 */

#include <charconv>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "nbpuf/error.hpp"
#include "nbpuf/extraction.hpp"
#include "nbpuf/metrics.hpp"
#include "nbpuf/simulator.hpp"

namespace nbpuf {

using Json = nlohmann::ordered_json;

// ---------------------------------------------------------------------------
// Trace CSV: header "cell_id,k,ones", one row per cell.

namespace detail {

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

inline std::uint64_t parse_u64(std::string_view field, std::size_t line, const char* name) {
  field = trim(field);
  std::uint64_t v = 0;
  auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), v);
  if (ec != std::errc{} || ptr != field.data() + field.size() || field.empty()) {
    throw DataError("row " + std::to_string(line) + ": " + name + " is not a non-negative integer: '" +
                    std::string(field) + "'");
  }
  return v;
}

}  // namespace detail

inline std::vector<CellTrace> parse_traces(std::istream& in) {
  std::string line;
  std::size_t line_no = 0;
  bool have_header = false;
  while (!have_header && std::getline(in, line)) {
    ++line_no;
    std::string_view t = detail::trim(line);
    if (t.empty()) continue;
    std::string compact;
    for (char c : t)
      if (c != ' ' && c != '\t') compact.push_back(c);
    if (compact != "cell_id,k,ones") throw DataError("row " + std::to_string(line_no) + ": expected header 'cell_id,k,ones'");
    have_header = true;
  }
  if (!have_header) throw DataError("trace file is empty");

  std::vector<CellTrace> traces;
  std::set<std::uint64_t> ids;
  while (std::getline(in, line)) {
    ++line_no;
    std::string_view t = detail::trim(line);
    if (t.empty()) continue;
    std::vector<std::string_view> fields;
    std::size_t start = 0;
    for (std::size_t pos; (pos = t.find(',', start)) != std::string_view::npos; start = pos + 1) {
      fields.push_back(t.substr(start, pos - start));
    }
    fields.push_back(t.substr(start));
    if (fields.size() != 3) {
      throw DataError("row " + std::to_string(line_no) + ": expected 3 columns, found " + std::to_string(fields.size()));
    }
    CellTrace c{detail::parse_u64(fields[0], line_no, "cell_id"), detail::parse_u64(fields[1], line_no, "k"),
                detail::parse_u64(fields[2], line_no, "ones")};
    if (c.k == 0) throw DataError("row " + std::to_string(line_no) + ": k must be positive");
    if (c.ones > c.k) throw DataError("row " + std::to_string(line_no) + ": ones > k");
    if (!traces.empty() && c.k != traces.front().k) throw DataError("row " + std::to_string(line_no) + ": mixed k");
    if (!ids.insert(c.cell_id).second) {
      throw DataError("row " + std::to_string(line_no) + ": duplicate cell_id " + std::to_string(c.cell_id));
    }
    traces.push_back(c);
  }
  if (traces.empty()) throw DataError("trace file has no data rows");
  return traces;
}

inline std::vector<CellTrace> parse_trace_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open trace file " + path.string());
  return parse_traces(in);
}

inline std::string format_traces(std::span<const CellTrace> traces) {
  std::string out = "cell_id,k,ones\n";
  for (const CellTrace& t : traces) {
    out += std::to_string(t.cell_id) + "," + std::to_string(t.k) + "," + std::to_string(t.ones) + "\n";
  }
  return out;
}

// ---------------------------------------------------------------------------
// Canonical JSON writer.

inline std::string format_real(double v) {
  if (!std::isfinite(v)) throw DataError("cannot serialize a non-finite real");
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  std::string s(buf);
  if (s.find_first_of(".e") == std::string::npos) s += ".0";
  return s;
}

namespace detail {

inline void write_json(const Json& j, std::string& out, int indent) {
  const std::string pad(static_cast<std::size_t>(indent) * 2, ' ');
  const std::string inner(static_cast<std::size_t>(indent + 1) * 2, ' ');
  switch (j.type()) {
    case Json::value_t::object: {
      if (j.empty()) {
        out += "{}";
        return;
      }
      out += "{\n";
      bool first = true;
      for (auto it = j.begin(); it != j.end(); ++it) {
        if (!first) out += ",\n";
        first = false;
        out += inner + Json(it.key()).dump() + ": ";
        write_json(it.value(), out, indent + 1);
      }
      out += "\n" + pad + "}";
      return;
    }
    case Json::value_t::array: {
      if (j.empty()) {
        out += "[]";
        return;
      }
      // arrays of scalars stay on one line
      bool scalar = std::all_of(j.begin(), j.end(), [](const Json& e) { return e.is_primitive(); });
      if (scalar) {
        out += "[";
        for (std::size_t i = 0; i < j.size(); ++i) {
          if (i) out += ", ";
          write_json(j[i], out, indent + 1);
        }
        out += "]";
        return;
      }
      out += "[\n";
      for (std::size_t i = 0; i < j.size(); ++i) {
        if (i) out += ",\n";
        out += inner;
        write_json(j[i], out, indent + 1);
      }
      out += "\n" + pad + "]";
      return;
    }
    case Json::value_t::number_float:
      out += format_real(j.get<double>());
      return;
    default:
      out += j.dump();
      return;
  }
}

}  // namespace detail

inline std::string to_canonical_json(const Json& j) {
  std::string out;
  detail::write_json(j, out, 0);
  out += "\n";
  return out;
}

inline void write_text_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out << text;
  if (!out) throw IoError("write failed for " + path.string());
}

inline Json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  try {
    return Json::parse(in);
  } catch (const Json::exception& e) {
    throw DataError("malformed JSON in " + path.string() + ": " + e.what());
  }
}

// ---------------------------------------------------------------------------
// Documents.

inline Json to_json(const ResponseRecord& r) {
  Json j;
  j["id"] = r.cell_id;
  j["class"] = to_string(r.cell_class);
  if (r.symbol) j["symbol"] = *r.symbol;
  j["bits"] = r.bits.to_string();
  return j;
}

inline Json to_json(const ExtractionProfile& p) {
  Json j;
  j["version"] = ExtractionProfile::kVersion;
  j["t_bits"] = p.t_bits();
  j["alphabet"] = p.alphabet();
  j["alpha"] = p.params().alpha();
  j["beta"] = p.params().beta();
  j["k"] = p.k();
  j["min_freq"] = p.min_freq();
  j["max_freq"] = p.max_freq();
  j["thresholds"] = Json::array();
  for (double t : p.thresholds()) j["thresholds"].push_back(t);
  j["cells"] = Json::array();
  for (const ResponseRecord& r : p.enrolled()) j["cells"].push_back(to_json(r));
  return j;
}

namespace detail {

template <typename T>
T field(const Json& j, const char* name) {
  if (!j.contains(name)) throw DataError(std::string("missing field '") + name + "'");
  try {
    return j.at(name).get<T>();
  } catch (const Json::exception&) {
    throw DataError(std::string("field '") + name + "' has the wrong type");
  }
}

inline CellClass parse_class(const std::string& s) {
  if (s == "stable0") return CellClass::StableZero;
  if (s == "stable1") return CellClass::StableOne;
  if (s == "variable") return CellClass::Variable;
  throw DataError("unknown cell class '" + s + "'");
}

}  // namespace detail

inline ResponseRecord record_from_json(const Json& j) {
  ResponseRecord r{detail::field<std::uint64_t>(j, "id"), detail::parse_class(detail::field<std::string>(j, "class")),
                   std::nullopt, GrayWord::parse(detail::field<std::string>(j, "bits"))};
  if (j.contains("symbol")) r.symbol = detail::field<std::uint32_t>(j, "symbol");
  return r;
}

inline ExtractionProfile profile_from_json(const Json& j) {
  if (!j.is_object()) throw DataError("profile must be a JSON object");
  if (detail::field<int>(j, "version") != ExtractionProfile::kVersion) throw DataError("unsupported profile version");
  const int t_bits = detail::field<int>(j, "t_bits");
  if (t_bits < 1 || t_bits > kMaxSymbolBits) throw DataError("profile t_bits must be in [1, 8]");
  if (detail::field<std::uint64_t>(j, "alphabet") != (std::uint64_t{1} << t_bits)) {
    throw DataError("profile alphabet does not equal 2^t_bits");
  }
  std::vector<ResponseRecord> cells;
  if (!j.contains("cells") || !j["cells"].is_array()) throw DataError("profile 'cells' must be an array");
  for (const Json& c : j["cells"]) cells.push_back(record_from_json(c));
  try {
    return ExtractionProfile(t_bits, BetaParams(detail::field<double>(j, "alpha"), detail::field<double>(j, "beta")),
                             detail::field<std::uint64_t>(j, "k"),
                             {detail::field<double>(j, "min_freq"), detail::field<double>(j, "max_freq")},
                             detail::field<std::vector<double>>(j, "thresholds"), std::move(cells));
  } catch (const ParameterError& e) {
    throw DataError(std::string("profile parameters: ") + e.what());
  }
}

inline void write_profile(const std::filesystem::path& path, const ExtractionProfile& p) {
  write_text_file(path, to_canonical_json(to_json(p)));
}

inline ExtractionProfile read_profile(const std::filesystem::path& path) { return profile_from_json(read_json_file(path)); }

inline Json to_json(const FitReport& f) {
  Json j;
  j["alpha"] = f.params.alpha();
  j["beta"] = f.params.beta();
  j["method"] = to_string(f.method);
  j["sample_count"] = f.sample_count;
  j["converged"] = f.converged;
  if (f.log_likelihood) j["log_likelihood"] = *f.log_likelihood;
  return j;
}

inline Json to_json(const MetricsReport& m) {
  Json j;
  j["t_bits"] = m.t_bits;
  j["alphabet"] = 1 << m.t_bits;
  j["entropy_per_cell"] = m.entropy_per_cell;
  j["effective_key_length"] = m.effective_key_length;
  j["symbol_error_rate"] = m.symbol_error_rate;
  j["adjacent_error_fraction"] = m.adjacent_error_fraction;
  j["symbol_errors"] = m.symbol_errors;
  j["adjacent_errors"] = m.adjacent_errors;
  j["bit_error_rate"] = m.bit_error_rate;
  j["variable_bit_error_rate"] = m.variable_bit_error_rate;
  j["stable_bit_error_rate"] = m.stable_bit_error_rate;
  j["bias"] = m.bias;
  j["variable_bias"] = m.variable_bias;
  j["key_bits"] = m.key_bits;
  Json c;
  c["n_stable0"] = m.counts.n_stable0;
  c["n_stable1"] = m.counts.n_stable1;
  c["n_variable"] = m.counts.n_variable;
  c["symbol_histogram"] = m.counts.symbol_histogram;
  j["counts"] = c;
  return j;
}

inline Json to_json(const ExperimentResult& r, const PopulationSpec& spec) {
  Json j;
  Json s;
  s["n_cells"] = spec.n_cells;
  s["alpha"] = spec.params.alpha();
  s["beta"] = spec.params.beta();
  s["k"] = spec.k;
  s["seed"] = spec.seed;
  s["repeats"] = spec.repeats;
  j["spec"] = s;
  j["profile"] = to_json(r.profile);
  j["per_repeat"] = Json::array();
  for (const MetricsReport& m : r.per_repeat) j["per_repeat"].push_back(to_json(m));
  j["true_probabilities"] = r.true_probabilities;
  return j;
}

}  // namespace nbpuf

#endif  // NBPUF_IO_HPP
