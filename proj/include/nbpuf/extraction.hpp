#ifndef NBPUF_EXTRACTION_HPP
#define NBPUF_EXTRACTION_HPP

/**
 * @file extraction.hpp
 * @brief Non-binary response extraction from one-frequency traces.
 *
 * Cells that produced only zeros or only ones over k evaluations are kept as
 * stable single-bit responses. The remaining cells are modelled by a beta
 * distribution restricted to [min_freq, max_freq]; that mass is cut into 2^t
 * equal sections and each cell's one-frequency m/k selects a section, which
 * is emitted as a t-bit Gray codeword.
 */

#include <algorithm>
#include <cstdint>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "nbpuf/beta_model.hpp"
#include "nbpuf/error.hpp"
#include "nbpuf/gray_code.hpp"

namespace nbpuf {

inline constexpr int kMaxSymbolBits = 8;

/// Evaluation evidence for one cell: `ones` outputs equal to 1 out of `k`.
struct CellTrace {
  std::uint64_t cell_id;
  std::uint64_t k;
  std::uint64_t ones;

  [[nodiscard]] double one_frequency() const noexcept {
    return static_cast<double>(ones) / static_cast<double>(k);
  }
  friend bool operator==(const CellTrace&, const CellTrace&) = default;
};

enum class CellClass { StableZero, StableOne, Variable };

inline const char* to_string(CellClass c) noexcept {
  switch (c) {
    case CellClass::StableZero: return "stable0";
    case CellClass::StableOne: return "stable1";
    case CellClass::Variable: return "variable";
  }
  return "?";
}

inline CellClass classify(const CellTrace& t) noexcept {
  if (t.ones == 0) return CellClass::StableZero;
  if (t.ones == t.k) return CellClass::StableOne;
  return CellClass::Variable;
}

struct CellPartition {
  std::vector<CellTrace> stable_zero;
  std::vector<CellTrace> stable_one;
  std::vector<CellTrace> variable;
};

namespace detail {

inline void check_traces(std::span<const CellTrace> traces) {
  if (traces.empty()) throw DataError("no cell traces given");
  const std::uint64_t k = traces.front().k;
  for (const CellTrace& t : traces) {
    if (t.k == 0) throw DataError("cell " + std::to_string(t.cell_id) + " has k = 0");
    if (t.ones > t.k) throw DataError("cell " + std::to_string(t.cell_id) + " has ones > k");
    if (t.k != k) {
      throw DataError("mixed evaluation counts: cell " + std::to_string(t.cell_id) + " has k=" +
                      std::to_string(t.k) + ", expected " + std::to_string(k));
    }
  }
}

}  // namespace detail

/// Splits traces by class, preserving input order within each class.
inline CellPartition classify_cells(std::span<const CellTrace> traces) {
  detail::check_traces(traces);
  CellPartition out;
  for (const CellTrace& t : traces) {
    switch (classify(t)) {
      case CellClass::StableZero: out.stable_zero.push_back(t); break;
      case CellClass::StableOne: out.stable_one.push_back(t); break;
      case CellClass::Variable: out.variable.push_back(t); break;
    }
  }
  return out;
}

enum class RescalePolicy { SmallestRepresentable, ObservedMinMax };

inline const char* to_string(RescalePolicy p) noexcept {
  return p == RescalePolicy::SmallestRepresentable ? "smallest" : "observed";
}

struct FrequencyBounds {
  double min_freq;
  double max_freq;
  friend bool operator==(const FrequencyBounds&, const FrequencyBounds&) = default;
};

/// Range of one-frequencies that the beta model is restricted to.
/// SmallestRepresentable gives (1/k, (k-1)/k) whatever the data.
inline FrequencyBounds rescale_bounds(std::uint64_t k, RescalePolicy policy, std::span<const CellTrace> variable) {
  if (k < 2) throw ParameterError("rescaling needs k >= 2");
  FrequencyBounds b{};
  if (policy == RescalePolicy::SmallestRepresentable) {
    if (k == 2) throw ParameterError("k = 2 leaves no room between 1/k and (k-1)/k");
    const double kd = static_cast<double>(k);
    b = {1.0 / kd, static_cast<double>(k - 1) / kd};
  } else {
    if (variable.empty()) throw DegenerateSampleError("observed min/max requires at least one variable cell");
    auto [lo, hi] = std::minmax_element(variable.begin(), variable.end(), [](const CellTrace& x, const CellTrace& y) {
      return x.one_frequency() < y.one_frequency();
    });
    b = {lo->one_frequency(), hi->one_frequency()};
  }
  if (!(b.min_freq > 0.0 && b.min_freq <= b.max_freq && b.max_freq < 1.0)) {
    throw DegenerateSampleError("re-scaled bounds must satisfy 0 < min <= max < 1");
  }
  return b;
}

/// 2^t - 1 thresholds splitting the beta mass on [min_freq, max_freq] into
/// equal parts. Threshold i is Q(F(min) + (i+1) (F(max) - F(min)) / 2^t);
/// the targets are formed so that the set for t bits is bit-identical to the
/// odd-indexed (0-based) entries of the set for t + 1 bits.
inline std::vector<double> compute_thresholds(const BetaParams& params, double min_freq, double max_freq, int t_bits) {
  if (t_bits < 1 || t_bits > kMaxSymbolBits) throw ParameterError("t_bits must be in [1, 8]: " + std::to_string(t_bits));
  if (!(min_freq > 0.0 && min_freq < max_freq && max_freq < 1.0)) {
    throw DomainError("threshold range must satisfy 0 < min < max < 1");
  }
  const double f_lo = beta_cdf(min_freq, params);
  const double f_hi = beta_cdf(max_freq, params);
  const double span = f_hi - f_lo;
  if (!(span >= 1e-12)) throw DegenerateSampleError("beta mass between min and max is below 1e-12");
  const std::size_t sections = std::size_t{1} << t_bits;
  std::vector<double> out;
  out.reserve(sections - 1);
  for (std::size_t i = 1; i < sections; ++i) {
    const double target = f_lo + (static_cast<double>(i) * span) / static_cast<double>(sections);
    out.push_back(beta_quantile(target, params));
  }
  for (std::size_t i = 0; i < out.size(); ++i) {
    const double left = i == 0 ? min_freq : out[i - 1];
    if (!(out[i] > left)) throw DegenerateSampleError("thresholds are not strictly increasing at index " + std::to_string(i));
  }
  if (!(out.back() < max_freq)) throw DegenerateSampleError("last threshold reaches max_freq");
  return out;
}

/// Section index of `freq` under half-open sections [T_{i-1}, T_i), last one
/// closed. Values outside [min, max] are clamped; ties go to the upper section.
inline std::uint32_t section_index(double freq, std::span<const double> thresholds, FrequencyBounds bounds) {
  const double f = std::clamp(freq, bounds.min_freq, bounds.max_freq);
  return static_cast<std::uint32_t>(std::upper_bound(thresholds.begin(), thresholds.end(), f) - thresholds.begin());
}

/// Per-cell output: a stable bit (width-1 word) or a symbol with its Gray word.
struct ResponseRecord {
  std::uint64_t cell_id;
  CellClass cell_class;
  std::optional<std::uint32_t> symbol;
  GrayWord bits;

  friend bool operator==(const ResponseRecord&, const ResponseRecord&) = default;
};

inline ResponseRecord stable_record(std::uint64_t cell_id, bool one) {
  return {cell_id, one ? CellClass::StableOne : CellClass::StableZero, std::nullopt, gray_encode(one ? 1u : 0u, 1)};
}

/// Enrollment artifact. Immutable; reconstruction only reads it.
class ExtractionProfile {
 public:
  static constexpr int kVersion = 1;

  ExtractionProfile(int t_bits, BetaParams params, std::uint64_t k, FrequencyBounds bounds,
                    std::vector<double> thresholds, std::vector<ResponseRecord> enrolled)
      : t_bits_(t_bits),
        params_(params),
        k_(k),
        bounds_(bounds),
        thresholds_(std::move(thresholds)),
        enrolled_(std::move(enrolled)) {
    if (t_bits_ < 1 || t_bits_ > kMaxSymbolBits) throw DataError("profile t_bits must be in [1, 8]");
    if (k_ < 2) throw DataError("profile k must be at least 2");
    if (thresholds_.size() != alphabet() - 1) throw DataError("profile needs 2^t - 1 thresholds");
    if (!(bounds_.min_freq > 0.0 && bounds_.max_freq < 1.0)) throw DataError("profile bounds outside (0, 1)");
    double prev = bounds_.min_freq;
    for (double t : thresholds_) {
      if (!(t > prev)) throw DataError("profile thresholds must be strictly increasing inside (min, max)");
      prev = t;
    }
    if (!(bounds_.max_freq > prev)) throw DataError("profile max_freq must exceed the last threshold");
    std::sort(enrolled_.begin(), enrolled_.end(),
              [](const ResponseRecord& a, const ResponseRecord& b) { return a.cell_id < b.cell_id; });
    for (std::size_t i = 0; i < enrolled_.size(); ++i) {
      const ResponseRecord& r = enrolled_[i];
      if (i > 0 && enrolled_[i - 1].cell_id == r.cell_id) throw DataError("duplicate cell id " + std::to_string(r.cell_id));
      const bool variable = r.cell_class == CellClass::Variable;
      if (variable != r.symbol.has_value()) throw DataError("cell " + std::to_string(r.cell_id) + ": symbol/class mismatch");
      const bool ok = variable ? (*r.symbol < alphabet() && r.bits == gray_encode(*r.symbol, t_bits_))
                               : (r.bits == gray_encode(r.cell_class == CellClass::StableOne ? 1u : 0u, 1));
      if (!ok) throw DataError("cell " + std::to_string(r.cell_id) + ": bits do not match its class/symbol");
    }
  }

  [[nodiscard]] int t_bits() const noexcept { return t_bits_; }
  [[nodiscard]] std::uint32_t alphabet() const noexcept { return std::uint32_t{1} << t_bits_; }
  [[nodiscard]] const BetaParams& params() const noexcept { return params_; }
  [[nodiscard]] std::uint64_t k() const noexcept { return k_; }
  [[nodiscard]] FrequencyBounds bounds() const noexcept { return bounds_; }
  [[nodiscard]] double min_freq() const noexcept { return bounds_.min_freq; }
  [[nodiscard]] double max_freq() const noexcept { return bounds_.max_freq; }
  [[nodiscard]] std::span<const double> thresholds() const noexcept { return thresholds_; }
  /// Enrolled responses sorted by cell id.
  [[nodiscard]] std::span<const ResponseRecord> enrolled() const noexcept { return enrolled_; }

  [[nodiscard]] const ResponseRecord* find(std::uint64_t cell_id) const noexcept {
    auto it = std::lower_bound(enrolled_.begin(), enrolled_.end(), cell_id,
                               [](const ResponseRecord& r, std::uint64_t id) { return r.cell_id < id; });
    return (it != enrolled_.end() && it->cell_id == cell_id) ? &*it : nullptr;
  }

  friend bool operator==(const ExtractionProfile&, const ExtractionProfile&) = default;

 private:
  int t_bits_;
  BetaParams params_;
  std::uint64_t k_;
  FrequencyBounds bounds_;
  std::vector<double> thresholds_;
  std::vector<ResponseRecord> enrolled_;
};

inline std::uint32_t map_frequency_to_symbol(double freq, const ExtractionProfile& profile) {
  return section_index(freq, profile.thresholds(), profile.bounds());
}

inline ResponseRecord extract_response(const CellTrace& trace, const ExtractionProfile& profile) {
  if (trace.k != profile.k()) {
    throw DataError("cell " + std::to_string(trace.cell_id) + ": k=" + std::to_string(trace.k) +
                    " does not match profile k=" + std::to_string(profile.k()));
  }
  if (trace.ones > trace.k) throw DataError("cell " + std::to_string(trace.cell_id) + " has ones > k");
  const CellClass c = classify(trace);
  if (c != CellClass::Variable) return stable_record(trace.cell_id, c == CellClass::StableOne);
  const std::uint32_t s = map_frequency_to_symbol(trace.one_frequency(), profile);
  return {trace.cell_id, CellClass::Variable, s, gray_encode(s, profile.t_bits())};
}

struct EnrollOptions {
  int t_bits = 2;
  FitMethod fit_method = FitMethod::MaxLikelihood;
  RescalePolicy rescale = RescalePolicy::SmallestRepresentable;
};

/// Variable-cell one-frequencies clamped to the re-scaled bounds: the
/// samples the beta model is fitted on.
inline std::vector<double> rescaled_samples(std::span<const CellTrace> variable, FrequencyBounds bounds) {
  std::vector<double> out;
  out.reserve(variable.size());
  for (const CellTrace& t : variable) out.push_back(std::clamp(t.one_frequency(), bounds.min_freq, bounds.max_freq));
  return out;
}

inline void check_unique_ids(std::span<const CellTrace> traces) {
  std::set<std::uint64_t> seen;
  for (const CellTrace& t : traces) {
    if (!seen.insert(t.cell_id).second) throw DataError("duplicate cell id " + std::to_string(t.cell_id));
  }
}

/// Full enrollment: classify, re-scale, fit, threshold, extract every cell.
inline ExtractionProfile enroll(std::span<const CellTrace> traces, const EnrollOptions& opt = {}) {
  if (opt.t_bits < 1 || opt.t_bits > kMaxSymbolBits) throw ParameterError("t_bits must be in [1, 8]");
  const CellPartition part = classify_cells(traces);
  check_unique_ids(traces);
  {
    std::set<std::uint64_t> distinct;
    for (const CellTrace& t : part.variable) distinct.insert(t.ones);
    if (distinct.size() < 2) {
      throw DegenerateSampleError("enrollment needs at least 2 variable cells with distinct one-frequencies (found " +
                                  std::to_string(part.variable.size()) + " variable cells)");
    }
  }
  const std::uint64_t k = traces.front().k;
  const FrequencyBounds bounds = rescale_bounds(k, opt.rescale, part.variable);
  const std::vector<double> samples = rescaled_samples(part.variable, bounds);
  const FitReport fitted = fit(samples, opt.fit_method);
  std::vector<double> thresholds = compute_thresholds(fitted.params, bounds.min_freq, bounds.max_freq, opt.t_bits);

  std::vector<ResponseRecord> records;
  records.reserve(traces.size());
  for (const CellTrace& t : traces) {
    const CellClass c = classify(t);
    if (c != CellClass::Variable) {
      records.push_back(stable_record(t.cell_id, c == CellClass::StableOne));
    } else {
      const std::uint32_t s = section_index(t.one_frequency(), thresholds, bounds);
      records.push_back({t.cell_id, CellClass::Variable, s, gray_encode(s, opt.t_bits)});
    }
  }
  return ExtractionProfile(opt.t_bits, fitted.params, k, bounds, std::move(thresholds), std::move(records));
}

/// Re-extracts every enrolled cell against the stored profile. Cells keep
/// their enrolled class; an enrolled-stable cell is decided by majority
/// (2 * ones >= k gives 1), an enrolled-variable cell is mapped with clamping.
inline std::vector<ResponseRecord> reconstruct(std::span<const CellTrace> traces, const ExtractionProfile& profile) {
  check_unique_ids(traces);
  std::vector<ResponseRecord> out;
  out.reserve(traces.size());
  for (const CellTrace& t : traces) {
    if (t.k != profile.k()) {
      throw DataError("cell " + std::to_string(t.cell_id) + ": k=" + std::to_string(t.k) +
                      " does not match profile k=" + std::to_string(profile.k()));
    }
    if (t.ones > t.k) throw DataError("cell " + std::to_string(t.cell_id) + " has ones > k");
    const ResponseRecord* enrolled = profile.find(t.cell_id);
    if (enrolled == nullptr) throw DataError("cell " + std::to_string(t.cell_id) + " is not in the profile");
    if (enrolled->cell_class == CellClass::Variable) {
      const std::uint32_t s = map_frequency_to_symbol(t.one_frequency(), profile);
      out.push_back({t.cell_id, CellClass::Variable, s, gray_encode(s, profile.t_bits())});
    } else {
      ResponseRecord r = stable_record(t.cell_id, 2 * t.ones >= t.k);
      r.cell_class = enrolled->cell_class;
      out.push_back(r);
    }
  }
  if (out.size() != profile.enrolled().size()) {
    throw DataError("reconstruction covers " + std::to_string(out.size()) + " cells, profile has " +
                    std::to_string(profile.enrolled().size()));
  }
  std::sort(out.begin(), out.end(), [](const ResponseRecord& a, const ResponseRecord& b) { return a.cell_id < b.cell_id; });
  return out;
}

using BitSequence = std::vector<std::uint8_t>;

enum class KeyOrder { ByCellId };

/// Concatenates record bits in cell-id order.
inline BitSequence assemble_key(std::span<const ResponseRecord> records, KeyOrder = KeyOrder::ByCellId) {
  if (records.empty()) throw DataError("cannot assemble a key from zero records");
  std::vector<const ResponseRecord*> order;
  order.reserve(records.size());
  for (const ResponseRecord& r : records) order.push_back(&r);
  std::sort(order.begin(), order.end(), [](const ResponseRecord* a, const ResponseRecord* b) { return a->cell_id < b->cell_id; });
  BitSequence key;
  for (std::size_t i = 0; i < order.size(); ++i) {
    if (i > 0 && order[i - 1]->cell_id == order[i]->cell_id) {
      throw DataError("duplicate cell id " + std::to_string(order[i]->cell_id));
    }
    const GrayWord& w = order[i]->bits;
    for (int b = 0; b < w.width(); ++b) key.push_back(w.bit(b) ? 1 : 0);
  }
  return key;
}

inline std::string to_string(const BitSequence& bits) {
  std::string s;
  s.reserve(bits.size());
  for (std::uint8_t b : bits) s.push_back(b ? '1' : '0');
  return s;
}

}  // namespace nbpuf

#endif  // NBPUF_EXTRACTION_HPP
