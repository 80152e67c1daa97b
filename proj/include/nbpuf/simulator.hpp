#ifndef NBPUF_SIMULATOR_HPP
#define NBPUF_SIMULATOR_HPP

/**
 * @file simulator.hpp
 * @brief Synthetic PUF populations and enroll-once / re-measure experiments.
 *
 * Every random draw comes from a counter-based stream keyed by
 * (seed, purpose, repeat, cell). A cell's trace therefore does not depend on
 * which other cells are evaluated, in what order, or on how many workers.
 */

#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

#include "nbpuf/beta_model.hpp"
#include "nbpuf/error.hpp"
#include "nbpuf/extraction.hpp"
#include "nbpuf/metrics.hpp"

namespace nbpuf {

/// SplitMix64 finalizer.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Deterministic stream: the n-th draw is a pure function of (key, n).
class CounterStream {
 public:
  explicit constexpr CounterStream(std::uint64_t key) noexcept : key_(key) {}

  static constexpr std::uint64_t derive_key(std::uint64_t seed, std::uint64_t purpose, std::uint64_t repeat,
                                            std::uint64_t cell) noexcept {
    return mix64(mix64(mix64(mix64(seed) ^ purpose) ^ repeat) ^ cell);
  }

  constexpr std::uint64_t next_u64() noexcept { return mix64(key_ ^ mix64(counter_++)); }

  /// Uniform on the open interval (0, 1), 53-bit resolution.
  constexpr double next_open_unit() noexcept {
    return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
  }

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

namespace stream_purpose {
inline constexpr std::uint64_t kPopulation = 0x706f70756c617469ULL;
inline constexpr std::uint64_t kEvaluation = 0x6576616c75617465ULL;
}  // namespace stream_purpose

struct PopulationSpec {
  std::size_t n_cells = 1024;
  BetaParams params{0.0032, 0.0028};
  std::uint64_t k = 1048575;
  std::uint64_t seed = 1;
  int repeats = 2;
};

inline void validate(const PopulationSpec& s) {
  if (s.n_cells < 1) throw ParameterError("population needs at least one cell");
  if (s.k < 1) throw ParameterError("k must be positive");
  if (s.repeats < 2) throw ParameterError("repeats must be at least 2 (one enrollment and one reconstruction)");
}

/// One-probability of a single cell (inverse-CDF draw).
inline double sample_cell_probability(const PopulationSpec& spec, std::uint64_t cell_id) {
  CounterStream rng(CounterStream::derive_key(spec.seed, stream_purpose::kPopulation, 0, cell_id));
  return beta_quantile(rng.next_open_unit(), spec.params);
}

inline std::vector<double> sample_population(const PopulationSpec& spec) {
  validate(spec);
  std::vector<double> p(spec.n_cells);
  for (std::size_t i = 0; i < spec.n_cells; ++i) p[i] = sample_cell_probability(spec, i);
  return p;
}

/// P(X <= c) for X ~ Binomial(k, p).
inline double binomial_cdf(std::uint64_t c, std::uint64_t k, double p) {
  if (c >= k || p <= 0.0) return 1.0;
  if (p >= 1.0) return 0.0;
  // P(X <= c) = I_{1-p}(k - c, c + 1)
  const UnitPoint one_minus_p = UnitPoint::from_value(p).reflected();
  return std::exp(incomplete_beta_tails(one_minus_p, static_cast<double>(k - c), static_cast<double>(c) + 1.0).log_lower);
}

/// P(X > c) for X ~ Binomial(k, p), accurate in the far tail.
inline double binomial_sf(std::uint64_t c, std::uint64_t k, double p) {
  if (c >= k || p <= 0.0) return 0.0;
  if (p >= 1.0) return 1.0;
  const UnitPoint one_minus_p = UnitPoint::from_value(p).reflected();
  return std::exp(incomplete_beta_tails(one_minus_p, static_cast<double>(k - c), static_cast<double>(c) + 1.0).log_upper);
}

inline constexpr std::uint64_t kBernoulliSummationLimit = 10000;

/// Binomial(k, p) draw. Small k sums k Bernoulli trials; larger k inverts the
/// CDF starting from the mode, walking by the pmf recurrence (expected
/// O(sqrt(k p (1-p))) steps).
inline std::uint64_t sample_binomial(CounterStream& rng, std::uint64_t k, double p) {
  if (p <= 0.0) return 0;
  if (p >= 1.0) return k;
  if (k <= kBernoulliSummationLimit) {
    std::uint64_t ones = 0;
    for (std::uint64_t i = 0; i < k; ++i) ones += rng.next_open_unit() < p;
    return ones;
  }
  const double u = rng.next_open_unit();
  const double kd = static_cast<double>(k);
  const auto mode = std::min(k, static_cast<std::uint64_t>(std::floor((kd + 1.0) * p)));
  const double md = static_cast<double>(mode);
  const double log_pmf_mode = detail::log_gamma(kd + 1.0) - detail::log_gamma(md + 1.0) - detail::log_gamma(kd - md + 1.0) +
                              md * std::log(p) + (kd - md) * std::log1p(-p);
  double pmf = std::exp(log_pmf_mode);
  double cdf = binomial_cdf(mode, k, p);
  const double odds = p / (1.0 - p);
  std::uint64_t m = mode;
  if (u <= cdf) {
    // walk down while u still lies at or below P(X <= m - 1)
    while (m > 0 && u <= cdf - pmf) {
      cdf -= pmf;
      pmf *= static_cast<double>(m) / ((kd - static_cast<double>(m) + 1.0) * odds);
      --m;
      if (pmf <= 0.0) break;
    }
  } else {
    while (m < k && u > cdf) {
      ++m;
      pmf *= (kd - static_cast<double>(m) + 1.0) / static_cast<double>(m) * odds;
      cdf += pmf;
      if (pmf <= 0.0) break;
    }
  }
  return m;
}

/// Trace of cell `cell_id` in measurement `repeat_index`.
inline CellTrace evaluate_cell(double p, std::uint64_t cell_id, std::uint64_t k, std::uint64_t seed, std::uint64_t repeat_index) {
  CounterStream rng(CounterStream::derive_key(seed, stream_purpose::kEvaluation, repeat_index, cell_id));
  return {cell_id, k, sample_binomial(rng, k, p)};
}

inline std::vector<CellTrace> evaluate_population(std::span<const double> probabilities, std::uint64_t k, std::uint64_t seed,
                                                  std::uint64_t repeat_index) {
  if (k < 1) throw ParameterError("k must be positive");
  std::vector<CellTrace> out;
  out.reserve(probabilities.size());
  for (std::size_t i = 0; i < probabilities.size(); ++i) {
    const double p = probabilities[i];
    if (!(p >= 0.0 && p <= 1.0)) throw DomainError("one-probability outside [0, 1] for cell " + std::to_string(i));
    out.push_back(evaluate_cell(p, i, k, seed, repeat_index));
  }
  return out;
}

struct ExperimentResult {
  ExtractionProfile profile;
  std::vector<MetricsReport> per_repeat;
  std::vector<double> true_probabilities;
};

struct ExperimentOptions {
  int t_bits = 2;
  FitMethod fit_method = FitMethod::MaxLikelihood;
  RescalePolicy rescale = RescalePolicy::SmallestRepresentable;
};

/// Repeat 0 enrolls, repeats 1..r-1 are reconstructed against it. The
/// optional sink receives every repeat's traces (for CSV export).
template <typename TraceSink>
ExperimentResult run_experiment(const PopulationSpec& spec, const ExperimentOptions& opt, TraceSink&& sink) {
  validate(spec);
  std::vector<double> probs = sample_population(spec);
  const std::vector<CellTrace> enroll_traces = evaluate_population(probs, spec.k, spec.seed, 0);
  sink(0, enroll_traces);
  ExtractionProfile profile = enroll(enroll_traces, {opt.t_bits, opt.fit_method, opt.rescale});
  std::vector<MetricsReport> reports;
  for (int r = 1; r < spec.repeats; ++r) {
    const std::vector<CellTrace> traces = evaluate_population(probs, spec.k, spec.seed, static_cast<std::uint64_t>(r));
    sink(r, traces);
    reports.push_back(evaluate_reconstruction(profile, reconstruct(traces, profile)));
  }
  return {std::move(profile), std::move(reports), std::move(probs)};
}

inline ExperimentResult run_experiment(const PopulationSpec& spec, const ExperimentOptions& opt = {}) {
  return run_experiment(spec, opt, [](int, const std::vector<CellTrace>&) {});
}

/// Smallest count m in [0, k + 1] with m / k >= threshold, using the same
/// floating-point comparison as section_index.
inline std::uint64_t count_boundary(double threshold, std::uint64_t k) {
  const double kd = static_cast<double>(k);
  auto at_or_above = [&](std::uint64_t m) { return static_cast<double>(m) / kd >= threshold; };
  double guess = std::ceil(threshold * kd);
  guess = std::clamp(guess, 0.0, kd + 1.0);
  auto m = static_cast<std::uint64_t>(guess);
  while (m > 0 && at_or_above(m - 1)) --m;
  while (m <= k && !at_or_above(m)) ++m;
  return m;
}

/// Integer count range [lo, hi] of measurements m that map to `symbol`.
struct CountRange {
  std::uint64_t lo;
  std::uint64_t hi_exclusive;
};

inline CountRange symbol_count_range(const ExtractionProfile& profile, std::uint32_t symbol, std::uint64_t k) {
  if (symbol >= profile.alphabet()) throw DomainError("symbol outside the alphabet");
  std::span<const double> th = profile.thresholds();
  const std::uint64_t lo = symbol == 0 ? 0 : count_boundary(th[symbol - 1], k);
  const std::uint64_t hi = symbol + 1 == profile.alphabet() ? k + 1 : count_boundary(th[symbol], k);
  return {lo, hi};
}

/// Probability that a cell with one-probability p, measured k times, lands
/// outside the section of `enrolled_symbol`.
inline double predict_symbol_error(double p, const ExtractionProfile& profile, std::uint32_t enrolled_symbol, std::uint64_t k) {
  if (!(p >= 0.0 && p <= 1.0)) throw DomainError("one-probability outside [0, 1]");
  if (k < 1) throw ParameterError("k must be positive");
  const CountRange r = symbol_count_range(profile, enrolled_symbol, k);
  double below = 0.0;
  double above = 0.0;
  if (r.lo > 0) below = binomial_cdf(r.lo - 1, k, p);
  if (r.hi_exclusive <= k) above = binomial_sf(r.hi_exclusive - 1, k, p);
  if (r.hi_exclusive <= r.lo) return 1.0;
  return std::min(1.0, below + above);
}

}  // namespace nbpuf

#endif  // NBPUF_SIMULATOR_HPP
