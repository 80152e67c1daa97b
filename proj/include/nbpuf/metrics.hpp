#ifndef NBPUF_METRICS_HPP
#define NBPUF_METRICS_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "nbpuf/error.hpp"
#include "nbpuf/extraction.hpp"

namespace nbpuf {

/// Shannon entropy in bits of the empirical distribution given by `counts`.
inline double shannon_entropy(std::span<const std::uint64_t> counts) {
  double total = 0.0;
  for (std::uint64_t c : counts) total += static_cast<double>(c);
  if (!(total > 0.0)) throw DomainError("entropy of an all-zero histogram is undefined");
  double h = 0.0;
  for (std::uint64_t c : counts) {
    if (c == 0) continue;
    const double p = static_cast<double>(c) / total;
    h -= p * std::log2(p);
  }
  return h;
}

struct StableCounts {
  std::uint64_t zeros;
  std::uint64_t ones;
};

/// Entropy per cell of a population made of stable bits and 2^t-ary symbols,
/// each part weighted by its share of the cells.
inline double combined_entropy(StableCounts stable, std::span<const std::uint64_t> symbol_counts, std::uint64_t n_total) {
  std::uint64_t n_sym = 0;
  for (std::uint64_t c : symbol_counts) n_sym += c;
  const std::uint64_t n_stable = stable.zeros + stable.ones;
  if (n_stable + n_sym != n_total || n_total == 0) {
    throw DataError("combined entropy counts do not add up: " + std::to_string(n_stable) + " + " +
                    std::to_string(n_sym) + " != " + std::to_string(n_total));
  }
  const double n = static_cast<double>(n_total);
  double h = 0.0;
  if (n_stable > 0) {
    const std::uint64_t sc[2] = {stable.zeros, stable.ones};
    h += shannon_entropy(sc) * static_cast<double>(n_stable) / n;
  }
  if (n_sym > 0) h += shannon_entropy(symbol_counts) * static_cast<double>(n_sym) / n;
  return h;
}

/// Entropy per cell times cell count, rounded half away from zero.
inline std::int64_t effective_key_length(double entropy_per_cell, std::uint64_t n_cells) {
  if (!(entropy_per_cell >= 0.0)) throw DomainError("entropy must be non-negative");
  if (n_cells == 0) throw DomainError("cell count must be positive");
  return static_cast<std::int64_t>(std::llround(entropy_per_cell * static_cast<double>(n_cells)));
}

struct SymbolErrorStats {
  double rate;
  /// Share of erroneous cells whose symbol moved by exactly one; 1 when there
  /// are no errors.
  double adjacent_fraction;
  std::size_t errors;
  std::size_t adjacent_errors;
  std::size_t cells;
};

/// Symbol error rate over Variable cells. Both inputs must hold the same
/// variable cell ids (any order).
inline SymbolErrorStats symbol_error_rate(std::span<const ResponseRecord> enrolled, std::span<const ResponseRecord> measured) {
  std::vector<const ResponseRecord*> a;
  std::vector<const ResponseRecord*> b;
  for (const ResponseRecord& r : enrolled)
    if (r.cell_class == CellClass::Variable) a.push_back(&r);
  for (const ResponseRecord& r : measured)
    if (r.cell_class == CellClass::Variable) b.push_back(&r);
  auto by_id = [](const ResponseRecord* x, const ResponseRecord* y) { return x->cell_id < y->cell_id; };
  std::sort(a.begin(), a.end(), by_id);
  std::sort(b.begin(), b.end(), by_id);
  if (a.size() != b.size()) throw DataError("enrolled and measured variable cell sets differ in size");
  SymbolErrorStats s{0.0, 1.0, 0, 0, a.size()};
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i]->cell_id != b[i]->cell_id) throw DataError("enrolled and measured variable cell sets differ");
    if (!a[i]->symbol || !b[i]->symbol) throw DataError("variable record without a symbol");
    const auto x = static_cast<std::int64_t>(*a[i]->symbol);
    const auto y = static_cast<std::int64_t>(*b[i]->symbol);
    if (x != y) {
      ++s.errors;
      if (std::llabs(x - y) == 1) ++s.adjacent_errors;
    }
  }
  if (s.cells > 0) s.rate = static_cast<double>(s.errors) / static_cast<double>(s.cells);
  if (s.errors > 0) s.adjacent_fraction = static_cast<double>(s.adjacent_errors) / static_cast<double>(s.errors);
  return s;
}

inline std::size_t hamming_distance(std::span<const std::uint8_t> a, std::span<const std::uint8_t> b) {
  if (a.size() != b.size()) throw DataError("bit sequences differ in length");
  std::size_t d = 0;
  for (std::size_t i = 0; i < a.size(); ++i) d += (a[i] != 0) != (b[i] != 0);
  return d;
}

inline double bit_error_rate(std::span<const std::uint8_t> enrolled, std::span<const std::uint8_t> measured) {
  if (enrolled.size() != measured.size()) {
    throw DataError("bit sequences differ in length: " + std::to_string(enrolled.size()) + " vs " +
                    std::to_string(measured.size()));
  }
  if (enrolled.empty()) return 0.0;
  return static_cast<double>(hamming_distance(enrolled, measured)) / static_cast<double>(enrolled.size());
}

/// Fraction of ones.
inline double bias(std::span<const std::uint8_t> bits) {
  if (bits.empty()) throw DomainError("bias of an empty bit sequence is undefined");
  std::size_t ones = 0;
  for (std::uint8_t b : bits) ones += b != 0;
  return static_cast<double>(ones) / static_cast<double>(bits.size());
}

/// A rate measured over `weight` units (bits).
struct WeightedRate {
  double rate;
  double weight;
};

/// Pooled rate of several components, weighted by their sizes.
inline double combine_rates(std::span<const WeightedRate> parts) {
  double num = 0.0;
  double den = 0.0;
  for (const WeightedRate& p : parts) {
    if (!(p.weight >= 0.0)) throw DomainError("negative weight");
    num += p.rate * p.weight;
    den += p.weight;
  }
  if (!(den > 0.0)) throw DomainError("total weight must be positive");
  return num / den;
}

struct ClassCounts {
  std::uint64_t n_stable0 = 0;
  std::uint64_t n_stable1 = 0;
  std::uint64_t n_variable = 0;
  std::vector<std::uint64_t> symbol_histogram;

  friend bool operator==(const ClassCounts&, const ClassCounts&) = default;
};

inline ClassCounts count_classes(std::span<const ResponseRecord> records, int t_bits) {
  ClassCounts c;
  c.symbol_histogram.assign(std::size_t{1} << t_bits, 0);
  for (const ResponseRecord& r : records) {
    switch (r.cell_class) {
      case CellClass::StableZero: ++c.n_stable0; break;
      case CellClass::StableOne: ++c.n_stable1; break;
      case CellClass::Variable:
        ++c.n_variable;
        if (!r.symbol || *r.symbol >= c.symbol_histogram.size()) throw DataError("symbol outside the alphabet");
        ++c.symbol_histogram[*r.symbol];
        break;
    }
  }
  return c;
}

/// Table-1 style summary of one reconstruction against its enrollment.
/// Entropy and key length describe the enrolled population; error rates and
/// bias describe the measured key.
struct MetricsReport {
  int t_bits = 0;
  double entropy_per_cell = 0.0;
  std::int64_t effective_key_length = 0;
  double symbol_error_rate = 0.0;
  double adjacent_error_fraction = 1.0;
  std::size_t symbol_errors = 0;
  std::size_t adjacent_errors = 0;
  double bit_error_rate = 0.0;
  double variable_bit_error_rate = 0.0;
  double stable_bit_error_rate = 0.0;
  double bias = 0.0;
  double variable_bias = 0.0;
  std::size_t key_bits = 0;
  ClassCounts counts;
};

namespace detail {

inline void split_bits(std::span<const ResponseRecord> sorted, BitSequence& stable, BitSequence& variable) {
  for (const ResponseRecord& r : sorted) {
    BitSequence& dst = r.cell_class == CellClass::Variable ? variable : stable;
    for (int b = 0; b < r.bits.width(); ++b) dst.push_back(r.bits.bit(b) ? 1 : 0);
  }
}

}  // namespace detail

/// Entropy and key length of an enrolled population.
inline double profile_entropy(const ExtractionProfile& profile) {
  const ClassCounts c = count_classes(profile.enrolled(), profile.t_bits());
  return combined_entropy({c.n_stable0, c.n_stable1}, c.symbol_histogram, profile.enrolled().size());
}

/// Compares reconstructed records (as returned by reconstruct) with the
/// profile's enrolled records.
inline MetricsReport evaluate_reconstruction(const ExtractionProfile& profile, std::span<const ResponseRecord> measured) {
  std::span<const ResponseRecord> enrolled = profile.enrolled();
  std::vector<ResponseRecord> m(measured.begin(), measured.end());
  std::sort(m.begin(), m.end(), [](const ResponseRecord& a, const ResponseRecord& b) { return a.cell_id < b.cell_id; });
  if (m.size() != enrolled.size()) throw DataError("measured records do not cover the profile");
  for (std::size_t i = 0; i < m.size(); ++i) {
    if (m[i].cell_id != enrolled[i].cell_id || m[i].cell_class != enrolled[i].cell_class) {
      throw DataError("measured record for cell " + std::to_string(m[i].cell_id) + " does not match the profile");
    }
  }

  MetricsReport r;
  r.t_bits = profile.t_bits();
  r.counts = count_classes(enrolled, profile.t_bits());
  r.entropy_per_cell = combined_entropy({r.counts.n_stable0, r.counts.n_stable1}, r.counts.symbol_histogram, enrolled.size());
  r.effective_key_length = effective_key_length(r.entropy_per_cell, enrolled.size());

  const SymbolErrorStats ser = symbol_error_rate(enrolled, m);
  r.symbol_error_rate = ser.rate;
  r.adjacent_error_fraction = ser.adjacent_fraction;
  r.symbol_errors = ser.errors;
  r.adjacent_errors = ser.adjacent_errors;

  BitSequence es, ev, ms, mv;
  detail::split_bits(enrolled, es, ev);
  detail::split_bits(m, ms, mv);
  const BitSequence ek = assemble_key(enrolled);
  const BitSequence mk = assemble_key(m);
  r.key_bits = mk.size();
  r.bit_error_rate = bit_error_rate(ek, mk);
  r.stable_bit_error_rate = bit_error_rate(es, ms);
  r.variable_bit_error_rate = bit_error_rate(ev, mv);
  r.bias = bias(mk);
  r.variable_bias = mv.empty() ? 0.0 : bias(mv);
  return r;
}

/// One row of the alphabet comparison table. Error columns are absent when no
/// reconstruction was available.
struct TableRow {
  std::string alphabet;
  double entropy;
  std::int64_t effective_key_length;
  std::optional<double> symbol_error_rate;
  std::optional<double> bit_error_rate;
  double bias;
};

inline std::string alphabet_name(int t_bits) {
  if (t_bits == 1) return "binary";
  if (t_bits == 2) return "quaternary";
  return std::to_string(1 << t_bits) + "-ary";
}

/// Plain-text table with 4-decimal rates.
inline std::string format_table(std::span<const TableRow> rows) {
  std::string out;
  char line[160];
  std::snprintf(line, sizeof line, "%-12s %8s %14s %10s %10s %8s\n", "alphabet", "entropy", "eff_key_length", "SER", "BER",
                "bias");
  out += line;
  for (const TableRow& r : rows) {
    char ser[32] = "-";
    char ber[32] = "-";
    if (r.symbol_error_rate) std::snprintf(ser, sizeof ser, "%.4f", *r.symbol_error_rate);
    if (r.bit_error_rate) std::snprintf(ber, sizeof ber, "%.4f", *r.bit_error_rate);
    std::snprintf(line, sizeof line, "%-12s %8.4f %14lld %10s %10s %8.4f\n", r.alphabet.c_str(), r.entropy,
                  static_cast<long long>(r.effective_key_length), ser, ber, r.bias);
    out += line;
  }
  return out;
}

}  // namespace nbpuf

#endif  // NBPUF_METRICS_HPP
