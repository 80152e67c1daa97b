#include "nbpuf/metrics.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <vector>

namespace nbpuf {
namespace {

using Counts = std::vector<std::uint64_t>;

const Counts kQuaternary{10, 16, 18, 11};
const Counts kOctal{6, 4, 4, 12, 10, 8, 7, 4};
const Counts kHex{3, 3, 3, 1, 2, 2, 4, 8, 4, 6, 4, 4, 4, 3, 1, 3};

// Independent oracle: entropy via natural logs.
double entropy_oracle(const Counts& c) {
  double n = 0;
  for (auto x : c) n += static_cast<double>(x);
  double h = 0;
  for (auto x : c)
    if (x) h -= static_cast<double>(x) / n * std::log(static_cast<double>(x) / n);
  return h / std::log(2.0);
}

TEST(Entropy, ReferenceValues) {
  EXPECT_NEAR(shannon_entropy(Counts{549, 475}), 0.9962, 5e-5);
  EXPECT_NEAR(shannon_entropy(Counts{449, 520}), 0.9961, 5e-5);
  EXPECT_NEAR(shannon_entropy(kQuaternary), 1.9571, 5e-5);
  EXPECT_NEAR(shannon_entropy(kOctal), 2.8832, 5e-5);
  EXPECT_NEAR(shannon_entropy(kHex), 3.8307, 5e-5);
  EXPECT_DOUBLE_EQ(shannon_entropy(Counts{1, 1}), 1.0);
}

TEST(Entropy, MatchesOracleAndBounds) {
  for (const Counts& c : {kQuaternary, kOctal, kHex, Counts{5, 0, 0}, Counts{1, 2, 3, 4, 5, 6, 7}}) {
    const double h = shannon_entropy(c);
    EXPECT_NEAR(h, entropy_oracle(c), 1e-12);
    EXPECT_GE(h, 0.0);
    EXPECT_LE(h, std::log2(static_cast<double>(c.size())) + 1e-12);
  }
  EXPECT_EQ(shannon_entropy(Counts{0, 7, 0}), 0.0);
  EXPECT_THROW(shannon_entropy(Counts{0, 0}), DomainError);
  EXPECT_THROW(shannon_entropy(Counts{}), DomainError);
}

TEST(CombinedEntropy, WeightedSumOfParts) {
  const double h_stable = entropy_oracle(Counts{449, 520});
  for (const Counts& c : {kQuaternary, kOctal, kHex}) {
    const double want = h_stable * 969.0 / 1024.0 + entropy_oracle(c) * 55.0 / 1024.0;
    EXPECT_NEAR(combined_entropy({449, 520}, c, 1024), want, 1e-12);
  }
}

TEST(CombinedEntropy, ReferenceValues) {
  // The 4-ary and 8-ary reference figures sit about 2e-4 above the weighted
  // sum of their own component entropies; the 16-ary one agrees.
  EXPECT_NEAR(combined_entropy({449, 520}, kQuaternary, 1024), 1.0479, 2.5e-4);
  EXPECT_NEAR(combined_entropy({449, 520}, kOctal, 1024), 1.0977, 2.5e-4);
  EXPECT_NEAR(combined_entropy({449, 520}, kHex, 1024), 1.1484, 1e-4);
  EXPECT_DOUBLE_EQ(combined_entropy({32, 32}, Counts{}, 64), 1.0);
  EXPECT_THROW(combined_entropy({449, 520}, kQuaternary, 1000), DataError);
}

TEST(EffectiveKeyLength, ReferenceValues) {
  EXPECT_EQ(effective_key_length(0.9962, 1024), 1020);
  EXPECT_EQ(effective_key_length(combined_entropy({449, 520}, kQuaternary, 1024), 1024), 1073);
  EXPECT_EQ(effective_key_length(combined_entropy({449, 520}, kOctal, 1024), 1024), 1124);
  EXPECT_EQ(effective_key_length(1.1484, 1024), 1176);
  EXPECT_EQ(effective_key_length(1.0, 64), 64);
  EXPECT_THROW(effective_key_length(-0.1, 64), DomainError);
}

std::vector<ResponseRecord> variable_records(const std::vector<std::uint32_t>& symbols, int t) {
  std::vector<ResponseRecord> out;
  for (std::size_t i = 0; i < symbols.size(); ++i) out.push_back({i, CellClass::Variable, symbols[i], gray_encode(symbols[i], t)});
  return out;
}

TEST(SymbolErrorRate, Counting) {
  std::vector<std::uint32_t> sym(55);
  for (std::size_t i = 0; i < sym.size(); ++i) sym[i] = static_cast<std::uint32_t>(i % 4);
  const auto a = variable_records(sym, 2);
  EXPECT_EQ(symbol_error_rate(a, a).rate, 0.0);
  EXPECT_EQ(symbol_error_rate(a, a).adjacent_fraction, 1.0);
  auto moved = sym;
  moved[3] = 2;
  const auto s = symbol_error_rate(a, variable_records(moved, 2));
  EXPECT_NEAR(s.rate, 1.0 / 55.0, 1e-15);
  EXPECT_EQ(s.errors, 1u);
  EXPECT_EQ(s.adjacent_errors, 1u);
  moved[5] = 3;  // 1 -> 3 is not adjacent
  const auto s2 = symbol_error_rate(a, variable_records(moved, 2));
  EXPECT_EQ(s2.errors, 2u);
  EXPECT_DOUBLE_EQ(s2.adjacent_fraction, 0.5);
}

TEST(SymbolErrorRate, IgnoresStableCells) {
  auto a = variable_records({0, 1, 2}, 2);
  a.push_back(stable_record(10, true));
  auto b = a;
  b.back() = stable_record(10, false);
  EXPECT_EQ(symbol_error_rate(a, b).rate, 0.0);
  EXPECT_EQ(symbol_error_rate(a, b).cells, 3u);
}

TEST(BitErrorRate, Basics) {
  const BitSequence a{1, 0, 1, 1};
  EXPECT_EQ(bit_error_rate(a, a), 0.0);
  EXPECT_DOUBLE_EQ(bit_error_rate(a, BitSequence{0, 0, 1, 0}), 0.5);
  EXPECT_THROW(bit_error_rate(a, BitSequence{1}), DataError);
}

TEST(BitErrorRate, AdjacentErrorsDivideByWidth) {
  // 1000 8-ary cells, 241 of which move to a neighbouring symbol.
  std::vector<std::uint32_t> sym(1000);
  std::vector<std::uint32_t> moved(1000);
  for (std::size_t i = 0; i < sym.size(); ++i) {
    sym[i] = static_cast<std::uint32_t>(i % 8);
    moved[i] = sym[i];
    if (i < 241) moved[i] = sym[i] == 7 ? 6 : sym[i] + 1;
  }
  const auto a = variable_records(sym, 3);
  const auto b = variable_records(moved, 3);
  const double ser = symbol_error_rate(a, b).rate;
  const double ber = bit_error_rate(assemble_key(a), assemble_key(b));
  EXPECT_NEAR(ser, 0.241, 1e-12);
  EXPECT_NEAR(ber, ser / 3.0, 1e-12);
  EXPECT_NEAR(0.2413 / 3.0, 0.0804, 1e-4);
}

TEST(Bias, Basics) {
  EXPECT_EQ(bias(BitSequence{1, 1, 1}), 1.0);
  EXPECT_THROW(bias(BitSequence{}), DomainError);
  for (int t = 1; t <= 8; ++t) {
    std::vector<ResponseRecord> all;
    for (std::uint32_t s = 0; s < (1u << t); ++s) all.push_back({s, CellClass::Variable, s, gray_encode(s, t)});
    EXPECT_EQ(bias(assemble_key(all)), 0.5) << t;
  }
}

TEST(CombineRates, ReferenceValues) {
  const WeightedRate q[] = {{0.0490, 110}, {2.915e-8, 969}};
  EXPECT_NEAR(combine_rates(q), 0.0050, 1e-4);
  const WeightedRate o[] = {{0.0804, 165}, {2.915e-8, 969}};
  EXPECT_NEAR(combine_rates(o), 0.0117, 1e-4);
  const WeightedRate h[] = {{0.1193, 220}, {2.915e-8, 969}};
  EXPECT_NEAR(combine_rates(h), 0.0221, 1e-4);
  const WeightedRate b[] = {{520.0 / 969.0, 969}, {0.5727, 110}};
  EXPECT_NEAR(combine_rates(b), 0.5403, 1e-3);
  const WeightedRate none[] = {{0.3, 0}};
  EXPECT_THROW(combine_rates(none), DomainError);
}

TEST(CombineRates, EqualsPooledCount) {
  // Pooling is exact when each part's rate is a count over its size.
  const WeightedRate p[] = {{3.0 / 40.0, 40}, {7.0 / 160.0, 160}};
  EXPECT_NEAR(combine_rates(p), 10.0 / 200.0, 1e-15);
}

TEST(EvaluateReconstruction, SelfComparison) {
  std::vector<ResponseRecord> recs = variable_records({0, 1, 2, 3, 1}, 2);
  for (std::uint64_t i = 5; i < 12; ++i) recs.push_back(stable_record(i, i % 3 == 0));
  const ExtractionProfile p(2, BetaParams(0.5, 0.5), 1000, {0.001, 0.999}, {0.1, 0.5, 0.9}, recs);
  const MetricsReport r = evaluate_reconstruction(p, recs);
  EXPECT_EQ(r.symbol_error_rate, 0.0);
  EXPECT_EQ(r.bit_error_rate, 0.0);
  EXPECT_EQ(r.key_bits, 17u);
  EXPECT_EQ(r.counts.n_variable, 5u);
  EXPECT_EQ(r.counts.symbol_histogram, (Counts{1, 2, 1, 1}));
  EXPECT_NEAR(r.entropy_per_cell, profile_entropy(p), 0);
  EXPECT_EQ(r.effective_key_length, effective_key_length(r.entropy_per_cell, 12));

  auto m = recs;
  m[1] = {1, CellClass::Variable, 2u, gray_encode(2, 2)};
  m[7].bits = gray_encode(1, 1);
  const MetricsReport e = evaluate_reconstruction(p, m);
  EXPECT_DOUBLE_EQ(e.symbol_error_rate, 0.2);
  EXPECT_DOUBLE_EQ(e.variable_bit_error_rate, 0.1);
  EXPECT_DOUBLE_EQ(e.stable_bit_error_rate, 1.0 / 7.0);
  EXPECT_DOUBLE_EQ(e.bit_error_rate, 2.0 / 17.0);
}

TEST(FormatTable, Layout) {
  const TableRow rows[] = {{alphabet_name(1), 0.99621, 1020, std::nullopt, 0.0043, 0.5361},
                           {alphabet_name(4), 1.1484, 1176, 0.4773, 0.0221, 0.5315}};
  const std::string s = format_table(rows);
  EXPECT_NE(s.find("binary"), std::string::npos);
  EXPECT_NE(s.find("16-ary"), std::string::npos);
  EXPECT_NE(s.find("0.9962"), std::string::npos);
  EXPECT_NE(s.find("0.4773"), std::string::npos);
  EXPECT_NE(s.find(" - "), std::string::npos);
  EXPECT_EQ(alphabet_name(2), "quaternary");
}

}  // namespace
}  // namespace nbpuf
