#include <acr/metrics.hpp>

#include <gtest/gtest.h>

#include <random>

#include "oracles.hpp"

using namespace acr;

namespace {

TimedLabelSequence seq(std::vector<std::tuple<double, double, const char*>> rows,
                       std::string id = "t") {
  std::vector<Segment> segs;
  for (auto& [s, e, l] : rows) segs.push_back({{s, e}, parse_chord_label(l)});
  return TimedLabelSequence(std::move(id), std::move(segs));
}

}  // namespace

TEST(Csr, HalfMatched) {
  const TrackPair pair(seq({{0, 4, "C:maj"}}), seq({{0, 2, "C:maj"}, {2, 4, "D:min"}}));
  EXPECT_DOUBLE_EQ(csr(pair, Vocabulary::full()), 0.5);
}

TEST(Csr, ThreeQuarters) {
  const TrackPair pair(seq({{0, 3, "C:maj"}, {3, 4, "N"}}),
                       seq({{0, 4, "C:maj"}}));
  EXPECT_DOUBLE_EQ(csr(pair, Vocabulary::full()), 0.75);
}

TEST(Csr, EmptyReferenceRejected) {
  const TrackPair pair(seq({{0, 1, "C:maj"}}), seq({{0, 1, "X"}}));
  EXPECT_THROW(csr(pair, Vocabulary::full()), DataError);
  EXPECT_THROW(TrackPair(seq({}, "a"), seq({}, "b")), DataError);
}

TEST(Wcsr, DurationWeighted) {
  // T = {10, 30}, CSR = {1, 0.5} -> (10 + 15) / 40.
  std::vector<TrackPair> pairs;
  pairs.emplace_back(seq({{0, 10, "C:maj"}}, "a"), seq({{0, 10, "C:maj"}}, "a"));
  pairs.emplace_back(seq({{0, 15, "C:maj"}, {15, 30, "N"}}, "b"),
                     seq({{0, 30, "C:maj"}}, "b"));
  EXPECT_DOUBLE_EQ(wcsr(pairs, Vocabulary::full()), 0.625);
}

TEST(Wcsr, PerfectAndEmpty) {
  std::mt19937_64 rng(3);
  std::vector<TrackPair> pairs;
  for (int i = 0; i < 5; ++i) {
    auto ref = oracle::random_sequence(rng, "t" + std::to_string(i), 30.0);
    pairs.emplace_back(ref, ref);
  }
  EXPECT_DOUBLE_EQ(wcsr(pairs, Vocabulary::full()), 1.0);
  EXPECT_THROW(wcsr({}, Vocabulary::full()), DataError);
}

TEST(Wcsr, InvariantUnderTrackOrder) {
  std::mt19937_64 rng(4);
  std::vector<TrackPair> pairs;
  for (int i = 0; i < 12; ++i) {
    auto ref = oracle::random_sequence(rng, "t" + std::to_string(i), 50.0);
    pairs.emplace_back(oracle::perturb(rng, ref), ref);
  }
  const double a = wcsr(pairs, Vocabulary::sevenths());
  const double b = acqa(wcsr_per_type(pairs, Vocabulary::sevenths()));
  std::shuffle(pairs.begin(), pairs.end(), rng);
  EXPECT_NEAR(wcsr(pairs, Vocabulary::sevenths()), a, 1e-12);
  EXPECT_NEAR(acqa(wcsr_per_type(pairs, Vocabulary::sevenths())), b, 1e-12);
}

TEST(Wcsr, BetweenMinAndMaxCsr) {
  std::mt19937_64 rng(8);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<TrackPair> pairs;
    double lo = 1, hi = 0;
    for (int i = 0; i < 6; ++i) {
      auto ref = oracle::random_sequence(rng, "t" + std::to_string(i), 30.0);
      pairs.emplace_back(oracle::perturb(rng, ref), ref);
      const double c = csr(pairs.back(), Vocabulary::full());
      lo = std::min(lo, c);
      hi = std::max(hi, c);
    }
    const double w = wcsr(pairs, Vocabulary::full());
    EXPECT_GE(w, lo - 1e-12);
    EXPECT_LE(w, hi + 1e-12);
  }
}

TEST(PerType, LedgerAndClassesPresent) {
  const TrackPair pair(seq({{0, 2, "C:maj"}, {2, 3, "C:maj"}, {3, 4, "N"}}),
                       seq({{0, 2, "C:maj"}, {2, 3, "D:dim"}, {3, 4, "N"}, {4, 5, "X"}}));
  const auto ledger = track_ledger(pair, Vocabulary::full());
  EXPECT_DOUBLE_EQ(ledger.entry(ChordClass::Maj).total, 2.0);
  EXPECT_DOUBLE_EQ(ledger.entry(ChordClass::Dim).matched, 0.0);
  EXPECT_DOUBLE_EQ(ledger.entry(ChordClass::X).total, 0.0);
  EXPECT_EQ(ledger.present(),
            (std::vector<ChordClass>{ChordClass::Maj, ChordClass::Dim, ChordClass::N}));
  // Classes absent from the reference do not enter the mean.
  EXPECT_NEAR(acqa(ledger), (1.0 + 0.0 + 1.0) / 3.0, 1e-12);
}

TEST(PerType, MergeIsAssociativeAndCommutative) {
  std::mt19937_64 rng(12);
  std::vector<PerTypeLedger> parts;
  for (int i = 0; i < 3; ++i) {
    auto ref = oracle::random_sequence(rng, "t", 40.0);
    parts.push_back(track_ledger(TrackPair(oracle::perturb(rng, ref), ref), Vocabulary::full()));
  }
  PerTypeLedger ab = parts[0];
  ab.merge(parts[1]);
  ab.merge(parts[2]);
  PerTypeLedger bc = parts[1];
  bc.merge(parts[2]);
  PerTypeLedger a_bc = parts[0];
  a_bc.merge(bc);
  PerTypeLedger cba = parts[2];
  cba.merge(parts[1]);
  cba.merge(parts[0]);
  for (ChordClass c : kAllChordClasses) {
    EXPECT_NEAR(ab.entry(c).total, a_bc.entry(c).total, 1e-9);
    EXPECT_NEAR(ab.entry(c).matched, cba.entry(c).matched, 1e-9);
  }
}

TEST(Acqa, DefinitionOnFixtures) {
  std::mt19937_64 rng(14);
  for (int trial = 0; trial < 30; ++trial) {
    std::vector<TrackPair> pairs;
    for (int i = 0; i < 4; ++i) {
      auto ref = oracle::random_sequence(rng, "t" + std::to_string(i), 30.0);
      pairs.emplace_back(oracle::perturb(rng, ref), ref);
    }
    const auto ledger = wcsr_per_type(pairs, Vocabulary::full());
    double sum = 0;
    const auto present = ledger.present();
    for (ChordClass c : present) sum += ledger.entry(c).matched / ledger.entry(c).total;
    EXPECT_NEAR(acqa(ledger), sum / static_cast<double>(present.size()), 1e-12);
  }
}

TEST(Acqa, PublishedBaselineRow) {
  const std::map<ChordClass, double> row = {
      {ChordClass::Maj, 0.616}, {ChordClass::Min, 0.693},  {ChordClass::Dom7, 0.31},
      {ChordClass::Min7, 0.149}, {ChordClass::Maj7, 0.015}, {ChordClass::Dim, 0.118},
      {ChordClass::Hdim7, 0.02}};
  EXPECT_NEAR(acqa(row), 0.274428571428571, 1e-12);
  EXPECT_THROW(acqa(std::map<ChordClass, double>{}), DataError);
}

TEST(Acqa, SingleClassEqualsItsRecall) {
  std::vector<TrackPair> pairs;
  pairs.emplace_back(seq({{0, 3, "C:min"}, {3, 4, "C:maj"}}, "a"), seq({{0, 4, "A:min"}}, "a"));
  const auto ledger = wcsr_per_type(pairs, Vocabulary::full());
  EXPECT_DOUBLE_EQ(acqa(ledger), 0.75);
  EXPECT_DOUBLE_EQ(acqa(ledger), wcsr(pairs, Vocabulary::full()));
}

TEST(Acqa, AgreesWithSamplingOracle) {
  std::mt19937_64 rng(31);
  std::vector<TrackPair> pairs;
  oracle::SampledTotals sampled;
  for (int i = 0; i < 20; ++i) {
    auto ref = oracle::random_sequence(rng, "t" + std::to_string(i), 100.0);
    pairs.emplace_back(oracle::perturb(rng, ref), ref);
    sampled.merge(oracle::sample(pairs.back().pred, ref, Vocabulary::full()));
  }
  const auto report = evaluate(pairs, Vocabulary::full());
  EXPECT_NEAR(report.wcsr, sampled.csr(), 1e-3);
  EXPECT_NEAR(report.acqa, sampled.acqa(), 1e-3);
}

TEST(Distribution, SharesSumToOneAndSkipX) {
  const auto d = type_distribution({seq({{0, 2, "C:maj"}, {2, 3, "N"}, {3, 10, "X"}})},
                                   Vocabulary::full());
  EXPECT_NEAR(d.at(ChordClass::Maj), 2.0 / 3.0, 1e-12);
  EXPECT_NEAR(d.at(ChordClass::N), 1.0 / 3.0, 1e-12);
  EXPECT_FALSE(d.contains(ChordClass::X));
}

TEST(Report, JsonRoundTripAndCsv) {
  std::mt19937_64 rng(2);
  std::vector<TrackPair> pairs;
  for (int i = 0; i < 3; ++i) {
    auto ref = oracle::random_sequence(rng, "t" + std::to_string(i), 30.0);
    pairs.emplace_back(oracle::perturb(rng, ref), ref);
  }
  const auto report = evaluate(pairs, Vocabulary::full());
  const auto back = metrics_from_json(nlohmann::ordered_json::parse(to_json(report).dump()));
  EXPECT_DOUBLE_EQ(back.wcsr, report.wcsr);
  EXPECT_DOUBLE_EQ(back.acqa, report.acqa);
  EXPECT_EQ(back.per_type, report.per_type);
  EXPECT_EQ(back.distribution, report.distribution);
  EXPECT_EQ(to_json(back).dump(), to_json(report).dump());
  const auto csv = per_type_csv(report);
  EXPECT_EQ(csv.rfind("class,reference_share,wcsr_c\n", 0), 0u);
  EXPECT_EQ(distribution_csv(report.distribution).rfind("class,share\n", 0), 0u);
}
