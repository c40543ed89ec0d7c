#include <acr/chord.hpp>

#include <gtest/gtest.h>

#include <fstream>
#include <random>
#include <sstream>

using namespace acr;

TEST(ParseChordLabel, Sentinels) {
  EXPECT_EQ(parse_chord_label("N").kind, ChordLabel::Kind::NoChord);
  EXPECT_EQ(parse_chord_label("X").kind, ChordLabel::Kind::Unknown);
  EXPECT_EQ(parse_chord_label("N"), ChordLabel::no_chord());
}

TEST(ParseChordLabel, RootAndQuality) {
  const auto c = parse_chord_label("C:maj");
  EXPECT_EQ(c.kind, ChordLabel::Kind::Chord);
  EXPECT_EQ(c.root.value(), 0);
  EXPECT_EQ(c.quality, "maj");
  EXPECT_TRUE(c.bass.empty());
}

TEST(ParseChordLabel, SharpRootWithBass) {
  const auto c = parse_chord_label("G#:min7/b3");
  EXPECT_EQ(c.root.value(), 8);
  EXPECT_EQ(c.quality, "min7");
  EXPECT_EQ(c.bass, "b3");
}

TEST(ParseChordLabel, BareRootIsMajor) {
  EXPECT_EQ(parse_chord_label("C"), parse_chord_label("C:maj"));
  EXPECT_EQ(to_string(parse_chord_label("Eb/5")), "D#:maj/5");
}

TEST(ParseChordLabel, EnharmonicRootsCollapse) {
  EXPECT_EQ(parse_chord_label("C#:maj").root, parse_chord_label("Db:maj").root);
  EXPECT_EQ(parse_chord_label("Cb:min").root.value(), 11);
  EXPECT_EQ(parse_chord_label("B#:min").root.value(), 0);
  EXPECT_EQ(parse_chord_label("Abb:7").root.value(), 7);
}

TEST(ParseChordLabel, DegreeLists) {
  const auto c = parse_chord_label("G:maj(9)");
  EXPECT_EQ(c.quality, "maj");
  EXPECT_EQ(c.degrees, "9");
  const auto d = parse_chord_label("A:(1,b3,*5)/b3");
  EXPECT_TRUE(d.quality.empty());
  EXPECT_EQ(d.degrees, "1,b3,*5");
  EXPECT_EQ(d.bass, "b3");
}

TEST(ParseChordLabel, InvalidRootLetterNamesSpan) {
  try {
    parse_chord_label("H:maj");
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.offset(), 0u);
    EXPECT_EQ(e.length(), 1u);
    EXPECT_NE(std::string(e.what()).find("'H'"), std::string::npos);
  }
}

TEST(ParseChordLabel, UnknownQualityNamesSpan) {
  try {
    parse_chord_label("C:majj7/3");
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.offset(), 2u);
    EXPECT_EQ(e.length(), 5u);
  }
}

TEST(ParseChordLabel, DanglingSeparators) {
  EXPECT_THROW(parse_chord_label("C:"), ParseError);
  EXPECT_THROW(parse_chord_label("C:maj/"), ParseError);
  EXPECT_THROW(parse_chord_label("C/"), ParseError);
  EXPECT_THROW(parse_chord_label("C:maj("), ParseError);
  EXPECT_THROW(parse_chord_label("C:maj(9,)"), ParseError);
  EXPECT_THROW(parse_chord_label("C:maj/x"), ParseError);
  EXPECT_THROW(parse_chord_label("Cmaj"), ParseError);
  EXPECT_THROW(parse_chord_label(""), ParseError);
  EXPECT_THROW(parse_chord_label("c:maj"), ParseError);
  EXPECT_THROW(parse_chord_label("C:maj)"), ParseError);
}

TEST(Serialize, CanonicalForms) {
  EXPECT_EQ(to_string(parse_chord_label("G#:min7/b3")), "G#:min7/b3");
  EXPECT_EQ(to_string(parse_chord_label("Ab:min7/b3")), "G#:min7/b3");
  EXPECT_EQ(to_string(parse_chord_label("N")), "N");
  EXPECT_EQ(to_string(parse_chord_label("X")), "X");
  EXPECT_EQ(to_string(parse_chord_label("Bb:maj(9)/3")), "A#:maj(9)/3");
}

TEST(Serialize, RoundTripIsFixedPoint) {
  std::mt19937_64 rng(11);
  const char* roots[] = {"C", "C#", "Db", "D", "Eb", "E", "Fb", "F", "F#", "Gb",
                         "G", "G#", "Ab", "A", "Bb", "B", "Cb", "E#"};
  const char* basses[] = {"", "/3", "/b3", "/5", "/b7", "/#4", "/9"};
  const char* degs[] = {"", "(9)", "(b9,#11)", "(*3)"};
  std::uniform_int_distribution<std::size_t> r(0, 17), q(0, kKnownQualities.size() - 1),
      b(0, 6), d(0, 3);
  for (int i = 0; i < 2000; ++i) {
    std::string text = std::string(roots[r(rng)]) + ":" +
                       std::string(kKnownQualities[q(rng)]) + degs[d(rng)] + basses[b(rng)];
    const auto once = parse_chord_label(text);
    const auto canonical = to_string(once);
    EXPECT_EQ(parse_chord_label(canonical), once) << text;
    EXPECT_EQ(to_string(parse_chord_label(canonical)), canonical) << text;
  }
}

TEST(Transpose, Examples) {
  EXPECT_EQ(to_string(transpose(parse_chord_label("C:maj"), 2)), "D:maj");
  EXPECT_EQ(transpose(ChordLabel::no_chord(), 5), ChordLabel::no_chord());
  EXPECT_EQ(transpose(ChordLabel::unknown(), 5), ChordLabel::unknown());
  EXPECT_EQ(to_string(transpose(parse_chord_label("B:min"), 1)), "C:min");
}

TEST(Transpose, KeepsQualityAndBass) {
  const auto t = transpose(parse_chord_label("F:min7(9)/b3"), -7);
  EXPECT_EQ(to_string(t), "A#:min7(9)/b3");
}

TEST(Transpose, InverseAndOctaveIdentity) {
  for (const auto* text : {"C:maj", "G#:min7/b3", "N", "X", "A:(1,3)", "Bb:hdim7"}) {
    const auto l = parse_chord_label(text);
    EXPECT_EQ(transpose(l, 12), l) << text;
    for (int k = -11; k <= 11; ++k) {
      EXPECT_EQ(transpose(transpose(l, k), -k), l) << text << " k=" << k;
    }
  }
}

TEST(MapToClass, Examples) {
  const auto full = Vocabulary::full();
  EXPECT_EQ(map_to_class(parse_chord_label("C:maj"), full), ChordClass::Maj);
  EXPECT_EQ(map_to_class(ChordLabel::no_chord(), full), ChordClass::N);
  EXPECT_EQ(map_to_class(ChordLabel::unknown(), full), ChordClass::X);
  EXPECT_EQ(map_to_class(parse_chord_label("G:maj(9)"), full), ChordClass::Maj);
  EXPECT_EQ(map_to_class(parse_chord_label("A:min9"), full), ChordClass::Min7);
  EXPECT_EQ(map_to_class(parse_chord_label("C:maj/5"), full), ChordClass::Maj);
}

TEST(MapToClass, Aug7HasNoReductionEntry) {
  // The shipped table has no row for aug7, so it lands in X even with the
  // aug family present.
  EXPECT_FALSE(ReductionTable::builtin().lookup("aug7").has_value());
  const Vocabulary no_aug({ChordClass::Maj, ChordClass::Min});
  EXPECT_EQ(map_to_class(parse_chord_label("C:aug7"), no_aug), ChordClass::X);
  EXPECT_EQ(map_to_class(parse_chord_label("C:aug7"), Vocabulary::full()), ChordClass::X);
}

TEST(MapToClass, ClassOutsideVocabularyIsX) {
  EXPECT_EQ(map_to_class(parse_chord_label("C:aug"), Vocabulary::sevenths()), ChordClass::X);
  EXPECT_EQ(map_to_class(parse_chord_label("C:sus4"), Vocabulary::sevenths()), ChordClass::X);
  EXPECT_EQ(map_to_class(parse_chord_label("C:aug"), Vocabulary::full()), ChordClass::Aug);
}

TEST(MapToClass, TotalOverAcceptedQualities) {
  for (auto vocab : {Vocabulary::full(), Vocabulary::sevenths(), Vocabulary()}) {
    for (auto q : kKnownQualities) {
      const ChordClass c = map_to_class(ChordLabel::chord(PitchClass(3), std::string(q)), vocab);
      EXPECT_TRUE(vocab.contains(c)) << q;
    }
  }
}

TEST(Vocabulary, AlwaysHoldsNAndX) {
  const Vocabulary empty;
  EXPECT_TRUE(empty.contains(ChordClass::N));
  EXPECT_TRUE(empty.contains(ChordClass::X));
  EXPECT_EQ(Vocabulary::sevenths().scoreable().size(), 8u);
  EXPECT_THROW(Vocabulary::from_name("bogus"), DataError);
}

TEST(ReductionTable, BuiltinMatchesShippedDataFile) {
  std::ifstream in(std::string(ACR_SOURCE_DIR) + "/data/reduction_v1.txt");
  ASSERT_TRUE(in);
  std::stringstream ss;
  ss << in.rdbuf();
  EXPECT_EQ(ss.str(), ReductionTable::builtin_text());
}

TEST(ReductionTable, ParseErrors) {
  EXPECT_THROW(ReductionTable::parse("maj\n"), DataError);
  EXPECT_THROW(ReductionTable::parse("maj maj extra\n"), DataError);
  EXPECT_THROW(ReductionTable::parse("maj bogus\n"), DataError);
  EXPECT_THROW(ReductionTable::parse("maj X\n"), DataError);
  EXPECT_THROW(ReductionTable::parse("maj maj\nmaj min\n"), DataError);
  EXPECT_THROW(ReductionTable::parse("zzz maj\n"), DataError);
  const auto t = ReductionTable::parse("# only comments\n\nmin7 min  # trailing\n");
  EXPECT_EQ(t.lookup("min7"), ChordClass::Min);
  EXPECT_FALSE(t.lookup("maj"));
  EXPECT_EQ(map_to_class(parse_chord_label("C:maj"), Vocabulary::full(), t), ChordClass::X);
}
