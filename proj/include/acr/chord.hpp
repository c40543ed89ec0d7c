#pragma once

// Harte-syntax chord labels: parsing, canonical serialization, transposition,
// and reduction onto the evaluation class vocabulary.

#include <acr/error.hpp>

#include <algorithm>
#include <array>
#include <bitset>
#include <cctype>
#include <compare>
#include <cstdint>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

namespace acr {

/// Semitone index in [0, 11], 0 = C. Always reduced modulo 12.
class PitchClass {
 public:
  constexpr PitchClass() = default;
  constexpr explicit PitchClass(int semitones) : value_(wrap(semitones)) {}

  constexpr int value() const noexcept { return value_; }
  constexpr PitchClass shifted(int semitones) const {
    return PitchClass(value_ + semitones);
  }

  constexpr auto operator<=>(const PitchClass&) const = default;

  std::string_view name() const {
    static constexpr std::array<std::string_view, 12> kNames = {
        "C", "C#", "D", "D#", "E", "F", "F#", "G", "G#", "A", "A#", "B"};
    return kNames[static_cast<std::size_t>(value_)];
  }

 private:
  static constexpr int wrap(int v) { return ((v % 12) + 12) % 12; }
  int value_ = 0;
};

/// Evaluation class. `X` is "outside the vocabulary", `N` is no-chord.
enum class ChordClass : std::uint8_t {
  Maj,
  Min,
  Dom7,
  Min7,
  Maj7,
  Dim,
  Hdim7,
  Aug,
  Sus,
  N,
  X,
};

inline constexpr std::size_t kChordClassCount = 11;

inline constexpr std::array<ChordClass, kChordClassCount> kAllChordClasses = {
    ChordClass::Maj,  ChordClass::Min,   ChordClass::Dom7, ChordClass::Min7,
    ChordClass::Maj7, ChordClass::Dim,   ChordClass::Hdim7, ChordClass::Aug,
    ChordClass::Sus,  ChordClass::N,     ChordClass::X};

inline constexpr std::size_t index_of(ChordClass c) {
  return static_cast<std::size_t>(c);
}

inline std::string_view class_name(ChordClass c) {
  static constexpr std::array<std::string_view, kChordClassCount> kNames = {
      "maj", "min", "7", "min7", "maj7", "dim", "hdim7", "aug", "sus", "N", "X"};
  return kNames[index_of(c)];
}

inline std::optional<ChordClass> class_from_name(std::string_view name) {
  for (ChordClass c : kAllChordClasses) {
    if (class_name(c) == name) return c;
  }
  return std::nullopt;
}

/// Quality string used when rendering a class at a given root.
inline std::string_view canonical_quality(ChordClass c) {
  switch (c) {
    case ChordClass::Maj: return "maj";
    case ChordClass::Min: return "min";
    case ChordClass::Dom7: return "7";
    case ChordClass::Min7: return "min7";
    case ChordClass::Maj7: return "maj7";
    case ChordClass::Dim: return "dim";
    case ChordClass::Hdim7: return "hdim7";
    case ChordClass::Aug: return "aug";
    case ChordClass::Sus: return "sus4";
    default: return "";
  }
}

/// A set of evaluation classes. Always contains N and X.
class Vocabulary {
 public:
  Vocabulary() : Vocabulary(std::vector<ChordClass>{}) {}

  explicit Vocabulary(const std::vector<ChordClass>& classes) {
    for (ChordClass c : classes) bits_.set(index_of(c));
    bits_.set(index_of(ChordClass::N));
    bits_.set(index_of(ChordClass::X));
  }

  /// Every class.
  static Vocabulary full() {
    return Vocabulary({kAllChordClasses.begin(), kAllChordClasses.end()});
  }

  /// maj, min, 7, min7, maj7, dim and hdim7, plus N.
  static Vocabulary sevenths() {
    return Vocabulary({ChordClass::Maj, ChordClass::Min, ChordClass::Dom7,
                       ChordClass::Min7, ChordClass::Maj7, ChordClass::Dim,
                       ChordClass::Hdim7});
  }

  static Vocabulary from_name(std::string_view name) {
    if (name == "full") return full();
    if (name == "sevenths") return sevenths();
    throw DataError("unknown vocabulary '" + std::string(name) +
                    "' (expected 'full' or 'sevenths')");
  }

  bool contains(ChordClass c) const { return bits_.test(index_of(c)); }

  /// Member classes in enum order, X included.
  std::vector<ChordClass> classes() const {
    std::vector<ChordClass> out;
    for (ChordClass c : kAllChordClasses) {
      if (contains(c)) out.push_back(c);
    }
    return out;
  }

  /// Member classes a prediction can take (everything but X).
  std::vector<ChordClass> scoreable() const {
    std::vector<ChordClass> out;
    for (ChordClass c : classes()) {
      if (c != ChordClass::X) out.push_back(c);
    }
    return out;
  }

  bool operator==(const Vocabulary&) const = default;

 private:
  std::bitset<kChordClassCount> bits_;
};

/// Parsed chord label. NoChord and Unknown carry no root, quality or bass.
struct ChordLabel {
  enum class Kind : std::uint8_t { NoChord, Unknown, Chord };

  Kind kind = Kind::NoChord;
  PitchClass root;
  std::string quality;  // empty only for degree-list-only chords
  std::string degrees;  // normalized contents of "(...)", possibly empty
  std::string bass;     // scale degree, possibly empty

  static ChordLabel no_chord() { return {}; }
  static ChordLabel unknown() {
    ChordLabel l;
    l.kind = Kind::Unknown;
    return l;
  }
  static ChordLabel chord(PitchClass root, std::string quality,
                          std::string bass = {}) {
    ChordLabel l;
    l.kind = Kind::Chord;
    l.root = root;
    l.quality = std::move(quality);
    l.bass = std::move(bass);
    return l;
  }

  bool is_chord() const { return kind == Kind::Chord; }
  bool operator==(const ChordLabel&) const = default;
};

/// Shorthands the parser accepts after ':'.
inline constexpr std::array<std::string_view, 25> kKnownQualities = {
    "maj",   "min",   "dim",   "aug",   "maj7",  "min7",    "7",
    "dim7",  "hdim7", "minmaj7", "maj6", "min6", "9",       "maj9",
    "min9",  "11",    "min11", "13",    "maj13", "min13",   "sus2",
    "sus4",  "aug7",  "5",     "1"};

inline bool is_known_quality(std::string_view q) {
  return std::find(kKnownQualities.begin(), kKnownQualities.end(), q) !=
         kKnownQualities.end();
}

namespace detail {

// A scale degree: optional '*' (omission, lists only), any run of b/#, then
// an interval number 1..13.
inline bool is_degree(std::string_view d, bool allow_omit) {
  std::size_t i = 0;
  if (allow_omit && i < d.size() && d[i] == '*') ++i;
  while (i < d.size() && (d[i] == 'b' || d[i] == '#')) ++i;
  if (i == d.size()) return false;
  int value = 0;
  for (; i < d.size(); ++i) {
    if (!std::isdigit(static_cast<unsigned char>(d[i]))) return false;
    value = value * 10 + (d[i] - '0');
    if (value > 13) return false;
  }
  return value >= 1;
}

}  // namespace detail

/// Parses a Harte-syntax label: `N`, `X`, `<root>`, `<root>:<quality>`,
/// `<root>:<quality>(<degrees>)`, `<root>:(<degrees>)`, each with an optional
/// `/<bass>`. A bare root means maj. Throws ParseError on anything else.
inline ChordLabel parse_chord_label(std::string_view text) {
  const std::string src(text);
  if (text.empty()) throw ParseError(src, 0, 0, "empty chord label");
  if (text == "N") return ChordLabel::no_chord();
  if (text == "X") return ChordLabel::unknown();

  static constexpr std::array<int, 7> kLetterPc = {9, 11, 0, 2, 4, 5, 7};
  const char letter = text[0];
  if (letter < 'A' || letter > 'G') {
    throw ParseError(src, 0, 1, "invalid root letter");
  }
  int pc = kLetterPc[static_cast<std::size_t>(letter - 'A')];
  std::size_t pos = 1;
  while (pos < text.size() && (text[pos] == '#' || text[pos] == 'b')) {
    pc += text[pos] == '#' ? 1 : -1;
    ++pos;
  }

  ChordLabel label = ChordLabel::chord(PitchClass(pc), "maj");

  if (pos < text.size() && text[pos] == ':') {
    const std::size_t colon = pos++;
    const std::size_t q_begin = pos;
    while (pos < text.size() && text[pos] != '(' && text[pos] != '/') ++pos;
    label.quality = std::string(text.substr(q_begin, pos - q_begin));
    const bool has_degrees = pos < text.size() && text[pos] == '(';
    if (label.quality.empty() && !has_degrees) {
      throw ParseError(src, colon, 1, "dangling ':' without quality");
    }
    if (!label.quality.empty() && !is_known_quality(label.quality)) {
      throw ParseError(src, q_begin, pos - q_begin, "unknown quality");
    }
    if (has_degrees) {
      const std::size_t open = pos;
      const std::size_t close = text.find(')', open);
      if (close == std::string_view::npos) {
        throw ParseError(src, open, text.size() - open, "unclosed degree list");
      }
      std::string_view list = text.substr(open + 1, close - open - 1);
      std::size_t start = 0;
      while (true) {
        const std::size_t comma = list.find(',', start);
        std::string_view item = list.substr(
            start, comma == std::string_view::npos ? list.npos : comma - start);
        if (!detail::is_degree(item, true)) {
          throw ParseError(src, open + 1 + start, item.size(),
                           "malformed degree");
        }
        if (comma == std::string_view::npos) break;
        start = comma + 1;
      }
      label.degrees = std::string(list);
      pos = close + 1;
    }
  } else if (pos < text.size() && text[pos] != '/') {
    throw ParseError(src, pos, text.size() - pos, "unexpected characters after root");
  }

  if (pos < text.size()) {
    if (text[pos] != '/') {
      throw ParseError(src, pos, text.size() - pos, "unexpected characters");
    }
    std::string_view bass = text.substr(pos + 1);
    if (bass.empty()) throw ParseError(src, pos, 1, "dangling '/' without bass");
    if (!detail::is_degree(bass, false)) {
      throw ParseError(src, pos + 1, bass.size(), "malformed bass degree");
    }
    label.bass = std::string(bass);
  }
  return label;
}

/// Canonical form: `N`, `X`, or `<ROOT>:<quality>[(<degrees>)][/<bass>]` with
/// sharp-spelled roots.
inline std::string to_string(const ChordLabel& label) {
  switch (label.kind) {
    case ChordLabel::Kind::NoChord: return "N";
    case ChordLabel::Kind::Unknown: return "X";
    case ChordLabel::Kind::Chord: break;
  }
  std::string out(label.root.name());
  out += ':';
  out += label.quality;
  if (!label.degrees.empty()) out += "(" + label.degrees + ")";
  if (!label.bass.empty()) out += "/" + label.bass;
  return out;
}

inline ChordLabel transpose(ChordLabel label, int semitones) {
  if (label.is_chord()) label.root = label.root.shifted(semitones);
  return label;
}

/// Quality → class lookup, loaded from the two-column text format.
class ReductionTable {
 public:
  static ReductionTable parse(std::string_view content) {
    ReductionTable table;
    std::istringstream in{std::string(content)};
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
      ++line_no;
      if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
      std::istringstream fields(line);
      std::string quality, cls, extra;
      if (!(fields >> quality)) continue;
      if (!(fields >> cls) || (fields >> extra)) {
        throw DataError("reduction table entries need exactly two columns",
                        line_no);
      }
      if (!is_known_quality(quality)) {
        throw DataError("unknown quality '" + quality + "'", line_no);
      }
      auto c = class_from_name(cls);
      if (!c || *c == ChordClass::N || *c == ChordClass::X) {
        throw DataError("invalid target class '" + cls + "'", line_no);
      }
      if (!table.entries_.emplace(quality, *c).second) {
        throw DataError("duplicate entry for '" + quality + "'", line_no);
      }
    }
    return table;
  }

  /// The shipped table (data/reduction_v1.txt).
  static const ReductionTable& builtin() {
    static const ReductionTable table = parse(builtin_text());
    return table;
  }

  static std::string_view builtin_text() {
    return R"(# Chord-quality reduction table, version 1.
#
# Maps every Harte shorthand the parser accepts onto an evaluation class.
# Columns: <quality> <class>. Qualities without an entry (minmaj7, aug7, 5, 1
# and degree-list-only chords) fall outside the vocabulary and map to X.
# Added/omitted degrees in parentheses and the bass note are ignored.

maj      maj
maj6     maj
min      min
min6     min
7        7
9        7
11       7
13       7
min7     min7
min9     min7
min11    min7
min13    min7
maj7     maj7
maj9     maj7
maj13    maj7
dim      dim
dim7     dim
hdim7    hdim7
aug      aug
sus2     sus
sus4     sus
)";
  }

  std::optional<ChordClass> lookup(std::string_view quality) const {
    auto it = entries_.find(std::string(quality));
    if (it == entries_.end()) return std::nullopt;
    return it->second;
  }

  const std::map<std::string, ChordClass>& entries() const { return entries_; }

 private:
  std::map<std::string, ChordClass> entries_;
};

/// Reduces a label to its class in `vocabulary`. Bass and added degrees are
/// ignored; anything unmapped is X.
inline ChordClass map_to_class(
    const ChordLabel& label, const Vocabulary& vocabulary,
    const ReductionTable& table = ReductionTable::builtin()) {
  switch (label.kind) {
    case ChordLabel::Kind::NoChord: return ChordClass::N;
    case ChordLabel::Kind::Unknown: return ChordClass::X;
    case ChordLabel::Kind::Chord: break;
  }
  auto c = table.lookup(label.quality);
  if (!c || !vocabulary.contains(*c)) return ChordClass::X;
  return *c;
}

}  // namespace acr
