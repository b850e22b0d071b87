#pragma once

// Study design (occasion calendar and capture covariates) and the two observed
// datasets: distinct capture-recapture-resight histories with multiplicities,
// and daily counts of unmarked animals.

#include <algorithm>
#include <cmath>
#include <istream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "stopover/errors.hpp"
#include "stopover/io.hpp"

namespace stopover {

enum class Occasion : char { Capture = 'C', Resight = 'R', Null = 'N' };

/// History alphabet.
namespace code {
inline constexpr char missed = '0';
inline constexpr char captured = '1';
inline constexpr char resighted = '2';
inline constexpr char missing = '-';
}  // namespace code

/// Occasion calendar. Days are 1-based in every accessor.
struct StudyDesign {
  std::vector<Occasion> type;
  std::vector<double> effort;  // 0 on non-capture days
  std::vector<int> location;   // 1..3 on capture days, 0 elsewhere

  int T() const { return static_cast<int>(type.size()); }
  Occasion at(int t) const { return type[static_cast<std::size_t>(t - 1)]; }
  bool capture(int t) const { return at(t) == Occasion::Capture; }
  bool resight(int t) const { return at(t) == Occasion::Resight; }
  bool sampled(int t) const { return at(t) != Occasion::Null; }
  double effort_on(int t) const { return effort[static_cast<std::size_t>(t - 1)]; }
  int location_on(int t) const { return location[static_cast<std::size_t>(t - 1)]; }

  int K() const {
    return static_cast<int>(std::count_if(type.begin(), type.end(),
                                          [](Occasion o) { return o != Occasion::Null; }));
  }

  void validate() const {
    if (type.empty()) throw DataError("design has no days");
    if (effort.size() != type.size() || location.size() != type.size())
      throw DataError("design columns have inconsistent lengths");
    for (int t = 1; t <= T(); ++t) {
      const double e = effort_on(t);
      const int loc = location_on(t);
      if (capture(t)) {
        if (!std::isfinite(e) || e < 0.0)
          throw DataError("day " + std::to_string(t) + ": effort must be finite and >= 0");
        if (loc < 1 || loc > 3)
          throw DataError("day " + std::to_string(t) + ": unknown location code");
      } else if (e != 0.0 || loc != 0) {
        throw DataError("day " + std::to_string(t) + ": effort/location given on a non-capture day");
      }
    }
  }

  /// T-day design where every day is a capture day (closed-population data).
  static StudyDesign all_capture(int days) {
    StudyDesign d;
    d.type.assign(static_cast<std::size_t>(days), Occasion::Capture);
    d.effort.assign(static_cast<std::size_t>(days), 0.0);
    d.location.assign(static_cast<std::size_t>(days), 1);
    return d;
  }
};

struct HistoryBounds {
  int first = 0;  // f_h: day of first capture
  int last = 0;   // l_h: day of last detection
};

inline HistoryBounds bounds_of(std::string_view history) {
  HistoryBounds b;
  for (std::size_t i = 0; i < history.size(); ++i) {
    const char c = history[i];
    if (c == code::captured && b.first == 0) b.first = static_cast<int>(i) + 1;
    if (c == code::captured || c == code::resighted) b.last = static_cast<int>(i) + 1;
  }
  return b;
}

struct ObservedData {
  std::vector<std::string> histories;  // distinct rows, each of length T
  std::vector<long> multiplicity;      // n_h
  std::vector<std::optional<long>> counts;  // y_t, index t-1

  std::size_t H() const { return histories.size(); }

  /// Number of marked animals D.
  long marked() const {
    long d = 0;
    for (long n : multiplicity) d += n;
    return d;
  }

  /// Adds n animals with the given history, merging identical rows.
  void add(std::string history, long n) {
    const auto it = std::find(histories.begin(), histories.end(), history);
    if (it != histories.end()) {
      multiplicity[static_cast<std::size_t>(it - histories.begin())] += n;
      return;
    }
    histories.push_back(std::move(history));
    multiplicity.push_back(n);
  }
};

inline std::vector<HistoryBounds> history_bounds(const ObservedData& data) {
  std::vector<HistoryBounds> out;
  out.reserve(data.H());
  for (const auto& h : data.histories) out.push_back(bounds_of(h));
  return out;
}

/// Throws DataError unless `history` is a valid observed history under `design`.
inline void validate_history(const StudyDesign& design, std::string_view history) {
  if (static_cast<int>(history.size()) != design.T())
    throw DataError("history '" + std::string(history) + "' has length " +
                    std::to_string(history.size()) + ", expected " + std::to_string(design.T()));
  bool marked = false;
  for (int t = 1; t <= design.T(); ++t) {
    const char c = history[static_cast<std::size_t>(t - 1)];
    const std::string where = "history '" + std::string(history) + "' day " + std::to_string(t);
    if (c == code::missing) {
      if (design.sampled(t)) throw DataError(where + ": missing entry on a sampled day");
      continue;
    }
    if (!design.sampled(t)) throw DataError(where + ": entry on a null day must be '-'");
    switch (c) {
      case code::missed:
        break;
      case code::captured:
        if (!design.capture(t)) throw DataError(where + ": capture on a non-capture day");
        marked = true;
        break;
      case code::resighted:
        if (!design.resight(t)) throw DataError(where + ": resight on a non-resight day");
        if (!marked) throw DataError(where + ": resight precedes first capture");
        break;
      default:
        throw DataError(where + ": unknown code '" + std::string(1, c) + "'");
    }
  }
  if (!marked) throw DataError("history '" + std::string(history) + "' has no capture");
}

inline void validate_observations(const StudyDesign& design, const ObservedData& data) {
  if (data.multiplicity.size() != data.histories.size())
    throw DataError("history multiplicities do not match histories");
  for (std::size_t h = 0; h < data.H(); ++h) {
    validate_history(design, data.histories[h]);
    if (data.multiplicity[h] <= 0) throw DataError("history multiplicity must be positive");
  }
  if (static_cast<int>(data.counts.size()) != design.T())
    throw DataError("count vector length differs from T");
  for (int t = 1; t <= design.T(); ++t) {
    const auto& y = data.counts[static_cast<std::size_t>(t - 1)];
    if (design.resight(t) && !y) throw DataError("day " + std::to_string(t) + ": resight day without a count");
    if (!design.resight(t) && y) throw DataError("day " + std::to_string(t) + ": count on a non-resight day");
    if (y && *y < 0) throw DataError("day " + std::to_string(t) + ": negative count");
  }
}

// --- parsing -----------------------------------------------------------------

namespace detail {
inline void expect_header(const std::vector<io::Line>& lines, std::string_view header,
                          std::string_view what) {
  if (lines.empty()) throw DataError(std::string(what) + ": empty file");
  std::string got;
  for (auto f : io::split(lines.front().text)) {
    if (!got.empty()) got += ',';
    got += f;
  }
  if (got != header)
    throw DataError(std::string(what) + ": expected header '" + std::string(header) + "'");
}

inline std::string at_line(std::string_view what, const io::Line& l) {
  return std::string(what) + " line " + std::to_string(l.number) + ": ";
}
}  // namespace detail

/// CSV `day,type,effort,location`; type in {C,R,N}; effort/location only for C.
inline StudyDesign parse_design(std::istream& in) {
  const auto lines = io::read_lines(in);
  detail::expect_header(lines, "day,type,effort,location", "design");
  std::map<long, std::tuple<Occasion, double, int>> rows;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    const auto& l = lines[i];
    const auto where = detail::at_line("design", l);
    const auto f = io::split(l.text);
    if (f.size() != 4) throw DataError(where + "expected 4 fields");
    const auto day = io::parse_long(f[0]);
    if (!day || *day < 1) throw DataError(where + "bad day");
    if (rows.count(*day)) throw DataError(where + "duplicate day " + std::to_string(*day));
    Occasion type;
    if (f[1] == "C") type = Occasion::Capture;
    else if (f[1] == "R") type = Occasion::Resight;
    else if (f[1] == "N") type = Occasion::Null;
    else throw DataError(where + "unknown occasion type '" + std::string(f[1]) + "'");
    double effort = 0.0;
    int location = 0;
    if (type == Occasion::Capture) {
      const auto e = io::parse_double(f[2]);
      if (!e || !std::isfinite(*e) || *e < 0.0) throw DataError(where + "capture day needs effort >= 0");
      const auto loc = io::parse_long(f[3]);
      if (!loc || *loc < 1 || *loc > 3) throw DataError(where + "unknown location code");
      effort = *e;
      location = static_cast<int>(*loc);
    } else if (!f[2].empty() || !f[3].empty()) {
      throw DataError(where + "effort/location given on a non-capture day");
    }
    rows[*day] = {type, effort, location};
  }
  StudyDesign d;
  long expected = 1;
  for (const auto& [day, row] : rows) {
    if (day != expected) throw DataError("design: day " + std::to_string(expected) + " missing");
    ++expected;
    d.type.push_back(std::get<0>(row));
    d.effort.push_back(std::get<1>(row));
    d.location.push_back(std::get<2>(row));
  }
  d.validate();
  return d;
}

/// CSV `history,count`; rows with identical histories are merged.
inline void parse_histories(std::istream& in, const StudyDesign& design, ObservedData& data) {
  const auto lines = io::read_lines(in);
  detail::expect_header(lines, "history,count", "histories");
  for (std::size_t i = 1; i < lines.size(); ++i) {
    const auto& l = lines[i];
    const auto where = detail::at_line("histories", l);
    const auto f = io::split(l.text);
    if (f.size() != 2) throw DataError(where + "expected 2 fields");
    const auto n = io::parse_long(f[1]);
    if (!n || *n <= 0) throw DataError(where + "count must be a positive integer");
    try {
      validate_history(design, f[0]);
    } catch (const DataError& e) {
      throw DataError(where + e.what());
    }
    data.add(std::string(f[0]), *n);
  }
}

/// CSV `day,count`; blank count on non-resight days.
inline void parse_counts(std::istream& in, const StudyDesign& design, ObservedData& data) {
  const auto lines = io::read_lines(in);
  detail::expect_header(lines, "day,count", "counts");
  data.counts.assign(static_cast<std::size_t>(design.T()), std::nullopt);
  std::vector<bool> seen(static_cast<std::size_t>(design.T()), false);
  for (std::size_t i = 1; i < lines.size(); ++i) {
    const auto& l = lines[i];
    const auto where = detail::at_line("counts", l);
    const auto f = io::split(l.text);
    if (f.size() != 2) throw DataError(where + "expected 2 fields");
    const auto day = io::parse_long(f[0]);
    if (!day || *day < 1 || *day > design.T()) throw DataError(where + "day out of range");
    const auto idx = static_cast<std::size_t>(*day - 1);
    if (seen[idx]) throw DataError(where + "duplicate day");
    seen[idx] = true;
    if (f[1].empty()) continue;
    const auto y = io::parse_long(f[1]);
    if (!y) throw DataError(where + "bad count");
    if (*y < 0) throw DataError(where + "negative count");
    if (!design.resight(static_cast<int>(*day))) throw DataError(where + "count on a non-resight day");
    data.counts[idx] = *y;
  }
  for (int t = 1; t <= design.T(); ++t)
    if (design.resight(t) && !data.counts[static_cast<std::size_t>(t - 1)])
      throw DataError("counts: resight day " + std::to_string(t) + " has no count");
}

inline StudyDesign load_design(const std::string& path) {
  auto in = io::open_input(path);
  try {
    return parse_design(in);
  } catch (const DataError& e) {
    throw DataError(path + ": " + e.what());
  }
}

/// Loads histories and (optionally) counts. An empty counts path means the design
/// must have no resight days.
inline ObservedData load_observations(const StudyDesign& design, const std::string& hist_path,
                                      const std::string& counts_path) {
  ObservedData data;
  data.counts.assign(static_cast<std::size_t>(design.T()), std::nullopt);
  {
    auto in = io::open_input(hist_path);
    try {
      parse_histories(in, design, data);
    } catch (const DataError& e) {
      throw DataError(hist_path + ": " + e.what());
    }
  }
  if (!counts_path.empty()) {
    auto in = io::open_input(counts_path);
    try {
      parse_counts(in, design, data);
    } catch (const DataError& e) {
      throw DataError(counts_path + ": " + e.what());
    }
  }
  validate_observations(design, data);
  return data;
}

// --- serialisation -----------------------------------------------------------

inline std::string serialize_design(const StudyDesign& d) {
  std::ostringstream out;
  out << "day,type,effort,location\n";
  for (int t = 1; t <= d.T(); ++t) {
    out << t << ',' << static_cast<char>(d.at(t)) << ',';
    if (d.capture(t)) out << io::format_double(d.effort_on(t)) << ',' << d.location_on(t);
    else out << ',';
    out << '\n';
  }
  return out.str();
}

inline std::string serialize_histories(const ObservedData& data) {
  std::ostringstream out;
  out << "history,count\n";
  for (std::size_t h = 0; h < data.H(); ++h) out << data.histories[h] << ',' << data.multiplicity[h] << '\n';
  return out.str();
}

inline std::string serialize_counts(const ObservedData& data) {
  std::ostringstream out;
  out << "day,count\n";
  for (std::size_t t = 0; t < data.counts.size(); ++t) {
    out << t + 1 << ',';
    if (data.counts[t]) out << *data.counts[t];
    out << '\n';
  }
  return out.str();
}

}  // namespace stopover
