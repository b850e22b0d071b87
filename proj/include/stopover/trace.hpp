#pragma once

// Retained chain states and their CSV representation. Variable-length blocks
// are written as semicolon-joined lists inside one cell.

#include <istream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "stopover/errors.hpp"
#include "stopover/io.hpp"
#include "stopover/params.hpp"

namespace stopover {

enum class ModelKind { Open, Closed };

inline std::string_view to_string(ModelKind k) { return k == ModelKind::Open ? "open" : "closed"; }

template <class State>
struct TraceRecord {
  long iteration = 0;
  State state;
  double loglik = 0.0;
  double logprior = 0.0;
};

template <class State>
struct ChainTrace {
  std::vector<TraceRecord<State>> records;

  bool empty() const { return records.empty(); }
  std::size_t size() const { return records.size(); }

  void validate() const {
    for (std::size_t i = 1; i < records.size(); ++i)
      if (records[i].iteration <= records[i - 1].iteration)
        throw DataError("trace: iterations must be strictly increasing");
  }
};

using OpenTrace = ChainTrace<OpenParamState>;
using ClosedTrace = ChainTrace<ClosedParamState>;

inline constexpr std::string_view kOpenTraceHeader =
    "iteration,M,G,N,w,mu,sigma,pi,phi0,gamma_t,gamma_a,cap0,cap_e,cap_loc2,cap_loc3,s,loglik,logprior";
inline constexpr std::string_view kClosedTraceHeader = "iteration,G,N,pi,p,loglik,logprior";

namespace detail {

inline std::string join_list(const std::vector<double>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) out += ';';
    out += io::format_double(v[i]);
  }
  return out;
}

inline std::vector<double> parse_list(std::string_view cell, std::size_t expected, const std::string& where) {
  std::vector<double> out;
  for (auto part : io::split(cell, ';')) {
    const auto v = io::parse_double(part);
    if (!v) throw DataError(where + ": bad list entry");
    out.push_back(*v);
  }
  if (out.size() != expected) throw DataError(where + ": block length inconsistent with component count");
  return out;
}

inline double need_double(std::string_view cell, const std::string& where) {
  const auto v = io::parse_double(cell);
  if (!v) throw DataError(where + ": bad number '" + std::string(cell) + "'");
  return *v;
}

inline long need_long(std::string_view cell, const std::string& where) {
  const auto v = io::parse_long(cell);
  if (!v) throw DataError(where + ": bad integer '" + std::string(cell) + "'");
  return *v;
}

inline std::string comment_block(std::string_view comment) {
  std::string out;
  if (!comment.empty()) {
    out += "# ";
    out += comment;
    out += '\n';
  }
  return out;
}

}  // namespace detail

inline std::string format_trace_row(const TraceRecord<OpenParamState>& r) {
  using io::format_double;
  const auto& s = r.state;
  std::string row = std::to_string(r.iteration) + ',' + std::to_string(s.M()) + ',' + std::to_string(s.G()) + ',' +
                    std::to_string(s.N) + ',' + detail::join_list(s.arrival.w) + ',' +
                    detail::join_list(s.arrival.mu) + ',' + detail::join_list(s.arrival.sigma) + ',' +
                    detail::join_list(s.behaviour.pi) + ',' + detail::join_list(s.behaviour.phi0) + ',' +
                    format_double(s.behaviour.gamma_t) + ',' + format_double(s.behaviour.gamma_a) + ',' +
                    format_double(s.detection.cap0) + ',' + format_double(s.detection.cap_e) + ',' +
                    format_double(s.detection.cap_loc2) + ',' + format_double(s.detection.cap_loc3) + ',' +
                    format_double(s.detection.s) + ',' + format_double(r.loglik) + ',' + format_double(r.logprior);
  return row;
}

inline std::string format_trace_row(const TraceRecord<ClosedParamState>& r) {
  using io::format_double;
  const auto& s = r.state;
  return std::to_string(r.iteration) + ',' + std::to_string(s.G()) + ',' + std::to_string(s.N) + ',' +
         detail::join_list(s.pi) + ',' + detail::join_list(s.p) + ',' + format_double(r.loglik) + ',' +
         format_double(r.logprior);
}

template <class State>
std::string trace_csv(const ChainTrace<State>& trace, std::string_view comment = {}) {
  std::string out = detail::comment_block(comment);
  if constexpr (std::is_same_v<State, OpenParamState>) out += kOpenTraceHeader;
  else out += kClosedTraceHeader;
  out += '\n';
  for (const auto& r : trace.records) {
    out += format_trace_row(r);
    out += '\n';
  }
  return out;
}

/// Model family of a trace file, from its header row.
inline ModelKind trace_kind(std::istream& in) {
  const auto lines = io::read_lines(in);
  if (lines.empty()) throw DataError("trace: empty file");
  const auto header = io::trim(lines.front().text);
  if (header == kOpenTraceHeader) return ModelKind::Open;
  if (header == kClosedTraceHeader) return ModelKind::Closed;
  throw DataError("trace: unrecognised header");
}

inline OpenTrace parse_open_trace(std::istream& in) {
  const auto lines = io::read_lines(in);
  if (lines.empty() || io::trim(lines.front().text) != kOpenTraceHeader) throw DataError("trace: expected open-model header");
  OpenTrace trace;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    const std::string where = "trace line " + std::to_string(lines[i].number);
    const auto f = io::split(lines[i].text);
    if (f.size() != 18) throw DataError(where + ": expected 18 fields");
    TraceRecord<OpenParamState> r;
    r.iteration = detail::need_long(f[0], where);
    const auto M = static_cast<std::size_t>(detail::need_long(f[1], where));
    const auto G = static_cast<std::size_t>(detail::need_long(f[2], where));
    auto& s = r.state;
    s.N = detail::need_long(f[3], where);
    s.arrival.w = detail::parse_list(f[4], M, where);
    s.arrival.mu = detail::parse_list(f[5], M, where);
    s.arrival.sigma = detail::parse_list(f[6], M, where);
    s.behaviour.pi = detail::parse_list(f[7], G, where);
    s.behaviour.phi0 = detail::parse_list(f[8], G, where);
    s.behaviour.gamma_t = detail::need_double(f[9], where);
    s.behaviour.gamma_a = detail::need_double(f[10], where);
    s.detection.cap0 = detail::need_double(f[11], where);
    s.detection.cap_e = detail::need_double(f[12], where);
    s.detection.cap_loc2 = detail::need_double(f[13], where);
    s.detection.cap_loc3 = detail::need_double(f[14], where);
    s.detection.s = detail::need_double(f[15], where);
    r.loglik = detail::need_double(f[16], where);
    r.logprior = detail::need_double(f[17], where);
    trace.records.push_back(std::move(r));
  }
  trace.validate();
  return trace;
}

inline ClosedTrace parse_closed_trace(std::istream& in) {
  const auto lines = io::read_lines(in);
  if (lines.empty() || io::trim(lines.front().text) != kClosedTraceHeader)
    throw DataError("trace: expected closed-model header");
  ClosedTrace trace;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    const std::string where = "trace line " + std::to_string(lines[i].number);
    const auto f = io::split(lines[i].text);
    if (f.size() != 7) throw DataError(where + ": expected 7 fields");
    TraceRecord<ClosedParamState> r;
    r.iteration = detail::need_long(f[0], where);
    const auto G = static_cast<std::size_t>(detail::need_long(f[1], where));
    r.state.N = detail::need_long(f[2], where);
    r.state.pi = detail::parse_list(f[3], G, where);
    r.state.p = detail::parse_list(f[4], G, where);
    r.loglik = detail::need_double(f[5], where);
    r.logprior = detail::need_double(f[6], where);
    trace.records.push_back(std::move(r));
  }
  trace.validate();
  return trace;
}

}  // namespace stopover
