#pragma once

// BSDP1 instance text format.
//
//   bsdp1 n=<int> r=<int> q=<int> sense=<min|max>
//   C <i> <j> <val>          sparse upper-triangle entries, 1-based, i <= j
//   d0 <i> <val>
//   con <k> A <i> <j> <val>
//   con <k> d <i> <val>
//   con <k> rhs <val> <le|eq>
//   lin <row> <i> <val>      rows of D
//   lint <row> <val>         entries of t
//   int <i> <j> <l> <u>      integer entries of a general ISDP
//
// '#' starts a comment. Files carry the user's orientation; parsing
// normalizes max objectives to minimization form.

#include <cctype>
#include <charconv>
#include <cstdio>
#include <set>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include "isdp/model.hpp"

namespace isdp {

enum class ParseErrorKind {
  MalformedHeader,
  MalformedLine,
  IndexOutOfRange,
  UnknownRelation,
  DuplicateEntry,
  DimensionMismatch,
};

class ParseError : public std::runtime_error {
 public:
  ParseError(ParseErrorKind kind, int line, const std::string& msg)
      : std::runtime_error("parse error at line " + std::to_string(line) + ": " + msg),
        kind_(kind),
        line_(line) {}
  ParseErrorKind kind() const { return kind_; }
  int line() const { return line_; }

 private:
  ParseErrorKind kind_;
  int line_;
};

using ParsedInstance = std::variant<BqcqpInstance, IsdpInstance>;

namespace detail {

inline std::string fmt17(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

inline std::vector<std::string> tokenize(const std::string& line) {
  std::vector<std::string> toks;
  std::string cur;
  for (char ch : line) {
    if (ch == '#') break;
    if (std::isspace(static_cast<unsigned char>(ch))) {
      if (!cur.empty()) toks.push_back(std::move(cur)), cur.clear();
    } else {
      cur.push_back(ch);
    }
  }
  if (!cur.empty()) toks.push_back(std::move(cur));
  return toks;
}

inline bool parse_int(const std::string& s, long& out) {
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc() && p == s.data() + s.size();
}

inline bool parse_double(const std::string& s, double& out) {
  char* end = nullptr;
  out = std::strtod(s.c_str(), &end);
  return end == s.c_str() + s.size() && s.size() > 0;
}

inline long parse_kv_int(const std::string& tok, const char* key, int line) {
  const std::string prefix = std::string(key) + "=";
  if (tok.rfind(prefix, 0) != 0)
    throw ParseError(ParseErrorKind::MalformedHeader, line, "expected " + prefix + "<int>");
  long v = 0;
  if (!parse_int(tok.substr(prefix.size()), v))
    throw ParseError(ParseErrorKind::MalformedHeader, line, "bad integer in " + tok);
  return v;
}

}  // namespace detail

inline ParsedInstance parse_instance(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  int lineno = 0;

  long n = 0, r = 0, q = 0;
  Sense sense = Sense::Min;
  bool have_header = false;

  BqcqpInstance p;
  std::vector<IntegerEntry> int_entries;
  std::set<std::pair<int, int>> c_seen, int_seen;
  std::set<int> d0_seen;
  std::vector<std::set<std::pair<int, int>>> con_a_seen;
  std::vector<std::set<int>> con_d_seen;
  std::vector<bool> con_rhs_seen;
  std::vector<std::set<int>> lin_seen;
  std::vector<bool> lint_seen;

  auto check_index = [&](long i, long lo, long hi, int ln, const char* what) {
    if (i < lo || i > hi)
      throw ParseError(ParseErrorKind::IndexOutOfRange, ln,
                       std::string(what) + " index " + std::to_string(i) + " outside [" +
                           std::to_string(lo) + "," + std::to_string(hi) + "]");
  };

  while (std::getline(in, line)) {
    ++lineno;
    auto toks = detail::tokenize(line);
    if (toks.empty()) continue;

    if (!have_header) {
      if (toks[0] != "bsdp1" || toks.size() != 5)
        throw ParseError(ParseErrorKind::MalformedHeader, lineno,
                         "expected 'bsdp1 n=<int> r=<int> q=<int> sense=<min|max>'");
      n = detail::parse_kv_int(toks[1], "n", lineno);
      r = detail::parse_kv_int(toks[2], "r", lineno);
      q = detail::parse_kv_int(toks[3], "q", lineno);
      if (toks[4] == "sense=min")
        sense = Sense::Min;
      else if (toks[4] == "sense=max")
        sense = Sense::Max;
      else
        throw ParseError(ParseErrorKind::MalformedHeader, lineno, "bad sense token " + toks[4]);
      if (n < 1 || r < 0 || q < 0)
        throw ParseError(ParseErrorKind::MalformedHeader, lineno, "bad dimensions in header");
      have_header = true;
      p.n = static_cast<int>(n);
      p.C = SymMatrix(p.n);
      p.d0.assign(p.n, 0.0);
      p.constraints.assign(r, QuadConstraint{SymMatrix(p.n), std::vector<double>(p.n, 0.0), 0.0,
                                             Relation::LessEqual});
      p.lin.resize(static_cast<int>(q), p.n);
      p.sense = sense;
      con_a_seen.assign(r, {});
      con_d_seen.assign(r, {});
      con_rhs_seen.assign(r, false);
      lin_seen.assign(q, {});
      lint_seen.assign(q, false);
      continue;
    }

    const std::string& kw = toks[0];
    if (kw == "C") {
      long i, j;
      double v;
      if (toks.size() != 4 || !detail::parse_int(toks[1], i) || !detail::parse_int(toks[2], j) ||
          !detail::parse_double(toks[3], v))
        throw ParseError(ParseErrorKind::MalformedLine, lineno, "expected 'C <i> <j> <val>'");
      check_index(i, 1, n, lineno, "C row");
      check_index(j, i, n, lineno, "C column");
      if (!c_seen.insert({static_cast<int>(i), static_cast<int>(j)}).second)
        throw ParseError(ParseErrorKind::DuplicateEntry, lineno, "duplicate C entry");
      p.C.set(static_cast<int>(i) - 1, static_cast<int>(j) - 1, v);
    } else if (kw == "d0") {
      long i;
      double v;
      if (toks.size() != 3 || !detail::parse_int(toks[1], i) || !detail::parse_double(toks[2], v))
        throw ParseError(ParseErrorKind::MalformedLine, lineno, "expected 'd0 <i> <val>'");
      check_index(i, 1, n, lineno, "d0");
      if (!d0_seen.insert(static_cast<int>(i)).second)
        throw ParseError(ParseErrorKind::DuplicateEntry, lineno, "duplicate d0 entry");
      p.d0[i - 1] = v;
    } else if (kw == "con") {
      long k;
      if (toks.size() < 3 || !detail::parse_int(toks[1], k))
        throw ParseError(ParseErrorKind::MalformedLine, lineno, "expected 'con <k> ...'");
      check_index(k, 1, r, lineno, "constraint");
      QuadConstraint& c = p.constraints[k - 1];
      const std::string& part = toks[2];
      if (part == "A") {
        long i, j;
        double v;
        if (toks.size() != 6 || !detail::parse_int(toks[3], i) || !detail::parse_int(toks[4], j) ||
            !detail::parse_double(toks[5], v))
          throw ParseError(ParseErrorKind::MalformedLine, lineno,
                           "expected 'con <k> A <i> <j> <val>'");
        check_index(i, 1, n, lineno, "A row");
        check_index(j, i, n, lineno, "A column");
        if (!con_a_seen[k - 1].insert({static_cast<int>(i), static_cast<int>(j)}).second)
          throw ParseError(ParseErrorKind::DuplicateEntry, lineno, "duplicate A entry");
        c.A.set(static_cast<int>(i) - 1, static_cast<int>(j) - 1, v);
      } else if (part == "d") {
        long i;
        double v;
        if (toks.size() != 5 || !detail::parse_int(toks[3], i) || !detail::parse_double(toks[4], v))
          throw ParseError(ParseErrorKind::MalformedLine, lineno, "expected 'con <k> d <i> <val>'");
        check_index(i, 1, n, lineno, "d");
        if (!con_d_seen[k - 1].insert(static_cast<int>(i)).second)
          throw ParseError(ParseErrorKind::DuplicateEntry, lineno, "duplicate d entry");
        c.d[i - 1] = v;
      } else if (part == "rhs") {
        double v;
        if (toks.size() != 5 || !detail::parse_double(toks[3], v))
          throw ParseError(ParseErrorKind::MalformedLine, lineno,
                           "expected 'con <k> rhs <val> <le|eq>'");
        if (toks[4] == "le")
          c.rel = Relation::LessEqual;
        else if (toks[4] == "eq")
          c.rel = Relation::Equal;
        else
          throw ParseError(ParseErrorKind::UnknownRelation, lineno,
                           "unknown relation token " + toks[4]);
        if (con_rhs_seen[k - 1])
          throw ParseError(ParseErrorKind::DuplicateEntry, lineno, "duplicate rhs line");
        con_rhs_seen[k - 1] = true;
        c.b = v;
      } else {
        throw ParseError(ParseErrorKind::MalformedLine, lineno, "unknown con part " + part);
      }
    } else if (kw == "lin") {
      long row, i;
      double v;
      if (toks.size() != 4 || !detail::parse_int(toks[1], row) || !detail::parse_int(toks[2], i) ||
          !detail::parse_double(toks[3], v))
        throw ParseError(ParseErrorKind::MalformedLine, lineno, "expected 'lin <row> <i> <val>'");
      check_index(row, 1, q, lineno, "lin row");
      check_index(i, 1, n, lineno, "lin column");
      if (!lin_seen[row - 1].insert(static_cast<int>(i)).second)
        throw ParseError(ParseErrorKind::DuplicateEntry, lineno, "duplicate lin entry");
      p.lin.at(static_cast<int>(row) - 1, static_cast<int>(i) - 1) = v;
    } else if (kw == "lint") {
      long row;
      double v;
      if (toks.size() != 3 || !detail::parse_int(toks[1], row) || !detail::parse_double(toks[2], v))
        throw ParseError(ParseErrorKind::MalformedLine, lineno, "expected 'lint <row> <val>'");
      check_index(row, 1, q, lineno, "lint row");
      if (lint_seen[row - 1])
        throw ParseError(ParseErrorKind::DuplicateEntry, lineno, "duplicate lint entry");
      lint_seen[row - 1] = true;
      p.lin.t[row - 1] = v;
    } else if (kw == "int") {
      long i, j;
      double lo, hi;
      if (toks.size() != 5 || !detail::parse_int(toks[1], i) || !detail::parse_int(toks[2], j) ||
          !detail::parse_double(toks[3], lo) || !detail::parse_double(toks[4], hi))
        throw ParseError(ParseErrorKind::MalformedLine, lineno, "expected 'int <i> <j> <l> <u>'");
      check_index(i, 1, n, lineno, "int row");
      check_index(j, i, n, lineno, "int column");
      if (lo > hi)
        throw ParseError(ParseErrorKind::MalformedLine, lineno, "int entry has l > u");
      if (!int_seen.insert({static_cast<int>(i), static_cast<int>(j)}).second)
        throw ParseError(ParseErrorKind::DuplicateEntry, lineno, "duplicate int entry");
      int_entries.push_back(
          {static_cast<int>(i) - 1, static_cast<int>(j) - 1, lo, hi});
    } else {
      throw ParseError(ParseErrorKind::MalformedLine, lineno, "unknown keyword " + kw);
    }
  }

  if (!have_header) throw ParseError(ParseErrorKind::MalformedHeader, 1, "missing header");
  for (long k = 0; k < r; ++k)
    if (!con_rhs_seen[k])
      throw ParseError(ParseErrorKind::DimensionMismatch, lineno,
                       "constraint " + std::to_string(k + 1) + " has no rhs line");

  // max objectives are stored negated
  if (sense == Sense::Max) {
    p.C *= -1.0;
    for (double& v : p.d0) v = -v;
  }

  if (int_entries.empty()) return p;

  // general ISDP: constraints must all be equalities over X with no linear part
  IsdpInstance isdp;
  isdp.n = p.n;
  isdp.C = p.C;
  isdp.sense = p.sense;
  isdp.integer_entries = std::move(int_entries);
  if (p.lin.rows != 0)
    throw ParseError(ParseErrorKind::DimensionMismatch, lineno,
                     "ISDP instances do not take lin rows");
  for (std::size_t k = 0; k < p.constraints.size(); ++k) {
    const auto& c = p.constraints[k];
    if (c.rel != Relation::Equal)
      throw ParseError(ParseErrorKind::UnknownRelation, lineno,
                       "ISDP constraint " + std::to_string(k + 1) + " must be eq");
    for (double v : c.d)
      if (v != 0.0)
        throw ParseError(ParseErrorKind::MalformedLine, lineno,
                         "ISDP constraint " + std::to_string(k + 1) + " has a linear part");
    isdp.equalities.push_back({c.A, c.b});
  }
  return isdp;
}

inline std::string emit_instance(const BqcqpInstance& p) {
  std::ostringstream out;
  const double sg = p.sign();
  out << "bsdp1 n=" << p.n << " r=" << p.constraints.size() << " q=" << p.lin.rows
      << " sense=" << (p.sense == Sense::Min ? "min" : "max") << "\n";
  for (int j = 0; j < p.n; ++j)
    for (int i = 0; i <= j; ++i)
      if (p.C(i, j) != 0.0)
        out << "C " << i + 1 << " " << j + 1 << " " << detail::fmt17(sg * p.C(i, j)) << "\n";
  for (int i = 0; i < p.n; ++i)
    if (p.d0[i] != 0.0) out << "d0 " << i + 1 << " " << detail::fmt17(sg * p.d0[i]) << "\n";
  for (std::size_t k = 0; k < p.constraints.size(); ++k) {
    const auto& c = p.constraints[k];
    for (int j = 0; j < p.n; ++j)
      for (int i = 0; i <= j; ++i)
        if (c.A(i, j) != 0.0)
          out << "con " << k + 1 << " A " << i + 1 << " " << j + 1 << " "
              << detail::fmt17(c.A(i, j)) << "\n";
    for (int i = 0; i < p.n; ++i)
      if (c.d[i] != 0.0)
        out << "con " << k + 1 << " d " << i + 1 << " " << detail::fmt17(c.d[i]) << "\n";
    out << "con " << k + 1 << " rhs " << detail::fmt17(c.b) << " "
        << (c.rel == Relation::LessEqual ? "le" : "eq") << "\n";
  }
  for (int row = 0; row < p.lin.rows; ++row) {
    for (int i = 0; i < p.n; ++i)
      if (p.lin(row, i) != 0.0)
        out << "lin " << row + 1 << " " << i + 1 << " " << detail::fmt17(p.lin(row, i)) << "\n";
    out << "lint " << row + 1 << " " << detail::fmt17(p.lin.t[row]) << "\n";
  }
  return out.str();
}

inline std::string emit_instance(const IsdpInstance& p) {
  std::ostringstream out;
  const double sg = p.sign();
  out << "bsdp1 n=" << p.n << " r=" << p.equalities.size() << " q=0 sense="
      << (p.sense == Sense::Min ? "min" : "max") << "\n";
  for (int j = 0; j < p.n; ++j)
    for (int i = 0; i <= j; ++i)
      if (p.C(i, j) != 0.0)
        out << "C " << i + 1 << " " << j + 1 << " " << detail::fmt17(sg * p.C(i, j)) << "\n";
  for (std::size_t k = 0; k < p.equalities.size(); ++k) {
    const auto& [a, b] = p.equalities[k];
    for (int j = 0; j < p.n; ++j)
      for (int i = 0; i <= j; ++i)
        if (a(i, j) != 0.0)
          out << "con " << k + 1 << " A " << i + 1 << " " << j + 1 << " " << detail::fmt17(a(i, j))
              << "\n";
    out << "con " << k + 1 << " rhs " << detail::fmt17(b) << " eq\n";
  }
  for (const auto& e : p.integer_entries)
    out << "int " << e.i + 1 << " " << e.j + 1 << " " << detail::fmt17(e.lo) << " "
        << detail::fmt17(e.hi) << "\n";
  return out.str();
}

}  // namespace isdp
