#pragma once

// CSV and JSON encoding of ensembles, series and points.
//
// Numbers are printed in shortest round-trip form, so the bytes written
// depend only on the values.

#include <charconv>
#include <limits>
#include <stdexcept>
#include <cmath>
#include <fstream>
#include <sstream>
#include <string>
#include <system_error>
#include <variant>
#include <vector>

#include <json.hpp>

#include "rfi/errors.hpp"
#include "rfi/geometry.hpp"
#include "rfi/transport.hpp"

namespace rfi::io {

using Json = nlohmann::ordered_json;

inline std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

inline double parse_double(const std::string& s) {
  if (s == "nan") return std::nan("");
  if (s == "inf") return std::numeric_limits<double>::infinity();
  if (s == "-inf") return -std::numeric_limits<double>::infinity();
  double v = 0.0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size()) throw InputError("not a number: '" + s + "'");
  return v;
}

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur.push_back(c);
    }
  }
  out.push_back(cur);
  return out;
}

// ---------------------------------------------------------------------------
// Ensembles: one row per particle, in particle order.

inline void write_ensemble_csv(std::ostream& os, const Euclidean& space, const Ensemble<Euclidean>& e) {
  os << "particle";
  for (std::size_t j = 0; j < space.dim; ++j) os << ",x" << j;
  os << '\n';
  for (std::size_t p = 0; p < e.size(); ++p) {
    os << p;
    for (Eigen::Index j = 0; j < e[p].size(); ++j) os << ',' << format_double(e[p][j]);
    os << '\n';
  }
}

inline void write_ensemble_csv(std::ostream& os, const Spider&, const Ensemble<Spider>& e) {
  os << "particle,leg,radius\n";
  for (std::size_t p = 0; p < e.size(); ++p) os << p << ',' << e[p].leg << ',' << format_double(e[p].radius) << '\n';
}

using AnyEnsemble = std::variant<Ensemble<Euclidean>, Ensemble<Spider>>;

/// Reads an ensemble written by write_ensemble_csv. The header decides the
/// space: (particle, leg, radius) is a spider, (particle, x0, ...) Euclidean.
inline AnyEnsemble read_ensemble_csv(std::istream& is, const std::string& source = "<stream>") {
  std::string line;
  if (!std::getline(is, line)) throw InputError(source + ": empty ensemble file");
  const auto header = split_csv_line(line);
  if (header.empty() || header[0] != "particle") throw InputError(source + ":1: header must start with 'particle'");
  const bool spider = header.size() == 3 && header[1] == "leg" && header[2] == "radius";
  if (!spider)
    for (std::size_t j = 1; j < header.size(); ++j)
      if (header[j] != "x" + std::to_string(j - 1))
        throw InputError(source + ":1: unexpected column '" + header[j] + "'");
  if (!spider && header.size() < 2) throw InputError(source + ":1: no coordinate columns");

  Ensemble<Euclidean> euc;
  Ensemble<Spider> spi;
  std::size_t lineno = 1;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty() || line == "\r") continue;
    const auto cells = split_csv_line(line);
    const std::string where = source + ":" + std::to_string(lineno);
    if (cells.size() != header.size()) throw InputError(where + ": expected " + std::to_string(header.size()) + " fields");
    try {
      if (spider) {
        const double leg = parse_double(cells[1]);
        if (leg != std::floor(leg) || leg < 0) throw InputError("leg must be a nonnegative integer");
        spi.emplace_back(static_cast<int>(leg), parse_double(cells[2]));
      } else {
        Vector x(static_cast<Eigen::Index>(header.size() - 1));
        for (std::size_t j = 1; j < cells.size(); ++j) x[static_cast<Eigen::Index>(j - 1)] = parse_double(cells[j]);
        euc.push_back(std::move(x));
      }
    } catch (const InputError& e) {
      throw InputError(where + ": " + e.what());
    }
  }
  if (spider) return spi;
  return euc;
}

inline AnyEnsemble read_ensemble_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open " + path);
  return read_ensemble_csv(in, path);
}

// ---------------------------------------------------------------------------
// Points as JSON

inline Json to_json(const Vector& x) {
  Json a = Json::array();
  for (double v : x) a.push_back(std::isfinite(v) ? Json(v) : Json(nullptr));
  return a;
}

inline Json to_json(const SpiderPoint& x) { return Json{{"leg", x.leg}, {"radius", x.radius}}; }

inline Json number_or_null(double v) { return std::isfinite(v) ? Json(v) : Json(nullptr); }

// ---------------------------------------------------------------------------
// Distance series

struct SeriesRow {
  std::size_t k = 0;
  double w2_to_reference = std::nan("");
  double psi_hat = std::nan("");
  double ratio = std::nan("");
  double w2_step = std::nan("");
};

inline void write_series_csv(std::ostream& os, const std::vector<SeriesRow>& rows) {
  auto cell = [](double v) { return std::isnan(v) ? std::string() : format_double(v); };
  os << "k,W2_to_pi,psi_hat,ratio,W2_step\n";
  for (const auto& r : rows)
    os << r.k << ',' << cell(r.w2_to_reference) << ',' << cell(r.psi_hat) << ',' << cell(r.ratio) << ','
       << cell(r.w2_step) << '\n';
}

inline std::vector<SeriesRow> read_series_csv(std::istream& is, const std::string& source = "<stream>") {
  std::string line;
  if (!std::getline(is, line)) throw InputError(source + ": empty series file");
  const auto header = split_csv_line(line);
  if (header.size() < 3 || header[0] != "k" || header[1] != "W2_to_pi" || header[2] != "psi_hat")
    throw InputError(source + ":1: expected header k,W2_to_pi,psi_hat,...");
  auto cell = [](const std::vector<std::string>& c, std::size_t i) {
    return i < c.size() && !c[i].empty() ? parse_double(c[i]) : std::nan("");
  };
  std::vector<SeriesRow> rows;
  std::size_t lineno = 1;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty() || line == "\r") continue;
    const auto c = split_csv_line(line);
    try {
      SeriesRow r;
      const double k = parse_double(c[0]);
      if (k < 0 || k != std::floor(k)) throw InputError("k must be a nonnegative integer");
      r.k = static_cast<std::size_t>(k);
      r.w2_to_reference = cell(c, 1);
      r.psi_hat = cell(c, 2);
      r.ratio = cell(c, 3);
      r.w2_step = cell(c, 4);
      rows.push_back(r);
    } catch (const InputError& e) {
      throw InputError(source + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
  return rows;
}

// ---------------------------------------------------------------------------
// Files

inline void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << text;
  if (!out) throw std::runtime_error("write failed for " + path);
}

inline Json read_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open " + path);
  return Json::parse(in);
}

} // namespace rfi::io
