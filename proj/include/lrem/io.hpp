#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <unistd.h>

#include "json.hpp"
#include "likelihood.hpp"

namespace lrem {

using Json = nlohmann::ordered_json;

struct ModelFile {
  ModelSpec model;
  std::optional<RegularizerSpec> regularizer;
  std::optional<std::string> builtin;
};

struct ModelFileError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

namespace io_detail {
inline void only_keys(const Json& j, std::initializer_list<const char*> allowed, const std::string& where) {
  if (!j.is_object()) throw ModelFileError(where + ": expected an object");
  std::set<std::string> ok(allowed.begin(), allowed.end());
  for (const auto& [k, v] : j.items())
    if (!ok.count(k)) throw ModelFileError(where + ": unknown key '" + k + "'");
}

inline const Json& need(const Json& j, const char* key, const std::string& where) {
  if (!j.contains(key)) throw ModelFileError(where + ": missing key '" + key + "'");
  return j.at(key);
}

inline double number(const Json& j, const std::string& where) {
  if (!j.is_number()) throw ModelFileError(where + ": expected a number");
  return j.get<double>();
}

inline Index count(const Json& j, const std::string& where) {
  if (!j.is_number_integer() || j.get<long long>() < 0) throw ModelFileError(where + ": expected a non-negative integer");
  return static_cast<Index>(j.get<long long>());
}

inline cd entry(const Json& j, const std::string& where) {
  if (j.is_number()) return j.get<double>();
  if (j.is_array() && j.size() == 2 && j[0].is_number() && j[1].is_number()) return {j[0].get<double>(), j[1].get<double>()};
  throw ModelFileError(where + ": entries must be numbers or [re, im] pairs");
}

inline Json entry_json(cd v) {
  if (v.imag() == 0.0) return v.real();
  return Json::array({v.real(), v.imag()});
}
}  // namespace io_detail

inline Mat matrix_from_json(const Json& j, Index rows, Index cols, const std::string& where) {
  if (!j.is_array() || static_cast<Index>(j.size()) != rows) throw ModelFileError(where + ": expected " + std::to_string(rows) + " rows");
  Mat a(rows, cols);
  for (Index i = 0; i < rows; ++i) {
    const Json& r = j[static_cast<size_t>(i)];
    if (!r.is_array() || static_cast<Index>(r.size()) != cols) throw ModelFileError(where + ": expected rows of length " + std::to_string(cols));
    for (Index c = 0; c < cols; ++c) a(i, c) = io_detail::entry(r[static_cast<size_t>(c)], where);
  }
  return a;
}

inline Json matrix_to_json(const Mat& a) {
  Json rows = Json::array();
  for (Index i = 0; i < a.rows(); ++i) {
    Json r = Json::array();
    for (Index c = 0; c < a.cols(); ++c) r.push_back(io_detail::entry_json(a(i, c)));
    rows.push_back(r);
  }
  return rows;
}

// [{"power": s, "matrix": A_s}, ...]
inline LaurentMatrix laurent_from_json(const Json& j, Index rows, Index cols, const std::string& where) {
  if (!j.is_array()) throw ModelFileError(where + ": expected a coefficient list");
  LaurentMatrix out(rows, cols);
  for (const auto& t : j) {
    io_detail::only_keys(t, {"power", "matrix"}, where);
    const Json& p = io_detail::need(t, "power", where);
    if (!p.is_number_integer()) throw ModelFileError(where + ": power must be an integer");
    out.add_to(p.get<int>(), matrix_from_json(io_detail::need(t, "matrix", where), rows, cols, where));
  }
  return out;
}

inline Json laurent_to_json(const LaurentMatrix& a) {
  Json out = Json::array();
  for (int s = a.lo(); !a.is_zero() && s <= a.hi(); ++s) {
    if (a.at(s).isZero(0.0)) continue;
    out.push_back(Json{{"power", s}, {"matrix", matrix_to_json(a.at(s))}});
  }
  return out;
}

inline RationalMatrix rational_from_json(const Json& j, Index rows, Index cols, const std::string& where) {
  io_detail::only_keys(j, {"num", "den"}, where);
  LaurentMatrix num = laurent_from_json(io_detail::need(j, "num", where), rows, cols, where + ".num");
  LaurentPoly den = LaurentPoly::constant(1.0);
  if (j.contains("den")) {
    LaurentMatrix d = laurent_from_json(j.at("den"), 1, 1, where + ".den");
    den = d.entry(0, 0);
  }
  if (den.is_zero()) throw ModelFileError(where + ": zero denominator");
  return RationalMatrix(num, den);
}

inline Json rational_to_json(const RationalMatrix& f) {
  LaurentMatrix d(1, 1);
  d.set_entry(0, 0, f.den());
  return Json{{"num", laurent_to_json(f.num())}, {"den", laurent_to_json(d)}};
}

inline RegularizerSpec regularizer_from_json(const Json& j, const std::string& where = "regularizer") {
  io_detail::only_keys(j, {"kind", "coords", "coord", "pairs", "weight", "arcs", "parts"}, where);
  const Json& kind = io_detail::need(j, "kind", where);
  if (!kind.is_string()) throw ModelFileError(where + ": kind must be a string");
  const std::string k = kind.get<std::string>();
  using K = RegularizerSpec::Kind;
  RegularizerSpec s;
  if (k == "identity") {
    s.kind = K::Identity;
  } else if (k == "coordinates") {
    s.kind = K::Coordinates;
    for (const auto& c : io_detail::need(j, "coords", where)) s.coords.push_back(io_detail::count(c, where + ".coords"));
  } else if (k == "expectation-shift") {
    s.kind = K::ExpectationShift;
    s.coord = io_detail::count(io_detail::need(j, "coord", where), where + ".coord");
  } else if (k == "second-difference") {
    s.kind = K::SecondDifference;
    for (const auto& p : io_detail::need(j, "pairs", where)) {
      if (!p.is_array() || p.size() != 2) throw ModelFileError(where + ".pairs: expected [i, j] pairs");
      s.pairs.emplace_back(io_detail::count(p[0], where + ".pairs"), io_detail::count(p[1], where + ".pairs"));
    }
    if (j.contains("weight")) s.weight = io_detail::number(j.at("weight"), where + ".weight");
  } else if (k == "band-mask") {
    s.kind = K::BandMask;
    for (const auto& a : io_detail::need(j, "arcs", where)) {
      if (!a.is_array() || a.size() != 2) throw ModelFileError(where + ".arcs: expected [lo, hi] pairs");
      s.arcs.push_back({io_detail::number(a[0], where + ".arcs"), io_detail::number(a[1], where + ".arcs")});
    }
  } else if (k == "composite") {
    s.kind = K::Composite;
    for (const auto& p : io_detail::need(j, "parts", where)) s.parts.push_back(regularizer_from_json(p, where + ".parts"));
  } else {
    throw ModelFileError(where + ": unknown kind '" + k + "'");
  }
  return s;
}

inline Json regularizer_to_json(const RegularizerSpec& s) {
  using K = RegularizerSpec::Kind;
  Json j{{"kind", s.name()}};
  switch (s.kind) {
    case K::Identity: break;
    case K::Coordinates: j["coords"] = s.coords; break;
    case K::ExpectationShift: j["coord"] = s.coord; break;
    case K::SecondDifference: {
      Json p = Json::array();
      for (auto [a, b] : s.pairs) p.push_back(Json::array({a, b}));
      j["pairs"] = p;
      j["weight"] = s.weight;
      break;
    }
    case K::BandMask: {
      Json a = Json::array();
      for (const auto& arc : s.arcs) a.push_back(Json::array({arc.lo, arc.hi}));
      j["arcs"] = a;
      break;
    }
    case K::Composite: {
      Json p = Json::array();
      for (const auto& part : s.parts) p.push_back(regularizer_to_json(part));
      j["parts"] = p;
      break;
    }
  }
  return j;
}

inline ModelFile model_from_json(const Json& j) {
  const std::string w = "model";
  ModelFile f;
  if (j.is_object() && j.contains("builtin")) {
    io_detail::only_keys(j, {"builtin", "parameters", "regularizer"}, w);
    if (!j.at("builtin").is_string()) throw ModelFileError(w + ": builtin must be a string");
    f.builtin = j.at("builtin").get<std::string>();
    try {
      f.model = builtin::by_name(*f.builtin);
    } catch (const std::invalid_argument& e) {
      throw ModelFileError(e.what());
    }
    if (j.contains("parameters") && !j.at("parameters").is_object()) throw ModelFileError(w + ".parameters: expected an object");
  } else {
    io_detail::only_keys(j, {"m", "n", "driver", "coefficients", "forcing", "parameters", "regularizer"}, w);
    ModelSpec& s = f.model;
    s.name = "file";
    s.m = io_detail::count(io_detail::need(j, "m", w), w + ".m");
    s.n = io_detail::count(io_detail::need(j, "n", w), w + ".n");
    if (s.m < 1 || s.n < 1 || s.n > s.m) throw ModelFileError(w + ": need 1 <= n <= m");
    if (j.contains("parameters")) {
      const Json& p = j.at("parameters");
      if (!p.is_object()) throw ModelFileError(w + ".parameters: expected an object");
      for (const auto& [k, v] : p.items()) s.parameters.emplace_back(k, io_detail::number(v, w + ".parameters." + k));
    }
    const Json& coefs = io_detail::need(j, "coefficients", w);
    if (!coefs.is_array()) throw ModelFileError(w + ".coefficients: expected a list");
    for (const auto& t : coefs) {
      io_detail::only_keys(t, {"power", "base", "linear"}, w + ".coefficients");
      CoefficientTerm term;
      const Json& p = io_detail::need(t, "power", w + ".coefficients");
      if (!p.is_number_integer()) throw ModelFileError(w + ".coefficients: power must be an integer");
      term.power = p.get<int>();
      term.base = t.contains("base") ? matrix_from_json(t.at("base"), s.m, s.m, w + ".coefficients.base") : Mat::Zero(s.m, s.m);
      if (t.contains("linear")) {
        const Json& lin = t.at("linear");
        if (!lin.is_object()) throw ModelFileError(w + ".coefficients.linear: expected an object");
        for (const auto& [k, v] : lin.items()) term.linear[k] = matrix_from_json(v, s.m, s.m, w + ".coefficients.linear." + k);
      }
      s.terms.push_back(std::move(term));
    }
    if (j.contains("forcing")) s.forcing = laurent_from_json(j.at("forcing"), s.m, s.n, w + ".forcing");
    if (j.contains("driver")) {
      const Json& d = j.at("driver");
      io_detail::only_keys(d, {"type", "r", "gamma", "upsilon"}, w + ".driver");
      const Json& type = io_detail::need(d, "type", w + ".driver");
      if (type == "white") {
        if (d.contains("gamma") || d.contains("upsilon")) throw ModelFileError(w + ".driver: white driver takes no gamma/upsilon");
        s.driver.kind = Driver::Kind::White;
        s.driver.r = s.n;
        if (d.contains("r") && io_detail::count(d.at("r"), w + ".driver.r") != s.n) throw ModelFileError(w + ".driver: white driver needs r = n");
      } else if (type == "rational") {
        s.driver.kind = Driver::Kind::Rational;
        s.driver.r = io_detail::count(io_detail::need(d, "r", w + ".driver"), w + ".driver.r");
        s.driver.gamma = rational_from_json(io_detail::need(d, "gamma", w + ".driver"), s.n, s.driver.r, w + ".driver.gamma");
        s.driver.upsilon = rational_from_json(io_detail::need(d, "upsilon", w + ".driver"), s.driver.r, s.n, w + ".driver.upsilon");
      } else {
        throw ModelFileError(w + ".driver: type must be \"white\" or \"rational\"");
      }
    }
    try {
      s.validate();
    } catch (const std::exception& e) {
      throw ModelFileError(e.what());
    }
  }
  if (j.contains("parameters") && f.builtin) {
    for (const auto& [k, v] : j.at("parameters").items()) {
      bool known = false;
      for (auto& [pk, pv] : f.model.parameters)
        if (pk == k) {
          pv = io_detail::number(v, w + ".parameters." + k);
          known = true;
        }
      if (!known) throw ModelFileError(w + ".parameters: unknown parameter '" + k + "'");
    }
  }
  if (j.contains("regularizer")) {
    f.regularizer = regularizer_from_json(j.at("regularizer"));
    try {
      f.regularizer->validate(f.model.m);
    } catch (const std::exception& e) {
      throw ModelFileError(std::string("regularizer: ") + e.what());
    }
  }
  return f;
}

// Full encoding of the model (builtins are written out coefficient by coefficient).
inline Json model_to_json(const ModelSpec& s, const std::optional<RegularizerSpec>& reg = std::nullopt) {
  Json j;
  j["m"] = s.m;
  j["n"] = s.n;
  Json d{{"type", s.driver.kind == Driver::Kind::White ? "white" : "rational"}, {"r", s.r()}};
  if (s.driver.kind == Driver::Kind::Rational) {
    d["gamma"] = rational_to_json(s.driver.gamma);
    d["upsilon"] = rational_to_json(s.driver.upsilon);
  }
  j["driver"] = d;
  Json coefs = Json::array();
  for (const auto& t : s.terms) {
    Json c{{"power", t.power}, {"base", matrix_to_json(t.base)}};
    if (!t.linear.empty()) {
      Json lin = Json::object();
      for (const auto& [k, m] : t.linear) lin[k] = matrix_to_json(m);
      c["linear"] = lin;
    }
    coefs.push_back(c);
  }
  j["coefficients"] = coefs;
  if (s.forcing) j["forcing"] = laurent_to_json(*s.forcing);
  Json p = Json::object();
  for (const auto& [k, v] : s.parameters) p[k] = v;
  j["parameters"] = p;
  if (reg) j["regularizer"] = regularizer_to_json(*reg);
  return j;
}

inline ModelFile parse_model(const std::string& text) {
  Json j;
  try {
    j = Json::parse(text);
  } catch (const Json::parse_error& e) {
    throw ModelFileError(std::string("model: malformed JSON: ") + e.what());
  }
  return model_from_json(j);
}

inline ModelFile load_model_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ModelFileError("cannot open model file '" + path.string() + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_model(ss.str());
}

// Writes to a temporary sibling and renames it over the target.
inline void write_atomic(const std::filesystem::path& path, const std::string& content) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::filesystem::path tmp = path;
  tmp += ".tmp." + std::to_string(::getpid());
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write '" + tmp.string() + "'");
    out << content;
    out.flush();
    if (!out) throw std::runtime_error("write failed for '" + tmp.string() + "'");
  }
  std::filesystem::rename(tmp, path);
}

inline std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline Json tolerances_json(const Tolerances& t) {
  return Json{{"drop", t.drop},     {"circle", t.circle}, {"cluster", t.cluster}, {"factor", t.factor},
              {"pd", t.pd},         {"gram", t.gram},     {"rank", t.rank},       {"series", t.series},
              {"grid", t.grid},     {"section_start", t.section_start},           {"section_max", t.section_max}};
}

// Columns: s, then the real parts of Xi_s in row-major order (imaginary parts
// follow only when some coefficient is complex).
inline std::string impulse_csv(const std::vector<Mat>& xi) {
  std::ostringstream out;
  const Index r = xi.empty() ? 0 : xi[0].rows(), c = xi.empty() ? 0 : xi[0].cols();
  bool complex = false;
  for (const auto& a : xi) complex = complex || a.imag().cwiseAbs().maxCoeff() > 1e-12 * std::max(1.0, a.cwiseAbs().maxCoeff());
  out << "s";
  for (Index i = 0; i < r; ++i)
    for (Index j = 0; j < c; ++j) out << ",xi_" << i << "_" << j;
  if (complex)
    for (Index i = 0; i < r; ++i)
      for (Index j = 0; j < c; ++j) out << ",im_xi_" << i << "_" << j;
  out << "\n";
  for (size_t s = 0; s < xi.size(); ++s) {
    out << s;
    for (Index i = 0; i < r; ++i)
      for (Index j = 0; j < c; ++j) out << "," << format_double(xi[s](i, j).real());
    if (complex)
      for (Index i = 0; i < r; ++i)
        for (Index j = 0; j < c; ++j) out << "," << format_double(xi[s](i, j).imag());
    out << "\n";
  }
  return out.str();
}

inline std::string surface_csv(const LikelihoodSurface& s) {
  std::ostringstream out;
  for (const auto& p : s.parameters) out << p << ",";
  out << "value,classification,flags";
  if (s.finite_sample_T > 0) out << ",finite_sample";
  out << "\n";
  for (const auto& pt : s.points) {
    for (double t : pt.theta) out << format_double(t) << ",";
    out << format_double(pt.value) << "," << pt.classification << ",";
    for (size_t i = 0; i < pt.flags.size(); ++i) out << (i ? ";" : "") << pt.flags[i];
    if (s.finite_sample_T > 0) out << "," << format_double(pt.finite_sample);
    out << "\n";
  }
  return out.str();
}

inline Json surface_json(const LikelihoodSurface& s, const Tolerances& tol = default_tolerances()) {
  Json axes = Json::array();
  for (const auto& a : s.axes) axes.push_back(Json{{"name", a.name}, {"lo", a.lo}, {"hi", a.hi}, {"steps", a.steps}});
  Json minima = Json::array();
  for (const auto& m : s.minima) minima.push_back(Json{{"theta", m.theta}, {"value", m.value}});
  size_t flagged = 0;
  for (const auto& p : s.points) flagged += !p.flags.empty();
  return Json{{"family", s.family},
              {"parameters", s.parameters},
              {"truth", s.truth},
              {"axes", axes},
              {"points", s.points.size()},
              {"flagged_points", flagged},
              {"minima", minima},
              {"grid_n", s.grid_n},
              {"finite_sample_T", s.finite_sample_T},
              {"seed", s.seed},
              {"tolerances", tolerances_json(tol)}};
}

}  // namespace lrem
