#pragma once

#include <cstdint>
#include <cstdio>
#include <fstream>
#include <map>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "multilens/ensemble.hpp"

namespace multilens {

// Ensemble description as read from a config file:
// { "planes": [ { "masses": [..], "positions": [[re,im],..] }, .. ],
//   "betas":  [ [b12], [b13,b23], .. ],          (absent or [] for one plane)
//   "source": [re, im] }                          (optional)
struct ensemble_config {
  std::vector<plane> planes;
  std::vector<std::vector<double>> betas;
  std::optional<cplx> source;

  ensemble to_ensemble() const { return ensemble(planes, betas); }
};

inline ensemble_config parse_config(const nlohmann::json& j) {
  if (!j.is_object()) throw std::invalid_argument("config root must be an object");
  ensemble_config cfg;
  if (!j.contains("planes") || !j["planes"].is_array() || j["planes"].empty())
    throw std::invalid_argument("config needs a non-empty \"planes\" array");
  for (const auto& jp : j["planes"]) {
    if (!jp.is_object() || !jp.contains("masses") || !jp.contains("positions"))
      throw std::invalid_argument("each plane needs \"masses\" and \"positions\"");
    plane pl;
    for (const auto& m : jp["masses"]) {
      if (!m.is_number()) throw std::invalid_argument("masses must be numbers");
      pl.masses.push_back(m.get<double>());
    }
    for (const auto& p : jp["positions"]) {
      if (!p.is_array() || p.size() != 2 || !p[0].is_number() || !p[1].is_number())
        throw std::invalid_argument("positions must be [re, im] pairs");
      pl.positions.emplace_back(p[0].get<double>(), p[1].get<double>());
    }
    cfg.planes.push_back(std::move(pl));
  }
  if (j.contains("betas")) {
    if (!j["betas"].is_array()) throw std::invalid_argument("\"betas\" must be an array");
    for (const auto& row : j["betas"]) {
      if (!row.is_array()) throw std::invalid_argument("each betas row must be an array");
      std::vector<double> r;
      for (const auto& b : row) {
        if (!b.is_number()) throw std::invalid_argument("betas must be numbers");
        r.push_back(b.get<double>());
      }
      cfg.betas.push_back(std::move(r));
    }
  }
  if (j.contains("source")) {
    const auto& s = j["source"];
    if (!s.is_array() || s.size() != 2 || !s[0].is_number() || !s[1].is_number())
      throw std::invalid_argument("\"source\" must be [re, im]");
    cfg.source = cplx(s[0].get<double>(), s[1].get<double>());
  }
  return cfg;
}

inline ensemble_config load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open config file: " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw std::invalid_argument("config parse error: " + std::string(e.what()));
  }
  return parse_config(j);
}

// ---- deterministic JSON output ----------------------------------------------
//
// Output records must be byte-identical across runs, so they are emitted by
// a tiny value tree with fixed key order and %.17g floats instead of going
// back through a general-purpose serializer.

class jval;
using jval_ptr = std::shared_ptr<jval>;

class jval {
 public:
  using array_t = std::vector<jval_ptr>;
  using object_t = std::vector<std::pair<std::string, jval_ptr>>;  // insertion order
  std::variant<std::nullptr_t, bool, int64_t, double, std::string, array_t, object_t> v;

  static jval_ptr make_null() { return std::make_shared<jval>(jval{nullptr}); }
  static jval_ptr make(bool b) { return std::make_shared<jval>(jval{b}); }
  static jval_ptr make(int64_t n) { return std::make_shared<jval>(jval{n}); }
  static jval_ptr make(int n) { return make(static_cast<int64_t>(n)); }
  static jval_ptr make(double d) { return std::make_shared<jval>(jval{d}); }
  static jval_ptr make(const std::string& s) { return std::make_shared<jval>(jval{s}); }
  static jval_ptr make(const char* s) { return make(std::string(s)); }
  static jval_ptr array() { return std::make_shared<jval>(jval{array_t{}}); }
  static jval_ptr object() { return std::make_shared<jval>(jval{object_t{}}); }

  void push(jval_ptr item) { std::get<array_t>(v).push_back(std::move(item)); }
  void set(const std::string& key, jval_ptr item) {
    std::get<object_t>(v).emplace_back(key, std::move(item));
  }
};

inline std::string format_double(double d) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", d);
  return buf;
}

namespace detail {

inline void dump_json(const jval& value, std::string& out) {
  struct visitor {
    std::string& out;
    void operator()(std::nullptr_t) const { out += "null"; }
    void operator()(bool b) const { out += b ? "true" : "false"; }
    void operator()(int64_t n) const { out += std::to_string(n); }
    void operator()(double d) const { out += format_double(d); }
    void operator()(const std::string& s) const {
      out += '"';
      for (char c : s) {
        switch (c) {
          case '"': out += "\\\""; break;
          case '\\': out += "\\\\"; break;
          case '\n': out += "\\n"; break;
          case '\t': out += "\\t"; break;
          case '\r': out += "\\r"; break;
          default:
            if (static_cast<unsigned char>(c) < 0x20) {
              char buf[8];
              std::snprintf(buf, sizeof(buf), "\\u%04x", c);
              out += buf;
            } else {
              out += c;
            }
        }
      }
      out += '"';
    }
    void operator()(const jval::array_t& a) const {
      out += '[';
      for (size_t i = 0; i < a.size(); ++i) {
        if (i) out += ',';
        dump_json(*a[i], out);
      }
      out += ']';
    }
    void operator()(const jval::object_t& o) const {
      out += '{';
      for (size_t i = 0; i < o.size(); ++i) {
        if (i) out += ',';
        (*this)(o[i].first);
        out += ':';
        dump_json(*o[i].second, out);
      }
      out += '}';
    }
  };
  std::visit(visitor{out}, value.v);
}

}  // namespace detail

inline std::string dump_json(const jval_ptr& value) {
  std::string out;
  detail::dump_json(*value, out);
  return out;
}

inline jval_ptr complex_to_jval(cplx z) {
  auto a = jval::array();
  a->push(jval::make(z.real()));
  a->push(jval::make(z.imag()));
  return a;
}

inline jval_ptr config_to_jval(const ensemble_config& cfg) {
  auto root = jval::object();
  auto planes = jval::array();
  for (const plane& pl : cfg.planes) {
    auto jp = jval::object();
    auto masses = jval::array();
    for (double m : pl.masses) masses->push(jval::make(m));
    auto positions = jval::array();
    for (cplx y : pl.positions) positions->push(complex_to_jval(y));
    jp->set("masses", masses);
    jp->set("positions", positions);
    planes->push(jp);
  }
  root->set("planes", planes);
  auto betas = jval::array();
  for (const auto& row : cfg.betas) {
    auto jr = jval::array();
    for (double b : row) jr->push(jval::make(b));
    betas->push(jr);
  }
  root->set("betas", betas);
  if (cfg.source) root->set("source", complex_to_jval(*cfg.source));
  return root;
}

// FNV-1a over the canonical serialization; stable tag for a configuration.
inline uint64_t config_digest(const ensemble_config& cfg) {
  const std::string s = dump_json(config_to_jval(cfg));
  uint64_t h = 1469598103934665603ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

}  // namespace multilens
