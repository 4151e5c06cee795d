#include "roughball/config.hpp"

#include <array>
#include <charconv>
#include <cmath>
#include <limits>
#include <set>

#include "roughball/error.hpp"
#include "roughball/io.hpp"
#include "roughball/rng.hpp"
#include "roughball/sbp.hpp"

namespace roughball {

using nlohmann::json;

namespace {

std::string short_number(double x) {
  std::array<char, 32> buf{};
  const auto res = std::to_chars(buf.data(), buf.data() + buf.size(), x, std::chars_format::general, 6);
  return std::string(buf.data(), res.ptr);
}

/// Typed access to one JSON object; remembers which keys were read so leftovers can be rejected.
class Reader {
 public:
  Reader(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ConfigError(path_.empty() ? "<root>" : path_, "must be a JSON object");
  }

  std::string key(const std::string& k) const { return path_.empty() ? k : path_ + "." + k; }

  bool has(const std::string& k) {
    seen_.insert(k);
    return j_.contains(k) && !j_.at(k).is_null();
  }

  const json& raw(const std::string& k) {
    if (!has(k)) throw ConfigError(key(k), "is required");
    return j_.at(k);
  }

  double number(const std::string& k, std::optional<double> fallback = std::nullopt) {
    if (!has(k)) {
      if (!fallback) throw ConfigError(key(k), "is required");
      return *fallback;
    }
    const auto& v = j_.at(k);
    if (!v.is_number()) throw ConfigError(key(k), "must be a number");
    const double x = v.get<double>();
    if (!std::isfinite(x)) throw ConfigError(key(k), "must be finite");
    return x;
  }

  double positive(const std::string& k, std::optional<double> fallback = std::nullopt) {
    const double x = number(k, fallback);
    if (!(x > 0.0)) throw ConfigError(key(k), "must be > 0");
    return x;
  }

  std::uint64_t unsigned_integer(const std::string& k, std::optional<std::uint64_t> fallback = std::nullopt) {
    if (!has(k)) {
      if (!fallback) throw ConfigError(key(k), "is required");
      return *fallback;
    }
    return as_unsigned(j_.at(k), key(k));
  }

  std::size_t count(const std::string& k, std::optional<std::size_t> fallback = std::nullopt) {
    const auto v = unsigned_integer(k, fallback);
    if (v == 0) throw ConfigError(key(k), "must be a positive integer");
    return static_cast<std::size_t>(v);
  }

  int integer(const std::string& k, int fallback) {
    if (!has(k)) return fallback;
    const auto& v = j_.at(k);
    if (!v.is_number_integer()) throw ConfigError(key(k), "must be an integer");
    return v.get<int>();
  }

  bool boolean(const std::string& k, bool fallback) {
    if (!has(k)) return fallback;
    const auto& v = j_.at(k);
    if (!v.is_boolean()) throw ConfigError(key(k), "must be true or false");
    return v.get<bool>();
  }

  std::string string(const std::string& k, std::optional<std::string> fallback = std::nullopt) {
    if (!has(k)) {
      if (!fallback) throw ConfigError(key(k), "is required");
      return *fallback;
    }
    const auto& v = j_.at(k);
    if (!v.is_string()) throw ConfigError(key(k), "must be a string");
    return v.get<std::string>();
  }

  std::string choice(const std::string& k, const std::vector<std::string>& options,
                     std::optional<std::string> fallback = std::nullopt) {
    const auto s = string(k, std::move(fallback));
    for (const auto& o : options)
      if (o == s) return s;
    std::string list;
    for (const auto& o : options) list += (list.empty() ? "" : ", ") + o;
    throw ConfigError(key(k), "must be one of {" + list + "}, got \"" + s + "\"");
  }

  std::vector<double> numbers(const std::string& k, std::optional<std::vector<double>> fallback = std::nullopt) {
    if (!has(k)) {
      if (!fallback) throw ConfigError(key(k), "is required");
      return *fallback;
    }
    return as_numbers(j_.at(k), key(k));
  }

  std::vector<double> positive_numbers(const std::string& k,
                                       std::optional<std::vector<double>> fallback = std::nullopt) {
    auto v = numbers(k, std::move(fallback));
    for (double x : v)
      if (!(x > 0.0)) throw ConfigError(key(k), "entries must be > 0");
    return v;
  }

  std::vector<std::size_t> counts(const std::string& k, std::vector<std::size_t> fallback) {
    if (!has(k)) return fallback;
    const auto& v = j_.at(k);
    if (!v.is_array() || v.empty()) throw ConfigError(key(k), "must be a nonempty array of positive integers");
    std::vector<std::size_t> out;
    for (const auto& e : v) {
      const auto x = as_unsigned(e, key(k));
      if (x == 0) throw ConfigError(key(k), "entries must be positive integers");
      out.push_back(static_cast<std::size_t>(x));
    }
    return out;
  }

  std::vector<std::vector<double>> matrix(const std::string& k) {
    const auto& v = raw(k);
    if (!v.is_array() || v.empty()) throw ConfigError(key(k), "must be a nonempty array of rows");
    std::vector<std::vector<double>> out;
    for (const auto& row : v) out.push_back(as_numbers(row, key(k)));
    for (const auto& row : out)
      if (row.size() != out.front().size()) throw ConfigError(key(k), "rows must have equal length");
    return out;
  }

  Reader child(const std::string& k) {
    seen_.insert(k);
    static const json empty = json::object();
    if (!j_.contains(k) || j_.at(k).is_null()) return Reader(empty, key(k));
    return Reader(j_.at(k), key(k));
  }

  void finish() const {
    for (const auto& item : j_.items())
      if (!seen_.count(item.key())) throw ConfigError(key(item.key()), "unknown key");
  }

 private:
  static std::uint64_t as_unsigned(const json& v, const std::string& where) {
    if (v.is_number_unsigned()) return v.get<std::uint64_t>();
    if (v.is_number_integer() && v.get<std::int64_t>() >= 0) return static_cast<std::uint64_t>(v.get<std::int64_t>());
    if (v.is_number_float()) {
      const double x = v.get<double>();
      if (x >= 0.0 && x == std::floor(x) && x < 9.007199254740992e15) return static_cast<std::uint64_t>(x);
    }
    throw ConfigError(where, "must be a nonnegative integer");
  }

  static std::vector<double> as_numbers(const json& v, const std::string& where) {
    if (!v.is_array()) throw ConfigError(where, "must be an array of numbers");
    std::vector<double> out;
    for (const auto& e : v) {
      if (!e.is_number() || !std::isfinite(e.get<double>())) throw ConfigError(where, "must be an array of finite numbers");
      out.push_back(e.get<double>());
    }
    return out;
  }

  const json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

json matrix_json(const std::vector<std::vector<double>>& m) {
  json out = json::array();
  for (const auto& row : m) out.push_back(row);
  return out;
}

bool is_power_of_two(std::size_t n) { return n > 0 && (n & (n - 1)) == 0; }

double rho_of(const ModelSpec& m) {
  if (m.kind == "fbm") return 1.0 / (2.0 * m.hurst);
  return m.rho;
}

/// Default probability levels for quantile-based eps grids: 50/n up to 1/2 in steps of 1.5.
std::vector<double> default_levels(std::size_t n) {
  std::vector<double> out;
  for (double q = std::min(50.0 / static_cast<double>(n), 0.01); q <= 0.5; q *= 1.5) out.push_back(q);
  return out;
}

std::vector<double> levels_or_default(Reader& r, const std::string& k, std::size_t n, bool have_eps) {
  if (have_eps) {
    if (r.has(k) && !r.numbers(k).empty()) throw ConfigError(r.key(k), "give either eps or " + k + ", not both");
    return {};
  }
  auto levels = r.numbers(k, default_levels(n));
  for (double q : levels)
    if (!(q > 0.0 && q < 1.0)) throw ConfigError(r.key(k), "levels must lie in (0, 1)");
  if (levels.empty()) throw ConfigError(r.key(k), "must not be empty");
  return levels;
}

void require_dyadic(const ExperimentConfig& c, const std::string& why) {
  if (!is_power_of_two(c.steps)) throw ConfigError("grid.N", "must be a power of two for " + why);
}

void check_rough_alpha(const ExperimentConfig& c) {
  const double upper = 1.0 / (2.0 * rho_of(c.model));
  if (!(c.alpha > 1.0 / 3.0 && c.alpha < upper)) {
    throw ConfigError("alpha", "alpha must lie in (1/3, " + short_number(upper) + ")");
  }
}

std::string pairs_choice(Reader& r) { return r.choice("pairs", {"dyadic", "all"}, "dyadic"); }

json resolve_sbp(Reader& r, ExperimentConfig& c) {
  json p;
  const auto kind = r.choice("norm_kind", {"path_holder", "rough_holder_allpairs", "rough_holder_dyadic",
                                           "rough_holder_lemma_bound"},
                             "rough_holder_dyadic");
  p["norm_kind"] = kind;
  p["path_pairs"] = r.choice("path_pairs", {"dyadic", "all"}, "dyadic");
  p["lemma_eps"] = r.number("lemma_eps", 0.0);
  if (p["lemma_eps"].get<double>() < 0.0) throw ConfigError(r.key("lemma_eps"), "must be >= 0");
  p["eps_quantiles"] = levels_or_default(r, "eps_quantiles", c.n, !c.eps.empty());
  if (r.has("fit_window")) {
    const auto w = r.numbers("fit_window");
    if (w.size() != 2 || !(w[0] >= 0.0 && w[0] < w[1])) {
      throw ConfigError(r.key("fit_window"), "must be [eps_min, eps_max] with 0 <= eps_min < eps_max");
    }
    p["fit_window"] = w;
  } else {
    p["fit_window"] = nullptr;
  }
  if (kind == "path_holder") {
    const double upper = 1.0 / (2.0 * rho_of(c.model));
    if (!(c.alpha > 0.0 && c.alpha < upper)) {
      throw ConfigError("alpha", "alpha must lie in (0, " + short_number(upper) + ")");
    }
    if (p["path_pairs"] == "dyadic") require_dyadic(c, "dyadic pairs");
  } else {
    check_rough_alpha(c);
    if (kind != "rough_holder_allpairs") require_dyadic(c, kind);
  }
  return p;
}

json resolve_entropy(Reader& r, ExperimentConfig& c) {
  check_rough_alpha(c);
  json p;
  p["eta"] = r.positive("eta", 1.0);
  p["mesh_size"] = r.count("mesh_size", 512);
  p["pairs"] = pairs_choice(r);
  if (p["pairs"] == "dyadic") require_dyadic(c, "dyadic pairs");
  if (c.steps * static_cast<std::size_t>(c.model.d) > 3667) {
    throw ConfigError("grid.N", "the Cameron-Martin mesh needs N * d <= 3667");
  }
  if (c.eps.empty()) c.eps = {0.5, 1.0, 1.5, 2.0, 3.0};
  return p;
}

json resolve_quantize(Reader& r, ExperimentConfig& c) {
  check_rough_alpha(c);
  json p;
  p["n_list"] = r.counts("n_list", {4, 16, 64});
  p["r"] = r.number("r", 2.0);
  if (!(p["r"].get<double>() >= 1.0)) throw ConfigError(r.key("r"), "must be >= 1");
  p["train"] = r.count("train", 2000);
  p["test"] = r.count("test", 2000);
  p["init"] = r.choice("init", {"kmeanspp", "random"}, "kmeanspp");
  p["update"] = r.choice("update", {"medoid", "mean"}, "medoid");
  p["max_iter"] = r.count("max_iter", 50);
  p["tol"] = r.positive("tol", 1e-6);
  p["medoid_candidates"] = r.count("medoid_candidates", 256);
  p["pairs"] = pairs_choice(r);
  p["eps_quantiles"] = levels_or_default(r, "eps_quantiles", c.n, !c.eps.empty());
  p["write_codebooks"] = r.boolean("write_codebooks", true);
  for (const auto& k : p["n_list"])
    if (k.get<std::size_t>() > p["train"].get<std::size_t>()) {
      throw ConfigError(r.key("n_list"), "codebook sizes must not exceed train");
    }
  if (p["pairs"] == "dyadic") require_dyadic(c, "dyadic pairs");
  return p;
}

json resolve_empirical(Reader& r, ExperimentConfig& c) {
  check_rough_alpha(c);
  json p;
  const auto n_list = r.counts("n_list", {8, 16, 32, 64, 128});
  for (std::size_t i = 0; i < n_list.size(); ++i) {
    if (n_list[i] < 2 || (i > 0 && n_list[i] <= n_list[i - 1])) {
      throw ConfigError(r.key("n_list"), "must be increasing with entries >= 2");
    }
  }
  p["n_list"] = n_list;
  p["reps"] = r.count("reps", 10);
  p["weight_samples"] = r.count("weight_samples", 4000);
  p["test_size"] = r.count("test_size", 2000);
  p["r"] = r.number("r", 2.0);
  if (!(p["r"].get<double>() >= 1.0)) throw ConfigError(r.key("r"), "must be >= 1");
  p["pairs"] = pairs_choice(r);
  if (n_list.back() + p["test_size"].get<std::size_t>() > 4096) {
    throw ConfigError(r.key("test_size"), "largest n plus test_size must not exceed 4096");
  }
  if (p["pairs"] == "dyadic") require_dyadic(c, "dyadic pairs");
  return p;
}

json resolve_audit(Reader& r, ExperimentConfig& c) {
  json p;
  p["window"] = r.positive("window", c.horizon);
  if (p["window"].get<double>() > c.horizon) throw ConfigError(r.key("window"), "must not exceed grid.T");
  const auto interval = r.numbers("rho_interval", std::vector<double>{0.0, c.horizon});
  if (interval.size() != 2 || !(interval[0] >= 0.0 && interval[0] < interval[1] && interval[1] <= c.horizon)) {
    throw ConfigError(r.key("rho_interval"), "must be [s, t] with 0 <= s < t <= T");
  }
  p["rho_interval"] = interval;
  p["mesh_levels"] = r.count("mesh_levels", 6);
  if (p["mesh_levels"].get<std::size_t>() > 12) throw ConfigError(r.key("mesh_levels"), "must be <= 12");
  const int levels = r.integer("wavelet_levels", 6);
  if (levels < 0) throw ConfigError(r.key("wavelet_levels"), "must be >= 0");
  p["wavelet_levels"] = levels;
  if (c.steps % (std::size_t{1} << (levels + 1)) != 0) {
    throw ConfigError("grid.N", "must be divisible by 2^(wavelet_levels + 1)");
  }
  if (c.n < 2) throw ConfigError("n", "wavelet estimates need n >= 2");
  return p;
}

bool is_rough_check(const std::string& type) {
  return type == "anderson" || type == "cameron_martin" || type == "borell_rough";
}

json resolve_inequalities(Reader& r, ExperimentConfig& c) {
  const auto& list = r.raw("checks");
  const std::string base = r.key("checks");
  if (!list.is_array() || list.empty()) throw ConfigError(base, "must be a nonempty array");
  json checks = json::array();
  bool rough = false;
  for (std::size_t i = 0; i < list.size(); ++i) {
    json check = list[i];
    const std::string key = base + "[" + std::to_string(i) + "]";
    static const std::set<std::string> unseeded{"fixture", "anderson_gaussian", "cameron_martin_gaussian"};
    if (check.is_object() && !(check.contains("type") && check["type"].is_string() &&
                               unseeded.count(check["type"].get<std::string>()))) {
      if (!check.contains("n")) check["n"] = c.n;
      if (!check.contains("seed")) check["seed"] = mix_seed(c.seed, i);
    }
    auto resolved = resolve_check(check, key);
    const auto type = resolved["type"].get<std::string>();
    if (is_rough_check(type)) {
      rough = true;
      if (resolved["pairs"] == "dyadic") require_dyadic(c, "dyadic pairs");
      if (resolved.contains("h") && resolved["h"]["direction"].size() != static_cast<std::size_t>(c.model.d)) {
        throw ConfigError(key + ".h.direction", "must have model.d entries");
      }
      if (type != "borell_rough" && resolved["eps"].empty()) {
        if (c.eps.empty()) throw ConfigError(key + ".eps", "is required when the top-level eps is empty");
        resolved["eps"] = c.eps;
      }
    }
    checks.push_back(resolved);
  }
  if (rough) check_rough_alpha(c);
  return {{"checks", checks}};
}

ModelSpec resolve_model(Reader& r) {
  ModelSpec m;
  m.kind = r.choice("kind", {"brownian", "fbm", "custom"}, "brownian");
  const auto d = r.count("d", 1);
  if (d > 64) throw ConfigError(r.key("d"), "must be <= 64");
  m.d = static_cast<int>(d);
  if (m.kind == "fbm") {
    m.hurst = r.number("hurst");
    if (!(m.hurst > 1.0 / 3.0 && m.hurst <= 0.5)) throw ConfigError(r.key("hurst"), "must lie in (1/3, 1/2]");
  } else if (m.kind == "custom") {
    m.tau = r.numbers("tau");
    m.sigma2 = r.numbers("sigma2");
    m.rho = r.number("rho");
    if (m.tau.size() != m.sigma2.size() || m.tau.size() < 2) {
      throw ConfigError(r.key("sigma2"), "tau and sigma2 must have equal length >= 2");
    }
    if (!(m.rho >= 1.0 && m.rho < 1.5)) throw ConfigError(r.key("rho"), "must lie in [1, 3/2)");
  }
  r.finish();
  return m;
}

json model_json(const ModelSpec& m) {
  json j{{"kind", m.kind}, {"d", m.d}};
  if (m.kind == "fbm") j["hurst"] = m.hurst;
  if (m.kind == "custom") {
    j["tau"] = m.tau;
    j["sigma2"] = m.sigma2;
    j["rho"] = m.rho;
  }
  return j;
}

json h_json(Reader& r) {
  json h;
  h["shape"] = r.choice("shape", {"linear", "sine"}, "linear");
  h["direction"] = r.numbers("direction");
  if (h["direction"].empty()) throw ConfigError(r.key("direction"), "must not be empty");
  r.finish();
  return h;
}

}  // namespace

std::string to_string(ExperimentKind k) {
  switch (k) {
    case ExperimentKind::sbp: return "sbp";
    case ExperimentKind::entropy: return "entropy";
    case ExperimentKind::quantize: return "quantize";
    case ExperimentKind::empirical: return "empirical";
    case ExperimentKind::inequalities: return "inequalities";
    case ExperimentKind::audit: return "audit";
  }
  return "?";
}

ExperimentKind experiment_kind_from_string(const std::string& s) {
  for (auto k : {ExperimentKind::sbp, ExperimentKind::entropy, ExperimentKind::quantize, ExperimentKind::empirical,
                 ExperimentKind::inequalities, ExperimentKind::audit})
    if (to_string(k) == s) return k;
  throw ConfigError("experiment", "must be one of {sbp, entropy, quantize, empirical, inequalities, audit}, got \"" +
                                      s + "\"");
}

json resolve_check(const json& check, const std::string& key) {
  Reader r(check, key);
  json out;
  const auto type = r.choice("type", {"anderson", "cameron_martin", "anderson_gaussian", "cameron_martin_gaussian",
                                      "sidak_level1", "sidak_level2", "third_chaos", "borell_shift", "borell_rough",
                                      "fixture"});
  out["type"] = type;
  if (type != "fixture" && type != "anderson_gaussian" && type != "cameron_martin_gaussian") {
    out["n"] = r.count("n");
    out["seed"] = r.unsigned_integer("seed");
  }
  if (type == "anderson" || type == "cameron_martin") {
    auto h = r.child("h");
    out["h"] = h_json(h);
    out["eps"] = r.positive_numbers("eps", std::vector<double>{});
    out["pairs"] = pairs_choice(r);
    if (type == "cameron_martin") {
      out["corollary_a"] = r.numbers("corollary_a", std::vector<double>{0.0, 0.25, 0.5});
      for (double a : out["corollary_a"])
        if (!(a >= 0.0 && a < 1.0)) throw ConfigError(r.key("corollary_a"), "entries must lie in [0, 1)");
    }
  } else if (type == "anderson_gaussian" || type == "cameron_martin_gaussian") {
    out["shift"] = r.numbers("shift");
    if (out["shift"].empty()) throw ConfigError(r.key("shift"), "must not be empty");
    out["eps"] = r.positive("eps");
  } else if (type == "sidak_level1") {
    const auto cov = r.matrix("cov");
    if (cov.size() != cov.front().size()) throw ConfigError(r.key("cov"), "must be square");
    out["cov"] = matrix_json(cov);
    out["eps"] = r.positive_numbers("eps");
    if (out["eps"].size() != cov.size()) throw ConfigError(r.key("eps"), "needs one entry per coordinate");
    out["method"] = r.choice("method", {"quadrature", "mc"}, cov.size() <= 3 ? "quadrature" : "mc");
    const int d = static_cast<int>(cov.size());
    out["split"] = r.integer("split", std::max(1, d / 2));
    if (d >= 2 && !(out["split"].get<int>() >= 1 && out["split"].get<int>() < d)) {
      throw ConfigError(r.key("split"), "must lie in [1, d)");
    }
  } else if (type == "sidak_level2") {
    const auto cx = r.matrix("cov_x"), cy = r.matrix("cov_y");
    if (cx.size() != cx.front().size()) throw ConfigError(r.key("cov_x"), "must be square");
    if (cy.size() != cy.front().size()) throw ConfigError(r.key("cov_y"), "must be square");
    out["cov_x"] = matrix_json(cx);
    out["cov_y"] = matrix_json(cy);
    const auto& events = r.raw("events");
    if (!events.is_array() || events.empty()) throw ConfigError(r.key("events"), "must be a nonempty array");
    json resolved = json::array();
    for (std::size_t i = 0; i < events.size(); ++i) {
      Reader e(events[i], r.key("events") + "[" + std::to_string(i) + "]");
      json ev;
      ev["kind"] = e.choice("kind", {"linear_x", "linear_y", "bilinear"});
      ev["eps"] = e.positive("eps");
      if (ev["kind"] == "bilinear") {
        const auto form = e.matrix("form");
        if (form.size() != cx.size() || form.front().size() != cy.size()) {
          throw ConfigError(e.key("form"), "must be dim_x x dim_y");
        }
        ev["form"] = matrix_json(form);
      } else {
        ev["coefficients"] = e.numbers("coefficients");
        const auto want = ev["kind"] == "linear_x" ? cx.size() : cy.size();
        if (ev["coefficients"].size() != want) throw ConfigError(e.key("coefficients"), "has the wrong length");
      }
      e.finish();
      resolved.push_back(ev);
    }
    out["events"] = resolved;
  } else if (type == "third_chaos") {
    out["eps"] = r.positive_numbers("eps");
  } else if (type == "borell_shift") {
    out["dim"] = r.count("dim");
    out["set"] = r.choice("set", {"half_space", "box"});
    out["a"] = r.number("a");
    if (out["set"] == "box" && !(out["a"].get<double>() > 0.0)) throw ConfigError(r.key("a"), "must be > 0 for box");
    out["lambda"] = r.number("lambda");
    if (!(out["lambda"].get<double>() >= 0.0)) throw ConfigError(r.key("lambda"), "must be >= 0");
  } else if (type == "borell_rough") {
    out["eps"] = r.positive("eps");
    out["lambda"] = r.number("lambda");
    if (!(out["lambda"].get<double>() >= 0.0)) throw ConfigError(r.key("lambda"), "must be >= 0");
    out["pairs"] = pairs_choice(r);
    out["modes"] = r.counts("modes", {1, 2, 4, 8, 16});
    out["scalings"] = r.positive_numbers("scalings", std::vector<double>{0.25, 0.5, 0.75, 1.0});
  } else if (type == "fixture") {
    out["name"] = r.string("name", "fixture");
    out["claim"] = r.choice("claim", {"at_least", "at_most", "equal"});
    out["lhs"] = r.number("lhs");
    out["rhs"] = r.number("rhs");
    out["lhs_se"] = r.number("lhs_se", 0.0);
    out["rhs_se"] = r.number("rhs_se", 0.0);
    const double pooled = std::hypot(out["lhs_se"].get<double>(), out["rhs_se"].get<double>());
    out["difference_se"] = r.number("difference_se", pooled);
    out["n"] = r.unsigned_integer("n", 0);
    for (const char* k : {"lhs_se", "rhs_se", "difference_se"})
      if (out[k].get<double>() < 0.0) throw ConfigError(r.key(k), "must be >= 0");
  }
  r.finish();
  return out;
}

ExperimentConfig parse_config(const json& j) {
  Reader r(j, "");
  ExperimentConfig c;
  c.experiment = experiment_kind_from_string(r.string("experiment"));
  {
    auto m = r.child("model");
    c.model = resolve_model(m);
  }
  c.alpha = r.number("alpha", 0.4);
  {
    auto g = r.child("grid");
    c.horizon = g.positive("T", 1.0);
    c.steps = g.count("N", 1024);
    if (c.steps > (std::size_t{1} << 16)) throw ConfigError(g.key("N"), "must be <= 65536");
    g.finish();
  }
  c.seed = r.unsigned_integer("seed", 0);
  c.n = r.count("n", 100000);
  c.eps = r.positive_numbers("eps", std::vector<double>{});
  c.norm_variant = r.choice("norm_variant", {"sum", "sup"}, "sum") == "sup" ? NormVariant::sup : NormVariant::sum;
  c.output = r.string("output", "out/" + to_string(c.experiment));
  if (c.output.empty()) throw ConfigError("output", "must not be empty");
  try {
    make_model(c);
  } catch (const InvalidArgument& e) {
    throw ConfigError("model", e.what());
  }
  const std::string block = to_string(c.experiment);
  auto b = r.child(block);
  switch (c.experiment) {
    case ExperimentKind::sbp: c.params = resolve_sbp(b, c); break;
    case ExperimentKind::entropy: c.params = resolve_entropy(b, c); break;
    case ExperimentKind::quantize: c.params = resolve_quantize(b, c); break;
    case ExperimentKind::empirical: c.params = resolve_empirical(b, c); break;
    case ExperimentKind::inequalities: c.params = resolve_inequalities(b, c); break;
    case ExperimentKind::audit: c.params = resolve_audit(b, c); break;
  }
  b.finish();
  std::string declared;
  if (r.has("config_sha256")) declared = r.string("config_sha256");
  r.finish();
  if (!declared.empty() && declared != config_hash(c)) {
    throw ConfigError("config_sha256", "does not match the resolved config");
  }
  return c;
}

ExperimentConfig parse_config_text(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError("<document>", std::string("invalid JSON: ") + e.what());
  }
  return parse_config(j);
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::string text;
  try {
    text = read_file(path);
  } catch (const std::exception& e) {
    throw ConfigError("--config", e.what());
  }
  return parse_config_text(text);
}

json echo(const ExperimentConfig& c) {
  json j;
  j["experiment"] = to_string(c.experiment);
  j["model"] = model_json(c.model);
  j["alpha"] = c.alpha;
  j["grid"] = {{"T", c.horizon}, {"N", c.steps}};
  j["seed"] = c.seed;
  j["n"] = c.n;
  j["eps"] = c.eps;
  j["norm_variant"] = c.norm_variant == NormVariant::sup ? "sup" : "sum";
  j["output"] = c.output;
  j[to_string(c.experiment)] = c.params;
  return j;
}

std::string config_hash(const ExperimentConfig& c) {
  auto j = echo(c);
  j.erase("output");
  return sha256_hex(j.dump());
}

CovarianceModel make_model(const ExperimentConfig& c) {
  const auto& m = c.model;
  if (m.kind == "fbm") return CovarianceModel::fbm(m.hurst, m.d, c.horizon);
  if (m.kind == "custom") return CovarianceModel::custom(m.tau, m.sigma2, m.rho, m.d, c.horizon);
  return CovarianceModel::brownian(m.d, c.horizon);
}

std::vector<double> make_grid(const ExperimentConfig& c) { return uniform_grid(c.horizon, c.steps); }

}  // namespace roughball
