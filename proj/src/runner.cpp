#include "roughball/runner.hpp"

#include <cmath>
#include <memory>

#include "roughball/error.hpp"
#include "roughball/inequalities.hpp"
#include "roughball/io.hpp"
#include "roughball/quant.hpp"
#include "roughball/rng.hpp"
#include "roughball/sbp.hpp"

namespace roughball {

using nlohmann::json;

namespace {

struct Context {
  const ExperimentConfig& config;
  const RunOptions& options;
  std::string hash;
  CovarianceModel model;
  std::vector<double> times;
  RunResult result;

  void emit(const std::string& name, std::string content) { result.files[name] = std::move(content); }

  void emit_json(const std::string& name, json body) {
    json doc{{"config_sha256", hash}};
    doc.update(body);
    emit(name, doc.dump(2) + "\n");
  }

  CsvWriter csv(std::vector<std::string> header) const { return CsvWriter(std::move(header), hash); }

  Metric metric(const std::string& pairs) const {
    return Metric{config.alpha, pair_set_from_string(pairs), config.norm_variant};
  }

  NormSpec rough_spec(const std::string& pairs) const {
    NormSpec s;
    s.alpha = config.alpha;
    s.kind = pairs == "all" ? NormKind::rough_holder_allpairs : NormKind::rough_holder_dyadic;
    s.variant = config.norm_variant;
    return s;
  }

  int threads() const { return options.threads; }
};

json number_or_null(double x) { return std::isfinite(x) ? json(x) : json(nullptr); }

std::vector<double> sorted_norms(Context& ctx, const NormSpec& spec) {
  const auto m = sample_norms(ctx.model, ctx.times, {spec}, ctx.config.n, ctx.config.seed, ctx.threads());
  std::vector<double> v(m.data(), m.data() + m.rows());
  std::sort(v.begin(), v.end());
  return v;
}

SBPCurve curve_for(Context& ctx, const NormSpec& spec, const json& levels) {
  auto norms = sorted_norms(ctx, spec);
  const auto eps = ctx.config.eps.empty() ? quantile_eps(norms, levels.get<std::vector<double>>()) : ctx.config.eps;
  return curve_from_norms(std::move(norms), eps, spec, ctx.model.describe(), ctx.config.seed);
}

std::string curve_csv(const Context& ctx, const SBPCurve& c) {
  auto w = ctx.csv({"eps", "p_hat", "ci_low", "ci_high", "n", "norm_kind", "alpha", "model", "seed"});
  for (std::size_t i = 0; i < c.eps.size(); ++i) {
    w.cell(c.eps[i]).cell(c.p_hat[i]).cell(c.ci_low[i]).cell(c.ci_high[i]).cell(c.n_samples);
    w.cell(to_string(c.norm_kind)).cell(c.alpha).cell(c.model).cell(static_cast<unsigned long long>(c.seed));
    w.end_row();
  }
  return w.str();
}

void run_sbp(Context& ctx) {
  const auto& p = ctx.config.params;
  NormSpec spec;
  spec.alpha = ctx.config.alpha;
  spec.kind = norm_kind_from_string(p["norm_kind"]);
  spec.path_pairs = pair_set_from_string(p["path_pairs"]);
  spec.lemma_eps = p["lemma_eps"];
  spec.variant = ctx.config.norm_variant;
  const auto curve = curve_for(ctx, spec, p["eps_quantiles"]);
  ctx.emit("curve.csv", curve_csv(ctx, curve));

  double lo = 0.0, hi = std::numeric_limits<double>::infinity();
  if (!p["fit_window"].is_null()) {
    lo = p["fit_window"][0];
    hi = p["fit_window"][1];
  }
  const double predicted =
      spec.kind == NormKind::path_holder ? std::numeric_limits<double>::quiet_NaN()
                                         : predicted_sbp_index(ctx.model.rho(), spec.alpha);
  json fit{{"predicted_index", number_or_null(predicted)},
           {"rho", ctx.model.rho()},
           {"alpha", spec.alpha},
           {"norm_kind", to_string(spec.kind)},
           {"raw_monotone_violations", curve.raw_monotone_violations}};
  try {
    const auto f = fit_variation_index(curve, lo, hi);
    fit["index"] = f.index;
    fit["window"] = {f.eps_min, f.eps_max};
    fit["r2"] = f.r2;
    fit["resolution_floor"] = f.resolution_floor;
    fit["points"] = f.points;
    fit["log_slope"] = f.log_slope;
    fit["local_slope_trend"] = f.local_slope_trend;
    fit["slowly_varying_flag"] = f.slowly_varying_flag;
    ctx.result.summary.push_back("fitted index " + format_number(f.index) + " (predicted asymptotic " +
                                 format_number(predicted) + ") over " + std::to_string(f.points) + " points");
  } catch (const NumericalError& e) {
    fit["index"] = nullptr;
    fit["error"] = e.what();
    ctx.result.summary.push_back(std::string("index fit unavailable: ") + e.what());
  }
  ctx.emit_json("fit.json", fit);
}

void run_entropy(Context& ctx) {
  const auto& p = ctx.config.params;
  const double eta = p["eta"];
  const auto metric = ctx.metric(p["pairs"]);
  const auto mesh = cameron_martin_mesh(ctx.model, ctx.times, eta, p["mesh_size"]);
  std::vector<double> radii = ctx.config.eps;
  for (double e : ctx.config.eps) radii.push_back(2.0 * e);
  const auto covers = greedy_cover(mesh.lifts, metric, radii, ctx.threads());
  const auto spec = ctx.rough_spec(p["pairs"]);
  auto norms = sorted_norms(ctx, spec);
  const auto curve = curve_from_norms(std::move(norms), ctx.config.eps, spec, ctx.model.describe(), ctx.config.seed);

  auto w = ctx.csv({"eps", "eta", "mesh_size", "cover_eps", "certificate_eps", "cover_2eps", "certificate_2eps",
                    "log_cover_eps", "log_cover_2eps", "sbp_eps", "sbp_2eps", "upper_h_2eps", "lower_h_eps", "note"});
  const std::size_t k = ctx.config.eps.size();
  for (std::size_t i = 0; i < k; ++i) {
    const auto& a = covers[i];
    const auto& b = covers[i + k];
    EntropyBounds bounds;
    std::string note;
    try {
      bounds = entropy_bounds_from_sbp(curve, eta, ctx.config.eps[i]);
    } catch (const NumericalError& e) {
      const double nan = std::numeric_limits<double>::quiet_NaN();
      bounds.sbp_eps = bounds.sbp_2eps = bounds.upper = bounds.lower = nan;
      note = e.what();
    }
    w.cell(ctx.config.eps[i]).cell(eta).cell(mesh.lifts.size()).cell(a.count).cell(a.certificate);
    w.cell(b.count).cell(b.certificate).cell(std::log(static_cast<double>(a.count)));
    w.cell(std::log(static_cast<double>(b.count))).cell(bounds.sbp_eps).cell(bounds.sbp_2eps);
    w.cell(bounds.upper).cell(bounds.lower).cell(note);
    w.end_row();
  }
  ctx.emit("entropy.csv", w.str());
  ctx.emit("curve.csv", curve_csv(ctx, curve));
  ctx.result.summary.push_back("mesh of " + std::to_string(mesh.lifts.size()) + " points covered at " +
                               std::to_string(k) + " radii");
}

void run_quantize(Context& ctx) {
  const auto& p = ctx.config.params;
  const auto metric = ctx.metric(p["pairs"]);
  const double r = p["r"];
  const auto curve = curve_for(ctx, ctx.rough_spec(p["pairs"]), p["eps_quantiles"]);
  ctx.emit("curve.csv", curve_csv(ctx, curve));
  const auto& seed = ctx.config.seed;
  const auto train = sample_lifted_paths(ctx.model, ctx.times, p["train"], stream_seed(seed, Stream::training),
                                         ctx.threads());
  const auto test = sample_lifted_paths(ctx.model, ctx.times, p["test"], stream_seed(seed, Stream::testing),
                                        ctx.threads());
  auto w = ctx.csv({"n", "r", "distortion", "iterations", "e_hat", "se", "lower_bound", "proven_bound", "holds",
                    "note"});
  for (const auto& entry : p["n_list"]) {
    const std::size_t n = entry;
    LloydOptions opt;
    opt.n = n;
    opt.r = r;
    opt.init = p["init"] == "random" ? LloydInit::random : LloydInit::kmeanspp;
    opt.update = p["update"] == "mean" ? CenterUpdate::mean : CenterUpdate::medoid;
    opt.seed = stream_seed(seed, Stream::init, n);
    opt.max_iter = p["max_iter"];
    opt.tol = p["tol"];
    opt.medoid_candidates = p["medoid_candidates"];
    opt.threads = ctx.threads();
    const auto book = lloyd_codebook(train, metric, opt);
    QuantizationError q;
    std::string note;
    try {
      q = quantization_error(book.centers, n, test, r, metric, curve, ctx.threads());
      if (!q.holds) ctx.result.failures.push_back("quantization lower bound fails for n = " + std::to_string(n));
    } catch (const NumericalError& e) {
      // e_hat is still meaningful without the bound
      const double nan = std::numeric_limits<double>::quiet_NaN();
      std::vector<double> v(test.size());
      for (std::size_t i = 0; i < test.size(); ++i) {
        double d = 0.0;
        nearest_atom(test[i], book.centers, metric, &d);
        v[i] = std::pow(d, r);
      }
      double mean = 0.0;
      for (double x : v) mean += x;
      q.e_hat = std::pow(mean / static_cast<double>(v.size()), 1.0 / r);
      q.se = q.lower_bound = q.proven_bound = nan;
      note = e.what();
    }
    w.cell(n).cell(r).cell(book.distortion).cell(book.iterations).cell(q.e_hat).cell(q.se);
    w.cell(q.lower_bound).cell(q.proven_bound).cell(note.empty() ? q.holds : false).cell(note);
    w.end_row();
    ctx.result.summary.push_back("n = " + std::to_string(n) + ": e_hat " + format_number(q.e_hat) +
                                 ", lower bound " + format_number(q.lower_bound));
    if (p["write_codebooks"].get<bool>()) {
      json centers = json::array();
      for (const auto& c : book.centers) centers.push_back(to_json(c));
      ctx.emit_json("codebook_n" + std::to_string(n) + ".json",
                    {{"n", n}, {"r", r}, {"distortion", book.distortion}, {"centers", centers}});
    }
  }
  ctx.emit("quantization.csv", w.str());
}

void run_empirical(Context& ctx) {
  const auto& p = ctx.config.params;
  RateOptions opt;
  opt.times = ctx.times;
  opt.r = p["r"];
  opt.n_list = p["n_list"].get<std::vector<std::size_t>>();
  opt.reps = p["reps"];
  opt.weight_samples = p["weight_samples"];
  opt.test_size = p["test_size"];
  opt.threads = ctx.threads();
  const auto table = empirical_rate_experiment(ctx.model, ctx.metric(p["pairs"]), opt, ctx.config.seed);
  auto w = ctx.csv({"n", "rep", "W_weighted", "W_uniform", "prediction", "seed", "W_weighted_se", "W_voronoi",
                    "dominated"});
  for (const auto& row : table.rows) {
    w.cell(row.n).cell(row.rep).cell(row.w_weighted).cell(row.w_uniform).cell(row.prediction);
    w.cell(static_cast<unsigned long long>(row.seed)).cell(row.w_weighted_se).cell(row.w_voronoi).cell(row.dominated);
    w.end_row();
    if (!row.dominated) {
      ctx.result.failures.push_back("weighted measure not dominated at n = " + std::to_string(row.n) +
                                    ", rep " + std::to_string(row.rep));
    }
  }
  ctx.emit("rates.csv", w.str());
  ctx.emit_json("summary.json", {{"slope_weighted", table.slope_weighted},
                                 {"slope_uniform", table.slope_uniform},
                                 {"domination_failures", table.domination_failures},
                                 {"cells", table.rows.size()}});
  ctx.result.summary.push_back("slopes of log W against log log n: weighted " + format_number(table.slope_weighted) +
                               ", uniform " + format_number(table.slope_uniform));
}

Eigen::MatrixXd to_matrix(const json& rows) {
  Eigen::MatrixXd m(rows.size(), rows[0].size());
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t j = 0; j < rows[i].size(); ++j)
      m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j].get<double>();
  return m;
}

Eigen::VectorXd to_vector(const json& v) {
  const auto x = v.get<std::vector<double>>();
  return Eigen::Map<const Eigen::VectorXd>(x.data(), static_cast<Eigen::Index>(x.size()));
}

CMPath shift_path(const Context& ctx, const json& h) {
  const auto dir = to_vector(h["direction"]);
  Eigen::MatrixXd values(ctx.times.size(), dir.size());
  const double t_end = ctx.times.back();
  for (std::size_t k = 0; k < ctx.times.size(); ++k) {
    const double s = ctx.times[k] / t_end;
    const double f = h["shape"] == "sine" ? std::sin(M_PI * s) : s;
    values.row(static_cast<Eigen::Index>(k)) = f * dir.transpose();
  }
  return CMPath(ctx.times, values);
}

void run_inequalities(Context& ctx) {
  std::vector<InequalityReport> reports;
  std::vector<std::size_t> owner;
  std::vector<ThirdChaosRow> chaos;
  const auto& checks = ctx.config.params["checks"];
  for (std::size_t k = 0; k < checks.size(); ++k) {
    const auto& c = checks[k];
    const std::string type = c["type"];
    std::vector<InequalityReport> out;
    auto path_options = [&] {
      PathCheckOptions o;
      o.pairs = pair_set_from_string(c["pairs"]);
      o.variant = ctx.config.norm_variant;
      o.threads = ctx.threads();
      return o;
    };
    if (type == "anderson") {
      out = check_anderson(ctx.model, ctx.config.alpha, shift_path(ctx, c["h"]), c["eps"], c["n"], c["seed"],
                           path_options());
    } else if (type == "cameron_martin") {
      out = check_cameron_martin(ctx.model, ctx.config.alpha, shift_path(ctx, c["h"]), c["eps"], c["n"], c["seed"],
                                 c["corollary_a"], path_options());
    } else if (type == "anderson_gaussian") {
      out = {check_anderson_gaussian(to_vector(c["shift"]), c["eps"])};
    } else if (type == "cameron_martin_gaussian") {
      out = {check_cameron_martin_gaussian(to_vector(c["shift"]), c["eps"])};
    } else if (type == "sidak_level1") {
      const auto method = c["method"] == "mc" ? SidakMethod::mc : SidakMethod::quadrature;
      const auto r = check_sidak_level1(to_matrix(c["cov"]), to_vector(c["eps"]), method, c["n"], c["seed"],
                                        c["split"], ctx.threads());
      out = {r.product, r.split};
    } else if (type == "sidak_level2") {
      std::vector<ChaosEvent> events;
      for (const auto& e : c["events"]) {
        ChaosEvent ev;
        ev.eps = e["eps"];
        if (e["kind"] == "bilinear") {
          ev.kind = ChaosEvent::Kind::bilinear;
          ev.form = to_matrix(e["form"]);
        } else {
          ev.kind = e["kind"] == "linear_x" ? ChaosEvent::Kind::linear_x : ChaosEvent::Kind::linear_y;
          ev.coefficients = to_vector(e["coefficients"]);
        }
        events.push_back(ev);
      }
      out = {check_sidak_level2(to_matrix(c["cov_x"]), to_matrix(c["cov_y"]), events, c["n"], c["seed"],
                                ctx.threads())};
    } else if (type == "third_chaos") {
      for (const auto& row : explore_third_chaos(c["eps"], c["n"], c["seed"])) chaos.push_back(row);
    } else if (type == "borell_shift") {
      const auto set = c["set"] == "box" ? BorellSet::box : BorellSet::half_space;
      out = {check_borell_shift(c["dim"], set, c["a"], c["lambda"], c["n"], c["seed"])};
    } else if (type == "borell_rough") {
      RoughBorellOptions o;
      o.path = path_options();
      o.modes = c["modes"].get<std::vector<int>>();
      o.scalings = c["scalings"].get<std::vector<double>>();
      out = {check_borell_rough(ctx.model, ctx.times, ctx.config.alpha, c["eps"], c["lambda"], c["n"], c["seed"], o)};
    } else if (type == "fixture") {
      const auto claim = c["claim"] == "at_most" ? Claim::at_most : c["claim"] == "equal" ? Claim::equal
                                                                                          : Claim::at_least;
      Estimate lhs{c["lhs"], c["lhs_se"], c["lhs"], c["lhs"]};
      Estimate rhs{c["rhs"], c["rhs_se"], c["rhs"], c["rhs"]};
      out = {make_report(c["name"], claim, lhs, rhs, c["difference_se"], c["n"])};
    }
    for (auto& r : out) {
      reports.push_back(std::move(r));
      owner.push_back(k);
    }
  }

  auto w = ctx.csv({"check", "type", "name", "claim", "lhs", "lhs_se", "rhs", "rhs_se", "difference_se", "margin",
                    "verdict", "n"});
  json list = json::array();
  std::size_t counts[4] = {0, 0, 0, 0};
  for (std::size_t i = 0; i < reports.size(); ++i) {
    const auto& r = reports[i];
    const char* claim = r.claim == Claim::at_least ? ">=" : r.claim == Claim::at_most ? "<=" : "==";
    w.cell(owner[i]).cell(checks[owner[i]]["type"].get<std::string>()).cell(r.name).cell(claim);
    w.cell(r.lhs.value).cell(r.lhs.se).cell(r.rhs.value).cell(r.rhs.se).cell(r.difference_se).cell(r.margin);
    w.cell(to_string(r.verdict)).cell(r.n);
    w.end_row();
    auto j = to_json(r);
    j["check"] = owner[i];
    list.push_back(j);
    ++counts[static_cast<int>(r.verdict)];
    if (r.verdict == Verdict::violated) ctx.result.failures.push_back("violated: " + r.name);
  }
  ctx.emit("checks.csv", w.str());
  ctx.emit_json("reports.json", {{"reports", list}});
  if (!chaos.empty()) {
    auto t = ctx.csv({"eps", "p_repeated", "p_independent", "difference_se"});
    for (const auto& row : chaos) {
      t.cell(row.eps).cell(row.p_repeated).cell(row.p_independent).cell(row.difference_se);
      t.end_row();
    }
    ctx.emit("third_chaos.csv", t.str());
  }
  ctx.result.summary.push_back(std::to_string(reports.size()) + " verdicts: " + std::to_string(counts[0]) +
                               " holds, " + std::to_string(counts[1]) + " within noise, " +
                               std::to_string(counts[2]) + " violated, " + std::to_string(counts[3]) +
                               " inconclusive");
}

void run_audit(Context& ctx) {
  const auto& p = ctx.config.params;
  const auto rho = rho_variation_audit(ctx.model, p["rho_interval"][0], p["rho_interval"][1], p["mesh_levels"]);
  const auto sigma = sigma_conditions_audit(ctx.model, p["window"]);
  const int levels = p["wavelet_levels"];
  const auto wavelets = estimate_wavelet_variances(ctx.model, ctx.times, levels, ctx.config.n,
                                                   stream_seed(ctx.config.seed, Stream::paths), ctx.threads());
  auto w = ctx.csv({"level", "exact", "mc", "se", "z", "within_4se"});
  for (const auto& e : wavelets) {
    const bool ok = std::abs(e.z) <= 4.0;
    w.cell(e.level).cell(e.exact).cell(e.mc).cell(e.se).cell(e.z).cell(ok);
    w.end_row();
    if (!ok) ctx.result.failures.push_back("wavelet variance off at level " + std::to_string(e.level));
  }
  ctx.emit("wavelet.csv", w.str());
  const PathSampler sampler(ctx.model, ctx.times);
  ctx.emit_json(
      "audit.json",
      {{"model", ctx.model.describe()},
       {"rho", ctx.model.rho()},
       {"sampler", {{"backend", to_string(sampler.backend())}, {"fallback_note", sampler.fallback_note()}}},
       {"rho_variation",
        {{"interval", {rho.interval_start, rho.interval_end}},
         {"by_level", rho.by_level},
         {"estimate", rho.estimate},
         {"fitted_m", rho.fitted_m},
         {"sampled_intervals", rho.sampled_intervals}}},
       {"sigma_conditions",
        {{"window", sigma.window},
         {"c1", sigma.c1},
         {"c2", sigma.c2},
         {"doubling_constant", sigma.doubling_constant},
         {"doubling_pass", sigma.doubling_pass},
         {"envelope_ratio", sigma.envelope_ratio},
         {"envelope_pass", sigma.envelope_pass},
         {"c3", number_or_null(sigma.c3)},
         {"curvature", sigma.curvature},
         {"curvature_note", sigma.curvature_note},
         {"all_pass", sigma.all_pass}}}});
  ctx.result.summary.push_back("rho-variation estimate " + format_number(rho.estimate) + ", sigma conditions " +
                               (sigma.all_pass ? "pass" : "fail"));
}

template <class E>
[[noreturn]] void rethrow_with(const std::string& prefix, const E& e) {
  throw E(prefix + e.what());
}

}  // namespace

RunResult run_experiment(const ExperimentConfig& config, const RunOptions& options) {
  Context ctx{config, options, config_hash(config), make_model(config), make_grid(config), {}};
  const std::string prefix = to_string(config.experiment) + ": ";
  try {
    switch (config.experiment) {
      case ExperimentKind::sbp: run_sbp(ctx); break;
      case ExperimentKind::entropy: run_entropy(ctx); break;
      case ExperimentKind::quantize: run_quantize(ctx); break;
      case ExperimentKind::empirical: run_empirical(ctx); break;
      case ExperimentKind::inequalities: run_inequalities(ctx); break;
      case ExperimentKind::audit: run_audit(ctx); break;
    }
  } catch (const InvalidArgument& e) {
    rethrow_with(prefix, e);
  } catch (const NumericalError& e) {
    rethrow_with(prefix, e);
  } catch (const json::exception& e) {
    throw InvalidArgument(prefix + "malformed resolved config: " + e.what());
  }

  auto resolved = echo(config);
  resolved["config_sha256"] = ctx.hash;
  ctx.emit("config.json", resolved.dump(2) + "\n");

  auto& result = ctx.result;
  result.directory = options.out.empty() ? std::filesystem::path(config.output) : options.out;
  json files = json::array();
  for (const auto& [name, content] : result.files) {
    write_atomic(result.directory / name, content);
    files.push_back({{"path", name}, {"sha256", sha256_hex(content)}, {"bytes", content.size()}});
  }
  result.manifest = {{"experiment", to_string(config.experiment)},
                     {"config_sha256", ctx.hash},
                     {"files", files},
                     {"failures", result.failures}};
  const std::string text = result.manifest.dump(2) + "\n";
  result.manifest_sha256 = sha256_hex(text);
  write_atomic(result.directory / "manifest.json", text);
  return result;
}

}  // namespace roughball
