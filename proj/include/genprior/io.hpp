#pragma once

#include <cstdint>
#include <cstdio>
#include <initializer_list>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "genprior/analysis.hpp"
#include "genprior/experiment.hpp"
#include "genprior/genmodel.hpp"
#include "genprior/measurement.hpp"
#include "genprior/projection.hpp"
#include "genprior/sensing.hpp"
#include "genprior/solvers.hpp"

namespace genprior {

using Json = nlohmann::json;

/// Invalid configuration value. `key` names the offending field so callers
/// can point at its location in the source text.
class config_error : public std::invalid_argument {
 public:
  config_error(std::string key, const std::string& message)
      : std::invalid_argument(key.empty() ? message : key + ": " + message), key_(std::move(key)) {}
  const std::string& key() const { return key_; }

 private:
  std::string key_;
};

/// Shortest round-trip representation, so CSV output is byte-stable.
inline std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

namespace detail {

inline void allow_keys(const Json& j, const char* where, std::initializer_list<const char*> keys) {
  if (!j.is_object()) throw config_error(where, "expected a JSON object");
  for (auto it = j.begin(); it != j.end(); ++it) {
    bool known = false;
    for (const char* k : keys) known = known || it.key() == k;
    if (!known) throw config_error(it.key(), std::string("unknown key in ") + where);
  }
}

template <class T>
T get_or(const Json& j, const char* key, T fallback) {
  if (!j.contains(key)) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const nlohmann::json::exception& e) {
    throw config_error(key, std::string("wrong type (") + e.what() + ")");
  }
}

template <class T>
T get_required(const Json& j, const char* key) {
  if (!j.contains(key)) throw config_error(key, "required key missing");
  return get_or<T>(j, key, T{});
}

template <class Enum, std::size_t N>
Enum parse_enum(const Json& j, const char* key, Enum fallback, const std::pair<const char*, Enum> (&table)[N]) {
  if (!j.contains(key)) return fallback;
  const auto s = get_or<std::string>(j, key, "");
  for (const auto& [name, value] : table)
    if (s == name) return value;
  std::string options;
  for (const auto& [name, value] : table) options += std::string(options.empty() ? "" : ", ") + name;
  throw config_error(key, "unknown value '" + s + "' (expected one of " + options + ")");
}

}  // namespace detail

// ---- decoder ---------------------------------------------------------------

inline Json to_json(const DecoderSpec& s) {
  return Json{{"k", s.latent_dim},         {"p", s.ambient_dim},       {"r", s.latent_radius},
              {"activation", to_string(s.activation)}, {"seed", s.seed}, {"layer_dims", s.layer_dims()},
              {"weight_scale", s.weight_scale}, {"init", to_string(s.init)}};
}

inline DecoderSpec decoder_spec_from_json(const Json& j, std::uint64_t default_seed = 0) {
  using namespace detail;
  allow_keys(j, "decoder", {"k", "p", "r", "activation", "seed", "layer_dims", "hidden", "weight_scale", "init",
                            "lipschitz_bound"});
  static const std::pair<const char*, Activation> acts[] = {
      {"tanh", Activation::tanh}, {"relu", Activation::relu}, {"identity", Activation::identity}};
  static const std::pair<const char*, WeightInit> inits[] = {
      {"gaussian", WeightInit::gaussian}, {"orthonormal", WeightInit::orthonormal}, {"identity", WeightInit::identity}};
  DecoderSpec s;
  s.seed = get_or<std::uint64_t>(j, "seed", default_seed);
  s.latent_radius = get_or<double>(j, "r", 3.0);
  s.activation = parse_enum(j, "activation", Activation::tanh, acts);
  s.weight_scale = get_or<double>(j, "weight_scale", 1.0);
  s.init = parse_enum(j, "init", WeightInit::gaussian, inits);
  if (j.contains("layer_dims")) {
    const auto dims = get_or<std::vector<int>>(j, "layer_dims", {});
    if (dims.size() < 2) throw config_error("layer_dims", "needs at least input and output dimensions");
    s.latent_dim = dims.front();
    s.ambient_dim = dims.back();
    s.hidden_dims.assign(dims.begin() + 1, dims.end() - 1);
    if (j.contains("k") && get_or<int>(j, "k", 0) != s.latent_dim) throw config_error("k", "disagrees with layer_dims");
    if (j.contains("p") && get_or<int>(j, "p", 0) != s.ambient_dim) throw config_error("p", "disagrees with layer_dims");
  } else {
    s.latent_dim = get_required<int>(j, "k");
    s.ambient_dim = get_required<int>(j, "p");
    s.hidden_dims = get_or<std::vector<int>>(j, "hidden", {});
  }
  if (s.latent_dim < 1) throw config_error("k", "must be positive");
  if (s.ambient_dim < s.latent_dim) throw config_error("p", "must be >= k");
  if (!(s.latent_radius > 0.0)) throw config_error("r", "must be positive");
  if (!(s.weight_scale > 0.0)) throw config_error("weight_scale", "must be positive");
  for (int h : s.hidden_dims)
    if (h < 1) throw config_error(j.contains("layer_dims") ? "layer_dims" : "hidden", "dimensions must be positive");
  return s;
}

inline Json describe(const GenerativeDecoder& d) {
  Json j = d.spec() ? to_json(*d.spec()) : Json::object();
  j["lipschitz_bound"] = d.lipschitz_bound();
  return j;
}

// ---- sensing ---------------------------------------------------------------

inline Json to_json(const SensingSpec& s) {
  return Json{{"kind", to_string(s.kind)}, {"n", s.n}, {"p", s.p}, {"seed", s.seed}};
}

inline SensingKind sensing_kind_from_json(const Json& j) {
  static const std::pair<const char*, SensingKind> kinds[] = {{"dense_gaussian", SensingKind::dense_gaussian},
                                                              {"partial_circulant", SensingKind::partial_circulant}};
  return detail::parse_enum(j, "kind", SensingKind::dense_gaussian, kinds);
}

inline SensingSpec sensing_spec_from_json(const Json& j) {
  using namespace detail;
  allow_keys(j, "sensing", {"kind", "n", "p", "seed"});
  SensingSpec s;
  s.kind = sensing_kind_from_json(j);
  s.n = get_required<int>(j, "n");
  s.p = get_required<int>(j, "p");
  s.seed = get_or<std::uint64_t>(j, "seed", 0);
  return s;
}

// ---- link ------------------------------------------------------------------

inline Json to_json(const LinkModel& l) {
  Json j{{"kind", to_string(l.kind())}, {"tau", l.tau()}};
  if (l.kind() == LinkKind::sign_dithered) j["sigma_d"] = l.sigma_d();
  if (l.differentiable()) j["sigma"] = l.noise_sigma();
  return j;
}

inline LinkModel link_from_json(const Json& j) {
  using namespace detail;
  allow_keys(j, "link", {"kind", "sigma_d", "sigma", "tau"});
  static const std::pair<const char*, LinkKind> kinds[] = {{"linear", LinkKind::linear},
                                                           {"shifted_cosine", LinkKind::shifted_cosine},
                                                           {"sign_dithered", LinkKind::sign_dithered}};
  const LinkKind kind = parse_enum(j, "kind", LinkKind::linear, kinds);
  const double sigma_d = get_or<double>(j, "sigma_d", 0.0);
  const double sigma = get_or<double>(j, "sigma", 0.0);
  const double tau = get_or<double>(j, "tau", 0.0);
  if (sigma_d < 0.0) throw config_error("sigma_d", "must be nonnegative");
  if (sigma < 0.0) throw config_error("sigma", "must be nonnegative");
  if (tau < 0.0) throw config_error("tau", "must be nonnegative");
  if (kind != LinkKind::sign_dithered && j.contains("sigma_d"))
    throw config_error("sigma_d", "only valid for sign_dithered links");
  LinkModel link = kind == LinkKind::linear           ? LinkModel::linear()
                   : kind == LinkKind::shifted_cosine ? LinkModel::shifted_cosine()
                                                      : LinkModel::sign_dithered(sigma_d);
  return link.with_noise(sigma).with_tau(tau);
}

// ---- projection / solver ---------------------------------------------------

inline Json to_json(const ProjectionConfig& c) {
  return Json{{"steps", c.steps},
              {"lr", c.learning_rate},
              {"restarts", c.restarts},
              {"optimizer", to_string(c.optimizer.kind)},
              {"momentum", c.optimizer.momentum},
              {"beta1", c.optimizer.beta1},
              {"beta2", c.optimizer.beta2},
              {"epsilon", c.optimizer.epsilon},
              {"init", to_string(c.init)},
              {"ball_handling", to_string(c.ball_handling)},
              {"method", to_string(c.method)}};
}

inline ProjectionConfig projection_from_json(const Json& j) {
  using namespace detail;
  allow_keys(j, "projection", {"steps", "lr", "restarts", "optimizer", "momentum", "beta1", "beta2", "epsilon", "init",
                               "ball_handling", "method", "preset"});
  static const std::pair<const char*, OptimizerKind> opts[] = {{"gradient_descent", OptimizerKind::gradient_descent},
                                                               {"momentum", OptimizerKind::momentum},
                                                               {"adam", OptimizerKind::adam}};
  static const std::pair<const char*, LatentInit> inits[] = {
      {"zero", LatentInit::zero}, {"gaussian", LatentInit::gaussian}, {"warm_start", LatentInit::warm_start}};
  static const std::pair<const char*, BallHandling> balls[] = {{"project_each_step", BallHandling::project_each_step},
                                                               {"project_at_end", BallHandling::project_at_end}};
  static const std::pair<const char*, ProjectionMethod> methods[] = {
      {"latent_descent", ProjectionMethod::latent_descent}, {"exact_linear", ProjectionMethod::exact_linear}};
  ProjectionConfig c;
  if (j.contains("preset")) {
    const auto preset = get_or<std::string>(j, "preset", "");
    if (preset == "small_decoder") c = ProjectionConfig::small_decoder_preset();
    else if (preset == "large_decoder") c = ProjectionConfig::large_decoder_preset();
    else throw config_error("preset", "unknown value '" + preset + "' (expected small_decoder or large_decoder)");
  }
  c.steps = get_or<int>(j, "steps", c.steps);
  c.learning_rate = get_or<double>(j, "lr", c.learning_rate);
  c.restarts = get_or<int>(j, "restarts", c.restarts);
  c.optimizer.kind = parse_enum(j, "optimizer", c.optimizer.kind, opts);
  c.optimizer.momentum = get_or<double>(j, "momentum", c.optimizer.momentum);
  c.optimizer.beta1 = get_or<double>(j, "beta1", c.optimizer.beta1);
  c.optimizer.beta2 = get_or<double>(j, "beta2", c.optimizer.beta2);
  c.optimizer.epsilon = get_or<double>(j, "epsilon", c.optimizer.epsilon);
  c.init = parse_enum(j, "init", c.init, inits);
  c.ball_handling = parse_enum(j, "ball_handling", c.ball_handling, balls);
  c.method = parse_enum(j, "method", c.method, methods);
  if (c.steps < 1) throw config_error("steps", "must be >= 1");
  if (!(c.learning_rate > 0.0)) throw config_error("lr", "must be positive");
  if (c.restarts < 1) throw config_error("restarts", "must be >= 1");
  try {
    c.validate();
  } catch (const std::invalid_argument& e) {
    throw config_error("projection", e.what());
  }
  return c;
}

inline SolverKind solver_kind_from_json(const Json& j) {
  static const std::pair<const char*, SolverKind> kinds[] = {
      {"pgd_glasso", SolverKind::pgd_glasso}, {"pgd_nlasso", SolverKind::pgd_nlasso}, {"csgm", SolverKind::csgm}};
  return detail::parse_enum(j, "method", SolverKind::pgd_glasso, kinds);
}

inline SolverConfig solver_config_from_json(const Json& j, SolverKind kind) {
  using namespace detail;
  allow_keys(j, "solver", {"method", "step_size", "iterations", "x0", "projection", "warm_start", "record_trajectory"});
  static const std::pair<const char*, InitialPoint> x0s[] = {{"zero", InitialPoint::zero},
                                                             {"gaussian", InitialPoint::gaussian},
                                                             {"random_range_point", InitialPoint::random_range_point}};
  SolverConfig c = kind == SolverKind::pgd_nlasso ? SolverConfig::nlasso_replication_defaults()
                                                  : SolverConfig::glasso_defaults();
  c.step_size = get_or<double>(j, "step_size", c.step_size);
  c.iterations = get_or<int>(j, "iterations", c.iterations);
  c.x0_mode = parse_enum(j, "x0", c.x0_mode, x0s);
  c.warm_start_projection = get_or<bool>(j, "warm_start", c.warm_start_projection);
  c.record_trajectory = get_or<bool>(j, "record_trajectory", c.record_trajectory);
  if (j.contains("projection")) c.projection = projection_from_json(j.at("projection"));
  if (!(c.step_size > 0.0)) throw config_error("step_size", "must be positive");
  if (c.iterations < 1) throw config_error("iterations", "must be >= 1");
  return c;
}

inline Json to_json(const SolverConfig& c, SolverKind kind) {
  return Json{{"method", to_string(kind)},       {"step_size", c.step_size},
              {"iterations", c.iterations},      {"x0", to_string(c.x0_mode)},
              {"warm_start", c.warm_start_projection}, {"projection", to_json(c.projection)}};
}

// ---- reports ---------------------------------------------------------------

inline Json to_json(const CheckReport& r) {
  Json params = Json::object();
  for (const auto& [k, v] : r.params) params[k] = v;
  return Json{{"name", r.name},
              {"trials", r.trials},
              {"violations", r.violations},
              {"allowed_violations", r.allowed_violations},
              {"worst_margin", r.worst_margin},
              {"min_slack", r.trials > 0 ? Json(r.min_slack) : Json(nullptr)},
              {"params", params},
              {"passed", r.passed}};
}

inline std::string check_report_csv(const std::vector<CheckReport>& reports) {
  std::ostringstream os;
  os << "name,trials,violations,allowed_violations,worst_margin,min_slack,passed\n";
  for (const auto& r : reports) {
    os << r.name << ',' << r.trials << ',' << r.violations << ',' << r.allowed_violations << ','
       << format_double(r.worst_margin) << ',' << format_double(r.min_slack) << ',' << (r.passed ? 1 : 0) << '\n';
  }
  return os.str();
}

inline Json to_json(const RateTable& t) {
  Json rows = Json::array();
  for (const auto& r : t.rows)
    rows.push_back({{"n", r.n},
                    {"trials", r.trials},
                    {"median_error", r.median_error},
                    {"q25", r.q25},
                    {"q75", r.q75},
                    {"median_cosine", r.median_cosine},
                    {"rate_term", r.rate_term},
                    {"predicted", r.predicted}});
  Json trials = Json::array();
  for (const auto& rec : t.records)
    trials.push_back({{"n", rec.n},
                      {"trial", rec.trial},
                      {"seed", rec.seed},
                      {"error", rec.error},
                      {"cosine", rec.cosine},
                      {"final_loss", rec.final_loss}});
  return Json{{"k", t.k},
              {"p", t.p},
              {"lipschitz_bound", t.lipschitz},
              {"r", t.radius},
              {"delta", t.delta},
              {"link", t.link_kind},
              {"solver", t.solver_kind},
              {"fitted_constant", t.fitted_constant},
              {"rows", rows},
              {"trials", trials}};
}

/// Columns: n, trials, median_error, q25, q75, median_cosine, predicted,
/// ratio (median_error of the previous row over this row; empty on row 1).
inline std::string rate_table_csv(const RateTable& t) {
  std::ostringstream os;
  os << "n,trials,median_error,q25,q75,median_cosine,predicted,ratio\n";
  for (std::size_t i = 0; i < t.rows.size(); ++i) {
    const auto& r = t.rows[i];
    os << r.n << ',' << r.trials << ',' << format_double(r.median_error) << ',' << format_double(r.q25) << ','
       << format_double(r.q75) << ',' << format_double(r.median_cosine) << ',' << format_double(r.predicted) << ',';
    if (i > 0 && r.median_error > 0.0) os << format_double(t.rows[i - 1].median_error / r.median_error);
    os << '\n';
  }
  return os.str();
}

/// Columns: t, loss, error, ratio. error is empty without a target; ratio is
/// empty at t = 0.
inline std::string trajectory_csv(const Trajectory& traj) {
  std::ostringstream os;
  os << "t,loss,error,ratio\n";
  for (std::size_t t = 0; t < traj.loss_values.size(); ++t) {
    os << t << ',' << format_double(traj.loss_values[t]) << ',';
    if (t < traj.error_to_target.size()) os << format_double(traj.error_to_target[t]);
    os << ',';
    if (t > 0 && t - 1 < traj.contraction_ratios.size()) os << format_double(traj.contraction_ratios[t - 1]);
    os << '\n';
  }
  return os.str();
}

/// Columns: i, y_clean, y_tilde.
inline std::string observation_csv(const Observation& obs) {
  std::ostringstream os;
  os << "i,y_clean,y_tilde\n";
  for (Index i = 0; i < obs.y_tilde.size(); ++i)
    os << i << ',' << format_double(obs.y_clean[i]) << ',' << format_double(obs.y_tilde[i]) << '\n';
  return os.str();
}

inline Json vector_json(const Vector& v) { return Json(std::vector<double>(v.data(), v.data() + v.size())); }

}  // namespace genprior
