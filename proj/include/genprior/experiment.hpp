#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "genprior/analysis.hpp"
#include "genprior/common.hpp"
#include "genprior/genmodel.hpp"
#include "genprior/measurement.hpp"
#include "genprior/parallel.hpp"
#include "genprior/sensing.hpp"
#include "genprior/solvers.hpp"

namespace genprior {

enum class SolverKind { pgd_glasso, pgd_nlasso, csgm };

/// sim: ||x*|| = 1, mu x* = G(z*), y_i = f_i(a_i^T x*).
/// known: x* = G(z*) (+ representation error), y_i = f(a_i^T x*) + eta_i.
enum class ObservationModel { sim, known };

inline const char* to_string(SolverKind k) {
  switch (k) {
    case SolverKind::pgd_glasso: return "pgd_glasso";
    case SolverKind::pgd_nlasso: return "pgd_nlasso";
    case SolverKind::csgm: return "csgm";
  }
  return "?";
}
inline const char* to_string(ObservationModel m) { return m == ObservationModel::sim ? "sim" : "known"; }

inline ObservationModel default_model_for(SolverKind k) {
  return k == SolverKind::pgd_nlasso ? ObservationModel::known : ObservationModel::sim;
}

/// Everything needed to draw and solve one synthetic instance, except n and
/// the instance seed.
struct ExperimentSetup {
  DecoderSpec decoder;
  SensingKind sensing = SensingKind::dense_gaussian;
  LinkModel link = LinkModel::linear();
  SolverKind solver = SolverKind::pgd_glasso;
  ObservationModel model = ObservationModel::sim;
  SolverConfig solver_config;
  double representation_error = 0.0;  // known model only
};

struct Instance {
  SensingOperator op;
  Observation obs;
  Vector target;  // mu x* for pgd_glasso / csgm, x* for pgd_nlasso
  double mu = 1.0;
};

/// Throws unsupported_operation for combinations that cannot be solved
/// (non-differentiable link with pgd_nlasso or with the known model).
inline void check_applicable(const ExperimentSetup& setup) {
  if (!setup.link.differentiable()) {
    if (setup.solver == SolverKind::pgd_nlasso)
      throw unsupported_operation("pgd_nlasso needs a differentiable link; sign_dithered is not");
    if (setup.model == ObservationModel::known)
      throw unsupported_operation("the known-link model needs a differentiable link; sign_dithered is not");
  }
}

inline Instance make_instance(const ExperimentSetup& setup, const GenerativeDecoder& decoder, int n,
                              std::uint64_t seed) {
  check_applicable(setup);
  Instance inst{SensingOperator::create({setup.sensing, n, decoder.ambient_dim(), derive_seed(seed, "instance.sensing")}),
                {}, {}, mu_of_link(setup.link).value};
  if (setup.model == ObservationModel::sim) {
    PlantedSignal planted = plant_sim_signal(decoder, inst.mu, derive_seed(seed, "instance.signal"));
    inst.obs = observe_sim(setup.link, inst.op, planted.x_star, derive_seed(seed, "instance.observe"));
    inst.obs.z_star = planted.z_star;
  } else {
    PlantedSignal planted =
        plant_known_signal(decoder, derive_seed(seed, "instance.signal"), setup.representation_error);
    inst.obs = observe_known(setup.link, inst.op, planted.x_star, derive_seed(seed, "instance.observe"));
    inst.obs.z_star = planted.z_star;
  }
  inst.target = setup.solver == SolverKind::pgd_nlasso ? inst.obs.x_star : Vector(inst.mu * inst.obs.x_star);
  return inst;
}

inline SolveResult solve_instance(const ExperimentSetup& setup, const GenerativeDecoder& decoder, const Instance& inst,
                                  SolverConfig cfg) {
  check_applicable(setup);
  switch (setup.solver) {
    case SolverKind::pgd_glasso: return pgd_glasso(inst.op, inst.obs.y_tilde, decoder, cfg, inst.target);
    case SolverKind::pgd_nlasso: return pgd_nlasso(inst.op, inst.obs.y_tilde, setup.link, decoder, cfg, inst.target);
    case SolverKind::csgm: return csgm_baseline(inst.op, inst.obs.y_tilde, decoder, cfg, inst.target);
  }
  throw std::logic_error("unknown solver kind");
}

struct TrialRecord {
  int n = 0;
  int trial = 0;
  std::uint64_t seed = 0;
  double error = 0.0;   // ||x^(T) - target||
  double cosine = 0.0;  // cos(x*, x^(T)); 0 when x^(T) = 0
  double final_loss = 0.0;
};

inline TrialRecord run_trial(const ExperimentSetup& setup, const GenerativeDecoder& decoder, int n, int trial,
                             std::uint64_t seed) {
  const Instance inst = make_instance(setup, decoder, n, seed);
  SolverConfig cfg = setup.solver_config;
  cfg.seed = derive_seed(seed, "trial.solver");
  const SolveResult res = solve_instance(setup, decoder, inst, cfg);
  TrialRecord rec;
  rec.n = n;
  rec.trial = trial;
  rec.seed = seed;
  rec.error = (res.x - inst.target).norm();
  rec.cosine = res.x.norm() > 0.0 ? cosine_similarity(inst.obs.x_star, res.x) : 0.0;
  rec.final_loss = res.trajectory.loss_values.empty() ? 0.0 : res.trajectory.loss_values.back();
  return rec;
}

inline std::uint64_t trial_seed(std::uint64_t master, int n, int trial) {
  return derive_seed(derive_seed(master, "rate.n", std::uint64_t(n)), "rate.trial", std::uint64_t(trial));
}

struct RateRow {
  int n = 0;
  int trials = 0;
  double median_error = 0.0;
  double q25 = 0.0;
  double q75 = 0.0;
  double median_cosine = 0.0;
  double rate_term = 0.0;  // sqrt(k log(L r / delta) / n)
  double predicted = 0.0;  // fitted_constant * rate_term
};

struct RateTable {
  std::vector<RateRow> rows;
  std::vector<TrialRecord> records;  // sorted by (n, trial)
  double fitted_constant = 0.0;
  int k = 0;
  int p = 0;
  double lipschitz = 0.0;
  double radius = 0.0;
  double delta = 0.0;
  std::string link_kind;
  std::string solver_kind;
};

struct RateExperimentConfig {
  std::vector<int> grid;
  int trials = 10;
  double delta = 1e-3;
  std::uint64_t seed = 0;
  unsigned threads = 1;
  int max_n = 100000;
};

/// Error-vs-n table: `trials` independent (A, noise, x*) draws per n; rows
/// carry medians and quartiles, and c in c sqrt(k log(Lr/delta)/n) is fitted
/// by least squares on the medians.
inline RateTable rate_experiment(const RateExperimentConfig& cfg, const ExperimentSetup& setup) {
  require(cfg.trials >= 10, "rate_experiment: trials must be >= 10");
  require(!cfg.grid.empty(), "rate_experiment: empty grid");
  require(cfg.delta > 0.0, "rate_experiment: delta must be positive");
  for (std::size_t i = 0; i < cfg.grid.size(); ++i) {
    require(cfg.grid[i] >= 1 && cfg.grid[i] <= cfg.max_n, "rate_experiment: grid value out of range");
    if (i > 0) require(cfg.grid[i] > cfg.grid[i - 1], "rate_experiment: grid must be strictly increasing");
  }
  check_applicable(setup);
  const GenerativeDecoder decoder = GenerativeDecoder::create(setup.decoder);

  RateTable table;
  table.k = decoder.latent_dim();
  table.p = decoder.ambient_dim();
  table.lipschitz = decoder.lipschitz_bound();
  table.radius = decoder.latent_radius();
  table.delta = cfg.delta;
  table.link_kind = to_string(setup.link.kind());
  table.solver_kind = to_string(setup.solver);

  const std::size_t per_n = std::size_t(cfg.trials);
  table.records.resize(cfg.grid.size() * per_n);
  parallel_for(table.records.size(), cfg.threads, [&](std::size_t idx) {
    const int n = cfg.grid[idx / per_n];
    const int trial = int(idx % per_n);
    table.records[idx] = run_trial(setup, decoder, n, trial, trial_seed(cfg.seed, n, trial));
  });

  const double log_term = std::log(table.lipschitz * table.radius / cfg.delta);
  double num = 0.0, den = 0.0;
  for (std::size_t g = 0; g < cfg.grid.size(); ++g) {
    std::vector<double> errors, cosines;
    for (std::size_t t = 0; t < per_n; ++t) {
      errors.push_back(table.records[g * per_n + t].error);
      cosines.push_back(table.records[g * per_n + t].cosine);
    }
    RateRow row;
    row.n = cfg.grid[g];
    row.trials = cfg.trials;
    row.median_error = median(errors);
    row.q25 = quantile(errors, 0.25);
    row.q75 = quantile(errors, 0.75);
    row.median_cosine = median(cosines);
    row.rate_term = std::sqrt(table.k * std::max(log_term, 0.0) / row.n);
    num += row.median_error * row.rate_term;
    den += row.rate_term * row.rate_term;
    table.rows.push_back(row);
  }
  table.fitted_constant = den > 0.0 ? num / den : 0.0;
  for (auto& row : table.rows) row.predicted = table.fitted_constant * row.rate_term;
  return table;
}

}  // namespace genprior
