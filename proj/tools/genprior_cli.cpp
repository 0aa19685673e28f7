#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "genprior/genprior.hpp"
#include "genprior/io.hpp"

namespace fs = std::filesystem;
using namespace genprior;

namespace {

enum ExitCode { kOk = 0, kCheckFailed = 1, kConfigError = 2, kInapplicable = 3 };

struct Options {
  std::string config_path;
  std::string out_dir;
  std::optional<std::uint64_t> seed;
  unsigned threads = 1;
  bool quiet = false;
  std::string suite;
  std::string preset;
};

// Config error carrying a resolved source line (0 when unknown).
struct located_error : std::runtime_error {
  located_error(int line, const std::string& msg) : std::runtime_error(msg), line(line) {}
  int line;
};

int line_of_offset(const std::string& text, std::size_t offset) {
  offset = std::min(offset, text.size());
  return 1 + int(std::count(text.begin(), text.begin() + std::ptrdiff_t(offset), '\n'));
}

// First line mentioning "key"; searched after the section header when the
// section is present in the text, otherwise anywhere.
int line_of_key(const std::string& text, const std::string& section, const std::string& key) {
  std::size_t from = 0;
  if (!section.empty()) {
    const auto s = text.find('"' + section + '"');
    if (s != std::string::npos) from = s;
  }
  for (const std::string& k : {key, section}) {
    if (k.empty()) continue;
    auto pos = text.find('"' + k + '"', from);
    if (pos == std::string::npos) pos = text.find('"' + k + '"');
    if (pos != std::string::npos) return line_of_offset(text, pos);
  }
  return 0;
}

class ConfigFile {
 public:
  explicit ConfigFile(const std::string& path) {
    if (path.empty()) {
      json_ = Json::object();
      return;
    }
    std::ifstream in(path, std::ios::binary);
    if (!in) throw located_error(0, "cannot read config file '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    text_ = ss.str();
    try {
      json_ = Json::parse(text_);
    } catch (const nlohmann::json::parse_error& e) {
      throw located_error(line_of_offset(text_, e.byte == 0 ? 0 : e.byte - 1), std::string("malformed JSON: ") + e.what());
    }
    if (!json_.is_object()) throw located_error(1, "config must be a JSON object");
  }

  const Json& json() const { return json_; }
  int line_of(const std::string& section, const std::string& key) const { return line_of_key(text_, section, key); }

  Json section(const char* name) const { return json_.contains(name) ? json_.at(name) : Json::object(); }

  // Runs fn, converting config and argument errors into located errors.
  template <class F>
  auto in_section(const std::string& name, F fn) const -> decltype(fn()) {
    try {
      return fn();
    } catch (const config_error& e) {
      throw located_error(line_of_key(text_, name, e.key()), name + "." + e.what());
    } catch (const nlohmann::json::exception& e) {
      throw located_error(line_of_key(text_, name, ""), name + ": " + e.what());
    } catch (const unsupported_operation&) {
      throw;
    } catch (const std::invalid_argument& e) {
      throw located_error(line_of_key(text_, name, ""), name + ": " + e.what());
    }
  }

 private:
  std::string text_;
  Json json_;
};

std::uint64_t master_seed(const ConfigFile& cfg, const Options& opt) {
  if (opt.seed) return *opt.seed;
  return cfg.in_section("seed", [&] { return detail::get_or<std::uint64_t>(cfg.json(), "seed", 0); });
}

void allow_top_level(const ConfigFile& cfg, std::initializer_list<const char*> keys) {
  cfg.in_section("", [&] {
    detail::allow_keys(cfg.json(), "config", keys);
    return 0;
  });
}

DecoderSpec decoder_from(const ConfigFile& cfg, std::uint64_t seed, const std::optional<DecoderSpec>& fallback) {
  if (!cfg.json().contains("decoder")) {
    if (fallback) return *fallback;
    throw located_error(0, "config: required section 'decoder' missing");
  }
  return cfg.in_section("decoder", [&] {
    return decoder_spec_from_json(cfg.json().at("decoder"), derive_seed(seed, "decoder"));
  });
}

LinkModel link_from(const ConfigFile& cfg, const LinkModel& fallback) {
  if (!cfg.json().contains("link")) return fallback;
  return cfg.in_section("link", [&] { return link_from_json(cfg.json().at("link")); });
}

unsigned resolve_threads(unsigned requested) {
  if (const char* env = std::getenv("GENPRIOR_THREADS")) {
    try {
      const long v = std::stol(env);
      if (v >= 1) return unsigned(v);
    } catch (const std::exception&) {
    }
    throw located_error(0, std::string("GENPRIOR_THREADS must be a positive integer, got '") + env + "'");
  }
  return std::max(1u, requested);
}

// Output files are collected in memory and written by this single writer
// after all computation has succeeded.
struct Outputs {
  std::vector<std::pair<std::string, std::string>> files;
  void add(std::string name, std::string content) { files.emplace_back(std::move(name), std::move(content)); }
  void write(const std::string& dir) const {
    if (dir.empty()) return;
    fs::create_directories(dir);
    for (const auto& [name, content] : files) {
      std::ofstream out(fs::path(dir) / name, std::ios::binary | std::ios::trunc);
      if (!out) throw std::runtime_error("cannot write " + (fs::path(dir) / name).string());
      out << content;
    }
  }
};

std::string dump(const Json& j) { return j.dump(2) + "\n"; }

void require_out(const Options& opt, const char* cmd) {
  if (opt.out_dir.empty()) throw located_error(0, std::string(cmd) + ": --out DIR is required");
}

// ---- shared experiment setup ------------------------------------------------

struct Setup {
  ExperimentSetup exp;
  std::uint64_t seed = 0;
};

Setup setup_from(const ConfigFile& cfg, const Options& opt) {
  Setup s;
  s.seed = master_seed(cfg, opt);
  s.exp.decoder = decoder_from(cfg, s.seed, std::nullopt);
  const Json sensing = cfg.section("sensing");
  cfg.in_section("sensing", [&] {
    detail::allow_keys(sensing, "sensing", {"kind", "n"});
    s.exp.sensing = sensing_kind_from_json(sensing);
    return 0;
  });
  s.exp.link = link_from(cfg, LinkModel::linear());
  const Json solver = cfg.section("solver");
  cfg.in_section("solver", [&] {
    s.exp.solver = solver_kind_from_json(solver);
    s.exp.solver_config = solver_config_from_json(solver, s.exp.solver);
    return 0;
  });
  s.exp.model = default_model_for(s.exp.solver);
  cfg.in_section("model", [&] {
    static const std::pair<const char*, ObservationModel> models[] = {{"sim", ObservationModel::sim},
                                                                      {"known", ObservationModel::known}};
    s.exp.model = detail::parse_enum(cfg.json(), "model", s.exp.model, models);
    s.exp.representation_error = detail::get_or<double>(cfg.json(), "representation_error", 0.0);
    if (s.exp.representation_error < 0.0) throw config_error("representation_error", "must be nonnegative");
    if (s.exp.representation_error > 0.0 && s.exp.model != ObservationModel::known)
      throw config_error("representation_error", "only valid with the known model");
    return 0;
  });
  check_applicable(s.exp);
  return s;
}

int sensing_rows(const ConfigFile& cfg, int p, SensingKind kind) {
  return cfg.in_section("sensing", [&] {
    const int n = detail::get_required<int>(cfg.section("sensing"), "n");
    if (n < 1) throw config_error("n", "must be positive");
    if (kind == SensingKind::partial_circulant && n > p) throw config_error("n", "must be <= p for partial_circulant");
    return n;
  });
}

// ---- commands ---------------------------------------------------------------

int cmd_solve(const Options& opt) {
  require_out(opt, "solve");
  const ConfigFile cfg(opt.config_path);
  allow_top_level(cfg, {"seed", "decoder", "sensing", "link", "solver", "model", "representation_error"});
  const Setup s = setup_from(cfg, opt);
  const int n = sensing_rows(cfg, s.exp.decoder.ambient_dim, s.exp.sensing);

  const GenerativeDecoder decoder = GenerativeDecoder::create(s.exp.decoder);
  const std::uint64_t instance_seed = derive_seed(s.seed, "solve.instance");
  const Instance inst = make_instance(s.exp, decoder, n, instance_seed);
  SolverConfig solver_cfg = s.exp.solver_config;
  solver_cfg.seed = derive_seed(s.seed, "solve.solver");
  const SolveResult res = solve_instance(s.exp, decoder, inst, solver_cfg);

  const double err = (res.x - inst.target).norm();
  const double cos = res.x.norm() > 0.0 ? cosine_similarity(inst.obs.x_star, res.x) : 0.0;
  const double loss = res.trajectory.loss_values.empty() ? 0.0 : res.trajectory.loss_values.back();
  Json metrics{{"method", to_string(s.exp.solver)},
               {"model", to_string(s.exp.model)},
               {"n", n},
               {"l2_error", err},
               {"cosine_similarity", cos},
               {"loss", loss},
               {"iterations", solver_cfg.iterations},
               {"mu", inst.mu},
               {"target", s.exp.solver == SolverKind::pgd_nlasso ? "x_star" : "mu_x_star"}};
  Json instance{{"seed", s.seed},
                {"instance_seed", instance_seed},
                {"decoder", describe(decoder)},
                {"sensing", to_json(inst.op.spec())},
                {"link", to_json(s.exp.link)},
                {"solver", to_json(solver_cfg, s.exp.solver)},
                {"model", to_string(s.exp.model)},
                {"representation_error", s.exp.representation_error},
                {"x_star", vector_json(inst.obs.x_star)},
                {"z_star", inst.obs.z_star ? vector_json(*inst.obs.z_star) : Json(nullptr)},
                {"x_hat", vector_json(res.x)},
                {"z_hat", res.z.size() ? vector_json(res.z) : Json(nullptr)}};

  Outputs out;
  out.add("trajectory.csv", trajectory_csv(res.trajectory));
  out.add("observation.csv", observation_csv(inst.obs));
  out.add("metrics.json", dump(metrics));
  out.add("instance.json", dump(instance));
  out.write(opt.out_dir);
  if (!opt.quiet)
    std::cout << "solve: method=" << to_string(s.exp.solver) << " n=" << n << " l2_error=" << format_double(err)
              << " cosine_similarity=" << format_double(cos) << "\n";
  return kOk;
}

int cmd_rate(const Options& opt) {
  require_out(opt, "rate");
  const ConfigFile cfg(opt.config_path);
  allow_top_level(cfg, {"seed", "decoder", "sensing", "link", "solver", "model", "representation_error", "rate"});
  const Setup s = setup_from(cfg, opt);
  RateExperimentConfig rc;
  rc.seed = s.seed;
  rc.threads = resolve_threads(opt.threads);
  cfg.in_section("rate", [&] {
    const Json r = cfg.section("rate");
    detail::allow_keys(r, "rate", {"grid", "trials", "delta", "max_n"});
    rc.grid = detail::get_required<std::vector<int>>(r, "grid");
    rc.trials = detail::get_or<int>(r, "trials", rc.trials);
    rc.delta = detail::get_or<double>(r, "delta", rc.delta);
    rc.max_n = detail::get_or<int>(r, "max_n", rc.max_n);
    if (rc.grid.empty()) throw config_error("grid", "must not be empty");
    for (std::size_t i = 0; i < rc.grid.size(); ++i) {
      if (rc.grid[i] < 1 || rc.grid[i] > rc.max_n) throw config_error("grid", "values must be in [1, max_n]");
      if (i > 0 && rc.grid[i] <= rc.grid[i - 1]) throw config_error("grid", "must be strictly increasing");
      if (s.exp.sensing == SensingKind::partial_circulant && rc.grid[i] > s.exp.decoder.ambient_dim)
        throw config_error("grid", "values must be <= p for partial_circulant");
    }
    if (rc.trials < 10) throw config_error("trials", "must be >= 10");
    if (!(rc.delta > 0.0)) throw config_error("delta", "must be positive");
    return 0;
  });
  if (cfg.json().contains("sensing") && cfg.section("sensing").contains("n"))
    throw located_error(cfg.line_of("sensing", "n"), "sensing.n: not used by rate; set rate.grid instead");

  const RateTable table = rate_experiment(rc, s.exp);
  Outputs out;
  out.add("rate.csv", rate_table_csv(table));
  out.add("rate.json", dump(to_json(table)));
  out.write(opt.out_dir);
  if (!opt.quiet) {
    std::cout << "rate: solver=" << table.solver_kind << " link=" << table.link_kind
              << " fitted_constant=" << format_double(table.fitted_constant) << "\n";
    for (const auto& row : table.rows)
      std::cout << "  n=" << row.n << " median_error=" << format_double(row.median_error)
                << " median_cosine=" << format_double(row.median_cosine) << "\n";
  }
  return kOk;
}

struct CheckParams {
  Json j;
  double get(const char* key, double fallback) const { return detail::get_or<double>(j, key, fallback); }
  int get_int(const char* key, int fallback) const { return detail::get_or<int>(j, key, fallback); }
};

int cmd_check(const Options& opt) {
  const ConfigFile cfg(opt.config_path);
  allow_top_level(cfg, {"seed", "decoder", "sensing", "link", "check"});
  const std::uint64_t seed = master_seed(cfg, opt);
  const CheckParams params{cfg.section("check")};
  const Json sensing = cfg.section("sensing");
  cfg.in_section("sensing", [&] {
    detail::allow_keys(sensing, "sensing", {"kind", "n", "p"});
    return 0;
  });
  const std::string& suite = opt.suite;
  std::vector<CheckReport> reports;

  auto op_seeds = [&] { return cfg.in_section("check", [&] { return params.get_int("seeds", 1); }); };
  auto dense_ops = [&](int n, int p, int count) {
    std::vector<SensingOperator> ops;
    for (int i = 0; i < count; ++i)
      ops.push_back(SensingOperator::create({sensing_kind_from_json(sensing), n, p, derive_seed(seed, "check.op", i)}));
    return ops;
  };

  cfg.in_section("check", [&] {
    detail::allow_keys(params.j, "check",
                       {"eps", "delta", "pairs", "points", "nu", "slack", "triples", "seeds", "tol", "constant"});
    if (params.get_int("seeds", 1) < 1) throw config_error("seeds", "must be >= 1");
    return 0;
  });

  if (suite == "adjoint") {
    const int p = cfg.in_section("sensing", [&] { return detail::get_or<int>(sensing, "p", 128); });
    const int n = cfg.in_section("sensing", [&] { return detail::get_or<int>(sensing, "n", 64); });
    const int pairs = cfg.in_section("check", [&] { return params.get_int("pairs", 100); });
    cfg.in_section("sensing", [&] {
      if (n < 1 || p < 1 || n > p) throw config_error("n", "adjoint suite needs 1 <= n <= p");
      return 0;
    });
    for (auto kind : {SensingKind::dense_gaussian, SensingKind::partial_circulant}) {
      const auto op = SensingOperator::create({kind, n, p, derive_seed(seed, "check.adjoint")});
      reports.push_back(adjoint_check(op, pairs, derive_seed(seed, "check.adjoint.pairs")));
    }
  } else if (suite == "mvt") {
    const LinkModel link = link_from(cfg, LinkModel::shifted_cosine());
    if (!link.differentiable()) throw unsupported_operation("mvt suite needs a differentiable link");
    const int p = cfg.in_section("sensing", [&] { return detail::get_or<int>(sensing, "p", 128); });
    const int n = cfg.in_section("sensing", [&] { return detail::get_or<int>(sensing, "n", 64); });
    const int triples = cfg.in_section("check", [&] { return params.get_int("triples", 100); });
    for (const auto& op : dense_ops(n, p, op_seeds())) {
      auto rep = mvt_check(op, link, triples, derive_seed(seed, "check.mvt", reports.size()));
      reports.push_back(rep);
    }
  } else if (suite == "gradients") {
    const DecoderSpec spec = decoder_from(cfg, seed, check_decoder_spec(derive_seed(seed, "decoder")));
    const GenerativeDecoder decoder = GenerativeDecoder::create(spec);
    const int points = cfg.in_section("check", [&] { return params.get_int("points", 50); });
    const int n = cfg.in_section("sensing", [&] { return detail::get_or<int>(sensing, "n", 64); });
    const LinkModel link = link_from(cfg, LinkModel::shifted_cosine());
    if (!link.differentiable()) throw unsupported_operation("gradients suite needs a differentiable link");
    const auto op = dense_ops(n, decoder.ambient_dim(), 1).front();
    Rng rng(derive_seed(seed, "check.gradients.y"));
    const Vector y = gaussian_vector(rng, n);
    reports.push_back(gradient_check(
        "grad_glasso", op.cols(), [&](const Vector& x) { return loss_glasso(op, y, x); },
        [&](const Vector& x) { return grad_glasso(op, y, x); }, points, derive_seed(seed, "check.gradients.g")));
    reports.push_back(gradient_check(
        "grad_nlasso", op.cols(), [&](const Vector& x) { return loss_nlasso(op, y, link, x); },
        [&](const Vector& x) { return grad_nlasso(op, y, link, x); }, points, derive_seed(seed, "check.gradients.n")));
    reports.push_back(vjp_check(decoder, points, derive_seed(seed, "check.gradients.vjp")));
  } else {
    const DecoderSpec spec = decoder_from(cfg, seed, check_decoder_spec(derive_seed(seed, "decoder")));
    const GenerativeDecoder decoder = GenerativeDecoder::create(spec);
    const double lr = decoder.lipschitz_bound() * decoder.latent_radius();
    const int seeds = op_seeds();
    auto n_or = [&](int fallback) {
      return cfg.in_section("sensing", [&] {
        const int n = detail::get_or<int>(sensing, "n", fallback);
        if (n < 1) throw config_error("n", "must be positive");
        return n;
      });
    };
    if (suite == "tsrec") {
      const double eps = cfg.in_section("check", [&] { return params.get("eps", frozen::tsrec_eps); });
      const double delta = cfg.in_section("check", [&] { return params.get("delta", frozen::tsrec_delta); });
      const double c = cfg.in_section("check", [&] { return params.get("constant", frozen::tsrec_constant); });
      const int pairs = cfg.in_section("check", [&] { return params.get_int("pairs", frozen::tsrec_pairs); });
      const int n = n_or(int(std::ceil(c * decoder.latent_dim() * std::log(lr / delta))));
      int i = 0;
      for (const auto& op : dense_ops(n, decoder.ambient_dim(), seeds))
        reports.push_back(tsrec_check(op, decoder, eps, delta, pairs, derive_seed(seed, "check.tsrec", i++)));
    } else if (suite == "jle") {
      const double eps = cfg.in_section("check", [&] { return params.get("eps", frozen::jle_eps); });
      const double c = cfg.in_section("check", [&] { return params.get("constant", frozen::jle_constant); });
      const int points = cfg.in_section("check", [&] { return params.get_int("points", frozen::jle_points); });
      const int n = n_or(calibrated_jle_measurements(c, points, eps));
      int i = 0;
      for (const auto& op : dense_ops(n, decoder.ambient_dim(), seeds))
        reports.push_back(jle_check(op, range_points(decoder, points, derive_seed(seed, "check.jle", i++)), eps));
    } else if (suite == "wnu") {
      const double nu = cfg.in_section("check", [&] { return params.get("nu", frozen::wnu_nu); });
      const double eps = cfg.in_section("check", [&] { return params.get("eps", frozen::wnu_eps); });
      const double delta = cfg.in_section("check", [&] { return params.get("delta", frozen::wnu_delta); });
      const double c = cfg.in_section("check", [&] { return params.get("constant", frozen::wnu_constant); });
      const double slack = cfg.in_section("check", [&] { return params.get("slack", frozen::wnu_slack); });
      const int pairs = cfg.in_section("check", [&] { return params.get_int("pairs", frozen::wnu_pairs); });
      const int n = n_or(calibrated_measurements(c, decoder.latent_dim(), decoder.lipschitz_bound(),
                                                 decoder.latent_radius(), delta, eps));
      int i = 0;
      for (const auto& op : dense_ops(n, decoder.ambient_dim(), seeds)) {
        reports.push_back(wnu_check(op, decoder, nu, eps, pairs, derive_seed(seed, "check.wnu", i), slack));
        reports.push_back(polarization_check(op, pairs, derive_seed(seed, "check.polarization", i)));
        ++i;
      }
    }
  }

  bool passed = true;
  Json all = Json::array();
  for (const auto& r : reports) {
    passed = passed && r.passed;
    all.push_back(to_json(r));
  }
  Outputs out;
  out.add("check_" + suite + ".json", dump(Json{{"suite", suite}, {"passed", passed}, {"reports", all}}));
  out.add("check_" + suite + ".csv", check_report_csv(reports));
  out.write(opt.out_dir);
  if (!opt.quiet) {
    for (const auto& r : reports)
      std::cout << r.name << ": trials=" << r.trials << " violations=" << r.violations
                << " worst_margin=" << format_double(r.worst_margin) << " " << (r.passed ? "PASS" : "FAIL") << "\n";
    std::cout << "check " << suite << ": " << (passed ? "PASS" : "FAIL") << "\n";
  }
  return passed ? kOk : kCheckFailed;
}

int cmd_model_new(const Options& opt) {
  require_out(opt, "model new");
  DecoderSpec spec;
  if (!opt.preset.empty()) {
    if (opt.preset != "mnist" && opt.preset != "check")
      throw located_error(0, "--preset must be 'mnist' or 'check'");
    const std::uint64_t seed = opt.seed.value_or(opt.preset == "mnist" ? 7 : 11);
    spec = opt.preset == "mnist" ? mnist_scale_decoder_spec(seed) : check_decoder_spec(seed);
  } else {
    const ConfigFile cfg(opt.config_path);
    if (opt.config_path.empty()) throw located_error(0, "model new: --config or --preset is required");
    const Json& j = cfg.json().contains("decoder") ? cfg.json().at("decoder") : cfg.json();
    spec = cfg.in_section(cfg.json().contains("decoder") ? "decoder" : "", [&] {
      return decoder_spec_from_json(j, opt.seed.value_or(0));
    });
    if (opt.seed) spec.seed = *opt.seed;
  }
  const GenerativeDecoder decoder = GenerativeDecoder::create(spec);
  Outputs out;
  out.add("decoder.json", dump(describe(decoder)));
  out.write(opt.out_dir);
  if (!opt.quiet) std::cout << describe(decoder).dump() << "\n";
  return kOk;
}

int cmd_model_info(const Options& opt) {
  if (opt.config_path.empty()) throw located_error(0, "model info: --config is required");
  const ConfigFile cfg(opt.config_path);
  const bool nested = cfg.json().contains("decoder");
  const Json& j = nested ? cfg.json().at("decoder") : cfg.json();
  DecoderSpec spec = cfg.in_section(nested ? "decoder" : "", [&] { return decoder_spec_from_json(j, 0); });
  if (opt.seed) spec.seed = *opt.seed;
  const GenerativeDecoder decoder = GenerativeDecoder::create(spec);
  Json info = describe(decoder);
  info["num_layers"] = decoder.layers().size();
  Outputs out;
  out.add("decoder_info.json", dump(info));
  out.write(opt.out_dir);
  if (!opt.quiet) std::cout << dump(info);
  return kOk;
}

void add_common(CLI::App* cmd, Options& opt, bool config_required) {
  auto* c = cmd->add_option("--config", opt.config_path, "JSON config file");
  if (config_required) c->required();
  c->check(CLI::ExistingFile);
  cmd->add_option("--out", opt.out_dir, "output directory");
  cmd->add_option("--seed", opt.seed, "master seed (overrides the config)");
  cmd->add_option("--threads", opt.threads, "worker threads (GENPRIOR_THREADS overrides)")->check(CLI::PositiveNumber);
  cmd->add_flag("--quiet", opt.quiet, "suppress console summaries");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Projected gradient descent with generative priors: solve, rate experiments and checks"};
  app.require_subcommand(1);
  Options opt;

  auto* solve = app.add_subcommand("solve", "solve one synthetic instance");
  add_common(solve, opt, true);
  auto* rate = app.add_subcommand("rate", "error-vs-n rate experiment");
  add_common(rate, opt, true);
  auto* check = app.add_subcommand("check", "run a verification suite");
  check->add_option("suite", opt.suite, "suite name")
      ->required()
      ->check(CLI::IsMember({"adjoint", "tsrec", "jle", "wnu", "mvt", "gradients"}));
  add_common(check, opt, false);
  auto* model = app.add_subcommand("model", "create or describe decoders");
  model->require_subcommand(1);
  auto* model_new = model->add_subcommand("new", "write a decoder JSON");
  add_common(model_new, opt, false);
  model_new->add_option("--preset", opt.preset, "mnist (k=20, [500,500], p=784) or check (k=8, [64], p=256)");
  auto* model_info = model->add_subcommand("info", "describe a decoder JSON");
  add_common(model_info, opt, true);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kConfigError;
  }

  try {
    opt.threads = resolve_threads(opt.threads);
    if (*solve) return cmd_solve(opt);
    if (*rate) return cmd_rate(opt);
    if (*check) return cmd_check(opt);
    if (*model_new) return cmd_model_new(opt);
    if (*model_info) return cmd_model_info(opt);
  } catch (const located_error& e) {
    if (e.line > 0)
      std::cerr << "config error at " << opt.config_path << ":" << e.line << ": " << e.what() << "\n";
    else
      std::cerr << "config error: " << e.what() << "\n";
    return kConfigError;
  } catch (const unsupported_operation& e) {
    std::cerr << "inapplicable method: " << e.what() << "\n";
    return kInapplicable;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kConfigError;
  }
  return kConfigError;
}
