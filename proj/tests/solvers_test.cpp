#include <cmath>

#include <gtest/gtest.h>

#include "genprior/analysis.hpp"
#include "genprior/solvers.hpp"

using namespace genprior;

namespace {

GenerativeDecoder orthonormal_decoder(int k, int p, double r, std::uint64_t seed) {
  DecoderSpec s;
  s.seed = seed;
  s.latent_dim = k;
  s.ambient_dim = p;
  s.latent_radius = r;
  s.activation = Activation::identity;
  s.init = WeightInit::orthonormal;
  return GenerativeDecoder::create(s);
}

SolverConfig exact_cfg(int iterations) {
  SolverConfig cfg;
  cfg.iterations = iterations;
  cfg.projection.method = ProjectionMethod::exact_linear;
  return cfg;
}

template <class Loss>
Vector fd_gradient(Loss loss, const Vector& x, double h) {
  Vector g(x.size());
  for (Index i = 0; i < x.size(); ++i) {
    Vector xp = x, xm = x;
    xp[i] += h;
    xm[i] -= h;
    g[i] = (loss(xp) - loss(xm)) / (2 * h);
  }
  return g;
}

}  // namespace

TEST(Loss, GlassoExamples) {
  const auto op = SensingOperator::from_dense(Matrix::Zero(2, 3));
  Vector y(2);
  y << 1, 1;
  EXPECT_DOUBLE_EQ(loss_glasso(op, y, Vector::Zero(3)), 0.5);
  const auto op2 = SensingOperator::create({SensingKind::dense_gaussian, 5, 7, 1});
  const Vector x = Vector::LinSpaced(7, -1, 1);
  EXPECT_EQ(loss_glasso(op2, op2.apply(x), x), 0.0);
  EXPECT_THROW(loss_glasso(op2, Vector::Zero(4), x), std::invalid_argument);
}

TEST(Loss, NlassoExamples) {
  const auto op = SensingOperator::create({SensingKind::dense_gaussian, 6, 9, 2});
  const Vector x = Vector::LinSpaced(9, 0, 1);
  const auto link = LinkModel::shifted_cosine();
  EXPECT_EQ(loss_nlasso(op, link.eval(op.apply(x)), link, x), 0.0);
  const Vector y = Vector::Ones(6);
  EXPECT_DOUBLE_EQ(loss_nlasso(op, y, LinkModel::linear(), x), loss_glasso(op, y, x));
  EXPECT_THROW(loss_nlasso(op, y, LinkModel::sign_dithered(0.1), x), unsupported_operation);
}

TEST(Loss, GradientsMatchFiniteDifferences) {
  const auto op = SensingOperator::create({SensingKind::dense_gaussian, 20, 15, 3});
  const auto link = LinkModel::shifted_cosine();
  Rng rng(1);
  const Vector y = gaussian_vector(rng, 20);
  for (int i = 0; i < 50; ++i) {
    const Vector x = gaussian_vector(rng, 15);
    const Vector gg = grad_glasso(op, y, x);
    const Vector fg = fd_gradient([&](const Vector& v) { return loss_glasso(op, y, v); }, x, 1e-5);
    EXPECT_LE((gg - fg).norm() / fg.norm(), 1e-5);
    const Vector gn = grad_nlasso(op, y, link, x);
    const Vector fn = fd_gradient([&](const Vector& v) { return loss_nlasso(op, y, link, v); }, x, 1e-5);
    EXPECT_LE((gn - fn).norm() / fn.norm(), 1e-5);
  }
}

TEST(ContractionFactors, Values) {
  EXPECT_NEAR(mu1_of(1.0, 0.05), 0.05, 1e-15);
  EXPECT_NEAR(mu1_of(2.0, 1e-12), 1.0, 1e-10);
  EXPECT_NEAR(mu2_of(0.2, 1.5, 2.5, 0.0), 0.55, 1e-15);
  EXPECT_NEAR(mu2_of(0.23, 1.5, 2.5, 0.0), 0.4825, 1e-12);
  EXPECT_THROW(mu1_of(1.0, 1.5), std::invalid_argument);
}

TEST(SolverConfig, Defaults) {
  EXPECT_EQ(SolverConfig::glasso_defaults().step_size, 1.0);
  EXPECT_EQ(SolverConfig::glasso_defaults().iterations, 30);
  EXPECT_EQ(SolverConfig::nlasso_replication_defaults().step_size, 0.2);
  EXPECT_EQ(SolverConfig::nlasso_theory_defaults().step_size, 0.23);
  SolverConfig bad;
  bad.step_size = 0.0;
  EXPECT_THROW(bad.validate(), std::invalid_argument);
  bad = {};
  bad.iterations = 0;
  EXPECT_THROW(bad.validate(), std::invalid_argument);
}

TEST(PgdGlasso, ExactProjectionConvergesFromRandomStart) {
  const int k = 8, p = 256;
  const int n = int(std::ceil(4 * k * std::log(double(p))));
  const auto d = orthonormal_decoder(k, p, 3.0, 1);
  const auto op = SensingOperator::create({SensingKind::dense_gaussian, n, p, 2});
  const Vector x_star = d.forward(d.sample_latent(5));
  const Vector y = op.apply(x_star);
  SolverConfig cfg = exact_cfg(50);
  cfg.x0_mode = InitialPoint::gaussian;
  cfg.seed = 9;
  const auto res = pgd_glasso(op, y, d, cfg, x_star);
  ASSERT_EQ(res.trajectory.error_to_target.size(), 51u);
  ASSERT_EQ(res.trajectory.loss_values.size(), 51u);
  ASSERT_EQ(res.trajectory.contraction_ratios.size(), 50u);
  EXPECT_LT(res.trajectory.error_to_target.back(), 1e-8);
  for (double l : res.trajectory.loss_values) EXPECT_GE(l, 0.0);
}

TEST(PgdGlasso, ContractionBelowEmpiricalBound) {
  const int k = 8, p = 256, n = 120;
  const auto d = orthonormal_decoder(k, p, 3.0, 1);
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto op = SensingOperator::create({SensingKind::dense_gaussian, n, p, derive_seed(seed, "op")});
    const Matrix w = d.layers()[0].weight;
    // Realized restricted slack on the range: singular values of A W / sqrt(n).
    Eigen::JacobiSVD<Matrix> svd(op.materialize() * w / std::sqrt(double(n)));
    const auto sv = svd.singularValues();
    const double eps_hat = std::max(sv.maxCoeff() * sv.maxCoeff() - 1.0, 1.0 - sv.minCoeff() * sv.minCoeff());
    const Vector x_star = d.forward(d.sample_latent(derive_seed(seed, "z")));
    SolverConfig cfg = exact_cfg(80);
    cfg.x0_mode = InitialPoint::gaussian;
    cfg.seed = seed;
    const auto res = pgd_glasso(op, op.apply(x_star), d, cfg, x_star);
    const auto& e = res.trajectory.error_to_target;
    for (std::size_t t = 1; t + 1 < e.size() && e[t] >= 1e-10; ++t)
      EXPECT_LT(e[t + 1] / e[t], 2 * mu1_of(1.0, std::min(eps_hat, 0.999)) + 0.05) << "seed " << seed << " t " << t;
  }
}

TEST(PgdGlasso, ArbitraryInitialization) {
  const auto d = orthonormal_decoder(4, 64, 2.0, 2);
  const auto op = SensingOperator::create({SensingKind::dense_gaussian, 60, 64, 3});
  const Vector x_star = d.forward(d.sample_latent(1));
  Rng rng(5);
  const Vector y = op.apply(x_star) + gaussian_vector(rng, 60, 0.1);
  std::vector<double> finals;
  for (std::uint64_t s = 0; s < 10; ++s) {
    SolverConfig cfg = exact_cfg(60);
    cfg.x0_mode = InitialPoint::gaussian;
    cfg.seed = s;
    finals.push_back(pgd_glasso(op, y, d, cfg, x_star).trajectory.error_to_target.back());
  }
  const double floor = *std::min_element(finals.begin(), finals.end());
  for (double f : finals) EXPECT_LE(f, 10 * floor + 1e-12);
}

TEST(PgdNlasso, LinearLinkReducesToGlasso) {
  DecoderSpec s;
  s.seed = 3;
  s.latent_dim = 3;
  s.hidden_dims = {16};
  s.ambient_dim = 32;
  s.latent_radius = 2.0;
  const auto d = GenerativeDecoder::create(s);
  const auto op = SensingOperator::create({SensingKind::dense_gaussian, 25, 32, 1});
  const Vector y = op.apply(d.forward(d.sample_latent(2)));
  SolverConfig cfg;
  cfg.iterations = 5;
  cfg.projection.steps = 30;
  cfg.record_trajectory = true;
  cfg.seed = 4;
  const auto g = pgd_glasso(op, y, d, cfg);
  const auto n = pgd_nlasso(op, y, LinkModel::linear(), d, cfg);
  ASSERT_EQ(g.trajectory.iterates.size(), n.trajectory.iterates.size());
  for (std::size_t t = 0; t < g.trajectory.iterates.size(); ++t)
    EXPECT_EQ(g.trajectory.iterates[t], n.trajectory.iterates[t]);
}

TEST(PgdNlasso, TheoryStepContracts) {
  const auto d = orthonormal_decoder(4, 128, 3.0, 8);
  const auto op = SensingOperator::create({SensingKind::dense_gaussian, 400, 128, 5});
  const auto link = LinkModel::shifted_cosine();
  const Vector x_star = d.forward(d.sample_latent(6));
  SolverConfig cfg = SolverConfig::nlasso_theory_defaults();
  cfg.iterations = 80;
  cfg.projection.method = ProjectionMethod::exact_linear;
  const auto res = pgd_nlasso(op, link.eval(op.apply(x_star)), link, d, cfg, x_star);
  const auto& e = res.trajectory.error_to_target;
  for (std::size_t t = 0; t + 1 < e.size() && e[t] > 1e-12; ++t) EXPECT_LT(e[t + 1], e[t]) << "t " << t;
  EXPECT_LE(e.back(), 1e-6);
}

TEST(PgdNlasso, SignLinkRejected) {
  const auto d = orthonormal_decoder(2, 8, 1.0, 1);
  const auto op = SensingOperator::create({SensingKind::dense_gaussian, 4, 8, 1});
  EXPECT_THROW(pgd_nlasso(op, Vector::Zero(4), LinkModel::sign_dithered(0.1), d, SolverConfig{}), unsupported_operation);
}

TEST(PgdGlasso, IteratesFeasible) {
  DecoderSpec s;
  s.seed = 2;
  s.latent_dim = 3;
  s.hidden_dims = {12};
  s.ambient_dim = 20;
  s.latent_radius = 1.0;
  const auto d = GenerativeDecoder::create(s);
  const auto op = SensingOperator::create({SensingKind::partial_circulant, 15, 20, 1});
  Rng rng(3);
  SolverConfig cfg;
  cfg.iterations = 4;
  cfg.projection.steps = 20;
  const auto res = pgd_glasso(op, gaussian_vector(rng, 15), d, cfg);
  EXPECT_LE(res.z.norm(), 1.0 + 1e-12);
  EXPECT_EQ(res.x, d.forward(res.z));
}

TEST(Csgm, WarmStartAtOptimum) {
  DecoderSpec s;
  s.seed = 7;
  s.latent_dim = 3;
  s.hidden_dims = {10};
  s.ambient_dim = 16;
  s.latent_radius = 1.0;
  const auto d = GenerativeDecoder::create(s);
  const auto op = SensingOperator::create({SensingKind::dense_gaussian, 12, 16, 2});
  const Vector z0 = d.sample_latent(3);
  const auto res = csgm_baseline(op, op.apply(d.forward(z0)), d, SolverConfig{}, std::nullopt, z0);
  EXPECT_LE(loss_glasso(op, op.apply(d.forward(z0)), res.x), 1e-10);
}

TEST(Csgm, IdentityDecoderClipsToBall) {
  DecoderSpec s;
  s.seed = 0;
  s.latent_dim = 3;
  s.ambient_dim = 3;
  s.latent_radius = 1.0;
  s.activation = Activation::identity;
  s.init = WeightInit::identity;
  const auto d = GenerativeDecoder::create(s);
  const auto op = SensingOperator::from_dense(Matrix::Identity(3, 3));
  Vector y(3);
  y << 2.0, -1.0, 0.5;
  SolverConfig cfg;
  // projected gradient descent; projected Adam does not settle on the
  // boundary minimizer
  cfg.projection.optimizer.kind = OptimizerKind::gradient_descent;
  cfg.projection.steps = 500;
  cfg.projection.learning_rate = 1.0;
  const auto res = csgm_baseline(op, y, d, cfg);
  EXPECT_LE((res.x - y / y.norm()).norm(), 1e-3);
}

TEST(Csgm, FeasibleOnRandomInstance) {
  DecoderSpec s;
  s.seed = 1;
  s.latent_dim = 4;
  s.hidden_dims = {16};
  s.ambient_dim = 32;
  s.latent_radius = 1.5;
  const auto d = GenerativeDecoder::create(s);
  const auto op = SensingOperator::create({SensingKind::dense_gaussian, 20, 32, 4});
  Rng rng(2);
  const Vector y = gaussian_vector(rng, 20);
  SolverConfig cfg;
  cfg.projection.restarts = 2;
  const auto c = csgm_baseline(op, y, d, cfg);
  EXPECT_LE(c.z.norm(), 1.5 + 1e-12);
  EXPECT_EQ(c.x, d.forward(c.z));
  SolverConfig g;
  g.iterations = 3;
  g.projection.steps = 20;
  const auto pg = pgd_glasso(op, y, d, g);
  EXPECT_EQ(pg.x, d.forward(pg.z));
}
