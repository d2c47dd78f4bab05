#include "rispar/errors.hpp"
#include "rispar/vamp.hpp"
#include "test_util.hpp"

#include <doctest.h>

#include <Eigen/LU>

#include <cmath>

using namespace rispar;
using testutil::max_abs_diff;
using testutil::random_matrix;

namespace {

// Exact Gaussian posterior of x ~ CN(mu, diag(v)) given y = A x + CN(0, sigma2 I).
struct Posterior {
    ComplexVector mean;
    RealVector var;
};

Posterior gaussian_posterior(const ComplexMatrix& a, const ComplexVector& y,
                             const GaussianPrior& prior, double sigma2) {
    const ComplexMatrix prec = a.adjoint() * a / sigma2 +
                               ComplexMatrix(prior.var.cwiseInverse().cast<Complex>().asDiagonal());
    const ComplexMatrix cov = prec.inverse();
    const ComplexVector info =
        a.adjoint() * y / sigma2 + prior.mean.cwiseQuotient(prior.var.cast<Complex>());
    return {cov * info, cov.diagonal().real()};
}

}  // namespace

TEST_CASE("VAMP with an identity operator and tiny noise returns the observation") {
    const ComplexVector y = random_matrix(6, 1, 1).col(0);
    const VampColumnResult r =
        vamp_column(y, ComplexMatrix::Identity(6, 6), GaussianPrior::standard(6), 1e-12);
    CHECK(max_abs_diff(r.mean, y) < 1e-6);
}

TEST_CASE("VAMP approaches least squares at high SNR") {
    const ComplexMatrix a = random_matrix(8, 4, 2);
    const ComplexVector y = random_matrix(8, 1, 3).col(0);
    const VampColumnResult r = vamp_column(y, a, GaussianPrior::standard(4), 1e-6);
    const ComplexVector ls_ne = (a.adjoint() * a).inverse() * (a.adjoint() * y);
    CHECK(max_abs_diff(r.mean, ls_ne) < 1e-4);
}

TEST_CASE("VAMP in the vanishing-noise limit") {
    const ComplexMatrix a = random_matrix(8, 4, 15);
    const ComplexVector y = random_matrix(8, 1, 16).col(0);
    const ComplexVector ls_ne = (a.adjoint() * a).inverse() * (a.adjoint() * y);
    const VampColumnResult r = vamp_column(y, a, GaussianPrior::standard(4), 1e-10);
    CHECK((r.mean - ls_ne).norm() / ls_ne.norm() < 1e-4);

    // Posterior variances are positive and shrink with the noise.
    RealVector prev = RealVector::Constant(4, 1e300);
    for (double sigma2 : {1.0, 0.1, 0.01, 1e-4}) {
        const VampColumnResult s = vamp_column(y, a, GaussianPrior::standard(4), sigma2);
        CHECK((s.var.array() > 0.0).all());
        CHECK((s.var.array() < prev.array()).all());
        prev = s.var;
    }
}

TEST_CASE("VAMP reproduces the Gaussian posterior") {
    const ComplexMatrix a = random_matrix(10, 4, 4);
    const ComplexVector y = random_matrix(10, 1, 5).col(0);
    const double sigma2 = 0.5;

    SUBCASE("uniform prior: mean and variance") {
        GaussianPrior prior{random_matrix(4, 1, 6).col(0), RealVector::Constant(4, 2.0)};
        const VampColumnResult r = vamp_column(y, a, prior, sigma2, {1e-20, 200});
        const Posterior exact = gaussian_posterior(a, y, prior, sigma2);
        CHECK(max_abs_diff(r.mean, exact.mean) < 1e-10);
        CHECK((r.var - exact.var).cwiseAbs().maxCoeff() < 1e-10);
        CHECK(r.converged);
    }
    SUBCASE("non-uniform prior: mean at the fixed point") {
        RealVector var(4);
        var << 0.5, 1.0, 2.0, 4.0;
        GaussianPrior prior{ComplexVector::Zero(4), var};
        const VampColumnResult r = vamp_column(y, a, prior, sigma2, {1e-24, 2000});
        const Posterior exact = gaussian_posterior(a, y, prior, sigma2);
        CHECK(max_abs_diff(r.mean, exact.mean) < 1e-6);
    }
    SUBCASE("underdetermined operator uses the prior on the null space") {
        const ComplexMatrix wide = random_matrix(3, 5, 7);
        const ComplexVector yw = random_matrix(3, 1, 8).col(0);
        const GaussianPrior prior = GaussianPrior::standard(5);
        const VampColumnResult r = vamp_column(yw, wide, prior, sigma2, {1e-20, 200});
        const Posterior exact = gaussian_posterior(wide, yw, prior, sigma2);
        CHECK(max_abs_diff(r.mean, exact.mean) < 1e-10);
        CHECK((r.var - exact.var).cwiseAbs().maxCoeff() < 1e-10);
    }
}

TEST_CASE("shared operator gives the same answer as a fresh one") {
    const ComplexMatrix a = random_matrix(12, 5, 9);
    const VampOperator op(a);
    CHECK(op.rank() == 5);
    CHECK(max_abs_diff(op.u() * op.s().asDiagonal() * op.v().adjoint(), a) < 1e-12);
    const ComplexVector y = random_matrix(12, 1, 10).col(0);
    const auto prior = GaussianPrior::standard(5);
    CHECK(max_abs_diff(vamp_column(y, op, prior, 0.1).mean, vamp_column(y, a, prior, 0.1).mean) ==
          0.0);
}

TEST_CASE("VAMP input validation") {
    const ComplexMatrix a = random_matrix(6, 3, 11);
    const ComplexVector y = random_matrix(6, 1, 12).col(0);
    CHECK_THROWS_AS(vamp_column(y, a, GaussianPrior::standard(3), 0.0), RejectedInput);
    CHECK_THROWS_AS(vamp_column(y, a, GaussianPrior::standard(3), -1.0), RejectedInput);
    CHECK_THROWS_AS(vamp_column(y, a, GaussianPrior::standard(4), 1.0), RejectedInput);
    GaussianPrior bad = GaussianPrior::standard(3);
    bad.var(1) = 0.0;
    CHECK_THROWS_AS(vamp_column(y, a, bad, 1.0), RejectedInput);
    CHECK_THROWS_AS(vamp_column(random_matrix(5, 1, 13).col(0), a, GaussianPrior::standard(3), 1.0),
                    RejectedInput);
}

TEST_CASE("zero observation with a zero-mean prior stays at zero") {
    const ComplexMatrix a = random_matrix(6, 3, 14);
    const VampColumnResult r =
        vamp_column(ComplexVector::Zero(6), a, GaussianPrior::standard(3), 0.1, {1e-5, 5});
    CHECK(r.mean.norm() == 0.0);
}

TEST_CASE("VAMP and ALS reach similar NMSE on the tensor model") {
    SystemConfig cfg;
    cfg.K = cfg.M = cfg.T = 8;
    cfg.N = cfg.P = 8;
    cfg.snr_db = 10.0;
    double als_total = 0.0;
    double vamp_total = 0.0;
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        Rng rng(1000 + seed);
        const ChannelPair ch = gen_channels(cfg, rng);
        const TrainingSet tr = gen_training(cfg);
        const RxTensor rx = synthesize_rx(ch, tr, cfg, rng);
        const EstimateResult e_als = als_estimate(rx, tr.phi);
        const EstimateResult e_vamp =
            vamp_estimate(rx, tr.phi, VampPriors::standard(8), cfg.noise_var());
        // The cascaded channel is free of the scaling ambiguity.
        const ComplexMatrix truth = ch.hr * ch.hs;
        als_total += nmse(truth, e_als.hr * e_als.hs);
        vamp_total += nmse(truth, e_vamp.hr * e_vamp.hs);
    }
    CHECK(std::abs(10.0 * std::log10(vamp_total / als_total)) < 1.0);
}

TEST_CASE("vamp_estimate in the vanishing-noise limit") {
    SystemConfig cfg;
    cfg.K = cfg.M = cfg.T = 6;
    cfg.N = cfg.P = 4;
    cfg.noiseless = true;
    Rng rng(17);
    const ChannelPair ch = gen_channels(cfg, rng);
    const TrainingSet tr = gen_training(cfg);
    const RxTensor rx = synthesize_rx(ch, tr, cfg, rng);
    const EstimateResult est = vamp_estimate(rx, tr.phi, VampPriors::standard(4), 1e-10);
    const ChannelPair fixed = remove_ambiguity(est.hr, est.hs, ch);
    CHECK(nmse(ch.hr, fixed.hr) <= 1e-6);
    CHECK(nmse(ch.hs, fixed.hs) <= 1e-6);
    const EstimateResult again = vamp_estimate(rx, tr.phi, VampPriors::standard(4), 1e-10);
    CHECK(again.hr == est.hr);
}

TEST_CASE("vamp_estimate input validation") {
    SystemConfig cfg;
    cfg.K = cfg.M = cfg.T = cfg.N = cfg.P = 4;
    Rng rng(3);
    const ChannelPair ch = gen_channels(cfg, rng);
    const TrainingSet tr = gen_training(cfg);
    const RxTensor rx = synthesize_rx(ch, tr, cfg, rng);
    CHECK_THROWS_AS(vamp_estimate(rx, tr.phi, VampPriors::standard(4), 0.0), RejectedInput);
    CHECK_THROWS_AS(vamp_estimate(rx, tr.phi, VampPriors::standard(3), 0.1), RejectedInput);
    const EstimateResult r = vamp_estimate(rx, tr.phi, VampPriors::standard(4), 0.1, {1e-5, 4});
    CHECK(r.iterations <= 4);
    CHECK(r.residual_trace.size() == static_cast<std::size_t>(r.iterations));
}
