#include "rispar/errors.hpp"
#include "rispar/precoding.hpp"
#include "test_util.hpp"

#include <doctest.h>

#include <Eigen/LU>

#include <cmath>

using namespace rispar;
using testutil::max_abs_diff;
using testutil::random_matrix;

namespace {

double objective(const ComplexMatrix& hr, const ComplexMatrix& hs, const ComplexVector& v) {
    const ComplexMatrix phi = v.conjugate().asDiagonal();
    return (hr * phi * hs).squaredNorm();
}

// Best objective over all phase vectors drawn from `levels` uniform phases,
// first entry pinned to 1 (the objective is invariant to a common phase).
double exhaustive_best(const ComplexMatrix& hr, const ComplexMatrix& hs, int levels) {
    const int n = static_cast<int>(hs.rows());
    int total = 1;
    for (int i = 1; i < n; ++i) total *= levels;
    double best = 0.0;
    ComplexVector v(n);
    for (int code = 0; code < total; ++code) {
        v(0) = 1.0;
        int c = code;
        for (int i = 1; i < n; ++i) {
            v(i) = std::polar(1.0, 2.0 * M_PI * (c % levels) / levels);
            c /= levels;
        }
        best = std::max(best, objective(hr, hs, v));
    }
    return best;
}

}  // namespace

TEST_CASE("effective channel") {
    const ComplexMatrix hr = random_matrix(3, 4, 1);
    const ComplexMatrix hs = random_matrix(4, 5, 2);
    const ComplexMatrix phi = ComplexMatrix(random_matrix(4, 1, 3).col(0).asDiagonal());
    const ComplexMatrix h = effective_channel(hr, hs, phi);
    double worst = 0.0;
    for (int k = 0; k < 3; ++k)
        for (int m = 0; m < 5; ++m) {
            Complex s = 0.0;
            for (int n = 0; n < 4; ++n) s += hr(k, n) * phi(n, n) * hs(n, m);
            worst = std::max(worst, std::abs(s - h(k, m)));
        }
    CHECK(worst < 1e-14);

    const ComplexMatrix one = effective_channel(random_matrix(3, 1, 4), random_matrix(1, 2, 5),
                                                ComplexMatrix::Ones(1, 1));
    CHECK(one.rows() == 3);
    CHECK(numerical_rank(one) == 1);
    CHECK(effective_channel(hr, ComplexMatrix::Zero(4, 5), phi).norm() == 0.0);
    CHECK_THROWS_AS(effective_channel(hr, hs, ComplexMatrix::Identity(3, 3)), RejectedInput);
}

TEST_CASE("estimation error power") {
    const ComplexMatrix h = random_matrix(4, 6, 10);
    const ComplexMatrix h_hat = h + 0.1 * random_matrix(4, 6, 11);
    const RealVector eps = error_power_eps(h_hat, h, 2.0);
    const ComplexMatrix e = h_hat - h;
    for (int k = 0; k < 4; ++k) {
        // Row k of H_hat E^H, entry i = sum_m H_hat[k,m] conj(E[i,m]).
        double direct = 0.0;
        for (int i = 0; i < 4; ++i) {
            Complex acc = 0.0;
            for (int m = 0; m < 6; ++m) acc += h_hat(k, m) * std::conj(e(i, m));
            direct += std::norm(acc);
        }
        CHECK(eps(k) == doctest::Approx(2.0 * direct).epsilon(1e-12));
    }
    CHECK(max_abs_diff(error_power_eps(h_hat, h, 4.0).cast<Complex>(), (2.0 * eps).cast<Complex>()) <
          1e-12);
    CHECK(error_power_eps(h, h, 1.0).norm() == 0.0);

    // E = Er Phi Hs_hat + Hr_hat Phi Es - Er Phi Es for H = Hr Phi Hs.
    const ComplexMatrix hr = random_matrix(4, 3, 13);
    const ComplexMatrix hs = random_matrix(3, 6, 14);
    const ComplexMatrix er = 0.1 * random_matrix(4, 3, 15);
    const ComplexMatrix es = 0.1 * random_matrix(3, 6, 16);
    const ComplexMatrix phi = ComplexMatrix(random_matrix(3, 1, 17).col(0).asDiagonal());
    const ComplexMatrix hr_hat = hr + er;
    const ComplexMatrix hs_hat = hs + es;
    const ComplexMatrix expansion = er * phi * hs_hat + hr_hat * phi * es - er * phi * es;
    CHECK(max_abs_diff(expansion, hr_hat * phi * hs_hat - hr * phi * hs) < 1e-10);
    CHECK_THROWS_AS(error_power_eps(h, random_matrix(4, 5, 12), 1.0), RejectedInput);
}

TEST_CASE("precoders") {
    const ComplexMatrix h = random_matrix(4, 6, 20);
    PrecoderSpec spec{Scheme::MRT, 1.0, 0.5};
    CHECK(precoder(h, spec) == h.adjoint());

    spec.scheme = Scheme::ZF;
    const ComplexMatrix gzf = precoder(h, spec);
    CHECK(max_abs_diff(h * gzf, ComplexMatrix::Identity(4, 4)) < 1e-12);
    CHECK_THROWS_AS(precoder(random_matrix(6, 4, 21), spec), PrecoderInfeasible);
    ComplexMatrix rank_def = h;
    rank_def.row(3) = rank_def.row(0);
    CHECK_THROWS_AS(precoder(rank_def, spec), PrecoderInfeasible);

    spec.scheme = Scheme::MMSE;
    spec.sigma2 = 1e-10;
    CHECK(max_abs_diff(precoder(h, spec), gzf) < 1e-6);
    spec.sigma2 = 0.7;
    spec.pu = 2.0;
    const ComplexMatrix gm = precoder(h, spec);
    const ComplexMatrix oracle =
        h.adjoint() * (h * h.adjoint() + 0.35 * ComplexMatrix::Identity(4, 4)).inverse();
    CHECK(max_abs_diff(gm, oracle) < 1e-12);
    // More users than antennas uses the push-through form.
    const ComplexMatrix tall = random_matrix(6, 4, 22);
    const ComplexMatrix tall_oracle =
        tall.adjoint() * (tall * tall.adjoint() + 0.35 * ComplexMatrix::Identity(6, 6)).inverse();
    CHECK(max_abs_diff(precoder(tall, spec), tall_oracle) < 1e-10);

    CHECK(parse_scheme("zf") == Scheme::ZF);
    CHECK(scheme_name(Scheme::MMSE) == "mmse");
    CHECK_THROWS_AS(parse_scheme("svd"), RejectedInput);
    CHECK_THROWS_AS(precoder(h, {Scheme::MRT, 0.0, 1.0}), RejectedInput);
}

TEST_CASE("rates") {
    const ComplexMatrix h = random_matrix(4, 6, 30);
    const PrecoderSpec zf{Scheme::ZF, 3.0, 0.5};
    const RateReport perfect = rates_perfect(h, precoder(h, zf), zf);
    for (int k = 0; k < 4; ++k) {
        CHECK(perfect.per_user_rates(k) == doctest::Approx(std::log2(1.0 + 3.0 / 0.5)));
    }
    CHECK(perfect.sum_rate == doctest::Approx(4.0 * std::log2(7.0)));

    const PrecoderSpec mrt{Scheme::MRT, 1.0, 0.2};
    const ComplexMatrix g = precoder(h, mrt);
    const RateReport same = rates(h, h, g, mrt);
    const RateReport exact = rates_perfect(h, g, mrt);
    CHECK(max_abs_diff(same.per_user_rates.cast<Complex>(), exact.per_user_rates.cast<Complex>()) ==
          0.0);
    // MRT SINR written out for user 0.
    const ComplexMatrix hg = h * g;
    const double interference = hg.row(0).squaredNorm() - std::norm(hg(0, 0));
    const double sinr = h.row(0).squaredNorm() / (interference + 0.2);
    CHECK(exact.per_user_rates(0) == doctest::Approx(std::log2(1.0 + sinr)));

    const ComplexMatrix h_hat = h + 0.3 * random_matrix(4, 6, 31);
    for (Scheme s : {Scheme::MRT, Scheme::ZF, Scheme::MMSE}) {
        const PrecoderSpec spec{s, 1.0, 0.1};
        const RateReport est = rates(h, h_hat, precoder(h_hat, spec), spec);
        CHECK((est.per_user_rates.array() >= 0.0).all());
        CHECK(est.sum_rate == doctest::Approx(est.per_user_rates.sum()));
        CHECK((est.eps.array() > 0.0).all());
    }
    CHECK_THROWS_AS(rates_perfect(h, random_matrix(4, 4, 32), mrt), RejectedInput);
}

TEST_CASE("phase_gram reproduces the objective") {
    const ComplexMatrix hr = random_matrix(5, 4, 40);
    const ComplexMatrix hs = random_matrix(4, 6, 41);
    const ComplexMatrix c = phase_gram(hr, hs);
    CHECK(max_abs_diff(c, c.adjoint()) < 1e-12);
    const ComplexVector v = random_matrix(4, 1, 42).col(0);
    CHECK(v.dot(c * v).real() == doctest::Approx(objective(hr, hs, v)).epsilon(1e-12));
}

TEST_CASE("phase optimization") {
    SUBCASE("objective is non-decreasing and phases are unit modulus") {
        for (std::uint64_t seed = 50; seed < 55; ++seed) {
            const ComplexMatrix hr = random_matrix(4, 8, seed);
            const ComplexMatrix hs = random_matrix(8, 6, seed + 100);
            const PhaseOptimization opt = optimize_phase(hr, hs, 1e-12, 200);
            const auto& tr = opt.objective_trace;
            REQUIRE(tr.size() == static_cast<std::size_t>(opt.iterations) + 1);
            for (std::size_t i = 1; i < tr.size(); ++i) CHECK(tr[i] >= tr[i - 1] * (1.0 - 1e-12));
            CHECK((opt.v.v.cwiseAbs().array() - 1.0).abs().maxCoeff() < 1e-12);
            CHECK(max_abs_diff(opt.phi, ComplexMatrix(opt.v.v.conjugate().asDiagonal())) == 0.0);
            CHECK(tr.back() == doctest::Approx(objective(hr, hs, opt.v.v)).epsilon(1e-10));
            CHECK_FALSE(opt.zero_entry_fallback);
        }
    }
    SUBCASE("close to the exhaustive optimum over eight phases") {
        for (std::uint64_t seed = 60; seed < 64; ++seed) {
            const ComplexMatrix hr = random_matrix(3, 4, seed);
            const ComplexMatrix hs = random_matrix(4, 3, seed + 100);
            const PhaseOptimization opt = optimize_phase(hr, hs, 1e-12, 200);
            CHECK(objective(hr, hs, opt.v.v) >= 0.95 * exhaustive_best(hr, hs, 8));
        }
    }
    SUBCASE("all-ones is a fixed point when it is already optimal") {
        // Real positive channels make C_tilde entrywise positive.
        const ComplexMatrix hr = random_matrix(3, 4, 70).cwiseAbs().cast<Complex>();
        const ComplexMatrix hs = random_matrix(4, 5, 71).cwiseAbs().cast<Complex>();
        const PhaseOptimization opt = optimize_phase(hr, hs);
        CHECK(opt.iterations == 1);
        CHECK(max_abs_diff(opt.v.v, ComplexVector::Ones(4)) < 1e-12);
    }
    SUBCASE("identity gram keeps the all-ones start") {
        const ComplexMatrix hs = ComplexMatrix::Identity(4, 4);
        REQUIRE(max_abs_diff(phase_gram(ComplexMatrix::Ones(1, 4), hs), hs) == 0.0);
        const PhaseOptimization opt = optimize_phase(ComplexMatrix::Ones(1, 4), hs);
        CHECK(max_abs_diff(opt.v.v, ComplexVector::Ones(4)) == 0.0);
    }
    SUBCASE("single element") {
        const PhaseOptimization opt = optimize_phase(random_matrix(3, 1, 72), random_matrix(1, 4, 73));
        CHECK(opt.v.v.size() == 1);
        CHECK(std::abs(opt.v.v(0) - Complex(1.0, 0.0)) < 1e-12);
    }
    SUBCASE("a zero row of C_tilde falls back to unit phase") {
        ComplexMatrix hr = random_matrix(3, 3, 74);
        hr.col(2).setZero();
        const PhaseOptimization opt = optimize_phase(hr, random_matrix(3, 4, 75));
        CHECK(opt.zero_entry_fallback);
        CHECK(opt.v.v(2) == Complex(1.0, 0.0));
    }
    CHECK_THROWS_AS(optimize_phase(ComplexMatrix::Zero(2, 2), random_matrix(2, 2, 76)),
                    RejectedInput);
    CHECK_THROWS_AS(optimize_phase(random_matrix(2, 2, 77), random_matrix(2, 2, 78), 1e-5, 0),
                    RejectedInput);
}
