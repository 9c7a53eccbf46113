#include <doctest.h>

#include <cmath>

#include "cocycle/errors.hpp"
#include "cocycle/lyapunov.hpp"
#include "oracles.hpp"

using namespace cocycle;

TEST_CASE("free model: gamma(3) and gamma(0)") {
    const auto free = PotentialModel::free(1);
    const auto g3 = lyapunov_spectrum(free, 3.0, 100000, 1, {1});
    CHECK(std::abs(g3.gamma(0) - oracle::gamma_free(3.0)) <= 1e-3);
    CHECK(std::abs(g3.gamma(0) - 0.96242) <= 1e-3);
    const auto g0 = lyapunov_spectrum(free, 0.0, 100000, 1, {1});
    CHECK(g0.gamma(0) <= 1e-2);
}

TEST_CASE("Lloyd model: gamma(0) equals the free exponent at z = i") {
    const auto est = lyapunov_spectrum(PotentialModel::lloyd(1, 1.0), 0.0, 1000000, 8, {2});
    CHECK(std::abs(est.gamma(0) - oracle::gamma_free(Complex(0.0, 1.0))) <= 2e-2);
}

TEST_CASE("estimate shape: pairing, sorting and full spectrum") {
    const auto model = PotentialModel::anderson_bernoulli(3, 1.0, true);
    const auto est = lyapunov_spectrum(model, 0.4, 10000, 4, {3});
    CHECK(est.raw_pairing_defect <= 1e-8);
    for (int j = 0; j + 1 < 3; ++j) CHECK(est.gamma(j) >= est.gamma(j + 1));
    CHECK(est.gamma(2) >= 0.0);
    const RVector full = est.full();
    for (int j = 0; j < 3; ++j) CHECK(full(5 - j) == -full(j));
    for (int k = 0; k < 3; ++k) {
        double s = 0.0;
        for (int j = 0; j <= k; ++j) s += est.gamma(j);
        CHECK(est.partial_sum(k) == doctest::Approx(s).epsilon(1e-12));
    }
}

TEST_CASE("off-axis positivity of gamma_W for Im z >= 1") {
    for (const auto& model : {PotentialModel::free(2), PotentialModel::anderson_bernoulli(2, 1.0, true),
                              PotentialModel::lloyd(2, 0.5)}) {
        const auto est = lyapunov_spectrum(model, Complex(0.3, 1.0), 2000, 8, {4});
        CHECK(est.gamma(1) > 3.0 * est.stderr_(1));
    }
}

TEST_CASE("locally uniform convergence proxy: Gamma_W at n and 2n agree off the axis") {
    const auto model = PotentialModel::anderson_bernoulli(2, 1.0, true);
    for (Complex z : {Complex(0.0, 1.0), Complex(1.5, 1.5), Complex(-2.0, 1.0)}) {
        const auto a = lyapunov_spectrum(model, z, 2000, 16, {5});
        const auto b = lyapunov_spectrum(model, z, 4000, 16, {6});
        CHECK(std::abs(a.partial_sum(1) - b.partial_sum(1)) <=
              3.0 * (a.partial_sum_stderr(1) + b.partial_sum_stderr(1)) + 2e-3);
    }
}

TEST_CASE("stride > 1 agrees with stride 1 and is bounded") {
    const auto model = PotentialModel::anderson_bernoulli(2, 1.0, true);
    RunOptions opt;
    opt.stride = 5;
    const auto a = lyapunov_spectrum(model, 0.5, 5000, 2, {7});
    const auto b = lyapunov_spectrum(model, 0.5, 5000, 2, {7}, opt);
    CHECK((a.gamma - b.gamma).cwiseAbs().maxCoeff() <= 1e-8);
    opt.stride = 11;
    CHECK_THROWS_AS(lyapunov_spectrum(model, 0.5, 5000, 2, {7}, opt), ValidationError);
    CHECK_THROWS_AS(lyapunov_spectrum(model, 0.5, 99, 2, {7}), ValidationError);
}

TEST_CASE("thread count does not change results") {
    const auto model = PotentialModel::anderson_bernoulli(2, 1.0, true);
    RunOptions many;
    many.threads = 4;
    const auto a = lyapunov_spectrum(model, Complex(0.2, 0.1), 1000, 12, {8});
    const auto b = lyapunov_spectrum(model, Complex(0.2, 0.1), 1000, 12, {8}, many);
    CHECK(a.gamma == b.gamma);
    CHECK(a.stderr_ == b.stderr_);
}

TEST_CASE("ldp_tail: deterministic and saturated cases are censored") {
    const auto constant = PotentialModel::constant(RMatrix::Constant(1, 1, 3.0));
    const auto ref_c = lyapunov_spectrum(constant, 0.5, 20000, 1, {9});
    const auto c = ldp_tail(constant, 0.5, 1, 0.1, {200, 400, 800}, 1000, ref_c, {9});
    for (double p : c.p_hat) CHECK(p == 0.0);
    CHECK(c.censored);
    CHECK(c.rate == doctest::Approx(-std::log(3.0 / 1000.0) / 800.0));

    const auto anderson = PotentialModel::anderson_bernoulli(1);
    const auto ref = lyapunov_spectrum(anderson, 0.5, 100000, 8, {10});
    const auto big = ldp_tail(anderson, 0.5, 1, 1.0, {1000, 2000}, 1000, ref, {11});
    for (double p : big.p_hat) CHECK(p == 0.0);
}

TEST_CASE("ldp_tail: probabilities fall with n at a resolvable epsilon") {
    const auto anderson = PotentialModel::anderson_bernoulli(1);
    const auto ref = lyapunov_spectrum(anderson, 0.5, 100000, 8, {10});
    const auto curve = ldp_tail(anderson, 0.5, 1, 0.03, {100, 200, 400}, 2000, ref, {12});
    for (double p : curve.p_hat) CHECK((p >= 0.0 && p <= 1.0));
    CHECK(curve.p_hat[0] > curve.p_hat[1]);
    CHECK(curve.p_hat[1] > curve.p_hat[2]);
    CHECK(curve.rate > 0.0);
    CHECK_THROWS_AS(ldp_tail(anderson, 0.5, 1, 0.1, {100}, 999, ref, {1}), ValidationError);
    CHECK_THROWS_AS(ldp_tail(anderson, 0.5, 2, 0.1, {100}, 1000, ref, {1}), ValidationError);
}

TEST_CASE("doubling_check: constant, free and Anderson") {
    RMatrix v(2, 2);
    v << 0.5, 0.2, 0.2, -1.0;
    const auto c = doubling_check(PotentialModel::constant(v), Complex(0.3, 0.4), 32, 100, {1});
    for (int k = 0; k < 2; ++k) CHECK(c.a_2n(k) <= c.a_n(k) + 1e-12);

    const auto free = PotentialModel::free(1);
    double prev = std::numeric_limits<double>::infinity();
    for (std::size_t n : {8, 16, 32, 64}) {
        const auto r = doubling_check(free, 3.0, n, 100, {1});
        CHECK(r.a_n(0) <= prev + 1e-12);
        CHECK(r.a_2n(0) <= r.a_n(0) + 1e-12);
        prev = r.a_n(0);
    }
    CHECK(std::abs(prev - oracle::gamma_free(3.0)) <= 0.02);

    const auto r = doubling_check(PotentialModel::anderson_bernoulli(2, 1.0, true), Complex(0.5, 0.5), 256, 500, {2});
    CHECK(r.holds());
    CHECK_THROWS_AS(doubling_check(free, 3.0, 8, 99, {1}), ValidationError);
}

TEST_CASE("fit_line recovers an exact line") {
    const auto f = fit_line({1, 2, 3, 4}, {3, 5, 7, 9});
    CHECK(f.slope == doctest::Approx(2.0));
    CHECK(f.intercept == doctest::Approx(1.0));
    CHECK(f.r_squared == doctest::Approx(1.0));
}
