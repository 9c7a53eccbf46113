// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any fails.
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <numbers>
#include <string>
#include <vector>

#include "cocycle/exceptional.hpp"
#include "cocycle/experiment.hpp"
#include "cocycle/lyapunov.hpp"
#include "cocycle/operator_lab.hpp"
#include "cocycle/subharmonic.hpp"
#include "cocycle/symplectic.hpp"
#include "oracles.hpp"

using namespace cocycle;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

std::string fmt(const char* f, auto... args) {
    char buf[512];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

constexpr std::uint64_t kSeed = 20240601;

Outcome pairing() {
    double worst = 0.0;
    for (int w = 1; w <= 3; ++w) {
        const auto est = lyapunov_spectrum(PotentialModel::anderson_bernoulli(w, 1.0, w > 1), 0.5, 10000, 1, {kSeed});
        worst = std::max(worst, est.raw_pairing_defect);
    }
    return {worst <= 1e-8, fmt("max_j |g_j + g_(2W+1-j)|/n = %.3e (bound 1e-8)", worst)};
}

Outcome free_exponent() {
    const auto free = PotentialModel::free(1);
    const double g3 = lyapunov_spectrum(free, 3.0, 100000, 1, {kSeed}).gamma(0);
    const double g0 = lyapunov_spectrum(free, 0.0, 100000, 1, {kSeed}).gamma(0);
    const double err = std::abs(g3 - std::log((3.0 + std::sqrt(5.0)) / 2.0));
    return {err <= 1e-3 && g0 <= 1e-2, fmt("|gamma(3) - log((3+sqrt5)/2)| = %.2e, gamma(0) = %.2e", err, g0)};
}

Outcome lloyd() {
    double worst = 0.0;
    for (double e : {-2.0, -1.0, 0.0, 1.0, 2.0}) {
        const auto est = lyapunov_spectrum(PotentialModel::lloyd(1, 1.0), e, 125000, 8, {kSeed});
        worst = std::max(worst, std::abs(est.gamma(0) - oracle::gamma_free(Complex(e, 1.0))));
    }
    return {worst <= 2e-2, fmt("max_E |gamma(E) - gamma_free(E+i)| = %.3e (bound 2e-2)", worst)};
}

Outcome thouless() {
    double worst = 0.0;
    std::size_t excluded = 0;
    for (const auto& model : {PotentialModel::free(1), PotentialModel::anderson_bernoulli(1)}) {
        const auto ids = ids_estimate(model, 2000, 50, {kSeed});
        const auto pts = thouless_test_points(ids, 9);
        std::vector<double> gamma;
        for (const auto& z : pts) gamma.push_back(lyapunov_spectrum(model, z, 20000, 4, {kSeed + 1}).gamma(0));
        const auto rep = thouless_residual(pts, gamma, ids);
        worst = std::max(worst, rep.residual);
        excluded += rep.excluded;
    }
    return {worst <= 5e-2, fmt("sup |Gamma_1(z) - mean log|z-E_i|| = %.3e (bound 5e-2), excluded %zu", worst, excluded)};
}

Outcome riesz() {
    const auto grid = ComplexGrid::make(-6.0, 6.0, -3.0, 3.0, 0.05);
    const double slice = oracle::kappa_free(1.0) - oracle::kappa_free(-1.0);
    const auto exact = riesz_measure(sample_field(grid, 1, free_gamma));
    const bool exact_ok = std::abs(exact.total - 1.0) <= 0.05 && std::abs(exact.strip_mass(-1.0, 1.0) - slice) <= 0.02;
    const auto mc = riesz_measure(field_gamma(PotentialModel::free(1), grid, 1000, 1, 1, {kSeed}));
    const bool mc_ok = std::abs(mc.total - 1.0) <= 0.15 && std::abs(mc.strip_mass(-1.0, 1.0) - slice) <= 0.06;
    return {exact_ok || mc_ok,
            fmt("analytic: total %.4f (clipped %.4f, signed %.5f), strip %.5f [%s]; "
                "Monte-Carlo n=1000 (3x tol): total %.4f, strip %.5f [%s]",
                exact.total, exact.negative_clipped, exact.total - exact.negative_clipped, exact.strip_mass(-1.0, 1.0),
                exact_ok ? "ok" : "miss", mc.total, mc.strip_mass(-1.0, 1.0), mc_ok ? "ok" : "miss")};
}

Outcome wedge() {
    double worst = 0.0;
    std::uint64_t seed = kSeed;
    for (int dim : {4, 6}) {
        for (int i = 0; i < 100; ++i) {
            const auto a = oracle::random_complex(dim, dim, seed++);
            for (int k = 1; k < dim; ++k) {
                const double ours = wedge_logsum(a, k);
                const double ref = std::log(oracle::largest_singular(oracle::minors_matrix(a, k)));
                worst = std::max(worst, std::abs(ours - ref) / std::max(1.0, std::abs(ref)));
            }
        }
    }
    return {worst <= 1e-10, fmt("max deviation from the minors oracle = %.2e (bound 1e-10)", worst)};
}

Outcome circular() {
    const auto free = circular_mean(PotentialModel::free(1), 5.0, 128, 10000, 1, {kSeed});
    const auto and2 = circular_mean(PotentialModel::anderson_bernoulli(2, 1.0, true), 100.0, 128, 1000, 4, {kSeed});
    const double e_free = std::abs(free.mean(0) - std::log(5.0));
    const double e1 = std::abs(and2.mean(0) - std::log(100.0));
    const double ew = std::abs(and2.mean(1) - std::log(100.0));
    return {e_free <= 1e-3 && e1 <= 0.1 && ew <= 0.1 && and2.mean(0) >= and2.mean(1),
            fmt("|M_1(5) - log 5| = %.2e; Anderson W=2: |M_1(100) - log 100| = %.3e, |M_W(100) - log 100| = %.3e",
                e_free, e1, ew)};
}

Outcome doubling() {
    const auto model = PotentialModel::anderson_bernoulli(2, 1.0, true);
    bool ok = true;
    double worst = -1e300;
    for (std::size_t n : {64, 128, 256}) {
        const auto r = doubling_check(model, Complex(0.5, 0.5), n, 500, {kSeed});
        ok = ok && r.holds(3.0);
        for (int k = 0; k < r.a_n.size(); ++k)
            worst = std::max(worst, (r.a_2n(k) - r.a_n(k)) / (r.stderr_n(k) + r.stderr_2n(k)));
    }
    return {ok, fmt("max_k,n (a_2n - a_n)/sigma = %.3f (bound 3)", worst)};
}

Outcome ldp() {
    const auto model = PotentialModel::anderson_bernoulli(1);
    const auto ref = lyapunov_spectrum(model, 0.5, 200000, 8, {kSeed + 2});
    const auto c = ldp_tail(model, 0.5, 1, 0.1, {200, 400, 800, 1600}, 4000, ref, {kSeed});
    bool decreasing = true;
    for (std::size_t i = 0; i + 1 < c.p_hat.size(); ++i) decreasing = decreasing && c.p_hat[i + 1] < c.p_hat[i];
    const bool ok = decreasing && !c.censored && c.rate > 0.0 && c.r_squared >= 0.9;
    return {ok, fmt("p_hat = {%.4g, %.4g, %.4g, %.4g}, rate %.4g, R^2 %.3f%s", c.p_hat[0], c.p_hat[1], c.p_hat[2],
                    c.p_hat[3], c.rate, c.r_squared, c.censored ? " (censored: fewer than two positive p_hat)" : "")};
}

Outcome subseq() {
    const auto model = PotentialModel::anderson_bernoulli(1);
    const auto ref = lyapunov_spectrum(model, 0.5, 200000, 8, {kSeed + 2});
    const auto rec = subseq_statistic(model, {kSeed}, 0.5, 100000, ref.gamma, 1000);
    return {rec.min_value <= 0.05, fmt("min over 1000 <= n <= 1e5 = %.3e at n = %zu (bound 0.05)", rec.min_value, rec.argmin)};
}

Outcome restricted() {
    const auto model = PotentialModel::anderson_bernoulli(2, 1.0, true);
    const Complex z(0.0, 1.0);
    const std::size_t n = 10000;
    const std::size_t ref_samples = 16;
    const auto ref = lyapunov_spectrum(model, z, n, ref_samples, {kSeed + 2});
    const double target = ref.partial_sum(1);
    const double run_sd = ref.partial_sum_stderr(1) * std::sqrt(static_cast<double>(ref_samples));
    const double sigma = std::hypot(ref.partial_sum_stderr(1), run_sd);
    double worst_dev = 0.0;
    double worst_excess = -1e300;
    for (std::uint64_t f = 0; f < 20; ++f) {
        const auto r = restricted_growth(model, {kSeed + 100 + f}, z, random_lagrangian(2, kSeed + f), n);
        worst_dev = std::max(worst_dev, std::abs(r.total_rate - target) / sigma);
        worst_excess = std::max(worst_excess, r.total_rate - r.unrestricted_rate);
    }
    return {worst_dev <= 3.0 && worst_excess <= 1e-8,
            fmt("Gamma_W(i) = %.5f, sigma %.2e: max deviation %.2f sigma; max restricted - unrestricted = %.2e",
                target, sigma, worst_dev, worst_excess)};
}

Outcome cover() {
    const auto model = PotentialModel::anderson_bernoulli(1);
    const double ref = lyapunov_spectrum(model, 0.0, 4000, 8, {kSeed + 2}).gamma(0);
    const auto root = gauge_power(0.5);
    std::vector<double> levels, log_max, content;
    std::string per;
    for (std::size_t level : {55, 90, 148}) {
        const auto c = build_cover(model, {kSeed}, 0.0, 1.0, 0.2, level, ref, ref);
        levels.push_back(static_cast<double>(level));
        log_max.push_back(c.max_length() > 0.0 ? std::log(c.max_length()) : -1e300);
        content.push_back(gauge_content(c, root));
        per += fmt(" n=%zu: %zu intervals, max %.4g, content %.4g;", level, c.intervals.size(), c.max_length(),
                   content.back());
    }
    // An empty cover has max length 0, which counts as smaller than any positive length.
    bool ok = log_max[1] < log_max[0] && log_max[2] < log_max[1] && content[1] < content[0] && content[2] < content[1];
    std::vector<double> fit_n, fit_log;
    for (std::size_t i = 0; i < levels.size(); ++i)
        if (log_max[i] > -1e300) {
            fit_n.push_back(levels[i]);
            fit_log.push_back(log_max[i]);
        }
    double rate = 0.0;
    if (fit_n.size() >= 2) rate = -fit_line(fit_n, fit_log).slope;
    ok = ok && fit_n.size() >= 2 && rate > 0.0;
    per += fmt(" fit over %zu non-empty levels,", fit_n.size());
    return {ok, fmt("%s fitted rate %.4g", per.c_str(), rate)};
}

Outcome green() {
    const auto probe = green_block(PotentialModel::anderson_bernoulli(1), {kSeed}, Complex(0.5, 1.0), 60, 200);
    const Complex zf(0.5, 1.0);
    const auto free = green_block(PotentialModel::free(1), {kSeed}, zf, 60, 200);
    const double free_err = std::abs(free.rate - std::log(oracle::larger_root_modulus(zf)));
    return {probe.r_squared >= 0.99 && probe.rate > 0.0 && free_err <= 1e-3,
            fmt("Anderson: rate %.4f, R^2 %.5f; free |rate + log|zeta|| = %.2e", probe.rate, probe.r_squared, free_err)};
}

Outcome determinism() {
    using nlohmann::json;
    const std::vector<json> docs = {
        {{"version", "1"}, {"seed", 5}, {"task", "lyapunov"}, {"model", {{"kind", "anderson"}, {"width", 2}}},
         {"params", {{"z", json::array({0.3, 0.1})}, {"n", 2000}, {"samples", 6}}}},
        {{"version", "1"}, {"seed", 5}, {"task", "field"}, {"model", {{"kind", "lloyd"}, {"width", 1}}},
         {"params", {{"grid", {{"x0", -1}, {"x1", 1}, {"y0", 0.5}, {"y1", 1.5}, {"h", 0.1}}}, {"n", 200}, {"samples", 2}}}},
        {{"version", "1"}, {"seed", 5}, {"task", "cover"}, {"model", {{"kind", "anderson"}, {"width", 1}}},
         {"params", {{"a", 0}, {"b", 1}, {"eps", 0.2}, {"levels", {30, 55}}, {"ref_n", 1000}, {"ref_samples", 2}}}},
    };
    const auto tmp = std::filesystem::temp_directory_path() / "cocycle_acceptance";
    std::size_t files = 0;
    bool same = true;
    for (std::size_t i = 0; i < docs.size(); ++i) {
        auto cfg = parse_config(docs[i]);
        const auto a = run_experiment(cfg, tmp / ("a" + std::to_string(i)));
        cfg.threads = 2;
        const auto b = run_experiment(cfg, tmp / ("b" + std::to_string(i)));
        same = same && a.outputs.size() == b.outputs.size();
        for (std::size_t j = 0; same && j < a.outputs.size(); ++j) {
            same = a.outputs[j].sha256 == b.outputs[j].sha256;
            ++files;
        }
    }
    std::filesystem::remove_all(tmp);
    return {same, fmt("%zu artifacts across lyapunov/field/cover re-runs compared by SHA-256", files)};
}

}  // namespace

int main() {
    struct Criterion {
        int id;
        const char* name;
        std::function<Outcome()> run;
        double budget_s;  ///< 0 = no stated limit
    };
    const std::vector<Criterion> criteria = {
        {1, "symplectic pairing", pairing, 10.0},
        {2, "free-model exponent", free_exponent, 5.0},
        {3, "Lloyd model", lloyd, 60.0},
        {4, "Thouless identity", thouless, 300.0},
        {5, "Riesz mass and arcsine slice", riesz, 600.0},
        {6, "wedge-power equivalence", wedge, 0.0},
        {7, "circular means", circular, 0.0},
        {8, "doubling monotonicity", doubling, 0.0},
        {9, "LDP decay", ldp, 0.0},
        {10, "subsequence statistic", subseq, 0.0},
        {11, "restricted growth", restricted, 0.0},
        {12, "cover shrinkage", cover, 0.0},
        {13, "Combes-Thomas probe", green, 0.0},
        {14, "determinism", determinism, 0.0},
    };
    int failures = 0;
    for (const auto& c : criteria) {
        const auto t0 = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = c.run();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        const double dt = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        const bool in_time = c.budget_s <= 0.0 || dt <= c.budget_s;
        const bool pass = o.pass && in_time;
        failures += pass ? 0 : 1;
        std::printf("%s [%2d] %s: %s (%.1f s%s)\n", pass ? "PASS" : "FAIL", c.id, c.name, o.detail.c_str(), dt,
                    in_time ? "" : ", over budget");
        std::fflush(stdout);
    }
    std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failures, criteria.size());
    return failures == 0 ? 0 : 1;
}
