#include "cocycle/lyapunov.hpp"

#include <algorithm>
#include <cmath>

#include "cocycle/errors.hpp"
#include "cocycle/parallel.hpp"

namespace cocycle {

RVector raw_logstretch(const PotentialModel& model, const OrbitSeed& seed, Complex z, std::size_t n,
                       std::size_t stride) {
    auto cursor = CocycleCursor::start(model.width, z, 2 * model.width);
    run_cursor(model, seed, cursor, n, stride);
    return cursor.logstretch;
}

RVector LyapunovEstimate::full() const {
    const auto w = gamma.size();
    RVector out(2 * w);
    out.head(w) = gamma;
    out.tail(w) = -gamma.reverse();
    return out;
}

LyapunovEstimate lyapunov_spectrum(const PotentialModel& model, Complex z, std::size_t n, std::size_t samples,
                                   const OrbitSeed& seed, const RunOptions& options) {
    if (n < 100) throw ValidationError("lyapunov_spectrum", "n must be at least 100");
    if (samples < 1) throw ValidationError("lyapunov_spectrum", "samples must be at least 1");
    if (options.stride < 1 || options.stride > 10)
        throw ValidationError("lyapunov_spectrum", "stride must lie in 1..10");
    const int w = model.width;
    std::vector<RVector> raw(samples);
    parallel_for(samples, options.threads, [&](std::size_t s) {
        raw[s] = raw_logstretch(model, seed.member(s), z, n, options.stride);
    });

    LyapunovEstimate est;
    est.z = z;
    est.steps = n;
    est.samples = samples;
    est.gamma.resize(w);
    est.stderr_.resize(w);
    est.partial_sum.resize(w);
    est.partial_sum_stderr.resize(w);
    const double dn = static_cast<double>(n);
    std::vector<double> per_sample(samples);
    std::vector<double> partial(samples, 0.0);
    for (int j = 0; j < w; ++j) {
        for (std::size_t s = 0; s < samples; ++s) {
            per_sample[s] = (raw[s](j) - raw[s](2 * w - 1 - j)) / (2.0 * dn);
            partial[s] += per_sample[s];
        }
        const auto g = mean_and_error(per_sample);
        const auto p = mean_and_error(partial);
        est.gamma(j) = g.mean;
        est.stderr_(j) = g.stderr_;
        est.partial_sum(j) = p.mean;
        est.partial_sum_stderr(j) = p.stderr_;
    }
    for (const auto& r : raw)
        for (int j = 0; j < w; ++j)
            est.raw_pairing_defect = std::max(est.raw_pairing_defect, std::abs(r(j) + r(2 * w - 1 - j)) / dn);
    return est;
}

LinearFit fit_line(const std::vector<double>& x, const std::vector<double>& y) {
    LinearFit f;
    const auto m = static_cast<double>(x.size());
    if (x.size() < 2) return f;
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= m;
    my /= m;
    double sxx = 0.0, sxy = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxx += (x[i] - mx) * (x[i] - mx);
        sxy += (x[i] - mx) * (y[i] - my);
        syy += (y[i] - my) * (y[i] - my);
    }
    f.slope = sxx > 0.0 ? sxy / sxx : 0.0;
    f.intercept = my - f.slope * mx;
    f.r_squared = (sxx > 0.0 && syy > 0.0) ? (sxy * sxy) / (sxx * syy) : 1.0;
    return f;
}

LdpCurve ldp_tail(const PotentialModel& model, double energy, int j, double epsilon,
                  std::vector<std::size_t> n_list, std::size_t ensemble, const LyapunovEstimate& gamma_ref,
                  const OrbitSeed& seed, const RunOptions& options) {
    const int w = model.width;
    if (j < 1 || j > w) throw ValidationError("ldp_tail", "index j must lie in 1..W");
    if (!(epsilon > 0.0)) throw ValidationError("ldp_tail", "epsilon must be positive");
    if (n_list.empty()) throw ValidationError("ldp_tail", "n_list is empty");
    if (ensemble < 1000) throw ValidationError("ldp_tail", "ensemble size must be at least 1000");
    if (gamma_ref.width() != w) throw ValidationError("ldp_tail", "reference estimate has the wrong width");
    std::sort(n_list.begin(), n_list.end());
    n_list.erase(std::unique(n_list.begin(), n_list.end()), n_list.end());
    if (n_list.front() < 1) throw ValidationError("ldp_tail", "step counts must be positive");

    const double target = gamma_ref.gamma(j - 1);
    const std::size_t levels = n_list.size();
    // exceed[r * levels + l]: run r deviates by >= epsilon at checkpoint l
    std::vector<unsigned char> exceed(ensemble * levels, 0);
    parallel_for(ensemble, options.threads, [&](std::size_t r) {
        const OrbitSeed member = seed.member(r);
        auto cursor = CocycleCursor::start(w, Complex(energy, 0.0), 2 * w);
        std::size_t level = 0;
        run_cursor(model, member, cursor, n_list.back(), 1, [&](const CocycleCursor& c) {
            if (level < levels && c.steps == n_list[level]) {
                const double rate = c.logstretch(j - 1) / static_cast<double>(c.steps);
                exceed[r * levels + level] = std::abs(rate - target) >= epsilon ? 1 : 0;
                ++level;
            }
        });
    });

    LdpCurve curve;
    curve.energy = energy;
    curve.index = j;
    curve.epsilon = epsilon;
    curve.n_list = n_list;
    curve.ensemble = ensemble;
    curve.p_hat.assign(levels, 0.0);
    for (std::size_t l = 0; l < levels; ++l) {
        std::size_t count = 0;
        for (std::size_t r = 0; r < ensemble; ++r) count += exceed[r * levels + l];
        curve.p_hat[l] = static_cast<double>(count) / static_cast<double>(ensemble);
    }
    std::vector<double> xs, ys;
    for (std::size_t l = 0; l < levels; ++l) {
        if (curve.p_hat[l] > 0.0) {
            xs.push_back(static_cast<double>(n_list[l]));
            ys.push_back(-std::log(curve.p_hat[l]));
        }
    }
    if (xs.size() >= 2) {
        const LinearFit fit = fit_line(xs, ys);
        curve.rate = fit.slope;
        curve.log_prefactor = -fit.intercept;
        curve.r_squared = fit.r_squared;
    } else {
        // Rule of three: p <= 3/M at the largest n.
        curve.censored = true;
        curve.rate = -std::log(3.0 / static_cast<double>(ensemble)) / static_cast<double>(n_list.back());
    }
    return curve;
}

bool DoublingRecord::holds(double sigmas, double slack) const {
    for (Eigen::Index k = 0; k < a_n.size(); ++k)
        if (a_2n(k) > a_n(k) + sigmas * (stderr_n(k) + stderr_2n(k)) + slack) return false;
    return true;
}

DoublingRecord doubling_check(const PotentialModel& model, Complex z, std::size_t n, std::size_t samples,
                              const OrbitSeed& seed, const RunOptions& options) {
    if (samples < 100) throw ValidationError("doubling_check", "samples must be at least 100");
    if (n < 1) throw ValidationError("doubling_check", "n must be positive");
    const int w = model.width;
    std::vector<RVector> at_n(samples), at_2n(samples);
    parallel_for(samples, options.threads, [&](std::size_t s) {
        const OrbitSeed member = seed.member(s);
        std::vector<WedgeProduct> products;
        for (int k = 1; k <= w; ++k) products.emplace_back(w, k, z);
        at_n[s].resize(w);
        at_2n[s].resize(w);
        RMatrix v(w, w);
        for (std::size_t m = 1; m <= 2 * n; ++m) {
            potential_into(model, member, m, v);
            for (auto& p : products) p.multiply(v);
            if (m == n)
                for (int k = 0; k < w; ++k) at_n[s](k) = products[k].log_norm() / static_cast<double>(n);
        }
        for (int k = 0; k < w; ++k) at_2n[s](k) = products[k].log_norm() / static_cast<double>(2 * n);
    });
    DoublingRecord rec;
    rec.n = n;
    rec.samples = samples;
    rec.a_n.resize(w);
    rec.a_2n.resize(w);
    rec.stderr_n.resize(w);
    rec.stderr_2n.resize(w);
    std::vector<double> col(samples);
    for (int k = 0; k < w; ++k) {
        for (std::size_t s = 0; s < samples; ++s) col[s] = at_n[s](k);
        const auto a = mean_and_error(col);
        for (std::size_t s = 0; s < samples; ++s) col[s] = at_2n[s](k);
        const auto b = mean_and_error(col);
        rec.a_n(k) = a.mean;
        rec.stderr_n(k) = a.stderr_;
        rec.a_2n(k) = b.mean;
        rec.stderr_2n(k) = b.stderr_;
    }
    return rec;
}

}  // namespace cocycle
