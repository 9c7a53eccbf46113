#pragma once

#include <cstddef>
#include <vector>

#include "cocycle/drivers.hpp"
#include "cocycle/symplectic.hpp"

namespace cocycle {

struct RunOptions {
    /// Reorthogonalization period (1 = every step).
    std::size_t stride = 1;
    /// 0 = machine parallelism. Results never depend on it.
    int threads = 1;
};

/// Advances `cursor` through V_{n+1}, ..., V_{n+count} of the orbit, calling
/// visit(cursor) after every reorthogonalized step.
template <typename Visit>
void run_cursor(const PotentialModel& model, const OrbitSeed& seed, CocycleCursor& cursor, std::size_t count,
                std::size_t stride, Visit&& visit) {
    RMatrix v(model.width, model.width);
    for (std::size_t i = 0; i < count; ++i) {
        const std::size_t n = cursor.steps + 1;
        potential_into(model, seed, n, v);
        const bool reorth = stride <= 1 || n % stride == 0 || i + 1 == count;
        advance(cursor, v, reorth);
        if (reorth) visit(cursor);
    }
}

inline void run_cursor(const PotentialModel& model, const OrbitSeed& seed, CocycleCursor& cursor, std::size_t count,
                       std::size_t stride = 1) {
    run_cursor(model, seed, cursor, count, stride, [](const CocycleCursor&) {});
}

/// Raw accumulated log-stretches (2W entries) of the full paired frame after n steps.
RVector raw_logstretch(const PotentialModel& model, const OrbitSeed& seed, Complex z, std::size_t n,
                       std::size_t stride = 1);

/// Ensemble estimate of gamma_1 >= ... >= gamma_W at a spectral parameter.
struct LyapunovEstimate {
    Complex z;
    RVector gamma;         ///< W entries, nats per step
    RVector stderr_;       ///< standard error of gamma
    RVector partial_sum;   ///< Gamma_k = gamma_1 + ... + gamma_k, k = 1..W
    RVector partial_sum_stderr;
    double raw_pairing_defect = 0.0;  ///< max_j |g_j + g_{2W+1-j}| / n over samples
    std::size_t steps = 0;
    std::size_t samples = 0;

    int width() const { return static_cast<int>(gamma.size()); }

    /// All 2W exponents, gamma_{2W+1-j} = -gamma_j.
    RVector full() const;
};

/// gamma_j = mean over samples of the paired symmetrization (g_j - g_{2W+1-j}) / (2n).
LyapunovEstimate lyapunov_spectrum(const PotentialModel& model, Complex z, std::size_t n, std::size_t samples,
                                   const OrbitSeed& seed, const RunOptions& options = {});

struct LdpCurve {
    double energy = 0.0;
    int index = 1;  ///< j, 1-based
    double epsilon = 0.0;
    std::vector<std::size_t> n_list;
    std::vector<double> p_hat;
    std::size_t ensemble = 0;
    /// -log p_hat ~ rate * n - log C, fitted over points with p_hat > 0.
    double rate = 0.0;
    double log_prefactor = 0.0;
    double r_squared = 0.0;
    /// Fewer than two positive points: `rate` is the rule-of-three lower bound.
    bool censored = false;
};

LdpCurve ldp_tail(const PotentialModel& model, double energy, int j, double epsilon,
                  std::vector<std::size_t> n_list, std::size_t ensemble, const LyapunovEstimate& gamma_ref,
                  const OrbitSeed& seed, const RunOptions& options = {});

struct DoublingRecord {
    std::size_t n = 0;
    std::size_t samples = 0;
    RVector a_n;  ///< per k = 1..W: mean of (1/n) sum_{j<=k} log s_j(Phi_n)
    RVector a_2n;
    RVector stderr_n;
    RVector stderr_2n;

    /// a_2n <= a_n + sigmas * (stderr_n + stderr_2n) for every k.
    bool holds(double sigmas = 3.0, double slack = 1e-12) const;
};

/// Exact wedge-norm statistics (not QR stretches), so submultiplicativity is testable.
DoublingRecord doubling_check(const PotentialModel& model, Complex z, std::size_t n, std::size_t samples,
                              const OrbitSeed& seed, const RunOptions& options = {});

/// Least squares y = intercept + slope x with coefficient of determination.
struct LinearFit {
    double slope = 0.0;
    double intercept = 0.0;
    double r_squared = 0.0;
};
LinearFit fit_line(const std::vector<double>& x, const std::vector<double>& y);

}  // namespace cocycle
