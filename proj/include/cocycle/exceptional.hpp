#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "cocycle/drivers.hpp"
#include "cocycle/lyapunov.hpp"
#include "cocycle/symplectic.hpp"

namespace cocycle {

/// n_i = floor(exp(tau i)) for i = i_min..i_max, deduplicated.
struct Schedule {
    double tau = 0.5;
    std::size_t i_max = 20;
    std::size_t i_min = 0;

    static Schedule make(double tau, std::size_t i_max, std::size_t i_min = 0);

    /// Strictly increasing levels; values below 1 are dropped.
    std::vector<std::size_t> levels() const;
};

/// Exact log s_W(Phi_n) tracked step by step (difference of wedge log-norms).
class SmallSingularTracker {
public:
    SmallSingularTracker(int width, Complex z);
    void multiply(const RMatrix& potential);
    std::size_t steps() const { return top_.steps(); }
    double log_sw() const;

private:
    WedgeProduct top_;
    std::optional<WedgeProduct> below_;
};

struct Dip {
    double energy = 0.0;
    double depth = 0.0;  ///< reference - epsilon - statistic
};

struct ScanReport {
    std::vector<double> energies;
    std::vector<double> statistic;
    std::vector<double> reference;
    double epsilon = 0.0;
    std::vector<Dip> dips;
};

/// Energies where statistic < reference - epsilon.
std::vector<Dip> find_dips(const std::vector<double>& energies, const std::vector<double>& statistic,
                           const std::vector<double>& reference, double epsilon);

/// statistic(E) = min over levels of (1/n_i) log s_W(Phi_{n_i}(E)) along one orbit.
/// epsilon defaults to 0.1 * reference per energy when not given.
ScanReport liminf_scan(const PotentialModel& model, const OrbitSeed& seed, const std::vector<double>& energies,
                       const Schedule& schedule, const std::vector<double>& gamma_ref,
                       std::optional<double> epsilon = std::nullopt, const RunOptions& options = {});

/// Weight sequence p_n for the weighted scan.
struct PnWeight {
    enum class Kind { Power, Exponential };
    Kind kind = Kind::Power;
    double parameter = 1.0;  ///< s for n^{-s}, eps for e^{-eps n}

    static PnWeight power(double s);
    static PnWeight exponential(double eps);
    /// "power" or "exponential"; anything else (including "zero") is rejected.
    static PnWeight from_name(const std::string& name, double parameter);

    double log_weight(std::size_t n) const;
    std::string name() const;
};

/// statistic(E) = min_{n <= n_max} [log p_n + log s_W(Phi_n(E))]; reference is 0 (p_n s_W = 1)
/// and dips are energies with statistic < -epsilon.
ScanReport pn_scan(const PotentialModel& model, const OrbitSeed& seed, const std::vector<double>& energies,
                   const PnWeight& weight, std::size_t n_max, double epsilon = 0.0, const RunOptions& options = {});

struct Cover {
    std::vector<std::pair<double, double>> intervals;
    std::size_t level = 0;
    double threshold = 0.0;
    double resolution = 0.0;  ///< sampling step in E

    double total_length() const;
    double max_length() const;
};

/// Sorts and merges overlapping intervals; drops empty ones.
void normalize(Cover& cover);

/// Maximal sub-intervals of [a, b] where (1/n) log of the statistic at level n is
/// <= reference - eps/4. For W >= 2 the statistic is the largest entry of the (W-1)-st
/// exterior power of Phi_n and reference = gamma_1 + ... + gamma_{W-1} at a; for W = 1 it
/// is s_1 and reference = gamma_1 at a. gamma1_hat sets the sampling step.
Cover build_cover(const PotentialModel& model, const OrbitSeed& seed, double a, double b, double eps,
                  std::size_t level, double reference, double gamma1_hat, const RunOptions& options = {});

/// The cover statistic (1/n) log(...) at one energy.
double cover_statistic(const PotentialModel& model, const OrbitSeed& seed, double energy, std::size_t level);

struct Gauge {
    std::string name;
    std::function<double(double)> rho;
    bool integrable = false;  ///< whether the integral of rho(t)/t over (0,1] is finite
};

/// t^s, s > 0 (integrable).
Gauge gauge_power(double s);
/// log^{-1-delta}(e/t), delta >= 0 (integrable iff delta > 0).
Gauge gauge_log(double delta);
/// 1 / (log(e/t) log^{1+delta}(e log(e/t))), delta >= 0 (integrable iff delta > 0).
Gauge gauge_loglog(double delta);
/// "power", "log" or "loglog".
Gauge gauge_by_name(const std::string& name, double parameter);

/// Sum over intervals of rho(length), lengths clamped to (0, 1].
double gauge_content(const Cover& cover, const Gauge& gauge);

struct SubseqRecord {
    double energy = 0.0;
    std::size_t n_min = 1;
    std::vector<double> values;  ///< value(n) for n = 1..N_max
    double min_value = 0.0;
    std::size_t argmin = 0;
    /// (n, min over n <= m <= min(n^2, N_max) of value(m)) for n = 2, 4, 8, ...
    std::vector<std::pair<std::size_t, double>> paired;

    double value(std::size_t n) const { return values[n - 1]; }
};

/// value(n) = max_j |(1/n) logstretch_j - gamma_j| along one orbit; the minimum is over n_min <= n <= N_max.
SubseqRecord subseq_statistic(const PotentialModel& model, const OrbitSeed& seed, double energy, std::size_t n_max,
                              const RVector& gamma_ref, std::size_t n_min = 1);

struct RestrictedGrowth {
    double total_rate = 0.0;        ///< (1/n) log vol_W(Phi_n F)
    double min_column_rate = 0.0;   ///< smallest per-column rate of the reorthogonalized frame
    double unrestricted_rate = 0.0; ///< (1/n) sum_{j<=W} log s_j(Phi_n)
};

RestrictedGrowth restricted_growth(const PotentialModel& model, const OrbitSeed& seed, Complex z,
                                   const LagrangianFrame& frame, std::size_t n);

struct InterpolationGap {
    std::size_t level = 0;
    std::size_t next_level = 0;
    double gap = 0.0;    ///< max over n_i <= m < n_{i+1} of |r(m) - r(n_i)|, r(m) = (1/m) log s_W(Phi_m)
    double bound = 0.0;  ///< 2 (n_{i+1} - n_i) / n_i (gamma1_hat + eps)
};

/// i is the schedule index (n_i = floor(exp(tau i))), not a position in levels().
InterpolationGap interpolation_gap(const PotentialModel& model, const OrbitSeed& seed, double energy,
                                   const Schedule& schedule, std::size_t i, double gamma1_hat, double eps);

}  // namespace cocycle
