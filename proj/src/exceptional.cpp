#include "cocycle/exceptional.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "cocycle/errors.hpp"
#include "cocycle/parallel.hpp"

namespace cocycle {

Schedule Schedule::make(double tau, std::size_t i_max, std::size_t i_min) {
    if (!(tau > 0.0)) throw ValidationError("Schedule", "tau must be positive");
    if (i_min > i_max) throw ValidationError("Schedule", "i_min must not exceed i_max");
    if (tau * static_cast<double>(i_max) > 40.0) throw ValidationError("Schedule", "levels exceed desk scale");
    return Schedule{tau, i_max, i_min};
}

std::vector<std::size_t> Schedule::levels() const {
    std::vector<std::size_t> out;
    for (std::size_t i = i_min; i <= i_max; ++i) {
        const auto n = static_cast<std::size_t>(std::floor(std::exp(tau * static_cast<double>(i))));
        if (n >= 1 && (out.empty() || n > out.back())) out.push_back(n);
    }
    return out;
}

SmallSingularTracker::SmallSingularTracker(int width, Complex z) : top_(width, width, z) {
    if (width >= 2) below_.emplace(width, width - 1, z);
}

void SmallSingularTracker::multiply(const RMatrix& potential) {
    top_.multiply(potential);
    if (below_) below_->multiply(potential);
}

double SmallSingularTracker::log_sw() const { return top_.log_norm() - (below_ ? below_->log_norm() : 0.0); }

std::vector<Dip> find_dips(const std::vector<double>& energies, const std::vector<double>& statistic,
                           const std::vector<double>& reference, double epsilon) {
    std::vector<Dip> dips;
    for (std::size_t i = 0; i < energies.size(); ++i) {
        const double limit = reference[i] - epsilon;
        if (statistic[i] < limit) dips.push_back({energies[i], limit - statistic[i]});
    }
    return dips;
}

ScanReport liminf_scan(const PotentialModel& model, const OrbitSeed& seed, const std::vector<double>& energies,
                       const Schedule& schedule, const std::vector<double>& gamma_ref, std::optional<double> epsilon,
                       const RunOptions& options) {
    if (gamma_ref.size() != energies.size())
        throw ValidationError("liminf_scan", "gamma_ref must have one entry per energy");
    const auto levels = schedule.levels();
    if (levels.empty()) throw ValidationError("liminf_scan", "schedule has no levels");
    ScanReport report;
    report.energies = energies;
    report.reference = gamma_ref;
    report.statistic.assign(energies.size(), 0.0);
    parallel_for(energies.size(), options.threads, [&](std::size_t e) {
        SmallSingularTracker tracker(model.width, Complex(energies[e], 0.0));
        RMatrix v(model.width, model.width);
        double best = std::numeric_limits<double>::infinity();
        std::size_t next = 0;
        for (std::size_t n = 1; n <= levels.back(); ++n) {
            potential_into(model, seed, n, v);
            tracker.multiply(v);
            if (n == levels[next]) {
                best = std::min(best, tracker.log_sw() / static_cast<double>(n));
                ++next;
            }
        }
        report.statistic[e] = best;
    });
    if (epsilon) {
        report.epsilon = *epsilon;
        report.dips = find_dips(energies, report.statistic, gamma_ref, *epsilon);
    } else {
        report.epsilon = -1.0;
        for (std::size_t i = 0; i < energies.size(); ++i) {
            const double eps = 0.1 * gamma_ref[i];
            if (report.statistic[i] < gamma_ref[i] - eps)
                report.dips.push_back({energies[i], gamma_ref[i] - eps - report.statistic[i]});
        }
    }
    return report;
}

PnWeight PnWeight::power(double s) {
    if (!(s > 0.5)) throw ValidationError("PnWeight", "power weight needs s > 1/2 (square summable)");
    return PnWeight{Kind::Power, s};
}

PnWeight PnWeight::exponential(double eps) {
    if (!(eps > 0.0)) throw ValidationError("PnWeight", "exponential weight needs eps > 0");
    return PnWeight{Kind::Exponential, eps};
}

PnWeight PnWeight::from_name(const std::string& name, double parameter) {
    if (name == "power") return power(parameter);
    if (name == "exponential") return exponential(parameter);
    throw ValidationError("PnWeight", "unknown weight '" + name + "' (catalog: power, exponential)");
}

double PnWeight::log_weight(std::size_t n) const {
    const auto dn = static_cast<double>(n);
    return kind == Kind::Power ? -parameter * std::log(dn) : -parameter * dn;
}

std::string PnWeight::name() const { return kind == Kind::Power ? "power" : "exponential"; }

ScanReport pn_scan(const PotentialModel& model, const OrbitSeed& seed, const std::vector<double>& energies,
                   const PnWeight& weight, std::size_t n_max, double epsilon, const RunOptions& options) {
    if (n_max < 1) throw ValidationError("pn_scan", "n_max must be positive");
    if (weight.kind == PnWeight::Kind::Power && !validate_model(model).bounded)
        throw ValidationError("pn_scan", "polynomial weights require a bounded potential");
    ScanReport report;
    report.energies = energies;
    report.reference.assign(energies.size(), 0.0);
    report.statistic.assign(energies.size(), 0.0);
    report.epsilon = epsilon;
    parallel_for(energies.size(), options.threads, [&](std::size_t e) {
        SmallSingularTracker tracker(model.width, Complex(energies[e], 0.0));
        RMatrix v(model.width, model.width);
        double best = std::numeric_limits<double>::infinity();
        for (std::size_t n = 1; n <= n_max; ++n) {
            potential_into(model, seed, n, v);
            tracker.multiply(v);
            best = std::min(best, weight.log_weight(n) + tracker.log_sw());
        }
        report.statistic[e] = best;
    });
    report.dips = find_dips(energies, report.statistic, report.reference, epsilon);
    return report;
}

double Cover::total_length() const {
    double s = 0.0;
    for (const auto& [a, b] : intervals) s += b - a;
    return s;
}

double Cover::max_length() const {
    double m = 0.0;
    for (const auto& [a, b] : intervals) m = std::max(m, b - a);
    return m;
}

void normalize(Cover& cover) {
    auto& iv = cover.intervals;
    iv.erase(std::remove_if(iv.begin(), iv.end(), [](const auto& p) { return !(p.second > p.first); }), iv.end());
    std::sort(iv.begin(), iv.end());
    std::vector<std::pair<double, double>> merged;
    for (const auto& p : iv) {
        if (!merged.empty() && p.first <= merged.back().second)
            merged.back().second = std::max(merged.back().second, p.second);
        else
            merged.push_back(p);
    }
    iv = std::move(merged);
}

double cover_statistic(const PotentialModel& model, const OrbitSeed& seed, double energy, std::size_t level) {
    const int w = model.width;
    WedgeProduct product(w, std::max(1, w - 1), Complex(energy, 0.0));
    RMatrix v(w, w);
    for (std::size_t n = 1; n <= level; ++n) {
        potential_into(model, seed, n, v);
        product.multiply(v);
    }
    const double value = w == 1 ? product.log_norm() : product.log_max_entry();
    return value / static_cast<double>(level);
}

Cover build_cover(const PotentialModel& model, const OrbitSeed& seed, double a, double b, double eps,
                  std::size_t level, double reference, double gamma1_hat, const RunOptions& options) {
    if (level < 10) throw ValidationError("build_cover", "level n_i must be at least 10");
    if (!(b > a)) throw ValidationError("build_cover", "interval must satisfy a < b");
    Cover cover;
    cover.level = level;
    cover.threshold = reference - eps / 4.0;
    double step = std::max(1e-4, std::exp(-2.0 * gamma1_hat * static_cast<double>(level)) / 10.0);
    step = std::max(step, (b - a) / 1e6);
    step = std::min(step, (b - a) / 8.0);
    cover.resolution = step;

    const auto count = static_cast<std::size_t>(std::ceil((b - a) / step - 1e-9)) + 1;
    std::vector<double> grid(count);
    for (std::size_t i = 0; i < count; ++i) grid[i] = std::min(b, a + static_cast<double>(i) * step);
    std::vector<unsigned char> inside(count);
    auto test = [&](double e) { return cover_statistic(model, seed, e, level) <= cover.threshold; };
    parallel_for(count, options.threads, [&](std::size_t i) { inside[i] = test(grid[i]) ? 1 : 0; });

    auto crossing = [&](double in, double out) {
        while (std::abs(out - in) > 1e-3 * step) {
            const double mid = 0.5 * (in + out);
            (test(mid) ? in : out) = mid;
        }
        return 0.5 * (in + out);
    };
    std::size_t i = 0;
    while (i < count) {
        if (!inside[i]) {
            ++i;
            continue;
        }
        std::size_t j = i;
        while (j + 1 < count && inside[j + 1]) ++j;
        const double lo = i == 0 ? a : crossing(grid[i], grid[i - 1]);
        const double hi = j + 1 == count ? b : crossing(grid[j], grid[j + 1]);
        cover.intervals.emplace_back(lo, hi);
        i = j + 1;
    }
    normalize(cover);
    return cover;
}

Gauge gauge_power(double s) {
    if (!(s > 0.0)) throw ValidationError("gauge_power", "exponent must be positive");
    return Gauge{"power", [s](double t) { return std::pow(t, s); }, true};
}

Gauge gauge_log(double delta) {
    if (!(delta >= 0.0)) throw ValidationError("gauge_log", "delta must be >= 0");
    return Gauge{"log", [delta](double t) { return std::pow(std::log(std::exp(1.0) / t), -1.0 - delta); },
                 delta > 0.0};
}

Gauge gauge_loglog(double delta) {
    if (!(delta >= 0.0)) throw ValidationError("gauge_loglog", "delta must be >= 0");
    return Gauge{"loglog",
                 [delta](double t) {
                     const double u = std::log(std::exp(1.0) / t);
                     return 1.0 / (u * std::pow(std::log(std::exp(1.0) * u), 1.0 + delta));
                 },
                 delta > 0.0};
}

Gauge gauge_by_name(const std::string& name, double parameter) {
    if (name == "power") return gauge_power(parameter);
    if (name == "log") return gauge_log(parameter);
    if (name == "loglog") return gauge_loglog(parameter);
    throw ValidationError("gauge_by_name", "unknown gauge '" + name + "' (catalog: power, log, loglog)");
}

double gauge_content(const Cover& cover, const Gauge& gauge) {
    std::vector<double> terms;
    terms.reserve(cover.intervals.size());
    for (const auto& [a, b] : cover.intervals) {
        const double len = std::clamp(b - a, std::numeric_limits<double>::min(), 1.0);
        terms.push_back(gauge.rho(len));
    }
    return pairwise_sum(terms);
}

SubseqRecord subseq_statistic(const PotentialModel& model, const OrbitSeed& seed, double energy, std::size_t n_max,
                              const RVector& gamma_ref, std::size_t n_min) {
    const int w = model.width;
    if (gamma_ref.size() != w) throw ValidationError("subseq_statistic", "gamma_ref must have W entries");
    if (n_max < 1 || n_min < 1 || n_min > n_max) throw ValidationError("subseq_statistic", "need 1 <= n_min <= N_max");
    SubseqRecord rec;
    rec.energy = energy;
    rec.n_min = n_min;
    rec.values.reserve(n_max);
    auto cursor = CocycleCursor::start(w, Complex(energy, 0.0), 2 * w);
    run_cursor(model, seed, cursor, n_max, 1, [&](const CocycleCursor& c) {
        const auto dn = static_cast<double>(c.steps);
        double worst = 0.0;
        for (int j = 0; j < w; ++j) worst = std::max(worst, std::abs(c.logstretch(j) / dn - gamma_ref(j)));
        rec.values.push_back(worst);
    });
    rec.min_value = std::numeric_limits<double>::infinity();
    for (std::size_t n = n_min; n <= n_max; ++n) {
        if (rec.value(n) < rec.min_value) {
            rec.min_value = rec.value(n);
            rec.argmin = n;
        }
    }
    for (std::size_t n = 2; n <= n_max; n *= 2) {
        const std::size_t upper = std::min(n_max, n * n);
        double best = std::numeric_limits<double>::infinity();
        for (std::size_t m = n; m <= upper; ++m) best = std::min(best, rec.value(m));
        rec.paired.emplace_back(n, best);
    }
    return rec;
}

RestrictedGrowth restricted_growth(const PotentialModel& model, const OrbitSeed& seed, Complex z,
                                   const LagrangianFrame& frame, std::size_t n) {
    const int w = model.width;
    if (frame.basis.rows() != 2 * w || frame.basis.cols() != w)
        throw ValidationError("restricted_growth", "frame must be 2W x W");
    if (!(lagrangian_defect(frame.basis) <= 1e-8))
        throw ValidationError("restricted_growth", "frame is not Lagrangian (basis^T J basis != 0)");
    if (n < 1) throw ValidationError("restricted_growth", "n must be positive");
    auto cursor = CocycleCursor::from_frame(frame.basis, z);
    WedgeProduct full(w, w, z);
    RMatrix v(w, w);
    for (std::size_t m = 1; m <= n; ++m) {
        potential_into(model, seed, m, v);
        advance(cursor, v, true);
        full.multiply(v);
    }
    const auto dn = static_cast<double>(n);
    RestrictedGrowth out;
    out.total_rate = cursor.logstretch.sum() / dn;
    out.min_column_rate = cursor.logstretch.minCoeff() / dn;
    out.unrestricted_rate = full.log_norm() / dn;
    return out;
}

InterpolationGap interpolation_gap(const PotentialModel& model, const OrbitSeed& seed, double energy,
                                   const Schedule& schedule, std::size_t i, double gamma1_hat, double eps) {
    if (i < schedule.i_min || i >= schedule.i_max) throw ValidationError("interpolation_gap", "level index out of range");
    InterpolationGap out;
    out.level = static_cast<std::size_t>(std::floor(std::exp(schedule.tau * static_cast<double>(i))));
    out.next_level = static_cast<std::size_t>(std::floor(std::exp(schedule.tau * static_cast<double>(i + 1))));
    if (out.level < 1 || out.next_level <= out.level)
        throw ValidationError("interpolation_gap", "levels n_i and n_{i+1} coincide");
    out.bound = 2.0 * static_cast<double>(out.next_level - out.level) / static_cast<double>(out.level) *
                (gamma1_hat + eps);
    SmallSingularTracker tracker(model.width, Complex(energy, 0.0));
    RMatrix v(model.width, model.width);
    double anchor = 0.0;
    for (std::size_t m = 1; m < out.next_level; ++m) {
        potential_into(model, seed, m, v);
        tracker.multiply(v);
        if (m < out.level) continue;
        const double r = tracker.log_sw() / static_cast<double>(m);
        if (m == out.level) anchor = r;
        out.gap = std::max(out.gap, std::abs(r - anchor));
    }
    return out;
}

}  // namespace cocycle
