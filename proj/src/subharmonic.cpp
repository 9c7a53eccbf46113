#include "cocycle/subharmonic.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "cocycle/errors.hpp"
#include "cocycle/parallel.hpp"
#include "cocycle/random.hpp"

namespace cocycle {

namespace {

std::size_t count_nodes(double a, double b, double h) {
    return static_cast<std::size_t>(std::llround((b - a) / h)) + 1;
}

}  // namespace

ComplexGrid ComplexGrid::make(double x0, double x1, double y0, double y1, double h) {
    if (!(h > 0.0)) throw ValidationError("ComplexGrid", "spacing h must be positive");
    if (!(x1 > x0 && y1 > y0)) throw ValidationError("ComplexGrid", "bounds must satisfy x0 < x1, y0 < y1");
    ComplexGrid g{x0, x1, y0, y1, h};
    if (g.nx() < 10 || g.ny() < 10) throw ValidationError("ComplexGrid", "grid needs at least 8 x 8 interior nodes");
    return g;
}

std::size_t ComplexGrid::nx() const { return count_nodes(x0, x1, h); }
std::size_t ComplexGrid::ny() const { return count_nodes(y0, y1, h); }

Complex ComplexGrid::node(std::size_t ix, std::size_t iy) const {
    return {x0 + static_cast<double>(ix) * h, y0 + static_cast<double>(iy) * h};
}

double free_gamma(Complex z) {
    const Complex zeta = z / 2.0 + std::sqrt(z * z / 4.0 - 1.0);
    return std::abs(std::log(std::abs(zeta)));
}

GridField sample_field(const ComplexGrid& grid, int k, const std::function<double(Complex)>& f) {
    GridField field;
    field.grid = grid;
    field.k = k;
    field.values.resize(grid.size());
    field.stderr_.assign(grid.size(), 0.0);
    field.near_axis.assign(grid.size(), 0);
    for (std::size_t iy = 0; iy < grid.ny(); ++iy)
        for (std::size_t ix = 0; ix < grid.nx(); ++ix) {
            const Complex z = grid.node(ix, iy);
            field.values[grid.index(ix, iy)] = f(z);
            field.near_axis[grid.index(ix, iy)] = std::abs(z.imag()) < grid.h ? 1 : 0;
        }
    return field;
}

GridField field_gamma(const PotentialModel& model, const ComplexGrid& grid, std::size_t n, int k,
                      std::size_t samples, const OrbitSeed& seed, FieldMode mode, const RunOptions& options) {
    if (k < 1 || k > model.width) throw ValidationError("field_gamma", "k must lie in 1..W");
    if (n < 1 || samples < 1) throw ValidationError("field_gamma", "n and samples must be positive");
    GridField field;
    field.grid = grid;
    field.k = k;
    field.n = n;
    field.samples = samples;
    field.values.assign(grid.size(), 0.0);
    field.stderr_.assign(grid.size(), 0.0);
    field.near_axis.assign(grid.size(), 0);
    const int w = model.width;
    parallel_for(grid.size(), options.threads, [&](std::size_t node) {
        const Complex z = grid.node(node % grid.nx(), node / grid.nx());
        const OrbitSeed root = mode == FieldMode::SharedOrbit ? seed : OrbitSeed{derive_key(seed.key, node), {}};
        std::vector<double> per_sample(samples);
        RMatrix v(w, w);
        for (std::size_t s = 0; s < samples; ++s) {
            const OrbitSeed member = root.member(s);
            WedgeProduct product(w, k, z);
            for (std::size_t m = 1; m <= n; ++m) {
                potential_into(model, member, m, v);
                product.multiply(v);
            }
            per_sample[s] = product.log_norm() / static_cast<double>(n);
        }
        const auto me = mean_and_error(per_sample);
        field.values[node] = me.mean;
        field.stderr_[node] = me.stderr_;
        field.near_axis[node] = std::abs(z.imag()) < grid.h ? 1 : 0;
    });
    return field;
}

double submean_defect(const GridField& field) {
    const auto& g = field.grid;
    double worst = 0.0;
    for (std::size_t iy = 1; iy + 1 < g.ny(); ++iy)
        for (std::size_t ix = 1; ix + 1 < g.nx(); ++ix) {
            double sum = 0.0;
            for (int dy = -1; dy <= 1; ++dy)
                for (int dx = -1; dx <= 1; ++dx)
                    if (dx != 0 || dy != 0) sum += field.at(ix + dx, iy + dy);
            worst = std::max(worst, field.at(ix, iy) - sum / 8.0);
        }
    return worst;
}

RieszEstimate riesz_measure(const GridField& field) {
    const auto& g = field.grid;
    RieszEstimate est;
    est.grid = g;
    est.cell_mass.assign(g.size(), 0.0);
    const double norm = 2.0 * std::numbers::pi * static_cast<double>(field.k);
    double ring = 0.0;
    std::vector<double> kept;
    kept.reserve(g.size());
    for (std::size_t iy = 1; iy + 1 < g.ny(); ++iy)
        for (std::size_t ix = 1; ix + 1 < g.nx(); ++ix) {
            const double lap = field.at(ix + 1, iy) + field.at(ix - 1, iy) + field.at(ix, iy + 1) +
                               field.at(ix, iy - 1) - 4.0 * field.at(ix, iy);
            const double mass = lap / norm;
            if (mass < 0.0) {
                est.negative_clipped += -mass;
                continue;
            }
            est.cell_mass[g.index(ix, iy)] = mass;
            kept.push_back(mass);
            if (ix == 1 || iy == 1 || ix + 2 == g.nx() || iy + 2 == g.ny()) ring += mass;
        }
    est.total = pairwise_sum(kept);
    est.boundary_fraction = est.total > 0.0 ? ring / est.total : 0.0;
    est.boundary_warning = est.boundary_fraction > 0.01;
    return est;
}

double RieszEstimate::strip_mass(double a, double b) const {
    std::vector<double> parts;
    for (std::size_t i = 0; i < cell_mass.size(); ++i) {
        if (cell_mass[i] == 0.0) continue;
        const double x = center(i).real();
        const double lo = std::max(a, x - grid.h / 2.0);
        const double hi = std::min(b, x + grid.h / 2.0);
        if (hi > lo) parts.push_back(cell_mass[i] * (hi - lo) / grid.h);
    }
    return pairwise_sum(parts);
}

double RieszEstimate::ball_mass_bound() const {
    const std::size_t nx = grid.nx();
    const std::size_t ny = grid.ny();
    double best = 0.0;
    for (double r = grid.h; r <= std::exp(-1.0) + 1e-12; r *= 2.0) {
        const auto reach = static_cast<long>(std::floor(r / grid.h + 1e-9));
        for (std::size_t iy = 0; iy < ny; ++iy)
            for (std::size_t ix = 0; ix < nx; ++ix) {
                double mass = 0.0;
                for (long dy = -reach; dy <= reach; ++dy)
                    for (long dx = -reach; dx <= reach; ++dx) {
                        const long jx = static_cast<long>(ix) + dx;
                        const long jy = static_cast<long>(iy) + dy;
                        if (jx < 0 || jy < 0 || jx >= static_cast<long>(nx) || jy >= static_cast<long>(ny)) continue;
                        if (std::hypot(static_cast<double>(dx), static_cast<double>(dy)) * grid.h > r + 1e-12) continue;
                        mass += cell_mass[static_cast<std::size_t>(jy) * nx + static_cast<std::size_t>(jx)];
                    }
                if (mass == 0.0) continue;
                const double logp = std::max(0.0, std::log(std::abs(grid.node(ix, iy))));
                best = std::max(best, mass * std::abs(std::log(r)) / (1.0 + logp));
            }
    }
    return best;
}

double log_potential(const RieszEstimate& measure, Complex z) {
    const auto& g = measure.grid;
    const double fx = std::round((z.real() - g.x0) / g.h);
    const double fy = std::round((z.imag() - g.y0) / g.h);
    if (fx >= 0 && fy >= 0 && fx < static_cast<double>(g.nx()) && fy < static_cast<double>(g.ny())) {
        const std::size_t idx = g.index(static_cast<std::size_t>(fx), static_cast<std::size_t>(fy));
        if (measure.cell_mass[idx] > 0.5)
            throw ValidationError("log_potential", "evaluation point lies in a cell carrying mass > 0.5");
    }
    std::vector<double> terms;
    terms.reserve(measure.cell_mass.size());
    for (std::size_t i = 0; i < measure.cell_mass.size(); ++i) {
        if (measure.cell_mass[i] == 0.0) continue;
        terms.push_back(measure.cell_mass[i] * std::log(std::abs(z - measure.center(i))));
    }
    return pairwise_sum(terms);
}

CircularMean circular_mean(const PotentialModel& model, double radius, std::size_t ntheta, std::size_t n,
                           std::size_t samples, const OrbitSeed& seed, const RunOptions& options) {
    if (ntheta < 64) throw ValidationError("circular_mean", "ntheta must be at least 64");
    if (!(radius > 0.0)) throw ValidationError("circular_mean", "radius must be positive");
    const int w = model.width;
    std::vector<RVector> per_node(ntheta);
    parallel_for(ntheta, options.threads, [&](std::size_t i) {
        const double theta = 2.0 * std::numbers::pi * static_cast<double>(i) / static_cast<double>(ntheta);
        const Complex z = std::polar(radius, theta);
        per_node[i] = lyapunov_spectrum(model, z, n, samples, seed.member(i)).gamma;
    });
    CircularMean out;
    out.radius = radius;
    out.ntheta = ntheta;
    out.mean.resize(w);
    std::vector<double> col(ntheta);
    for (int j = 0; j < w; ++j) {
        for (std::size_t i = 0; i < ntheta; ++i) col[i] = per_node[i](j);
        out.mean(j) = pairwise_sum(col) / static_cast<double>(ntheta);
    }
    return out;
}

double field_l1_distance(const GridField& a, const GridField& b) {
    if (a.values.size() != b.values.size()) throw ValidationError("field_l1_distance", "grids differ");
    std::vector<double> d(a.values.size());
    for (std::size_t i = 0; i < d.size(); ++i) d[i] = std::abs(a.values[i] - b.values[i]);
    return pairwise_sum(d) * a.grid.h * a.grid.h;
}

}  // namespace cocycle
