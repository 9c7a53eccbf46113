#include "cocycle/operator_lab.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "cocycle/errors.hpp"
#include "cocycle/parallel.hpp"

namespace cocycle {

namespace {

constexpr Eigen::Index kMaxDense = 8000;

RMatrix boundary_theta(const LagrangianFrame& boundary, int width) {
    const CMatrix& basis = boundary.basis;
    if (basis.rows() != 2 * width || basis.cols() != width)
        throw ValidationError("assemble_finite", "boundary frame must be 2W x W");
    if (!(lagrangian_defect(basis) <= 1e-8))
        throw ValidationError("assemble_finite", "boundary is not Lagrangian (basis^T J basis != 0)");
    const CMatrix a = basis.topRows(width);
    const CMatrix b = basis.bottomRows(width);
    Eigen::JacobiSVD<CMatrix> svd(a);
    const RVector& s = svd.singularValues();
    if (!(s(width - 1) > 1e-8 * std::max(1.0, s(0))))
        throw ValidationError("assemble_finite", "boundary with singular upper block is not supported");
    const CMatrix theta = b * a.inverse();
    if (theta.imag().cwiseAbs().maxCoeff() > 1e-8)
        throw ValidationError("assemble_finite", "boundary must be spanned by a real frame");
    RMatrix t = theta.real();
    return 0.5 * (t + t.transpose());
}

}  // namespace

RMatrix FiniteOperator::dense() const {
    const Eigen::Index w = width;
    RMatrix h = RMatrix::Zero(dimension(), dimension());
    for (std::size_t i = 0; i < sites; ++i) {
        const auto o = static_cast<Eigen::Index>(i) * w;
        h.block(o, o, w, w) = diagonal[i];
        if (i + 1 < sites) {
            h.block(o, o + w, w, w).setIdentity();
            h.block(o + w, o, w, w).setIdentity();
        }
    }
    return h;
}

FiniteOperator assemble_finite(const PotentialModel& model, const OrbitSeed& seed, std::size_t sites,
                               const LagrangianFrame& boundary) {
    if (sites < 2) throw ValidationError("assemble_finite", "L must be at least 2");
    FiniteOperator op;
    op.width = model.width;
    op.sites = sites;
    op.theta = boundary_theta(boundary, model.width);
    op.diagonal = orbit_potentials(model, seed, 1, sites);
    op.diagonal.front() += op.theta;
    return op;
}

RVector eigenvalues(const FiniteOperator& op) {
    if (op.dimension() > kMaxDense) throw ValidationError("eigenvalues", "W L exceeds the dense limit 8000");
    if (op.width == 1) {
        RVector diag(op.dimension());
        for (std::size_t i = 0; i < op.sites; ++i) diag(static_cast<Eigen::Index>(i)) = op.diagonal[i](0, 0);
        RVector off = RVector::Ones(op.dimension() - 1);
        Eigen::SelfAdjointEigenSolver<RMatrix> es;
        es.computeFromTridiagonal(diag, off, Eigen::EigenvaluesOnly);
        if (es.info() != Eigen::Success) throw NumericError("eigenvalues", "tridiagonal QL iteration failed");
        return es.eigenvalues();
    }
    Eigen::SelfAdjointEigenSolver<RMatrix> es(op.dense(), Eigen::EigenvaluesOnly);
    if (es.info() != Eigen::Success) throw NumericError("eigenvalues", "symmetric eigensolver failed");
    return es.eigenvalues();
}

std::size_t count_below(const RVector& sorted, double e) {
    return static_cast<std::size_t>(std::upper_bound(sorted.data(), sorted.data() + sorted.size(), e) - sorted.data());
}

double IdsEstimate::kappa(double e) const {
    if (eigenvalues.empty()) return 0.0;
    const auto it = std::upper_bound(eigenvalues.begin(), eigenvalues.end(), e);
    return static_cast<double>(it - eigenvalues.begin()) / static_cast<double>(eigenvalues.size());
}

IdsEstimate ids_estimate(const PotentialModel& model, std::size_t sites, std::size_t samples, const OrbitSeed& seed,
                         const RunOptions& options) {
    if (samples < 1) throw ValidationError("ids_estimate", "samples must be at least 1");
    const LagrangianFrame dirichlet = dirichlet_frame(model.width);
    std::vector<RVector> parts(samples);
    parallel_for(samples, options.threads, [&](std::size_t s) {
        parts[s] = eigenvalues(assemble_finite(model, seed.member(s), sites, dirichlet));
    });
    IdsEstimate ids;
    ids.sites = sites;
    ids.width = model.width;
    ids.samples = samples;
    for (const auto& p : parts) ids.eigenvalues.insert(ids.eigenvalues.end(), p.data(), p.data() + p.size());
    std::sort(ids.eigenvalues.begin(), ids.eigenvalues.end());
    return ids;
}

ThoulessReport thouless_residual(const std::vector<Complex>& points, const std::vector<double>& gamma_over_w,
                                 const IdsEstimate& ids) {
    if (points.size() != gamma_over_w.size())
        throw ValidationError("thouless_residual", "one gamma value per test point is required");
    if (ids.eigenvalues.empty()) throw ValidationError("thouless_residual", "empty eigenvalue pool");
    const double min_distance = 1.0 / static_cast<double>(ids.sites);
    ThoulessReport report;
    std::vector<double> logs(ids.eigenvalues.size());
    for (std::size_t p = 0; p < points.size(); ++p) {
        ThoulessPoint pt;
        pt.z = points[p];
        pt.gamma = gamma_over_w[p];
        double nearest = std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < logs.size(); ++i) {
            const double d = std::abs(pt.z - ids.eigenvalues[i]);
            nearest = std::min(nearest, d);
            logs[i] = std::log(d);
        }
        pt.excluded = nearest < min_distance;
        if (pt.excluded) {
            ++report.excluded;
        } else {
            pt.potential = pairwise_sum(logs) / static_cast<double>(logs.size());
            report.residual = std::max(report.residual, std::abs(pt.gamma - pt.potential));
        }
        report.points.push_back(pt);
    }
    return report;
}

std::vector<Complex> thouless_test_points(const IdsEstimate& ids, std::size_t per_line) {
    if (per_line < 2) throw ValidationError("thouless_test_points", "need at least two points per line");
    const double lo = ids.hull_min() - 1.0;
    const double hi = ids.hull_max() + 1.0;
    std::vector<Complex> pts;
    for (double y : {0.5, 1.0, 2.0})
        for (double sign : {1.0, -1.0})
            for (std::size_t i = 0; i < per_line; ++i) {
                const double x = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(per_line - 1);
                pts.emplace_back(x, sign * y);
            }
    for (std::size_t i = 0; i < per_line; ++i)
        pts.push_back(std::polar(100.0, 2.0 * std::numbers::pi * static_cast<double>(i) / static_cast<double>(per_line)));
    return pts;
}

GreenProbe green_block(const PotentialModel& model, const OrbitSeed& seed, Complex z, std::size_t n_max,
                       std::size_t sites) {
    if (z.imag() == 0.0) throw ValidationError("green_block", "Im z must be nonzero");
    if (n_max < 2) throw ValidationError("green_block", "n range needs at least two sites");
    if (sites < n_max + 10) throw ValidationError("green_block", "L must be at least max(n) + 10");
    const int w = model.width;
    const auto ops = assemble_finite(model, seed, sites, dirichlet_frame(w));
    const CMatrix eye = CMatrix::Identity(w, w);
    // Schur complements from the far end: S_L = D_L, S_i = D_i - S_{i+1}^{-1}.
    std::vector<CMatrix> s_inv(sites);
    CMatrix s = ops.diagonal[sites - 1].cast<Complex>() - z * eye;
    s_inv[sites - 1] = s.partialPivLu().inverse();
    for (std::size_t i = sites - 1; i-- > 0;) {
        s = ops.diagonal[i].cast<Complex>() - z * eye - s_inv[i + 1];
        s_inv[i] = s.partialPivLu().inverse();
    }
    GreenProbe probe;
    probe.z = z;
    CMatrix x = s_inv[0];
    std::vector<double> xs, ys;
    for (std::size_t n = 1; n <= n_max; ++n) {
        if (n > 1) x = -s_inv[n - 1] * x;
        const double norm = w == 1 ? std::abs(x(0, 0)) : Eigen::JacobiSVD<CMatrix>(x).singularValues()(0);
        if (!(norm > 0.0) || !std::isfinite(norm)) throw NumericError("green_block", "degenerate resolvent block");
        probe.n.push_back(n);
        probe.norms.push_back(norm);
        xs.push_back(static_cast<double>(n));
        ys.push_back(std::log(norm));
    }
    const LinearFit fit = fit_line(xs, ys);
    probe.rate = -fit.slope;
    probe.r_squared = fit.r_squared;
    probe.ct_constant = probe.rate / std::log1p(std::abs(z.imag()));
    return probe;
}

CMatrix resolvent_block(const FiniteOperator& op, Complex z, std::size_t m, std::size_t n) {
    if (m < 1 || n < 1 || m > op.sites || n > op.sites) throw ValidationError("resolvent_block", "site out of range");
    const Eigen::Index w = op.width;
    CMatrix h = op.dense().cast<Complex>();
    h.diagonal().array() -= z;
    CMatrix rhs = CMatrix::Zero(op.dimension(), w);
    rhs.block(static_cast<Eigen::Index>(n - 1) * w, 0, w, w).setIdentity();
    const CMatrix col = h.partialPivLu().solve(rhs);
    return col.block(static_cast<Eigen::Index>(m - 1) * w, 0, w, w);
}

double ids_riesz_distance(const RieszEstimate& riesz, const IdsEstimate& ids, double a, double b, std::size_t bins) {
    if (!(b > a) || bins < 1) throw ValidationError("ids_riesz_distance", "need a < b and at least one bin");
    const double width = (b - a) / static_cast<double>(bins);
    std::vector<double> diff(bins);
    for (std::size_t i = 0; i < bins; ++i) {
        const double lo = a + width * static_cast<double>(i);
        const double hi = lo + width;
        diff[i] = std::abs(riesz.strip_mass(lo, hi) - (ids.kappa(hi) - ids.kappa(lo)));
    }
    return 0.5 * pairwise_sum(diff);
}

}  // namespace cocycle
