#include "cocycle/symplectic.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "cocycle/errors.hpp"
#include "cocycle/random.hpp"

namespace cocycle {

namespace {

constexpr double kSymmetryTol = 1e-12;

void require_symmetric(const RMatrix& v, const char* op) {
    if (v.rows() != v.cols() || v.rows() == 0)
        throw ValidationError(op, "potential block must be a non-empty square matrix");
    if ((v - v.transpose()).cwiseAbs().maxCoeff() > kSymmetryTol)
        throw ValidationError(op, "potential block is not symmetric");
}

/// J^{-1} conj(u): the antilinear map exchanging the s and 1/s singular directions.
Eigen::VectorXcd symplectic_partner(const Eigen::VectorXcd& u) {
    const Eigen::Index w = u.size() / 2;
    Eigen::VectorXcd out(u.size());
    out.head(w) = u.tail(w).conjugate();
    out.tail(w) = -u.head(w).conjugate();
    return out;
}

CMatrix orthonormal_columns(const CMatrix& m) {
    Eigen::HouseholderQR<CMatrix> qr(m);
    return qr.householderQ() * CMatrix::Identity(m.rows(), m.cols());
}

}  // namespace

RMatrix symplectic_form(int width) {
    RMatrix j = RMatrix::Zero(2 * width, 2 * width);
    j.topRightCorner(width, width) = -RMatrix::Identity(width, width);
    j.bottomLeftCorner(width, width) = RMatrix::Identity(width, width);
    return j;
}

double symplectic_defect(const CMatrix& a) {
    const int w = static_cast<int>(a.rows() / 2);
    const CMatrix j = symplectic_form(w).cast<Complex>();
    return (a.transpose() * j * a - j).cwiseAbs().maxCoeff();
}

TransferMatrix build_transfer(Complex z, const RMatrix& potential) {
    require_symmetric(potential, "build_transfer");
    const Eigen::Index w = potential.rows();
    TransferMatrix t;
    t.z = z;
    t.width = static_cast<int>(w);
    t.entries = CMatrix::Zero(2 * w, 2 * w);
    t.entries.topLeftCorner(w, w) = z * CMatrix::Identity(w, w) - potential.cast<Complex>();
    t.entries.topRightCorner(w, w) = -CMatrix::Identity(w, w);
    t.entries.bottomLeftCorner(w, w) = CMatrix::Identity(w, w);
    return t;
}

double wedge_logsum(const CMatrix& a, int k) {
    const auto dim = static_cast<int>(std::min(a.rows(), a.cols()));
    if (k < 1 || k > dim) throw ValidationError("wedge_logsum", "k out of range");
    if (!a.allFinite()) throw ValidationError("wedge_logsum", "matrix has non-finite entries");
    Eigen::JacobiSVD<CMatrix> svd(a);
    const RVector& s = svd.singularValues();
    const double floor =
        s(0) * std::numeric_limits<double>::epsilon() * static_cast<double>(std::max(a.rows(), a.cols()));
    double sum = 0.0;
    for (int j = 0; j < k; ++j) {
        if (s(j) == 0.0 || s(j) < floor) return -std::numeric_limits<double>::infinity();
        sum += std::log(s(j));
    }
    return sum;
}

std::vector<std::vector<int>> k_subsets(int n, int k) {
    std::vector<std::vector<int>> out;
    if (k < 0 || k > n) return out;
    std::vector<int> idx(k);
    for (int i = 0; i < k; ++i) idx[i] = i;
    for (;;) {
        out.push_back(idx);
        int i = k - 1;
        while (i >= 0 && idx[i] == n - k + i) --i;
        if (i < 0) break;
        ++idx[i];
        for (int j = i + 1; j < k; ++j) idx[j] = idx[j - 1] + 1;
    }
    return out;
}

namespace {

void fill_compound(const CMatrix& a, int k, const std::vector<std::vector<int>>& subsets, CMatrix& out) {
    const auto m = static_cast<Eigen::Index>(subsets.size());
    out.resize(m, m);
    CMatrix minor(k, k);
    for (Eigen::Index r = 0; r < m; ++r) {
        for (Eigen::Index c = 0; c < m; ++c) {
            for (int i = 0; i < k; ++i)
                for (int j = 0; j < k; ++j) minor(i, j) = a(subsets[r][i], subsets[c][j]);
            out(r, c) = minor.determinant();
        }
    }
}

}  // namespace

CMatrix compound_matrix(const CMatrix& a, int k) {
    if (k < 1 || k > std::min(a.rows(), a.cols()))
        throw ValidationError("compound_matrix", "k out of range");
    if (a.rows() == a.cols()) {
        CMatrix out;
        fill_compound(a, k, k_subsets(static_cast<int>(a.rows()), k), out);
        return out;
    }
    const auto rows = k_subsets(static_cast<int>(a.rows()), k);
    const auto cols = k_subsets(static_cast<int>(a.cols()), k);
    CMatrix out(rows.size(), cols.size());
    CMatrix minor(k, k);
    for (std::size_t r = 0; r < rows.size(); ++r) {
        for (std::size_t c = 0; c < cols.size(); ++c) {
            for (int i = 0; i < k; ++i)
                for (int j = 0; j < k; ++j) minor(i, j) = a(rows[r][i], cols[c][j]);
            out(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = minor.determinant();
        }
    }
    return out;
}

double lagrangian_defect(const CMatrix& basis) {
    const int w = static_cast<int>(basis.rows() / 2);
    const CMatrix j = symplectic_form(w).cast<Complex>();
    return (basis.transpose() * j * basis).cwiseAbs().maxCoeff();
}

LagrangianFrame LagrangianFrame::from_basis(const CMatrix& basis, double tol) {
    if (basis.rows() % 2 != 0 || basis.cols() * 2 != basis.rows())
        throw ValidationError("LagrangianFrame", "basis must be 2W x W");
    LagrangianFrame f{orthonormal_columns(basis)};
    if (!(lagrangian_defect(f.basis) <= tol))
        throw ValidationError("LagrangianFrame", "subspace is not Lagrangian (basis^T J basis != 0)");
    return f;
}

LagrangianFrame dirichlet_frame(int width) {
    CMatrix b = CMatrix::Zero(2 * width, width);
    b.topRows(width).setIdentity();
    return LagrangianFrame{b};
}

LagrangianFrame random_lagrangian(int width, std::uint64_t seed) {
    CounterRng rng(seed);
    CMatrix g(width, width);
    for (int i = 0; i < width; ++i)
        for (int j = 0; j < width; ++j) {
            const auto idx = static_cast<std::uint64_t>(i * width + j);
            g(i, j) = Complex(rng.normal(idx, 0), rng.normal(idx, 1));
        }
    Eigen::HouseholderQR<CMatrix> qr(g);
    CMatrix u = qr.householderQ() * CMatrix::Identity(width, width);
    const CMatrix& r = qr.matrixQR();
    for (int j = 0; j < width; ++j) {
        const Complex d = r(j, j);
        if (std::abs(d) > 0.0) u.col(j) *= d / std::abs(d);
    }
    CMatrix b(2 * width, width);
    b.topRows(width) = u.real().cast<Complex>();
    b.bottomRows(width) = u.imag().cast<Complex>();
    return LagrangianFrame::from_basis(b);
}

RMatrix paired_basis(int width) {
    RMatrix p = RMatrix::Zero(2 * width, 2 * width);
    for (int j = 0; j < width; ++j) {
        p(j, j) = 1.0;
        p(2 * width - 1 - j, width + j) = 1.0;
    }
    return p;
}

CocycleCursor CocycleCursor::start(int width, Complex z, int m) {
    if (width < 1) throw ValidationError("CocycleCursor", "width must be positive");
    if (m < 1 || m > 2 * width) throw ValidationError("CocycleCursor", "frame size out of range");
    CocycleCursor c;
    c.frame = paired_basis(width).leftCols(m).cast<Complex>();
    c.logstretch = RVector::Zero(m);
    c.z = z;
    return c;
}

CocycleCursor CocycleCursor::from_frame(const CMatrix& frame, Complex z) {
    if (frame.rows() % 2 != 0 || frame.cols() < 1 || frame.cols() > frame.rows())
        throw ValidationError("CocycleCursor", "frame must be 2W x m with 1 <= m <= 2W");
    CocycleCursor c;
    c.frame = orthonormal_columns(frame);
    c.logstretch = RVector::Zero(frame.cols());
    c.z = z;
    return c;
}

void reorthogonalize(CocycleCursor& cursor) {
    // Modified Gram-Schmidt, two passes; R's diagonal is the positive column norm.
    CMatrix& q = cursor.frame;
    for (Eigen::Index i = 0; i < q.cols(); ++i) {
        for (int pass = 0; pass < 2; ++pass) {
            for (Eigen::Index j = 0; j < i; ++j) {
                const Complex c = q.col(j).dot(q.col(i));
                q.col(i) -= c * q.col(j);
            }
        }
        const double norm = q.col(i).norm();
        if (!(norm > 0.0) || !std::isfinite(norm))
            throw NumericError("qr_step", "degenerate frame (zero or non-finite R diagonal)");
        q.col(i) /= norm;
        cursor.logstretch(i) += std::log(norm);
    }
}

CocycleCursor qr_step(const CocycleCursor& cursor, const TransferMatrix& t) {
    if (t.z != cursor.z) throw ValidationError("qr_step", "cursor and transfer matrix disagree on z");
    if (t.entries.cols() != cursor.frame.rows())
        throw ValidationError("qr_step", "dimension mismatch between transfer matrix and frame");
    CocycleCursor next = cursor;
    next.frame = t.entries * cursor.frame;
    reorthogonalize(next);
    next.steps += 1;
    return next;
}

void advance(CocycleCursor& cursor, const RMatrix& potential, bool reorth) {
    const Eigen::Index w = cursor.frame.rows() / 2;
    // [[zI - V, -I], [I, 0]] [a; b] = [(z - V) a - b; a]
    CMatrix top = cursor.z * cursor.frame.topRows(w) - potential * cursor.frame.topRows(w) -
                  cursor.frame.bottomRows(w);
    cursor.frame.bottomRows(w) = cursor.frame.topRows(w);
    cursor.frame.topRows(w) = top;
    cursor.steps += 1;
    if (reorth) reorthogonalize(cursor);
}

CMatrix transfer_product(Complex z, std::span<const RMatrix> potentials) {
    if (potentials.empty()) throw ValidationError("transfer_product", "empty potential sequence");
    const Eigen::Index w = potentials.front().rows();
    CMatrix phi = CMatrix::Identity(2 * w, 2 * w);
    for (const auto& v : potentials) phi = build_transfer(z, v).entries * phi;
    return phi;
}

LagrangianFrame slow_subspace(const CMatrix& phi, const std::optional<LagrangianFrame>& previous) {
    if (phi.rows() != phi.cols() || phi.rows() % 2 != 0)
        throw ValidationError("slow_subspace", "matrix must be 2W x 2W");
    const auto dim = static_cast<int>(phi.rows());
    const int w = dim / 2;
    Eigen::JacobiSVD<CMatrix> svd(phi, Eigen::ComputeFullV);
    const RVector& s = svd.singularValues();
    const CMatrix& v = svd.matrixV();
    if (!(s(0) > 0.0) || !std::isfinite(s(0))) throw NumericError("slow_subspace", "matrix is zero or not finite");

    constexpr double tie_tol = 1e-10;
    auto tied = [&](int i, int j) { return s(i) - s(j) <= tie_tol * s(i); };
    if (!tied(w - 1, w)) return LagrangianFrame{v.rightCols(w)};

    int lo = w - 1;
    int hi = w;
    while (lo > 0 && tied(lo - 1, lo)) --lo;
    while (hi < dim - 1 && tied(hi, hi + 1)) ++hi;
    const CMatrix fixed = v.rightCols(dim - 1 - hi);
    const CMatrix cluster = v.middleCols(lo, hi - lo + 1);
    const int needed = w - static_cast<int>(fixed.cols());

    CMatrix reference;
    if (previous) {
        reference = previous->basis;
    } else {
        reference = CMatrix::Zero(dim, w);
        reference.bottomRows(w).setIdentity();
    }
    // Candidates: the reference projected onto the tied cluster (largest first),
    // then the cluster's own basis as a fallback.
    std::vector<Eigen::VectorXcd> candidates;
    std::vector<std::pair<double, Eigen::Index>> order;
    for (Eigen::Index j = 0; j < reference.cols(); ++j)
        order.emplace_back(-(cluster.adjoint() * reference.col(j)).norm(), j);
    std::stable_sort(order.begin(), order.end());
    for (const auto& [neg, j] : order) candidates.push_back(cluster * (cluster.adjoint() * reference.col(j)));
    for (Eigen::Index j = 0; j < cluster.cols(); ++j) candidates.push_back(cluster.col(j));

    std::vector<Eigen::VectorXcd> excluded;  // chosen vectors and their partners, orthonormal
    std::vector<Eigen::VectorXcd> chosen;
    auto orthogonalize = [&](Eigen::VectorXcd x) {
        for (int pass = 0; pass < 2; ++pass)
            for (const auto& e : excluded) x -= e.dot(x) * e;
        return x;
    };
    for (const auto& cand : candidates) {
        if (static_cast<int>(chosen.size()) == needed) break;
        const double scale = cand.norm();
        if (scale < 1e-12) continue;
        Eigen::VectorXcd x = orthogonalize(cand);
        x = cluster * (cluster.adjoint() * x);
        x = orthogonalize(x);
        if (x.norm() < 1e-6 * scale) continue;
        x.normalize();
        chosen.push_back(x);
        excluded.push_back(x);
        Eigen::VectorXcd partner = orthogonalize(symplectic_partner(x));
        if (partner.norm() > 1e-12) excluded.push_back(partner.normalized());
    }
    if (static_cast<int>(chosen.size()) != needed)
        throw NumericError("slow_subspace", "could not complete a Lagrangian frame in the tied cluster");
    CMatrix basis(dim, w);
    basis.leftCols(fixed.cols()) = fixed;
    for (int i = 0; i < needed; ++i) basis.col(fixed.cols() + i) = chosen[static_cast<std::size_t>(i)];
    return LagrangianFrame{orthonormal_columns(basis)};
}

double principal_angle(const CMatrix& a, const CMatrix& b) {
    if (a.rows() != b.rows() || a.cols() != b.cols())
        throw ValidationError("principal_angle", "frames must have equal dimensions");
    const CMatrix overlap = a.adjoint() * b;
    const double cos_min = Eigen::JacobiSVD<CMatrix>(overlap).singularValues().minCoeff();
    if (cos_min < std::numbers::sqrt2 / 2.0) return std::acos(std::clamp(cos_min, 0.0, 1.0));
    // Small angles: the sine is resolved far better than the cosine.
    const CMatrix residual = b - a * overlap;
    const double sin_max = Eigen::JacobiSVD<CMatrix>(residual).singularValues()(0);
    return std::asin(std::clamp(sin_max, 0.0, 1.0));
}

double principal_angle(const LagrangianFrame& a, const LagrangianFrame& b) {
    return principal_angle(a.basis, b.basis);
}

WedgeProduct::WedgeProduct(int width, int k, Complex z) : width_(width), k_(k), z_(z) {
    if (width < 1 || k < 1 || k > 2 * width) throw ValidationError("WedgeProduct", "k out of range");
    if (k > 1) subsets_ = k_subsets(2 * width, k);
    const auto n = k > 1 ? static_cast<Eigen::Index>(subsets_.size()) : 2 * width;
    scaled_ = CMatrix::Identity(n, n);
}

void WedgeProduct::multiply(const RMatrix& potential) {
    const Eigen::Index w = width_;
    if (potential.rows() != w || potential.cols() != w)
        throw ValidationError("WedgeProduct", "potential has the wrong size");
    if (k_ == 1) {
        // [a; b] -> [(z - V) a - b; a]
        CMatrix top = z_ * scaled_.topRows(w) - potential.cast<Complex>() * scaled_.topRows(w) - scaled_.bottomRows(w);
        scaled_.bottomRows(w) = scaled_.topRows(w);
        scaled_.topRows(w) = top;
    } else {
        fill_compound(build_transfer(z_, potential).entries, k_, subsets_, step_);
        scaled_ = step_ * scaled_;
    }
    const double m = scaled_.cwiseAbs().maxCoeff();
    if (!(m > 0.0) || !std::isfinite(m)) throw NumericError("WedgeProduct", "product degenerated");
    scaled_ /= m;
    log_scale_ += std::log(m);
    ++steps_;
}

double WedgeProduct::log_norm() const {
    return log_scale_ + std::log(Eigen::JacobiSVD<CMatrix>(scaled_).singularValues()(0));
}

double WedgeProduct::log_max_entry() const { return log_scale_ + std::log(scaled_.cwiseAbs().maxCoeff()); }

}  // namespace cocycle
