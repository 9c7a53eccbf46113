#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "cocycle/drivers.hpp"
#include "cocycle/lyapunov.hpp"
#include "cocycle/subharmonic.hpp"
#include "cocycle/symplectic.hpp"

namespace cocycle {

/// Block Jacobi matrix on L sites of width W with identity hopping.
/// The boundary F = span[A; B] enters as Theta = B A^{-1} added to the first block;
/// the far end is Dirichlet.
struct FiniteOperator {
    int width = 1;
    std::size_t sites = 0;
    std::vector<RMatrix> diagonal;  ///< V_1 (+ Theta), V_2, ..., V_L
    RMatrix theta;

    Eigen::Index dimension() const { return static_cast<Eigen::Index>(sites) * width; }
    RMatrix dense() const;
};

FiniteOperator assemble_finite(const PotentialModel& model, const OrbitSeed& seed, std::size_t sites,
                               const LagrangianFrame& boundary);

/// Ascending eigenvalues (tridiagonal path for W = 1, dense otherwise; WL <= 8000).
RVector eigenvalues(const FiniteOperator& op);

/// Number of eigenvalues <= e.
std::size_t count_below(const RVector& sorted, double e);

struct IdsEstimate {
    std::vector<double> eigenvalues;  ///< pooled and sorted
    std::size_t sites = 0;
    int width = 1;
    std::size_t samples = 0;

    /// Fraction of pooled eigenvalues <= e.
    double kappa(double e) const;
    double hull_min() const { return eigenvalues.front(); }
    double hull_max() const { return eigenvalues.back(); }
};

IdsEstimate ids_estimate(const PotentialModel& model, std::size_t sites, std::size_t samples, const OrbitSeed& seed,
                         const RunOptions& options = {});

struct ThoulessPoint {
    Complex z;
    double gamma = 0.0;      ///< Gamma_W(z) / W
    double potential = 0.0;  ///< mean log |z - E_i|
    bool excluded = false;
};

struct ThoulessReport {
    std::vector<ThoulessPoint> points;
    double residual = 0.0;  ///< sup over retained points
    std::size_t excluded = 0;
};

/// Points closer than 1/L to a pooled eigenvalue are excluded and counted.
ThoulessReport thouless_residual(const std::vector<Complex>& points, const std::vector<double>& gamma_over_w,
                                 const IdsEstimate& ids);

/// Points on Im z = +-0.5, +-1, +-2 over [hull_min - 1, hull_max + 1] (per_line each) and
/// per_line points on |z| = 100.
std::vector<Complex> thouless_test_points(const IdsEstimate& ids, std::size_t per_line);

struct GreenProbe {
    Complex z;
    std::vector<std::size_t> n;
    std::vector<double> norms;  ///< ||G_z(1, n)||
    double rate = 0.0;          ///< minus the slope of log ||G_z(1,n)|| against n
    double r_squared = 0.0;
    double ct_constant = 0.0;   ///< rate / log(1 + |Im z|)
};

/// ||G_z(1,n)|| for n = 1..n_max on L sites (block Thomas on the first block column).
GreenProbe green_block(const PotentialModel& model, const OrbitSeed& seed, Complex z, std::size_t n_max,
                       std::size_t sites);

/// Dense solve for the (m, n) block of (H - z)^{-1}, 1-based sites (small L only).
CMatrix resolvent_block(const FiniteOperator& op, Complex z, std::size_t m, std::size_t n);

/// Half the L1 distance between Riesz strip masses and IDS increments over `bins` equal bins of [a, b].
double ids_riesz_distance(const RieszEstimate& riesz, const IdsEstimate& ids, double a, double b, std::size_t bins);

}  // namespace cocycle
