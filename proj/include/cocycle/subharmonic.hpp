#pragma once

#include <cstddef>
#include <functional>
#include <vector>

#include "cocycle/drivers.hpp"
#include "cocycle/lyapunov.hpp"

namespace cocycle {

/// Uniform node lattice x0 + i h, y0 + j h covering [x0, x1] x [y0, y1].
struct ComplexGrid {
    double x0 = 0.0, x1 = 0.0, y0 = 0.0, y1 = 0.0;
    double h = 0.0;

    /// Validates h > 0 and at least 8 x 8 interior nodes.
    static ComplexGrid make(double x0, double x1, double y0, double y1, double h);

    std::size_t nx() const;
    std::size_t ny() const;
    std::size_t size() const { return nx() * ny(); }
    Complex node(std::size_t ix, std::size_t iy) const;
    std::size_t index(std::size_t ix, std::size_t iy) const { return iy * nx() + ix; }
};

enum class FieldMode {
    Independent,  ///< per-node derived seeds: the ensemble-mean functions
    SharedOrbit,  ///< one omega for every node: the single-realization functions
};

/// Gamma_{k,n} sampled on a grid, row-major in (iy, ix).
struct GridField {
    ComplexGrid grid;
    int k = 1;
    std::size_t n = 0;
    std::size_t samples = 0;
    std::vector<double> values;
    std::vector<double> stderr_;
    /// Nodes closer than h to the real axis converge slowly; they are flagged.
    std::vector<unsigned char> near_axis;

    double at(std::size_t ix, std::size_t iy) const { return values[grid.index(ix, iy)]; }
};

GridField field_gamma(const PotentialModel& model, const ComplexGrid& grid, std::size_t n, int k,
                      std::size_t samples, const OrbitSeed& seed, FieldMode mode = FieldMode::Independent,
                      const RunOptions& options = {});

/// A field from a closed form (oracles, analytic controls).
GridField sample_field(const ComplexGrid& grid, int k, const std::function<double(Complex)>& f);

/// Gamma_1 of the free W = 1 operator: log |zeta| with zeta + 1/zeta = z, |zeta| >= 1.
double free_gamma(Complex z);

/// max over interior nodes of (value - mean of the 8 neighbours)_+.
double submean_defect(const GridField& field);

struct RieszEstimate {
    ComplexGrid grid;
    /// Mass per node cell (interior nodes only; boundary ring is zero), after clipping.
    std::vector<double> cell_mass;
    double total = 0.0;
    double negative_clipped = 0.0;
    /// Mass on the ring of interior cells adjacent to the boundary, as a fraction of total.
    double boundary_fraction = 0.0;
    bool boundary_warning = false;

    Complex center(std::size_t i) const { return grid.node(i % grid.nx(), i / grid.nx()); }

    /// Mass of the vertical strip a <= Re z <= b, cells weighted by overlap.
    double strip_mass(double a, double b) const;

    /// max over cells z and radii r in {h, 2h, 4h, ...} <= 1/e of mu(B(z,r)) |log r| / (1 + log_+ |z|).
    double ball_mass_bound() const;
};

/// Discrete Riesz measure of field / k via the 5-point Laplacian.
RieszEstimate riesz_measure(const GridField& field);

/// sum of mass * log |z - cell centre|. Throws if z sits in a cell carrying mass > 0.5.
double log_potential(const RieszEstimate& measure, Complex z);

struct CircularMean {
    double radius = 0.0;
    std::size_t ntheta = 0;
    RVector mean;  ///< M_1, ..., M_W
};

CircularMean circular_mean(const PotentialModel& model, double radius, std::size_t ntheta, std::size_t n,
                           std::size_t samples, const OrbitSeed& seed, const RunOptions& options = {});

/// L1 distance between two fields on the same grid (times the cell area).
double field_l1_distance(const GridField& a, const GridField& b);

}  // namespace cocycle
