#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "cocycle/symplectic.hpp"

namespace cocycle {

enum class Distribution { Bernoulli, Uniform, Cauchy, TwoPoint };

/// Scalar: V = offset + x I. Diagonal: V = offset + diag(x_1, ..., x_W), independent x_i.
enum class Structure { Scalar, Diagonal };

/// Independent identically distributed blocks.
struct IidSpec {
    Distribution distribution = Distribution::Bernoulli;
    Structure structure = Structure::Diagonal;
    /// +-v for Bernoulli, box half-width for Uniform, scale lambda for Cauchy.
    double amplitude = 1.0;
    /// Deterministic symmetric part added to every block (empty means zero).
    RMatrix offset;
    /// Two-point support {V, V'} and the probability of V.
    std::vector<RMatrix> support;
    double probability = 0.5;
    /// Irreducibility of the support is not checkable in general; the user asserts it.
    bool irreducible_asserted = false;
};

/// One term C cos(2 pi k.theta) + S sin(2 pi k.theta) of a trigonometric polynomial.
struct TrigTerm {
    std::vector<int> harmonic;
    RMatrix cos_coeff;
    RMatrix sin_coeff;
};

/// Irrational rotation theta -> theta + alpha on the d-torus with continuous F.
struct QuasiPeriodicSpec {
    std::vector<double> frequency;
    std::vector<TrigTerm> terms;
};

struct ConstantSpec {
    RMatrix value;
};

struct PotentialModel {
    int width = 1;
    std::variant<IidSpec, QuasiPeriodicSpec, ConstantSpec> variant;

    /// V = 0: the free Laplacian.
    static PotentialModel free(int width);
    static PotentialModel constant(const RMatrix& value);
    /// Diagonal +-amplitude with optional transverse nearest-neighbour coupling.
    static PotentialModel anderson_bernoulli(int width, double amplitude = 1.0, bool transverse = false);
    /// Lloyd model: Cauchy with scale lambda.
    static PotentialModel lloyd(int width, double scale = 1.0);
};

/// Transverse nearest-neighbour coupling matrix of a width-W strip (zero diagonal, ones beside it).
RMatrix transverse_hopping(int width);

/// A point omega: the root key of IID streams, or an initial phase on the torus.
struct OrbitSeed {
    std::uint64_t key = 0;
    /// Empty: the phase is derived from `key`.
    std::vector<double> phase;

    /// Independent member `index` of an ensemble rooted at this seed.
    OrbitSeed member(std::uint64_t index) const;
};

/// V_n for n >= 1 (random access; independent of any previously generated values).
void potential_into(const PotentialModel& model, const OrbitSeed& seed, std::uint64_t n, RMatrix& out);
RMatrix potential_at(const PotentialModel& model, const OrbitSeed& seed, std::uint64_t n);

/// V_{n0}, ..., V_{n0 + count - 1}.
std::vector<RMatrix> orbit_potentials(const PotentialModel& model, const OrbitSeed& seed, std::uint64_t n0,
                                      std::size_t count);

struct ModelDiagnostics {
    std::string variant;
    bool bounded = false;
    bool log_moment_finite = false;
    /// A moment exponent eta > 0 with E||V||^eta < infinity (infinity: all moments).
    double eta = 0.0;
    /// Supremum of admissible moment exponents (exclusive for Cauchy).
    double eta_sup = 0.0;
    bool rank_one_pair = false;
    bool irreducible_asserted = false;
    /// sup ||V|| when bounded.
    std::optional<double> norm_bound;
};

/// Throws ValidationError on structurally invalid models (shape, symmetry, parameters).
ModelDiagnostics validate_model(const PotentialModel& model);

/// Operator norm of a symmetric block.
double symmetric_norm(const RMatrix& v);

}  // namespace cocycle
