#include "cocycle/drivers.hpp"

#include <cmath>
#include <limits>
#include <numbers>

#include "cocycle/errors.hpp"
#include "cocycle/random.hpp"

namespace cocycle {

namespace {

constexpr std::uint64_t kPhaseTag = 0x50484153ULL;

std::vector<double> phase_of(const OrbitSeed& seed, std::size_t dims) {
    if (!seed.phase.empty()) return seed.phase;
    CounterRng rng(derive_key(seed.key, kPhaseTag));
    std::vector<double> theta(dims);
    for (std::size_t i = 0; i < dims; ++i) theta[i] = rng.uniform(i);
    return theta;
}

double frac(double x) { return x - std::floor(x); }

void fill_iid(const IidSpec& spec, int width, const OrbitSeed& seed, std::uint64_t n, RMatrix& out) {
    if (spec.offset.size() > 0) {
        out = spec.offset;
    } else {
        out.setZero(width, width);
    }
    const CounterRng rng(seed.key);
    auto draw = [&](std::uint64_t lane) {
        const double u = rng.uniform(n, lane);
        switch (spec.distribution) {
            case Distribution::Bernoulli: return u < 0.5 ? spec.amplitude : -spec.amplitude;
            case Distribution::Uniform: return spec.amplitude * (2.0 * u - 1.0);
            case Distribution::Cauchy: return spec.amplitude * std::tan(std::numbers::pi * (u - 0.5));
            case Distribution::TwoPoint: break;
        }
        return 0.0;
    };
    if (spec.distribution == Distribution::TwoPoint) {
        out += rng.uniform(n, 0) < spec.probability ? spec.support[0] : spec.support[1];
        return;
    }
    if (spec.structure == Structure::Scalar) {
        out.diagonal().array() += draw(0);
    } else {
        for (int i = 0; i < width; ++i) out(i, i) += draw(static_cast<std::uint64_t>(i));
    }
}

void fill_quasi_periodic(const QuasiPeriodicSpec& spec, int width, const OrbitSeed& seed, std::uint64_t n,
                         RMatrix& out) {
    const std::size_t d = spec.frequency.size();
    const std::vector<double> theta0 = phase_of(seed, d);
    std::vector<double> theta(d);
    for (std::size_t i = 0; i < d; ++i)
        theta[i] = frac(theta0[i] + frac(static_cast<double>(n) * spec.frequency[i]));
    out.setZero(width, width);
    for (const auto& term : spec.terms) {
        double phase = 0.0;
        for (std::size_t i = 0; i < d; ++i) phase += term.harmonic[i] * theta[i];
        const double angle = 2.0 * std::numbers::pi * phase;
        if (term.cos_coeff.size() > 0) out += std::cos(angle) * term.cos_coeff;
        if (term.sin_coeff.size() > 0) out += std::sin(angle) * term.sin_coeff;
    }
}

bool is_symmetric_block(const RMatrix& m, int width) {
    return m.rows() == width && m.cols() == width && (m - m.transpose()).cwiseAbs().maxCoeff() <= 1e-12;
}

int matrix_rank(const RMatrix& m) {
    Eigen::JacobiSVD<RMatrix> svd(m);
    const RVector& s = svd.singularValues();
    const double tol = std::max(1.0, s.size() > 0 ? s(0) : 0.0) * 1e-12;
    int r = 0;
    for (Eigen::Index i = 0; i < s.size(); ++i)
        if (s(i) > tol) ++r;
    return r;
}

}  // namespace

RMatrix transverse_hopping(int width) {
    RMatrix h = RMatrix::Zero(width, width);
    for (int i = 0; i + 1 < width; ++i) h(i, i + 1) = h(i + 1, i) = 1.0;
    return h;
}

PotentialModel PotentialModel::free(int width) { return constant(RMatrix::Zero(width, width)); }

PotentialModel PotentialModel::constant(const RMatrix& value) {
    PotentialModel m;
    m.width = static_cast<int>(value.rows());
    m.variant = ConstantSpec{value};
    return m;
}

PotentialModel PotentialModel::anderson_bernoulli(int width, double amplitude, bool transverse) {
    IidSpec spec;
    spec.distribution = Distribution::Bernoulli;
    spec.structure = Structure::Diagonal;
    spec.amplitude = amplitude;
    if (transverse) spec.offset = transverse_hopping(width);
    spec.irreducible_asserted = transverse || width == 1;
    PotentialModel m;
    m.width = width;
    m.variant = spec;
    return m;
}

PotentialModel PotentialModel::lloyd(int width, double scale) {
    IidSpec spec;
    spec.distribution = Distribution::Cauchy;
    spec.structure = Structure::Diagonal;
    spec.amplitude = scale;
    PotentialModel m;
    m.width = width;
    m.variant = spec;
    return m;
}

OrbitSeed OrbitSeed::member(std::uint64_t index) const {
    return OrbitSeed{derive_key(key, index), {}};
}

void potential_into(const PotentialModel& model, const OrbitSeed& seed, std::uint64_t n, RMatrix& out) {
    std::visit(
        [&](const auto& spec) {
            using T = std::decay_t<decltype(spec)>;
            if constexpr (std::is_same_v<T, IidSpec>) {
                fill_iid(spec, model.width, seed, n, out);
            } else if constexpr (std::is_same_v<T, QuasiPeriodicSpec>) {
                fill_quasi_periodic(spec, model.width, seed, n, out);
            } else {
                out = spec.value;
            }
        },
        model.variant);
    if (!out.allFinite()) throw NumericError("orbit_potentials", "non-finite potential draw at n=" + std::to_string(n));
}

RMatrix potential_at(const PotentialModel& model, const OrbitSeed& seed, std::uint64_t n) {
    RMatrix out(model.width, model.width);
    potential_into(model, seed, n, out);
    return out;
}

std::vector<RMatrix> orbit_potentials(const PotentialModel& model, const OrbitSeed& seed, std::uint64_t n0,
                                      std::size_t count) {
    if (count < 1) throw ValidationError("orbit_potentials", "count must be at least 1");
    std::vector<RMatrix> out(count);
    for (std::size_t i = 0; i < count; ++i) out[i] = potential_at(model, seed, n0 + i);
    return out;
}

double symmetric_norm(const RMatrix& v) {
    if (v.size() == 0) return 0.0;
    Eigen::SelfAdjointEigenSolver<RMatrix> es(v, Eigen::EigenvaluesOnly);
    return es.eigenvalues().cwiseAbs().maxCoeff();
}

ModelDiagnostics validate_model(const PotentialModel& model) {
    const int w = model.width;
    if (w < 1) throw ValidationError("validate_model", "width must be positive");
    ModelDiagnostics d;
    std::visit(
        [&](const auto& spec) {
            using T = std::decay_t<decltype(spec)>;
            if constexpr (std::is_same_v<T, ConstantSpec>) {
                if (!is_symmetric_block(spec.value, w))
                    throw ValidationError("validate_model", "constant potential must be symmetric W x W");
                d.variant = "constant";
                d.bounded = true;
                d.norm_bound = symmetric_norm(spec.value);
            } else if constexpr (std::is_same_v<T, QuasiPeriodicSpec>) {
                if (spec.frequency.empty())
                    throw ValidationError("validate_model", "quasi-periodic model needs a frequency vector");
                for (double a : spec.frequency)
                    if (!(a >= 0.0 && a < 1.0)) throw ValidationError("validate_model", "frequency must lie in [0,1)");
                double bound = 0.0;
                for (const auto& t : spec.terms) {
                    if (t.harmonic.size() != spec.frequency.size())
                        throw ValidationError("validate_model", "harmonic dimension does not match frequency");
                    for (const RMatrix* c : {&t.cos_coeff, &t.sin_coeff}) {
                        if (c->size() == 0) continue;
                        if (!is_symmetric_block(*c, w))
                            throw ValidationError("validate_model", "trig coefficients must be symmetric W x W");
                        bound += symmetric_norm(*c);
                    }
                }
                d.variant = "quasi_periodic";
                d.bounded = true;
                d.norm_bound = bound;
            } else {
                if (spec.offset.size() > 0 && !is_symmetric_block(spec.offset, w))
                    throw ValidationError("validate_model", "offset must be symmetric W x W");
                const double offset_norm = symmetric_norm(spec.offset);
                d.irreducible_asserted = spec.irreducible_asserted;
                switch (spec.distribution) {
                    case Distribution::Bernoulli:
                    case Distribution::Uniform:
                        if (!(spec.amplitude >= 0.0)) throw ValidationError("validate_model", "amplitude must be >= 0");
                        d.variant = spec.distribution == Distribution::Bernoulli ? "iid_bernoulli" : "iid_uniform";
                        d.bounded = true;
                        d.norm_bound = offset_norm + spec.amplitude;
                        // Flipping one diagonal entry differs by a rank-one matrix.
                        d.rank_one_pair = spec.amplitude > 0.0 && (spec.structure == Structure::Diagonal || w == 1);
                        break;
                    case Distribution::Cauchy:
                        if (!(spec.amplitude > 0.0)) throw ValidationError("validate_model", "Cauchy scale must be > 0");
                        d.variant = "iid_cauchy";
                        d.bounded = false;
                        d.rank_one_pair = spec.structure == Structure::Diagonal || w == 1;
                        break;
                    case Distribution::TwoPoint: {
                        if (spec.support.size() != 2)
                            throw ValidationError("validate_model", "two-point distribution needs exactly two matrices");
                        for (const auto& s : spec.support)
                            if (!is_symmetric_block(s, w))
                                throw ValidationError("validate_model", "support matrices must be symmetric W x W");
                        if (!(spec.probability > 0.0 && spec.probability < 1.0))
                            throw ValidationError("validate_model", "two-point probability must lie in (0,1)");
                        d.variant = "iid_two_point";
                        d.bounded = true;
                        d.norm_bound = offset_norm + std::max(symmetric_norm(spec.support[0]), symmetric_norm(spec.support[1]));
                        d.rank_one_pair = matrix_rank(spec.support[0] - spec.support[1]) == 1;
                        break;
                    }
                }
            }
        },
        model.variant);
    d.log_moment_finite = true;  // bounded variants trivially; Cauchy has all moments below 1
    if (d.bounded) {
        d.eta = std::numeric_limits<double>::infinity();
        d.eta_sup = std::numeric_limits<double>::infinity();
    } else {
        d.eta = 0.5;
        d.eta_sup = 1.0;
    }
    return d;
}

}  // namespace cocycle
