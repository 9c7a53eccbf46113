#pragma once

#include <complex>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Dense>

namespace cocycle {

using Complex = std::complex<double>;
using CMatrix = Eigen::MatrixXcd;
using RMatrix = Eigen::MatrixXd;
using RVector = Eigen::VectorXd;

/// J = [[0, -I], [I, 0]] of size 2W.
RMatrix symplectic_form(int width);

/// max-abs entry of A^T J A - J (transpose, not adjoint: complexified real group).
double symplectic_defect(const CMatrix& a);

/// One step of the matrix Schrodinger cocycle, [[zI - V, -I], [I, 0]].
struct TransferMatrix {
    CMatrix entries;
    Complex z;
    int width = 0;
};

/// Rejects V that is not symmetric to 1e-12.
TransferMatrix build_transfer(Complex z, const RMatrix& potential);

/// Sum of the k largest log singular values, i.e. log of the norm of the k-th
/// exterior power. Returns -inf when A has rank below k.
double wedge_logsum(const CMatrix& a, int k);

/// Matrix of all k x k minors of A, rows and columns indexed by k-subsets in
/// lexicographic order.
CMatrix compound_matrix(const CMatrix& a, int k);

/// Lexicographically ordered k-subsets of {0, ..., n-1}.
std::vector<std::vector<int>> k_subsets(int n, int k);

/// Orthonormal W-frame spanning a Lagrangian subspace of C^{2W}.
struct LagrangianFrame {
    CMatrix basis;

    int width() const { return static_cast<int>(basis.cols()); }

    /// Orthonormalizes `basis` and checks basis^T J basis = 0 to `tol`.
    static LagrangianFrame from_basis(const CMatrix& basis, double tol = 1e-8);
};

/// max-abs entry of basis^T J basis.
double lagrangian_defect(const CMatrix& basis);

/// span{(v, 0)}: the Dirichlet boundary plane.
LagrangianFrame dirichlet_frame(int width);

/// Haar-distributed Lagrangian plane: [Re U; Im U] for a Haar unitary U(W).
LagrangianFrame random_lagrangian(int width, std::uint64_t seed);

/// QR-reorthogonalized product Phi_n(z) applied to an initial orthonormal frame.
///
/// Invariant: after n steps, the partial sums of `logstretch` over the first i
/// columns equal the log i-volume of Phi_n times the first i initial columns.
struct CocycleCursor {
    CMatrix frame;
    RVector logstretch;
    std::size_t steps = 0;
    Complex z;

    int width() const { return static_cast<int>(frame.rows() / 2); }
    int columns() const { return static_cast<int>(frame.cols()); }

    /// First m columns of the paired basis (e_1..e_W, e_2W, ..., e_{W+1}).
    /// In this ordering logstretch_j + logstretch_{2W+1-j} = 0 holds exactly
    /// in exact arithmetic for the full frame.
    static CocycleCursor start(int width, Complex z, int m);

    /// Starts from an arbitrary frame; columns are orthonormalized first.
    static CocycleCursor from_frame(const CMatrix& frame, Complex z);
};

/// The 2W x 2W permutation whose columns are e_1..e_W, e_2W, ..., e_{W+1}.
RMatrix paired_basis(int width);

/// Thin QR of T * frame; returns the advanced cursor.
CocycleCursor qr_step(const CocycleCursor& cursor, const TransferMatrix& t);

/// In-place variant that exploits the block structure of the transfer matrix.
/// With `reorthogonalize` false, the frame is only multiplied (used for strides > 1).
void advance(CocycleCursor& cursor, const RMatrix& potential, bool reorthogonalize = true);

/// Re-orthogonalizes the current frame, folding the stretch into logstretch.
void reorthogonalize(CocycleCursor& cursor);

/// Dense Phi_n = T_n ... T_1 for the given potentials (only for short products).
CMatrix transfer_product(Complex z, std::span<const RMatrix> potentials);

/// Right singular subspace for the W smallest singular values. Under a tie
/// s_W = s_{W+1}, the Lagrangian completion is built greedily from `previous`
/// (or span{e_{W+1..2W}}).
LagrangianFrame slow_subspace(const CMatrix& phi,
                              const std::optional<LagrangianFrame>& previous = std::nullopt);

/// Largest principal angle in [0, pi/2].
double principal_angle(const LagrangianFrame& a, const LagrangianFrame& b);
double principal_angle(const CMatrix& a, const CMatrix& b);

/// Running product of k-th compound matrices with log rescaling, so that
/// log ||wedge^k Phi_n|| stays accurate far beyond the overflow range of Phi_n.
class WedgeProduct {
public:
    WedgeProduct(int width, int k, Complex z);

    void multiply(const RMatrix& potential);

    int order() const { return k_; }
    std::size_t steps() const { return steps_; }

    /// Sum of the k largest log singular values of Phi_n.
    double log_norm() const;

    /// log of the largest absolute entry of wedge^k Phi_n.
    double log_max_entry() const;

private:
    int width_;
    int k_;
    Complex z_;
    std::vector<std::vector<int>> subsets_;
    CMatrix step_;
    CMatrix scaled_;
    double log_scale_ = 0.0;
    std::size_t steps_ = 0;
};

}  // namespace cocycle
