#pragma once

#include <string>
#include <vector>

#include "obsdyn/linalg.hpp"

namespace obsdyn {

inline constexpr double kDefaultRankTol = 1e-10;
inline constexpr double kDefaultClosureTol = 1e-8;

/// Linear dynamics du/dt = A u observed through y = B u.
///
/// Construction validates the pair: A must be square, B must have as many
/// columns as A, m <= n, and B must have full row rank at `rank_tol`
/// (relative to its largest singular value). A numerically singular A is
/// accepted; the condition is recorded in warnings().
class LinearObservableSystem {
public:
    LinearObservableSystem(Matrix a, Matrix b, double rank_tol = kDefaultRankTol);

    [[nodiscard]] const Matrix& A() const noexcept { return a_; }
    [[nodiscard]] const Matrix& B() const noexcept { return b_; }
    [[nodiscard]] int n() const noexcept { return static_cast<int>(a_.rows()); }
    [[nodiscard]] int m() const noexcept { return static_cast<int>(b_.rows()); }
    [[nodiscard]] const std::vector<std::string>& warnings() const noexcept { return warnings_; }

private:
    Matrix a_;
    Matrix b_;
    std::vector<std::string> warnings_;
};

/// Dimensions of the nested observable Krylov subspaces
/// V_k = range[B^T, A^T B^T, ..., (A^T)^k B^T] up to the first repeat.
struct KrylovLadder {
    std::vector<int> dims;  // dims[k] = dim V_k; the last two entries are equal
    Matrix basis;           // n x dims.back(), orthonormal; V_k = first dims[k] columns
    int r = 0;              // stabilization index
    std::vector<std::string> warnings;

    [[nodiscard]] Matrix basis_at(int k) const;
};

/// Minimal-order closure y^{(r+1)} = sum_k C_k y^{(k)}.
struct ClosureModel {
    int r = 0;
    std::vector<Matrix> C;  // C_0 ... C_r, each m x m
    double residual = 0.0;  // ||B A^{r+1} - sum_k C_k B A^k||_F

    [[nodiscard]] int m() const { return C.empty() ? 0 : static_cast<int>(C.front().rows()); }
};

/// Incremental rank-revealing orthogonalisation of the observable Krylov
/// sequence. A candidate direction is kept when its component orthogonal to
/// the accumulated basis exceeds rank_tol times the largest singular value of
/// the candidate block. Directions within a factor 10 of that threshold are
/// reported in KrylovLadder::warnings.
[[nodiscard]] KrylovLadder krylov_ladder(const LinearObservableSystem& sys,
                                         double rank_tol = kDefaultRankTol);

/// Solves [C_0 ... C_r] S = B A^{r+1}, S = [B; BA; ...; BA^r], returning the
/// minimum Frobenius norm solution when S is row-rank deficient.
/// Throws ClosureResidualExceeded when the fit residual exceeds
/// closure_tol * ||B A^{r+1}||_F.
[[nodiscard]] ClosureModel closure_matrices(const LinearObservableSystem& sys,
                                            const KrylovLadder& ladder,
                                            double closure_tol = kDefaultClosureTol);

/// ||B Q(A)||_F for Q(lambda) = lambda^{r+1} I - sum_k C_k lambda^k, evaluated
/// by Horner accumulation H <- H A - C_k B.
[[nodiscard]] double verify_annihilation(const LinearObservableSystem& sys, const ClosureModel& model);

/// Order-n closure from the characteristic polynomial of A (Faddeev-LeVerrier),
/// with C_k = -p_k I_m. Not minimal in general; used as a cross-check.
[[nodiscard]] ClosureModel cayley_hamilton_fallback(const LinearObservableSystem& sys);

/// Relative residuals ||B A^{k+1} - best fit from {B A^0..B A^k}||_F / ||B A^{k+1}||_F
/// for k = 0 .. r-1. Each entry is bounded away from zero when r is minimal.
[[nodiscard]] std::vector<double> minimality_residuals(const LinearObservableSystem& sys,
                                                       const KrylovLadder& ladder);

/// Blocks G_k = B A^k for k = 0..count-1 by repeated right multiplication.
[[nodiscard]] std::vector<Matrix> observation_powers(const LinearObservableSystem& sys, int count);

} // namespace obsdyn
