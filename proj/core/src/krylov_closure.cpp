#include "obsdyn/krylov_closure.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "obsdyn/errors.hpp"

namespace obsdyn {
namespace {

double largest_singular_value(const Matrix& m) {
    if (m.size() == 0) return 0.0;
    return Eigen::JacobiSVD<Matrix>(m).singularValues()(0);
}

// Removes the component of `block` lying in span(basis); two passes of
// classical Gram-Schmidt keep the result orthogonal to working precision.
Matrix project_out(const Matrix& basis, Matrix block) {
    if (basis.cols() == 0) return block;
    for (int pass = 0; pass < 2; ++pass) block -= basis * (basis.transpose() * block);
    return block;
}

Matrix stack_rows(const std::vector<Matrix>& blocks, std::size_t count) {
    const auto rows = blocks.front().rows();
    Matrix s(rows * static_cast<Eigen::Index>(count), blocks.front().cols());
    for (std::size_t k = 0; k < count; ++k) s.middleRows(static_cast<Eigen::Index>(k) * rows, rows) = blocks[k];
    return s;
}

} // namespace

LinearObservableSystem::LinearObservableSystem(Matrix a, Matrix b, double rank_tol)
    : a_(std::move(a)), b_(std::move(b)) {
    if (!(rank_tol > 0.0)) throw Error(ErrorCode::InvalidArgument, "rank_tol must be positive");
    if (a_.rows() == 0 || a_.rows() != a_.cols())
        throw Error(ErrorCode::InvalidArgument, "A must be a non-empty square matrix");
    if (b_.rows() == 0 || b_.cols() != a_.cols())
        throw Error(ErrorCode::InvalidArgument, "B must have n columns and at least one row");
    if (!a_.allFinite() || !b_.allFinite())
        throw Error(ErrorCode::InvalidArgument, "system matrices contain non-finite entries");
    if (b_.rows() > a_.rows()) {
        std::ostringstream msg;
        msg << "observable dimension m = " << b_.rows() << " exceeds state dimension n = " << a_.rows();
        throw Error(ErrorCode::DegenerateSystem, msg.str());
    }

    const Vector sb = Eigen::JacobiSVD<Matrix>(b_).singularValues();
    if (sb(sb.size() - 1) <= rank_tol * sb(0)) {
        std::ostringstream msg;
        msg << "B is numerically rank deficient (sigma_min / sigma_max = "
            << (sb(0) > 0.0 ? sb(sb.size() - 1) / sb(0) : 0.0) << ")";
        throw Error(ErrorCode::DegenerateSystem, msg.str());
    }
    const Vector sa = Eigen::JacobiSVD<Matrix>(a_).singularValues();
    if (sa(sa.size() - 1) <= rank_tol * sa(0) || sa(0) == 0.0)
        warnings_.emplace_back("A is numerically singular; closure results remain valid");
}

Matrix KrylovLadder::basis_at(int k) const {
    if (k < 0 || k >= static_cast<int>(dims.size()))
        throw Error(ErrorCode::InvalidArgument, "ladder index out of range");
    return basis.leftCols(dims[static_cast<std::size_t>(k)]);
}

KrylovLadder krylov_ladder(const LinearObservableSystem& sys, double rank_tol) {
    if (!(rank_tol > 0.0)) throw Error(ErrorCode::InvalidArgument, "rank_tol must be positive");
    const int n = sys.n();
    const Matrix at = sys.A().transpose();
    const double a_scale = largest_singular_value(sys.A());

    KrylovLadder ladder;
    ladder.basis.resize(n, 0);

    // V_{k+1} = V_k + A^T N_k where N_k spans the directions first seen at
    // step k, so only the new directions are pushed through A^T.
    Matrix candidate = sys.B().transpose();
    for (int k = 0; k <= n; ++k) {
        const double scale = largest_singular_value(candidate);
        int added = 0;
        Matrix fresh(n, 0);
        const bool negligible = k > 0 && scale <= rank_tol * a_scale;
        if (scale > 0.0 && !negligible) {
            const Matrix residual = project_out(ladder.basis, candidate);
            Eigen::JacobiSVD<Matrix> svd(residual, Eigen::ComputeThinU);
            const Vector& sv = svd.singularValues();
            const double threshold = rank_tol * scale;
            const int room = n - static_cast<int>(ladder.basis.cols());
            for (Eigen::Index i = 0; i < sv.size(); ++i) {
                if (sv(i) > threshold / 10.0 && sv(i) < threshold * 10.0) {
                    std::ostringstream msg;
                    msg << "step " << k << ": singular value " << sv(i) << " within 10x of threshold "
                        << threshold;
                    ladder.warnings.push_back(msg.str());
                }
                if (sv(i) > threshold && added < room) ++added;
            }
            if (added > 0) {
                fresh = project_out(ladder.basis, svd.matrixU().leftCols(added));
                fresh = Eigen::HouseholderQR<Matrix>(fresh).householderQ() * Matrix::Identity(n, added);
                const auto old_cols = ladder.basis.cols();
                ladder.basis.conservativeResize(n, old_cols + added);
                ladder.basis.rightCols(added) = fresh;
            }
        }
        ladder.dims.push_back(static_cast<int>(ladder.basis.cols()));
        if (k > 0 && added == 0) {
            ladder.r = k - 1;
            return ladder;
        }
        if (added == 0) {
            // B^T contributes nothing; only possible for B = 0, rejected at construction.
            throw Error(ErrorCode::DegenerateSystem, "observation operator has no range");
        }
        candidate = at * fresh;
    }
    // dims can grow at most n times, so the loop always returns above.
    throw Error(ErrorCode::DegenerateSystem, "Krylov ladder failed to stabilize");
}

std::vector<Matrix> observation_powers(const LinearObservableSystem& sys, int count) {
    std::vector<Matrix> powers;
    powers.reserve(static_cast<std::size_t>(std::max(count, 0)));
    if (count <= 0) return powers;
    powers.push_back(sys.B());
    for (int k = 1; k < count; ++k) powers.push_back(powers.back() * sys.A());
    return powers;
}

ClosureModel closure_matrices(const LinearObservableSystem& sys, const KrylovLadder& ladder,
                              double closure_tol) {
    if (!(closure_tol > 0.0)) throw Error(ErrorCode::InvalidArgument, "closure_tol must be positive");
    if (ladder.dims.size() != static_cast<std::size_t>(ladder.r) + 2 || ladder.basis.rows() != sys.n())
        throw Error(ErrorCode::InvalidArgument, "ladder does not belong to this system");

    const int r = ladder.r;
    const int m = sys.m();
    const auto powers = observation_powers(sys, r + 2);
    const Matrix stacked = stack_rows(powers, static_cast<std::size_t>(r) + 1);
    const Matrix& target = powers.back();

    // X S = G  <=>  S^T X^T = G^T; minimum-norm solution from the SVD of S^T
    // truncated to rank dim V_r.
    Eigen::JacobiSVD<Matrix> svd(stacked.transpose(), Eigen::ComputeThinU | Eigen::ComputeThinV);
    const int rank = std::min<int>(ladder.dims[static_cast<std::size_t>(r)],
                                   static_cast<int>(svd.singularValues().size()));
    const Vector inv_sv = svd.singularValues().head(rank).cwiseInverse();
    const Matrix xt = svd.matrixV().leftCols(rank) * inv_sv.asDiagonal() *
                      (svd.matrixU().leftCols(rank).transpose() * target.transpose());
    const Matrix x = xt.transpose();

    ClosureModel model;
    model.r = r;
    for (int k = 0; k <= r; ++k) model.C.push_back(x.middleCols(k * m, m));
    model.residual = (target - x * stacked).norm();

    const double bound = closure_tol * target.norm();
    if (model.residual > bound) {
        std::ostringstream msg;
        msg << "closure residual " << model.residual << " exceeds " << bound
            << "; the stabilization index was likely misestimated (rank_tol too loose)";
        throw Error(ErrorCode::ClosureResidualExceeded, msg.str());
    }
    return model;
}

double verify_annihilation(const LinearObservableSystem& sys, const ClosureModel& model) {
    if (static_cast<int>(model.C.size()) != model.r + 1 || model.m() != sys.m())
        throw Error(ErrorCode::InvalidArgument, "closure model does not match system");
    Matrix h = sys.B();
    for (int k = model.r; k >= 0; --k) h = h * sys.A() - model.C[static_cast<std::size_t>(k)] * sys.B();
    return h.norm();
}

ClosureModel cayley_hamilton_fallback(const LinearObservableSystem& sys) {
    const int n = sys.n();
    const int m = sys.m();
    const Matrix ident = Matrix::Identity(n, n);

    // p(lambda) = lambda^n + sum_k coeff[k] lambda^k
    std::vector<double> coeff(static_cast<std::size_t>(n), 0.0);
    Matrix mk = ident;
    for (int k = 1; k <= n; ++k) {
        const Matrix amk = sys.A() * mk;
        const double c = -amk.trace() / k;
        coeff[static_cast<std::size_t>(n - k)] = c;
        mk = amk + c * ident;
    }

    ClosureModel model;
    model.r = n - 1;
    for (int k = 0; k < n; ++k)
        model.C.push_back(-coeff[static_cast<std::size_t>(k)] * Matrix::Identity(m, m));
    model.residual = verify_annihilation(sys, model);
    return model;
}

std::vector<double> minimality_residuals(const LinearObservableSystem& sys, const KrylovLadder& ladder) {
    std::vector<double> out;
    const auto powers = observation_powers(sys, ladder.r + 1);
    for (int k = 0; k < ladder.r; ++k) {
        const Matrix q = ladder.basis_at(k);
        const Matrix& next = powers[static_cast<std::size_t>(k) + 1];
        const double scale = next.norm();
        const Matrix rest = next - (next * q) * q.transpose();
        out.push_back(scale > 0.0 ? rest.norm() / scale : 0.0);
    }
    return out;
}

} // namespace obsdyn
