#include "obsdyn/expm.hpp"

#include <array>
#include <cmath>
#include <span>

#include "obsdyn/errors.hpp"

namespace obsdyn {
namespace {

// 1-norm bounds below which the Pade approximant of the given degree is
// accurate to unit roundoff (Higham, 2005).
constexpr std::array<double, 4> kTheta = {1.495585217958292e-2, 2.539398330063230e-1,
                                          9.504178996162932e-1, 2.097847961257068e0};
constexpr double kTheta13 = 5.371920351148152e0;

// Odd/even split of the low-degree approximant: U carries odd powers, V even.
void pade_low(const Matrix& a, std::span<const double> b, Matrix& u, Matrix& v) {
    const auto n = a.rows();
    const Matrix ident = Matrix::Identity(n, n);
    const Matrix a2 = a * a;
    Matrix power = ident;
    Matrix odd = b[1] * ident;
    v = b[0] * ident;
    for (std::size_t k = 2; k < b.size(); k += 2) {
        power = power * a2;
        v += b[k] * power;
        if (k + 1 < b.size()) odd += b[k + 1] * power;
    }
    u = a * odd;
}

void pade13(const Matrix& a, Matrix& u, Matrix& v) {
    constexpr std::array<double, 14> b = {
        64764752532480000.0, 32382376266240000.0, 7771770303897600.0, 1187353796428800.0,
        129060195264000.0,   10559470521600.0,    670442572800.0,     33522128640.0,
        1323241920.0,        40840800.0,          960960.0,           16380.0,
        182.0,               1.0};
    const auto n = a.rows();
    const Matrix ident = Matrix::Identity(n, n);
    const Matrix a2 = a * a;
    const Matrix a4 = a2 * a2;
    const Matrix a6 = a4 * a2;
    const Matrix inner_u = b[13] * a6 + b[11] * a4 + b[9] * a2;
    u = a * (a6 * inner_u + b[7] * a6 + b[5] * a4 + b[3] * a2 + b[1] * ident);
    const Matrix inner_v = b[12] * a6 + b[10] * a4 + b[8] * a2;
    v = a6 * inner_v + b[6] * a6 + b[4] * a4 + b[2] * a2 + b[0] * ident;
}

} // namespace

Matrix expm(const Matrix& a) {
    if (a.rows() != a.cols()) throw Error(ErrorCode::InvalidArgument, "expm requires a square matrix");
    if (!a.allFinite()) throw Error(ErrorCode::InvalidArgument, "expm input is not finite");
    const auto n = a.rows();
    if (n == 0) return a;

    const double norm1 = a.cwiseAbs().colwise().sum().maxCoeff();
    Matrix u;
    Matrix v;
    int squarings = 0;

    static constexpr std::array<double, 4> b3 = {120.0, 60.0, 12.0, 1.0};
    static constexpr std::array<double, 6> b5 = {30240.0, 15120.0, 3360.0, 420.0, 30.0, 1.0};
    static constexpr std::array<double, 8> b7 = {17297280.0, 8648640.0, 1995840.0, 277200.0,
                                                 25200.0,    1512.0,    56.0,      1.0};
    static constexpr std::array<double, 10> b9 = {17643225600.0, 8821612800.0, 2075673600.0,
                                                  302702400.0,   30270240.0,   2162160.0,
                                                  110880.0,      3960.0,       90.0,
                                                  1.0};

    if (norm1 <= kTheta[0]) {
        pade_low(a, b3, u, v);
    } else if (norm1 <= kTheta[1]) {
        pade_low(a, b5, u, v);
    } else if (norm1 <= kTheta[2]) {
        pade_low(a, b7, u, v);
    } else if (norm1 <= kTheta[3]) {
        pade_low(a, b9, u, v);
    } else {
        if (norm1 > kTheta13) squarings = std::max(0, static_cast<int>(std::ceil(std::log2(norm1 / kTheta13))));
        const Matrix scaled = a / std::ldexp(1.0, squarings);
        pade13(scaled, u, v);
    }

    Matrix result = (v - u).partialPivLu().solve(v + u);
    for (int i = 0; i < squarings; ++i) result = result * result;
    return result;
}

} // namespace obsdyn
