#pragma once

#include <Eigen/Dense>

namespace obsdyn {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

} // namespace obsdyn
