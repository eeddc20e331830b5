#pragma once

#include <Eigen/Dense>

namespace equivac {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

}  // namespace equivac
