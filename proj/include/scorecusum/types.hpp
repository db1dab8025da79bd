#pragma once

#include <Eigen/Dense>

#include <cstdint>

namespace scusum {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;
using Index = Eigen::Index;

/// How a structural change enters the outcome model.
/// LogitShift moves the log odds, RiskShift moves the clipped risk.
enum class ShiftKind { LogitShift, RiskShift };

enum class Norm { L1, L2 };

/// Which predictor vector the monitor sees for each SOC observation.
enum class Conditioning { PredictionOnly, PredictionPlusCovariates };

const char* to_string(ShiftKind kind);
const char* to_string(Norm norm);
const char* to_string(Conditioning c);

}  // namespace scusum
