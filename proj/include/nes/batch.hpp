#pragma once

#include <Eigen/Core>

namespace nes {

/// One evaluated population: natural-coordinate draws and mapped search
/// points (one row per sample), raw fitnesses, and rank utilities once
/// shaping has run. `fresh` counts the members whose fitness was newly
/// evaluated this generation (less than lambda under importance mixing).
struct EvaluatedBatch {
  Eigen::MatrixXd z;
  Eigen::MatrixXd x;
  Eigen::VectorXd fitness;
  Eigen::VectorXd utility;
  int fresh = 0;

  int size() const { return static_cast<int>(z.rows()); }
  int dim() const { return static_cast<int>(z.cols()); }
};

}  // namespace nes
