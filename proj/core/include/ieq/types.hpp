#pragma once

#include <Eigen/Dense>
#include <cstdint>

namespace ieq {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Mask = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic>;

// Model parameters for y = Z b with Z = relu(gamma Z A + relu(X W)).
// gamma is a fixed scalar in (0,1), never trained.
struct Params {
  Matrix W;     // d x m
  Matrix A;     // m x m
  Vector b;     // m
  double gamma = 0.0;

  Eigen::Index width() const { return A.rows(); }
  Eigen::Index input_dim() const { return W.rows(); }
};

struct Dataset {
  Matrix X;     // N x d
  Vector y;     // N
};

void validate(const Params& p);
void validate(const Dataset& data);
void validate(const Params& p, const Dataset& data);

}  // namespace ieq
