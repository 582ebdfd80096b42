#include "ieq/model.hpp"

#include <cmath>

#include "ieq/errors.hpp"

namespace ieq {

void validate(const Params& p) {
  if (p.W.size() == 0 || p.A.size() == 0 || p.b.size() == 0) {
    throw ShapeError("params: empty parameter block");
  }
  if (p.A.rows() != p.A.cols()) {
    throw ShapeError("params: A must be square");
  }
  if (p.W.cols() != p.A.rows() || p.b.size() != p.A.rows()) {
    throw ShapeError("params: width mismatch between W, A, b");
  }
  if (!(p.gamma > 0.0 && p.gamma < 1.0)) {
    throw ShapeError("params: gamma must lie in (0,1)");
  }
  if (!p.W.allFinite() || !p.A.allFinite() || !p.b.allFinite()) {
    throw ShapeError("params: non-finite entries");
  }
}

void validate(const Dataset& data) {
  if (data.X.rows() == 0 || data.X.cols() == 0) {
    throw ShapeError("dataset: empty X");
  }
  if (data.y.size() != data.X.rows()) {
    throw ShapeError("dataset: y length must match rows of X");
  }
  if (!data.X.allFinite() || !data.y.allFinite()) {
    throw ShapeError("dataset: non-finite entries");
  }
}

void validate(const Params& p, const Dataset& data) {
  validate(p);
  validate(data);
  if (data.X.cols() != p.W.rows()) {
    throw ShapeError("dataset: X columns must match rows of W");
  }
}

Matrix relu(const Matrix& u) { return u.cwiseMax(0.0); }

Matrix feature_map(const Matrix& X, const Matrix& W) {
  if (X.cols() != W.rows()) {
    throw ShapeError("feature_map: X columns must match rows of W");
  }
  return (X * W).cwiseMax(0.0);
}

Vector predict(const Matrix& Z, const Vector& b) {
  if (Z.cols() != b.size()) {
    throw ShapeError("predict: Z columns must match length of b");
  }
  return Z * b;
}

double loss(const Vector& yhat, const Vector& y) {
  if (yhat.size() != y.size()) {
    throw ShapeError("loss: prediction and target lengths differ");
  }
  return 0.5 * (yhat - y).squaredNorm();
}

}  // namespace ieq
