#pragma once

#include "ieq/types.hpp"

namespace ieq {

// relu applied entrywise; the derivative convention is relu'(0) = 0 throughout.
inline double relu(double x) { return x > 0.0 ? x : 0.0; }

Matrix relu(const Matrix& u);

// Phi = relu(X W), N x m.
Matrix feature_map(const Matrix& X, const Matrix& W);

// yhat = Z b.
Vector predict(const Matrix& Z, const Vector& b);

// L = 0.5 * ||yhat - y||^2. No averaging over samples.
double loss(const Vector& yhat, const Vector& y);

}  // namespace ieq
