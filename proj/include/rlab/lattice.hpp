#pragma once

#include "rlab/point.hpp"

namespace rlab {

/// Exact determinant of a small integer matrix (cofactor expansion).
long long int_det(const IntMatrix& A);

/// Exact adjugate, adj(A) * A = det(A) * I.
IntMatrix adjugate(const IntMatrix& A);

}  // namespace rlab
