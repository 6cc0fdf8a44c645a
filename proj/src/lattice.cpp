#include "rlab/lattice.hpp"

namespace rlab {
namespace {

IntMatrix minor_of(const IntMatrix& A, int row, int col) {
  const int n = static_cast<int>(A.rows());
  IntMatrix M(n - 1, n - 1);
  for (int i = 0, r = 0; i < n; ++i) {
    if (i == row) continue;
    for (int j = 0, c = 0; j < n; ++j) {
      if (j == col) continue;
      M(r, c++) = A(i, j);
    }
    ++r;
  }
  return M;
}

}  // namespace

long long int_det(const IntMatrix& A) {
  const int n = static_cast<int>(A.rows());
  if (n == 0) return 1;
  if (n == 1) return A(0, 0);
  if (n == 2) return A(0, 0) * A(1, 1) - A(0, 1) * A(1, 0);
  long long acc = 0;
  for (int j = 0; j < n; ++j) {
    if (A(0, j) == 0) continue;
    const long long sign = (j % 2 == 0) ? 1 : -1;
    acc += sign * A(0, j) * int_det(minor_of(A, 0, j));
  }
  return acc;
}

IntMatrix adjugate(const IntMatrix& A) {
  const int n = static_cast<int>(A.rows());
  IntMatrix adj(n, n);
  if (n == 1) {
    adj(0, 0) = 1;
    return adj;
  }
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      const long long sign = ((i + j) % 2 == 0) ? 1 : -1;
      adj(j, i) = sign * int_det(minor_of(A, i, j));
    }
  return adj;
}

}  // namespace rlab
