#pragma once

#include <sstream>
#include <stdexcept>

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

#include "mavtrack/so3.hpp"

namespace mavtrack {

template <typename T>
T spectral_radius(const MatX<T>& m) {
  Eigen::EigenSolver<MatX<T>> es(m, /*computeEigenvectors=*/false);
  return es.eigenvalues().cwiseAbs().maxCoeff();
}

class RiccatiError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

template <typename T>
struct DareSolution {
  MatX<T> P;
  MatX<T> K;  // u = -K x stabilizes (A, B)
  int iterations = 0;
};

// Stabilizing solution of P = Q + A'PA - A'PB (R + B'PB)^-1 B'PA by
// fixed-point iteration of the Riccati recursion from P0 = Q, stopping when
// the elementwise max change drops below tol. The gain is
// K = (R + B'PB)^-1 B'PA.
template <typename T>
DareSolution<T> dare_solve(const MatX<T>& A, const MatX<T>& B, const MatX<T>& Q, const MatX<T>& R,
                           T tol = T(1e-12), int max_iter = 200000) {
  const auto n = A.rows();
  const auto m = B.cols();
  if (A.cols() != n || B.rows() != n || Q.rows() != n || Q.cols() != n || R.rows() != m || R.cols() != m)
    throw std::invalid_argument("dare_solve: inconsistent dimensions");
  if (((Q - Q.transpose()).cwiseAbs().maxCoeff()) > T(1e-9) * (T(1) + Q.cwiseAbs().maxCoeff()))
    throw std::invalid_argument("dare_solve: Q must be symmetric");
  Eigen::LLT<MatX<T>> r_llt(R);
  if (r_llt.info() != Eigen::Success)
    throw std::invalid_argument("dare_solve: R must be symmetric positive definite");

  MatX<T> P = Q;
  int it = 0;
  bool converged = false;
  for (; it < max_iter; ++it) {
    const MatX<T> BtPA = B.transpose() * P * A;
    const MatX<T> S = R + B.transpose() * P * B;
    const MatX<T> K = S.llt().solve(BtPA);
    MatX<T> P_next = Q + A.transpose() * P * A - BtPA.transpose() * K;
    P_next = ((P_next + P_next.transpose()) / T(2)).eval();
    const T delta = (P_next - P).cwiseAbs().maxCoeff();
    P = P_next;
    if (delta < tol * (T(1) + P.cwiseAbs().maxCoeff())) {  // scale-aware stop
      converged = true;
      break;
    }
  }

  const MatX<T> S = R + B.transpose() * P * B;
  DareSolution<T> out;
  out.P = P;
  out.K = S.llt().solve(B.transpose() * P * A);
  out.iterations = it + 1;

  const T rho_cl = spectral_radius<T>(A - B * out.K);
  if (!converged || !(rho_cl < T(1))) {
    std::ostringstream msg;
    msg << "dare_solve: no stabilizing solution after " << out.iterations
        << " iterations; spectral radius of A = " << spectral_radius<T>(A)
        << ", of A - BK = " << rho_cl;
    throw RiccatiError(msg.str());
  }
  return out;
}

template <typename T>
struct KalmanDesign {
  MatX<T> L;  // predictor gain: xh+ = A xh + L (z - C xh)
  MatX<T> P;  // steady-state prediction covariance
};

/// Steady-state Kalman predictor via the dual Riccati equation; the
/// estimator error dynamics A - LC are stable.
template <typename T>
KalmanDesign<T> steady_state_kalman(const MatX<T>& A, const MatX<T>& C, const MatX<T>& W,
                                    const MatX<T>& V) {
  const DareSolution<T> dual = dare_solve<T>(A.transpose(), C.transpose(), W, V);
  KalmanDesign<T> out;
  out.P = dual.P;
  out.L = dual.K.transpose();
  return out;
}

}  // namespace mavtrack
