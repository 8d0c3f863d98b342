#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <functional>
#include <string>
#include <thread>
#include <vector>

namespace rawb {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using PolicyGrid = Eigen::Matrix<std::uint8_t, Eigen::Dynamic, Eigen::Dynamic>;

// Shared numeric tolerances.  kProbTol guards stochasticity checks and
// monotonicity comparisons; kTieTol is the action tie-break band.
inline constexpr double kProbTol = 1e-9;
inline constexpr double kTieTol = 1e-12;

// Compensated (Kahan) accumulator: Monte Carlo reductions must not depend on
// summation luck, and rerunning must reproduce sums bit for bit.
struct KahanSum {
  double sum = 0.0;
  double carry = 0.0;

  void add(double v) {
    const double y = v - carry;
    const double t = sum + y;
    carry = (t - sum) - y;
    sum = t;
  }
  double value() const { return sum; }
};

// Runs fn(i) for i in [0, n).  jobs <= 1 executes inline; otherwise indices
// are striped across threads.  fn must write only to its own slot so the
// result is identical for any job count.
inline void parallel_for(int n, int jobs, const std::function<void(int)>& fn) {
  if (jobs <= 1 || n <= 1) {
    for (int i = 0; i < n; ++i) fn(i);
    return;
  }
  const int workers = std::min(jobs, n);
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&, w]() {
      for (int i = w; i < n; i += workers) fn(i);
    });
  }
  for (auto& t : pool) t.join();
}

// All floating-point output goes through 9 significant digits so reruns are
// byte-identical and diffs stay readable.
std::string format_g9(double v);

// Round-trips v through the 9-digit representation (used before JSON dumps).
double round9(double v);

}  // namespace rawb
