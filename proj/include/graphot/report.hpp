#pragma once

#include <cmath>
#include <string>
#include <vector>

namespace graphot {

struct SolveReport {
  std::string solver;
  bool converged = false;
  long iterations = 0;
  /// residual[t] and dual[t] describe the state after t updates.
  std::vector<double> residual_trace;
  std::vector<double> dual_trace;
  /// Seconds since the start of the solve, per state.
  std::vector<double> elapsed_trace;
  /// Largest |mass - 1| over plans after each update (index t >= 1 meaningful).
  std::vector<double> mass_deviation_trace;
  /// Largest eps * (max log u - min log u) over dual vectors, per state.
  std::vector<double> lambda_range_trace;
  double final_residual = NAN;
  double cost = NAN;
  double rounded_cost = NAN;
  double iteration_bound = NAN;
  double epsilon = NAN;
  double delta_prime = NAN;
  double c_inf = NAN;
  /// Last partition updated (1 or 2), 0 when not applicable.
  int last_partition = 0;
  double elapsed_seconds = 0.0;
  int threads = 1;
  bool log_domain = false;
};

}  // namespace graphot
