#pragma once

#include <Eigen/Dense>
#include <ostream>
#include <string>
#include <vector>

#include "linrfm/problems.hpp"

namespace linrfm {

// m x 2 completion instances with closed-form filter dynamics. First-row
// observations are (a, b); the remaining observed entries enter only through
// per-column sums of squares.
struct Mx2Problem {
    double a = 0.0;
    double b = 0.0;
    // ColumnTwoObserved: all remaining observations sit in column 2 with sum of
    // squares s. SplitColumns: one observation per remaining row, c and d are
    // the sums of squares in columns 1 and 2 respectively.
    enum class Pattern { ColumnTwoObserved, SplitColumns };
    Pattern pattern = Pattern::ColumnTwoObserved;
    double s = 0.0;
    double c = 0.0;
    double d = 0.0;
};

enum class FixedPointClass { Attractor, Repeller, Neutral };

struct FixedPoint {
    double location = 0.0;  // +-inf for the neutral pair
    double derivative = 0.0;
    FixedPointClass classification = FixedPointClass::Neutral;
};

struct FixedPointReport {
    std::vector<FixedPoint> fixed_points;
};

// One step of the scalar filter recursion
// k' = (a^2 + b^2 + s + k^2 s)(ab + k s) / ((ab + k s)^2 + (s + b^2)^2).
double k_step(double k, double a, double b, double s);

// Finite fixed points a/b (attractor, derivative s/(b^2+s)) and
// -b(a^2+b^2+s)/(a s) (repeller, derivative (a^2+b^2+s)/(b^2+s)), plus the
// neutral points at +-infinity. Derivatives are cross-checked internally by
// central finite differences of k_step.
FixedPointReport k_fixed_points(double a, double b, double s);

// k_1 computed from M_0 = [[u, eps], [eps, v]].
double k_first(const Eigen::Matrix2d& m0);

// The rank-1 basin condition k_1 > -b(a^2 + b^2 + s)/(a s).
bool basin_predicate(double a, double b, double s, const Eigen::Matrix2d& m0);

// One step of the two-dimensional filter map for the split-column pattern.
std::pair<double, double> xy_step(double x, double y, double a, double b, double c, double d);

// Top eigenvalue of the Jacobian of the xy map at the rank-1 fixed point
// (b/a, a/b): (a^2 d^2 + b^2 c^2) / (a^2 b^2 + a^2 d^2 + b^2 c^2).
double xy_attractor_eigenvalue(double a, double b, double c, double d);

// One step of the divergence recursion a' = (a^3 + 2a)/(a^2 + 1) and the
// matching missing-entry value y21(a) = a + a/(a^2 + 1).
double divergence_step(double a_t);
double divergence_y21(double a_t);

enum class RecoveryVerdict { Recovered, Inconclusive };

struct LemmaF1Report {
    RecoveryVerdict verdict = RecoveryVerdict::Inconclusive;
    double relative_error = 0.0;
    int iterations = 0;
};

// Runs identity-phi lin-RFM on a problem matching the structured observation
// pattern (rank-r ground truth, r fully observed rows, r observations in every
// other row, at most r-1 zeros per ground-truth column) and asserts exact
// recovery on converged runs. Throws PatternMismatch when the pattern fails.
LemmaF1Report lemma_f1_check(const CompletionProblem& p, int max_iters = 5000);

// CSV report rows: setting, fixed_point, derivative, class, algorithm_deviation.
void write_fixed_point_report(std::ostream& out, const Mx2Problem& problem,
                              double algorithm_deviation);

// Vector-field sample of the xy map over a rectangular grid, one CSV row
// x, y, fx, fy per grid point.
void write_basin_grid(std::ostream& out, double a, double b, double c, double d, double x_min,
                      double x_max, double y_min, double y_max, int steps);

// Builds the CompletionProblem realizing an Mx2Problem with unit-magnitude
// per-entry observations (pattern statistics split evenly across rows).
CompletionProblem mx2_to_completion(const Mx2Problem& problem, int m_rows);

// Closed-form trace vs identity-phi lin-RFM run, starting from the filter m0.
// Each returns the largest absolute deviation between the recursion iterates
// and the quantities extracted from the algorithm's filters over `iters`
// iterations.
double k_trace_deviation(const Mx2Problem& problem, const Eigen::Matrix2d& m0, int m_rows,
                         int iters);
double xy_trace_deviation(const Mx2Problem& problem, const Eigen::Matrix2d& m0, int iters);
// Lemma F.4 instance Y = [[1, 0], [?, 1]]; also reports the last missing-entry
// value through *final_y21. The closed form is compared over the first
// compare_iters iterations (the drift grows like sqrt(t), so long runs keep
// the comparison to a prefix); compare_iters < 0 compares every iteration.
double divergence_trace_deviation(const Eigen::Matrix2d& m0, int iters,
                                  double* final_y21 = nullptr, int compare_iters = -1);

}  // namespace linrfm
