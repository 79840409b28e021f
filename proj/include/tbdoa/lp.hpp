// Linear-programming backend for the minimax interpolation designs.
//
// Both design problems reduce to: find the complex M x Mt matrix E minimizing
// an epigraph variable t with per-grid-point norm constraints on the mapped
// response z_p = E^H a_p - target_p. Complex moduli are replaced by the
// polyhedral surrogate
//     |z|_F = max_k Re(z e^{j pi k / F}) / cos(pi/(2F)),  k = 0..2F-1
// which over-estimates |z| by at most 1/cos(pi/(2F)), so an LP-feasible point
// is feasible for the true-modulus constraints. The LP is solved by a
// primal-dual interior-point method whose normal equations are assembled
// exploiting the rank-2 structure each grid point contributes per facet
// family; large l1-constrained point sets are activated lazily from audits of
// the exact moduli.
#pragma once

#include <string>

#include <Eigen/Dense>

namespace tbdoa {

enum class NormKind { L1, LInf, L2 };

std::string to_string(NormKind n);
NormKind norm_kind_from_string(const std::string& s);

struct MinimaxProblem {
    // Objective side: minimize t subject to ||E^H a_i - target_i||_obj <= t.
    Eigen::MatrixXcd a_obj;       // M x P_obj
    Eigen::MatrixXcd target_obj;  // Mt x P_obj
    NormKind norm_obj = NormKind::LInf;

    // Bounded side: ||E^H a_j - target_j||_con <= bound at every point.
    Eigen::MatrixXcd a_con;       // M x P_con
    Eigen::MatrixXcd target_con;  // Mt x P_con
    NormKind norm_con = NormKind::L1;
    double bound = 0.0;

    int facets_per_halfplane = 8;  // F; 2F facet directions cover the circle
};

struct MinimaxSolution {
    Eigen::MatrixXcd e;       // M x Mt
    double objective = 0.0;   // epigraph value (surrogate norm)
    bool converged = false;
    bool infeasible = false;
    int iterations = 0;       // total interior-point iterations
    int outer_rounds = 0;     // lazy-activation rounds
    int working_points = 0;   // bounded-side points in the final working set
    double max_constraint_violation = 0.0;  // exact-modulus audit over all points
    int worst_constraint_index = -1;        // column of a_con, -1 if none
    std::string status;
};

// Exact-modulus norm of E^H a - target for a single point.
double point_norm(const Eigen::MatrixXcd& e, const Eigen::VectorXcd& a,
                  const Eigen::VectorXcd& target, NormKind norm);

MinimaxSolution solve_minimax_design(const MinimaxProblem& p);

}  // namespace tbdoa
