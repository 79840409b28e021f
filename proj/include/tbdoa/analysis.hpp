// Deterministic CRB, interpolation-error bias prediction, offline look-up
// table construction/application, and the experiment metrics.
#pragma once

#include <string>
#include <vector>

#include "tbdoa/estimators.hpp"

namespace tbdoa {

struct CrbReport {
    std::vector<double> theta_var_deg2;  // per target
    std::vector<double> phi_var_deg2;
    // aggregated the same way the RMSE metric aggregates targets
    double rmse_theta_deg = 0.0;
    double rmse_phi_deg = 0.0;
};

// Deterministic (conditional) CRB for the mapped model, given the realized
// RCS matrix (K x Q) and the post-matched-filter noise variance.
CrbReport crb(const std::vector<Direction>& targets, const InterpolationDesign& design,
              const ArrayGeometry& rx, const Eigen::MatrixXcd& rcs, double noise_variance);

// Analytic derivative of the stacked steering column w.r.t. elevation and
// azimuth in radians (exposed for the finite-difference validation).
void steering_derivatives(const InterpolationDesign& design, const ArrayGeometry& rx,
                          const Direction& d, Eigen::VectorXcd& df_dtheta,
                          Eigen::VectorXcd& df_dphi);

struct BiasPrediction {
    // per target
    std::vector<double> sigma2_app;
    // deterministic first-order perturbation of the shift eigenvalues
    std::vector<double> det_dmu, det_dnu;
    std::vector<double> det_dtheta_deg, det_dphi_deg;
    // expectation formulas treating the interpolation error as random
    std::vector<double> mse_mu, mse_nu;
    std::vector<double> mse_theta_deg2, mse_phi_deg2;
};

BiasPrediction bias_predict(const InterpolationDesign& design, const ArrayGeometry& rx,
                            const std::vector<Direction>& targets, int k);

struct LookUpTable {
    double theta_lo = 0.0, phi_lo = 0.0, step = 0.1;  // generating angle lattice
    int n_theta = 0, n_phi = 0;
    // row-major over (i_theta, i_phi)
    std::vector<double> mu_true, nu_true, mu_est, nu_est;
    std::vector<std::string> warnings;

    void save(const std::string& path) const;  // CSV: mu_true,nu_true,mu_est,nu_est
    static LookUpTable load(const std::string& path);
};

// Table I: noise-free single-target estimates over a fine lattice inside the
// sector, forming the (mu, nu) <-> (mu^, nu^) correction tables.
LookUpTable build_lut(const InterpolationDesign& design, const ArrayGeometry& rx,
                      Estimator estimator, double lattice_step_deg);

// Bilinear correction in (mu^, nu^) space; fills the corrected fields.
DoaEstimate apply_lut(const LookUpTable& lut, const DoaEstimate& est);

// Truth-to-estimate pairing by minimum total angular distance (exact
// enumeration for K <= 3): result[k] is the estimate index for truth k.
std::vector<int> assign_to_truth(const DoaEstimate& est, const std::vector<Direction>& truth);

struct RmseResult {
    double theta_deg = 0.0;
    double phi_deg = 0.0;
};

// sqrt( mean over trials of (1/K) sum_k (est_k - truth_k)^2 ), per axis.
RmseResult rmse(const std::vector<DoaEstimate>& trials, const std::vector<Direction>& truth,
                bool use_corrected = false);

struct ResolutionResult {
    double p_theta = 0.0;
    double p_phi = 0.0;
};

// Fraction of trials where both targets satisfy |est - truth| < sep/2
// (strictly), per axis. Requires exactly two truth targets.
ResolutionResult resolution_probability(const std::vector<DoaEstimate>& trials,
                                        const std::vector<Direction>& truth);

}  // namespace tbdoa
