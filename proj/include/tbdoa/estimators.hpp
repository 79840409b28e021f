// DOA estimation from snapshot sets: matrix ESPRIT, HOSVD-based tensor
// ESPRIT, the per-target eigenvector method (TEV), and a 2D spectral MUSIC
// reference, with eigen-pairing and cosine-to-angle conversion.
#pragma once

#include <string>
#include <vector>

#include "tbdoa/sim.hpp"

namespace tbdoa {

enum class Estimator { MatrixEsprit, HosvdEsprit, Tev, SpectralMusic };

std::string to_string(Estimator e);
Estimator estimator_from_string(const std::string& s);

struct TargetEstimate {
    double theta_deg = 0.0;
    double phi_deg = 0.0;
    double mu = 0.0;
    double nu = 0.0;
    cd lambda_theta{1.0, 0.0};  // shift eigenvalues (unit modulus, noiseless)
    cd lambda_phi{1.0, 0.0};
    bool clipped = false;     // cosines fell outside the visible region
    bool degenerate = false;  // broadside: azimuth undefined
    bool lut_corrected = false;
    double theta_corrected_deg = 0.0;
    double phi_corrected_deg = 0.0;
};

struct DoaEstimate {
    Estimator estimator = Estimator::MatrixEsprit;
    std::vector<TargetEstimate> targets;
    std::vector<std::string> warnings;
};

struct SignalSubspace {
    Eigen::MatrixXcd matrix_basis;  // M~N x K, orthonormal columns
    ComplexTensor tensor_basis;     // HOSVD signal subspace, last mode K
    int k = 0;
};

SignalSubspace matrix_subspace(const SnapshotSet& snap, int k);
SignalSubspace tensor_subspace(const SnapshotSet& snap, int k);

DoaEstimate matrix_esprit(const SnapshotSet& snap, const VirtualStructure& vs, int k);
DoaEstimate hosvd_esprit(const SnapshotSet& snap, const VirtualStructure& vs, int k);
DoaEstimate tev(const SnapshotSet& snap, const VirtualStructure& vs, int k);

// Precomputed search grid over the design sector for spectral MUSIC; the
// steering table uses the designed E^H a(theta, phi) model so the search is
// free of interpolation errors.
struct MusicGrid {
    double theta_lo = 0.0, phi_lo = 0.0, step = 0.1;
    int n_theta = 0, n_phi = 0;
    std::vector<Direction> directions;  // theta-major order
    Eigen::MatrixXcd steering;          // M~N x (n_theta * n_phi)
    Eigen::VectorXd steering_sq;        // per-column squared norms
};

MusicGrid make_music_grid(const InterpolationDesign& design, const ArrayGeometry& rx,
                          double step_deg);

DoaEstimate spectral_music_2d(const SnapshotSet& snap, const MusicGrid& grid, int k);

// Greedy max-|coherence| matching between the right eigenvector sets of the
// two shift operators: result[i] is the phi-system column paired with
// theta-system column i. Deterministic under ties (lowest index first).
std::vector<int> pair_eigensystems(const Eigen::MatrixXcd& t_theta,
                                   const Eigen::MatrixXcd& t_phi);

// Pseudo-inverse with singular values below 1e-12 * sigma_max truncated.
Eigen::MatrixXcd pinv(const Eigen::MatrixXcd& m);

}  // namespace tbdoa
