// Post-matched-filter snapshot simulation for the interpolated 2D TB MIMO
// radar: Y~ = F P + Z with Swerling-II RCS draws, plus the tensor folding.
#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "tbdoa/interp_design.hpp"

namespace tbdoa {

struct RadarScene {
    std::vector<Direction> targets;
    double rcs_variance = 1.0;    // per-target Swerling-II power
    int pulses = 1;               // Q
    double noise_variance = 0.0;  // after matched filtering
    std::uint64_t rng_seed = 0;

    void validate() const;
};

struct SnapshotSet {
    Eigen::MatrixXcd matrix_form;  // M~N x Q
    ComplexTensor tensor_form;     // (M1, M2, N, Q), or (M1+M2-1, N, Q) L-shaped
    Eigen::MatrixXcd truth_rcs;    // realized P, K x Q
    double realized_snr_db = 0.0;  // energy ratio of the actual draw
    std::vector<std::string> warnings;

    // Text dump: dims header then re/im per entry, for external cross-checks.
    void save(const std::string& path) const;
    static SnapshotSet load(const std::string& path, const VirtualStructure& vs, int n_rx);
};

// Stacked steering column f_k = vec((E^H a_k) outer b_k): receive index
// outermost, virtual transmit index fastest. Uses the actual mapped response.
Eigen::MatrixXcd steering_matrix_f(const InterpolationDesign& design, const ArrayGeometry& rx,
                                   const std::vector<Direction>& targets);

// Same stacking built from the ideal virtual steering a~ (the error-free model
// the estimators assume).
Eigen::MatrixXcd ideal_steering_matrix_f(const VirtualStructure& vs, const ArrayGeometry& rx,
                                         const std::vector<Direction>& targets);

SnapshotSet simulate(const RadarScene& scene, const InterpolationDesign& design,
                     const ArrayGeometry& rx);

// Deterministic noise-free snapshot with unit RCS on every pulse.
SnapshotSet noise_free_snapshot(const InterpolationDesign& design, const ArrayGeometry& rx,
                                const std::vector<Direction>& targets, int pulses = 1);

// 10 log10(||signal||_F^2 / ||noise||_F^2); +inf sentinel for zero noise.
double snr_db(const Eigen::MatrixXcd& signal_part, const Eigen::MatrixXcd& noise_part);

// Noise variance that realizes the requested SNR in expectation for the given
// steering matrix and RCS power.
double noise_variance_for_snr(const Eigen::MatrixXcd& f, double rcs_variance,
                              double snr_db_target);

// Fold an M~N x Q matrix into the snapshot tensor layout for the structure.
ComplexTensor fold_snapshots(const Eigen::MatrixXcd& y, const VirtualStructure& vs, int n_rx);

}  // namespace tbdoa
