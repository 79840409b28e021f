// Experiment configuration: sectioned key-value text mirroring the module
// names. Unknown sections or keys are hard errors.
#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "tbdoa/estimators.hpp"

namespace tbdoa {

struct ExperimentConfig {
    // [geometry]
    std::string transmit = "irregular";  // irregular | ura | file:PATH
    int nx = 8, ny = 8;
    double aperture = 4.0;
    double displacement = 0.25;
    std::uint64_t array_seed = 1;
    int receive_count = 8;
    std::uint64_t receive_seed = 2;

    // [virtual]
    VirtualStructure virtual_array{VirtualKind::Ura, 4, 4, 0.5};

    // [sector]
    double theta_lo = 30.0, theta_hi = 40.0;
    double phi_lo = 65.0, phi_hi = 75.0;
    double transition_theta = 20.0, transition_phi = 15.0;
    double in_step = 1.0, out_step = 2.0;

    // [design]
    DesignMethod method = DesignMethod::MinSidelobeSubjectErr;
    std::vector<double> delta{0.1};
    std::vector<double> gamma{0.1};
    NormKind objective_norm = NormKind::LInf;
    NormKind constraint_norm = NormKind::L1;
    int facets = 8;

    // [scene]
    std::vector<Direction> targets{{33.0, 66.0}, {39.0, 71.0}};
    double rcs_variance = 1.0;
    int pulses = 8;

    // [montecarlo]
    int trials = 1000;
    std::vector<double> snr_db{0, 5, 10, 15, 20, 25, 30};
    std::vector<Estimator> estimators{Estimator::MatrixEsprit, Estimator::HosvdEsprit,
                                      Estimator::Tev, Estimator::SpectralMusic};
    double music_step = 0.1;
    bool lut_enabled = false;

    // [lut]
    Estimator lut_estimator = Estimator::MatrixEsprit;
    double lut_step = 0.1;

    // [crb]
    int crb_draws = 10;

    // [estimate]
    int estimate_k = 2;

    // [output]
    std::string out_dir = "out";

    // Assembled pieces.
    ArrayGeometry make_transmit() const;
    ArrayGeometry make_receive(const ArrayGeometry& tx) const;
    SectorGrid make_grid() const;
    InterpolationDesign solve_design(const ArrayGeometry& tx, const SectorGrid& grid,
                                     double level) const;

    void validate() const;
};

ExperimentConfig parse_config_file(const std::string& path);
ExperimentConfig parse_config_text(const std::string& text, const std::string& origin);

// Canned parameter sets reproducing the reference experiments.
// Known names: fig1 fig2 fig3 fig5 fig6 fig7 fig8.
ExperimentConfig preset_config(const std::string& name);

}  // namespace tbdoa
