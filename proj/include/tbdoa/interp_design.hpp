// Transmit beamspace-and-interpolation matrix design: least squares and the
// two minimax LP formulations, with beampattern / interpolation-error audits.
#pragma once

#include <string>
#include <vector>

#include "tbdoa/geometry.hpp"
#include "tbdoa/lp.hpp"

namespace tbdoa {

enum class DesignMethod { LeastSquares, MinErrSubjectSidelobe, MinSidelobeSubjectErr };

std::string to_string(DesignMethod m);
DesignMethod design_method_from_string(const std::string& s);

struct InterpolationDesign {
    Eigen::MatrixXcd e;  // M x Mt, maps E^H a(theta,phi) ~= a~(theta,phi)
    ArrayGeometry tx;
    VirtualStructure virtual_array;
    SectorGrid grid;
    DesignMethod method = DesignMethod::LeastSquares;
    NormKind objective_norm = NormKind::LInf;
    NormKind constraint_norm = NormKind::L1;
    double gamma = 0.0;  // sidelobe bound, MinErrSubjectSidelobe
    double delta = 0.0;  // interpolation error tolerance, MinSidelobeSubjectErr
    int facets = 8;
    double achieved_objective = 0.0;  // exact-modulus objective after solving

    // Mapped steering E^H a(d) for the actual array.
    Eigen::VectorXcd mapped_steering(const Direction& d) const;

    void save(const std::string& path) const;
    static InterpolationDesign load(const std::string& path);
};

struct DesignAudit {
    double max_in_error = 0.0;      // max in-sector ||E^H a - a~|| in the constraint norm
    double max_out_sidelobe = 0.0;  // max out-sector ||E^H a|| in the constraint/objective norm
    double worst_violation = 0.0;   // against the method's bound, <= 0 when feasible
    Direction worst_direction;
    bool feasible = true;
};

// Least-squares design E = (A A^H)^{-1} A A~^H over the in-sector grid.
InterpolationDesign design_ls(const ArrayGeometry& tx, const SectorGrid& grid,
                              const VirtualStructure& vs);
Eigen::MatrixXcd design_ls_matrix(const Eigen::MatrixXcd& a, const Eigen::MatrixXcd& atil);

// min max_in ||E^H a - a~||_obj  s.t.  ||E^H a||_con <= gamma out-sector.
InterpolationDesign design_minimax_error(const ArrayGeometry& tx, const SectorGrid& grid,
                                         const VirtualStructure& vs, double gamma,
                                         NormKind objective_norm = NormKind::LInf,
                                         NormKind constraint_norm = NormKind::L1, int facets = 8);

// min max_out ||E^H a||_obj  s.t.  ||E^H a - a~||_con <= delta in-sector.
InterpolationDesign design_minimax_sidelobe(const ArrayGeometry& tx, const SectorGrid& grid,
                                            const VirtualStructure& vs, double delta,
                                            NormKind objective_norm = NormKind::LInf,
                                            NormKind constraint_norm = NormKind::L1,
                                            int facets = 8);

// Actual array identical to the virtual structure, E = identity: the
// zero-interpolation-error reference design.
InterpolationDesign exact_design(const VirtualStructure& vs, const SectorGrid& grid);

struct BeampatternGrid {
    std::vector<Direction> directions;
    std::vector<double> power_db;  // peak-normalized to 0 dB
};

// Transmit power ||E^H a(d)||_2^2 in dB, peak-normalized.
BeampatternGrid beampattern(const InterpolationDesign& d, const std::vector<Direction>& eval);

// Normalized interpolation error ||E^H a - a~||_2 / ||a~||_2 per direction.
std::vector<double> interpolation_error_map(const InterpolationDesign& d,
                                            const std::vector<Direction>& eval);

// Interpolation (approximation) error power sigma_app^2 = ||E^H a - a~||_2^2 / M~
// at one direction (M~ = M1 M2 for the URA).
double sigma_app(const InterpolationDesign& d, const Direction& dir);

// Exact-modulus feasibility audit of a solved design on its own grids.
DesignAudit audit_design(const InterpolationDesign& d);

}  // namespace tbdoa
