// Antenna array geometries, steering vectors for actual and virtual arrays,
// direction-cosine maps, sector grids and ESPRIT selection matrices.
//
// Angles are degrees at every API boundary and radians internally. Positions
// and spacings are in wavelength units.
#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "tbdoa/tensor.hpp"

namespace tbdoa {

inline constexpr double kPi = 3.141592653589793238462643383279502884;
inline double deg2rad(double d) { return d * kPi / 180.0; }
inline double rad2deg(double r) { return r * 180.0 / kPi; }

struct Direction {
    double theta_deg = 0.0;  // elevation, 0 = broadside
    double phi_deg = 0.0;    // azimuth

    double theta_rad() const { return deg2rad(theta_deg); }
    double phi_rad() const { return deg2rad(phi_deg); }
};

class ArrayGeometry {
public:
    ArrayGeometry() = default;
    explicit ArrayGeometry(std::vector<Eigen::Vector2d> positions);

    int size() const { return static_cast<int>(positions_.size()); }
    const std::vector<Eigen::Vector2d>& positions() const { return positions_; }

    // Plain text records: element index, x, y (wavelengths).
    static ArrayGeometry load(const std::string& path);
    void save(const std::string& path) const;

private:
    std::vector<Eigen::Vector2d> positions_;
};

enum class VirtualKind { CrossUla, Ura, LShaped };

std::string to_string(VirtualKind k);
VirtualKind virtual_kind_from_string(const std::string& s);

// Desired virtual transmit array: m1 elements along the first axis, m2 along
// the second, uniform spacing in wavelengths.
struct VirtualStructure {
    VirtualKind kind = VirtualKind::Ura;
    int m1 = 4;
    int m2 = 4;
    double spacing = 0.5;

    void validate() const;

    // Number of virtual elements M~. The Khatri-Rao structures (URA and cross
    // ULAs) have m1*m2 entries; the L-shaped array shares its origin element,
    // giving m1+m2-1.
    int virtual_count() const;

    // Snapshot tensor mode sizes: (m1, m2, N, Q) for Khatri-Rao structures,
    // (m1+m2-1, N, Q) for the L-shaped array.
    std::vector<Eigen::Index> tensor_dims(int n_rx, int pulses) const;
    int tensor_order() const { return kind == VirtualKind::LShaped ? 3 : 4; }

    // Flat virtual-element indices of the sub-array along `axis` (0 or 1).
    // Identity layout for URA axis sub-arrays is handled at the tensor level;
    // this is what the L-shaped (and any flat-index) ESPRIT path uses.
    std::vector<int> axis_indices(int axis) const;

    int axis_size(int axis) const;
};

// Transmit-array steering vector: entry m is exp(-j 2 pi u(theta,phi)^T p_m)
// with u = [sin(theta)cos(phi), sin(theta)sin(phi)].
Eigen::VectorXcd steering_vector(const ArrayGeometry& g, const Direction& d);
Eigen::MatrixXcd steering_matrix(const ArrayGeometry& g, const std::vector<Direction>& dirs);

// ULA steering along one virtual axis: [1, e^{-j2 pi s c}, ..., e^{-j2 pi s (m-1) c}].
Eigen::VectorXcd axis_steering(int m, double spacing, double cosine);

// Generalized direction cosines (mu, nu) for the structure kind.
std::pair<double, double> direction_cosines(const Direction& d, VirtualKind kind);

struct AngleConversion {
    Direction direction;
    bool degenerate = false;  // mu = nu = 0: elevation 0, azimuth undefined
    bool clipped = false;     // cosines fell outside the visible region
};

// Inverse of direction_cosines (exact, not the small-error Taylor form).
AngleConversion angles_from_cosines(double mu, double nu, VirtualKind kind);

// Desired virtual steering vector a~(theta, phi), length virtual_count().
Eigen::VectorXcd virtual_steering(const VirtualStructure& vs, const Direction& d);
Eigen::MatrixXcd virtual_steering_matrix(const VirtualStructure& vs,
                                         const std::vector<Direction>& dirs);

// Standard ESPRIT selectors on the m-element axis sub-array: J1 = [I 0],
// J2 = [0 I], both (m-1) x m.
std::pair<Eigen::MatrixXd, Eigen::MatrixXd> selection_matrices(const VirtualStructure& vs,
                                                               int axis);

// Selectors acting on the flat (virtual-tx x rx) row index of the matrix-form
// data, row = m~ + n*M~ with the first virtual axis varying fastest:
//   Khatri-Rao kinds: Omega_i = I_outer kron J_i kron I_inner
//   L-shaped: J_i composed with the axis sub-array extraction, kron I over rx.
std::pair<Eigen::MatrixXd, Eigen::MatrixXd> omega_selectors(const VirtualStructure& vs,
                                                            int n_rx, int axis);

// Angular grids for the interpolation design.
struct SectorGrid {
    double theta_lo = 0.0, theta_hi = 0.0;  // sector bounds, degrees
    double phi_lo = 0.0, phi_hi = 0.0;
    double transition_theta = 0.0, transition_phi = 0.0;
    double in_step = 1.0, out_step = 2.0;
    std::vector<Direction> in_sector;
    std::vector<Direction> out_sector;

    bool in_sector_contains(const Direction& d) const;
};

// In-sector grid covers [theta_lo, theta_hi] x [phi_lo, phi_hi] at in_step;
// the out-sector grid covers elevation [0, 90] x azimuth [0, 360) at out_step,
// excluding the sector widened by the transition zones. min_in_points guards
// the full-rank requirement of the design step.
SectorGrid build_sector_grid(double theta_lo, double theta_hi, double phi_lo, double phi_hi,
                             double transition_theta, double transition_phi, double in_step,
                             double out_step, int min_in_points = 0);

// Irregular planar transmit array: nx x ny grid with the given aperture per
// axis plus i.i.d. uniform [-displacement, displacement] offsets per
// coordinate, reproducible under seed.
ArrayGeometry irregular_transmit_array(int nx, int ny, double aperture, double displacement,
                                       std::uint64_t seed);

// Exact uniform rectangular array laid out in virtual-element order
// (first axis fastest), so that it coincides element-by-element with the
// virtual URA of the same shape.
ArrayGeometry ura_array(int m1, int m2, double spacing);

// Receive elements chosen at random (without replacement) from the transmit array.
ArrayGeometry select_receive_elements(const ArrayGeometry& tx, int n, std::uint64_t seed);

}  // namespace tbdoa
