#include "tbdoa/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "tbdoa/rng.hpp"

namespace tbdoa {

ArrayGeometry::ArrayGeometry(std::vector<Eigen::Vector2d> positions)
    : positions_(std::move(positions)) {
    if (positions_.empty()) throw std::invalid_argument("array needs at least one element");
    for (const auto& p : positions_)
        if (!p.allFinite()) throw std::invalid_argument("array positions must be finite");
}

ArrayGeometry ArrayGeometry::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open array file: " + path);
    std::vector<Eigen::Vector2d> pos;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#') continue;
        std::istringstream ss(line);
        int idx;
        double x, y;
        if (!(ss >> idx >> x >> y))
            throw std::runtime_error("malformed array record in " + path + ": " + line);
        pos.emplace_back(x, y);
    }
    return ArrayGeometry(std::move(pos));
}

void ArrayGeometry::save(const std::string& path) const {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write array file: " + path);
    out << "# element x_wavelengths y_wavelengths\n";
    out.precision(17);
    for (std::size_t i = 0; i < positions_.size(); ++i)
        out << i << " " << positions_[i].x() << " " << positions_[i].y() << "\n";
}

std::string to_string(VirtualKind k) {
    switch (k) {
        case VirtualKind::CrossUla: return "cross_ula";
        case VirtualKind::Ura: return "ura";
        case VirtualKind::LShaped: return "l_shaped";
    }
    return "?";
}

VirtualKind virtual_kind_from_string(const std::string& s) {
    if (s == "cross_ula") return VirtualKind::CrossUla;
    if (s == "ura") return VirtualKind::Ura;
    if (s == "l_shaped") return VirtualKind::LShaped;
    throw std::invalid_argument("unknown virtual array kind: " + s);
}

void VirtualStructure::validate() const {
    if (m1 < 2 || m2 < 2) throw std::invalid_argument("virtual axes need at least 2 elements");
    if (!(spacing > 0.0)) throw std::invalid_argument("virtual spacing must be positive");
}

int VirtualStructure::virtual_count() const {
    return kind == VirtualKind::LShaped ? m1 + m2 - 1 : m1 * m2;
}

std::vector<Eigen::Index> VirtualStructure::tensor_dims(int n_rx, int pulses) const {
    if (kind == VirtualKind::LShaped)
        return {m1 + m2 - 1, n_rx, pulses};
    return {m1, m2, n_rx, pulses};
}

std::vector<int> VirtualStructure::axis_indices(int axis) const {
    if (axis != 0 && axis != 1) throw std::invalid_argument("virtual axis must be 0 or 1");
    std::vector<int> idx;
    if (kind == VirtualKind::LShaped) {
        if (axis == 0) {
            for (int i = 0; i < m1; ++i) idx.push_back(i);
        } else {
            idx.push_back(0);  // shared origin element
            for (int j = 1; j < m2; ++j) idx.push_back(m1 + j - 1);
        }
    } else {
        // flat index m~ = i + j*m1
        if (axis == 0) {
            for (int i = 0; i < m1; ++i) idx.push_back(i);
        } else {
            for (int j = 0; j < m2; ++j) idx.push_back(j * m1);
        }
    }
    return idx;
}

int VirtualStructure::axis_size(int axis) const {
    if (axis != 0 && axis != 1) throw std::invalid_argument("virtual axis must be 0 or 1");
    return axis == 0 ? m1 : m2;
}

Eigen::VectorXcd steering_vector(const ArrayGeometry& g, const Direction& d) {
    const double st = std::sin(d.theta_rad());
    const Eigen::Vector2d u(st * std::cos(d.phi_rad()), st * std::sin(d.phi_rad()));
    Eigen::VectorXcd a(g.size());
    for (int m = 0; m < g.size(); ++m) {
        const double phase = -2.0 * kPi * u.dot(g.positions()[static_cast<std::size_t>(m)]);
        a(m) = std::polar(1.0, phase);
    }
    return a;
}

Eigen::MatrixXcd steering_matrix(const ArrayGeometry& g, const std::vector<Direction>& dirs) {
    Eigen::MatrixXcd a(g.size(), static_cast<Eigen::Index>(dirs.size()));
    for (std::size_t c = 0; c < dirs.size(); ++c)
        a.col(static_cast<Eigen::Index>(c)) = steering_vector(g, dirs[c]);
    return a;
}

Eigen::VectorXcd axis_steering(int m, double spacing, double cosine) {
    Eigen::VectorXcd v(m);
    for (int i = 0; i < m; ++i) v(i) = std::polar(1.0, -2.0 * kPi * spacing * i * cosine);
    return v;
}

std::pair<double, double> direction_cosines(const Direction& d, VirtualKind kind) {
    const double st = std::sin(d.theta_rad());
    if (kind == VirtualKind::CrossUla)
        return {st, std::sin(d.phi_rad())};
    return {st * std::cos(d.phi_rad()), st * std::sin(d.phi_rad())};
}

AngleConversion angles_from_cosines(double mu, double nu, VirtualKind kind) {
    AngleConversion out;
    auto clip_unit = [&out](double x) {
        if (x > 1.0) { out.clipped = true; return 1.0; }
        if (x < -1.0) { out.clipped = true; return -1.0; }
        return x;
    };
    if (kind == VirtualKind::CrossUla) {
        out.direction.theta_deg = rad2deg(std::asin(clip_unit(mu)));
        out.direction.phi_deg = rad2deg(std::asin(clip_unit(nu)));
        out.degenerate = (mu == 0.0 && nu == 0.0);
        return out;
    }
    double r2 = mu * mu + nu * nu;
    if (r2 > 1.0) {
        out.clipped = true;
        const double s = 1.0 / std::sqrt(r2);
        mu *= s;
        nu *= s;
        r2 = 1.0;
    }
    if (r2 < 1e-300) {
        out.degenerate = true;
        out.direction = {0.0, 0.0};
        return out;
    }
    out.direction.theta_deg = rad2deg(std::asin(std::sqrt(r2)));
    double phi = rad2deg(std::atan2(nu, mu));
    if (phi < 0.0) phi += 360.0;
    out.direction.phi_deg = phi;
    return out;
}

Eigen::VectorXcd virtual_steering(const VirtualStructure& vs, const Direction& d) {
    vs.validate();
    const auto [mu, nu] = direction_cosines(d, vs.kind);
    const Eigen::VectorXcd c = axis_steering(vs.m1, vs.spacing, mu);
    const Eigen::VectorXcd dv = axis_steering(vs.m2, vs.spacing, nu);
    if (vs.kind == VirtualKind::LShaped) {
        Eigen::VectorXcd a(vs.virtual_count());
        a.head(vs.m1) = c;
        a.tail(vs.m2 - 1) = dv.tail(vs.m2 - 1);  // origin counted once
        return a;
    }
    // Khatri-Rao of the two axis steering vectors, first axis fastest:
    // entry m~ = i + j*m1 is c_i * d_j.
    Eigen::VectorXcd a(vs.virtual_count());
    for (int j = 0; j < vs.m2; ++j)
        for (int i = 0; i < vs.m1; ++i) a(i + j * vs.m1) = c(i) * dv(j);
    return a;
}

Eigen::MatrixXcd virtual_steering_matrix(const VirtualStructure& vs,
                                         const std::vector<Direction>& dirs) {
    Eigen::MatrixXcd a(vs.virtual_count(), static_cast<Eigen::Index>(dirs.size()));
    for (std::size_t c = 0; c < dirs.size(); ++c)
        a.col(static_cast<Eigen::Index>(c)) = virtual_steering(vs, dirs[c]);
    return a;
}

std::pair<Eigen::MatrixXd, Eigen::MatrixXd> selection_matrices(const VirtualStructure& vs,
                                                               int axis) {
    const int m = vs.axis_size(axis);
    Eigen::MatrixXd j1 = Eigen::MatrixXd::Zero(m - 1, m);
    Eigen::MatrixXd j2 = Eigen::MatrixXd::Zero(m - 1, m);
    j1.leftCols(m - 1).setIdentity();
    j2.rightCols(m - 1).setIdentity();
    return {j1, j2};
}

std::pair<Eigen::MatrixXd, Eigen::MatrixXd> omega_selectors(const VirtualStructure& vs,
                                                            int n_rx, int axis) {
    auto [j1, j2] = selection_matrices(vs, axis);
    auto kron = [](const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
        Eigen::MatrixXd k(a.rows() * b.rows(), a.cols() * b.cols());
        for (Eigen::Index i = 0; i < a.rows(); ++i)
            for (Eigen::Index j = 0; j < a.cols(); ++j)
                k.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
        return k;
    };
    const Eigen::MatrixXd i_rx = Eigen::MatrixXd::Identity(n_rx, n_rx);
    if (vs.kind == VirtualKind::LShaped) {
        const int vcount = vs.virtual_count();
        const auto idx = vs.axis_indices(axis);
        Eigen::MatrixXd sub = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(idx.size()), vcount);
        for (std::size_t r = 0; r < idx.size(); ++r) sub(static_cast<Eigen::Index>(r), idx[r]) = 1.0;
        return {kron(i_rx, j1 * sub), kron(i_rx, j2 * sub)};
    }
    // row index = i + m1*j + m1*m2*n, first axis fastest
    if (axis == 0) {
        const Eigen::MatrixXd outer = Eigen::MatrixXd::Identity(vs.m2 * n_rx, vs.m2 * n_rx);
        return {kron(outer, j1), kron(outer, j2)};
    }
    const Eigen::MatrixXd inner = Eigen::MatrixXd::Identity(vs.m1, vs.m1);
    return {kron(i_rx, kron(j1, inner)), kron(i_rx, kron(j2, inner))};
}

bool SectorGrid::in_sector_contains(const Direction& d) const {
    return d.theta_deg >= theta_lo && d.theta_deg <= theta_hi && d.phi_deg >= phi_lo &&
           d.phi_deg <= phi_hi;
}

SectorGrid build_sector_grid(double theta_lo, double theta_hi, double phi_lo, double phi_hi,
                             double transition_theta, double transition_phi, double in_step,
                             double out_step, int min_in_points) {
    if (!(theta_hi > theta_lo) || !(phi_hi > phi_lo))
        throw std::invalid_argument("sector bounds must be ordered and non-empty");
    if (!(in_step > 0.0) || !(out_step > 0.0))
        throw std::invalid_argument("grid steps must be positive");
    if (transition_theta < 0.0 || transition_phi < 0.0)
        throw std::invalid_argument("transition widths must be non-negative");

    SectorGrid g;
    g.theta_lo = theta_lo;
    g.theta_hi = theta_hi;
    g.phi_lo = phi_lo;
    g.phi_hi = phi_hi;
    g.transition_theta = transition_theta;
    g.transition_phi = transition_phi;
    g.in_step = in_step;
    g.out_step = out_step;

    const double eps = 1e-9;
    for (double th = theta_lo; th <= theta_hi + eps; th += in_step)
        for (double ph = phi_lo; ph <= phi_hi + eps; ph += in_step)
            g.in_sector.push_back({std::min(th, theta_hi), std::min(ph, phi_hi)});

    const double ex_th_lo = theta_lo - transition_theta, ex_th_hi = theta_hi + transition_theta;
    const double ex_ph_lo = phi_lo - transition_phi, ex_ph_hi = phi_hi + transition_phi;
    for (double th = 0.0; th <= 90.0 + eps; th += out_step) {
        for (double ph = 0.0; ph < 360.0 - eps; ph += out_step) {
            const bool excluded = th >= ex_th_lo - eps && th <= ex_th_hi + eps &&
                                  ph >= ex_ph_lo - eps && ph <= ex_ph_hi + eps;
            if (!excluded) g.out_sector.push_back({std::min(th, 90.0), ph});
        }
    }

    if (g.in_sector.empty()) throw std::invalid_argument("empty in-sector grid");
    if (static_cast<int>(g.in_sector.size()) < min_in_points)
        throw std::invalid_argument(
            "in-sector grid has fewer points than required for full rank: " +
            std::to_string(g.in_sector.size()) + " < " + std::to_string(min_in_points));
    return g;
}

ArrayGeometry irregular_transmit_array(int nx, int ny, double aperture, double displacement,
                                       std::uint64_t seed) {
    if (nx < 2 || ny < 2) throw std::invalid_argument("irregular array needs nx, ny >= 2");
    CounterRng rng(seed, /*stream=*/0x6172726179ull);  // dedicated geometry stream
    const double dx = aperture / (nx - 1), dy = aperture / (ny - 1);
    std::vector<Eigen::Vector2d> pos;
    pos.reserve(static_cast<std::size_t>(nx) * static_cast<std::size_t>(ny));
    for (int j = 0; j < ny; ++j)
        for (int i = 0; i < nx; ++i)
            pos.emplace_back(i * dx + rng.uniform(-displacement, displacement),
                             j * dy + rng.uniform(-displacement, displacement));
    return ArrayGeometry(std::move(pos));
}

ArrayGeometry ura_array(int m1, int m2, double spacing) {
    std::vector<Eigen::Vector2d> pos;
    pos.reserve(static_cast<std::size_t>(m1) * static_cast<std::size_t>(m2));
    for (int j = 0; j < m2; ++j)
        for (int i = 0; i < m1; ++i) pos.emplace_back(i * spacing, j * spacing);
    return ArrayGeometry(std::move(pos));
}

ArrayGeometry select_receive_elements(const ArrayGeometry& tx, int n, std::uint64_t seed) {
    if (n < 1 || n > tx.size())
        throw std::invalid_argument("receive element count out of range");
    CounterRng rng(seed, /*stream=*/0x7278ull);
    std::vector<int> idx(static_cast<std::size_t>(tx.size()));
    for (int i = 0; i < tx.size(); ++i) idx[static_cast<std::size_t>(i)] = i;
    // Fisher-Yates prefix
    for (int i = 0; i < n; ++i) {
        const int j = i + static_cast<int>(rng.below(static_cast<std::uint64_t>(tx.size() - i)));
        std::swap(idx[static_cast<std::size_t>(i)], idx[static_cast<std::size_t>(j)]);
    }
    std::vector<Eigen::Vector2d> pos;
    pos.reserve(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i)
        pos.push_back(tx.positions()[static_cast<std::size_t>(idx[static_cast<std::size_t>(i)])]);
    return ArrayGeometry(std::move(pos));
}

}  // namespace tbdoa
