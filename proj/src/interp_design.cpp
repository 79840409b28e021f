#include "tbdoa/interp_design.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

namespace tbdoa {

std::string to_string(DesignMethod m) {
    switch (m) {
        case DesignMethod::LeastSquares: return "ls";
        case DesignMethod::MinErrSubjectSidelobe: return "min_error";
        case DesignMethod::MinSidelobeSubjectErr: return "min_sidelobe";
    }
    return "?";
}

DesignMethod design_method_from_string(const std::string& s) {
    if (s == "ls") return DesignMethod::LeastSquares;
    if (s == "min_error") return DesignMethod::MinErrSubjectSidelobe;
    if (s == "min_sidelobe") return DesignMethod::MinSidelobeSubjectErr;
    throw std::invalid_argument("unknown design method: " + s);
}

Eigen::VectorXcd InterpolationDesign::mapped_steering(const Direction& d) const {
    return e.adjoint() * steering_vector(tx, d);
}

namespace {

void check_full_rank_grid(const ArrayGeometry& tx, const SectorGrid& grid) {
    if (static_cast<int>(grid.in_sector.size()) < tx.size())
        throw std::invalid_argument(
            "in-sector grid must have at least as many points as transmit elements: " +
            std::to_string(grid.in_sector.size()) + " < " + std::to_string(tx.size()));
}

std::string direction_str(const Direction& d) {
    std::ostringstream ss;
    ss << "(theta " << d.theta_deg << " deg, phi " << d.phi_deg << " deg)";
    return ss.str();
}

}  // namespace

Eigen::MatrixXcd design_ls_matrix(const Eigen::MatrixXcd& a, const Eigen::MatrixXcd& atil) {
    if (a.cols() != atil.cols())
        throw std::invalid_argument("steering matrices must share the grid dimension");
    if (a.cols() < a.rows())
        throw std::invalid_argument("need at least as many calibration points as elements");
    // (A A^H)^{-1} A A~^H computed as the least-squares solve of A^H E = A~^H;
    // the orthogonal decomposition tolerates the poor conditioning of
    // narrow-sector calibration grids far better than the normal equations.
    Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXcd> cod(a.adjoint());
    if (cod.rank() < a.rows())
        throw std::runtime_error("rank-deficient calibration steering matrix: rank " +
                                 std::to_string(cod.rank()) + " of dimension " +
                                 std::to_string(a.rows()));
    return cod.solve(atil.adjoint());
}

InterpolationDesign design_ls(const ArrayGeometry& tx, const SectorGrid& grid,
                              const VirtualStructure& vs) {
    vs.validate();
    check_full_rank_grid(tx, grid);
    InterpolationDesign d;
    d.tx = tx;
    d.virtual_array = vs;
    d.grid = grid;
    d.method = DesignMethod::LeastSquares;
    Eigen::MatrixXcd a = steering_matrix(tx, grid.in_sector);
    Eigen::MatrixXcd atil = virtual_steering_matrix(vs, grid.in_sector);
    d.e = design_ls_matrix(a, atil);
    d.achieved_objective = (d.e.adjoint() * a - atil).norm();  // Frobenius residual
    return d;
}

namespace {

// Norm of the unit-modulus ideal response, used to express the design bounds
// relative to the mainlobe level (delta = 0.1 reads as a 10% error budget).
double ideal_response_norm(NormKind norm, int virtual_count) {
    switch (norm) {
        case NormKind::L1: return static_cast<double>(virtual_count);
        case NormKind::L2: return std::sqrt(static_cast<double>(virtual_count));
        case NormKind::LInf: return 1.0;
    }
    return 1.0;
}

InterpolationDesign solve_minimax(const ArrayGeometry& tx, const SectorGrid& grid,
                                  const VirtualStructure& vs, DesignMethod method, double level,
                                  NormKind objective_norm, NormKind constraint_norm, int facets) {
    vs.validate();
    check_full_rank_grid(tx, grid);
    if (!(level > 0.0)) throw std::invalid_argument("design bound must be positive");

    Eigen::MatrixXcd a_in = steering_matrix(tx, grid.in_sector);
    Eigen::MatrixXcd atil_in = virtual_steering_matrix(vs, grid.in_sector);
    Eigen::MatrixXcd a_out = steering_matrix(tx, grid.out_sector);
    Eigen::MatrixXcd zeros_out =
        Eigen::MatrixXcd::Zero(vs.virtual_count(), static_cast<Eigen::Index>(grid.out_sector.size()));

    MinimaxProblem p;
    p.norm_obj = objective_norm;
    p.norm_con = constraint_norm;
    p.bound = level * ideal_response_norm(constraint_norm, vs.virtual_count());
    p.facets_per_halfplane = facets;
    if (method == DesignMethod::MinErrSubjectSidelobe) {
        p.a_obj = std::move(a_in);
        p.target_obj = std::move(atil_in);
        p.a_con = std::move(a_out);
        p.target_con = std::move(zeros_out);
    } else {
        p.a_obj = std::move(a_out);
        p.target_obj = std::move(zeros_out);
        p.a_con = std::move(a_in);
        p.target_con = std::move(atil_in);
    }

    MinimaxSolution sol = solve_minimax_design(p);
    if (sol.infeasible) {
        std::string where = sol.worst_constraint_index >= 0
                                ? direction_str(method == DesignMethod::MinErrSubjectSidelobe
                                                    ? grid.out_sector[static_cast<std::size_t>(
                                                          sol.worst_constraint_index)]
                                                    : grid.in_sector[static_cast<std::size_t>(
                                                          sol.worst_constraint_index)])
                                : "(unknown)";
        std::ostringstream msg;
        msg << "design infeasible: bound " << level << " cannot be met; most violated at "
            << where << " by " << sol.max_constraint_violation;
        throw std::runtime_error(msg.str());
    }
    if (!sol.converged)
        throw std::runtime_error("LP solver failed to converge: " + sol.status);

    InterpolationDesign d;
    d.tx = tx;
    d.virtual_array = vs;
    d.grid = grid;
    d.method = method;
    d.objective_norm = objective_norm;
    d.constraint_norm = constraint_norm;
    d.facets = facets;
    (method == DesignMethod::MinErrSubjectSidelobe ? d.gamma : d.delta) = level;
    d.e = sol.e;
    // exact-modulus objective, relative to the mainlobe response level
    double obj = 0.0;
    for (Eigen::Index j = 0; j < p.a_obj.cols(); ++j)
        obj = std::max(obj, point_norm(d.e, p.a_obj.col(j), p.target_obj.col(j), objective_norm));
    d.achieved_objective = obj / ideal_response_norm(objective_norm, vs.virtual_count());
    return d;
}

}  // namespace

InterpolationDesign design_minimax_error(const ArrayGeometry& tx, const SectorGrid& grid,
                                         const VirtualStructure& vs, double gamma,
                                         NormKind objective_norm, NormKind constraint_norm,
                                         int facets) {
    return solve_minimax(tx, grid, vs, DesignMethod::MinErrSubjectSidelobe, gamma, objective_norm,
                         constraint_norm, facets);
}

InterpolationDesign design_minimax_sidelobe(const ArrayGeometry& tx, const SectorGrid& grid,
                                            const VirtualStructure& vs, double delta,
                                            NormKind objective_norm, NormKind constraint_norm,
                                            int facets) {
    return solve_minimax(tx, grid, vs, DesignMethod::MinSidelobeSubjectErr, delta, objective_norm,
                         constraint_norm, facets);
}

InterpolationDesign exact_design(const VirtualStructure& vs, const SectorGrid& grid) {
    vs.validate();
    std::vector<Eigen::Vector2d> pos;
    if (vs.kind == VirtualKind::LShaped) {
        for (int i = 0; i < vs.m1; ++i) pos.emplace_back(i * vs.spacing, 0.0);
        for (int j = 1; j < vs.m2; ++j) pos.emplace_back(0.0, j * vs.spacing);
    } else {
        for (int j = 0; j < vs.m2; ++j)
            for (int i = 0; i < vs.m1; ++i) pos.emplace_back(i * vs.spacing, j * vs.spacing);
    }
    InterpolationDesign d;
    d.tx = ArrayGeometry(std::move(pos));
    d.virtual_array = vs;
    d.grid = grid;
    d.method = DesignMethod::LeastSquares;
    d.e = Eigen::MatrixXcd::Identity(vs.virtual_count(), vs.virtual_count());
    d.achieved_objective = 0.0;
    return d;
}

BeampatternGrid beampattern(const InterpolationDesign& d, const std::vector<Direction>& eval) {
    BeampatternGrid g;
    g.directions = eval;
    g.power_db.resize(eval.size());
    double peak = 0.0;
    std::vector<double> power(eval.size());
    for (std::size_t i = 0; i < eval.size(); ++i) {
        power[i] = d.mapped_steering(eval[i]).squaredNorm();
        peak = std::max(peak, power[i]);
    }
    if (peak <= 0.0) throw std::runtime_error("beampattern peak is zero; empty design?");
    for (std::size_t i = 0; i < eval.size(); ++i)
        g.power_db[i] = 10.0 * std::log10(std::max(power[i], 1e-300) / peak);
    return g;
}

std::vector<double> interpolation_error_map(const InterpolationDesign& d,
                                            const std::vector<Direction>& eval) {
    std::vector<double> eps(eval.size());
    for (std::size_t i = 0; i < eval.size(); ++i) {
        Eigen::VectorXcd atil = virtual_steering(d.virtual_array, eval[i]);
        eps[i] = (d.mapped_steering(eval[i]) - atil).norm() / atil.norm();
    }
    return eps;
}

double sigma_app(const InterpolationDesign& d, const Direction& dir) {
    Eigen::VectorXcd delta = d.mapped_steering(dir) - virtual_steering(d.virtual_array, dir);
    return delta.squaredNorm() / d.virtual_array.virtual_count();
}

DesignAudit audit_design(const InterpolationDesign& d) {
    DesignAudit audit;
    const int mt = d.virtual_array.virtual_count();
    const Eigen::VectorXcd zero = Eigen::VectorXcd::Zero(mt);
    const NormKind in_norm = d.method == DesignMethod::MinSidelobeSubjectErr
                                 ? d.constraint_norm
                                 : d.objective_norm;
    const NormKind out_norm = d.method == DesignMethod::MinErrSubjectSidelobe
                                  ? d.constraint_norm
                                  : d.objective_norm;
    Direction worst_in{}, worst_out{};
    for (const auto& dir : d.grid.in_sector) {
        const double v = point_norm(d.e, steering_vector(d.tx, dir),
                                    virtual_steering(d.virtual_array, dir), in_norm) /
                         ideal_response_norm(in_norm, mt);
        if (v > audit.max_in_error) {
            audit.max_in_error = v;
            worst_in = dir;
        }
    }
    for (const auto& dir : d.grid.out_sector) {
        const double v = point_norm(d.e, steering_vector(d.tx, dir), zero, out_norm) /
                         ideal_response_norm(out_norm, mt);
        if (v > audit.max_out_sidelobe) {
            audit.max_out_sidelobe = v;
            worst_out = dir;
        }
    }
    if (d.method == DesignMethod::MinSidelobeSubjectErr) {
        audit.worst_violation = audit.max_in_error - d.delta;
        audit.worst_direction = worst_in;
    } else if (d.method == DesignMethod::MinErrSubjectSidelobe) {
        audit.worst_violation = audit.max_out_sidelobe - d.gamma;
        audit.worst_direction = worst_out;
    }
    audit.feasible = audit.worst_violation <= 1e-6;
    return audit;
}

namespace {
constexpr const char* kDesignMagic = "tbdoa-design v1";
}

void InterpolationDesign::save(const std::string& path) const {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write design file: " + path);
    out.precision(17);
    out << kDesignMagic << "\n";
    out << "method " << to_string(method) << "\n";
    out << "norms " << to_string(objective_norm) << " " << to_string(constraint_norm) << "\n";
    out << "gamma " << gamma << "\n";
    out << "delta " << delta << "\n";
    out << "facets " << facets << "\n";
    out << "achieved_objective " << achieved_objective << "\n";
    out << "virtual " << to_string(virtual_array.kind) << " " << virtual_array.m1 << " "
        << virtual_array.m2 << " " << virtual_array.spacing << "\n";
    out << "sector " << grid.theta_lo << " " << grid.theta_hi << " " << grid.phi_lo << " "
        << grid.phi_hi << " " << grid.transition_theta << " " << grid.transition_phi << " "
        << grid.in_step << " " << grid.out_step << "\n";
    out << "tx " << tx.size() << "\n";
    for (int i = 0; i < tx.size(); ++i)
        out << tx.positions()[static_cast<std::size_t>(i)].x() << " "
            << tx.positions()[static_cast<std::size_t>(i)].y() << "\n";
    out << "e " << e.rows() << " " << e.cols() << "\n";
    for (Eigen::Index r = 0; r < e.rows(); ++r) {
        for (Eigen::Index c = 0; c < e.cols(); ++c)
            out << e(r, c).real() << " " << e(r, c).imag() << (c + 1 < e.cols() ? " " : "");
        out << "\n";
    }
}

InterpolationDesign InterpolationDesign::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open design file: " + path);
    std::string line;
    std::getline(in, line);
    if (line != kDesignMagic) throw std::runtime_error("not a design file: " + path);

    InterpolationDesign d;
    std::string key;
    std::string method_s, no, nc, kind_s;
    in >> key >> method_s;
    d.method = design_method_from_string(method_s);
    in >> key >> no >> nc;
    d.objective_norm = norm_kind_from_string(no);
    d.constraint_norm = norm_kind_from_string(nc);
    in >> key >> d.gamma;
    in >> key >> d.delta;
    in >> key >> d.facets;
    in >> key >> d.achieved_objective;
    in >> key >> kind_s >> d.virtual_array.m1 >> d.virtual_array.m2 >> d.virtual_array.spacing;
    d.virtual_array.kind = virtual_kind_from_string(kind_s);
    double th_lo, th_hi, ph_lo, ph_hi, tr_th, tr_ph, in_step, out_step;
    in >> key >> th_lo >> th_hi >> ph_lo >> ph_hi >> tr_th >> tr_ph >> in_step >> out_step;
    d.grid = build_sector_grid(th_lo, th_hi, ph_lo, ph_hi, tr_th, tr_ph, in_step, out_step);
    int ntx = 0;
    in >> key >> ntx;
    std::vector<Eigen::Vector2d> pos(static_cast<std::size_t>(ntx));
    for (auto& p : pos) in >> p.x() >> p.y();
    d.tx = ArrayGeometry(std::move(pos));
    Eigen::Index rows, cols;
    in >> key >> rows >> cols;
    d.e.resize(rows, cols);
    for (Eigen::Index r = 0; r < rows; ++r)
        for (Eigen::Index c = 0; c < cols; ++c) {
            double re, im;
            in >> re >> im;
            d.e(r, c) = {re, im};
        }
    if (!in) throw std::runtime_error("truncated design file: " + path);
    return d;
}

}  // namespace tbdoa
