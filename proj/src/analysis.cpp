#include "tbdoa/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <sstream>

namespace tbdoa {

namespace {

Eigen::VectorXcd kron_pair(const Eigen::VectorXcd& outer, const Eigen::VectorXcd& inner) {
    Eigen::VectorXcd v(outer.size() * inner.size());
    for (Eigen::Index r = 0; r < outer.size(); ++r)
        v.segment(r * inner.size(), inner.size()) = outer(r) * inner;
    return v;
}

// element-wise derivative weights of a steering vector w.r.t. the angles
void steering_weights(const ArrayGeometry& g, const Direction& d, Eigen::VectorXcd& w_theta,
                      Eigen::VectorXcd& w_phi) {
    const double th = d.theta_rad(), ph = d.phi_rad();
    const Eigen::Vector2d du_dth(std::cos(th) * std::cos(ph), std::cos(th) * std::sin(ph));
    const Eigen::Vector2d du_dph(-std::sin(th) * std::sin(ph), std::sin(th) * std::cos(ph));
    w_theta.resize(g.size());
    w_phi.resize(g.size());
    const cd j2pi(0.0, -2.0 * kPi);
    for (int m = 0; m < g.size(); ++m) {
        const auto& p = g.positions()[static_cast<std::size_t>(m)];
        w_theta(m) = j2pi * du_dth.dot(p);
        w_phi(m) = j2pi * du_dph.dot(p);
    }
}

}  // namespace

void steering_derivatives(const InterpolationDesign& design, const ArrayGeometry& rx,
                          const Direction& d, Eigen::VectorXcd& df_dtheta,
                          Eigen::VectorXcd& df_dphi) {
    const Eigen::VectorXcd a = steering_vector(design.tx, d);
    const Eigen::VectorXcd b = steering_vector(rx, d);
    Eigen::VectorXcd wa_th, wa_ph, wb_th, wb_ph;
    steering_weights(design.tx, d, wa_th, wa_ph);
    steering_weights(rx, d, wb_th, wb_ph);
    const Eigen::VectorXcd ea = design.e.adjoint() * a;
    const Eigen::VectorXcd ea_th = design.e.adjoint() * wa_th.cwiseProduct(a).eval();
    const Eigen::VectorXcd ea_ph = design.e.adjoint() * wa_ph.cwiseProduct(a).eval();
    df_dtheta = kron_pair(b, ea_th) + kron_pair(wb_th.cwiseProduct(b), ea);
    df_dphi = kron_pair(b, ea_ph) + kron_pair(wb_ph.cwiseProduct(b), ea);
}

CrbReport crb(const std::vector<Direction>& targets, const InterpolationDesign& design,
              const ArrayGeometry& rx, const Eigen::MatrixXcd& rcs, double noise_variance) {
    const int k = static_cast<int>(targets.size());
    if (k < 1) throw std::invalid_argument("need at least one target");
    if (rcs.rows() != k) throw std::invalid_argument("RCS matrix must have one row per target");
    if (!(noise_variance > 0.0)) throw std::invalid_argument("noise variance must be positive");

    const Eigen::MatrixXcd f = steering_matrix_f(design, rx, targets);
    Eigen::MatrixXcd d_mat(f.rows(), 2 * k);  // [D_e, D_a]
    for (int t = 0; t < k; ++t) {
        Eigen::VectorXcd dth, dph;
        steering_derivatives(design, rx, targets[static_cast<std::size_t>(t)], dth, dph);
        d_mat.col(t) = dth;
        d_mat.col(k + t) = dph;
    }

    Eigen::MatrixXcd gram = f.adjoint() * f;
    Eigen::LDLT<Eigen::MatrixXcd> ldlt(gram);
    if (ldlt.info() != Eigen::Success ||
        ldlt.vectorD().real().minCoeff() < 1e-12 * ldlt.vectorD().real().maxCoeff())
        throw std::runtime_error("steering matrix is rank deficient (coincident targets?)");

    // D^H (I - F (F^H F)^{-1} F^H) D
    const Eigen::MatrixXcd fd = f.adjoint() * d_mat;
    const Eigen::MatrixXcd g = d_mat.adjoint() * d_mat - fd.adjoint() * ldlt.solve(fd);

    // sum_q Re{ C_q^H G C_q } with C_q = I_2 kron diag(beta(q))
    const Eigen::Index q = rcs.cols();
    Eigen::MatrixXcd c(2 * k, q);
    c.topRows(k) = rcs;
    c.bottomRows(k) = rcs;
    const Eigen::MatrixXcd w = c.conjugate() * c.transpose();  // W_ij = sum_q conj(c_i) c_j
    const Eigen::MatrixXd j_mat = (g.array() * w.array()).real();

    Eigen::LDLT<Eigen::MatrixXd> jinv(j_mat);
    if (jinv.info() != Eigen::Success)
        throw std::runtime_error("singular Fisher information (degenerate scene)");
    const Eigen::VectorXd diag =
        jinv.solve(Eigen::MatrixXd::Identity(2 * k, 2 * k)).diagonal();

    CrbReport rep;
    const double rad2 = noise_variance / 2.0;
    const double to_deg2 = (180.0 / kPi) * (180.0 / kPi);
    double acc_th = 0.0, acc_ph = 0.0;
    for (int t = 0; t < k; ++t) {
        const double vt = rad2 * diag(t) * to_deg2;
        const double vp = rad2 * diag(k + t) * to_deg2;
        if (!(vt > 0.0) || !(vp > 0.0) || !std::isfinite(vt) || !std::isfinite(vp))
            throw std::runtime_error("CRB is not positive finite (degenerate scene)");
        rep.theta_var_deg2.push_back(vt);
        rep.phi_var_deg2.push_back(vp);
        acc_th += vt;
        acc_ph += vp;
    }
    rep.rmse_theta_deg = std::sqrt(acc_th / k);
    rep.rmse_phi_deg = std::sqrt(acc_ph / k);
    return rep;
}

namespace {

struct AxisEigen {
    Eigen::VectorXcd values;
    Eigen::MatrixXcd right;
    Eigen::MatrixXcd left;  // rows, normalized p^T q = 1
};

AxisEigen axis_eigensystem(const Eigen::MatrixXcd& u_s, const Eigen::MatrixXd& o1,
                           const Eigen::MatrixXd& o2) {
    Eigen::MatrixXcd psi = pinv(o1 * u_s) * (o2 * u_s);
    Eigen::ComplexEigenSolver<Eigen::MatrixXcd> ces(psi);
    if (ces.info() != Eigen::Success) throw std::runtime_error("shift eigensolve failed");
    AxisEigen ax;
    ax.values = ces.eigenvalues();
    ax.right = ces.eigenvectors();
    for (Eigen::Index i = 0; i < ax.values.size(); ++i) {
        if (ax.right.col(i).norm() < 1e-12)
            throw std::runtime_error("zero-norm shift eigenvector");
        for (Eigen::Index j = i + 1; j < ax.values.size(); ++j)
            if (std::abs(ax.values(i) - ax.values(j)) < 1e-10)
                throw std::runtime_error(
                    "degenerate shift eigenvalues: the perturbation expansion is undefined");
    }
    ax.left = ax.right.inverse();
    return ax;
}

}  // namespace

BiasPrediction bias_predict(const InterpolationDesign& design, const ArrayGeometry& rx,
                            const std::vector<Direction>& targets, int k) {
    if (static_cast<int>(targets.size()) != k)
        throw std::invalid_argument("target count mismatch");
    const VirtualStructure& vs = design.virtual_array;
    const int n_rx = rx.size();

    const Eigen::MatrixXcd f_ideal = ideal_steering_matrix_f(vs, rx, targets);
    const Eigen::MatrixXcd f_actual = steering_matrix_f(design, rx, targets);
    const Eigen::MatrixXcd delta_f = f_actual - f_ideal;

    // noiseless signal subspace of the ideal model
    Eigen::JacobiSVD<Eigen::MatrixXcd> svd(f_ideal, Eigen::ComputeThinU);
    if (svd.singularValues()(k - 1) < 1e-12 * svd.singularValues()(0))
        throw std::runtime_error("ideal steering matrix is rank deficient");
    const Eigen::MatrixXcd u_s = svd.matrixU().leftCols(k);
    const Eigen::MatrixXcd f_pinv_us = pinv(f_ideal) * u_s;  // K x K

    auto [o11, o21] = omega_selectors(vs, n_rx, 0);
    auto [o12, o22] = omega_selectors(vs, n_rx, 1);
    AxisEigen ax_th = axis_eigensystem(u_s, o11, o21);
    AxisEigen ax_ph = axis_eigensystem(u_s, o12, o22);

    // associate eigenvalues with physical targets through the true cosines
    std::vector<double> mu_true(targets.size()), nu_true(targets.size());
    for (std::size_t t = 0; t < targets.size(); ++t) {
        auto [mu, nu] = direction_cosines(targets[t], vs.kind);
        mu_true[t] = mu;
        nu_true[t] = nu;
    }
    const double two_pi_d = 2.0 * kPi * vs.spacing;
    auto match = [&](const Eigen::VectorXcd& values, const std::vector<double>& truth) {
        std::vector<int> pick(truth.size());
        std::vector<char> used(static_cast<std::size_t>(values.size()), 0);
        for (std::size_t t = 0; t < truth.size(); ++t) {
            double best = 1e300;
            int bi = -1;
            for (Eigen::Index i = 0; i < values.size(); ++i) {
                if (used[static_cast<std::size_t>(i)]) continue;
                const double est = -std::arg(values(i)) / two_pi_d;
                const double dist = std::abs(est - truth[t]);
                if (dist < best) {
                    best = dist;
                    bi = static_cast<int>(i);
                }
            }
            pick[t] = bi;
            used[static_cast<std::size_t>(bi)] = 1;
        }
        return pick;
    };
    const std::vector<int> pick_th = match(ax_th.values, mu_true);
    const std::vector<int> pick_ph = match(ax_ph.values, nu_true);

    // projector onto the ideal noise subspace, applied functionally
    const Eigen::MatrixXcd delta_us =
        (delta_f - u_s * (u_s.adjoint() * delta_f)) * f_pinv_us;  // P_n DF F~^+ U_s

    const Eigen::MatrixXcd p1_th = pinv(o11 * u_s);
    const Eigen::MatrixXcd p1_ph = pinv(o12 * u_s);

    BiasPrediction out;
    out.sigma2_app.resize(targets.size());
    out.det_dmu.resize(targets.size());
    out.det_dnu.resize(targets.size());
    out.det_dtheta_deg.resize(targets.size());
    out.det_dphi_deg.resize(targets.size());
    out.mse_mu.resize(targets.size());
    out.mse_nu.resize(targets.size());
    out.mse_theta_deg2.resize(targets.size());
    out.mse_phi_deg2.resize(targets.size());

    const int mt = vs.virtual_count();
    for (std::size_t t = 0; t < targets.size(); ++t) {
        out.sigma2_app[t] = sigma_app(design, targets[t]);
        const Eigen::VectorXcd b_t = steering_vector(rx, targets[t]);

        auto axis_terms = [&](const AxisEigen& ax, const Eigen::MatrixXcd& p1,
                              const Eigen::MatrixXd& o1, const Eigen::MatrixXd& o2, int pick,
                              double& det_dcos, double& mse_cos) {
            const cd lambda = ax.values(pick);
            const Eigen::RowVectorXcd p_left = ax.left.row(pick);
            const Eigen::VectorXcd q_right = ax.right.col(pick);
            // alpha_k = p^T (O1 Us)^+ (O2/lambda - O1) P_n  (row vector)
            Eigen::RowVectorXcd alpha =
                (p_left * p1) * (o2 / lambda - o1);
            alpha = alpha - (alpha * u_s) * u_s.adjoint();
            const Eigen::VectorXcd beta = f_pinv_us * q_right;
            // deterministic first order: dlambda/lambda = alpha * DF * beta
            const cd rel = (alpha * delta_f * beta)(0);
            det_dcos = -std::imag(rel) / two_pi_d;
            // The error enters as DF_k = b_k kron Da~_k, so the expectation
            // over entry-wise Da~ statistics contracts alpha against the
            // receive steering before taking its norm.
            double alpha_sq = 0.0;
            for (int c = 0; c < mt; ++c) {
                cd acc = 0.0;
                for (int n = 0; n < n_rx; ++n) acc += alpha(n * mt + c) * b_t(n);
                alpha_sq += std::norm(acc);
            }
            const double cfac = 1.0 / two_pi_d;
            mse_cos = out.sigma2_app[t] * 0.5 * cfac * cfac * alpha_sq * beta.squaredNorm();
        };
        axis_terms(ax_th, p1_th, o11, o21, pick_th[t], out.det_dmu[t], out.mse_mu[t]);
        axis_terms(ax_ph, p1_ph, o12, o22, pick_ph[t], out.det_dnu[t], out.mse_nu[t]);

        // deterministic conversion through the exact cosine-angle map
        AngleConversion conv = angles_from_cosines(mu_true[t] + out.det_dmu[t],
                                                   nu_true[t] + out.det_dnu[t], vs.kind);
        out.det_dtheta_deg[t] = conv.direction.theta_deg - targets[t].theta_deg;
        double dphi = conv.direction.phi_deg - targets[t].phi_deg;
        if (dphi > 180.0) dphi -= 360.0;
        if (dphi < -180.0) dphi += 360.0;
        out.det_dphi_deg[t] = dphi;

        // MSE conversion with the first-order partials
        const double mu = mu_true[t], nu = nu_true[t];
        const double r2 = mu * mu + nu * nu;
        const double to_deg2 = (180.0 / kPi) * (180.0 / kPi);
        out.mse_theta_deg2[t] =
            (mu * mu / r2 * out.mse_mu[t] + nu * nu / r2 * out.mse_nu[t]) * to_deg2;
        out.mse_phi_deg2[t] =
            (nu * nu / (r2 * r2) * out.mse_mu[t] + mu * mu / (r2 * r2) * out.mse_nu[t]) * to_deg2;
    }
    return out;
}

LookUpTable build_lut(const InterpolationDesign& design, const ArrayGeometry& rx,
                      Estimator estimator, double lattice_step_deg) {
    if (!(lattice_step_deg > 0.0)) throw std::invalid_argument("lattice step must be positive");
    if (estimator == Estimator::SpectralMusic)
        throw std::invalid_argument("look-up tables target the ESPRIT-family estimators");

    LookUpTable lut;
    lut.step = lattice_step_deg;
    lut.theta_lo = design.grid.theta_lo;
    lut.phi_lo = design.grid.phi_lo;
    lut.n_theta = static_cast<int>(std::floor((design.grid.theta_hi - design.grid.theta_lo) /
                                              lattice_step_deg + 1e-9)) + 1;
    lut.n_phi = static_cast<int>(std::floor((design.grid.phi_hi - design.grid.phi_lo) /
                                            lattice_step_deg + 1e-9)) + 1;
    const std::size_t total =
        static_cast<std::size_t>(lut.n_theta) * static_cast<std::size_t>(lut.n_phi);
    lut.mu_true.resize(total);
    lut.nu_true.resize(total);
    lut.mu_est.assign(total, std::numeric_limits<double>::quiet_NaN());
    lut.nu_est.assign(total, std::numeric_limits<double>::quiet_NaN());

    const VirtualStructure& vs = design.virtual_array;
    for (int it = 0; it < lut.n_theta; ++it) {
        for (int ip = 0; ip < lut.n_phi; ++ip) {
            const std::size_t cell = static_cast<std::size_t>(it * lut.n_phi + ip);
            const Direction d{lut.theta_lo + it * lattice_step_deg,
                              lut.phi_lo + ip * lattice_step_deg};
            auto [mu, nu] = direction_cosines(d, vs.kind);
            lut.mu_true[cell] = mu;
            lut.nu_true[cell] = nu;
            try {
                SnapshotSet snap = noise_free_snapshot(design, rx, {d}, 1);
                DoaEstimate est;
                switch (estimator) {
                    case Estimator::MatrixEsprit: est = matrix_esprit(snap, vs, 1); break;
                    case Estimator::HosvdEsprit: est = hosvd_esprit(snap, vs, 1); break;
                    default: est = tev(snap, vs, 1); break;
                }
                lut.mu_est[cell] = est.targets[0].mu;
                lut.nu_est[cell] = est.targets[0].nu;
            } catch (const std::exception& e) {
                std::ostringstream w;
                w << "lattice point (theta " << d.theta_deg << ", phi " << d.phi_deg
                  << ") failed: " << e.what() << "; interpolated from neighbors";
                lut.warnings.push_back(w.str());
            }
        }
    }
    // fill failed points from valid neighbors
    for (int it = 0; it < lut.n_theta; ++it)
        for (int ip = 0; ip < lut.n_phi; ++ip) {
            const std::size_t cell = static_cast<std::size_t>(it * lut.n_phi + ip);
            if (!std::isnan(lut.mu_est[cell])) continue;
            double mu_acc = 0.0, nu_acc = 0.0;
            int count = 0;
            for (int dt = -1; dt <= 1; ++dt)
                for (int dp = -1; dp <= 1; ++dp) {
                    const int jt = it + dt, jp = ip + dp;
                    if (jt < 0 || jt >= lut.n_theta || jp < 0 || jp >= lut.n_phi) continue;
                    const std::size_t nb = static_cast<std::size_t>(jt * lut.n_phi + jp);
                    if (std::isnan(lut.mu_est[nb])) continue;
                    mu_acc += lut.mu_est[nb];
                    nu_acc += lut.nu_est[nb];
                    ++count;
                }
            if (count == 0) throw std::runtime_error("look-up table build failed everywhere");
            lut.mu_est[cell] = mu_acc / count;
            lut.nu_est[cell] = nu_acc / count;
        }
    return lut;
}

namespace {

// inverse bilinear coordinates of point p inside the quad (p00, p10, p01, p11)
bool invert_bilinear(const Eigen::Vector2d& p, const Eigen::Vector2d& p00,
                     const Eigen::Vector2d& p10, const Eigen::Vector2d& p01,
                     const Eigen::Vector2d& p11, double& s, double& t) {
    s = 0.5;
    t = 0.5;
    for (int iter = 0; iter < 12; ++iter) {
        const Eigen::Vector2d r = (1 - s) * (1 - t) * p00 + s * (1 - t) * p10 +
                                  (1 - s) * t * p01 + s * t * p11 - p;
        const Eigen::Vector2d ds = -(1 - t) * p00 + (1 - t) * p10 - t * p01 + t * p11;
        const Eigen::Vector2d dt = -(1 - s) * p00 - s * p10 + (1 - s) * p01 + s * p11;
        Eigen::Matrix2d jac;
        jac << ds, dt;
        const double det = jac.determinant();
        if (std::abs(det) < 1e-300) return false;
        const Eigen::Vector2d upd = jac.inverse() * r;
        s -= upd(0);
        t -= upd(1);
        if (r.norm() < 1e-14) break;
    }
    return std::isfinite(s) && std::isfinite(t);
}

}  // namespace

DoaEstimate apply_lut(const LookUpTable& lut, const DoaEstimate& est) {
    DoaEstimate out = est;
    const int nt = lut.n_theta, np = lut.n_phi;
    auto at = [&](int it, int ip) {
        const std::size_t c = static_cast<std::size_t>(it * np + ip);
        return Eigen::Vector2d(lut.mu_est[c], lut.nu_est[c]);
    };
    auto truth_at = [&](int it, int ip) {
        const std::size_t c = static_cast<std::size_t>(it * np + ip);
        return Eigen::Vector2d(lut.mu_true[c], lut.nu_true[c]);
    };
    for (auto& target : out.targets) {
        const Eigen::Vector2d p(target.mu, target.nu);
        // nearest lattice vertex in estimate space
        int bi = 0, bj = 0;
        double best = 1e300;
        for (int it = 0; it < nt; ++it)
            for (int ip = 0; ip < np; ++ip) {
                const double dist = (at(it, ip) - p).squaredNorm();
                if (dist < best) {
                    best = dist;
                    bi = it;
                    bj = ip;
                }
            }
        // try the four cells incident to the nearest vertex
        bool applied = false;
        for (int dt = -1; dt <= 0 && !applied; ++dt)
            for (int dp = -1; dp <= 0 && !applied; ++dp) {
                const int it = bi + dt, ip = bj + dp;
                if (it < 0 || it + 1 >= nt || ip < 0 || ip + 1 >= np) continue;
                double s, t;
                if (!invert_bilinear(p, at(it, ip), at(it + 1, ip), at(it, ip + 1),
                                     at(it + 1, ip + 1), s, t))
                    continue;
                if (s < -1e-9 || s > 1 + 1e-9 || t < -1e-9 || t > 1 + 1e-9) continue;
                const Eigen::Vector2d truth = (1 - s) * (1 - t) * truth_at(it, ip) +
                                              s * (1 - t) * truth_at(it + 1, ip) +
                                              (1 - s) * t * truth_at(it, ip + 1) +
                                              s * t * truth_at(it + 1, ip + 1);
                AngleConversion conv = angles_from_cosines(truth(0), truth(1), VirtualKind::Ura);
                target.lut_corrected = true;
                target.theta_corrected_deg = conv.direction.theta_deg;
                target.phi_corrected_deg = conv.direction.phi_deg;
                applied = true;
            }
        if (!applied) {
            // outside the table: clamp into the nearest cell and extrapolate
            const int it = std::clamp(bi, 0, nt - 2), ip = std::clamp(bj, 0, np - 2);
            double s, t;
            if (invert_bilinear(p, at(it, ip), at(it + 1, ip), at(it, ip + 1),
                                at(it + 1, ip + 1), s, t)) {
                s = std::clamp(s, 0.0, 1.0);
                t = std::clamp(t, 0.0, 1.0);
                const Eigen::Vector2d truth = (1 - s) * (1 - t) * truth_at(it, ip) +
                                              s * (1 - t) * truth_at(it + 1, ip) +
                                              (1 - s) * t * truth_at(it, ip + 1) +
                                              s * t * truth_at(it + 1, ip + 1);
                AngleConversion conv = angles_from_cosines(truth(0), truth(1), VirtualKind::Ura);
                target.lut_corrected = true;
                target.theta_corrected_deg = conv.direction.theta_deg;
                target.phi_corrected_deg = conv.direction.phi_deg;
                out.warnings.push_back("estimate outside the look-up table; nearest-edge extrapolation");
            } else {
                target.lut_corrected = false;
                out.warnings.push_back("look-up correction failed; estimate left uncorrected");
            }
        }
    }
    return out;
}

void LookUpTable::save(const std::string& path) const {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write look-up table: " + path);
    out.precision(17);
    out << "# lattice " << theta_lo << " " << phi_lo << " " << step << " " << n_theta << " "
        << n_phi << "\n";
    out << "mu_true,nu_true,mu_est,nu_est\n";
    for (std::size_t i = 0; i < mu_true.size(); ++i)
        out << mu_true[i] << "," << nu_true[i] << "," << mu_est[i] << "," << nu_est[i] << "\n";
}

LookUpTable LookUpTable::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open look-up table: " + path);
    LookUpTable lut;
    std::string line;
    std::getline(in, line);
    {
        std::istringstream hdr(line);
        std::string hash, key;
        hdr >> hash >> key >> lut.theta_lo >> lut.phi_lo >> lut.step >> lut.n_theta >> lut.n_phi;
        if (hash != "#" || key != "lattice")
            throw std::runtime_error("missing lattice header in " + path);
    }
    std::getline(in, line);  // column header
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::replace(line.begin(), line.end(), ',', ' ');
        std::istringstream row(line);
        double a, b, c, d;
        if (!(row >> a >> b >> c >> d)) throw std::runtime_error("malformed row in " + path);
        lut.mu_true.push_back(a);
        lut.nu_true.push_back(b);
        lut.mu_est.push_back(c);
        lut.nu_est.push_back(d);
    }
    if (lut.mu_true.size() !=
        static_cast<std::size_t>(lut.n_theta) * static_cast<std::size_t>(lut.n_phi))
        throw std::runtime_error("look-up table size does not match its header");
    return lut;
}

std::vector<int> assign_to_truth(const DoaEstimate& est, const std::vector<Direction>& truth) {
    const int k = static_cast<int>(truth.size());
    if (static_cast<int>(est.targets.size()) != k)
        throw std::invalid_argument("estimate/truth cardinality mismatch");
    std::vector<int> idx(static_cast<std::size_t>(k));
    std::iota(idx.begin(), idx.end(), 0);
    auto cost = [&](const std::vector<int>& perm) {
        double c = 0.0;
        for (int t = 0; t < k; ++t) {
            const auto& e = est.targets[static_cast<std::size_t>(perm[static_cast<std::size_t>(t)])];
            const double dt = e.theta_deg - truth[static_cast<std::size_t>(t)].theta_deg;
            double dp = e.phi_deg - truth[static_cast<std::size_t>(t)].phi_deg;
            if (dp > 180.0) dp -= 360.0;
            if (dp < -180.0) dp += 360.0;
            c += dt * dt + dp * dp;
        }
        return c;
    };
    if (k <= 3) {
        std::vector<int> best = idx;
        double best_cost = cost(idx);
        std::vector<int> perm = idx;
        while (std::next_permutation(perm.begin(), perm.end())) {
            const double c = cost(perm);
            if (c < best_cost) {
                best_cost = c;
                best = perm;
            }
        }
        return best;
    }
    // greedy fallback for larger scenes
    std::vector<int> res(static_cast<std::size_t>(k), -1);
    std::vector<char> used(static_cast<std::size_t>(k), 0);
    for (int t = 0; t < k; ++t) {
        double best = 1e300;
        int bi = -1;
        for (int e = 0; e < k; ++e) {
            if (used[static_cast<std::size_t>(e)]) continue;
            const auto& te = est.targets[static_cast<std::size_t>(e)];
            const double dt = te.theta_deg - truth[static_cast<std::size_t>(t)].theta_deg;
            double dp = te.phi_deg - truth[static_cast<std::size_t>(t)].phi_deg;
            if (dp > 180.0) dp -= 360.0;
            if (dp < -180.0) dp += 360.0;
            const double c = dt * dt + dp * dp;
            if (c < best) {
                best = c;
                bi = e;
            }
        }
        res[static_cast<std::size_t>(t)] = bi;
        used[static_cast<std::size_t>(bi)] = 1;
    }
    return res;
}

RmseResult rmse(const std::vector<DoaEstimate>& trials, const std::vector<Direction>& truth,
                bool use_corrected) {
    if (trials.empty()) throw std::invalid_argument("no trials");
    const int k = static_cast<int>(truth.size());
    double acc_th = 0.0, acc_ph = 0.0;
    for (const auto& trial : trials) {
        const std::vector<int> perm = assign_to_truth(trial, truth);
        double th = 0.0, ph = 0.0;
        for (int t = 0; t < k; ++t) {
            const auto& e = trial.targets[static_cast<std::size_t>(perm[static_cast<std::size_t>(t)])];
            const double est_th =
                use_corrected && e.lut_corrected ? e.theta_corrected_deg : e.theta_deg;
            const double est_ph = use_corrected && e.lut_corrected ? e.phi_corrected_deg : e.phi_deg;
            const double dt = est_th - truth[static_cast<std::size_t>(t)].theta_deg;
            double dp = est_ph - truth[static_cast<std::size_t>(t)].phi_deg;
            if (dp > 180.0) dp -= 360.0;
            if (dp < -180.0) dp += 360.0;
            th += dt * dt;
            ph += dp * dp;
        }
        acc_th += th / k;
        acc_ph += ph / k;
    }
    RmseResult r;
    r.theta_deg = std::sqrt(acc_th / static_cast<double>(trials.size()));
    r.phi_deg = std::sqrt(acc_ph / static_cast<double>(trials.size()));
    return r;
}

ResolutionResult resolution_probability(const std::vector<DoaEstimate>& trials,
                                        const std::vector<Direction>& truth) {
    if (truth.size() != 2) throw std::invalid_argument("resolution metric needs exactly 2 targets");
    if (trials.empty()) throw std::invalid_argument("no trials");
    const double half_th = std::abs(truth[0].theta_deg - truth[1].theta_deg) / 2.0;
    const double half_ph = std::abs(truth[0].phi_deg - truth[1].phi_deg) / 2.0;
    int ok_th = 0, ok_ph = 0;
    for (const auto& trial : trials) {
        const std::vector<int> perm = assign_to_truth(trial, truth);
        bool th = true, ph = true;
        for (int t = 0; t < 2; ++t) {
            const auto& e = trial.targets[static_cast<std::size_t>(perm[static_cast<std::size_t>(t)])];
            if (!(std::abs(e.theta_deg - truth[static_cast<std::size_t>(t)].theta_deg) < half_th))
                th = false;
            double dp = e.phi_deg - truth[static_cast<std::size_t>(t)].phi_deg;
            if (dp > 180.0) dp -= 360.0;
            if (dp < -180.0) dp += 360.0;
            if (!(std::abs(dp) < half_ph)) ph = false;
        }
        ok_th += th ? 1 : 0;
        ok_ph += ph ? 1 : 0;
    }
    ResolutionResult r;
    r.p_theta = static_cast<double>(ok_th) / static_cast<double>(trials.size());
    r.p_phi = static_cast<double>(ok_ph) / static_cast<double>(trials.size());
    return r;
}

}  // namespace tbdoa
