#include "tbdoa/estimators.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace tbdoa {

std::string to_string(Estimator e) {
    switch (e) {
        case Estimator::MatrixEsprit: return "matrix_esprit";
        case Estimator::HosvdEsprit: return "hosvd_esprit";
        case Estimator::Tev: return "tev";
        case Estimator::SpectralMusic: return "music";
    }
    return "?";
}

Estimator estimator_from_string(const std::string& s) {
    if (s == "matrix_esprit") return Estimator::MatrixEsprit;
    if (s == "hosvd_esprit") return Estimator::HosvdEsprit;
    if (s == "tev") return Estimator::Tev;
    if (s == "music") return Estimator::SpectralMusic;
    throw std::invalid_argument("unknown estimator: " + s);
}

Eigen::MatrixXcd pinv(const Eigen::MatrixXcd& m) {
    Eigen::JacobiSVD<Eigen::MatrixXcd> svd(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const auto& sv = svd.singularValues();
    Eigen::VectorXd inv = sv;
    const double cut = sv.size() ? 1e-12 * sv(0) : 0.0;
    for (Eigen::Index i = 0; i < sv.size(); ++i) inv(i) = sv(i) > cut ? 1.0 / sv(i) : 0.0;
    return svd.matrixV() * inv.asDiagonal() * svd.matrixU().adjoint();
}

SignalSubspace matrix_subspace(const SnapshotSet& snap, int k) {
    if (k < 1) throw std::invalid_argument("target count must be >= 1");
    const Eigen::MatrixXcd& y = snap.matrix_form;
    if (k > std::min(y.rows(), y.cols()))
        throw std::invalid_argument("target count exceeds the snapshot rank bound");
    Eigen::JacobiSVD<Eigen::MatrixXcd> svd(y, Eigen::ComputeThinU);
    if (svd.singularValues()(k - 1) <= 1e-14 * svd.singularValues()(0))
        throw std::runtime_error("target count exceeds the numerical rank of the data");
    SignalSubspace s;
    s.matrix_basis = svd.matrixU().leftCols(k);
    s.k = k;
    return s;
}

SignalSubspace tensor_subspace(const SnapshotSet& snap, int k) {
    SignalSubspace s;
    s.tensor_basis = truncated_signal_subspace(snap.tensor_form, k);
    const int last = s.tensor_basis.order() - 1;
    s.matrix_basis = unfold(s.tensor_basis, last).transpose();
    s.k = k;
    return s;
}

std::vector<int> pair_eigensystems(const Eigen::MatrixXcd& t_theta,
                                   const Eigen::MatrixXcd& t_phi) {
    if (t_theta.rows() != t_phi.rows() || t_theta.cols() != t_phi.cols())
        throw std::invalid_argument("eigenvector sets must have identical shapes");
    const int k = static_cast<int>(t_theta.cols());
    Eigen::MatrixXd coh(k, k);
    for (int i = 0; i < k; ++i)
        for (int j = 0; j < k; ++j)
            coh(i, j) = std::abs(t_theta.col(i).normalized().dot(t_phi.col(j).normalized()));
    std::vector<int> perm(static_cast<std::size_t>(k), -1);
    std::vector<char> row_used(static_cast<std::size_t>(k), 0), col_used(static_cast<std::size_t>(k), 0);
    for (int step = 0; step < k; ++step) {
        int bi = -1, bj = -1;
        double best = -1.0;
        for (int i = 0; i < k; ++i) {
            if (row_used[static_cast<std::size_t>(i)]) continue;
            for (int j = 0; j < k; ++j) {
                if (col_used[static_cast<std::size_t>(j)]) continue;
                if (coh(i, j) > best) {  // strict: ties resolve to lowest (i, j)
                    best = coh(i, j);
                    bi = i;
                    bj = j;
                }
            }
        }
        perm[static_cast<std::size_t>(bi)] = bj;
        row_used[static_cast<std::size_t>(bi)] = 1;
        col_used[static_cast<std::size_t>(bj)] = 1;
    }
    return perm;
}

namespace {

struct EigenSystem {
    Eigen::VectorXcd values;
    Eigen::MatrixXcd right;  // columns q_k
    Eigen::MatrixXcd left;   // rows p_k^T with p_k^T q_j = delta_ij
};

EigenSystem shift_eigensystem(const Eigen::MatrixXcd& u, const Eigen::MatrixXd& omega1,
                              const Eigen::MatrixXd& omega2) {
    Eigen::MatrixXcd psi = pinv(omega1 * u) * (omega2 * u);
    Eigen::ComplexEigenSolver<Eigen::MatrixXcd> ces(psi);
    if (ces.info() != Eigen::Success) throw std::runtime_error("shift eigensolve failed");
    EigenSystem sys;
    sys.values = ces.eigenvalues();
    sys.right = ces.eigenvectors();
    sys.left = sys.right.inverse();
    return sys;
}

double cosine_from_lambda(const cd& lambda, double spacing) {
    return -std::arg(lambda) / (2.0 * kPi * spacing);
}

void fill_angles(TargetEstimate& t, VirtualKind kind) {
    AngleConversion conv = angles_from_cosines(t.mu, t.nu, kind);
    t.theta_deg = conv.direction.theta_deg;
    t.phi_deg = conv.direction.phi_deg;
    t.clipped = conv.clipped;
    t.degenerate = conv.degenerate;
}

void warn_if_degenerate(const Eigen::VectorXcd& values, DoaEstimate& est, const char* which) {
    for (Eigen::Index i = 0; i < values.size(); ++i)
        for (Eigen::Index j = i + 1; j < values.size(); ++j)
            if (std::abs(values(i) - values(j)) < 1e-8) {
                std::ostringstream w;
                w << which << " shift eigenvalues nearly degenerate; pairing may be ambiguous";
                est.warnings.push_back(w.str());
                return;
            }
}

DoaEstimate esprit_from_subspace(const Eigen::MatrixXcd& u, const VirtualStructure& vs, int n_rx,
                                 int k, Estimator tag) {
    auto [o11, o21] = omega_selectors(vs, n_rx, 0);
    auto [o12, o22] = omega_selectors(vs, n_rx, 1);
    EigenSystem se = shift_eigensystem(u, o11, o21);
    EigenSystem sa = shift_eigensystem(u, o12, o22);

    DoaEstimate est;
    est.estimator = tag;
    warn_if_degenerate(se.values, est, "elevation");
    warn_if_degenerate(sa.values, est, "azimuth");

    std::vector<int> perm = pair_eigensystems(se.right, sa.right);
    est.targets.resize(static_cast<std::size_t>(k));
    for (int i = 0; i < k; ++i) {
        TargetEstimate& t = est.targets[static_cast<std::size_t>(i)];
        t.lambda_theta = se.values(i);
        t.lambda_phi = sa.values(perm[static_cast<std::size_t>(i)]);
        t.mu = cosine_from_lambda(t.lambda_theta, vs.spacing);
        t.nu = cosine_from_lambda(t.lambda_phi, vs.spacing);
        fill_angles(t, vs.kind);
    }
    return est;
}

}  // namespace

DoaEstimate matrix_esprit(const SnapshotSet& snap, const VirtualStructure& vs, int k) {
    vs.validate();
    const int n_rx = static_cast<int>(snap.matrix_form.rows()) / vs.virtual_count();
    SignalSubspace s = matrix_subspace(snap, k);
    return esprit_from_subspace(s.matrix_basis, vs, n_rx, k, Estimator::MatrixEsprit);
}

DoaEstimate hosvd_esprit(const SnapshotSet& snap, const VirtualStructure& vs, int k) {
    vs.validate();
    const int n_rx = static_cast<int>(snap.matrix_form.rows()) / vs.virtual_count();
    SignalSubspace s = tensor_subspace(snap, k);
    return esprit_from_subspace(s.matrix_basis, vs, n_rx, k, Estimator::HosvdEsprit);
}

namespace {

// Scalar LS shift solve over one axis of the (near) rank-1 vector q.
cd scalar_shift(const Eigen::VectorXcd& q) {
    const Eigen::Index m = q.size();
    const Eigen::VectorXcd head = q.head(m - 1), tail = q.tail(m - 1);
    const cd denom = head.squaredNorm();
    if (std::abs(denom) == 0.0) throw std::runtime_error("zero-norm axis eigenvector");
    return head.dot(tail) / denom;  // (J1 q)^H (J2 q) / ||J1 q||^2
}

}  // namespace

DoaEstimate tev(const SnapshotSet& snap, const VirtualStructure& vs, int k) {
    vs.validate();
    const int n_rx = static_cast<int>(snap.matrix_form.rows()) / vs.virtual_count();
    SignalSubspace s = tensor_subspace(snap, k);
    DoaEstimate est;
    est.estimator = Estimator::Tev;
    est.targets.resize(static_cast<std::size_t>(k));
    const int last = s.tensor_basis.order() - 1;

    // Rotate the target mode onto the shift-operator eigenvectors so each
    // slice spans a single source (U t_k is proportional to that source's
    // steering column in the noiseless case); this is what makes the
    // per-slice estimates auto-paired. The better-separated axis is used.
    Eigen::MatrixXcd rot = Eigen::MatrixXcd::Identity(k, k);
    if (k > 1) {
        auto [o11, o21] = omega_selectors(vs, n_rx, 0);
        auto [o12, o22] = omega_selectors(vs, n_rx, 1);
        EigenSystem se = shift_eigensystem(s.matrix_basis, o11, o21);
        EigenSystem sa = shift_eigensystem(s.matrix_basis, o12, o22);
        auto min_sep = [](const Eigen::VectorXcd& v) {
            double m = 1e300;
            for (Eigen::Index i = 0; i < v.size(); ++i)
                for (Eigen::Index j = i + 1; j < v.size(); ++j)
                    m = std::min(m, std::abs(v(i) - v(j)));
            return m;
        };
        rot = min_sep(se.values) >= min_sep(sa.values) ? se.right : sa.right;
    }
    ComplexTensor rotated = mode_product(s.tensor_basis, rot.transpose(), last);

    for (int i = 0; i < k; ++i) {
        ComplexTensor slice = subtensor(rotated, last, i);
        TargetEstimate& t = est.targets[static_cast<std::size_t>(i)];
        if (vs.kind == VirtualKind::LShaped) {
            Eigen::JacobiSVD<Eigen::MatrixXcd> svd(unfold(slice, 0), Eigen::ComputeThinU);
            Eigen::VectorXcd q = svd.matrixU().col(0);
            const auto i1 = vs.axis_indices(0), i2 = vs.axis_indices(1);
            Eigen::VectorXcd q1(static_cast<Eigen::Index>(i1.size()));
            Eigen::VectorXcd q2(static_cast<Eigen::Index>(i2.size()));
            for (std::size_t r = 0; r < i1.size(); ++r) q1(static_cast<Eigen::Index>(r)) = q(i1[r]);
            for (std::size_t r = 0; r < i2.size(); ++r) q2(static_cast<Eigen::Index>(r)) = q(i2[r]);
            t.lambda_theta = scalar_shift(q1);
            t.lambda_phi = scalar_shift(q2);
        } else {
            Eigen::JacobiSVD<Eigen::MatrixXcd> svd1(unfold(slice, 0), Eigen::ComputeThinU);
            Eigen::JacobiSVD<Eigen::MatrixXcd> svd2(unfold(slice, 1), Eigen::ComputeThinU);
            t.lambda_theta = scalar_shift(svd1.matrixU().col(0));
            t.lambda_phi = scalar_shift(svd2.matrixU().col(0));
        }
        t.mu = cosine_from_lambda(t.lambda_theta, vs.spacing);
        t.nu = cosine_from_lambda(t.lambda_phi, vs.spacing);
        fill_angles(t, vs.kind);
    }
    return est;
}

MusicGrid make_music_grid(const InterpolationDesign& design, const ArrayGeometry& rx,
                          double step_deg) {
    if (!(step_deg > 0.0)) throw std::invalid_argument("grid step must be positive");
    MusicGrid g;
    g.step = step_deg;
    g.theta_lo = design.grid.theta_lo;
    g.phi_lo = design.grid.phi_lo;
    g.n_theta = static_cast<int>(std::floor((design.grid.theta_hi - design.grid.theta_lo) /
                                            step_deg + 1e-9)) + 1;
    g.n_phi = static_cast<int>(std::floor((design.grid.phi_hi - design.grid.phi_lo) /
                                          step_deg + 1e-9)) + 1;
    g.directions.reserve(static_cast<std::size_t>(g.n_theta) * static_cast<std::size_t>(g.n_phi));
    for (int it = 0; it < g.n_theta; ++it)
        for (int ip = 0; ip < g.n_phi; ++ip)
            g.directions.push_back({g.theta_lo + it * step_deg, g.phi_lo + ip * step_deg});
    g.steering = steering_matrix_f(design, rx, g.directions);
    g.steering_sq = g.steering.colwise().squaredNorm();
    return g;
}

DoaEstimate spectral_music_2d(const SnapshotSet& snap, const MusicGrid& grid, int k) {
    if (k >= snap.matrix_form.rows())
        throw std::invalid_argument("target count must be below the model dimension");
    SignalSubspace s = matrix_subspace(snap, k);

    // noise-subspace power through the signal projector complement
    Eigen::MatrixXcd proj = s.matrix_basis.adjoint() * grid.steering;  // K x G
    Eigen::VectorXd null_power =
        (grid.steering_sq - proj.colwise().squaredNorm().transpose()).cwiseMax(1e-300);

    const int nt = grid.n_theta, np = grid.n_phi;
    auto idx = [np](int it, int ip) { return it * np + ip; };
    Eigen::VectorXd spectrum_db = -10.0 * null_power.array().log10();

    DoaEstimate est;
    est.estimator = Estimator::SpectralMusic;

    // local maxima with non-maximum suppression of 1 degree per axis
    const int nms = std::max(1, static_cast<int>(std::lround(1.0 / grid.step)));
    std::vector<std::pair<double, int>> peaks;
    for (int it = 0; it < nt; ++it)
        for (int ip = 0; ip < np; ++ip) {
            const double v = spectrum_db(idx(it, ip));
            bool is_max = true;
            for (int dt = -nms; dt <= nms && is_max; ++dt)
                for (int dp = -nms; dp <= nms && is_max; ++dp) {
                    if (dt == 0 && dp == 0) continue;
                    const int jt = it + dt, jp = ip + dp;
                    if (jt < 0 || jt >= nt || jp < 0 || jp >= np) continue;
                    if (spectrum_db(idx(jt, jp)) > v) is_max = false;
                }
            if (is_max) peaks.emplace_back(v, idx(it, ip));
        }
    std::sort(peaks.begin(), peaks.end(), [](const auto& a, const auto& b) {
        return a.first > b.first || (a.first == b.first && a.second < b.second);
    });

    if (static_cast<int>(peaks.size()) < k) {
        est.warnings.push_back("resolution failure: fewer separable spectral peaks than targets");
        // fall back to the largest remaining grid values so K entries exist
        std::vector<std::pair<double, int>> all(static_cast<std::size_t>(spectrum_db.size()));
        for (int i = 0; i < spectrum_db.size(); ++i) all[static_cast<std::size_t>(i)] = {spectrum_db(i), i};
        std::sort(all.begin(), all.end(), [](const auto& a, const auto& b) {
            return a.first > b.first || (a.first == b.first && a.second < b.second);
        });
        for (const auto& cand : all) {
            if (static_cast<int>(peaks.size()) >= k) break;
            bool dup = false;
            for (const auto& p : peaks) dup = dup || p.second == cand.second;
            if (!dup) peaks.push_back(cand);
        }
    }

    est.targets.resize(static_cast<std::size_t>(k));
    for (int i = 0; i < k; ++i) {
        const int cell = peaks[static_cast<std::size_t>(i)].second;
        const int it = cell / np, ip = cell % np;
        // parabolic refinement along each axis on the dB spectrum
        auto refine = [&](int c0, int cm, int cp, int pos, int n) {
            if (pos <= 0 || pos >= n - 1) return 0.0;
            const double ym = spectrum_db(cm), y0 = spectrum_db(c0), yp = spectrum_db(cp);
            const double denom = ym - 2.0 * y0 + yp;
            if (denom >= -1e-12) return 0.0;
            double off = 0.5 * (ym - yp) / denom;
            return std::clamp(off, -0.5, 0.5);
        };
        const double dt = refine(idx(it, ip), idx(it - 1, ip), idx(it + 1, ip), it, nt);
        const double dp = refine(idx(it, ip), idx(it, ip - 1), idx(it, ip + 1), ip, np);
        TargetEstimate& t = est.targets[static_cast<std::size_t>(i)];
        t.theta_deg = grid.theta_lo + (it + dt) * grid.step;
        t.phi_deg = grid.phi_lo + (ip + dp) * grid.step;
        // direction cosines for completeness (URA convention)
        const double st = std::sin(deg2rad(t.theta_deg));
        t.mu = st * std::cos(deg2rad(t.phi_deg));
        t.nu = st * std::sin(deg2rad(t.phi_deg));
    }
    return est;
}

}  // namespace tbdoa
