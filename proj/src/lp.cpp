#include "tbdoa/lp.hpp"

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <vector>

namespace tbdoa {

std::string to_string(NormKind n) {
    switch (n) {
        case NormKind::L1: return "l1";
        case NormKind::LInf: return "linf";
        case NormKind::L2: return "l2";
    }
    return "?";
}

NormKind norm_kind_from_string(const std::string& s) {
    if (s == "l1") return NormKind::L1;
    if (s == "linf") return NormKind::LInf;
    if (s == "l2") return NormKind::L2;
    throw std::invalid_argument("unknown norm kind: " + s);
}

double point_norm(const Eigen::MatrixXcd& e, const Eigen::VectorXcd& a,
                  const Eigen::VectorXcd& target, NormKind norm) {
    Eigen::VectorXcd z = e.adjoint() * a - target;
    switch (norm) {
        case NormKind::L1: return z.cwiseAbs().sum();
        case NormKind::LInf: return z.cwiseAbs().maxCoeff();
        case NormKind::L2: return z.norm();
    }
    return 0.0;
}

namespace {

struct Point {
    const Eigen::MatrixXcd* a = nullptr;       // side steering matrix
    const Eigen::MatrixXcd* target = nullptr;  // side target matrix
    int col = 0;
    bool objective = false;   // epigraph-coupled
    bool l1 = false;          // carries aux moduli and a group row
    double rhs_bound = 0.0;   // norm level folded into the row rhs
    int soff = -1;            // aux offset (l1 only)
    int l1pos = -1;           // index among l1 points (l1 only)
};

// Interior-point solve of the working-set LP. Variables are the realified E
// (per virtual column: M reals then M imaginaries), the epigraph t, and one
// aux modulus per (l1 point, virtual column).
class IpmSolver {
public:
    // exact_facets drops the 1/cos(pi/(2F)) surrogate inflation so the facet
    // norm under-estimates the modulus; used by the infeasibility phase.
    IpmSolver(const MinimaxProblem& prob, std::vector<Point> points, bool exact_facets = false)
        : prob_(prob), points_(std::move(points)) {
        m_ = static_cast<int>(prob.a_obj.rows());
        mt_ = static_cast<int>(prob.target_obj.rows());
        const int facets = prob.facets_per_halfplane;
        f2_ = 2 * facets;
        cos_f_ = exact_facets ? 1.0 : std::cos(kPi_ / (2.0 * facets));
        // facet directions alpha_f = pi f / F, f = 0 .. 2F-1
        cs_.resize(static_cast<std::size_t>(f2_));
        sn_.resize(static_cast<std::size_t>(f2_));
        for (int f = 0; f < f2_; ++f) {
            const double a = kPi_ * f / facets;
            cs_[static_cast<std::size_t>(f)] = std::cos(a);
            sn_[static_cast<std::size_t>(f)] = std::sin(a);
        }
        np_ = static_cast<int>(points_.size());
        ne_ = 2 * m_ * mt_;
        nd_ = ne_ + 1;
        n_l1_ = 0;
        for (auto& p : points_) {
            if (p.l1) {
                p.l1pos = n_l1_;
                p.soff = n_l1_ * mt_;
                ++n_l1_;
            }
        }
        ns_ = n_l1_ * mt_;
        build_static();
    }

    // Returns true when converged; status() distinguishes the strict optimum
    // from a near-optimal accept (primal feasibility at full precision, dual
    // residual at a relaxed 1e-6).
    bool solve(int max_iter, double tol);
    const std::string& status() const { return status_; }

    // Farkas-style certificate from the exit duals: y >= 0 with G^T y ~ 0 and
    // h^T y < 0 proves the working set has no feasible point.
    bool infeasibility_certificate() const {
        const double ynorm = y_a_.abs().sum() + y_b_.abs().sum() + y_c_.abs().sum() + y_d_;
        if (!(ynorm > 0.0) || !std::isfinite(ynorm)) return false;
        Eigen::VectorXd ge;
        double gt = 0.0;
        Eigen::VectorXd gs;
        gt_product(y_a_, y_b_, y_c_, y_d_, ge, gt, gs);
        const double ray_dual =
            std::max({ge.lpNorm<Eigen::Infinity>(), std::abs(gt),
                      ns_ ? gs.lpNorm<Eigen::Infinity>() : 0.0}) /
            ynorm;
        const double hy = ((h_a_ * y_a_).sum() + (n_l1_ ? (h_b_ * y_b_).sum() : 0.0)) / ynorm;
        if (std::getenv("TBDOA_LP_DEBUG"))
            std::fprintf(stderr, "farkas: ray_dual %.3e  hy %.3e\n", ray_dual, hy);
        return ray_dual <= 1e-6 && hy < -1e-10;
    }

    Eigen::MatrixXcd e_matrix() const {
        Eigen::MatrixXcd e(m_, mt_);
        for (int c = 0; c < mt_; ++c)
            for (int i = 0; i < m_; ++i)
                e(i, c) = {xe_(c * 2 * m_ + i), xe_(c * 2 * m_ + m_ + i)};
        return e;
    }
    double objective() const { return xt_; }
    int iterations() const { return iters_; }
    double primal_infeasibility() const { return primal_inf_; }

private:
    static constexpr double kPi_ = 3.141592653589793238462643383279502884;

    void build_static();
    void row_values(Eigen::ArrayXd& va, Eigen::ArrayXd& vb, Eigen::ArrayXd& vc, double& vd) const;
    // accumulate G^T w into (ge, gt, gs) given per-row weights
    void gt_product(const Eigen::ArrayXd& wa, const Eigen::ArrayXd& wb, const Eigen::ArrayXd& wc,
                    double wd, Eigen::VectorXd& ge, double& gt, Eigen::VectorXd& gs) const;

    const MinimaxProblem& prob_;
    std::vector<Point> points_;
    int m_ = 0, mt_ = 0, f2_ = 0, np_ = 0, ne_ = 0, nd_ = 0, ns_ = 0, n_l1_ = 0;
    double cos_f_ = 1.0;
    std::vector<double> cs_, sn_;

    Eigen::MatrixXd up_;      // 2M x 2P, (u_p, v_p) column pairs
    Eigen::ArrayXd h_a_;      // facet rhs, (p, mt, f) with f fastest
    Eigen::ArrayXd h_b_;      // group rhs per l1 point
    std::vector<int> l1_points_;  // indices into points_

    // iterates
    Eigen::VectorXd xe_, xs_;
    double xt_ = 1.0;
    Eigen::ArrayXd s_a_, y_a_, s_b_, y_b_, s_c_, y_c_;
    double s_d_ = 1.0, y_d_ = 1.0;
    int iters_ = 0;
    double primal_inf_ = 0.0;
    std::string status_ = "not converged";
};

void IpmSolver::build_static() {
    up_.resize(2 * m_, 2 * np_);
    h_a_.resize(static_cast<Eigen::Index>(np_) * mt_ * f2_);
    h_b_.resize(n_l1_);
    l1_points_.clear();
    for (int p = 0; p < np_; ++p) {
        const Point& pt = points_[static_cast<std::size_t>(p)];
        const Eigen::VectorXcd a = pt.a->col(pt.col);
        up_.col(2 * p).head(m_) = a.real();
        up_.col(2 * p).tail(m_) = a.imag();
        up_.col(2 * p + 1).head(m_) = -a.imag();
        up_.col(2 * p + 1).tail(m_) = a.real();
        for (int c = 0; c < mt_; ++c) {
            const std::complex<double> tau = (*pt.target)(c, pt.col);
            for (int f = 0; f < f2_; ++f) {
                double rhs = cs_[static_cast<std::size_t>(f)] * tau.real() -
                             sn_[static_cast<std::size_t>(f)] * tau.imag();
                if (!pt.l1) rhs += cos_f_ * pt.rhs_bound;
                h_a_((static_cast<Eigen::Index>(p) * mt_ + c) * f2_ + f) = rhs;
            }
        }
        if (pt.l1) {
            l1_points_.push_back(p);
            h_b_(pt.l1pos) = pt.rhs_bound;
        }
    }
}

void IpmSolver::row_values(Eigen::ArrayXd& va, Eigen::ArrayXd& vb, Eigen::ArrayXd& vc,
                           double& vd) const {
    // ru/rv per (point, column): inner products of u_p, v_p with each E column
    Eigen::Map<const Eigen::MatrixXd> xe_mat(xe_.data(), 2 * m_, mt_);
    Eigen::MatrixXd utx = up_.transpose() * xe_mat;  // 2P x Mt

    va.resize(h_a_.size());
    for (int p = 0; p < np_; ++p) {
        const Point& pt = points_[static_cast<std::size_t>(p)];
        const double t_coef = (pt.objective && !pt.l1) ? cos_f_ * xt_ : 0.0;
        for (int c = 0; c < mt_; ++c) {
            const double ru = utx(2 * p, c), rv = utx(2 * p + 1, c);
            const double aux = pt.l1 ? cos_f_ * xs_(pt.soff + c) : 0.0;
            const Eigen::Index base = (static_cast<Eigen::Index>(p) * mt_ + c) * f2_;
            for (int f = 0; f < f2_; ++f)
                va(base + f) = cs_[static_cast<std::size_t>(f)] * ru +
                               sn_[static_cast<std::size_t>(f)] * rv - t_coef - aux;
        }
    }
    vb.resize(n_l1_);
    vc.resize(ns_);
    for (int li = 0; li < n_l1_; ++li) {
        const Point& pt = points_[static_cast<std::size_t>(l1_points_[static_cast<std::size_t>(li)])];
        double sum = 0.0;
        for (int c = 0; c < mt_; ++c) sum += xs_(pt.soff + c);
        vb(li) = sum - (pt.objective ? xt_ : 0.0);
        for (int c = 0; c < mt_; ++c) vc(pt.soff + c) = -xs_(pt.soff + c);
    }
    vd = -xt_;
}

void IpmSolver::gt_product(const Eigen::ArrayXd& wa, const Eigen::ArrayXd& wb,
                           const Eigen::ArrayXd& wc, double wd, Eigen::VectorXd& ge, double& gt,
                           Eigen::VectorXd& gs) const {
    // facet rows: per (p, c) fold the facet weights into a (cos, sin) pair
    Eigen::MatrixXd kap(2 * np_, mt_);
    gt = -wd;
    gs.setZero(ns_);
    for (int p = 0; p < np_; ++p) {
        const Point& pt = points_[static_cast<std::size_t>(p)];
        for (int c = 0; c < mt_; ++c) {
            const Eigen::Index base = (static_cast<Eigen::Index>(p) * mt_ + c) * f2_;
            double kc = 0.0, ks = 0.0, tot = 0.0;
            for (int f = 0; f < f2_; ++f) {
                const double w = wa(base + f);
                kc += w * cs_[static_cast<std::size_t>(f)];
                ks += w * sn_[static_cast<std::size_t>(f)];
                tot += w;
            }
            kap(2 * p, c) = kc;
            kap(2 * p + 1, c) = ks;
            if (pt.objective && !pt.l1) gt -= cos_f_ * tot;
            if (pt.l1) gs(pt.soff + c) -= cos_f_ * tot;
        }
    }
    Eigen::MatrixXd ge_mat = up_ * kap;  // 2M x Mt
    ge = Eigen::Map<Eigen::VectorXd>(ge_mat.data(), ne_);
    for (int li = 0; li < n_l1_; ++li) {
        const Point& pt = points_[static_cast<std::size_t>(l1_points_[static_cast<std::size_t>(li)])];
        for (int c = 0; c < mt_; ++c) gs(pt.soff + c) += wb(li) - wc(pt.soff + c);
        if (pt.objective) gt -= wb(li);
    }
}

bool IpmSolver::solve(int max_iter, double tol) {
    xe_ = Eigen::VectorXd::Zero(ne_);
    xs_ = Eigen::VectorXd::Constant(ns_, 1.0);
    xt_ = 1.0;

    Eigen::ArrayXd va, vb, vc;
    double vd = 0.0;
    row_values(va, vb, vc, vd);
    auto init_slack = [](const Eigen::ArrayXd& v, const Eigen::ArrayXd& h) {
        return (h - v).max(1.0);
    };
    s_a_ = init_slack(va, h_a_);
    y_a_ = Eigen::ArrayXd::Constant(va.size(), 1.0);
    s_b_ = init_slack(vb, h_b_);
    y_b_ = Eigen::ArrayXd::Constant(n_l1_, 1.0);
    s_c_ = init_slack(vc, Eigen::ArrayXd::Zero(ns_));
    y_c_ = Eigen::ArrayXd::Constant(ns_, 1.0);
    s_d_ = std::max(1.0, xt_);
    y_d_ = 1.0;

    const Eigen::Index n_rows = va.size() + n_l1_ + ns_ + 1;
    const double h_scale = 1.0 + std::max(h_a_.size() ? h_a_.abs().maxCoeff() : 0.0,
                                          n_l1_ ? h_b_.abs().maxCoeff() : 0.0);
    const int n2m = 2 * m_;

    Eigen::MatrixXd k(nd_, nd_);
    Eigen::MatrixXd y_fac(n2m, 2 * np_);
    Eigen::MatrixXd gcc(np_, mt_), gcs(np_, mt_), gss(np_, mt_), kc(np_, mt_), ks(np_, mt_),
        sig(np_, mt_);
    Eigen::MatrixXd wg;  // columns U_p * gamma_{p,c} for l1 points
    if (n_l1_ > 0) wg.resize(n2m, static_cast<Eigen::Index>(n_l1_) * mt_);

    Eigen::ArrayXd da, db, dc;
    double dd = 0.0;

    std::vector<Eigen::MatrixXd> minv(static_cast<std::size_t>(n_l1_));
    Eigen::LLT<Eigen::MatrixXd, Eigen::Lower> llt;

    // best-so-far iterate, restored if a late step degrades things
    double best_merit = std::numeric_limits<double>::infinity();
    Eigen::VectorXd best_xe = xe_, best_xs = xs_;
    double best_xt = xt_, best_pinf = 1e300, best_dinf = 1e300, best_mu = 1e300;

    for (iters_ = 0; iters_ < max_iter; ++iters_) {
        row_values(va, vb, vc, vd);
        Eigen::ArrayXd rpa = va + s_a_ - h_a_;
        Eigen::ArrayXd rpb = vb + s_b_ - h_b_;
        Eigen::ArrayXd rpc = vc + s_c_;
        const double rpd = vd + s_d_;

        Eigen::VectorXd rde;
        double rdt = 0.0;
        Eigen::VectorXd rds;
        gt_product(y_a_, y_b_, y_c_, y_d_, rde, rdt, rds);
        rdt += 1.0;  // objective gradient on t

        const double mu =
            ((s_a_ * y_a_).sum() + (s_b_ * y_b_).sum() + (s_c_ * y_c_).sum() + s_d_ * y_d_) /
            static_cast<double>(n_rows);

        primal_inf_ = std::max({rpa.abs().maxCoeff(), n_l1_ ? rpb.abs().maxCoeff() : 0.0,
                                ns_ ? rpc.abs().maxCoeff() : 0.0, std::abs(rpd)});
        const double dual_inf =
            std::max({rde.lpNorm<Eigen::Infinity>(), std::abs(rdt),
                      ns_ ? rds.lpNorm<Eigen::Infinity>() : 0.0});
        if (std::getenv("TBDOA_LP_DEBUG"))
            std::fprintf(stderr, "ipm it %3d  mu %.3e  pinf %.3e  dinf %.3e  t %.6e\n", iters_,
                         mu, primal_inf_, dual_inf, xt_);

        const double merit = primal_inf_ / h_scale + dual_inf + mu / (1.0 + std::abs(xt_));
        if (merit < best_merit) {
            best_merit = merit;
            best_xe = xe_;
            best_xs = xs_;
            best_xt = xt_;
            best_pinf = primal_inf_;
            best_dinf = dual_inf;
            best_mu = mu;
        }
        if (primal_inf_ <= tol * h_scale && dual_inf <= tol &&
            mu <= tol * 0.1 * (1.0 + std::abs(xt_))) {
            status_ = "optimal";
            return true;
        }
        // complementarity exhausted; judge the best iterate instead of forcing
        // further steps through a blown-up barrier matrix
        if (mu < 1e-13 * (1.0 + std::abs(xt_)) && primal_inf_ <= tol * h_scale) break;

        // normal-matrix assembly with safeguarded barrier weights
        const auto clip = [](Eigen::ArrayXd w) {
            return w.min(1e14).max(1e-14);
        };
        da = clip(y_a_ / s_a_);
        db = n_l1_ ? clip(y_b_ / s_b_).eval() : Eigen::ArrayXd();
        dc = ns_ ? clip(y_c_ / s_c_).eval() : Eigen::ArrayXd();
        dd = std::clamp(y_d_ / s_d_, 1e-14, 1e14);

        for (int p = 0; p < np_; ++p)
            for (int c = 0; c < mt_; ++c) {
                const Eigen::Index base = (static_cast<Eigen::Index>(p) * mt_ + c) * f2_;
                double a00 = 0, a01 = 0, a11 = 0, b0 = 0, b1 = 0, s0 = 0;
                for (int f = 0; f < f2_; ++f) {
                    const double d = da(base + f);
                    const double cf = cs_[static_cast<std::size_t>(f)],
                                 sf = sn_[static_cast<std::size_t>(f)];
                    a00 += d * cf * cf;
                    a01 += d * cf * sf;
                    a11 += d * sf * sf;
                    b0 += d * cf;
                    b1 += d * sf;
                    s0 += d;
                }
                gcc(p, c) = a00;
                gcs(p, c) = a01;
                gss(p, c) = a11;
                kc(p, c) = b0;
                ks(p, c) = b1;
                sig(p, c) = s0;
            }

        k.setZero();
        double ktt = dd;
        Eigen::VectorXd ket = Eigen::VectorXd::Zero(ne_);

        // e-e diagonal blocks via 2x2 Cholesky factors of the facet Grams
        for (int c = 0; c < mt_; ++c) {
            for (int p = 0; p < np_; ++p) {
                double a00 = gcc(p, c), a01 = gcs(p, c), a11 = gss(p, c);
                // chol of [[a00, a01], [a01, a11]] with PSD safeguard
                const double l00 = std::sqrt(std::max(a00, 0.0));
                const double l10 = l00 > 0 ? a01 / l00 : 0.0;
                const double l11 = std::sqrt(std::max(a11 - l10 * l10, 0.0));
                y_fac.col(2 * p) = up_.col(2 * p) * l00 + up_.col(2 * p + 1) * l10;
                y_fac.col(2 * p + 1) = up_.col(2 * p + 1) * l11;
            }
            k.block(c * n2m, c * n2m, n2m, n2m)
                .selfadjointView<Eigen::Lower>()
                .rankUpdate(y_fac, 1.0);
        }

        // epigraph couplings from l-inf objective facet rows
        for (int p = 0; p < np_; ++p) {
            const Point& pt = points_[static_cast<std::size_t>(p)];
            if (!(pt.objective && !pt.l1)) continue;
            for (int c = 0; c < mt_; ++c) {
                ket.segment(c * n2m, n2m) -=
                    cos_f_ * (up_.col(2 * p) * kc(p, c) + up_.col(2 * p + 1) * ks(p, c));
                ktt += cos_f_ * cos_f_ * sig(p, c);
            }
        }

        // aux elimination: per-point 16x16 inverse, Schur onto (e, t)
        Eigen::VectorXd minv_rowsum;  // stacked per point
        if (n_l1_ > 0) {
            minv_rowsum.resize(static_cast<Eigen::Index>(n_l1_) * mt_);
            for (int li = 0; li < n_l1_; ++li) {
                const int p = l1_points_[static_cast<std::size_t>(li)];
                const Point& pt = points_[static_cast<std::size_t>(p)];
                Eigen::VectorXd dvec(mt_);
                for (int c = 0; c < mt_; ++c)
                    dvec(c) = cos_f_ * cos_f_ * sig(p, c) + dc(pt.soff + c);
                const double bg = db(li);
                Eigen::MatrixXd mss = dvec.asDiagonal();
                mss.array() += bg;
                Eigen::MatrixXd inv = mss.llt().solve(Eigen::MatrixXd::Identity(mt_, mt_));
                minv[static_cast<std::size_t>(li)] = inv;
                minv_rowsum.segment(static_cast<Eigen::Index>(li) * mt_, mt_) =
                    inv.rowwise().sum();
                for (int c = 0; c < mt_; ++c)
                    wg.col(static_cast<Eigen::Index>(li) * mt_ + c) =
                        up_.col(2 * p) * kc(p, c) + up_.col(2 * p + 1) * ks(p, c);
            }

            // e-e corrections; only the lower triangle is consumed by the LLT
            Eigen::MatrixXd w1(n2m, n_l1_), w2(n2m, n_l1_);
            for (int c1 = 0; c1 < mt_; ++c1) {
                for (int c2 = c1; c2 < mt_; ++c2) {
                    for (int li = 0; li < n_l1_; ++li) {
                        const double coef =
                            cos_f_ * cos_f_ * minv[static_cast<std::size_t>(li)](c2, c1);
                        w1.col(li) = wg.col(static_cast<Eigen::Index>(li) * mt_ + c2) * coef;
                        w2.col(li) = wg.col(static_cast<Eigen::Index>(li) * mt_ + c1);
                    }
                    if (c2 == c1) {
                        k.block(c1 * n2m, c1 * n2m, n2m, n2m)
                            .triangularView<Eigen::Lower>() -= w1 * w2.transpose();
                    } else {
                        k.block(c2 * n2m, c1 * n2m, n2m, n2m).noalias() -= w1 * w2.transpose();
                    }
                }
            }
            // e-t and t-t corrections (objective-side l1 groups couple to t)
            for (int li = 0; li < n_l1_; ++li) {
                const int p = l1_points_[static_cast<std::size_t>(li)];
                const Point& pt = points_[static_cast<std::size_t>(p)];
                if (!pt.objective) continue;
                const double bg = db(li);
                const auto rs = minv_rowsum.segment(static_cast<Eigen::Index>(li) * mt_, mt_);
                for (int c = 0; c < mt_; ++c)
                    ket.segment(c * n2m, n2m) -=
                        cos_f_ * bg * rs(c) * wg.col(static_cast<Eigen::Index>(li) * mt_ + c);
                ktt += bg - bg * bg * rs.sum();  // direct group term minus its Schur part
            }
        }

        k.block(ne_, 0, 1, ne_) = ket.transpose();
        k(ne_, ne_) = ktt;

        // regularize and factor; the static scale keeps the dual residual
        // from flooring when active-row weights blow up near convergence
        double reg = 1e-11;
        bool factored = false;
        for (int attempt = 0; attempt < 4; ++attempt) {
            Eigen::MatrixXd kr = k;
            kr.diagonal().array() += reg;
            llt.compute(kr);
            if (llt.info() == Eigen::Success) {
                factored = true;
                break;
            }
            reg *= 100.0;
        }
        if (!factored) break;  // settle for the best iterate

        auto reduce_and_solve = [&](const Eigen::VectorXd& rhs_e, double rhs_t,
                                    const Eigen::VectorXd& rhs_s, Eigen::VectorXd& dxe,
                                    double& dxt, Eigen::VectorXd& dxs) {
            Eigen::VectorXd r(nd_);
            r.head(ne_) = rhs_e;
            r(ne_) = rhs_t;
            if (n_l1_ > 0) {
                for (int li = 0; li < n_l1_; ++li) {
                    const int p = l1_points_[static_cast<std::size_t>(li)];
                    const Point& pt = points_[static_cast<std::size_t>(p)];
                    const Eigen::VectorXd mr =
                        minv[static_cast<std::size_t>(li)] *
                        rhs_s.segment(static_cast<Eigen::Index>(pt.l1pos) * mt_, mt_);
                    for (int c = 0; c < mt_; ++c)
                        r.segment(c * n2m, n2m) +=
                            cos_f_ * mr(c) * wg.col(static_cast<Eigen::Index>(li) * mt_ + c);
                    if (pt.objective) r(ne_) += db(li) * mr.sum();
                }
            }
            Eigen::VectorXd sol = llt.solve(r);
            dxe = sol.head(ne_);
            dxt = sol(ne_);
            dxs.setZero(ns_);
            if (n_l1_ > 0) {
                Eigen::Map<const Eigen::MatrixXd> dxe_mat(dxe.data(), n2m, mt_);
                for (int li = 0; li < n_l1_; ++li) {
                    const int p = l1_points_[static_cast<std::size_t>(li)];
                    const Point& pt = points_[static_cast<std::size_t>(p)];
                    Eigen::VectorXd ct(mt_);
                    for (int c = 0; c < mt_; ++c)
                        ct(c) = -cos_f_ *
                                    wg.col(static_cast<Eigen::Index>(li) * mt_ + c)
                                        .dot(dxe_mat.col(c)) -
                                (pt.objective ? db(li) * dxt : 0.0);
                    dxs.segment(static_cast<Eigen::Index>(pt.l1pos) * mt_, mt_) =
                        minv[static_cast<std::size_t>(li)] *
                        (rhs_s.segment(static_cast<Eigen::Index>(pt.l1pos) * mt_, mt_) - ct);
                }
            }
        };

        auto newton_step = [&](const Eigen::ArrayXd& rca, const Eigen::ArrayXd& rcb,
                               const Eigen::ArrayXd& rcc, double rcd, Eigen::VectorXd& dxe,
                               double& dxt, Eigen::VectorXd& dxs, Eigen::ArrayXd& dsa,
                               Eigen::ArrayXd& dsb, Eigen::ArrayXd& dsc, double& dsd,
                               Eigen::ArrayXd& dya, Eigen::ArrayXd& dyb, Eigen::ArrayXd& dyc,
                               double& dyd) {
            Eigen::ArrayXd ga = (y_a_ * rpa - rca) / s_a_;
            Eigen::ArrayXd gb = n_l1_ ? ((y_b_ * rpb - rcb) / s_b_).eval() : Eigen::ArrayXd();
            Eigen::ArrayXd gc = ns_ ? ((y_c_ * rpc - rcc) / s_c_).eval() : Eigen::ArrayXd();
            const double gd = (y_d_ * rpd - rcd) / s_d_;
            Eigen::VectorXd gte;
            double gtt = 0.0;
            Eigen::VectorXd gts;
            gt_product(ga, gb, gc, gd, gte, gtt, gts);
            Eigen::VectorXd rhs_e = -rde - gte;
            double rhs_t = -rdt - gtt;
            Eigen::VectorXd rhs_s = ns_ ? (-rds - gts).eval() : Eigen::VectorXd();
            reduce_and_solve(rhs_e, rhs_t, rhs_s, dxe, dxt, dxs);

            // dv = G dx per row family
            Eigen::VectorXd save_xe = xe_;
            Eigen::VectorXd save_xs = xs_;
            const double save_xt = xt_;
            xe_ = dxe;
            xs_ = dxs;
            xt_ = dxt;
            Eigen::ArrayXd gva, gvb, gvc;
            double gvd;
            row_values(gva, gvb, gvc, gvd);
            xe_ = save_xe;
            xs_ = save_xs;
            xt_ = save_xt;

            dsa = -rpa - gva;
            dya = (-rca - y_a_ * dsa) / s_a_;
            if (n_l1_ > 0) {
                dsb = -rpb - gvb;
                dyb = (-rcb - y_b_ * dsb) / s_b_;
            } else {
                dsb.resize(0);
                dyb.resize(0);
            }
            if (ns_ > 0) {
                dsc = -rpc - gvc;
                dyc = (-rcc - y_c_ * dsc) / s_c_;
            } else {
                dsc.resize(0);
                dyc.resize(0);
            }
            dsd = -rpd - gvd;
            dyd = (-rcd - y_d_ * dsd) / s_d_;
        };

        auto max_step = [](const Eigen::ArrayXd& v, const Eigen::ArrayXd& dv, double cap) {
            double a = cap;
            for (Eigen::Index i = 0; i < v.size(); ++i)
                if (dv(i) < 0.0) a = std::min(a, -v(i) / dv(i));
            return a;
        };

        // predictor
        Eigen::VectorXd dxe, dxs;
        double dxt;
        Eigen::ArrayXd dsa, dsb, dsc, dya, dyb, dyc;
        double dsd, dyd;
        Eigen::ArrayXd rca = s_a_ * y_a_;
        Eigen::ArrayXd rcb = s_b_ * y_b_;
        Eigen::ArrayXd rcc = s_c_ * y_c_;
        double rcd = s_d_ * y_d_;
        newton_step(rca, rcb, rcc, rcd, dxe, dxt, dxs, dsa, dsb, dsc, dsd, dya, dyb, dyc, dyd);

        double ap = max_step(s_a_, dsa, 1.0);
        double ad = max_step(y_a_, dya, 1.0);
        if (n_l1_ > 0) {
            ap = std::min(ap, max_step(s_b_, dsb, 1.0));
            ad = std::min(ad, max_step(y_b_, dyb, 1.0));
        }
        if (ns_ > 0) {
            ap = std::min(ap, max_step(s_c_, dsc, 1.0));
            ad = std::min(ad, max_step(y_c_, dyc, 1.0));
        }
        if (dsd < 0.0) ap = std::min(ap, -s_d_ / dsd);
        if (dyd < 0.0) ad = std::min(ad, -y_d_ / dyd);

        double mu_aff = ((s_a_ + ap * dsa) * (y_a_ + ad * dya)).sum() +
                        (s_d_ + ap * dsd) * (y_d_ + ad * dyd);
        if (n_l1_ > 0) mu_aff += ((s_b_ + ap * dsb) * (y_b_ + ad * dyb)).sum();
        if (ns_ > 0) mu_aff += ((s_c_ + ap * dsc) * (y_c_ + ad * dyc)).sum();
        mu_aff /= static_cast<double>(n_rows);
        const double sigma = std::pow(std::clamp(mu_aff / mu, 0.0, 1.0), 3);

        // corrector
        rca = s_a_ * y_a_ + dsa * dya - sigma * mu;
        if (n_l1_ > 0) rcb = s_b_ * y_b_ + dsb * dyb - sigma * mu;
        if (ns_ > 0) rcc = s_c_ * y_c_ + dsc * dyc - sigma * mu;
        rcd = s_d_ * y_d_ + dsd * dyd - sigma * mu;
        newton_step(rca, rcb, rcc, rcd, dxe, dxt, dxs, dsa, dsb, dsc, dsd, dya, dyb, dyc, dyd);

        const double eta = 0.99995;
        ap = eta * max_step(s_a_, dsa, 1.0 / eta);
        ad = eta * max_step(y_a_, dya, 1.0 / eta);
        if (n_l1_ > 0) {
            ap = std::min(ap, eta * max_step(s_b_, dsb, 1.0 / eta));
            ad = std::min(ad, eta * max_step(y_b_, dyb, 1.0 / eta));
        }
        if (ns_ > 0) {
            ap = std::min(ap, eta * max_step(s_c_, dsc, 1.0 / eta));
            ad = std::min(ad, eta * max_step(y_c_, dyc, 1.0 / eta));
        }
        if (dsd < 0.0) ap = std::min(ap, eta * -s_d_ / dsd);
        if (dyd < 0.0) ad = std::min(ad, eta * -y_d_ / dyd);
        ap = std::min(ap, 1.0);
        ad = std::min(ad, 1.0);

        xe_ += ap * dxe;
        xt_ += ap * dxt;
        if (ns_ > 0) xs_ += ap * dxs;
        s_a_ += ap * dsa;
        y_a_ += ad * dya;
        if (n_l1_ > 0) {
            s_b_ += ap * dsb;
            y_b_ += ad * dyb;
        }
        if (ns_ > 0) {
            s_c_ += ap * dsc;
            y_c_ += ad * dyc;
        }
        s_d_ += ap * dsd;
        y_d_ += ad * dyd;
    }

    xe_ = best_xe;
    xs_ = best_xs;
    xt_ = best_xt;
    primal_inf_ = best_pinf;
    if (best_pinf <= 10.0 * tol * h_scale && best_dinf <= 1e-6 &&
        best_mu <= 10.0 * tol * (1.0 + std::abs(xt_))) {
        status_ = "near-optimal";
        return true;
    }
    status_ = "not converged";
    return false;
}

}  // namespace

MinimaxSolution solve_minimax_design(const MinimaxProblem& prob) {
    if (prob.norm_obj == NormKind::L2 || prob.norm_con == NormKind::L2)
        throw std::invalid_argument("l2 designs are not implemented (QCQP variant out of scope)");
    if (prob.a_obj.cols() != prob.target_obj.cols())
        throw std::invalid_argument("objective side: steering/target column mismatch");
    if (prob.a_con.cols() != prob.target_con.cols())
        throw std::invalid_argument("constraint side: steering/target column mismatch");
    if (prob.a_con.cols() > 0 && prob.a_con.rows() != prob.a_obj.rows())
        throw std::invalid_argument("both sides must share the actual element count");
    if (prob.facets_per_halfplane < 2)
        throw std::invalid_argument("need at least 2 facets per half-plane");

    const int p_con = static_cast<int>(prob.a_con.cols());
    const int p_obj = static_cast<int>(prob.a_obj.cols());
    if (p_obj == 0) throw std::invalid_argument("objective side has no grid points");

    const bool lazy = prob.norm_con == NormKind::L1 && p_con > 600;

    std::vector<char> in_working(static_cast<std::size_t>(p_con), 0);
    if (lazy) {
        const int stride = std::max(1, p_con / 300);
        for (int j = 0; j < p_con; j += stride) in_working[static_cast<std::size_t>(j)] = 1;
    } else {
        std::fill(in_working.begin(), in_working.end(), 1);
    }

    MinimaxSolution sol;
    const double feas_tol = 1e-8 * (1.0 + std::abs(prob.bound));
    const int max_rounds = lazy ? 25 : 1;

    for (int round = 0; round < max_rounds; ++round) {
        std::vector<Point> pts;
        for (int j = 0; j < p_obj; ++j) {
            Point pt;
            pt.a = &prob.a_obj;
            pt.target = &prob.target_obj;
            pt.col = j;
            pt.objective = true;
            pt.l1 = prob.norm_obj == NormKind::L1;
            pts.push_back(pt);
        }
        int nw = 0;
        for (int j = 0; j < p_con; ++j) {
            if (!in_working[static_cast<std::size_t>(j)]) continue;
            Point pt;
            pt.a = &prob.a_con;
            pt.target = &prob.target_con;
            pt.col = j;
            pt.objective = false;
            pt.l1 = prob.norm_con == NormKind::L1;
            pt.rhs_bound = prob.bound;
            pts.push_back(pt);
            ++nw;
        }

        IpmSolver ipm(prob, std::move(pts));
        const bool ok = ipm.solve(/*max_iter=*/150, /*tol=*/1e-9);
        sol.iterations += ipm.iterations();
        sol.outer_rounds = round + 1;
        sol.working_points = nw;
        sol.e = ipm.e_matrix();
        sol.objective = ipm.objective();
        sol.converged = ok;
        if (!ok) {
            sol.infeasible = ipm.infeasibility_certificate();
            if (!sol.infeasible && p_con > 0) {
                // phase zero: minimize the worst constraint violation under an
                // under-estimating facet norm; a positive optimum proves the
                // exact-modulus constraints cannot all be met
                std::vector<Point> cpts;
                for (int j = 0; j < p_con; ++j) {
                    Point pt;
                    pt.a = &prob.a_con;
                    pt.target = &prob.target_con;
                    pt.col = j;
                    pt.objective = true;
                    pt.l1 = prob.norm_con == NormKind::L1;
                    pt.rhs_bound = prob.bound;
                    cpts.push_back(pt);
                }
                IpmSolver phase0(prob, std::move(cpts), /*exact_facets=*/true);
                if (phase0.solve(/*max_iter=*/150, /*tol=*/1e-9) &&
                    phase0.objective() > 1e-6 * (1.0 + std::abs(prob.bound)))
                    sol.infeasible = true;
            }
            sol.status = sol.infeasible ? "infeasible" : ipm.status();
        } else {
            sol.status = ipm.status();
        }

        // exact-modulus audit over the full constraint side
        sol.max_constraint_violation = 0.0;
        sol.worst_constraint_index = -1;
        std::vector<std::pair<double, int>> violations;
        for (int j = 0; j < p_con; ++j) {
            const double v =
                point_norm(sol.e, prob.a_con.col(j), prob.target_con.col(j), prob.norm_con) -
                prob.bound;
            if (v > sol.max_constraint_violation) {
                sol.max_constraint_violation = v;
                sol.worst_constraint_index = j;
            }
            if (v > feas_tol && !in_working[static_cast<std::size_t>(j)])
                violations.emplace_back(v, j);
        }
        if (!ok || violations.empty()) break;
        std::sort(violations.begin(), violations.end(),
                  [](const auto& a, const auto& b) { return a.first > b.first; });
        const int add = std::min<std::size_t>(violations.size(), 256);
        for (int i = 0; i < add; ++i)
            in_working[static_cast<std::size_t>(violations[static_cast<std::size_t>(i)].second)] = 1;
    }
    return sol;
}

}  // namespace tbdoa
