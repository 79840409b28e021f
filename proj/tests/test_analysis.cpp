#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>

#include "tbdoa/analysis.hpp"
#include "tbdoa/rng.hpp"

using namespace tbdoa;

namespace {

struct AnalysisFixture {
    VirtualStructure vs{VirtualKind::Ura, 4, 4, 0.5};
    SectorGrid grid = build_sector_grid(30, 40, 65, 75, 20, 15, 1.0, 6.0);
    InterpolationDesign design = exact_design(vs, grid);
    ArrayGeometry rx = select_receive_elements(design.tx, 8, 3);
};

// Exact design plus a seeded complex perturbation of E, giving a controlled
// interpolation error scale.
InterpolationDesign perturbed_design(const AnalysisFixture& f, double eps, std::uint64_t seed) {
    InterpolationDesign d = f.design;
    CounterRng rng(seed, 0x70657274ull);
    for (Eigen::Index c = 0; c < d.e.cols(); ++c)
        for (Eigen::Index r = 0; r < d.e.rows(); ++r) d.e(r, c) += eps * rng.cnormal();
    return d;
}

// Noiseless estimator bias against the truth for a single target.
std::pair<double, double> empirical_bias(const InterpolationDesign& d, const ArrayGeometry& rx,
                                         const Direction& truth) {
    SnapshotSet snap = noise_free_snapshot(d, rx, {truth}, 1);
    DoaEstimate est = matrix_esprit(snap, d.virtual_array, 1);
    double dp = est.targets[0].phi_deg - truth.phi_deg;
    if (dp > 180.0) dp -= 360.0;
    if (dp < -180.0) dp += 360.0;
    return {est.targets[0].theta_deg - truth.theta_deg, dp};
}

}  // namespace

TEST_CASE("steering derivatives match central finite differences") {
    AnalysisFixture f;
    InterpolationDesign d = perturbed_design(f, 0.05, 3);
    const Direction dir{34.0, 66.0};
    Eigen::VectorXcd dth, dph;
    steering_derivatives(d, f.rx, dir, dth, dph);

    const double h = 1e-6;  // radians
    const double h_deg = rad2deg(h);
    auto f_at = [&](const Direction& x) {
        return steering_matrix_f(d, f.rx, {x}).col(0).eval();
    };
    Eigen::VectorXcd fd_th =
        (f_at({dir.theta_deg + h_deg, dir.phi_deg}) - f_at({dir.theta_deg - h_deg, dir.phi_deg})) /
        (2.0 * h);
    Eigen::VectorXcd fd_ph =
        (f_at({dir.theta_deg, dir.phi_deg + h_deg}) - f_at({dir.theta_deg, dir.phi_deg - h_deg})) /
        (2.0 * h);
    CHECK((dth - fd_th).norm() < 1e-5 * fd_th.norm());
    CHECK((dph - fd_ph).norm() < 1e-5 * fd_ph.norm());
}

TEST_CASE("crb") {
    AnalysisFixture f;
    std::vector<Direction> targets{{33.0, 66.0}, {39.0, 71.0}};
    CounterRng rng(5, 1);
    Eigen::MatrixXcd rcs(2, 8);
    for (int q = 0; q < 8; ++q)
        for (int t = 0; t < 2; ++t) rcs(t, q) = rng.cnormal();

    SUBCASE("doubling the noise variance doubles every bound") {
        CrbReport a = crb(targets, f.design, f.rx, rcs, 0.1);
        CrbReport b = crb(targets, f.design, f.rx, rcs, 0.2);
        for (std::size_t t = 0; t < 2; ++t) {
            CHECK(b.theta_var_deg2[t] == doctest::Approx(2.0 * a.theta_var_deg2[t]).epsilon(1e-12));
            CHECK(b.phi_var_deg2[t] == doctest::Approx(2.0 * a.phi_var_deg2[t]).epsilon(1e-12));
        }
    }

    SUBCASE("URA bounds beat the L-shaped bounds at matched axis sizes") {
        VirtualStructure vsl{VirtualKind::LShaped, 4, 4, 0.5};
        InterpolationDesign dl = exact_design(vsl, f.grid);
        ArrayGeometry rxl = select_receive_elements(dl.tx, 5, 3);
        ArrayGeometry rxu = select_receive_elements(f.design.tx, 5, 3);
        for (double snr : {0.0, 10.0, 20.0, 30.0}) {
            const double nv_u = noise_variance_for_snr(
                steering_matrix_f(f.design, rxu, targets), 1.0, snr);
            const double nv_l =
                noise_variance_for_snr(steering_matrix_f(dl, rxl, targets), 1.0, snr);
            CrbReport u = crb(targets, f.design, rxu, rcs, nv_u);
            CrbReport l = crb(targets, dl, rxl, rcs, nv_l);
            CHECK(u.rmse_theta_deg < l.rmse_theta_deg);
            CHECK(u.rmse_phi_deg < l.rmse_phi_deg);
        }
    }

    SUBCASE("degenerate shift eigenvalues are rejected by the bias expansion") {
        // equal elevation cosines break the theta-axis eigensystem
        std::vector<Direction> deg{{34.0, 66.0}, {34.0, 294.0}};
        CHECK_THROWS_WITH_AS(bias_predict(f.design, f.rx, deg, 2),
                             doctest::Contains("degenerate"), std::runtime_error);
    }

    SUBCASE("coincident targets raise a singularity error") {
        std::vector<Direction> bad{{34.0, 66.0}, {34.0, 66.0}};
        CHECK_THROWS_AS(crb(bad, f.design, f.rx, rcs, 0.1), std::runtime_error);
    }
}

TEST_CASE("bias prediction") {
    AnalysisFixture f;
    const Direction target{34.0, 66.0};

    SUBCASE("zero interpolation error predicts zero bias") {
        BiasPrediction p = bias_predict(f.design, f.rx, {target}, 1);
        CHECK(p.sigma2_app[0] < 1e-24);
        CHECK(std::abs(p.det_dmu[0]) < 1e-12);
        CHECK(std::abs(p.det_dnu[0]) < 1e-12);
        CHECK(p.mse_mu[0] < 1e-24);
    }

    SUBCASE("deterministic first order matches the empirical noiseless bias") {
        // scales chosen so sigma_app^2 spans roughly [1e-4, 1e-2]
        for (double eps : {0.00125, 0.004, 0.0125}) {
            InterpolationDesign d = perturbed_design(f, eps, 11);
            BiasPrediction p = bias_predict(d, f.rx, {target}, 1);
            CHECK(p.sigma2_app[0] > 3e-5);
            CHECK(p.sigma2_app[0] < 3e-2);
            auto [b_th, b_ph] = empirical_bias(d, f.rx, target);
            CHECK(std::abs(p.det_dtheta_deg[0] - b_th) <= 0.5 * std::abs(b_th) + 1e-9);
            CHECK(std::abs(p.det_dphi_deg[0] - b_ph) <= 0.5 * std::abs(b_ph) + 1e-9);
        }
    }

    SUBCASE("predictions scale linearly / quadratically in the error scale") {
        InterpolationDesign d1 = perturbed_design(f, 0.005, 13);
        InterpolationDesign d2 = perturbed_design(f, 0.010, 13);  // same draw, double scale
        BiasPrediction p1 = bias_predict(d1, f.rx, {target}, 1);
        BiasPrediction p2 = bias_predict(d2, f.rx, {target}, 1);
        CHECK(p2.det_dmu[0] == doctest::Approx(2.0 * p1.det_dmu[0]).epsilon(1e-6));
        CHECK(p2.mse_mu[0] == doctest::Approx(4.0 * p1.mse_mu[0]).epsilon(1e-6));
        CHECK(p2.mse_theta_deg2[0] == doctest::Approx(4.0 * p1.mse_theta_deg2[0]).epsilon(1e-6));
    }

    SUBCASE("MSE formula agrees with a Monte Carlo perturbation ensemble") {
        const double eps = 0.01;
        double mse_mu_acc = 0.0, pred_acc = 0.0;
        const int draws = 200;
        for (int i = 0; i < draws; ++i) {
            InterpolationDesign d = perturbed_design(f, eps, 1000 + static_cast<std::uint64_t>(i));
            BiasPrediction p = bias_predict(d, f.rx, {target}, 1);
            mse_mu_acc += p.det_dmu[0] * p.det_dmu[0];
            pred_acc += p.mse_mu[0];
        }
        mse_mu_acc /= draws;
        pred_acc /= draws;
        CHECK(std::abs(mse_mu_acc - pred_acc) <= 0.5 * pred_acc);
    }
}

TEST_CASE("look-up table") {
    AnalysisFixture f;

    SUBCASE("exact design gives the identity table") {
        LookUpTable lut = build_lut(f.design, f.rx, Estimator::MatrixEsprit, 2.0);
        for (std::size_t i = 0; i < lut.mu_true.size(); ++i) {
            CHECK(std::abs(lut.mu_est[i] - lut.mu_true[i]) < 1e-8);
            CHECK(std::abs(lut.nu_est[i] - lut.nu_true[i]) < 1e-8);
        }
    }

    SUBCASE("lattice arithmetic: 1 degree step over the 10x10 sector is 11x11") {
        LookUpTable lut = build_lut(f.design, f.rx, Estimator::MatrixEsprit, 1.0);
        CHECK(lut.n_theta == 11);
        CHECK(lut.n_phi == 11);
        CHECK(lut.mu_true.size() == 121);
    }

    SUBCASE("corrections cut the noiseless bias on a hold-out grid") {
        InterpolationDesign d = perturbed_design(f, 0.02, 7);
        LookUpTable lut = build_lut(d, f.rx, Estimator::MatrixEsprit, 0.5);

        double raw_acc = 0.0, corr_acc = 0.0;
        int n = 0;
        for (double th = 31.25; th <= 38.8; th += 1.0) {
            for (double ph = 66.25; ph <= 73.8; ph += 1.0) {
                const Direction truth{th, ph};
                SnapshotSet snap = noise_free_snapshot(d, f.rx, {truth}, 1);
                DoaEstimate est = matrix_esprit(snap, d.virtual_array, 1);
                DoaEstimate corr = apply_lut(lut, est);
                REQUIRE(corr.targets[0].lut_corrected);
                const double raw = std::hypot(est.targets[0].theta_deg - th,
                                              est.targets[0].phi_deg - ph);
                const double fixed = std::hypot(corr.targets[0].theta_corrected_deg - th,
                                                corr.targets[0].phi_corrected_deg - ph);
                raw_acc += raw;
                corr_acc += fixed;
                ++n;
            }
        }
        CHECK(n > 0);
        CHECK(corr_acc < raw_acc / 10.0);
    }

    SUBCASE("estimates on a lattice image point get the exact lattice correction") {
        InterpolationDesign d = perturbed_design(f, 0.02, 7);
        LookUpTable lut = build_lut(d, f.rx, Estimator::MatrixEsprit, 1.0);
        const Direction truth{33.0, 68.0};
        SnapshotSet snap = noise_free_snapshot(d, f.rx, {truth}, 1);
        DoaEstimate est = matrix_esprit(snap, d.virtual_array, 1);
        DoaEstimate corr = apply_lut(lut, est);
        REQUIRE(corr.targets[0].lut_corrected);
        CHECK(std::abs(corr.targets[0].theta_corrected_deg - truth.theta_deg) < 1e-6);
        CHECK(std::abs(corr.targets[0].phi_corrected_deg - truth.phi_deg) < 1e-6);
    }

    SUBCASE("serialization round-trip") {
        LookUpTable lut = build_lut(f.design, f.rx, Estimator::MatrixEsprit, 2.0);
        lut.save("lut_roundtrip.csv");
        LookUpTable back = LookUpTable::load("lut_roundtrip.csv");
        REQUIRE(back.mu_true.size() == lut.mu_true.size());
        for (std::size_t i = 0; i < lut.mu_true.size(); ++i)
            CHECK(back.mu_est[i] == lut.mu_est[i]);
        std::remove("lut_roundtrip.csv");
    }
}

TEST_CASE("rmse") {
    std::vector<Direction> truth{{30.0, 60.0}};

    SUBCASE("exact estimates give zero") {
        DoaEstimate e;
        e.targets.push_back({30.0, 60.0});
        CHECK(rmse({e, e}, truth).theta_deg == 0.0);
    }
    SUBCASE("single trial, single target, one degree error") {
        DoaEstimate e;
        e.targets.push_back({31.0, 60.0});
        RmseResult r = rmse({e}, truth);
        CHECK(r.theta_deg == doctest::Approx(1.0));
        CHECK(r.phi_deg == doctest::Approx(0.0));
    }
    SUBCASE("hand-computed three-trial fixture") {
        // errors theta: 1, -2, 0.5 ; phi: 0.5, 1, -1
        std::vector<DoaEstimate> trials(3);
        trials[0].targets.push_back({31.0, 60.5});
        trials[1].targets.push_back({28.0, 61.0});
        trials[2].targets.push_back({30.5, 59.0});
        RmseResult r = rmse(trials, truth);
        CHECK(r.theta_deg == doctest::Approx(std::sqrt(5.25 / 3.0)).epsilon(1e-12));
        CHECK(r.phi_deg == doctest::Approx(std::sqrt(2.25 / 3.0)).epsilon(1e-12));
    }
    SUBCASE("empty trial list is rejected") {
        CHECK_THROWS_AS(rmse({}, truth), std::invalid_argument);
    }
}

TEST_CASE("resolution probability") {
    std::vector<Direction> truth{{36.0, 66.0}, {39.0, 69.0}};  // 3 deg separation per axis

    auto trial = [](double t1, double p1, double t2, double p2) {
        DoaEstimate e;
        e.targets.push_back({t1, p1});
        e.targets.push_back({t2, p2});
        return e;
    };

    SUBCASE("exact estimates resolve with probability one") {
        ResolutionResult r =
            resolution_probability({trial(36, 66, 39, 69), trial(36, 66, 39, 69)}, truth);
        CHECK(r.p_theta == 1.0);
        CHECK(r.p_phi == 1.0);
    }
    SUBCASE("an error of exactly half the separation does not resolve") {
        ResolutionResult r = resolution_probability({trial(37.5, 66, 39, 69)}, truth);
        CHECK(r.p_theta == 0.0);
        CHECK(r.p_phi == 1.0);
    }
    SUBCASE("mixed trials average") {
        ResolutionResult r = resolution_probability(
            {trial(36, 66, 39, 69), trial(38.0, 66, 39, 69)}, truth);
        CHECK(r.p_theta == 0.5);
    }
    SUBCASE("needs exactly two targets") {
        CHECK_THROWS_AS(resolution_probability({}, {{30.0, 60.0}}), std::invalid_argument);
    }
}
