#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>

#include "tbdoa/sim.hpp"

using namespace tbdoa;

namespace {

// 2x2 exact design, 3 receive elements: small and fast.
struct SimFixture {
    VirtualStructure vs{VirtualKind::Ura, 2, 2, 0.5};
    SectorGrid grid = build_sector_grid(30, 40, 65, 75, 20, 15, 2.5, 12.0);
    InterpolationDesign design = exact_design(vs, grid);
    ArrayGeometry rx{{{0.0, 0.0}, {0.5, 0.0}, {0.0, 0.5}}};
};

}  // namespace

TEST_CASE("steering matrix stacking") {
    SimFixture f;

    SUBCASE("column equals the vectorized steering tensor") {
        std::vector<Direction> targets{{33.0, 66.0}, {39.0, 71.0}};
        Eigen::MatrixXcd fm = steering_matrix_f(f.design, f.rx, targets);
        for (std::size_t k = 0; k < targets.size(); ++k) {
            auto [mu, nu] = direction_cosines(targets[k], f.vs.kind);
            ComplexTensor piece = outer_product({axis_steering(f.vs.m1, f.vs.spacing, mu),
                                                 axis_steering(f.vs.m2, f.vs.spacing, nu),
                                                 steering_vector(f.rx, targets[k])});
            CHECK((fm.col(static_cast<Eigen::Index>(k)) - vectorize(piece)).norm() < 1e-12);
        }
    }

    SUBCASE("ideal and mapped stacking agree for the exact design") {
        std::vector<Direction> targets{{34.0, 66.0}};
        Eigen::MatrixXcd a = steering_matrix_f(f.design, f.rx, targets);
        Eigen::MatrixXcd b = ideal_steering_matrix_f(f.vs, f.rx, targets);
        CHECK((a - b).norm() < 1e-12);
    }

    SUBCASE("distinct targets give linearly independent columns") {
        std::vector<Direction> targets{{33.0, 66.0}, {39.0, 71.0}};
        Eigen::MatrixXcd fm = steering_matrix_f(f.design, f.rx, targets);
        Eigen::JacobiSVD<Eigen::MatrixXcd> svd(fm);
        CHECK(svd.singularValues()(1) > 1e-3 * svd.singularValues()(0));
    }
}

TEST_CASE("simulate") {
    SimFixture f;

    SUBCASE("noiseless single target, single pulse is proportional to f") {
        RadarScene scene{{{34.0, 66.0}}, 1.0, 1, 0.0, 7};
        SnapshotSet snap = simulate(scene, f.design, f.rx);
        Eigen::MatrixXcd fm = steering_matrix_f(f.design, f.rx, scene.targets);
        const cd beta = snap.truth_rcs(0, 0);
        CHECK((snap.matrix_form - beta * fm).norm() < 1e-12 * snap.matrix_form.norm());
    }

    SUBCASE("matrix/tensor duality holds exactly") {
        RadarScene scene{{{33.0, 66.0}, {39.0, 71.0}}, 1.0, 5, 0.3, 11};
        SnapshotSet snap = simulate(scene, f.design, f.rx);
        REQUIRE(snap.tensor_form.dims() == std::vector<Eigen::Index>({2, 2, 3, 5}));
        Eigen::MatrixXcd unf = unfold(snap.tensor_form, 3).transpose();
        CHECK((unf - snap.matrix_form).norm() == 0.0);
    }

    SUBCASE("same seed reproduces the snapshot bit for bit") {
        RadarScene scene{{{34.0, 66.0}}, 1.0, 4, 0.5, 99};
        SnapshotSet a = simulate(scene, f.design, f.rx);
        SnapshotSet b = simulate(scene, f.design, f.rx);
        CHECK((a.matrix_form - b.matrix_form).norm() == 0.0);
        CHECK((a.truth_rcs - b.truth_rcs).norm() == 0.0);
    }

    SUBCASE("noiseless matrix form has rank min(K, Q)") {
        RadarScene one_pulse{{{33.0, 66.0}, {39.0, 71.0}}, 1.0, 1, 0.0, 3};
        Eigen::JacobiSVD<Eigen::MatrixXcd> svd(simulate(one_pulse, f.design, f.rx).matrix_form);
        CHECK(svd.singularValues()(0) > 0.0);

        RadarScene six_pulses{{{33.0, 66.0}, {39.0, 71.0}}, 1.0, 6, 0.0, 3};
        Eigen::JacobiSVD<Eigen::MatrixXcd> svd2(simulate(six_pulses, f.design, f.rx).matrix_form);
        CHECK(svd2.singularValues()(1) > 1e-10 * svd2.singularValues()(0));
        CHECK(svd2.singularValues()(2) < 1e-10 * svd2.singularValues()(0));
    }

    SUBCASE("out-of-sector target warns but does not fail") {
        RadarScene scene{{{10.0, 10.0}}, 1.0, 1, 0.0, 3};
        SnapshotSet snap = simulate(scene, f.design, f.rx);
        CHECK(!snap.warnings.empty());
    }

    SUBCASE("scene validation") {
        CHECK_THROWS_AS(simulate({{}, 1.0, 1, 0.0, 0}, f.design, f.rx), std::invalid_argument);
        CHECK_THROWS_AS(simulate({{{34.0, 66.0}}, 1.0, 0, 0.0, 0}, f.design, f.rx),
                        std::invalid_argument);
        CHECK_THROWS_AS(simulate({{{34.0, 66.0}}, -1.0, 1, 0.0, 0}, f.design, f.rx),
                        std::invalid_argument);
    }
}

TEST_CASE("snr") {
    SimFixture f;

    SUBCASE("equal energies give 0 dB") {
        Eigen::MatrixXcd s = Eigen::MatrixXcd::Ones(4, 2);
        CHECK(snr_db(s, s) == 0.0);
    }
    SUBCASE("noise amplitude x10 drops SNR by 20 dB") {
        Eigen::MatrixXcd s = Eigen::MatrixXcd::Random(6, 3);
        Eigen::MatrixXcd n = Eigen::MatrixXcd::Random(6, 3);
        CHECK(snr_db(s, 10.0 * n) == doctest::Approx(snr_db(s, n) - 20.0).epsilon(1e-12));
    }
    SUBCASE("zero noise returns the +inf sentinel") {
        Eigen::MatrixXcd s = Eigen::MatrixXcd::Ones(2, 2);
        CHECK(std::isinf(snr_db(s, Eigen::MatrixXcd::Zero(2, 2))));
    }
    SUBCASE("requested SNR is realized within 0.1 dB over many draws") {
        RadarScene scene{{{34.0, 66.0}, {38.0, 70.0}}, 1.0, 4, 0.0, 1};
        Eigen::MatrixXcd fm = steering_matrix_f(f.design, f.rx, scene.targets);
        const double target_snr = 7.0;
        scene.noise_variance = noise_variance_for_snr(fm, scene.rcs_variance, target_snr);
        double sig = 0.0, noi = 0.0;
        for (int trial = 0; trial < 10000; ++trial) {
            scene.rng_seed = static_cast<std::uint64_t>(trial);
            SnapshotSet snap = simulate(scene, f.design, f.rx);
            Eigen::MatrixXcd clean = fm * snap.truth_rcs;
            sig += clean.squaredNorm();
            noi += (snap.matrix_form - clean).squaredNorm();
        }
        const double realized = 10.0 * std::log10(sig / noi);
        CHECK(std::abs(realized - target_snr) < 0.1);
    }
}

TEST_CASE("sample covariance converges to F diag F^H + noise") {
    SimFixture f;
    RadarScene scene{{{34.0, 66.0}, {38.0, 70.0}}, 1.0, 10000, 0.25, 21};
    SnapshotSet snap = simulate(scene, f.design, f.rx);
    Eigen::MatrixXcd fm = steering_matrix_f(f.design, f.rx, scene.targets);
    Eigen::MatrixXcd want = scene.rcs_variance * fm * fm.adjoint() +
                            scene.noise_variance * Eigen::MatrixXcd::Identity(fm.rows(), fm.rows());
    Eigen::MatrixXcd got =
        snap.matrix_form * snap.matrix_form.adjoint() / static_cast<double>(scene.pulses);
    CHECK((got - want).norm() < 0.05 * want.norm());
}

TEST_CASE("snapshot text dump round-trips") {
    SimFixture f;
    RadarScene scene{{{34.0, 66.0}}, 1.0, 3, 0.1, 5};
    SnapshotSet snap = simulate(scene, f.design, f.rx);
    const std::string path = "snapshots_roundtrip.txt";
    snap.save(path);
    SnapshotSet back = SnapshotSet::load(path, f.vs, f.rx.size());
    CHECK((back.matrix_form - snap.matrix_form).norm() < 1e-12 * snap.matrix_form.norm());
    std::remove(path.c_str());
}
