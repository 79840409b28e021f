#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "tbdoa/estimators.hpp"
#include "test_util.hpp"

using namespace tbdoa;

namespace {

struct EstFixture {
    VirtualStructure vs{VirtualKind::Ura, 4, 4, 0.5};
    SectorGrid grid = build_sector_grid(30, 40, 65, 75, 20, 15, 1.0, 6.0);
    InterpolationDesign design = exact_design(vs, grid);
    ArrayGeometry rx = select_receive_elements(design.tx, 8, 3);
    std::vector<Direction> two_targets{{33.0, 66.0}, {39.0, 71.0}};
};

double angle_error(const DoaEstimate& est, const std::vector<Direction>& truth) {
    double worst = 0.0;
    REQUIRE(est.targets.size() == truth.size());
    std::vector<char> used(truth.size(), 0);
    for (const auto& t : truth) {
        double best = 1e300;
        int bi = -1;
        for (std::size_t e = 0; e < est.targets.size(); ++e) {
            if (used[e]) continue;
            const double d = std::abs(est.targets[e].theta_deg - t.theta_deg) +
                             std::abs(est.targets[e].phi_deg - t.phi_deg);
            if (d < best) {
                best = d;
                bi = static_cast<int>(e);
            }
        }
        used[static_cast<std::size_t>(bi)] = 1;
        worst = std::max(worst, best);
    }
    return worst;
}

}  // namespace

TEST_CASE("noiseless exact-model recovery within 1e-6 degrees") {
    EstFixture f;
    SnapshotSet snap = noise_free_snapshot(f.design, f.rx, f.two_targets, 8);
    // distinct pulse amplitudes so the two targets are separable
    Eigen::MatrixXcd p(2, 8);
    for (int q = 0; q < 8; ++q) {
        p(0, q) = std::polar(1.0, 0.4 * q);
        p(1, q) = std::polar(1.3, -0.9 * q + 0.5);
    }
    Eigen::MatrixXcd fm = steering_matrix_f(f.design, f.rx, f.two_targets);
    snap.matrix_form = fm * p;
    snap.truth_rcs = p;
    snap.tensor_form = fold_snapshots(snap.matrix_form, f.vs, f.rx.size());

    for (auto run : {matrix_esprit, hosvd_esprit, tev}) {
        DoaEstimate est = run(snap, f.vs, 2);
        CHECK(angle_error(est, f.two_targets) < 1e-6);
    }
}

TEST_CASE("noiseless L-shaped recovery") {
    VirtualStructure vs{VirtualKind::LShaped, 4, 4, 0.5};
    SectorGrid grid = build_sector_grid(30, 40, 65, 75, 20, 15, 1.0, 6.0);
    InterpolationDesign design = exact_design(vs, grid);
    ArrayGeometry rx = select_receive_elements(design.tx, 5, 3);
    std::vector<Direction> targets{{33.0, 66.0}, {39.0, 71.0}};
    SnapshotSet snap = noise_free_snapshot(design, rx, targets, 6);
    Eigen::MatrixXcd p(2, 6);
    for (int q = 0; q < 6; ++q) {
        p(0, q) = std::polar(1.0, 0.7 * q);
        p(1, q) = std::polar(0.8, -0.4 * q + 1.1);
    }
    snap.matrix_form = steering_matrix_f(design, rx, targets) * p;
    snap.truth_rcs = p;
    snap.tensor_form = fold_snapshots(snap.matrix_form, vs, rx.size());
    REQUIRE(snap.tensor_form.order() == 3);

    for (auto run : {matrix_esprit, hosvd_esprit, tev}) {
        DoaEstimate est = run(snap, vs, 2);
        CHECK(angle_error(est, targets) < 1e-6);
    }
}

TEST_CASE("subspace equivalence and invariances") {
    EstFixture f;
    RadarScene scene{f.two_targets, 1.0, 8, 0.0, 17};
    SnapshotSet snap = simulate(scene, f.design, f.rx);

    SUBCASE("matrix and tensor signal subspaces span the same space noiselessly") {
        SignalSubspace sm = matrix_subspace(snap, 2);
        SignalSubspace st = tensor_subspace(snap, 2);
        CHECK(testutil::max_principal_angle(sm.matrix_basis, st.matrix_basis) < 1e-8);
    }

    SUBCASE("hosvd_esprit matches matrix_esprit noiselessly") {
        DoaEstimate a = matrix_esprit(snap, f.vs, 2);
        DoaEstimate b = hosvd_esprit(snap, f.vs, 2);
        double diff = 0.0;
        for (int i = 0; i < 2; ++i)
            diff = std::max(diff,
                            std::abs(a.targets[static_cast<std::size_t>(i)].theta_deg -
                                     b.targets[static_cast<std::size_t>(i)].theta_deg) +
                                std::abs(a.targets[static_cast<std::size_t>(i)].phi_deg -
                                         b.targets[static_cast<std::size_t>(i)].phi_deg));
        CHECK(diff < 1e-8);
    }

    SUBCASE("pulse permutation leaves estimates unchanged") {
        DoaEstimate base = matrix_esprit(snap, f.vs, 2);
        SnapshotSet permuted = snap;
        Eigen::MatrixXcd y = snap.matrix_form;
        std::vector<int> order{3, 0, 7, 5, 1, 6, 2, 4};
        for (int q = 0; q < 8; ++q)
            permuted.matrix_form.col(q) = y.col(order[static_cast<std::size_t>(q)]);
        permuted.tensor_form = fold_snapshots(permuted.matrix_form, f.vs, f.rx.size());
        DoaEstimate est = matrix_esprit(permuted, f.vs, 2);
        CHECK(angle_error(est, f.two_targets) ==
              doctest::Approx(angle_error(base, f.two_targets)).epsilon(1e-9));
    }

    SUBCASE("global phase rotation leaves estimates unchanged") {
        SnapshotSet rotated = snap;
        rotated.matrix_form *= std::polar(1.0, 1.234);
        rotated.tensor_form = fold_snapshots(rotated.matrix_form, f.vs, f.rx.size());
        DoaEstimate a = matrix_esprit(snap, f.vs, 2);
        DoaEstimate b = matrix_esprit(rotated, f.vs, 2);
        for (int i = 0; i < 2; ++i) {
            CHECK(a.targets[static_cast<std::size_t>(i)].theta_deg ==
                  doctest::Approx(b.targets[static_cast<std::size_t>(i)].theta_deg).epsilon(1e-10));
            CHECK(a.targets[static_cast<std::size_t>(i)].phi_deg ==
                  doctest::Approx(b.targets[static_cast<std::size_t>(i)].phi_deg).epsilon(1e-10));
        }
    }

    SUBCASE("shift eigenvalues have unit modulus noiselessly") {
        DoaEstimate est = matrix_esprit(snap, f.vs, 2);
        for (const auto& t : est.targets) {
            CHECK(std::abs(std::abs(t.lambda_theta) - 1.0) < 1e-6);
            CHECK(std::abs(std::abs(t.lambda_phi) - 1.0) < 1e-6);
        }
    }

    SUBCASE("tev equals hosvd_esprit for a single target") {
        RadarScene one{{{34.0, 66.0}}, 1.0, 6, 0.0, 23};
        SnapshotSet s1 = simulate(one, f.design, f.rx);
        DoaEstimate a = hosvd_esprit(s1, f.vs, 1);
        DoaEstimate b = tev(s1, f.vs, 1);
        CHECK(std::abs(a.targets[0].theta_deg - b.targets[0].theta_deg) < 1e-8);
        CHECK(std::abs(a.targets[0].phi_deg - b.targets[0].phi_deg) < 1e-8);
    }
}

TEST_CASE("pair_eigensystems") {
    std::mt19937 gen(5);

    SUBCASE("K=1 is the identity") {
        Eigen::MatrixXcd t = testutil::random_cmatrix(1, 1, gen);
        CHECK(pair_eigensystems(t, t) == std::vector<int>{0});
    }
    SUBCASE("reproduces a known association and its inverse") {
        Eigen::MatrixXcd t = testutil::random_cmatrix(3, 3, gen);
        // phi system = columns of t swapped by the permutation (2, 0, 1)
        Eigen::MatrixXcd tp(3, 3);
        tp.col(0) = t.col(2);
        tp.col(1) = t.col(0);
        tp.col(2) = t.col(1);
        std::vector<int> perm = pair_eigensystems(t, tp);
        CHECK(perm == std::vector<int>{1, 2, 0});
        std::vector<int> inv = pair_eigensystems(tp, t);
        CHECK(inv == std::vector<int>{2, 0, 1});
    }
    SUBCASE("noiseless two-target pairing recovers the ground-truth association") {
        EstFixture f;
        RadarScene scene{f.two_targets, 1.0, 8, 0.0, 31};
        SnapshotSet snap = simulate(scene, f.design, f.rx);
        DoaEstimate est = matrix_esprit(snap, f.vs, 2);
        CHECK(angle_error(est, f.two_targets) < 1e-6);
    }
}

TEST_CASE("cosines_to_angles edge handling in estimates") {
    auto conv = angles_from_cosines(0.25, 0.43301270189221932, VirtualKind::Ura);
    CHECK(conv.direction.theta_deg == doctest::Approx(30.0).epsilon(1e-12));
    CHECK(conv.direction.phi_deg == doctest::Approx(60.0).epsilon(1e-12));
    auto degen = angles_from_cosines(0.0, 0.0, VirtualKind::Ura);
    CHECK(degen.degenerate);
    auto clip = angles_from_cosines(1.2, 0.3, VirtualKind::Ura);
    CHECK(clip.clipped);
}

TEST_CASE("spectral MUSIC") {
    EstFixture f;
    MusicGrid grid = make_music_grid(f.design, f.rx, 0.1);

    SUBCASE("noiseless single target peaks at the truth") {
        RadarScene scene{{{34.0, 66.0}}, 1.0, 4, 0.0, 5};
        SnapshotSet snap = simulate(scene, f.design, f.rx);
        DoaEstimate est = spectral_music_2d(snap, grid, 1);
        CHECK(std::abs(est.targets[0].theta_deg - 34.0) < 0.05);
        CHECK(std::abs(est.targets[0].phi_deg - 66.0) < 0.05);
    }

    SUBCASE("two well-separated targets are found within grid accuracy") {
        RadarScene scene{f.two_targets, 1.0, 8, 0.0, 9};
        SnapshotSet snap = simulate(scene, f.design, f.rx);
        DoaEstimate est = spectral_music_2d(snap, grid, 2);
        CHECK(angle_error(est, f.two_targets) < 0.1);
    }

    SUBCASE("k must stay below the model dimension") {
        RadarScene scene{{{34.0, 66.0}}, 1.0, 4, 0.0, 5};
        SnapshotSet snap = simulate(scene, f.design, f.rx);
        CHECK_THROWS_AS(spectral_music_2d(snap, grid, 128), std::invalid_argument);
    }

    SUBCASE("unresolvable pair triggers a resolution-failure report") {
        // two targets closer than the peak-suppression radius merge into one peak
        RadarScene scene{{{34.0, 66.0}, {34.15, 66.15}}, 1.0, 8, 0.0, 13};
        SnapshotSet snap = simulate(scene, f.design, f.rx);
        MusicGrid coarse = make_music_grid(f.design, f.rx, 0.5);
        DoaEstimate est = spectral_music_2d(snap, coarse, 2);
        REQUIRE(est.targets.size() == 2);
        CHECK(!est.warnings.empty());
    }
}

TEST_CASE("nearly degenerate shift eigenvalues raise a pairing warning") {
    EstFixture f;
    // equal elevation cosines: same theta with azimuths mirrored about 0 deg
    std::vector<Direction> targets{{34.0, 66.0}, {34.0, 294.0}};
    SnapshotSet snap = noise_free_snapshot(f.design, f.rx, targets, 8);
    Eigen::MatrixXcd p(2, 8);
    for (int q = 0; q < 8; ++q) {
        p(0, q) = std::polar(1.0, 0.5 * q);
        p(1, q) = std::polar(1.1, -0.8 * q + 0.2);
    }
    snap.matrix_form = steering_matrix_f(f.design, f.rx, targets) * p;
    snap.truth_rcs = p;
    snap.tensor_form = fold_snapshots(snap.matrix_form, f.vs, f.rx.size());
    DoaEstimate est = matrix_esprit(snap, f.vs, 2);
    bool warned = false;
    for (const auto& w : est.warnings) warned = warned || w.find("degenerate") != std::string::npos;
    CHECK(!est.warnings.empty());
    CHECK(warned);
}

TEST_CASE("target count above the numerical rank is rejected") {
    EstFixture f;
    RadarScene scene{{{34.0, 66.0}}, 1.0, 4, 0.0, 5};
    SnapshotSet snap = simulate(scene, f.design, f.rx);
    CHECK_THROWS(matrix_esprit(snap, f.vs, 3));
}
