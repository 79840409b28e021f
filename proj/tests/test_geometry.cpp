#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <random>

#include "tbdoa/geometry.hpp"
#include "test_util.hpp"

using namespace tbdoa;

TEST_CASE("steering vector basics") {
    SUBCASE("theta = 0 gives the all-ones vector") {
        ArrayGeometry g({{0.0, 0.0}, {0.7, 0.3}, {1.9, 2.2}});
        Eigen::VectorXcd a = steering_vector(g, {0.0, 123.0});
        CHECK((a - Eigen::VectorXcd::Ones(3)).norm() < 1e-14);
    }
    SUBCASE("single element at the origin responds with 1 for any direction") {
        ArrayGeometry g({{0.0, 0.0}});
        Eigen::VectorXcd a = steering_vector(g, {37.0, 211.0});
        REQUIRE(a.size() == 1);
        CHECK(std::abs(a(0) - cd(1.0, 0.0)) < 1e-14);
    }
    SUBCASE("two elements at (0,0),(0.5,0), theta=30, phi=0: entry 2 = exp(-j pi/2)") {
        ArrayGeometry g({{0.0, 0.0}, {0.5, 0.0}});
        Eigen::VectorXcd a = steering_vector(g, {30.0, 0.0});
        CHECK(std::abs(a(1) - std::polar(1.0, -kPi / 2.0)) < 1e-12);
    }
    SUBCASE("entries have unit modulus") {
        std::mt19937 gen(3);
        std::uniform_real_distribution<double> pd(-3.0, 3.0);
        std::vector<Eigen::Vector2d> pos;
        for (int i = 0; i < 16; ++i) pos.emplace_back(pd(gen), pd(gen));
        ArrayGeometry g(pos);
        Eigen::VectorXcd a = steering_vector(g, {52.0, 310.0});
        for (Eigen::Index i = 0; i < a.size(); ++i) CHECK(std::abs(std::abs(a(i)) - 1.0) <= 1e-14);
    }
}

TEST_CASE("direction cosines and their inverse") {
    SUBCASE("URA: theta=30, phi=60") {
        auto [mu, nu] = direction_cosines({30.0, 60.0}, VirtualKind::Ura);
        CHECK(mu == doctest::Approx(0.25).epsilon(1e-12));
        CHECK(nu == doctest::Approx(0.43301270189221932).epsilon(1e-12));
    }
    SUBCASE("theta = 0 maps to (0,0) for the sin(theta)-weighted kinds") {
        for (auto kind : {VirtualKind::Ura, VirtualKind::LShaped}) {
            auto [mu, nu] = direction_cosines({0.0, 77.0}, kind);
            CHECK(mu == 0.0);
            CHECK(std::abs(nu) < 1e-15);
        }
        // Cross ULAs carry azimuth through nu = sin(phi) independently of
        // elevation, so only mu collapses at broadside.
        auto [mu, nu] = direction_cosines({0.0, 77.0}, VirtualKind::CrossUla);
        CHECK(mu == 0.0);
        CHECK(nu == doctest::Approx(std::sin(deg2rad(77.0))).epsilon(1e-14));
    }
    SUBCASE("inverse example (0.25, 0.4330127...) -> (30, 60)") {
        auto conv = angles_from_cosines(0.25, 0.43301270189221932, VirtualKind::Ura);
        CHECK(!conv.degenerate);
        CHECK(conv.direction.theta_deg == doctest::Approx(30.0).epsilon(1e-12));
        CHECK(conv.direction.phi_deg == doctest::Approx(60.0).epsilon(1e-12));
    }
    SUBCASE("(0,0) is flagged degenerate") {
        auto conv = angles_from_cosines(0.0, 0.0, VirtualKind::Ura);
        CHECK(conv.degenerate);
        CHECK(conv.direction.theta_deg == 0.0);
    }
    SUBCASE("out-of-manifold cosines are clipped and flagged") {
        auto conv = angles_from_cosines(0.9, 0.9, VirtualKind::Ura);
        CHECK(conv.clipped);
        CHECK(conv.direction.theta_deg == doctest::Approx(90.0));
    }
    SUBCASE("round-trip over the reference sector at 0.5 degree steps") {
        for (auto kind : {VirtualKind::Ura, VirtualKind::CrossUla}) {
            double max_err = 0.0;
            for (double th = 30.0; th <= 40.0 + 1e-9; th += 0.5) {
                for (double ph = 65.0; ph <= 75.0 + 1e-9; ph += 0.5) {
                    auto [mu, nu] = direction_cosines({th, ph}, kind);
                    auto conv = angles_from_cosines(mu, nu, kind);
                    max_err = std::max(max_err, std::abs(conv.direction.theta_deg - th));
                    max_err = std::max(max_err, std::abs(conv.direction.phi_deg - ph));
                }
            }
            CHECK(max_err < 1e-12);
        }
    }
}

TEST_CASE("virtual steering vectors") {
    SUBCASE("URA 2x2 spacing 0.5 at theta=0 is all ones, length 4") {
        VirtualStructure vs{VirtualKind::Ura, 2, 2, 0.5};
        Eigen::VectorXcd a = virtual_steering(vs, {0.0, 10.0});
        REQUIRE(a.size() == 4);
        CHECK((a - Eigen::VectorXcd::Ones(4)).norm() < 1e-14);
    }
    SUBCASE("L-shaped m1=m2=4 has length 7 (origin shared)") {
        VirtualStructure vs{VirtualKind::LShaped, 4, 4, 0.5};
        Eigen::VectorXcd a = virtual_steering(vs, {33.0, 66.0});
        CHECK(a.size() == 7);
    }
    SUBCASE("URA entries equal the Kronecker of the axis vectors, loop oracle") {
        VirtualStructure vs{VirtualKind::Ura, 3, 4, 0.5};
        Direction d{34.0, 66.0};
        auto [mu, nu] = direction_cosines(d, vs.kind);
        Eigen::VectorXcd c = axis_steering(3, 0.5, mu);
        Eigen::VectorXcd dv = axis_steering(4, 0.5, nu);
        Eigen::VectorXcd a = virtual_steering(vs, d);
        for (int j = 0; j < 4; ++j)
            for (int i = 0; i < 3; ++i)
                CHECK(std::abs(a(i + 3 * j) - c(i) * dv(j)) < 1e-14);
    }
    SUBCASE("URA virtual steering equals vec of the rank-1 outer product") {
        VirtualStructure vs{VirtualKind::Ura, 4, 4, 0.5};
        Direction d{36.0, 70.0};
        auto [mu, nu] = direction_cosines(d, vs.kind);
        ComplexTensor outer = outer_product({axis_steering(4, 0.5, mu), axis_steering(4, 0.5, nu)});
        CHECK((virtual_steering(vs, d) - vectorize(outer)).norm() < 1e-14);
    }
}

TEST_CASE("selection matrices") {
    VirtualStructure vs{VirtualKind::Ura, 3, 4, 0.5};
    auto [j1, j2] = selection_matrices(vs, 0);

    SUBCASE("m=3: J1 keeps rows 1,2 of I3; J2 keeps rows 2,3") {
        Eigen::MatrixXd i3 = Eigen::MatrixXd::Identity(3, 3);
        CHECK((j1 - i3.topRows(2)).norm() == 0.0);
        CHECK((j2 - i3.bottomRows(2)).norm() == 0.0);
    }
    SUBCASE("exactly one 1 per row") {
        for (const auto& j : {j1, j2}) {
            for (Eigen::Index r = 0; r < j.rows(); ++r) {
                CHECK(j.row(r).sum() == 1.0);
                CHECK(j.row(r).cwiseAbs().maxCoeff() == 1.0);
            }
        }
    }
    SUBCASE("shift invariance J1 c e^{-j2 pi s mu} == J2 c for several mu") {
        for (double mu : {-0.7, -0.2, 0.0, 0.31, 0.9}) {
            Eigen::VectorXcd c = axis_steering(3, 0.5, mu);
            Eigen::VectorXcd lhs = (j1 * c) * std::polar(1.0, -2.0 * kPi * 0.5 * mu);
            Eigen::VectorXcd rhs = j2 * c;
            CHECK((lhs - rhs).norm() < 1e-12);
        }
    }
}

TEST_CASE("omega selectors satisfy the shift identity on the stacked steering") {
    const int n_rx = 3;
    ArrayGeometry rx({{0.0, 0.0}, {0.4, 0.1}, {1.1, 0.9}});
    Direction d{34.0, 66.0};
    Eigen::VectorXcd b = steering_vector(rx, d);

    auto check_structure = [&](const VirtualStructure& vs) {
        Eigen::VectorXcd atil = virtual_steering(vs, d);
        // stacked model: rx outermost, virtual fastest
        Eigen::VectorXcd f(atil.size() * n_rx);
        for (int n = 0; n < n_rx; ++n) f.segment(n * atil.size(), atil.size()) = b(n) * atil;
        auto [mu, nu] = direction_cosines(d, vs.kind);
        for (int axis = 0; axis < 2; ++axis) {
            auto [o1, o2] = omega_selectors(vs, n_rx, axis);
            const double cosine = axis == 0 ? mu : nu;
            Eigen::VectorXcd lhs = (o1 * f) * std::polar(1.0, -2.0 * kPi * vs.spacing * cosine);
            CHECK((lhs - o2 * f).norm() < 1e-12);
        }
    };
    check_structure({VirtualKind::Ura, 3, 4, 0.5});
    check_structure({VirtualKind::CrossUla, 3, 3, 0.5});
    check_structure({VirtualKind::LShaped, 4, 4, 0.5});
}

TEST_CASE("sector grids") {
    SUBCASE("reference sector at 1 degree in-step has 121 in-sector points") {
        SectorGrid g = build_sector_grid(30, 40, 65, 75, 20, 15, 1.0, 2.0);
        CHECK(g.in_sector.size() == 121);
    }
    SUBCASE("transition (20,15) excludes [10,60]x[50,90] from the out-sector") {
        SectorGrid g = build_sector_grid(30, 40, 65, 75, 20, 15, 1.0, 2.0);
        for (const auto& d : g.out_sector) {
            const bool inside_exclusion =
                d.theta_deg >= 10.0 && d.theta_deg <= 60.0 && d.phi_deg >= 50.0 && d.phi_deg <= 90.0;
            CHECK(!inside_exclusion);
        }
        CHECK(!g.out_sector.empty());
    }
    SUBCASE("out-sector contains no in-sector point") {
        SectorGrid g = build_sector_grid(30, 40, 65, 75, 5, 5, 1.0, 2.0);
        for (const auto& d : g.out_sector) CHECK(!g.in_sector_contains(d));
    }
    SUBCASE("degenerate sector throws") {
        CHECK_THROWS_AS(build_sector_grid(40, 30, 65, 75, 20, 15, 1.0, 2.0),
                        std::invalid_argument);
    }
    SUBCASE("full-rank guard throws when the in-sector grid is too small") {
        CHECK_THROWS_AS(build_sector_grid(30, 40, 65, 75, 20, 15, 5.0, 2.0, 64),
                        std::invalid_argument);
    }
}

TEST_CASE("steering matrices over enough in-sector directions have full column rank") {
    VirtualStructure vs{VirtualKind::Ura, 4, 4, 0.5};
    SectorGrid g = build_sector_grid(30, 40, 65, 75, 20, 15, 1.0, 2.0);
    Eigen::MatrixXcd atil = virtual_steering_matrix(vs, g.in_sector);
    Eigen::JacobiSVD<Eigen::MatrixXcd> svd(atil.transpose());
    // narrow sector: conditioning is poor but the rank is numerically full
    CHECK(svd.singularValues().minCoeff() > 1e-10 * svd.singularValues().maxCoeff());
}

TEST_CASE("irregular array generator") {
    ArrayGeometry g = irregular_transmit_array(8, 8, 4.0, 0.25, 42);
    REQUIRE(g.size() == 64);
    SUBCASE("same seed reproduces the same array") {
        ArrayGeometry h = irregular_transmit_array(8, 8, 4.0, 0.25, 42);
        for (int i = 0; i < 64; ++i)
            CHECK((g.positions()[static_cast<std::size_t>(i)] -
                   h.positions()[static_cast<std::size_t>(i)]).norm() == 0.0);
    }
    SUBCASE("different seed gives a different array") {
        ArrayGeometry h = irregular_transmit_array(8, 8, 4.0, 0.25, 43);
        double diff = 0.0;
        for (int i = 0; i < 64; ++i)
            diff += (g.positions()[static_cast<std::size_t>(i)] -
                     h.positions()[static_cast<std::size_t>(i)]).norm();
        CHECK(diff > 1e-6);
    }
    SUBCASE("displacements stay within the quarter-wavelength bound") {
        const double pitch = 4.0 / 7.0;
        for (int j = 0; j < 8; ++j)
            for (int i = 0; i < 8; ++i) {
                const auto& p = g.positions()[static_cast<std::size_t>(i + 8 * j)];
                CHECK(std::abs(p.x() - i * pitch) <= 0.25 + 1e-12);
                CHECK(std::abs(p.y() - j * pitch) <= 0.25 + 1e-12);
            }
    }
}

TEST_CASE("receive selection draws distinct transmit elements, reproducibly") {
    ArrayGeometry tx = irregular_transmit_array(8, 8, 4.0, 0.25, 1);
    ArrayGeometry rx1 = select_receive_elements(tx, 8, 7);
    ArrayGeometry rx2 = select_receive_elements(tx, 8, 7);
    REQUIRE(rx1.size() == 8);
    for (int i = 0; i < 8; ++i) {
        CHECK((rx1.positions()[static_cast<std::size_t>(i)] -
               rx2.positions()[static_cast<std::size_t>(i)]).norm() == 0.0);
        // element must come from the transmit array
        bool found = false;
        for (const auto& p : tx.positions())
            if ((p - rx1.positions()[static_cast<std::size_t>(i)]).norm() == 0.0) found = true;
        CHECK(found);
    }
}

TEST_CASE("array geometry text round-trip") {
    ArrayGeometry g = irregular_transmit_array(3, 2, 2.0, 0.25, 5);
    const std::string path = "geometry_roundtrip.txt";
    g.save(path);
    ArrayGeometry h = ArrayGeometry::load(path);
    REQUIRE(h.size() == g.size());
    for (int i = 0; i < g.size(); ++i)
        CHECK((g.positions()[static_cast<std::size_t>(i)] -
               h.positions()[static_cast<std::size_t>(i)]).norm() == 0.0);
    std::remove(path.c_str());
}
