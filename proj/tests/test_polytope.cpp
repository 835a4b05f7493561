#include <doctest.h>

#include <numbers>
#include <random>

#include "oracles.hpp"
#include "polycbf/plant.hpp"
#include "polycbf/polytope.hpp"

using namespace polycbf;
using std::numbers::pi;

namespace {

HalfSpace hs(std::initializer_list<double> a, double b)
{
    Vector v(static_cast<Eigen::Index>(a.size()));
    int k = 0;
    for (double x : a)
        v(k++) = x;
    return {v, b};
}

SafetySpec slab()
{
    return SafetySpec({hs({1}, 1), hs({-1}, 1)}, {{0, 1}});
}

// Two disjoint unit squares centered at (-2, 0) and (2, 0).
SafetySpec two_boxes()
{
    return SafetySpec({hs({1, 0}, 3), hs({-1, 0}, -1), hs({0, 1}, 1), hs({0, -1}, 1),
                       hs({1, 0}, -1), hs({-1, 0}, 3)},
                      {{0, 1, 2, 3}, {2, 3, 4, 5}});
}

} // namespace

TEST_CASE("spec validation")
{
    CHECK_THROWS_AS(SafetySpec({hs({0, 0}, 1)}, {{0}}), Error);
    CHECK_THROWS_AS(SafetySpec({hs({1, 0}, 0)}, {{0}}), Error);
    // (2, 0, 2) is parallel to (1, 0, 1).
    CHECK_THROWS_AS(SafetySpec({hs({1, 0}, 1), hs({2, 0}, 2)}, {{0, 1}}), Error);
    CHECK_THROWS_AS(SafetySpec({hs({1}, 1)}, {{1}}), Error);
    CHECK_THROWS_AS(SafetySpec({hs({1}, 1)}, {}), Error);
    // x >= 1 and x <= -1 cannot both hold.
    CHECK_THROWS_AS(SafetySpec({hs({1}, -1), hs({-1}, -1)}, {{0, 1}}), Error);
    try {
        SafetySpec({hs({1, 0}, 0)}, {{0}});
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::InvalidSpec);
    }
    // Opposite normals with equal offsets are independent augmented vectors.
    CHECK_NOTHROW(slab());
}

TEST_CASE("max-min evaluation over a union")
{
    const SafetySpec s = two_boxes();
    CHECK(eval_h(s, Eigen::Vector2d(-2, 0)) == doctest::Approx(1.0));
    CHECK(eval_h(s, Eigen::Vector2d(2, 0.5)) == doctest::Approx(0.5));
    CHECK(eval_h(s, Eigen::Vector2d(0, 0)) == doctest::Approx(-1.0));
    CHECK(contains(s, Eigen::Vector2d(2.9, 0.9)));
    CHECK_FALSE(contains(s, Eigen::Vector2d(0, 0)));
    const Vector tv = term_values(s, Eigen::Vector2d(-2, 0));
    CHECK(tv(0) == doctest::Approx(1.0));
    CHECK(tv(1) == doctest::Approx(-3.0));
}

TEST_CASE("boundedness agrees with the planar extreme-ray oracle")
{
    std::mt19937_64 gen(11);
    std::normal_distribution<double> N;
    int bounded = 0;
    for (int trial = 0; trial < 400; ++trial) {
        const int k = 1 + trial % 6;
        Matrix A(k, 2);
        for (int i = 0; i < k; ++i)
            A.row(i) << N(gen), N(gen);
        const Vector b = Vector::Ones(k); // origin strictly inside
        const bool expect = oracle::planar_bounded(A);
        bounded += expect;
        CHECK(is_bounded(A, b) == expect);
    }
    CHECK(bounded > 50);
}

TEST_CASE("boundedness of an empty set raises")
{
    Matrix A(2, 1);
    A << 1, -1;
    CHECK_THROWS_AS(is_bounded(A, Eigen::Vector2d(-1, -1)), Error);
}

TEST_CASE("S_cap enumeration against brute force")
{
    const SafetySpec hex = arm_hexagon_spec();
    CHECK(enumerate_s_cap(hex).size() == 63u);

    const SafetySpec s = two_boxes();
    const auto got = enumerate_s_cap(s);
    std::vector<IndexSet> expect;
    for (unsigned mask = 1; mask < 64; ++mask) {
        IndexSet I;
        for (int i = 0; i < 6; ++i)
            if (mask & (1u << i))
                I.push_back(i);
        bool meets = false;
        for (const auto& term : s.terms()) {
            IndexSet U = I;
            U.insert(U.end(), term.begin(), term.end());
            std::sort(U.begin(), U.end());
            U.erase(std::unique(U.begin(), U.end()), U.end());
            Matrix A(U.size(), 2);
            Vector b(U.size());
            for (std::size_t k = 0; k < U.size(); ++k) {
                A.row(k) = s.halfspace(U[k]).a.transpose();
                b(k) = s.halfspace(U[k]).b;
            }
            meets = meets || oracle::planar_max_min(A, b) >= -1e-12;
        }
        if (meets)
            expect.push_back(I);
    }
    REQUIRE(got.size() == expect.size());
    for (const auto& I : expect)
        CHECK(std::find(got.begin(), got.end(), I) != got.end());
    // Sorted by size, then lexicographically.
    for (std::size_t k = 1; k < got.size(); ++k)
        CHECK((got[k - 1].size() < got[k].size() ||
               (got[k - 1].size() == got[k].size() && got[k - 1] < got[k])));
}

TEST_CASE("too many half-spaces for enumeration")
{
    std::vector<HalfSpace> h;
    for (int i = 0; i < 21; ++i) {
        const double t = 2 * pi * i / 21;
        h.push_back(hs({std::cos(t), std::sin(t)}, 1));
    }
    IndexSet all(21);
    for (int i = 0; i < 21; ++i)
        all[i] = i;
    const SafetySpec s(h, {all});
    try {
        enumerate_s_cap(s);
        FAIL("expected an error");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::TooManyHalfspaces);
    }
}

TEST_CASE("max-min point: hexagon center and random polygons")
{
    const SafetySpec hex = arm_hexagon_spec();
    const auto w = max_min_point(hex, {0, 1, 2, 3, 4, 5});
    CHECK(w.point.norm() <= 1e-12);
    CHECK(w.margin == doctest::Approx(pi / 2).epsilon(1e-14));

    std::mt19937_64 gen(3);
    std::normal_distribution<double> N;
    int checked = 0;
    for (int trial = 0; trial < 200; ++trial) {
        const int k = 3 + trial % 5;
        std::vector<HalfSpace> h;
        Matrix A(k, 2);
        Vector b(k);
        for (int i = 0; i < k; ++i) {
            const double t = 2 * pi * (i + 0.3 * N(gen)) / k;
            A.row(i) << std::cos(t), std::sin(t);
            b(i) = 1 + 0.5 * std::abs(N(gen));
            h.push_back({A.row(i).transpose(), b(i)});
        }
        if (!oracle::planar_bounded(A))
            continue;
        IndexSet all(k);
        for (int i = 0; i < k; ++i)
            all[i] = i;
        const SafetySpec s(h, {all});
        const auto p = max_min_point(s, all);
        CHECK(p.margin == doctest::Approx(oracle::planar_max_min(A, b)).epsilon(1e-9));
        CHECK((A * p.point + b).minCoeff() == doctest::Approx(p.margin).epsilon(1e-9));
        ++checked;
    }
    CHECK(checked > 100);
}

TEST_CASE("geometry certificate of the hexagon")
{
    const SafetySpec hex = arm_hexagon_spec();
    const GeometryCert cert = compute_cert(hex);
    CHECK(std::abs(cert.delta - pi / 2) <= 1e-12);
    CHECK(cert.proj_bounded);
    REQUIRE(cert.term_bounded.size() == 1u);
    CHECK(cert.term_bounded[0]);
    // The full index set is centered at the origin; other sets sit where
    // their own rows are largest.
    CHECK(cert.witness({0, 1, 2, 3, 4, 5}).norm() <= 1e-12);
    for (const auto& I : cert.s_cap) {
        double m = 1e300;
        for (int i : I)
            m = std::min(m, hex.halfspace(i).eval(cert.witness(I)));
        CHECK(m >= pi / 2 - 1e-12);
    }

    WitnessOverrides o;
    o.uniform = Eigen::Vector2d(0, 0);
    const GeometryCert origin = compute_cert(hex, o);
    CHECK(std::abs(origin.delta - pi / 2) <= 1e-12);
    for (const auto& I : origin.s_cap)
        CHECK(origin.witness(I).norm() == 0.0);

    // An off-center witness lowers delta to its smallest margin.
    o.uniform = Eigen::Vector2d(0.25, 0.5);
    const double expect = hex.eval_all(*o.uniform).minCoeff();
    CHECK(compute_cert(hex, o).delta == doctest::Approx(expect).epsilon(1e-14));

    // A witness outside C is rejected.
    o.uniform = Eigen::Vector2d(3, 0);
    CHECK_THROWS_AS(compute_cert(hex, o), Error);
}

TEST_CASE("certificate of a union and of an unbounded spec")
{
    const GeometryCert cert = compute_cert(two_boxes());
    CHECK(cert.delta > 0);
    for (const auto& I : cert.s_cap) {
        const Vector& y = cert.witness(I);
        CHECK(contains(two_boxes(), y));
        for (int i : I)
            CHECK(two_boxes().halfspace(i).eval(y) >= cert.delta - 1e-12);
    }

    const SafetySpec half({hs({1, 0}, 1)}, {{0}});
    try {
        compute_cert(half);
        FAIL("expected an error");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::UnboundedPositions);
    }
}

TEST_CASE("bounding box and scaling")
{
    const SafetySpec hex = arm_hexagon_spec();
    const auto [lo, hi] = bounding_box(hex);
    const auto verts = oracle::planar_vertices(hex.normals(), hex.offsets());
    REQUIRE(verts.size() == 6u);
    Eigen::Vector2d vlo = verts[0], vhi = verts[0];
    for (const auto& v : verts) {
        vlo = vlo.cwiseMin(v);
        vhi = vhi.cwiseMax(v);
    }
    CHECK((lo - vlo).norm() <= 1e-9);
    CHECK((hi - vhi).norm() <= 1e-9);
    CHECK(hi(0) == doctest::Approx(pi / 2));
    CHECK(hi(1) == doctest::Approx(pi));

    const GeometryCert scaled = compute_cert(hex.scaled(2.0));
    CHECK(scaled.delta == doctest::Approx(pi).epsilon(1e-12));
}

TEST_CASE("slab certificate")
{
    const GeometryCert cert = compute_cert(slab());
    CHECK(cert.delta == doctest::Approx(1.0));
    CHECK(cert.s_cap.size() == 3u);
}
