#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <Eigen/Geometry>
#include <cmath>
#include <numbers>
#include <string>

#include "knotflow/energies.hpp"

using namespace knotflow;

namespace {

constexpr double kPi = std::numbers::pi;

ClosedCurve circle(int n, double radius = 1.0 / (2.0 * kPi)) {
    ShapeSpec spec;
    spec.radius = radius;
    return generate_curve(spec, n, 2);
}

ClosedCurve bumpy(int n) {
    ShapeSpec spec;
    spec.kind = ShapeSpec::Kind::perturbed;
    spec.base = ShapeSpec::Kind::ellipse;
    spec.mode = 3;
    spec.amplitude = 0.15;
    return generate_curve(spec, n, 3);
}

ClosedCurve scaled(const ClosedCurve& c, double lambda) {
    NodeField nodes = c.nodes();
    for (Vec3& p : nodes) p *= lambda;
    return ClosedCurve(c.dim(), std::move(nodes));
}

ClosedCurve reversed(const ClosedCurve& c) {
    NodeField nodes;
    for (int i = c.n() - 1; i >= 0; --i) nodes.push_back(c.node(i));
    return ClosedCurve(c.dim(), std::move(nodes));
}

bool message_contains(const std::exception& e, const std::string& needle) {
    return std::string(e.what()).find(needle) != std::string::npos;
}

} // namespace

TEST_CASE("ohara integrand matches the discrete closed form on the circle") {
    const int N = 64;
    ClosedCurve c = circle(N);
    ArclengthTable table = arclength_table(c);
    OharaParams prm{2.0, 1.0};
    const double r = 1.0 / (2.0 * kPi);
    const double sp = c.speeds()[0];
    for (int k : {5, 11, 20, 31}) {
        const double chord = 2.0 * r * std::sin(kPi * k / N);
        const double d = std::min(k, N - k) * sp / N;
        const double expect = std::max(1.0 / (chord * chord) - 1.0 / (d * d), 0.0);
        CHECK(ohara_integrand(c, table, 0, k, prm) == doctest::Approx(expect).epsilon(1e-12));
    }
    CHECK_THROWS_AS(ohara_integrand(c, table, 3, 3, prm), ValidationError);
}

TEST_CASE("ohara integrand clamps negative values near the diagonal") {
    // the discrete arc slightly undershoots the true arc, so adjacent pairs
    // can see chord > arc; those must clamp to zero
    const int N = 128;
    ClosedCurve c = circle(N);
    ArclengthTable table = arclength_table(c);
    OharaParams prm{2.0, 1.0};
    CHECK(ohara_integrand(c, table, 0, 1, prm) == 0.0);
    CHECK(ohara_integrand(c, table, 7, 6, prm) == 0.0);
}

TEST_CASE("ohara integrand is continuous in alpha and scales like lambda^-alpha") {
    ClosedCurve c = bumpy(48);
    ArclengthTable table = arclength_table(c);
    OharaParams tiny{1e-12, 1.0};
    CHECK(std::abs(ohara_integrand(c, table, 3, 20, tiny)) < 1e-10);

    ClosedCurve c3 = scaled(c, 3.0);
    ArclengthTable table3 = arclength_table(c3);
    OharaParams prm{2.3, 1.0};
    const double ratio = ohara_integrand(c3, table3, 3, 20, prm) /
                         ohara_integrand(c, table, 3, 20, prm);
    CHECK(ratio == doctest::Approx(std::pow(3.0, -2.3)).epsilon(1e-12));
}

TEST_CASE("circle energy reproduces the frozen quadrature values") {
    struct Row {
        int n;
        double value;
    };
    // reference values from an independent offset-reduction evaluation of the
    // same quadrature, frozen; the continuum limit is 4
    const Row rows[] = {
        {128, 3.790545535187454},
        {256, 3.895195213377741},
        {512, 3.947582824925392},
    };
    OharaParams prm{2.0, 1.0};
    for (const Row& row : rows) {
        EnergyValue ev = ohara_energy(circle(row.n), prm);
        CHECK(ev.value == doctest::Approx(row.value).epsilon(1e-12));
        // three to four offset rings clamp near the diagonal; the boundary
        // ring splits pair by pair at machine precision, so only the scale
        // of the count is stable
        CHECK(ev.excluded >= 2LL * row.n);
        CHECK(ev.excluded <= 6LL * row.n);
        CHECK(ev.n_terms == static_cast<long long>(row.n) * (row.n - 1));
    }
}

TEST_CASE("ohara energy scales with exponent 2 - alpha p") {
    ClosedCurve c = bumpy(64);
    ClosedCurve c2 = scaled(c, 2.0);
    for (OharaParams prm : {OharaParams{2.5, 1.0}, OharaParams{2.0, 1.2}}) {
        const double degree = 2.0 - prm.alpha * prm.p;
        const double base = ohara_energy(c, prm).value;
        const double big = ohara_energy(c2, prm).value;
        CHECK(big / base == doctest::Approx(std::pow(2.0, degree)).epsilon(1e-10));
    }
}

TEST_CASE("ohara energy is euclidean and orientation invariant") {
    ClosedCurve c = bumpy(64);
    OharaParams prm{2.2, 1.1};
    const double base = ohara_energy(c, prm).value;

    Eigen::AngleAxisd rot(1.37, Vec3(0.2, -1.0, 0.7).normalized());
    NodeField moved = c.nodes();
    for (Vec3& p : moved) p = rot * p + Vec3(1.0, -2.0, 0.5);
    CHECK(ohara_energy(ClosedCurve(3, std::move(moved)), prm).value ==
          doctest::Approx(base).epsilon(1e-12));
    CHECK(ohara_energy(reversed(c), prm).value == doctest::Approx(base).epsilon(1e-12));
}

TEST_CASE("ohara energy is nondecreasing in alpha at unit speed and length") {
    ClosedCurve raw = circle(64);
    NodeField nodes = raw.nodes();
    for (Vec3& p : nodes) p /= raw.speeds()[0]; // discrete speed exactly 1
    ClosedCurve c(2, std::move(nodes));
    double prev = 0.0;
    for (double alpha : {2.0, 2.4, 2.8}) {
        const double e = ohara_energy(c, OharaParams{alpha, 1.0}).value;
        CHECK(e >= prev);
        prev = e;
    }
}

TEST_CASE("degenerate curves are rejected by the energies") {
    ClosedCurve base = circle(64);
    NodeField cross = base.nodes();
    cross[40] = cross[10]; // distant nodes collide, speeds stay positive
    ClosedCurve crossed(2, std::move(cross));
    CHECK_THROWS_AS(ohara_energy(crossed, OharaParams{2.0, 1.0}), CoincidentPoints);
    CHECK_THROWS_AS(menger_energy(crossed, MengerParams{3.2, 3.0}), CoincidentPoints);
    CHECK_THROWS_AS(tangent_point_energy(crossed, TangentPointParams{4.5, 2.0}),
                    CoincidentPoints);

    NodeField stalled = base.nodes();
    stalled[2] = stalled[0]; // zero speed at node 1
    ClosedCurve slow(2, std::move(stalled));
    CHECK_THROWS_AS(ohara_energy(slow, OharaParams{2.0, 1.0}), NonRegular);
    CHECK_THROWS_AS(tangent_point_energy(slow, TangentPointParams{4.5, 2.0}), NonRegular);
}

TEST_CASE("wedge norm basics") {
    CHECK(wedge_norm(Vec3(1, 0, 0), Vec3(0, 1, 0)) == 1.0);
    CHECK(wedge_norm(Vec3(2, 2, 0), Vec3(1, 1, 0)) == doctest::Approx(0.0).epsilon(1e-14));
    CHECK(wedge_norm(Vec3(3, 0, 0), Vec3(0, 4, 0)) == doctest::Approx(12.0));
}

TEST_CASE("menger kernel on the right triangle and under permutations") {
    const Vec3 a(0, 0, 0), b(1, 0, 0), c(0, 1, 0);
    MengerParams pp{3.2, 3.2};
    // q = p reduces to (1/(2R))^p with R the circumradius; R = sqrt(2)/2 here
    CHECK(menger_kernel(a, b, c, pp) ==
          doctest::Approx(std::pow(std::sqrt(0.5), 3.2)).epsilon(1e-13));

    MengerParams prm{3.2, 3.0};
    const double base = menger_kernel(a, b, c, prm);
    CHECK(menger_kernel(b, c, a, prm) == doctest::Approx(base).epsilon(1e-13));
    CHECK(menger_kernel(c, a, b, prm) == doctest::Approx(base).epsilon(1e-13));
    CHECK(menger_kernel(a, c, b, prm) == doctest::Approx(base).epsilon(1e-13));

    CHECK(menger_kernel(Vec3(0, 0, 0), Vec3(1, 1, 0), Vec3(2, 2, 0), prm) == 0.0);
    CHECK_THROWS_AS(menger_kernel(a, a, c, prm), CoincidentPoints);

    const double lam = 1.7;
    const double ratio = menger_kernel(lam * a, lam * b, lam * c, prm) / base;
    CHECK(ratio == doctest::Approx(std::pow(lam, 2.0 * prm.q - 3.0 * prm.p)).epsilon(1e-12));
}

TEST_CASE("menger energy of the circle has an exact closed form at q = p") {
    // every node triple of a polygon inscribed in a circle of radius r has
    // circumradius exactly r, so the energy collapses to a combinatorial count
    const int N = 48;
    const double r = 1.0 / (2.0 * kPi);
    ClosedCurve c = circle(N);
    const double sp = c.speeds()[0];
    MengerParams prm{3.2, 3.2};
    const double expect = std::pow(2.0 * r, -3.2) * sp * sp * sp *
                          static_cast<double>(N - 1) * static_cast<double>(N - 2) /
                          (static_cast<double>(N) * static_cast<double>(N));
    EnergyValue ev = menger_energy(c, prm);
    CHECK(ev.value == doctest::Approx(expect).epsilon(1e-12));
    CHECK(ev.n_terms == static_cast<long long>(N) * (N - 1) * (N - 2));
    CHECK(ev.excluded == 0);
}

TEST_CASE("menger energy scaling, invariance, and orientation flip") {
    ClosedCurve c = bumpy(40);
    MengerParams prm{3.2, 3.0};
    const double base = menger_energy(c, prm).value;

    const double degree = 3.0 + 2.0 * prm.q - 3.0 * prm.p;
    CHECK(menger_energy(scaled(c, 2.0), prm).value / base ==
          doctest::Approx(std::pow(2.0, degree)).epsilon(1e-10));

    Eigen::AngleAxisd rot(0.6, Vec3(1, 1, 1).normalized());
    NodeField moved = c.nodes();
    for (Vec3& p : moved) p = rot * p + Vec3(-0.3, 0.9, 0.1);
    CHECK(menger_energy(ClosedCurve(3, std::move(moved)), prm).value ==
          doctest::Approx(base).epsilon(1e-12));
    CHECK(menger_energy(reversed(c), prm).value == doctest::Approx(base).epsilon(1e-12));
}

TEST_CASE("tangent-point kernel matches the inscribed-angle form on the circle") {
    const int N = 64;
    const double r = 1.0 / (2.0 * kPi);
    ClosedCurve c = circle(N);
    TangentPointParams prm{4.5, 2.0};
    for (int k : {3, 9, 17, 32}) {
        const double chord = 2.0 * r * std::sin(kPi * k / N);
        const double dist = chord * chord / (2.0 * r);
        const double expect = std::pow(dist, prm.q) / std::pow(chord, prm.p);
        CHECK(tangent_point_kernel(c, 0, k, prm) == doctest::Approx(expect).epsilon(1e-12));
    }
    CHECK_THROWS_AS(tangent_point_kernel(c, 5, 5, prm), ValidationError);
}

TEST_CASE("tangent-point kernel vanishes on the tangent line and is asymmetric") {
    NodeField nodes = {Vec3(0, 0, 0),   Vec3(1, 0, 0),   Vec3(2, 0, 0),
                       Vec3(3, 0, 0),   Vec3(3.5, 1, 0), Vec3(2.5, 2, 0),
                       Vec3(1, 2.2, 0), Vec3(-0.5, 1, 0)};
    ClosedCurve c(2, std::move(nodes));
    TangentPointParams prm{4.5, 2.0};
    // node 3 lies on the tangent line of node 1 (both on the flat stretch)
    CHECK(tangent_point_kernel(c, 1, 3, prm) == 0.0);
    CHECK(tangent_point_kernel(c, 1, 5, prm) != tangent_point_kernel(c, 5, 1, prm));
}

TEST_CASE("tangent-point energy of the circle has an exact closed form") {
    // the tangent-point radius of any secant of a circle is the circle radius,
    // so TP^{(2q,q)} = (2r)^-q sp^2 (N-1)/N exactly at the discrete level;
    // p = 2q sits inside (q+2, 2q+1) only for q > 2
    const int N = 96;
    const double r = 1.0 / (2.0 * kPi);
    ClosedCurve c = circle(N);
    const double sp = c.speeds()[0];
    const double q = 3.0;
    TangentPointParams prm{2.0 * q, q};
    const double expect = std::pow(2.0 * r, -q) * sp * sp * static_cast<double>(N - 1) /
                          static_cast<double>(N);
    CHECK(tangent_point_energy(c, prm).value == doctest::Approx(expect).epsilon(1e-12));
}

TEST_CASE("tangent-point energy scaling, invariance, and orientation flip") {
    ClosedCurve c = bumpy(64);
    TangentPointParams prm{4.5, 2.0};
    const double base = tangent_point_energy(c, prm).value;

    const double degree = prm.q - prm.p + 2.0;
    CHECK(tangent_point_energy(scaled(c, 2.0), prm).value / base ==
          doctest::Approx(std::pow(2.0, degree)).epsilon(1e-10));

    Eigen::AngleAxisd rot(2.2, Vec3(0.5, 0.1, -1.0).normalized());
    NodeField moved = c.nodes();
    for (Vec3& p : moved) p = rot * p + Vec3(0.8, 0.8, -0.4);
    CHECK(tangent_point_energy(ClosedCurve(3, std::move(moved)), prm).value ==
          doctest::Approx(base).epsilon(1e-12));
    CHECK(tangent_point_energy(reversed(c), prm).value == doctest::Approx(base).epsilon(1e-12));
}

TEST_CASE("ellipse repels more than the circle of equal length") {
    ShapeSpec espec;
    espec.kind = ShapeSpec::Kind::ellipse;
    ClosedCurve e = generate_curve(espec, 128, 2);
    ClosedCurve c = circle(128, e.length() / (2.0 * kPi));
    CHECK(std::abs(c.length() - e.length()) < 1e-2);
    TangentPointParams prm{4.5, 2.0};
    CHECK(tangent_point_energy(e, prm).value > tangent_point_energy(c, prm).value);
}

TEST_CASE("refinement makes the energies Cauchy in N") {
    OharaParams prm{2.0, 1.0};
    double prev_gap = 0.0;
    double prev = 0.0;
    int step = 0;
    for (int n : {64, 128, 256, 512}) {
        const double e = ohara_energy(circle(n), prm).value;
        if (step > 0) {
            const double gap = std::abs(e - prev);
            if (step > 1) CHECK(gap < 0.6 * prev_gap); // observed order >= 1
            prev_gap = gap;
        }
        prev = e;
        ++step;
    }
}

TEST_CASE("parameter validation names the violated inequality") {
    auto check_message = [](auto params, const std::string& needle) {
        try {
            params.validate();
            FAIL("expected ValidationError for ", needle);
        } catch (const ValidationError& e) {
            CHECK(message_contains(e, needle));
        }
    };
    check_message(OharaParams{-1.0, 1.0}, "alpha > 0");
    check_message(OharaParams{2.0, 0.5}, "p >= 1");
    check_message(OharaParams{1.5, 1.0}, "2 <= alpha*p");
    check_message(OharaParams{4.0, 1.0}, "alpha*p < 2*p + 1");
    check_message(MengerParams{3.2, 0.5}, "q > 1");
    check_message(MengerParams{2.9, 3.0}, "p > 2*q/3 + 1");
    check_message(MengerParams{4.0, 3.0}, "p < q + 2/3");
    check_message(TangentPointParams{4.5, 0.5}, "q > 1");
    check_message(TangentPointParams{3.9, 2.0}, "p > q + 2");
    check_message(TangentPointParams{5.1, 2.0}, "p < 2*q + 1");

    OharaParams boundary{2.0, 1.0}; // alpha p = 2 is admissible
    CHECK_NOTHROW(boundary.validate());
}

TEST_CASE("variant dispatch reaches all three families") {
    ClosedCurve c = bumpy(40);
    AnyEnergyParams oh = OharaParams{2.0, 1.0};
    AnyEnergyParams me = MengerParams{3.2, 3.0};
    AnyEnergyParams tp = TangentPointParams{4.5, 2.0};
    CHECK(energy(c, oh).value == doctest::Approx(ohara_energy(c, OharaParams{2.0, 1.0}).value));
    CHECK(energy(c, me).value == doctest::Approx(menger_energy(c, MengerParams{3.2, 3.0}).value));
    CHECK(energy(c, tp).value ==
          doctest::Approx(tangent_point_energy(c, TangentPointParams{4.5, 2.0}).value));
    CHECK(family_name(oh) == "ohara");
    CHECK(family_name(me) == "menger");
    CHECK(family_name(tp) == "tangent_point");
    CHECK(homogeneity_degree(oh) == doctest::Approx(0.0));
    CHECK(homogeneity_degree(me) == doctest::Approx(3.0 + 6.0 - 9.6));
    CHECK(homogeneity_degree(tp) == doctest::Approx(-0.5));
}
