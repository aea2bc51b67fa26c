#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "plam/rng.hpp"
#include "plam/samples.hpp"
#include "plam/shooting.hpp"

#include <cmath>

using namespace plam;
using astro::Vec3;

namespace {

// A representative bound trajectory used across the cases.
struct Fixture {
    astro::BodyParams body = astro::jupiter();
    astro::StateCartesian s0{{15.0 * 71492.0, 0.0, 0.0}, {0.0, 10.0, 3.0}};
    double tof = 200000.0;
    Vec3 rf() const { return astro::propagate(s0, tof, body).position; }
};


bool same(const Vec3& a, const Vec3& b) {
    return a.x() == b.x() && a.y() == b.y() && a.z() == b.z();
}

} // namespace

TEST_CASE("short-horizon Jacobian is close to tof times identity") {
    Fixture f;
    const double tof = 1.0;
    // A large step keeps the 1e6 km position difference clear of roundoff;
    // over one second the dynamics are still effectively linear in v0.
    const auto h = shooting::finite_diff_jacobian(f.s0.position, f.s0.velocity, tof, f.body,
                                                  1.0);
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) {
            if (i == j)
                CHECK(h(i, j) == doctest::Approx(tof).epsilon(1e-6));
            else
                CHECK(std::abs(h(i, j)) < 1e-6 * tof);
        }
}

TEST_CASE("forward-difference Jacobian matches a central-difference oracle") {
    Fixture f;
    f.body.j2 = 0.0;
    const double dv = 1e-6;
    const auto h = shooting::finite_diff_jacobian(f.s0.position, f.s0.velocity, f.tof, f.body,
                                                  dv);

    Eigen::Matrix3d oracle;
    const double step = dv / 10.0;
    for (int j = 0; j < 3; ++j) {
        Vec3 vp = f.s0.velocity, vm = f.s0.velocity;
        vp[j] += step;
        vm[j] -= step;
        const Vec3 rp = astro::propagate({f.s0.position, vp}, f.tof, f.body).position;
        const Vec3 rm = astro::propagate({f.s0.position, vm}, f.tof, f.body).position;
        oracle.col(j) = (rp - rm) / (2.0 * step);
    }
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j)
            CHECK(h(i, j) == doctest::Approx(oracle(i, j)).epsilon(1e-4));
}

TEST_CASE("Jacobian is insensitive to halving the finite-difference step") {
    Fixture f;
    const auto h1 = shooting::finite_diff_jacobian(f.s0.position, f.s0.velocity, f.tof, f.body,
                                                   1e-6);
    const auto h2 = shooting::finite_diff_jacobian(f.s0.position, f.s0.velocity, f.tof, f.body,
                                                   5e-7);
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j)
            CHECK(h1(i, j) == doctest::Approx(h2(i, j)).epsilon(1e-4));
}

TEST_CASE("exact initial velocity is a fixed point") {
    Fixture f;
    const Vec3 rf = f.rf();
    const auto res = shooting::shoot(f.s0.position, f.s0.velocity, rf, f.tof, f.body);
    CHECK(res.converged);
    CHECK(res.iterations <= 1);
    CHECK((res.v0 - f.s0.velocity).norm() < 1e-12);
    CHECK(res.terminal_error <= 0.001);
}

TEST_CASE("Keplerian guess from a generated sample converges") {
    const auto body = astro::jupiter();
    const auto rec = samples::generate_sample(4242, samples::SampleRanges::table1(), body);
    const auto res = shooting::shoot(rec.r0, rec.vd, rec.rf, rec.tof, body);
    CHECK(res.converged);
    CHECK(res.terminal_error <= 0.001);
}

TEST_CASE("max_iter = 0 reports the raw guess error") {
    Fixture f;
    const Vec3 rf = f.rf();
    Vec3 guess = f.s0.velocity + Vec3(0.01, -0.02, 0.005);
    shooting::ShootingConfig cfg;
    cfg.max_iter = 0;
    const auto res = shooting::shoot(f.s0.position, guess, rf, f.tof, f.body, cfg);
    CHECK(!res.converged);
    CHECK(res.iterations == 0);
    CHECK(res.propagations == 1);
    const double direct =
        (astro::propagate({f.s0.position, guess}, f.tof, f.body).position - rf).norm();
    CHECK(res.terminal_error == doctest::Approx(direct).epsilon(1e-12));
    CHECK(same(res.v0, guess));
}

TEST_CASE("propagation count is 1 + 4 iterations") {
    Fixture f;
    const Vec3 rf = f.rf();
    const Vec3 guess = f.s0.velocity + Vec3(0.005, -0.01, 0.002);
    const auto res = shooting::shoot(f.s0.position, guess, rf, f.tof, f.body);
    CHECK(res.converged);
    CHECK(res.iterations >= 1);
    CHECK(res.propagations == 1 + 4 * static_cast<long>(res.iterations));
}

TEST_CASE("reported iterate never degrades the initial guess") {
    Fixture f;
    const Vec3 rf = f.rf();
    rng::Stream s(3);
    for (int i = 0; i < 10; ++i) {
        const Vec3 guess = f.s0.velocity + Vec3(s.uniform(-0.1, 0.1), s.uniform(-0.1, 0.1),
                                                s.uniform(-0.1, 0.1));
        shooting::ShootingConfig cfg;
        cfg.max_iter = 5;
        const auto res = shooting::shoot(f.s0.position, guess, rf, f.tof, f.body, cfg);
        const double guess_err =
            (astro::propagate({f.s0.position, guess}, f.tof, f.body).position - rf).norm();
        CHECK(res.terminal_error <= guess_err * (1.0 + 1e-12));
    }
}

TEST_CASE("determinism: identical inputs give identical results") {
    Fixture f;
    const Vec3 rf = f.rf();
    const Vec3 guess = f.s0.velocity + Vec3(0.004, 0.003, -0.002);
    const auto a = shooting::shoot(f.s0.position, guess, rf, f.tof, f.body);
    const auto b = shooting::shoot(f.s0.position, guess, rf, f.tof, f.body);
    CHECK(same(a.v0, b.v0));
    CHECK(a.iterations == b.iterations);
    CHECK(a.terminal_error == b.terminal_error);
}

TEST_CASE("step limit clamps each Newton update") {
    Fixture f;
    const Vec3 rf = f.rf();
    const Vec3 guess = f.s0.velocity + Vec3(0.05, -0.05, 0.02);
    shooting::ShootingConfig cfg;
    cfg.max_iter = 1;
    cfg.step_limit = 1e-4;
    const auto res = shooting::shoot(f.s0.position, guess, rf, f.tof, f.body, cfg);
    CHECK((res.v0 - guess).norm() <= 1e-4 * (1.0 + 1e-12));
}

TEST_CASE("invalid configuration is rejected") {
    Fixture f;
    shooting::ShootingConfig cfg;
    cfg.tol = 0.0;
    CHECK_THROWS_AS(
        shooting::shoot(f.s0.position, f.s0.velocity, f.s0.position, f.tof, f.body, cfg),
        std::domain_error);
    cfg = {};
    cfg.dv_step = -1.0;
    CHECK_THROWS_AS(
        shooting::shoot(f.s0.position, f.s0.velocity, f.s0.position, f.tof, f.body, cfg),
        std::domain_error);
}
