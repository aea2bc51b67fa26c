#include "plam/astro.hpp"

#include <boost/numeric/odeint/stepper/runge_kutta_fehlberg78.hpp>

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>

namespace plam::astro {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

using State6 = std::array<double, 6>;

void j2_rhs(const State6& s, State6& dsdt, const BodyParams& body) {
    const double x = s[0], y = s[1], z = s[2];
    const double r2 = x * x + y * y + z * z;
    const double r = std::sqrt(r2);
    const double r3 = r2 * r;
    const double z2_r2 = z * z / r2;
    const double j2_term = 1.5 * body.j2 * (body.radius * body.radius) / r2;
    const double common = -(body.mu / r3) * (1.0 + j2_term * (1.0 - 5.0 * z2_r2));
    dsdt[0] = s[3];
    dsdt[1] = s[4];
    dsdt[2] = s[5];
    dsdt[3] = common * x;
    dsdt[4] = common * y;
    dsdt[5] = -(body.mu / r3) * (1.0 + j2_term * (3.0 - 5.0 * z2_r2)) * z;
}

} // namespace

Vec3 j2_acceleration(const StateCartesian& state, const BodyParams& body) {
    body.validate();
    if (state.position.norm() <= 0.0)
        throw std::domain_error("j2_acceleration: zero-radius position");
    State6 s{state.position.x(), state.position.y(), state.position.z(),
             state.velocity.x(), state.velocity.y(), state.velocity.z()};
    State6 d;
    j2_rhs(s, d, body);
    return {d[3], d[4], d[5]};
}

StateCartesian propagate(const StateCartesian& state0, double tof, const BodyParams& body,
                         const PropagatorConfig& cfg) {
    body.validate();
    if (tof < 0.0) throw std::domain_error("propagate: tof must be >= 0");
    if (!(cfg.rel_tol > 0.0 && cfg.rel_tol <= 1e-3) || !(cfg.abs_tol > 0.0 && cfg.abs_tol <= 1e-3))
        throw std::domain_error("propagate: tolerances must lie in (0, 1e-3]");
    if (cfg.max_steps <= 0) throw std::domain_error("propagate: max_steps must be > 0");
    if (tof == 0.0) return state0;

    boost::numeric::odeint::runge_kutta_fehlberg78<State6> stepper;
    auto sys = [&body](const State6& s, State6& dsdt, double) { j2_rhs(s, dsdt, body); };

    State6 x{state0.position.x(), state0.position.y(), state0.position.z(),
             state0.velocity.x(), state0.velocity.y(), state0.velocity.z()};
    State6 x_new, xerr;

    const double r0 = state0.position.norm();
    double t = 0.0;
    double dt = std::min(tof, 1e-2 * kTwoPi * std::sqrt(r0 * r0 * r0 / body.mu));

    // PI step-size controller for the embedded 8(7) pair.
    constexpr double kOrder = 8.0;
    constexpr double kAlpha = 0.7 / kOrder;
    constexpr double kBeta = 0.4 / kOrder;
    constexpr double kSafety = 0.9;
    double err_prev = 1.0;

    long steps = 0;
    while (t < tof) {
        if (steps++ >= cfg.max_steps)
            throw PropagationError("propagate: step budget exhausted", t);
        dt = std::min(dt, tof - t);
        stepper.do_step(sys, x, t, x_new, dt, xerr);

        double err = 0.0;
        for (int i = 0; i < 6; ++i) {
            const double scale =
                cfg.abs_tol + cfg.rel_tol * std::max(std::abs(x[i]), std::abs(x_new[i]));
            const double e = xerr[i] / scale;
            err += e * e;
        }
        err = std::sqrt(err / 6.0);

        if (!std::isfinite(err)) {
            dt *= 0.1;
            if (!(dt > 0.0)) throw PropagationError("propagate: step size underflow", t);
            continue;
        }
        if (err <= 1.0) {
            t += dt;
            x = x_new;
            const double fac = kSafety * std::pow(std::max(err, 1e-16), -kAlpha) *
                               std::pow(err_prev, kBeta);
            dt *= std::clamp(fac, 0.2, 5.0);
            err_prev = std::max(err, 1e-16);
        } else {
            dt *= std::clamp(kSafety * std::pow(err, -1.0 / kOrder), 0.1, 1.0);
        }
        if (!(dt > 1e-14 * std::max(1.0, tof)))
            throw PropagationError("propagate: step size underflow", t);
    }

    StateCartesian out;
    out.position = Vec3(x[0], x[1], x[2]);
    out.velocity = Vec3(x[3], x[4], x[5]);
    return out;
}

double orbital_period(double a, double mu) {
    if (!(a > 0.0)) throw std::domain_error("orbital_period: a must be > 0");
    if (!(mu > 0.0)) throw std::domain_error("orbital_period: mu must be > 0");
    return kTwoPi * std::sqrt(a * a * a / mu);
}

double wrap_two_pi(double angle) {
    double w = std::fmod(angle, kTwoPi);
    if (w < 0.0) w += kTwoPi;
    return w;
}

SphericalVector cart_to_spherical(const Vec3& v) {
    const double m = v.norm();
    if (m == 0.0) return {0.0, 0.0, 0.0};
    double az = std::atan2(v.y(), v.x());
    if (v.y() == 0.0 && v.x() == 0.0) az = 0.0; // pole convention
    return {m, wrap_two_pi(az), std::asin(std::clamp(v.z() / m, -1.0, 1.0))};
}

Vec3 spherical_to_cart(const SphericalVector& s) {
    const double ce = std::cos(s.elevation);
    return {s.magnitude * ce * std::cos(s.azimuth), s.magnitude * ce * std::sin(s.azimuth),
            s.magnitude * std::sin(s.elevation)};
}

StateCartesian elements_to_state(const OrbitalElements& oe, double mu) {
    if (!(oe.a > 0.0)) throw std::domain_error("elements_to_state: a must be > 0");
    if (!(oe.e >= 0.0 && oe.e < 1.0))
        throw std::domain_error("elements_to_state: only closed orbits (0 <= e < 1) supported");

    // Kepler's equation, Newton iteration.
    const double M = oe.mean_anomaly;
    double E = (oe.e < 0.8) ? M : std::numbers::pi;
    for (int it = 0; it < 64; ++it) {
        const double f = E - oe.e * std::sin(E) - M;
        const double d = 1.0 - oe.e * std::cos(E);
        const double step = f / d;
        E -= step;
        if (std::abs(step) < 1e-15) break;
    }

    const double cosE = std::cos(E), sinE = std::sin(E);
    const double r = oe.a * (1.0 - oe.e * cosE);
    const double sqrt1me2 = std::sqrt(1.0 - oe.e * oe.e);
    // perifocal position/velocity
    const Vec3 r_pf(oe.a * (cosE - oe.e), oe.a * sqrt1me2 * sinE, 0.0);
    const double n = std::sqrt(mu / (oe.a * oe.a * oe.a));
    const Vec3 v_pf(-oe.a * n * sinE / (1.0 - oe.e * cosE),
                    oe.a * n * sqrt1me2 * cosE / (1.0 - oe.e * cosE), 0.0);

    const Eigen::AngleAxisd Rz_raan(oe.raan, Vec3::UnitZ());
    const Eigen::AngleAxisd Rx_i(oe.i, Vec3::UnitX());
    const Eigen::AngleAxisd Rz_argp(oe.argp, Vec3::UnitZ());
    const Eigen::Matrix3d rot = (Rz_raan * Rx_i * Rz_argp).toRotationMatrix();

    return {rot * r_pf, rot * v_pf};
}

OrbitalElements state_to_elements(const StateCartesian& state, double mu) {
    const Vec3& r = state.position;
    const Vec3& v = state.velocity;
    const double rn = r.norm();
    if (rn <= 0.0) throw std::domain_error("state_to_elements: zero-radius state");

    const Vec3 h = r.cross(v);
    const double hn = h.norm();
    if (hn <= 0.0) throw std::domain_error("state_to_elements: rectilinear state");

    const double energy = 0.5 * v.squaredNorm() - mu / rn;
    if (!(energy < 0.0))
        throw std::domain_error("state_to_elements: orbit is not closed (e >= 1)");
    const double a = -mu / (2.0 * energy);

    const Vec3 e_vec = v.cross(h) / mu - r / rn;
    double e = e_vec.norm();

    const double i = std::acos(std::clamp(h.z() / hn, -1.0, 1.0));
    const Vec3 node(-h.y(), h.x(), 0.0);
    const double nn = node.norm();

    constexpr double kDegenerate = 1e-11;
    const bool equatorial = nn < kDegenerate * hn;
    const bool circular = e < kDegenerate;
    if (circular) e = 0.0;

    double raan = equatorial ? 0.0 : wrap_two_pi(std::atan2(node.y(), node.x()));

    // Reference direction for the argument of periapsis: ascending node, or
    // x-axis for equatorial orbits (raan folded to 0 by convention).
    const Vec3 ref = equatorial ? Vec3::UnitX() : Vec3(node / nn);
    const Vec3 h_hat = h / hn;

    double argp = 0.0;
    double true_anom;
    if (circular) {
        // argp = 0; measure the anomaly from the reference direction.
        true_anom = std::atan2(ref.cross(r / rn).dot(h_hat), ref.dot(r / rn));
    } else {
        const Vec3 e_hat = e_vec / e;
        argp = wrap_two_pi(std::atan2(ref.cross(e_hat).dot(h_hat), ref.dot(e_hat)));
        true_anom = std::atan2(e_hat.cross(r / rn).dot(h_hat), e_hat.dot(r / rn));
    }

    // true anomaly -> eccentric -> mean
    const double E =
        std::atan2(std::sqrt(1.0 - e * e) * std::sin(true_anom), e + std::cos(true_anom));
    const double M = wrap_two_pi(E - e * std::sin(E));

    return {a, e, i, raan, argp, M};
}

BodyParams jupiter() { return {1.26686534e8, 71492.0, 0.014736}; }

std::map<std::string, BodyParams> load_body_catalog(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("load_body_catalog: cannot open " + path.string());
    std::map<std::string, BodyParams> catalog;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto first = line.find_first_not_of(" \t\r");
        if (first == std::string::npos || line[first] == '#') continue;
        std::istringstream ls(line);
        std::string name;
        BodyParams body{};
        if (!(ls >> name >> body.mu >> body.radius >> body.j2))
            throw std::runtime_error("load_body_catalog: malformed line " +
                                     std::to_string(lineno) + " in " + path.string());
        body.validate();
        catalog[name] = body;
    }
    return catalog;
}

} // namespace plam::astro
