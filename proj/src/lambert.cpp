#include "plam/lambert.hpp"

#include <cmath>
#include <numbers>

namespace plam::lambert {

namespace {

constexpr double kPi = std::numbers::pi;

// Nondimensional time of flight T(x) of the Lancaster-Blanchard formulation,
// with the Battin series near the parabolic point x = 1.
double hypergeometric_f(double z, double tol) {
    double sj = 1.0, cj = 1.0;
    for (int j = 0; j < 256; ++j) {
        const double cj1 = cj * (3.0 + j) * (1.0 + j) / (2.5 + j) * z / (j + 1.0);
        sj += cj1;
        cj = cj1;
        if (std::abs(cj1) < tol) break;
    }
    return sj;
}

double tof_lagrange(double x, int n, double lambda) {
    const double a = 1.0 / (1.0 - x * x);
    if (a > 0.0) {
        const double alfa = 2.0 * std::acos(x);
        double beta = 2.0 * std::asin(std::sqrt(lambda * lambda / a));
        if (lambda < 0.0) beta = -beta;
        return a * std::sqrt(a) *
               ((alfa - std::sin(alfa)) - (beta - std::sin(beta)) + 2.0 * kPi * n) / 2.0;
    }
    const double alfa = 2.0 * std::acosh(x);
    double beta = 2.0 * std::asinh(std::sqrt(-lambda * lambda / a));
    if (lambda < 0.0) beta = -beta;
    return -a * std::sqrt(-a) * ((beta - std::sinh(beta)) - (alfa - std::sinh(alfa))) / 2.0;
}

double x2tof(double x, int n, double lambda) {
    constexpr double kBattin = 0.01;
    constexpr double kLagrange = 0.2;
    const double dist = std::abs(x - 1.0);
    if (dist < kLagrange && dist > kBattin) return tof_lagrange(x, n, lambda);

    const double k = lambda * lambda;
    const double big_e = x * x - 1.0;
    const double rho = std::abs(big_e);
    const double z = std::sqrt(1.0 + k * big_e);
    if (dist < kBattin) {
        const double eta = z - lambda * x;
        const double s1 = 0.5 * (1.0 - lambda - x * eta);
        const double q = 4.0 / 3.0 * hypergeometric_f(s1, 1e-11);
        return (eta * eta * eta * q + 4.0 * lambda * eta) / 2.0 +
               n * kPi / std::pow(rho, 1.5);
    }
    const double y = std::sqrt(rho);
    const double g = x * z - lambda * big_e;
    double d;
    if (big_e < 0.0) {
        d = n * kPi + std::acos(g);
    } else {
        d = std::log(y * (z - lambda * x) + g);
    }
    return (x - lambda * z - d / y) / big_e;
}

void dtdx(double& dt, double& ddt, double& dddt, double x, double t, double lambda) {
    const double l2 = lambda * lambda;
    const double l3 = l2 * lambda;
    const double umx2 = 1.0 - x * x;
    const double y = std::sqrt(1.0 - l2 * umx2);
    const double y3 = y * y * y;
    const double y5 = y3 * y * y;
    dt = (3.0 * t * x - 2.0 + 2.0 * l3 * x / y) / umx2;
    ddt = (3.0 * t + 5.0 * x * dt + 2.0 * (1.0 - l2) * l3 / y3) / umx2;
    dddt = (7.0 * x * ddt + 8.0 * dt - 6.0 * (1.0 - l2) * l2 * l3 * x / y5) / umx2;
}

double householder(double t_target, double x0, int n, double lambda, double eps,
                   int iter_max) {
    for (int it = 0; it < iter_max; ++it) {
        const double tof = x2tof(x0, n, lambda);
        double dt, ddt, dddt;
        dtdx(dt, ddt, dddt, x0, tof, lambda);
        const double delta = tof - t_target;
        const double dt2 = dt * dt;
        const double xnew = x0 - delta * (dt2 - delta * ddt / 2.0) /
                                     (dt * (dt2 - delta * ddt) + dddt * delta * delta / 6.0);
        const double err = std::abs(x0 - xnew);
        x0 = xnew;
        if (err < eps) break;
    }
    return x0;
}

} // namespace

double min_rev_time(double lambda, int revs) {
    // Halley iteration on dT/dx = 0 from x = 0.
    double x_old = 0.0;
    double t_min = x2tof(0.0, revs, lambda);
    for (int it = 0; it < 16; ++it) {
        double dt, ddt, dddt;
        dtdx(dt, ddt, dddt, x_old, t_min, lambda);
        if (dt == 0.0) break;
        const double x_new = x_old - dt * ddt / (ddt * ddt - dt * dddt / 2.0);
        const double err = std::abs(x_old - x_new);
        t_min = x2tof(x_new, revs, lambda);
        x_old = x_new;
        if (err < 1e-13) break;
    }
    return t_min;
}

std::vector<LambertSolution> solve_kepler_lambert(const LambertQuery& q) {
    if (!(q.tof > 0.0)) throw std::domain_error("lambert: tof must be > 0");
    if (!(q.mu > 0.0)) throw std::domain_error("lambert: mu must be > 0");
    if (q.revs < 0) throw std::domain_error("lambert: revs must be >= 0");
    const double r1 = q.r0.norm();
    const double r2 = q.rf.norm();
    if (!(r1 > 0.0) || !(r2 > 0.0)) throw std::domain_error("lambert: zero-radius endpoint");

    const Vec3 ir1 = q.r0 / r1;
    const Vec3 ir2 = q.rf / r2;
    const Vec3 h_raw = ir1.cross(ir2);
    const double sin_theta = h_raw.norm();

    if (sin_theta < 1e-6) {
        // Collinear endpoints: the transfer plane is undetermined.
        if (!q.plane_hint)
            throw AmbiguousPlaneError(
                "lambert: r0 and rf are collinear; a plane_hint is required");
        const Vec3 h_hat = q.plane_hint->normalized();
        if (ir1.dot(ir2) > 0.0) {
            // Full-revolution geometry (transfer angle 0 mod 2pi). A conic
            // returning to the same angular position must return to the same
            // radius, so only equal radii admit a solution: the family of
            // orbits with period tof/revs through r0. The apsis member
            // (flight-path angle zero) is returned as the representative.
            if (std::abs(r1 - r2) > 1e-9 * r1)
                throw NoSolutionError(
                    "lambert: full-revolution transfer between unequal radii has no conic "
                    "solution");
            if (q.revs < 1)
                throw NoSolutionError(
                    "lambert: zero transfer angle with revs = 0 is degenerate");
            const double period = q.tof / q.revs;
            const double a = std::cbrt(q.mu * period * period / (4.0 * kPi * kPi));
            if (!(2.0 * a > r1))
                throw NoSolutionError("lambert: tof too short to reach the given radius");
            const double speed = std::sqrt(q.mu * (2.0 / r1 - 1.0 / a));
            const Vec3 v = speed * h_hat.cross(ir1).normalized();
            return {{v, v, q.revs, Branch::low_path}};
        }
        // Transfer angle pi: chord and lambda are well defined; only the
        // plane orientation comes from the hint. Fall through with that plane.
    }

    Vec3 h_hat;
    if (sin_theta < 1e-6) {
        h_hat = q.plane_hint->normalized();
    } else {
        h_hat = h_raw / sin_theta;
        if (q.plane_hint) {
            if (h_hat.dot(*q.plane_hint) < 0.0) h_hat = -h_hat;
        } else if (h_hat.z() < 0.0) {
            h_hat = -h_hat; // prograde default
        }
    }

    const Vec3 chord = q.rf - q.r0;
    const double c = chord.norm();
    const double s = 0.5 * (r1 + r2 + c);
    const double lambda2 = std::max(1.0 - c / s, 0.0);
    const double sin_signed = h_raw.dot(h_hat);
    const double lambda = (sin_signed >= 0.0) ? std::sqrt(lambda2) : -std::sqrt(lambda2);

    const Vec3 it1 = h_hat.cross(ir1);
    const Vec3 it2 = h_hat.cross(ir2);

    const double t_nd = std::sqrt(2.0 * q.mu / (s * s * s)) * q.tof;

    std::vector<std::pair<double, Branch>> roots;
    const double l3 = lambda * lambda2;
    if (q.revs == 0) {
        const double t00 = std::acos(lambda) + lambda * std::sqrt(1.0 - lambda2);
        const double t1 = 2.0 / 3.0 * (1.0 - l3);
        double x0;
        if (t_nd >= t00) {
            x0 = -(t_nd - t00) / (t_nd - t00 + 4.0);
        } else if (t_nd <= t1) {
            x0 = t1 * (t1 - t_nd) / (2.0 / 5.0 * (1.0 - lambda2 * l3) * t_nd) + 1.0;
        } else {
            x0 = std::pow(t_nd / t00, std::log(2.0) / std::log(t1 / t00)) - 1.0;
        }
        roots.emplace_back(householder(t_nd, x0, 0, lambda, 1e-13, 32), Branch::low_path);
    } else {
        const double t_min = min_rev_time(lambda, q.revs);
        if (t_nd < t_min)
            throw NoSolutionError("lambert: tof below the minimum time for " +
                                  std::to_string(q.revs) + " revolutions");
        double tmp = std::pow((q.revs * kPi + kPi) / (8.0 * t_nd), 2.0 / 3.0);
        const double x0_left = (tmp - 1.0) / (tmp + 1.0);
        tmp = std::pow(8.0 * t_nd / (q.revs * kPi), 2.0 / 3.0);
        const double x0_right = (tmp - 1.0) / (tmp + 1.0);

        if (!q.branch || *q.branch == Branch::high_path)
            roots.emplace_back(householder(t_nd, x0_left, q.revs, lambda, 1e-13, 32),
                               Branch::high_path);
        if (!q.branch || *q.branch == Branch::low_path)
            roots.emplace_back(householder(t_nd, x0_right, q.revs, lambda, 1e-13, 32),
                               Branch::low_path);
    }

    const double gamma = std::sqrt(q.mu * s / 2.0);
    const double rho = (c > 0.0) ? (r1 - r2) / c : 0.0;
    const double sigma = std::sqrt(std::max(1.0 - rho * rho, 0.0));

    std::vector<LambertSolution> out;
    out.reserve(roots.size());
    for (const auto& [x, branch] : roots) {
        const double y = std::sqrt(1.0 - lambda2 + lambda2 * x * x);
        const double vr1 = gamma * ((lambda * y - x) - rho * (lambda * y + x)) / r1;
        const double vr2 = -gamma * ((lambda * y - x) + rho * (lambda * y + x)) / r2;
        const double vt = gamma * sigma * (y + lambda * x);
        LambertSolution sol;
        sol.v0 = vr1 * ir1 + (vt / r1) * it1;
        sol.vf = vr2 * ir2 + (vt / r2) * it2;
        sol.revs = q.revs;
        sol.branch = branch;
        out.push_back(sol);
    }
    return out;
}

} // namespace plam::lambert
