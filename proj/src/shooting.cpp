#include "plam/shooting.hpp"

#include <cmath>
#include <limits>

namespace plam::shooting {

Eigen::Matrix3d finite_diff_jacobian(const Vec3& r0, const Vec3& v, double tof,
                                     const BodyParams& body, double dv_step,
                                     const PropagatorConfig& cfg,
                                     const std::optional<Vec3>& rf_nominal) {
    if (!(dv_step > 0.0)) throw std::domain_error("finite_diff_jacobian: dv_step must be > 0");
    const Vec3 rf0 =
        rf_nominal ? *rf_nominal : astro::propagate({r0, v}, tof, body, cfg).position;
    Eigen::Matrix3d jac;
    for (int j = 0; j < 3; ++j) {
        Vec3 vp = v;
        vp[j] += dv_step;
        const Vec3 rfj = astro::propagate({r0, vp}, tof, body, cfg).position;
        jac.col(j) = (rfj - rf0) / dv_step;
    }
    return jac;
}

ShootingResult shoot(const Vec3& r0, const Vec3& v_init, const Vec3& rf_target, double tof,
                     const BodyParams& body, const ShootingConfig& cfg) {
    if (!(cfg.tol > 0.0)) throw std::domain_error("shoot: tol must be > 0");
    if (cfg.max_iter < 0) throw std::domain_error("shoot: max_iter must be >= 0");
    if (!v_init.allFinite()) throw std::domain_error("shoot: v_init must be finite");

    ShootingResult res;
    res.v0 = v_init;

    Vec3 v = v_init;
    Vec3 rf_nom;
    try {
        rf_nom = astro::propagate({r0, v}, tof, body, cfg.propagator).position;
        ++res.propagations;
    } catch (const astro::PropagationError&) {
        res.terminal_error = std::numeric_limits<double>::infinity();
        return res;
    }

    double err = (rf_target - rf_nom).norm();
    res.terminal_error = err;
    if (err <= cfg.tol) {
        res.converged = true;
        return res;
    }

    for (int i = 1; i <= cfg.max_iter; ++i) {
        Eigen::Matrix3d jac;
        Vec3 rf_new;
        try {
            jac = finite_diff_jacobian(r0, v, tof, body, cfg.dv_step, cfg.propagator, rf_nom);
            res.propagations += 3;

            const Eigen::PartialPivLU<Eigen::Matrix3d> lu(jac);
            const Eigen::Vector3d udiag = lu.matrixLU().diagonal().cwiseAbs();
            const double dmax = udiag.maxCoeff();
            const double dmin = udiag.minCoeff();
            if (!(dmin > 0.0) || dmax / dmin > 1e14)
                throw SingularJacobianError("shoot: Jacobian is singular or ill-conditioned");

            Vec3 dv = lu.solve(rf_target - rf_nom);
            if (cfg.step_limit && dv.norm() > *cfg.step_limit)
                dv *= *cfg.step_limit / dv.norm();

            // Damped Newton: take the full step when it reduces the terminal
            // error, otherwise halve it until it does. Steps that leave the
            // propagatable regime just consume a halving.
            bool accepted = false;
            double scale = 1.0;
            for (int back = 0; back < 30 && !accepted; ++back, scale *= 0.5) {
                const Vec3 v_try = v + scale * dv;
                ++res.propagations;
                try {
                    const Vec3 rf_try =
                        astro::propagate({r0, v_try}, tof, body, cfg.propagator).position;
                    if ((rf_target - rf_try).norm() < err) {
                        v = v_try;
                        rf_new = rf_try;
                        accepted = true;
                    }
                } catch (const astro::PropagationError&) {
                }
            }
            if (!accepted) {
                // No damping of this direction reduces the error: stalled at a
                // local minimum; report the best iterate.
                res.iterations = i;
                return res;
            }
        } catch (const astro::PropagationError&) {
            // The Jacobian stencil itself left the propagatable regime.
            res.iterations = i;
            return res;
        }

        res.iterations = i;
        err = (rf_target - rf_new).norm();
        rf_nom = rf_new;
        if (err < res.terminal_error) {
            res.terminal_error = err;
            res.v0 = v;
        }
        if (err <= cfg.tol) {
            res.converged = true;
            return res;
        }
        if (!v.allFinite()) return res;
    }
    return res;
}

} // namespace plam::shooting
