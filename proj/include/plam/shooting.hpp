#pragma once

#include "plam/astro.hpp"

#include <optional>

namespace plam::shooting {

using astro::BodyParams;
using astro::PropagatorConfig;
using astro::Vec3;

struct ShootingConfig {
    double tol = 0.001;      // terminal position tolerance (km)
    int max_iter = 2000;
    double dv_step = 1e-6;   // finite-difference step (km/s)
    std::optional<double> step_limit; // max |dv| per iteration (km/s); off by default
    PropagatorConfig propagator{};
};

struct ShootingResult {
    Vec3 v0;              // best initial velocity found (km/s)
    bool converged = false;
    int iterations = 0;
    double terminal_error = 0.0; // km, for the reported v0
    long propagations = 0;       // dynamics integrations performed
};

class SingularJacobianError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Forward-difference Jacobian d(r_f)/d(v0): one nominal and three perturbed
/// propagations. The nominal terminal position may be supplied to avoid
/// re-propagating it.
Eigen::Matrix3d finite_diff_jacobian(const Vec3& r0, const Vec3& v, double tof,
                                     const BodyParams& body, double dv_step,
                                     const PropagatorConfig& cfg = {},
                                     const std::optional<Vec3>& rf_nominal = std::nullopt);

/// Newton shooting on the initial velocity until the propagated terminal
/// position is within cfg.tol of rf_target. Iteration-budget exhaustion is a
/// non-converged result, not an error; the best iterate seen is reported.
ShootingResult shoot(const Vec3& r0, const Vec3& v_init, const Vec3& rf_target, double tof,
                     const BodyParams& body, const ShootingConfig& cfg = {});

} // namespace plam::shooting
