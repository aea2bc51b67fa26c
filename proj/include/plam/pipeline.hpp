#pragma once

#include "plam/mlp.hpp"
#include "plam/samples.hpp"
#include "plam/shooting.hpp"

namespace plam::pipeline {

using astro::BodyParams;
using astro::Vec3;

struct PerturbedLambertQuery {
    Vec3 r0;     // km
    Vec3 rf;     // km
    double tof;  // s
    int revs = 0;
    std::optional<Vec3> plane_hint;
    BodyParams body;
};

struct StageTimings {
    double lambert_s = 0.0;
    double igg_propagation_s = 0.0;
    double dnn_s = 0.0;
    double shooting_s = 0.0;
};

struct PipelineResult {
    shooting::ShootingResult shooting;
    Vec3 v_d;            // Keplerian Lambert initial velocity of the chosen branch
    Vec3 dnn_correction; // predicted dv0 (zero in cold-start mode)
    double guess_terminal_error = 0.0; // |drf| of v_d + correction before shooting (km)
    long igg_propagations = 0;
    StageTimings timings;

    long total_propagations() const { return igg_propagations + shooting.propagations; }
};

/// Build the dv2-Sph input for (r0, v_d, drf, tof), run the network, and map
/// the spherical output back to a Cartesian velocity correction.
Vec3 predict_correction(const mlp::MlpModel& model, const Vec3& r0, const Vec3& v_d,
                        const Vec3& delta_rf, double tof, const BodyParams& body);

/// Full solver: Keplerian Lambert guess, J2 propagation of the guess, network
/// correction, then Newton shooting. `model == nullptr` selects cold-start
/// mode (no correction), which reduces the pipeline to plain shooting from
/// the Keplerian velocity.
PipelineResult solve_perturbed_lambert(const PerturbedLambertQuery& q,
                                       const mlp::MlpModel* model,
                                       const shooting::ShootingConfig& shoot_cfg = {});

} // namespace plam::pipeline
