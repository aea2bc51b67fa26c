#include "plam/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <vector>

namespace plam::pipeline {

namespace {

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

} // namespace

Vec3 predict_correction(const mlp::MlpModel& model, const Vec3& r0, const Vec3& v_d,
                        const Vec3& delta_rf, double tof, const BodyParams& body) {
    if (model.input_dim() != 10 || model.output_dim() != 3)
        throw std::invalid_argument(
            "predict_correction: model is not a dv2-Sph network (expects 10 inputs, 3 outputs)");
    const Eigen::VectorXd in = samples::dv2_sph_input(r0, v_d, delta_rf, tof, body);
    const Eigen::VectorXd out = model.forward(in);
    return astro::spherical_to_cart({out[0], out[1], out[2]});
}

PipelineResult solve_perturbed_lambert(const PerturbedLambertQuery& q,
                                       const mlp::MlpModel* model,
                                       const shooting::ShootingConfig& shoot_cfg) {
    using clock = std::chrono::steady_clock;
    PipelineResult res;

    auto t0 = clock::now();
    lambert::LambertQuery lq;
    lq.r0 = q.r0;
    lq.rf = q.rf;
    lq.tof = q.tof;
    lq.mu = q.body.mu;
    lq.revs = q.revs;
    lq.plane_hint = q.plane_hint;
    const auto candidates = lambert::solve_kepler_lambert(lq);
    res.timings.lambert_s = seconds_since(t0);

    // Guess stage: propagate every Lambert branch once and rank them by
    // Keplerian terminal error.
    struct BranchGuess {
        Vec3 v_d;
        Vec3 drf;
        double err;
    };
    std::vector<BranchGuess> branches;
    for (const auto& cand : candidates) {
        t0 = clock::now();
        try {
            const Vec3 rfd =
                astro::propagate({q.r0, cand.v0}, q.tof, q.body, shoot_cfg.propagator)
                    .position;
            ++res.igg_propagations;
            branches.push_back({cand.v0, q.rf - rfd, (q.rf - rfd).norm()});
        } catch (const astro::PropagationError&) {
        }
        res.timings.igg_propagation_s += seconds_since(t0);
    }
    if (branches.empty())
        throw astro::PropagationError(
            "solve_perturbed_lambert: no Lambert branch could be propagated", 0.0);
    std::stable_sort(branches.begin(), branches.end(),
                     [](const BranchGuess& a, const BranchGuess& b) { return a.err < b.err; });

    // Attempt ladder: corrected guesses first (the correction stage output is
    // the pipeline's initial guess), then the plain Keplerian guesses as a
    // fallback. The first converged attempt wins; iteration and propagation
    // counts accumulate over attempts so failed ones stay on the bill.
    struct Attempt {
        Vec3 guess;
        Vec3 v_d;
        Vec3 correction;
        double igg_err;
    };
    std::vector<Attempt> ladder;
    if (model != nullptr) {
        for (const auto& b : branches) {
            t0 = clock::now();
            try {
                const Vec3 corr = predict_correction(*model, q.r0, b.v_d, b.drf, q.tof, q.body);
                ladder.push_back({b.v_d + corr, b.v_d, corr, b.err});
            } catch (const std::domain_error&) {
                // Degenerate input (e.g. an exactly zero terminal error); the
                // Keplerian guess for this branch is still on the ladder.
            }
            res.timings.dnn_s += seconds_since(t0);
        }
    }
    for (const auto& b : branches) ladder.push_back({b.v_d, b.v_d, Vec3::Zero(), b.err});

    long iters_total = 0, props_total = 0;
    bool have_best = false;
    shooting::ShootingResult best;
    for (const auto& attempt : ladder) {
        t0 = clock::now();
        shooting::ShootingResult sres;
        bool usable = true;
        try {
            sres = shooting::shoot(q.r0, attempt.guess, q.rf, q.tof, q.body, shoot_cfg);
        } catch (const shooting::SingularJacobianError&) {
            usable = false;
        }
        res.timings.shooting_s += seconds_since(t0);
        if (!usable) continue;
        iters_total += sres.iterations;
        props_total += sres.propagations;
        if (!have_best || sres.terminal_error < best.terminal_error) {
            have_best = true;
            best = sres;
            res.v_d = attempt.v_d;
            res.dnn_correction = attempt.correction;
            res.guess_terminal_error = attempt.igg_err;
        }
        if (sres.converged) break;
    }
    if (!have_best)
        throw shooting::SingularJacobianError(
            "solve_perturbed_lambert: every shooting attempt hit a singular Jacobian");
    res.shooting = best;
    res.shooting.iterations = iters_total;
    res.shooting.propagations = props_total;
    return res;
}

} // namespace plam::pipeline
