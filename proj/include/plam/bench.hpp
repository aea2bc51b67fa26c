#pragma once

#include "plam/pipeline.hpp"

#include <iosfwd>
#include <span>

namespace plam::bench {

using astro::BodyParams;

struct BenchConfig {
    std::vector<int> rev_counts = {0, 1, 2, 3, 4, 5, 6, 7, 8, 9, 10};
    int samples_per_rev = 100;
    bool run_sn = true;  // cold-start shooting from the Keplerian velocity
    bool run_dnn = true; // network-corrected pipeline
    shooting::ShootingConfig shoot_cfg; // tol 0.001 km, max_iter 2000 for both methods
    samples::SampleRanges base_ranges = samples::SampleRanges::extended();
    BodyParams body = astro::jupiter();
    std::uint64_t seed = 0;

    void validate() const;
};

struct BenchRow {
    std::string method; // "SN" or "DNN"
    int revs = 0;
    int n = 0;
    int converged = 0;
    double ratio = 0.0;
    double mean_iters = 0.0;
    double mean_time_s = 0.0;
    double mean_err_km = 0.0;
};

struct BenchReport {
    std::vector<BenchRow> rows;
    std::uint64_t seed = 0;
    std::string note;
};

/// Per-rev convergence / iteration / timing study. Case seeds derive from
/// (seed, revs, index) in a stream disjoint from dataset generation, so the
/// benchmark never replays training samples.
BenchReport run_convergence_bench(const BenchConfig& cfg, const mlp::MlpModel* model);

/// Exact-angle transfers (pi or 2*pi between r0 and rf), constructed on a
/// random conic with the orbit normal passed as the plane hint.
BenchReport run_stress_bench(double angle, std::span<const int> rev_counts, int n,
                             std::uint64_t seed, const BodyParams& body,
                             const mlp::MlpModel* model,
                             const shooting::ShootingConfig& shoot_cfg = {});

/// One exact-angle benchmark case; exposed so tests can audit the geometry.
struct StressCase {
    pipeline::PerturbedLambertQuery query;
    astro::Vec3 plane_normal;
};
StressCase make_stress_case(double angle, int revs, std::uint64_t case_seed,
                            const BodyParams& body);

struct TotalCostRow {
    long batch = 0;           // number of solves amortizing the one-time cost
    double sn_total_s = 0.0;  // batch * sn_per_solve
    double dnn_total_s = 0.0; // one_time + batch * dnn_per_solve
    double one_time_fraction = 0.0; // one_time / dnn_total
};

struct TotalCostReport {
    double one_time_s = 0.0; // sample generation + training
    double sn_per_solve_s = 0.0;
    double dnn_per_solve_s = 0.0;
    double crossover = 0.0; // batch size where DNN total cost undercuts SN (inf if never)
    std::vector<TotalCostRow> rows;
};

/// Amortized-cost accounting over the given batch sizes; the measured inputs
/// come from a convergence-bench run plus the recorded one-time cost.
TotalCostReport run_total_cost_bench(std::span<const long> batch_sizes, double one_time_s,
                                     double sn_per_solve_s, double dnn_per_solve_s);

void write_bench_csv(const BenchReport& report, std::ostream& out);
BenchReport read_bench_csv(std::istream& in);

void write_total_cost_csv(const TotalCostReport& report, std::ostream& out);

} // namespace plam::bench
