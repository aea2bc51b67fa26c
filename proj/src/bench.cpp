#include "plam/bench.hpp"

#include "plam/rng.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <cmath>
#include <istream>
#include <limits>
#include <numbers>
#include <ostream>
#include <sstream>

namespace plam::bench {

namespace {

// Stream tag keeping benchmark case seeds disjoint from dataset index streams.
constexpr std::uint64_t kBenchStreamTag = 0x42454e4348ULL;

struct CaseOutcome {
    bool converged = false;
    long iterations = 0;
    double time_s = 0.0;
    double err_km = std::numeric_limits<double>::quiet_NaN();
};

CaseOutcome run_case(const pipeline::PerturbedLambertQuery& q, const mlp::MlpModel* model,
                     const shooting::ShootingConfig& shoot_cfg) {
    CaseOutcome out;
    const auto t0 = std::chrono::steady_clock::now();
    try {
        const auto res = pipeline::solve_perturbed_lambert(q, model, shoot_cfg);
        out.converged = res.shooting.converged;
        out.iterations = res.shooting.iterations;
        out.err_km = res.shooting.terminal_error;
    } catch (const std::exception&) {
        // Counted as a failed case at the full iteration budget.
        out.iterations = shoot_cfg.max_iter;
    }
    out.time_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return out;
}

BenchRow aggregate(std::string method, int revs, const std::vector<CaseOutcome>& cases) {
    BenchRow row;
    row.method = std::move(method);
    row.revs = revs;
    row.n = static_cast<int>(cases.size());
    double iters = 0.0, time_s = 0.0, err = 0.0;
    int err_n = 0;
    for (const auto& c : cases) {
        if (c.converged) ++row.converged;
        iters += static_cast<double>(c.iterations);
        time_s += c.time_s;
        if (std::isfinite(c.err_km)) {
            err += c.err_km;
            ++err_n;
        }
    }
    const double n = std::max(1, row.n);
    row.ratio = row.converged / n;
    row.mean_iters = iters / n;
    row.mean_time_s = time_s / n;
    row.mean_err_km = err_n > 0 ? err / err_n : std::numeric_limits<double>::quiet_NaN();
    return row;
}

} // namespace

void BenchConfig::validate() const {
    if (samples_per_rev < 1)
        throw std::invalid_argument("BenchConfig: samples_per_rev must be >= 1");
    if (rev_counts.empty()) throw std::invalid_argument("BenchConfig: rev_counts is empty");
    for (int k : rev_counts)
        if (k < 0) throw std::invalid_argument("BenchConfig: rev counts must be >= 0");
    body.validate();
}

BenchReport run_convergence_bench(const BenchConfig& cfg, const mlp::MlpModel* model) {
    cfg.validate();
    if (cfg.run_dnn && model == nullptr)
        throw std::invalid_argument("run_convergence_bench: DNN method requested without a model");

    BenchReport report;
    report.seed = cfg.seed;
    report.note = "convergence bench, fresh per-rev sample streams";

    for (int revs : cfg.rev_counts) {
        const auto ranges = samples::SampleRanges::for_revs(revs, cfg.base_ranges);
        std::vector<CaseOutcome> sn_cases, dnn_cases;
        for (int i = 0; i < cfg.samples_per_rev; ++i) {
            const std::uint64_t case_seed = rng::mix(
                cfg.seed, rng::mix(kBenchStreamTag + static_cast<std::uint64_t>(revs),
                                   static_cast<std::uint64_t>(i)));
            const auto rec =
                samples::generate_sample(case_seed, ranges, cfg.body, cfg.shoot_cfg.propagator);

            pipeline::PerturbedLambertQuery q;
            q.r0 = rec.r0;
            q.rf = rec.rf;
            q.tof = rec.tof;
            q.revs = rec.revs;
            q.plane_hint = rec.r0.cross(rec.v0).normalized();
            q.body = cfg.body;

            if (cfg.run_sn) sn_cases.push_back(run_case(q, nullptr, cfg.shoot_cfg));
            if (cfg.run_dnn) dnn_cases.push_back(run_case(q, model, cfg.shoot_cfg));
        }
        if (cfg.run_sn) report.rows.push_back(aggregate("SN", revs, sn_cases));
        if (cfg.run_dnn) report.rows.push_back(aggregate("DNN", revs, dnn_cases));
    }
    return report;
}

StressCase make_stress_case(double angle, int revs, std::uint64_t case_seed,
                            const BodyParams& body) {
    using std::numbers::pi;
    rng::Stream stream(case_seed);
    const double rp = stream.uniform(5.0, 30.0) * body.radius;
    const double ra = stream.uniform(rp, 30.0 * body.radius);
    const double a = 0.5 * (rp + ra);
    const double e = (ra - rp) / (ra + rp);
    const double incl = stream.uniform(0.0, pi);
    const double raan = stream.uniform(0.0, 2.0 * pi);
    const double argp = stream.uniform(0.0, 2.0 * pi);
    const double nu0 = stream.uniform(0.0, 2.0 * pi);

    // Perifocal basis of the generating conic.
    const double cO = std::cos(raan), sO = std::sin(raan);
    const double ci = std::cos(incl), si = std::sin(incl);
    const double cw = std::cos(argp), sw = std::sin(argp);
    const astro::Vec3 p_hat(cO * cw - sO * sw * ci, sO * cw + cO * sw * ci, sw * si);
    const astro::Vec3 q_hat(-cO * sw - sO * cw * ci, -sO * sw + cO * cw * ci, cw * si);
    const astro::Vec3 h_hat = p_hat.cross(q_hat);

    const double p = a * (1.0 - e * e);
    const auto radius_at = [&](double nu) { return p / (1.0 + e * std::cos(nu)); };
    const auto position_at = [&](double nu) -> astro::Vec3 {
        return radius_at(nu) * (std::cos(nu) * p_hat + std::sin(nu) * q_hat);
    };
    // Mean anomaly at true anomaly nu >= 0, continuous in nu (no wrap).
    const auto mean_anomaly_at = [&](double nu) {
        const double nu_w = astro::wrap_two_pi(nu);
        double ecc_anom =
            2.0 * std::atan2(std::sqrt(1.0 - e) * std::sin(0.5 * nu_w),
                             std::sqrt(1.0 + e) * std::cos(0.5 * nu_w));
        if (ecc_anom < 0.0) ecc_anom += 2.0 * pi; // keep E in [0, 2pi) like nu_w
        const double m = ecc_anom - e * std::sin(ecc_anom);
        // Restore the whole turns stripped by the wrap.
        return m + 2.0 * pi * std::floor(nu / (2.0 * pi));
    };

    const double period = astro::orbital_period(a, body.mu);
    const bool full_turn = std::abs(angle - 2.0 * pi) < 1e-9;

    StressCase sc;
    sc.plane_normal = h_hat;
    sc.query.r0 = position_at(nu0);
    sc.query.plane_hint = h_hat;
    sc.query.body = body;
    if (full_turn) {
        sc.query.rf = sc.query.r0;
        sc.query.tof = static_cast<double>(revs + 1) * period;
        sc.query.revs = revs + 1;
    } else {
        const double nu1 = nu0 + angle;
        sc.query.rf = position_at(nu1);
        const double dm = mean_anomaly_at(nu1) - mean_anomaly_at(nu0);
        sc.query.tof = dm / (2.0 * pi) * period + static_cast<double>(revs) * period;
        sc.query.revs = revs;
    }
    return sc;
}

BenchReport run_stress_bench(double angle, std::span<const int> rev_counts, int n,
                             std::uint64_t seed, const BodyParams& body,
                             const mlp::MlpModel* model,
                             const shooting::ShootingConfig& shoot_cfg) {
    if (n < 1) throw std::invalid_argument("run_stress_bench: n must be >= 1");
    BenchReport report;
    report.seed = seed;
    {
        std::ostringstream note;
        note << "stress bench, transfer angle " << angle * 180.0 / std::numbers::pi << " deg";
        report.note = note.str();
    }
    const auto angle_tag = static_cast<std::uint64_t>(std::llround(angle * 1e6));
    for (int revs : rev_counts) {
        std::vector<CaseOutcome> cases;
        for (int i = 0; i < n; ++i) {
            const std::uint64_t case_seed =
                rng::mix(seed, rng::mix(angle_tag + static_cast<std::uint64_t>(revs),
                                        static_cast<std::uint64_t>(i)));
            const auto sc = make_stress_case(angle, revs, case_seed, body);
            cases.push_back(run_case(sc.query, model, shoot_cfg));
        }
        report.rows.push_back(aggregate(model != nullptr ? "DNN" : "SN", revs, cases));
    }
    return report;
}

TotalCostReport run_total_cost_bench(std::span<const long> batch_sizes, double one_time_s,
                                     double sn_per_solve_s, double dnn_per_solve_s) {
    if (!(one_time_s >= 0.0) || !(sn_per_solve_s >= 0.0) || !(dnn_per_solve_s >= 0.0))
        throw std::invalid_argument("run_total_cost_bench: costs must be non-negative");
    TotalCostReport report;
    report.one_time_s = one_time_s;
    report.sn_per_solve_s = sn_per_solve_s;
    report.dnn_per_solve_s = dnn_per_solve_s;
    report.crossover = sn_per_solve_s > dnn_per_solve_s
                           ? one_time_s / (sn_per_solve_s - dnn_per_solve_s)
                           : std::numeric_limits<double>::infinity();
    for (long m : batch_sizes) {
        if (m < 1) throw std::invalid_argument("run_total_cost_bench: batch sizes must be >= 1");
        TotalCostRow row;
        row.batch = m;
        row.sn_total_s = static_cast<double>(m) * sn_per_solve_s;
        row.dnn_total_s = one_time_s + static_cast<double>(m) * dnn_per_solve_s;
        row.one_time_fraction = row.dnn_total_s > 0.0 ? one_time_s / row.dnn_total_s : 0.0;
        report.rows.push_back(row);
    }
    return report;
}

void write_bench_csv(const BenchReport& report, std::ostream& out) {
    out << "# seed=" << report.seed << "\n";
    out << "# note=" << report.note << "\n";
    out << "method,revs,n,converged,ratio,mean_iters,mean_time_s,mean_err_km\n";
    char buf[64];
    const auto fmt = [&](double v) {
        std::snprintf(buf, sizeof buf, "%.17g", v);
        return std::string(buf);
    };
    for (const auto& r : report.rows)
        out << r.method << ',' << r.revs << ',' << r.n << ',' << r.converged << ','
            << fmt(r.ratio) << ',' << fmt(r.mean_iters) << ',' << fmt(r.mean_time_s) << ','
            << fmt(r.mean_err_km) << "\n";
}

BenchReport read_bench_csv(std::istream& in) {
    BenchReport report;
    std::string line;
    bool header_seen = false;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        if (line.rfind("# seed=", 0) == 0) {
            report.seed = std::stoull(line.substr(7));
            continue;
        }
        if (line.rfind("# note=", 0) == 0) {
            report.note = line.substr(7);
            continue;
        }
        if (line[0] == '#') continue;
        if (!header_seen) {
            if (line.rfind("method,", 0) != 0)
                throw std::runtime_error("read_bench_csv: missing header line");
            header_seen = true;
            continue;
        }
        std::istringstream fields(line);
        std::string tok;
        BenchRow row;
        const auto next = [&]() {
            if (!std::getline(fields, tok, ','))
                throw std::runtime_error("read_bench_csv: short row: " + line);
            return tok;
        };
        row.method = next();
        row.revs = std::stoi(next());
        row.n = std::stoi(next());
        row.converged = std::stoi(next());
        row.ratio = std::stod(next());
        row.mean_iters = std::stod(next());
        row.mean_time_s = std::stod(next());
        row.mean_err_km = std::stod(next());
        report.rows.push_back(std::move(row));
    }
    if (!header_seen) throw std::runtime_error("read_bench_csv: empty input");
    return report;
}

void write_total_cost_csv(const TotalCostReport& report, std::ostream& out) {
    char buf[64];
    const auto fmt = [&](double v) {
        std::snprintf(buf, sizeof buf, "%.17g", v);
        return std::string(buf);
    };
    out << "# one_time_s=" << fmt(report.one_time_s) << "\n";
    out << "# sn_per_solve_s=" << fmt(report.sn_per_solve_s) << "\n";
    out << "# dnn_per_solve_s=" << fmt(report.dnn_per_solve_s) << "\n";
    out << "# crossover=" << fmt(report.crossover) << "\n";
    out << "batch,sn_total_s,dnn_total_s,one_time_fraction\n";
    for (const auto& r : report.rows)
        out << r.batch << ',' << fmt(r.sn_total_s) << ',' << fmt(r.dnn_total_s) << ','
            << fmt(r.one_time_fraction) << "\n";
}

} // namespace plam::bench
