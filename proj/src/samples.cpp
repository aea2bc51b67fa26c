#include "plam/samples.hpp"

#include "plam/rng.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace plam::samples {

void SampleRanges::validate() const {
    if (!(rp_min >= 5.0)) throw std::domain_error("SampleRanges: rp_min must be >= 5");
    if (!(rp_min <= rp_max)) throw std::domain_error("SampleRanges: rp_min > rp_max");
    if (!(rp_max <= ra_max)) throw std::domain_error("SampleRanges: rp_max > ra_max");
    if (!(tof_frac_min >= 0.0 && tof_frac_min < tof_frac_max))
        throw std::domain_error("SampleRanges: invalid tof fraction interval");
}

const char* form_name(SampleForm form) {
    switch (form) {
        case SampleForm::v_car: return "v-Car";
        case SampleForm::v_sph: return "v-Sph";
        case SampleForm::dv1_car: return "dv1-Car";
        case SampleForm::dv1_sph: return "dv1-Sph";
        case SampleForm::dv2_car: return "dv2-Car";
        case SampleForm::dv2_sph: return "dv2-Sph";
    }
    throw std::logic_error("form_name: unknown form");
}

SampleForm form_from_name(const std::string& name) {
    for (SampleForm f : kAllForms)
        if (name == form_name(f)) return f;
    throw std::invalid_argument("unknown sample form: " + name);
}

int form_input_dim(SampleForm form) {
    switch (form) {
        case SampleForm::v_car:
        case SampleForm::v_sph:
        case SampleForm::dv1_car:
        case SampleForm::dv1_sph: return 7;
        case SampleForm::dv2_car:
        case SampleForm::dv2_sph: return 10;
    }
    throw std::logic_error("form_input_dim: unknown form");
}

std::pair<std::vector<bool>, std::vector<bool>> form_log_mask(SampleForm form) {
    std::vector<bool> in(static_cast<std::size_t>(form_input_dim(form)), false);
    std::vector<bool> out(kFormOutputDim, false);
    switch (form) {
        case SampleForm::dv1_sph: in[3] = true, out[0] = true; break; // |drf|, |dv0|
        case SampleForm::dv2_sph: in[6] = true, out[0] = true; break;
        default: break;
    }
    return {std::move(in), std::move(out)};
}

std::pair<std::vector<bool>, bool> form_circular_mask(SampleForm form) {
    std::vector<bool> in(static_cast<std::size_t>(form_input_dim(form)), false);
    switch (form) {
        case SampleForm::v_sph:
        case SampleForm::dv1_sph: in[1] = in[4] = true; return {std::move(in), true};
        case SampleForm::dv2_sph: in[1] = in[4] = in[7] = true; return {std::move(in), true};
        default: return {std::move(in), false};
    }
}

int revs_for_tof(double tof, double period) {
    if (!(period > 0.0)) throw std::domain_error("revs_for_tof: period must be > 0");
    return static_cast<int>(std::floor(tof / period));
}

namespace {

SampleRecord try_generate(std::uint64_t seed, const SampleRanges& ranges,
                          const BodyParams& body, const astro::PropagatorConfig& prop_cfg) {
    rng::Stream stream(rng::splitmix64(seed));

    // Step 1: random generating orbit and time of flight.
    const double rp = stream.uniform(ranges.rp_min, ranges.rp_max);
    const double ra = stream.uniform(rp, ranges.ra_max); // ra in [rp, ra_max]
    astro::OrbitalElements oe;
    oe.a = 0.5 * (ra + rp) * body.radius;
    oe.e = (ra - rp) / (ra + rp);
    oe.i = stream.uniform(ranges.incl_min, ranges.incl_max);
    oe.raan = stream.uniform(ranges.raan_min, ranges.raan_max);
    oe.argp = stream.uniform(ranges.argp_min, ranges.argp_max);
    oe.mean_anomaly = stream.uniform(ranges.ma_min, ranges.ma_max);

    const double period = astro::orbital_period(oe.a, body.mu);
    const double frac =
        ranges.tof_frac_min + (ranges.tof_frac_max - ranges.tof_frac_min) * stream.next_open();

    SampleRecord rec;
    rec.seed = seed;
    rec.tof = frac * period;
    rec.revs = revs_for_tof(rec.tof, period);

    const astro::StateCartesian s0 = astro::elements_to_state(oe, body.mu);
    rec.r0 = s0.position;
    rec.v0 = s0.velocity;

    // Step 2: terminal state under J2.
    const astro::StateCartesian sf = astro::propagate(s0, rec.tof, body, prop_cfg);
    rec.rf = sf.position;
    rec.vf = sf.velocity;

    // Step 3: Keplerian Lambert solution for the same boundary conditions.
    lambert::LambertQuery q;
    q.r0 = rec.r0;
    q.rf = rec.rf;
    q.tof = rec.tof;
    q.mu = body.mu;
    q.revs = rec.revs;
    q.plane_hint = rec.r0.cross(rec.v0).normalized();
    const auto sols = lambert::solve_kepler_lambert(q);
    // The generator knows the true v0: keep the branch closest to it.
    const lambert::LambertSolution* best = &sols.front();
    for (const auto& sol : sols)
        if ((sol.v0 - rec.v0).norm() < (best->v0 - rec.v0).norm()) best = &sol;
    rec.vd = best->v0;

    // Step 4: terminal position of the Keplerian guess under J2.
    rec.rfd = astro::propagate({rec.r0, rec.vd}, rec.tof, body, prop_cfg).position;

    // Step 5: deltas.
    rec.dv0 = rec.v0 - rec.vd;
    rec.drf = rec.rf - rec.rfd;
    return rec;
}

} // namespace

SampleRecord generate_sample(std::uint64_t seed, const SampleRanges& ranges,
                             const BodyParams& body,
                             const astro::PropagatorConfig& prop_cfg) {
    ranges.validate();
    body.validate();
    constexpr int kMaxRetries = 64;
    std::uint64_t draw_seed = seed;
    for (int retry = 0;; ++retry) {
        try {
            SampleRecord rec = try_generate(draw_seed, ranges, body, prop_cfg);
            rec.seed = seed;
            rec.retries = retry;
            return rec;
        } catch (const std::exception& e) {
            // Unusable draws: Lambert has no solution for the boundary values,
            // or the Keplerian guess plunges so close to the center that the
            // J2 propagation breaks down. Both consume a retry.
            const bool recoverable = dynamic_cast<const lambert::NoSolutionError*>(&e) ||
                                     dynamic_cast<const astro::PropagationError*>(&e);
            if (!recoverable) throw;
            if (retry >= kMaxRetries)
                throw std::runtime_error("generate_sample: retry budget exhausted");
            draw_seed = rng::mix(seed, static_cast<std::uint64_t>(retry) + 1);
        }
    }
}

std::vector<SampleRecord> generate_dataset(std::size_t n, std::uint64_t seed,
                                           const SampleRanges& ranges, const BodyParams& body,
                                           const astro::PropagatorConfig& prop_cfg) {
    if (n == 0) throw std::domain_error("generate_dataset: n must be > 0");
    std::vector<SampleRecord> out;
    out.reserve(n);
    for (std::size_t i = 0; i < n; ++i)
        out.push_back(generate_sample(rng::mix(seed, i), ranges, body, prop_cfg));
    return out;
}

namespace {

astro::SphericalVector sph_scaled(const Vec3& v, double scale) {
    return astro::cart_to_spherical(v / scale);
}

void push_sph(Eigen::VectorXd& v, int& k, const astro::SphericalVector& s) {
    v[k++] = s.magnitude;
    v[k++] = s.azimuth;
    v[k++] = s.elevation;
}

void push_vec(Eigen::VectorXd& v, int& k, const Vec3& x) {
    v[k++] = x.x();
    v[k++] = x.y();
    v[k++] = x.z();
}

} // namespace

Eigen::VectorXd dv2_sph_input(const Vec3& r0, const Vec3& vd, const Vec3& drf, double tof,
                              const BodyParams& body) {
    Eigen::VectorXd in(10);
    int k = 0;
    push_sph(in, k, sph_scaled(r0, body.radius)); // radii
    push_sph(in, k, astro::cart_to_spherical(vd)); // km/s
    push_sph(in, k, astro::cart_to_spherical(drf)); // km
    in[k] = tof / units::kSecondsPerDay;
    return in;
}

std::pair<Eigen::VectorXd, Eigen::VectorXd> project_form(const SampleRecord& rec,
                                                         SampleForm form,
                                                         const BodyParams& body) {
    const double rj = body.radius;
    const double tof_days = rec.tof / units::kSecondsPerDay;
    Eigen::VectorXd in(form_input_dim(form));
    Eigen::VectorXd out(kFormOutputDim);
    int k = 0, m = 0;
    switch (form) {
        case SampleForm::v_car:
            push_vec(in, k, rec.r0 / rj);
            push_vec(in, k, rec.rf / rj);
            in[k] = tof_days;
            push_vec(out, m, rec.v0);
            break;
        case SampleForm::v_sph:
            push_sph(in, k, sph_scaled(rec.r0, rj));
            push_sph(in, k, sph_scaled(rec.rf, rj));
            in[k] = tof_days;
            push_sph(out, m, astro::cart_to_spherical(rec.v0));
            break;
        case SampleForm::dv1_car:
            push_vec(in, k, rec.r0 / rj);
            push_vec(in, k, rec.drf); // km
            in[k] = tof_days;
            push_vec(out, m, rec.dv0);
            break;
        case SampleForm::dv1_sph:
            push_sph(in, k, sph_scaled(rec.r0, rj));
            push_sph(in, k, astro::cart_to_spherical(rec.drf));
            in[k] = tof_days;
            push_sph(out, m, astro::cart_to_spherical(rec.dv0));
            break;
        case SampleForm::dv2_car:
            push_vec(in, k, rec.r0 / rj);
            push_vec(in, k, rec.vd);
            push_vec(in, k, rec.drf);
            in[k] = tof_days;
            push_vec(out, m, rec.dv0);
            break;
        case SampleForm::dv2_sph:
            in = dv2_sph_input(rec.r0, rec.vd, rec.drf, rec.tof, body);
            push_sph(out, m, astro::cart_to_spherical(rec.dv0));
            break;
    }
    return {in, out};
}

namespace {

constexpr const char* kCsvHeader =
    "seed,revs,tof_s,"
    "r0_x,r0_y,r0_z,v0_x,v0_y,v0_z,rf_x,rf_y,rf_z,vf_x,vf_y,vf_z,"
    "vd_x,vd_y,vd_z,rfd_x,rfd_y,rfd_z,dv0_x,dv0_y,dv0_z,drf_x,drf_y,drf_z";

void append_num(std::string& line, double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), ",%.17g", v);
    line += buf;
}

void append_vec(std::string& line, const Vec3& v) {
    append_num(line, v.x());
    append_num(line, v.y());
    append_num(line, v.z());
}

} // namespace

void write_dataset_csv(const std::vector<SampleRecord>& records,
                       const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary); // LF line endings everywhere
    if (!out) throw std::runtime_error("write_dataset_csv: cannot open " + path.string());
    out << kCsvHeader << "\n";
    std::string line;
    for (const auto& rec : records) {
        line.clear();
        line += std::to_string(rec.seed);
        line += ',';
        line += std::to_string(rec.revs);
        append_num(line, rec.tof);
        append_vec(line, rec.r0);
        append_vec(line, rec.v0);
        append_vec(line, rec.rf);
        append_vec(line, rec.vf);
        append_vec(line, rec.vd);
        append_vec(line, rec.rfd);
        append_vec(line, rec.dv0);
        append_vec(line, rec.drf);
        out << line << "\n";
    }
    if (!out) throw std::runtime_error("write_dataset_csv: write failed for " + path.string());
}

std::vector<SampleRecord> read_dataset_csv(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("read_dataset_csv: cannot open " + path.string());
    std::string line;
    if (!std::getline(in, line))
        throw std::runtime_error("read_dataset_csv: empty file " + path.string());
    if (line.ends_with('\r')) line.pop_back();
    if (line != kCsvHeader)
        throw std::runtime_error("read_dataset_csv: unexpected header in " + path.string());

    std::vector<SampleRecord> out;
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        std::vector<double> vals;
        vals.reserve(27);
        SampleRecord rec;
        std::size_t pos = 0;
        int field = 0;
        while (pos <= line.size()) {
            std::size_t next = line.find(',', pos);
            if (next == std::string::npos) next = line.size();
            const std::string_view tok(line.data() + pos, next - pos);
            if (field == 0) {
                auto [p, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), rec.seed);
                if (ec != std::errc{} || p != tok.data() + tok.size())
                    throw std::runtime_error("read_dataset_csv: bad seed at line " +
                                             std::to_string(lineno) + " in " + path.string());
            } else if (field == 1) {
                auto [p, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), rec.revs);
                if (ec != std::errc{} || p != tok.data() + tok.size())
                    throw std::runtime_error("read_dataset_csv: bad revs at line " +
                                             std::to_string(lineno) + " in " + path.string());
            } else {
                double v = 0.0;
                auto [p, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
                if (ec != std::errc{} || p != tok.data() + tok.size())
                    throw std::runtime_error("read_dataset_csv: bad number at line " +
                                             std::to_string(lineno) + " in " + path.string());
                vals.push_back(v);
            }
            ++field;
            pos = next + 1;
            if (next == line.size()) break;
        }
        if (vals.size() != 25)
            throw std::runtime_error("read_dataset_csv: wrong field count at line " +
                                     std::to_string(lineno) + " in " + path.string());
        rec.tof = vals[0];
        auto vec_at = [&vals](int i) { return Vec3(vals[i], vals[i + 1], vals[i + 2]); };
        rec.r0 = vec_at(1);
        rec.v0 = vec_at(4);
        rec.rf = vec_at(7);
        rec.vf = vec_at(10);
        rec.vd = vec_at(13);
        rec.rfd = vec_at(16);
        rec.dv0 = vec_at(19);
        rec.drf = vec_at(22);
        out.push_back(rec);
    }
    return out;
}

} // namespace plam::samples
