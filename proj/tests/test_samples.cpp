#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "plam/rng.hpp"
#include "plam/samples.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <numbers>

using namespace plam;
using astro::Vec3;

namespace {

constexpr double kPi = std::numbers::pi;

// One-sample Kolmogorov-Smirnov distance against uniform on [lo, hi].
double ks_uniform(std::vector<double> xs, double lo, double hi) {
    std::sort(xs.begin(), xs.end());
    const double n = static_cast<double>(xs.size());
    double d = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        const double cdf = (xs[i] - lo) / (hi - lo);
        d = std::max(d, std::abs(cdf - static_cast<double>(i) / n));
        d = std::max(d, std::abs(cdf - static_cast<double>(i + 1) / n));
    }
    return d;
}


// Bitwise equality of two 3-vectors.
bool same(const Vec3& a, const Vec3& b) {
    return a.x() == b.x() && a.y() == b.y() && a.z() == b.z();
}

} // namespace

TEST_CASE("revolution count from time of flight") {
    CHECK(samples::revs_for_tof(0.5, 1.0) == 0);
    CHECK(samples::revs_for_tof(9.99, 1.0) == 9);
    CHECK(samples::revs_for_tof(1.0, 1.0) == 1); // exact multiple: floor convention
    CHECK_THROWS_AS(samples::revs_for_tof(1.0, 0.0), std::domain_error);
}

TEST_CASE("form names and dimensions") {
    using samples::SampleForm;
    CHECK(samples::form_input_dim(SampleForm::v_car) == 7);
    CHECK(samples::form_input_dim(SampleForm::v_sph) == 7);
    CHECK(samples::form_input_dim(SampleForm::dv1_car) == 7);
    CHECK(samples::form_input_dim(SampleForm::dv1_sph) == 7);
    CHECK(samples::form_input_dim(SampleForm::dv2_car) == 10);
    CHECK(samples::form_input_dim(SampleForm::dv2_sph) == 10);
    for (auto f : samples::kAllForms)
        CHECK(samples::form_from_name(samples::form_name(f)) == f);
    CHECK_THROWS_AS(samples::form_from_name("bogus"), std::invalid_argument);
}

TEST_CASE("generation is deterministic for a fixed seed") {
    const auto body = astro::jupiter();
    const auto ranges = samples::SampleRanges::table1();
    const auto a = samples::generate_sample(42, ranges, body);
    const auto b = samples::generate_sample(42, ranges, body);
    CHECK(same(a.r0, b.r0));
    CHECK(same(a.v0, b.v0));
    CHECK(same(a.rf, b.rf));
    CHECK(same(a.vd, b.vd));
    CHECK(a.tof == b.tof);
    CHECK(a.revs == b.revs);
    CHECK(a.retries == b.retries);
}

TEST_CASE("records satisfy the defining identities and range membership") {
    const auto body = astro::jupiter();
    const auto ranges = samples::SampleRanges::table1();
    for (std::uint64_t seed : {1ull, 2ull, 3ull, 4ull, 5ull, 60ull, 700ull, 8000ull}) {
        const auto rec = samples::generate_sample(seed, ranges, body);

        // Delta identities hold exactly (they are definitions).
        CHECK(same(rec.dv0, rec.v0 - rec.vd));
        CHECK(same(rec.drf, rec.rf - rec.rfd));

        // Re-running the propagation steps reproduces the stored terminals.
        const auto rf = astro::propagate({rec.r0, rec.v0}, rec.tof, body);
        CHECK((rf.position - rec.rf).norm() < 1e-6);
        CHECK((rf.velocity - rec.vf).norm() < 1e-9);
        const auto rfd = astro::propagate({rec.r0, rec.vd}, rec.tof, body);
        CHECK((rfd.position - rec.rfd).norm() < 1e-6);

        // Generating elements inside the Table-1 box.
        const auto oe = astro::state_to_elements({rec.r0, rec.v0}, body.mu);
        const double rp = oe.a * (1.0 - oe.e) / body.radius;
        const double ra = oe.a * (1.0 + oe.e) / body.radius;
        CHECK(rp >= 5.0 - 1e-9);
        CHECK(ra <= 30.0 + 1e-9);
        CHECK(oe.i >= -1e-12);
        CHECK(oe.i <= 1.0 + 1e-9);
        const double period = astro::orbital_period(oe.a, body.mu);
        CHECK(rec.tof > 0.0);
        CHECK(rec.tof < period);
        CHECK(rec.revs == samples::revs_for_tof(rec.tof, period));
    }
}

TEST_CASE("j2 = 0 control produces near-zero corrections") {
    auto body = astro::jupiter();
    body.j2 = 0.0;
    for (std::uint64_t seed : {10ull, 11ull, 12ull, 13ull, 14ull}) {
        const auto rec = samples::generate_sample(seed, samples::SampleRanges::table1(), body);
        CHECK(rec.dv0.norm() < 1e-9);
        CHECK(rec.drf.norm() < 1e-3);
    }
}

TEST_CASE("sampled elements are uniform on their ranges (KS test)") {
    const auto body = astro::jupiter();
    const auto ranges = samples::SampleRanges::table1();
    const std::size_t n = 400;
    const auto dataset = samples::generate_dataset(n, 123, ranges, body);

    std::vector<double> rp, incl, raan, argp, ma, tof_frac;
    for (const auto& rec : dataset) {
        const auto oe = astro::state_to_elements({rec.r0, rec.v0}, body.mu);
        rp.push_back(oe.a * (1.0 - oe.e) / body.radius);
        incl.push_back(oe.i);
        raan.push_back(oe.raan);
        argp.push_back(oe.argp);
        ma.push_back(oe.mean_anomaly);
        tof_frac.push_back(rec.tof / astro::orbital_period(oe.a, body.mu));
    }
    // 95% band for the one-sample KS statistic.
    const double band = 1.36 / std::sqrt(static_cast<double>(n));
    CHECK(ks_uniform(rp, 5.0, 30.0) < band);
    CHECK(ks_uniform(incl, 0.0, 1.0) < band);
    CHECK(ks_uniform(raan, 0.0, 2.0 * kPi) < band);
    CHECK(ks_uniform(argp, 0.0, 2.0 * kPi) < band);
    CHECK(ks_uniform(ma, 0.0, 2.0 * kPi) < band);
    CHECK(ks_uniform(tof_frac, 0.0, 1.0) < band);
}

TEST_CASE("terminal drift grows with time of flight (rank correlation)") {
    const auto body = astro::jupiter();
    const auto dataset =
        samples::generate_dataset(300, 321, samples::SampleRanges::table1(), body);
    std::vector<double> tof, drf;
    for (const auto& rec : dataset) {
        tof.push_back(rec.tof);
        drf.push_back(rec.drf.norm());
    }
    const auto ranks = [](const std::vector<double>& v) {
        std::vector<std::size_t> idx(v.size());
        for (std::size_t i = 0; i < v.size(); ++i) idx[i] = i;
        std::sort(idx.begin(), idx.end(), [&](auto a, auto b) { return v[a] < v[b]; });
        std::vector<double> r(v.size());
        for (std::size_t i = 0; i < idx.size(); ++i) r[idx[i]] = static_cast<double>(i);
        return r;
    };
    const auto rt = ranks(tof), rd = ranks(drf);
    const double n = static_cast<double>(rt.size());
    double d2 = 0.0;
    for (std::size_t i = 0; i < rt.size(); ++i) d2 += (rt[i] - rd[i]) * (rt[i] - rd[i]);
    const double spearman = 1.0 - 6.0 * d2 / (n * (n * n - 1.0));
    CHECK(spearman > 0.0);
}

TEST_CASE("form projections") {
    const auto body = astro::jupiter();
    const auto rec = samples::generate_sample(555, samples::SampleRanges::table1(), body);

    SUBCASE("dv2-Sph layout") {
        auto [in, out] = samples::project_form(rec, samples::SampleForm::dv2_sph, body);
        REQUIRE(in.size() == 10);
        REQUIRE(out.size() == 3);
        const auto r0s = astro::cart_to_spherical(rec.r0 / body.radius);
        CHECK(in[0] == doctest::Approx(r0s.magnitude).epsilon(1e-15));
        CHECK(in[1] == doctest::Approx(r0s.azimuth).epsilon(1e-15));
        CHECK(in[2] == doctest::Approx(r0s.elevation).epsilon(1e-15));
        const auto vds = astro::cart_to_spherical(rec.vd);
        CHECK(in[3] == doctest::Approx(vds.magnitude).epsilon(1e-15));
        const auto drfs = astro::cart_to_spherical(rec.drf);
        CHECK(in[6] == doctest::Approx(drfs.magnitude).epsilon(1e-15));
        CHECK(in[9] == doctest::Approx(rec.tof / 86400.0).epsilon(1e-15));

        // Output is the spherical form of the Cartesian difference vector.
        const Vec3 back = astro::spherical_to_cart({out[0], out[1], out[2]});
        CHECK((back - rec.dv0).norm() <= 1e-12 * rec.dv0.norm());

        // Shared input builder agrees with the projection.
        const auto direct = samples::dv2_sph_input(rec.r0, rec.vd, rec.drf, rec.tof, body);
        CHECK((direct - in).norm() == 0.0);
    }

    SUBCASE("v-Car layout") {
        auto [in, out] = samples::project_form(rec, samples::SampleForm::v_car, body);
        REQUIRE(in.size() == 7);
        CHECK(in[0] == doctest::Approx(rec.r0.x() / body.radius).epsilon(1e-15));
        CHECK(in[3] == doctest::Approx(rec.rf.x() / body.radius).epsilon(1e-15));
        CHECK(in[6] == doctest::Approx(rec.tof / 86400.0).epsilon(1e-15));
        CHECK(out[0] == doctest::Approx(rec.v0.x()).epsilon(1e-15));
    }

    SUBCASE("dv1 forms on a j2 = 0 record give zero outputs") {
        auto body0 = body;
        body0.j2 = 0.0;
        const auto rec0 =
            samples::generate_sample(556, samples::SampleRanges::table1(), body0);
        auto [in, out] = samples::project_form(rec0, samples::SampleForm::dv1_car, body0);
        CHECK(out.norm() < 1e-9);
    }
}

TEST_CASE("dataset write/read round trip is lossless") {
    const auto body = astro::jupiter();
    const auto dataset =
        samples::generate_dataset(50, 777, samples::SampleRanges::extended(), body);
    const auto path = std::filesystem::temp_directory_path() / "plam_test_dataset.csv";
    samples::write_dataset_csv(dataset, path);
    const auto back = samples::read_dataset_csv(path);
    REQUIRE(back.size() == dataset.size());
    for (std::size_t i = 0; i < dataset.size(); ++i) {
        CHECK(back[i].seed == dataset[i].seed);
        CHECK(back[i].revs == dataset[i].revs);
        CHECK(back[i].tof == dataset[i].tof);
        CHECK(same(back[i].r0, dataset[i].r0));
        CHECK(same(back[i].v0, dataset[i].v0));
        CHECK(same(back[i].rf, dataset[i].rf));
        CHECK(same(back[i].vf, dataset[i].vf));
        CHECK(same(back[i].vd, dataset[i].vd));
        CHECK(same(back[i].rfd, dataset[i].rfd));
        CHECK(same(back[i].dv0, dataset[i].dv0));
        CHECK(same(back[i].drf, dataset[i].drf));
    }
    std::filesystem::remove(path);
}

TEST_CASE("disjoint seed ranges share no records") {
    const auto body = astro::jupiter();
    const auto ranges = samples::SampleRanges::table1();
    const auto a = samples::generate_dataset(30, 1000, ranges, body);
    const auto b = samples::generate_dataset(30, 2000, ranges, body);
    for (const auto& ra : a)
        for (const auto& rb : b) CHECK(!same(ra.r0, rb.r0));
}

TEST_CASE("extended ranges reach high inclinations and multi-rev times") {
    const auto body = astro::jupiter();
    const auto dataset =
        samples::generate_dataset(60, 31337, samples::SampleRanges::extended(), body);
    bool saw_retrograde = false, saw_multi_rev = false;
    for (const auto& rec : dataset) {
        const auto oe = astro::state_to_elements({rec.r0, rec.v0}, body.mu);
        CHECK(oe.i <= kPi + 1e-9);
        if (oe.i > kPi / 2.0) saw_retrograde = true;
        if (rec.revs >= 1) saw_multi_rev = true;
        CHECK(rec.revs <= 9);
    }
    CHECK(saw_retrograde);
    CHECK(saw_multi_rev);
}

TEST_CASE("per-rev ranges pin the revolution count") {
    const auto body = astro::jupiter();
    const auto ranges = samples::SampleRanges::for_revs(3);
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        const auto rec = samples::generate_sample(rng::mix(9001, seed), ranges, body);
        CHECK(rec.revs == 3);
    }
}

TEST_CASE("log masks flag exactly the difference-magnitude columns") {
    for (auto form : samples::kAllForms) {
        const auto [in, out] = samples::form_log_mask(form);
        CHECK(in.size() == static_cast<std::size_t>(samples::form_input_dim(form)));
        CHECK(out.size() == static_cast<std::size_t>(samples::kFormOutputDim));
        const bool sph_diff =
            form == samples::SampleForm::dv1_sph || form == samples::SampleForm::dv2_sph;
        int in_count = 0, out_count = 0;
        for (bool b : in) in_count += b;
        for (bool b : out) out_count += b;
        CHECK(in_count == (sph_diff ? 1 : 0));
        CHECK(out_count == (sph_diff ? 1 : 0));
        if (form == samples::SampleForm::dv1_sph) CHECK(in[3]);
        if (form == samples::SampleForm::dv2_sph) CHECK(in[6]);
        if (sph_diff) CHECK(out[0]);
    }
}

TEST_CASE("circular masks flag exactly the azimuth input columns") {
    for (auto form : samples::kAllForms) {
        const auto [in, unitvec] = samples::form_circular_mask(form);
        CHECK(in.size() == static_cast<std::size_t>(samples::form_input_dim(form)));
        const bool sph = form == samples::SampleForm::v_sph ||
                         form == samples::SampleForm::dv1_sph ||
                         form == samples::SampleForm::dv2_sph;
        CHECK(unitvec == sph);
        int count = 0;
        for (bool b : in) count += b;
        if (!sph) {
            CHECK(count == 0);
        } else if (form == samples::SampleForm::dv2_sph) {
            CHECK(count == 3);
            CHECK(in[1]);
            CHECK(in[4]);
            CHECK(in[7]);
        } else {
            CHECK(count == 2);
            CHECK(in[1]);
            CHECK(in[4]);
        }
        // Circular and log columns never overlap: together they stay a valid
        // network pretreatment.
        const auto [log_in, log_out] = samples::form_log_mask(form);
        for (std::size_t i = 0; i < in.size(); ++i) CHECK(!(in[i] && log_in[i]));
    }
}
