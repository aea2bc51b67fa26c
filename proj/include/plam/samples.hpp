#pragma once

#include "plam/astro.hpp"
#include "plam/lambert.hpp"

#include <cstdint>
#include <filesystem>
#include <numbers>
#include <string>
#include <vector>

namespace plam::samples {

using astro::BodyParams;
using astro::Vec3;

/// Uniform draw ranges for the generating orbit, in the presentation units of
/// the study (radii in body radii, tof as a fraction of the orbital period).
struct SampleRanges {
    double rp_min = 5.0;   // perijove radius, body radii
    double rp_max = 30.0;
    double ra_max = 30.0;  // apojove radius upper bound (lower bound is rp)
    double incl_min = 0.0; // rad
    double incl_max = 1.0;
    double raan_min = 0.0, raan_max = 2.0 * std::numbers::pi;
    double argp_min = 0.0, argp_max = 2.0 * std::numbers::pi;
    double ma_min = 0.0, ma_max = 2.0 * std::numbers::pi;
    double tof_frac_min = 0.0; // open interval (tof_frac_min, tof_frac_max) in periods
    double tof_frac_max = 1.0;

    /// Baseline ranges of the sample study.
    static SampleRanges table1() { return {}; }

    /// Extended ranges: inclination [0, pi], tof in (0, 10T).
    static SampleRanges extended() {
        SampleRanges r;
        r.incl_max = std::numbers::pi;
        r.tof_frac_max = 10.0;
        return r;
    }

    /// Ranges restricted so every draw has exactly `revs` whole revolutions.
    static SampleRanges for_revs(int revs, const SampleRanges& base = extended()) {
        SampleRanges r = base;
        r.tof_frac_min = static_cast<double>(revs);
        r.tof_frac_max = static_cast<double>(revs) + 1.0;
        return r;
    }

    void validate() const;
};

/// One fully resolved training sample (sample-generation Steps 1-5).
struct SampleRecord {
    std::uint64_t seed = 0;
    int revs = 0;
    double tof = 0.0; // s
    Vec3 r0, v0;      // generated initial state (km, km/s)
    Vec3 rf, vf;      // J2-propagated terminal state
    Vec3 vd;          // Keplerian Lambert initial velocity
    Vec3 rfd;         // terminal position of (r0, vd) under J2
    Vec3 dv0;         // v0 - vd
    Vec3 drf;         // rf - rfd
    int retries = 0;  // Lambert-failure resample count
};

enum class SampleForm { v_car, v_sph, dv1_car, dv1_sph, dv2_car, dv2_sph };

const char* form_name(SampleForm form);
SampleForm form_from_name(const std::string& name);
int form_input_dim(SampleForm form);
constexpr int kFormOutputDim = 3;
inline const SampleForm kAllForms[] = {SampleForm::v_car,   SampleForm::v_sph,
                                       SampleForm::dv1_car, SampleForm::dv1_sph,
                                       SampleForm::dv2_car, SampleForm::dv2_sph};

/// Log10 pretreatment masks (inputs, outputs) for the heavy-tailed magnitude
/// columns of a form: |drf| input and |dv0| output of the spherical
/// difference forms span ~10 decades and train far better in log space.
/// Other columns (and all columns of the remaining forms) stay linear.
std::pair<std::vector<bool>, std::vector<bool>> form_log_mask(SampleForm form);

/// Angle-handling pretreatment for a form: input mask of azimuth columns that
/// should enter the network as (sin, cos) pairs, and whether the spherical
/// output triple should train as a unit vector (true for spherical forms, so
/// the azimuth wrap never appears in the training loss).
std::pair<std::vector<bool>, bool> form_circular_mask(SampleForm form);

/// Revolution count used to select the Lambert branch family: floor(tof / T).
int revs_for_tof(double tof, double period);

/// Steps 1-5 for one sample. Deterministic for a given seed; Lambert failures
/// are retried with a derived sub-seed and counted in `retries`.
SampleRecord generate_sample(std::uint64_t seed, const SampleRanges& ranges,
                             const BodyParams& body,
                             const astro::PropagatorConfig& prop_cfg = {});

/// Input/output vectors of the requested sample form, in presentation units
/// (positions in body radii, velocities km/s, tof in days, angles rad;
/// difference vectors keep km / km/s magnitudes).
std::pair<Eigen::VectorXd, Eigen::VectorXd> project_form(const SampleRecord& rec,
                                                         SampleForm form,
                                                         const BodyParams& body);

/// Per-sample seeds derive from (dataset seed, index), so a dataset is fully
/// reproducible from (n, seed, ranges, body).
std::vector<SampleRecord> generate_dataset(std::size_t n, std::uint64_t seed,
                                           const SampleRanges& ranges, const BodyParams& body,
                                           const astro::PropagatorConfig& prop_cfg = {});

void write_dataset_csv(const std::vector<SampleRecord>& records,
                       const std::filesystem::path& path);
std::vector<SampleRecord> read_dataset_csv(const std::filesystem::path& path);

namespace units {
constexpr double kSecondsPerDay = 86400.0;
}

/// The dv2-Sph network input layout, shared by the form projection and the
/// solver pipeline: [r0 sph (radii, rad, rad), vd sph, drf sph (km, rad, rad), tof (days)].
Eigen::VectorXd dv2_sph_input(const Vec3& r0, const Vec3& vd, const Vec3& drf, double tof,
                              const BodyParams& body);

} // namespace plam::samples
