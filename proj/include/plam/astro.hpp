#pragma once

#include <Eigen/Dense>

#include <filesystem>
#include <map>
#include <stdexcept>
#include <string>

namespace plam::astro {

using Vec3 = Eigen::Vector3d;

/// Central-body constants entering the J2 dynamics. All quantities in km, s.
struct BodyParams {
    double mu;     // gravitational parameter (km^3/s^2)
    double radius; // mean equatorial radius (km)
    double j2;     // oblateness coefficient, j2 = 0 selects pure two-body motion

    void validate() const {
        if (!(mu > 0.0)) throw std::domain_error("BodyParams: mu must be > 0");
        if (!(radius > 0.0)) throw std::domain_error("BodyParams: radius must be > 0");
        if (!(j2 >= 0.0)) throw std::domain_error("BodyParams: j2 must be >= 0");
    }
};

struct StateCartesian {
    Vec3 position; // km
    Vec3 velocity; // km/s
};

/// (magnitude, azimuth, elevation) with azimuth in [0, 2pi) and elevation in
/// [-pi/2, pi/2]. The zero vector maps to (0, 0, 0).
struct SphericalVector {
    double magnitude;
    double azimuth;
    double elevation;
};

/// Osculating Keplerian elements of a closed orbit (e < 1).
struct OrbitalElements {
    double a;            // semimajor axis (km)
    double e;            // eccentricity
    double i;            // inclination (rad), [0, pi]
    double raan;         // right ascension of ascending node (rad)
    double argp;         // argument of periapsis (rad)
    double mean_anomaly; // rad
};

struct PropagatorConfig {
    double rel_tol = 1e-12;
    double abs_tol = 1e-12;
    long max_steps = 10'000'000;
};

/// Thrown when the step budget runs out before reaching the requested time of
/// flight; carries the time actually reached.
class PropagationError : public std::runtime_error {
public:
    PropagationError(const std::string& what, double time_reached)
        : std::runtime_error(what), time_reached_(time_reached) {}
    double time_reached() const { return time_reached_; }

private:
    double time_reached_;
};

/// Acceleration of the J2-perturbed point-mass field at the given state.
Vec3 j2_acceleration(const StateCartesian& state, const BodyParams& body);

/// Integrate the J2 dynamics forward for tof seconds with an adaptive
/// embedded Runge-Kutta and PI step-size control. tof = 0 returns state0
/// unchanged.
StateCartesian propagate(const StateCartesian& state0, double tof, const BodyParams& body,
                         const PropagatorConfig& cfg = {});

/// Two-body period 2*pi*sqrt(a^3/mu).
double orbital_period(double a, double mu);

SphericalVector cart_to_spherical(const Vec3& v);
Vec3 spherical_to_cart(const SphericalVector& s);

StateCartesian elements_to_state(const OrbitalElements& oe, double mu);
OrbitalElements state_to_elements(const StateCartesian& state, double mu);

/// Normalize an angle to [0, 2pi).
double wrap_two_pi(double angle);

/// Built-in Jupiter constants (the default study body).
BodyParams jupiter();

/// Body catalog file: one body per line, "name mu radius j2" in km/s units.
/// Lines starting with '#' are comments.
std::map<std::string, BodyParams> load_body_catalog(const std::filesystem::path& path);

} // namespace plam::astro
