#pragma once

#include "plam/astro.hpp"

#include <optional>
#include <vector>

namespace plam::lambert {

using astro::Vec3;

/// For revs >= 1 the time-of-flight curve has two roots; low_path is the root
/// with the larger iteration variable x (the lower-energy, flatter transfer),
/// high_path the smaller-x root.
enum class Branch { low_path, high_path };

struct LambertQuery {
    Vec3 r0;     // km
    Vec3 rf;     // km
    double tof;  // s
    double mu;   // km^3/s^2
    int revs = 0;
    std::optional<Branch> branch;    // revs >= 1 only; unset returns both
    std::optional<Vec3> plane_hint;  // transfer-plane normal, required in singular geometry
};

struct LambertSolution {
    Vec3 v0; // km/s
    Vec3 vf; // km/s
    int revs;
    Branch branch;
};

class NoSolutionError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// r0, rf collinear without a plane_hint: the transfer plane is undetermined.
class AmbiguousPlaneError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Keplerian (two-body) Lambert solver with multi-revolution support.
///
/// The transfer direction follows the plane normal: with a plane_hint the
/// motion is taken to be counterclockwise around it; without one, prograde
/// motion (normal with positive z) is assumed.
std::vector<LambertSolution> solve_kepler_lambert(const LambertQuery& q);

/// Minimum nondimensional time of flight for the given revolution count, in
/// the same scaling used internally (exposed for tests).
double min_rev_time(double lambda, int revs);

} // namespace plam::lambert
