#pragma once

#include <complex>

#include <Eigen/Dense>

namespace qoq::rot {

using cplx = std::complex<double>;
using Vec3 = Eigen::Vector3d;
using Su2Matrix = Eigen::Matrix2cd;
using So3Matrix = Eigen::Matrix3d;

inline constexpr double pi = 3.14159265358979323846;

struct AxisAngle {
    Vec3 axis = Vec3::UnitX();
    double angle = 0.0;
    // Set when the source was +-I and the axis carries no information.
    bool axis_arbitrary = false;
};

// su2(first) * su2(second) reproduces the source rotation up to sign.
struct XyRotationPair {
    AxisAngle first;
    AxisAngle second;
};

// u = sign * su2(axis, angle) with angle in [0, pi].
struct SignedRotation {
    Vec3 axis = Vec3::UnitX();
    double angle = 0.0;
    int sign = 1;
};

const Su2Matrix& sigma_x();
const Su2Matrix& sigma_y();
const Su2Matrix& sigma_z();

// exp(+i angle/2 axis.sigma)
Su2Matrix su2_from_axis_angle(const Vec3& axis, double angle);
inline Su2Matrix su2_from_axis_angle(const AxisAngle& a) { return su2_from_axis_angle(a.axis, a.angle); }

// R_ij = 1/2 tr(sigma_i u sigma_j u^dagger)
So3Matrix so3_from_su2(const Su2Matrix& u);

// Right-handed Rodrigues rotation.
So3Matrix rodrigues(const Vec3& axis, double angle);

// u^dagger g u.
Su2Matrix conjugate(const Su2Matrix& g, const Su2Matrix& u);

// Angle in [0, 2pi]. A non-unit determinant is divided out first.
AxisAngle axis_angle_of(const Su2Matrix& u);

SignedRotation signed_rotation_of(const Su2Matrix& u);

// SO(3) rotation angle in [0, pi].
double rotation_angle(const Su2Matrix& u);

// Maps angle into [0, pi] flipping the axis as needed.
AxisAngle canonical_so3(const AxisAngle& a);

XyRotationPair decompose_to_xy_plane(const AxisAngle& r, double free_angle);

bool is_unitary(const Eigen::MatrixXcd& u, double tol);

// min over s in {+1,-1} of ||u - s I||_max
double distance_to_pm_identity(const Su2Matrix& u);

} // namespace qoq::rot
