#include "qoq/rotations.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace qoq::rot {

namespace {

const cplx I1{0.0, 1.0};

Vec3 pauli_components(const Su2Matrix& u)
{
    // u = c I + i (v . sigma)
    return {0.5 * (u(0, 1) + u(1, 0)).imag(),
            0.5 * (u(0, 1) - u(1, 0)).real(),
            0.5 * (u(0, 0) - u(1, 1)).imag()};
}

} // namespace

const Su2Matrix& sigma_x()
{
    static const Su2Matrix m = (Su2Matrix() << 0, 1, 1, 0).finished();
    return m;
}

const Su2Matrix& sigma_y()
{
    static const Su2Matrix m = (Su2Matrix() << 0, -I1, I1, 0).finished();
    return m;
}

const Su2Matrix& sigma_z()
{
    static const Su2Matrix m = (Su2Matrix() << 1, 0, 0, -1).finished();
    return m;
}

Su2Matrix su2_from_axis_angle(const Vec3& axis, double angle)
{
    if (std::abs(axis.norm() - 1.0) > 1e-9)
        throw std::invalid_argument("su2_from_axis_angle: axis is not a unit vector");
    const double c = std::cos(0.5 * angle);
    const double s = std::sin(0.5 * angle);
    Su2Matrix u;
    u(0, 0) = cplx(c, s * axis.z());
    u(1, 1) = cplx(c, -s * axis.z());
    u(0, 1) = cplx(s * axis.y(), s * axis.x());
    u(1, 0) = cplx(-s * axis.y(), s * axis.x());
    return u;
}

So3Matrix so3_from_su2(const Su2Matrix& u)
{
    if (!is_unitary(u, 1e-9))
        throw std::invalid_argument("so3_from_su2: input is not unitary");
    const Su2Matrix* s[3] = {&sigma_x(), &sigma_y(), &sigma_z()};
    So3Matrix r;
    for (int j = 0; j < 3; ++j) {
        const Su2Matrix rotated = u * (*s[j]) * u.adjoint();
        for (int i = 0; i < 3; ++i)
            r(i, j) = 0.5 * ((*s[i]) * rotated).trace().real();
    }
    return r;
}

So3Matrix rodrigues(const Vec3& axis, double angle)
{
    return Eigen::AngleAxisd(angle, axis.normalized()).toRotationMatrix();
}

Su2Matrix conjugate(const Su2Matrix& g, const Su2Matrix& u) { return u.adjoint() * g * u; }

AxisAngle axis_angle_of(const Su2Matrix& u)
{
    Su2Matrix w = u;
    const cplx det = u.determinant();
    if (std::abs(det - 1.0) > 1e-14)
        w /= std::sqrt(det);
    const double c = 0.5 * w.trace().real();
    const Vec3 v = pauli_components(w);
    const double s = v.norm();
    AxisAngle out;
    out.angle = 2.0 * std::atan2(s, c);
    if (s < 1e-12) {
        out.axis = Vec3::UnitX();
        out.axis_arbitrary = true;
        out.angle = c > 0 ? 0.0 : 2.0 * pi;
    } else {
        out.axis = v / s;
    }
    return out;
}

SignedRotation signed_rotation_of(const Su2Matrix& u)
{
    const double c = 0.5 * u.trace().real();
    const Vec3 v = pauli_components(u);
    const double s = v.norm();
    SignedRotation out;
    out.sign = c >= 0 ? 1 : -1;
    // sign * (|c| I + i sign v.sigma)
    out.angle = 2.0 * std::atan2(s, std::abs(c));
    out.axis = s < 1e-300 ? Vec3::UnitX() : Vec3(out.sign * v / s);
    return out;
}

double rotation_angle(const Su2Matrix& u) { return signed_rotation_of(u).angle; }

AxisAngle canonical_so3(const AxisAngle& a)
{
    AxisAngle out = a;
    double t = std::fmod(a.angle, 2.0 * pi);
    if (t < 0) t += 2.0 * pi;
    if (t > pi) {
        out.axis = -a.axis;
        t = 2.0 * pi - t;
    }
    out.angle = t;
    return out;
}

XyRotationPair decompose_to_xy_plane(const AxisAngle& r, double free_angle)
{
    const Vec3 axis = r.axis.normalized();
    if (std::abs(axis.z()) < 1e-15) {
        XyRotationPair p;
        p.first = {Vec3(axis.x(), axis.y(), 0.0).normalized(), r.angle, false};
        p.second = {Vec3::UnitX(), 0.0, false};
        return p;
    }
    const Vec3 z = Vec3::UnitZ();
    const Vec3 r1p = Vec3(-axis.z(), 0.0, axis.x()) / std::hypot(axis.x(), axis.z());
    const Vec3 r2p = axis.cross(r1p).normalized();

    double phi = free_angle;
    for (int attempt = 0; attempt < 2; ++attempt, phi += 0.5 * pi) {
        const Vec3 n1 = r1p * std::cos(phi) + r2p * std::sin(phi);
        const Vec3 n2 = r1p * std::cos(phi + 0.5 * r.angle) + r2p * std::sin(phi + 0.5 * r.angle);
        const Vec3 a = n1.cross(z);
        const Vec3 b = z.cross(n2);
        if (a.norm() < 1e-9 || b.norm() < 1e-9)
            continue;
        XyRotationPair p;
        Vec3 an = a.normalized(), bn = b.normalized();
        an.z() = 0.0;
        bn.z() = 0.0;
        p.first = {an.normalized(), 2.0 * std::acos(std::clamp(n1.dot(z), -1.0, 1.0)), false};
        p.second = {bn.normalized(), 2.0 * std::acos(std::clamp(z.dot(n2), -1.0, 1.0)), false};
        return p;
    }
    throw std::logic_error("decompose_to_xy_plane: degenerate normals after perturbation");
}

bool is_unitary(const Eigen::MatrixXcd& u, double tol)
{
    if (u.rows() != u.cols()) return false;
    const Eigen::MatrixXcd e = u.adjoint() * u - Eigen::MatrixXcd::Identity(u.rows(), u.cols());
    return e.cwiseAbs().maxCoeff() <= tol;
}

double distance_to_pm_identity(const Su2Matrix& u)
{
    const Su2Matrix id = Su2Matrix::Identity();
    return std::min((u - id).cwiseAbs().maxCoeff(), (u + id).cwiseAbs().maxCoeff());
}

} // namespace qoq::rot
