#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "oracle.hpp"
#include "qoq/rotations.hpp"

using namespace qoq::rot;

namespace {

double max_abs(const Eigen::MatrixXcd& m) { return m.cwiseAbs().maxCoeff(); }

bool equal_up_to_sign(const Su2Matrix& a, const Su2Matrix& b, double tol)
{
    return std::min(max_abs(a - b), max_abs(a + b)) <= tol;
}

bool equal_up_to_phase(const Su2Matrix& a, const Su2Matrix& b, double tol)
{
    const cplx ov = (b.adjoint() * a).trace();
    return max_abs(a - (ov / std::abs(ov)) * b) <= tol;
}

} // namespace

TEST_CASE("su2_from_axis_angle matches the matrix exponential")
{
    CHECK(max_abs(su2_from_axis_angle(Vec3::UnitX(), 0.0) - Su2Matrix::Identity()) == 0.0);

    Su2Matrix ix;
    ix << 0, cplx(0, 1), cplx(0, 1), 0;
    CHECK(max_abs(su2_from_axis_angle(Vec3::UnitX(), pi) - ix) < 1e-15);
    CHECK(max_abs(oracle::su2_exp(Vec3::UnitX(), pi) - ix) < 1e-15);

    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> ang(-2 * pi, 2 * pi);
    for (int i = 0; i < 100; ++i) {
        const Vec3 n = oracle::random_axis(rng);
        const double a = ang(rng);
        const Su2Matrix u = su2_from_axis_angle(n, a);
        CHECK(max_abs(u - oracle::su2_exp(n, a)) < 1e-13);
        CHECK(std::abs(u.determinant() - 1.0) < 1e-12);
        CHECK(is_unitary(u, 1e-12));
    }
}

TEST_CASE("X^dagger Z X is Z with the opposite angle up to phase")
{
    const Su2Matrix x = su2_from_axis_angle(Vec3::UnitX(), pi);
    const Su2Matrix z = su2_from_axis_angle(Vec3::UnitZ(), pi);
    CHECK(equal_up_to_phase(x.adjoint() * z * x, su2_from_axis_angle(Vec3::UnitZ(), -pi), 1e-14));
}

TEST_CASE("su2_from_axis_angle rejects a non-unit axis")
{
    CHECK_THROWS_AS(su2_from_axis_angle(Vec3(1.0, 0.1, 0.0), 1.0), std::invalid_argument);
    CHECK_NOTHROW(su2_from_axis_angle(Vec3(1.0 + 1e-10, 0.0, 0.0), 1.0));
}

TEST_CASE("so3_from_su2 examples")
{
    CHECK((so3_from_su2(Su2Matrix::Identity()) - So3Matrix::Identity()).cwiseAbs().maxCoeff() < 1e-15);

    // Entrywise trace formula evaluated independently.
    const Su2Matrix u = oracle::su2_exp(Vec3::UnitX(), pi);
    So3Matrix expect;
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j)
            expect(i, j) = 0.5 * (oracle::pauli(i) * u * oracle::pauli(j) * u.adjoint()).trace().real();
    CHECK((expect - Eigen::Vector3d(1, -1, -1).asDiagonal().toDenseMatrix()).cwiseAbs().maxCoeff() < 1e-15);
    CHECK((so3_from_su2(u) - expect).cwiseAbs().maxCoeff() < 1e-15);

    CHECK_THROWS_AS(so3_from_su2(2.0 * Su2Matrix::Identity()), std::invalid_argument);
}

TEST_CASE("so3_from_su2 is a homomorphism onto SO(3) with kernel +-I")
{
    std::mt19937_64 rng(12);
    std::uniform_real_distribution<double> ang(0.0, 2 * pi);
    for (int i = 0; i < 200; ++i) {
        const Su2Matrix u = su2_from_axis_angle(oracle::random_axis(rng), ang(rng));
        const Su2Matrix v = su2_from_axis_angle(oracle::random_axis(rng), ang(rng));
        const So3Matrix ru = so3_from_su2(u), rv = so3_from_su2(v);
        CHECK((so3_from_su2(u * v) - ru * rv).cwiseAbs().maxCoeff() < 1e-12);
        CHECK((ru.transpose() * ru - So3Matrix::Identity()).cwiseAbs().maxCoeff() < 1e-12);
        CHECK(std::abs(ru.determinant() - 1.0) < 1e-12);
        CHECK((so3_from_su2(-u) - ru).cwiseAbs().maxCoeff() < 1e-15);
    }
}

TEST_CASE("su2 angle alpha maps to a right-handed rotation by -alpha")
{
    std::mt19937_64 rng(13);
    std::uniform_real_distribution<double> ang(-pi, pi);
    for (int i = 0; i < 50; ++i) {
        const Vec3 n = oracle::random_axis(rng);
        const double a = ang(rng);
        CHECK((so3_from_su2(su2_from_axis_angle(n, a)) - rodrigues(n, -a)).cwiseAbs().maxCoeff() < 1e-12);
    }
}

TEST_CASE("conjugation preserves trace and rotation angle")
{
    std::mt19937_64 rng(14);
    std::uniform_real_distribution<double> ang(0.0, 2 * pi);
    for (int i = 0; i < 100; ++i) {
        const Su2Matrix g = su2_from_axis_angle(oracle::random_axis(rng), ang(rng));
        const Su2Matrix u = su2_from_axis_angle(oracle::random_axis(rng), ang(rng));
        const Su2Matrix f = conjugate(g, u);
        CHECK(max_abs(f - u.adjoint() * g * u) < 1e-15);
        CHECK(std::abs(f.trace() - g.trace()) < 1e-12);
        CHECK(std::abs(rotation_angle(f) - rotation_angle(g)) < 1e-7);
    }
}

TEST_CASE("axis_angle_of recovers axis and angle")
{
    std::mt19937_64 rng(15);
    std::uniform_real_distribution<double> ang(0.05, 2 * pi - 0.05);
    for (int i = 0; i < 100; ++i) {
        const Vec3 n = oracle::random_axis(rng);
        const double a = ang(rng);
        const AxisAngle r = axis_angle_of(su2_from_axis_angle(n, a));
        CHECK_FALSE(r.axis_arbitrary);
        CHECK(std::abs(r.angle - a) < 1e-10);
        CHECK((r.axis - n).norm() < 1e-10);
        CHECK(std::abs(r.axis.norm() - 1.0) < 1e-12);
    }
    CHECK(axis_angle_of(Su2Matrix::Identity()).axis_arbitrary);
    CHECK(axis_angle_of(-Su2Matrix::Identity()).axis_arbitrary);
    CHECK(std::abs(axis_angle_of(-Su2Matrix::Identity()).angle - 2 * pi) < 1e-12);
}

TEST_CASE("signed_rotation_of and canonical_so3 stay in [0, pi]")
{
    std::mt19937_64 rng(16);
    std::uniform_real_distribution<double> ang(-2 * pi, 2 * pi);
    for (int i = 0; i < 100; ++i) {
        const Vec3 n = oracle::random_axis(rng);
        const double a = ang(rng);
        const Su2Matrix u = su2_from_axis_angle(n, a);
        const SignedRotation s = signed_rotation_of(u);
        CHECK(s.angle >= 0.0);
        CHECK(s.angle <= pi + 1e-12);
        CHECK(max_abs(u - static_cast<double>(s.sign) * su2_from_axis_angle(s.axis, s.angle)) < 1e-10);

        const AxisAngle c = canonical_so3({n, a});
        CHECK(c.angle >= 0.0);
        CHECK(c.angle <= pi + 1e-12);
        CHECK((rodrigues(c.axis, c.angle) - rodrigues(n, a)).cwiseAbs().maxCoeff() < 1e-12);
    }
}

TEST_CASE("decompose_to_xy_plane round trip")
{
    std::mt19937_64 rng(17);
    std::uniform_real_distribution<double> ang(-2 * pi, 2 * pi), free(0.0, 2 * pi);
    auto check = [](const AxisAngle& r, double f) {
        const XyRotationPair p = decompose_to_xy_plane(r, f);
        CHECK(p.first.axis.z() == 0.0);
        CHECK(p.second.axis.z() == 0.0);
        CHECK(std::abs(p.first.axis.norm() - 1.0) < 1e-12);
        CHECK(std::abs(p.second.axis.norm() - 1.0) < 1e-12);
        CHECK(equal_up_to_sign(su2_from_axis_angle(p.first) * su2_from_axis_angle(p.second),
                               su2_from_axis_angle(r), 1e-10));
    };
    for (int i = 0; i < 200; ++i) check({oracle::random_axis(rng), ang(rng)}, free(rng));
    // Axes on the special directions.
    for (const Vec3& n : std::initializer_list<Vec3>{Vec3::UnitX(), Vec3::UnitY(), Vec3::UnitZ(), -Vec3::UnitZ()})
        for (double a : {0.3, pi, 1.9 * pi})
            for (double f : {0.0, 0.5 * pi, 2.0}) check({n, a}, f);
}
