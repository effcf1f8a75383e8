#pragma once

// Reference implementations used to check the library: dense generators and
// matrix exponentials, independent of the block-sparse simulator.

#include <cmath>
#include <complex>
#include <random>
#include <vector>

#include <Eigen/Dense>
#include <unsupported/Eigen/MatrixFunctions>

#include "qoq/pulses.hpp"

namespace oracle {

using cplx = std::complex<double>;
using Mat = Eigen::MatrixXcd;
inline const cplx I1{0.0, 1.0};
inline constexpr double pi = 3.14159265358979323846;

inline Eigen::Matrix2cd pauli(int a)
{
    Eigen::Matrix2cd m;
    if (a == 0) m << 0, 1, 1, 0;
    if (a == 1) m << 0, -I1, I1, 0;
    if (a == 2) m << 1, 0, 0, -1;
    return m;
}

// exp(i angle/2 n.sigma) by matrix exponential.
inline Eigen::Matrix2cd su2_exp(const Eigen::Vector3d& n, double angle)
{
    Eigen::Matrix2cd h = n.x() * pauli(0) + n.y() * pauli(1) + n.z() * pauli(2);
    Eigen::Matrix2cd a = (I1 * 0.5 * angle) * h;
    return a.exp();
}

// Index of |q, m> with q the qubit and m the Fock level.
inline int idx(int q, int m) { return 2 * m + q; }

// Hermitian generator of one pulse on Fock levels 0..levels-1.
inline Mat generator(const qoq::Pulse& p, int levels)
{
    const int dim = 2 * levels;
    Mat h = Mat::Zero(dim, dim);
    const cplx e = std::exp(-I1 * p.phi);
    if (p.kind == qoq::PulseKind::Carrier) {
        for (int m = 0; m < levels; ++m) {
            h(idx(0, m), idx(1, m)) = e;
            h(idx(1, m), idx(0, m)) = std::conj(e);
        }
    } else {
        for (int m = 1; m < levels; ++m) {
            const double w = std::sqrt(static_cast<double>(m));
            h(idx(0, m), idx(1, m - 1)) = w * e;
            h(idx(1, m - 1), idx(0, m)) = w * std::conj(e);
        }
    }
    return h;
}

inline Mat pulse(const qoq::Pulse& p, int levels)
{
    Mat a = (I1 * 0.5 * p.theta) * generator(p, levels);
    return a.exp();
}

// Dense product with pulses[0] acting first.
inline Mat simulate(const std::vector<qoq::Pulse>& pulses, int levels)
{
    Mat u = Mat::Identity(2 * levels, 2 * levels);
    for (const auto& p : pulses) u = pulse(p, levels) * u;
    return u;
}

// sQM block j of a dense unitary, rows/cols (|0,j>, |1,j-1>).
inline Eigen::Matrix2cd sqm_block(const Mat& u, int j)
{
    const int a = idx(0, j), b = idx(1, j - 1);
    Eigen::Matrix2cd m;
    m << u(a, a), u(a, b), u(b, a), u(b, b);
    return m;
}

inline double spectral(const Mat& m) { return Eigen::JacobiSVD<Mat>(m).singularValues()(0); }

// SU(2) rotation angle in [0, 2pi], computed stably from the half trace and the vector part.
inline double su2_angle(const Eigen::Matrix2cd& u)
{
    const cplx det = u.determinant();
    const Eigen::Matrix2cd v = u / std::sqrt(det);
    const double c = 0.5 * v.trace().real();
    double s = 0.0;
    for (int a = 0; a < 3; ++a) {
        const double comp = 0.5 * (pauli(a) * v).trace().imag();
        s += comp * comp;
    }
    return 2.0 * std::atan2(std::sqrt(s), c);
}

inline Mat haar_unitary(int d, std::mt19937_64& rng)
{
    std::normal_distribution<double> g;
    Mat a(d, d);
    for (int r = 0; r < d; ++r)
        for (int c = 0; c < d; ++c) a(r, c) = cplx(g(rng), g(rng));
    Eigen::HouseholderQR<Mat> qr(a);
    Mat q = qr.householderQ();
    const Mat rr = qr.matrixQR();
    for (int c = 0; c < d; ++c) q.col(c) *= rr(c, c) / std::abs(rr(c, c));
    return q;
}

inline Eigen::Vector3d random_axis(std::mt19937_64& rng)
{
    std::normal_distribution<double> g;
    Eigen::Vector3d v(g(rng), g(rng), g(rng));
    return v.normalized();
}

} // namespace oracle
