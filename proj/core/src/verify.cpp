#include "qoq/verify.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace qoq::verify {

namespace {

BlockError compare_block(int index, const Su2Matrix& u, const Su2Matrix& t)
{
    BlockError e;
    e.index = index;
    e.raw = spectral_norm(u - t);
    const cplx ov = (t.adjoint() * u).trace();
    e.phase = std::abs(ov) > 1e-300 ? ov / std::abs(ov) : cplx(1.0, 0.0);
    e.aligned = spectral_norm(u - e.phase * t);
    return e;
}

Su2Matrix pick(const Eigen::MatrixXcd& m, int a, int b)
{
    Su2Matrix s;
    s << m(a, a), m(a, b), m(b, a), m(b, b);
    return s;
}

} // namespace

double FidelityReport::sqm_error_sum() const
{
    double s = 0.0;
    for (const auto& b : sqm_blocks) s += b.raw;
    for (double e : boundary_errors) s += e;
    return s;
}

double spectral_norm(const Eigen::MatrixXcd& m)
{
    if (m.size() == 0) return 0.0;
    return Eigen::JacobiSVD<Eigen::MatrixXcd>(m).singularValues()(0);
}

double leakage(const BlockUnitary& u)
{
    const int d = u.dims.comp_dim();
    const int dim = u.dims.dim();
    double worst = 0.0;
    for (int c = 0; c < d; ++c)
        worst = std::max(worst, u.matrix.col(c).segment(d, dim - d).squaredNorm());
    return worst;
}

FidelityReport unitary_report(const BlockUnitary& u, const Eigen::MatrixXcd& target)
{
    const int n = u.dims.n;
    const int d = u.dims.comp_dim();
    if (target.rows() != d || target.cols() != d)
        throw std::invalid_argument("fidelity_report: target dimension does not match 2(n+1)");
    if (u.dims.guards < 1) throw std::invalid_argument("fidelity_report: at least one guard level is required");
    const Eigen::MatrixXcd uc = u.matrix.topLeftCorner(d, d);

    FidelityReport r;
    r.leakage = leakage(u);
    for (int j = 1; j <= n; ++j) r.sqm_blocks.push_back(compare_block(j, pick(uc, 2 * j, 2 * j - 1), pick(target, 2 * j, 2 * j - 1)));
    for (int j = 0; j <= n; ++j) r.cqm_blocks.push_back(compare_block(j, pick(uc, 2 * j, 2 * j + 1), pick(target, 2 * j, 2 * j + 1)));
    r.boundary_phases = {uc(0, 0), uc(d - 1, d - 1)};
    r.boundary_errors = {std::abs(uc(0, 0) - target(0, 0)), std::abs(uc(d - 1, d - 1) - target(d - 1, d - 1))};
    // Rounding can push the overlap a few ulps past 1.
    r.global_fidelity = std::min(1.0, std::abs((target.adjoint() * uc).trace()) / d);
    r.global_error = spectral_norm(uc - target);
    r.sqm_residual = block_decompose(u, Manifold::sQM).residual;
    r.cqm_residual = block_decompose(u, Manifold::cQM).residual;
    return r;
}

FidelityReport fidelity_report(const PulseSequence& seq, const QOQuditDims& dims, const Eigen::MatrixXcd& target)
{
    if (target.rows() != dims.comp_dim() || target.cols() != dims.comp_dim())
        throw std::invalid_argument("fidelity_report: target dimension does not match 2(n+1)");
    return unitary_report(apply_sequence(seq, dims), target);
}

Eigen::MatrixXcd sqm_block_target(int n, int block, const Su2Matrix& b)
{
    if (block < 1 || block > n) throw std::invalid_argument("sqm_block_target: block must lie in 1..n");
    const int d = 2 * (n + 1);
    Eigen::MatrixXcd m = Eigen::MatrixXcd::Identity(d, d);
    const int a = 2 * block, c = 2 * block - 1;
    m(a, a) = b(0, 0);
    m(a, c) = b(0, 1);
    m(c, a) = b(1, 0);
    m(c, c) = b(1, 1);
    return m;
}

Eigen::MatrixXcd sqm_block_target(int n, int block, const Su2Matrix& b, const std::vector<int>& signs)
{
    if (static_cast<int>(signs.size()) < n) throw std::invalid_argument("sqm_block_target: need a sign per block 1..n");
    Eigen::MatrixXcd m = sqm_block_target(n, block, b);
    for (int j = 1; j <= n; ++j) {
        if (j == block || signs[static_cast<std::size_t>(j - 1)] > 0) continue;
        m.block(2 * j - 1, 2 * j - 1, 2, 2) *= -1.0;
    }
    if (static_cast<int>(signs.size()) > n && signs[static_cast<std::size_t>(n)] < 0) m(2 * n + 1, 2 * n + 1) *= -1.0;
    return m;
}

Eigen::MatrixXcd cqm_block_target(int n, int block, const Su2Matrix& b)
{
    if (block < 0 || block > n) throw std::invalid_argument("cqm_block_target: block must lie in 0..n");
    const int d = 2 * (n + 1);
    Eigen::MatrixXcd m = Eigen::MatrixXcd::Identity(d, d);
    m.block(2 * block, 2 * block, 2, 2) = b;
    return m;
}

} // namespace qoq::verify
