#include "qoq/pulses.hpp"

#include <cmath>
#include <stdexcept>

namespace qoq {

using rot::pi;

namespace {

void check_dims(const QOQuditDims& dims)
{
    if (dims.n < 1 || dims.guards < 0)
        throw std::invalid_argument("QOQuditDims: need n >= 1 and guards >= 0");
}

void left_multiply_rows(Eigen::MatrixXcd& u, int a, int b, const Su2Matrix& blk)
{
    const Eigen::RowVectorXcd ra = u.row(a);
    const Eigen::RowVectorXcd rb = u.row(b);
    u.row(a) = blk(0, 0) * ra + blk(0, 1) * rb;
    u.row(b) = blk(1, 0) * ra + blk(1, 1) * rb;
}

void apply_in_place(Eigen::MatrixXcd& u, const Pulse& p, const QOQuditDims& dims)
{
    const int top = dims.n + dims.guards;
    if (p.kind == PulseKind::Carrier) {
        const Su2Matrix blk = carrier_block(p.theta, p.phi);
        for (int j = 0; j <= top; ++j)
            left_multiply_rows(u, 2 * j, 2 * j + 1, blk);
    } else {
        for (int j = 1; j <= top; ++j)
            left_multiply_rows(u, 2 * j, 2 * j - 1, sideband_block(j, p.theta, p.phi));
    }
}

} // namespace

double canonical_phi(double phi)
{
    if (!std::isfinite(phi))
        throw std::invalid_argument("pulse phase must be finite");
    double r = std::remainder(phi, 2.0 * pi);
    if (r <= -pi) r += 2.0 * pi;
    return r;
}

std::vector<Pulse> inverse(const std::vector<Pulse>& pulses)
{
    std::vector<Pulse> out;
    out.reserve(pulses.size());
    for (auto it = pulses.rbegin(); it != pulses.rend(); ++it)
        out.push_back({it->kind, -it->theta, it->phi});
    return out;
}

PulseSequence inverse(const PulseSequence& seq)
{
    PulseSequence out = seq;
    out.pulses = inverse(seq.pulses);
    return out;
}

Su2Matrix inplane_block(double angle, double phi)
{
    const double c = std::cos(0.5 * angle);
    const double s = std::sin(0.5 * angle);
    const cplx i1(0.0, 1.0);
    Su2Matrix m;
    m << c, i1 * std::exp(-i1 * phi) * s, i1 * std::exp(i1 * phi) * s, c;
    return m;
}

Su2Matrix carrier_block(double theta, double phi) { return inplane_block(theta, phi); }

Su2Matrix sideband_block(int j, double theta, double phi)
{
    return inplane_block(std::sqrt(static_cast<double>(j)) * theta, phi);
}

BlockUnitary identity_unitary(const QOQuditDims& dims)
{
    check_dims(dims);
    return {Eigen::MatrixXcd::Identity(dims.dim(), dims.dim()), dims};
}

BlockUnitary carrier_unitary(const Pulse& p, const QOQuditDims& dims)
{
    if (p.kind != PulseKind::Carrier)
        throw std::invalid_argument("carrier_unitary: pulse is not a carrier pulse");
    BlockUnitary u = identity_unitary(dims);
    apply_in_place(u.matrix, p, dims);
    return u;
}

BlockUnitary sideband_unitary(const Pulse& p, const QOQuditDims& dims)
{
    if (p.kind != PulseKind::RedSideband)
        throw std::invalid_argument("sideband_unitary: pulse is not a red sideband pulse");
    if (dims.guards < 1)
        throw std::invalid_argument("sideband_unitary: at least one guard level is required");
    BlockUnitary u = identity_unitary(dims);
    apply_in_place(u.matrix, p, dims);
    return u;
}

BlockUnitary pulse_unitary(const Pulse& p, const QOQuditDims& dims)
{
    return p.kind == PulseKind::Carrier ? carrier_unitary(p, dims) : sideband_unitary(p, dims);
}

double closing_angle(int n)
{
    if (n < 0)
        throw std::invalid_argument("closing_angle: n must be non-negative");
    return 2.0 * pi / std::sqrt(static_cast<double>(n + 1));
}

PulseAngles physical_pulse_params(const DrivePhysicalParams& d)
{
    const double factorial = d.m == 0 ? 1.0 : std::tgamma(d.m + 1.0);
    const double theta = -d.mu_B_t_over_hbar * std::pow(d.eta, d.m) / (2.0 * factorial);
    const double phi = d.Phi + static_cast<double>(d.m % 4) * 0.5 * pi;
    return {theta, phi};
}

BlockUnitary apply_sequence(const std::vector<Pulse>& pulses, const QOQuditDims& dims)
{
    if (dims.guards < 1)
        throw std::invalid_argument("apply_sequence: at least one guard level is required");
    BlockUnitary u = identity_unitary(dims);
    for (const Pulse& p : pulses)
        apply_in_place(u.matrix, p, dims);
    return u;
}

BlockUnitary apply_sequence(const PulseSequence& seq, const QOQuditDims& dims)
{
    return apply_sequence(seq.pulses, dims);
}

Su2Matrix sideband_block_product(const std::vector<Pulse>& pulses, int j)
{
    Su2Matrix m = Su2Matrix::Identity();
    for (const Pulse& p : pulses) {
        if (p.kind != PulseKind::RedSideband)
            throw std::invalid_argument("sideband_block_product: carrier pulse in list");
        m = sideband_block(j, p.theta, p.phi) * m;
    }
    return m;
}

BlockReport block_decompose(const BlockUnitary& u, Manifold manifold)
{
    const int dim = u.dims.dim();
    const int top = u.dims.n + u.dims.guards;
    BlockReport rep;
    rep.manifold = manifold;
    std::vector<int> owner(static_cast<std::size_t>(dim));
    const auto& m = u.matrix;

    if (manifold == Manifold::sQM) {
        rep.first_index = 1;
        owner[0] = 0;
        for (int j = 1; j <= top; ++j) {
            const int a = 2 * j, b = 2 * j - 1;
            owner[a] = owner[b] = j;
            Su2Matrix blk;
            blk << m(a, a), m(a, b), m(b, a), m(b, b);
            rep.blocks.push_back(blk);
        }
        owner[dim - 1] = top + 1;
        rep.boundary_phases = {m(0, 0), m(dim - 1, dim - 1)};
    } else {
        rep.first_index = 0;
        for (int j = 0; j <= top; ++j) {
            const int a = 2 * j, b = 2 * j + 1;
            owner[a] = owner[b] = j;
            Su2Matrix blk;
            blk << m(a, a), m(a, b), m(b, a), m(b, b);
            rep.blocks.push_back(blk);
        }
    }

    double residual = 0.0;
    for (int c = 0; c < dim; ++c)
        for (int r = 0; r < dim; ++r)
            if (owner[r] != owner[c])
                residual = std::max(residual, std::abs(m(r, c)));
    rep.residual = residual;
    return rep;
}

} // namespace qoq
