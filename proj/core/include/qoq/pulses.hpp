#pragma once

#include <complex>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "qoq/rotations.hpp"

namespace qoq {

using rot::cplx;
using rot::Su2Matrix;

enum class PulseKind { Carrier, RedSideband };

// Maps phi into (-pi, pi].
double canonical_phi(double phi);

struct Pulse {
    PulseKind kind = PulseKind::RedSideband;
    double theta = 0.0;
    double phi = 0.0;

    static Pulse carrier(double theta, double phi) { return {PulseKind::Carrier, theta, canonical_phi(phi)}; }
    static Pulse sideband(double theta, double phi) { return {PulseKind::RedSideband, theta, canonical_phi(phi)}; }

    bool operator==(const Pulse&) const = default;
};

// Application order: pulses[0] acts first, so the matrix is P_last ... P_0.
struct PulseSequence {
    std::vector<Pulse> pulses;
    int n = 0;
    std::string tag;

    std::size_t size() const { return pulses.size(); }
    bool empty() const { return pulses.empty(); }
    void append(const std::vector<Pulse>& more) { pulses.insert(pulses.end(), more.begin(), more.end()); }
    void append(const PulseSequence& more) { append(more.pulses); }
};

// Reversed order with negated angles.
std::vector<Pulse> inverse(const std::vector<Pulse>& pulses);
PulseSequence inverse(const PulseSequence& seq);

struct QOQuditDims {
    int n = 1;
    int guards = 1;

    int dim() const { return 2 * (n + 1 + guards); }
    int comp_dim() const { return 2 * (n + 1); }
    static int index(int qubit, int fock) { return 2 * fock + qubit; }
};

struct DrivePhysicalParams {
    double mu_B_t_over_hbar = 0.0;
    double eta = 0.0;
    int m = 0;
    double Phi = 0.0;
};

struct PulseAngles {
    double theta;
    double phi;
};

struct BlockUnitary {
    Eigen::MatrixXcd matrix;
    QOQuditDims dims;
};

enum class Manifold { sQM, cQM };

struct BlockReport {
    Manifold manifold = Manifold::sQM;
    // Block index of blocks[0]: 1 for sQM, 0 for cQM.
    int first_index = 1;
    std::vector<Su2Matrix> blocks;
    // sQM: |0,0> then the uncoupled top state |1,n+g>. cQM: empty.
    std::vector<cplx> boundary_phases;
    double residual = 0.0;

    const Su2Matrix& block(int j) const { return blocks.at(static_cast<std::size_t>(j - first_index)); }
};

// [[cos(a/2), i e^{-i phi} sin(a/2)], [i e^{i phi} sin(a/2), cos(a/2)]]
Su2Matrix inplane_block(double angle, double phi);
Su2Matrix carrier_block(double theta, double phi);
// Q_j on {|0,j>, |1,j-1>}, rotation angle sqrt(j) theta.
Su2Matrix sideband_block(int j, double theta, double phi);

BlockUnitary identity_unitary(const QOQuditDims& dims);
BlockUnitary carrier_unitary(const Pulse& p, const QOQuditDims& dims);
BlockUnitary sideband_unitary(const Pulse& p, const QOQuditDims& dims);
BlockUnitary pulse_unitary(const Pulse& p, const QOQuditDims& dims);

double closing_angle(int n);

PulseAngles physical_pulse_params(const DrivePhysicalParams& d);

BlockUnitary apply_sequence(const PulseSequence& seq, const QOQuditDims& dims);
BlockUnitary apply_sequence(const std::vector<Pulse>& pulses, const QOQuditDims& dims);

// Product of sQM block j over a sideband-only list (carrier pulses rejected).
Su2Matrix sideband_block_product(const std::vector<Pulse>& pulses, int j);

BlockReport block_decompose(const BlockUnitary& u, Manifold manifold);

} // namespace qoq
