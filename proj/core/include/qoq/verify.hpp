#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>

#include "qoq/pulses.hpp"

namespace qoq::verify {

struct BlockError {
    int index = 0;
    // Spectral-norm distance to the target block.
    double raw = 0.0;
    // Same after removing the best common phase.
    double aligned = 0.0;
    cplx phase{1.0, 0.0};
};

struct FidelityReport {
    double leakage = 0.0;
    // Computational sQM blocks 1..n and cQM blocks 0..n.
    std::vector<BlockError> sqm_blocks;
    std::vector<BlockError> cqm_blocks;
    double global_fidelity = 0.0;
    // Spectral norm of U_comp - target.
    double global_error = 0.0;
    // Diagonal entries of U on |0,0> and |1,n> (the states outside sQM blocks 1..n).
    std::vector<cplx> boundary_phases;
    std::vector<double> boundary_errors;
    double sqm_residual = 0.0;
    double cqm_residual = 0.0;

    double sqm_error_sum() const;
    const BlockError& sqm(int j) const { return sqm_blocks.at(static_cast<std::size_t>(j - 1)); }
};

double spectral_norm(const Eigen::MatrixXcd& m);

// Max over computational inputs of the probability found in guard levels.
double leakage(const BlockUnitary& u);

FidelityReport unitary_report(const BlockUnitary& u, const Eigen::MatrixXcd& target);
FidelityReport fidelity_report(const PulseSequence& seq, const QOQuditDims& dims, const Eigen::MatrixXcd& target);

// Computational-space matrix of I on every sQM block except `block` (1..n), which gets `b`.
Eigen::MatrixXcd sqm_block_target(int n, int block, const Su2Matrix& b);
// As sqm_block_target with recorded signs for blocks 1..n and, when present, sign n+1 on |1,n>.
Eigen::MatrixXcd sqm_block_target(int n, int block, const Su2Matrix& b, const std::vector<int>& signs);
// Same for a cQM block 0..n.
Eigen::MatrixXcd cqm_block_target(int n, int block, const Su2Matrix& b);

struct GgmBasis {
    int d = 0;
    std::vector<Eigen::MatrixXcd> z_type;
    // Ordered by (j, k), j < k.
    std::vector<Eigen::MatrixXcd> x_type;
    std::vector<Eigen::MatrixXcd> y_type;
    std::vector<std::pair<int, int>> pairs;

    std::vector<Eigen::MatrixXcd> all() const;
    std::size_t size() const { return z_type.size() + x_type.size() + y_type.size(); }
};

GgmBasis ggm_basis(int d);

struct CommutatorReport {
    bool ok = true;
    double max_violation = 0.0;
    std::size_t relations_checked = 0;
    std::vector<std::string> violations;
    // The YY family with the alternative right-hand side in terms of X-type matrices.
    std::size_t yy_real_form_violations = 0;
};

CommutatorReport ggm_commutator_check(const GgmBasis& basis, double tol = 1e-12);

int lie_closure_dimension(const std::vector<Eigen::MatrixXcd>& generators, double rel_tol = 1e-9);

// Carrier and red-sideband x/y generators restricted to the computational block, plus the
// carrier generators conjugated by closing-angle sideband pulses (phi = 0, pi/2).
std::vector<Eigen::MatrixXcd> qo_generators(int n);

} // namespace qoq::verify
