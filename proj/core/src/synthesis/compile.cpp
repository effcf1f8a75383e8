#include "qoq/synthesis.hpp"

#include <cmath>

namespace qoq::synth {

namespace {

const cplx I1{0.0, 1.0};

Su2Matrix swap_gate() { return (Su2Matrix() << 0, I1, I1, 0).finished(); }

// Gate on the adjacent computational indices (a, a+1), written in index order.
PulseSequence adjacent_gate(int n, int a, const Su2Matrix& gate, ElementaryCache& cache)
{
    if (a % 2 == 0) return synthesize_cqm_rotation(n, a / 2, gate, cache);
    // sQM block (a+1)/2 lists |0,j> = index a+1 before |1,j-1> = index a.
    const Su2Matrix& sx = rot::sigma_x();
    return synthesize_sqm_rotation(n, (a + 1) / 2, sx * gate * sx, cache);
}

PulseSequence two_level_indices(int n, int a, int b, Su2Matrix gate, ElementaryCache& cache)
{
    const int d = 2 * (n + 1);
    if (a < 0 || b < 0 || a >= d || b >= d || a == b)
        throw std::invalid_argument("two-level target outside the computational space");
    if (!rot::is_unitary(gate, 1e-9)) throw std::invalid_argument("two-level gate is not unitary");
    gate /= std::sqrt(gate.determinant());
    if (a > b) {
        std::swap(a, b);
        gate = rot::sigma_x() * gate * rot::sigma_x();
    }
    if (b == a + 1) return adjacent_gate(n, a, gate, cache);

    // Walk b down to a+1 with swaps; each contributes a factor i.
    std::vector<PulseSequence> swaps;
    for (int i = b - 1; i >= a + 1; --i) swaps.push_back(adjacent_gate(n, i, swap_gate(), cache));
    cplx ph = 1.0;
    for (int i = 0; i < b - a - 1; ++i) ph *= I1;
    Su2Matrix dphase = Su2Matrix::Identity();
    dphase(1, 1) = ph;
    const Su2Matrix core = dphase * gate * dphase.adjoint();

    PulseSequence seq;
    seq.n = n;
    for (const auto& s : swaps) seq.append(s);
    seq.append(adjacent_gate(n, a, core, cache));
    for (auto it = swaps.rbegin(); it != swaps.rend(); ++it) seq.append(inverse(*it));
    return seq;
}

} // namespace

Eigen::MatrixXcd two_level_matrix(int d, int a, int b, const Su2Matrix& gate)
{
    Eigen::MatrixXcd m = Eigen::MatrixXcd::Identity(d, d);
    m(a, a) = gate(0, 0);
    m(a, b) = gate(0, 1);
    m(b, a) = gate(1, 0);
    m(b, b) = gate(1, 1);
    return m;
}

PulseSequence synthesize_two_level(int n, const TwoLevelTarget& target, ElementaryCache& cache)
{
    if (target.bra.fock > target.ket.fock)
        throw std::invalid_argument("synthesize_two_level: bra Fock level must not exceed ket Fock level");
    for (const LevelState& s : {target.bra, target.ket})
        if (s.qubit < 0 || s.qubit > 1 || s.fock < 0 || s.fock > n)
            throw std::invalid_argument("synthesize_two_level: state outside the computational space");
    const int a = QOQuditDims::index(target.bra.qubit, target.bra.fock);
    const int b = QOQuditDims::index(target.ket.qubit, target.ket.fock);
    PulseSequence seq = two_level_indices(n, a, b, target.gate, cache);
    seq.n = n;
    seq.tag = "two-level n=" + std::to_string(n) + " (" + std::to_string(a) + "," + std::to_string(b) + ")";
    return seq;
}

PulseSequence synthesize_two_level(int n, const TwoLevelTarget& target)
{
    ElementaryCache cache(n);
    return synthesize_two_level(n, target, cache);
}

CompileResult compile_unitary(int n, const Eigen::MatrixXcd& target, const CleaningOptions& opts)
{
    const int d = 2 * (n + 1);
    if (n < 1 || target.rows() != d || target.cols() != d)
        throw std::invalid_argument("compile_unitary: target must be 2(n+1) x 2(n+1)");
    if (!rot::is_unitary(target, 1e-10)) throw std::invalid_argument("compile_unitary: target is not unitary");

    CompileResult res;
    const cplx det = target.determinant();
    res.normalized_target = target * std::pow(det, -1.0 / d);

    // Adjacent special-unitary Givens rotations reduce the target to the identity.
    Eigen::MatrixXcd w = res.normalized_target;
    std::vector<TwoLevelFactor> eliminations;
    for (int c = 0; c < d - 1; ++c) {
        for (int r = d - 1; r > c; --r) {
            const cplx x = w(r - 1, c);
            const cplx y = w(r, c);
            const bool last = r == c + 1;
            if (std::abs(y) < 1e-14 && (!last || std::abs(x - 1.0) < 1e-14)) continue;
            const double norm = std::sqrt(std::norm(x) + std::norm(y));
            Su2Matrix g;
            g << std::conj(x) / norm, std::conj(y) / norm, -y / norm, x / norm;
            const Eigen::MatrixXcd rows = w.middleRows(r - 1, 2);
            w.middleRows(r - 1, 2) = g * rows;
            eliminations.push_back({r - 1, r, g, 0, 0});
        }
    }

    // target = G_1^dagger ... G_m^dagger, so G_m^dagger acts first.
    ElementaryCache cache(n, opts);
    res.sequence.n = n;
    res.sequence.tag = "compiled n=" + std::to_string(n);
    for (auto it = eliminations.rbegin(); it != eliminations.rend(); ++it) {
        TwoLevelFactor f = *it;
        f.gate = it->gate.adjoint();
        f.first_pulse = res.sequence.size();
        res.sequence.append(two_level_indices(n, f.a, f.b, f.gate, cache));
        f.pulse_count = res.sequence.size() - f.first_pulse;
        res.factors.push_back(f);
    }
    return res;
}

} // namespace qoq::synth
