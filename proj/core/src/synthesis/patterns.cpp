#include "qoq/synthesis.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace qoq::synth {

using rot::pi;

ElementaryCache::ElementaryCache(int n, CleaningOptions opts) : n_(n), opts_(std::move(opts))
{
    if (n < 1) throw std::invalid_argument("ElementaryCache: n must be >= 1");
    opts_.clean_boundary = true;
}

const std::vector<Pulse>& ElementaryCache::get(int k, ElementarySigma sigma)
{
    if (k < 1 || k > n_ + 1) throw std::invalid_argument("ElementaryCache: k must lie in 1..n+1");
    const auto key = std::make_pair(k, static_cast<int>(sigma));
    auto it = memo_.find(key);
    if (it != memo_.end()) return it->second;
    std::vector<Pulse> pulses;
    if (k > n_) {
        pulses = synthesize_boundary_elementary(n_, sigma).pulses;
    } else {
        ElementaryResult r = synthesize_elementary_detailed(n_, k, sigma, opts_);
        pulses = std::move(r.sequence.pulses);
        // Sign patterns need +I off block k; X X has it by construction.
        const bool exact = std::all_of(r.block_signs.begin(), r.block_signs.end(), [](int s) { return s > 0; });
        if (sigma == ElementarySigma::MinusI && !exact) {
            const std::vector<Pulse>& x = get(k, ElementarySigma::X);
            pulses = x;
            pulses.insert(pulses.end(), x.begin(), x.end());
        }
    }
    return memo_.emplace(key, std::move(pulses)).first->second;
}

PulseSequence synthesize_z_pattern(int n, int exempt, ElementaryCache& cache)
{
    if (exempt < 1 || exempt > n) throw std::invalid_argument("synthesize_z_pattern: exempt must lie in 1..n");
    if (cache.n() != n) throw std::invalid_argument("synthesize_z_pattern: cache built for a different n");
    PulseSequence seq;
    seq.n = n;
    seq.tag = "z-pattern n=" + std::to_string(n) + " exempt=" + std::to_string(exempt);
    for (int j = 1; j <= n + 1; ++j) {
        if (j == exempt) continue;
        // Z_j = X_j Y_j: Y acts first.
        seq.append(cache.get(j, ElementarySigma::Y));
        seq.append(cache.get(j, ElementarySigma::X));
    }
    return seq;
}

PulseSequence synthesize_z_pattern(int n, int exempt)
{
    ElementaryCache cache(n);
    return synthesize_z_pattern(n, exempt, cache);
}

namespace {

Su2Matrix special(const Su2Matrix& w)
{
    if (!rot::is_unitary(w, 1e-9)) throw std::invalid_argument("rotation target is not unitary");
    const cplx det = w.determinant();
    return w / std::sqrt(det);
}

// Emits V P^dagger V P per in-plane factor; the rightmost factor acts first.
PulseSequence refocused(const std::vector<rot::AxisAngle>& factors, const std::vector<Pulse>& pattern,
                        PulseKind kind, double angle_scale)
{
    const std::vector<Pulse> pattern_inv = inverse(pattern);
    PulseSequence seq;
    for (auto it = factors.rbegin(); it != factors.rend(); ++it) {
        const double theta = it->angle * angle_scale;
        const double phi = std::atan2(it->axis.y(), it->axis.x());
        const Pulse v = kind == PulseKind::Carrier ? Pulse::carrier(theta, phi) : Pulse::sideband(theta, phi);
        seq.append(pattern);
        seq.pulses.push_back(v);
        seq.append(pattern_inv);
        seq.pulses.push_back(v);
    }
    return seq;
}

} // namespace

PulseSequence synthesize_sqm_rotation(int n, int k, const Su2Matrix& w, ElementaryCache& cache)
{
    if (k < 1 || k > n) throw std::invalid_argument("synthesize_sqm_rotation: k must lie in 1..n");
    const Su2Matrix ws = special(w);
    const std::vector<rot::AxisAngle> factors = exact_inplane_factors(ws);
    PulseSequence seq;
    if (!factors.empty()) {
        const PulseSequence z = synthesize_z_pattern(n, k, cache);
        seq = refocused(factors, z.pulses, PulseKind::RedSideband, 0.5 / std::sqrt(static_cast<double>(k)));
    }
    seq.n = n;
    seq.tag = "sqm-rotation n=" + std::to_string(n) + " k=" + std::to_string(k);
    return seq;
}

PulseSequence synthesize_sqm_rotation(int n, int k, const Su2Matrix& w)
{
    ElementaryCache cache(n);
    return synthesize_sqm_rotation(n, k, w, cache);
}

const char* to_string(CarrierPattern p)
{
    switch (p) {
    case CarrierPattern::Z: return "Z";
    case CarrierPattern::MinusZ: return "-Z";
    case CarrierPattern::I: return "I";
    case CarrierPattern::MinusI: return "-I";
    }
    return "?";
}

namespace {

// (sign on |0,i>, sign on |1,i>)
std::pair<int, int> carrier_signs(CarrierPattern p)
{
    switch (p) {
    case CarrierPattern::Z: return {1, -1};
    case CarrierPattern::MinusZ: return {-1, 1};
    case CarrierPattern::I: return {1, 1};
    case CarrierPattern::MinusI: return {-1, -1};
    }
    return {1, 1};
}

} // namespace

std::vector<int> sqm_sign_pattern_for_cqm(const std::vector<CarrierPattern>& target)
{
    std::vector<int> w(target.size() + 1, 1);
    for (std::size_t i = 0; i < target.size(); ++i) {
        const auto [lo, hi] = carrier_signs(target[i]);
        if (lo != w[i]) {
            std::ostringstream os;
            os << "inconsistent carrier pattern at carrier block " << i << ": " << to_string(target[i])
               << " needs sign " << lo << " on |0," << i << "> but the sideband chain fixes " << w[i];
            throw std::invalid_argument(os.str());
        }
        w[i + 1] = hi;
    }
    return {w.begin() + 1, w.end()};
}

std::vector<CarrierPattern> cqm_pattern_from_sqm_signs(const std::vector<int>& signs)
{
    std::vector<CarrierPattern> out;
    int prev = 1;
    for (int s : signs) {
        if (s != 1 && s != -1) throw std::invalid_argument("sideband signs must be +1 or -1");
        if (prev == s)
            out.push_back(s > 0 ? CarrierPattern::I : CarrierPattern::MinusI);
        else
            out.push_back(prev > 0 ? CarrierPattern::Z : CarrierPattern::MinusZ);
        prev = s;
    }
    return out;
}

std::vector<int> cqm_refocus_signs(int n, int k)
{
    if (k < 0 || k > n) throw std::invalid_argument("cqm_refocus_signs: k must lie in 0..n");
    std::vector<int> w(static_cast<std::size_t>(n + 1));
    int prev = 1;
    for (int i = 0; i <= n; ++i) {
        prev = i == k ? prev : -prev;
        w[static_cast<std::size_t>(i)] = prev;
    }
    return w;
}

PulseSequence synthesize_sign_pattern(int n, const std::vector<int>& signs, ElementaryCache& cache)
{
    if (static_cast<int>(signs.size()) != n + 1)
        throw std::invalid_argument("synthesize_sign_pattern: need one sign per sideband block 1..n+1");
    if (cache.n() != n) throw std::invalid_argument("synthesize_sign_pattern: cache built for a different n");
    PulseSequence seq;
    seq.n = n;
    for (int j = 1; j <= n + 1; ++j)
        if (signs[static_cast<std::size_t>(j - 1)] < 0) seq.append(cache.get(j, ElementarySigma::MinusI));
    seq.tag = "sign-pattern n=" + std::to_string(n);
    return seq;
}

PulseSequence synthesize_cqm_rotation(int n, int k, const Su2Matrix& w, ElementaryCache& cache)
{
    if (k < 0 || k > n) throw std::invalid_argument("synthesize_cqm_rotation: k must lie in 0..n");
    const Su2Matrix ws = special(w);
    const std::vector<rot::AxisAngle> factors = exact_inplane_factors(ws);
    PulseSequence seq;
    if (!factors.empty()) {
        const PulseSequence pattern = synthesize_sign_pattern(n, cqm_refocus_signs(n, k), cache);
        seq = refocused(factors, pattern.pulses, PulseKind::Carrier, 0.5);
    }
    seq.n = n;
    seq.tag = "cqm-rotation n=" + std::to_string(n) + " k=" + std::to_string(k);
    return seq;
}

PulseSequence synthesize_cqm_rotation(int n, int k, const Su2Matrix& w)
{
    ElementaryCache cache(n);
    return synthesize_cqm_rotation(n, k, w, cache);
}

} // namespace qoq::synth
