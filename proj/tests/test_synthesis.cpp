#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <random>

#include "oracle.hpp"
#include "qoq/synthesis.hpp"
#include "qoq/verify.hpp"

using namespace qoq;
using namespace qoq::synth;
using rot::pi;

namespace {

double max_abs(const Eigen::MatrixXcd& m) { return m.cwiseAbs().maxCoeff(); }

double count_bound(int n, int l) { return (l + 1) * (std::ldexp(1.0, n) - 4.0) + 8.0; }

Eigen::MatrixXcd comp_block(const std::vector<Pulse>& pulses, int n, int guards = 2)
{
    const int d = 2 * (n + 1);
    return oracle::simulate(pulses, n + 1 + guards).topLeftCorner(d, d);
}

// Max spectral error of sQM blocks 1..upto against Sigma on k and the recorded sign elsewhere.
double elementary_error(const Eigen::MatrixXcd& dense, int k, int upto, const Su2Matrix& sigma,
                        const std::vector<int>& signs)
{
    double worst = 0.0;
    for (int j = 1; j <= upto; ++j) {
        const Su2Matrix target = j == k ? sigma : Su2Matrix(signs.at(std::size_t(j - 1)) * Su2Matrix::Identity());
        worst = std::max(worst, oracle::spectral(oracle::sqm_block(dense, j) - target));
    }
    return worst;
}

} // namespace

TEST_CASE("direct constructions for n = 1 and n = 2")
{
    const Su2Matrix X = sigma_matrix(ElementarySigma::X);
    // The four-pulse sequences with phi_1 = acos(cot(pi/sqrt2)) and phi_2 = acos(cot(sqrt2 pi)).
    const double phi1 = std::acos(1.0 / std::tan(pi / std::sqrt(2.0)));
    const double phi2 = std::acos(1.0 / std::tan(std::sqrt(2.0) * pi));
    const PulseSequence s1 = direct_small_n(2, 1, ElementarySigma::X);
    const PulseSequence s2 = direct_small_n(2, 2, ElementarySigma::X);
    REQUIRE(s1.size() == 4);
    REQUIRE(s2.size() == 4);
    CHECK(s1.pulses[1].phi == doctest::Approx(phi1).epsilon(1e-15));
    CHECK(s2.pulses[1].phi == doctest::Approx(phi2).epsilon(1e-15));

    const Eigen::MatrixXcd u1 = oracle::simulate(s1.pulses, 5);
    CHECK(max_abs(oracle::sqm_block(u1, 1) - X) < 1e-10);
    CHECK(max_abs(oracle::sqm_block(u1, 2) - Su2Matrix::Identity()) < 1e-10);
    const Eigen::MatrixXcd u2 = oracle::simulate(s2.pulses, 5);
    CHECK(max_abs(oracle::sqm_block(u2, 1) - Su2Matrix::Identity()) < 1e-10);
    CHECK(max_abs(oracle::sqm_block(u2, 2) - X) < 1e-10);

    const Eigen::MatrixXcd y = oracle::simulate(direct_small_n(2, 1, ElementarySigma::Y).pulses, 5);
    CHECK(max_abs(oracle::sqm_block(y, 1) - sigma_matrix(ElementarySigma::Y)) < 1e-10);
}

TEST_CASE("base-case angle formula matches simulation")
{
    std::mt19937_64 rng(21);
    std::uniform_int_distribution<int> pick(1, 12);
    int checked = 0;
    while (checked < 100) {
        const int k = pick(rng), m1 = pick(rng), m2 = pick(rng);
        if (m1 == m2 || !mu_admissible(k, m1) || !mu_admissible(k, m2)) continue;
        const Eigen::MatrixXcd u = oracle::simulate(base_case_pulses(m1, m2), std::max({k, m1, m2}) + 2);
        CHECK(std::abs(base_case_angle(k, m1, m2) - oracle::su2_angle(oracle::sqm_block(u, k))) < 1e-8);
        // The cleaned pair returns to the identity.
        CHECK(max_abs(oracle::sqm_block(u, m1) - Su2Matrix::Identity()) < 1e-12);
        ++checked;
    }
    CHECK_FALSE(mu_admissible(4, 1));
    CHECK_FALSE(mu_admissible(8, 2));
    CHECK(mu_admissible(3, 1));
}

TEST_CASE("step prediction matches brute-force block products")
{
    std::mt19937_64 rng(22);
    std::uniform_real_distribution<double> th(-2 * pi, 2 * pi), ph(-pi, pi), ang(0.05, 2 * pi - 0.05);
    std::uniform_int_distribution<int> pick(1, 9);
    for (int i = 0; i < 100; ++i) {
        const int k = pick(rng);
        const Eigen::Vector3d axis = oracle::random_axis(rng);
        const double angle = ang(rng);
        const std::vector<Pulse> c = {Pulse::sideband(th(rng), ph(rng)), Pulse::sideband(th(rng), ph(rng))};
        const StepPrediction p = predict_step(axis, angle, c, k);

        const Su2Matrix w = oracle::su2_exp(axis, angle);
        const Su2Matrix cb = oracle::sqm_block(oracle::simulate(c, k + 1), k);
        CHECK(std::abs(p.theta_ab - oracle::su2_angle(cb)) < 1e-8);
        const Su2Matrix next = w * cb * w * cb.adjoint();
        CHECK(std::abs(p.next_angle - oracle::su2_angle(next)) < 1e-8);
    }
}

TEST_CASE("either threshold keeps the tracked angle from shrinking")
{
    std::mt19937_64 rng(23);
    std::uniform_real_distribution<double> th(-2 * pi, 2 * pi), ph(-pi, pi);
    const double small = pi / 1000.0;
    int tested = 0;
    for (int i = 0; i < 2000; ++i) {
        const Eigen::Vector3d axis = oracle::random_axis(rng);
        const std::vector<Pulse> c = {Pulse::sideband(th(rng), ph(rng)), Pulse::sideband(th(rng), ph(rng))};
        const StepPrediction p = predict_step(axis, small, c, 1);
        const bool cond = std::cos(p.theta_ab) > -0.5 || std::abs(axis.dot(p.r_ab)) > 0.5;
        if (!cond) continue;
        ++tested;
        CHECK(p.k_dot_kab > -0.5);
        CHECK(p.next_angle >= small * (1.0 - 1e-6));
    }
    CHECK(tested > 500);
}

TEST_CASE("intermediate sequences follow 2^(j+1) - 4")
{
    CleaningOptions opts;
    opts.clean_boundary = false;
    const SynthesisState s0 = base_case(6, 6, opts);
    CHECK(s0.sequence.size() == 4);
    SynthesisState s = s0;
    while (!s.uncleaned().empty()) {
        const HeuristicChoice c = cleaning_order_heuristic(s, opts.t_floor, opts.search_grid);
        const std::size_t before = s.sequence.size();
        s = clean_step(s, c.mu, c.params);
        if (!s.steps.back().skipped) CHECK(s.sequence.size() == 2 * before + 4);
        CHECK(std::abs(s.steps.back().predicted_angle - s.steps.back().simulated_angle) < 1e-8);
    }
    const std::size_t cleaned = s.cleaned.size();
    CHECK(s.sequence.size() <= std::ldexp(1.0, int(cleaned) + 1) - 4);
}

TEST_CASE("heuristic with a single uncleaned subspace returns it")
{
    CleaningOptions opts;
    opts.clean_boundary = false;
    opts.mu_pair = std::make_pair(1, 2);
    SynthesisState s = base_case(6, 6, opts);
    const std::vector<int> open = s.uncleaned();
    REQUIRE(open.size() >= 2);
    for (std::size_t i = 1; i < open.size(); ++i) s.cleaned.insert(open[i]);
    CHECK(cleaning_order_heuristic(s, 4).mu == open.front());
}

TEST_CASE("elementary rotations are clean on every sideband block")
{
    for (int n = 3; n <= 6; ++n)
        for (int k = 1; k <= n; ++k)
            for (ElementarySigma sg : {ElementarySigma::X, ElementarySigma::Y, ElementarySigma::MinusI}) {
                CAPTURE(n);
                CAPTURE(k);
                CAPTURE(to_string(sg));
                const ElementaryResult r = synthesize_elementary_detailed(n, k, sg);
                const Eigen::MatrixXcd dense = oracle::simulate(r.sequence.pulses, n + 3);
                REQUIRE(r.block_signs.size() == std::size_t(n + 1));
                CHECK(elementary_error(dense, k, n + 1, sigma_matrix(sg), r.block_signs) <= 1e-8);
                CHECK(double(r.sequence.size()) <= count_bound(n, r.l));
                CHECK(r.l <= std::max(4, k * k));
            }
}

TEST_CASE("three-level X target needs 16 pulses")
{
    const ElementaryResult r = synthesize_elementary_detailed(3, 3, ElementarySigma::X);
    CHECK(r.sequence.size() == 16);
    CHECK(r.l == 1);
    CleaningOptions literal;
    literal.clean_boundary = false;
    CHECK(synthesize_elementary(3, 3, ElementarySigma::X, literal).size() == 16);
}

TEST_CASE("literal mode leaves only the boundary block free")
{
    CleaningOptions literal;
    literal.clean_boundary = false;
    const ElementaryResult r = synthesize_elementary_detailed(5, 2, ElementarySigma::Y, literal);
    CHECK(r.block_signs.size() == 5);
    const Eigen::MatrixXcd dense = oracle::simulate(r.sequence.pulses, 8);
    CHECK(elementary_error(dense, 2, 5, sigma_matrix(ElementarySigma::Y), r.block_signs) <= 1e-8);
    CHECK(double(r.sequence.size()) <= count_bound(5, r.l));
}

TEST_CASE("n = 1 elementary rotation is a single pulse without boundary cleaning")
{
    CleaningOptions literal;
    literal.clean_boundary = false;
    CHECK(synthesize_elementary(1, 1, ElementarySigma::X, literal).size() == 1);
    const PulseSequence clean = synthesize_elementary(1, 1, ElementarySigma::X);
    const auto rep = verify::fidelity_report(clean, QOQuditDims{1, 2},
                                             verify::sqm_block_target(1, 1, sigma_matrix(ElementarySigma::X)));
    CHECK(rep.leakage <= 1e-10);
}

TEST_CASE("synthesis is deterministic")
{
    const PulseSequence a = synthesize_elementary(7, 4, ElementarySigma::Y);
    const PulseSequence b = synthesize_elementary(7, 4, ElementarySigma::Y);
    CHECK(a.pulses == b.pulses);
}

TEST_CASE("free beta parameter changes the sequence but keeps it clean")
{
    CleaningOptions opts;
    opts.beta_free = 0.2;
    const ElementaryResult r = synthesize_elementary_detailed(4, 2, ElementarySigma::X, opts);
    const Eigen::MatrixXcd dense = oracle::simulate(r.sequence.pulses, 7);
    CHECK(elementary_error(dense, 2, 5, sigma_matrix(ElementarySigma::X), r.block_signs) <= 1e-8);
}

TEST_CASE("conjugation by sideband pulses preserves closure")
{
    std::mt19937_64 rng(24);
    std::uniform_real_distribution<double> th(-2 * pi, 2 * pi), ph(-pi, pi);
    const std::vector<Pulse> u = synthesize_elementary(4, 2, ElementarySigma::X).pulses;
    for (int i = 0; i < 10; ++i) {
        std::vector<Pulse> c = {Pulse::sideband(th(rng), ph(rng)), Pulse::sideband(th(rng), ph(rng))};
        std::vector<Pulse> seq = inverse(c);
        seq.insert(seq.end(), u.begin(), u.end());
        seq.insert(seq.end(), c.begin(), c.end());
        const BlockUnitary b = apply_sequence(seq, QOQuditDims{4, 2});
        CHECK(block_decompose(b, Manifold::sQM).residual == 0.0);
    }
}

TEST_CASE("sideband-to-carrier conversion table")
{
    using CP = CarrierPattern;
    const std::vector<int> signs = {-1, 1, -1, 1};
    const std::vector<CP> carriers = {CP::Z, CP::MinusZ, CP::Z, CP::MinusZ};
    CHECK(cqm_pattern_from_sqm_signs(signs) == carriers);
    CHECK(sqm_sign_pattern_for_cqm(carriers) == signs);

    CHECK(sqm_sign_pattern_for_cqm({CP::I, CP::I, CP::I}) == std::vector<int>{1, 1, 1});

    for (int n = 1; n <= 6; ++n)
        for (int k = 0; k <= n; ++k) {
            const std::vector<CP> p = cqm_pattern_from_sqm_signs(cqm_refocus_signs(n, k));
            for (int i = 0; i <= n; ++i) {
                const bool z = p[std::size_t(i)] == CP::Z || p[std::size_t(i)] == CP::MinusZ;
                CHECK(z == (i != k));
            }
        }

    try {
        sqm_sign_pattern_for_cqm({CP::Z, CP::Z});
        FAIL("inconsistent pattern accepted");
    } catch (const std::invalid_argument& e) {
        CHECK(std::string(e.what()).find("carrier block 1") != std::string::npos);
    }
}

TEST_CASE("conversion table round trip is exhaustive for n <= 4")
{
    using CP = CarrierPattern;
    for (int n = 0; n <= 4; ++n) {
        const int len = n + 1;
        int consistent = 0;
        for (int code = 0; code < (1 << (2 * len)); ++code) {
            std::vector<CP> x;
            for (int i = 0; i < len; ++i) x.push_back(static_cast<CP>((code >> (2 * i)) & 3));
            try {
                const std::vector<int> s = sqm_sign_pattern_for_cqm(x);
                CHECK(cqm_pattern_from_sqm_signs(s) == x);
                ++consistent;
            } catch (const std::invalid_argument&) {
            }
        }
        CHECK(consistent == (1 << len));
        for (int code = 0; code < (1 << len); ++code) {
            std::vector<int> s;
            for (int i = 0; i < len; ++i) s.push_back((code >> i) & 1 ? -1 : 1);
            CHECK(sqm_sign_pattern_for_cqm(cqm_pattern_from_sqm_signs(s)) == s);
        }
    }
}

TEST_CASE("sign patterns act as the predicted carrier diagonal")
{
    const int n = 3;
    ElementaryCache cache(n);
    for (int code = 0; code < (1 << (n + 1)); ++code) {
        std::vector<int> s;
        for (int i = 0; i <= n; ++i) s.push_back((code >> i) & 1 ? -1 : 1);
        const PulseSequence seq = synthesize_sign_pattern(n, s, cache);
        const Eigen::MatrixXcd u = comp_block(seq.pulses, n);
        Eigen::VectorXcd expect(2 * (n + 1));
        for (int m = 0; m <= n; ++m) {
            expect(2 * m) = m == 0 ? 1.0 : double(s[std::size_t(m - 1)]);
            expect(2 * m + 1) = double(s[std::size_t(m)]);
        }
        CHECK(max_abs(u - Eigen::MatrixXcd(expect.asDiagonal())) < 1e-8);
    }
}

TEST_CASE("sQM rotations")
{
    std::mt19937_64 rng(25);
    std::uniform_real_distribution<double> ang(0.1, 2 * pi);
    const int n = 3;
    ElementaryCache cache(n);
    CHECK(synthesize_sqm_rotation(n, 2, Su2Matrix::Identity(), cache).empty());
    for (int k = 1; k <= n; ++k) {
        const Su2Matrix w = rot::su2_from_axis_angle(oracle::random_axis(rng), ang(rng));
        const PulseSequence seq = synthesize_sqm_rotation(n, k, w, cache);
        const Eigen::MatrixXcd target = verify::sqm_block_target(n, k, w);
        const auto rep = verify::fidelity_report(seq, QOQuditDims{n, 2}, target);
        CHECK(rep.global_error < 1e-8);
        CHECK(rep.leakage < 1e-10);
    }
}

TEST_CASE("cQM rotations")
{
    const int n = 3;
    ElementaryCache cache(n);
    CHECK(synthesize_cqm_rotation(n, 1, Su2Matrix::Identity(), cache).empty());

    const Su2Matrix X = sigma_matrix(ElementarySigma::X);
    const PulseSequence s0 = synthesize_cqm_rotation(n, 0, X, cache);
    const Eigen::MatrixXcd u0 = comp_block(s0.pulses, n);
    CHECK(max_abs(u0.block(0, 0, 2, 2) - X) < 1e-8);
    CHECK(max_abs(u0 - verify::cqm_block_target(n, 0, X)) < 1e-8);

    std::mt19937_64 rng(26);
    std::uniform_real_distribution<double> ang(0.1, 2 * pi);
    for (int k = 0; k <= n; ++k) {
        const Su2Matrix w = rot::su2_from_axis_angle(oracle::random_axis(rng), ang(rng));
        const auto rep = verify::fidelity_report(synthesize_cqm_rotation(n, k, w, cache), QOQuditDims{n, 2},
                                                 verify::cqm_block_target(n, k, w));
        CHECK(rep.global_error < 1e-8);
    }
}

TEST_CASE("a closed loop of pi rotations gives a geometric phase gate")
{
    // Two pi rotations about in-plane axes at angle delta trace a lune of area 2 delta;
    // the relative phase between |0,k> and |1,k> equals that solid angle.
    const int n = 2;
    ElementaryCache cache(n);
    for (double delta : {0.3, 0.9, 1.7}) {
        const Eigen::Vector3d a(1, 0, 0), b(std::cos(delta), std::sin(delta), 0);
        const Su2Matrix w = rot::su2_from_axis_angle(b, pi) * rot::su2_from_axis_angle(a, pi);
        for (int k = 0; k <= n; ++k) {
            const Eigen::MatrixXcd u = comp_block(synthesize_cqm_rotation(n, k, w, cache).pulses, n);
            CHECK(std::abs(u(2 * k, 2 * k + 1)) < 1e-8);
            const double rel = std::arg(u(2 * k, 2 * k) / u(2 * k + 1, 2 * k + 1));
            const double solid = 2.0 * delta;
            CHECK(std::abs(std::remainder(rel + solid, 2 * pi)) < 1e-6);
            for (int m = 0; m <= n; ++m)
                if (m != k) CHECK(max_abs(u.block(2 * m, 2 * m, 2, 2) - Eigen::Matrix2cd::Identity()) < 1e-8);
        }
    }
}

TEST_CASE("two-level gates")
{
    const int n = 3, d = 8;
    ElementaryCache cache(n);
    std::mt19937_64 rng(27);

    // Same Fock level: a single carrier rotation.
    const Su2Matrix X = sigma_matrix(ElementarySigma::X);
    const PulseSequence same = synthesize_two_level(n, {{0, 1}, {1, 1}, X}, cache);
    CHECK(same.pulses == synthesize_cqm_rotation(n, 1, X, cache).pulses);

    const Eigen::MatrixXcd g4 = oracle::haar_unitary(2, rng);
    const Su2Matrix gate = g4;
    const PulseSequence seq = synthesize_two_level(n, {{0, 0}, {1, 1}, gate}, cache);
    const Eigen::MatrixXcd u = comp_block(seq.pulses, n);
    const Su2Matrix special = gate / std::sqrt(gate.determinant());
    const Eigen::MatrixXcd target = two_level_matrix(d, 0, 3, special);
    CHECK(max_abs(u - target) < 1e-7);
    for (int i : {1, 2, 4, 5, 6, 7}) CHECK(std::abs(u(i, i) - 1.0) < 1e-7);

    // Spectrum of the realized operator equals that of the ideal two-level target.
    auto sorted_args = [](const Eigen::MatrixXcd& m) {
        Eigen::ComplexEigenSolver<Eigen::MatrixXcd> es(m);
        std::vector<double> a;
        for (Eigen::Index i = 0; i < es.eigenvalues().size(); ++i) a.push_back(std::arg(es.eigenvalues()(i)));
        std::sort(a.begin(), a.end());
        return a;
    };
    const auto ea = sorted_args(u), eb = sorted_args(target);
    for (std::size_t i = 0; i < ea.size(); ++i) CHECK(std::abs(ea[i] - eb[i]) < 1e-6);

    CHECK_THROWS_AS(synthesize_two_level(n, {{0, 0}, {1, 4}, gate}, cache), std::invalid_argument);
    CHECK_THROWS_AS(synthesize_two_level(n, {{2, 0}, {1, 1}, gate}, cache), std::invalid_argument);
}

TEST_CASE("compile_unitary")
{
    const int n = 3, d = 8;
    CHECK(compile_unitary(n, Eigen::MatrixXcd::Identity(d, d)).sequence.empty());

    std::mt19937_64 rng(28);
    const Su2Matrix g = oracle::haar_unitary(2, rng);
    const Su2Matrix gs = g / std::sqrt(g.determinant());
    const CompileResult one = compile_unitary(n, two_level_matrix(d, 2, 3, gs));
    CHECK(one.factors.size() == 1);
    CHECK(max_abs(comp_block(one.sequence.pulses, n) - two_level_matrix(d, 2, 3, gs)) < 1e-8);

    const Eigen::MatrixXcd t = oracle::haar_unitary(d, rng);
    const CompileResult r = compile_unitary(n, t);
    CHECK(r.factors.size() <= std::size_t(d * (d - 1) / 2));
    const auto rep = verify::fidelity_report(r.sequence, QOQuditDims{n, 2}, t);
    CHECK(rep.global_fidelity >= 1.0 - 1e-6);
    CHECK(rep.leakage <= 1e-8);

    // Total error is bounded by the sum of per-factor errors.
    const QOQuditDims dims{n, 2};
    double sum = 0.0;
    for (const TwoLevelFactor& f : r.factors) {
        const std::vector<Pulse> part(r.sequence.pulses.begin() + long(f.first_pulse),
                                      r.sequence.pulses.begin() + long(f.first_pulse + f.pulse_count));
        const Eigen::MatrixXcd uf = apply_sequence(part, dims).matrix.topLeftCorner(d, d);
        sum += verify::spectral_norm(uf - two_level_matrix(d, f.a, f.b, f.gate));
    }
    const Eigen::MatrixXcd uc = apply_sequence(r.sequence, dims).matrix.topLeftCorner(d, d);
    CHECK(verify::spectral_norm(uc - r.normalized_target) <= sum + 1e-12);

    Eigen::MatrixXcd bad = t;
    bad(0, 0) += 0.01;
    CHECK_THROWS_AS(compile_unitary(n, bad), std::invalid_argument);
}
