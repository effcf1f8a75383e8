#pragma once

#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include "qoq/pulses.hpp"
#include "qoq/rotations.hpp"

namespace qoq::synth {

using rot::Vec3;

class SynthesisError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// X = i sigma_x, Y = i sigma_y.
enum class ElementarySigma { X, Y, MinusI };

const char* to_string(ElementarySigma s);
ElementarySigma sigma_from_string(const std::string& s);
Su2Matrix sigma_matrix(ElementarySigma s);

struct CleaningOptions {
    // Explicit cleaning order; empty selects the heuristic.
    std::vector<int> order;
    // Per-step free angle of the xy decomposition; steps past the end are searched.
    std::vector<double> free_angles;
    std::optional<std::pair<int, int>> mu_pair;
    int t_floor = 4;
    bool clean_boundary = true;
    // beta_2 for X targets, beta_1 for Y targets.
    double beta_free = 0.0;
    // Close the boundary block through the final step's free parameters before
    // falling back to cleaning it recursively.
    bool close_boundary_in_final_step = true;
    // Search grid resolution for the heuristic (per angle).
    int search_grid = 6;
    // Total k-block rotation the final step accumulates: pi for X or Y, 2pi for -I.
    // Only the base-case cost estimate reads it.
    double final_turn = rot::pi;
};

struct StepParams {
    double perp_angle = 0.0;
    double free_angle = 0.0;
};

struct StepRecord {
    int mu = 0;
    StepParams params;
    double predicted_angle = 0.0;
    double simulated_angle = 0.0;
    bool skipped = false;
};

struct SynthesisState {
    int n = 0;
    int k = 0;
    // Cleaning range is {1..range_max} minus k.
    int range_max = 0;
    std::pair<int, int> mu{0, 0};
    std::set<int> cleaned;
    std::vector<Pulse> sequence;
    Vec3 k_axis = Vec3::UnitX();
    // SU(2) angle of the k block in (0, 2pi).
    double k_angle = 0.0;
    // Tracked sQM blocks 1..blocks.size().
    std::vector<Su2Matrix> blocks;
    // Cleaned blocks that were left at -I.
    std::map<int, int> block_phase;
    std::vector<StepRecord> steps;
    std::vector<std::string> warnings;

    const Su2Matrix& block(int j) const { return blocks.at(static_cast<std::size_t>(j - 1)); }
    int tracked() const { return static_cast<int>(blocks.size()); }
    std::vector<int> uncleaned() const;
};

struct FinalStepResult {
    std::vector<Pulse> pulses;
    int l = 0;
    double theta_k = 0.0;
    Vec3 alpha = Vec3::UnitX();
    Vec3 beta = Vec3::UnitX();
    double beta_free = 0.0;
    // Tracked block index that was closed to +-I by the free parameters, 0 if none.
    int closed_block = 0;
    std::vector<Su2Matrix> blocks;
};

struct ElementaryResult {
    PulseSequence sequence;
    int l = 0;
    int cleaning_steps = 0;
    std::pair<int, int> mu{0, 0};
    // "direct", "recursive" or "recursive+boundary-step"
    std::string route;
    bool boundary_closed = false;
    // Recorded sign of sQM blocks 1..n (1..n+1 with a clean boundary); +1 on block k.
    std::vector<int> block_signs;
    std::vector<std::string> warnings;
};

// Pulses whose block-j product equals g up to sign.
std::vector<Pulse> conjugator_pulses(const Su2Matrix& g, int j, double free_angle);

// Exact in-plane factors: w = su2(first) * su2(second), det(w) = 1.
std::vector<rot::AxisAngle> exact_inplane_factors(const Su2Matrix& w, double free_angle = 0.0);

bool mu_admissible(int k, int mu);

// SU(2) rotation angle of the base-case k block.
double base_case_angle(int k, int mu1, int mu2);

struct StepPrediction {
    double theta_ab = 0.0;
    Vec3 r_ab = Vec3::UnitX();
    double k_dot_kab = 1.0;
    double next_angle = 0.0;
};

// Predicts the k block after U C U C^dagger from the conjugator's two in-plane factors.
StepPrediction predict_step(const Vec3& k_axis, double k_angle, const std::vector<Pulse>& conjugator, int k);

std::vector<Pulse> base_case_pulses(int mu1, int mu2);

SynthesisState base_case(int n, int k, const CleaningOptions& opts = {}, int range_max = -1);

SynthesisState clean_step(const SynthesisState& state, int mu, const StepParams& params);

struct HeuristicChoice {
    int mu = 0;
    StepParams params;
    double predicted_angle = 0.0;
    bool floor_met = true;
};

HeuristicChoice cleaning_order_heuristic(const SynthesisState& state, int t_floor, int grid = 6);

// close_block > 0 requests that tracked block be driven to +-I as well.
FinalStepResult final_step(const SynthesisState& state, ElementarySigma sigma, const CleaningOptions& opts = {},
                           int close_block = 0);

PulseSequence direct_small_n(int n, int k, ElementarySigma sigma);

ElementaryResult synthesize_elementary_detailed(int n, int k, ElementarySigma sigma, const CleaningOptions& opts = {});
PulseSequence synthesize_elementary(int n, int k, ElementarySigma sigma, const CleaningOptions& opts = {});

// Sigma on block n+1 with blocks 1..n at identity; the block above is unconstrained.
PulseSequence synthesize_boundary_elementary(int n, ElementarySigma sigma);

// Memoizes elementary sequences for one truncation n.
class ElementaryCache {
public:
    explicit ElementaryCache(int n, CleaningOptions opts = {});
    int n() const { return n_; }
    // k in 1..n+1; k = n+1 selects the boundary construction.
    const std::vector<Pulse>& get(int k, ElementarySigma sigma);

private:
    int n_;
    CleaningOptions opts_;
    std::map<std::pair<int, int>, std::vector<Pulse>> memo_;
};

PulseSequence synthesize_z_pattern(int n, int exempt, ElementaryCache& cache);
PulseSequence synthesize_z_pattern(int n, int exempt);

PulseSequence synthesize_sqm_rotation(int n, int k, const Su2Matrix& w, ElementaryCache& cache);
PulseSequence synthesize_sqm_rotation(int n, int k, const Su2Matrix& w);

enum class CarrierPattern { Z, MinusZ, I, MinusI };

const char* to_string(CarrierPattern p);

// Signs W_1..W_{n+1} of the sideband +-I pattern; throws on the first inconsistent position.
std::vector<int> sqm_sign_pattern_for_cqm(const std::vector<CarrierPattern>& target);
// Inverse map, with W_0 = +1 fixed by the invariant |0,0>.
std::vector<CarrierPattern> cqm_pattern_from_sqm_signs(const std::vector<int>& signs);
// Signs realizing +-Z on every carrier block except +-I on block k.
std::vector<int> cqm_refocus_signs(int n, int k);

PulseSequence synthesize_sign_pattern(int n, const std::vector<int>& signs, ElementaryCache& cache);

PulseSequence synthesize_cqm_rotation(int n, int k, const Su2Matrix& w, ElementaryCache& cache);
PulseSequence synthesize_cqm_rotation(int n, int k, const Su2Matrix& w);

struct LevelState {
    int qubit = 0;
    int fock = 0;
};

struct TwoLevelTarget {
    LevelState bra;
    LevelState ket;
    // Acts on (bra, ket); made special unitary before synthesis.
    Su2Matrix gate = Su2Matrix::Identity();
};

PulseSequence synthesize_two_level(int n, const TwoLevelTarget& target, ElementaryCache& cache);
PulseSequence synthesize_two_level(int n, const TwoLevelTarget& target);

// Embeds a 2x2 gate on computational indices (a, b) into a d x d identity.
Eigen::MatrixXcd two_level_matrix(int d, int a, int b, const Su2Matrix& gate);

struct TwoLevelFactor {
    int a = 0;
    int b = 0;
    Su2Matrix gate = Su2Matrix::Identity();
    std::size_t first_pulse = 0;
    std::size_t pulse_count = 0;
};

struct CompileResult {
    PulseSequence sequence;
    // In application order.
    std::vector<TwoLevelFactor> factors;
    // The special-unitary target actually compiled (global phase removed).
    Eigen::MatrixXcd normalized_target;
};

CompileResult compile_unitary(int n, const Eigen::MatrixXcd& target, const CleaningOptions& opts = {});

} // namespace qoq::synth
