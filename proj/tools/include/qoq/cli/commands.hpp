#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "qoq/cli/sequence_io.hpp"

namespace qoq::cli {

enum ExitCode : int { kExitOk = 0, kExitUsage = 2, kExitVerifyFailed = 3 };

inline constexpr const char* kGuardsEnv = "QOQ_GUARDS";
inline constexpr int kDefaultGuards = 2;

// QOQ_GUARDS if set to a positive integer, else kDefaultGuards.
int default_guards();

struct CompileArgs {
    int n = 0;
    int k = 0;
    std::string sigma = "X";
    // When set, compiles a full d x d unitary instead of an elementary rotation.
    std::string target_file;
    std::string output;
    int guards = kDefaultGuards;
    bool clean_boundary = true;
    double beta_free = 0.0;
    int t_floor = 4;
    int search_grid = 6;
    std::vector<int> order;
};

struct CompileOutcome {
    SequenceFile file;
    bool verified = false;
    double fidelity = 0.0;
    double leakage = 0.0;
    double max_block_error = 0.0;
};

inline constexpr double kFidelityThreshold = 1.0 - 1e-6;
inline constexpr double kLeakageThreshold = 1e-8;
inline constexpr double kBlockThreshold = 1e-8;

CompileOutcome compile_sequence(const CompileArgs& args);
int cmd_compile(const CompileArgs& args, std::ostream& out, std::ostream& err);

struct VerifyArgs {
    std::string sequence_file;
    // 0 takes n from the file.
    int n = 0;
    int guards = kDefaultGuards;
    std::string target_file;
    // Elementary target shorthand: block k gets sigma, all others identity.
    int k = 0;
    std::string sigma = "X";
    std::string json_out;
};

int cmd_verify(const VerifyArgs& args, std::ostream& out, std::ostream& err);

struct ScalingRecord {
    int n = 0;
    int k = 0;
    std::string sigma;
    std::size_t pulse_count = 0;
    int l = 0;
    double fidelity = 0.0;
    double leakage = 0.0;
    double wall_time_s = 0.0;

    // (l+1)(2^n - 4) + 8
    double count_bound() const;
};

inline constexpr const char* kScalingHeader = "n,k,sigma,pulse_count,l,fidelity,leakage,wall_time_s";

struct ScalingArgs {
    int n_min = 3;
    int n_max = 10;
    std::string sigma = "X";
    std::string csv_out;
    std::string plot_out;
    // Writing 0 for wall_time_s makes the CSV byte-reproducible.
    bool timing = true;
    int guards = kDefaultGuards;
    // Concurrent workers; 0 picks the hardware concurrency.
    int jobs = 0;
};

std::vector<ScalingRecord> run_scaling(const ScalingArgs& args);
std::string scaling_csv(const std::vector<ScalingRecord>& records, bool timing = true);
// Least-squares slope of log2(pulse_count) against n.
double log2_slope(const std::vector<ScalingRecord>& records);
std::string scaling_svg(const std::vector<ScalingRecord>& records);
int cmd_scaling(const ScalingArgs& args, std::ostream& out, std::ostream& err);

std::string ggm_json(int d);
int cmd_ggm(int d, const std::string& output, std::ostream& out, std::ostream& err);

// Parses argv and dispatches to a subcommand.
int run(int argc, char** argv, std::ostream& out, std::ostream& err);

} // namespace qoq::cli
