#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "qoq/pulses.hpp"

namespace qoq::cli {

inline constexpr int kSequenceFileVersion = 1;
inline constexpr const char* kConvention = "application-order: pulses[0] acts first";

struct SequenceFile {
    int version = kSequenceFileVersion;
    int n = 0;
    std::string convention = kConvention;
    std::vector<Pulse> pulses;
    nlohmann::ordered_json meta = nlohmann::ordered_json::object();

    PulseSequence sequence() const;
};

// Raised for malformed sequence or target files; the message names the line or field.
class ParseError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Angles are written with 17 significant digits.
std::string format_real(double v);
std::string serialize(const SequenceFile& f);
SequenceFile parse_sequence(const std::string& text);
SequenceFile read_sequence_file(const std::string& path);

// Row-major d x d matrix of [re, im] pairs, either bare or under a "matrix" key.
Eigen::MatrixXcd parse_matrix(const std::string& text);
Eigen::MatrixXcd read_matrix_file(const std::string& path);
std::string serialize_matrix(const Eigen::MatrixXcd& m);

std::string read_text(const std::string& path);
// Writes to a sibling temporary file and renames it over the destination.
void write_atomic(const std::string& path, const std::string& contents);

} // namespace qoq::cli
