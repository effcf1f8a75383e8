#include "qoq/cli/sequence_io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace qoq::cli {

using nlohmann::ordered_json;

namespace {

const char* kind_name(PulseKind k) { return k == PulseKind::Carrier ? "carrier" : "red_sideband"; }

PulseKind kind_from(const std::string& s, const std::string& where)
{
    if (s == "carrier") return PulseKind::Carrier;
    if (s == "red_sideband") return PulseKind::RedSideband;
    throw ParseError(where + ": unknown pulse kind \"" + s + "\" (expected carrier or red_sideband)");
}

double finite_number(const ordered_json& j, const std::string& where)
{
    if (!j.is_number()) throw ParseError(where + ": expected a number");
    const double v = j.get<double>();
    if (!std::isfinite(v)) throw ParseError(where + ": value is not finite");
    return v;
}

ordered_json parse_json(const std::string& text)
{
    try {
        return ordered_json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        // byte offset -> line number
        const std::size_t upto = std::min<std::size_t>(e.byte, text.size());
        const long line = 1 + std::count(text.begin(), text.begin() + static_cast<long>(upto), '\n');
        throw ParseError("line " + std::to_string(line) + ": " + e.what());
    }
}

} // namespace

PulseSequence SequenceFile::sequence() const
{
    PulseSequence s;
    s.n = n;
    s.pulses = pulses;
    return s;
}

std::string format_real(double v)
{
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    std::string s = buf;
    if (s.find_first_of(".eEn") == std::string::npos) s += ".0";
    return s;
}

std::string serialize(const SequenceFile& f)
{
    std::ostringstream os;
    os << "{\n";
    os << "  \"version\": " << f.version << ",\n";
    os << "  \"n\": " << f.n << ",\n";
    os << "  \"convention\": " << ordered_json(f.convention).dump() << ",\n";
    os << "  \"pulses\": [";
    for (std::size_t i = 0; i < f.pulses.size(); ++i) {
        const Pulse& p = f.pulses[i];
        os << (i ? ",\n" : "\n") << "    {\"kind\": \"" << kind_name(p.kind) << "\", \"theta\": " << format_real(p.theta)
           << ", \"phi\": " << format_real(p.phi) << "}";
    }
    os << (f.pulses.empty() ? "],\n" : "\n  ],\n");
    os << "  \"meta\": " << f.meta.dump(2) << "\n}\n";
    return os.str();
}

SequenceFile parse_sequence(const std::string& text)
{
    const ordered_json j = parse_json(text);
    if (!j.is_object()) throw ParseError("top level: expected a JSON object");
    for (const char* key : {"version", "n", "convention", "pulses"})
        if (!j.contains(key)) throw ParseError(std::string("missing field \"") + key + "\"");

    SequenceFile f;
    if (!j["version"].is_number_integer()) throw ParseError("version: expected an integer");
    f.version = j["version"].get<int>();
    if (f.version != kSequenceFileVersion)
        throw ParseError("version: unsupported value " + std::to_string(f.version));
    if (!j["n"].is_number_integer() || j["n"].get<int>() < 1) throw ParseError("n: expected an integer >= 1");
    f.n = j["n"].get<int>();
    if (!j["convention"].is_string()) throw ParseError("convention: expected a string");
    f.convention = j["convention"].get<std::string>();
    if (f.convention != kConvention)
        throw ParseError("convention: expected \"" + std::string(kConvention) + "\", got \"" + f.convention + "\"");
    if (!j["pulses"].is_array()) throw ParseError("pulses: expected an array");

    std::size_t i = 0;
    for (const auto& p : j["pulses"]) {
        const std::string where = "pulses[" + std::to_string(i++) + "]";
        if (!p.is_object()) throw ParseError(where + ": expected an object");
        for (const char* key : {"kind", "theta", "phi"})
            if (!p.contains(key)) throw ParseError(where + ": missing field \"" + key + "\"");
        if (!p["kind"].is_string()) throw ParseError(where + ".kind: expected a string");
        Pulse pulse;
        pulse.kind = kind_from(p["kind"].get<std::string>(), where + ".kind");
        pulse.theta = finite_number(p["theta"], where + ".theta");
        pulse.phi = finite_number(p["phi"], where + ".phi");
        f.pulses.push_back(pulse);
    }
    if (j.contains("meta")) {
        if (!j["meta"].is_object()) throw ParseError("meta: expected an object");
        f.meta = j["meta"];
    }
    return f;
}

std::string read_text(const std::string& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ParseError(path + ": cannot open");
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

SequenceFile read_sequence_file(const std::string& path)
{
    try {
        return parse_sequence(read_text(path));
    } catch (const ParseError& e) {
        const std::string msg = e.what();
        if (msg.rfind(path, 0) == 0) throw;
        throw ParseError(path + ": " + msg);
    }
}

Eigen::MatrixXcd parse_matrix(const std::string& text)
{
    const ordered_json doc = parse_json(text);
    const ordered_json& rows = doc.is_object() && doc.contains("matrix") ? doc["matrix"] : doc;
    if (!rows.is_array() || rows.empty()) throw ParseError("matrix: expected a non-empty array of rows");
    const auto d = static_cast<Eigen::Index>(rows.size());
    Eigen::MatrixXcd m(d, d);
    for (Eigen::Index r = 0; r < d; ++r) {
        const auto& row = rows[static_cast<std::size_t>(r)];
        const std::string rw = "matrix[" + std::to_string(r) + "]";
        if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != d)
            throw ParseError(rw + ": expected " + std::to_string(d) + " entries");
        for (Eigen::Index c = 0; c < d; ++c) {
            const auto& e = row[static_cast<std::size_t>(c)];
            const std::string where = rw + "[" + std::to_string(c) + "]";
            if (e.is_number()) {
                m(r, c) = finite_number(e, where);
            } else if (e.is_array() && e.size() == 2) {
                m(r, c) = cplx(finite_number(e[0], where + "[0]"), finite_number(e[1], where + "[1]"));
            } else {
                throw ParseError(where + ": expected [re, im]");
            }
        }
    }
    return m;
}

Eigen::MatrixXcd read_matrix_file(const std::string& path)
{
    try {
        return parse_matrix(read_text(path));
    } catch (const ParseError& e) {
        throw ParseError(path + ": " + e.what());
    }
}

std::string serialize_matrix(const Eigen::MatrixXcd& m)
{
    std::ostringstream os;
    os << "[";
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
        os << (r ? ",\n " : "\n ") << " [";
        for (Eigen::Index c = 0; c < m.cols(); ++c)
            os << (c ? ", " : "") << "[" << format_real(m(r, c).real()) << ", " << format_real(m(r, c).imag()) << "]";
        os << "]";
    }
    os << "\n]\n";
    return os.str();
}

void write_atomic(const std::string& path, const std::string& contents)
{
    namespace fs = std::filesystem;
    const fs::path target(path);
    fs::path tmp = target;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw std::runtime_error(path + ": cannot open temporary file for writing");
        out << contents;
        out.flush();
        if (!out) throw std::runtime_error(path + ": write failed");
    }
    std::error_code ec;
    fs::rename(tmp, target, ec);
    if (ec) {
        fs::remove(tmp);
        throw std::runtime_error(path + ": rename failed: " + ec.message());
    }
}

} // namespace qoq::cli
