#include "qoq/cli/commands.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <iostream>
#include <sstream>
#include <thread>

#include <CLI11.hpp>

#include "qoq/synthesis.hpp"
#include "qoq/verify.hpp"

#ifndef QOQ_VERSION
#define QOQ_VERSION "0.0.0"
#endif

namespace qoq::cli {

using nlohmann::ordered_json;

namespace {

std::string sci(double v, int digits = 3)
{
    char buf[48];
    std::snprintf(buf, sizeof buf, "%.*e", digits, v);
    return buf;
}

std::string fixed(double v, int digits)
{
    char buf[48];
    std::snprintf(buf, sizeof buf, "%.*f", digits, v);
    return buf;
}

std::string phase_text(cplx z) { return "(" + fixed(z.real(), 6) + ", " + fixed(z.imag(), 6) + ")"; }

ordered_json complex_json(cplx z) { return ordered_json::array({z.real(), z.imag()}); }

ordered_json matrix_json(const Eigen::MatrixXcd& m)
{
    ordered_json rows = ordered_json::array();
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
        ordered_json row = ordered_json::array();
        for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(complex_json(m(r, c)));
        rows.push_back(std::move(row));
    }
    return rows;
}

double max_raw(const std::vector<verify::BlockError>& blocks)
{
    double m = 0.0;
    for (const auto& b : blocks) m = std::max(m, b.raw);
    return m;
}

// Probability that |1,n> ends up in the guard levels.
double boundary_transfer(const BlockUnitary& u)
{
    const int d = u.dims.comp_dim();
    return u.matrix.col(d - 1).segment(d, u.dims.dim() - d).squaredNorm();
}

void require(bool ok, const std::string& msg)
{
    if (!ok) throw std::invalid_argument(msg);
}

} // namespace

int default_guards()
{
    const char* v = std::getenv(kGuardsEnv);
    if (v == nullptr || *v == '\0') return kDefaultGuards;
    char* end = nullptr;
    const long g = std::strtol(v, &end, 10);
    if (*end != '\0' || g < 1 || g > 64)
        throw std::invalid_argument(std::string(kGuardsEnv) + " must be an integer in 1..64, got \"" + v + "\"");
    return static_cast<int>(g);
}

CompileOutcome compile_sequence(const CompileArgs& args)
{
    require(args.n >= 1, "--n must be >= 1");
    require(args.guards >= 1, "--guards must be >= 1");
    synth::CleaningOptions opts;
    opts.order = args.order;
    opts.t_floor = args.t_floor;
    opts.clean_boundary = args.clean_boundary;
    opts.beta_free = args.beta_free;
    opts.search_grid = args.search_grid;
    require(opts.t_floor >= 2, "--t-floor must be >= 2");
    require(opts.search_grid >= 1, "--grid must be >= 1");

    const QOQuditDims dims{args.n, args.guards};
    CompileOutcome res;
    SequenceFile& f = res.file;
    f.n = args.n;
    ordered_json& meta = f.meta;
    meta["tool"] = "qoqc";
    meta["tool_version"] = QOQ_VERSION;
    meta["command"] = "compile";
    meta["guards"] = args.guards;

    Eigen::MatrixXcd target;
    if (!args.target_file.empty()) {
        const Eigen::MatrixXcd t = read_matrix_file(args.target_file);
        require(t.rows() == dims.comp_dim(), "target is " + std::to_string(t.rows()) + "x" + std::to_string(t.cols()) +
                                                 " but n=" + std::to_string(args.n) + " needs " +
                                                 std::to_string(dims.comp_dim()) + "x" +
                                                 std::to_string(dims.comp_dim()));
        const synth::CompileResult c = synth::compile_unitary(args.n, t, opts);
        f.pulses = c.sequence.pulses;
        target = t;
        meta["mode"] = "unitary";
        meta["target_file"] = args.target_file;
        meta["two_level_factors"] = c.factors.size();
        const verify::FidelityReport rep = verify::fidelity_report(c.sequence, dims, target);
        res.fidelity = rep.global_fidelity;
        res.leakage = rep.leakage;
        res.max_block_error = verify::spectral_norm(apply_sequence(c.sequence, dims).matrix.topLeftCorner(
                                                        dims.comp_dim(), dims.comp_dim()) -
                                                    c.normalized_target);
        res.verified = res.fidelity >= kFidelityThreshold && res.leakage <= kLeakageThreshold;
    } else {
        require(args.k >= 1 && args.k <= args.n, "--k must lie in 1..n");
        const synth::ElementarySigma sigma = synth::sigma_from_string(args.sigma);
        const synth::ElementaryResult r = synth::synthesize_elementary_detailed(args.n, args.k, sigma, opts);
        f.pulses = r.sequence.pulses;
        const Su2Matrix b = synth::sigma_matrix(sigma);
        target = verify::sqm_block_target(args.n, args.k, b, r.block_signs);
        meta["mode"] = "elementary";
        meta["k"] = args.k;
        meta["sigma"] = synth::to_string(sigma);
        meta["clean_boundary"] = args.clean_boundary;
        meta["route"] = r.route;
        meta["l"] = r.l;
        meta["cleaning_steps"] = r.cleaning_steps;
        meta["base_pair"] = ordered_json::array({r.mu.first, r.mu.second});
        meta["block_signs"] = r.block_signs;
        if (!r.warnings.empty()) meta["warnings"] = r.warnings;
        const verify::FidelityReport rep = verify::fidelity_report(r.sequence, dims, target);
        res.fidelity = rep.global_fidelity;
        res.leakage = rep.leakage;
        res.max_block_error = max_raw(rep.sqm_blocks);
        if (args.clean_boundary) {
            for (double e : rep.boundary_errors) res.max_block_error = std::max(res.max_block_error, e);
            res.verified = res.fidelity >= kFidelityThreshold && res.leakage <= kLeakageThreshold &&
                           res.max_block_error <= kBlockThreshold;
        } else {
            // Block n+1 is left free, so only blocks 1..n are checked.
            res.verified = res.max_block_error <= kBlockThreshold;
        }
    }
    meta["pulse_count"] = f.pulses.size();
    meta["fidelity"] = res.fidelity;
    meta["leakage"] = res.leakage;
    meta["max_block_error"] = res.max_block_error;
    meta["verified"] = res.verified;
    return res;
}

int cmd_compile(const CompileArgs& args, std::ostream& out, std::ostream& err)
{
    CompileOutcome res;
    try {
        res = compile_sequence(args);
    } catch (const ParseError& e) {
        err << "error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const std::invalid_argument& e) {
        err << "error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const synth::SynthesisError& e) {
        err << "synthesis failed: " << e.what() << "\n";
        return kExitVerifyFailed;
    }

    const std::string text = serialize(res.file);
    std::ostream& summary = args.output.empty() ? err : out;
    try {
        if (args.output.empty())
            out << text;
        else
            write_atomic(args.output, text);
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return kExitUsage;
    }
    summary << "pulses: " << res.file.pulses.size() << "\n"
            << "fidelity: " << fixed(res.fidelity, 15) << "\n"
            << "leakage: " << sci(res.leakage) << "\n"
            << "max block error: " << sci(res.max_block_error) << "\n"
            << "verification: " << (res.verified ? "passed" : "FAILED") << "\n";
    return res.verified ? kExitOk : kExitVerifyFailed;
}

int cmd_verify(const VerifyArgs& args, std::ostream& out, std::ostream& err)
{
    SequenceFile f;
    Eigen::MatrixXcd target;
    std::string target_label = "identity";
    QOQuditDims dims;
    try {
        f = read_sequence_file(args.sequence_file);
        if (args.n != 0 && args.n != f.n)
            throw ParseError("n: file declares n=" + std::to_string(f.n) + " but --n " + std::to_string(args.n) +
                             " was given");
        if (args.guards < 1) throw std::invalid_argument("--guards must be >= 1");
        dims = QOQuditDims{f.n, args.guards};
        const int d = dims.comp_dim();
        if (!args.target_file.empty()) {
            target = read_matrix_file(args.target_file);
            if (target.rows() != d)
                throw ParseError(args.target_file + ": target is " + std::to_string(target.rows()) +
                                 " dimensional, expected " + std::to_string(d));
            target_label = args.target_file;
        } else if (args.k > 0) {
            if (args.k > f.n) throw std::invalid_argument("--k must lie in 1..n");
            const synth::ElementarySigma sigma = synth::sigma_from_string(args.sigma);
            std::vector<int> signs(static_cast<std::size_t>(f.n), 1);
            const auto& m = f.meta;
            if (m.contains("k") && m["k"] == args.k && m.contains("sigma") && m["sigma"] == synth::to_string(sigma) &&
                m.contains("block_signs") && m["block_signs"].is_array())
                signs = m["block_signs"].get<std::vector<int>>();
            target = verify::sqm_block_target(f.n, args.k, synth::sigma_matrix(sigma), signs);
            target_label = std::string("sQM block ") + std::to_string(args.k) + " = " + synth::to_string(sigma);
        } else {
            target = Eigen::MatrixXcd::Identity(d, d);
        }
    } catch (const ParseError& e) {
        err << "parse error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return kExitUsage;
    }

    const BlockUnitary u = apply_sequence(f.sequence(), dims);
    const verify::FidelityReport rep = verify::unitary_report(u, target);
    const double transfer = boundary_transfer(u);

    out << "sequence: " << args.sequence_file << " (" << f.pulses.size() << " pulses, n=" << f.n
        << ", guards=" << dims.guards << ")\n";
    out << "target: " << target_label << "\n";
    out << "leakage: " << sci(rep.leakage) << "\n";
    out << "boundary transfer |1," << f.n << "> -> guard: " << sci(transfer) << "\n";
    auto table = [&](const char* name, const std::vector<verify::BlockError>& blocks) {
        out << name << " blocks\n";
        out << "  block  raw_error   aligned_error  phase\n";
        for (const auto& b : blocks) {
            char line[128];
            std::snprintf(line, sizeof line, "  %5d  %.3e  %.3e      ", b.index, b.raw, b.aligned);
            out << line << phase_text(b.phase) << "\n";
        }
    };
    table("sQM", rep.sqm_blocks);
    table("cQM", rep.cqm_blocks);
    out << "boundary |0,0>: phase " << phase_text(rep.boundary_phases[0]) << " error " << sci(rep.boundary_errors[0])
        << "\n";
    out << "boundary |1," << f.n << ">: phase " << phase_text(rep.boundary_phases[1]) << " error "
        << sci(rep.boundary_errors[1]) << "\n";
    out << "global fidelity: " << fixed(rep.global_fidelity, 15) << "\n";
    out << "global error: " << sci(rep.global_error) << "\n";

    if (!args.json_out.empty()) {
        ordered_json j;
        j["sequence_file"] = args.sequence_file;
        j["n"] = f.n;
        j["guards"] = dims.guards;
        j["pulse_count"] = f.pulses.size();
        j["target"] = target_label;
        j["leakage"] = rep.leakage;
        j["boundary_transfer"] = transfer;
        auto blocks = [](const std::vector<verify::BlockError>& bs) {
            ordered_json a = ordered_json::array();
            for (const auto& b : bs)
                a.push_back({{"block", b.index}, {"raw", b.raw}, {"aligned", b.aligned}, {"phase", complex_json(b.phase)}});
            return a;
        };
        j["sqm_blocks"] = blocks(rep.sqm_blocks);
        j["cqm_blocks"] = blocks(rep.cqm_blocks);
        j["boundary_phases"] = {complex_json(rep.boundary_phases[0]), complex_json(rep.boundary_phases[1])};
        j["boundary_errors"] = rep.boundary_errors;
        j["global_fidelity"] = rep.global_fidelity;
        j["global_error"] = rep.global_error;
        try {
            write_atomic(args.json_out, j.dump(2) + "\n");
        } catch (const std::exception& e) {
            err << "error: " << e.what() << "\n";
            return kExitUsage;
        }
    }
    return kExitOk;
}

double ScalingRecord::count_bound() const { return (l + 1) * (std::ldexp(1.0, n) - 4.0) + 8.0; }

std::vector<ScalingRecord> run_scaling(const ScalingArgs& args)
{
    require(args.n_min >= 3 && args.n_min <= args.n_max, "need 3 <= n-min <= n-max");
    require(args.guards >= 1, "--guards must be >= 1");
    const synth::ElementarySigma sigma = synth::sigma_from_string(args.sigma);
    const int count = args.n_max - args.n_min + 1;
    std::vector<ScalingRecord> records(static_cast<std::size_t>(count));
    std::vector<std::string> failures(static_cast<std::size_t>(count));

    std::atomic<int> next{0};
    auto worker = [&] {
        for (int i = next++; i < count; i = next++) {
            const int n = args.n_min + i;
            ScalingRecord& rec = records[static_cast<std::size_t>(i)];
            rec.n = n;
            rec.k = n;
            rec.sigma = synth::to_string(sigma);
            try {
                const auto t0 = std::chrono::steady_clock::now();
                const synth::ElementaryResult r = synth::synthesize_elementary_detailed(n, n, sigma);
                rec.wall_time_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
                rec.pulse_count = r.sequence.size();
                rec.l = r.l;
                const auto target = verify::sqm_block_target(n, n, synth::sigma_matrix(sigma), r.block_signs);
                const auto rep = verify::fidelity_report(r.sequence, QOQuditDims{n, args.guards}, target);
                rec.fidelity = rep.global_fidelity;
                rec.leakage = rep.leakage;
            } catch (const std::exception& e) {
                failures[static_cast<std::size_t>(i)] = "n=" + std::to_string(n) + ": " + e.what();
            }
        }
    };
    const int jobs = std::clamp(args.jobs > 0 ? args.jobs : static_cast<int>(std::thread::hardware_concurrency()), 1,
                                count);
    std::vector<std::thread> pool;
    for (int t = 1; t < jobs; ++t) pool.emplace_back(worker);
    worker();
    for (auto& t : pool) t.join();
    for (const auto& f : failures)
        if (!f.empty()) throw synth::SynthesisError(f);
    return records;
}

std::string scaling_csv(const std::vector<ScalingRecord>& records, bool timing)
{
    std::ostringstream os;
    os << kScalingHeader << "\n";
    for (const auto& r : records)
        os << r.n << "," << r.k << "," << r.sigma << "," << r.pulse_count << "," << r.l << ","
           << fixed(r.fidelity, 15) << "," << sci(r.leakage, 6) << "," << fixed(timing ? r.wall_time_s : 0.0, 6)
           << "\n";
    return os.str();
}

double log2_slope(const std::vector<ScalingRecord>& records)
{
    const double m = static_cast<double>(records.size());
    if (records.size() < 2) return 0.0;
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (const auto& r : records) {
        const double x = r.n;
        const double y = std::log2(static_cast<double>(r.pulse_count));
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
    }
    return (m * sxy - sx * sy) / (m * sxx - sx * sx);
}

std::string scaling_svg(const std::vector<ScalingRecord>& records)
{
    const double W = 640, H = 420, left = 70, right = 20, top = 40, bottom = 55;
    int nmin = records.empty() ? 0 : records.front().n, nmax = nmin;
    double ymax = 1.0;
    for (const auto& r : records) {
        nmin = std::min(nmin, r.n);
        nmax = std::max(nmax, r.n);
        ymax = std::max({ymax, std::log2(static_cast<double>(std::max<std::size_t>(r.pulse_count, 1))),
                         std::log2(r.count_bound())});
    }
    ymax = std::ceil(ymax + 0.5);
    const double ymin = 0.0;
    const double span = std::max(1, nmax - nmin);
    auto px = [&](double n) { return left + (n - nmin) / span * (W - left - right); };
    auto py = [&](double y) { return H - bottom - (y - ymin) / (ymax - ymin) * (H - top - bottom); };

    std::ostringstream os;
    os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
    os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    const std::string sig = records.empty() ? std::string("X") : records.front().sigma;
    os << "<text x=\"" << W / 2 << "\" y=\"22\" text-anchor=\"middle\" font-size=\"14\">Pulse count for I+...+" << sig
       << "_n (k = n)</text>\n";
    os << "<line x1=\"" << left << "\" y1=\"" << py(ymin) << "\" x2=\"" << W - right << "\" y2=\"" << py(ymin)
       << "\" stroke=\"black\"/>\n";
    os << "<line x1=\"" << left << "\" y1=\"" << py(ymin) << "\" x2=\"" << left << "\" y2=\"" << top
       << "\" stroke=\"black\"/>\n";
    for (int n = nmin; n <= nmax; ++n)
        os << "<text x=\"" << px(n) << "\" y=\"" << py(ymin) + 18 << "\" text-anchor=\"middle\">" << n << "</text>\n";
    const int ystep = ymax > 12 ? 2 : 1;
    for (int y = 0; y <= static_cast<int>(ymax); y += ystep)
        os << "<text x=\"" << left - 8 << "\" y=\"" << py(y) + 4 << "\" text-anchor=\"end\">" << y << "</text>\n"
           << "<line x1=\"" << left << "\" y1=\"" << py(y) << "\" x2=\"" << W - right << "\" y2=\"" << py(y)
           << "\" stroke=\"#e0e0e0\"/>\n";
    os << "<text x=\"" << W / 2 << "\" y=\"" << H - 15 << "\" text-anchor=\"middle\">n</text>\n";
    os << "<text x=\"18\" y=\"" << H / 2 << "\" text-anchor=\"middle\" transform=\"rotate(-90 18 " << H / 2
       << ")\">log2(pulse count)</text>\n";

    auto polyline = [&](auto value, const char* style) {
        os << "<polyline fill=\"none\" " << style << " points=\"";
        for (const auto& r : records) os << px(r.n) << "," << py(value(r)) << " ";
        os << "\"/>\n";
    };
    polyline([](const ScalingRecord& r) { return std::log2(r.count_bound()); },
             "stroke=\"#999999\" stroke-dasharray=\"6,4\"");
    polyline([](const ScalingRecord& r) { return static_cast<double>(r.n); }, "stroke=\"#cc7a00\" stroke-dasharray=\"2,3\"");
    polyline([](const ScalingRecord& r) { return std::log2(static_cast<double>(r.pulse_count)); },
             "stroke=\"#1f4e9c\" stroke-width=\"2\"");
    for (const auto& r : records)
        os << "<circle cx=\"" << px(r.n) << "\" cy=\"" << py(std::log2(static_cast<double>(r.pulse_count)))
           << "\" r=\"3.5\" fill=\"#1f4e9c\"/>\n";

    const double lx = left + 14, ly = top + 8;
    os << "<line x1=\"" << lx << "\" y1=\"" << ly << "\" x2=\"" << lx + 24 << "\" y2=\"" << ly
       << "\" stroke=\"#1f4e9c\" stroke-width=\"2\"/><text x=\"" << lx + 30 << "\" y=\"" << ly + 4
       << "\">measured</text>\n";
    os << "<line x1=\"" << lx << "\" y1=\"" << ly + 18 << "\" x2=\"" << lx + 24 << "\" y2=\"" << ly + 18
       << "\" stroke=\"#999999\" stroke-dasharray=\"6,4\"/><text x=\"" << lx + 30 << "\" y=\"" << ly + 22
       << "\">(l+1)(2^n-4)+8</text>\n";
    os << "<line x1=\"" << lx << "\" y1=\"" << ly + 36 << "\" x2=\"" << lx + 24 << "\" y2=\"" << ly + 36
       << "\" stroke=\"#cc7a00\" stroke-dasharray=\"2,3\"/><text x=\"" << lx + 30 << "\" y=\"" << ly + 40
       << "\">2^n</text>\n";
    os << "</svg>\n";
    return os.str();
}

int cmd_scaling(const ScalingArgs& args, std::ostream& out, std::ostream& err)
{
    std::vector<ScalingRecord> records;
    try {
        records = run_scaling(args);
    } catch (const std::invalid_argument& e) {
        err << "error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const synth::SynthesisError& e) {
        err << "synthesis failed: " << e.what() << "\n";
        return kExitVerifyFailed;
    }

    const std::string csv = scaling_csv(records, args.timing);
    try {
        if (args.csv_out.empty())
            out << csv;
        else
            write_atomic(args.csv_out, csv);
        if (!args.plot_out.empty()) write_atomic(args.plot_out, scaling_svg(records));
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return kExitUsage;
    }

    std::ostream& log = args.csv_out.empty() ? err : out;
    bool ok = true;
    for (const auto& r : records) {
        const bool within = static_cast<double>(r.pulse_count) <= r.count_bound();
        const bool clean = r.fidelity >= kFidelityThreshold && r.leakage <= kLeakageThreshold;
        if (!within) log << "n=" << r.n << ": pulse count " << r.pulse_count << " exceeds bound " << r.count_bound() << "\n";
        if (!clean) log << "n=" << r.n << ": verification failed (fidelity " << fixed(r.fidelity, 12) << ", leakage "
                        << sci(r.leakage) << ")\n";
        ok = ok && within && clean;
    }
    if (records.size() >= 2) log << "log2 slope: " << fixed(log2_slope(records), 4) << "\n";
    return ok ? kExitOk : kExitVerifyFailed;
}

std::string ggm_json(int d)
{
    const verify::GgmBasis b = verify::ggm_basis(d);
    const verify::CommutatorReport rep = verify::ggm_commutator_check(b);
    ordered_json j;
    j["d"] = d;
    j["count"] = b.size();
    j["normalization"] = "tr(M_a M_b) = 2 delta_ab";
    ordered_json z = ordered_json::array();
    for (std::size_t i = 0; i < b.z_type.size(); ++i) z.push_back({{"j", i + 2}, {"matrix", matrix_json(b.z_type[i])}});
    ordered_json x = ordered_json::array(), y = ordered_json::array();
    for (std::size_t i = 0; i < b.pairs.size(); ++i) {
        x.push_back({{"j", b.pairs[i].first}, {"k", b.pairs[i].second}, {"matrix", matrix_json(b.x_type[i])}});
        y.push_back({{"j", b.pairs[i].first}, {"k", b.pairs[i].second}, {"matrix", matrix_json(b.y_type[i])}});
    }
    j["z"] = std::move(z);
    j["x"] = std::move(x);
    j["y"] = std::move(y);
    j["commutators"] = {{"ok", rep.ok}, {"relations_checked", rep.relations_checked}, {"max_violation", rep.max_violation}};
    return j.dump(1) + "\n";
}

int cmd_ggm(int d, const std::string& output, std::ostream& out, std::ostream& err)
{
    if (d < 2) {
        err << "error: --d must be >= 2\n";
        return kExitUsage;
    }
    const std::string text = ggm_json(d);
    try {
        if (output.empty())
            out << text;
        else
            write_atomic(output, text);
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return kExitUsage;
    }
    return kExitOk;
}

int run(int argc, char** argv, std::ostream& out, std::ostream& err)
{
    int guards = kDefaultGuards;
    try {
        guards = default_guards();
    } catch (const std::invalid_argument& e) {
        err << "error: " << e.what() << "\n";
        return kExitUsage;
    }

    CLI::App app{"Pulse compiler and verifier for qubit-oscillator qudits", "qoqc"};
    app.set_version_flag("--version", std::string("qoqc ") + QOQ_VERSION);
    app.require_subcommand(1);

    CompileArgs ca;
    ca.guards = guards;
    auto* compile = app.add_subcommand("compile", "Synthesize a pulse sequence and self-verify it");
    compile->add_option("--n", ca.n, "Fock truncation n")->required();
    auto* k_opt = compile->add_option("--k", ca.k, "sQM block of the elementary rotation (1..n)");
    compile->add_option("--sigma", ca.sigma, "Elementary rotation: X, Y or -I")->capture_default_str();
    auto* target_opt = compile->add_option("--target", ca.target_file, "JSON file with a d x d unitary");
    target_opt->excludes(k_opt);
    compile->add_option("-o,--output", ca.output, "Output sequence file (stdout when omitted)");
    compile->add_option("--guards", ca.guards, "Guard levels for self-verification")->capture_default_str();
    bool no_clean = false;
    compile->add_flag("--no-clean-boundary", no_clean, "Leave sQM block n+1 unconstrained");
    compile->add_option("--beta", ca.beta_free, "Free parameter of the final step")->capture_default_str();
    compile->add_option("--t-floor", ca.t_floor, "Cleaning heuristic angle floor pi/t")->capture_default_str();
    compile->add_option("--grid", ca.search_grid, "Heuristic search grid per angle")->capture_default_str();
    compile->add_option("--order", ca.order, "Explicit cleaning order")->delimiter(',');

    VerifyArgs va;
    va.guards = guards;
    auto* ver = app.add_subcommand("verify", "Simulate a sequence file and report leakage and block errors");
    ver->add_option("sequence", va.sequence_file, "Sequence file")->required();
    ver->add_option("--n", va.n, "Expected n (defaults to the file's)");
    ver->add_option("--guards", va.guards, "Guard levels")->capture_default_str();
    auto* vt = ver->add_option("--target", va.target_file, "JSON file with a d x d unitary");
    ver->add_option("--k", va.k, "Elementary target block")->excludes(vt);
    ver->add_option("--sigma", va.sigma, "Elementary target rotation")->capture_default_str();
    ver->add_option("--json", va.json_out, "Also write the report as JSON");

    ScalingArgs sa;
    sa.guards = guards;
    auto* sc = app.add_subcommand("scaling", "Pulse counts of I+...+sigma_n over a range of n");
    sc->add_option("--n-min", sa.n_min)->capture_default_str();
    sc->add_option("--n-max", sa.n_max)->capture_default_str();
    sc->add_option("--sigma", sa.sigma)->capture_default_str();
    sc->add_option("-o,--csv-out", sa.csv_out, "CSV output (stdout when omitted)");
    sc->add_option("--plot-out", sa.plot_out, "SVG plot output");
    bool no_timing = false;
    sc->add_flag("--no-timing", no_timing, "Write 0 for wall_time_s");
    sc->add_option("--jobs", sa.jobs, "Worker threads (0 = hardware concurrency)")->capture_default_str();
    sc->add_option("--guards", sa.guards)->capture_default_str();

    int ggm_d = 4;
    std::string ggm_out;
    auto* gg = app.add_subcommand("ggm", "Dump the generalized Gell-Mann basis as JSON");
    gg->add_option("--d", ggm_d, "Dimension")->capture_default_str();
    gg->add_option("-o,--output", ggm_out, "Output file (stdout when omitted)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kExitOk : kExitUsage;
    }

    if (compile->parsed()) {
        ca.clean_boundary = !no_clean;
        if (ca.target_file.empty() && k_opt->count() == 0) {
            err << "error: compile needs --k (with --sigma) or --target\n";
            return kExitUsage;
        }
        return cmd_compile(ca, out, err);
    }
    if (ver->parsed()) return cmd_verify(va, out, err);
    if (sc->parsed()) {
        sa.timing = !no_timing;
        return cmd_scaling(sa, out, err);
    }
    return cmd_ggm(ggm_d, ggm_out, out, err);
}

} // namespace qoq::cli
