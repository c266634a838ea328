#pragma once

#include <map>
#include <optional>
#include <sstream>
#include <string>

#include "derfuzz/orch/target.hpp"
#include "derfuzz/rpki/vrp.hpp"

namespace derfuzz::orch {

enum class OracleKind { crash, stall, integrity, consistency };

inline std::string oracle_name(OracleKind k) {
    switch (k) {
        case OracleKind::crash: return "crash";
        case OracleKind::stall: return "stall";
        case OracleKind::integrity: return "integrity";
        case OracleKind::consistency: return "consistency";
    }
    return "?";
}

struct OracleReport {
    OracleKind kind = OracleKind::crash;
    std::string target;  // empty for consistency (covers several targets)
    std::string detail;
    double runtime_s = 0;
    std::string log_excerpt;
};

/// Abnormal termination, crash keywords in the log, or lack of an output
/// artifact all count as a crash.
inline std::optional<OracleReport> oracle_crash(const RunResult& run,
                                                const TargetConfig& config,
                                                const std::string& log_text) {
    OracleReport report;
    report.kind = OracleKind::crash;
    report.target = config.name;
    report.runtime_s = run.runtime_s;
    if (!run.spawned) {
        report.detail = "process failed to spawn";
        return report;
    }
    if (run.signaled) {
        report.detail = "terminated by signal " + std::to_string(run.term_signal);
    } else if (run.timed_out) {
        // hard timeout is handled by the stall oracle unless the process died
        return std::nullopt;
    }
    for (const auto& keyword : config.crash_keywords)
        if (log_text.find(keyword) != std::string::npos) {
            report.detail += (report.detail.empty() ? "" : "; ");
            report.detail += "crash keyword '" + keyword + "' in log";
            break;
        }
    bool no_output = !std::filesystem::exists(run.output_path) ||
                     std::filesystem::file_size(run.output_path) == 0;
    if (report.detail.empty() && no_output && run.exited_normally)
        report.detail = "lack of output despite exit code " + std::to_string(run.exit_code);
    if (report.detail.empty() && run.exited_normally && run.exit_code != 0 && no_output)
        report.detail = "nonzero exit " + std::to_string(run.exit_code) + " without output";
    if (report.detail.empty()) return std::nullopt;
    size_t tail = log_text.size() > 2000 ? log_text.size() - 2000 : 0;
    report.log_excerpt = log_text.substr(tail);
    return report;
}

/// Runs exceeding twice the baseline (mean of five valid batches measured
/// before fuzzing) are flagged.
inline std::optional<OracleReport> oracle_stall(const std::string& target, double runtime_s,
                                                double baseline_s) {
    if (baseline_s <= 0 || runtime_s <= 2.0 * baseline_s) return std::nullopt;
    OracleReport report;
    report.kind = OracleKind::stall;
    report.target = target;
    report.runtime_s = runtime_s;
    report.detail = "runtime " + std::to_string(runtime_s) + " s exceeds twice the baseline " +
                    std::to_string(baseline_s) + " s";
    return report;
}

/// The independent CA's test object must appear in the accepted output; an
/// unparseable output fails closed.
inline std::optional<OracleReport> oracle_integrity(const std::string& target,
                                                    const std::optional<rpki::VrpSet>& output,
                                                    const rpki::VrpTriple& test_vrp) {
    OracleReport report;
    report.kind = OracleKind::integrity;
    report.target = target;
    if (!output) {
        report.detail = "accepted-ROA output unparseable; failing closed";
        return report;
    }
    if (!output->count(test_vrp)) {
        report.detail = "test object " + test_vrp.to_line() + " missing from accepted output";
        return report;
    }
    return std::nullopt;
}

/// Pairwise comparison of accepted VRP sets across implementations.
inline std::optional<OracleReport> oracle_consistency(
    const std::map<std::string, rpki::VrpSet>& outputs) {
    if (outputs.size() < 2) return std::nullopt;
    std::ostringstream detail;
    bool differs = false;
    for (auto a = outputs.begin(); a != outputs.end(); ++a)
        for (auto b = std::next(a); b != outputs.end(); ++b) {
            std::vector<rpki::VrpTriple> only_a, only_b;
            std::set_difference(a->second.begin(), a->second.end(), b->second.begin(),
                                b->second.end(), std::back_inserter(only_a));
            std::set_difference(b->second.begin(), b->second.end(), a->second.begin(),
                                a->second.end(), std::back_inserter(only_b));
            if (only_a.empty() && only_b.empty()) continue;
            differs = true;
            detail << a->first << " vs " << b->first << ":";
            for (const auto& v : only_a) detail << " only-" << a->first << "=" << v.to_line();
            for (const auto& v : only_b) detail << " only-" << b->first << "=" << v.to_line();
            detail << "; ";
        }
    if (!differs) return std::nullopt;
    OracleReport report;
    report.kind = OracleKind::consistency;
    report.detail = detail.str();
    return report;
}

}  // namespace derfuzz::orch
