#pragma once

#include <spawn.h>
#include <sys/wait.h>
#include <unistd.h>

#include <json.hpp>

#include <chrono>
#include <filesystem>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "derfuzz/bytes.hpp"
#include "derfuzz/rpki/vrp.hpp"

extern "C" char** environ;

namespace derfuzz::orch {

/// One JSON file per relying party describes how to run it. Placeholders in
/// `args`: {repo} rsync root, {rrdp} notification.xml, {tal}, {out} the VRP
/// output file, {outdir} the per-run work directory.
struct TargetConfig {
    std::string name;
    std::string binary;
    std::vector<std::string> args;
    std::string tal_flag;
    std::string repo_flag;
    std::string output_file = "vrps.csv";
    std::string output_format = "csv";  // csv | jsonl
    bool coverage = false;
    std::string shm_env_var = "DERFUZZ_SHM";
    size_t bitmap_size = 65536;
    std::vector<std::string> crash_keywords;
    double baseline_runtime_s = 0;  // 0 = measure five valid batches
    std::string shm_transport = "posix";  // posix | file
    double timeout_s = 120;
    std::vector<std::string> extra_env;

    static TargetConfig from_json(const nlohmann::json& j) {
        TargetConfig c;
        c.name = j.at("name").get<std::string>();
        c.binary = j.at("binary").get<std::string>();
        if (j.contains("args"))
            for (const auto& a : j["args"]) c.args.push_back(a.get<std::string>());
        c.tal_flag = j.value("tal_flag", c.tal_flag);
        c.repo_flag = j.value("repo_flag", c.repo_flag);
        c.output_file = j.value("output_file", c.output_file);
        c.output_format = j.value("output_format", c.output_format);
        c.coverage = j.value("coverage", false);
        c.shm_env_var = j.value("shm_env_var", c.shm_env_var);
        c.bitmap_size = j.value("bitmap_size", c.bitmap_size);
        if (j.contains("crash_keywords"))
            for (const auto& k : j["crash_keywords"])
                c.crash_keywords.push_back(k.get<std::string>());
        c.baseline_runtime_s = j.value("baseline_runtime", 0.0);
        c.shm_transport = j.value("shm_transport", c.shm_transport);
        c.timeout_s = j.value("timeout", c.timeout_s);
        if (j.contains("env"))
            for (const auto& e : j["env"]) c.extra_env.push_back(e.get<std::string>());
        return c;
    }

    static TargetConfig load(const std::filesystem::path& path) {
        return from_json(nlohmann::json::parse(read_text_file(path)));
    }
};

struct RunPaths {
    std::filesystem::path rsync_root;
    std::filesystem::path notification;
    std::filesystem::path tal;
    std::filesystem::path work_dir;  // per-target, per-run
};

struct RunResult {
    bool spawned = false;
    bool exited_normally = false;
    int exit_code = -1;
    bool signaled = false;
    int term_signal = 0;
    bool timed_out = false;
    double runtime_s = 0;
    std::filesystem::path output_path;
    std::filesystem::path log_path;  // combined stdout+stderr
};

namespace detail {

inline std::string substitute(std::string arg, const RunPaths& paths,
                              const std::filesystem::path& out_path) {
    auto replace_all = [&arg](const std::string& key, const std::string& value) {
        size_t pos;
        while ((pos = arg.find(key)) != std::string::npos) arg.replace(pos, key.size(), value);
    };
    replace_all("{repo}", paths.rsync_root.string());
    replace_all("{rrdp}", paths.notification.string());
    replace_all("{tal}", paths.tal.string());
    replace_all("{out}", out_path.string());
    replace_all("{outdir}", paths.work_dir.string());
    return arg;
}

}  // namespace detail

/// A spawned target process with its log redirected to a file.
class TargetProcess {
public:
    TargetProcess() = default;

    static TargetProcess spawn(const TargetConfig& config, const RunPaths& paths,
                               const std::vector<std::string>& extra_env) {
        namespace fs = std::filesystem;
        TargetProcess p;
        fs::create_directories(paths.work_dir);
        p.result_.output_path = paths.work_dir / config.output_file;
        p.result_.log_path = paths.work_dir / "target.log";
        std::error_code ec;
        fs::remove(p.result_.output_path, ec);

        std::vector<std::string> argv_store;
        argv_store.push_back(config.binary);
        for (const auto& a : config.args)
            argv_store.push_back(detail::substitute(a, paths, p.result_.output_path));
        if (!config.repo_flag.empty()) {
            argv_store.push_back(config.repo_flag);
            argv_store.push_back(paths.rsync_root.string());
        }
        if (!config.tal_flag.empty()) {
            argv_store.push_back(config.tal_flag);
            argv_store.push_back(paths.tal.string());
        }
        std::vector<char*> argv;
        for (auto& s : argv_store) argv.push_back(s.data());
        argv.push_back(nullptr);

        std::vector<std::string> env_store;
        for (char** e = environ; *e; ++e) env_store.emplace_back(*e);
        for (const auto& e : config.extra_env) env_store.push_back(e);
        for (const auto& e : extra_env) env_store.push_back(e);
        std::vector<char*> envp;
        for (auto& s : env_store) envp.push_back(s.data());
        envp.push_back(nullptr);

        posix_spawn_file_actions_t actions;
        posix_spawn_file_actions_init(&actions);
        posix_spawn_file_actions_addopen(&actions, 1, p.result_.log_path.c_str(),
                                         O_WRONLY | O_CREAT | O_TRUNC, 0644);
        posix_spawn_file_actions_adddup2(&actions, 1, 2);

        p.start_ = std::chrono::steady_clock::now();
        int rc = ::posix_spawn(&p.pid_, config.binary.c_str(), &actions, nullptr, argv.data(),
                               envp.data());
        posix_spawn_file_actions_destroy(&actions);
        p.result_.spawned = rc == 0;
        if (rc != 0) p.pid_ = -1;
        return p;
    }

    bool running() const { return pid_ > 0 && !done_; }
    pid_t pid() const { return pid_; }

    /// Non-blocking poll; true once the process has been reaped.
    bool poll() {
        if (pid_ <= 0 || done_) return true;
        int status = 0;
        pid_t r = ::waitpid(pid_, &status, WNOHANG);
        if (r == 0) return false;
        finish(status);
        return true;
    }

    void kill_now() {
        if (pid_ > 0 && !done_) ::kill(pid_, SIGKILL);
    }

    /// Blocking wait with a deadline; on timeout the process is killed and
    /// the result marked.
    RunResult wait(double timeout_s) {
        if (pid_ <= 0) return result_;
        auto deadline = start_ + std::chrono::duration<double>(timeout_s);
        while (!poll()) {
            if (std::chrono::steady_clock::now() > deadline) {
                result_.timed_out = true;
                kill_now();
                int status = 0;
                ::waitpid(pid_, &status, 0);
                finish(status);
                result_.timed_out = true;
                break;
            }
            ::usleep(200);
        }
        return result_;
    }

    const RunResult& result() const { return result_; }

private:
    void finish(int status) {
        done_ = true;
        result_.runtime_s =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
        result_.exited_normally = WIFEXITED(status);
        if (result_.exited_normally) result_.exit_code = WEXITSTATUS(status);
        result_.signaled = WIFSIGNALED(status);
        if (result_.signaled) result_.term_signal = WTERMSIG(status);
    }

    pid_t pid_ = -1;
    bool done_ = false;
    std::chrono::steady_clock::time_point start_;
    RunResult result_;
};

/// Normalize a target's accepted-ROA output to VRP triples. Returns nothing
/// when the file is missing or malformed so integrity checks can fail closed.
inline std::optional<rpki::VrpSet> parse_vrp_output(const std::filesystem::path& path,
                                                    const std::string& format) {
    if (!std::filesystem::exists(path)) return std::nullopt;
    std::istringstream in(read_text_file(path));
    rpki::VrpSet out;
    std::string line;
    bool first = true;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        if (format == "jsonl") {
            try {
                auto j = nlohmann::json::parse(line);
                rpki::VrpTriple v;
                v.asn = j.at("asn").get<uint64_t>();
                v.prefix = j.at("prefix").get<std::string>();
                v.max_length = j.at("maxLength").get<uint32_t>();
                out.insert(std::move(v));
            } catch (const std::exception&) {
                return std::nullopt;
            }
            continue;
        }
        // csv with a header line
        if (first && line.rfind("asn,", 0) == 0) {
            first = false;
            continue;
        }
        first = false;
        auto v = rpki::VrpTriple::from_line(line);
        if (!v) return std::nullopt;
        out.insert(std::move(*v));
    }
    return out;
}

}  // namespace derfuzz::orch
