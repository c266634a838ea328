#pragma once

#include <unistd.h>

#include <filesystem>
#include <string>

namespace test_paths {

inline std::filesystem::path self_dir() {
    char buf[4096];
    ssize_t n = ::readlink("/proc/self/exe", buf, sizeof(buf) - 1);
    if (n <= 0) return std::filesystem::current_path();
    buf[n] = 0;
    return std::filesystem::path(buf).parent_path();
}

inline std::string sim_validator() { return (self_dir() / "sim_validator").string(); }
inline std::string derfuzz_cli() { return (self_dir() / "derfuzz").string(); }

struct TempDir {
    std::filesystem::path path;
    TempDir() {
        static size_t counter = 0;
        path = std::filesystem::temp_directory_path() /
               ("derfuzz_orch_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
        std::filesystem::create_directories(path);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path, ec);
    }
};

}  // namespace test_paths
