#pragma once

#include <fcntl.h>
#include <sys/mman.h>
#include <sys/stat.h>
#include <unistd.h>

#include <atomic>
#include <cstring>
#include <stdexcept>
#include <string>

namespace derfuzz::cov {

/// AFL-style shared counter region. The fuzzer creates it and announces it to
/// the target through an environment variable; the target maps it and bumps
/// 8-bit counters. Two transports: a named POSIX shared-memory segment
/// (default, value is the segment name) or a plain mapped file (value
/// "file:<path>").
class SharedRegion {
public:
    SharedRegion() = default;
    SharedRegion(const SharedRegion&) = delete;
    SharedRegion& operator=(const SharedRegion&) = delete;
    SharedRegion(SharedRegion&& o) noexcept { swap(o); }
    SharedRegion& operator=(SharedRegion&& o) noexcept {
        release();
        swap(o);
        return *this;
    }
    ~SharedRegion() { release(); }

    static SharedRegion create(size_t size) {
        static std::atomic<uint64_t> counter{0};
        std::string name = "/derfuzz." + std::to_string(::getpid()) + "." +
                           std::to_string(counter.fetch_add(1));
        if (const char* forced = std::getenv("DERFUZZ_SHM_NAME")) name = forced;
        SharedRegion r;
        int fd = ::shm_open(name.c_str(), O_CREAT | O_RDWR, 0600);
        if (fd < 0) throw std::runtime_error("shm_open failed for " + name);
        if (::ftruncate(fd, static_cast<off_t>(size)) != 0) {
            ::close(fd);
            ::shm_unlink(name.c_str());
            throw std::runtime_error("ftruncate failed for " + name);
        }
        r.map(fd, size);
        ::close(fd);
        r.id_ = name;
        r.owner_ = true;
        r.zero();
        return r;
    }

    static SharedRegion create_file(const std::string& path, size_t size) {
        SharedRegion r;
        int fd = ::open(path.c_str(), O_CREAT | O_RDWR | O_TRUNC, 0600);
        if (fd < 0) throw std::runtime_error("cannot create map file " + path);
        if (::ftruncate(fd, static_cast<off_t>(size)) != 0) {
            ::close(fd);
            throw std::runtime_error("ftruncate failed for " + path);
        }
        r.map(fd, size);
        ::close(fd);
        r.id_ = "file:" + path;
        r.owner_ = true;
        r.zero();
        return r;
    }

    /// Target side: attach to whatever the named environment variable
    /// announces. Returns an empty region when the variable is unset.
    static SharedRegion open_from_env(const std::string& env_var, size_t expected_size) {
        SharedRegion r;
        const char* value = std::getenv(env_var.c_str());
        if (!value || !*value) return r;
        std::string id = value;
        int fd = -1;
        if (id.rfind("file:", 0) == 0)
            fd = ::open(id.substr(5).c_str(), O_RDWR);
        else
            fd = ::shm_open(id.c_str(), O_RDWR, 0600);
        if (fd < 0) return r;
        struct stat st {};
        size_t size = expected_size;
        if (::fstat(fd, &st) == 0 && st.st_size > 0) size = static_cast<size_t>(st.st_size);
        r.map(fd, size);
        ::close(fd);
        r.id_ = id;
        r.owner_ = false;
        return r;
    }

    uint8_t* data() { return data_; }
    const uint8_t* data() const { return data_; }
    size_t size() const { return size_; }
    bool valid() const { return data_ != nullptr; }
    const std::string& id() const { return id_; }

    void zero() {
        if (data_) std::memset(data_, 0, size_);
    }

private:
    void map(int fd, size_t size) {
        void* p = ::mmap(nullptr, size, PROT_READ | PROT_WRITE, MAP_SHARED, fd, 0);
        if (p == MAP_FAILED) throw std::runtime_error("mmap failed");
        data_ = static_cast<uint8_t*>(p);
        size_ = size;
    }

    void release() {
        if (data_) ::munmap(data_, size_);
        if (owner_ && !id_.empty() && id_.rfind("file:", 0) != 0)
            ::shm_unlink(id_.c_str());
        data_ = nullptr;
        size_ = 0;
        owner_ = false;
        id_.clear();
    }

    void swap(SharedRegion& o) {
        std::swap(data_, o.data_);
        std::swap(size_, o.size_);
        std::swap(owner_, o.owner_);
        std::swap(id_, o.id_);
    }

    uint8_t* data_ = nullptr;
    size_t size_ = 0;
    bool owner_ = false;
    std::string id_;
};

}  // namespace derfuzz::cov
