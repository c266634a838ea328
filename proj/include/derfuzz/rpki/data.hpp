#pragma once

#include <filesystem>
#include <map>
#include <stdexcept>
#include <string>

#include "derfuzz/asn1/label.hpp"
#include "derfuzz/bytes.hpp"
#include "derfuzz/repair/plan.hpp"

#ifndef DERFUZZ_DATA_DIR
#define DERFUZZ_DATA_DIR "data"
#endif

namespace derfuzz::rpki {

/// Schemas and repair plans ship as editable text files; this loads them once
/// per kind from a data directory (default: the tree the binary was built
/// from, override with --data-dir or DERFUZZ_DATA_DIR in the environment).
class DataDir {
public:
    explicit DataDir(std::filesystem::path root = default_root()) : root_(std::move(root)) {}

    static std::filesystem::path default_root() {
        if (const char* env = std::getenv("DERFUZZ_DATA_DIR")) return env;
        return DERFUZZ_DATA_DIR;
    }

    const std::filesystem::path& root() const { return root_; }

    const asn1::LabelSchema& schema(asn1::ObjectKind kind) const {
        auto it = schemas_.find(kind);
        if (it != schemas_.end()) return it->second;
        auto path = root_ / "schemas" / (asn1::kind_name(kind) + ".schema");
        asn1::LabelSchema s;
        if (std::filesystem::exists(path)) {
            s = asn1::parse_schema(read_text_file(path));
        } else {
            s.object_kind = kind;  // generic kinds have no patterns
        }
        return schemas_.emplace(kind, std::move(s)).first->second;
    }

    const repair::RepairPlan& plan(asn1::ObjectKind kind) const {
        auto it = plans_.find(kind);
        if (it != plans_.end()) return it->second;
        auto path = root_ / "plans" / (asn1::kind_name(kind) + ".plan");
        repair::RepairPlan p;
        p.object_kind = kind;
        if (std::filesystem::exists(path))
            p = repair::parse_plan(read_text_file(path), kind);
        return plans_.emplace(kind, std::move(p)).first->second;
    }

private:
    std::filesystem::path root_;
    mutable std::map<asn1::ObjectKind, asn1::LabelSchema> schemas_;
    mutable std::map<asn1::ObjectKind, repair::RepairPlan> plans_;
};

}  // namespace derfuzz::rpki
