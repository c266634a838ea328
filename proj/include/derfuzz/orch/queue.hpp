#pragma once

#include <algorithm>
#include <filesystem>
#include <vector>

#include "derfuzz/asn1/label.hpp"
#include "derfuzz/asn1/parse.hpp"
#include "derfuzz/mutate/mutator.hpp"
#include "derfuzz/rpki/data.hpp"
#include "derfuzz/rpki/make.hpp"

namespace derfuzz::orch {

struct QueueEntry {
    uint64_t id = 0;
    asn1::TlvNode tree;
    asn1::ObjectKind kind = asn1::ObjectKind::roa;
    int score = 1;  // 0..10
    enum class Origin { real_corpus, generated, mutated_child } origin = Origin::generated;
    uint64_t parent_id = 0;
    std::vector<mut::MutationRecord> lineage;
    bool discarded = false;
};

/// Candidate objects for mutation. Entries discarded once never come back.
class Queue {
public:
    uint64_t add(QueueEntry entry) {
        entry.id = next_id_++;
        entries_.push_back(std::move(entry));
        return entries_.back().id;
    }

    std::vector<mut::ParentRef> parents() const {
        std::vector<mut::ParentRef> out;
        for (const auto& e : entries_)
            if (!e.discarded && e.score > 0)
                out.push_back({e.id, &e.tree, e.kind, e.score});
        return out;
    }

    const std::vector<QueueEntry>& entries() const { return entries_; }
    std::vector<QueueEntry>& entries() { return entries_; }

    const QueueEntry* by_id(uint64_t id) const {
        for (const auto& e : entries_)
            if (e.id == id) return &e;
        return nullptr;
    }

    size_t size() const { return entries_.size(); }

private:
    std::vector<QueueEntry> entries_;
    uint64_t next_id_ = 1;
};

struct SeedStats {
    size_t from_corpus = 0;
    size_t generated = 0;
    std::vector<std::string> diagnostics;
};

/// Seed the queue half from real-world corpus files, half from the built-in
/// well-formed generator. Corpus files are parsed (totally) and labeled on
/// insertion; only I/O errors skip a file.
inline SeedStats seed_queue(Queue& queue, const std::filesystem::path& corpus_dir,
                            size_t target_batch_size, asn1::ObjectKind kind,
                            const rpki::DataDir& data, const crypto::KeyMaterial& keys,
                            const rpki::Clock& clock, Rng& rng) {
    namespace fs = std::filesystem;
    SeedStats stats;

    std::vector<fs::path> corpus_files;
    if (!corpus_dir.empty() && fs::exists(corpus_dir)) {
        for (const auto& entry : fs::directory_iterator(corpus_dir))
            if (entry.is_regular_file()) corpus_files.push_back(entry.path());
        std::sort(corpus_files.begin(), corpus_files.end());
    }

    size_t want_corpus = corpus_files.empty() ? 0 : target_batch_size / 2;
    for (size_t i = 0; i < want_corpus; ++i) {
        const fs::path& path = corpus_files[rng.below(corpus_files.size())];
        Bytes bytes;
        try {
            bytes = read_file(path);
        } catch (const std::exception& e) {
            stats.diagnostics.push_back("skip " + path.string() + ": " + e.what());
            continue;
        }
        QueueEntry e;
        e.kind = asn1::kind_from_extension(path.extension().string());
        auto parsed = asn1::parse_der(bytes);
        e.tree = std::move(parsed.root);
        asn1::label_tree(e.tree, data.schema(e.kind));
        e.origin = QueueEntry::Origin::real_corpus;
        queue.add(std::move(e));
        ++stats.from_corpus;
    }

    while (stats.from_corpus + stats.generated < target_batch_size) {
        QueueEntry e;
        e.kind = kind;
        e.tree = rpki::make_generated(kind, rng, keys, clock, 500000 + stats.generated);
        asn1::label_tree(e.tree, data.schema(kind));
        e.origin = QueueEntry::Origin::generated;
        queue.add(std::move(e));
        ++stats.generated;
    }
    return stats;
}

}  // namespace derfuzz::orch
