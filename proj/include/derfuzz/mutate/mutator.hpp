#pragma once

#include <atomic>
#include <functional>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "derfuzz/asn1/label.hpp"
#include "derfuzz/asn1/tlv_json.hpp"
#include "derfuzz/mutate/catalog.hpp"
#include "derfuzz/repair/repair.hpp"

namespace derfuzz::mut {

struct MutationRecord {
    asn1::NodePath target;
    std::string target_label;  // label at mutation time, for triage
    Category category;
    std::string operator_id;
    Bytes parameters;
    bool sets_protected = true;
    bool sets_breaking = false;
};

/// One record per line: position/label, operator id, parameter hex.
inline std::string record_to_line(const MutationRecord& r) {
    std::ostringstream out;
    out << "pos=" << asn1::path_to_string(r.target)
        << " label=" << (r.target_label.empty() ? "-" : r.target_label)
        << " cat=" << category_name(r.category) << " op=" << r.operator_id
        << " params=" << (r.parameters.empty() ? "-" : hex_encode(r.parameters))
        << " protected=" << (r.sets_protected ? 1 : 0)
        << " breaking=" << (r.sets_breaking ? 1 : 0);
    return out.str();
}

inline MutationRecord record_from_line(const std::string& line) {
    MutationRecord r;
    std::istringstream in(line);
    std::string field;
    while (in >> field) {
        size_t eq = field.find('=');
        if (eq == std::string::npos) continue;
        std::string key = field.substr(0, eq);
        std::string value = field.substr(eq + 1);
        if (key == "pos") r.target = asn1::path_from_string(value);
        else if (key == "label") r.target_label = value == "-" ? "" : value;
        else if (key == "cat") r.category = category_from_name(value);
        else if (key == "op") r.operator_id = value;
        else if (key == "params" && value != "-") r.parameters = hex_decode(value);
        else if (key == "protected") r.sets_protected = value == "1";
        else if (key == "breaking") r.sets_breaking = value == "1";
    }
    return r;
}

/// Uniformly distributed node position over all nodes of the tree.
inline asn1::NodePath select_node(const asn1::TlvNode& root, Rng& rng) {
    std::vector<asn1::NodePath> paths;
    asn1::walk(root, [&](const asn1::TlvNode&, const asn1::NodePath& p) {
        paths.push_back(p);
        return true;
    });
    return paths[rng.below(paths.size())];
}

namespace detail {

inline MutationRecord apply_operator(asn1::TlvNode& root, const asn1::NodePath& path,
                                     const Operator& op, Rng& rng) {
    asn1::TlvNode* node = root.child_at(path);
    MutationRecord r;
    r.target = path;
    r.target_label = node->label;
    r.category = op.category;
    r.operator_id = op.id;
    r.parameters = op.plan(*node, rng);
    op.apply(*node, r.parameters);
    r.sets_breaking = op.category == Category::structure;
    repair::propagate_taint(root);
    return r;
}

inline std::optional<const Operator*> pick(const MutationCatalog& cat,
                                           const asn1::TlvNode& node, Category category,
                                           Rng& rng) {
    auto ops = cat.applicable(node, category);
    if (ops.empty()) return std::nullopt;
    return ops[rng.below(ops.size())];
}

/// Byte-level work needs a primitive. Prefer one inside the chosen subtree,
/// then anywhere in the tree; only a tree with no primitives at all gives up.
inline std::optional<asn1::NodePath> find_primitive_target(const asn1::TlvNode& root,
                                                           const asn1::NodePath& path,
                                                           Rng& rng) {
    auto collect = [](const asn1::TlvNode& base, const asn1::NodePath& prefix) {
        std::vector<asn1::NodePath> out;
        asn1::walk(base, [&](const asn1::TlvNode& n, const asn1::NodePath& p) {
            if (!n.constructed && !n.encapsulated) {
                asn1::NodePath full = prefix;
                full.insert(full.end(), p.begin(), p.end());
                out.push_back(std::move(full));
            }
            return true;
        });
        return out;
    };
    auto local = collect(*root.child_at(path), path);
    if (!local.empty()) return local[rng.below(local.size())];
    auto global = collect(root, {});
    if (!global.empty()) return global[rng.below(global.size())];
    return std::nullopt;
}

}  // namespace detail

/// Break the node's tag or length field.
inline MutationRecord mutate_structure(asn1::TlvNode& root, const asn1::NodePath& path,
                                       Rng& rng, const MutationCatalog& cat = catalog()) {
    auto op = detail::pick(cat, *root.child_at(path), Category::structure, rng);
    if (!op) op = detail::pick(cat, *root.child_at(path), Category::byte, rng);
    return detail::apply_operator(root, path, **op, rng);
}

/// Raw content mutation with no type awareness. Constructed targets redirect
/// to a primitive node (inside the subtree when possible) so byte edits never
/// silently turn into structure damage.
inline MutationRecord mutate_bytes(asn1::TlvNode& root, const asn1::NodePath& path, Rng& rng,
                                   const MutationCatalog& cat = catalog()) {
    asn1::NodePath target = path;
    if (cat.applicable(*root.child_at(path), Category::byte).empty()) {
        auto redirected = detail::find_primitive_target(root, path, rng);
        if (redirected) target = *redirected;
    }
    auto op = detail::pick(cat, *root.child_at(target), Category::byte, rng);
    if (!op) op = detail::pick(cat, *root.child_at(target), Category::structure, rng);
    return detail::apply_operator(root, target, **op, rng);
}

/// Mutate a node's content according to its ASN.1 type; nodes with no typed
/// operator fall back to the byte category (visible in the record).
inline MutationRecord mutate_typed(asn1::TlvNode& root, const asn1::NodePath& path, Rng& rng,
                                   const MutationCatalog& cat = catalog()) {
    asn1::TlvNode* node = root.child_at(path);
    auto op = detail::pick(cat, *node, Category::type, rng);
    if (!op) return mutate_bytes(root, path, rng, cat);
    return detail::apply_operator(root, path, **op, rng);
}

/// Replace a random non-root node of `dest` with a deep copy of a random
/// subtree of `src`, children included. Labels that would collide with ones
/// already present are stripped from the copy. A single-node dest becomes a
/// copy of the src tree.
inline MutationRecord splice(asn1::TlvNode& dest, const asn1::TlvNode& src, Rng& rng,
                             const MutationCatalog& cat = catalog()) {
    std::vector<asn1::NodePath> dest_paths;
    asn1::walk(std::as_const(dest),
               [&](const asn1::TlvNode&, const asn1::NodePath& p) {
                   if (!p.empty()) dest_paths.push_back(p);  // never the root
                   return true;
               });
    std::vector<asn1::NodePath> src_paths;
    asn1::walk(src, [&](const asn1::TlvNode&, const asn1::NodePath& p) {
        src_paths.push_back(p);
        return true;
    });

    asn1::TlvNode incoming = *src.child_at(src_paths[rng.below(src_paths.size())]);
    asn1::NodePath target =
        dest_paths.empty() ? asn1::NodePath{} : dest_paths[rng.below(dest_paths.size())];

    MutationRecord r;
    r.target = target;
    r.category = Category::splice;
    r.operator_id = "splice_subtree";
    asn1::TlvNode* victim = dest.child_at(target);
    r.target_label = victim->label;

    // drop labels from the copy that still exist elsewhere in dest
    {
        std::set<std::string> existing;
        asn1::walk(std::as_const(dest),
                   [&](const asn1::TlvNode& n, const asn1::NodePath& p) {
                       if (!n.label.empty() && p != target) existing.insert(n.label);
                       return true;
                   });
        asn1::walk(incoming, [&](asn1::TlvNode& n, const asn1::NodePath&) {
            if (existing.count(n.label)) n.label.clear();
            return true;
        });
    }
    r.parameters = to_bytes(asn1::tlv_to_json(incoming).dump());
    cat.by_id("splice_subtree").apply(*victim, r.parameters);
    repair::propagate_taint(dest);
    return r;
}

/// Re-apply a recorded mutation; the parameter blob carries all randomness,
/// so this reproduces the original result bit for bit.
inline void apply_record(asn1::TlvNode& root, const MutationRecord& r,
                         const MutationCatalog& cat = catalog()) {
    asn1::TlvNode* node = root.child_at(r.target);
    if (!node) throw std::runtime_error("record target out of tree: " +
                                        asn1::path_to_string(r.target));
    cat.by_id(r.operator_id).apply(*node, r.parameters);
    repair::propagate_taint(root);
}

// ---------------------------------------------------------------------------

struct ParentRef {
    uint64_t id = 0;
    const asn1::TlvNode* tree = nullptr;
    asn1::ObjectKind kind = asn1::ObjectKind::roa;
    int score = 1;
};

struct BatchEntry {
    asn1::TlvNode tree;
    asn1::ObjectKind kind = asn1::ObjectKind::roa;
    uint64_t parent_id = 0;
    std::vector<MutationRecord> log;
    int score = 0;
    bool discard = false;
    Bytes encoded;  // filled after repair + encode
};

struct Batch {
    std::vector<BatchEntry> entries;
    uint64_t seed = 0;
};

struct MutateOptions {
    size_t max_mutations = 16;
    double extra_mutation_p = 0.75;  // geometric continuation, mean 4 per object
    double w_structure = 0.15;
    double w_type = 0.40;
    double w_byte = 0.30;
    double w_splice = 0.15;
    size_t workers = 0;  // 0 = hardware concurrency
    // fallback source when the parent list is empty
    std::function<asn1::TlvNode(Rng&, uint64_t)> generator;
    asn1::ObjectKind generated_kind = asn1::ObjectKind::roa;
};

namespace detail {

inline void mutate_entry(BatchEntry& entry, const asn1::TlvNode* donor, Rng rng,
                         const MutationCatalog& cat, const MutateOptions& opt) {
    size_t count = 1;
    while (count < opt.max_mutations && rng.chance(opt.extra_mutation_p)) ++count;
    for (size_t m = 0; m < count; ++m) {
        asn1::NodePath path = select_node(entry.tree, rng);
        double total = opt.w_structure + opt.w_type + opt.w_byte + opt.w_splice;
        double roll = static_cast<double>(rng.below(1000000)) / 1000000.0 * total;
        MutationRecord rec;
        if (roll < opt.w_structure) {
            rec = mutate_structure(entry.tree, path, rng, cat);
        } else if (roll < opt.w_structure + opt.w_type) {
            rec = mutate_typed(entry.tree, path, rng, cat);
        } else if (roll < opt.w_structure + opt.w_type + opt.w_byte) {
            rec = mutate_bytes(entry.tree, path, rng, cat);
        } else if (donor) {
            rec = splice(entry.tree, *donor, rng, cat);
        } else {
            rec = mutate_bytes(entry.tree, path, rng, cat);
        }
        entry.log.push_back(std::move(rec));
    }
}

}  // namespace detail

/// Produce `batch_size` mutated objects. Parents are sampled proportionally
/// to their score; every entry keeps its parent id and full mutation log.
/// Sampling and per-entry seeds are drawn serially from `rng`, so the result
/// is identical however many workers fan the mutation work out.
inline Batch mutate_batch(const std::vector<ParentRef>& parents, size_t batch_size, Rng& rng,
                          const MutateOptions& opt = {},
                          const MutationCatalog& cat = catalog()) {
    Batch batch;
    batch.entries.resize(batch_size);

    uint64_t score_total = 0;
    for (const auto& p : parents) score_total += static_cast<uint64_t>(std::max(p.score, 0));

    struct Pick {
        const ParentRef* parent;
        const asn1::TlvNode* donor;
        uint64_t sub_seed;
    };
    std::vector<Pick> picks(batch_size);
    std::vector<asn1::TlvNode> generated;
    generated.reserve(parents.empty() ? batch_size : 0);

    for (size_t i = 0; i < batch_size; ++i) {
        const ParentRef* parent = nullptr;
        if (score_total > 0) {
            uint64_t roll = rng.below(score_total);
            for (const auto& p : parents) {
                uint64_t w = static_cast<uint64_t>(std::max(p.score, 0));
                if (roll < w) {
                    parent = &p;
                    break;
                }
                roll -= w;
            }
        }
        const asn1::TlvNode* donor = nullptr;
        if (!parents.empty())
            donor = parents[rng.below(parents.size())].tree;
        uint64_t sub_seed = rng.next();
        if (!parent) {
            if (!opt.generator)
                throw std::runtime_error("empty parent list and no generator configured");
            Rng gen_rng(sub_seed ^ 0x67656e65726174ULL);
            generated.push_back(opt.generator(gen_rng, i));
            picks[i] = {nullptr, donor, sub_seed};
        } else {
            picks[i] = {parent, donor, sub_seed};
        }
    }

    size_t gen_index = 0;
    for (size_t i = 0; i < batch_size; ++i) {
        BatchEntry& e = batch.entries[i];
        if (picks[i].parent) {
            e.tree = *picks[i].parent->tree;
            e.kind = picks[i].parent->kind;
            e.parent_id = picks[i].parent->id;
        } else {
            e.tree = std::move(generated[gen_index++]);
            e.kind = opt.generated_kind;
            e.parent_id = 0;
        }
        if (!picks[i].donor) picks[i].donor = &e.tree;
    }

    size_t workers = opt.workers ? opt.workers : std::thread::hardware_concurrency();
    workers = std::max<size_t>(1, std::min(workers, batch_size));
    if (workers == 1) {
        for (size_t i = 0; i < batch_size; ++i)
            detail::mutate_entry(batch.entries[i],
                                 picks[i].donor == &batch.entries[i].tree ? nullptr
                                                                          : picks[i].donor,
                                 Rng(picks[i].sub_seed), cat, opt);
    } else {
        std::vector<std::thread> pool;
        std::atomic<size_t> next{0};
        for (size_t w = 0; w < workers; ++w)
            pool.emplace_back([&]() {
                for (;;) {
                    size_t i = next.fetch_add(1);
                    if (i >= batch_size) return;
                    detail::mutate_entry(
                        batch.entries[i],
                        picks[i].donor == &batch.entries[i].tree ? nullptr : picks[i].donor,
                        Rng(picks[i].sub_seed), cat, opt);
                }
            });
        for (auto& t : pool) t.join();
    }
    return batch;
}

}  // namespace derfuzz::mut
