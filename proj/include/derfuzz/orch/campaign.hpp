#pragma once

#include <atomic>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <thread>
#include <vector>

#include "derfuzz/cov/ifs.hpp"
#include "derfuzz/cov/sampler.hpp"
#include "derfuzz/cov/shm.hpp"
#include "derfuzz/orch/oracle.hpp"
#include "derfuzz/orch/queue.hpp"
#include "derfuzz/orch/report.hpp"
#include "derfuzz/orch/target.hpp"
#include "derfuzz/repo/builder.hpp"
#include "derfuzz/repo/serve.hpp"
#include "derfuzz/repo/snapshot.hpp"

namespace derfuzz::orch {

struct CampaignOptions {
    uint64_t seed = 1;
    size_t batch_size = 1000;
    size_t iterations = 10;
    asn1::ObjectKind kind = asn1::ObjectKind::roa;
    std::filesystem::path corpus_dir;
    std::filesystem::path out_dir = "derfuzz-out";
    std::vector<std::filesystem::path> target_config_paths;
    std::string host = "derfuzz.test";
    size_t key_pool_size = 64;
    size_t workers = 0;  // 0 = hardware concurrency
    bool sign_objects = true;       // full cryptographic repair per object
    bool coverage_guidance = true;  // scores feed parent selection
    size_t baseline_runs = 5;
    std::vector<size_t> if_sizes = {20, 100, 200, 400};
    bool serve_http = false;
    size_t max_parallel_mutations = 4;  // geometric cap stays at 16
};

struct TargetState {
    TargetConfig config;
    cov::IfSet ifs;
    std::set<uint32_t> known;  // counters already scored this campaign
    double baseline_s = 0;
};

struct TargetRunOutcome {
    RunResult result;
    std::string log_text;
    std::optional<rpki::VrpSet> output;
    std::vector<cov::AttributionRecord> records;
    cov::SampleStats sample_stats;
    std::map<uint32_t, uint64_t> first_activation;
    std::map<uint32_t, uint64_t> last_increment;
    cov::WideCounters wide;
};

struct IterationOutcome {
    uint64_t iteration = 0;
    uint64_t serial = 0;
    size_t new_branches = 0;
    std::vector<OracleReport> oracles;
    std::vector<std::filesystem::path> report_dirs;
    std::map<std::string, double> runtimes;
    Bytes scores;
};

class CampaignError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Campaign engine: seeds the queue, then drives
/// mutate -> repair -> build -> run-all-targets -> attribute -> score ->
/// oracle iterations. All relying parties run in parallel per iteration; the
/// supervisor joins them before oracles and scoring.
class Campaign {
public:
    Campaign(CampaignOptions opt, rpki::DataDir data = rpki::DataDir())
        : opt_(std::move(opt)), data_(std::move(data)) {
        namespace fs = std::filesystem;
        if (opt_.workers == 0)
            opt_.workers = std::max(1u, std::thread::hardware_concurrency());
        fs::create_directories(opt_.out_dir / "work");
        fs::create_directories(opt_.out_dir / "reports");

        for (const auto& path : opt_.target_config_paths) {
            TargetState state;
            try {
                state.config = TargetConfig::load(path);
            } catch (const std::exception& e) {
                throw CampaignError("bad target config " + path.string() + ": " + e.what());
            }
            if (!fs::exists(state.config.binary))
                throw CampaignError("target binary missing: " + state.config.binary +
                                    " (config " + path.string() + ")");
            targets_.push_back(std::move(state));
        }

        snapshot_ = repo::load_or_build_snapshot(
            opt_.seed, data_, opt_.out_dir / "snapshot.json",
            {opt_.host, opt_.key_pool_size});

        Rng seed_rng = Rng::from_label(opt_.seed, "seed-queue");
        crypto::KeyMaterial gen_keys{&snapshot_.fuzz_ca_key, &snapshot_.one_off_pool.pick(0)};
        seed_stats_ = seed_queue(queue_, opt_.corpus_dir, opt_.batch_size, opt_.kind, data_,
                                 gen_keys, snapshot_.clock, seed_rng);
    }

    const Queue& queue() const { return queue_; }
    Queue& queue() { return queue_; }
    const SeedStats& seed_stats() const { return seed_stats_; }
    const repo::RepoSnapshot& snapshot() const { return snapshot_; }
    const std::vector<TargetState>& targets() const { return targets_; }
    uint64_t iteration() const { return iteration_; }

    const TargetState* target_state(const std::string& name) const {
        for (const auto& t : targets_)
            if (t.config.name == name) return &t;
        return nullptr;
    }

    /// Identification-counter discovery plus stall baselines. Runs once,
    /// lazily, before the first fuzzing iteration.
    void prepare() {
        if (prepared_) return;
        prepared_ = true;
        for (auto& target : targets_) {
            if (target.config.coverage) discover_ifs(target);
            if (target.config.baseline_runtime_s > 0) {
                target.baseline_s = target.config.baseline_runtime_s;
            } else if (opt_.baseline_runs > 0) {
                measure_baseline(target);
            }
        }
    }

    IterationOutcome run_iteration() {
        prepare();
        ++iteration_;
        IterationOutcome outcome;
        outcome.iteration = iteration_;

        Rng rng = Rng::from_label(opt_.seed, "iteration", iteration_);
        mut::Batch batch =
            mut::mutate_batch(queue_.parents(), opt_.batch_size, rng, mutate_options());
        repair_batch(batch, ++serial_);
        outcome.serial = serial_;
        repo::RepoLayout layout = repo::build_repository(
            batch, snapshot_, serial_, opt_.out_dir / "work" / "repo", data_);

        auto runs = run_all_targets(layout, /*attribute=*/true);

        // scoring: merged new-branch counts across coverage-capable targets
        std::vector<cov::AttributionRecord> merged;
        for (auto& [name, run] : runs) {
            outcome.runtimes[name] = run.result.runtime_s;
            merged.insert(merged.end(), run.records.begin(), run.records.end());
        }
        outcome.new_branches = merged.size();
        cov::score_objects(merged, batch);
        outcome.scores.resize(batch.entries.size());
        for (size_t i = 0; i < batch.entries.size(); ++i)
            outcome.scores[i] = static_cast<uint8_t>(batch.entries[i].score);

        evaluate_oracles(runs, outcome);
        if (!outcome.oracles.empty())
            persist_reports(outcome, batch, layout, runs);

        if (opt_.coverage_guidance) {
            for (auto& entry : batch.entries) {
                if (entry.score <= 0) continue;  // discarded, never re-selected
                QueueEntry child;
                child.tree = std::move(entry.tree);
                child.kind = entry.kind;
                child.score = entry.score;
                child.origin = QueueEntry::Origin::mutated_child;
                child.parent_id = entry.parent_id;
                child.lineage = std::move(entry.log);
                queue_.add(std::move(child));
            }
        }
        return outcome;
    }

    /// Attribution log for the last run of each coverage target, appended to
    /// a per-run text file under work/.
    const std::filesystem::path& attribution_log() const { return attribution_log_; }

    /// mutate+repair+encode pipeline throughput in objects per second.
    double bench(size_t total_objects) {
        Rng rng = Rng::from_label(opt_.seed, "bench");
        auto start = std::chrono::steady_clock::now();
        mut::Batch batch = mut::mutate_batch(queue_.parents(), total_objects, rng,
                                             mutate_options());
        repair_batch(batch, 999999);
        double secs =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        return static_cast<double>(total_objects) / secs;
    }

    /// Build one repository from mutated objects without running targets;
    /// used by the build-repo subcommand.
    repo::RepoLayout build_once(const std::filesystem::path& out_dir) {
        Rng rng = Rng::from_label(opt_.seed, "iteration", 1);
        mut::Batch batch =
            mut::mutate_batch(queue_.parents(), opt_.batch_size, rng, mutate_options());
        repair_batch(batch, ++serial_);
        return repo::build_repository(batch, snapshot_, serial_, out_dir, data_);
    }

private:
    mut::MutateOptions mutate_options() {
        mut::MutateOptions mo;
        mo.workers = opt_.workers;
        mo.generated_kind = opt_.kind;
        mo.generator = [this](Rng& r, uint64_t serial) {
            crypto::KeyMaterial keys{&snapshot_.fuzz_ca_key,
                                     &snapshot_.one_off_pool.pick(serial)};
            asn1::TlvNode tree =
                rpki::make_generated(opt_.kind, r, keys, snapshot_.clock, 700000 + serial);
            asn1::label_tree(tree, data_.schema(opt_.kind));
            return tree;
        };
        return mo;
    }

    rpki::RepairContext entry_context(size_t index, asn1::ObjectKind kind, uint64_t serial) {
        rpki::RepairContext ctx;
        ctx.keys.ca = &snapshot_.fuzz_ca_key;
        ctx.keys.one_off = &snapshot_.one_off_pool.pick(index);
        ctx.clock = snapshot_.clock;
        ctx.ca_subject_der = asn1::encode_der(rpki::make_name("derfuzz-ca"));
        char name[32];
        std::snprintf(name, sizeof(name), "obj%05zu%s", index,
                      repo::object_extension(kind).c_str());
        ctx.object_uri = snapshot_.fuzz_object_uri(name);
        ctx.crl_uri = snapshot_.rsync_base() + "fuzz/fuzz.crl";
        ctx.manifest_uri = snapshot_.rsync_base() + "fuzz/fuzz.mft";
        ctx.ca_cert_uri = snapshot_.rsync_base() + "ta/fuzz.cer";
        ctx.ca_repo_uri = snapshot_.rsync_base() + "fuzz/";
        ctx.ee_serial = serial * 1000000 + index;
        return ctx;
    }

    void repair_batch(mut::Batch& batch, uint64_t serial) {
        std::atomic<size_t> next{0};
        auto worker = [&]() {
            for (;;) {
                size_t i = next.fetch_add(1);
                if (i >= batch.entries.size()) return;
                auto& e = batch.entries[i];
                rpki::RepairContext ctx = entry_context(i, e.kind, serial);
                if (opt_.sign_objects)
                    repair::repair_fields(e.tree, data_.plan(e.kind), ctx);
                else
                    repair::propagate_taint(e.tree);
                e.encoded = asn1::encode_der(e.tree);
            }
        };
        size_t workers = std::min(opt_.workers, std::max<size_t>(1, batch.entries.size()));
        if (workers <= 1) {
            worker();
        } else {
            std::vector<std::thread> pool;
            for (size_t w = 0; w < workers; ++w) pool.emplace_back(worker);
            for (auto& t : pool) t.join();
        }
    }

    /// Run every configured target against the layout in parallel; coverage
    /// targets get a fresh shared region and a sampler for the whole run.
    std::map<std::string, TargetRunOutcome> run_all_targets(const repo::RepoLayout& layout,
                                                            bool attribute) {
        struct Live {
            TargetState* state;
            TargetProcess process;
            cov::SharedRegion region;
            std::unique_ptr<std::atomic<bool>> stop;
            std::unique_ptr<cov::Sampler> sampler;
            std::thread sampler_thread;
            TargetRunOutcome outcome;
        };
        std::vector<Live> live;
        live.reserve(targets_.size());

        std::optional<repo::RrdpServer> server;
        if (opt_.serve_http) {
            server.emplace();
            server->start(layout.root);
        }

        live.resize(targets_.size());
        for (size_t t = 0; t < targets_.size(); ++t) {
            TargetState& state = targets_[t];
            Live& l = live[t];  // stable element: sampler threads point into it
            l.state = &state;
            RunPaths paths{layout.rsync_root, layout.notification_path, layout.tal_path,
                           opt_.out_dir / "work" / "targets" / state.config.name};
            std::filesystem::create_directories(paths.work_dir);
            std::vector<std::string> env;
            if (state.config.coverage) {
                if (state.config.shm_transport == "file")
                    l.region = cov::SharedRegion::create_file(
                        (paths.work_dir / "coverage.map").string(), state.config.bitmap_size);
                else
                    l.region = cov::SharedRegion::create(state.config.bitmap_size);
                env.push_back(state.config.shm_env_var + "=" + l.region.id());
                l.stop = std::make_unique<std::atomic<bool>>(false);
                l.sampler = std::make_unique<cov::Sampler>();
                cov::SamplerOptions sopt;
                sopt.known = attribute ? &state.known : nullptr;
                sopt.if_indices = state.ifs.indices;
                sopt.batch_size = opt_.batch_size;
                sopt.track_first_activation = true;
                l.sampler_thread = std::thread([&l, sopt]() {
                    l.outcome.sample_stats = l.sampler->run(
                        l.region.data(), l.region.size(), *l.stop, sopt, &l.outcome.records);
                });
            }
            l.process = TargetProcess::spawn(state.config, paths, env);
            if (!l.process.result().spawned) {
                for (auto& other : live) {
                    if (other.sampler_thread.joinable()) {
                        other.stop->store(true);
                        other.sampler_thread.join();
                    }
                    other.process.kill_now();
                }
                throw CampaignError("failed to launch target " + state.config.name + " (" +
                                    state.config.binary + ")");
            }
        }

        // join all before oracles
        for (auto& l : live) {
            l.outcome.result = l.process.wait(l.state->config.timeout_s);
            if (l.sampler_thread.joinable()) {
                l.stop->store(true);
                l.sampler_thread.join();
                l.outcome.first_activation = l.sampler->first_activation();
                l.outcome.last_increment = l.sampler->last_increment();
                l.outcome.wide = l.sampler->wide();
            }
            if (std::filesystem::exists(l.outcome.result.log_path))
                l.outcome.log_text = read_text_file(l.outcome.result.log_path);
            l.outcome.output = parse_vrp_output(l.outcome.result.output_path,
                                                l.state->config.output_format);
        }

        std::map<std::string, TargetRunOutcome> out;
        for (auto& l : live) {
            append_attribution_log(l.state->config.name, l.outcome.records);
            out.emplace(l.state->config.name, std::move(l.outcome));
        }
        return out;
    }

    void append_attribution_log(const std::string& target,
                                const std::vector<cov::AttributionRecord>& records) {
        if (records.empty()) return;
        attribution_log_ = opt_.out_dir / "work" / "attribution.log";
        std::ofstream out(attribution_log_, std::ios::app);
        for (const auto& r : records) out << target << " " << r.to_line() << "\n";
    }

    void evaluate_oracles(std::map<std::string, TargetRunOutcome>& runs,
                          IterationOutcome& outcome) {
        std::map<std::string, rpki::VrpSet> comparable;
        for (auto& [name, run] : runs) {
            const TargetState* state = target_state(name);
            auto crash = oracle_crash(run.result, state->config, run.log_text);
            if (crash) {
                // a crashed run explains its missing output; the other
                // oracles stay quiet for this target
                outcome.oracles.push_back(std::move(*crash));
                continue;
            }
            if (auto stall = oracle_stall(name, run.result.runtime_s, state->baseline_s))
                outcome.oracles.push_back(std::move(*stall));
            if (auto integrity = oracle_integrity(name, run.output, snapshot_.test_roa_vrp))
                outcome.oracles.push_back(std::move(*integrity));
            if (run.output) comparable.emplace(name, *run.output);
        }
        if (auto consistency = oracle_consistency(comparable))
            outcome.oracles.push_back(std::move(*consistency));
    }

    void persist_reports(IterationOutcome& outcome, const mut::Batch& batch,
                         const repo::RepoLayout& layout,
                         const std::map<std::string, TargetRunOutcome>& runs) {
        std::map<uint64_t, asn1::TlvNode> parents;
        for (const auto& e : batch.entries)
            if (e.parent_id && !parents.count(e.parent_id)) {
                const QueueEntry* q = queue_.by_id(e.parent_id);
                if (q) parents.emplace(e.parent_id, q->tree);
            }
        FindingContext ctx;
        ctx.campaign_seed = opt_.seed;
        ctx.iteration = iteration_;
        ctx.serial = serial_;
        ctx.host = opt_.host;
        ctx.key_pool_size = opt_.key_pool_size;
        ctx.sign_objects = opt_.sign_objects;
        ctx.kind = opt_.kind;
        for (const auto& oracle : outcome.oracles) {
            std::vector<std::string> logs;
            for (const auto& [name, run] : runs)
                logs.push_back("[" + name + "]\n" + run.log_text);
            outcome.report_dirs.push_back(write_report(opt_.out_dir / "reports",
                                                       ++finding_counter_, oracle, ctx, batch,
                                                       parents, layout, logs));
        }
    }

    // ---- preparation ----------------------------------------------------------

    /// Valid (unmutated, repaired) batch built from the queue seeds.
    mut::Batch valid_batch(size_t n, uint64_t serial) {
        mut::Batch batch;
        auto parents = queue_.parents();
        if (parents.empty()) throw CampaignError("queue is empty");
        for (size_t i = 0; i < n; ++i) {
            mut::BatchEntry e;
            const auto& p = parents[i % parents.size()];
            e.tree = *p.tree;
            e.kind = p.kind;
            e.parent_id = p.id;
            batch.entries.push_back(std::move(e));
        }
        repair_batch(batch, serial);
        return batch;
    }

    /// Mutated batch for identification-run repositories.
    mut::Batch manipulated_batch(size_t n, uint64_t salt) {
        Rng rng = Rng::from_label(opt_.seed, "if-discovery", salt);
        mut::Batch batch = mut::mutate_batch(queue_.parents(), n, rng, mutate_options());
        repair_batch(batch, 900000 + salt);
        return batch;
    }

    void discover_ifs(TargetState& target) {
        uint64_t salt = 0;
        auto run_with_size = [&](size_t n) {
            mut::Batch batch = manipulated_batch(n, ++salt);
            repo::RepoLayout layout = repo::build_repository(
                batch, snapshot_, ++serial_, opt_.out_dir / "work" / "repo", data_);
            auto runs = run_one_target(target, layout);
            cov::IfRunObservation obs;
            obs.wide = std::move(runs.wide);
            obs.first_activation = std::move(runs.first_activation);
            obs.last_increment = std::move(runs.last_increment);
            // everything touched during discovery is baseline coverage
            for (size_t i = 0; i < obs.wide.size(); ++i)
                if (obs.wide.logical[i]) target.known.insert(static_cast<uint32_t>(i));
            return obs;
        };
        target.ifs = cov::identify_ifs(run_with_size, opt_.if_sizes);
    }

    void measure_baseline(TargetState& target) {
        mut::Batch batch = valid_batch(opt_.batch_size, 800000);
        repo::RepoLayout layout = repo::build_repository(
            batch, snapshot_, ++serial_, opt_.out_dir / "work" / "repo", data_);
        double total = 0;
        for (size_t i = 0; i < opt_.baseline_runs; ++i) {
            auto run = run_one_target(target, layout);
            total += run.result.runtime_s;
            if (target.config.coverage)
                for (size_t c = 0; c < run.wide.size(); ++c)
                    if (run.wide.logical[c]) target.known.insert(static_cast<uint32_t>(c));
        }
        target.baseline_s = total / static_cast<double>(opt_.baseline_runs);
    }

    TargetRunOutcome run_one_target(TargetState& state, const repo::RepoLayout& layout) {
        TargetRunOutcome outcome;
        RunPaths paths{layout.rsync_root, layout.notification_path, layout.tal_path,
                       opt_.out_dir / "work" / "targets" / state.config.name};
        std::vector<std::string> env;
        cov::SharedRegion region;
        std::atomic<bool> stop{false};
        cov::Sampler sampler;
        std::thread sampler_thread;
        if (state.config.coverage) {
            region = state.config.shm_transport == "file"
                         ? cov::SharedRegion::create_file(
                               (paths.work_dir / "coverage.map").string(),
                               state.config.bitmap_size)
                         : cov::SharedRegion::create(state.config.bitmap_size);
            env.push_back(state.config.shm_env_var + "=" + region.id());
            cov::SamplerOptions sopt;
            sopt.track_first_activation = true;
            const uint8_t* ptr = region.data();
            size_t size = region.size();
            sampler_thread = std::thread([&sampler, &stop, ptr, size, sopt, &outcome]() {
                outcome.sample_stats = sampler.run(ptr, size, stop, sopt, nullptr);
            });
        }
        TargetProcess process = TargetProcess::spawn(state.config, paths, env);
        if (!process.result().spawned) {
            if (sampler_thread.joinable()) {
                stop = true;
                sampler_thread.join();
            }
            throw CampaignError("failed to launch target " + state.config.name);
        }
        outcome.result = process.wait(state.config.timeout_s);
        if (sampler_thread.joinable()) {
            stop = true;
            sampler_thread.join();
            outcome.wide = sampler.wide();
            outcome.first_activation = sampler.first_activation();
            outcome.last_increment = sampler.last_increment();
        }
        if (std::filesystem::exists(outcome.result.log_path))
            outcome.log_text = read_text_file(outcome.result.log_path);
        outcome.output =
            parse_vrp_output(outcome.result.output_path, state.config.output_format);
        return outcome;
    }

    CampaignOptions opt_;
    rpki::DataDir data_;
    std::vector<TargetState> targets_;
    repo::RepoSnapshot snapshot_;
    Queue queue_;
    SeedStats seed_stats_;
    uint64_t iteration_ = 0;
    uint64_t serial_ = 0;
    size_t finding_counter_ = 0;
    bool prepared_ = false;
    std::filesystem::path attribution_log_;
};

}  // namespace derfuzz::orch
