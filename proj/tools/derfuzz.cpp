// Coverage-guided batch fuzzer for DER/RPKI validators: drives
// mutate -> repair -> nest -> execute -> attribute iterations against the
// configured relying parties and triages anomalies into reports.

#include <CLI11.hpp>

#include <cstdio>

#include "derfuzz/orch/campaign.hpp"
#include "derfuzz/orch/report.hpp"

using namespace derfuzz;

namespace {

orch::CampaignOptions base_options(const std::string& kind, uint64_t seed, size_t batch,
                                   const std::string& corpus, const std::string& out,
                                   const std::vector<std::string>& targets,
                                   size_t key_pool) {
    orch::CampaignOptions opt;
    opt.kind = asn1::kind_from_name(kind);
    opt.seed = seed;
    opt.batch_size = batch;
    opt.corpus_dir = corpus;
    opt.out_dir = out;
    for (const auto& t : targets) opt.target_config_paths.emplace_back(t);
    opt.key_pool_size = key_pool;
    return opt;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"derfuzz: coverage-guided batch fuzzing of DER-based validators"};
    app.require_subcommand(1);

    std::string kind = "roa", corpus, out = "derfuzz-out", data_dir;
    uint64_t seed = 1;
    size_t batch = 1000, iterations = 100, key_pool = 64;
    std::vector<std::string> targets;
    bool no_sign = false, no_guidance = false, serve_http = false;

    app.add_option("--data-dir", data_dir, "schema/plan data directory");

    auto add_common = [&](CLI::App* cmd, bool with_targets) {
        cmd->add_option("--kind", kind, "object kind (roa, manifest, crl, aspa, gbr)");
        cmd->add_option("--seed", seed, "campaign seed");
        cmd->add_option("--batch-size", batch, "objects per repository");
        cmd->add_option("--corpus", corpus, "directory of real-world seed objects");
        cmd->add_option("--out", out, "output directory");
        cmd->add_option("--key-pool", key_pool, "number of pre-generated one-off keys");
        if (with_targets)
            cmd->add_option("--targets", targets, "target config JSON files")->expected(-1);
    };

    auto* fuzz = app.add_subcommand("fuzz", "run a fuzzing campaign");
    add_common(fuzz, true);
    fuzz->add_option("--iterations", iterations, "iterations to run");
    fuzz->add_flag("--no-sign", no_sign, "skip cryptographic repair (structure repair only)");
    fuzz->add_flag("--no-guidance", no_guidance, "disable coverage guidance");
    fuzz->add_flag("--serve-http", serve_http, "serve the repository over HTTP for RRDP");

    auto* identify = app.add_subcommand("identify-ifs",
                                        "discover identification counters of a target");
    add_common(identify, true);

    auto* build = app.add_subcommand("build-repo", "build one mutated repository");
    add_common(build, false);

    auto* mutate = app.add_subcommand("mutate", "mutate a single object for triage");
    std::string mutate_in, mutate_out = "mutated.bin";
    size_t mutate_count = 4;
    mutate->add_option("--in", mutate_in, "input DER file")->required();
    mutate->add_option("--out", mutate_out, "output file");
    mutate->add_option("--seed", seed, "seed");
    mutate->add_option("--count", mutate_count, "number of mutations");
    mutate->add_option("--kind", kind, "object kind for labeling");

    auto* replay = app.add_subcommand("replay", "regenerate a report's repository");
    std::string report_dir, replay_out = "";
    replay->add_option("report", report_dir, "report directory")->required();
    replay->add_option("--out", replay_out, "scratch directory");

    auto* bench = app.add_subcommand("bench", "measure mutate+repair+encode throughput");
    add_common(bench, false);
    size_t bench_objects = 4000;
    bench->add_option("--objects", bench_objects, "objects to push through the pipeline");

    CLI11_PARSE(app, argc, argv);

    rpki::DataDir data(data_dir.empty() ? rpki::DataDir::default_root()
                                        : std::filesystem::path(data_dir));
    try {
        if (*fuzz) {
            auto opt = base_options(kind, seed, batch, corpus, out, targets, key_pool);
            opt.sign_objects = !no_sign;
            opt.coverage_guidance = !no_guidance;
            opt.serve_http = serve_http;
            orch::Campaign campaign(std::move(opt), data);
            std::printf("queue seeded: %zu corpus + %zu generated\n",
                        campaign.seed_stats().from_corpus, campaign.seed_stats().generated);
            size_t findings = 0;
            for (size_t i = 0; i < iterations; ++i) {
                auto outcome = campaign.run_iteration();
                findings += outcome.oracles.size();
                std::printf("iteration %llu: %zu new branches, %zu findings\n",
                            static_cast<unsigned long long>(outcome.iteration),
                            outcome.new_branches, outcome.oracles.size());
                for (const auto& dir : outcome.report_dirs)
                    std::printf("  report: %s\n", dir.c_str());
            }
            std::printf("done: %zu findings, reports under %s\n", findings,
                        (out + "/reports").c_str());
            return 0;
        }
        if (*identify) {
            auto opt = base_options(kind, seed, batch, corpus, out, targets, key_pool);
            opt.baseline_runs = 0;
            orch::Campaign campaign(std::move(opt), data);
            campaign.prepare();
            for (const auto& state : campaign.targets()) {
                if (!state.config.coverage) {
                    std::printf("%s: no coverage support configured\n",
                                state.config.name.c_str());
                    continue;
                }
                std::printf("%s: %zu identification counters:", state.config.name.c_str(),
                            state.ifs.indices.size());
                for (uint32_t idx : state.ifs.indices) std::printf(" %u", idx);
                std::printf("\n");
                if (!state.ifs.diagnostic.empty())
                    std::printf("  warning: %s\n", state.ifs.diagnostic.c_str());
            }
            return 0;
        }
        if (*build) {
            auto opt = base_options(kind, seed, batch, corpus, out, {}, key_pool);
            orch::Campaign campaign(std::move(opt), data);
            auto layout = campaign.build_once(std::filesystem::path(out) / "repo");
            std::printf("repository at %s (serial %llu, %zu objects)\n",
                        layout.root.c_str(), static_cast<unsigned long long>(layout.serial),
                        layout.batch_files.size());
            return 0;
        }
        if (*mutate) {
            Bytes input = read_file(mutate_in);
            auto parsed = asn1::parse_der(input);
            asn1::TlvNode tree = parsed.root;
            asn1::label_tree(tree, data.schema(asn1::kind_from_name(kind)));
            Rng rng(seed);
            for (size_t i = 0; i < mutate_count; ++i) {
                auto path = mut::select_node(tree, rng);
                mut::MutationRecord rec;
                double roll = static_cast<double>(rng.below(100)) / 100.0;
                if (roll < 0.2) rec = mut::mutate_structure(tree, path, rng);
                else if (roll < 0.6) rec = mut::mutate_typed(tree, path, rng);
                else rec = mut::mutate_bytes(tree, path, rng);
                std::printf("%s\n", mut::record_to_line(rec).c_str());
            }
            repair::propagate_taint(tree);
            write_file(mutate_out, asn1::encode_der(tree));
            std::printf("wrote %s\n", mutate_out.c_str());
            return 0;
        }
        if (*replay) {
            std::filesystem::path scratch =
                replay_out.empty() ? std::filesystem::path(report_dir) / "replay"
                                   : std::filesystem::path(replay_out);
            auto result = orch::replay_report(report_dir, data, scratch);
            std::printf("replay: %zu files checked, %zu mismatches -> %s\n",
                        result.files_checked, result.mismatches.size(),
                        result.ok ? "byte-identical" : "MISMATCH");
            for (const auto& name : result.mismatches)
                std::printf("  differs: %s\n", name.c_str());
            return result.ok ? 0 : 1;
        }
        if (*bench) {
            auto opt = base_options(kind, seed, batch, corpus, out, {}, key_pool);
            orch::Campaign campaign(std::move(opt), data);
            double rate = campaign.bench(bench_objects);
            std::printf("pipeline throughput: %.0f objects/s (%zu objects)\n", rate,
                        bench_objects);
            return 0;
        }
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 0;
}
