#include <catch2/catch_amalgamated.hpp>

#include <fstream>

#include "derfuzz/orch/campaign.hpp"
#include "derfuzz/orch/oracle.hpp"
#include "derfuzz/orch/queue.hpp"
#include "derfuzz/orch/report.hpp"
#include "derfuzz/sim/config.hpp"
#include "support/paths.hpp"

using namespace derfuzz;
using namespace derfuzz::orch;
using test_paths::TempDir;

namespace {

struct OrchFixture {
    TempDir tmp;
    rpki::DataDir data;

    sim::SimConfig base_sim_config() {
        sim::SimConfig c;
        c.map_size = 4096;
        c.loops = {{"download", 100, 5}, {"validate", 200, 5}};
        c.verify_signatures = true;
        return c;
    }

    std::filesystem::path write_sim_config(const sim::SimConfig& c, const std::string& name) {
        auto path = tmp.path / (name + ".sim.json");
        write_file(path, c.to_json().dump(1));
        return path;
    }

    std::filesystem::path write_target_config(const std::string& name,
                                              const std::filesystem::path& sim_cfg,
                                              bool coverage, double baseline = 5.0,
                                              size_t map = 4096) {
        nlohmann::json j;
        j["name"] = name;
        j["binary"] = test_paths::sim_validator();
        j["args"] = {"--config", sim_cfg.string(), "--repo", "{repo}", "--tal", "{tal}",
                     "--out", "{out}"};
        j["output_file"] = "vrps.csv";
        j["output_format"] = "csv";
        j["coverage"] = coverage;
        j["shm_env_var"] = "DERFUZZ_SHM";
        j["bitmap_size"] = map;
        j["crash_keywords"] = {"panic", "FATAL"};
        j["baseline_runtime"] = baseline;
        j["timeout"] = 30.0;
        auto path = tmp.path / (name + ".target.json");
        write_file(path, j.dump(1));
        return path;
    }

    CampaignOptions small_campaign(const std::vector<std::filesystem::path>& configs,
                                   size_t batch = 20) {
        CampaignOptions opt;
        opt.seed = 11;
        opt.batch_size = batch;
        opt.kind = asn1::ObjectKind::roa;
        opt.out_dir = tmp.path / "out";
        opt.target_config_paths = configs;
        opt.key_pool_size = 2;
        opt.workers = 2;
        opt.if_sizes = {5, 10, 15};
        opt.baseline_runs = 0;  // configs carry preset baselines
        return opt;
    }
};

}  // namespace

TEST_CASE("target config round trips through JSON") {
    nlohmann::json j = {{"name", "rp"},
                        {"binary", "/bin/true"},
                        {"args", {"--x", "{repo}"}},
                        {"coverage", true},
                        {"bitmap_size", 8192},
                        {"crash_keywords", {"boom"}},
                        {"baseline_runtime", 1.5}};
    TargetConfig c = TargetConfig::from_json(j);
    CHECK(c.name == "rp");
    CHECK(c.coverage);
    CHECK(c.bitmap_size == 8192);
    CHECK(c.crash_keywords == std::vector<std::string>{"boom"});
    CHECK(c.baseline_runtime_s == 1.5);
}

TEST_CASE("vrp output parsing") {
    TempDir tmp;
    auto csv = tmp.path / "a.csv";
    write_file(csv, std::string("asn,prefix,max_length\n64500,10.0.0.0/8,16\n"));
    auto parsed = parse_vrp_output(csv, "csv");
    REQUIRE(parsed);
    CHECK(parsed->count({64500, "10.0.0.0/8", 16}) == 1);

    auto jsonl = tmp.path / "b.jsonl";
    write_file(jsonl, std::string("{\"asn\":1,\"prefix\":\"192.0.2.0/24\",\"maxLength\":24}\n"));
    auto pj = parse_vrp_output(jsonl, "jsonl");
    REQUIRE(pj);
    CHECK(pj->count({1, "192.0.2.0/24", 24}) == 1);

    auto bad = tmp.path / "c.csv";
    write_file(bad, std::string("asn,prefix,max_length\nnot a line\n"));
    CHECK_FALSE(parse_vrp_output(bad, "csv"));
    CHECK_FALSE(parse_vrp_output(tmp.path / "missing.csv", "csv"));
}

TEST_CASE("stall oracle thresholds") {
    CHECK(oracle_stall("rp", 2.5, 1.0));
    CHECK_FALSE(oracle_stall("rp", 1.9, 1.0));
    CHECK_FALSE(oracle_stall("rp", 0.5, 0.0));  // no baseline, no verdict
}

TEST_CASE("integrity oracle fails closed on unparseable output") {
    rpki::VrpTriple test{64511, "203.0.113.0/24", 24};
    CHECK(oracle_integrity("rp", std::nullopt, test));
    rpki::VrpSet with{test};
    CHECK_FALSE(oracle_integrity("rp", with, test));
    rpki::VrpSet without{{1, "10.0.0.0/8", 8}};
    auto report = oracle_integrity("rp", without, test);
    REQUIRE(report);
    CHECK(report->detail.find("203.0.113.0/24") != std::string::npos);
}

TEST_CASE("consistency oracle names the differing triples") {
    std::map<std::string, rpki::VrpSet> outputs;
    outputs["a"] = {{1, "10.0.0.0/8", 8}, {2, "192.0.2.0/24", 24}};
    outputs["b"] = {{1, "10.0.0.0/8", 8}};
    auto report = oracle_consistency(outputs);
    REQUIRE(report);
    CHECK(report->detail.find("192.0.2.0/24") != std::string::npos);

    outputs["b"] = outputs["a"];
    CHECK_FALSE(oracle_consistency(outputs));

    std::map<std::string, rpki::VrpSet> solo{{"a", {{1, "10.0.0.0/8", 8}}}};
    CHECK_FALSE(oracle_consistency(solo));  // needs at least two targets
}

TEST_CASE("crash oracle detects keywords and missing output") {
    TargetConfig config;
    config.name = "rp";
    config.crash_keywords = {"panic"};
    RunResult run;
    run.spawned = true;
    run.exited_normally = true;
    run.exit_code = 0;
    run.output_path = "/nonexistent/vrps.csv";
    auto lack = oracle_crash(run, config, "all fine");
    REQUIRE(lack);
    CHECK(lack->detail.find("lack of output") != std::string::npos);

    TempDir tmp;
    run.output_path = tmp.path / "vrps.csv";
    write_file(run.output_path, std::string("asn,prefix,max_length\n"));
    CHECK_FALSE(oracle_crash(run, config, "all fine"));
    auto kw = oracle_crash(run, config, "thread 'main' panic at ...");
    REQUIRE(kw);
    CHECK(kw->detail.find("panic") != std::string::npos);

    RunResult sig;
    sig.spawned = true;
    sig.signaled = true;
    sig.term_signal = 6;
    sig.output_path = run.output_path;
    CHECK(oracle_crash(sig, config, ""));
}

TEST_CASE_METHOD(OrchFixture, "seed queue census and determinism") {
    auto corpus = tmp.path / "corpus";
    std::filesystem::create_directories(corpus);
    // tiny real corpus: 10 generated ROAs written as DER files
    {
        Rng rng(5);
        auto key = crypto::generate_keypair(rng);
        crypto::KeyMaterial keys{&key, &key};
        rpki::Clock clock;
        for (int i = 0; i < 10; ++i) {
            auto tree = rpki::make_random_roa(rng, keys, clock, i + 1);
            write_file(corpus / ("seed" + std::to_string(i) + ".roa"),
                       asn1::encode_der(tree));
        }
    }
    Rng krng(6);
    auto pool_key = crypto::generate_keypair(krng);
    crypto::KeyMaterial keys{&pool_key, &pool_key};
    rpki::Clock clock;

    Queue q1;
    Rng r1(77);
    auto stats = seed_queue(q1, corpus, 100, asn1::ObjectKind::roa, data, keys, clock, r1);
    CHECK(stats.from_corpus == 50);
    CHECK(stats.generated == 50);
    CHECK(q1.size() == 100);
    size_t corpus_origin = 0;
    for (const auto& e : q1.entries())
        if (e.origin == QueueEntry::Origin::real_corpus) ++corpus_origin;
    CHECK(corpus_origin == 50);

    // empty corpus: all generated
    Queue q2;
    Rng r2(77);
    auto empty_stats =
        seed_queue(q2, tmp.path / "nope", 40, asn1::ObjectKind::roa, data, keys, clock, r2);
    CHECK(empty_stats.from_corpus == 0);
    CHECK(empty_stats.generated == 40);

    // fixed seed reproduces the queue
    Queue q3;
    Rng r3(77);
    seed_queue(q3, corpus, 100, asn1::ObjectKind::roa, data, keys, clock, r3);
    REQUIRE(q3.size() == q1.size());
    for (size_t i = 0; i < q1.size(); ++i)
        CHECK(asn1::encode_der(q1.entries()[i].tree) ==
              asn1::encode_der(q3.entries()[i].tree));
}

TEST_CASE_METHOD(OrchFixture, "clean iteration runs the simulated validator end to end") {
    auto sim_cfg = write_sim_config(base_sim_config(), "clean");
    auto target = write_target_config("sim", sim_cfg, true);
    Campaign campaign(small_campaign({target}), data);
    auto outcome = campaign.run_iteration();
    CHECK(outcome.iteration == 1);
    CHECK(outcome.oracles.empty());
    CHECK(outcome.scores.size() == 20);
    REQUIRE(campaign.target_state("sim"));
    // identification counters found during prepare: the two loop heads
    auto& ifs = campaign.target_state("sim")->ifs;
    REQUIRE(ifs.indices.size() == 2);
    CHECK(ifs.indices[0] == 100);
    CHECK(ifs.indices[1] == 200);
    CHECK(outcome.runtimes.count("sim") == 1);
}

TEST_CASE_METHOD(OrchFixture, "black-box targets join oracles but not scoring") {
    auto sim_cfg = write_sim_config(base_sim_config(), "bb");
    auto target = write_target_config("blackbox", sim_cfg, false);
    Campaign campaign(small_campaign({target}), data);
    auto outcome = campaign.run_iteration();
    CHECK(outcome.new_branches == 0);  // nobody sampled anything
    CHECK(outcome.oracles.empty());
}

TEST_CASE_METHOD(OrchFixture, "planted crash produces exactly one crash report and replays") {
    sim::SimConfig c = base_sim_config();
    sim::PlantedBug bug;
    bug.effect = sim::PlantedBug::Effect::crash;
    bug.trigger.kind = sim::Predicate::Kind::byte_at;
    bug.trigger.offset = 0;
    bug.trigger.value = 0x30;  // every DER object trips it
    c.bugs.push_back(bug);
    auto sim_cfg = write_sim_config(c, "crash");
    auto target = write_target_config("sim", sim_cfg, false);
    Campaign campaign(small_campaign({target}), data);
    auto outcome = campaign.run_iteration();
    REQUIRE(outcome.oracles.size() == 1);
    CHECK(outcome.oracles[0].kind == OracleKind::crash);
    CHECK(outcome.oracles[0].detail.find("signal") != std::string::npos);
    REQUIRE(outcome.report_dirs.size() == 1);

    auto replayed = replay_report(outcome.report_dirs[0], data, tmp.path / "replay");
    CHECK(replayed.files_checked > 0);
    CHECK(replayed.ok);
}

TEST_CASE_METHOD(OrchFixture, "planted stall produces exactly one stall report") {
    sim::SimConfig c = base_sim_config();
    sim::PlantedBug bug;
    bug.effect = sim::PlantedBug::Effect::stall;
    bug.stall_ms = 1200;
    bug.trigger.kind = sim::Predicate::Kind::byte_at;
    bug.trigger.offset = 0;
    bug.trigger.value = 0x30;
    c.bugs.push_back(bug);
    auto sim_cfg = write_sim_config(c, "stall");
    auto target = write_target_config("sim", sim_cfg, false, 0.3);
    Campaign campaign(small_campaign({target}), data);
    auto outcome = campaign.run_iteration();
    REQUIRE(outcome.oracles.size() == 1);
    CHECK(outcome.oracles[0].kind == OracleKind::stall);
}

TEST_CASE_METHOD(OrchFixture, "dropped test object produces exactly one integrity report") {
    sim::SimConfig c = base_sim_config();
    sim::PlantedBug bug;
    bug.effect = sim::PlantedBug::Effect::drop_test_roa;
    bug.trigger.kind = sim::Predicate::Kind::byte_at;
    bug.trigger.offset = 0;
    bug.trigger.value = 0x30;
    c.bugs.push_back(bug);
    auto sim_cfg = write_sim_config(c, "drop");
    auto target = write_target_config("sim", sim_cfg, false);
    Campaign campaign(small_campaign({target}), data);
    auto outcome = campaign.run_iteration();
    REQUIRE(outcome.oracles.size() == 1);
    CHECK(outcome.oracles[0].kind == OracleKind::integrity);
}

TEST_CASE_METHOD(OrchFixture, "diverging variants produce exactly one consistency report") {
    auto cfg_a = write_sim_config(base_sim_config(), "variant_a");
    sim::SimConfig b = base_sim_config();
    b.reject_rule_enabled = true;
    b.reject_rule.kind = sim::Predicate::Kind::byte_at;
    b.reject_rule.offset = 0;
    b.reject_rule.value = 0x30;  // variant b rejects every batch object
    auto cfg_b = write_sim_config(b, "variant_b");
    auto target_a = write_target_config("rp_a", cfg_a, false);
    auto target_b = write_target_config("rp_b", cfg_b, false);
    Campaign campaign(small_campaign({target_a, target_b}), data);
    auto outcome = campaign.run_iteration();
    size_t consistency = 0;
    for (const auto& o : outcome.oracles) {
        CHECK(o.kind == OracleKind::consistency);
        ++consistency;
    }
    CHECK(consistency == 1);
}

TEST_CASE_METHOD(OrchFixture, "queue hygiene: discarded children never return") {
    auto sim_cfg = write_sim_config(base_sim_config(), "hygiene");
    auto target = write_target_config("sim", sim_cfg, true);
    Campaign campaign(small_campaign({target}), data);
    size_t before = campaign.queue().size();
    campaign.run_iteration();
    // children enter only with a positive score
    for (const auto& e : campaign.queue().entries())
        if (e.origin == QueueEntry::Origin::mutated_child) CHECK(e.score > 0);
    CHECK(campaign.queue().size() >= before);
}

TEST_CASE_METHOD(OrchFixture, "campaign rejects a missing binary") {
    nlohmann::json j = {{"name", "ghost"}, {"binary", "/no/such/binary"}};
    auto path = tmp.path / "ghost.json";
    write_file(path, j.dump());
    CHECK_THROWS_AS(Campaign(small_campaign({path}), data), CampaignError);
}

TEST_CASE_METHOD(OrchFixture, "cli validates configs with zero iterations") {
    auto sim_cfg = write_sim_config(base_sim_config(), "cli");
    auto target = write_target_config("sim", sim_cfg, false);
    std::string cmd = test_paths::derfuzz_cli() + " --data-dir " +
                      rpki::DataDir::default_root().string() +
                      " fuzz --iterations 0 --batch-size 5 --key-pool 1 --seed 3 --out " +
                      (tmp.path / "cliout").string() + " --targets " + target.string() +
                      " > /dev/null 2>&1";
    CHECK(std::system(cmd.c_str()) == 0);
}

TEST_CASE_METHOD(OrchFixture, "bench reports a sane throughput") {
    CampaignOptions opt = small_campaign({});
    opt.batch_size = 10;
    Campaign campaign(std::move(opt), data);
    double rate = campaign.bench(100);
    CHECK(rate > 10.0);
}
