// Simulated RPKI relying party with AFL-style counter instrumentation and
// configurable planted bugs. Exists so sampling, identification-counter
// discovery and per-object attribution can be validated against exact ground
// truth instead of a real validator's opaque behavior.

#include <CLI11.hpp>

#include "derfuzz/sim/validator.hpp"

int main(int argc, char** argv) {
    CLI::App app{"simulated instrumented RPKI validator"};
    std::string config_path, repo, rrdp, tal, out, truth;
    app.add_option("--config", config_path, "simulation config (JSON)");
    app.add_option("--repo", repo, "rsync layout root");
    app.add_option("--rrdp", rrdp, "RRDP notification.xml path");
    app.add_option("--tal", tal, "trust anchor locator (accepted for interface parity)");
    app.add_option("--out", out, "accepted-VRP output file (CSV)");
    app.add_option("--truth", truth, "ground-truth counter dump");
    CLI11_PARSE(app, argc, argv);

    derfuzz::sim::Validator::Options opt;
    if (!config_path.empty())
        opt.config = derfuzz::sim::SimConfig::from_json(
            nlohmann::json::parse(derfuzz::read_text_file(config_path)));
    opt.rsync_root = repo;
    opt.notification = rrdp;
    opt.output_file = out;
    opt.truth_file = truth;
    if (repo.empty() && rrdp.empty()) {
        std::fprintf(stderr, "need --repo or --rrdp\n");
        return 2;
    }
    return derfuzz::sim::Validator(std::move(opt)).run();
}
