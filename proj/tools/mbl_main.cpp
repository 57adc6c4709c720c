#include "mbl/cli.hpp"

#include <CLI11.hpp>

#include <map>
#include <string>

int main(int argc, char** argv) {
    CLI::App app{"mbl: Bellman-function certificates for martingale transforms"};
    app.require_subcommand(1);
    app.fallthrough();

    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::optional<int> depth;
    std::optional<double> delta;
    std::optional<int> dim;
    std::optional<double> p;
    std::optional<std::size_t> trials;
    std::optional<std::string> out;
    std::optional<std::string> format;
    std::optional<std::string> input;
    std::optional<std::string> candidate;
    std::optional<std::string> filtration;
    std::optional<int> max_children;
    std::optional<double> split_prob;

    app.add_option("--config", config_path, "JSON config file; flags override its keys");
    app.add_option("--seed", seed, "master seed");
    app.add_option("--depth", depth, "filtration depth");
    app.add_option("--delta", delta, "regularity floor in (0, 1/2]");
    app.add_option("--dim", dim, "dimension of H");
    app.add_option("--p", p, "exponent in (1, 2]");
    app.add_option("--trials", trials, "instances, samples or trials");
    app.add_option("--out", out, "output directory");
    app.add_option("--format", format, "report format: csv or json");
    app.add_option("--input", input, "witness JSON for certify");
    app.add_option("--candidate", candidate, "quadratic or linear");
    app.add_option("--filtration", filtration, "auto, dyadic or random");
    app.add_option("--max-children", max_children, "children per split for random filtrations");
    app.add_option("--split-prob", split_prob, "split probability for random filtrations");

    const std::map<std::string, std::string> about{
        {"gen", "write a filtration and witness fixture"},
        {"check", "run the invariant suites on random instances"},
        {"certify", "certify a witness against a candidate Bellman function"},
        {"lemma1", "dyadic reduction and rescaling constant for a weight floor"},
        {"search", "search witnesses for a lower bound on the Bellman function"},
        {"scan", "empirical L^p ratios of random transforms"},
        {"bound", "assemble the L^p bound by duality"}};
    for (const auto& name : mbl::commands()) app.add_subcommand(name, about.at(name));

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : static_cast<int>(mbl::ExitCode::invalid_config);
    }

    mbl::RunConfig cfg;
    try {
        if (!config_path.empty()) cfg = mbl::load_config_file(config_path);
    } catch (const mbl::InvalidArgument& e) {
        std::cerr << "invalid config: " << e.what() << "\n";
        return static_cast<int>(mbl::ExitCode::invalid_config);
    }
    cfg.command = app.get_subcommands().front()->get_name();
    if (seed) cfg.seed = *seed;
    if (depth) cfg.depth = *depth;
    if (delta) cfg.delta = *delta;
    if (dim) cfg.dim = *dim;
    if (p) cfg.p = *p;
    if (trials) cfg.trials = *trials;
    if (out) cfg.out = *out;
    if (format) cfg.format = *format;
    if (input) cfg.input = *input;
    if (candidate) cfg.candidate = *candidate;
    if (filtration) cfg.filtration = *filtration;
    if (max_children) cfg.max_children = *max_children;
    if (split_prob) cfg.split_prob = *split_prob;
    return mbl::run(cfg);
}
