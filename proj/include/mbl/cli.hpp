#pragma once

// Batch front-end behind the `mbl` binary.  A RunConfig is assembled from an optional
// JSON file plus flag overrides, validated, and dispatched to one subcommand.  Every
// output file is a pure function of the configuration and seed.

#include "mbl/suites.hpp"

#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

namespace mbl {

enum class ExitCode : int { ok = 0, check_failed = 1, invalid_config = 2 };

struct RunConfig {
    std::string command;
    std::string filtration = "auto";  // auto | dyadic | random
    int depth = 3;
    double delta = 0.5;
    int max_children = 2;
    double split_prob = 0.6;
    int dim = 1;
    double p = 2.0;
    std::size_t trials = 100;
    std::optional<std::uint64_t> seed;
    std::string input;
    std::string out = ".";
    std::string format = "csv";
    std::string candidate = "quadratic";  // quadratic | linear
    double tolerance_scale = mbl::tolerance_scale();
};

inline const std::vector<std::string>& commands() {
    static const std::vector<std::string> names{"gen", "check", "certify", "lemma1", "search", "scan", "bound"};
    return names;
}

/// Overlays the keys present in `j` onto `cfg`; unknown keys are rejected.
inline void apply_config_json(RunConfig& cfg, const nlohmann::json& j) {
    require(j.is_object(), "config file must hold a JSON object");
    for (const auto& [key, v] : j.items()) {
        try {
            if (key == "command") cfg.command = v.get<std::string>();
            else if (key == "filtration") cfg.filtration = v.get<std::string>();
            else if (key == "depth") cfg.depth = v.get<int>();
            else if (key == "delta") cfg.delta = v.get<double>();
            else if (key == "max_children") cfg.max_children = v.get<int>();
            else if (key == "split_prob") cfg.split_prob = v.get<double>();
            else if (key == "dim") cfg.dim = v.get<int>();
            else if (key == "p") cfg.p = v.get<double>();
            else if (key == "trials") cfg.trials = v.get<std::size_t>();
            else if (key == "seed") cfg.seed = v.get<std::uint64_t>();
            else if (key == "input") cfg.input = v.get<std::string>();
            else if (key == "out") cfg.out = v.get<std::string>();
            else if (key == "format") cfg.format = v.get<std::string>();
            else if (key == "candidate") cfg.candidate = v.get<std::string>();
            else if (key == "tolerance_scale") cfg.tolerance_scale = v.get<double>();
            else throw InvalidArgument("unknown config key: " + key);
        } catch (const nlohmann::json::exception& e) {
            throw InvalidArgument("config key " + key + ": " + e.what());
        }
    }
}

inline RunConfig load_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InvalidArgument("cannot read config file " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw InvalidArgument("config file " + path + " is not valid JSON: " + e.what());
    }
    RunConfig cfg;
    apply_config_json(cfg, j);
    return cfg;
}

inline bool needs_seed(const RunConfig& c) {
    if (c.command == "certify") return c.input.empty() && c.depth > 1;
    if (c.command == "gen") return c.depth > 1 || c.filtration == "random";
    return true;
}

inline void validate(const RunConfig& c) {
    require(std::find(commands().begin(), commands().end(), c.command) != commands().end(),
            "unknown command: " + c.command);
    require(c.p > 1.0 && c.p <= 2.0, "p must lie in (1, 2]");
    require(c.delta > 0.0 && c.delta <= 0.5, "delta must lie in (0, 1/2]");
    require(c.depth >= 1 && c.depth <= 20, "depth must lie in [1, 20]");
    require(c.dim >= 1 && c.dim <= 8, "dim must lie in [1, 8]");
    require(c.trials >= 1, "trials must be positive");
    require(c.max_children >= 2, "max_children must be at least 2");
    require(c.split_prob >= 0.0 && c.split_prob <= 1.0, "split_prob must lie in [0, 1]");
    require(c.tolerance_scale > 0.0, "tolerance scale must be positive");
    require(c.filtration == "auto" || c.filtration == "dyadic" || c.filtration == "random",
            "filtration must be auto, dyadic or random");
    require(c.filtration != "dyadic" || c.delta == 0.5, "a dyadic filtration needs delta = 1/2");
    require(c.candidate == "quadratic" || c.candidate == "linear", "candidate must be quadratic or linear");
    parse_report_format(c.format);
    require(!needs_seed(c) || c.seed.has_value(), "command " + c.command + " needs --seed");
}

inline FiltrationSpec filtration_spec(const RunConfig& c) {
    FiltrationSpec s;
    const bool dyadic = c.filtration == "dyadic" || (c.filtration == "auto" && c.delta == 0.5);
    s.kind = dyadic ? FiltrationSpec::Kind::dyadic : FiltrationSpec::Kind::random;
    s.depth = c.depth;
    s.delta = c.delta;
    s.max_children = c.max_children;
    s.split_prob = c.split_prob;
    s.seed = c.seed.value_or(0);
    return s;
}

namespace detail {

inline std::filesystem::path out_path(const RunConfig& c, const std::string& stem) {
    return std::filesystem::path(c.out) / (stem + "." + c.format);
}

inline void write_json_file(const std::filesystem::path& path, const nlohmann::json& j) {
    write_text_file(path, j.dump(2) + "\n");
}

inline std::optional<CandidateBellman> select_candidate(const RunConfig& c, double delta_star) {
    const double delta = std::min(0.5, delta_star);
    if (c.candidate == "linear") return linear_candidate(1.0, c.p).scaled(1.0, delta);
    if (c.p != 2.0) return std::nullopt;
    return quadratic_candidate(delta);
}

inline ExitCode run_gen(const RunConfig& c) {
    const FiltrationSpec spec = filtration_spec(c);
    FiltrationPtr filt = build_filtration(spec);
    Witness w = [&] {
        if (c.depth == 1) return haar_witness(filt, c.dim);
        Rng rng = make_rng(*c.seed, 0x6E6);
        GundyOperator T = make_random_transform(filt, c.dim, rng);
        MartFunction f = random_function(filt, c.dim, rng);
        MartFunction g = random_function(filt, 1, rng);
        return Witness{std::move(f), std::move(g), std::move(T)};
    }();
    write_json_file(std::filesystem::path(c.out) / "filtration.json", to_json(*filt));
    write_json_file(std::filesystem::path(c.out) / "witness.json", to_json(w));

    Report r;
    r.columns = {"atom_id", "level", "a", "b", "measure", "split"};
    for (const auto& at : filt->atoms()) {
        r.add_row({static_cast<std::int64_t>(at.id), static_cast<std::int64_t>(at.level), at.a, at.b, at.measure,
                   at.is_split()});
    }
    emit_report(r, parse_report_format(c.format), out_path(c, "gen"));
    std::cout << "gen: " << filt->atoms().size() << " atoms, " << filt->num_leaves() << " leaves, delta* = "
              << format_double(regularity_delta(*filt)) << "\n";
    return ExitCode::ok;
}

inline ExitCode run_check(const RunConfig& c) {
    Report r;
    r.columns = {"instance", "seed", "suite", "checks", "failures", "worst_ratio", "passed"};
    bool all = true;
    for (std::size_t t = 0; t < c.trials; ++t) {
        const std::uint64_t seed = stream_seed(*c.seed, t);
        FiltrationSpec spec = filtration_spec(c);
        spec.seed = seed;
        const Instance in = make_instance(spec, c.dim, seed);
        for (const auto& [name, fn] : all_suites()) {
            const SuiteResult s = fn(in, c.tolerance_scale);
            all = all && s.passed();
            if (!s.passed()) std::cerr << "instance " << t << " " << name << ": " << s.first_failure << "\n";
            r.add_row({static_cast<std::int64_t>(t), std::to_string(seed), name, static_cast<std::int64_t>(s.checks),
                       static_cast<std::int64_t>(s.failures), s.worst_ratio, s.passed()});
        }
    }
    emit_report(r, parse_report_format(c.format), out_path(c, "check"));
    std::cout << "check: " << c.trials << " instances, " << (all ? "all suites pass" : "FAILURES") << "\n";
    return all ? ExitCode::ok : ExitCode::check_failed;
}

inline ExitCode run_certify(const RunConfig& c) {
    Witness w = [&] {
        if (!c.input.empty()) {
            std::ifstream in(c.input);
            if (!in) throw InvalidArgument("cannot read witness file " + c.input);
            nlohmann::json j;
            in >> j;
            return witness_from_json(j);
        }
        FiltrationPtr filt = build_filtration(filtration_spec(c));
        if (c.depth == 1) return haar_witness(filt, c.dim);
        const Instance in = make_instance(filtration_spec(c), c.dim, *c.seed);
        return Witness{in.f, in.g, in.T};
    }();
    const auto B = select_candidate(c, regularity_delta(*w.T.filtration()));
    if (!B) throw InvalidArgument("no verified candidate is available for p != 2");
    const Certificate cert = certify(w.f, w.g, w.T, *B, {.split_tolerance = 1e-9 * c.tolerance_scale,
                                                          .final_tolerance = 1e-6 * c.tolerance_scale});
    write_json_file(std::filesystem::path(c.out) / "certificate.json", to_json(cert));
    emit_report(certificate_summary(cert), parse_report_format(c.format), out_path(c, "certify"));
    std::cout << "certify: candidate " << B->name << ", objective " << format_double(cert.objective) << ", B(root) "
              << format_double(cert.root_value) << ", " << (cert.passed ? "passed" : "FAILED") << "\n";
    if (const SplitRecord* bad = cert.failing()) {
        std::cout << "failing split: atom " << bad->event.atom << " (order " << bad->event.order_index << "), slack "
                  << format_double(bad->b2_slack) << ", d " << format_double(bad->d) << ", diam "
                  << format_double(bad->diam) << "\n";
    }
    return cert.passed ? ExitCode::ok : ExitCode::check_failed;
}

inline ExitCode run_lemma1(const RunConfig& c) {
    int bits = 1;
    while (std::ldexp(c.delta, bits) < 2.0) ++bits;
    const auto configs = sample_b2_configs(
        {.delta = c.delta, .p = 2.0, .count = c.trials, .seed = *c.seed, .dim = c.dim, .dyadic_bits = bits});
    const CandidateBellman B = quadratic_candidate(0.5);
    const double tol = 1e-9 * c.tolerance_scale;

    Report r;
    r.columns = {"config", "points", "bits", "ratio", "separation", "diam", "recombined", "direct", "passed"};
    bool all = true;
    double min_ratio = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < configs.size(); ++i) {
        const ExpansionCertificate cert = dyadic_expand(configs[i]);
        double recombined = std::numeric_limits<double>::quiet_NaN();
        double direct = recombined;
        bool ok = true;
        if (!cert.degenerate) {
            const ExpansionCheck chk = recombine_expansion(B, configs[i], cert);
            recombined = chk.recombined;
            direct = chk.direct;
            const double scale = std::max(1.0, b2_scale(B, configs[i]) / cert.ratio);
            ok = cert.ratio > 0.0 && std::abs(recombined - direct) <= tol * scale;
            min_ratio = std::min(min_ratio, cert.ratio);
        }
        all = all && ok;
        r.add_row({static_cast<std::int64_t>(i), static_cast<std::int64_t>(configs[i].points.size()),
                   static_cast<std::int64_t>(cert.bits), cert.ratio, cert.separation, cert.diam, recombined, direct, ok});
    }
    const RescaleEstimate est =
        estimate_rescale_constant(B, {.delta = c.delta, .samples = c.trials, .seed = *c.seed, .dim = c.dim});
    emit_report(r, parse_report_format(c.format), out_path(c, "lemma1"));
    write_json_file(std::filesystem::path(c.out) / "lemma1_summary.json",
                    nlohmann::json{{"delta", c.delta},
                                   {"configs", configs.size()},
                                   {"min_ratio", std::isfinite(min_ratio) ? nlohmann::json(min_ratio) : nlohmann::json()},
                                   {"rescale_constant", est.constant},
                                   {"exact_rescale_constant", quadratic_rescale_constant(c.delta)}});
    std::cout << "lemma1: min ratio " << format_double(min_ratio) << ", rescale constant "
              << format_double(est.constant) << " (empirical), " << (all ? "passed" : "FAILED") << "\n";
    return all ? ExitCode::ok : ExitCode::check_failed;
}

inline ExitCode run_search(const RunConfig& c) {
    FiltrationPtr filt = build_filtration(filtration_spec(c));
    const SearchResult res = lower_bound_search(filt, {.p = c.p, .trials = c.trials, .seed = *c.seed, .dim = c.dim});
    require(res.feasible(), "search produced no witness");
    const auto& x = *res.achieved_point;
    Report r;
    r.columns = {"trial", "objective", "x1_norm", "x2", "x3", "x4"};
    r.add_row({static_cast<std::int64_t>(res.best_trial), res.best_objective, x.x1.norm(), x.x2, x.x3, x.x4});
    emit_report(r, parse_report_format(c.format), out_path(c, "search"));
    const auto witness_path = std::filesystem::path(c.out) / "search_witness.json";
    write_json_file(witness_path, to_json(*res.witness));
    write_json_file(std::filesystem::path(c.out) / "search_summary.json",
                    nlohmann::json{{"best", res.best_objective},
                                   {"achieved_point", to_json(x)},
                                   {"witness_path", witness_path.filename().string()},
                                   {"seed", res.seed},
                                   {"trials", res.trials}});
    std::cout << "search: best objective " << format_double(res.best_objective) << " (lower bound, empirical)\n";
    return ExitCode::ok;
}

inline ExitCode run_scan(const RunConfig& c) {
    FiltrationPtr filt = build_filtration(filtration_spec(c));
    const ScanReport rep = lp_constant_scan(filt, {.p = c.p, .trials = c.trials, .seed = *c.seed, .dim = c.dim});
    Report r;
    r.columns = {"trial", "ratio"};
    for (std::size_t t = 0; t < rep.ratios.size(); ++t) r.add_row({static_cast<std::int64_t>(t), rep.ratios[t]});
    emit_report(r, parse_report_format(c.format), out_path(c, "scan"));
    write_json_file(std::filesystem::path(c.out) / "scan_summary.json",
                    nlohmann::json{{"p", c.p},
                                   {"max_ratio", rep.max_ratio},
                                   {"argmax_trial", rep.argmax_trial},
                                   {"histogram", rep.histogram},
                                   {"argmax_witness", to_json(*rep.argmax_witness)}});
    const bool ok = c.p != 2.0 || rep.max_ratio <= 1.0 + 1e-9 * c.tolerance_scale;
    std::cout << "scan: max ratio " << format_double(rep.max_ratio) << " at trial " << rep.argmax_trial
              << " (empirical)\n";
    return ok ? ExitCode::ok : ExitCode::check_failed;
}

inline ExitCode run_bound(const RunConfig& c) {
    const Instance in = make_instance(filtration_spec(c), c.dim, *c.seed);
    const auto B = select_candidate(c, regularity_delta(*in.filt));
    Report r;
    r.columns = {"p", "empirical", "analytic", "certified", "evaluated", "worst_margin"};
    if (!B || c.candidate != "quadratic") {
        r.add_row({c.p, std::numeric_limits<double>::quiet_NaN(), std::numeric_limits<double>::quiet_NaN(), false,
                   std::int64_t{0}, std::numeric_limits<double>::quiet_NaN()});
        emit_report(r, parse_report_format(c.format), out_path(c, "bound"));
        std::cout << "bound: no verified candidate for p = " << format_double(c.p) << "; bound withheld\n";
        return ExitCode::check_failed;
    }
    const DualityReport rep = duality_bound(in.T, in.f, *B, {.samples = c.trials, .seed = *c.seed});
    r.add_row({c.p, rep.empirical, rep.analytic, rep.certified, static_cast<std::int64_t>(rep.evaluated),
               rep.worst_margin});
    emit_report(r, parse_report_format(c.format), out_path(c, "bound"));
    std::cout << "bound: empirical " << format_double(rep.empirical) << ", analytic " << format_double(rep.analytic)
              << (rep.consistent() ? "" : " INCONSISTENT") << "\n";
    return rep.consistent() ? ExitCode::ok : ExitCode::check_failed;
}

}  // namespace detail

/// Validates and dispatches; returns the process exit status.
inline int run(const RunConfig& c) {
    try {
        validate(c);
        std::filesystem::create_directories(c.out);
    } catch (const InvalidArgument& e) {
        std::cerr << "invalid config: " << e.what() << "\n";
        return static_cast<int>(ExitCode::invalid_config);
    } catch (const std::filesystem::filesystem_error& e) {
        std::cerr << "invalid config: " << e.what() << "\n";
        return static_cast<int>(ExitCode::invalid_config);
    }
    try {
        ExitCode code = ExitCode::ok;
        if (c.command == "gen") code = detail::run_gen(c);
        else if (c.command == "check") code = detail::run_check(c);
        else if (c.command == "certify") code = detail::run_certify(c);
        else if (c.command == "lemma1") code = detail::run_lemma1(c);
        else if (c.command == "search") code = detail::run_search(c);
        else if (c.command == "scan") code = detail::run_scan(c);
        else code = detail::run_bound(c);
        return static_cast<int>(code);
    } catch (const InvalidArgument& e) {
        std::cerr << "invalid input: " << e.what() << "\n";
        return static_cast<int>(ExitCode::invalid_config);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return static_cast<int>(ExitCode::check_failed);
    }
}

}  // namespace mbl
