// mrfl: sample from, learn and run recovery experiments on pairwise models.

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "mrfl/error.hpp"
#include "mrfl/harness.hpp"
#include "mrfl/learner.hpp"
#include "mrfl/model_io.hpp"
#include "mrfl/sampler.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace mrfl;

namespace {

json read_json(const std::string& path) {
    std::ifstream in(path);
    if (!in) fail("io_error", "cannot read " + path);
    try {
        return json::parse(in);
    } catch (const json::parse_error& e) {
        fail("invalid_config", path + ": " + e.what());
    }
}

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    out << text;
    if (!out) fail("io_error", "cannot write " + path.string());
}

fs::path make_dir(const std::string& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) fail("io_error", "cannot create " + dir + ": " + ec.message());
    return dir;
}

struct LearnArgs {
    std::string samples, config, out = ".", solver;
    std::optional<double> lambda, eta, tolerance;
    std::optional<std::size_t> iterations, threads;
    std::optional<std::uint64_t> seed;
    bool or_rule = false, strict = false;
};

LearnConfig learn_config(const LearnArgs& a) {
    LearnConfig c;
    if (!a.config.empty()) {
        const json doc = read_json(a.config);
        try {
            c.lambda = doc.value("lambda", c.lambda);
            c.eta = doc.value("eta", c.eta);
            if (doc.contains("solver")) c.solver = solver_from_string(doc["solver"].get<std::string>());
            c.iterations = doc.value("iterations", c.iterations);
            c.tolerance = doc.value("tolerance", c.tolerance);
            c.seed = doc.value("seed", c.seed);
            c.or_rule = doc.value("or_rule", c.or_rule);
            c.strict_pairs = doc.value("strict_pairs", c.strict_pairs);
            c.holdout_fraction = doc.value("holdout_fraction", c.holdout_fraction);
            c.min_holdout = doc.value("min_holdout", c.min_holdout);
            c.threads = doc.value("threads", c.threads);
        } catch (const json::exception& e) {
            fail("invalid_config", a.config + ": " + e.what());
        }
    }
    if (a.lambda) c.lambda = *a.lambda;
    if (a.eta) c.eta = *a.eta;
    if (!a.solver.empty()) c.solver = solver_from_string(a.solver);
    if (a.iterations) c.iterations = *a.iterations;
    if (a.tolerance) c.tolerance = *a.tolerance;
    if (a.seed) c.seed = *a.seed;
    if (a.threads) c.threads = *a.threads;
    if (a.or_rule) c.or_rule = true;
    if (a.strict) c.strict_pairs = true;
    return c;
}

void add_learn_options(CLI::App* cmd, LearnArgs& a) {
    cmd->add_option("samples", a.samples, "Sample CSV (with .json sidecar)")->required();
    cmd->add_option("--config", a.config, "JSON file with learner settings");
    cmd->add_option("--lambda", a.lambda, "Width upper bound");
    cmd->add_option("--eta", a.eta, "Minimum edge weight lower bound");
    cmd->add_option("--solver", a.solver, "mirror, reference or sparsitron")
        ->check(CLI::IsMember({"mirror", "reference", "sparsitron"}));
    cmd->add_option("--iterations", a.iterations, "Mirror-descent iterations (0 = default rule)");
    cmd->add_option("--tolerance", a.tolerance, "Reference solver tolerance");
    cmd->add_option("--seed", a.seed, "Seed for randomized solvers");
    cmd->add_option("--threads", a.threads, "Worker threads (0 = all cores)");
    cmd->add_flag("--or-rule", a.or_rule, "Keep an edge when either direction passes the threshold");
    cmd->add_option("--out", a.out, "Output directory");
}

void run_learn(const LearnArgs& a, bool ising) {
    const SampleSet samples = read_samples(a.samples);
    const LearnConfig config = learn_config(a);
    const LearnResult result = ising ? learn_ising(samples, config) : learn_pairwise(samples, config);
    const fs::path dir = make_dir(a.out);
    write_text(dir / "result.json", to_json(result).dump(2) + "\n");
    write_adjacency_csv(result, (dir / "adjacency.csv").string());
    for (const auto& w : result.warnings) std::cerr << "warning: " << w << "\n";
    json summary{{"edges", result.edges}, {"solver", result.solver}, {"out", dir.string()}};
    std::cout << summary.dump() << "\n";
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Structure learning for Ising and pairwise graphical models"};
    app.require_subcommand(1);

    // sample
    std::string model_path, method = "exact", sample_out = ".";
    std::size_t count = 1000, burn_in = 1000, thinning = 5;
    std::uint64_t sample_seed = 1;
    auto* sample = app.add_subcommand("sample", "Draw samples from a model JSON");
    sample->add_option("model", model_path, "Model JSON")->required();
    sample->add_option("-N,--count", count, "Number of samples");
    sample->add_option("--seed", sample_seed, "Sampler seed");
    sample->add_option("--method", method, "exact or gibbs")->check(CLI::IsMember({"exact", "gibbs"}));
    sample->add_option("--burn-in", burn_in, "Gibbs sweeps discarded");
    sample->add_option("--thinning", thinning, "Gibbs sweeps between samples");
    sample->add_option("--out", sample_out, "Output directory");

    LearnArgs ising_args, pair_args;
    auto* learn_i = app.add_subcommand("learn-ising", "Learn an Ising model from +-1 samples");
    add_learn_options(learn_i, ising_args);
    auto* learn_p = app.add_subcommand("learn-pairwise", "Learn a pairwise model from 1..k samples");
    add_learn_options(learn_p, pair_args);
    learn_p->add_flag("--strict-pairs", pair_args.strict, "Fail when a symbol pair never occurs");

    // incoherence
    std::string inc_model;
    std::optional<std::size_t> diamond_n;
    double diamond_a = 0.2;
    std::size_t node = 0;
    auto* inc = app.add_subcommand("incoherence", "Incoherence value at a node of an Ising model");
    inc->add_option("--model", inc_model, "Ising model JSON");
    inc->add_option("--diamond", diamond_n, "Use the diamond graph with this many nodes");
    inc->add_option("-a,--weight", diamond_a, "Diamond edge weight");
    inc->add_option("--node", node, "Node index (0-based)");

    // experiment
    std::string exp_config, exp_out = "results";
    std::optional<std::uint64_t> exp_seed;
    std::optional<std::size_t> exp_runs, exp_threads, exp_iterations;
    std::vector<std::string> exp_solvers;
    auto* exp = app.add_subcommand("experiment", "Run a recovery sweep and write plot data");
    exp->add_option("config", exp_config, "Experiment JSON")->required();
    exp->add_option("--seed", exp_seed, "Master seed");
    exp->add_option("--runs", exp_runs, "Runs per sample size");
    exp->add_option("--solver", exp_solvers, "Solver(s) to compare")
        ->check(CLI::IsMember({"mirror", "reference", "sparsitron"}));
    exp->add_option("--iterations", exp_iterations, "Mirror-descent iterations");
    exp->add_option("--threads", exp_threads, "Worker threads (0 = all cores)");
    exp->add_option("--out", exp_out, "Output directory");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    }

    try {
        if (*sample) {
            const AnyModel model = load_model(model_path);
            GibbsOptions g{burn_in, thinning};
            const SampleSet s = std::visit(
                [&](const auto& m) {
                    return method == "exact" ? sample_exact(m, count, sample_seed) : sample_gibbs(m, count, sample_seed, g);
                },
                model);
            const fs::path dir = make_dir(sample_out);
            write_samples(s, (dir / "samples.csv").string());
            std::cout << json{{"samples", (dir / "samples.csv").string()}, {"count", s.size()}}.dump() << "\n";
        } else if (*learn_i) {
            run_learn(ising_args, true);
        } else if (*learn_p) {
            run_learn(pair_args, false);
        } else if (*inc) {
            IsingModel model;
            if (diamond_n) {
                model = build_diamond(*diamond_n, diamond_a);
            } else if (!inc_model.empty()) {
                model = ising_from_json(read_json(inc_model));
            } else {
                fail("invalid_argument", "incoherence needs --model or --diamond");
            }
            std::cout << json{{"node", node}, {"incoherence", incoherence(model, node)}}.dump() << "\n";
        } else if (*exp) {
            ExperimentConfig config = experiment_config_from_json(read_json(exp_config));
            if (exp_seed) config.master_seed = *exp_seed;
            if (exp_runs) config.runs = *exp_runs;
            if (exp_threads) config.threads = *exp_threads;
            if (exp_iterations) config.iterations = *exp_iterations;
            if (!exp_solvers.empty()) {
                config.solvers.clear();
                for (const auto& s : exp_solvers) config.solvers.push_back(solver_from_string(s));
            }
            const ExperimentResult result = run_recovery_experiment(config);
            const auto files = emit_plot_data(result, exp_out);
            json summary = json::array();
            for (const auto& a : result.aggregates)
                summary.push_back({{"solver", to_string(a.solver)},
                                   {"N", a.sample_size},
                                   {"recovery_fraction", a.recovery_fraction},
                                   {"mean_max_error", std::isnan(a.mean_max_error) ? json(nullptr) : json(a.mean_max_error)},
                                   {"failures", a.failures}});
            std::cout << json{{"files", files}, {"aggregates", summary}}.dump(2) << "\n";
        }
    } catch (const Error& e) {
        std::cout << json{{"error", e.code()}, {"message", e.what()}}.dump() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cout << json{{"error", "internal"}, {"message", e.what()}}.dump() << "\n";
        return 2;
    }
    return 0;
}
