#include "mrfl/harness.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <sstream>

#include <Eigen/Dense>

#include "mrfl/error.hpp"
#include "mrfl/parallel.hpp"
#include "mrfl/random.hpp"
#include "mrfl/sampler.hpp"

namespace mrfl {

IsingModel build_diamond(std::size_t n, double a) {
    require(n >= 3, "diamond needs n >= 3");
    require(a > 0.0 && std::isfinite(a), "diamond edge weight must be > 0");
    IsingModel model(n);
    for (std::size_t m = 1; m + 1 < n; ++m) {
        model.set_coupling(0, m, a);
        model.set_coupling(n - 1, m, a);
    }
    return model;
}

Matrix grid_pattern(std::size_t k, double magnitude) {
    require(k >= 2 && k <= kMaxAlphabet, "alphabet size out of range");
    require(magnitude > 0.0 && std::isfinite(magnitude), "edge magnitude must be > 0");
    std::vector<double> v(k);
    for (std::size_t a = 0; a < k; ++a)
        v[a] = k % 2 == 0 ? (a % 2 == 0 ? 1.0 : -1.0)
                          : std::cos(2.0 * std::numbers::pi * static_cast<double>(a) / static_cast<double>(k));
    // v has zero sum, so every row and column of v v^T does too; v_0 = 1 is the largest entry.
    Matrix p(k, k);
    for (std::size_t a = 0; a < k; ++a)
        for (std::size_t b = 0; b < k; ++b) p(a, b) = magnitude * v[a] * v[b];
    return p;
}

namespace {

Matrix signed_pattern(const Matrix& pattern, bool flip) {
    if (!flip) return pattern;
    Matrix m = pattern;
    for (std::size_t a = 0; a < m.rows(); ++a)
        for (std::size_t b = 0; b < m.cols(); ++b) m(a, b) = -m(a, b);
    return m;
}

}  // namespace

PairwiseModel build_grid(std::size_t rows, std::size_t cols, std::size_t k, double magnitude, std::uint64_t seed) {
    require(rows >= 1 && cols >= 1 && rows * cols >= 2, "grid needs at least two nodes");
    const Matrix pattern = grid_pattern(k, magnitude);
    PairwiseModel model(rows * cols, k);
    Rng rng(seed);
    for (std::size_t r = 0; r < rows; ++r)
        for (std::size_t c = 0; c < cols; ++c) {
            const std::size_t v = r * cols + c;
            if (c + 1 < cols) model.set_edge(v, v + 1, signed_pattern(pattern, rng.coin()));
            if (r + 1 < rows) model.set_edge(v, v + cols, signed_pattern(pattern, rng.coin()));
        }
    return model;
}

PairwiseModel build_random(std::size_t n, std::size_t k, double magnitude, double edge_probability,
                           std::uint64_t seed) {
    require(n >= 2, "random model needs n >= 2");
    require(edge_probability >= 0.0 && edge_probability <= 1.0, "edge probability must be in [0, 1]");
    const Matrix pattern = grid_pattern(k, magnitude);
    PairwiseModel model(n, k);
    Rng rng(seed);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j) {
            const bool present = rng.uniform() < edge_probability;
            const bool flip = rng.coin();
            if (present) model.set_edge(i, j, signed_pattern(pattern, flip));
        }
    return model;
}

double incoherence(const IsingModel& model, std::size_t i) {
    model.validate();
    require(i < model.n, "node index out of range");
    const std::size_t n = model.n, d = n - 1;
    std::vector<std::size_t> S, Sc;
    for (std::size_t j = 0; j < n; ++j) {
        if (j == i) continue;
        (std::abs(model.A(i, j)) > kEdgeFloor ? S : Sc).push_back(regression_index(i, j));
    }
    if (S.empty()) fail("no_edges", "node " + std::to_string(i) + " has no neighbors");

    const ProbabilityTable table = exact_distribution(model, kUnbiasedCheckCap);
    Eigen::MatrixXd Q = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(d));
    Eigen::VectorXd x(static_cast<Eigen::Index>(d));
    std::vector<std::uint8_t> config(n);
    for (std::size_t s = 0; s < table.states(); ++s) {
        decode_state(s, 2, config);
        double z = 2.0 * model.theta[i];
        for (std::size_t j = 0; j < n; ++j) {
            if (j == i) continue;
            const double spin = config[j] ? 1.0 : -1.0;
            x(static_cast<Eigen::Index>(regression_index(i, j))) = spin;
            z += 2.0 * model.A(i, j) * spin;
        }
        const double sig = sigmoid(z);
        Q.noalias() += (table.p[s] * sig * (1.0 - sig)) * (x * x.transpose());
    }

    auto idx = [](const std::vector<std::size_t>& v) {
        std::vector<Eigen::Index> out(v.begin(), v.end());
        return out;
    };
    const auto s_idx = idx(S), sc_idx = idx(Sc);
    const Eigen::MatrixXd Qss = Q(s_idx, s_idx);
    const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(Qss, Eigen::EigenvaluesOnly);
    const double lo = eig.eigenvalues().minCoeff(), hi = eig.eigenvalues().maxCoeff();
    const double cond = lo > 0.0 ? hi / lo : std::numeric_limits<double>::infinity();
    if (!(cond <= 1e12)) {
        char buf[64];
        std::snprintf(buf, sizeof buf, "%.3g", cond);
        fail("singular_matrix", "Q_SS at node " + std::to_string(i) + " is singular (condition number " + buf + ")");
    }
    if (Sc.empty()) return 0.0;
    const Eigen::MatrixXd M = Qss.ldlt().solve(Q(s_idx, sc_idx)).transpose();  // Q_{ScS} Q_SS^{-1}
    return M.cwiseAbs().rowwise().sum().maxCoeff();
}

const char* to_string(Family family) {
    switch (family) {
        case Family::diamond: return "diamond";
        case Family::grid: return "grid";
        case Family::random: return "random";
    }
    return "?";
}

Family family_from_string(const std::string& name) {
    if (name == "diamond") return Family::diamond;
    if (name == "grid") return Family::grid;
    if (name == "random") return Family::random;
    fail("invalid_config", "unknown model family '" + name + "' (expected diamond, grid or random)");
}

void ExperimentConfig::validate() const {
    auto check = [](bool ok, const std::string& msg) {
        if (!ok) fail("invalid_config", msg);
    };
    check(runs >= 1, "runs must be >= 1");
    check(!sample_sizes.empty(), "sample_sizes must not be empty");
    check(sample_sizes.front() >= 1, "sample sizes must be >= 1");
    for (std::size_t t = 1; t < sample_sizes.size(); ++t)
        check(sample_sizes[t] > sample_sizes[t - 1], "sample_sizes must be strictly increasing");
    check(!solvers.empty(), "at least one solver is required");
    check(edge_weight > 0.0 && std::isfinite(edge_weight), "edge_weight must be > 0");
    check(!eta || *eta > 0.0, "eta must be > 0");
    check(!lambda || *lambda > 0.0, "lambda must be > 0");
    check(tolerance > 0.0, "tolerance must be > 0");
    switch (family) {
        case Family::diamond: check(n >= 3, "diamond needs n >= 3"); break;
        case Family::grid: check(rows * cols >= 2 && k >= 2, "grid needs >= 2 nodes and k >= 2"); break;
        case Family::random:
            check(n >= 2 && k >= 2, "random family needs n >= 2 and k >= 2");
            check(edge_probability >= 0.0 && edge_probability <= 1.0, "edge_probability must be in [0, 1]");
            break;
    }
}

nlohmann::json to_json(const ExperimentConfig& config) {
    nlohmann::json doc;
    doc["family"] = to_string(config.family);
    doc["n"] = config.n;
    doc["rows"] = config.rows;
    doc["cols"] = config.cols;
    doc["k"] = config.k;
    doc["edge_weight"] = config.edge_weight;
    doc["edge_probability"] = config.edge_probability;
    doc["eta"] = config.eta ? nlohmann::json(*config.eta) : nlohmann::json(nullptr);
    doc["lambda"] = config.lambda ? nlohmann::json(*config.lambda) : nlohmann::json(nullptr);
    doc["sample_sizes"] = config.sample_sizes;
    doc["runs"] = config.runs;
    doc["master_seed"] = config.master_seed;
    nlohmann::json solvers = nlohmann::json::array();
    for (auto s : config.solvers) solvers.push_back(to_string(s));
    doc["solvers"] = solvers;
    doc["iterations"] = config.iterations;
    doc["tolerance"] = config.tolerance;
    return doc;
}

ExperimentConfig experiment_config_from_json(const nlohmann::json& doc) {
    if (!doc.is_object()) fail("invalid_config", "experiment config must be a JSON object");
    ExperimentConfig c;
    try {
        if (doc.contains("family")) c.family = family_from_string(doc["family"].get<std::string>());
        auto get = [&](const char* key, auto& field) {
            if (doc.contains(key)) field = doc[key].get<std::remove_reference_t<decltype(field)>>();
        };
        get("n", c.n);
        get("rows", c.rows);
        get("cols", c.cols);
        get("k", c.k);
        get("edge_weight", c.edge_weight);
        get("edge_probability", c.edge_probability);
        if (doc.contains("eta") && !doc["eta"].is_null()) c.eta = doc["eta"].get<double>();
        if (doc.contains("lambda") && !doc["lambda"].is_null()) c.lambda = doc["lambda"].get<double>();
        get("sample_sizes", c.sample_sizes);
        get("runs", c.runs);
        get("master_seed", c.master_seed);
        if (doc.contains("solvers")) {
            c.solvers.clear();
            for (const auto& s : doc["solvers"]) c.solvers.push_back(solver_from_string(s.get<std::string>()));
        }
        if (doc.contains("solver")) c.solvers = {solver_from_string(doc["solver"].get<std::string>())};
        get("iterations", c.iterations);
        get("tolerance", c.tolerance);
        get("threads", c.threads);
    } catch (const nlohmann::json::exception& e) {
        fail("invalid_config", std::string("malformed experiment config: ") + e.what());
    } catch (const Error& e) {
        fail("invalid_config", e.what());
    }
    return c;
}

std::vector<Aggregate> ExperimentResult::curve(SolverKind solver) const {
    std::vector<Aggregate> out;
    for (const auto& a : aggregates)
        if (a.solver == solver) out.push_back(a);
    return out;
}

namespace {

std::vector<Edge> sorted(std::vector<Edge> e) {
    std::sort(e.begin(), e.end());
    return e;
}

struct RunModel {
    std::optional<IsingModel> ising;
    std::optional<PairwiseModel> pairwise;
    std::optional<ProbabilityTable> table;
    std::vector<Edge> edges;
    ModelBounds bounds;
};

RunModel make_model(const ExperimentConfig& config, std::uint64_t seed) {
    RunModel m;
    switch (config.family) {
        case Family::diamond: m.ising = build_diamond(config.n, config.edge_weight); break;
        case Family::grid: m.pairwise = build_grid(config.rows, config.cols, config.k, config.edge_weight, seed); break;
        case Family::random:
            m.pairwise = build_random(config.n, config.k, config.edge_weight, config.edge_probability, seed);
            break;
    }
    if (m.ising) {
        m.table = exact_distribution(*m.ising);
        m.edges = sorted(m.ising->edges());
        m.bounds = model_bounds(*m.ising);
    } else {
        m.table = exact_distribution(*m.pairwise);
        m.edges = sorted(m.pairwise->edges());
        m.bounds = model_bounds(*m.pairwise);
    }
    return m;
}

}  // namespace

ExperimentResult run_recovery_experiment(const ExperimentConfig& config) {
    config.validate();
    const std::size_t sizes = config.sample_sizes.size(), solvers = config.solvers.size();
    ExperimentResult result;
    result.config = config;
    result.records.resize(solvers * sizes * config.runs);
    auto slot = [&](std::size_t s, std::size_t t, std::size_t r) -> RunRecord& {
        return result.records[(s * sizes + t) * config.runs + r];
    };

    const std::uint64_t model_stream = derive_seed(config.master_seed, 0);
    std::optional<RunModel> fixed;
    if (config.family == Family::diamond) fixed = make_model(config, 0);

    parallel_for(config.runs, config.threads, [&](std::size_t r) {
        std::optional<RunModel> own;
        std::string model_error;
        try {
            if (!fixed) own = make_model(config, derive_seed(model_stream, r));
        } catch (const Error& e) {
            model_error = e.code() + ": " + e.what();
        }
        const RunModel* m = fixed ? &*fixed : own ? &*own : nullptr;

        for (std::size_t t = 0; t < sizes; ++t) {
            const std::size_t N = config.sample_sizes[t];
            const std::uint64_t sample_seed = derive_seed(derive_seed(config.master_seed, 1 + N), r);
            std::optional<SampleSet> samples;
            std::string sample_error = model_error;
            if (m && sample_error.empty()) {
                try {
                    samples = sample_from_table(*m->table, N, sample_seed);
                    samples->ising = m->ising.has_value();
                } catch (const Error& e) {
                    sample_error = e.code() + ": " + e.what();
                }
            }
            for (std::size_t s = 0; s < solvers; ++s) {
                RunRecord& rec = slot(s, t, r);
                rec.sample_size = N;
                rec.run = r;
                rec.solver = config.solvers[s];
                if (!samples) {
                    rec.failed = true;
                    rec.error = sample_error;
                    continue;
                }
                try {
                    LearnConfig lc;
                    lc.lambda = config.lambda.value_or(m->bounds.lambda);
                    lc.eta = config.eta.value_or(m->bounds.eta);
                    lc.solver = config.solvers[s];
                    lc.iterations = config.iterations;
                    lc.tolerance = config.tolerance;
                    lc.seed = sample_seed;
                    lc.record_trajectories = false;
                    lc.threads = 1;
                    const LearnResult learned = m->ising ? learn_ising(*samples, lc) : learn_pairwise(*samples, lc);
                    rec.recovered = sorted(learned.edges) == m->edges;
                    rec.max_error = m->ising ? max_entry_error(*m->ising, learned) : max_entry_error(*m->pairwise, learned);
                    rec.seconds = learned.seconds;
                } catch (const Error& e) {
                    rec.failed = true;
                    rec.error = e.code() + ": " + e.what();
                } catch (const std::exception& e) {
                    rec.failed = true;
                    rec.error = std::string("internal: ") + e.what();
                }
            }
        }
    });

    for (std::size_t s = 0; s < solvers; ++s)
        for (std::size_t t = 0; t < sizes; ++t) {
            Aggregate a;
            a.solver = config.solvers[s];
            a.sample_size = config.sample_sizes[t];
            a.runs = config.runs;
            std::size_t recovered = 0;
            double sum = 0.0;
            std::vector<double> errors;
            for (std::size_t r = 0; r < config.runs; ++r) {
                const RunRecord& rec = slot(s, t, r);
                if (rec.failed) {
                    ++a.failures;
                    continue;
                }
                recovered += rec.recovered;
                errors.push_back(rec.max_error);
                sum += rec.max_error;
            }
            a.recovery_fraction = static_cast<double>(recovered) / static_cast<double>(config.runs);
            if (errors.empty()) {
                a.mean_max_error = std::numeric_limits<double>::quiet_NaN();
                a.stderr_max_error = std::numeric_limits<double>::quiet_NaN();
            } else {
                const double count = static_cast<double>(errors.size());
                a.mean_max_error = sum / count;
                double ss = 0.0;
                for (double e : errors) ss += (e - a.mean_max_error) * (e - a.mean_max_error);
                a.stderr_max_error = errors.size() > 1 ? std::sqrt(ss / (count - 1.0) / count) : 0.0;
            }
            result.aggregates.push_back(a);
        }
    return result;
}

std::string format_number(double value) {
    if (std::isnan(value)) return "nan";
    if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.12g", value);
    if (std::strtod(buf, nullptr) == value) return buf;
    const auto res = std::to_chars(buf, buf + sizeof buf, value);
    return std::string(buf, res.ptr);
}

namespace {

std::ofstream open_output(const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) fail("io_error", "cannot write " + path.string());
    return out;
}

void finish(std::ofstream& out, const std::filesystem::path& path) {
    out.flush();
    if (!out) fail("io_error", "write failed for " + path.string());
}

std::string csv_quote(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string q = "\"";
    for (char c : s) {
        if (c == '"') q += '"';
        q += c == '\n' ? ' ' : c;
    }
    return q + "\"";
}

}  // namespace

std::vector<std::string> emit_plot_data(const ExperimentResult& result, const std::string& directory) {
    namespace fs = std::filesystem;
    const fs::path dir(directory);
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) fail("io_error", "cannot create " + dir.string() + ": " + ec.message());

    std::vector<std::string> written;
    std::vector<SolverKind> solvers = result.config.solvers;
    for (SolverKind solver : solvers) {
        const fs::path path = dir / (std::string("recovery_") + to_string(solver) + ".csv");
        auto out = open_output(path);
        out << "N,recovery_fraction,mean_max_error,stderr\n";
        for (const auto& a : result.curve(solver))
            out << a.sample_size << ',' << format_number(a.recovery_fraction) << ','
                << format_number(a.mean_max_error) << ',' << format_number(a.stderr_max_error) << '\n';
        finish(out, path);
        written.push_back(path.string());
    }

    {
        const fs::path path = dir / "runs.csv";
        auto out = open_output(path);
        out << "solver,N,run,recovered,max_error,failed,error\n";
        for (const auto& r : result.records)
            out << to_string(r.solver) << ',' << r.sample_size << ',' << r.run << ',' << (r.recovered ? 1 : 0) << ','
                << (r.failed ? "nan" : format_number(r.max_error)) << ',' << (r.failed ? 1 : 0) << ','
                << csv_quote(r.error) << '\n';
        finish(out, path);
        written.push_back(path.string());
    }

    {
        const fs::path path = dir / "manifest.json";
        nlohmann::json manifest;
        manifest["config"] = to_json(result.config);
        manifest["records"] = result.records.size();
        std::size_t failures = 0;
        for (const auto& r : result.records) failures += r.failed;
        manifest["failures"] = failures;
        nlohmann::json files = nlohmann::json::array();
        for (const auto& w : written) files.push_back(fs::path(w).filename().string());
        manifest["files"] = files;
        manifest["columns"] = {
            {"recovery", {"N", "recovery_fraction", "mean_max_error", "stderr"}},
            {"runs", {"solver", "N", "run", "recovered", "max_error", "failed", "error"}}};
        auto out = open_output(path);
        out << manifest.dump(2) << '\n';
        finish(out, path);
        written.push_back(path.string());
    }
    return written;
}

std::vector<CurvePoint> read_curve_csv(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail("io_error", "cannot read " + path);
    std::string line;
    if (!std::getline(in, line) || line != "N,recovery_fraction,mean_max_error,stderr")
        fail("invalid_csv", path + ": unexpected header");
    std::vector<CurvePoint> points;
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        std::stringstream ss(line);
        std::string cell[4];
        for (auto& c : cell)
            if (!std::getline(ss, c, ',')) fail("invalid_csv", path + ":" + std::to_string(lineno) + ": too few columns");
        CurvePoint p;
        char* end = nullptr;
        p.sample_size = std::strtoull(cell[0].c_str(), &end, 10);
        double* targets[3] = {&p.recovery_fraction, &p.mean_max_error, &p.stderr_max_error};
        for (int c = 0; c < 3; ++c) {
            *targets[c] = std::strtod(cell[c + 1].c_str(), &end);
            if (end == cell[c + 1].c_str() || *end != '\0')
                fail("invalid_csv", path + ":" + std::to_string(lineno) + ": bad number '" + cell[c + 1] + "'");
        }
        points.push_back(p);
    }
    return points;
}

}  // namespace mrfl
