#include "mrfl/model_io.hpp"

#include <cstdint>
#include <cstdio>
#include <fstream>

#include "mrfl/error.hpp"

namespace mrfl {

using nlohmann::json;

namespace {

json matrix_to_json(const Matrix& m) {
    json rows = json::array();
    for (std::size_t r = 0; r < m.rows(); ++r) {
        json row = json::array();
        for (std::size_t c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
        rows.push_back(std::move(row));
    }
    return rows;
}

Matrix matrix_from_json(const json& doc, std::size_t rows, std::size_t cols, const char* what) {
    if (!doc.is_array() || doc.size() != rows)
        fail("invalid_model", std::string(what) + ": expected " + std::to_string(rows) + " rows");
    Matrix m(rows, cols);
    for (std::size_t r = 0; r < rows; ++r) {
        const json& row = doc[r];
        if (!row.is_array() || row.size() != cols)
            fail("invalid_model", std::string(what) + ": expected " + std::to_string(cols) + " columns");
        for (std::size_t c = 0; c < cols; ++c) m(r, c) = row[c].get<double>();
    }
    return m;
}

std::size_t get_size(const json& doc, const char* key) {
    if (!doc.contains(key) || !doc[key].is_number_unsigned())
        fail("invalid_model", std::string("missing or invalid \"") + key + "\"");
    return doc[key].get<std::size_t>();
}

PairwiseModel pairwise_from_json(const json& doc) {
    const std::size_t n = get_size(doc, "n");
    const std::size_t k = get_size(doc, "k");
    PairwiseModel model(n, k);
    if (doc.contains("theta")) {
        Matrix theta = matrix_from_json(doc["theta"], n, k, "theta");
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t a = 0; a < k; ++a) model.theta(i)[a] = theta(i, a);
    }
    if (doc.contains("edges")) {
        for (const json& e : doc["edges"]) {
            const std::size_t i = get_size(e, "i");
            const std::size_t j = get_size(e, "j");
            if (i >= n || j >= n || i == j) fail("invalid_model", "edge index out of range");
            model.set_edge(i, j, matrix_from_json(e.at("w"), k, k, "w"));
        }
    }
    model.validate(false);
    return model;
}

IsingModel compact_ising_from_json(const json& doc) {
    const std::size_t n = get_size(doc, "n");
    if (doc.contains("k") && doc["k"] != 2) fail("invalid_model", "compact Ising documents need k = 2");
    IsingModel model(n);
    model.A = matrix_from_json(doc.at("A"), n, n, "A");
    if (doc.contains("theta")) {
        const json& t = doc["theta"];
        if (!t.is_array() || t.size() != n) fail("invalid_model", "theta must have n entries");
        for (std::size_t i = 0; i < n; ++i) model.theta[i] = t[i].get<double>();
    }
    model.validate();
    return model;
}

std::uint64_t fnv1a(const std::string& s) {
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

std::string hex64(std::uint64_t v) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

}  // namespace

json to_json(const PairwiseModel& model) {
    json doc;
    doc["n"] = model.n();
    doc["k"] = model.k();
    json theta = json::array();
    for (std::size_t i = 0; i < model.n(); ++i) theta.push_back(model.theta(i));
    doc["theta"] = std::move(theta);
    json edges = json::array();
    for (const auto& [key, w] : model.pairs())
        edges.push_back({{"i", key.first}, {"j", key.second}, {"w", matrix_to_json(w)}});
    doc["edges"] = std::move(edges);
    return doc;
}

json to_json(const IsingModel& model, bool compact) {
    if (!compact) return to_json(to_pairwise(model));
    json doc;
    doc["n"] = model.n;
    doc["k"] = 2;
    doc["A"] = matrix_to_json(model.A);
    doc["theta"] = model.theta;
    return doc;
}

AnyModel model_from_json(const json& doc) {
    try {
        if (!doc.is_object()) fail("invalid_model", "model document must be an object");
        if (doc.contains("A")) return compact_ising_from_json(doc);
        return pairwise_from_json(doc);
    } catch (const json::exception& e) {
        fail("invalid_model", std::string("malformed model document: ") + e.what());
    }
}

IsingModel ising_from_json(const json& doc) {
    AnyModel m = model_from_json(doc);
    if (auto* ising = std::get_if<IsingModel>(&m)) return *ising;
    return ising_from_pairwise(std::get<PairwiseModel>(m));
}

AnyModel load_model(const std::string& path) {
    std::ifstream in(path);
    if (!in) fail("io_error", "cannot open model file: " + path);
    json doc;
    try {
        in >> doc;
    } catch (const json::exception& e) {
        fail("invalid_model", path + ": " + e.what());
    }
    return model_from_json(doc);
}

void save_model(const AnyModel& model, const std::string& path) {
    std::ofstream out(path);
    if (!out) fail("io_error", "cannot write model file: " + path);
    std::visit([&](const auto& m) { out << to_json(m).dump(2) << "\n"; }, model);
    if (!out) fail("io_error", "failed writing model file: " + path);
}

std::string model_digest(const PairwiseModel& model) { return hex64(fnv1a(to_json(model).dump())); }

std::string model_digest(const IsingModel& model) { return model_digest(to_pairwise(model)); }

}  // namespace mrfl
