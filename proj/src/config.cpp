#include <algorithm>
#include <cctype>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "glu/errors.hpp"
#include "glu/harness.hpp"

namespace glu {

using nlohmann::json;

namespace {

std::string trim(std::string s) {
    auto not_space = [](unsigned char c) { return !std::isspace(c); };
    s.erase(s.begin(), std::find_if(s.begin(), s.end(), not_space));
    s.erase(std::find_if(s.rbegin(), s.rend(), not_space).base(), s.end());
    return s;
}

// "kind: N" shorthand -> (kind, N).
std::pair<std::string, int> parse_shorthand(const std::string& text) {
    const auto colon = text.find(':');
    if (colon == std::string::npos) {
        throw ConfigError("expected '<kind>: <N>' shorthand, got '" + text + "'");
    }
    const std::string kind = trim(text.substr(0, colon));
    const std::string count = trim(text.substr(colon + 1));
    try {
        std::size_t used = 0;
        const int n = std::stoi(count, &used);
        if (used != count.size() || n <= 0) {
            throw std::invalid_argument(count);
        }
        return {kind, n};
    } catch (const std::exception&) {
        throw ConfigError("bad vertex count in shorthand '" + text + "'");
    }
}

Vector parse_vector(const json& j, const std::string& what) {
    if (!j.is_array()) {
        throw ConfigError(what + " must be an array of numbers");
    }
    Vector v(static_cast<Eigen::Index>(j.size()));
    for (std::size_t k = 0; k < j.size(); ++k) {
        if (!j[k].is_number()) {
            throw ConfigError(what + " must be an array of numbers");
        }
        v(static_cast<Eigen::Index>(k)) = j[k].get<double>();
    }
    return v;
}

// Row-major nested arrays; a flat array is a single row.
Matrix parse_matrix(const json& j, const std::string& what) {
    if (!j.is_array() || j.empty()) {
        throw ConfigError(what + " must be a non-empty array");
    }
    if (j[0].is_number()) {
        return parse_vector(j, what).transpose();
    }
    const auto rows = static_cast<Eigen::Index>(j.size());
    const auto cols = static_cast<Eigen::Index>(j[0].size());
    Matrix m(rows, cols);
    for (Eigen::Index r = 0; r < rows; ++r) {
        const json& row = j[static_cast<std::size_t>(r)];
        if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != cols) {
            throw ConfigError(what + " has ragged rows");
        }
        for (Eigen::Index c = 0; c < cols; ++c) {
            if (!row[static_cast<std::size_t>(c)].is_number()) {
                throw ConfigError(what + " entries must be numbers");
            }
            m(r, c) = row[static_cast<std::size_t>(c)].get<double>();
        }
    }
    return m;
}

Graph parse_graph(const json& j, const std::filesystem::path& base_dir) {
    if (j.is_string()) {
        const auto [kind, n] = parse_shorthand(j.get<std::string>());
        if (kind == "ring") {
            return Graph::ring(n);
        }
        if (kind == "complete") {
            return Graph::complete(n);
        }
        if (kind == "path") {
            return Graph::path(n);
        }
        throw ConfigError("unknown graph shorthand '" + kind + "'");
    }
    if (j.is_object() && j.contains("edges_file")) {
        std::filesystem::path p = j.at("edges_file").get<std::string>();
        if (p.is_relative()) {
            p = base_dir / p;
        }
        std::ifstream in(p);
        if (!in) {
            throw ConfigError("cannot open edge list " + p.string());
        }
        return read_edge_list(in);
    }
    if (j.is_object() && j.contains("n")) {
        std::vector<Edge> edges;
        for (const json& e : j.value("edges", json::array())) {
            if (!e.is_array() || e.size() != 2) {
                throw ConfigError("edges must be [u, v] pairs");
            }
            edges.push_back({e[0].get<int>() - 1, e[1].get<int>() - 1});
        }
        return Graph(j.at("n").get<int>(), std::move(edges));
    }
    throw ConfigError("graph must be a shorthand string, {\"n\", \"edges\"} or {\"edges_file\"}");
}

TopologyModel parse_topology(const json& j, const std::filesystem::path& base_dir) {
    if (j.is_string()) {
        const auto [kind, n] = parse_shorthand(j.get<std::string>());
        if (kind == "gossip-uniform") {
            return TopologyModel::gossip_uniform(Graph::complete(n));
        }
        return TopologyModel::fixed(laplacian(parse_graph(j, base_dir)));
    }
    if (!j.is_object()) {
        throw ConfigError("topology must be a shorthand string or an object");
    }
    const std::string kind = j.value("kind", "fixed");
    const Graph base = parse_graph(j.at("base"), base_dir);
    if (kind == "fixed") {
        return TopologyModel::fixed(laplacian(base));
    }
    if (kind == "bernoulli") {
        return TopologyModel::bernoulli(base, j.at("p").get<double>());
    }
    if (kind == "gossip") {
        if (!j.contains("weights") || j.at("weights") == "uniform") {
            return TopologyModel::gossip_uniform(base);
        }
        return TopologyModel::gossip(base, j.at("weights").get<std::vector<double>>());
    }
    throw ConfigError("unknown topology kind '" + kind + "'");
}

Matrix parse_noise_cov(const json& j, int total) {
    if (j.is_string()) {
        if (j.get<std::string>() == "identity") {
            return Matrix::Identity(total, total);
        }
        if (j.get<std::string>() == "zero") {
            return Matrix::Zero(total, total);
        }
        throw ConfigError("unknown noise covariance shorthand '" + j.get<std::string>() + "'");
    }
    if (j.is_number()) {
        return j.get<double>() * Matrix::Identity(total, total);
    }
    if (j.is_object() && j.contains("diag")) {
        const Vector d = parse_vector(j.at("diag"), "noise_cov.diag");
        if (d.size() != total) {
            throw ConfigError("noise_cov.diag needs " + std::to_string(total) + " entries");
        }
        return d.asDiagonal();
    }
    return parse_matrix(j, "noise_cov");
}

SensingModel parse_sensing(const json& j) {
    const int m = j.at("field_dim").get<int>();
    std::vector<Matrix> sensors;
    const json& s = j.at("sensors");
    if (s.is_object() && s.contains("cyclic_components")) {
        // Sensor n observes component n mod M.
        const int count = s.at("cyclic_components").get<int>();
        for (int n = 0; n < count; ++n) {
            Matrix h = Matrix::Zero(1, m);
            h(0, n % m) = 1.0;
            sensors.push_back(std::move(h));
        }
    } else if (s.is_array()) {
        for (std::size_t n = 0; n < s.size(); ++n) {
            sensors.push_back(parse_matrix(s[n], "sensors[" + std::to_string(n) + "]"));
        }
    } else {
        throw ConfigError("sensors must be a list of matrices or {\"cyclic_components\": N}");
    }
    int total = 0;
    for (const Matrix& h : sensors) {
        total += static_cast<int>(h.rows());
    }
    Matrix cov = parse_noise_cov(j.value("noise_cov", json("identity")), total);
    SensingModel::Options options;
    options.epsilon1 = j.value("epsilon1", 1.0);
    options.allow_fading_beyond_half = true; // range reported by validate_sensing
    return SensingModel(m, std::move(sensors), std::move(cov), j.value("gamma0", 0.0),
                        noise_dist_from_string(j.value("noise_dist", "gaussian")), options);
}

Matrix parse_gain(const json& j, const SensingModel& model) {
    const int m = model.field_dim();
    if (j.is_string()) {
        const auto name = j.get<std::string>();
        if (name == "optimal") {
            return optimal_gain(model);
        }
        if (name == "identity") {
            return Matrix::Identity(m, m);
        }
        throw ConfigError("unknown gain shorthand '" + name + "'");
    }
    if (j.is_number()) {
        return j.get<double>() * Matrix::Identity(m, m);
    }
    return parse_matrix(j, "gain");
}

// a given either directly or as a multiple of N / (2 lambda_min(KG)).
double parse_scale(const json& j, const std::string& key, const Matrix& K, const SensingModel& model) {
    if (j.contains(key)) {
        return j.at(key).get<double>();
    }
    const std::string factor_key = key + "_factor";
    if (!j.contains(factor_key)) {
        throw ConfigError("missing '" + key + "' or '" + factor_key + "'");
    }
    const Matrix KG = K * grammian(model);
    Eigen::SelfAdjointEigenSolver<Matrix> eig(0.5 * (KG + KG.transpose()), Eigen::EigenvaluesOnly);
    const double lmin = eig.eigenvalues().minCoeff();
    if (!(lmin > 0.0)) {
        throw ConfigError("'" + factor_key + "' needs lambda_min(KG) > 0");
    }
    return j.at(factor_key).get<double>() * static_cast<double>(model.num_sensors()) / (2.0 * lmin);
}

} // namespace

ExperimentConfig parse_config(const json& j, const std::filesystem::path& base_dir) {
    try {
        SensingModel sensing = parse_sensing(j.at("sensing"));
        TopologyModel topology = parse_topology(j.at("topology"), base_dir);
        if (topology.size() != sensing.num_sensors()) {
            throw ConfigError("topology has " + std::to_string(topology.size()) + " vertices but there are " +
                              std::to_string(sensing.num_sensors()) + " sensors");
        }

        const json& g = j.at("glu");
        GluParams glu;
        glu.K = parse_gain(g.value("K", json("identity")), sensing);
        glu.tau1 = g.at("tau1").get<double>();
        glu.tau2 = g.at("tau2").get<double>();
        glu.b = g.at("b").get<double>();
        glu.a = parse_scale(g, "a", glu.K, sensing);
        glu.epsilon1 = g.value("epsilon1", sensing.epsilon1());

        std::optional<CentralParams> central;
        if (j.contains("central") && !j.at("central").is_null()) {
            const json& c = j.at("central");
            if (c.is_string() && c.get<std::string>() == "mirror") {
                central = CentralParams{glu.tau1, glu.a, glu.K};
            } else {
                CentralParams cp;
                cp.K_c = parse_gain(c.value("K_c", json("identity")), sensing);
                cp.tau_c = c.at("tau_c").get<double>();
                cp.a_c = parse_scale(c, "a_c", cp.K_c, sensing);
                central = cp;
            }
        }

        Vector theta = parse_vector(j.at("theta_star"), "theta_star");
        if (theta.size() != sensing.field_dim()) {
            throw ConfigError("theta_star must have field_dim entries");
        }
        Vector x0 = j.contains("x0") ? parse_vector(j.at("x0"), "x0") : Vector::Zero(sensing.field_dim());
        if (x0.size() != sensing.field_dim()) {
            throw ConfigError("x0 must have field_dim entries");
        }

        ExperimentConfig cfg{std::move(sensing), std::move(topology), std::move(glu), std::move(central),
                             std::move(theta), std::move(x0)};
        cfg.iterations = j.value("iterations", 1L);
        cfg.trials = j.value("trials", 1);
        cfg.seed = j.value("seed", std::uint64_t{0});
        cfg.record_every = j.value("record_every", 1L);
        cfg.outputs = j.value("outputs", std::string("results"));
        cfg.allow_invalid = j.value("allow_invalid", false);
        cfg.divergence_guard = j.value("divergence_guard", 1e12);
        if (j.contains("rate_tau0")) {
            cfg.rate_tau0 = j.at("rate_tau0").get<double>();
        }
        if (cfg.iterations < 0 || cfg.trials < 1 || cfg.record_every < 1) {
            throw ConfigError("iterations >= 0, trials >= 1 and record_every >= 1 required");
        }
        cfg.source = j;
        return cfg;
    } catch (const json::exception& e) {
        throw ConfigError(std::string("config: ") + e.what());
    } catch (const ModelError& e) {
        throw ConfigError(std::string("config: ") + e.what());
    }
}

ExperimentConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw ConfigError("cannot open config " + path.string());
    }
    json j;
    try {
        j = json::parse(in, nullptr, true, true);
    } catch (const json::parse_error& e) {
        throw ConfigError("config " + path.string() + ": " + e.what());
    }
    return parse_config(j, path.parent_path());
}

std::string config_hash(const ExperimentConfig& config) {
    // The output location does not change the experiment.
    nlohmann::json canonical = config.source;
    if (canonical.is_object()) {
        canonical.erase("outputs");
    }
    const std::string text = canonical.dump();
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : text) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

double default_rate_tau0(const GluParams& p) { return 0.5 * (p.tau1 - p.tau2 - 1.0 / (2.0 + p.epsilon1)); }

double rate_tau0(const ExperimentConfig& config) {
    return config.rate_tau0.value_or(default_rate_tau0(config.glu));
}

Violations validate_config(const ExperimentConfig& config) {
    Violations out = validate_sensing(config.sensing);
    const Connectivity conn = check_mean_connectivity(config.topology);
    if (!conn.connected) {
        out.push_back({"mean-connectivity", "lambda2 of the mean Laplacian is " + std::to_string(conn.lambda2)});
    }
    for (Violation& v : validate_glu_params(config.glu, config.sensing)) {
        out.push_back(std::move(v));
    }
    if (config.central) {
        for (Violation& v : validate_central_params(*config.central, config.sensing)) {
            out.push_back(std::move(v));
        }
    }
    return out;
}

} // namespace glu
