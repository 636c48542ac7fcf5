#include "glu/graph.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <numeric>
#include <ostream>
#include <set>
#include <sstream>
#include <string>

#include "glu/errors.hpp"

namespace glu {

Graph::Graph(int n_vertices, std::vector<Edge> edges) : n_(n_vertices) {
    if (n_vertices <= 0) {
        throw ModelError("graph must have at least one vertex");
    }
    std::set<std::pair<int, int>> seen;
    edges_.reserve(edges.size());
    for (Edge e : edges) {
        if (e.u < 0 || e.v < 0 || e.u >= n_ || e.v >= n_) {
            throw ModelError("edge endpoint out of range");
        }
        if (e.u == e.v) {
            throw ModelError("self-loop on vertex " + std::to_string(e.u + 1));
        }
        if (e.u > e.v) {
            std::swap(e.u, e.v);
        }
        if (!seen.emplace(e.u, e.v).second) {
            throw ModelError("duplicate edge " + std::to_string(e.u + 1) + "-" + std::to_string(e.v + 1));
        }
        edges_.push_back(e);
    }
}

Graph Graph::ring(int n) {
    if (n < 3) {
        return path(n);
    }
    std::vector<Edge> edges;
    for (int k = 0; k < n; ++k) {
        edges.push_back({k, (k + 1) % n});
    }
    return Graph(n, std::move(edges));
}

Graph Graph::path(int n) {
    std::vector<Edge> edges;
    for (int k = 0; k + 1 < n; ++k) {
        edges.push_back({k, k + 1});
    }
    return Graph(n, std::move(edges));
}

Graph Graph::complete(int n) {
    std::vector<Edge> edges;
    for (int u = 0; u < n; ++u) {
        for (int v = u + 1; v < n; ++v) {
            edges.push_back({u, v});
        }
    }
    return Graph(n, std::move(edges));
}

Graph Graph::erdos_renyi(int n, double p, Rng& rng) {
    if (!(p >= 0.0 && p <= 1.0)) {
        throw ModelError("edge probability must lie in [0, 1]");
    }
    std::vector<Edge> edges;
    for (int u = 0; u < n; ++u) {
        for (int v = u + 1; v < n; ++v) {
            if (rng.uniform() < p) {
                edges.push_back({u, v});
            }
        }
    }
    return Graph(n, std::move(edges));
}

std::vector<int> Graph::neighbors(int vertex) const {
    std::vector<int> out;
    for (const Edge& e : edges_) {
        if (e.u == vertex) {
            out.push_back(e.v);
        } else if (e.v == vertex) {
            out.push_back(e.u);
        }
    }
    return out;
}

int Graph::degree(int vertex) const {
    return static_cast<int>(std::count_if(edges_.begin(), edges_.end(),
                                          [vertex](const Edge& e) { return e.u == vertex || e.v == vertex; }));
}

Graph read_edge_list(std::istream& in) {
    std::string line;
    int n = -1;
    std::vector<Edge> edges;
    while (std::getline(in, line)) {
        auto hash = line.find('#');
        if (hash != std::string::npos) {
            line.erase(hash);
        }
        std::istringstream ls(line);
        if (n < 0) {
            if (!(ls >> n)) {
                continue;
            }
            continue;
        }
        int u = 0;
        int v = 0;
        if (!(ls >> u)) {
            continue;
        }
        if (!(ls >> v)) {
            throw ModelError("malformed edge line: '" + line + "'");
        }
        edges.push_back({u - 1, v - 1});
    }
    if (n < 0) {
        throw ModelError("edge list is missing the vertex count");
    }
    return Graph(n, std::move(edges));
}

void write_edge_list(std::ostream& out, const Graph& g) {
    out << g.size() << '\n';
    for (const Edge& e : g.edges()) {
        out << e.u + 1 << ' ' << e.v + 1 << '\n';
    }
}

Laplacian Laplacian::from_matrix(Matrix m, double tol) {
    if (m.rows() != m.cols() || m.rows() == 0) {
        throw ModelError("Laplacian must be a non-empty square matrix");
    }
    const double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
    if ((m - m.transpose()).cwiseAbs().maxCoeff() > tol * scale) {
        throw ModelError("Laplacian must be symmetric");
    }
    if (m.rowwise().sum().cwiseAbs().maxCoeff() > tol * scale * static_cast<double>(m.rows())) {
        throw ModelError("Laplacian rows must sum to zero");
    }
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
        for (Eigen::Index c = 0; c < m.cols(); ++c) {
            if (r != c && m(r, c) > tol * scale) {
                throw ModelError("Laplacian off-diagonal entries must be non-positive");
            }
        }
    }
    // Symmetric, zero row sums and non-positive off-diagonals already imply
    // diagonal dominance, hence PSD; the eigen check guards round-off.
    Eigen::SelfAdjointEigenSolver<Matrix> eig(m, Eigen::EigenvaluesOnly);
    if (eig.info() != Eigen::Success || eig.eigenvalues().minCoeff() < -tol * scale) {
        throw ModelError("Laplacian must be positive semidefinite");
    }
    return Laplacian(std::move(m));
}

Laplacian laplacian(const Graph& g) {
    Matrix m = Matrix::Zero(g.size(), g.size());
    for (const Edge& e : g.edges()) {
        m(e.u, e.u) += 1.0;
        m(e.v, e.v) += 1.0;
        m(e.u, e.v) -= 1.0;
        m(e.v, e.u) -= 1.0;
    }
    return Laplacian(std::move(m));
}

Laplacian single_edge_laplacian(int n_vertices, Edge e) {
    Matrix m = Matrix::Zero(n_vertices, n_vertices);
    m(e.u, e.u) = 1.0;
    m(e.v, e.v) = 1.0;
    m(e.u, e.v) = -1.0;
    m(e.v, e.u) = -1.0;
    return Laplacian(std::move(m));
}

Vector laplacian_spectrum(const Laplacian& l) {
    Eigen::SelfAdjointEigenSolver<Matrix> eig(l.matrix(), Eigen::EigenvaluesOnly);
    if (eig.info() != Eigen::Success) {
        throw NumericalError("symmetric eigensolver failed on Laplacian");
    }
    return eig.eigenvalues();
}

double fiedler_value(const Laplacian& l, double zero_tol) {
    if (l.size() < 2) {
        return 0.0;
    }
    const double lambda2 = laplacian_spectrum(l)(1);
    if (lambda2 < -zero_tol * std::max(1.0, static_cast<double>(l.size()))) {
        throw NumericalError("Fiedler value is negative beyond tolerance");
    }
    return std::max(0.0, lambda2);
}

TopologyModel TopologyModel::fixed(Laplacian l) {
    Laplacian mean = l;
    return TopologyModel(FixedTopology{std::move(l)}, std::move(mean));
}

TopologyModel TopologyModel::bernoulli(Graph base, double p) {
    if (!(p > 0.0 && p <= 1.0)) {
        throw ModelError("link success probability must lie in (0, 1]");
    }
    Laplacian mean = laplacian(base);
    mean.m_ *= p;
    return TopologyModel(BernoulliLinkFailure{std::move(base), p}, std::move(mean));
}

TopologyModel TopologyModel::gossip(Graph base, std::vector<double> weights) {
    if (base.edges().empty()) {
        throw ModelError("gossip model needs at least one base edge");
    }
    if (weights.size() != base.edges().size()) {
        throw ModelError("gossip model needs one selection weight per base edge");
    }
    double total = 0.0;
    for (double w : weights) {
        if (!(w >= 0.0) || !std::isfinite(w)) {
            throw ModelError("gossip selection weights must be non-negative");
        }
        total += w;
    }
    if (std::abs(total - 1.0) > 1e-9) {
        throw ModelError("gossip selection weights must sum to 1");
    }
    const int n = base.size();
    Matrix mean = Matrix::Zero(n, n);
    std::vector<double> cumulative(weights.size());
    double running = 0.0;
    for (std::size_t k = 0; k < weights.size(); ++k) {
        const Edge& e = base.edges()[k];
        mean(e.u, e.u) += weights[k];
        mean(e.v, e.v) += weights[k];
        mean(e.u, e.v) -= weights[k];
        mean(e.v, e.u) -= weights[k];
        running += weights[k];
        cumulative[k] = running;
    }
    // Trailing entries from the last positive weight on absorb round-off.
    std::size_t last = weights.size() - 1;
    while (last > 0 && weights[last] == 0.0) {
        --last;
    }
    std::fill(cumulative.begin() + static_cast<std::ptrdiff_t>(last), cumulative.end(), 1.0);
    TopologyModel model(PairwiseGossip{std::move(base), std::move(weights)}, Laplacian(std::move(mean)));
    model.cumulative_ = std::move(cumulative);
    return model;
}

TopologyModel TopologyModel::gossip_uniform(Graph base) {
    const auto m = base.edges().size();
    std::vector<double> w(m, m == 0 ? 0.0 : 1.0 / static_cast<double>(m));
    return gossip(std::move(base), std::move(w));
}

Laplacian TopologyModel::sample(Rng& rng) const {
    if (const auto* f = std::get_if<FixedTopology>(&variant_)) {
        return f->laplacian;
    }
    if (const auto* b = std::get_if<BernoulliLinkFailure>(&variant_)) {
        const int n = b->base.size();
        Matrix m = Matrix::Zero(n, n);
        for (const Edge& e : b->base.edges()) {
            // p == 1 must keep every edge without consuming randomness differently.
            if (b->success_probability >= 1.0 || rng.uniform() < b->success_probability) {
                m(e.u, e.u) += 1.0;
                m(e.v, e.v) += 1.0;
                m(e.u, e.v) -= 1.0;
                m(e.v, e.u) -= 1.0;
            }
        }
        return Laplacian(std::move(m));
    }
    const auto& g = std::get<PairwiseGossip>(variant_);
    const double u = rng.uniform();
    auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(), u);
    std::size_t k = static_cast<std::size_t>(std::distance(cumulative_.begin(), it));
    k = std::min(k, cumulative_.size() - 1);
    return single_edge_laplacian(g.base.size(), g.base.edges()[k]);
}

Laplacian sample_topology(const TopologyModel& model, Rng& rng) { return model.sample(rng); }

Laplacian mean_laplacian(const TopologyModel& model) { return model.mean_laplacian(); }

Connectivity check_mean_connectivity(const TopologyModel& model, double connectivity_tol) {
    const double lambda2 = fiedler_value(model.mean_laplacian(), connectivity_tol);
    return {lambda2 > connectivity_tol, lambda2};
}

} // namespace glu
