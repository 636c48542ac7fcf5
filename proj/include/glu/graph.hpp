#pragma once

#include <iosfwd>
#include <span>
#include <variant>
#include <vector>

#include <Eigen/Dense>

#include "glu/rng.hpp"

namespace glu {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Undirected edge between 0-based vertices, stored with u < v.
struct Edge {
    int u = 0;
    int v = 0;
    friend bool operator==(const Edge&, const Edge&) = default;
};

/// Simple undirected graph on vertices 0..N-1. No self-loops, no duplicate
/// edges; violations are rejected at construction.
class Graph {
public:
    Graph(int n_vertices, std::vector<Edge> edges);

    static Graph ring(int n);
    static Graph path(int n);
    static Graph complete(int n);
    /// G(n, p) conditioned on nothing; callers loop until connected if needed.
    static Graph erdos_renyi(int n, double p, Rng& rng);

    int size() const noexcept { return n_; }
    const std::vector<Edge>& edges() const noexcept { return edges_; }
    std::vector<int> neighbors(int vertex) const;
    int degree(int vertex) const;

private:
    int n_;
    std::vector<Edge> edges_;
};

/// Text edge list: first line "N", then one 1-based "u v" pair per line.
Graph read_edge_list(std::istream& in);
void write_edge_list(std::ostream& out, const Graph& g);

/// Symmetric, zero row sums, non-positive off-diagonals, PSD.
class Laplacian {
public:
    /// Validates the Laplacian invariants to within `tol`; throws ModelError.
    static Laplacian from_matrix(Matrix m, double tol = 1e-9);

    int size() const noexcept { return static_cast<int>(m_.rows()); }
    const Matrix& matrix() const noexcept { return m_; }
    double operator()(int r, int c) const { return m_(r, c); }

private:
    explicit Laplacian(Matrix m) : m_(std::move(m)) {}
    friend Laplacian laplacian(const Graph&);
    friend Laplacian single_edge_laplacian(int, Edge);
    friend class TopologyModel;

    Matrix m_;
};

Laplacian laplacian(const Graph& g);
Laplacian single_edge_laplacian(int n_vertices, Edge e);

/// Ascending eigenvalues of a Laplacian (dense symmetric solver).
Vector laplacian_spectrum(const Laplacian& l);

/// Second-smallest eigenvalue, clamped at 0. Throws NumericalError if the
/// eigensolver fails.
double fiedler_value(const Laplacian& l, double zero_tol = 1e-9);

struct FixedTopology {
    Laplacian laplacian;
};

struct BernoulliLinkFailure {
    Graph base;
    double success_probability;
};

struct PairwiseGossip {
    Graph base;
    std::vector<double> weights; // per base edge, sums to 1
};

/// Distribution over sampled Laplacians L(i) with closed-form mean.
class TopologyModel {
public:
    using Variant = std::variant<FixedTopology, BernoulliLinkFailure, PairwiseGossip>;

    static TopologyModel fixed(Laplacian l);
    static TopologyModel bernoulli(Graph base, double p);
    static TopologyModel gossip(Graph base, std::vector<double> weights);
    static TopologyModel gossip_uniform(Graph base);

    int size() const noexcept { return mean_.size(); }
    const Variant& variant() const noexcept { return variant_; }
    const Laplacian& mean_laplacian() const noexcept { return mean_; }

    Laplacian sample(Rng& rng) const;

private:
    TopologyModel(Variant v, Laplacian mean) : variant_(std::move(v)), mean_(std::move(mean)) {}

    Variant variant_;
    Laplacian mean_;
    std::vector<double> cumulative_; // gossip only
};

Laplacian sample_topology(const TopologyModel& model, Rng& rng);
Laplacian mean_laplacian(const TopologyModel& model);

struct Connectivity {
    bool connected = false;
    double lambda2 = 0.0;
};

Connectivity check_mean_connectivity(const TopologyModel& model, double connectivity_tol = 1e-9);

} // namespace glu
