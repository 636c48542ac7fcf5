#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <nlohmann/json.hpp>

#include "glu/analysis.hpp"
#include "glu/errors.hpp"
#include "glu/estimators.hpp"
#include "glu/graph.hpp"
#include "glu/harness.hpp"
#include "glu/sensing.hpp"

namespace py = pybind11;
using namespace glu;

namespace {

py::list violations_to_list(const Violations& v) {
    py::list out;
    for (const Violation& x : v) {
        out.append(py::make_tuple(x.condition, x.detail));
    }
    return out;
}

ExperimentConfig config_from_text(const std::string& text, const std::string& base_dir) {
    return parse_config(nlohmann::json::parse(text), base_dir);
}

} // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Distributed mixed time-scale estimation core";

    auto base = py::register_exception<Error>(m, "GluError", PyExc_RuntimeError);
    py::register_exception<ContractViolation>(m, "ContractViolation", base.ptr());
    py::register_exception<ModelError>(m, "ModelError", base.ptr());
    py::register_exception<NumericalError>(m, "NumericalError", base.ptr());
    py::register_exception<StabilityError>(m, "StabilityError", base.ptr());
    py::register_exception<ObservabilityError>(m, "ObservabilityError", base.ptr());
    py::register_exception<InsufficientDataError>(m, "InsufficientDataError", base.ptr());
    py::register_exception<ConfigError>(m, "ConfigError", base.ptr());

    py::class_<Rng>(m, "Rng")
        .def(py::init<std::uint64_t>())
        .def("next", [](Rng& r) { return r(); })
        .def("uniform", &Rng::uniform);

    py::class_<Graph>(m, "Graph")
        .def(py::init([](int n, const std::vector<std::pair<int, int>>& edges) {
                 std::vector<Edge> e;
                 for (auto [u, v] : edges) {
                     e.push_back({u, v});
                 }
                 return Graph(n, std::move(e));
             }),
             py::arg("n"), py::arg("edges"), "0-based edge pairs")
        .def_static("ring", &Graph::ring)
        .def_static("path", &Graph::path)
        .def_static("complete", &Graph::complete)
        .def_property_readonly("size", &Graph::size)
        .def_property_readonly("edges",
                               [](const Graph& g) {
                                   std::vector<std::pair<int, int>> out;
                                   for (const Edge& e : g.edges()) {
                                       out.emplace_back(e.u, e.v);
                                   }
                                   return out;
                               })
        .def("neighbors", &Graph::neighbors)
        .def("degree", &Graph::degree);

    py::class_<Laplacian>(m, "Laplacian")
        .def_static("from_matrix", &Laplacian::from_matrix, py::arg("matrix"), py::arg("tol") = 1e-9)
        .def_property_readonly("matrix", &Laplacian::matrix)
        .def_property_readonly("size", &Laplacian::size);

    m.def("laplacian", &laplacian);
    m.def("laplacian_spectrum", &laplacian_spectrum);
    m.def("fiedler_value", &fiedler_value, py::arg("laplacian"), py::arg("zero_tol") = 1e-9);

    py::class_<TopologyModel>(m, "TopologyModel")
        .def_static("fixed", &TopologyModel::fixed)
        .def_static("bernoulli", &TopologyModel::bernoulli)
        .def_static("gossip", &TopologyModel::gossip)
        .def_static("gossip_uniform", &TopologyModel::gossip_uniform)
        .def_property_readonly("mean_laplacian", &TopologyModel::mean_laplacian)
        .def_property_readonly("size", &TopologyModel::size)
        .def("sample", &TopologyModel::sample);

    py::class_<Connectivity>(m, "Connectivity")
        .def_readonly("connected", &Connectivity::connected)
        .def_readonly("lambda2", &Connectivity::lambda2);
    m.def("check_mean_connectivity", &check_mean_connectivity, py::arg("model"), py::arg("tol") = 1e-9);

    py::enum_<NoiseDist>(m, "NoiseDist")
        .value("gaussian", NoiseDist::gaussian)
        .value("uniform_scaled", NoiseDist::uniform_scaled)
        .value("laplace_scaled", NoiseDist::laplace_scaled);

    py::class_<SensingModel>(m, "SensingModel")
        .def(py::init([](int field_dim, std::vector<Matrix> sensors, Matrix noise_cov, double gamma0,
                         NoiseDist dist, double epsilon1, bool allow_fading_beyond_half) {
                 SensingModel::Options o;
                 o.epsilon1 = epsilon1;
                 o.allow_fading_beyond_half = allow_fading_beyond_half;
                 return SensingModel(field_dim, std::move(sensors), std::move(noise_cov), gamma0, dist, o);
             }),
             py::arg("field_dim"), py::arg("sensors"), py::arg("noise_cov"), py::arg("gamma0") = 0.0,
             py::arg("noise_dist") = NoiseDist::gaussian, py::arg("epsilon1") = 1.0,
             py::arg("allow_fading_beyond_half") = false)
        .def_property_readonly("field_dim", &SensingModel::field_dim)
        .def_property_readonly("num_sensors", &SensingModel::num_sensors)
        .def_property_readonly("sensors", &SensingModel::sensors)
        .def_property_readonly("noise_cov", &SensingModel::noise_cov)
        .def_property_readonly("gamma0", &SensingModel::gamma0);

    py::class_<Observability>(m, "Observability")
        .def_readonly("observable", &Observability::observable)
        .def_readonly("min_singular_value", &Observability::min_singular_value);
    m.def("fading_gain", &fading_gain);
    m.def("grammian", &grammian);
    m.def("check_global_observability", &check_global_observability, py::arg("model"),
          py::arg("rank_tol") = 1e-10);
    m.def("sample_observation", [](const SensingModel& model, const Vector& theta, long i, Rng& rng) {
        return sample_observation(model, theta, i, rng).per_sensor;
    });

    py::class_<GluParams>(m, "GluParams")
        .def(py::init([](double tau1, double a, double tau2, double b, Matrix K, double epsilon1) {
                 return GluParams{tau1, a, tau2, b, std::move(K), epsilon1};
             }),
             py::arg("tau1"), py::arg("a"), py::arg("tau2"), py::arg("b"), py::arg("K"), py::arg("epsilon1") = 1.0)
        .def_readwrite("tau1", &GluParams::tau1)
        .def_readwrite("a", &GluParams::a)
        .def_readwrite("tau2", &GluParams::tau2)
        .def_readwrite("b", &GluParams::b)
        .def_readwrite("K", &GluParams::K)
        .def_readwrite("epsilon1", &GluParams::epsilon1);
    py::class_<CentralParams>(m, "CentralParams")
        .def(py::init([](double tau_c, double a_c, Matrix K_c) { return CentralParams{tau_c, a_c, std::move(K_c)}; }),
             py::arg("tau_c"), py::arg("a_c"), py::arg("K_c"))
        .def_readwrite("tau_c", &CentralParams::tau_c)
        .def_readwrite("a_c", &CentralParams::a_c)
        .def_readwrite("K_c", &CentralParams::K_c);

    m.def("innovation_weight", py::overload_cast<const GluParams&, long>(&innovation_weight));
    m.def("consensus_weight", &consensus_weight);
    m.def("validate_glu_params",
          [](const GluParams& p, const SensingModel& s) { return violations_to_list(validate_glu_params(p, s)); });
    m.def("validate_central_params", [](const CentralParams& p, const SensingModel& s) {
        return violations_to_list(validate_central_params(p, s));
    });
    m.def("validate_sensing", [](const SensingModel& s) { return violations_to_list(validate_sensing(s)); });

    m.def(
        "glu_step",
        [](const Vector& x, long i, const Laplacian& l, const std::vector<Vector>& z, const GluParams& p,
           const SensingModel& model) {
            const NetworkState s{x, i, model.num_sensors(), model.field_dim()};
            return glu_step(s, l, {i, z}, p, model).x;
        },
        py::arg("x"), py::arg("i"), py::arg("laplacian"), py::arg("z"), py::arg("params"), py::arg("model"));
    m.def(
        "centralized_step",
        [](const Vector& u, long i, const std::vector<Vector>& z, const CentralParams& p, const SensingModel& model) {
            return centralized_step({u, i}, {i, z}, p, model).u;
        },
        py::arg("u"), py::arg("i"), py::arg("z"), py::arg("params"), py::arg("model"));

    py::class_<AsymptoticCovariance>(m, "AsymptoticCovariance")
        .def_readonly("S_c", &AsymptoticCovariance::S_c)
        .def_readonly("Sigma1", &AsymptoticCovariance::Sigma1)
        .def_readonly("S1", &AsymptoticCovariance::S1)
        .def_readonly("hurwitz_margin", &AsymptoticCovariance::hurwitz_margin);
    m.def("asymptotic_covariance", &asymptotic_covariance);
    m.def("solve_lyapunov", &solve_lyapunov);
    m.def("optimal_gain", &optimal_gain);
    m.def(
        "scalar_recursion",
        [](double y0, double a1, double d1, double a2, double d2, long steps, double spread, std::uint64_t seed) {
            Rng rng(seed);
            return scalar_recursion(y0, {a1, d1, spread}, {a2, d2, 0.0}, steps, spread > 0.0 ? &rng : nullptr);
        },
        py::arg("y0"), py::arg("a1"), py::arg("d1"), py::arg("a2"), py::arg("d2"), py::arg("steps"),
        py::arg("spread") = 0.0, py::arg("seed") = 0);

    py::class_<QuadraticFormBound>(m, "QuadraticFormBound")
        .def_readonly("certified", &QuadraticFormBound::certified)
        .def_readonly("threshold_ratio", &QuadraticFormBound::threshold_ratio)
        .def_readonly("c4", &QuadraticFormBound::c4)
        .def_readonly("ratios", &QuadraticFormBound::ratios)
        .def_readonly("lambda_min", &QuadraticFormBound::lambda_min);
    m.def("quadratic_form_bound", py::overload_cast<const Laplacian&, const SensingModel&, const Matrix&>(
                                      &quadratic_form_bound));

    py::class_<RateFit>(m, "RateFit")
        .def_readonly("exponent", &RateFit::exponent)
        .def_readonly("intercept", &RateFit::intercept)
        .def_readonly("r_squared", &RateFit::r_squared)
        .def_readonly("points", &RateFit::points)
        .def_readonly("dropped_zeros", &RateFit::dropped_zeros)
        .def_property_readonly("window", [](const RateFit& f) { return py::make_tuple(f.window.i_start, f.window.i_end); });
    m.def(
        "rate_fit",
        [](const std::vector<long>& i, const std::vector<double>& v, double burn_in) {
            if (i.size() != v.size()) {
                throw ContractViolation("iteration and value sequences differ in length");
            }
            std::vector<TrajectoryPoint> pts;
            for (std::size_t k = 0; k < i.size(); ++k) {
                pts.push_back({i[k], v[k]});
            }
            return rate_fit(pts, burn_in);
        },
        py::arg("iterations"), py::arg("values"), py::arg("burn_in") = 0.1);

    py::class_<NormalityReport>(m, "NormalityReport")
        .def_readonly("cov_rel_error", &NormalityReport::cov_rel_error)
        .def_readonly("empirical_cov", &NormalityReport::empirical_cov)
        .def_readonly("mean", &NormalityReport::mean)
        .def_readonly("skewness", &NormalityReport::skewness)
        .def_readonly("excess_kurtosis", &NormalityReport::excess_kurtosis)
        .def_readonly("samples", &NormalityReport::samples);
    m.def("normality_check", [](const Matrix& samples, const Matrix& S_ref) {
        std::vector<Vector> rows;
        for (Eigen::Index r = 0; r < samples.rows(); ++r) {
            rows.emplace_back(samples.row(r).transpose());
        }
        return normality_check(rows, S_ref);
    });

    m.def(
        "validate_config_json",
        [](const std::string& text, const std::string& base_dir) {
            return violations_to_list(validate_config(config_from_text(text, base_dir)));
        },
        py::arg("text"), py::arg("base_dir") = "");
    m.def(
        "run_experiment_json",
        [](const std::string& text, const std::string& base_dir, bool write_files, unsigned threads) {
            const ExperimentConfig cfg = config_from_text(text, base_dir);
            RunOptions opts;
            opts.write_files = write_files;
            opts.threads = threads;
            ExperimentResult res;
            {
                py::gil_scoped_release release;
                res = run_experiment(cfg, opts);
            }
            return summary_to_json(res.summary).dump();
        },
        py::arg("text"), py::arg("base_dir") = "", py::arg("write_files") = false, py::arg("threads") = 0);
}
