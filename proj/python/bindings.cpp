#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <cstdint>
#include <string>
#include <vector>

#include "pseudoknockoff/construct.hpp"
#include "pseudoknockoff/datagen.hpp"
#include "pseudoknockoff/matrix_io.hpp"
#include "pseudoknockoff/select.hpp"
#include "pseudoknockoff/simharness.hpp"
#include "pseudoknockoff/stats.hpp"
#include "pseudoknockoff/theory.hpp"

namespace py = pybind11;
using namespace pkf;

namespace {

CovarianceModel model_from(const std::string& kind, int p, double rho,
                           double gamma, int group_size) {
  switch (cov_kind_from_name(kind)) {
    case CovKind::identity:
      return CovarianceModel::identity(p);
    case CovKind::ar:
      return CovarianceModel::ar(p, rho);
    case CovKind::group:
      if (group_size < 1 || p % group_size != 0)
        throw std::invalid_argument(
            "group covariance needs p divisible by group_size");
      return CovarianceModel::grouped(p / group_size, group_size, rho, gamma);
    case CovKind::precision_a:
      return CovarianceModel::precision_a(p, rho);
    case CovKind::precision_b:
      return CovarianceModel::precision_b(p, rho);
    case CovKind::precision_c:
      return CovarianceModel::precision_c(p, rho);
  }
  throw std::invalid_argument("unknown covariance kind '" + kind + "'");
}

PseudoKnockoff construct_from_label(const Eigen::MatrixXd& x,
                                    const std::string& method,
                                    std::uint64_t seed) {
  // Base construction labels; every one is valid with the w1 suffix.
  const MethodSpec spec = parse_method_label(method + "_w1");
  DesignEnsemble design;
  design.x = x;
  design.sigma_hat = SymMatrix::gram(x);
  design.seed = seed;
  ConstructOptions opts;
  opts.m = spec.m;
  opts.group_size = spec.group_size;
  opts.seed = seed;
  return construct_method(spec.method, design, opts);
}

py::dict stats_dict(const FeatureStatistics& st) {
  py::dict d;
  d["w"] = st.w;
  d["kind"] = std::string(stat_kind_name(st.kind));
  d["lambda"] = st.lambda;
  d["sum_coef"] = st.sum_coef;
  d["diff_coef"] = st.diff_coef;
  return d;
}

py::dict estimate_dict(const McEstimate& e) {
  py::dict d;
  d["estimate"] = e.estimate;
  d["se"] = e.se;
  d["trials"] = e.trials;
  return d;
}

NullSignModel model_from_sizes(const std::vector<int>& sizes,
                               const std::string& coupling) {
  if (coupling == "independent")
    return NullSignModel(sizes, SignCoupling::independent);
  if (coupling == "copies") return NullSignModel(sizes, SignCoupling::copies);
  throw std::invalid_argument("coupling must be 'independent' or 'copies'");
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "pseudo-knockoff filter: constructions, half-Lasso statistics, "
            "knockoff+ selection, and certified tail bounds";
  m.attr("__version__") = "0.1.0";

  // ---- data generation -----------------------------------------------
  m.def(
      "sample_design",
      [](const std::string& kind, int n, int p, std::uint64_t seed, double rho,
         double gamma, int group_size) {
        return sample_design(model_from(kind, p, rho, gamma, group_size), n,
                             seed)
            .x;
      },
      py::arg("kind"), py::arg("n"), py::arg("p"), py::arg("seed"),
      py::arg("rho") = 0.0, py::arg("gamma") = 0.0, py::arg("group_size") = 5,
      "Rows i.i.d. from the named covariance family, columns scaled to unit "
      "norm.  Kinds: identity, ar, group, precision_a, precision_b, "
      "precision_c.");

  m.def(
      "build_sigma",
      [](const std::string& kind, int p, double rho, double gamma,
         int group_size) {
        return build_sigma(model_from(kind, p, rho, gamma, group_size))
            .to_dense();
      },
      py::arg("kind"), py::arg("p"), py::arg("rho") = 0.0,
      py::arg("gamma") = 0.0, py::arg("group_size") = 5,
      "Population covariance of the named family.");

  m.def(
      "sample_signal",
      [](int p, int k, double amplitude, std::uint64_t seed) {
        const Signal s = sample_signal(p, k, amplitude, seed);
        return py::make_tuple(s.beta, s.support);
      },
      py::arg("p"), py::arg("k"), py::arg("amplitude"), py::arg("seed"),
      "(beta, support): k random coordinates carrying +-amplitude.");

  m.def("sample_response", &sample_response, py::arg("x"), py::arg("beta"),
        py::arg("seed"), py::arg("noiseless") = false,
        "y = x beta + N(0, I).");

  // ---- constructions ---------------------------------------------------
  py::class_<PseudoKnockoff>(m, "Construction",
                             "A realized companion design xt with its "
                             "coefficient-difference variance proxy b.")
      .def_property_readonly(
          "xt", [](const PseudoKnockoff& pk) { return pk.xt; })
      .def_property_readonly(
          "b", [](const PseudoKnockoff& pk) { return pk.b.to_dense(); })
      .def_property_readonly(
          "s", [](const PseudoKnockoff& pk) { return pk.s; })
      .def_property_readonly(
          "gamma", [](const PseudoKnockoff& pk) { return pk.gamma; })
      .def_property_readonly(
          "method",
          [](const PseudoKnockoff& pk) {
            return std::string(method_name(pk.method));
          })
      .def_property_readonly(
          "partition", [](const PseudoKnockoff& pk) { return pk.partition; })
      .def("__repr__", [](const PseudoKnockoff& pk) {
        return "<Construction method='" + std::string(method_name(pk.method)) +
               "' p=" + std::to_string(pk.xt.cols()) + ">";
      });

  m.def("construct", &construct_from_label, py::arg("x"),
        py::arg("method") = "opk", py::arg("seed") = 0,
        "Build a companion design.  Methods: opk, bdpk<width>, gpk_m<classes>, "
        "ko_equi, ko_sdp.");

  m.def(
      "validate_construction",
      [](const Eigen::MatrixXd& x, const PseudoKnockoff& pk, double tol_rel) {
        const ValidationReport r =
            validate_construction(x, pk, SymMatrix::gram(x), tol_rel);
        py::dict d;
        d["gram_match"] = r.gram_match;
        d["cross_orth"] = r.cross_orth;
        d["var_identity"] = r.var_identity;
        d["method_identity"] = r.method_identity;
        d["tol"] = r.tol;
        d["pass"] = r.pass;
        d["detail"] = r.detail;
        return d;
      },
      py::arg("x"), py::arg("construction"), py::arg("tol_rel") = 1e-8,
      "Residuals of the defining Gram identities.");

  // ---- statistics and selection ---------------------------------------
  m.def(
      "half_lasso_statistics",
      [](const Eigen::MatrixXd& x, const Eigen::MatrixXd& xt,
         const Eigen::VectorXd& y, const std::string& kind, double lam) {
        const SplitCoefficients split = least_squares_split(x, xt, y);
        if (lam <= 0.0) lam = default_lambda(split);
        const HalfLassoFit fit = half_lasso(x, xt, y, lam);
        const StatKind sk = stat_kind_from_name(kind);
        py::dict d = stats_dict(make_statistic(fit.sum_coef, fit.diff_coef,
                                               sk, lam));
        d["sweeps"] = fit.sweeps;
        d["kkt_residual"] = fit.kkt_residual;
        return d;
      },
      py::arg("x"), py::arg("xt"), py::arg("y"), py::arg("kind") = "w2",
      py::arg("lam") = 0.0,
      "Penalized-sum / exact-difference statistics; lam <= 0 picks the "
      "data-driven default penalty.");

  m.def(
      "least_squares_statistics",
      [](const Eigen::MatrixXd& x, const Eigen::MatrixXd& xt,
         const Eigen::VectorXd& y) {
        return stats_dict(least_squares_statistic(least_squares_split(x, xt, y)));
      },
      py::arg("x"), py::arg("xt"), py::arg("y"),
      "W from the raw least-squares split coefficients.");

  m.def(
      "signmax_statistics",
      [](const Eigen::MatrixXd& x, const Eigen::MatrixXd& xt,
         const Eigen::VectorXd& y, const Eigen::VectorXd& s, double lam) {
        if (lam <= 0.0) lam = default_lambda(least_squares_split(x, xt, y));
        return stats_dict(lasso_signmax_baseline(x, xt, y, lam, s));
      },
      py::arg("x"), py::arg("xt"), py::arg("y"), py::arg("s"),
      py::arg("lam") = 0.0,
      "Classical knockoff joint-Lasso sign-max statistic (needs the "
      "construction's s).");

  m.def("knockoff_plus_threshold", &knockoff_plus_threshold, py::arg("w"),
        py::arg("q"),
        "Smallest T with (1 + #{w <= -T}) / max(#{w >= T}, 1) <= q; "
        "+inf if none.");

  m.def(
      "evaluate_selection",
      [](const Eigen::VectorXd& w, const Eigen::VectorXd& beta, double q) {
        const SelectionOutcome o = evaluate(w, beta, q);
        py::dict d;
        d["threshold"] = o.t;
        d["selected"] = o.selected;
        d["fdp"] = o.fdp;
        d["power"] = o.power;
        d["ratio_stat"] = o.ratio_stat;
        return d;
      },
      py::arg("w"), py::arg("beta"), py::arg("q"),
      "Threshold w at level q and score against the true signal "
      "(0-based selected indices).");

  m.def(
      "filter_select",
      [](const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
         const std::string& method, std::string stat, double q,
         std::uint64_t seed) {
        if (stat.empty()) stat = method == "opk" ? "w2" : "w1";
        const MethodSpec spec = parse_method_label(method + "_" + stat);
        const PseudoKnockoff pk = construct_from_label(x, method, seed);
        const SplitCoefficients split = least_squares_split(x, pk.xt, y);
        FeatureStatistics st;
        double lam = 0.0;
        switch (spec.family) {
          case StatFamily::half_lasso: {
            lam = default_lambda(split);
            const HalfLassoFit fit = half_lasso(x, pk.xt, y, lam);
            st = make_statistic(fit.sum_coef, fit.diff_coef, spec.kind, lam);
            break;
          }
          case StatFamily::least_squares:
            st = least_squares_statistic(split);
            break;
          case StatFamily::lasso_signmax:
            lam = default_lambda(split);
            st = lasso_signmax_baseline(x, pk.xt, y, lam, pk.s);
            break;
        }
        const double t = knockoff_plus_threshold(st.w, q);
        std::vector<int> selected;
        for (int j = 0; j < st.w.size(); ++j)
          if (st.w(j) >= t) selected.push_back(j);
        py::dict d;
        d["selected"] = selected;
        d["threshold"] = t;
        d["lambda"] = lam;
        d["w"] = st.w;
        d["method"] = spec.base_label();
        d["statistic"] = spec.stat_name();
        return d;
      },
      py::arg("x"), py::arg("y"), py::arg("method") = "opk",
      py::arg("stat") = std::string(), py::arg("q") = 0.2, py::arg("seed") = 0,
      "Whole pipeline on user data: construct, fit, threshold.  Statistic "
      "defaults to w2 for opk and w1 otherwise.");

  // ---- certified bounds and Monte Carlo verifiers ----------------------
  m.def(
      "bound_at_t",
      [](double t) {
        const ThresholdBound b = bound_at_t(t);
        py::dict d;
        d["t"] = b.t;
        d["bound"] = b.bound;
        d["base"] = b.base;
        d["slice_sum"] = b.slice_sum;
        d["tail"] = b.tail;
        d["n_slices"] = b.n_slices;
        return d;
      },
      py::arg("t"),
      "Certified tail bound on P(sup_i V_i^+ / (V_i^- + m) > t), any m.");

  m.def(
      "sup_bound_constant",
      []() {
        const BoundCertificate c = sup_bound_pipeline();
        py::dict d;
        d["constant"] = c.constant;
        d["constant_upper"] = c.constant_upper;
        d["grid_integral"] = c.grid_integral;
        d["large_t_integral"] = c.large_t_integral;
        d["tail_ratio_grid"] = c.tail_ratio_grid;
        d["tail_ratio_large"] = c.tail_ratio_large;
        d["n_points"] = c.points.size();
        return d;
      },
      "Full certificate of the uniform expectation bound (<= 3.9).");

  m.def(
      "mc_fixed_t_expectation",
      [](const std::vector<int>& sizes, const std::string& coupling,
         std::int64_t trials, std::uint64_t seed) {
        return estimate_dict(
            mc_fixed_t_expectation(model_from_sizes(sizes, coupling), trials,
                                   seed));
      },
      py::arg("sizes"), py::arg("coupling") = "independent",
      py::arg("trials") = 100000, py::arg("seed") = 1,
      "E[V+ / (V- + m)] over symmetric signs in the given group sizes.");

  m.def(
      "mc_sup_ratio",
      [](const std::vector<int>& sizes, const std::string& coupling,
         std::int64_t trials, std::uint64_t seed) {
        return estimate_dict(
            mc_sup_ratio(model_from_sizes(sizes, coupling), trials, seed));
      },
      py::arg("sizes"), py::arg("coupling") = "independent",
      py::arg("trials") = 10000, py::arg("seed") = 1,
      "E[sup_i V_i^+ / (V_i^- + m)] over all magnitude-order prefixes.");

  m.def("orthant_prob", &orthant_prob, py::arg("mu"),
        "P(Z1 > 0, Z2 > 0) at correlation mu: 1/4 + arcsin(mu)/(2 pi).");

  m.def("mgf_product_bound", &mgf_product_bound, py::arg("t"),
        py::arg("theta"), py::arg("i"), py::arg("j"), py::arg("m"),
        "Independence-decoupled bound on the two-count moment generating "
        "function.");

  // ---- matrix file I/O --------------------------------------------------
  m.def("read_matrix", &read_matrix, py::arg("path"),
        "Dense matrix from CSV or npy (dtype '<f8', C order).");
  m.def("write_matrix_csv", &write_matrix_csv, py::arg("m"), py::arg("path"));
  m.def("write_matrix_npy", &write_matrix_npy, py::arg("m"), py::arg("path"));
}
