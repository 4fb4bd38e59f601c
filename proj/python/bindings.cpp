#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "bellcert/core.hpp"
#include "bellcert/games.hpp"
#include "bellcert/general.hpp"
#include "bellcert/io.hpp"
#include "bellcert/polytope.hpp"
#include "bellcert/tails.hpp"
#include "bellcert/winlose.hpp"

namespace py = pybind11;
using namespace bellcert;

namespace {

py::dict report_dict(const PValueReport& r) {
  py::dict d;
  d["method"] = to_string(r.method);
  d["n"] = r.n;
  d["statistic"] = r.statistic;
  d["p_value"] = r.p_value;
  d["raw_p_value"] = r.raw_p_value;
  d["log_p_value"] = r.log_p_value;
  d["certifying"] = r.certifying;
  d["precondition_failed"] = r.precondition_failed;
  d["note"] = r.note;
  return d;
}

}  // namespace

PYBIND11_MODULE(_bellcert, m) {
  m.doc() = "Rigorous P-value bounds for Bell tests";

  py::register_exception<InputError>(m, "InputError", PyExc_ValueError);
  py::register_exception<PreconditionError>(m, "PreconditionError", PyExc_ValueError);
  py::register_exception<CapExceededError>(m, "CapExceededError", PyExc_RuntimeError);

  py::class_<GameSpec>(m, "Game")
      .def_static("from_json", &parse_game, py::arg("text"))
      .def_static("load", &load_game, py::arg("path"))
      .def("to_json", &game_to_json)
      .def_readonly("name", &GameSpec::name)
      .def_property_readonly("win_lose", [](const GameSpec& g) { return g.kind == GameKind::win_lose; })
      .def_property_readonly("tags", [](const GameSpec& g) { return g.tags; })
      .def_property_readonly("inputs", [](const GameSpec& g) { return g.dims.inputs; })
      .def_property_readonly("outputs", [](const GameSpec& g) { return g.dims.outputs; });

  m.def("chsh", &games::chsh);
  m.def("mermin", &games::mermin);
  m.def("cglmp", &games::cglmp, py::arg("d"));

  m.def("binom_tail", [](std::int64_t n, std::int64_t k, double gamma) { return binom_tail(n, k, gamma).value; },
        py::arg("n"), py::arg("k"), py::arg("gamma"), "Pr[Binomial(n, gamma) >= k].");
  m.def("log_binom_tail",
        [](std::int64_t n, std::int64_t k, double gamma) { return binom_tail(n, k, gamma).log_value; },
        py::arg("n"), py::arg("k"), py::arg("gamma"));
  m.def("interp_binom_tail",
        [](std::int64_t n, double y, double gamma) { return interp_binom_tail(n, y, gamma).value; }, py::arg("n"),
        py::arg("y"), py::arg("gamma"));
  m.def("chi2_tail_even", &chi2_tail_even, py::arg("n_pairs"), py::arg("x"));
  m.def(
      "fisher_combine",
      [](const std::vector<double>& ps) {
        const FisherResult f = fisher_combine(ps);
        return py::make_tuple(f.p_value, f.statistic, f.dof);
      },
      py::arg("p_values"), "Returns (p_value, statistic, dof).");

  m.def(
      "chsh_beta_win", [](double tau_a, double tau_b) { return chsh_beta_win(make_bias(tau_a, tau_b)).beta_win; },
      py::arg("tau_a") = 0.0, py::arg("tau_b") = 0.0);
  m.def(
      "beta_win",
      [](const GameSpec& g, double tau_a, double tau_b) {
        return beta_win_optimize(g, make_bias(tau_a, tau_b)).bound.beta_win;
      },
      py::arg("game"), py::arg("tau_a") = 0.0, py::arg("tau_b") = 0.0);
  m.def(
      "classical_bound",
      [](const GameSpec& g) {
        const ClassicalBound cb = classical_bound(g);
        return py::make_tuple(cb.beta_max, cb.beta_min);
      },
      py::arg("game"), "Returns (beta_max, beta_min).");

  m.def(
      "winlose_pvalue",
      [](std::int64_t n, std::int64_t c, double beta) {
        return report_dict(winlose_pvalue(n, c, WinLoseBound{beta, BetaProvenance::user_supplied, {}}));
      },
      py::arg("n"), py::arg("c"), py::arg("beta_win"));

  auto params = [](double s_min, double s_max, double beta_max, double beta_min) {
    GeneralGameParams p;
    p.s_min = s_min;
    p.s_max = s_max;
    p.beta_max = beta_max;
    p.beta_min = beta_min;
    validate_params(p);
    return p;
  };
  m.def(
      "bentkus_pvalue",
      [params](const std::vector<double>& scores, double s_min, double s_max, double beta_max, double beta_min) {
        return report_dict(bentkus_pvalue(params(s_min, s_max, beta_max, beta_min), scores));
      },
      py::arg("scores"), py::arg("s_min"), py::arg("s_max"), py::arg("beta_max"), py::arg("beta_min"));
  m.def(
      "mcdiarmid_pvalue",
      [params](double total, std::int64_t n, double s_min, double s_max, double beta_max, double beta_min) {
        return report_dict(mcdiarmid_pvalue(params(s_min, s_max, beta_max, beta_min), total, n));
      },
      py::arg("total"), py::arg("n"), py::arg("s_min"), py::arg("s_max"), py::arg("beta_max"), py::arg("beta_min"));
  m.def(
      "azuma_pvalue",
      [params](double total, std::int64_t n, double s_min, double s_max, double beta_max, double beta_min) {
        return report_dict(azuma_pvalue(params(s_min, s_max, beta_max, beta_min), total, n, AzumaOptions{}));
      },
      py::arg("total"), py::arg("n"), py::arg("s_min"), py::arg("s_max"), py::arg("beta_max"), py::arg("beta_min"));
}
