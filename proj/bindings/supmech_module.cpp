#include <pybind11/complex.h>
#include <pybind11/eigen.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "supmech/config.hpp"

namespace py = pybind11;
using namespace supmech;

namespace {

GridFunction grid_function_from_numpy(const PhaseSpaceGrid& grid,
                                      const py::array_t<double>& values) {
    if (values.ndim() != 2 || values.shape(0) != grid.n_q() || values.shape(1) != grid.n_p()) {
        throw GridMismatch("grid_function: expected array of shape (n_q, n_p)");
    }
    auto view = values.unchecked<2>();
    std::vector<double> data(grid.cell_count());
    for (int iq = 0; iq < grid.n_q(); ++iq) {
        for (int ip = 0; ip < grid.n_p(); ++ip) {
            data[grid.index(iq, ip)] = view(iq, ip);
        }
    }
    return GridFunction(grid, std::move(data));
}

py::array_t<double> grid_function_to_numpy(const GridFunction& f) {
    const auto& grid = f.grid();
    py::array_t<double> out({grid.n_q(), grid.n_p()});
    auto view = out.mutable_unchecked<2>();
    for (int iq = 0; iq < grid.n_q(); ++iq) {
        for (int ip = 0; ip < grid.n_p(); ++ip) {
            view(iq, ip) = f.at(iq, ip);
        }
    }
    return out;
}

py::array_t<Complex> hybrid_state_to_numpy(const HybridState& state) {
    const auto& grid = state.grid();
    const int d = state.dim();
    py::array_t<Complex> out({grid.n_q(), grid.n_p(), d, d});
    auto view = out.mutable_unchecked<4>();
    for (int iq = 0; iq < grid.n_q(); ++iq) {
        for (int ip = 0; ip < grid.n_p(); ++ip) {
            const auto cell = state.cell(grid.index(iq, ip));
            for (int i = 0; i < d; ++i) {
                for (int j = 0; j < d; ++j) {
                    view(iq, ip, i, j) = cell(i, j);
                }
            }
        }
    }
    return out;
}

EvolutionMethod method_from_string(const std::string& name) {
    if (name == "characteristics") return EvolutionMethod::Characteristics;
    if (name == "generic") return EvolutionMethod::GenericStepper;
    throw InvariantViolation("method must be 'characteristics' or 'generic'");
}

}  // namespace

PYBIND11_MODULE(_supmech, m) {
    m.doc() = "Hybrid quantum-classical Hamiltonian dynamics and measurement simulator";

    py::register_exception<Error>(m, "SupmechError", PyExc_RuntimeError);
    py::register_exception<DimensionMismatch>(m, "DimensionMismatch", PyExc_ValueError);
    py::register_exception<GridMismatch>(m, "GridMismatch", PyExc_ValueError);
    py::register_exception<InvariantViolation>(m, "InvariantViolation", PyExc_ValueError);
    py::register_exception<DegenerateSpectrum>(m, "DegenerateSpectrumError", PyExc_ValueError);
    py::register_exception<GeometryInfeasible>(m, "GeometryInfeasibleError", PyExc_ValueError);
    py::register_exception<CalibrationFailure>(m, "CalibrationFailureError", PyExc_RuntimeError);

    // Quantum algebra on plain numpy matrices.
    m.def(
        "quantum_bracket",
        [](const Matrix& a, const Matrix& b, double hbar) {
            return quantum_bracket(QuantumOperator(a), QuantumOperator(b), hbar).matrix();
        },
        py::arg("a"), py::arg("b"), py::arg("hbar") = 1.0);
    m.def(
        "eigendecompose",
        [](const Matrix& f, double degeneracy_tol) {
            const SpectralData data = eigendecompose(QuantumObservable(f), degeneracy_tol);
            return py::make_tuple(data.eigenvalues, data.eigenvectors);
        },
        py::arg("f"), py::arg("degeneracy_tol") = 1e-8);
    m.def(
        "expectation",
        [](const Matrix& rho, const Matrix& a) {
            return expectation(QuantumState(rho), QuantumObservable(a));
        },
        py::arg("rho"), py::arg("a"));
    m.def(
        "evolve_quantum",
        [](const Matrix& rho, const Matrix& h, double t, double hbar) {
            return evolve_quantum(QuantumState(rho), QuantumObservable(h), t, hbar).matrix();
        },
        py::arg("rho"), py::arg("h"), py::arg("t"), py::arg("hbar") = 1.0);

    py::class_<PhaseSpaceGrid>(m, "PhaseSpaceGrid")
        .def(py::init<double, double, double, double, int, int, bool>(), py::arg("q_min"),
             py::arg("q_max"), py::arg("p_min"), py::arg("p_max"), py::arg("n_q"), py::arg("n_p"),
             py::arg("positive_orientation") = true)
        .def_property_readonly("dq", &PhaseSpaceGrid::dq)
        .def_property_readonly("dp", &PhaseSpaceGrid::dp)
        .def_property_readonly("cell_volume", &PhaseSpaceGrid::cell_volume)
        .def_property_readonly("total_volume", &PhaseSpaceGrid::total_volume)
        .def_property_readonly("n_q", &PhaseSpaceGrid::n_q)
        .def_property_readonly("n_p", &PhaseSpaceGrid::n_p)
        .def("q_center", &PhaseSpaceGrid::q_center)
        .def("p_center", &PhaseSpaceGrid::p_center);

    py::class_<GridFunction>(m, "GridFunction")
        .def(py::init(&grid_function_from_numpy), py::arg("grid"), py::arg("values"))
        .def_property_readonly("grid", &GridFunction::grid)
        .def("to_numpy", &grid_function_to_numpy);

    py::class_<Domain>(m, "Domain")
        .def_static("from_rectangle", &Domain::from_rectangle, py::arg("grid"), py::arg("q_min"),
                    py::arg("q_max"), py::arg("p_min"), py::arg("p_max"))
        .def_static("full", &Domain::full, py::arg("grid"))
        .def_property_readonly("volume", &Domain::volume)
        .def_property_readonly("cell_count", &Domain::cell_count)
        .def("disjoint_from", &Domain::disjoint_from);

    py::class_<PointerObservable>(m, "PointerObservable")
        .def_property_readonly("labels", &PointerObservable::labels)
        .def_property_readonly("realization", &PointerObservable::realization);

    py::class_<ClassicalState>(m, "ClassicalState")
        .def(py::init<GridFunction>(), py::arg("density"))
        .def_property_readonly("density", &ClassicalState::density);

    m.def("classical_bracket", &classical_bracket, py::arg("f"), py::arg("g"));
    m.def("integrate", &integrate, py::arg("f"));
    m.def("pointer_observable", &pointer_observable, py::arg("domains"), py::arg("labels"),
          py::arg("width_cells") = 0);
    m.def("pointer_state", &pointer_state, py::arg("domain"));
    m.def("ready_domain", &ready_domain, py::arg("grid"), py::arg("pointer_domains"),
          py::arg("ready_is_pointer"));
    m.def("d_dq", &d_dq, py::arg("f"));
    m.def("d_dp", &d_dp, py::arg("f"));

    py::class_<HybridObservable>(m, "HybridObservable")
        .def_property_readonly("dim", &HybridObservable::dim)
        .def("__add__",
             [](const HybridObservable& a, const HybridObservable& b) { return a + b; })
        .def("__sub__",
             [](const HybridObservable& a, const HybridObservable& b) { return a - b; })
        .def("__rmul__", [](const HybridObservable& a, double s) { return s * a; });

    py::class_<HybridState>(m, "HybridState")
        .def_property_readonly("dim", &HybridState::dim)
        .def("trace_integral", &HybridState::trace_integral)
        .def("to_numpy", &hybrid_state_to_numpy)
        .def("marginals", [](const HybridState& state) {
            auto [quantum, classical] = marginals(state);
            return py::make_tuple(quantum.matrix(), classical.density());
        });

    py::class_<CompositeHamiltonian>(m, "CompositeHamiltonian")
        .def_property_readonly("realization", &CompositeHamiltonian::realization);

    m.def(
        "embed",
        [](const Matrix& a, const GridFunction& f) { return embed(QuantumObservable(a), f); },
        py::arg("a"), py::arg("f"));
    m.def(
        "product_state",
        [](const Matrix& rho, const ClassicalState& density) {
            return product_state(QuantumState(rho), density);
        },
        py::arg("rho"), py::arg("density"));
    m.def("expect", &expect, py::arg("state"), py::arg("observable"));
    m.def("hybrid_bracket", &hybrid_bracket, py::arg("x"), py::arg("y"), py::arg("hbar") = 1.0);
    m.def(
        "compose_hamiltonian",
        [](const PhaseSpaceGrid& grid, int dim, py::object h1, py::object h2,
           const std::vector<std::pair<Matrix, GridFunction>>& interactions) {
            std::optional<QuantumObservable> quantum;
            if (!h1.is_none()) quantum = QuantumObservable(h1.cast<Matrix>());
            std::optional<GridFunction> classical;
            if (!h2.is_none()) classical = h2.cast<GridFunction>();
            std::vector<CompositeHamiltonian::Interaction> terms;
            for (const auto& [f, g] : interactions) {
                terms.emplace_back(QuantumObservable(f), g);
            }
            return compose_hamiltonian(grid, dim, std::move(quantum), std::move(classical),
                                       std::move(terms));
        },
        py::arg("grid"), py::arg("dim"), py::arg("h1") = py::none(), py::arg("h2") = py::none(),
        py::arg("interactions") = std::vector<std::pair<Matrix, GridFunction>>{});

    m.def(
        "evolve_observable",
        [](const HybridObservable& o, const CompositeHamiltonian& h, double tau, int steps,
           double hbar) {
            return evolve_observable(o, EvolutionSpec{h, tau, steps, hbar,
                                                      EvolutionMethod::GenericStepper});
        },
        py::arg("observable"), py::arg("hamiltonian"), py::arg("tau"), py::arg("steps") = 128,
        py::arg("hbar") = 1.0);
    m.def(
        "evolve_state",
        [](const HybridState& phi, const CompositeHamiltonian& h, double tau, int steps,
           double hbar, const std::string& method) {
            return evolve_state(phi,
                                EvolutionSpec{h, tau, steps, hbar, method_from_string(method)});
        },
        py::arg("state"), py::arg("hamiltonian"), py::arg("tau"), py::arg("steps") = 128,
        py::arg("hbar") = 1.0, py::arg("method") = "generic");

    py::class_<ExperimentConfig>(m, "ExperimentConfig");

    py::class_<Experiment>(m, "Experiment")
        .def_property_readonly("initial_state", &Experiment::initial_state)
        .def_property_readonly("pointer", &Experiment::pointer)
        .def_property_readonly(
            "eigenvalues",
            [](const Experiment& e) { return e.spectral().eigenvalues; });

    py::class_<CalibrationEntry>(m, "CalibrationEntry")
        .def_readonly("eigenvalue", &CalibrationEntry::eigenvalue)
        .def_readonly("domain_label", &CalibrationEntry::domain_label)
        .def_readonly("pointer_mass", &CalibrationEntry::pointer_mass)
        .def_readonly("fidelity", &CalibrationEntry::fidelity)
        .def_readonly("pass_", &CalibrationEntry::pass);

    py::class_<CalibrationReport>(m, "CalibrationReport")
        .def_readonly("entries", &CalibrationReport::entries)
        .def_readonly("all_pass", &CalibrationReport::all_pass);

    py::class_<WEntry>(m, "WEntry")
        .def_readonly("probe", &WEntry::probe)
        .def_readonly("value", &WEntry::value);

    py::class_<MeasurementResult>(m, "MeasurementResult")
        .def_readonly("born", &MeasurementResult::born)
        .def_readonly("born_labels", &MeasurementResult::born_labels)
        .def_readonly("residual_mass", &MeasurementResult::residual_mass)
        .def_readonly("eta_over_hbar", &MeasurementResult::eta_over_hbar)
        .def_readonly("w_values", &MeasurementResult::w_values)
        .def_property_readonly("phi_f",
                               [](const MeasurementResult& r) { return r.phi_f; })
        .def_property_readonly("phi_ref",
                               [](const MeasurementResult& r) { return r.phi_ref; });

    py::class_<SweepRow>(m, "SweepRow")
        .def_readonly("scale", &SweepRow::scale)
        .def_readonly("eta_over_hbar", &SweepRow::eta_over_hbar)
        .def_readonly("max_abs_w", &SweepRow::max_abs_w)
        .def_readonly("non_classical", &SweepRow::non_classical);

    py::class_<SweepResult>(m, "SweepResult")
        .def_readonly("rows", &SweepResult::rows)
        .def_readonly("trend_checked", &SweepResult::trend_checked)
        .def_readonly("trend_ok", &SweepResult::trend_ok);

    m.def("load_config", &load_config, py::arg("path"));
    m.def("parse_config", &parse_config, py::arg("json_text"));
    m.def("diagnose_config", [](const ExperimentConfig& config) {
        std::vector<std::pair<std::string, std::string>> out;
        for (const auto& d : diagnose_config(config)) {
            out.emplace_back(d.field, d.message);
        }
        return out;
    });
    m.def("build_experiment", &build_experiment, py::arg("config"));
    m.def("calibrate", &calibrate, py::arg("experiment"), py::arg("throw_on_failure") = true);
    m.def(
        "run_measurement",
        [](const Experiment& experiment) { return run_measurement(experiment); },
        py::arg("experiment"));
    m.def("eta_criterion", &eta_criterion, py::arg("experiment"));
    m.def("decoherence_sweep", &decoherence_sweep, py::arg("config"), py::arg("scales"));
    m.def(
        "discrepancy_w",
        [](const MeasurementResult& result, const Matrix& a, const PointerObservable& j) {
            return discrepancy_w(result, QuantumObservable(a), j);
        },
        py::arg("result"), py::arg("a"), py::arg("j"));
}
