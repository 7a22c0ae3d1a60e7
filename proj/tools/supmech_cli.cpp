// Command-line front end: validate configs, run calibrations, measurements
// and decoherence sweeps, and write result files. All numeric output uses 17
// significant digits so that regression diffs are meaningful; identical inputs
// produce byte-identical outputs.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "supmech/config.hpp"

namespace {

namespace fs = std::filesystem;
using namespace supmech;

// Exit codes, one per documented error class.
enum ExitCode : int {
    kOk = 0,
    kDiagnostics = 1,
    kParseError = 2,
    kInvariantViolation = 3,
    kGeometryInfeasible = 4,
    kDegenerateSpectrum = 5,
    kCalibrationFailure = 6,
    kCflViolation = 7,
    kMassLeak = 8,
    kOtherError = 9,
    kUnexpected = 10,
};

std::string fmt17(double x) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.17g", x);
    return buf;
}

std::ofstream open_output(const fs::path& dir, const std::string& name) {
    std::ofstream out(dir / name, std::ios::binary);
    if (!out) {
        throw Error("cannot write " + (dir / name).string());
    }
    return out;
}

void write_born_csv(const fs::path& dir, const MeasurementResult& result) {
    auto out = open_output(dir, "born.csv");
    out << "label,probability\n";
    for (std::size_t k = 0; k < result.born.size(); ++k) {
        out << fmt17(result.born_labels[k]) << ',' << fmt17(result.born[k]) << '\n';
    }
}

void write_w_table_csv(const fs::path& dir, const MeasurementResult& result) {
    auto out = open_output(dir, "W_table.csv");
    out << "probe,value\n";
    for (const auto& entry : result.w_values) {
        out << entry.probe << ',' << fmt17(entry.value) << '\n';
    }
}

void write_marginals(const fs::path& dir, const MeasurementResult& result) {
    {
        auto out = open_output(dir, "marginal_quantum.csv");
        const auto marginal = marginals(result.phi_f).first;
        const int d = marginal.dim();
        out << "row,col,re,im\n";
        for (int i = 0; i < d; ++i) {
            for (int j = 0; j < d; ++j) {
                out << i << ',' << j << ',' << fmt17(marginal.matrix()(i, j).real()) << ','
                    << fmt17(marginal.matrix()(i, j).imag()) << '\n';
            }
        }
    }
    {
        auto out = open_output(dir, "marginal_classical.csv");
        write_csv(out, marginals(result.phi_f).second.density());
    }
}

void write_summary_json(const fs::path& dir, const MeasurementResult& result, long seed) {
    auto out = open_output(dir, "summary.json");
    out << "{\n";
    out << "  \"schema_version\": 1,\n";
    out << "  \"command\": \"measure\",\n";
    out << "  \"seed\": " << seed << ",\n";
    out << "  \"eta_over_hbar\": " << fmt17(result.eta_over_hbar) << ",\n";
    out << "  \"residual_mass\": " << fmt17(result.residual_mass) << ",\n";
    out << "  \"born\": [";
    for (std::size_t k = 0; k < result.born.size(); ++k) {
        if (k) out << ", ";
        out << "{\"label\": " << fmt17(result.born_labels[k])
            << ", \"probability\": " << fmt17(result.born[k]) << "}";
    }
    out << "],\n";
    out << "  \"w_table\": [";
    for (std::size_t k = 0; k < result.w_values.size(); ++k) {
        if (k) out << ", ";
        out << "{\"probe\": \"" << result.w_values[k].probe
            << "\", \"value\": " << fmt17(result.w_values[k].value) << "}";
    }
    out << "],\n";
    out << "  \"diagnostics\": {\"trace_integral_drift\": "
        << fmt17(result.diagnostics.trace_integral_drift)
        << ", \"min_cell_eigenvalue\": " << fmt17(result.diagnostics.min_cell_eigenvalue)
        << ", \"boundary_mass\": " << fmt17(result.diagnostics.boundary_mass) << "}\n";
    out << "}\n";
}

int run_validate(const fs::path& config_path) {
    ExperimentConfig config = load_config(config_path);
    const auto diagnostics = diagnose_config(config);
    if (diagnostics.empty()) {
        std::cout << "OK: " << config_path.string() << "\n";
        return kOk;
    }
    for (const auto& d : diagnostics) {
        std::cout << "INVALID " << d.field << ": " << d.message << "\n";
    }
    return kDiagnostics;
}

int run_calibrate(const fs::path& config_path, const fs::path& out_dir) {
    Experiment experiment = build_experiment(load_config(config_path));
    const CalibrationReport report = calibrate(experiment, /*throw_on_failure=*/false);

    auto out = open_output(out_dir, "calibration.csv");
    out << "eigenvalue,domain_label,pointer_mass,fidelity,pass\n";
    for (const auto& entry : report.entries) {
        out << fmt17(entry.eigenvalue) << ',' << fmt17(entry.domain_label) << ','
            << fmt17(entry.pointer_mass) << ',' << fmt17(entry.fidelity) << ','
            << (entry.pass ? "PASS" : "FAIL") << '\n';
        std::cout << (entry.pass ? "PASS" : "FAIL") << " eigenvalue " << fmt17(entry.eigenvalue)
                  << ": pointer mass " << fmt17(entry.pointer_mass) << ", fidelity "
                  << fmt17(entry.fidelity) << "\n";
    }
    return report.all_pass ? kOk : kCalibrationFailure;
}

int run_measure(const fs::path& config_path, const fs::path& out_dir, long seed,
                int snapshot_stride) {
    Experiment experiment = build_experiment(load_config(config_path));

    SnapshotCallback on_snapshot;
    if (snapshot_stride > 0) {
        const fs::path snap_dir = out_dir / "snapshots";
        fs::create_directories(snap_dir);
        on_snapshot = [snap_dir](int step, const HybridState& state) {
            char name[32];
            std::snprintf(name, sizeof(name), "step_%06d.csv", step);
            std::ofstream out(snap_dir / name, std::ios::binary);
            write_csv(out, state);
        };
    }

    const MeasurementResult result = run_measurement(experiment, snapshot_stride, on_snapshot);
    write_summary_json(out_dir, result, seed);
    write_born_csv(out_dir, result);
    write_w_table_csv(out_dir, result);
    write_marginals(out_dir, result);

    std::cout << "eta/hbar = " << fmt17(result.eta_over_hbar) << "\n";
    for (std::size_t k = 0; k < result.born.size(); ++k) {
        std::cout << "P(" << fmt17(result.born_labels[k]) << ") = " << fmt17(result.born[k])
                  << "\n";
    }
    return kOk;
}

int run_sweep(const fs::path& config_path, const fs::path& out_dir) {
    ExperimentConfig config = load_config(config_path);
    std::vector<double> scales = config.sweep_scales;
    if (scales.empty()) scales = {1.0};
    const SweepResult result = decoherence_sweep(config, scales);

    auto out = open_output(out_dir, "sweep.csv");
    out << "scale,eta_over_hbar,max_abs_W\n";
    for (const auto& row : result.rows) {
        out << fmt17(row.scale) << ',' << fmt17(row.eta_over_hbar) << ',' << fmt17(row.max_abs_w)
            << '\n';
        std::cout << "scale " << fmt17(row.scale) << ": eta/hbar = " << fmt17(row.eta_over_hbar)
                  << ", max|W| = " << fmt17(row.max_abs_w)
                  << (row.non_classical ? " (non-classical regime)" : "") << "\n";
    }
    if (result.trend_checked) {
        std::cout << "decoherence trend over a decade: " << (result.trend_ok ? "OK" : "VIOLATED")
                  << "\n";
    }
    return kOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"supmech: hybrid quantum-classical measurement simulator"};
    app.require_subcommand(1);

    std::string config_path;
    std::string out_dir = ".";
    long seed = 0;
    int snapshot_stride = 0;

    auto add_common = [&](CLI::App* cmd, bool needs_out) {
        cmd->add_option("--config", config_path, "experiment config (JSON)")->required();
        auto* out = cmd->add_option("--out", out_dir, "output directory");
        if (needs_out) out->required();
        cmd->add_option("--seed", seed, "seed recorded with the outputs");
        cmd->add_option("--snapshot-stride", snapshot_stride,
                        "dump a state snapshot every N steps (generic stepper)");
    };

    auto* validate = app.add_subcommand("validate", "check a config and report diagnostics");
    add_common(validate, false);
    auto* calibrate_cmd = app.add_subcommand("calibrate", "per-eigenstate ideal-measurement check");
    add_common(calibrate_cmd, true);
    auto* measure = app.add_subcommand("measure", "run the measurement and write results");
    add_common(measure, true);
    auto* sweep = app.add_subcommand("sweep", "decoherence sweep over coupling scales");
    add_common(sweep, true);

    CLI11_PARSE(app, argc, argv);

    try {
        if (!out_dir.empty()) fs::create_directories(out_dir);
        if (validate->parsed()) return run_validate(config_path);
        if (calibrate_cmd->parsed()) return run_calibrate(config_path, out_dir);
        if (measure->parsed()) return run_measure(config_path, out_dir, seed, snapshot_stride);
        if (sweep->parsed()) return run_sweep(config_path, out_dir);
    } catch (const ParseError& e) {
        std::cerr << "parse error: " << e.what() << "\n";
        return kParseError;
    } catch (const GeometryInfeasible& e) {
        std::cerr << "geometry infeasible: " << e.what() << "\n";
        return kGeometryInfeasible;
    } catch (const DegenerateSpectrum& e) {
        std::cerr << "degenerate spectrum: " << e.what() << "\n";
        return kDegenerateSpectrum;
    } catch (const CalibrationFailure& e) {
        std::cerr << "calibration failure: " << e.what() << "\n";
        return kCalibrationFailure;
    } catch (const CflViolation& e) {
        std::cerr << "CFL violation: " << e.what() << "\n";
        return kCflViolation;
    } catch (const MassLeak& e) {
        std::cerr << "mass leak: " << e.what() << "\n";
        return kMassLeak;
    } catch (const InvariantViolation& e) {
        std::cerr << "invariant violation: " << e.what() << "\n";
        return kInvariantViolation;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kOtherError;
    } catch (const std::exception& e) {
        std::cerr << "unexpected error: " << e.what() << "\n";
        return kUnexpected;
    }
    return kOk;
}
