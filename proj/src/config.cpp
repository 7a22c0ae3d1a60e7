#include "supmech/config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"

namespace supmech {

namespace {

using nlohmann::json;

void require_keys(const json& object, const std::string& where,
                  const std::set<std::string>& allowed, const std::set<std::string>& required) {
    if (!object.is_object()) {
        throw ParseError(where + ": expected a JSON object");
    }
    for (const auto& [key, value] : object.items()) {
        if (!allowed.count(key)) {
            throw ParseError(where + ": unknown field '" + key + "'");
        }
    }
    for (const auto& key : required) {
        if (!object.contains(key)) {
            throw ParseError(where + ": missing field '" + key + "'");
        }
    }
}

double get_number(const json& object, const std::string& where, const std::string& key) {
    const auto& value = object.at(key);
    if (!value.is_number()) {
        throw ParseError(where + "." + key + ": expected a number");
    }
    return value.get<double>();
}

int get_integer(const json& object, const std::string& where, const std::string& key) {
    const auto& value = object.at(key);
    if (!value.is_number_integer()) {
        throw ParseError(where + "." + key + ": expected an integer");
    }
    return value.get<int>();
}

Rect parse_rect(const json& object, const std::string& where) {
    require_keys(object, where, {"q_min", "q_max", "p_min", "p_max", "label"},
                 {"q_min", "q_max", "p_min", "p_max"});
    Rect rect;
    rect.q_min = get_number(object, where, "q_min");
    rect.q_max = get_number(object, where, "q_max");
    rect.p_min = get_number(object, where, "p_min");
    rect.p_max = get_number(object, where, "p_max");
    return rect;
}

Complex parse_complex(const json& value, const std::string& where) {
    if (!value.is_array() || value.size() != 2 || !value[0].is_number() || !value[1].is_number()) {
        throw ParseError(where + ": expected [re, im]");
    }
    return Complex(value[0].get<double>(), value[1].get<double>());
}

Matrix parse_matrix(const json& value, const std::string& where) {
    if (!value.is_array() || value.empty()) {
        throw ParseError(where + ": expected a nonempty array of rows");
    }
    const std::size_t d = value.size();
    Matrix m(d, d);
    for (std::size_t i = 0; i < d; ++i) {
        const auto& row = value[i];
        if (!row.is_array() || row.size() != d) {
            throw ParseError(where + ": row " + std::to_string(i) + " must have " +
                             std::to_string(d) + " entries");
        }
        for (std::size_t j = 0; j < d; ++j) {
            m(i, j) = parse_complex(row[j], where + "[" + std::to_string(i) + "][" +
                                                std::to_string(j) + "]");
        }
    }
    return m;
}

}  // namespace

ExperimentConfig parse_config(const std::string& json_text) {
    json root;
    try {
        root = json::parse(json_text);
    } catch (const json::parse_error& e) {
        throw ParseError(std::string("config: invalid JSON: ") + e.what());
    }

    require_keys(root, "config",
                 {"schema_version", "hbar", "grid", "measured_observable", "amplitudes",
                  "coupling", "tau", "pointer_domains", "ready_is_pointer", "initial_support",
                  "initial_ramp_cells", "pointer_smoothing_cells", "stepper", "degeneracy_tol",
                  "sweep_scales"},
                 {"schema_version", "grid", "measured_observable", "amplitudes", "coupling",
                  "tau", "pointer_domains", "initial_support"});

    if (get_integer(root, "config", "schema_version") != 1) {
        throw ParseError("config.schema_version: only version 1 is supported");
    }

    ExperimentConfig config;

    const auto& grid = root.at("grid");
    require_keys(grid, "config.grid", {"q_min", "q_max", "p_min", "p_max", "n_q", "n_p"},
                 {"q_min", "q_max", "p_min", "p_max", "n_q", "n_p"});
    config.grid.q_min = get_number(grid, "config.grid", "q_min");
    config.grid.q_max = get_number(grid, "config.grid", "q_max");
    config.grid.p_min = get_number(grid, "config.grid", "p_min");
    config.grid.p_max = get_number(grid, "config.grid", "p_max");
    config.grid.n_q = get_integer(grid, "config.grid", "n_q");
    config.grid.n_p = get_integer(grid, "config.grid", "n_p");

    config.measured_observable = parse_matrix(root.at("measured_observable"),
                                              "config.measured_observable");

    const auto& amplitudes = root.at("amplitudes");
    if (!amplitudes.is_array() || amplitudes.empty()) {
        throw ParseError("config.amplitudes: expected a nonempty array");
    }
    for (std::size_t j = 0; j < amplitudes.size(); ++j) {
        config.amplitudes.push_back(
            parse_complex(amplitudes[j], "config.amplitudes[" + std::to_string(j) + "]"));
    }

    config.coupling = get_number(root, "config", "coupling");
    config.tau = get_number(root, "config", "tau");
    if (root.contains("hbar")) config.hbar = get_number(root, "config", "hbar");

    const auto& domains = root.at("pointer_domains");
    if (!domains.is_array() || domains.empty()) {
        throw ParseError("config.pointer_domains: expected a nonempty array");
    }
    for (std::size_t j = 0; j < domains.size(); ++j) {
        const std::string where = "config.pointer_domains[" + std::to_string(j) + "]";
        PointerDomainSpec spec;
        spec.rect = parse_rect(domains[j], where);
        if (!domains[j].contains("label")) {
            throw ParseError(where + ": missing field 'label'");
        }
        spec.label = get_number(domains[j], where, "label");
        config.pointer_domains.push_back(spec);
    }

    if (root.contains("ready_is_pointer")) {
        if (!root.at("ready_is_pointer").is_boolean()) {
            throw ParseError("config.ready_is_pointer: expected a boolean");
        }
        config.ready_is_pointer = root.at("ready_is_pointer").get<bool>();
    }

    config.initial_support = parse_rect(root.at("initial_support"), "config.initial_support");
    if (root.contains("initial_ramp_cells")) {
        config.initial_ramp_cells = get_integer(root, "config", "initial_ramp_cells");
    }
    if (root.contains("pointer_smoothing_cells")) {
        config.pointer_smoothing_cells = get_integer(root, "config", "pointer_smoothing_cells");
    }
    if (root.contains("degeneracy_tol")) {
        config.degeneracy_tol = get_number(root, "config", "degeneracy_tol");
    }

    if (root.contains("stepper")) {
        const auto& stepper = root.at("stepper");
        require_keys(stepper, "config.stepper", {"method", "steps"}, {});
        if (stepper.contains("method")) {
            const auto& method = stepper.at("method");
            if (!method.is_string()) {
                throw ParseError("config.stepper.method: expected a string");
            }
            const std::string name = method.get<std::string>();
            if (name == "characteristics") {
                config.method = EvolutionMethod::Characteristics;
            } else if (name == "generic") {
                config.method = EvolutionMethod::GenericStepper;
            } else {
                throw ParseError("config.stepper.method: expected 'characteristics' or 'generic'");
            }
        }
        if (stepper.contains("steps")) {
            config.steps = get_integer(stepper, "config.stepper", "steps");
        }
    }

    if (root.contains("sweep_scales")) {
        const auto& scales = root.at("sweep_scales");
        if (!scales.is_array()) {
            throw ParseError("config.sweep_scales: expected an array of numbers");
        }
        for (std::size_t j = 0; j < scales.size(); ++j) {
            if (!scales[j].is_number()) {
                throw ParseError("config.sweep_scales[" + std::to_string(j) +
                                 "]: expected a number");
            }
            config.sweep_scales.push_back(scales[j].get<double>());
        }
    }

    return config;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
    std::ifstream stream(path);
    if (!stream) {
        throw ParseError("config: cannot open '" + path.string() + "'");
    }
    std::ostringstream buffer;
    buffer << stream.rdbuf();
    return parse_config(buffer.str());
}

}  // namespace supmech
