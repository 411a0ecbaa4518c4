#pragma once

#include "kcdc/analysis.hpp"
#include "kcdc/models.hpp"

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace kcdc {

enum class ModelKind { Lv1, Lv2, Custom };

// Everything needed to reproduce a run. Stored as one JSON document.
struct ExperimentConfig {
    ModelKind model = ModelKind::Lv1;
    Lv1Params params;                             // lv1 only
    std::vector<double> rates;                    // custom only
    std::vector<std::vector<double>> interaction; // custom only, row-major
    std::vector<double> u0;
    double t_end = 100.0;
    double dt = 0.01;
    int corrections = 1;
    std::optional<int> nodes; // default 2S + 3
    std::string node_distribution = "uniform";
    double reference_tol = 1e-13;

    // converge
    std::vector<StudyCell> grid;
    double target = 1e-10;
    double saturation_ratio = 1.2;
    int max_halvings = 8;
    ErrorMetric stop_metric = ErrorMetric::Solution;

    std::filesystem::path output_dir = ".";

    bool operator==(const ExperimentConfig&) const = default;

    // Field-level checks; model-level checks happen in make_model().
    void validate() const;
    CdcConfig cdc() const;
    StudyOptions study() const;
};

ExperimentConfig preset(std::string_view name);
std::vector<std::string> preset_names();

// Throws ValidationError naming the offending field.
ExperimentConfig parse_config(std::string_view json_text);
std::string emit_config(const ExperimentConfig& cfg);
// Throws IoError if the file cannot be read.
ExperimentConfig load_config(const std::filesystem::path& path);

ModelBundle make_model(const ExperimentConfig& cfg);

std::string_view to_string(ModelKind kind);
std::string_view to_string(ErrorMetric metric);

} // namespace kcdc
