#include "kcdc/config.hpp"

#include "kcdc/errors.hpp"

#include <json.hpp>

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

namespace kcdc {

using nlohmann::json;

namespace {

[[noreturn]] void fail(const std::string& field, const std::string& msg)
{
    throw ValidationError("config: " + field + ": " + msg);
}

void require_positive(double v, const char* field)
{
    if (!(v > 0.0) || !std::isfinite(v))
        fail(field, "must be positive and finite");
}

ModelKind parse_model(const std::string& s)
{
    if (s == "lv1")
        return ModelKind::Lv1;
    if (s == "lv2")
        return ModelKind::Lv2;
    if (s == "custom")
        return ModelKind::Custom;
    fail("model", "expected lv1, lv2 or custom, got '" + s + "'");
}

ErrorMetric parse_metric(const std::string& s)
{
    if (s == "u")
        return ErrorMetric::Solution;
    if (s == "H1")
        return ErrorMetric::H1;
    if (s == "H2")
        return ErrorMetric::H2;
    fail("stop_metric", "expected u, H1 or H2, got '" + s + "'");
}

// Reads doc[key] into out if present, with the field name in any error.
template <class T>
void read(const json& doc, const char* key, T& out)
{
    const auto it = doc.find(key);
    if (it == doc.end())
        return;
    try {
        out = it->get<T>();
    } catch (const json::exception&) {
        fail(key, "wrong type (" + std::string(it->type_name()) + ")");
    }
}

void reject_unknown(const json& obj, const std::set<std::string>& known, const std::string& where)
{
    for (const auto& [key, _] : obj.items())
        if (!known.count(key))
            fail(where + key, "unknown field");
}

} // namespace

std::string_view to_string(ModelKind kind)
{
    switch (kind) {
    case ModelKind::Lv1: return "lv1";
    case ModelKind::Lv2: return "lv2";
    case ModelKind::Custom: return "custom";
    }
    return "?";
}

std::string_view to_string(ErrorMetric metric)
{
    switch (metric) {
    case ErrorMetric::Solution: return "u";
    case ErrorMetric::H1: return "H1";
    case ErrorMetric::H2: return "H2";
    }
    return "?";
}

void ExperimentConfig::validate() const
{
    if (u0.empty())
        fail("u0", "missing");
    for (double v : u0)
        if (!std::isfinite(v))
            fail("u0", "non-finite component");

    switch (model) {
    case ModelKind::Lv1:
    case ModelKind::Lv2:
        if (u0.size() != 3)
            fail("u0", "lv1/lv2 need 3 components");
        for (double v : u0)
            if (!(v > 0.0))
                fail("u0", "densities must be strictly positive");
        if (model == ModelKind::Lv1) {
            try {
                kcdc::validate(params);
            } catch (const ValidationError& e) {
                fail("params", e.what());
            }
        }
        break;
    case ModelKind::Custom:
        if (rates.size() != u0.size())
            fail("rates", "need one rate per component of u0");
        if (interaction.size() != u0.size())
            fail("interaction", "need one row per component of u0");
        for (const auto& row : interaction)
            if (row.size() != u0.size())
                fail("interaction", "matrix must be square");
        break;
    }

    require_positive(t_end, "t_end");
    require_positive(dt, "dt");
    if (corrections < 0)
        fail("corrections", "must be non-negative");
    if (nodes && *nodes < 2)
        fail("nodes", "need at least 2");
    if (node_distribution != "uniform")
        fail("node_distribution", "only 'uniform' is supported, got '" + node_distribution + "'");
    if (!(reference_tol >= 1e-14 && reference_tol <= 1e-6))
        fail("reference_tol", "must lie in [1e-14, 1e-6]");

    for (std::size_t i = 0; i < grid.size(); ++i) {
        const auto& c = grid[i];
        const std::string where = "grid[" + std::to_string(i) + "]";
        if (c.corrections < 0)
            fail(where + ".corrections", "must be non-negative");
        if (c.nodes < 2)
            fail(where + ".nodes", "need at least 2");
        if (c.dt0 && (!(*c.dt0 > 0.0) || !std::isfinite(*c.dt0)))
            fail(where + ".dt", "must be positive");
    }
    require_positive(target, "target");
    if (!(saturation_ratio > 1.0))
        fail("saturation_ratio", "must exceed 1");
    if (max_halvings < 0)
        fail("max_halvings", "must be non-negative");
}

CdcConfig ExperimentConfig::cdc() const
{
    CdcConfig c;
    c.dt = dt;
    c.t_end = t_end;
    c.corrections = corrections;
    c.nodes = nodes;
    return c;
}

StudyOptions ExperimentConfig::study() const
{
    StudyOptions o;
    o.t_end = t_end;
    o.dt0 = dt;
    o.target = target;
    o.saturation_ratio = saturation_ratio;
    o.max_halvings = max_halvings;
    o.reference_tol = reference_tol;
    o.stop_metric = stop_metric;
    return o;
}

std::vector<std::string> preset_names()
{
    return {"lv1-paper", "lv2-paper"};
}

ExperimentConfig preset(std::string_view name)
{
    ExperimentConfig cfg;
    if (name == "lv1-paper") {
        cfg.model = ModelKind::Lv1;
        cfg.params = Lv1Params{-1.0, -1.0, -1.0, 0.0, 1.0, -1.0};
        cfg.u0 = {1.0, 1.9, 0.5};
        cfg.t_end = 100.0;
        cfg.dt = 0.01;
        cfg.corrections = 1;
        cfg.grid = {{1, 5, 0.01}, {2, 7, 0.05}, {3, 9, 0.15}, {4, 11, 0.25}};
        return cfg;
    }
    if (name == "lv2-paper") {
        cfg.model = ModelKind::Lv2;
        cfg.u0 = {0.3, 0.3, 0.4};
        cfg.t_end = 100.0;
        cfg.dt = 0.01;
        cfg.corrections = 1;
        cfg.grid = {{1, 5, 0.01}};
        return cfg;
    }
    std::string known;
    for (const auto& n : preset_names())
        known += (known.empty() ? "" : ", ") + n;
    throw ValidationError("unknown preset '" + std::string(name) + "' (known: " + known + ")");
}

ExperimentConfig parse_config(std::string_view json_text)
{
    json doc;
    try {
        doc = json::parse(json_text);
    } catch (const json::parse_error& e) {
        throw ValidationError(std::string("config: malformed JSON: ") + e.what());
    }
    if (!doc.is_object())
        throw ValidationError("config: top level must be an object");
    reject_unknown(doc,
                   {"model", "params", "rates", "interaction", "u0", "t_end", "dt", "corrections", "nodes",
                    "node_distribution", "reference_tol", "grid", "target", "saturation_ratio", "max_halvings",
                    "stop_metric", "output_dir"},
                   "");

    ExperimentConfig cfg;
    std::string model = "lv1";
    read(doc, "model", model);
    cfg.model = parse_model(model);

    if (const auto it = doc.find("params"); it != doc.end()) {
        if (cfg.model != ModelKind::Lv1)
            fail("params", "only meaningful for model lv1");
        if (!it->is_object())
            fail("params", "must be an object");
        reject_unknown(*it, {"a", "b", "c", "lambda", "mu", "nu"}, "params.");
        read(*it, "a", cfg.params.a);
        read(*it, "b", cfg.params.b);
        read(*it, "c", cfg.params.c);
        read(*it, "lambda", cfg.params.lambda);
        read(*it, "mu", cfg.params.mu);
        read(*it, "nu", cfg.params.nu);
    }
    if ((doc.contains("rates") || doc.contains("interaction")) && cfg.model != ModelKind::Custom)
        fail("rates", "only meaningful for model custom");
    read(doc, "rates", cfg.rates);
    read(doc, "interaction", cfg.interaction);
    read(doc, "u0", cfg.u0);
    read(doc, "t_end", cfg.t_end);
    read(doc, "dt", cfg.dt);
    read(doc, "corrections", cfg.corrections);
    if (const auto it = doc.find("nodes"); it != doc.end() && !it->is_null()) {
        int n = 0;
        read(doc, "nodes", n);
        cfg.nodes = n;
    }
    read(doc, "node_distribution", cfg.node_distribution);
    read(doc, "reference_tol", cfg.reference_tol);

    if (const auto it = doc.find("grid"); it != doc.end()) {
        if (!it->is_array())
            fail("grid", "must be an array");
        for (std::size_t i = 0; i < it->size(); ++i) {
            const json& c = (*it)[i];
            const std::string where = "grid[" + std::to_string(i) + "].";
            if (!c.is_object())
                fail(where, "must be an object");
            reject_unknown(c, {"corrections", "nodes", "dt"}, where);
            if (!c.contains("corrections"))
                fail(where + "corrections", "missing");
            StudyCell cell;
            read(c, "corrections", cell.corrections);
            cell.nodes = 2 * cell.corrections + 3;
            read(c, "nodes", cell.nodes);
            if (const auto d = c.find("dt"); d != c.end() && !d->is_null()) {
                double dt0 = 0.0;
                read(c, "dt", dt0);
                cell.dt0 = dt0;
            }
            cfg.grid.push_back(cell);
        }
    }
    read(doc, "target", cfg.target);
    read(doc, "saturation_ratio", cfg.saturation_ratio);
    read(doc, "max_halvings", cfg.max_halvings);
    if (doc.contains("stop_metric")) {
        std::string m;
        read(doc, "stop_metric", m);
        cfg.stop_metric = parse_metric(m);
    }
    std::string out = cfg.output_dir.string();
    read(doc, "output_dir", out);
    cfg.output_dir = out;

    cfg.validate();
    return cfg;
}

std::string emit_config(const ExperimentConfig& cfg)
{
    json doc;
    doc["model"] = std::string(to_string(cfg.model));
    if (cfg.model == ModelKind::Lv1)
        doc["params"] = {{"a", cfg.params.a},     {"b", cfg.params.b},   {"c", cfg.params.c},
                         {"lambda", cfg.params.lambda}, {"mu", cfg.params.mu}, {"nu", cfg.params.nu}};
    if (cfg.model == ModelKind::Custom) {
        doc["rates"] = cfg.rates;
        doc["interaction"] = cfg.interaction;
    }
    doc["u0"] = cfg.u0;
    doc["t_end"] = cfg.t_end;
    doc["dt"] = cfg.dt;
    doc["corrections"] = cfg.corrections;
    doc["nodes"] = cfg.nodes ? json(*cfg.nodes) : json(nullptr);
    doc["node_distribution"] = cfg.node_distribution;
    doc["reference_tol"] = cfg.reference_tol;
    json grid = json::array();
    for (const auto& c : cfg.grid) {
        json cell = {{"corrections", c.corrections}, {"nodes", c.nodes}};
        cell["dt"] = c.dt0 ? json(*c.dt0) : json(nullptr);
        grid.push_back(cell);
    }
    doc["grid"] = grid;
    doc["target"] = cfg.target;
    doc["saturation_ratio"] = cfg.saturation_ratio;
    doc["max_halvings"] = cfg.max_halvings;
    doc["stop_metric"] = std::string(to_string(cfg.stop_metric));
    doc["output_dir"] = cfg.output_dir.string();
    return doc.dump(2) + "\n";
}

ExperimentConfig load_config(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in)
        throw IoError("cannot open config file " + path.string());
    std::ostringstream text;
    text << in.rdbuf();
    if (in.bad())
        throw IoError("error reading config file " + path.string());
    return parse_config(text.str());
}

ModelBundle make_model(const ExperimentConfig& cfg)
{
    switch (cfg.model) {
    case ModelKind::Lv1: return build_lv1(cfg.params);
    case ModelKind::Lv2: return build_lv2();
    case ModelKind::Custom: break;
    }
    const auto m = static_cast<Eigen::Index>(cfg.rates.size());
    StateVector r(m);
    Matrix a(m, m);
    for (Eigen::Index i = 0; i < m; ++i) {
        r[i] = cfg.rates[static_cast<std::size_t>(i)];
        if (cfg.interaction.size() != cfg.rates.size() || cfg.interaction[static_cast<std::size_t>(i)].size() != cfg.rates.size())
            fail("interaction", "must be square with one row per rate");
        for (Eigen::Index j = 0; j < m; ++j)
            a(i, j) = cfg.interaction[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
    }
    return build_custom(r, a);
}

} // namespace kcdc
