#include "safelevel/study_config.hpp"

#include <fstream>
#include <sstream>

#include <json.hpp>

namespace safelevel::config {

using nlohmann::json;

ConfigError::ConfigError(std::string path, const std::string& message)
    : DataError(path + ": " + message), path_(std::move(path)) {}

namespace {

class Node {
public:
    Node(const json& value, std::string path) : value_(value), path_(std::move(path)) {}

    const std::string& path() const { return path_; }
    const json& value() const { return value_; }

    bool has(const char* key) const { return value_.is_object() && value_.contains(key); }

    Node at(const char* key) const {
        if (!value_.is_object()) throw ConfigError(path_, "expected object");
        if (!value_.contains(key)) throw ConfigError(path_ + "." + key, "missing required field");
        return Node(value_.at(key), path_ + "." + key);
    }

    Node index(std::size_t i) const { return Node(value_.at(i), path_ + "[" + std::to_string(i) + "]"); }

    double number() const {
        if (!value_.is_number()) throw ConfigError(path_, "expected number");
        return value_.get<double>();
    }
    double positive() const {
        const double v = number();
        if (!(v > 0.0)) throw ConfigError(path_, "must be positive");
        return v;
    }
    double non_negative() const {
        const double v = number();
        if (!(v >= 0.0)) throw ConfigError(path_, "must be non-negative");
        return v;
    }
    std::uint64_t count() const {
        if (!value_.is_number_unsigned()) throw ConfigError(path_, "expected non-negative integer");
        return value_.get<std::uint64_t>();
    }
    std::string text() const {
        if (!value_.is_string()) throw ConfigError(path_, "expected string");
        return value_.get<std::string>();
    }
    std::size_t array_size() const {
        if (!value_.is_array()) throw ConfigError(path_, "expected array");
        return value_.size();
    }
    std::vector<double> numbers() const {
        std::vector<double> out;
        for (std::size_t i = 0, n = array_size(); i < n; ++i) out.push_back(index(i).number());
        return out;
    }

private:
    const json& value_;
    std::string path_;
};

simulate::SeverityComponent parse_component(const Node& node) {
    simulate::SeverityComponent c;
    c.weight = node.has("weight") ? node.at("weight").non_negative() : 1.0;
    const std::string kind = node.at("kind").text();
    if (kind == "constant") {
        c.kind = simulate::ConstantSeverity{node.at("value").positive()};
    } else if (kind == "pareto") {
        c.kind = simulate::ParetoSeverity{node.at("scale").positive(), node.at("shape").positive()};
    } else if (kind == "weibull") {
        c.kind = simulate::WeibullSeverity{node.at("shape").positive(), node.at("scale").positive()};
    } else if (kind == "empirical") {
        const auto values = node.at("values").numbers();
        const auto probabilities = node.at("probabilities").numbers();
        if (values.size() != probabilities.size() || values.empty()) {
            throw ConfigError(node.path() + ".probabilities", "must match values in length and be non-empty");
        }
        c.kind = simulate::EmpiricalSeverity{values, probabilities};
    } else {
        throw ConfigError(node.path() + ".kind",
                          "unknown severity kind '" + kind + "' (constant, pareto, weibull, empirical)");
    }
    return c;
}

simulate::SeverityModel parse_severity(const Node& node) {
    std::vector<simulate::SeverityComponent> components;
    for (std::size_t i = 0, n = node.array_size(); i < n; ++i) {
        components.push_back(parse_component(node.index(i)));
    }
    try {
        return simulate::SeverityModel(std::move(components));
    } catch (const DomainError& e) {
        throw ConfigError(node.path(), e.what());
    }
}

Category parse_counted(const Node& node) {
    const std::string name = node.text();
    if (name == "probable") return Category::ProbableDeterioration;
    if (name == "potential") return Category::PotentialDeterioration;
    throw ConfigError(node.path(), "expected 'probable' or 'potential'");
}

simulate::Procedure parse_procedure(const Node& node) {
    const std::string kind = node.at("kind").text();
    if (kind == "rate-ratio") {
        PThresholds t;
        if (node.has("probable")) t.probable = node.at("probable").number();
        if (node.has("potential")) t.potential = node.at("potential").number();
        try {
            t.validate();
        } catch (const DomainError& e) {
            throw ConfigError(node.path(), e.what());
        }
        return simulate::RateRatioProcedure{t};
    }
    if (kind == "andrasik-table") {
        PosteriorThresholds t;
        if (node.has("alert")) t.alert = node.at("alert").number();
        if (node.has("warning")) t.warning = node.at("warning").number();
        try {
            t.validate();
        } catch (const DomainError& e) {
            throw ConfigError(node.path(), e.what());
        }
        return simulate::AndrasikTableProcedure{t};
    }
    throw ConfigError(node.path() + ".kind", "unknown procedure '" + kind + "' (rate-ratio, andrasik-table)");
}

}  // namespace

StudyConfig parse_study_config(const std::string& json_text) {
    json doc;
    try {
        doc = json::parse(json_text);
    } catch (const json::parse_error& e) {
        throw ConfigError("$", std::string("invalid JSON: ") + e.what());
    }
    const Node root(doc, "$");
    if (!doc.is_object()) throw ConfigError("$", "expected object");

    StudyConfig config;
    if (root.has("seed")) config.seed = root.at("seed").count();
    if (root.has("replications")) {
        config.replications = root.at("replications").count();
        if (*config.replications == 0) throw ConfigError("$.replications", "must be positive");
    }
    if (root.has("workers")) {
        const auto w = root.at("workers").count();
        if (w == 0 || w > 1024) throw ConfigError("$.workers", "must be between 1 and 1024");
        config.workers = static_cast<unsigned>(w);
    }
    if (root.has("process")) {
        const auto p = root.at("process");
        simulate::CompoundPoissonSpec spec;
        spec.rate = p.at("rate").non_negative();
        spec.exposure = p.at("exposure").positive();
        spec.severity = p.has("severity") ? parse_severity(p.at("severity")) : simulate::SeverityModel::constant(1.0);
        config.process = std::move(spec);
    }
    if (root.has("loss_classes")) {
        const auto node = root.at("loss_classes");
        const auto values = node.numbers();
        if (values.size() != 6) throw ConfigError(node.path(), "expected 6 boundaries");
        for (std::size_t i = 1; i < values.size(); ++i) {
            if (!(values[i] > values[i - 1])) throw ConfigError(node.path(), "boundaries must be strictly ascending");
        }
        std::array<double, 6> b{};
        std::copy(values.begin(), values.end(), b.begin());
        config.loss_classes = b;
    }
    if (root.has("study")) {
        const auto s = root.at("study");
        simulate::ErrorRateStudy study;
        study.procedure = parse_procedure(s.at("procedure"));
        study.rate_ref = s.at("rate_ref").non_negative();
        study.rate_target_null = s.at("rate_target_null").non_negative();
        const auto alt = s.at("rate_target_alt");
        if (alt.value().is_array()) {
            config.alt_rates = alt.numbers();
            if (config.alt_rates.empty()) throw ConfigError(alt.path(), "must not be empty");
            for (std::size_t i = 0; i < config.alt_rates.size(); ++i) alt.index(i).non_negative();
        } else {
            config.alt_rates = {alt.non_negative()};
        }
        study.rate_target_alt = config.alt_rates.front();
        study.exposure_ref = s.has("exposure_ref") ? s.at("exposure_ref").positive() : 4.0;
        study.exposure_target = s.has("exposure_target") ? s.at("exposure_target").positive() : 1.0;
        if (s.has("decision_counted")) study.decision_counted = parse_counted(s.at("decision_counted"));
        if (config.replications) study.replications = *config.replications;
        try {
            study.validate();
        } catch (const DomainError& e) {
            throw ConfigError(s.path(), e.what());
        }
        config.study = std::move(study);
    }
    return config;
}

StudyConfig load_study_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("$", "cannot open config '" + path + "'");
    std::stringstream buffer;
    buffer << in.rdbuf();
    return parse_study_config(buffer.str());
}

simulate::SeverityModel parse_severity_model(const std::string& json_text) {
    json doc;
    try {
        doc = json::parse(json_text);
    } catch (const json::parse_error& e) {
        throw ConfigError("$", std::string("invalid JSON: ") + e.what());
    }
    return parse_severity(Node(doc, "$"));
}

}  // namespace safelevel::config
