#pragma once

#include "ppcr/bounds.hpp"
#include "ppcr/errors.hpp"
#include "ppcr/experiments.hpp"

#include <filesystem>
#include <string>
#include <vector>

namespace ppcr {

/// Parse failure; what() names the offending field.
class ConfigError : public InvalidInput {
public:
    using InvalidInput::InvalidInput;
};

/// "start:step:stop" (inclusive of stop up to rounding) -> grid values.
std::vector<double> parse_grid(const std::string& text);

Graph parse_graph_json(const std::string& text);
Graph load_graph(const std::filesystem::path& path);

/// Scenario JSON -> spec. A string-valued "graph" is a path relative to
/// base_dir. Unknown keys are rejected.
ExperimentSpec parse_scenario_json(const std::string& text, const std::filesystem::path& base_dir = {});
ExperimentSpec load_scenario(const std::filesystem::path& path);

/// Canonical JSON of a spec (graph inlined, generators kept as generators).
std::string scenario_to_json(const ExperimentSpec& spec);

/// Hex SHA-1 of the canonical JSON, framed like a git blob.
std::string spec_content_hash(const ExperimentSpec& spec);

/// Bound query: a single system or a list of sensor blocks.
struct BoundQuery {
    std::vector<SensorBlock> blocks;
};

/// {"H": ..., "S": scalar | diagonal list | matrix, "sigma_w": number | "Sigma_w": matrix}
/// or {"sensors": [ {...}, ... ]}.
BoundQuery parse_bound_json(const std::string& text);
BoundQuery load_bound_query(const std::filesystem::path& path);

struct BoundAnswer {
    bool identifiable = false;
    PsdMatrix pp_fisher;
    std::optional<PsdMatrix> sigma_ppcr;
    double trace() const;
};

BoundAnswer evaluate_bound(const BoundQuery& q);

/// {identifiable, pp_fisher, sigma_ppcr (only when identifiable), trace}.
std::string bound_to_json(const BoundAnswer& a);

std::string read_text_file(const std::filesystem::path& path);

}  // namespace ppcr
