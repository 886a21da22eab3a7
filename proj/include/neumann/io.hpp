#pragma once

#include "neumann/domain.hpp"
#include "neumann/norms.hpp"
#include "neumann/solver.hpp"
#include "neumann/verify.hpp"

#include <json.hpp>

#include <optional>
#include <string>

namespace neumann {

using Json = nlohmann::ordered_json;

/// Problem description as read from a problem file:
///   {"domain": {...}, "f": "...", "g": "...", "alpha": 0.5,
///    "strategy": "direct_augmented", "compat_policy": "reject", "exact": "..."}
/// Every field is optional; missing ones keep their defaults.
struct ProblemConfig {
    DomainSpec domain = DomainSpec::disk();
    Resolution resolution;
    std::string f = "0";
    std::string g = "0";
    std::optional<std::string> exact;
    double alpha = 0.5;
    Strategy strategy = Strategy::direct_augmented;
    CompatPolicy compat = CompatPolicy::reject;
};

/// {"kind": "disk" | "star" | "interval", "a", "b",
///  "radius_coeffs": {"a0", "cos": [...], "sin": [...]}, "resolution": [n_r, n_theta]}
Json to_json(const DomainSpec& spec, const Resolution& res);
/// Throws ConfigError on malformed input. `res` is updated only when the
/// object carries a "resolution" entry.
DomainSpec domain_from_json(const Json& j, Resolution* res = nullptr);

ProblemConfig problem_from_json(const Json& j);
ProblemConfig load_problem(const std::string& path);

Json to_json(const HolderReport& r);
/// Solve summary; `exact` (if given) adds the C0 error against the mean-zero
/// version of the exact solution.
Json to_json(const SolveReport& r, const std::optional<GridFunction>& exact = std::nullopt);

/// Report body plus a separate "metadata" object holding everything that
/// depends on wall-clock time.
Json to_json(const EstimateReport& r);
/// One row per instance per level.
std::string estimate_csv(const Json& report);
/// The report without its "metadata" object, for reproducibility comparisons.
Json strip_metadata(Json report);

Json read_json_file(const std::string& path);
/// Writes to a temporary sibling and renames it over `path`.
void write_atomic(const std::string& path, const std::string& content);

}  // namespace neumann
