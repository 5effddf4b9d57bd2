#pragma once

#include "mts/bilevel.hpp"
#include "mts/casestudies.hpp"
#include "mts/integrate.hpp"
#include "mts/linalg.hpp"
#include "mts/stability.hpp"

#include <json.hpp>

#include <iosfwd>
#include <string>

namespace mts::io {

using Json = nlohmann::json;

/// printf("%.17g"): round-trips doubles and is stable across runs.
std::string format_number(double v);

Json to_json(const Spectrum& s);  // [[re, im], ...]
Json to_json(const Matrix& m);    // array of rows
Json to_json(const StabilityReport& r);
Json to_json(const CascadeMatrices& m);
Json to_json(const BlackStartMetrics& m);
Json to_json(const PointClassification& c);
Json trajectory_summary(const Trajectory& t);
Json iterate_summary(const IterateLog& log);

void write_trajectory_csv(std::ostream& os, const Trajectory& t);
void write_black_start_csv(std::ostream& os, const Trajectory& t, const BlackStartMetrics& m);
void write_iterate_csv(std::ostream& os, const IterateLog& log);

/// {"dims": [...], "blocks": [[A11, A12, ...], ...], "offsets": [...]};
/// a 1×1 block or length-1 offset may be written as a bare number.
LinearStackConfig parse_linear_config(const Json& j);
SystemStack parse_linear_stack(const Json& j);
Json to_json(const LinearStackConfig& c);

/// Writes `j` with two-space indentation and a trailing newline.
void write_json(std::ostream& os, const Json& j);

}  // namespace mts::io
