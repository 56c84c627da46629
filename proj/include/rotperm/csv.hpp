#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "rotperm/panel.hpp"

namespace rotperm {

// Parses the occasion,cluster_id,unit,value schema (header required) and
// infers the plan from the memberships: n = |s_0|, m = n - |s_0 ∩ s_1|,
// r = common cluster size. Throws ParseError with line numbers; does not
// validate panel invariants.
RotatingPanelSample parse_csv(std::istream& in, const std::string& name);
RotatingPanelSample parse_csv_file(const std::string& path);

// parse_csv followed by validate(); throws ParseError listing violations.
RotatingPanelSample ingest_csv(const std::string& path);

void emit_csv(const RotatingPanelSample& sample, std::ostream& out);
void emit_csv_file(const RotatingPanelSample& sample,
                   const std::string& path);

// Degenerate-geometry note for datasets where Step I has nothing to swap.
std::optional<std::string> overlap_warning(const RotatingPanelSample& sample);

// One positive value per line; '#' comments and blank lines ignored.
std::vector<double> load_population(const std::string& path);

}  // namespace rotperm
