#pragma once

#include <optional>
#include <string>
#include <vector>

#include "lfm/panel.hpp"
#include "lfm/propensity.hpp"

namespace lfm::csv {

/// Wide panel layout: header row `unit,<time ids...>`, one row per unit with
/// the unit id first. Missing entries are an empty cell or the literal `NA`.
/// Lines starting with `#` are skipped.
MaskedPanel read_panel_wide(const std::string& path);

/// Long layout: header `unit,time,value`; a missing entry simply has no row.
/// Unit and time orderings follow first appearance.
MaskedPanel read_panel_long(const std::string& path);

/// Writes the wide layout. Cells where `mask` is 0 are empty; a NaN value
/// under mask 1 is written as NA. `header_comment`, when nonempty, becomes a
/// leading `# ...` line.
void write_panel_wide(const std::string& path, const Matrix& values, const MaskMatrix& mask,
                      const std::vector<std::string>& unit_ids,
                      const std::vector<std::string>& time_ids,
                      const std::string& header_comment = {});

/// Covariates: header `unit,<names...>`; rows matched to the panel's units by
/// id. `discrete` flags one entry per covariate column.
CovariateVector read_covariates(const std::string& path,
                                const std::vector<std::string>& unit_ids,
                                const std::vector<bool>& discrete);

/// Adoption schedule: header `unit,adopt_time`; adopt_time is a time id from
/// the panel (first treated period) or the literal NEVER.
std::vector<Index> read_schedule(const std::string& path,
                                 const std::vector<std::string>& unit_ids,
                                 const std::vector<std::string>& time_ids);

/// Headerless numeric matrix (used for Z weight matrices).
Matrix read_matrix(const std::string& path);

std::vector<std::string> split_line(const std::string& line);

}  // namespace lfm::csv
