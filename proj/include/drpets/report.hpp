#pragma once

#include <span>
#include <string>
#include <vector>

#include "drpets/bench.hpp"

namespace drpets {

inline constexpr const char* kCsvHeader = "param,mean_reward,stderr,n_seeds,algorithm,epsilon,p";

/// Header line plus one line per row, floats with 17 significant digits.
std::string format_csv(std::span<const SweepRow> rows);
/// Inverse of format_csv; throws InvalidInput on a bad header or malformed line.
std::vector<SweepRow> parse_csv(const std::string& text);

/// Line plot of mean reward against the parameter, one polyline per (algorithm, epsilon, p)
/// series with a shaded band of +-stderr/2.
std::string render_svg(std::span<const SweepRow> rows, const std::string& x_label);

/// One JSON object per line: an "episode" record per episode and a "point" record per grid
/// value carrying the failure count.
std::string format_episode_log(const SweepResult& result);

/// Writes csv_path and, when non-empty, svg_path. Throws IoError.
void export_result(std::span<const SweepRow> rows, const std::string& csv_path,
                   const std::string& svg_path = {}, const std::string& x_label = "param");

}  // namespace drpets
