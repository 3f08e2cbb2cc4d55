#pragma once

#include "ppcr/experiments.hpp"

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

namespace ppcr {

/// Shortest-stable number text (%.12g); empty for absent values.
std::string format_number(double v);

/// CSV text for one table. mech_sweep and consensus give one table;
/// offline/online give one per algorithm, keyed by algorithm name.
struct CsvTable {
    std::string suffix;  // "" or "_<algorithm>"
    std::string text;
};
std::vector<CsvTable> csv_tables(const RunResult& r);

/// Line plot of the table's headline series; self-contained SVG.
std::string svg_plot(const RunResult& r, const std::string& suffix);

/// Writes <stem><suffix>.csv (and .svg) into dir, creating it. Returns the paths.
std::vector<std::filesystem::path> write_outputs(const RunResult& r, const std::filesystem::path& dir,
                                                 const std::string& stem, bool svg);

/// Rows where an estimate beats its bound by more than 3 standard errors.
/// Only estimates that the bound applies to are checked: every sweep row,
/// the final trajectory row of each algorithm, the final consensus row.
std::vector<std::string> dominance_violations(const RunResult& r);

void print_summary(const RunResult& r, std::ostream& out);

}  // namespace ppcr
