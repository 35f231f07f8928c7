#pragma once

#include <filesystem>
#include <string>
#include <string_view>

#include "cmfbo/optimizer.hpp"

namespace cmfbo {

/// Shortest decimal text that parses back to the same double.
std::string format_double(double v);
double parse_double(std::string_view text);

/// Trace text format, version 1:
///
///   # cmfbo-trace v1
///   # meta {"method":...,"seed":...,"budget":...,"z_min":...,"z_max":...,
///   #       "incumbent_rule":...,"dims":[[name,lower,upper],...],"config":{...}}
///   index,z,x0,...,x{d-1},y,cost,cumulative_cost,warm_start_source_index,wall_ms,status
///   0,0,0.25,...,ok
///
/// x and z are stored normalized to [0, 1]; status is "ok" or "failed".
/// The incumbent history is recomputed on parse.
std::string serialize_trace(const OptimizationTrace& trace);
OptimizationTrace parse_trace(std::string_view text);

/// Writes to a temporary sibling and renames it into place.
void write_file_atomic(const std::filesystem::path& path, const std::string& contents);
std::string read_file(const std::filesystem::path& path);

void write_trace(const std::filesystem::path& path, const OptimizationTrace& trace);
OptimizationTrace read_trace(const std::filesystem::path& path);

}  // namespace cmfbo
