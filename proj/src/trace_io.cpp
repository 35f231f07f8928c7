#include "cmfbo/trace_io.hpp"

#include <charconv>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <vector>

#include <nlohmann/json.hpp>

#include "cmfbo/errors.hpp"

namespace cmfbo {

namespace {

constexpr std::string_view kMagic = "# cmfbo-trace v1";
constexpr std::string_view kMetaPrefix = "# meta ";

std::vector<std::string_view> split(std::string_view line, char sep) {
  std::vector<std::string_view> out;
  std::size_t begin = 0;
  while (true) {
    const std::size_t end = line.find(sep, begin);
    out.push_back(line.substr(begin, end == std::string_view::npos ? end : end - begin));
    if (end == std::string_view::npos) break;
    begin = end + 1;
  }
  return out;
}

[[noreturn]] void malformed(const std::string& what) {
  throw std::runtime_error("malformed trace: " + what);
}

}  // namespace

std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

double parse_double(std::string_view text) {
  double v = 0.0;
  const auto res = std::from_chars(text.data(), text.data() + text.size(), v);
  if (res.ec != std::errc() || res.ptr != text.data() + text.size())
    throw std::runtime_error("not a number: '" + std::string(text) + "'");
  return v;
}

std::string serialize_trace(const OptimizationTrace& trace) {
  nlohmann::json dims = nlohmann::json::array();
  for (const auto& d : trace.dims) dims.push_back({d.name, d.lower, d.upper});
  nlohmann::json meta = {
      {"method", trace.method},
      {"seed", trace.seed},
      {"budget", trace.budget},
      {"z_min", trace.z_min},
      {"z_max", trace.z_max},
      {"incumbent_rule",
       trace.incumbent_rule == IncumbentRule::kTopFidelity ? "top_fidelity" : "any_fidelity"},
      {"dims", dims},
      {"config", trace.config_snapshot.empty() ? nlohmann::json::object()
                                               : nlohmann::json::parse(trace.config_snapshot)},
  };

  std::ostringstream out;
  out << kMagic << '\n' << kMetaPrefix << meta.dump() << '\n';
  out << "index,z";
  for (std::size_t i = 0; i < trace.dims.size(); ++i) out << ",x" << i;
  out << ",y,cost,cumulative_cost,warm_start_source_index,wall_ms,status\n";
  for (std::size_t i = 0; i < trace.queries.size(); ++i) {
    const auto& q = trace.queries[i];
    out << i << ',' << format_double(q.z);
    for (Eigen::Index k = 0; k < q.x.size(); ++k) out << ',' << format_double(q.x[k]);
    out << ',' << format_double(q.y) << ',' << format_double(q.cost) << ','
        << format_double(q.cumulative_cost) << ',' << q.warm_start_source << ','
        << format_double(q.wall_ms) << ',' << (q.failed ? "failed" : "ok") << '\n';
  }
  return out.str();
}

OptimizationTrace parse_trace(std::string_view text) {
  std::vector<std::string_view> lines = split(text, '\n');
  if (!lines.empty() && lines.back().empty()) lines.pop_back();
  if (lines.size() < 3) malformed("missing header");
  if (lines[0] != kMagic) malformed("unsupported version line '" + std::string(lines[0]) + "'");
  if (lines[1].substr(0, kMetaPrefix.size()) != kMetaPrefix) malformed("missing meta line");

  OptimizationTrace trace;
  try {
    const auto meta = nlohmann::json::parse(lines[1].substr(kMetaPrefix.size()));
    trace.method = meta.at("method").get<std::string>();
    trace.seed = meta.at("seed").get<std::uint64_t>();
    trace.budget = meta.at("budget").get<double>();
    trace.z_min = meta.at("z_min").get<double>();
    trace.z_max = meta.at("z_max").get<double>();
    const auto rule = meta.at("incumbent_rule").get<std::string>();
    if (rule == "top_fidelity") {
      trace.incumbent_rule = IncumbentRule::kTopFidelity;
    } else if (rule == "any_fidelity") {
      trace.incumbent_rule = IncumbentRule::kAnyFidelity;
    } else {
      malformed("unknown incumbent rule '" + rule + "'");
    }
    for (const auto& d : meta.at("dims"))
      trace.dims.push_back({d.at(0).get<std::string>(), d.at(1).get<double>(), d.at(2).get<double>()});
    const auto& config = meta.at("config");
    trace.config_snapshot = config.dump();
  } catch (const nlohmann::json::exception& e) {
    malformed(std::string("meta line: ") + e.what());
  }

  const std::size_t d = trace.dims.size();
  const std::size_t n_cols = d + 8;
  if (split(lines[2], ',').size() != n_cols) malformed("column header does not match dimension");

  for (std::size_t li = 3; li < lines.size(); ++li) {
    const auto cols = split(lines[li], ',');
    const std::string where = "row " + std::to_string(li - 3);
    if (cols.size() != n_cols) malformed(where + " has wrong column count");
    try {
      if (parse_double(cols[0]) != static_cast<double>(li - 3)) malformed(where + " index mismatch");
      QueryRecord q;
      q.z = parse_double(cols[1]);
      q.x.resize(static_cast<Eigen::Index>(d));
      for (std::size_t k = 0; k < d; ++k) q.x[static_cast<Eigen::Index>(k)] = parse_double(cols[2 + k]);
      q.y = parse_double(cols[2 + d]);
      q.cost = parse_double(cols[3 + d]);
      const double stored_cumulative = parse_double(cols[4 + d]);
      q.warm_start_source = static_cast<int>(parse_double(cols[5 + d]));
      q.wall_ms = parse_double(cols[6 + d]);
      if (cols[7 + d] == "failed") {
        q.failed = true;
      } else if (cols[7 + d] != "ok") {
        malformed(where + " has unknown status");
      }
      trace.append(std::move(q));
      if (trace.queries.back().cumulative_cost != stored_cumulative)
        malformed(where + " cumulative cost does not match the running sum");
    } catch (const std::runtime_error& e) {
      if (std::string_view(e.what()).starts_with("malformed trace")) throw;
      malformed(where + ": " + e.what());
    }
  }
  return trace;
}

void write_file_atomic(const std::filesystem::path& path, const std::string& contents) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + tmp.string());
    out << contents;
    out.flush();
    if (!out) throw std::runtime_error("write failed for " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_trace(const std::filesystem::path& path, const OptimizationTrace& trace) {
  write_file_atomic(path, serialize_trace(trace));
}

OptimizationTrace read_trace(const std::filesystem::path& path) {
  try {
    return parse_trace(read_file(path));
  } catch (const std::runtime_error& e) {
    throw std::runtime_error(path.string() + ": " + e.what());
  }
}

}  // namespace cmfbo
