#include "climrl/eval/records.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <nlohmann/json.hpp>
#include <sstream>

#include "climrl/error.hpp"

namespace climrl::eval {

namespace {

constexpr const char* kColumns = "experiment_id,algorithm,seed,global_step,episodic_return";
constexpr int kRecordVersion = 1;

std::string number(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

nlohmann::ordered_json header_json(const RunRecord& rec, bool with_time) {
  nlohmann::ordered_json h;
  h["format"] = "climrl-record";
  h["version"] = kRecordVersion;
  h["experiment_id"] = rec.experiment_id;
  h["algorithm"] = rec.algorithm;
  h["seed"] = rec.seed;
  h["config_digest"] = rec.config_digest;
  h["status"] = rec.status;
  h["total_steps"] = rec.total_steps;
  h["episodes"] = rec.points.size();
  if (with_time) h["wall_time"] = rec.wall_time;
  return h;
}

std::string body(const RunRecord& rec) {
  std::string out = std::string(kColumns) + "\n";
  const std::string prefix =
      rec.experiment_id + "," + rec.algorithm + "," + std::to_string(rec.seed) + ",";
  for (const EpisodePoint& p : rec.points) {
    out += prefix + std::to_string(p.global_step) + "," + number(p.episodic_return) + "\n";
  }
  return out;
}

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream in(line);
  while (std::getline(in, cur, sep)) out.push_back(cur);
  if (!line.empty() && line.back() == sep) out.emplace_back();
  return out;
}

}  // namespace

std::string format_record(const RunRecord& rec) {
  return "# " + header_json(rec, true).dump() + "\n" + body(rec);
}

std::string canonical_record(const RunRecord& rec) {
  return "# " + header_json(rec, false).dump() + "\n" + body(rec);
}

RunRecord parse_record(const std::string& text, const std::string& origin) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) || line.rfind("# ", 0) != 0) {
    throw IoError(origin + ": missing record header");
  }
  RunRecord rec;
  try {
    const auto h = nlohmann::json::parse(line.substr(2));
    if (h.at("format") != "climrl-record") throw IoError(origin + ": not a record file");
    if (h.at("version") != kRecordVersion) throw IoError(origin + ": unsupported record version");
    rec.experiment_id = h.at("experiment_id").get<std::string>();
    rec.algorithm = h.at("algorithm").get<std::string>();
    rec.seed = h.at("seed").get<std::uint64_t>();
    rec.config_digest = h.at("config_digest").get<std::string>();
    rec.status = h.at("status").get<std::string>();
    rec.total_steps = h.at("total_steps").get<long>();
    rec.wall_time = h.value("wall_time", 0.0);
  } catch (const nlohmann::json::exception& e) {
    throw IoError(origin + ": bad record header: " + e.what());
  }
  if (!std::getline(in, line) || line != kColumns) {
    throw IoError(origin + ": missing column header");
  }
  long last_step = 0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto f = split(line, ',');
    if (f.size() != 5) throw IoError(origin + ": malformed row '" + line + "'");
    if (f[0] != rec.experiment_id || f[1] != rec.algorithm || f[2] != std::to_string(rec.seed)) {
      throw IoError(origin + ": row does not match header");
    }
    EpisodePoint p;
    try {
      std::size_t used = 0;
      p.global_step = std::stol(f[3], &used);
      if (used != f[3].size()) throw std::invalid_argument(f[3]);
      p.episodic_return = std::stod(f[4], &used);
      if (used != f[4].size()) throw std::invalid_argument(f[4]);
    } catch (const std::exception&) {
      throw IoError(origin + ": malformed number in '" + line + "'");
    }
    if (p.global_step <= last_step) throw IoError(origin + ": global_step not increasing");
    last_step = p.global_step;
    rec.points.push_back(p);
  }
  return rec;
}

void write_text_atomic(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) {
    std::error_code ec;
    std::filesystem::create_directories(path.parent_path(), ec);
    if (ec) throw IoError("cannot create " + path.parent_path().string() + ": " + ec.message());
  }
  const std::filesystem::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + tmp.string());
    out << text;
    out.flush();
    if (!out) throw IoError("write failed for " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw IoError("cannot move " + tmp.string() + " to " + path.string());
}

void write_record(const std::filesystem::path& path, const RunRecord& rec) {
  write_text_atomic(path, format_record(rec));
}

RunRecord read_record(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open record " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_record(ss.str(), path.string());
}

std::string record_file_name(const std::string& algorithm, std::uint64_t seed) {
  return algorithm + "-seed" + std::to_string(seed) + ".csv";
}

std::vector<RunRecord> load_records(const std::filesystem::path& dir) {
  if (!std::filesystem::is_directory(dir)) throw IoError("no records: " + dir.string() + " is not a directory");
  std::vector<std::filesystem::path> files;
  for (const auto& e : std::filesystem::recursive_directory_iterator(dir)) {
    if (e.is_regular_file() && e.path().extension() == ".csv") {
      std::ifstream in(e.path());
      std::string first;
      std::getline(in, first);
      if (first.rfind("# ", 0) == 0 && first.find("climrl-record") != std::string::npos) {
        files.push_back(e.path());
      }
    }
  }
  if (files.empty()) throw IoError("no records found in " + dir.string());
  std::sort(files.begin(), files.end());
  std::vector<RunRecord> out;
  out.reserve(files.size());
  for (const auto& f : files) out.push_back(read_record(f));
  return out;
}

}  // namespace climrl::eval
