#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "climrl/record.hpp"

namespace climrl::eval {

// Record file layout: one "# {json}" header line, a CSV column header, then
// one row per completed episode:
//   experiment_id,algorithm,seed,global_step,episodic_return
// Returns are printed with 17 significant digits so they round-trip exactly.
std::string format_record(const RunRecord& rec);
RunRecord parse_record(const std::string& text, const std::string& origin = "<memory>");

// Everything except the wall time; equal for repeated deterministic runs.
std::string canonical_record(const RunRecord& rec);

// Writes through a temporary file and rename, so readers never see a partial
// record.
void write_record(const std::filesystem::path& path, const RunRecord& rec);
RunRecord read_record(const std::filesystem::path& path);

// "<algorithm>-seed<seed>.csv"
std::string record_file_name(const std::string& algorithm, std::uint64_t seed);

// Every *.csv record below `dir`, recursively, in path order. Throws IoError
// when the directory does not exist or holds no records.
std::vector<RunRecord> load_records(const std::filesystem::path& dir);

void write_text_atomic(const std::filesystem::path& path, const std::string& text);

}  // namespace climrl::eval
