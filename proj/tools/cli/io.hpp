#pragma once

#include "tvsh/core.hpp"
#include "tvsh/tvs.hpp"

#include <nlohmann/json.hpp>

#include <filesystem>
#include <string>
#include <vector>

namespace tvsh::cli {

inline constexpr int kSchemaVersion = 1;

/// Headerless numeric CSV, one matrix row per line. Ragged rows and non-numeric
/// cells raise InvalidInput naming the 1-based line.
Matrix read_matrix_csv(const std::filesystem::path& path);
/// Rows = frames on disk, returned as D x N.
Matrix read_feature_csv(const std::filesystem::path& path);
/// 9 significant digits.
void write_matrix_csv(const std::filesystem::path& path, const Matrix& M);
void write_feature_csv(const std::filesystem::path& path, const Matrix& X);

/// One integer per line; blank lines are skipped.
std::vector<int> read_int_lines(const std::filesystem::path& path);
void write_int_lines(const std::filesystem::path& path, const std::vector<int>& values);

tvs::AdjacencySequence read_eq(const std::filesystem::path& path);
void write_eq(const std::filesystem::path& path, const tvs::AdjacencySequence& eq);

/// One JSON object per line: index, verdict, retries, source, raw_text_hash, plus
/// score, flagged and flipped when set.
void write_audit(const std::filesystem::path& path, const tvs::AdjacencySequence& eq);

/// Pretty-printed with schema_version inserted.
void write_json(const std::filesystem::path& path, nlohmann::json j);

void ensure_dir(const std::filesystem::path& dir);

/// Regular files with an image extension, sorted by file name.
std::vector<std::string> list_frames(const std::filesystem::path& dir);

/// Shortest decimal with 9 significant digits.
std::string format_number(double v);

}  // namespace tvsh::cli
