#include "io.hpp"

#include "tvsh/errors.hpp"
#include "tvsh/llm_client.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace tvsh::cli {

namespace {

std::ofstream open_out(const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw FileError(path.string(), "cannot open for writing");
    return out;
}

std::ifstream open_in(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw FileError(path.string(), "cannot open for reading");
    return in;
}

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

double parse_double(const std::string& cell, const std::filesystem::path& path, std::size_t line) {
    const std::string t = trim(cell);
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
    if (t.empty() || ec != std::errc() || ptr != t.data() + t.size()) {
        throw InvalidInput(path.string() + ": line " + std::to_string(line) +
                           ": not a number: '" + t + "'");
    }
    return v;
}

}  // namespace

std::string format_number(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.9g", v);
    return buf;
}

Matrix read_matrix_csv(const std::filesystem::path& path) {
    auto in = open_in(path);
    std::vector<std::vector<double>> rows;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (trim(line).empty()) continue;
        std::vector<double> row;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) row.push_back(parse_double(cell, path, lineno));
        if (!line.empty() && line.back() == ',') {
            throw InvalidInput(path.string() + ": line " + std::to_string(lineno) + ": trailing comma");
        }
        if (!rows.empty() && row.size() != rows.front().size()) {
            throw InvalidInput(path.string() + ": line " + std::to_string(lineno) + ": expected " +
                               std::to_string(rows.front().size()) + " columns, found " +
                               std::to_string(row.size()));
        }
        rows.push_back(std::move(row));
    }
    if (rows.empty()) throw InvalidInput(path.string() + ": no data rows");
    Matrix M(static_cast<Index>(rows.size()), static_cast<Index>(rows.front().size()));
    for (std::size_t i = 0; i < rows.size(); ++i) {
        for (std::size_t j = 0; j < rows[i].size(); ++j) {
            M(static_cast<Index>(i), static_cast<Index>(j)) = rows[i][j];
        }
    }
    return M;
}

Matrix read_feature_csv(const std::filesystem::path& path) {
    return read_matrix_csv(path).transpose();
}

void write_matrix_csv(const std::filesystem::path& path, const Matrix& M) {
    auto out = open_out(path);
    for (Index i = 0; i < M.rows(); ++i) {
        for (Index j = 0; j < M.cols(); ++j) {
            if (j) out << ',';
            out << format_number(M(i, j));
        }
        out << '\n';
    }
    if (!out) throw FileError(path.string(), "write failed");
}

void write_feature_csv(const std::filesystem::path& path, const Matrix& X) {
    write_matrix_csv(path, X.transpose());
}

std::vector<int> read_int_lines(const std::filesystem::path& path) {
    auto in = open_in(path);
    std::vector<int> out;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const std::string t = trim(line);
        if (t.empty()) continue;
        int v = 0;
        const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
        if (ec != std::errc() || ptr != t.data() + t.size()) {
            throw InvalidInput(path.string() + ": line " + std::to_string(lineno) +
                               ": not an integer: '" + t + "'");
        }
        out.push_back(v);
    }
    return out;
}

void write_int_lines(const std::filesystem::path& path, const std::vector<int>& values) {
    auto out = open_out(path);
    for (int v : values) out << v << '\n';
    if (!out) throw FileError(path.string(), "write failed");
}

tvs::AdjacencySequence read_eq(const std::filesystem::path& path) {
    const auto bits = read_int_lines(path);
    try {
        return tvs::AdjacencySequence::from_ints(bits, tvs::Source::File);
    } catch (const InvalidInput& e) {
        throw InvalidInput(path.string() + ": " + e.what());
    }
}

void write_eq(const std::filesystem::path& path, const tvs::AdjacencySequence& eq) {
    std::vector<int> v(eq.bits().begin(), eq.bits().end());
    write_int_lines(path, v);
}

void write_audit(const std::filesystem::path& path, const tvs::AdjacencySequence& eq) {
    auto out = open_out(path);
    for (const auto& rec : eq.audit()) {
        nlohmann::json j = {{"index", rec.index},
                            {"verdict", tvs::to_string(rec.verdict)},
                            {"retries", rec.retries},
                            {"source", tvs::to_string(rec.source)},
                            {"raw_text_hash", llm::sha256_hex(rec.raw_text)}};
        if (rec.score) j["score"] = *rec.score;
        if (rec.flagged) j["flagged"] = true;
        if (rec.flipped) j["flipped"] = true;
        out << j.dump() << '\n';
    }
    if (!out) throw FileError(path.string(), "write failed");
}

void write_json(const std::filesystem::path& path, nlohmann::json j) {
    j["schema_version"] = kSchemaVersion;
    auto out = open_out(path);
    out << j.dump(2) << '\n';
    if (!out) throw FileError(path.string(), "write failed");
}

void ensure_dir(const std::filesystem::path& dir) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec || !std::filesystem::is_directory(dir)) {
        throw FileError(dir.string(), "cannot create output directory");
    }
}

std::vector<std::string> list_frames(const std::filesystem::path& dir) {
    if (!std::filesystem::is_directory(dir)) throw FileError(dir.string(), "frames directory not found");
    static const std::vector<std::string> exts = {".png", ".jpg", ".jpeg", ".webp", ".gif", ".bmp"};
    std::vector<std::string> out;
    for (const auto& entry : std::filesystem::directory_iterator(dir)) {
        if (!entry.is_regular_file()) continue;
        std::string ext = entry.path().extension().string();
        std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
        if (std::find(exts.begin(), exts.end(), ext) != exts.end()) out.push_back(entry.path().string());
    }
    std::sort(out.begin(), out.end(), [](const std::string& a, const std::string& b) {
        return std::filesystem::path(a).filename() < std::filesystem::path(b).filename();
    });
    return out;
}

}  // namespace tvsh::cli
