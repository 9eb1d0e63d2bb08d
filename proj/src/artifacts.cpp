#include "pmsde/artifacts.hpp"

#include <cstdio>
#include <cstring>
#include <fstream>

#include <nlohmann/json.hpp>

#include "pmsde/errors.hpp"

namespace pmsde {

std::string format_g17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

CsvWriter::CsvWriter(std::vector<std::string> header) : columns_(header.size()) {
    for (std::size_t i = 0; i < header.size(); ++i) {
        if (i) body_ += ',';
        body_ += header[i];
    }
    body_ += '\n';
}

void CsvWriter::add_row(const std::vector<double>& row) {
    if (row.size() != columns_) throw ValidationError("CsvWriter: column count mismatch");
    for (std::size_t i = 0; i < row.size(); ++i) {
        if (i) body_ += ',';
        body_ += format_g17(row[i]);
    }
    body_ += '\n';
}

std::string CsvWriter::str() const { return body_; }

std::uint64_t fnv1a64(const std::string& bytes) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

ArtifactSink::ArtifactSink(std::filesystem::path out_dir) : dir_(std::move(out_dir)) {
    std::filesystem::create_directories(dir_);
}

void ArtifactSink::write_text(const std::string& name, const std::string& content) {
    std::ofstream out(dir_ / name, std::ios::binary);
    if (!out) throw NumericalError("ArtifactSink: cannot open " + (dir_ / name).string());
    out << content;
    entries_.emplace_back(name, fnv1a64(content));
}

void ArtifactSink::write_json(const std::string& name, const nlohmann::json& doc) {
    write_text(name, doc.dump(2) + "\n");
}

void ArtifactSink::write_binary(const std::string& name, const std::vector<double>& column_major) {
    std::string bytes(reinterpret_cast<const char*>(column_major.data()),
                      column_major.size() * sizeof(double));
    std::ofstream out(dir_ / name, std::ios::binary);
    if (!out) throw NumericalError("ArtifactSink: cannot open " + (dir_ / name).string());
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    entries_.emplace_back(name, fnv1a64(bytes));
}

void ArtifactSink::write_manifest(const nlohmann::json& config_echo, double wall_time_s,
                                  const nlohmann::json& extra) {
    nlohmann::json manifest;
    manifest["config"] = config_echo;
    manifest["library_version"] = "0.1.0";
    manifest["wall_time_s"] = wall_time_s;
    for (const auto& [key, value] : extra.items()) manifest[key] = value;
    nlohmann::json files = nlohmann::json::array();
    for (const auto& [name, hash] : entries_) {
        char hex[20];
        std::snprintf(hex, sizeof(hex), "%016llx", static_cast<unsigned long long>(hash));
        files.push_back({{"file", name}, {"fnv1a64", hex}});
    }
    manifest["artifacts"] = files;
    std::ofstream out(dir_ / "manifest.json", std::ios::binary);
    out << manifest.dump(2) << "\n";
}

} // namespace pmsde
