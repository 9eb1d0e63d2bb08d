#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

namespace pmsde {

/// CSV writer with a fixed numeric format (17 significant digits) so reruns
/// with the same seed produce byte-identical bodies.
class CsvWriter {
public:
    explicit CsvWriter(std::vector<std::string> header);

    void add_row(const std::vector<double>& row);
    std::string str() const;

private:
    std::string body_;
    std::size_t columns_;
};

std::string format_g17(double v);

std::uint64_t fnv1a64(const std::string& bytes);

/// Tracks every artifact written into one output directory and finishes with
/// a manifest.json carrying the config echo and per-file content hashes.
class ArtifactSink {
public:
    explicit ArtifactSink(std::filesystem::path out_dir);

    void write_text(const std::string& name, const std::string& content);
    void write_json(const std::string& name, const nlohmann::json& doc);
    void write_binary(const std::string& name, const std::vector<double>& column_major);

    void write_manifest(const nlohmann::json& config_echo, double wall_time_s,
                        const nlohmann::json& extra);

    const std::filesystem::path& dir() const { return dir_; }

private:
    std::filesystem::path dir_;
    std::vector<std::pair<std::string, std::uint64_t>> entries_;
};

} // namespace pmsde
