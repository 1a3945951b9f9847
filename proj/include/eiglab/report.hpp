#pragma once

#include "eiglab/config.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace eiglab {

inline constexpr const char* tool_name = "eiglab";
inline constexpr const char* tool_version = "0.1.0";

// Fixed 17-significant-digit rendering used for every numeric cell, so equal
// inputs produce byte-identical tables.
std::string format_g17(double v);

// FNV-1a 64-bit content hash as 16 hex digits.
std::string content_hash_hex(const std::string& bytes);

// Thread budget honored by the inner tasks: EIGLAB_THREADS when set to a
// positive integer, otherwise the hardware concurrency.
int resolve_threads();

// Collects the files produced by one command under a single directory and
// writes the closing manifest.
class ArtifactWriter {
public:
    ArtifactWriter(std::string directory, bool csv_enabled, bool json_enabled);

    const std::string& directory() const { return directory_; }

    // Unconditional text artifact.
    void write_text(const std::string& name, const std::string& content);
    // Numeric table; honors the CSV format flag.
    void write_csv(const std::string& name, const std::vector<std::string>& header,
                   const std::vector<std::vector<std::string>>& rows);
    // Nested report; honors the JSON format flag.
    void write_json(const std::string& name, const std::string& content);

    struct Entry {
        std::string name;
        std::uint64_t bytes = 0;
        std::string hash;
    };
    const std::vector<Entry>& entries() const { return entries_; }

    // manifest.json: tool version, command, config provenance, seed, thread
    // budget, and one entry per file written above.
    void write_manifest(const std::string& command, const std::string& config_path,
                        const std::string& config_hash, std::uint64_t seed, int threads);

private:
    std::string directory_;
    bool csv_enabled_;
    bool json_enabled_;
    std::vector<Entry> entries_;
};

// Names accepted by run_task, in dispatch order.
const std::vector<std::string>& command_names();

// Executes one command against a validated configuration, writing artifacts
// under the configured output directory. Returns the process exit code:
// 0 success, 1 task failure (partial artifacts are kept), 2 config failure.
int run_task(const std::string& command, const RunConfig& config,
             const std::string& config_path);

} // namespace eiglab
