#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace drivenmem {

/// SHA-1 of "blob <size>\0" + content, as git hashes a file.
std::string git_blob_hash(const std::string& content);
std::string file_blob_hash(const std::string& path);

struct OutputFile {
    std::string path;  ///< relative to the output directory
    std::string hash;  ///< git blob hash of the written bytes
};

/// Record of one CLI run. Carries nothing time- or host-dependent, so the
/// same inputs give a byte-identical manifest.
struct RunManifest {
    std::string command;
    std::string config_hash;
    std::string resolved_config;  ///< canonical serialization
    std::uint64_t seed = 0;
    std::vector<OutputFile> outputs;

    /// Hashes `dir/name` and appends it to the output list.
    void add_output(const std::string& dir, const std::string& name);
    [[nodiscard]] std::string to_json() const;
    void write(const std::string& path) const;
};

}  // namespace drivenmem
