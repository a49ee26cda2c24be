#include "drivenmem/manifest.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <openssl/sha.h>

#include "json.hpp"

#include "drivenmem/error.hpp"

namespace drivenmem {

std::string git_blob_hash(const std::string& content) {
    const std::string data = "blob " + std::to_string(content.size()) + '\0' + content;
    unsigned char digest[SHA_DIGEST_LENGTH];
    SHA1(reinterpret_cast<const unsigned char*>(data.data()), data.size(), digest);
    std::string out;
    char hex[3];
    for (unsigned char b : digest) {
        std::snprintf(hex, sizeof hex, "%02x", b);
        out += hex;
    }
    return out;
}

std::string file_blob_hash(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ValidationError("cannot read " + path);
    std::ostringstream os;
    os << in.rdbuf();
    return git_blob_hash(os.str());
}

void RunManifest::add_output(const std::string& dir, const std::string& name) {
    outputs.push_back({name, file_blob_hash((std::filesystem::path(dir) / name).string())});
}

std::string RunManifest::to_json() const {
    nlohmann::ordered_json j;
    j["command"] = command;
    j["config_hash"] = config_hash;
    j["seed"] = seed;
    j["resolved_config"] = resolved_config;
    auto outs = nlohmann::ordered_json::array();
    for (const auto& o : outputs) outs.push_back({{"path", o.path}, {"hash", o.hash}});
    j["outputs"] = outs;
    return j.dump(2) + "\n";
}

void RunManifest::write(const std::string& path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ValidationError("cannot write " + path);
    out << to_json();
}

}  // namespace drivenmem
