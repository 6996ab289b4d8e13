#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace structalign {

// 64-bit FNV-1a over the file bytes, as a hex string.
std::string content_hash(const std::filesystem::path& path);

// Written to <out>/manifest.json before a command starts doing work.
struct RunManifest {
    std::string command;
    nlohmann::json config;                              // fully resolved flags
    std::uint64_t seed = 0;
    std::map<std::string, std::string> input_hashes;    // path -> content hash
    std::string started_at;                             // ISO-8601 UTC
    std::string finished_at;                            // filled on success

    void write(const std::filesystem::path& dir) const;
    void write_file(const std::filesystem::path& file) const;

    // dir outputs get dir/manifest.json, file outputs a sibling file.
    static std::filesystem::path path_for(const std::filesystem::path& out, bool out_is_dir);
};

std::string utc_timestamp();

// Exclusive ownership of a run directory for the lifetime of a command.
class RunLock {
public:
    explicit RunLock(const std::filesystem::path& dir);
    ~RunLock();
    RunLock(const RunLock&) = delete;
    RunLock& operator=(const RunLock&) = delete;

private:
    std::filesystem::path lock_path_;
};

}  // namespace structalign
