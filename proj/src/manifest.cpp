#include "structalign/manifest.hpp"

#include <chrono>
#include <cstdio>
#include <fstream>

#include "structalign/errors.hpp"
#include "structalign/rng.hpp"

namespace structalign {

std::string content_hash(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot hash missing file " + path.string());
    std::uint64_t h = 0xcbf29ce484222325ULL;
    char buf[8192];
    while (in.read(buf, sizeof(buf)) || in.gcount() > 0) {
        for (std::streamsize i = 0; i < in.gcount(); ++i) {
            h ^= static_cast<unsigned char>(buf[i]);
            h *= 0x100000001b3ULL;
        }
    }
    char out[20];
    std::snprintf(out, sizeof(out), "%016llx", static_cast<unsigned long long>(h));
    return out;
}

std::string utc_timestamp() {
    const auto now = std::chrono::system_clock::now();
    const std::time_t t = std::chrono::system_clock::to_time_t(now);
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

void RunManifest::write(const std::filesystem::path& dir) const {
    write_file(dir / "manifest.json");
}

void RunManifest::write_file(const std::filesystem::path& file) const {
    nlohmann::json j;
    j["command"] = command;
    j["config"] = config;
    j["seed"] = seed;
    j["input_hashes"] = input_hashes;
    j["started_at"] = started_at;
    if (!finished_at.empty()) j["finished_at"] = finished_at;
    std::ofstream out(file);
    if (!out) throw DataError("cannot write manifest " + file.string());
    out << j.dump(2) << "\n";
}

std::filesystem::path RunManifest::path_for(const std::filesystem::path& out, bool out_is_dir) {
    if (out_is_dir) return out / "manifest.json";
    std::filesystem::path p = out;
    p += ".manifest.json";
    return p;
}

RunLock::RunLock(const std::filesystem::path& dir) : lock_path_(dir / ".lock") {
    std::filesystem::create_directories(dir);
    FILE* f = std::fopen(lock_path_.c_str(), "wx");
    if (!f)
        throw DataError("run directory " + dir.string() +
                        " is locked by another command (remove .lock if stale)");
    std::fclose(f);
}

RunLock::~RunLock() {
    std::error_code ec;
    std::filesystem::remove(lock_path_, ec);
}

}  // namespace structalign
