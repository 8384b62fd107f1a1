#pragma once

#include <chrono>
#include <cstdint>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <string>
#include <string_view>
#include <vector>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "b2opt/error.hpp"

#ifndef B2OPT_VERSION
#define B2OPT_VERSION "0.0.0"
#endif

namespace b2opt::bench {

inline constexpr int output_format_version = 1;

inline std::uint64_t fnv1a64(std::string_view bytes)
{
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ull;
    }
    return h;
}

inline std::string utc_timestamp()
{
    const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

/// Sidecar written next to every command's outputs. Wall-clock data lives here only, so the
/// CSV files themselves stay byte-identical across reruns.
struct Manifest {
    std::string command;
    std::string config_text;
    std::uint64_t master_seed = 0;
    std::vector<std::uint64_t> seeds;
    std::size_t threads = 1;
    std::vector<std::string> files;
    nlohmann::json extra = nlohmann::json::object();
    std::string started = utc_timestamp();

    nlohmann::json to_json(double wall_seconds) const
    {
        nlohmann::json j;
        j["format_version"] = output_format_version;
        j["code_version"] = B2OPT_VERSION;
        j["command"] = command;
        j["config_hash"] = fmt::format("fnv1a64:{:016x}", fnv1a64(config_text));
        j["master_seed"] = master_seed;
        j["seeds"] = seeds;
        j["threads"] = threads;
        j["files"] = files;
        j["started_utc"] = started;
        j["finished_utc"] = utc_timestamp();
        j["wall_seconds"] = wall_seconds;
        for (auto it = extra.begin(); it != extra.end(); ++it)
            j[it.key()] = it.value();
        return j;
    }

    void write(const std::filesystem::path& path, double wall_seconds) const
    {
        if (path.has_parent_path())
            std::filesystem::create_directories(path.parent_path());
        std::ofstream out(path, std::ios::trunc);
        out << to_json(wall_seconds).dump(2) << '\n';
        if (!out)
            throw IoError(fmt::format("failed writing '{}'", path.string()));
    }
};

} // namespace b2opt::bench
