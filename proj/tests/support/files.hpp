#pragma once

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

namespace fixtures {

inline std::string read_file(const std::filesystem::path& p)
{
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

} // namespace fixtures
