#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace tsc {

    // Throw IoError on failure.
    std::string readFile(const std::filesystem::path &path);
    void writeFile(const std::filesystem::path &path, std::string_view content);
    std::vector<std::string> readLines(const std::filesystem::path &path);

    std::string sha256Hex(std::string_view data);
    // 64-bit FNV-1a; stable across platforms, used to derive per-entity seeds.
    std::uint64_t stableHash(std::string_view data);

    std::string_view trim(std::string_view text);

}
