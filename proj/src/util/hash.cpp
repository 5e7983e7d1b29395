#include "tsc/util.h"
#include "tsc/errors.h"

#include <openssl/evp.h>

#include <cctype>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace tsc {

    std::string readFile(const std::filesystem::path &path) {
        std::ifstream in(path, std::ios::binary);
        if (!in)
            throw IoError("cannot open " + path.string());
        std::ostringstream ss;
        ss << in.rdbuf();
        return ss.str();
    }

    void writeFile(const std::filesystem::path &path, std::string_view content) {
        if (path.has_parent_path())
            std::filesystem::create_directories(path.parent_path());
        std::ofstream out(path, std::ios::binary | std::ios::trunc);
        if (!out)
            throw IoError("cannot write " + path.string());
        out.write(content.data(), static_cast<std::streamsize>(content.size()));
        if (!out)
            throw IoError("short write to " + path.string());
    }

    std::vector<std::string> readLines(const std::filesystem::path &path) {
        std::ifstream in(path);
        if (!in)
            throw IoError("cannot open " + path.string());
        std::vector<std::string> lines;
        std::string line;
        while (std::getline(in, line))
            lines.push_back(line);
        return lines;
    }

    std::string sha256Hex(std::string_view data) {
        unsigned char digest[EVP_MAX_MD_SIZE];
        unsigned int len = 0;
        if (EVP_Digest(data.data(), data.size(), digest, &len, EVP_sha256(), nullptr) != 1)
            throw Error("sha256 failed");
        std::string hex;
        hex.reserve(len * 2);
        char buf[3];
        for (unsigned int i = 0; i < len; i++) {
            std::snprintf(buf, sizeof buf, "%02x", digest[i]);
            hex += buf;
        }
        return hex;
    }

    std::string_view trim(std::string_view text) {
        while (!text.empty() && std::isspace(static_cast<unsigned char>(text.front())))
            text.remove_prefix(1);
        while (!text.empty() && std::isspace(static_cast<unsigned char>(text.back())))
            text.remove_suffix(1);
        return text;
    }

    std::uint64_t stableHash(std::string_view data) {
        std::uint64_t h = 14695981039346656037ull;
        for (unsigned char c : data) {
            h ^= c;
            h *= 1099511628211ull;
        }
        return h;
    }

}
