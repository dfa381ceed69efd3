#include "lrshield/io_util.hpp"

#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "lrshield/errors.hpp"

namespace lrshield {

std::string read_text_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw ParseError("cannot open file: " + path.string());
    std::ostringstream out;
    out << in.rdbuf();
    if (in.bad())
        throw ParseError("error while reading file: " + path.string());
    return out.str();
}

void atomic_write_file(const std::filesystem::path& path, const std::string& content) {
    namespace fs = std::filesystem;
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    fs::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out)
            throw Error("cannot open temp file for writing: " + tmp.string());
        out.write(content.data(), static_cast<std::streamsize>(content.size()));
        out.flush();
        if (!out)
            throw Error("write failed: " + tmp.string());
    }
    std::error_code ec;
    fs::rename(tmp, path, ec);
    if (ec)
        throw Error("rename failed for " + path.string() + ": " + ec.message());
}

nlohmann::json read_json_file(const std::filesystem::path& path) {
    std::string text = read_text_file(path);
    try {
        return nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw ParseError("invalid JSON in " + path.string() + ": " + e.what());
    }
}

void write_json_file(const std::filesystem::path& path, const nlohmann::json& value, int indent) {
    atomic_write_file(path, value.dump(indent) + "\n");
}

std::uint64_t fnv1a64(const std::string& data) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : data) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::string hash_hex(std::uint64_t h) {
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return std::string(buf);
}

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    auto push = [&]() {
        std::size_t a = cur.find_first_not_of(" \t\r");
        std::size_t b = cur.find_last_not_of(" \t\r");
        out.push_back(a == std::string::npos ? std::string() : cur.substr(a, b - a + 1));
        cur.clear();
    };
    for (char ch : line) {
        if (ch == ',') push();
        else cur.push_back(ch);
    }
    push();
    return out;
}

} // namespace lrshield
