#include "plumeseg/io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <system_error>

#include "plumeseg/common.hpp"

namespace plumeseg::io {

std::string format_double(double value) {
    if (std::isnan(value)) {
        return "nan";
    }
    if (std::isinf(value)) {
        return value > 0 ? "inf" : "-inf";
    }
    char buf[64];
    auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), value);
    if (ec != std::errc{}) {
        throw std::logic_error("format_double: buffer too small");
    }
    return std::string(buf, end);
}

std::string format_int(std::int64_t value) {
    return std::to_string(value);
}

double parse_double(std::string_view text, std::string_view what) {
    text = trim(text);
    if (text == "nan" || text == "NaN" || text == "NAN") {
        return std::nan("");
    }
    double value = 0.0;
    const char* first = text.data();
    const char* last = text.data() + text.size();
    if (!text.empty() && *first == '+') {
        ++first;
    }
    auto [ptr, ec] = std::from_chars(first, last, value);
    if (text.empty() || ec != std::errc{} || ptr != last) {
        throw ValidationError("invalid " + std::string(what) + ": '" + std::string(text) + "'");
    }
    return value;
}

std::int64_t parse_int(std::string_view text, std::string_view what) {
    text = trim(text);
    std::int64_t value = 0;
    auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
    if (text.empty() || ec != std::errc{} || ptr != text.data() + text.size()) {
        throw ValidationError("invalid " + std::string(what) + ": '" + std::string(text) + "'");
    }
    return value;
}

std::vector<std::string_view> split(std::string_view line, char sep) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    while (true) {
        const auto pos = line.find(sep, start);
        if (pos == std::string_view::npos) {
            out.push_back(line.substr(start));
            break;
        }
        out.push_back(line.substr(start, pos - start));
        start = pos + 1;
    }
    return out;
}

std::string_view trim(std::string_view text) {
    const auto ws = " \t\r\n";
    const auto b = text.find_first_not_of(ws);
    if (b == std::string_view::npos) {
        return {};
    }
    const auto e = text.find_last_not_of(ws);
    return text.substr(b, e - b + 1);
}

void CsvTable::require_header(const std::vector<std::string>& expected, std::string_view source) const {
    if (header != expected) {
        std::string want;
        for (std::size_t i = 0; i < expected.size(); ++i) {
            want += (i ? "," : "") + expected[i];
        }
        throw ValidationError(std::string(source) + ": expected header '" + want + "'");
    }
}

CsvTable parse_csv(std::string_view text, std::string_view source) {
    CsvTable table;
    bool have_header = false;
    std::size_t line_no = 0;
    for (auto raw : split(text, '\n')) {
        ++line_no;
        if (!raw.empty() && raw.back() == '\r') {
            raw.remove_suffix(1);
        }
        if (raw.empty()) {
            continue;
        }
        std::vector<std::string> fields;
        for (auto f : split(raw, ',')) {
            fields.emplace_back(trim(f));
        }
        if (!have_header) {
            table.header = std::move(fields);
            have_header = true;
            continue;
        }
        if (fields.size() != table.header.size()) {
            throw ValidationError(std::string(source) + ":" + std::to_string(line_no) + ": expected " +
                                  std::to_string(table.header.size()) + " fields, got " +
                                  std::to_string(fields.size()));
        }
        table.rows.push_back(std::move(fields));
    }
    if (!have_header) {
        throw ValidationError(std::string(source) + ": missing header");
    }
    return table;
}

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw IoError("cannot open '" + path.string() + "'");
    }
    std::ostringstream ss;
    ss << in.rdbuf();
    if (in.bad()) {
        throw IoError("read failed for '" + path.string() + "'");
    }
    return ss.str();
}

void write_file_atomic(const std::filesystem::path& path, std::string_view content) {
    if (path.has_parent_path()) {
        std::error_code ec;
        std::filesystem::create_directories(path.parent_path(), ec);
    }
    auto tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) {
            throw IoError("cannot write '" + tmp.string() + "'");
        }
        out.write(content.data(), static_cast<std::streamsize>(content.size()));
        out.flush();
        if (!out) {
            std::error_code ignored;
            std::filesystem::remove(tmp, ignored);
            throw IoError("write failed for '" + tmp.string() + "'");
        }
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) {
        std::filesystem::remove(tmp, ec);
        throw IoError("cannot rename onto '" + path.string() + "'");
    }
}

}  // namespace plumeseg::io
