#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string>
#include <string_view>
#include <type_traits>
#include <vector>

#include <fmt/format.h>

#include "b2opt/error.hpp"

namespace b2opt::bench {

/// Shortest text that parses back to the same double; non-finite values as nan/inf/-inf.
inline std::string format_double(double v) { return fmt::format("{}", v); }

inline std::string to_cell(std::string_view s) { return std::string(s); }
inline std::string to_cell(const std::string& s) { return s; }
inline std::string to_cell(const char* s) { return s; }
inline std::string to_cell(double v) { return format_double(v); }
template <typename T>
    requires std::is_integral_v<T>
std::string to_cell(T v)
{
    return fmt::format("{}", v);
}

/// RFC-4180 field: quoted when it holds a comma, quote, CR or LF; quotes doubled.
inline std::string csv_field(std::string_view s)
{
    if (s.find_first_of(",\"\r\n") == std::string_view::npos)
        return std::string(s);
    std::string out = "\"";
    for (char c : s) {
        if (c == '"')
            out += '"';
        out += c;
    }
    out += '"';
    return out;
}

/// In-memory CSV table, rows terminated by CRLF as RFC 4180 specifies.
class CsvTable {
public:
    explicit CsvTable(std::vector<std::string> header) : width_(header.size()) { add_row(header); }

    template <typename... Cells>
    void add(const Cells&... cells)
    {
        add_row({to_cell(cells)...});
    }

    void add_row(const std::vector<std::string>& cells)
    {
        if (cells.size() != width_)
            throw ContractError(fmt::format("csv row has {} cells, header has {}", cells.size(), width_));
        for (std::size_t i = 0; i < cells.size(); ++i) {
            if (i)
                text_ += ',';
            text_ += csv_field(cells[i]);
        }
        text_ += "\r\n";
        ++rows_;
    }

    std::size_t data_rows() const { return rows_ - 1; }
    const std::string& text() const { return text_; }

    void write(const std::filesystem::path& path) const
    {
        if (path.has_parent_path())
            std::filesystem::create_directories(path.parent_path());
        std::ofstream out(path, std::ios::binary | std::ios::trunc);
        out.write(text_.data(), std::streamsize(text_.size()));
        if (!out)
            throw IoError(fmt::format("failed writing '{}'", path.string()));
    }

private:
    std::size_t width_;
    std::size_t rows_ = 0;
    std::string text_;
};

/// Parses RFC-4180 text back into rows of fields (used by tests and summary recomputation).
inline std::vector<std::vector<std::string>> parse_csv(std::string_view text)
{
    std::vector<std::vector<std::string>> rows;
    std::vector<std::string> row;
    std::string field;
    bool quoted = false, any = false;
    for (std::size_t i = 0; i < text.size(); ++i) {
        const char c = text[i];
        if (quoted) {
            if (c == '"') {
                if (i + 1 < text.size() && text[i + 1] == '"') {
                    field += '"';
                    ++i;
                } else {
                    quoted = false;
                }
            } else {
                field += c;
            }
            continue;
        }
        if (c == '"') {
            quoted = true;
            any = true;
        } else if (c == ',') {
            row.push_back(std::move(field));
            field.clear();
            any = true;
        } else if (c == '\r' || c == '\n') {
            if (c == '\r' && i + 1 < text.size() && text[i + 1] == '\n')
                ++i;
            row.push_back(std::move(field));
            field.clear();
            rows.push_back(std::move(row));
            row.clear();
            any = false;
        } else {
            field += c;
            any = true;
        }
    }
    if (quoted)
        throw IoError("csv: unterminated quoted field");
    if (any) {
        row.push_back(std::move(field));
        rows.push_back(std::move(row));
    }
    return rows;
}

} // namespace b2opt::bench
