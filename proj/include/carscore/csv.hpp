#pragma once

// Numeric CSV ingestion and tabular output. Comma separated, header row
// first, no quoting. Lines starting with '#' and blank lines are skipped.

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "carscore/error.hpp"
#include "carscore/estimation.hpp"
#include "carscore/linalg.hpp"

namespace carscore::csv {

struct Table {
    std::vector<std::string> header;
    std::vector<std::vector<double>> rows;

    Index column(const std::string& name) const {
        const auto it = std::find(header.begin(), header.end(), name);
        require(it != header.end(), ErrorCode::DimensionMismatch, "no column named '" + name + "'");
        return static_cast<Index>(it - header.begin());
    }
};

namespace detail {

inline std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    return s;
}

inline std::vector<std::string_view> split(std::string_view line) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    for (;;) {
        const std::size_t pos = line.find(',', start);
        out.push_back(trim(line.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start)));
        if (pos == std::string_view::npos) break;
        start = pos + 1;
    }
    return out;
}

inline double parse_number(std::string_view field, std::size_t line_no, std::size_t col) {
    const std::string where = "line " + std::to_string(line_no) + ", column " + std::to_string(col + 1);
    require(!field.empty() && field != "NA" && field != "NaN" && field != "nan", ErrorCode::DegenerateData,
            "missing value at " + where);
    if (field.front() == '+') field.remove_prefix(1);
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), v);
    require(ec == std::errc() && ptr == field.data() + field.size(), ErrorCode::ParseError,
            "cannot parse '" + std::string(field) + "' at " + where);
    require(std::isfinite(v), ErrorCode::DegenerateData, "non-finite value at " + where);
    return v;
}

}  // namespace detail

inline Table read(std::istream& in) {
    Table t;
    std::string line;
    std::size_t line_no = 0;
    bool have_header = false;
    while (std::getline(in, line)) {
        ++line_no;
        std::string_view view = line;
        if (line_no == 1 && view.substr(0, 3) == "\xEF\xBB\xBF") view.remove_prefix(3);
        view = detail::trim(view);
        if (view.empty() || view.front() == '#') continue;
        const auto fields = detail::split(view);
        if (!have_header) {
            for (auto f : fields) t.header.emplace_back(f);
            have_header = true;
            continue;
        }
        require(fields.size() == t.header.size(), ErrorCode::DimensionMismatch,
                "line " + std::to_string(line_no) + " has " + std::to_string(fields.size()) + " fields, header has " +
                    std::to_string(t.header.size()));
        std::vector<double> row;
        row.reserve(fields.size());
        for (std::size_t c = 0; c < fields.size(); ++c) row.push_back(detail::parse_number(fields[c], line_no, c));
        t.rows.push_back(std::move(row));
    }
    require(have_header, ErrorCode::EmptyInput, "no header row");
    require(!t.rows.empty(), ErrorCode::EmptyInput, "no data rows");
    return t;
}

inline Table read_file(const std::string& path) {
    std::ifstream in(path);
    require(static_cast<bool>(in), ErrorCode::IoError, "cannot open '" + path + "'");
    return read(in);
}

inline Matrix to_matrix(const Table& t, const std::vector<Index>& cols) {
    Matrix m(static_cast<Index>(t.rows.size()), static_cast<Index>(cols.size()));
    for (Index i = 0; i < m.rows(); ++i)
        for (Index j = 0; j < m.cols(); ++j)
            m(i, j) = t.rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(cols[static_cast<std::size_t>(j)])];
    return m;
}

/// Predictors are every column except the response.
inline Dataset dataset_from_column(const Table& t, const std::string& response) {
    const Index r = t.column(response);
    std::vector<Index> cols;
    std::vector<std::string> names;
    for (Index j = 0; j < static_cast<Index>(t.header.size()); ++j) {
        if (j == r) continue;
        cols.push_back(j);
        names.push_back(t.header[static_cast<std::size_t>(j)]);
    }
    require(!cols.empty(), ErrorCode::DegenerateData, "no predictor columns besides the response");
    Dataset d{to_matrix(t, cols), to_matrix(t, {r}).col(0), names};
    return d;
}

inline Dataset dataset_from_files(const Table& predictors, const Table& response) {
    require(response.header.size() == 1, ErrorCode::DimensionMismatch, "response file must have one column");
    require(response.rows.size() == predictors.rows.size(), ErrorCode::DimensionMismatch,
            "response has " + std::to_string(response.rows.size()) + " rows, data has " +
                std::to_string(predictors.rows.size()));
    std::vector<Index> cols(predictors.header.size());
    for (std::size_t j = 0; j < cols.size(); ++j) cols[j] = static_cast<Index>(j);
    return {to_matrix(predictors, cols), to_matrix(response, {0}).col(0), predictors.header};
}

/// Shortest representation that reads back to within 15 significant digits.
inline std::string format_double(double v) {
    if (std::isnan(v)) return "NA";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.15g", v);
    return buf;
}

/// Rows of already formatted cells written either as CSV or as a
/// right-aligned text table.
class Writer {
public:
    explicit Writer(std::vector<std::string> header) : header_(std::move(header)) {}

    void add(std::vector<std::string> row) {
        require(row.size() == header_.size(), ErrorCode::DimensionMismatch, "row width differs from header");
        rows_.push_back(std::move(row));
    }

    void write_csv(std::ostream& out) const {
        auto line = [&](const std::vector<std::string>& r) {
            for (std::size_t c = 0; c < r.size(); ++c) out << (c ? "," : "") << r[c];
            out << '\n';
        };
        line(header_);
        for (const auto& r : rows_) line(r);
    }

    void write_table(std::ostream& out) const {
        std::vector<std::size_t> width(header_.size());
        for (std::size_t c = 0; c < header_.size(); ++c) width[c] = header_[c].size();
        for (const auto& r : rows_)
            for (std::size_t c = 0; c < r.size(); ++c) width[c] = std::max(width[c], r[c].size());
        auto line = [&](const std::vector<std::string>& r) {
            for (std::size_t c = 0; c < r.size(); ++c) {
                if (c) out << "  ";
                out << std::string(width[c] - r[c].size(), ' ') << r[c];
            }
            out << '\n';
        };
        line(header_);
        for (const auto& r : rows_) line(r);
    }

    void write(std::ostream& out, bool as_table) const { as_table ? write_table(out) : write_csv(out); }

private:
    std::vector<std::string> header_;
    std::vector<std::vector<std::string>> rows_;
};

/// "# key: value" lines echoing a run configuration.
inline void write_config_header(std::ostream& out, const std::vector<std::pair<std::string, std::string>>& config) {
    for (const auto& [k, v] : config) out << "# " << k << ": " << v << '\n';
}

}  // namespace carscore::csv
