#include "sr/dataset.hpp"

#include <Eigen/SVD>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <system_error>

#include "sr/errors.hpp"

namespace sr {

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

// One CSV record, RFC-4180 style: quoted fields may contain commas and
// doubled quotes.
std::vector<std::string> split_record(const std::string& line) {
    std::vector<std::string> out;
    std::string field;
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char ch = line[i];
        if (quoted) {
            if (ch == '"') {
                if (i + 1 < line.size() && line[i + 1] == '"') {
                    field += '"';
                    ++i;
                } else {
                    quoted = false;
                }
            } else {
                field += ch;
            }
        } else if (ch == '"') {
            quoted = true;
        } else if (ch == ',') {
            out.push_back(trim(field));
            field.clear();
        } else {
            field += ch;
        }
    }
    out.push_back(trim(field));
    return out;
}

double parse_cell(const std::string& text, std::size_t row, std::size_t col) {
    if (text.empty()) throw NonNumericCell(row, col, "empty field");
    double value = 0.0;
    const char* first = text.data();
    const char* last = first + text.size();
    const auto [ptr, ec] = std::from_chars(first, last, value);
    if (ec != std::errc() || ptr != last) throw NonNumericCell(row, col, "'" + text + "'");
    if (!std::isfinite(value)) throw NonNumericCell(row, col, "non-finite value '" + text + "'");
    return value;
}

std::size_t column_index(const std::vector<std::string>& header, const std::string& name) {
    for (std::size_t i = 0; i < header.size(); ++i)
        if (header[i] == name) return i;
    throw MissingColumn("column '" + name + "' not found in header");
}

void append_number(std::string& out, double v) {
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    out.append(buf, res.ptr);
}

}  // namespace

std::vector<std::string> csv_header(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw FileNotFound("cannot open '" + path + "'");
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (!trim(line).empty()) return split_record(line);
    }
    throw InvalidDataset("'" + path + "' is empty");
}

Dataset load_csv(const std::string& path, const CsvSpec& spec) {
    std::ifstream in(path);
    if (!in) throw FileNotFound("cannot open '" + path + "'");
    if (spec.x.empty()) throw InvalidDataset("at least one x column is required");

    std::vector<std::string> lines;
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (!trim(line).empty()) lines.push_back(line);
    }
    if (lines.empty()) throw InvalidDataset("'" + path + "' is empty");

    const auto header = split_record(lines.front());
    const std::size_t yc = column_index(header, spec.y);
    std::vector<std::size_t> xc, zc;
    for (const auto& name : spec.x) xc.push_back(column_index(header, name));
    for (const auto& name : spec.z) zc.push_back(column_index(header, name));

    const auto n = static_cast<Eigen::Index>(lines.size() - 1);
    const auto k = static_cast<Eigen::Index>(xc.size());
    const auto p = static_cast<Eigen::Index>(zc.size() + (spec.add_intercept ? 1 : 0));
    if (p == 0) throw InvalidDataset("controls must include an intercept column");

    Dataset d;
    d.y.resize(n);
    d.x.resize(n, k);
    d.z.resize(n, p);
    for (Eigen::Index r = 0; r < n; ++r) {
        const auto fields = split_record(lines[static_cast<std::size_t>(r) + 1]);
        auto cell = [&](std::size_t c) {
            if (c >= fields.size())
                throw NonNumericCell(static_cast<std::size_t>(r), c, "missing field");
            return parse_cell(fields[c], static_cast<std::size_t>(r), c);
        };
        d.y(r) = cell(yc);
        for (Eigen::Index j = 0; j < k; ++j) d.x(r, j) = cell(xc[static_cast<std::size_t>(j)]);
        const Eigen::Index z0 = spec.add_intercept ? 1 : 0;
        if (spec.add_intercept) d.z(r, 0) = 1.0;
        for (std::size_t j = 0; j < zc.size(); ++j)
            d.z(r, z0 + static_cast<Eigen::Index>(j)) = cell(zc[j]);
    }

    validate(d);
    validate_rank(d);
    return d;
}

void write_csv(const Dataset& d, const std::string& path) {
    validate(d);
    std::ofstream out(path);
    if (!out) throw FileNotFound("cannot write '" + path + "'");
    std::string buf = "y";
    for (Eigen::Index j = 0; j < d.x.cols(); ++j) buf += ",x" + std::to_string(j + 1);
    for (Eigen::Index j = 0; j < d.z.cols(); ++j) buf += ",z" + std::to_string(j + 1);
    buf += '\n';
    for (Eigen::Index r = 0; r < d.y.size(); ++r) {
        append_number(buf, d.y(r));
        for (Eigen::Index j = 0; j < d.x.cols(); ++j) {
            buf += ',';
            append_number(buf, d.x(r, j));
        }
        for (Eigen::Index j = 0; j < d.z.cols(); ++j) {
            buf += ',';
            append_number(buf, d.z(r, j));
        }
        buf += '\n';
    }
    out << buf;
    if (!out) throw FileNotFound("write to '" + path + "' failed");
}

void validate(const Dataset& d) {
    const auto n = d.y.size();
    if (n < 2) throw InvalidDataset("need at least 2 observations");
    if (d.x.rows() != n || d.z.rows() != n)
        throw DimensionMismatch("y, x, z must have equal row counts");
    if (d.x.cols() < 1) throw InvalidDataset("x must have at least one column");
    if (d.z.cols() < 1) throw InvalidDataset("z must include the intercept column");
    if (!d.y.allFinite() || !d.x.allFinite() || !d.z.allFinite())
        throw InvalidDataset("data contain NaN or infinite entries");
    for (Eigen::Index r = 0; r < n; ++r)
        if (d.z(r, 0) != 1.0)
            throw InvalidDataset("first control column must be identically 1 (row " +
                                 std::to_string(r) + " is " + std::to_string(d.z(r, 0)) + ")");
}

int validate_rank(const Dataset& d, double tol) {
    Eigen::MatrixXd w(d.y.size(), d.x.cols() + d.z.cols());
    w << d.x, d.z;
    const Eigen::BDCSVD<Eigen::MatrixXd> svd(w);
    const auto& sv = svd.singularValues();
    const double cutoff = tol * sv(0);
    int rank = 0;
    for (Eigen::Index i = 0; i < sv.size(); ++i)
        if (sv(i) > cutoff) ++rank;
    if (rank < w.cols()) throw RankDeficient(rank, static_cast<int>(w.cols()));
    return rank;
}

Eigen::VectorXd ar_offset(const Dataset& d, const Eigen::VectorXd& beta0) {
    if (beta0.size() != d.x.cols())
        throw DimensionMismatch("beta0 has " + std::to_string(beta0.size()) +
                                " entries, x has " + std::to_string(d.x.cols()) + " columns");
    return d.y - d.x * beta0;
}

}  // namespace sr
