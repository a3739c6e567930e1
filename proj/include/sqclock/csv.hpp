// csv.hpp - minimal deterministic CSV reading/writing
//
// Output format contract: '.' decimal separator, '\n' line endings, header
// row mandatory, numbers rendered with %.12g. Identical data produce
// byte-identical files.
#pragma once

#include <cstdio>
#include <fstream>
#include <initializer_list>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace sqclock {

class CsvWriter {
  public:
    CsvWriter(const std::string& path, std::initializer_list<std::string> columns)
        : out_(path, std::ios::binary), n_columns_(columns.size()) {
        if (!out_) {
            throw std::runtime_error("CsvWriter: cannot open " + path);
        }
        bool first = true;
        for (const auto& c : columns) {
            if (!first) {
                out_ << ',';
            }
            out_ << c;
            first = false;
        }
        out_ << '\n';
    }

    static std::string format(double v) {
        char buf[40];
        std::snprintf(buf, sizeof(buf), "%.12g", v);
        return buf;
    }

    void row(std::initializer_list<double> values) {
        if (values.size() != n_columns_) {
            throw std::logic_error("CsvWriter: column count mismatch");
        }
        bool first = true;
        for (double v : values) {
            if (!first) {
                out_ << ',';
            }
            out_ << format(v);
            first = false;
        }
        out_ << '\n';
    }

  private:
    std::ofstream out_;
    std::size_t n_columns_;
};

struct CsvTable {
    std::vector<std::string> columns;
    std::vector<std::vector<double>> rows;

    [[nodiscard]] std::vector<double> column(const std::string& name) const {
        std::size_t idx = columns.size();
        for (std::size_t i = 0; i < columns.size(); ++i) {
            if (columns[i] == name) {
                idx = i;
            }
        }
        if (idx == columns.size()) {
            throw std::runtime_error("CsvTable: no column named " + name);
        }
        std::vector<double> out;
        out.reserve(rows.size());
        for (const auto& r : rows) {
            out.push_back(r[idx]);
        }
        return out;
    }
};

inline CsvTable read_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw std::runtime_error("read_csv: cannot open " + path);
    }
    CsvTable table;
    std::string line;
    if (!std::getline(in, line)) {
        throw std::runtime_error("read_csv: empty file " + path);
    }
    std::stringstream header(line);
    std::string cell;
    while (std::getline(header, cell, ',')) {
        table.columns.push_back(cell);
    }
    while (std::getline(in, line)) {
        if (line.empty()) {
            continue;
        }
        std::stringstream ss(line);
        std::vector<double> row;
        while (std::getline(ss, cell, ',')) {
            row.push_back(std::stod(cell));
        }
        if (row.size() != table.columns.size()) {
            throw std::runtime_error("read_csv: ragged row in " + path);
        }
        table.rows.push_back(std::move(row));
    }
    return table;
}

}  // namespace sqclock
