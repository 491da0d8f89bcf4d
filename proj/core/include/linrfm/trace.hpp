#pragma once

#include <ostream>
#include <string>
#include <vector>

#include "linrfm/common.hpp"

namespace linrfm {

// Column-named per-iteration log shared by the solver modules.
struct Trace {
    std::vector<std::string> columns;
    std::vector<std::vector<double>> rows;

    void add_row(std::vector<double> row) { rows.push_back(std::move(row)); }

    void write_csv(std::ostream& out) const {
        for (std::size_t j = 0; j < columns.size(); ++j) {
            if (j > 0) out << ',';
            out << columns[j];
        }
        out << '\n';
        for (const auto& row : rows) {
            for (std::size_t j = 0; j < row.size(); ++j) {
                if (j > 0) out << ',';
                out << format_double(row[j]);
            }
            out << '\n';
        }
    }
};

}  // namespace linrfm
