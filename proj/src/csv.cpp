#include "carate/csv.hpp"

#include <algorithm>
#include <cerrno>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

namespace carate {

namespace {

std::vector<std::string> split_line(const std::string& line) {
    std::vector<std::string> fields;
    std::string field;
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char c = line[i];
        if (quoted) {
            if (c == '"') {
                if (i + 1 < line.size() && line[i + 1] == '"') {
                    field.push_back('"');
                    ++i;
                } else {
                    quoted = false;
                }
            } else {
                field.push_back(c);
            }
        } else if (c == '"') {
            quoted = true;
        } else if (c == ',') {
            fields.push_back(std::move(field));
            field.clear();
        } else if (c != '\r') {
            field.push_back(c);
        }
    }
    fields.push_back(std::move(field));
    return fields;
}

double parse_double(const std::string& text, const std::string& column, std::size_t row) {
    if (text.empty()) {
        throw ValidationError("missing value in column '" + column + "' at data row " +
                              std::to_string(row));
    }
    errno = 0;
    char* end = nullptr;
    const double value = std::strtod(text.c_str(), &end);
    if (end != text.c_str() + text.size() || errno == ERANGE) {
        throw ValidationError("non-numeric cell '" + text + "' in column '" + column +
                              "' at data row " + std::to_string(row));
    }
    return value;
}

} // namespace

static std::string quote_if_needed(const std::string& field) {
    if (field.find_first_of(",\"\n") == std::string::npos) return field;
    std::string quoted = "\"";
    for (const char c : field) {
        if (c == '"') quoted += "\"\"";
        else quoted.push_back(c);
    }
    quoted.push_back('"');
    return quoted;
}

int CsvTable::column(const std::string& name) const {
    const auto it = std::find(header.begin(), header.end(), name);
    return it == header.end() ? -1 : static_cast<int>(it - header.begin());
}

CsvTable read_csv(std::istream& in) {
    CsvTable table;
    std::string line;
    bool have_header = false;
    while (std::getline(in, line)) {
        if (!have_header && line.empty()) continue;
        auto fields = split_line(line);
        if (!have_header) {
            table.header = std::move(fields);
            have_header = true;
            continue;
        }
        if (fields.size() == 1 && fields[0].empty()) continue; // trailing blank line
        if (fields.size() != table.header.size()) {
            throw ValidationError("row " + std::to_string(table.rows.size() + 1) + " has " +
                                  std::to_string(fields.size()) + " fields, header has " +
                                  std::to_string(table.header.size()));
        }
        table.rows.push_back(std::move(fields));
    }
    if (!have_header) {
        throw ValidationError("empty file: no header row");
    }
    return table;
}

CsvTable read_csv_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw ValidationError("cannot open file: " + path);
    }
    return read_csv(in);
}

void write_csv(std::ostream& out, const CsvTable& table) {
    for (std::size_t c = 0; c < table.header.size(); ++c) {
        if (c) out << ',';
        out << quote_if_needed(table.header[c]);
    }
    out << '\n';
    for (const auto& row : table.rows) {
        for (std::size_t c = 0; c < row.size(); ++c) {
            if (c) out << ',';
            out << quote_if_needed(row[c]);
        }
        out << '\n';
    }
}

TrialDataset dataset_from_table(const CsvTable& table, const CsvSchema& schema) {
    const int outcome_col = table.column(schema.outcome);
    const int arm_col = table.column(schema.arm);
    const int stratum_col = table.column(schema.stratum);
    if (outcome_col < 0) throw ValidationError("missing column '" + schema.outcome + "'");
    if (arm_col < 0) throw ValidationError("missing column '" + schema.arm + "'");
    if (stratum_col < 0) throw ValidationError("missing column '" + schema.stratum + "'");

    std::vector<int> covariate_cols;
    std::vector<std::string> covariate_names;
    if (schema.covariates.empty()) {
        for (std::size_t c = 0; c < table.header.size(); ++c) {
            const int ci = static_cast<int>(c);
            if (ci == outcome_col || ci == arm_col || ci == stratum_col) continue;
            covariate_cols.push_back(ci);
            covariate_names.push_back(table.header[c]);
        }
    } else {
        for (const auto& name : schema.covariates) {
            const int ci = table.column(name);
            if (ci < 0) throw ValidationError("missing column '" + name + "'");
            covariate_cols.push_back(ci);
            covariate_names.push_back(name);
        }
    }

    const std::size_t count = table.rows.size();
    if (count == 0) {
        throw ValidationError("empty file: no data rows");
    }
    TrialDataset data;
    data.outcomes.resize(count);
    data.assignments.resize(count);
    data.strata.resize(count);
    data.covariates.resize(count, static_cast<Eigen::Index>(covariate_cols.size()));
    data.covariate_names = covariate_names;

    for (std::size_t r = 0; r < count; ++r) {
        const auto& row = table.rows[r];
        data.outcomes[static_cast<Eigen::Index>(r)] =
            parse_double(row[outcome_col], schema.outcome, r + 1);
        const double arm = parse_double(row[arm_col], schema.arm, r + 1);
        if (arm != 0.0 && arm != 1.0) {
            throw ValidationError("invalid assignment '" + row[arm_col] + "' at data row " +
                                  std::to_string(r + 1) + ": must be 0 or 1");
        }
        data.assignments[static_cast<Eigen::Index>(r)] = static_cast<int>(arm);
        data.strata[r] = row[stratum_col];
        for (std::size_t c = 0; c < covariate_cols.size(); ++c) {
            data.covariates(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) =
                parse_double(row[covariate_cols[c]], covariate_names[c], r + 1);
        }
    }
    data.validate();
    return data;
}

TrialDataset load_csv(const std::string& path, const CsvSchema& schema) {
    return dataset_from_table(read_csv_file(path), schema);
}

std::string format_double(double value) {
    char buffer[40];
    std::snprintf(buffer, sizeof(buffer), "%.17g", value);
    return buffer;
}

void save_csv(std::ostream& out, const TrialDataset& data, const CsvSchema& schema) {
    out << schema.outcome << ',' << schema.arm << ',' << schema.stratum;
    for (Eigen::Index c = 0; c < data.p(); ++c) {
        out << ',';
        if (static_cast<std::size_t>(c) < data.covariate_names.size()) {
            out << data.covariate_names[c];
        } else {
            out << 'x' << (c + 1);
        }
    }
    out << '\n';
    for (Eigen::Index i = 0; i < data.n(); ++i) {
        out << format_double(data.outcomes[i]) << ',' << data.assignments[i] << ','
            << quote_if_needed(data.strata[i]);
        for (Eigen::Index c = 0; c < data.p(); ++c) {
            out << ',' << format_double(data.covariates(i, c));
        }
        out << '\n';
    }
}

void save_csv_file(const std::string& path, const TrialDataset& data, const CsvSchema& schema) {
    std::ofstream out(path);
    if (!out) {
        throw ValidationError("cannot open file for writing: " + path);
    }
    save_csv(out, data, schema);
}

} // namespace carate
