#ifndef CARATE_CSV_HPP
#define CARATE_CSV_HPP

#include <iosfwd>
#include <string>
#include <vector>

#include "carate/data.hpp"

namespace carate {

// Column-name mapping for trial CSV files. Empty covariate list means
// "every column that is not outcome/arm/stratum, in file order".
struct CsvSchema {
    std::string outcome = "y";
    std::string arm = "arm";
    std::string stratum = "stratum";
    std::vector<std::string> covariates;
};

// Minimal RFC-4180-ish table: header row required, UTF-8, '.' decimal point.
// Quoted fields are supported on read; values we write never need quoting.
struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    int column(const std::string& name) const; // -1 when absent
};

CsvTable read_csv(std::istream& in);
CsvTable read_csv_file(const std::string& path);
void write_csv(std::ostream& out, const CsvTable& table);

TrialDataset dataset_from_table(const CsvTable& table, const CsvSchema& schema);
TrialDataset load_csv(const std::string& path, const CsvSchema& schema = {});

// Writes with 17 significant digits so load(save(d)) == d bit-exactly.
void save_csv(std::ostream& out, const TrialDataset& data, const CsvSchema& schema = {});
void save_csv_file(const std::string& path, const TrialDataset& data,
                   const CsvSchema& schema = {});

// Shared numeric formatting: 17 significant digits, enough to round-trip
// any double exactly.
std::string format_double(double value);

} // namespace carate

#endif
