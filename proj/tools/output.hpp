#pragma once

#include "dncalc/report.hpp"

#include "json.hpp"

#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

namespace dncalc::cli {

/// Every report field except elapsed_seconds, which goes to the timing sidecar.
nlohmann::json report_json(const EstimateReport& r);

/// Pretty-printed with sorted keys and a trailing newline. Non-finite numbers become null.
void write_json(const std::filesystem::path& path, const nlohmann::json& doc);

/// RFC 4180 style: header row, period decimal separator, shortest round-trip numbers.
class CsvWriter {
public:
    CsvWriter(const std::filesystem::path& path, const std::vector<std::string>& header);
    void row(const std::vector<std::string>& cells);
    static std::string number(double v);
    static std::string quote(const std::string& s);

private:
    std::ofstream out_;
    std::size_t columns_;
};

/// Long-format series table: series,index,value.
void write_series_csv(const std::filesystem::path& path, const EstimateReport& r);

/// One row per requirement: check,metric,comparison,threshold,value,satisfied.
void write_summary_csv(const std::filesystem::path& path, const std::vector<EstimateReport>& reports);

}  // namespace dncalc::cli
