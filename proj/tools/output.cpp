#include "output.hpp"

#include <charconv>
#include <cmath>

namespace dncalc::cli {

namespace {

nlohmann::json finite_or_null(double v) {
    if (!std::isfinite(v)) return nullptr;
    return v;
}

nlohmann::json numbers(const std::vector<double>& v) {
    auto a = nlohmann::json::array();
    for (double x : v) a.push_back(finite_or_null(x));
    return a;
}

nlohmann::json number_map(const std::map<std::string, double>& m) {
    auto o = nlohmann::json::object();
    for (auto& [k, v] : m) o[k] = finite_or_null(v);
    return o;
}

}  // namespace

nlohmann::json report_json(const EstimateReport& r) {
    using nlohmann::json;
    json reqs = json::array();
    for (const auto& q : r.requirements) {
        auto it = r.metrics.find(q.metric);
        bool have = it != r.metrics.end();
        reqs.push_back({{"metric", q.metric},
                        {"comparison", to_string(q.cmp)},
                        {"threshold", finite_or_null(q.threshold)},
                        {"value", have ? finite_or_null(it->second) : json(nullptr)},
                        {"satisfied", have && q.satisfied(it->second)}});
    }
    json refinement = json::array();
    for (const auto& p : r.refinement)
        refinement.push_back({{"points", p.points}, {"levels", p.levels}, {"value", finite_or_null(p.value)}});
    json series = json::object();
    for (const auto& [k, v] : r.series) series[k] = numbers(v);
    return json{{"name", r.name},
                {"statement", r.statement},
                {"family", r.family},
                {"cutoff", r.cutoff},
                {"grid", number_map(r.grid)},
                {"ensemble", number_map(r.ensemble)},
                {"samples", numbers(r.samples)},
                {"constants",
                 {{"min", finite_or_null(r.constants.min)},
                  {"median", finite_or_null(r.constants.median)},
                  {"max", finite_or_null(r.constants.max)},
                  {"count", r.constants.count}}},
                {"refinement", refinement},
                {"metrics", number_map(r.metrics)},
                {"series", series},
                {"requirements", reqs},
                {"notes", r.notes},
                {"verdict", r.passed() ? "pass" : "fail"},
                {"failures", r.failures()}};
}

void write_json(const std::filesystem::path& path, const nlohmann::json& doc) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write '" + path.string() + "'");
    out << doc.dump(2) << '\n';
}

CsvWriter::CsvWriter(const std::filesystem::path& path, const std::vector<std::string>& header)
    : columns_(header.size()) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    out_.open(path, std::ios::binary);
    if (!out_) throw Error("cannot write '" + path.string() + "'");
    row(header);
}

void CsvWriter::row(const std::vector<std::string>& cells) {
    if (cells.size() != columns_) throw InvalidArgument("csv row has the wrong number of cells");
    for (std::size_t i = 0; i < cells.size(); ++i) {
        if (i) out_ << ',';
        out_ << cells[i];
    }
    out_ << '\n';
}

std::string CsvWriter::number(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

std::string CsvWriter::quote(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    return out + '"';
}

void write_series_csv(const std::filesystem::path& path, const EstimateReport& r) {
    CsvWriter w(path, {"series", "index", "value"});
    for (const auto& [k, v] : r.series)
        for (std::size_t i = 0; i < v.size(); ++i) w.row({CsvWriter::quote(k), std::to_string(i), CsvWriter::number(v[i])});
    for (std::size_t i = 0; i < r.samples.size(); ++i)
        w.row({"samples", std::to_string(i), CsvWriter::number(r.samples[i])});
}

void write_summary_csv(const std::filesystem::path& path, const std::vector<EstimateReport>& reports) {
    CsvWriter w(path, {"check", "metric", "comparison", "threshold", "value", "satisfied"});
    for (const auto& r : reports) {
        for (const auto& q : r.requirements) {
            auto it = r.metrics.find(q.metric);
            bool have = it != r.metrics.end();
            w.row({CsvWriter::quote(r.name), CsvWriter::quote(q.metric), to_string(q.cmp), CsvWriter::number(q.threshold),
                   have ? CsvWriter::number(it->second) : "", have && q.satisfied(it->second) ? "true" : "false"});
        }
        if (r.requirements.empty() && !r.passed())
            w.row({CsvWriter::quote(r.name), "aborted", "", "", "", "false"});
    }
}

}  // namespace dncalc::cli
