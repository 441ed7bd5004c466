#pragma once

// Tabular experiment results: one row per (experiment, model, epsilon, mode,
// seed, metric). Reports enforce key uniqueness and serialize to CSV and
// JSON with a stable row order so identical runs produce identical bytes.

#include <cstdint>
#include <map>
#include <string>
#include <tuple>
#include <vector>

namespace plab::report {

struct Row {
    std::string experiment;
    std::string model;
    double epsilon = 0.0;
    std::string mode;
    std::uint64_t seed = 0;
    std::string metric;
    double value = 0.0;
};

struct Meta {
    std::string config_hash;
    std::string timestamp;  // excluded from CSV output
    std::string version;
};

class Report {
public:
    // Throws std::invalid_argument if the row key already exists.
    void add(Row row);
    void add_all(const std::vector<Row>& rows);

    const std::vector<Row>& rows() const { return rows_; }
    bool empty() const { return rows_.empty(); }

    // Lookup; throws std::out_of_range with the full key if missing.
    double value(const std::string& experiment, const std::string& model,
                 double epsilon, const std::string& mode, std::uint64_t seed,
                 const std::string& metric) const;
    bool contains(const std::string& experiment, const std::string& model,
                  double epsilon, const std::string& mode, std::uint64_t seed,
                  const std::string& metric) const;

    // Values of one metric across seeds for a fixed cell, seed-sorted.
    std::vector<double> values_over_seeds(const std::string& experiment,
                                          const std::string& model,
                                          double epsilon, const std::string& mode,
                                          const std::string& metric) const;

    Meta& meta() { return meta_; }
    const Meta& meta() const { return meta_; }

    // report.csv: header row, rows sorted by the full key, no timestamp.
    void write_csv(const std::string& path) const;
    // report.json: metadata + the same rows.
    void write_json(const std::string& path) const;

    static Report read_csv(const std::string& path);

private:
    using Key = std::tuple<std::string, std::string, double, std::string,
                           std::uint64_t, std::string>;
    static Key key_of(const Row& r);

    std::vector<Row> rows_;
    std::map<Key, std::size_t> index_;
    Meta meta_;
};

// Shortest-round-trip decimal formatting used across all CSV emitters.
std::string format_double(double v);

double median(std::vector<double> values);
double mean(const std::vector<double>& values);
// Standard error of the mean; 0 for fewer than 2 samples.
double standard_error(const std::vector<double>& values);

}  // namespace plab::report
