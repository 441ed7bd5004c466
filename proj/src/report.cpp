#include "plab/report.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace plab::report {

using json = nlohmann::json;

std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    // Trim to the shortest representation that round-trips.
    for (int prec = 1; prec < 17; ++prec) {
        char probe[40];
        std::snprintf(probe, sizeof probe, "%.*g", prec, v);
        if (std::strtod(probe, nullptr) == v) return probe;
    }
    return buf;
}

Report::Key Report::key_of(const Row& r) {
    return {r.experiment, r.model, r.epsilon, r.mode, r.seed, r.metric};
}

void Report::add(Row row) {
    Key k = key_of(row);
    if (index_.count(k)) {
        std::ostringstream os;
        os << "report: duplicate row key (" << row.experiment << ", " << row.model
           << ", " << row.epsilon << ", " << row.mode << ", " << row.seed << ", "
           << row.metric << ")";
        throw std::invalid_argument(os.str());
    }
    index_.emplace(std::move(k), rows_.size());
    rows_.push_back(std::move(row));
}

void Report::add_all(const std::vector<Row>& rows) {
    for (const Row& r : rows) add(r);
}

double Report::value(const std::string& experiment, const std::string& model,
                     double epsilon, const std::string& mode, std::uint64_t seed,
                     const std::string& metric) const {
    const auto it = index_.find({experiment, model, epsilon, mode, seed, metric});
    if (it == index_.end()) {
        std::ostringstream os;
        os << "report: missing cell (" << experiment << ", " << model << ", "
           << epsilon << ", " << mode << ", " << seed << ", " << metric << ")";
        throw std::out_of_range(os.str());
    }
    return rows_[it->second].value;
}

bool Report::contains(const std::string& experiment, const std::string& model,
                      double epsilon, const std::string& mode, std::uint64_t seed,
                      const std::string& metric) const {
    return index_.count({experiment, model, epsilon, mode, seed, metric}) != 0;
}

std::vector<double> Report::values_over_seeds(const std::string& experiment,
                                              const std::string& model,
                                              double epsilon,
                                              const std::string& mode,
                                              const std::string& metric) const {
    std::vector<std::pair<std::uint64_t, double>> hits;
    for (const Row& r : rows_)
        if (r.experiment == experiment && r.model == model && r.epsilon == epsilon &&
            r.mode == mode && r.metric == metric)
            hits.emplace_back(r.seed, r.value);
    std::sort(hits.begin(), hits.end());
    std::vector<double> out;
    out.reserve(hits.size());
    for (auto& [seed, v] : hits) out.push_back(v);
    return out;
}

void Report::write_csv(const std::string& path) const {
    std::vector<std::size_t> order(rows_.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return key_of(rows_[a]) < key_of(rows_[b]);
    });

    std::ofstream os(path);
    if (!os) throw std::runtime_error("cannot write " + path);
    os << "experiment,model,epsilon,mode,seed,metric,value\n";
    for (std::size_t i : order) {
        const Row& r = rows_[i];
        os << r.experiment << ',' << r.model << ',' << format_double(r.epsilon)
           << ',' << r.mode << ',' << r.seed << ',' << r.metric << ','
           << format_double(r.value) << '\n';
    }
}

void Report::write_json(const std::string& path) const {
    json doc;
    doc["meta"] = {{"config_hash", meta_.config_hash},
                   {"timestamp", meta_.timestamp},
                   {"version", meta_.version}};
    json rows = json::array();

    std::vector<std::size_t> order(rows_.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return key_of(rows_[a]) < key_of(rows_[b]);
    });
    for (std::size_t i : order) {
        const Row& r = rows_[i];
        rows.push_back({{"experiment", r.experiment},
                        {"model", r.model},
                        {"epsilon", r.epsilon},
                        {"mode", r.mode},
                        {"seed", r.seed},
                        {"metric", r.metric},
                        {"value", r.value}});
    }
    doc["rows"] = std::move(rows);

    std::ofstream os(path);
    if (!os) throw std::runtime_error("cannot write " + path);
    os << doc.dump(2) << '\n';
}

Report Report::read_csv(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw std::runtime_error("cannot read " + path);
    std::string line;
    if (!std::getline(is, line))
        throw std::runtime_error("empty report csv: " + path);
    if (line != "experiment,model,epsilon,mode,seed,metric,value")
        throw std::runtime_error("unexpected report csv header in " + path);

    Report rep;
    std::size_t lineno = 1;
    while (std::getline(is, line)) {
        ++lineno;
        if (line.empty()) continue;
        std::vector<std::string> fields;
        std::stringstream ss(line);
        std::string field;
        while (std::getline(ss, field, ',')) fields.push_back(field);
        if (fields.size() != 7) {
            std::ostringstream os;
            os << path << ":" << lineno << ": expected 7 fields, got "
               << fields.size();
            throw std::runtime_error(os.str());
        }
        Row r;
        r.experiment = fields[0];
        r.model = fields[1];
        r.epsilon = std::strtod(fields[2].c_str(), nullptr);
        r.mode = fields[3];
        r.seed = std::strtoull(fields[4].c_str(), nullptr, 10);
        r.metric = fields[5];
        r.value = std::strtod(fields[6].c_str(), nullptr);
        rep.add(std::move(r));
    }
    return rep;
}

double median(std::vector<double> values) {
    if (values.empty()) throw std::invalid_argument("median of empty set");
    std::sort(values.begin(), values.end());
    const std::size_t n = values.size();
    return n % 2 ? values[n / 2] : 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

double mean(const std::vector<double>& values) {
    if (values.empty()) throw std::invalid_argument("mean of empty set");
    double s = 0.0;
    for (double v : values) s += v;
    return s / static_cast<double>(values.size());
}

double standard_error(const std::vector<double>& values) {
    const std::size_t n = values.size();
    if (n < 2) return 0.0;
    const double m = mean(values);
    double ss = 0.0;
    for (double v : values) ss += (v - m) * (v - m);
    return std::sqrt(ss / (static_cast<double>(n) * (n - 1)));
}

}  // namespace plab::report
