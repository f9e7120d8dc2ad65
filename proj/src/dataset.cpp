#include "bgf/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

#include "bgf/errors.hpp"

namespace bgf {

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> fields;
    std::string cur;
    for (char ch : line) {
        if (ch == ',') {
            fields.push_back(cur);
            cur.clear();
        } else if (ch != '\r') {
            cur.push_back(ch);
        }
    }
    fields.push_back(cur);
    return fields;
}

double parse_number(const std::string& s, const std::string& context) {
    try {
        std::size_t pos = 0;
        const double v = std::stod(s, &pos);
        if (pos != s.size()) throw MalformedRow("non-numeric field '" + s + "' in " + context);
        return v;
    } catch (const MalformedRow&) {
        throw;
    } catch (...) {
        throw MalformedRow("non-numeric field '" + s + "' in " + context);
    }
}

int parse_binary(const std::string& s, const std::string& context) {
    const double v = parse_number(s, context);
    if (v != 0.0 && v != 1.0) throw MalformedRow("expected 0/1, got '" + s + "' in " + context);
    return static_cast<int>(v);
}

std::string format_value(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

} // namespace

std::vector<std::size_t> CovariateSchema::time_varying_indices() const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < covariates.size(); ++i)
        if (!covariates[i].baseline_only) out.push_back(i);
    return out;
}

std::vector<std::size_t> CovariateSchema::baseline_only_indices() const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < covariates.size(); ++i)
        if (covariates[i].baseline_only) out.push_back(i);
    return out;
}

bool CovariateSchema::has_tailoring() const {
    return std::any_of(covariates.begin(), covariates.end(),
                       [](const CovariateSpec& c) { return c.tailoring && !c.baseline_only; });
}

CovariateSchema parse_schema(std::istream& in) {
    CovariateSchema schema;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto first = line.find_first_not_of(" \t\r");
        if (first == std::string::npos || line[first] == '#') continue;
        CovariateSpec spec;
        bool saw_name = false, saw_type = false;
        std::istringstream ls(line);
        std::string token;
        while (ls >> token) {
            const auto eq = token.find('=');
            if (eq == std::string::npos)
                throw ConfigError("schema line " + std::to_string(lineno) + ": expected key=value, got '" + token + "'");
            const std::string key = token.substr(0, eq);
            const std::string val = token.substr(eq + 1);
            if (key == "name") {
                spec.name = val;
                saw_name = true;
            } else if (key == "type") {
                if (val == "binary") spec.binary = true;
                else if (val == "continuous") spec.binary = false;
                else throw ConfigError("schema line " + std::to_string(lineno) + ": unknown type '" + val + "'");
                saw_type = true;
            } else if (key == "tailoring") {
                spec.tailoring = (val == "true");
            } else if (key == "baseline_only") {
                spec.baseline_only = (val == "true");
            } else {
                throw ConfigError("schema line " + std::to_string(lineno) + ": unknown key '" + key + "'");
            }
        }
        if (!saw_name || !saw_type)
            throw ConfigError("schema line " + std::to_string(lineno) + ": name and type are required");
        schema.covariates.push_back(std::move(spec));
    }
    return schema;
}

CovariateSchema parse_schema_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open schema file: " + path);
    return parse_schema(in);
}

void write_schema(std::ostream& out, const CovariateSchema& schema) {
    for (const auto& c : schema.covariates) {
        out << "name=" << c.name << " type=" << (c.binary ? "binary" : "continuous")
            << " tailoring=" << (c.tailoring ? "true" : "false")
            << " baseline_only=" << (c.baseline_only ? "true" : "false") << "\n";
    }
}

bool SubjectRecord::had_event() const {
    return !periods.empty() && periods.back().event_next.value_or(0) == 1;
}

bool SubjectRecord::was_censored() const {
    return !periods.empty() && periods.back().censored_next == 1;
}

int SubjectRecord::event_time() const {
    return had_event() ? periods.back().t + 1 : 0;
}

LongitudinalDataset::LongitudinalDataset(CovariateSchema schema,
                                         std::vector<SubjectRecord> subjects, int horizon)
    : schema_(std::move(schema)), subjects_(std::move(subjects)), horizon_(horizon) {
    validate();
}

std::size_t LongitudinalDataset::num_person_periods() const {
    std::size_t n = 0;
    for (const auto& s : subjects_) n += s.periods.size();
    return n;
}

double LongitudinalDataset::censored_fraction() const {
    if (subjects_.empty()) return 0.0;
    std::size_t c = 0;
    for (const auto& s : subjects_) c += s.was_censored() ? 1 : 0;
    return static_cast<double>(c) / static_cast<double>(subjects_.size());
}

double LongitudinalDataset::ever_treated_fraction() const {
    if (subjects_.empty()) return 0.0;
    std::size_t c = 0;
    for (const auto& s : subjects_)
        c += std::any_of(s.periods.begin(), s.periods.end(),
                         [](const PersonPeriodRecord& p) { return p.treatment == 1; })
                 ? 1
                 : 0;
    return static_cast<double>(c) / static_cast<double>(subjects_.size());
}

double LongitudinalDataset::event_fraction() const {
    if (subjects_.empty()) return 0.0;
    std::size_t c = 0;
    for (const auto& s : subjects_) c += s.had_event() ? 1 : 0;
    return static_cast<double>(c) / static_cast<double>(subjects_.size());
}

void LongitudinalDataset::validate() const {
    if (horizon_ < 1) throw DataError("horizon must be >= 1");
    const std::size_t tv = schema_.num_time_varying();
    const std::size_t bl = schema_.baseline_only_indices().size();
    for (const auto& s : subjects_) {
        if (s.periods.empty())
            throw OrderingViolation("subject " + s.id + ": no baseline record at t=0");
        if (s.baseline_extra.size() != bl)
            throw SchemaMismatch("subject " + s.id + ": baseline covariate block has wrong width");
        for (std::size_t k = 0; k < s.periods.size(); ++k) {
            const auto& p = s.periods[k];
            if (p.t != static_cast<int>(k))
                throw OrderingViolation("subject " + s.id + ": records are not a contiguous prefix from t=0");
            if (p.covariates.size() != tv)
                throw SchemaMismatch("subject " + s.id + " t=" + std::to_string(p.t) +
                                     ": covariate width does not match schema");
            if (p.censored_next == 1 && p.event_next.has_value())
                throw MalformedRow("subject " + s.id + " t=" + std::to_string(p.t) +
                                   ": event recorded on a censored transition");
            if (p.censored_next == 0 && !p.event_next.has_value())
                throw MalformedRow("subject " + s.id + " t=" + std::to_string(p.t) +
                                   ": event status missing on an uncensored transition");
            const bool terminal = p.censored_next == 1 || p.event_next.value_or(0) == 1;
            const bool last = k + 1 == s.periods.size();
            if (terminal && !last)
                throw OrderingViolation("subject " + s.id + ": record exists after terminal period t=" +
                                        std::to_string(p.t));
            if (!terminal && last && p.t != horizon_ - 1)
                throw OrderingViolation("subject " + s.id + ": follow-up stops at t=" +
                                        std::to_string(p.t) + " without event or censoring");
        }
        if (static_cast<int>(s.periods.size()) > horizon_)
            throw OrderingViolation("subject " + s.id + ": record beyond the study horizon");
    }
}

LongitudinalDataset load_dataset(std::istream& in, const CovariateSchema& schema) {
    std::string line;
    if (!std::getline(in, line)) throw MalformedRow("empty input: missing header row");
    const auto header = split_csv_line(line);
    const std::size_t ncov = schema.covariates.size();
    if (header.size() != 5 + ncov)
        throw SchemaMismatch("header has " + std::to_string(header.size()) + " columns, expected " +
                             std::to_string(5 + ncov));
    static const char* fixed[] = {"id", "t", "a", "c_next", "y_next"};
    for (int i = 0; i < 5; ++i)
        if (header[i] != fixed[i])
            throw SchemaMismatch(std::string("header column ") + std::to_string(i + 1) +
                                 " must be '" + fixed[i] + "', got '" + header[i] + "'");
    for (std::size_t i = 0; i < ncov; ++i)
        if (header[5 + i] != schema.covariates[i].name)
            throw SchemaMismatch("header covariate '" + header[5 + i] + "' does not match schema '" +
                                 schema.covariates[i].name + "'");

    const auto tv_idx = schema.time_varying_indices();
    const auto bl_idx = schema.baseline_only_indices();

    std::vector<SubjectRecord> subjects;
    std::map<std::string, std::size_t> index; // id -> position (insertion order kept separately)
    int lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        const auto f = split_csv_line(line);
        const std::string ctx = "row " + std::to_string(lineno);
        if (f.size() != 5 + ncov) throw MalformedRow(ctx + ": wrong number of fields");

        PersonPeriodRecord rec;
        rec.t = static_cast<int>(parse_number(f[1], ctx));
        rec.treatment = parse_binary(f[2], ctx);
        rec.censored_next = parse_binary(f[3], ctx);
        if (f[4].empty()) {
            if (rec.censored_next == 0)
                throw MalformedRow(ctx + ": y_next missing but transition is uncensored");
        } else {
            if (rec.censored_next == 1)
                throw MalformedRow(ctx + ": y_next populated on a censored transition");
            rec.event_next = parse_binary(f[4], ctx);
        }
        rec.covariates.reserve(tv_idx.size());
        for (std::size_t j : tv_idx) {
            const auto& cell = f[5 + j];
            if (cell.empty()) throw MalformedRow(ctx + ": missing value for covariate " + schema.covariates[j].name);
            const double v = parse_number(cell, ctx);
            if (schema.covariates[j].binary && v != 0.0 && v != 1.0)
                throw MalformedRow(ctx + ": binary covariate " + schema.covariates[j].name + " not in {0,1}");
            rec.covariates.push_back(v);
        }

        auto it = index.find(f[0]);
        if (it == index.end()) {
            it = index.emplace(f[0], subjects.size()).first;
            subjects.push_back(SubjectRecord{f[0], {}, {}});
        }
        SubjectRecord& subj = subjects[it->second];
        if (rec.t == 0) {
            subj.baseline_extra.clear();
            subj.baseline_extra.reserve(bl_idx.size());
            for (std::size_t j : bl_idx) {
                const auto& cell = f[5 + j];
                if (cell.empty())
                    throw SchemaMismatch(ctx + ": baseline covariate " + schema.covariates[j].name +
                                         " missing at t=0 (baseline schema must be a superset)");
                subj.baseline_extra.push_back(parse_number(cell, ctx));
            }
        } else {
            for (std::size_t j : bl_idx)
                if (!f[5 + j].empty())
                    throw MalformedRow(ctx + ": baseline-only covariate " + schema.covariates[j].name +
                                       " populated at t>0");
        }
        subj.periods.push_back(std::move(rec));
    }
    if (subjects.empty()) throw MalformedRow("no data rows");

    int horizon = 1;
    for (auto& s : subjects) {
        std::sort(s.periods.begin(), s.periods.end(),
                  [](const PersonPeriodRecord& a, const PersonPeriodRecord& b) { return a.t < b.t; });
        for (std::size_t k = 0; k + 1 < s.periods.size(); ++k)
            if (s.periods[k].t == s.periods[k + 1].t)
                throw OrderingViolation("subject " + s.id + ": duplicate record at t=" +
                                        std::to_string(s.periods[k].t));
        horizon = std::max(horizon, s.periods.back().t + 1);
    }
    return LongitudinalDataset(schema, std::move(subjects), horizon);
}

LongitudinalDataset load_dataset_file(const std::string& path, const CovariateSchema& schema) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open dataset file: " + path);
    return load_dataset(in, schema);
}

void write_dataset(std::ostream& out, const LongitudinalDataset& data) {
    const auto& schema = data.schema();
    out << "id,t,a,c_next,y_next";
    for (const auto& c : schema.covariates) out << ',' << c.name;
    out << '\n';
    const auto tv_idx = schema.time_varying_indices();
    const auto bl_idx = schema.baseline_only_indices();
    for (const auto& s : data.subjects()) {
        for (const auto& p : s.periods) {
            out << s.id << ',' << p.t << ',' << p.treatment << ',' << p.censored_next << ',';
            if (p.event_next.has_value()) out << *p.event_next;
            // map schema order back to storage order
            std::size_t tv_pos = 0, bl_pos = 0;
            for (std::size_t j = 0; j < schema.covariates.size(); ++j) {
                out << ',';
                if (schema.covariates[j].baseline_only) {
                    if (p.t == 0) out << format_value(s.baseline_extra[bl_pos]);
                    ++bl_pos;
                } else {
                    out << format_value(p.covariates[tv_pos]);
                    ++tv_pos;
                }
            }
            out << '\n';
        }
    }
}

} // namespace bgf
