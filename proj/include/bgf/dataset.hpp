#pragma once

#include <cstddef>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace bgf {

struct CovariateSpec {
    std::string name;
    bool binary = false;
    bool tailoring = false;
    bool baseline_only = false;
};

/// Declares the covariate columns of a long-format dataset. Baseline-only
/// covariates are observed at t = 0 only; the rest are time-varying.
struct CovariateSchema {
    std::vector<CovariateSpec> covariates;

    std::vector<std::size_t> time_varying_indices() const;
    std::vector<std::size_t> baseline_only_indices() const;
    std::size_t num_time_varying() const { return time_varying_indices().size(); }
    bool has_tailoring() const;
};

/// Parses one covariate per line, e.g.
///   name=l2 type=continuous tailoring=true baseline_only=false
/// Lines starting with '#' and blank lines are ignored. type is required;
/// tailoring and baseline_only default to false.
CovariateSchema parse_schema(std::istream& in);
CovariateSchema parse_schema_file(const std::string& path);
void write_schema(std::ostream& out, const CovariateSchema& schema);

/// One at-risk person-period: covariates L_t (time-varying only; baseline
/// extras live on the subject), treatment A_t, then C_{t+1} and Y_{t+1}.
/// event_next is absent exactly when censored_next = 1.
struct PersonPeriodRecord {
    int t = 0;
    std::vector<double> covariates;
    int treatment = 0;
    int censored_next = 0;
    std::optional<int> event_next;
};

struct SubjectRecord {
    std::string id;
    std::vector<double> baseline_extra; // baseline-only covariates, schema order
    std::vector<PersonPeriodRecord> periods;

    bool had_event() const;
    bool was_censored() const;
    /// Event period (1-based, the t+1 of the terminal record), or 0 if none.
    int event_time() const;
};

class LongitudinalDataset {
public:
    LongitudinalDataset(CovariateSchema schema, std::vector<SubjectRecord> subjects,
                        int horizon);

    const CovariateSchema& schema() const { return schema_; }
    const std::vector<SubjectRecord>& subjects() const { return subjects_; }
    int horizon() const { return horizon_; }

    std::size_t num_person_periods() const;
    double censored_fraction() const;
    double ever_treated_fraction() const;
    double event_fraction() const;

    /// Checks every invariant of the data model; throws DataError subclasses.
    void validate() const;

private:
    CovariateSchema schema_;
    std::vector<SubjectRecord> subjects_;
    int horizon_;
};

/// Long-format CSV: header id,t,a,c_next,y_next,<covariates...>.
/// y_next is empty when censored; baseline-only columns are empty at t > 0.
LongitudinalDataset load_dataset(std::istream& in, const CovariateSchema& schema);
LongitudinalDataset load_dataset_file(const std::string& path, const CovariateSchema& schema);
void write_dataset(std::ostream& out, const LongitudinalDataset& data);

} // namespace bgf
