#pragma once

#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace seqclr {

// Unit-cost Levenshtein distance (insert / delete / substitute) over Unicode
// codepoints.
int edit_distance(const std::string& a, const std::string& b);

struct MetricsReport {
    double acc = 0.0;   // exact-match fraction
    double ed1 = 0.0;   // fraction within edit distance 1
    double cer = 0.0;   // sum of distances / sum of reference lengths
    double wer = 0.0;   // 1 - acc
    int n_samples = 0;
    int n_empty_references = 0;

    nlohmann::json to_json() const;
};

// Case-sensitive by default; case_fold lowercases both sides first (for
// cross-convention comparisons only).
MetricsReport evaluate(const std::vector<std::string>& predictions,
                       const std::vector<std::string>& references, bool case_fold = false);

// Per-sample error dump: reference, prediction, distance.
void write_errors_csv(const std::string& path, const std::vector<std::string>& predictions,
                      const std::vector<std::string>& references);

}  // namespace seqclr
