#include "seqclr/metrics.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>

#include "seqclr/charset.hpp"
#include "seqclr/errors.hpp"

namespace seqclr {

int edit_distance(const std::string& a, const std::string& b) {
    const std::vector<char32_t> s = utf8_decode(a), t = utf8_decode(b);
    const std::size_t n = s.size(), m = t.size();
    std::vector<int> prev(m + 1), curr(m + 1);
    for (std::size_t j = 0; j <= m; ++j) prev[j] = static_cast<int>(j);
    for (std::size_t i = 1; i <= n; ++i) {
        curr[0] = static_cast<int>(i);
        for (std::size_t j = 1; j <= m; ++j)
            curr[j] = std::min({prev[j] + 1, curr[j - 1] + 1,
                                prev[j - 1] + (s[i - 1] == t[j - 1] ? 0 : 1)});
        std::swap(prev, curr);
    }
    return prev[m];
}

nlohmann::json MetricsReport::to_json() const {
    return {{"acc", acc},          {"ed1", ed1},
            {"cer", cer},          {"wer", wer},
            {"n_samples", n_samples}, {"n_empty_references", n_empty_references}};
}

namespace {

std::string fold_case(const std::string& s) {
    std::string out = s;
    std::transform(out.begin(), out.end(), out.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return out;
}

}  // namespace

MetricsReport evaluate(const std::vector<std::string>& predictions,
                       const std::vector<std::string>& references, bool case_fold) {
    if (predictions.size() != references.size())
        throw ConfigError("evaluate: predictions/references length mismatch");
    if (predictions.empty()) throw ConfigError("evaluate: need at least one sample");

    MetricsReport r;
    r.n_samples = static_cast<int>(predictions.size());
    long dist_sum = 0, ref_len_sum = 0;
    int exact = 0, within1 = 0;
    for (std::size_t i = 0; i < predictions.size(); ++i) {
        const std::string pred = case_fold ? fold_case(predictions[i]) : predictions[i];
        const std::string ref = case_fold ? fold_case(references[i]) : references[i];
        const int d = edit_distance(pred, ref);
        dist_sum += d;
        ref_len_sum += static_cast<long>(utf8_decode(ref).size());
        if (ref.empty()) ++r.n_empty_references;
        if (d == 0) ++exact;
        if (d <= 1) ++within1;
    }
    r.acc = static_cast<double>(exact) / r.n_samples;
    r.ed1 = static_cast<double>(within1) / r.n_samples;
    r.cer = ref_len_sum > 0 ? static_cast<double>(dist_sum) / ref_len_sum
                            : (dist_sum > 0 ? 1.0 : 0.0);
    r.wer = 1.0 - r.acc;
    return r;
}

void write_errors_csv(const std::string& path, const std::vector<std::string>& predictions,
                      const std::vector<std::string>& references) {
    if (predictions.size() != references.size())
        throw ConfigError("write_errors_csv: length mismatch");
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw ConfigError("cannot write " + path);
    auto quote = [](const std::string& s) {
        std::string q = "\"";
        for (char c : s) {
            if (c == '"') q += '"';
            q += c;
        }
        return q + "\"";
    };
    out << "reference,prediction,edit_distance\n";
    for (std::size_t i = 0; i < predictions.size(); ++i)
        out << quote(references[i]) << ',' << quote(predictions[i]) << ','
            << edit_distance(predictions[i], references[i]) << '\n';
}

}  // namespace seqclr
