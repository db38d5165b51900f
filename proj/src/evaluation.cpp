#include "toporag/evaluation.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>

#include <nlohmann/json.hpp>

#include "toporag/errors.hpp"

namespace toporag {

using nlohmann::json;

namespace {

std::string normalize(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r\n");
    std::string out = s.substr(b, e - b + 1);
    std::transform(out.begin(), out.end(), out.begin(), [](unsigned char c) {
        return static_cast<char>(c >= 'A' && c <= 'Z' ? c - 'A' + 'a' : c);
    });
    return out;
}

}  // namespace

Metric metric_for(DatasetTag tag) { return tag == DatasetTag::kWebQsp ? Metric::kHit : Metric::kAccuracy; }

std::string to_string(Metric metric) { return metric == Metric::kHit ? "hit" : "accuracy"; }

bool accuracy_match(const std::string& predicted, std::span<const std::string> gold) {
    const auto p = normalize(predicted);
    return std::any_of(gold.begin(), gold.end(), [&](const std::string& g) { return normalize(g) == p; });
}

bool hit_match(const std::string& predicted, std::span<const std::string> gold) {
    const auto p = normalize(predicted);
    return std::any_of(gold.begin(), gold.end(), [&](const std::string& g) {
        const auto n = normalize(g);
        return !n.empty() && p.find(n) != std::string::npos;
    });
}

std::map<std::string, std::string> answer_table(std::span<const QaExample> examples) {
    std::map<std::string, std::string> table;
    for (const auto& ex : examples) {
        if (!ex.answers.empty()) table.emplace(ex.question, ex.answers.front());
    }
    return table;
}

EvalReport evaluate(std::span<const QaExample> examples, const Pipeline& pipeline, std::span<const int> k2_sweep) {
    EvalReport report;
    if (!examples.empty()) {
        report.metric = metric_for(examples.front().dataset);
        for (const auto& ex : examples) {
            if (metric_for(ex.dataset) != report.metric) throw ValidationError("fixture mixes accuracy and hit datasets");
        }
    }
    const bool yes_no = pipeline.config().llm == "contains-context";
    const auto start = std::chrono::steady_clock::now();

    std::vector<LiftedGraph> lifted;
    lifted.reserve(examples.size());
    for (const auto& ex : examples) lifted.push_back(pipeline.lift(ex.graph));

    for (std::size_t i = 0; i < examples.size(); ++i) {
        const auto& ex = examples[i];
        const auto a = pipeline.answer(lifted[i], ex.question);
        EvalRecord r;
        r.idx = ex.idx;
        r.question = ex.question;
        r.predicted = a.completion.answer;
        r.gold = yes_no ? std::vector<std::string>{"yes"} : ex.answers;
        r.correct = report.metric == Metric::kHit ? hit_match(r.predicted, r.gold) : accuracy_match(r.predicted, r.gold);
        const auto stats = subcomplex_stats(a.retrieval.subcomplex);
        r.n0 = stats.n0;
        r.n1 = stats.n1;
        r.n2 = stats.n2;
        r.latency_ms = a.latency_ms;
        report.records.push_back(std::move(r));
    }

    std::size_t correct = 0;
    for (const auto& r : report.records) correct += r.correct ? 1 : 0;
    report.score = report.records.empty() ? 0.0
                                          : static_cast<double>(correct) / static_cast<double>(report.records.size());

    auto size_row = [&](int k2, auto&& counts) {
        SizeRow row;
        row.k2 = k2;
        row.examples = examples.size();
        for (std::size_t i = 0; i < examples.size(); ++i) {
            const auto [n0, n1, n2] = counts(i);
            row.n0 += static_cast<double>(n0);
            row.n1 += static_cast<double>(n1);
            row.n2 += static_cast<double>(n2);
        }
        if (row.examples) {
            const auto n = static_cast<double>(row.examples);
            row.n0 /= n;
            row.n1 /= n;
            row.n2 /= n;
        }
        return row;
    };
    if (k2_sweep.empty()) {
        report.sizes.push_back(size_row(pipeline.config().k2, [&](std::size_t i) {
            const auto& r = report.records[i];
            return std::tuple{r.n0, r.n1, r.n2};
        }));
    } else {
        for (int k2 : k2_sweep) {
            report.sizes.push_back(size_row(k2, [&](std::size_t i) {
                const auto s = subcomplex_stats(pipeline.retrieve(lifted[i], examples[i].question, k2).subcomplex);
                return std::tuple{s.n0, s.n1, s.n2};
            }));
        }
    }
    report.total_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
    report.mean_ms = report.records.empty() ? 0.0 : report.total_ms / static_cast<double>(report.records.size());
    return report;
}

std::string report_to_json(const EvalReport& report, int indent) {
    json records = json::array();
    for (const auto& r : report.records) {
        records.push_back({{"idx", r.idx},
                           {"question", r.question},
                           {"predicted", r.predicted},
                           {"gold", r.gold},
                           {"correct", r.correct},
                           {"n0", r.n0},
                           {"n1", r.n1},
                           {"n2", r.n2},
                           {"latency_ms", r.latency_ms}});
    }
    json sizes = json::array();
    for (const auto& s : report.sizes) {
        sizes.push_back({{"k2", s.k2}, {"n0", s.n0}, {"n1", s.n1}, {"n2", s.n2}, {"examples", s.examples}});
    }
    json doc = {{"metric", to_string(report.metric)},
                {"score", report.score},
                {"records", std::move(records)},
                {"sizes", std::move(sizes)},
                {"total_ms", report.total_ms},
                {"mean_ms", report.mean_ms}};
    return doc.dump(indent);
}

std::string size_table(const EvalReport& report) {
    std::string out = "k2  0-cells  1-cells  2-cells\n";
    char line[96];
    for (const auto& s : report.sizes) {
        std::snprintf(line, sizeof line, "%-3d %8.2f %8.2f %8.2f\n", s.k2, s.n0, s.n1, s.n2);
        out += line;
    }
    return out;
}

}  // namespace toporag
