#pragma once

#include <cstdint>
#include <filesystem>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "pwh/model.hpp"
#include "pwh/query.hpp"

namespace pwh {

using SchemaHints = std::map<std::string, ColumnKind, std::less<>>;

Table ingest_csv(std::istream& in, const SchemaHints& hints = {});
Table ingest_csv(const std::filesystem::path& path, const SchemaHints& hints = {});

struct OracleResult {
    double value = 0.0;
    bool empty = false;
    std::size_t selected = 0;  // rows passing the predicate
    struct Group {
        std::string label;
        double value = 0.0;
        bool empty = false;
    };
    std::vector<Group> groups;
};

bool row_matches(const Table& table, const Predicate& predicate, std::size_t row);
OracleResult exact_oracle(const Table& table, const QueryPlan& plan);

// A synopsis holding only the schema; enough for parse_query.
Synopsis schema_synopsis(const Table& table);

struct GeneratedQuery {
    std::string sql;
    QueryPlan plan;
};

struct GeneratorOptions {
    std::size_t count = 100;
    std::uint64_t seed = 0;
    double min_selectivity = 1e-6;
    std::vector<Aggregate> aggregates{Aggregate::Count, Aggregate::Sum,    Aggregate::Avg, Aggregate::Min,
                                      Aggregate::Max,   Aggregate::Median, Aggregate::Var};
    std::size_t max_conditions = 5;
};

std::vector<GeneratedQuery> generate_queries(const Table& table, const GeneratorOptions& options);

struct QueryRecord {
    std::string sql;
    Aggregate aggregate = Aggregate::Count;
    AQPResult result;
    OracleResult exact;
    double relative_error = 0.0;
    bool bound_correct = false;
    double latency_ms = 0.0;       // parse + execute
    double exec_latency_ms = 0.0;  // execute only
};

struct AggregateSummary {
    Aggregate aggregate = Aggregate::Count;
    std::size_t queries = 0;
    double median_error = 0.0;
    double mean_error = 0.0;
    double bound_correct_rate = 0.0;
    double median_bound_width = 0.0;  // % of |exact|
};

struct BenchReport {
    Params params;
    std::uint64_t seed = 0;
    std::vector<QueryRecord> per_query;
    std::vector<AggregateSummary> per_aggregate;
    AggregateSummary overall;
    std::size_t synopsis_bytes = 0;
    double construction_seconds = 0.0;
    double median_latency_ms = 0.0;
    double median_exec_latency_ms = 0.0;
};

struct BenchOptions {
    std::uint64_t seed = 0;
    unsigned threads = 1;
    QueryOptions query;
};

double relative_error(double estimate, double exact);

BenchReport run_benchmark(const Table& table, Params params, const std::vector<GeneratedQuery>& queries,
                          const BenchOptions& options = {});

void write_text_report(const BenchReport& report, std::ostream& out);
// One JSON object per line; timings are left out unless asked for.
void write_jsonl_report(const BenchReport& report, std::ostream& out, bool include_timings = false);

}  // namespace pwh
