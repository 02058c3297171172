#include "pwh/bench.hpp"

#include <algorithm>
#include <cctype>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iterator>
#include <numeric>
#include <random>
#include <sstream>

#include <json.hpp>

#include "pwh/construct.hpp"
#include "pwh/error.hpp"
#include "pwh/preprocess.hpp"
#include "pwh/storage.hpp"

namespace pwh {
namespace {

// RFC 4180 records; an empty field is a missing value.
std::vector<std::vector<RawCell>> read_records(std::istream& in) {
    const std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    std::vector<std::vector<RawCell>> records;
    std::vector<RawCell> record;
    std::string field;
    bool in_quotes = false, any = false;
    std::size_t line = 1;
    auto end_field = [&] {
        if (field.empty()) record.emplace_back(std::nullopt);
        else record.emplace_back(std::move(field));
        field.clear();
    };
    auto end_record = [&] {
        end_field();
        // Blank lines carry no data.
        if (!(record.size() == 1 && !record[0])) records.push_back(std::move(record));
        record.clear();
        any = false;
    };
    for (std::size_t i = 0; i < text.size(); ++i) {
        const char c = text[i];
        any = true;
        if (in_quotes) {
            if (c == '"') {
                if (i + 1 < text.size() && text[i + 1] == '"') {
                    field.push_back('"');
                    ++i;
                } else {
                    in_quotes = false;
                }
            } else {
                if (c == '\n') ++line;
                field.push_back(c);
            }
            continue;
        }
        switch (c) {
            case '"':
                if (!field.empty()) throw InputError("stray quote on line " + std::to_string(line));
                in_quotes = true;
                break;
            case ',': end_field(); break;
            case '\r': break;
            case '\n':
                end_record();
                ++line;
                break;
            default: field.push_back(c);
        }
    }
    if (in_quotes) throw InputError("unterminated quote at end of input");
    if (any) end_record();
    return records;
}

}  // namespace

Table ingest_csv(std::istream& in, const SchemaHints& hints) {
    auto records = read_records(in);
    if (records.empty()) throw InputError("CSV has no header row");
    const auto& header = records.front();
    const std::size_t d = header.size();
    std::vector<std::vector<RawCell>> cols(d);
    for (std::size_t r = 1; r < records.size(); ++r) {
        if (records[r].size() != d)
            throw InputError("row " + std::to_string(r) + " has " + std::to_string(records[r].size()) +
                             " fields, expected " + std::to_string(d));
        for (std::size_t c = 0; c < d; ++c) cols[c].push_back(std::move(records[r][c]));
    }
    if (records.size() < 2) throw InputError("CSV has no data rows");
    Table table;
    for (std::size_t c = 0; c < d; ++c) {
        const std::string name = header[c].value_or("column" + std::to_string(c));
        std::optional<ColumnKind> declared;
        if (auto it = hints.find(name); it != hints.end()) declared = it->second;
        ColumnSpec spec;
        try {
            spec = infer_column_spec(cols[c], declared);
        } catch (const InputError& e) {
            throw InputError("column '" + name + "': " + e.what());
        }
        spec.name = name;
        spec.id = static_cast<std::uint32_t>(c);
        table.columns.push_back(encode_column(cols[c], spec));
        table.specs.push_back(std::move(spec));
    }
    return table;
}

Table ingest_csv(const std::filesystem::path& path, const SchemaHints& hints) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open '" + path.string() + "'");
    return ingest_csv(in, hints);
}

bool row_matches(const Table& table, const Predicate& p, std::size_t row) {
    switch (p.kind) {
        case Predicate::Kind::And:
            return std::all_of(p.children.begin(), p.children.end(),
                               [&](const Predicate& c) { return row_matches(table, c, row); });
        case Predicate::Kind::Or:
            return std::any_of(p.children.begin(), p.children.end(),
                               [&](const Predicate& c) { return row_matches(table, c, row); });
        case Predicate::Kind::Leaf: break;
    }
    const auto& c = p.condition;
    const bool null = table.is_null(c.column, row);
    switch (c.kind) {
        case Condition::Literal::Null: return (c.op == CompareOp::Equal) == null;
        case Condition::Literal::UnknownCategory: return !null && c.op == CompareOp::NotEqual;
        case Condition::Literal::Value: break;
    }
    return !null && c.matches(static_cast<double>(table.columns[c.column][row]));
}

namespace {

OracleResult aggregate_rows(const Table& table, const QueryPlan& plan, const std::vector<std::size_t>& rows) {
    OracleResult out;
    out.selected = rows.size();
    if (plan.aggregate == Aggregate::Count && !plan.agg_column) {
        out.value = static_cast<double>(rows.size());
        return out;
    }
    const auto col = *plan.agg_column;
    const auto& spec = table.specs[col];
    std::vector<double> x;
    x.reserve(rows.size());
    for (auto r : rows)
        if (!table.is_null(col, r)) x.push_back(spec.decode(static_cast<double>(table.columns[col][r])));
    if (plan.aggregate == Aggregate::Count) {
        out.value = static_cast<double>(x.size());
        return out;
    }
    if (x.empty()) {
        // SUM of nothing is 0 here, as in the engine.
        out.empty = plan.aggregate != Aggregate::Sum;
        return out;
    }
    const double n = static_cast<double>(x.size());
    switch (plan.aggregate) {
        case Aggregate::Sum: out.value = std::accumulate(x.begin(), x.end(), 0.0); break;
        case Aggregate::Avg: out.value = std::accumulate(x.begin(), x.end(), 0.0) / n; break;
        case Aggregate::Min: out.value = *std::min_element(x.begin(), x.end()); break;
        case Aggregate::Max: out.value = *std::max_element(x.begin(), x.end()); break;
        case Aggregate::Median: {
            const std::size_t k = (x.size() + 1) / 2 - 1;
            std::nth_element(x.begin(), x.begin() + static_cast<std::ptrdiff_t>(k), x.end());
            out.value = x[k];
            break;
        }
        case Aggregate::Var: {
            const double mean = std::accumulate(x.begin(), x.end(), 0.0) / n;
            double ss = 0.0;
            for (double v : x) ss += (v - mean) * (v - mean);
            out.value = ss / n;
            break;
        }
        case Aggregate::Count: break;
    }
    return out;
}

}  // namespace

OracleResult exact_oracle(const Table& table, const QueryPlan& plan) {
    std::vector<std::size_t> rows;
    for (std::size_t r = 0; r < table.rows(); ++r)
        if (!plan.predicate || row_matches(table, *plan.predicate, r)) rows.push_back(r);
    auto out = aggregate_rows(table, plan, rows);
    if (plan.group_by) {
        const auto g = *plan.group_by;
        const auto& spec = table.specs[g];
        std::vector<std::vector<std::size_t>> split(spec.categories.size());
        for (auto r : rows)
            if (!table.is_null(g, r)) split[static_cast<std::size_t>(table.columns[g][r])].push_back(r);
        for (std::size_t k = 0; k < split.size(); ++k) {
            const auto sub = aggregate_rows(table, plan, split[k]);
            out.groups.push_back({spec.categories[k], sub.value, sub.empty});
        }
    }
    return out;
}

Synopsis schema_synopsis(const Table& table) {
    Synopsis syn;
    syn.columns = table.specs;
    for (std::size_t c = 0; c < syn.columns.size(); ++c) {
        syn.columns[c].id = static_cast<std::uint32_t>(c);
        syn.columns[c].rebuild_index();
    }
    return syn;
}

namespace {

std::string quote_ident(const std::string& name) {
    const bool plain = !name.empty() && !std::isdigit(static_cast<unsigned char>(name[0])) &&
                       std::all_of(name.begin(), name.end(), [](char c) {
                           return std::isalnum(static_cast<unsigned char>(c)) || c == '_';
                       });
    if (plain) return name;
    std::string out = "\"";
    for (char c : name) {
        if (c == '"') out.push_back('"');
        out.push_back(c);
    }
    return out + "\"";
}

std::string quote_string(const std::string& s) {
    std::string out = "'";
    for (char c : s) {
        if (c == '\'') out.push_back('\'');
        out.push_back(c);
    }
    return out + "'";
}

}  // namespace

std::vector<GeneratedQuery> generate_queries(const Table& table, const GeneratorOptions& options) {
    if (options.count == 0) return {};
    if (options.aggregates.empty()) throw InputError("no aggregates to draw from");
    if (options.max_conditions == 0) throw InputError("max conditions must be at least 1");
    if (table.rows() == 0) throw InputError("cannot generate queries for an empty table");
    const auto schema = schema_synopsis(table);
    std::vector<std::uint32_t> numeric;
    for (const auto& s : schema.columns)
        if (s.numeric()) numeric.push_back(s.id);

    std::mt19937_64 rng(options.seed);
    auto pick = [&](std::size_t n) { return std::uniform_int_distribution<std::size_t>(0, n - 1)(rng); };
    const std::size_t d = table.specs.size();
    const std::size_t max_draws = 1000 * options.count;

    std::vector<GeneratedQuery> out;
    for (std::size_t draws = 0; out.size() < options.count; ++draws) {
        if (draws >= max_draws)
            throw InputError("cannot reach the selectivity floor after " + std::to_string(max_draws) + " draws");
        const auto agg = options.aggregates[pick(options.aggregates.size())];
        std::string target = "*";
        if (agg != Aggregate::Count) {
            if (numeric.empty()) throw InputError("no numeric column for " + std::string(to_string(agg)));
            target = quote_ident(table.specs[numeric[pick(numeric.size())]].name);
        }
        std::string where;
        const std::size_t conds = 1 + pick(options.max_conditions);
        for (std::size_t k = 0; k < conds; ++k) {
            const auto col = pick(d);
            const auto& spec = table.specs[col];
            const auto row = pick(table.rows());
            if (k > 0) where += pick(2) == 0 ? " AND " : " OR ";
            where += quote_ident(spec.name);
            if (table.is_null(col, row)) {
                where += pick(2) == 0 ? " IS NULL" : " IS NOT NULL";
                continue;
            }
            const auto text = *decode_cell(table.columns[col][row], spec);
            if (spec.kind == ColumnKind::Categorical) {
                where += pick(2) == 0 ? " = " : " != ";
                where += quote_string(text);
            } else {
                static constexpr const char* ops[] = {" < ", " > ", " <= ", " >= "};
                where += ops[pick(4)];
                where += spec.kind == ColumnKind::Datetime ? quote_string(text) : text;
            }
        }
        GeneratedQuery q;
        q.sql = "SELECT " + std::string(to_string(agg)) + "(" + target + ") FROM t WHERE " + where;
        q.plan = parse_query(q.sql, schema);
        std::size_t hits = 0;
        for (std::size_t r = 0; r < table.rows(); ++r) hits += row_matches(table, *q.plan.predicate, r);
        const double selectivity = static_cast<double>(hits) / static_cast<double>(table.rows());
        if (hits == 0 || selectivity < options.min_selectivity) continue;
        out.push_back(std::move(q));
    }
    return out;
}

double relative_error(double estimate, double exact) {
    return std::abs(estimate - exact) / std::max(std::abs(exact), 1e-12);
}

namespace {

double median(std::vector<double> v) {
    if (v.empty()) return 0.0;
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    return n % 2 ? v[n / 2] : (v[n / 2 - 1] + v[n / 2]) / 2.0;
}

AggregateSummary summarize(Aggregate agg, const std::vector<const QueryRecord*>& recs) {
    AggregateSummary s;
    s.aggregate = agg;
    s.queries = recs.size();
    if (recs.empty()) return s;
    std::vector<double> errors, widths;
    std::size_t correct = 0;
    for (const auto* r : recs) {
        errors.push_back(r->relative_error);
        correct += r->bound_correct;
        if (!r->exact.empty && !r->result.empty)
            widths.push_back((r->result.upper - r->result.lower) / std::max(std::abs(r->exact.value), 1e-12) * 100.0);
    }
    s.median_error = median(errors);
    s.mean_error = std::accumulate(errors.begin(), errors.end(), 0.0) / static_cast<double>(errors.size());
    s.bound_correct_rate = static_cast<double>(correct) / static_cast<double>(recs.size());
    s.median_bound_width = median(widths);
    return s;
}

double ms_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
}

}  // namespace

BenchReport run_benchmark(const Table& table, Params params, const std::vector<GeneratedQuery>& queries,
                          const BenchOptions& options) {
    BenchReport rep;
    rep.seed = options.seed;
    BuildOptions build;
    build.seed = options.seed;
    build.threads = options.threads;
    const auto t0 = std::chrono::steady_clock::now();
    const auto syn = build_pairwise_hist(table, params, build);
    rep.construction_seconds = ms_since(t0) / 1000.0;
    rep.params = syn.params;
    rep.synopsis_bytes = serialize(syn).size();

    std::vector<double> lat, exec_lat;
    for (const auto& q : queries) {
        QueryRecord rec;
        rec.sql = q.sql;
        rec.aggregate = q.plan.aggregate;
        auto t = std::chrono::steady_clock::now();
        rec.result = run_query(q.sql, syn, options.query);
        rec.latency_ms = ms_since(t);
        t = std::chrono::steady_clock::now();
        const auto again = execute(q.plan, syn, options.query);
        rec.exec_latency_ms = ms_since(t);
        if (again.estimate != rec.result.estimate && !(std::isnan(again.estimate) && std::isnan(rec.result.estimate)))
            throw InvariantError("parsed and generated plans disagree for: " + q.sql);
        rec.exact = exact_oracle(table, q.plan);
        if (rec.exact.empty || rec.result.empty) {
            rec.relative_error = rec.exact.empty == rec.result.empty ? 0.0 : 1.0;
            rec.bound_correct = rec.exact.empty == rec.result.empty;
        } else {
            rec.relative_error = relative_error(rec.result.estimate, rec.exact.value);
            rec.bound_correct = rec.result.lower <= rec.exact.value && rec.exact.value <= rec.result.upper;
        }
        lat.push_back(rec.latency_ms);
        exec_lat.push_back(rec.exec_latency_ms);
        rep.per_query.push_back(std::move(rec));
    }
    rep.median_latency_ms = median(lat);
    rep.median_exec_latency_ms = median(exec_lat);

    std::vector<const QueryRecord*> all;
    for (const auto& r : rep.per_query) all.push_back(&r);
    rep.overall = summarize(Aggregate::Count, all);
    for (auto agg : {Aggregate::Count, Aggregate::Sum, Aggregate::Avg, Aggregate::Min, Aggregate::Max,
                     Aggregate::Median, Aggregate::Var}) {
        std::vector<const QueryRecord*> recs;
        for (const auto& r : rep.per_query)
            if (r.aggregate == agg) recs.push_back(&r);
        if (!recs.empty()) rep.per_aggregate.push_back(summarize(agg, recs));
    }
    return rep;
}

void write_text_report(const BenchReport& rep, std::ostream& out) {
    char line[160];
    std::snprintf(line, sizeof line, "%-8s %7s %12s %12s %12s %14s\n", "agg", "queries", "median_err%",
                  "mean_err%", "bounds_ok%", "median_width%");
    out << line;
    auto row = [&](std::string_view name, const AggregateSummary& s) {
        std::snprintf(line, sizeof line, "%-8.*s %7zu %12.4f %12.4f %12.1f %14.4f\n", static_cast<int>(name.size()),
                      name.data(), s.queries, s.median_error * 100.0, s.mean_error * 100.0,
                      s.bound_correct_rate * 100.0, s.median_bound_width);
        out << line;
    };
    for (const auto& s : rep.per_aggregate) row(to_string(s.aggregate), s);
    row("ALL", rep.overall);
    out << "synopsis bytes:      " << rep.synopsis_bytes << "\n";
    std::snprintf(line, sizeof line, "construction:        %.3f s\n", rep.construction_seconds);
    out << line;
    std::snprintf(line, sizeof line, "median latency:      %.4f ms (parse-inclusive), %.4f ms (execute only)\n",
                  rep.median_latency_ms, rep.median_exec_latency_ms);
    out << line;
}

void write_jsonl_report(const BenchReport& rep, std::ostream& out, bool include_timings) {
    using nlohmann::ordered_json;
    ordered_json build = {{"record", "build"},
                          {"rows", rep.params.rows},
                          {"samples", rep.params.samples},
                          {"min_points", rep.params.min_points},
                          {"alpha", rep.params.alpha},
                          {"columns", rep.params.columns},
                          {"seed", rep.seed},
                          {"synopsis_bytes", rep.synopsis_bytes}};
    if (include_timings) build["construction_seconds"] = rep.construction_seconds;
    out << build.dump() << '\n';
    for (const auto& q : rep.per_query) {
        ordered_json j = {{"record", "query"},
                          {"sql", q.sql},
                          {"aggregate", to_string(q.aggregate)},
                          {"estimate", q.result.estimate},
                          {"lower", q.result.lower},
                          {"upper", q.result.upper},
                          {"empty", q.result.empty},
                          {"exact", q.exact.value},
                          {"exact_empty", q.exact.empty},
                          {"selected_rows", q.exact.selected},
                          {"relative_error", q.relative_error},
                          {"bound_correct", q.bound_correct}};
        if (include_timings) {
            j["latency_ms"] = q.latency_ms;
            j["exec_latency_ms"] = q.exec_latency_ms;
        }
        out << j.dump() << '\n';
    }
    auto summary = [&](std::string_view name, const AggregateSummary& s) {
        ordered_json j = {{"record", "summary"},
                          {"aggregate", name},
                          {"queries", s.queries},
                          {"median_relative_error", s.median_error},
                          {"mean_relative_error", s.mean_error},
                          {"bound_correct_rate", s.bound_correct_rate},
                          {"median_bound_width_pct", s.median_bound_width}};
        out << j.dump() << '\n';
    };
    for (const auto& s : rep.per_aggregate) summary(to_string(s.aggregate), s);
    summary("ALL", rep.overall);
    if (include_timings) {
        ordered_json j = {{"record", "latency"},
                          {"median_latency_ms", rep.median_latency_ms},
                          {"median_exec_latency_ms", rep.median_exec_latency_ms}};
        out << j.dump() << '\n';
    }
}

}  // namespace pwh
