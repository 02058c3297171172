#include <cstdio>
#include <fstream>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "pwh/bench.hpp"
#include "pwh/construct.hpp"
#include "pwh/error.hpp"
#include "pwh/query.hpp"
#include "pwh/storage.hpp"

namespace {

struct BuildArgs {
    std::uint64_t samples = 0;  // 0: min(N, 100000)
    std::uint32_t min_points = 0;  // 0: 1% of samples
    double alpha = 0.001;
    std::uint64_t seed = 0;
    unsigned threads = 1;
};

void add_build_flags(CLI::App* cmd, BuildArgs& a) {
    cmd->add_option("--samples", a.samples, "sample size Ns (default min(N, 100000))");
    cmd->add_option("--min-points", a.min_points, "minimum points per split M (default 1% of Ns)");
    cmd->add_option("--alpha", a.alpha, "significance level of the uniformity test")->capture_default_str();
    cmd->add_option("--seed", a.seed, "sampling seed")->capture_default_str();
    cmd->add_option("--threads", a.threads, "worker threads for construction")->capture_default_str();
}

pwh::Params make_params(const BuildArgs& a, std::size_t rows) {
    pwh::Params p;
    p.rows = rows;
    p.samples = a.samples ? a.samples : std::min<std::uint64_t>(rows, 100000);
    p.min_points = a.min_points ? a.min_points : std::max<std::uint32_t>(2, static_cast<std::uint32_t>(p.samples / 100));
    p.alpha = a.alpha;
    return p;
}

std::string num(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.10g", v);
    return buf;
}

void print_result(const std::string& label, double est, double lo, double hi, bool empty, bool bounds) {
    if (!label.empty()) std::cout << label << '\t';
    if (empty) {
        std::cout << "NULL\n";
        return;
    }
    std::cout << num(est);
    if (bounds) std::cout << '\t' << num(lo) << '\t' << num(hi);
    std::cout << '\n';
}

int run_inspect(const std::string& path) {
    const auto syn = pwh::load_synopsis(path);
    const auto rep = pwh::storage_report(syn);
    const std::size_t d = syn.columns.size();
    std::cout << "rows " << syn.params.rows << ", samples " << syn.params.samples << ", min points "
              << syn.params.min_points << ", alpha " << num(syn.params.alpha) << ", columns " << d << "\n";
    std::cout << "magic            " << rep.magic << " B\n";
    std::cout << "parameters       " << rep.params << " B\n";
    for (std::size_t c = 0; c < d; ++c)
        std::cout << "1-d " << syn.columns[c].name << " (" << pwh::to_string(syn.columns[c].kind)
                  << ", k=" << syn.hists1d[c].size() << ", m=" << int(syn.columns[c].byte_depth) << ")  "
                  << rep.one_d[c] << " B\n";
    std::size_t p = 0;
    for (const auto& h : syn.hists2d)
        std::cout << "2-d (" << syn.columns[h.row_column].name << "," << syn.columns[h.col_column].name << ") "
                  << h.rows() << "x" << h.cols() << "  " << rep.two_d[p++] << " B\n";
    p = 0;
    for (std::size_t i = 0; i < d; ++i)
        for (std::size_t j = i; j < d; ++j, ++p)
            std::cout << "counts (" << i << "," << j << ") " << (rep.sparse[p] ? "sparse" : "dense") << "  "
                      << rep.counts[p] << " B\n";
    std::cout << "schema trailer   " << rep.schema << " B\n";
    std::cout << "total            " << rep.total << " B (layout " << rep.layout_bytes() << " B, bound "
              << pwh::storage_upper_bound(syn) << " B)\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Pairwise-histogram approximate query engine"};
    app.require_subcommand(1);

    BuildArgs build_args;
    std::string csv, out_path;
    auto* build = app.add_subcommand("build", "build a synopsis from a CSV file");
    build->add_option("csv", csv, "input CSV with a header row")->required();
    build->add_option("-o,--output", out_path, "synopsis file to write")->required();
    add_build_flags(build, build_args);

    std::string syn_path, sql;
    bool bounds = false;
    auto* query = app.add_subcommand("query", "answer an aggregate query from a synopsis");
    query->add_option("synopsis", syn_path, "synopsis file")->required();
    query->add_option("sql", sql, "SELECT statement")->required();
    query->add_flag("--bounds", bounds, "also print lower and upper bounds");

    BuildArgs bench_args;
    std::size_t n_queries = 100, max_conditions = 5;
    double min_selectivity = 1e-6;
    std::string report_path;
    bool timings = false;
    auto* bench = app.add_subcommand("bench", "benchmark against an exact scan");
    bench->add_option("csv", csv, "input CSV with a header row")->required();
    bench->add_option("--queries", n_queries, "number of generated queries")->capture_default_str();
    bench->add_option("--min-selectivity", min_selectivity, "smallest accepted fraction of matching rows")->capture_default_str();
    bench->add_option("--max-conditions", max_conditions, "most predicate conditions per query")->capture_default_str();
    bench->add_option("--report", report_path, "line-delimited JSON report file");
    bench->add_flag("--timings", timings, "include timings in the report file");
    add_build_flags(bench, bench_args);

    auto* inspect = app.add_subcommand("inspect", "print block sizes of a synopsis");
    inspect->add_option("synopsis", syn_path, "synopsis file")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (*build) {
            const auto table = pwh::ingest_csv(csv);
            pwh::BuildOptions opts;
            opts.seed = build_args.seed;
            opts.threads = build_args.threads;
            const auto syn = pwh::build_pairwise_hist(table, make_params(build_args, table.rows()), opts);
            pwh::save_synopsis(syn, out_path);
            std::cout << "wrote " << out_path << " (" << pwh::serialize(syn).size() << " bytes)\n";
        } else if (*query) {
            const auto syn = pwh::load_synopsis(syn_path);
            const auto r = pwh::run_query(sql, syn);
            if (r.groups.empty()) {
                print_result("", r.estimate, r.lower, r.upper, r.empty, bounds);
            } else {
                for (const auto& g : r.groups) print_result(g.label, g.estimate, g.lower, g.upper, g.empty, bounds);
            }
        } else if (*bench) {
            const auto table = pwh::ingest_csv(csv);
            pwh::GeneratorOptions gen;
            gen.count = n_queries;
            gen.seed = bench_args.seed;
            gen.min_selectivity = min_selectivity;
            gen.max_conditions = max_conditions;
            const auto queries = pwh::generate_queries(table, gen);
            pwh::BenchOptions opts;
            opts.seed = bench_args.seed;
            opts.threads = bench_args.threads;
            const auto rep = pwh::run_benchmark(table, make_params(bench_args, table.rows()), queries, opts);
            pwh::write_text_report(rep, std::cout);
            if (!report_path.empty()) {
                std::ofstream out(report_path);
                if (!out) throw pwh::IoError("cannot open '" + report_path + "' for writing");
                pwh::write_jsonl_report(rep, out, timings);
            }
        } else if (*inspect) {
            return run_inspect(syn_path);
        }
    } catch (const pwh::QueryError& e) {
        std::cerr << "query error: " << e.what() << "\n";
        return 2;
    } catch (const pwh::IoError& e) {
        std::cerr << "i/o error: " << e.what() << "\n";
        return 3;
    } catch (const pwh::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
