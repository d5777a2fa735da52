#include "restore_sim/cli.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <optional>

#include <CLI11.hpp>

#include "restore_sim/bench.hpp"
#include "restore_sim/errors.hpp"
#include "restore_sim/hashing.hpp"
#include "restore_sim/kmeans.hpp"
#include "restore_sim/reliability.hpp"
#include "restore_sim/report.hpp"

namespace restore_sim {

namespace {

using nlohmann::ordered_json;

std::uint64_t resolve_seed(const std::optional<std::uint64_t>& flag) {
    if (flag) {
        return *flag;
    }
    if (const char* env = std::getenv("RESTORE_SIM_SEED")) {
        try {
            std::size_t used = 0;
            const std::uint64_t value = std::stoull(env, &used);
            if (used != std::string(env).size()) {
                throw std::invalid_argument(env);
            }
            return value;
        } catch (const std::exception&) {
            throw ConfigError("RESTORE_SIM_SEED is not a decimal seed");
        }
    }
    return 42;
}

OutputFormat parse_format(const std::string& text) {
    if (text == "csv") {
        return OutputFormat::Csv;
    }
    if (text == "jsonl") {
        return OutputFormat::Jsonl;
    }
    throw ConfigError("unknown output format '" + text + "' (csv or jsonl)");
}

LoadMode parse_mode(const std::string& text) {
    if (text == "LocalLists" || text == "local") {
        return LoadMode::LocalLists;
    }
    if (text == "GlobalList" || text == "global") {
        return LoadMode::GlobalList;
    }
    throw ConfigError("unknown load mode '" + text + "' (GlobalList or LocalLists)");
}

/// Output sink: "-" is the caller's stream, anything else a file.
class Sink {
public:
    Sink(const std::string& path, std::ostream& fallback) {
        if (path == "-") {
            stream_ = &fallback;
            return;
        }
        file_.open(path, std::ios::binary);
        if (!file_) {
            throw ConfigError("cannot open output file '" + path + "'");
        }
        stream_ = &file_;
    }
    std::ostream& stream() { return *stream_; }

private:
    std::ofstream file_;
    std::ostream* stream_ = nullptr;
};

std::string join_ranks(const std::vector<rank_t>& ranks) {
    std::string text;
    for (const rank_t rank : ranks) {
        if (!text.empty()) {
            text += ' ';
        }
        text += std::to_string(rank);
    }
    return text;
}

/// expected-failures columns get prohibitively slow beyond this rank count
/// (the log-space sum is quadratic in p).
constexpr rank_t kExpectedFailuresSoftCap = 65536;

int cmd_idl_table(const std::vector<rank_t>& ps, rank_t r, std::uint64_t trials,
                  std::uint64_t seed, OutputFormat format, std::ostream& out,
                  std::ostream& err) {
    TableWriter writer(out, format,
                       {"p", "r", "f", "exact_le", "exact_eq", "approx", "mc_le", "mc_stderr",
                        "trials", "expected_failures_until_idl", "mean_failed_fraction",
                        "median_failed_fraction"});
    for (const rank_t p : ps) {
        const IdlAnalysis analysis(p, r);
        if (!analysis.exact()) {
            err << "note: p=" << p << " exceeds the exact-arithmetic bound ("
                << kExactMaxRanks << "); probabilities use log-space summation\n";
        }
        std::optional<LossSimulation> simulation;
        std::vector<double> cdf;
        if (trials > 0) {
            simulation = simulate_failures_until_idl(p, r, trials, derive_seed(seed, p));
            cdf = simulation->cdf(p);
        }
        for (rank_t f = 0; f <= p; ++f) {
            ordered_json row{{"p", p}, {"r", r}, {"f", f}};
            row["exact_le"] = analysis.prob_le(f).value;
            row["exact_eq"] = analysis.prob_eq(f).value;
            row["approx"] = analysis.approx(f);
            if (simulation) {
                const double mc = cdf[f];
                row["mc_le"] = mc;
                row["mc_stderr"] =
                    std::sqrt(mc * (1.0 - mc) / static_cast<double>(trials));
                row["trials"] = trials;
            }
            writer.row(row);
        }
        ordered_json summary{{"p", p}, {"r", r}};
        if (p <= kExpectedFailuresSoftCap) {
            summary["expected_failures_until_idl"] = analysis.expected_failures().value;
        } else {
            err << "note: skipping expected-failures column for p=" << p
                << " (quadratic cost at this scale)\n";
        }
        if (simulation) {
            summary["trials"] = trials;
            summary["mean_failed_fraction"] = simulation->mean_fraction;
            summary["median_failed_fraction"] =
                static_cast<double>(simulation->median) / static_cast<double>(p);
        }
        writer.row(summary);
    }
    return kExitOk;
}

int cmd_loss_sim(rank_t p, rank_t r, std::uint64_t trials, std::uint64_t seed,
                 bool summary_only, OutputFormat format, std::ostream& out) {
    const LossSimulation simulation = simulate_failures_until_idl(p, r, trials, seed);
    if (summary_only) {
        TableWriter writer(out, format,
                           {"p", "r", "trials", "mean_failures", "mean_failed_fraction", "p10",
                            "median", "p90"});
        writer.row({{"p", p},
                    {"r", r},
                    {"trials", trials},
                    {"mean_failures", simulation.mean},
                    {"mean_failed_fraction", simulation.mean_fraction},
                    {"p10", simulation.p10},
                    {"median", simulation.median},
                    {"p90", simulation.p90}});
        return kExitOk;
    }
    TableWriter writer(out, format, {"p", "r", "trial", "failures", "failed_fraction"});
    for (std::size_t trial = 0; trial < simulation.samples.size(); ++trial) {
        const std::uint32_t failures = simulation.samples[trial];
        writer.row({{"p", p},
                    {"r", r},
                    {"trial", trial},
                    {"failures", failures},
                    {"failed_fraction", static_cast<double>(failures) / static_cast<double>(p)}});
    }
    return kExitOk;
}

void write_bench_records(const std::vector<BenchRecord>& records, const BenchSpec& spec,
                         OutputFormat format, std::ostream& out) {
    TableWriter writer(out, format,
                       {"operation", "phase", "p", "alive", "s_pr", "block_size",
                        "bottleneck_messages", "bottleneck_bytes", "total_messages",
                        "total_bytes"});
    for (const BenchRecord& record : records) {
        writer.row({{"operation", record.operation},
                    {"phase", record.phase.phase},
                    {"p", record.phase.ranks},
                    {"alive", record.phase.alive},
                    {"s_pr", record.blocks_per_range},
                    {"block_size", spec.block_size},
                    {"bottleneck_messages", record.phase.bottleneck_messages},
                    {"bottleneck_bytes", record.phase.bottleneck_bytes},
                    {"total_messages", record.phase.total_messages},
                    {"total_bytes", record.phase.total_bytes}});
    }
}

int cmd_kmeans(const KMeansSpec& spec, OutputFormat format, std::ostream& out,
               std::ostream& err) {
    if (static_cast<std::uint64_t>(spec.ranks) * spec.points_per_rank * spec.dims > 100000000ULL) {
        err << "note: this parameter set is far beyond desk scale and will be slow\n";
    }
    const KMeansReport report = run_kmeans(spec);

    TableWriter writer(out, format,
                       {"record", "center", "dimension", "value", "iteration", "failed_ranks",
                        "phase", "p", "alive", "bottleneck_messages", "bottleneck_bytes",
                        "total_messages", "total_bytes", "iterations_run", "status"});
    for (std::uint32_t center = 0; center < spec.clusters; ++center) {
        for (std::uint32_t dim = 0; dim < spec.dims; ++dim) {
            writer.row({{"record", "center"},
                        {"center", center},
                        {"dimension", dim},
                        {"value", report.centers[static_cast<std::size_t>(center) * spec.dims +
                                                 dim]}});
        }
    }
    for (const KMeansFailureEvent& event : report.failures) {
        writer.row({{"record", "failure"},
                    {"iteration", event.iteration},
                    {"failed_ranks", join_ranks(event.ranks)}});
    }
    std::uint64_t restore_messages = 0;
    std::uint64_t restore_bytes = 0;
    std::uint64_t algorithm_messages = 0;
    std::uint64_t algorithm_bytes = 0;
    for (const PhaseRecord& phase : report.phases) {
        writer.row({{"record", "phase"},
                    {"phase", phase.phase},
                    {"p", phase.ranks},
                    {"alive", phase.alive},
                    {"bottleneck_messages", phase.bottleneck_messages},
                    {"bottleneck_bytes", phase.bottleneck_bytes},
                    {"total_messages", phase.total_messages},
                    {"total_bytes", phase.total_bytes}});
        if (phase.phase.starts_with("restore-")) {
            restore_messages += phase.total_messages;
            restore_bytes += phase.total_bytes;
        } else {
            algorithm_messages += phase.total_messages;
            algorithm_bytes += phase.total_bytes;
        }
    }
    writer.row({{"record", "restore-overhead"},
                {"total_messages", restore_messages},
                {"total_bytes", restore_bytes}});
    writer.row({{"record", "algorithm"},
                {"total_messages", algorithm_messages},
                {"total_bytes", algorithm_bytes}});
    writer.row({{"record", "summary"},
                {"iterations_run", report.iterations_run},
                {"status", report.data_loss ? "data-loss" : "ok"}});

    if (report.data_loss) {
        err << "irrecoverable data loss during recovery; aborted after iteration "
            << report.iterations_run << "\n";
        return kExitDataLoss;
    }
    return kExitOk;
}

}  // namespace

std::uint64_t parse_byte_size(const std::string& text) {
    if (text.empty()) {
        throw ConfigError("empty byte size");
    }
    std::uint64_t multiplier = 1;
    std::string digits = text;
    const char last = text.back();
    if (last == 'K' || last == 'k') {
        multiplier = 1024;
        digits.pop_back();
    } else if (last == 'M' || last == 'm') {
        multiplier = 1024 * 1024;
        digits.pop_back();
    }
    if (digits.empty() || !std::all_of(digits.begin(), digits.end(),
                                       [](unsigned char c) { return std::isdigit(c); })) {
        throw ConfigError("malformed byte size '" + text + "'");
    }
    return std::stoull(digits) * multiplier;
}

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Replicated in-memory block store simulator"};
    app.name("restore-sim");
    app.require_subcommand(1);

    // Shared flag storage.
    std::optional<std::uint64_t> seed_flag;
    std::string out_path = "-";
    std::string format_name = "csv";
    std::uint64_t trials = 10000;

    // idl-table
    auto* idl = app.add_subcommand("idl-table",
                                   "Exact, approximate, and Monte-Carlo data-loss probabilities");
    std::vector<rank_t> idl_ps{48};
    rank_t idl_r = 4;
    idl->add_option("--p", idl_ps, "rank counts (repeatable)");
    idl->add_option("--r", idl_r, "replication level (must divide p)");
    idl->add_option("--trials", trials, "Monte-Carlo trials per p (0 disables)");
    idl->add_option("--seed", seed_flag, "random seed");
    idl->add_option("--out", out_path, "output path ('-' for stdout)");
    idl->add_option("--format", format_name, "csv or jsonl");

    // loss-sim
    auto* loss = app.add_subcommand("loss-sim", "Failures-until-data-loss samples");
    rank_t loss_p = 48;
    rank_t loss_r = 4;
    bool loss_summary = false;
    loss->add_option("--p", loss_p, "rank count");
    loss->add_option("--r", loss_r, "replication level (must divide p)");
    loss->add_option("--trials", trials, "number of trials");
    loss->add_option("--seed", seed_flag, "random seed");
    loss->add_option("--out", out_path, "output path ('-' for stdout)");
    loss->add_option("--format", format_name, "csv or jsonl");
    loss->add_flag("--summary", loss_summary, "emit one percentile summary row instead");

    // bench
    auto* bench = app.add_subcommand("bench",
                                     "Communication metrics for submit / load-1% / load-all");
    BenchSpec bench_spec;
    std::string bench_bytes = "64K";
    std::optional<std::uint64_t> bench_blocks;
    std::string bench_mode = "LocalLists";
    std::optional<bool> bench_permute;
    bool bench_sweep = false;
    bench->add_option("--p", bench_spec.ranks, "rank count");
    bench->add_option("--bytes-per-rank", bench_bytes, "data per rank (K/M suffixes)");
    bench->add_option("--n", bench_blocks, "total block count (alternative to --bytes-per-rank)");
    bench->add_option("--block-size", bench_spec.block_size, "bytes per block");
    bench->add_option("--r", bench_spec.replication, "replication level");
    bench->add_option("--s-pr", bench_spec.blocks_per_range, "blocks per permutation range");
    bench->add_option("--permute", bench_permute,
                      "force permutation ranges on/off for every operation");
    bench->add_option("--mode", bench_mode, "GlobalList or LocalLists");
    bench->add_option("--seed", seed_flag, "random seed");
    bench->add_option("--out", out_path, "output path ('-' for stdout)");
    bench->add_option("--format", format_name, "csv or jsonl");
    bench->add_flag("--sweep", bench_sweep, "sweep blocks-per-range over powers of two");

    // kmeans
    auto* kmeans = app.add_subcommand("kmeans", "Fault-tolerant k-means demo");
    KMeansSpec kmeans_spec;
    std::optional<bool> kmeans_permute;
    kmeans->add_option("--p", kmeans_spec.ranks, "rank count");
    kmeans->add_option("--points-per-rank", kmeans_spec.points_per_rank, "points per rank");
    kmeans->add_option("--dims", kmeans_spec.dims, "dimensions per point");
    kmeans->add_option("--k", kmeans_spec.clusters, "cluster count");
    kmeans->add_option("--iterations", kmeans_spec.iterations, "iteration count");
    kmeans->add_option("--failure-fraction", kmeans_spec.failure_fraction,
                       "expected fraction of ranks failing over the run");
    kmeans->add_option("--tolerance", kmeans_spec.tolerance, "early-stop movement tolerance");
    kmeans->add_option("--r", kmeans_spec.replication, "replication level");
    kmeans->add_option("--s-pr", kmeans_spec.blocks_per_range, "blocks per permutation range");
    kmeans->add_option("--permute", kmeans_permute, "enable permutation ranges");
    kmeans->add_option("--seed", seed_flag, "random seed");
    kmeans->add_option("--out", out_path, "output path ('-' for stdout)");
    kmeans->add_option("--format", format_name, "csv or jsonl");

    try {
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(reversed);
    } catch (const CLI::CallForHelp& help) {
        out << app.help();
        return kExitOk;
    } catch (const CLI::ParseError& error) {
        err << error.what() << "\n";
        return kExitUsage;
    }

    try {
        const std::uint64_t seed = resolve_seed(seed_flag);
        const OutputFormat format = parse_format(format_name);
        Sink sink(out_path, out);

        if (idl->parsed()) {
            return cmd_idl_table(idl_ps, idl_r, trials, seed, format, sink.stream(), err);
        }
        if (loss->parsed()) {
            return cmd_loss_sim(loss_p, loss_r, trials, seed, loss_summary, format,
                                sink.stream());
        }
        if (bench->parsed()) {
            bench_spec.seed = seed;
            bench_spec.permute = bench_permute;
            bench_spec.mode = parse_mode(bench_mode);
            if (bench_blocks) {
                if (*bench_blocks % bench_spec.ranks != 0) {
                    throw ConfigError("--n must be a multiple of --p");
                }
                bench_spec.bytes_per_rank =
                    *bench_blocks / bench_spec.ranks * bench_spec.block_size;
            } else {
                bench_spec.bytes_per_rank = parse_byte_size(bench_bytes);
            }
            if (bench_spec.bytes_per_rank > (std::uint64_t{512} << 20)) {
                err << "note: this parameter set is far beyond desk scale and will be slow\n";
            }
            const std::vector<BenchRecord> records =
                bench_sweep ? run_permutation_range_sweep(bench_spec)
                            : run_bench_operations(bench_spec);
            write_bench_records(records, bench_spec, format, sink.stream());
            return kExitOk;
        }
        if (kmeans->parsed()) {
            kmeans_spec.seed = seed;
            if (kmeans_permute) {
                kmeans_spec.permute = *kmeans_permute;
            }
            return cmd_kmeans(kmeans_spec, format, sink.stream(), err);
        }
        err << "no subcommand selected\n";
        return kExitUsage;
    } catch (const IrrecoverableDataLoss& loss_error) {
        err << loss_error.what() << "\n";
        return kExitDataLoss;
    } catch (const ConfigError& error) {
        err << "usage error: " << error.what() << "\n";
        return kExitUsage;
    } catch (const DomainError& error) {
        err << "usage error: " << error.what() << "\n";
        return kExitUsage;
    } catch (const DataError& error) {
        err << "usage error: " << error.what() << "\n";
        return kExitUsage;
    } catch (const std::exception& error) {
        err << "internal error: " << error.what() << "\n";
        return kExitInternal;
    }
}

}  // namespace restore_sim
