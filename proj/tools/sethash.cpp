// sethash: command-line front end for set-to-set hashing.

#include <chrono>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "sethash/sethash.hpp"

namespace {

using namespace sethash;

constexpr double kReferenceSecondsPerBit = 7.02e-5;

struct Globals {
    int threads = 0;
};

bool is_codes_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail(ErrorCode::missing_file, "cannot open " + path);
    char magic[4] = {};
    in.read(magic, 4);
    return in.gcount() == 4 && std::equal(magic, magic + 4, kCodesMagic.begin());
}

Side parse_side(const std::string& s) {
    if (s == "query" || s == "q") return Side::query;
    if (s == "database" || s == "db" || s == "r") return Side::database;
    fail(ErrorCode::invalid_argument, "side must be 'query' or 'database', got '" + s + "'");
}

void print_report(const MetricReport& rep) {
    std::printf("queries %zu (excluded %zu)\n", rep.queries_evaluated, rep.queries_excluded);
    std::printf("map %.6f\n", rep.map);
    for (const auto& [k, v] : rep.precision_at_k) std::printf("precision@%d %.6f\n", k, v);
    for (const auto& [k, v] : rep.recall_at_k) std::printf("recall@%d %.6f\n", k, v);
    for (const auto& [k, v] : rep.precision_at_radius) std::printf("precision@radius%d %.6f\n", k, v);
}

// --- synth -----------------------------------------------------------------

struct SynthArgs {
    SynthConfig cfg;
    std::string out;
    int test_per_class = 0;
    std::string test_out;
};

void write_synth(const SetDataset& data, int dim, const std::string& path) {
    write_dataset(data, path);
    std::size_t points = 0;
    for (const auto& s : data.sets()) points += static_cast<std::size_t>(s.size());
    std::printf("wrote %zu sets (%zu points, d=%d) to %s\n", data.size(), points, dim, path.c_str());
}

// Held-out sets come from the same class draw: the last test_per_class sets
// of every class go to the test file.
void run_synth(const SynthArgs& a) {
    require(a.test_per_class >= 0, ErrorCode::invalid_argument, "--test-per-class must be >= 0");
    require(a.test_per_class == 0 || !a.test_out.empty(), ErrorCode::invalid_argument,
            "--test-per-class needs --test-out");
    SynthConfig cfg = a.cfg;
    cfg.sets_per_class += a.test_per_class;
    auto data = synthesize(cfg);
    if (a.test_per_class == 0) {
        write_synth(data, cfg.dim, a.out);
        return;
    }
    std::vector<std::size_t> tr, te;
    for (std::size_t i = 0; i < data.size(); ++i)
        (static_cast<int>(i % static_cast<std::size_t>(cfg.sets_per_class)) < a.cfg.sets_per_class ? tr : te)
            .push_back(i);
    write_synth(data.subset(tr), cfg.dim, a.out);
    write_synth(data.subset(te), cfg.dim, a.test_out);
}

// --- train -----------------------------------------------------------------

struct TrainArgs {
    std::string data;
    std::string config;
    std::vector<std::string> overrides;
    std::string out;
    std::string kernel_cache;
    bool print_config = false;
};

void run_train(const TrainArgs& a, const Globals& g) {
    RunConfig cfg = resolve_config(a.config, a.overrides);
    if (!a.kernel_cache.empty()) cfg.kernel_cache = a.kernel_cache;
    if (g.threads == 0 && cfg.threads > 0) set_thread_count(cfg.threads);
    if (a.print_config) std::fputs(describe_config(cfg).c_str(), stdout);

    auto data = load_dataset(a.data);
    require(data.fully_labeled(), ErrorCode::invalid_argument, "training data must be labeled");
    auto split = split_qr(data, cfg.split_fraction, cfg.trainer.seed, cfg.stratified);

    std::unique_ptr<KernelCache> cache;
    if (!cfg.kernel_cache.empty()) cache = std::make_unique<KernelCache>(cfg.kernel_cache);

    auto t0 = std::chrono::steady_clock::now();
    auto res = train(split, cfg.trainer, cache.get());
    double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    save_model(res.model, a.out);

    std::printf("q=%zu r=%zu bits=%d\n", split.q.size(), split.r.size(), cfg.trainer.bits);
    for (std::size_t i = 0; i < res.history.size(); ++i)
        std::printf("outer %zu changed %.6f\n", i + 1, res.history[i].changed_fraction);
    std::printf("outer_iterations %d converged %s\n", res.outer_iterations, res.converged ? "yes" : "no");
    if (cache) std::printf("kernel_cache hits %d misses %d\n", cache->hits(), cache->misses());
    std::printf("train_seconds %.3f\nmodel %s\n", secs, a.out.c_str());
}

// --- encode ----------------------------------------------------------------

struct EncodeArgs {
    std::string model;
    std::string data;
    std::string out;
    std::string side = "database";
    bool bench = false;
};

void run_encode(const EncodeArgs& a) {
    auto model = load_model(a.model);
    auto data = load_dataset(a.data);
    Side side = parse_side(a.side);
    require(data.dim() == model.dim, ErrorCode::dimension_mismatch,
            "data has dimension " + std::to_string(data.dim()) + ", model expects " + std::to_string(model.dim));

    auto t0 = std::chrono::steady_clock::now();
    Encoder enc(model);
    auto codes = enc.encode_all(data, side);
    double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    write_codes(index_from(data, std::move(codes)), a.out);
    std::printf("encoded %zu sets at %d bits to %s\n", data.size(), model.config.bits, a.out.c_str());

    if (a.bench) {
        double per_bit = secs / (static_cast<double>(data.size()) * model.config.bits);
        std::printf("encode_seconds %.6f\n", secs);
        std::printf("seconds_per_bit %.3e (reference %.2e, ratio %.3f)\n", per_bit, kReferenceSecondsPerBit,
                    per_bit / kReferenceSecondsPerBit);
    }
}

// --- query -----------------------------------------------------------------

struct QueryArgs {
    std::string index;
    std::string query;
    std::string model;
    std::string side = "query";
    int k = 10;
    int radius = -1;
};

void run_query(const QueryArgs& a) {
    auto index = read_codes(a.index);
    require(a.k >= 1, ErrorCode::invalid_argument, "--k must be >= 1");

    CodeIndex queries;
    if (is_codes_file(a.query)) {
        queries = read_codes(a.query);
    } else {
        require(!a.model.empty(), ErrorCode::invalid_argument, "querying with point sets requires --model");
        auto model = load_model(a.model);
        auto data = load_dataset(a.query);
        require(data.dim() == model.dim, ErrorCode::dimension_mismatch,
                "query data has dimension " + std::to_string(data.dim()) + ", model expects " +
                    std::to_string(model.dim));
        queries = index_from(data, Encoder(model).encode_all(data, parse_side(a.side)));
    }

    for (std::size_t i = 0; i < queries.size(); ++i) {
        if (queries.size() > 1) std::printf("# query %llu\n", static_cast<unsigned long long>(queries.ids()[i]));
        auto hits = a.radius >= 0 ? lookup_radius(index, queries.codes()[i], a.radius)
                                  : rank(index, queries.codes()[i], static_cast<std::size_t>(a.k));
        for (const auto& h : hits) std::printf("%llu %d\n", static_cast<unsigned long long>(h.id), h.distance);
    }
}

// --- eval ------------------------------------------------------------------

struct EvalArgs {
    std::string index;
    std::string queries;
    std::string config;
    std::vector<std::string> overrides;
    std::vector<int> cutoffs;
    std::vector<int> radii;
    bool skip_empty = false;
    std::string out;
};

void run_eval(const EvalArgs& a) {
    RunConfig cfg = resolve_config(a.config, a.overrides);
    if (!a.cutoffs.empty()) cfg.eval.cutoffs = a.cutoffs;
    if (!a.radii.empty()) cfg.eval.radii = a.radii;
    if (a.skip_empty) cfg.eval.skip_empty_buckets = true;

    auto index = read_codes(a.index);
    auto queries = read_codes(a.queries);
    require(queries.has_labels(), ErrorCode::invalid_argument, "evaluation needs labeled queries");
    auto rep = evaluate(index, labeled_queries(queries), cfg.eval);
    print_report(rep);
    if (!a.out.empty()) emit_curves(rep, a.out);
}

// --- baseline --------------------------------------------------------------

struct BaselineArgs {
    std::string data;
    std::string out;
    int bits = 24;
    std::uint64_t seed = 0;
};

void run_baseline(const BaselineArgs& a) {
    require(a.bits >= 1, ErrorCode::invalid_argument, "--bits must be >= 1");
    auto data = load_dataset(a.data);
    auto lsh = lsh_baseline_train(data.dim(), a.bits, a.seed);
    write_codes(index_from(data, lsh.encode_all(data)), a.out);
    std::printf("lsh codes for %zu sets at %d bits to %s\n", data.size(), a.bits, a.out.c_str());
}

int report_error(ErrorCode code, const std::string& msg) {
    std::fprintf(stderr, "error code=%s status=%d message=\"%s\"\n", std::string(error_code_name(code)).c_str(),
                 static_cast<int>(code), msg.c_str());
    return static_cast<int>(code);
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Set-to-set hashing: synthesize, train, encode, query and evaluate."};
    app.require_subcommand(1);
    Globals g;
    app.add_option("--threads", g.threads, "worker threads (0: SETHASH_THREADS or hardware)")
        ->check(CLI::NonNegativeNumber);

    SynthArgs sa;
    auto* synth = app.add_subcommand("synth", "generate a labeled synthetic set dataset");
    synth->add_option("--classes", sa.cfg.classes)->capture_default_str();
    synth->add_option("--sets-per-class", sa.cfg.sets_per_class)->capture_default_str();
    synth->add_option("--points-per-set", sa.cfg.points_per_set)->capture_default_str();
    synth->add_option("--dim", sa.cfg.dim)->capture_default_str();
    synth->add_option("--cluster-spread", sa.cfg.cluster_spread)->capture_default_str();
    synth->add_option("--seed", sa.cfg.seed)->capture_default_str();
    synth->add_option("--out", sa.out)->required();
    synth->add_option("--test-per-class", sa.test_per_class, "extra held-out sets per class")->capture_default_str();
    synth->add_option("--test-out", sa.test_out, "file for the held-out sets");

    TrainArgs ta;
    auto* trn = app.add_subcommand("train", "train a hash model");
    trn->add_option("--data", ta.data, "labeled dataset (.bin or .csv)")->required();
    trn->add_option("--config", ta.config, "key = value config file");
    trn->add_option("--set", ta.overrides, "override one config key (key=value), repeatable");
    trn->add_option("--out", ta.out)->required();
    trn->add_option("--kernel-cache", ta.kernel_cache, "directory for cached kernel matrices");
    trn->add_flag("--print-config", ta.print_config, "print the resolved configuration");

    EncodeArgs ea;
    auto* enc = app.add_subcommand("encode", "encode point sets into hash codes");
    enc->add_option("--model", ea.model)->required();
    enc->add_option("--data", ea.data)->required();
    enc->add_option("--out", ea.out)->required();
    enc->add_option("--side", ea.side, "query or database split set")->capture_default_str();
    enc->add_flag("--bench", ea.bench, "report per-bit encoding time");

    QueryArgs qa;
    auto* qry = app.add_subcommand("query", "rank an index against query codes or point sets");
    qry->add_option("--index", qa.index)->required();
    qry->add_option("--query", qa.query, "code file, or dataset together with --model")->required();
    qry->add_option("--model", qa.model);
    qry->add_option("--side", qa.side)->capture_default_str();
    qry->add_option("--k", qa.k)->capture_default_str();
    qry->add_option("--radius", qa.radius, "hash lookup within this Hamming radius instead of top-k");

    EvalArgs va;
    auto* evl = app.add_subcommand("eval", "retrieval metrics for labeled query codes");
    evl->add_option("--index", va.index)->required();
    evl->add_option("--queries", va.queries)->required();
    evl->add_option("--config", va.config);
    evl->add_option("--set", va.overrides);
    evl->add_option("--cutoffs", va.cutoffs)->delimiter(',');
    evl->add_option("--radius", va.radii)->delimiter(',');
    evl->add_flag("--skip-empty-buckets", va.skip_empty);
    evl->add_option("--out", va.out, "curve CSV (metric,x,y)");

    BaselineArgs ba;
    auto* base = app.add_subcommand("baseline", "set-mean LSH codes for comparison");
    base->add_option("--data", ba.data)->required();
    base->add_option("--out", ba.out)->required();
    base->add_option("--bits", ba.bits)->capture_default_str();
    base->add_option("--seed", ba.seed)->capture_default_str();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        return report_error(ErrorCode::invalid_argument, e.what());
    }

    try {
        if (g.threads > 0) set_thread_count(g.threads);
        if (*synth) run_synth(sa);
        else if (*trn) run_train(ta, g);
        else if (*enc) run_encode(ea);
        else if (*qry) run_query(qa);
        else if (*evl) run_eval(va);
        else if (*base) run_baseline(ba);
    } catch (const Error& e) {
        return report_error(e.code(), e.what());
    } catch (const std::exception& e) {
        return report_error(ErrorCode::io_error, e.what());
    }
    return 0;
}
