// kgesym command line: dataset statistics, symmetric completion, circle
// probe generation, training, and link-prediction evaluation.

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <random>
#include <set>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "kgesym/kgesym.hpp"

namespace fs = std::filesystem;
using kgesym::json;

namespace {

struct DataPaths {
    fs::path train, valid, test;
};

DataPaths resolve_paths(const fs::path& dir, kgesym::TripleFormat format) {
    DataPaths p;
    if (format == kgesym::TripleFormat::names) {
        p = {dir / "train.txt", dir / "valid.txt", dir / "test.txt"};
    } else {
        p = {dir / "train2id.txt", dir / "valid2id.txt", dir / "test2id.txt"};
    }
    for (const fs::path* path : {&p.train, &p.valid, &p.test})
        if (!fs::exists(*path)) kgesym::fail("missing split file: ", path->string());
    return p;
}

kgesym::TripleStore load_dir(const fs::path& dir, kgesym::TripleFormat format) {
    const DataPaths p = resolve_paths(dir, format);
    return kgesym::load_triples(p.train, p.valid, p.test, format);
}

kgesym::TripleFormat parse_format(const std::string& s) {
    if (s == "names") return kgesym::TripleFormat::names;
    if (s == "ids") return kgesym::TripleFormat::ids;
    kgesym::fail("unknown format \"", s, "\" (expected names or ids)");
}

kgesym::SplitSelector parse_selector(const std::string& s) {
    if (s == "train") return kgesym::SplitSelector::train;
    if (s == "valid") return kgesym::SplitSelector::valid;
    if (s == "test") return kgesym::SplitSelector::test;
    if (s == "all") return kgesym::SplitSelector::all;
    kgesym::fail("unknown scope \"", s, "\" (expected train, valid, test or all)");
}

std::string hex64(std::uint64_t v) {
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

json file_fingerprint(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) kgesym::fail("cannot open ", path.string());
    std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return {{"name", path.filename().string()},
            {"bytes", bytes.size()},
            {"fnv1a64", hex64(kgesym::fnv1a64(bytes.data(), bytes.size()))}};
}

std::string timestamp_utc() {
    const auto now = std::chrono::system_clock::now();
    const std::time_t t = std::chrono::system_clock::to_time_t(now);
    char buf[32];
    std::tm tm{};
    gmtime_r(&t, &tm);
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) kgesym::fail("cannot write ", path.string());
    out << text;
    if (!out) kgesym::fail("write failure on ", path.string());
}

void write_json(const fs::path& path, const json& j) { write_text(path, j.dump(2) + "\n"); }

// Fills values whose flags were not passed on the command line from a JSON
// config with keys mirroring the long flag names. Flags win on conflict.
class ConfigFile {
public:
    ConfigFile(CLI::App* cmd, const fs::path& path) : cmd_(cmd), path_(path) {
        std::ifstream in(path);
        if (!in) kgesym::fail("cannot open config ", path.string());
        try {
            cfg_ = json::parse(in);
        } catch (const std::exception& e) {
            kgesym::fail(path.string(), ": ", e.what());
        }
    }

    template <typename T>
    void apply(const char* key, T& var) {
        seen_.insert(key);
        if (!cfg_.contains(key)) return;
        const CLI::Option* opt = cmd_->get_option_no_throw(std::string("--") + key);
        if (opt != nullptr && opt->count() > 0) return;
        try {
            var = cfg_.at(key).get<T>();
        } catch (const std::exception&) {
            kgesym::fail(path_.string(), ": config key \"", key, "\" has the wrong type");
        }
    }

    void reject_unknown_keys() const {
        for (const auto& [key, value] : cfg_.items())
            if (seen_.count(key) == 0)
                kgesym::fail(path_.string(), ": unknown config key \"", key, "\"");
    }

    bool has(const char* key) const { return cfg_.contains(key); }

private:
    CLI::App* cmd_;
    fs::path path_;
    json cfg_;
    std::set<std::string> seen_;
};

struct CommonManifest {
    std::vector<std::string> argv;
    fs::path data_dir;
    std::string format;
};

json dataset_manifest(const fs::path& dir, kgesym::TripleFormat format) {
    const DataPaths p = resolve_paths(dir, format);
    json files = json::array();
    files.push_back(file_fingerprint(p.train));
    files.push_back(file_fingerprint(p.valid));
    files.push_back(file_fingerprint(p.test));
    return {{"dir", dir.string()}, {"format", kgesym::format_name(format)}, {"files", std::move(files)}};
}

int run_stats(const fs::path& data_dir, double threshold, const std::string& format_str,
              const std::string& scope_str, const std::string& json_path) {
    const auto format = parse_format(format_str);
    const auto selector = parse_selector(scope_str);
    const kgesym::TripleStore store = load_dir(data_dir, format);
    const kgesym::StatsReport report = kgesym::dataset_stats(store, threshold, selector);
    std::cout << kgesym::stats_to_text(report, store);
    if (!json_path.empty()) write_json(json_path, kgesym::stats_to_json(report, store));
    return 0;
}

int run_complete(const fs::path& data_dir, const fs::path& out_dir, double threshold,
                 const std::string& scope_str, const std::string& format_str) {
    const auto format = parse_format(format_str);
    kgesym::CompletionScope scope;
    if (scope_str == "train")
        scope = kgesym::CompletionScope::train_only;
    else if (scope_str == "all")
        scope = kgesym::CompletionScope::all_splits;
    else
        kgesym::fail("unknown scope \"", scope_str, "\" (expected train or all)");

    const kgesym::TripleStore store = load_dir(data_dir, format);
    const auto classified = kgesym::classify_symmetric(store, threshold);
    kgesym::CompletionResult result = kgesym::complete_symmetric(store, classified.symmetric, scope);
    kgesym::save_store(result.store, out_dir);

    std::cout << "symmetric relations: " << classified.symmetric.size() << "\n";
    for (kgesym::RelationId r : classified.symmetric)
        std::cout << "  " << store.relation_name(r) << "\n";
    for (kgesym::Split s : kgesym::kSplits) {
        const int i = static_cast<int>(s);
        std::cout << kgesym::split_name(s) << ": added " << result.added[i]
                  << " reverse triple(s), " << result.guarded[i]
                  << " skipped by the cross-split guard\n";
    }
    std::cout << "wrote " << (out_dir / "train.txt").string() << ", valid.txt, test.txt\n";
    return 0;
}

int run_circle_gen(const fs::path& data_dir, const fs::path& out_path, long n, std::uint64_t seed,
                   double threshold, const std::string& format_str) {
    if (n < 1) kgesym::fail("--n must be >= 1, got ", n);
    const auto format = parse_format(format_str);
    const kgesym::TripleStore store = load_dir(data_dir, format);
    const auto classified = kgesym::classify_symmetric(store, threshold);
    if (classified.symmetric.empty())
        kgesym::fail("no relation classified symmetric at threshold ", threshold);
    const auto circle = kgesym::generate_circle_set(store, classified.symmetric,
                                                    static_cast<std::size_t>(n), seed);
    kgesym::save_triples_names(store, circle, out_path);
    std::cout << "wrote " << circle.size() << " circle triple(s) to " << out_path.string() << "\n";
    return 0;
}

int run_train(const fs::path& data_dir, const fs::path& out_dir, kgesym::TrainConfig config,
              bool deterministic, bool seed_given, const std::string& format_str,
              const std::vector<std::string>& argv) {
    const auto format = parse_format(format_str);
    if (!deterministic && !seed_given) config.seed = std::random_device{}();

    const kgesym::TripleStore store = load_dir(data_dir, format);
    fs::create_directories(out_dir);

    const auto started = timestamp_utc();
    const auto t0 = std::chrono::steady_clock::now();
    kgesym::TrainResult result = kgesym::train(store, config);
    const std::chrono::duration<double> elapsed = std::chrono::steady_clock::now() - t0;

    kgesym::CheckpointInfo info{result.norm, config.seed, config.epochs};
    kgesym::save_checkpoint(result.params, info, out_dir / "checkpoint.kge");
    write_text(out_dir / "history.tsv", kgesym::history_to_tsv(result.history));
    write_json(out_dir / "history.json", kgesym::history_to_json(result.history));

    json manifest;
    manifest["tool"] = "kgesym";
    manifest["version"] = kgesym::kVersion;
    manifest["command"] = "train";
    manifest["argv"] = argv;
    manifest["started_utc"] = started;
    manifest["wall_seconds"] = elapsed.count();
    manifest["deterministic"] = deterministic;
    manifest["config"] = {{"model", kgesym::model_name(config.model)},
                          {"sym", config.sym_enabled},
                          {"dim", config.dim},
                          {"margin", config.margin},
                          {"norm", kgesym::norm_name(config.effective_norm())},
                          {"lr", config.learning_rate},
                          {"epochs", config.epochs},
                          {"batch", config.batch_size},
                          {"neg", config.negatives_per_positive},
                          {"seed", config.seed},
                          {"threshold", config.threshold},
                          {"classify_scope", kgesym::selector_name(config.classify_selector)}};
    manifest["dataset"] = dataset_manifest(data_dir, format);
    json syms = json::array();
    for (kgesym::RelationId r : result.symmetric) syms.push_back(store.relation_name(r));
    manifest["symmetric_relations"] = std::move(syms);
    manifest["decisions"] = {{"negative_sampling", "uniform corruption, train-filtered, 100-attempt bound"},
                             {"update", "minibatch-summed SGD, constraints projected per batch"},
                             {"pair_init", "both subvectors drawn independently"},
                             {"min_tie_break", "plus"}};
    write_json(out_dir / "manifest.json", manifest);

    if (!result.history.epochs.empty()) {
        const auto& last = result.history.epochs.back();
        std::cout << "trained " << config.epochs << " epoch(s), final mean loss "
                  << kgesym::detail::fmt("%.6f", last.mean_loss) << "\n";
    } else {
        std::cout << "trained 0 epochs (checkpoint equals initialization)\n";
    }
    std::cout << "wrote " << (out_dir / "checkpoint.kge").string() << "\n";
    return 0;
}

int run_eval(const fs::path& checkpoint_path, const fs::path& data_dir, const std::string& mode_str,
             const std::string& circle_path, int workers, std::string json_path,
             const std::string& format_str) {
    if (workers < 1) kgesym::fail("--workers must be >= 1, got ", workers);
    const auto format = parse_format(format_str);
    auto [params, info] = kgesym::load_checkpoint(checkpoint_path);
    const kgesym::TripleStore store = load_dir(data_dir, format);
    if (params.entity_count() != store.entity_count() ||
        params.relation_count() != store.relation_count())
        kgesym::fail("checkpoint/dataset mismatch: checkpoint has |E|=", params.entity_count(),
                     ", |R|=", params.relation_count(), " but dataset has |E|=", store.entity_count(),
                     ", |R|=", store.relation_count());

    json out;
    out["checkpoint"] = checkpoint_path.string();
    out["model"] = kgesym::model_name(params.kind());
    out["norm"] = kgesym::norm_name(info.norm);

    std::vector<kgesym::EvalMode> modes;
    if (mode_str == "raw")
        modes = {kgesym::EvalMode::raw};
    else if (mode_str == "filtered")
        modes = {kgesym::EvalMode::filtered};
    else if (mode_str == "both")
        modes = {kgesym::EvalMode::raw, kgesym::EvalMode::filtered};
    else
        kgesym::fail("unknown mode \"", mode_str, "\" (expected raw, filtered or both)");

    for (kgesym::EvalMode mode : modes) {
        const kgesym::EvalReport report =
            kgesym::link_prediction(params, store, kgesym::Split::test, mode, info.norm, workers);
        std::cout << kgesym::eval_to_text(report, store);
        out[kgesym::eval_mode_name(mode)] = kgesym::eval_to_json(report, store);
    }

    if (!circle_path.empty()) {
        const auto circle = kgesym::load_triples_names(store, circle_path);
        const kgesym::CircleReport report = kgesym::circle_eval(params, circle, store, info.norm, workers);
        std::cout << kgesym::circle_to_text(report, store);
        out["circle"] = kgesym::circle_to_json(report, store);
    }

    if (json_path.empty()) json_path = (checkpoint_path.parent_path() / "eval.json").string();
    write_json(json_path, out);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"translational knowledge-graph embeddings with bi-vector symmetric relations"};
    app.require_subcommand(1);
    std::vector<std::string> raw_argv(argv, argv + argc);

    std::string format = "names";
    double threshold = 0.5;

    // stats
    auto* stats = app.add_subcommand("stats", "dataset statistics and per-relation symmetry ratios");
    fs::path stats_dir;
    std::string stats_scope = "all", stats_json;
    stats->add_option("data_dir", stats_dir, "directory with the three split files")->required();
    stats->add_option("--threshold", threshold, "symmetric classification threshold");
    stats->add_option("--format", format, "triple file format: names|ids");
    stats->add_option("--scope", stats_scope, "ratio scope: train|valid|test|all");
    stats->add_option("--json", stats_json, "also write the report as JSON to this path");

    // complete
    auto* complete = app.add_subcommand("complete", "add missing reverse triples of symmetric relations");
    fs::path complete_dir, complete_out;
    std::string complete_scope = "all";
    complete->add_option("data_dir", complete_dir)->required();
    complete->add_option("out_dir", complete_out)->required();
    complete->add_option("--threshold", threshold, "symmetric classification threshold");
    complete->add_option("--scope", complete_scope, "completion scope: train|all");
    complete->add_option("--format", format, "triple file format: names|ids");

    // circle-gen
    auto* circle_gen = app.add_subcommand("circle-gen", "generate reflexive (e, r, e) probe triples");
    fs::path circle_dir, circle_out;
    long circle_n = 10000;
    std::uint64_t circle_seed = 42;
    circle_gen->add_option("data_dir", circle_dir)->required();
    circle_gen->add_option("out_path", circle_out)->required();
    circle_gen->add_option("--n", circle_n, "number of probe triples");
    circle_gen->add_option("--seed", circle_seed, "generator seed");
    circle_gen->add_option("--threshold", threshold, "symmetric classification threshold");
    circle_gen->add_option("--format", format, "triple file format: names|ids");

    // train
    auto* train = app.add_subcommand("train", "train a model with margin-ranking SGD");
    fs::path train_dir, train_out;
    std::string model_str = "transe", norm_str;
    kgesym::TrainConfig config;
    bool sym = false, no_deterministic = false;
    fs::path config_file;
    train->add_option("data_dir", train_dir)->required();
    train->add_option("out_dir", train_out)->required();
    train->add_option("--model", model_str, "transe|transh|transd");
    train->add_flag("--sym", sym, "bi-vector slots for classified-symmetric relations");
    train->add_option("--dim", config.dim, "embedding dimension");
    train->add_option("--margin", config.margin, "hinge margin");
    train->add_option("--lr", config.learning_rate, "learning rate");
    train->add_option("--epochs", config.epochs, "training epochs");
    train->add_option("--batch", config.batch_size, "minibatch size");
    train->add_option("--neg", config.negatives_per_positive, "negatives per positive");
    train->add_option("--norm", norm_str, "l1|l2 (default: l1 for transe, l2 otherwise)");
    auto* seed_opt = train->add_option("--seed", config.seed, "run seed");
    train->add_option("--threshold", threshold, "symmetric classification threshold");
    train->add_flag("--no-deterministic", no_deterministic,
                    "draw the seed from system entropy when --seed is absent");
    train->add_option("--format", format, "triple file format: names|ids");
    train->add_option("--config", config_file, "JSON config whose keys mirror the flags; flags win");

    // eval
    auto* eval = app.add_subcommand("eval", "link-prediction metrics and the circle probe");
    fs::path eval_checkpoint, eval_dir;
    std::string eval_mode = "both", eval_circle, eval_json;
    int workers = 1;
    eval->add_option("checkpoint", eval_checkpoint)->required();
    eval->add_option("data_dir", eval_dir)->required();
    eval->add_option("--mode", eval_mode, "raw|filtered|both");
    eval->add_option("--circle", eval_circle, "circle triple file to probe");
    eval->add_option("--workers", workers, "evaluation threads");
    eval->add_option("--json", eval_json, "report path (default: eval.json next to the checkpoint)");
    eval->add_option("--format", format, "triple file format: names|ids");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    }

    try {
        if (*stats) return run_stats(stats_dir, threshold, format, stats_scope, stats_json);
        if (*complete) return run_complete(complete_dir, complete_out, threshold, complete_scope, format);
        if (*circle_gen)
            return run_circle_gen(circle_dir, circle_out, circle_n, circle_seed, threshold, format);
        if (*train) {
            bool seed_given = seed_opt->count() > 0;
            if (!config_file.empty()) {
                ConfigFile cfg(train, config_file);
                cfg.apply("model", model_str);
                cfg.apply("sym", sym);
                cfg.apply("dim", config.dim);
                cfg.apply("margin", config.margin);
                cfg.apply("lr", config.learning_rate);
                cfg.apply("epochs", config.epochs);
                cfg.apply("batch", config.batch_size);
                cfg.apply("neg", config.negatives_per_positive);
                cfg.apply("norm", norm_str);
                cfg.apply("seed", config.seed);
                cfg.apply("threshold", threshold);
                cfg.apply("format", format);
                cfg.reject_unknown_keys();
                seed_given = seed_given || cfg.has("seed");
            }
            config.model = kgesym::detail::parse_model_kind(model_str);
            config.sym_enabled = sym;
            config.threshold = threshold;
            if (!norm_str.empty()) config.norm = kgesym::detail::parse_norm(norm_str);
            return run_train(train_dir, train_out, config, !no_deterministic, seed_given, format,
                             raw_argv);
        }
        if (*eval)
            return run_eval(eval_checkpoint, eval_dir, eval_mode, eval_circle, workers, eval_json,
                            format);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
