#include "plrt/cli.hpp"

#include <chrono>
#include <cstdlib>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "plrt/baselines.hpp"
#include "plrt/bounds.hpp"
#include "plrt/dataio.hpp"
#include "plrt/error.hpp"
#include "plrt/harness.hpp"
#include "plrt/tree.hpp"

namespace plrt {

using nlohmann::json;

std::uint64_t default_seed() {
    const char* env = std::getenv("PLRT_SEED");
    if (!env || !*env) return 0;
    char* end = nullptr;
    const unsigned long long v = std::strtoull(env, &end, 10);
    if (*end != '\0') throw Error(Errc::InvalidArgument, "PLRT_SEED must be an unsigned integer");
    return v;
}

namespace {

struct DataFlags {
    std::string data;
    std::string target;
    std::vector<std::string> regression;
    std::vector<std::string> split;
    bool standardize = false;

    void add(CLI::App& app, bool need_target = true) {
        app.add_option("--data", data, "CSV file with a header row")->required()->check(CLI::ExistingFile);
        auto* t = app.add_option("--target", target, "target column");
        if (need_target) t->required();
        app.add_option("--regression", regression, "regression columns (default: all but target)")
            ->delimiter(',');
        app.add_option("--split", split, "split columns (default: regression columns)")->delimiter(',');
        app.add_flag("--standardize", standardize, "standardize features to mean 0, variance 1");
    }

    Dataset load() const { return load_csv(data, {target, regression, split, standardize}); }
};

struct TrainFlags {
    std::string algo = "plrt";
    std::size_t depth = 10;
    double gamma = 1.0;
    std::optional<double> lasso_lambda;
    std::string strategy = "exact";
    bool verbatim_approx = false;
    std::optional<std::size_t> select_s;
    std::size_t min_leaf = 1;
    double min_decrease = 0.0;
    bool no_bias = false;
    int threads = 0;
    std::size_t wave = SplitConfig{}.feature_wave;

    void add(CLI::App& app, bool with_algo = true) {
        if (with_algo)
            app.add_option("--algo", algo, "plrt | cart | m5")
                ->check(CLI::IsMember({"plrt", "cart", "m5"}));
        app.add_option("--depth", depth, "maximum tree depth");
        app.add_option("--gamma", gamma, "ridge regularizer for splits and leaves")->check(CLI::NonNegativeNumber);
        app.add_option("--lasso-lambda", lasso_lambda, "refit leaves with this l1 penalty")
            ->check(CLI::NonNegativeNumber);
        app.add_option("--strategy", strategy, "none | exact | approx-min | approx-max")
            ->check(CLI::IsMember({"none", "exact", "approx-min", "approx-max"}));
        app.add_flag("--verbatim-approx", verbatim_approx,
                     "approx strategies: extrapolate total rather than per-sample losses");
        app.add_option("--select-s", select_s, "keep the s regression columns most correlated with y")
            ->check(CLI::PositiveNumber);
        app.add_option("--min-leaf", min_leaf, "minimum samples per leaf")->check(CLI::PositiveNumber);
        app.add_option("--min-decrease", min_decrease, "minimum loss decrease for a split")
            ->check(CLI::NonNegativeNumber);
        app.add_flag("--no-bias", no_bias, "omit the intercept column");
        app.add_option("--threads", threads, "parallel threads (default: all cores)")->check(CLI::NonNegativeNumber);
        app.add_option("--wave", wave, "features scanned concurrently per wave (0: one per thread)");
    }

    TrainConfig config() const {
        TrainConfig c;
        c.max_depth = depth;
        c.min_leaf_size = min_leaf;
        c.min_loss_decrease = min_decrease;
        c.gamma = gamma;
        if (lasso_lambda) {
            c.leaf_penalty = LeafPenalty::Lasso;
            c.lasso_lambda = *lasso_lambda;
        }
        c.split.strategy = parse_strategy(strategy);
        c.split.per_sample_normalization = !verbatim_approx;
        c.split.threads = threads;
        c.split.feature_wave = wave;
        c.root_feature_selection = select_s;
        c.bias = !no_bias;
        return c;
    }
};

TreeModel train_any(Criterion algo, const Dataset& data, const TrainConfig& cfg, TrainStats* stats) {
    switch (algo) {
    case Criterion::Cart: return train_cart(data, cfg, stats);
    case Criterion::M5: return train_m5(data, cfg, stats);
    case Criterion::Plrt: break;
    }
    return train_plrt(data, cfg, stats);
}

void emit(const std::optional<std::string>& path, const std::string& content, std::ostream& out) {
    if (path)
        write_file(*path, content);
    else
        out << content;
}

} // namespace

int dispatch(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Piecewise-linear regression trees"};
    app.name("plrt");
    app.require_subcommand(1);

    // train
    auto* train = app.add_subcommand("train", "fit a tree and write the model JSON");
    DataFlags train_data;
    TrainFlags train_flags;
    std::string train_out;
    std::optional<std::string> train_summary;
    train_data.add(*train);
    train_flags.add(*train);
    train->add_option("--out", train_out, "model JSON path")->required();
    train->add_option("--summary", train_summary, "training summary JSON path (default: <out>.summary.json)");

    // predict
    auto* predict = app.add_subcommand("predict", "write predictions of a model as CSV");
    std::string predict_model, predict_data;
    std::optional<std::string> predict_out;
    predict->add_option("--model", predict_model, "model JSON")->required()->check(CLI::ExistingFile);
    predict->add_option("--data", predict_data, "CSV with the model's feature columns")
        ->required()
        ->check(CLI::ExistingFile);
    predict->add_option("--out", predict_out, "predictions CSV (default: stdout)");

    // eval
    auto* eval = app.add_subcommand("eval", "print the MSE of each model on a CSV");
    std::vector<std::string> eval_models;
    std::string eval_data;
    eval->add_option("--model", eval_models, "model JSON (repeatable)")->required()->check(CLI::ExistingFile);
    eval->add_option("--data", eval_data, "CSV with features and target")->required()->check(CLI::ExistingFile);

    // bounds
    auto* bounds = app.add_subcommand("bounds", "evaluate the Rademacher and generalization bounds");
    DataFlags bounds_data;
    BoundInputs bin;
    std::optional<std::string> bounds_model;
    std::string bounds_norm = "l2";
    std::optional<std::string> bounds_out;
    bounds_data.add(*bounds);
    bounds->add_option("--model", bounds_model, "take the leaf count from this model")->check(CLI::ExistingFile);
    bounds->add_option("--ell", bin.ell, "leaf count")->check(CLI::PositiveNumber);
    bounds->add_option("--W", bin.W, "norm constraint on leaf vectors")->check(CLI::NonNegativeNumber);
    bounds->add_option("--delta", bin.delta, "confidence level in (0, 1)");
    bounds->add_option("--norm", bounds_norm, "l2 | l1")->check(CLI::IsMember({"l2", "l1"}));
    bounds->add_option("--select-s", bin.s, "use the variable-selection bound with s variables");
    bounds->add_option("--F", bin.F, "sup bound on the predictor (default W * K_hat)");
    bounds->add_option("--R", bin.R, "sup bound on |y| (default R_hat)");
    bounds->add_flag("--include-union-term", bin.include_union_term, "add the separate M union term");
    bounds->add_option("--out", bounds_out, "report path (default: stdout)");

    // stability
    auto* stability = app.add_subcommand("stability", "rank-one vs Cholesky inverse comparison");
    std::size_t stab_d = 64, stab_N = 4096;
    std::optional<std::uint64_t> stab_seed;
    std::optional<std::string> stab_out;
    stability->add_option("--d", stab_d, "dimension")->check(CLI::PositiveNumber);
    stability->add_option("--N", stab_N, "number of rank-one updates");
    stability->add_option("--seed", stab_seed, "generator seed (default: PLRT_SEED or 0)");
    stability->add_option("--out", stab_out, "report path (default: stdout)");

    // bench
    auto* bench = app.add_subcommand("bench", "train under each speedup strategy and compare");
    DataFlags bench_data;
    TrainFlags bench_flags;
    std::vector<std::string> bench_strategies{"none", "exact", "approx-min", "approx-max"};
    double bench_test_fraction = 0.2;
    std::size_t bench_repeats = 1;
    std::optional<std::uint64_t> bench_seed;
    std::optional<std::string> bench_out;
    bench_data.add(*bench);
    bench_flags.add(*bench, false);
    bench->add_option("--strategies", bench_strategies, "comma-separated strategies")
        ->delimiter(',')
        ->check(CLI::IsMember({"none", "exact", "approx-min", "approx-max"}));
    bench->add_option("--test-fraction", bench_test_fraction, "held-out fraction (0 disables)");
    bench->add_option("--repeats", bench_repeats, "timed runs per strategy")->check(CLI::PositiveNumber);
    bench->add_option("--seed", bench_seed, "train/test shuffle seed (default: PLRT_SEED or 0)");
    bench->add_option("--out", bench_out, "JSON report path");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        app.exit(e, out, err);
        return 0;
    } catch (const CLI::CallForAllHelp& e) {
        app.exit(e, out, err);
        return 0;
    } catch (const CLI::ParseError& e) {
        err << "plrt: " << e.what() << "\n";
        std::string sub;
        for (const auto* s : app.get_subcommands()) sub = s->get_name();
        err << "run 'plrt " << (sub.empty() ? "" : sub + " ") << "--help' for usage\n";
        return 2;
    }

    try {
        if (train->parsed()) {
            const Dataset data = train_data.load();
            const Criterion algo = parse_criterion(train_flags.algo);
            const TrainConfig cfg = train_flags.config();
            TrainStats stats;
            const auto t0 = std::chrono::steady_clock::now();
            const TreeModel model = train_any(algo, data, cfg, &stats);
            const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
            save_model(model, train_out);
            const double train_mse = mse(model.predict(data), data.y);
            json summary = {{"algo", train_flags.algo},
                            {"n", data.n()},
                            {"d", data.d()},
                            {"D", data.D()},
                            {"leaves", model.leaf_count()},
                            {"depth", model.depth()},
                            {"train_mse", train_mse},
                            {"depth_mse", stats.depth_mse},
                            {"scanned_count", stats.scanned},
                            {"pruned_count", stats.pruned},
                            {"strategy", train_flags.strategy},
                            {"per_sample_normalization", !train_flags.verbatim_approx},
                            {"threads", train_flags.threads},
                            {"feature_wave", train_flags.wave},
                            {"train_seconds", seconds}};
            write_file(train_summary.value_or(train_out + ".summary.json"), summary.dump(2) + "\n");
            out << "trained " << train_flags.algo << ": " << model.leaf_count() << " leaves, training MSE "
                << format_double(train_mse) << "\n";
            return 0;
        }

        if (predict->parsed()) {
            const TreeModel model = load_model(predict_model);
            const Dataset data = load_csv_with_schema(predict_data, model.schema, false);
            std::string csv = "prediction\n";
            for (double p : model.predict(data)) csv += format_double(p) + "\n";
            emit(predict_out, csv, out);
            return 0;
        }

        if (eval->parsed()) {
            for (const auto& path : eval_models) {
                const TreeModel model = load_model(path);
                const Dataset data = load_csv_with_schema(eval_data, model.schema, true);
                out << path << " mse " << format_double(mse(model.predict(data), data.y)) << "\n";
            }
            return 0;
        }

        if (bounds->parsed()) {
            const Dataset data = bounds_data.load();
            if (bounds_norm == "l1") bin.norm = NormType::L1;
            if (bounds_model) bin.ell = load_model(*bounds_model).leaf_count();
            const EmpiricalStats st = empirical_stats(data);
            emit(bounds_out, to_json(st, bin, bound_report(st, bin)), out);
            return 0;
        }

        if (stability->parsed()) {
            const auto rep = stability_report(stab_d, stab_N, stab_seed.value_or(default_seed()));
            emit(stab_out, to_json(rep), out);
            return 0;
        }

        if (bench->parsed()) {
            const Dataset data = bench_data.load();
            std::vector<Strategy> strategies;
            for (const auto& s : bench_strategies) strategies.push_back(parse_strategy(s));
            const TrainConfig cfg = bench_flags.config();
            BenchReport rep;
            if (bench_test_fraction > 0.0) {
                const auto [tr, te] = train_test_split(data, bench_test_fraction, bench_seed.value_or(default_seed()));
                rep = speedup_benchmark(tr, &te, cfg, strategies, bench_repeats);
            } else {
                rep = speedup_benchmark(data, nullptr, cfg, strategies, bench_repeats);
            }
            out << to_table(rep);
            if (bench_out) write_file(*bench_out, to_json(rep));
            if (rep.exact_matches_none && !*rep.exact_matches_none) {
                err << "plrt: exact strategy produced a different model than none\n";
                return 1;
            }
            return 0;
        }
    } catch (const Error& e) {
        err << "plrt: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        err << "plrt: " << e.what() << "\n";
        return 1;
    }
    return 2;
}

} // namespace plrt
