// Experiment driver: train -> unlearn -> retrain -> audit -> sweep -> report,
// every artifact stamped with the config hash and master seed.

#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "unlearn/experiment.hpp"

namespace fs = std::filesystem;
using namespace unlearn;

namespace {

struct GlobalFlags {
    std::string config_path;
    std::optional<std::uint64_t> seed_override;
    std::optional<std::string> out_override;
    std::optional<int> jobs_override;
};

RunConfig load_config(const GlobalFlags& flags) {
    RunConfig cfg = load_run_config_file(flags.config_path);
    if (flags.seed_override) cfg.master_seed = *flags.seed_override;
    if (flags.out_override) cfg.out_dir = *flags.out_override;
    if (flags.jobs_override) cfg.jobs = *flags.jobs_override;
    validate_run_config(cfg);
    return cfg;
}

fs::path out_path(const RunConfig& cfg, const std::string& name) {
    return fs::path(cfg.out_dir) / name;
}

void save_with_manifest(const RunConfig& cfg, const Network& net, const std::string& phase,
                        const std::string& stem, double seconds) {
    fs::create_directories(cfg.out_dir);
    const auto model_file = out_path(cfg, stem + ".unlm");
    save_model(net, model_file.string());
    write_manifest(cfg, phase, model_file.string(), seconds,
                   out_path(cfg, stem + ".manifest.json").string());
    std::cout << "wrote " << model_file.string() << "\n";
}

Network load_model_checked(const RunConfig& cfg, const fs::path& path) {
    const Network net = load_model(path.string());
    if (net.arch_id != cfg.arch) {
        throw FormatError("model '" + path.string() + "' arch " + net.arch_id +
                          " does not match configured arch " + cfg.arch);
    }
    return net;
}

int cmd_train(const GlobalFlags& flags) {
    const RunConfig cfg = load_config(flags);
    const ExperimentData data = acquire_data(cfg);
    const DatasetBundle bundle = make_bundle(cfg, data.train);
    const TrainedTarget target = train_target(cfg, bundle);
    save_with_manifest(cfg, target.model, target.backdoored ? "target-train-backdoored" : "target-train",
                       "model_initial", target.seconds);
    std::cout << "test_accuracy=" << accuracy(target.model, data.test).accuracy
              << " train_seconds=" << target.seconds << "\n";
    return 0;
}

int cmd_retrain(const GlobalFlags& flags) {
    const RunConfig cfg = load_config(flags);
    const ExperimentData data = acquire_data(cfg);
    const DatasetBundle bundle = make_bundle(cfg, data.train);
    const RetrainResult res = run_retrain_phase(cfg, bundle);
    save_with_manifest(cfg, res.model, "retrain", "model_retrain", res.seconds);
    std::cout << "test_accuracy=" << accuracy(res.model, data.test).accuracy
              << " retrain_seconds=" << res.seconds << "\n";
    return 0;
}

int cmd_unlearn(const GlobalFlags& flags, const std::string& model_arg) {
    const RunConfig cfg = load_config(flags);
    const fs::path model_path =
        model_arg.empty() ? out_path(cfg, "model_initial.unlm") : fs::path(model_arg);
    const Network initial = load_model_checked(cfg, model_path);

    const ExperimentData data = acquire_data(cfg);
    const DatasetBundle bundle = make_bundle(cfg, data.train);
    const ReferencePhase reference = run_reference_phase(cfg, bundle);
    save_with_manifest(cfg, reference.model, "reference-train", "model_reference",
                       reference.seconds);

    const auto t0 = std::chrono::steady_clock::now();
    const UnlearnResult res = run_unlearn_phase(cfg, initial, reference.model, bundle);
    const double unlearn_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    save_with_manifest(cfg, res.model, "unlearn", "model_final", unlearn_seconds);
    write_trace_csv(res.trace, out_path(cfg, "unlearn_trace.csv").string());
    std::cout << "wrote " << out_path(cfg, "unlearn_trace.csv").string() << "\n";
    std::cout << "iterations=" << res.trace.rows.size()
              << " stopped_early=" << (res.trace.stopped_early ? "true" : "false")
              << " test_accuracy=" << accuracy(res.model, data.test).accuracy << "\n";
    return 0;
}

int cmd_audit(const GlobalFlags& flags, std::vector<std::string> model_args, bool want_membership,
              bool want_backdoor) {
    const RunConfig cfg = load_config(flags);
    if (want_backdoor && !cfg.trigger.enabled) {
        throw ConfigError("backdoor audit requested but no trigger is configured");
    }
    if (want_membership && !cfg.shadow.enabled) {
        throw ConfigError("membership audit requested but the shadow section is disabled");
    }
    const bool do_backdoor = want_backdoor || cfg.trigger.enabled;
    const bool do_membership = want_membership || cfg.shadow.enabled;

    if (model_args.empty()) {
        for (const char* stem : {"model_initial", "model_retrain", "model_final"}) {
            const auto p = out_path(cfg, std::string(stem) + ".unlm");
            if (fs::exists(p)) model_args.push_back(p.string());
        }
    }
    if (model_args.empty()) {
        throw ConfigError("no models to audit; run train/retrain/unlearn first");
    }

    const ExperimentData data = acquire_data(cfg);
    const DatasetBundle bundle = make_bundle(cfg, data.train);
    const TriggerSpec trigger = trigger_for(cfg, bundle.full.dim());
    // In the backdoor experiment the forget slice carries the trigger.
    const LabeledDataset forget_probe =
        cfg.trigger.enabled ? implant_trigger(bundle.forget, trigger) : bundle.forget;

    std::optional<AttackPhase> attack;
    if (do_membership) attack = build_attack(cfg, data);

    std::vector<json> records;
    for (const auto& arg : model_args) {
        const Network model = load_model_checked(cfg, arg);
        const std::string name = fs::path(arg).stem().string();
        records.push_back(audit_record(cfg, name, "test", "accuracy",
                                       accuracy(model, data.test).accuracy));
        records.push_back(audit_record(cfg, name, "forget", "accuracy",
                                       accuracy(model, forget_probe).accuracy));
        records.push_back(audit_record(cfg, name, "remain", "accuracy",
                                       accuracy(model, bundle.remain).accuracy));
        if (do_membership) {
            const std::vector<int> truth(forget_probe.size(), 1);
            const MembershipReport rep =
                membership_attack(attack->model, model, forget_probe, truth);
            records.push_back(
                audit_record(cfg, name, "forget", "membership_accuracy", rep.attack_accuracy));
        }
        if (do_backdoor) {
            records.push_back(audit_record(cfg, name, "test", "backdoor_success",
                                           backdoor_success_rate(model, data.test, trigger)));
        }
    }
    if (do_membership) {
        records.push_back(audit_record(cfg, "attack_model", "shadow_validation", "accuracy",
                                       attack->model.validation_accuracy));
    }

    fs::create_directories(cfg.out_dir);
    write_jsonl(records, out_path(cfg, "audit.jsonl").string());
    write_csv(records, {"model", "probe", "metric", "value"}, out_path(cfg, "audit.csv").string());
    std::cout << "wrote " << out_path(cfg, "audit.jsonl").string() << " (" << records.size()
              << " records)\n";
    return 0;
}

int cmd_sweep(const GlobalFlags& flags, const std::string& kind_arg) {
    const RunConfig cfg = load_config(flags);
    const std::string kind = kind_arg.empty() ? cfg.sweep.kind : kind_arg;
    if (kind != "lambda" && kind != "refsize") {
        throw ConfigError("unknown sweep kind '" + kind + "'");
    }

    const ExperimentData data = acquire_data(cfg);
    const DatasetBundle bundle = make_bundle(cfg, data.train);

    // Prerequisites are loaded when present, trained (and saved) otherwise.
    Network initial;
    const auto initial_path = out_path(cfg, "model_initial.unlm");
    if (fs::exists(initial_path)) {
        initial = load_model_checked(cfg, initial_path);
    } else {
        const TrainedTarget target = train_target(cfg, bundle);
        save_with_manifest(cfg, target.model,
                           target.backdoored ? "target-train-backdoored" : "target-train",
                           "model_initial", target.seconds);
        initial = target.model;
    }

    const fs::path cell_dir = out_path(cfg, "sweep_cells");
    fs::create_directories(cell_dir);
    const auto cell_path = [&](const std::string& key) {
        std::ostringstream os;
        const std::string full = config_hash(cfg) + "/" + kind + "/" + key;
        os << std::hex << fnv1a(full.data(), full.size());
        return cell_dir / (os.str() + ".json");
    };

    std::vector<json> rows;
    if (kind == "lambda") {
        Network reference;
        const auto reference_path = out_path(cfg, "model_reference.unlm");
        if (fs::exists(reference_path)) {
            reference = load_model_checked(cfg, reference_path);
        } else {
            const ReferencePhase phase = run_reference_phase(cfg, bundle);
            save_with_manifest(cfg, phase.model, "reference-train", "model_reference",
                               phase.seconds);
            reference = phase.model;
        }
        const TriggerSpec trigger = trigger_for(cfg, bundle.full.dim());

        std::vector<double> missing;
        for (double l : cfg.sweep.lambdas) {
            if (!fs::exists(cell_path("lambda=" + std::to_string(l)))) missing.push_back(l);
        }
        if (!missing.empty()) {
            UnlearnConfig ucfg = cfg.unlearn_cfg;
            ucfg.seed = cfg.phase_seed("unlearn");
            const auto computed = lambda_sweep(initial, reference, bundle, data.test, trigger,
                                               missing, ucfg, cfg.jobs);
            for (const auto& row : computed) {
                const json j{{"lambda", row.lambda},
                             {"test_accuracy", row.test_accuracy},
                             {"backdoor_success", row.backdoor_success}};
                std::ofstream out(cell_path("lambda=" + std::to_string(row.lambda)));
                out << j.dump() << '\n';
            }
        }
        std::vector<LambdaSweepRow> all;
        for (double l : cfg.sweep.lambdas) {
            std::ifstream in(cell_path("lambda=" + std::to_string(l)));
            if (!in) throw FormatError("sweep cell missing after computation");
            json j;
            in >> j;
            all.push_back(LambdaSweepRow{j["lambda"], j["test_accuracy"], j["backdoor_success"], 0.0});
        }
        // Trade-off score is grid-relative, so it is recomputed over the full grid.
        double acc_lo = all[0].test_accuracy, acc_hi = all[0].test_accuracy;
        double fail_lo = 1.0 - all[0].backdoor_success, fail_hi = fail_lo;
        for (const auto& r : all) {
            acc_lo = std::min(acc_lo, r.test_accuracy);
            acc_hi = std::max(acc_hi, r.test_accuracy);
            fail_lo = std::min(fail_lo, 1.0 - r.backdoor_success);
            fail_hi = std::max(fail_hi, 1.0 - r.backdoor_success);
        }
        const auto norm = [](double v, double lo, double hi) {
            return hi > lo ? (v - lo) / (hi - lo) : 1.0;
        };
        for (auto& r : all) {
            r.tradeoff_score = 0.5 * norm(r.test_accuracy, acc_lo, acc_hi) +
                               0.5 * norm(1.0 - r.backdoor_success, fail_lo, fail_hi);
            rows.push_back(json{{"lambda", r.lambda},
                                {"test_accuracy", r.test_accuracy},
                                {"backdoor_success", r.backdoor_success},
                                {"tradeoff_score", r.tradeoff_score},
                                {"config_hash", config_hash(cfg)},
                                {"master_seed", cfg.master_seed}});
        }
        write_csv(rows, {"lambda", "test_accuracy", "backdoor_success", "tradeoff_score"},
                  out_path(cfg, "sweep_lambda.csv").string());
        std::cout << "wrote " << out_path(cfg, "sweep_lambda.csv").string() << " (" << rows.size()
                  << " rows)\n";
    } else {
        if (cfg.sweep.ref_sizes.empty()) throw ConfigError("sweep.ref_sizes is empty");
        if (!cfg.shadow.enabled) {
            throw ConfigError("refsize sweep needs the shadow section for the membership audit");
        }
        const AttackPhase attack = build_attack(cfg, data);
        std::vector<std::size_t> missing;
        for (std::size_t s : cfg.sweep.ref_sizes) {
            if (!fs::exists(cell_path("size=" + std::to_string(s)))) missing.push_back(s);
        }
        if (!missing.empty()) {
            UnlearnConfig ucfg = cfg.unlearn_cfg;
            ucfg.seed = cfg.phase_seed("unlearn");
            TrainParams ref_params = cfg.reference_train;
            ref_params.seed = cfg.phase_seed("reference-train");
            const auto computed = refsize_sweep(initial, bundle, data.test, attack.model, missing,
                                                ucfg, ref_params, cfg.jobs);
            for (const auto& row : computed) {
                const json j{{"reference_size", row.reference_size},
                             {"reference_test_accuracy", row.reference_test_accuracy},
                             {"unlearn_test_accuracy", row.unlearn_test_accuracy},
                             {"membership_attack_accuracy", row.membership_attack_accuracy},
                             {"reference_train_seconds", row.reference_train_seconds}};
                std::ofstream out(cell_path("size=" + std::to_string(row.reference_size)));
                out << j.dump() << '\n';
            }
        }
        for (std::size_t s : cfg.sweep.ref_sizes) {
            std::ifstream in(cell_path("size=" + std::to_string(s)));
            if (!in) throw FormatError("sweep cell missing after computation");
            json j;
            in >> j;
            j["config_hash"] = config_hash(cfg);
            j["master_seed"] = cfg.master_seed;
            rows.push_back(j);
        }
        write_csv(rows,
                  {"reference_size", "reference_test_accuracy", "unlearn_test_accuracy",
                   "membership_attack_accuracy", "reference_train_seconds"},
                  out_path(cfg, "sweep_refsize.csv").string());
        std::cout << "wrote " << out_path(cfg, "sweep_refsize.csv").string() << " (" << rows.size()
                  << " rows)\n";
    }
    return 0;
}

int cmd_report(const GlobalFlags& flags) {
    const RunConfig cfg = load_config(flags);
    std::vector<json> records;

    const auto audit_path = out_path(cfg, "audit.jsonl");
    if (fs::exists(audit_path)) {
        for (auto& r : read_jsonl(audit_path.string())) records.push_back(std::move(r));
    }

    double retrain_s = -1.0, reference_s = -1.0, unlearn_s = -1.0;
    for (const char* stem : {"model_initial", "model_retrain", "model_reference", "model_final"}) {
        const auto p = out_path(cfg, std::string(stem) + ".manifest.json");
        if (!fs::exists(p)) continue;
        std::ifstream in(p.string());
        json manifest;
        in >> manifest;
        records.push_back(json{{"schema_version", kReportSchemaVersion},
                               {"config_hash", manifest["config_hash"]},
                               {"master_seed", manifest["master_seed"]},
                               {"record", "timing"},
                               {"phase", manifest["phase"]},
                               {"seconds", manifest["seconds"]}});
        const std::string phase = manifest["phase"];
        const double secs = manifest["seconds"];
        if (phase == "retrain") retrain_s = secs;
        if (phase == "reference-train") reference_s = secs;
        if (phase == "unlearn") unlearn_s = secs;
    }
    if (retrain_s > 0.0 && reference_s >= 0.0 && unlearn_s >= 0.0) {
        records.push_back(json{{"schema_version", kReportSchemaVersion},
                               {"config_hash", config_hash(cfg)},
                               {"master_seed", cfg.master_seed},
                               {"record", "timing"},
                               {"phase", "speedup"},
                               {"seconds", reference_s + unlearn_s},
                               {"speedup_vs_retrain",
                                timing_compare(retrain_s, reference_s, unlearn_s)}});
    }

    if (records.empty()) throw ConfigError("nothing to report; run the pipeline first");
    fs::create_directories(cfg.out_dir);
    write_jsonl(records, out_path(cfg, "report.jsonl").string());
    std::cout << "wrote " << out_path(cfg, "report.jsonl").string() << " (" << records.size()
              << " records)\n";
    std::cout << "determinism_hash=" << report_hash(records) << "\n";
    return 0;
}

int dispatch(const std::function<int()>& fn) {
    try {
        return fn();
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const InputError& e) {
        std::cerr << "input error: " << e.what() << "\n";
        return 2;
    } catch (const FormatError& e) {
        std::cerr << "artifact error: " << e.what() << "\n";
        return 3;
    } catch (const DimensionError& e) {
        std::cerr << "artifact error: " << e.what() << "\n";
        return 3;
    } catch (const NumericError& e) {
        std::cerr << "numeric failure: " << e.what() << "\n";
        return 4;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"distillation-based machine unlearning experiments"};
    app.require_subcommand(1);

    GlobalFlags flags;
    std::uint64_t seed_value = 0;
    std::string out_value;
    int jobs_value = 0;

    app.add_option("--config", flags.config_path, "run configuration file")
        ->required()
        ->check(CLI::ExistingFile);
    auto* seed_opt = app.add_option("--seed", seed_value, "override the master seed");
    auto* out_opt = app.add_option("--out", out_value, "override the output directory");
    auto* jobs_opt = app.add_option("--jobs", jobs_value, "sweep parallelism degree");
    app.fallthrough();

    auto* train = app.add_subcommand("train", "train the initial model on the full dataset");
    auto* retrain = app.add_subcommand("retrain", "train the from-scratch baseline on the remainder");
    auto* unlearn_cmd = app.add_subcommand("unlearn", "train the reference model and unlearn");
    std::string model_arg;
    unlearn_cmd->add_option("--model", model_arg, "initial model file (default: <out>/model_initial.unlm)");
    auto* audit = app.add_subcommand("audit", "membership and backdoor audits over saved models");
    std::vector<std::string> audit_models;
    bool audit_membership = false, audit_backdoor = false;
    audit->add_option("--model", audit_models, "model files to audit (default: saved pipeline models)");
    audit->add_flag("--membership", audit_membership, "require the membership audit");
    audit->add_flag("--backdoor", audit_backdoor, "require the backdoor audit");
    auto* sweep = app.add_subcommand("sweep", "lambda or reference-size sweep");
    std::string sweep_kind;
    sweep->add_option("kind", sweep_kind, "lambda | refsize (default: from config)");
    auto* report = app.add_subcommand("report", "assemble the experiment report");

    CLI11_PARSE(app, argc, argv);

    if (*seed_opt) flags.seed_override = seed_value;
    if (*out_opt) flags.out_override = out_value;
    if (*jobs_opt) flags.jobs_override = jobs_value;

    if (*train) return dispatch([&] { return cmd_train(flags); });
    if (*retrain) return dispatch([&] { return cmd_retrain(flags); });
    if (*unlearn_cmd) return dispatch([&] { return cmd_unlearn(flags, model_arg); });
    if (*audit) {
        return dispatch(
            [&] { return cmd_audit(flags, audit_models, audit_membership, audit_backdoor); });
    }
    if (*sweep) return dispatch([&] { return cmd_sweep(flags, sweep_kind); });
    if (*report) return dispatch([&] { return cmd_report(flags); });
    return 1;
}
