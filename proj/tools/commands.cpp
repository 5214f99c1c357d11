#include "commands.hpp"

#include <csignal>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <set>
#include <sstream>
#include <thread>

#include "CLI11.hpp"
#include "avdn/errors.hpp"
#include "avdn/fusion.hpp"
#include "avdn/report.hpp"
#include "avdn/simulator.hpp"
#include "server.hpp"

namespace avdn::cli {

namespace {

std::string fixed(double v, int digits = 4) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", digits, v);
    return buf;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
    out << text;
    if (!out) throw std::runtime_error("write failed: " + path.string());
}

void ensure_parent(const std::filesystem::path& path) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
}

std::filesystem::path sibling(const std::filesystem::path& path, const std::string& part) {
    std::filesystem::path stem = path;
    stem.replace_extension();
    return stem.string() + "." + part + ".jsonl";
}

std::string corpus_stats(std::span<const Episode> episodes) {
    std::size_t rounds = 0;
    std::size_t ego = 0;
    std::size_t allo = 0;
    double length = 0.0;
    for (const auto& ep : episodes) {
        for (const auto& r : ep.dialog) {
            ++rounds;
            ego += has_egocentric_phrase(r.style) ? 1 : 0;
            allo += has_allocentric_phrase(r.style) ? 1 : 0;
        }
        length += path_length(ep.gt_trajectory);
    }
    std::ostringstream s;
    s << "episodes " << episodes.size() << ", instructions " << rounds;
    if (rounds > 0) {
        s << ", egocentric " << fixed(static_cast<double>(ego) / static_cast<double>(rounds), 3) << ", allocentric "
          << fixed(static_cast<double>(allo) / static_cast<double>(rounds), 3);
    }
    if (!episodes.empty()) {
        s << ", mean path length " << fixed(length / static_cast<double>(episodes.size()), 2) << " m";
    }
    return s.str();
}

RolloutConfig rollout_for(const ModelConfig& model, const EvalOptions& opt) {
    RolloutConfig cfg;
    cfg.max_steps = opt.max_steps;
    cfg.step_max = model.step_max;
    cfg.obs_resolution = model.obs_resolution;
    return cfg;
}

std::string rollout_summary(std::span<const PredictedTrajectory> preds, const std::filesystem::path& out) {
    std::size_t stopped = 0;
    for (const auto& p : preds) stopped += p.stop_reason == StopReason::stopped ? 1 : 0;
    return "wrote " + std::to_string(preds.size()) + " predictions to " + out.string() + " (stopped " +
           std::to_string(stopped) + ", max_steps " + std::to_string(preds.size() - stopped) + ")";
}

}  // namespace

std::string checkpoint_file_name(ModelKind kind, std::int64_t iteration) {
    return std::string(to_string(kind)) + "-" + std::to_string(iteration) + ".ckpt";
}

CommandResult cmd_generate(const GenerateOptions& opt, std::ostream& out) {
    const auto episodes = generate_episodes(opt.seed, opt.count, opt.generator);
    ensure_parent(opt.out);
    save_episodes(episodes, opt.out);
    CommandResult result{0, corpus_stats(episodes), opt.out};
    out << result.summary << "\n";
    if (opt.split) {
        const auto parts = split_dataset(episodes, *opt.split, opt.seed);
        const std::pair<const char*, const std::vector<Episode>*> files[] = {
            {"train", &parts.train}, {"val", &parts.val}, {"test", &parts.test}};
        for (const auto& [name, eps] : files) {
            const auto path = sibling(opt.out, name);
            save_episodes(*eps, path);
            out << name << ": " << eps->size() << " episodes -> " << path.string() << "\n";
        }
    }
    return result;
}

CommandResult cmd_train(const TrainOptions& opt, std::ostream& out) {
    const auto train_eps = load_episodes(opt.data);
    const auto val_eps = opt.val ? load_episodes(*opt.val) : std::vector<Episode>{};
    std::filesystem::create_directories(opt.out_dir);

    std::vector<std::filesystem::path> written;
    const auto log = [&](const TrainProgress& p) {
        if (p.checkpoint) {
            const auto path = opt.out_dir / checkpoint_file_name(opt.kind, p.iteration);
            save_checkpoint(*p.checkpoint, path);
            written.push_back(path);
            out << "checkpoint iter " << p.iteration << " train_loss " << fixed(*p.checkpoint->train_loss, 6);
            if (p.checkpoint->val_loss) out << " val_loss " << fixed(*p.checkpoint->val_loss, 6);
            out << " -> " << path.string() << "\n";
        } else if (opt.log_every > 0 && p.iteration % opt.log_every == 0) {
            out << "iter " << p.iteration << " batch_loss " << fixed(p.batch_loss, 6) << "\n";
        }
    };
    const auto checkpoints = train(opt.kind, train_eps, val_eps, opt.config, log);

    std::ostringstream report;
    report << "{\"kind\": \"" << to_string(opt.kind) << "\", \"seed\": " << opt.config.seed << ", \"checkpoints\": [";
    for (std::size_t i = 0; i < checkpoints.size(); ++i) {
        const auto& ck = checkpoints[i];
        char buf[256];
        std::snprintf(buf, sizeof buf, "%s{\"iteration\": %lld, \"file\": \"%s\", \"train_loss\": %.17g", i ? ", " : "",
                      static_cast<long long>(ck.iteration), written[i].filename().string().c_str(), *ck.train_loss);
        report << buf;
        if (ck.val_loss) {
            std::snprintf(buf, sizeof buf, ", \"val_loss\": %.17g", *ck.val_loss);
            report << buf;
        }
        report << "}";
    }
    report << "]}\n";
    const auto report_path = opt.out_dir / (std::string(to_string(opt.kind)) + "-train.json");
    write_text(report_path, report.str());
    return {0, "wrote " + std::to_string(checkpoints.size()) + " checkpoints to " + opt.out_dir.string(), report_path};
}

CommandResult cmd_eval(const EvalOptions& opt, std::ostream& out) {
    if (opt.checkpoints.size() != 1) throw ValidationError("eval takes exactly one checkpoint");
    const Checkpoint ck = load_checkpoint(opt.checkpoints.front());
    const auto policy = make_policy(ck);
    const auto episodes = load_episodes(opt.data);
    const auto preds = run_split(*policy, episodes, rollout_for(ck.config, opt), opt.threads);
    ensure_parent(opt.out);
    save_predictions(preds, opt.out);
    CommandResult result{0, rollout_summary(preds, opt.out), opt.out};
    out << result.summary << "\n";
    return result;
}

CommandResult cmd_fuse(const EvalOptions& opt, std::ostream& out) {
    std::vector<ManifestEntry> entries;
    if (opt.manifest) entries = load_ensemble_manifest(*opt.manifest);
    for (const auto& path : opt.checkpoints) entries.push_back({load_checkpoint(path).config.kind, path});
    if (entries.size() < 2) throw ValidationError("fuse needs at least 2 checkpoints (manifest or --checkpoint)");
    const auto ensemble = std::make_shared<const Ensemble>(load_ensemble(entries));
    const FusedPolicy policy(ensemble);
    const auto episodes = load_episodes(opt.data);
    const ModelConfig first = load_checkpoint(entries.front().path).config;
    RolloutConfig cfg = rollout_for(first, opt);
    cfg.step_max = ensemble->step_max();
    const auto preds = run_split(policy, episodes, cfg, opt.threads);
    ensure_parent(opt.out);
    save_predictions(preds, opt.out);
    CommandResult result{0, rollout_summary(preds, opt.out) + " from " + std::to_string(ensemble->size()) + " members",
                         opt.out};
    out << result.summary << "\n";
    return result;
}

CommandResult cmd_score(const ScoreOptions& opt, std::ostream& out) {
    if (opt.predictions.empty()) throw ValidationError("score needs at least one --pred file");
    if (!opt.labels.empty() && opt.labels.size() != opt.predictions.size()) {
        throw ValidationError("--label count must match --pred count");
    }
    opt.metrics.validate();
    const auto episodes = load_episodes(opt.data);
    std::set<std::string> ids;
    for (const auto& ep : episodes) ids.insert(ep.id);

    std::vector<ScoreRow> rows;
    for (std::size_t i = 0; i < opt.predictions.size(); ++i) {
        const auto preds = load_predictions(opt.predictions[i]);
        for (const auto& p : preds) {
            if (!ids.count(p.episode_id)) {
                throw NotFoundError(opt.predictions[i].string() + ": prediction for unknown episode " + p.episode_id);
            }
        }
        ScoreRow row;
        row.label = opt.labels.empty() ? opt.predictions[i].stem().string() : opt.labels[i];
        row.metrics = evaluate_split(episodes, predictions_by_id(preds), opt.metrics);
        rows.push_back(std::move(row));
    }
    const std::string table = format_table(rows);
    out << table;
    CommandResult result{0, table, std::nullopt};
    if (opt.json_out) {
        ensure_parent(*opt.json_out);
        write_text(*opt.json_out, report_to_json(rows));
        result.report_path = *opt.json_out;
    }
    return result;
}

CommandResult cmd_report(const ReportOptions& opt, std::ostream& out) {
    if (opt.checkpoints.empty()) throw ValidationError("report needs at least one checkpoint");
    std::vector<Checkpoint> cks;
    for (const auto& path : opt.checkpoints) cks.push_back(load_checkpoint(path));
    const auto episodes = load_episodes(opt.data);
    RolloutConfig rollout;
    rollout.step_max = cks.front().config.step_max;
    rollout.obs_resolution = cks.front().config.obs_resolution;
    const auto rows = overfit_report(cks, episodes, rollout, opt.metrics);
    const std::string table = format_table(rows);
    out << table << "\n";
    for (const auto& r : rows) {
        out << r.label << ": train_loss " << (r.train_loss ? fixed(*r.train_loss, 6) : "n/a") << ", val_loss "
            << (r.val_loss ? fixed(*r.val_loss, 6) : "n/a") << "\n";
    }
    CommandResult result{0, table, std::nullopt};
    if (opt.json_out) {
        ensure_parent(*opt.json_out);
        write_text(*opt.json_out, report_to_json(rows));
        result.report_path = *opt.json_out;
    }
    return result;
}

namespace {

std::atomic<bool> g_interrupted{false};

extern "C" void on_signal(int) { g_interrupted = true; }

int serve(const ServerOptions& options, const std::optional<std::filesystem::path>& checkpoint, std::ostream& out) {
    ServerOptions opts = options;
    if (checkpoint) {
        const Checkpoint ck = load_checkpoint(*checkpoint);
        auto policy = std::shared_ptr<const Policy>(make_policy(ck));
        opts.sessions.obs_resolution = ck.config.obs_resolution;
        opts.sessions.step_max = ck.config.step_max;
        opts.sessions.policy = [policy](const Episode&) { return policy; };
    }
    SessionServer server(opts);
    server.start();
    out << "serving on http://" << opts.host << ":" << server.port() << " (Ctrl-C to stop)" << std::endl;
    std::signal(SIGINT, on_signal);
    std::signal(SIGTERM, on_signal);
    while (!g_interrupted) std::this_thread::sleep_for(std::chrono::milliseconds(100));
    server.stop();
    out << "stopped" << std::endl;
    return 0;
}

void add_metric_flags(CLI::App* cmd, MetricConfig& m, std::string& gp_mode) {
    cmd->add_option("--iou-threshold", m.iou_threshold, "IoU needed for success")
        ->envname("AVDN_IOU_THRESHOLD")
        ->capture_default_str();
    cmd->add_option("--gp-mode", gp_mode, "Goal progress mode: path-literal or displacement")
        ->envname("AVDN_GP_MODE")
        ->capture_default_str();
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Dialog-guided aerial navigation toolkit: generate, train, evaluate, fuse, score, serve."};
    app.footer(
        "Every command is reproducible from its flags and --seed.\n"
        "Environment: flags marked (Env:AVDN_...) may be set through that variable; an explicit flag wins.");
    app.require_subcommand(1);

    GenerateOptions gen;
    std::string split_text;
    auto* g = app.add_subcommand("generate", "Write a synthetic episode corpus (JSON lines)");
    g->add_option("--seed", gen.seed, "Base seed; episode i uses seed+i")->envname("AVDN_SEED")->capture_default_str();
    g->add_option("--count", gen.count, "Number of episodes")->capture_default_str();
    g->add_option("--out", gen.out, "Output file")->required();
    g->add_option("--split", split_text, "Also write train/val/test files, e.g. 0.8,0.1,0.1");
    g->add_option("--world-side", gen.generator.world_side, "World side, meters")->capture_default_str();
    g->add_option("--view-side", gen.generator.view_side, "View square side, meters")->capture_default_str();
    g->add_option("--max-steps", gen.generator.max_steps, "M, steps and dialog rounds")->capture_default_str();
    g->add_option("--step-max", gen.generator.step_max, "Longest single move, meters")->capture_default_str();

    TrainOptions tr;
    std::string kind_text = "transformer";
    auto* t = app.add_subcommand("train", "Teacher-forced training; writes <kind>-<iter>.ckpt files");
    t->add_option("--kind", kind_text, "transformer or lstm")->capture_default_str();
    t->add_option("--data", tr.data, "Training episodes")->required();
    t->add_option("--val", tr.val, "Validation episodes (for val_loss)");
    t->add_option("--out", tr.out_dir, "Checkpoint directory")->required();
    t->add_option("--iters", tr.config.total_iterations, "Total iterations")->envname("AVDN_ITERS")->capture_default_str();
    t->add_option("--checkpoints", tr.config.checkpoint_iterations, "Iteration marks, e.g. 200,2000")
        ->delimiter(',');
    t->add_option("--batch-size", tr.config.batch_size, "Minibatch size")->envname("AVDN_BATCH_SIZE")->capture_default_str();
    t->add_option("--lr", tr.config.lr, "AdamW learning rate")->envname("AVDN_LR")->capture_default_str();
    t->add_option("--weight-decay", tr.config.weight_decay, "AdamW decoupled weight decay")->capture_default_str();
    t->add_option("--seed", tr.config.seed, "Init and batch sampling seed")->envname("AVDN_SEED")->capture_default_str();
    t->add_option("--d-model", tr.config.model.d_model, "Transformer width")->capture_default_str();
    t->add_option("--heads", tr.config.model.n_heads, "Attention heads")->capture_default_str();
    t->add_option("--layers", tr.config.model.n_layers, "Transformer layers")->capture_default_str();
    t->add_option("--hidden", tr.config.model.lstm_hidden, "LSTM hidden size")->capture_default_str();
    t->add_option("--blur", tr.config.augment.blur_probability, "Blur probability")->capture_default_str();
    t->add_option("--noise", tr.config.augment.noise_probability, "Noise probability")->capture_default_str();
    t->add_option("--log-every", tr.log_every, "Print batch loss every N iterations (0: never)")->capture_default_str();

    EvalOptions ev;
    std::string eval_ckpt;
    auto* e = app.add_subcommand("eval", "Roll out one checkpoint over a dataset");
    e->add_option("--checkpoint", eval_ckpt, "Checkpoint file")->required();
    e->add_option("--data", ev.data, "Episodes")->required();
    e->add_option("--out", ev.out, "Prediction file (JSON lines)")->required();
    e->add_option("--max-steps", ev.max_steps, "Override the episodes' M");
    e->add_option("--threads", ev.threads, "Rollout threads (0: all cores)")->envname("AVDN_THREADS")->capture_default_str();

    EvalOptions fu;
    std::string manifest;
    auto* f = app.add_subcommand("fuse", "Roll out the per-step mean of several checkpoints");
    f->add_option("--manifest", manifest, "Ensemble manifest: '<kind> <path>' per line");
    f->add_option("--checkpoint", fu.checkpoints, "Member checkpoint (repeatable)");
    f->add_option("--data", fu.data, "Episodes")->required();
    f->add_option("--out", fu.out, "Prediction file (JSON lines)")->required();
    f->add_option("--max-steps", fu.max_steps, "Override the episodes' M");
    f->add_option("--threads", fu.threads, "Rollout threads (0: all cores)")->envname("AVDN_THREADS")->capture_default_str();

    ScoreOptions sc;
    std::string score_gp = "path-literal";
    auto* s = app.add_subcommand("score", "Score prediction files; prints Method/SPL/SR/GP rows");
    s->add_option("--data", sc.data, "Episodes")->required();
    s->add_option("--pred", sc.predictions, "Prediction file (repeatable)")->required();
    s->add_option("--label", sc.labels, "Row label per --pred (default: file stem)");
    s->add_option("--json", sc.json_out, "Also write the full report as JSON");
    add_metric_flags(s, sc.metrics, score_gp);

    ReportOptions rp;
    std::string report_gp = "path-literal";
    auto* r = app.add_subcommand("report", "Checkpoint ablation table with recorded losses");
    r->add_option("--checkpoint", rp.checkpoints, "Checkpoint file (repeatable)")->required();
    r->add_option("--data", rp.data, "Evaluation episodes")->required();
    r->add_option("--json", rp.json_out, "Also write the full report as JSON");
    add_metric_flags(r, rp.metrics, report_gp);

    ServerOptions sv;
    std::optional<std::filesystem::path> serve_ckpt;
    std::string transcripts;
    auto* v = app.add_subcommand("serve", "Session service for the commander console");
    v->add_option("--host", sv.host, "Bind address")->capture_default_str();
    v->add_option("--port", sv.port, "Port (0: any free port)")->envname("AVDN_PORT")->capture_default_str();
    v->add_option("--seed", sv.seed, "First seed for sessions created without one")->envname("AVDN_SEED")->capture_default_str();
    v->add_option("--transcripts", transcripts, "Append-only transcript directory");
    v->add_option("--capacity", sv.sessions.capacity, "Maximum live sessions")->capture_default_str();
    v->add_option("--step-budget", sv.sessions.step_budget, "Moves per instruction round")->capture_default_str();
    v->add_option("--checkpoint", serve_ckpt, "Fly a trained checkpoint instead of the oracle autopilot");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return 0;
    } catch (const CLI::ParseError& ex) {
        if (ex.get_exit_code() == 0) {
            out << app.help();
            return 0;
        }
        err << "error: " << ex.what() << "\n" << "run with --help for usage\n";
        return 2;
    }

    try {
        if (*g) {
            if (!split_text.empty()) {
                std::array<double, 3> ratios{};
                std::istringstream in(split_text);
                std::string part;
                std::size_t i = 0;
                while (std::getline(in, part, ',')) {
                    if (i >= 3) throw ValidationError("--split takes three ratios");
                    ratios[i++] = std::stod(part);
                }
                if (i != 3) throw ValidationError("--split takes three ratios");
                gen.split = ratios;
            }
            cmd_generate(gen, out);
        } else if (*t) {
            tr.kind = model_kind_from_string(kind_text);
            out << cmd_train(tr, out).summary << "\n";
        } else if (*e) {
            ev.checkpoints = {eval_ckpt};
            cmd_eval(ev, out);
        } else if (*f) {
            if (!manifest.empty()) fu.manifest = manifest;
            cmd_fuse(fu, out);
        } else if (*s) {
            sc.metrics.gp_mode = gp_mode_from_string(score_gp);
            cmd_score(sc, out);
        } else if (*r) {
            rp.metrics.gp_mode = gp_mode_from_string(report_gp);
            cmd_report(rp, out);
        } else if (*v) {
            if (!transcripts.empty()) sv.sessions.transcript_dir = transcripts;
            return serve(sv, serve_ckpt, out);
        }
    } catch (const std::exception& ex) {
        err << "error: " << ex.what() << "\n";
        return 1;
    }
    return 0;
}

}  // namespace avdn::cli
