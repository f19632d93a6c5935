#include <chrono>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <map>
#include <string>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "treerel/checkpoint.hpp"
#include "treerel/corpus.hpp"
#include "treerel/errors.hpp"
#include "treerel/trainer.hpp"
#include "treerel/tree.hpp"

using namespace treerel;
using ordered_json = nlohmann::ordered_json;

namespace {

struct RunOptions {
    TrainingConfig cfg;
    std::string data, glove, out, config_path;
    bool seed_set = false;
};

uint64_t parse_u64(const std::string& s, const std::string& key) {
    try {
        size_t pos = 0;
        uint64_t v = std::stoull(s, &pos);
        if (pos != s.size()) throw std::invalid_argument(s);
        return v;
    } catch (const std::exception&) {
        throw InvalidArgument("bad value '" + s + "' for " + key);
    }
}

bool parse_bool(const std::string& s, const std::string& key) {
    if (s == "true" || s == "1") return true;
    if (s == "false" || s == "0") return false;
    throw InvalidArgument("bad value '" + s + "' for " + key);
}

std::string trim(const std::string& s) {
    size_t a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) return "";
    size_t b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
}

// key=value lines; '#' starts a comment
void apply_config_file(RunOptions& opt, const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open config file '" + path + "'");
    std::string line;
    size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        std::string s = trim(line);
        if (s.empty() || s[0] == '#') continue;
        size_t eq = s.find('=');
        if (eq == std::string::npos)
            throw InvalidArgument("config line " + std::to_string(lineno) + ": expected key=value");
        std::string key = trim(s.substr(0, eq));
        std::string val = trim(s.substr(eq + 1));
        if (key == "mode") opt.cfg.mode = mode_from_name(val);
        else if (key == "level") opt.cfg.level = static_cast<int>(parse_u64(val, key));
        else if (key == "word_dim") opt.cfg.word_dim = static_cast<int>(parse_u64(val, key));
        else if (key == "tag_dim") opt.cfg.tag_dim = static_cast<int>(parse_u64(val, key));
        else if (key == "hidden_dim") opt.cfg.hidden = static_cast<int>(parse_u64(val, key));
        else if (key == "learning_rate") opt.cfg.learning_rate = std::stod(val);
        else if (key == "l2") opt.cfg.l2 = std::stod(val);
        else if (key == "batch_size") opt.cfg.batch_size = static_cast<int>(parse_u64(val, key));
        else if (key == "epochs") opt.cfg.epochs = static_cast<int>(parse_u64(val, key));
        else if (key == "seed") { opt.cfg.seed = parse_u64(val, key); opt.seed_set = true; }
        else if (key == "regularize_embeddings") opt.cfg.regularize_embeddings = parse_bool(val, key);
        else if (key == "threads") opt.cfg.threads = static_cast<int>(parse_u64(val, key));
        else if (key == "data") opt.data = val;
        else if (key == "glove") opt.glove = val;
        else if (key == "out") opt.out = val;
        else throw InvalidArgument("unknown config key '" + key + "'");
    }
}

std::string fmt_double(double v) {
    char buf[64];
    snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

void write_manifest(const RunOptions& opt, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write manifest '" + path + "'");
    out << "mode = " << mode_name(opt.cfg.mode) << "\n";
    out << "level = " << opt.cfg.level << "\n";
    out << "word_dim = " << opt.cfg.word_dim << "\n";
    out << "tag_dim = " << opt.cfg.tag_dim << "\n";
    out << "hidden_dim = " << opt.cfg.hidden << "\n";
    out << "learning_rate = " << fmt_double(opt.cfg.learning_rate) << "\n";
    out << "l2 = " << fmt_double(opt.cfg.l2) << "\n";
    out << "batch_size = " << opt.cfg.batch_size << "\n";
    out << "epochs = " << opt.cfg.epochs << "\n";
    out << "seed = " << opt.cfg.seed << "\n";
    out << "regularize_embeddings = " << (opt.cfg.regularize_embeddings ? "true" : "false") << "\n";
    out << "threads = " << opt.cfg.threads << "\n";
    if (!opt.data.empty()) out << "data = " << opt.data << "\n";
    if (!opt.glove.empty()) out << "glove = " << opt.glove << "\n";
    if (!opt.out.empty()) out << "out = " << opt.out << "\n";
}

void seed_from_env(RunOptions& opt) {
    if (opt.seed_set) return;
    if (const char* env = std::getenv("TREECOMP_SEED")) {
        opt.cfg.seed = parse_u64(env, "TREECOMP_SEED");
        opt.seed_set = true;
    }
}

// every file-producing run records what produced it
void write_command_manifest(const std::string& out_path,
                            const std::vector<std::pair<std::string, std::string>>& keys) {
    std::ofstream out(out_path + ".manifest");
    if (!out) throw IoError("cannot write manifest '" + out_path + ".manifest'");
    for (const auto& [k, v] : keys)
        if (!v.empty()) out << k << " = " << v << "\n";
}

Vocab load_sibling_vocab(const std::string& model_path, const std::string& vocab_path,
                         const Checkpoint& ck) {
    std::string path = vocab_path.empty() ? model_path + ".vocab.json" : vocab_path;
    Vocab v = load_vocab_json(path);
    VocabHashes h = vocab_hashes(v);
    if (h.words != ck.vocab_hashes.words || h.tags != ck.vocab_hashes.tags ||
        h.labels != ck.vocab_hashes.labels)
        throw DataError("vocab file '" + path + "' does not match the checkpoint");
    return v;
}

int cmd_train(RunOptions& opt) {
    seed_from_env(opt);
    if (opt.data.empty()) throw InvalidArgument("train needs --data");
    if (opt.out.empty()) throw InvalidArgument("train needs --out");
    opt.cfg.validate();

    auto t0 = std::chrono::steady_clock::now();
    std::vector<Instance> instances = load_instances(opt.data, opt.cfg.level);
    Rng rng(opt.cfg.seed);
    VocabAndTables vt = build_vocab(instances, opt.glove, opt.cfg.word_dim, opt.cfg.tag_dim,
                                    opt.cfg.level, rng);

    TrainResult result = train(opt.cfg, instances, vt.vocab, vt.word_emb, vt.tag_emb, rng);

    save_checkpoint(opt.out, opt.cfg, result.params, vocab_hashes(vt.vocab),
                    vt.vocab.label_names, result.best_epoch, result.best_dev_accuracy,
                    &result.optimizer);
    save_vocab_json(vt.vocab, opt.out + ".vocab.json");

    std::ofstream log(opt.out + ".log.jsonl");
    if (!log) throw IoError("cannot write training log");
    for (const EpochLog& e : result.log) {
        ordered_json j;
        j["epoch"] = e.epoch;
        j["train_loss"] = e.train_loss;
        j["dev_accuracy"] = e.dev_accuracy;
        log << j.dump() << "\n";
    }
    write_manifest(opt, opt.out + ".manifest");

    auto secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::cerr << "trained " << mode_name(opt.cfg.mode) << " for " << result.log.size()
              << " epochs in " << secs << "s; best dev accuracy " << result.best_dev_accuracy
              << " at epoch " << result.best_epoch << "\n";
    return 0;
}

int cmd_eval(const std::string& model, const std::string& data, const std::string& split,
             const std::string& vocab_path, const std::string& out_path) {
    Checkpoint ck = load_checkpoint(model);
    Vocab vocab = load_sibling_vocab(model, vocab_path, ck);
    Split want = split_from_name(split);
    std::vector<Instance> instances;
    for (Instance& inst : load_instances(data, ck.config.level))
        if (inst.split == want) instances.push_back(std::move(inst));

    EvalReport rep = evaluate(ck.params, instances, vocab);
    ordered_json j;
    j["split"] = split;
    j["instances"] = rep.instances;
    j["hits"] = rep.hits;
    j["accuracy"] = rep.accuracy;
    ordered_json per = ordered_json::object();
    for (size_t c = 0; c < vocab.label_names.size(); ++c)
        per[vocab.label_names[c]] = {{"hits", rep.class_hits[c]},
                                     {"total", rep.class_totals[c]}};
    j["per_class"] = std::move(per);

    if (out_path.empty()) {
        std::cout << j.dump() << "\n";
    } else {
        std::ofstream out(out_path);
        if (!out) throw IoError("cannot write report '" + out_path + "'");
        out << j.dump() << "\n";
        write_command_manifest(out_path, {{"subcommand", "eval"}, {"model", model},
                                          {"data", data}, {"split", split},
                                          {"vocab", vocab_path}, {"out", out_path}});
    }
    return 0;
}

int cmd_predict(const std::string& model, const std::string& data, const std::string& vocab_path,
                const std::string& out_path) {
    Checkpoint ck = load_checkpoint(model);
    Vocab vocab = load_sibling_vocab(model, vocab_path, ck);
    std::vector<Instance> instances = load_instances(data, ck.config.level, false);

    std::ofstream file;
    std::ostream* out = &std::cout;
    if (!out_path.empty()) {
        file.open(out_path);
        if (!file) throw IoError("cannot write predictions '" + out_path + "'");
        out = &file;
    }
    for (const Instance& inst : instances) {
        InstanceRun run = run_instance(inst, ck.params, vocab, nullptr);
        ordered_json j;
        j["prediction"] = vocab.label_names[argmax(run.yhat)];
        std::vector<double> probs(run.yhat.data(), run.yhat.data() + run.yhat.size());
        j["distribution"] = probs;
        *out << j.dump() << "\n";
    }
    if (!out_path.empty())
        write_command_manifest(out_path, {{"subcommand", "predict"}, {"model", model},
                                          {"data", data}, {"vocab", vocab_path},
                                          {"out", out_path}});
    return 0;
}

int cmd_preprocess(const std::string& data, const std::string& out_path) {
    std::ifstream in(data);
    if (!in) throw IoError("cannot open '" + data + "'");
    std::ofstream out(out_path);
    if (!out) throw IoError("cannot write '" + out_path + "'");

    auto normalize = [](const nlohmann::json& arg, size_t lineno) -> std::string {
        std::vector<ParseTree> sentences;
        if (arg.is_string()) {
            sentences.push_back(parse_ptb(arg.get<std::string>()));
        } else if (arg.is_array()) {
            for (const auto& s : arg) sentences.push_back(parse_ptb(s.get<std::string>()));
            if (sentences.empty()) throw DataError("empty argument sentence list", lineno);
        } else {
            throw DataError("argument must be a PTB string or list", lineno);
        }
        return serialize(*binarize_right(collapse_unary_chains(join_multisentence(sentences))));
    };

    std::string line;
    size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        nlohmann::json rec;
        try {
            rec = nlohmann::json::parse(line);
        } catch (const nlohmann::json::parse_error& e) {
            throw DataError(std::string("malformed JSON: ") + e.what(), lineno);
        }
        try {
            ordered_json outrec;
            outrec["arg1"] = normalize(rec.at("arg1"), lineno);
            outrec["arg2"] = normalize(rec.at("arg2"), lineno);
            if (rec.contains("labels")) outrec["labels"] = rec["labels"];
            if (rec.contains("split")) outrec["split"] = rec["split"];
            out << outrec.dump() << "\n";
        } catch (const ParseError& e) {
            throw DataError(std::string("bad parse tree: ") + e.what(), lineno);
        } catch (const nlohmann::json::exception& e) {
            throw DataError(std::string("bad record: ") + e.what(), lineno);
        }
    }
    write_command_manifest(out_path,
                           {{"subcommand", "preprocess"}, {"data", data}, {"out", out_path}});
    return 0;
}

int cmd_gradcheck(const std::string& mode_str, uint64_t seed, double tolerance, double lambda) {
    EncoderMode mode = mode_from_name(mode_str);
    GradCheckSetup setup = make_gradcheck_setup(mode, seed);
    GradCheckReport rep = gradient_check(setup.params, setup.instance, setup.vocab, lambda,
                                         false, 200, seed);
    for (const GradCheckEntry& e : rep.tensors)
        std::cout << e.tensor << " max_rel_err=" << fmt_double(e.max_rel_err)
                  << " checked=" << e.checked << " skipped=" << e.skipped << "\n";
    std::cout << "overall max_rel_err=" << fmt_double(rep.max_rel_err)
              << (rep.pass(tolerance) ? " PASS" : " FAIL") << "\n";
    return rep.pass(tolerance) ? 0 : 1;
}

int cmd_export_tags(const std::string& model, const std::string& vocab_path,
                    const std::string& out_path) {
    Checkpoint ck = load_checkpoint(model);
    if (!mode_is_tagged(ck.config.mode))
        throw DataError("checkpoint mode '" + mode_name(ck.config.mode) +
                        "' has no tag embeddings");
    Vocab vocab = load_sibling_vocab(model, vocab_path, ck);

    std::ofstream file;
    std::ostream* out = &std::cout;
    if (!out_path.empty()) {
        file.open(out_path);
        if (!file) throw IoError("cannot write '" + out_path + "'");
        out = &file;
    }
    for (size_t i = 0; i < vocab.id_to_tag.size(); ++i) {
        *out << vocab.id_to_tag[i];
        for (Index j = 0; j < ck.params.tag_emb.cols(); ++j)
            *out << "\t" << fmt_double(ck.params.tag_emb(static_cast<Index>(i), j));
        *out << "\n";
    }
    if (!out_path.empty())
        write_command_manifest(out_path, {{"subcommand", "export-tag-embeddings"},
                                          {"model", model}, {"vocab", vocab_path},
                                          {"out", out_path}});
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"tree-structured discourse relation classifier"};
    app.require_subcommand(1);

    RunOptions opt;
    std::string model, data, out_path, vocab_path, split = "test", mode_str = "tag_tree_lstm";
    uint64_t seed_flag = 0;
    double tolerance = 1e-4, gc_lambda = 0.0001;

    // staging copies so the precedence is defaults < config file < flags
    int f_level = 1, f_word_dim = 50, f_tag_dim = 50, f_hidden = 250;
    int f_batch = 10, f_epochs = 20, f_threads = 1;
    double f_lr = 0.01, f_l2 = 0.0001;
    std::string f_glove;

    CLI::App* train_cmd = app.add_subcommand("train", "train a model");
    train_cmd->add_option("--config", opt.config_path, "key=value config file");
    train_cmd->add_option("--data", data, "instance JSONL");
    auto* glove_opt = train_cmd->add_option("--glove", f_glove,
                                            "pretrained embeddings (GloVe text format)");
    train_cmd->add_option("--out", out_path, "checkpoint output path");
    auto* mode_opt = train_cmd->add_option("--mode", mode_str, "encoder mode");
    auto* level_opt = train_cmd->add_option("--level", f_level, "label level (1 or 2)");
    auto* wd_opt = train_cmd->add_option("--word-dim", f_word_dim, "word embedding dim");
    auto* td_opt = train_cmd->add_option("--tag-dim", f_tag_dim, "tag embedding dim");
    auto* hd_opt = train_cmd->add_option("--hidden-dim", f_hidden, "hidden dim");
    auto* lr_opt = train_cmd->add_option("--learning-rate", f_lr, "AdaGrad eta");
    auto* l2_opt = train_cmd->add_option("--l2", f_l2, "L2 weight lambda");
    auto* bs_opt = train_cmd->add_option("--batch-size", f_batch, "batch size");
    auto* ep_opt = train_cmd->add_option("--epochs", f_epochs, "epoch budget");
    auto* seed_opt = train_cmd->add_option("--seed", seed_flag, "run seed");
    auto* thr_opt = train_cmd->add_option("--threads", f_threads, "worker count");
    auto* reg_opt = train_cmd->add_flag("--regularize-embeddings",
                                        "include embedding tables in the L2 term");

    CLI::App* eval_cmd = app.add_subcommand("eval", "evaluate a checkpoint");
    eval_cmd->add_option("--model", model, "checkpoint path")->required();
    eval_cmd->add_option("--data", data, "instance JSONL")->required();
    eval_cmd->add_option("--split", split, "split to score (train/dev/test)");
    eval_cmd->add_option("--vocab", vocab_path, "vocab JSON (default: <model>.vocab.json)");
    eval_cmd->add_option("--out", out_path, "write the report here instead of stdout");

    CLI::App* predict_cmd = app.add_subcommand("predict", "predict labels for instances");
    predict_cmd->add_option("--model", model, "checkpoint path")->required();
    predict_cmd->add_option("--data", data, "instance JSONL")->required();
    predict_cmd->add_option("--vocab", vocab_path, "vocab JSON");
    predict_cmd->add_option("--out", out_path, "write JSONL here instead of stdout");

    CLI::App* pre_cmd = app.add_subcommand("preprocess",
                                           "normalize parse trees to binary form");
    pre_cmd->add_option("--data", data, "instance JSONL")->required();
    pre_cmd->add_option("--out", out_path, "output JSONL")->required();

    CLI::App* gc_cmd = app.add_subcommand("gradcheck", "finite-difference gradient oracle");
    gc_cmd->add_option("--mode", mode_str, "encoder mode");
    auto* gc_seed = gc_cmd->add_option("--seed", seed_flag, "setup seed");
    gc_cmd->add_option("--tolerance", tolerance, "max relative error");
    gc_cmd->add_option("--l2", gc_lambda, "lambda for the checked objective");

    CLI::App* tags_cmd = app.add_subcommand("export-tag-embeddings",
                                            "dump tag embeddings as TSV");
    tags_cmd->add_option("--model", model, "checkpoint path")->required();
    tags_cmd->add_option("--vocab", vocab_path, "vocab JSON");
    tags_cmd->add_option("--out", out_path, "output TSV (default stdout)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : 2;  // help exits clean, anything else is usage
    }

    try {
        if (app.got_subcommand(train_cmd)) {
            if (!opt.config_path.empty()) apply_config_file(opt, opt.config_path);
            // flags win over the config file
            if (mode_opt->count()) opt.cfg.mode = mode_from_name(mode_str);
            if (level_opt->count()) opt.cfg.level = f_level;
            if (wd_opt->count()) opt.cfg.word_dim = f_word_dim;
            if (td_opt->count()) opt.cfg.tag_dim = f_tag_dim;
            if (hd_opt->count()) opt.cfg.hidden = f_hidden;
            if (lr_opt->count()) opt.cfg.learning_rate = f_lr;
            if (l2_opt->count()) opt.cfg.l2 = f_l2;
            if (bs_opt->count()) opt.cfg.batch_size = f_batch;
            if (ep_opt->count()) opt.cfg.epochs = f_epochs;
            if (thr_opt->count()) opt.cfg.threads = f_threads;
            if (seed_opt->count()) { opt.cfg.seed = seed_flag; opt.seed_set = true; }
            if (reg_opt->count()) opt.cfg.regularize_embeddings = true;
            if (glove_opt->count()) opt.glove = f_glove;
            if (!data.empty()) opt.data = data;
            if (!out_path.empty()) opt.out = out_path;
            return cmd_train(opt);
        }
        if (app.got_subcommand(eval_cmd)) return cmd_eval(model, data, split, vocab_path, out_path);
        if (app.got_subcommand(predict_cmd)) return cmd_predict(model, data, vocab_path, out_path);
        if (app.got_subcommand(pre_cmd)) return cmd_preprocess(data, out_path);
        if (app.got_subcommand(gc_cmd)) {
            uint64_t seed = gc_seed->count() ? seed_flag : 1;
            if (!gc_seed->count())
                if (const char* env = std::getenv("TREECOMP_SEED")) seed = parse_u64(env, "env");
            return cmd_gradcheck(mode_str, seed, tolerance, gc_lambda);
        }
        if (app.got_subcommand(tags_cmd)) return cmd_export_tags(model, vocab_path, out_path);
    } catch (const InvalidArgument& e) {
        std::cerr << "usage error: " << e.what() << "\n";
        return 2;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 2;
}
