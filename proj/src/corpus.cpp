#include "treerel/corpus.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "treerel/errors.hpp"

namespace treerel {

using ordered_json = nlohmann::ordered_json;

Split split_from_name(const std::string& name) {
    if (name == "train") return Split::train;
    if (name == "dev") return Split::dev;
    if (name == "test") return Split::test;
    throw DataError("unknown split '" + name + "'");
}

std::string split_name(Split s) {
    switch (s) {
        case Split::train: return "train";
        case Split::dev: return "dev";
        case Split::test: return "test";
    }
    return "?";
}

std::string lowercase_ascii(const std::string& s) {
    std::string out = s;
    for (char& c : out)
        if (c >= 'A' && c <= 'Z') c += 'a' - 'A';
    return out;
}

int Vocab::word_id(const std::string& token) const {
    auto it = word_to_id.find(lowercase_ascii(token));
    return it == word_to_id.end() ? unk_word_id : it->second;
}

int Vocab::tag_id(const std::string& tag) const {
    auto it = tag_to_id.find(tag);
    return it == tag_to_id.end() ? unk_tag_id : it->second;
}

int Vocab::label_id(const std::string& name) const {
    for (size_t i = 0; i < label_names.size(); ++i)
        if (label_names[i] == name) return static_cast<int>(i);
    return -1;
}

const std::vector<std::string>& level1_labels() {
    static const std::vector<std::string> names = {"Temporal", "Contingency", "Comparison",
                                                   "Expansion"};
    return names;
}

const std::vector<std::string>& level2_labels() {
    static const std::vector<std::string> names = {
        "Temporal.Asynchronous",    "Temporal.Synchrony",
        "Contingency.Cause",        "Contingency.Pragmatic cause",
        "Comparison.Contrast",      "Comparison.Concession",
        "Expansion.Conjunction",    "Expansion.Instantiation",
        "Expansion.Restatement",    "Expansion.Alternative",
        "Expansion.List"};
    return names;
}

const std::vector<std::string>& labels_for_level(int level) {
    if (level == 1) return level1_labels();
    if (level == 2) return level2_labels();
    throw InvalidArgument("level must be 1 or 2, got " + std::to_string(level));
}

std::map<std::string, Vector> load_glove(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open embeddings file '" + path + "'");
    std::map<std::string, Vector> out;
    std::string line;
    size_t lineno = 0;
    Index dim = -1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        std::istringstream ss(line);
        std::string token;
        ss >> token;
        std::vector<double> vals;
        std::string field;
        while (ss >> field) {
            double v;
            auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), v);
            if (ec != std::errc() || ptr != field.data() + field.size())
                throw DataError("non-numeric embedding field '" + field + "'", lineno);
            vals.push_back(v);
        }
        if (vals.empty()) throw DataError("embedding line without values", lineno);
        if (dim < 0) dim = static_cast<Index>(vals.size());
        if (static_cast<Index>(vals.size()) != dim)
            throw DataError("embedding dimension " + std::to_string(vals.size()) +
                                " differs from first line's " + std::to_string(dim),
                            lineno);
        if (out.count(token)) continue;  // first occurrence wins
        out.emplace(token, Eigen::Map<const Vector>(vals.data(), dim));
    }
    return out;
}

namespace {

ParseTree arg_to_tree(const nlohmann::json& arg, size_t lineno) {
    std::vector<ParseTree> sentences;
    if (arg.is_string()) {
        sentences.push_back(parse_ptb(arg.get<std::string>()));
    } else if (arg.is_array()) {
        for (const auto& s : arg) {
            if (!s.is_string()) throw DataError("argument list entries must be strings", lineno);
            sentences.push_back(parse_ptb(s.get<std::string>()));
        }
        if (sentences.empty()) throw DataError("empty argument sentence list", lineno);
    } else {
        throw DataError("argument must be a PTB string or list of them", lineno);
    }
    return join_multisentence(sentences);
}

BinaryTreeRef normalize_arg(const nlohmann::json& arg, size_t lineno) {
    try {
        ParseTree t = collapse_unary_chains(arg_to_tree(arg, lineno));
        return BinaryTreeRef(binarize_right(t).release());
    } catch (const ParseError& e) {
        throw DataError(std::string("bad parse tree: ") + e.what(), lineno);
    }
}

void collect_tree_words(const BinaryTree& t, std::vector<std::string>& words) {
    if (t.is_leaf()) {
        words.push_back(t.word);
        return;
    }
    collect_tree_words(*t.left, words);
    collect_tree_words(*t.right, words);
}

void collect_tree_tags(const BinaryTree& t, std::vector<std::string>& tags) {
    tags.push_back(t.tag);
    if (!t.is_leaf()) {
        collect_tree_tags(*t.left, tags);
        collect_tree_tags(*t.right, tags);
    }
}

uint64_t fnv1a64(const std::string& bytes) {
    uint64_t h = 1469598103934665603ull;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

std::string hex64(uint64_t v) {
    char buf[19];
    snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

}  // namespace

std::vector<Instance> load_instances(const std::string& path, int level, bool require_labels) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open instance file '" + path + "'");
    const std::vector<std::string>& names = labels_for_level(level);
    std::vector<Instance> out;
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
        if (!rec.is_object() || !rec.contains("arg1") || !rec.contains("arg2"))
            throw DataError("record needs arg1 and arg2 fields", lineno);

        Instance inst;
        inst.arg1 = normalize_arg(rec["arg1"], lineno);
        inst.arg2 = normalize_arg(rec["arg2"], lineno);
        if (rec.contains("split")) {
            if (!rec["split"].is_string()) throw DataError("split must be a string", lineno);
            try {
                inst.split = split_from_name(rec["split"].get<std::string>());
            } catch (const DataError& e) {
                throw DataError(e.what(), lineno);
            }
        }

        if (rec.contains("labels")) {
            if (!rec["labels"].is_array()) throw DataError("labels must be a list", lineno);
            for (const auto& l : rec["labels"]) {
                if (!l.is_string()) throw DataError("label names must be strings", lineno);
                auto it = std::find(names.begin(), names.end(), l.get<std::string>());
                if (it == names.end()) {
                    if (require_labels)
                        throw DataError("unknown level-" + std::to_string(level) + " label '" +
                                            l.get<std::string>() + "'",
                                        lineno);
                    continue;
                }
                inst.labels.push_back(static_cast<int>(it - names.begin()));
            }
            std::sort(inst.labels.begin(), inst.labels.end());
            inst.labels.erase(std::unique(inst.labels.begin(), inst.labels.end()),
                              inst.labels.end());
        }
        if (require_labels && inst.labels.empty())
            throw DataError("record without labels", lineno);
        out.push_back(std::move(inst));
    }
    return out;
}

std::vector<Instance> expand_multilabel(const std::vector<Instance>& instances) {
    std::vector<Instance> out;
    out.reserve(instances.size());
    for (const Instance& inst : instances) {
        if (inst.split != Split::train || inst.labels.size() <= 1) {
            out.push_back(inst);
            continue;
        }
        for (int label : inst.labels) {
            Instance copy = inst;
            copy.labels = {label};
            out.push_back(std::move(copy));
        }
    }
    return out;
}

VocabAndTables build_vocab(const std::vector<Instance>& instances, const std::string& glove_path,
                           int word_dim, int tag_dim, int level, Rng& rng) {
    if (word_dim <= 0 || tag_dim <= 0) throw InvalidArgument("embedding dims must be positive");

    std::map<std::string, Vector> glove;
    if (!glove_path.empty()) {
        glove = load_glove(glove_path);
        if (!glove.empty() && glove.begin()->second.size() != word_dim)
            throw DataError("configured word dim " + std::to_string(word_dim) +
                            " does not match embedding file dim " +
                            std::to_string(glove.begin()->second.size()));
    }

    VocabAndTables out;
    Vocab& v = out.vocab;
    v.label_names = labels_for_level(level);
    v.word_to_id.emplace("<unk>", 0);
    v.id_to_word.push_back("<unk>");
    v.tag_to_id.emplace("<unk>", 0);
    v.id_to_tag.push_back("<unk>");

    // first-seen order over the training split keeps ids reproducible
    for (const Instance& inst : instances) {
        if (inst.split != Split::train) continue;
        for (const BinaryTree* t : {inst.arg1.get(), inst.arg2.get()}) {
            std::vector<std::string> words, tags;
            collect_tree_words(*t, words);
            collect_tree_tags(*t, tags);
            for (const std::string& w : words) {
                std::string lw = lowercase_ascii(w);
                if (v.word_to_id.emplace(lw, static_cast<int>(v.id_to_word.size())).second)
                    v.id_to_word.push_back(lw);
            }
            for (const std::string& tag : tags)
                if (v.tag_to_id.emplace(tag, static_cast<int>(v.id_to_tag.size())).second)
                    v.id_to_tag.push_back(tag);
        }
    }

    out.word_emb = Matrix::Zero(v.id_to_word.size(), word_dim);
    for (size_t i = 0; i < v.id_to_word.size(); ++i) {
        auto it = glove.find(v.id_to_word[i]);
        if (it != glove.end()) {
            out.word_emb.row(i) = it->second.transpose();
        } else {
            Vector row(word_dim);
            rng.fill_uniform(row, -0.05, 0.05);
            out.word_emb.row(i) = row.transpose();
        }
    }
    out.tag_emb = Matrix::Zero(v.id_to_tag.size(), tag_dim);
    {
        Vector row(tag_dim);
        for (size_t i = 0; i < v.id_to_tag.size(); ++i) {
            rng.fill_uniform(row, -0.05, 0.05);
            out.tag_emb.row(i) = row.transpose();
        }
    }
    return out;
}

static ordered_json vocab_to_json(const Vocab& v) {
    ordered_json j;
    j["format_version"] = 1;
    ordered_json words = ordered_json::object();
    for (size_t i = 0; i < v.id_to_word.size(); ++i) words[v.id_to_word[i]] = i;
    ordered_json tags = ordered_json::object();
    for (size_t i = 0; i < v.id_to_tag.size(); ++i) tags[v.id_to_tag[i]] = i;
    j["word_to_id"] = std::move(words);
    j["tag_to_id"] = std::move(tags);
    j["label_names"] = v.label_names;
    j["unk_word_id"] = v.unk_word_id;
    j["unk_tag_id"] = v.unk_tag_id;
    return j;
}

void save_vocab_json(const Vocab& v, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write vocab file '" + path + "'");
    out << vocab_to_json(v).dump() << "\n";
}

Vocab load_vocab_json(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open vocab file '" + path + "'");
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::parse_error& e) {
        throw DataError(std::string("bad vocab JSON: ") + e.what());
    }
    Vocab v;
    auto read_map = [](const nlohmann::json& m, std::unordered_map<std::string, int>& to_id,
                       std::vector<std::string>& to_name) {
        to_name.resize(m.size());
        for (auto it = m.begin(); it != m.end(); ++it) {
            int id = it.value().get<int>();
            if (id < 0 || id >= static_cast<int>(m.size()))
                throw DataError("vocab ids must be dense and 0-based");
            to_id[it.key()] = id;
            to_name[id] = it.key();
        }
    };
    read_map(j.at("word_to_id"), v.word_to_id, v.id_to_word);
    read_map(j.at("tag_to_id"), v.tag_to_id, v.id_to_tag);
    v.label_names = j.at("label_names").get<std::vector<std::string>>();
    v.unk_word_id = j.at("unk_word_id").get<int>();
    v.unk_tag_id = j.at("unk_tag_id").get<int>();
    return v;
}

VocabHashes vocab_hashes(const Vocab& v) {
    ordered_json j = vocab_to_json(v);
    VocabHashes h;
    h.words = hex64(fnv1a64(j["word_to_id"].dump()));
    h.tags = hex64(fnv1a64(j["tag_to_id"].dump()));
    h.labels = hex64(fnv1a64(j["label_names"].dump()));
    return h;
}

}  // namespace treerel
