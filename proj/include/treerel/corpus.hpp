#pragma once

#include <map>
#include <string>
#include <unordered_map>
#include <vector>

#include "treerel/rng.hpp"
#include "treerel/tree.hpp"
#include "treerel/types.hpp"

namespace treerel {

enum class Split { train, dev, test };
Split split_from_name(const std::string& name);
std::string split_name(Split s);

// One argument pair. Trees are shared so multi-label expansion is cheap.
struct Instance {
    BinaryTreeRef arg1, arg2;
    std::vector<int> labels;  // sorted, unique, non-empty (may be empty for predict input)
    Split split = Split::train;
};

struct Vocab {
    std::unordered_map<std::string, int> word_to_id;  // lowercased tokens
    std::unordered_map<std::string, int> tag_to_id;
    std::vector<std::string> id_to_word;
    std::vector<std::string> id_to_tag;
    std::vector<std::string> label_names;
    int unk_word_id = 0;
    int unk_tag_id = 0;

    int word_id(const std::string& token) const;  // lowercases, falls back to unk
    int tag_id(const std::string& tag) const;     // falls back to unk
    int label_id(const std::string& name) const;  // -1 if unknown
    int n_labels() const { return static_cast<int>(label_names.size()); }
};

// Temporal, Contingency, Comparison, Expansion
const std::vector<std::string>& level1_labels();
// the 11 second-level types that survive rare-type removal
const std::vector<std::string>& level2_labels();
const std::vector<std::string>& labels_for_level(int level);

// GloVe text format: token then the vector, space-separated, one per line.
// Duplicates keep the first occurrence; a ragged or non-numeric line is a
// DataError with its line number.
std::map<std::string, Vector> load_glove(const std::string& path);

// JSONL records {arg1, arg2, labels, split}; arg1/arg2 are PTB strings or
// lists of them. Every argument goes through join -> collapse -> binarize.
// With require_labels=false (predict input) an absent/empty label list is
// allowed and unknown label names are ignored.
std::vector<Instance> load_instances(const std::string& path, int level,
                                     bool require_labels = true);

// Training-split expansion: k labels -> k single-label instances. Dev/test
// instances pass through untouched.
std::vector<Instance> expand_multilabel(const std::vector<Instance>& instances);

struct VocabAndTables {
    Vocab vocab;
    Matrix word_emb;  // |V| x word_dim
    Matrix tag_emb;   // |T| x tag_dim
};

// Word vocab from training leaves (lowercased) plus <unk> at id 0; GloVe rows
// where available, uniform [-0.05, 0.05] otherwise. Tag vocab from training
// trees plus <unk>; tag rows are always random. glove_path may be empty.
VocabAndTables build_vocab(const std::vector<Instance>& instances, const std::string& glove_path,
                           int word_dim, int tag_dim, int level, Rng& rng);

void save_vocab_json(const Vocab& v, const std::string& path);
Vocab load_vocab_json(const std::string& path);

// FNV-1a over the canonical JSON pieces; pinned into checkpoints.
struct VocabHashes {
    std::string words, tags, labels;
};
VocabHashes vocab_hashes(const Vocab& v);

std::string lowercase_ascii(const std::string& s);

}  // namespace treerel
