#include "treerel/tree.hpp"

#include <sstream>

namespace treerel {

namespace {

bool is_space(char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r'; }

struct PtbReader {
    const std::string& text;
    size_t pos = 0;

    explicit PtbReader(const std::string& t) : text(t) {}

    void skip_ws() {
        while (pos < text.size() && is_space(text[pos])) ++pos;
    }

    bool at_end() {
        skip_ws();
        return pos >= text.size();
    }

    char peek() const { return text[pos]; }

    std::string read_token() {
        size_t start = pos;
        while (pos < text.size() && !is_space(text[pos]) && text[pos] != '(' && text[pos] != ')')
            ++pos;
        return text.substr(start, pos - start);
    }

    // outermost: only the outermost node may be an unlabeled wrapper
    ParseTree read_node(bool outermost) {
        skip_ws();
        if (pos >= text.size() || text[pos] != '(')
            throw ParseError("expected '('", pos);
        ++pos;
        skip_ws();
        ParseTree node;
        node.tag = read_token();

        while (true) {
            skip_ws();
            if (pos >= text.size()) throw ParseError("unbalanced parentheses", pos);
            char c = text[pos];
            if (c == ')') {
                ++pos;
                break;
            }
            if (c == '(') {
                if (!node.word.empty())
                    throw ParseError("word and subtree under one node", pos);
                node.children.push_back(read_node(false));
            } else {
                if (!node.children.empty())
                    throw ParseError("word and subtree under one node", pos);
                if (!node.word.empty())
                    throw ParseError("leaf with multiple words", pos);
                node.word = read_token();
            }
        }

        if (node.tag.empty()) {
            // wrapper "( tree )": strip it, everything else is malformed
            if (outermost && node.children.size() == 1 && node.word.empty())
                return std::move(node.children.front());
            throw ParseError("empty label", pos);
        }
        if (node.children.empty() && node.word.empty())
            throw ParseError("node without word or children", pos);
        return node;
    }
};

void serialize_rec(const ParseTree& t, std::string& out) {
    out += '(';
    out += t.tag;
    if (t.is_leaf()) {
        out += ' ';
        out += t.word;
    } else {
        for (const ParseTree& c : t.children) {
            out += ' ';
            serialize_rec(c, out);
        }
    }
    out += ')';
}

void serialize_rec(const BinaryTree& t, std::string& out) {
    out += '(';
    out += t.tag;
    if (t.is_leaf()) {
        out += ' ';
        out += t.word;
    } else {
        out += ' ';
        serialize_rec(*t.left, out);
        out += ' ';
        serialize_rec(*t.right, out);
    }
    out += ')';
}

// binarize children[lo..] under the given tag
std::unique_ptr<BinaryTree> binarize_span(const ParseTree& parent, size_t lo);

std::unique_ptr<BinaryTree> binarize_node(const ParseTree& t) {
    auto node = std::make_unique<BinaryTree>();
    node->tag = t.tag;
    if (t.is_leaf()) {
        node->word = t.word;
        return node;
    }
    if (t.children.size() == 1)
        throw InvalidArgument("binarize_right: unary chain under '" + t.tag + "'");
    node->left = binarize_node(t.children[0]);
    node->right = binarize_span(t, 1);
    return node;
}

std::unique_ptr<BinaryTree> binarize_span(const ParseTree& parent, size_t lo) {
    if (lo + 1 == parent.children.size()) return binarize_node(parent.children[lo]);
    auto node = std::make_unique<BinaryTree>();
    node->tag = parent.tag;  // inserted nodes reuse the parent's tag
    node->left = binarize_node(parent.children[lo]);
    node->right = binarize_span(parent, lo + 1);
    return node;
}

}  // namespace

std::unique_ptr<BinaryTree> BinaryTree::clone() const {
    auto copy = std::make_unique<BinaryTree>();
    copy->tag = tag;
    copy->word = word;
    if (left) {
        copy->left = left->clone();
        copy->right = right->clone();
    }
    return copy;
}

ParseTree parse_ptb(const std::string& text) {
    PtbReader reader(text);
    if (reader.at_end()) throw ParseError("empty input", reader.pos);
    ParseTree t = reader.read_node(true);
    if (!reader.at_end()) throw ParseError("trailing content after tree", reader.pos);
    return t;
}

std::string serialize(const ParseTree& t) {
    std::string out;
    serialize_rec(t, out);
    return out;
}

std::string serialize(const BinaryTree& t) {
    std::string out;
    serialize_rec(t, out);
    return out;
}

ParseTree collapse_unary_chains(const ParseTree& t) {
    const ParseTree* cur = &t;
    while (cur->children.size() == 1) cur = &cur->children.front();
    ParseTree out;
    out.tag = cur->tag;  // lowest tag of the chain survives
    out.word = cur->word;
    out.children.reserve(cur->children.size());
    for (const ParseTree& c : cur->children) out.children.push_back(collapse_unary_chains(c));
    return out;
}

std::unique_ptr<BinaryTree> binarize_right(const ParseTree& t) {
    return binarize_node(t);
}

ParseTree join_multisentence(const std::vector<ParseTree>& trees) {
    if (trees.empty()) throw InvalidArgument("join_multisentence: empty sentence list");
    if (trees.size() == 1) return trees.front();
    ParseTree root;
    root.tag = "Root";
    root.children = trees;
    return root;
}

static void collect_leaves(const ParseTree& t, std::vector<std::string>& out) {
    if (t.is_leaf()) {
        out.push_back(t.word);
        return;
    }
    for (const ParseTree& c : t.children) collect_leaves(c, out);
}

static void collect_leaves(const BinaryTree& t, std::vector<std::string>& out) {
    if (t.is_leaf()) {
        out.push_back(t.word);
        return;
    }
    collect_leaves(*t.left, out);
    collect_leaves(*t.right, out);
}

std::vector<std::string> leaf_words(const ParseTree& t) {
    std::vector<std::string> out;
    collect_leaves(t, out);
    return out;
}

std::vector<std::string> leaf_words(const BinaryTree& t) {
    std::vector<std::string> out;
    collect_leaves(t, out);
    return out;
}

bool trees_equal(const BinaryTree& a, const BinaryTree& b) {
    if (a.tag != b.tag || a.word != b.word || a.is_leaf() != b.is_leaf()) return false;
    if (a.is_leaf()) return true;
    return trees_equal(*a.left, *b.left) && trees_equal(*a.right, *b.right);
}

}  // namespace treerel
