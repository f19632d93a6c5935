#include "treerel/checkpoint.hpp"

#include <cstring>
#include <fstream>

#include <nlohmann/json.hpp>

#include "treerel/errors.hpp"

namespace treerel {

using ordered_json = nlohmann::ordered_json;

namespace {

constexpr char kMagic[8] = {'T', 'R', 'E', 'L', 'C', 'K', 'P', '1'};

ordered_json config_to_json(const TrainingConfig& c) {
    ordered_json j;
    j["mode"] = mode_name(c.mode);
    j["level"] = c.level;
    j["word_dim"] = c.word_dim;
    j["tag_dim"] = c.tag_dim;
    j["hidden_dim"] = c.hidden;
    j["learning_rate"] = c.learning_rate;
    j["l2"] = c.l2;
    j["batch_size"] = c.batch_size;
    j["epochs"] = c.epochs;
    j["seed"] = c.seed;
    j["regularize_embeddings"] = c.regularize_embeddings;
    return j;
}

TrainingConfig config_from_json(const nlohmann::json& j) {
    TrainingConfig c;
    c.mode = mode_from_name(j.at("mode").get<std::string>());
    c.level = j.at("level").get<int>();
    c.word_dim = j.at("word_dim").get<int>();
    c.tag_dim = j.at("tag_dim").get<int>();
    c.hidden = j.at("hidden_dim").get<int>();
    c.learning_rate = j.at("learning_rate").get<double>();
    c.l2 = j.at("l2").get<double>();
    c.batch_size = j.at("batch_size").get<int>();
    c.epochs = j.at("epochs").get<int>();
    c.seed = j.at("seed").get<uint64_t>();
    c.regularize_embeddings = j.at("regularize_embeddings").get<bool>();
    return c;
}

void write_tensor_rowmajor(std::ofstream& out, const double* data, Index rows, Index cols) {
    // column-major in memory; the file is row-major
    std::vector<double> buf(static_cast<size_t>(rows) * cols);
    for (Index i = 0; i < rows; ++i)
        for (Index j = 0; j < cols; ++j) buf[static_cast<size_t>(i) * cols + j] = data[j * rows + i];
    out.write(reinterpret_cast<const char*>(buf.data()),
              static_cast<std::streamsize>(buf.size() * sizeof(double)));
}

void read_tensor_rowmajor(std::ifstream& in, double* data, Index rows, Index cols) {
    std::vector<double> buf(static_cast<size_t>(rows) * cols);
    in.read(reinterpret_cast<char*>(buf.data()),
            static_cast<std::streamsize>(buf.size() * sizeof(double)));
    if (!in) throw DataError("checkpoint: truncated tensor data");
    for (Index i = 0; i < rows; ++i)
        for (Index j = 0; j < cols; ++j) data[j * rows + i] = buf[static_cast<size_t>(i) * cols + j];
}

}  // namespace

void save_checkpoint(const std::string& path, const TrainingConfig& cfg, ModelParams& params,
                     const VocabHashes& hashes, const std::vector<std::string>& label_names,
                     int best_epoch, double dev_accuracy, const AdaGradState* optimizer) {
    std::vector<TensorRef> refs = tensor_registry(params);

    ordered_json manifest;
    manifest["format_version"] = 1;
    manifest["config"] = config_to_json(cfg);
    manifest["vocab_hashes"] = {{"words", hashes.words}, {"tags", hashes.tags},
                                {"labels", hashes.labels}};
    manifest["label_names"] = label_names;
    manifest["best_epoch"] = best_epoch;
    manifest["dev_accuracy"] = dev_accuracy;
    manifest["layout"] = "row_major_f64_le";

    uint64_t offset = 0;
    ordered_json tensors = ordered_json::array();
    for (const TensorRef& t : refs) {
        tensors.push_back({{"name", t.name}, {"rows", t.rows}, {"cols", t.cols},
                           {"offset", offset}});
        offset += static_cast<uint64_t>(t.size()) * sizeof(double);
    }
    manifest["tensors"] = std::move(tensors);

    if (optimizer) {
        ordered_json opt;
        opt["learning_rate"] = optimizer->learning_rate;
        opt["epsilon"] = optimizer->epsilon;
        ordered_json ots = ordered_json::array();
        for (size_t k = 0; k < refs.size(); ++k) {
            ots.push_back({{"name", "opt/" + refs[k].name},
                           {"rows", optimizer->accum[k].rows()},
                           {"cols", optimizer->accum[k].cols()},
                           {"offset", offset}});
            offset += static_cast<uint64_t>(optimizer->accum[k].size()) * sizeof(double);
        }
        opt["tensors"] = std::move(ots);
        manifest["optimizer"] = std::move(opt);
    }

    std::string mbytes = manifest.dump();
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write checkpoint '" + path + "'");
    out.write(kMagic, sizeof kMagic);
    uint64_t mlen = mbytes.size();
    out.write(reinterpret_cast<const char*>(&mlen), sizeof mlen);
    out.write(mbytes.data(), static_cast<std::streamsize>(mbytes.size()));
    for (const TensorRef& t : refs) write_tensor_rowmajor(out, t.data, t.rows, t.cols);
    if (optimizer)
        for (const Matrix& a : optimizer->accum)
            write_tensor_rowmajor(out, a.data(), a.rows(), a.cols());
    if (!out) throw IoError("write failure on checkpoint '" + path + "'");
}

Checkpoint load_checkpoint(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open checkpoint '" + path + "'");
    char magic[8];
    in.read(magic, sizeof magic);
    if (!in || std::memcmp(magic, kMagic, sizeof magic) != 0)
        throw DataError("not a checkpoint file: '" + path + "'");
    uint64_t mlen = 0;
    in.read(reinterpret_cast<char*>(&mlen), sizeof mlen);
    std::string mbytes(mlen, '\0');
    in.read(mbytes.data(), static_cast<std::streamsize>(mlen));
    if (!in) throw DataError("checkpoint: truncated manifest");

    nlohmann::json manifest;
    try {
        manifest = nlohmann::json::parse(mbytes);
    } catch (const nlohmann::json::parse_error& e) {
        throw DataError(std::string("checkpoint: bad manifest: ") + e.what());
    }

    Checkpoint ck;
    ck.config = config_from_json(manifest.at("config"));
    ck.vocab_hashes.words = manifest.at("vocab_hashes").at("words").get<std::string>();
    ck.vocab_hashes.tags = manifest.at("vocab_hashes").at("tags").get<std::string>();
    ck.vocab_hashes.labels = manifest.at("vocab_hashes").at("labels").get<std::string>();
    ck.label_names = manifest.at("label_names").get<std::vector<std::string>>();
    ck.best_epoch = manifest.at("best_epoch").get<int>();
    ck.dev_accuracy = manifest.at("dev_accuracy").get<double>();

    // rebuild the parameter shapes, then read tensors by name
    auto tensor_dims = [&](const std::string& name) -> std::pair<Index, Index> {
        for (const auto& t : manifest.at("tensors"))
            if (t.at("name").get<std::string>() == name)
                return {t.at("rows").get<Index>(), t.at("cols").get<Index>()};
        throw DataError("checkpoint: missing tensor '" + name + "'");
    };

    const TrainingConfig& c = ck.config;
    auto [vocab_rows, wdim] = tensor_dims("emb/word");
    if (wdim != c.word_dim) throw DataError("checkpoint: word embedding dim mismatch");
    Matrix word_emb = Matrix::Zero(vocab_rows, wdim);
    Matrix tag_emb;
    if (mode_is_tagged(c.mode)) {
        auto [tag_rows, tdim] = tensor_dims("emb/tag");
        tag_emb = Matrix::Zero(tag_rows, tdim);
    }
    Rng dummy(0);
    ck.params = init_model(c.mode, c.word_dim, mode_is_tagged(c.mode) ? c.tag_dim : 0, c.hidden,
                           static_cast<int>(ck.label_names.size()), word_emb, tag_emb, dummy);

    std::vector<TensorRef> refs = tensor_registry(ck.params);
    const std::streampos data_start = in.tellg();
    auto read_into = [&](const nlohmann::json& entry, double* data, Index rows, Index cols) {
        if (entry.at("rows").get<Index>() != rows || entry.at("cols").get<Index>() != cols)
            throw DataError("checkpoint: shape mismatch for '" +
                            entry.at("name").get<std::string>() + "'");
        in.seekg(data_start + static_cast<std::streamoff>(entry.at("offset").get<uint64_t>()));
        read_tensor_rowmajor(in, data, rows, cols);
    };

    for (const TensorRef& t : refs) {
        bool found = false;
        for (const auto& entry : manifest.at("tensors")) {
            if (entry.at("name").get<std::string>() == t.name) {
                read_into(entry, t.data, t.rows, t.cols);
                found = true;
                break;
            }
        }
        if (!found) throw DataError("checkpoint: missing tensor '" + t.name + "'");
    }

    if (manifest.contains("optimizer")) {
        AdaGradState opt(ck.params, manifest["optimizer"].at("learning_rate").get<double>(),
                         manifest["optimizer"].at("epsilon").get<double>());
        const auto& ots = manifest["optimizer"].at("tensors");
        if (ots.size() != refs.size()) throw DataError("checkpoint: optimizer tensor count");
        for (size_t k = 0; k < refs.size(); ++k) {
            for (const auto& entry : ots) {
                if (entry.at("name").get<std::string>() == "opt/" + refs[k].name) {
                    read_into(entry, opt.accum[k].data(), opt.accum[k].rows(),
                              opt.accum[k].cols());
                    break;
                }
            }
        }
        ck.optimizer = std::move(opt);
    }
    return ck;
}

}  // namespace treerel
