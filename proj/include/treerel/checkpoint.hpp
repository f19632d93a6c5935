#pragma once

#include <optional>
#include <string>

#include "treerel/optimizer.hpp"
#include "treerel/trainer.hpp"

namespace treerel {

// Checkpoint container: 8-byte magic, little-endian u64 manifest length, the
// JSON manifest, then row-major little-endian f64 tensor data at the offsets
// the manifest records. Optimizer accumulators ride along so training state
// is restorable bit-exactly.
struct Checkpoint {
    TrainingConfig config;
    VocabHashes vocab_hashes;
    std::vector<std::string> label_names;
    int best_epoch = -1;
    double dev_accuracy = 0.0;
    ModelParams params;
    std::optional<AdaGradState> optimizer;
};

void save_checkpoint(const std::string& path, const TrainingConfig& cfg, ModelParams& params,
                     const VocabHashes& hashes, const std::vector<std::string>& label_names,
                     int best_epoch, double dev_accuracy, const AdaGradState* optimizer);

Checkpoint load_checkpoint(const std::string& path);

}  // namespace treerel
