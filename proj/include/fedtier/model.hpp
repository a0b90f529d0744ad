#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "fedtier/data.hpp"

namespace fedtier {

// Shape of the softmax classifier. hidden == 0 means plain multinomial
// logistic regression; hidden > 0 inserts one tanh layer of that width.
struct LayerDims {
    int input = 0;
    int hidden = 0;
    int classes = 0;

    std::size_t param_count() const;
    bool valid() const { return input >= 1 && classes >= 1 && hidden >= 0; }
    bool operator==(const LayerDims&) const = default;
};

// Flat parameter vector. Layout: [W, b] without a hidden layer, or
// [W1, b1, W2, b2] with one. All entries stay finite across operations.
struct ModelParams {
    std::vector<double> values;
    LayerDims dims;
};

struct TrainHyper {
    double learning_rate = 0.01;
    double decay = 0.995;
    int batch_size = 10;
    int local_epochs = 1;
};

struct ClientUpdate {
    ModelParams params;
    std::size_t sample_count = 0;
};

struct EvalResult {
    double accuracy = 0.0;
    double mean_loss = 0.0;
};

// Uniform [-0.05, 0.05] initialization; same (dims, seed) is bit-identical.
ModelParams init_params(const LayerDims& dims, std::uint64_t seed);

// Mini-batch SGD on cross-entropy over the shard, local_epochs passes, with
// effective rate learning_rate * decay^round_index. Deterministic given all
// inputs. Throws std::domain_error on an empty shard.
ClientUpdate local_train(const ModelParams& params, const Dataset& data,
                         std::span<const int> shard, const TrainHyper& hyper,
                         int round_index, std::uint64_t seed);

// Sample-count-weighted mean of parameter vectors, compensated summation in
// the given order. Callers wanting schedule independence pass updates in
// ascending client-id order.
ModelParams aggregate(std::span<const ClientUpdate> updates);

// Accuracy (argmax with lowest-index tie-break) and mean cross-entropy.
EvalResult evaluate(const ModelParams& params, const Dataset& data);
EvalResult evaluate(const ModelParams& params, const Dataset& data,
                    std::span<const int> subset);

int predict_class(const ModelParams& params, std::span<const double> x);

// Mean cross-entropy and its gradient over a batch; the gradient pairs with
// mean_loss for finite-difference checks.
double mean_loss(const ModelParams& params, const Dataset& data,
                 std::span<const int> batch);
std::vector<double> loss_gradient(const ModelParams& params, const Dataset& data,
                                  std::span<const int> batch);

}  // namespace fedtier
