#include "fedtier/model.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "fedtier/rng.hpp"

namespace fedtier {

namespace {

// Offsets into the flat parameter vector.
struct Layout {
    std::size_t w1 = 0, b1 = 0, w2 = 0, b2 = 0;
    bool has_hidden = false;
};

Layout layout_of(const LayerDims& d) {
    Layout l;
    if (d.hidden > 0) {
        l.has_hidden = true;
        l.w1 = 0;
        l.b1 = l.w1 + static_cast<std::size_t>(d.hidden) * d.input;
        l.w2 = l.b1 + static_cast<std::size_t>(d.hidden);
        l.b2 = l.w2 + static_cast<std::size_t>(d.classes) * d.hidden;
    } else {
        l.w1 = 0;
        l.b1 = static_cast<std::size_t>(d.classes) * d.input;
    }
    return l;
}

void check_dims(const LayerDims& d) {
    if (!d.valid()) {
        throw std::invalid_argument("model: dims must have input >= 1, classes >= 1, hidden >= 0");
    }
}

void check_finite(const std::vector<double>& v, const char* what) {
    for (double x : v) {
        if (!std::isfinite(x)) {
            throw std::domain_error(std::string("model: non-finite parameter after ") + what);
        }
    }
}

// Forward pass; fills logits, and the hidden activation when present.
void forward(const ModelParams& p, std::span<const double> x,
             std::vector<double>& hidden, std::vector<double>& logits) {
    const auto& d = p.dims;
    const Layout l = layout_of(d);
    logits.assign(static_cast<std::size_t>(d.classes), 0.0);
    if (l.has_hidden) {
        hidden.assign(static_cast<std::size_t>(d.hidden), 0.0);
        for (int h = 0; h < d.hidden; ++h) {
            double z = p.values[l.b1 + h];
            const double* w = &p.values[l.w1 + static_cast<std::size_t>(h) * d.input];
            for (int i = 0; i < d.input; ++i) {
                z += w[i] * x[i];
            }
            hidden[static_cast<std::size_t>(h)] = std::tanh(z);
        }
        for (int k = 0; k < d.classes; ++k) {
            double z = p.values[l.b2 + k];
            const double* w = &p.values[l.w2 + static_cast<std::size_t>(k) * d.hidden];
            for (int h = 0; h < d.hidden; ++h) {
                z += w[h] * hidden[static_cast<std::size_t>(h)];
            }
            logits[static_cast<std::size_t>(k)] = z;
        }
    } else {
        for (int k = 0; k < d.classes; ++k) {
            double z = p.values[l.b1 + k];
            const double* w = &p.values[l.w1 + static_cast<std::size_t>(k) * d.input];
            for (int i = 0; i < d.input; ++i) {
                z += w[i] * x[i];
            }
            logits[static_cast<std::size_t>(k)] = z;
        }
    }
}

void softmax_inplace(std::vector<double>& z) {
    const double zmax = *std::max_element(z.begin(), z.end());
    double sum = 0.0;
    for (double& v : z) {
        v = std::exp(v - zmax);
        sum += v;
    }
    for (double& v : z) {
        v /= sum;
    }
}

// Accumulates the cross-entropy gradient of one sample into grad.
void accumulate_gradient(const ModelParams& p, std::span<const double> x, int label,
                         std::vector<double>& grad, std::vector<double>& hidden,
                         std::vector<double>& probs) {
    const auto& d = p.dims;
    const Layout l = layout_of(d);
    forward(p, x, hidden, probs);
    softmax_inplace(probs);
    // dL/dz_k = p_k - [k == label]
    if (l.has_hidden) {
        std::vector<double> dhidden(static_cast<std::size_t>(d.hidden), 0.0);
        for (int k = 0; k < d.classes; ++k) {
            const double dz = probs[static_cast<std::size_t>(k)] - (k == label ? 1.0 : 0.0);
            double* gw = &grad[l.w2 + static_cast<std::size_t>(k) * d.hidden];
            const double* w = &p.values[l.w2 + static_cast<std::size_t>(k) * d.hidden];
            for (int h = 0; h < d.hidden; ++h) {
                gw[h] += dz * hidden[static_cast<std::size_t>(h)];
                dhidden[static_cast<std::size_t>(h)] += dz * w[h];
            }
            grad[l.b2 + k] += dz;
        }
        for (int h = 0; h < d.hidden; ++h) {
            const double a = hidden[static_cast<std::size_t>(h)];
            const double dz = dhidden[static_cast<std::size_t>(h)] * (1.0 - a * a);
            double* gw = &grad[l.w1 + static_cast<std::size_t>(h) * d.input];
            for (int i = 0; i < d.input; ++i) {
                gw[i] += dz * x[i];
            }
            grad[l.b1 + h] += dz;
        }
    } else {
        for (int k = 0; k < d.classes; ++k) {
            const double dz = probs[static_cast<std::size_t>(k)] - (k == label ? 1.0 : 0.0);
            double* gw = &grad[l.w1 + static_cast<std::size_t>(k) * d.input];
            for (int i = 0; i < d.input; ++i) {
                gw[i] += dz * x[i];
            }
            grad[l.b1 + k] += dz;
        }
    }
}

void check_sample(const Dataset& data, int idx) {
    if (idx < 0 || static_cast<std::size_t>(idx) >= data.size()) {
        throw std::domain_error("model: sample index out of range");
    }
}

}  // namespace

std::size_t LayerDims::param_count() const {
    if (hidden > 0) {
        return static_cast<std::size_t>(hidden) * input + hidden +
               static_cast<std::size_t>(classes) * hidden + classes;
    }
    return static_cast<std::size_t>(classes) * input + classes;
}

ModelParams init_params(const LayerDims& dims, std::uint64_t seed) {
    check_dims(dims);
    ModelParams p;
    p.dims = dims;
    p.values.resize(dims.param_count());
    Rng rng(seed);
    for (double& v : p.values) {
        v = rng.uniform(-0.05, 0.05);
    }
    return p;
}

ClientUpdate local_train(const ModelParams& params, const Dataset& data,
                         std::span<const int> shard, const TrainHyper& hyper,
                         int round_index, std::uint64_t seed) {
    check_dims(params.dims);
    if (shard.empty()) {
        throw std::domain_error("local_train: shard is empty");
    }
    if (hyper.learning_rate < 0.0 || !std::isfinite(hyper.learning_rate)) {
        throw std::invalid_argument("local_train: learning_rate must be finite and >= 0");
    }
    if (hyper.batch_size < 1 || hyper.local_epochs < 1) {
        throw std::invalid_argument("local_train: batch_size and local_epochs must be >= 1");
    }
    for (int idx : shard) {
        check_sample(data, idx);
    }

    ModelParams current = params;
    const double rate = hyper.learning_rate * std::pow(hyper.decay, round_index);
    const std::size_t n_params = current.values.size();

    std::vector<int> order(shard.begin(), shard.end());
    std::vector<double> grad(n_params);
    std::vector<double> hidden_buf;
    std::vector<double> probs_buf;

    for (int epoch = 0; epoch < hyper.local_epochs; ++epoch) {
        Rng shuffle_rng = make_stream(seed, "batch-order", static_cast<std::uint64_t>(epoch));
        shuffle_rng.shuffle(order);
        for (std::size_t start = 0; start < order.size(); start += hyper.batch_size) {
            const std::size_t stop = std::min(order.size(), start + hyper.batch_size);
            std::fill(grad.begin(), grad.end(), 0.0);
            for (std::size_t i = start; i < stop; ++i) {
                const int idx = order[i];
                accumulate_gradient(current, data.features[static_cast<std::size_t>(idx)],
                                    data.labels[static_cast<std::size_t>(idx)], grad,
                                    hidden_buf, probs_buf);
            }
            const double scale = rate / static_cast<double>(stop - start);
            for (std::size_t j = 0; j < n_params; ++j) {
                current.values[j] -= scale * grad[j];
            }
        }
    }
    check_finite(current.values, "local_train");
    return ClientUpdate{std::move(current), shard.size()};
}

ModelParams aggregate(std::span<const ClientUpdate> updates) {
    if (updates.empty()) {
        throw std::domain_error("aggregate: no updates");
    }
    const LayerDims dims = updates.front().params.dims;
    for (const auto& u : updates) {
        if (!(u.params.dims == dims) || u.params.values.size() != dims.param_count()) {
            throw std::domain_error("aggregate: parameter dims mismatch");
        }
        if (u.sample_count < 1) {
            throw std::domain_error("aggregate: sample_count must be >= 1");
        }
    }
    if (updates.size() == 1) {
        return updates.front().params;  // exact, no weighting round-off
    }
    const std::size_t n = dims.param_count();
    std::vector<double> sum(n, 0.0);
    std::vector<double> comp(n, 0.0);  // Kahan compensation
    double total_weight = 0.0;
    for (const auto& u : updates) {
        const double w = static_cast<double>(u.sample_count);
        total_weight += w;
        for (std::size_t j = 0; j < n; ++j) {
            const double term = u.params.values[j] * w - comp[j];
            const double t = sum[j] + term;
            comp[j] = (t - sum[j]) - term;
            sum[j] = t;
        }
    }
    ModelParams out;
    out.dims = dims;
    out.values.resize(n);
    for (std::size_t j = 0; j < n; ++j) {
        out.values[j] = sum[j] / total_weight;
    }
    check_finite(out.values, "aggregate");
    return out;
}

EvalResult evaluate(const ModelParams& params, const Dataset& data) {
    std::vector<int> all(data.size());
    std::iota(all.begin(), all.end(), 0);
    return evaluate(params, data, all);
}

EvalResult evaluate(const ModelParams& params, const Dataset& data,
                    std::span<const int> subset) {
    check_dims(params.dims);
    if (subset.empty()) {
        throw std::domain_error("evaluate: dataset is empty");
    }
    std::vector<double> hidden, logits;
    std::size_t correct = 0;
    double loss_sum = 0.0;
    for (int idx : subset) {
        check_sample(data, idx);
        forward(params, data.features[static_cast<std::size_t>(idx)], hidden, logits);
        int best = 0;
        for (int k = 1; k < params.dims.classes; ++k) {
            if (logits[static_cast<std::size_t>(k)] > logits[static_cast<std::size_t>(best)]) {
                best = k;  // strict > keeps ties on the lowest index
            }
        }
        const int label = data.labels[static_cast<std::size_t>(idx)];
        if (best == label) {
            ++correct;
        }
        softmax_inplace(logits);
        loss_sum += -std::log(std::max(logits[static_cast<std::size_t>(label)], 1e-300));
    }
    return EvalResult{static_cast<double>(correct) / static_cast<double>(subset.size()),
                      loss_sum / static_cast<double>(subset.size())};
}

int predict_class(const ModelParams& params, std::span<const double> x) {
    std::vector<double> hidden, logits;
    forward(params, x, hidden, logits);
    int best = 0;
    for (int k = 1; k < params.dims.classes; ++k) {
        if (logits[static_cast<std::size_t>(k)] > logits[static_cast<std::size_t>(best)]) {
            best = k;
        }
    }
    return best;
}

double mean_loss(const ModelParams& params, const Dataset& data,
                 std::span<const int> batch) {
    if (batch.empty()) {
        throw std::domain_error("mean_loss: empty batch");
    }
    std::vector<double> hidden, logits;
    double sum = 0.0;
    for (int idx : batch) {
        check_sample(data, idx);
        forward(params, data.features[static_cast<std::size_t>(idx)], hidden, logits);
        softmax_inplace(logits);
        const int label = data.labels[static_cast<std::size_t>(idx)];
        sum += -std::log(std::max(logits[static_cast<std::size_t>(label)], 1e-300));
    }
    return sum / static_cast<double>(batch.size());
}

std::vector<double> loss_gradient(const ModelParams& params, const Dataset& data,
                                  std::span<const int> batch) {
    if (batch.empty()) {
        throw std::domain_error("loss_gradient: empty batch");
    }
    std::vector<double> grad(params.dims.param_count(), 0.0);
    std::vector<double> hidden, probs;
    for (int idx : batch) {
        check_sample(data, idx);
        accumulate_gradient(params, data.features[static_cast<std::size_t>(idx)],
                            data.labels[static_cast<std::size_t>(idx)], grad, hidden, probs);
    }
    for (double& g : grad) {
        g /= static_cast<double>(batch.size());
    }
    return grad;
}

}  // namespace fedtier
