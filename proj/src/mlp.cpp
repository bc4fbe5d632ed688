// One-hidden-layer perceptron with sigmoid units, trained by per-instance
// backpropagation with momentum on squared error.

#include <algorithm>
#include <cmath>
#include <numeric>

#include "agro/rng.hpp"
#include "classify_internal.hpp"

namespace agro::classify {

using dataset::AttrKind;
using dataset::AttributeSpec;
using dataset::Dataset;

namespace {

double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

std::vector<double> encode(const MlpModel& m, const std::vector<AttributeSpec>& attrs, const std::vector<double>& x) {
    std::vector<double> in;
    in.reserve(m.inputs);
    for (std::size_t j = 0; j < attrs.size(); ++j) {
        if (attrs[j].kind == AttrKind::nominal) {
            const std::size_t V = attrs[j].nominal_values.size();
            for (std::size_t v = 0; v < V; ++v) in.push_back(x[j] == static_cast<double>(v) ? 1.0 : 0.0);
        } else {
            const double span = m.hi[j] - m.lo[j];
            in.push_back(span > 0.0 ? (x[j] - m.lo[j]) / span : 0.0);
        }
    }
    return in;
}

struct Activations {
    std::vector<double> hidden, out;
};

Activations forward(const MlpModel& m, const std::vector<double>& in) {
    Activations a;
    a.hidden.resize(m.hidden);
    a.out.resize(m.outputs);
    const std::size_t I = m.inputs + 1;
    for (std::size_t h = 0; h < m.hidden; ++h) {
        const double* w = &m.w1[h * I];
        double z = w[m.inputs];
        for (std::size_t i = 0; i < m.inputs; ++i) z += w[i] * in[i];
        a.hidden[h] = sigmoid(z);
    }
    const std::size_t H = m.hidden + 1;
    for (std::size_t k = 0; k < m.outputs; ++k) {
        const double* w = &m.w2[k * H];
        double z = w[m.hidden];
        for (std::size_t h = 0; h < m.hidden; ++h) z += w[h] * a.hidden[h];
        a.out[k] = sigmoid(z);
    }
    return a;
}

// Accumulates dLoss/dw for one instance into g1/g2 and returns its loss.
double backward(const MlpModel& m, const std::vector<double>& in, int label, std::vector<double>& g1,
                std::vector<double>& g2) {
    const auto a = forward(m, in);
    const std::size_t I = m.inputs + 1, H = m.hidden + 1;
    std::vector<double> dout(m.outputs), dhid(m.hidden, 0.0);
    double loss = 0.0;
    for (std::size_t k = 0; k < m.outputs; ++k) {
        const double t = static_cast<int>(k) == label ? 1.0 : 0.0;
        const double e = a.out[k] - t;
        loss += 0.5 * e * e;
        dout[k] = e * a.out[k] * (1.0 - a.out[k]);
        for (std::size_t h = 0; h < m.hidden; ++h) {
            g2[k * H + h] += dout[k] * a.hidden[h];
            dhid[h] += dout[k] * m.w2[k * H + h];
        }
        g2[k * H + m.hidden] += dout[k];
    }
    for (std::size_t h = 0; h < m.hidden; ++h) {
        const double d = dhid[h] * a.hidden[h] * (1.0 - a.hidden[h]);
        for (std::size_t i = 0; i < m.inputs; ++i) g1[h * I + i] += d * in[i];
        g1[h * I + m.inputs] += d;
    }
    return loss;
}

}  // namespace

namespace detail {

std::vector<double> mlp_dist(const MlpModel& m, const std::vector<AttributeSpec>& attrs, const std::vector<double>& x) {
    auto out = forward(m, encode(m, attrs, x)).out;
    const double sum = std::accumulate(out.begin(), out.end(), 0.0);
    for (auto& v : out) v = sum > 0.0 ? v / sum : 1.0 / static_cast<double>(out.size());
    return out;
}

}  // namespace detail

TrainedModel train_mlp(const Dataset& ds, const LearnerConfig& cfg) {
    detail::require_trainable(ds, cfg);
    auto model = detail::make_model(Algorithm::MLP, ds, cfg);
    const std::size_t A = ds.num_attributes(), C = ds.class_names.size();
    MlpModel m;
    m.lo.assign(A, 0.0);
    m.hi.assign(A, 0.0);
    for (std::size_t j = 0; j < A; ++j) {
        if (ds.attributes[j].kind == AttrKind::nominal) {
            m.inputs += ds.attributes[j].nominal_values.size();
            continue;
        }
        ++m.inputs;
        auto [lo, hi] = std::minmax_element(ds.instances.begin(), ds.instances.end(), [j](const auto& a, const auto& b) {
            return a.values[j] < b.values[j];
        });
        m.lo[j] = lo->values[j];
        m.hi[j] = hi->values[j];
    }
    m.hidden = cfg.mlp.hidden > 0 ? static_cast<std::size_t>(cfg.mlp.hidden) : std::max<std::size_t>(1, (A + C) / 2);
    m.outputs = C;

    Rng rng(cfg.seed);
    const double r = cfg.mlp.init_range;
    m.w1.resize(m.hidden * (m.inputs + 1));
    m.w2.resize(m.outputs * (m.hidden + 1));
    for (auto& w : m.w1) w = rng.uniform(-r, r);
    for (auto& w : m.w2) w = rng.uniform(-r, r);

    std::vector<std::vector<double>> inputs;
    inputs.reserve(ds.size());
    for (const auto& inst : ds.instances) inputs.push_back(encode(m, ds.attributes, inst.values));
    std::vector<std::size_t> order(ds.size());
    std::iota(order.begin(), order.end(), 0);
    rng.shuffle(order.begin(), order.end());

    std::vector<double> v1(m.w1.size(), 0.0), v2(m.w2.size(), 0.0);
    std::vector<double> hid(m.hidden), out(m.outputs), dout(m.outputs), dhid(m.hidden);
    const double lr = cfg.mlp.learning_rate, mom = cfg.mlp.momentum;
    const std::size_t I = m.inputs + 1, H = m.hidden + 1;
    for (int epoch = 1; epoch <= cfg.mlp.epochs; ++epoch) {
        double loss = 0.0;
        for (auto i : order) {
            // Same arithmetic as backward() followed by the momentum step, without
            // materializing the gradient.
            const double* in = inputs[i].data();
            const int label = ds.instances[i].label;
            for (std::size_t h = 0; h < m.hidden; ++h) {
                const double* w = &m.w1[h * I];
                double z = w[m.inputs];
                for (std::size_t j = 0; j < m.inputs; ++j) z += w[j] * in[j];
                hid[h] = sigmoid(z);
            }
            std::fill(dhid.begin(), dhid.end(), 0.0);
            for (std::size_t k = 0; k < m.outputs; ++k) {
                const double* w = &m.w2[k * H];
                double z = w[m.hidden];
                for (std::size_t h = 0; h < m.hidden; ++h) z += w[h] * hid[h];
                out[k] = sigmoid(z);
                const double e = out[k] - (static_cast<int>(k) == label ? 1.0 : 0.0);
                loss += 0.5 * e * e;
                dout[k] = e * out[k] * (1.0 - out[k]);
                for (std::size_t h = 0; h < m.hidden; ++h) dhid[h] += dout[k] * w[h];
            }
            for (std::size_t k = 0; k < m.outputs; ++k) {
                double* w = &m.w2[k * H];
                double* v = &v2[k * H];
                for (std::size_t h = 0; h < m.hidden; ++h) w[h] += v[h] = -lr * dout[k] * hid[h] + mom * v[h];
                w[m.hidden] += v[m.hidden] = -lr * dout[k] + mom * v[m.hidden];
            }
            for (std::size_t h = 0; h < m.hidden; ++h) {
                const double d = dhid[h] * hid[h] * (1.0 - hid[h]);
                double* w = &m.w1[h * I];
                double* v = &v1[h * I];
                for (std::size_t j = 0; j < m.inputs; ++j) w[j] += v[j] = -lr * d * in[j] + mom * v[j];
                w[m.inputs] += v[m.inputs] = -lr * d + mom * v[m.inputs];
            }
        }
        loss /= static_cast<double>(ds.size());
        if (!std::isfinite(loss)) throw TrainingError("MLP loss became non-finite at epoch " + std::to_string(epoch));
        m.loss_history.push_back(loss);
    }
    model.body = std::move(m);
    return model;
}

LossGradient mlp_loss_gradient(const TrainedModel& model, const Dataset& ds) {
    const auto* m = std::get_if<MlpModel>(&model.body);
    if (m == nullptr) throw UsageError("model is not an MLP");
    check_compatible(model, ds);
    std::vector<double> g1(m->w1.size(), 0.0), g2(m->w2.size(), 0.0);
    LossGradient out;
    for (const auto& inst : ds.instances) out.loss += backward(*m, encode(*m, model.attributes, inst.values), inst.label, g1, g2);
    out.gradient = std::move(g1);
    out.gradient.insert(out.gradient.end(), g2.begin(), g2.end());
    return out;
}

std::vector<double> mlp_parameters(const TrainedModel& model) {
    const auto* m = std::get_if<MlpModel>(&model.body);
    if (m == nullptr) throw UsageError("model is not an MLP");
    auto p = m->w1;
    p.insert(p.end(), m->w2.begin(), m->w2.end());
    return p;
}

void set_mlp_parameters(TrainedModel& model, const std::vector<double>& params) {
    auto* m = std::get_if<MlpModel>(&model.body);
    if (m == nullptr) throw UsageError("model is not an MLP");
    if (params.size() != m->w1.size() + m->w2.size()) throw UsageError("parameter vector has the wrong length");
    std::copy(params.begin(), params.begin() + static_cast<std::ptrdiff_t>(m->w1.size()), m->w1.begin());
    std::copy(params.begin() + static_cast<std::ptrdiff_t>(m->w1.size()), params.end(), m->w2.begin());
}

}  // namespace agro::classify
