#include "adaptire/rnn.hpp"

#include <cmath>
#include <fstream>
#include <random>
#include <sstream>

#include "adaptire/error.hpp"
#include "adaptire/keyvalue.hpp"

namespace adaptire {
namespace {

template <class Visitor>
void for_each_block(RecurrentNetModel& m, Visitor&& visit) {
    // Matrices are visited row-major so the flat order matches the text format.
    auto mat = [&](Eigen::MatrixXd& a) {
        for (Eigen::Index r = 0; r < a.rows(); ++r) {
            for (Eigen::Index c = 0; c < a.cols(); ++c) {
                visit(a(r, c));
            }
        }
    };
    mat(m.inputWeights1);
    mat(m.recurrentWeights1);
    for (Eigen::Index i = 0; i < m.bias1.size(); ++i) visit(m.bias1(i));
    mat(m.inputWeights2);
    mat(m.recurrentWeights2);
    for (Eigen::Index i = 0; i < m.bias2.size(); ++i) visit(m.bias2(i));
    for (Eigen::Index i = 0; i < m.outputWeights.size(); ++i) visit(m.outputWeights(i));
    visit(m.outputBias);
}

struct Trajectory {
    std::vector<Eigen::VectorXd> x, h1, h2;
    std::vector<double> y;
};

Eigen::VectorXd normalized_input(const RecurrentNetModel& m, const RnnInput& in, double feedback) {
    Eigen::VectorXd x(kRnnInputs);
    for (int i = 0; i < kRnnInputs - 1; ++i) {
        x(i) = m.normalize(i, in[static_cast<std::size_t>(i)]);
    }
    x(kRnnInputs - 1) = feedback;
    return x;
}

Trajectory forward(const RecurrentNetModel& m, const RnnSequence& seq) {
    const auto n = seq.inputs.size();
    Trajectory tr;
    tr.x.reserve(n);
    tr.h1.reserve(n);
    tr.h2.reserve(n);
    tr.y.reserve(n);
    Eigen::VectorXd h1 = Eigen::VectorXd::Zero(m.neuronsPerLayer);
    Eigen::VectorXd h2 = h1;
    double feedback = n > 0 ? m.normalize(kRnnInputs - 1, seq.inputs.front()[kRnnInputs - 1]) : 0.0;
    for (std::size_t t = 0; t < n; ++t) {
        Eigen::VectorXd x = normalized_input(m, seq.inputs[t], feedback);
        h1 = (m.inputWeights1 * x + m.recurrentWeights1 * h1 + m.bias1).array().tanh().matrix();
        h2 = (m.inputWeights2 * h1 + m.recurrentWeights2 * h2 + m.bias2).array().tanh().matrix();
        const double y = m.outputWeights.dot(h2) + m.outputBias;
        tr.x.push_back(std::move(x));
        tr.h1.push_back(h1);
        tr.h2.push_back(h2);
        tr.y.push_back(y);
        feedback = y;
    }
    return tr;
}

std::size_t total_steps(const std::vector<RnnSequence>& data) {
    std::size_t n = 0;
    for (const auto& s : data) {
        if (s.inputs.size() != s.targets.size()) {
            throw InvalidInput("rnn sequence has " + std::to_string(s.inputs.size()) + " inputs but " +
                               std::to_string(s.targets.size()) + " targets");
        }
        n += s.inputs.size();
    }
    if (n == 0) {
        throw InvalidInput("rnn dataset is empty");
    }
    return n;
}

std::vector<double> parse_list(const std::string& text, std::size_t expected, const std::string& key) {
    std::vector<double> values;
    std::istringstream in(text);
    std::string token;
    while (in >> token) {
        values.push_back(parse_double(token));
    }
    if (values.size() != expected) {
        throw InvalidInput("model key '" + key + "': expected " + std::to_string(expected) + " values, got " +
                           std::to_string(values.size()));
    }
    return values;
}

std::string join(const double* values, std::size_t count) {
    std::string out;
    for (std::size_t i = 0; i < count; ++i) {
        if (i) out += ' ';
        out += format_double(values[i]);
    }
    return out;
}

}  // namespace

const std::array<std::string, kRnnInputs>& RecurrentNetModel::input_names() {
    static const std::array<std::string, kRnnInputs> names{"inner_liner_c", "ambient_c", "friction_energy_w",
                                                           "velocity_mps", "previous_surface_c"};
    return names;
}

RecurrentNetModel RecurrentNetModel::zeros(int neurons) {
    if (neurons <= 0) {
        throw InvalidInput("rnn neuron count must be positive");
    }
    RecurrentNetModel m;
    m.neuronsPerLayer = neurons;
    m.inputWeights1 = Eigen::MatrixXd::Zero(neurons, kRnnInputs);
    m.recurrentWeights1 = Eigen::MatrixXd::Zero(neurons, neurons);
    m.bias1 = Eigen::VectorXd::Zero(neurons);
    m.inputWeights2 = Eigen::MatrixXd::Zero(neurons, neurons);
    m.recurrentWeights2 = Eigen::MatrixXd::Zero(neurons, neurons);
    m.bias2 = Eigen::VectorXd::Zero(neurons);
    m.outputWeights = Eigen::RowVectorXd::Zero(neurons);
    m.inputMin.fill(0.0);
    m.inputMax.fill(1.0);
    return m;
}

std::size_t RecurrentNetModel::parameter_count() const {
    const auto n = static_cast<std::size_t>(neuronsPerLayer);
    return n * kRnnInputs + 3 * n * n + 3 * n + 1;
}

std::vector<double> RecurrentNetModel::parameters() const {
    std::vector<double> out;
    out.reserve(parameter_count());
    for_each_block(const_cast<RecurrentNetModel&>(*this), [&](double& v) { out.push_back(v); });
    return out;
}

void RecurrentNetModel::set_parameters(const std::vector<double>& values) {
    if (values.size() != parameter_count()) {
        throw InvalidInput("rnn parameter vector has " + std::to_string(values.size()) + " entries, expected " +
                           std::to_string(parameter_count()));
    }
    std::size_t i = 0;
    for_each_block(*this, [&](double& v) { v = values[i++]; });
}

void RecurrentNetModel::validate() const {
    const Eigen::Index n = neuronsPerLayer;
    const bool shapes = n > 0 && inputWeights1.rows() == n && inputWeights1.cols() == kRnnInputs &&
                        recurrentWeights1.rows() == n && recurrentWeights1.cols() == n && bias1.size() == n &&
                        inputWeights2.rows() == n && inputWeights2.cols() == n && recurrentWeights2.rows() == n &&
                        recurrentWeights2.cols() == n && bias2.size() == n && outputWeights.size() == n;
    if (!shapes) {
        throw InvalidInput("rnn weight dimensions inconsistent with " + std::to_string(neuronsPerLayer) +
                           " neurons and 5 inputs");
    }
    for (double v : parameters()) {
        if (!std::isfinite(v)) {
            throw InvalidInput("rnn weights must be finite");
        }
    }
    for (int i = 0; i < kRnnInputs; ++i) {
        const auto k = static_cast<std::size_t>(i);
        if (!std::isfinite(inputMin[k]) || !(inputMax[k] > inputMin[k])) {
            throw InvalidInput("rnn normalization range for '" + input_names()[k] + "' is invalid");
        }
    }
}

double RecurrentNetModel::normalize(int input, double raw) const {
    const auto k = static_cast<std::size_t>(input);
    return 2.0 * (raw - inputMin[k]) / (inputMax[k] - inputMin[k]) - 1.0;
}

double RecurrentNetModel::denormalize_output(double normalized) const {
    const auto k = static_cast<std::size_t>(kRnnInputs - 1);
    return inputMin[k] + 0.5 * (normalized + 1.0) * (inputMax[k] - inputMin[k]);
}

RnnSession start_session(const RecurrentNetModel& model) {
    RnnSession s;
    s.hidden1 = Eigen::VectorXd::Zero(model.neuronsPerLayer);
    s.hidden2 = Eigen::VectorXd::Zero(model.neuronsPerLayer);
    return s;
}

double rnn_step(const RecurrentNetModel& m, RnnSession& s, const RnnInput& input) {
    if (s.hidden1.size() != m.neuronsPerLayer || s.hidden2.size() != m.neuronsPerLayer) {
        throw InvalidInput("rnn session does not match the model width");
    }
    if (!s.started) {
        s.previousOutput = m.normalize(kRnnInputs - 1, input[kRnnInputs - 1]);
        s.started = true;
    }
    const Eigen::VectorXd x = normalized_input(m, input, s.previousOutput);
    s.hidden1 = (m.inputWeights1 * x + m.recurrentWeights1 * s.hidden1 + m.bias1).array().tanh().matrix();
    s.hidden2 = (m.inputWeights2 * s.hidden1 + m.recurrentWeights2 * s.hidden2 + m.bias2).array().tanh().matrix();
    s.previousOutput = m.outputWeights.dot(s.hidden2) + m.outputBias;
    return m.denormalize_output(s.previousOutput);
}

std::vector<double> rnn_predict(const RecurrentNetModel& model, const std::vector<RnnInput>& inputs) {
    model.validate();
    if (inputs.empty()) {
        throw InvalidInput("rnn input series is empty");
    }
    RnnSession s = start_session(model);
    std::vector<double> out;
    out.reserve(inputs.size());
    for (const auto& in : inputs) {
        out.push_back(rnn_step(model, s, in));
    }
    return out;
}

RnnSequence sequence_from_trace(const ThermalTrace& trace) {
    if (trace.size() < 2) {
        throw InvalidInput("thermal trace needs at least 2 samples to form a sequence");
    }
    RnnSequence seq;
    for (std::size_t k = 1; k < trace.size(); ++k) {
        const auto& r = trace[k];
        seq.inputs.push_back(
            {r.innerLiner, r.ambient, r.frictionEnergy, r.velocity, trace[k - 1].surfaceTemperature});
        seq.targets.push_back(r.surfaceTemperature);
    }
    return seq;
}

double rnn_loss(const RecurrentNetModel& model, const std::vector<RnnSequence>& data) {
    const auto n = total_steps(data);
    double sum = 0.0;
    for (const auto& seq : data) {
        const Trajectory tr = forward(model, seq);
        for (std::size_t t = 0; t < seq.targets.size(); ++t) {
            const double e = tr.y[t] - model.normalize(kRnnInputs - 1, seq.targets[t]);
            sum += e * e;
        }
    }
    return sum / static_cast<double>(n);
}

std::vector<double> rnn_loss_gradient(const RecurrentNetModel& m, const std::vector<RnnSequence>& data,
                                      double* loss) {
    const auto total = static_cast<double>(total_steps(data));
    RecurrentNetModel g = RecurrentNetModel::zeros(m.neuronsPerLayer);
    double sum = 0.0;
    const Eigen::Index n = m.neuronsPerLayer;

    for (const auto& seq : data) {
        const Trajectory tr = forward(m, seq);
        Eigen::VectorXd dh1Next = Eigen::VectorXd::Zero(n);
        Eigen::VectorXd dh2Next = Eigen::VectorXd::Zero(n);
        double dyNext = 0.0;
        const Eigen::VectorXd zero = Eigen::VectorXd::Zero(n);
        for (std::size_t t = seq.targets.size(); t-- > 0;) {
            const double e = tr.y[t] - m.normalize(kRnnInputs - 1, seq.targets[t]);
            sum += e * e;
            const double dy = 2.0 * e / total + dyNext;
            g.outputWeights += dy * tr.h2[t].transpose();
            g.outputBias += dy;

            const Eigen::VectorXd& h2prev = t > 0 ? tr.h2[t - 1] : zero;
            const Eigen::VectorXd& h1prev = t > 0 ? tr.h1[t - 1] : zero;

            const Eigen::VectorXd dh2 = m.outputWeights.transpose() * dy + dh2Next;
            const Eigen::VectorXd da2 = dh2.array() * (1.0 - tr.h2[t].array().square());
            g.inputWeights2 += da2 * tr.h1[t].transpose();
            g.recurrentWeights2 += da2 * h2prev.transpose();
            g.bias2 += da2;

            const Eigen::VectorXd dh1 = m.inputWeights2.transpose() * da2 + dh1Next;
            const Eigen::VectorXd da1 = dh1.array() * (1.0 - tr.h1[t].array().square());
            g.inputWeights1 += da1 * tr.x[t].transpose();
            g.recurrentWeights1 += da1 * h1prev.transpose();
            g.bias1 += da1;

            dh2Next = m.recurrentWeights2.transpose() * da2;
            dh1Next = m.recurrentWeights1.transpose() * da1;
            // The first step's feedback is the seed from the data, not a model output.
            dyNext = (m.inputWeights1.col(kRnnInputs - 1).transpose() * da1)(0);
        }
    }
    if (loss) {
        *loss = sum / total;
    }
    return g.parameters();
}

void fit_normalization(RecurrentNetModel& model, const std::vector<RnnSequence>& data) {
    std::array<double, kRnnInputs> lo, hi;
    lo.fill(std::numeric_limits<double>::infinity());
    hi.fill(-std::numeric_limits<double>::infinity());
    for (const auto& seq : data) {
        for (const auto& in : seq.inputs) {
            for (std::size_t i = 0; i < kRnnInputs; ++i) {
                lo[i] = std::min(lo[i], in[i]);
                hi[i] = std::max(hi[i], in[i]);
            }
        }
        for (double t : seq.targets) {
            lo[kRnnInputs - 1] = std::min(lo[kRnnInputs - 1], t);
            hi[kRnnInputs - 1] = std::max(hi[kRnnInputs - 1], t);
        }
    }
    for (std::size_t i = 0; i < kRnnInputs; ++i) {
        if (!std::isfinite(lo[i]) || !std::isfinite(hi[i])) {
            throw InvalidInput("rnn training data contains non-finite values");
        }
        if (hi[i] - lo[i] < 1e-9) {
            lo[i] -= 0.5;
            hi[i] += 0.5;
        }
        model.inputMin[i] = lo[i];
        model.inputMax[i] = hi[i];
    }
}

RnnTrainingResult rnn_train(const std::vector<RnnSequence>& data, const RnnTrainingOptions& opt) {
    total_steps(data);
    if (opt.epochs <= 0 || !(opt.learningRate > 0.0)) {
        throw InvalidInput("rnn training needs positive epochs and learning rate");
    }
    RnnTrainingResult result;
    RecurrentNetModel& m = result.model;
    m = RecurrentNetModel::zeros(opt.neurons);
    fit_normalization(m, data);

    std::mt19937_64 rng(opt.seed);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    std::vector<double> w = m.parameters();
    const double scale = opt.initScale / std::sqrt(static_cast<double>(opt.neurons));
    for (double& v : w) {
        v = scale * u(rng);
    }
    m.set_parameters(w);

    constexpr double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
    std::vector<double> first(w.size(), 0.0), second(w.size(), 0.0);
    double b1t = 1.0, b2t = 1.0;
    for (int epoch = 1; epoch <= opt.epochs; ++epoch) {
        double loss = 0.0;
        const std::vector<double> grad = rnn_loss_gradient(m, data, &loss);
        if (!std::isfinite(loss)) {
            throw FitError("rnn training diverged at epoch " + std::to_string(epoch));
        }
        result.lossHistory.push_back(loss);
        b1t *= beta1;
        b2t *= beta2;
        for (std::size_t i = 0; i < w.size(); ++i) {
            first[i] = beta1 * first[i] + (1.0 - beta1) * grad[i];
            second[i] = beta2 * second[i] + (1.0 - beta2) * grad[i] * grad[i];
            w[i] -= opt.learningRate * (first[i] / (1.0 - b1t)) / (std::sqrt(second[i] / (1.0 - b2t)) + eps);
        }
        m.set_parameters(w);
    }
    const double finalLoss = rnn_loss(m, data);
    if (!std::isfinite(finalLoss)) {
        throw FitError("rnn training diverged at epoch " + std::to_string(opt.epochs));
    }
    result.lossHistory.push_back(finalLoss);
    return result;
}

void write_model(std::ostream& out, const RecurrentNetModel& m) {
    m.validate();
    const auto n = static_cast<std::size_t>(m.neuronsPerLayer);
    KeyValueDocument doc;
    doc.set("inputs", static_cast<double>(kRnnInputs));
    doc.set("layers", 2.0);
    doc.set("neurons", static_cast<double>(n));
    doc.set("activation", std::string("tanh"));
    doc.set("input_min", join(m.inputMin.data(), kRnnInputs));
    doc.set("input_max", join(m.inputMax.data(), kRnnInputs));
    const std::vector<double> w = m.parameters();
    const double* p = w.data();
    auto block = [&](const std::string& key, std::size_t count) {
        doc.set(key, join(p, count));
        p += count;
    };
    block("input_weights_1", n * kRnnInputs);
    block("recurrent_weights_1", n * n);
    block("bias_1", n);
    block("input_weights_2", n * n);
    block("recurrent_weights_2", n * n);
    block("bias_2", n);
    block("output_weights", n);
    block("output_bias", 1);
    doc.write(out);
}

RecurrentNetModel read_model(std::istream& in, const std::string& sourceName) {
    const KeyValueDocument doc = KeyValueDocument::parse(in, sourceName);
    doc.require_known({"inputs", "layers", "neurons", "activation", "input_min", "input_max", "input_weights_1",
                       "recurrent_weights_1", "bias_1", "input_weights_2", "recurrent_weights_2", "bias_2",
                       "output_weights", "output_bias"});
    if (doc.number("inputs") != kRnnInputs || doc.number("layers") != 2.0 || doc.text("activation") != "tanh") {
        throw InvalidInput(sourceName + ": only 5-input, 2-layer tanh models are supported");
    }
    const double neurons = doc.number("neurons");
    if (!(neurons >= 1.0 && neurons <= 1024.0) || neurons != std::floor(neurons)) {
        throw InvalidInput(sourceName + ": neurons must be an integer in [1, 1024]");
    }
    RecurrentNetModel m = RecurrentNetModel::zeros(static_cast<int>(neurons));
    const auto n = static_cast<std::size_t>(neurons);
    const auto lo = parse_list(doc.text("input_min"), kRnnInputs, "input_min");
    const auto hi = parse_list(doc.text("input_max"), kRnnInputs, "input_max");
    std::copy(lo.begin(), lo.end(), m.inputMin.begin());
    std::copy(hi.begin(), hi.end(), m.inputMax.begin());
    std::vector<double> w;
    auto block = [&](const std::string& key, std::size_t count) {
        const auto v = parse_list(doc.text(key), count, key);
        w.insert(w.end(), v.begin(), v.end());
    };
    block("input_weights_1", n * kRnnInputs);
    block("recurrent_weights_1", n * n);
    block("bias_1", n);
    block("input_weights_2", n * n);
    block("recurrent_weights_2", n * n);
    block("bias_2", n);
    block("output_weights", n);
    block("output_bias", 1);
    m.set_parameters(w);
    m.validate();
    return m;
}

void save_model(const std::string& path, const RecurrentNetModel& model) {
    std::ofstream out(path);
    if (!out) {
        throw IoError("cannot open '" + path + "' for writing");
    }
    write_model(out, model);
    if (!out) {
        throw IoError("write failed for '" + path + "'");
    }
}

RecurrentNetModel load_model(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw IoError("cannot open '" + path + "' for reading");
    }
    return read_model(in, path);
}

}  // namespace adaptire
