#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "adaptire/thermal.hpp"

namespace adaptire {

inline constexpr int kRnnInputs = 5;

/// Two tanh recurrent layers and a linear output. Input 5 is the previous surface temperature;
/// during prediction it is replaced by the model's own previous output after the first step.
struct RecurrentNetModel {
    int neuronsPerLayer = 14;

    Eigen::MatrixXd inputWeights1;      // neurons x 5
    Eigen::MatrixXd recurrentWeights1;  // neurons x neurons
    Eigen::VectorXd bias1;
    Eigen::MatrixXd inputWeights2;      // neurons x neurons
    Eigen::MatrixXd recurrentWeights2;  // neurons x neurons
    Eigen::VectorXd bias2;
    Eigen::RowVectorXd outputWeights;   // 1 x neurons
    double outputBias = 0.0;

    /// Min-max constants mapping raw inputs to [-1, 1]. The fifth input and the output share
    /// the temperature range in slot 4.
    std::array<double, kRnnInputs> inputMin{};
    std::array<double, kRnnInputs> inputMax{};

    static const std::array<std::string, kRnnInputs>& input_names();

    /// Zero weights, unit ranges, given width.
    [[nodiscard]] static RecurrentNetModel zeros(int neurons = 14);

    [[nodiscard]] std::size_t parameter_count() const;
    [[nodiscard]] std::vector<double> parameters() const;
    void set_parameters(const std::vector<double>& values);

    void validate() const;

    [[nodiscard]] double normalize(int input, double raw) const;
    [[nodiscard]] double denormalize_output(double normalized) const;
};

using RnnInput = std::array<double, kRnnInputs>;

/// Caller-owned recurrent state for step-by-step prediction.
struct RnnSession {
    Eigen::VectorXd hidden1;
    Eigen::VectorXd hidden2;
    double previousOutput = 0.0;  // normalized
    bool started = false;
};

[[nodiscard]] RnnSession start_session(const RecurrentNetModel& model);

/// Advances one step and returns the predicted surface temperature [degC]. On the first step of
/// a session the fifth input seeds the feedback; afterwards it is ignored.
double rnn_step(const RecurrentNetModel& model, RnnSession& session, const RnnInput& input);

[[nodiscard]] std::vector<double> rnn_predict(const RecurrentNetModel& model, const std::vector<RnnInput>& inputs);

struct RnnSequence {
    std::vector<RnnInput> inputs;
    std::vector<double> targets;  // [degC]
};

/// Inputs are (liner, ambient, energy, velocity, surface at k-1); target is surface at k.
[[nodiscard]] RnnSequence sequence_from_trace(const ThermalTrace& trace);

struct RnnTrainingOptions {
    double learningRate = 0.01;
    int epochs = 400;
    std::uint64_t seed = 1;
    int neurons = 14;
    double initScale = 0.3;
};

struct RnnTrainingResult {
    RecurrentNetModel model;
    std::vector<double> lossHistory;  // normalized MSE at the start of each epoch, then final
};

/// Mean squared error in normalized output units over every step of every sequence.
[[nodiscard]] double rnn_loss(const RecurrentNetModel& model, const std::vector<RnnSequence>& data);

/// Exact gradient of rnn_loss by backpropagation through time, ordered like parameters().
[[nodiscard]] std::vector<double> rnn_loss_gradient(const RecurrentNetModel& model,
                                                    const std::vector<RnnSequence>& data, double* loss = nullptr);

/// Sets normalization from the data, then full-batch Adam on rnn_loss.
[[nodiscard]] RnnTrainingResult rnn_train(const std::vector<RnnSequence>& data, const RnnTrainingOptions& options);

/// Fits inputMin/inputMax to the data (degenerate ranges widen to 1).
void fit_normalization(RecurrentNetModel& model, const std::vector<RnnSequence>& data);

void write_model(std::ostream& out, const RecurrentNetModel& model);
[[nodiscard]] RecurrentNetModel read_model(std::istream& in, const std::string& sourceName = "<stream>");
void save_model(const std::string& path, const RecurrentNetModel& model);
[[nodiscard]] RecurrentNetModel load_model(const std::string& path);

}  // namespace adaptire
