#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

namespace plam::mlp {

using Eigen::MatrixXd;
using Eigen::VectorXd;

enum class Activation { tanh, relu, identity };

const char* activation_name(Activation a);
Activation activation_from_name(const std::string& name);

/// Elementwise activation used by the network (same expression scalar and
/// batched, so independent reimplementations agree to rounding).
double activate(Activation a, double x);

struct MlpConfig {
    int input_dim = 0;
    int output_dim = 0;
    std::vector<int> hidden_layers;
    Activation hidden_activation = Activation::tanh;
    Activation output_activation = Activation::identity;
    std::uint64_t init_seed = 0;
    /// Optional per-component log10 pretreatment for heavy-tailed positive
    /// magnitude columns (empty = none, else sized to the respective dim).
    std::vector<bool> input_log;
    std::vector<bool> output_log;
    /// Angle input columns fed to the network as (sin, cos) pairs so the
    /// 2*pi wrap never appears as a discontinuity (empty = none).
    std::vector<bool> input_circular;
    /// Treat the output triple (magnitude, azimuth, elevation) as a vector:
    /// the network trains on (magnitude, unit vector) and predictions map
    /// back through atan2, which removes the azimuth wrap from the loss.
    /// Requires output_dim == 3; log pretreatment may only mark component 0.
    bool output_unit_vector = false;

    void validate() const;
};

/// Componentwise affine map z = (x - shift) / scale used for input
/// standardization and output range mapping.
struct Standardizer {
    VectorXd shift;
    VectorXd scale;

    VectorXd apply(const VectorXd& x) const { return (x - shift).cwiseQuotient(scale); }
    VectorXd invert(const VectorXd& z) const { return z.cwiseProduct(scale) + shift; }
    MatrixXd apply_batch(const MatrixXd& x) const {
        return (x.colwise() - shift).array().colwise() / scale.array();
    }
    MatrixXd invert_batch(const MatrixXd& z) const {
        return (z.array().colwise() * scale.array()).colwise() + shift.array();
    }
};

struct MlpModel {
    std::vector<MatrixXd> weights; // weights[l]: dims[l+1] x dims[l]
    std::vector<VectorXd> biases;
    Activation hidden_activation = Activation::tanh;
    Activation output_activation = Activation::identity;
    Standardizer input_std;
    Standardizer output_std;
    /// Components pretreated with log10 before standardization (and mapped
    /// back with 10^z after de-standardization). Empty masks mean none.
    std::vector<bool> input_log;
    std::vector<bool> output_log;
    /// Angle inputs expanded to (sin, cos) pairs before standardization.
    std::vector<bool> input_circular;
    /// Output triple handled as (magnitude, unit vector) inside the network.
    bool output_unit_vector = false;

    /// Dimensions of the interface the caller sees; the first/last weight
    /// matrices can be wider when pretreatments expand components.
    int input_dim() const {
        int expanded = 0;
        for (bool c : input_circular) expanded += c ? 1 : 0;
        return net_input_dim() - expanded;
    }
    int output_dim() const { return net_output_dim() - (output_unit_vector ? 1 : 0); }
    int net_input_dim() const { return static_cast<int>(weights.front().cols()); }
    int net_output_dim() const { return static_cast<int>(weights.back().rows()); }
    int layer_count() const { return static_cast<int>(weights.size()); }

    /// Standardize input, run the affine/activation chain, de-standardize.
    VectorXd forward(const VectorXd& x) const;
    MatrixXd forward_batch(const MatrixXd& x) const; // columns are samples

    /// Chain output in standardized space (columns are standardized samples).
    MatrixXd forward_standardized(const MatrixXd& x_std) const;
};

/// Fresh model with Glorot-uniform (tanh/identity) or He-uniform (relu)
/// weights and identity standardizers.
MlpModel init_model(const MlpConfig& cfg);

/// (1/n) * sum over samples of the squared error summed over components.
/// Columns are samples.
double loss_mse(const MatrixXd& pred, const MatrixXd& target);

struct Gradients {
    std::vector<MatrixXd> d_weights;
    std::vector<VectorXd> d_biases;
};

/// Exact gradients of loss_mse over the standardized batch (columns are
/// standardized samples).
Gradients backward(const MlpModel& model, const MatrixXd& x_std, const MatrixXd& y_std);

struct AdamState {
    std::vector<MatrixXd> m_w, v_w;
    std::vector<VectorXd> m_b, v_b;
    long step = 0;

    static AdamState zeros_like(const MlpModel& model);
};

void adam_step(MlpModel& model, AdamState& state, const Gradients& grads, double lr,
               double beta1, double beta2, double eps);

struct TrainConfig {
    double learning_rate = 0.001;
    /// Multiplicative per-epoch learning-rate factor (1 = constant rate).
    double lr_decay = 1.0;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    int max_epochs = 1000;
    int batch_size = 256;
    std::uint64_t shuffle_seed = 0;
    double validation_fraction = 0.1;

    void validate() const;
};

struct TrainHistory {
    std::vector<double> train_mse; // per epoch, standardized outputs
    std::vector<double> val_mse;
    int batch_size = 0;
    std::size_t n_train = 0;
    std::size_t n_val = 0;
    int best_epoch = -1;
};

class TrainingDivergedError : public std::runtime_error {
public:
    TrainingDivergedError(const std::string& what, TrainHistory history)
        : std::runtime_error(what), history(std::move(history)) {}
    TrainHistory history;
};

/// Deterministic training run: z-scores inputs, range-maps outputs to the
/// output activation's reachable interval, Adam on mini-batches, returns the
/// best-validation model and the full history.
std::pair<MlpModel, TrainHistory> train(const MlpConfig& cfg, const TrainConfig& tcfg,
                                        const MatrixXd& inputs, const MatrixXd& outputs);

void save_model(const MlpModel& model, const std::filesystem::path& path);
MlpModel load_model(const std::filesystem::path& path);

void write_history_csv(const TrainHistory& history, const std::filesystem::path& path);

} // namespace plam::mlp
