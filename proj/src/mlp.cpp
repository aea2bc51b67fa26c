#include "plam/mlp.hpp"

#include "plam/rng.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <numeric>
#include <sstream>

namespace plam::mlp {

const char* activation_name(Activation a) {
    switch (a) {
        case Activation::tanh: return "tanh";
        case Activation::relu: return "relu";
        case Activation::identity: return "identity";
    }
    throw std::logic_error("activation_name: unknown activation");
}

Activation activation_from_name(const std::string& name) {
    if (name == "tanh") return Activation::tanh;
    if (name == "relu") return Activation::relu;
    if (name == "identity") return Activation::identity;
    throw std::invalid_argument("unknown activation: " + name);
}

double activate(Activation a, double x) {
    switch (a) {
        case Activation::tanh: return 1.0 - 2.0 / (std::exp(2.0 * x) + 1.0);
        case Activation::relu: return x > 0.0 ? x : 0.0;
        case Activation::identity: return x;
    }
    throw std::logic_error("activate: unknown activation");
}

namespace {

// Batched activation; tanh through exp keeps Eigen's vectorized packet path
// for doubles.
void activate_inplace(Activation a, MatrixXd& z) {
    switch (a) {
        case Activation::tanh:
            z = 1.0 - 2.0 / ((2.0 * z.array()).exp() + 1.0);
            break;
        case Activation::relu: z = z.cwiseMax(0.0); break;
        case Activation::identity: break;
    }
}

// Derivative expressed through the activation output (relu at exactly zero
// pre-activation takes subgradient 0).
MatrixXd activation_deriv(Activation a, const MatrixXd& out) {
    switch (a) {
        case Activation::tanh: return (1.0 - out.array().square()).matrix();
        case Activation::relu: return (out.array() > 0.0).cast<double>().matrix();
        case Activation::identity: return MatrixXd::Ones(out.rows(), out.cols());
    }
    throw std::logic_error("activation_deriv: unknown activation");
}

// log10 on the masked rows; values must be strictly positive there.
MatrixXd log_rows(MatrixXd x, const std::vector<bool>& mask, const char* what) {
    for (std::size_t r = 0; r < mask.size(); ++r) {
        if (!mask[r]) continue;
        if ((x.row(static_cast<Eigen::Index>(r)).array() <= 0.0).any())
            throw std::domain_error(std::string(what) +
                                    ": log-scaled component must be strictly positive");
        x.row(static_cast<Eigen::Index>(r)) =
            x.row(static_cast<Eigen::Index>(r)).array().log10();
    }
    return x;
}

void exp_rows_inplace(MatrixXd& x, const std::vector<bool>& mask) {
    for (std::size_t r = 0; r < mask.size(); ++r)
        if (mask[r])
            x.row(static_cast<Eigen::Index>(r)) =
                Eigen::pow(10.0, x.row(static_cast<Eigen::Index>(r)).array());
}

bool any_set(const std::vector<bool>& mask) {
    return std::any_of(mask.begin(), mask.end(), [](bool b) { return b; });
}

// Masked angle rows become consecutive (sin, cos) rows; others pass through.
MatrixXd expand_circular(const MatrixXd& x, const std::vector<bool>& mask) {
    Eigen::Index extra = 0;
    for (bool c : mask) extra += c ? 1 : 0;
    MatrixXd out(x.rows() + extra, x.cols());
    Eigen::Index w = 0;
    for (Eigen::Index r = 0; r < x.rows(); ++r) {
        if (static_cast<std::size_t>(r) < mask.size() && mask[static_cast<std::size_t>(r)]) {
            out.row(w++) = x.row(r).array().sin();
            out.row(w++) = x.row(r).array().cos();
        } else {
            out.row(w++) = x.row(r);
        }
    }
    return out;
}

// (magnitude, azimuth, elevation) rows -> (magnitude, ux, uy, uz) rows.
MatrixXd spherical_to_unit_targets(const MatrixXd& y) {
    MatrixXd out(4, y.cols());
    const auto az = y.row(1).array(), el = y.row(2).array();
    out.row(0) = y.row(0);
    out.row(1) = el.cos() * az.cos();
    out.row(2) = el.cos() * az.sin();
    out.row(3) = el.sin();
    return out;
}

// Inverse of the unit-target map; the direction rows need not be normalized.
MatrixXd unit_targets_to_spherical(const MatrixXd& y) {
    MatrixXd out(3, y.cols());
    const auto ux = y.row(1).array(), uy = y.row(2).array(), uz = y.row(3).array();
    out.row(0) = y.row(0);
    for (Eigen::Index c = 0; c < y.cols(); ++c) {
        out(1, c) = std::atan2(uy[c], ux[c]);
        out(2, c) = std::atan2(uz[c], std::hypot(ux[c], uy[c]));
    }
    return out;
}

} // namespace

void MlpConfig::validate() const {
    if (input_dim <= 0 || output_dim <= 0)
        throw std::domain_error("MlpConfig: dims must be > 0");
    if (hidden_layers.empty() || hidden_layers.size() > 8)
        throw std::domain_error("MlpConfig: hidden layer count must be in [1, 8]");
    for (int w : hidden_layers)
        if (w <= 0) throw std::domain_error("MlpConfig: hidden widths must be > 0");
    if (!input_log.empty() && input_log.size() != static_cast<std::size_t>(input_dim))
        throw std::domain_error("MlpConfig: input_log mask size mismatch");
    if (!output_log.empty() && output_log.size() != static_cast<std::size_t>(output_dim))
        throw std::domain_error("MlpConfig: output_log mask size mismatch");
    if (!input_circular.empty()) {
        if (input_circular.size() != static_cast<std::size_t>(input_dim))
            throw std::domain_error("MlpConfig: input_circular mask size mismatch");
        for (std::size_t i = 0; i < input_circular.size(); ++i)
            if (input_circular[i] && !input_log.empty() && input_log[i])
                throw std::domain_error(
                    "MlpConfig: a column cannot be both circular and log-scaled");
    }
    if (output_unit_vector) {
        if (output_dim != 3)
            throw std::domain_error(
                "MlpConfig: output_unit_vector needs a (magnitude, azimuth, elevation) "
                "output triple");
        if (!output_log.empty() && (output_log[1] || output_log[2]))
            throw std::domain_error(
                "MlpConfig: only the magnitude component of a unit-vector output may be "
                "log-scaled");
    }
}

void TrainConfig::validate() const {
    if (!(learning_rate > 0.0)) throw std::domain_error("TrainConfig: learning_rate must be > 0");
    if (!(lr_decay > 0.0 && lr_decay <= 1.0))
        throw std::domain_error("TrainConfig: lr_decay must be in (0, 1]");
    if (max_epochs < 1) throw std::domain_error("TrainConfig: max_epochs must be >= 1");
    if (batch_size < 1) throw std::domain_error("TrainConfig: batch_size must be >= 1");
    if (!(validation_fraction >= 0.0 && validation_fraction < 1.0))
        throw std::domain_error("TrainConfig: validation_fraction must be in [0, 1)");
}

MlpModel init_model(const MlpConfig& cfg) {
    cfg.validate();
    int net_in = cfg.input_dim;
    for (bool c : cfg.input_circular) net_in += c ? 1 : 0;
    const int net_out = cfg.output_dim + (cfg.output_unit_vector ? 1 : 0);
    std::vector<int> dims;
    dims.push_back(net_in);
    dims.insert(dims.end(), cfg.hidden_layers.begin(), cfg.hidden_layers.end());
    dims.push_back(net_out);

    rng::Stream stream(rng::mix(cfg.init_seed, 0x6d6c70ULL));
    MlpModel model;
    model.hidden_activation = cfg.hidden_activation;
    model.output_activation = cfg.output_activation;
    const int layers = static_cast<int>(dims.size()) - 1;
    for (int l = 0; l < layers; ++l) {
        const int fan_in = dims[l], fan_out = dims[l + 1];
        const Activation act =
            (l == layers - 1) ? cfg.output_activation : cfg.hidden_activation;
        const double limit = (act == Activation::relu)
                                 ? std::sqrt(6.0 / fan_in)
                                 : std::sqrt(6.0 / (fan_in + fan_out));
        MatrixXd w(fan_out, fan_in);
        for (Eigen::Index i = 0; i < w.size(); ++i)
            w.data()[i] = stream.uniform(-limit, limit);
        model.weights.push_back(std::move(w));
        model.biases.push_back(VectorXd::Zero(fan_out));
    }
    model.input_std.shift = VectorXd::Zero(net_in);
    model.input_std.scale = VectorXd::Ones(net_in);
    model.output_std.shift = VectorXd::Zero(net_out);
    model.output_std.scale = VectorXd::Ones(net_out);
    model.input_log = cfg.input_log;
    model.output_log = cfg.output_log;
    model.input_circular = cfg.input_circular;
    model.output_unit_vector = cfg.output_unit_vector;
    return model;
}

MatrixXd MlpModel::forward_standardized(const MatrixXd& x_std) const {
    if (x_std.rows() != net_input_dim())
        throw std::invalid_argument("forward: input dimension mismatch");
    MatrixXd a = x_std;
    const int layers = layer_count();
    for (int l = 0; l < layers; ++l) {
        a = (weights[l] * a).colwise() + biases[l];
        activate_inplace(l == layers - 1 ? output_activation : hidden_activation, a);
    }
    return a;
}

MatrixXd MlpModel::forward_batch(const MatrixXd& x) const {
    if (x.rows() != input_dim())
        throw std::invalid_argument("forward: input dimension mismatch");
    MatrixXd pre = input_log.empty() ? x : log_rows(x, input_log, "forward");
    if (any_set(input_circular)) pre = expand_circular(pre, input_circular);
    MatrixXd y = output_std.invert_batch(forward_standardized(input_std.apply_batch(pre)));
    if (output_unit_vector) y = unit_targets_to_spherical(y);
    exp_rows_inplace(y, output_log);
    return y;
}

VectorXd MlpModel::forward(const VectorXd& x) const {
    return forward_batch(x).col(0);
}

double loss_mse(const MatrixXd& pred, const MatrixXd& target) {
    if (pred.rows() != target.rows() || pred.cols() != target.cols())
        throw std::invalid_argument("loss_mse: shape mismatch");
    if (pred.cols() == 0) throw std::domain_error("loss_mse: empty batch");
    return (pred - target).squaredNorm() / static_cast<double>(pred.cols());
}

Gradients backward(const MlpModel& model, const MatrixXd& x_std, const MatrixXd& y_std) {
    const int layers = model.layer_count();
    if (x_std.rows() != model.net_input_dim() || y_std.rows() != model.net_output_dim() ||
        x_std.cols() != y_std.cols())
        throw std::invalid_argument("backward: shape mismatch");
    const double n = static_cast<double>(x_std.cols());

    std::vector<MatrixXd> acts;
    acts.reserve(layers + 1);
    acts.push_back(x_std);
    for (int l = 0; l < layers; ++l) {
        MatrixXd a = (model.weights[l] * acts.back()).colwise() + model.biases[l];
        activate_inplace(l == layers - 1 ? model.output_activation : model.hidden_activation,
                         a);
        acts.push_back(std::move(a));
    }

    Gradients g;
    g.d_weights.resize(layers);
    g.d_biases.resize(layers);
    MatrixXd delta = (2.0 / n) * (acts.back() - y_std);
    delta = delta.cwiseProduct(activation_deriv(model.output_activation, acts.back()));
    for (int l = layers - 1; l >= 0; --l) {
        g.d_weights[l].noalias() = delta * acts[l].transpose();
        g.d_biases[l] = delta.rowwise().sum();
        if (l > 0) {
            delta = (model.weights[l].transpose() * delta)
                        .cwiseProduct(activation_deriv(model.hidden_activation, acts[l]));
        }
    }
    return g;
}

AdamState AdamState::zeros_like(const MlpModel& model) {
    AdamState s;
    for (const auto& w : model.weights) {
        s.m_w.push_back(MatrixXd::Zero(w.rows(), w.cols()));
        s.v_w.push_back(MatrixXd::Zero(w.rows(), w.cols()));
    }
    for (const auto& b : model.biases) {
        s.m_b.push_back(VectorXd::Zero(b.size()));
        s.v_b.push_back(VectorXd::Zero(b.size()));
    }
    return s;
}

void adam_step(MlpModel& model, AdamState& state, const Gradients& grads, double lr,
               double beta1, double beta2, double eps) {
    ++state.step;
    const double bc1 = 1.0 - std::pow(beta1, static_cast<double>(state.step));
    const double bc2 = 1.0 - std::pow(beta2, static_cast<double>(state.step));
    for (std::size_t l = 0; l < model.weights.size(); ++l) {
        state.m_w[l] = beta1 * state.m_w[l] + (1.0 - beta1) * grads.d_weights[l];
        state.v_w[l] =
            beta2 * state.v_w[l].array() + (1.0 - beta2) * grads.d_weights[l].array().square();
        model.weights[l].array() -=
            lr * (state.m_w[l].array() / bc1) / ((state.v_w[l].array() / bc2).sqrt() + eps);

        state.m_b[l] = beta1 * state.m_b[l] + (1.0 - beta1) * grads.d_biases[l];
        state.v_b[l] =
            beta2 * state.v_b[l].array() + (1.0 - beta2) * grads.d_biases[l].array().square();
        model.biases[l].array() -=
            lr * (state.m_b[l].array() / bc1) / ((state.v_b[l].array() / bc2).sqrt() + eps);
    }
}

namespace {

// Output targets must be reachable by the output activation: z-score for the
// unbounded identity, range maps into (-1, 1) for tanh and [0, inf) for relu.
Standardizer fit_output_standardizer(const MatrixXd& y, Activation output_activation) {
    const Eigen::Index d = y.rows();
    Standardizer s;
    s.shift.resize(d);
    s.scale.resize(d);
    for (Eigen::Index i = 0; i < d; ++i) {
        const double lo = y.row(i).minCoeff();
        const double hi = y.row(i).maxCoeff();
        switch (output_activation) {
            case Activation::identity: {
                const double mean = y.row(i).mean();
                const double sd = std::sqrt((y.row(i).array() - mean).square().mean());
                s.shift[i] = mean;
                s.scale[i] = sd > 1e-12 ? sd : 1.0;
                break;
            }
            case Activation::tanh: {
                const double span = hi - lo;
                s.scale[i] = span > 1e-12 ? span / 1.8 : 1.0; // -> [-0.9, 0.9]
                s.shift[i] = 0.5 * (lo + hi);
                break;
            }
            case Activation::relu: {
                const double span = hi - lo;
                s.scale[i] = span > 1e-12 ? span / 0.9 : 1.0; // -> [0.05, 0.95]
                s.shift[i] = lo - 0.05 * s.scale[i];
                break;
            }
        }
    }
    return s;
}

} // namespace

std::pair<MlpModel, TrainHistory> train(const MlpConfig& cfg, const TrainConfig& tcfg,
                                        const MatrixXd& inputs, const MatrixXd& outputs) {
    cfg.validate();
    tcfg.validate();
    const auto n = inputs.cols();
    if (n == 0) throw std::domain_error("train: empty dataset");
    if (inputs.rows() != cfg.input_dim || outputs.rows() != cfg.output_dim ||
        outputs.cols() != n)
        throw std::invalid_argument("train: dataset shape does not match config");

    // Shuffled split; validation taken from the tail.
    std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), 0);
    rng::Stream shuffle_stream(rng::mix(tcfg.shuffle_seed, 0x736875ULL));
    for (std::size_t i = order.size(); i > 1; --i)
        std::swap(order[i - 1], order[shuffle_stream.next_u64() % i]);

    const auto n_val = static_cast<Eigen::Index>(
        std::floor(static_cast<double>(n) * tcfg.validation_fraction));
    const Eigen::Index n_train = n - n_val;
    if (n_train < 1) throw std::domain_error("train: no training samples after split");

    MatrixXd x_train(cfg.input_dim, n_train), y_train(cfg.output_dim, n_train);
    MatrixXd x_val(cfg.input_dim, n_val), y_val(cfg.output_dim, n_val);
    for (Eigen::Index i = 0; i < n_train; ++i) {
        x_train.col(i) = inputs.col(order[static_cast<std::size_t>(i)]);
        y_train.col(i) = outputs.col(order[static_cast<std::size_t>(i)]);
    }
    for (Eigen::Index i = 0; i < n_val; ++i) {
        x_val.col(i) = inputs.col(order[static_cast<std::size_t>(n_train + i)]);
        y_val.col(i) = outputs.col(order[static_cast<std::size_t>(n_train + i)]);
    }

    if (!cfg.input_log.empty()) {
        x_train = log_rows(std::move(x_train), cfg.input_log, "train");
        if (n_val > 0) x_val = log_rows(std::move(x_val), cfg.input_log, "train");
    }
    if (!cfg.output_log.empty()) {
        y_train = log_rows(std::move(y_train), cfg.output_log, "train");
        if (n_val > 0) y_val = log_rows(std::move(y_val), cfg.output_log, "train");
    }
    if (any_set(cfg.input_circular)) {
        x_train = expand_circular(x_train, cfg.input_circular);
        if (n_val > 0) x_val = expand_circular(x_val, cfg.input_circular);
    }
    if (cfg.output_unit_vector) {
        y_train = spherical_to_unit_targets(y_train);
        if (n_val > 0) y_val = spherical_to_unit_targets(y_val);
    }

    MlpModel model = init_model(cfg);
    // Input z-score from the training split only.
    for (Eigen::Index i = 0; i < x_train.rows(); ++i) {
        const double mean = x_train.row(i).mean();
        const double sd = std::sqrt((x_train.row(i).array() - mean).square().mean());
        model.input_std.shift[i] = mean;
        model.input_std.scale[i] = sd > 1e-12 ? sd : 1.0;
    }
    model.output_std = fit_output_standardizer(y_train, cfg.output_activation);

    const MatrixXd xs = model.input_std.apply_batch(x_train);
    const MatrixXd ys = model.output_std.apply_batch(y_train);
    const MatrixXd xs_val = n_val > 0 ? model.input_std.apply_batch(x_val) : MatrixXd();
    const MatrixXd ys_val = n_val > 0 ? model.output_std.apply_batch(y_val) : MatrixXd();

    AdamState adam = AdamState::zeros_like(model);
    TrainHistory history;
    history.batch_size = tcfg.batch_size;
    history.n_train = static_cast<std::size_t>(n_train);
    history.n_val = static_cast<std::size_t>(n_val);

    MlpModel best = model;
    double best_val = std::numeric_limits<double>::infinity();

    std::vector<Eigen::Index> batch_order(static_cast<std::size_t>(n_train));
    std::iota(batch_order.begin(), batch_order.end(), 0);
    MatrixXd xb, yb;

    double lr = tcfg.learning_rate;
    for (int epoch = 0; epoch < tcfg.max_epochs; ++epoch) {
        for (std::size_t i = batch_order.size(); i > 1; --i)
            std::swap(batch_order[i - 1], batch_order[shuffle_stream.next_u64() % i]);

        double sq_sum = 0.0;
        for (Eigen::Index start = 0; start < n_train; start += tcfg.batch_size) {
            const Eigen::Index bs = std::min<Eigen::Index>(tcfg.batch_size, n_train - start);
            xb.resize(xs.rows(), bs);
            yb.resize(ys.rows(), bs);
            for (Eigen::Index i = 0; i < bs; ++i) {
                xb.col(i) = xs.col(batch_order[static_cast<std::size_t>(start + i)]);
                yb.col(i) = ys.col(batch_order[static_cast<std::size_t>(start + i)]);
            }
            const Gradients grads = backward(model, xb, yb);
            adam_step(model, adam, grads, lr, tcfg.beta1, tcfg.beta2, tcfg.eps);
            sq_sum += (model.forward_standardized(xb) - yb).squaredNorm();
        }
        const double train_mse = sq_sum / static_cast<double>(n_train);
        history.train_mse.push_back(train_mse);

        double val_mse = train_mse;
        if (n_val > 0) val_mse = loss_mse(model.forward_standardized(xs_val), ys_val);
        history.val_mse.push_back(val_mse);

        if (!std::isfinite(train_mse) || !std::isfinite(val_mse))
            throw TrainingDivergedError(
                "train: non-finite loss at epoch " + std::to_string(epoch), history);

        if (val_mse < best_val) {
            best_val = val_mse;
            best = model;
            history.best_epoch = epoch;
        }
        lr *= tcfg.lr_decay;
    }
    return {std::move(best), std::move(history)};
}

namespace {

void write_vector(std::ostream& out, const char* tag, const VectorXd& v) {
    out << tag;
    for (Eigen::Index i = 0; i < v.size(); ++i) {
        char buf[32];
        std::snprintf(buf, sizeof(buf), " %.17g", v[i]);
        out << buf;
    }
    out << "\n";
}

VectorXd read_vector(std::istream& in, const std::string& expect_tag, Eigen::Index size,
                     int& lineno) {
    std::string line;
    if (!std::getline(in, line))
        throw std::runtime_error("load_model: unexpected end of file at line " +
                                 std::to_string(lineno));
    ++lineno;
    std::istringstream ls(line);
    std::string tag;
    ls >> tag;
    if (tag != expect_tag)
        throw std::runtime_error("load_model: expected '" + expect_tag + "' at line " +
                                 std::to_string(lineno) + ", got '" + tag + "'");
    VectorXd v(size);
    for (Eigen::Index i = 0; i < size; ++i)
        if (!(ls >> v[i]))
            throw std::runtime_error("load_model: short row at line " + std::to_string(lineno));
    return v;
}

} // namespace

void save_model(const MlpModel& model, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("save_model: cannot open " + path.string());
    out << "plam-mlp 1\n";
    out << "dims " << model.net_input_dim();
    for (const auto& w : model.weights) out << ' ' << w.rows();
    out << "\n";
    out << "hidden " << activation_name(model.hidden_activation) << "\n";
    out << "output " << activation_name(model.output_activation) << "\n";
    auto write_mask = [&](const char* tag, const std::vector<bool>& mask, Eigen::Index dim) {
        out << tag;
        for (Eigen::Index i = 0; i < dim; ++i)
            out << ' ' << (static_cast<std::size_t>(i) < mask.size() && mask[static_cast<std::size_t>(i)] ? 1 : 0);
        out << "\n";
    };
    // Interface-shaping pretreatments come before the per-component masks so a
    // reader knows the external dimensions up front.
    write_mask("in_circ", model.input_circular, model.input_dim());
    out << "out_unitvec " << (model.output_unit_vector ? 1 : 0) << "\n";
    write_mask("in_log", model.input_log, model.input_dim());
    write_mask("out_log", model.output_log, model.output_dim());
    write_vector(out, "in_shift", model.input_std.shift);
    write_vector(out, "in_scale", model.input_std.scale);
    write_vector(out, "out_shift", model.output_std.shift);
    write_vector(out, "out_scale", model.output_std.scale);
    for (std::size_t l = 0; l < model.weights.size(); ++l) {
        const auto& w = model.weights[l];
        out << "layer " << l << ' ' << w.rows() << ' ' << w.cols() << "\n";
        for (Eigen::Index r = 0; r < w.rows(); ++r) {
            for (Eigen::Index c = 0; c < w.cols(); ++c) {
                char buf[32];
                std::snprintf(buf, sizeof(buf), "%s%.17g", c ? " " : "", w(r, c));
                out << buf;
            }
            out << "\n";
        }
        write_vector(out, "bias", model.biases[l]);
    }
    if (!out) throw std::runtime_error("save_model: write failed for " + path.string());
}

MlpModel load_model(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("load_model: cannot open " + path.string());
    int lineno = 0;
    auto fail = [&](const std::string& msg) {
        throw std::runtime_error("load_model: " + msg + " at line " + std::to_string(lineno) +
                                 " in " + path.string());
    };

    std::string line, tag;
    if (!std::getline(in, line)) fail("empty file");
    ++lineno;
    if (line != "plam-mlp 1") fail("unrecognized format header");

    if (!std::getline(in, line)) fail("missing dims");
    ++lineno;
    std::istringstream dims_line(line);
    dims_line >> tag;
    if (tag != "dims") fail("expected 'dims'");
    std::vector<Eigen::Index> dims;
    for (Eigen::Index d; dims_line >> d;) dims.push_back(d);
    if (dims.size() < 3) fail("model needs at least one hidden layer");

    MlpModel model;
    auto read_activation = [&](const char* expect) {
        if (!std::getline(in, line)) fail("missing activation line");
        ++lineno;
        std::istringstream ls(line);
        std::string t, name;
        ls >> t >> name;
        if (t != expect) fail(std::string("expected '") + expect + "'");
        return activation_from_name(name);
    };
    model.hidden_activation = read_activation("hidden");
    model.output_activation = read_activation("output");

    // Masks are stored at the model's external width, which the in_circ /
    // out_unitvec lines determine; they are read whole-line for that reason.
    auto read_mask_line = [&](const char* expect) {
        if (!std::getline(in, line)) fail("missing mask line");
        ++lineno;
        std::istringstream ls(line);
        std::string t;
        ls >> t;
        if (t != expect) fail(std::string("expected '") + expect + "'");
        std::vector<bool> mask;
        bool any = false;
        for (int v; ls >> v;) {
            if (v != 0 && v != 1) fail("mask entries must be 0 or 1");
            mask.push_back(v == 1);
            any = any || v == 1;
        }
        return any ? mask : std::vector<bool>(mask.size(), false);
    };
    auto check_mask = [&](const std::vector<bool>& mask, Eigen::Index dim, const char* what) {
        if (mask.size() != static_cast<std::size_t>(dim))
            fail(std::string(what) + " mask has the wrong width");
    };

    const std::vector<bool> in_circ = read_mask_line("in_circ");
    Eigen::Index ext_in = static_cast<Eigen::Index>(in_circ.size());
    Eigen::Index expanded_in = ext_in;
    for (bool c : in_circ) expanded_in += c ? 1 : 0;
    if (expanded_in != dims.front()) fail("in_circ mask is inconsistent with dims");
    if (std::any_of(in_circ.begin(), in_circ.end(), [](bool b) { return b; }))
        model.input_circular = in_circ;

    if (!std::getline(in, line)) fail("missing out_unitvec line");
    ++lineno;
    {
        std::istringstream ls(line);
        std::string t;
        int flag = -1;
        ls >> t >> flag;
        if (t != "out_unitvec" || (flag != 0 && flag != 1)) fail("bad out_unitvec line");
        model.output_unit_vector = flag == 1;
    }
    const Eigen::Index ext_out = dims.back() - (model.output_unit_vector ? 1 : 0);
    if (model.output_unit_vector && ext_out != 3)
        fail("out_unitvec requires a 4-wide network output");

    std::vector<bool> mask = read_mask_line("in_log");
    check_mask(mask, ext_in, "in_log");
    if (std::any_of(mask.begin(), mask.end(), [](bool b) { return b; })) model.input_log = mask;
    mask = read_mask_line("out_log");
    check_mask(mask, ext_out, "out_log");
    if (std::any_of(mask.begin(), mask.end(), [](bool b) { return b; })) model.output_log = mask;

    model.input_std.shift = read_vector(in, "in_shift", dims.front(), lineno);
    model.input_std.scale = read_vector(in, "in_scale", dims.front(), lineno);
    model.output_std.shift = read_vector(in, "out_shift", dims.back(), lineno);
    model.output_std.scale = read_vector(in, "out_scale", dims.back(), lineno);

    for (std::size_t l = 0; l + 1 < dims.size(); ++l) {
        if (!std::getline(in, line)) fail("missing layer header");
        ++lineno;
        std::istringstream ls(line);
        std::size_t idx;
        Eigen::Index rows, cols;
        ls >> tag >> idx >> rows >> cols;
        if (!ls || tag != "layer" || idx != l || rows != dims[l + 1] || cols != dims[l])
            fail("bad layer header");
        MatrixXd w(rows, cols);
        for (Eigen::Index r = 0; r < rows; ++r) {
            if (!std::getline(in, line)) fail("truncated weight block");
            ++lineno;
            std::istringstream row(line);
            for (Eigen::Index c = 0; c < cols; ++c)
                if (!(row >> w(r, c))) fail("short weight row");
        }
        model.weights.push_back(std::move(w));
        model.biases.push_back(read_vector(in, "bias", rows, lineno));
    }
    return model;
}

void write_history_csv(const TrainHistory& history, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("write_history_csv: cannot open " + path.string());
    out << "epoch,train_mse,val_mse\n";
    for (std::size_t e = 0; e < history.train_mse.size(); ++e)
        out << e << ',' << history.train_mse[e] << ',' << history.val_mse[e] << "\n";
}

} // namespace plam::mlp
