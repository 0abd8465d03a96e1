#include "onn/network.hpp"

#include "onn/errors.hpp"

#include <cmath>

namespace onn {

std::string to_string(ArchKind kind) {
    switch (kind) {
        case ArchKind::onn1_linear: return "onn1";
        case ArchKind::onn2_hybrid: return "onn2";
        case ArchKind::onn3_complex: return "onn3";
    }
    return "onn1";
}

std::optional<ArchKind> parse_arch_kind(const std::string& text) {
    for (auto k : {ArchKind::onn1_linear, ArchKind::onn2_hybrid, ArchKind::onn3_complex}) {
        if (to_string(k) == text) return k;
    }
    return std::nullopt;
}

Architecture Architecture::of(ArchKind kind) {
    switch (kind) {
        case ArchKind::onn1_linear: return onn1();
        case ArchKind::onn2_hybrid: return onn2();
        case ArchKind::onn3_complex: return onn3();
    }
    return onn1();
}

void Architecture::validate() const {
    const std::size_t expected = kind == ArchKind::onn2_hybrid ? 3 : 2;
    if (layer_dims.size() != expected) {
        throw OnnError(ErrorCode::InvalidConfig,
                       to_string(kind) + " needs " + std::to_string(expected) + " layer dims");
    }
    for (int d : layer_dims) {
        if (d <= 0) throw OnnError(ErrorCode::InvalidConfig, "layer dims must be positive");
    }
}

ComplexMatrix NetworkState::complex_weights() const {
    if (!arch.is_complex()) throw OnnError(ErrorCode::ShapeMismatch, "network has no complex layer");
    ComplexMatrix w(weights[0].rows(), weights[0].cols());
    w.real() = weights[0];
    w.imag() = weights[1];
    return w;
}

void NetworkState::reset_moments() {
    first_moment.clear();
    second_moment.clear();
    for (const auto& w : weights) {
        first_moment.push_back(RealMatrix::Zero(w.rows(), w.cols()));
        second_moment.push_back(RealMatrix::Zero(w.rows(), w.cols()));
    }
    step = 0;
}

NetworkState zero_network(const Architecture& arch) {
    arch.validate();
    NetworkState net;
    net.arch = arch;
    const auto& d = arch.layer_dims;
    switch (arch.kind) {
        case ArchKind::onn1_linear:
            net.weights = {RealMatrix::Zero(d[1], d[0])};
            break;
        case ArchKind::onn2_hybrid:
            net.weights = {RealMatrix::Zero(d[1], d[0]), RealMatrix::Zero(d[2], d[1])};
            break;
        case ArchKind::onn3_complex:
            net.weights = {RealMatrix::Zero(d[1], d[0]), RealMatrix::Zero(d[1], d[0])};
            break;
    }
    net.reset_moments();
    return net;
}

NetworkState init_network(const Architecture& arch, double sigma, Rng& rng) {
    NetworkState net = zero_network(arch);
    if (arch.is_complex()) {
        const ComplexMatrix w = complex_gaussian_matrix(net.weights[0].rows(), net.weights[0].cols(), sigma, rng);
        net.weights[0] = w.real();
        net.weights[1] = w.imag();
    } else {
        for (auto& w : net.weights) w = gaussian_matrix(w.rows(), w.cols(), sigma, rng);
    }
    return net;
}

void clip_optical_layers(NetworkState& net, double bound) {
    const std::size_t n = net.arch.is_complex() ? 2 : 1;
    for (std::size_t l = 0; l < n; ++l) net.weights[l] = net.weights[l].cwiseMax(-bound).cwiseMin(bound);
}

void deploy(const NetworkState& net, OpticalDevice& device) {
    if (net.weights[0].rows() != device.rows() || net.weights[0].cols() != device.cols()) {
        throw OnnError(ErrorCode::ShapeMismatch, "optical layer does not fit the device");
    }
    if (net.arch.is_complex()) {
        device.load_weights(net.complex_weights());
    } else {
        device.load_weights(net.weights[0]);
    }
}

double activate(Activation g, double z) {
    switch (g) {
        case Activation::identity: return z;
        case Activation::relu: return z > 0.0 ? z : 0.0;
        case Activation::square: return z * z;
    }
    return z;
}

double activate_derivative(Activation g, double z) {
    switch (g) {
        case Activation::identity: return 1.0;
        case Activation::relu: return z > 0.0 ? 1.0 : 0.0;
        case Activation::square: return 2.0 * z;
    }
    return 1.0;
}

ForwardRecord stack_forward(const std::vector<RealMatrix>& weights, const std::vector<Activation>& activations,
                            const RealVector& input, const RealVector* first_pre) {
    ForwardRecord rec;
    rec.mode = first_pre ? ForwardMode::hardware : ForwardMode::digital;
    rec.act.push_back(input);
    for (std::size_t l = 0; l < weights.size(); ++l) {
        RealVector z = (l == 0 && first_pre) ? *first_pre : RealVector(weights[l] * rec.act.back());
        if (z.size() != weights[l].rows()) {
            throw OnnError(ErrorCode::ShapeMismatch, "measured layer size does not match the weights");
        }
        const Activation g = activations[l];
        rec.act.push_back(z.unaryExpr([g](double v) { return activate(g, v); }));
        rec.pre.push_back(std::move(z));
    }
    return rec;
}

ErrorRecord stack_backward(const std::vector<RealMatrix>& weights, const std::vector<Activation>& activations,
                           const ForwardRecord& record, const RealVector& output_delta) {
    const std::size_t n = weights.size();
    if (record.pre.size() != n || record.act.size() != n + 1 || output_delta.size() != weights.back().rows()) {
        throw OnnError(ErrorCode::RecordMismatch, "forward record does not match the layer stack");
    }
    ErrorRecord err;
    err.delta.resize(n);
    err.rho.resize(n - 1);
    err.gradient.resize(n);

    const Activation g_out = activations[n - 1];
    err.delta[n - 1] = output_delta.cwiseProduct(
        record.pre[n - 1].unaryExpr([g_out](double z) { return activate_derivative(g_out, z); }));
    for (std::size_t l = n - 1; l-- > 0;) {
        err.rho[l] = weights[l + 1].transpose() * err.delta[l + 1];
        const Activation g = activations[l];
        err.delta[l] = err.rho[l].cwiseProduct(record.pre[l].unaryExpr([g](double z) { return activate_derivative(g, z); }));
    }
    for (std::size_t l = 0; l < n; ++l) err.gradient[l] = err.delta[l] * record.act[l].transpose();
    return err;
}

RealMatrix pairing_matrix(Eigen::Index n) {
    RealMatrix p = RealMatrix::Zero(n, 2 * n);
    for (Eigen::Index j = 0; j < n; ++j) {
        p(j, j) = 1.0;
        p(j, j + n) = 1.0;
    }
    return p;
}

EquivalentRealNetwork equivalent_real_network(const ComplexMatrix& w) {
    RealMatrix stacked(2 * w.rows(), w.cols());
    stacked.topRows(w.rows()) = w.real();
    stacked.bottomRows(w.rows()) = w.imag();
    return {{stacked, pairing_matrix(w.rows())}, {Activation::square, Activation::identity}};
}

RealVector complex_intensity(const ComplexMatrix& w, const RealVector& x) {
    return (w * x.cast<Complex>()).cwiseAbs2();
}

std::pair<RealMatrix, RealMatrix> complex_intensity_gradient(const ComplexMatrix& w, const RealVector& x,
                                                             const RealVector& delta) {
    const ComplexVector z = w * x.cast<Complex>();
    const RealVector d_re = 2.0 * z.real().cwiseProduct(delta);
    const RealVector d_im = 2.0 * z.imag().cwiseProduct(delta);
    return {d_re * x.transpose(), d_im * x.transpose()};
}

std::vector<RealMatrix> digital_layers(const NetworkState& net) {
    if (net.arch.is_complex()) return equivalent_real_network(net.complex_weights()).weights;
    return net.weights;
}

std::vector<Activation> layer_activations(const Architecture& arch) {
    switch (arch.kind) {
        case ArchKind::onn1_linear: return {Activation::identity};
        case ArchKind::onn2_hybrid: return {Activation::relu, Activation::identity};
        case ArchKind::onn3_complex: return {Activation::square, Activation::identity};
    }
    return {};
}

namespace {

RealVector measure_first_layer(const NetworkState& net, const RealVector& input, OpticalDevice& device,
                               long update_epoch) {
    if (!net.arch.is_complex()) return device.real_mvm(input, update_epoch);
    const ComplexVector z = device.complex_mvm(input, update_epoch);
    RealVector stacked(2 * z.size());
    stacked << z.real(), z.imag();
    return stacked;
}

}  // namespace

ForwardRecord forward(const NetworkState& net, const RealVector& input, OpticalDevice* device, long update_epoch) {
    if (input.size() != net.arch.inputs()) {
        throw OnnError(ErrorCode::ShapeMismatch, "input length does not match the network");
    }
    const auto layers = digital_layers(net);
    const auto acts = layer_activations(net.arch);
    if (!device) return stack_forward(layers, acts, input);
    const RealVector measured = measure_first_layer(net, input, *device, update_epoch);
    return stack_forward(layers, acts, input, &measured);
}

ErrorRecord backward(const ForwardRecord& record, const NetworkState& net, const RealVector& output_delta) {
    const auto layers = digital_layers(net);
    for (std::size_t l = 0; l < record.pre.size() && l < layers.size(); ++l) {
        if (record.pre[l].size() != layers[l].rows() || record.act[l].size() != layers[l].cols()) {
            throw OnnError(ErrorCode::RecordMismatch, "forward record was produced by another network");
        }
    }
    ErrorRecord err = stack_backward(layers, layer_activations(net.arch), record, output_delta);
    if (net.arch.is_complex()) {
        const Eigen::Index n = net.weights[0].rows();
        const RealMatrix stacked = err.gradient[0];
        err.gradient = {stacked.topRows(n), stacked.bottomRows(n)};
    }
    return err;
}

RealVector infer_logits(const NetworkState& net, const RealVector& input, OpticalDevice* device, long update_epoch) {
    if (device && net.arch.is_complex()) {
        if (input.size() != net.arch.inputs()) {
            throw OnnError(ErrorCode::ShapeMismatch, "input length does not match the network");
        }
        return device->intensity_readout(input, update_epoch);
    }
    return forward(net, input, device, update_epoch).logits();
}

RealVector softmax(const RealVector& logits) {
    const RealVector e = (logits.array() - logits.maxCoeff()).exp();
    return e / e.sum();
}

std::pair<double, RealVector> softmax_cross_entropy(const RealVector& logits, const RealVector& target) {
    if (logits.size() != target.size()) throw OnnError(ErrorCode::ShapeMismatch, "logits and target differ");
    const double m = logits.maxCoeff();
    const double log_sum = m + std::log((logits.array() - m).exp().sum());
    const double loss = -(target.array() * (logits.array() - log_sum)).sum();
    return {loss, softmax(logits) - target};
}

std::pair<double, RealVector> mse_loss_and_error(const RealVector& z, const RealVector& y) {
    if (z.size() != y.size()) throw OnnError(ErrorCode::ShapeMismatch, "output and target differ");
    RealVector d = z - y;
    return {0.5 * d.squaredNorm(), d};
}

int argmax(const RealVector& v) {
    int best = 0;
    for (Eigen::Index i = 1; i < v.size(); ++i) {
        if (v(i) > v(best)) best = static_cast<int>(i);
    }
    return best;
}

}  // namespace onn
