#pragma once

#include "onn/linalg.hpp"
#include "onn/optics.hpp"
#include "onn/rng.hpp"

#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace onn {

enum class ArchKind { onn1_linear, onn2_hybrid, onn3_complex };

// "onn1", "onn2", "onn3"
std::string to_string(ArchKind kind);
std::optional<ArchKind> parse_arch_kind(const std::string& text);

enum class Activation { identity, relu, square };

struct Architecture {
    ArchKind kind = ArchKind::onn1_linear;
    // onn1: {in, out}; onn2: {in, hidden, out}; onn3: {in, out} with a complex layer.
    std::vector<int> layer_dims;

    static Architecture onn1() { return {ArchKind::onn1_linear, {kInputDim, kNumClasses}}; }
    static Architecture onn2() { return {ArchKind::onn2_hybrid, {kInputDim, 25, kNumClasses}}; }
    static Architecture onn3() { return {ArchKind::onn3_complex, {kInputDim, kNumClasses}}; }
    static Architecture of(ArchKind kind);

    // Throws InvalidConfig if dims do not fit the kind.
    void validate() const;

    int inputs() const { return layer_dims.front(); }
    int outputs() const { return layer_dims.back(); }
    // Output units of the optical (first) layer.
    int optical_outputs() const { return layer_dims[1]; }
    bool is_complex() const { return kind == ArchKind::onn3_complex; }
};

// Weights are stored as real matrices so the optimizer treats every layout alike:
//   onn1: {W1}    onn2: {W1 (optical), W2 (digital)}    onn3: {Re W1, Im W1}
struct NetworkState {
    Architecture arch;
    std::vector<RealMatrix> weights;
    std::vector<RealMatrix> first_moment;
    std::vector<RealMatrix> second_moment;
    long step = 0;

    ComplexMatrix complex_weights() const;
    void reset_moments();
};

// Entries N(0, sigma); onn3 draws circular complex-normal entries.
NetworkState init_network(const Architecture& arch, double sigma, Rng& rng);
NetworkState zero_network(const Architecture& arch);

// Clip the optical layer(s) to [-bound, bound]. The onn2 digital layer is left alone.
void clip_optical_layers(NetworkState& net, double bound);

// Loads the optical layer onto the device.
void deploy(const NetworkState& net, OpticalDevice& device);

// ---------------------------------------------------------------------------
// Generic dense stack without biases: z(l) = W(l) a(l-1), a(l) = g(z(l)).
// ---------------------------------------------------------------------------

enum class ForwardMode { digital, hardware };

struct ForwardRecord {
    ForwardMode mode = ForwardMode::digital;
    std::vector<RealVector> pre;  // z(1)..z(L)
    std::vector<RealVector> act;  // a(0)..a(L); a(0) is the input
    const RealVector& input() const { return act.front(); }
    const RealVector& logits() const { return act.back(); }
};

struct ErrorRecord {
    std::vector<RealVector> delta;     // delta(1)..delta(L)
    std::vector<RealVector> rho;       // rho(1)..rho(L-1): W(l+1)^T delta(l+1)
    std::vector<RealMatrix> gradient;  // per layer, outer(delta(l), a(l-1))
};

double activate(Activation g, double z);
double activate_derivative(Activation g, double z);

// first_pre, when given, replaces W(1) a(0) (a hardware-measured first layer).
ForwardRecord stack_forward(const std::vector<RealMatrix>& weights, const std::vector<Activation>& activations,
                            const RealVector& input, const RealVector* first_pre = nullptr);
ErrorRecord stack_backward(const std::vector<RealMatrix>& weights, const std::vector<Activation>& activations,
                           const ForwardRecord& record, const RealVector& output_delta);

// Frozen 0/1 matrix summing hidden units j and j+n into output j (n x 2n).
RealMatrix pairing_matrix(Eigen::Index n);

// Real two-layer network reproducing |W x|^2: stacked [Re W; Im W], square, pairing.
struct EquivalentRealNetwork {
    std::vector<RealMatrix> weights;
    std::vector<Activation> activations;
};
EquivalentRealNetwork equivalent_real_network(const ComplexMatrix& w);

// Complex route: |W x|^2 and its gradient w.r.t. (Re W, Im W) for an upstream delta.
RealVector complex_intensity(const ComplexMatrix& w, const RealVector& x);
std::pair<RealMatrix, RealMatrix> complex_intensity_gradient(const ComplexMatrix& w, const RealVector& x,
                                                             const RealVector& delta);

// ---------------------------------------------------------------------------
// Network-level passes.
// ---------------------------------------------------------------------------

// Layer matrices and activations the network evaluates digitally (onn3 via its real equivalent).
std::vector<RealMatrix> digital_layers(const NetworkState& net);
std::vector<Activation> layer_activations(const Architecture& arch);

// device == nullptr selects digital mode. In hardware mode onn3 reads quadratures.
ForwardRecord forward(const NetworkState& net, const RealVector& input, OpticalDevice* device, long update_epoch);

// Gradients in NetworkState::weights layout. Throws RecordMismatch.
ErrorRecord backward(const ForwardRecord& record, const NetworkState& net, const RealVector& output_delta);

// Inference logits; onn3 in hardware mode uses the LO-off intensity frame.
RealVector infer_logits(const NetworkState& net, const RealVector& input, OpticalDevice* device, long update_epoch);

RealVector softmax(const RealVector& logits);
// Returns (loss, softmax(z) - target).
std::pair<double, RealVector> softmax_cross_entropy(const RealVector& logits, const RealVector& target);
// Returns (0.5 |z - y|^2, z - y).
std::pair<double, RealVector> mse_loss_and_error(const RealVector& z, const RealVector& y);

// Index of the maximum; ties go to the lower index.
int argmax(const RealVector& v);

// ---------------------------------------------------------------------------
// Checkpoints: versioned text, shortest round-trip decimals.
// ---------------------------------------------------------------------------
inline constexpr int kCheckpointVersion = 1;

void write_checkpoint(std::ostream& out, const NetworkState& net, std::uint64_t seed);
void save_checkpoint(const std::string& path, const NetworkState& net, std::uint64_t seed);

struct Checkpoint {
    NetworkState net;
    std::uint64_t seed = 0;
};
Checkpoint read_checkpoint(std::istream& in);
Checkpoint load_checkpoint(const std::string& path);

}  // namespace onn
