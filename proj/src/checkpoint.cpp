#include "onn/errors.hpp"
#include "onn/network.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

namespace onn {

namespace {

constexpr const char* kMagic = "onn-checkpoint";

std::string format_double(double x) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, x);
    return std::string(buf, res.ptr);
}

double parse_double(const std::string& token, int line) {
    double x = 0.0;
    const auto res = std::from_chars(token.data(), token.data() + token.size(), x);
    if (res.ec != std::errc() || res.ptr != token.data() + token.size()) {
        throw OnnError(ErrorCode::ParseError, "line " + std::to_string(line) + ": bad number '" + token + "'");
    }
    return x;
}

struct LineReader {
    std::istream& in;
    int number = 0;

    std::istringstream next(const std::string& expected_key) {
        std::string line;
        if (!std::getline(in, line)) {
            throw OnnError(ErrorCode::ParseError, "unexpected end of checkpoint, wanted " + expected_key);
        }
        ++number;
        std::istringstream fields(line);
        std::string key;
        fields >> key;
        if (key != expected_key) {
            throw OnnError(ErrorCode::ParseError,
                           "line " + std::to_string(number) + ": expected '" + expected_key + "', got '" + key + "'");
        }
        return fields;
    }
};

}  // namespace

void write_checkpoint(std::ostream& out, const NetworkState& net, std::uint64_t seed) {
    const bool cplx = net.arch.is_complex();
    out << kMagic << "\n";
    out << "format_version " << kCheckpointVersion << "\n";
    out << "arch " << to_string(net.arch.kind) << "\n";
    out << "layer_dims";
    for (int d : net.arch.layer_dims) out << ' ' << d;
    out << "\n";
    out << "seed " << seed << "\n";

    std::vector<std::pair<const RealMatrix*, const RealMatrix*>> layers;
    if (cplx) {
        layers.emplace_back(&net.weights[0], &net.weights[1]);
    } else {
        for (const auto& w : net.weights) layers.emplace_back(&w, nullptr);
    }
    for (std::size_t l = 0; l < layers.size(); ++l) {
        const RealMatrix& re = *layers[l].first;
        out << "layer " << l << ' ' << (layers[l].second ? "complex" : "real") << ' ' << re.rows() << ' '
            << re.cols() << "\n";
        for (Eigen::Index r = 0; r < re.rows(); ++r) {
            out << "row";
            for (Eigen::Index c = 0; c < re.cols(); ++c) {
                if (layers[l].second) {
                    out << " (" << format_double(re(r, c)) << ',' << format_double((*layers[l].second)(r, c)) << ')';
                } else {
                    out << ' ' << format_double(re(r, c));
                }
            }
            out << "\n";
        }
    }
}

void save_checkpoint(const std::string& path, const NetworkState& net, std::uint64_t seed) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw OnnError(ErrorCode::Io, "cannot write " + path);
    write_checkpoint(out, net, seed);
    if (!out) throw OnnError(ErrorCode::Io, "write failed for " + path);
}

Checkpoint read_checkpoint(std::istream& in) {
    LineReader reader{in};
    reader.next(kMagic);
    int version = 0;
    reader.next("format_version") >> version;
    if (version != kCheckpointVersion) {
        throw OnnError(ErrorCode::ParseError, "unsupported checkpoint version " + std::to_string(version));
    }
    std::string arch_name;
    reader.next("arch") >> arch_name;
    const auto kind = parse_arch_kind(arch_name);
    if (!kind) throw OnnError(ErrorCode::ParseError, "unknown arch '" + arch_name + "'");

    Architecture arch{*kind, {}};
    auto dims = reader.next("layer_dims");
    for (int d; dims >> d;) arch.layer_dims.push_back(d);

    Checkpoint cp;
    reader.next("seed") >> cp.seed;
    cp.net = zero_network(arch);

    const std::size_t layer_count = arch.is_complex() ? 1 : cp.net.weights.size();
    for (std::size_t l = 0; l < layer_count; ++l) {
        auto header = reader.next("layer");
        std::size_t index = 0;
        std::string type;
        Eigen::Index rows = 0, cols = 0;
        header >> index >> type >> rows >> cols;
        RealMatrix& re = cp.net.weights[l];
        const bool cplx = type == "complex";
        if (index != l || cplx != arch.is_complex() || rows != re.rows() || cols != re.cols()) {
            throw OnnError(ErrorCode::ParseError, "line " + std::to_string(reader.number) + ": layer header mismatch");
        }
        for (Eigen::Index r = 0; r < rows; ++r) {
            auto row = reader.next("row");
            for (Eigen::Index c = 0; c < cols; ++c) {
                std::string token;
                if (!(row >> token)) {
                    throw OnnError(ErrorCode::ParseError, "line " + std::to_string(reader.number) + ": short row");
                }
                if (cplx) {
                    const auto comma = token.find(',');
                    if (token.size() < 5 || token.front() != '(' || token.back() != ')' || comma == std::string::npos) {
                        throw OnnError(ErrorCode::ParseError,
                                       "line " + std::to_string(reader.number) + ": bad complex entry " + token);
                    }
                    re(r, c) = parse_double(token.substr(1, comma - 1), reader.number);
                    cp.net.weights[1](r, c) = parse_double(token.substr(comma + 1, token.size() - comma - 2), reader.number);
                } else {
                    re(r, c) = parse_double(token, reader.number);
                }
            }
        }
    }
    return cp;
}

Checkpoint load_checkpoint(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw OnnError(ErrorCode::Io, "cannot open " + path);
    return read_checkpoint(in);
}

}  // namespace onn
