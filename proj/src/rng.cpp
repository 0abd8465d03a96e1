#include "onn/rng.hpp"

#include "onn/errors.hpp"

namespace onn {

const char* to_string(ErrorCode code) {
    switch (code) {
        case ErrorCode::BadMagic: return "BadMagic";
        case ErrorCode::Truncated: return "Truncated";
        case ErrorCode::TrailingBytes: return "TrailingBytes";
        case ErrorCode::WrongCount: return "WrongCount";
        case ErrorCode::OutOfRange: return "OutOfRange";
        case ErrorCode::ShapeMismatch: return "ShapeMismatch";
        case ErrorCode::NotLoaded: return "NotLoaded";
        case ErrorCode::SignAmbiguity: return "SignAmbiguity";
        case ErrorCode::DegenerateFit: return "DegenerateFit";
        case ErrorCode::RecordMismatch: return "RecordMismatch";
        case ErrorCode::NonFiniteLoss: return "NonFiniteLoss";
        case ErrorCode::ParseError: return "ParseError";
        case ErrorCode::UnknownKey: return "UnknownKey";
        case ErrorCode::InvalidConfig: return "InvalidConfig";
        case ErrorCode::Io: return "Io";
    }
    return "Unknown";
}

std::uint64_t fnv1a64(std::string_view bytes) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

std::uint64_t derive_seed(std::uint64_t master_seed, std::string_view stream) {
    return splitmix64(master_seed ^ fnv1a64(stream));
}

SeedStreams SeedStreams::from_master(std::uint64_t master_seed) {
    SeedStreams s;
    s.master = master_seed;
    s.split = derive_seed(master_seed, "split");
    s.init = derive_seed(master_seed, "init");
    s.batch = derive_seed(master_seed, "batch");
    s.noise = derive_seed(master_seed, "noise");
    s.probes = derive_seed(master_seed, "probes");
    return s;
}

}  // namespace onn
