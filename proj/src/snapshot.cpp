#include "hybridkvh/snapshot.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>

namespace hkvh {

static_assert(std::endian::native == std::endian::little, "snapshot IO assumes a little-endian host");

namespace {

constexpr char kMagic[4] = {'H', 'K', 'V', 'H'};

template <class T>
void put(std::string& out, T v) {
    char buf[sizeof(T)];
    std::memcpy(buf, &v, sizeof(T));
    out.append(buf, sizeof(T));
}

class Reader {
public:
    explicit Reader(const std::string& bytes) : bytes_(bytes) {}

    template <class T>
    T get(const char* what) {
        if (bytes_.size() - pos_ < sizeof(T))
            fail(ErrorKind::Io, "snapshot truncated at byte " + std::to_string(pos_) + " while reading " + what);
        T v;
        std::memcpy(&v, bytes_.data() + pos_, sizeof(T));
        pos_ += sizeof(T);
        return v;
    }
    std::size_t offset() const { return pos_; }
    std::size_t remaining() const { return bytes_.size() - pos_; }

private:
    const std::string& bytes_;
    std::size_t pos_ = 0;
};

}  // namespace

std::size_t Snapshot::size() const {
    std::size_t n = 1;
    for (auto d : dims) n *= d;
    return n;
}

std::string encode_snapshot(const Snapshot& s) {
    require(!s.dims.empty(), ErrorKind::Shape, "snapshot needs rank >= 1");
    require(s.data.size() == s.size(), ErrorKind::Shape,
            "snapshot data holds " + std::to_string(s.data.size()) + " values, dims imply " + std::to_string(s.size()));
    std::string out;
    out.reserve(16 + 4 * s.dims.size() + 16 * s.data.size());
    out.append(kMagic, 4);
    put<std::uint32_t>(out, kSnapshotVersion);
    put<std::uint32_t>(out, s.mode == Mode::Continuum ? 0u : 1u);
    put<std::uint32_t>(out, static_cast<std::uint32_t>(s.dims.size()));
    for (auto d : s.dims) put<std::uint32_t>(out, d);
    for (const auto& z : s.data) {
        put<double>(out, z.real());
        put<double>(out, z.imag());
    }
    return out;
}

Snapshot decode_snapshot(const std::string& bytes) {
    Reader r(bytes);
    char magic[4];
    for (char& c : magic) c = r.get<char>("magic");
    if (std::memcmp(magic, kMagic, 4) != 0) fail(ErrorKind::Io, "bad snapshot magic at byte 0");
    const std::size_t version_at = r.offset();
    const auto version = r.get<std::uint32_t>("version");
    if (version != kSnapshotVersion)
        fail(ErrorKind::Io, "unsupported snapshot version " + std::to_string(version) + " at byte " +
                                std::to_string(version_at));
    const std::size_t mode_at = r.offset();
    const auto mode = r.get<std::uint32_t>("mode");
    if (mode > 1) fail(ErrorKind::Io, "invalid snapshot mode " + std::to_string(mode) + " at byte " + std::to_string(mode_at));
    const std::size_t rank_at = r.offset();
    const auto rank = r.get<std::uint32_t>("rank");
    if (rank == 0 || rank > 8)
        fail(ErrorKind::Io, "invalid snapshot rank " + std::to_string(rank) + " at byte " + std::to_string(rank_at));

    Snapshot s;
    s.mode = mode == 0 ? Mode::Continuum : Mode::FiniteDim;
    unsigned __int128 count = 1;
    for (std::uint32_t k = 0; k < rank; ++k) {
        const std::size_t at = r.offset();
        const auto d = r.get<std::uint32_t>("dims");
        if (d == 0) fail(ErrorKind::Io, "zero snapshot dimension at byte " + std::to_string(at));
        s.dims.push_back(d);
        count *= d;
    }
    const unsigned __int128 expected = count * 16u;
    if (expected != r.remaining())
        fail(ErrorKind::Io, "snapshot payload starting at byte " + std::to_string(r.offset()) + " has " +
                                std::to_string(r.remaining()) + " bytes, dims imply " +
                                std::to_string(static_cast<unsigned long long>(expected)));
    s.data.resize(static_cast<std::size_t>(count));
    for (auto& z : s.data) {
        const double re = r.get<double>("payload");
        const double im = r.get<double>("payload");
        z = {re, im};
    }
    return s;
}

void write_snapshot(const std::string& path, const Snapshot& s) {
    const std::string bytes = encode_snapshot(s);
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    require(bool(f), ErrorKind::Io, "cannot open '" + path + "' for writing");
    f.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    require(bool(f), ErrorKind::Io, "write to '" + path + "' failed");
}

Snapshot read_snapshot(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    require(bool(f), ErrorKind::Io, "cannot open snapshot '" + path + "'");
    std::ostringstream ss;
    ss << f.rdbuf();
    try {
        return decode_snapshot(ss.str());
    } catch (const Error& e) {
        fail(ErrorKind::Io, path + ": " + e.what());
    }
}

Snapshot snapshot_of(const HybridWavefunction& psi) {
    const PhaseGrid& g = psi.grid;
    Snapshot s;
    s.mode = g.mode;
    s.dims = {std::uint32_t(g.nq), std::uint32_t(g.np), std::uint32_t(g.nx)};
    s.data.assign(psi.psi.data(), psi.psi.data() + psi.psi.size());
    return s;
}

HybridWavefunction wavefunction_from(const Snapshot& s, const PhaseGrid& grid) {
    require(s.mode == grid.mode, ErrorKind::Shape, "snapshot mode does not match the grid");
    require(s.dims.size() == 3 && s.dims[0] == grid.nq && s.dims[1] == grid.np && s.dims[2] == grid.nx,
            ErrorKind::Shape, "snapshot dims do not match the grid");
    HybridWavefunction out = HybridWavefunction::zeros(grid);
    std::copy(s.data.begin(), s.data.end(), out.psi.data());
    return out;
}

}  // namespace hkvh
