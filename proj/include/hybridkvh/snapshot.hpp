#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "hybridkvh/liouvillian.hpp"

namespace hkvh {

// Binary grid snapshot:
//   "HKVH" | u32 version (1) | u32 mode (0 continuum, 1 finite_dim) | u32 rank
//   | u32 dims[rank] | rank-product pairs of float64 (re, im)
// All integers and floats little-endian; row-major with the last index fastest.
struct Snapshot {
    Mode mode = Mode::Continuum;
    std::vector<std::uint32_t> dims;
    std::vector<cplx> data;

    std::size_t size() const;  // product of dims
};

constexpr std::uint32_t kSnapshotVersion = 1;

std::string encode_snapshot(const Snapshot& s);
// Throws Io with the byte offset of the first inconsistency.
Snapshot decode_snapshot(const std::string& bytes);

void write_snapshot(const std::string& path, const Snapshot& s);
Snapshot read_snapshot(const std::string& path);

// rank 3, dims (nq, np, nx) or (nq, np, n_levels).
Snapshot snapshot_of(const HybridWavefunction& psi);
// Inverse of snapshot_of given the grid the data lives on; throws Shape when
// the dims or mode disagree with it.
HybridWavefunction wavefunction_from(const Snapshot& s, const PhaseGrid& grid);

}  // namespace hkvh
