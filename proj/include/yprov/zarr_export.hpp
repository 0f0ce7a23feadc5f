#pragma once

#include "yprov/metric_store.hpp"

#include <filesystem>

namespace yprov {

/// Writes a Zarr v2 hierarchy:
///
///   <out>/.zgroup
///   <out>/<CONTEXT>/.zgroup
///   <out>/<CONTEXT>/<name>/.zgroup, .zattrs (name, context, direction)
///   <out>/<CONTEXT>/<name>/{steps,epochs,timestamps,values}/.zarray + chunk files 0, 1, ...
///
/// Chunks hold `chunk_length` elements, uncompressed, little-endian; the last chunk is
/// zero-padded as Zarr requires. Characters outside `[A-Za-z0-9_.-]` in names become `_`.
/// Throws AlreadyExists when `out_dir` exists and is not empty.
void export_zarr(const StoreReader& store, const std::filesystem::path& out_dir, std::uint32_t chunk_length = 4096);

}  // namespace yprov
