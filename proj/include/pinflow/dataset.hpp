#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "pinflow/graphize.hpp"
#include "pinflow/schema.hpp"
#include "pinflow/targets.hpp"

namespace pinflow {

/// CRC-64/XZ: reflected ECMA-182 polynomial 0x42F0E1EBA9EA3693, init and
/// xorout all-ones. check("123456789") = 0x995DC9BBDF1939FA.
std::uint64_t crc64(const void* data, std::size_t size, std::uint64_t seed = 0xFFFFFFFFFFFFFFFFull);

/// Graph corpus: PGF header fields plus the graph records (split tags ride on
/// the graphs). Head names are carried in memory for convenience; the file
/// format stores only H.
struct GraphStore {
    std::uint32_t format_version = 1;
    std::uint32_t schema_hash = 0;
    std::uint32_t n_heads = 0;
    std::vector<PinGraph> records;
    std::vector<std::string> head_names;  // in-memory only

    std::vector<const PinGraph*> split_view(std::uint8_t tag) const {
        std::vector<const PinGraph*> out;
        for (const auto& g : records)
            if (g.split_tag == tag) out.push_back(&g);
        return out;
    }
};

/// Serialize to the PGF byte layout (little-endian): magic "PGF1",
/// u32 version, u32 schema hash, u32 H, u32 record count; per record
/// u32 n, u32 d, u32 e, u8 split tag, n*d float32 row-major features,
/// e (u32,u32) edges with u<v, H float64 targets, H u8 mask; trailing u64
/// CRC-64/XZ over all preceding bytes.
std::vector<std::uint8_t> store_to_bytes(const GraphStore& store);
GraphStore store_from_bytes(const std::vector<std::uint8_t>& bytes);

void save_store(const GraphStore& store, const std::string& path);
GraphStore load_store(const std::string& path);

struct SplitRatios {
    double train = 0.5;
    double val = 0.25;
    double test = 0.25;

    void check() const {
        if (train <= 0 || val <= 0 || test <= 0)
            throw DataError("BadRatios", "split ratios must be positive");
        if (std::abs(train + val + test - 1.0) > 1e-9)
            throw DataError("BadRatios", "split ratios must sum to 1");
    }
};

/// Tag records with train/val/test by a seeded uniform shuffle:
/// train = floor(n*r_train), val = floor(n*r_val), test = remainder.
/// Throws DataError(TooSmall) when any split would be empty.
void split_store(GraphStore& store, const SplitRatios& ratios, std::uint64_t seed);

enum class ColumnRole { ComponentParam, Global, Target };

struct ColumnBinding {
    ColumnRole role = ColumnRole::ComponentParam;
    std::string component;  // role == ComponentParam
    std::string param;      // role == ComponentParam
    std::string name;       // global name or target head name
};

struct CorpusManifest {
    std::string circuit_class;
    std::string netlist_template;  // path, relative to the manifest
    std::string schema;            // path
    std::string csv;               // path
    std::map<std::string, ColumnBinding> bindings;  // CSV column -> role
    std::vector<std::string> target_order;          // head names, defines target layout
    SplitRatios split;
    std::uint64_t seed = 0;
};

CorpusManifest load_manifest(const std::string& path);
void save_manifest(const CorpusManifest& manifest, const std::string& path);

/// Parse the template once, substitute bound CSV values per row, graphize,
/// attach targets, tag splits. Rows are processed by `workers` threads
/// (0 = available parallelism, or the PINFLOW_WORKERS env var) and merged in
/// row order; the output is byte-identical for any worker count.
GraphStore ingest(const CorpusManifest& manifest, int workers = 0);

struct SyntheticCorpus {
    std::string manifest_path;
};

/// Write an RC low-pass corpus under `out_dir`: netlist template, schema,
/// n-row CSV and manifest. kind "rc_lowpass" has one deterministic target
/// log10_fc with f_c = 1/(2*pi*R*C); "rc_bimodal" adds head t =
/// log10_fc + s*0.5 with a fair coin s per row.
/// R is log-uniform in [100 ohm, 100 kohm], C log-uniform in [1 pF, 1 uF].
SyntheticCorpus generate_synthetic_corpus(const std::string& kind, int n, std::uint64_t seed,
                                          const std::string& out_dir);

/// Closed-form cutoff used by the generator and its tests.
double rc_cutoff_hz(double r_ohm, double c_farad);

// Small CSV helpers shared by ingest and the generator.
struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<double>> rows;

    int column(const std::string& name) const {
        for (std::size_t i = 0; i < header.size(); ++i)
            if (header[i] == name) return static_cast<int>(i);
        return -1;
    }
};

CsvTable load_csv(const std::string& path);

std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& content);

}  // namespace pinflow
