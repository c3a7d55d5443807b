#include "pinflow/dataset.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "pinflow/rng.hpp"

namespace pinflow {

namespace fs = std::filesystem;
using nlohmann::json;

// ---------------------------------------------------------------------------
// CRC-64/XZ
// ---------------------------------------------------------------------------

namespace {

const std::array<std::uint64_t, 256>& crc64_table() {
    static const std::array<std::uint64_t, 256> table = [] {
        std::array<std::uint64_t, 256> t{};
        // Reflected form of the ECMA-182 polynomial.
        const std::uint64_t poly = 0xC96C5795D7870F42ull;
        for (std::uint64_t i = 0; i < 256; ++i) {
            std::uint64_t crc = i;
            for (int bit = 0; bit < 8; ++bit)
                crc = (crc & 1) ? (crc >> 1) ^ poly : crc >> 1;
            t[static_cast<std::size_t>(i)] = crc;
        }
        return t;
    }();
    return table;
}

}  // namespace

std::uint64_t crc64(const void* data, std::size_t size, std::uint64_t seed) {
    const auto* bytes = static_cast<const std::uint8_t*>(data);
    std::uint64_t crc = seed;
    for (std::size_t i = 0; i < size; ++i)
        crc = crc64_table()[(crc ^ bytes[i]) & 0xFF] ^ (crc >> 8);
    return crc ^ 0xFFFFFFFFFFFFFFFFull;
}

// ---------------------------------------------------------------------------
// PGF serialization
// ---------------------------------------------------------------------------

namespace {

static_assert(std::endian::native == std::endian::little,
              "PGF and PFCK files are little-endian; big-endian hosts need byte swaps");

template <typename V>
void put(std::vector<std::uint8_t>& out, V value) {
    static_assert(std::is_trivially_copyable_v<V>);
    const std::size_t at = out.size();
    out.resize(at + sizeof(V));
    std::memcpy(out.data() + at, &value, sizeof(V));
}

template <typename V>
V get(const std::vector<std::uint8_t>& in, std::size_t& at) {
    if (at + sizeof(V) > in.size()) throw IoError("ChecksumError", "truncated PGF stream");
    V value;
    std::memcpy(&value, in.data() + at, sizeof(V));
    at += sizeof(V);
    return value;
}

}  // namespace

std::vector<std::uint8_t> store_to_bytes(const GraphStore& store) {
    std::vector<std::uint8_t> out;
    out.push_back('P');
    out.push_back('G');
    out.push_back('F');
    out.push_back('1');
    put<std::uint32_t>(out, store.format_version);
    put<std::uint32_t>(out, store.schema_hash);
    put<std::uint32_t>(out, store.n_heads);
    put<std::uint32_t>(out, static_cast<std::uint32_t>(store.records.size()));
    for (const auto& g : store.records) {
        put<std::uint32_t>(out, g.n);
        put<std::uint32_t>(out, g.d);
        put<std::uint32_t>(out, static_cast<std::uint32_t>(g.edges.size()));
        put<std::uint8_t>(out, g.split_tag);
        for (float v : g.x) put<float>(out, v);
        for (const auto& [u, v] : g.edges) {
            put<std::uint32_t>(out, u);
            put<std::uint32_t>(out, v);
        }
        for (std::uint32_t h = 0; h < store.n_heads; ++h)
            put<double>(out, h < g.y.size() ? g.y[h] : 0.0);
        for (std::uint32_t h = 0; h < store.n_heads; ++h)
            put<std::uint8_t>(out, h < g.y_mask.size() ? g.y_mask[h] : 0);
    }
    put<std::uint64_t>(out, crc64(out.data(), out.size()));
    return out;
}

GraphStore store_from_bytes(const std::vector<std::uint8_t>& bytes) {
    if (bytes.size() < 12 + 8) throw IoError("ChecksumError", "PGF stream too short");
    std::uint64_t stored;
    std::memcpy(&stored, bytes.data() + bytes.size() - 8, 8);
    if (crc64(bytes.data(), bytes.size() - 8) != stored)
        throw IoError("ChecksumError", "PGF checksum mismatch");
    if (bytes[0] != 'P' || bytes[1] != 'G' || bytes[2] != 'F' || bytes[3] != '1')
        throw IoError("FormatVersionMismatch", "not a PGF file");

    std::size_t at = 4;
    GraphStore store;
    store.format_version = get<std::uint32_t>(bytes, at);
    if (store.format_version != 1)
        throw IoError("FormatVersionMismatch",
                      "unsupported PGF version " + std::to_string(store.format_version));
    store.schema_hash = get<std::uint32_t>(bytes, at);
    store.n_heads = get<std::uint32_t>(bytes, at);
    const std::uint32_t count = get<std::uint32_t>(bytes, at);
    store.records.resize(count);
    for (std::uint32_t r = 0; r < count; ++r) {
        PinGraph& g = store.records[r];
        g.n = get<std::uint32_t>(bytes, at);
        g.d = get<std::uint32_t>(bytes, at);
        const std::uint32_t e = get<std::uint32_t>(bytes, at);
        g.split_tag = get<std::uint8_t>(bytes, at);
        g.x.resize(static_cast<std::size_t>(g.n) * g.d);
        for (auto& v : g.x) v = get<float>(bytes, at);
        g.edges.resize(e);
        for (auto& [u, v] : g.edges) {
            u = get<std::uint32_t>(bytes, at);
            v = get<std::uint32_t>(bytes, at);
        }
        g.y.resize(store.n_heads);
        for (auto& v : g.y) v = get<double>(bytes, at);
        g.y_mask.resize(store.n_heads);
        for (auto& v : g.y_mask) v = get<std::uint8_t>(bytes, at);
    }
    return store;
}

void save_store(const GraphStore& store, const std::string& path) {
    const auto bytes = store_to_bytes(store);
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("IoError", "cannot write " + path);
    out.write(reinterpret_cast<const char*>(bytes.data()),
              static_cast<std::streamsize>(bytes.size()));
}

GraphStore load_store(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("IoError", "cannot read " + path);
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                    std::istreambuf_iterator<char>());
    return store_from_bytes(bytes);
}

// ---------------------------------------------------------------------------
// Splits
// ---------------------------------------------------------------------------

void split_store(GraphStore& store, const SplitRatios& ratios, std::uint64_t seed) {
    ratios.check();
    const std::size_t n = store.records.size();
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    counter_shuffle(idx, CounterRng(seed, rng_stream::kSplitShuffle));

    const std::size_t n_train = static_cast<std::size_t>(
        std::floor(static_cast<double>(n) * ratios.train));
    const std::size_t n_val =
        static_cast<std::size_t>(std::floor(static_cast<double>(n) * ratios.val));
    const std::size_t n_test = n - n_train - n_val;
    if (n_train == 0 || n_val == 0 || n_test == 0)
        throw DataError("TooSmall", "a split would be empty for n=" + std::to_string(n));

    for (std::size_t i = 0; i < n; ++i) {
        std::uint8_t tag = 2;
        if (i < n_train) tag = 0;
        else if (i < n_train + n_val) tag = 1;
        store.records[idx[i]].split_tag = tag;
    }
}

// ---------------------------------------------------------------------------
// Files, CSV, manifest
// ---------------------------------------------------------------------------

std::string read_text_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("IoError", "cannot read " + path);
    std::stringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

void write_text_file(const std::string& path, const std::string& content) {
    std::ofstream out(path);
    if (!out) throw IoError("IoError", "cannot write " + path);
    out << content;
}

CsvTable load_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("IoError", "cannot read " + path);
    CsvTable table;
    std::string line;
    bool have_header = false;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::vector<std::string> cells;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) cells.push_back(cell);
        if (!have_header) {
            table.header = cells;
            have_header = true;
            continue;
        }
        if (cells.size() != table.header.size())
            throw DataError("RowParseError",
                            "row " + std::to_string(lineno) + " has " +
                                std::to_string(cells.size()) + " cells, expected " +
                                std::to_string(table.header.size()));
        std::vector<double> row;
        row.reserve(cells.size());
        for (const auto& c : cells) {
            try {
                std::size_t used = 0;
                const double v = std::stod(c, &used);
                if (used != c.size()) throw std::invalid_argument(c);
                row.push_back(v);
            } catch (const std::exception&) {
                throw DataError("RowParseError",
                                "row " + std::to_string(lineno) + ": bad number '" + c + "'");
            }
        }
        table.rows.push_back(std::move(row));
    }
    return table;
}

namespace {

std::string resolve(const std::string& base_dir, const std::string& path) {
    fs::path p(path);
    if (p.is_absolute()) return path;
    return (fs::path(base_dir) / p).string();
}

}  // namespace

CorpusManifest load_manifest(const std::string& path) {
    json doc;
    try {
        doc = json::parse(read_text_file(path));
    } catch (const json::parse_error& e) {
        throw DataError("BadManifest", std::string("invalid manifest JSON: ") + e.what());
    }
    CorpusManifest m;
    const std::string dir = fs::path(path).parent_path().string();
    m.circuit_class = doc.value("circuit_class", std::string());
    m.netlist_template = resolve(dir, doc.at("netlist_template").get<std::string>());
    m.schema = resolve(dir, doc.at("schema").get<std::string>());
    m.csv = resolve(dir, doc.at("csv").get<std::string>());
    for (auto it = doc.at("bindings").begin(); it != doc.at("bindings").end(); ++it) {
        const json& b = it.value();
        ColumnBinding binding;
        const std::string role = b.at("bind").get<std::string>();
        if (role == "param") {
            binding.role = ColumnRole::ComponentParam;
            binding.component = b.at("component").get<std::string>();
            binding.param = b.at("param").get<std::string>();
        } else if (role == "global") {
            binding.role = ColumnRole::Global;
            binding.name = b.at("name").get<std::string>();
        } else if (role == "target") {
            binding.role = ColumnRole::Target;
            binding.name = b.at("head").get<std::string>();
        } else {
            throw DataError("BadManifest", "unknown binding role '" + role + "'");
        }
        m.bindings[it.key()] = binding;
    }
    for (const auto& t : doc.at("targets")) m.target_order.push_back(t.get<std::string>());
    if (doc.contains("split")) {
        m.split.train = doc["split"].value("train", 0.5);
        m.split.val = doc["split"].value("val", 0.25);
        m.split.test = doc["split"].value("test", 0.25);
    }
    m.seed = doc.value("seed", 0ull);
    return m;
}

void save_manifest(const CorpusManifest& m, const std::string& path) {
    json doc;
    const fs::path dir = fs::path(path).parent_path();
    auto relativize = [&dir](const std::string& p) {
        return fs::relative(fs::path(p), dir).string();
    };
    doc["circuit_class"] = m.circuit_class;
    doc["netlist_template"] = relativize(m.netlist_template);
    doc["schema"] = relativize(m.schema);
    doc["csv"] = relativize(m.csv);
    json bindings = json::object();
    for (const auto& [col, b] : m.bindings) {
        json jb;
        switch (b.role) {
            case ColumnRole::ComponentParam:
                jb["bind"] = "param";
                jb["component"] = b.component;
                jb["param"] = b.param;
                break;
            case ColumnRole::Global:
                jb["bind"] = "global";
                jb["name"] = b.name;
                break;
            case ColumnRole::Target:
                jb["bind"] = "target";
                jb["head"] = b.name;
                break;
        }
        bindings[col] = jb;
    }
    doc["bindings"] = bindings;
    doc["targets"] = m.target_order;
    doc["split"] = {{"train", m.split.train}, {"val", m.split.val}, {"test", m.split.test}};
    doc["seed"] = m.seed;
    write_text_file(path, doc.dump(2) + "\n");
}

// ---------------------------------------------------------------------------
// Ingest
// ---------------------------------------------------------------------------

namespace {

int resolve_workers(int workers) {
    if (workers > 0) return workers;
    if (const char* env = std::getenv("PINFLOW_WORKERS")) {
        const int parsed = std::atoi(env);
        if (parsed > 0) return parsed;
    }
    const unsigned hw = std::thread::hardware_concurrency();
    return hw > 0 ? static_cast<int>(hw) : 1;
}

}  // namespace

GraphStore ingest(const CorpusManifest& manifest, int workers) {
    manifest.split.check();
    const Circuit base = parse_netlist(read_text_file(manifest.netlist_template));
    FeatureSchema schema = load_schema(read_text_file(manifest.schema));
    const CsvTable csv = load_csv(manifest.csv);

    // Resolve bindings against headers and the template up front.
    struct ResolvedBinding {
        int column = -1;
        ColumnBinding binding;
    };
    std::vector<ResolvedBinding> resolved;
    for (const auto& [col_name, binding] : manifest.bindings) {
        const int col = csv.column(col_name);
        if (col < 0) throw DataError("BindError", "CSV has no column '" + col_name + "'");
        if (binding.role == ColumnRole::ComponentParam) {
            const Component* comp = base.find_component(binding.component);
            if (!comp)
                throw DataError("BindError", "template has no component '" + binding.component +
                                                 "' for column '" + col_name + "'");
            if (!comp->params.count(binding.param))
                throw DataError("BindError", "component " + binding.component +
                                                 " has no parameter '" + binding.param + "'");
        } else if (binding.role == ColumnRole::Target) {
            if (std::find(manifest.target_order.begin(), manifest.target_order.end(),
                          binding.name) == manifest.target_order.end())
                throw DataError("BindError",
                                "target head '" + binding.name + "' missing from targets list");
        }
        resolved.push_back({col, binding});
    }

    TargetSpec targets;
    for (const auto& name : manifest.target_order)
        targets.heads.push_back({name, "", HeadKind::Deterministic});
    targets.check();

    GraphStore store;
    store.schema_hash = schema.hash();
    store.n_heads = static_cast<std::uint32_t>(targets.size());
    store.head_names = manifest.target_order;
    store.records.resize(csv.rows.size());

    auto build_row = [&](std::size_t r) {
        Circuit circuit = base;
        if (!manifest.circuit_class.empty()) circuit.circuit_class = manifest.circuit_class;
        std::vector<double> y(targets.size(), 0.0);
        std::vector<std::uint8_t> mask(targets.size(), 0);
        for (const auto& rb : resolved) {
            const double value = csv.rows[r][static_cast<std::size_t>(rb.column)];
            switch (rb.binding.role) {
                case ColumnRole::ComponentParam:
                    circuit.find_component(rb.binding.component)->params[rb.binding.param] = value;
                    break;
                case ColumnRole::Global:
                    circuit.globals[rb.binding.name] = value;
                    break;
                case ColumnRole::Target: {
                    const int head = targets.index_of(rb.binding.name);
                    y[static_cast<std::size_t>(head)] = value;
                    mask[static_cast<std::size_t>(head)] = 1;
                    break;
                }
            }
        }
        store.records[r] = circuit_to_graph(circuit, schema, targets, y, mask);
    };

    const int n_workers = resolve_workers(workers);
    const std::size_t n_rows = csv.rows.size();
    if (n_workers <= 1 || n_rows < 2) {
        for (std::size_t r = 0; r < n_rows; ++r) build_row(r);
    } else {
        std::vector<std::thread> pool;
        std::vector<std::exception_ptr> errors(static_cast<std::size_t>(n_workers));
        for (int w = 0; w < n_workers; ++w) {
            pool.emplace_back([&, w]() {
                try {
                    for (std::size_t r = static_cast<std::size_t>(w); r < n_rows;
                         r += static_cast<std::size_t>(n_workers))
                        build_row(r);
                } catch (...) {
                    errors[static_cast<std::size_t>(w)] = std::current_exception();
                }
            });
        }
        for (auto& t : pool) t.join();
        for (auto& e : errors)
            if (e) std::rethrow_exception(e);
    }

    split_store(store, manifest.split, manifest.seed);
    return store;
}

// ---------------------------------------------------------------------------
// Synthetic corpus
// ---------------------------------------------------------------------------

double rc_cutoff_hz(double r_ohm, double c_farad) {
    return 1.0 / (2.0 * M_PI * r_ohm * c_farad);
}

SyntheticCorpus generate_synthetic_corpus(const std::string& kind, int n, std::uint64_t seed,
                                          const std::string& out_dir) {
    if (kind != "rc_lowpass" && kind != "rc_bimodal")
        throw DataError("BadKind", "unknown synthetic corpus kind '" + kind + "'");
    if (n < 10) throw DataError("TooSmall", "synthetic corpus needs n >= 10");
    const bool bimodal = kind == "rc_bimodal";

    fs::create_directories(out_dir);
    const fs::path dir(out_dir);

    const std::string netlist =
        "* synthetic rc lowpass\n"
        ".class RCLP\n"
        "R1 in out 1k\n"
        "C1 out gnd 1n\n";
    write_text_file((dir / "template.sp").string(), netlist);

    const std::string schema =
        "{\n"
        "  \"circuit_class\": \"RCLP\",\n"
        "  \"symmetry_groups\": {\"res\": [\"R1\"], \"cap\": [\"C1\"]},\n"
        "  \"slots\": [{\"group\": \"res\", \"param\": \"value\"},\n"
        "            {\"group\": \"cap\", \"param\": \"value\"}],\n"
        "  \"globals\": []\n"
        "}\n";
    write_text_file((dir / "schema.json").string(), schema);

    const CounterRng params_rng(seed, rng_stream::kSynthParams);
    const CounterRng coin_rng(seed, rng_stream::kSynthCoin);
    std::ostringstream csv;
    csv.precision(17);
    csv << (bimodal ? "R,C,log10_fc,t\n" : "R,C,log10_fc\n");
    for (int i = 0; i < n; ++i) {
        const double r =
            std::pow(10.0, params_rng.uniform_at(2 * static_cast<std::uint64_t>(i), 2.0, 5.0));
        const double c = std::pow(
            10.0, params_rng.uniform_at(2 * static_cast<std::uint64_t>(i) + 1, -12.0, -6.0));
        const double log_fc = std::log10(rc_cutoff_hz(r, c));
        csv << r << "," << c << "," << log_fc;
        if (bimodal) {
            const double s = coin_rng.uniform_at(static_cast<std::uint64_t>(i)) < 0.5 ? -1.0 : 1.0;
            csv << "," << (log_fc + 0.5 * s);
        }
        csv << "\n";
    }
    write_text_file((dir / "sweep.csv").string(), csv.str());

    CorpusManifest m;
    m.circuit_class = "RCLP";
    m.netlist_template = (dir / "template.sp").string();
    m.schema = (dir / "schema.json").string();
    m.csv = (dir / "sweep.csv").string();
    m.bindings["R"] = {ColumnRole::ComponentParam, "R1", "value", ""};
    m.bindings["C"] = {ColumnRole::ComponentParam, "C1", "value", ""};
    m.bindings["log10_fc"] = {ColumnRole::Target, "", "", "log10_fc"};
    m.target_order = {"log10_fc"};
    if (bimodal) {
        m.bindings["t"] = {ColumnRole::Target, "", "", "t"};
        m.target_order.push_back("t");
    }
    m.split = SplitRatios{0.5, 0.25, 0.25};
    m.seed = seed;
    const std::string manifest_path = (dir / "manifest.json").string();
    save_manifest(m, manifest_path);
    return {manifest_path};
}

}  // namespace pinflow
